fn main() {
    std::process::exit(sphfield_cli::run(std::env::args_os()));
}
