"""Smoke test for the sphfield_py extension module.

Build with `cargo build -p sphfield-py`, copy target/debug/libsphfield_py.so
to a directory as sphfield_py.so and put that directory on PYTHONPATH.
"""

import math

import sphfield_py as sf


def close(a, b, tol):
    assert abs(a - b) <= tol * max(1.0, abs(b)), (a, b)


def main():
    close(sf.riemann_zeta(2.0), math.pi ** 2 / 6, 1e-12)
    close(sf.legendre_p(2, 0.3), 0.5 * (3 * 0.09 - 1), 1e-14)
    z = sf.polylog(2.0, 0.7)
    close(z.real, math.pi ** 2 / 6 - math.pi * 0.7 / 2 + 0.49 / 4, 1e-10)

    spec = sf.PowerSpectrum(3.0, 256)
    assert spec.l_max == 256
    c = spec.values()
    assert c[0] == 0.0
    close(c[2], 2.0 ** -3, 1e-14)

    fine = sf.PowerSpectrum(3.0, 4096)
    var, tail = sf.variogram(fine, 0.01)
    assert var > 0 and tail >= 0
    var2, _ = sf.variogram(fine, 0.005)
    r = (var / var2) / (sf.rho_alpha(3.0, 0.01) / sf.rho_alpha(3.0, 0.005)) ** 2
    assert 0.8 < r < 1.25, r

    f = sf.Field.sample(spec, seed=11, replicate=0)
    pts = [(0.4, 1.0), (1.2, -2.0), (2.9, 0.3)]
    a = f.evaluate(pts)
    b = sf.Field.sample(spec, seed=11, replicate=0).evaluate(pts)
    assert a == b and len(a) == 3
    assert f.coefficient(3, -2) == f.coefficient(3, 2).conjugate() * (-1) ** 2

    x0 = (0.0, 0.0)
    ring = [(0.05, 2 * math.pi * j / 4) for j in range(4)]
    v1 = sf.conditional_variance(spec, x0, ring)
    v2 = sf.quadratic_form_min(spec, x0, ring)
    close(v1, v2, 1e-4)

    d = sf.bump_delta(0.2, [0.0, 0.1, 0.5], l_max=256)
    assert d[0] > d[1] and abs(d[2]) < 1e-2 * d[0]

    scan = sf.slnd_scan(3.0, [0.1, 0.05], n=4, replicates=5, seed=2)
    assert len(scan["var"]) == 10 and min(scan["min_ratio"]) > 0

    mod = sf.modulus_experiment(sf.PowerSpectrum(3.0, 256), [2, 3], replicates=3, pairs_per_scale=20, seed=5)
    assert mod["resolved"] == [True, True] and mod["estimate"] > 0

    try:
        sf.PowerSpectrum(1.5, 64)
    except ValueError:
        pass
    else:
        raise AssertionError("alpha 1.5 accepted")

    print("sphfield_py", sf.__version__, "smoke test ok")


if __name__ == "__main__":
    main()
