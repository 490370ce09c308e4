//! Angular power spectra C_ℓ = G(ℓ)·ℓ^{−α} and the scaling function ρ_α.

use std::fmt;
use std::str::FromStr;

use crate::error::{domain, Error, Result};
use crate::series::{odd_weight_power_tail, Truncated};

/// |log t| with small and large arguments floored at 1: ln(max(t, 1/t, e)).
pub fn abs_log(t: f64) -> f64 {
    t.max(1.0 / t).max(std::f64::consts::E).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhoBranch {
    /// t^{(α−2)/2}, 2 < α < 4.
    Fractal,
    /// t·√|log t|, α = 4.
    Critical,
    /// t, α > 4.
    Linear,
}

/// ρ_α for a fixed α.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFunction {
    alpha: f64,
}

impl ScalingFunction {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 2.0) || !alpha.is_finite() {
            return domain(format!("spectral index must exceed 2, got {alpha}"));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn branch(&self) -> RhoBranch {
        if self.alpha < 4.0 {
            RhoBranch::Fractal
        } else if self.alpha == 4.0 {
            RhoBranch::Critical
        } else {
            RhoBranch::Linear
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) || !t.is_finite() {
            return domain(format!("rho argument must be a finite t >= 0, got {t}"));
        }
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        match self.branch() {
            RhoBranch::Fractal => t.powf(0.5 * (self.alpha - 2.0)),
            RhoBranch::Critical => t * abs_log(t).sqrt(),
            RhoBranch::Linear => t,
        }
    }
}

/// ρ_α(t).
pub fn rho_alpha(alpha: f64, t: f64) -> Result<f64> {
    ScalingFunction::new(alpha)?.eval(t)
}

/// The bounded factor G(ℓ).
#[derive(Debug, Clone, PartialEq)]
pub enum Envelope {
    Constant(f64),
    /// 1 + amplitude·sin(ln ℓ), |amplitude| < 1.
    Oscillating { amplitude: f64 },
    /// G(ℓ) = values[ℓ − 1]; the last entry is repeated beyond the table.
    Table(Vec<f64>),
}

impl Default for Envelope {
    fn default() -> Self {
        Envelope::Constant(1.0)
    }
}

impl Envelope {
    pub fn value(&self, ell: usize) -> f64 {
        match self {
            Envelope::Constant(g) => *g,
            Envelope::Oscillating { amplitude } => 1.0 + amplitude * (ell as f64).ln().sin(),
            Envelope::Table(v) => v[(ell.max(1) - 1).min(v.len() - 1)],
        }
    }

    /// Smallest c₀ ≥ 1 with c₀⁻¹ ≤ G(ℓ) ≤ c₀ for every ℓ ≥ 1.
    pub fn minimal_bound(&self) -> f64 {
        let (lo, hi) = match self {
            Envelope::Constant(g) => (*g, *g),
            Envelope::Oscillating { amplitude } => (1.0 - amplitude.abs(), 1.0 + amplitude.abs()),
            Envelope::Table(v) => v
                .iter()
                .fold((f64::INFINITY, 0.0f64), |(lo, hi), &g| (lo.min(g), hi.max(g))),
        };
        hi.max(1.0 / lo).max(1.0)
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Envelope::Constant(g) => *g > 0.0 && g.is_finite(),
            Envelope::Oscillating { amplitude } => amplitude.abs() < 1.0,
            Envelope::Table(v) => !v.is_empty() && v.iter().all(|g| *g > 0.0 && g.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            domain(format!("envelope {self} is not bounded away from 0 and infinity"))
        }
    }
}

impl fmt::Display for Envelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Envelope::Constant(g) => write!(f, "constant:{g}"),
            Envelope::Oscillating { amplitude } => write!(f, "oscillating:{amplitude}"),
            Envelope::Table(v) => {
                write!(f, "table:")?;
                for (i, g) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{g}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for Envelope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
        let num = |t: &str| -> Result<f64> {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number '{t}' in envelope '{s}'")))
        };
        let env = match kind.trim() {
            "constant" => Envelope::Constant(if arg.is_empty() { 1.0 } else { num(arg)? }),
            "oscillating" => Envelope::Oscillating {
                amplitude: if arg.is_empty() { 0.5 } else { num(arg)? },
            },
            "table" => Envelope::Table(arg.split(',').map(num).collect::<Result<_>>()?),
            other => return Err(Error::Parse(format!("unknown envelope kind '{other}'"))),
        };
        env.validate()?;
        Ok(env)
    }
}

/// C_ℓ = G(ℓ)·ℓ^{−α}·(1 + ℓ(ℓ+1))^k for 1 ≤ ℓ ≤ l_max.
///
/// k = 0 is an ordinary spectrum; k > 0 is the spectrum of the field after
/// k applications of (1 − Δ)^{1/2}, with effective index α − 2k.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    alpha: f64,
    envelope: Envelope,
    c0: f64,
    l_max: usize,
    derivative_order: u32,
}

impl PowerSpectrum {
    pub fn new(alpha: f64, envelope: Envelope, c0: f64, l_max: usize) -> Result<Self> {
        if !(alpha > 2.0) || !alpha.is_finite() {
            return domain(format!("spectral index must exceed 2, got {alpha}"));
        }
        if l_max < 1 {
            return domain("l_max must be at least 1");
        }
        envelope.validate()?;
        if !(c0 >= 1.0) {
            return domain(format!("envelope bound c0 must be >= 1, got {c0}"));
        }
        let need = envelope.minimal_bound();
        if need > c0 * (1.0 + 1e-12) {
            return domain(format!("envelope {envelope} needs c0 >= {need}, got {c0}"));
        }
        Ok(Self {
            alpha,
            envelope,
            c0,
            l_max,
            derivative_order: 0,
        })
    }

    /// G ≡ 1, c₀ = 1.
    pub fn power_law(alpha: f64, l_max: usize) -> Result<Self> {
        Self::new(alpha, Envelope::Constant(1.0), 1.0, l_max)
    }

    /// Uses the smallest admissible c₀ for `envelope`.
    pub fn with_envelope(alpha: f64, envelope: Envelope, l_max: usize) -> Result<Self> {
        envelope.validate()?;
        let c0 = envelope.minimal_bound();
        Self::new(alpha, envelope, c0, l_max)
    }

    /// Base spectral index α (before any derivative order).
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// α − 2k: the decay rate of C_ℓ.
    pub fn effective_alpha(&self) -> f64 {
        self.alpha - 2.0 * self.derivative_order as f64
    }

    pub fn envelope(&self) -> &Envelope {
        &self.envelope
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn derivative_order(&self) -> u32 {
        self.derivative_order
    }

    /// Same spectrum truncated at a different multipole.
    pub fn with_l_max(&self, l_max: usize) -> Result<Self> {
        if l_max < 1 {
            return domain("l_max must be at least 1");
        }
        Ok(Self {
            l_max,
            ..self.clone()
        })
    }

    /// C_ℓ for 1 ≤ ℓ ≤ l_max.
    pub fn value(&self, ell: usize) -> Result<f64> {
        if ell == 0 || ell > self.l_max {
            return Err(Error::Range(format!(
                "multipole {ell} outside 1..={}",
                self.l_max
            )));
        }
        Ok(self.value_unchecked(ell))
    }

    /// C_ℓ without the range check; also defined beyond l_max.
    pub fn value_unchecked(&self, ell: usize) -> f64 {
        let l = ell as f64;
        let base = self.envelope.value(ell) * l.powf(-self.alpha);
        if self.derivative_order == 0 {
            base
        } else {
            base * (1.0 + l * (l + 1.0)).powi(self.derivative_order as i32)
        }
    }

    /// [C_0 = 0, C_1, …, C_{l_max}].
    pub fn values(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.l_max + 1);
        v.push(0.0);
        v.extend((1..=self.l_max).map(|l| self.value_unchecked(l)));
        v
    }

    /// A constant K with C_ℓ ≤ K·ℓ^{−(α−2k)} for all ℓ ≥ 1.
    pub fn upper_constant(&self) -> f64 {
        // 1 + ℓ(ℓ+1) ≤ 3ℓ²
        self.c0 * 3f64.powi(self.derivative_order as i32)
    }

    /// Bound on Σ_{ℓ>L}(2ℓ+1)C_ℓ for truncation at L; infinite when the
    /// series diverges.
    pub fn odd_weight_tail(&self, l: usize) -> f64 {
        let p = self.effective_alpha();
        if p <= 2.0 {
            return f64::INFINITY;
        }
        self.upper_constant() * odd_weight_power_tail(l, p)
    }

    /// Spectrum of T^{(k)}: C̃_ℓ = C_ℓ·(1 + ℓ(ℓ+1))^k.
    pub fn derived(&self, k: u32) -> Result<Self> {
        let out = self.derived_unchecked(k);
        if !(out.effective_alpha() > 2.0) {
            return domain(format!(
                "derivative order {} needs alpha > {}, got {}",
                out.derivative_order,
                2 + 2 * out.derivative_order,
                self.alpha
            ));
        }
        Ok(out)
    }

    /// As [`derived`](Self::derived) but allows a divergent infinite series.
    pub(crate) fn derived_unchecked(&self, k: u32) -> Self {
        Self {
            derivative_order: self.derivative_order + k,
            ..self.clone()
        }
    }

    /// max over 1 ≤ ℓ ≤ l_max of max(v_ℓ, 1/v_ℓ) with v_ℓ = C_ℓ·ℓ^{α−2k}.
    pub fn effective_envelope_bound(&self) -> f64 {
        let a = self.effective_alpha();
        (1..=self.l_max)
            .map(|l| {
                let v = self.value_unchecked(l) * (l as f64).powf(a);
                v.max(1.0 / v)
            })
            .fold(1.0, f64::max)
    }

    /// Σ_{ℓ=1}^{l_max}(2ℓ+1)/(4π)·C_ℓ = E T(x)².
    pub fn total_variance(&self) -> Truncated {
        let mut sum = 0.0;
        for l in (1..=self.l_max).rev() {
            sum += (2 * l + 1) as f64 * self.value_unchecked(l);
        }
        let fpi = 4.0 * std::f64::consts::PI;
        Truncated::new(sum / fpi, self.odd_weight_tail(self.l_max) / fpi, self.l_max)
    }

    /// Flat key=value text.
    pub fn to_config_string(&self) -> String {
        format!(
            "alpha={}\nenvelope={}\nc0={}\nl_max={}\n",
            self.alpha, self.envelope, self.c0, self.l_max
        )
    }

    /// Parses the format written by [`to_config_string`](Self::to_config_string).
    /// Blank lines and lines starting with `#` are ignored; `envelope` and
    /// `c0` are optional.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut alpha = None;
        let mut envelope = Envelope::default();
        let mut c0 = None;
        let mut l_max = None;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got '{line}'")))?;
            let (k, v) = (k.trim(), v.trim());
            let num = || {
                v.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad value for {k}: '{v}'")))
            };
            match k {
                "alpha" => alpha = Some(num()?),
                "envelope" => envelope = v.parse()?,
                "c0" => c0 = Some(num()?),
                "l_max" => {
                    l_max = Some(
                        v.parse::<usize>()
                            .map_err(|_| Error::Parse(format!("bad value for l_max: '{v}'")))?,
                    )
                }
                other => return Err(Error::Parse(format!("unknown spectrum key '{other}'"))),
            }
        }
        let alpha = alpha.ok_or_else(|| Error::Parse("missing key 'alpha'".into()))?;
        let l_max = l_max.ok_or_else(|| Error::Parse("missing key 'l_max'".into()))?;
        let c0 = c0.unwrap_or_else(|| envelope.minimal_bound());
        Self::new(alpha, envelope, c0, l_max)
    }
}
