/// A truncated series value together with a bound on the omitted tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncated {
    pub value: f64,
    /// Upper bound on |full series − value|.
    pub tail_bound: f64,
    /// Number of terms summed.
    pub terms: usize,
}

impl Truncated {
    pub fn new(value: f64, tail_bound: f64, terms: usize) -> Self {
        Self {
            value,
            tail_bound,
            terms,
        }
    }

    /// Interval guaranteed to contain the untruncated value.
    pub fn bracket(&self) -> (f64, f64) {
        (self.value - self.tail_bound, self.value + self.tail_bound)
    }
}

/// Bound on Σ_{ℓ>L} (2ℓ+1)·ℓ^(−p) for p > 2, by comparison with the integral
/// of the decreasing function (2x+1)·x^(−p) over [L, ∞).
pub(crate) fn odd_weight_power_tail(l_max: usize, p: f64) -> f64 {
    debug_assert!(p > 2.0);
    let l = l_max.max(1) as f64;
    2.0 * l.powf(2.0 - p) / (p - 2.0) + l.powf(1.0 - p) / (p - 1.0)
}

/// Bound on Σ_{ℓ>L} ℓ^(−s) for s > 1.
pub(crate) fn power_tail(l_max: usize, s: f64) -> f64 {
    debug_assert!(s > 1.0);
    let l = l_max.max(1) as f64;
    l.powf(1.0 - s) / (s - 1.0)
}
