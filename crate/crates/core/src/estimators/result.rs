/// Two-sided 99% normal quantile.
pub const Z_99: f64 = 2.576;

/// Below this many expected successes the normal approximation is flagged.
pub const MIN_SUCCESSES: f64 = 20.0;

/// A Monte Carlo frequency with its 99% normal-approximation half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateResult {
    pub estimate: f64,
    pub trials: u64,
    pub ci_half_width: f64,
    pub raw_successes: u64,
    /// Trials whose run hit the step cap before the quantity was decided.
    pub incomplete: u64,
}

impl EstimateResult {
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        assert!(trials > 0, "an estimate needs at least one trial");
        assert!(successes <= trials);
        let p = successes as f64 / trials as f64;
        EstimateResult {
            estimate: p,
            trials,
            ci_half_width: Z_99 * (p * (1.0 - p) / trials as f64).sqrt(),
            raw_successes: successes,
            incomplete: 0,
        }
    }

    pub fn with_incomplete(mut self, incomplete: u64) -> Self {
        self.incomplete = incomplete;
        self
    }

    /// `trials * estimate < 20`: too few successes to trust the interval.
    pub fn low_count(&self) -> bool {
        (self.raw_successes as f64) < MIN_SUCCESSES
    }

    /// `|estimate - value| <= k * half_width`.
    pub fn within(&self, value: f64, k: f64) -> bool {
        (self.estimate - value).abs() <= k * self.ci_half_width
    }
}

/// Linear-interpolation quantile of sorted data, `q` in `[0, 1]`.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

pub fn median(sorted: &[f64]) -> f64 {
    quantile(sorted, 0.5)
}
