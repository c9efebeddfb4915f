//! Closed-form privacy and spreading-time guarantees, and the mean
//! dynamics of the synchronous engine.
//!
//! `delta` is the additive slack of (epsilon, delta) source
//! indistinguishability: `p_i(S) <= e^epsilon p_j(S) + delta` for every set
//! of observations `S` and sources `i`, `j`. `c` is the prediction
//! uncertainty constant; under a uniform prior no attack succeeds with
//! probability above `1 / (1 + c)`.
//!
//! All logarithms are natural.

use std::fmt;

use thiserror::Error;

/// Which guarantee produced a [`PrivacyReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `s = 1`, standard push.
    Push,
    /// `s = 0`, one send per reception.
    MuteAfterSend,
    /// `0 < s < 1`.
    Parameterized,
    /// An adversary that also sees global send indices.
    StrongAdversary,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Push => "push",
            Regime::MuteAfterSend => "mute_after_send",
            Regime::Parameterized => "parameterized",
            Regime::StrongAdversary => "strong_adversary",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyReport {
    pub epsilon: f64,
    pub delta: f64,
    pub c: f64,
    pub regime: Regime,
}

fn check_counts(f: usize, n: usize) {
    assert!(
        n >= 2 && f <= n - 2,
        "need 0 <= f <= n - 2 (f = {f}, n = {n})"
    );
}

fn check_muting(s: f64) {
    assert!(
        (0.0..=1.0).contains(&s),
        "muting parameter {s} outside [0, 1]"
    );
}

/// Smallest delta any gossip protocol can offer at `epsilon`, attained by
/// `s = 0`: `(f/n) (1 - (e^epsilon - 1)/f)`, clamped at 0.
pub fn optimal_delta(epsilon: f64, f: usize, n: usize) -> f64 {
    check_counts(f, n);
    assert!(epsilon >= 0.0, "epsilon must be non-negative");
    if f == 0 {
        return 0.0;
    }
    let f = f as f64;
    let d = f / n as f64 * (1.0 - epsilon.exp_m1() / f);
    d.max(0.0)
}

/// Best prediction uncertainty of any gossip protocol: `n/(f+1) - 1`.
pub fn optimal_c(f: usize, n: usize) -> f64 {
    check_counts(f, n);
    n as f64 / (f as f64 + 1.0) - 1.0
}

/// Exact (0, delta) guarantee of parameterized gossip:
/// `1 - (1-s) sum_k s^k (1-f/n)^(k+1)` summed in closed form.
/// Equals 1 at `s = 1`.
pub fn param_delta_exact(s: f64, f: usize, n: usize) -> f64 {
    check_counts(f, n);
    check_muting(s);
    if s >= 1.0 {
        return 1.0;
    }
    let keep = 1.0 - f as f64 / n as f64;
    1.0 - (1.0 - s) * keep / (1.0 - s * keep)
}

/// Truncated upper bound `1 - (1 - s^r)(1 - f/n)^r`; `r = 1` gives
/// `s + (1 - s) f/n`.
pub fn param_delta_bound(s: f64, f: usize, n: usize, r: u32) -> f64 {
    check_counts(f, n);
    check_muting(s);
    assert!(r >= 1, "r must be positive");
    let keep = 1.0 - f as f64 / n as f64;
    let r = r as i32;
    1.0 - (1.0 - s.powi(r)) * keep.powi(r)
}

/// Prediction uncertainty of parameterized gossip: `(1 - (f+1)/n)(1 - s)`.
pub fn param_c(s: f64, f: usize, n: usize) -> f64 {
    check_counts(f, n);
    check_muting(s);
    (1.0 - (f as f64 + 1.0) / n as f64) * (1.0 - s)
}

/// Limits against an adversary who sees global send indices:
/// `delta = f/n`, `c = 0`.
pub fn strong_adversary_bounds(f: usize, n: usize) -> PrivacyReport {
    check_counts(f, n);
    PrivacyReport {
        epsilon: 0.0,
        delta: f as f64 / n as f64,
        c: 0.0,
        regime: Regime::StrongAdversary,
    }
}

/// Probability that the source reaches a curious node before it first
/// mutes: `sum_k (1-s) s^k (1 - (1-f/n)^(k+1))`. Limits are used at the
/// ends: `f/n` at `s = 0`, `1` at `s = 1`.
#[allow(non_snake_case)]
pub fn p0_F(s: f64, f: usize, n: usize) -> f64 {
    check_counts(f, n);
    let q = f as f64 / n as f64;
    if s <= 0.0 {
        q
    } else if s >= 1.0 {
        1.0
    } else {
        1.0 - (1.0 - s) * (1.0 - q) / (1.0 - s * (1.0 - q))
    }
}

/// Round budget `6 C ln(n) / s` within which the synchronous engine sends
/// at least `C n ln n` messages with high probability.
#[allow(non_snake_case)]
pub fn round_bound(n: usize, s: f64, C: f64) -> f64 {
    assert!(s > 0.0 && s <= 1.0, "round bound needs 0 < s <= 1");
    assert!(C >= 1.0, "C must be at least 1");
    6.0 * C * (n as f64).ln() / s
}

/// Spreading-time column of the summary table: `6 ln(n)/s` rounds for
/// `s > 0`, `n ln n` for `s = 0`.
pub fn spreading_bound(n: usize, s: f64) -> f64 {
    if s <= 0.0 {
        let n = n as f64;
        n * n.ln()
    } else {
        round_bound(n, s, 1.0)
    }
}

/// One row of the privacy/speed summary table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffRow {
    pub regime: Regime,
    pub s: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub c: f64,
    pub spreading_bound: f64,
}

/// Rows for `s = 1`, `s = 0` and every `0 < s < 1` in `generic_s`, at
/// `epsilon = 0`. The generic rows use the `r = 1` bound.
pub fn tradeoff_table(n: usize, f: usize, generic_s: &[f64]) -> Vec<TradeoffRow> {
    check_counts(f, n);
    let mut rows = vec![
        TradeoffRow {
            regime: Regime::Push,
            s: 1.0,
            epsilon: 0.0,
            delta: param_delta_exact(1.0, f, n),
            c: param_c(1.0, f, n),
            spreading_bound: spreading_bound(n, 1.0),
        },
        TradeoffRow {
            regime: Regime::MuteAfterSend,
            s: 0.0,
            epsilon: 0.0,
            delta: optimal_delta(0.0, f, n),
            c: optimal_c(f, n),
            spreading_bound: spreading_bound(n, 0.0),
        },
    ];
    for &s in generic_s.iter().filter(|&&s| s > 0.0 && s < 1.0) {
        rows.push(TradeoffRow {
            regime: Regime::Parameterized,
            s,
            epsilon: 0.0,
            delta: param_delta_bound(s, f, n, 1),
            c: param_c(s, f, n),
            spreading_bound: spreading_bound(n, s),
        });
    }
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum DynamicsError {
    #[error("no active-fraction plateau in (0, 1] for s = {s}, n = {n}")]
    NoPlateau { s: f64, n: usize },
}

/// Expected evolution of the active fraction in the synchronous engine:
/// `f(a) = 1 - (1 - 1/n)^(a n) (1 - a s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanDynamics {
    pub s: f64,
    pub n: usize,
}

impl MeanDynamics {
    pub fn new(s: f64, n: usize) -> Self {
        check_muting(s);
        assert!(n >= 2, "need at least 2 nodes");
        MeanDynamics { s, n }
    }

    /// `(1 - 1/n)^(a n)`: probability a node receives none of `a n` messages.
    pub fn p_untouched(&self, alpha: f64) -> f64 {
        self.log_untouched(alpha).exp()
    }

    fn log_untouched(&self, alpha: f64) -> f64 {
        let n = self.n as f64;
        alpha * n * (-1.0 / n).ln_1p()
    }

    /// Below this active fraction the growth factor is at least `1 + s/2`.
    pub fn alpha_s(&self) -> f64 {
        self.s / (1.0 + 2.0 * self.s)
    }
}

/// `f(alpha)`: expected active fraction next round when a fraction `alpha`
/// is active now.
pub fn mean_step(alpha: f64, dynamics: &MeanDynamics) -> f64 {
    assert!((0.0..=1.0).contains(&alpha), "alpha {alpha} outside [0, 1]");
    let l = dynamics.log_untouched(alpha);
    // 1 - e^l (1 - alpha s), written to keep precision for small alpha.
    -l.exp_m1() + l.exp() * alpha * dynamics.s
}

/// Absolute tolerance of [`mean_fixed_point`].
pub const FIXED_POINT_TOL: f64 = 1e-10;

/// Root of `f(alpha) = alpha` on `(0, 1]`, by bisection.
pub fn mean_fixed_point(dynamics: &MeanDynamics) -> Result<f64, DynamicsError> {
    let g = |a: f64| mean_step(a, dynamics) - a;
    let no_plateau = DynamicsError::NoPlateau {
        s: dynamics.s,
        n: dynamics.n,
    };
    if dynamics.s <= 0.0 {
        return Err(no_plateau);
    }
    if g(1.0).abs() <= FIXED_POINT_TOL {
        // Only s = 1 gets here; f(a) > a on (0, 1) in that case.
        return Ok(1.0);
    }
    // g > 0 just above 0 iff the growth factor f'(0) exceeds 1.
    let mut lo = 1e-9;
    if g(lo) <= 0.0 {
        return Err(no_plateau);
    }
    let mut hi = 1.0;
    if g(hi) > 0.0 {
        return Err(no_plateau);
    }
    while hi - lo > FIXED_POINT_TOL {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXACT: f64 = 1e-12;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn optimal_delta_values() {
        assert!(close(optimal_delta(0.0, 100, 1000), 0.1, EXACT));
        assert!(close(optimal_delta(0.0, 1, 4), 0.25, EXACT));
        for &(f, n) in &[(1, 4), (100, 1000), (7, 70), (500, 502)] {
            let eps = (f as f64 + 1.0).ln();
            assert!(optimal_delta(eps, f, n) <= EXACT);
            assert_eq!(optimal_delta(eps + 1.0, f, n), 0.0);
        }
        assert_eq!(optimal_delta(0.3, 0, 10), 0.0);
        assert_eq!(optimal_delta(0.0, 0, 10), 0.0);
    }

    #[test]
    fn optimal_delta_non_increasing_in_epsilon() {
        let mut prev = f64::INFINITY;
        for i in 0..200 {
            let d = optimal_delta(i as f64 * 0.05, 100, 1000);
            assert!(d <= prev);
            prev = d;
        }
    }

    #[test]
    fn optimal_c_values() {
        assert!(close(optimal_c(100, 1000), 1000.0 / 101.0 - 1.0, EXACT));
        assert!(close(optimal_c(100, 1000), 8.900_990_099_009_9, 1e-12));
        assert!(close(optimal_c(0, 37), 36.0, EXACT));
        assert!(close(1.0 / (1.0 + optimal_c(100, 1000)), 0.101, EXACT));
    }

    #[test]
    fn param_delta_exact_values() {
        assert!(close(
            param_delta_exact(0.0, 100, 1000),
            optimal_delta(0.0, 100, 1000),
            EXACT
        ));
        assert!(close(
            param_delta_exact(0.5, 100, 1000),
            1.0 - 0.45 / 0.55,
            EXACT
        ));
        assert!(close(
            param_delta_exact(0.5, 100, 1000),
            0.181_818_181_818_181_8,
            EXACT
        ));
        assert_eq!(param_delta_exact(1.0, 100, 1000), 1.0);
        assert!(close(param_delta_exact(1.0 - 1e-12, 100, 1000), 1.0, 1e-9));
    }

    #[test]
    fn closed_form_matches_partial_sums() {
        for &s in &[0.0f64, 0.1, 0.33, 0.5, 0.9] {
            for &(f, n) in &[(100, 1000), (1, 4), (30, 64)] {
                let keep = 1.0 - f as f64 / n as f64;
                let partial: f64 = (0..10_000)
                    .map(|k| (1.0 - s) * s.powi(k) * (1.0 - keep.powi(k + 1)))
                    .sum();
                assert!(close(partial, p0_F(s, f, n), EXACT), "s={s}");
                assert!(close(partial, param_delta_exact(s, f, n), EXACT));
            }
        }
    }

    #[test]
    fn p0_f_limits() {
        assert!(close(p0_F(0.0, 100, 1000), 0.1, EXACT));
        assert!(close(p0_F(1e-15, 100, 1000), 0.1, 1e-12));
        assert_eq!(p0_F(1.0, 100, 1000), 1.0);
    }

    #[test]
    fn truncated_bound() {
        for &s in &[0.0, 0.2, 0.7, 1.0] {
            let q = 0.1;
            assert!(close(
                param_delta_bound(s, 100, 1000, 1),
                s + (1.0 - s) * q,
                EXACT
            ));
        }
        let q = 0.1;
        let at_sweet_spot = param_delta_bound(q, 100, 1000, 1);
        assert!(at_sweet_spot / optimal_delta(0.0, 100, 1000) <= 2.0);
    }

    #[test]
    fn exact_delta_monotone_in_s_and_f() {
        let n = 1000;
        for fi in 0..20 {
            let f = fi * 40;
            let mut prev = -1.0;
            for si in 0..=20 {
                let d = param_delta_exact(si as f64 / 20.0, f, n);
                assert!(d >= prev - EXACT);
                prev = d;
            }
        }
        for si in 0..20 {
            let s = si as f64 / 20.0;
            let mut prev = -1.0;
            for f in (0..=998).step_by(37) {
                let d = param_delta_exact(s, f, n);
                assert!(d >= prev - EXACT);
                prev = d;
            }
        }
    }

    #[test]
    fn param_c_values() {
        assert_eq!(param_c(1.0, 100, 1000), 0.0);
        assert!(close(param_c(0.0, 100, 1000), 0.899, EXACT));
        assert!(close(param_c(0.5, 100, 1000), 0.4495, EXACT));
    }

    #[test]
    fn strong_adversary() {
        let r = strong_adversary_bounds(100, 1000);
        assert!(close(r.delta, 0.1, EXACT));
        assert_eq!(r.c, 0.0);
        assert_eq!(r.regime, Regime::StrongAdversary);
        assert_eq!(strong_adversary_bounds(0, 10).delta, 0.0);
    }

    #[test]
    fn round_bound_scaling() {
        let n = 1 << 16;
        assert!(close(
            round_bound(n, 1.0, 1.0),
            6.0 * (n as f64).ln(),
            EXACT
        ));
        assert!(close(round_bound(n, 1.0, 1.0), 66.542_129_333_754_6, 1e-9));
        assert!(close(
            round_bound(n, 0.3, 2.0),
            2.0 * round_bound(n, 0.3, 1.0),
            EXACT
        ));
        assert!(close(
            round_bound(n, 0.25, 1.0),
            2.0 * round_bound(n, 0.5, 1.0),
            EXACT
        ));
    }

    #[test]
    fn table_rows() {
        let rows = tradeoff_table(1000, 100, &[0.1]);
        assert_eq!(rows.len(), 3);
        assert_eq!((rows[0].s, rows[0].delta), (1.0, 1.0));
        assert!(close(rows[1].delta, 0.1, EXACT));
        assert!(close(rows[2].delta, 0.1 + 0.9 * 0.1, EXACT));
        assert_eq!(rows[2].regime, Regime::Parameterized);
    }

    #[test]
    fn mean_step_basics() {
        let d = MeanDynamics::new(0.4, 1 << 16);
        assert_eq!(mean_step(0.0, &d), 0.0);
        let full = MeanDynamics::new(1.0, 1 << 20);
        assert!(close(mean_step(1.0, &full), 1.0, EXACT));
    }

    #[test]
    fn growth_below_alpha_s() {
        for &n in &[256usize, 1 << 12, 1 << 16] {
            for si in 1..=20 {
                let d = MeanDynamics::new(si as f64 / 20.0, n);
                for ai in 1..=100 {
                    let a = d.alpha_s() * ai as f64 / 100.0;
                    assert!(mean_step(a, &d) >= (1.0 + d.s / 2.0) * a, "s={} a={a}", d.s);
                }
            }
        }
    }

    #[test]
    fn fixed_point_is_a_root() {
        let d = MeanDynamics::new(1.0, 1 << 16);
        let a = mean_fixed_point(&d).unwrap();
        assert!(close(mean_step(a, &d), a, 1e-9));
        for &s in &[0.05, 0.1, 0.33, 0.5, 0.9] {
            let d = MeanDynamics::new(s, 1 << 16);
            let a = mean_fixed_point(&d).unwrap();
            assert!(a > 0.0 && a < 1.0);
            assert!(close(mean_step(a, &d), a, 1e-9));
        }
        assert!(mean_fixed_point(&MeanDynamics::new(0.0, 1024)).is_err());
    }

    #[test]
    fn fixed_point_increases_with_s() {
        let mut prev = 0.0;
        for &s in &[0.05, 0.1, 0.33, 0.5, 1.0] {
            let a = mean_fixed_point(&MeanDynamics::new(s, 1 << 16)).unwrap();
            assert!(a > prev);
            prev = a;
        }
    }

    #[test]
    fn fixed_point_unique_on_grid() {
        for &n in &[256usize, 1 << 12, 1 << 16] {
            for &s in &[0.02, 0.1, 0.33, 0.5, 0.8, 1.0] {
                let d = MeanDynamics::new(s, n);
                let root = mean_fixed_point(&d).unwrap();
                // g > 0 strictly left of the root, g < 0 strictly right of it.
                for i in 1..10_000 {
                    let a = i as f64 / 10_000.0;
                    let g = mean_step(a, &d) - a;
                    if a < root - 1e-6 {
                        assert!(g > 0.0, "n={n} s={s} a={a}");
                    } else if a > root + 1e-6 {
                        assert!(g < 0.0, "n={n} s={s} a={a}");
                    }
                }
            }
        }
    }
}
