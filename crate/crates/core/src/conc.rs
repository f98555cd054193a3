//! Time-uniform concentration bounds.
//!
//! Everything here is anytime-valid: the radii hold simultaneously over
//! all sample sizes, either through the Laplace method of mixtures
//! (`beta_laplace`) or through geometric peeling (`ell`). The Bernoulli
//! machinery combines a peeled Bernstein clause with an asymmetric
//! sub-Gaussian envelope and is inverted numerically into `[lo, hi]`
//! intervals on each transition probability.

use crate::{c, Scalar};

/// Number of bisection steps used when inverting the feasibility
/// predicate into interval endpoints (absolute error < 1e-15 on [0,1]).
const BISECT_ITERS: u32 = 60;

/// Peeling parameters for the Bernstein-type log factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeelingConfig<F> {
    /// Peeling base; any value above 1 is valid.
    pub eta: F,
}

impl<F: Scalar> Default for PeelingConfig<F> {
    fn default() -> Self {
        Self { eta: c(1.12) }
    }
}

impl<F: Scalar> PeelingConfig<F> {
    pub fn new(eta: F) -> Self {
        assert!(eta > F::one(), "peeling base must exceed 1");
        Self { eta }
    }
}

/// Closed interval of plausible values for one probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfInterval<F> {
    pub lo: F,
    pub hi: F,
}

impl<F: Scalar> ConfInterval<F> {
    pub fn new(lo: F, hi: F) -> Self {
        debug_assert!(F::zero() <= lo && lo <= hi && hi <= F::one());
        Self { lo, hi }
    }

    pub fn contains(&self, q: F) -> bool {
        self.lo <= q && q <= self.hi
    }

    pub fn width(&self) -> F {
        self.hi - self.lo
    }
}

/// Peeling log factor `ell_n(delta) = eta log(log(n) log(eta n) / (log^2(eta) delta))`.
///
/// The `log(n)` factor is clamped below by 1 so that the argument stays
/// positive for n = 1, 2; this only loosens the bound for tiny n.
pub fn ell<F: Scalar>(n: u64, delta: F, cfg: &PeelingConfig<F>) -> F {
    assert!(n >= 1, "ell requires n >= 1");
    assert!(
        delta > F::zero() && delta < F::one(),
        "ell requires delta in (0,1)"
    );
    let eta = cfg.eta;
    let nf = c::<F>(n as f64);
    let log_n = nf.ln().max(F::one());
    let log_eta = eta.ln();
    eta * (log_n * (eta * nf).ln() / (log_eta * log_eta * delta)).ln()
}

/// Laplace (method-of-mixtures) sub-Gaussian radius
/// `beta_n(delta) = sqrt(2 (1 + 1/n) log(sqrt(n+1)/delta) / n)`.
pub fn beta_laplace<F: Scalar>(n: u64, delta: F) -> F {
    assert!(n >= 1, "beta_laplace requires n >= 1");
    assert!(
        delta > F::zero() && delta <= F::one(),
        "beta_laplace requires delta in (0,1]"
    );
    let nf = c::<F>(n as f64);
    let two = c::<F>(2.0);
    (two * (F::one() + F::one() / nf) * ((nf + F::one()).sqrt() / delta).ln() / nf).sqrt()
}

/// Bernoulli sub-Gaussian envelope `g(p) = (1/2 - p) / log(1/p - 1)`,
/// extended by continuity at p = 0, 1/2, 1.
pub fn g_env<F: Scalar>(p: F) -> F {
    assert!(p >= F::zero() && p <= F::one());
    let half = c::<F>(0.5);
    if (p - half).abs() < c(1e-9) {
        return c(0.25);
    }
    if p < c(1e-12) || p > F::one() - c::<F>(1e-12) {
        return F::zero();
    }
    (half - p) / (F::one() / p - F::one()).ln()
}

/// Refined right-tail envelope: `g(p)` below 1/2, `p(1-p)` above.
pub fn g_under<F: Scalar>(p: F) -> F {
    assert!(p >= F::zero() && p <= F::one());
    if p < c(0.5) {
        g_env(p)
    } else {
        p * (F::one() - p)
    }
}

/// Anytime radius on an empirical mean of `[0,1]` rewards: the larger of
/// the Laplace sub-Gaussian radius and the empirical-Bernstein radius.
pub fn reward_radius<F: Scalar>(n: u64, var_hat: F, delta_eff: F, cfg: &PeelingConfig<F>) -> F {
    assert!(n >= 1);
    assert!(var_hat >= F::zero(), "variance must be nonnegative");
    let l = ell(n, delta_eff, cfg);
    let nf = c::<F>(n as f64);
    let laplace = beta_laplace(n, delta_eff) / c(2.0);
    let bernstein = (c::<F>(2.0) * var_hat * l / nf).sqrt() + c::<F>(7.0) * l / (c::<F>(3.0) * nf);
    laplace.max(bernstein)
}

/// Which clauses define the feasible set being inverted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ClauseSet {
    /// Peeled Bernstein plus the asymmetric sub-Gaussian envelope.
    Full,
    /// Peeled Bernstein only.
    BernsteinOnly,
}

fn feasible<F: Scalar>(
    q: F,
    p_hat: F,
    n: u64,
    l: F,
    beta: F,
    clauses: ClauseSet,
) -> bool {
    let nf = c::<F>(n as f64);
    let gap = p_hat - q;
    let bernstein = gap.abs()
        <= (c::<F>(2.0) * q * (F::one() - q) * l / nf).sqrt() + l / (c::<F>(3.0) * nf);
    if !bernstein {
        return false;
    }
    match clauses {
        ClauseSet::BernsteinOnly => true,
        ClauseSet::Full => {
            let z = gap / beta;
            -g_under(q).sqrt() <= z && z <= g_env(q).sqrt()
        }
    }
}

/// True iff `q` satisfies both anytime Bernoulli clauses at (`p_hat`, n).
///
/// This is the raw feasibility predicate behind [`bernoulli_interval`];
/// coverage checks can evaluate it directly at the true parameter
/// without paying for the interval inversion.
pub fn bernoulli_feasible<F: Scalar>(q: F, p_hat: F, n: u64, delta_eff: F, cfg: &PeelingConfig<F>) -> bool {
    let l = ell(n, delta_eff, cfg);
    let beta = beta_laplace(n, delta_eff);
    feasible(q, p_hat, n, l, beta, ClauseSet::Full)
}

fn invert<F: Scalar>(p_hat: F, n: u64, delta_eff: F, cfg: &PeelingConfig<F>, clauses: ClauseSet) -> ConfInterval<F> {
    assert!(
        p_hat >= F::zero() && p_hat <= F::one(),
        "p_hat must lie in [0,1]"
    );
    assert!(n >= 1);
    let l = ell(n, delta_eff, cfg);
    let beta = beta_laplace(n, delta_eff);
    let feas = |q: F| feasible(q, p_hat, n, l, beta, clauses);
    debug_assert!(feas(p_hat), "feasible set must contain the empirical mean");

    // The feasible set of each clause is an interval containing p_hat, so
    // a bisection between an infeasible outer point and p_hat finds each
    // endpoint of the intersection.
    let lo = if feas(F::zero()) {
        F::zero()
    } else {
        let (mut bad, mut good) = (F::zero(), p_hat);
        for _ in 0..BISECT_ITERS {
            let mid = (bad + good) / c(2.0);
            if feas(mid) {
                good = mid;
            } else {
                bad = mid;
            }
        }
        good
    };
    let hi = if feas(F::one()) {
        F::one()
    } else {
        let (mut good, mut bad) = (p_hat, F::one());
        for _ in 0..BISECT_ITERS {
            let mid = (good + bad) / c(2.0);
            if feas(mid) {
                good = mid;
            } else {
                bad = mid;
            }
        }
        good
    };
    ConfInterval::new(lo, hi)
}

fn apply_atypical<F: Scalar>(mut iv: ConfInterval<F>, p_hat: F, n: u64, take_max: bool) -> ConfInterval<F> {
    // An all-ones observation run is an atypical sequence: the generic
    // lower bounds are conservative there and get replaced by (1/2)^n.
    if p_hat == F::one() && n > 1 {
        let floor = c::<F>(0.5).powi(n as i32);
        iv.lo = if take_max { iv.lo.max(floor) } else { floor };
    }
    iv
}

/// Interval hull of the plausible values for one transition probability,
/// intersecting the peeled Bernstein clause with the asymmetric
/// sub-Gaussian envelope clause.
pub fn bernoulli_interval<F: Scalar>(p_hat: F, n: u64, delta_eff: F, cfg: &PeelingConfig<F>) -> ConfInterval<F> {
    bernoulli_interval_opts(p_hat, n, delta_eff, cfg, false)
}

/// As [`bernoulli_interval`], with a switch selecting how the atypical
/// all-ones override combines with the inverted lower bound: `false`
/// replaces it by `(1/2)^n` literally, `true` keeps the tighter of the two.
pub fn bernoulli_interval_opts<F: Scalar>(
    p_hat: F,
    n: u64,
    delta_eff: F,
    cfg: &PeelingConfig<F>,
    atypical_max: bool,
) -> ConfInterval<F> {
    let iv = invert(p_hat, n, delta_eff, cfg, ClauseSet::Full);
    apply_atypical(iv, p_hat, n, atypical_max)
}

/// Bernstein-only variant of [`bernoulli_interval`] (no sub-Gaussian
/// clause); used by the ablation agent.
pub fn bernstein_interval<F: Scalar>(p_hat: F, n: u64, delta_eff: F, cfg: &PeelingConfig<F>) -> ConfInterval<F> {
    let iv = invert(p_hat, n, delta_eff, cfg, ClauseSet::BernsteinOnly);
    apply_atypical(iv, p_hat, n, false)
}

/// Upper confidence envelope of the peeled Bernstein bound.
pub fn upper_bernstein_peeling<F: Scalar>(p: F, n: u64, delta: F, cfg: &PeelingConfig<F>) -> F {
    let l = ell(n, delta, cfg);
    let nf = c::<F>(n as f64);
    p + (c::<F>(2.0) * p * (F::one() - p) * l / nf).sqrt() + l / (c::<F>(3.0) * nf)
}

/// Upper confidence envelope of the doubled-log Bernstein bound used for
/// comparison against the peeled variant.
pub fn upper_bernstein_doubling<F: Scalar>(p: F, n: u64, delta: F) -> F {
    let nf = c::<F>(n as f64);
    let ll = c::<F>(2.0) * nf.max(c(std::f64::consts::E)).ln().ln() + (c::<F>(3.0) / delta).ln();
    p + (c::<F>(2.0) * p * ll / nf).sqrt() + ll / nf
}

/// Upper confidence envelope of the Laplace bound specialized to the
/// Bernoulli sub-Gaussian envelope.
pub fn upper_gaussian_laplace<F: Scalar>(p: F, n: u64, delta: F) -> F {
    let nf = c::<F>(n as f64);
    p + (c::<F>(2.0) * g_under(p) * (F::one() + F::one() / nf)
        * (c::<F>(2.0) * (nf + F::one()).sqrt() / delta).ln()
        / nf)
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    const ETA: f64 = 1.12;

    fn cfg() -> PeelingConfig<f64> {
        PeelingConfig::default()
    }

    #[test]
    fn ell_matches_closed_form() {
        // eta * ln(max(1, ln 2) * ln(2.24) / (ln^2(1.12) * 0.05)), clamp active at n = 2
        let expected = ETA * (1.0f64 * (ETA * 2.0).ln() / ((ETA.ln()).powi(2) * 0.05)).ln();
        assert!((ell(2, 0.05, &cfg()) - expected).abs() < 1e-12);
        assert!((ell(2, 0.05, &cfg()) - 7.991846120065951).abs() < 1e-9);
    }

    #[test]
    fn ell_at_n1_uses_clamp() {
        let expected = ETA * (ETA.ln() / ((ETA.ln()).powi(2) * 0.5)).ln();
        assert!((ell(1, 0.5, &cfg()) - expected).abs() < 1e-12);
        assert!((ell(1, 0.5, &cfg()) - 3.2150833606505937).abs() < 1e-9);
    }

    #[test]
    fn ell_monotone() {
        let mut prev = ell(3, 0.05, &cfg());
        for n in 4..200u64 {
            let v = ell(n, 0.05, &cfg());
            assert!(v >= prev, "ell must be nondecreasing in n for n >= 3");
            prev = v;
        }
        assert!(ell(10, 0.01, &cfg()) > ell(10, 0.05, &cfg()));
    }

    #[test]
    #[should_panic]
    fn ell_rejects_zero_n() {
        ell(0, 0.5, &cfg());
    }

    #[test]
    #[should_panic]
    fn ell_rejects_bad_delta() {
        ell(5, 1.5, &cfg());
    }

    #[test]
    fn beta_laplace_values() {
        // n = 1, delta = 1: sqrt(2 * 2 * ln(sqrt 2))
        assert!((beta_laplace::<f64>(1, 1.0) - 1.1774100225154747).abs() < 1e-12);
        assert!((beta_laplace::<f64>(100, 0.05) - 0.3273018624234933).abs() < 1e-12);
    }

    #[test]
    fn beta_laplace_vanishes() {
        // rate sqrt(log n / n): scaled ratio stays bounded
        let v = beta_laplace(1_000_000, 0.05);
        assert!(v < 0.006);
        let scaled = v / ((1e6f64).ln() / 1e6).sqrt();
        assert!(scaled > 1.0 && scaled < 2.0);
    }

    #[test]
    fn g_limits() {
        assert!((g_env::<f64>(0.5) - 0.25).abs() < 1e-12);
        assert_eq!(g_env(0.0), 0.0);
        assert_eq!(g_env(1.0), 0.0);
        assert!((g_under::<f64>(0.7) - 0.21).abs() < 1e-12);
        assert_eq!(g_under(0.3), g_env(0.3));
    }

    #[test]
    fn reward_radius_zero_variance() {
        let r = reward_radius(100, 0.0, 0.01, &cfg());
        let expected = (beta_laplace::<f64>(100, 0.01) / 2.0).max(7.0 * ell(100, 0.01, &cfg()) / 300.0);
        assert!((r - expected).abs() < 1e-12);
        assert!((r - 0.314613096581507).abs() < 1e-9);
    }

    #[test]
    fn reward_radius_monotone() {
        let mut prev = reward_radius(3, 0.1, 0.01, &cfg());
        for n in 4..500 {
            let r = reward_radius(n, 0.1, 0.01, &cfg());
            assert!(r <= prev + 1e-12);
            prev = r;
        }
        assert!(reward_radius(50, 0.25, 0.01, &cfg()) >= reward_radius(50, 0.0, 0.01, &cfg()));
    }

    #[test]
    #[should_panic]
    fn reward_radius_rejects_negative_variance() {
        reward_radius(10, -0.1, 0.05, &cfg());
    }

    #[test]
    fn interval_boundary_cases() {
        let iv = bernoulli_interval(0.0, 50, 0.01, &cfg());
        assert_eq!(iv.lo, 0.0);
        assert!(iv.hi > 0.0 && iv.hi < 1.0);

        // all-ones run: lower endpoint replaced by (1/2)^n
        let iv = bernoulli_interval(1.0, 10, 0.01, &cfg());
        assert!((iv.lo - 9.765625e-4).abs() < 1e-15);
        assert_eq!(iv.hi, 1.0);

        // n = 1 is exempt from the override
        let iv = bernoulli_interval(1.0, 1, 0.01, &cfg());
        assert!(iv.lo > 0.5f64.powi(1) || iv.lo <= 1.0);
        assert!(iv.hi == 1.0);
    }

    #[test]
    fn interval_contains_phat() {
        for &(p_hat, n) in &[(0.0, 1), (0.25, 4), (0.5, 200), (0.8, 10), (1.0, 7)] {
            let iv = bernoulli_interval(p_hat, n, 0.05, &cfg());
            assert!(iv.lo <= p_hat && p_hat <= iv.hi, "p_hat {p_hat} n {n}");
        }
    }

    #[test]
    fn interval_matches_grid_oracle() {
        // dense grid search over q with step 1e-6, frozen from a separate
        // high-precision evaluation of the same clauses
        let iv = bernoulli_interval(0.5, 200, 0.01, &cfg());
        assert!((iv.lo - 0.366615).abs() < 2e-6, "lo = {}", iv.lo);
        assert!((iv.hi - 0.630358).abs() < 2e-6, "hi = {}", iv.hi);
    }

    #[test]
    fn interval_shrinks_in_n() {
        let mut prev = bernoulli_interval(0.5, 3, 0.05, &cfg()).width();
        for n in [4u64, 8, 16, 64, 256, 1024] {
            let w = bernoulli_interval(0.5, n, 0.05, &cfg()).width();
            assert!(w <= prev + 1e-12);
            prev = w;
        }
    }

    #[test]
    fn bernstein_contains_full() {
        for &(p_hat, n) in &[(0.5, 200), (0.1, 30), (0.9, 75)] {
            let full = bernoulli_interval(p_hat, n, 0.01, &cfg());
            let loose = bernstein_interval(p_hat, n, 0.01, &cfg());
            assert!(loose.lo <= full.lo + 1e-12);
            assert!(loose.hi >= full.hi - 1e-12);
        }
        // the sub-Gaussian clause actually bites somewhere
        let full = bernoulli_interval(0.5, 200, 0.01, &cfg());
        let loose = bernstein_interval(0.5, 200, 0.01, &cfg());
        assert!(loose.hi > full.hi + 1e-6 || loose.lo < full.lo - 1e-6);
    }

    #[test]
    fn atypical_switch() {
        let literal = bernoulli_interval_opts(1.0, 400, 0.01, &cfg(), false);
        let tighter = bernoulli_interval_opts(1.0, 400, 0.01, &cfg(), true);
        assert!((literal.lo - 0.5f64.powi(400)).abs() < 1e-130);
        assert!(tighter.lo >= literal.lo);
    }

    #[test]
    fn feasibility_predicate_agrees_with_interval() {
        let iv = bernoulli_interval(0.3, 120, 0.02, &cfg());
        for i in 0..=1000 {
            let q = i as f64 / 1000.0;
            let inside = bernoulli_feasible(q, 0.3, 120, 0.02, &cfg());
            if q > iv.lo + 2e-6 && q < iv.hi - 2e-6 {
                assert!(inside, "q = {q} inside hull must be feasible");
            }
            if q < iv.lo - 2e-6 || q > iv.hi + 2e-6 {
                assert!(!inside, "q = {q} outside hull must be infeasible");
            }
        }
    }

    #[test]
    fn generic_scalar_agrees_across_precisions() {
        let c64 = PeelingConfig::<f64>::default();
        let c32 = PeelingConfig::<f32>::default();
        assert!((ell(20, 0.05, &c64) - ell(20, 0.05f32, &c32) as f64).abs() < 1e-4);
        assert!((beta_laplace(20, 0.05) - beta_laplace(20, 0.05f32) as f64).abs() < 1e-5);
    }
}
