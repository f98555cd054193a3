//! Optimistic planning over confidence sets.
//!
//! `inner_max` solves the restricted-support linear maximization over
//! per-component probability intervals (measures may have total mass
//! below one: the missing mass implicitly sits on the lowest-value
//! state, which is pinned at zero by recentering). `noss` grows the
//! candidate support until the value reachable outside it is negligible.
//! `evi` is the classic L1-ball extended value iteration, `evi_noss` the
//! support-adaptive refinement.

use rand::Rng;

use crate::conc::ConfInterval;
use crate::mdp::Policy;
use crate::{c, Scalar};

/// Iteration cap shared by both value-iteration loops.
const ITER_CAP: u64 = 1_000_000;
/// Support sets are recomputed once every this many iterations.
const LAZY_SUPPORT_PERIOD: u64 = 5;
/// NOSS slack multiplier.
const KAPPA_GAMMA: f64 = 10.0;
/// Relative tolerance for Q-value ties.
const TIE_TOL: f64 = 1e-9;
/// Damping of the value updates (aperiodicity transform with unscaled
/// rewards: a (1 - tau) self-loop is blended into every optimistic row).
/// Gains of all policies are preserved exactly; the transform prevents
/// span oscillation when optimistic rows become deterministic.
const EVI_TAU: f64 = 0.95;

/// Transition-uncertainty representation carried by a bounds table.
#[derive(Debug, Clone)]
pub enum TransBounds<F> {
    /// Per-component `[lo, hi]` intervals over (s, a, s').
    Intervals(Vec<ConfInterval<F>>),
    /// Scalar L1-ball radius per (s, a) around the empirical row.
    L1Radius(Vec<F>),
}

/// Reward and transition confidence bounds materialized from agent
/// statistics at an episode start.
#[derive(Debug, Clone)]
pub struct BoundsTable<F> {
    pub n_states: usize,
    pub n_actions: usize,
    pub reward_lo: Vec<F>,
    pub reward_hi: Vec<F>,
    /// Visit counts with the N >= 1 read convention applied.
    pub counts: Vec<u64>,
    /// Empirical transition rows, row-major over (s, a, s').
    pub p_hat: Vec<F>,
    /// States with empirically positive mass, per (s, a).
    pub emp_support: Vec<Vec<usize>>,
    pub trans: TransBounds<F>,
}

impl<F: Scalar> BoundsTable<F> {
    #[inline]
    pub fn pair(&self, s: usize, a: usize) -> usize {
        s * self.n_actions + a
    }

    pub fn p_hat_row(&self, s: usize, a: usize) -> &[F] {
        let base = self.pair(s, a) * self.n_states;
        &self.p_hat[base..base + self.n_states]
    }

    pub fn intervals_row(&self, s: usize, a: usize) -> &[ConfInterval<F>] {
        match &self.trans {
            TransBounds::Intervals(v) => {
                let base = self.pair(s, a) * self.n_states;
                &v[base..base + self.n_states]
            }
            TransBounds::L1Radius(_) => panic!("bounds table carries L1 radii, not intervals"),
        }
    }
}

/// Output of a planning call.
#[derive(Debug, Clone)]
pub struct PlanResult<F> {
    pub policy: Policy,
    /// Final value iterate (recentered to min 0).
    pub value: Vec<F>,
    pub optimistic_gain: F,
    pub iterations: u64,
    /// Reported NOSS slack; zero for plain EVI.
    pub kappa_bar: F,
}

/// Greedy solution of `max sum f(s') q(s')` over `lo <= q <= hi`
/// componentwise on `states` with `sum q <= mass_cap`: start every
/// component at its lower bound and spend the remaining budget on states
/// in decreasing order of `f`. If the budget exceeds the total headroom,
/// every component saturates at `hi` and the mass stays below the cap.
pub fn inner_max<F: Scalar>(
    f: &[F],
    states: &[usize],
    bounds: &[ConfInterval<F>],
    mass_cap: F,
) -> (F, Vec<(usize, F)>) {
    let mut order: Vec<usize> = states.to_vec();
    order.sort_by(|&a, &b| f[b].partial_cmp(&f[a]).unwrap().then(a.cmp(&b)));
    inner_max_sorted(f, &order, bounds, mass_cap)
}

/// As [`inner_max`] but `states` must already be sorted by decreasing `f`.
fn inner_max_sorted<F: Scalar>(
    f: &[F],
    states_desc: &[usize],
    bounds: &[ConfInterval<F>],
    mass_cap: F,
) -> (F, Vec<(usize, F)>) {
    let mut lo_sum = F::zero();
    for &x in states_desc {
        lo_sum = lo_sum + bounds[x].lo;
    }
    assert!(
        lo_sum <= mass_cap + c(1e-12),
        "infeasible inner maximization: lower bounds exceed the mass cap"
    );
    let mut budget = (mass_cap - lo_sum).max(F::zero());
    let mut value = F::zero();
    let mut measure = Vec::with_capacity(states_desc.len());
    for &x in states_desc {
        let mut q = bounds[x].lo;
        if budget > F::zero() {
            let raise = (bounds[x].hi - bounds[x].lo).min(budget);
            q = q + raise;
            budget = budget - raise;
        }
        value = value + f[x] * q;
        measure.push((x, q));
    }
    (value, measure)
}

/// Classic L1-ball inner maximization: raise the best-value state by
/// half the radius, then strip mass from the worst-value states until
/// the row sums to one again.
pub fn inner_max_l1<F: Scalar>(f: &[F], p_hat: &[F], radius: F) -> (F, Vec<F>) {
    assert!(radius >= F::zero());
    let n = f.len();
    let mut q: Vec<F> = p_hat.to_vec();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| f[b].partial_cmp(&f[a]).unwrap().then(a.cmp(&b)));
    let best = order[0];
    q[best] = (p_hat[best] + radius / c(2.0)).min(F::one());
    let mut total: F = q.iter().cloned().sum();
    for &x in order.iter().rev() {
        if total <= F::one() {
            break;
        }
        if x == best {
            continue;
        }
        let cut = q[x].min(total - F::one());
        q[x] = q[x] - cut;
        total = total - cut;
    }
    let value = q.iter().zip(f).map(|(&qi, &fi)| qi * fi).sum();
    (value, q)
}

/// Support-adaptive selection: starting from the empirical support plus
/// the best-value state, keep absorbing the best out-of-set state while
/// the optimistic value reachable outside the set is at least
/// `min(kappa, value inside)`.
pub fn noss<F: Scalar>(
    f: &[F],
    emp_support: &[usize],
    bounds: &[ConfInterval<F>],
    kappa: F,
) -> Vec<usize> {
    assert!(kappa > F::zero(), "noss requires a positive slack");
    let n = f.len();
    let mut best = 0usize;
    for x in 1..n {
        if f[x] > f[best] {
            best = x;
        }
    }
    let mut inside = vec![false; n];
    let mut selected: Vec<usize> = emp_support.to_vec();
    for &x in emp_support {
        inside[x] = true;
    }
    if !inside[best] {
        inside[best] = true;
        selected.push(best);
    }
    // complement ordered by decreasing f so the growth step pops from the front
    let mut outside: Vec<usize> = (0..n).filter(|&x| !inside[x]).collect();
    outside.sort_by(|&a, &b| f[b].partial_cmp(&f[a]).unwrap().then(a.cmp(&b)));
    let mut selected_desc = selected.clone();
    selected_desc.sort_by(|&a, &b| f[b].partial_cmp(&f[a]).unwrap().then(a.cmp(&b)));

    let mut next_out = 0usize;
    loop {
        let remaining = &outside[next_out..];
        if remaining.is_empty() {
            break;
        }
        let (f_in, _) = inner_max_sorted(f, &selected_desc, bounds, F::one());
        let (f_out, _) = inner_max_sorted(f, remaining, bounds, F::one());
        if f_out < kappa.min(f_in) {
            break;
        }
        let moved = outside[next_out];
        next_out += 1;
        let pos = selected_desc
            .binary_search_by(|&x| f[moved].partial_cmp(&f[x]).unwrap().then(x.cmp(&moved)))
            .unwrap_or_else(|p| p);
        selected_desc.insert(pos, moved);
        selected.push(moved);
    }
    selected.sort_unstable();
    selected
}

/// Per-state argmax over actions with stabilized tie-breaking: among
/// Q-values within relative tolerance of the maximum, pick uniformly at
/// random from the actions with the fewest visits.
pub fn greedy_policy_tiebreak<F: Scalar>(
    q_values: &[F],
    n_actions: usize,
    visit_counts: &[u64],
    rng: &mut impl Rng,
) -> Policy {
    let n_states = q_values.len() / n_actions;
    let mut actions = Vec::with_capacity(n_states);
    for s in 0..n_states {
        let row = &q_values[s * n_actions..(s + 1) * n_actions];
        let counts = &visit_counts[s * n_actions..(s + 1) * n_actions];
        let q_max = row.iter().cloned().fold(F::neg_infinity(), F::max);
        let tol = c::<F>(TIE_TOL) * q_max.abs().max(F::one());
        let mut min_count = u64::MAX;
        for (a, &q) in row.iter().enumerate() {
            if q >= q_max - tol {
                min_count = min_count.min(counts[a]);
            }
        }
        let candidates: Vec<usize> = row
            .iter()
            .enumerate()
            .filter(|&(a, &q)| q >= q_max - tol && counts[a] == min_count)
            .map(|(a, _)| a)
            .collect();
        actions.push(candidates[rng.gen_range(0..candidates.len())]);
    }
    Policy { actions }
}

fn extract_gain<F: Scalar>(diff: &[F]) -> F {
    let mut lo = diff[0];
    let mut hi = diff[0];
    for &d in diff {
        lo = lo.min(d);
        hi = hi.max(d);
    }
    ((lo + hi) / c(2.0)).max(F::zero()).min(F::one())
}

fn diff_span<F: Scalar>(diff: &[F]) -> F {
    let mut lo = diff[0];
    let mut hi = diff[0];
    for &d in diff {
        lo = lo.min(d);
        hi = hi.max(d);
    }
    hi - lo
}

/// Extended value iteration over the bounds table (either L1 balls or
/// full-support per-component intervals). Stops when the span of
/// successive differences drops to `epsilon`; the optimistic gain is the
/// midrange of the final difference vector.
pub fn evi<F: Scalar>(
    bounds: &BoundsTable<F>,
    epsilon: F,
    rng: &mut impl Rng,
) -> PlanResult<F> {
    assert!(epsilon > F::zero());
    let ns = bounds.n_states;
    let na = bounds.n_actions;
    let all_states: Vec<usize> = (0..ns).collect();
    let tau = c::<F>(EVI_TAU);
    let mut u = vec![F::zero(); ns];
    let mut q = vec![F::zero(); ns * na];

    for n in 1..=ITER_CAP {
        for s in 0..ns {
            for a in 0..na {
                let trans_value = match &bounds.trans {
                    TransBounds::L1Radius(radii) => {
                        inner_max_l1(&u, bounds.p_hat_row(s, a), radii[bounds.pair(s, a)]).0
                    }
                    TransBounds::Intervals(_) => {
                        inner_max(&u, &all_states, bounds.intervals_row(s, a), F::one()).0
                    }
                };
                q[s * na + a] = bounds.reward_hi[bounds.pair(s, a)] + tau * trans_value;
            }
        }
        let policy = greedy_policy_tiebreak(&q, na, &bounds.counts, rng);
        let next: Vec<F> = (0..ns)
            .map(|s| {
                (F::one() - tau) * u[s]
                    + q[s * na..(s + 1) * na]
                        .iter()
                        .cloned()
                        .fold(F::neg_infinity(), F::max)
            })
            .collect();
        let diff: Vec<F> = (0..ns).map(|s| next[s] - u[s]).collect();
        if diff_span(&diff) <= epsilon {
            let gain = extract_gain(&diff);
            let min_next = next.iter().cloned().fold(F::infinity(), F::min);
            let value: Vec<F> = next.iter().map(|&x| x - min_next).collect();
            return PlanResult {
                policy,
                value,
                optimistic_gain: gain,
                iterations: n,
                kappa_bar: F::zero(),
            };
        }
        let min_next = next.iter().cloned().fold(F::infinity(), F::min);
        for s in 0..ns {
            u[s] = next[s] - min_next;
        }
    }
    panic!("extended value iteration failed to converge within {ITER_CAP} iterations");
}

/// Support-adaptive extended value iteration: at each sweep the inner
/// maximization for (s, a) runs over the support selected by `noss` with
/// slack `10 S(u) |supp| / n_max^(2/3)`. Supports are refreshed every 5
/// sweeps and reused in between.
pub fn evi_noss<F: Scalar>(
    bounds: &BoundsTable<F>,
    n_max: u64,
    epsilon: F,
    rng: &mut impl Rng,
) -> PlanResult<F> {
    assert!(epsilon > F::zero());
    let ns = bounds.n_states;
    let na = bounds.n_actions;
    let denom = c::<F>(n_max.max(1) as f64).powf(c(2.0 / 3.0));
    let gamma = c::<F>(KAPPA_GAMMA);
    let tau = c::<F>(EVI_TAU);
    let mut u = vec![F::zero(); ns];
    let mut q = vec![F::zero(); ns * na];
    let mut supports: Vec<Vec<usize>> = vec![Vec::new(); ns * na];

    for n in 0..ITER_CAP {
        // u is recentered, so its span is its maximum
        let span_u = u.iter().cloned().fold(F::zero(), F::max);
        if n % LAZY_SUPPORT_PERIOD == 0 {
            for s in 0..ns {
                for a in 0..na {
                    let i = bounds.pair(s, a);
                    let emp = &bounds.emp_support[i];
                    let kappa = gamma * span_u * c::<F>(emp.len() as f64) / denom;
                    let fresh = if kappa > F::zero() {
                        noss(&u, emp, bounds.intervals_row(s, a), kappa)
                    } else {
                        // flat iterate or unvisited pair: fall back to the
                        // NOSS initialization, empirical support plus the
                        // best-value state, so optimism is preserved
                        let mut best = 0usize;
                        for x in 1..ns {
                            if u[x] > u[best] {
                                best = x;
                            }
                        }
                        let mut init = emp.clone();
                        if !init.contains(&best) {
                            init.push(best);
                            init.sort_unstable();
                        }
                        init
                    };
                    // accumulate across recomputes: selections driven by an
                    // evolving iterate can otherwise cycle between two
                    // configurations forever, and a superset only tightens
                    // the truncation error while staying optimistic
                    let merged = &mut supports[i];
                    for x in fresh {
                        if let Err(pos) = merged.binary_search(&x) {
                            merged.insert(pos, x);
                        }
                    }
                }
            }
        }
        for s in 0..ns {
            for a in 0..na {
                let i = bounds.pair(s, a);
                let trans_value =
                    inner_max(&u, &supports[i], bounds.intervals_row(s, a), F::one()).0;
                q[i] = bounds.reward_hi[i] + tau * trans_value;
            }
        }
        let policy = greedy_policy_tiebreak(&q, na, &bounds.counts, rng);
        let next: Vec<F> = (0..ns)
            .map(|s| {
                (F::one() - tau) * u[s]
                    + q[s * na..(s + 1) * na]
                        .iter()
                        .cloned()
                        .fold(F::neg_infinity(), F::max)
            })
            .collect();
        let diff: Vec<F> = (0..ns).map(|s| next[s] - u[s]).collect();
        if diff_span(&diff) <= epsilon {
            let gain = extract_gain(&diff);
            let min_next = next.iter().cloned().fold(F::infinity(), F::min);
            let value: Vec<F> = next.iter().map(|&x| x - min_next).collect();
            let span_final = value.iter().cloned().fold(F::zero(), F::max);
            let max_supp = bounds
                .emp_support
                .iter()
                .map(|s| s.len())
                .max()
                .unwrap_or(0);
            let kappa_bar = gamma * span_final * c::<F>(max_supp as f64) / denom;
            return PlanResult {
                policy,
                value,
                optimistic_gain: gain,
                iterations: n + 1,
                kappa_bar,
            };
        }
        let min_next = next.iter().cloned().fold(F::infinity(), F::min);
        for s in 0..ns {
            u[s] = next[s] - min_next;
        }
    }
    panic!("EVI-NOSS failed to converge within {ITER_CAP} iterations");
}

/// Point-interval bounds table for an exact model; used in tests and by
/// posterior-sampling planning paths that reuse the EVI machinery.
pub fn point_bounds<F: Scalar>(model: &crate::mdp::MdpModel<F>) -> BoundsTable<F> {
    let ns = model.n_states();
    let na = model.n_actions();
    let mut reward_lo = Vec::with_capacity(ns * na);
    let mut reward_hi = Vec::with_capacity(ns * na);
    let mut p_hat = Vec::with_capacity(ns * na * ns);
    let mut intervals = Vec::with_capacity(ns * na * ns);
    let mut emp_support = Vec::with_capacity(ns * na);
    for s in 0..ns {
        for a in 0..na {
            reward_lo.push(model.reward(s, a));
            reward_hi.push(model.reward(s, a));
            let row = model.row(s, a);
            p_hat.extend_from_slice(row);
            for &p in row {
                intervals.push(ConfInterval::new(p, p));
            }
            emp_support.push(model.support(s, a));
        }
    }
    BoundsTable {
        n_states: ns,
        n_actions: na,
        reward_lo,
        reward_hi,
        counts: vec![1; ns * na],
        p_hat,
        emp_support,
        trans: TransBounds::Intervals(intervals),
    }
}
