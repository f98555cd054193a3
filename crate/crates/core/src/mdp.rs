//! Ground-truth MDP representation, exact average-reward solvers and
//! problem-dependent metrics (diameter, local diameters, Gini index,
//! local effective support) together with the regret-bound diagnostics
//! report derived from them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{c, Scalar};

/// Row stochasticity tolerance enforced on construction.
const ROW_SUM_TOL: f64 = 1e-12;
/// Hitting-time value iteration tolerance.
const HIT_TOL: f64 = 1e-10;
/// Iteration cap shared by the exact solvers.
const ITER_CAP: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum MdpError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("solver failed to converge within {0} iterations")]
    NoConvergence(u64),
    #[error("target state {0} is not reachable from every state")]
    Unreachable(usize),
}

/// Full ground-truth MDP: transition tensor `p(s'|s,a)` stored row-major
/// over (s, a, s') and mean rewards in `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpModel<F> {
    n_states: usize,
    n_actions: usize,
    transition: Vec<F>,
    reward_mean: Vec<F>,
}

impl<F: Scalar> MdpModel<F> {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<F>,
        reward_mean: Vec<F>,
    ) -> Result<Self, MdpError> {
        if n_states == 0 || n_actions == 0 {
            return Err(MdpError::InvalidModel("empty state or action space".into()));
        }
        if transition.len() != n_states * n_actions * n_states {
            return Err(MdpError::InvalidModel("transition tensor size mismatch".into()));
        }
        if reward_mean.len() != n_states * n_actions {
            return Err(MdpError::InvalidModel("reward matrix size mismatch".into()));
        }
        for &mu in &reward_mean {
            if !(mu >= F::zero() && mu <= F::one()) {
                return Err(MdpError::InvalidModel("mean reward outside [0,1]".into()));
            }
        }
        let model = Self {
            n_states,
            n_actions,
            transition,
            reward_mean,
        };
        for s in 0..n_states {
            for a in 0..n_actions {
                let row = model.row(s, a);
                let mut sum = F::zero();
                for &p in row {
                    if !(p >= F::zero() && p <= F::one()) {
                        return Err(MdpError::InvalidModel(format!(
                            "p(.|{s},{a}) has a component outside [0,1]"
                        )));
                    }
                    sum = sum + p;
                }
                if (sum - F::one()).abs() > c(ROW_SUM_TOL) {
                    return Err(MdpError::InvalidModel(format!(
                        "p(.|{s},{a}) sums to {sum:?}"
                    )));
                }
            }
        }
        Ok(model)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn row(&self, s: usize, a: usize) -> &[F] {
        let base = (s * self.n_actions + a) * self.n_states;
        &self.transition[base..base + self.n_states]
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> F {
        self.reward_mean[s * self.n_actions + a]
    }

    /// Successor set of (s, a): states with strictly positive mass.
    pub fn support(&self, s: usize, a: usize) -> Vec<usize> {
        self.row(s, a)
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > F::zero())
            .map(|(x, _)| x)
            .collect()
    }
}

/// Deterministic stationary policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    pub actions: Vec<usize>,
}

impl Policy {
    pub fn action(&self, s: usize) -> usize {
        self.actions[s]
    }
}

/// Gain and normalized bias of an (approximately) optimal policy.
#[derive(Debug, Clone)]
pub struct GainBias<F> {
    pub gain: F,
    pub bias: Vec<F>,
}

fn span<F: Scalar>(v: &[F]) -> F {
    let mut lo = v[0];
    let mut hi = v[0];
    for &x in v {
        lo = lo.min(x);
        hi = hi.max(x);
    }
    hi - lo
}

/// Optimal gain, bias and policy by relative value iteration.
///
/// Plain value iteration can cycle on periodic chains; when the span of
/// successive differences stops improving, the iteration restarts with
/// an aperiodicity transform (mixing factor 0.99 with the identity).
/// The transform preserves gains and policies exactly; the bias is
/// rescaled back to the original model on exit.
pub fn relative_value_iteration<F: Scalar>(
    model: &MdpModel<F>,
    epsilon: F,
) -> Result<(GainBias<F>, Policy), MdpError> {
    assert!(epsilon > F::zero());
    match rvi_damped(model, epsilon, F::one()) {
        Ok(out) => Ok(out),
        Err(MdpError::NoConvergence(_)) => rvi_damped(model, epsilon, c(0.99)),
        Err(e) => Err(e),
    }
}

fn rvi_damped<F: Scalar>(
    model: &MdpModel<F>,
    epsilon: F,
    tau: F,
) -> Result<(GainBias<F>, Policy), MdpError> {
    let ns = model.n_states();
    let na = model.n_actions();
    let mut u = vec![F::zero(); ns];
    let mut next = vec![F::zero(); ns];
    let mut policy = vec![0usize; ns];
    let mut diff = vec![F::zero(); ns];
    let mut best_span = F::infinity();
    let mut stale = 0u64;
    let one_minus_tau = F::one() - tau;

    for _ in 0..ITER_CAP {
        for s in 0..ns {
            let mut best = F::neg_infinity();
            let mut best_a = 0;
            for a in 0..na {
                let row = model.row(s, a);
                let mut exp = F::zero();
                for x in 0..ns {
                    exp = exp + row[x] * u[x];
                }
                let q = model.reward(s, a) + tau * exp + one_minus_tau * u[s];
                if q > best {
                    best = q;
                    best_a = a;
                }
            }
            next[s] = best;
            policy[s] = best_a;
        }
        for s in 0..ns {
            diff[s] = next[s] - u[s];
        }
        let sp = span(&diff);
        if sp <= epsilon {
            let gain = {
                let mut lo = diff[0];
                let mut hi = diff[0];
                for &d in &diff {
                    lo = lo.min(d);
                    hi = hi.max(d);
                }
                (lo + hi) / c(2.0)
            };
            // undo the transform on the bias: h = tau * h_damped
            let min_u = u.iter().cloned().fold(F::infinity(), F::min);
            let bias: Vec<F> = u.iter().map(|&x| tau * (x - min_u)).collect();
            return Ok((GainBias { gain, bias }, Policy { actions: policy }));
        }
        if sp < best_span - epsilon * c(1e-3) {
            best_span = sp;
            stale = 0;
        } else {
            stale += 1;
            // undamped iteration is cycling, hand back to the caller
            if tau == F::one() && stale > 200 {
                return Err(MdpError::NoConvergence(stale));
            }
        }
        // recenter to keep the iterates bounded
        let min_next = next.iter().cloned().fold(F::infinity(), F::min);
        for s in 0..ns {
            u[s] = next[s] - min_next;
        }
    }
    Err(MdpError::NoConvergence(ITER_CAP))
}

/// Minimal expected number of steps to reach `target` from every state,
/// as the fixed point of the stochastic-shortest-path Bellman operator.
pub fn min_hitting_times<F: Scalar>(
    model: &MdpModel<F>,
    target: usize,
) -> Result<Vec<F>, MdpError> {
    assert!(target < model.n_states());
    let ns = model.n_states();
    let na = model.n_actions();
    let divergence_cap = c::<F>(1e12);
    let mut v = vec![F::zero(); ns];
    let mut next = vec![F::zero(); ns];
    for _ in 0..ITER_CAP {
        let mut delta = F::zero();
        for s in 0..ns {
            if s == target {
                next[s] = F::zero();
                continue;
            }
            let mut best = F::infinity();
            for a in 0..na {
                let row = model.row(s, a);
                let mut exp = F::zero();
                for x in 0..ns {
                    if x != target {
                        exp = exp + row[x] * v[x];
                    }
                }
                best = best.min(F::one() + exp);
            }
            next[s] = best;
            delta = delta.max((next[s] - v[s]).abs());
            if next[s] > divergence_cap {
                return Err(MdpError::Unreachable(target));
            }
        }
        std::mem::swap(&mut v, &mut next);
        if delta < c(HIT_TOL) {
            return Ok(v);
        }
    }
    Err(MdpError::Unreachable(target))
}

/// Problem-dependent quantities of a model. Matrices are stored row-major
/// over (s, a).
#[derive(Debug, Clone)]
pub struct MdpMetrics<F> {
    pub diameter: F,
    pub local_diameter: Vec<F>,
    pub gini: Vec<F>,
    pub effective_support: Vec<F>,
    pub support_size: Vec<usize>,
    pub n_states: usize,
    pub n_actions: usize,
}

impl<F: Scalar> MdpMetrics<F> {
    #[inline]
    fn idx(&self, s: usize, a: usize) -> usize {
        s * self.n_actions + a
    }

    pub fn gini_at(&self, s: usize, a: usize) -> F {
        self.gini[self.idx(s, a)]
    }

    pub fn effective_support_at(&self, s: usize, a: usize) -> F {
        self.effective_support[self.idx(s, a)]
    }

    pub fn support_size_at(&self, s: usize, a: usize) -> usize {
        self.support_size[self.idx(s, a)]
    }
}

/// Computes diameter, local diameters, Gini indices, local effective
/// supports and support sizes of a communicating model.
pub fn metrics<F: Scalar>(model: &MdpModel<F>) -> Result<MdpMetrics<F>, MdpError> {
    let ns = model.n_states();
    let na = model.n_actions();

    // hitting[s][t] = minimal expected travel time from s to t
    let mut hitting = vec![vec![F::zero(); ns]; ns];
    for t in 0..ns {
        let v = min_hitting_times(model, t)?;
        for s in 0..ns {
            hitting[s][t] = v[s];
        }
    }

    let mut diameter = F::zero();
    for s in 0..ns {
        for t in 0..ns {
            if s != t {
                diameter = diameter.max(hitting[s][t]);
            }
        }
    }

    let mut local_diameter = vec![F::zero(); ns];
    for s in 0..ns {
        let mut succ: Vec<usize> = Vec::new();
        for a in 0..na {
            for x in model.support(s, a) {
                if !succ.contains(&x) {
                    succ.push(x);
                }
            }
        }
        let mut d = F::zero();
        for &s1 in &succ {
            for &s2 in &succ {
                if s1 != s2 {
                    d = d.max(hitting[s1][s2]);
                }
            }
        }
        local_diameter[s] = d;
    }

    let mut gini = vec![F::zero(); ns * na];
    let mut effective_support = vec![F::zero(); ns * na];
    let mut support_size = vec![0usize; ns * na];
    for s in 0..ns {
        for a in 0..na {
            let row = model.row(s, a);
            let mut g = F::zero();
            let mut l = F::zero();
            let mut k = 0usize;
            for &p in row {
                g = g + p * (F::one() - p);
                l = l + (p * (F::one() - p)).sqrt();
                if p > F::zero() {
                    k += 1;
                }
            }
            let i = s * na + a;
            gini[i] = g;
            effective_support[i] = l * l;
            support_size[i] = k;
        }
    }

    Ok(MdpMetrics {
        diameter,
        local_diameter,
        gini,
        effective_support,
        support_size,
        n_states: ns,
        n_actions: na,
    })
}

/// Leading regret-bound terms of several algorithms evaluated on one
/// model, normalized by `sqrt(T log(T/delta))` and stripped of universal
/// constants, plus the raw metrics they derive from.
#[derive(Debug, Clone, Serialize)]
pub struct RegretBoundReport {
    pub n_states: usize,
    pub n_actions: usize,
    pub horizon: u64,
    pub delta: f64,
    pub diameter: f64,
    pub local_diameter: Vec<f64>,
    pub gini: Vec<Vec<f64>>,
    pub effective_support: Vec<Vec<f64>>,
    pub support_size: Vec<Vec<usize>>,
    pub r_bar_ucrl2: f64,
    pub r_bar_scal_plus: f64,
    pub r_bar_ucrl2b: f64,
    pub r_bar_ucrl3: f64,
    pub leading_constant: f64,
}

/// Builds the diagnostics report:
/// `R(UCRL2) = D S sqrt(A)`, `R(SCAL+) = D sqrt(sum K)`,
/// `R(UCRL2B) = sqrt(D sum K log T)`,
/// `R(UCRL3) = sqrt(sum (D_s^2 L_{s,a} v 1)) + D`,
/// and the leading constant `5 sum D_s^2 L + 10 sqrt(SA) + 2D`.
pub fn regret_bound_report(
    model: &MdpModel<f64>,
    horizon: u64,
    delta: f64,
) -> Result<RegretBoundReport, MdpError> {
    let m = metrics(model)?;
    let ns = model.n_states();
    let na = model.n_actions();
    let d = m.diameter;
    let sum_k: usize = m.support_size.iter().sum();
    let mut sum_floored = 0.0;
    let mut sum_dsl = 0.0;
    for s in 0..ns {
        for a in 0..na {
            let dsl = m.local_diameter[s].powi(2) * m.effective_support_at(s, a);
            sum_floored += dsl.max(1.0);
            sum_dsl += dsl;
        }
    }
    let to_mat = |v: &[f64]| -> Vec<Vec<f64>> {
        (0..ns).map(|s| v[s * na..(s + 1) * na].to_vec()).collect()
    };
    Ok(RegretBoundReport {
        n_states: ns,
        n_actions: na,
        horizon,
        delta,
        diameter: d,
        local_diameter: m.local_diameter.clone(),
        gini: to_mat(&m.gini),
        effective_support: to_mat(&m.effective_support),
        support_size: (0..ns)
            .map(|s| m.support_size[s * na..(s + 1) * na].to_vec())
            .collect(),
        r_bar_ucrl2: d * ns as f64 * (na as f64).sqrt(),
        r_bar_scal_plus: d * (sum_k as f64).sqrt(),
        r_bar_ucrl2b: (d * sum_k as f64 * (horizon as f64).ln()).sqrt(),
        r_bar_ucrl3: sum_floored.sqrt() + d,
        leading_constant: 5.0 * sum_dsl + 10.0 * (ns as f64 * na as f64).sqrt() + 2.0 * d,
    })
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    n_states: usize,
    n_actions: usize,
    transition: Vec<Vec<Vec<f64>>>,
    reward_mean: Vec<Vec<f64>>,
}

impl MdpModel<f64> {
    /// Serializes to the JSON interchange document (nested arrays,
    /// row-major over s, a, s'). Round-trips bit-exactly.
    pub fn to_json(&self) -> String {
        let doc = ModelJson {
            n_states: self.n_states,
            n_actions: self.n_actions,
            transition: (0..self.n_states)
                .map(|s| (0..self.n_actions).map(|a| self.row(s, a).to_vec()).collect())
                .collect(),
            reward_mean: (0..self.n_states)
                .map(|s| (0..self.n_actions).map(|a| self.reward(s, a)).collect())
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, MdpError> {
        let doc: ModelJson =
            serde_json::from_str(text).map_err(|e| MdpError::InvalidModel(e.to_string()))?;
        let mut transition = Vec::with_capacity(doc.n_states * doc.n_actions * doc.n_states);
        for row_s in &doc.transition {
            for row in row_s {
                transition.extend_from_slice(row);
            }
        }
        let mut reward = Vec::with_capacity(doc.n_states * doc.n_actions);
        for row in &doc.reward_mean {
            reward.extend_from_slice(row);
        }
        Self::new(doc.n_states, doc.n_actions, transition, reward)
    }
}
