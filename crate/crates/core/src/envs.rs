//! Benchmark environment constructors and a seeded sampling interface.
//!
//! All environments expose the ground-truth model so that exact solvers
//! can compute the optimal gain for regret accounting. Sampling uses an
//! instance-local generator: equal seeds and equal action sequences give
//! identical trajectories.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::mdp::MdpModel;
use crate::Model;

/// RiverSwim chain parameters. The interior dynamics follow the usual
/// benchmark values; the leftmost-state RIGHT transition is pinned by the
/// published diameters (see `riverswim`).
const RIGHT_FWD: f64 = 0.35;
const RIGHT_STAY: f64 = 0.6;
const RIGHT_BACK: f64 = 0.05;
const LEFTMOST_FWD: f64 = 0.6;
const RIGHTMOST_STAY: f64 = 0.6;
const REWARD_LEFT: f64 = 0.05;
const REWARD_RIGHT: f64 = 0.95;

/// An environment: ground-truth model, start state and a private
/// generator for sampling transitions and rewards.
#[derive(Debug, Clone)]
pub struct EnvInstance {
    pub model: Model,
    pub initial_state: usize,
    seed: u64,
    rng: ChaCha8Rng,
}

impl EnvInstance {
    pub fn new(model: Model, initial_state: usize, seed: u64) -> Self {
        assert!(initial_state < model.n_states());
        Self {
            model,
            initial_state,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Resets the generator to a fresh stream; the model is unchanged.
    pub fn reseed(&mut self, seed: u64) {
        self.seed = seed;
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    /// Samples one transition: next state by inverse CDF over the model
    /// row, reward as a Bernoulli draw of the mean reward, each on its
    /// own uniform draw.
    pub fn step(&mut self, state: usize, action: usize) -> (usize, f64) {
        assert!(state < self.model.n_states() && action < self.model.n_actions());
        let row = self.model.row(state, action);
        let u: f64 = self.rng.gen();
        let mut acc = 0.0;
        let mut next = self.model.n_states() - 1;
        for (x, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                next = x;
                break;
            }
        }
        let v: f64 = self.rng.gen();
        let reward = if v < self.model.reward(state, action) {
            1.0
        } else {
            0.0
        };
        (next, reward)
    }
}

/// The n-state swim-upstream chain: LEFT is deterministic, RIGHT drifts
/// weakly to the right, small reward at the left end, large at the right.
///
/// Numeric masses are pinned by the published problem-dependent
/// quantities (diameter 14.72 for 6 states, etc.); with the leftmost
/// RIGHT transition at 0.6/0.4 all five tabulated diameters reproduce to
/// two decimals.
pub fn riverswim(n_states: usize) -> EnvInstance {
    assert!(n_states >= 2, "riverswim needs at least 2 states");
    let ns = n_states;
    let na = 2;
    let mut p = vec![0.0; ns * na * ns];
    let mut mu = vec![0.0; ns * na];
    let idx = |s: usize, a: usize, x: usize| (s * na + a) * ns + x;
    for s in 0..ns {
        // LEFT: one step left, self-loop at the left end
        p[idx(s, 0, s.saturating_sub(1))] = 1.0;
        // RIGHT
        if s == 0 {
            p[idx(s, 1, 1)] += LEFTMOST_FWD;
            p[idx(s, 1, 0)] += 1.0 - LEFTMOST_FWD;
        } else if s == ns - 1 {
            p[idx(s, 1, s)] += RIGHTMOST_STAY;
            p[idx(s, 1, s - 1)] += 1.0 - RIGHTMOST_STAY;
        } else {
            p[idx(s, 1, s + 1)] += RIGHT_FWD;
            p[idx(s, 1, s)] += RIGHT_STAY;
            p[idx(s, 1, s - 1)] += RIGHT_BACK;
        }
    }
    mu[0] = REWARD_LEFT; // (leftmost, LEFT)
    mu[(ns - 1) * na + 1] = REWARD_RIGHT; // (rightmost, RIGHT)
    let model = MdpModel::new(ns, na, p, mu).expect("riverswim construction is stochastic");
    EnvInstance::new(model, 0, 0)
}

/// Grid-world variants: a 7x7 four-room layout (20 free cells) and a
/// 9x11 two-room layout (55 free cells).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridVariant {
    FourRoom7x7,
    TwoRoom9x11,
}

/// Builds the wall mask of a variant: `true` marks a blocked cell.
/// Returns (rows, cols, walls).
fn grid_layout(variant: GridVariant) -> (usize, usize, Vec<bool>) {
    match variant {
        GridVariant::FourRoom7x7 => {
            let (rows, cols) = (7, 7);
            let mut wall = vec![false; rows * cols];
            for r in 0..rows {
                for c in 0..cols {
                    if r == 0 || c == 0 || r == rows - 1 || c == cols - 1 {
                        wall[r * cols + c] = true;
                    }
                }
            }
            // cross-shaped divider on row 3 and column 3, one door per arm
            for i in 1..6 {
                wall[3 * cols + i] = true;
                wall[i * cols + 3] = true;
            }
            for (r, c) in [(2, 3), (4, 3), (3, 2), (3, 4)] {
                wall[r * cols + c] = false;
            }
            (rows, cols, wall)
        }
        GridVariant::TwoRoom9x11 => {
            // 11 rows by 9 columns, vertical divider with a single door
            let (rows, cols) = (11, 9);
            let mut wall = vec![false; rows * cols];
            for r in 0..rows {
                for c in 0..cols {
                    if r == 0 || c == 0 || r == rows - 1 || c == cols - 1 {
                        wall[r * cols + c] = true;
                    }
                }
            }
            for r in 1..rows - 1 {
                wall[r * cols + 4] = true;
            }
            wall[5 * cols + 4] = false;
            (rows, cols, wall)
        }
    }
}

/// Frozen-lake grid-world: 4 actions, intended move with probability 0.7,
/// stay 0.1, each perpendicular direction 0.1; walls reflect blocked mass
/// back onto the current cell. The lower-right free cell pays reward 1
/// and teleports to the upper-left start under every action.
pub fn grid_room(variant: GridVariant) -> EnvInstance {
    let (rows, cols, wall) = grid_layout(variant);
    // free cells in row-major order
    let mut cell_of_state = Vec::new();
    let mut state_of_cell = vec![usize::MAX; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            if !wall[r * cols + c] {
                state_of_cell[r * cols + c] = cell_of_state.len();
                cell_of_state.push((r, c));
            }
        }
    }
    let ns = cell_of_state.len();
    let na = 4;
    let start = 0; // upper-left free cell
    let goal = ns - 1; // lower-right free cell
    let mut p = vec![0.0; ns * na * ns];
    let mut mu = vec![0.0; ns * na];
    // up, left, down, right as (dr, dc)
    let dirs: [(isize, isize); 4] = [(-1, 0), (0, -1), (1, 0), (0, 1)];
    for s in 0..ns {
        let (r, c) = cell_of_state[s];
        for a in 0..na {
            let base = (s * na + a) * ns;
            if s == goal {
                p[base + start] = 1.0;
                mu[s * na + a] = 1.0;
                continue;
            }
            let mut add = |dr: isize, dc: isize, mass: f64| {
                let (nr, nc) = ((r as isize + dr) as usize, (c as isize + dc) as usize);
                let target = if wall[nr * cols + nc] { s } else { state_of_cell[nr * cols + nc] };
                p[base + target] += mass;
            };
            let (dr, dc) = dirs[a];
            add(dr, dc, 0.7);
            add(0, 0, 0.1);
            // perpendicular directions
            add(dc, dr, 0.1);
            add(-dc, -dr, 0.1);
        }
    }
    let model = MdpModel::new(ns, na, p, mu).expect("grid construction is stochastic");
    EnvInstance::new(model, start, 0)
}

/// Parameters of a randomly generated average-reward test-bench MDP.
#[derive(Debug, Clone, Deserialize)]
pub struct GarnetSpec {
    pub n_states: usize,
    pub n_actions: usize,
    /// Mean support size of the transition distributions.
    pub branching: usize,
    /// Fraction of (s, a) pairs carrying a nonzero mean reward.
    pub reward_density: f64,
    /// Minimal nonzero transition probability.
    pub min_mass: f64,
    /// Minimal nonzero mean reward.
    pub min_reward: f64,
    pub seed: u64,
}

/// Samples a Garnet instance. Generation is a pure function of the spec
/// (including its seed). Communication is enforced by threading a random
/// Hamiltonian cycle through the supports.
pub fn garnet(spec: &GarnetSpec) -> EnvInstance {
    assert!(spec.n_states >= 2 && spec.n_actions >= 1);
    assert!(spec.branching >= 1 && spec.branching <= spec.n_states);
    assert!(spec.reward_density > 0.0 && spec.reward_density <= 1.0);
    assert!(spec.min_mass >= 0.0 && spec.min_reward >= 0.0 && spec.min_reward <= 1.0);
    assert!(
        spec.min_mass * spec.branching as f64 <= 1.0,
        "infeasible spec: min_mass * branching exceeds 1"
    );
    let ns = spec.n_states;
    let na = spec.n_actions;
    let max_support = if spec.min_mass > 0.0 {
        ((1.0 / spec.min_mass).floor() as usize).min(ns)
    } else {
        ns
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // random Hamiltonian cycle over the states
    let mut order: Vec<usize> = (0..ns).collect();
    for i in (1..ns).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let mut cycle_next = vec![0usize; ns];
    for i in 0..ns {
        cycle_next[order[i]] = order[(i + 1) % ns];
    }
    // the action that carries the cycle edge out of each state
    let cycle_action: Vec<usize> = (0..ns).map(|_| rng.gen_range(0..na)).collect();

    let mut p = vec![0.0; ns * na * ns];
    let mut mu = vec![0.0; ns * na];
    for s in 0..ns {
        for a in 0..na {
            // support size around `branching`
            let size = if spec.branching == 1 {
                1
            } else {
                let lo = spec.branching.saturating_sub(1).max(1);
                let hi = (spec.branching + 1).min(ns);
                rng.gen_range(lo..=hi)
            }
            .min(max_support);
            let mut support = Vec::with_capacity(size + 1);
            if cycle_action[s] == a {
                support.push(cycle_next[s]);
            }
            while support.len() < size {
                let x = rng.gen_range(0..ns);
                if !support.contains(&x) {
                    support.push(x);
                }
            }
            // symmetric Dirichlet masses, floored at min_mass
            let k = support.len();
            let mut weights: Vec<f64> = (0..k)
                .map(|_| -(1.0 - rng.gen::<f64>()).ln())
                .collect();
            let total: f64 = weights.iter().sum();
            let free = 1.0 - spec.min_mass * k as f64;
            for w in &mut weights {
                *w = spec.min_mass + free * (*w / total);
            }
            let base = (s * na + a) * ns;
            for (x, w) in support.iter().zip(&weights) {
                p[base + x] = *w;
            }
            // renormalize away accumulated rounding
            let row_sum: f64 = p[base..base + ns].iter().sum();
            for q in &mut p[base..base + ns] {
                *q /= row_sum;
            }
        }
    }
    // sparse rewards
    let n_pairs = ns * na;
    let n_rewarding = ((spec.reward_density * n_pairs as f64).ceil() as usize).clamp(1, n_pairs);
    let mut pairs: Vec<usize> = (0..n_pairs).collect();
    for i in (1..n_pairs).rev() {
        let j = rng.gen_range(0..=i);
        pairs.swap(i, j);
    }
    for &i in pairs.iter().take(n_rewarding) {
        mu[i] = spec.min_reward + (1.0 - spec.min_reward) * rng.gen::<f64>();
    }
    let model = MdpModel::new(ns, na, p, mu).expect("garnet rows are stochastic");
    let initial_state = 0;
    EnvInstance::new(model, initial_state, spec.seed)
}
