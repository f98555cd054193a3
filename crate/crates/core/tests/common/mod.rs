//! Independent oracles for the integration suites: a dense simplex LP
//! solver, brute-force policy-enumeration gain computation, and random
//! model generators.

#![allow(dead_code)]

use avgrl::mdp::MdpModel;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const LP_EPS: f64 = 1e-11;

/// Maximizes `c . x` subject to `A x <= b`, `x >= 0` with `b >= 0`
/// (slack basis feasible), by the primal simplex method with Bland's
/// rule. Sized for the handful-of-variables instances used in tests.
pub fn simplex_max(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> f64 {
    let n = c.len();
    let m = b.len();
    assert!(b.iter().all(|&x| x >= -LP_EPS));
    // tableau rows: m constraints + objective; columns: n vars, m slacks, rhs
    let cols = n + m + 1;
    let mut t = vec![vec![0.0; cols]; m + 1];
    for i in 0..m {
        t[i][..n].copy_from_slice(&a[i]);
        t[i][n + i] = 1.0;
        t[i][cols - 1] = b[i];
    }
    for j in 0..n {
        t[m][j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    loop {
        // Bland: first column with negative reduced cost
        let Some(pivot_col) = (0..cols - 1).find(|&j| t[m][j] < -LP_EPS) else {
            break;
        };
        // min-ratio leaving row, ties by smallest basis index
        let mut pivot_row = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[i][pivot_col] > LP_EPS {
                let ratio = t[i][cols - 1] / t[i][pivot_col];
                if ratio < best - LP_EPS
                    || (ratio < best + LP_EPS
                        && pivot_row.map_or(true, |r: usize| basis[i] < basis[r]))
                {
                    best = ratio;
                    pivot_row = Some(i);
                }
            }
        }
        let r = pivot_row.expect("LP unbounded; test instances are bounded");
        let piv = t[r][pivot_col];
        for v in t[r].iter_mut() {
            *v /= piv;
        }
        for i in 0..=m {
            if i != r {
                let factor = t[i][pivot_col];
                if factor != 0.0 {
                    let row_r = t[r].clone();
                    for (v, &w) in t[i].iter_mut().zip(&row_r) {
                        *v -= factor * w;
                    }
                }
            }
        }
        basis[r] = pivot_col;
    }
    t[m][cols - 1]
}

/// LP value of `max f . q` over `lo <= q <= hi`, `sum q <= mass_cap`.
pub fn lp_inner_max(f: &[f64], lo: &[f64], hi: &[f64], mass_cap: f64) -> f64 {
    let n = f.len();
    // substitute y = q - lo, y in [0, hi - lo], sum y <= cap - sum lo
    let lo_sum: f64 = lo.iter().sum();
    let mut a = Vec::with_capacity(n + 1);
    let mut b = Vec::with_capacity(n + 1);
    for i in 0..n {
        let mut row = vec![0.0; n];
        row[i] = 1.0;
        a.push(row);
        b.push(hi[i] - lo[i]);
    }
    a.push(vec![1.0; n]);
    b.push((mass_cap - lo_sum).max(0.0));
    let base: f64 = f.iter().zip(lo).map(|(x, l)| x * l).sum();
    base + simplex_max(f, &a, &b)
}

/// LP value of `max f . q` over the probability simplex intersected
/// with the L1 ball of the given radius around `p_hat`.
pub fn lp_inner_max_l1(f: &[f64], p_hat: &[f64], radius: f64) -> f64 {
    let n = f.len();
    // q = p_hat + u - v with u, v >= 0:
    //   sum(u + v) <= radius, sum u - sum v = 0 (total mass stays 1),
    //   v_i - u_i <= p_hat_i (q >= 0), u_i - v_i <= 1 - p_hat_i (q <= 1)
    let nv = 2 * n;
    let mut a = Vec::new();
    let mut b = Vec::new();
    a.push(vec![1.0; nv]);
    b.push(radius);
    let mut eq_pos = vec![0.0; nv];
    for i in 0..n {
        eq_pos[i] = 1.0;
        eq_pos[n + i] = -1.0;
    }
    let eq_neg: Vec<f64> = eq_pos.iter().map(|x| -x).collect();
    a.push(eq_pos);
    b.push(0.0);
    a.push(eq_neg);
    b.push(0.0);
    for i in 0..n {
        let mut row = vec![0.0; nv];
        row[i] = -1.0;
        row[n + i] = 1.0;
        a.push(row);
        b.push(p_hat[i]);
        let mut row2 = vec![0.0; nv];
        row2[i] = 1.0;
        row2[n + i] = -1.0;
        a.push(row2);
        b.push(1.0 - p_hat[i]);
    }
    let mut c = vec![0.0; nv];
    for i in 0..n {
        c[i] = f[i];
        c[n + i] = -f[i];
    }
    let base: f64 = f.iter().zip(p_hat).map(|(x, p)| x * p).sum();
    base + simplex_max(&c, &a, &b)
}

/// Solves `mu P = mu`, `sum mu = 1` by Gaussian elimination with
/// partial pivoting. `p` is row-major S x S.
fn stationary_distribution(p: &[f64], n: usize) -> Vec<f64> {
    // (P^T - I) mu = 0 with the last equation replaced by sum mu = 1
    let mut a = vec![vec![0.0; n + 1]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = p[j * n + i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        a[n - 1][j] = 1.0;
    }
    a[n - 1][n] = 1.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        assert!(a[col][col].abs() > 1e-13, "singular system");
        for row in 0..n {
            if row != col {
                let factor = a[row][col] / a[col][col];
                for k in col..=n {
                    let v = a[col][k];
                    a[row][k] -= factor * v;
                }
            }
        }
    }
    (0..n).map(|i| a[i][n] / a[i][i]).collect()
}

/// Optimal gain by exhaustive policy enumeration; valid for models
/// whose every stationary policy induces an ergodic chain (all test
/// generators below emit strictly positive rows).
pub fn brute_force_gain(model: &MdpModel<f64>) -> f64 {
    let ns = model.n_states();
    let na = model.n_actions();
    let total = na.pow(ns as u32);
    let mut best = f64::NEG_INFINITY;
    for code in 0..total {
        let mut c = code;
        let mut p = vec![0.0; ns * ns];
        let mut r = vec![0.0; ns];
        for s in 0..ns {
            let a = c % na;
            c /= na;
            p[s * ns..(s + 1) * ns].copy_from_slice(model.row(s, a));
            r[s] = model.reward(s, a);
        }
        let mu = stationary_distribution(&p, ns);
        let gain: f64 = mu.iter().zip(&r).map(|(m, x)| m * x).sum();
        best = best.max(gain);
    }
    best
}

/// Random communicating MDP with strictly positive transition rows.
pub fn random_dense_mdp(rng: &mut ChaCha8Rng, ns: usize, na: usize) -> MdpModel<f64> {
    let mut p = Vec::with_capacity(ns * na * ns);
    let mut r = Vec::with_capacity(ns * na);
    for _ in 0..ns * na {
        let mut row: Vec<f64> = (0..ns).map(|_| rng.gen::<f64>() + 0.05).collect();
        let total: f64 = row.iter().sum();
        for v in &mut row {
            *v /= total;
        }
        p.extend(row);
        r.push(rng.gen());
    }
    MdpModel::new(ns, na, p, r).unwrap()
}
