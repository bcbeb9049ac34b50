//! Exact minimization of `phi(p) = max(0, max_j c_j - g_j . p)` over `p in R^d`.
//!
//! The problem is the LP `min a` subject to `a + g_j . p >= c_j`, `a >= 0`. Its dual
//!
//! ```text
//! max  sum_j lambda_j c_j
//! s.t. sum_j lambda_j + mu = 1,   sum_j lambda_j g_j = 0,   lambda, mu >= 0
//! ```
//!
//! has only `d + 1` rows, so a revised simplex with dense `(d+1) x (d+1)` bases is cheap
//! even with thousands of columns. The rows `1..=d` start out covered by artificial unit
//! columns held at zero; they leave as soon as a pivot touches their row and never return.
//! The simplex multipliers at optimality are `(a*, p*)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Pivot budget.
    pub max_iters: usize,
    /// Accepted gap between the primal value and the dual bound, relative to `max(1, a)`.
    pub tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iters: 200,
            tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimaxSolution {
    pub p: Vec<f64>,
    /// `phi(p)` recomputed from the data.
    pub value: f64,
    /// Objective of the final dual-feasible point; a lower bound on `min phi`.
    pub dual_bound: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `phi(p)` evaluated directly.
pub fn evaluate(c: &[f64], g: &[f64], dim: usize, p: &[f64]) -> f64 {
    c.iter()
        .zip(g.chunks_exact(dim.max(1)))
        .map(|(cj, gj)| cj - dot(gj, p))
        .fold(0.0, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `g` holds the rows `g_j` back to back, `dim` entries each.
pub fn solve(c: &[f64], g: &[f64], dim: usize, options: &SolverOptions) -> MinimaxSolution {
    let n = c.len();
    debug_assert_eq!(g.len(), n * dim);
    let m = dim + 1;
    let mu = n;
    let art = |k: usize| n + 1 + k; // artificial for row k + 1
    let is_art = |j: usize| j > n;

    let column = |j: usize| -> DVector<f64> {
        let mut col = DVector::zeros(m);
        if j < n {
            col[0] = 1.0;
            for k in 0..dim {
                col[k + 1] = g[j * dim + k];
            }
        } else if j == mu {
            col[0] = 1.0;
        } else {
            col[j - n] = 1.0;
        }
        col
    };
    let cost = |j: usize| if j < n { c[j] } else { 0.0 };

    let scale = c.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    let rc_tol = 1e-12 * scale;
    let piv_tol = 1e-11;

    let mut basis: Vec<usize> = std::iter::once(mu).chain((0..dim).map(art)).collect();
    let mut in_basis = vec![false; n + 1];
    in_basis[mu] = true;
    let mut iterations = 0;
    let mut degenerate_run = 0usize;
    let mut optimal = false;
    let mut pi = DVector::zeros(m);
    let mut x_b = DVector::zeros(m);

    loop {
        let mut b = DMatrix::zeros(m, m);
        for (r, &j) in basis.iter().enumerate() {
            b.set_column(r, &column(j));
        }
        let Some(b_inv) = b.clone().try_inverse() else {
            break;
        };
        let mut rhs = DVector::zeros(m);
        rhs[0] = 1.0;
        x_b = &b_inv * rhs;
        for v in x_b.iter_mut() {
            if *v < 0.0 && *v > -1e-13 {
                *v = 0.0;
            }
        }
        let c_b = DVector::from_iterator(m, basis.iter().map(|&j| cost(j)));
        pi = b_inv.transpose() * c_b;

        // pricing: Dantzig, switching to Bland's rule while pivots stay degenerate
        let bland = degenerate_run > 2 * m;
        let mut entering: Option<(usize, f64)> = None;
        for j in 0..=n {
            if in_basis[j] {
                continue;
            }
            let reduced = if j < n {
                c[j] - pi[0] - dot(&g[j * dim..(j + 1) * dim], &pi.as_slice()[1..])
            } else {
                -pi[0]
            };
            if reduced > rc_tol {
                match entering {
                    None => entering = Some((j, reduced)),
                    Some((_, best)) if !bland && reduced > best => entering = Some((j, reduced)),
                    _ => {}
                }
                if bland {
                    break;
                }
            }
        }
        let Some((e, _)) = entering else {
            optimal = true;
            break;
        };
        if iterations >= options.max_iters {
            break;
        }
        iterations += 1;

        let u = &b_inv * column(e);
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..m {
            let ratio = if is_art(basis[r]) {
                if u[r].abs() > piv_tol {
                    0.0
                } else {
                    continue;
                }
            } else if u[r] > piv_tol {
                x_b[r].max(0.0) / u[r]
            } else {
                continue;
            };
            let replace = match leave {
                None => true,
                Some((lr, best)) => ratio < best || (ratio == best && basis[r] < basis[lr]),
            };
            if replace {
                leave = Some((r, ratio));
            }
        }
        // a bounded feasible region always has a blocking row
        let Some((r, step)) = leave else {
            break;
        };
        degenerate_run = if step == 0.0 { degenerate_run + 1 } else { 0 };
        let old = basis[r];
        if old <= n {
            in_basis[old] = false;
        }
        basis[r] = e;
        in_basis[e] = true;
    }

    let p: Vec<f64> = pi.as_slice()[1..].to_vec();
    let value = evaluate(c, g, dim, &p);
    let dual_bound: f64 = basis
        .iter()
        .zip(x_b.iter())
        .map(|(&j, &x)| cost(j) * x)
        .sum();
    let converged = optimal && value - dual_bound <= options.tol * value.abs().max(1.0);
    MinimaxSolution {
        p,
        value,
        dual_bound,
        iterations,
        converged,
    }
}
