//! Quasi-Newton (BFGS) maximization with finite-difference gradients.
//!
//! Objectives may return `-inf` to signal infeasible regions; the line search
//! treats those points as rejected and the gradient falls back to one-sided
//! differences.

pub struct OptimResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub converged: bool,
    #[allow(dead_code)]
    pub iterations: usize,
}

const STEP_TOL: f64 = 1e-8;

fn gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], fx: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let h = 1e-6 * x[i].abs().max(1.0);
        let orig = x[i];
        xp[i] = orig + h;
        let fp = f(&xp);
        xp[i] = orig - h;
        let fm = f(&xp);
        xp[i] = orig;
        g[i] = if fp.is_finite() && fm.is_finite() {
            (fp - fm) / (2.0 * h)
        } else if fp.is_finite() {
            (fp - fx) / h
        } else if fm.is_finite() {
            (fx - fm) / h
        } else {
            0.0
        };
    }
    g
}

/// Maximize `f` from `x0`. Convergence: relative improvement < `tol` or step
/// norm < 1e-8.
pub fn maximize(
    f: &dyn Fn(&[f64]) -> f64,
    x0: &[f64],
    max_iter: usize,
    tol: f64,
) -> OptimResult {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    if !fx.is_finite() {
        return OptimResult {
            x,
            value: fx,
            converged: false,
            iterations: 0,
        };
    }
    let mut g = gradient(f, &x, fx);
    // Inverse Hessian approximation, identity to start.
    let mut h_inv = vec![vec![0.0; n]; n];
    for (i, row) in h_inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..max_iter {
        iterations = iter + 1;
        // Ascent direction d = H g.
        let mut d: Vec<f64> = h_inv
            .iter()
            .map(|row| row.iter().zip(&g).map(|(a, b)| a * b).sum())
            .collect();
        let dg: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if dg <= 0.0 {
            // Not an ascent direction; reset to steepest ascent.
            d = g.clone();
            for (i, row) in h_inv.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = if i == j { 1.0 } else { 0.0 };
                }
            }
        }
        let dg: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if dg.sqrt() < 1e-14 {
            converged = true;
            break;
        }

        // Backtracking Armijo line search.
        let mut step = 1.0;
        let mut x_new = x.clone();
        let mut f_new = f64::NEG_INFINITY;
        let mut accepted = false;
        for _ in 0..50 {
            for i in 0..n {
                x_new[i] = x[i] + step * d[i];
            }
            f_new = f(&x_new);
            if f_new.is_finite() && f_new >= fx + 1e-4 * step * dg {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            converged = true;
            break;
        }

        let step_norm: f64 = d.iter().map(|v| (step * v).powi(2)).sum::<f64>().sqrt();
        let improvement = f_new - fx;
        let g_new = gradient(f, &x_new, f_new);

        // BFGS update of the inverse Hessian (maximization form: y is the
        // gradient decrease).
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g.iter().zip(&g_new).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        if sy > 1e-12 {
            let rho = 1.0 / sy;
            // H' = (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            let hy: Vec<f64> = h_inv
                .iter()
                .map(|row| row.iter().zip(&y).map(|(a, b)| a * b).sum())
            .collect();
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..n {
                for j in 0..n {
                    h_inv[i][j] += -rho * (s[i] * hy[j] + hy[i] * s[j])
                        + rho * rho * yhy * s[i] * s[j]
                        + rho * s[i] * s[j];
                }
            }
        }

        x = x_new;
        fx = f_new;
        g = g_new;

        if improvement.abs() < tol * (fx.abs().max(1.0)) || step_norm < STEP_TOL {
            converged = true;
            break;
        }
    }

    OptimResult {
        x,
        value: fx,
        converged,
        iterations,
    }
}
