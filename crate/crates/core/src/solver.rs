//! Shared minimization kernels: a limited-memory quasi-Newton descent with
//! backtracking line search, and a preconditioned conjugate-gradient solver
//! for symmetric positive definite quadratics.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub struct LbfgsOptions {
    /// Convergence when `|grad|_inf <= tol_grad * (1 + |value|)`.
    pub tol_grad: f64,
    pub max_iters: usize,
    pub memory: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            tol_grad: 1e-8,
            max_iters: 2000,
            memory: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_inf: f64,
    pub iters: usize,
    pub converged: bool,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f` starting from `x0`. The objective closure writes the
/// gradient into its second argument and returns the value.
pub fn lbfgs<F>(mut f: F, x0: Vec<f64>, opts: &LbfgsOptions) -> SolveResult
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut value = f(&x, &mut g);
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new(); // (s, y, 1/(y.s))
    let mut iters = 0;

    loop {
        let grad_inf = inf_norm(&g);
        if grad_inf <= opts.tol_grad * (1.0 + value.abs()) {
            return SolveResult {
                x,
                value,
                grad_inf,
                iters,
                converged: true,
            };
        }
        if iters >= opts.max_iters {
            return SolveResult {
                x,
                value,
                grad_inf,
                iters,
                converged: false,
            };
        }

        // two-loop recursion for the search direction
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(pairs.len());
        for (s, y, rho) in pairs.iter().rev() {
            let a = rho * dot(s, &d);
            for i in 0..n {
                d[i] -= a * y[i];
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = pairs.back() {
            let ys = dot(y, s);
            let yy = dot(y, y);
            if yy > 0.0 {
                let scale = ys / yy;
                for v in d.iter_mut() {
                    *v *= scale;
                }
            }
        }
        for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &d);
            for i in 0..n {
                d[i] += (a - b) * s[i];
            }
        }

        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            // not a descent direction; fall back to steepest descent
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
            pairs.clear();
        }

        // Armijo backtracking
        let mut step = if pairs.is_empty() {
            1.0 / (1.0 + inf_norm(&g))
        } else {
            1.0
        };
        let mut x_new = vec![0.0; n];
        let mut g_new = vec![0.0; n];
        let mut value_new;
        let mut accepted = false;
        for _ in 0..60 {
            for i in 0..n {
                x_new[i] = x[i] + step * d[i];
            }
            value_new = f(&x_new, &mut g_new);
            if value_new <= value + 1e-4 * step * slope {
                let s: Vec<f64> = (0..n).map(|i| x_new[i] - x[i]).collect();
                let y: Vec<f64> = (0..n).map(|i| g_new[i] - g[i]).collect();
                let ys = dot(&y, &s);
                if ys > 1e-12 * dot(&y, &y).max(1e-300) {
                    if pairs.len() == opts.memory {
                        pairs.pop_front();
                    }
                    pairs.push_back((s, y, 1.0 / ys));
                }
                x = std::mem::take(&mut x_new);
                g = std::mem::take(&mut g_new);
                x_new = vec![0.0; n];
                g_new = vec![0.0; n];
                value = value_new;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // line search failed; gradient is as small as roundoff permits
            let grad_inf = inf_norm(&g);
            return SolveResult {
                x,
                value,
                grad_inf,
                iters,
                converged: grad_inf <= opts.tol_grad.max(1e-7) * (1.0 + value.abs()),
            };
        }
        iters += 1;
    }
}

/// Jacobi-preconditioned conjugate gradients for `A x = b` with `A` given as
/// a matvec closure and `diag` its diagonal.
pub fn pcg<F>(
    mut apply: F,
    b: &[f64],
    diag: &[f64],
    x0: Vec<f64>,
    tol: f64,
    max_iters: usize,
) -> Vec<f64>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = b.len();
    let mut x = x0;
    let mut ax = vec![0.0; n];
    apply(&x, &mut ax);
    let mut r: Vec<f64> = (0..n).map(|i| b[i] - ax[i]).collect();
    let b_norm = dot(b, b).sqrt().max(1e-300);
    let mut z: Vec<f64> = (0..n).map(|i| r[i] / diag[i].max(1e-300)).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for _ in 0..max_iters {
        if dot(&r, &r).sqrt() <= tol * b_norm {
            break;
        }
        apply(&p, &mut ax);
        let pap = dot(&p, &ax);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ax[i];
        }
        for i in 0..n {
            z[i] = r[i] / diag[i].max(1e-300);
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    x
}
