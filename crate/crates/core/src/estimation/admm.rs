use num_complex::Complex64;

use super::LinearOperator;
use crate::error::{ensure, Result};

/// Settings of [`admm_lasso`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmOptions {
    pub lambda: f64,
    /// Penalty parameter; `None` picks half the largest eigenvalue of `A^H A`.
    pub rho: Option<f64>,
    pub max_iter: usize,
    /// Absolute and relative tolerance of the primal and dual residuals.
    pub tol: f64,
    /// Every 10 iterations, rebalance `rho` (within 1e4 of its start) when one residual dominates the other by 10x.
    pub adaptive_rho: bool,
}

impl AdmmOptions {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            rho: None,
            max_iter: 2000,
            tol: 1e-8,
            adaptive_rho: false,
        }
    }
}

/// Solution and diagnostics. `x` is the sparse (thresholded) iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmResult {
    pub x: Vec<Complex64>,
    pub iterations: usize,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Objective at the sparse iterate after every iteration.
    pub objective: Vec<f64>,
}

/// `v * max(0, 1 - kappa / |v|)`.
pub fn soft_threshold(v: Complex64, kappa: f64) -> Complex64 {
    let n = v.norm();
    if n <= kappa {
        Complex64::new(0.0, 0.0)
    } else {
        v * (1.0 - kappa / n)
    }
}

/// `0.5 ||y - A x||^2 + lambda ||x||_1`.
pub fn lasso_objective(
    op: &dyn LinearOperator,
    y: &[Complex64],
    x: &[Complex64],
    lambda: f64,
) -> f64 {
    let ax = op.apply(x);
    let fit: f64 = y.iter().zip(&ax).map(|(a, b)| (a - b).norm_sqr()).sum();
    0.5 * fit + lambda * x.iter().map(|v| v.norm()).sum::<f64>()
}

/// `frac * ||A^H y||_inf`, the usual scale for the regulariser (any larger value gives x = 0).
pub fn default_lambda(op: &dyn LinearOperator, y: &[Complex64], frac: f64) -> f64 {
    frac * op
        .apply_adjoint(y)
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max)
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Scaled-form ADMM for `min 0.5 ||y - A x||^2 + lambda ||x||_1`.
///
/// The data are normalised by `max |y|` internally so the tolerances are relative to the
/// signal level. Stops when both residuals fall under their tolerances or after
/// `max_iter` iterations, in which case `converged` is false.
pub fn admm_lasso(
    op: &dyn LinearOperator,
    y: &[Complex64],
    opts: &AdmmOptions,
) -> Result<AdmmResult> {
    ensure(y.len() == op.rows(), || {
        format!(
            "measurement length {} does not match operator rows {}",
            y.len(),
            op.rows()
        )
    })?;
    ensure(
        opts.lambda > 0.0 && opts.rho.map_or(true, |r| r > 0.0),
        || "lambda and rho must be positive".to_string(),
    )?;
    ensure(opts.max_iter > 0, || {
        "max_iter must be positive".to_string()
    })?;
    let n = op.cols();
    let zero = Complex64::new(0.0, 0.0);
    let scale = y.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(AdmmResult {
            x: vec![zero; n],
            iterations: 0,
            converged: true,
            primal_residual: 0.0,
            dual_residual: 0.0,
            objective: vec![0.0],
        });
    }
    let ys: Vec<Complex64> = y.iter().map(|v| v / scale).collect();
    let lambda = opts.lambda / scale;
    let aty = op.apply_adjoint(&ys);

    let rho0 = match opts.rho {
        Some(r) => r,
        None => (0.5 * op.gram_norm()).max(1e-12),
    };
    let mut rho = rho0;
    let mut x = vec![zero; n];
    let mut z = vec![zero; n];
    let mut u = vec![zero; n];
    let mut objective = Vec::new();
    let sqrt_n = (n as f64).sqrt();
    let (mut r_norm, mut s_norm) = (f64::INFINITY, f64::INFINITY);
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let rhs: Vec<Complex64> = (0..n).map(|i| aty[i] + rho * (z[i] - u[i])).collect();
        x = op.solve_normal(rho, &rhs, &x);
        let z_old = std::mem::replace(
            &mut z,
            (0..n)
                .map(|i| soft_threshold(x[i] + u[i], lambda / rho))
                .collect(),
        );
        for i in 0..n {
            u[i] += x[i] - z[i];
        }
        let r: Vec<Complex64> = (0..n).map(|i| x[i] - z[i]).collect();
        r_norm = norm(&r);
        s_norm = rho
            * (0..n)
                .map(|i| (z[i] - z_old[i]).norm_sqr())
                .sum::<f64>()
                .sqrt();
        objective.push(lasso_objective(op, &ys, &z, lambda) * scale * scale);

        let eps_pri = sqrt_n * opts.tol + opts.tol * norm(&x).max(norm(&z));
        let eps_dual = sqrt_n * opts.tol + opts.tol * rho * norm(&u);
        if r_norm < eps_pri && s_norm < eps_dual {
            converged = true;
            break;
        }
        if opts.adaptive_rho && it % 10 == 9 {
            let factor = if r_norm > 10.0 * s_norm {
                2.0
            } else if s_norm > 10.0 * r_norm {
                0.5
            } else {
                1.0
            };
            if factor != 1.0 && (rho * factor) / rho0 <= 1e4 && rho0 / (rho * factor) <= 1e4 {
                rho *= factor;
                for v in u.iter_mut() {
                    *v /= factor;
                }
            }
        }
    }
    if !converged {
        log::debug!("ADMM stopped after {iterations} iterations (r={r_norm:.2e}, s={s_norm:.2e})");
    }
    Ok(AdmmResult {
        x: z.iter().map(|v| v * scale).collect(),
        iterations,
        converged,
        primal_residual: r_norm * scale,
        dual_residual: s_norm * scale,
        objective,
    })
}
