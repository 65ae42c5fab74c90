//! Primal smoothing baseline.
//!
//! The non-smooth penalty `rho e^T|X|e = max_{U in unit box} rho <U, X>` is
//! replaced by its prox-regularized version
//!
//! ```text
//! g_eps(X) = min_{U in unit box} log det X - <Sigma + rho U, X> + (mu/2) ||U||_F^2
//! ```
//!
//! with `mu = eps / (2 D)`, `D = n^2 / 2`, which is within `eps/2` of the
//! true objective everywhere. `g_eps` has a Lipschitz gradient on the
//! spectral box and is maximized with the same accelerated scheme as the
//! dual solvers, projecting onto the box by clamping eigenvalues.
//!
//! Note the sign of the prox term: it is *added* inside the minimization,
//! which keeps the inner problem strongly convex in `U`.

use std::time::Instant;

use crate::engine::AcceleratedScheme;
use crate::error::{CovselError, Result};
use crate::oracle::{eval_dual, eval_primal};
use crate::problem::{Instance, SpectralBox};
use crate::report::{NoTrace, SolveReport, Status, TraceRecord, TraceSink};
use crate::smacs::{elapsed_ms, validate_eps};
use crate::symmat::{eig_counter, eig_sym, SymMatrix};

/// Smoothing parameters for a given target accuracy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothedPrimal {
    pub mu: f64,
    pub d_hat_max: f64,
    pub lipschitz: f64,
}

impl SmoothedPrimal {
    pub fn new(n: usize, eps: f64, alpha: f64, rho: f64) -> Self {
        let d_hat_max = (n * n) as f64 / 2.0;
        let mu = eps / (2.0 * d_hat_max);
        Self {
            mu,
            d_hat_max,
            lipschitz: 1.0 / (alpha * alpha) + rho * rho / mu,
        }
    }
}

/// Inner minimizer `U*(X)_ij = clamp(rho X_ij / mu, -1, 1)`.
pub fn smoothing_dual(x: &SymMatrix, rho: f64, mu: f64) -> SymMatrix {
    x.map_entries(|v| (rho * v / mu).clamp(-1.0, 1.0))
}

/// Value and gradient of the smoothed objective at a positive definite `x`.
pub fn smoothed_value_grad(
    x: &SymMatrix,
    inst: &Instance,
    sp: &SmoothedPrimal,
) -> Result<(f64, SymMatrix)> {
    let rho = inst.rho();
    let inv = x.inverse_pd()?;
    let logdet = x.log_det_pd()?;
    let u = smoothing_dual(x, rho, sp.mu);
    let value =
        logdet - inst.sigma().dot(x) - rho * u.dot(x) + 0.5 * sp.mu * u.frobenius_norm().powi(2);
    let grad = inv.sub(inst.sigma()).add_scaled(-rho, &u);
    Ok((value, grad))
}

/// Frobenius projection onto `alpha I <= X <= beta I`.
pub fn project_spectral_box(m: &SymMatrix, bx: &SpectralBox) -> Result<SymMatrix> {
    let e = eig_sym(m)?;
    let clamped: Vec<f64> = e.gamma.iter().map(|g| g.clamp(bx.alpha, bx.beta)).collect();
    Ok(e.assemble(&clamped))
}

pub fn solve_nsa(
    inst: &Instance,
    bx: &SpectralBox,
    eps: f64,
    max_iter: usize,
) -> Result<SolveReport> {
    solve_nsa_traced(inst, bx, eps, max_iter, &mut NoTrace)
}

pub fn solve_nsa_traced(
    inst: &Instance,
    bx: &SpectralBox,
    eps: f64,
    max_iter: usize,
    sink: &mut dyn TraceSink,
) -> Result<SolveReport> {
    validate_eps(eps)?;
    let n = inst.n();
    let rho = inst.rho();
    let (alpha, beta) = (bx.alpha, bx.beta);
    let sp = SmoothedPrimal::new(n, eps, alpha, rho);
    if !sp.lipschitz.is_finite() {
        return Err(CovselError::InvalidInput(
            "smoothing constant overflowed".into(),
        ));
    }

    let start = Instant::now();
    let eig_start = eig_counter::count();
    let bx_copy = *bx;
    let project = move |m: &SymMatrix| project_spectral_box(m, &bx_copy);
    // prox center at the middle of the box, the point minimizing the worst-case distance
    let x0 = SymMatrix::identity(n).scale(0.5 * (alpha + beta));
    let mut scheme = AcceleratedScheme::new(project, x0, sp.lipschitz, 1.0);
    let mut trace = Vec::new();

    loop {
        let k = scheme.k();
        let x_k = scheme.current().clone();
        let (_, grad) = smoothed_value_grad(&x_k, inst, &sp)?;
        // ascent on g_eps is descent on -g_eps
        let descent_grad = grad.scale(-1.0);
        let y_k = scheme.step_sd(&descent_grad)?;

        let u_k = smoothing_dual(&y_k, rho, sp.mu);
        let f_dual = eval_dual(&u_k, inst, alpha, beta, beta)?.f_value;
        let g_primal = eval_primal(&y_k, inst)?;
        let gap = f_dual - g_primal;

        let rec = TraceRecord {
            k,
            f_dual,
            g_primal,
            gap,
            aux_gap: None,
            beta_hat: beta,
            restart_count: 0,
            lambda_max: None,
            restart: None,
            wallclock_ms: elapsed_ms(&start),
        };
        sink.record(&rec);
        trace.push(rec);

        let status = if gap <= eps {
            Some(Status::Converged)
        } else if k >= max_iter {
            Some(Status::MaxIterReached)
        } else {
            None
        };
        if let Some(status) = status {
            return Ok(SolveReport {
                status,
                iterations: k,
                final_gap: gap,
                primal_obj: g_primal,
                dual_obj: f_dual,
                x_star: y_k,
                u_star: u_k,
                beta_hat: beta,
                restart_count: 0,
                eig_calls: eig_counter::count() - eig_start,
                trace,
                total_ms: start.elapsed().as_millis() as u64,
            });
        }

        scheme.advance(&descent_grad, &y_k)?;
    }
}
