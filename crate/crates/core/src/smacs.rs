//! Accelerated dual descent over the unit box with weighted primal
//! averaging, certified by the primal-dual gap.

use std::time::Instant;

use crate::engine::AcceleratedScheme;
use crate::error::{CovselError, Result};
use crate::oracle::{eval_dual, eval_primal};
use crate::problem::{membership_u, Instance, SpectralBox};
use crate::report::{NoTrace, SolveReport, Status, TraceRecord, TraceSink};
use crate::symmat::{eig_counter, SymMatrix};

/// Which gap ends the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Termination {
    /// `f(U_sd_k) - g(X_bar_k)`; two eigendecompositions per iteration,
    /// covered by the O(1/k^2) gap bound.
    #[default]
    Canonical,
    /// `f(U_k) - g(X(U_k))`; one eigendecomposition per iteration.
    Cheap,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub eps: f64,
    /// Defaults to twice the theoretical iteration cap plus ten.
    pub max_iter: Option<usize>,
    /// Prox center; zero when unset.
    pub u0: Option<SymMatrix>,
    pub sigma_mod: f64,
    pub gap_bound_check: bool,
    pub termination: Termination,
}

impl SolverConfig {
    pub fn new(eps: f64) -> Self {
        Self {
            eps,
            max_iter: None,
            u0: None,
            sigma_mod: 1.0,
            gap_bound_check: false,
            termination: Termination::Canonical,
        }
    }
}

/// Entrywise clamp to `[-1, 1]`: the Frobenius projection onto the unit box.
pub fn clip_unit_box(m: &SymMatrix) -> SymMatrix {
    m.map_entries(|v| v.clamp(-1.0, 1.0))
}

/// Minimizer of `<grad, U - U_k> + L/2 ||U - U_k||^2` over the unit box.
pub fn step_sd(u_k: &SymMatrix, grad: &SymMatrix, lipschitz: f64) -> SymMatrix {
    clip_unit_box(&u_k.add_scaled(-1.0 / lipschitz, grad))
}

/// Minimizer of `L/(2 sigma) ||U - U_0||^2 + <grad_accum, U>` over the unit box.
pub fn step_ag(
    u0: &SymMatrix,
    grad_accum: &SymMatrix,
    lipschitz: f64,
    sigma_mod: f64,
) -> SymMatrix {
    clip_unit_box(&u0.add_scaled(-sigma_mod / lipschitz, grad_accum))
}

pub(crate) fn clip_projection(m: &SymMatrix) -> Result<SymMatrix> {
    Ok(clip_unit_box(m))
}

/// `max_{U in unit box} ||U - u0||_F^2 / 2`.
pub fn prox_diameter(u0: &SymMatrix) -> f64 {
    u0.as_dmatrix()
        .iter()
        .map(|v| (1.0 + v.abs()).powi(2))
        .sum::<f64>()
        / 2.0
}

/// `4 L D / (sigma (k+1)(k+2))`.
pub fn gap_bound(lipschitz: f64, diameter: f64, sigma_mod: f64, k: usize) -> f64 {
    let k = k as f64;
    4.0 * lipschitz * diameter / (sigma_mod * (k + 1.0) * (k + 2.0))
}

/// Largest integer not exceeding `2 sqrt(L D / (sigma eps))`. At that `k`,
/// `(k+1)(k+2) > 4 L D / (sigma eps)`, so the gap bound is already below `eps`.
pub fn iteration_cap(lipschitz: f64, diameter: f64, sigma_mod: f64, eps: f64) -> usize {
    (2.0 * (lipschitz * diameter / (sigma_mod * eps)).sqrt()).floor() as usize
}

pub(crate) fn validate_u0(u0: Option<&SymMatrix>, n: usize) -> Result<SymMatrix> {
    match u0 {
        None => Ok(SymMatrix::zeros(n)),
        Some(u) if u.n() != n => Err(CovselError::DimensionMismatch {
            expected: n,
            got: u.n(),
        }),
        Some(u) if !membership_u(u) => {
            Err(CovselError::InvalidInput("u0 outside the unit box".into()))
        }
        Some(u) => Ok(u.clone()),
    }
}

pub(crate) fn validate_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(CovselError::InvalidInput(format!(
            "eps must be positive, got {eps}"
        )))
    }
}

pub(crate) fn elapsed_ms(start: &Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

pub fn solve_smacs(inst: &Instance, bx: &SpectralBox, cfg: &SolverConfig) -> Result<SolveReport> {
    solve_smacs_traced(inst, bx, cfg, &mut NoTrace)
}

pub fn solve_smacs_traced(
    inst: &Instance,
    bx: &SpectralBox,
    cfg: &SolverConfig,
    sink: &mut dyn TraceSink,
) -> Result<SolveReport> {
    validate_eps(cfg.eps)?;
    if !(cfg.sigma_mod > 0.0) {
        return Err(CovselError::InvalidInput(
            "sigma_mod must be positive".into(),
        ));
    }
    let n = inst.n();
    let u0 = validate_u0(cfg.u0.as_ref(), n)?;
    let (alpha, beta) = (bx.alpha, bx.beta);
    let lipschitz = (inst.rho() * beta).powi(2);
    let diameter = prox_diameter(&u0);
    let max_iter = cfg
        .max_iter
        .unwrap_or_else(|| 2 * iteration_cap(lipschitz, diameter, cfg.sigma_mod, cfg.eps) + 10);

    let start = Instant::now();
    let eig_start = eig_counter::count();
    let mut scheme = AcceleratedScheme::new(clip_projection, u0, lipschitz, cfg.sigma_mod);
    let mut trace = Vec::new();

    loop {
        let k = scheme.k();
        let u_k = scheme.current().clone();
        let ev = eval_dual(&u_k, inst, alpha, beta, beta)?;
        let g_at_x = ev.primal_value(inst);
        let cheap_gap = ev.f_value - g_at_x;
        let x_bar = scheme.average(&ev.x_of_u).clone();
        let u_sd = scheme.step_sd(&ev.grad_f)?;

        // (f, g, gap, certified pair)
        let (f_dual, g_primal, gap, x_cert, u_cert) = match cfg.termination {
            Termination::Cheap => (ev.f_value, g_at_x, cheap_gap, ev.x_of_u.clone(), u_k),
            Termination::Canonical => {
                let f_sd = eval_dual(&u_sd, inst, alpha, beta, beta)?.f_value;
                let g_bar = eval_primal(&x_bar, inst)?;
                (f_sd, g_bar, f_sd - g_bar, x_bar, u_sd.clone())
            }
        };

        let rec = TraceRecord {
            k,
            f_dual,
            g_primal,
            gap,
            aux_gap: (cfg.termination == Termination::Canonical).then_some(cheap_gap),
            beta_hat: beta,
            restart_count: 0,
            lambda_max: Some(ev.lambda_max),
            restart: None,
            wallclock_ms: elapsed_ms(&start),
        };
        sink.record(&rec);
        trace.push(rec);

        if cfg.gap_bound_check && cfg.termination == Termination::Canonical {
            let bound = gap_bound(lipschitz, diameter, cfg.sigma_mod, k);
            if gap > bound + 1e-8 * (1.0 + f_dual.abs()) {
                return Err(CovselError::GapBoundViolated { k, gap, bound });
            }
        }

        let status = if gap <= cfg.eps {
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
                x_star: x_cert,
                u_star: u_cert,
                beta_hat: beta,
                restart_count: 0,
                eig_calls: eig_counter::count() - eig_start,
                trace,
                total_ms: start.elapsed().as_millis() as u64,
            });
        }

        scheme.advance(&ev.grad_f, &u_sd)?;
    }
}
