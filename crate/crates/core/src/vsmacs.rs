//! Dual descent with an adaptive spectral box top.
//!
//! The iteration complexity of the dual scheme scales with the box top
//! `beta` through `L = rho^2 beta^2`. Since the optimum only needs
//! `beta_hat >= lambda_max(X*)`, the solver tracks a working top `beta_hat`:
//!
//! - if `X_{beta_hat}(U_k)` is *active* (its top eigenvalue sits on
//!   `beta_hat < beta`), `beta_hat` is escalated by powers of `varsigma1`
//!   until it no longer binds;
//! - if it is inactive with `lambda_max <= varsigma3 * beta_hat`, `beta_hat`
//!   shrinks to `varsigma2 * lambda_max` (kept within `[alpha, beta]`);
//!
//! and either update restarts the accelerated scheme from the current `U_k`.
//! Termination uses the one-eigendecomposition gap
//! `f_{beta_hat}(U_k) - g(X_{beta_hat}(U_k))`, which equals the gap for the
//! full `[alpha, beta]` box because the evaluated point is always inactive.

use std::time::Instant;

use crate::engine::AcceleratedScheme;
use crate::error::{CovselError, Result};
use crate::oracle::{eval_dual, OracleEval, ACT_TOL};
use crate::problem::{Instance, SpectralBox};
use crate::report::{
    NoTrace, RestartEvent, RestartKind, SolveReport, Status, TraceRecord, TraceSink,
};
use crate::smacs::{clip_projection, elapsed_ms, validate_eps, validate_u0};
use crate::symmat::{eig_counter, SymMatrix};

#[derive(Debug, Clone)]
pub struct AdaptiveConfig {
    /// Escalation factor, `> 1`.
    pub varsigma1: f64,
    /// Shrink headroom, `> 1`.
    pub varsigma2: f64,
    /// Shrink trigger, in `(0, 1)`.
    pub varsigma3: f64,
    pub eps: f64,
    /// Budget on iterations summed over all restarts.
    pub max_iter: usize,
    pub u0: Option<SymMatrix>,
}

impl AdaptiveConfig {
    pub fn new(eps: f64) -> Self {
        Self {
            varsigma1: 1.05,
            varsigma2: 1.05,
            varsigma3: 0.95,
            eps,
            max_iter: 50_000,
            u0: None,
        }
    }

    fn validate(&self) -> Result<()> {
        validate_eps(self.eps)?;
        if !(self.varsigma1 > 1.0 && self.varsigma2 > 1.0) {
            return Err(CovselError::InvalidInput(format!(
                "varsigma1 and varsigma2 must exceed 1, got {} and {}",
                self.varsigma1, self.varsigma2
            )));
        }
        if !(self.varsigma3 > 0.0 && self.varsigma3 < 1.0) {
            return Err(CovselError::InvalidInput(format!(
                "varsigma3 must lie in (0, 1), got {}",
                self.varsigma3
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activity {
    Active,
    Inactive,
}

pub fn classify(eval: &OracleEval, beta_global: f64) -> Activity {
    if crate::oracle::is_active(eval.lambda_max, eval.beta_hat, beta_global) {
        Activity::Active
    } else {
        Activity::Inactive
    }
}

/// Smallest `beta_bar = min(varsigma1^s beta_hat, beta)`, `s >= 1`, at which
/// the clamp no longer binds, decided from the eigenvalues of
/// `Sigma + rho U_k` alone.
pub fn escalate(gamma: &[f64], beta_hat: f64, beta: f64, varsigma1: f64) -> f64 {
    // a nonpositive eigenvalue maps to the box top for every finite cap
    let top = if gamma.iter().any(|&g| g <= 0.0) {
        f64::INFINITY
    } else {
        gamma
            .iter()
            .map(|g| 1.0 / g)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut scale = varsigma1;
    loop {
        let beta_bar = (scale * beta_hat).min(beta);
        if beta_bar >= beta * (1.0 - ACT_TOL) || top < beta_bar * (1.0 - ACT_TOL) {
            return beta_bar;
        }
        scale *= varsigma1;
    }
}

/// `max(min(varsigma2 * lambda_max, beta), alpha)`.
pub fn shrink(lambda_max: f64, alpha: f64, beta: f64, varsigma2: f64) -> f64 {
    (varsigma2 * lambda_max).min(beta).max(alpha)
}

pub fn solve_vsmacs(
    inst: &Instance,
    bx: &SpectralBox,
    cfg: &AdaptiveConfig,
) -> Result<SolveReport> {
    solve_vsmacs_traced(inst, bx, cfg, &mut NoTrace)
}

pub fn solve_vsmacs_traced(
    inst: &Instance,
    bx: &SpectralBox,
    cfg: &AdaptiveConfig,
    sink: &mut dyn TraceSink,
) -> Result<SolveReport> {
    cfg.validate()?;
    let n = inst.n();
    let u0 = validate_u0(cfg.u0.as_ref(), n)?;
    let (alpha, beta) = (bx.alpha, bx.beta);
    let rho = inst.rho();

    let start = Instant::now();
    let eig_start = eig_counter::count();
    let mut beta_hat = beta;
    let mut restart_count = 0;
    let mut scheme = AcceleratedScheme::new(clip_projection, u0, (rho * beta).powi(2), 1.0);
    let mut trace = Vec::new();
    let mut iter = 0;

    loop {
        let u_k = scheme.current().clone();
        let mut ev = eval_dual(&u_k, inst, alpha, beta_hat, beta)?;
        let observed_lambda_max = ev.lambda_max;

        let update = match classify(&ev, beta) {
            Activity::Active => Some((
                RestartKind::Escalate,
                escalate(&ev.gamma, beta_hat, beta, cfg.varsigma1),
            )),
            Activity::Inactive if ev.lambda_max <= cfg.varsigma3 * beta_hat => Some((
                RestartKind::Shrink,
                shrink(ev.lambda_max, alpha, beta, cfg.varsigma2),
            )),
            Activity::Inactive => None,
        };
        let restart = update.map(|(kind, new_beta_hat)| {
            let event = RestartEvent {
                kind,
                old_beta_hat: beta_hat,
                new_beta_hat,
            };
            beta_hat = new_beta_hat;
            ev = ev.with_beta_hat(beta_hat);
            scheme.restart(u_k.clone(), (rho * beta_hat).powi(2));
            restart_count += 1;
            event
        });
        debug_assert_eq!(classify(&ev, beta), Activity::Inactive);

        let g_primal = ev.primal_value(inst);
        let gap = ev.f_value - g_primal;
        let rec = TraceRecord {
            k: iter,
            f_dual: ev.f_value,
            g_primal,
            gap,
            aux_gap: None,
            beta_hat,
            restart_count,
            lambda_max: Some(observed_lambda_max),
            restart,
            wallclock_ms: elapsed_ms(&start),
        };
        sink.record(&rec);
        trace.push(rec);

        let status = if gap <= cfg.eps {
            Some(Status::Converged)
        } else if iter >= cfg.max_iter {
            Some(Status::MaxIterReached)
        } else {
            None
        };
        if let Some(status) = status {
            return Ok(SolveReport {
                status,
                iterations: iter,
                final_gap: gap,
                primal_obj: g_primal,
                dual_obj: ev.f_value,
                x_star: ev.x_of_u,
                u_star: u_k,
                beta_hat,
                restart_count,
                eig_calls: eig_counter::count() - eig_start,
                trace,
                total_ms: start.elapsed().as_millis() as u64,
            });
        }

        let u_sd = scheme.step_sd(&ev.grad_f)?;
        scheme.advance(&ev.grad_f, &u_sd)?;
        iter += 1;
    }
}
