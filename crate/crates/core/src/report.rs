use serde::Serialize;

use crate::symmat::SymMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIterReached,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIterReached => "max_iter_reached",
        }
    }
}

/// Box-top change in the adaptive solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RestartEvent {
    pub kind: RestartKind,
    pub old_beta_hat: f64,
    pub new_beta_hat: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RestartKind {
    Escalate,
    Shrink,
}

/// One line of a solver trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    /// Global iteration index (oracle evaluations so far minus one).
    pub k: usize,
    pub f_dual: f64,
    pub g_primal: f64,
    /// The gap tested against the termination threshold.
    pub gap: f64,
    /// `f(U_k) - g(X(U_k))` when it is not the termination gap.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aux_gap: Option<f64>,
    pub beta_hat: f64,
    pub restart_count: usize,
    /// Top eigenvalue of the oracle's primal point at this iterate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restart: Option<RestartEvent>,
    pub wallclock_ms: f64,
}

/// Outcome of a solve: the certified pair plus the iteration trace.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: Status,
    pub iterations: usize,
    pub final_gap: f64,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub x_star: SymMatrix,
    pub u_star: SymMatrix,
    /// Box top in force when the solve stopped (always `beta` outside the
    /// adaptive solver).
    pub beta_hat: f64,
    pub restart_count: usize,
    pub eig_calls: u64,
    pub trace: Vec<TraceRecord>,
    pub total_ms: u64,
}

impl SolveReport {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }
}

/// Receives trace records as they are produced.
pub trait TraceSink {
    fn record(&mut self, rec: &TraceRecord);
}

impl<F: FnMut(&TraceRecord)> TraceSink for F {
    fn record(&mut self, rec: &TraceRecord) {
        self(rec)
    }
}

/// Sink that drops everything.
pub struct NoTrace;

impl TraceSink for NoTrace {
    fn record(&mut self, _rec: &TraceRecord) {}
}
