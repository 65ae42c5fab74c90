//! Accelerated smooth-minimization scheme with a Euclidean prox-function.
//!
//! Minimizes a convex function with `L`-Lipschitz gradient over a closed
//! convex set `Q` given only a Frobenius projection onto `Q`. With
//! `d(u) = ||u - u0||^2 / 2` both subproblems of the scheme reduce to
//! projections:
//!
//! ```text
//! u_sd = P(u_k - grad_k / L)
//! u_ag = P(u0 - (sigma / L) * sum_{i<=k} (i+1)/2 grad_i)
//! u_{k+1} = (2 u_ag + (k+1) u_sd) / (k+3)
//! ```
//!
//! The engine also maintains the weighted average
//! `avg_k = k/(k+2) avg_{k-1} + 2/(k+2) y_k` of a caller-supplied sequence,
//! which for the dual solvers is the primal certificate.

use crate::error::Result;
use crate::symmat::SymMatrix;

pub(crate) struct AcceleratedScheme<P> {
    project: P,
    lipschitz: f64,
    sigma_mod: f64,
    u0: SymMatrix,
    u: SymMatrix,
    k: usize,
    grad_accum: SymMatrix,
    avg: Option<SymMatrix>,
}

impl<P> AcceleratedScheme<P>
where
    P: Fn(&SymMatrix) -> Result<SymMatrix>,
{
    pub fn new(project: P, u0: SymMatrix, lipschitz: f64, sigma_mod: f64) -> Self {
        let n = u0.n();
        Self {
            project,
            lipschitz,
            sigma_mod,
            u: u0.clone(),
            u0,
            k: 0,
            grad_accum: SymMatrix::zeros(n),
            avg: None,
        }
    }

    /// Current iterate `u_k`.
    pub fn current(&self) -> &SymMatrix {
        &self.u
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Folds `y_k` into the weighted average and returns it.
    pub fn average(&mut self, y: &SymMatrix) -> &SymMatrix {
        let k = self.k as f64;
        let next = match self.avg.take() {
            None => y.clone(),
            Some(prev) => prev.lincomb(k / (k + 2.0), 2.0 / (k + 2.0), y),
        };
        self.avg.insert(next)
    }

    pub fn step_sd(&self, grad: &SymMatrix) -> Result<SymMatrix> {
        (self.project)(&self.u.add_scaled(-1.0 / self.lipschitz, grad))
    }

    /// Steps 3-5: accumulate the gradient, solve the prox subproblem, and
    /// move to `u_{k+1}`. Returns `u_ag`.
    pub fn advance(&mut self, grad: &SymMatrix, u_sd: &SymMatrix) -> Result<SymMatrix> {
        let k = self.k as f64;
        self.grad_accum = self.grad_accum.add_scaled(0.5 * (k + 1.0), grad);
        let u_ag = (self.project)(
            &self
                .u0
                .add_scaled(-self.sigma_mod / self.lipschitz, &self.grad_accum),
        )?;
        self.u = u_ag.lincomb(2.0 / (k + 3.0), (k + 1.0) / (k + 3.0), u_sd);
        self.k += 1;
        Ok(u_ag)
    }

    /// Starts the scheme afresh from `u0` with a new Lipschitz constant.
    pub fn restart(&mut self, u0: SymMatrix, lipschitz: f64) {
        self.grad_accum = SymMatrix::zeros(u0.n());
        self.u = u0.clone();
        self.u0 = u0;
        self.lipschitz = lipschitz;
        self.k = 0;
        self.avg = None;
    }
}
