//! Seeded random covariance-selection instances.
//!
//! 1. `A`: sparse symmetric, each off-diagonal pair nonzero with probability
//!    `density`, value uniform on `(-1, 1)`; `A_ii = 1 + sum_{j != i} |A_ij|`
//!    so `A` is strictly diagonally dominant with positive diagonal.
//! 2. `V`: symmetric with i.i.d. uniform `(-1, 1)` upper-triangle entries.
//! 3. `B = A^{-1} + tau V`.
//! 4. `Sigma = B - min(lambda_min(B) - theta, 0) I`, so `lambda_min(Sigma) >= theta`.
//!
//! Randomness comes from `ChaCha20Rng::seed_from_u64(seed)` (rand_chacha
//! 0.3). Draw order: the upper triangle of `A` row by row (`i < j`), one
//! uniform `[0, 1)` draw for the sparsity test followed, when it is below
//! `density`, by one uniform `(-1, 1)` value; then the upper triangle of `V`
//! row by row including the diagonal.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{CovselError, Result};
use crate::problem::Instance;
use crate::symmat::SymMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub n: usize,
    pub density: f64,
    pub tau: f64,
    pub theta: f64,
    pub seed: u64,
    /// Penalty weight attached to the generated instance.
    pub rho: f64,
}

impl GenParams {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            density: 0.01,
            tau: 0.15,
            theta: 1.0e-4,
            seed,
            rho: 0.5,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(CovselError::InvalidInput("n must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.density) {
            return Err(CovselError::InvalidInput(format!(
                "density {} not in [0, 1]",
                self.density
            )));
        }
        if !(self.theta > 0.0) || !self.tau.is_finite() || !self.theta.is_finite() {
            return Err(CovselError::InvalidInput(
                "theta must be positive and tau finite".into(),
            ));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(CovselError::InvalidInput(format!(
                "rho must be positive, got {}",
                self.rho
            )));
        }
        Ok(())
    }
}

/// Generated instance together with construction diagnostics.
#[derive(Debug, Clone)]
pub struct Generated {
    pub instance: Instance,
    pub a: SymMatrix,
    /// Number of nonzero off-diagonal pairs `(i < j)` in `A`.
    pub a_offdiag_pairs: usize,
    pub lambda_min_b: f64,
    pub lambda_min_sigma: f64,
}

impl Generated {
    /// Fraction of off-diagonal pairs of `A` that are nonzero.
    pub fn a_density(&self) -> f64 {
        let n = self.a.n();
        if n < 2 {
            return 0.0;
        }
        self.a_offdiag_pairs as f64 / (n * (n - 1) / 2) as f64
    }
}

pub fn generate(p: &GenParams) -> Result<Instance> {
    Ok(generate_detailed(p)?.instance)
}

pub fn generate_detailed(p: &GenParams) -> Result<Generated> {
    p.validate()?;
    let n = p.n;
    let mut rng = ChaCha20Rng::seed_from_u64(p.seed);

    let mut off = vec![vec![0.0f64; n]; n];
    let mut pairs = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < p.density {
                let v = rng.gen_range(-1.0..1.0);
                off[i][j] = v;
                off[j][i] = v;
                pairs += 1;
            }
        }
    }
    let a = SymMatrix::from_upper_fn(n, |i, j| {
        if i == j {
            1.0 + off[i].iter().map(|v| v.abs()).sum::<f64>()
        } else {
            off[i][j]
        }
    })?;

    let mut v_upper = vec![vec![0.0f64; n]; n];
    for (i, row) in v_upper.iter_mut().enumerate() {
        for entry in row.iter_mut().skip(i) {
            *entry = rng.gen_range(-1.0..1.0);
        }
    }
    let v = SymMatrix::from_upper_fn(n, |i, j| v_upper[i][j])?;

    let b = a.inverse_pd()?.add_scaled(p.tau, &v);
    let lambda_min_b = b.lambda_min()?;
    let sigma = b.shift_diagonal(-(lambda_min_b - p.theta).min(0.0));
    let lambda_min_sigma = sigma.lambda_min()?;
    Ok(Generated {
        instance: Instance::new(sigma, p.rho)?,
        a,
        a_offdiag_pairs: pairs,
        lambda_min_b,
        lambda_min_sigma,
    })
}
