//! Problem data, the primal spectral box and the dual unit box, and the a
//! priori eigenvalue bounds on the penalized maximum-likelihood estimate.

use serde::{Deserialize, Serialize};

use crate::error::{CovselError, Result};
use crate::symmat::{abs_sum, eig_sym, SymMatrix};

/// Sample covariance plus the l1 penalty weight.
#[derive(Debug, Clone)]
pub struct Instance {
    sigma: SymMatrix,
    rho: f64,
}

impl Instance {
    /// Validates that `sigma` is PSD up to round-off and `rho > 0`.
    pub fn new(sigma: SymMatrix, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(CovselError::InvalidInput(format!(
                "rho must be positive, got {rho}"
            )));
        }
        let e = eig_sym(&sigma)?;
        let lo = e.gamma[0];
        let hi = e.gamma[e.gamma.len() - 1];
        let norm = lo.abs().max(hi.abs());
        if lo < -1e-8 * (1.0 + norm) {
            return Err(CovselError::InvalidInput(format!(
                "sample covariance is not PSD (lambda_min = {lo:e})"
            )));
        }
        Ok(Self { sigma, rho })
    }

    pub fn sigma(&self) -> &SymMatrix {
        &self.sigma
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn n(&self) -> usize {
        self.sigma.n()
    }
}

/// Eigenvalue bounds `alpha I <= X <= beta I` on the primal variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralBox {
    pub alpha: f64,
    pub beta: f64,
}

impl SpectralBox {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= beta && beta.is_finite()) {
            return Err(CovselError::InvalidInput(format!(
                "spectral box needs 0 < alpha <= beta < inf, got [{alpha}, {beta}]"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// Condition bound `beta / alpha`.
    pub fn kappa(&self) -> f64 {
        self.beta / self.alpha
    }
}

/// Default eigenvalue box guaranteed to contain the unconstrained optimum.
///
/// `alpha = 1 / (||Sigma|| + n rho)` and
/// `beta = min((n - alpha Tr Sigma) / rho, eta)`, where `eta` uses
/// `Sigma^{-1}` when Sigma is numerically invertible and
/// `(Sigma + rho/2 I)^{-1}` otherwise.
pub fn compute_bounds(inst: &Instance) -> Result<SpectralBox> {
    let n = inst.n() as f64;
    let rho = inst.rho();
    let sigma = inst.sigma();
    let e = eig_sym(sigma)?;
    let lmin = e.gamma[0];
    let norm = lmin.abs().max(e.gamma[e.gamma.len() - 1].abs());

    let alpha = 1.0 / (norm + n * rho);
    let trace_bound = (n - alpha * sigma.trace()) / rho;

    let eta = if lmin > 1e-10 * (1.0 + norm) {
        let inv_vals: Vec<f64> = e.gamma.iter().map(|g| 1.0 / g).collect();
        let inv = e.assemble(&inv_vals);
        let inv_norm = 1.0 / lmin;
        let by_norm = (n - rho * n.sqrt() * alpha) * inv_norm - (n - 1.0) * alpha;
        abs_sum(&inv).min(by_norm)
    } else {
        let half_vals: Vec<f64> = e.gamma.iter().map(|g| 1.0 / (g + 0.5 * rho)).collect();
        let m = e.assemble(&half_vals);
        2.0 * abs_sum(&m) - m.trace()
    };

    let mut beta = trace_bound.min(eta);
    if beta < alpha {
        if beta >= alpha * (1.0 - 1e-10) {
            beta = alpha;
        } else {
            return Err(CovselError::Internal(format!(
                "computed beta {beta:e} < alpha {alpha:e}"
            )));
        }
    }
    SpectralBox::new(alpha, beta)
}

fn box_tol(b: &SpectralBox) -> f64 {
    1e-8 * (1.0 + b.beta)
}

/// `alpha I <= x <= beta I` up to `1e-8 (1 + beta)`.
pub fn membership_x(x: &SymMatrix, b: &SpectralBox) -> Result<bool> {
    let e = eig_sym(x)?;
    let tol = box_tol(b);
    Ok(b.alpha - tol <= e.gamma[0] && e.gamma[e.gamma.len() - 1] <= b.beta + tol)
}

/// Same test given the eigenvalues of `x`.
pub fn eigs_in_box(gamma: &[f64], b: &SpectralBox) -> bool {
    let tol = box_tol(b);
    gamma
        .iter()
        .all(|&g| b.alpha - tol <= g && g <= b.beta + tol)
}

/// Every entry of `u` lies in `[-1, 1]` (up to `1e-12`).
pub fn membership_u(u: &SymMatrix) -> bool {
    u.max_abs() <= 1.0 + 1e-12
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(diag: &[f64], rho: f64) -> Instance {
        Instance::new(SymMatrix::from_diagonal(diag).unwrap(), rho).unwrap()
    }

    #[test]
    fn bounds_identity_n2() {
        let b = compute_bounds(&inst(&[1.0, 1.0], 0.5)).unwrap();
        assert!((b.alpha - 0.5).abs() < 1e-15);
        // (2 - 0.5*sqrt(2)*0.5) * 1 - 0.5
        let expect = 2.0 - 0.25 * 2f64.sqrt() - 0.5;
        assert!((b.beta - expect).abs() < 1e-12);
        assert!((b.beta - 1.146447).abs() < 1e-6);
    }

    #[test]
    fn bounds_collapse_at_n1() {
        let b = compute_bounds(&inst(&[1.0], 0.5)).unwrap();
        assert!((b.alpha - 2.0 / 3.0).abs() < 1e-15);
        assert!((b.beta - 2.0 / 3.0).abs() < 1e-15);
        assert!(b.alpha <= b.beta);
    }

    #[test]
    fn bounds_singular_branch() {
        let b = compute_bounds(&inst(&[0.0], 1.0)).unwrap();
        assert_eq!(b.alpha, 1.0);
        assert_eq!(b.beta, 1.0);
    }

    #[test]
    fn bounds_singular_n2_uses_shifted_inverse() {
        // Sigma = diag(0, 0), rho = 1: alpha = 1/2, trace bound = 2,
        // eta = 2 * e^T|2I|e - Tr(2I) = 8 - 4 = 4.
        let b = compute_bounds(&inst(&[0.0, 0.0], 1.0)).unwrap();
        assert_eq!(b.alpha, 0.5);
        assert_eq!(b.beta, 2.0);
    }

    #[test]
    fn bounds_scalar_consistency() {
        for (s, rho) in [(0.3, 0.1), (2.0, 0.5), (10.0, 3.0)] {
            let b = compute_bounds(&inst(&[s], rho)).unwrap();
            let x = 1.0 / (s + rho);
            assert!((b.alpha - x).abs() < 1e-12 * x);
            assert!((b.beta - x).abs() < 1e-12 * x);
        }
    }

    #[test]
    fn instance_validation() {
        let s = SymMatrix::from_diagonal(&[1.0, -0.5]).unwrap();
        assert!(Instance::new(s, 0.5).is_err());
        let s = SymMatrix::identity(2);
        assert!(Instance::new(s.clone(), 0.0).is_err());
        assert!(Instance::new(s.clone(), f64::NAN).is_err());
        let tiny_neg = SymMatrix::from_diagonal(&[1.0, -1e-12]).unwrap();
        assert!(Instance::new(tiny_neg, 0.5).is_ok());
    }

    #[test]
    fn box_validation() {
        assert!(SpectralBox::new(0.0, 1.0).is_err());
        assert!(SpectralBox::new(2.0, 1.0).is_err());
        assert!(SpectralBox::new(1.0, f64::INFINITY).is_err());
        assert!(SpectralBox::new(1.0, 1.0).is_ok());
        assert_eq!(SpectralBox::new(0.1, 10.0).unwrap().kappa(), 100.0);
    }

    #[test]
    fn membership_x_cases() {
        let b = SpectralBox::new(0.5, 2.0).unwrap();
        assert!(membership_x(&SymMatrix::identity(3), &b).unwrap());
        let x = SymMatrix::from_diagonal(&[3.0, 1.0]).unwrap();
        assert!(!membership_x(&x, &b).unwrap());
        assert!(membership_x(&SymMatrix::identity(2).scale(0.5), &b).unwrap());
        assert!(membership_x(&SymMatrix::identity(2).scale(2.0), &b).unwrap());
    }

    #[test]
    fn membership_u_cases() {
        assert!(membership_u(&SymMatrix::zeros(3)));
        assert!(membership_u(&SymMatrix::from_element(3, 1.0).unwrap()));
        assert!(membership_u(&SymMatrix::from_element(3, -1.0).unwrap()));
        let mut rows = vec![vec![0.0; 3]; 3];
        rows[1][2] = 1.5;
        rows[2][1] = 1.5;
        assert!(!membership_u(&SymMatrix::from_rows_checked(&rows).unwrap()));
    }
}
