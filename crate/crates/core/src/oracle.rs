//! Closed-form evaluation of the smooth dual function
//!
//! ```text
//! f(U) = max { log det X - <Sigma + rho U, X> : alpha I <= X <= beta_hat I }
//! ```
//!
//! from a single eigendecomposition `Sigma + rho U = Q diag(gamma) Q^T`. The
//! maximizer shares the eigenvectors of `Sigma + rho U`, with eigenvalues
//! `lambda_i = clamp(1 / gamma_i, alpha, beta_hat)` when `gamma_i > 0` and
//! `beta_hat` otherwise. The gradient is `-rho X(U)`.

use crate::error::{CovselError, Result};
use crate::problem::{membership_u, Instance};
use crate::symmat::{abs_sum, eig_sym, EigDecomposition, SymMatrix};

/// Relative tolerance for deciding that the top eigenvalue sits on `beta_hat`.
pub const ACT_TOL: f64 = 1e-9;

/// Result of one dual oracle call.
#[derive(Debug, Clone)]
pub struct OracleEval {
    /// Primal maximizer `X_{beta_hat}(U)`.
    pub x_of_u: SymMatrix,
    pub f_value: f64,
    pub grad_f: SymMatrix,
    /// Eigenvalues of `Sigma + rho U`, ascending.
    pub gamma: Vec<f64>,
    /// Clamped eigenvalues of `x_of_u`, aligned with `gamma`.
    pub lambda: Vec<f64>,
    pub lambda_max: f64,
    pub is_active: bool,
    pub beta_hat: f64,
    alpha: f64,
    beta_global: f64,
    rho: f64,
    eig: EigDecomposition,
}

fn clamp_eigs(gamma: &[f64], alpha: f64, beta_hat: f64) -> Vec<f64> {
    gamma
        .iter()
        .map(|&g| {
            if g > 0.0 {
                (1.0 / g).max(alpha).min(beta_hat)
            } else {
                beta_hat
            }
        })
        .collect()
}

/// Active iff the top eigenvalue hits the working cap and the cap is below
/// the global `beta`.
pub fn is_active(lambda_max: f64, beta_hat: f64, beta_global: f64) -> bool {
    lambda_max >= beta_hat * (1.0 - ACT_TOL) && beta_hat < beta_global * (1.0 - ACT_TOL)
}

impl OracleEval {
    fn from_eig(
        eig: EigDecomposition,
        rho: f64,
        alpha: f64,
        beta_hat: f64,
        beta_global: f64,
    ) -> Self {
        let lambda = clamp_eigs(&eig.gamma, alpha, beta_hat);
        let x_of_u = eig.assemble(&lambda);
        let f_value = lambda.iter().map(|l| l.ln()).sum::<f64>()
            - eig
                .gamma
                .iter()
                .zip(&lambda)
                .map(|(g, l)| g * l)
                .sum::<f64>();
        let grad_f = x_of_u.scale(-rho);
        let lambda_max = lambda.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            is_active: is_active(lambda_max, beta_hat, beta_global),
            x_of_u,
            f_value,
            grad_f,
            gamma: eig.gamma.clone(),
            lambda,
            lambda_max,
            beta_hat,
            alpha,
            beta_global,
            rho,
            eig,
        }
    }

    /// Re-evaluates at the same `U` with a different box top, reusing the
    /// eigendecomposition.
    pub fn with_beta_hat(&self, beta_hat: f64) -> Self {
        Self::from_eig(
            self.eig.clone(),
            self.rho,
            self.alpha,
            beta_hat,
            self.beta_global,
        )
    }

    pub fn beta_global(&self) -> f64 {
        self.beta_global
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `g(X(U))`, reusing the known eigenvalues of `X(U)` for the log-det.
    pub fn primal_value(&self, inst: &Instance) -> f64 {
        let logdet: f64 = self.lambda.iter().map(|l| l.ln()).sum();
        logdet - inst.sigma().dot(&self.x_of_u) - inst.rho() * abs_sum(&self.x_of_u)
    }

    /// `f(U) - g(X(U))`, the one-eigendecomposition gap.
    pub fn self_gap(&self, inst: &Instance) -> f64 {
        self.f_value - self.primal_value(inst)
    }
}

/// Evaluates `X_{beta_hat}(U)`, `f_{beta_hat}(U)` and its gradient.
pub fn eval_dual(
    u: &SymMatrix,
    inst: &Instance,
    alpha: f64,
    beta_hat: f64,
    beta_global: f64,
) -> Result<OracleEval> {
    if u.n() != inst.n() {
        return Err(CovselError::DimensionMismatch {
            expected: inst.n(),
            got: u.n(),
        });
    }
    if !membership_u(u) {
        return Err(CovselError::InvalidInput(
            "dual point outside the unit box".into(),
        ));
    }
    if !(alpha > 0.0 && alpha <= beta_hat && beta_hat <= beta_global) {
        return Err(CovselError::InvalidInput(format!(
            "need 0 < alpha <= beta_hat <= beta, got {alpha}, {beta_hat}, {beta_global}"
        )));
    }
    let m = inst.sigma().add_scaled(inst.rho(), u);
    let eig = eig_sym(&m)?;
    Ok(OracleEval::from_eig(
        eig,
        inst.rho(),
        alpha,
        beta_hat,
        beta_global,
    ))
}

/// `g(X) = log det X - <Sigma, X> - rho e^T |X| e`.
pub fn eval_primal(x: &SymMatrix, inst: &Instance) -> Result<f64> {
    if x.n() != inst.n() {
        return Err(CovselError::DimensionMismatch {
            expected: inst.n(),
            got: x.n(),
        });
    }
    Ok(x.log_det_pd()? - inst.sigma().dot(x) - inst.rho() * abs_sum(x))
}

/// `f_{beta_hat}(u) - g(x)`; nonnegative up to round-off by weak duality
/// whenever `x` lies in the `[alpha, beta_hat]` box.
pub fn duality_gap(
    u: &SymMatrix,
    x: &SymMatrix,
    inst: &Instance,
    alpha: f64,
    beta_hat: f64,
    beta_global: f64,
) -> Result<f64> {
    let f = eval_dual(u, inst, alpha, beta_hat, beta_global)?.f_value;
    Ok(f - eval_primal(x, inst)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn diag_inst(d: &[f64], rho: f64) -> Instance {
        Instance::new(SymMatrix::from_diagonal(d).unwrap(), rho).unwrap()
    }

    fn random_inst(n: usize, rng: &mut ChaCha8Rng) -> Instance {
        let a = SymMatrix::from_upper_fn(n, |_, _| rng.gen_range(-1.0..1.0)).unwrap();
        let sigma = SymMatrix::from_computed(a.as_dmatrix() * a.as_dmatrix()).shift_diagonal(0.1);
        Instance::new(sigma, rng.gen_range(0.1..1.0)).unwrap()
    }

    fn random_u(n: usize, lim: f64, rng: &mut ChaCha8Rng) -> SymMatrix {
        SymMatrix::from_upper_fn(n, |_, _| rng.gen_range(-lim..lim)).unwrap()
    }

    #[test]
    fn diagonal_evaluation() {
        let inst = diag_inst(&[1.0, 2.0], 0.5);
        let e = eval_dual(&SymMatrix::zeros(2), &inst, 0.1, 10.0, 10.0).unwrap();
        assert_eq!(e.gamma, vec![1.0, 2.0]);
        assert_eq!(e.lambda, vec![1.0, 0.5]);
        assert!(
            e.x_of_u
                .max_abs_diff(&SymMatrix::from_diagonal(&[1.0, 0.5]).unwrap())
                < 1e-15
        );
        assert!((e.f_value - (-2.0 + 0.5f64.ln())).abs() < 1e-12);
        assert!((e.f_value + 2.693147).abs() < 1e-6);
        let g = SymMatrix::from_diagonal(&[-0.5, -0.25]).unwrap();
        assert!(e.grad_f.max_abs_diff(&g) < 1e-15);
        assert!(!e.is_active);
    }

    #[test]
    fn clamp_upper_for_small_gamma() {
        let inst = diag_inst(&[0.05, 1.0], 0.5);
        let e = eval_dual(&SymMatrix::zeros(2), &inst, 0.1, 10.0, 10.0).unwrap();
        assert_eq!(e.lambda[0], 10.0);
    }

    #[test]
    fn clamp_nonpositive_gamma_to_top() {
        let inst = diag_inst(&[0.0, 1.0], 1.0);
        let u = SymMatrix::from_diagonal(&[-1.0, 0.0]).unwrap();
        let e = eval_dual(&u, &inst, 0.1, 10.0, 10.0).unwrap();
        assert_eq!(e.gamma[0], -1.0);
        assert_eq!(e.lambda[0], 10.0);
        assert_eq!(e.lambda_max, 10.0);
        // beta_hat == beta, so never active
        assert!(!e.is_active);
        let e = eval_dual(&u, &inst, 0.1, 5.0, 10.0).unwrap();
        assert!(e.is_active);
    }

    #[test]
    fn gradient_is_exactly_minus_rho_x() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inst = random_inst(4, &mut rng);
        let u = random_u(4, 1.0, &mut rng);
        let e = eval_dual(&u, &inst, 0.1, 10.0, 10.0).unwrap();
        assert_eq!(e.grad_f, e.x_of_u.scale(-inst.rho()));
    }

    #[test]
    fn rejects_bad_inputs() {
        let inst = diag_inst(&[1.0, 1.0], 0.5);
        let u = SymMatrix::from_element(2, 1.5).unwrap();
        assert!(eval_dual(&u, &inst, 0.1, 10.0, 10.0).is_err());
        assert!(eval_dual(&SymMatrix::zeros(3), &inst, 0.1, 10.0, 10.0).is_err());
        assert!(eval_dual(&SymMatrix::zeros(2), &inst, 0.1, 20.0, 10.0).is_err());
    }

    #[test]
    fn primal_value_cases() {
        let i2 = SymMatrix::identity(2);
        // rho must be positive for an Instance; use a negligible penalty for the rho = 0 case
        let inst = Instance::new(SymMatrix::identity(2), 1e-300).unwrap();
        assert!((eval_primal(&i2, &inst).unwrap() + 2.0).abs() < 1e-12);
        let inst = Instance::new(SymMatrix::zeros(2), 1.0).unwrap();
        assert_eq!(eval_primal(&i2, &inst).unwrap(), -2.0);
        let inst = diag_inst(&[1.0], 0.5);
        let x = SymMatrix::from_diagonal(&[2.0 / 3.0]).unwrap();
        let g = eval_primal(&x, &inst).unwrap();
        assert!((g - ((2.0f64 / 3.0).ln() - 1.0)).abs() < 1e-12);
        assert!((g + 1.405465).abs() < 1e-6);
        let bad = SymMatrix::from_diagonal(&[-1.0, 1.0]).unwrap();
        assert!(matches!(
            eval_primal(&bad, &Instance::new(SymMatrix::identity(2), 1.0).unwrap()),
            Err(CovselError::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn gap_pinned_box() {
        let inst = diag_inst(&[1.0], 0.5);
        let a = 2.0 / 3.0;
        let x = SymMatrix::from_diagonal(&[a]).unwrap();
        // the saddle point's dual component is U = sign(X) = 1
        let u_opt = SymMatrix::from_diagonal(&[1.0]).unwrap();
        let gap = duality_gap(&u_opt, &x, &inst, a, a, a).unwrap();
        assert!(gap.abs() < 1e-14, "{gap}");
        let gap = duality_gap(&SymMatrix::zeros(1), &x, &inst, a, a, a).unwrap();
        assert!((gap - 1.0 / 3.0).abs() < 1e-12, "{gap}");
    }

    #[test]
    fn self_gap_matches_duality_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let inst = random_inst(5, &mut rng);
        let u = random_u(5, 1.0, &mut rng);
        let e = eval_dual(&u, &inst, 0.1, 10.0, 10.0).unwrap();
        let full = duality_gap(&u, &e.x_of_u, &inst, 0.1, 10.0, 10.0).unwrap();
        assert!((e.self_gap(&inst) - full).abs() < 1e-9 * (1.0 + full.abs()));
    }

    #[test]
    fn with_beta_hat_matches_fresh_eval() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let inst = random_inst(4, &mut rng);
        let u = random_u(4, 1.0, &mut rng);
        let e = eval_dual(&u, &inst, 0.05, 0.5, 10.0).unwrap();
        let r = e.with_beta_hat(3.0);
        let fresh = eval_dual(&u, &inst, 0.05, 3.0, 10.0).unwrap();
        assert!((r.f_value - fresh.f_value).abs() < 1e-12);
        assert!(r.x_of_u.max_abs_diff(&fresh.x_of_u) < 1e-12);
        assert_eq!(r.is_active, fresh.is_active);
    }

    #[test]
    fn finite_difference_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let h = 1e-5;
        for n in 2..=6 {
            let inst = random_inst(n, &mut rng);
            let u = random_u(n, 0.9, &mut rng);
            let (alpha, beta) = (0.05, 20.0);
            let e = eval_dual(&u, &inst, alpha, beta, beta).unwrap();
            for i in 0..n {
                for j in i..n {
                    // symmetric perturbation of the (i, j) and (j, i) pair
                    let mut d = SymMatrix::zeros(n).as_dmatrix().clone();
                    d[(i, j)] = 1.0;
                    d[(j, i)] = 1.0;
                    let d = SymMatrix::symmetrize(d).unwrap().0;
                    let fp = eval_dual(&u.add_scaled(h, &d), &inst, alpha, beta, beta)
                        .unwrap()
                        .f_value;
                    let fm = eval_dual(&u.add_scaled(-h, &d), &inst, alpha, beta, beta)
                        .unwrap()
                        .f_value;
                    let fd = (fp - fm) / (2.0 * h);
                    let an = e.grad_f.dot(&d);
                    assert!(
                        (fd - an).abs() <= 1e-4 * an.abs().max(1e-3),
                        "n={n} ({i},{j}) fd={fd} an={an}"
                    );
                }
            }
        }
    }

    #[test]
    fn lipschitz_witness() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for n in 2..=6 {
            let inst = random_inst(n, &mut rng);
            let bh = rng.gen_range(1.0..10.0);
            for _ in 0..10 {
                let u = random_u(n, 1.0, &mut rng);
                let v = random_u(n, 1.0, &mut rng);
                let gu = eval_dual(&u, &inst, 0.1, bh, 10.0).unwrap().grad_f;
                let gv = eval_dual(&v, &inst, 0.1, bh, 10.0).unwrap().grad_f;
                let lhs = gu.sub(&gv).frobenius_norm();
                let rhs = inst.rho().powi(2) * bh * bh * u.sub(&v).frobenius_norm();
                assert!(lhs <= rhs * (1.0 + 1e-6), "{lhs} > {rhs}");
            }
        }
    }

    #[test]
    fn weak_duality_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=5 {
            let inst = random_inst(n, &mut rng);
            for _ in 0..5 {
                let u = random_u(n, 1.0, &mut rng);
                let x = eval_dual(&random_u(n, 1.0, &mut rng), &inst, 0.1, 10.0, 10.0)
                    .unwrap()
                    .x_of_u;
                let f = eval_dual(&u, &inst, 0.1, 10.0, 10.0).unwrap().f_value;
                let gap = duality_gap(&u, &x, &inst, 0.1, 10.0, 10.0).unwrap();
                assert!(gap >= -1e-8 * (1.0 + f.abs()));
            }
        }
    }
}
