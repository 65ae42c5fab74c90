//! Property suites behind `covsel check`, each comparing the solver
//! machinery against an independent computation:
//!
//! - `gradient`: central finite differences of the dual function against
//!   the closed-form gradient `-rho X(U)`;
//! - `oracle`: the closed-form dual maximizer against projected-gradient
//!   ascent on `log det X - <Sigma + rho U, X>` over the spectral box;
//! - `gap_bound`: every iteration of the dual solver against the
//!   `4 L D / ((k+1)(k+2))` gap bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::instgen::{generate, GenParams};
use crate::oracle::eval_dual;
use crate::problem::{Instance, SpectralBox};
use crate::smacs::{gap_bound, prox_diameter, solve_smacs, SolverConfig};
use crate::symmat::{eig_sym, SymMatrix};

#[derive(Debug, Clone)]
pub struct CheckConfig {
    pub seed: u64,
    /// Dimensions for the oracle and gap-bound suites.
    pub sizes: Vec<usize>,
    pub gradient_cases: usize,
    pub oracle_cases_per_size: usize,
    /// Added to every entry of the analytic gradient before comparison.
    /// Nonzero only to demonstrate that the gradient suite can fail.
    pub gradient_perturbation: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            sizes: vec![2, 3, 4, 5],
            gradient_cases: 50,
            oracle_cases_per_size: 20,
            gradient_perturbation: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: usize,
    pub failed: usize,
    /// Largest observed error relative to the suite's threshold (pass iff <= 1).
    pub worst_ratio: f64,
    pub failures: Vec<String>,
}

impl SuiteResult {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            passed: 0,
            failed: 0,
            worst_ratio: 0.0,
            failures: Vec::new(),
        }
    }

    fn record(&mut self, ratio: f64, describe: impl FnOnce() -> String) {
        self.worst_ratio = self.worst_ratio.max(ratio);
        if ratio <= 1.0 {
            self.passed += 1;
        } else {
            self.failed += 1;
            if self.failures.len() < 10 {
                self.failures.push(describe());
            }
        }
    }

    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

/// Random PSD covariance `A A^T / n + shift I` with `A` uniform on (-1, 1).
pub fn random_covariance(n: usize, shift: f64, rng: &mut impl Rng) -> Result<SymMatrix> {
    let a = nalgebra::DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let s = (&a * a.transpose()) / n as f64;
    Ok(SymMatrix::symmetrize(s)?.0.shift_diagonal(shift))
}

pub fn random_unit_box(n: usize, lim: f64, rng: &mut impl Rng) -> Result<SymMatrix> {
    SymMatrix::from_upper_fn(n, |_, _| rng.gen_range(-lim..lim))
}

/// Maximizes `log det X - <c, X>` over `alpha I <= X <= beta I` by
/// accelerated projected gradient ascent, stopped once the objective is
/// certified within `1e-12` of optimal. Returns the maximizer and value.
pub fn brute_force_dual(c: &SymMatrix, alpha: f64, beta: f64) -> Result<(SymMatrix, f64)> {
    let n = c.n();
    let project = |m: &SymMatrix| -> Result<SymMatrix> {
        let e = eig_sym(m)?;
        let vals: Vec<f64> = e.gamma.iter().map(|g| g.clamp(alpha, beta)).collect();
        Ok(e.assemble(&vals))
    };
    let objective = |x: &SymMatrix| -> Result<f64> { Ok(x.log_det_pd()? - c.dot(x)) };
    // gradient X^{-1} - C is (1/alpha^2)-Lipschitz; the objective is (1/beta^2)-strongly concave
    let step = alpha * alpha;
    let kappa = beta / alpha;
    let momentum = (kappa - 1.0) / (kappa + 1.0);

    let mut x = SymMatrix::identity(n).scale(0.5 * (alpha + beta));
    let mut fx = objective(&x)?;
    let mut y = x.clone();
    for it in 0..400_000 {
        if it % 16 == 0 {
            // gradient mapping G = (x+ - x) / step certifies f* - f(x+) <= beta^2 ||G||^2 / 2
            let g = x.inverse_pd()?.sub(c);
            let x_plus = project(&x.add_scaled(step, &g))?;
            let mapped = x_plus.sub(&x).frobenius_norm() / step;
            if 0.5 * beta * beta * mapped * mapped <= 1e-12 {
                x = x_plus;
                break;
            }
        }
        let grad = y.inverse_pd()?.sub(c);
        let next = project(&y.add_scaled(step, &grad))?;
        let f_next = objective(&next)?;
        if f_next < fx - 1e-15 * fx.abs() {
            // momentum overshot: restart from the last accepted point
            y = x.clone();
            continue;
        }
        // extrapolated point is pulled back so it stays positive definite
        y = project(&next.add_scaled(momentum, &next.sub(&x)))?;
        x = next;
        fx = f_next;
    }
    let v = objective(&x)?;
    Ok((x, v))
}

pub fn gradient_suite(cfg: &CheckConfig) -> Result<SuiteResult> {
    let mut res = SuiteResult::new("gradient");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let h = 1e-5;
    let tol = 1e-4;
    for case in 0..cfg.gradient_cases {
        let n = 2 + case % 5;
        let inst = Instance::new(
            random_covariance(n, 0.1, &mut rng)?,
            rng.gen_range(0.1..1.0),
        )?;
        let u = random_unit_box(n, 0.9, &mut rng)?;
        let (alpha, beta) = (0.1, 10.0);
        let grad = eval_dual(&u, &inst, alpha, beta, beta)?
            .grad_f
            .map_entries(|g| g + cfg.gradient_perturbation);
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let dir =
                    SymMatrix::from_upper_fn(n, |a, b| if (a, b) == (i, j) { 1.0 } else { 0.0 })?;
                let fp = eval_dual(&u.add_scaled(h, &dir), &inst, alpha, beta, beta)?.f_value;
                let fm = eval_dual(&u.add_scaled(-h, &dir), &inst, alpha, beta, beta)?.f_value;
                let mult = if i == j { 1.0 } else { 2.0 };
                let fd = (fp - fm) / (2.0 * h) / mult;
                let an = grad.get(i, j);
                let rel = (fd - an).abs() / an.abs().max(1e-6);
                worst = worst.max(rel / tol);
            }
        }
        res.record(worst, || {
            format!("case {case} (n={n}): relative error {:.3e}", worst * tol)
        });
    }
    Ok(res)
}

pub fn oracle_suite(cfg: &CheckConfig) -> Result<SuiteResult> {
    let mut res = SuiteResult::new("oracle");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9);
    let tol = 1e-6;
    for &n in &cfg.sizes {
        for case in 0..cfg.oracle_cases_per_size {
            let inst = Instance::new(
                random_covariance(n, 0.05, &mut rng)?,
                rng.gen_range(0.05..1.0),
            )?;
            let u = random_unit_box(n, 1.0, &mut rng)?;
            let alpha = rng.gen_range(0.05..0.5);
            let beta = rng.gen_range(2.0..10.0);
            let ev = eval_dual(&u, &inst, alpha, beta, beta)?;
            let c = inst.sigma().add_scaled(inst.rho(), &u);
            let (_, brute) = brute_force_dual(&c, alpha, beta)?;
            let err = (ev.f_value - brute).abs();
            res.record(err / tol, || {
                format!("n={n} case {case}: |f - brute| = {err:.3e}")
            });
        }
    }
    Ok(res)
}

pub fn gap_bound_suite(cfg: &CheckConfig) -> Result<SuiteResult> {
    let mut res = SuiteResult::new("gap_bound");
    let bx = SpectralBox::new(0.1, 10.0)?;
    for &n in &cfg.sizes {
        for rep in 0..2u64 {
            let inst = generate(&GenParams::new(n, cfg.seed.wrapping_add(rep)))?;
            let report = solve_smacs(&inst, &bx, &SolverConfig::new(1e-2))?;
            let lipschitz = (inst.rho() * bx.beta).powi(2);
            let d = prox_diameter(&SymMatrix::zeros(n));
            let mut worst = 0.0f64;
            for rec in &report.trace {
                let slack = 1e-8 * (1.0 + rec.f_dual.abs());
                let bound = gap_bound(lipschitz, d, 1.0, rec.k) + slack;
                worst = worst.max(rec.gap / bound);
                if rec.gap < -slack {
                    worst = f64::INFINITY;
                }
            }
            if !report.converged() {
                worst = f64::INFINITY;
            }
            res.record(worst, || {
                format!("n={n} rep {rep}: gap/bound ratio {worst:.3e}")
            });
        }
    }
    Ok(res)
}

pub fn run_all(cfg: &CheckConfig) -> Result<Vec<SuiteResult>> {
    Ok(vec![
        gradient_suite(cfg)?,
        oracle_suite(cfg)?,
        gap_bound_suite(cfg)?,
    ])
}
