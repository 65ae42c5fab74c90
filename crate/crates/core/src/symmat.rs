//! Dense symmetric matrices and the handful of linear-algebra primitives the
//! solvers need: symmetric eigendecomposition, log-determinants, norms.
//!
//! Storage is a full square `nalgebra::DMatrix<f64>`. Every constructor
//! enforces exact symmetry and finiteness, so downstream code never has to
//! re-check either.

use std::cell::Cell;
use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{CovselError, Result};

/// Asymmetry above this is rejected by [`SymMatrix::from_rows_checked`].
pub const LOAD_ASYMMETRY_TOL: f64 = 1e-6;

thread_local! {
    static EIG_CALLS: Cell<u64> = const { Cell::new(0) };
}

/// Per-thread count of [`eig_sym`] calls.
///
/// Solves are single-threaded, so the delta across a solve on one thread is
/// exactly the number of eigendecompositions it performed.
pub mod eig_counter {
    use super::EIG_CALLS;

    pub fn count() -> u64 {
        EIG_CALLS.with(|c| c.get())
    }

    pub fn reset() {
        EIG_CALLS.with(|c| c.set(0));
    }
}

/// A dense symmetric `n x n` matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    data: DMatrix<f64>,
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "SymMatrix({}x{}) {:?}",
            self.n(),
            self.n(),
            self.data.as_slice()
        )
    }
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            data: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: DMatrix::identity(n, n),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        check_finite(diag.iter().copied())?;
        Ok(Self {
            data: DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
        })
    }

    pub fn from_element(n: usize, value: f64) -> Result<Self> {
        check_finite(std::iter::once(value))?;
        Ok(Self {
            data: DMatrix::from_element(n, n, value),
        })
    }

    /// Builds a matrix from an arbitrary square `DMatrix`, symmetrizing via
    /// `(M + M^T) / 2`. Returns the matrix and the pre-symmetrization
    /// asymmetry `max |M_ij - M_ji|`.
    pub fn symmetrize(m: DMatrix<f64>) -> Result<(Self, f64)> {
        if m.nrows() != m.ncols() {
            return Err(CovselError::InvalidInput(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        check_finite(m.iter().copied())?;
        let asym = m
            .iter()
            .zip(m.transpose().iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let sym = (&m + m.transpose()) * 0.5;
        Ok((Self { data: sym }, asym))
    }

    /// Row-major construction that rejects asymmetry above
    /// [`LOAD_ASYMMETRY_TOL`], then symmetrizes.
    pub fn from_rows_checked(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(CovselError::InvalidInput(format!(
                    "row {i} has {} entries, expected {n}",
                    r.len()
                )));
            }
        }
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        let (sym, asym) = Self::symmetrize(m)?;
        if asym > LOAD_ASYMMETRY_TOL {
            return Err(CovselError::InvalidInput(format!(
                "matrix asymmetry {asym:e} exceeds {LOAD_ASYMMETRY_TOL:e}"
            )));
        }
        Ok(sym)
    }

    /// Symmetric matrix from a generator evaluated on the upper triangle.
    pub fn from_upper_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..=j {
                let v = f(i, j);
                if !v.is_finite() {
                    return Err(CovselError::InvalidInput(format!(
                        "non-finite entry at ({i},{j})"
                    )));
                }
                data[(i, j)] = v;
                data[(j, i)] = v;
            }
        }
        Ok(Self { data })
    }

    /// Wraps a matrix produced by arithmetic on symmetric operands. Round-off
    /// asymmetry is removed by averaging with the transpose.
    pub(crate) fn from_computed(mut data: DMatrix<f64>) -> Self {
        debug_assert_eq!(data.nrows(), data.ncols());
        let n = data.nrows();
        for j in 0..n {
            for i in 0..j {
                let v = 0.5 * (data[(i, j)] + data[(j, i)]);
                data[(i, j)] = v;
                data[(j, i)] = v;
            }
        }
        Self { data }
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|i| self.data.row(i).iter().copied().collect())
            .collect()
    }

    pub fn trace(&self) -> f64 {
        self.data.trace()
    }

    /// Frobenius inner product `<A, B>`.
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        self.data.dot(&other.data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.amax()
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        Self {
            data: &self.data * s,
        }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: f64, other: &SymMatrix) -> SymMatrix {
        Self {
            data: &self.data + &other.data * s,
        }
    }

    /// `a * self + b * other`.
    pub fn lincomb(&self, a: f64, b: f64, other: &SymMatrix) -> SymMatrix {
        Self {
            data: &self.data * a + &other.data * b,
        }
    }

    /// Adds `s` to every diagonal entry.
    pub fn shift_diagonal(&self, s: f64) -> SymMatrix {
        let mut data = self.data.clone();
        for i in 0..self.n() {
            data[(i, i)] += s;
        }
        Self { data }
    }

    pub fn map_entries(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        Self {
            data: self.data.map(f),
        }
    }

    /// Entrywise combination of two equally sized matrices.
    pub fn zip_map(&self, other: &SymMatrix, f: impl Fn(f64, f64) -> f64) -> SymMatrix {
        Self {
            data: self.data.zip_map(&other.data, f),
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        Self {
            data: &self.data - &other.data,
        }
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        (&self.data - &other.data).amax()
    }

    pub fn lambda_min(&self) -> Result<f64> {
        Ok(eig_sym(self)?.gamma[0])
    }

    pub fn lambda_max(&self) -> Result<f64> {
        let e = eig_sym(self)?;
        Ok(e.gamma[e.gamma.len() - 1])
    }

    /// Inverse of a positive definite matrix via Cholesky.
    pub fn inverse_pd(&self) -> Result<SymMatrix> {
        let chol = self
            .data
            .clone()
            .cholesky()
            .ok_or_else(|| CovselError::NotPositiveDefinite("cholesky failed".into()))?;
        Ok(Self::from_computed(chol.inverse()))
    }

    /// `log det` of a positive definite matrix via Cholesky.
    pub fn log_det_pd(&self) -> Result<f64> {
        let chol = self
            .data
            .clone()
            .cholesky()
            .ok_or_else(|| CovselError::NotPositiveDefinite("cholesky failed".into()))?;
        Ok(2.0
            * chol
                .l_dirty()
                .diagonal()
                .iter()
                .map(|d| d.ln())
                .sum::<f64>())
    }
}

fn check_finite(mut it: impl Iterator<Item = f64>) -> Result<()> {
    if it.all(f64::is_finite) {
        Ok(())
    } else {
        Err(CovselError::InvalidInput("non-finite matrix entry".into()))
    }
}

/// `M = Q diag(gamma) Q^T` with `gamma` ascending and `Q` orthogonal.
#[derive(Debug, Clone)]
pub struct EigDecomposition {
    pub q: DMatrix<f64>,
    pub gamma: Vec<f64>,
}

impl EigDecomposition {
    /// Reassembles `Q diag(values) Q^T`.
    pub fn assemble(&self, values: &[f64]) -> SymMatrix {
        let n = self.gamma.len();
        assert_eq!(values.len(), n);
        let mut scaled = self.q.clone();
        for (j, &v) in values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(v);
        }
        SymMatrix::from_computed(scaled * self.q.transpose())
    }
}

/// Symmetric eigendecomposition with ascending eigenvalues.
pub fn eig_sym(m: &SymMatrix) -> Result<EigDecomposition> {
    EIG_CALLS.with(|c| c.set(c.get() + 1));
    let n = m.n();
    if n == 0 {
        return Err(CovselError::InvalidInput("empty matrix".into()));
    }
    let max_iter = 100 * n.max(10) * n.max(10);
    let eig = SymmetricEigen::try_new(m.data.clone(), f64::EPSILON, max_iter).ok_or_else(|| {
        CovselError::NumericFailure("symmetric eigensolver did not converge".into())
    })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let gamma: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let q = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    if gamma.iter().any(|g| !g.is_finite()) {
        return Err(CovselError::NumericFailure("non-finite eigenvalue".into()));
    }
    Ok(EigDecomposition { q, gamma })
}

/// Operator 2-norm: largest absolute eigenvalue.
pub fn spectral_norm(m: &SymMatrix) -> Result<f64> {
    let e = eig_sym(m)?;
    Ok(e.gamma[0].abs().max(e.gamma[e.gamma.len() - 1].abs()))
}

/// `e^T |M| e`.
pub fn abs_sum(m: &SymMatrix) -> f64 {
    m.data.iter().map(|v| v.abs()).sum()
}

pub fn logdet_from_eigs(gamma: &[f64]) -> Result<f64> {
    if let Some(g) = gamma.iter().find(|&&g| g <= 0.0 || g.is_nan()) {
        return Err(CovselError::NotPositiveDefinite(format!("eigenvalue {g}")));
    }
    Ok(gamma.iter().map(|g| g.ln()).sum())
}
