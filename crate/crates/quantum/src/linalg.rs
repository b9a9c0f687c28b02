//! Dense complex linear algebra: Hermitian eigendecomposition and the
//! matrix functions built on it.

use std::ops::Range;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::{QuantumError, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative Hermiticity tolerance accepted by [`eigh`].
pub const EIGH_TOL: f64 = 1e-10;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `max |m - m†|`.
pub fn hermitian_residual(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut r = 0.0f64;
    for i in 0..n {
        for j in i..n {
            r = r.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    r
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |a, z| a.max(z.norm()))
}

/// `(m + m†)/2`.
pub fn symmetrize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `max |[a, b]|`.
pub fn commutator_norm(a: &CMatrix, b: &CMatrix) -> f64 {
    max_abs(&(a * b - b * a))
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Spectral norm of a Hermitian matrix.
pub fn spectral_norm(m: &CMatrix) -> Result<f64> {
    let s = eigh(m)?;
    Ok(s.values.iter().fold(0.0f64, |a, v| a.max(v.abs())))
}

/// Eigenpairs sorted by ascending eigenvalue.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: CMatrix,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }

    pub fn vector(&self, i: usize) -> CVector {
        self.vectors.column(i).into_owned()
    }

    /// Index ranges of eigenvalue clusters, ascending. Neighbours closer
    /// than `tol` share a cluster.
    pub fn eigenspaces(&self, tol: f64) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.values.len() {
            if i == self.values.len() || self.values[i] - self.values[i - 1] > tol {
                out.push(start..i);
                start = i;
            }
        }
        out
    }

    pub fn top_eigenspace(&self, tol: f64) -> Range<usize> {
        self.eigenspaces(tol).pop().expect("non-empty spectrum")
    }

    /// Distance from the top eigenvalue to the next distinct one.
    pub fn gap(&self, tol: f64) -> Option<f64> {
        let spaces = self.eigenspaces(tol);
        if spaces.len() < 2 {
            return None;
        }
        let top = &spaces[spaces.len() - 1];
        let next = &spaces[spaces.len() - 2];
        Some(self.values[top.start] - self.values[next.end - 1])
    }

    /// Orthogonal projector onto the columns in `range`.
    pub fn projector(&self, range: Range<usize>) -> CMatrix {
        let q = self.vectors.columns(range.start, range.len());
        q * q.adjoint()
    }

    /// `Q f(Λ) Q†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (j, &v) in self.values.iter().enumerate() {
            let fv = c(f(v));
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= fv);
        }
        scaled * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|v| v)
    }
}

/// Full spectral decomposition of a Hermitian matrix.
pub fn eigh(m: &CMatrix) -> Result<Spectrum> {
    if m.nrows() != m.ncols() {
        return Err(QuantumError::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Err(QuantumError::Argument("empty matrix".into()));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(QuantumError::NonFinite("eigh input"));
    }
    let res = hermitian_residual(m);
    if res > EIGH_TOL * max_abs(m).max(1.0) {
        return Err(QuantumError::NotHermitian(res));
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, j| eig.eigenvectors[(r, order[j])]);
    Ok(Spectrum { values, vectors })
}

/// `exp(m)` for Hermitian `m`.
pub fn matrix_exp(m: &CMatrix) -> Result<CMatrix> {
    Ok(eigh(m)?.map(f64::exp))
}

/// `exp(m)/Tr exp(m)`, shifted by the top eigenvalue so large spectra do
/// not overflow.
pub fn gibbs_state(m: &CMatrix) -> Result<CMatrix> {
    let s = eigh(m)?;
    Ok(gibbs_from(&s))
}

pub fn gibbs_from(s: &Spectrum) -> CMatrix {
    let top = s.max();
    let z: f64 = s.values.iter().map(|v| (v - top).exp()).sum();
    s.map(|v| (v - top).exp() / z)
}

/// `ln Tr exp(m)`.
pub fn log_partition(m: &CMatrix) -> Result<f64> {
    let s = eigh(m)?;
    let top = s.max();
    Ok(top + s.values.iter().map(|v| (v - top).exp()).sum::<f64>().ln())
}

/// Checks unit trace and positive semidefiniteness within `tol`.
pub fn check_density(rho: &CMatrix, tol: f64) -> Result<()> {
    let tr = trace(rho);
    if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
        return Err(QuantumError::Argument(format!("density matrix has trace {tr}")));
    }
    let s = eigh(rho)?;
    if s.values[0] < -tol {
        return Err(QuantumError::Argument(format!(
            "density matrix has eigenvalue {:e}",
            s.values[0]
        )));
    }
    Ok(())
}

/// `S(ρ‖σ) = Tr ρ ln ρ − Tr ρ ln σ` with `0 ln 0 = 0`.
pub fn relative_entropy(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    let sr = eigh(rho)?;
    let ss = eigh(sigma)?;
    if ss.values[0] <= 0.0 {
        return Err(QuantumError::Argument("sigma is not full rank".into()));
    }
    let neg_entropy: f64 = sr
        .values
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|p| p * p.ln())
        .sum();
    let log_sigma = ss.map(f64::ln);
    Ok(neg_entropy - trace(&(rho * log_sigma)).re)
}

/// Basis vector `|i⟩` of dimension `dim`.
pub fn basis_vector(dim: usize, i: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[i] = c(1.0);
    v
}
