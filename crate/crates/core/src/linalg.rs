//! Small dense Hermitian helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{CMatrix, Complex64, Error, Result};

/// Eigendecomposition `M = V diag(values) V^H` of a Hermitian matrix.
///
/// Eigenvalues are returned in ascending order with matching columns of `V`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(m: &CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Hermitian eigendecomposition needs a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        // Symmetrize away round-off so the solver sees an exactly Hermitian input.
        let sym = (m + m.adjoint()).scale(0.5);
        let eig = SymmetricEigen::new(sym);
        let n = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        Ok(Self { values, vectors })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    /// Reassemble `V diag(f(values)) V^H`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for c in 0..n {
            let s = f(self.values[c]);
            scaled.column_mut(c).scale_mut(s);
        }
        scaled * self.vectors.adjoint()
    }

    /// Moore-Penrose pseudo-inverse, treating eigenvalues below
    /// `rel_tol * max|value|` as zero.
    pub fn pseudo_inverse(&self, rel_tol: f64) -> CMatrix {
        let cutoff = rel_tol * self.max_abs();
        self.map(|v| if v.abs() > cutoff { 1.0 / v } else { 0.0 })
    }
}

/// Gram matrix `H^H H`.
pub fn gram(h: &CMatrix) -> CMatrix {
    h.adjoint() * h
}

/// Frobenius norm squared, i.e. `tr(M M^H)`.
pub fn frobenius_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Condition number guard used for every Gram inversion.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

/// Eigendecomposition of a Hermitian positive definite Gram matrix, failing
/// when its condition number exceeds [`MAX_GRAM_CONDITION`].
pub fn checked_gram_eigen(g: &CMatrix) -> Result<HermitianEigen> {
    let eig = HermitianEigen::new(g)?;
    let lo = eig.values[0];
    let hi = eig.values[eig.values.len() - 1];
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= MAX_GRAM_CONDITION) {
        return Err(Error::Singular { condition });
    }
    Ok(eig)
}
