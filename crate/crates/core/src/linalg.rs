//! Symmetric-definite pencils `A x = μ G x`.

use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Cholesky factor of a Gram matrix, with the dual norm it induces.
#[derive(Debug, Clone)]
pub struct GramFactor {
    chol: Cholesky<f64, Dyn>,
}

impl GramFactor {
    pub fn new(gram: &DMatrix<f64>) -> Result<Self> {
        if gram.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Gram matrix"));
        }
        Cholesky::new(gram.clone())
            .map(|chol| Self { chol })
            .ok_or(Error::NotPositiveDefinite("Gram matrix"))
    }

    pub fn l(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    /// `L⁻¹ v`.
    pub fn whiten(&self, v: &DVector<f64>) -> DVector<f64> {
        self.chol
            .l_dirty()
            .solve_lower_triangular(v)
            .expect("Cholesky factor has a nonzero diagonal")
    }

    /// `√(vᵀ G⁻¹ v)`, the norm of a load vector in the dual of the Gram metric.
    pub fn dual_norm(&self, v: &DVector<f64>) -> f64 {
        self.whiten(v).norm()
    }

    /// `L⁻¹ M L⁻ᵀ`, symmetrized.
    pub fn congruence(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let l = self.chol.l_dirty();
        let y = l
            .solve_lower_triangular(m)
            .expect("Cholesky factor has a nonzero diagonal");
        let z = l
            .solve_lower_triangular(&y.transpose())
            .expect("Cholesky factor has a nonzero diagonal");
        let mut c = (&z + z.transpose()) * 0.5;
        crate::grid::mirror_upper(&mut c);
        c
    }

    /// `L⁻ᵀ V`.
    pub fn unwhiten(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol
            .l_dirty()
            .tr_solve_lower_triangular(v)
            .expect("Cholesky factor has a nonzero diagonal")
    }
}

/// Full eigendecomposition of a pencil; eigenvalues ascending, eigenvectors
/// `G`-orthonormal with their largest-magnitude entry positive.
#[derive(Debug, Clone)]
pub struct PencilEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl PencilEigen {
    /// Decomposes `L⁻¹ A L⁻ᵀ` given in already-reduced form.
    pub fn from_reduced(factor: &GramFactor, reduced: DMatrix<f64>) -> Result<Self> {
        if reduced.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("reduced pencil"));
        }
        let eig = SymmetricEigen::new(reduced);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let sorted = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, k| {
            eig.eigenvectors[(r, order[k])]
        });
        let mut eigenvectors = factor.unwhiten(&sorted);
        for mut col in eigenvectors.column_iter_mut() {
            let mut best = 0.0;
            for &v in col.iter() {
                if libm::fabs(v) > libm::fabs(best) {
                    best = v;
                }
            }
            if best < 0.0 {
                col.neg_mut();
            }
        }
        if eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("eigenvalues"));
        }
        Ok(Self {
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn new(a: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<Self> {
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("form matrix"));
        }
        let factor = GramFactor::new(g)?;
        let reduced = factor.congruence(a);
        Self::from_reduced(&factor, reduced)
    }
}

/// `|⟨x, y⟩_G| / (‖x‖_G ‖y‖_G)`.
pub fn gram_cosine(gram: &DMatrix<f64>, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let gy = gram * y;
    let xy = x.dot(&gy);
    let xx = x.dot(&(gram * x));
    let yy = y.dot(&gy);
    (libm::fabs(xy) / libm::sqrt(xx * yy)).min(1.0)
}
