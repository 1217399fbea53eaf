//! Sector forms of the linearized operators
//!
//! ```text
//! 𝒜φ  = -cΔφ - 5u⁴φ
//! 𝓛₊φ = -cΔφ - 2b(∫∇u·∇φ)Δu - 5u⁴φ
//! ```
//!
//! at the radial solution. Tested against `ψ` and integrated by parts, the
//! nonlocal term becomes `+2b (∫∇u·∇φ)(∫∇u·∇ψ)`, a rank-one form `2b·g gᵀ`
//! with `gᵢ = ⟨∇u, ∇φᵢ⟩`. It lives only in the radial sector: for `ℓ ≥ 1`
//! the pairing with the radial `u` vanishes by angular orthogonality, so it is
//! omitted there rather than left to cancel numerically.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::closed_form::BubbleSpec;
use crate::error::{Error, Result};
use crate::grid::{mirror_upper, RadialGrid};
use crate::linalg::{GramFactor, PencilEigen};

#[derive(Debug, Clone, PartialEq)]
pub struct RankOne {
    /// `2b`.
    pub coeff: f64,
    pub g: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct SectorOperator {
    pub ell: usize,
    /// The Kirchhoff coefficient `c`.
    pub c: f64,
    pub gram: DMatrix<f64>,
    pub potential: DMatrix<f64>,
    /// `c·gram - potential`.
    pub a_form: DMatrix<f64>,
    pub rank_one: Option<RankOne>,
}

impl SectorOperator {
    /// `a_form + 2b·g gᵀ` (or `a_form` alone).
    pub fn full_form(&self) -> DMatrix<f64> {
        match &self.rank_one {
            None => self.a_form.clone(),
            Some(r1) => {
                let mut m = &self.a_form + (&r1.g * r1.g.transpose()) * r1.coeff;
                mirror_upper(&mut m);
                m
            }
        }
    }

    pub fn form_value(&self, f: &DVector<f64>, g: &DVector<f64>) -> f64 {
        let base = f.dot(&(&self.a_form * g));
        match &self.rank_one {
            None => base,
            Some(r1) => base + r1.coeff * r1.g.dot(f) * r1.g.dot(g),
        }
    }

    pub fn gram_factor(&self) -> Result<GramFactor> {
        GramFactor::new(&self.gram)
    }

    /// `L⁻¹ F L⁻ᵀ` assembled as `cI - L⁻¹PL⁻ᵀ (+ 2b·ĝĝᵀ)` so that the large
    /// `c·gram` part never passes through the triangular solves.
    pub fn reduced(&self, factor: &GramFactor) -> DMatrix<f64> {
        let n = self.gram.nrows();
        let mut m = DMatrix::identity(n, n) * self.c - factor.congruence(&self.potential);
        if let Some(r1) = &self.rank_one {
            let gh = factor.whiten(&r1.g);
            m += (&gh * gh.transpose()) * r1.coeff;
        }
        mirror_upper(&mut m);
        m
    }

    pub fn eigen(&self) -> Result<PencilEigen> {
        let factor = self.gram_factor()?;
        PencilEigen::from_reduced(&factor, self.reduced(&factor))
    }
}

/// `𝒜` in sector `ell`, without the nonlocal term.
pub fn assemble_a_sector(grid: &RadialGrid, bubble: &BubbleSpec, ell: usize) -> SectorOperator {
    let c = bubble.c();
    let gram = grid.sector_stiffness(ell);
    let potential = grid.potential_matrix(bubble, ell);
    let mut a_form = &gram * c - &potential;
    mirror_upper(&mut a_form);
    SectorOperator {
        ell,
        c,
        gram,
        potential,
        a_form,
        rank_one: None,
    }
}

/// `𝓛₊` in sector `ell`; carries the rank-one term only for `ell = 0, b > 0`.
pub fn assemble_lplus_sector(grid: &RadialGrid, bubble: &BubbleSpec, ell: usize) -> SectorOperator {
    let mut op = assemble_a_sector(grid, bubble, ell);
    let b = bubble.params().b;
    if ell == 0 && b > 0.0 {
        let u = grid.sample(|r| bubble.u_radial(r));
        op.rank_one = Some(RankOne {
            coeff: 2.0 * b,
            g: &op.gram * u,
        });
    }
    op
}

/// `∫∇u·∇φ` for a radial grid function `φ`.
pub fn nonlocal_pairing(grid: &RadialGrid, bubble: &BubbleSpec, phi: &DVector<f64>) -> f64 {
    let u = grid.sample(|r| bubble.u_radial(r));
    let k = grid.sector_stiffness(0);
    u.dot(&(k * phi))
}

/// `‖F y‖_{G⁻¹} / ‖y‖_G`: how far `y` is from the kernel of the form `F`, in
/// the units of its generalized eigenvalues.
pub fn dual_residual(op: &SectorOperator, factor: &GramFactor, y: &DVector<f64>) -> f64 {
    let fy = match &op.rank_one {
        None => &op.a_form * y,
        Some(r1) => &op.a_form * y + &r1.g * (r1.coeff * r1.g.dot(y)),
    };
    factor.dual_norm(&fy) / libm::sqrt(y.dot(&(&op.gram * y)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankOneSolution {
    pub x: DVector<f64>,
    /// `1 + 2b·gᵀ𝒜⁻¹g` on the working subspace.
    pub denominator: f64,
    /// `gᵀx`.
    pub pairing: f64,
    /// Relative size of the right-hand side component along the deflated
    /// kernel, which the solve discards.
    pub incompatibility: f64,
}

/// Solves `(A + 2b·g gᵀ) x = rhs` with two `A` solves and a Sherman–Morrison
/// correction, on the `G`-orthogonal complement of the near-kernel of `A`.
#[derive(Debug, Clone)]
pub struct RankOneSolver {
    eigen: PencilEigen,
    kernel: Vec<usize>,
    rank_one: Option<RankOne>,
}

/// Pencil eigenvalues below this fraction of the spectral radius are deflated.
pub const DEFLATION_RATIO: f64 = 1e-6;
const SINGULAR_RATIO: f64 = 1e-12;
const MIN_DENOMINATOR: f64 = 1e-10;

impl RankOneSolver {
    pub fn new(op: &SectorOperator) -> Result<Self> {
        let a_only = SectorOperator {
            rank_one: None,
            ..op.clone()
        };
        let eigen = a_only.eigen()?;
        let scale = eigen
            .eigenvalues
            .iter()
            .fold(0.0f64, |m, &v| m.max(libm::fabs(v)));
        let kernel: Vec<usize> = (0..eigen.eigenvalues.len())
            .filter(|&k| libm::fabs(eigen.eigenvalues[k]) < DEFLATION_RATIO * scale)
            .collect();
        // Anything between the deflation band and the singular floor is kept
        // and solved; only exact breakdown below the floor is refused.
        if let Some(&pivot) = eigen
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(k, _)| !kernel.contains(k))
            .map(|(_, v)| v)
            .find(|v| libm::fabs(**v) <= SINGULAR_RATIO * scale)
        {
            return Err(Error::Singular { pivot });
        }
        Ok(Self {
            eigen,
            kernel,
            rank_one: op.rank_one.clone(),
        })
    }

    pub fn kernel_dim(&self) -> usize {
        self.kernel.len()
    }

    /// `A⁻¹ v` restricted to the complement of the deflated kernel.
    pub fn solve_a(&self, v: &DVector<f64>) -> DVector<f64> {
        let x = &self.eigen.eigenvectors;
        let mut out = DVector::zeros(v.len());
        for (k, &mu) in self.eigen.eigenvalues.iter().enumerate() {
            if self.kernel.contains(&k) {
                continue;
            }
            let col = x.column(k);
            let coef = col.dot(v) / mu;
            out.axpy(coef, &col, 1.0);
        }
        out
    }

    fn incompatibility(&self, rhs: &DVector<f64>, factor_norm: f64) -> f64 {
        if factor_norm == 0.0 {
            return 0.0;
        }
        let x = &self.eigen.eigenvectors;
        let along: f64 = self
            .kernel
            .iter()
            .map(|&k| {
                let p = x.column(k).dot(rhs);
                p * p
            })
            .sum();
        libm::sqrt(along) / factor_norm
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> Result<RankOneSolution> {
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("right-hand side"));
        }
        // ‖rhs‖ in the dual metric, from the full eigenbasis.
        let x = &self.eigen.eigenvectors;
        let dual = libm::sqrt(
            (0..x.ncols())
                .map(|k| {
                    let p = x.column(k).dot(rhs);
                    p * p
                })
                .sum::<f64>(),
        );
        let incompatibility = self.incompatibility(rhs, dual);
        let y1 = self.solve_a(rhs);
        let (sol, denominator) = match &self.rank_one {
            None => (y1, 1.0),
            Some(r1) => {
                let y2 = self.solve_a(&r1.g);
                let denom = 1.0 + r1.coeff * r1.g.dot(&y2);
                if libm::fabs(denom) < MIN_DENOMINATOR {
                    return Err(Error::DegenerateDenominator(denom));
                }
                let scale = r1.coeff * r1.g.dot(&y1) / denom;
                (y1 - y2 * scale, denom)
            }
        };
        let pairing = self.rank_one.as_ref().map_or(0.0, |r1| r1.g.dot(&sol));
        Ok(RankOneSolution {
            x: sol,
            denominator,
            pairing,
            incompatibility,
        })
    }

    /// Removes the deflated-kernel component of a load vector, giving a
    /// right-hand side the solve can match exactly.
    pub fn project_compatible(&self, rhs: &DVector<f64>, gram: &DMatrix<f64>) -> DVector<f64> {
        let mut out = rhs.clone();
        for &k in &self.kernel {
            let z = self.eigen.eigenvectors.column(k).into_owned();
            let gz = gram * &z;
            let coef = z.dot(rhs);
            out.axpy(-coef, &gz, 1.0);
        }
        out
    }
}

pub fn rank_one_solve(op: &SectorOperator, rhs: &DVector<f64>) -> Result<RankOneSolution> {
    RankOneSolver::new(op)?.solve(rhs)
}
