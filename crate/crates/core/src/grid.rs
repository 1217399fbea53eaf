//! Compactified radial grid on `[0, ∞)` and the sector-wise bilinear forms.
//!
//! Unknowns are the values of a radial profile `f(r)` at the interior
//! Chebyshev–Gauss–Lobatto points `t_j` of `(-1, 1)`, mapped by
//! `r = L(1+t)/(1-t)`. The endpoint values are not unknowns:
//!
//! * `r = ∞` (`t = 1`): `f = 0`.
//! * `r = 0` (`t = -1`): `f'(0) = 0` in the radial sector, `f(0) = 0` for `ℓ ≥ 1`.
//!
//! All forms are integrated by Gauss–Legendre quadrature in `t` with roughly
//! twice as many points as collocation nodes, so the polynomial parts of the
//! stiffness and centrifugal forms are integrated exactly. Every form is the
//! full `R³` integral for `φ(x) = f(|x|) Y(x/|x|)` with `∫_{S²} Y² = 4π`;
//! in the radial sector that is simply `φ(x) = f(|x|)`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::closed_form::BubbleSpec;
use crate::error::{ensure, Error, Result};

pub const MIN_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    /// `r = L(1+t)/(1-t)`.
    #[default]
    Algebraic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Number of interior nodes.
    pub n: usize,
    pub map_scale: f64,
    pub map_kind: MapKind,
}

impl GridSpec {
    pub fn new(n: usize, map_scale: f64) -> Result<Self> {
        let spec = Self {
            n,
            map_scale,
            map_kind: MapKind::Algebraic,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Grid whose map length is the bubble scale `√c·λ`.
    pub fn for_bubble(n: usize, bubble: &BubbleSpec) -> Result<Self> {
        Self::new(n, bubble.length_scale())
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.n >= MIN_NODES, "n", "must be at least 16")?;
        ensure(
            self.map_scale.is_finite() && self.map_scale > 0.0,
            "map_scale",
            "must be finite and > 0",
        )
    }
}

/// Result of an `L²` mass integral, which need not converge on `[0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedIntegral {
    pub value: f64,
    /// Estimated decay exponent `p` in `|f| ~ r^{-p}` from the outermost nodes.
    pub decay_exponent: f64,
    /// `p > 3/2`, i.e. `∫ f² r² dr` converges at infinity.
    pub integrable: bool,
}

#[derive(Debug, Clone)]
pub struct RadialGrid {
    spec: GridSpec,
    /// All `N + 1` Chebyshev–Gauss–Lobatto points, ascending from `-1` to `1`.
    cheb: Vec<f64>,
    nodes: Vec<f64>,
    /// `d/dt` on the full Lobatto set.
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
    quad_t: Vec<f64>,
    quad_r: Vec<f64>,
    /// Legendre weights in `t`.
    quad_wt: Vec<f64>,
    /// Weights for `∫₀^∞ f(r) r² dr`.
    quad_weights: Vec<f64>,
    /// Lobatto values → values at quadrature points.
    interp: DMatrix<f64>,
    /// Lobatto values → `d/dt` at quadrature points.
    interp_dt: DMatrix<f64>,
}

pub fn build_grid(spec: GridSpec) -> Result<RadialGrid> {
    spec.validate()?;
    let big_n = spec.n + 1;
    let cheb: Vec<f64> = (0..=big_n)
        .map(|j| libm::sin(PI * (2.0 * j as f64 - big_n as f64) / (2.0 * big_n as f64)))
        .collect();
    let bary: Vec<f64> = (0..=big_n)
        .map(|j| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == big_n {
                0.5 * sign
            } else {
                sign
            }
        })
        .collect();
    let d1 = differentiation_matrix(&cheb, &bary);
    let d2 = &d1 * &d1;

    let l = spec.map_scale;
    let nodes: Vec<f64> = cheb[1..big_n].iter().map(|&t| map_r(l, t)).collect();

    let m = 2 * big_n + 2;
    let (quad_t, quad_wt) = gauss_legendre(m);
    let quad_r: Vec<f64> = quad_t.iter().map(|&t| map_r(l, t)).collect();
    let quad_weights: Vec<f64> = quad_t
        .iter()
        .zip(&quad_wt)
        .zip(&quad_r)
        .map(|((&t, &w), &r)| w * r * r * dr_dt(l, t))
        .collect();
    let interp = interpolation_matrix(&cheb, &bary, &quad_t);
    let interp_dt = &interp * &d1;

    let grid = RadialGrid {
        spec,
        cheb,
        nodes,
        d1,
        d2,
        quad_t,
        quad_r,
        quad_wt,
        quad_weights,
        interp,
        interp_dt,
    };
    if grid.nodes.windows(2).any(|w| w[1] <= w[0]) || grid.nodes[0] <= 0.0 {
        return Err(Error::NonFinite("grid nodes"));
    }
    Ok(grid)
}

fn map_r(l: f64, t: f64) -> f64 {
    l * (1.0 + t) / (1.0 - t)
}

fn dr_dt(l: f64, t: f64) -> f64 {
    2.0 * l / ((1.0 - t) * (1.0 - t))
}

fn differentiation_matrix(t: &[f64], bary: &[f64]) -> DMatrix<f64> {
    let n = t.len();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = (bary[j] / bary[i]) / (t[i] - t[j]);
                d[(i, j)] = v;
                diag -= v;
            }
        }
        d[(i, i)] = diag;
    }
    d
}

fn interpolation_matrix(t: &[f64], bary: &[f64], x: &[f64]) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(x.len(), t.len());
    for (q, &xq) in x.iter().enumerate() {
        if let Some(j) = t.iter().position(|&tj| tj == xq) {
            b[(q, j)] = 1.0;
            continue;
        }
        let denom: f64 = t.iter().zip(bary).map(|(&tj, &wj)| wj / (xq - tj)).sum();
        for (j, (&tj, &wj)) in t.iter().zip(bary).enumerate() {
            b[(q, j)] = (wj / (xq - tj)) / denom;
        }
    }
    b
}

/// Gauss–Legendre nodes (ascending) and weights on `[-1, 1]` by Newton's method
/// on the three-term recurrence.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = alloc::vec![0.0; m];
    let mut weights = alloc::vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut x = libm::cos(PI * (i as f64 + 0.75) / (mf + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if libm::fabs(dx) < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[m - 1 - i] = x;
        nodes[i] = -x;
        weights[m - 1 - i] = w;
        weights[i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `Xᵀ diag(w) X`, stored exactly symmetric.
fn weighted_gram(x: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let scaled = DMatrix::from_fn(x.nrows(), x.ncols(), |q, j| libm::sqrt(w[q]) * x[(q, j)]);
    let mut g = scaled.tr_mul(&scaled);
    mirror_upper(&mut g);
    g
}

pub(crate) fn mirror_upper(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            m[(i, j)] = m[(j, i)];
        }
    }
}

impl RadialGrid {
    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn map_scale(&self) -> f64 {
        self.spec.map_scale
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Lobatto points in the mapped variable, including both endpoints.
    pub fn lobatto(&self) -> &[f64] {
        &self.cheb
    }

    pub fn d1(&self) -> &DMatrix<f64> {
        &self.d1
    }

    pub fn d2(&self) -> &DMatrix<f64> {
        &self.d2
    }

    pub fn quad_nodes(&self) -> &[f64] {
        &self.quad_r
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    /// `∫₀^∞ f(r) r² dr`.
    pub fn integrate_r2<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.quad_r
            .iter()
            .zip(&self.quad_weights)
            .map(|(&r, &w)| w * f(r))
            .sum()
    }

    /// `∫₀^∞ f(r) dr`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let l = self.spec.map_scale;
        self.quad_t
            .iter()
            .zip(&self.quad_wt)
            .zip(&self.quad_r)
            .map(|((&t, &w), &r)| w * dr_dt(l, t) * f(r))
            .sum()
    }

    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> DVector<f64> {
        DVector::from_iterator(self.nodes.len(), self.nodes.iter().map(|&r| f(r)))
    }

    /// Maps interior unknowns to all Lobatto values under the boundary
    /// conditions of sector `ell`.
    pub fn extension(&self, ell: usize) -> DMatrix<f64> {
        let big_n = self.cheb.len() - 1;
        let n = self.nodes.len();
        let mut e = DMatrix::zeros(big_n + 1, n);
        for i in 0..n {
            e[(i + 1, i)] = 1.0;
        }
        if ell == 0 {
            let corner = self.d1[(0, 0)];
            for i in 0..n {
                e[(0, i)] = -self.d1[(0, i + 1)] / corner;
            }
        }
        e
    }

    /// Values at the quadrature points, per unit interior value.
    fn values_at_quad(&self, ell: usize) -> DMatrix<f64> {
        &self.interp * self.extension(ell)
    }

    fn dt_at_quad(&self, ell: usize) -> DMatrix<f64> {
        &self.interp_dt * self.extension(ell)
    }

    /// Radial derivative `f'(r)` of the sector interpolant at the nodes.
    pub fn derivative(&self, ell: usize, f: &DVector<f64>) -> DVector<f64> {
        let full = self.extension(ell) * f;
        let ft = &self.d1 * full;
        let l = self.spec.map_scale;
        DVector::from_iterator(
            self.nodes.len(),
            (0..self.nodes.len()).map(|i| ft[i + 1] / dr_dt(l, self.cheb[i + 1])),
        )
    }

    /// `4π ∫₀^∞ [f'g' + ℓ(ℓ+1) fg/r²] r² dr`.
    pub fn sector_stiffness(&self, ell: usize) -> DMatrix<f64> {
        let l = self.spec.map_scale;
        let wd: Vec<f64> = self
            .quad_t
            .iter()
            .zip(&self.quad_wt)
            .map(|(&t, &w)| 4.0 * PI * w * 0.5 * l * (1.0 + t) * (1.0 + t))
            .collect();
        let mut k = weighted_gram(&self.dt_at_quad(ell), &wd);
        if ell > 0 {
            let centrifugal = self.centrifugal(ell);
            k += centrifugal;
            mirror_upper(&mut k);
        }
        k
    }

    /// `4π ℓ(ℓ+1) ∫₀^∞ fg dr`.
    fn centrifugal(&self, ell: usize) -> DMatrix<f64> {
        let l = self.spec.map_scale;
        let lf = (ell * (ell + 1)) as f64;
        let w: Vec<f64> = self
            .quad_t
            .iter()
            .zip(&self.quad_wt)
            .map(|(&t, &w)| 4.0 * PI * lf * w * dr_dt(l, t))
            .collect();
        weighted_gram(&self.values_at_quad(ell), &w)
    }

    /// The `Ḣ¹` Gram matrix of the sector, identical to its stiffness form.
    pub fn sector_gram(&self, ell: usize) -> DMatrix<f64> {
        self.sector_stiffness(ell)
    }

    /// `4π ∫₀^∞ fg r² dr`; divergent for profiles decaying like `1/r`.
    pub fn sector_mass(&self, ell: usize) -> DMatrix<f64> {
        let w: Vec<f64> = self.quad_weights.iter().map(|&w| 4.0 * PI * w).collect();
        weighted_gram(&self.values_at_quad(ell), &w)
    }

    /// `4π ∫₀^∞ 5u⁴ fg r² dr`.
    pub fn potential_matrix(&self, bubble: &BubbleSpec, ell: usize) -> DMatrix<f64> {
        let w: Vec<f64> = self.weighted_potential(bubble);
        weighted_gram(&self.values_at_quad(ell), &w)
    }

    fn weighted_potential(&self, bubble: &BubbleSpec) -> Vec<f64> {
        self.quad_r
            .iter()
            .zip(&self.quad_weights)
            .map(|(&r, &w)| {
                let u = bubble.u_radial(r);
                let u2 = u * u;
                4.0 * PI * w * 5.0 * u2 * u2
            })
            .collect()
    }

    /// The potential weight `5u⁴` at the interior nodes.
    pub fn potential_weights(&self, bubble: &BubbleSpec) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|&r| {
                let u = bubble.u_radial(r);
                5.0 * u * u * u * u
            })
            .collect()
    }

    /// `4π ∫ f² r² dr` over the quadrature support, with an integrability flag.
    pub fn mass_value(&self, ell: usize, f: &DVector<f64>) -> TruncatedIntegral {
        let m = self.sector_mass(ell);
        let value = f.dot(&(&m * f));
        let n = f.len();
        let (f1, f2) = (libm::fabs(f[n - 2]), libm::fabs(f[n - 1]));
        let (r1, r2) = (self.nodes[n - 2], self.nodes[n - 1]);
        let decay_exponent = if f2 == 0.0 {
            f64::INFINITY
        } else {
            libm::log(f1 / f2) / libm::log(r2 / r1)
        };
        TruncatedIntegral {
            value,
            decay_exponent,
            integrable: decay_exponent > 1.5,
        }
    }
}

pub fn bilinear(m: &DMatrix<f64>, f: &DVector<f64>, g: &DVector<f64>) -> f64 {
    f.dot(&(m * g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::{KirchhoffParams, GRAD_Q_NORM_SQ, Q_HEIGHT};

    fn grid(n: usize, l: f64) -> RadialGrid {
        build_grid(GridSpec::new(n, l).unwrap()).unwrap()
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(GridSpec::new(15, 1.0).is_err());
        assert!(GridSpec::new(64, f64::NAN).is_err());
        assert!(GridSpec::new(64, 0.0).is_err());
    }

    #[test]
    fn nodes_increasing_positive() {
        let g = grid(64, 1.0);
        assert_eq!(g.len(), 64);
        assert!(g.nodes()[0] > 0.0);
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
        assert!(g.quad_weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn gauss_legendre_exactness() {
        let (x, w) = gauss_legendre(20);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m38: f64 = x.iter().zip(&w).map(|(&x, &w)| w * x.powi(38)).sum();
        assert!((m38 - 2.0 / 39.0).abs() < 1e-14);
        assert!(x.windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn cubic_differentiation_exact() {
        let g = grid(16, 1.0);
        let t = g.lobatto();
        let f = DVector::from_iterator(t.len(), t.iter().map(|&t| 2.0 * t * t * t - t * t + 3.0));
        let df = g.d1() * &f;
        let d2f = g.d2() * &f;
        for (i, &ti) in t.iter().enumerate() {
            assert!((df[i] - (6.0 * ti * ti - 2.0 * ti)).abs() < 1e-12);
            assert!((d2f[i] - (12.0 * ti - 2.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn quadrature_gamma3() {
        let g = grid(64, 1.0);
        let v = g.integrate_r2(|r| libm::exp(-r));
        assert!((v - 2.0).abs() < 1e-10, "{v}");
    }

    #[test]
    fn quadrature_grad_q() {
        let g = grid(128, 1.0);
        let v = 4.0
            * PI
            * g.integrate_r2(|r| {
                let w = 1.0 + r * r;
                let dq = -Q_HEIGHT * r / (w * w.sqrt());
                dq * dq
            });
        assert!((v - GRAD_Q_NORM_SQ).abs() < 1e-9 * GRAD_Q_NORM_SQ, "{v}");
    }

    #[test]
    fn forms_are_exactly_symmetric() {
        let g = grid(40, 2.0);
        let bubble = BubbleSpec::radial(KirchhoffParams::new(1.0, 1.0).unwrap()).unwrap();
        for ell in 0..3 {
            for m in [
                g.sector_stiffness(ell),
                g.sector_mass(ell),
                g.potential_matrix(&bubble, ell),
            ] {
                assert_eq!(m, m.transpose());
            }
        }
    }

    #[test]
    fn centrifugal_term_is_nonnegative() {
        let g = grid(32, 1.0);
        let f = g.sample(|r| r / (1.0 + r * r));
        let k0 = bilinear(&g.sector_stiffness(0), &f, &f);
        let k1 = bilinear(&g.sector_stiffness(1), &f, &f);
        assert!(k1 >= k0);
    }

    #[test]
    fn gram_is_stiffness() {
        let g = grid(20, 1.0);
        assert_eq!(g.sector_gram(2), g.sector_stiffness(2));
    }

    #[test]
    fn potential_positive_and_decaying() {
        let g = grid(64, 1.0);
        let bubble = BubbleSpec::radial(KirchhoffParams::new(1.0, 0.0).unwrap()).unwrap();
        let p = g.potential_matrix(&bubble, 0);
        let f = g.sample(|r| libm::cos(r) / (1.0 + r));
        assert!(bilinear(&p, &f, &f) > 0.0);
        let w = g.potential_weights(&bubble);
        assert!(w[w.len() - 1] < 1e-8 * w[0]);
    }

    #[test]
    fn mass_flags_non_integrable_tail() {
        let bubble = BubbleSpec::radial(KirchhoffParams::new(1.0, 0.0).unwrap()).unwrap();
        let g1 = grid(64, 1.0);
        let q = g1.sample(|r| bubble.u_radial(r));
        let m1 = g1.mass_value(0, &q);
        assert!(!m1.integrable);
        let g2 = grid(64, 4.0);
        let m2 = g2.mass_value(0, &g2.sample(|r| bubble.u_radial(r)));
        assert!(m2.value > m1.value);

        let du = g1.sample(|r| bubble.du_radial(r));
        let m = g1.mass_value(1, &du);
        assert!(m.integrable);
    }

    #[test]
    fn derivative_of_sampled_profile() {
        let bubble = BubbleSpec::radial(KirchhoffParams::new(1.0, 0.0).unwrap()).unwrap();
        let g = grid(64, 1.0);
        let u = g.sample(|r| bubble.u_radial(r));
        let du = g.derivative(0, &u);
        for (i, &r) in g.nodes().iter().enumerate() {
            assert!((du[i] - bubble.du_radial(r)).abs() < 1e-11, "r = {r}");
        }
    }
}
