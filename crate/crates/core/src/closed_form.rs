//! The explicit positive solutions of
//!
//! ```text
//! -(a + b ∫|∇u|²) Δu = u⁵   in R³
//! ```
//!
//! Every positive finite-energy solution is a rescaled, translated copy of the
//! standard bubble `Q(x) = 3^{1/4} (1 + |x|²)^{-1/2}`:
//!
//! ```text
//! u(x) = λ^{-1/2} Q((x/√c - x₀)/λ),    c = a + b ∫|∇u|²,
//! ```
//!
//! where `√c` is the positive root of `c = a + b √c ‖∇Q‖₂²`. All derivatives in
//! this module are analytic.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// `Q(0) = 3^{1/4}`.
pub const Q_HEIGHT: f64 = 1.316_074_012_952_492_5;

/// `‖∇Q‖₂² = 3√3π²/4`. Confirmed against two independent quadratures by
/// [`crate::verify::constants_check`].
pub const GRAD_Q_NORM_SQ: f64 = 12.820_992_204_969_127;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KirchhoffParams {
    pub a: f64,
    pub b: f64,
}

impl KirchhoffParams {
    /// `b = 0` is accepted and reduces the problem to the Yamabe equation
    /// `-aΔu = u⁵`.
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let params = Self { a, b };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(
            self.a.is_finite() && self.a > 0.0,
            "a",
            "must be finite and > 0",
        )?;
        ensure(
            self.b.is_finite() && self.b >= 0.0,
            "b",
            "must be finite and >= 0",
        )
    }

    pub fn scaling(&self) -> ScalingConstants {
        scaling_constants(*self)
    }

    /// The contraction factor `κ = b‖∇u‖₂²/(2c) = b‖∇Q‖₂²/(2√c)`. It is the
    /// derivative of `c ↦ a + b√c‖∇Q‖₂²` at the fixed point and stays below 1/2.
    pub fn kappa(&self) -> f64 {
        let sc = self.scaling();
        self.b * sc.grad_q_sq / (2.0 * sc.sqrt_c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingConstants {
    pub grad_q_sq: f64,
    pub sqrt_c: f64,
    pub c: f64,
}

impl ScalingConstants {
    /// `|c - a - b·√c·‖∇Q‖₂²| / c`.
    pub fn relative_defect(&self, params: KirchhoffParams) -> f64 {
        libm::fabs(self.c - params.a - params.b * self.sqrt_c * self.grad_q_sq) / self.c
    }
}

/// The standard bubble `Q(r) = 3^{1/4}(1 + r²)^{-1/2}`.
pub fn eval_q(r: f64) -> Result<f64> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::Domain("radius must be finite and non-negative"));
    }
    Ok(q(r))
}

pub fn gradq_norm_sq() -> f64 {
    GRAD_Q_NORM_SQ
}

pub fn scaling_constants(params: KirchhoffParams) -> ScalingConstants {
    let g = GRAD_Q_NORM_SQ;
    let bg = params.b * g;
    let sqrt_c = 0.5 * (bg + libm::sqrt(bg * bg + 4.0 * params.a));
    ScalingConstants {
        grad_q_sq: g,
        sqrt_c,
        c: sqrt_c * sqrt_c,
    }
}

// Radial profile of Q and its derivatives in the bubble variable s.

#[inline]
fn q(s: f64) -> f64 {
    Q_HEIGHT / libm::sqrt(1.0 + s * s)
}

/// `Q'(s)/s = -3^{1/4}(1+s²)^{-3/2}`, regular at the origin.
#[inline]
fn q_prime_over_s(s: f64) -> f64 {
    let w = 1.0 + s * s;
    -Q_HEIGHT / (w * libm::sqrt(w))
}

#[inline]
fn q_second(s: f64) -> f64 {
    let w = 1.0 + s * s;
    Q_HEIGHT * (2.0 * s * s - 1.0) / (w * w * libm::sqrt(w))
}

/// `ΔQ = Q'' + 2Q'/s`.
#[inline]
fn q_laplacian(s: f64) -> f64 {
    q_second(s) + 2.0 * q_prime_over_s(s)
}

/// Dilation profile `E(s) = Q/2 + sQ' = 3^{1/4}(1 - s²) / (2(1+s²)^{3/2})`.
#[inline]
fn e(s: f64) -> f64 {
    let w = 1.0 + s * s;
    0.5 * Q_HEIGHT * (1.0 - s * s) / (w * libm::sqrt(w))
}

/// `E'(s)/s = 3^{1/4}(s² - 5) / (2(1+s²)^{5/2})`.
#[inline]
fn e_prime_over_s(s: f64) -> f64 {
    let w = 1.0 + s * s;
    0.5 * Q_HEIGHT * (s * s - 5.0) / (w * w * libm::sqrt(w))
}

#[inline]
fn e_second(s: f64) -> f64 {
    let w = 1.0 + s * s;
    let s2 = s * s;
    0.5 * Q_HEIGHT * (-2.0 * s2 * s2 + 23.0 * s2 - 5.0) / (w * w * w * libm::sqrt(w))
}

#[inline]
fn e_laplacian(s: f64) -> f64 {
    e_second(s) + 2.0 * e_prime_over_s(s)
}

/// One member `(a, b, λ, x₀)` of the solution family.
///
/// `x0` is stored exactly as it enters `u(x) = λ^{-1/2} Q((x/√c - x₀)/λ)`; the
/// physical center of the bubble is [`BubbleSpec::center`] `= √c·x₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBubbleSpec", into = "RawBubbleSpec")]
pub struct BubbleSpec {
    params: KirchhoffParams,
    lambda: f64,
    x0: [f64; 3],
    constants: ScalingConstants,
}

#[derive(Serialize, Deserialize)]
struct RawBubbleSpec {
    params: KirchhoffParams,
    lambda: f64,
    x0: [f64; 3],
}

impl TryFrom<RawBubbleSpec> for BubbleSpec {
    type Error = Error;

    fn try_from(raw: RawBubbleSpec) -> Result<Self> {
        BubbleSpec::new(raw.params, raw.lambda, raw.x0)
    }
}

impl From<BubbleSpec> for RawBubbleSpec {
    fn from(spec: BubbleSpec) -> Self {
        RawBubbleSpec {
            params: spec.params,
            lambda: spec.lambda,
            x0: spec.x0,
        }
    }
}

impl BubbleSpec {
    pub fn new(params: KirchhoffParams, lambda: f64, x0: [f64; 3]) -> Result<Self> {
        params.validate()?;
        ensure(
            lambda.is_finite() && lambda > 0.0,
            "lambda",
            "must be finite and > 0",
        )?;
        ensure(x0.iter().all(|v| v.is_finite()), "x0", "must be finite")?;
        Ok(Self {
            params,
            lambda,
            x0,
            constants: scaling_constants(params),
        })
    }

    /// Radial member `λ = 1, x₀ = 0`.
    pub fn radial(params: KirchhoffParams) -> Result<Self> {
        Self::new(params, 1.0, [0.0; 3])
    }

    pub fn params(&self) -> KirchhoffParams {
        self.params
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn x0(&self) -> [f64; 3] {
        self.x0
    }

    pub fn constants(&self) -> ScalingConstants {
        self.constants
    }

    pub fn c(&self) -> f64 {
        self.constants.c
    }

    pub fn kappa(&self) -> f64 {
        self.params.kappa()
    }

    pub fn center(&self) -> [f64; 3] {
        let sc = self.constants.sqrt_c;
        [sc * self.x0[0], sc * self.x0[1], sc * self.x0[2]]
    }

    /// Radial length scale `√c·λ`; the default compactification length.
    pub fn length_scale(&self) -> f64 {
        self.constants.sqrt_c * self.lambda
    }

    fn amplitude(&self) -> f64 {
        1.0 / libm::sqrt(self.lambda)
    }

    fn offset(&self, x: &[f64; 3]) -> Result<([f64; 3], f64)> {
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::Domain("point must be finite"));
        }
        let cen = self.center();
        let d = [x[0] - cen[0], x[1] - cen[1], x[2] - cen[2]];
        let rho = libm::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
        Ok((d, rho))
    }

    // Radial profiles in the distance ρ from the center.

    pub fn u_radial(&self, rho: f64) -> f64 {
        self.amplitude() * q(rho / self.length_scale())
    }

    /// `du/dρ`.
    pub fn du_radial(&self, rho: f64) -> f64 {
        let l = self.length_scale();
        let s = rho / l;
        self.amplitude() * q_prime_over_s(s) * s / l
    }

    pub fn laplacian_u_radial(&self, rho: f64) -> f64 {
        let l = self.length_scale();
        self.amplitude() * q_laplacian(rho / l) / (l * l)
    }

    /// Dilation mode `e₀ = u/2 + ρ u'(ρ)`.
    pub fn e0_radial(&self, rho: f64) -> f64 {
        self.amplitude() * e(rho / self.length_scale())
    }

    pub fn de0_radial(&self, rho: f64) -> f64 {
        let l = self.length_scale();
        let s = rho / l;
        self.amplitude() * e_prime_over_s(s) * s / l
    }

    pub fn laplacian_e0_radial(&self, rho: f64) -> f64 {
        let l = self.length_scale();
        self.amplitude() * e_laplacian(rho / l) / (l * l)
    }

    /// Second radial derivative of `u`; with `du_radial` this is the radial
    /// profile of the translation modes and its derivative.
    pub fn d2u_radial(&self, rho: f64) -> f64 {
        let l = self.length_scale();
        self.amplitude() * q_second(rho / l) / (l * l)
    }

    // Point evaluations on R³.

    pub fn eval_u(&self, x: &[f64; 3]) -> Result<f64> {
        let (_, rho) = self.offset(x)?;
        Ok(self.u_radial(rho))
    }

    pub fn eval_grad_u(&self, x: &[f64; 3]) -> Result<[f64; 3]> {
        let (d, rho) = self.offset(x)?;
        let l = self.length_scale();
        let f = self.amplitude() * q_prime_over_s(rho / l) / (l * l);
        Ok([f * d[0], f * d[1], f * d[2]])
    }

    pub fn eval_laplacian_u(&self, x: &[f64; 3]) -> Result<f64> {
        let (_, rho) = self.offset(x)?;
        Ok(self.laplacian_u_radial(rho))
    }

    /// `∫|∇u|² = √c ‖∇Q‖₂²`, independent of λ and x₀.
    pub fn grad_u_norm_sq(&self) -> f64 {
        self.constants.sqrt_c * self.constants.grad_q_sq
    }

    /// `u/2 + (x - center)·∇u`.
    pub fn dilation_mode(&self, x: &[f64; 3]) -> Result<f64> {
        let (_, rho) = self.offset(x)?;
        Ok(self.e0_radial(rho))
    }

    pub fn laplacian_dilation_mode(&self, x: &[f64; 3]) -> Result<f64> {
        let (_, rho) = self.offset(x)?;
        Ok(self.laplacian_e0_radial(rho))
    }

    /// `∂u/∂x_axis` for `axis ∈ {1, 2, 3}`.
    pub fn translation_mode(&self, axis: usize, x: &[f64; 3]) -> Result<f64> {
        if !(1..=3).contains(&axis) {
            return Err(Error::InvalidParameter {
                name: "axis",
                reason: "must be 1, 2 or 3",
            });
        }
        Ok(self.eval_grad_u(x)?[axis - 1])
    }

    /// `c(-Δu) - 5u⁴·u`, which equals `-4u⁵` on the family.
    pub fn a_operator_on_u(&self, x: &[f64; 3]) -> Result<f64> {
        let u = self.eval_u(x)?;
        let lap = self.eval_laplacian_u(x)?;
        Ok(-self.c() * lap - 5.0 * u * u * u * u * u)
    }

    /// `c(-Δe₀) - 5u⁴e₀`, which vanishes on the family.
    pub fn a_operator_on_e0(&self, x: &[f64; 3]) -> Result<f64> {
        let u = self.eval_u(x)?;
        let e0 = self.dilation_mode(x)?;
        let lap = self.laplacian_dilation_mode(x)?;
        Ok(-self.c() * lap - 5.0 * u * u * u * u * e0)
    }
}

/// A function on R³ that can be substituted into the Kirchhoff equation.
pub trait Candidate {
    fn value(&self, x: &[f64; 3]) -> f64;
    fn laplacian(&self, x: &[f64; 3]) -> f64;
    /// `∫_{R³} |∇v|²`.
    fn grad_norm_sq(&self) -> f64;
}

impl Candidate for BubbleSpec {
    fn value(&self, x: &[f64; 3]) -> f64 {
        let (_, rho) = self.offset(x).expect("finite point");
        self.u_radial(rho)
    }

    fn laplacian(&self, x: &[f64; 3]) -> f64 {
        let (_, rho) = self.offset(x).expect("finite point");
        self.laplacian_u_radial(rho)
    }

    fn grad_norm_sq(&self) -> f64 {
        self.grad_u_norm_sq()
    }
}

/// The unscaled bubble `Q`, which solves `-ΔQ = Q⁵` but not the Kirchhoff
/// equation unless `a + b‖∇Q‖₂² = 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct StandardBubble;

impl Candidate for StandardBubble {
    fn value(&self, x: &[f64; 3]) -> f64 {
        q(norm(x))
    }

    fn laplacian(&self, x: &[f64; 3]) -> f64 {
        q_laplacian(norm(x))
    }

    fn grad_norm_sq(&self) -> f64 {
        GRAD_Q_NORM_SQ
    }
}

/// `factor · inner`.
#[derive(Debug, Clone, Copy)]
pub struct Scaled<C> {
    pub factor: f64,
    pub inner: C,
}

impl<C: Candidate> Candidate for Scaled<C> {
    fn value(&self, x: &[f64; 3]) -> f64 {
        self.factor * self.inner.value(x)
    }

    fn laplacian(&self, x: &[f64; 3]) -> f64 {
        self.factor * self.inner.laplacian(x)
    }

    fn grad_norm_sq(&self) -> f64 {
        self.factor * self.factor * self.inner.grad_norm_sq()
    }
}

/// `-(a + b∫|∇v|²)Δv(x) - v(x)⁵`.
pub fn residual<C: Candidate + ?Sized>(params: KirchhoffParams, v: &C, x: &[f64; 3]) -> f64 {
    let coeff = params.a + params.b * v.grad_norm_sq();
    let val = v.value(x);
    -coeff * v.laplacian(x) - val * val * val * val * val
}

fn norm(x: &[f64; 3]) -> f64 {
    libm::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(a: f64, b: f64) -> KirchhoffParams {
        KirchhoffParams::new(a, b).unwrap()
    }

    #[test]
    fn q_values() {
        assert_relative_eq!(eval_q(0.0).unwrap(), 1.316_074_0, epsilon = 1e-7);
        assert_relative_eq!(
            eval_q(1.0).unwrap(),
            Q_HEIGHT / 2f64.sqrt(),
            max_relative = 1e-15
        );
        assert_relative_eq!(eval_q(1.0).unwrap(), 0.930_604_9, epsilon = 1e-7);
        assert_relative_eq!(
            eval_q(100.0).unwrap(),
            Q_HEIGHT / 10001f64.sqrt(),
            max_relative = 1e-15
        );
        assert_relative_eq!(eval_q(100.0).unwrap(), 0.013_160_1, epsilon = 1e-7);
    }

    #[test]
    fn q_rejects_bad_radius() {
        assert!(eval_q(-1e-300).is_err());
        assert!(eval_q(f64::NAN).is_err());
        assert!(eval_q(f64::INFINITY).is_err());
    }

    #[test]
    fn q_is_decreasing_and_bounded() {
        let mut prev = eval_q(0.0).unwrap();
        for i in 1..2000 {
            let v = eval_q(i as f64 * 0.05).unwrap();
            assert!(v < prev && v > 0.0);
            prev = v;
        }
    }

    #[test]
    fn q_height_constant() {
        assert_relative_eq!(Q_HEIGHT, libm::pow(3.0, 0.25), max_relative = 1e-16);
        let closed = 3.0 * libm::sqrt(3.0) * core::f64::consts::PI * core::f64::consts::PI / 4.0;
        assert_relative_eq!(GRAD_Q_NORM_SQ, closed, max_relative = 1e-15);
    }

    #[test]
    fn constants_reduce_for_b_zero() {
        let sc = scaling_constants(params(1.0, 0.0));
        assert_eq!(sc.c, 1.0);
        let sc = scaling_constants(params(4.0, 0.0));
        assert_eq!(sc.sqrt_c, 2.0);
    }

    #[test]
    fn constants_for_unit_coefficients() {
        // Reference values from a 30-digit evaluation of the quadratic root.
        let sc = scaling_constants(params(1.0, 1.0));
        assert_relative_eq!(sc.sqrt_c, 12.898_520_476_665_796, max_relative = 1e-14);
        assert_relative_eq!(sc.c, 166.371_830_486_966_84, max_relative = 1e-14);
        assert!(sc.relative_defect(params(1.0, 1.0)) < 1e-12);
        assert!(sc.sqrt_c > 1.0 * sc.grad_q_sq);
    }

    #[test]
    fn constants_monotone_on_grid() {
        let vals = [0.1, 0.5, 1.0, 3.0, 10.0];
        for (i, &a) in vals.iter().enumerate() {
            for (j, &b) in vals.iter().enumerate() {
                let c = scaling_constants(params(a, b)).c;
                if i + 1 < vals.len() {
                    assert!(scaling_constants(params(vals[i + 1], b)).c > c);
                }
                if j + 1 < vals.len() {
                    assert!(scaling_constants(params(a, vals[j + 1])).c > c);
                }
            }
        }
    }

    #[test]
    fn kappa_values() {
        assert_relative_eq!(
            params(1.0, 1.0).kappa(),
            0.496_994_683_543_863_7,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            params(100.0, 0.01).kappa(),
            0.006_369_533_358_790_131,
            max_relative = 1e-12
        );
        let k = params(1.0, 1e3).kappa();
        assert!(k < 0.5 && k > 0.499_999);
        assert_eq!(params(1.0, 0.0).kappa(), 0.0);
    }

    #[test]
    fn bubble_reduces_to_q() {
        let spec = BubbleSpec::radial(params(1.0, 0.0)).unwrap();
        for &x in &[[0.0, 0.0, 0.0], [0.3, -1.0, 2.0], [10.0, 0.0, 5.0]] {
            assert_relative_eq!(
                spec.eval_u(&x).unwrap(),
                eval_q(norm(&x)).unwrap(),
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn bubble_height_scaling() {
        let spec = BubbleSpec::new(params(2.0, 0.3), 0.25, [0.0; 3]).unwrap();
        assert_relative_eq!(
            spec.eval_u(&[0.0; 3]).unwrap(),
            2.0 * Q_HEIGHT,
            max_relative = 1e-15
        );
    }

    #[test]
    fn bubble_unit_profile_at_sqrt_c() {
        let spec = BubbleSpec::radial(params(1.0, 1.0)).unwrap();
        let sc = 12.898_520_476_665_796;
        assert_relative_eq!(
            spec.eval_u(&[0.0, sc, 0.0]).unwrap(),
            0.930_604_9,
            epsilon = 1e-7
        );
    }

    #[test]
    fn gradient_vanishes_at_center() {
        let spec = BubbleSpec::new(params(1.0, 1.0), 1.7, [0.2, -0.1, 0.4]).unwrap();
        let g = spec.eval_grad_u(&spec.center()).unwrap();
        assert_eq!(g, [0.0, 0.0, 0.0]);
        assert_relative_eq!(
            spec.dilation_mode(&spec.center()).unwrap(),
            0.5 * spec.eval_u(&spec.center()).unwrap(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let spec = BubbleSpec::new(params(0.7, 0.2), 1.3, [0.1, 0.0, -0.3]).unwrap();
        let h = 1e-4;
        for &x in &[[0.5, 1.0, -2.0], [3.0, -0.5, 0.2], [-1.0, 7.0, 4.0]] {
            let g = spec.eval_grad_u(&x).unwrap();
            for i in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[i] += h;
                xm[i] -= h;
                let fd = (spec.eval_u(&xp).unwrap() - spec.eval_u(&xm).unwrap()) / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-8, "axis {i}: fd {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn laplacian_matches_equation() {
        let spec = BubbleSpec::new(params(3.0, 2.0), 0.6, [1.0, 0.0, 2.0]).unwrap();
        for i in 0..50 {
            let t = i as f64 * 0.37;
            let x = [t.sin() * 40.0, t.cos() * 13.0, t * 2.0];
            let u = spec.eval_u(&x).unwrap();
            let lap = spec.eval_laplacian_u(&x).unwrap();
            let target = -u.powi(5) / spec.c();
            assert!(
                (lap - target).abs() <= 1e-12 * target.abs(),
                "{lap} vs {target}"
            );
        }
    }

    #[test]
    fn laplacian_matches_second_differences() {
        let spec = BubbleSpec::radial(params(1.0, 0.0)).unwrap();
        let x = [0.4, -0.3, 0.9];
        let h = 1e-3;
        let mut fd = 0.0;
        for i in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            fd += spec.eval_u(&xp).unwrap() - 2.0 * spec.eval_u(&x).unwrap()
                + spec.eval_u(&xm).unwrap();
        }
        fd /= h * h;
        assert!((fd - spec.eval_laplacian_u(&x).unwrap()).abs() < 1e-5);
    }

    #[test]
    fn grad_norm_is_scale_and_translation_invariant() {
        let p = params(1.0, 1.0);
        let a = BubbleSpec::new(p, 1.0, [0.0; 3]).unwrap();
        let b = BubbleSpec::new(p, 2.0, [1.0, 2.0, 3.0]).unwrap();
        assert_eq!(a.grad_u_norm_sq(), b.grad_u_norm_sq());
        assert_relative_eq!(
            a.grad_u_norm_sq(),
            12.898_520_476_665_796 * GRAD_Q_NORM_SQ,
            max_relative = 1e-14
        );
        // c - a = b‖∇u‖₂² pins the product independently of the quadratic root.
        assert_relative_eq!(a.grad_u_norm_sq(), 165.37, epsilon = 0.01);
        assert_relative_eq!(a.grad_u_norm_sq(), a.c() - 1.0, max_relative = 1e-13);
        let y = BubbleSpec::radial(params(1.0, 0.0)).unwrap();
        assert_relative_eq!(y.grad_u_norm_sq(), 12.8210, epsilon = 1e-4);
    }

    #[test]
    fn nonlocal_coefficient_is_self_consistent() {
        for &(a, b) in &[(1.0, 1.0), (0.1, 10.0), (10.0, 0.1), (2.0, 0.0)] {
            let p = params(a, b);
            let spec = BubbleSpec::new(p, 0.3, [1.0, 1.0, 0.0]).unwrap();
            let c = spec.c();
            assert!((c - a - b * spec.grad_u_norm_sq()).abs() <= 1e-12 * c);
            assert!(spec.constants().sqrt_c > b * GRAD_Q_NORM_SQ);
        }
    }

    #[test]
    fn residual_vanishes_on_family() {
        let spec = BubbleSpec::new(params(1.0, 1.0), 0.8, [0.1, 0.2, 0.3]).unwrap();
        for i in 0..100 {
            let t = i as f64;
            let x = [
                (t * 0.7).sin() * 30.0,
                (t * 1.3).cos() * 20.0,
                t * 0.1 - 5.0,
            ];
            assert!(residual(spec.params(), &spec, &x).abs() < 1e-10);
        }
    }

    #[test]
    fn residual_of_unscaled_q() {
        let p = params(1.0, 1.0);
        for &x in &[[0.0, 0.0, 0.0], [1.0, 2.0, 0.5]] {
            let qv = StandardBubble.value(&x);
            let expected = (p.a + p.b * GRAD_Q_NORM_SQ - 1.0) * qv.powi(5);
            let r = residual(p, &StandardBubble, &x);
            assert_relative_eq!(r, expected, max_relative = 1e-13);
            assert_relative_eq!(r / qv.powi(5), 12.8210, epsilon = 1e-4);
        }
    }

    #[test]
    fn residual_of_doubled_solution_is_negative_at_center() {
        let spec = BubbleSpec::radial(params(1.0, 1.0)).unwrap();
        let doubled = Scaled {
            factor: 2.0,
            inner: spec,
        };
        assert!(residual(spec.params(), &doubled, &[0.0; 3]) < 0.0);
    }

    #[test]
    fn dilation_mode_yamabe_closed_form() {
        let spec = BubbleSpec::radial(params(1.0, 0.0)).unwrap();
        for i in 0..40 {
            let r = i as f64 * 0.25;
            let expected = Q_HEIGHT * (1.0 - r * r) / (2.0 * (1.0 + r * r).powf(1.5));
            let got = spec.dilation_mode(&[0.0, 0.0, r]).unwrap();
            assert!((got - expected).abs() < 1e-15);
        }
        assert_eq!(spec.dilation_mode(&[1.0, 0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn dilation_mode_matches_definition() {
        let spec = BubbleSpec::new(params(2.0, 0.5), 1.4, [0.3, -0.2, 0.1]).unwrap();
        let cen = spec.center();
        for &x in &[[1.0, 2.0, 3.0], [-4.0, 0.5, 0.0]] {
            let g = spec.eval_grad_u(&x).unwrap();
            let d: f64 = (0..3).map(|i| (x[i] - cen[i]) * g[i]).sum();
            let expected = 0.5 * spec.eval_u(&x).unwrap() + d;
            assert_relative_eq!(
                spec.dilation_mode(&x).unwrap(),
                expected,
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn a_operator_identities() {
        let spec = BubbleSpec::new(params(1.0, 1.0), 1.0, [0.0; 3]).unwrap();
        for i in 0..60 {
            let r = i as f64 * 1.7;
            let x = [r, 0.5 * r, -0.2 * r];
            let u = spec.eval_u(&x).unwrap();
            let on_u = spec.a_operator_on_u(&x).unwrap();
            assert!((on_u + 4.0 * u.powi(5)).abs() < 1e-10 * (1.0 + u.powi(5)));
            assert!(spec.a_operator_on_e0(&x).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn translation_axis_validation() {
        let spec = BubbleSpec::radial(params(1.0, 1.0)).unwrap();
        assert!(spec.translation_mode(0, &[1.0, 0.0, 0.0]).is_err());
        assert!(spec.translation_mode(4, &[1.0, 0.0, 0.0]).is_err());
        assert!(spec.eval_u(&[f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(KirchhoffParams::new(0.0, 1.0).is_err());
        assert!(KirchhoffParams::new(1.0, -1.0).is_err());
        assert!(BubbleSpec::new(params(1.0, 1.0), 0.0, [0.0; 3]).is_err());
        assert!(BubbleSpec::new(params(1.0, 1.0), 1.0, [f64::NAN, 0.0, 0.0]).is_err());
    }
}
