//! Rediscovers the solution family by shooting the radial ODE
//!
//! ```text
//! -c(φ'' + 2φ'/r) = φ⁵,   φ(0) = α,   φ'(0) = 0
//! ```
//!
//! and iterating the self-consistency relation `c = a + b√c‖∇Q‖₂²`. The
//! integrator never evaluates the closed form; it is only consulted to grade
//! the finished profile.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::closed_form::{
    eval_q, BubbleSpec, Candidate, KirchhoffParams, GRAD_Q_NORM_SQ, Q_HEIGHT,
};
use crate::error::{ensure, Error, Result};

/// Truncation radius in units of the bubble's length scale `λ√c`.
pub const TRUNCATION: f64 = 50.0;
/// Series start radius in units of `λ√c`.
pub const SERIES_START: f64 = 1e-3;
pub const DEFAULT_SAMPLES: usize = 10_000;
pub const FIXED_POINT_CAP: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootOptions {
    /// Number of uniform sample intervals on `[0, R]`.
    pub samples: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            rel_tol: 1e-13,
            abs_tol: 1e-16,
            max_steps: 2_000_000,
        }
    }
}

/// The far field `φ ≈ C/r + e/r³ + f/r⁵` beyond the truncation radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarField {
    pub radius: f64,
    pub coeffs: [f64; 3],
}

impl FarField {
    fn from_constant(big_c: f64, c: f64, radius: f64) -> Self {
        let e = -libm::pow(big_c, 5.0) / (6.0 * c);
        let f = -libm::pow(big_c, 4.0) * e / (4.0 * c);
        Self {
            radius,
            coeffs: [big_c, e, f],
        }
    }

    /// Newton solve for the `C` whose tail passes through `φ(R)`.
    fn fit(phi_r: f64, c: f64, radius: f64) -> Self {
        let mut big_c = phi_r * radius;
        for _ in 0..50 {
            let ff = Self::from_constant(big_c, c, radius);
            let r = ff.value(radius) - phi_r;
            let h = 1e-7 * big_c;
            let slope = (Self::from_constant(big_c + h, c, radius).value(radius)
                - Self::from_constant(big_c - h, c, radius).value(radius))
                / (2.0 * h);
            let step = r / slope;
            big_c -= step;
            if libm::fabs(step) <= 1e-16 * libm::fabs(big_c) {
                break;
            }
        }
        Self::from_constant(big_c, c, radius)
    }

    pub fn constant(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn value(&self, r: f64) -> f64 {
        let [cc, e, f] = self.coeffs;
        let r2 = r * r;
        (cc + (e + f / r2) / r2) / r
    }

    pub fn slope(&self, r: f64) -> f64 {
        let [cc, e, f] = self.coeffs;
        let r2 = r * r;
        -(cc + (3.0 * e + 5.0 * f / r2) / r2) / r2
    }

    pub fn laplacian(&self, r: f64) -> f64 {
        let [_, e, f] = self.coeffs;
        let r2 = r * r;
        (6.0 * e + 20.0 * f / r2) / (r2 * r2 * r)
    }

    /// `∫_R^∞ φ'² r² dr`.
    pub fn energy_tail(&self) -> f64 {
        let [cc, e, f] = self.coeffs;
        let r = self.radius;
        cc * cc / r
            + 2.0 * cc * e / (r * r * r)
            + (9.0 * e * e + 10.0 * cc * f) / (5.0 * libm::pow(r, 5.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShootResult {
    pub alpha: f64,
    pub c: f64,
    /// Uniform radii `0 = r₀ < … < r_N = R`.
    pub radii: Vec<f64>,
    pub profile: Vec<f64>,
    pub slope: Vec<f64>,
    pub far_field: FarField,
    pub lambda_fit: f64,
    /// `∫_{R³}|∇φ|²`, including the far-field tail.
    pub grad_norm_sq: f64,
    /// Worst relative deviation from the closed-form bubble over the samples.
    pub max_rel_err: f64,
    pub steps: usize,
}

impl ShootResult {
    /// `a + b‖∇φ‖₂²`, the coefficient this profile would induce.
    pub fn recovered_c(&self, params: KirchhoffParams) -> f64 {
        params.a + params.b * self.grad_norm_sq
    }

    pub fn truncation_radius(&self) -> f64 {
        self.far_field.radius
    }

    fn spacing(&self) -> f64 {
        self.radii[1] - self.radii[0]
    }

    /// `φ(r)`: cubic Hermite on the samples, far field beyond `R`.
    pub fn value_at(&self, r: f64) -> f64 {
        let r = libm::fabs(r);
        if r >= self.truncation_radius() {
            return self.far_field.value(r);
        }
        let h = self.spacing();
        let i = ((r / h) as usize).min(self.radii.len() - 2);
        let t = (r - self.radii[i]) / h;
        let (p0, p1) = (self.profile[i], self.profile[i + 1]);
        let (m0, m1) = (self.slope[i] * h, self.slope[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * p0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * p1
            + (t3 - t2) * m1
    }

    /// `Δφ(r) = (φ')' + 2φ'/r`, from a six-point Lagrange derivative of the
    /// sampled slope. The ODE right-hand side is deliberately not used.
    pub fn laplacian_at(&self, r: f64) -> f64 {
        let r = libm::fabs(r);
        if r >= self.truncation_radius() {
            return self.far_field.laplacian(r);
        }
        let h = self.spacing();
        let n = self.radii.len();
        let start = ((r / h) as isize - 2).clamp(0, n as isize - 6) as usize;
        let xs = &self.radii[start..start + 6];
        let ys = &self.slope[start..start + 6];
        let mut dslope = 0.0;
        let mut slope = 0.0;
        for (j, &y) in ys.iter().enumerate() {
            let (l, dl) = lagrange_basis(xs, j, r);
            slope += l * y;
            dslope += dl * y;
        }
        if r < 1e-12 * h {
            // φ'(r)/r → φ''(0).
            3.0 * dslope
        } else {
            dslope + 2.0 * slope / r
        }
    }
}

/// Value and derivative at `x` of the `j`-th Lagrange basis polynomial on `xs`.
fn lagrange_basis(xs: &[f64], j: usize, x: f64) -> (f64, f64) {
    let mut value = 1.0;
    let mut deriv = 0.0;
    for (k, &xk) in xs.iter().enumerate() {
        if k == j {
            continue;
        }
        let denom = xs[j] - xk;
        deriv = deriv * (x - xk) / denom + value / denom;
        value *= (x - xk) / denom;
    }
    (value, deriv)
}

impl Candidate for ShootResult {
    fn value(&self, x: &[f64; 3]) -> f64 {
        self.value_at(libm::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]))
    }

    fn laplacian(&self, x: &[f64; 3]) -> f64 {
        self.laplacian_at(libm::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]))
    }

    fn grad_norm_sq(&self) -> f64 {
        self.grad_norm_sq
    }
}

type State = [f64; 3];

/// `(φ, φ', ∫φ'²r²)`.
fn rhs(c: f64, r: f64, y: &State) -> State {
    let (phi, psi) = (y[0], y[1]);
    let p2 = phi * phi;
    [psi, -p2 * p2 * phi / c - 2.0 * psi / r, psi * psi * r * r]
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combine(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for (w, k) in terms {
        for i in 0..3 {
            out[i] += h * w * k[i];
        }
    }
    out
}

struct Stepper {
    c: f64,
    opts: ShootOptions,
    h: f64,
    steps: usize,
}

impl Stepper {
    /// Advances `y` from `r0` to `r1` adaptively, landing exactly on `r1`.
    fn advance(&mut self, y: &mut State, r0: f64, r1: f64) -> Result<()> {
        let mut r = r0;
        let mut k1 = rhs(self.c, r, y);
        while r < r1 {
            if self.steps >= self.opts.max_steps {
                return Err(Error::Integrator("step budget exhausted"));
            }
            let last = r + self.h >= r1;
            let h = if last { r1 - r } else { self.h };
            let k2 = rhs(self.c, r + C2 * h, &combine(y, h, &[(A21, &k1)]));
            let k3 = rhs(
                self.c,
                r + C3 * h,
                &combine(y, h, &[(A31, &k1), (A32, &k2)]),
            );
            let k4 = rhs(
                self.c,
                r + C4 * h,
                &combine(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
            );
            let k5 = rhs(
                self.c,
                r + C5 * h,
                &combine(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = rhs(
                self.c,
                r + h,
                &combine(
                    y,
                    h,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                ),
            );
            let y_new = combine(
                y,
                h,
                &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
            );
            let k7 = rhs(self.c, r + h, &y_new);
            let mut err = 0.0f64;
            for i in 0..3 {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let scale = self.opts.abs_tol
                    + self.opts.rel_tol * libm::fabs(y[i]).max(libm::fabs(y_new[i]));
                err = err.max(libm::fabs(e) / scale);
            }
            if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                return Err(Error::Integrator("non-finite state"));
            }
            self.steps += 1;
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * libm::pow(err, -0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                r = if last { r1 } else { r + h };
                *y = y_new;
                k1 = k7;
                if !last {
                    self.h = h * factor;
                }
            } else {
                self.h = h * factor.min(1.0);
                if self.h <= 1e-14 * r1 {
                    return Err(Error::Integrator("step size underflow"));
                }
            }
        }
        Ok(())
    }
}

pub fn shoot_ground_state(c: f64, alpha: f64) -> Result<ShootResult> {
    shoot_with(c, alpha, &ShootOptions::default())
}

pub fn shoot_with(c: f64, alpha: f64, opts: &ShootOptions) -> Result<ShootResult> {
    ensure(c.is_finite() && c > 0.0, "c", "must be finite and positive")?;
    ensure(
        alpha.is_finite() && alpha > 0.0,
        "alpha",
        "must be finite and positive",
    )?;
    ensure(opts.samples >= 8, "samples", "must be at least 8")?;

    // The height fixes the scale through u_λ(0) = λ^{-1/2}·3^{1/4}.
    let lambda = {
        let s = Q_HEIGHT / alpha;
        s * s
    };
    let scale = lambda * libm::sqrt(c);
    let radius = TRUNCATION * scale;
    let r_start = SERIES_START * scale;

    // Regular series φ = α + a₂r² + a₄r⁴ through the coordinate singularity.
    let a2 = -libm::pow(alpha, 5.0) / (6.0 * c);
    let a4 = -libm::pow(alpha, 4.0) * a2 / (4.0 * c);
    let series = |r: f64| -> State {
        let r2 = r * r;
        [
            alpha + (a2 + a4 * r2) * r2,
            (2.0 * a2 + 4.0 * a4 * r2) * r,
            (4.0 * a2 * a2 / 5.0 + 16.0 * a2 * a4 * r2 / 7.0) * r2 * r2 * r,
        ]
    };

    let n = opts.samples;
    let h = radius / n as f64;
    let mut radii = Vec::with_capacity(n + 1);
    let mut profile = Vec::with_capacity(n + 1);
    let mut slope = Vec::with_capacity(n + 1);
    radii.push(0.0);
    profile.push(alpha);
    slope.push(0.0);

    let mut stepper = Stepper {
        c,
        opts: *opts,
        h: r_start,
        steps: 0,
    };
    let mut r = r_start;
    let mut y = series(r_start);
    for i in 1..=n {
        let target = if i == n { radius } else { i as f64 * h };
        if target <= r_start {
            let s = series(target);
            radii.push(target);
            profile.push(s[0]);
            slope.push(s[1]);
            continue;
        }
        stepper.advance(&mut y, r, target)?;
        r = target;
        radii.push(target);
        profile.push(y[0]);
        slope.push(y[1]);
    }
    if profile.iter().any(|&p| p <= 0.0) {
        return Err(Error::Integrator("profile changed sign"));
    }

    let far_field = FarField::fit(y[0], c, radius);
    let grad_norm_sq = 4.0 * PI * (y[2] + far_field.energy_tail());
    let ratio = alpha / y[0];
    let lambda_fit = radius / (libm::sqrt(c) * libm::sqrt(ratio * ratio - 1.0));

    let mut max_rel_err = 0.0f64;
    for (&ri, &pi) in radii.iter().zip(&profile) {
        let exact = eval_q(ri / scale)? / libm::sqrt(lambda);
        max_rel_err = max_rel_err.max(libm::fabs(pi - exact) / exact);
    }

    Ok(ShootResult {
        alpha,
        c,
        radii,
        profile,
        slope,
        far_field,
        lambda_fit,
        grad_norm_sq,
        max_rel_err,
        steps: stepper.steps,
    })
}

/// Classic shooting: bisects on the height until the far-field constant `C`
/// of `φ ≈ C/r` hits `target`. `C` decreases with the height.
pub fn shoot_for_decay_constant(
    c: f64,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
) -> Result<ShootResult> {
    ensure(
        target.is_finite() && target > 0.0,
        "target",
        "must be positive",
    )?;
    ensure(0.0 < lo && lo < hi, "bracket", "need 0 < lo < hi")?;
    ensure(rel_tol > 0.0, "rel_tol", "must be positive")?;
    let opts = ShootOptions {
        samples: 2000,
        ..ShootOptions::default()
    };
    let constant =
        |alpha: f64| -> Result<f64> { Ok(shoot_with(c, alpha, &opts)?.far_field.constant()) };
    if !(constant(lo)? >= target && constant(hi)? <= target) {
        return Err(Error::Domain(
            "bracket does not enclose the target constant",
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if constant(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= rel_tol * hi {
            return shoot_ground_state(c, 0.5 * (lo + hi));
        }
    }
    Err(Error::IterationCap(200))
}

/// `c_{k+1} = a + b√c_k‖∇Q‖₂²` from `c₀ = a`, stopping once
/// `|c_{k+1} - c_k| < tol·c_k`. Returns `(c, iterations)`.
pub fn kirchhoff_fixed_point(params: KirchhoffParams, tol: f64) -> Result<(f64, usize)> {
    params.validate()?;
    ensure(
        tol.is_finite() && tol > 0.0,
        "tol",
        "must be finite and positive",
    )?;
    let mut c = params.a;
    for k in 1..=FIXED_POINT_CAP {
        let next = params.a + params.b * libm::sqrt(c) * GRAD_Q_NORM_SQ;
        if !next.is_finite() {
            return Err(Error::NonFinite("fixed-point iterate"));
        }
        let done = libm::fabs(next - c) < tol * c;
        c = next;
        if done {
            return Ok((c, k));
        }
    }
    Err(Error::IterationCap(FIXED_POINT_CAP))
}

pub fn self_consistent_rediscovery(params: KirchhoffParams) -> Result<ShootResult> {
    self_consistent_rediscovery_with(params, Q_HEIGHT)
}

/// Fixed point for `c`, then a shot at that `c`. `max_rel_err` of the result
/// is measured against the closed-form family member with the same height.
pub fn self_consistent_rediscovery_with(
    params: KirchhoffParams,
    alpha: f64,
) -> Result<ShootResult> {
    let (c, _) = kirchhoff_fixed_point(params, 1e-15)?;
    let mut shot = shoot_ground_state(c, alpha)?;
    let lambda = {
        let s = Q_HEIGHT / alpha;
        s * s
    };
    let member = BubbleSpec::new(params, lambda, [0.0; 3])?;
    let mut worst = 0.0f64;
    for (&r, &p) in shot.radii.iter().zip(&shot.profile) {
        let exact = member.eval_u(&[r, 0.0, 0.0])?;
        worst = worst.max(libm::fabs(p - exact) / exact);
    }
    shot.max_rel_err = worst;
    Ok(shot)
}
