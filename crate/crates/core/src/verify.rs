//! Pointwise and integral identities of the solution family, checked against
//! independent oracles.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::closed_form::{residual, BubbleSpec, KirchhoffParams, GRAD_Q_NORM_SQ};
use crate::error::Result;
use crate::grid::{build_grid, GridSpec};
use crate::quadrature::{integrate, integrate_half_line};
use crate::report::{Check, VerificationReport};
use crate::shooting::kirchhoff_fixed_point;
use crate::spectral::{proof_chain_check, Tolerances};

/// Grid size of the spectral quadrature in [`constants_check`].
pub const CONSTANTS_GRID: usize = 128;
/// Relative agreement required between quadratures of `‖∇Q‖₂²`.
pub const QUADRATURE_TOL: f64 = 1e-9;
/// Relative agreement required between the two routes to `c`.
pub const FIXED_POINT_TOL: f64 = 1e-10;

/// `∫₀^∞ f` by adaptive Gauss–Kronrod: geometric pieces up to `cutoff`, then
/// `r = cutoff/s` maps the tail onto `(0, 1]`.
pub fn half_line_integral<F: Fn(f64) -> f64>(f: F, cutoff: f64, rel_tol: f64) -> Result<f64> {
    let tail = |big_r: f64| -> f64 {
        integrate(
            |s: f64| f(big_r / s) * big_r / (s * s),
            0.0,
            1.0,
            1e-300,
            rel_tol,
            4096,
        )
        .map(|e| e.value)
        .unwrap_or(f64::NAN)
    };
    Ok(integrate_half_line(&f, cutoff, tail, rel_tol)?.value)
}

/// `‖∇Q‖₂²` three ways: closed form, spectral grid quadrature and adaptive
/// quadrature; then `c` from the quadratic formula against the fixed-point
/// iteration.
pub fn constants_check(params: KirchhoffParams) -> Result<VerificationReport> {
    let q = BubbleSpec::radial(KirchhoffParams::new(1.0, 0.0)?)?;
    let integrand = |r: f64| {
        let d = q.du_radial(r);
        d * d * r * r
    };
    let grid = build_grid(GridSpec::new(CONSTANTS_GRID, 1.0)?)?;
    let by_grid = 4.0 * PI * grid.integrate(integrand);
    let by_adaptive = 4.0 * PI * half_line_integral(integrand, 64.0, 1e-13)?;
    let closed = GRAD_Q_NORM_SQ;
    let rel = |x: f64, y: f64| libm::fabs(x - y) / libm::fabs(y);

    let mut report = VerificationReport::new();
    report.push(Check::below(
        "grad_q_grid_vs_closed_form",
        rel(by_grid, closed),
        QUADRATURE_TOL,
    ));
    report.push(Check::below(
        "grad_q_adaptive_vs_closed_form",
        rel(by_adaptive, closed),
        QUADRATURE_TOL,
    ));
    report.push(Check::below(
        "grad_q_grid_vs_adaptive",
        rel(by_grid, by_adaptive),
        QUADRATURE_TOL,
    ));

    let sc = params.scaling();
    let (c_fp, _) = kirchhoff_fixed_point(params, 1e-15)?;
    report.push(Check::below(
        "c_closed_form_vs_fixed_point",
        rel(sc.c, c_fp),
        FIXED_POINT_TOL,
    ));
    report.push(Check::below(
        "scaling_relation_defect",
        sc.relative_defect(params),
        FIXED_POINT_TOL,
    ));
    Ok(report)
}

/// Deterministic points around the bubble centre: radii spread over
/// `(0, 10λ√c)` along a golden-angle spiral of directions.
pub fn sample_points(bubble: &BubbleSpec, count: usize) -> Vec<[f64; 3]> {
    let golden = PI * (3.0 - libm::sqrt(5.0));
    let center = bubble.center();
    let scale = bubble.length_scale();
    (0..count)
        .map(|i| {
            let t = (i as f64 + 0.5) / count as f64;
            let z = 1.0 - 2.0 * t;
            let ring = libm::sqrt(1.0 - z * z);
            let phi = golden * i as f64;
            // Low-discrepancy radius so the core and the tail are both hit.
            let rho = 10.0 * scale * libm::fmod(0.618_033_988_749_895 * (i as f64 + 1.0), 1.0);
            [
                center[0] + rho * ring * libm::cos(phi),
                center[1] + rho * ring * libm::sin(phi),
                center[2] + rho * z,
            ]
        })
        .collect()
}

/// Worst `|residual|` of the family member over `points`.
pub fn residual_check(bubble: &BubbleSpec, points: &[[f64; 3]], tol: f64) -> Check {
    let worst = points
        .iter()
        .map(|x| libm::fabs(residual(bubble.params(), bubble, x)))
        .fold(0.0f64, f64::max);
    Check::below("solution_residual", worst, tol)
}

/// `⟨∇u, ∇e₀⟩` by adaptive quadrature, normalized by `‖∇u‖₂‖∇e₀‖₂`.
pub fn dilation_pairing(bubble: &BubbleSpec) -> Result<f64> {
    let cutoff = 64.0 * bubble.length_scale();
    let cross = half_line_integral(
        |r| bubble.du_radial(r) * bubble.de0_radial(r) * r * r,
        cutoff,
        1e-13,
    )?;
    let uu = half_line_integral(
        |r| {
            let d = bubble.du_radial(r);
            d * d * r * r
        },
        cutoff,
        1e-13,
    )?;
    let ee = half_line_integral(
        |r| {
            let d = bubble.de0_radial(r);
            d * d * r * r
        },
        cutoff,
        1e-13,
    )?;
    Ok(libm::fabs(cross) / libm::sqrt(uu * ee))
}

/// Pointwise `𝒜u + 4u⁵ = 0`, `𝒜e₀ = 0` and the vanishing dilation pairing.
pub fn identity_checks(
    bubble: &BubbleSpec,
    points: &[[f64; 3]],
    tol: f64,
) -> Result<VerificationReport> {
    let mut worst_u = 0.0f64;
    let mut worst_e0 = 0.0f64;
    for x in points {
        let u = bubble.eval_u(x)?;
        let u5 = u * u * u * u * u;
        worst_u = worst_u.max(libm::fabs(bubble.a_operator_on_u(x)? + 4.0 * u5));
        worst_e0 = worst_e0.max(libm::fabs(bubble.a_operator_on_e0(x)?));
    }
    let mut report = VerificationReport::new();
    report.push(Check::below(
        "pairing_grad_u_grad_e0",
        dilation_pairing(bubble)?,
        tol,
    ));
    report.push(Check::below("a_u_plus_4u5_pointwise", worst_u, tol));
    report.push(Check::below("a_e0_pointwise", worst_e0, tol));
    Ok(report)
}

/// `(a, b)` values of the 5 × 5 grid used by [`kappa_grid_check`].
pub const KAPPA_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

/// Largest `κ` over the `(a, b)` grid, which must stay below 1/2.
pub fn kappa_grid_check() -> Result<Check> {
    let mut worst = 0.0f64;
    for &a in &KAPPA_GRID {
        for &b in &KAPPA_GRID {
            worst = worst.max(KirchhoffParams::new(a, b)?.kappa());
        }
    }
    Ok(Check::below("kappa_max_on_grid", worst, 0.5))
}

/// Everything that does not need an eigensolve over all sectors: constants,
/// the residual and identities at sample points, `κ`, and the discrete proof
/// chain on an `n`-point grid.
pub fn verify(bubble: &BubbleSpec, n: usize, tol: &Tolerances) -> Result<VerificationReport> {
    let mut report = constants_check(bubble.params())?;
    let points = sample_points(bubble, 100);
    report.push(residual_check(bubble, &points, tol.identity));
    report.extend(identity_checks(bubble, &points, tol.identity)?);
    report.push(kappa_grid_check()?);
    report.push(Check::below(
        &format!("kappa_at_{}_{}", bubble.params().a, bubble.params().b),
        bubble.kappa(),
        0.5,
    ));
    let grid = build_grid(GridSpec::for_bubble(n, bubble)?)?;
    let chain = proof_chain_check(&grid, bubble, tol)?;
    for mut c in chain.checks {
        c.name = format!("discrete_{}", c.name);
        report.push(c);
    }
    Ok(report)
}
