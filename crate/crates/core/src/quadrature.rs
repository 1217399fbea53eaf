//! Adaptive Gauss–Kronrod (7/15) integration, plus a semi-infinite driver
//! that integrates on `[0, R]` and adds a caller-supplied analytic tail.
//!
//! This integrator shares nothing with the collocation grid and serves as the
//! independent check on every grid quadrature.

use alloc::collections::BinaryHeap;
use core::cmp::Ordering;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Segment {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, &x) in XGK.iter().take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        lo,
        hi,
        value: kron * half,
        error: libm::fabs((kron - gauss) * half),
    }
}

/// Integrates `f` over `[lo, hi]` until the summed error estimate falls below
/// `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Result<Estimate> {
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(Error::Domain(
            "integration bounds must be finite and ordered",
        ));
    }
    let mut heap = BinaryHeap::new();
    let first = kronrod(&f, lo, hi);
    let mut value = first.value;
    let mut error = first.error;
    heap.push(first);
    let mut evaluations = 15;
    while error > abs_tol.max(rel_tol * libm::fabs(value)) {
        if heap.len() >= max_segments {
            return Err(Error::IterationCap(max_segments));
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        let left = kronrod(&f, worst.lo, mid);
        let right = kronrod(&f, mid, worst.hi);
        evaluations += 30;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        if !value.is_finite() {
            return Err(Error::NonFinite("adaptive quadrature"));
        }
        heap.push(left);
        heap.push(right);
    }
    // Re-sum for a value free of the running-update drift.
    let mut segments = heap.into_vec();
    segments.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let value = segments.iter().map(|s| s.value).sum();
    let error = segments.iter().map(|s| s.error).sum();
    Ok(Estimate {
        value,
        error,
        evaluations,
    })
}

/// `∫₀^∞ f(r) dr` as `∫₀^R f + tail(R)`, with `[0, R]` split geometrically so
/// that both the core and the slowly decaying part are resolved.
pub fn integrate_half_line<F, T>(f: F, cutoff: f64, tail: T, rel_tol: f64) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
    T: Fn(f64) -> f64,
{
    if !(cutoff.is_finite() && cutoff > 0.0) {
        return Err(Error::Domain("cutoff must be positive"));
    }
    let mut total = Estimate {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };
    let mut lo = 0.0;
    let mut hi = cutoff.min(1.0);
    loop {
        let piece = integrate(&f, lo, hi, 1e-300, rel_tol, 4096)?;
        total.value += piece.value;
        total.error += piece.error;
        total.evaluations += piece.evaluations;
        if hi >= cutoff {
            break;
        }
        lo = hi;
        hi = (hi * 4.0).min(cutoff);
    }
    total.value += tail(cutoff);
    Ok(total)
}
