//! Sector-wise spectra of `𝓛₊` (or `𝒜`) against the `Ḣ¹` Gram.
//!
//! In the `Ḣ¹` metric the kernel modes are isolated eigenvalues `μ ≈ 0` and
//! the rest of the spectrum stays a fixed fraction of `c` away, so the kernel
//! count per sector is a gap statement. Counts are weighted by the
//! spherical-harmonic multiplicity `2ℓ + 1`; the expected total is 4 (one
//! dilation in `ℓ = 0`, three translations from the single `ℓ = 1` profile).

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::closed_form::BubbleSpec;
use crate::error::Result;
use crate::grid::{build_grid, GridSpec, RadialGrid};
use crate::linalg::gram_cosine;
use crate::operator::{
    assemble_a_sector, assemble_lplus_sector, dual_residual, RankOneSolver, SectorOperator,
};
use crate::report::{Check, ConvergenceRow, KernelSummary, Status, VerificationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FormKind {
    /// The local operator `𝒜`.
    A,
    /// The full linearization `𝓛₊` including the nonlocal term.
    #[default]
    Lplus,
}

impl FormKind {
    pub fn assemble(self, grid: &RadialGrid, bubble: &BubbleSpec, ell: usize) -> SectorOperator {
        match self {
            FormKind::A => assemble_a_sector(grid, bubble, ell),
            FormKind::Lplus => assemble_lplus_sector(grid, bubble, ell),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Fixed kernel threshold; `None` selects the adaptive rule.
    pub kernel: Option<f64>,
    pub kernel_floor: f64,
    pub alignment: f64,
    /// Allowed relative change of the gap between the two finest grids.
    pub gap_stability: f64,
    /// Absolute tolerance for pointwise identities and relative tolerance for
    /// discrete ones.
    pub identity: f64,
    /// Kernel eigenvalues below `roundoff·c` count as converged.
    pub roundoff: f64,
    pub eigen_count: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            kernel: None,
            kernel_floor: 1e-12,
            alignment: 0.999,
            gap_stability: 0.10,
            identity: 1e-10,
            roundoff: 1e-10,
            eigen_count: 6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub ell: usize,
    pub eigenvalues: Vec<f64>,
    /// `Ḣ¹`-orthonormal.
    pub eigenvectors: Vec<DVector<f64>>,
}

/// The `k` algebraically smallest generalized eigenpairs of the operator's
/// form against its Gram.
pub fn lowest_eigenpairs(op: &SectorOperator, k: usize) -> Result<EigenResult> {
    let eig = op.eigen()?;
    let k = k.max(1).min(eig.eigenvalues.len());
    Ok(EigenResult {
        ell: op.ell,
        eigenvalues: eig.eigenvalues[..k].to_vec(),
        eigenvectors: (0..k)
            .map(|j| eig.eigenvectors.column(j).into_owned())
            .collect(),
    })
}

/// Number of generalized eigenvalues below `-tol`.
pub fn negative_index(op: &SectorOperator, tol: f64) -> Result<usize> {
    let eig = op.eigen()?;
    Ok(eig.eigenvalues.iter().filter(|&&mu| mu < -tol).count())
}

/// Sampled analytic kernel profile of a sector: `e₀` for `ℓ = 0`, `u'` for
/// `ℓ = 1`.
pub fn analytic_mode(grid: &RadialGrid, bubble: &BubbleSpec, ell: usize) -> Option<DVector<f64>> {
    match ell {
        0 => Some(grid.sample(|r| bubble.e0_radial(r))),
        1 => Some(grid.sample(|r| bubble.du_radial(r))),
        _ => None,
    }
}

#[derive(Debug, Clone)]
pub struct SectorAnalysis {
    pub ell: usize,
    pub eigen: EigenResult,
    /// Dual-norm residual of the analytic mode, when the sector has one.
    pub mode_residual: Option<f64>,
    /// `|cos|` of each eigenvector against the analytic mode.
    pub alignments: Vec<Option<f64>>,
}

pub fn analyze_sector(
    grid: &RadialGrid,
    bubble: &BubbleSpec,
    ell: usize,
    kind: FormKind,
    k: usize,
) -> Result<SectorAnalysis> {
    let op = kind.assemble(grid, bubble, ell);
    let eigen = lowest_eigenpairs(&op, k)?;
    let mode = analytic_mode(grid, bubble, ell);
    let (mode_residual, alignments) = match &mode {
        Some(y) => {
            let factor = op.gram_factor()?;
            let res = dual_residual(&op, &factor, y);
            let al = eigen
                .eigenvectors
                .iter()
                .map(|x| Some(gram_cosine(&op.gram, x, y)))
                .collect();
            (Some(res), al)
        }
        None => (None, alloc::vec![None; eigen.eigenvalues.len()]),
    };
    Ok(SectorAnalysis {
        ell,
        eigen,
        mode_residual,
        alignments,
    })
}

/// `max(10 × largest analytic-mode residual, floor)` unless overridden.
pub fn kernel_tolerance(sectors: &[SectorAnalysis], tol: &Tolerances) -> f64 {
    if let Some(t) = tol.kernel {
        return t;
    }
    let worst = sectors
        .iter()
        .filter_map(|s| s.mode_residual)
        .fold(0.0f64, f64::max);
    (10.0 * worst).max(tol.kernel_floor)
}

/// Clusters eigenvalues and turns per-sector spectra into a report.
pub fn summarize(sectors: &[SectorAnalysis], tol: &Tolerances) -> VerificationReport {
    let tol_kernel = kernel_tolerance(sectors, tol);
    let mut counts = BTreeMap::new();
    let mut alignments = BTreeMap::new();
    let mut sector_gaps = BTreeMap::new();
    let mut kernel_eigenvalues = BTreeMap::new();
    let mut ambiguous = Vec::new();
    let mut gap = f64::INFINITY;
    let mut dim = 0;

    for s in sectors {
        let ell = s.ell as u32;
        let mut count = 0;
        let mut kernel_mu = Vec::new();
        let mut best_alignment: Option<f64> = None;
        let mut sector_gap = f64::INFINITY;
        for (j, &mu) in s.eigen.eigenvalues.iter().enumerate() {
            let m = libm::fabs(mu);
            if m < tol_kernel {
                count += 1;
                kernel_mu.push(m);
                if let Some(a) = s.alignments[j] {
                    best_alignment = Some(best_alignment.map_or(a, |b: f64| b.max(a)));
                }
            } else {
                if m < 10.0 * tol_kernel {
                    ambiguous.push((ell, mu));
                }
                sector_gap = sector_gap.min(m);
            }
        }
        kernel_mu.sort_by(|a, b| b.total_cmp(a));
        dim += (2 * s.ell + 1) * count;
        counts.insert(ell, count);
        if let Some(a) = best_alignment {
            alignments.insert(ell, a);
        }
        if !kernel_mu.is_empty() {
            kernel_eigenvalues.insert(ell, kernel_mu);
        }
        sector_gaps.insert(ell, sector_gap);
        gap = gap.min(sector_gap);
    }

    let mut report = VerificationReport::new();
    report.push(Check::equal("total_kernel_dim", dim as f64, 4.0));
    for ell in [0u32, 1] {
        if counts.contains_key(&ell) {
            let a = alignments.get(&ell).copied().unwrap_or(0.0);
            report.push(Check::above(
                &format!("kernel_alignment_l{ell}"),
                a,
                tol.alignment,
            ));
        }
    }
    for (&ell, &count) in counts.iter().filter(|(&ell, _)| ell >= 2) {
        report.push(Check::equal(
            &format!("no_kernel_l{ell}"),
            count as f64,
            0.0,
        ));
    }
    // Gaps inside [tol, 10·tol) are caught by the ambiguity check below.
    report.push(Check::above("coercivity_gap", gap, tol_kernel));

    // Centrifugal coercivity: the gap may not shrink as ℓ grows past 1.
    let higher: Vec<f64> = sector_gaps
        .iter()
        .filter(|(&ell, _)| ell >= 1)
        .map(|(_, &g)| g)
        .collect();
    let drop = higher
        .windows(2)
        .map(|w| (w[0] - w[1]) / w[0])
        .fold(0.0f64, f64::max);
    if higher.len() >= 2 {
        report.push(Check::below("sector_gap_monotone", drop, 1e-6));
    }

    let amb = Check::equal("ambiguous_eigenvalues", ambiguous.len() as f64, 0.0);
    report.push(if amb.passed() {
        amb
    } else {
        amb.inconclusive()
    });

    report.kernel = Some(KernelSummary {
        tol_kernel,
        counts,
        dim,
        alignments,
        gap,
        sector_gaps,
        kernel_eigenvalues,
        ambiguous,
    });
    report
}

pub fn kernel_report_with(
    grid: &RadialGrid,
    bubble: &BubbleSpec,
    ell_max: usize,
    kind: FormKind,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let sectors = (0..=ell_max)
        .map(|ell| analyze_sector(grid, bubble, ell, kind, tol.eigen_count))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(&sectors, tol))
}

/// Kernel census of `𝓛₊` over sectors `0..=ell_max`.
pub fn kernel_report(
    grid: &RadialGrid,
    bubble: &BubbleSpec,
    ell_max: usize,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    if ell_max < 2 {
        return Err(crate::Error::InvalidParameter {
            name: "ell_max",
            reason: "must be at least 2",
        });
    }
    kernel_report_with(grid, bubble, ell_max, FormKind::Lplus, tol)
}

/// Replays the radial nondegeneracy argument link by link on the grid.
pub fn proof_chain_check(
    grid: &RadialGrid,
    bubble: &BubbleSpec,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let c = bubble.c();
    let a_op = assemble_a_sector(grid, bubble, 0);
    let l_op = assemble_lplus_sector(grid, bubble, 0);
    let factor = a_op.gram_factor()?;
    let gram = &a_op.gram;
    let u = grid.sample(|r| bubble.u_radial(r));
    let e0 = grid.sample(|r| bubble.e0_radial(r));
    let norm = |v: &DVector<f64>| libm::sqrt(v.dot(&(gram * v)));
    let g = gram * &u;
    let mut report = VerificationReport::new();

    // ⟨∇u, ∇e₀⟩ = 0.
    let pairing = libm::fabs(g.dot(&e0)) / (norm(&u) * norm(&e0));
    report.push(Check::below(
        "pairing_grad_u_grad_e0",
        pairing,
        tol.identity,
    ));

    // 𝒜u = -4u⁵ as forms: A·u + 4·(load of u⁵), with load(u⁵) = P·u/5.
    let load_u5 = &a_op.potential * &u / 5.0;
    let r = &a_op.a_form * &u + &load_u5 * 4.0;
    let res_u = factor.dual_norm(&r) / (c * norm(&u));
    report.push(Check::below(
        "a_u_plus_4u5_dual_residual",
        res_u,
        tol.identity,
    ));

    let res_e0 = dual_residual(&a_op, &factor, &e0) / c;
    report.push(Check::below("a_e0_dual_residual", res_e0, tol.identity));

    // c > b‖∇u‖² ⇒ κ < 1/2.
    let kappa = bubble.kappa();
    report.push(Check::below("kappa_below_half", kappa, 0.5));

    // 𝒜⁻¹ on D₀ maps the load of u⁵ to -u/4, so the proof's candidate
    // φ̃ = -(2b/c)·s·𝒜⁻¹(u⁵) is (b/2c)·s·u and its pairing is κ·s.
    let solver = RankOneSolver::new(&l_op)?;
    let psi = solver.solve_a(&load_u5);
    let target = &u * -0.25;
    let mismatch = norm(&(&psi - &target)) / norm(&target);
    report.push(Check::below(
        "a_inverse_u5_is_minus_u_over_4",
        mismatch,
        1e-8,
    ));

    let b = bubble.params().b;
    let candidate = &psi * (-2.0 * b / c);
    let multiplier = g.dot(&candidate);
    report.push(Check::below(
        "multiplier_matches_kappa",
        libm::fabs(multiplier - kappa),
        1e-8,
    ));
    report.push(Check::below("contraction_multiplier", multiplier, 1.0));

    // 𝓛₊φ̃ = 0 on D₀: the Sherman–Morrison solve must return a zero pairing.
    let zero = solver.solve(&DVector::zeros(u.len()))?;
    report.push(Check::above(
        "sherman_morrison_denominator",
        zero.denominator,
        0.5,
    ));
    report.push(Check::below(
        "forced_pairing",
        libm::fabs(zero.pairing),
        1e-8,
    ));
    Ok(report)
}

/// Repeats the kernel census on each grid size.
pub fn convergence_sweep(
    bubble: &BubbleSpec,
    n_list: &[usize],
    ell_max: usize,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let mut rows = Vec::new();
    let mut last = None;
    for &n in n_list {
        let grid = build_grid(GridSpec::for_bubble(n, bubble)?)?;
        let rep = kernel_report(&grid, bubble, ell_max, tol)?;
        rows.push(convergence_row(n, &rep));
        last = Some(rep);
    }
    let mut report = sweep_checks(bubble.c(), &rows, tol);
    if let Some(rep) = last {
        report.kernel = rep.kernel;
    }
    Ok(report)
}

pub fn convergence_row(n: usize, rep: &VerificationReport) -> ConvergenceRow {
    let k = rep
        .kernel
        .as_ref()
        .expect("kernel report carries a summary");
    ConvergenceRow {
        n,
        dim: k.dim,
        tol_kernel: k.tol_kernel,
        kernel_eigenvalues: k
            .kernel_eigenvalues
            .iter()
            .map(|(&ell, v)| (ell, v[0]))
            .collect(),
        alignments: k.alignments.clone(),
        gap: k.gap,
        status: rep.status,
    }
}

/// Refinement checks over ascending grid sizes. Kernel eigenvalues must
/// decrease until they reach the round-off floor `roundoff·c`; below it
/// they are converged and only the gap stability is judged.
pub fn sweep_checks(c: f64, rows: &[ConvergenceRow], tol: &Tolerances) -> VerificationReport {
    let floor = tol.roundoff * c;
    let mut report = VerificationReport::new();
    report.push(Check::equal(
        "sweep_dims_equal_4",
        rows.iter().filter(|r| r.dim != 4).count() as f64,
        0.0,
    ));
    for ell in [0u32, 1] {
        let mut violations = 0;
        for w in rows.windows(2) {
            match (
                w[0].kernel_eigenvalues.get(&ell),
                w[1].kernel_eigenvalues.get(&ell),
            ) {
                (Some(&prev), Some(&next)) => {
                    if next >= prev && next > floor {
                        violations += 1;
                    }
                }
                _ => violations += 1,
            }
        }
        report.push(Check::equal(
            &format!("sweep_kernel_decreasing_l{ell}"),
            violations as f64,
            0.0,
        ));
        let mut worse = 0;
        for w in rows.windows(2) {
            let (a, b) = (
                w[0].alignments.get(&ell).copied().unwrap_or(0.0),
                w[1].alignments.get(&ell).copied().unwrap_or(0.0),
            );
            if b < a && 1.0 - b > tol.roundoff {
                worse += 1;
            }
        }
        report.push(Check::equal(
            &format!("sweep_alignment_improving_l{ell}"),
            worse as f64,
            0.0,
        ));
    }
    if rows.len() >= 2 {
        let (p, q) = (rows[rows.len() - 2].gap, rows[rows.len() - 1].gap);
        report.push(Check::below(
            "sweep_gap_stability",
            libm::fabs(q - p) / libm::fabs(q),
            tol.gap_stability,
        ));
    }
    if rows.iter().any(|r| r.status == Status::Inconclusive) {
        report.push(Check::equal("sweep_inconclusive_rows", 1.0, 0.0).inconclusive());
    }
    report.convergence = rows.to_vec();
    report
}
