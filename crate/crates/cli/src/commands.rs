use std::sync::atomic::{AtomicUsize, Ordering};

use kirchhoff_core::closed_form::{BubbleSpec, GRAD_Q_NORM_SQ, Q_HEIGHT};
use kirchhoff_core::grid::{build_grid, GridSpec};
use kirchhoff_core::report::{Check, VerificationReport};
use kirchhoff_core::shooting::{kirchhoff_fixed_point, self_consistent_rediscovery_with};
use kirchhoff_core::spectral::{
    analyze_sector, convergence_row, kernel_tolerance, summarize, sweep_checks, FormKind,
    SectorAnalysis,
};
use kirchhoff_core::verify::{constants_check, verify};
use kirchhoff_core::Result;

use crate::config::{CommandKind, RunConfig};
use crate::output::{
    CliReport, ConstantsData, KernelFlag, Payload, ProfileRow, ShootData, SpectrumRow,
};

/// A finished command: the report plus plot data that only goes to CSV.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: CliReport,
    pub profile: Option<Vec<ProfileRow>>,
}

/// Applies `f` to every item on at most `threads` scoped workers; results
/// keep the input order, so output never depends on scheduling.
pub fn par_map<T: Sync, R: Send>(
    items: &[T],
    threads: usize,
    f: impl Fn(&T) -> R + Sync,
) -> Vec<R> {
    let threads = threads.clamp(1, items.len().max(1));
    if threads == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let mut tagged: Vec<(usize, R)> = std::thread::scope(|s| {
        let workers: Vec<_> = (0..threads)
            .map(|_| {
                s.spawn(|| {
                    let mut out = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= items.len() {
                            break out;
                        }
                        out.push((i, f(&items[i])));
                    }
                })
            })
            .collect();
        workers
            .into_iter()
            .flat_map(|w| w.join().expect("worker panicked"))
            .collect()
    });
    tagged.sort_by_key(|(i, _)| *i);
    tagged.into_iter().map(|(_, r)| r).collect()
}

pub fn run(cfg: &RunConfig, threads: usize) -> Outcome {
    let result = match cfg.command {
        CommandKind::Constants => cmd_constants(cfg),
        CommandKind::Verify => cmd_verify(cfg),
        CommandKind::Kernel => cmd_kernel(cfg, threads),
        CommandKind::Spectrum => cmd_spectrum(cfg, threads),
        CommandKind::Shoot => cmd_shoot(cfg),
        CommandKind::Sweep => cmd_sweep(cfg, threads),
    };
    result.unwrap_or_else(|e| {
        let mut report = VerificationReport::new();
        report.push(Check::equal("pipeline_completed", 0.0, 1.0));
        let mut report = CliReport::new(cfg.clone(), report);
        report.error = Some(e.to_string());
        Outcome {
            report,
            profile: None,
        }
    })
}

fn plain(cfg: &RunConfig, report: VerificationReport) -> Outcome {
    Outcome {
        report: CliReport::new(cfg.clone(), report),
        profile: None,
    }
}

pub fn cmd_constants(cfg: &RunConfig) -> Result<Outcome> {
    let params = cfg.params();
    let report = constants_check(params)?;
    let sc = params.scaling();
    let (c_fp, iterations) = kirchhoff_fixed_point(params, 1e-15)?;
    let mut out = plain(cfg, report);
    out.report.data = Some(Payload::Constants(ConstantsData {
        grad_q_sq: sc.grad_q_sq,
        sqrt_c: sc.sqrt_c,
        c: sc.c,
        kappa: params.kappa(),
        c_fixed_point: c_fp,
        fixed_point_iterations: iterations,
        difference: (sc.c - c_fp).abs(),
    }));
    Ok(out)
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Outcome> {
    Ok(plain(cfg, verify(&cfg.bubble(), cfg.n, &cfg.tolerances())?))
}

fn sector_analyses(
    bubble: &BubbleSpec,
    n: usize,
    sectors: &[usize],
    k: usize,
    threads: usize,
) -> Result<Vec<SectorAnalysis>> {
    let grid = build_grid(GridSpec::for_bubble(n, bubble)?)?;
    par_map(sectors, threads, |&ell| {
        analyze_sector(&grid, bubble, ell, FormKind::Lplus, k)
    })
    .into_iter()
    .collect()
}

fn census(cfg: &RunConfig, n: usize, threads: usize) -> Result<VerificationReport> {
    let tol = cfg.tolerances();
    let sectors: Vec<usize> = (0..=cfg.l_max).collect();
    let analyses = sector_analyses(&cfg.bubble(), n, &sectors, tol.eigen_count, threads)?;
    Ok(summarize(&analyses, &tol))
}

pub fn cmd_kernel(cfg: &RunConfig, threads: usize) -> Result<Outcome> {
    Ok(plain(cfg, census(cfg, cfg.n, threads)?))
}

pub fn cmd_spectrum(cfg: &RunConfig, threads: usize) -> Result<Outcome> {
    let tol = cfg.tolerances();
    // Sectors 0 and 1 carry the analytic modes that set the adaptive
    // threshold, so they are always analysed.
    let mut sectors = vec![0, 1];
    if cfg.sector > 1 {
        sectors.push(cfg.sector);
    }
    let analyses = sector_analyses(&cfg.bubble(), cfg.n, &sectors, cfg.k, threads)?;
    let tol_kernel = kernel_tolerance(&analyses, &tol);
    let target = analyses
        .iter()
        .find(|s| s.ell == cfg.sector)
        .expect("requested sector analysed");

    let mut rows = Vec::new();
    for (index, &mu) in target.eigen.eigenvalues.iter().enumerate() {
        let m = mu.abs();
        let kernel_flag = if m < tol_kernel {
            KernelFlag::Kernel
        } else if m < 10.0 * tol_kernel {
            KernelFlag::Ambiguous
        } else {
            KernelFlag::Nonzero
        };
        rows.push(SpectrumRow {
            sector: cfg.sector,
            index,
            eigenvalue: mu,
            kernel_flag,
            alignment: target.alignments[index],
        });
    }

    let mut report = VerificationReport::new();
    let count = rows
        .iter()
        .filter(|r| r.kernel_flag == KernelFlag::Kernel)
        .count();
    let expected = if cfg.sector <= 1 { 1.0 } else { 0.0 };
    report.push(Check::equal(
        &format!("kernel_count_l{}", cfg.sector),
        count as f64,
        expected,
    ));
    if cfg.sector <= 1 {
        let best = rows
            .iter()
            .filter(|r| r.kernel_flag == KernelFlag::Kernel)
            .filter_map(|r| r.alignment)
            .fold(0.0f64, f64::max);
        report.push(Check::above(
            &format!("kernel_alignment_l{}", cfg.sector),
            best,
            tol.alignment,
        ));
    }
    let ambiguous = rows
        .iter()
        .filter(|r| r.kernel_flag == KernelFlag::Ambiguous)
        .count();
    let amb = Check::equal("ambiguous_eigenvalues", ambiguous as f64, 0.0);
    report.push(if amb.passed() {
        amb
    } else {
        amb.inconclusive()
    });
    report.push(Check::above("tol_kernel", tol_kernel, 0.0));

    let mut out = plain(cfg, report);
    out.report.data = Some(Payload::Spectrum(rows));
    Ok(out)
}

pub fn cmd_shoot(cfg: &RunConfig) -> Result<Outcome> {
    let params = cfg.params();
    let shot = self_consistent_rediscovery_with(params, cfg.alpha)?;
    let lambda_expected = (Q_HEIGHT / cfg.alpha).powi(2);
    let sc = params.scaling();
    let recovered = shot.recovered_c(params);

    let mut report = VerificationReport::new();
    report.push(Check::below("profile_max_rel_err", shot.max_rel_err, 1e-5));
    report.push(Check::below(
        "recovered_c_rel_err",
        (recovered - sc.c).abs() / sc.c,
        1e-10,
    ));
    report.push(Check::below(
        "grad_norm_rel_err",
        (shot.grad_norm_sq - sc.sqrt_c * GRAD_Q_NORM_SQ).abs() / shot.grad_norm_sq,
        1e-10,
    ));
    report.push(Check::below(
        "lambda_fit_rel_err",
        (shot.lambda_fit - lambda_expected).abs() / lambda_expected,
        1e-8,
    ));
    let monotone =
        shot.profile.iter().all(|&p| p > 0.0) && shot.profile.windows(2).all(|w| w[1] < w[0]);
    report.push(Check::equal(
        "profile_positive_decreasing",
        f64::from(u8::from(monotone)),
        1.0,
    ));

    let member = BubbleSpec::new(params, lambda_expected, [0.0; 3])?;
    let profile = shot
        .radii
        .iter()
        .zip(&shot.profile)
        .zip(&shot.slope)
        .map(|((&r, &phi), &slope)| {
            Ok(ProfileRow {
                r,
                phi,
                slope,
                closed_form: member.eval_u(&[r, 0.0, 0.0])?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = plain(cfg, report);
    out.report.data = Some(Payload::Shoot(ShootData {
        alpha: shot.alpha,
        c: shot.c,
        lambda_expected,
        lambda_fit: shot.lambda_fit,
        far_field_constant: shot.far_field.constant(),
        grad_norm_sq: shot.grad_norm_sq,
        recovered_c: recovered,
        max_rel_err: shot.max_rel_err,
        steps: shot.steps,
    }));
    out.profile = Some(profile);
    Ok(out)
}

pub fn cmd_sweep(cfg: &RunConfig, threads: usize) -> Result<Outcome> {
    let mut rows = Vec::new();
    let mut last = None;
    for &n in &cfg.n_list {
        let rep = census(cfg, n, threads)?;
        rows.push(convergence_row(n, &rep));
        last = rep.kernel;
    }
    let mut report = sweep_checks(cfg.bubble().c(), &rows, &cfg.tolerances());
    report.kernel = last;
    Ok(plain(cfg, report))
}
