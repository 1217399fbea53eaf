//! Acceptance criteria 1-8, one line each. Run with
//! `cargo test -p kirchhoff-cli --test acceptance`.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use kirchhoff_core::closed_form::{eval_q, residual, BubbleSpec, KirchhoffParams, Q_HEIGHT};
use kirchhoff_core::grid::{build_grid, GridSpec};
use kirchhoff_core::operator::{assemble_a_sector, assemble_lplus_sector, RankOneSolver};
use kirchhoff_core::report::VerificationReport;
use kirchhoff_core::shooting::{
    self_consistent_rediscovery, self_consistent_rediscovery_with, shoot_ground_state,
};
use kirchhoff_core::spectral::{kernel_report, Tolerances};
use kirchhoff_core::verify::{
    constants_check, identity_checks, kappa_grid_check, sample_points, verify,
};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;
type Criterion = (u32, fn() -> Outcome, Duration);

fn failed_checks(rep: &VerificationReport) -> Vec<String> {
    rep.checks
        .iter()
        .filter(|c| !c.passed())
        .map(|c| format!("{}={:e}", c.name, c.value))
        .collect()
}

fn report_line(rep: &VerificationReport) -> (bool, String) {
    let bad = failed_checks(rep);
    (
        bad.is_empty(),
        if bad.is_empty() {
            String::new()
        } else {
            format!("failing {}", bad.join(", "))
        },
    )
}

fn unit() -> KirchhoffParams {
    KirchhoffParams::new(1.0, 1.0).unwrap()
}

fn criterion_1() -> Outcome {
    let rep = constants_check(unit()).map_err(|e| e.to_string())?;
    let value = |name: &str| rep.check(name).map_or(f64::NAN, |c| c.value);
    let (ok, bad) = report_line(&rep);
    Ok((
        ok,
        format!(
            "grid {:.1e}, adaptive {:.1e}, fixed point {:.1e} {bad}",
            value("grad_q_grid_vs_closed_form"),
            value("grad_q_adaptive_vs_closed_form"),
            value("c_closed_form_vs_fixed_point"),
        ),
    ))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let params = KirchhoffParams::new(rng.random_range(0.1..10.0), rng.random_range(0.1..10.0))
            .map_err(|e| e.to_string())?;
        let x0 = [(); 3].map(|_| rng.random_range(-2.0..2.0));
        let bubble =
            BubbleSpec::new(params, rng.random_range(0.5..2.0), x0).map_err(|e| e.to_string())?;
        let reach = 10.0 * bubble.length_scale();
        for _ in 0..100 {
            let x = [(); 3].map(|_| rng.random_range(-reach..reach));
            let x = [x0[0] + x[0], x0[1] + x[1], x0[2] + x[2]];
            worst = worst.max(residual(params, &bubble, &x).abs());
        }
    }
    Ok((
        worst < 1e-10,
        format!("max |residual| {worst:.2e} over 1000 points"),
    ))
}

fn criterion_3() -> Outcome {
    let bubble = BubbleSpec::radial(unit()).map_err(|e| e.to_string())?;
    let points = sample_points(&bubble, 100);
    let mut rep = identity_checks(&bubble, &points, 1e-10).map_err(|e| e.to_string())?;
    rep.push(kappa_grid_check().map_err(|e| e.to_string())?);
    let detail = rep
        .checks
        .iter()
        .map(|c| format!("{} {:.4e}", c.name, c.value))
        .collect::<Vec<_>>()
        .join(", ");
    Ok((rep.passed(), detail))
}

fn kernel_at(bubble: &BubbleSpec, n: usize) -> Result<VerificationReport, String> {
    let grid = build_grid(GridSpec::for_bubble(n, bubble).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    kernel_report(&grid, bubble, 4, &Tolerances::default()).map_err(|e| e.to_string())
}

fn criterion_4() -> Outcome {
    let bubble = BubbleSpec::radial(unit()).map_err(|e| e.to_string())?;
    let fine = kernel_at(&bubble, 256)?;
    let coarse = kernel_at(&bubble, 192)?;
    let k = fine.kernel.as_ref().ok_or("no kernel summary")?;
    let gap_coarse = coarse.kernel.as_ref().ok_or("no kernel summary")?.gap;
    let drift = (k.gap - gap_coarse).abs() / k.gap;
    let required = [
        "total_kernel_dim",
        "kernel_alignment_l0",
        "kernel_alignment_l1",
        "no_kernel_l2",
        "no_kernel_l3",
        "no_kernel_l4",
    ];
    let present = required.iter().all(|n| fine.check(n).is_some());
    let (ok, bad) = report_line(&fine);
    Ok((
        ok && present && drift < 0.10,
        format!(
            "dim {}, alignments {:?}, gap {:.6e} (n=192 drift {:.1e}) {bad}",
            k.dim, k.alignments, k.gap, drift
        ),
    ))
}

fn criterion_5() -> Outcome {
    let bubble = BubbleSpec::radial(unit()).map_err(|e| e.to_string())?;
    let grid = build_grid(GridSpec::for_bubble(128, &bubble).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let identical = (1..=4).all(|ell| {
        let l = assemble_lplus_sector(&grid, &bubble, ell);
        l.rank_one.is_none() && l.full_form() == assemble_a_sector(&grid, &bubble, ell).full_form()
    });

    let a0 = assemble_a_sector(&grid, &bubble, 0);
    let l0 = assemble_lplus_sector(&grid, &bubble, 0);
    let r1 = l0.rank_one.as_ref().ok_or("no rank-one term at l=0")?;
    let expected = &r1.g * r1.g.transpose() * (2.0 * bubble.params().b);
    let rank_one_err = (l0.full_form() - a0.full_form() - expected).amax() / a0.full_form().amax();

    let solver = RankOneSolver::new(&l0).map_err(|e| e.to_string())?;
    let full = l0.full_form();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let raw = DVector::from_fn(grid.len(), |_, _| rng.random_range(-1.0..1.0));
        let rhs = solver.project_compatible(&raw, &l0.gram);
        let sol = solver.solve(&rhs).map_err(|e| e.to_string())?;
        worst = worst.max((&full * &sol.x - &rhs).norm() / rhs.norm());
    }
    Ok((
        identical && r1.coeff == 2.0 * bubble.params().b && rank_one_err < 1e-14 && worst < 1e-10,
        format!(
            "l>=1 identical {identical}, l=0 rank-one mismatch {rank_one_err:.1e}, worst solve residual {worst:.1e}"
        ),
    ))
}

fn criterion_6() -> Outcome {
    let shot = shoot_ground_state(1.0, Q_HEIGHT).map_err(|e| e.to_string())?;
    let mut q_err = 0.0f64;
    for (&r, &phi) in shot.radii.iter().zip(&shot.profile) {
        if r <= 50.0 {
            let q = eval_q(r).map_err(|e| e.to_string())?;
            q_err = q_err.max(((phi - q) / q).abs());
        }
    }

    let params = unit();
    let c = params.scaling().c;
    let first = self_consistent_rediscovery(params).map_err(|e| e.to_string())?;
    let second = self_consistent_rediscovery_with(params, 2.0).map_err(|e| e.to_string())?;
    let c1 = first.recovered_c(params);
    let c2 = second.recovered_c(params);
    let c_err = (c1 - c).abs() / c;
    let spread = (c1 - c2).abs() / c;
    Ok((
        q_err < 1e-6 && c_err < 1e-10 && first.max_rel_err < 1e-5 && spread < 1e-10,
        format!(
            "Q error {q_err:.1e}, c error {c_err:.1e}, profile error {:.1e}, alpha spread {spread:.1e}",
            first.max_rel_err
        ),
    ))
}

fn criterion_7() -> Outcome {
    let params = KirchhoffParams::new(1.0, 0.0).map_err(|e| e.to_string())?;
    let bubble = BubbleSpec::radial(params).map_err(|e| e.to_string())?;
    let c_exact = params.scaling().c == params.a;
    let grid = build_grid(GridSpec::for_bubble(128, &bubble).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let same = (0..=4).all(|ell| {
        let l = assemble_lplus_sector(&grid, &bubble, ell);
        l.rank_one.is_none() && l.full_form() == assemble_a_sector(&grid, &bubble, ell).full_form()
    });
    let kernel = kernel_at(&bubble, 256)?;
    let dim = kernel.kernel.as_ref().map_or(0, |k| k.dim);
    let pipeline = verify(&bubble, 128, &Tolerances::default()).map_err(|e| e.to_string())?;
    let (ok, bad) = report_line(&pipeline);
    Ok((
        c_exact && same && dim == 4 && kernel.passed() && ok,
        format!("c = a {c_exact}, L+ = A {same}, kernel dim {dim} {bad}"),
    ))
}

fn criterion_8() -> Outcome {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_kirchhoff"))
            .args([
                "kernel",
                "--a",
                "1",
                "--b",
                "1",
                "--n",
                "128",
                "--lmax",
                "4",
                "--no-timestamp",
            ])
            .output()
            .map_err(|e| e.to_string())
    };
    let first = run()?;
    let second = run()?;
    let same = first.stdout == second.stdout && !first.stdout.is_empty();
    Ok((
        same && first.status.success(),
        format!("{} bytes, identical {same}", first.stdout.len()),
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        (1, criterion_1, Duration::from_secs(1)),
        (2, criterion_2, Duration::from_secs(1)),
        (3, criterion_3, Duration::from_secs(5)),
        (4, criterion_4, Duration::from_secs(60)),
        (5, criterion_5, Duration::from_secs(5)),
        (6, criterion_6, Duration::from_secs(10)),
        (7, criterion_7, Duration::from_secs(60)),
        (8, criterion_8, Duration::from_secs(60)),
    ];
    let mut all = true;
    for (id, f, budget) in criteria {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let (ok, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        let ok = ok && elapsed < budget;
        all &= ok;
        println!(
            "criterion {id}: {} ({:.2} s of {} s) {detail}",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs(),
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
