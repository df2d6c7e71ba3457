//! Acceptance checklist: nine end-to-end criteria covering root recovery,
//! regime discrimination, convergence order, method consistency, the scoring
//! pipeline, the selection rule, scan determinism, degenerate-score handling,
//! and the exponential-quartic fixture.
//!
//! Each test prints one verdict line; run with
//! `cargo test -p steplog-cli --test acceptance -- --nocapture --test-threads=1`
//! to see them all in order.

use std::f64::consts::TAU;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use steplog::metrics::{empirical_order, match_roots};
use steplog::problem::fixtures;
use steplog::profile::{
    aggregate, score, steplog_trace, windowed_profile, AggregatedProfile, ContractionProfile,
    ProfilingConfig, ScorePair, StepLogTrace,
};
use steplog::solver::{run, Method, SolverConfig, Status};
use steplog::tuner::{
    derive_seed, random_initials, run_cell, select_cell, GridSpec, InitMode, Matrix,
};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Prints the verdict line for one criterion and then enforces it.
fn report(n: usize, label: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("criterion {n} ({label}): {verdict} — {detail}");
    println!("{line}");
    assert!(pass, "{line}");
}

/// The seven scattered starting points used by the degree-7 gene-network
/// criteria, frozen here so the gate does not track fixture edits.
fn scattered_starts() -> [Complex64; 7] {
    [
        c(0.1, 0.0),
        c(3.8, 0.0),
        c(0.5, 0.0),
        c(-5.2, 0.0),
        c(78.2, 0.0),
        c(-8.2, 0.0),
        c(-7.0, -3.4),
    ]
}

fn status_text(status: Status) -> String {
    match status {
        Status::Converged { at_iter } => format!("converged at iteration {at_iter}"),
        Status::Diverged { at_iter } => format!("diverged at iteration {at_iter}"),
        Status::MaxIterReached => "exhausted its iteration budget".to_string(),
    }
}

#[test]
fn criterion_1_root_recovery() {
    let t0 = Instant::now();
    let fix = fixtures::grn7();
    // The published constellation, printed to four decimals.
    let four_decimal_roots = [
        c(-2.3027, 1.1133),
        c(-2.3027, -1.1133),
        c(-0.5590, 2.4896),
        c(-0.5590, -2.4896),
        c(1.5917, 1.9841),
        c(1.5917, -1.9841),
        c(2.5401, 0.0),
    ];
    let mut cfg = SolverConfig::with_params(Method::Sab3, 13.15, 0.4615);
    cfg.max_iter = 40;
    let traj = run(&fix.problem, &cfg, &scattered_starts());
    let matched = match_roots(traj.final_iterate(), &four_decimal_roots)
        .expect("seven computed roots against seven references");
    let worst = matched.max_distance();
    let elapsed = t0.elapsed().as_secs_f64();

    let pass = traj.status.is_converged() && worst <= 5e-4 && elapsed <= 1.0;
    report(
        1,
        "root recovery",
        pass,
        &format!(
            "sab3(13.15, 0.4615) from the scattered starts {} (budget 40, tol 1e-12); \
             worst matched-root error {worst:.2e} against the four-decimal list (bound 5e-4); \
             {elapsed:.2}s (budget 1s)",
            status_text(traj.status)
        ),
    );
}

#[test]
fn criterion_2_regime_discrimination() {
    let t0 = Instant::now();
    let fix = fixtures::grn7();

    // First clause: the weakly damped parameter point is expected to fail
    // to converge from the scattered starts.
    let cfg = SolverConfig::with_params(Method::Sab3, 6.385, 0.4615);
    let traj = run(&fix.problem, &cfg, &scattered_starts());
    let fails_to_converge = !traj.status.is_converged();

    // Second clause: the momentum score must rank the strongly damped point
    // above the weakly damped one on a seeded 50-launch ensemble.
    let base = SolverConfig::new(Method::Sab3);
    let prof = ProfilingConfig::new(10, f64::EPSILON).expect("valid profiling config");
    let grid = GridSpec::new(
        13.15,
        13.15,
        1,
        0.4615,
        0.4615,
        1,
        50,
        777,
        InitMode::DiskRadius(Some(5.0)),
    )
    .expect("valid 1x1 grid");
    let strong = run_cell(&fix.problem, &base, &prof, &grid, 0, 0, 13.15, 0.4615);
    let weak = run_cell(&fix.problem, &base, &prof, &grid, 0, 0, 6.385, 0.4615);
    let (_, s_mom_strong) = strong.score_or_zero();
    let (_, s_mom_weak) = weak.score_or_zero();
    let scores_ordered = s_mom_strong > s_mom_weak;
    let elapsed = t0.elapsed().as_secs_f64();

    let pass = fails_to_converge && scores_ordered && elapsed <= 30.0;
    report(
        2,
        "regime discrimination",
        pass,
        &format!(
            "sab3(6.385, 0.4615) from the scattered starts {} (expected: divergence or budget \
             exhaustion, tol 1e-12, budget 100); momentum-score ordering {}: \
             s_mom(13.15, 0.4615) = {s_mom_strong:.4} vs s_mom(6.385, 0.4615) = {s_mom_weak:.4} \
             over 50 launches from the radius-5 disk, window 10, seed 777; {elapsed:.2}s (budget 30s)",
            status_text(traj.status),
            if scores_ordered { "holds" } else { "is violated" },
        ),
    );
}

#[test]
fn criterion_3_order_verification() {
    let t0 = Instant::now();
    let fix = fixtures::order5();
    let roots = fix.problem.reference_roots().expect("order5 ships references").to_vec();

    // Ten seeded direction sets; each reps draws one angle offset and places
    // every start at distance 1e-2 from its root.
    let order_for = |method: Method, rep: u64| -> Option<f64> {
        let mut state: u64 = 1000 + rep;
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let base_angle = (state >> 11) as f64 / (1u64 << 53) as f64 * TAU;
        let starts: Vec<Complex64> = roots
            .iter()
            .enumerate()
            .map(|(k, &r)| {
                let angle = base_angle + k as f64;
                r + 1e-2 * c(angle.cos(), angle.sin())
            })
            .collect();
        let traj = run(&fix.problem, &SolverConfig::new(method), &starts);
        empirical_order(&traj.step_norms)
    };

    let mut sab3_hits = 0;
    let mut wdk_hits = 0;
    let mut sab3_range = (f64::INFINITY, f64::NEG_INFINITY);
    let mut wdk_range = (f64::INFINITY, f64::NEG_INFINITY);
    for rep in 0..10 {
        if let Some(sigma) = order_for(Method::Sab3, rep) {
            sab3_range = (sab3_range.0.min(sigma), sab3_range.1.max(sigma));
            if (2.5..=3.5).contains(&sigma) {
                sab3_hits += 1;
            }
        }
        if let Some(sigma) = order_for(Method::Wdk, rep) {
            wdk_range = (wdk_range.0.min(sigma), wdk_range.1.max(sigma));
            if (1.6..=2.4).contains(&sigma) {
                wdk_hits += 1;
            }
        }
    }
    let elapsed = t0.elapsed().as_secs_f64();

    let pass = sab3_hits >= 9 && wdk_hits >= 9 && elapsed <= 5.0;
    report(
        3,
        "order verification",
        pass,
        &format!(
            "degree-5 fixture, starts at distance 1e-2: sab3(0, 0) order in [2.5, 3.5] for \
             {sab3_hits}/10 reps (observed [{:.3}, {:.3}]), wdk order in [1.6, 2.4] for \
             {wdk_hits}/10 reps (observed [{:.3}, {:.3}]); need 9/10 each; {elapsed:.2}s (budget 5s)",
            sab3_range.0, sab3_range.1, wdk_range.0, wdk_range.1,
        ),
    );
}

#[test]
fn criterion_4_method_consistency() {
    let t0 = Instant::now();
    let fix = fixtures::hill6();
    let launches = 100;

    // One shared family of perturbed starts: launch e uses the same start
    // set for every method.
    let start_sets: Vec<Vec<Complex64>> = (0..launches)
        .map(|e| {
            random_initials(
                &fix.problem,
                InitMode::PerturbReference(0.05),
                derive_seed(4242, 0, 0, e),
            )
        })
        .collect();

    let mut lines = Vec::new();
    let mut pass = true;
    for method in Method::ALL {
        let mut hits = 0;
        for starts in &start_sets {
            let traj = run(&fix.problem, &SolverConfig::new(method), starts);
            let residual = fix.problem.residual_norm(traj.final_iterate());
            if traj.status.is_converged() && residual <= 1e-8 {
                hits += 1;
            }
        }
        pass &= hits * 100 >= 95 * launches;
        lines.push(format!("{} {hits}/{launches}", method.name()));
    }
    let elapsed = t0.elapsed().as_secs_f64();
    pass &= elapsed <= 30.0;

    report(
        4,
        "method consistency",
        pass,
        &format!(
            "degree-6 kinetics fixture, starts perturbed by sigma = 0.05, residual bound 1e-8, \
             need 95%: {}; {elapsed:.2}s (budget 30s)",
            lines.join(", "),
        ),
    );
}

/// Straight-line reimplementations of the profiling pipeline, kept
/// deliberately naive so the production code is checked against independent
/// arithmetic.
mod naive {
    pub fn g_trace(steps: &[f64], eps: f64) -> Vec<f64> {
        let mut g = Vec::new();
        for h in 0..steps.len().saturating_sub(1) {
            g.push(((steps[h + 1] + eps) / (steps[h] + eps)).ln());
        }
        g
    }

    pub fn window_means(g: &[f64], w: usize) -> Vec<f64> {
        let mut out = Vec::new();
        if g.len() < w {
            return out;
        }
        for k in 0..=g.len() - w {
            let mut sum = 0.0;
            for item in &g[k..k + w] {
                sum += item;
            }
            out.push(sum / w as f64);
        }
        out
    }

    /// Ragged elementwise mean/std/count in launch order.
    pub fn aggregate(profiles: &[Vec<f64>], w: usize) -> (Vec<usize>, Vec<f64>, Vec<f64>, Vec<usize>) {
        let longest = profiles.iter().map(Vec::len).max().unwrap_or(0);
        let mut t_end = Vec::new();
        let mut mean = Vec::new();
        let mut std = Vec::new();
        let mut count = Vec::new();
        for k in 0..longest {
            let present: Vec<f64> =
                profiles.iter().filter(|p| p.len() > k).map(|p| p[k]).collect();
            let n = present.len() as f64;
            let mut m = 0.0;
            for &v in &present {
                m += v;
            }
            m /= n;
            let mut var = 0.0;
            for &v in &present {
                var += (v - m) * (v - m);
            }
            var /= n;
            t_end.push(k + w);
            mean.push(m);
            std.push(var.sqrt());
            count.push(present.len());
        }
        (t_end, mean, std, count)
    }

    /// Scores of an aggregated mean profile: the deepest-dip score and the
    /// negative-mass momentum score.
    pub fn scores(t_end: &[usize], mean: &[f64]) -> (f64, f64, f64, usize, f64, f64) {
        let mut y_min = f64::INFINITY;
        let mut t_min = 0;
        for (k, &m) in mean.iter().enumerate() {
            if m < y_min {
                y_min = m;
                t_min = t_end[k];
            }
        }
        let s_min = (0.0_f64).max(-y_min / t_min as f64);
        let mut m0 = 0.0;
        let mut weighted = 0.0;
        for (k, &m) in mean.iter().enumerate() {
            if m < 0.0 {
                m0 += -m;
                weighted += t_end[k] as f64 * -m;
            }
        }
        let (t_bar, s_mom) = if m0 == 0.0 { (0.0, 0.0) } else { (weighted / m0, m0 / (weighted / m0)) };
        (s_min, s_mom, y_min, t_min, m0, t_bar)
    }
}

#[test]
fn criterion_5_score_pipeline_oracle() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20260816);
    let cfg = ProfilingConfig::new(10, f64::EPSILON).expect("valid profiling config");

    // Twenty synthetic step-norm sequences of ragged lengths, all long
    // enough to yield at least one full window.
    let trajectories: Vec<Vec<f64>> = (0..20)
        .map(|_| {
            let len = rng.gen_range(12..40);
            (0..len).map(|_| rng.gen_range(-8.0..2.0_f64).exp()).collect()
        })
        .collect();

    let mut max_dev: f64 = 0.0;
    let mut dev = |a: f64, b: f64| {
        let d = (a - b).abs();
        max_dev = max_dev.max(d);
        d
    };

    let mut profiles: Vec<ContractionProfile> = Vec::new();
    let mut naive_profiles: Vec<Vec<f64>> = Vec::new();
    for steps in &trajectories {
        let trace: StepLogTrace = steplog_trace(steps, &cfg);
        let expected_g = naive::g_trace(steps, f64::EPSILON);
        assert_eq!(trace.g.len(), expected_g.len());
        for (a, b) in trace.g.iter().zip(&expected_g) {
            dev(*a, *b);
        }

        let profile = windowed_profile(&trace, &cfg).expect("long enough trace");
        let expected_means = naive::window_means(&expected_g, 10);
        assert_eq!(profile.values.len(), expected_means.len());
        for (a, b) in profile.values.iter().zip(&expected_means) {
            dev(*a, *b);
        }
        naive_profiles.push(expected_means);
        profiles.push(profile);
    }

    let agg: AggregatedProfile = aggregate(&profiles);
    let (t_end, mean, std, count) = naive::aggregate(&naive_profiles, 10);
    assert_eq!(agg.t_end_axis, t_end);
    assert_eq!(agg.count_at, count);
    for (a, b) in agg.mean.iter().zip(&mean) {
        dev(*a, *b);
    }
    for (a, b) in agg.std.iter().zip(&std) {
        dev(*a, *b);
    }

    let pair: ScorePair = score(&agg);
    let (s_min, s_mom, y_min, t_min, m0, t_bar) = naive::scores(&t_end, &mean);
    dev(pair.s_min, s_min);
    dev(pair.s_mom, s_mom);
    dev(pair.y_min, y_min);
    dev(pair.m0, m0);
    dev(pair.t_bar, t_bar);
    let t_min_matches = pair.t_min == t_min;
    let elapsed = t0.elapsed().as_secs_f64();

    let pass = t_min_matches && max_dev <= 1e-12 && elapsed <= 1.0;
    report(
        5,
        "score pipeline oracle",
        pass,
        &format!(
            "20 random step-norm sequences: largest deviation {max_dev:.2e} between the pipeline \
             and a naive reimplementation across the trace, window means, ensemble mean/std, and \
             all score constituents (bound 1e-12); earliest-dip index {}; {elapsed:.2}s (budget 1s)",
            if t_min_matches { "agrees" } else { "disagrees" },
        ),
    );
}

#[test]
fn criterion_6_selection_rule() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut agreements = 0;
    let cases = 50;
    for case in 0..cases {
        let rows = rng.gen_range(1..=6);
        let cols = rng.gen_range(1..=6);
        // A coarse value palette forces frequent momentum-score ties (and,
        // every third case, an even coarser one forcing full ties).
        let palette: &[f64] =
            if case % 3 == 0 { &[0.0, 0.2] } else { &[0.0, 0.25, 0.5, 0.75, 1.0] };
        let mut s_mom = Matrix::zeros(rows, cols);
        let mut s_min = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                s_mom.set(i, j, palette[rng.gen_range(0..palette.len())]);
                s_min.set(i, j, palette[rng.gen_range(0..palette.len())]);
            }
        }

        // Brute force: row-major scan keeping the first strictly better
        // cell under (s_mom, then s_min) ordering.
        let mut best = (0, 0);
        for i in 0..rows {
            for j in 0..cols {
                let better = s_mom.get(i, j) > s_mom.get(best.0, best.1)
                    || (s_mom.get(i, j) == s_mom.get(best.0, best.1)
                        && s_min.get(i, j) > s_min.get(best.0, best.1));
                if better {
                    best = (i, j);
                }
            }
        }
        if select_cell(&s_mom, &s_min) == best {
            agreements += 1;
        }
    }
    let elapsed = t0.elapsed().as_secs_f64();

    let pass = agreements == cases && elapsed <= 1.0;
    report(
        6,
        "selection rule",
        pass,
        &format!(
            "{agreements}/{cases} random score matrices (tie-heavy palettes) select the same cell \
             as brute-force argmax with dip-score tie-break and row-major preference; \
             {elapsed:.2}s (budget 1s)",
        ),
    );
}

#[test]
fn criterion_7_scan_determinism() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().expect("temp dir");
    let out_one = dir.path().join("one");
    let out_four = dir.path().join("four");
    for (threads, out_dir) in [("1", &out_one), ("4", &out_four)] {
        let output = Command::new(env!("CARGO_BIN_EXE_steplog"))
            .args([
                "scan",
                "--fixture",
                "grn7",
                "--grid=-9:15:5,-6:12:5",
                "--ens",
                "10",
                "--seed",
                "2026",
                "--init",
                "perturb",
                "--sigma",
                "1.0",
                "--threads",
                threads,
                "--out",
                out_dir.to_str().expect("utf8 path"),
            ])
            .output()
            .expect("scan binary runs");
        assert!(
            output.status.success(),
            "scan with {threads} worker(s) failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
    }

    let mut identical = true;
    let mut compared = Vec::new();
    for file in ["heatmap_s_min.csv", "heatmap_s_mom.csv", "heatmap_convergence.csv"] {
        let a = std::fs::read(out_one.join(file)).expect("first scan wrote the file");
        let b = std::fs::read(out_four.join(file)).expect("second scan wrote the file");
        identical &= !a.is_empty() && a == b;
        compared.push(file);
    }
    let elapsed = t0.elapsed().as_secs_f64();

    let pass = identical && elapsed <= 60.0;
    report(
        7,
        "scan determinism",
        pass,
        &format!(
            "5x5 grid on the degree-7 gene-network fixture, 10 launches per cell, seed 2026, run \
             with 1 and 4 workers: {} byte-identical ({}); {elapsed:.2}s (budget 60s)",
            if identical { "all CSV outputs" } else { "CSV outputs NOT" },
            compared.join(", "),
        ),
    );
}

#[test]
fn criterion_8_degenerate_scores_and_singular_predictors() {
    let t0 = Instant::now();

    // Any aggregated mean profile that never dips below zero must score
    // exactly (0, 0) on both scores.
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut zero_scored = 0;
    let all_nonneg_cases = 25;
    for _ in 0..all_nonneg_cases {
        let len = rng.gen_range(1..30);
        let mean: Vec<f64> = (0..len)
            .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..2.0) })
            .collect();
        let agg = AggregatedProfile {
            t_end_axis: (0..len).map(|k| k + 10).collect(),
            mean,
            std: vec![0.0; len],
            count_at: vec![1; len],
        };
        let pair = score(&agg);
        if pair.s_min == 0.0 && pair.s_mom == 0.0 && pair.m0 == 0.0 && pair.t_bar == 0.0 {
            zero_scored += 1;
        }
    }

    // Singular predictor inputs must fall back, not abort. On x^2 - 1 the
    // component at x = 0 has f'(0) = 0, and with beta = 4/3 the component
    // at x = 0.5 has 1 + beta*f = 0.
    let fix = fixtures::wdk_demo();
    let derivative_zero = run(
        &fix.problem,
        &SolverConfig::with_params(Method::Sab3, 1.0, 0.0),
        &[c(0.0, 0.0), c(2.0, 0.0)],
    );
    let damping_pole = run(
        &fix.problem,
        &SolverConfig::with_params(Method::Sab3, 1.0, 4.0 / 3.0),
        &[c(0.5, 0.0), c(-2.0, 0.0)],
    );
    let fallbacks_hit =
        derivative_zero.predictor_fallbacks >= 1 && damping_pole.predictor_fallbacks >= 1;
    let trajectories_finite = derivative_zero
        .step_norms
        .iter()
        .chain(&damping_pole.step_norms)
        .all(|s| s.is_finite());
    let elapsed = t0.elapsed().as_secs_f64();

    let pass =
        zero_scored == all_nonneg_cases && fallbacks_hit && trajectories_finite && elapsed <= 1.0;
    report(
        8,
        "degenerate scores and singular predictors",
        pass,
        &format!(
            "{zero_scored}/{all_nonneg_cases} all-nonnegative mean profiles score exactly (0, 0); \
             f' = 0 start fell back {} time(s) and ended {}; 1 + beta*f = 0 start fell back \
             {} time(s) and ended {}; every recorded step norm finite: {trajectories_finite}; \
             {elapsed:.2}s (budget 1s)",
            derivative_zero.predictor_fallbacks,
            status_text(derivative_zero.status),
            damping_pole.predictor_fallbacks,
            status_text(damping_pole.status),
        ),
    );
}

#[test]
fn criterion_9_exp_quartic_recovery() {
    let t0 = Instant::now();
    let fix = fixtures::expquartic();
    let roots = fix.problem.reference_roots().expect("expquartic ships references").to_vec();

    // Fixed direction fan at distance 0.1 from each root; the basins of
    // this fixture are narrow, so the offsets are frozen rather than drawn.
    let starts: Vec<Complex64> = roots
        .iter()
        .enumerate()
        .map(|(k, &r)| {
            let angle = 4.4 + k as f64 * TAU / 4.0;
            r + 0.1 * c(angle.cos(), angle.sin())
        })
        .collect();

    let mut lines = Vec::new();
    let mut pass = true;
    for method in Method::ALL {
        let traj = run(&fix.problem, &SolverConfig::new(method), &starts);
        let matched = match_roots(traj.final_iterate(), &roots).expect("four roots each");
        let worst = matched.max_distance();
        pass &= traj.status.is_converged() && worst <= 1e-8;
        lines.push(format!("{} {} (error {worst:.1e})", method.name(), status_text(traj.status)));
    }
    let elapsed = t0.elapsed().as_secs_f64();
    pass &= elapsed <= 2.0;

    report(
        9,
        "exponential quartic recovery",
        pass,
        &format!(
            "all six methods from starts 0.1 away from the roots -3, -2, 0, 1 (bound 1e-8): {}; \
             {elapsed:.2}s (budget 2s)",
            lines.join(", "),
        ),
    );
}
