//! `steplog` — simultaneous polynomial root finding with step-log
//! contraction profiling, bi-parametric tuning, and method benchmarks.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use steplog_cli::emit::{self, BenchRow};
use steplog_cli::manifest::{self, Overrides, Resolved};
use steplog::metrics::{compare_methods, trajectory_metrics, StartPolicy};
use steplog::solver::{run, Method, Status};
use steplog::tuner::{run_cell, scan};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_DIVERGED: u8 = 2;
const EXIT_MAX_ITER: u8 = 3;
const EXIT_NO_PROFILE: u8 = 4;

const EXIT_CODE_HELP: &str = "Exit codes:
  0  success (solve: converged)
  1  configuration, usage, or I/O error
  2  solve diverged
  3  solve hit the iteration budget
  4  profile had no scorable launch (all traces shorter than the window)";

#[derive(Parser)]
#[command(
    name = "steplog",
    version,
    about = "Simultaneous root finding, contraction profiling, parameter scans, and method benchmarks",
    after_help = EXIT_CODE_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML config file (see the README for the grammar)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Built-in fixture, replacing the config problem source
    /// [fixtures: grn7, hill6, expquartic, wdk_demo, order5]
    #[arg(long, global = true, value_name = "NAME")]
    fixture: Option<String>,

    /// Master seed for ensemble draws [default: 0]
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Output directory [default: out]
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Artifact kinds to write [default: csv,json,image]
    #[arg(long, global = true, value_delimiter = ',', value_name = "KINDS")]
    emit: Option<Vec<String>>,

    /// Iteration scheme [default: sab3; one of wdk, pns3, pps3, bss3, pns4, sab3]
    #[arg(long, global = true, value_name = "ID")]
    method: Option<String>,

    /// Damping parameter alpha (sab3 only) [default: 0]
    #[arg(long, global = true, value_name = "F64", allow_negative_numbers = true)]
    alpha: Option<f64>,

    /// Damping parameter beta (sab3 only) [default: 0]
    #[arg(long, global = true, value_name = "F64", allow_negative_numbers = true)]
    beta: Option<f64>,

    /// Scan grid axes as a0:a1:na,b0:b1:nb (overrides [grid])
    #[arg(long, global = true, value_name = "SPEC", allow_hyphen_values = true)]
    grid: Option<String>,

    /// Ensemble size per cell [default: 50]
    #[arg(long, global = true, value_name = "N")]
    ens: Option<usize>,

    /// Contraction-profile window W [default: 10]
    #[arg(long, global = true, value_name = "W")]
    window: Option<usize>,

    /// Convergence tolerance on the step norm [default: 1e-12]
    #[arg(long, global = true, value_name = "F64")]
    tol: Option<f64>,

    /// Iteration budget [default: 100]
    #[arg(long = "max-iter", global = true, value_name = "K")]
    max_iter: Option<usize>,

    /// Ensemble start distribution [default: disk; one of disk, perturb]
    #[arg(long, global = true, value_name = "MODE")]
    init: Option<String>,

    /// Disk radius for init=disk [default: the problem's root bound]
    #[arg(long, global = true, value_name = "F64")]
    radius: Option<f64>,

    /// Gaussian sigma for init=perturb (required by that mode)
    #[arg(long, global = true, value_name = "F64")]
    sigma: Option<f64>,

    /// Worker threads for parallel scans [default: all cores]
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solve and emit the trajectory table and run summary
    Solve,
    /// Profile one (alpha, beta) cell over a seeded micro-launch ensemble
    Profile,
    /// Scan an (alpha, beta) grid and emit heatmaps and the selection
    Scan,
    /// Compare methods on one problem and emit the comparison table
    Bench {
        /// Comma-separated method ids [default: all six]
        #[arg(long, value_delimiter = ',', value_name = "IDS")]
        methods: Option<Vec<String>>,
        /// Repetitions per method; >1 uses randomized ensemble starts [default: 1]
        #[arg(long, value_name = "N")]
        reps: Option<usize>,
    },
}

fn overrides_from(cli: &Cli) -> Overrides {
    let (methods, reps) = match &cli.command {
        Command::Bench { methods, reps } => (methods.clone(), *reps),
        _ => (None, None),
    };
    Overrides {
        fixture: cli.fixture.clone(),
        seed: cli.seed,
        out: cli.out.clone(),
        emit: cli.emit.clone(),
        method: cli.method.clone(),
        alpha: cli.alpha,
        beta: cli.beta,
        grid: cli.grid.clone(),
        ens: cli.ens,
        window: cli.window,
        tol: cli.tol,
        max_iter: cli.max_iter,
        init: cli.init.clone(),
        radius: cli.radius,
        sigma: cli.sigma,
        reps,
        methods,
    }
}

fn configure_threads(threads: Option<usize>) -> Result<()> {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        if n == 0 {
            return Err(anyhow!("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the worker pool")?;
    }
    #[cfg(not(feature = "parallel"))]
    if threads.is_some() {
        log::warn!("--threads has no effect in a build without the \"parallel\" feature");
    }
    Ok(())
}

fn cmd_solve(resolved: &Resolved) -> Result<u8> {
    let starts = resolved.fixed_starts.clone().ok_or_else(|| {
        anyhow!("solve needs starts: use a fixture or a [problem] starts list")
    })?;
    if starts.len() != resolved.problem.root_count() {
        return Err(anyhow!(
            "got {} starts for {} roots",
            starts.len(),
            resolved.problem.root_count()
        ));
    }
    if resolved.solver.method != Method::Sab3
        && (resolved.solver.alpha != 0.0 || resolved.solver.beta != 0.0)
    {
        log::warn!("alpha/beta only shape the sab3 predictor; {} ignores them", resolved.solver.method.name());
    }

    let clock = Instant::now();
    let traj = run(&resolved.problem, &resolved.solver, &starts);
    let wall = clock.elapsed().as_secs_f64();
    let metrics = trajectory_metrics(&resolved.problem, &traj, wall);

    let final_iterate = traj.iterates.last().expect("run records at least the starts");
    let order = emit::reference_column_order(&resolved.problem, final_iterate);

    std::fs::create_dir_all(&resolved.out_dir)
        .with_context(|| format!("cannot create {}", resolved.out_dir.display()))?;
    if resolved.emit.csv {
        let path = resolved.out_dir.join("trajectory.csv");
        emit::write_text(&path, &emit::trajectory_csv(&resolved.problem, &traj, &order))?;
        println!("wrote {}", path.display());
    }
    if resolved.emit.json {
        let path = resolved.out_dir.join("run_metrics.json");
        emit::write_json(
            &path,
            &emit::run_summary_json(
                &resolved.label,
                resolved.solver.method.name(),
                resolved.solver.alpha,
                resolved.solver.beta,
                &traj.status,
                &metrics,
            ),
        )?;
        println!("wrote {}", path.display());
    }

    let (status_name, code) = match traj.status {
        Status::Converged { at_iter } => (format!("converged at iteration {at_iter}"), EXIT_OK),
        Status::Diverged { at_iter } => (format!("diverged at iteration {at_iter}"), EXIT_DIVERGED),
        Status::MaxIterReached => {
            (format!("iteration budget ({}) exhausted", resolved.solver.max_iter), EXIT_MAX_ITER)
        }
    };
    println!(
        "{} with {} on {}: {status_name}; residual {}",
        resolved.solver.method.name(),
        if resolved.solver.method == Method::Sab3 {
            format!("(alpha, beta) = ({}, {})", resolved.solver.alpha, resolved.solver.beta)
        } else {
            "no parameters".to_string()
        },
        resolved.label,
        emit::fmt_f64(metrics.residual)
    );
    for (k, &idx) in order.iter().enumerate() {
        let x = final_iterate[idx];
        println!("  root {} = {} + {}i", k + 1, emit::fmt_f64(x.re), emit::fmt_f64(x.im));
    }
    Ok(code)
}

fn cmd_profile(resolved: &Resolved) -> Result<u8> {
    let alpha = resolved.solver.alpha;
    let beta = resolved.solver.beta;
    if resolved.solver.method != Method::Sab3 {
        log::warn!(
            "profiling {} ignores (alpha, beta); scores reflect the unparameterized scheme",
            resolved.solver.method.name()
        );
    }
    let grid = resolved.single_cell_grid(alpha, beta)?;
    let cell = run_cell(
        &resolved.problem,
        &resolved.solver,
        &resolved.profiling,
        &grid,
        0,
        0,
        alpha,
        beta,
    );

    let Some(aggregated) = &cell.aggregated else {
        eprintln!(
            "no scorable profile: every one of the {} launches ended in fewer than {} steps",
            cell.launches,
            resolved.profiling.window + 1
        );
        return Ok(EXIT_NO_PROFILE);
    };
    let score = cell.score.expect("aggregated cells carry a score");

    std::fs::create_dir_all(&resolved.out_dir)
        .with_context(|| format!("cannot create {}", resolved.out_dir.display()))?;
    if resolved.emit.csv {
        let path = resolved.out_dir.join("profile.csv");
        emit::write_text(&path, &emit::profile_csv(aggregated))?;
        println!("wrote {}", path.display());
    }
    if resolved.emit.json {
        let path = resolved.out_dir.join("score.json");
        emit::write_json(
            &path,
            &emit::profile_summary_json(
                &resolved.label,
                alpha,
                beta,
                cell.launches,
                cell.scorable,
                cell.convergence_pct,
                &score,
            ),
        )?;
        println!("wrote {}", path.display());
    }

    println!(
        "profiled ({}, {}) on {}: s_min {}, s_mom {} ({} of {} launches scorable, {}% converged)",
        emit::fmt_f64(alpha),
        emit::fmt_f64(beta),
        resolved.label,
        emit::fmt_f64(score.s_min),
        emit::fmt_f64(score.s_mom),
        cell.scorable,
        cell.launches,
        emit::fmt_f64(cell.convergence_pct)
    );
    Ok(EXIT_OK)
}

fn cmd_scan(resolved: &Resolved) -> Result<u8> {
    let grid = resolved.grid_spec()?;
    let result = scan(&resolved.problem, &resolved.solver, &grid, &resolved.profiling);

    std::fs::create_dir_all(&resolved.out_dir)
        .with_context(|| format!("cannot create {}", resolved.out_dir.display()))?;
    if resolved.emit.csv {
        for (name, matrix) in [
            ("heatmap_s_min.csv", &result.s_min_matrix),
            ("heatmap_s_mom.csv", &result.s_mom_matrix),
            ("heatmap_convergence.csv", &result.ensemble_convergence_matrix),
        ] {
            let path = resolved.out_dir.join(name);
            emit::write_text(
                &path,
                &emit::heatmap_csv(&result.alphas, &result.betas, |i, j| matrix.get(i, j)),
            )?;
            println!("wrote {}", path.display());
        }
    }
    if resolved.emit.image {
        let rows = result.alphas.len();
        let cols = result.betas.len();
        let s_min_path = resolved.out_dir.join("s_min.png");
        let s_min_bounds =
            emit::write_gray_png(&s_min_path, rows, cols, |i, j| result.s_min_matrix.get(i, j))?;
        println!("wrote {}", s_min_path.display());
        let s_mom_path = resolved.out_dir.join("s_mom.png");
        let s_mom_bounds =
            emit::write_gray_png(&s_mom_path, rows, cols, |i, j| result.s_mom_matrix.get(i, j))?;
        println!("wrote {}", s_mom_path.display());
        let bounds_path = resolved.out_dir.join("bounds.json");
        emit::write_json(
            &bounds_path,
            &serde_json::json!({
                "s_min": { "min": s_min_bounds.min, "max": s_min_bounds.max },
                "s_mom": { "min": s_mom_bounds.min, "max": s_mom_bounds.max },
            }),
        )?;
        println!("wrote {}", bounds_path.display());
    }
    if resolved.emit.json {
        let path = resolved.out_dir.join("selection.json");
        emit::write_json(&path, &emit::selection_json(&result))?;
        println!("wrote {}", path.display());
    }

    println!(
        "scanned {}x{} cells on {}: selected (alpha*, beta*) = ({}, {}) at cell ({}, {}){}",
        result.alphas.len(),
        result.betas.len(),
        resolved.label,
        emit::fmt_f64(result.selected.alpha_star),
        emit::fmt_f64(result.selected.beta_star),
        result.selected.row,
        result.selected.col,
        if result.degenerate_cells.is_empty() {
            String::new()
        } else {
            format!("; {} degenerate cell(s) scored (0, 0)", result.degenerate_cells.len())
        }
    );
    Ok(EXIT_OK)
}

fn cmd_bench(resolved: &Resolved) -> Result<u8> {
    let configs: Vec<_> = resolved
        .bench_methods
        .iter()
        .map(|&method| steplog::solver::SolverConfig { method, ..resolved.solver.clone() })
        .collect();
    let policy = if resolved.bench_reps == 1 {
        let starts = resolved.fixed_starts.clone().ok_or_else(|| {
            anyhow!("bench with reps = 1 needs starts: use a fixture, a starts list, or --reps > 1")
        })?;
        StartPolicy::Fixed(starts)
    } else {
        StartPolicy::Random { mode: resolved.init_mode()?, master_seed: resolved.master_seed }
    };

    let rows = compare_methods(&resolved.problem, &configs, &policy, resolved.bench_reps);
    let bench_rows: Vec<BenchRow> = rows
        .iter()
        .map(|row| BenchRow::from_metrics(row.config.method.name(), &row.metrics))
        .collect();

    std::fs::create_dir_all(&resolved.out_dir)
        .with_context(|| format!("cannot create {}", resolved.out_dir.display()))?;
    if resolved.emit.csv {
        let path = resolved.out_dir.join("bench.csv");
        emit::write_text(&path, &emit::bench_csv(&bench_rows))?;
        println!("wrote {}", path.display());
    }
    let table = emit::bench_text(&bench_rows);
    let path = resolved.out_dir.join("bench.txt");
    emit::write_text(&path, &table)?;
    println!("wrote {}", path.display());
    print!("{table}");
    Ok(EXIT_OK)
}

fn run_cli(cli: Cli) -> Result<u8> {
    configure_threads(cli.threads)?;
    let manifest = match &cli.config {
        Some(path) => Some(manifest::load_manifest(path)?),
        None => None,
    };
    let resolved = manifest::resolve(manifest, &overrides_from(&cli))?;
    match cli.command {
        Command::Solve => cmd_solve(&resolved),
        Command::Profile => cmd_profile(&resolved),
        Command::Scan => cmd_scan(&resolved),
        Command::Bench { .. } => cmd_bench(&resolved),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
        Err(e) => {
            // --help / --version
            let _ = e.print();
            return ExitCode::from(EXIT_OK);
        }
    };
    match run_cli(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
