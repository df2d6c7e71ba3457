//! Benchmark metrics: residuals, empirical convergence order, root-to-
//! reference matching, convergence rates, and multi-method comparisons.

use crate::problem::Problem;
use crate::solver::{run, SolverConfig, Status, Trajectory};
use crate::tuner::{derive_seed, random_initials, InitMode};
use num_complex::Complex64;
use std::fmt;
use std::time::Instant;

/// Log-difference denominators smaller than this make the order estimator
/// meaningless (successive norms too close), so the estimate is withheld.
pub const ORDER_DENOMINATOR_FLOOR: f64 = 1e-9;

/// Metrics of one run, or the aggregate of several repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    /// Euclidean norm of `f` over the components of the final iterate.
    pub residual: f64,
    /// Recorded iteration count (median over repetitions when aggregated).
    pub iterations: usize,
    /// Empirical convergence order, when estimable.
    pub emp_order: Option<f64>,
    /// Absolute per-root errors after matching against reference roots;
    /// empty when the problem carries no references.
    pub per_root_abs_error: Vec<f64>,
    /// Percentage of converged launches, in [0, 100].
    pub convergence_pct: f64,
    /// Wall-clock solve time in seconds.
    pub wall_time_seconds: f64,
}

/// Minimum-total-distance assignment of computed roots to references.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    /// `assignment[i]` is the reference index matched to computed root `i`;
    /// always a permutation.
    pub assignment: Vec<usize>,
    /// `distances[i] = |computed[i] - reference[assignment[i]]|`.
    pub distances: Vec<f64>,
}

impl MatchReport {
    /// Sum of all matched distances.
    pub fn total_distance(&self) -> f64 {
        self.distances.iter().sum()
    }

    /// Largest matched distance.
    pub fn max_distance(&self) -> f64 {
        self.distances.iter().cloned().fold(0.0_f64, f64::max)
    }
}

/// Errors from metric computation.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricsError {
    /// `match_roots` was given lists of different lengths.
    LengthMismatch { computed: usize, reference: usize },
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::LengthMismatch { computed, reference } => write!(
                f,
                "cannot match {computed} computed roots against {reference} references"
            ),
        }
    }
}

impl std::error::Error for MetricsError {}

/// Estimates the convergence order from the tail of a step-norm sequence.
///
/// Uses the last three positive norms `d0, d1, d2` (zero entries are
/// skipped) and returns `(ln d2 - ln d1) / (ln d1 - ln d0)`. The estimate is
/// withheld when fewer than three positive norms exist or the denominator's
/// magnitude falls below [`ORDER_DENOMINATOR_FLOOR`].
pub fn empirical_order(step_norms: &[f64]) -> Option<f64> {
    let positive: Vec<f64> = step_norms.iter().copied().filter(|&s| s > 0.0).collect();
    if positive.len() < 3 {
        return None;
    }
    let tail = &positive[positive.len() - 3..];
    let denominator = tail[1].ln() - tail[0].ln();
    if denominator.abs() < ORDER_DENOMINATOR_FLOOR {
        return None;
    }
    Some((tail[2].ln() - tail[1].ln()) / denominator)
}

/// Matches computed roots to reference roots by minimum total distance.
///
/// Exact optimal assignment via dynamic programming over reference subsets
/// (O(n * 2^n); intended for the tool's small degrees).
pub fn match_roots(
    computed: &[Complex64],
    reference: &[Complex64],
) -> Result<MatchReport, MetricsError> {
    if computed.len() != reference.len() {
        return Err(MetricsError::LengthMismatch {
            computed: computed.len(),
            reference: reference.len(),
        });
    }
    let n = computed.len();
    if n == 0 {
        return Ok(MatchReport { assignment: Vec::new(), distances: Vec::new() });
    }
    assert!(n <= 20, "assignment matching supports up to 20 roots, got {n}");

    let dist =
        |i: usize, j: usize| -> f64 { (computed[i] - reference[j]).norm() };

    // dp[mask] = minimal cost of assigning computed roots 0..popcount(mask)
    // to the reference subset `mask`; choice[mask] remembers the reference
    // picked for the last assigned computed root.
    let full = 1usize << n;
    let mut dp = vec![f64::INFINITY; full];
    let mut choice = vec![usize::MAX; full];
    dp[0] = 0.0;
    for mask in 0..full {
        if dp[mask].is_infinite() {
            continue;
        }
        let i = mask.count_ones() as usize;
        if i == n {
            continue;
        }
        for j in 0..n {
            if mask & (1 << j) != 0 {
                continue;
            }
            let next = mask | (1 << j);
            let cost = dp[mask] + dist(i, j);
            if cost < dp[next] {
                dp[next] = cost;
                choice[next] = j;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    let mut mask = full - 1;
    for i in (0..n).rev() {
        let j = choice[mask];
        assignment[i] = j;
        mask &= !(1 << j);
    }
    let distances: Vec<f64> = (0..n).map(|i| dist(i, assignment[i])).collect();
    Ok(MatchReport { assignment, distances })
}

/// Percentage of trajectories with a converged status.
pub fn convergence_pct(trajectories: &[Trajectory]) -> f64 {
    assert!(!trajectories.is_empty(), "convergence_pct requires at least one trajectory");
    let converged = trajectories
        .iter()
        .filter(|t| matches!(t.status, Status::Converged { .. }))
        .count();
    100.0 * converged as f64 / trajectories.len() as f64
}

/// How each repetition of a comparison obtains its starts.
#[derive(Debug, Clone, PartialEq)]
pub enum StartPolicy {
    /// The same fixed constellation for every repetition and method.
    Fixed(Vec<Complex64>),
    /// Randomized constellations; repetition `r` uses the seed
    /// `derive_seed(master_seed, 0, 0, r)`, so all methods see identical
    /// starts within a repetition.
    Random { mode: InitMode, master_seed: u64 },
}

impl StartPolicy {
    fn starts_for_rep(&self, p: &Problem, rep: usize) -> Vec<Complex64> {
        match self {
            StartPolicy::Fixed(v) => v.clone(),
            StartPolicy::Random { mode, master_seed } => {
                random_initials(p, *mode, derive_seed(*master_seed, 0, 0, rep))
            }
        }
    }
}

/// One comparison-table row: the configuration and its aggregated metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub config: SolverConfig,
    pub metrics: RunMetrics,
}

/// Metrics of a single finished trajectory against a problem.
pub fn trajectory_metrics(p: &Problem, traj: &Trajectory, wall_time_seconds: f64) -> RunMetrics {
    let final_iterate = traj.final_iterate();
    let per_root_abs_error = match p.reference_roots() {
        Some(refs) => match_roots(final_iterate, refs)
            .expect("reference list matches the problem's root count")
            .distances,
        None => Vec::new(),
    };
    RunMetrics {
        residual: p.residual_norm(final_iterate),
        iterations: traj.iteration_count(),
        emp_order: empirical_order(&traj.step_norms),
        per_root_abs_error,
        convergence_pct: if traj.status.is_converged() { 100.0 } else { 0.0 },
        wall_time_seconds,
    }
}

/// Runs every configuration for `reps` repetitions under a shared start
/// policy and aggregates each into one row.
///
/// Repetition `r` uses the same starts for every method. Aggregation over
/// repetitions: median for residual and wall time, lower-median for the
/// integer iteration count, median of the available estimates for the
/// empirical order (absent when none exists), elementwise median for
/// per-root errors, and the mean (= percentage of converged repetitions)
/// for `convergence_pct`. All configurations must share the tolerance,
/// iteration budget, and blowup cap so the comparison is fair.
pub fn compare_methods(
    p: &Problem,
    configs: &[SolverConfig],
    starts: &StartPolicy,
    reps: usize,
) -> Vec<ComparisonRow> {
    assert!(!configs.is_empty(), "compare_methods requires at least one configuration");
    assert!(reps >= 1, "compare_methods requires at least one repetition");
    assert!(
        configs.iter().all(|c| c.tol == configs[0].tol
            && c.max_iter == configs[0].max_iter
            && c.blowup_cap == configs[0].blowup_cap),
        "all configurations must share tol, max_iter, and blowup_cap"
    );

    let start_sets: Vec<Vec<Complex64>> =
        (0..reps).map(|r| starts.starts_for_rep(p, r)).collect();

    let run_one = |flat: usize| -> RunMetrics {
        let (m, r) = (flat / reps, flat % reps);
        let clock = Instant::now();
        let traj = run(p, &configs[m], &start_sets[r]);
        let elapsed = clock.elapsed().as_secs_f64();
        trajectory_metrics(p, &traj, elapsed)
    };

    #[cfg(feature = "parallel")]
    let samples: Vec<RunMetrics> = {
        use rayon::prelude::*;
        (0..configs.len() * reps).into_par_iter().map(run_one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let samples: Vec<RunMetrics> = (0..configs.len() * reps).map(run_one).collect();

    configs
        .iter()
        .enumerate()
        .map(|(m, config)| {
            let rows = &samples[m * reps..(m + 1) * reps];
            ComparisonRow { config: config.clone(), metrics: aggregate_metrics(rows) }
        })
        .collect()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite metric values"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn lower_median(values: &mut [usize]) -> usize {
    values.sort_unstable();
    values[(values.len() - 1) / 2]
}

fn aggregate_metrics(rows: &[RunMetrics]) -> RunMetrics {
    assert!(!rows.is_empty());
    if rows.len() == 1 {
        return rows[0].clone();
    }
    let mut residuals: Vec<f64> = rows.iter().map(|r| r.residual).collect();
    let mut iterations: Vec<usize> = rows.iter().map(|r| r.iterations).collect();
    let mut wall: Vec<f64> = rows.iter().map(|r| r.wall_time_seconds).collect();
    let mut orders: Vec<f64> = rows.iter().filter_map(|r| r.emp_order).collect();

    let n_err = rows[0].per_root_abs_error.len();
    let per_root_abs_error: Vec<f64> = (0..n_err)
        .map(|k| {
            let mut column: Vec<f64> =
                rows.iter().map(|r| r.per_root_abs_error[k]).collect();
            median(&mut column)
        })
        .collect();

    RunMetrics {
        residual: median(&mut residuals),
        iterations: lower_median(&mut iterations),
        emp_order: if orders.is_empty() { None } else { Some(median(&mut orders)) },
        per_root_abs_error,
        convergence_pct: rows.iter().map(|r| r.convergence_pct).sum::<f64>() / rows.len() as f64,
        wall_time_seconds: median(&mut wall),
    }
}
