//! Parameter-plane scanning for the bi-parametric scheme.
//!
//! A rectangular (alpha, beta) grid is evaluated cell by cell: each cell runs
//! an ensemble of seeded micro-launches, profiles every launch's step-norm
//! contraction, aggregates the profiles, and scores the aggregate. The cell
//! with the best moment score wins, with the dip score as tie-breaker.

use crate::problem::Problem;
use crate::profile::{
    aggregate, score, steplog_trace, windowed_profile, AggregatedProfile, ProfilingConfig,
    ScorePair,
};
use crate::solver::{apply_jitter, run, Method, SolverConfig, Status};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::TAU;
use std::fmt;

/// Standard alpha scanning range.
pub const DEFAULT_ALPHA_RANGE: (f64, f64) = (-9.0, 15.0);
/// Standard beta scanning range.
pub const DEFAULT_BETA_RANGE: (f64, f64) = (-6.0, 12.0);
/// Standard alpha resolution (about unit spacing over the default range).
pub const DEFAULT_N_ALPHA: usize = 25;
/// Standard beta resolution (about unit spacing over the default range).
pub const DEFAULT_N_BETA: usize = 19;
/// Standard ensemble size per cell.
pub const DEFAULT_N_ENS: usize = 50;

/// How each micro-launch draws its initial constellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitMode {
    /// Independent uniform draws from the closed disk of the given radius
    /// centered at the origin; `None` uses the problem's initial radius
    /// (the Cauchy root bound for polynomials).
    DiskRadius(Option<f64>),
    /// The problem's reference constellation plus independent zero-mean
    /// Gaussian noise of the given standard deviation on the real and
    /// imaginary part of every component. Requires reference roots.
    PerturbReference(f64),
}

/// Errors from grid construction.
#[derive(Debug, Clone, PartialEq)]
pub enum TunerError {
    /// An axis has min > max or non-finite endpoints.
    InvalidAxis(&'static str),
    /// An axis or the ensemble was given zero points.
    ZeroCount(&'static str),
    /// The init mode carries an invalid radius or sigma.
    InvalidInitParameter(&'static str),
}

impl fmt::Display for TunerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TunerError::InvalidAxis(axis) => {
                write!(f, "{axis} axis must have finite min <= max")
            }
            TunerError::ZeroCount(what) => write!(f, "{what} must be at least 1"),
            TunerError::InvalidInitParameter(what) => write!(f, "{what}"),
        }
    }
}

impl std::error::Error for TunerError {}

/// Rectangular (alpha, beta) grid with ensemble settings.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub beta_min: f64,
    pub beta_max: f64,
    /// Number of alpha points (inclusive endpoints, uniform spacing).
    pub n_alpha: usize,
    /// Number of beta points (inclusive endpoints, uniform spacing).
    pub n_beta: usize,
    /// Micro-launches per cell.
    pub n_ens: usize,
    /// Master seed; per-launch seeds are derived from it and the cell.
    pub master_seed: u64,
    pub init_mode: InitMode,
}

impl GridSpec {
    /// Builds a validated grid. Single-point axes (min = max, n = 1) are
    /// allowed.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        alpha_min: f64,
        alpha_max: f64,
        n_alpha: usize,
        beta_min: f64,
        beta_max: f64,
        n_beta: usize,
        n_ens: usize,
        master_seed: u64,
        init_mode: InitMode,
    ) -> Result<Self, TunerError> {
        if !alpha_min.is_finite() || !alpha_max.is_finite() || alpha_min > alpha_max {
            return Err(TunerError::InvalidAxis("alpha"));
        }
        if !beta_min.is_finite() || !beta_max.is_finite() || beta_min > beta_max {
            return Err(TunerError::InvalidAxis("beta"));
        }
        if n_alpha == 0 {
            return Err(TunerError::ZeroCount("alpha point count"));
        }
        if n_beta == 0 {
            return Err(TunerError::ZeroCount("beta point count"));
        }
        if n_ens == 0 {
            return Err(TunerError::ZeroCount("ensemble size"));
        }
        match init_mode {
            InitMode::DiskRadius(Some(r)) if !(r.is_finite() && r > 0.0) => {
                return Err(TunerError::InvalidInitParameter(
                    "disk radius must be finite and positive",
                ));
            }
            InitMode::PerturbReference(sigma) if !(sigma.is_finite() && sigma >= 0.0) => {
                return Err(TunerError::InvalidInitParameter(
                    "perturbation sigma must be finite and nonnegative",
                ));
            }
            _ => {}
        }
        Ok(GridSpec {
            alpha_min,
            alpha_max,
            beta_min,
            beta_max,
            n_alpha,
            n_beta,
            n_ens,
            master_seed,
            init_mode,
        })
    }

    /// The standard scanning grid: alpha in [-9, 15] at 25 points, beta in
    /// [-6, 12] at 19 points, 50 launches per cell.
    pub fn standard(master_seed: u64, init_mode: InitMode) -> Self {
        GridSpec::new(
            DEFAULT_ALPHA_RANGE.0,
            DEFAULT_ALPHA_RANGE.1,
            DEFAULT_N_ALPHA,
            DEFAULT_BETA_RANGE.0,
            DEFAULT_BETA_RANGE.1,
            DEFAULT_N_BETA,
            DEFAULT_N_ENS,
            master_seed,
            init_mode,
        )
        .expect("standard grid parameters are valid")
    }

    /// The alpha axis values (endpoint-inclusive uniform spacing).
    pub fn alphas(&self) -> Vec<f64> {
        linspace(self.alpha_min, self.alpha_max, self.n_alpha)
    }

    /// The beta axis values (endpoint-inclusive uniform spacing).
    pub fn betas(&self) -> Vec<f64> {
        linspace(self.beta_min, self.beta_max, self.n_beta)
    }
}

fn linspace(min: f64, max: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![min];
    }
    let step = (max - min) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { max } else { min + i as f64 * step })
        .collect()
}

/// Dense row-major matrix of cell values (rows = alpha, cols = beta).
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Zero-filled matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    /// One row as a slice.
    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }
}

/// The winning cell of a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub alpha_star: f64,
    pub beta_star: f64,
    pub row: usize,
    pub col: usize,
}

/// Full scan output: axes, score matrices, convergence matrix, degenerate
/// cells (no launch produced a scorable trace), and the selected cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub s_min_matrix: Matrix,
    pub s_mom_matrix: Matrix,
    /// Percentage of converged launches per cell, in [0, 100].
    pub ensemble_convergence_matrix: Matrix,
    /// Cells whose every launch produced a trace shorter than the window;
    /// they score (0, 0). Row-major order.
    pub degenerate_cells: Vec<(usize, usize)>,
    pub selected: Selection,
}

/// Outcome of one cell's ensemble.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    /// Aggregated profile over the scorable launches; `None` when no launch
    /// produced a trace at least one window long.
    pub aggregated: Option<AggregatedProfile>,
    /// Scores of the aggregate; `None` exactly when `aggregated` is.
    pub score: Option<ScorePair>,
    /// Percentage of launches that converged, in [0, 100].
    pub convergence_pct: f64,
    /// Total launches run.
    pub launches: usize,
    /// Launches whose trace reached the window length.
    pub scorable: usize,
}

impl CellOutcome {
    /// Scores with the degenerate case mapped to (0, 0).
    pub fn score_or_zero(&self) -> (f64, f64) {
        self.score.map_or((0.0, 0.0), |s| (s.s_min, s.s_mom))
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the RNG seed for launch `e` of cell `(i, j)` from the master
/// seed.
///
/// The derivation is a fixed chain of splitmix64 avalanche steps —
/// `s0 = mix(master)`, `s1 = mix(s0 xor i)`, `s2 = mix(s1 xor j)`,
/// `seed = mix(s2 xor e)` — so equal inputs give equal outputs on every
/// platform and distinct inputs are avalanche-separated.
pub fn derive_seed(master: u64, i: usize, j: usize, e: usize) -> u64 {
    let mut state = splitmix64(master);
    state = splitmix64(state ^ i as u64);
    state = splitmix64(state ^ j as u64);
    splitmix64(state ^ e as u64)
}

/// Draws one initial constellation for a micro-launch.
///
/// `DiskRadius` draws each component as `r * sqrt(u) * exp(i * theta)` with
/// `u` uniform on [0, 1) and `theta` uniform on [0, tau), which is uniform
/// over the disk of radius `r`. `PerturbReference` requires the problem to
/// carry reference roots. Components closer than the default jitter are
/// separated exactly as the solver would separate them.
pub fn random_initials(p: &Problem, mode: InitMode, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = p.root_count();
    let mut points: Vec<Complex64> = match mode {
        InitMode::DiskRadius(radius) => {
            let r = radius.unwrap_or_else(|| p.initial_radius());
            (0..n)
                .map(|_| {
                    let u: f64 = rng.gen();
                    let theta: f64 = rng.gen_range(0.0..TAU);
                    Complex64::from_polar(r * u.sqrt(), theta)
                })
                .collect()
        }
        InitMode::PerturbReference(sigma) => {
            let refs = p
                .reference_roots()
                .expect("perturbation initials require a problem with reference roots");
            let noise = Normal::new(0.0, sigma).expect("validated sigma");
            refs.iter()
                .map(|&root| {
                    let dre = noise.sample(&mut rng);
                    let dim = noise.sample(&mut rng);
                    root + Complex64::new(dre, dim)
                })
                .collect()
        }
    };
    let cfg = SolverConfig::new(Method::Sab3);
    apply_jitter(&mut points, cfg.resolved_jitter(p));
    points
}

/// Runs the ensemble of one grid cell and scores it.
///
/// Launch `e` of cell `(i, j)` uses the seed `derive_seed(master, i, j, e)`,
/// so a cell's outcome depends only on the problem, the solver settings, its
/// own coordinates, and the grid's ensemble settings — never on other cells
/// or on execution order.
pub fn run_cell(
    p: &Problem,
    base: &SolverConfig,
    prof: &ProfilingConfig,
    grid: &GridSpec,
    i: usize,
    j: usize,
    alpha: f64,
    beta: f64,
) -> CellOutcome {
    let mut cfg = base.clone();
    cfg.alpha = alpha;
    cfg.beta = beta;

    let mut profiles = Vec::new();
    let mut converged = 0usize;
    for e in 0..grid.n_ens {
        let seed = derive_seed(grid.master_seed, i, j, e);
        let starts = random_initials(p, grid.init_mode, seed);
        let traj = run(p, &cfg, &starts);
        if matches!(traj.status, Status::Converged { .. }) {
            converged += 1;
        }
        let trace = steplog_trace(&traj.step_norms, prof);
        if let Ok(profile) = windowed_profile(&trace, prof) {
            profiles.push(profile);
        }
    }

    let scorable = profiles.len();
    let (aggregated, cell_score) = if profiles.is_empty() {
        (None, None)
    } else {
        let agg = aggregate(&profiles);
        let s = score(&agg);
        (Some(agg), Some(s))
    };
    CellOutcome {
        aggregated,
        score: cell_score,
        convergence_pct: 100.0 * converged as f64 / grid.n_ens as f64,
        launches: grid.n_ens,
        scorable,
    }
}

fn warn_if_params_inert(base: &SolverConfig) {
    if base.method != Method::Sab3 {
        log::warn!(
            "scanning with method {}: alpha and beta are inert for it",
            base.method
        );
    }
}

fn assemble(
    grid: &GridSpec,
    alphas: Vec<f64>,
    betas: Vec<f64>,
    outcomes: Vec<CellOutcome>,
) -> ScanResult {
    let (na, nb) = (grid.n_alpha, grid.n_beta);
    let mut s_min_matrix = Matrix::zeros(na, nb);
    let mut s_mom_matrix = Matrix::zeros(na, nb);
    let mut ensemble_convergence_matrix = Matrix::zeros(na, nb);
    let mut degenerate_cells = Vec::new();

    for (idx, outcome) in outcomes.iter().enumerate() {
        let (i, j) = (idx / nb, idx % nb);
        let (s_min, s_mom) = outcome.score_or_zero();
        s_min_matrix.set(i, j, s_min);
        s_mom_matrix.set(i, j, s_mom);
        ensemble_convergence_matrix.set(i, j, outcome.convergence_pct);
        if outcome.score.is_none() {
            degenerate_cells.push((i, j));
        }
    }

    let (row, col) = select_cell(&s_mom_matrix, &s_min_matrix);
    let selected = Selection { alpha_star: alphas[row], beta_star: betas[col], row, col };
    ScanResult {
        alphas,
        betas,
        s_min_matrix,
        s_mom_matrix,
        ensemble_convergence_matrix,
        degenerate_cells,
        selected,
    }
}

/// Applies the selection rule to score matrices: the cell with the largest
/// moment score wins; moment ties fall back to the largest dip score;
/// remaining ties resolve to the lexicographically smallest (row, col).
pub fn select_cell(s_mom: &Matrix, s_min: &Matrix) -> (usize, usize) {
    assert_eq!(s_mom.rows(), s_min.rows());
    assert_eq!(s_mom.cols(), s_min.cols());
    let mut best = (0usize, 0usize);
    for i in 0..s_mom.rows() {
        for j in 0..s_mom.cols() {
            let better = s_mom.get(i, j) > s_mom.get(best.0, best.1)
                || (s_mom.get(i, j) == s_mom.get(best.0, best.1)
                    && s_min.get(i, j) > s_min.get(best.0, best.1));
            if better {
                best = (i, j);
            }
        }
    }
    best
}

/// Scans the grid cell by cell on the current thread.
pub fn scan_sequential(
    p: &Problem,
    base: &SolverConfig,
    grid: &GridSpec,
    prof: &ProfilingConfig,
) -> ScanResult {
    warn_if_params_inert(base);
    let alphas = grid.alphas();
    let betas = grid.betas();
    let outcomes: Vec<CellOutcome> = (0..grid.n_alpha * grid.n_beta)
        .map(|idx| {
            let (i, j) = (idx / grid.n_beta, idx % grid.n_beta);
            run_cell(p, base, prof, grid, i, j, alphas[i], betas[j])
        })
        .collect();
    assemble(grid, alphas, betas, outcomes)
}

/// Scans the grid with cells distributed over the global thread pool.
/// Results are written by cell index, so the output is bit-identical to the
/// sequential scan regardless of worker count.
#[cfg(feature = "parallel")]
pub fn scan_parallel(
    p: &Problem,
    base: &SolverConfig,
    grid: &GridSpec,
    prof: &ProfilingConfig,
) -> ScanResult {
    use rayon::prelude::*;
    warn_if_params_inert(base);
    let alphas = grid.alphas();
    let betas = grid.betas();
    let outcomes: Vec<CellOutcome> = (0..grid.n_alpha * grid.n_beta)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / grid.n_beta, idx % grid.n_beta);
            run_cell(p, base, prof, grid, i, j, alphas[i], betas[j])
        })
        .collect();
    assemble(grid, alphas, betas, outcomes)
}

/// Scans the grid, in parallel when the `parallel` feature is enabled.
pub fn scan(
    p: &Problem,
    base: &SolverConfig,
    grid: &GridSpec,
    prof: &ProfilingConfig,
) -> ScanResult {
    #[cfg(feature = "parallel")]
    {
        scan_parallel(p, base, grid, prof)
    }
    #[cfg(not(feature = "parallel"))]
    {
        scan_sequential(p, base, grid, prof)
    }
}
