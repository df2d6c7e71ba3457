//! Run manifests: the TOML configuration file, the command-line overrides,
//! and the resolution of both into validated run inputs.
//!
//! Precedence is flag > config file > built-in default. The full config
//! grammar is documented in the project README; every section and key is
//! optional except that exactly one problem source must be present after
//! overrides are applied.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64;
use serde::Deserialize;
use steplog::problem::{fixtures, ExpQuartic, Polynomial, Problem};
use steplog::profile::{ProfilingConfig, DEFAULT_EPSILON, DEFAULT_WINDOW};
use steplog::solver::{
    Method, SolverConfig, DEFAULT_BLOWUP_CAP, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use steplog::tuner::{GridSpec, InitMode, DEFAULT_N_ENS};

/// A complex entry in a config file: a bare number is a real value, a
/// two-element array is `[re, im]`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum ComplexEntry {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexEntry> for Complex64 {
    fn from(e: ComplexEntry) -> Self {
        match e {
            ComplexEntry::Real(re) => Complex64::new(re, 0.0),
            ComplexEntry::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

fn to_complex(entries: &[ComplexEntry]) -> Vec<Complex64> {
    entries.iter().map(|&e| e.into()).collect()
}

/// `[problem]`: exactly one source — a fixture name, ascending polynomial
/// coefficients, a root list, or `kind = "exp_quartic"` with `theta`/`c`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub fixture: Option<String>,
    pub coefficients: Option<Vec<ComplexEntry>>,
    pub roots: Option<Vec<ComplexEntry>>,
    pub kind: Option<String>,
    pub theta: Option<f64>,
    pub c: Option<f64>,
    pub reference_roots: Option<Vec<ComplexEntry>>,
    pub starts: Option<Vec<ComplexEntry>>,
}

/// `[solver]`: scheme and iteration controls.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub method: Option<String>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub blowup_cap: Option<f64>,
    pub jitter: Option<f64>,
}

/// `[profiling]`: step-log window settings.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfilingSection {
    pub window: Option<usize>,
    pub epsilon: Option<f64>,
}

/// `[ensemble]`: micro-launch ensemble size, seeding, and initialization.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub n_ens: Option<usize>,
    pub seed: Option<u64>,
    /// `"disk"` (uniform over a disk, default) or `"perturb"` (Gaussian
    /// perturbation of the reference roots).
    pub init: Option<String>,
    /// Disk radius; omitted means the problem's root-containment radius.
    pub radius: Option<f64>,
    /// Perturbation standard deviation (required when `init = "perturb"`).
    pub sigma: Option<f64>,
}

/// `[grid]`: the (alpha, beta) axes of a parameter scan.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub n_alpha: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    pub n_beta: usize,
}

/// `[output]`: artifact directory and emission set.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    /// Any subset of `["csv", "json", "image"]`.
    pub emit: Option<Vec<String>>,
}

/// `[bench]`: method list and repetition count for comparisons.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    pub methods: Option<Vec<String>>,
    pub reps: Option<usize>,
}

/// The full config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    #[serde(default)]
    pub problem: ProblemSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub profiling: ProfilingSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    pub grid: Option<GridSection>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub bench: BenchSection,
}

/// Reads and parses a manifest; parse failures carry the TOML line/column.
pub fn load_manifest(path: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    toml::from_str(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
}

/// Command-line overrides; every field beats the corresponding config key.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub fixture: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub emit: Option<Vec<String>>,
    pub method: Option<String>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub grid: Option<String>,
    pub ens: Option<usize>,
    pub window: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub init: Option<String>,
    pub radius: Option<f64>,
    pub sigma: Option<f64>,
    pub reps: Option<usize>,
    pub methods: Option<Vec<String>>,
}

/// Ensemble initialization resolved from config and flags, still awaiting
/// problem-dependent validation (perturbation needs reference roots).
#[derive(Debug, Clone, Copy)]
pub enum InitSpec {
    Disk(Option<f64>),
    Perturb(f64),
}

/// Which artifact kinds to write.
#[derive(Debug, Clone, Copy)]
pub struct EmitSet {
    pub csv: bool,
    pub json: bool,
    pub image: bool,
}

impl EmitSet {
    fn from_names(names: &[String]) -> Result<Self> {
        let mut set = EmitSet { csv: false, json: false, image: false };
        for name in names {
            match name.as_str() {
                "csv" => set.csv = true,
                "json" => set.json = true,
                "image" => set.image = true,
                other => bail!("unknown emit kind {other:?}; valid kinds: csv, json, image"),
            }
        }
        Ok(set)
    }
}

/// Everything a subcommand needs, fully validated.
#[derive(Debug, Clone)]
pub struct Resolved {
    /// Human-readable problem label for summaries.
    pub label: String,
    pub problem: Problem,
    /// Explicit starts (config) or the fixture defaults, when available.
    pub fixed_starts: Option<Vec<Complex64>>,
    pub solver: SolverConfig,
    pub profiling: ProfilingConfig,
    pub n_ens: usize,
    pub master_seed: u64,
    pub init: InitSpec,
    pub grid_axes: Option<GridSection>,
    pub out_dir: PathBuf,
    pub emit: EmitSet,
    pub bench_methods: Vec<Method>,
    pub bench_reps: usize,
}

impl Resolved {
    /// The ensemble init mode, validated against the problem.
    pub fn init_mode(&self) -> Result<InitMode> {
        match self.init {
            InitSpec::Disk(radius) => {
                if let Some(r) = radius {
                    if !(r.is_finite() && r > 0.0) {
                        bail!("disk radius must be positive and finite, got {r}");
                    }
                }
                Ok(InitMode::DiskRadius(radius))
            }
            InitSpec::Perturb(sigma) => {
                if !(sigma.is_finite() && sigma >= 0.0) {
                    bail!("perturbation sigma must be nonnegative and finite, got {sigma}");
                }
                if self.problem.reference_roots().is_none() {
                    bail!(
                        "init = \"perturb\" needs reference roots; this problem has none \
                         (use a fixture, a root list, or reference_roots)"
                    );
                }
                Ok(InitMode::PerturbReference(sigma))
            }
        }
    }

    /// A 1x1 grid at `(alpha, beta)` with the resolved ensemble settings.
    pub fn single_cell_grid(&self, alpha: f64, beta: f64) -> Result<GridSpec> {
        GridSpec::new(
            alpha,
            alpha,
            1,
            beta,
            beta,
            1,
            self.n_ens,
            self.master_seed,
            self.init_mode()?,
        )
        .map_err(|e| anyhow!("{e}"))
    }

    /// The full scan grid; errors when no grid was configured.
    pub fn grid_spec(&self) -> Result<GridSpec> {
        let axes = self
            .grid_axes
            .as_ref()
            .ok_or_else(|| anyhow!("scan needs a grid: add a [grid] section or pass --grid"))?;
        GridSpec::new(
            axes.alpha_min,
            axes.alpha_max,
            axes.n_alpha,
            axes.beta_min,
            axes.beta_max,
            axes.n_beta,
            self.n_ens,
            self.master_seed,
            self.init_mode()?,
        )
        .map_err(|e| anyhow!("{e}"))
    }
}

fn parse_method(name: &str) -> Result<Method> {
    Method::from_name(name).ok_or_else(|| {
        let valid: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
        anyhow!("unknown method {name:?}; valid methods: {}", valid.join(", "))
    })
}

/// Parses `--grid a0:a1:na,b0:b1:nb`.
fn parse_grid_flag(text: &str) -> Result<GridSection> {
    let err = || {
        anyhow!("invalid --grid {text:?}; expected a0:a1:na,b0:b1:nb (e.g. -9:15:25,-6:12:19)")
    };
    let (a, b) = text.split_once(',').ok_or_else(err)?;
    let axis = |part: &str| -> Result<(f64, f64, usize)> {
        let fields: Vec<&str> = part.split(':').collect();
        if fields.len() != 3 {
            return Err(err());
        }
        Ok((
            fields[0].parse().map_err(|_| err())?,
            fields[1].parse().map_err(|_| err())?,
            fields[2].parse().map_err(|_| err())?,
        ))
    };
    let (alpha_min, alpha_max, n_alpha) = axis(a)?;
    let (beta_min, beta_max, n_beta) = axis(b)?;
    Ok(GridSection { alpha_min, alpha_max, n_alpha, beta_min, beta_max, n_beta })
}

fn build_problem(
    spec: &ProblemSection,
) -> Result<(String, Problem, Option<Vec<Complex64>>)> {
    let sources = [
        spec.fixture.is_some(),
        spec.coefficients.is_some(),
        spec.roots.is_some(),
        spec.kind.is_some(),
    ]
    .iter()
    .filter(|&&s| s)
    .count();
    if sources != 1 {
        bail!(
            "exactly one problem source required (fixture, coefficients, roots, or kind); \
             found {sources}"
        );
    }

    let explicit_starts = spec.starts.as_ref().map(|s| to_complex(s));

    if let Some(name) = &spec.fixture {
        let fixture = fixtures::by_name(name).ok_or_else(|| {
            anyhow!(
                "unknown fixture {name:?}; valid fixtures: {}",
                fixtures::FIXTURE_NAMES.join(", ")
            )
        })?;
        if spec.reference_roots.is_some() {
            bail!("reference_roots cannot be overridden for a fixture");
        }
        let starts = explicit_starts.or(Some(fixture.default_starts.clone()));
        return Ok((fixture.name.to_string(), fixture.problem, starts));
    }

    if let Some(roots) = &spec.roots {
        if spec.reference_roots.is_some() {
            bail!("a root-list problem already has reference roots; drop reference_roots");
        }
        let roots = to_complex(roots);
        let poly = Polynomial::from_roots(&roots);
        let degree = poly.degree();
        let problem = Problem::polynomial(poly)
            .with_reference_roots(roots)
            .map_err(|e| anyhow!("invalid roots: {e}"))?;
        return Ok((format!("roots(degree {degree})"), problem, explicit_starts));
    }

    if let Some(coeffs) = &spec.coefficients {
        let poly = Polynomial::new(to_complex(coeffs))
            .map_err(|e| anyhow!("invalid coefficients: {e}"))?;
        let degree = poly.degree();
        let mut problem = Problem::polynomial(poly);
        if let Some(refs) = &spec.reference_roots {
            problem = problem
                .with_reference_roots(to_complex(refs))
                .map_err(|e| anyhow!("invalid reference_roots: {e}"))?;
        }
        return Ok((format!("polynomial(degree {degree})"), problem, explicit_starts));
    }

    let kind = spec.kind.as_deref().expect("source counting guarantees kind");
    if kind != "exp_quartic" {
        bail!("unknown problem kind {kind:?}; the only inline kind is \"exp_quartic\"");
    }
    let theta = spec.theta.unwrap_or(1.0);
    let c = spec.c.unwrap_or(1.0);
    let map = ExpQuartic::new(theta, c).map_err(|e| anyhow!("invalid exp_quartic: {e}"))?;
    let mut problem = Problem::exp_quartic(map);
    if let Some(refs) = &spec.reference_roots {
        problem = problem
            .with_reference_roots(to_complex(refs))
            .map_err(|e| anyhow!("invalid reference_roots: {e}"))?;
    }
    Ok((format!("exp_quartic(theta={theta}, c={c})"), problem, explicit_starts))
}

/// Merges the config file (if any) with the command-line overrides and
/// validates the result.
pub fn resolve(manifest: Option<RunManifest>, ov: &Overrides) -> Result<Resolved> {
    let manifest = manifest.unwrap_or_default();

    // Problem: --fixture replaces the config problem source outright.
    let mut problem_section = manifest.problem.clone();
    if let Some(name) = &ov.fixture {
        problem_section = ProblemSection {
            fixture: Some(name.clone()),
            starts: problem_section.starts,
            ..Default::default()
        };
    }
    let (label, problem, fixed_starts) = build_problem(&problem_section)?;

    // Solver.
    let method_name = ov
        .method
        .clone()
        .or_else(|| manifest.solver.method.clone())
        .unwrap_or_else(|| "sab3".to_string());
    let method = parse_method(&method_name)?;
    let mut solver = SolverConfig::new(method);
    solver.alpha = ov.alpha.or(manifest.solver.alpha).unwrap_or(0.0);
    solver.beta = ov.beta.or(manifest.solver.beta).unwrap_or(0.0);
    solver.tol = ov.tol.or(manifest.solver.tol).unwrap_or(DEFAULT_TOL);
    solver.max_iter = ov.max_iter.or(manifest.solver.max_iter).unwrap_or(DEFAULT_MAX_ITER);
    solver.blowup_cap = manifest.solver.blowup_cap.unwrap_or(DEFAULT_BLOWUP_CAP);
    solver.jitter = manifest.solver.jitter;
    if !(solver.tol.is_finite() && solver.tol > 0.0) {
        bail!("tol must be positive and finite, got {}", solver.tol);
    }
    if solver.max_iter == 0 {
        bail!("max_iter must be at least 1");
    }

    // Profiling.
    let window = ov.window.or(manifest.profiling.window).unwrap_or(DEFAULT_WINDOW);
    let epsilon = manifest.profiling.epsilon.unwrap_or(DEFAULT_EPSILON);
    let profiling = ProfilingConfig::new(window, epsilon).map_err(|e| anyhow!("{e}"))?;

    // Ensemble.
    let n_ens = ov.ens.or(manifest.ensemble.n_ens).unwrap_or(DEFAULT_N_ENS);
    if n_ens == 0 {
        bail!("n_ens must be at least 1");
    }
    let master_seed = ov.seed.or(manifest.ensemble.seed).unwrap_or(0);
    let init_name = ov
        .init
        .clone()
        .or_else(|| manifest.ensemble.init.clone())
        .unwrap_or_else(|| "disk".to_string());
    let radius = ov.radius.or(manifest.ensemble.radius);
    let sigma = ov.sigma.or(manifest.ensemble.sigma);
    let init = match init_name.as_str() {
        "disk" => InitSpec::Disk(radius),
        "perturb" => InitSpec::Perturb(
            sigma.ok_or_else(|| anyhow!("init = \"perturb\" needs sigma (--sigma or [ensemble] sigma)"))?,
        ),
        other => bail!("unknown init mode {other:?}; valid modes: disk, perturb"),
    };

    // Grid.
    let grid_axes = match &ov.grid {
        Some(text) => Some(parse_grid_flag(text)?),
        None => manifest.grid.clone(),
    };
    if let Some(axes) = &grid_axes {
        if axes.n_alpha == 0 || axes.n_beta == 0 {
            bail!("grid axes need at least one point each");
        }
    }

    // Output.
    let out_dir = ov
        .out
        .clone()
        .or_else(|| manifest.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let emit = match (&ov.emit, &manifest.output.emit) {
        (Some(names), _) => EmitSet::from_names(names)?,
        (None, Some(names)) => EmitSet::from_names(names)?,
        (None, None) => EmitSet { csv: true, json: true, image: true },
    };

    // Bench.
    let method_names: Vec<String> = ov
        .methods
        .clone()
        .or_else(|| manifest.bench.methods.clone())
        .unwrap_or_else(|| Method::ALL.iter().map(|m| m.name().to_string()).collect());
    if method_names.is_empty() {
        bail!("bench needs at least one method");
    }
    let bench_methods =
        method_names.iter().map(|n| parse_method(n)).collect::<Result<Vec<_>>>()?;
    let bench_reps = ov.reps.or(manifest.bench.reps).unwrap_or(1);
    if bench_reps == 0 {
        bail!("reps must be at least 1");
    }

    Ok(Resolved {
        label,
        problem,
        fixed_starts,
        solver,
        profiling,
        n_ens,
        master_seed,
        init,
        grid_axes,
        out_dir,
        emit,
        bench_methods,
        bench_reps,
    })
}
