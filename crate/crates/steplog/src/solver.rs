//! The six simultaneous iteration schemes and the trajectory-recording driver.
//!
//! All methods update every component from the same input vector (total-step
//! / Jacobi style). Five of them are built from the Weierstrass correction
//! `P(x_i) = f(x_i) / prod_{j != i} (x_i - x_j)`:
//!
//! * `wdk`  — `x_i - P(x_i)`;
//! * `pns3` — Weierstrass step against corrected neighbors `x_j - P(x_j)`;
//! * `pps3` — split denominator: the `j < i` factors subtract `P(x_i)`;
//! * `bss3` — `x_i - P(x_i) / (1 + sum_{j != i} P(x_j)/(x_i - x_j))`;
//! * `pns4` — as `bss3` with `x_i - P(x_j) - x_j` inside the sum;
//! * `sab3` — damped-Newton predictors `z_j = x_j - f/f' * 1/(1 + a*f/(1 + b*f))`
//!   feeding the Weierstrass-type corrector `x_i - f(x_i)/prod_{j != i}(x_i - z_j)`.
//!
//! The driver records every iterate and step norm, stops on step norm < tol,
//! iteration budget, or divergence, and never lets non-finite values leak
//! into recorded data: a non-finite component is frozen at its previous
//! value and the launch is marked `Diverged`; a step whose norm overflows is
//! dropped entirely, truncating the trajectory at the offending step.

use std::fmt;

use crate::problem::{Complex64, Problem};

/// Default stopping tolerance on the step norm.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Default iteration budget.
pub const DEFAULT_MAX_ITER: usize = 100;
/// Default iterate-modulus divergence threshold.
pub const DEFAULT_BLOWUP_CAP: f64 = 1e15;
/// Default duplicate-separation magnitude, relative to the problem's
/// initial radius (Cauchy bound).
pub const DEFAULT_JITTER_REL: f64 = 1e-8;

/// Identifier of one of the six simultaneous schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Wdk,
    Pns3,
    Pps3,
    Bss3,
    Pns4,
    Sab3,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Wdk,
        Method::Pns3,
        Method::Pps3,
        Method::Bss3,
        Method::Pns4,
        Method::Sab3,
    ];

    /// Canonical lowercase name used on the command line and in output files.
    pub fn name(self) -> &'static str {
        match self {
            Method::Wdk => "wdk",
            Method::Pns3 => "pns3",
            Method::Pps3 => "pps3",
            Method::Bss3 => "bss3",
            Method::Pns4 => "pns4",
            Method::Sab3 => "sab3",
        }
    }

    pub fn from_name(name: &str) -> Option<Method> {
        Method::ALL.iter().copied().find(|m| m.name() == name)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Solver parameters shared by all methods; `alpha` and `beta` are read only
/// by `sab3`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    pub alpha: f64,
    pub beta: f64,
    /// Stop when the full-vector step norm drops below this.
    pub tol: f64,
    /// Iteration budget.
    pub max_iter: usize,
    /// A component whose modulus exceeds this marks the launch diverged.
    pub blowup_cap: f64,
    /// Absolute separation applied to near-duplicate components before each
    /// step; `None` resolves to [`DEFAULT_JITTER_REL`] times the problem's
    /// initial radius.
    pub jitter: Option<f64>,
}

impl SolverConfig {
    pub fn new(method: Method) -> Self {
        SolverConfig {
            method,
            alpha: 0.0,
            beta: 0.0,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            blowup_cap: DEFAULT_BLOWUP_CAP,
            jitter: None,
        }
    }

    pub fn with_params(method: Method, alpha: f64, beta: f64) -> Self {
        SolverConfig { alpha, beta, ..SolverConfig::new(method) }
    }

    /// The duplicate-separation magnitude actually used against `p`.
    pub fn resolved_jitter(&self, p: &Problem) -> f64 {
        self.jitter.unwrap_or(DEFAULT_JITTER_REL * p.initial_radius())
    }
}

/// Terminal state of a launch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Step norm dropped below tol at iteration `at_iter`.
    Converged { at_iter: usize },
    /// Iteration budget exhausted without meeting tol or diverging.
    MaxIterReached,
    /// A component went non-finite or beyond the blowup cap at `at_iter`.
    Diverged { at_iter: usize },
}

impl Status {
    pub fn is_converged(self) -> bool {
        matches!(self, Status::Converged { .. })
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Converged { .. } => "converged",
            Status::MaxIterReached => "max_iter_reached",
            Status::Diverged { .. } => "diverged",
        }
    }
}

/// Full record of one launch: every iterate vector, every step norm, the
/// terminal status, and per-component convergence flags.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Iterate vectors `x^[h]`, `h = 0..=H`.
    pub iterates: Vec<Vec<Complex64>>,
    /// `s_h = ||x^[h+1] - x^[h]||_2` over all components jointly; length is
    /// `iterates.len() - 1` and every entry is finite.
    pub step_norms: Vec<f64>,
    pub status: Status,
    /// Whether each component's final recorded move was below tol (and the
    /// component finite).
    pub per_root_converged: Vec<bool>,
    /// Number of predictor singularities that fell back to the identity
    /// predictor (`sab3` only).
    pub predictor_fallbacks: usize,
}

impl Trajectory {
    pub fn final_iterate(&self) -> &[Complex64] {
        self.iterates.last().expect("trajectory holds at least x0")
    }

    /// Number of steps actually taken.
    pub fn iteration_count(&self) -> usize {
        self.step_norms.len()
    }
}

/// Result of a single vector step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub next: Vec<Complex64>,
    /// Predictor singularities encountered in this step (`sab3` only).
    pub predictor_fallbacks: usize,
    /// True when some component came out non-finite and was frozen at its
    /// previous value; the launch must be marked diverged.
    pub froze_component: bool,
}

fn is_finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Separates any pair of components closer than `jitter` by shifting the
/// later one along the +re axis. A zero jitter leaves duplicates in place
/// (their zero denominators then surface as divergence).
pub fn apply_jitter(x: &mut [Complex64], jitter: f64) {
    if jitter <= 0.0 {
        return;
    }
    // A shifted component can land on a third one, so sweep until clean
    // (bounded; each collision consumes one bump).
    for _ in 0..x.len() * x.len() {
        let mut bumped = false;
        for i in 0..x.len() {
            for j in (i + 1)..x.len() {
                if (x[i] - x[j]).norm() < jitter {
                    x[j] += Complex64::new(jitter, 0.0);
                    bumped = true;
                }
            }
        }
        if !bumped {
            return;
        }
    }
}

/// The Weierstrass correction `P(x_i) = f(x_i) / prod_{j != i} (x_i - x_j)`,
/// scaled by the leading coefficient so non-monic input behaves like its
/// monic rescaling. The empty product (n = 1) is 1. A vanishing denominator
/// yields a non-finite value, which the driver maps to `Diverged`.
pub fn weierstrass_correction(p: &Problem, x: &[Complex64], i: usize) -> Complex64 {
    let fi = p.eval(x[i]);
    let mut denom = p.monic_scale();
    for (j, &xj) in x.iter().enumerate() {
        if j != i {
            denom *= x[i] - xj;
        }
    }
    fi / denom
}

fn corrections(p: &Problem, x: &[Complex64]) -> Vec<Complex64> {
    (0..x.len()).map(|i| weierstrass_correction(p, x, i)).collect()
}

/// Weierstrass-type update with an arbitrary node vector in the denominator:
/// `x_i' = x_i - f(x_i) / (lc * prod_{j != i} (x_i - nodes_j))`. With
/// `nodes = x` this is exactly the WDK step; `sab3` passes its predictors and
/// `pns3` its corrected neighbors.
fn weierstrass_update(p: &Problem, x: &[Complex64], nodes: &[Complex64]) -> Vec<Complex64> {
    let lc = p.monic_scale();
    (0..x.len())
        .map(|i| {
            let fi = p.eval(x[i]);
            let mut denom = lc;
            for (j, &nj) in nodes.iter().enumerate() {
                if j != i {
                    denom *= x[i] - nj;
                }
            }
            x[i] - fi / denom
        })
        .collect()
}

fn pps3_step(p: &Problem, x: &[Complex64]) -> Vec<Complex64> {
    let w = corrections(p, x);
    let lc = p.monic_scale();
    (0..x.len())
        .map(|i| {
            let fi = p.eval(x[i]);
            let mut denom = lc;
            for j in 0..x.len() {
                if j < i {
                    denom *= x[i] - x[j] - w[i];
                } else if j > i {
                    denom *= x[i] - x[j];
                }
            }
            x[i] - fi / denom
        })
        .collect()
}

fn bss3_step(p: &Problem, x: &[Complex64]) -> Vec<Complex64> {
    let w = corrections(p, x);
    (0..x.len())
        .map(|i| {
            let mut sum = Complex64::new(0.0, 0.0);
            for j in 0..x.len() {
                if j != i {
                    sum += w[j] / (x[i] - x[j]);
                }
            }
            x[i] - w[i] / (Complex64::new(1.0, 0.0) + sum)
        })
        .collect()
}

fn pns4_step(p: &Problem, x: &[Complex64]) -> Vec<Complex64> {
    let w = corrections(p, x);
    (0..x.len())
        .map(|i| {
            let mut sum = Complex64::new(0.0, 0.0);
            for j in 0..x.len() {
                if j != i {
                    sum += w[j] / (x[i] - w[j] - x[j]);
                }
            }
            x[i] - w[i] / (Complex64::new(1.0, 0.0) + sum)
        })
        .collect()
}

/// Damped-Newton predictors: `z_j = x_j - (f/f') / (1 + alpha*f/(1 + beta*f))`.
/// Each of the three singular denominators (`f' = 0`, `1 + beta*f = 0`,
/// `1 + alpha*f/(1+beta*f) = 0`) makes that component fall back to the
/// identity predictor `z_j = x_j` and increments the fallback count. A zero
/// numerator (`f = 0`) gives `z_j = x_j` exactly through the regular path.
pub(crate) fn sab3_predictors(
    p: &Problem,
    alpha: f64,
    beta: f64,
    x: &[Complex64],
) -> (Vec<Complex64>, usize) {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut fallbacks = 0;
    let z = x
        .iter()
        .map(|&xj| {
            let (f, fp) = p.eval_with_derivative(xj);
            if fp == zero {
                fallbacks += 1;
                return xj;
            }
            let denom1 = one + beta * f;
            if denom1 == zero {
                fallbacks += 1;
                return xj;
            }
            let damp = one + alpha * f / denom1;
            if damp == zero {
                fallbacks += 1;
                return xj;
            }
            xj - (f / fp) / damp
        })
        .collect();
    (z, fallbacks)
}

/// One vector step of the configured method from `x` (all components updated
/// from the same input vector). Jitter is applied to a working copy first;
/// non-finite output components are frozen at their previous values and
/// reported via `froze_component`.
pub fn step(p: &Problem, cfg: &SolverConfig, x: &[Complex64]) -> StepOutcome {
    let mut work = x.to_vec();
    apply_jitter(&mut work, cfg.resolved_jitter(p));
    let (mut next, predictor_fallbacks) = match cfg.method {
        Method::Wdk => (weierstrass_update(p, &work, &work), 0),
        Method::Pns3 => {
            let w = corrections(p, &work);
            let nodes: Vec<Complex64> =
                work.iter().zip(&w).map(|(&xj, &wj)| xj - wj).collect();
            (weierstrass_update(p, &work, &nodes), 0)
        }
        Method::Pps3 => (pps3_step(p, &work), 0),
        Method::Bss3 => (bss3_step(p, &work), 0),
        Method::Pns4 => (pns4_step(p, &work), 0),
        Method::Sab3 => {
            let (z, fallbacks) = sab3_predictors(p, cfg.alpha, cfg.beta, &work);
            (weierstrass_update(p, &work, &z), fallbacks)
        }
    };
    let mut froze_component = false;
    for (nx, &prev) in next.iter_mut().zip(x.iter()) {
        if !is_finite(*nx) {
            *nx = prev;
            froze_component = true;
        }
    }
    StepOutcome { next, predictor_fallbacks, froze_component }
}

fn vec_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Iterates from `x0` until the step norm drops below tol, the budget is
/// exhausted, or the launch diverges. Records every iterate and step norm;
/// recorded step norms are always finite.
pub fn run(p: &Problem, cfg: &SolverConfig, x0: &[Complex64]) -> Trajectory {
    assert_eq!(x0.len(), p.root_count(), "x0 length must equal the problem root count");
    assert!(cfg.tol > 0.0, "tol must be positive");
    assert!(cfg.tol < cfg.blowup_cap, "tol must be below blowup_cap");
    assert!(cfg.max_iter >= 1, "max_iter must be at least 1");

    let mut iterates = vec![x0.to_vec()];
    let mut step_norms: Vec<f64> = Vec::new();
    let mut predictor_fallbacks = 0;
    let mut status = Status::MaxIterReached;

    for h in 0..cfg.max_iter {
        let current = iterates.last().expect("nonempty").clone();
        let out = step(p, cfg, &current);
        let s = vec_distance(&out.next, &current);
        if !s.is_finite() {
            // Finite components whose squared sum overflows: drop the step
            // entirely so recorded data stays finite.
            status = Status::Diverged { at_iter: h };
            break;
        }
        step_norms.push(s);
        iterates.push(out.next);
        predictor_fallbacks += out.predictor_fallbacks;
        let blown = iterates
            .last()
            .expect("nonempty")
            .iter()
            .any(|&z| !is_finite(z) || z.norm() > cfg.blowup_cap);
        if out.froze_component || blown {
            status = Status::Diverged { at_iter: h + 1 };
            break;
        }
        if s < cfg.tol {
            status = Status::Converged { at_iter: h + 1 };
            break;
        }
    }

    let n = x0.len();
    let per_root_converged = if iterates.len() >= 2 {
        let last = &iterates[iterates.len() - 1];
        let prev = &iterates[iterates.len() - 2];
        (0..n)
            .map(|i| (last[i] - prev[i]).norm() < cfg.tol && is_finite(last[i]))
            .collect()
    } else {
        vec![false; n]
    };

    Trajectory { iterates, step_norms, status, per_root_converged, predictor_fallbacks }
}
