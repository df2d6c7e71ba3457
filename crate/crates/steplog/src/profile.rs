//! Step-log contraction profiling.
//!
//! A solver trajectory records one step norm per iteration. This module
//! turns those norms into a contraction trace (log ratios of consecutive
//! norms), smooths the trace with a sliding window, aggregates windowed
//! profiles across an ensemble of launches, and condenses the aggregate
//! into two scalar scores that reward early, deep contraction.

use crate::solver::Trajectory;
use std::fmt;

/// Default sliding-window length.
pub const DEFAULT_WINDOW: usize = 10;

/// Default log-ratio safeguard: one unit in the last place of 1.0.
/// A much smaller floor would let fully converged tails (step norms that
/// round to zero) manufacture enormous spurious log ratios.
pub const DEFAULT_EPSILON: f64 = f64::EPSILON;

/// Configuration for trace and profile computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilingConfig {
    /// Sliding-window length `W >= 1`.
    pub window: usize,
    /// Additive safeguard inside the log ratio, `epsilon > 0`.
    pub epsilon: f64,
}

impl Default for ProfilingConfig {
    fn default() -> Self {
        ProfilingConfig { window: DEFAULT_WINDOW, epsilon: DEFAULT_EPSILON }
    }
}

impl ProfilingConfig {
    /// Builds a validated configuration.
    pub fn new(window: usize, epsilon: f64) -> Result<Self, ProfileError> {
        if window == 0 {
            return Err(ProfileError::ZeroWindow);
        }
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(ProfileError::InvalidEpsilon(epsilon));
        }
        Ok(ProfilingConfig { window, epsilon })
    }
}

/// Errors from profile construction.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileError {
    /// The window length must be at least 1.
    ZeroWindow,
    /// The safeguard must be a finite positive number.
    InvalidEpsilon(f64),
    /// The contraction trace has fewer entries than the window.
    TraceShorterThanWindow { len: usize, window: usize },
}

impl fmt::Display for ProfileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileError::ZeroWindow => write!(f, "window length must be at least 1"),
            ProfileError::InvalidEpsilon(eps) => {
                write!(f, "epsilon must be finite and positive, got {eps}")
            }
            ProfileError::TraceShorterThanWindow { len, window } => {
                write!(f, "trace shorter than window: {len} entries for window {window}")
            }
        }
    }
}

impl std::error::Error for ProfileError {}

/// Log ratios of consecutive step norms: `g[h] = ln((s[h+1]+eps)/(s[h]+eps))`.
/// Negative entries indicate contraction.
#[derive(Debug, Clone, PartialEq)]
pub struct StepLogTrace {
    /// The trace; one entry shorter than the step-norm list.
    pub g: Vec<f64>,
    /// Set when fewer than two step norms were supplied, which leaves the
    /// trace empty.
    pub too_short: bool,
}

/// Sliding-window means of a contraction trace. The window ending at trace
/// position `W - 1 + k` is reported at `t_end = k + W` (1-based window-end
/// index), so the earliest window sits at `t_end = W >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionProfile {
    /// `values[k]` is the mean of `g[k..k + window]`.
    pub values: Vec<f64>,
    /// Window length the profile was computed with.
    pub window: usize,
}

impl ContractionProfile {
    /// 1-based window-end index for entry `k`.
    pub fn t_end(&self, k: usize) -> usize {
        k + self.window
    }

    /// The full `t_end` axis, aligned with `values`.
    pub fn t_end_axis(&self) -> Vec<usize> {
        (0..self.values.len()).map(|k| self.t_end(k)).collect()
    }
}

/// Elementwise ensemble statistics over windowed profiles. Launches that
/// stopped early contribute only to the positions they reached, so `count_at`
/// can decrease along the axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedProfile {
    /// 1-based window-end indices.
    pub t_end_axis: Vec<usize>,
    /// Ensemble mean at each position, over the launches that reached it.
    pub mean: Vec<f64>,
    /// Population standard deviation at each position.
    pub std: Vec<f64>,
    /// Number of launches contributing at each position.
    pub count_at: Vec<usize>,
}

/// The two profile scores and their constituents. Both scores are
/// nonnegative by construction: the negative-part operator `max(0, -u)`
/// clips positive (non-contracting) profile values to zero, so a profile
/// whose mean never dips below zero scores exactly zero on both.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScorePair {
    /// `max(0, -y_min / t_min)`: depth of the deepest dip over its time.
    pub s_min: f64,
    /// `m0 / t_bar`: negative mass over its centroid time; 0 when `m0 = 0`.
    pub s_mom: f64,
    /// Minimum of the aggregated mean.
    pub y_min: f64,
    /// `t_end` of the earliest minimum; at least 1.
    pub t_min: usize,
    /// Total negative mass `sum(max(0, -mean))`.
    pub m0: f64,
    /// Negative-mass centroid time; 0 when `m0 = 0`.
    pub t_bar: f64,
}

/// Computes the step-log contraction trace of a step-norm sequence.
///
/// Requires every entry to be finite and nonnegative (solver trajectories
/// guarantee this). Fewer than two entries produce an empty trace with
/// `too_short` set.
pub fn steplog_trace(step_norms: &[f64], cfg: &ProfilingConfig) -> StepLogTrace {
    assert!(
        step_norms.iter().all(|s| s.is_finite() && *s >= 0.0),
        "step norms must be finite and nonnegative"
    );
    if step_norms.len() < 2 {
        log::warn!(
            "step-norm sequence of length {} is too short for a contraction trace",
            step_norms.len()
        );
        return StepLogTrace { g: Vec::new(), too_short: true };
    }
    let eps = cfg.epsilon;
    let g = step_norms
        .windows(2)
        .map(|w| ((w[1] + eps) / (w[0] + eps)).ln())
        .collect();
    StepLogTrace { g, too_short: false }
}

/// Convenience wrapper: trace of a trajectory's recorded step norms.
pub fn trajectory_trace(traj: &Trajectory, cfg: &ProfilingConfig) -> StepLogTrace {
    steplog_trace(&traj.step_norms, cfg)
}

/// Computes the sliding-window contraction profile of a trace.
///
/// `values[k]` is the mean of the `window` trace entries ending at position
/// `window - 1 + k`; the profile has `len(g) - window + 1` entries. Traces
/// shorter than the window are rejected.
pub fn windowed_profile(
    trace: &StepLogTrace,
    cfg: &ProfilingConfig,
) -> Result<ContractionProfile, ProfileError> {
    let w = cfg.window;
    if w == 0 {
        return Err(ProfileError::ZeroWindow);
    }
    if trace.g.len() < w {
        return Err(ProfileError::TraceShorterThanWindow { len: trace.g.len(), window: w });
    }
    // Each window is summed afresh (no running-sum shortcut) so the result
    // is bit-identical to the textbook double loop.
    let values = trace
        .g
        .windows(w)
        .map(|chunk| chunk.iter().sum::<f64>() / w as f64)
        .collect();
    Ok(ContractionProfile { values, window: w })
}

/// Aggregates an ensemble of profiles elementwise.
///
/// Profiles may have unequal lengths (launches that stop early yield shorter
/// profiles); each position is averaged over the launches that reached it,
/// in launch-index order, so the reduction is bit-reproducible. All profiles
/// must share one window length, and at least one profile is required.
pub fn aggregate(profiles: &[ContractionProfile]) -> AggregatedProfile {
    assert!(!profiles.is_empty(), "aggregate requires at least one profile");
    let window = profiles[0].window;
    assert!(
        profiles.iter().all(|p| p.window == window),
        "all profiles must share the same window length"
    );
    let max_len = profiles.iter().map(|p| p.values.len()).max().unwrap_or(0);

    let mut t_end_axis = Vec::with_capacity(max_len);
    let mut mean = Vec::with_capacity(max_len);
    let mut std = Vec::with_capacity(max_len);
    let mut count_at = Vec::with_capacity(max_len);

    for k in 0..max_len {
        let mut sum = 0.0;
        let mut count = 0usize;
        for p in profiles {
            if let Some(&v) = p.values.get(k) {
                sum += v;
                count += 1;
            }
        }
        let m = sum / count as f64;
        let mut ssq = 0.0;
        for p in profiles {
            if let Some(&v) = p.values.get(k) {
                ssq += (v - m) * (v - m);
            }
        }
        t_end_axis.push(k + window);
        mean.push(m);
        std.push((ssq / count as f64).sqrt());
        count_at.push(count);
    }

    AggregatedProfile { t_end_axis, mean, std, count_at }
}

/// Scores an aggregated profile.
///
/// Only the ensemble mean is scored; the dispersion band is descriptive.
/// `s_min` rewards a single early, deep dip; `s_mom` rewards total
/// contraction mass concentrated early. Both are zero exactly when the mean
/// never goes negative.
pub fn score(agg: &AggregatedProfile) -> ScorePair {
    assert!(!agg.mean.is_empty(), "score requires a nonempty aggregate");

    let mut y_min = agg.mean[0];
    let mut t_min = agg.t_end_axis[0];
    for (k, &m) in agg.mean.iter().enumerate().skip(1) {
        if m < y_min {
            y_min = m;
            t_min = agg.t_end_axis[k];
        }
    }
    let s_min = (-y_min / t_min as f64).max(0.0);

    let mut m0 = 0.0;
    let mut weighted = 0.0;
    for (k, &m) in agg.mean.iter().enumerate() {
        let neg = (-m).max(0.0);
        m0 += neg;
        weighted += agg.t_end_axis[k] as f64 * neg;
    }
    let (t_bar, s_mom) = if m0 == 0.0 { (0.0, 0.0) } else { (weighted / m0, m0 / (weighted / m0)) };

    ScorePair { s_min, s_mom, y_min, t_min, m0, t_bar }
}
