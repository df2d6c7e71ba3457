//! Artifact serialization: CSV tables, JSON summaries, and grayscale
//! heatmap images.
//!
//! Numbers are written in Rust's shortest round-trip decimal form, so
//! parsing an emitted CSV and re-emitting it reproduces the file byte for
//! byte; the integration tests pin that invariant for every table kind.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use image::{GrayImage, Luma};
use num_complex::Complex64;
use serde_json::{json, Value};
use steplog::metrics::RunMetrics;
use steplog::problem::Problem;
use steplog::profile::{AggregatedProfile, ScorePair};
use steplog::solver::{Status, Trajectory};
use steplog::tuner::{ScanResult, Selection};

/// Shortest decimal representation that parses back to exactly `x`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn parse_f64(field: &str, what: &str) -> Result<f64> {
    field.parse::<f64>().map_err(|_| anyhow!("invalid {what} value {field:?}"))
}

fn parse_usize(field: &str, what: &str) -> Result<usize> {
    field.parse::<usize>().map_err(|_| anyhow!("invalid {what} value {field:?}"))
}

// ---------------------------------------------------------------------------
// Trajectory CSV
// ---------------------------------------------------------------------------

/// One parsed trajectory row.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub h: usize,
    /// Interleaved re/im coordinates in column order.
    pub coords: Vec<f64>,
    /// Empty on the `h = 0` row (no step leads to the starts).
    pub step_norm: Option<f64>,
    pub residual_norm: f64,
}

/// A parsed trajectory table: the root column count and the rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub n_roots: usize,
    pub rows: Vec<TrajectoryRow>,
}

/// Renders a trajectory. `order[k]` names the component shown in the
/// `root{k+1}` columns, so reference-matched output can list roots in
/// reference order.
pub fn trajectory_csv(p: &Problem, traj: &Trajectory, order: &[usize]) -> String {
    let n = p.root_count();
    assert_eq!(order.len(), n, "column order must cover every root");
    let mut out = String::from("h");
    for k in 1..=n {
        out.push_str(&format!(",root{k}_re,root{k}_im"));
    }
    out.push_str(",step_norm,residual_norm\n");
    for (h, iterate) in traj.iterates.iter().enumerate() {
        out.push_str(&h.to_string());
        for &idx in order {
            let x = iterate[idx];
            out.push(',');
            out.push_str(&fmt_f64(x.re));
            out.push(',');
            out.push_str(&fmt_f64(x.im));
        }
        out.push(',');
        if h > 0 {
            out.push_str(&fmt_f64(traj.step_norms[h - 1]));
        }
        out.push(',');
        out.push_str(&fmt_f64(p.residual_norm(iterate)));
        out.push('\n');
    }
    out
}

/// Parses a trajectory CSV produced by [`trajectory_csv`].
pub fn parse_trajectory_csv(text: &str) -> Result<TrajectoryTable> {
    let mut lines = text.lines();
    let header = lines.next().context("empty trajectory CSV")?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 4 || cols[0] != "h" || cols[cols.len() - 2] != "step_norm" {
        bail!("unrecognized trajectory header {header:?}");
    }
    let n_roots = (cols.len() - 3) / 2;
    if cols.len() != 3 + 2 * n_roots {
        bail!("trajectory header has a dangling column: {header:?}");
    }
    let mut rows = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            bail!("trajectory row has {} fields, expected {}", fields.len(), cols.len());
        }
        let coords = fields[1..1 + 2 * n_roots]
            .iter()
            .map(|f| parse_f64(f, "coordinate"))
            .collect::<Result<Vec<f64>>>()?;
        let step_field = fields[cols.len() - 2];
        let step_norm = if step_field.is_empty() {
            None
        } else {
            Some(parse_f64(step_field, "step_norm")?)
        };
        rows.push(TrajectoryRow {
            h: parse_usize(fields[0], "h")?,
            coords,
            step_norm,
            residual_norm: parse_f64(fields[cols.len() - 1], "residual_norm")?,
        });
    }
    Ok(TrajectoryTable { n_roots, rows })
}

/// Re-renders a parsed trajectory table (round-trip counterpart).
pub fn trajectory_table_csv(table: &TrajectoryTable) -> String {
    let mut out = String::from("h");
    for k in 1..=table.n_roots {
        out.push_str(&format!(",root{k}_re,root{k}_im"));
    }
    out.push_str(",step_norm,residual_norm\n");
    for row in &table.rows {
        out.push_str(&row.h.to_string());
        for value in &row.coords {
            out.push(',');
            out.push_str(&fmt_f64(*value));
        }
        out.push(',');
        if let Some(s) = row.step_norm {
            out.push_str(&fmt_f64(s));
        }
        out.push(',');
        out.push_str(&fmt_f64(row.residual_norm));
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Profile CSV
// ---------------------------------------------------------------------------

/// Renders an aggregated contraction profile.
pub fn profile_csv(agg: &AggregatedProfile) -> String {
    let mut out = String::from("t_end,mean,std,count\n");
    for i in 0..agg.t_end_axis.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            agg.t_end_axis[i],
            fmt_f64(agg.mean[i]),
            fmt_f64(agg.std[i]),
            agg.count_at[i]
        ));
    }
    out
}

/// Parses a profile CSV back into an [`AggregatedProfile`].
pub fn parse_profile_csv(text: &str) -> Result<AggregatedProfile> {
    let mut lines = text.lines();
    let header = lines.next().context("empty profile CSV")?;
    if header != "t_end,mean,std,count" {
        bail!("unrecognized profile header {header:?}");
    }
    let mut agg = AggregatedProfile {
        t_end_axis: Vec::new(),
        mean: Vec::new(),
        std: Vec::new(),
        count_at: Vec::new(),
    };
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            bail!("profile row has {} fields, expected 4", fields.len());
        }
        agg.t_end_axis.push(parse_usize(fields[0], "t_end")?);
        agg.mean.push(parse_f64(fields[1], "mean")?);
        agg.std.push(parse_f64(fields[2], "std")?);
        agg.count_at.push(parse_usize(fields[3], "count")?);
    }
    Ok(agg)
}

// ---------------------------------------------------------------------------
// Heatmap CSV
// ---------------------------------------------------------------------------

/// A parsed heatmap: alpha axis (rows), beta axis (columns), and row-major
/// values.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapTable {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

/// Renders a score/convergence matrix: header row of beta values, header
/// column of alpha values (ascending both ways).
pub fn heatmap_csv(alphas: &[f64], betas: &[f64], value_at: impl Fn(usize, usize) -> f64) -> String {
    let mut out = String::new();
    for &beta in betas {
        out.push(',');
        out.push_str(&fmt_f64(beta));
    }
    out.push('\n');
    for (i, &alpha) in alphas.iter().enumerate() {
        out.push_str(&fmt_f64(alpha));
        for j in 0..betas.len() {
            out.push(',');
            out.push_str(&fmt_f64(value_at(i, j)));
        }
        out.push('\n');
    }
    out
}

/// Parses a heatmap CSV produced by [`heatmap_csv`].
pub fn parse_heatmap_csv(text: &str) -> Result<HeatmapTable> {
    let mut lines = text.lines();
    let header = lines.next().context("empty heatmap CSV")?;
    let mut header_fields = header.split(',');
    let corner = header_fields.next().context("missing heatmap header")?;
    if !corner.is_empty() {
        bail!("heatmap header must start with an empty corner cell, got {corner:?}");
    }
    let betas = header_fields
        .map(|f| parse_f64(f, "beta"))
        .collect::<Result<Vec<f64>>>()?;
    let mut alphas = Vec::new();
    let mut values = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != betas.len() + 1 {
            bail!("heatmap row has {} fields, expected {}", fields.len(), betas.len() + 1);
        }
        alphas.push(parse_f64(fields[0], "alpha")?);
        values.push(
            fields[1..]
                .iter()
                .map(|f| parse_f64(f, "score"))
                .collect::<Result<Vec<f64>>>()?,
        );
    }
    Ok(HeatmapTable { alphas, betas, values })
}

/// Re-renders a parsed heatmap table (round-trip counterpart).
pub fn heatmap_table_csv(table: &HeatmapTable) -> String {
    heatmap_csv(&table.alphas, &table.betas, |i, j| table.values[i][j])
}

// ---------------------------------------------------------------------------
// Bench CSV and text table
// ---------------------------------------------------------------------------

/// One comparison line as written to the bench table.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub method: String,
    pub max_error: f64,
    pub iterations: usize,
    pub emp_order: Option<f64>,
    pub convergence_pct: f64,
    pub wall_time_s: f64,
}

impl BenchRow {
    /// Flattens aggregated metrics into a table line. `max_error` is the
    /// largest per-root error when reference roots exist, else the final
    /// residual norm.
    pub fn from_metrics(method: &str, metrics: &RunMetrics) -> Self {
        let max_error = metrics
            .per_root_abs_error
            .iter()
            .cloned()
            .fold(f64::NAN, f64::max);
        let max_error = if max_error.is_nan() { metrics.residual } else { max_error };
        BenchRow {
            method: method.to_string(),
            max_error,
            iterations: metrics.iterations,
            emp_order: metrics.emp_order,
            convergence_pct: metrics.convergence_pct,
            wall_time_s: metrics.wall_time_seconds,
        }
    }
}

/// Renders the comparison CSV.
pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("method,max_error,iterations,emp_order,convergence_pct,wall_time_s\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.method,
            fmt_f64(row.max_error),
            row.iterations,
            row.emp_order.map(fmt_f64).unwrap_or_default(),
            fmt_f64(row.convergence_pct),
            fmt_f64(row.wall_time_s)
        ));
    }
    out
}

/// Parses a bench CSV produced by [`bench_csv`].
pub fn parse_bench_csv(text: &str) -> Result<Vec<BenchRow>> {
    let mut lines = text.lines();
    let header = lines.next().context("empty bench CSV")?;
    if header != "method,max_error,iterations,emp_order,convergence_pct,wall_time_s" {
        bail!("unrecognized bench header {header:?}");
    }
    let mut rows = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            bail!("bench row has {} fields, expected 6", fields.len());
        }
        rows.push(BenchRow {
            method: fields[0].to_string(),
            max_error: parse_f64(fields[1], "max_error")?,
            iterations: parse_usize(fields[2], "iterations")?,
            emp_order: if fields[3].is_empty() {
                None
            } else {
                Some(parse_f64(fields[3], "emp_order")?)
            },
            convergence_pct: parse_f64(fields[4], "convergence_pct")?,
            wall_time_s: parse_f64(fields[5], "wall_time_s")?,
        });
    }
    Ok(rows)
}

/// Renders the aligned plain-text comparison table.
pub fn bench_text(rows: &[BenchRow]) -> String {
    let headers = ["method", "max_error", "iterations", "emp_order", "convergence_pct", "wall_time_s"];
    let mut cells: Vec<[String; 6]> = vec![headers.map(str::to_string)];
    for row in rows {
        cells.push([
            row.method.clone(),
            fmt_f64(row.max_error),
            row.iterations.to_string(),
            row.emp_order.map(fmt_f64).unwrap_or_else(|| "-".to_string()),
            fmt_f64(row.convergence_pct),
            fmt_f64(row.wall_time_s),
        ]);
    }
    let mut widths = [0usize; 6];
    for row in &cells {
        for (w, cell) in widths.iter_mut().zip(row.iter()) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    for row in &cells {
        let mut line = String::new();
        for (k, cell) in row.iter().enumerate() {
            if k > 0 {
                line.push_str("  ");
            }
            if k == 0 {
                line.push_str(&format!("{cell:<width$}", width = widths[k]));
            } else {
                line.push_str(&format!("{cell:>width$}", width = widths[k]));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// JSON summaries
// ---------------------------------------------------------------------------

fn status_json(status: &Status) -> (&'static str, Value) {
    match status {
        Status::Converged { at_iter } => ("converged", json!(at_iter)),
        Status::Diverged { at_iter } => ("diverged", json!(at_iter)),
        Status::MaxIterReached => ("max_iter_reached", Value::Null),
    }
}

/// The solve summary: run identity, status, and the RunMetrics fields
/// under `metrics` with their exact names.
pub fn run_summary_json(
    label: &str,
    method: &str,
    alpha: f64,
    beta: f64,
    status: &Status,
    metrics: &RunMetrics,
) -> Value {
    let (status_name, at_iter) = status_json(status);
    json!({
        "problem": label,
        "method": method,
        "alpha": alpha,
        "beta": beta,
        "status": status_name,
        "at_iter": at_iter,
        "metrics": {
            "residual": metrics.residual,
            "iterations": metrics.iterations,
            "emp_order": metrics.emp_order,
            "per_root_abs_error": metrics.per_root_abs_error,
            "convergence_pct": metrics.convergence_pct,
            "wall_time_seconds": metrics.wall_time_seconds,
        },
    })
}

/// The profile summary: cell identity, launch bookkeeping, and the
/// ScorePair fields under `score` with their exact names.
pub fn profile_summary_json(
    label: &str,
    alpha: f64,
    beta: f64,
    launches: usize,
    scorable: usize,
    convergence_pct: f64,
    score: &ScorePair,
) -> Value {
    json!({
        "problem": label,
        "alpha": alpha,
        "beta": beta,
        "launches": launches,
        "scorable": scorable,
        "convergence_pct": convergence_pct,
        "score": {
            "s_min": score.s_min,
            "s_mom": score.s_mom,
            "y_min": score.y_min,
            "t_min": score.t_min,
            "m0": score.m0,
            "t_bar": score.t_bar,
        },
    })
}

/// The scan selection summary.
pub fn selection_json(result: &ScanResult) -> Value {
    let Selection { alpha_star, beta_star, row, col } = result.selected;
    json!({
        "alpha_star": alpha_star,
        "beta_star": beta_star,
        "cell": { "row": row, "col": col },
        "scores": {
            "s_min": result.s_min_matrix.get(row, col),
            "s_mom": result.s_mom_matrix.get(row, col),
        },
        "degenerate_cells": result
            .degenerate_cells
            .iter()
            .map(|&(i, j)| json!([i, j]))
            .collect::<Vec<Value>>(),
    })
}

/// Writes a JSON value with a trailing newline.
pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Writes a text artifact.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

// ---------------------------------------------------------------------------
// Grayscale images
// ---------------------------------------------------------------------------

/// Min-max normalization bounds of an emitted image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageBounds {
    pub min: f64,
    pub max: f64,
}

/// Writes a matrix as an 8-bit grayscale PNG (rows = alpha axis top to
/// bottom, columns = beta axis left to right), min-max normalized so the
/// largest score is white. A constant matrix renders black.
pub fn write_gray_png(
    path: &Path,
    rows: usize,
    cols: usize,
    value_at: impl Fn(usize, usize) -> f64,
) -> Result<ImageBounds> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for i in 0..rows {
        for j in 0..cols {
            let v = value_at(i, j);
            min = min.min(v);
            max = max.max(v);
        }
    }
    let span = max - min;
    let mut img = GrayImage::new(cols as u32, rows as u32);
    for i in 0..rows {
        for j in 0..cols {
            let level = if span > 0.0 {
                ((value_at(i, j) - min) / span * 255.0).round() as u8
            } else {
                0
            };
            img.put_pixel(j as u32, i as u32, Luma([level]));
        }
    }
    img.save(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(ImageBounds { min, max })
}

/// Computes the column order for reference-matched output: when references
/// exist, `order[k]` is the computed component matched to reference `k`;
/// otherwise the identity (initial-guess order).
pub fn reference_column_order(p: &Problem, final_iterate: &[Complex64]) -> Vec<usize> {
    let n = final_iterate.len();
    match p.reference_roots() {
        Some(refs) => {
            let report = steplog::metrics::match_roots(final_iterate, refs)
                .expect("reference count equals root count");
            let mut order = vec![0usize; n];
            for (computed, &reference) in report.assignment.iter().enumerate() {
                order[reference] = computed;
            }
            order
        }
        None => (0..n).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_formatting_is_shortest_round_trip() {
        for &x in &[0.0, -0.0, 1.0, 0.1, 1e-12, 6.385, 0.4615, 1e15, -2.2250738585072014e-308] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_f64(-0.0), "-0");
    }

    #[test]
    fn bench_rows_round_trip_including_absent_orders() {
        let rows = vec![
            BenchRow {
                method: "wdk".into(),
                max_error: 1.5e-13,
                iterations: 9,
                emp_order: Some(1.97),
                convergence_pct: 100.0,
                wall_time_s: 0.000123,
            },
            BenchRow {
                method: "sab3".into(),
                max_error: 0.25,
                iterations: 100,
                emp_order: None,
                convergence_pct: 0.0,
                wall_time_s: 0.5,
            },
        ];
        let text = bench_csv(&rows);
        let parsed = parse_bench_csv(&text).expect("parses");
        assert_eq!(parsed, rows);
        assert_eq!(bench_csv(&parsed), text);
    }

    #[test]
    fn bench_text_is_aligned_and_marks_missing_orders() {
        let rows = vec![BenchRow {
            method: "pns3".into(),
            max_error: 1e-9,
            iterations: 12,
            emp_order: None,
            convergence_pct: 95.0,
            wall_time_s: 0.25,
        }];
        let text = bench_text(&rows);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("method"));
        assert!(lines[1].contains(" -"), "missing order marker: {}", lines[1]);
        let col = lines[0].find("iterations").unwrap();
        assert_eq!(&lines[1][col + "iterations".len() - 2..col + "iterations".len()], "12");
    }

    #[test]
    fn heatmaps_round_trip() {
        let alphas = [-1.0, 0.5];
        let betas = [0.0, 2.0, 4.0];
        let text = heatmap_csv(&alphas, &betas, |i, j| (i as f64) * 10.0 + (j as f64) * 0.1);
        let parsed = parse_heatmap_csv(&text).expect("parses");
        assert_eq!(parsed.alphas, alphas);
        assert_eq!(parsed.betas, betas);
        assert_eq!(parsed.values[1][2], 10.2);
        assert_eq!(heatmap_table_csv(&parsed), text);
    }

    #[test]
    fn profile_csv_round_trips() {
        let agg = AggregatedProfile {
            t_end_axis: vec![10, 11, 12],
            mean: vec![-0.5, -0.25, 0.125],
            std: vec![0.0, 0.1, 0.2],
            count_at: vec![3, 2, 1],
        };
        let text = profile_csv(&agg);
        let parsed = parse_profile_csv(&text).expect("parses");
        assert_eq!(parsed, agg);
        assert_eq!(profile_csv(&parsed), text);
    }

    #[test]
    fn summary_json_uses_exact_field_names() {
        let metrics = RunMetrics {
            residual: 1e-13,
            iterations: 9,
            emp_order: Some(2.9),
            per_root_abs_error: vec![1e-14, 2e-14],
            convergence_pct: 100.0,
            wall_time_seconds: 0.001,
        };
        let value = run_summary_json(
            "wdk_demo",
            "wdk",
            0.0,
            0.0,
            &Status::Converged { at_iter: 9 },
            &metrics,
        );
        let m = &value["metrics"];
        for key in [
            "residual",
            "iterations",
            "emp_order",
            "per_root_abs_error",
            "convergence_pct",
            "wall_time_seconds",
        ] {
            assert!(!m[key].is_null() || key == "emp_order", "missing {key}");
        }
        assert_eq!(value["status"], "converged");
        assert_eq!(value["at_iter"], 9);

        let score = ScorePair {
            s_min: 0.5,
            s_mom: 0.6,
            y_min: -1.0,
            t_min: 2,
            m0: 3.0,
            t_bar: 5.0,
        };
        let value = profile_summary_json("grn7", 13.15, 0.4615, 50, 42, 100.0, &score);
        let s = &value["score"];
        for key in ["s_min", "s_mom", "y_min", "t_min", "m0", "t_bar"] {
            assert!(s[key].is_number(), "missing {key}");
        }
    }
}
