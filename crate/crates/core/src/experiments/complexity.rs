//! Run-time measurements against the flop model, and the iteration map.

use super::config::ExperimentSpec;
use super::contour;
use super::phase;
use super::table::{ComplexityFit, ResultRow, ResultTable, Summary};
use super::{ExperimentError, RunOptions};

/// Least-squares fit of `time = a * flops + b * iterations` over the rows.
/// Returns `(a, b)`, or `None` when the system is singular.
pub fn fit_time_model(rows: &[&ResultRow]) -> Option<(f64, f64)> {
    let (mut ff, mut fk, mut kk, mut ft, mut kt) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for r in rows {
        let f = r.predicted_flops?;
        let k = r.mean_iterations;
        let t = r.mean_solve_s;
        ff += f * f;
        fk += f * k;
        kk += k * k;
        ft += f * t;
        kt += k * t;
    }
    let det = ff * kk - fk * fk;
    if det.abs() <= 1e-12 * ff * kk {
        return None;
    }
    Some(((ft * kk - kt * fk) / det, (ff * kt - fk * ft) / det))
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len()) as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Fits the per-iteration overhead `c` for one curve, fills
/// `predicted_cost = flops + c K` on its rows and reports the correlation
/// between the measured and predicted time maps.
pub fn fit_curve(rows: &mut [ResultRow], curve: &str) -> Option<ComplexityFit> {
    let selected: Vec<&ResultRow> = rows.iter().filter(|r| r.curve == curve).collect();
    let (a, b) = fit_time_model(&selected)?;
    let c = b / a;
    let mut measured = Vec::new();
    let mut predicted = Vec::new();
    for r in rows.iter_mut().filter(|r| r.curve == curve) {
        let cost = r.predicted_flops? + c * r.mean_iterations;
        r.predicted_cost = Some(cost);
        measured.push(r.mean_solve_s);
        predicted.push(cost);
    }
    Some(ComplexityFit {
        curve: curve.to_string(),
        seconds_per_flop: a,
        seconds_per_iteration: b,
        c,
        correlation: pearson(&measured, &predicted),
    })
}

/// A horizontal feature of the iteration map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationLine {
    pub rho: f64,
    /// Mean iterations on the line minus the mean of its two neighbours.
    pub contrast: f64,
}

/// Mean iterations per `rho` row, averaged over columns with
/// `delta >= min_delta`, and each interior row's contrast against its two
/// neighbouring rows.
pub fn row_contrasts(rows: &[&ResultRow], min_delta: f64) -> Vec<IterationLine> {
    let mut rhos: Vec<f64> = rows.iter().filter_map(|r| r.rho).collect();
    rhos.sort_by(f64::total_cmp);
    rhos.dedup();
    let means: Vec<f64> = rhos
        .iter()
        .map(|&rho| {
            let ks: Vec<f64> = rows
                .iter()
                .filter(|r| r.rho == Some(rho) && r.delta.is_some_and(|d| d >= min_delta))
                .map(|r| r.mean_iterations)
                .collect();
            ks.iter().sum::<f64>() / ks.len().max(1) as f64
        })
        .collect();
    (1..rhos.len().saturating_sub(1))
        .map(|i| IterationLine {
            rho: rhos[i],
            contrast: means[i] - 0.5 * (means[i - 1] + means[i + 1]),
        })
        .collect()
}

/// The row of most elevated iteration count, if any row stands above its
/// neighbours.
pub fn iteration_ridge(rows: &[&ResultRow], min_delta: f64) -> Option<IterationLine> {
    row_contrasts(rows, min_delta)
        .into_iter()
        .filter(|l| l.contrast > 0.0)
        .max_by(|a, b| a.contrast.total_cmp(&b.contrast))
}

/// The row of most depressed iteration count, if any row sits below its
/// neighbours.
pub fn iteration_trough(rows: &[&ResultRow], min_delta: f64) -> Option<IterationLine> {
    row_contrasts(rows, min_delta)
        .into_iter()
        .filter(|l| l.contrast < 0.0)
        .min_by(|a, b| a.contrast.total_cmp(&b.contrast))
}

pub fn run_complexity(spec: &ExperimentSpec, options: &RunOptions) -> Result<ResultTable, ExperimentError> {
    spec.validate()?;
    let mut rows = phase::sweep(spec, options)?;
    let complexity = spec
        .curve
        .iter()
        .filter_map(|c| fit_curve(&mut rows, &c.name))
        .collect();
    let summary = Summary {
        contours: contour::transition_contours(&rows),
        complexity,
    };
    Ok(ResultTable::new(spec.clone(), rows, summary))
}
