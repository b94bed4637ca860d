//! Noiseless recovery trials over an undersampling / sparsity grid.
//!
//! `delta = M / N` and `rho = S / M`, with `M = round(delta N)` and
//! `S = max(1, round(rho M))`.

use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;

use super::config::{Coefficients, CurveSpec, ExperimentSpec};
use super::contour;
use super::rng::{stream, Domain};
use super::table::{ResultRow, ResultTable, Summary, FORMAT_VERSION};
use super::{progress, ExperimentError, RunOptions};
use crate::baseband::qpsk_symbol;
use crate::gold::GoldDictionary;
use crate::pursuit::{subspace_pursuit, ComplexityModel, PursuitOptions, PursuitProblem, ReceiverMatrix};
use crate::sampling::build_operator_with_rows;

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub delta: f64,
    pub rho: f64,
    pub m_rows: usize,
    pub sparsity: usize,
}

/// Grid points ordered by `delta`, then ascending `rho`.
pub fn cells(spec: &ExperimentSpec) -> Vec<Cell> {
    let n = spec.n();
    let mut out = Vec::new();
    for delta in spec.grid.delta.values() {
        let m_rows = ((delta * n as f64).round() as usize).clamp(1, n);
        for rho in spec.grid.rho.values() {
            let sparsity = ((rho * m_rows as f64).round() as usize).max(1);
            out.push(Cell {
                delta,
                rho,
                m_rows,
                sparsity,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TrialOutcome {
    pub success: bool,
    pub relative_error: f64,
    pub iterations: usize,
    pub solve_s: f64,
    pub predicted_flops: f64,
}

/// Sparsity handed to the reconstruction for `cell`, at most `M`.
pub fn sparsity_fed(curve: &CurveSpec, cell: &Cell) -> usize {
    (cell.sparsity * curve.sparsity_multiplier).min(cell.m_rows)
}

/// One noiseless trial. Random operators are redrawn for every trial.
pub fn trial<R: Rng + ?Sized>(
    dictionary: &GoldDictionary,
    curve: &CurveSpec,
    cell: &Cell,
    spec: &ExperimentSpec,
    rng: &mut R,
) -> Result<TrialOutcome, ExperimentError> {
    let n = dictionary.len();
    let op = build_operator_with_rows(curve.operator, n, cell.m_rows, rng)?;
    let support = crate::baseband::random_support(rng, n, cell.sparsity);
    let mut alpha = vec![Complex64::default(); n];
    for &j in &support {
        alpha[j] = match spec.phase.coefficients {
            Coefficients::Sign => Complex64::new(if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0),
            Coefficients::Qpsk => qpsk_symbol(rng.random_range(0..2), rng.random_range(0..2)),
        };
    }
    let x = dictionary.synthesize(&alpha);
    let y = op.apply(&x)?;
    let a = ReceiverMatrix::new(dictionary, &op, None);
    let fed = sparsity_fed(curve, cell);
    let start = Instant::now();
    let result = subspace_pursuit(
        &PursuitProblem {
            a: &a,
            y: &y,
            sparsity: fed,
        },
        &PursuitOptions {
            init: spec.init,
            max_iterations: None,
        },
    )?;
    let solve_s = start.elapsed().as_secs_f64();
    let err: f64 = alpha.iter().zip(&result.alpha_hat).map(|(a, b)| (a - b).norm_sqr()).sum();
    let norm: f64 = alpha.iter().map(|a| a.norm_sqr()).sum();
    let relative_error = err / norm;
    let model = ComplexityModel::new(result.iterations as u64, fed as u64, cell.m_rows as u64, n as u64);
    Ok(TrialOutcome {
        success: relative_error < spec.phase.success_threshold,
        relative_error,
        iterations: result.iterations,
        solve_s,
        predicted_flops: model.closed_form() as f64,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct CellTally {
    trials: u64,
    successes: u64,
    iterations: u64,
    solve_s: f64,
    flops: f64,
}

impl CellTally {
    fn rate(&self) -> f64 {
        self.successes as f64 / self.trials.max(1) as f64
    }
}

/// Success surface change between consecutive batch estimates.
fn surface_mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len().max(1) as f64
}

/// Runs every curve over the grid and returns one row per (curve, cell).
pub fn sweep(spec: &ExperimentSpec, options: &RunOptions) -> Result<Vec<ResultRow>, ExperimentError> {
    let seed = spec.seed()?;
    let dictionary = GoldDictionary::new(spec.m)?;
    let n = spec.n();
    let grid = cells(spec);
    let settings = &spec.phase;
    let mut rows = Vec::new();
    for (ci, curve) in spec.curve.iter().enumerate() {
        let start = Instant::now();
        let mut tallies = vec![CellTally::default(); grid.len()];
        let mut previous: Option<Vec<f64>> = None;
        let mut done = 0u32;
        loop {
            let b = settings.batch.min(settings.max_trials - done) as usize;
            let outcomes = options.execution.map(grid.len() * b, |i| {
                let (pi, t) = (i / b, done as usize + i % b);
                let mut rng = stream(seed, Domain::Trial, ci as u64, pi as u64, t as u64);
                trial(&dictionary, curve, &grid[pi], spec, &mut rng)
            });
            for (i, o) in outcomes.into_iter().enumerate() {
                let o = o?;
                let c = &mut tallies[i / b];
                c.trials += 1;
                c.successes += o.success as u64;
                c.iterations += o.iterations as u64;
                c.solve_s += o.solve_s;
                c.flops += o.predicted_flops;
            }
            done += b as u32;
            let surface: Vec<f64> = tallies.iter().map(CellTally::rate).collect();
            let change = previous.as_ref().map(|p| surface_mse(p, &surface));
            progress(
                options,
                format_args!(
                    "{} {}: {} trials/point, surface change {}",
                    spec.experiment,
                    curve.name,
                    done,
                    change.map_or("-".to_string(), |c| format!("{c:.2e}"))
                ),
            );
            if change.is_some_and(|c| c < settings.tolerance) || done >= settings.max_trials {
                break;
            }
            previous = Some(surface);
        }
        let wall = start.elapsed().as_secs_f64() / grid.len() as f64;
        for (cell, t) in grid.iter().zip(&tallies) {
            let p = t.rate();
            let trials = t.trials.max(1) as f64;
            rows.push(ResultRow {
                experiment: spec.experiment.name().to_string(),
                curve: curve.name.clone(),
                operator: curve.operator.name().to_string(),
                kappa: curve.kappa,
                m: spec.m,
                n,
                m_rows: cell.m_rows,
                sparsity: cell.sparsity,
                sparsity_fed: sparsity_fed(curve, cell),
                quantizer_bits: None,
                prewhiten: false,
                snr_db: None,
                ebn0_db: None,
                delta: Some(cell.delta),
                rho: Some(cell.rho),
                trials: t.trials,
                bits: None,
                errors: None,
                ber: None,
                success_rate: Some(p),
                std_error: (p * (1.0 - p) / trials).sqrt(),
                mean_iterations: t.iterations as f64 / trials,
                capped: t.trials >= settings.max_trials as u64,
                predicted_flops: Some(t.flops / trials),
                predicted_cost: None,
                seed,
                format_version: FORMAT_VERSION,
                mean_solve_s: t.solve_s / trials,
                wall_clock_s: wall,
            });
        }
    }
    Ok(rows)
}

pub fn run_phase_transition(spec: &ExperimentSpec, options: &RunOptions) -> Result<ResultTable, ExperimentError> {
    spec.validate()?;
    let rows = sweep(spec, options)?;
    let summary = Summary {
        contours: contour::transition_contours(&rows),
        complexity: Vec::new(),
    };
    Ok(ResultTable::new(spec.clone(), rows, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::Axis;

    fn spec() -> ExperimentSpec {
        ExperimentSpec::from_toml(
            r#"
experiment = "phase"
seed = 11
m = 7
[grid]
delta = [0.5]
rho = [0.05, 0.9]
[phase]
batch = 10
max_trials = 30
[[curve]]
name = "css"
operator = "css"
"#,
        )
        .unwrap()
    }

    #[test]
    fn cell_rounding() {
        let mut s = spec();
        s.grid.delta = Axis::Values(vec![0.3]);
        s.grid.rho = Axis::Values(vec![0.001, 0.5]);
        let c = cells(&s);
        assert_eq!(c[0].m_rows, 38);
        assert_eq!(c[0].sparsity, 1);
        assert_eq!(c[1].sparsity, 19);
    }

    #[test]
    fn easy_and_hopeless_corners() {
        let t = run_phase_transition(&spec(), &RunOptions::default()).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[0].success_rate, Some(1.0));
        assert_eq!(t.rows[1].success_rate, Some(0.0));
        // Both cells are settled after two batches.
        assert_eq!(t.rows[0].trials, 20);
        assert!(t.rows.iter().all(|r| r.predicted_flops.unwrap() > 0.0));
    }

    #[test]
    fn trial_is_reproducible() {
        let s = spec();
        let d = GoldDictionary::new(7).unwrap();
        let cell = cells(&s)[0];
        let run = || {
            let mut rng = stream(1, Domain::Trial, 0, 0, 5);
            trial(&d, &s.curve[0], &cell, &s, &mut rng).unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.relative_error, b.relative_error);
        assert_eq!(a.iterations, b.iterations);
    }
}
