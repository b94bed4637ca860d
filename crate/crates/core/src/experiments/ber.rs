//! Bit-error-rate sweeps over the discrete model and the RF chain.

use std::time::Instant;

use rand::Rng;

use super::config::{CurveSpec, ExperimentKind, ExperimentSpec};
use super::rng::{stream, Domain};
use super::table::{ResultRow, ResultTable, Summary, FORMAT_VERSION};
use super::{progress, ExperimentError, RunOptions};
use crate::baseband::{self, BitBlock, SupportKnowledge};
use crate::gold::GoldDictionary;
use crate::pursuit::{subspace_pursuit, PursuitOptions, PursuitProblem, ReceiverMatrix};
use crate::rf::{self, quantize_uniform, RfChain, Stage, TapRecorder};
use crate::sampling::{build_operator, build_prewhitener, MeasurementOperator, Prewhitener};

/// Smallest and largest number of slots simulated between stop checks.
const FIRST_BATCH: u64 = 64;
const LARGEST_BATCH: u64 = 8192;

/// Noise applied to a slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Channel {
    /// Chip-rate AWGN at this SNR in dB.
    Discrete(f64),
    /// Passband AWGN at this Eb/N0 in dB, through the RF chain.
    Rf(f64),
    /// Through the RF chain without noise.
    RfNoiseless,
    Noiseless,
}

/// Everything fixed for one curve.
pub struct CurveReceiver<'a> {
    pub dictionary: &'a GoldDictionary,
    pub curve: &'a CurveSpec,
    pub operator: MeasurementOperator,
    pub whitener: Option<Prewhitener>,
    pub chain: Option<RfChain>,
    pub scoring: baseband::SpuriousScoring,
    pub pursuit: PursuitOptions,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SlotOutcome {
    pub errors: u64,
    pub bits: u64,
    pub iterations: usize,
    pub solve_s: f64,
}

/// The operator realization shared by every slot of curve `index`.
pub fn curve_operator(spec: &ExperimentSpec, index: usize) -> Result<MeasurementOperator, ExperimentError> {
    let curve = &spec.curve[index];
    let mut rng = stream(spec.seed()?, Domain::Operator, index as u64, 0, 0);
    Ok(build_operator(curve.operator, spec.n(), curve.kappa, &mut rng)?)
}

impl<'a> CurveReceiver<'a> {
    pub fn new(
        spec: &'a ExperimentSpec,
        index: usize,
        dictionary: &'a GoldDictionary,
    ) -> Result<Self, ExperimentError> {
        let curve = &spec.curve[index];
        let operator = curve_operator(spec, index)?;
        let whitener = if curve.prewhiten {
            build_prewhitener(&operator)?
        } else {
            None
        };
        let chain = if spec.experiment.uses_rf_chain() {
            Some(RfChain::new(&spec.rf, spec.n())?)
        } else {
            None
        };
        Ok(Self {
            dictionary,
            curve,
            operator,
            whitener,
            chain,
            scoring: spec.scoring,
            pursuit: PursuitOptions {
                init: spec.init,
                max_iterations: None,
            },
        })
    }

    /// Sparsity handed to the reconstruction, at most the row count.
    pub fn sparsity_fed(&self) -> usize {
        (self.curve.sparsity * self.curve.sparsity_multiplier).min(self.operator.rows())
    }

    /// Simulates one slot with its own random stream.
    pub fn slot<R: Rng + ?Sized>(
        &self,
        channel: Channel,
        rng: &mut R,
        mut taps: Option<&mut TapRecorder>,
    ) -> Result<SlotOutcome, ExperimentError> {
        let n = self.dictionary.len();
        let s = self.curve.sparsity;
        let support = baseband::random_support(rng, n, s);
        let bits = BitBlock::random(rng, s);
        let amplitudes: Option<Vec<f64>> = (self.curve.amplitude_spread_db > 0.0).then(|| {
            (0..s)
                .map(|_| 10f64.powf(-rng.random::<f64>() * self.curve.amplitude_spread_db / 20.0))
                .collect()
        });
        let (_, x) = baseband::encode_with_amplitudes(&bits, &support, amplitudes.as_deref(), self.dictionary)?;

        let mut y = match (channel, &self.chain) {
            (Channel::Discrete(db), _) => {
                let noisy = baseband::add_awgn(&x, db, rng);
                self.operator.apply(&noisy.y)?
            }
            (Channel::Noiseless, _) => self.operator.apply(&x)?,
            (Channel::Rf(db), Some(chain)) => {
                chain
                    .run_slot(&x, &self.operator, Some(db), bits.len(), rng, taps.as_deref_mut())?
                    .measured
            }
            (Channel::RfNoiseless, Some(chain)) => {
                chain
                    .run_slot(&x, &self.operator, None, bits.len(), rng, taps.as_deref_mut())?
                    .measured
            }
            (_, None) => {
                return Err(ExperimentError::Config(
                    "an RF channel needs an RF-chain experiment".into(),
                ))
            }
        };
        if let Some(b) = self.curve.quantizer_bits {
            y = quantize_uniform(&y, b);
            if let Some(t) = taps.as_deref_mut() {
                let rate = self.chain.as_ref().map_or(0.0, |c| c.config().chip_rate / self.operator.ratio());
                t.record(Stage::Quantized, &y, rate);
            }
        }
        if let Some(w) = &self.whitener {
            y = w.apply(&y);
        }
        let a = ReceiverMatrix::new(self.dictionary, &self.operator, self.whitener.as_ref());
        let start = Instant::now();
        let result = subspace_pursuit(
            &PursuitProblem {
                a: &a,
                y: &y,
                sparsity: self.sparsity_fed(),
            },
            &self.pursuit,
        )?;
        let solve_s = start.elapsed().as_secs_f64();
        let e = baseband::score(
            &bits,
            &support,
            &result.alpha_hat,
            &result.support,
            SupportKnowledge::Estimated,
            self.scoring,
        );
        Ok(SlotOutcome {
            errors: e.errors,
            bits: e.bits,
            iterations: result.iterations,
            solve_s,
        })
    }
}

/// Aggregate of the slots simulated at one grid point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PointTally {
    pub slots: u64,
    pub errors: u64,
    pub bits: u64,
    pub iterations: u64,
    pub solve_s: f64,
    pub capped: bool,
}

impl PointTally {
    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.errors as f64 / self.bits as f64
        }
    }

    /// Binomial standard error of the BER estimate.
    pub fn std_error(&self) -> f64 {
        let p = self.ber();
        if self.bits == 0 {
            0.0
        } else {
            (p * (1.0 - p) / self.bits as f64).sqrt()
        }
    }
}

/// Simulates slots `0, 1, 2, ...` until `target_errors` errors or
/// `max_slots` slots. Slots are drawn in growing batches, but the tally
/// stops at the exact slot that reached the target, so the result does not
/// depend on the batch schedule or worker count.
pub fn run_point(
    receiver: &CurveReceiver<'_>,
    channel: Channel,
    seed: u64,
    curve: u64,
    point: u64,
    spec: &ExperimentSpec,
    options: &RunOptions,
) -> Result<PointTally, ExperimentError> {
    let mut tally = PointTally::default();
    let mut batch = FIRST_BATCH;
    let max = spec.stop.max_slots;
    while tally.slots < max && tally.errors < spec.stop.target_errors {
        let first = tally.slots;
        let len = batch.min(max - first);
        let outcomes = options.execution.map(len as usize, |i| {
            let mut rng = stream(seed, Domain::Trial, curve, point, first + i as u64);
            receiver.slot(channel, &mut rng, None)
        });
        for o in outcomes {
            let o = o?;
            tally.slots += 1;
            tally.errors += o.errors;
            tally.bits += o.bits;
            tally.iterations += o.iterations as u64;
            tally.solve_s += o.solve_s;
            if tally.errors >= spec.stop.target_errors {
                break;
            }
        }
        batch = (batch * 2).min(LARGEST_BATCH);
    }
    tally.capped = tally.errors < spec.stop.target_errors;
    Ok(tally)
}

pub fn run_ber_discrete(spec: &ExperimentSpec, options: &RunOptions) -> Result<ResultTable, ExperimentError> {
    run_sweep(spec, options)
}

pub fn run_ber_rf(spec: &ExperimentSpec, options: &RunOptions) -> Result<ResultTable, ExperimentError> {
    run_sweep(spec, options)
}

/// Noise levels of the sweep in ascending order; a single noiseless point
/// when requested.
fn channels(spec: &ExperimentSpec) -> Vec<Channel> {
    let rf = spec.experiment.uses_rf_chain();
    let sorted = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v
    };
    match (spec.noiseless, rf) {
        (true, true) => vec![Channel::RfNoiseless],
        (true, false) => vec![Channel::Noiseless],
        (false, true) => sorted(spec.grid.ebn0_db.values()).into_iter().map(Channel::Rf).collect(),
        (false, false) => sorted(spec.grid.snr_db.values()).into_iter().map(Channel::Discrete).collect(),
    }
}

fn run_sweep(spec: &ExperimentSpec, options: &RunOptions) -> Result<ResultTable, ExperimentError> {
    spec.validate()?;
    let seed = spec.seed()?;
    let dictionary = GoldDictionary::new(spec.m)?;
    let n = spec.n();
    let mut rows = Vec::new();
    for (ci, curve) in spec.curve.iter().enumerate() {
        let receiver = CurveReceiver::new(spec, ci, &dictionary)?;
        let bits_per_slot = 2 * curve.sparsity;
        for (pi, &channel) in channels(spec).iter().enumerate() {
            let start = Instant::now();
            let tally = run_point(&receiver, channel, seed, ci as u64, pi as u64, spec, options)?;
            let wall = start.elapsed().as_secs_f64();
            let (snr_db, ebn0_db) = match channel {
                Channel::Discrete(db) => (Some(db), Some(rf::ebn0_db_from_snr_db(db, n, bits_per_slot))),
                Channel::Rf(db) => (Some(rf::snr_db_from_ebn0_db(db, n, bits_per_slot)), Some(db)),
                Channel::Noiseless | Channel::RfNoiseless => (None, None),
            };
            progress(
                options,
                format_args!(
                    "{} {}: point {} slots {} errors {} ber {:.3e}{}",
                    spec.experiment,
                    curve.name,
                    pi,
                    tally.slots,
                    tally.errors,
                    tally.ber(),
                    if tally.capped { " (capped)" } else { "" }
                ),
            );
            rows.push(ResultRow {
                experiment: spec.experiment.name().to_string(),
                curve: curve.name.clone(),
                operator: curve.operator.name().to_string(),
                kappa: curve.kappa,
                m: spec.m,
                n,
                m_rows: receiver.operator.rows(),
                sparsity: curve.sparsity,
                sparsity_fed: receiver.sparsity_fed(),
                quantizer_bits: curve.quantizer_bits,
                prewhiten: receiver.whitener.is_some(),
                snr_db,
                ebn0_db,
                delta: None,
                rho: None,
                trials: tally.slots,
                bits: Some(tally.bits),
                errors: Some(tally.errors),
                ber: Some(tally.ber()),
                success_rate: None,
                std_error: tally.std_error(),
                mean_iterations: tally.iterations as f64 / tally.slots.max(1) as f64,
                capped: tally.capped,
                predicted_flops: None,
                predicted_cost: None,
                seed,
                format_version: FORMAT_VERSION,
                mean_solve_s: tally.solve_s / tally.slots.max(1) as f64,
                wall_clock_s: wall,
            });
            if spec.stop.ber_floor.is_some_and(|f| tally.ber() < f) {
                break;
            }
        }
    }
    Ok(ResultTable::new(spec.clone(), rows, Summary::default()))
}

/// Runs the first slot of one grid point with stage taps attached.
pub fn tap_slot(
    spec: &ExperimentSpec,
    curve: usize,
    point: usize,
    stages: &[Stage],
) -> Result<TapRecorder, ExperimentError> {
    if spec.experiment != ExperimentKind::BerRf && spec.experiment != ExperimentKind::Quantization {
        return Err(ExperimentError::Config("stage taps need an RF-chain experiment".into()));
    }
    let seed = spec.seed()?;
    let dictionary = GoldDictionary::new(spec.m)?;
    let receiver = CurveReceiver::new(spec, curve, &dictionary)?;
    let channel = *channels(spec)
        .get(point)
        .ok_or_else(|| ExperimentError::Config(format!("grid point {point} does not exist")))?;
    let mut taps = TapRecorder::new(stages);
    let mut rng = stream(seed, Domain::Trial, curve as u64, point as u64, 0);
    receiver.slot(channel, &mut rng, Some(&mut taps))?;
    Ok(taps)
}
