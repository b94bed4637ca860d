//! Oversampled emulation of the analog transmit/receive chain: pulse
//! shaping, quadrature mixing at an intermediate carrier, passband noise,
//! FFT-based down-conversion, matched filtering and sampling.

mod quantize;
mod taps;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sampling::MeasurementOperator;

pub use quantize::{quantize_uniform, UniformQuantizer, DEFAULT_LOADING};
pub use taps::{Stage, TapRecorder};

#[derive(Debug, Error, PartialEq)]
pub enum RfError {
    #[error("invalid chain configuration: {0}")]
    InvalidConfig(String),
    #[error("sample rate {found} Hz does not match the expected {expected} Hz")]
    RateMismatch { expected: f64, found: f64 },
    #[error("expected {expected} samples, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainConfig {
    pub chip_rate: f64,
    pub baseband_oversampling: usize,
    pub carrier: f64,
    pub rf_sample_rate: f64,
    pub rrc_rolloff: f64,
    /// Filter length in chips; also the zero padding at each slot edge.
    pub rrc_span: usize,
    pub quantizer_bits: Option<u32>,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            chip_rate: 1e6,
            baseband_oversampling: 10,
            carrier: 3e6,
            rf_sample_rate: 12e6,
            rrc_rolloff: 1.0,
            rrc_span: 8,
            quantizer_bits: None,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<(), RfError> {
        let bad = |m: &str| Err(RfError::InvalidConfig(m.to_string()));
        if !(self.rrc_rolloff > 0.0 && self.rrc_rolloff <= 1.0) {
            return bad("rolloff must lie in (0, 1]");
        }
        if self.baseband_oversampling < 2 {
            return bad("baseband oversampling must be at least 2");
        }
        if self.rrc_span == 0 || self.rrc_span % 2 != 0 {
            return bad("rrc span must be a positive even number of chips");
        }
        if !(self.chip_rate > 0.0) {
            return bad("chip rate must be positive");
        }
        let per_chip = self.rf_sample_rate / self.chip_rate;
        if (per_chip - per_chip.round()).abs() > 1e-9 || per_chip < 2.0 {
            return bad("rf sample rate must be an integer multiple of the chip rate");
        }
        let top = self.carrier + self.chip_rate * (1.0 + self.rrc_rolloff) / 2.0;
        if self.carrier <= self.chip_rate || top >= self.rf_sample_rate / 2.0 {
            return bad("carrier band must fit between the chip rate and rf Nyquist");
        }
        if let Some(b) = self.quantizer_bits {
            if b == 0 || b > 24 {
                return bad("quantizer bits must lie in 1..=24");
            }
        }
        Ok(())
    }

    pub fn baseband_rate(&self) -> f64 {
        self.chip_rate * self.baseband_oversampling as f64
    }

    pub fn rf_per_chip(&self) -> usize {
        (self.rf_sample_rate / self.chip_rate).round() as usize
    }

    pub fn pad_chips(&self) -> usize {
        self.rrc_span
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OversampledSignal<T> {
    pub samples: Vec<T>,
    pub rate: f64,
}

impl<T> OversampledSignal<T> {
    fn expect_rate(&self, rate: f64) -> Result<(), RfError> {
        if (self.rate - rate).abs() > 1e-6 * rate {
            return Err(RfError::RateMismatch {
                expected: rate,
                found: self.rate,
            });
        }
        Ok(())
    }
}

/// Root-raised-cosine value at `t` chips.
fn rrc_at(t: f64, beta: f64) -> f64 {
    if t.abs() < 1e-12 {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    if (t.abs() - 1.0 / (4.0 * beta)).abs() < 1e-9 {
        let a = PI / (4.0 * beta);
        return beta / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * t * (1.0 - beta)).sin() + 4.0 * beta * t * (PI * t * (1.0 + beta)).cos();
    num / (PI * t * (1.0 - (4.0 * beta * t).powi(2)))
}

/// Truncated RRC taps at the oversampled rate with unit energy; the centre
/// tap is at index `span * oversampling / 2`.
pub fn rrc_taps(rolloff: f64, span: usize, oversampling: usize) -> Vec<f64> {
    let half = (span * oversampling / 2) as isize;
    let mut h: Vec<f64> = (-half..=half)
        .map(|k| rrc_at(k as f64 / oversampling as f64, rolloff))
        .collect();
    let norm = h.iter().map(|v| v * v).sum::<f64>().sqrt();
    h.iter_mut().for_each(|v| *v /= norm);
    h
}

/// Centred ("same") convolution with a symmetric odd-length filter.
fn filter_same(x: &[Complex64], h: &[f64]) -> Vec<Complex64> {
    let half = h.len() / 2;
    let n = x.len();
    let mut out = vec![Complex64::default(); n];
    for (i, o) in out.iter_mut().enumerate() {
        let lo = i.saturating_sub(half);
        let hi = (i + half).min(n - 1);
        let mut acc = Complex64::default();
        for j in lo..=hi {
            acc += x[j] * h[j + half - i];
        }
        *o = acc;
    }
    out
}

/// Per-slot processing chain with cached FFT plans for one code length.
pub struct RfChain {
    cfg: ChainConfig,
    chips: usize,
    taps: Vec<f64>,
    bb_len: usize,
    rf_len: usize,
    bb_fwd: Arc<dyn Fft<f64>>,
    bb_inv: Arc<dyn Fft<f64>>,
    rf_fwd: Arc<dyn Fft<f64>>,
    rf_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for RfChain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RfChain")
            .field("cfg", &self.cfg)
            .field("chips", &self.chips)
            .finish()
    }
}

/// Output of one slot through the chain.
#[derive(Debug, Clone)]
pub struct RfSlot {
    /// Measurements before any quantization.
    pub measured: Vec<Complex64>,
    /// Per-sample passband noise variance that was added.
    pub rf_noise_variance: f64,
}

impl RfChain {
    pub fn new(cfg: &ChainConfig, chips: usize) -> Result<Self, RfError> {
        cfg.validate()?;
        if chips == 0 {
            return Err(RfError::InvalidConfig("slot must contain at least one chip".into()));
        }
        let total = chips + 2 * cfg.pad_chips();
        let bb_len = total * cfg.baseband_oversampling;
        let rf_len = total * cfg.rf_per_chip();
        let mut planner = FftPlanner::new();
        Ok(Self {
            taps: rrc_taps(cfg.rrc_rolloff, cfg.rrc_span, cfg.baseband_oversampling),
            bb_fwd: planner.plan_fft_forward(bb_len),
            bb_inv: planner.plan_fft_inverse(bb_len),
            rf_fwd: planner.plan_fft_forward(rf_len),
            rf_inv: planner.plan_fft_inverse(rf_len),
            cfg: cfg.clone(),
            chips,
            bb_len,
            rf_len,
        })
    }

    pub fn config(&self) -> &ChainConfig {
        &self.cfg
    }

    pub fn chips(&self) -> usize {
        self.chips
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    fn chip_index(&self, k: usize) -> usize {
        (self.cfg.pad_chips() + k) * self.cfg.baseband_oversampling
    }

    /// Shapes the chip stream; returns `I + jQ` at the baseband rate.
    fn shape(&self, x: &[Complex64]) -> Result<Vec<Complex64>, RfError> {
        if x.len() != self.chips {
            return Err(RfError::DimensionMismatch {
                expected: self.chips,
                found: x.len(),
            });
        }
        let mut impulses = vec![Complex64::default(); self.bb_len];
        for (k, &c) in x.iter().enumerate() {
            impulses[self.chip_index(k)] = c;
        }
        Ok(filter_same(&impulses, &self.taps))
    }

    pub fn pulse_shape(
        &self,
        x: &[Complex64],
    ) -> Result<(OversampledSignal<f64>, OversampledSignal<f64>), RfError> {
        let z = self.shape(x)?;
        let rate = self.cfg.baseband_rate();
        Ok((
            OversampledSignal {
                samples: z.iter().map(|c| c.re).collect(),
                rate,
            },
            OversampledSignal {
                samples: z.iter().map(|c| c.im).collect(),
                rate,
            },
        ))
    }

    fn mix_up(&self, z: &[Complex64]) -> Vec<f64> {
        // Band-limited interpolation from the baseband grid to the rf grid.
        let mut spec = z.to_vec();
        self.bb_fwd.process(&mut spec);
        let mut wide = vec![Complex64::default(); self.rf_len];
        let half = self.bb_len / 2;
        let scale = 1.0 / self.bb_len as f64;
        for k in 0..self.bb_len {
            if self.bb_len % 2 == 0 && k == half {
                continue;
            }
            let dst = if k < half { k } else { self.rf_len - (self.bb_len - k) };
            wide[dst] = spec[k] * scale;
        }
        self.rf_inv.process(&mut wide);
        let w = 2.0 * PI * self.cfg.carrier / self.cfg.rf_sample_rate;
        wide.iter()
            .enumerate()
            .map(|(n, v)| {
                let (s, c) = (w * n as f64).sin_cos();
                v.re * c + v.im * s
            })
            .collect()
    }

    pub fn up_convert(
        &self,
        i: &OversampledSignal<f64>,
        q: &OversampledSignal<f64>,
    ) -> Result<OversampledSignal<f64>, RfError> {
        let rate = self.cfg.baseband_rate();
        i.expect_rate(rate)?;
        q.expect_rate(rate)?;
        for s in [&i.samples, &q.samples] {
            if s.len() != self.bb_len {
                return Err(RfError::DimensionMismatch {
                    expected: self.bb_len,
                    found: s.len(),
                });
            }
        }
        let z: Vec<Complex64> = i
            .samples
            .iter()
            .zip(&q.samples)
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect();
        Ok(OversampledSignal {
            samples: self.mix_up(&z),
            rate: self.cfg.rf_sample_rate,
        })
    }

    /// Shifts the carrier to DC, keeps `|f| <= chip_rate`, and returns the
    /// complex envelope `I + jQ` at the baseband rate.
    pub fn down_convert(&self, s: &OversampledSignal<f64>) -> Result<OversampledSignal<Complex64>, RfError> {
        s.expect_rate(self.cfg.rf_sample_rate)?;
        if s.samples.len() != self.rf_len {
            return Err(RfError::DimensionMismatch {
                expected: self.rf_len,
                found: s.samples.len(),
            });
        }
        let w = 2.0 * PI * self.cfg.carrier / self.cfg.rf_sample_rate;
        let mut mixed: Vec<Complex64> = s
            .samples
            .iter()
            .enumerate()
            .map(|(n, &v)| {
                let (sn, cs) = (w * n as f64).sin_cos();
                Complex64::new(2.0 * v * cs, 2.0 * v * sn)
            })
            .collect();
        self.rf_fwd.process(&mut mixed);
        // Both grids share the bin spacing, so bins map one to one. The bin
        // sitting exactly on the chip rate is dropped as well: the pulse has
        // no energy there, and tones above rf Nyquist alias onto it.
        let spacing = self.cfg.rf_sample_rate / self.rf_len as f64;
        let cutoff = ((self.cfg.chip_rate / spacing - 1e-9).ceil() as usize - 1).min((self.bb_len - 1) / 2);
        let mut narrow = vec![Complex64::default(); self.bb_len];
        let scale = 1.0 / self.rf_len as f64;
        narrow[0] = mixed[0] * scale;
        for k in 1..=cutoff {
            narrow[k] = mixed[k] * scale;
            narrow[self.bb_len - k] = mixed[self.rf_len - k] * scale;
        }
        self.bb_inv.process(&mut narrow);
        Ok(OversampledSignal {
            samples: narrow,
            rate: self.cfg.baseband_rate(),
        })
    }

    /// Matched filter followed by sampling at the chip instants shifted by
    /// `offset` oversampled ticks.
    pub fn chip_samples_at(&self, bb: &OversampledSignal<Complex64>, offset: isize) -> Result<Vec<Complex64>, RfError> {
        bb.expect_rate(self.cfg.baseband_rate())?;
        if bb.samples.len() != self.bb_len {
            return Err(RfError::DimensionMismatch {
                expected: self.bb_len,
                found: bb.samples.len(),
            });
        }
        let mf = filter_same(&bb.samples, &self.taps);
        Ok((0..self.chips)
            .map(|k| mf[(self.chip_index(k) as isize + offset) as usize])
            .collect())
    }

    pub fn matched_filter_and_sample(
        &self,
        bb: &OversampledSignal<Complex64>,
        op: &MeasurementOperator,
    ) -> Result<Vec<Complex64>, RfError> {
        if op.n() != self.chips {
            return Err(RfError::DimensionMismatch {
                expected: self.chips,
                found: op.n(),
            });
        }
        let chips = self.chip_samples_at(bb, 0)?;
        self.measure(op, &chips)
    }

    fn measure(&self, op: &MeasurementOperator, chips: &[Complex64]) -> Result<Vec<Complex64>, RfError> {
        op.apply(chips).map_err(|_| RfError::DimensionMismatch {
            expected: self.chips,
            found: op.n(),
        })
    }

    /// Transmit-side signal for a chip vector.
    pub fn transmit(&self, x: &[Complex64]) -> Result<OversampledSignal<f64>, RfError> {
        let z = self.shape(x)?;
        Ok(OversampledSignal {
            samples: self.mix_up(&z),
            rate: self.cfg.rf_sample_rate,
        })
    }

    /// One slot end to end: shaping, mixing, passband noise at `ebn0_db`
    /// (none when `None`), down-conversion, matched filter and measurement.
    pub fn run_slot<R: Rng + ?Sized>(
        &self,
        x: &[Complex64],
        op: &MeasurementOperator,
        ebn0_db: Option<f64>,
        bits_per_slot: usize,
        rng: &mut R,
        mut taps: Option<&mut TapRecorder>,
    ) -> Result<RfSlot, RfError> {
        let bb_rate = self.cfg.baseband_rate();
        let rf_rate = self.cfg.rf_sample_rate;
        if let Some(t) = taps.as_deref_mut() {
            t.record(Stage::Chips, x, self.cfg.chip_rate);
        }
        let z = self.shape(x)?;
        if let Some(t) = taps.as_deref_mut() {
            t.record(Stage::Shaped, &z, bb_rate);
        }
        let mut s = OversampledSignal {
            samples: self.mix_up(&z),
            rate: rf_rate,
        };
        if let Some(t) = taps.as_deref_mut() {
            t.record_real(Stage::Rf, &s.samples, rf_rate);
        }
        let mut rf_noise_variance = 0.0;
        if let Some(db) = ebn0_db {
            rf_noise_variance = add_rf_awgn(&mut s, db, bits_per_slot, rng);
            if let Some(t) = taps.as_deref_mut() {
                t.record_real(Stage::RfNoisy, &s.samples, rf_rate);
            }
        }
        let bb = self.down_convert(&s)?;
        if let Some(t) = taps.as_deref_mut() {
            t.record(Stage::Baseband, &bb.samples, bb_rate);
        }
        let chips = self.chip_samples_at(&bb, 0)?;
        if let Some(t) = taps.as_deref_mut() {
            t.record(Stage::ChipSamples, &chips, self.cfg.chip_rate);
        }
        let measured = self.measure(op, &chips)?;
        if let Some(t) = taps.as_deref_mut() {
            t.record(Stage::Measured, &measured, self.cfg.chip_rate / op.ratio());
        }
        Ok(RfSlot {
            measured,
            rf_noise_variance,
        })
    }
}

/// Slot energy `sum s^2 / fs` of a real passband signal.
pub fn passband_energy(s: &OversampledSignal<f64>) -> f64 {
    s.samples.iter().map(|v| v * v).sum::<f64>() / s.rate
}

/// Adds white passband noise with two-sided density `N0 / 2`, where `N0`
/// follows from the slot energy spread over `bits_per_slot` bits. Returns
/// the per-sample variance.
pub fn add_rf_awgn<R: Rng + ?Sized>(
    s: &mut OversampledSignal<f64>,
    ebn0_db: f64,
    bits_per_slot: usize,
    rng: &mut R,
) -> f64 {
    if ebn0_db == f64::INFINITY {
        return 0.0;
    }
    let eb = passband_energy(s) / bits_per_slot as f64;
    let n0 = eb / 10f64.powf(ebn0_db / 10.0);
    let var = n0 / 2.0 * s.rate;
    let sd = var.sqrt();
    for v in s.samples.iter_mut() {
        let g: f64 = StandardNormal.sample(rng);
        *v += sd * g;
    }
    var
}

/// `Eb/N0` in dB matching a per-chip SNR in dB for `n` chips carrying
/// `bits` bits.
pub fn ebn0_db_from_snr_db(snr_db: f64, n: usize, bits: usize) -> f64 {
    snr_db + 10.0 * (n as f64 / bits as f64).log10()
}

pub fn snr_db_from_ebn0_db(ebn0_db: f64, n: usize, bits: usize) -> f64 {
    ebn0_db - 10.0 * (n as f64 / bits as f64).log10()
}

/// Convenience wrappers building a chain for the given chip count.
pub fn pulse_shape(
    x: &[Complex64],
    cfg: &ChainConfig,
) -> Result<(OversampledSignal<f64>, OversampledSignal<f64>), RfError> {
    RfChain::new(cfg, x.len())?.pulse_shape(x)
}

pub fn up_convert(
    i: &OversampledSignal<f64>,
    q: &OversampledSignal<f64>,
    cfg: &ChainConfig,
) -> Result<OversampledSignal<f64>, RfError> {
    RfChain::new(cfg, chips_from_len(i.samples.len(), cfg.baseband_oversampling, cfg)?)?.up_convert(i, q)
}

pub fn down_convert(s: &OversampledSignal<f64>, cfg: &ChainConfig) -> Result<OversampledSignal<Complex64>, RfError> {
    RfChain::new(cfg, chips_from_len(s.samples.len(), cfg.rf_per_chip(), cfg)?)?.down_convert(s)
}

pub fn matched_filter_and_sample(
    bb: &OversampledSignal<Complex64>,
    op: &MeasurementOperator,
    cfg: &ChainConfig,
) -> Result<Vec<Complex64>, RfError> {
    RfChain::new(cfg, chips_from_len(bb.samples.len(), cfg.baseband_oversampling, cfg)?)?
        .matched_filter_and_sample(bb, op)
}

fn chips_from_len(len: usize, per_chip: usize, cfg: &ChainConfig) -> Result<usize, RfError> {
    cfg.validate()?;
    let pad = 2 * cfg.pad_chips();
    if len % per_chip != 0 || len / per_chip <= pad {
        return Err(RfError::DimensionMismatch {
            expected: (pad + 1) * per_chip,
            found: len,
        });
    }
    Ok(len / per_chip - pad)
}
