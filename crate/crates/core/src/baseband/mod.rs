//! Slot-level discrete signal model: sparse QPSK encoding onto Gold codes,
//! AWGN at a target SNR, and hard-decision bit recovery.

pub mod theory;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::gold::GoldDictionary;

pub use theory::{theoretical_ber_mfsk, BerAxis};

#[derive(Debug, Error, PartialEq)]
pub enum BasebandError {
    #[error("support index {index} out of range for {n} codes")]
    SupportOutOfRange { index: usize, n: usize },
    #[error("support has {support} indices but {bits} bits were supplied (need 2 per symbol)")]
    BitCountMismatch { support: usize, bits: usize },
    #[error("support contains duplicate index {0}")]
    DuplicateSupport(usize),
    #[error("{0} amplitudes supplied for {1} symbols")]
    AmplitudeCount(usize, usize),
}

/// Two bits per active code; `bits[2k]` and `bits[2k + 1]` ride on the
/// `k`-th support index in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitBlock {
    pub bits: Vec<u8>,
}

impl BitBlock {
    pub fn new(bits: Vec<u8>) -> Self {
        Self { bits }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, symbols: usize) -> Self {
        Self {
            bits: (0..2 * symbols).map(|_| rng.random_range(0..2u8)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymbolVector {
    pub alpha: Vec<Complex64>,
    /// Ascending.
    pub support: Vec<usize>,
}

/// Gray map: `00 -> 1+j`, `01 -> 1-j`, `11 -> -1-j`, `10 -> -1+j`.
pub fn qpsk_symbol(b0: u8, b1: u8) -> Complex64 {
    Complex64::new(
        if b0 == 0 { 1.0 } else { -1.0 },
        if b1 == 0 { 1.0 } else { -1.0 },
    )
}

/// Hard decision on the signs of the real and imaginary parts.
pub fn qpsk_decision(v: Complex64) -> (u8, u8) {
    ((v.re <= 0.0) as u8, (v.im <= 0.0) as u8)
}

/// Uniform support of size `s` drawn without replacement, ascending.
pub fn random_support<R: Rng + ?Sized>(rng: &mut R, n: usize, s: usize) -> Vec<usize> {
    let mut v = sample(rng, n, s).into_vec();
    v.sort_unstable();
    v
}

fn check_support(support: &[usize], n: usize, bits: &BitBlock) -> Result<Vec<usize>, BasebandError> {
    if bits.len() != 2 * support.len() {
        return Err(BasebandError::BitCountMismatch {
            support: support.len(),
            bits: bits.len(),
        });
    }
    let mut sorted = support.to_vec();
    sorted.sort_unstable();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(BasebandError::DuplicateSupport(w[0]));
        }
    }
    if let Some(&index) = sorted.iter().find(|&&i| i >= n) {
        return Err(BasebandError::SupportOutOfRange { index, n });
    }
    Ok(sorted)
}

/// Maps bits onto the support and spreads: `x = Psi alpha`.
pub fn encode(
    bits: &BitBlock,
    support: &[usize],
    dictionary: &GoldDictionary,
) -> Result<(SparseSymbolVector, Vec<Complex64>), BasebandError> {
    encode_with_amplitudes(bits, support, None, dictionary)
}

/// As [`encode`], scaling each symbol by a per-user amplitude.
pub fn encode_with_amplitudes(
    bits: &BitBlock,
    support: &[usize],
    amplitudes: Option<&[f64]>,
    dictionary: &GoldDictionary,
) -> Result<(SparseSymbolVector, Vec<Complex64>), BasebandError> {
    let n = dictionary.len();
    let support = check_support(support, n, bits)?;
    if let Some(a) = amplitudes {
        if a.len() != support.len() {
            return Err(BasebandError::AmplitudeCount(a.len(), support.len()));
        }
    }
    let mut alpha = vec![Complex64::default(); n];
    for (k, &idx) in support.iter().enumerate() {
        let gain = amplitudes.map_or(1.0, |a| a[k]);
        alpha[idx] = qpsk_symbol(bits.bits[2 * k], bits.bits[2 * k + 1]) * gain;
    }
    let x = if support.len() * 8 < n {
        // A few columns: direct sum is cheaper than the FFT route.
        let mut x = vec![Complex64::default(); n];
        for &idx in &support {
            let a = alpha[idx];
            for (xi, &c) in x.iter_mut().zip(dictionary.column(idx)) {
                *xi += a * c as f64;
            }
        }
        x
    } else {
        dictionary.synthesize(&alpha)
    };
    Ok((SparseSymbolVector { alpha, support }, x))
}

pub fn energy(x: &[Complex64]) -> f64 {
    x.iter().map(|c| c.norm_sqr()).sum()
}

/// Noise variance per complex sample giving `SNR = ||x||^2 / (N sigma^2)`.
pub fn noise_variance(x: &[Complex64], snr_db: f64) -> f64 {
    energy(x) / (x.len() as f64 * 10f64.powf(snr_db / 10.0))
}

/// Realized SNR in dB of a signal/noise pair.
pub fn realized_snr_db(x: &[Complex64], w: &[Complex64]) -> f64 {
    10.0 * (energy(x) / energy(w)).log10()
}

/// Circular complex Gaussian samples with `E|w|^2 = sigma2`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, len: usize, sigma2: f64) -> Vec<Complex64> {
    let sd = (sigma2 / 2.0).sqrt();
    (0..len)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re * sd, im * sd)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyObservation {
    pub y: Vec<Complex64>,
    pub sigma2: f64,
    /// Linear SNR realized by this particular noise draw.
    pub snr: f64,
}

/// `x + w` at `snr_db`; an infinite SNR adds nothing.
pub fn add_awgn<R: Rng + ?Sized>(x: &[Complex64], snr_db: f64, rng: &mut R) -> NoisyObservation {
    if snr_db == f64::INFINITY {
        return NoisyObservation {
            y: x.to_vec(),
            sigma2: 0.0,
            snr: f64::INFINITY,
        };
    }
    let sigma2 = noise_variance(x, snr_db);
    let w = complex_gaussian(rng, x.len(), sigma2);
    NoisyObservation {
        y: x.iter().zip(&w).map(|(a, b)| a + b).collect(),
        sigma2,
        snr: energy(x) / energy(&w),
    }
}

/// Hard decisions at `support` (ascending), two bits per index.
pub fn decode(alpha_hat: &[Complex64], support: &[usize]) -> BitBlock {
    let mut bits = Vec::with_capacity(2 * support.len());
    for &i in support {
        let (b0, b1) = qpsk_decision(alpha_hat[i]);
        bits.push(b0);
        bits.push(b1);
    }
    BitBlock { bits }
}

/// Whether the receiver decodes on the transmitted support or on its own
/// estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportKnowledge {
    Known,
    Estimated,
}

/// Treatment of detected indices that carried no symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpuriousScoring {
    #[default]
    Ignore,
    /// Each spurious index adds two errors.
    Count,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BitErrors {
    pub errors: u64,
    pub bits: u64,
}

impl std::ops::AddAssign for BitErrors {
    fn add_assign(&mut self, o: Self) {
        self.errors += o.errors;
        self.bits += o.bits;
    }
}

/// Scores an estimate against the transmitted slot. A transmitted index the
/// receiver did not detect costs both of its bits.
pub fn score(
    sent: &BitBlock,
    support: &[usize],
    alpha_hat: &[Complex64],
    detected: &[usize],
    knowledge: SupportKnowledge,
    spurious: SpuriousScoring,
) -> BitErrors {
    let bits = sent.len() as u64;
    let mut errors = 0;
    for (k, &idx) in support.iter().enumerate() {
        let found = knowledge == SupportKnowledge::Known || detected.binary_search(&idx).is_ok();
        if !found {
            errors += 2;
            continue;
        }
        let (b0, b1) = qpsk_decision(alpha_hat[idx]);
        errors += (b0 != sent.bits[2 * k]) as u64 + (b1 != sent.bits[2 * k + 1]) as u64;
    }
    if knowledge == SupportKnowledge::Estimated && spurious == SpuriousScoring::Count {
        errors += 2 * detected
            .iter()
            .filter(|i| support.binary_search(i).is_err())
            .count() as u64;
    }
    BitErrors { errors, bits }
}
