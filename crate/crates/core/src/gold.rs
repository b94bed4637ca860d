//! LFSR m-sequences and Gold-code spreading dictionaries.
//!
//! Binary sequences are mapped to chips with `0 -> +1` and `1 -> -1`. The
//! registers use the Fibonacci form: for a feedback polynomial
//! `X^m + c_{m-1} X^{m-1} + ... + c_1 X + 1` the emitted bits obey
//! `a[n+m] = sum_k c_k a[n+k] (mod 2)` with `c_0 = 1`, and the register
//! outputs its oldest bit first.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GoldError {
    #[error("register length must be between 2 and 24, got {0}")]
    InvalidDegree(u32),
    #[error("tap exponent {tap} exceeds polynomial degree {degree}")]
    TapOutOfRange { tap: u32, degree: u32 },
    #[error("seed must be a nonzero {degree}-bit word, got {seed:#x}")]
    InvalidSeed { seed: u32, degree: u32 },
    #[error("polynomial {poly} is not maximum length: period {period}, expected {expected}")]
    NotMaximumLength {
        poly: FeedbackPolynomial,
        period: usize,
        expected: usize,
    },
    #[error("polynomials {poly1} and {poly2} are not a preferred pair: cross-correlation values {found:?}, expected {{-1, -{t}, {}}}", t - 2)]
    InvalidPair {
        poly1: FeedbackPolynomial,
        poly2: FeedbackPolynomial,
        t: i64,
        found: Vec<i64>,
    },
    #[error("no built-in polynomial pair for m = {0}; supply one explicitly")]
    NoDefaultPair(u32),
    #[error("sequence lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// Feedback polynomial over GF(2), stored as the set of exponents with a
/// nonzero coefficient. The degree term and the constant term are always
/// present.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeedbackPolynomial {
    degree: u32,
    taps: BTreeSet<u32>,
}

impl FeedbackPolynomial {
    /// Builds `X^degree + sum X^e + 1`. The degree and constant terms are
    /// added if `exponents` omits them.
    pub fn new(degree: u32, exponents: impl IntoIterator<Item = u32>) -> Result<Self, GoldError> {
        if !(2..=24).contains(&degree) {
            return Err(GoldError::InvalidDegree(degree));
        }
        let mut taps: BTreeSet<u32> = BTreeSet::new();
        for e in exponents {
            if e > degree {
                return Err(GoldError::TapOutOfRange { tap: e, degree });
            }
            taps.insert(e);
        }
        taps.insert(0);
        taps.insert(degree);
        Ok(Self { degree, taps })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Exponents present, ascending, including `0` and the degree.
    pub fn exponents(&self) -> impl Iterator<Item = u32> + '_ {
        self.taps.iter().copied()
    }

    /// Period a maximum-length register with this degree would have.
    pub fn max_period(&self) -> usize {
        (1usize << self.degree) - 1
    }
}

impl fmt::Display for FeedbackPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for &e in self.taps.iter().rev() {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            match e {
                0 => f.write_str("1")?,
                1 => f.write_str("X")?,
                _ => write!(f, "X^{e}")?,
            }
        }
        Ok(())
    }
}

/// Polynomial pairs used for the standard dictionary sizes.
pub fn default_pair(m: u32) -> Result<(FeedbackPolynomial, FeedbackPolynomial), GoldError> {
    let (a, b): (&[u32], &[u32]) = match m {
        5 => (&[5, 2, 0], &[5, 4, 3, 2, 0]),
        7 => (&[7, 6, 0], &[7, 4, 0]),
        10 => (&[10, 3, 0], &[10, 9, 8, 6, 3, 2, 0]),
        _ => return Err(GoldError::NoDefaultPair(m)),
    };
    Ok((
        FeedbackPolynomial::new(m, a.iter().copied())?,
        FeedbackPolynomial::new(m, b.iter().copied())?,
    ))
}

/// Three-valued cross-correlation parameter `t` for register length `m`.
pub fn t_value(m: u32) -> i64 {
    if m % 2 == 1 {
        (1i64 << ((m + 1) / 2)) + 1
    } else {
        (1i64 << ((m + 2) / 2)) + 1
    }
}

/// One full period of a maximum-length LFSR sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MSequence {
    bits: Vec<u8>,
    source: FeedbackPolynomial,
    seed: u32,
}

impl MSequence {
    /// Binary sequence (values 0/1).
    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// The sequence mapped to chips, `0 -> +1`, `1 -> -1`.
    pub fn chips(&self) -> Vec<i8> {
        self.bits.iter().map(|&b| bit_to_chip(b)).collect()
    }

    pub fn source(&self) -> &FeedbackPolynomial {
        &self.source
    }

    pub fn seed(&self) -> u32 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

#[inline]
fn bit_to_chip(b: u8) -> i8 {
    1 - 2 * (b as i8)
}

/// Default register seed: every cell set.
pub fn default_seed(m: u32) -> u32 {
    (1u32 << m) - 1
}

/// Runs the register for one period. Bit `i` of `seed` initializes cell
/// `i`, cell 0 being the oldest (next emitted) bit.
pub fn generate_m_sequence(poly: &FeedbackPolynomial, seed: u32) -> Result<MSequence, GoldError> {
    let m = poly.degree();
    let mask = (1u32 << m) - 1;
    if seed == 0 || seed & !mask != 0 {
        return Err(GoldError::InvalidSeed { seed, degree: m });
    }
    // Feedback mask over the cells a[n..n+m]: every exponent below the degree.
    let feedback = poly
        .exponents()
        .filter(|&e| e < m)
        .fold(0u32, |acc, e| acc | (1 << e));
    let expected = poly.max_period();
    let mut bits = Vec::with_capacity(expected);
    let mut state = seed;
    for step in 1..=expected {
        bits.push((state & 1) as u8);
        let fb = (state & feedback).count_ones() & 1;
        state = (state >> 1) | (fb << (m - 1));
        if state == seed && step < expected {
            return Err(GoldError::NotMaximumLength {
                poly: poly.clone(),
                period: step,
                expected,
            });
        }
    }
    debug_assert_eq!(state, seed);
    Ok(MSequence {
        bits,
        source: poly.clone(),
        seed,
    })
}

/// Periodic correlation `r[l] = sum_n a[n] b[(n + l) mod N]`.
pub fn periodic_correlation(a: &[i8], b: &[i8]) -> Result<Vec<i64>, GoldError> {
    if a.len() != b.len() {
        return Err(GoldError::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len();
    Ok((0..n)
        .map(|lag| {
            a.iter()
                .enumerate()
                .map(|(i, &x)| x as i64 * b[(i + lag) % n] as i64)
                .sum()
        })
        .collect())
}

fn distinct(values: &[i64]) -> Vec<i64> {
    let set: BTreeSet<i64> = values.iter().copied().collect();
    set.into_iter().collect()
}

/// `N x N` dictionary of Gold codes. Column `c` (0-based) is
/// `g1 xor shift(g2, c + 1)` where `shift(g, i)[n] = g[(n + i) mod N]`, so the
/// columns run over the shifts `1..=N` and the last column uses the unshifted
/// `g2`.
pub struct GoldDictionary {
    m: u32,
    n: usize,
    t: i64,
    g1: MSequence,
    g2: MSequence,
    /// Column-major chips.
    psi: Vec<i8>,
    cross_correlation_values: Vec<i64>,
    g1_chips: Vec<f64>,
    g2_spectrum: Vec<Complex64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for GoldDictionary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GoldDictionary")
            .field("m", &self.m)
            .field("n", &self.n)
            .field("t", &self.t)
            .field("poly1", &self.g1.source().to_string())
            .field("poly2", &self.g2.source().to_string())
            .finish()
    }
}

impl GoldDictionary {
    /// Dictionary for `m` in {5, 7, 10} from the built-in polynomial pairs.
    pub fn new(m: u32) -> Result<Self, GoldError> {
        let (p1, p2) = default_pair(m)?;
        Self::from_pair(&p1, &p2)
    }

    /// Dictionary from an explicit pair, validated to be preferred.
    pub fn from_pair(poly1: &FeedbackPolynomial, poly2: &FeedbackPolynomial) -> Result<Self, GoldError> {
        let m = poly1.degree();
        if poly2.degree() != m {
            return Err(GoldError::LengthMismatch(
                poly1.max_period(),
                poly2.max_period(),
            ));
        }
        let g1 = generate_m_sequence(poly1, default_seed(m))?;
        let g2 = generate_m_sequence(poly2, default_seed(m))?;
        let t = t_value(m);
        let c1 = g1.chips();
        let c2 = g2.chips();
        let found = distinct(&periodic_correlation(&c1, &c2)?);
        let mut expected = vec![-t, -1, t - 2];
        expected.sort_unstable();
        if found != expected {
            return Err(GoldError::InvalidPair {
                poly1: poly1.clone(),
                poly2: poly2.clone(),
                t,
                found,
            });
        }

        let n = g1.len();
        let mut psi = vec![0i8; n * n];
        for c in 0..n {
            let shift = c + 1;
            let col = &mut psi[c * n..(c + 1) * n];
            for (i, chip) in col.iter_mut().enumerate() {
                *chip = bit_to_chip(g1.bits()[i] ^ g2.bits()[(i + shift) % n]);
            }
        }

        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let mut g2_spectrum: Vec<Complex64> =
            c2.iter().map(|&v| Complex64::new(v as f64, 0.0)).collect();
        fft.process(&mut g2_spectrum);

        Ok(Self {
            m,
            n,
            t,
            g1_chips: c1.iter().map(|&v| v as f64).collect(),
            g1,
            g2,
            psi,
            cross_correlation_values: found,
            g2_spectrum,
            fft,
            ifft,
        })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Code length and number of codes, `2^m - 1`.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn t(&self) -> i64 {
        self.t
    }

    pub fn g1(&self) -> &MSequence {
        &self.g1
    }

    pub fn g2(&self) -> &MSequence {
        &self.g2
    }

    /// Distinct values of the periodic cross-correlation of `g1` and `g2`.
    pub fn cross_correlation_values(&self) -> &[i64] {
        &self.cross_correlation_values
    }

    pub fn column(&self, c: usize) -> &[i8] {
        &self.psi[c * self.n..(c + 1) * self.n]
    }

    pub fn entry(&self, row: usize, col: usize) -> i8 {
        self.psi[col * self.n + row]
    }

    /// Column-major chips of the whole dictionary.
    pub fn as_column_major(&self) -> &[i8] {
        &self.psi
    }

    /// `out[k] = sum_n v[n] * g2[(n + k) mod N]`, by FFT.
    fn correlate_with_g2(&self, mut v: Vec<Complex64>) -> Vec<Complex64> {
        let n = self.n;
        let mut scratch = vec![Complex64::default(); self.ifft.get_inplace_scratch_len().max(self.fft.get_inplace_scratch_len())];
        // Unnormalized inverse gives sum_n v[n] e^{+2 pi i f n / N}.
        self.ifft.process_with_scratch(&mut v, &mut scratch);
        for (a, g) in v.iter_mut().zip(&self.g2_spectrum) {
            *a *= g;
        }
        self.ifft.process_with_scratch(&mut v, &mut scratch);
        let scale = 1.0 / n as f64;
        for a in v.iter_mut() {
            *a *= scale;
        }
        v
    }

    /// `Psi^T z` in `O(N log N)`.
    pub fn correlate(&self, z: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(z.len(), self.n, "signal length must equal the code length");
        let n = self.n;
        let v: Vec<Complex64> = z.iter().zip(&self.g1_chips).map(|(a, &g)| a * g).collect();
        let r = self.correlate_with_g2(v);
        (0..n).map(|c| r[(c + 1) % n]).collect()
    }

    /// `Psi alpha` in `O(N log N)`.
    pub fn synthesize(&self, alpha: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(alpha.len(), self.n, "coefficient length must equal the code length");
        let n = self.n;
        // beta[c + 1] = alpha[c]
        let mut beta = vec![Complex64::default(); n];
        for (c, &a) in alpha.iter().enumerate() {
            beta[(c + 1) % n] = a;
        }
        let w = self.correlate_with_g2(beta);
        w.iter().zip(&self.g1_chips).map(|(a, &g)| a * g).collect()
    }

    /// Forward FFT length used internally; exposed for benchmarks.
    pub fn fft_len(&self) -> usize {
        self.fft.len()
    }
}
