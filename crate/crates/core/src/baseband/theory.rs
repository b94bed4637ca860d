//! Bit error probability of non-coherent orthogonal signalling with an
//! alphabet of `M` tones, used as the reference curve for the classic
//! receiver.
//!
//! The textbook alternating binomial sum cancels catastrophically for large
//! alphabets, so the symbol error probability is evaluated as the equivalent
//! integral over the envelope of the correct filter:
//!
//! `Ps = int_0^inf p(r) [1 - (1 - exp(-r^2/2))^(M-1)] dr`
//!
//! with `p(r) = r exp(-(r^2 + a^2)/2) I0(a r)` and `a^2 = 2 gamma`.

use serde::{Deserialize, Serialize};

/// Which quantity the abscissa of a BER curve measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BerAxis {
    /// Per-chip SNR; symbol energy to noise density is `M * snr`.
    Snr,
    /// Energy per bit over noise density with two bits per symbol.
    Ebn0,
}

/// `exp(-x) I0(x)` for `x >= 0`.
fn scaled_bessel_i0(x: f64) -> f64 {
    if x < 50.0 {
        let q = x * x / 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        while term > sum * 1e-17 {
            term *= q / (k * k);
            sum += term;
            k += 1.0;
        }
        sum * (-x).exp()
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..12 {
            let odd = (2 * k - 1) as f64;
            term *= odd * odd / (k as f64 * 8.0 * x);
            sum += term;
        }
        sum / (2.0 * std::f64::consts::PI * x).sqrt()
    }
}

/// Symbol error probability for energy ratio `gamma` and `m` tones.
pub fn symbol_error_probability(m: u64, gamma: f64) -> f64 {
    assert!(m >= 2, "alphabet size must be at least 2");
    if gamma == f64::INFINITY {
        return 0.0;
    }
    let a = (2.0 * gamma).sqrt();
    let others = (m - 1) as f64;
    let f = |r: f64| -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        let d = r - a;
        let pdf = r * (-0.5 * d * d).exp() * scaled_bessel_i0(a * r);
        let q = (-0.5 * r * r).exp();
        let loss = -(others * (-q).ln_1p()).exp_m1();
        pdf * loss
    };
    // Simpson on [0, a + 12]: the Rician density is negligible beyond.
    let upper = a + 12.0;
    let panels = ((upper / 0.01).ceil() as usize).max(200) & !1;
    let h = upper / panels as f64;
    let mut acc = f(0.0) + f(upper);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * h);
    }
    (acc * h / 3.0).clamp(0.0, 1.0)
}

/// Bit error probability for an alphabet of `alphabet` tones at the linear
/// `value` on the given axis.
pub fn theoretical_ber_mfsk(alphabet: u64, value: f64, axis: BerAxis) -> f64 {
    let gamma = match axis {
        BerAxis::Snr => alphabet as f64 * value,
        BerAxis::Ebn0 => 2.0 * value,
    };
    let m = alphabet as f64;
    m / (2.0 * (m - 1.0)) * symbol_error_probability(alphabet, gamma)
}

/// Same, with the abscissa in decibels.
pub fn theoretical_ber_mfsk_db(alphabet: u64, db: f64, axis: BerAxis) -> f64 {
    theoretical_ber_mfsk(alphabet, 10f64.powf(db / 10.0), axis)
}

/// Abscissa in dB at which the reference curve crosses `target`, by
/// bisection over `[lo, hi]`.
pub fn db_at_ber(alphabet: u64, target: f64, axis: BerAxis, lo: f64, hi: f64) -> Option<f64> {
    let g = |d: f64| theoretical_ber_mfsk_db(alphabet, d, axis).ln() - target.ln();
    let (mut lo, mut hi) = (lo, hi);
    if g(lo) < 0.0 || g(hi) > 0.0 {
        return None;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct alternating sum; accurate only for small alphabets.
    fn direct(m: u64, gamma: f64) -> f64 {
        let mut acc = 0.0;
        let mut binom = m as f64; // C(m, 1)
        for k in 2..=m {
            binom *= (m - k + 1) as f64 / k as f64;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binom * (gamma * (1.0 / k as f64 - 1.0)).exp();
        }
        m as f64 / (2.0 * (m - 1) as f64) * acc / m as f64
    }

    #[test]
    fn binary_reduces_to_half_exponential() {
        for s in [0.1, 1.0, 3.0, 7.5] {
            let pb = theoretical_ber_mfsk(2, s, BerAxis::Snr);
            let expect = 0.5 * (-s as f64).exp();
            assert!((pb / expect - 1.0).abs() < 1e-7, "{s}: {pb} vs {expect}");
        }
    }

    #[test]
    fn agrees_with_direct_sum_for_small_alphabets() {
        for m in [3u64, 4, 8, 16] {
            for gamma in [0.5, 2.0, 6.0, 12.0] {
                let a = 2.0 * (m - 1) as f64 / m as f64 * theoretical_ber_mfsk(m, gamma / m as f64, BerAxis::Snr);
                let b = 2.0 * (m - 1) as f64 / m as f64 * direct(m, gamma);
                assert!((a / b - 1.0).abs() < 1e-7, "m={m} gamma={gamma}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn infinite_snr_is_error_free() {
        assert_eq!(theoretical_ber_mfsk(1023, f64::INFINITY, BerAxis::Snr), 0.0);
        assert!(theoretical_ber_mfsk_db(1023, 0.0, BerAxis::Snr) < 1e-100);
    }

    #[test]
    fn scaled_bessel_matches_reference() {
        // exp(-x) I0(x) from an arbitrary-precision library.
        for (x, v) in [
            (0.0, 1.0),
            (1.0, 0.465_759_607_593_640_6),
            (49.999_999, 0.056_561_627_215_956_96),
            (50.0, 0.056_561_626_647_454_19),
            (400.0, 0.019_953_356_281_939_99),
        ] {
            assert!((scaled_bessel_i0(x) / v - 1.0).abs() < 1e-13, "{x}");
        }
    }
}
