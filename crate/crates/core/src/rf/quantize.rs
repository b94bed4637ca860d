use num_complex::Complex64;

/// Clip level as a multiple of the per-component RMS.
pub const DEFAULT_LOADING: f64 = 3.0;

/// Mid-rise uniform quantizer on `[-clip, clip]` applied to each real
/// component independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformQuantizer {
    pub bits: u32,
    pub clip: f64,
}

impl UniformQuantizer {
    pub fn new(bits: u32, clip: f64) -> Self {
        assert!(bits >= 1, "quantizer needs at least one bit");
        Self { bits, clip }
    }

    pub fn levels(&self) -> u64 {
        1u64 << self.bits
    }

    pub fn step(&self) -> f64 {
        2.0 * self.clip / self.levels() as f64
    }

    pub fn quantize_real(&self, v: f64) -> f64 {
        if self.clip <= 0.0 {
            return 0.0;
        }
        let step = self.step();
        let top = (self.levels() - 1) as f64;
        let k = ((v + self.clip) / step).floor().clamp(0.0, top);
        -self.clip + (k + 0.5) * step
    }

    pub fn quantize(&self, v: &[Complex64]) -> Vec<Complex64> {
        v.iter()
            .map(|c| Complex64::new(self.quantize_real(c.re), self.quantize_real(c.im)))
            .collect()
    }
}

fn rms(it: impl Iterator<Item = f64>, n: usize) -> f64 {
    (it.map(|v| v * v).sum::<f64>() / n.max(1) as f64).sqrt()
}

/// Quantizes real and imaginary streams with clip levels of
/// [`DEFAULT_LOADING`] times their own RMS.
pub fn quantize_uniform(v: &[Complex64], bits: u32) -> Vec<Complex64> {
    let n = v.len();
    let re = UniformQuantizer::new(bits, DEFAULT_LOADING * rms(v.iter().map(|c| c.re), n));
    let im = UniformQuantizer::new(bits, DEFAULT_LOADING * rms(v.iter().map(|c| c.im), n));
    v.iter()
        .map(|c| Complex64::new(re.quantize_real(c.re), im.quantize_real(c.im)))
        .collect()
}
