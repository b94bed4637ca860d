//! Measurement operators `Theta` (identity, Rademacher, random demodulator,
//! compressive spread spectrum) and the Cholesky prewhitener.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SamplingError {
    #[error("invalid subsampling: kappa = {kappa}, n = {n} gives {rows} rows")]
    InvalidRatio { kappa: f64, n: usize, rows: usize },
    #[error("dimension mismatch: expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("Theta Theta^T is not positive definite (pivot {pivot} = {value:e})")]
    RankDeficient { pivot: usize, value: f64 },
    #[error("unknown operator kind `{0}` (expected identity, rademacher, rd or css)")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    #[serde(alias = "classic")]
    Identity,
    Rademacher,
    #[serde(rename = "rd")]
    RandomDemodulator,
    Css,
}

impl OperatorKind {
    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::Identity => "identity",
            OperatorKind::Rademacher => "rademacher",
            OperatorKind::RandomDemodulator => "rd",
            OperatorKind::Css => "css",
        }
    }

    /// Whether building this operator consumes randomness.
    pub fn is_random(self) -> bool {
        matches!(self, OperatorKind::Rademacher | OperatorKind::RandomDemodulator)
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperatorKind {
    type Err = SamplingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "identity" | "classic" => Ok(OperatorKind::Identity),
            "rademacher" => Ok(OperatorKind::Rademacher),
            "rd" | "random-demodulator" => Ok(OperatorKind::RandomDemodulator),
            "css" => Ok(OperatorKind::Css),
            _ => Err(SamplingError::UnknownKind(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Realization {
    Identity,
    /// Accumulate-and-dump, row `r` sums columns `bounds[r]..bounds[r + 1]`.
    Blocks { bounds: Vec<usize> },
    /// `H D` with chipping sequence `chips`.
    Demodulator { bounds: Vec<usize>, chips: Vec<i8> },
    /// Row-major dense `M x N`.
    Dense { entries: Vec<f64> },
}

/// Real `M x N` measurement matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOperator {
    kind: OperatorKind,
    n: usize,
    m_rows: usize,
    realization: Realization,
}

/// Rows for subsampling ratio `kappa`: `round(n / kappa)`.
pub fn rows_for_ratio(n: usize, kappa: u32) -> usize {
    if kappa == 0 {
        return 0;
    }
    (n as f64 / kappa as f64).round() as usize
}

fn block_bounds(n: usize, m: usize) -> Vec<usize> {
    let width = n as f64 / m as f64;
    (0..=m).map(|r| (r as f64 * width).round() as usize).collect()
}

/// Builds `Theta_kappa` with `M = round(n / kappa)` rows.
pub fn build_operator<R: Rng + ?Sized>(
    kind: OperatorKind,
    n: usize,
    kappa: u32,
    rng: &mut R,
) -> Result<MeasurementOperator, SamplingError> {
    let rows = rows_for_ratio(n, kappa);
    if kappa == 0 || rows == 0 || kappa as usize > n {
        return Err(SamplingError::InvalidRatio {
            kappa: kappa as f64,
            n,
            rows,
        });
    }
    if kind == OperatorKind::Identity && kappa != 1 {
        return Err(SamplingError::InvalidRatio {
            kappa: kappa as f64,
            n,
            rows,
        });
    }
    build_operator_with_rows(kind, n, rows, rng)
}

/// Builds an operator with an explicit row count (phase-transition grids).
/// The identity requires `m_rows == n`.
pub fn build_operator_with_rows<R: Rng + ?Sized>(
    kind: OperatorKind,
    n: usize,
    m_rows: usize,
    rng: &mut R,
) -> Result<MeasurementOperator, SamplingError> {
    if m_rows == 0 || m_rows > n || (kind == OperatorKind::Identity && m_rows != n) {
        return Err(SamplingError::InvalidRatio {
            kappa: n as f64 / m_rows.max(1) as f64,
            n,
            rows: m_rows,
        });
    }
    let realization = match kind {
        OperatorKind::Identity => Realization::Identity,
        OperatorKind::Css => Realization::Blocks {
            bounds: block_bounds(n, m_rows),
        },
        OperatorKind::RandomDemodulator => Realization::Demodulator {
            bounds: block_bounds(n, m_rows),
            chips: random_signs(rng, n),
        },
        OperatorKind::Rademacher => Realization::Dense {
            entries: random_signs(rng, n * m_rows)
                .into_iter()
                .map(f64::from)
                .collect(),
        },
    };
    Ok(MeasurementOperator {
        kind,
        n,
        m_rows,
        realization,
    })
}

fn random_signs<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<i8> {
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let word: u64 = rng.random();
        let take = (len - out.len()).min(64);
        out.extend((0..take).map(|b| if (word >> b) & 1 == 0 { 1i8 } else { -1i8 }));
    }
    out
}

impl MeasurementOperator {
    /// Random demodulator with a given chipping sequence.
    pub fn random_demodulator(n: usize, m_rows: usize, chips: Vec<i8>) -> Result<Self, SamplingError> {
        if chips.len() != n {
            return Err(SamplingError::DimensionMismatch {
                expected: n,
                got: chips.len(),
            });
        }
        if m_rows == 0 || m_rows > n {
            return Err(SamplingError::InvalidRatio {
                kappa: n as f64 / m_rows.max(1) as f64,
                n,
                rows: m_rows,
            });
        }
        Ok(Self {
            kind: OperatorKind::RandomDemodulator,
            n,
            m_rows,
            realization: Realization::Demodulator {
                bounds: block_bounds(n, m_rows),
                chips,
            },
        })
    }

    /// Rademacher operator from explicit row-major entries.
    pub fn rademacher_from_rows(m_rows: usize, n: usize, entries: Vec<f64>) -> Result<Self, SamplingError> {
        if entries.len() != m_rows * n {
            return Err(SamplingError::DimensionMismatch {
                expected: m_rows * n,
                got: entries.len(),
            });
        }
        Ok(Self {
            kind: OperatorKind::Rademacher,
            n,
            m_rows,
            realization: Realization::Dense { entries },
        })
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    /// Ambient dimension `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of measurements `M`.
    pub fn rows(&self) -> usize {
        self.m_rows
    }

    /// Effective ratio `N / M`.
    pub fn ratio(&self) -> f64 {
        self.n as f64 / self.m_rows as f64
    }

    /// Chipping sequence of a random demodulator.
    pub fn chipping(&self) -> Option<&[i8]> {
        match &self.realization {
            Realization::Demodulator { chips, .. } => Some(chips),
            _ => None,
        }
    }

    /// Row boundaries of accumulate-and-dump operators.
    pub fn block_bounds(&self) -> Option<&[usize]> {
        match &self.realization {
            Realization::Blocks { bounds } | Realization::Demodulator { bounds, .. } => Some(bounds),
            _ => None,
        }
    }

    /// `y = Theta x`, real and imaginary parts alike.
    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>, SamplingError> {
        if x.len() != self.n {
            return Err(SamplingError::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(match &self.realization {
            Realization::Identity => x.to_vec(),
            Realization::Blocks { bounds } => bounds
                .windows(2)
                .map(|w| x[w[0]..w[1]].iter().sum())
                .collect(),
            Realization::Demodulator { bounds, chips } => bounds
                .windows(2)
                .map(|w| {
                    (w[0]..w[1])
                        .map(|i| x[i] * chips[i] as f64)
                        .sum()
                })
                .collect(),
            Realization::Dense { entries } => entries
                .chunks_exact(self.n)
                .map(|row| {
                    let mut acc = Complex64::default();
                    for (a, v) in row.iter().zip(x) {
                        acc.re += a * v.re;
                        acc.im += a * v.im;
                    }
                    acc
                })
                .collect(),
        })
    }

    /// `Theta^T y`.
    pub fn apply_transpose(&self, y: &[Complex64]) -> Result<Vec<Complex64>, SamplingError> {
        if y.len() != self.m_rows {
            return Err(SamplingError::DimensionMismatch {
                expected: self.m_rows,
                got: y.len(),
            });
        }
        let mut out = vec![Complex64::default(); self.n];
        match &self.realization {
            Realization::Identity => out.copy_from_slice(y),
            Realization::Blocks { bounds } => {
                for (r, w) in bounds.windows(2).enumerate() {
                    out[w[0]..w[1]].fill(y[r]);
                }
            }
            Realization::Demodulator { bounds, chips } => {
                for (r, w) in bounds.windows(2).enumerate() {
                    for i in w[0]..w[1] {
                        out[i] = y[r] * chips[i] as f64;
                    }
                }
            }
            Realization::Dense { entries } => {
                for (row, v) in entries.chunks_exact(self.n).zip(y) {
                    for (o, a) in out.iter_mut().zip(row) {
                        o.re += a * v.re;
                        o.im += a * v.im;
                    }
                }
            }
        }
        Ok(out)
    }

    /// `Theta v` for a real vector `v` of length `N`.
    pub fn apply_real(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.n);
        debug_assert_eq!(out.len(), self.m_rows);
        match &self.realization {
            Realization::Identity => out.copy_from_slice(v),
            Realization::Blocks { bounds } => {
                for (o, w) in out.iter_mut().zip(bounds.windows(2)) {
                    *o = v[w[0]..w[1]].iter().sum();
                }
            }
            Realization::Demodulator { bounds, chips } => {
                for (o, w) in out.iter_mut().zip(bounds.windows(2)) {
                    *o = (w[0]..w[1]).map(|i| v[i] * chips[i] as f64).sum();
                }
            }
            Realization::Dense { entries } => {
                for (o, row) in out.iter_mut().zip(entries.chunks_exact(self.n)) {
                    *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
                }
            }
        }
    }

    /// Row-major dense copy of `Theta`.
    pub fn to_dense(&self) -> Vec<f64> {
        let (m, n) = (self.m_rows, self.n);
        let mut d = vec![0.0; m * n];
        match &self.realization {
            Realization::Identity => {
                for i in 0..n {
                    d[i * n + i] = 1.0;
                }
            }
            Realization::Blocks { bounds } => {
                for (r, w) in bounds.windows(2).enumerate() {
                    d[r * n + w[0]..r * n + w[1]].fill(1.0);
                }
            }
            Realization::Demodulator { bounds, chips } => {
                for (r, w) in bounds.windows(2).enumerate() {
                    for i in w[0]..w[1] {
                        d[r * n + i] = chips[i] as f64;
                    }
                }
            }
            Realization::Dense { entries } => d.copy_from_slice(entries),
        }
        d
    }

    /// `Theta Theta^T`, row-major `M x M`.
    pub fn gram(&self) -> Vec<f64> {
        let m = self.m_rows;
        let mut g = vec![0.0; m * m];
        match &self.realization {
            Realization::Identity => {
                for i in 0..m {
                    g[i * m + i] = 1.0;
                }
            }
            Realization::Blocks { bounds } | Realization::Demodulator { bounds, .. } => {
                for (r, w) in bounds.windows(2).enumerate() {
                    g[r * m + r] = (w[1] - w[0]) as f64;
                }
            }
            Realization::Dense { entries } => {
                let n = self.n;
                for i in 0..m {
                    let ri = &entries[i * n..(i + 1) * n];
                    for j in 0..=i {
                        let rj = &entries[j * n..(j + 1) * n];
                        let v: f64 = ri.iter().zip(rj).map(|(a, b)| a * b).sum();
                        g[i * m + j] = v;
                        g[j * m + i] = v;
                    }
                }
            }
        }
        g
    }
}

/// `P = C^{-1}` with `C C^T = Theta Theta^T`, stored as the lower factor `C`
/// and applied by triangular solves.
#[derive(Debug, Clone, PartialEq)]
pub struct Prewhitener {
    m: usize,
    /// Row-major lower triangle.
    chol: Vec<f64>,
}

/// Prewhitener for operators with non-orthogonal rows; `None` for the
/// identity, random demodulator and CSS operators.
pub fn build_prewhitener(op: &MeasurementOperator) -> Result<Option<Prewhitener>, SamplingError> {
    match op.kind() {
        OperatorKind::Rademacher => Prewhitener::from_gram(op.rows(), &op.gram()).map(Some),
        _ => Ok(None),
    }
}

impl Prewhitener {
    /// Cholesky factorization of a row-major symmetric `m x m` matrix.
    pub fn from_gram(m: usize, gram: &[f64]) -> Result<Self, SamplingError> {
        if gram.len() != m * m {
            return Err(SamplingError::DimensionMismatch {
                expected: m * m,
                got: gram.len(),
            });
        }
        let mut l = vec![0.0; m * m];
        for j in 0..m {
            let mut d = gram[j * m + j];
            for k in 0..j {
                d -= l[j * m + k] * l[j * m + k];
            }
            let scale = gram[j * m + j].abs().max(f64::MIN_POSITIVE);
            if !(d > 1e-12 * scale) {
                return Err(SamplingError::RankDeficient { pivot: j, value: d });
            }
            let djj = d.sqrt();
            l[j * m + j] = djj;
            for i in j + 1..m {
                let mut s = gram[i * m + j];
                for k in 0..j {
                    s -= l[i * m + k] * l[j * m + k];
                }
                l[i * m + j] = s / djj;
            }
        }
        Ok(Self { m, chol: l })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    /// Lower Cholesky factor `C`, row-major.
    pub fn cholesky(&self) -> &[f64] {
        &self.chol
    }

    /// `P y = C^{-1} y` by forward substitution.
    pub fn apply(&self, y: &[Complex64]) -> Vec<Complex64> {
        let m = self.m;
        assert_eq!(y.len(), m);
        let mut z = y.to_vec();
        for i in 0..m {
            let row = &self.chol[i * m..i * m + i];
            let mut acc = z[i];
            for (l, zk) in row.iter().zip(&z[..i]) {
                acc -= zk * *l;
            }
            z[i] = acc / self.chol[i * m + i];
        }
        z
    }

    /// Real-vector variant of [`Prewhitener::apply`], in place.
    pub fn apply_real_in_place(&self, v: &mut [f64]) {
        let m = self.m;
        for i in 0..m {
            let row = &self.chol[i * m..i * m + i];
            let acc: f64 = row.iter().zip(&v[..i]).map(|(l, x)| l * x).sum();
            v[i] = (v[i] - acc) / self.chol[i * m + i];
        }
    }

    /// `P^T y = C^{-T} y` by back substitution.
    pub fn apply_transpose(&self, y: &[Complex64]) -> Vec<Complex64> {
        let m = self.m;
        assert_eq!(y.len(), m);
        let mut z = y.to_vec();
        for i in (0..m).rev() {
            let zi = z[i] / self.chol[i * m + i];
            z[i] = zi;
            for k in 0..i {
                let l = self.chol[i * m + k];
                z[k] -= zi * l;
            }
        }
        z
    }

    /// Explicit `P = C^{-1}`, row-major. For inspection and tests.
    pub fn matrix(&self) -> Vec<f64> {
        let m = self.m;
        let mut p = vec![0.0; m * m];
        let mut e = vec![0.0; m];
        for j in 0..m {
            e.fill(0.0);
            e[j] = 1.0;
            self.apply_real_in_place(&mut e);
            for i in 0..m {
                p[i * m + j] = e[i];
            }
        }
        p
    }
}
