//! Subspace Pursuit over a real sensing matrix with complex observations.

pub mod cost;
pub mod lstsq;

use faer::Mat;
use num_complex::Complex64;
use thiserror::Error;

use crate::gold::GoldDictionary;
use crate::sampling::{MeasurementOperator, Prewhitener};

pub use cost::{predicted_cost, ComplexityModel, LineItems, PredictedCost};
use lstsq::{LstsqFailure, LstsqRoute};

#[derive(Debug, Error, PartialEq)]
pub enum PursuitError {
    #[error("sparsity {s} must satisfy 1 <= S <= M = {m}")]
    InvalidSparsity { s: usize, m: usize },
    #[error("observation length {got} does not match {expected} rows")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("observation contains non-finite values")]
    NonFinite,
    #[error("least-squares subproblem on {columns} columns is singular ({reason})")]
    SingularSubproblem { columns: usize, reason: String },
}

/// Real `M x N` matrix accessed through correlations and single columns.
pub trait SensingMatrix: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// `A^T y`.
    fn correlate(&self, y: &[Complex64]) -> Vec<Complex64>;
    /// Writes column `j` into `out` (length `rows()`).
    fn column_into(&self, j: usize, out: &mut [f64]);
}

/// Column-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// From row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), rows * cols);
        Self::from_fn(rows, cols, |i, j| entries[i * cols + j])
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    /// `A x` for complex `x`.
    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols);
        let mut out = vec![Complex64::default(); self.rows];
        for (j, xj) in x.iter().enumerate() {
            if *xj == Complex64::default() {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.column(j)) {
                o.re += a * xj.re;
                o.im += a * xj.im;
            }
        }
        out
    }
}

impl SensingMatrix for DenseMatrix {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn correlate(&self, y: &[Complex64]) -> Vec<Complex64> {
        (0..self.cols)
            .map(|j| {
                let (mut re, mut im) = (0.0, 0.0);
                for (a, v) in self.column(j).iter().zip(y) {
                    re += a * v.re;
                    im += a * v.im;
                }
                Complex64::new(re, im)
            })
            .collect()
    }

    fn column_into(&self, j: usize, out: &mut [f64]) {
        out.copy_from_slice(self.column(j));
    }
}

/// `A = P Theta Psi` applied in factored form; `P` is optional.
#[derive(Debug, Clone, Copy)]
pub struct ReceiverMatrix<'a> {
    pub dictionary: &'a GoldDictionary,
    pub operator: &'a MeasurementOperator,
    pub whitener: Option<&'a Prewhitener>,
}

impl<'a> ReceiverMatrix<'a> {
    pub fn new(
        dictionary: &'a GoldDictionary,
        operator: &'a MeasurementOperator,
        whitener: Option<&'a Prewhitener>,
    ) -> Self {
        assert_eq!(dictionary.len(), operator.n());
        if let Some(p) = whitener {
            assert_eq!(p.dim(), operator.rows());
        }
        Self {
            dictionary,
            operator,
            whitener,
        }
    }

    pub fn materialize(&self) -> DenseMatrix {
        let (m, n) = (self.rows(), self.cols());
        let mut data = vec![0.0; m * n];
        for (j, col) in data.chunks_exact_mut(m).enumerate() {
            self.column_into(j, col);
        }
        DenseMatrix { rows: m, cols: n, data }
    }
}

impl SensingMatrix for ReceiverMatrix<'_> {
    fn rows(&self) -> usize {
        self.operator.rows()
    }

    fn cols(&self) -> usize {
        self.dictionary.len()
    }

    fn correlate(&self, y: &[Complex64]) -> Vec<Complex64> {
        let whitened;
        let y = match self.whitener {
            Some(p) => {
                whitened = p.apply_transpose(y);
                &whitened[..]
            }
            None => y,
        };
        let back = self
            .operator
            .apply_transpose(y)
            .expect("observation length matches operator rows");
        self.dictionary.correlate(&back)
    }

    fn column_into(&self, j: usize, out: &mut [f64]) {
        let code: Vec<f64> = self.dictionary.column(j).iter().map(|&c| c as f64).collect();
        self.operator.apply_real(&code, out);
        if let Some(p) = self.whitener {
            p.apply_real_in_place(out);
        }
    }
}

/// How the initial residual is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitResidual {
    /// `y - A_T A_T^T y`.
    #[default]
    Transpose,
    /// `y - A_T A_T^+ y`.
    LeastSquares,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PursuitOptions {
    pub init: InitResidual,
    /// Defaults to `max(S, 100)`.
    pub max_iterations: Option<usize>,
}

impl PursuitOptions {
    pub fn iteration_cap(&self, sparsity: usize) -> usize {
        self.max_iterations.unwrap_or(sparsity.max(100))
    }
}

pub struct PursuitProblem<'a, A: SensingMatrix + ?Sized> {
    pub a: &'a A,
    pub y: &'a [Complex64],
    pub sparsity: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The residual did not decrease; the previous iterate was returned.
    ResidualStalled,
    IterationCap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PursuitResult {
    pub alpha_hat: Vec<Complex64>,
    /// Ascending indices, `|support| = S`.
    pub support: Vec<usize>,
    /// Loop iterations executed, `K`.
    pub iterations: usize,
    /// `||y_r||` for the initial residual and each accepted iteration.
    pub residual_norms: Vec<f64>,
    pub stop: StopReason,
    /// Number of subproblems that needed the SVD route.
    pub svd_fallbacks: usize,
}

impl PursuitResult {
    /// `(trial, iteration, residual norm)` rows.
    pub fn trace(&self, trial: usize) -> Vec<(usize, usize, f64)> {
        self.residual_norms
            .iter()
            .enumerate()
            .map(|(l, &r)| (trial, l, r))
            .collect()
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Indices of the `s` largest magnitudes; ties go to the lower index.
/// Returned ascending.
pub fn top_indices(magnitudes: &[f64], s: usize) -> Vec<usize> {
    let s = s.min(magnitudes.len());
    if s == 0 {
        return Vec::new();
    }
    let mut idx: Vec<usize> = (0..magnitudes.len()).collect();
    let cmp = |a: &usize, b: &usize| {
        magnitudes[*b]
            .partial_cmp(&magnitudes[*a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(b))
    };
    if s < idx.len() {
        idx.select_nth_unstable_by(s - 1, cmp);
        idx.truncate(s);
    }
    idx.sort_unstable();
    idx
}

struct Workspace<'a, A: SensingMatrix + ?Sized> {
    a: &'a A,
    rhs: Mat<f64>,
    fallbacks: usize,
}

impl<A: SensingMatrix + ?Sized> Workspace<'_, A> {
    fn columns(&self, support: &[usize]) -> Mat<f64> {
        let m = self.a.rows();
        let mut cols = Mat::<f64>::zeros(m, support.len());
        for (k, &j) in support.iter().enumerate() {
            self.a.column_into(j, cols.col_as_slice_mut(k));
        }
        cols
    }

    /// Least-squares coefficients of `y` on `support` and the fitted columns.
    fn fit(&mut self, support: &[usize]) -> Result<(Vec<Complex64>, Mat<f64>), PursuitError> {
        let cols = self.columns(support);
        let (x, route) = lstsq::solve(&cols, &self.rhs).map_err(|e| PursuitError::SingularSubproblem {
            columns: support.len(),
            reason: match e {
                LstsqFailure::SvdNoConvergence => "svd did not converge".into(),
                LstsqFailure::NonFinite => "non-finite solution".into(),
            },
        })?;
        if route == LstsqRoute::Svd {
            self.fallbacks += 1;
        }
        let coef = (0..support.len())
            .map(|k| Complex64::new(x[(k, 0)], x[(k, 1)]))
            .collect();
        Ok((coef, cols))
    }

    fn residual(&self, y: &[Complex64], cols: &Mat<f64>, coef: &[Complex64]) -> Vec<Complex64> {
        let mut r = y.to_vec();
        for (k, c) in coef.iter().enumerate() {
            for (ri, a) in r.iter_mut().zip(cols.col_as_slice(k)) {
                ri.re -= a * c.re;
                ri.im -= a * c.im;
            }
        }
        r
    }
}

/// Subspace Pursuit. Iterates until the residual norm stops decreasing,
/// returning the last iterate that decreased it, or until the iteration cap.
pub fn subspace_pursuit<A: SensingMatrix + ?Sized>(
    problem: &PursuitProblem<'_, A>,
    options: &PursuitOptions,
) -> Result<PursuitResult, PursuitError> {
    let a = problem.a;
    let y = problem.y;
    let s = problem.sparsity;
    let (m, n) = (a.rows(), a.cols());
    if y.len() != m {
        return Err(PursuitError::DimensionMismatch {
            expected: m,
            got: y.len(),
        });
    }
    if s == 0 || s > m {
        return Err(PursuitError::InvalidSparsity { s, m });
    }
    if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(PursuitError::NonFinite);
    }
    let cap = options.iteration_cap(s);

    let mut ws = Workspace {
        a,
        rhs: Mat::from_fn(m, 2, |i, j| if j == 0 { y[i].re } else { y[i].im }),
        fallbacks: 0,
    };

    let corr = a.correlate(y);
    let mags: Vec<f64> = corr.iter().map(|c| c.norm_sqr()).collect();
    let mut support = top_indices(&mags, s);
    let (mut residual, mut coef) = match options.init {
        InitResidual::Transpose => {
            let cols = ws.columns(&support);
            let proj: Vec<Complex64> = support.iter().map(|&j| corr[j]).collect();
            (ws.residual(y, &cols, &proj), None)
        }
        InitResidual::LeastSquares => {
            let (c, cols) = ws.fit(&support)?;
            (ws.residual(y, &cols, &c), Some(c))
        }
    };
    let mut residual_norms = vec![norm(&residual)];
    let mut iterations = 0;
    let mut stop = StopReason::IterationCap;

    while iterations < cap {
        iterations += 1;
        let corr = a.correlate(&residual);
        let mags: Vec<f64> = corr.iter().map(|c| c.norm_sqr()).collect();
        let mut candidates = top_indices(&mags, s);
        candidates.extend_from_slice(&support);
        candidates.sort_unstable();
        candidates.dedup();

        let (wide, _) = ws.fit(&candidates)?;
        let wide_mags: Vec<f64> = wide.iter().map(|c| c.norm_sqr()).collect();
        let next: Vec<usize> = top_indices(&wide_mags, s)
            .into_iter()
            .map(|k| candidates[k])
            .collect();
        let (next_coef, cols) = ws.fit(&next)?;
        let next_residual = ws.residual(y, &cols, &next_coef);
        let next_norm = norm(&next_residual);
        if next_norm >= *residual_norms.last().expect("initial norm present") {
            stop = StopReason::ResidualStalled;
            break;
        }
        support = next;
        coef = Some(next_coef);
        residual = next_residual;
        residual_norms.push(next_norm);
    }

    let coef = match coef {
        Some(c) => c,
        None => ws.fit(&support)?.0,
    };
    let mut alpha_hat = vec![Complex64::default(); n];
    for (&j, c) in support.iter().zip(&coef) {
        alpha_hat[j] = *c;
    }
    Ok(PursuitResult {
        alpha_hat,
        support,
        iterations,
        residual_norms,
        stop,
        svd_fallbacks: ws.fallbacks,
    })
}
