//! Dense least squares for the small subproblems inside the pursuit loop.
//!
//! Column-pivoted Householder QR is the default route. When the pivoted `R`
//! has a condition estimate above [`CONDITION_LIMIT`], or the system is
//! underdetermined, the minimum-norm solution is taken from a thin SVD.

use faer::linalg::solvers::SolveLstsq;
use faer::Mat;

pub const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LstsqRoute {
    PivotedQr,
    Svd,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LstsqFailure {
    SvdNoConvergence,
    NonFinite,
}

/// Solves `min ||a x - rhs||` column by column. `a` is `m x k`, `rhs` is
/// `m x r`; the result is `k x r`.
pub fn solve(a: &Mat<f64>, rhs: &Mat<f64>) -> Result<(Mat<f64>, LstsqRoute), LstsqFailure> {
    let (m, k) = (a.nrows(), a.ncols());
    debug_assert_eq!(rhs.nrows(), m);
    if k == 0 {
        return Ok((Mat::zeros(0, rhs.ncols()), LstsqRoute::PivotedQr));
    }
    if m >= k {
        let qr = a.col_piv_qr();
        let r = qr.thin_R();
        let first = r[(0, 0)].abs();
        let last = r[(k - 1, k - 1)].abs();
        if first > 0.0 && last * CONDITION_LIMIT > first {
            let x = qr.solve_lstsq(rhs);
            if x.col_iter().all(|c| c.iter().all(|v| v.is_finite())) {
                return Ok((x, LstsqRoute::PivotedQr));
            }
        }
    }
    svd_min_norm(a, rhs).map(|x| (x, LstsqRoute::Svd))
}

fn svd_min_norm(a: &Mat<f64>, rhs: &Mat<f64>) -> Result<Mat<f64>, LstsqFailure> {
    let (m, k) = (a.nrows(), a.ncols());
    let svd = a.thin_svd().map_err(|_| LstsqFailure::SvdNoConvergence)?;
    let s = svd.S().column_vector();
    let smax = (0..s.nrows()).map(|i| s[i].abs()).fold(0.0, f64::max);
    let tol = smax * (m.max(k) as f64) * f64::EPSILON;
    // x = V diag(1/s) U^T rhs over the retained singular values.
    let mut coeffs = svd.U().transpose() * rhs;
    for i in 0..coeffs.nrows() {
        let si = s[i];
        let inv = if si > tol { 1.0 / si } else { 0.0 };
        for j in 0..coeffs.ncols() {
            coeffs[(i, j)] *= inv;
        }
    }
    let x = svd.V() * coeffs;
    if x.col_iter().all(|c| c.iter().all(|v| v.is_finite())) {
        Ok(x)
    } else {
        Err(LstsqFailure::NonFinite)
    }
}
