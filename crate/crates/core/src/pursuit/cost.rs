//! Flop model of the pursuit loop.

use serde::{Deserialize, Serialize};

/// Overhead constant per iteration used when none is fitted.
pub const DEFAULT_OVERHEAD: f64 = 3e9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityModel {
    pub k: u64,
    pub s: u64,
    pub m_rows: u64,
    pub n: u64,
    pub c: f64,
}

/// Individual contributions, in flops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineItems {
    pub init_correlation: u128,
    pub init_residual: u128,
    pub loop_correlations: u128,
    pub loop_candidate_lstsq: u128,
    pub loop_residuals: u128,
}

impl LineItems {
    pub fn sum(&self) -> u128 {
        self.init_correlation
            + self.init_residual
            + self.loop_correlations
            + self.loop_candidate_lstsq
            + self.loop_residuals
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedCost {
    pub line_items: LineItems,
    pub line_item_total: u128,
    pub closed_form_total: u128,
    /// `c * K`, reported separately from the flop count.
    pub overhead: f64,
}

impl PredictedCost {
    pub fn with_overhead(&self) -> f64 {
        self.closed_form_total as f64 + self.overhead
    }
}

/// Least squares with `s` unknowns and `m` equations through the SVD.
pub fn lstsq_svd_cost(m: u64, s: u64) -> u128 {
    let (m, s) = (m as u128, s as u128);
    2 * m * s * s + 11 * s * s * s
}

impl ComplexityModel {
    pub fn new(k: u64, s: u64, m_rows: u64, n: u64) -> Self {
        Self {
            k,
            s,
            m_rows,
            n,
            c: DEFAULT_OVERHEAD,
        }
    }

    pub fn with_overhead(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn line_items(&self) -> LineItems {
        let (k, s, m, n) = (
            self.k as u128,
            self.s as u128,
            self.m_rows as u128,
            self.n as u128,
        );
        LineItems {
            init_correlation: 4 * m * n,
            init_residual: 2 * m + 8 * m * s,
            loop_correlations: 4 * k * m * n,
            loop_candidate_lstsq: k * lstsq_svd_cost(self.m_rows, 2 * self.s),
            loop_residuals: k * (2 * m + 4 * m * s + lstsq_svd_cost(self.m_rows, self.s)),
        }
    }

    /// `99KS^3 + 4(K+1)MN + 2(K+1)M + 4(K+2)MS + 10MKS^2`.
    pub fn closed_form(&self) -> u128 {
        let (k, s, m, n) = (
            self.k as u128,
            self.s as u128,
            self.m_rows as u128,
            self.n as u128,
        );
        99 * k * s * s * s
            + 4 * (k + 1) * m * n
            + 2 * (k + 1) * m
            + 4 * (k + 2) * m * s
            + 10 * m * k * s * s
    }
}

pub fn predicted_cost(model: &ComplexityModel) -> PredictedCost {
    let line_items = model.line_items();
    PredictedCost {
        line_items,
        line_item_total: line_items.sum(),
        closed_form_total: model.closed_form(),
        overhead: model.c * model.k as f64,
    }
}
