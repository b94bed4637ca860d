//! Reference transition contour shipped under `data/`.

use super::ExperimentError;

const TRANSITION_CSV: &str = include_str!("../../../../data/transition_reference.csv");

/// Piecewise-linear `rho(delta)` contour.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceContour {
    points: Vec<(f64, f64)>,
}

impl ReferenceContour {
    /// The shipped contour.
    pub fn shipped() -> Self {
        Self::parse(TRANSITION_CSV).expect("shipped reference data parses")
    }

    /// Reads `delta,rho` rows; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let mut rd = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut points = Vec::new();
        for rec in rd.deserialize() {
            let (d, r): (f64, f64) = rec?;
            points.push((d, r));
        }
        if points.len() < 2 {
            return Err(ExperimentError::Reference("need at least two points".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(ExperimentError::Reference("delta must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Linear interpolation; `None` outside the tabulated range.
    pub fn rho_at(&self, delta: f64) -> Option<f64> {
        let p = &self.points;
        if delta < p[0].0 || delta > p[p.len() - 1].0 {
            return None;
        }
        let i = p.partition_point(|q| q.0 < delta);
        if p[i].0 == delta {
            return Some(p[i].1);
        }
        let ((d0, r0), (d1, r1)) = (p[i - 1], p[i]);
        Some(r0 + (r1 - r0) * (delta - d0) / (d1 - d0))
    }
}
