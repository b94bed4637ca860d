//! Location of the 0.5 success contour.

use super::table::{ContourPoint, ResultRow};

pub const LEVEL: f64 = 0.5;

/// First downward crossing of `LEVEL` along ascending `rho`, linearly
/// interpolated. `points` are `(rho, success_rate)`. `None` when the first
/// point is already below the level or no point falls below it.
pub fn crossing(points: &[(f64, f64)]) -> Option<f64> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.first()?.1 < LEVEL {
        return None;
    }
    pts.windows(2).find(|w| w[1].1 < LEVEL).map(|w| {
        let ((r0, p0), (r1, p1)) = (w[0], w[1]);
        r0 + (p0 - LEVEL) * (r1 - r0) / (p0 - p1)
    })
}

/// One contour point per (curve, delta) column of a phase-style table, in
/// order of first appearance.
pub fn transition_contours(rows: &[ResultRow]) -> Vec<ContourPoint> {
    let mut keys: Vec<(String, f64)> = Vec::new();
    for r in rows {
        if let (Some(d), Some(_), Some(_)) = (r.delta, r.rho, r.success_rate) {
            if !keys.iter().any(|(c, k)| *c == r.curve && *k == d) {
                keys.push((r.curve.clone(), d));
            }
        }
    }
    keys.into_iter()
        .map(|(curve, delta)| {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.curve == curve && r.delta == Some(delta))
                .filter_map(|r| Some((r.rho?, r.success_rate?)))
                .collect();
            ContourPoint {
                rho: crossing(&pts),
                curve,
                delta,
            }
        })
        .collect()
}

/// Contour of `curve` at the grid column nearest to `delta`.
pub fn contour_at<'a>(points: &'a [ContourPoint], curve: &str, delta: f64) -> Option<&'a ContourPoint> {
    points
        .iter()
        .filter(|p| p.curve == curve)
        .min_by(|a, b| (a.delta - delta).abs().total_cmp(&(b.delta - delta).abs()))
}
