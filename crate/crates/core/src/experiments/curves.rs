//! Horizontal distances between BER curves.

use super::table::ResultRow;

/// Which column is the x axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XAxis {
    SnrDb,
    Ebn0Db,
}

/// `(x, ber)` points of one curve, ascending in `x`.
pub fn ber_points<'a>(rows: impl IntoIterator<Item = &'a ResultRow>, axis: XAxis) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = rows
        .into_iter()
        .filter_map(|r| {
            let x = match axis {
                XAxis::SnrDb => r.snr_db?,
                XAxis::Ebn0Db => r.ebn0_db?,
            };
            Some((x, r.ber?))
        })
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts
}

/// Where the curve first falls to `target`, interpolating `log10(ber)`
/// linearly in dB between the bracketing points. `None` when the curve does
/// not cross the target or the lower bracket has zero BER.
pub fn db_at_ber(points: &[(f64, f64)], target: f64) -> Option<f64> {
    let w = points.windows(2).find(|w| w[0].1 >= target && w[1].1 < target)?;
    let ((x0, b0), (x1, b1)) = (w[0], w[1]);
    if b0 == target {
        return Some(x0);
    }
    if b1 <= 0.0 {
        return None;
    }
    let (l0, l1, lt) = (b0.log10(), b1.log10(), target.log10());
    Some(x0 + (x1 - x0) * (l0 - lt) / (l0 - l1))
}

/// How many dB further right `later` reaches `target` than `earlier`.
pub fn horizontal_shift(earlier: &[(f64, f64)], later: &[(f64, f64)], target: f64) -> Option<f64> {
    Some(db_at_ber(later, target)? - db_at_ber(earlier, target)?)
}
