//! SVG figures: semilog BER curves and heatmaps over the phase grid.

use std::path::{Path, PathBuf};

use plotters::prelude::*;

use super::contour;
use super::curves::{ber_points, XAxis};
use super::reference::ReferenceContour;
use super::table::ResultRow;
use super::ExperimentError;

const WIDTH: u32 = 800;
const HEIGHT: u32 = 600;

const PALETTE: [RGBColor; 8] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(255, 127, 14),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
    RGBColor(227, 119, 194),
    RGBColor(23, 190, 207),
];

fn plot_err<E: std::fmt::Debug>(e: E) -> ExperimentError {
    ExperimentError::Plot(format!("{e:?}"))
}

fn curve_names(rows: &[ResultRow]) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for r in rows {
        if !names.contains(&r.curve) {
            names.push(r.curve.clone());
        }
    }
    names
}

/// BER against SNR (discrete runs) or Eb/N0 (RF runs), one line per curve.
pub fn ber_svg(rows: &[ResultRow], title: &str) -> Result<String, ExperimentError> {
    let axis = if rows.iter().all(|r| r.experiment == "ber_discrete") {
        XAxis::SnrDb
    } else {
        XAxis::Ebn0Db
    };
    let names = curve_names(rows);
    let series: Vec<(String, Vec<(f64, f64)>)> = names
        .iter()
        .map(|n| {
            let pts = ber_points(rows.iter().filter(|r| &r.curve == n), axis);
            (n.clone(), pts.into_iter().filter(|p| p.1 > 0.0).collect())
        })
        .collect();
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.1.iter().copied()).collect();
    if all.is_empty() {
        return Err(ExperimentError::Plot("no nonzero BER points to plot".into()));
    }
    let (x0, x1) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.0), a.1.max(p.0)));
    let y0 = all.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let (x0, x1) = if x1 > x0 { (x0, x1) } else { (x0 - 1.0, x0 + 1.0) };
    let y_lo = 10f64.powf(y0.log10().floor());

    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (WIDTH, HEIGHT)).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 20))
            .margin(15)
            .x_label_area_size(40)
            .y_label_area_size(60)
            .build_cartesian_2d(x0..x1, (y_lo..0.5f64).log_scale())
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc(match axis {
                XAxis::SnrDb => "SNR [dB]",
                XAxis::Ebn0Db => "Eb/N0 [dB]",
            })
            .y_desc("BER")
            .y_label_formatter(&|v| format!("{v:.0e}"))
            .draw()
            .map_err(plot_err)?;
        for (i, (name, pts)) in series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            chart
                .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))
                .map_err(plot_err)?
                .label(name.as_str())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(svg)
}

/// Quantity shown by a heatmap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatValue {
    SuccessRate,
    Iterations,
}

/// Cell edges halfway between sorted grid values.
fn edges(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut e = Vec::with_capacity(n + 1);
    let first_gap = if n > 1 { values[1] - values[0] } else { 0.1 };
    e.push((values[0] - first_gap / 2.0).max(0.0));
    for w in values.windows(2) {
        e.push(0.5 * (w[0] + w[1]));
    }
    let last_gap = if n > 1 { values[n - 1] - values[n - 2] } else { 0.1 };
    e.push((values[n - 1] + last_gap / 2.0).min(1.0));
    e
}

/// Dark blue at 0 through yellow at 1.
fn heat(v: f64) -> RGBColor {
    let v = v.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * v).round() as u8;
    RGBColor(lerp(30.0, 250.0), lerp(30.0, 220.0), lerp(120.0, 40.0))
}

/// Heatmap of one curve over (delta, rho). Success maps carry the measured
/// 0.5 contour (red) and the reference contour (black).
pub fn heatmap_svg(rows: &[ResultRow], curve: &str, value: HeatValue, title: &str) -> Result<String, ExperimentError> {
    let cells: Vec<(f64, f64, f64)> = rows
        .iter()
        .filter(|r| r.curve == curve)
        .filter_map(|r| {
            let v = match value {
                HeatValue::SuccessRate => r.success_rate?,
                HeatValue::Iterations => r.mean_iterations,
            };
            Some((r.delta?, r.rho?, v))
        })
        .collect();
    if cells.is_empty() {
        return Err(ExperimentError::Plot(format!("curve '{curve}' has no grid rows")));
    }
    let mut deltas: Vec<f64> = cells.iter().map(|c| c.0).collect();
    let mut rhos: Vec<f64> = cells.iter().map(|c| c.1).collect();
    for v in [&mut deltas, &mut rhos] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    let (de, re) = (edges(&deltas), edges(&rhos));
    let scale = match value {
        HeatValue::SuccessRate => 1.0,
        HeatValue::Iterations => cells.iter().map(|c| c.2).fold(0.0, f64::max).max(1.0),
    };

    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (WIDTH, HEIGHT)).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 20))
            .margin(15)
            .x_label_area_size(40)
            .y_label_area_size(50)
            .build_cartesian_2d(0f64..1f64, 0f64..1f64)
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .disable_mesh()
            .x_desc("delta = M/N")
            .y_desc("rho = S/M")
            .draw()
            .map_err(plot_err)?;
        chart
            .draw_series(cells.iter().map(|&(d, r, v)| {
                let i = deltas.iter().position(|&x| x == d).unwrap_or(0);
                let j = rhos.iter().position(|&x| x == r).unwrap_or(0);
                Rectangle::new([(de[i], re[j]), (de[i + 1], re[j + 1])], heat(v / scale).filled())
            }))
            .map_err(plot_err)?;
        if value == HeatValue::SuccessRate {
            let measured: Vec<(f64, f64)> = contour::transition_contours(rows)
                .into_iter()
                .filter(|p| p.curve == curve)
                .filter_map(|p| Some((p.delta, p.rho?)))
                .collect();
            chart
                .draw_series(LineSeries::new(measured, RED.stroke_width(3)))
                .map_err(plot_err)?;
            let reference = ReferenceContour::shipped();
            chart
                .draw_series(LineSeries::new(reference.points().iter().copied(), BLACK.stroke_width(2)))
                .map_err(plot_err)?;
        }
        root.present().map_err(plot_err)?;
    }
    Ok(svg)
}

/// Writes the figures that fit the rows (BER curves or grid heatmaps) into
/// `dir` and returns their paths.
pub fn write_plots(rows: &[ResultRow], dir: &Path, stem: &str, title: &str) -> Result<Vec<PathBuf>, ExperimentError> {
    if rows.is_empty() {
        return Err(ExperimentError::Plot("nothing to plot".into()));
    }
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    let mut save = |name: String, svg: String| -> Result<(), ExperimentError> {
        let path = dir.join(name);
        std::fs::write(&path, svg)?;
        out.push(path);
        Ok(())
    };
    if rows.iter().any(|r| r.ber.is_some()) {
        save(format!("{stem}.svg"), ber_svg(rows, title)?)?;
    } else {
        for curve in curve_names(rows) {
            let heading = format!("{title}: {curve} success rate");
            save(
                format!("{stem}-{curve}-success.svg"),
                heatmap_svg(rows, &curve, HeatValue::SuccessRate, &heading)?,
            )?;
            let heading = format!("{title}: {curve} mean iterations");
            save(
                format!("{stem}-{curve}-iterations.svg"),
                heatmap_svg(rows, &curve, HeatValue::Iterations, &heading)?,
            )?;
        }
    }
    Ok(out)
}
