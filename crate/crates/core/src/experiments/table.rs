//! Result rows and their CSV / JSON forms.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentSpec;
use super::ExperimentError;

pub const FORMAT_VERSION: u32 = 1;

/// Columns that depend on the machine rather than the seed.
pub const TIMING_COLUMNS: [&str; 2] = ["mean_solve_s", "wall_clock_s"];

/// One grid point of one curve. Fields not meaningful for an experiment
/// kind are left empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub curve: String,
    pub operator: String,
    pub kappa: u32,
    pub m: u32,
    pub n: usize,
    pub m_rows: usize,
    pub sparsity: usize,
    pub sparsity_fed: usize,
    pub quantizer_bits: Option<u32>,
    pub prewhiten: bool,
    pub snr_db: Option<f64>,
    pub ebn0_db: Option<f64>,
    pub delta: Option<f64>,
    pub rho: Option<f64>,
    pub trials: u64,
    pub bits: Option<u64>,
    pub errors: Option<u64>,
    pub ber: Option<f64>,
    pub success_rate: Option<f64>,
    pub std_error: f64,
    pub mean_iterations: f64,
    pub capped: bool,
    pub predicted_flops: Option<f64>,
    pub predicted_cost: Option<f64>,
    pub seed: u64,
    pub format_version: u32,
    pub mean_solve_s: f64,
    pub wall_clock_s: f64,
}

impl ResultRow {
    /// The row with timing columns zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            mean_solve_s: 0.0,
            wall_clock_s: 0.0,
            ..self.clone()
        }
    }
}

/// 0.5-crossing of the success rate along ascending sparsity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourPoint {
    pub curve: String,
    pub delta: f64,
    /// `None` when the success rate never crosses 0.5 inside the grid.
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityFit {
    pub curve: String,
    /// Seconds per flop.
    pub seconds_per_flop: f64,
    /// Seconds per iteration of fixed overhead.
    pub seconds_per_iteration: f64,
    /// Overhead per iteration in flop units.
    pub c: f64,
    /// Pearson correlation of measured and predicted time maps.
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    #[serde(default)]
    pub contours: Vec<ContourPoint>,
    #[serde(default)]
    pub complexity: Vec<ComplexityFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub format_version: u32,
    pub spec: ExperimentSpec,
    pub rows: Vec<ResultRow>,
    pub summary: Summary,
}

impl ResultTable {
    pub fn new(spec: ExperimentSpec, rows: Vec<ResultRow>, summary: Summary) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            spec,
            rows,
            summary,
        }
    }

    pub fn rows_for<'a>(&'a self, curve: &'a str) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows.iter().filter(move |r| r.curve == curve)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), ExperimentError> {
        write_rows_csv(&self.rows, w)
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<(), ExperimentError> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self, ExperimentError> {
        let t: Self = serde_json::from_reader(r)?;
        if t.format_version != FORMAT_VERSION {
            return Err(ExperimentError::Format(format!(
                "unsupported format version {}",
                t.format_version
            )));
        }
        Ok(t)
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`, plus
    /// `<stem>-contour.csv` when the table has transition contours.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<(), ExperimentError> {
        std::fs::create_dir_all(dir)?;
        self.write_csv(std::fs::File::create(dir.join(format!("{stem}.csv")))?)?;
        self.write_json(std::io::BufWriter::new(std::fs::File::create(
            dir.join(format!("{stem}.json")),
        )?))?;
        if !self.summary.contours.is_empty() {
            write_contours_csv(
                &self.summary.contours,
                std::fs::File::create(dir.join(format!("{stem}-contour.csv")))?,
            )?;
        }
        Ok(())
    }
}

pub fn write_rows_csv<W: Write>(rows: &[ResultRow], w: W) -> Result<(), ExperimentError> {
    let mut out = csv::Writer::from_writer(w);
    if rows.is_empty() {
        out.write_record(header())?;
    }
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// `curve,delta,rho` rows; `rho` is empty where no crossing was found.
pub fn write_contours_csv<W: Write>(points: &[ContourPoint], w: W) -> Result<(), ExperimentError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["curve", "delta", "rho"])?;
    for p in points {
        out.serialize((&p.curve, p.delta, p.rho))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_rows_csv<R: Read>(r: R) -> Result<Vec<ResultRow>, ExperimentError> {
    let mut rd = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for rec in rd.deserialize() {
        let row: ResultRow = rec?;
        if row.format_version != FORMAT_VERSION {
            return Err(ExperimentError::Format(format!(
                "unsupported format version {}",
                row.format_version
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn header() -> Vec<&'static str> {
    vec![
        "experiment",
        "curve",
        "operator",
        "kappa",
        "m",
        "n",
        "m_rows",
        "sparsity",
        "sparsity_fed",
        "quantizer_bits",
        "prewhiten",
        "snr_db",
        "ebn0_db",
        "delta",
        "rho",
        "trials",
        "bits",
        "errors",
        "ber",
        "success_rate",
        "std_error",
        "mean_iterations",
        "capped",
        "predicted_flops",
        "predicted_cost",
        "seed",
        "format_version",
        "mean_solve_s",
        "wall_clock_s",
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample_row() -> ResultRow {
        ResultRow {
            experiment: "ber_discrete".into(),
            curve: "classic".into(),
            operator: "identity".into(),
            kappa: 1,
            m: 5,
            n: 31,
            m_rows: 31,
            sparsity: 1,
            sparsity_fed: 1,
            quantizer_bits: None,
            prewhiten: false,
            snr_db: Some(-3.0),
            ebn0_db: Some(8.9),
            delta: None,
            rho: None,
            trials: 100,
            bits: Some(200),
            errors: Some(3),
            ber: Some(0.015),
            success_rate: None,
            std_error: 0.0086,
            mean_iterations: 1.2,
            capped: false,
            predicted_flops: None,
            predicted_cost: None,
            seed: 9,
            format_version: FORMAT_VERSION,
            mean_solve_s: 1e-5,
            wall_clock_s: 0.5,
        }
    }

    #[test]
    fn csv_round_trip_and_header() {
        let rows = vec![sample_row()];
        let mut buf = Vec::new();
        write_rows_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), header().join(","));
        assert!(text.lines().next().unwrap().ends_with("wall_clock_s"));
        assert_eq!(read_rows_csv(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn empty_table_still_has_header() {
        let mut buf = Vec::new();
        write_rows_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim(), header().join(","));
    }
}
