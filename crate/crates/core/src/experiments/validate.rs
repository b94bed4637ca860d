//! Pass/fail checks of result tables against the expected behaviour.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::complexity;
use super::contour;
use super::curves::{ber_points, db_at_ber, horizontal_shift, XAxis};
use super::reference::ReferenceContour;
use super::table::ResultRow;
use super::ExperimentError;
use crate::baseband::theory;
use crate::baseband::BerAxis;

/// BER at which theory and noise-folding shifts are read.
pub const SHIFT_BER: f64 = 1e-3;
/// BER at which the RF chain is compared with the discrete model.
pub const RF_BER: f64 = 1e-2;
pub const THEORY_TOLERANCE_DB: f64 = 0.5;
pub const FOLDING_TOLERANCE_DB: f64 = 1.0;
pub const OPERATOR_TOLERANCE_DB: f64 = 0.5;
pub const RF_TOLERANCE_DB: f64 = 1.0;
pub const CONTOUR_TOLERANCE: f64 = 0.05;
pub const REFERENCE_TOLERANCE: f64 = 0.1;
/// Grid columns whose contours are compared.
pub const CONTOUR_DELTAS: [f64; 3] = [0.3, 0.5, 0.7];
pub const RIDGE_TOLERANCE: f64 = 0.05;
pub const MIN_CORRELATION: f64 = 0.8;
/// Errors a point needs before it counts in ordering comparisons.
pub const ORDERING_ERRORS: u64 = 100;
/// Iteration-map rows are averaged over columns at or above this `delta`.
pub const RIDGE_MIN_DELTA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: String,
    pub expected: String,
    pub pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, measured: impl Into<String>, expected: impl Into<String>, pass: bool) -> Self {
        Self {
            name: name.into(),
            measured: measured.into(),
            expected: expected.into(),
            pass,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}  {}  measured {}  expected {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.expected
        )
    }
}

/// Rows of one curve and the properties shared by all of them.
#[derive(Debug, Clone)]
struct Curve<'a> {
    name: &'a str,
    experiment: &'a str,
    operator: &'a str,
    kappa: u32,
    m: u32,
    sparsity: usize,
    quantizer_bits: Option<u32>,
    prewhiten: bool,
    rows: Vec<&'a ResultRow>,
}

impl Curve<'_> {
    fn axis(&self) -> XAxis {
        if self.experiment == "ber_discrete" {
            XAxis::SnrDb
        } else {
            XAxis::Ebn0Db
        }
    }

    fn points(&self) -> Vec<(f64, f64)> {
        ber_points(self.rows.iter().copied(), self.axis())
    }

    fn x(&self, r: &ResultRow) -> Option<f64> {
        match self.axis() {
            XAxis::SnrDb => r.snr_db,
            XAxis::Ebn0Db => r.ebn0_db,
        }
    }

    fn sorted(&self) -> Vec<&ResultRow> {
        let mut v: Vec<&ResultRow> = self.rows.iter().copied().filter(|r| self.x(r).is_some()).collect();
        v.sort_by(|a, b| self.x(a).unwrap().total_cmp(&self.x(b).unwrap()));
        v
    }

    /// `sparsity_fed / sparsity` where the cap at `M` does not bite.
    fn multiplier(&self) -> usize {
        self.rows
            .iter()
            .find(|r| r.sparsity_fed < r.m_rows)
            .map_or(1, |r| r.sparsity_fed / r.sparsity.max(1))
    }
}

fn group(rows: &[ResultRow]) -> Vec<Curve<'_>> {
    let mut order: Vec<(&str, &str)> = Vec::new();
    let mut by: BTreeMap<(&str, &str), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        let key = (r.experiment.as_str(), r.curve.as_str());
        if !by.contains_key(&key) {
            order.push(key);
        }
        by.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let rows = by.remove(&key).unwrap_or_default();
            let r = rows[0];
            Curve {
                name: key.1,
                experiment: key.0,
                operator: r.operator.as_str(),
                kappa: r.kappa,
                m: r.m,
                sparsity: r.sparsity,
                quantizer_bits: r.quantizer_bits,
                prewhiten: r.prewhiten,
                rows,
            }
        })
        .collect()
}

fn fmt_db(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |v| format!("{v:.2} dB"))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |v| format!("{v:.3}"))
}

/// Runs every check applicable to `rows`, which may mix several result
/// files. Fails only when there is nothing to check.
pub fn validate(rows: &[ResultRow]) -> Result<Vec<Check>, ExperimentError> {
    if rows.is_empty() {
        return Err(ExperimentError::Format("the results contain no rows".into()));
    }
    let curves = group(rows);
    let mut checks = Vec::new();
    let ber: Vec<&Curve> = curves.iter().filter(|c| c.rows[0].ber.is_some()).collect();
    for c in &ber {
        checks.extend(monotonicity(c));
        checks.extend(noiseless(c));
    }
    checks.extend(theory_checks(&ber));
    checks.extend(folding_checks(&ber));
    checks.extend(operator_checks(&ber));
    checks.extend(ordering_checks(&ber));
    checks.extend(prewhitening_checks(&ber));
    checks.extend(quantization_checks(&ber));
    checks.extend(rf_checks(&ber));
    let phase_rows: Vec<ResultRow> = rows
        .iter()
        .filter(|r| r.experiment == "phase" && r.delta.is_some_and(checked_column))
        .cloned()
        .collect();
    if !phase_rows.is_empty() {
        checks.extend(phase_checks(&phase_rows));
    }
    let complexity_rows: Vec<ResultRow> = rows.iter().filter(|r| r.experiment == "complexity").cloned().collect();
    if !complexity_rows.is_empty() {
        checks.extend(complexity_checks(complexity_rows));
    }
    if checks.is_empty() {
        return Err(ExperimentError::Format("no applicable checks for these results".into()));
    }
    Ok(checks)
}

fn monotonicity(c: &Curve) -> Option<Check> {
    let rows = c.sorted();
    if rows.len() < 2 {
        return None;
    }
    let mut worst = f64::NEG_INFINITY;
    for w in rows.windows(2) {
        let rise = w[1].ber? - w[0].ber?;
        let se = (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
        worst = worst.max(if se > 0.0 { rise / se } else if rise > 0.0 { f64::INFINITY } else { 0.0 });
    }
    Some(Check::new(
        format!("{}/{}: BER non-increasing", c.experiment, c.name),
        format!("largest rise {worst:.2} standard errors"),
        "<= 1 standard error",
        worst <= 1.0,
    ))
}

fn noiseless(c: &Curve) -> Option<Check> {
    let rows: Vec<&&ResultRow> = c.rows.iter().filter(|r| r.snr_db.is_none() && r.ebn0_db.is_none()).collect();
    if rows.is_empty() {
        return None;
    }
    let errors: u64 = rows.iter().filter_map(|r| r.errors).sum();
    Some(Check::new(
        format!("{}/{}: noiseless BER", c.experiment, c.name),
        format!("{errors} errors"),
        "0 errors",
        errors == 0,
    ))
}

fn is_classic(c: &Curve) -> bool {
    c.operator == "identity" && c.quantizer_bits.is_none()
}

fn theory_checks(ber: &[&Curve]) -> Vec<Check> {
    let mut out = Vec::new();
    for c in ber.iter().filter(|c| c.experiment == "ber_discrete" && is_classic(c) && c.sparsity == 1) {
        let n = (1u64 << c.m) - 1;
        let theory = theory::db_at_ber(n, SHIFT_BER, BerAxis::Snr, -80.0, 40.0);
        let measured = db_at_ber(&c.points(), SHIFT_BER);
        let shift = measured.zip(theory).map(|(a, b)| a - b);
        out.push(Check::new(
            format!("{}: shift from non-coherent MFSK at BER 1e-3", c.name),
            fmt_db(shift),
            format!("|shift| <= {THEORY_TOLERANCE_DB} dB"),
            shift.is_some_and(|s| s.abs() <= THEORY_TOLERANCE_DB),
        ));
    }
    out
}

/// Same receiver family at half the subsampling ratio; the classic receiver
/// is the base of ratio 2.
fn folding_base<'a>(ber: &[&'a Curve<'a>], c: &Curve) -> Option<&'a Curve<'a>> {
    if c.kappa < 2 || c.kappa % 2 != 0 {
        return None;
    }
    let half = c.kappa / 2;
    ber.iter().copied().find(|b| {
        b.experiment == c.experiment
            && b.m == c.m
            && b.sparsity == c.sparsity
            && b.quantizer_bits == c.quantizer_bits
            && if half == 1 {
                b.operator == "identity"
            } else {
                b.operator == c.operator && b.kappa == half && b.prewhiten == c.prewhiten
            }
    })
}

fn folding_checks(ber: &[&Curve]) -> Vec<Check> {
    let mut out = Vec::new();
    for c in ber.iter().filter(|c| c.experiment == "ber_discrete" && c.operator == "css") {
        let Some(base) = folding_base(ber, c) else { continue };
        let shift = horizontal_shift(&base.points(), &c.points(), SHIFT_BER);
        let expected = 10.0 * 2f64.log10();
        out.push(Check::new(
            format!("{} vs {}: noise-folding shift at BER 1e-3", c.name, base.name),
            fmt_db(shift),
            format!("{expected:.2} +- {FOLDING_TOLERANCE_DB} dB"),
            shift.is_some_and(|s| (s - expected).abs() <= FOLDING_TOLERANCE_DB),
        ));
    }
    out
}

fn operator_checks(ber: &[&Curve]) -> Vec<Check> {
    let mut out = Vec::new();
    for c in ber.iter().filter(|c| c.experiment == "ber_discrete" && c.operator == "css") {
        for rd in ber.iter().filter(|r| {
            r.experiment == c.experiment
                && r.operator == "rd"
                && r.kappa == c.kappa
                && r.m == c.m
                && r.sparsity == c.sparsity
                && r.quantizer_bits == c.quantizer_bits
        }) {
            let shift = horizontal_shift(&c.points(), &rd.points(), SHIFT_BER);
            out.push(Check::new(
                format!("{} vs {}: distance at BER 1e-3", c.name, rd.name),
                fmt_db(shift),
                format!("|shift| <= {OPERATOR_TOLERANCE_DB} dB"),
                shift.is_some_and(|s| s.abs() <= OPERATOR_TOLERANCE_DB),
            ));
        }
    }
    out
}

/// `a` is no worse than `b` at every common grid point, within the
/// combined standard error.
fn no_worse(a: &Curve, b: &Curve) -> (bool, f64) {
    let mut worst = f64::NEG_INFINITY;
    for ra in a.rows.iter().filter(|r| a.x(r).is_some()) {
        if let Some(rb) = b.rows.iter().find(|r| b.x(r) == a.x(ra)) {
            let (Some(pa), Some(pb)) = (ra.ber, rb.ber) else { continue };
            let se = (ra.std_error.powi(2) + rb.std_error.powi(2)).sqrt();
            let excess = pa - pb;
            worst = worst.max(if se > 0.0 { excess / se } else if excess > 0.0 { f64::INFINITY } else { 0.0 });
        }
    }
    (worst <= 1.0, worst)
}

fn ordering_checks(ber: &[&Curve]) -> Vec<Check> {
    let mut out = Vec::new();
    for c in ber.iter().filter(|c| c.experiment == "ber_discrete" && c.operator == "css") {
        let Some(base) = folding_base(ber, c) else { continue };
        let (pass, worst) = no_worse(base, c);
        out.push(Check::new(
            format!("{} <= {} at every point", base.name, c.name),
            format!("largest excess {worst:.2} standard errors"),
            "<= 1 standard error",
            pass,
        ));
    }
    out
}

fn prewhitening_checks(ber: &[&Curve]) -> Vec<Check> {
    let mut out = Vec::new();
    for c in ber.iter().filter(|c| c.operator == "rademacher" && c.prewhiten) {
        for raw in ber.iter().filter(|r| {
            r.operator == "rademacher"
                && !r.prewhiten
                && r.experiment == c.experiment
                && r.kappa == c.kappa
                && r.m == c.m
                && r.sparsity == c.sparsity
                && r.quantizer_bits == c.quantizer_bits
        }) {
            let (pass, worst) = no_worse(c, raw);
            out.push(Check::new(
                format!("{} (prewhitened) <= {} at every point", c.name, raw.name),
                format!("largest excess {worst:.2} standard errors"),
                "<= 1 standard error",
                pass,
            ));
        }
    }
    out
}

/// Compares two curves at the highest common abscissa where both have at
/// least `ORDERING_ERRORS` errors. Returns `(x, ber_a, ber_b)`.
fn compare_at_top(a: &Curve, b: &Curve) -> Option<(f64, f64, f64)> {
    let enough = |r: &ResultRow| r.errors.is_some_and(|e| e >= ORDERING_ERRORS);
    let mut best: Option<(f64, f64, f64)> = None;
    for ra in a.rows.iter().filter(|r| enough(r)) {
        let x = a.x(ra)?;
        if let Some(rb) = b.rows.iter().find(|r| b.x(r) == Some(x) && enough(r)) {
            if best.is_none_or(|(bx, _, _)| x > bx) {
                best = Some((x, ra.ber?, rb.ber?));
            }
        }
    }
    best
}

fn quantization_checks(ber: &[&Curve]) -> Vec<Check> {
    let mut out = Vec::new();
    let find = |op: &str, bits: u32| {
        ber.iter()
            .copied()
            .find(|c| c.experiment != "ber_discrete" && c.operator == op && c.quantizer_bits == Some(bits))
    };
    let (Some(classic2), Some(css4), Some(classic4)) = (find("identity", 2), find("css", 4), find("identity", 4)) else {
        return out;
    };
    for (better, worse) in [(css4, classic2), (classic4, css4)] {
        let cmp = compare_at_top(better, worse);
        out.push(Check::new(
            format!("{} < {} at the highest Eb/N0 with >= {ORDERING_ERRORS} errors", better.name, worse.name),
            cmp.map_or("no common point".into(), |(x, a, b)| format!("{a:.3e} vs {b:.3e} at {x:.1} dB")),
            "strictly lower BER",
            cmp.is_some_and(|(_, a, b)| a < b),
        ));
    }
    out
}

fn rf_checks(ber: &[&Curve]) -> Vec<Check> {
    let mut out = Vec::new();
    for rf in ber.iter().filter(|c| c.experiment == "ber_rf" && c.quantizer_bits.is_none()) {
        for d in ber.iter().filter(|d| {
            d.experiment == "ber_discrete"
                && d.operator == rf.operator
                && d.kappa == rf.kappa
                && d.m == rf.m
                && d.sparsity == rf.sparsity
                && d.quantizer_bits.is_none()
                && d.prewhiten == rf.prewhiten
        }) {
            let pts: Vec<(f64, f64)> = ber_points(d.rows.iter().copied(), XAxis::Ebn0Db);
            let shift = horizontal_shift(&pts, &rf.points(), RF_BER);
            out.push(Check::new(
                format!("RF {} vs discrete {} at BER 1e-2 (m = {})", rf.name, d.name, rf.m),
                fmt_db(shift),
                format!("|shift| <= {RF_TOLERANCE_DB} dB"),
                shift.is_some_and(|s| s.abs() <= RF_TOLERANCE_DB),
            ));
        }
    }
    out
}

fn checked_column(delta: f64) -> bool {
    CONTOUR_DELTAS.iter().any(|d| (d - delta).abs() < 1e-6)
}

fn phase_checks(rows: &[ResultRow]) -> Vec<Check> {
    let mut out = Vec::new();
    let contours = contour::transition_contours(rows);
    let reference = ReferenceContour::shipped();
    let curves = group(rows);
    let named = |op: &str| curves.iter().find(|c| c.operator == op && c.multiplier() == 1).map(|c| c.name);
    if let (Some(css), Some(rd)) = (named("css"), named("rd")) {
        for p in contours.iter().filter(|p| p.curve == css) {
            let other = contour::contour_at(&contours, rd, p.delta).filter(|q| q.delta == p.delta);
            let diff = other.and_then(|q| Some(p.rho? - q.rho?));
            out.push(Check::new(
                format!("{css} vs {rd}: 0.5 contour at delta {:.3}", p.delta),
                format!("{} vs {} (diff {})", fmt_opt(p.rho), fmt_opt(other.and_then(|q| q.rho)), fmt_opt(diff)),
                format!("|diff| <= {CONTOUR_TOLERANCE}"),
                diff.is_some_and(|d| d.abs() <= CONTOUR_TOLERANCE),
            ));
        }
    }
    for c in curves.iter().filter(|c| c.multiplier() == 1 && c.operator != "identity") {
        for p in contours.iter().filter(|p| p.curve == c.name) {
            let r = reference.rho_at(p.delta);
            let diff = p.rho.zip(r).map(|(a, b)| a - b);
            out.push(Check::new(
                format!("{}: 0.5 contour vs reference at delta {:.3}", c.name, p.delta),
                format!("{} vs {} (diff {})", fmt_opt(p.rho), fmt_opt(r), fmt_opt(diff)),
                format!("|diff| <= {REFERENCE_TOLERANCE}"),
                diff.is_some_and(|d| d.abs() <= REFERENCE_TOLERANCE),
            ));
        }
    }
    out
}

fn complexity_checks(mut rows: Vec<ResultRow>) -> Vec<Check> {
    let mut out = Vec::new();
    let names: Vec<String> = group(&rows).iter().map(|c| c.name.to_string()).collect();
    for name in &names {
        let fit = complexity::fit_curve(&mut rows, name);
        out.push(Check::new(
            format!("{name}: measured vs predicted run-time correlation"),
            fit.as_ref().map_or("no fit".into(), |f| format!("{:.3} (c = {:.3e})", f.correlation, f.c)),
            format!("> {MIN_CORRELATION}"),
            fit.is_some_and(|f| f.correlation > MIN_CORRELATION),
        ));
    }
    for c in group(&rows) {
        let expected = 0.5 / c.multiplier() as f64;
        let ridge = complexity::iteration_ridge(&c.rows, RIDGE_MIN_DELTA);
        out.push(Check::new(
            format!("{}: elevated-iteration line (SP fed {}S)", c.name, c.multiplier()),
            ridge.map_or("none".into(), |l| format!("rho {:.3} (+{:.2} iterations)", l.rho, l.contrast)),
            format!("rho {expected:.2} +- {RIDGE_TOLERANCE}"),
            ridge.is_some_and(|l| (l.rho - expected).abs() <= RIDGE_TOLERANCE),
        ));
    }
    out
}
