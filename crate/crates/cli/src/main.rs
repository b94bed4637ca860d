//! `css`: generate Gold dictionaries, run experiments from TOML files,
//! validate result tables and draw figures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use css_core::experiments::{
    self, ber, plot, table, validate, ExperimentError, ExperimentSpec, Execution, ResultRow, ResultTable, RunOptions,
};
use css_core::gold::{self, FeedbackPolynomial, GoldDictionary, GoldError};
use css_core::rf::Stage;

const USAGE: u8 = 1;
const DOMAIN: u8 = 2;

#[derive(Parser)]
#[command(name = "css", version, about = "Compressive spread spectrum receiver simulator")]
struct Cli {
    /// Print progress lines to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a Gold dictionary as CSV plus a JSON sidecar.
    GenGold(GenGold),
    /// Run the experiment described by a TOML file.
    Run(Run),
    /// Check result files against the expected behaviour.
    Validate(Validate),
    /// Draw SVG figures from result files.
    Plot(PlotArgs),
}

#[derive(Args)]
struct GenGold {
    /// Register length.
    #[arg(long)]
    m: u32,
    /// First feedback polynomial as exponents, e.g. "5,2,0".
    #[arg(long, requires = "poly2")]
    poly1: Option<String>,
    /// Second feedback polynomial as exponents, e.g. "5,4,3,2,0".
    #[arg(long, requires = "poly1")]
    poly2: Option<String>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct Run {
    /// Experiment configuration (TOML).
    config: PathBuf,
    /// Master seed; falls back to the config file, then to CSS_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Override the experiment name used for output files.
    #[arg(long)]
    name: Option<String>,
    /// Override stop.target_errors.
    #[arg(long, value_name = "N")]
    target_errors: Option<u64>,
    /// Override stop.max_slots.
    #[arg(long, value_name = "N")]
    max_slots: Option<u64>,
    /// Run work items one after another instead of on the worker pool.
    #[arg(long)]
    sequential: bool,
    /// Skip SVG output.
    #[arg(long)]
    no_plot: bool,
    /// Also write each curve's measurement matrix (BER experiments).
    #[arg(long)]
    dump_operator: bool,
    /// Record RF-chain stages of the first slot: comma-separated names
    /// (chips, shaped, rf, rf-noisy, baseband, chip-samples, measured,
    /// quantized) or "all".
    #[arg(long, value_name = "STAGES")]
    tap: Option<String>,
}

#[derive(Args)]
struct Validate {
    /// Result files (.json or .csv); several files are checked together.
    #[arg(required = true)]
    results: Vec<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// Result files (.json or .csv).
    #[arg(required = true)]
    results: Vec<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: USAGE,
            message: message.into(),
        }
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        Self {
            code: if e.is_usage() { USAGE } else { DOMAIN },
            message: e.to_string(),
        }
    }
}

impl From<GoldError> for Failure {
    fn from(e: GoldError) -> Self {
        let code = match e {
            GoldError::InvalidDegree(_) | GoldError::TapOutOfRange { .. } | GoldError::NoDefaultPair(_) => USAGE,
            _ => DOMAIN,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self {
            code: DOMAIN,
            message: format!("i/o error: {e}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::from(USAGE);
        }
    }
    let result = match &cli.command {
        Command::GenGold(a) => gen_gold(a),
        Command::Run(a) => run(a, cli.verbose),
        Command::Validate(a) => validate_cmd(a),
        Command::Plot(a) => plot_cmd(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn parse_poly(m: u32, text: &str) -> Result<FeedbackPolynomial, Failure> {
    let exps: Result<Vec<u32>, _> = text.split(',').map(|t| t.trim().parse::<u32>()).collect();
    let exps = exps.map_err(|_| Failure::usage(format!("cannot parse polynomial exponents '{text}'")))?;
    if exps.iter().max() != Some(&m) {
        return Err(Failure::usage(format!("polynomial '{text}' must have degree {m}")));
    }
    Ok(FeedbackPolynomial::new(m, exps)?)
}

fn gen_gold(a: &GenGold) -> Result<u8, Failure> {
    let dict = match (&a.poly1, &a.poly2) {
        (Some(p1), Some(p2)) => GoldDictionary::from_pair(&parse_poly(a.m, p1)?, &parse_poly(a.m, p2)?)?,
        _ => GoldDictionary::new(a.m)?,
    };
    std::fs::create_dir_all(&a.out)?;
    let n = dict.len();
    let csv_path = a.out.join(format!("gold-m{}.csv", a.m));
    let mut text = String::with_capacity(n * n * 3);
    for row in 0..n {
        for col in 0..n {
            if col > 0 {
                text.push(',');
            }
            text.push_str(if dict.entry(row, col) > 0 { "1" } else { "-1" });
        }
        text.push('\n');
    }
    std::fs::write(&csv_path, text)?;
    let mut values = dict.cross_correlation_values().to_vec();
    values.sort_unstable();
    values.dedup();
    let sidecar = serde_json::json!({
        "m": dict.m(),
        "n": n,
        "t": dict.t(),
        "t_formula": gold::t_value(dict.m()),
        "poly1": dict.g1().source().to_string(),
        "poly1_exponents": dict.g1().source().exponents().collect::<Vec<_>>(),
        "poly2": dict.g2().source().to_string(),
        "poly2_exponents": dict.g2().source().exponents().collect::<Vec<_>>(),
        "seed1": dict.g1().seed(),
        "seed2": dict.g2().seed(),
        "cross_correlation_values": values,
        "layout": "rows are chips, columns are codes",
    });
    let json_path = a.out.join(format!("gold-m{}.json", a.m));
    std::fs::write(&json_path, serde_json::to_string_pretty(&sidecar).expect("json value"))?;
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(0)
}

fn load_spec(a: &Run) -> Result<ExperimentSpec, Failure> {
    let text = std::fs::read_to_string(&a.config)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", a.config.display())))?;
    let mut spec = ExperimentSpec::from_toml(&text)
        .map_err(|e| Failure::usage(format!("{}: {e}", a.config.display())))?;
    if let Some(s) = a.seed {
        spec.seed = Some(s);
    }
    if spec.seed.is_none() {
        if let Ok(v) = std::env::var("CSS_SEED") {
            spec.seed = Some(
                v.trim()
                    .parse()
                    .map_err(|_| Failure::usage(format!("CSS_SEED is not an integer: '{v}'")))?,
            );
        }
    }
    if let Some(n) = &a.name {
        spec.name = Some(n.clone());
    }
    if let Some(n) = a.target_errors {
        spec.stop.target_errors = n;
    }
    if let Some(n) = a.max_slots {
        spec.stop.max_slots = n;
    }
    spec.validate().map_err(|e| Failure::usage(format!("{}: {e}", a.config.display())))?;
    Ok(spec)
}

fn parse_stages(text: &str) -> Result<Vec<Stage>, Failure> {
    if text.trim() == "all" {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|s| s.trim().parse::<Stage>().map_err(|e| Failure::usage(e.to_string())))
        .collect()
}

fn run(a: &Run, verbose: bool) -> Result<u8, Failure> {
    let spec = load_spec(a)?;
    let stages = a.tap.as_deref().map(parse_stages).transpose()?;
    let stem = spec.label();
    let options = RunOptions {
        execution: if a.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
        progress: verbose,
    };
    let table = experiments::run(&spec, &options)?;
    table.save(&a.out, &stem)?;
    println!("wrote {} rows to {}", table.rows.len(), a.out.join(format!("{stem}.csv")).display());
    if !a.no_plot {
        for p in plot::write_plots(&table.rows, &a.out, &stem, &stem)? {
            println!("wrote {}", p.display());
        }
    }
    if a.dump_operator {
        if !spec.experiment.is_ber() {
            return Err(Failure::usage("--dump-operator needs a BER experiment (phase trials redraw the operator)"));
        }
        for (i, c) in spec.curve.iter().enumerate() {
            let op = ber::curve_operator(&spec, i)?;
            let dense = op.to_dense();
            let mut text = String::new();
            for row in dense.chunks(op.n()) {
                let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
                text.push_str(&line.join(","));
                text.push('\n');
            }
            let path = a.out.join(format!("{stem}-operator-{}.csv", c.name));
            std::fs::write(&path, text)?;
            println!("wrote {}", path.display());
        }
    }
    if let Some(stages) = stages {
        let taps = ber::tap_slot(&spec, 0, 0, &stages)?;
        let path = a.out.join(format!("{stem}-taps.csv"));
        taps.write_csv(std::fs::File::create(&path)?)
            .map_err(|e| Failure::from(ExperimentError::from(e)))?;
        println!("wrote {}", path.display());
    }
    Ok(0)
}

fn read_rows(path: &Path) -> Result<Vec<ResultRow>, Failure> {
    let file = std::fs::File::open(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let at = |e: ExperimentError| Failure::usage(format!("{}: {e}", path.display()));
    if path.extension().is_some_and(|e| e == "json") {
        Ok(ResultTable::read_json(file).map_err(at)?.rows)
    } else {
        table::read_rows_csv(file).map_err(at)
    }
}

fn validate_cmd(a: &Validate) -> Result<u8, Failure> {
    let mut rows = Vec::new();
    for p in &a.results {
        let r = read_rows(p)?;
        if r.is_empty() {
            return Err(Failure::usage(format!("{}: no result rows", p.display())));
        }
        rows.extend(r);
    }
    let checks = validate::validate(&rows).map_err(|e| Failure::usage(e.to_string()))?;
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    println!("{} checks, {} passed, {} failed", checks.len(), checks.len() - failed, failed);
    Ok(if failed == 0 { 0 } else { DOMAIN })
}

fn plot_cmd(a: &PlotArgs) -> Result<u8, Failure> {
    for p in &a.results {
        let rows = read_rows(p)?;
        let stem = p.file_stem().map_or("results".into(), |s| s.to_string_lossy().into_owned());
        for out in plot::write_plots(&rows, &a.out, &stem, &stem)? {
            println!("wrote {}", out.display());
        }
    }
    Ok(0)
}
