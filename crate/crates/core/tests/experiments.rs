//! Harness-level behaviour: reproducibility across execution strategies and
//! worker counts, and the result file round trip.

use css_core::experiments::table::read_rows_csv;
use css_core::experiments::{run, Execution, ExperimentSpec, ResultRow, ResultTable, RunOptions};

const BER: &str = r#"
experiment = "ber_discrete"
seed = 21
m = 5
[grid]
snr_db = [-6.0, -2.0, 2.0]
[stop]
target_errors = 40
max_slots = 3000
[[curve]]
name = "classic"
operator = "identity"
[[curve]]
name = "css-k2"
operator = "css"
kappa = 2
sparsity = 2
"#;

const PHASE: &str = r#"
experiment = "phase"
seed = 4
m = 5
[grid]
delta = [0.4, 0.8]
rho = [0.1, 0.3, 0.6]
[phase]
batch = 8
max_trials = 16
[[curve]]
name = "rd"
operator = "rd"
"#;

const RF: &str = r#"
experiment = "ber_rf"
seed = 9
m = 5
[grid]
ebn0_db = [4.0, 8.0]
[stop]
target_errors = 20
max_slots = 500
[[curve]]
name = "css-k2"
operator = "css"
kappa = 2
"#;

fn stripped(t: &ResultTable) -> Vec<ResultRow> {
    t.rows.iter().map(ResultRow::without_timing).collect()
}

fn run_with(spec: &ExperimentSpec, execution: Execution, threads: usize) -> Vec<ResultRow> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let options = RunOptions {
        execution,
        progress: false,
    };
    pool.install(|| stripped(&run(spec, &options).unwrap()))
}

#[test]
fn identical_rows_for_any_execution_and_worker_count() {
    for text in [BER, PHASE, RF] {
        let spec = ExperimentSpec::from_toml(text).unwrap();
        let reference = run_with(&spec, Execution::Sequential, 1);
        assert!(!reference.is_empty());
        for threads in [1, 2, 5] {
            assert_eq!(run_with(&spec, Execution::Parallel, threads), reference, "{} threads", threads);
        }
    }
}

#[test]
fn seed_changes_the_draws() {
    let mut spec = ExperimentSpec::from_toml(BER).unwrap();
    let a = run_with(&spec, Execution::Sequential, 1);
    spec.seed = Some(22);
    let b = run_with(&spec, Execution::Sequential, 1);
    assert_ne!(a, b);
}

#[test]
fn results_round_trip_through_csv_and_json() {
    let spec = ExperimentSpec::from_toml(PHASE).unwrap();
    let table = run(&spec, &RunOptions::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    table.save(dir.path(), "phase").unwrap();

    let csv_rows = read_rows_csv(std::fs::File::open(dir.path().join("phase.csv")).unwrap()).unwrap();
    assert_eq!(csv_rows, table.rows);
    let json = ResultTable::read_json(std::fs::File::open(dir.path().join("phase.json")).unwrap()).unwrap();
    assert_eq!(json, table);
    assert!(dir.path().join("phase-contour.csv").exists());
}

#[test]
fn json_from_another_format_version_is_rejected() {
    let spec = ExperimentSpec::from_toml(BER).unwrap();
    let mut table = ResultTable::new(spec, Vec::new(), Default::default());
    table.format_version += 1;
    let mut buf = Vec::new();
    table.write_json(&mut buf).unwrap();
    assert!(ResultTable::read_json(&buf[..]).is_err());
}

#[test]
fn floor_stops_a_curve_early() {
    let mut spec = ExperimentSpec::from_toml(BER).unwrap();
    spec.grid.snr_db = css_core::experiments::Axis::Values(vec![4.0, -8.0, 0.0, -4.0]);
    spec.stop.ber_floor = Some(0.05);
    let rows = run(&spec, &RunOptions::default()).unwrap().rows;
    for curve in ["classic", "css-k2"] {
        let snrs: Vec<f64> = rows.iter().filter(|r| r.curve == curve).filter_map(|r| r.snr_db).collect();
        assert!(snrs.windows(2).all(|w| w[0] < w[1]), "{curve}: {snrs:?}");
        let bers: Vec<f64> = rows.iter().filter(|r| r.curve == curve).filter_map(|r| r.ber).collect();
        let below = bers.iter().position(|&b| b < 0.05);
        assert_eq!(below.map(|i| i + 1).unwrap_or(bers.len()), bers.len(), "{curve}: {bers:?}");
    }
}

#[test]
fn shipped_configs_are_valid() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let spec = ExperimentSpec::from_toml(&std::fs::read_to_string(&path).unwrap())
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            spec.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 5);
}
