//! Declarative experiment description, read from TOML.

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::baseband::SpuriousScoring;
use crate::pursuit::InitResidual;
use crate::rf::ChainConfig;
use crate::sampling::OperatorKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Phase,
    BerDiscrete,
    BerRf,
    Quantization,
    Complexity,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Phase => "phase",
            ExperimentKind::BerDiscrete => "ber_discrete",
            ExperimentKind::BerRf => "ber_rf",
            ExperimentKind::Quantization => "quantization",
            ExperimentKind::Complexity => "complexity",
        }
    }

    pub fn is_ber(self) -> bool {
        matches!(
            self,
            ExperimentKind::BerDiscrete | ExperimentKind::BerRf | ExperimentKind::Quantization
        )
    }

    pub fn uses_rf_chain(self) -> bool {
        matches!(self, ExperimentKind::BerRf | ExperimentKind::Quantization)
    }
}

impl std::fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A grid axis: explicit values or `count` evenly spaced values from
/// `start` to `stop` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Values(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        count: usize,
    },
}

impl Default for Axis {
    fn default() -> Self {
        Axis::Values(Vec::new())
    }
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Axis::Values(v) => v.clone(),
            Axis::Range { start, stop, count } => match count {
                0 => Vec::new(),
                1 => vec![*start],
                _ => (0..*count)
                    .map(|i| start + (stop - start) * i as f64 / (*count - 1) as f64)
                    .collect(),
            },
        }
    }

    pub fn is_empty(&self) -> bool {
        self.values().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grid {
    pub snr_db: Axis,
    pub ebn0_db: Axis,
    pub delta: Axis,
    pub rho: Axis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StopRule {
    pub target_errors: u64,
    pub max_slots: u64,
    /// Once a curve's BER falls below this value, its remaining (less
    /// noisy) grid points are skipped.
    pub ber_floor: Option<f64>,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            target_errors: 100,
            max_slots: 1_000_000,
            ber_floor: None,
        }
    }
}

/// Nonzero coefficient values used in noiseless recovery trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coefficients {
    /// Real, equiprobable +1 / -1.
    #[default]
    Sign,
    /// Complex, uniform over `{+-1 +- j}`.
    Qpsk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseSettings {
    pub batch: u32,
    pub max_trials: u32,
    /// Mean squared change of the success surface between consecutive
    /// batches below which sampling stops.
    pub tolerance: f64,
    /// Relative squared error below which a trial counts as a success.
    pub success_threshold: f64,
    pub coefficients: Coefficients,
}

impl Default for PhaseSettings {
    fn default() -> Self {
        Self {
            batch: 20,
            max_trials: 400,
            tolerance: 1e-5,
            success_threshold: 1e-6,
            coefficients: Coefficients::Sign,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub name: String,
    pub operator: OperatorKind,
    #[serde(default = "one_u32")]
    pub kappa: u32,
    /// Active codes per slot (BER experiments).
    #[serde(default = "one_usize")]
    pub sparsity: usize,
    /// The reconstruction is told `sparsity_multiplier * S`.
    #[serde(default = "one_usize")]
    pub sparsity_multiplier: usize,
    pub quantizer_bits: Option<u32>,
    /// Apply the Cholesky prewhitener (only affects Rademacher).
    #[serde(default = "yes")]
    pub prewhiten: bool,
    /// Per-user amplitudes drawn uniformly within this many dB (0 = equal).
    #[serde(default)]
    pub amplitude_spread_db: f64,
}

fn one_u32() -> u32 {
    1
}
fn one_usize() -> usize {
    1
}
fn yes() -> bool {
    true
}

impl CurveSpec {
    pub fn new(name: &str, operator: OperatorKind, kappa: u32, sparsity: usize) -> Self {
        Self {
            name: name.to_string(),
            operator,
            kappa,
            sparsity,
            sparsity_multiplier: 1,
            quantizer_bits: None,
            prewhiten: true,
            amplitude_spread_db: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub name: Option<String>,
    /// Mandatory at run time; may be supplied by the caller instead.
    #[serde(default)]
    pub seed: Option<u64>,
    pub m: u32,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub stop: StopRule,
    #[serde(default)]
    pub phase: PhaseSettings,
    #[serde(default)]
    pub rf: ChainConfig,
    #[serde(default)]
    pub scoring: SpuriousScoring,
    #[serde(default)]
    pub init: InitResidual,
    /// Run the BER harness without noise.
    #[serde(default)]
    pub noiseless: bool,
    pub curve: Vec<CurveSpec>,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("spec is serializable")
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.experiment.name().to_string())
    }

    pub fn n(&self) -> usize {
        (1usize << self.m) - 1
    }

    pub fn seed(&self) -> Result<u64, ExperimentError> {
        self.seed
            .ok_or_else(|| ExperimentError::Config("a master seed is required (seed = ...)".into()))
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        self.seed()?;
        if crate::gold::default_pair(self.m).is_err() {
            return bad(format!("m = {} has no built-in polynomial pair (use 5, 7 or 10)", self.m));
        }
        if self.curve.is_empty() {
            return bad("at least one [[curve]] is required".into());
        }
        let n = self.n();
        for c in &self.curve {
            if c.kappa == 0 || c.kappa as usize > n {
                return bad(format!("curve '{}': kappa must lie in 1..={n}", c.name));
            }
            if c.operator == OperatorKind::Identity && c.kappa != 1 {
                return bad(format!("curve '{}': the identity operator requires kappa = 1", c.name));
            }
            if c.sparsity == 0 || c.sparsity_multiplier == 0 {
                return bad(format!("curve '{}': sparsity must be positive", c.name));
            }
            if let Some(b) = c.quantizer_bits {
                if !(1..=24).contains(&b) {
                    return bad(format!("curve '{}': quantizer_bits must lie in 1..=24", c.name));
                }
            }
            if !(c.amplitude_spread_db >= 0.0) {
                return bad(format!("curve '{}': amplitude_spread_db must be >= 0", c.name));
            }
        }
        let mut names: Vec<&str> = self.curve.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return bad("curve names must be unique".into());
        }
        match self.experiment {
            ExperimentKind::Phase | ExperimentKind::Complexity => {
                if self.grid.delta.is_empty() || self.grid.rho.is_empty() {
                    return bad("phase-style experiments need grid.delta and grid.rho".into());
                }
                let ok = |v: &[f64]| v.iter().all(|&x| x > 0.0 && x <= 1.0);
                if !ok(&self.grid.delta.values()) || !ok(&self.grid.rho.values()) {
                    return bad("grid.delta and grid.rho values must lie in (0, 1]".into());
                }
                if self.phase.batch == 0 || self.phase.max_trials == 0 {
                    return bad("phase.batch and phase.max_trials must be positive".into());
                }
            }
            ExperimentKind::BerDiscrete => {
                if self.grid.snr_db.is_empty() && !self.noiseless {
                    return bad("ber_discrete needs grid.snr_db".into());
                }
            }
            ExperimentKind::BerRf | ExperimentKind::Quantization => {
                if self.grid.ebn0_db.is_empty() && !self.noiseless {
                    return bad(format!("{} needs grid.ebn0_db", self.experiment));
                }
                self.rf.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
            }
        }
        if self.experiment.is_ber() {
            if self.stop.target_errors == 0 || self.stop.max_slots == 0 {
                return bad("stop.target_errors and stop.max_slots must be positive".into());
            }
            if self.stop.max_slots >= 1 << 32 {
                return bad("stop.max_slots must be below 2^32".into());
            }
            if self.stop.ber_floor.is_some_and(|f| !(f > 0.0 && f < 1.0)) {
                return bad("stop.ber_floor must lie in (0, 1)".into());
            }
            for c in &self.curve {
                let rows = crate::sampling::rows_for_ratio(n, c.kappa);
                if c.sparsity > rows {
                    return bad(format!(
                        "curve '{}': sparsity {} exceeds the {rows} measurements",
                        c.name, c.sparsity
                    ));
                }
            }
        }
        Ok(())
    }
}
