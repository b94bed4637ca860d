use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;

/// Points in the chain whose signals can be captured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Chips,
    Shaped,
    Rf,
    RfNoisy,
    Baseband,
    ChipSamples,
    Measured,
    Quantized,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Chips,
        Stage::Shaped,
        Stage::Rf,
        Stage::RfNoisy,
        Stage::Baseband,
        Stage::ChipSamples,
        Stage::Measured,
        Stage::Quantized,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Stage::Chips => "chips",
            Stage::Shaped => "shaped",
            Stage::Rf => "rf",
            Stage::RfNoisy => "rf-noisy",
            Stage::Baseband => "baseband",
            Stage::ChipSamples => "chip-samples",
            Stage::Measured => "measured",
            Stage::Quantized => "quantized",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .iter()
            .copied()
            .find(|st| st.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Stage::ALL.iter().map(|s| s.name()).collect();
                format!("unknown stage '{s}' (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, Clone)]
struct Capture {
    stage: Stage,
    rate: f64,
    samples: Vec<Complex64>,
}

/// Collects the signals of the selected stages for one slot.
#[derive(Debug, Clone, Default)]
pub struct TapRecorder {
    wanted: Vec<Stage>,
    captures: Vec<Capture>,
}

impl TapRecorder {
    /// Records the given stages; an empty list records every stage.
    pub fn new(stages: &[Stage]) -> Self {
        Self {
            wanted: if stages.is_empty() { Stage::ALL.to_vec() } else { stages.to_vec() },
            captures: Vec::new(),
        }
    }

    pub fn wants(&self, stage: Stage) -> bool {
        self.wanted.contains(&stage)
    }

    pub fn record(&mut self, stage: Stage, samples: &[Complex64], rate: f64) {
        if self.wants(stage) {
            self.captures.push(Capture {
                stage,
                rate,
                samples: samples.to_vec(),
            });
        }
    }

    pub fn record_real(&mut self, stage: Stage, samples: &[f64], rate: f64) {
        if self.wants(stage) {
            self.captures.push(Capture {
                stage,
                rate,
                samples: samples.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            });
        }
    }

    pub fn get(&self, stage: Stage) -> Option<&[Complex64]> {
        self.captures
            .iter()
            .find(|c| c.stage == stage)
            .map(|c| c.samples.as_slice())
    }

    pub fn stages(&self) -> Vec<Stage> {
        self.captures.iter().map(|c| c.stage).collect()
    }

    /// Long-format CSV: `stage,index,time_s,re,im`.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["stage", "index", "time_s", "re", "im"])?;
        for c in &self.captures {
            for (i, v) in c.samples.iter().enumerate() {
                out.write_record([
                    c.stage.name().to_string(),
                    i.to_string(),
                    format!("{:e}", i as f64 / c.rate),
                    v.re.to_string(),
                    v.im.to_string(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}
