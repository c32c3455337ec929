//! JSON report and flat CSV export.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Config, Experiment};
use crate::experiments::{DecayResult, GaugeScanResult, ScalingResult, ThetaScanResult};
use crate::setup::Stat;
use crate::CliError;

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum Results {
    ThetaScan(ThetaScanResult),
    GaugeScan(GaugeScanResult),
    Decay(DecayResult),
    Scaling(ScalingResult),
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: Experiment,
    pub seed: u64,
    pub exact: bool,
    pub config: Config,
    /// Protocol groups in the order a hardware run would interleave them.
    pub execution_order: Vec<Vec<String>>,
    pub results: Results,
}

impl Report {
    pub fn new(experiment: Experiment, config: Config, execution_order: Vec<Vec<String>>, results: Results) -> Self {
        Report {
            tool: "dfs-lab",
            version: env!("CARGO_PKG_VERSION"),
            experiment,
            seed: config.seed,
            exact: config.exact,
            config,
            execution_order,
            results,
        }
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        serde_json::to_string_pretty(self).map_err(|e| CliError::Io(e.to_string()))
    }

    /// One row per arm and point.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let row = |s: &mut String, arm: &str, x: &[f64], st: &Stat, acc: f64| {
            let xs: Vec<String> = x.iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(s, "{arm},{},{:e},{:e},{:e},{:e},{:e}", xs.join(","), st.mean, st.ci_lo, st.ci_hi, st.sem, acc);
        };
        let tail = "mean,ci_lo,ci_hi,sem,accepted_fraction";
        match &self.results {
            Results::ThetaScan(r) => {
                let _ = writeln!(s, "arm,theta,{tail}");
                for a in &r.arms {
                    for (t, p) in r.thetas.iter().zip(&a.points) {
                        row(&mut s, &a.label, &[*t], &p.fidelity, p.accepted_fraction);
                    }
                }
            }
            Results::GaugeScan(r) => {
                let _ = writeln!(s, "arm,theta,gauge,{tail}");
                for a in &r.arms {
                    for (t, cells) in r.thetas.iter().zip(&a.cells) {
                        for (g, p) in r.gauges.iter().zip(cells) {
                            row(&mut s, &a.label, &[*t, *g], &p.fidelity, p.accepted_fraction);
                        }
                    }
                }
            }
            Results::Decay(r) => {
                let _ = writeln!(s, "arm,time,{tail}");
                for a in &r.arms {
                    for (t, p) in a.times.iter().zip(&a.points) {
                        row(&mut s, &a.label, &[*t], &p.fidelity, p.accepted_fraction);
                    }
                }
            }
            Results::Scaling(r) => {
                let _ = writeln!(s, "arm,index,{tail}");
                for a in &r.arms {
                    for (i, (st, acc)) in a.f_t.iter().zip(&a.accepted_fraction).enumerate() {
                        row(&mut s, &a.role, &[i as f64], st, *acc);
                    }
                }
            }
        }
        s
    }

    /// Writes `<experiment>.json` (and `.csv`) under `dir`.
    pub fn write(&self, dir: &Path, csv: bool) -> Result<PathBuf, CliError> {
        let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        let json = dir.join(format!("{}.json", self.experiment));
        std::fs::write(&json, self.to_json()? + "\n").map_err(io)?;
        if csv {
            std::fs::write(dir.join(format!("{}.csv", self.experiment)), self.to_csv()).map_err(io)?;
        }
        Ok(json)
    }
}
