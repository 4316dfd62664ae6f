//! CSV artifacts and run manifests.
//!
//! Numbers are written with six significant digits in `%g` style and a `.`
//! decimal separator, so identical runs produce byte-identical files.

use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{LearningCurve, SweepRow};

/// Format like C's `%.6g`.
pub fn format_sig6(value: f64) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    // Round once in scientific form so the exponent reflects the rounding.
    let sci = format!("{value:.5e}");
    let (mantissa, exponent) = sci.split_once('e').expect("scientific format");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if (-4..6).contains(&exponent) {
        let decimals = (5 - exponent).max(0) as usize;
        trim_zeros(format!("{value:.decimals$}"))
    } else {
        let sign = if exponent < 0 { '-' } else { '+' };
        format!(
            "{}e{sign}{:02}",
            trim_zeros(mantissa.to_string()),
            exponent.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn write_curve_csv<W: Write>(mut out: W, curve: &LearningCurve) -> Result<()> {
    writeln!(out, "trial,mean_steps,std_steps")?;
    for (i, (mean, std)) in curve.mean_steps.iter().zip(&curve.std_steps).enumerate() {
        writeln!(
            out,
            "{},{},{}",
            i + 1,
            format_sig6(*mean),
            format_sig6(*std)
        )?;
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(out, "eta,mean_steps_at_probe")?;
    for row in rows {
        writeln!(
            out,
            "{},{}",
            format_sig6(row.eta),
            format_sig6(row.mean_steps)
        )?;
    }
    Ok(())
}

/// Everything needed to replay a run, written next to each CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest<C> {
    pub software: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: C,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub etas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_trial: Option<usize>,
    pub capped_trials: u64,
    pub wall_clock_seconds: f64,
    pub csv: String,
}

impl<C: Serialize + DeserializeOwned> RunManifest<C> {
    pub fn new(command: &str, seed: u64, config: C, csv: &str) -> Self {
        Self {
            software: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            config,
            etas: None,
            probe_trial: None,
            capped_trials: 0,
            wall_clock_seconds: 0.0,
            csv: csv.to_string(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Io(e.to_string()))
    }
}
