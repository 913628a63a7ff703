use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use dforge::dynamics::StepControl;

/// `%.12g`: twelve significant digits, trailing zeros dropped, exponent form
/// outside `1e-4 ≤ |x| < 1e12`.
pub fn fmt_g(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').unwrap_or((&sci, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    if !(-4..DIGITS).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Serialize)]
#[serde(tag = "step_control", rename_all = "snake_case")]
pub enum StepSettings {
    StepsPerPeriod { steps_per_period: usize },
    MaxStep { dt_max: f64 },
}

impl From<StepControl> for StepSettings {
    fn from(s: StepControl) -> Self {
        match s {
            StepControl::StepsPerPeriod(m) => StepSettings::StepsPerPeriod { steps_per_period: m },
            StepControl::MaxStep(dt) => StepSettings::MaxStep { dt_max: dt },
        }
    }
}

#[derive(Debug, Serialize)]
pub struct IntegratorSettings {
    pub full: &'static str,
    pub effective: &'static str,
    #[serde(flatten)]
    pub step: StepSettings,
}

impl IntegratorSettings {
    pub fn new(step: StepControl) -> Self {
        Self { full: "midpoint-exponential", effective: "eigendecomposition", step: step.into() }
    }
}

/// Sidecar written next to every output file.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub scenario_hash: String,
    pub command: String,
    pub settings: String,
    pub integrator: IntegratorSettings,
    pub version: &'static str,
    pub wall_time_seconds: f64,
}

/// SHA-256 over the canonical scenario text and the command settings.
pub fn scenario_hash(canonical: &str, settings: &str) -> String {
    let mut h = Sha256::new();
    h.update(canonical.as_bytes());
    h.update(b"\n--\n");
    h.update(settings.as_bytes());
    hex::encode(h.finalize())
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

pub fn write_manifest(out: &Path, manifest: &RunManifest) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(manifest).map_err(std::io::Error::other)?;
    fs::write(manifest_path(out), text + "\n")
}
