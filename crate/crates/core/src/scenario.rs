//! Scenario configuration files.
//!
//! Line-oriented `key = value` text split into sections. `#` starts a comment.
//!
//! ```text
//! [levels]               # optional, default `g, r, e`
//! g, r, e                # level labels, comma separated, in basis order
//! ground = g             # optional, default: first level
//! excited = e            # optional, default: last level
//!
//! [channels]             # required, one channel per line
//! g1 : sig(g,r)*ad       # coupling : operator A_k
//! g2 : sig(e,r)*a @ delta   # optional `@ symbol` names the channel's detuning
//!
//! [params]               # symbol = float, angular frequencies in s^-1
//! g1 = 7e5
//! delta = 2.45e8         # the detuning symbol is required
//!
//! [space]
//! n_max = 20             # required, >= 1
//!
//! [state]
//! initial = e,0          # `level,n` or `level,coherent(alpha)`
//!
//! [time]
//! t_end = 5e-3           # required
//! samples = 501          # required
//! dt_max = 1e-9          # optional step cap
//! steps_per_period = 512 # optional, overrides dt_max
//! ```
//!
//! Every channel uses the detuning symbol `delta` unless tagged with `@`; all
//! tags must name the same symbol.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::algebra::Level;
use crate::dynamics::{StepControl, TimeGrid};
use crate::effective::{Channel, ChannelSpec};
use crate::error::{Error, Result};
use crate::fock::{SpaceSpec, StateDescriptor};
use crate::params::Params;
use crate::parser::{default_levels, parse_coefficient, parse_operator_expr};

pub const DEFAULT_DETUNING: &str = "delta";

/// Step cap used when a config gives neither `dt_max` nor `steps_per_period`.
pub const DEFAULT_STEPS_PER_PERIOD: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub levels: Vec<Level>,
    pub ground: Level,
    pub excited: Level,
    pub channels: ChannelSpec,
    /// Source text of each channel, `(coupling, operator)`.
    pub channel_sources: Vec<(String, String)>,
    pub params: Params,
    pub space: SpaceSpec,
    pub initial: StateDescriptor,
    pub grid: TimeGrid,
    pub step: StepControl,
}

const SECTIONS: [&str; 6] = ["levels", "channels", "params", "space", "state", "time"];

fn config_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config { line, message: message.into() }
}

#[derive(Default)]
struct RawConfig {
    level_lines: Vec<(usize, String)>,
    level_keys: BTreeMap<String, (usize, String)>,
    channels: Vec<(usize, String)>,
    keyed: BTreeMap<&'static str, BTreeMap<String, (usize, String)>>,
}

fn split_sections(text: &str) -> Result<RawConfig> {
    let mut raw = RawConfig::default();
    let mut section: Option<&'static str> = None;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| config_err(lineno, "unterminated section header"))?.trim();
            section = Some(
                SECTIONS
                    .iter()
                    .copied()
                    .find(|s| *s == name)
                    .ok_or_else(|| config_err(lineno, format!("unknown section [{name}]")))?,
            );
            continue;
        }
        let Some(sec) = section else {
            return Err(config_err(lineno, "entry outside of any section"));
        };
        match sec {
            "channels" => raw.channels.push((lineno, line.to_string())),
            "levels" => match line.split_once('=') {
                Some((k, v)) => {
                    let k = k.trim();
                    if k != "ground" && k != "excited" {
                        return Err(config_err(lineno, format!("unknown key `{k}` in [levels]")));
                    }
                    raw.level_keys.insert(k.to_string(), (lineno, v.trim().to_string()));
                }
                None => raw.level_lines.push((lineno, line.to_string())),
            },
            _ => {
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| config_err(lineno, format!("expected `key = value` in [{sec}]")))?;
                let k = k.trim().to_string();
                let allowed: &[&str] = match sec {
                    "space" => &["n_max"],
                    "state" => &["initial"],
                    "time" => &["t_end", "samples", "dt_max", "steps_per_period"],
                    _ => &[],
                };
                if sec != "params" && !allowed.contains(&k.as_str()) {
                    return Err(config_err(lineno, format!("unknown key `{k}` in [{sec}]")));
                }
                let table = raw.keyed.entry(sec).or_default();
                if table.insert(k.clone(), (lineno, v.trim().to_string())).is_some() {
                    return Err(config_err(lineno, format!("duplicate key `{k}`")));
                }
            }
        }
    }
    Ok(raw)
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn required<'a>(raw: &'a RawConfig, sec: &str, key: &str) -> Result<&'a (usize, String)> {
    raw.keyed.get(sec).and_then(|t| t.get(key)).ok_or_else(|| Error::MissingKey(key.to_string()))
}

fn optional<'a>(raw: &'a RawConfig, sec: &str, key: &str) -> Option<&'a (usize, String)> {
    raw.keyed.get(sec).and_then(|t| t.get(key))
}

fn number<T: std::str::FromStr>(entry: &(usize, String), key: &str) -> Result<T> {
    entry.1.parse().map_err(|_| config_err(entry.0, format!("`{key}` has invalid value `{}`", entry.1)))
}

pub fn parse_scenario(config_text: &str) -> Result<Scenario> {
    let raw = split_sections(config_text)?;

    let levels: Vec<Level> = if raw.level_lines.is_empty() {
        default_levels()
    } else {
        let mut out = Vec::new();
        for (lineno, line) in &raw.level_lines {
            for label in line.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                if !is_identifier(label) {
                    return Err(config_err(*lineno, format!("bad level label `{label}`")));
                }
                out.push(Level::new(label));
            }
        }
        out
    };
    let pick = |key: &str, default: &Level| -> Result<Level> {
        match raw.level_keys.get(key) {
            Some((_, v)) => {
                let l = Level::new(v.as_str());
                if levels.contains(&l) {
                    Ok(l)
                } else {
                    Err(Error::UnknownLevel(v.clone()))
                }
            }
            None => Ok(default.clone()),
        }
    };
    let first = levels.first().cloned().ok_or_else(|| Error::MissingKey("levels".into()))?;
    let last = levels.last().cloned().unwrap_or_else(|| first.clone());
    let ground = pick("ground", &first)?;
    let excited = pick("excited", &last)?;

    if raw.channels.is_empty() {
        return Err(Error::MissingKey("channels".into()));
    }
    let mut tagged = Vec::new();
    let mut channel_sources = Vec::new();
    for (lineno, line) in &raw.channels {
        let (lambda, rest) =
            line.split_once(':').ok_or_else(|| config_err(*lineno, "expected `coupling : expression`"))?;
        let (expr, detuning) = match rest.split_once('@') {
            Some((e, d)) => (e.trim(), d.trim()),
            None => (rest.trim(), DEFAULT_DETUNING),
        };
        if !is_identifier(detuning) {
            return Err(config_err(*lineno, format!("bad detuning symbol `{detuning}`")));
        }
        let coupling = parse_coefficient(lambda.trim())?;
        let operator = parse_operator_expr(expr, &levels)?;
        tagged.push((Channel::new(coupling, operator), detuning.to_string()));
        channel_sources.push((lambda.trim().to_string(), expr.to_string()));
    }
    let channels = ChannelSpec::with_detunings(tagged)?;

    let mut params = Params::new();
    if let Some(table) = raw.keyed.get("params") {
        for (k, entry) in table {
            if !is_identifier(k) {
                return Err(config_err(entry.0, format!("bad parameter name `{k}`")));
            }
            params.set(k.clone(), number::<f64>(entry, k)?);
        }
    }
    if !params.contains(channels.delta()) {
        return Err(Error::MissingKey(channels.delta().to_string()));
    }
    for sym in channels.symbols() {
        if !params.contains(&sym) {
            return Err(Error::UnboundParameter(sym));
        }
    }

    let n_max_entry = required(&raw, "space", "n_max")?;
    let n_max: i64 = number(n_max_entry, "n_max")?;
    if n_max < 1 {
        return Err(Error::NonPositiveTruncation(n_max));
    }
    let space = SpaceSpec::new(levels.clone(), n_max as usize)?;

    let initial = StateDescriptor::parse(&required(&raw, "state", "initial")?.1)?;
    space.level_index(&initial.level)?;

    let t_end: f64 = number(required(&raw, "time", "t_end")?, "t_end")?;
    let samples: usize = number(required(&raw, "time", "samples")?, "samples")?;
    let grid = TimeGrid::new(t_end, samples)?;
    let step = match (optional(&raw, "time", "steps_per_period"), optional(&raw, "time", "dt_max")) {
        (Some(e), _) => StepControl::StepsPerPeriod(number(e, "steps_per_period")?),
        (None, Some(e)) => StepControl::MaxStep(number(e, "dt_max")?),
        (None, None) => StepControl::StepsPerPeriod(DEFAULT_STEPS_PER_PERIOD),
    };

    Ok(Scenario { levels, ground, excited, channels, channel_sources, params, space, initial, grid, step })
}

impl Scenario {
    /// Deterministic text rendering of every field; equal scenarios render
    /// identically regardless of the source file's layout.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        let labels: Vec<&str> = self.levels.iter().map(Level::as_str).collect();
        let _ = writeln!(out, "[levels]\n{}\nground = {}\nexcited = {}", labels.join(", "), self.ground, self.excited);
        let _ = writeln!(out, "[channels]");
        for ch in self.channels.channels() {
            let _ = writeln!(out, "{} : {} @ {}", ch.lambda, ch.operator, self.channels.delta());
        }
        let _ = writeln!(out, "[params]");
        for (k, v) in self.params.iter() {
            let _ = writeln!(out, "{k} = {v:e}");
        }
        let _ = writeln!(out, "[space]\nn_max = {}", self.space.n_max());
        let _ = writeln!(out, "[state]\ninitial = {}", self.initial);
        let _ = writeln!(out, "[time]\nt_end = {:e}\nsamples = {}", self.grid.t_end(), self.grid.samples());
        match self.step {
            StepControl::MaxStep(dt) => {
                let _ = writeln!(out, "dt_max = {dt:e}");
            }
            StepControl::StepsPerPeriod(m) => {
                let _ = writeln!(out, "steps_per_period = {m}");
            }
        }
        out
    }
}
