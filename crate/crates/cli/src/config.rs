//! Experiment descriptions: a TOML file with `[topology]`, `[traffic]`,
//! `[algorithm]`, `[model]`, and `[output]` sections, plus the four built-in
//! presets reproducing the reference scenarios. Validation errors point at
//! the offending line of the file.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use clexsim_core::clique::BalancerConfig;
use clexsim_core::engine::{EngineConfig, TrafficPattern, TrafficSpec, ValiantMode};
use clexsim_core::metrics::DelayModel;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub topology: Topology,
    pub traffic: Traffic,
    #[serde(default)]
    pub algorithm: Algorithm,
    #[serde(default)]
    pub model: Model,
    #[serde(default)]
    pub output: Output,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topology {
    /// "clex" or "torus".
    pub kind: String,
    pub base: Option<u32>,
    pub levels: Option<u32>,
    pub k1: Option<u32>,
    pub k2: Option<u32>,
    pub k3: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Traffic {
    /// "uniform_permutation", "uir_destinations", or "all_to_all".
    #[serde(default = "default_pattern")]
    pub pattern: String,
    #[serde(default = "one_u32")]
    pub per_node: u32,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Algorithm {
    /// "off", "full", or "cluster:L".
    pub valiant_mode: String,
    pub direct_first: bool,
    pub request_ack: bool,
    pub copy_cap_log_base: f64,
    pub same_copy_bypass: bool,
    pub aggregated_links: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Model {
    pub c_h: f64,
    pub c_p: f64,
    #[serde(rename = "B")]
    pub b: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    pub dir: String,
    /// Any of "table", "csv", "json", "svg".
    pub formats: Vec<String>,
    pub sample_limit: usize,
}

fn default_pattern() -> String {
    "uniform_permutation".into()
}

fn one_u32() -> u32 {
    1
}

impl Default for Algorithm {
    fn default() -> Self {
        let b = BalancerConfig::default();
        Algorithm {
            valiant_mode: "off".into(),
            direct_first: b.direct_first,
            request_ack: b.request_ack,
            copy_cap_log_base: b.copy_cap_log_base,
            same_copy_bypass: false,
            aggregated_links: true,
        }
    }
}

impl Default for Model {
    fn default() -> Self {
        let m = DelayModel::default();
        Model { c_h: m.c_h, c_p: m.c_p, b: 1.0 }
    }
}

impl Default for Output {
    fn default() -> Self {
        Output {
            dir: "out".into(),
            formats: vec!["table".into(), "csv".into(), "json".into()],
            sample_limit: 1024,
        }
    }
}

/// 1-based line of `key = …` inside `[section]`, for diagnostics. Falls
/// back to the section header, then to line 1.
fn key_line(src: &str, section: &str, key: &str) -> usize {
    let header = format!("[{section}]");
    let mut in_section = false;
    let mut header_line = 1;
    for (i, line) in src.lines().enumerate() {
        let t = line.trim();
        if t.starts_with('[') {
            in_section = t == header;
            if in_section {
                header_line = i + 1;
            }
        } else if in_section {
            if let Some(rest) = t.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return i + 1;
                }
            }
        }
    }
    header_line
}

pub struct Diagnostics<'a> {
    pub path: &'a str,
    pub src: &'a str,
}

impl Diagnostics<'_> {
    fn err(&self, section: &str, key: &str, msg: String) -> anyhow::Error {
        anyhow!("{}:{}: {msg}", self.path, key_line(self.src, section, key))
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let src = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let display = path.display().to_string();
        // toml's parse errors already carry "line N, column M".
        let cfg: Config = toml::from_str(&src)
            .map_err(|e| anyhow!("{display}: {e}"))?;
        cfg.validate(&Diagnostics { path: &display, src: &src })?;
        Ok(cfg)
    }

    pub fn validate(&self, d: &Diagnostics) -> Result<()> {
        let t = &self.topology;
        match t.kind.as_str() {
            "clex" => {
                let base = t
                    .base
                    .ok_or_else(|| d.err("topology", "kind", "clex topology needs `base`".into()))?;
                let levels = t.levels.ok_or_else(|| {
                    d.err("topology", "kind", "clex topology needs `levels`".into())
                })?;
                if base < 2 {
                    return Err(d.err("topology", "base", format!("base must be ≥ 2, got {base}")));
                }
                if levels < 1 {
                    return Err(d.err("topology", "levels", "levels must be ≥ 1".into()));
                }
                let n = (base as u64).checked_pow(levels).unwrap_or(u64::MAX);
                if n > u32::MAX as u64 {
                    return Err(d.err(
                        "topology",
                        "levels",
                        format!("base^levels = {base}^{levels} exceeds the 2^32 node-id space"),
                    ));
                }
                if t.k1.is_some() || t.k2.is_some() || t.k3.is_some() {
                    return Err(d.err(
                        "topology",
                        "k1",
                        "k1/k2/k3 belong to kind = \"torus\"".into(),
                    ));
                }
            }
            "torus" => {
                for (key, v) in [("k1", t.k1), ("k2", t.k2), ("k3", t.k3)] {
                    let k = v.ok_or_else(|| {
                        d.err("topology", "kind", format!("torus topology needs `{key}`"))
                    })?;
                    if k < 1 {
                        return Err(d.err("topology", key, format!("{key} must be ≥ 1")));
                    }
                }
                if t.base.is_some() || t.levels.is_some() {
                    return Err(d.err(
                        "topology",
                        "base",
                        "base/levels belong to kind = \"clex\"".into(),
                    ));
                }
                if self.traffic.pattern != "all_to_all" {
                    return Err(d.err(
                        "traffic",
                        "pattern",
                        format!(
                            "torus topologies support pattern = \"all_to_all\" only, got \"{}\"",
                            self.traffic.pattern
                        ),
                    ));
                }
            }
            other => {
                return Err(d.err(
                    "topology",
                    "kind",
                    format!("unknown topology kind \"{other}\" (expected \"clex\" or \"torus\")"),
                ));
            }
        }

        match self.traffic.pattern.as_str() {
            "uniform_permutation" | "uir_destinations" | "all_to_all" => {}
            other => {
                return Err(d.err(
                    "traffic",
                    "pattern",
                    format!(
                        "unknown pattern \"{other}\" (expected \"uniform_permutation\", \
                         \"uir_destinations\", or \"all_to_all\")"
                    ),
                ));
            }
        }
        if self.traffic.pattern != "all_to_all" && self.traffic.per_node < 1 {
            return Err(d.err("traffic", "per_node", "per_node must be ≥ 1".into()));
        }

        self.parse_valiant()
            .map_err(|msg| d.err("algorithm", "valiant_mode", msg))?;
        if self.algorithm.copy_cap_log_base.is_nan() || self.algorithm.copy_cap_log_base <= 1.0 {
            return Err(d.err(
                "algorithm",
                "copy_cap_log_base",
                format!(
                    "copy_cap_log_base must exceed 1, got {}",
                    self.algorithm.copy_cap_log_base
                ),
            ));
        }
        if self.model.c_h <= 0.0 || self.model.c_p <= 0.0 || self.model.b <= 0.0 {
            return Err(d.err(
                "model",
                "c_h",
                format!(
                    "delay and bandwidth constants must be positive (c_h={}, c_p={}, B={})",
                    self.model.c_h, self.model.c_p, self.model.b
                ),
            ));
        }
        for f in &self.output.formats {
            if !matches!(f.as_str(), "table" | "csv" | "json" | "svg") {
                return Err(d.err(
                    "output",
                    "formats",
                    format!("unknown format \"{f}\" (expected table, csv, json, or svg)"),
                ));
            }
        }
        if self.output.dir.is_empty() {
            return Err(d.err("output", "dir", "output dir must not be empty".into()));
        }
        Ok(())
    }

    fn parse_valiant(&self) -> std::result::Result<ValiantMode, String> {
        let s = self.algorithm.valiant_mode.as_str();
        if s == "off" {
            return Ok(ValiantMode::Off);
        }
        if s == "full" {
            return Ok(ValiantMode::Full);
        }
        if let Some(l) = s.strip_prefix("cluster:") {
            let l: u32 = l
                .parse()
                .map_err(|_| format!("bad cluster level in valiant_mode \"{s}\""))?;
            let levels = self.topology.levels.unwrap_or(1);
            if l < 1 || l > levels {
                return Err(format!(
                    "valiant cluster level {l} outside 1..={levels}"
                ));
            }
            return Ok(ValiantMode::Cluster(l));
        }
        Err(format!(
            "unknown valiant_mode \"{s}\" (expected \"off\", \"full\", or \"cluster:L\")"
        ))
    }

    /// The four reference scenarios: dense and light permutation loads on
    /// the two study networks.
    pub fn preset(table: u8) -> Result<Config> {
        let (base, levels, per_node, request_ack) = match table {
            1 => (32, 4, 28, true),
            2 => (64, 3, 57, true),
            3 => (32, 4, 4, false),
            4 => (64, 3, 5, false),
            other => bail!("no preset table {other} (expected 1–4)"),
        };
        Ok(Config {
            topology: Topology {
                kind: "clex".into(),
                base: Some(base),
                levels: Some(levels),
                k1: None,
                k2: None,
                k3: None,
            },
            traffic: Traffic {
                pattern: "uniform_permutation".into(),
                per_node,
                seed: 1,
            },
            algorithm: Algorithm { request_ack, ..Algorithm::default() },
            model: Model::default(),
            output: Output::default(),
        })
    }

    /// Shrinks (or grows) the scenario while keeping its density: the base
    /// scales by `factor` and messages per node scale with the base so the
    /// per-clique load profile is preserved. Torus rings scale directly.
    pub fn apply_scale(&mut self, factor: f64) -> Result<()> {
        if !(factor.is_finite() && factor > 0.0) {
            bail!("--scale must be a positive number, got {factor}");
        }
        match self.topology.kind.as_str() {
            "clex" => {
                let base = self.topology.base.unwrap_or(2);
                let scaled = ((base as f64 * factor).round() as u32).max(2);
                if self.traffic.pattern != "all_to_all" {
                    let per_node = self.traffic.per_node;
                    self.traffic.per_node =
                        ((per_node as f64 * scaled as f64 / base as f64).round() as u32).max(1);
                }
                self.topology.base = Some(scaled);
            }
            _ => {
                for k in [&mut self.topology.k1, &mut self.topology.k2, &mut self.topology.k3]
                    .into_iter()
                    .flatten()
                {
                    *k = ((*k as f64 * factor).round() as u32).max(1);
                }
            }
        }
        Ok(())
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            balancer: BalancerConfig {
                direct_first: self.algorithm.direct_first,
                request_ack: self.algorithm.request_ack,
                copy_cap: None,
                copy_cap_log_base: self.algorithm.copy_cap_log_base,
                rng_seed: self.traffic.seed,
            },
            valiant: self.parse_valiant().expect("validated"),
            same_copy_bypass: self.algorithm.same_copy_bypass,
            aggregated_links: self.algorithm.aggregated_links,
            sample_series: self.output.sample_limit,
            sample_messages: self.output.sample_limit,
            mem_budget_mb: None,
        }
    }

    pub fn traffic_spec(&self) -> TrafficSpec {
        let pattern = match self.traffic.pattern.as_str() {
            "uir_destinations" => TrafficPattern::UirDestinations,
            _ => TrafficPattern::UniformPermutation,
        };
        TrafficSpec { pattern, per_node: self.traffic.per_node, seed: self.traffic.seed }
    }

    pub fn delay_model(&self) -> DelayModel {
        DelayModel { c_h: self.model.c_h, c_p: self.model.c_p }
    }

    pub fn wants(&self, format: &str) -> bool {
        self.output.formats.iter().any(|f| f == format)
    }
}
