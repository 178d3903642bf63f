//! Experiment configuration, manifests and versioned CSV tables.
//!
//! Configuration is a plain `key = value` file; `#` starts a comment. A
//! manifest is the fully resolved configuration in the same format, so a
//! run can be repeated from its own manifest.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::check_field;
use crate::landscape::Landscape;
use crate::lattice::{SpinConfig, Torus};
use crate::paths::CaseId;
use crate::space::StateSpace;

pub const CSV_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_HEADER: &str = "# pcascape manifest v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Landscape,
    Paths,
    Exact,
    Mc,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Landscape => "landscape",
            Command::Paths => "paths",
            Command::Exact => "exact",
            Command::Mc => "mc",
            Command::Report => "report",
        }
    }
}

impl FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "landscape" => Ok(Command::Landscape),
            "paths" => Ok(Command::Paths),
            "exact" => Ok(Command::Exact),
            "mc" => Ok(Command::Mc),
            "report" => Ok(Command::Report),
            other => Err(Error::Parse(format!("unknown command {other:?}"))),
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub geometry: Torus,
    pub h: f64,
    pub betas: Vec<f64>,
    pub seed: Option<u64>,
    pub trials: u64,
    pub step_cap: Option<u64>,
    pub cap_sites: usize,
    pub cases: Vec<CaseId>,
    pub epsilons: Vec<f64>,
    pub out: PathBuf,
    pub threads: usize,
    pub expensive: bool,
    pub storyboard: bool,
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        ExperimentConfig {
            command,
            geometry: Torus::new(6, 2).unwrap(),
            h: 0.5,
            betas: vec![1.0],
            seed: None,
            trials: 100,
            step_cap: None,
            cap_sites: StateSpace::DEFAULT_CAP,
            cases: CaseId::ALL.to_vec(),
            epsilons: vec![0.25],
            out: PathBuf::from("out"),
            threads: 0,
            expensive: false,
            storyboard: false,
        }
    }

    /// Parses a configuration file. `command` is required.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", k + 1)))?;
            let key = key.trim().to_string();
            if pairs.iter().any(|(p, _)| *p == key) {
                return Err(Error::Parse(format!("line {}: duplicate key {key:?}", k + 1)));
            }
            pairs.push((key, value.trim().to_string()));
        }
        let command = pairs
            .iter()
            .find(|(k, _)| k == "command")
            .ok_or_else(|| Error::Parse("missing key \"command\"".into()))?
            .1
            .parse()?;
        let mut cfg = ExperimentConfig::new(command);
        for (k, v) in &pairs {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// Applies one `key = value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Parse(format!("{key}: invalid {what} {value:?}"));
        match key {
            "command" => self.command = value.parse()?,
            "geometry" => self.geometry = Torus::parse(value)?,
            "h" => self.h = value.parse().map_err(|_| bad("number"))?,
            "beta" => self.betas = parse_list(value).map_err(|_| bad("list of numbers"))?,
            "seed" => {
                self.seed = match value {
                    "" | "none" => None,
                    v => Some(v.parse().map_err(|_| bad("seed"))?),
                }
            }
            "trials" => self.trials = value.parse().map_err(|_| bad("integer"))?,
            "step_cap" => {
                self.step_cap = match value {
                    "" | "auto" => None,
                    v => Some(v.parse().map_err(|_| bad("integer"))?),
                }
            }
            "cap_sites" => self.cap_sites = value.parse().map_err(|_| bad("integer"))?,
            "cases" => {
                self.cases = if value == "all" {
                    CaseId::ALL.to_vec()
                } else {
                    value
                        .split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(str::parse)
                        .collect::<Result<_>>()?
                }
            }
            "epsilon" => self.epsilons = parse_list(value).map_err(|_| bad("list of numbers"))?,
            "out" => self.out = PathBuf::from(value),
            "threads" => self.threads = value.parse().map_err(|_| bad("integer"))?,
            "expensive" => self.expensive = parse_bool(value).ok_or_else(|| bad("boolean"))?,
            "storyboard" => self.storyboard = parse_bool(value).ok_or_else(|| bad("boolean"))?,
            other => return Err(Error::Parse(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        check_field(self.h)?;
        if self.betas.is_empty() {
            return Err(Error::Param("at least one beta is required".into()));
        }
        if let Some(b) = self.betas.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(Error::Param(format!("beta must be finite and positive, got {b}")));
        }
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(Error::Param(format!("epsilon must lie in (0,1), got {e}")));
        }
        if self.cap_sites > StateSpace::HARD_CAP {
            return Err(Error::Param(format!(
                "cap_sites {} exceeds the hard cap {}",
                self.cap_sites,
                StateSpace::HARD_CAP
            )));
        }
        if self.trials == 0 && self.command == Command::Mc {
            return Err(Error::Param("trials must be positive".into()));
        }
        if self.cases.is_empty() {
            return Err(Error::Param("no cases selected".into()));
        }
        Ok(())
    }

    /// Every field, one per line, in the configuration format.
    pub fn to_manifest(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let cases = if self.cases == CaseId::ALL {
            "all".to_string()
        } else {
            self.cases.iter().map(|c| c.name()).collect::<Vec<_>>().join(", ")
        };
        let mut s = String::new();
        s.push_str(MANIFEST_HEADER);
        s.push('\n');
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        kv("command", self.command.to_string());
        kv("geometry", self.geometry.to_string());
        kv("h", self.h.to_string());
        kv("beta", list(&self.betas));
        kv("seed", self.seed.map_or("none".into(), |v| v.to_string()));
        kv("trials", self.trials.to_string());
        kv("step_cap", self.step_cap.map_or("auto".into(), |v| v.to_string()));
        kv("cap_sites", self.cap_sites.to_string());
        kv("cases", cases);
        kv("epsilon", list(&self.epsilons));
        kv("out", self.out.display().to_string());
        kv("threads", self.threads.to_string());
        kv("expensive", self.expensive.to_string());
        kv("storyboard", self.storyboard.to_string());
        s
    }
}

fn parse_list(v: &str) -> std::result::Result<Vec<f64>, std::num::ParseFloatError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect()
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

/// A CSV table whose first line is `# pcascape:<schema> v<version>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsvTable {
    pub schema: String,
    pub version: u32,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(schema: &str, header: &[&str]) -> Self {
        CsvTable {
            schema: schema.to_string(),
            version: CSV_SCHEMA_VERSION,
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).unwrap();
        for r in &self.rows {
            w.write_record(r).unwrap();
        }
        let body = String::from_utf8(w.into_inner().unwrap()).unwrap();
        format!("# pcascape:{} v{}\n{body}", self.schema, self.version)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
        let tag = first
            .trim_end_matches('\r')
            .strip_prefix("# pcascape:")
            .ok_or_else(|| Error::Parse("missing schema comment line".into()))?;
        let (schema, version) = tag
            .rsplit_once(" v")
            .ok_or_else(|| Error::Parse("schema line lacks a version".into()))?;
        let version: u32 = version
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad schema version {version:?}")))?;
        if version != CSV_SCHEMA_VERSION {
            return Err(Error::Parse(format!("unsupported schema version {version}")));
        }
        let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(rest.as_bytes());
        let header: Vec<String> = rd
            .headers()
            .map_err(|e| Error::Parse(e.to_string()))?
            .iter()
            .map(String::from)
            .collect();
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            rows.push(rec.iter().map(String::from).collect());
        }
        Ok(CsvTable {
            schema: schema.to_string(),
            version,
            header,
            rows,
        })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("missing column {name:?}")))
    }
}

pub const LANDSCAPE_COLUMNS: [&str; 7] = ["state", "config", "energy", "energy_c", "energy_h", "trap", "stability"];

/// One row of the landscape table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeRow {
    pub state: usize,
    pub config: SpinConfig,
    pub energy: f64,
    pub energy_c: i64,
    pub energy_h: i64,
    pub trap: bool,
    pub stability: f64,
}

impl Serialize for SpinConfig {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for SpinConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        SpinConfig::parse_hex(&s).map_err(serde::de::Error::custom)
    }
}

pub fn landscape_rows(land: &Landscape) -> Vec<LandscapeRow> {
    let sp = land.space();
    (0..land.len())
        .map(|x| {
            let lv = sp.level(x);
            LandscapeRow {
                state: x,
                config: sp.config(x),
                energy: land.energy(x),
                energy_c: lv.c,
                energy_h: lv.k,
                trap: land.is_trap(x),
                stability: land.stability_level(x),
            }
        })
        .collect()
}

pub fn landscape_table(rows: &[LandscapeRow]) -> CsvTable {
    let mut t = CsvTable::new("landscape", &LANDSCAPE_COLUMNS);
    for r in rows {
        t.push(vec![
            r.state.to_string(),
            r.config.to_hex(),
            r.energy.to_string(),
            r.energy_c.to_string(),
            r.energy_h.to_string(),
            r.trap.to_string(),
            r.stability.to_string(),
        ]);
    }
    t
}

/// Parses and checks a landscape table: column names, field types, the
/// state index against the configuration bits, and the energy against
/// its exact pair.
pub fn parse_landscape_csv(text: &str, h: f64) -> Result<Vec<LandscapeRow>> {
    let t = CsvTable::parse(text)?;
    if t.schema != "landscape" {
        return Err(Error::Parse(format!("expected a landscape table, got {:?}", t.schema)));
    }
    if t.header != LANDSCAPE_COLUMNS {
        return Err(Error::Parse("unexpected landscape columns".into()));
    }
    let num = |s: &str, what: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::Parse(format!("bad {what} {s:?}")))
    };
    let int = |s: &str, what: &str| -> Result<i64> {
        s.parse::<i64>()
            .map_err(|_| Error::Parse(format!("bad {what} {s:?}")))
    };
    t.rows
        .iter()
        .map(|r| {
            if r.len() != LANDSCAPE_COLUMNS.len() {
                return Err(Error::Parse("short row".into()));
            }
            let state: usize = r[0]
                .parse()
                .map_err(|_| Error::Parse(format!("bad state {:?}", r[0])))?;
            let config = SpinConfig::parse_hex(&r[1])?;
            if config.state_id() != Some(state as u64) {
                return Err(Error::Parse(format!("state {state} does not match its configuration")));
            }
            let energy = num(&r[2], "energy")?;
            let energy_c = int(&r[3], "energy_c")?;
            let energy_h = int(&r[4], "energy_h")?;
            let exact = energy_c as f64 + energy_h as f64 * h;
            if (exact - energy).abs() > 1e-9 * (1.0 + exact.abs()) {
                return Err(Error::Parse(format!("energy of state {state} disagrees with its exact form")));
            }
            let trap = r[5]
                .parse()
                .map_err(|_| Error::Parse(format!("bad trap flag {:?}", r[5])))?;
            let stability = num(&r[6], "stability")?;
            Ok(LandscapeRow {
                state,
                config,
                energy,
                energy_c,
                energy_h,
                trap,
                stability,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trip() {
        let mut c = ExperimentConfig::new(Command::Exact);
        c.betas = vec![1.0, 2.5, 1e-12];
        c.seed = Some(u64::MAX);
        c.cases = vec![CaseId::A1, CaseId::E7];
        c.h = 0.1 + 0.2;
        let back = ExperimentConfig::parse(&c.to_manifest()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn config_errors() {
        assert!(ExperimentConfig::parse("h = 0.5").is_err());
        assert!(ExperimentConfig::parse("command = mc\nfoo = 1").is_err());
        assert!(ExperimentConfig::parse("command = mc\nh = 1\nh = 2").is_err());
        let c = ExperimentConfig::parse("command = mc # trailing\nh = 1.5").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn csv_round_trip() {
        let mut t = CsvTable::new("demo", &["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        let back = CsvTable::parse(&t.to_csv()).unwrap();
        assert_eq!(back, t);
        assert!(CsvTable::parse("a,b\n1,2\n").is_err());
    }
}
