//! Scenario files: a small sectioned `key = value` format.
//!
//! ```text
//! # comment
//! [system]
//! preset = bistable_reference
//! chi = 0.3
//!
//! [drive]
//! eta0 = 0.1
//!
//! [task]
//! kind = bistability
//! input_grid = linspace(0.01, 1.5, 300)
//! ```
//!
//! Values are numbers, booleans, bare words, lists `[a, b, ...]` or
//! `linspace(start, stop, n)`. See `docs/formats.md` for every key.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use optomech_core::params::PARAM_NAMES;
use optomech_core::{DriveConfig, MeasurePolicy, SystemParams, ThermalFactor};
use serde::Serialize;

/// Position-tagged configuration error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigError {
    /// 1-based line, when the problem has one.
    pub line: Option<usize>,
    pub kind: ConfigErrorKind,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfigErrorKind {
    Syntax,
    UnknownKey,
    MissingSection,
    MissingKey,
    Invariant,
}

impl ConfigError {
    fn new(line: Option<usize>, kind: ConfigErrorKind, message: impl Into<String>) -> Self {
        Self {
            line,
            kind,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

/// A grid kept in the form it was written, so serialisation is exact.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Grid {
    Values(Vec<f64>),
    Linspace { start: f64, stop: f64, n: usize },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::Values(v) => v.clone(),
            Grid::Linspace { start, stop, n } => optomech_core::spectrum::linspace(*start, *stop, *n),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Grid::Values(v) => v.len(),
            Grid::Linspace { n, .. } => *n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn ascending(&self) -> bool {
        self.values().windows(2).all(|w| w[1] > w[0])
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grid::Values(v) => {
                f.write_char('[')?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{x:?}")?;
                }
                f.write_char(']')
            }
            Grid::Linspace { start, stop, n } => write!(f, "linspace({start:?}, {stop:?}, {n})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Bistability,
    Spectrum,
    SwitchMetrics,
    Hysteresis,
    Sweep,
}

impl TaskKind {
    pub const ALL: [TaskKind; 5] = [
        TaskKind::Bistability,
        TaskKind::Spectrum,
        TaskKind::SwitchMetrics,
        TaskKind::Hysteresis,
        TaskKind::Sweep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Bistability => "bistability",
            TaskKind::Spectrum => "spectrum",
            TaskKind::SwitchMetrics => "switch-metrics",
            TaskKind::Hysteresis => "hysteresis",
            TaskKind::Sweep => "sweep",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which stable steady state a spectrum is taken at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanParam {
    PAmp,
    OmegaMod,
}

impl ScanParam {
    pub fn as_str(self) -> &'static str {
        match self {
            ScanParam::PAmp => "p_amp",
            ScanParam::OmegaMod => "omega_mod",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BistabilityTask {
    pub input_grid: Grid,
    /// Static rocking offset; derived from the drive when absent.
    pub rocking: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumTask {
    pub omega_grid: Grid,
    pub rocking: Option<f64>,
    pub branch: Branch,
    /// Thermal factor of an accompanying closed-form audit, if requested.
    pub closed_form: Option<ThermalFactor>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwitchTask {
    pub scan: Option<(ScanParam, Grid)>,
    pub bandwidth_grid: Option<Grid>,
    pub policy: MeasurePolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HysteresisTask {
    pub input_min: f64,
    pub input_max: f64,
    pub rate: f64,
    pub points: usize,
    pub rocking: Option<f64>,
    /// Repeat at half and quarter rate and extrapolate the jumps.
    pub richardson: bool,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TaskSpec {
    Bistability(BistabilityTask),
    Spectrum(SpectrumTask),
    SwitchMetrics(SwitchTask),
    Hysteresis(HysteresisTask),
}

impl TaskSpec {
    pub fn kind(&self) -> TaskKind {
        match self {
            TaskSpec::Bistability(_) => TaskKind::Bistability,
            TaskSpec::Spectrum(_) => TaskKind::Spectrum,
            TaskSpec::SwitchMetrics(_) => TaskKind::SwitchMetrics,
            TaskSpec::Hysteresis(_) => TaskKind::Hysteresis,
        }
    }

    /// Parameters the task varies itself, which a sweep may not touch.
    fn own_parameters(&self) -> Vec<&'static str> {
        match self {
            TaskSpec::Bistability(_) | TaskSpec::Hysteresis(_) => vec!["eta0"],
            TaskSpec::Spectrum(_) => vec![],
            TaskSpec::SwitchMetrics(t) => match &t.scan {
                Some((p, _)) => vec![p.as_str()],
                None => vec![],
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub param: String,
    pub values: Grid,
}

/// Output formats besides the manifest, which is always written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
}

impl Default for Formats {
    fn default() -> Self {
        Self { csv: true, json: true }
    }
}

impl Formats {
    /// Parses a comma-separated list such as `csv,json`.
    pub fn parse_list(s: &str) -> std::result::Result<Self, String> {
        let mut f = Formats { csv: false, json: false };
        for item in s.split(',').map(str::trim) {
            match item {
                "csv" => f.csv = true,
                "json" => f.json = true,
                other => return Err(format!("unknown format `{other}` (expected csv, json)")),
            }
        }
        if !(f.csv || f.json) {
            return Err("at least one output format is required".into());
        }
        Ok(f)
    }

    fn names(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.csv {
            v.push("csv");
        }
        if self.json {
            v.push("json");
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub params: SystemParams,
    pub drive: DriveConfig,
    pub task: TaskSpec,
    pub sweep: Option<SweepSpec>,
    pub formats: Formats,
}

impl ScenarioConfig {
    pub fn kind(&self) -> TaskKind {
        if self.sweep.is_some() {
            TaskKind::Sweep
        } else {
            self.task.kind()
        }
    }
}

/// Names a sweep may vary: every system parameter, the drive, and the
/// task's rocking offset.
pub fn sweepable(name: &str) -> bool {
    PARAM_NAMES.contains(&name) || matches!(name, "eta0" | "p_amp" | "omega_mod" | "rocking")
}

pub fn preset(name: &str) -> Option<SystemParams> {
    Some(match name {
        "bistable_reference" => SystemParams::bistable_reference(),
        "switching_strong_hopping" => SystemParams::switching_strong_hopping(),
        "switching_weak_hopping" => SystemParams::switching_weak_hopping(),
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Number(f64),
    Bool(bool),
    Word(String),
    List(Vec<Value>),
    Linspace(f64, f64, usize),
}

impl Value {
    fn describe(&self) -> &'static str {
        match self {
            Value::Number(_) => "a number",
            Value::Bool(_) => "a boolean",
            Value::Word(_) => "a word",
            Value::List(_) => "a list",
            Value::Linspace(..) => "a linspace",
        }
    }
}

#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    value: Value,
    used: bool,
}

struct ValueParser<'a> {
    s: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> ValueParser<'a> {
    fn err(&self, msg: impl Into<String>) -> ConfigError {
        ConfigError::new(Some(self.line), ConfigErrorKind::Syntax, msg)
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.s.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn token(&mut self) -> &'a str {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() {
            let c = self.s[self.pos];
            if c.is_ascii_alphanumeric() || matches!(c, b'_' | b'-' | b'+' | b'.') {
                self.pos += 1;
            } else {
                break;
            }
        }
        std::str::from_utf8(&self.s[start..self.pos]).unwrap_or("")
    }

    fn number(&mut self) -> Result<f64> {
        let tok = self.token();
        tok.parse::<f64>()
            .map_err(|_| self.err(format!("expected a number, found `{tok}`")))
    }

    fn value(&mut self) -> Result<Value> {
        self.skip_ws();
        if self.eat(b'[') {
            let mut items = Vec::new();
            if self.eat(b']') {
                return Ok(Value::List(items));
            }
            loop {
                items.push(self.scalar()?);
                if self.eat(b']') {
                    break;
                }
                if !self.eat(b',') {
                    return Err(self.err("expected `,` or `]` in list"));
                }
            }
            return Ok(Value::List(items));
        }
        self.scalar()
    }

    fn scalar(&mut self) -> Result<Value> {
        let tok = self.token();
        if tok.is_empty() {
            return Err(self.err("expected a value"));
        }
        if tok == "linspace" {
            if !self.eat(b'(') {
                return Err(self.err("expected `(` after linspace"));
            }
            let start = self.number()?;
            if !self.eat(b',') {
                return Err(self.err("linspace takes (start, stop, n)"));
            }
            let stop = self.number()?;
            if !self.eat(b',') {
                return Err(self.err("linspace takes (start, stop, n)"));
            }
            let n_tok = self.token();
            let n = n_tok
                .parse::<usize>()
                .map_err(|_| self.err(format!("linspace count must be a non-negative integer, found `{n_tok}`")))?;
            if !self.eat(b')') {
                return Err(self.err("expected `)` closing linspace"));
            }
            return Ok(Value::Linspace(start, stop, n));
        }
        if tok == "true" || tok == "false" {
            return Ok(Value::Bool(tok == "true"));
        }
        if let Ok(x) = tok.parse::<f64>() {
            return Ok(Value::Number(x));
        }
        let first = tok.as_bytes()[0];
        if first.is_ascii_alphabetic() || first == b'_' {
            return Ok(Value::Word(tok.to_string()));
        }
        Err(self.err(format!("cannot parse value `{tok}`")))
    }

    fn finish(&mut self) -> Result<()> {
        self.skip_ws();
        if self.pos < self.s.len() {
            let rest = String::from_utf8_lossy(&self.s[self.pos..]);
            return Err(self.err(format!("unexpected trailing text `{rest}`")));
        }
        Ok(())
    }
}

const SECTIONS: [&str; 3] = ["system", "drive", "task"];

/// Key-value table of one section with usage tracking.
struct Section {
    name: &'static str,
    line: usize,
    entries: BTreeMap<String, Entry>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<(usize, Value)> {
        let e = self.entries.get_mut(key)?;
        e.used = true;
        Some((e.line, e.value.clone()))
    }

    fn missing(&self, key: &str) -> ConfigError {
        ConfigError::new(
            Some(self.line),
            ConfigErrorKind::MissingKey,
            format!("[{}] is missing required key `{key}`", self.name),
        )
    }

    fn invariant(line: usize, msg: impl Into<String>) -> ConfigError {
        ConfigError::new(Some(line), ConfigErrorKind::Invariant, msg)
    }

    fn f64_opt(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some((line, Value::Number(x))) => {
                if !x.is_finite() {
                    return Err(Self::invariant(line, format!("`{key}` must be finite")));
                }
                Ok(Some(x))
            }
            Some((line, v)) => Err(ConfigError::new(
                Some(line),
                ConfigErrorKind::Syntax,
                format!("`{key}` must be a number, found {}", v.describe()),
            )),
        }
    }

    fn f64_req(&mut self, key: &str) -> Result<f64> {
        self.f64_opt(key)?.ok_or_else(|| self.missing(key))
    }

    fn usize_opt(&mut self, key: &str) -> Result<Option<usize>> {
        let line = self.entries.get(key).map(|e| e.line);
        match self.f64_opt(key)? {
            None => Ok(None),
            Some(x) if x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64 => Ok(Some(x as usize)),
            Some(x) => Err(Self::invariant(
                line.unwrap_or(self.line),
                format!("`{key}` must be a non-negative integer, got {x}"),
            )),
        }
    }

    fn bool_opt(&mut self, key: &str) -> Result<Option<bool>> {
        match self.take(key) {
            None => Ok(None),
            Some((_, Value::Bool(b))) => Ok(Some(b)),
            Some((line, v)) => Err(ConfigError::new(
                Some(line),
                ConfigErrorKind::Syntax,
                format!("`{key}` must be true or false, found {}", v.describe()),
            )),
        }
    }

    fn word_opt(&mut self, key: &str) -> Result<Option<(usize, String)>> {
        match self.take(key) {
            None => Ok(None),
            Some((line, Value::Word(w))) => Ok(Some((line, w))),
            Some((line, v)) => Err(ConfigError::new(
                Some(line),
                ConfigErrorKind::Syntax,
                format!("`{key}` must be a word, found {}", v.describe()),
            )),
        }
    }

    fn grid_opt(&mut self, key: &str) -> Result<Option<(usize, Grid)>> {
        let (line, value) = match self.take(key) {
            None => return Ok(None),
            Some(x) => x,
        };
        let grid = match value {
            Value::Linspace(start, stop, n) => Grid::Linspace { start, stop, n },
            Value::List(items) => Grid::Values(
                items
                    .into_iter()
                    .map(|v| match v {
                        Value::Number(x) => Ok(x),
                        other => Err(ConfigError::new(
                            Some(line),
                            ConfigErrorKind::Syntax,
                            format!("`{key}` must list numbers, found {}", other.describe()),
                        )),
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
            Value::Number(x) => Grid::Values(vec![x]),
            other => {
                return Err(ConfigError::new(
                    Some(line),
                    ConfigErrorKind::Syntax,
                    format!("`{key}` must be a list or linspace, found {}", other.describe()),
                ))
            }
        };
        if grid.is_empty() {
            return Err(Self::invariant(line, format!("`{key}` is empty")));
        }
        if grid.values().iter().any(|x| !x.is_finite()) {
            return Err(Self::invariant(line, format!("`{key}` has non-finite entries")));
        }
        Ok(Some((line, grid)))
    }

    fn grid_req(&mut self, key: &str) -> Result<(usize, Grid)> {
        self.grid_opt(key)?.ok_or_else(|| self.missing(key))
    }

    fn reject_unused(&self) -> Result<()> {
        match self.entries.iter().filter(|(_, e)| !e.used).min_by_key(|(_, e)| e.line) {
            Some((k, e)) => Err(ConfigError::new(
                Some(e.line),
                ConfigErrorKind::UnknownKey,
                format!("unknown key `{k}` in [{}]", self.name),
            )),
            None => Ok(()),
        }
    }
}

fn split_sections(text: &str) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::new(Some(line), ConfigErrorKind::Syntax, "unterminated section header"))?
                .trim();
            let name = SECTIONS.into_iter().find(|s| *s == name).ok_or_else(|| {
                ConfigError::new(
                    Some(line),
                    ConfigErrorKind::UnknownKey,
                    format!("unknown section [{name}] (expected [system], [drive] or [task])"),
                )
            })?;
            if sections.iter().any(|s| s.name == name) {
                return Err(ConfigError::new(
                    Some(line),
                    ConfigErrorKind::Syntax,
                    format!("section [{name}] appears twice"),
                ));
            }
            sections.push(Section {
                name,
                line,
                entries: BTreeMap::new(),
            });
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| {
            ConfigError::new(Some(line), ConfigErrorKind::Syntax, format!("expected `key = value`, found `{content}`"))
        })?;
        let key = key.trim();
        if key.is_empty() || !key.bytes().all(|c| c.is_ascii_alphanumeric() || c == b'_') {
            return Err(ConfigError::new(
                Some(line),
                ConfigErrorKind::Syntax,
                format!("invalid key `{key}`"),
            ));
        }
        let section = sections.last_mut().ok_or_else(|| {
            ConfigError::new(Some(line), ConfigErrorKind::Syntax, "key outside of any section")
        })?;
        let mut vp = ValueParser {
            s: value.as_bytes(),
            pos: 0,
            line,
        };
        let value = vp.value()?;
        vp.finish()?;
        if section.entries.contains_key(key) {
            return Err(ConfigError::new(
                Some(line),
                ConfigErrorKind::Syntax,
                format!("duplicate key `{key}` in [{}]", section.name),
            ));
        }
        section.entries.insert(
            key.to_string(),
            Entry {
                line,
                value,
                used: false,
            },
        );
    }
    Ok(sections)
}

fn section(sections: &mut [Section], name: &str) -> Result<Section> {
    let i = sections.iter().position(|s| s.name == name).ok_or_else(|| {
        ConfigError::new(None, ConfigErrorKind::MissingSection, format!("missing section [{name}]"))
    })?;
    Ok(std::mem::replace(
        &mut sections[i],
        Section {
            name: "taken",
            line: 0,
            entries: BTreeMap::new(),
        },
    ))
}

fn parse_system(s: &mut Section) -> Result<SystemParams> {
    let base = match s.word_opt("preset")? {
        Some((line, name)) => Some(preset(&name).ok_or_else(|| {
            Section::invariant(line, format!("unknown preset `{name}`"))
        })?),
        None => None,
    };
    let mut params = base.unwrap_or(SystemParams::bistable_reference());
    for name in PARAM_NAMES {
        match s.f64_opt(name)? {
            Some(x) => {
                params.set(name, x);
            }
            None if base.is_none() => return Err(s.missing(name)),
            None => {}
        }
    }
    s.reject_unused()?;
    params.validate().map_err(|e| {
        let line = match &e {
            optomech_core::Error::InvalidParams { field, .. } => s.entries.get(*field).map(|x| x.line),
            _ => None,
        };
        ConfigError::new(line.or(Some(s.line)), ConfigErrorKind::Invariant, e.to_string())
    })?;
    Ok(params)
}

fn parse_drive(s: &mut Section) -> Result<DriveConfig> {
    let drive = DriveConfig {
        eta0: s.f64_req("eta0")?,
        p_amp: s.f64_opt("p_amp")?.unwrap_or(0.0),
        omega_mod: s.f64_opt("omega_mod")?.unwrap_or(1.0),
    };
    s.reject_unused()?;
    drive
        .validate()
        .map_err(|e| ConfigError::new(Some(s.line), ConfigErrorKind::Invariant, e.to_string()))?;
    Ok(drive)
}

fn ascending(line: usize, key: &str, g: &Grid) -> Result<()> {
    if g.ascending() {
        Ok(())
    } else {
        Err(Section::invariant(line, format!("`{key}` must be strictly ascending")))
    }
}

fn parse_task(s: &mut Section, kind: TaskKind) -> Result<TaskSpec> {
    let rocking = |s: &mut Section| -> Result<Option<f64>> {
        let line = s.entries.get("rocking").map_or(s.line, |e| e.line);
        match s.f64_opt("rocking")? {
            Some(c) if c < 0.0 => Err(Section::invariant(line, "`rocking` must be >= 0")),
            c => Ok(c),
        }
    };
    Ok(match kind {
        TaskKind::Bistability => {
            let (line, input_grid) = s.grid_req("input_grid")?;
            ascending(line, "input_grid", &input_grid)?;
            if input_grid.len() < 2 || input_grid.values()[0] < 0.0 {
                return Err(Section::invariant(line, "`input_grid` needs >= 2 non-negative powers"));
            }
            TaskSpec::Bistability(BistabilityTask {
                input_grid,
                rocking: rocking(s)?,
            })
        }
        TaskKind::Spectrum => {
            let (line, omega_grid) = s.grid_req("omega_grid")?;
            ascending(line, "omega_grid", &omega_grid)?;
            if omega_grid.len() < 500 {
                return Err(Section::invariant(line, "`omega_grid` needs at least 500 points for peak detection"));
            }
            let branch = match s.word_opt("branch")? {
                None => Branch::Lower,
                Some((_, w)) if w == "lower" => Branch::Lower,
                Some((_, w)) if w == "upper" => Branch::Upper,
                Some((line, w)) => return Err(Section::invariant(line, format!("`branch` must be lower or upper, got `{w}`"))),
            };
            let closed_form = match s.word_opt("closed_form")? {
                None => None,
                Some((_, w)) if w == "none" => None,
                Some((_, w)) if w == "printed" => Some(ThermalFactor::Printed),
                Some((_, w)) if w == "symmetrized" => Some(ThermalFactor::SymmetrizedBrownian),
                Some((line, w)) => {
                    return Err(Section::invariant(
                        line,
                        format!("`closed_form` must be none, printed or symmetrized, got `{w}`"),
                    ))
                }
            };
            TaskSpec::Spectrum(SpectrumTask {
                omega_grid,
                rocking: rocking(s)?,
                branch,
                closed_form,
            })
        }
        TaskKind::SwitchMetrics => {
            let scan = match s.word_opt("scan")? {
                None => None,
                Some((_, w)) if w == "none" => None,
                Some((line, w)) => {
                    let p = match w.as_str() {
                        "p_amp" => ScanParam::PAmp,
                        "omega_mod" => ScanParam::OmegaMod,
                        _ => return Err(Section::invariant(line, format!("`scan` must be p_amp or omega_mod, got `{w}`"))),
                    };
                    let (gl, g) = s.grid_req("scan_grid")?;
                    if g.values().iter().any(|x| *x <= 0.0) {
                        return Err(Section::invariant(gl, "`scan_grid` values must be > 0"));
                    }
                    Some((p, g))
                }
            };
            if scan.is_none() && s.entries.contains_key("scan_grid") {
                let line = s.entries["scan_grid"].line;
                return Err(Section::invariant(line, "`scan_grid` needs `scan`"));
            }
            let bandwidth_grid = match s.grid_opt("bandwidth_grid")? {
                Some((line, g)) => {
                    ascending(line, "bandwidth_grid", &g)?;
                    if g.len() < optomech_core::switching::MIN_BANDWIDTH_POINTS || g.values()[0] <= 0.0 {
                        return Err(Section::invariant(
                            line,
                            format!(
                                "`bandwidth_grid` needs at least {} positive frequencies",
                                optomech_core::switching::MIN_BANDWIDTH_POINTS
                            ),
                        ));
                    }
                    Some(g)
                }
                None => None,
            };
            let d = MeasurePolicy::default();
            let policy = MeasurePolicy {
                transient_periods: s.usize_opt("transient_periods")?.unwrap_or(d.transient_periods),
                measured_periods: s.usize_opt("measured_periods")?.unwrap_or(d.measured_periods),
                samples_per_period: s.usize_opt("samples_per_period")?.unwrap_or(d.samples_per_period),
                tol: tolerance(s)?.unwrap_or(d.tol),
            };
            if policy.measured_periods == 0 || policy.samples_per_period < 2 {
                return Err(Section::invariant(
                    s.line,
                    "need measured_periods >= 1 and samples_per_period >= 2",
                ));
            }
            TaskSpec::SwitchMetrics(SwitchTask {
                scan,
                bandwidth_grid,
                policy,
            })
        }
        TaskKind::Hysteresis => {
            let t = HysteresisTask {
                input_min: s.f64_req("input_min")?,
                input_max: s.f64_req("input_max")?,
                rate: s.f64_req("rate")?,
                points: s.usize_opt("points")?.unwrap_or(4000),
                rocking: rocking(s)?,
                richardson: s.bool_opt("richardson")?.unwrap_or(true),
                tol: tolerance(s)?.unwrap_or(optomech_core::dynamics::DEFAULT_TOL),
            };
            if !(t.input_min >= 0.0 && t.input_max > t.input_min) {
                return Err(Section::invariant(s.line, "need 0 <= input_min < input_max"));
            }
            if !(t.rate > 0.0) || t.points < 2 {
                return Err(Section::invariant(s.line, "need rate > 0 and points >= 2"));
            }
            TaskSpec::Hysteresis(t)
        }
        TaskKind::Sweep => unreachable!("sweeps wrap a base task"),
    })
}

fn tolerance(s: &mut Section) -> Result<Option<f64>> {
    let line = s.entries.get("tol").map_or(s.line, |e| e.line);
    match s.f64_opt("tol")? {
        Some(t) if !(t > 0.0 && t < 1.0) => Err(Section::invariant(line, "`tol` must lie in (0, 1)")),
        t => Ok(t),
    }
}

/// Parses and validates a scenario file.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    if text.trim().is_empty() {
        return Err(ConfigError::new(
            None,
            ConfigErrorKind::MissingSection,
            "empty configuration: missing sections [system], [drive], [task]",
        ));
    }
    let mut sections = split_sections(text)?;
    let mut system = section(&mut sections, "system")?;
    let mut drive = section(&mut sections, "drive")?;
    let mut task = section(&mut sections, "task")?;

    let params = parse_system(&mut system)?;
    let drive = parse_drive(&mut drive)?;

    let (kind_line, kind_word) = task.word_opt("kind")?.ok_or_else(|| task.missing("kind"))?;
    let kind = TaskKind::parse(&kind_word)
        .ok_or_else(|| Section::invariant(kind_line, format!("unknown task kind `{kind_word}`")))?;
    let (base, sweep) = if kind == TaskKind::Sweep {
        let (bl, bw) = task.word_opt("base")?.ok_or_else(|| task.missing("base"))?;
        let base = TaskKind::parse(&bw)
            .filter(|k| *k != TaskKind::Sweep)
            .ok_or_else(|| Section::invariant(bl, format!("`base` must name a non-sweep task, got `{bw}`")))?;
        let (pl, param) = task.word_opt("sweep_param")?.ok_or_else(|| task.missing("sweep_param"))?;
        if !sweepable(&param) {
            return Err(Section::invariant(pl, format!("`{param}` is not a sweepable parameter")));
        }
        let (_, values) = task.grid_req("sweep_values")?;
        (base, Some((pl, SweepSpec { param, values })))
    } else {
        (kind, None)
    };
    let spec = parse_task(&mut task, base)?;
    let formats = match task.take("formats") {
        None => Formats::default(),
        Some((line, Value::List(items))) => {
            let mut names = Vec::new();
            for v in items {
                match v {
                    Value::Word(w) => names.push(w),
                    other => {
                        return Err(ConfigError::new(
                            Some(line),
                            ConfigErrorKind::Syntax,
                            format!("`formats` must list words, found {}", other.describe()),
                        ))
                    }
                }
            }
            Formats::parse_list(&names.join(",")).map_err(|m| Section::invariant(line, m))?
        }
        Some((line, Value::Word(w))) => Formats::parse_list(&w).map_err(|m| Section::invariant(line, m))?,
        Some((line, v)) => {
            return Err(ConfigError::new(
                Some(line),
                ConfigErrorKind::Syntax,
                format!("`formats` must be a list of words, found {}", v.describe()),
            ))
        }
    };
    task.reject_unused()?;

    let sweep = match sweep {
        Some((line, sw)) => {
            if spec.own_parameters().contains(&sw.param.as_str()) {
                return Err(Section::invariant(
                    line,
                    format!("`{}` is already varied by the {base} task", sw.param),
                ));
            }
            if sw.param == "rocking" && matches!(spec, TaskSpec::SwitchMetrics(_)) {
                return Err(Section::invariant(line, "switch-metrics resolves the modulation and has no rocking offset"));
            }
            Some(sw)
        }
        None => None,
    };
    Ok(ScenarioConfig {
        params,
        drive,
        task: spec,
        sweep,
        formats,
    })
}

fn kv(out: &mut String, key: &str, value: impl fmt::Display) {
    let _ = writeln!(out, "{key} = {value}");
}

/// `{:?}` on f64 prints the shortest text that parses back to the same bits.
struct F(f64);

impl fmt::Display for F {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Writes a config back in the file format; `parse_config` recovers it
/// exactly.
pub fn serialize_config(cfg: &ScenarioConfig) -> String {
    let mut out = String::new();
    out.push_str("[system]\n");
    for name in PARAM_NAMES {
        kv(&mut out, name, F(cfg.params.get(name).unwrap_or(f64::NAN)));
    }
    out.push_str("\n[drive]\n");
    kv(&mut out, "eta0", F(cfg.drive.eta0));
    kv(&mut out, "p_amp", F(cfg.drive.p_amp));
    kv(&mut out, "omega_mod", F(cfg.drive.omega_mod));
    out.push_str("\n[task]\n");
    kv(&mut out, "kind", cfg.kind());
    if let Some(sw) = &cfg.sweep {
        kv(&mut out, "base", cfg.task.kind());
        kv(&mut out, "sweep_param", &sw.param);
        kv(&mut out, "sweep_values", &sw.values);
    }
    let rocking = |out: &mut String, c: Option<f64>| {
        if let Some(c) = c {
            kv(out, "rocking", F(c));
        }
    };
    match &cfg.task {
        TaskSpec::Bistability(t) => {
            kv(&mut out, "input_grid", &t.input_grid);
            rocking(&mut out, t.rocking);
        }
        TaskSpec::Spectrum(t) => {
            kv(&mut out, "omega_grid", &t.omega_grid);
            rocking(&mut out, t.rocking);
            kv(
                &mut out,
                "branch",
                match t.branch {
                    Branch::Lower => "lower",
                    Branch::Upper => "upper",
                },
            );
            kv(
                &mut out,
                "closed_form",
                match t.closed_form {
                    None => "none",
                    Some(ThermalFactor::Printed) => "printed",
                    Some(ThermalFactor::SymmetrizedBrownian) => "symmetrized",
                },
            );
        }
        TaskSpec::SwitchMetrics(t) => {
            if let Some((p, g)) = &t.scan {
                kv(&mut out, "scan", p.as_str());
                kv(&mut out, "scan_grid", g);
            }
            if let Some(g) = &t.bandwidth_grid {
                kv(&mut out, "bandwidth_grid", g);
            }
            kv(&mut out, "transient_periods", t.policy.transient_periods);
            kv(&mut out, "measured_periods", t.policy.measured_periods);
            kv(&mut out, "samples_per_period", t.policy.samples_per_period);
            kv(&mut out, "tol", F(t.policy.tol));
        }
        TaskSpec::Hysteresis(t) => {
            kv(&mut out, "input_min", F(t.input_min));
            kv(&mut out, "input_max", F(t.input_max));
            kv(&mut out, "rate", F(t.rate));
            kv(&mut out, "points", t.points);
            rocking(&mut out, t.rocking);
            kv(&mut out, "richardson", t.richardson);
            kv(&mut out, "tol", F(t.tol));
        }
    }
    kv(&mut out, "formats", format!("[{}]", cfg.formats.names().join(", ")));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG2: &str = "\
# bistability with the reference set
[system]
preset = bistable_reference
j_coupling = 0.5
chi = 0.3

[drive]
eta0 = 0.3   # bias

[task]
kind = bistability
input_grid = linspace(0.01, 1.5, 300)
rocking = 0.1
";

    #[test]
    fn parses_a_minimal_file() {
        let cfg = parse_config(FIG2).unwrap();
        assert_eq!(cfg.params.j_coupling, 0.5);
        assert_eq!(cfg.params.chi, 0.3);
        assert_eq!(cfg.drive.eta0, 0.3);
        assert_eq!(cfg.kind(), TaskKind::Bistability);
        match &cfg.task {
            TaskSpec::Bistability(t) => {
                assert_eq!(t.rocking, Some(0.1));
                assert_eq!(t.input_grid.len(), 300);
            }
            _ => panic!("wrong task"),
        }
    }

    #[test]
    fn round_trips() {
        let cfg = parse_config(FIG2).unwrap();
        let text = serialize_config(&cfg);
        assert_eq!(parse_config(&text).unwrap(), cfg);
        assert_eq!(serialize_config(&parse_config(&text).unwrap()), text);
    }

    #[test]
    fn inversion_out_of_range_names_the_field() {
        let text = FIG2.replace("chi = 0.3", "chi = 0.3\nn_inversion = 2");
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.kind, ConfigErrorKind::Invariant);
        assert!(err.message.contains("n_inversion"), "{err}");
        assert_eq!(err.line, Some(6));
    }

    #[test]
    fn empty_file_is_missing_sections() {
        let err = parse_config("").unwrap_err();
        assert_eq!(err.kind, ConfigErrorKind::MissingSection);
        let err = parse_config("# only a comment\n").unwrap_err();
        assert_eq!(err.kind, ConfigErrorKind::MissingSection);
    }

    #[test]
    fn unknown_keys_carry_their_line() {
        let text = FIG2.replace("rocking = 0.1", "rocking = 0.1\nfoo = 1");
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.kind, ConfigErrorKind::UnknownKey);
        assert_eq!(err.line, Some(14));
        assert!(err.message.contains("foo"));
    }

    #[test]
    fn syntax_errors_carry_their_line() {
        let err = parse_config("[system]\nchi 0.3\n").unwrap_err();
        assert_eq!((err.kind, err.line), (ConfigErrorKind::Syntax, Some(2)));
        let err = parse_config("[system]\nchi = linspace(1, 2)\n").unwrap_err();
        assert_eq!((err.kind, err.line), (ConfigErrorKind::Syntax, Some(2)));
        let err = parse_config("[nope]\n").unwrap_err();
        assert_eq!((err.kind, err.line), (ConfigErrorKind::UnknownKey, Some(1)));
    }

    #[test]
    fn sweep_needs_a_grid_and_an_orthogonal_parameter() {
        let base = FIG2.replace("kind = bistability", "kind = sweep\nbase = bistability\nsweep_param = rocking");
        let with_values = base.replace("rocking = 0.1\n", "sweep_values = [0.1, 0.36, 0.49]\n");
        let cfg = parse_config(&with_values).unwrap();
        assert_eq!(cfg.kind(), TaskKind::Sweep);
        assert_eq!(cfg.sweep.as_ref().unwrap().values, Grid::Values(vec![0.1, 0.36, 0.49]));
        assert_eq!(parse_config(&serialize_config(&cfg)).unwrap(), cfg);

        let empty = with_values.replace("[0.1, 0.36, 0.49]", "[]");
        assert_eq!(parse_config(&empty).unwrap_err().kind, ConfigErrorKind::Invariant);
        let own = with_values.replace("sweep_param = rocking", "sweep_param = eta0");
        assert_eq!(parse_config(&own).unwrap_err().kind, ConfigErrorKind::Invariant);
        let bogus = with_values.replace("sweep_param = rocking", "sweep_param = flux");
        assert_eq!(parse_config(&bogus).unwrap_err().kind, ConfigErrorKind::Invariant);
    }

    #[test]
    fn awkward_floats_round_trip() {
        let mut cfg = parse_config(FIG2).unwrap();
        cfg.params.theta = 0.1 + 0.2;
        cfg.params.thermal_ratio = 1e-300;
        cfg.drive.eta0 = -0.0;
        let back = parse_config(&serialize_config(&cfg)).unwrap();
        assert_eq!(back.params.theta.to_bits(), cfg.params.theta.to_bits());
        assert_eq!(back.params.thermal_ratio, 1e-300);
        assert_eq!(back.drive.eta0.to_bits(), (-0.0f64).to_bits());
    }
}
