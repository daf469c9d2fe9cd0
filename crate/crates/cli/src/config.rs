//! Line-oriented `key = value` run configuration with `[section]` headers.
//!
//! Sections: `[plant]`, `[controller]`, `[kpca]`, `[scenario]`, `[solver]`.
//! `#` starts a comment. Lists are written in brackets, `[1.0, 2.0]`, and may
//! nest one level for the reference schedule.

use std::fmt::Write as _;

use anyhow::{anyhow, bail, Context, Result};
use kpca_core::kpca::{EqualityKind, KernelMode, KpcaConfig, SolverOptions};
use kpca_core::ncc::{GeodesicGains, Ncc2dGains};
use kpca_core::sim::{ControllerSpec, MetricsOptions, Scenario, StepSchedule};
use kpca_core::{BellParams, InputBounds, PlantKind, PlantModel, Uav2dParams, Uav3dParams, VesselParams};

pub const SECTIONS: [&str; 5] = ["plant", "controller", "kpca", "scenario", "solver"];

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Num(f64),
    Bool(bool),
    Word(String),
    List(Vec<Value>),
}

impl Value {
    fn parse(text: &str) -> std::result::Result<Value, String> {
        let t = text.trim();
        if t.is_empty() {
            return Err("missing value".into());
        }
        if let Some(inner) = t.strip_prefix('[') {
            let inner = inner.strip_suffix(']').ok_or("unterminated list")?;
            return split_top_level(inner)?
                .into_iter()
                .map(Value::parse)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(Value::List);
        }
        match t {
            "true" => return Ok(Value::Bool(true)),
            "false" => return Ok(Value::Bool(false)),
            _ => {}
        }
        if let Ok(v) = t.parse::<f64>() {
            return Ok(Value::Num(v));
        }
        if t.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c)) {
            Ok(Value::Word(t.to_string()))
        } else {
            Err(format!("cannot parse value {t:?}"))
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Value::Num(_) => "number",
            Value::Bool(_) => "boolean",
            Value::Word(_) => "word",
            Value::List(_) => "list",
        }
    }
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            // Debug formatting of f64 is the shortest exact round-trip form.
            Value::Num(v) => write!(f, "{v:?}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Word(w) => f.write_str(w),
            Value::List(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

fn split_top_level(s: &str) -> std::result::Result<Vec<&str>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut parts = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in s.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => {
                depth -= 1;
                if depth < 0 {
                    return Err("unbalanced brackets".into());
                }
            }
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err("unbalanced brackets".into());
    }
    parts.push(&s[start..]);
    Ok(parts)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: Value,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

/// Parsed but uninterpreted configuration text.
#[derive(Clone, Debug, PartialEq)]
pub struct RawConfig {
    /// File name used in diagnostics.
    pub source: String,
    pub sections: Vec<Section>,
}

impl RawConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut sections: Vec<Section> = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[').and_then(|c| c.strip_suffix(']')) {
                let name = name.trim();
                if !SECTIONS.contains(&name) {
                    bail!("{source}:{line}: unknown section [{name}]");
                }
                if sections.iter().any(|s| s.name == name) {
                    bail!("{source}:{line}: section [{name}] appears twice");
                }
                sections.push(Section {
                    name: name.to_string(),
                    line,
                    entries: Vec::new(),
                });
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                bail!("{source}:{line}: expected `key = value`, got {content:?}");
            };
            let key = key.trim();
            let Some(section) = sections.last_mut() else {
                bail!("{source}:{line}: key {key:?} appears before any section header");
            };
            if section.entries.iter().any(|e| e.key == key) {
                bail!("{source}:{line}: key {key:?} repeated in [{}]", section.name);
            }
            let value = Value::parse(value).map_err(|e| anyhow!("{source}:{line}: key {key:?}: {e}"))?;
            section.entries.push(Entry {
                key: key.to_string(),
                value,
                line,
            });
        }
        Ok(Self {
            source: source.to_string(),
            sections,
        })
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    /// Locate `key` (bare, or `section.key`); bare keys must be unique across sections.
    pub fn find(&self, key: &str) -> Result<(usize, usize)> {
        let (want_section, bare) = match key.split_once('.') {
            Some((s, k)) => (Some(s), k),
            None => (None, key),
        };
        let hits: Vec<(usize, usize)> = self
            .sections
            .iter()
            .enumerate()
            .filter(|(_, s)| want_section.is_none_or(|w| w == s.name))
            .flat_map(|(si, s)| {
                s.entries
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| e.key == bare)
                    .map(move |(ei, _)| (si, ei))
            })
            .collect();
        match hits.as_slice() {
            [] => bail!("{}: unknown key {key:?}", self.source),
            [hit] => Ok(*hit),
            _ => bail!("{}: key {key:?} is ambiguous; write it as section.key", self.source),
        }
    }

    /// Replace the numeric value of `key`.
    pub fn set_number(&mut self, key: &str, value: f64) -> Result<()> {
        let (si, ei) = self.find(key)?;
        let entry = &mut self.sections[si].entries[ei];
        if !matches!(entry.value, Value::Num(_)) {
            bail!("key {key:?} is not sweepable (its value is a {})", entry.value.kind());
        }
        entry.value = Value::Num(value);
        Ok(())
    }
}

/// Typed access to one section.
struct Reader<'a> {
    source: &'a str,
    name: &'a str,
    line: usize,
    entries: &'a [Entry],
}

impl<'a> Reader<'a> {
    /// Fails on the first key not in `allowed`, before any value is read.
    fn new(raw: &'a RawConfig, name: &'a str, allowed: &[&str]) -> Result<Self> {
        let Some(s) = raw.section(name) else {
            return Ok(Reader {
                source: &raw.source,
                name,
                line: 0,
                entries: &[],
            });
        };
        if let Some(e) = s.entries.iter().find(|e| !allowed.contains(&e.key.as_str())) {
            bail!("{}:{}: unknown key {:?} in [{name}]", raw.source, e.line, e.key);
        }
        Ok(Reader {
            source: &raw.source,
            name,
            line: s.line,
            entries: &s.entries,
        })
    }

    fn get(&mut self, key: &str) -> Option<&'a Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    fn type_error(&self, e: &Entry, want: &str) -> anyhow::Error {
        anyhow!(
            "{}:{}: key {:?} in [{}] must be a {want}, got a {}",
            self.source,
            e.line,
            e.key,
            self.name,
            e.value.kind()
        )
    }

    fn missing(&self, key: &str) -> anyhow::Error {
        if self.line == 0 {
            anyhow!("{}: missing section [{}] (needed for key {key:?})", self.source, self.name)
        } else {
            anyhow!("{}:{}: [{}] is missing key {key:?}", self.source, self.line, self.name)
        }
    }

    fn num_opt(&mut self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(e) => match e.value {
                Value::Num(v) => Ok(Some(v)),
                _ => Err(self.type_error(e, "number")),
            },
        }
    }

    fn num(&mut self, key: &str) -> Result<f64> {
        self.num_opt(key)?.ok_or_else(|| self.missing(key))
    }

    fn num_or(&mut self, key: &str, default: f64) -> Result<f64> {
        Ok(self.num_opt(key)?.unwrap_or(default))
    }

    fn count_or(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(e) => match e.value {
                Value::Num(v) if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 => Ok(v as usize),
                _ => Err(self.type_error(e, "non-negative integer")),
            },
        }
    }

    fn int_or(&mut self, key: &str, default: i32) -> Result<i32> {
        match self.get(key) {
            None => Ok(default),
            Some(e) => match e.value {
                Value::Num(v) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => Ok(v as i32),
                _ => Err(self.type_error(e, "integer")),
            },
        }
    }

    fn bool_or(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some(e) => match e.value {
                Value::Bool(b) => Ok(b),
                _ => Err(self.type_error(e, "boolean")),
            },
        }
    }

    fn word_opt(&mut self, key: &str) -> Result<Option<&'a str>> {
        match self.get(key) {
            None => Ok(None),
            Some(e) => match &e.value {
                Value::Word(w) => Ok(Some(w.as_str())),
                _ => Err(self.type_error(e, "word")),
            },
        }
    }

    fn list_opt(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(e) = self.get(key) else { return Ok(None) };
        let Value::List(items) = &e.value else {
            return Err(self.type_error(e, "list of numbers"));
        };
        items
            .iter()
            .map(|v| match v {
                Value::Num(x) => Ok(*x),
                _ => Err(self.type_error(e, "list of numbers")),
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn list(&mut self, key: &str) -> Result<Vec<f64>> {
        self.list_opt(key)?.ok_or_else(|| self.missing(key))
    }

    fn list_or(&mut self, key: &str, default: Vec<f64>) -> Result<Vec<f64>> {
        Ok(self.list_opt(key)?.unwrap_or(default))
    }

    fn index_list_or(&mut self, key: &str, default: Vec<usize>) -> Result<Vec<usize>> {
        let Some(v) = self.list_opt(key)? else { return Ok(default) };
        v.into_iter()
            .map(|x| {
                if x >= 0.0 && x.fract() == 0.0 {
                    Ok(x as usize)
                } else {
                    Err(anyhow!("{}: [{}] {key:?} must hold non-negative integers", self.source, self.name))
                }
            })
            .collect()
    }

    fn nested(&mut self, key: &str) -> Result<Vec<Vec<f64>>> {
        let e = self.get(key).ok_or_else(|| self.missing(key))?;
        let Value::List(rows) = &e.value else {
            return Err(self.type_error(e, "list of lists"));
        };
        rows.iter()
            .map(|row| match row {
                Value::List(items) => items
                    .iter()
                    .map(|v| match v {
                        Value::Num(x) => Ok(*x),
                        _ => Err(self.type_error(e, "list of lists of numbers")),
                    })
                    .collect(),
                _ => Err(self.type_error(e, "list of lists")),
            })
            .collect()
    }

    fn section_error(&self, err: impl std::fmt::Display) -> anyhow::Error {
        anyhow!("{}: [{}]: {err}", self.source, self.name)
    }
}

/// A complete, explicit run description.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub metrics: MetricsOptions,
}

impl RunConfig {
    pub fn from_text(text: &str, source: &str) -> Result<Self> {
        Self::from_raw(&RawConfig::parse(text, source)?)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_text(&text, &path.display().to_string())
    }

    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let model = read_plant(raw)?;
        let controller = read_controller(raw, &model)?;
        let mut r = Reader::new(raw, "scenario", SCENARIO_KEYS)?;
        let name = r.word_opt("name")?.unwrap_or("custom").to_string();
        let x0 = r.list("x0")?;
        let times = r.list("schedule_times")?;
        let values = r.nested("schedule_values")?;
        let duration = r.num("duration")?;
        let ts_ctrl = r.num("ts_ctrl")?;
        let substeps = r.count_or("substeps", 10)?;
        let seed_label = r.word_opt("seed_label")?.unwrap_or("deterministic").to_string();
        let d = MetricsOptions::default();
        let metrics = MetricsOptions {
            window: r.num_or("metrics_window", d.window)?,
            tail_fraction: r.num_or("tail_fraction", d.tail_fraction)?,
            hold: r.num_or("hold", d.hold)?,
            deadband: r.num_or("deadband", d.deadband)?,
        };
        let schedule = StepSchedule::new(times, values).map_err(|e| r.section_error(e))?;
        let scenario = Scenario {
            name,
            model,
            controller,
            x0,
            schedule,
            duration,
            ts_ctrl,
            substeps,
            seed_label,
        };
        if !(metrics.window > 0.0 && metrics.hold >= 0.0 && metrics.deadband >= 0.0)
            || !(metrics.tail_fraction > 0.0 && metrics.tail_fraction <= 1.0)
        {
            return Err(r.section_error("metrics options out of range"));
        }
        scenario.validate().map_err(|e| r.section_error(e))?;
        Ok(Self { scenario, metrics })
    }

    /// Explicit text form; parsing it back yields an equal config.
    pub fn to_text(&self) -> String {
        let s = &self.scenario;
        let mut out = String::new();
        let kv = |out: &mut String, k: &str, v: Value| {
            let _ = writeln!(out, "{k} = {v}");
        };
        let nums = |v: &[f64]| Value::List(v.iter().map(|&x| Value::Num(x)).collect());
        let idx = |v: &[usize]| Value::List(v.iter().map(|&x| Value::Num(x as f64)).collect());
        let word = |w: &str| Value::Word(w.to_string());

        out.push_str("[plant]\n");
        kv(&mut out, "model", word(s.model.name()));
        match &s.model.kind {
            PlantKind::Uav2d(p) => {
                for (k, v) in [("m_u", p.m_u), ("i_u", p.i_u), ("m_o", p.m_o), ("i_o", p.i_o), ("ell", p.ell), ("g", p.g)] {
                    kv(&mut out, k, Value::Num(v));
                }
            }
            PlantKind::Uav3d(p) => {
                kv(&mut out, "m_u", Value::Num(p.m_u));
                kv(&mut out, "i_u", nums(&p.i_u));
                kv(&mut out, "m_o", Value::Num(p.m_o));
                kv(&mut out, "i_o", nums(&p.i_o));
                kv(&mut out, "ell", Value::Num(p.ell));
                kv(&mut out, "g", Value::Num(p.g));
            }
            PlantKind::Vessel(p) => {
                for (k, v) in [("m_v", p.m_v), ("i_v", p.i_v), ("i_p", p.i_p), ("ell_x", p.ell_x), ("ell_y", p.ell_y)] {
                    kv(&mut out, k, Value::Num(v));
                }
            }
        }
        kv(&mut out, "u_min", nums(&s.model.bounds.u_min));
        kv(&mut out, "u_max", nums(&s.model.bounds.u_max));
        if let Some((lo, hi)) = &s.model.x2_limits {
            kv(&mut out, "x2_lower", nums(lo));
            kv(&mut out, "x2_upper", nums(hi));
        }

        out.push_str("\n[controller]\n");
        kv(&mut out, "type", word(s.controller.name()));
        match &s.controller {
            ControllerSpec::Ncc2d(g) | ControllerSpec::Optimal2d(g) => {
                for (k, v) in [
                    ("kp_alpha", g.kp_alpha),
                    ("kd_alpha", g.kd_alpha),
                    ("kp_beta", g.kp_beta),
                    ("kd_beta", g.kd_beta),
                    ("epsilon", g.epsilon),
                    ("alpha_d", g.alpha_d),
                ] {
                    kv(&mut out, k, Value::Num(v));
                }
            }
            ControllerSpec::Ncc3d(g) => {
                for (k, v) in [
                    ("kp_t", g.kp_t),
                    ("kd_t", g.kd_t),
                    ("kp_q", g.kp_q),
                    ("kd_q", g.kd_q),
                    ("t_r", g.t_r),
                    ("epsilon", g.epsilon),
                    ("psi", g.psi),
                ] {
                    kv(&mut out, k, Value::Num(v));
                }
            }
            ControllerSpec::Zero | ControllerSpec::Kpca { .. } => {}
        }

        if let ControllerSpec::Kpca { config: c, options: o } = &s.controller {
            out.push_str("\n[kpca]\n");
            kv(&mut out, "q", nums(&c.q));
            kv(&mut out, "r", nums(&c.r));
            kv(&mut out, "kappa_p", Value::Num(c.bell.kappa_p));
            kv(&mut out, "kappa_w", Value::Num(c.bell.kappa_w));
            kv(&mut out, "ts", Value::Num(c.ts));
            kv(&mut out, "horizon", Value::Num(c.horizon as f64));
            kv(&mut out, "kernel_mode", word(c.kernel_mode.as_str()));
            kv(&mut out, "kernel_branch", Value::Num(c.kernel_branch as f64));
            kv(&mut out, "kernel_free", nums(&c.kernel_free));
            kv(&mut out, "x2d_mask", idx(&c.x2d_mask));
            kv(&mut out, "equality", word(equality_name(c.equality)));

            out.push_str("\n[solver]\n");
            kv(&mut out, "max_iter", Value::Num(o.max_iter as f64));
            kv(&mut out, "mu_min", Value::Num(o.mu_min));
            kv(&mut out, "mu_init", Value::Num(o.mu_init));
            kv(&mut out, "tol_kkt", Value::Num(o.tol_kkt));
            kv(&mut out, "warm_start", Value::Bool(o.warm_start));
            kv(&mut out, "penalty_eq", Value::Num(o.penalty_eq));
            kv(&mut out, "tol_eq", Value::Num(o.tol_eq));
            kv(&mut out, "objective_scale", Value::Num(o.objective_scale));
        }

        out.push_str("\n[scenario]\n");
        kv(&mut out, "name", word(&s.name));
        kv(&mut out, "x0", nums(&s.x0));
        kv(&mut out, "schedule_times", nums(&s.schedule.times));
        kv(&mut out, "schedule_values", Value::List(s.schedule.values.iter().map(|v| nums(v)).collect()));
        kv(&mut out, "duration", Value::Num(s.duration));
        kv(&mut out, "ts_ctrl", Value::Num(s.ts_ctrl));
        kv(&mut out, "substeps", Value::Num(s.substeps as f64));
        kv(&mut out, "seed_label", word(&s.seed_label));
        kv(&mut out, "metrics_window", Value::Num(self.metrics.window));
        kv(&mut out, "tail_fraction", Value::Num(self.metrics.tail_fraction));
        kv(&mut out, "hold", Value::Num(self.metrics.hold));
        kv(&mut out, "deadband", Value::Num(self.metrics.deadband));
        out
    }
}

fn equality_name(e: EqualityKind) -> &'static str {
    match e {
        EqualityKind::None => "none",
        EqualityKind::UnitQuaternion => "unit_quaternion",
    }
}

/// Value of a word-valued key, read ahead of the typed pass.
fn peek_word<'a>(raw: &'a RawConfig, section: &str, key: &str) -> Option<&'a str> {
    raw.section(section)?.entries.iter().find(|e| e.key == key).and_then(|e| match &e.value {
        Value::Word(w) => Some(w.as_str()),
        _ => None,
    })
}

const SCENARIO_KEYS: &[&str] = &[
    "name",
    "x0",
    "schedule_times",
    "schedule_values",
    "duration",
    "ts_ctrl",
    "substeps",
    "seed_label",
    "metrics_window",
    "tail_fraction",
    "hold",
    "deadband",
];
const KPCA_KEYS: &[&str] = &[
    "q",
    "r",
    "kappa_p",
    "kappa_w",
    "ts",
    "horizon",
    "kernel_mode",
    "kernel_branch",
    "kernel_free",
    "x2d_mask",
    "equality",
];
const SOLVER_KEYS: &[&str] = &[
    "max_iter",
    "mu_min",
    "mu_init",
    "tol_kkt",
    "warm_start",
    "penalty_eq",
    "tol_eq",
    "objective_scale",
];

fn plant_keys(model: Option<&str>) -> Vec<&'static str> {
    let mut keys = vec!["model", "u_min", "u_max", "x2_lower", "x2_upper"];
    match model {
        Some("uav2d") | Some("uav3d") => keys.extend(["m_u", "i_u", "m_o", "i_o", "ell", "g"]),
        Some("vessel") => keys.extend(["m_v", "i_v", "i_p", "ell_x", "ell_y"]),
        _ => {}
    }
    keys
}

fn controller_keys(kind: Option<&str>) -> Vec<&'static str> {
    let mut keys = vec!["type"];
    match kind {
        Some("ncc2d") | Some("optimal2d") => {
            keys.extend(["kp_alpha", "kd_alpha", "kp_beta", "kd_beta", "epsilon", "alpha_d"])
        }
        Some("ncc3d") => keys.extend(["kp_t", "kd_t", "kp_q", "kd_q", "t_r", "epsilon", "psi"]),
        _ => {}
    }
    keys
}

fn read_plant(raw: &RawConfig) -> Result<PlantModel> {
    let mut r = Reader::new(raw, "plant", &plant_keys(peek_word(raw, "plant", "model")))?;
    let model = r.word_opt("model")?.ok_or_else(|| r.missing("model"))?;
    let published = match model {
        "uav2d" => {
            let d = Uav2dParams::default();
            let p = Uav2dParams {
                m_u: r.num_or("m_u", d.m_u)?,
                i_u: r.num_or("i_u", d.i_u)?,
                m_o: r.num_or("m_o", d.m_o)?,
                i_o: r.num_or("i_o", d.i_o)?,
                ell: r.num_or("ell", d.ell)?,
                g: r.num_or("g", d.g)?,
            };
            PlantModel::uav2d(p)
        }
        "uav3d" => {
            let d = Uav3dParams::default();
            let triple = |r: &mut Reader, key: &str, default: [f64; 3]| -> Result<[f64; 3]> {
                let v = r.list_or(key, default.to_vec())?;
                v.try_into()
                    .map_err(|_| r.section_error(format!("{key} needs three entries")))
            };
            let p = Uav3dParams {
                m_u: r.num_or("m_u", d.m_u)?,
                i_u: triple(&mut r, "i_u", d.i_u)?,
                m_o: r.num_or("m_o", d.m_o)?,
                i_o: triple(&mut r, "i_o", d.i_o)?,
                ell: r.num_or("ell", d.ell)?,
                g: r.num_or("g", d.g)?,
            };
            PlantModel::uav3d(p)
        }
        "vessel" => {
            let d = VesselParams::default();
            let p = VesselParams {
                m_v: r.num_or("m_v", d.m_v)?,
                i_v: r.num_or("i_v", d.i_v)?,
                i_p: r.num_or("i_p", d.i_p)?,
                ell_x: r.num_or("ell_x", d.ell_x)?,
                ell_y: r.num_or("ell_y", d.ell_y)?,
            };
            PlantModel::vessel(p)
        }
        other => return Err(r.section_error(format!("unknown model {other:?} (uav2d, uav3d, vessel)"))),
    }
    .map_err(|e| r.section_error(e))?;

    let u_min = r.list_or("u_min", published.bounds.u_min.clone())?;
    let u_max = r.list_or("u_max", published.bounds.u_max.clone())?;
    let bounds = InputBounds::new(u_min, u_max).map_err(|e| r.section_error(e))?;
    let mut model = PlantModel::new(published.kind, bounds).map_err(|e| r.section_error(e))?;
    let lower = r.list_opt("x2_lower")?;
    let upper = r.list_opt("x2_upper")?;
    let limits = match (lower, upper) {
        (Some(lo), Some(hi)) => Some((lo, hi)),
        (None, None) => published.x2_limits.clone(),
        _ => return Err(r.section_error("x2_lower and x2_upper must be given together")),
    };
    if let Some((lo, hi)) = limits {
        model = model.with_x2_limits(lo, hi).map_err(|e| r.section_error(e))?;
    }
    Ok(model)
}

fn read_controller(raw: &RawConfig, model: &PlantModel) -> Result<ControllerSpec> {
    let mut r = Reader::new(raw, "controller", &controller_keys(peek_word(raw, "controller", "type")))?;
    let kind = r.word_opt("type")?.ok_or_else(|| r.missing("type"))?;
    let spec = match kind {
        "zero" => ControllerSpec::Zero,
        "ncc2d" | "optimal2d" => {
            let d = Ncc2dGains::default();
            let g = Ncc2dGains {
                kp_alpha: r.num_or("kp_alpha", d.kp_alpha)?,
                kd_alpha: r.num_or("kd_alpha", d.kd_alpha)?,
                kp_beta: r.num_or("kp_beta", d.kp_beta)?,
                kd_beta: r.num_or("kd_beta", d.kd_beta)?,
                epsilon: r.num_or("epsilon", d.epsilon)?,
                alpha_d: r.num_or("alpha_d", d.alpha_d)?,
            };
            g.validate().map_err(|e| r.section_error(e))?;
            if kind == "ncc2d" {
                ControllerSpec::Ncc2d(g)
            } else {
                ControllerSpec::Optimal2d(g)
            }
        }
        "ncc3d" => {
            let d = GeodesicGains::default();
            let g = GeodesicGains {
                kp_t: r.num_or("kp_t", d.kp_t)?,
                kd_t: r.num_or("kd_t", d.kd_t)?,
                kp_q: r.num_or("kp_q", d.kp_q)?,
                kd_q: r.num_or("kd_q", d.kd_q)?,
                t_r: r.num_or("t_r", d.t_r)?,
                epsilon: r.num_or("epsilon", d.epsilon)?,
                psi: r.num_or("psi", d.psi)?,
            };
            g.validate().map_err(|e| r.section_error(e))?;
            ControllerSpec::Ncc3d(g)
        }
        "kpca" => {
            let (config, options) = read_kpca(raw, model)?;
            ControllerSpec::Kpca { config, options }
        }
        other => {
            return Err(r.section_error(format!(
                "unknown controller type {other:?} (zero, ncc2d, optimal2d, ncc3d, kpca)"
            )))
        }
    };
    if kind != "kpca" {
        for unused in ["kpca", "solver"] {
            if let Some(s) = raw.section(unused) {
                bail!("{}:{}: section [{unused}] is not used by controller {kind}", raw.source, s.line);
            }
        }
    }
    Ok(spec)
}

fn read_kpca(raw: &RawConfig, model: &PlantModel) -> Result<(KpcaConfig, SolverOptions)> {
    let mut r = Reader::new(raw, "kpca", KPCA_KEYS)?;
    let mode = match r.word_opt("kernel_mode")?.unwrap_or("bell") {
        "off" => KernelMode::Off,
        "constant" => KernelMode::Constant,
        "bell" => KernelMode::Bell,
        other => return Err(r.section_error(format!("unknown kernel_mode {other:?} (off, constant, bell)"))),
    };
    let equality = match r.word_opt("equality")?.unwrap_or("none") {
        "none" => EqualityKind::None,
        "unit_quaternion" => EqualityKind::UnitQuaternion,
        other => return Err(r.section_error(format!("unknown equality {other:?} (none, unit_quaternion)"))),
    };
    let config = KpcaConfig {
        q: r.list("q")?,
        r: r.list("r")?,
        bell: BellParams {
            kappa_p: r.num("kappa_p")?,
            kappa_w: r.num("kappa_w")?,
        },
        ts: r.num("ts")?,
        horizon: r.count_or("horizon", 0)?,
        kernel_mode: mode,
        kernel_branch: r.int_or("kernel_branch", 0)?,
        kernel_free: r.list_or("kernel_free", vec![0.0; model.kernel_arity()])?,
        x2d_mask: r.index_list_or("x2d_mask", model.x2_position_indices().collect())?,
        equality,
    };
    config.validate(model).map_err(|e| r.section_error(e))?;

    let mut s = Reader::new(raw, "solver", SOLVER_KEYS)?;
    let d = SolverOptions::default();
    let options = SolverOptions {
        max_iter: s.count_or("max_iter", d.max_iter)?,
        mu_min: s.num_or("mu_min", d.mu_min)?,
        mu_init: s.num_or("mu_init", d.mu_init)?,
        tol_kkt: s.num_or("tol_kkt", d.tol_kkt)?,
        warm_start: s.bool_or("warm_start", d.warm_start)?,
        penalty_eq: s.num_or("penalty_eq", d.penalty_eq)?,
        tol_eq: s.num_or("tol_eq", d.tol_eq)?,
        objective_scale: s.num_or("objective_scale", d.objective_scale)?,
    };
    options.validate().map_err(|e| s.section_error(e))?;
    Ok((config, options))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
[plant]
model = uav2d

[controller]
type = ncc2d

[scenario]
x0 = [0, 0, 0.5, 0]
schedule_times = [0]
schedule_values = [[1.5707963267948966]]
duration = 1
ts_ctrl = 0.01
";

    #[test]
    fn values_round_trip() {
        for text in ["1.0", "-inf", "1e-10", "[1.0, 2.5]", "[[1.0], [2.0, 3.0]]", "bell", "true", "[]"] {
            let v = Value::parse(text).unwrap();
            assert_eq!(Value::parse(&v.to_string()).unwrap(), v, "{text}");
        }
        assert!(Value::parse("[1, 2").is_err());
        assert!(Value::parse("a b").is_err());
    }

    #[test]
    fn minimal_config_fills_published_defaults() {
        let c = RunConfig::from_text(MINIMAL, "t.cfg").unwrap();
        assert_eq!(c.scenario.model, PlantModel::uav2d(Uav2dParams::default()).unwrap());
        assert_eq!(c.scenario.substeps, 10);
        assert_eq!(c.metrics, MetricsOptions::default());
    }

    #[test]
    fn dump_parse_round_trip() {
        let c = RunConfig::from_text(MINIMAL, "t.cfg").unwrap();
        let again = RunConfig::from_text(&c.to_text(), "dump").unwrap();
        assert_eq!(c, again);
        assert_eq!(c.to_text(), again.to_text());
    }

    #[test]
    fn unknown_key_names_file_line_and_key() {
        let text = MINIMAL.replace("type = ncc2d", "type = ncc2d\nkapa_p = 3");
        let err = RunConfig::from_text(&text, "bad.cfg").unwrap_err().to_string();
        assert!(err.contains("bad.cfg:6"), "{err}");
        assert!(err.contains("kapa_p"), "{err}");
    }

    #[test]
    fn structural_errors() {
        let cases = [
            ("[plant]\nmodel = uav2d\n[plant]\n", "twice"),
            ("model = uav2d\n", "before any section"),
            ("[bogus]\n", "unknown section"),
            ("[plant]\nmodel\n", "key = value"),
            ("[plant]\nmodel = uav2d\nmodel = vessel\n", "repeated"),
        ];
        for (text, needle) in cases {
            let err = RawConfig::parse(text, "x").unwrap_err().to_string();
            assert!(err.contains(needle), "{text:?}: {err}");
        }
    }

    #[test]
    fn dimension_errors_name_the_section() {
        let err = RunConfig::from_text(&MINIMAL.replace("[0, 0, 0.5, 0]", "[0, 0]"), "t")
            .unwrap_err()
            .to_string();
        assert!(err.contains("[scenario]"), "{err}");
        let text = MINIMAL.replace("type = ncc2d", "type = kpca")
            + "[kpca]\nq = [1, 1, 1]\nr = [1, 1]\nkappa_p = 1\nkappa_w = 1\nts = 0.1\nhorizon = 3\n";
        let err = RunConfig::from_text(&text, "t").unwrap_err().to_string();
        assert!(err.contains("[kpca]"), "{err}");
    }

    #[test]
    fn stray_kpca_section_rejected() {
        let text = format!("{MINIMAL}[solver]\nmax_iter = 3\n");
        let err = RunConfig::from_text(&text, "t").unwrap_err().to_string();
        assert!(err.contains("not used"), "{err}");
    }

    #[test]
    fn sweep_key_lookup() {
        let mut raw = RawConfig::parse(MINIMAL, "t").unwrap();
        raw.set_number("duration", 2.0).unwrap();
        raw.set_number("scenario.ts_ctrl", 0.02).unwrap();
        assert!(raw.set_number("model", 1.0).unwrap_err().to_string().contains("not sweepable"));
        assert!(raw.set_number("nope", 1.0).unwrap_err().to_string().contains("unknown key"));
        let c = RunConfig::from_raw(&raw).unwrap();
        assert_eq!((c.scenario.duration, c.scenario.ts_ctrl), (2.0, 0.02));
    }
}
