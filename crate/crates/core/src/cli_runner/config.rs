//! Experiment configuration files.
//!
//! ```text
//! # comment
//! [section]
//! key = value
//! ```
//!
//! Section and key names are lowercase ASCII words; values run to the end of
//! the line. `#` starts a comment only at the beginning of a line. Sections
//! and keys may not repeat, and every key must belong to the schema of the
//! chosen experiment.

use crate::error::{Error, Result};
use std::fmt;
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub name: String,
    pub entries: Vec<(String, String)>,
}

impl Section {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Parsed but untyped configuration, in file order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RawConfig {
    pub sections: Vec<Section>,
}

fn is_word(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RawConfig::default();
        let mut offset = 0;
        for (lineno, line) in text.lines().enumerate() {
            let pos = offset;
            offset += line.len() + 1;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse {
                pos,
                msg: format!("line {}: {msg}", lineno + 1),
            };
            if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
                let name = name.trim();
                if !is_word(name) {
                    return Err(err(format!("bad section name {name:?}")));
                }
                if cfg.section(name).is_some() {
                    return Err(err(format!("section [{name}] repeats")));
                }
                cfg.sections.push(Section {
                    name: name.to_string(),
                    entries: Vec::new(),
                });
                continue;
            }
            let Some((k, v)) = t.split_once('=') else {
                return Err(err(format!("expected `key = value`, found {t:?}")));
            };
            let (k, v) = (k.trim(), v.trim());
            if !is_word(k) {
                return Err(err(format!("bad key {k:?}")));
            }
            if v.is_empty() {
                return Err(err(format!("key `{k}` has no value")));
            }
            let Some(sec) = cfg.sections.last_mut() else {
                return Err(err(format!("key `{k}` appears before any section")));
            };
            if sec.get(k).is_some() {
                return Err(err(format!("key `{k}` repeats in [{}]", sec.name)));
            }
            sec.entries.push((k.to_string(), v.to_string()));
        }
        Ok(cfg)
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }
}

impl fmt::Display for RawConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.sections.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            writeln!(f, "[{}]", s.name)?;
            for (k, v) in &s.entries {
                writeln!(f, "{k} = {v}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    AaTest,
    Compactness,
    Supremum,
    Decompose,
    Convolve,
    SolveVie,
    SolveVieAsymptotic,
    SolveBikernel,
    Heat,
    Poisson,
    Memory,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 11] = [
        ExperimentKind::AaTest,
        ExperimentKind::Compactness,
        ExperimentKind::Supremum,
        ExperimentKind::Decompose,
        ExperimentKind::Convolve,
        ExperimentKind::SolveVie,
        ExperimentKind::SolveVieAsymptotic,
        ExperimentKind::SolveBikernel,
        ExperimentKind::Heat,
        ExperimentKind::Poisson,
        ExperimentKind::Memory,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::AaTest => "aa_test",
            ExperimentKind::Compactness => "compactness",
            ExperimentKind::Supremum => "supremum",
            ExperimentKind::Decompose => "decompose",
            ExperimentKind::Convolve => "convolve",
            ExperimentKind::SolveVie => "solve_vie",
            ExperimentKind::SolveVieAsymptotic => "solve_vie_asymptotic",
            ExperimentKind::SolveBikernel => "solve_bikernel",
            ExperimentKind::Heat => "heat",
            ExperimentKind::Poisson => "poisson",
            ExperimentKind::Memory => "memory",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment kind `{s}`")))
    }

    /// Sections this experiment reads; `experiment` is always allowed.
    pub fn sections(self) -> &'static [&'static str] {
        use ExperimentKind::*;
        match self {
            AaTest => &["function", "probe"],
            Compactness => &["function", "probe", "scan"],
            Supremum => &["function", "probe", "supremum"],
            Decompose => &["function", "probe", "decompose"],
            Convolve => &["function", "kernel", "domain", "grid", "quadrature", "probe", "decompose"],
            SolveVie => &["g", "h", "kernel", "grid", "quadrature", "solver"],
            SolveVieAsymptotic => &["g", "h", "kernel", "domain", "grid", "quadrature", "solver", "decompose"],
            SolveBikernel => &["bikernel", "kernel", "grid", "quadrature", "solver"],
            Heat => &["function", "heat", "grid", "quadrature", "probe"],
            Poisson => &["function", "probe", "poisson"],
            Memory => &["memory"],
        }
    }
}

const FUNCTION_KEYS: &[&str] = &[
    "catalogue",
    "param",
    "expr",
    "arity_time",
    "arity_state",
    "sup_bound",
    "lipschitz",
    "label",
];

fn section_keys(name: &str) -> &'static [&'static str] {
    match name {
        "experiment" => &["kind", "seed", "output_dir", "title", "expect"],
        "function" | "g" | "h" | "bikernel" => FUNCTION_KEYS,
        "kernel" => &["catalogue", "expr", "dim", "rates", "constant", "tail_radius", "label"],
        "domain" => &["kind", "dim", "corner", "signs", "point", "dirs"],
        "quadrature" => &["rule", "order", "panels_per_unit", "eps_tail"],
        "probe" => &[
            "family",
            "axis",
            "step",
            "start",
            "freqs",
            "max_k",
            "vectors",
            "depth",
            "tol_limit",
            "tol_subseq",
            "window_radius",
            "window_center",
            "window_points",
        ],
        "scan" => &["line_half_length", "line_step", "window_only", "deltas"],
        "supremum" => &["a", "radius", "step", "tol"],
        "decompose" => &[
            "rays",
            "axis_x0",
            "radii",
            "tol",
            "max_pairs",
            "slack",
            "min_translate_norm",
            "depth",
            "family_step",
            "window_lo",
            "window_hi",
            "window_points",
        ],
        "grid" => &["lo", "hi", "points"],
        "solver" => &["tol", "max_residual"],
        "heat" => &["time"],
        "poisson" => &["h_fd"],
        "memory" => &[
            "a",
            "memory",
            "forcing",
            "forcing_lipschitz",
            "nonlocal_coeff",
            "nonlocal_clip",
            "u0",
            "t_max",
            "dt",
            "horizon",
            "tol",
            "rho",
        ],
        _ => &[],
    }
}

/// Validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Whether the asserted verdict is expected to pass.
    pub expect_pass: bool,
    pub raw: RawConfig,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_raw(RawConfig::parse(text)?)
    }

    pub fn from_raw(raw: RawConfig) -> Result<Self> {
        let exp = raw
            .section("experiment")
            .ok_or_else(|| Error::Config("missing [experiment] section".into()))?;
        let kind = ExperimentKind::from_name(
            exp.get("kind").ok_or_else(|| Error::Config("[experiment] needs `kind`".into()))?,
        )?;
        for s in &raw.sections {
            if s.name != "experiment" && !kind.sections().contains(&s.name.as_str()) {
                return Err(Error::Config(format!(
                    "section [{}] is not used by experiment `{}`",
                    s.name,
                    kind.name()
                )));
            }
            let allowed = section_keys(&s.name);
            if let Some((k, _)) = s.entries.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
                return Err(Error::Config(format!("unknown key `{k}` in [{}]", s.name)));
            }
        }
        let seed = match exp.get("seed") {
            None => crate::numerics::rng::DEFAULT_SEED,
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("seed {v:?} is not a 64-bit unsigned integer")))?,
        };
        let output_dir = PathBuf::from(exp.get("output_dir").unwrap_or("out"));
        let expect_pass = match exp.get("expect").unwrap_or("pass") {
            "pass" => true,
            "fail" => false,
            v => return Err(Error::Config(format!("expect must be pass or fail, got {v:?}"))),
        };
        Ok(ExperimentConfig {
            kind,
            seed,
            output_dir,
            expect_pass,
            raw,
        })
    }

    /// Canonical text; `parse(print(c)) == c`.
    pub fn print(&self) -> String {
        self.raw.to_string()
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.raw.section(name)
    }
}

/// Typed access to one section, with errors that name the section and key.
pub struct Values<'a> {
    name: &'a str,
    sec: Option<&'a Section>,
}

impl<'a> Values<'a> {
    pub fn new(cfg: &'a ExperimentConfig, name: &'a str) -> Self {
        Values {
            name,
            sec: cfg.section(name),
        }
    }

    pub fn present(&self) -> bool {
        self.sec.is_some()
    }

    pub fn raw(&self, key: &str) -> Option<&'a str> {
        self.sec.and_then(|s| s.get(key))
    }

    pub fn require(&self, key: &str) -> Result<&'a str> {
        self.raw(key)
            .ok_or_else(|| Error::Config(format!("[{}] needs `{key}`", self.name)))
    }

    fn bad(&self, key: &str, v: &str, what: &str) -> Error {
        Error::Config(format!("[{}] {key} = {v:?} is not {what}", self.name))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        self.raw(key).map_or(Ok(default), |v| self.parse_f64(key, v))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v = self.require(key)?;
        self.parse_f64(key, v)
    }

    fn parse_f64(&self, key: &str, v: &str) -> Result<f64> {
        let t = v.trim();
        let x = match t {
            "pi" => std::f64::consts::PI,
            "sqrt2" => std::f64::consts::SQRT_2,
            "2pi" => 2.0 * std::f64::consts::PI,
            _ => t.parse().map_err(|_| self.bad(key, v, "a number"))?,
        };
        Ok(x)
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        self.raw(key)
            .map_or(Ok(default), |v| v.trim().parse().map_err(|_| self.bad(key, v, "a nonnegative integer")))
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let v = self.require(key)?;
        v.trim().parse().map_err(|_| self.bad(key, v, "a nonnegative integer"))
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(self.bad(key, v, "true or false")),
        }
    }

    /// Comma-separated numbers.
    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| self.parse_f64(key, s))
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }

    pub fn list_req(&self, key: &str) -> Result<Vec<f64>> {
        self.list(key)?
            .ok_or_else(|| Error::Config(format!("[{}] needs `{key}`", self.name)))
    }

    /// Vectors separated by `;`, components by `,`.
    pub fn vectors(&self, key: &str) -> Result<Option<Vec<Vec<f64>>>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .split(';')
                .map(|row| row.split(',').map(|s| self.parse_f64(key, s)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }
}
