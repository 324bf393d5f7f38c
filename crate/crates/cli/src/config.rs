//! Run configuration: a flat `key = value` file plus command-line overrides.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use olim::{ExactSolution, Method, StopPolicy, Vec2};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    /// `linear` (optional parameter `a`) or `limit_cycle`.
    Builtin { name: String, a: Option<f64> },
    Custom { b1: String, b2: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KSpec {
    Auto,
    Fixed(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    /// Origin for `linear` and custom fields, unit circle for `limit_cycle`.
    Auto,
    Point(Vec2),
    /// Two-column CSV of an ordered closed curve.
    Curve(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactSpec {
    /// The built-in problem's own solution; none for custom fields.
    Auto,
    None,
    Known(ExactSolution),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Raw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    /// `[x1min, x1max, x2min, x2max]`; `None` uses the problem default.
    pub domain: Option<[f64; 4]>,
    pub n: usize,
    pub method: Method,
    pub k: KSpec,
    pub init: InitSpec,
    pub stop: StopPolicy,
    pub exact: ExactSpec,
    pub out_prefix: String,
    pub format: OutputFormat,
    pub record_lengths: bool,
}

/// Keys in file order.
pub const KEYS: [&str; 15] = [
    "problem",
    "a",
    "b1",
    "b2",
    "domain",
    "n",
    "method",
    "K",
    "init_point",
    "init_curve",
    "stop",
    "exact",
    "out_prefix",
    "format",
    "record_lengths",
];

fn bad(key: &str, value: &str, why: &str) -> CliError {
    CliError::Config(format!("{key} = '{value}': {why}"))
}

fn parse_f64(key: &str, v: &str) -> Result<f64, CliError> {
    v.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| bad(key, v, "expected a finite number"))
}

fn parse_floats<const N: usize>(key: &str, v: &str) -> Result<[f64; N], CliError> {
    let parts: Vec<&str> = v.split(',').collect();
    if parts.len() != N {
        return Err(bad(key, v, &format!("expected {N} comma-separated numbers")));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = parse_f64(key, p)?;
    }
    Ok(out)
}

fn parse_bool(key: &str, v: &str) -> Result<bool, CliError> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(key, v, "expected true or false")),
    }
}

/// Unordered key/value pairs, later insertions winning.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap(BTreeMap<String, String>);

impl ConfigMap {
    /// Parses `key = value` lines. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut map = ConfigMap::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected 'key = value'", no + 1)))?;
            map.set(k.trim(), v.trim())?;
        }
        Ok(map)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if !KEYS.contains(&key) {
            return Err(CliError::Config(format!("unknown key '{key}'")));
        }
        // The two init keys are alternatives; the later one wins.
        match key {
            "init_point" => self.0.remove("init_curve"),
            "init_curve" => self.0.remove("init_point"),
            _ => None,
        };
        self.0.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str).filter(|v| !v.is_empty())
    }

    pub fn merge(&mut self, other: &ConfigMap) {
        for (k, v) in &other.0 {
            self.0.insert(k.clone(), v.clone());
        }
    }
}

impl RunConfig {
    pub fn from_map(map: &ConfigMap) -> Result<Self, CliError> {
        let problem = match (map.get("problem"), map.get("b1"), map.get("b2")) {
            (Some("custom") | None, Some(b1), Some(b2)) => ProblemSpec::Custom { b1: b1.into(), b2: b2.into() },
            (Some("custom"), _, _) => return Err(CliError::Config("custom problem needs both b1 and b2".into())),
            (Some("limit_cycle"), None, None) if map.get("a").is_some() => {
                return Err(CliError::Config("problem 'limit_cycle' takes no parameter 'a'".into()))
            }
            (Some(name @ ("linear" | "limit_cycle")), None, None) => ProblemSpec::Builtin {
                name: name.into(),
                a: map.get("a").map(|v| parse_f64("a", v)).transpose()?,
            },
            (Some(name @ ("linear" | "limit_cycle")), _, _) => {
                return Err(CliError::Config(format!("b1/b2 cannot be combined with problem '{name}'")))
            }
            (Some(other), _, _) => return Err(bad("problem", other, "expected linear, limit_cycle or custom")),
            (None, _, _) => return Err(CliError::Config("missing required key 'problem'".into())),
        };

        let domain = match map.get("domain") {
            None | Some("auto") => None,
            Some(v) => {
                let d = parse_floats::<4>("domain", v)?;
                if !(d[1] > d[0] && d[3] > d[2]) {
                    return Err(bad("domain", v, "need x1min < x1max and x2min < x2max"));
                }
                Some(d)
            }
        };
        let n = match map.get("n") {
            None => return Err(CliError::Config("missing required key 'n'".into())),
            Some(v) => v.trim().parse::<usize>().ok().filter(|&n| n >= 2).ok_or_else(|| bad("n", v, "expected an integer >= 2"))?,
        };
        let method = match map.get("method") {
            None => Method::Olim(olim::QuadRule::Midpoint),
            Some(v) => Method::from_name(v).ok_or_else(|| bad("method", v, "expected olim-r, olim-mid, olim-tr, olim-sim or oum"))?,
        };
        let k = match map.get("K") {
            None | Some("auto") => KSpec::Auto,
            Some(v) => KSpec::Fixed(
                v.trim().parse::<u32>().ok().filter(|&k| k >= 1).ok_or_else(|| bad("K", v, "expected 'auto' or an integer >= 1"))?,
            ),
        };
        let init = match (map.get("init_point"), map.get("init_curve")) {
            (Some(_), Some(_)) => return Err(CliError::Config("give init_point or init_curve, not both".into())),
            (Some("auto"), None) | (None, None) => InitSpec::Auto,
            (Some(v), None) => {
                let [x, y] = parse_floats::<2>("init_point", v)?;
                InitSpec::Point(Vec2::new(x, y))
            }
            (None, Some(p)) => InitSpec::Curve(PathBuf::from(p)),
        };
        let stop = match map.get("stop") {
            None | Some("boundary") => StopPolicy::OnBoundaryReached,
            Some("exhaust") => StopPolicy::ExhaustConsidered,
            Some(v) => return Err(bad("stop", v, "expected boundary or exhaust")),
        };
        let exact = match map.get("exact") {
            None | Some("auto") => ExactSpec::Auto,
            Some("none") => ExactSpec::None,
            Some(v) => ExactSpec::Known(ExactSolution::by_name(v).ok_or_else(|| bad("exact", v, "expected linear, limit_cycle, none or auto"))?),
        };
        let format = match map.get("format") {
            None | Some("csv") => OutputFormat::Csv,
            Some("raw") => OutputFormat::Raw,
            Some(v) => return Err(bad("format", v, "expected csv or raw")),
        };
        Ok(RunConfig {
            problem,
            domain,
            n,
            method,
            k,
            init,
            stop,
            exact,
            out_prefix: map.get("out_prefix").unwrap_or("olim").to_string(),
            format,
            record_lengths: map.get("record_lengths").map(|v| parse_bool("record_lengths", v)).transpose()?.unwrap_or(false),
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        Self::from_map(&ConfigMap::parse(text)?)
    }

    /// Every key with an explicit value; `parse(to_text())` reproduces `self`.
    pub fn to_map(&self) -> ConfigMap {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        match &self.problem {
            ProblemSpec::Builtin { name, a } => {
                put("problem", name.clone());
                if let Some(a) = a {
                    put("a", a.to_string());
                }
            }
            ProblemSpec::Custom { b1, b2 } => {
                put("problem", "custom".into());
                put("b1", b1.clone());
                put("b2", b2.clone());
            }
        }
        put(
            "domain",
            match self.domain {
                None => "auto".into(),
                Some(d) => format!("{},{},{},{}", d[0], d[1], d[2], d[3]),
            },
        );
        put("n", self.n.to_string());
        put("method", self.method.name().into());
        put(
            "K",
            match self.k {
                KSpec::Auto => "auto".into(),
                KSpec::Fixed(k) => k.to_string(),
            },
        );
        match &self.init {
            InitSpec::Auto => put("init_point", "auto".into()),
            InitSpec::Point(p) => put("init_point", format!("{},{}", p.x, p.y)),
            InitSpec::Curve(path) => put("init_curve", path.display().to_string()),
        }
        put(
            "stop",
            match self.stop {
                StopPolicy::OnBoundaryReached => "boundary".into(),
                StopPolicy::ExhaustConsidered => "exhaust".into(),
            },
        );
        put(
            "exact",
            match self.exact {
                ExactSpec::Auto => "auto".into(),
                ExactSpec::None => "none".into(),
                ExactSpec::Known(e) => e.name().into(),
            },
        );
        put("out_prefix", self.out_prefix.clone());
        put(
            "format",
            match self.format {
                OutputFormat::Csv => "csv".into(),
                OutputFormat::Raw => "raw".into(),
            },
        );
        put("record_lengths", self.record_lengths.to_string());
        ConfigMap(m)
    }

    pub fn to_text(&self) -> String {
        let map = self.to_map();
        let mut out = String::new();
        for key in KEYS {
            if let Some(v) = map.0.get(key) {
                let _ = writeln!(out, "{key} = {v}");
            }
        }
        out
    }
}
