//! Experiment specifications: a flat `key = value` file (or a flat JSON
//! object), one key per line, lists as comma-separated values.
//!
//! ```text
//! # prior-knowledge attack
//! name = prior
//! kind = attack
//! attack = map
//! n = 1024
//! s = 0, 0.1, 0.33, 1
//! prior_size = all, 102, 10
//! trials = 15000
//! ```

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gossip_dp::{GossipConfig, Variant};
use thiserror::Error;

pub const DEFAULT_TRIALS: u64 = 1000;
pub const DEFAULT_CURIOUS_FRACTION: f64 = 0.1;
pub const DEFAULT_K: usize = 10;
pub const DEFAULT_MAX_ROUNDS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("{}unknown key `{key}`", at(*.line))]
    UnknownKey { key: String, line: Option<usize> },
    #[error("{}duplicate key `{key}`", at(*.line))]
    Duplicate { key: String, line: Option<usize> },
    #[error("missing required key `{key}`")]
    Missing { key: String },
    #[error("{}`{key}`: {message}", at(*.line))]
    Invalid {
        key: String,
        line: Option<usize>,
        message: String,
    },
}

fn at(line: Option<usize>) -> String {
    line.map(|l| format!("line {l}: ")).unwrap_or_default()
}

impl SpecError {
    /// The offending key, when the error concerns one.
    pub fn key(&self) -> Option<&str> {
        match self {
            SpecError::UnknownKey { key, .. }
            | SpecError::Duplicate { key, .. }
            | SpecError::Missing { key }
            | SpecError::Invalid { key, .. } => Some(key),
            _ => None,
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            SpecError::Syntax { line } => Some(*line),
            SpecError::UnknownKey { line, .. }
            | SpecError::Duplicate { line, .. }
            | SpecError::Invalid { line, .. } => *line,
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Trace,
    Spread,
    Attack,
    Validate,
    Bounds,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Trace => "trace",
            Kind::Spread => "spread",
            Kind::Attack => "attack",
            Kind::Validate => "validate",
            Kind::Bounds => "bounds",
        }
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "trace" => Kind::Trace,
            "spread" => Kind::Spread,
            "attack" => Kind::Attack,
            "validate" => Kind::Validate,
            "bounds" => Kind::Bounds,
            _ => return Err(format!("unknown kind `{s}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackKind {
    Map,
    MultiRumor,
    Silence,
}

impl AttackKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AttackKind::Map => "map",
            AttackKind::MultiRumor => "multi_rumor",
            AttackKind::Silence => "silence",
        }
    }
}

impl FromStr for AttackKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "map" => AttackKind::Map,
            "multi_rumor" => AttackKind::MultiRumor,
            "silence" => AttackKind::Silence,
            _ => return Err(format!("unknown attack `{s}`")),
        })
    }
}

/// A size that may be tied to the grid point: `all` honest nodes for a
/// prior, `auto` (`ceil(ln(n)^2)`) for a silence window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Size {
    Derived,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Async,
    Sync,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Async => "async",
            Engine::Sync => "sync",
        }
    }
}

/// Monte Carlo checks available to `validate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// `P(first observed sender = source)` at `s = 0`, against `(f+1)/n`.
    FirstSenderSource,
    /// `P(first observed sender = j)` for an honest `j != source` at
    /// `s = 0`, against `1/n`.
    FirstSenderOther,
    /// Source reaches a curious node before being muted, against the
    /// geometric closed form.
    PrefixDisclosure,
    /// Empirical gap over a small event family, at most the exact delta.
    GapBound,
    /// MAP precision with the full prior, at most `1/(1+c)`.
    MapBound,
    /// Median messages to inform everyone at `s = 0`, against `n ln n`.
    CouponMessages,
    /// Late-round active fraction of the synchronous engine, against the
    /// mean-dynamics fixed point.
    Plateau,
}

impl Quantity {
    pub const ALL: [Quantity; 7] = [
        Quantity::FirstSenderSource,
        Quantity::FirstSenderOther,
        Quantity::PrefixDisclosure,
        Quantity::GapBound,
        Quantity::MapBound,
        Quantity::CouponMessages,
        Quantity::Plateau,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Quantity::FirstSenderSource => "first_sender_source",
            Quantity::FirstSenderOther => "first_sender_other",
            Quantity::PrefixDisclosure => "prefix_disclosure",
            Quantity::GapBound => "gap_bound",
            Quantity::MapBound => "map_bound",
            Quantity::CouponMessages => "coupon_messages",
            Quantity::Plateau => "plateau",
        }
    }
}

impl FromStr for Quantity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Quantity::ALL
            .into_iter()
            .find(|q| q.as_str() == s)
            .ok_or_else(|| format!("unknown quantity `{s}`"))
    }
}

/// A validated experiment with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub kind: Kind,
    pub n: Vec<usize>,
    pub s: Vec<f64>,
    pub curious_fraction: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub output: PathBuf,
    pub variant: Variant,
    pub attack: Option<AttackKind>,
    pub prior_size: Vec<Size>,
    pub rumors: Vec<usize>,
    pub k: usize,
    pub window: Vec<Size>,
    pub quantities: Vec<Quantity>,
    pub epsilon: Vec<f64>,
    pub max_rounds: usize,
    pub engine: Engine,
    pub source: u32,
}

/// `floor(fraction * n)`.
pub fn curious_count(n: usize, fraction: f64) -> usize {
    (fraction * n as f64).floor() as usize
}

struct Entry {
    value: String,
    line: Option<usize>,
}

const KEYS: [&str; 19] = [
    "name",
    "kind",
    "n",
    "s",
    "curious_fraction",
    "trials",
    "seed",
    "output",
    "variant",
    "attack",
    "prior_size",
    "rumors",
    "k",
    "window",
    "quantities",
    "epsilon",
    "max_rounds",
    "engine",
    "source",
];

/// Reads and validates a spec file.
pub fn parse_spec(path: &Path) -> Result<ExperimentSpec, SpecError> {
    let text = fs::read_to_string(path).map_err(|e| SpecError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_spec_str(&text)
}

/// Parses spec text; a leading `{` selects the JSON front-end.
pub fn parse_spec_str(text: &str) -> Result<ExperimentSpec, SpecError> {
    let entries = if text.trim_start().starts_with('{') {
        json_entries(text)?
    } else {
        flat_entries(text)?
    };
    Resolver { entries }.resolve()
}

fn insert(
    entries: &mut BTreeMap<String, Entry>,
    key: &str,
    value: String,
    line: Option<usize>,
) -> Result<(), SpecError> {
    if !KEYS.contains(&key) {
        return Err(SpecError::UnknownKey {
            key: key.to_string(),
            line,
        });
    }
    if entries.contains_key(key) {
        return Err(SpecError::Duplicate {
            key: key.to_string(),
            line,
        });
    }
    entries.insert(key.to_string(), Entry { value, line });
    Ok(())
}

fn flat_entries(text: &str) -> Result<BTreeMap<String, Entry>, SpecError> {
    let mut entries = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or(SpecError::Syntax { line })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(SpecError::Syntax { line });
        }
        insert(&mut entries, key, value.trim().to_string(), Some(line))?;
    }
    Ok(entries)
}

fn json_entries(text: &str) -> Result<BTreeMap<String, Entry>, SpecError> {
    use serde_json::Value;

    let parsed: serde_json::Map<String, Value> =
        serde_json::from_str(text).map_err(|e| SpecError::Syntax { line: e.line() })?;
    let line_of = |key: &str| {
        let quoted = format!("\"{key}\"");
        text.lines()
            .position(|l| l.contains(&quoted))
            .map(|i| i + 1)
    };
    let scalar = |key: &str, v: &Value| -> Result<String, SpecError> {
        match v {
            Value::String(s) => Ok(s.clone()),
            Value::Number(x) => Ok(x.to_string()),
            Value::Bool(b) => Ok(b.to_string()),
            _ => Err(SpecError::Invalid {
                key: key.to_string(),
                line: line_of(key),
                message: "expected a scalar or a flat list".to_string(),
            }),
        }
    };
    let mut entries = BTreeMap::new();
    for (key, value) in &parsed {
        let text = match value {
            Value::Array(items) => items
                .iter()
                .map(|v| scalar(key, v))
                .collect::<Result<Vec<_>, _>>()?
                .join(", "),
            other => scalar(key, other)?,
        };
        insert(&mut entries, key, text, line_of(key))?;
    }
    Ok(entries)
}

struct Resolver {
    entries: BTreeMap<String, Entry>,
}

impl Resolver {
    fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).and_then(|e| e.line)
    }

    fn invalid(&self, key: &str, message: impl Into<String>) -> SpecError {
        SpecError::Invalid {
            key: key.to_string(),
            line: self.line(key),
            message: message.into(),
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn required(&self, key: &str) -> Result<&str, SpecError> {
        self.raw(key).ok_or_else(|| SpecError::Missing {
            key: key.to_string(),
        })
    }

    fn one<T: FromStr>(&self, key: &str, raw: &str) -> Result<T, SpecError>
    where
        T::Err: fmt::Display,
    {
        raw.trim()
            .parse()
            .map_err(|e: T::Err| self.invalid(key, format!("cannot parse `{}`: {e}", raw.trim())))
    }

    fn list<T: FromStr>(&self, key: &str, raw: &str) -> Result<Vec<T>, SpecError>
    where
        T::Err: fmt::Display,
    {
        let items: Vec<T> = raw
            .split(',')
            .map(|item| self.one(key, item))
            .collect::<Result<_, _>>()?;
        if items.is_empty() {
            return Err(self.invalid(key, "empty list"));
        }
        Ok(items)
    }

    fn sizes(&self, key: &str, derived: &str, default: Vec<Size>) -> Result<Vec<Size>, SpecError> {
        let Some(raw) = self.raw(key) else {
            return Ok(default);
        };
        raw.split(',')
            .map(|item| {
                let item = item.trim();
                if item == derived {
                    return Ok(Size::Derived);
                }
                let v: usize = self.one(key, item)?;
                if v == 0 {
                    return Err(self.invalid(key, "must be at least 1"));
                }
                Ok(Size::Fixed(v))
            })
            .collect()
    }

    fn resolve(self) -> Result<ExperimentSpec, SpecError> {
        let name = self.required("name")?.to_string();
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(self.invalid("name", "must be a non-empty word"));
        }
        let kind: Kind = self.one("kind", self.required("kind")?)?;

        let n: Vec<usize> = self.list("n", self.required("n")?)?;
        if let Some(&bad) = n.iter().find(|&&v| v < 2) {
            return Err(self.invalid("n", format!("{bad} nodes is fewer than 2")));
        }

        let s: Vec<f64> = match self.raw("s") {
            Some(raw) => self.list("s", raw)?,
            None if kind == Kind::Bounds => Vec::new(),
            None => return Err(SpecError::Missing { key: "s".into() }),
        };
        if let Some(&bad) = s.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(self.invalid("s", format!("value {bad} is outside [0, 1]")));
        }

        let curious_fraction: Vec<f64> = match self.raw("curious_fraction") {
            Some(raw) => self.list("curious_fraction", raw)?,
            None => vec![DEFAULT_CURIOUS_FRACTION],
        };
        if let Some(&bad) = curious_fraction.iter().find(|v| !(0.0..1.0).contains(*v)) {
            return Err(self.invalid("curious_fraction", format!("value {bad} is outside [0, 1)")));
        }

        let trials = match self.raw("trials") {
            Some(raw) => self.one("trials", raw)?,
            None => DEFAULT_TRIALS,
        };
        if trials == 0 {
            return Err(self.invalid("trials", "must be at least 1"));
        }
        let seed = match self.raw("seed") {
            Some(raw) => self.one("seed", raw)?,
            None => 0,
        };
        let output = self
            .raw("output")
            .map(PathBuf::from)
            .unwrap_or_else(|| Path::new("out").join(&name));
        let variant: Variant = match self.raw("variant") {
            Some(raw) => self.one("variant", raw)?,
            None => Variant::Parameterized,
        };

        let attack = match (kind, self.raw("attack")) {
            (_, Some(raw)) => Some(self.one::<AttackKind>("attack", raw)?),
            (Kind::Attack, None) => {
                return Err(SpecError::Missing {
                    key: "attack".into(),
                })
            }
            _ => None,
        };
        let prior_size = self.sizes("prior_size", "all", vec![Size::Derived])?;
        let window = self.sizes("window", "auto", vec![Size::Derived])?;
        let rumors: Vec<usize> = match self.raw("rumors") {
            Some(raw) => self.list("rumors", raw)?,
            None => vec![10],
        };
        if rumors.contains(&0) {
            return Err(self.invalid("rumors", "must be at least 1"));
        }
        let k = match self.raw("k") {
            Some(raw) => self.one("k", raw)?,
            None => DEFAULT_K,
        };
        if k == 0 {
            return Err(self.invalid("k", "must be at least 1"));
        }
        let quantities = match self.raw("quantities") {
            Some(raw) => self.list("quantities", raw)?,
            None => Quantity::ALL.to_vec(),
        };
        let epsilon: Vec<f64> = match self.raw("epsilon") {
            Some(raw) => self.list("epsilon", raw)?,
            None => vec![0.0],
        };
        if let Some(&bad) = epsilon.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(self.invalid(
                "epsilon",
                format!("value {bad} is not a finite non-negative number"),
            ));
        }
        let max_rounds = match self.raw("max_rounds") {
            Some(raw) => self.one("max_rounds", raw)?,
            None => DEFAULT_MAX_ROUNDS,
        };
        if max_rounds == 0 {
            return Err(self.invalid("max_rounds", "must be at least 1"));
        }
        let engine = match self.raw("engine") {
            None | Some("async") => Engine::Async,
            Some("sync") => Engine::Sync,
            Some(other) => return Err(self.invalid("engine", format!("unknown engine `{other}`"))),
        };
        let source = match self.raw("source") {
            Some(raw) => self.one("source", raw)?,
            None => 0,
        };

        let spec = ExperimentSpec {
            name,
            kind,
            n,
            s,
            curious_fraction,
            trials,
            seed,
            output,
            variant,
            attack,
            prior_size,
            rumors,
            k,
            window,
            quantities,
            epsilon,
            max_rounds,
            engine,
            source,
        };
        self.check_grid(&spec)?;
        Ok(spec)
    }

    /// Every grid point must give a valid configuration.
    fn check_grid(&self, spec: &ExperimentSpec) -> Result<(), SpecError> {
        if spec.kind == Kind::Trace {
            for key in ["n", "s", "curious_fraction"] {
                if self.raw(key).is_some_and(|raw| raw.contains(',')) {
                    return Err(self.invalid(key, "a trace takes a single value"));
                }
            }
        }
        let s_values = if spec.s.is_empty() {
            vec![0.0]
        } else {
            spec.s.clone()
        };
        for &n in &spec.n {
            for &frac in &spec.curious_fraction {
                let f = curious_count(n, frac);
                for &s in &s_values {
                    let config = GossipConfig::new(n, f, s)
                        .map_err(|e| self.invalid("curious_fraction", format!("n = {n}: {e}")))?;
                    if spec.kind == Kind::Trace {
                        config
                            .with_source(gossip_dp::NodeId(spec.source))
                            .map_err(|e| self.invalid("source", e.to_string()))?;
                    }
                }
                if spec.attack == Some(AttackKind::Map) {
                    for size in &spec.prior_size {
                        if let Size::Fixed(p) = *size {
                            if p > n - f {
                                return Err(self.invalid(
                                    "prior_size",
                                    format!("{p} exceeds the {} honest nodes at n = {n}", n - f),
                                ));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn join<T>(items: &[T], show: impl Fn(&T) -> String) -> String {
    items.iter().map(show).collect::<Vec<_>>().join(", ")
}

fn size(s: &Size, derived: &str) -> String {
    match s {
        Size::Derived => derived.to_string(),
        Size::Fixed(v) => v.to_string(),
    }
}

impl ExperimentSpec {
    /// Canonical text of the resolved spec, every key present in a fixed
    /// order. Parsing it gives back the same spec.
    pub fn frozen(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("name", self.name.clone());
        put("kind", self.kind.as_str().into());
        put("n", join(&self.n, |v| v.to_string()));
        if !self.s.is_empty() {
            put("s", join(&self.s, |v| v.to_string()));
        }
        put(
            "curious_fraction",
            join(&self.curious_fraction, |v| v.to_string()),
        );
        put("trials", self.trials.to_string());
        put("seed", self.seed.to_string());
        put("output", self.output.display().to_string());
        put("variant", self.variant.as_str().into());
        if let Some(a) = self.attack {
            put("attack", a.as_str().into());
        }
        put("prior_size", join(&self.prior_size, |s| size(s, "all")));
        put("rumors", join(&self.rumors, |v| v.to_string()));
        put("k", self.k.to_string());
        put("window", join(&self.window, |s| size(s, "auto")));
        put(
            "quantities",
            join(&self.quantities, |q| q.as_str().to_string()),
        );
        put("epsilon", join(&self.epsilon, |v| v.to_string()));
        put("max_rounds", self.max_rounds.to_string());
        put("engine", self.engine.as_str().into());
        put("source", self.source.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = "name = t\nkind = attack\nattack = map\nn = 100, 200\ns = 0, 0.5\n";

    #[test]
    fn defaults_are_applied() {
        let spec = parse_spec_str(BASIC).unwrap();
        assert_eq!(spec.trials, 1000);
        assert_eq!(spec.curious_fraction, vec![0.1]);
        assert_eq!(spec.prior_size, vec![Size::Derived]);
        assert_eq!(spec.output, Path::new("out").join("t"));
        assert!(spec.frozen().contains("trials = 1000\n"));
    }

    #[test]
    fn frozen_copy_round_trips() {
        let spec = parse_spec_str(BASIC).unwrap();
        let again = parse_spec_str(&spec.frozen()).unwrap();
        assert_eq!(spec, again);
        assert_eq!(spec.frozen(), again.frozen());
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# header\n\nname = x # trailing\nkind = bounds\nn = 1000\n";
        let spec = parse_spec_str(text).unwrap();
        assert_eq!(spec.name, "x");
        assert!(spec.s.is_empty());
    }

    #[test]
    fn errors_name_key_and_line() {
        let e = parse_spec_str("name = t\nkind = spread\nn = 10\ns = 1.5\n").unwrap_err();
        assert_eq!((e.key(), e.line()), (Some("s"), Some(4)));
        assert!(e.to_string().contains("line 4"), "{e}");

        let e = parse_spec_str("name = t\nkind = spread\nnn = 10\n").unwrap_err();
        assert_eq!((e.key(), e.line()), (Some("nn"), Some(3)));

        let e = parse_spec_str("name = t\nkind = spread\ns = 1\n").unwrap_err();
        assert_eq!(e, SpecError::Missing { key: "n".into() });

        let e = parse_spec_str("name = t\nkind = spread\nn = 10\ns = 1\ns = 0\n").unwrap_err();
        assert_eq!((e.key(), e.line()), (Some("s"), Some(5)));

        let e = parse_spec_str("name = t\nkind = spread\nn 10\n").unwrap_err();
        assert_eq!(e, SpecError::Syntax { line: 3 });

        let e = parse_spec_str("name = t\nkind = attack\nn = 10\ns = 1\n").unwrap_err();
        assert_eq!(e.key(), Some("attack"));

        let e = parse_spec_str(
            "name = t\nkind = attack\nattack = map\nn = 10\ns = 1\ncurious_fraction = 0.95\n",
        )
        .unwrap_err();
        assert_eq!((e.key(), e.line()), (Some("curious_fraction"), Some(6)));

        let e = parse_spec_str(
            "name = t\nkind = attack\nattack = map\nn = 100\ns = 1\nprior_size = 95\n",
        )
        .unwrap_err();
        assert_eq!(e.key(), Some("prior_size"));

        let e = parse_spec_str("name = t\nkind = trace\nn = 10, 20\ns = 1\n").unwrap_err();
        assert_eq!(e.key(), Some("n"));
    }

    #[test]
    fn json_front_end() {
        let text = r#"{
  "name": "t",
  "kind": "attack",
  "attack": "map",
  "n": [100, 200],
  "s": [0, 0.5]
}"#;
        assert_eq!(
            parse_spec_str(text).unwrap(),
            parse_spec_str(BASIC).unwrap()
        );
        let bad = "{\n  \"name\": \"t\",\n  \"kind\": \"spread\",\n  \"n\": 10,\n  \"s\": 2\n}";
        let e = parse_spec_str(bad).unwrap_err();
        assert_eq!((e.key(), e.line()), (Some("s"), Some(5)));
    }

    #[test]
    fn curious_count_floors() {
        assert_eq!(curious_count(1000, 0.1), 100);
        assert_eq!(curious_count(1024, 0.1), 102);
        assert_eq!(curious_count(4096, 0.0), 0);
    }
}
