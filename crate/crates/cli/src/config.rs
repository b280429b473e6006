//! Plain-text `key = value` run configurations.

use std::collections::BTreeMap;
use std::path::Path;

use curvelab::curve::{Interval, PlanarCurve};
use curvelab::limsup::{Kind, TargetPoint};
use curvelab::real::{parse_rat, Rat};
use curvelab::ubiquity::UFn;
use curvelab::{ApproxFn, Error};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ValueKind {
    Curve,
    Approx,
    Interval,
    Kind,
    Point,
    U,
    Integer,
    Rational,
    Name,
}

const KEYS: &[(&str, ValueKind)] = &[
    ("curve", ValueKind::Curve),
    ("psi", ValueKind::Approx),
    ("phi", ValueKind::Approx),
    ("interval", ValueKind::Interval),
    ("kind", ValueKind::Kind),
    ("point", ValueKind::Point),
    ("u", ValueKind::U),
    ("Q", ValueKind::Integer),
    ("Qmax", ValueKind::Integer),
    ("samples", ValueKind::Integer),
    ("seed", ValueKind::Integer),
    ("tmin", ValueKind::Integer),
    ("tmax", ValueKind::Integer),
    ("subintervals", ValueKind::Integer),
    ("v", ValueKind::Rational),
    ("v1", ValueKind::Rational),
    ("v2", ValueKind::Rational),
    ("eps", ValueKind::Rational),
    ("tol", ValueKind::Rational),
    ("preset", ValueKind::Name),
];

const REQUIRED: &[&str] = &["curve"];

#[derive(Clone, Debug)]
pub enum Setting {
    Curve(PlanarCurve),
    Approx(ApproxFn),
    Interval(Interval),
    Kind(Kind),
    Point(TargetPoint),
    U(UFn),
    Integer(u64),
    Rational(Rat),
    Name(String),
}

impl Setting {
    fn describe(&self) -> String {
        match self {
            Setting::Curve(c) => c.to_string(),
            Setting::Approx(f) => f.to_string(),
            Setting::Interval(i) => i.to_string(),
            Setting::Kind(k) => format!("{k:?}").to_lowercase(),
            Setting::Point(p) => p.to_string(),
            Setting::U(u) => u.to_string(),
            Setting::Integer(n) => n.to_string(),
            Setting::Rational(r) => r.to_string(),
            Setting::Name(s) => s.clone(),
        }
    }
}

/// A fully parsed configuration; `line` is where each key was set.
#[derive(Clone, Debug)]
pub struct Config {
    pub settings: BTreeMap<String, (usize, Setting)>,
}

#[derive(Serialize)]
struct Summary<'a> {
    settings: BTreeMap<&'a str, String>,
}

impl Config {
    pub fn get(&self, key: &str) -> Option<&Setting> {
        self.settings.get(key).map(|(_, s)| s)
    }

    pub fn curve(&self) -> &PlanarCurve {
        match self.get("curve") {
            Some(Setting::Curve(c)) => c,
            _ => unreachable!("curve is required"),
        }
    }

    /// Canonical rendering of every setting.
    pub fn summary(&self) -> impl Serialize + '_ {
        Summary { settings: self.settings.iter().map(|(k, (_, s))| (k.as_str(), s.describe())).collect() }
    }
}

fn parse_value(kind: ValueKind, v: &str) -> Result<Setting, Error> {
    let bad_int = || Error::Parse { line: 1, col: 1, msg: format!("expected a non-negative integer, got '{v}'") };
    Ok(match kind {
        ValueKind::Curve => Setting::Curve(PlanarCurve::parse(v)?),
        ValueKind::Approx => Setting::Approx(ApproxFn::parse(v)?),
        ValueKind::Interval => Setting::Interval(Interval::parse(v)?),
        ValueKind::Kind => Setting::Kind(Kind::parse(v)?),
        ValueKind::Point => Setting::Point(TargetPoint::parse(v)?),
        ValueKind::U => Setting::U(UFn::parse(v)?),
        ValueKind::Integer => Setting::Integer(v.parse().map_err(|_| bad_int())?),
        ValueKind::Rational => Setting::Rational(
            parse_rat(v).ok_or_else(|| Error::Parse { line: 1, col: 1, msg: format!("expected a rational, got '{v}'") })?,
        ),
        ValueKind::Name => Setting::Name(v.to_string()),
    })
}

/// Parses configuration text. Every problem is reported; nothing is
/// returned unless the whole file is valid.
pub fn parse_config(text: &str) -> Result<Config, Vec<Error>> {
    let mut errors = Vec::new();
    let mut settings = BTreeMap::new();
    let mut attempted = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        let Some(eq) = content.find('=') else {
            errors.push(Error::Parse { line, col: indent + 1, msg: "expected 'key = value'".into() });
            continue;
        };
        let key = content[..eq].trim();
        let Some(&(_, kind)) = KEYS.iter().find(|(k, _)| *k == key) else {
            errors.push(Error::Parse { line, col: indent + 1, msg: format!("unknown key '{key}'") });
            continue;
        };
        let after = &content[eq + 1..];
        let value = after.trim();
        let value_col = eq + 1 + (after.len() - after.trim_start().len()) + 1;
        if value.is_empty() {
            errors.push(Error::Parse { line, col: value_col, msg: format!("missing value for '{key}'") });
            continue;
        }
        if let Some((first, _)) = settings.get(key) {
            errors.push(Error::Parse { line, col: indent + 1, msg: format!("duplicate key '{key}' (first set on line {first})") });
            continue;
        }
        attempted.push(key.to_string());
        match parse_value(kind, value) {
            Ok(s) => {
                settings.insert(key.to_string(), (line, s));
            }
            Err(e) => errors.push(e.at_line(line, value_col - 1)),
        }
    }
    let last = text.lines().count().max(1);
    for key in REQUIRED {
        if !attempted.iter().any(|k| k == key) {
            errors.push(Error::Parse { line: last, col: 1, msg: format!("missing required key '{key}'") });
        }
    }
    if errors.is_empty() {
        Ok(Config { settings })
    } else {
        Err(errors)
    }
}

pub fn validate_config(path: &Path) -> Result<Config, Vec<Error>> {
    let text = std::fs::read_to_string(path).map_err(|e| vec![Error::Io(e)])?;
    parse_config(&text)
}
