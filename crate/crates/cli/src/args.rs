//! Parsers for the literal flag values.

use std::fmt;
use std::str::FromStr;

use stablemix::observable::TestFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Log,
    Lin,
}

/// `start:stop:count,log|lin`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl FromStr for TimeGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (range, spacing) = s.split_once(',').unwrap_or((s, "lin"));
        let spacing = match spacing.trim() {
            "log" => Spacing::Log,
            "lin" => Spacing::Lin,
            other => return Err(format!("grid spacing must be log or lin, got {other:?}")),
        };
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("time grid must look like start:stop:count,log|lin, got {s:?}"));
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("bad number {p:?}: {e}"));
        let (start, stop) = (num(parts[0])?, num(parts[1])?);
        let count: usize = parts[2].trim().parse().map_err(|e| format!("bad count {:?}: {e}", parts[2]))?;
        if !(start.is_finite() && stop.is_finite() && start >= 0.0 && stop > start) {
            return Err(format!("time grid needs 0 <= start < stop, got {start}:{stop}"));
        }
        if count < 2 {
            return Err("time grid needs at least 2 points".into());
        }
        if spacing == Spacing::Log && start <= 0.0 {
            return Err("log-spaced time grid needs start > 0".into());
        }
        Ok(Self { start, stop, count, spacing })
    }
}

impl fmt::Display for TimeGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sp = if self.spacing == Spacing::Log { "log" } else { "lin" };
        write!(f, "{}:{}:{},{}", self.start, self.stop, self.count, sp)
    }
}

impl TimeGrid {
    pub fn points(&self) -> Vec<f64> {
        let n = self.count - 1;
        (0..=n)
            .map(|i| {
                let u = i as f64 / n as f64;
                match self.spacing {
                    Spacing::Lin => self.start + u * (self.stop - self.start),
                    Spacing::Log => (self.start.ln() + u * (self.stop.ln() - self.start.ln())).exp(),
                }
            })
            .collect()
    }

    /// Points rounded to multiples of `h`, deduplicated. Positive points
    /// never collapse to zero.
    pub fn snapped(&self, h: f64) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for t in self.points() {
            let mut k = (t / h).round();
            if t > 0.0 && k == 0.0 {
                k = 1.0;
            }
            let s = k * h;
            if out.last().map_or(true, |last| s > *last + 0.5 * h) {
                out.push(s);
            }
        }
        out
    }
}

/// `zero` or a JSON array; shorter arrays are padded with zeros.
#[derive(Debug, Clone, PartialEq)]
pub enum StateLiteral {
    Zero,
    Values(Vec<f64>),
}

impl FromStr for StateLiteral {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim() == "zero" {
            return Ok(Self::Zero);
        }
        let v: Vec<f64> = serde_json::from_str(s).map_err(|e| format!("state must be \"zero\" or a JSON array: {e}"))?;
        Ok(Self::Values(v))
    }
}

impl StateLiteral {
    pub fn resolve(&self, n: usize) -> Result<Vec<f64>, String> {
        match self {
            Self::Zero => Ok(vec![0.0; n]),
            Self::Values(v) if v.len() > n => Err(format!("state has {} entries but the model has {n} modes", v.len())),
            Self::Values(v) => {
                let mut x = v.clone();
                x.resize(n, 0.0);
                Ok(x)
            }
        }
    }
}

/// Observable given as a JSON literal (or `@path` to a JSON file).
pub fn parse_observable(s: &str) -> Result<TestFunction, String> {
    let text = match s.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).map_err(|e| format!("cannot read {path}: {e}"))?,
        None => s.to_string(),
    };
    let f: TestFunction = serde_json::from_str(&text).map_err(|e| format!("observable: {e}"))?;
    f.validate().map_err(|e| e.to_string())?;
    Ok(f)
}
