//! Inverse-temperature schedules `n -> beta_n`.

use std::fmt;
use std::str::FromStr;

use evalexpr::{ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Value};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n`, `n^2`, `n log n`, or an expression in `n` such as `n^1.5` or
/// `3 * n * ln(n)` (functions `ln`, `log`, `sqrt`, `exp` are accepted).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BetaSchedule {
    Linear,
    Quadratic,
    NLogN,
    Custom(String),
}

fn to_evalexpr(expr: &str) -> String {
    if expr.contains("math::") {
        return expr.to_string();
    }
    let mut out = String::with_capacity(expr.len() + 16);
    let bytes = expr.as_bytes();
    let mut i = 0;
    while i < expr.len() {
        let boundary = i == 0 || !(bytes[i - 1].is_ascii_alphanumeric() || bytes[i - 1] == b'_');
        let rest = &expr[i..];
        let hit = ["ln(", "log(", "sqrt(", "exp("]
            .iter()
            .find(|f| boundary && rest.starts_with(**f));
        match hit {
            Some(f) => {
                let name = if *f == "log(" { "ln(" } else { f };
                out.push_str("math::");
                out.push_str(name);
                i += f.len();
            }
            None => {
                let c = rest.chars().next().expect("non-empty");
                out.push(c);
                i += c.len_utf8();
            }
        }
    }
    out
}

fn eval_custom(expr: &str, n: f64) -> Result<f64> {
    let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
    ctx.set_value("n".into(), Value::Float(n))
        .map_err(|e| Error::config("schedule", e.to_string()))?;
    evalexpr::eval_number_with_context(&to_evalexpr(expr), &ctx)
        .map_err(|e| Error::config("schedule", format!("cannot evaluate `{expr}`: {e}")))
}

impl BetaSchedule {
    pub fn beta(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::param("n", "need n >= 1"));
        }
        let nf = n as f64;
        let b = match self {
            BetaSchedule::Linear => nf,
            BetaSchedule::Quadratic => nf * nf,
            BetaSchedule::NLogN => nf * nf.ln(),
            BetaSchedule::Custom(e) => eval_custom(e, nf)?,
        };
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::param(
                "beta_n",
                format!("schedule `{self}` gives beta_{n} = {b}; need a finite positive value"),
            ));
        }
        Ok(b)
    }
}

impl FromStr for BetaSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        Ok(match compact.as_str() {
            "n" => BetaSchedule::Linear,
            "n^2" | "n*n" => BetaSchedule::Quadratic,
            "nlogn" | "n*log(n)" | "n*ln(n)" | "nlog(n)" => BetaSchedule::NLogN,
            "" => return Err(Error::config("schedule", "empty schedule")),
            _ => {
                eval_custom(s, 2.0)?;
                BetaSchedule::Custom(s.trim().to_string())
            }
        })
    }
}

impl fmt::Display for BetaSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BetaSchedule::Linear => write!(f, "n"),
            BetaSchedule::Quadratic => write!(f, "n^2"),
            BetaSchedule::NLogN => write!(f, "n log n"),
            BetaSchedule::Custom(e) => write!(f, "{e}"),
        }
    }
}

impl TryFrom<String> for BetaSchedule {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BetaSchedule> for String {
    fn from(s: BetaSchedule) -> String {
        s.to_string()
    }
}
