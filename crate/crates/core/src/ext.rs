//! Extended-real arithmetic on `(-inf, +inf]` and compensated summation.
//!
//! `+inf` is a legal value (singular kernels, hard walls). `-inf` is not a
//! legal potential value and any NaN is turned into [`Error::Undefined`].

use crate::error::{Error, Result};

/// Rejects NaN and `-inf` produced by a potential evaluation.
#[inline]
pub fn check_value(value: f64, what: &str, points: &[&[f64]]) -> Result<f64> {
    if value.is_nan() || value == f64::NEG_INFINITY {
        Err(Error::Undefined {
            what: what.to_string(),
            points: points.iter().map(|p| p.to_vec()).collect(),
        })
    } else {
        Ok(value)
    }
}

/// Neumaier-compensated sum that tracks infinities separately so that
/// `+inf` and `-inf` terms never silently cancel.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExtSum {
    sum: f64,
    comp: f64,
    pos_inf: bool,
    neg_inf: bool,
    nan: bool,
}

impl ExtSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        if x.is_finite() {
            let t = self.sum + x;
            if self.sum.abs() >= x.abs() {
                self.comp += (self.sum - t) + x;
            } else {
                self.comp += (x - t) + self.sum;
            }
            self.sum = t;
        } else if x == f64::INFINITY {
            self.pos_inf = true;
        } else if x == f64::NEG_INFINITY {
            self.neg_inf = true;
        } else {
            self.nan = true;
        }
    }

    pub fn merge(&mut self, other: &ExtSum) {
        self.add(other.sum);
        self.add(other.comp);
        self.pos_inf |= other.pos_inf;
        self.neg_inf |= other.neg_inf;
        self.nan |= other.nan;
    }

    pub fn is_pos_inf(&self) -> bool {
        self.pos_inf && !self.neg_inf && !self.nan
    }

    /// Raw value; NaN when undefined.
    pub fn value(&self) -> f64 {
        match (self.nan, self.pos_inf, self.neg_inf) {
            (true, _, _) | (false, true, true) => f64::NAN,
            (false, true, false) => f64::INFINITY,
            (false, false, true) => f64::NEG_INFINITY,
            (false, false, false) => self.sum + self.comp,
        }
    }

    /// Value, with NaN reported as [`Error::Undefined`].
    pub fn checked(&self, what: &str) -> Result<f64> {
        let v = self.value();
        if v.is_nan() {
            Err(Error::Undefined {
                what: what.to_string(),
                points: Vec::new(),
            })
        } else {
            Ok(v)
        }
    }
}

impl FromIterator<f64> for ExtSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = ExtSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// `weight * value` with the convention `0 * inf = 0` (zero-mass terms do
/// not contribute).
#[inline]
pub fn weighted(weight: f64, value: f64) -> f64 {
    if weight == 0.0 {
        0.0
    } else {
        weight * value
    }
}

/// Stable `log(sum(exp(x)))` accumulator; `-inf` entries contribute nothing.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    scaled: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.scaled += (x - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    pub fn merge(&mut self, other: &LogSumExp) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        if self.max == f64::NEG_INFINITY {
            *self = *other;
        } else if other.max <= self.max {
            self.scaled += other.scaled * (other.max - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - other.max).exp() + other.scaled;
            self.max = other.max;
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

/// Serde adapter writing `+inf` as the string `"inf"` and finite values as
/// JSON numbers.
pub mod serde_ext {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else if *v < 0.0 {
            s.serialize_str("-inf")
        } else {
            s.serialize_str("nan")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(s) => match s.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("bad extended real `{other}`"))),
            },
        }
    }

    /// The same encoding for the values of a string-keyed map.
    pub mod map {
        use std::collections::BTreeMap;

        use serde::{Deserialize, Deserializer, Serialize, Serializer};

        #[derive(Serialize, Deserialize)]
        struct Ext(#[serde(with = "super")] f64);

        pub fn serialize<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
            let view: BTreeMap<&String, Ext> = m.iter().map(|(k, v)| (k, Ext(*v))).collect();
            view.serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
            let raw = BTreeMap::<String, Ext>::deserialize(d)?;
            Ok(raw.into_iter().map(|(k, v)| (k, v.0)).collect())
        }
    }
}
