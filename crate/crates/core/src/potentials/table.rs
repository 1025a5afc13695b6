//! Tabulated potentials on a regular grid with multilinear interpolation.
//!
//! Text format: the first line is `d,lo_1,hi_1,...,lo_d,hi_d,step`, every
//! following non-empty line holds one node value in row-major order (last
//! axis fastest). `inf` is accepted. Binary format: the magic `GLGRID01`,
//! `d` as `u32`, then `lo_1, hi_1, ..., step` and the values as `f64`, all
//! little-endian.

use std::io::Read;

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"GLGRID01";

#[derive(Debug, Clone, PartialEq)]
pub struct GridTable {
    lower: Vec<f64>,
    upper: Vec<f64>,
    step: f64,
    counts: Vec<usize>,
    values: Vec<f64>,
}

impl GridTable {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, step: f64, values: Vec<f64>) -> Result<Self> {
        let counts = axis_counts(&lower, &upper, step)?;
        let total: usize = counts.iter().product();
        if values.len() != total {
            return Err(Error::param(
                "table",
                format!("expected {total} values, got {}", values.len()),
            ));
        }
        if values.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return Err(Error::param("table", "values must be finite or +inf"));
        }
        Ok(Self {
            lower,
            upper,
            step,
            counts,
            values,
        })
    }

    /// Tabulates `f` at the grid nodes.
    pub fn from_fn(lower: Vec<f64>, upper: Vec<f64>, step: f64, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let counts = axis_counts(&lower, &upper, step)?;
        let total: usize = counts.iter().product();
        let d = lower.len();
        let mut idx = vec![0usize; d];
        let mut x = vec![0.0; d];
        let mut values = Vec::with_capacity(total);
        for _ in 0..total {
            for a in 0..d {
                x[a] = lower[a] + idx[a] as f64 * step;
            }
            values.push(f(&x));
            for a in (0..d).rev() {
                idx[a] += 1;
                if idx[a] < counts[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        Self::new(lower, upper, step, values)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Multilinear interpolation; `+inf` outside the closed grid box or when
    /// a corner with positive weight is `+inf`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        if x.len() != d {
            return f64::NAN;
        }
        let mut base = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for a in 0..d {
            if !(self.lower[a] <= x[a] && x[a] <= self.upper[a]) {
                return f64::INFINITY;
            }
            let t = (x[a] - self.lower[a]) / self.step;
            let i = (t.floor() as usize).min(self.counts[a] - 1);
            if i + 1 >= self.counts[a] {
                base[a] = self.counts[a] - 1;
                frac[a] = 0.0;
            } else {
                base[a] = i;
                frac[a] = t - i as f64;
            }
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << d) {
            let mut weight = 1.0;
            let mut flat = 0;
            for a in 0..d {
                let up = (corner >> a) & 1 == 1;
                weight *= if up { frac[a] } else { 1.0 - frac[a] };
                flat = flat * self.counts[a] + base[a] + usize::from(up);
            }
            if weight == 0.0 {
                continue;
            }
            let v = self.values[flat];
            if v == f64::INFINITY {
                return f64::INFINITY;
            }
            acc += weight * v;
        }
        acc
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::param("table", "empty table"))?;
        let head: Vec<f64> = header
            .split(',')
            .map(|t| parse_value(t.trim()))
            .collect::<Result<_>>()?;
        let d = head.first().copied().unwrap_or(0.0);
        if !(d >= 1.0 && d.fract() == 0.0) || head.len() != 2 * d as usize + 2 {
            return Err(Error::param("table", "header must be d,lo_1,hi_1,...,step"));
        }
        let d = d as usize;
        let lower = (0..d).map(|a| head[1 + 2 * a]).collect();
        let upper = (0..d).map(|a| head[2 + 2 * a]).collect();
        let step = head[2 * d + 1];
        let values = lines.map(parse_value).collect::<Result<_>>()?;
        Self::new(lower, upper, step, values)
    }

    pub fn to_text(&self) -> String {
        let mut head = vec![self.dim().to_string()];
        for (l, u) in self.lower.iter().zip(&self.upper) {
            head.push(crate::measures::format_full(*l));
            head.push(crate::measures::format_full(*u));
        }
        head.push(crate::measures::format_full(self.step));
        let mut out = head.join(",");
        out.push('\n');
        for v in &self.values {
            out.push_str(&crate::measures::format_full(*v));
            out.push('\n');
        }
        out
    }

    pub fn from_binary(mut r: impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::param("table", "bad magic, expected GLGRID01"));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let d = u32::from_le_bytes(b4) as usize;
        if d == 0 || d > 16 {
            return Err(Error::param("table", "dimension out of range"));
        }
        let read_f64 = |r: &mut dyn Read| -> Result<f64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(f64::from_le_bytes(b))
        };
        let mut lower = Vec::with_capacity(d);
        let mut upper = Vec::with_capacity(d);
        for _ in 0..d {
            lower.push(read_f64(&mut r)?);
            upper.push(read_f64(&mut r)?);
        }
        let step = read_f64(&mut r)?;
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if rest.len() % 8 != 0 {
            return Err(Error::param("table", "truncated value block"));
        }
        let values = rest
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Self::new(lower, upper, step, values)
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = MAGIC.to_vec();
        out.extend_from_slice(&(self.dim() as u32).to_le_bytes());
        for (l, u) in self.lower.iter().zip(&self.upper) {
            out.extend_from_slice(&l.to_le_bytes());
            out.extend_from_slice(&u.to_le_bytes());
        }
        out.extend_from_slice(&self.step.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Reads either format, choosing by the magic bytes.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        if bytes.starts_with(MAGIC) {
            Self::from_binary(bytes.as_slice())
        } else {
            let text = String::from_utf8(bytes)
                .map_err(|_| Error::param("table", "text table is not UTF-8"))?;
            Self::from_text(&text)
        }
    }
}

fn axis_counts(lower: &[f64], upper: &[f64], step: f64) -> Result<Vec<usize>> {
    if lower.is_empty() || lower.len() != upper.len() {
        return Err(Error::param("table", "bounds must have equal positive length"));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::param("table", "step must be positive"));
    }
    let mut counts = Vec::with_capacity(lower.len());
    for (l, u) in lower.iter().zip(upper) {
        if !(l.is_finite() && u.is_finite() && l < u) {
            return Err(Error::param("table", "each axis needs finite lo < hi"));
        }
        let k = (u - l) / step;
        if (k - k.round()).abs() > 1e-9 * k.max(1.0) {
            return Err(Error::param("table", "step must divide every axis length"));
        }
        counts.push(k.round() as usize + 1);
    }
    if counts.iter().try_fold(1usize, |acc, c| acc.checked_mul(*c)).is_none_or(|t| t > 100_000_000) {
        return Err(Error::param("table", "more than 10^8 nodes"));
    }
    Ok(counts)
}

fn parse_value(t: &str) -> Result<f64> {
    match t {
        "inf" | "+inf" | "Infinity" => Ok(f64::INFINITY),
        _ => t
            .parse::<f64>()
            .map_err(|_| Error::param("table", format!("cannot parse `{t}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_reproduces_affine_functions() {
        let t = GridTable::from_fn(vec![-1.0, 0.0], vec![1.0, 2.0], 0.5, |x| 3.0 * x[0] - x[1] + 0.5)
            .unwrap();
        for &(a, b) in &[(0.3, 1.7), (-1.0, 0.0), (1.0, 2.0), (0.01, 0.99)] {
            assert!((t.eval(&[a, b]) - (3.0 * a - b + 0.5)).abs() < 1e-12);
        }
        assert_eq!(t.eval(&[1.5, 0.0]), f64::INFINITY);
    }

    #[test]
    fn text_and_binary_round_trip() {
        let t = GridTable::from_fn(vec![0.0], vec![1.0], 0.25, |x| {
            if x[0] > 0.9 {
                f64::INFINITY
            } else {
                x[0] * x[0]
            }
        })
        .unwrap();
        assert_eq!(GridTable::from_text(&t.to_text()).unwrap(), t);
        assert_eq!(GridTable::from_binary(t.to_binary().as_slice()).unwrap(), t);
        assert!((t.eval(&[0.125]) - 0.5 * 0.0625).abs() < 1e-15);
        assert_eq!(t.eval(&[0.8]), f64::INFINITY);
    }

    #[test]
    fn rejects_wrong_value_count() {
        assert!(GridTable::from_text("1,0,1,0.5\n0\n1\n").is_err());
        assert!(GridTable::from_text("1,0,1,0.5\n0\n1\n2\n").is_ok());
    }
}
