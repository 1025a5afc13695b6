//! String specifications of the built-in potentials, as used by config
//! files and the command line.
//!
//! Confinements: `zero`, `power:p`, `hardwall:lo:hi`, `const:c`,
//! `table:path`. Interactions: `zero`, `coulomb`, `log`, `sqdist`,
//! `gaussian:s`, `riesz:s`, `distinct`, `const:c`, `table:path`, and the
//! masked kernels `w1|w2|w3:box:lo_1,..:hi_1,..:inner` or
//! `w1|w2|w3:ball:c_1,..:r:inner`, where `inner` is any interaction spec.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    coulomb_kernel, hard_wall, masked_interaction, power_confinement, Confinement, GridTable,
    Interaction, MaskKind, Region, DEFAULT_SEGMENT_RESOLUTION,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ConfinementSpec {
    Zero,
    Power(f64),
    HardWall(f64, f64),
    Const(f64),
    Table(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum InteractionSpec {
    Zero,
    Coulomb,
    Log,
    SqDist,
    Gaussian(f64),
    Riesz(f64),
    Distinct,
    Const(f64),
    Table(String),
    Masked {
        kind: MaskKind,
        region: Region,
        inner: Box<InteractionSpec>,
    },
}

fn num(field: &str, t: &str) -> Result<f64> {
    match t {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => t
            .parse()
            .map_err(|_| Error::config(field, format!("cannot parse number `{t}`"))),
    }
}

fn list(field: &str, t: &str) -> Result<Vec<f64>> {
    t.split(',').map(|x| num(field, x.trim())).collect()
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

impl FromStr for ConfinementSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().splitn(2, ':').collect();
        let arg = parts.get(1).copied();
        let need = |what: &str| arg.ok_or_else(|| Error::config("confinement", format!("`{}` needs {what}", parts[0])));
        Ok(match parts[0] {
            "zero" => ConfinementSpec::Zero,
            "power" => ConfinementSpec::Power(num("confinement", need("an exponent")?)?),
            "const" => ConfinementSpec::Const(num("confinement", need("a value")?)?),
            "hardwall" => {
                let (lo, hi) = need("lo:hi")?
                    .split_once(':')
                    .ok_or_else(|| Error::config("confinement", "hardwall needs lo:hi"))?;
                ConfinementSpec::HardWall(num("confinement", lo)?, num("confinement", hi)?)
            }
            "table" => ConfinementSpec::Table(need("a path")?.to_string()),
            other => {
                return Err(Error::config(
                    "confinement",
                    format!("unknown confinement `{other}`"),
                ))
            }
        })
    }
}

impl fmt::Display for ConfinementSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfinementSpec::Zero => write!(f, "zero"),
            ConfinementSpec::Power(p) => write!(f, "power:{p}"),
            ConfinementSpec::HardWall(lo, hi) => write!(f, "hardwall:{lo}:{hi}"),
            ConfinementSpec::Const(c) => write!(f, "const:{c}"),
            ConfinementSpec::Table(p) => write!(f, "table:{p}"),
        }
    }
}

impl TryFrom<String> for ConfinementSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ConfinementSpec> for String {
    fn from(s: ConfinementSpec) -> String {
        s.to_string()
    }
}

impl ConfinementSpec {
    pub fn build(&self, dim: usize) -> Result<Confinement> {
        Ok(match self {
            ConfinementSpec::Zero => Confinement::zero(),
            ConfinementSpec::Power(p) => power_confinement(*p)?,
            ConfinementSpec::HardWall(lo, hi) => hard_wall(*lo, *hi)?,
            ConfinementSpec::Const(c) => {
                if !c.is_finite() {
                    return Err(Error::config("confinement", "constant must be finite"));
                }
                Confinement::constant(*c)
            }
            ConfinementSpec::Table(path) => {
                let t = GridTable::load(std::path::Path::new(path))?;
                if t.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: t.dim(),
                    });
                }
                Confinement::new(format!("table:{path}"), move |x| t.eval(x))
            }
        })
    }
}

impl FromStr for InteractionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let need = |what: &str| arg.ok_or_else(|| Error::config("interaction", format!("`{head}` needs {what}")));
        Ok(match head {
            "zero" => InteractionSpec::Zero,
            "coulomb" => InteractionSpec::Coulomb,
            "log" => InteractionSpec::Log,
            "sqdist" => InteractionSpec::SqDist,
            "distinct" => InteractionSpec::Distinct,
            "gaussian" => InteractionSpec::Gaussian(num("interaction", need("a scale")?)?),
            "riesz" => InteractionSpec::Riesz(num("interaction", need("an exponent")?)?),
            "const" => InteractionSpec::Const(num("interaction", need("a value")?)?),
            "table" => InteractionSpec::Table(need("a path")?.to_string()),
            "w1" | "w2" | "w3" => {
                let kind = match head {
                    "w1" => MaskKind::W1,
                    "w2" => MaskKind::W2,
                    _ => MaskKind::W3,
                };
                let mut it = need("a region and an inner kernel")?.splitn(4, ':');
                let bad = || Error::config("interaction", format!("malformed masked spec `{s}`"));
                let shape = it.next().ok_or_else(bad)?;
                let a = it.next().ok_or_else(bad)?;
                let b = it.next().ok_or_else(bad)?;
                let inner = it.next().ok_or_else(bad)?;
                let region = match shape {
                    "box" => Region::Box {
                        lower: list("interaction", a)?,
                        upper: list("interaction", b)?,
                    },
                    "ball" => Region::Ball {
                        center: list("interaction", a)?,
                        radius: num("interaction", b)?,
                    },
                    _ => return Err(bad()),
                };
                InteractionSpec::Masked {
                    kind,
                    region,
                    inner: Box::new(inner.parse()?),
                }
            }
            other => {
                return Err(Error::config(
                    "interaction",
                    format!("unknown interaction `{other}`"),
                ))
            }
        })
    }
}

impl fmt::Display for InteractionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InteractionSpec::Zero => write!(f, "zero"),
            InteractionSpec::Coulomb => write!(f, "coulomb"),
            InteractionSpec::Log => write!(f, "log"),
            InteractionSpec::SqDist => write!(f, "sqdist"),
            InteractionSpec::Distinct => write!(f, "distinct"),
            InteractionSpec::Gaussian(s) => write!(f, "gaussian:{s}"),
            InteractionSpec::Riesz(s) => write!(f, "riesz:{s}"),
            InteractionSpec::Const(c) => write!(f, "const:{c}"),
            InteractionSpec::Table(p) => write!(f, "table:{p}"),
            InteractionSpec::Masked {
                kind,
                region,
                inner,
            } => {
                let k = match kind {
                    MaskKind::W1 => "w1",
                    MaskKind::W2 => "w2",
                    MaskKind::W3 => "w3",
                };
                match region {
                    Region::Box { lower, upper } => {
                        write!(f, "{k}:box:{}:{}:{inner}", join(lower), join(upper))
                    }
                    Region::Ball { center, radius } => {
                        write!(f, "{k}:ball:{}:{radius}:{inner}", join(center))
                    }
                }
            }
        }
    }
}

impl TryFrom<String> for InteractionSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<InteractionSpec> for String {
    fn from(s: InteractionSpec) -> String {
        s.to_string()
    }
}

impl InteractionSpec {
    pub fn build(&self, dim: usize) -> Result<Interaction> {
        Ok(match self {
            InteractionSpec::Zero => Interaction::zero(),
            InteractionSpec::Coulomb => coulomb_kernel(dim)?,
            InteractionSpec::Log => Interaction::log_kernel(),
            InteractionSpec::SqDist => Interaction::squared_distance(),
            InteractionSpec::Distinct => Interaction::distinct_indicator(),
            InteractionSpec::Gaussian(s) => {
                if !(*s > 0.0 && s.is_finite()) {
                    return Err(Error::config("interaction", "gaussian scale must be positive"));
                }
                Interaction::gaussian(*s)
            }
            InteractionSpec::Riesz(s) => {
                if !(*s > 0.0 && s.is_finite()) {
                    return Err(Error::config("interaction", "riesz exponent must be positive"));
                }
                let s = *s;
                Interaction::radial(format!("riesz:{s}"), move |r| {
                    if r == 0.0 {
                        f64::INFINITY
                    } else {
                        r.powf(-s)
                    }
                })
            }
            InteractionSpec::Const(c) => {
                if !c.is_finite() {
                    return Err(Error::config("interaction", "constant must be finite"));
                }
                Interaction::constant(*c)
            }
            InteractionSpec::Table(path) => {
                let t = GridTable::load(std::path::Path::new(path))?;
                if t.dim() != 2 * dim {
                    return Err(Error::DimensionMismatch {
                        expected: 2 * dim,
                        got: t.dim(),
                    });
                }
                Interaction::new(format!("table:{path}"), false, move |x, y| {
                    let xy: Vec<f64> = x.iter().chain(y).copied().collect();
                    t.eval(&xy)
                })
            }
            InteractionSpec::Masked {
                kind,
                region,
                inner,
            } => {
                if region.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: region.dim(),
                    });
                }
                masked_interaction(*kind, inner.build(dim)?, region.clone(), DEFAULT_SEGMENT_RESOLUTION)?
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub kind: &'static str,
    pub syntax: &'static str,
    pub description: &'static str,
}

/// Every built-in potential, sorted by name then kind.
pub fn catalog_entries() -> Vec<CatalogEntry> {
    let e = |name, kind, syntax, description| CatalogEntry {
        name,
        kind,
        syntax,
        description,
    };
    let mut v = vec![
        e("zero", "confinement", "zero", "V = 0"),
        e("power", "confinement", "power:p", "V(x) = |x|^p, p > 1"),
        e("hardwall", "confinement", "hardwall:lo:hi", "0 on [lo,hi]^d, +inf outside"),
        e("const", "confinement", "const:c", "V = c"),
        e("table", "confinement", "table:path", "multilinear interpolation of a grid table, +inf outside"),
        e("zero", "interaction", "zero", "W = 0"),
        e("coulomb", "interaction", "coulomb", "-|x-y| (d=1), -log|x-y| (d=2), |x-y|^{2-d} (d>2)"),
        e("log", "interaction", "log", "-log|x-y| in any dimension"),
        e("sqdist", "interaction", "sqdist", "|x-y|^2"),
        e("gaussian", "interaction", "gaussian:s", "exp(-|x-y|^2 / (2 s^2))"),
        e("riesz", "interaction", "riesz:s", "|x-y|^{-s}, s > 0"),
        e("distinct", "interaction", "distinct", "1 if x != y, else 0"),
        e("const", "interaction", "const:c", "W = c"),
        e("table", "interaction", "table:path", "grid table over (x, y) in R^{2d}"),
        e("w1", "interaction", "w1:box:lo:hi:inner | w1:ball:c:r:inner", "inner kernel when both points lie in the open region"),
        e("w2", "interaction", "w2:box:lo:hi:inner | w2:ball:c:r:inner", "inner kernel when both lie in the open region or both outside its closure"),
        e("w3", "interaction", "w3:box:lo:hi:inner | w3:ball:c:r:inner", "inner kernel when the segment [x,y] misses the closed region"),
    ];
    v.sort_by(|a, b| (a.name, a.kind).cmp(&(b.name, b.kind)));
    v
}
