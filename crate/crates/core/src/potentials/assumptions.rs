//! Sampled checks of the structural assumptions on `(V, W)`.
//!
//! The assumptions quantify over all of `R^d`; these checks only scan a
//! finite probe and are never exhaustive. Every report echoes its probe so
//! a failure can be reproduced.

use std::collections::BTreeMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Confinement, Interaction, PotentialPair};
use crate::error::{Error, Result};
use crate::ext::serde_ext;
use crate::reference::ReferenceMeasure;

/// Points at which potentials are probed. Pair checks use every ordered
/// pair of probe points, the diagonal included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbePlan {
    Grid {
        lower: Vec<f64>,
        upper: Vec<f64>,
        points_per_axis: usize,
    },
    Cloud {
        lower: Vec<f64>,
        upper: Vec<f64>,
        count: usize,
        seed: u64,
    },
}

impl ProbePlan {
    /// Uniform grid on `[lo, hi]^d`.
    pub fn cube_grid(d: usize, lo: f64, hi: f64, points_per_axis: usize) -> Self {
        ProbePlan::Grid {
            lower: vec![lo; d],
            upper: vec![hi; d],
            points_per_axis,
        }
    }

    pub fn points(&self, dim: usize) -> Result<Vec<Vec<f64>>> {
        let (lower, upper) = match self {
            ProbePlan::Grid { lower, upper, .. } | ProbePlan::Cloud { lower, upper, .. } => {
                (lower, upper)
            }
        };
        if lower.len() != dim || upper.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: lower.len(),
            });
        }
        if lower.iter().zip(upper).any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::param("probe", "bounds must be finite with lower <= upper"));
        }
        match self {
            ProbePlan::Grid {
                points_per_axis, ..
            } => {
                let k = *points_per_axis;
                if k < 1 {
                    return Err(Error::param("probe", "points_per_axis must be positive"));
                }
                let total = k.checked_pow(dim as u32).filter(|t| *t <= 1_000_000).ok_or_else(|| {
                    Error::param("probe", "grid larger than 10^6 points")
                })?;
                let axis = |a: usize, i: usize| {
                    if k == 1 {
                        0.5 * (lower[a] + upper[a])
                    } else {
                        lower[a] + (upper[a] - lower[a]) * i as f64 / (k - 1) as f64
                    }
                };
                let mut out = Vec::with_capacity(total);
                let mut idx = vec![0usize; dim];
                for _ in 0..total {
                    out.push((0..dim).map(|a| axis(a, idx[a])).collect());
                    for a in (0..dim).rev() {
                        idx[a] += 1;
                        if idx[a] < k {
                            break;
                        }
                        idx[a] = 0;
                    }
                }
                Ok(out)
            }
            ProbePlan::Cloud { count, seed, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Ok((0..*count)
                    .map(|_| {
                        (0..dim)
                            .map(|a| lower[a] + (upper[a] - lower[a]) * rng.random::<f64>())
                            .collect()
                    })
                    .collect())
            }
        }
    }
}

/// A probe point (or pair) where a declared bound fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub quantity: String,
    pub x: Vec<f64>,
    pub y: Option<Vec<f64>>,
    #[serde(with = "serde_ext")]
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub assumption: String,
    pub probe: Option<ProbePlan>,
    /// Always `false`: the checks are sampled.
    pub exhaustive: bool,
    /// Sampled infimum of each checked quantity.
    #[serde(with = "serde_ext::map")]
    pub minima: BTreeMap<String, f64>,
    pub declared: BTreeMap<String, f64>,
    /// First [`MAX_LISTED`] violations.
    pub violations: Vec<Violation>,
    pub violation_count: usize,
}

pub const MAX_LISTED: usize = 32;

impl AssumptionReport {
    fn new(assumption: &str, probe: Option<ProbePlan>) -> Self {
        Self {
            assumption: assumption.into(),
            probe,
            exhaustive: false,
            minima: BTreeMap::new(),
            declared: BTreeMap::new(),
            violations: Vec::new(),
            violation_count: 0,
        }
    }

    pub fn holds(&self) -> bool {
        self.violation_count == 0
    }

    fn absorb(&mut self, scan: PairScan) {
        let extra = scan.count - scan.hits.len();
        for v in scan.hits {
            self.record(v);
        }
        self.violation_count += extra;
    }

    fn record(&mut self, v: Violation) {
        self.violation_count += 1;
        if self.violations.len() < MAX_LISTED {
            self.violations.push(v);
        }
    }
}

struct PairScan {
    min: f64,
    hits: Vec<Violation>,
    count: usize,
}

fn scan_pairs(
    pts: &[Vec<f64>],
    quantity: &str,
    bound: Option<f64>,
    f: impl Fn(usize, usize) -> Result<f64>,
) -> Result<PairScan> {
    let mut scan = PairScan {
        min: f64::INFINITY,
        hits: Vec::new(),
        count: 0,
    };
    for (i, x) in pts.iter().enumerate() {
        for (j, y) in pts.iter().enumerate() {
            let val = f(i, j)?;
            scan.min = scan.min.min(val);
            if let Some(c) = bound {
                if val < c {
                    scan.count += 1;
                    if scan.hits.len() < MAX_LISTED {
                        scan.hits.push(Violation {
                            quantity: quantity.into(),
                            x: x.clone(),
                            y: Some(y.clone()),
                            value: val,
                            bound: c,
                        });
                    }
                }
            }
        }
    }
    Ok(scan)
}

/// `W >= c` on the probe. `c` falls back to the pair's declared constant;
/// without either, only the sampled infimum is reported.
pub fn check_assumption_b1(
    pair: &PotentialPair,
    probe: &ProbePlan,
    c: Option<f64>,
) -> Result<AssumptionReport> {
    let c = c.or(pair.declared_c());
    let pts = probe.points(pair.dim())?;
    let mut report = AssumptionReport::new("B1", Some(probe.clone()));
    if let Some(c) = c {
        report.declared.insert("c".into(), c);
    }
    let scan = scan_pairs(&pts, "W", c, |i, j| pair.w(&pts[i], &pts[j]))?;
    report.minima.insert("W".into(), scan.min);
    report.absorb(scan);
    Ok(report)
}

/// `V >= c'` and `W(x,y) + eps1 (V(x) + V(y)) >= c` on the probe.
pub fn check_assumption_c1(
    pair: &PotentialPair,
    eps1: f64,
    probe: &ProbePlan,
    c: Option<f64>,
    c_prime: Option<f64>,
) -> Result<AssumptionReport> {
    if !(eps1 > 0.0 && eps1 < 1.0) {
        return Err(Error::param("eps1", "must lie in (0, 1)"));
    }
    let c = c.or(pair.declared_c());
    let pts = probe.points(pair.dim())?;
    let mut report = AssumptionReport::new("C1", Some(probe.clone()));
    report.declared.insert("eps1".into(), eps1);
    if let Some(c) = c {
        report.declared.insert("c".into(), c);
    }
    if let Some(cp) = c_prime {
        report.declared.insert("c_prime".into(), cp);
    }

    let mut v_min = f64::INFINITY;
    let mut vs = Vec::with_capacity(pts.len());
    for x in &pts {
        let v = pair.v(x)?;
        v_min = v_min.min(v);
        if let Some(cp) = c_prime {
            if v < cp {
                report.record(Violation {
                    quantity: "V".into(),
                    x: x.clone(),
                    y: None,
                    value: v,
                    bound: cp,
                });
            }
        }
        vs.push(v);
    }
    report.minima.insert("V".into(), v_min);

    let scan = scan_pairs(&pts, "W+eps1(V(x)+V(y))", c, |i, j| {
        let (x, y) = (&pts[i], &pts[j]);
        let w = pair.w(x, y)?;
        crate::ext::check_value(w + eps1 * (vs[i] + vs[j]), "W+eps1(V+V)", &[x, y])
    })?;
    report.minima.insert("W+eps1(V(x)+V(y))".into(), scan.min);
    report.absorb(scan);
    Ok(report)
}

/// On a finite reference: A1 (some atom where `V` and `W(a, a)` are finite)
/// and A2 (`int e^{-V} dl = 1` within `tol`).
pub fn check_assumption_a(
    pair: &PotentialPair,
    ell: &ReferenceMeasure,
    tol: f64,
) -> Result<AssumptionReport> {
    let (atoms, _) = ell.finite_atoms()?;
    let mut report = AssumptionReport::new("A", None);
    let finite_atom = atoms.iter().try_fold(false, |found, a| -> Result<bool> {
        Ok(found || (pair.v(a)?.is_finite() && pair.w(a, a)?.is_finite()))
    })?;
    report.minima.insert("A1_finite_atom".into(), if finite_atom { 1.0 } else { 0.0 });
    if !finite_atom {
        report.record(Violation {
            quantity: "A1".into(),
            x: Vec::new(),
            y: None,
            value: f64::INFINITY,
            bound: 0.0,
        });
    }
    let log_z = ell.log_integral_exp_neg(|x| pair.confinement().eval(x), None)?;
    let mass = log_z.exp();
    report.minima.insert("int_exp_neg_V".into(), mass);
    report.declared.insert("tol".into(), tol);
    if (mass - 1.0).abs() > tol {
        report.record(Violation {
            quantity: "A2".into(),
            x: Vec::new(),
            y: None,
            value: mass,
            bound: 1.0,
        });
    }
    Ok(report)
}

/// The equivalent conditions on `(V1, V2, W~)`: `int e^{-V2} dl` finite and
/// positive, and `W~(x,y) + V1(x) + V1(y) >= c~` on the probe.
pub fn check_assumption_d(
    v1: &Confinement,
    v2: &Confinement,
    w: &Interaction,
    ell: &ReferenceMeasure,
    quadrature_step: Option<f64>,
    probe: &ProbePlan,
    c_tilde: Option<f64>,
) -> Result<AssumptionReport> {
    let mut report = AssumptionReport::new("D", Some(probe.clone()));
    let log_z2 = ell.log_integral_exp_neg(|x| v2.eval(x), quadrature_step)?;
    report.minima.insert("log_int_exp_neg_V2".into(), log_z2);
    if !log_z2.is_finite() {
        report.record(Violation {
            quantity: "D1".into(),
            x: Vec::new(),
            y: None,
            value: log_z2,
            bound: 0.0,
        });
    }
    if let Some(c) = c_tilde {
        report.declared.insert("c_tilde".into(), c);
    }
    let pts = probe.points(ell.dim())?;
    let scan = scan_pairs(&pts, "W+V1(x)+V1(y)", c_tilde, |i, j| {
        let (x, y) = (&pts[i], &pts[j]);
        let val = w.eval_checked(x, y)? + v1.eval_checked(x)? + v1.eval_checked(y)?;
        crate::ext::check_value(val, "W+V1+V1", &[x, y])
    })?;
    report.minima.insert("W+V1(x)+V1(y)".into(), scan.min);
    report.absorb(scan);
    Ok(report)
}
