//! Confinement and interaction potentials, the built-in catalog, sampled
//! assumption checks, the equivalence transform and superlinear tightness
//! functions.

mod assumptions;
mod catalog;
mod equivalence;
mod masked;
mod phi;
mod table;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ext::check_value;
use crate::measures::{dist, norm};

pub use assumptions::{
    check_assumption_a, check_assumption_b1, check_assumption_c1, check_assumption_d,
    AssumptionReport, ProbePlan, Violation,
};
pub use catalog::{catalog_entries, CatalogEntry, ConfinementSpec, InteractionSpec};
pub use equivalence::{normalize_pair, NormalizedPair};
pub use masked::{masked_interaction, MaskKind, Region, DEFAULT_SEGMENT_RESOLUTION};
pub use phi::{
    construct_phi, phi_entropy_bound, phi_moment_check, phi_pair_inequality, PhiEntropyReport,
    PhiMomentReport, PhiPairReport, SuperlinearFunction,
};
pub use table::GridTable;

type VFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type WFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// Single-particle potential `V: R^d -> (-inf, +inf]`.
#[derive(Clone)]
pub struct Confinement {
    label: String,
    f: VFn,
}

impl fmt::Debug for Confinement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Confinement({})", self.label)
    }
}

impl Confinement {
    pub fn new(label: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn zero() -> Self {
        Self::new("zero", |_| 0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("const:{c}"), move |_| c)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    /// Evaluation with NaN / `-inf` rejected.
    pub fn eval_checked(&self, x: &[f64]) -> Result<f64> {
        check_value(self.eval(x), &format!("V={}", self.label), &[x])
    }

    /// `self + other`.
    pub fn plus(&self, other: &Confinement) -> Confinement {
        let (a, b) = (self.clone(), other.clone());
        Confinement::new(format!("{}+{}", self.label, other.label), move |x| {
            a.eval(x) + b.eval(x)
        })
    }

    /// `self + c`.
    pub fn shifted(&self, c: f64) -> Confinement {
        let a = self.clone();
        Confinement::new(format!("{}{:+}", self.label, c), move |x| a.eval(x) + c)
    }

    /// `c * self` for `c >= 0`.
    pub fn scaled(&self, c: f64) -> Confinement {
        let a = self.clone();
        Confinement::new(format!("{c}*{}", self.label), move |x| {
            crate::ext::weighted(c, a.eval(x))
        })
    }
}

/// Pair potential `W: R^d x R^d -> (-inf, +inf]`.
#[derive(Clone)]
pub struct Interaction {
    label: String,
    symmetric: bool,
    f: WFn,
}

impl fmt::Debug for Interaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Interaction({}, symmetric={})", self.label, self.symmetric)
    }
}

impl Interaction {
    pub fn new(
        label: impl Into<String>,
        symmetric: bool,
        f: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            symmetric,
            f: Arc::new(f),
        }
    }

    /// `W(x, y) = k(|x - y|)`.
    pub fn radial(label: impl Into<String>, k: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(label, true, move |x, y| k(dist(x, y)))
    }

    pub fn zero() -> Self {
        Self::new("zero", true, |_, _| 0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("const:{c}"), true, move |_, _| c)
    }

    /// `|x - y|^2`.
    pub fn squared_distance() -> Self {
        Self::radial("sqdist", |r| r * r)
    }

    /// `exp(-|x - y|^2 / (2 s^2))`, a positive-definite kernel.
    pub fn gaussian(s: f64) -> Self {
        Self::radial(format!("gaussian:{s}"), move |r| (-r * r / (2.0 * s * s)).exp())
    }

    /// `-log |x - y|` in any dimension (`+inf` on the diagonal).
    pub fn log_kernel() -> Self {
        Self::radial("log", |r| if r == 0.0 { f64::INFINITY } else { -r.ln() })
    }

    /// `1_{x != y}`.
    pub fn distinct_indicator() -> Self {
        Self::new("distinct", true, |x, y| if x == y { 0.0 } else { 1.0 })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        (self.f)(x, y)
    }

    pub fn eval_checked(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_value(self.eval(x, y), &format!("W={}", self.label), &[x, y])
    }

    /// `min(W, m)`.
    pub fn truncated(&self, m: f64) -> Interaction {
        let w = self.clone();
        Interaction::new(format!("min({},{m})", self.label), self.symmetric, move |x, y| {
            w.eval(x, y).min(m)
        })
    }

    /// `W(x, y) + a(x) + a(y) + c`.
    pub fn with_sides(&self, a: &Confinement, c: f64) -> Interaction {
        let (w, a) = (self.clone(), a.clone());
        Interaction::new(
            format!("{}+{}(x)+{}(y){:+}", self.label, a.label, a.label, c),
            self.symmetric,
            move |x, y| w.eval(x, y) + a.eval(x) + a.eval(y) + c,
        )
    }
}

/// Coulomb kernel `K(x - y)`: `-|x-y|` for `d = 1`, `-log|x-y|` for `d = 2`,
/// `|x-y|^{2-d}` for `d > 2`.
pub fn coulomb_kernel(d: usize) -> Result<Interaction> {
    match d {
        0 => Err(Error::param("d", "dimension must be at least 1")),
        1 => Ok(Interaction::radial("coulomb", |r| -r)),
        2 => Ok(Interaction::radial("coulomb", |r| {
            if r == 0.0 {
                f64::INFINITY
            } else {
                -r.ln()
            }
        })),
        _ => {
            let e = (d - 2) as i32;
            Ok(Interaction::radial("coulomb", move |r| {
                if r == 0.0 {
                    f64::INFINITY
                } else {
                    1.0 / r.powi(e)
                }
            }))
        }
    }
}

/// `V(x) = |x|^p` with `p > 1`.
pub fn power_confinement(p: f64) -> Result<Confinement> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::param("p", format!("power confinement needs p > 1, got {p}")));
    }
    Ok(Confinement::new(format!("power:{p}"), move |x| norm(x).powf(p)))
}

/// `0` inside the closed box, `+inf` outside.
pub fn hard_wall(lower: f64, upper: f64) -> Result<Confinement> {
    if !(lower < upper) {
        return Err(Error::param("hardwall", "lower bound must be below upper bound"));
    }
    Ok(Confinement::new(format!("hardwall:{lower}:{upper}"), move |x| {
        if x.iter().all(|v| (lower..=upper).contains(v)) {
            0.0
        } else {
            f64::INFINITY
        }
    }))
}

/// The pair `(V, W)` with declared assumption constants.
#[derive(Clone, Debug)]
pub struct PotentialPair {
    dim: usize,
    v: Confinement,
    w: Interaction,
    declared_c: Option<f64>,
    declared_eps1: Option<f64>,
}

impl PotentialPair {
    pub fn new(dim: usize, v: Confinement, w: Interaction) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "dimension must be at least 1"));
        }
        Ok(Self {
            dim,
            v,
            w,
            declared_c: None,
            declared_eps1: None,
        })
    }

    /// Declared lower bound `c` on `W` (or on `W + eps1 (V + V)`).
    pub fn with_declared_c(mut self, c: f64) -> Self {
        self.declared_c = Some(c);
        self
    }

    pub fn with_declared_eps1(mut self, eps1: f64) -> Result<Self> {
        if !(eps1 > 0.0 && eps1 < 1.0) {
            return Err(Error::param("eps1", "must lie in (0, 1)"));
        }
        self.declared_eps1 = Some(eps1);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn confinement(&self) -> &Confinement {
        &self.v
    }

    pub fn interaction(&self) -> &Interaction {
        &self.w
    }

    pub fn symmetric(&self) -> bool {
        self.w.symmetric
    }

    pub fn declared_c(&self) -> Option<f64> {
        self.declared_c
    }

    pub fn declared_eps1(&self) -> Option<f64> {
        self.declared_eps1
    }

    #[inline]
    pub fn v(&self, x: &[f64]) -> Result<f64> {
        self.v.eval_checked(x)
    }

    #[inline]
    pub fn w(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.w.eval_checked(x, y)
    }

    /// Replaces `V`, keeping `W` and the declarations.
    pub fn with_confinement(&self, v: Confinement) -> Self {
        Self { v, ..self.clone() }
    }

    pub fn with_interaction(&self, w: Interaction) -> Self {
        Self { w, ..self.clone() }
    }

    /// Largest `|W(x,y) - W(y,x)|` over the probe pairs; zero for a
    /// symmetric kernel.
    pub fn symmetry_defect(&self, probe: &ProbePlan) -> Result<f64> {
        let pts = probe.points(self.dim)?;
        let mut worst: f64 = 0.0;
        for x in &pts {
            for y in &pts {
                let (a, b) = (self.w(x, y)?, self.w(y, x)?);
                if a != b {
                    worst = worst.max((a - b).abs());
                }
            }
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coulomb_values() {
        let k2 = coulomb_kernel(2).unwrap();
        assert_eq!(k2.eval(&[0.0, 0.0], &[1.0, 0.0]), 0.0);
        assert_eq!(k2.eval(&[1.0, 1.0], &[1.0, 1.0]), f64::INFINITY);
        let k3 = coulomb_kernel(3).unwrap();
        assert!((k3.eval(&[0.0, 0.0, 0.0], &[0.0, 2.0, 0.0]) - 0.5).abs() < 1e-15);
        let k1 = coulomb_kernel(1).unwrap();
        assert_eq!(k1.eval(&[0.3], &[0.3]), 0.0);
        assert_eq!(k1.eval(&[0.0], &[2.0]), -2.0);
        assert!(coulomb_kernel(0).is_err());
    }

    #[test]
    fn coulomb_is_exactly_symmetric() {
        let k = coulomb_kernel(3).unwrap();
        let pair = PotentialPair::new(3, Confinement::zero(), k).unwrap();
        let probe = ProbePlan::Cloud {
            lower: vec![-2.0; 3],
            upper: vec![2.0; 3],
            count: 40,
            seed: 9,
        };
        assert_eq!(pair.symmetry_defect(&probe).unwrap(), 0.0);
    }

    #[test]
    fn power_confinement_values() {
        let v = power_confinement(2.0).unwrap();
        assert!((v.eval(&[1.0, 1.0]) - 2.0).abs() < 1e-15);
        assert_eq!(v.eval(&[0.0]), 0.0);
        let v3 = power_confinement(3.0).unwrap();
        assert!((v3.eval(&[2.0]) - 8.0).abs() < 1e-12);
        assert!(power_confinement(1.0).is_err());
        assert!(power_confinement(0.5).is_err());
    }

    #[test]
    fn nan_from_potential_is_an_error() {
        let v = Confinement::new("bad", |_| f64::NAN);
        assert!(v.eval_checked(&[0.0]).is_err());
        let w = Interaction::new("neg", true, |_, _| f64::NEG_INFINITY);
        assert!(w.eval_checked(&[0.0], &[1.0]).is_err());
    }
}
