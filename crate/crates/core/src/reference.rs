//! The sigma-finite reference measure `l` of the Gibbs law.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::{ExtSum, LogSumExp};
use crate::measures::DiscreteMeasure;

/// Either a finite list of weighted atoms (exact enumeration, also used for
/// large atom clouds such as points on a circle) or Lebesgue measure on a
/// box (Metropolis sampling, midpoint quadrature).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceMeasure {
    Atoms {
        dim: usize,
        atoms: Vec<Vec<f64>>,
        /// Positive masses; need not sum to one.
        weights: Vec<f64>,
    },
    Lebesgue {
        dim: usize,
        /// Per-axis bounds; infinite bounds mean unrestricted.
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
}

impl ReferenceMeasure {
    pub fn atoms(dim: usize, atoms: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::param("reference", "need one positive weight per atom"));
        }
        if atoms.iter().any(|a| a.len() != dim) {
            return Err(Error::param("reference", "atom of the wrong dimension"));
        }
        if atoms.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::param("reference", "non-finite atom coordinate"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::param("reference", "atom weights must be positive and finite"));
        }
        let mut seen = std::collections::HashSet::new();
        for a in &atoms {
            let key: Vec<u64> = a.iter().map(|x| (x + 0.0).to_bits()).collect();
            if !seen.insert(key) {
                return Err(Error::param("reference", "duplicate atom"));
            }
        }
        Ok(ReferenceMeasure::Atoms {
            dim,
            atoms,
            weights,
        })
    }

    /// Counting measure (unit weights) on scalar atoms.
    pub fn counting_1d(xs: &[f64]) -> Result<Self> {
        Self::atoms(1, xs.iter().map(|&x| vec![x]).collect(), vec![1.0; xs.len()])
    }

    pub fn lebesgue(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::param("reference", "bounds must have the same positive length"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u) || l.is_nan() || u.is_nan()) {
            return Err(Error::param("reference", "each lower bound must be below its upper bound"));
        }
        Ok(ReferenceMeasure::Lebesgue {
            dim: lower.len(),
            lower,
            upper,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            ReferenceMeasure::Atoms { dim, .. } | ReferenceMeasure::Lebesgue { dim, .. } => *dim,
        }
    }

    pub fn is_finite_support(&self) -> bool {
        matches!(self, ReferenceMeasure::Atoms { .. })
    }

    /// Atom list of a finite reference.
    pub fn finite_atoms(&self) -> Result<(&[Vec<f64>], &[f64])> {
        match self {
            ReferenceMeasure::Atoms { atoms, weights, .. } => Ok((atoms, weights)),
            ReferenceMeasure::Lebesgue { .. } => Err(Error::param(
                "reference",
                "operation needs a finite atom reference",
            )),
        }
    }

    /// Log-density with respect to the underlying counting/Lebesgue measure
    /// (`-inf` outside the support). For atoms this is `log l({x})`.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        match self {
            ReferenceMeasure::Atoms { atoms, weights, .. } => atoms
                .iter()
                .position(|a| a.as_slice() == x)
                .map_or(f64::NEG_INFINITY, |i| weights[i].ln()),
            ReferenceMeasure::Lebesgue { lower, upper, .. } => {
                let inside = x
                    .iter()
                    .zip(lower.iter().zip(upper))
                    .all(|(v, (l, u))| *l <= *v && *v <= *u);
                if inside {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// `log int e^{-v} dl`: exact for atoms, midpoint rule with `step` on a
    /// bounded Lebesgue box.
    pub fn log_integral_exp_neg(&self, v: impl Fn(&[f64]) -> f64, step: Option<f64>) -> Result<f64> {
        let mut acc = LogSumExp::new();
        match self {
            ReferenceMeasure::Atoms { atoms, weights, .. } => {
                for (a, w) in atoms.iter().zip(weights) {
                    let val = crate::ext::check_value(v(a), "V", &[a])?;
                    acc.add(-val + w.ln());
                }
            }
            ReferenceMeasure::Lebesgue { lower, upper, .. } => {
                let step = step.ok_or_else(|| Error::param("step", "quadrature step required"))?;
                let nodes = quadrature_nodes(lower, upper, step)?;
                let cell = step.powi(lower.len() as i32).ln();
                for x in nodes.chunks_exact(lower.len()) {
                    let val = crate::ext::check_value(v(x), "V", &[x])?;
                    acc.add(-val + cell);
                }
            }
        }
        Ok(acc.value())
    }

    /// The probability measure `e^{-v} l / Z` on the atoms of a finite
    /// reference, together with `log Z`.
    pub fn tilted(&self, v: impl Fn(&[f64]) -> f64) -> Result<(DiscreteMeasure, f64)> {
        let (atoms, weights) = self.finite_atoms()?;
        let log_z = self.log_integral_exp_neg(&v, None)?;
        if !log_z.is_finite() {
            return Err(Error::AllInfinite(
                "e^{-V} vanishes on every reference atom".into(),
            ));
        }
        let dim = self.dim();
        let mut coords = Vec::with_capacity(atoms.len() * dim);
        let mut w = Vec::with_capacity(atoms.len());
        for (a, lw) in atoms.iter().zip(weights) {
            coords.extend_from_slice(a);
            w.push((-v(a) + lw.ln() - log_z).exp());
        }
        let m = DiscreteMeasure::from_unnormalized(dim, coords, w)?;
        Ok((m, log_z))
    }

    /// Total mass `l(R^d)` (finite references only).
    pub fn total_mass(&self) -> Result<f64> {
        let (_, w) = self.finite_atoms()?;
        Ok(w.iter().copied().collect::<ExtSum>().value())
    }
}

/// Midpoint-rule nodes of a bounded box, row-major.
pub(crate) fn quadrature_nodes(lower: &[f64], upper: &[f64], step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Error::param("step", "quadrature step must be positive"));
    }
    if lower.iter().chain(upper).any(|b| !b.is_finite()) {
        return Err(Error::param("reference", "quadrature needs a bounded box"));
    }
    let counts: Vec<usize> = lower
        .iter()
        .zip(upper)
        .map(|(l, u)| ((u - l) / step).round().max(1.0) as usize)
        .collect();
    let total: usize = counts.iter().product();
    if total > 50_000_000 {
        return Err(Error::BudgetExceeded {
            needed: total as f64,
            budget: 50_000_000,
        });
    }
    let d = lower.len();
    let mut out = Vec::with_capacity(total * d);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        for k in 0..d {
            out.push(lower[k] + (idx[k] as f64 + 0.5) * step);
        }
        for k in (0..d).rev() {
            idx[k] += 1;
            if idx[k] < counts[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(out)
}
