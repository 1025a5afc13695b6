//! Finitely supported probability measures on `R^d`, particle
//! configurations, and the metrics used to compare measures.

mod metrics;
mod transport;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtSum;

pub use metrics::{d_bl, d_psi, wasserstein_p, wasserstein_p_lp, wasserstein_p_quantile};

/// Weights summing to within this of 1 are accepted and renormalized.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;
/// Atoms lighter than this after merging are dropped.
pub const MIN_WEIGHT: f64 = 1e-15;

/// A finitely supported probability measure: distinct atoms with positive
/// weights summing to one.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureRepr", into = "MeasureRepr")]
pub struct DiscreteMeasure {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MeasureRepr {
    dim: usize,
    atoms: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl TryFrom<MeasureRepr> for DiscreteMeasure {
    type Error = Error;
    fn try_from(r: MeasureRepr) -> Result<Self> {
        DiscreteMeasure::new(r.dim, r.atoms, r.weights)
    }
}

impl From<DiscreteMeasure> for MeasureRepr {
    fn from(m: DiscreteMeasure) -> Self {
        MeasureRepr {
            dim: m.dim,
            atoms: m.atoms().map(<[f64]>::to_vec).collect(),
            weights: m.weights,
        }
    }
}

impl fmt::Debug for DiscreteMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_list();
        for (a, w) in self.iter() {
            list.entry(&(a, w));
        }
        list.finish()
    }
}

fn atom_key(p: &[f64]) -> Vec<u64> {
    // -0.0 and 0.0 are the same point.
    p.iter().map(|&x| (x + 0.0).to_bits()).collect()
}

impl DiscreteMeasure {
    /// Builds a measure from atoms and weights summing to one (within
    /// [`WEIGHT_SUM_TOL`]). Duplicate atoms are merged.
    pub fn new(dim: usize, atoms: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::param(
                "weights",
                format!("{} atoms but {} weights", atoms.len(), weights.len()),
            ));
        }
        let mut coords = Vec::with_capacity(atoms.len() * dim);
        for a in &atoms {
            if a.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: a.len(),
                });
            }
            coords.extend_from_slice(a);
        }
        Self::from_flat(dim, coords, weights)
    }

    /// Same as [`DiscreteMeasure::new`] with row-major coordinates.
    pub fn from_flat(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::param(
                "weights",
                format!("weights sum to {total}, expected 1"),
            ));
        }
        Self::build(dim, coords, weights)
    }

    /// Normalizes arbitrary non-negative weights with positive total mass.
    pub fn from_unnormalized(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        Self::build(dim, coords, weights)
    }

    fn build(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "dimension must be at least 1"));
        }
        if coords.len() != weights.len() * dim {
            return Err(Error::param(
                "atoms",
                format!("{} coordinates for {} atoms of dimension {dim}", coords.len(), weights.len()),
            ));
        }
        if let Some(x) = coords.iter().find(|x| !x.is_finite()) {
            return Err(Error::param("atoms", format!("non-finite coordinate {x}")));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::param("weights", format!("invalid weight {w}")));
        }

        let mut index: HashMap<Vec<u64>, usize> = HashMap::with_capacity(weights.len());
        let mut merged_coords = Vec::with_capacity(coords.len());
        let mut merged_weights: Vec<f64> = Vec::with_capacity(weights.len());
        for (p, &w) in coords.chunks_exact(dim).zip(&weights) {
            match index.get(&atom_key(p)) {
                Some(&i) => merged_weights[i] += w,
                None => {
                    index.insert(atom_key(p), merged_weights.len());
                    merged_coords.extend(p.iter().map(|x| x + 0.0));
                    merged_weights.push(w);
                }
            }
        }

        let total: f64 = merged_weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::param("weights", "total mass must be positive"));
        }
        let mut out_coords = Vec::with_capacity(merged_coords.len());
        let mut out_weights = Vec::with_capacity(merged_weights.len());
        for (p, &w) in merged_coords.chunks_exact(dim).zip(&merged_weights) {
            if w / total >= MIN_WEIGHT {
                out_coords.extend_from_slice(p);
                out_weights.push(w);
            }
        }
        let kept: ExtSum = out_weights.iter().copied().collect();
        let kept = kept.value();
        out_weights.iter_mut().for_each(|w| *w /= kept);
        Ok(Self {
            dim,
            coords: out_coords,
            weights: out_weights,
        })
    }

    pub fn dirac(point: &[f64]) -> Result<Self> {
        Self::from_flat(point.len(), point.to_vec(), vec![1.0])
    }

    /// Uniform measure on the given points (duplicates merge).
    pub fn uniform(dim: usize, atoms: Vec<Vec<f64>>) -> Result<Self> {
        let k = atoms.len();
        if k == 0 {
            return Err(Error::param("atoms", "empty atom list"));
        }
        Self::new(dim, atoms, vec![1.0 / k as f64; k])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of (distinct) atoms.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn atoms(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (&[f64], f64)> + '_ {
        self.atoms().zip(self.weights.iter().copied())
    }

    /// Index of the atom located exactly at `p`, if any.
    pub fn find_atom(&self, p: &[f64]) -> Option<usize> {
        let key = atom_key(p);
        self.atoms().position(|a| atom_key(a) == key)
    }

    /// Weight of the atom at `p` (zero when `p` is not an atom).
    pub fn mass_at(&self, p: &[f64]) -> f64 {
        self.find_atom(p).map_or(0.0, |i| self.weights[i])
    }

    /// `sum_i w_i f(a_i)` with compensated summation.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.iter()
            .map(|(a, w)| crate::ext::weighted(w, f(a)))
            .collect::<ExtSum>()
            .value()
    }

    /// Product measure on `R^{d1 + d2}`.
    pub fn product(&self, other: &DiscreteMeasure) -> DiscreteMeasure {
        let dim = self.dim + other.dim;
        let mut coords = Vec::with_capacity(self.len() * other.len() * dim);
        let mut weights = Vec::with_capacity(self.len() * other.len());
        for (a, wa) in self.iter() {
            for (b, wb) in other.iter() {
                coords.extend_from_slice(a);
                coords.extend_from_slice(b);
                weights.push(wa * wb);
            }
        }
        DiscreteMeasure {
            dim,
            coords,
            weights,
        }
    }

    /// Convex combination `t * self + (1 - t) * other`.
    pub fn mix(&self, other: &DiscreteMeasure, t: f64) -> Result<DiscreteMeasure> {
        self.same_dim(other)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::param("t", "mixing coefficient must lie in [0, 1]"));
        }
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        let mut weights: Vec<f64> = self.weights.iter().map(|w| t * w).collect();
        weights.extend(other.weights.iter().map(|w| (1.0 - t) * w));
        Self::from_unnormalized(self.dim, coords, weights)
    }

    pub(crate) fn same_dim(&self, other: &DiscreteMeasure) -> Result<()> {
        if self.dim != other.dim {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            })
        } else {
            Ok(())
        }
    }

    /// CSV export with columns `x_1..x_d,w` at 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (1..=self.dim)
            .map(|i| format!("x_{i}"))
            .chain(std::iter::once("w".to_string()))
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for (a, w) in self.iter() {
            let row: Vec<String> = a
                .iter()
                .chain(std::iter::once(&w))
                .map(|x| format_full(*x))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Parses the CSV written by [`DiscreteMeasure::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::config("csv", "empty input"))?;
        let cols = header.split(',').count();
        if cols < 2 {
            return Err(Error::config("csv", "expected columns x_1..x_d,w"));
        }
        let dim = cols - 1;
        let mut coords = Vec::new();
        let mut weights = Vec::new();
        for (row, line) in lines.enumerate() {
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::config(format!("csv row {}", row + 1), e.to_string()))?;
            if vals.len() != cols {
                return Err(Error::config(
                    format!("csv row {}", row + 1),
                    format!("expected {cols} fields"),
                ));
            }
            coords.extend_from_slice(&vals[..dim]);
            weights.push(vals[dim]);
        }
        Self::from_flat(dim, coords, weights)
    }
}

/// Formats a float with 17 significant digits.
pub fn format_full(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x > 0.0 {
        "inf".to_string()
    } else if x < 0.0 {
        "-inf".to_string()
    } else {
        "nan".to_string()
    }
}

/// An ordered `n`-tuple of points in `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConfigRepr", into = "ConfigRepr")]
pub struct ParticleConfig {
    dim: usize,
    coords: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ConfigRepr {
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl TryFrom<ConfigRepr> for ParticleConfig {
    type Error = Error;
    fn try_from(r: ConfigRepr) -> Result<Self> {
        ParticleConfig::new(r.dim, r.points)
    }
}

impl From<ParticleConfig> for ConfigRepr {
    fn from(c: ParticleConfig) -> Self {
        ConfigRepr {
            dim: c.dim,
            points: c.points().map(<[f64]>::to_vec).collect(),
        }
    }
}

impl ParticleConfig {
    pub fn new(dim: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(dim, coords)
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", "dimension must be at least 1"));
        }
        if coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::param(
                "points",
                "a configuration needs n >= 1 points of the declared dimension",
            ));
        }
        if let Some(x) = coords.iter().find(|x| !x.is_finite()) {
            return Err(Error::param("points", format!("non-finite coordinate {x}")));
        }
        Ok(Self { dim, coords })
    }

    /// One-dimensional configuration from scalars.
    pub fn from_scalars(xs: &[f64]) -> Result<Self> {
        Self::from_flat(1, xs.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of particles `n`.
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub(crate) fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    /// Empirical measure `(1/n) sum_i delta_{x_i}`.
    pub fn empirical_measure(&self) -> DiscreteMeasure {
        empirical_measure(self)
    }
}

/// `L_n(x) = (1/n) sum_i delta_{x_i}`; coincident points merge.
pub fn empirical_measure(config: &ParticleConfig) -> DiscreteMeasure {
    let n = config.len();
    DiscreteMeasure::build(config.dim, config.coords.clone(), vec![1.0 / n as f64; n])
        .expect("a particle configuration is a valid atom list")
}

type PsiFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A non-negative continuous weight `psi` used to strengthen the weak
/// topology; `growth` records that `inf_{|x|=c} psi(x) -> inf`.
#[derive(Clone)]
pub struct WeightFunction {
    name: String,
    f: PsiFn,
    growth: bool,
}

impl fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightFunction")
            .field("name", &self.name)
            .field("growth", &self.growth)
            .finish()
    }
}

impl WeightFunction {
    pub fn new(
        name: impl Into<String>,
        growth: bool,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
            growth,
        }
    }

    /// `psi(x) = |x|^q`, `q > 0`.
    pub fn norm_power(q: f64) -> Result<Self> {
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::param("q", "exponent must be positive"));
        }
        Ok(Self::new(format!("norm^{q}"), true, move |x| norm(x).powf(q)))
    }

    /// `psi(x) = 1 + |x|^q`, strictly positive everywhere.
    pub fn one_plus_norm_power(q: f64) -> Result<Self> {
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::param("q", "exponent must be positive"));
        }
        Ok(Self::new(format!("1+norm^{q}"), true, move |x| 1.0 + norm(x).powf(q)))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn has_growth(&self) -> bool {
        self.growth
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// `int psi dmu`.
pub fn psi_integral(mu: &DiscreteMeasure, psi: &WeightFunction) -> f64 {
    mu.integrate(|a| psi.eval(a))
}

/// `sum_{|a_i| > r} w_i psi(a_i)`, the tail of the psi-moment outside the
/// closed ball of radius `r`.
pub fn tail_psi_mass(mu: &DiscreteMeasure, psi: &WeightFunction, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::param("r", "radius must be non-negative"));
    }
    Ok(mu
        .iter()
        .filter(|(a, _)| norm(a) > r)
        .map(|(a, w)| w * psi.eval(a))
        .collect::<ExtSum>()
        .value())
}

#[inline]
pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[inline]
pub fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empirical_measure_merges_duplicates() {
        let c = ParticleConfig::from_scalars(&[0.0, 1.0, 1.0]).unwrap();
        let m = c.empirical_measure();
        assert_eq!(m.len(), 2);
        assert!((m.mass_at(&[0.0]) - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.mass_at(&[1.0]) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empirical_measure_single_and_distinct() {
        let m = ParticleConfig::from_scalars(&[5.0]).unwrap().empirical_measure();
        assert_eq!(m.len(), 1);
        assert_eq!(m.weight(0), 1.0);

        let m = ParticleConfig::from_scalars(&[0.0, 1.0, 2.0, 3.0])
            .unwrap()
            .empirical_measure();
        assert!(m.weights().iter().all(|&w| (w - 0.25).abs() < 1e-15));
    }

    #[test]
    fn negative_zero_is_the_same_atom() {
        let m = DiscreteMeasure::new(1, vec![vec![0.0], vec![-0.0]], vec![0.5, 0.5]).unwrap();
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn tiny_weights_are_dropped() {
        let m = DiscreteMeasure::new(1, vec![vec![0.0], vec![1.0]], vec![1.0, 1e-17]).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.weight(0), 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(DiscreteMeasure::new(1, vec![vec![0.0]], vec![0.5]).is_err());
        assert!(DiscreteMeasure::new(2, vec![vec![0.0]], vec![1.0]).is_err());
        assert!(DiscreteMeasure::new(1, vec![vec![f64::NAN]], vec![1.0]).is_err());
        assert!(DiscreteMeasure::new(1, vec![vec![0.0], vec![1.0]], vec![1.5, -0.5]).is_err());
        assert!(ParticleConfig::from_scalars(&[]).is_err());
    }

    #[test]
    fn psi_integrals() {
        let sq = WeightFunction::norm_power(2.0).unwrap();
        let nm = WeightFunction::norm_power(1.0).unwrap();
        assert_eq!(psi_integral(&DiscreteMeasure::dirac(&[0.0]).unwrap(), &sq), 0.0);
        let sym = DiscreteMeasure::uniform(1, vec![vec![-1.0], vec![1.0]]).unwrap();
        assert!((psi_integral(&sym, &sq) - 1.0).abs() < 1e-15);
        let three = DiscreteMeasure::uniform(1, vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        assert!((psi_integral(&three, &nm) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tail_mass() {
        let nm = WeightFunction::norm_power(1.0).unwrap();
        let m = DiscreteMeasure::uniform(1, vec![vec![0.0], vec![3.0]]).unwrap();
        assert_eq!(tail_psi_mass(&m, &nm, 10.0).unwrap(), 0.0);
        assert!((tail_psi_mass(&m, &nm, 1.0).unwrap() - 1.5).abs() < 1e-15);
        let away = DiscreteMeasure::uniform(1, vec![vec![1.0], vec![3.0]]).unwrap();
        assert_eq!(tail_psi_mass(&away, &nm, 0.0).unwrap(), psi_integral(&away, &nm));
        assert!(tail_psi_mass(&m, &nm, -1.0).is_err());
    }

    #[test]
    fn json_and_csv_roundtrip() {
        let m = DiscreteMeasure::new(2, vec![vec![0.1, -2.0], vec![3.0, 1.0 / 3.0]], vec![0.3, 0.7])
            .unwrap();
        let js = serde_json::to_string(&m).unwrap();
        assert!(js.contains("\"dim\":2"));
        let back: DiscreteMeasure = serde_json::from_str(&js).unwrap();
        assert_eq!(back, m);
        let csv = m.to_csv();
        assert!(csv.starts_with("x_1,x_2,w\n"));
        let back = DiscreteMeasure::from_csv(&csv).unwrap();
        assert_eq!(back, m);
    }
}
