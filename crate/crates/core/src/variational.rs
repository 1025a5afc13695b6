//! Minimization of the rate functionals over probability vectors on a fixed
//! grid of nodes.
//!
//! Grid infima are upper bounds for the infima over all probability
//! measures and approach them as the grid is refined.
//!
//! * `I(mu) = R(mu | nu) + (1/2) w^T K w` with `nu` the normalized
//!   `e^{-V} l` restricted to the grid: entropic mirror descent.
//! * `J(mu) = v^T w + (1/2) w^T K w`: Frank–Wolfe with away steps.
//!
//! Both accept a linear tilt `g^T w` and a moment tilt `c tanh(h^T w)`. `K` is the symmetrized kernel matrix.
//! When `W` is `+inf` on the diagonal (log and Coulomb kernels) any measure
//! with an atom has infinite energy, so the solvers replace `K_ii` by the
//! kernel at distance `h/2` from the node (`h` the grid step); the
//! replacement is recorded in the result as [`SelfEnergySurrogate`].
//!
//! Ties are broken towards the lowest node index.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::{serde_ext, ExtSum, LogSumExp};
use crate::measures::{dist, DiscreteMeasure};
use crate::par::{map_items, Exec};
use crate::potentials::PotentialPair;
use crate::reference::ReferenceMeasure;

/// Largest grid accepted.
pub const DEFAULT_NODE_CAP: usize = 4096;

/// Largest grid for which the kernel is checked for positive
/// semidefiniteness.
pub const PSD_CHECK_MAX_NODES: usize = 1500;

/// Default cap on lattice points visited by [`simplex_scan_oracle`].
pub const DEFAULT_SCAN_BUDGET: u64 = 10_000_000;

pub const RESULT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridSpec {
    /// `lower + k step` along each axis, up to `upper`.
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
        step: f64,
    },
    Nodes { dim: usize, nodes: Vec<Vec<f64>> },
}

impl GridSpec {
    pub fn uniform_1d(lower: f64, upper: f64, step: f64) -> Self {
        GridSpec::Box {
            lower: vec![lower],
            upper: vec![upper],
            step,
        }
    }

    /// The atoms of a finite reference.
    pub fn from_reference(ell: &ReferenceMeasure) -> Result<Self> {
        let (atoms, _) = ell.finite_atoms()?;
        Ok(GridSpec::Nodes {
            dim: ell.dim(),
            nodes: atoms.to_vec(),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            GridSpec::Box { lower, .. } => lower.len(),
            GridSpec::Nodes { dim, .. } => *dim,
        }
    }

    pub fn nodes(&self) -> Result<Vec<Vec<f64>>> {
        self.nodes_capped(DEFAULT_NODE_CAP)
    }

    pub fn nodes_capped(&self, cap: usize) -> Result<Vec<Vec<f64>>> {
        let nodes = match self {
            GridSpec::Box { lower, upper, step } => {
                if lower.is_empty() || lower.len() != upper.len() {
                    return Err(Error::param("grid", "bounds must have the same positive length"));
                }
                if !(*step > 0.0 && step.is_finite()) {
                    return Err(Error::param("grid.step", "step must be positive"));
                }
                let mut counts = Vec::with_capacity(lower.len());
                let mut total = 1.0f64;
                for (l, u) in lower.iter().zip(upper) {
                    if !(l.is_finite() && u.is_finite() && l <= u) {
                        return Err(Error::param("grid", "bounds must be finite with lower <= upper"));
                    }
                    let k = ((u - l) / step + 1e-9).floor() as usize + 1;
                    total *= k as f64;
                    counts.push(k);
                }
                if total > cap as f64 {
                    return Err(Error::param("grid", format!("{total} nodes exceed the cap {cap}")));
                }
                let mut out = Vec::with_capacity(total as usize);
                let mut idx = vec![0usize; counts.len()];
                loop {
                    out.push(idx.iter().zip(lower).map(|(k, l)| l + *k as f64 * step).collect());
                    let mut axis = counts.len();
                    loop {
                        if axis == 0 {
                            return finish(out);
                        }
                        axis -= 1;
                        idx[axis] += 1;
                        if idx[axis] < counts[axis] {
                            break;
                        }
                        idx[axis] = 0;
                    }
                }
            }
            GridSpec::Nodes { dim, nodes } => {
                if *dim == 0 || nodes.iter().any(|p| p.len() != *dim) {
                    return Err(Error::param("grid.nodes", "every node needs `dim` coordinates"));
                }
                if nodes.len() > cap {
                    return Err(Error::param("grid", format!("{} nodes exceed the cap {cap}", nodes.len())));
                }
                nodes.clone()
            }
        };
        finish(nodes)
    }

    /// Spacing used by the self-energy surrogate: the step of a box grid,
    /// the smallest node separation otherwise.
    pub fn spacing(&self) -> Result<f64> {
        match self {
            GridSpec::Box { step, .. } => Ok(*step),
            GridSpec::Nodes { .. } => {
                let nodes = self.nodes()?;
                let mut h = f64::INFINITY;
                for i in 0..nodes.len() {
                    for j in 0..i {
                        h = h.min(dist(&nodes[i], &nodes[j]));
                    }
                }
                Ok(h)
            }
        }
    }

    /// `g` evaluated at the nodes, for use as a tilt.
    pub fn evaluate(&self, g: impl Fn(&[f64]) -> f64) -> Result<Vec<f64>> {
        Ok(self.nodes()?.iter().map(|x| g(x)).collect())
    }
}

fn finish(nodes: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    if nodes.len() < 2 {
        return Err(Error::param("grid", "need at least two nodes"));
    }
    Ok(nodes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    /// Entropy plus interaction.
    I,
    /// Confinement plus interaction.
    J,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MirrorDescent,
    FrankWolfeAway,
    SimplexScan,
}

/// `scale * tanh(sum_i g_i w_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentTilt {
    pub scale: f64,
    pub g: Vec<f64>,
}

impl MomentTilt {
    fn moment(&self, w: &[f64]) -> f64 {
        w.iter().zip(&self.g).map(|(a, b)| a * b).collect::<ExtSum>().value()
    }

    pub fn eval(&self, w: &[f64]) -> f64 {
        self.scale * self.moment(w).tanh()
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let c = self.scale / self.moment(w).cosh().powi(2);
        self.g.iter().map(|g| c * g).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfEnergySurrogate {
    /// Distance from the node at which the kernel replaces `W(x, x)`.
    pub offset: f64,
    pub nodes_replaced: usize,
}

/// A rate functional restricted to the probability simplex on grid nodes.
#[derive(Debug, Clone)]
pub struct GridProblem {
    pub kind: RateKind,
    pub dim: usize,
    pub nodes: Vec<Vec<f64>>,
    /// `log nu_i` for `I` (`-inf` off the support), unused for `J`.
    pub log_nu: Vec<f64>,
    pub log_ell: Vec<f64>,
    pub v: Vec<f64>,
    pub tilt: Vec<f64>,
    /// Symmetrized kernel, row-major.
    pub k: Vec<f64>,
    pub feasible: Vec<bool>,
    pub surrogate: Option<SelfEnergySurrogate>,
    pub moment: Option<MomentTilt>,
}

impl GridProblem {
    /// `I` on the grid. A finite reference contributes its atom masses (nodes
    /// that are not atoms are infeasible); a Lebesgue reference contributes
    /// the cell volume `h^d` at nodes inside its box.
    pub fn rate_i(pair: &PotentialPair, ell: &ReferenceMeasure, grid: &GridSpec, tilt: Option<&[f64]>) -> Result<Self> {
        if pair.dim() != ell.dim() {
            return Err(Error::DimensionMismatch {
                expected: pair.dim(),
                got: ell.dim(),
            });
        }
        let mut p = Self::build(RateKind::I, pair, grid, tilt)?;
        let cell = match ell {
            ReferenceMeasure::Atoms { .. } => 0.0,
            ReferenceMeasure::Lebesgue { .. } => grid.spacing()?.ln() * p.dim as f64,
        };
        p.log_ell = p
            .nodes
            .iter()
            .map(|x| {
                let ld = ell.log_density(x);
                if ld == f64::NEG_INFINITY {
                    ld
                } else {
                    ld + cell
                }
            })
            .collect();
        let mut lse = LogSumExp::new();
        for i in 0..p.nodes.len() {
            if p.v[i] < f64::INFINITY {
                lse.add(-p.v[i] + p.log_ell[i]);
            }
        }
        let log_z = lse.value();
        if log_z == f64::NEG_INFINITY {
            return Err(Error::AllInfinite("no grid node carries reference mass with finite V".into()));
        }
        p.log_nu = (0..p.nodes.len())
            .map(|i| {
                if p.v[i] < f64::INFINITY {
                    -p.v[i] + p.log_ell[i] - log_z
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        for (f, l) in p.feasible.iter_mut().zip(&p.log_nu) {
            *f &= *l > f64::NEG_INFINITY;
        }
        p.check_feasible()?;
        Ok(p)
    }

    /// `J` on the grid.
    pub fn rate_j(pair: &PotentialPair, grid: &GridSpec, tilt: Option<&[f64]>) -> Result<Self> {
        let p = Self::build(RateKind::J, pair, grid, tilt)?;
        p.check_feasible()?;
        Ok(p)
    }

    fn build(kind: RateKind, pair: &PotentialPair, grid: &GridSpec, tilt: Option<&[f64]>) -> Result<Self> {
        if pair.dim() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: pair.dim(),
                got: grid.dim(),
            });
        }
        let nodes = grid.nodes()?;
        let m = nodes.len();
        let tilt = match tilt {
            Some(t) if t.len() != m => {
                return Err(Error::param("tilt", format!("{} values for {m} nodes", t.len())));
            }
            Some(t) => {
                if t.iter().any(|x| !x.is_finite()) {
                    return Err(Error::param("tilt", "tilt values must be finite"));
                }
                t.to_vec()
            }
            None => vec![0.0; m],
        };
        let v = nodes.iter().map(|x| pair.v(x)).collect::<Result<Vec<_>>>()?;
        let mut k = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                k[i * m + j] = pair.w(&nodes[i], &nodes[j])?;
            }
        }
        for i in 0..m {
            for j in 0..i {
                let s = 0.5 * (k[i * m + j] + k[j * m + i]);
                if !s.is_finite() {
                    return Err(Error::param(
                        "W",
                        format!("W is +inf between distinct grid nodes {i} and {j}; the grid solvers need finite off-diagonal entries"),
                    ));
                }
                k[i * m + j] = s;
                k[j * m + i] = s;
            }
        }
        let mut surrogate = None;
        let singular: Vec<usize> = (0..m).filter(|&i| !k[i * m + i].is_finite()).collect();
        if !singular.is_empty() {
            let offset = 0.5 * grid.spacing()?;
            for &i in &singular {
                let mut y = nodes[i].clone();
                y[0] += offset;
                let val = pair.w(&nodes[i], &y)?;
                if !val.is_finite() {
                    return Err(Error::param("W", "kernel is +inf at half the grid spacing"));
                }
                k[i * m + i] = val;
            }
            surrogate = Some(SelfEnergySurrogate {
                offset,
                nodes_replaced: singular.len(),
            });
        }
        let feasible = v.iter().map(|x| *x < f64::INFINITY).collect();
        Ok(Self {
            kind,
            dim: grid.dim(),
            log_nu: vec![0.0; m],
            log_ell: vec![0.0; m],
            nodes,
            v,
            tilt,
            k,
            feasible,
            surrogate,
            moment: None,
        })
    }

    pub fn with_moment(mut self, moment: Option<MomentTilt>) -> Result<Self> {
        if let Some(mt) = &moment {
            if mt.g.len() != self.len() || !mt.scale.is_finite() || mt.g.iter().any(|x| !x.is_finite()) {
                return Err(Error::param("moment", "need finite scale and one finite value per node"));
            }
        }
        self.moment = moment;
        Ok(self)
    }

    /// Gradient of the tilts (linear plus moment).
    fn tilt_gradient(&self, w: &[f64]) -> Vec<f64> {
        match &self.moment {
            Some(mt) => mt.gradient(w).iter().zip(&self.tilt).map(|(a, b)| a + b).collect(),
            None => self.tilt.clone(),
        }
    }

    fn check_feasible(&self) -> Result<()> {
        if !self.feasible.iter().any(|f| *f) {
            return Err(Error::AllInfinite("every grid node is infeasible".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn kw(&self, w: &[f64]) -> Vec<f64> {
        let m = self.len();
        (0..m)
            .map(|i| {
                let row = &self.k[i * m..(i + 1) * m];
                let mut acc = ExtSum::new();
                for (kij, wj) in row.iter().zip(w) {
                    if *wj != 0.0 {
                        acc.add(kij * wj);
                    }
                }
                acc.value()
            })
            .collect()
    }

    /// Objective without the tilt, at a weight vector on the nodes.
    pub fn rate(&self, w: &[f64]) -> f64 {
        self.rate_with(w, &self.kw(w))
    }

    fn rate_with(&self, w: &[f64], kw: &[f64]) -> f64 {
        let mut acc = ExtSum::new();
        for (i, wi) in w.iter().enumerate() {
            if *wi == 0.0 {
                continue;
            }
            if !self.feasible[i] {
                return f64::INFINITY;
            }
            let own = match self.kind {
                RateKind::I => wi.ln() - self.log_nu[i],
                RateKind::J => self.v[i],
            };
            acc.add(wi * (own + 0.5 * kw[i]));
        }
        acc.value()
    }

    /// Objective including the tilt.
    pub fn objective(&self, w: &[f64]) -> f64 {
        self.objective_with(w, &self.kw(w))
    }

    fn objective_with(&self, w: &[f64], kw: &[f64]) -> f64 {
        let r = self.rate_with(w, kw);
        if !r.is_finite() {
            return r;
        }
        let lin = w.iter().zip(&self.tilt).map(|(a, b)| a * b).collect::<ExtSum>().value();
        r + lin + self.moment.as_ref().map_or(0.0, |mt| mt.eval(w))
    }

    pub fn measure(&self, w: &[f64]) -> Result<DiscreteMeasure> {
        let mut coords = Vec::new();
        let mut weights = Vec::new();
        for (x, wi) in self.nodes.iter().zip(w) {
            if *wi > 0.0 {
                coords.extend_from_slice(x);
                weights.push(*wi);
            }
        }
        DiscreteMeasure::from_unnormalized(self.dim, coords, weights)
    }

    /// The grid-restricted reference used by `I` (node masses `l_i`).
    pub fn reference(&self) -> Result<ReferenceMeasure> {
        let (atoms, weights): (Vec<_>, Vec<_>) = self
            .nodes
            .iter()
            .zip(&self.log_ell)
            .filter(|(_, l)| **l > f64::NEG_INFINITY)
            .map(|(x, l)| (x.clone(), l.exp()))
            .unzip();
        ReferenceMeasure::atoms(self.dim, atoms, weights)
    }

    /// Whether the kernel is positive semidefinite on sum-zero directions
    /// over the feasible nodes, which makes the objective convex on the
    /// simplex. `None` when the grid is too large to check.
    pub fn kernel_is_conditionally_psd(&self) -> Option<bool> {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.feasible[i]).collect();
        let m = idx.len();
        if m > PSD_CHECK_MAX_NODES {
            return None;
        }
        if m < 2 {
            return Some(true);
        }
        let full = self.len();
        let k = DMatrix::from_fn(m, m, |a, b| self.k[idx[a] * full + idx[b]]);
        let p = DMatrix::identity(m, m) - DMatrix::from_element(m, m, 1.0 / m as f64);
        let pkp = &p * k * &p;
        let pkp = 0.5 * (&pkp + pkp.transpose());
        let eig = SymmetricEigen::new(pkp).eigenvalues;
        let scale = eig.iter().fold(1.0f64, |s, x| s.max(x.abs()));
        Some(eig.iter().all(|x| *x >= -1e-10 * scale))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOptions {
    /// Stop when the optimality gap falls below this.
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Number of starts; start 0 is deterministic, the rest are random.
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default)]
    pub seed: u64,
    /// Tilt values at the grid nodes.
    #[serde(default)]
    pub tilt: Option<Vec<f64>>,
    #[serde(default)]
    pub moment: Option<MomentTilt>,
    #[serde(skip)]
    pub exec: Exec,
}

fn default_tol() -> f64 {
    1e-8
}

fn default_max_iter() -> usize {
    50_000
}

fn default_starts() -> usize {
    5
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: default_max_iter(),
            starts: default_starts(),
            seed: 0,
            tilt: None,
            moment: None,
            exec: Exec::default(),
        }
    }
}

impl MinimizeOptions {
    pub fn with_tilt(mut self, tilt: Vec<f64>) -> Self {
        self.tilt = Some(tilt);
        self
    }

    pub fn with_moment(mut self, scale: f64, g: Vec<f64>) -> Self {
        self.moment = Some(MomentTilt { scale, g });
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::param("tol", "tolerance must be positive"));
        }
        if self.starts == 0 || self.max_iter == 0 {
            return Err(Error::param("starts", "need at least one start and one iteration"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizationResult {
    pub format_version: u32,
    pub method: Method,
    pub rate: RateKind,
    pub minimizer: DiscreteMeasure,
    /// Weights on every grid node, zeros included.
    pub grid_weights: Vec<f64>,
    /// Rate plus tilt at the minimizer.
    #[serde(with = "serde_ext")]
    pub value: f64,
    /// Rate alone at the minimizer.
    #[serde(with = "serde_ext")]
    pub rate_value: f64,
    pub iterations: usize,
    pub convergence_gap: f64,
    pub seed: u64,
    pub starts: usize,
    pub best_start: usize,
    /// `true` unless the objective is certified convex on the grid.
    pub local: bool,
    /// The objective never increased between iterations.
    pub monotone: bool,
    pub surrogate: Option<SelfEnergySurrogate>,
}

struct Run {
    w: Vec<f64>,
    value: f64,
    iterations: usize,
    gap: f64,
    monotone: bool,
}

fn random_start(p: &GridProblem, seed: u64, start: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(start as u64);
    let mut w: Vec<f64> = p
        .feasible
        .iter()
        .map(|f| {
            let u: f64 = rng.random();
            if *f {
                -(1.0 - u).ln() + 1e-12
            } else {
                0.0
            }
        })
        .collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

fn softmax(logits: &[f64]) -> (Vec<f64>, f64) {
    let mut lse = LogSumExp::new();
    for l in logits {
        lse.add(*l);
    }
    let z = lse.value();
    (logits.iter().map(|l| l - z).collect(), z)
}

fn mirror_descent(p: &GridProblem, start: usize, opts: &MinimizeOptions) -> Run {
    let m = p.len();
    let mut logw: Vec<f64> = if start == 0 {
        p.log_nu.clone()
    } else {
        random_start(p, opts.seed, start)
            .iter()
            .map(|w| if *w > 0.0 { w.ln() } else { f64::NEG_INFINITY })
            .collect()
    };
    let mut w: Vec<f64> = logw.iter().map(|l| l.exp()).collect();
    let mut value = p.objective(&w);
    let mut gap = f64::INFINITY;
    let mut monotone = true;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        let kw = p.kw(&w);
        let tg = p.tilt_gradient(&w);
        let field: Vec<f64> = (0..m)
            .map(|i| {
                if p.feasible[i] {
                    p.log_nu[i] - kw[i] - tg[i]
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let (log_g, _) = softmax(&field);
        // R(w | G(w)): an upper bound on the suboptimality for convex
        // instances, zero exactly at fixed points otherwise
        gap = (0..m)
            .filter(|&i| w[i] > 0.0)
            .map(|i| w[i] * (logw[i] - log_g[i]))
            .collect::<ExtSum>()
            .value()
            .max(0.0);
        if gap < opts.tol {
            break;
        }
        let mut eta = 1.0;
        let mut moved = false;
        while eta > 1e-12 {
            let mixed: Vec<f64> = (0..m)
                .map(|i| {
                    if log_g[i] == f64::NEG_INFINITY {
                        f64::NEG_INFINITY
                    } else {
                        (1.0 - eta) * logw[i] + eta * log_g[i]
                    }
                })
                .collect();
            let (cand, _) = softmax(&mixed);
            let cw: Vec<f64> = cand.iter().map(|l| l.exp()).collect();
            let cv = p.objective(&cw);
            if cv <= value {
                logw = cand;
                w = cw;
                value = cv;
                moved = true;
                break;
            }
            eta *= 0.5;
        }
        iterations += 1;
        if !moved {
            break;
        }
    }
    let check = p.objective(&w);
    monotone &= check <= value || (check - value).abs() <= 1e-12 * value.abs().max(1.0);
    Run {
        w,
        value: check,
        iterations,
        gap,
        monotone,
    }
}

fn argmin_first(values: impl Iterator<Item = (usize, f64)>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values {
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    best.map(|b| b.0)
}

fn frank_wolfe(p: &GridProblem, start: usize, opts: &MinimizeOptions) -> Run {
    let m = p.len();
    let lin = |i: usize| p.v[i] + p.tilt[i] + 0.5 * p.k[i * m + i];
    let mut w = if start == 0 {
        let s = argmin_first((0..m).filter(|&i| p.feasible[i]).map(|i| (i, lin(i)))).expect("feasible node");
        let mut w = vec![0.0; m];
        w[s] = 1.0;
        w
    } else {
        random_start(p, opts.seed, start)
    };
    let mut kw = p.kw(&w);
    let mut value = p.objective(&w);
    let mut gap = f64::INFINITY;
    let mut monotone = true;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        if iterations % 512 == 511 {
            kw = p.kw(&w);
        }
        let tg = p.tilt_gradient(&w);
        let grad: Vec<f64> = (0..m).map(|i| p.v[i] + tg[i] + kw[i]).collect();
        let avg: f64 = (0..m).filter(|&i| w[i] > 0.0).map(|i| w[i] * grad[i]).sum();
        let s = argmin_first((0..m).filter(|&i| p.feasible[i]).map(|i| (i, grad[i]))).expect("feasible node");
        let a = argmin_first((0..m).filter(|&i| w[i] > 0.0).map(|i| (i, -grad[i]))).expect("support");
        gap = (avg - grad[s]).max(0.0);
        if gap < opts.tol {
            break;
        }
        let away_gain = grad[a] - avg;
        let toward = gap >= away_gain || w[a] >= 1.0;
        let (slope, gmax, kd): (f64, f64, Vec<f64>) = if toward {
            let kd = (0..m).map(|i| p.k[i * m + s] - kw[i]).collect();
            (-gap, 1.0, kd)
        } else {
            let kd = (0..m).map(|i| kw[i] - p.k[i * m + a]).collect();
            (-away_gain, w[a] / (1.0 - w[a]), kd)
        };
        let d = |i: usize, w: &[f64]| -> f64 {
            if toward {
                f64::from(u8::from(i == s)) - w[i]
            } else {
                w[i] - f64::from(u8::from(i == a))
            }
        };
        let dir: Vec<f64> = (0..m).map(|i| d(i, &w)).collect();
        let curv: f64 = (0..m).map(|i| dir[i] * kd[i]).sum();
        let mut gamma = if curv > 0.0 { (-slope / curv).min(gmax) } else { gmax };
        // exact for the quadratic part; the moment tilt needs backtracking
        let (nw, nkw, nv) = loop {
            let mut nw: Vec<f64> = (0..m).map(|i| (w[i] + gamma * dir[i]).max(0.0)).collect();
            let mut nkw: Vec<f64> = (0..m).map(|i| kw[i] + gamma * kd[i]).collect();
            if !toward && gamma == gmax {
                nw[a] = 0.0;
            }
            let sum: f64 = nw.iter().sum();
            nw.iter_mut().for_each(|x| *x /= sum);
            nkw.iter_mut().for_each(|x| *x /= sum);
            let nv = p.objective_with(&nw, &nkw);
            if p.moment.is_none() || nv <= value || gamma < 1e-14 {
                break (nw, nkw, nv);
            }
            gamma *= 0.5;
        };
        if nv > value + 1e-12 * value.abs().max(1.0) {
            if p.moment.is_some() {
                break;
            }
            monotone = false;
        }
        w = nw;
        kw = nkw;
        value = nv;
        iterations += 1;
    }
    Run {
        value: p.objective(&w),
        w,
        iterations,
        gap,
        monotone,
    }
}

fn solve(p: &GridProblem, method: Method, opts: &MinimizeOptions) -> Result<MinimizationResult> {
    opts.validate()?;
    let runs = map_items(opts.exec, (0..opts.starts).collect(), |s| match method {
        Method::MirrorDescent => mirror_descent(p, s, opts),
        _ => frank_wolfe(p, s, opts),
    });
    let best = argmin_first(runs.iter().enumerate().map(|(i, r)| (i, r.value)))
        .ok_or_else(|| Error::AllInfinite("no start reached a finite value".into()))?;
    let run = &runs[best];
    if !run.value.is_finite() {
        return Err(Error::AllInfinite("every start has infinite objective".into()));
    }
    Ok(MinimizationResult {
        format_version: RESULT_FORMAT_VERSION,
        method,
        rate: p.kind,
        minimizer: p.measure(&run.w)?,
        grid_weights: run.w.clone(),
        value: run.value,
        rate_value: p.rate(&run.w),
        iterations: run.iterations,
        convergence_gap: run.gap,
        seed: opts.seed,
        starts: opts.starts,
        best_start: best,
        local: p.kernel_is_conditionally_psd() != Some(true),
        monotone: runs.iter().all(|r| r.monotone),
        surrogate: p.surrogate.clone(),
    })
}

/// Minimizes `I` (plus the optional tilt) over probability vectors on the
/// grid.
pub fn minimize_i(
    pair: &PotentialPair,
    ell: &ReferenceMeasure,
    grid: &GridSpec,
    opts: &MinimizeOptions,
) -> Result<MinimizationResult> {
    let p = GridProblem::rate_i(pair, ell, grid, opts.tilt.as_deref())?.with_moment(opts.moment.clone())?;
    solve(&p, Method::MirrorDescent, opts)
}

/// Minimizes `J` (plus the optional tilt) over probability vectors on the
/// grid.
pub fn minimize_j(pair: &PotentialPair, grid: &GridSpec, opts: &MinimizeOptions) -> Result<MinimizationResult> {
    let p = GridProblem::rate_j(pair, grid, opts.tilt.as_deref())?.with_moment(opts.moment.clone())?;
    solve(&p, Method::FrankWolfeAway, opts)
}

/// Minimizes `f` over the lattice `{w : w_i = c_i step, sum c_i = 1/step}`
/// by exhaustive scan in lexicographic order of `(c_1, .., c_m)`; the first
/// minimum found is kept.
pub fn simplex_scan(m: usize, step: f64, budget: u64, f: impl Fn(&[f64]) -> f64) -> Result<(Vec<f64>, f64)> {
    if !(1..=4).contains(&m) {
        return Err(Error::param("nodes", format!("simplex scan supports 1 to 4 nodes, got {m}")));
    }
    if !(1e-3..=1.0).contains(&step) {
        return Err(Error::param("step", "weight step must lie in [1e-3, 1]"));
    }
    let k = (1.0 / step).round() as usize;
    if ((k as f64) * step - 1.0).abs() > 1e-9 {
        return Err(Error::param("step", "1/step must be an integer"));
    }
    let count = (1..m).fold(1.0f64, |acc, i| acc * (k + i) as f64 / i as f64);
    if count > budget as f64 {
        return Err(Error::BudgetExceeded { needed: count, budget });
    }
    let mut c = vec![0usize; m];
    let mut w = vec![0.0; m];
    let mut best: Option<(Vec<f64>, f64)> = None;
    scan_rec(&mut c, 0, k, &mut |c: &[usize]| {
        for (wi, ci) in w.iter_mut().zip(c) {
            *wi = *ci as f64 / k as f64;
        }
        let v = f(&w);
        if best.as_ref().is_none_or(|(_, b)| v < *b) {
            best = Some((w.clone(), v));
        }
    });
    match best {
        Some((w, v)) if v.is_finite() => Ok((w, v)),
        _ => Err(Error::AllInfinite("every lattice point has infinite objective".into())),
    }
}

fn scan_rec(c: &mut [usize], pos: usize, left: usize, visit: &mut impl FnMut(&[usize])) {
    if pos + 1 == c.len() {
        c[pos] = left;
        visit(c);
        return;
    }
    for x in 0..=left {
        c[pos] = x;
        scan_rec(c, pos + 1, left - x, visit);
    }
}

/// Brute-force minimum of a grid problem over the weight lattice.
pub fn simplex_scan_oracle(p: &GridProblem, step: f64, budget: Option<u64>) -> Result<MinimizationResult> {
    let (w, value) = simplex_scan(p.len(), step, budget.unwrap_or(DEFAULT_SCAN_BUDGET), |w| p.objective(w))?;
    Ok(MinimizationResult {
        format_version: RESULT_FORMAT_VERSION,
        method: Method::SimplexScan,
        rate: p.kind,
        minimizer: p.measure(&w)?,
        rate_value: p.rate(&w),
        grid_weights: w,
        value,
        iterations: 0,
        convergence_gap: step,
        seed: 0,
        starts: 1,
        best_start: 0,
        local: false,
        monotone: true,
        surrogate: p.surrogate.clone(),
    })
}
