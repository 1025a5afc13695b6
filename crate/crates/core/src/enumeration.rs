//! Exhaustive enumeration of configurations on a finite reference.
//!
//! Configuration `k` in `0..m^n` assigns particle `i` to atom
//! `(k / m^{n-1-i}) mod m` (lexicographic order, first particle most
//! significant). Work is cut into a fixed block partition of the index
//! range and reduced in block order.

use crate::error::{Error, Result};
use crate::ext::{check_value, LogSumExp};
use crate::measures::{DiscreteMeasure, ParticleConfig};
use crate::par::{map_blocks, Exec};
use crate::potentials::PotentialPair;
use crate::reference::ReferenceMeasure;

/// Default cap on the number of enumerated configurations.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Blocks of the configuration index range.
pub const ENUM_BLOCKS: usize = 256;

/// `m^n` as a float (may exceed `u64`).
pub fn config_count(m: usize, n: usize) -> f64 {
    (m as f64).powi(n as i32)
}

/// `m^n` if it fits the budget.
pub fn check_budget(m: usize, n: usize, budget: u64) -> Result<usize> {
    let needed = config_count(m, n);
    if needed > budget as f64 || needed > usize::MAX as f64 {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    Ok(needed as usize)
}

/// Writes the atom indices of configuration `k` into `out`.
pub fn decode(mut k: usize, m: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = k % m;
        k /= m;
    }
}

/// Potentials tabulated on the atoms of a finite reference.
#[derive(Debug, Clone)]
pub struct AtomTables {
    pub atoms: Vec<Vec<f64>>,
    pub v: Vec<f64>,
    /// Row-major `W(a_i, a_j)`.
    pub w: Vec<f64>,
    pub log_ell: Vec<f64>,
}

impl AtomTables {
    pub fn new(pair: &PotentialPair, ell: &ReferenceMeasure) -> Result<Self> {
        if pair.dim() != ell.dim() {
            return Err(Error::DimensionMismatch {
                expected: pair.dim(),
                got: ell.dim(),
            });
        }
        let (atoms, weights) = ell.finite_atoms()?;
        let m = atoms.len();
        let v = atoms.iter().map(|a| pair.v(a)).collect::<Result<Vec<_>>>()?;
        let mut w = Vec::with_capacity(m * m);
        for a in atoms {
            for b in atoms {
                w.push(pair.w(a, b)?);
            }
        }
        Ok(Self {
            atoms: atoms.to_vec(),
            v,
            w,
            log_ell: weights.iter().map(|x| x.ln()).collect(),
        })
    }

    pub fn m(&self) -> usize {
        self.atoms.len()
    }

    /// `H_n` of the configuration given by atom indices, with index-based
    /// exclusion.
    pub fn hamiltonian(&self, idx: &[usize]) -> f64 {
        let n = idx.len() as f64;
        let m = self.m();
        let mut conf = 0.0;
        for &a in idx {
            conf += self.v[a];
        }
        let mut inter = 0.0;
        for (p, &a) in idx.iter().enumerate() {
            for &b in &idx[p + 1..] {
                inter += self.w[a * m + b] + self.w[b * m + a];
            }
        }
        conf / n + inter / (2.0 * n * n)
    }

    /// `-beta H_n + sum_i log l(x_i)`.
    pub fn log_weight(&self, idx: &[usize], beta: f64) -> f64 {
        let h = self.hamiltonian(idx);
        if h == f64::INFINITY {
            return f64::NEG_INFINITY;
        }
        -beta * h + idx.iter().map(|&a| self.log_ell[a]).sum::<f64>()
    }

    pub fn config(&self, idx: &[usize]) -> Result<ParticleConfig> {
        ParticleConfig::new(
            self.atoms[0].len(),
            idx.iter().map(|&a| self.atoms[a].clone()).collect(),
        )
    }

    /// Empirical measure of the configuration.
    pub fn empirical(&self, idx: &[usize]) -> Result<DiscreteMeasure> {
        let d = self.atoms[0].len();
        let mut counts = vec![0usize; self.m()];
        for &a in idx {
            counts[a] += 1;
        }
        let mut coords = Vec::new();
        let mut weights = Vec::new();
        for (a, c) in counts.iter().enumerate() {
            if *c > 0 {
                coords.extend_from_slice(&self.atoms[a]);
                weights.push(*c as f64 / idx.len() as f64);
            }
        }
        DiscreteMeasure::from_flat(d, coords, weights)
    }
}

/// Calls `g(k, idx)` for every configuration index `k` in `range`.
pub fn visit_range(range: std::ops::Range<usize>, m: usize, n: usize, mut g: impl FnMut(usize, &[usize])) {
    let mut idx = vec![0usize; n];
    if range.is_empty() {
        return;
    }
    decode(range.start, m, &mut idx);
    for k in range {
        g(k, &idx);
        for slot in idx.iter_mut().rev() {
            *slot += 1;
            if *slot < m {
                break;
            }
            *slot = 0;
        }
    }
}

/// Maps `f` over the fixed block partition of `0..m^n`.
pub fn map_config_blocks<T, F>(exec: Exec, m: usize, n: usize, budget: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync + Send,
{
    let total = check_budget(m, n, budget)?;
    Ok(map_blocks(exec, total, ENUM_BLOCKS, f))
}

/// Unnormalized log-probabilities of all configurations, in index order.
pub fn gibbs_log_weights(exec: Exec, tables: &AtomTables, n: usize, beta: f64, budget: u64) -> Result<Vec<f64>> {
    let m = tables.m();
    let blocks = map_config_blocks(exec, m, n, budget, |range| {
        let mut out = Vec::with_capacity(range.len());
        visit_range(range, m, n, |_, idx| out.push(tables.log_weight(idx, beta)));
        out
    })?;
    Ok(blocks.concat())
}

/// `log Z_n = log sum exp(-beta H_n) prod l`, reduced in block order.
pub fn log_partition(exec: Exec, tables: &AtomTables, n: usize, beta: f64, budget: u64) -> Result<f64> {
    let m = tables.m();
    let blocks = map_config_blocks(exec, m, n, budget, |range| {
        let mut acc = LogSumExp::new();
        visit_range(range, m, n, |_, idx| acc.add(tables.log_weight(idx, beta)));
        acc
    })?;
    let mut total = LogSumExp::new();
    for b in &blocks {
        total.merge(b);
    }
    let v = total.value();
    if v == f64::NEG_INFINITY {
        return Err(Error::AllInfinite("every configuration has H_n = +inf".into()));
    }
    check_value(v, "log Z_n", &[])
}
