//! Constructive superlinear functions dominating exponential moments.
//!
//! Given a finite law `nu` and a non-negative `psi_bar`, breakpoints
//! `M_1 <= ... <= M_K` are chosen so that the `k`-th exponential tail
//! `sum_{psi_bar >= M_k} nu e^{k psi_bar}` is below `2^{-k}`. The assembled
//! `phi_bar` equals `M_1` on `[0, M_1]`, has slope `k` on `[M_k, M_{k+1}]`
//! and slope `K` beyond `M_K`; it is continuous, convex and non-decreasing,
//! and satisfies `int e^{phi_bar(psi_bar)} dnu <= e^{M_1} + sum_k 2^{-k}`.
//!
//! With finitely many atoms the tails are eventually empty, so late
//! breakpoints sit just above the largest value of `psi_bar`. The growth
//! beyond `M_K` is linear with slope `K`; superlinearity comes from letting
//! `K` grow.

use serde::{Deserialize, Serialize};

use super::PotentialPair;
use crate::error::{Error, Result};
use crate::ext::{ExtSum, LogSumExp};
use crate::measures::{DiscreteMeasure, WeightFunction};
use crate::reference::ReferenceMeasure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperlinearFunction {
    breakpoints: Vec<f64>,
}

impl SuperlinearFunction {
    pub fn new(breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::param("breakpoints", "need at least one breakpoint"));
        }
        if breakpoints.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(Error::param("breakpoints", "breakpoints must be positive and finite"));
        }
        if breakpoints.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::param("breakpoints", "breakpoints must be non-decreasing"));
        }
        Ok(Self { breakpoints })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Largest slope `K`.
    pub fn max_slope(&self) -> usize {
        self.breakpoints.len()
    }

    /// Number of breakpoints `<= s`, i.e. the right slope at `s`.
    pub fn slope(&self, s: f64) -> usize {
        self.breakpoints.partition_point(|m| *m <= s)
    }

    pub fn eval(&self, s: f64) -> f64 {
        let m = &self.breakpoints;
        if s <= m[0] {
            return m[0];
        }
        if s == f64::INFINITY {
            return f64::INFINITY;
        }
        let k = self.slope(s);
        let mut value = m[0];
        for j in 1..k {
            value += j as f64 * (m[j] - m[j - 1]);
        }
        value + k as f64 * (s - m[k - 1])
    }
}

fn check_psi_bar(v: f64, at: &[f64]) -> Result<f64> {
    if v.is_nan() || v < 0.0 {
        return Err(Error::Undefined {
            what: format!("psi_bar = {v} (must be >= 0)"),
            points: vec![at.to_vec()],
        });
    }
    Ok(v)
}

/// Breakpoints from the law of `psi_bar` given as `(value, weight)` pairs.
fn breakpoints_from_law(mut law: Vec<(f64, f64)>, k_max: usize) -> Result<Vec<f64>> {
    if k_max < 1 {
        return Err(Error::param("K", "need K >= 1"));
    }
    law.sort_by(|a, b| a.0.total_cmp(&b.0));
    let max = law.iter().map(|p| p.0).fold(0.0, f64::max);
    if max == f64::INFINITY {
        return Err(Error::param("psi_bar", "psi_bar must be finite on the support"));
    }
    let above_max = max + max.max(1.0) * 1e-9;

    let mut distinct: Vec<(f64, Vec<f64>)> = Vec::new();
    for (v, w) in law {
        match distinct.last_mut() {
            Some((last, ws)) if *last == v => ws.push(w),
            _ => distinct.push((v, vec![w])),
        }
    }

    let mut out: Vec<f64> = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let threshold = 0.5f64.powi(k as i32);
        // suffix sums of w e^{k v}, scanned from the top value down
        let mut suffix = vec![0.0; distinct.len() + 1];
        for j in (0..distinct.len()).rev() {
            let (v, ws) = &distinct[j];
            let here: f64 = ws.iter().map(|w| w * (k as f64 * v).exp()).sum();
            suffix[j] = suffix[j + 1] + here;
        }
        let mk = distinct
            .iter()
            .enumerate()
            .find(|(j, (v, _))| *v > 0.0 && suffix[*j] < threshold)
            .map_or(above_max, |(_, (v, _))| *v);
        let prev = out.last().copied().unwrap_or(0.0);
        out.push(mk.max(prev));
    }
    Ok(out)
}

/// Builds `phi_bar` for the law of `psi_bar` under `nu`, with slopes up to
/// `k_max`.
pub fn construct_phi(
    nu: &DiscreteMeasure,
    psi_bar: impl Fn(&[f64]) -> f64,
    k_max: usize,
) -> Result<SuperlinearFunction> {
    let law = nu
        .iter()
        .map(|(a, w)| Ok((check_psi_bar(psi_bar(a), a)?, w)))
        .collect::<Result<Vec<_>>>()?;
    SuperlinearFunction::new(breakpoints_from_law(law, k_max)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiMomentReport {
    /// `int e^{phi_bar(psi_bar)} dnu`.
    pub integral: f64,
    /// `e^{M_1} + sum_{k <= K} 2^{-k}`.
    pub bound: f64,
    pub holds: bool,
}

pub fn phi_moment_check(
    phi: &SuperlinearFunction,
    nu: &DiscreteMeasure,
    psi_bar: impl Fn(&[f64]) -> f64,
) -> Result<PhiMomentReport> {
    let mut integral = ExtSum::new();
    for (a, w) in nu.iter() {
        let s = check_psi_bar(psi_bar(a), a)?;
        integral.add(w * phi.eval(s).exp());
    }
    let integral = integral.value();
    let tails: f64 = (1..=phi.max_slope()).map(|k| 0.5f64.powi(k as i32)).sum();
    let bound = phi.breakpoints()[0].exp() + tails;
    Ok(PhiMomentReport {
        integral,
        bound,
        holds: integral <= bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiEntropyReport {
    /// `int phi_bar(psi_bar) dmu`.
    pub lhs: f64,
    pub relative_entropy: f64,
    /// `log int e^{phi_bar(psi_bar)} dnu`.
    pub log_moment: f64,
    pub holds: bool,
}

/// The variational inequality
/// `int phi_bar(psi_bar) dmu <= R(mu | nu) + log int e^{phi_bar(psi_bar)} dnu`.
pub fn phi_entropy_bound(
    phi: &SuperlinearFunction,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    psi_bar: impl Fn(&[f64]) -> f64,
) -> Result<PhiEntropyReport> {
    mu.same_dim(nu)?;
    let mut lhs = ExtSum::new();
    for (a, w) in mu.iter() {
        lhs.add(w * phi.eval(check_psi_bar(psi_bar(a), a)?));
    }
    let mut log_moment = LogSumExp::new();
    for (a, w) in nu.iter() {
        log_moment.add(w.ln() + phi.eval(check_psi_bar(psi_bar(a), a)?));
    }
    let relative_entropy = crate::functionals::relative_entropy(mu, nu)?;
    let (lhs, log_moment) = (lhs.value(), log_moment.value());
    let rhs = relative_entropy + log_moment;
    Ok(PhiEntropyReport {
        lhs,
        relative_entropy,
        log_moment,
        holds: lhs <= rhs + 1e-12 * rhs.abs().max(1.0),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiPairReport {
    pub phi_bar: SuperlinearFunction,
    /// `log int e^{phi_bar(psi(x) + psi(y))} dnu` for the pair Gibbs law `nu`.
    pub log_moment: f64,
    /// Normalizer of `e^{-(V(x) + V(y) + W(x,y))} l(dx) l(dy)`.
    pub log_z: f64,
    /// `int phi(psi) dmu` with `phi = (phi_bar - log_moment - log_z) / 2`.
    pub lhs: f64,
    /// `(1/2) int W dzeta`.
    pub coupled_energy: f64,
    /// `R(zeta | e^{-V} l (x) e^{-V} l)`.
    pub relative_entropy: f64,
    pub holds: bool,
}

/// Sampled check, on a finite reference, of
/// `int phi(psi) dmu <= (1/2) int W dzeta + R(zeta | e^{-V} l (x) e^{-V} l)`
/// for one coupling `zeta` of `mu` with itself (the product `mu (x) mu`
/// when `zeta` is `None`).
pub fn phi_pair_inequality(
    pair: &PotentialPair,
    ell: &ReferenceMeasure,
    psi: &WeightFunction,
    k_max: usize,
    mu: &DiscreteMeasure,
    zeta: Option<&DiscreteMeasure>,
) -> Result<PhiPairReport> {
    let d = pair.dim();
    if ell.dim() != d || mu.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: if ell.dim() != d { ell.dim() } else { mu.dim() },
        });
    }
    let (atoms, lw) = ell.finite_atoms()?;
    let product;
    let zeta = match zeta {
        Some(z) => {
            check_coupling(z, mu)?;
            z
        }
        None => {
            product = mu.product(mu);
            &product
        }
    };

    let vs = atoms.iter().map(|a| pair.v(a)).collect::<Result<Vec<_>>>()?;
    let psis = atoms
        .iter()
        .map(|a| check_psi_bar(psi.eval(a), a))
        .collect::<Result<Vec<_>>>()?;
    let m = atoms.len();
    let mut log_weights = Vec::with_capacity(m * m);
    let mut values = Vec::with_capacity(m * m);
    let mut log_z = LogSumExp::new();
    for i in 0..m {
        for j in 0..m {
            let e = crate::ext::check_value(
                vs[i] + vs[j] + pair.w(&atoms[i], &atoms[j])?,
                "V(x)+V(y)+W(x,y)",
                &[&atoms[i], &atoms[j]],
            )?;
            let lwij = -e + lw[i].ln() + lw[j].ln();
            log_z.add(lwij);
            log_weights.push(lwij);
            values.push(psis[i] + psis[j]);
        }
    }
    let log_z = log_z.value();
    if !log_z.is_finite() {
        return Err(Error::AllInfinite("pair Gibbs weight vanishes everywhere".into()));
    }
    let law = values
        .iter()
        .zip(&log_weights)
        .map(|(v, lw)| (*v, (lw - log_z).exp()))
        .collect();
    let phi_bar = SuperlinearFunction::new(breakpoints_from_law(law, k_max)?)?;
    let mut log_moment = LogSumExp::new();
    for (v, lw) in values.iter().zip(&log_weights) {
        log_moment.add(lw - log_z + phi_bar.eval(*v));
    }
    let log_moment = log_moment.value();

    let mut lhs = ExtSum::new();
    for (a, w) in mu.iter() {
        let s = check_psi_bar(psi.eval(a), a)?;
        lhs.add(w * 0.5 * (phi_bar.eval(s) - log_moment - log_z));
    }

    let mut energy = ExtSum::new();
    let mut entropy = ExtSum::new();
    for (xy, w) in zeta.iter() {
        let (x, y) = xy.split_at(d);
        energy.add(crate::ext::weighted(0.5 * w, pair.w(x, y)?));
        let log_ref = ell.log_density(x) + ell.log_density(y) - pair.v(x)? - pair.v(y)?;
        entropy.add(w * (w.ln() - log_ref));
    }
    let (lhs, coupled_energy, relative_entropy) = (
        lhs.value(),
        energy.checked("coupled energy")?,
        entropy.value(),
    );
    let rhs = coupled_energy + relative_entropy;
    Ok(PhiPairReport {
        phi_bar,
        log_moment,
        log_z,
        lhs,
        coupled_energy,
        relative_entropy,
        holds: lhs <= rhs + 1e-12 * rhs.abs().max(1.0),
    })
}

fn check_coupling(zeta: &DiscreteMeasure, mu: &DiscreteMeasure) -> Result<()> {
    let d = mu.dim();
    if zeta.dim() != 2 * d {
        return Err(Error::DimensionMismatch {
            expected: 2 * d,
            got: zeta.dim(),
        });
    }
    for half in [0, 1] {
        let mut coords = Vec::with_capacity(zeta.len() * d);
        for a in zeta.atoms() {
            coords.extend_from_slice(&a[half * d..(half + 1) * d]);
        }
        let marginal = DiscreteMeasure::from_unnormalized(d, coords, zeta.weights().to_vec())?;
        let off = marginal
            .iter()
            .map(|(a, w)| (w - mu.mass_at(a)).abs())
            .chain(mu.iter().map(|(a, w)| (w - marginal.mass_at(a)).abs()))
            .fold(0.0, f64::max);
        if off > 1e-9 {
            return Err(Error::param("zeta", "marginals of zeta must both equal mu"));
        }
    }
    Ok(())
}
