//! Energies and rate functionals on discrete measures and particle
//! configurations.
//!
//! Double sums run over a fixed partition of rows into blocks, each block
//! summed with compensation and the block sums merged in order, so values
//! do not depend on the executor or thread count.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::{check_value, serde_ext, weighted, ExtSum};
use crate::measures::{DiscreteMeasure, ParticleConfig};
use crate::par::{map_blocks, Exec};
use crate::potentials::{Confinement, Interaction, PotentialPair};
use crate::reference::ReferenceMeasure;

/// Row blocks used by every pair loop.
pub const PAIR_BLOCKS: usize = 64;

/// `int e^{-V} dl` further than this from 1 is reported in the breakdown of
/// [`rate_i`] as `normalization_defect`.
pub const NORMALIZATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalValue {
    #[serde(with = "serde_ext")]
    pub value: f64,
    pub finite: bool,
    #[serde(with = "serde_ext::map", default, skip_serializing_if = "BTreeMap::is_empty")]
    pub breakdown: BTreeMap<String, f64>,
}

impl FunctionalValue {
    pub fn new(value: f64) -> Self {
        Self {
            value,
            finite: value.is_finite(),
            breakdown: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &str, v: f64) -> Self {
        self.breakdown.insert(name.to_string(), v);
        self
    }
}

/// `sum_{i, j in 0..m} f(i, j)` (off-diagonal only when `skip_diag`), over
/// the fixed block partition.
fn pair_sum<F>(exec: Exec, m: usize, skip_diag: bool, f: F) -> Result<f64>
where
    F: Fn(usize, usize) -> Result<f64> + Sync + Send,
{
    let blocks = map_blocks(exec, m, PAIR_BLOCKS, |rows| -> Result<ExtSum> {
        let mut acc = ExtSum::new();
        for i in rows {
            for j in 0..m {
                if skip_diag && i == j {
                    continue;
                }
                acc.add(f(i, j)?);
                if acc.is_pos_inf() {
                    return Ok(acc);
                }
            }
        }
        Ok(acc)
    });
    let mut total = ExtSum::new();
    for b in blocks {
        total.merge(&b?);
        if total.is_pos_inf() {
            break;
        }
    }
    total.checked("pair sum")
}

/// `H_n(x) = (1/n) sum_i V(x_i) + (1/(2 n^2)) sum_{i != j} W(x_i, x_j)`.
///
/// Exclusion is by index: two particles at the same location still
/// interact through `W(x, x)`.
pub fn hamiltonian(config: &ParticleConfig, pair: &PotentialPair) -> Result<f64> {
    hamiltonian_with(Exec::default(), config, pair)
}

pub fn hamiltonian_with(exec: Exec, config: &ParticleConfig, pair: &PotentialPair) -> Result<f64> {
    check_dim(pair.dim(), config.dim())?;
    let n = config.len();
    if n == 0 {
        return Err(Error::param("config", "need at least one particle"));
    }
    let conf = sum_confinement(config.points(), |_| 1.0, pair.confinement())?;
    let inter = pair_sum(exec, n, true, |i, j| pair.w(config.point(i), config.point(j)))?;
    let nf = n as f64;
    Ok(conf / nf + inter / (2.0 * nf * nf))
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn sum_confinement<'a>(
    points: impl Iterator<Item = &'a [f64]>,
    weight: impl Fn(usize) -> f64,
    v: &Confinement,
) -> Result<f64> {
    let mut acc = ExtSum::new();
    for (i, x) in points.enumerate() {
        acc.add(weighted(weight(i), v.eval_checked(x)?));
    }
    acc.checked("confinement sum")
}

fn measure_pairs(
    exec: Exec,
    mu: &DiscreteMeasure,
    w: &Interaction,
    skip_diag: bool,
    cap: Option<f64>,
) -> Result<f64> {
    let total = pair_sum(exec, mu.len(), skip_diag, |i, j| {
        let (a, b) = (mu.atom(i), mu.atom(j));
        let mut v = w.eval_checked(a, b)?;
        if let Some(m) = cap {
            v = v.min(m);
        }
        Ok(weighted(mu.weight(i) * mu.weight(j), v))
    })?;
    Ok(0.5 * total)
}

/// `W(mu) = (1/2) sum_i sum_j w_i w_j W(a_i, a_j)`, diagonal included.
pub fn interaction_energy(mu: &DiscreteMeasure, w: &Interaction) -> Result<f64> {
    measure_pairs(Exec::default(), mu, w, false, None)
}

pub fn interaction_energy_with(exec: Exec, mu: &DiscreteMeasure, w: &Interaction) -> Result<f64> {
    measure_pairs(exec, mu, w, false, None)
}

/// The same double sum with `W(x, x)` replaced by 0: self-pairs of atoms
/// are dropped.
pub fn interaction_energy_offdiag(mu: &DiscreteMeasure, w: &Interaction) -> Result<f64> {
    measure_pairs(Exec::default(), mu, w, true, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedEnergy {
    pub full: f64,
    pub offdiag: f64,
}

/// Both interaction energies with `W` replaced by `min(W, m)`.
pub fn truncated_interaction(mu: &DiscreteMeasure, w: &Interaction, m: f64) -> Result<TruncatedEnergy> {
    if !m.is_finite() {
        return Err(Error::param("M", "truncation level must be finite"));
    }
    Ok(TruncatedEnergy {
        full: measure_pairs(Exec::default(), mu, w, false, Some(m))?,
        offdiag: measure_pairs(Exec::default(), mu, w, true, Some(m))?,
    })
}

/// Mass of `mu (x) mu` on the diagonal, `sum_i w_i^2`.
pub fn diagonal_mass(mu: &DiscreteMeasure) -> f64 {
    mu.weights().iter().map(|w| w * w).collect::<ExtSum>().value()
}

/// `V(mu) = int V dmu`.
pub fn confinement_energy(mu: &DiscreteMeasure, v: &Confinement) -> Result<f64> {
    sum_confinement(mu.atoms(), |i| mu.weight(i), v)
}

/// `R(mu | nu) = sum_a mu(a) log(mu(a) / nu(a))`, `+inf` unless
/// `supp mu` is contained in `supp nu`.
pub fn relative_entropy(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    mu.same_dim(nu)?;
    let mut acc = ExtSum::new();
    for (a, w) in mu.iter() {
        let q = nu.mass_at(a);
        if q == 0.0 {
            return Ok(f64::INFINITY);
        }
        acc.add(w * (w.ln() - q.ln()));
    }
    Ok(acc.value().max(0.0))
}

/// `I(mu) = R(mu | e^{-V} l) + W(mu)` on a finite reference. `e^{-V} l` is
/// normalized before use.
pub fn rate_i(mu: &DiscreteMeasure, pair: &PotentialPair, ell: &ReferenceMeasure) -> Result<FunctionalValue> {
    check_dim(pair.dim(), mu.dim())?;
    let v = pair.confinement().clone();
    let (rho, log_z) = ell.tilted(move |x| v.eval(x))?;
    let entropy = relative_entropy(mu, &rho)?;
    let inter = if entropy.is_finite() {
        interaction_energy(mu, pair.interaction())?
    } else {
        f64::NAN
    };
    let mut out = if entropy.is_finite() {
        FunctionalValue::new(entropy + inter).with("interaction", inter)
    } else {
        FunctionalValue::new(f64::INFINITY)
    };
    out = out.with("entropy", entropy);
    let defect = log_z.exp() - 1.0;
    if defect.abs() > NORMALIZATION_TOL {
        out = out.with("normalization_defect", defect);
    }
    Ok(out)
}

/// `J(mu) = (1/2) sum_i sum_j w_i w_j (V(a_i) + V(a_j) + W(a_i, a_j))`,
/// cross-checked against `V(mu) + W(mu)`.
pub fn rate_j(mu: &DiscreteMeasure, pair: &PotentialPair) -> Result<FunctionalValue> {
    check_dim(pair.dim(), mu.dim())?;
    let vs: Vec<f64> = mu.atoms().map(|a| pair.v(a)).collect::<Result<_>>()?;
    let quad = 0.5
        * pair_sum(Exec::default(), mu.len(), false, |i, j| {
            let e = vs[i] + vs[j] + pair.w(mu.atom(i), mu.atom(j))?;
            Ok(weighted(mu.weight(i) * mu.weight(j), e))
        })?;
    let conf = confinement_energy(mu, pair.confinement())?;
    let inter = interaction_energy(mu, pair.interaction())?;
    let split = conf + inter;
    if quad.is_finite() != split.is_finite()
        || (quad.is_finite() && (quad - split).abs() > 1e-12 * quad.abs().max(1.0))
    {
        return Err(Error::Undefined {
            what: format!("J routes disagree: quadratic form {quad}, V + W {split}"),
            points: Vec::new(),
        });
    }
    Ok(FunctionalValue::new(quad)
        .with("confinement", conf)
        .with("interaction", inter))
}

/// `J_{n,!=}(mu) = (1 - n / beta_n) V(mu) + W_!=(mu)`.
pub fn rate_j_n_offdiag(
    mu: &DiscreteMeasure,
    pair: &PotentialPair,
    n: usize,
    beta_n: f64,
) -> Result<FunctionalValue> {
    check_dim(pair.dim(), mu.dim())?;
    if !(beta_n > 0.0) || n == 0 {
        return Err(Error::param("beta_n", "need beta_n > 0 and n >= 1"));
    }
    let coef = 1.0 - n as f64 / beta_n;
    let conf = confinement_energy(mu, pair.confinement())?;
    let inter = interaction_energy_offdiag(mu, pair.interaction())?;
    let scaled = weighted(coef, conf);
    let value = check_value(scaled + inter, "J_n offdiag", &[])?;
    Ok(FunctionalValue::new(value)
        .with("confinement", scaled)
        .with("interaction_offdiag", inter))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledEnergy {
    /// `(1/2) int W dzeta`.
    #[serde(with = "serde_ext")]
    pub frak_w: f64,
    /// `(1/2) int (V(x) + V(y) + W(x, y)) dzeta`.
    #[serde(with = "serde_ext")]
    pub frak_j: f64,
}

/// Energies of a measure `zeta` on `R^d x R^d`, atoms stored as `(x, y)`.
pub fn coupled_energy(zeta: &DiscreteMeasure, pair: &PotentialPair) -> Result<CoupledEnergy> {
    let d = pair.dim();
    check_dim(2 * d, zeta.dim())?;
    let mut w_acc = ExtSum::new();
    let mut j_acc = ExtSum::new();
    for (xy, w) in zeta.iter() {
        let (x, y) = xy.split_at(d);
        let wv = pair.w(x, y)?;
        w_acc.add(weighted(0.5 * w, wv));
        j_acc.add(weighted(0.5 * w, pair.v(x)? + pair.v(y)? + wv));
    }
    Ok(CoupledEnergy {
        frak_w: w_acc.checked("coupled W")?,
        frak_j: j_acc.checked("coupled J")?,
    })
}

/// `values[at] - min(values)`.
pub fn star_gap(values: &[FunctionalValue], at: usize) -> Result<f64> {
    let target = values
        .get(at)
        .ok_or_else(|| Error::param("at", format!("index {at} out of range")))?;
    let min = values.iter().map(|v| v.value).fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Err(Error::AllInfinite("every functional value is +inf".into()));
    }
    Ok(target.value - min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{coulomb_kernel, power_confinement};

    fn quad_pair() -> PotentialPair {
        PotentialPair::new(1, power_confinement(2.0).unwrap(), Interaction::squared_distance()).unwrap()
    }

    fn unif01() -> DiscreteMeasure {
        DiscreteMeasure::uniform(1, vec![vec![0.0], vec![1.0]]).unwrap()
    }

    #[test]
    fn hamiltonian_examples() {
        let c = ParticleConfig::from_scalars(&[0.0, 1.0]).unwrap();
        // oracle: (0 + 1)/2 + (1 + 1)/(2 * 4)
        assert!((hamiltonian(&c, &quad_pair()).unwrap() - 0.75).abs() < 1e-15);
        let one = ParticleConfig::from_scalars(&[3.0]).unwrap();
        assert_eq!(hamiltonian(&one, &quad_pair()).unwrap(), 9.0);
        let coul = PotentialPair::new(2, Confinement::zero(), coulomb_kernel(2).unwrap()).unwrap();
        let same = ParticleConfig::new(2, vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert_eq!(hamiltonian(&same, &coul).unwrap(), f64::INFINITY);
    }

    #[test]
    fn hamiltonian_is_executor_independent() {
        let xs: Vec<f64> = (0..300).map(|i| ((i * 37) % 101) as f64 / 7.0 - 5.0).collect();
        let c = ParticleConfig::from_scalars(&xs).unwrap();
        let p = quad_pair();
        let a = hamiltonian_with(Exec::Sequential, &c, &p).unwrap();
        let b = hamiltonian_with(Exec::Parallel, &c, &p).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn interaction_examples() {
        let sq = Interaction::squared_distance();
        assert!((interaction_energy(&unif01(), &sq).unwrap() - 0.25).abs() < 1e-15);
        assert!((interaction_energy_offdiag(&unif01(), &sq).unwrap() - 0.25).abs() < 1e-15);
        let d = DiscreteMeasure::dirac(&[0.3]).unwrap();
        let g = Interaction::gaussian(1.0);
        assert!((interaction_energy(&d, &g).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(interaction_energy_offdiag(&d, &g).unwrap(), 0.0);
        assert_eq!(interaction_energy(&unif01(), &Interaction::zero()).unwrap(), 0.0);
        let coul = coulomb_kernel(2).unwrap();
        let two = DiscreteMeasure::uniform(2, vec![vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(interaction_energy(&two, &coul).unwrap(), f64::INFINITY);
        assert!(interaction_energy_offdiag(&two, &coul).unwrap().is_finite());
    }

    #[test]
    fn truncation_of_empirical_measures() {
        let c = ParticleConfig::from_scalars(&[0.0, 0.4, 1.1, 2.0, 3.5]).unwrap();
        let mu = c.empirical_measure();
        let w = Interaction::gaussian(0.7);
        let m = 0.6;
        let t = truncated_interaction(&mu, &w, m).unwrap();
        assert!((t.full - t.offdiag - m / (2.0 * 5.0)).abs() < 1e-14);
        let big = truncated_interaction(&mu, &w, 10.0).unwrap();
        assert!((big.full - interaction_energy(&mu, &w).unwrap()).abs() < 1e-15);
        let zero = truncated_interaction(&mu, &Interaction::squared_distance(), 0.0).unwrap();
        assert_eq!((zero.full, zero.offdiag), (0.0, 0.0));
    }

    #[test]
    fn relative_entropy_examples() {
        let nu = unif01();
        assert_eq!(relative_entropy(&nu, &nu).unwrap(), 0.0);
        let d = DiscreteMeasure::dirac(&[0.0]).unwrap();
        assert!((relative_entropy(&d, &nu).unwrap() - 2f64.ln()).abs() < 1e-15);
        let out = DiscreteMeasure::dirac(&[5.0]).unwrap();
        assert_eq!(relative_entropy(&out, &nu).unwrap(), f64::INFINITY);
    }

    #[test]
    fn rate_i_examples() {
        let ell = ReferenceMeasure::counting_1d(&[0.0, 1.0]).unwrap();
        let pair = PotentialPair::new(1, Confinement::constant(2f64.ln()), Interaction::squared_distance())
            .unwrap();
        let r = rate_i(&unif01(), &pair, &ell).unwrap();
        assert!((r.value - 0.25).abs() < 1e-15);
        assert!(r.breakdown["entropy"].abs() < 1e-15);
        assert!(!r.breakdown.contains_key("normalization_defect"));
        let sanov = pair.with_interaction(Interaction::zero());
        assert!(rate_i(&unif01(), &sanov, &ell).unwrap().value.abs() < 1e-15);
        let off = DiscreteMeasure::dirac(&[0.5]).unwrap();
        let r = rate_i(&off, &pair, &ell).unwrap();
        assert!(!r.finite && r.value == f64::INFINITY);
    }

    #[test]
    fn rate_j_examples() {
        let r = rate_j(&unif01(), &quad_pair()).unwrap();
        assert!((r.value - 0.75).abs() < 1e-15);
        let d = DiscreteMeasure::dirac(&[2.0]).unwrap();
        let p = quad_pair().with_interaction(Interaction::gaussian(1.0));
        assert!((rate_j(&d, &p).unwrap().value - 4.5).abs() < 1e-15);
        let z = PotentialPair::new(1, Confinement::zero(), Interaction::zero()).unwrap();
        assert_eq!(rate_j(&unif01(), &z).unwrap().value, 0.0);
    }

    #[test]
    fn j_n_offdiag_coefficients() {
        let mu = unif01();
        let p = quad_pair();
        let at_n = rate_j_n_offdiag(&mu, &p, 10, 10.0).unwrap();
        assert_eq!(at_n.value, interaction_energy_offdiag(&mu, p.interaction()).unwrap());
        let big = rate_j_n_offdiag(&mu, &p, 10, 1e300).unwrap();
        assert!((big.value - 0.75).abs() < 1e-15);
        assert!(rate_j_n_offdiag(&mu, &p, 10, 0.0).is_err());
    }

    #[test]
    fn decomposition_identity() {
        let xs = [0.3, -1.2, 0.9, 2.5, -0.1, 1.7];
        let c = ParticleConfig::from_scalars(&xs).unwrap();
        let p = quad_pair().with_interaction(Interaction::gaussian(0.8));
        let n = xs.len();
        for beta in [n as f64, (n * n) as f64, n as f64 * (n as f64).ln()] {
            let lhs = rate_j_n_offdiag(&c.empirical_measure(), &p, n, beta).unwrap().value;
            let v_sum: f64 = xs.iter().map(|x| x * x).sum();
            let rhs = hamiltonian(&c, &p).unwrap() - v_sum / beta;
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn coupled_energy_of_products() {
        let mu = DiscreteMeasure::new(1, vec![vec![0.0], vec![1.0], vec![3.0]], vec![0.2, 0.5, 0.3]).unwrap();
        let p = quad_pair();
        let ce = coupled_energy(&mu.product(&mu), &p).unwrap();
        assert!((ce.frak_w - interaction_energy(&mu, p.interaction()).unwrap()).abs() < 1e-14);
        assert!((ce.frak_j - rate_j(&mu, &p).unwrap().value).abs() < 1e-14);
        let z = coupled_energy(&mu.product(&mu), &p.with_interaction(Interaction::zero())).unwrap();
        assert_eq!(z.frak_w, 0.0);
    }

    #[test]
    fn star_gap_examples() {
        let vals = vec![FunctionalValue::new(1.0), FunctionalValue::new(3.0)];
        assert_eq!(star_gap(&vals, 1).unwrap(), 2.0);
        assert_eq!(star_gap(&vals, 0).unwrap(), 0.0);
        assert_eq!(star_gap(&vals[..1], 0).unwrap(), 0.0);
        let inf = vec![FunctionalValue::new(f64::INFINITY)];
        assert!(matches!(star_gap(&inf, 0), Err(Error::AllInfinite(_))));
    }

    #[test]
    fn json_keeps_infinity() {
        let v = FunctionalValue::new(f64::INFINITY).with("entropy", f64::INFINITY);
        let s = serde_json::to_string(&v).unwrap();
        assert!(s.contains("\"inf\""));
        let back: FunctionalValue = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}
