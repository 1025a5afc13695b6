//! Desk-scale experiments: exact Laplace functionals by enumeration,
//! comparison with minimized rate functionals, the iid bias identity,
//! concentration of sampled empirical measures and psi-tail probes.
//!
//! A finite reference is atomic, so coincident particles have positive
//! probability. The diagonal terms this creates (`W(x, x)` under index
//! exclusion, the location-based `W_!=`) are exactly the ones exercised
//! here; nothing below relies on the reference being non-atomic.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::enumeration::{check_budget, map_config_blocks, visit_range, AtomTables, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::ext::{serde_ext, ExtSum, LogSumExp};
use crate::functionals::{interaction_energy, interaction_energy_offdiag};
use crate::measures::{
    d_bl, d_psi, format_full, tail_psi_mass, wasserstein_p, DiscreteMeasure, ParticleConfig, WeightFunction,
};
use crate::par::{map_items, Exec};
use crate::potentials::{Interaction, PotentialPair};
use crate::reference::ReferenceMeasure;
use crate::sampler::{iid_sample, mh_sample_chains, InitSpec, SamplerConfig};
use crate::schedule::BetaSchedule;
use crate::variational::{minimize_i, minimize_j, GridSpec, MinimizeOptions, RateKind};

/// A bounded continuous function of a measure on the reference atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunctional {
    Zero,
    /// `int g dmu`, `g` given at the reference atoms.
    Linear { g: Vec<f64> },
    /// `scale * tanh(int g dmu)`.
    TanhMoment { scale: f64, g: Vec<f64> },
    /// `scale * min(1, d_bl(mu, target) / radius)`.
    BlBall {
        target: DiscreteMeasure,
        radius: f64,
        scale: f64,
    },
}

impl TestFunctional {
    /// `sup |f|` over probability measures on the atoms.
    pub fn sup_abs(&self) -> f64 {
        match self {
            TestFunctional::Zero => 0.0,
            TestFunctional::Linear { g } => g.iter().fold(0.0, |s, x| s.max(x.abs())),
            TestFunctional::TanhMoment { scale, .. } | TestFunctional::BlBall { scale, .. } => scale.abs(),
        }
    }

    fn validate(&self, m: usize) -> Result<()> {
        let ok = match self {
            TestFunctional::Zero => true,
            TestFunctional::Linear { g } => g.len() == m && g.iter().all(|x| x.is_finite()),
            TestFunctional::TanhMoment { scale, g } => {
                scale.is_finite() && g.len() == m && g.iter().all(|x| x.is_finite())
            }
            TestFunctional::BlBall { radius, scale, .. } => *radius > 0.0 && scale.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(
                "functional",
                format!("need finite parameters and one value per reference atom ({m})"),
            ))
        }
    }

    /// Value at the measure with weights `w` on `atoms`.
    pub fn eval(&self, atoms: &[Vec<f64>], w: &[f64]) -> Result<f64> {
        self.validate(atoms.len())?;
        let moment = |g: &[f64]| w.iter().zip(g).map(|(a, b)| a * b).collect::<ExtSum>().value();
        Ok(match self {
            TestFunctional::Zero => 0.0,
            TestFunctional::Linear { g } => moment(g),
            TestFunctional::TanhMoment { scale, g } => scale * moment(g).tanh(),
            TestFunctional::BlBall { target, radius, scale } => {
                let dim = target.dim();
                let mut coords = Vec::new();
                let mut ws = Vec::new();
                for (a, wi) in atoms.iter().zip(w) {
                    if *wi > 0.0 {
                        coords.extend_from_slice(a);
                        ws.push(*wi);
                    }
                }
                let mu = DiscreteMeasure::from_unnormalized(dim, coords, ws)?;
                scale * (d_bl(&mu, target)? / radius).min(1.0)
            }
        })
    }
}

fn compositions(m: usize, n: usize) -> Vec<Vec<u16>> {
    fn rec(c: &mut Vec<u16>, left: usize, m: usize, out: &mut Vec<Vec<u16>>) {
        if c.len() + 1 == m {
            c.push(left as u16);
            out.push(c.clone());
            c.pop();
            return;
        }
        for x in 0..=left {
            c.push(x as u16);
            rec(c, left - x, m, out);
            c.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(m), n, m, &mut out);
    out
}

fn counts_of(idx: &[usize], m: usize, out: &mut Vec<u16>) {
    out.clear();
    out.resize(m, 0);
    for &a in idx {
        out[a] += 1;
    }
}

/// `-(1/beta_n) log E[e^{-beta_n f(L_n)}]` under the Gibbs law, by
/// enumeration of all `m^n` configurations.
pub fn laplace_exact(
    exec: Exec,
    pair: &PotentialPair,
    ell: &ReferenceMeasure,
    f: &TestFunctional,
    n: usize,
    beta_n: f64,
    budget: u64,
) -> Result<f64> {
    if n == 0 || !(beta_n > 0.0 && beta_n.is_finite()) {
        return Err(Error::param("beta_n", "need n >= 1 and finite beta_n > 0"));
    }
    let tables = AtomTables::new(pair, ell)?;
    let m = tables.m();
    check_budget(m, n, budget)?;
    f.validate(m)?;
    // f depends on a configuration only through its atom counts
    let comps = compositions(m, n);
    let values = map_items(exec, comps.clone(), |c| {
        let w: Vec<f64> = c.iter().map(|k| f64::from(*k) / n as f64).collect();
        f.eval(&tables.atoms, &w)
    });
    let mut table: HashMap<Vec<u16>, f64> = HashMap::with_capacity(comps.len());
    for (c, v) in comps.into_iter().zip(values) {
        table.insert(c, v?);
    }
    let blocks = map_config_blocks(exec, m, n, budget, |range| {
        let mut num = LogSumExp::new();
        let mut den = LogSumExp::new();
        let mut counts = Vec::with_capacity(m);
        visit_range(range, m, n, |_, idx| {
            let lw = tables.log_weight(idx, beta_n);
            if lw == f64::NEG_INFINITY {
                return;
            }
            counts_of(idx, m, &mut counts);
            num.add(lw - beta_n * table[&counts]);
            den.add(lw);
        });
        (num, den)
    })?;
    let mut num = LogSumExp::new();
    let mut den = LogSumExp::new();
    for (a, b) in &blocks {
        num.merge(a);
        den.merge(b);
    }
    let (num, den) = (num.value(), den.value());
    if den == f64::NEG_INFINITY {
        return Err(Error::AllInfinite("Z_n = 0: every configuration has H_n = +inf".into()));
    }
    Ok(-(num - den) / beta_n + 0.0)
}

/// Which rate functional governs a schedule on the listed sizes.
pub fn schedule_regime(schedule: &BetaSchedule, n_list: &[usize]) -> Result<RateKind> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("n_list", "need a non-empty increasing list"));
    }
    let ratios = n_list
        .iter()
        .map(|&n| Ok(schedule.beta(n)? / n as f64))
        .collect::<Result<Vec<_>>>()?;
    if ratios.iter().all(|r| (r - 1.0).abs() < 1e-12) {
        Ok(RateKind::I)
    } else if ratios.windows(2).all(|w| w[1] > w[0]) {
        Ok(RateKind::J)
    } else {
        Err(Error::param(
            "schedule",
            format!("schedule `{schedule}` is neither beta_n = n nor has beta_n / n increasing"),
        ))
    }
}

/// `inf { f + rate } - inf rate` over measures on the reference atoms.
pub fn rate_reference(
    kind: RateKind,
    pair: &PotentialPair,
    ell: &ReferenceMeasure,
    f: &TestFunctional,
    opts: &MinimizeOptions,
) -> Result<f64> {
    let grid = GridSpec::from_reference(ell)?;
    let m = ell.finite_atoms()?.0.len();
    f.validate(m)?;
    let mut tilted = opts.clone();
    tilted.tilt = None;
    tilted.moment = None;
    let base = tilted.clone();
    match f {
        TestFunctional::Zero => return Ok(0.0),
        TestFunctional::Linear { g } => tilted.tilt = Some(g.clone()),
        TestFunctional::TanhMoment { scale, g } => tilted = tilted.with_moment(*scale, g.clone()),
        TestFunctional::BlBall { .. } => {
            return Err(Error::param(
                "functional",
                "the rate reference needs a linear or tanh-moment functional",
            ))
        }
    }
    let solve = |o: &MinimizeOptions| match kind {
        RateKind::I => minimize_i(pair, ell, &grid, o),
        RateKind::J => minimize_j(pair, &grid, o),
    };
    Ok(solve(&tilted)?.value - solve(&base)?.value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplaceRow {
    pub n: usize,
    pub beta_n: f64,
    pub exact: f64,
    pub reference: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schedule: BetaSchedule,
    pub rate: RateKind,
    pub functional: TestFunctional,
    pub functional_sup: f64,
    /// `inf { f + rate } - inf rate` for the governing rate.
    pub reference: f64,
    /// The same quantity for the other rate; it differs from `reference`
    /// whenever the entropy term matters.
    pub other_reference: f64,
    pub rows: Vec<LaplaceRow>,
    pub seed: u64,
}

impl ExperimentReport {
    /// `n,beta_n,exact,reference,gap` at full precision.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "n,beta_n,exact,reference,gap")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.n,
                format_full(r.beta_n),
                format_full(r.exact),
                format_full(r.reference),
                format_full(r.gap)
            )?;
        }
        Ok(())
    }
}

/// Exact Laplace values along a schedule against the rate-function
/// reference. `beta_n = n` is compared with `I`, faster schedules with `J`.
#[allow(clippy::too_many_arguments)]
pub fn laplace_vs_rate(
    exec: Exec,
    pair: &PotentialPair,
    ell: &ReferenceMeasure,
    f: &TestFunctional,
    schedule: &BetaSchedule,
    n_list: &[usize],
    opts: &MinimizeOptions,
    budget: u64,
) -> Result<ExperimentReport> {
    let kind = schedule_regime(schedule, n_list)?;
    let other = match kind {
        RateKind::I => RateKind::J,
        RateKind::J => RateKind::I,
    };
    let reference = rate_reference(kind, pair, ell, f, opts)?;
    let other_reference = rate_reference(other, pair, ell, f, opts)?;
    let rows = n_list
        .iter()
        .map(|&n| {
            let beta_n = schedule.beta(n)?;
            let exact = laplace_exact(exec, pair, ell, f, n, beta_n, budget)?;
            Ok(LaplaceRow {
                n,
                beta_n,
                exact,
                reference,
                gap: (exact - reference).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport {
        schedule: schedule.clone(),
        rate: kind,
        functional: f.clone(),
        functional_sup: f.sup_abs(),
        reference,
        other_reference,
        rows,
        seed: opts.seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BiasMode {
    Exact {
        #[serde(default = "default_budget")]
        budget: u64,
    },
    MonteCarlo { batches: usize, seed: u64 },
}

fn default_budget() -> u64 {
    DEFAULT_BUDGET
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub n: usize,
    /// `E[W_!=(L_n)]` for iid draws from `mu_star`.
    pub lhs: f64,
    /// `((n - 1) / n) W(mu_star)`.
    pub rhs: f64,
    pub gap: f64,
    /// Monte Carlo standard error of `lhs`.
    pub std_error: Option<f64>,
}

fn offdiag_of_counts(mu_star: &DiscreteMeasure, counts: &[u16], n: usize, w: &Interaction) -> Result<f64> {
    let dim = mu_star.dim();
    let mut coords = Vec::new();
    let mut ws = Vec::new();
    for (i, c) in counts.iter().enumerate() {
        if *c > 0 {
            coords.extend_from_slice(mu_star.atom(i));
            ws.push(f64::from(*c) / n as f64);
        }
    }
    interaction_energy_offdiag(&DiscreteMeasure::from_flat(dim, coords, ws)?, w)
}

/// Compares `E[W_!=(L_n)]` for `n` iid draws from `mu_star` with
/// `((n - 1)/n) W(mu_star)`. The two agree when `W` vanishes on the
/// diagonal of the support of `mu_star`.
pub fn bias_identity_check(
    exec: Exec,
    mu_star: &DiscreteMeasure,
    w: &Interaction,
    n: usize,
    mode: &BiasMode,
) -> Result<BiasReport> {
    if n == 0 {
        return Err(Error::param("n", "need n >= 1"));
    }
    let rhs = (n as f64 - 1.0) / n as f64 * interaction_energy(mu_star, w)?;
    let m = mu_star.len();
    let (lhs, std_error) = match mode {
        BiasMode::Exact { budget } => {
            let log_mu: Vec<f64> = mu_star.weights().iter().map(|x| x.ln()).collect();
            let blocks = map_config_blocks(exec, m, n, *budget, |range| -> Result<ExtSum> {
                let mut acc = ExtSum::new();
                let mut counts = Vec::with_capacity(m);
                let mut err = None;
                visit_range(range, m, n, |_, idx| {
                    if err.is_some() {
                        return;
                    }
                    counts_of(idx, m, &mut counts);
                    let p = idx.iter().map(|&a| log_mu[a]).sum::<f64>().exp();
                    match offdiag_of_counts(mu_star, &counts, n, w) {
                        Ok(v) => acc.add(p * v),
                        Err(e) => err = Some(e),
                    }
                });
                err.map_or(Ok(acc), Err)
            })?;
            let mut total = ExtSum::new();
            for b in blocks {
                total.merge(&b?);
            }
            (total.checked("E[W_!=]")?, None)
        }
        BiasMode::MonteCarlo { batches, seed } => {
            if *batches < 2 {
                return Err(Error::param("batches", "need at least two batches"));
            }
            let samples = iid_sample(mu_star, n, *seed, *batches)?;
            let vals = map_items(exec, samples, |c: ParticleConfig| {
                interaction_energy_offdiag(&c.empirical_measure(), w)
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            let k = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / k;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
            (mean, Some((var / k).sqrt()))
        }
    };
    Ok(BiasReport {
        n,
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
        std_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistanceSpec {
    Bl,
    /// `d_psi` with `psi = |x|^q`.
    Psi { q: f64 },
    /// Optimal transport cost with `|x - y|^p`.
    Wasserstein { p: f64 },
}

impl DistanceSpec {
    pub fn eval(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
        match self {
            DistanceSpec::Bl => d_bl(mu, nu),
            DistanceSpec::Psi { q } => d_psi(mu, nu, &WeightFunction::norm_power(*q)?),
            DistanceSpec::Wasserstein { p } => wasserstein_p(mu, nu, *p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationSettings {
    pub chains: usize,
    pub samples_per_chain: usize,
    #[serde(default)]
    pub burn_in: usize,
    #[serde(default)]
    pub thinning: usize,
    /// Proposal scale as an expression in `n`, e.g. `0.5 / n`.
    pub step: BetaSchedule,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub n: usize,
    pub beta_n: f64,
    pub seed: u64,
    pub median: f64,
    pub distances: Vec<f64>,
    pub mean_acceptance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub schedule: BetaSchedule,
    pub distance: DistanceSpec,
    pub rows: Vec<ConcentrationRow>,
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Distances from sampled empirical measures to `target` for each `n`;
/// chain seeds are `settings.seed + n`.
#[allow(clippy::too_many_arguments)]
pub fn concentration_experiment(
    exec: Exec,
    pair: &PotentialPair,
    ell: &ReferenceMeasure,
    schedule: &BetaSchedule,
    n_list: &[usize],
    target: &DiscreteMeasure,
    distance: &DistanceSpec,
    settings: &ConcentrationSettings,
) -> Result<ConcentrationReport> {
    if settings.chains == 0 || settings.samples_per_chain == 0 {
        return Err(Error::param("chains", "need at least one chain and one sample"));
    }
    let rows = n_list
        .iter()
        .map(|&n| {
            let beta_n = schedule.beta(n)?;
            let seed = settings.seed.wrapping_add(n as u64);
            let cfg = SamplerConfig {
                n,
                beta_n,
                step: settings.step.beta(n)?,
                burn_in: settings.burn_in,
                thinning: settings.thinning,
                seed,
                init: InitSpec::Reference,
            };
            let runs = mh_sample_chains(exec, pair, ell, &cfg, settings.samples_per_chain, settings.chains)?;
            let acc = runs.iter().map(|r| r.diagnostics.mean_acceptance()).sum::<f64>() / runs.len() as f64;
            let samples: Vec<ParticleConfig> = runs.into_iter().flat_map(|r| r.samples).collect();
            let distances = map_items(exec, samples, |c| distance.eval(&c.empirical_measure(), target))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            Ok(ConcentrationRow {
                n,
                beta_n,
                seed,
                median: median(&distances),
                distances,
                mean_acceptance: acc,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConcentrationReport {
        schedule: schedule.clone(),
        distance: distance.clone(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub r: f64,
    #[serde(with = "serde_ext")]
    pub sup_tail: f64,
}

/// `sup_k int_{|x| > r} psi dmu_k` for each `r`.
pub fn psi_tightness_probe(samples: &[DiscreteMeasure], psi: &WeightFunction, r_list: &[f64]) -> Result<Vec<TailRow>> {
    r_list
        .iter()
        .map(|&r| {
            let mut sup: f64 = 0.0;
            for mu in samples {
                sup = sup.max(tail_psi_mass(mu, psi, r)?);
            }
            Ok(TailRow { r, sup_tail: sup })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{Confinement, Interaction};

    fn four_atoms(v: Confinement, w: Interaction) -> (PotentialPair, ReferenceMeasure) {
        let ell = ReferenceMeasure::atoms(1, (0..4).map(|i| vec![i as f64]).collect(), vec![0.1, 0.2, 0.3, 0.4])
            .unwrap();
        (PotentialPair::new(1, v, w).unwrap(), ell)
    }

    #[test]
    fn zero_functional_gives_zero() {
        let (pair, ell) = four_atoms(Confinement::zero(), Interaction::gaussian(1.0));
        for n in 1..5 {
            let v = laplace_exact(Exec::default(), &pair, &ell, &TestFunctional::Zero, n, n as f64 * 3.0, DEFAULT_BUDGET)
                .unwrap();
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn sanov_factorization() {
        // W = 0, beta = n: E e^{-n int g dL_n} = (sum_a e^{-g_a} p_a)^n
        let (pair, ell) = four_atoms(Confinement::zero(), Interaction::zero());
        let g = vec![0.5, -1.0, 2.0, 0.25];
        let f = TestFunctional::Linear { g: g.clone() };
        let closed = -[0.1, 0.2, 0.3, 0.4].iter().zip(&g).map(|(p, gi)| p * (-gi).exp()).sum::<f64>().ln();
        for n in 2..=6 {
            let v = laplace_exact(Exec::default(), &pair, &ell, &f, n, n as f64, DEFAULT_BUDGET).unwrap();
            assert!((v - closed).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn two_by_two_hand_enumeration() {
        let ell = ReferenceMeasure::atoms(1, vec![vec![0.0], vec![1.0]], vec![1.0, 2.0]).unwrap();
        let pair = PotentialPair::new(1, Confinement::new("lin", |x| x[0]), Interaction::squared_distance()).unwrap();
        let f = TestFunctional::Linear { g: vec![0.3, -0.4] };
        let beta = 1.7;
        // configurations (a, b): H = (V_a + V_b)/2 + 2 W_ab / 8
        let mut num = 0.0;
        let mut den = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let (xa, xb) = (a as f64, b as f64);
                let h = (xa + xb) / 2.0 + 2.0 * (xa - xb).powi(2) / 8.0;
                let l = [1.0, 2.0][a] * [1.0, 2.0][b];
                let fv = ([0.3, -0.4][a] + [0.3, -0.4][b]) / 2.0;
                num += (-beta * (h + fv)).exp() * l;
                den += (-beta * h).exp() * l;
            }
        }
        let expected = -(num / den).ln() / beta;
        let got = laplace_exact(Exec::default(), &pair, &ell, &f, 2, beta, DEFAULT_BUDGET).unwrap();
        assert!((got - expected).abs() < 1e-14);
    }

    #[test]
    fn regimes() {
        let n = [2, 4, 8];
        assert_eq!(schedule_regime(&BetaSchedule::Linear, &n).unwrap(), RateKind::I);
        assert_eq!(schedule_regime(&BetaSchedule::Quadratic, &n).unwrap(), RateKind::J);
        assert!(schedule_regime(&"2*n".parse().unwrap(), &n).is_err());
        assert!(schedule_regime(&BetaSchedule::Linear, &[4, 2]).is_err());
    }

    #[test]
    fn bias_identity_examples() {
        let mu = DiscreteMeasure::uniform(1, vec![vec![0.0], vec![1.0]]).unwrap();
        let w = Interaction::squared_distance();
        let r = bias_identity_check(Exec::default(), &mu, &w, 3, &BiasMode::Exact { budget: DEFAULT_BUDGET }).unwrap();
        assert!((r.lhs - 2.0 / 3.0 * 0.25).abs() < 1e-15);
        assert!(r.gap < 1e-15);
        let r1 = bias_identity_check(Exec::default(), &mu, &w, 1, &BiasMode::Exact { budget: DEFAULT_BUDGET }).unwrap();
        assert_eq!((r1.lhs, r1.rhs), (0.0, 0.0));
        let d = DiscreteMeasure::dirac(&[0.5]).unwrap();
        let rd = bias_identity_check(Exec::default(), &d, &w, 4, &BiasMode::Exact { budget: DEFAULT_BUDGET }).unwrap();
        assert_eq!((rd.lhs, rd.rhs), (0.0, 0.0));
    }

    #[test]
    fn escaping_sequence_tails() {
        let seq: Vec<DiscreteMeasure> = (2..40)
            .map(|k| {
                let k = k as f64;
                DiscreteMeasure::new(1, vec![vec![0.0], vec![k]], vec![1.0 - 1.0 / k, 1.0 / k]).unwrap()
            })
            .collect();
        let lin = WeightFunction::norm_power(1.0).unwrap();
        let rows = psi_tightness_probe(&seq, &lin, &[5.0, 10.0]).unwrap();
        assert!(rows.iter().all(|r| (r.sup_tail - 1.0).abs() < 1e-12));
        let sqrt = WeightFunction::norm_power(0.5).unwrap();
        let rows = psi_tightness_probe(&seq, &sqrt, &[3.0]).unwrap();
        // the largest tail beyond |x| = 3 is at k = 4: sqrt(4) / 4
        assert!((rows[0].sup_tail - 0.5).abs() < 1e-12);
        let compact = psi_tightness_probe(&seq[..2], &lin, &[100.0]).unwrap();
        assert_eq!(compact[0].sup_tail, 0.0);
    }

    #[test]
    fn report_csv_has_full_precision() {
        let (pair, ell) = four_atoms(Confinement::zero(), Interaction::zero());
        let f = TestFunctional::Linear { g: vec![0.1, 0.2, 0.3, 0.4] };
        let rep = laplace_vs_rate(
            Exec::default(),
            &pair,
            &ell,
            &f,
            &BetaSchedule::Linear,
            &[2, 3],
            &MinimizeOptions::default(),
            DEFAULT_BUDGET,
        )
        .unwrap();
        assert!(rep.rows.iter().all(|r| r.gap < 1e-9));
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        let exact: f64 = text.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(exact, rep.rows[0].exact);
    }
}
