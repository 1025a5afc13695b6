//! Sampling particle configurations from the Gibbs law
//! `P_n(dx) ∝ e^{-beta_n H_n(x)} l(dx_1)...l(dx_n)`.
//!
//! Three routes: a single-site Metropolis–Hastings chain (any reference),
//! exact categorical sampling by enumeration (finite references), and iid
//! draws from a fixed measure.
//!
//! On a finite reference the chain redraws the moved particle uniformly
//! among the atoms; on a Lebesgue box it adds a centred Gaussian of
//! standard deviation `step` to each coordinate. Both proposals are
//! symmetric, so acceptance only needs the unnormalized density.

use std::io::Write;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::enumeration::{decode, gibbs_log_weights, AtomTables, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::ext::{ExtSum, LogSumExp};
use crate::functionals::hamiltonian_with;
use crate::measures::{DiscreteMeasure, ParticleConfig};
use crate::par::{map_items, Exec};
use crate::potentials::PotentialPair;
use crate::reference::ReferenceMeasure;

/// Initial configurations drawn from the reference are re-drawn this many
/// times before giving up.
pub const MAX_INIT_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitSpec {
    /// Independent draws from the (normalized) reference; on an unbounded
    /// Lebesgue axis a standard normal, folded onto a half-line if needed.
    Reference,
    Config { config: ParticleConfig },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n: usize,
    pub beta_n: f64,
    /// Gaussian proposal scale on a Lebesgue reference.
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default)]
    pub burn_in: usize,
    /// Extra sweeps between kept samples.
    #[serde(default)]
    pub thinning: usize,
    pub seed: u64,
    #[serde(default = "default_init")]
    pub init: InitSpec,
}

fn default_step() -> f64 {
    0.5
}

fn default_init() -> InitSpec {
    InitSpec::Reference
}

impl SamplerConfig {
    pub fn new(n: usize, beta_n: f64, seed: u64) -> Self {
        Self {
            n,
            beta_n,
            step: default_step(),
            burn_in: 0,
            thinning: 0,
            seed,
            init: InitSpec::Reference,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::param("n", "need at least one particle"));
        }
        if !(self.beta_n > 0.0 && self.beta_n.is_finite()) {
            return Err(Error::param("beta_n", "inverse temperature must be positive and finite"));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::param("step", "proposal scale must be positive"));
        }
        Ok(())
    }
}

/// Generator for stream `stream` of `seed`; chains use their index as the
/// stream.
pub fn chain_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    /// Accepted fraction of the `n` proposals of each sweep, burn-in
    /// included.
    pub acceptance: Vec<f64>,
    /// `H_n` at the end of each sweep.
    pub sweep_energy: Vec<f64>,
    /// `H_n` of each kept sample.
    pub energy_trace: Vec<f64>,
    pub effective_sample_size: f64,
}

impl ChainDiagnostics {
    pub fn mean_acceptance(&self) -> f64 {
        if self.acceptance.is_empty() {
            return 0.0;
        }
        self.acceptance.iter().sum::<f64>() / self.acceptance.len() as f64
    }
}

/// Effective sample size by Geyer's initial positive sequence.
pub fn effective_sample_size(trace: &[f64]) -> f64 {
    let n = trace.len();
    if n < 4 {
        return n as f64;
    }
    let mean = trace.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = trace.iter().map(|x| x - mean).collect();
    let var = centred.iter().map(|x| x * x).sum::<f64>() / n as f64;
    if !(var > 0.0) {
        return n as f64;
    }
    let rho = |lag: usize| -> f64 {
        centred[..n - lag]
            .iter()
            .zip(&centred[lag..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / (n as f64 * var)
    };
    let mut tau = -1.0;
    let mut m = 0;
    while 2 * m + 1 < n {
        let gamma = rho(2 * m) + rho(2 * m + 1);
        if gamma <= 0.0 {
            break;
        }
        tau += 2.0 * gamma;
        m += 1;
    }
    (n as f64 / tau.max(1.0 / n as f64)).min(n as f64)
}

/// A single-site Metropolis–Hastings chain.
pub struct MhChain<'a> {
    pair: &'a PotentialPair,
    ell: &'a ReferenceMeasure,
    beta: f64,
    step: f64,
    state: ParticleConfig,
    energy: f64,
    rng: ChaCha8Rng,
    proposal: Vec<f64>,
}

impl<'a> MhChain<'a> {
    /// Starts a chain; `stream` selects the independent RNG stream.
    pub fn new(pair: &'a PotentialPair, ell: &'a ReferenceMeasure, cfg: &SamplerConfig, stream: u64) -> Result<Self> {
        cfg.validate()?;
        if pair.dim() != ell.dim() {
            return Err(Error::DimensionMismatch {
                expected: pair.dim(),
                got: ell.dim(),
            });
        }
        let mut rng = chain_rng(cfg.seed, stream);
        let (state, energy) = match &cfg.init {
            InitSpec::Config { config } => {
                if config.dim() != pair.dim() || config.len() != cfg.n {
                    return Err(Error::param("init", "initial configuration has the wrong shape"));
                }
                if config.points().any(|x| ell.log_density(x) == f64::NEG_INFINITY) {
                    return Err(Error::param("init", "initial configuration leaves the reference support"));
                }
                let e = hamiltonian_with(Exec::Sequential, config, pair)?;
                if !e.is_finite() {
                    return Err(Error::NoFiniteStart { attempts: 0 });
                }
                (config.clone(), e)
            }
            InitSpec::Reference => {
                let mut found = None;
                for _ in 0..MAX_INIT_ATTEMPTS {
                    let c = draw_from_reference(ell, cfg.n, &mut rng)?;
                    let e = hamiltonian_with(Exec::Sequential, &c, pair)?;
                    if e.is_finite() {
                        found = Some((c, e));
                        break;
                    }
                }
                found.ok_or(Error::NoFiniteStart {
                    attempts: MAX_INIT_ATTEMPTS,
                })?
            }
        };
        Ok(Self {
            pair,
            ell,
            beta: cfg.beta_n,
            step: cfg.step,
            proposal: vec![0.0; pair.dim()],
            state,
            energy,
            rng,
        })
    }

    pub fn state(&self) -> &ParticleConfig {
        &self.state
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    fn propose(&mut self, k: usize) {
        match self.ell {
            ReferenceMeasure::Atoms { atoms, .. } => {
                let j = self.rng.random_range(0..atoms.len());
                self.proposal.copy_from_slice(&atoms[j]);
            }
            ReferenceMeasure::Lebesgue { .. } => {
                let x = self.state.point(k);
                for (p, xi) in self.proposal.iter_mut().zip(x) {
                    let z: f64 = StandardNormal.sample(&mut self.rng);
                    *p = xi + self.step * z;
                }
            }
        }
    }

    /// `H_n(new) - H_n(old)` when particle `k` moves to the proposal, or
    /// `None` if the new energy is `+inf`.
    fn delta(&self, k: usize) -> Result<Option<f64>> {
        let n = self.state.len();
        let (x, y) = (self.state.point(k), self.proposal.as_slice());
        let v_new = self.pair.v(y)?;
        if v_new == f64::INFINITY {
            return Ok(None);
        }
        let mut new = ExtSum::new();
        let mut old = ExtSum::new();
        for (j, z) in self.state.points().enumerate() {
            if j == k {
                continue;
            }
            new.add(self.pair.w(y, z)?);
            new.add(self.pair.w(z, y)?);
            if new.is_pos_inf() {
                return Ok(None);
            }
            old.add(self.pair.w(x, z)?);
            old.add(self.pair.w(z, x)?);
        }
        let nf = n as f64;
        let dv = v_new - self.pair.v(x)?;
        Ok(Some(dv / nf + (new.value() - old.value()) / (2.0 * nf * nf)))
    }

    /// One proposal for particle `k`; returns whether it was accepted.
    pub fn step_site(&mut self, k: usize) -> Result<bool> {
        self.propose(k);
        let log_ell_new = self.ell.log_density(&self.proposal);
        if log_ell_new == f64::NEG_INFINITY {
            return Ok(false);
        }
        let Some(dh) = self.delta(k)? else {
            return Ok(false);
        };
        let log_alpha = -self.beta * dh + log_ell_new - self.ell.log_density(self.state.point(k));
        let u: f64 = self.rng.random();
        if log_alpha >= 0.0 || u < log_alpha.exp() {
            let d = self.pair.dim();
            self.state.coords_mut()[k * d..(k + 1) * d].copy_from_slice(&self.proposal);
            self.energy += dh;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    /// `n` site updates in index order; returns the acceptance fraction.
    /// The energy is recomputed exactly at the end of the sweep.
    pub fn sweep(&mut self) -> Result<f64> {
        let n = self.state.len();
        let mut accepted = 0usize;
        for k in 0..n {
            accepted += usize::from(self.step_site(k)?);
        }
        self.energy = hamiltonian_with(Exec::Sequential, &self.state, self.pair)?;
        Ok(accepted as f64 / n as f64)
    }
}

fn draw_from_reference(ell: &ReferenceMeasure, n: usize, rng: &mut ChaCha8Rng) -> Result<ParticleConfig> {
    let d = ell.dim();
    let mut coords = Vec::with_capacity(n * d);
    match ell {
        ReferenceMeasure::Atoms { atoms, weights, .. } => {
            let cdf = cumulative(weights);
            for _ in 0..n {
                coords.extend_from_slice(&atoms[draw_index(&cdf, rng)]);
            }
        }
        ReferenceMeasure::Lebesgue { lower, upper, .. } => {
            for _ in 0..n {
                for (l, u) in lower.iter().zip(upper) {
                    let z: f64 = StandardNormal.sample(rng);
                    coords.push(match (l.is_finite(), u.is_finite()) {
                        (true, true) => l + (u - l) * rng.random::<f64>(),
                        (true, false) => l + z.abs(),
                        (false, true) => u - z.abs(),
                        (false, false) => z,
                    });
                }
            }
        }
    }
    ParticleConfig::from_flat(d, coords)
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

fn draw_index(cdf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total = *cdf.last().expect("non-empty");
    let u = rng.random::<f64>() * total;
    cdf.partition_point(|c| *c <= u).min(cdf.len() - 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRun {
    pub chain: usize,
    pub samples: Vec<ParticleConfig>,
    /// Sweep after which each sample was taken (1-based).
    pub sweeps: Vec<usize>,
    pub diagnostics: ChainDiagnostics,
}

/// Runs one chain and keeps `samples` configurations after burn-in and
/// thinning.
pub fn mh_sample(
    pair: &PotentialPair,
    ell: &ReferenceMeasure,
    cfg: &SamplerConfig,
    samples: usize,
) -> Result<SampleRun> {
    run_chain(pair, ell, cfg, samples, 0)
}

/// Independent chains on streams `0..chains`, run concurrently and
/// returned in chain order.
pub fn mh_sample_chains(
    exec: Exec,
    pair: &PotentialPair,
    ell: &ReferenceMeasure,
    cfg: &SamplerConfig,
    samples: usize,
    chains: usize,
) -> Result<Vec<SampleRun>> {
    map_items(exec, (0..chains).collect(), |c| run_chain(pair, ell, cfg, samples, c))
        .into_iter()
        .collect()
}

fn run_chain(
    pair: &PotentialPair,
    ell: &ReferenceMeasure,
    cfg: &SamplerConfig,
    samples: usize,
    chain: usize,
) -> Result<SampleRun> {
    let mut mc = MhChain::new(pair, ell, cfg, chain as u64)?;
    let mut diag = ChainDiagnostics::default();
    let mut out = Vec::with_capacity(samples);
    let mut sweeps = Vec::with_capacity(samples);
    let mut sweep = 0usize;
    let mut run = |mc: &mut MhChain, diag: &mut ChainDiagnostics| -> Result<()> {
        let a = mc.sweep()?;
        diag.acceptance.push(a);
        diag.sweep_energy.push(mc.energy());
        sweep += 1;
        Ok(())
    };
    for _ in 0..cfg.burn_in {
        run(&mut mc, &mut diag)?;
    }
    for _ in 0..samples {
        for _ in 0..=cfg.thinning {
            run(&mut mc, &mut diag)?;
        }
        out.push(mc.state().clone());
        diag.energy_trace.push(mc.energy());
    }
    sweeps.extend((1..=samples).map(|s| cfg.burn_in + s * (cfg.thinning + 1)));
    diag.effective_sample_size = effective_sample_size(&diag.energy_trace);
    Ok(SampleRun {
        chain,
        samples: out,
        sweeps,
        diagnostics: diag,
    })
}

/// Exact probabilities of all `m^n` configurations in enumeration order.
pub fn exact_gibbs_law(
    exec: Exec,
    pair: &PotentialPair,
    ell: &ReferenceMeasure,
    n: usize,
    beta_n: f64,
    budget: u64,
) -> Result<Vec<f64>> {
    if n == 0 || !(beta_n >= 0.0 && beta_n.is_finite()) {
        return Err(Error::param("beta_n", "need n >= 1 and finite beta_n >= 0"));
    }
    let tables = AtomTables::new(pair, ell)?;
    let lw = gibbs_log_weights(exec, &tables, n, beta_n, budget)?;
    let mut lse = LogSumExp::new();
    for x in &lw {
        lse.add(*x);
    }
    let log_z = lse.value();
    if log_z == f64::NEG_INFINITY {
        return Err(Error::AllInfinite("every configuration has H_n = +inf".into()));
    }
    Ok(lw.iter().map(|x| (x - log_z).exp()).collect())
}

/// Categorical draws from the exactly enumerated Gibbs law.
#[allow(clippy::too_many_arguments)]
pub fn exact_sample_finite(
    exec: Exec,
    pair: &PotentialPair,
    ell: &ReferenceMeasure,
    n: usize,
    beta_n: f64,
    seed: u64,
    samples: usize,
    budget: Option<u64>,
) -> Result<Vec<ParticleConfig>> {
    let law = exact_gibbs_law(exec, pair, ell, n, beta_n, budget.unwrap_or(DEFAULT_BUDGET))?;
    let tables = AtomTables::new(pair, ell)?;
    let cdf = cumulative(&law);
    let mut rng = chain_rng(seed, 0);
    let mut idx = vec![0usize; n];
    (0..samples)
        .map(|_| {
            decode(draw_index(&cdf, &mut rng), tables.m(), &mut idx);
            tables.config(&idx)
        })
        .collect()
}

/// `samples` batches of `n` iid draws from `mu_star`.
pub fn iid_sample(mu_star: &DiscreteMeasure, n: usize, seed: u64, samples: usize) -> Result<Vec<ParticleConfig>> {
    if n == 0 {
        return Err(Error::param("n", "need at least one particle"));
    }
    let cdf = cumulative(mu_star.weights());
    let mut rng = chain_rng(seed, 0);
    (0..samples)
        .map(|_| {
            let mut coords = Vec::with_capacity(n * mu_star.dim());
            for _ in 0..n {
                coords.extend_from_slice(mu_star.atom(draw_index(&cdf, &mut rng)));
            }
            ParticleConfig::from_flat(mu_star.dim(), coords)
        })
        .collect()
}

#[derive(Serialize)]
struct SampleLine<'a> {
    chain: usize,
    sweep: usize,
    config: &'a ParticleConfig,
}

/// One JSON object per kept configuration.
pub fn write_jsonl(runs: &[SampleRun], mut w: impl Write) -> Result<()> {
    for r in runs {
        for (c, s) in r.samples.iter().zip(&r.sweeps) {
            serde_json::to_writer(
                &mut w,
                &SampleLine {
                    chain: r.chain,
                    sweep: *s,
                    config: c,
                },
            )?;
            w.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// `chain,sweep,acceptance,energy` per sweep.
pub fn write_diagnostics_csv(runs: &[SampleRun], mut w: impl Write) -> Result<()> {
    writeln!(w, "chain,sweep,acceptance,energy")?;
    for r in runs {
        let d = &r.diagnostics;
        for (s, (a, e)) in d.acceptance.iter().zip(&d.sweep_energy).enumerate() {
            writeln!(w, "{},{},{},{}", r.chain, s + 1, a, e)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{coulomb_kernel, hard_wall, power_confinement, Confinement, Interaction};

    #[test]
    fn gaussian_moments_single_particle() {
        // target e^{-beta x^2} on R: mean 0, variance 1/(2 beta)
        let beta = 2.0;
        let pair = PotentialPair::new(1, power_confinement(2.0).unwrap(), Interaction::zero()).unwrap();
        let ell = ReferenceMeasure::lebesgue(vec![f64::NEG_INFINITY], vec![f64::INFINITY]).unwrap();
        let mut cfg = SamplerConfig::new(1, beta, 11);
        cfg.step = 0.8;
        cfg.burn_in = 200;
        cfg.thinning = 4;
        let run = mh_sample(&pair, &ell, &cfg, 4000).unwrap();
        let xs: Vec<f64> = run.samples.iter().map(|c| c.point(0)[0]).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let ess = effective_sample_size(&xs).max(100.0);
        let sd = (1.0 / (2.0 * beta)).sqrt();
        assert!(mean.abs() < 3.0 * sd / ess.sqrt(), "mean {mean}");
        // var of the sample variance of a Gaussian: 2 sigma^4 / ess
        let se_var = (2.0f64).sqrt() * sd * sd / ess.sqrt();
        assert!((var - sd * sd).abs() < 3.0 * se_var, "var {var}");
    }

    #[test]
    fn hard_wall_keeps_samples_inside() {
        let pair = PotentialPair::new(1, hard_wall(0.0, 1.0).unwrap(), Interaction::squared_distance()).unwrap();
        let ell = ReferenceMeasure::lebesgue(vec![-0.5], vec![1.5]).unwrap();
        let mut cfg = SamplerConfig::new(4, 4.0, 3);
        cfg.burn_in = 10;
        let run = mh_sample(&pair, &ell, &cfg, 200).unwrap();
        assert!(run
            .samples
            .iter()
            .all(|c| c.coords().iter().all(|x| (0.0..=1.0).contains(x))));
    }

    #[test]
    fn coulomb_points_never_coincide() {
        let pair = PotentialPair::new(2, power_confinement(2.0).unwrap(), coulomb_kernel(2).unwrap()).unwrap();
        let pts: Vec<Vec<f64>> = (0..5).flat_map(|i| (0..5).map(move |j| vec![i as f64, j as f64])).collect();
        let ell = ReferenceMeasure::atoms(2, pts.clone(), vec![1.0; pts.len()]).unwrap();
        let cfg = SamplerConfig::new(6, 6.0, 5);
        let run = mh_sample(&pair, &ell, &cfg, 300).unwrap();
        for c in &run.samples {
            for i in 0..c.len() {
                for j in 0..i {
                    assert_ne!(c.point(i), c.point(j));
                }
            }
        }
    }

    #[test]
    fn chains_are_reproducible_and_distinct() {
        let pair = PotentialPair::new(1, power_confinement(2.0).unwrap(), Interaction::gaussian(1.0)).unwrap();
        let ell = ReferenceMeasure::lebesgue(vec![-10.0], vec![10.0]).unwrap();
        let cfg = SamplerConfig::new(3, 3.0, 99);
        let a = mh_sample_chains(Exec::Parallel, &pair, &ell, &cfg, 20, 3).unwrap();
        let b = mh_sample_chains(Exec::Sequential, &pair, &ell, &cfg, 20, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].samples, a[1].samples);
    }

    #[test]
    fn no_finite_start() {
        let pair = PotentialPair::new(1, Confinement::zero(), Interaction::log_kernel()).unwrap();
        let ell = ReferenceMeasure::counting_1d(&[0.0]).unwrap();
        let err = mh_sample(&pair, &ell, &SamplerConfig::new(2, 1.0, 0), 1).unwrap_err();
        assert!(matches!(err, Error::NoFiniteStart { attempts: MAX_INIT_ATTEMPTS }));
        let mut bad = SamplerConfig::new(2, 1.0, 0);
        bad.step = 0.0;
        assert!(mh_sample(&pair, &ell, &bad, 1).is_err());
    }

    #[test]
    fn exact_one_particle_marginal() {
        let ell = ReferenceMeasure::atoms(1, vec![vec![0.0], vec![1.0], vec![2.0]], vec![1.0, 2.0, 1.0]).unwrap();
        let pair = PotentialPair::new(1, power_confinement(2.0).unwrap(), Interaction::zero()).unwrap();
        let law = exact_gibbs_law(Exec::default(), &pair, &ell, 1, 1.5, DEFAULT_BUDGET).unwrap();
        let raw: Vec<f64> = [(0.0, 1.0), (1.0, 2.0), (2.0, 1.0)]
            .iter()
            .map(|(x, l): &(f64, f64)| l * (-1.5 * x * x).exp())
            .collect();
        let z: f64 = raw.iter().sum();
        for (p, r) in law.iter().zip(&raw) {
            assert!((p - r / z).abs() < 1e-15);
        }
    }

    #[test]
    fn exact_two_by_two_ratio() {
        // H_n(distinct) = (1/(2*4)) * 2 = 1/4, H_n(coincident) = 0
        let ell = ReferenceMeasure::counting_1d(&[0.0, 1.0]).unwrap();
        let pair = PotentialPair::new(1, Confinement::zero(), Interaction::distinct_indicator()).unwrap();
        let beta = 3.0;
        let law = exact_gibbs_law(Exec::default(), &pair, &ell, 2, beta, DEFAULT_BUDGET).unwrap();
        // order: (0,0), (0,1), (1,0), (1,1)
        assert!((law[1] / law[0] - (-beta / 4.0).exp()).abs() < 1e-14);
        assert!((law.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let s = exact_sample_finite(Exec::default(), &pair, &ell, 2, beta, 1, 50, None).unwrap();
        assert_eq!(s.len(), 50);
    }

    #[test]
    fn exact_budget_and_small_beta() {
        let ell = ReferenceMeasure::atoms(1, vec![vec![0.0], vec![1.0]], vec![3.0, 1.0]).unwrap();
        let pair = PotentialPair::new(1, power_confinement(2.0).unwrap(), Interaction::gaussian(1.0)).unwrap();
        let law = exact_gibbs_law(Exec::default(), &pair, &ell, 2, 1e-12, DEFAULT_BUDGET).unwrap();
        let product = [9.0 / 16.0, 3.0 / 16.0, 3.0 / 16.0, 1.0 / 16.0];
        for (p, q) in law.iter().zip(product) {
            assert!((p - q).abs() < 1e-10);
        }
        assert!(matches!(
            exact_sample_finite(Exec::default(), &pair, &ell, 30, 1.0, 0, 1, Some(1000)),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn iid_examples() {
        let d = DiscreteMeasure::dirac(&[2.5]).unwrap();
        let s = iid_sample(&d, 4, 0, 3).unwrap();
        assert!(s.iter().all(|c| c.coords().iter().all(|x| *x == 2.5)));
        let mu = DiscreteMeasure::new(1, vec![vec![0.0], vec![1.0]], vec![0.3, 0.7]).unwrap();
        let draws = iid_sample(&mu, 1000, 8, 10).unwrap();
        let ones = draws.iter().flat_map(|c| c.coords().iter()).filter(|x| **x == 1.0).count() as f64;
        let total = 10_000.0;
        let se = (0.7f64 * 0.3 / total).sqrt();
        assert!((ones / total - 0.7).abs() < 3.0 * se);
        assert_eq!(iid_sample(&mu, 5, 8, 2).unwrap(), iid_sample(&mu, 5, 8, 2).unwrap());
    }

    #[test]
    fn writers_produce_one_line_per_sample() {
        let pair = PotentialPair::new(1, power_confinement(2.0).unwrap(), Interaction::zero()).unwrap();
        let ell = ReferenceMeasure::counting_1d(&[0.0, 1.0]).unwrap();
        let run = mh_sample(&pair, &ell, &SamplerConfig::new(2, 1.0, 0), 5).unwrap();
        let mut buf = Vec::new();
        write_jsonl(std::slice::from_ref(&run), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 5);
        let mut csv = Vec::new();
        write_diagnostics_csv(&[run], &mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 6);
    }
}
