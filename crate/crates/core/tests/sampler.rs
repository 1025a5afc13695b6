use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gibbslab::enumeration::DEFAULT_BUDGET;
use gibbslab::harness::{bias_identity_check, BiasMode};
use gibbslab::measures::DiscreteMeasure;
use gibbslab::par::Exec;
use gibbslab::potentials::{Confinement, Interaction, PotentialPair};
use gibbslab::reference::ReferenceMeasure;
use gibbslab::sampler::{exact_gibbs_law, MhChain, SamplerConfig};

fn index(c: &gibbslab::measures::ParticleConfig) -> usize {
    c.point(0)[0] as usize * 3 + c.point(1)[0] as usize
}

#[test]
fn single_site_kernel_is_reversible() {
    let ell = ReferenceMeasure::atoms(1, vec![vec![0.0], vec![1.0], vec![2.0]], vec![1.0, 0.4, 2.0]).unwrap();
    let pair = PotentialPair::new(
        1,
        Confinement::new("lin", |x| 0.8 * x[0]),
        Interaction::new("asym", false, |x, y| (x[0] - 0.5 * y[0]).abs()),
    )
    .unwrap();
    let beta = 3.0;
    let pi = exact_gibbs_law(Exec::Sequential, &pair, &ell, 2, beta, DEFAULT_BUDGET).unwrap();
    let cfg = SamplerConfig::new(2, beta, 17);
    let mut chain = MhChain::new(&pair, &ell, &cfg, 0).unwrap();
    let mut site = ChaCha8Rng::seed_from_u64(99);
    let steps = 400_000;
    let mut flow = [[0u64; 9]; 9];
    let mut visits = [0u64; 9];
    for _ in 0..steps {
        let a = index(chain.state());
        chain.step_site(site.random_range(0..2)).unwrap();
        let b = index(chain.state());
        flow[a][b] += 1;
        visits[b] += 1;
    }
    let n = steps as f64;
    for a in 0..9 {
        assert!((visits[a] as f64 / n - pi[a]).abs() < 0.01, "state {a}: {} vs {}", visits[a] as f64 / n, pi[a]);
        for (b, row) in flow.iter().enumerate().take(a) {
            let (fab, fba) = (flow[a][b] as f64 / n, row[a] as f64 / n);
            let se = ((fab + fba) / n).sqrt();
            assert!((fab - fba).abs() <= 4.0 * se + 1e-12, "{a}->{b}: {fab} vs {fba}");
        }
    }
}

#[test]
fn iid_batches_reproduce_the_bias_identity() {
    let mu = DiscreteMeasure::new(1, vec![vec![0.0], vec![1.0], vec![3.0]], vec![0.2, 0.5, 0.3]).unwrap();
    let w = Interaction::squared_distance();
    for n in [2usize, 7, 20] {
        let r = bias_identity_check(Exec::default(), &mu, &w, n, &BiasMode::MonteCarlo { batches: 3000, seed: n as u64 })
            .unwrap();
        let se = r.std_error.unwrap();
        assert!(r.gap <= 3.0 * se, "n = {n}: gap {} se {se}", r.gap);
    }
    let exact = bias_identity_check(Exec::default(), &mu, &w, 4, &BiasMode::Exact { budget: DEFAULT_BUDGET }).unwrap();
    assert!(exact.gap <= 1e-12);
}
