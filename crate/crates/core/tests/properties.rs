use proptest::prelude::*;

use gibbslab::enumeration::{log_partition, AtomTables, DEFAULT_BUDGET};
use gibbslab::functionals::{
    confinement_energy, diagonal_mass, hamiltonian, interaction_energy, interaction_energy_offdiag, rate_i, rate_j,
    rate_j_n_offdiag, relative_entropy, star_gap, truncated_interaction,
};
use gibbslab::harness::{laplace_exact, TestFunctional};
use gibbslab::measures::{
    d_bl, d_psi, psi_integral, wasserstein_p, wasserstein_p_lp, wasserstein_p_quantile, DiscreteMeasure,
    ParticleConfig, WeightFunction,
};
use gibbslab::par::Exec;
use gibbslab::potentials::{
    coulomb_kernel, construct_phi, normalize_pair, power_confinement, Confinement, Interaction, PotentialPair,
};
use gibbslab::reference::ReferenceMeasure;
use gibbslab::variational::{minimize_i, minimize_j, simplex_scan_oracle, GridProblem, GridSpec, MinimizeOptions};

fn measure(d: usize, k: usize) -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec((prop::collection::vec(-3.0..3.0f64, d), 0.05..1.0f64), k).prop_map(move |v| {
        let coords: Vec<f64> = v.iter().flat_map(|(x, _)| x.clone()).collect();
        let w: Vec<f64> = v.iter().map(|(_, w)| *w).collect();
        DiscreteMeasure::from_unnormalized(d, coords, w).unwrap()
    })
}

fn weights(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05..1.0f64, m)
}

fn on_atoms(m: usize, w: &[f64]) -> DiscreteMeasure {
    let coords: Vec<f64> = (0..m).map(|i| i as f64).collect();
    DiscreteMeasure::from_unnormalized(1, coords, w.to_vec()).unwrap()
}

fn table_v(values: Vec<f64>) -> Confinement {
    Confinement::new("table", move |x| values[x[0].round() as usize])
}

fn table_w(values: Vec<f64>, m: usize) -> Interaction {
    Interaction::new("table", false, move |x, y| values[x[0].round() as usize * m + y[0].round() as usize])
}

fn integer_reference(w: Vec<f64>) -> ReferenceMeasure {
    ReferenceMeasure::atoms(1, (0..w.len()).map(|i| vec![i as f64]).collect(), w).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metrics_are_metrics(a in measure(1, 5), b in measure(1, 5), c in measure(1, 5)) {
        let psi = WeightFunction::norm_power(1.0).unwrap();
        type Metric<'a> = &'a dyn Fn(&DiscreteMeasure, &DiscreteMeasure) -> f64;
        let ds: [Metric; 3] = [
            &|x, y| d_bl(x, y).unwrap(),
            &|x, y| d_psi(x, y, &psi).unwrap(),
            &|x, y| wasserstein_p(x, y, 2.0).unwrap().sqrt(),
        ];
        for d in ds {
            prop_assert!(d(&a, &a).abs() <= 1e-9);
            prop_assert!(d(&a, &b) > 0.0);
            prop_assert!((d(&a, &b) - d(&b, &a)).abs() <= 1e-9);
            prop_assert!(d(&a, &b) <= d(&a, &c) + d(&c, &b) + 1e-9);
        }
    }

    #[test]
    fn quantile_coupling_is_optimal(a in measure(1, 5), b in measure(1, 5), p in 1.0..3.0f64) {
        let q = wasserstein_p_quantile(&a, &b, p).unwrap();
        let lp = wasserstein_p_lp(&a, &b, p).unwrap();
        prop_assert!((q - lp).abs() <= 1e-9, "{} vs {}", q, lp);
    }

    #[test]
    fn d_psi_dominates_its_parts(a in measure(2, 5), b in measure(2, 5), q in 0.5..2.0f64) {
        let psi = WeightFunction::norm_power(q).unwrap();
        let d = d_psi(&a, &b, &psi).unwrap();
        prop_assert!(d >= d_bl(&a, &b).unwrap());
        prop_assert!(d >= (psi_integral(&a, &psi) - psi_integral(&b, &psi)).abs());
    }

    #[test]
    fn coulomb_is_symmetric(d in 1usize..4, x in prop::collection::vec(-2.0..2.0f64, 3), y in prop::collection::vec(-2.0..2.0f64, 3)) {
        let w = coulomb_kernel(d).unwrap();
        prop_assert_eq!(w.eval(&x[..d], &y[..d]).to_bits(), w.eval(&y[..d], &x[..d]).to_bits());
    }

    #[test]
    fn phi_dominates_its_supporting_lines(nu in measure(1, 8), a in 0.1..2.0f64, q in 0.5..2.0f64, k_max in 1usize..10) {
        let psi_bar = move |x: &[f64]| a * x[0].abs().powf(q);
        let phi = construct_phi(&nu, psi_bar, k_max).unwrap();
        let bp = phi.breakpoints().to_vec();
        for (k, &mk) in bp.iter().enumerate() {
            let slope = (k + 1) as f64;
            for step in 0..50 {
                let s = mk + step as f64 * 0.37;
                prop_assert!(phi.eval(s) >= slope * (s - mk) + phi.eval(mk) - 1e-9);
            }
        }
    }

    #[test]
    fn normalization_and_difference_invariance(
        ell_w in weights(4),
        v1 in prop::collection::vec(-1.0..2.0f64, 4),
        v2 in prop::collection::vec(-1.0..2.0f64, 4),
        w in prop::collection::vec(-1.0..1.0f64, 16),
        a in weights(4),
        b in weights(4),
    ) {
        let ell = integer_reference(ell_w.clone());
        let (tv1, tv2, tw) = (table_v(v1), table_v(v2), table_w(w, 4));
        let np = normalize_pair(&tv1, &tv2, &tw, &ell, None).unwrap();
        let mass: f64 = (0..4).map(|i| (-np.pair.v(&[i as f64]).unwrap()).exp() * ell_w[i]).sum();
        prop_assert!((mass - 1.0).abs() <= 1e-10);

        let (mu, nu) = (on_atoms(4, &a), on_atoms(4, &b));
        let (rho2, _) = ell.tilted(|x| tv2.eval(x)).unwrap();
        let pre_i = |m: &DiscreteMeasure| {
            relative_entropy(m, &rho2).unwrap() + confinement_energy(m, &tv1).unwrap() + interaction_energy(m, &tw).unwrap()
        };
        let v12 = tv1.plus(&tv2);
        let pre_j = |m: &DiscreteMeasure| confinement_energy(m, &v12).unwrap() + interaction_energy(m, &tw).unwrap();
        let di = rate_i(&mu, &np.pair, &ell).unwrap().value - rate_i(&nu, &np.pair, &ell).unwrap().value;
        let dj = rate_j(&mu, &np.pair).unwrap().value - rate_j(&nu, &np.pair).unwrap().value;
        prop_assert!((di - (pre_i(&mu) - pre_i(&nu))).abs() <= 1e-10);
        prop_assert!((dj - (pre_j(&mu) - pre_j(&nu))).abs() <= 1e-10);
    }

    #[test]
    fn decomposition_identity(pts in prop::collection::vec(-2.0..2.0f64, 2..20), beta_scale in 0.5..50.0f64, s in 0.3..2.0f64) {
        let config = ParticleConfig::from_scalars(&pts).unwrap();
        let n = pts.len();
        let beta = beta_scale * n as f64;
        let pair = PotentialPair::new(1, power_confinement(2.0).unwrap(), Interaction::gaussian(s)).unwrap();
        let lhs = rate_j_n_offdiag(&config.empirical_measure(), &pair, n, beta).unwrap().value;
        let sum_v: f64 = pts.iter().map(|x| x * x).sum();
        let rhs = hamiltonian(&config, &pair).unwrap() - sum_v / beta;
        prop_assert!((lhs - rhs).abs() <= 1e-12);
    }

    #[test]
    fn truncation_bounds(mu in measure(1, 6), m1 in 0.01..5.0f64, dm in 0.0..5.0f64) {
        let w = Interaction::log_kernel();
        let t1 = truncated_interaction(&mu, &w, m1).unwrap();
        let t2 = truncated_interaction(&mu, &w, m1 + dm).unwrap();
        prop_assert!(t1.full <= t1.offdiag + 0.5 * m1 * diagonal_mass(&mu) + 1e-12);
        prop_assert!(t1.full <= t2.full + 1e-12);
    }

    #[test]
    fn offdiag_below_full_for_nonnegative_diagonal(mu in measure(2, 6)) {
        let w = Interaction::squared_distance();
        prop_assert!(interaction_energy_offdiag(&mu, &w).unwrap() <= interaction_energy(&mu, &w).unwrap() + 1e-12);
        let g = Interaction::gaussian(1.0);
        prop_assert!(interaction_energy_offdiag(&mu, &g).unwrap() <= interaction_energy(&mu, &g).unwrap() + 1e-12);
    }

    #[test]
    fn relative_entropy_is_jointly_convex(a1 in weights(5), a2 in weights(5), b1 in weights(5), b2 in weights(5), t in 0.0..1.0f64) {
        let (m1, m2, n1, n2) = (on_atoms(5, &a1), on_atoms(5, &a2), on_atoms(5, &b1), on_atoms(5, &b2));
        let lhs = relative_entropy(&m1.mix(&m2, t).unwrap(), &n1.mix(&n2, t).unwrap()).unwrap();
        let rhs = t * relative_entropy(&m1, &n1).unwrap() + (1.0 - t) * relative_entropy(&m2, &n2).unwrap();
        prop_assert!(lhs <= rhs + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn laplace_symmetries(
        ell_w in weights(3),
        v in prop::collection::vec(0.0..1.0f64, 3),
        g in prop::collection::vec(-1.0..1.0f64, 3),
        kappa in -2.0..2.0f64,
        n in 1usize..6,
    ) {
        let ell = integer_reference(ell_w.clone());
        let pair = PotentialPair::new(1, table_v(v.clone()), Interaction::gaussian(1.0)).unwrap();
        let beta = n as f64 * 1.5;
        let f = TestFunctional::Linear { g: g.clone() };
        let base = laplace_exact(Exec::default(), &pair, &ell, &f, n, beta, DEFAULT_BUDGET).unwrap();

        let shifted_f = TestFunctional::Linear { g: g.iter().map(|x| x + kappa).collect() };
        let sf = laplace_exact(Exec::default(), &pair, &ell, &shifted_f, n, beta, DEFAULT_BUDGET).unwrap();
        prop_assert!((sf - base - kappa).abs() <= 1e-12);

        let shifted_v = pair.with_confinement(table_v(v.iter().map(|x| x + kappa).collect()));
        let sv = laplace_exact(Exec::default(), &shifted_v, &ell, &f, n, beta, DEFAULT_BUDGET).unwrap();
        prop_assert!((sv - base).abs() <= 1e-12);

        // relabel atoms by reversing their order
        let rev = |x: &[f64]| x.iter().rev().copied().collect::<Vec<f64>>();
        let ell_r = integer_reference(rev(&ell_w));
        let pair_r = PotentialPair::new(1, table_v(rev(&v)), Interaction::gaussian(1.0)).unwrap();
        let pair_r = pair_r.with_interaction(Interaction::new("mirror", true, |x, y| {
            Interaction::gaussian(1.0).eval(&[2.0 - x[0]], &[2.0 - y[0]])
        }));
        let fr = TestFunctional::Linear { g: rev(&g) };
        let relabeled = laplace_exact(Exec::default(), &pair_r, &ell_r, &fr, n, beta, DEFAULT_BUDGET).unwrap();
        prop_assert!((relabeled - base).abs() <= 1e-12);

        // a linear functional is a shift of V by g
        let tables = AtomTables::new(&pair, &ell).unwrap();
        let tilted = pair.with_confinement(table_v(v.iter().zip(&g).map(|(a, b)| a + b).collect()));
        let tilted_tables = AtomTables::new(&tilted, &ell).unwrap();
        let lz = log_partition(Exec::default(), &tables, n, beta, DEFAULT_BUDGET).unwrap();
        let lzf = log_partition(Exec::default(), &tilted_tables, n, beta, DEFAULT_BUDGET).unwrap();
        prop_assert!((-(lzf - lz) / beta - base).abs() <= 1e-12);
    }

    #[test]
    fn minimizers_beat_the_lattice_on_convex_instances(ell_w in weights(3), v in prop::collection::vec(0.0..1.0f64, 3), s in 0.5..3.0f64) {
        // a Gaussian kernel is positive definite, so both rates are convex
        let ell = integer_reference(ell_w);
        let pair = PotentialPair::new(1, table_v(v), Interaction::gaussian(s)).unwrap();
        let grid = GridSpec::from_reference(&ell).unwrap();
        let opts = MinimizeOptions::default();
        let ri = minimize_i(&pair, &ell, &grid, &opts).unwrap();
        let rj = minimize_j(&pair, &grid, &opts).unwrap();
        let oi = simplex_scan_oracle(&GridProblem::rate_i(&pair, &ell, &grid, None).unwrap(), 0.01, None).unwrap();
        let oj = simplex_scan_oracle(&GridProblem::rate_j(&pair, &grid, None).unwrap(), 0.01, None).unwrap();
        prop_assert!(ri.value <= oi.value + 1e-8);
        prop_assert!(rj.value <= oj.value + 1e-8);
        prop_assert!(!ri.local && !rj.local);
        prop_assert!(ri.monotone);

        let at = |w: &[f64]| rate_i(&on_atoms(3, w), &pair, &ell).unwrap();
        let values = vec![at(&ri.grid_weights), at(&[1.0, 1.0, 1.0]), at(&oi.grid_weights)];
        prop_assert!(star_gap(&values, 0).unwrap() <= 1e-8);
        prop_assert!(star_gap(&values, 1).unwrap() >= 0.0);
    }

    #[test]
    fn refinement_never_raises_the_minimum(s in 0.3..1.5f64, h in 0.05..0.2f64) {
        let pair = PotentialPair::new(1, power_confinement(2.0).unwrap(), Interaction::gaussian(s)).unwrap();
        let coarse = GridSpec::uniform_1d(-2.0, 2.0, 4.0 / (4.0 / h).round());
        let fine_step = match &coarse { GridSpec::Box { step, .. } => step / 2.0, _ => unreachable!() };
        let fine = GridSpec::uniform_1d(-2.0, 2.0, fine_step);
        let opts = MinimizeOptions { tol: 1e-10, ..MinimizeOptions::default() };
        let a = minimize_j(&pair, &coarse, &opts).unwrap().value;
        let b = minimize_j(&pair, &fine, &opts).unwrap().value;
        prop_assert!(b <= a + 1e-8, "{} then {}", a, b);
    }
}
