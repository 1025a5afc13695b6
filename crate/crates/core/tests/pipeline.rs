use std::path::Path;

use gibbslab::config::RunConfig;
use gibbslab::harness::laplace_vs_rate;
use gibbslab::par::Exec;
use gibbslab::variational::{minimize_i, GridSpec, MinimizationResult};

fn shipped(name: &str) -> RunConfig {
    RunConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)).unwrap()
}

#[test]
fn shipped_configs_build_their_models() {
    for name in ["sanov.toml", "loggas.toml", "masked.toml"] {
        let cfg = shipped(name);
        cfg.model().unwrap().pair().unwrap();
    }
    assert!(shipped("measures.toml").model.is_none());
}

#[test]
fn sanov_config_end_to_end() {
    let cfg = shipped("sanov.toml");
    let model = cfg.model().unwrap();
    let pair = model.pair().unwrap();
    let grid = GridSpec::from_reference(&model.reference).unwrap();
    let res = minimize_i(&pair, &model.reference, &grid, &cfg.minimize.as_ref().unwrap().solver.options(1)).unwrap();
    assert!(res.value.abs() < 1e-10);
    let (rho, _) = model.reference.tilted(|x| pair.v(x).unwrap()).unwrap();
    for (a, b) in res.grid_weights.iter().zip(rho.weights()) {
        assert!((a - b).abs() < 1e-8);
    }
    let json = serde_json::to_string(&res).unwrap();
    let back: MinimizationResult = serde_json::from_str(&json).unwrap();
    assert_eq!(serde_json::to_string(&back).unwrap(), json);

    let lap = cfg.laplace.as_ref().unwrap();
    let rep = laplace_vs_rate(
        Exec::default(),
        &pair,
        &model.reference,
        &lap.functional,
        &lap.schedule,
        &lap.n,
        &lap.solver.options(1),
        10_000_000,
    )
    .unwrap();
    assert!(rep.rows.iter().all(|r| r.gap <= 1e-10), "{:?}", rep.rows);
}
