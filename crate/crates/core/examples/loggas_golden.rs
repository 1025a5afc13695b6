//! Regenerates `tests/data/loggas_golden.csv`: the equilibrium profile of
//! `V = x^2`, `W = -log|x - y|` on successively halved grids, keeping the
//! finest.
//!
//! cargo run --release -p gibbslab --example loggas_golden

use std::fs;
use std::path::Path;

use gibbslab::measures::format_full;
use gibbslab::potentials::{power_confinement, Interaction, PotentialPair};
use gibbslab::variational::{minimize_j, GridSpec, MinimizeOptions};

fn main() -> gibbslab::Result<()> {
    let pair = PotentialPair::new(1, power_confinement(2.0)?, Interaction::log_kernel())?;
    let mut last = None;
    for step in [0.02, 0.01, 0.005, 0.0025] {
        let grid = GridSpec::uniform_1d(-1.25, 1.25, step);
        let opts = MinimizeOptions {
            max_iter: 200_000,
            ..MinimizeOptions::default()
        };
        let res = minimize_j(&pair, &grid, &opts)?;
        eprintln!(
            "step {step}: value {} gap {:e} iterations {} local {}",
            res.value, res.convergence_gap, res.iterations, res.local
        );
        last = Some((step, grid.nodes()?, res));
    }
    let (step, nodes, res) = last.expect("at least one grid");
    let mut out = String::from("x,density\n");
    for (x, w) in nodes.iter().zip(&res.grid_weights) {
        out.push_str(&format!("{},{}\n", format_full(x[0]), format_full(w / step)));
    }
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/loggas_golden.csv");
    fs::write(&path, out)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}
