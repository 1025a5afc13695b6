use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use gibbslab::config::{self, Manifest, RunConfig, TargetSpec, MANIFEST_VERSION};
use gibbslab::harness::{concentration_experiment, laplace_vs_rate, ConcentrationSettings};
use gibbslab::measures::{d_bl, d_psi, format_full, wasserstein_p, wasserstein_p_quantile, WeightFunction};
use gibbslab::par::{with_threads, Exec};
use gibbslab::potentials::{
    check_assumption_a, check_assumption_b1, check_assumption_c1, construct_phi, phi_moment_check,
};
use gibbslab::sampler::{mh_sample_chains, write_diagnostics_csv, write_jsonl, SamplerConfig};
use gibbslab::variational::{minimize_i, minimize_j, GridSpec, MinimizationResult, RateKind};
use gibbslab::{Error, Result};

pub fn catalog(as_json: bool) {
    let items = config::catalog();
    if as_json {
        println!("{}", serde_json::to_string_pretty(&items).expect("catalog serializes"));
        return;
    }
    for c in items {
        println!("{:<12} {:<12} {:<40} {}", c.kind, c.name, c.syntax, c.description);
    }
}

struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    fn new(dir: &str) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: PathBuf::from(dir),
            written: Vec::new(),
        })
    }

    fn file(&mut self, name: &str) -> Result<BufWriter<File>> {
        self.written.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut w = self.file(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    fn path(&self) -> &Path {
        &self.dir
    }
}

/// Runs `command` and writes its artifacts plus `manifest.json`.
pub fn run(command: &str, cfg: &RunConfig) -> Result<()> {
    let mut out = Outputs::new(cfg.out.as_deref().unwrap_or("gibbslab-out"))?;
    with_threads(cfg.threads, || dispatch(command, cfg, &mut out))?;
    let manifest = Manifest {
        manifest_version: MANIFEST_VERSION,
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        config: cfg.clone(),
        outputs: out.written.clone(),
    };
    out.json("manifest.json", &manifest)?;
    eprintln!("wrote {}", out.path().display());
    Ok(())
}

fn dispatch(command: &str, cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    match command {
        "sample" => sample(cfg, out),
        "minimize" => minimize(cfg, out),
        "laplace" => laplace(cfg, out),
        "concentration" => concentration(cfg, out),
        "phi" => phi(cfg, out),
        "metrics" => metrics(cfg, out),
        "check-assumptions" => assumptions(cfg, out),
        other => Err(Error::Config {
            field: "command".into(),
            reason: format!("unknown command `{other}`"),
        }),
    }
}

fn seed(cfg: &RunConfig) -> u64 {
    cfg.seed.unwrap_or(0)
}

fn sample(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let model = cfg.model()?;
    let s = RunConfig::section(&cfg.sample, "sample")?;
    let pair = model.pair()?;
    let sc = SamplerConfig {
        n: s.n,
        beta_n: s.schedule.beta(s.n)?,
        step: s.step,
        burn_in: s.burn_in,
        thinning: s.thinning,
        seed: seed(cfg),
        init: s.init.clone(),
    };
    let runs = mh_sample_chains(Exec::default(), &pair, &model.reference, &sc, s.samples, s.chains)?;
    let mut w = out.file("samples.jsonl")?;
    write_jsonl(&runs, &mut w)?;
    w.flush()?;
    let mut w = out.file("diagnostics.csv")?;
    write_diagnostics_csv(&runs, &mut w)?;
    w.flush()?;
    let chains: Vec<_> = runs
        .iter()
        .map(|r| {
            json!({
                "chain": r.chain,
                "mean_acceptance": r.diagnostics.mean_acceptance(),
                "effective_sample_size": r.diagnostics.effective_sample_size,
            })
        })
        .collect();
    out.json("result.json", &json!({ "n": sc.n, "beta_n": sc.beta_n, "chains": chains }))
}

fn grid_or_atoms(grid: &Option<GridSpec>, cfg: &RunConfig) -> Result<GridSpec> {
    match grid {
        Some(g) => Ok(g.clone()),
        None => GridSpec::from_reference(&cfg.model()?.reference),
    }
}

fn solve(cfg: &RunConfig, rate: RateKind, grid: &GridSpec, opts: &gibbslab::variational::MinimizeOptions) -> Result<MinimizationResult> {
    let model = cfg.model()?;
    let pair = model.pair()?;
    match rate {
        RateKind::I => minimize_i(&pair, &model.reference, grid, opts),
        RateKind::J => minimize_j(&pair, grid, opts),
    }
}

fn minimize(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let s = RunConfig::section(&cfg.minimize, "minimize")?;
    let grid = grid_or_atoms(&s.grid, cfg)?;
    let mut opts = s.solver.options(seed(cfg));
    opts.tilt = s.tilt.clone();
    let res = solve(cfg, s.rate, &grid, &opts)?;
    let mut w = out.file("weights.csv")?;
    let nodes = grid.nodes()?;
    let dim = nodes.first().map_or(0, Vec::len);
    let header: Vec<String> = (0..dim).map(|k| format!("x{k}")).chain(["weight".to_string()]).collect();
    writeln!(w, "{}", header.join(","))?;
    for (x, wt) in nodes.iter().zip(&res.grid_weights) {
        let row: Vec<String> = x.iter().chain([wt]).map(|v| format_full(*v)).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    out.json("result.json", &res)
}

fn laplace(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let model = cfg.model()?;
    let s = RunConfig::section(&cfg.laplace, "laplace")?;
    let pair = model.pair()?;
    let rep = laplace_vs_rate(
        Exec::default(),
        &pair,
        &model.reference,
        &s.functional,
        &s.schedule,
        &s.n,
        &s.solver.options(seed(cfg)),
        cfg.budget.unwrap_or(gibbslab::enumeration::DEFAULT_BUDGET),
    )?;
    let mut w = out.file("table.csv")?;
    rep.write_csv(&mut w)?;
    w.flush()?;
    out.json("result.json", &rep)
}

fn concentration(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let model = cfg.model()?;
    let s = RunConfig::section(&cfg.concentration, "concentration")?;
    let pair = model.pair()?;
    let target = match &s.target {
        TargetSpec::Measure { measure } => measure.clone(),
        TargetSpec::Minimizer { rate, grid } => solve(cfg, *rate, grid, &s.solver.options(seed(cfg)))?.minimizer,
    };
    let settings = ConcentrationSettings {
        chains: s.chains,
        samples_per_chain: s.samples_per_chain,
        burn_in: s.burn_in,
        thinning: s.thinning,
        step: s.step.clone(),
        seed: seed(cfg),
    };
    let rep = concentration_experiment(
        Exec::default(),
        &pair,
        &model.reference,
        &s.schedule,
        &s.n,
        &target,
        &s.distance,
        &settings,
    )?;
    let mut w = out.file("table.csv")?;
    writeln!(w, "n,beta_n,median,mean_acceptance")?;
    for r in &rep.rows {
        writeln!(
            w,
            "{},{},{},{}",
            r.n,
            format_full(r.beta_n),
            format_full(r.median),
            format_full(r.mean_acceptance)
        )?;
    }
    w.flush()?;
    let mut w = out.file("distances.csv")?;
    writeln!(w, "n,sample,distance")?;
    for r in &rep.rows {
        for (i, d) in r.distances.iter().enumerate() {
            writeln!(w, "{},{},{}", r.n, i, format_full(*d))?;
        }
    }
    w.flush()?;
    out.json("result.json", &rep)
}

fn phi(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let s = RunConfig::section(&cfg.phi, "phi")?;
    let (a, q) = (s.scale, s.power);
    let psi_bar = move |x: &[f64]| a * x.iter().map(|v| v * v).sum::<f64>().sqrt().powf(q);
    let f = construct_phi(&s.nu, psi_bar, s.k_max)?;
    let moment = phi_moment_check(&f, &s.nu, psi_bar)?;
    out.json("result.json", &json!({ "breakpoints": f.breakpoints(), "moment": moment }))
}

fn metrics(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let s = RunConfig::section(&cfg.metrics, "metrics")?;
    let psi = WeightFunction::norm_power(s.psi_power)?;
    let quantile = if s.mu.dim() == 1 {
        Some(wasserstein_p_quantile(&s.mu, &s.nu, s.p)?)
    } else {
        None
    };
    out.json(
        "result.json",
        &json!({
            "d_bl": d_bl(&s.mu, &s.nu)?,
            "d_psi": d_psi(&s.mu, &s.nu, &psi)?,
            "psi_power": s.psi_power,
            "p": s.p,
            "transport_cost": wasserstein_p(&s.mu, &s.nu, s.p)?,
            "transport_cost_quantile": quantile,
        }),
    )
}

fn assumptions(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let model = cfg.model()?;
    let s = RunConfig::section(&cfg.assumptions, "assumptions")?;
    let pair = model.pair()?;
    let mut reports = Vec::new();
    if model.reference.is_finite_support() {
        reports.push(check_assumption_a(&pair, &model.reference, s.tol)?);
    }
    if let Some(probe) = &s.probe {
        reports.push(check_assumption_b1(&pair, probe, s.c)?);
        if let Some(eps1) = s.eps1 {
            reports.push(check_assumption_c1(&pair, eps1, probe, s.c, None)?);
        }
    }
    let summary: Vec<_> = reports
        .iter()
        .map(|r| json!({ "assumption": r.assumption, "holds": r.holds() }))
        .collect();
    out.json("result.json", &json!({ "summary": summary, "reports": reports }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outputs_are_listed_in_write_order() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Outputs::new(dir.path().to_str().unwrap()).unwrap();
        out.json("a.json", &json!({ "x": 1.5 })).unwrap();
        drop(out.file("b.csv").unwrap());
        assert_eq!(out.written, ["a.json", "b.csv"]);
        assert_eq!(fs::read_to_string(dir.path().join("a.json")).unwrap(), "{\n  \"x\": 1.5\n}\n");
    }

    #[test]
    fn unknown_command_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Outputs::new(dir.path().to_str().unwrap()).unwrap();
        assert!(matches!(dispatch("plot", &RunConfig::default(), &mut out), Err(Error::Config { .. })));
    }

    #[test]
    fn missing_section_names_it() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Outputs::new(dir.path().to_str().unwrap()).unwrap();
        match dispatch("metrics", &RunConfig::default(), &mut out) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "metrics"),
            other => panic!("{other:?}"),
        }
    }
}
