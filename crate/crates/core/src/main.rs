//! Command-line front end: generate grid scenarios, run experiments,
//! verify standing assumptions and the resilience condition, and compare
//! the resilient update against the unsaturated baseline.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fieldrec::analysis;
use fieldrec::error::Error;
use fieldrec::recovery::{self, Algorithm, SnapshotPolicy};
use fieldrec::scenario::grid::GeneratedScenario;
use fieldrec::scenario::{self, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "fieldrec",
    about = "Resilient distributed recovery of grid fields under measurement attacks",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a validated scenario file (with the attacked agents pinned).
    Generate {
        /// Scenario file to start from; a desk-scale default when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for scenario.toml.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Simulate a scenario and write trace + recovered-field CSVs.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long, default_value = "resilient")]
        algorithm: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Keep full state snapshots every N iterations.
        #[arg(long)]
        snapshot_every: Option<usize>,
    },
    /// Check assumptions, topology, the resilience condition, and the
    /// per-agent/stacked-update agreement at reduced size.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run both algorithms on the same scenario; one combined CSV.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            let code = match e {
                Error::Config(_) => 2,
                Error::Assumption(_) => 3,
                Error::Runtime(_) | Error::Io(_) => 4,
            };
            ExitCode::from(code)
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<(), Error> {
    match cmd {
        Cmd::Generate { config, seed, out } => generate(config.as_deref(), seed, &out),
        Cmd::Run {
            config,
            iters,
            algorithm,
            seed,
            out,
            snapshot_every,
        } => run_cmd(&config, iters, &algorithm, seed, &out, snapshot_every),
        Cmd::Verify { config, seed } => verify(&config, seed),
        Cmd::Compare {
            config,
            iters,
            seed,
            out,
        } => compare(&config, iters, seed, &out),
    }
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<ScenarioConfig, Error> {
    let mut cfg = match path {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::desk_scale(),
    };
    if let Some(s) = seed {
        cfg.run.seed = s;
    }
    Ok(cfg)
}

fn build(cfg: &ScenarioConfig, base: &Path) -> Result<GeneratedScenario<f64>, Error> {
    let params = cfg.params(base)?;
    scenario::generate_grid_scenario(&params)
}

fn base_dir(config: &Path) -> PathBuf {
    config.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn generate(config: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<(), Error> {
    let mut cfg = load_config(config, seed)?;
    let base = config.map(base_dir).unwrap_or_default();
    let gen = build(&cfg, &base)?;
    // pin the seeded attacked set so the file fully determines the run
    if !gen.attacked_agents.is_empty() {
        cfg.attack.ids = Some(gen.attacked_agents.iter().map(|&n| n + 1).collect());
        cfg.attack.agents = gen.attacked_agents.len();
    }
    std::fs::create_dir_all(out)?;
    let path = out.join("scenario.toml");
    std::fs::write(&path, cfg.to_toml())?;
    println!(
        "wrote {} ({} agents, {} cells, {} attacked, digest {})",
        path.display(),
        gen.sys.agent_count(),
        gen.sys.field_len(),
        gen.attacked_agents.len(),
        cfg.digest()
    );
    Ok(())
}

fn run_cmd(
    config: &Path,
    iters: Option<usize>,
    algorithm: &str,
    seed: Option<u64>,
    out: &Path,
    snapshot_every: Option<usize>,
) -> Result<(), Error> {
    let cfg = load_config(Some(config), seed)?;
    let alg: Algorithm = algorithm.parse()?;
    let iters = iters.unwrap_or(cfg.run.iterations);
    let gen = build(&cfg, &base_dir(config))?;
    let policy = match snapshot_every {
        Some(k) => SnapshotPolicy::Every(k),
        None => SnapshotPolicy::None,
    };
    let attack = (!gen.attack.is_empty()).then_some(&gen.attack);
    let trace = recovery::run(&gen.sys, &gen.graph, attack, cfg.hyperparams()?, iters, alg, policy)?;

    std::fs::create_dir_all(out)?;
    let digest = cfg.digest();
    let trace_path = out.join("trace.csv");
    std::fs::write(&trace_path, scenario::io::trace_csv(&[&trace], &digest))?;
    let cells = scenario::worst_case_field(&trace, &gen.sys, cfg.grid.side)?;
    let field_path = out.join("field.csv");
    std::fs::write(&field_path, scenario::io::field_csv(&cells, &digest))?;
    println!(
        "{}: {} iterations, final max normalized rmse {:.6e}",
        alg.as_str(),
        iters,
        trace.rmse.last().copied().unwrap_or(0.0)
    );
    println!("wrote {} and {}", trace_path.display(), field_path.display());
    Ok(())
}

fn verify(config: &Path, seed: Option<u64>) -> Result<(), Error> {
    let cfg = load_config(Some(config), seed)?;
    let gen = build(&cfg, &base_dir(config))?;
    let sys = &gen.sys;

    let report = sys.validate();
    for c in &report.checks {
        println!(
            "check {:40} {}",
            c.name,
            if c.passed {
                "pass".to_string()
            } else {
                format!("FAIL ({})", c.detail)
            }
        );
    }
    let topo = fieldrec::graph::check_topology(&gen.graph, sys)?;
    println!(
        "check {:40} {}",
        "interest subnetworks connected",
        if topo.passed() {
            format!("pass ({} components)", topo.components_checked)
        } else {
            format!("FAIL ({} disconnected)", topo.disconnected.len())
        }
    );

    let applied = fieldrec::attack::apply_attack(sys, &gen.attack)?;
    let res = fieldrec::attack::resilience_check(sys, &applied.effective)?;
    println!(
        "resilience: lambda_min = {:.6}, Delta = {:.6} ({:?}{}), holds = {}, margin kappa = {:.6}",
        res.lambda_min_clean,
        res.delta.value,
        res.delta.method,
        if res.delta.exact { ", exact" } else { ", bound" },
        res.holds,
        res.margin
    );

    // stacked-update agreement; shrink the instance first if it is large
    let reduced = sys.agent_count() * sys.field_len() > 200_000;
    let oracle_gen = if reduced {
        let params = fieldrec::scenario::GridScenarioParams {
            side: 33,
            agent_rows: 3,
            agent_cols: 3,
            measurement_window: 15,
            interest_window: 23,
            attacked_count: cfg.attack.agents.min(1),
            attacked_ids: None,
            override_value: cfg.attack.override_value,
            field: None,
            seed: cfg.run.seed,
        };
        scenario::generate_grid_scenario(&params)?
    } else {
        gen.clone()
    };
    let attack = (!oracle_gen.attack.is_empty()).then_some(&oracle_gen.attack);
    let div = analysis::oracle_max_divergence(
        &oracle_gen.sys,
        &oracle_gen.graph,
        attack,
        &cfg.hyperparams()?,
        50,
        Algorithm::Resilient,
    )?;
    println!(
        "check {:40} {} (max divergence {:.3e}{})",
        "per-agent vs stacked update",
        if div < 1e-9 { "pass" } else { "FAIL" },
        div,
        if reduced { ", reduced instance" } else { "" }
    );

    if !report.passed() || !topo.passed() {
        return Err(Error::Assumption("verification failed".into()));
    }
    if div >= 1e-9 {
        return Err(Error::Runtime(
            "per-agent and stacked trajectories diverged".into(),
        ));
    }
    Ok(())
}

fn compare(
    config: &Path,
    iters: Option<usize>,
    seed: Option<u64>,
    out: &Path,
) -> Result<(), Error> {
    let cfg = load_config(Some(config), seed)?;
    let iters = iters.unwrap_or(cfg.run.iterations);
    let gen = build(&cfg, &base_dir(config))?;
    let attack = (!gen.attack.is_empty()).then_some(&gen.attack);
    let hp = cfg.hyperparams()?;
    let resilient = recovery::run(
        &gen.sys,
        &gen.graph,
        attack,
        hp,
        iters,
        Algorithm::Resilient,
        SnapshotPolicy::None,
    )?;
    let cirfe = recovery::run(
        &gen.sys,
        &gen.graph,
        attack,
        hp,
        iters,
        Algorithm::Cirfe,
        SnapshotPolicy::None,
    )?;
    std::fs::create_dir_all(out)?;
    let path = out.join("compare.csv");
    std::fs::write(
        &path,
        scenario::io::trace_csv(&[&resilient, &cirfe], &cfg.digest()),
    )?;
    let rf = resilient.rmse.last().copied().unwrap_or(0.0);
    let cf = cirfe.rmse.last().copied().unwrap_or(0.0);
    println!(
        "final max normalized rmse: resilient {:.6e}, cirfe {:.6e}",
        rf, cf
    );
    println!("wrote {}", path.display());
    Ok(())
}
