use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use emob_core::netgraph::NetworkDocument;
use emob_core::scenario::{Scenario, ScenarioDocument, UserPreference};
use emob_core::{fixtures, route, Mode, PlannerKind, RouteOptions};
use emob_harness::{persist_comparison, persist_sweep, run_comparison, sweep_hyperparams, ExperimentSpec, SweepSpec};
use emob_server::AppState;

#[derive(Parser)]
#[command(name = "emob", version, about = "Multi-modal e-mobility route planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan one route and print it as JSON.
    Route {
        #[arg(long)]
        scenario: PathBuf,
        /// Network file; defaults to resolving the scenario's network name
        /// against `<name>.json` next to the scenario file.
        #[arg(long)]
        network: Option<PathBuf>,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, default_value = "aco")]
        planner: PlannerKind,
        /// Also solve exactly and report the optimality gap.
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        seed: Option<u64>,
        /// Modes to leave out of the user's preference.
        #[arg(long, value_delimiter = ',')]
        exclude: Vec<Mode>,
    },
    /// Run a planner comparison experiment and persist its results.
    Bench {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Sweep ant and episode counts on one query.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Serve the JSON API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        #[arg(long)]
        scenario_dir: Option<PathBuf>,
        /// Directory of static assets served at `/`.
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
}

type Failure = Box<dyn std::error::Error>;

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn load_scenario(path: &Path, network: Option<&Path>) -> Result<Scenario, Failure> {
    let doc = ScenarioDocument::from_json(&read_text(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
    let explicit = match network {
        Some(p) => Some(NetworkDocument::from_json(&read_text(p)?).map_err(|e| format!("{}: {e}", p.display()))?),
        None => None,
    };
    let dir = path.parent().unwrap_or(Path::new("."));
    let resolve = |name: &str| {
        if let Some(net) = &explicit {
            return Some(net.clone());
        }
        let candidate = dir.join(format!("{name}.json"));
        match std::fs::read_to_string(candidate) {
            Ok(text) => NetworkDocument::from_json(&text).ok(),
            Err(_) if name == "t3" => Some(fixtures::t3_network()),
            Err(_) => None,
        }
    };
    let sc = match (&explicit, &doc.network) {
        (Some(net), None) => Scenario::from_documents(net, &doc),
        _ => Scenario::load(&doc, resolve),
    };
    sc.map_err(|e| format!("{}: {e}", path.display()).into())
}

fn print_json(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("output serializes"));
}

#[allow(clippy::too_many_arguments)]
fn cmd_route(
    scenario: &Path,
    network: Option<&Path>,
    from: &str,
    to: &str,
    planner: PlannerKind,
    oracle: bool,
    seed: Option<u64>,
    exclude: &[Mode],
) -> Result<(), Failure> {
    let sc = load_scenario(scenario, network)?;
    let mut opts = RouteOptions { seed, ..RouteOptions::default() };
    if !exclude.is_empty() {
        let allowed = sc.config.preference.allowed().iter().filter(|m| !exclude.contains(m));
        opts.preference = Some(UserPreference::new(allowed));
    }
    let out = route(&sc, from, to, planner, &opts)?;
    if !oracle {
        print_json(&out);
        return Ok(());
    }
    let best = route(&sc, from, to, PlannerKind::Oracle, &opts)?;
    let gap = if best.total_time_s > 0.0 { out.total_time_s / best.total_time_s - 1.0 } else { 0.0 };
    print_json(&serde_json::json!({
        "result": out,
        "oracle_total_time_s": best.total_time_s,
        "gap": gap,
    }));
    Ok(())
}

fn cmd_bench(spec: &Path, out: &Path) -> Result<(), Failure> {
    let spec = ExperimentSpec::from_file(spec)?;
    let result = run_comparison(&spec)?;
    let files = persist_comparison(&out.join(&spec.id), &result)?;
    println!("{:<24} {:>5} {:>9} {:>7} {:>9}", "variant", "n", "ql_better", "tie", "aco_better");
    for c in &result.summary.cells {
        println!(
            "{:<24} {:>5} {:>9.3} {:>7.3} {:>9.3}",
            c.variant, c.n, c.ql_better_frac, c.tie_frac, c.aco_better_frac
        );
    }
    eprintln!("records: {}", files.records.display());
    eprintln!("summary: {}", files.summary.display());
    Ok(())
}

fn cmd_sweep(spec: &Path, out: &Path) -> Result<(), Failure> {
    let spec = SweepSpec::from_file(spec)?;
    let table = sweep_hyperparams(&spec)?;
    let path = persist_sweep(&out.join(&spec.id), &table)?;
    println!(
        "{:<8} {:<11} {:>6} {:>12} {:>10} {:>10}",
        "planner", "parameter", "value", "mean_cost", "std_cost", "mean_s"
    );
    for r in &table.rows {
        let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.2}"));
        println!(
            "{:<8} {:<11} {:>6} {:>12} {:>10} {:>10.4}",
            r.planner.as_str(),
            r.parameter,
            r.value,
            fmt(r.mean_cost),
            fmt(r.std_cost),
            r.mean_exec_s
        );
    }
    eprintln!("sweep: {}", path.display());
    Ok(())
}

fn cmd_serve(
    host: std::net::IpAddr,
    port: u16,
    scenario_dir: Option<&Path>,
    static_dir: Option<PathBuf>,
) -> Result<(), Failure> {
    let state = match scenario_dir {
        Some(dir) => AppState::from_dir(dir)?,
        None => AppState::default(),
    };
    let ids = state.scenario_ids();
    if !ids.is_empty() {
        eprintln!("preloaded scenarios: {}", ids.join(", "));
    }
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(emob_server::serve(SocketAddr::new(host, port), Arc::new(state), static_dir))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Route { scenario, network, from, to, planner, oracle, seed, exclude } => {
            cmd_route(&scenario, network.as_deref(), &from, &to, planner, oracle, seed, &exclude)
        }
        Command::Bench { spec, out } => cmd_bench(&spec, &out),
        Command::Sweep { spec, out } => cmd_sweep(&spec, &out),
        Command::Serve { port, host, scenario_dir, static_dir } => {
            cmd_serve(host, port, scenario_dir.as_deref(), static_dir)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
