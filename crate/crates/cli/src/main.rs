//! Command-line front end: network validation, scenario runs, supply-curve
//! sweeps, random-network generation, canned fixtures, and the factorial
//! disruption suite.
//!
//! Exit codes: 0 on success, 1 for validation/parse/usage problems, 2 for
//! simulation failures. `SOSIM_SEED` supplies a default seed wherever no
//! `--seed` flag is given.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sosim_core::results::{curve_csv, export_results, ExportFormat};
use sosim_core::scenario::{
    build_paper_scenario, run, satisfied_fraction, supply_curve, RunResult, ScenarioSpec,
    REFERENCE_PRICE, SEVERITY_ORDER,
};
use sosim_core::topology::{block_fixture, erdos_renyi, validation_fixture_3node, RoleMix};
use sosim_core::{load_scenario, validate_network, write_gml, Network};

#[derive(Parser)]
#[command(
    name = "sosim",
    version,
    about = "Interdependent-network resilience simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a network file for structural problems.
    Validate {
        #[arg(long)]
        network: PathBuf,
    },
    /// Run a scenario and export per-timestep metrics.
    Run(RunArgs),
    /// Sweep demand scales and export the supply curve.
    Sweep {
        #[arg(long)]
        network: PathBuf,
        /// Comma-separated ascending demand multipliers.
        #[arg(long, default_value = "0.5,1,1.5,2")]
        scales: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a random weakly connected network.
    Generate {
        #[arg(long)]
        nodes: usize,
        /// Directed edge probability.
        #[arg(long)]
        p: f64,
        #[arg(long)]
        seed: Option<u64>,
        /// Number of resources in the catalog.
        #[arg(long, default_value_t = 3)]
        resources: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a built-in example network.
    Fixtures {
        #[arg(long, value_enum)]
        name: FixtureName,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the nine canned disruption scenarios on the block fixture and
    /// write their supply curves plus a cost summary.
    PaperSuite {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    network: PathBuf,
    /// Scenario TOML; omit for a disruption-free run.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Overrides the scenario's horizon.
    #[arg(long)]
    timesteps: Option<usize>,
    /// Overrides the scenario's seed (and SOSIM_SEED).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum FixtureName {
    Block,
    #[value(name = "3node")]
    ThreeNode,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Jsonl,
}

/// A failure plus the exit code it maps to.
struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }

    fn simulation(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<sosim_core::GmlError> for CliError {
    fn from(e: sosim_core::GmlError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<sosim_core::ConfigError> for CliError {
    fn from(e: sosim_core::ConfigError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<sosim_core::SimError> for CliError {
    fn from(e: sosim_core::SimError) -> Self {
        CliError::simulation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; everything else is
            // a usage error and exits 1.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn env_seed() -> Option<u64> {
    std::env::var("SOSIM_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
}

fn load_network(path: &Path) -> Result<Network, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let (net, warnings) = sosim_core::from_gml_string(&text)?;
    for warning in warnings {
        eprintln!("warning: {}: {warning}", path.display());
    }
    let report = validate_network(&net);
    if !report.is_valid() {
        let mut lines = vec![format!("{} is not a valid network:", path.display())];
        lines.extend(report.violations.iter().map(|v| format!("  {v}")));
        return Err(CliError::input(lines.join("\n")));
    }
    Ok(net)
}

fn parse_scales(raw: &str) -> Result<Vec<f64>, CliError> {
    let scales: Vec<f64> = raw
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::input(format!("bad --scales value '{raw}'")))?;
    let ascending = scales.windows(2).all(|w| w[0] < w[1]);
    if scales.is_empty() || !ascending || scales[0] <= 0.0 {
        return Err(CliError::input("--scales must be ascending and positive"));
    }
    Ok(scales)
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate { network } => {
            let net = load_network(&network)?;
            println!(
                "{}: valid ({} agents, {} links, {} resources)",
                network.display(),
                net.agents.len(),
                net.links.len(),
                net.resources()
            );
            Ok(())
        }
        Command::Run(args) => do_run(args),
        Command::Sweep {
            network,
            scales,
            out,
        } => {
            let net = load_network(&network)?;
            let scales = parse_scales(&scales)?;
            let curve = supply_curve(&net, &net.final_demands(), &scales)?;
            let text = curve_csv(&curve, env_seed().unwrap_or(0), "");
            fs::write(&out, &text)?;
            println!("wrote {} ({} steps)", out.display(), curve.steps.len());
            Ok(())
        }
        Command::Generate {
            nodes,
            p,
            seed,
            resources,
            out,
        } => {
            let seed = seed.or_else(env_seed).unwrap_or(0);
            let net = erdos_renyi(nodes, p, &RoleMix::default(), resources, seed)?;
            let bytes = write_gml(&net, &out)?;
            println!(
                "wrote {} ({bytes} bytes, {} links)",
                out.display(),
                net.links.len()
            );
            Ok(())
        }
        Command::Fixtures { name, out } => {
            let net = match name {
                FixtureName::Block => block_fixture(),
                FixtureName::ThreeNode => validation_fixture_3node(),
            };
            let bytes = write_gml(&net, &out)?;
            println!("wrote {} ({bytes} bytes)", out.display());
            Ok(())
        }
        Command::PaperSuite { out } => paper_suite(&out),
    }
}

fn do_run(args: RunArgs) -> Result<(), CliError> {
    let net = load_network(&args.network)?;
    let mut spec = match &args.scenario {
        Some(path) => load_scenario(path)?,
        None => ScenarioSpec::stationary("stationary", 1),
    };
    if let Some(t) = args.timesteps {
        if t == 0 {
            return Err(CliError::input("--timesteps must be at least 1"));
        }
        spec.horizon = t;
    }
    if let Some(seed) = args.seed.or_else(env_seed) {
        spec.seed = seed;
    }
    let result = run(&net, &spec)?;
    let format = match args.format {
        OutputFormat::Csv => ExportFormat::Csv,
        OutputFormat::Jsonl => ExportFormat::JsonLines,
    };
    export_results(&result, format, &args.out)?;
    let last = result.records.last().expect("horizon >= 1");
    println!(
        "wrote {} ({} timesteps, final cost {}, shortfall {})",
        args.out.display(),
        result.records.len(),
        last.total_cost,
        last.total_shortfall
    );
    Ok(())
}

fn paper_suite(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let net = block_fixture();
    let mut results: Vec<(String, RunResult)> = Vec::new();
    let base = run(&net, &ScenarioSpec::stationary("base", 1))?;
    results.push(("base".into(), base));
    for id in SEVERITY_ORDER {
        let spec = build_paper_scenario(id, &net)?;
        let result = run(&net, &spec)?;
        results.push((format!("S{id}"), result));
    }

    let base_cost = results[0].1.records[0].total_cost;
    let mut summary =
        String::from("scenario,total_cost,cost_ratio,total_shortfall,fraction_at_reference\n");
    for (name, result) in &results {
        let record = &result.records[0];
        let fraction = satisfied_fraction(&result.curve, REFERENCE_PRICE);
        summary.push_str(&format!(
            "{name},{},{},{},{fraction}\n",
            record.total_cost,
            record.total_cost / base_cost,
            record.total_shortfall
        ));
        let path = dir.join(format!("curve_{name}.csv"));
        fs::write(
            &path,
            curve_csv(&result.curve, result.seed, &result.config_hash),
        )?;
    }
    let summary_path = dir.join("summary.csv");
    fs::write(&summary_path, summary)?;
    println!(
        "wrote {} scenario curves and {} (reference price {REFERENCE_PRICE})",
        results.len(),
        summary_path.display()
    );
    Ok(())
}
