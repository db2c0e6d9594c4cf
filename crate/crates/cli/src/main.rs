use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use spectral_shift::models::geometric_schedule;
use spectral_shift::{ModelSpec, ModelTag};
use spectral_shift_cli::{check, parse_config, run, RunConfig};

#[derive(Parser)]
#[command(
    name = "spectral-shift",
    version,
    about = "First-order eigenvalue-shift sweeps and checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an ε-sweep, verify the first-order law and write the reports.
    Sweep(SweepArgs),
    /// List model kinds with their defaults.
    Models,
    /// Run the randomized property suites only.
    Check {
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model kind (robin, conformal, dirichlet-hole, pseudo-symbol).
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    eps_start: Option<f64>,
    #[arg(long)]
    eps_ratio: Option<f64>,
    #[arg(long)]
    eps_count: Option<usize>,
    /// Nodes per axis (lattice size for the pseudo model).
    #[arg(long)]
    grid: Option<usize>,
    /// Index of the base mode.
    #[arg(long)]
    mode: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_config(args: &SweepArgs) -> Result<RunConfig> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_config(&text)?
        }
        None => {
            let kind = args.model.as_deref().unwrap_or("robin");
            let text = format!("[model]\nkind = {kind:?}\n");
            parse_config(&text)?
        }
    };
    if let Some(kind) = &args.model {
        let Some(tag) = ModelTag::parse(kind) else {
            bail!("unknown model kind {kind:?}");
        };
        if tag != config.model.tag() {
            bail!(
                "--model {kind} conflicts with the configured model {}",
                config.model.tag()
            );
        }
    }
    let mut regrid = false;
    if let Some(n) = args.grid {
        config.model = config.model.clone().with_grid(n);
        regrid = true;
    }
    if let Some(k) = args.mode {
        config.model.mode_index = k;
    }
    if args.eps_start.is_some() || args.eps_ratio.is_some() || args.eps_count.is_some() {
        config.schedule = geometric_schedule(
            args.eps_start.unwrap_or(0.1),
            args.eps_ratio.unwrap_or(0.5),
            args.eps_count.unwrap_or(8),
        );
    } else if regrid && args.config.is_none() {
        // the hole schedule is expressed in grid nodes
        config.schedule = config.model.default_schedule();
    }
    if let Some(out) = &args.out {
        config.output.dir = out.clone();
    }
    config.validate()?;
    Ok(config)
}

fn list_models() {
    for tag in ModelTag::ALL {
        let spec = ModelSpec::default_for(tag);
        let schedule = spec.default_schedule();
        println!("{tag}");
        println!("  defaults: {}", serde_json::to_string(&spec.kind).unwrap_or_default());
        println!(
            "  schedule: {} points, {:e} .. {:e}",
            schedule.len(),
            schedule[0],
            schedule[schedule.len() - 1]
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Models => {
            list_models();
            ExitCode::SUCCESS
        }
        Command::Check { instances, seed } => match check(seed, instances) {
            Ok(outcomes) => {
                let mut ok = true;
                for o in &outcomes {
                    ok &= o.pass();
                    println!(
                        "{}  {:<26} {} instances, {} failures, worst {:.3e}, {:.2}s",
                        if o.pass() { "PASS" } else { "FAIL" },
                        o.name,
                        o.instances,
                        o.failures,
                        o.worst,
                        o.elapsed.as_secs_f64()
                    );
                }
                if ok {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::FAILURE
                }
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        },
        Command::Sweep(args) => match build_config(&args).and_then(|c| run(&c)) {
            Ok(report) => {
                print!("{}", report.summary);
                if report.success() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::FAILURE
                }
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        },
    }
}
