use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use cfnet_cli::{parse_config, recipe, run, write_outputs, Figure, Scenario, UnitMode};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cfnet", version, about = "Coherent-feedback Kerr circuit: figure reproductions and parameter sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory (default: out/<scenario>)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Fix the Fock truncation at n states per mode
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(2..=12))]
    truncation: Option<u16>,

    /// Also write an SVG plot next to each CSV
    #[arg(long, global = true)]
    plot: bool,

    #[arg(long, global = true, value_enum, default_value_t = UnitMode::Verbatim)]
    unit_mode: UnitMode,
}

#[derive(Subcommand)]
enum Command {
    /// Recompute the data behind one figure
    Reproduce { figure: Figure },
    /// Run a scenario file
    Run { config: PathBuf },
    /// Run the acceptance checks and write a report
    Validate,
}

fn execute(cli: Cli) -> Result<u8> {
    let scenario = match &cli.command {
        Command::Reproduce { figure } => recipe(*figure),
        Command::Run { config } => parse_config(config)?,
        Command::Validate => {
            let mut s = recipe(Figure::Fig4);
            s.name = "validate".into();
            s.experiment = cfnet_cli::Experiment::Validate;
            s.grids = Default::default();
            s
        }
    };
    let mut scenario: Scenario = scenario.with_unit_mode(cli.unit_mode);
    if let Some(n) = cli.truncation {
        scenario = scenario.with_truncation(n as usize);
    }
    let dir = cli
        .out
        .clone()
        .or_else(|| scenario.output.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&scenario.name));

    let output = run(&scenario);
    write_outputs(&dir, &scenario, &output, cli.plot)?;

    for t in &output.tables {
        eprintln!("{}: {} rows", dir.join(format!("{}.csv", t.name)).display(), t.rows.len());
    }
    if let Some(r) = &output.report {
        print!("{r}");
    }
    for f in &output.failures {
        eprintln!("failed: {} at {} [{}]: {}", f.trace, f.at, f.params_hash, f.error);
    }
    Ok(output.exit_code())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
