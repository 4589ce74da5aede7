use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use isac_chansim_cli::{run, threads_from_env, Command, RunConfig};

/// ISAC channel simulator: RCS sweeps, micro-Doppler spectrograms and OFDM
/// link-level sensing runs.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Monostatic RCS aspect sweep with slow/fast decomposition.
    RcsSweep(Common),
    /// Arm-swing micro-Doppler spectrograms.
    Microdoppler(Common),
    /// Link-level sensing simulation with delay-Doppler maps.
    Simulate(Common),
    /// Check a scenario and list its violations.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario TOML file; defaults to the bundled scenario for the command.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// RNG seed, replacing the one in the scenario file.
    #[arg(long)]
    seed: Option<u64>,
    /// Figure preset (fig2, fig3, fig4, fig5).
    #[arg(long)]
    preset: Option<String>,
    /// Override a scenario value, `section.key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match threads_from_env() {
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        }
        Ok(None) => {}
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(2);
        }
    }

    let (command, c) = match cli.command {
        Sub::RcsSweep(c) => (Command::RcsSweep, c),
        Sub::Microdoppler(c) => (Command::Microdoppler, c),
        Sub::Simulate(c) => (Command::Simulate, c),
        Sub::Validate(c) => (Command::Validate, c),
    };
    let outcome = run(&RunConfig {
        command,
        scenario_path: c.scenario,
        output_dir: c.out,
        seed: c.seed,
        preset: c.preset,
        overrides: c.overrides,
    });
    for line in &outcome.messages {
        if outcome.exit_code == 0 {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }
    ExitCode::from(outcome.exit_code as u8)
}
