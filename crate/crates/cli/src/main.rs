mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "nbds", version, about = "Synthesize and simulate NBDS block netlists")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Ref,
    Netlist,
    Both,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the netlist JSON and DOT files and print the block census.
    Synth {
        /// Built-in name (synapse, fhn, astrocyte) or path to a model file.
        #[arg(long)]
        model: String,
        /// Device parameter file.
        #[arg(long)]
        device: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Integrate the reference equations and/or the netlist to trace CSV.
    Sim {
        #[arg(long)]
        model: String,
        #[arg(long)]
        device: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Mode::Ref)]
        mode: Mode,
        /// Step in circuit seconds.
        #[arg(long, alias = "step", default_value_t = 1e-6)]
        dt: f64,
        /// End time in circuit seconds.
        #[arg(long, default_value_t = 10e-3)]
        tend: f64,
        /// Record every N-th step.
        #[arg(long, default_value_t = 1)]
        stride: usize,
        /// `<name>=<amps>`, `<name>=step:<t0>,<amps>` or `<name>=pwl:<t>,<amps>;...`; repeatable.
        #[arg(long = "input", value_name = "NAME=WAVE")]
        inputs: Vec<String>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Run independent integrations on up to N threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Compare two trace CSV files sampled on the same grid.
    Compare {
        reference: PathBuf,
        test: PathBuf,
        /// Directory for `report.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth { model, device, out } => run::synth(&model, device.as_deref(), &out),
        Command::Sim {
            model,
            device,
            mode,
            dt,
            tend,
            stride,
            inputs,
            out,
            jobs,
        } => run::sim(run::SimArgs {
            model,
            device,
            mode,
            dt,
            tend,
            stride,
            inputs,
            out,
            jobs,
        }),
        Command::Compare {
            reference,
            test,
            out,
        } => run::compare(&reference, &test, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
