use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use quapi::bench::{sweep_dkmax, sweep_horizon, BenchOptions, BenchReport, ValueList};
use quapi::config::{load_config, Config, Threads};
use quapi::driver::execute;
use quapi::propagation::{format_bytes, ReadoutMode};
use quapi::{Error, Result};

#[derive(Parser)]
#[command(
    name = "quapi",
    version,
    about = "Iterative tensor propagation of open-system path integrals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate a configuration and write the trajectory CSV.
    Run(RunArgs),
    /// Timing sweeps.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads, or "auto".
    #[arg(long, env = "QUAPI_THREADS")]
    threads: Option<Threads>,
    /// Capacity limit in bytes for the primary memory cost; 0 disables it.
    #[arg(long)]
    memory_budget: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// allPoints or justFinalPoint; overrides the config.
    #[arg(long)]
    mode: Option<ReadoutMode>,
    /// Trajectory CSV path; overrides the config.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write the η table as CSV.
    #[arg(long)]
    dump_eta: Option<PathBuf>,
    /// Time step in ps; overrides the config.
    #[arg(long)]
    dt: Option<f64>,
    /// Number of steps N; overrides the config.
    #[arg(long)]
    steps: Option<usize>,
    /// Memory length Δk_max; overrides the config.
    #[arg(long)]
    dk_max: Option<usize>,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Cost against memory length.
    Dkmax {
        #[command(flatten)]
        common: Common,
        /// Δk_max values: a..b, a:step:b or a comma list.
        #[arg(long, default_value = "2..12")]
        values: ValueList,
        /// Timed repetitions per value, after one warm-up pass.
        #[arg(long, default_value_t = 3)]
        reps: usize,
        /// Report CSV path.
        #[arg(long)]
        output: PathBuf,
    },
    /// Cost against horizon at fixed memory length.
    Horizon {
        #[command(flatten)]
        common: Common,
        /// Horizons N: a..b, a:step:b or a comma list.
        #[arg(long, default_value = "100:100:1000")]
        values: ValueList,
        /// Memory length for every run.
        #[arg(long, default_value_t = 8)]
        dkmax: usize,
        /// Timed repetitions per value, after one warm-up pass.
        #[arg(long, default_value_t = 3)]
        reps: usize,
        /// Report CSV path.
        #[arg(long)]
        output: PathBuf,
    },
}

fn load(common: &Common) -> Result<Config> {
    let mut config = load_config(&common.config)?;
    if let Some(t) = common.threads {
        config.run.threads = t;
    }
    if let Some(b) = common.memory_budget {
        config.run.memory_budget = (b > 0).then_some(b);
    }
    Ok(config)
}

fn run(args: RunArgs) -> Result<()> {
    let mut config = load(&args.common)?;
    if let Some(m) = args.mode {
        config.run.mode = m;
    }
    if let Some(p) = args.output {
        config.run.output = p;
    }
    if args.dump_eta.is_some() {
        config.run.eta_dump = args.dump_eta;
    }
    if let Some(dt) = args.dt {
        config.run.dt = dt;
    }
    if let Some(n) = args.steps {
        config.run.steps = n;
    }
    if let Some(dk) = args.dk_max {
        config.run.dk_max = dk;
    }
    config.validate()?;
    let summary = execute(&config)?;
    println!(
        "pmc_bytes: {} ({})",
        summary.pmc_bytes,
        format_bytes(summary.pmc_bytes)
    );
    println!("setup_s: {:.6}", summary.setup.as_secs_f64());
    println!(
        "propagation_s: {:.6}",
        summary.timings.propagation.as_secs_f64()
    );
    println!("readout_s: {:.6}", summary.timings.readout.as_secs_f64());
    println!("rows: {} -> {}", summary.rows, config.run.output.display());
    Ok(())
}

fn write_report(report: &BenchReport, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    report.write_csv(&mut out)?;
    out.flush()?;
    let mut stdout = std::io::stdout().lock();
    report.write_csv(&mut stdout)?;
    Ok(())
}

fn bench(cmd: BenchCommand) -> Result<()> {
    match cmd {
        BenchCommand::Dkmax {
            common,
            values,
            reps,
            output,
        } => {
            let config = load(&common)?;
            let opts = BenchOptions {
                reps,
                parallel: config.run.threads.parallelism(),
                ..BenchOptions::default()
            };
            write_report(&sweep_dkmax(&config, &values.0, &opts)?, &output)
        }
        BenchCommand::Horizon {
            common,
            values,
            dkmax,
            reps,
            output,
        } => {
            let config = load(&common)?;
            let opts = BenchOptions {
                reps,
                parallel: config.run.threads.parallelism(),
                ..BenchOptions::default()
            };
            write_report(&sweep_horizon(&config, &values.0, dkmax, &opts)?, &output)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Bench(cmd) => bench(cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    u8::try_from(e.exit_code()).unwrap_or(1)
}
