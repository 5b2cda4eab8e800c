use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rru_lab::{load, oracle, oracle_csv, output_dir, report, run_experiment, LabError, Overrides};

#[derive(Parser)]
#[command(name = "rru", version, about = "Randomly reinforced urn laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the replicate count (ensemble and embedded runs).
    #[arg(long)]
    replicates: Option<u64>,
    /// Override the every-step recording length.
    #[arg(long = "dense-prefix")]
    dense_prefix: Option<u64>,
    /// Worker threads; defaults to the available cores. Never changes results.
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides { seed: self.seed, replicates: self.replicates, dense_prefix: self.dense_prefix }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run every test in the config and write reports.
    Run {
        #[command(flatten)]
        common: Common,
        /// Output directory; defaults to $RRU_OUTPUT_ROOT/<name>.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a config and print its canonical hash.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Also print the canonical config text.
        #[arg(long)]
        canonical: bool,
    },
    /// Dump the exact law after N steps as CSV.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(short = 'n', long)]
        steps: u64,
        /// Write to this file instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run only the Skorokhod embedding tests.
    Embed {
        #[command(flatten)]
        common: Common,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<u8, LabError> {
    match cli.command {
        Command::Run { common, output } => execute(&common, output, false),
        Command::Embed { common, output } => execute(&common, output, true),
        Command::Validate { common, canonical } => {
            let loaded = load(&common.config, &common.overrides())?;
            println!("ok {} sha256 {}", loaded.experiment.config.name, loaded.hash);
            if canonical {
                print!("{}", loaded.canonical);
            }
            Ok(0)
        }
        Command::Oracle { common, steps, output } => {
            let loaded = load(&common.config, &common.overrides())?;
            let law = oracle(&loaded, steps)?;
            let bytes = oracle_csv(&law)?;
            match output {
                Some(path) => std::fs::write(&path, bytes).map_err(|source| LabError::Io { path, source })?,
                None => print!("{}", String::from_utf8_lossy(&bytes)),
            }
            Ok(0)
        }
    }
}

fn execute(common: &Common, output: Option<PathBuf>, embedding_only: bool) -> Result<u8, LabError> {
    let loaded = load(&common.config, &common.overrides())?;
    let dir = output_dir(output.as_deref(), &loaded.experiment.config.name);
    let out = run_experiment(&loaded, &dir, common.threads, embedding_only)?;
    for o in &out.summary.outcomes {
        println!("{}", report::verdict_line(o));
    }
    println!("outputs in {}", out.dir.display());
    Ok(if out.summary.all_pass() { 0 } else { 1 })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
