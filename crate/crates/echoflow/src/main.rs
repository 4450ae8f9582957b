use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, ValueEnum};

use echoflow::commands::{self, Command, UsageError};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    /// Generate a synthetic packet CSV
    Synth,
    /// Packet CSV to a filtered, balanced flow dataset
    Ingest,
    /// Choose size boundaries under nested cross-validation
    Optimize,
    /// Cross-validate and fit a classifier
    Train,
    /// Train and simulate the early-classification cascade
    Ec,
    /// Per-class histograms next to the chosen boundaries
    Explain,
    /// Classification throughput and memory estimates
    Bench,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Synth => Command::Synth,
            Cmd::Ingest => Command::Ingest,
            Cmd::Optimize => Command::Optimize,
            Cmd::Train => Command::Train,
            Cmd::Ec => Command::Ec,
            Cmd::Explain => Command::Explain,
            Cmd::Bench => Command::Bench,
        }
    }
}

/// Flow classification with optimized binnings and early exits.
///
/// Settings come from a flat `key = value` config file; flags override it.
#[derive(Debug, Parser)]
#[command(name = "echoflow", version)]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,
    /// Config file (`key = value` per line)
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. `--set epochs=100` (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Binning strategy: uniform, fs, stat, ho or greedy
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    packets: Option<PathBuf>,
    #[arg(long)]
    binning: Option<PathBuf>,
    /// Worker threads, 0 for all cores
    #[arg(long)]
    threads: Option<usize>,
}

impl Cli {
    fn flag_overrides(&self) -> Vec<String> {
        let mut out = self.overrides.clone();
        let path = |k: &str, p: &Option<PathBuf>| p.as_ref().map(|p| format!("{k}={}", p.display()));
        out.extend(self.seed.map(|s| format!("seed={s}")));
        out.extend(self.strategy.as_ref().map(|s| format!("strategy={s}")));
        out.extend(self.threads.map(|t| format!("threads={t}")));
        out.extend(path("out_dir", &self.out_dir));
        out.extend(path("dataset", &self.dataset));
        out.extend(path("packets", &self.packets));
        out.extend(path("binning", &self.binning));
        out
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match commands::load_config(cli.config.as_deref(), &cli.flag_overrides()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match commands::run(cli.command.into(), &cfg) {
        Ok(m) => {
            for o in &m.outputs {
                println!("{}", o.file);
            }
            ExitCode::SUCCESS
        }
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e:#}\n\n{}", Cli::command().render_usage());
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
