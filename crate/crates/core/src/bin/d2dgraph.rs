use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use d2dgraph::harness::{
    emit_metrics, encode, load_config, run_experiment, run_sweep, run_training, set_keys, ExperimentOutput,
    MetricsFormat, ScenarioConfig,
};
use d2dgraph::Error;

#[derive(Parser)]
#[command(name = "d2dgraph", version, about = "D2D exchange-graph discovery for federated learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scenario, graph discovery, exchange and federated training.
    Run(Common),
    /// Graph discovery only.
    Train(Common),
    /// Repeat `run` (or `train`) for each value of one config key.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Key to vary, as section.key (e.g. fl.tau_a).
        #[arg(long)]
        key: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Sweep graph training only.
        #[arg(long)]
        train_only: bool,
    },
}

#[derive(Args)]
struct Common {
    /// TOML config file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides experiment.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Metrics output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Extra overrides, section.key=value (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Write the run summary as JSON here.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

impl From<Format> for MetricsFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => MetricsFormat::Csv,
            Format::Jsonl => MetricsFormat::Jsonl,
        }
    }
}

fn build_config(common: &Common) -> Result<ScenarioConfig, Error> {
    let mut config = match &common.config {
        Some(path) => load_config(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.experiment.seed = seed;
    }
    let pairs = common
        .overrides
        .iter()
        .map(|o| {
            o.split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{o}` must be KEY=VALUE")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if !pairs.is_empty() {
        config = set_keys(&config, &pairs)?;
    }
    Ok(config)
}

fn write_outputs(common: &Common, outputs: &[ExperimentOutput]) -> Result<(), Error> {
    let records: Vec<_> = outputs.iter().flat_map(|o| o.records.iter().cloned()).collect();
    let format = common.format.into();
    match &common.out {
        Some(path) => emit_metrics(&records, path, format)?,
        None => std::io::stdout()
            .write_all(&encode(&records, format))
            .map_err(|e| Error::io("<stdout>", e))?,
    }
    let summaries: Vec<_> = outputs.iter().map(|o| &o.summary).collect();
    let text = serde_json::to_string_pretty(&summaries).expect("summaries serialize");
    match &common.summary {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::io(path, e))?,
        None => {
            for s in &summaries {
                eprintln!(
                    "{}: baseline={} final_accuracy={} mean_link_success={} d2d_energy_j={:.6} d2s_energy_j={:.6}",
                    s.run_id,
                    s.baseline.as_str(),
                    s.final_accuracy.map_or("-".into(), |a| format!("{a:.4}")),
                    s.mean_link_success.map_or("-".into(), |a| format!("{a:.4}")),
                    s.d2d_energy_j(),
                    s.d2s_energy_j,
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let (common, result) = match &cli.command {
        Command::Run(common) => (common, build_config(common).map(|c| run_experiment(&c, "default").map(|o| vec![o]))),
        Command::Train(common) => (common, build_config(common).map(|c| run_training(&c, "default").map(|o| vec![o]))),
        Command::Sweep {
            common,
            key,
            values,
            train_only,
        } => (common, build_config(common).map(|c| run_sweep(&c, key, values, *train_only))),
    };
    let outputs = match result {
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
        Ok(Err(e @ Error::Config(_))) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Ok(Ok(outputs)) => outputs,
    };
    if let Err(e) = write_outputs(common, &outputs) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
