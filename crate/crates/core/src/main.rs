use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dispersive_qkd::config::{parse_config_layers, ConfigError, RunConfig, PRESETS};
use dispersive_qkd::devices::Catalog;
use dispersive_qkd::output::{write_outputs, Sidecar};
use dispersive_qkd::presets::{preset_defaults, run_preset, PresetError};

/// Key-rate simulation and optimization for entanglement-based BB84 over
/// dispersive fiber without a shared time reference.
#[derive(Debug, Parser)]
#[command(name = "dqkd", version)]
struct Cli {
    /// Configuration file (TOML), or a JSON sidecar from an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override one configuration key, e.g. `--set rho=0.9`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Output CSV path; the sidecar goes next to it as `<stem>.json`.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Device catalog file (TOML).
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Key rate at a single configuration.
    Point,
    /// Key rate over the `[[axis]]` grid of the configuration.
    Sweep,
    /// Maximal secure length of Bob's link.
    Maxdist,
    /// Regenerate a named data set.
    Preset {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
        name: String,
    },
}

enum Failure {
    Validation(String),
    Io(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<PresetError> for Failure {
    fn from(e: PresetError) -> Self {
        Failure::Validation(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, Failure> {
    let name = match &cli.command {
        Command::Point => "point".to_string(),
        Command::Sweep => "sweep".to_string(),
        Command::Maxdist => "maxdist".to_string(),
        Command::Preset { name } => name.clone(),
    };

    // a sidecar carries both the effective configuration and the catalog
    let (document, embedded_catalog) = match &cli.config {
        Some(path) if path.extension().is_some_and(|e| e == "json") => {
            let sidecar = Sidecar::from_json(&read(path)?)
                .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
            (sidecar.config, Some(sidecar.catalog))
        }
        Some(path) => (read(path)?, None),
        None => (String::new(), None),
    };

    let mut overrides = cli.overrides.clone();
    overrides.push(format!("preset={name}"));
    let mut config: RunConfig = parse_config_layers(&[preset_defaults(&name), &document], &overrides)?;
    if let Some(out) = &cli.output {
        config.output = Some(out.clone());
    }
    if let Some(cat) = &cli.catalog {
        config.catalog = Some(cat.clone());
    }

    let catalog = match (&cli.catalog, embedded_catalog, &config.catalog) {
        (Some(path), _, _) | (None, None, Some(path)) => {
            Catalog::from_toml_str(&read(path)?).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?
        }
        (None, Some(embedded), _) => embedded,
        (None, None, None) => Catalog::default(),
    };

    let tables = run_preset(&name, &config, &catalog)?;
    let base = config.output.clone().unwrap_or_else(|| PathBuf::from(format!("{name}.csv")));
    let sidecar = Sidecar::new(&name, config.to_toml(), &catalog);
    write_outputs(&base, &tables, sidecar).map_err(|e| Failure::Io(format!("{}: {e}", base.display())))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("i/o error: {msg}");
            ExitCode::from(2)
        }
    }
}
