use std::path::PathBuf;
use std::process::ExitCode;

use afc_cli::config::ModelChoice;
use afc_cli::{parse_config, run, CliError, Command, Context};
use afc_core::{Execution, NormalizedUnits};
use clap::{Parser, Subcommand};

/// Atomic-frequency-comb storage simulator.
///
/// All files use normalized units: frequencies in nu0, times in T = pi/nu0,
/// intensities in I0.
#[derive(Parser, Debug)]
#[command(name = "afc", version)]
struct Cli {
    /// `key = value` configuration file; omitted keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV artifacts.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Override the configured response model.
    #[arg(long, global = true, value_parser = ["ideal", "broadened"])]
    model: Option<String>,
    /// Override the number of echoes kept.
    #[arg(long = "k-max", global = true)]
    k_max: Option<usize>,
    /// Convert output columns to physical units, e.g. `nu0=1` (MHz).
    #[arg(long, global = true, value_name = "nu0=<MHz>", value_parser = parse_physical)]
    physical: Option<NormalizedUnits>,
    /// Evaluate grids on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    /// Reserved. Nothing here draws random numbers, so there is no seed to drop.
    #[arg(long, global = true, hide = true)]
    seedless: bool,
    /// Print the canonical form of the effective configuration to stderr.
    #[arg(long, global = true)]
    echo_config: bool,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Absorption and dispersion over `spectrum_span` periods.
    Spectrum,
    /// Sampled transfer function of the medium.
    Transfer,
    /// Propagate a Gaussian pulse and extract the echo train.
    Propagate,
    /// Echo-train coefficients without a time-domain simulation.
    Train,
    /// Storage efficiency, closed form and simulated.
    Protocol {
        /// Backward pass through the same medium after the first.
        #[arg(long)]
        two_pass: bool,
    },
    /// Parameter sweep with argmax.
    Sweep,
    /// Regenerate a reference figure or number (`all` for every target).
    Reproduce { target: String },
    /// List reproduction targets.
    Targets,
}

fn parse_physical(s: &str) -> Result<NormalizedUnits, String> {
    let v = s
        .strip_prefix("nu0=")
        .ok_or_else(|| format!("expected nu0=<value>, got `{s}`"))?;
    match v.trim().parse::<f64>() {
        Ok(x) if x.is_finite() && x > 0.0 => Ok(NormalizedUnits::new(x)),
        _ => Err(format!("nu0 must be a positive number, got `{v}`")),
    }
}

fn execute(cli: Cli) -> Result<ExitCode, CliError> {
    if cli.seedless {
        return Err(CliError::Usage(
            "--seedless is reserved: the simulator is deterministic and uses no random numbers".into(),
        ));
    }
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?,
        None => String::new(),
    };
    let mut config = parse_config(&text)?;
    if let Some(m) = &cli.model {
        config.model = m.parse::<ModelChoice>().map_err(CliError::Usage)?;
    }
    if let Some(k) = cli.k_max {
        if k == 0 {
            return Err(CliError::Usage("--k-max must be at least 1".into()));
        }
        config.k_max = k;
    }
    let command = match cli.command {
        Sub::Spectrum => Command::Spectrum,
        Sub::Transfer => Command::Transfer,
        Sub::Propagate => Command::Propagate,
        Sub::Train => Command::Train,
        Sub::Protocol { two_pass } => {
            config.two_pass |= two_pass;
            Command::Protocol
        }
        Sub::Sweep => Command::Sweep,
        Sub::Reproduce { target } => Command::Reproduce(target),
        Sub::Targets => {
            for (name, what) in afc_cli::reproduce::TARGETS {
                println!("{name:<12} {what}");
            }
            return Ok(ExitCode::SUCCESS);
        }
    };
    if cli.echo_config {
        eprint!("{}", config.canonical());
    }
    let ctx = Context {
        config,
        out_dir: cli.out,
        physical: cli.physical,
        exec: if cli.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
    };
    let outcome = run(&command, &ctx)?;
    for path in &outcome.artifacts {
        eprintln!("wrote {}", path.display());
    }
    println!("{}", outcome.summary);
    if outcome.failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for f in &outcome.failures {
            eprintln!("regression: {f}");
        }
        Ok(ExitCode::from(2))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
