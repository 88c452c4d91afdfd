mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Failure;
use config::RunConfig;

/// Numerical laboratory for the nu-loss of regularity of hyperbolic magnetic
/// Schrodinger equations.
///
/// Any configuration leaf can be overridden with a dotted flag, for example
/// `--zones.P=10` or `--coefficient.b "2 + cos(log(1/t))"`.
#[derive(Parser, Debug)]
#[command(name = "nuloss", version)]
struct Cli {
    /// JSON run configuration; defaults apply to anything left out.
    #[arg(short, long, global = true)]
    config: Option<std::path::PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenvalues of the magnetic operator on the configured domain.
    Eigen {
        #[arg(long, default_value_t = 20)]
        count: usize,
    },
    /// Zone of every (t, lambda) pair on a geometric grid.
    Zones {
        /// Frequencies 2^0 .. 2^N.
        #[arg(long, default_value_t = 20)]
        lambda_max_exp: i32,
        #[arg(long, default_value_t = 41)]
        times: usize,
    },
    /// Mode trajectories from data (1/lambda, 1).
    Solve {
        #[arg(long = "lambda", default_values_t = [64.0])]
        lambdas: Vec<f64>,
    },
    /// Fits the loss constant c1 of the energy estimate.
    Verify {
        #[arg(long, default_value_t = 3)]
        lambda_min_exp: i32,
        #[arg(long, default_value_t = 12)]
        lambda_max_exp: i32,
        #[arg(long, default_value_t = 8)]
        per_octave: u32,
    },
    /// Builds the oscillating family and its blow-up table.
    Counterexample,
    /// Loss-of-regularity class of the configured nu.
    Classify,
}

/// Splits `--section.key=value` and `--section.key value` from the rest.
fn split_overrides(args: Vec<String>) -> (Vec<String>, Vec<String>) {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        match arg.strip_prefix("--") {
            Some(flag) if flag.split('=').next().is_some_and(|k| k.contains('.')) => {
                if flag.contains('=') {
                    overrides.push(flag.to_string());
                } else if let Some(value) = iter.next() {
                    overrides.push(format!("{flag}={value}"));
                } else {
                    overrides.push(flag.to_string());
                }
            }
            _ => rest.push(arg),
        }
    }
    (rest, overrides)
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("NULOSS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Config(format!("NULOSS_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Config(format!("cannot size thread pool: {e}")))
}

fn run(cli: Cli, overrides: &[String]) -> Result<Vec<std::path::PathBuf>, Failure> {
    configure_threads()?;
    let text = match &cli.config {
        Some(path) => Some(
            std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?,
        ),
        None => None,
    };
    let config = RunConfig::load(text.as_deref(), overrides)?;
    match cli.command {
        Command::Eigen { count } => commands::eigen(&config, count),
        Command::Zones { lambda_max_exp, times } => commands::zones(&config, lambda_max_exp, times),
        Command::Solve { lambdas } => commands::solve(&config, &lambdas),
        Command::Verify { lambda_min_exp, lambda_max_exp, per_octave } => {
            commands::verify(&config, lambda_min_exp, lambda_max_exp, per_octave)
        }
        Command::Counterexample => commands::counterexample(&config),
        Command::Classify => commands::classify(&config),
    }
}

fn main() -> ExitCode {
    let (args, overrides) = split_overrides(std::env::args().collect());
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli, &overrides) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("nuloss: {failure}");
            ExitCode::from(failure.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dotted_flags_become_overrides() {
        let args = ["nuloss", "verify", "--zones.P=10", "--coefficient.b", "2 + cos(t)", "--per-octave", "4"];
        let (rest, overrides) = split_overrides(args.iter().map(|s| s.to_string()).collect());
        assert_eq!(rest, ["nuloss", "verify", "--per-octave", "4"]);
        assert_eq!(overrides, ["zones.P=10", "coefficient.b=2 + cos(t)"]);
    }
}
