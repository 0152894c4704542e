use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;
use projflat::commands::{parse_route, parse_vector, phi, trace, write_trace};
use projflat::{verify, BundleConfig, CliError, VerifyOptions, EXIT_FAIL, EXIT_PASS, EXIT_USAGE};
use projflat_core::SprayRoute;

/// Build and certify projectively flat general (α,β)-metrics.
#[derive(Debug, Parser)]
#[command(name = "projflat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the verification suite and write a JSON report.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Report path; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides sample.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Multiplies every tolerance.
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
    /// Integrate one geodesic and write it as CSV.
    Trace {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated start point.
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        /// Comma-separated initial velocity.
        #[arg(long, allow_hyphen_values = true)]
        y0: String,
        /// End time.
        #[arg(long, short = 't', default_value_t = 1.0)]
        time: f64,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, value_parser = parse_route, default_value = "general")]
        route: SprayRoute,
        /// CSV path; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print φ, its partials and the spray scalars at one (b², s).
    Phi {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        b2: f64,
        #[arg(long, allow_hyphen_values = true)]
        s: f64,
    },
}

fn output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Verify { config, out, seed, tol_scale } => {
            let cfg = BundleConfig::load(&config)?;
            let report = verify(&cfg, VerifyOptions { seed, tol_scale })?;
            let mut w = output(out.as_deref())?;
            w.write_all(report.to_json().as_bytes())?;
            w.flush()?;
            eprint!("{}", report.summary());
            Ok(if report.pass { EXIT_PASS } else { EXIT_FAIL })
        }
        Command::Trace { config, x0, y0, time, steps, route, out } => {
            let cfg = BundleConfig::load(&config)?;
            let x0 = parse_vector(&x0).map_err(|e| CliError::Usage(format!("--x0 {e}")))?;
            let y0 = parse_vector(&y0).map_err(|e| CliError::Usage(format!("--y0 {e}")))?;
            let path = trace(&cfg, &x0, &y0, time, steps, route)?;
            let mut w = output(out.as_deref())?;
            write_trace(&path, &mut w)?;
            w.flush()?;
            Ok(if path.is_complete() { EXIT_PASS } else { EXIT_FAIL })
        }
        Command::Phi { config, b2, s } => {
            let cfg = BundleConfig::load(&config)?;
            let r = phi(&cfg, b2, s)?;
            let text = serde_json::to_string_pretty(&r).map_err(|e| CliError::Usage(e.to_string()))?;
            let mut w = output(None)?;
            writeln!(w, "{text}")?;
            w.flush()?;
            Ok(EXIT_PASS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PROJFLAT_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
