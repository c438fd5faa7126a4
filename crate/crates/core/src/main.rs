use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wavecorr::cli::{cmd_coherence, cmd_compare, cmd_describe, ConfigLayer, RunConfig, OUT_ENV};
use wavecorr::Result;

/// Wavelet coherence co-movement analysis of financial price series.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Descriptive statistics of daily log returns.
    Describe(Args),
    /// Wavelet coherence, significance and correlation tracks per pair.
    Coherence(Args),
    /// Unconditional, DCC and wavelet correlations side by side.
    Compare(Args),
}

#[derive(clap::Args)]
struct Args {
    /// TOML file with default settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    layer: ConfigLayer,
}

fn resolve(args: &Args) -> Result<RunConfig> {
    let env = ConfigLayer { out: std::env::var_os(OUT_ENV).map(PathBuf::from), ..Default::default() };
    let file = args.config.as_deref().map(ConfigLayer::from_toml_file).transpose()?.unwrap_or_default();
    let cfg = RunConfig::resolve(&[&env, &file, &args.layer])?;
    if cfg.threads > 0 {
        // fails only if a pool already exists, which cannot happen this early
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Describe(args) => {
            let cfg = resolve(&args)?;
            let files = cmd_describe(&cfg)?;
            print_table(&cfg.out.join("describe.txt"))?;
            report(&files);
            Ok(0)
        }
        Command::Coherence(args) => {
            let cfg = resolve(&args)?;
            report(&cmd_coherence(&cfg)?);
            Ok(0)
        }
        Command::Compare(args) => {
            let cfg = resolve(&args)?;
            let outcome = cmd_compare(&cfg)?;
            print_table(&cfg.out.join("compare.txt"))?;
            report(&outcome.files);
            if let Some(e) = &outcome.dcc_error {
                eprintln!("DCC fit failed: {e}");
            }
            Ok(outcome.exit_code)
        }
    }
}

/// Prints a text table without its metadata header.
fn print_table(path: &std::path::Path) -> Result<()> {
    let text = std::fs::read_to_string(path)?;
    text.lines().filter(|l| !l.starts_with("# ")).for_each(|l| println!("{l}"));
    Ok(())
}

fn report(files: &[PathBuf]) {
    for f in files {
        eprintln!("wrote {}", f.display());
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
