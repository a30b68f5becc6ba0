use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use tcsim::perturbation::CorrectedVariant;
use tcsim::runner::{self, OutputFormat, Overrides};
use tcsim::Error;

/// Drives the library from flat `key = value` run configurations; all of
/// the physics lives behind `tcsim::runner`.
#[derive(Parser)]
#[command(name = "tcsim", version, about = "Collective cavity dynamics runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Printed,
    Cos2,
    Derived,
}

#[derive(clap::Args, Clone, Default)]
struct OverrideArgs {
    /// Output file format, overriding the config's `format` key.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Output directory, overriding the config's `out` key.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the run; 0 uses the process default.
    #[arg(long)]
    threads: Option<usize>,
    /// Shape of the phase-corrected photon series.
    #[arg(long, value_enum)]
    corrected_variant: Option<VariantArg>,
}

impl OverrideArgs {
    fn into_overrides(self) -> Overrides {
        Overrides {
            format: self.format.map(|f| match f {
                FormatArg::Csv => OutputFormat::Csv,
                FormatArg::Json => OutputFormat::Json,
            }),
            out: self.out,
            threads: self.threads,
            corrected_variant: self.corrected_variant.map(|v| match v {
                VariantArg::Printed => CorrectedVariant::Printed,
                VariantArg::Cos2 => CorrectedVariant::Cos2,
                VariantArg::Derived => CorrectedVariant::Derived,
            }),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Execute one configured experiment and write its data file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Resolve a configuration and print the result without running it.
    Validate { config: PathBuf },
    /// Expand `sweep.<key> = v1,v2,...` axes and run every member.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Recompute comparison statistics from previously written data files.
    Report { files: Vec<PathBuf> },
}

fn read_config(path: &PathBuf) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| {
        Error::Config(vec![format!("cannot read {}: {e}", path.display())])
    })
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, overrides } => {
            let text = read_config(&config)?;
            let mut cfg = runner::resolve(&text)?;
            overrides.into_overrides().apply(&mut cfg);
            for w in &cfg.warnings {
                eprintln!("warning: {w}");
            }
            let path = runner::run(&cfg)?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Validate { config } => {
            let text = read_config(&config)?;
            let cfg = runner::resolve(&text)?;
            for (k, v) in cfg.metadata() {
                println!("{k} = {v}");
            }
            Ok(())
        }
        Command::Sweep { config, overrides } => {
            let text = read_config(&config)?;
            let paths = runner::sweep(&text, &overrides.into_overrides())?;
            for p in paths {
                println!("{}", p.display());
            }
            Ok(())
        }
        Command::Report { files } => {
            if files.is_empty() {
                return Err(Error::Config(vec![
                    "report needs at least one data file".to_string(),
                ]));
            }
            let text = runner::report(&files)?;
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
