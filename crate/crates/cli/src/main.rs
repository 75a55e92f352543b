use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use homogeom_cli::report::render;
use homogeom_cli::{exit_code, run, suite, Format, PolicySpec, RunOptions, Scenario};

#[derive(Parser)]
#[command(name = "homogeom", version, about = "Check homogeneous G-structure scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file.
    Run {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run every scenario under a directory.
    Suite {
        dir: PathBuf,
        /// Glob over paths relative to the directory, e.g. `riemannian/*`.
        #[arg(long)]
        filter: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// JSON instead of TOML.
    #[arg(long)]
    json: bool,
    /// Include wall-clock timings; reports are then no longer reproducible.
    #[arg(long)]
    timing: bool,
}

impl Common {
    fn options(&self) -> (RunOptions, Format) {
        let policy = PolicySpec { seed: self.seed, samples: self.samples, tolerance: self.tol };
        (RunOptions { policy, timing: self.timing }, if self.json { Format::Json } else { Format::Toml })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { file, common } => {
            let (opts, format) = common.options();
            match Scenario::load(&file).and_then(|sc| run(&sc, &opts)) {
                Ok(report) => {
                    print!("{}", render(&report, format));
                    exit_code(&report)
                }
                Err(e) => {
                    eprintln!("error: {}: {e}", file.display());
                    2
                }
            }
        }
        Command::Suite { dir, filter, common } => {
            let (opts, format) = common.options();
            match suite(&dir, filter.as_deref(), &opts) {
                Ok(report) => {
                    print!("{}", render(&report, format));
                    for e in &report.errors {
                        eprintln!("error: {}: {}", e.file, e.error);
                    }
                    let s = &report.summary;
                    eprintln!(
                        "{} scenarios: {} passed, {} failed, {} with FALSIFICATION ({} events), {} input errors",
                        s.scenarios, s.passed, s.failed, s.falsified, s.falsification_events, s.input_errors
                    );
                    report.exit_code()
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    2
                }
            }
        }
    };
    ExitCode::from(code as u8)
}
