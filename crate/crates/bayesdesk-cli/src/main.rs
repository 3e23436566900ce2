use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use bayesdesk_cli::experiments::{lookup, run, Flags, REGISTRY};
use bayesdesk_cli::report::{ExperimentReport, Format};
use bayesdesk_cli::{exit_code, DEFAULT_SEED, EXIT_IO, EXIT_UNKNOWN};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bayesdesk", version, about = "Run desk-scale Bayesian computation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Run one experiment and print or save its report
    Run {
        id: String,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Report path; a trace, if any, goes next to it as <stem>.trace.csv
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Record wall time in the report (output is then no longer reproducible)
        #[arg(long)]
        timing: bool,
        #[command(flatten)]
        flags: Flags,
    },
    /// List experiment ids and the flags each one reads
    List,
}

fn write_outputs(report: &ExperimentReport, format: Format, out: Option<&Path>) -> io::Result<()> {
    match out {
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            report.emit(format, &mut lock)?;
            lock.flush()
        }
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            report.emit(format, &mut w)?;
            w.flush()?;
            if let (Some(trace), Format::Csv) = (&report.trace, format) {
                let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                let mut t = BufWriter::new(File::create(path.with_file_name(format!("{stem}.trace.csv")))?);
                trace.write_long(&mut t)?;
                t.flush()?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for e in REGISTRY {
                let flags: Vec<String> = e.flags.iter().map(|f| format!("--{f}")).collect();
                println!("{:<20} {}  [{}]", e.id, e.summary, flags.join(" "));
            }
            ExitCode::SUCCESS
        }
        Command::Run { id, seed, out, format, timing, flags } => {
            let Some(exp) = lookup(&id) else {
                eprintln!("unknown experiment {id:?}; `bayesdesk list` shows the registry");
                return ExitCode::from(EXIT_UNKNOWN as u8);
            };
            let start = Instant::now();
            let mut report = match run(exp, &flags, seed) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("{id}: {e}");
                    return ExitCode::from(exit_code(&e) as u8);
                }
            };
            if timing {
                report.wall_time_ms = Some(start.elapsed().as_millis() as u64);
            }
            if let Err(e) = write_outputs(&report, format, out.as_deref()) {
                eprintln!("{id}: {e}");
                return ExitCode::from(EXIT_IO as u8);
            }
            ExitCode::SUCCESS
        }
    }
}
