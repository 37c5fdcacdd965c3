use std::io::{IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use gaitforge::cli::{self, RunConfig, BUILTIN, EXIT_INPUT_ERROR};
use gaitforge::gait::DEFAULT_STAGE_DURATION_MS;

#[derive(Parser)]
#[command(
    name = "gaitforge",
    version,
    about = "Biped gait simulator and stability analyzer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Geometry/mass config (key=value lines)
    #[arg(long)]
    geometry: Option<PathBuf>,
    /// Servo config (one line per joint)
    #[arg(long)]
    servos: Option<PathBuf>,
    /// Gait table file, or `builtin`
    #[arg(long, default_value = BUILTIN)]
    gait: String,
    #[arg(long = "stage-ms", default_value_t = DEFAULT_STAGE_DURATION_MS)]
    stage_ms: u64,
    #[arg(long, default_value_t = 1)]
    cycles: usize,
    /// CSV output path; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, cli::CliError> {
        RunConfig::load(
            self.geometry.as_deref(),
            self.servos.as_deref(),
            &self.gait,
            self.stage_ms,
            self.cycles,
        )
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate the walking trajectory and analyze every frame
    Walk(RunArgs),
    /// Range-check a gait table and compare it with the narrative directions
    Validate {
        #[arg(long, default_value = BUILTIN)]
        gait: String,
        /// Narrative direction file, or `builtin`
        #[arg(long, default_value = BUILTIN)]
        narrative: String,
        #[arg(long)]
        servos: Option<PathBuf>,
    },
    /// Replay a command script through the master/slave emulator
    Replay {
        script: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Wire log path; stdout when absent
        #[arg(long = "wire-log")]
        wire_log: Option<PathBuf>,
    },
    /// Print a gait table in canonical form
    Table {
        #[arg(default_value = BUILTIN)]
        source: String,
    },
}

fn color_enabled() -> bool {
    std::env::var_os("GAITFORGE_NO_COLOR").is_none() && std::io::stdout().is_terminal()
}

fn write_output(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let color = color_enabled();
    match cli.command {
        Command::Walk(args) => {
            let cfg = args.config()?;
            let outcome = cli::walk(&cfg)?;
            write_output(args.out.as_ref(), &outcome.report.to_csv())?;
            let summary = outcome.report.summary(color);
            if args.out.is_some() {
                print!("{summary}");
            } else {
                eprint!("{summary}");
            }
            Ok(outcome.exit_code)
        }
        Command::Validate {
            gait,
            narrative,
            servos,
        } => {
            let servos = match servos {
                Some(p) => gaitforge::ServoBank::from_config_str(&cli::read_file(&p)?)
                    .with_context(|| p.display().to_string())?,
                None => gaitforge::ServoBank::default(),
            };
            let table = cli::load_table_for_validation(&gait)?;
            let narrative = cli::load_narrative(&narrative)?;
            let outcome = cli::validate(&table, &narrative, &servos, color)?;
            print!("{}", outcome.text);
            Ok(outcome.exit_code)
        }
        Command::Replay {
            script,
            run,
            wire_log,
        } => {
            let cfg = run.config()?;
            let steps = cli::parse_script(&cli::read_file(&script)?)?;
            let outcome = cli::replay(&steps, &cfg)?;
            let mut log = outcome.wire_log.join("\n");
            if !log.is_empty() {
                log.push('\n');
            }
            write_output(wire_log.as_ref(), &log)?;
            match run.out.as_ref() {
                Some(p) => {
                    write_output(Some(p), &outcome.report.to_csv())?;
                    eprint!("{}", outcome.report.summary(color));
                }
                None => eprint!("{}", outcome.report.summary(color)),
            }
            Ok(outcome.exit_code)
        }
        Command::Table { source } => {
            print!("{}", cli::table(&source)?);
            Ok(cli::EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT_ERROR)
        }
    }
}
