use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use cmm::cli::{self, Command, ConfigSource};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sub {
    Generate,
    Train,
    Compare,
    Gradcheck,
    Curves,
    Eval,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Generate => Command::Generate,
            Sub::Train => Command::Train,
            Sub::Compare => Command::Compare,
            Sub::Gradcheck => Command::Gradcheck,
            Sub::Curves => Command::Curves,
            Sub::Eval => Command::Eval,
        }
    }
}

/// Concentrated margin loss experiments. All settings live in the JSON config.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    command: Sub,
    /// JSON config; omitted means `{}`, i.e. all defaults.
    config: Option<PathBuf>,
    /// Output directory, placed under $CMM_OUTPUT_ROOT when that is set.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let command = Command::from(args.command);
    let out = cli::output_dir_from_env(args.out.as_deref(), command);
    let result = match &args.config {
        Some(path) => ConfigSource::load(path),
        None => Ok(ConfigSource::empty()),
    }
    .and_then(|source| cli::run(command, &source, &out));
    match result {
        Ok(summary) => {
            for a in &summary.artifacts {
                println!("{}", out.join(a).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("cmm {command}: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
