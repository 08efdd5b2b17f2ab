use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};
use magscat_cli::config::RunConfig;
use magscat_cli::{run, CliError, Command, EXIT_USAGE};

#[derive(Parser, Debug)]
#[command(name = "magscat", version, about = "Fixed-energy magnetic inverse scattering experiments")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized inputs (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Option<Sub>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Sub {
    /// Scattering matrix, far fields and Born comparison.
    Direct,
    /// CGO solutions over the h sweep.
    Cgo,
    /// dbar solver on random sources.
    Cauchy,
    /// Shell recovery of dA and V.
    Reconstruct,
    /// Run the acceptance suite.
    Verify,
}

fn usage(msg: &str) -> ExitCode {
    eprintln!("{msg}\n");
    eprintln!("{}", Cli::command().render_usage());
    ExitCode::from(EXIT_USAGE as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    let (Some(sub), Some(path)) = (cli.command, cli.config.as_ref()) else {
        return usage("a subcommand and --config PATH are required");
    };
    let mut cfg = match RunConfig::load(path) {
        Ok(c) => c,
        Err(CliError::Usage(m)) => return usage(&m),
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Some(o) = cli.out {
        cfg.output_dir = o;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return usage("--threads must be at least 1");
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("cannot set thread count: {e}");
            return ExitCode::from(EXIT_USAGE as u8);
        }
    }
    let command = match sub {
        Sub::Direct => Command::Direct,
        Sub::Cgo => Command::Cgo,
        Sub::Cauchy => Command::Cauchy,
        Sub::Reconstruct => Command::Reconstruct,
        Sub::Verify => Command::Verify,
    };
    match run(command, &cfg) {
        Ok(report) => {
            // verify already streamed its lines
            let skip = if command == Command::Verify { report.lines.len().saturating_sub(1) } else { 0 };
            for l in &report.lines[skip..] {
                println!("{l}");
            }
            ExitCode::from(report.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
