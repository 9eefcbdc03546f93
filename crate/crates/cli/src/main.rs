use std::path::PathBuf;
use std::process::ExitCode;

use bergman_cmcd_cli::{load, run, write, Command, Overrides};
use clap::{Parser, ValueEnum};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Sub {
    Validate,
    Orthopoly,
    Asymptotics,
    Zeros,
    KernelCheck,
}

/// Bergman orthogonal polynomials on circular multiply connected domains.
#[derive(Debug, Parser)]
#[command(name = "bergman-cmcd", version)]
struct Args {
    #[arg(value_enum)]
    command: Sub,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `outputs.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write SVG plots.
    #[arg(long)]
    svg: bool,
    #[arg(long)]
    precision_bits: Option<u32>,
    #[arg(long)]
    max_len: Option<usize>,
}

fn threads() {
    if let Some(n) = std::env::var("BERGMAN_CMCD_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    threads();
    let cmd = match args.command {
        Sub::Validate => Command::Validate,
        Sub::Orthopoly => Command::Orthopoly,
        Sub::Asymptotics => Command::Asymptotics,
        Sub::Zeros => Command::Zeros,
        Sub::KernelCheck => Command::KernelCheck,
    };
    let o = Overrides { out: args.out, svg: args.svg, precision_bits: args.precision_bits, max_len: args.max_len };
    let result = load(&args.config, &o).and_then(|cfg| {
        let report = run(cmd, &cfg)?;
        let files = write(&report, &cfg)?;
        Ok((report, files))
    });
    match result {
        Ok((report, files)) => {
            for line in &report.summary {
                println!("{line}");
            }
            for f in &files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
