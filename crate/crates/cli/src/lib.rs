//! Batch driver: reads a JSON run configuration and writes CSV tables (and
//! optionally SVG plots) for one of the library's computations.

pub mod commands;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use commands::{CliError, Report};
use config::RunConfig;
use output::write_atomic;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Validate,
    Orthopoly,
    Asymptotics,
    Zeros,
    KernelCheck,
}

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub svg: bool,
    pub precision_bits: Option<u32>,
    pub max_len: Option<usize>,
}

pub fn load(path: &Path, o: &Overrides) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let mut cfg = RunConfig::parse(&text).map_err(CliError::Parse)?;
    if let Some(p) = o.precision_bits {
        cfg.precision_bits = p;
    }
    if let Some(l) = o.max_len {
        cfg.family.max_len = l;
    }
    if o.svg && !cfg.wants_svg() {
        cfg.outputs.formats.push(config::Format::Svg);
    }
    if let Some(out) = &o.out {
        cfg.outputs.directory = out.to_string_lossy().into_owned();
    }
    Ok(cfg)
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Report, CliError> {
    match cmd {
        Command::Validate => commands::validate(cfg),
        Command::Orthopoly => commands::orthopoly(cfg),
        Command::Asymptotics => commands::asymptotics(cfg),
        Command::Zeros => commands::zeros(cfg),
        Command::KernelCheck => commands::kernel_check(cfg),
    }
}

/// Writes every table as CSV, and the plots when SVG output is enabled.
/// Returns the written paths in order.
pub fn write(report: &Report, cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let dir = PathBuf::from(&cfg.outputs.directory);
    let hash = cfg.hash();
    let mut written = Vec::new();
    for t in &report.tables {
        let path = dir.join(format!("{}.csv", t.name));
        write_atomic(&path, &t.to_csv(&hash))?;
        written.push(path);
    }
    if cfg.wants_svg() {
        for p in &report.plots {
            let path = dir.join(format!("{}.svg", p.name));
            write_atomic(&path, p.svg.as_bytes())?;
            written.push(path);
        }
    }
    Ok(written)
}
