//! `sim`: run configurations, print presets, compare and verify run directories.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cqed_dirac::error::ErrorCategory;
use cqed_dirac::runner::{self, Manifest, PRESET_NAMES};
use cqed_dirac::{Error, Result};

#[derive(Parser)]
#[command(name = "sim", version, about = "Circuit-QED Dirac equation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a TOML configuration
    Run { config: PathBuf },
    /// Print a preset configuration, or list presets when no name is given
    Preset {
        name: Option<String>,
        /// Write to this file instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two run directories produced from the same configuration shape
    Compare {
        dir_a: PathBuf,
        dir_b: PathBuf,
        /// Print the report as JSON
        #[arg(long)]
        json: bool,
    },
    /// Check artifact checksums against a run directory's manifest
    Verify { dir: PathBuf },
}

fn exit_code(e: &Error) -> u8 {
    match e.category() {
        ErrorCategory::Validation => 2,
        ErrorCategory::Integration => 3,
        ErrorCategory::Analysis => 4,
        ErrorCategory::Io => 5,
    }
}

fn run(config: PathBuf) -> Result<()> {
    let out = runner::run(&config)?;
    let m = &out.manifest;
    println!("{} -> {} ({} workers)", m.name, out.dir.display(), m.workers);
    for r in &m.runs {
        let mut line = format!("  {:<20} {:>8.2} s", r.id, r.wall_s);
        if let Some(v) = r.sweep_value {
            line += &format!("  {}={v}", m.sweep_parameter.as_deref().unwrap_or("sweep"));
        }
        if let Some(t) = r.transmission {
            line += &format!("  transmission={t:.3}");
        }
        if let Some(p) = &r.peaks_mhz {
            let shown: Vec<String> = p.iter().take(6).map(|f| format!("{f:.5}")).collect();
            line += &format!("  peaks_mhz=[{}]", shown.join(", "));
        }
        if let Some(d) = r.diagnostics.dt_halving_delta {
            line += &format!("  dt_check={d:.1e}");
        }
        println!("{line}");
    }
    Ok(())
}

fn preset(name: Option<String>, out: Option<PathBuf>) -> Result<()> {
    let Some(name) = name else {
        for n in PRESET_NAMES {
            println!("{n}");
        }
        return Ok(());
    };
    let text = runner::preset(&name)?;
    match out {
        Some(path) => fs::write(&path, text).map_err(|e| Error::io(&path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn compare(a: PathBuf, b: PathBuf, json: bool) -> Result<()> {
    let report = runner::compare(&a, &b)?;
    if json {
        println!("{}", report.to_json()?);
    } else {
        print!("{}", report.summary());
    }
    Ok(())
}

fn verify(dir: PathBuf) -> Result<()> {
    let m = Manifest::read(&dir)?;
    let bad = m.verify(&dir)?;
    if bad.is_empty() {
        println!("{}: all checksums match", dir.display());
        Ok(())
    } else {
        let msg = format!("checksum mismatch: {}", bad.join(", "));
        Err(Error::io(&dir, std::io::Error::other(msg)))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => run(config),
        Command::Preset { name, out } => preset(name, out),
        Command::Compare { dir_a, dir_b, json } => compare(dir_a, dir_b, json),
        Command::Verify { dir } => verify(dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
