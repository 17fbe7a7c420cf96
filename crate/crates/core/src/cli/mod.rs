//! The `tnoise` command line: `gen`, `analyze`, `decode`, `evaluate` and
//! `serve`.
//!
//! Every command writes below the output directory (`--out`, or the
//! `TNOISE_OUT` environment variable). Invalid input exits with status 2,
//! I/O failures with status 3.

mod analyze;
mod decode;
mod error;
mod evaluate;
mod gen;
pub mod serve;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub use error::CliError;

use crate::encoder::FrameSequence;
use crate::flow::FlowOptions;
use crate::store::{read_png_sequence, read_y4m_file, write_document, SchemaTag};

#[derive(Debug, Parser)]
#[command(name = "tnoise", version, about = "Temporal-noise video toolkit")]
pub struct Cli {
    /// Directory that outputs are written to.
    #[arg(long, global = true, env = "TNOISE_OUT", default_value = "tnoise-out")]
    pub out: PathBuf,
    /// Worker threads for per-video work; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encode content into videos and record them in the manifest.
    Gen(Box<gen::GenArgs>),
    /// Compute the four SNR metrics per video and a per-category table.
    Analyze(analyze::AnalyzeArgs),
    /// Recover the hidden region of a video from its motion.
    Decode(decode::DecodeArgs),
    /// Score identification responses against manifest labels.
    Evaluate(evaluate::EvaluateArgs),
    /// Serve sessions, frames and response collection over HTTP.
    Serve(serve::ServeArgs),
}

/// Block-matching settings shared by `analyze` and `decode`.
#[derive(Debug, Clone, Args)]
pub struct FlowArgs {
    /// Block radius in pixels.
    #[arg(long, default_value_t = FlowOptions::default().window)]
    pub window: usize,
    /// Largest displacement searched, pixels per frame.
    #[arg(long, default_value_t = FlowOptions::default().max_disp)]
    pub max_disp: usize,
    /// Pyramid levels.
    #[arg(long, default_value_t = FlowOptions::default().levels)]
    pub levels: usize,
    /// Box-filter radius applied to each flow field.
    #[arg(long, default_value_t = FlowOptions::default().smoothing)]
    pub smoothing: usize,
}

impl FlowArgs {
    pub fn options(&self) -> FlowOptions {
        FlowOptions {
            window: self.window,
            max_disp: self.max_disp,
            levels: self.levels,
            smoothing: self.smoothing,
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen(a) => gen::run(&cli.out, cli.jobs, *a),
        Command::Analyze(a) => analyze::run(&cli.out, cli.jobs, a),
        Command::Decode(a) => decode::run(&cli.out, a),
        Command::Evaluate(a) => evaluate::run(&cli.out, a),
        Command::Serve(a) => serve::run(a),
    }
}

/// Parse `args` (program name first), run the command and turn the outcome
/// into an exit status.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// A Y4M file, or a directory of PNG frames.
fn read_video(path: &Path) -> Result<FrameSequence, CliError> {
    if !path.exists() {
        return Err(CliError::Io(format!("{}: no such file or directory", path.display())));
    }
    Ok(if path.is_dir() {
        read_png_sequence(path)?
    } else {
        read_y4m_file(path)?
    })
}

/// Load a mask image given as argument `field`; I/O failures name the file.
fn load_mask_arg(path: &Path, dims: (usize, usize), field: &str) -> Result<crate::types::ContentMask, CliError> {
    crate::mask::load_mask_file(path, Some(dims)).map_err(|e| match e {
        crate::mask::MaskError::Io(io) => error::io_at(path)(io),
        other => CliError::from(other).at(field),
    })
}

/// File stem used to name per-video outputs.
fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "video".to_string())
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(error::io_at(dir))
}

fn write_doc<T: serde::Serialize + SchemaTag>(path: &Path, doc: &T) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    Ok(write_document(path, doc)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn every_subcommand_parses_its_defaults() {
        for args in [
            &["tnoise", "gen", "text", "HI"][..],
            &["tnoise", "gen", "shape", "circle"],
            &["tnoise", "analyze"],
            &["tnoise", "decode", "v.y4m"],
            &["tnoise", "decode", "v.y4m", "--coherence-seam", "none", "--threshold", "p90"],
            &["tnoise", "evaluate", "--responses", "r.ndjson"],
            &["tnoise", "serve", "--manifest", "m", "--sessions", "s", "--responses", "r"],
        ] {
            Cli::try_parse_from(args).unwrap_or_else(|e| panic!("{args:?}: {e}"));
        }
    }
}
