use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};

use super::gen::MANIFEST_FILE;
use super::{write_doc, CliError};
use crate::eval::{
    judge, perceptibility_summary, render_accuracy_table, render_fps_table, render_perceptibility_table,
    render_threshold_table, score_with, snr_threshold_analysis, Roster, ScoreOptions, ScoredVideo,
};
use crate::metrics::{Db, SnrReport};
use crate::store::{read_document, read_responses, Manifest};

const EVAL_DIR: &str = "evaluation";

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Manifest holding the label sets [default: <out>/manifest.json].
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Response log (NDJSON).
    #[arg(long)]
    responses: PathBuf,
    /// Also tabulate accuracy by frame rate shown.
    #[arg(long)]
    per_fps: bool,
    /// Also tabulate perceptibility ratings per responder.
    #[arg(long)]
    perceptibility: bool,
    /// Assignments document; unanswered assignments count as incorrect.
    #[arg(long)]
    roster: Option<PathBuf>,
    /// List every incorrect answer.
    #[arg(long)]
    verbose: bool,
    /// Bin accuracy by SNR and look for a sharp step.
    #[arg(long, requires = "snr_from")]
    threshold_analysis: bool,
    /// Directory of `<video_id>.snr.json` reports written by `analyze`.
    #[arg(long)]
    snr_from: Option<PathBuf>,
    /// SNR bin width in dB.
    #[arg(long, default_value_t = 1.0)]
    bin_width: f64,
    /// Metric placed on the SNR axis.
    #[arg(long, value_enum, default_value = "combined")]
    snr_metric: SnrMetric,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SnrMetric {
    Basic,
    Perceptual,
    Coherence,
    Contrast,
    Combined,
}

impl SnrMetric {
    fn pick(self, r: &SnrReport) -> Db {
        match self {
            SnrMetric::Basic => r.basic_db,
            SnrMetric::Perceptual => r.perceptual_db,
            SnrMetric::Coherence => r.temporal_coherence_db,
            SnrMetric::Contrast => r.motion_contrast_db,
            SnrMetric::Combined => r.combined_db,
        }
    }
}

pub fn run(out: &Path, args: EvaluateArgs) -> Result<(), CliError> {
    let manifest = Manifest::read(&args.manifest.clone().unwrap_or_else(|| out.join(MANIFEST_FILE)))?;
    let labels = manifest.label_sets();
    let responses = read_responses(&args.responses)?;
    let roster: Option<Roster> = args.roster.as_deref().map(read_document).transpose()?;
    let opts = ScoreOptions {
        roster: roster.as_ref().map(|r| r.assignments.as_slice()),
        verbose: args.verbose,
    };
    let report = score_with(&responses, &labels, &opts)?;
    let dir = out.join(EVAL_DIR);
    write_doc(&dir.join("accuracy.json"), &report)?;
    print!("{}", render_accuracy_table(&report));
    if args.per_fps {
        println!();
        print!("{}", render_fps_table(&report));
    }
    if args.perceptibility {
        println!();
        print!("{}", render_perceptibility_table(&perceptibility_summary(&responses, &labels)?));
    }
    if args.verbose && !report.incorrect.is_empty() {
        println!();
        for r in &report.incorrect {
            println!("incorrect: {} by {}: {:?}", r.video_id, r.responder_id, r.response_text);
        }
    }

    if args.threshold_analysis {
        let snr_dir = args.snr_from.as_deref().expect("required by clap");
        let judged = judge(&responses, &labels)?;
        let mut scored = Vec::with_capacity(judged.len());
        for j in &judged {
            let id = &j.response.video_id;
            let report: SnrReport = read_document(&snr_dir.join(format!("{id}.snr.json")))?;
            let snr_db = args.snr_metric.pick(&report).finite().ok_or_else(|| {
                CliError::invalid("snr_from", "NonFiniteSnr", format!("`{id}` has no finite {:?} SNR", args.snr_metric))
            })?;
            scored.push(ScoredVideo {
                video_id: id.clone(),
                snr_db,
                correct: j.correct,
            });
        }
        let threshold = snr_threshold_analysis(&scored, args.bin_width)?;
        write_doc(&dir.join("threshold.json"), &threshold)?;
        println!();
        print!("{}", render_threshold_table(&threshold));
    }
    println!("reports: {}", dir.display());
    Ok(())
}
