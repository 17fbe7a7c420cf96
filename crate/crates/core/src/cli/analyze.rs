use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};

use super::gen::MANIFEST_FILE;
use super::{load_mask_arg, read_video, stem, write_doc, CliError, FlowArgs};
use crate::dataset::{analyze_manifest, render_snr_table, summarize_by_category, EntryAnalysis};
use crate::metrics::{analyze_video, MaskSource, MetricConfig, SnrReport};
use crate::store::Manifest;

const REPORTS_DIR: &str = "reports";

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Manifest whose videos are analyzed [default: <out>/manifest.json].
    #[arg(long, conflicts_with = "video")]
    manifest: Option<PathBuf>,
    /// A single Y4M file or PNG-sequence directory instead of a manifest.
    #[arg(long)]
    video: Option<PathBuf>,
    /// Ground-truth mask image for `--video`.
    #[arg(long, requires = "video")]
    mask: Option<PathBuf>,
    /// Mask the motion-contrast metric is computed against.
    #[arg(long, value_enum, default_value = "gt")]
    mask_source: MaskSourceArg,
    /// Only these video ids, comma separated.
    #[arg(long, value_delimiter = ',')]
    ids: Vec<String>,
    #[command(flatten)]
    flow: FlowArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MaskSourceArg {
    Gt,
    Estimated,
}

fn describe(report: &SnrReport) -> String {
    let mut line = format!(
        "basic {} dB, perceptual {} dB, coherence {} dB, contrast {} dB, combined {} dB",
        report.basic_db,
        report.perceptual_db,
        report.temporal_coherence_db,
        report.motion_contrast_db,
        report.combined_db
    );
    if report.contentless {
        line += " [contentless]";
    }
    line
}

pub fn run(out: &Path, jobs: usize, args: AnalyzeArgs) -> Result<(), CliError> {
    let flow = args.flow.options();
    let cfg = MetricConfig {
        mask_source: match args.mask_source {
            MaskSourceArg::Gt => MaskSource::GroundTruth,
            MaskSourceArg::Estimated => MaskSource::Estimated,
        },
        ..MetricConfig::for_flow(&flow)
    };
    let reports = out.join(REPORTS_DIR);

    if let Some(video) = &args.video {
        let seq = read_video(video)?;
        let truth = match &args.mask {
            Some(m) => Some(load_mask_arg(m, seq.dims(), "mask")?),
            None => None,
        };
        let report = analyze_video(&seq, truth.as_ref(), &cfg, &flow)?;
        let path = reports.join(format!("{}.snr.json", stem(video)));
        write_doc(&path, &report)?;
        println!("{}: {}", stem(video), describe(&report));
        println!("report: {}", path.display());
        return Ok(());
    }

    let manifest_path = args.manifest.unwrap_or_else(|| out.join(MANIFEST_FILE));
    let mut manifest = Manifest::read(&manifest_path)?;
    if !args.ids.is_empty() {
        if let Some(missing) = args.ids.iter().find(|id| manifest.get(id).is_none()) {
            return Err(CliError::invalid("ids", "UnknownVideoId", format!("`{missing}` is not in the manifest")));
        }
        manifest.entries.retain(|e| args.ids.contains(&e.video_id));
    }
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let results: Vec<EntryAnalysis> = analyze_manifest(&manifest, base, &cfg, &flow, jobs)?;
    for r in &results {
        write_doc(&reports.join(format!("{}.snr.json", r.video_id)), &r.report)?;
        println!("{}: {}", r.video_id, describe(&r.report));
    }
    let summary = summarize_by_category(&results);
    write_doc(&reports.join("summary.json"), &summary)?;
    println!();
    print!("{}", render_snr_table(&summary));
    println!("reports: {}", reports.display());
    Ok(())
}
