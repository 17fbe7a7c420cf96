use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use super::error::io_at;
use super::{load_mask_arg, create_dir, read_video, stem, write_doc, CliError, FlowArgs};
use crate::decoder::{estimate_mask_with, render_overlay, DecodeError, DecodeMetadata, DecodeOptions, Layer, OverlayStyle, ThresholdRule};
use crate::metrics::{FlowStats, MetricConfig};
use crate::store::{encode_png, encode_rgb_png, SchemaTag};

const DECODE_DIR: &str = "decode";

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// Y4M file or PNG-sequence directory.
    video: PathBuf,
    /// Ground-truth mask image; the IoU against it is reported.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Seam threshold: `bimodal`, or `pNN` for the NN-th percentile of the
    /// positive boundary strengths.
    #[arg(long, default_value = "bimodal", value_parser = parse_threshold)]
    threshold: ThresholdRule,
    /// Coherence below which a moving pixel joins the seam, or `none`.
    #[arg(long, default_value = "0.5", value_parser = parse_seam)]
    coherence_seam: Seam,
    /// Closing iterations with a 3×3 square.
    #[arg(long, default_value_t = DecodeOptions::default().closing_iterations)]
    closing: usize,
    /// Keep components of at least this fraction of the largest one.
    #[arg(long, default_value_t = DecodeOptions::default().min_component_fraction)]
    min_fraction: f64,
    #[command(flatten)]
    flow: FlowArgs,
}

fn parse_threshold(s: &str) -> Result<ThresholdRule, String> {
    match s {
        "bimodal" => Ok(ThresholdRule::Bimodal),
        _ => s
            .strip_prefix('p')
            .and_then(|q| q.parse().ok())
            .map(ThresholdRule::Percentile)
            .ok_or_else(|| format!("expected `bimodal` or `pNN`, got `{s}`")),
    }
}

/// `--coherence-seam` value; a bare `Option` would read as "flag may be absent".
#[derive(Debug, Clone, Copy)]
struct Seam(Option<f64>);

fn parse_seam(s: &str) -> Result<Seam, String> {
    match s {
        "none" => Ok(Seam(None)),
        _ => s.parse().map(|v| Seam(Some(v))).map_err(|e| format!("{e}")),
    }
}

/// What `decode` found, written next to the images.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeSummary {
    pub video: String,
    pub contentless: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<DecodeMetadata>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iou: Option<f64>,
}

impl SchemaTag for DecodeSummary {
    const SCHEMA: &'static str = "tnoise.decode/1";
}

fn write_png(path: &Path, bytes: Vec<u8>) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(io_at(path))
}

pub fn run(out: &Path, args: DecodeArgs) -> Result<(), CliError> {
    let seq = read_video(&args.video)?;
    let truth = match &args.truth {
        Some(t) => Some(load_mask_arg(t, seq.dims(), "truth")?),
        None => None,
    };
    let flow = args.flow.options();
    let cfg = MetricConfig::for_flow(&flow);
    let opts = DecodeOptions {
        threshold: args.threshold,
        coherence_seam: args.coherence_seam.0,
        closing_iterations: args.closing,
        min_component_fraction: args.min_fraction,
    };

    let stats = FlowStats::from_frames(seq.frames(), &flow, &cfg)?;
    let boundary = stats.boundary_map();
    let coherence = stats.coherence_map();
    let dir = out.join(DECODE_DIR).join(stem(&args.video));
    create_dir(&dir)?;
    write_png(&dir.join("boundary.png"), encode_png(&boundary.to_frame())?)?;
    write_png(&dir.join("coherence.png"), encode_png(&coherence.to_frame())?)?;
    let first = &seq.frames()[0];
    write_png(
        &dir.join("overlay_boundary.png"),
        encode_rgb_png(&render_overlay(first, Layer::Map(&boundary), &OverlayStyle::BOUNDARY)?)?,
    )?;

    let summary = match estimate_mask_with(&boundary, &coherence, &opts) {
        Ok(est) => {
            write_png(&dir.join("mask.png"), encode_png(&est.mask.to_frame())?)?;
            write_png(
                &dir.join("overlay_mask.png"),
                encode_rgb_png(&render_overlay(first, Layer::Mask(&est.mask), &OverlayStyle::MASK)?)?,
            )?;
            let iou = match &truth {
                Some(t) => Some(est.mask.iou(t).map_err(|e| CliError::invalid("truth", "DimensionMismatch", e))?),
                None => None,
            };
            println!(
                "foreground: {} px in {} component(s), boundary threshold {:.4}",
                est.metadata.foreground_pixels, est.metadata.components_kept, est.metadata.boundary_threshold
            );
            if let Some(iou) = iou {
                println!("iou: {iou:.4}");
            }
            DecodeSummary {
                video: args.video.display().to_string(),
                contentless: false,
                metadata: Some(est.metadata),
                iou,
            }
        }
        Err(DecodeError::NoRegionFound) => {
            println!("contentless: no motion boundary found");
            DecodeSummary {
                video: args.video.display().to_string(),
                contentless: true,
                metadata: None,
                iou: None,
            }
        }
        Err(e) => return Err(e.into()),
    };
    write_doc(&dir.join("decode.json"), &summary)?;
    println!("outputs: {}", dir.display());
    Ok(())
}
