//! Measure how much of a video's content survives in optical flow with
//! the four SNR metrics.

use temporal_noise::fixtures::ant_silhouette;
use temporal_noise::store::to_canonical_string;
use temporal_noise::{
    analyze_video, encode_mask_animation, render_text_mask, validate_params, EncodingParams, FlowOptions, MaskSource,
    MetricConfig, TextSpec,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = validate_params(&EncodingParams {
        width: 480,
        height: 270,
        duration_s: 1.0,
        ..Default::default()
    })?;
    let flow = FlowOptions::default();

    let text = render_text_mask(&TextSpec {
        text: "WAVE".into(),
        scale: 12,
        canvas: params.dims(),
    })?;
    let ant = ant_silhouette(params.dims())?;
    for (name, mask) in [("text", &text), ("ant", &ant)] {
        let video = encode_mask_animation(mask, &params)?;
        for source in [MaskSource::GroundTruth, MaskSource::Estimated] {
            let cfg = MetricConfig {
                mask_source: source,
                ..MetricConfig::for_flow(&flow)
            };
            let report = analyze_video(&video, Some(mask), &cfg, &flow)?;
            println!(
                "{name} ({source:?} mask): basic {}, perceptual {}, coherence {}, contrast {}, combined {} dB",
                report.basic_db, report.perceptual_db, report.temporal_coherence_db, report.motion_contrast_db, report.combined_db
            );
            if source == MaskSource::GroundTruth && name == "ant" {
                println!("{}", to_canonical_string(&report));
            }
        }
    }
    Ok(())
}
