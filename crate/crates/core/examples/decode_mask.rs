//! Recover a hidden shape from flow statistics alone and compare it with
//! the mask it was encoded from.

use temporal_noise::metrics::FlowStats;
use temporal_noise::store::{encode_png, encode_rgb_png};
use temporal_noise::{
    encode_mask_animation, estimate_mask, render_overlay, render_shape_mask, validate_params, DecodeError,
    EncodingParams, FlowOptions, FrameSequence, Layer, MetricConfig, OverlayStyle, Shape, ShapeSpec,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = validate_params(&EncodingParams {
        width: 256,
        height: 256,
        duration_s: 1.0,
        seed: 2,
        ..Default::default()
    })?;
    let truth = render_shape_mask(&ShapeSpec::new(Shape::regular(3, 128.0, 136.0, 80.0, -std::f64::consts::FRAC_PI_2), (256, 256)))?;
    let video = encode_mask_animation(&truth, &params)?;

    let flow = FlowOptions::default();
    let stats = FlowStats::from_frames(video.frames(), &flow, &MetricConfig::for_flow(&flow))?;
    let (boundary, coherence) = (stats.boundary_map(), stats.coherence_map());
    let estimate = estimate_mask(&boundary, &coherence)?;
    println!(
        "kept {} of {} components, {} foreground pixels, IoU with the truth {:.3}",
        estimate.metadata.components_kept,
        estimate.metadata.components_found,
        estimate.metadata.foreground_pixels,
        estimate.mask.iou(&truth)?
    );

    let dir = std::env::temp_dir().join("decode_example");
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("boundary.png"), encode_png(&boundary.to_frame())?)?;
    let overlay = render_overlay(&video.frames()[0], Layer::Mask(&estimate.mask), &OverlayStyle::MASK)?;
    std::fs::write(dir.join("overlay.png"), encode_rgb_png(&overlay)?)?;
    println!("wrote maps to {}", dir.display());

    // a video whose frames never change has nothing to decode
    let still = FrameSequence::new(vec![video.frames()[0].clone(); 10], 30, None)?;
    let stats = FlowStats::from_frames(still.frames(), &flow, &MetricConfig::for_flow(&flow))?;
    match estimate_mask(&stats.boundary_map(), &stats.coherence_map()) {
        Err(DecodeError::NoRegionFound) => println!("static video: contentless"),
        other => println!("static video: unexpected {other:?}"),
    }
    Ok(())
}
