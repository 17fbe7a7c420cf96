//! Encode content into the temporal motion of binary noise, measure how much
//! of it survives in optical flow, decode it back, and score identification
//! responses.
//!
//! A frame of these videos is statistically indistinguishable from white
//! noise; the content only exists in how the noise moves between frames.

pub mod cli;
pub mod dataset;
pub mod decoder;
pub mod encoder;
pub mod eval;
pub mod fixtures;
pub mod flow;
pub mod mask;
pub mod metrics;
pub mod noise;
pub mod store;
pub mod types;

pub use decoder::{
    coherence_decode_map, estimate_mask, estimate_mask_with, motion_boundary_map, render_overlay, DecodeError,
    DecodeOptions, EstimatedMask, Layer, OverlayStyle, ScalarMap, ThresholdRule,
};
pub use encoder::{encode_depth_animation, encode_mask_animation, DepthThresholds, EncodeError, FrameSequence};
pub use flow::{estimate_flow, flow_sequence, FlowError, FlowOptions};
pub use mask::{render_shape_mask, render_text_mask, MaskError, Shape, ShapeSpec, TextSpec};
pub use metrics::{
    analyze_video, analyze_video_detailed, basic_snr, motion_contrast_snr, perceptual_snr, temporal_coherence_snr, Db,
    MaskSource, MetricConfig, MetricError, SnrReport,
};
pub use noise::{generate_noise, NoiseError, NoisePattern};
pub use types::{
    validate_params, ContentMask, DepthSequence, EncodingParams, FlowField, FrameBuffer, TypeError, ValidatedParams,
    Velocity,
};
