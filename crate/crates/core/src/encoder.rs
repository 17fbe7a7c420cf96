//! Temporal encoders.
//!
//! * Mask animation: foreground pixels read the foreground pattern at
//!   `(x + ⌊vx·t⌋, y + ⌊vy·t⌋)`, background pixels read the background pattern
//!   at `(x − ⌊vx·t⌋, y − ⌊vy·t⌋)`, both with modular wrap. The two textures
//!   scroll in opposite directions, so any single frame is plain noise.
//! * Depth animation: pixels whose depth brightness lies in `[lower, upper]`
//!   read one pattern at `(x + ⌊vx·t⌋, y + ⌊vy·t⌋)`; all others read it at
//!   `(x, y)` and stay static.
//!
//! Patterns come from [`crate::noise`]: background stream for the mask
//! background and for the depth pattern, foreground stream for the mask
//! foreground.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::noise::{generate_noise_stream, NoiseError, NoisePattern, STREAM_BACKGROUND, STREAM_FOREGROUND};
use crate::types::{ContentMask, DepthSequence, EncodingParams, FrameBuffer, ValidatedParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncodeError {
    #[error("input is {actual:?}, parameters ask for {expected:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("mask needs both foreground and background pixels")]
    DegenerateMask,
    #[error("depth thresholds out of order: {0} > {1}")]
    InvalidThresholds(u8, u8),
    #[error("a frame sequence needs at least one frame")]
    EmptySequence,
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

/// Ordered frames of one video.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameSequence {
    frames: Vec<FrameBuffer>,
    fps: u32,
    params: Option<EncodingParams>,
}

impl FrameSequence {
    /// Frames must be non-empty and share dimensions.
    pub fn new(frames: Vec<FrameBuffer>, fps: u32, params: Option<EncodingParams>) -> Result<Self, EncodeError> {
        let first = frames
            .first()
            .map(FrameBuffer::dims)
            .ok_or(EncodeError::EmptySequence)?;
        if let Some(f) = frames.iter().find(|f| f.dims() != first) {
            return Err(EncodeError::DimensionMismatch {
                expected: first,
                actual: f.dims(),
            });
        }
        Ok(Self { frames, fps, params })
    }

    pub fn frames(&self) -> &[FrameBuffer] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<FrameBuffer> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn fps(&self) -> u32 {
        self.fps
    }

    pub fn params(&self) -> Option<&EncodingParams> {
        self.params.as_ref()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    /// Keep every `step`-th frame, re-labelled at `fps`. Used for reduced
    /// frame-rate presentation conditions.
    pub fn subsample(&self, step: usize, fps: u32) -> Self {
        let step = step.max(1);
        Self {
            frames: self.frames.iter().step_by(step).cloned().collect(),
            fps,
            params: self.params.clone(),
        }
    }
}

/// Inclusive depth band `[lower, upper]` of moving pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthThresholds {
    lower: u8,
    upper: u8,
}

impl DepthThresholds {
    pub fn new(lower: u8, upper: u8) -> Result<Self, EncodeError> {
        if lower > upper {
            return Err(EncodeError::InvalidThresholds(lower, upper));
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> u8 {
        self.lower
    }

    pub fn upper(&self) -> u8 {
        self.upper
    }

    #[inline]
    pub fn contains(&self, d: u8) -> bool {
        self.lower <= d && d <= self.upper
    }
}

/// The two carrier patterns of a mask animation, `(background, foreground)`.
pub fn mask_patterns(p: &EncodingParams) -> Result<(NoisePattern, NoisePattern), NoiseError> {
    let bg = generate_noise_stream(p.width, p.height, p.block_size, p.density, p.seed, STREAM_BACKGROUND)?;
    let fg = generate_noise_stream(p.width, p.height, p.block_size, p.density, p.seed, STREAM_FOREGROUND)?;
    Ok((bg, fg))
}

/// The single carrier pattern of a depth animation.
pub fn depth_pattern(p: &EncodingParams) -> Result<NoisePattern, NoiseError> {
    generate_noise_stream(p.width, p.height, p.block_size, p.density, p.seed, STREAM_BACKGROUND)
}

fn mask_frame(mask: &ContentMask, bg: &NoisePattern, fg: &NoisePattern, p: &EncodingParams, t: usize) -> FrameBuffer {
    let (w, h) = (p.width, p.height);
    let (ox, oy) = p.velocity.offset_at(t);
    let mut pixels = vec![0u8; w * h];
    let mut fg_row = vec![0u8; w];
    let mut bg_row = vec![0u8; w];
    for (y, out) in pixels.chunks_exact_mut(w).enumerate() {
        let y = y as i64;
        fg.wrapped_row_into(ox, y + oy, &mut fg_row);
        bg.wrapped_row_into(-ox, y - oy, &mut bg_row);
        let bits = &mask.bits()[y as usize * w..][..w];
        for x in 0..w {
            out[x] = if bits[x] { fg_row[x] } else { bg_row[x] };
        }
    }
    FrameBuffer::new(w, h, pixels).expect("dimensions validated")
}

pub fn encode_mask_animation(mask: &ContentMask, params: &ValidatedParams) -> Result<FrameSequence, EncodeError> {
    let p = params.params();
    if mask.dims() != params.dims() {
        return Err(EncodeError::DimensionMismatch {
            expected: params.dims(),
            actual: mask.dims(),
        });
    }
    if !mask.is_encodable() {
        return Err(EncodeError::DegenerateMask);
    }
    let (bg, fg) = mask_patterns(p)?;
    let frames: Vec<FrameBuffer> = (0..params.frame_count())
        .into_par_iter()
        .map(|t| mask_frame(mask, &bg, &fg, p, t))
        .collect();
    FrameSequence::new(frames, p.fps, Some(p.clone()))
}

/// Depth frame shown at output frame `t` when `available` depth frames span
/// `total` output frames: `⌊t · available / total⌋`.
pub fn depth_index(t: usize, available: usize, total: usize) -> usize {
    ((t * available) / total.max(1)).min(available - 1)
}

fn depth_frame(depth: &FrameBuffer, th: DepthThresholds, n: &NoisePattern, p: &EncodingParams, t: usize) -> FrameBuffer {
    let (w, h) = (p.width, p.height);
    let (ox, oy) = p.velocity.offset_at(t);
    let mut pixels = vec![0u8; w * h];
    let mut moving = vec![0u8; w];
    for (y, out) in pixels.chunks_exact_mut(w).enumerate() {
        n.wrapped_row_into(ox, y as i64 + oy, &mut moving);
        let stat = &n.pixels()[y * w..][..w];
        let d = depth.row(y);
        for x in 0..w {
            out[x] = if th.contains(d[x]) { moving[x] } else { stat[x] };
        }
    }
    FrameBuffer::new(w, h, pixels).expect("dimensions validated")
}

/// Depth sequences shorter or longer than the output are resampled in time
/// by [`depth_index`]; a single depth map drives every frame.
pub fn encode_depth_animation(
    depth: &DepthSequence,
    th: DepthThresholds,
    params: &ValidatedParams,
) -> Result<FrameSequence, EncodeError> {
    let p = params.params();
    if depth.dims() != params.dims() {
        return Err(EncodeError::DimensionMismatch {
            expected: params.dims(),
            actual: depth.dims(),
        });
    }
    let n = depth_pattern(p)?;
    let total = params.frame_count();
    let frames: Vec<FrameBuffer> = (0..total)
        .into_par_iter()
        .map(|t| {
            let d = &depth.frames()[depth_index(t, depth.len(), total)];
            depth_frame(d, th, &n, p, t)
        })
        .collect();
    FrameSequence::new(frames, p.fps, Some(p.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::generate_noise_stream;
    use crate::types::{validate_params, Velocity};

    fn params(w: usize, h: usize, vy: f64, seed: u64, frames: usize) -> ValidatedParams {
        validate_params(&EncodingParams {
            width: w,
            height: h,
            fps: 1,
            duration_s: frames as f64,
            velocity: Velocity::new(0.0, vy),
            block_size: 1,
            density: 0.5,
            seed,
        })
        .unwrap()
    }

    fn half_mask(w: usize, h: usize) -> ContentMask {
        ContentMask::from_fn(w, h, |x, _| x < w / 2).unwrap()
    }

    #[test]
    fn first_frame_is_pixelwise_select() {
        let p = params(8, 8, 1.0, 3, 4);
        let m = half_mask(8, 8);
        let seq = encode_mask_animation(&m, &p).unwrap();
        let (bg, fg) = mask_patterns(p.params()).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                let expected = if m.get(x, y) { fg.get(x, y) } else { bg.get(x, y) };
                assert_eq!(seq.frames()[0].get(x, y), expected);
            }
        }
    }

    #[test]
    fn degenerate_masks_rejected() {
        let p = params(8, 8, 1.0, 3, 4);
        let full = ContentMask::from_fn(8, 8, |_, _| true).unwrap();
        assert_eq!(encode_mask_animation(&full, &p), Err(EncodeError::DegenerateMask));
        let none = ContentMask::empty(8, 8).unwrap();
        assert_eq!(encode_mask_animation(&none, &p), Err(EncodeError::DegenerateMask));
        let wrong = half_mask(4, 8);
        assert!(matches!(
            encode_mask_animation(&wrong, &p),
            Err(EncodeError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn frame_three_matches_direct_evaluation() {
        let p = params(8, 8, 1.0, 17, 4);
        let m = ContentMask::from_fn(8, 8, |x, y| (2..6).contains(&x) && (1..7).contains(&y)).unwrap();
        let seq = encode_mask_animation(&m, &p).unwrap();
        let fg = generate_noise_stream(8, 8, 1, 0.5, 17, 1).unwrap();
        let bg = generate_noise_stream(8, 8, 1, 0.5, 17, 0).unwrap();
        let t = 3;
        for y in 0..8 {
            for x in 0..8 {
                let v = if m.get(x, y) {
                    fg.get(x, (y + t) % 8)
                } else {
                    bg.get(x, (y + 8 - t) % 8)
                };
                assert_eq!(seq.frames()[t].get(x, y), v);
            }
        }
    }

    #[test]
    fn depth_all_inclusive_band_scrolls_everything() {
        let p = params(6, 5, 1.0, 2, 3);
        let depth = DepthSequence::single(FrameBuffer::filled(6, 5, 77).unwrap());
        let seq = encode_depth_animation(&depth, DepthThresholds::new(0, 255).unwrap(), &p).unwrap();
        let n = depth_pattern(p.params()).unwrap();
        for (t, f) in seq.frames().iter().enumerate() {
            for y in 0..5 {
                for x in 0..6 {
                    assert_eq!(f.get(x, y), n.get(x, (y + t) % 5));
                }
            }
        }
    }

    #[test]
    fn depth_empty_band_is_static() {
        let p = params(6, 5, 2.0, 2, 4);
        let depth = DepthSequence::single(FrameBuffer::filled(6, 5, 200).unwrap());
        let seq = encode_depth_animation(&depth, DepthThresholds::new(255, 255).unwrap(), &p).unwrap();
        let n = depth_pattern(p.params()).unwrap();
        for f in seq.frames() {
            assert_eq!(f.pixels(), n.pixels());
        }
    }

    #[test]
    fn depth_constant_band_shift() {
        let p = params(4, 4, 1.0, 8, 3);
        let depth = DepthSequence::single(FrameBuffer::filled(4, 4, 100).unwrap());
        let seq = encode_depth_animation(&depth, DepthThresholds::new(50, 150).unwrap(), &p).unwrap();
        let n = depth_pattern(p.params()).unwrap();
        let f = &seq.frames()[2];
        for y in 0..4 {
            for x in 0..4 {
                assert_eq!(f.get(x, y), n.get(x, (y + 2) % 4));
            }
        }
    }

    #[test]
    fn thresholds_must_be_ordered() {
        assert_eq!(DepthThresholds::new(9, 3), Err(EncodeError::InvalidThresholds(9, 3)));
    }

    #[test]
    fn depth_temporal_resampling() {
        assert_eq!(depth_index(0, 3, 6), 0);
        assert_eq!(depth_index(1, 3, 6), 0);
        assert_eq!(depth_index(2, 3, 6), 1);
        assert_eq!(depth_index(5, 3, 6), 2);
        assert_eq!(depth_index(4, 10, 5), 8);
        assert_eq!(depth_index(7, 1, 8), 0);
    }

    #[test]
    fn periodic_when_velocity_divides_height() {
        let p = params(8, 12, 3.0, 4, 10);
        let m = half_mask(8, 12);
        let seq = encode_mask_animation(&m, &p).unwrap();
        for t in 0..(10 - 4) {
            assert_eq!(seq.frames()[t], seq.frames()[t + 4]);
        }
    }

    #[test]
    fn deterministic_and_binary() {
        let p = params(16, 16, 2.0, 99, 5);
        let m = half_mask(16, 16);
        let a = encode_mask_animation(&m, &p).unwrap();
        let b = encode_mask_animation(&m, &p).unwrap();
        assert_eq!(a, b);
        assert!(a.frames().iter().all(FrameBuffer::is_binary));
    }
}
