//! Value types shared by every stage: frames, masks, depth maps, flow fields
//! and encoding parameters.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TypeError {
    #[error("zero dimension: {width}x{height}")]
    ZeroDimension { width: usize, height: usize },
    #[error("buffer length {actual} does not match {width}x{height}")]
    LengthMismatch {
        width: usize,
        height: usize,
        actual: usize,
    },
    #[error("depth sequence is empty")]
    EmptySequence,
    #[error("frame {index} is {actual:?}, expected {expected:?}")]
    MixedDimensions {
        index: usize,
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("flow field contains a non-finite value at index {0}")]
    NonFiniteFlow(usize),
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<(), TypeError> {
    if width == 0 || height == 0 {
        return Err(TypeError::ZeroDimension { width, height });
    }
    if width * height != len {
        return Err(TypeError::LengthMismatch {
            width,
            height,
            actual: len,
        });
    }
    Ok(())
}

/// A single grayscale frame, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FrameBuffer {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl FrameBuffer {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, TypeError> {
        check_dims(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, TypeError> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }

    /// True when every pixel is 0 or 255.
    pub fn is_binary(&self) -> bool {
        self.pixels.iter().all(|&p| p == 0 || p == 255)
    }
}

/// Binary content mask, `true` marks foreground.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ContentMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl ContentMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, TypeError> {
        check_dims(width, height, bits.len())?;
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self, TypeError> {
        Self::new(width, height, vec![false; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        f: impl Fn(usize, usize) -> bool,
    ) -> Result<Self, TypeError> {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self::new(width, height, bits)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn count_foreground(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// At least one foreground and one background pixel.
    pub fn is_encodable(&self) -> bool {
        let fg = self.count_foreground();
        fg > 0 && fg < self.bits.len()
    }

    pub fn complement(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// Intersection over union. Two empty masks have IoU 1.
    pub fn iou(&self, other: &ContentMask) -> Result<f64, TypeError> {
        if self.dims() != other.dims() {
            return Err(TypeError::MixedDimensions {
                index: 1,
                expected: self.dims(),
                actual: other.dims(),
            });
        }
        let (mut inter, mut union) = (0usize, 0usize);
        for (&a, &b) in self.bits.iter().zip(&other.bits) {
            inter += (a && b) as usize;
            union += (a || b) as usize;
        }
        Ok(if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        })
    }

    /// Foreground as 255, background as 0.
    pub fn to_frame(&self) -> FrameBuffer {
        FrameBuffer {
            width: self.width,
            height: self.height,
            pixels: self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        }
    }
}

/// Per-frame depth maps (brightness 0..=255) of equal dimensions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepthSequence {
    frames: Vec<FrameBuffer>,
}

impl DepthSequence {
    pub fn new(frames: Vec<FrameBuffer>) -> Result<Self, TypeError> {
        let first = frames.first().ok_or(TypeError::EmptySequence)?.dims();
        if let Some((index, f)) = frames.iter().enumerate().find(|(_, f)| f.dims() != first) {
            return Err(TypeError::MixedDimensions {
                index,
                expected: first,
                actual: f.dims(),
            });
        }
        Ok(Self { frames })
    }

    pub fn single(frame: FrameBuffer) -> Self {
        Self {
            frames: vec![frame],
        }
    }

    pub fn frames(&self) -> &[FrameBuffer] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }
}

/// Dense motion between two frames: frame `a` at `(x, y)` moved to
/// `(x + u, y + v)` in frame `b`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    u: Vec<f32>,
    v: Vec<f32>,
}

impl FlowField {
    pub fn new(width: usize, height: usize, u: Vec<f32>, v: Vec<f32>) -> Result<Self, TypeError> {
        check_dims(width, height, u.len())?;
        check_dims(width, height, v.len())?;
        if let Some(i) = u.iter().chain(&v).position(|x| !x.is_finite()) {
            return Err(TypeError::NonFiniteFlow(i));
        }
        Ok(Self {
            width,
            height,
            u,
            v,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self, TypeError> {
        let n = width * height;
        Self::new(width, height, vec![0.0; n], vec![0.0; n])
    }

    pub fn uniform(width: usize, height: usize, u: f32, v: f32) -> Result<Self, TypeError> {
        let n = width * height;
        Self::new(width, height, vec![u; n], vec![v; n])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        f: impl Fn(usize, usize) -> (f32, f32),
    ) -> Result<Self, TypeError> {
        let mut u = Vec::with_capacity(width * height);
        let mut v = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let (a, b) = f(x, y);
                u.push(a);
                v.push(b);
            }
        }
        Self::new(width, height, u, v)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn u(&self) -> &[f32] {
        &self.u
    }

    pub fn v(&self) -> &[f32] {
        &self.v
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> (f32, f32) {
        let i = y * self.width + x;
        (self.u[i], self.v[i])
    }

    pub fn is_zero(&self) -> bool {
        self.u.iter().chain(&self.v).all(|&x| x == 0.0)
    }
}

/// Displacement in pixels per frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Velocity {
    pub vx: f64,
    pub vy: f64,
}

impl Velocity {
    pub const fn new(vx: f64, vy: f64) -> Self {
        Self { vx, vy }
    }

    /// Integer pixel offset reached after `t` frames, `(⌊vx·t⌋, ⌊vy·t⌋)`.
    pub fn offset_at(&self, t: usize) -> (i64, i64) {
        let t = t as f64;
        ((self.vx * t).floor() as i64, (self.vy * t).floor() as i64)
    }
}

impl Default for Velocity {
    fn default() -> Self {
        Self::new(0.0, 3.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodingParams {
    pub width: usize,
    pub height: usize,
    pub fps: u32,
    pub duration_s: f64,
    pub velocity: Velocity,
    pub block_size: usize,
    pub density: f64,
    pub seed: u64,
}

impl Default for EncodingParams {
    fn default() -> Self {
        Self {
            width: 960,
            height: 540,
            fps: 30,
            duration_s: 4.0,
            velocity: Velocity::default(),
            block_size: 2,
            density: 0.5,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParamViolation {
    #[error("width/height: dimensions must be positive")]
    ZeroDimension,
    #[error("fps: must be at least 1")]
    ZeroFps,
    #[error("duration_s: must be positive and finite")]
    NonPositiveDuration,
    #[error("duration_s: yields {0} frames, at least 2 required")]
    TooFewFrames(usize),
    #[error("velocity: zero velocity leaves the content invisible")]
    ZeroVelocity,
    #[error("velocity: components must be finite")]
    NonFiniteVelocity,
    #[error("block_size: must be in 1..=min(width, height)")]
    InvalidBlockSize,
    #[error("density: must be in [0, 1]")]
    InvalidDensity,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("invalid encoding parameters: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct ParamErrors(pub Vec<ParamViolation>);

/// Parameters that passed [`validate_params`], with the frame count attached.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidatedParams {
    params: EncodingParams,
    frame_count: usize,
}

impl ValidatedParams {
    pub fn params(&self) -> &EncodingParams {
        &self.params
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.params.width, self.params.height)
    }
}

pub fn frame_count(fps: u32, duration_s: f64) -> usize {
    (fps as f64 * duration_s).round().max(0.0) as usize
}

pub fn validate_params(p: &EncodingParams) -> Result<ValidatedParams, ParamErrors> {
    let mut errs = Vec::new();
    if p.width == 0 || p.height == 0 {
        errs.push(ParamViolation::ZeroDimension);
    }
    if p.fps == 0 {
        errs.push(ParamViolation::ZeroFps);
    }
    let duration_ok = p.duration_s.is_finite() && p.duration_s > 0.0;
    if !duration_ok {
        errs.push(ParamViolation::NonPositiveDuration);
    }
    let count = frame_count(p.fps, p.duration_s);
    if duration_ok && p.fps > 0 && count < 2 {
        errs.push(ParamViolation::TooFewFrames(count));
    }
    let Velocity { vx, vy } = p.velocity;
    if !vx.is_finite() || !vy.is_finite() {
        errs.push(ParamViolation::NonFiniteVelocity);
    } else if vx.abs() + vy.abs() == 0.0 {
        errs.push(ParamViolation::ZeroVelocity);
    }
    if p.block_size == 0 || p.block_size > p.width.min(p.height).max(1) {
        errs.push(ParamViolation::InvalidBlockSize);
    }
    if !(0.0..=1.0).contains(&p.density) {
        errs.push(ParamViolation::InvalidDensity);
    }
    if errs.is_empty() {
        Ok(ValidatedParams {
            params: p.clone(),
            frame_count: count,
        })
    } else {
        Err(ParamErrors(errs))
    }
}
