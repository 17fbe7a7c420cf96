//! Recover hidden content from flow statistics alone.
//!
//! The boundary-strength map (time-averaged flow-Jacobian norm) lights up
//! where foreground and background move against each other; the coherence map
//! dips along the same seam. [`estimate_mask`] turns the seam into a filled
//! region and never sees the ground truth.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{FlowStats, MetricConfig, MetricError};
use crate::types::{ContentMask, FlowField, FrameBuffer, TypeError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("no region found: the video looks contentless")]
    NoRegionFound,
    #[error("maps differ in size: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("invalid decode options: {0}")]
    InvalidOptions(&'static str),
    #[error("map values must be finite and non-negative")]
    InvalidMap,
    #[error(transparent)]
    Type(#[from] TypeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    BoundaryStrength,
    Coherence,
}

/// Non-negative per-pixel values over a frame.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
    kind: MapKind,
}

impl ScalarMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>, kind: MapKind) -> Result<Self, DecodeError> {
        if width == 0 || height == 0 {
            return Err(TypeError::ZeroDimension { width, height }.into());
        }
        if values.len() != width * height {
            return Err(TypeError::LengthMismatch {
                width,
                height,
                actual: values.len(),
            }
            .into());
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(DecodeError::InvalidMap);
        }
        Ok(Self {
            width,
            height,
            values,
            kind,
        })
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

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Linear stretch of `[0, max]` to `[0, 255]` for viewing.
    pub fn to_frame(&self) -> FrameBuffer {
        let m = self.max();
        let px = self
            .values
            .iter()
            .map(|&v| if m > 0.0 { (v / m * 255.0).round() as u8 } else { 0 })
            .collect();
        FrameBuffer::new(self.width, self.height, px).expect("same dimensions")
    }
}

/// Value at rank `⌈q/100 · n⌉` of the sorted values (nearest rank).
///
/// # Panics
/// On an empty slice.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q / 100.0) * v.len() as f64).ceil() as usize;
    v[rank.clamp(1, v.len()) - 1]
}

const OTSU_BINS: usize = 256;

/// Otsu's split of non-negative values: the level maximising the
/// between-class variance of a 256-bin histogram over `[0, max]`. Values
/// strictly above the returned level form the upper class.
///
/// # Panics
/// On an empty slice.
pub fn bimodal_split(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return 0.0;
    }
    let scale = (OTSU_BINS - 1) as f64 / max;
    let mut hist = [0usize; OTSU_BINS];
    for &v in values {
        hist[((v * scale).round() as usize).min(OTSU_BINS - 1)] += 1;
    }
    let total = values.len() as f64;
    let sum: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let (mut w_low, mut s_low) = (0.0, 0.0);
    let (mut best, mut split) = (-1.0, 0);
    for (i, &c) in hist.iter().enumerate() {
        w_low += c as f64;
        s_low += i as f64 * c as f64;
        let w_high = total - w_low;
        if w_low == 0.0 || w_high == 0.0 {
            continue;
        }
        let between = w_low * w_high * (s_low / w_low - (sum - s_low) / w_high).powi(2);
        if between > best {
            best = between;
            split = i;
        }
    }
    (split as f64 + 0.5) / scale
}

/// Time-averaged flow-Jacobian norm per pixel, zero in the border band.
pub fn motion_boundary_map(flows: &[FlowField], cfg: &MetricConfig) -> Result<ScalarMap, MetricError> {
    Ok(FlowStats::from_flows(flows, cfg)?.boundary_map())
}

/// The coherence map `C` used by the temporal-coherence metric.
pub fn coherence_decode_map(flows: &[FlowField], cfg: &MetricConfig) -> Result<ScalarMap, MetricError> {
    if flows.len() < 2 {
        return Err(MetricError::TooFewFlows {
            needed: 2,
            got: flows.len(),
        });
    }
    Ok(FlowStats::from_flows(flows, cfg)?.coherence_map())
}

/// How the seam threshold is derived from the boundary map. Both rules look
/// only at strictly positive values: flow away from edges is piecewise
/// constant, so most of the map is exactly zero and a rule over all pixels
/// would put the threshold at zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    /// Nearest-rank percentile in `[0, 100)`.
    Percentile(f64),
    /// Otsu split of the histogram.
    Bimodal,
}

impl ThresholdRule {
    /// Threshold for `values`; 0 when no value is positive.
    pub fn threshold(&self, values: &[f64]) -> f64 {
        let positive: Vec<f64> = values.iter().copied().filter(|&v| v > 0.0).collect();
        if positive.is_empty() {
            return 0.0;
        }
        match *self {
            ThresholdRule::Percentile(q) => percentile(&positive, q),
            ThresholdRule::Bimodal => bimodal_split(&positive),
        }
    }

    fn describe(&self) -> String {
        match self {
            ThresholdRule::Percentile(q) => format!("boundary strength above percentile {q} of positive values"),
            ThresholdRule::Bimodal => "boundary strength above the Otsu split of positive values".to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodeOptions {
    /// Boundary pixels strictly above this level form the seam.
    pub threshold: ThresholdRule,
    /// Pixels whose coherence is positive but below this value join the
    /// seam; `None` ignores the coherence map.
    pub coherence_seam: Option<f64>,
    /// Dilations then erosions with a 3×3 square.
    pub closing_iterations: usize,
    /// Keep every component with at least this fraction of the largest
    /// component's area; 1.0 keeps only the largest. The default 0.2 keeps
    /// all letters of a word while dropping specks.
    pub min_component_fraction: f64,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        Self {
            threshold: ThresholdRule::Bimodal,
            coherence_seam: Some(0.5),
            closing_iterations: 2,
            min_component_fraction: 0.2,
        }
    }
}

impl DecodeOptions {
    fn validate(&self) -> Result<(), DecodeError> {
        if let ThresholdRule::Percentile(q) = self.threshold {
            if !(0.0..100.0).contains(&q) {
                return Err(DecodeError::InvalidOptions("percentile must lie in [0, 100)"));
            }
        }
        if !(self.min_component_fraction > 0.0 && self.min_component_fraction <= 1.0) {
            return Err(DecodeError::InvalidOptions("min_component_fraction must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Parameters and intermediate counts of one decoding run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeMetadata {
    pub options: DecodeOptions,
    pub threshold_rule: String,
    /// Boundary strength the seam had to exceed.
    pub boundary_threshold: f64,
    pub structuring_element: String,
    pub seam_pixels: usize,
    pub components_found: usize,
    pub components_kept: usize,
    pub foreground_pixels: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatedMask {
    pub mask: ContentMask,
    pub metadata: DecodeMetadata,
}

/// [`estimate_mask_with`] under the default options.
pub fn estimate_mask(boundary: &ScalarMap, coherence: &ScalarMap) -> Result<EstimatedMask, DecodeError> {
    estimate_mask_with(boundary, coherence, &DecodeOptions::default())
}

/// Threshold the seam, close it, fill what it encloses and keep the dominant
/// connected component(s).
pub fn estimate_mask_with(
    boundary: &ScalarMap,
    coherence: &ScalarMap,
    opts: &DecodeOptions,
) -> Result<EstimatedMask, DecodeError> {
    opts.validate()?;
    if boundary.dims() != coherence.dims() {
        return Err(DecodeError::DimensionMismatch(boundary.dims(), coherence.dims()));
    }
    let (w, h) = boundary.dims();
    let threshold = opts.threshold.threshold(boundary.values());
    let mut seam: Vec<bool> = boundary
        .values()
        .iter()
        .zip(coherence.values())
        .map(|(&b, &c)| b > threshold || opts.coherence_seam.is_some_and(|t| c > 0.0 && c < t))
        .collect();
    let seam_pixels = seam.iter().filter(|&&s| s).count();
    if seam_pixels == 0 {
        return Err(DecodeError::NoRegionFound);
    }

    for _ in 0..opts.closing_iterations {
        seam = dilate(&seam, w, h);
    }
    for _ in 0..opts.closing_iterations {
        seam = erode(&seam, w, h);
    }
    let filled = fill_holes(&seam, w, h);
    let (labels, sizes) = components(&filled, w, h);
    let largest = sizes.iter().copied().max().unwrap_or(0);
    if largest == 0 {
        return Err(DecodeError::NoRegionFound);
    }
    let keep: Vec<bool> = sizes
        .iter()
        .map(|&s| s as f64 >= opts.min_component_fraction * largest as f64)
        .collect();
    let bits: Vec<bool> = labels.iter().map(|&l| l != 0 && keep[l as usize - 1]).collect();
    let mask = ContentMask::new(w, h, bits)?;
    Ok(EstimatedMask {
        metadata: DecodeMetadata {
            options: *opts,
            threshold_rule: opts.threshold.describe(),
            boundary_threshold: threshold,
            structuring_element: "3x3 square".to_string(),
            seam_pixels,
            components_found: sizes.len(),
            components_kept: keep.iter().filter(|&&k| k).count(),
            foreground_pixels: mask.count_foreground(),
        },
        mask,
    })
}

/// 3×3 dilation; outside the image counts as background.
pub(crate) fn dilate(src: &[bool], w: usize, h: usize) -> Vec<bool> {
    morph(src, w, h, false)
}

/// 3×3 erosion; outside the image counts as foreground so that regions
/// touching the border are not eaten from it.
pub(crate) fn erode(src: &[bool], w: usize, h: usize) -> Vec<bool> {
    morph(src, w, h, true)
}

fn morph(src: &[bool], w: usize, h: usize, erode: bool) -> Vec<bool> {
    let pick = |a: bool, b: bool| if erode { a && b } else { a || b };
    let mut tmp = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut v = src[y * w + x];
            if x > 0 {
                v = pick(v, src[y * w + x - 1]);
            }
            if x + 1 < w {
                v = pick(v, src[y * w + x + 1]);
            }
            tmp[y * w + x] = v;
        }
    }
    let mut out = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut v = tmp[y * w + x];
            if y > 0 {
                v = pick(v, tmp[(y - 1) * w + x]);
            }
            if y + 1 < h {
                v = pick(v, tmp[(y + 1) * w + x]);
            }
            out[y * w + x] = v;
        }
    }
    out
}

/// Foreground plus every background pixel not 4-connected to the border.
pub(crate) fn fill_holes(src: &[bool], w: usize, h: usize) -> Vec<bool> {
    let mut outside = vec![false; w * h];
    let mut queue = VecDeque::new();
    let seed = |i: usize, outside: &mut Vec<bool>, queue: &mut VecDeque<usize>| {
        if !src[i] && !outside[i] {
            outside[i] = true;
            queue.push_back(i);
        }
    };
    for x in 0..w {
        seed(x, &mut outside, &mut queue);
        seed((h - 1) * w + x, &mut outside, &mut queue);
    }
    for y in 0..h {
        seed(y * w, &mut outside, &mut queue);
        seed(y * w + w - 1, &mut outside, &mut queue);
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = (i % w, i / w);
        for (nx, ny) in neighbours4(x, y, w, h) {
            seed(ny * w + nx, &mut outside, &mut queue);
        }
    }
    outside.iter().map(|&o| !o).collect()
}

fn neighbours4(x: usize, y: usize, w: usize, h: usize) -> impl Iterator<Item = (usize, usize)> {
    [
        (x.wrapping_sub(1), y),
        (x + 1, y),
        (x, y.wrapping_sub(1)),
        (x, y + 1),
    ]
    .into_iter()
    .filter(move |&(nx, ny)| nx < w && ny < h)
}

/// 4-connected labelling in raster order; labels start at 1, 0 is
/// background. Returns the label image and the size of each component.
pub(crate) fn components(src: &[bool], w: usize, h: usize) -> (Vec<u32>, Vec<usize>) {
    let mut labels = vec![0u32; w * h];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !src[start] || labels[start] != 0 {
            continue;
        }
        let label = sizes.len() as u32 + 1;
        labels[start] = label;
        queue.push_back(start);
        let mut size = 0;
        while let Some(i) = queue.pop_front() {
            size += 1;
            for (nx, ny) in neighbours4(i % w, i / w, w, h) {
                let j = ny * w + nx;
                if src[j] && labels[j] == 0 {
                    labels[j] = label;
                    queue.push_back(j);
                }
            }
        }
        sizes.push(size);
    }
    (labels, sizes)
}

/// An 8-bit RGB image, row-major, three bytes per pixel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbFrame {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbFrame {
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Layer<'a> {
    Mask(&'a ContentMask),
    Map(&'a ScalarMap),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlayStyle {
    pub color: [u8; 3],
    /// Blend weight of `color` at full layer strength, in `[0, 1]`.
    pub opacity: f64,
}

impl OverlayStyle {
    /// Red, for estimated masks.
    pub const MASK: OverlayStyle = OverlayStyle {
        color: [230, 30, 30],
        opacity: 0.5,
    };
    /// Teal, for boundary strength.
    pub const BOUNDARY: OverlayStyle = OverlayStyle {
        color: [0, 160, 160],
        opacity: 0.8,
    };
}

/// Per channel `round((1 − α)·base + α·color)`. For a mask `α = opacity` on
/// foreground and 0 elsewhere; for a map `α = opacity · value / max`.
pub fn render_overlay(base: &FrameBuffer, layer: Layer<'_>, style: &OverlayStyle) -> Result<RgbFrame, DecodeError> {
    let dims = match layer {
        Layer::Mask(m) => m.dims(),
        Layer::Map(m) => m.dims(),
    };
    if dims != base.dims() {
        return Err(DecodeError::DimensionMismatch(base.dims(), dims));
    }
    let opacity = style.opacity.clamp(0.0, 1.0);
    let alpha: Box<dyn Fn(usize) -> f64> = match layer {
        Layer::Mask(m) => Box::new(move |i| if m.bits()[i] { opacity } else { 0.0 }),
        Layer::Map(m) => {
            let max = m.max();
            Box::new(move |i| if max > 0.0 { opacity * m.values()[i] / max } else { 0.0 })
        }
    };
    let mut data = Vec::with_capacity(3 * base.pixels().len());
    for (i, &p) in base.pixels().iter().enumerate() {
        let a = alpha(i);
        for c in style.color {
            data.push(((1.0 - a) * p as f64 + a * c as f64).round() as u8);
        }
    }
    Ok(RgbFrame {
        width: base.width(),
        height: base.height(),
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(w: usize, h: usize, f: impl Fn(usize, usize) -> f64, kind: MapKind) -> ScalarMap {
        let v = (0..w * h).map(|i| f(i % w, i / w)).collect();
        ScalarMap::new(w, h, v, kind).unwrap()
    }

    fn cfg0() -> MetricConfig {
        MetricConfig {
            border_exclude: 0,
            ..Default::default()
        }
    }

    #[test]
    fn zero_flows_give_zero_map() {
        let flows = vec![FlowField::zeros(16, 16).unwrap(); 2];
        assert!(motion_boundary_map(&flows, &cfg0()).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn step_edge_peaks_at_the_step() {
        let f = FlowField::from_fn(20, 10, |x, _| (if x < 10 { 0.0 } else { 6.0 }, 0.0)).unwrap();
        let b = motion_boundary_map(&[f], &cfg0()).unwrap();
        let peak = b.max();
        assert_eq!(peak, 3.0);
        for y in 0..10 {
            for x in 0..20 {
                let on_step = x == 9 || x == 10;
                assert_eq!(b.get(x, y) == peak, on_step, "({x},{y})");
            }
        }
    }

    #[test]
    fn zero_maps_find_nothing() {
        let z = map(16, 16, |_, _| 0.0, MapKind::BoundaryStrength);
        let c = map(16, 16, |_, _| 0.0, MapKind::Coherence);
        assert_eq!(estimate_mask(&z, &c), Err(DecodeError::NoRegionFound));
    }

    #[test]
    fn ideal_circle_outline_fills_the_disc() {
        let (w, h, r) = (96usize, 96usize, 30.0f64);
        let d = |x: usize, y: usize| ((x as f64 - 48.0).powi(2) + (y as f64 - 48.0).powi(2)).sqrt();
        let b = map(w, h, |x, y| if (d(x, y) - r).abs() <= 0.75 { 1.0 } else { 0.0 }, MapKind::BoundaryStrength);
        let c = map(w, h, |_, _| 1.0, MapKind::Coherence);
        let est = estimate_mask(&b, &c).unwrap();
        let disc = ContentMask::from_fn(w, h, |x, y| d(x, y) <= r).unwrap();
        let iou = est.mask.iou(&disc).unwrap();
        assert!(iou >= 0.95, "{iou}");
        assert_eq!(est.metadata.components_kept, 1);
    }

    #[test]
    fn fraction_keeps_secondary_components() {
        let b = map(
            40,
            20,
            |x, y| {
                let ring = |cx: i64| {
                    let (dx, dy) = ((x as i64 - cx).abs(), (y as i64 - 10).abs());
                    dx.max(dy) == 5
                };
                if ring(10) || ring(30) {
                    1.0
                } else {
                    0.0
                }
            },
            MapKind::BoundaryStrength,
        );
        let c = map(40, 20, |_, _| 1.0, MapKind::Coherence);
        let largest = estimate_mask(&b, &c).unwrap();
        assert_eq!(largest.metadata.components_found, 2);
        assert_eq!(largest.metadata.components_kept, 2, "equal sizes tie");
        let only_largest = DecodeOptions {
            min_component_fraction: 1.0,
            ..Default::default()
        };
        assert_eq!(estimate_mask_with(&b, &c, &only_largest).unwrap().metadata.components_kept, 2);
    }

    #[test]
    fn closing_bridges_small_gaps() {
        let mut v = vec![false; 12 * 3];
        v[12 + 3] = true;
        v[12 + 7] = true;
        let closed = erode(&dilate(&dilate(&v, 12, 3), 12, 3), 12, 3);
        let closed = erode(&closed, 12, 3);
        assert!((3..=7).all(|x| closed[12 + x]));
    }

    #[test]
    fn percentile_nearest_rank() {
        let v: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        assert_eq!(percentile(&v, 90.0), 9.0);
        assert_eq!(percentile(&v, 0.0), 1.0);
    }

    #[test]
    fn bimodal_split_separates_two_clusters() {
        let mut v = vec![1.0; 50];
        v.extend(vec![9.0; 10]);
        let t = bimodal_split(&v);
        assert!(t > 1.0 && t < 9.0, "{t}");
        assert_eq!(bimodal_split(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn thresholds_ignore_zeros() {
        let mut v = vec![0.0; 100];
        v.extend([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(ThresholdRule::Percentile(50.0).threshold(&v), 2.0);
        assert_eq!(ThresholdRule::Bimodal.threshold(&[0.0; 4]), 0.0);
    }

    #[test]
    fn small_specks_are_dropped() {
        let b = map(
            40,
            20,
            |x, y| {
                let big = (x as i64 - 12).abs().max((y as i64 - 10).abs()) == 7;
                let speck = (x as i64 - 32).abs().max((y as i64 - 10).abs()) == 1;
                if big || speck {
                    1.0
                } else {
                    0.0
                }
            },
            MapKind::BoundaryStrength,
        );
        let c = map(40, 20, |_, _| 1.0, MapKind::Coherence);
        let est = estimate_mask(&b, &c).unwrap();
        assert_eq!(est.metadata.components_found, 2);
        assert_eq!(est.metadata.components_kept, 1);
    }

    #[test]
    fn overlay_empty_full_and_half() {
        let base = FrameBuffer::new(2, 1, vec![10, 200]).unwrap();
        let empty = ContentMask::empty(2, 1).unwrap();
        let style = OverlayStyle {
            color: [255, 0, 100],
            opacity: 1.0,
        };
        let out = render_overlay(&base, Layer::Mask(&empty), &style).unwrap();
        assert_eq!(out.data, vec![10, 10, 10, 200, 200, 200]);
        let full = empty.complement();
        let out = render_overlay(&base, Layer::Mask(&full), &style).unwrap();
        assert_eq!(out.data, vec![255, 0, 100, 255, 0, 100]);
        let half = OverlayStyle { opacity: 0.5, ..style };
        let out = render_overlay(&base, Layer::Mask(&full), &half).unwrap();
        // round(0.5·10 + 0.5·255) = 133 (132.5 rounds away from zero)
        assert_eq!(out.pixel(0, 0), [133, 5, 55]);
        assert_eq!(out.pixel(1, 0), [228, 100, 150]);
    }

    #[test]
    fn overlay_rejects_mismatch() {
        let base = FrameBuffer::filled(2, 2, 0).unwrap();
        let m = ContentMask::empty(3, 2).unwrap();
        assert!(matches!(
            render_overlay(&base, Layer::Mask(&m), &OverlayStyle::MASK),
            Err(DecodeError::DimensionMismatch(..))
        ));
    }

    #[test]
    fn scalar_map_validation() {
        assert_eq!(
            ScalarMap::new(1, 1, vec![-1.0], MapKind::Coherence),
            Err(DecodeError::InvalidMap)
        );
        assert!(ScalarMap::new(2, 1, vec![0.0], MapKind::Coherence).is_err());
    }
}
