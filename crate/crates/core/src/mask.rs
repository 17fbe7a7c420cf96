//! Content masks: rasterised shapes and text, and ingestion of mask and depth
//! images produced elsewhere.

use std::path::{Path, PathBuf};

use font8x8::legacy::BASIC_LEGACY;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{ContentMask, DepthSequence, FrameBuffer, TypeError};

/// Font cell edge in font pixels.
pub const GLYPH_CELL: usize = 8;
/// Gap between glyph cells in font pixels.
pub const GLYPH_GAP: usize = 1;

#[derive(Debug, Error)]
pub enum MaskError {
    #[error("shape lies outside the {0}x{1} canvas")]
    OutOfCanvas(usize, usize),
    #[error("shape has zero area")]
    DegenerateShape,
    #[error("polygon edges {0} and {1} intersect")]
    SelfIntersecting(usize, usize),
    #[error("polygon needs at least 3 vertices")]
    TooFewVertices,
    #[error("text is empty")]
    EmptyText,
    #[error("no glyph for {0:?}")]
    UnsupportedGlyph(char),
    #[error("text needs {needed:?} pixels, canvas is {canvas:?}")]
    TextTooLarge {
        needed: (usize, usize),
        canvas: (usize, usize),
    },
    #[error("text scale must be at least 1")]
    ZeroScale,
    #[error("unreadable image: {0}")]
    UnreadableImage(String),
    #[error("mask has no foreground after thresholding")]
    EmptyMask,
    #[error("no image files in {0}")]
    EmptyDirectory(PathBuf),
    #[error("depth frame {path} is {actual:?}, expected {expected:?}")]
    MixedDimensions {
        path: PathBuf,
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Type(#[from] TypeError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// Covers integer pixels `x..=x+width`, `y..=y+height`.
    Rectangle {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },
    Circle { cx: f64, cy: f64, radius: f64 },
    Polygon { vertices: Vec<(f64, f64)> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    #[serde(flatten)]
    pub shape: Shape,
    pub canvas: (usize, usize),
}

impl Shape {
    /// Regular polygon with `sides` vertices on the circle of `radius`
    /// around `(cx, cy)`, the first at angle `rotation` (radians, y down).
    pub fn regular(sides: usize, cx: f64, cy: f64, radius: f64, rotation: f64) -> Shape {
        let vertices = (0..sides)
            .map(|i| {
                let a = rotation + std::f64::consts::TAU * i as f64 / sides as f64;
                (cx + radius * a.cos(), cy + radius * a.sin())
            })
            .collect();
        Shape::Polygon { vertices }
    }
}

impl ShapeSpec {
    pub fn new(shape: Shape, canvas: (usize, usize)) -> Self {
        Self { shape, canvas }
    }

    /// Canonical label for scoring ("rectangle", "circle", ...).
    pub fn label(&self) -> &'static str {
        match &self.shape {
            Shape::Rectangle { width, height, .. } if width == height => "square",
            Shape::Rectangle { .. } => "rectangle",
            Shape::Circle { .. } => "circle",
            Shape::Polygon { vertices } => match vertices.len() {
                3 => "triangle",
                5 => "pentagon",
                6 => "hexagon",
                _ => "polygon",
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextSpec {
    pub text: String,
    pub scale: usize,
    pub canvas: (usize, usize),
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn on_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> bool {
    const EPS: f64 = 1e-9;
    cross(a, b, p).abs() <= EPS * (1.0 + (b.0 - a.0).abs() + (b.1 - a.1).abs())
        && p.0 >= a.0.min(b.0) - EPS
        && p.0 <= a.0.max(b.0) + EPS
        && p.1 >= a.1.min(b.1) - EPS
        && p.1 <= a.1.max(b.1) + EPS
}

fn segments_intersect(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    on_segment(a, c, d) || on_segment(b, c, d) || on_segment(c, a, b) || on_segment(d, a, b)
}

/// Inside or on the boundary of the polygon.
fn polygon_contains(vertices: &[(f64, f64)], p: (f64, f64)) -> bool {
    let n = vertices.len();
    let mut inside = false;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        if on_segment(p, a, b) {
            return true;
        }
        if (a.1 > p.1) != (b.1 > p.1) {
            let x = a.0 + (p.1 - a.1) * (b.0 - a.0) / (b.1 - a.1);
            if p.0 < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn polygon_area(vertices: &[(f64, f64)]) -> f64 {
    let n = vertices.len();
    (0..n)
        .map(|i| {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            a.0 * b.1 - b.0 * a.1
        })
        .sum::<f64>()
        / 2.0
}

fn check_polygon(vertices: &[(f64, f64)]) -> Result<(), MaskError> {
    let n = vertices.len();
    if n < 3 {
        return Err(MaskError::TooFewVertices);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            let (c, d) = (vertices[j], vertices[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return Err(MaskError::SelfIntersecting(i, j));
            }
        }
    }
    if polygon_area(vertices).abs() < 1e-9 {
        return Err(MaskError::DegenerateShape);
    }
    Ok(())
}

/// Rasterise a shape with an inclusive boundary: a pixel `(x, y)` is
/// foreground when the point `(x, y)` lies inside or on the shape.
pub fn render_shape_mask(spec: &ShapeSpec) -> Result<ContentMask, MaskError> {
    let (w, h) = spec.canvas;
    let out = || MaskError::OutOfCanvas(w, h);
    if w == 0 || h == 0 {
        return Err(out());
    }
    let (xmax, ymax) = ((w - 1) as f64, (h - 1) as f64);
    match &spec.shape {
        Shape::Rectangle {
            x,
            y,
            width,
            height,
        } => {
            if *width == 0 || *height == 0 {
                return Err(MaskError::DegenerateShape);
            }
            if x + width >= w || y + height >= h {
                return Err(out());
            }
            let (x0, y0, x1, y1) = (*x, *y, x + width, y + height);
            Ok(ContentMask::from_fn(w, h, |px, py| {
                (x0..=x1).contains(&px) && (y0..=y1).contains(&py)
            })?)
        }
        Shape::Circle { cx, cy, radius } => {
            if radius.is_nan() || *radius <= 0.0 {
                return Err(MaskError::DegenerateShape);
            }
            if cx - radius < 0.0 || cy - radius < 0.0 || cx + radius > xmax || cy + radius > ymax {
                return Err(out());
            }
            let r2 = radius * radius;
            Ok(ContentMask::from_fn(w, h, |px, py| {
                let dx = px as f64 - cx;
                let dy = py as f64 - cy;
                dx * dx + dy * dy <= r2
            })?)
        }
        Shape::Polygon { vertices } => {
            check_polygon(vertices)?;
            if vertices
                .iter()
                .any(|&(x, y)| !(0.0..=xmax).contains(&x) || !(0.0..=ymax).contains(&y))
            {
                return Err(out());
            }
            let bx0 = vertices.iter().map(|v| v.0).fold(f64::INFINITY, f64::min).floor() as usize;
            let bx1 = vertices.iter().map(|v| v.0).fold(0.0, f64::max).ceil() as usize;
            let by0 = vertices.iter().map(|v| v.1).fold(f64::INFINITY, f64::min).floor() as usize;
            let by1 = vertices.iter().map(|v| v.1).fold(0.0, f64::max).ceil() as usize;
            let mut bits = vec![false; w * h];
            for py in by0..=by1.min(h - 1) {
                for px in bx0..=bx1.min(w - 1) {
                    bits[py * w + px] = polygon_contains(vertices, (px as f64, py as f64));
                }
            }
            Ok(ContentMask::new(w, h, bits)?)
        }
    }
}

/// 8x8 bitmap of a printable ASCII character; bit `x` of row `y` is pixel
/// `(x, y)`.
pub fn glyph(c: char) -> Option<[u8; 8]> {
    if (' '..='~').contains(&c) {
        Some(BASIC_LEGACY[c as usize])
    } else {
        None
    }
}

/// Extent in pixels of `text` rendered at `scale`.
pub fn text_extent(chars: usize, scale: usize) -> (usize, usize) {
    let w = chars * GLYPH_CELL + chars.saturating_sub(1) * GLYPH_GAP;
    (w * scale, GLYPH_CELL * scale)
}

pub fn render_text_mask(spec: &TextSpec) -> Result<ContentMask, MaskError> {
    if spec.text.is_empty() {
        return Err(MaskError::EmptyText);
    }
    if spec.scale == 0 {
        return Err(MaskError::ZeroScale);
    }
    let glyphs = spec
        .text
        .chars()
        .map(|c| glyph(c).ok_or(MaskError::UnsupportedGlyph(c)))
        .collect::<Result<Vec<_>, _>>()?;
    let (cw, ch) = spec.canvas;
    let (tw, th) = text_extent(glyphs.len(), spec.scale);
    if tw > cw || th > ch {
        return Err(MaskError::TextTooLarge {
            needed: (tw, th),
            canvas: (cw, ch),
        });
    }
    let x0 = (cw - tw) / 2;
    let y0 = (ch - th) / 2;
    let s = spec.scale;
    let mut bits = vec![false; cw * ch];
    for (i, g) in glyphs.iter().enumerate() {
        let gx0 = x0 + i * (GLYPH_CELL + GLYPH_GAP) * s;
        for (gy, row) in g.iter().enumerate() {
            for gx in 0..GLYPH_CELL {
                if row & (1 << gx) == 0 {
                    continue;
                }
                for dy in 0..s {
                    let y = y0 + gy * s + dy;
                    let start = y * cw + gx0 + gx * s;
                    bits[start..start + s].fill(true);
                }
            }
        }
    }
    Ok(ContentMask::new(cw, ch, bits)?)
}

fn decode_gray(bytes: &[u8]) -> Result<FrameBuffer, MaskError> {
    let img = image::load_from_memory(bytes)
        .map_err(|e| MaskError::UnreadableImage(e.to_string()))?
        .into_luma8();
    let (w, h) = img.dimensions();
    Ok(FrameBuffer::new(w as usize, h as usize, img.into_raw())?)
}

/// Nearest-neighbour resample of a grayscale frame.
pub fn resize_nearest(frame: &FrameBuffer, width: usize, height: usize) -> FrameBuffer {
    if frame.dims() == (width, height) {
        return frame.clone();
    }
    let (sw, sh) = frame.dims();
    let mut px = Vec::with_capacity(width * height);
    for y in 0..height {
        let sy = (y * sh) / height;
        for x in 0..width {
            px.push(frame.get((x * sw) / width, sy));
        }
    }
    FrameBuffer::new(width, height, px).expect("non-zero target")
}

/// Threshold an image at 128. `target` rescales (nearest neighbour) before
/// thresholding.
pub fn load_mask_image(bytes: &[u8], target: Option<(usize, usize)>) -> Result<ContentMask, MaskError> {
    let mut frame = decode_gray(bytes)?;
    if let Some((w, h)) = target {
        frame = resize_nearest(&frame, w, h);
    }
    let (w, h) = frame.dims();
    let mask = ContentMask::new(w, h, frame.pixels().iter().map(|&p| p >= 128).collect())?;
    if mask.count_foreground() == 0 {
        return Err(MaskError::EmptyMask);
    }
    Ok(mask)
}

pub fn load_mask_file(path: &Path, target: Option<(usize, usize)>) -> Result<ContentMask, MaskError> {
    load_mask_image(&std::fs::read(path)?, target)
}

fn is_image_file(p: &Path) -> bool {
    matches!(
        p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("png")
    )
}

/// All PNG files of a directory in lexicographic file-name order.
pub fn load_depth_sequence(dir: &Path) -> Result<DepthSequence, MaskError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_image_file(p))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(MaskError::EmptyDirectory(dir.to_path_buf()));
    }
    let mut frames = Vec::with_capacity(paths.len());
    for p in &paths {
        let f = decode_gray(&std::fs::read(p)?)?;
        if let Some(first) = frames.first().map(FrameBuffer::dims) {
            if f.dims() != first {
                return Err(MaskError::MixedDimensions {
                    path: p.clone(),
                    expected: first,
                    actual: f.dims(),
                });
            }
        }
        frames.push(f);
    }
    Ok(DepthSequence::new(frames)?)
}
