//! Seeded content generators for building datasets without external
//! assets: random shapes, short words, an ant silhouette and a walking
//! figure rendered as a depth sequence.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::DepthThresholds;
use crate::mask::{Shape, ShapeSpec};
use crate::types::{ContentMask, DepthSequence, FrameBuffer, TypeError};

/// Four-letter words used for text videos.
pub const WORDS: [&str; 16] = [
    "GOLD", "FISH", "WAVE", "MILK", "JUMP", "TREE", "BIRD", "LAMP", "DOOR", "STAR", "MOON", "RAIN", "SHIP", "ROCK",
    "WIND", "FROG",
];

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A word from [`WORDS`] picked by `seed`.
pub fn random_word(seed: u64) -> &'static str {
    WORDS.choose(&mut rng(seed)).expect("non-empty list")
}

/// Largest integer text scale at which `chars` glyphs span at most
/// `fill` of the canvas width and height.
pub fn text_scale_for(chars: usize, canvas: (usize, usize), fill: f64) -> usize {
    let by_w = (canvas.0 as f64 * fill / (8 * chars.max(1)) as f64).floor();
    let by_h = (canvas.1 as f64 * fill / 8.0).floor();
    by_w.min(by_h).max(1.0) as usize
}

/// A random circle, square, rectangle or regular polygon, centred near
/// the middle of the canvas with its extent between 20% and 35% of the
/// shorter side as radius.
pub fn random_shape(seed: u64, canvas: (usize, usize)) -> ShapeSpec {
    let mut r = rng(seed);
    let (w, h) = (canvas.0 as f64, canvas.1 as f64);
    let side = w.min(h);
    let radius = side * r.gen_range(0.20..0.35);
    let cx = w / 2.0 + r.gen_range(-0.1..0.1) * w;
    let cy = h / 2.0 + r.gen_range(-0.1..0.1) * h;
    let shape = match r.gen_range(0..6) {
        0 => Shape::Circle { cx, cy, radius },
        1 | 2 => {
            let half_w = radius;
            let half_h = if r.gen_range(0..2) == 0 { radius } else { radius * r.gen_range(0.5..0.8) };
            Shape::Rectangle {
                x: (cx - half_w).round() as usize,
                y: (cy - half_h).round() as usize,
                width: (2.0 * half_w).round() as usize,
                height: (2.0 * half_h).round() as usize,
            }
        }
        kind => {
            let n = match kind {
                3 => 3,
                4 => 5,
                _ => 6,
            };
            let rot = r.gen_range(0.0..2.0 * PI);
            Shape::regular(n, cx, cy, radius, rot)
        }
    };
    ShapeSpec::new(shape, canvas)
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (qx, qy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - qx).powi(2) + (p.1 - qy).powi(2)).sqrt()
}

/// Simple 2D primitives in unit coordinates, scaled at render time.
enum Part {
    Ellipse { c: (f64, f64), r: (f64, f64) },
    Stroke { pts: Vec<(f64, f64)>, half_width: f64 },
}

impl Part {
    fn contains(&self, p: (f64, f64)) -> bool {
        match self {
            Part::Ellipse { c, r } => ((p.0 - c.0) / r.0).powi(2) + ((p.1 - c.1) / r.1).powi(2) <= 1.0,
            Part::Stroke { pts, half_width } => pts.windows(2).any(|s| segment_distance(p, s[0], s[1]) <= *half_width),
        }
    }
}

/// Rasterize parts given in a unit box of `extent` (width, height) that is
/// scaled uniformly to fit `fill` of the canvas and centred.
fn rasterize(parts: &[Part], extent: (f64, f64), canvas: (usize, usize), fill: f64) -> Result<ContentMask, TypeError> {
    let (w, h) = canvas;
    let scale = (w as f64 * fill / extent.0).min(h as f64 * fill / extent.1);
    let ox = (w as f64 - scale * extent.0) / 2.0;
    let oy = (h as f64 - scale * extent.1) / 2.0;
    ContentMask::from_fn(w, h, |x, y| {
        let p = ((x as f64 + 0.5 - ox) / scale, (y as f64 + 0.5 - oy) / scale);
        parts.iter().any(|part| part.contains(p))
    })
}

/// Side view of an ant: head, thorax and abdomen, six jointed legs and two
/// antennae, spanning 70% of the canvas.
pub fn ant_silhouette(canvas: (usize, usize)) -> Result<ContentMask, TypeError> {
    let leg = 0.012;
    let mut parts = vec![
        Part::Ellipse {
            c: (0.17, 0.30),
            r: (0.075, 0.065),
        },
        Part::Ellipse {
            c: (0.36, 0.30),
            r: (0.12, 0.055),
        },
        Part::Stroke {
            pts: vec![(0.47, 0.30), (0.53, 0.30)],
            half_width: 0.025,
        },
        Part::Ellipse {
            c: (0.72, 0.32),
            r: (0.19, 0.11),
        },
        // antennae
        Part::Stroke {
            pts: vec![(0.13, 0.25), (0.08, 0.12), (0.01, 0.08)],
            half_width: leg * 0.8,
        },
        Part::Stroke {
            pts: vec![(0.15, 0.25), (0.13, 0.10), (0.06, 0.03)],
            half_width: leg * 0.8,
        },
    ];
    for (hip, knee, foot) in [
        ((0.30, 0.33), (0.22, 0.42), (0.12, 0.58)),
        ((0.36, 0.34), (0.36, 0.45), (0.32, 0.60)),
        ((0.42, 0.33), (0.52, 0.44), (0.62, 0.60)),
    ] {
        parts.push(Part::Stroke {
            pts: vec![hip, knee, foot],
            half_width: leg,
        });
    }
    rasterize(&parts, (0.92, 0.62), canvas, 0.7)
}

/// Depth thresholds that select the walker (near, bright) as the moving
/// layer.
pub fn walker_thresholds() -> DepthThresholds {
    DepthThresholds::new(128, 255).expect("ordered")
}

/// Depth brightness of the static scene.
const FAR: u8 = 40;
/// Depth brightness of the figure.
const NEAR: u8 = 220;

/// `frames` depth maps of a stick-limbed figure crossing the canvas with
/// swinging arms and legs, in front of a static backdrop. The seed sets
/// the walking direction, stride phase and figure height.
pub fn walker_depth(seed: u64, canvas: (usize, usize), frames: usize) -> Result<DepthSequence, TypeError> {
    let mut r = rng(seed);
    let (w, h) = (canvas.0 as f64, canvas.1 as f64);
    let height = h * r.gen_range(0.55..0.75);
    let leftward = r.gen_bool(0.5);
    let phase0 = r.gen_range(0.0..2.0 * PI);
    let travel = 0.3 * w;
    let limb = height * 0.045;
    let mut out = Vec::with_capacity(frames.max(1));
    for t in 0..frames.max(1) {
        let s = if frames > 1 { t as f64 / (frames - 1) as f64 } else { 0.0 };
        let dir = if leftward { -1.0 } else { 1.0 };
        let cx = w / 2.0 + dir * travel * (s - 0.5);
        let top = (h - height) / 2.0;
        let swing = 0.45 * (phase0 + 4.0 * PI * s).sin();
        let hip = (cx, top + 0.55 * height);
        let shoulder = (cx, top + 0.22 * height);
        let foot = |a: f64| (hip.0 + 0.42 * height * a.sin(), hip.1 + 0.42 * height * a.cos());
        let hand = |a: f64| (shoulder.0 + 0.33 * height * a.sin(), shoulder.1 + 0.33 * height * a.cos());
        let parts = [
            Part::Ellipse {
                c: (cx, top + 0.09 * height),
                r: (0.08 * height, 0.09 * height),
            },
            Part::Stroke {
                pts: vec![shoulder, hip],
                half_width: 1.6 * limb,
            },
            Part::Stroke {
                pts: vec![hip, foot(swing)],
                half_width: limb,
            },
            Part::Stroke {
                pts: vec![hip, foot(-swing)],
                half_width: limb,
            },
            Part::Stroke {
                pts: vec![shoulder, hand(-swing)],
                half_width: 0.8 * limb,
            },
            Part::Stroke {
                pts: vec![shoulder, hand(swing)],
                half_width: 0.8 * limb,
            },
        ];
        let px: Vec<u8> = (0..canvas.0 * canvas.1)
            .map(|i| {
                let p = ((i % canvas.0) as f64 + 0.5, (i / canvas.0) as f64 + 0.5);
                if parts.iter().any(|part| part.contains(p)) {
                    NEAR
                } else {
                    FAR
                }
            })
            .collect();
        out.push(FrameBuffer::new(canvas.0, canvas.1, px)?);
    }
    DepthSequence::new(out)
}

/// Content generated from a recipe alone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fixture {
    Ant,
    RandomShape { seed: u64 },
    Walker { seed: u64, frames: usize },
}

pub enum FixtureContent {
    Mask(ContentMask),
    Depth(DepthSequence, DepthThresholds),
}

impl Fixture {
    pub fn render(&self, canvas: (usize, usize)) -> Result<FixtureContent, crate::mask::MaskError> {
        Ok(match self {
            Fixture::Ant => FixtureContent::Mask(ant_silhouette(canvas)?),
            Fixture::RandomShape { seed } => FixtureContent::Mask(crate::mask::render_shape_mask(&random_shape(*seed, canvas))?),
            Fixture::Walker { seed, frames } => FixtureContent::Depth(walker_depth(*seed, canvas, *frames)?, walker_thresholds()),
        })
    }

    /// Acceptable answers for a video of this content.
    pub fn labels(&self, canvas: (usize, usize)) -> BTreeSet<String> {
        let words: &[&str] = match self {
            Fixture::Ant => &["ant", "insect"],
            Fixture::RandomShape { seed } => return [random_shape(*seed, canvas).label().to_string()].into(),
            Fixture::Walker { .. } => &["person walking", "walking", "person", "human", "man walking"],
        };
        words.iter().map(|s| s.to_string()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::render_shape_mask;

    #[test]
    fn shapes_are_deterministic_and_renderable() {
        for seed in 0..40 {
            let a = random_shape(seed, (256, 256));
            assert_eq!(a, random_shape(seed, (256, 256)));
            let m = render_shape_mask(&a).unwrap();
            assert!(m.is_encodable(), "seed {seed}");
        }
        let labels: BTreeSet<&str> = (0..40).map(|s| random_shape(s, (256, 256)).label()).collect();
        assert!(labels.len() >= 4, "{labels:?}");
    }

    #[test]
    fn ant_is_one_piece() {
        let m = ant_silhouette((480, 270)).unwrap();
        let (_, sizes) = crate::decoder::components(m.bits(), 480, 270);
        assert_eq!(sizes.len(), 1);
        let frac = m.count_foreground() as f64 / (480.0 * 270.0);
        assert!(frac > 0.05 && frac < 0.4, "{frac}");
    }

    #[test]
    fn walker_moves() {
        let d = walker_depth(3, (160, 90), 5).unwrap();
        assert_eq!(d.len(), 5);
        assert_ne!(d.frames()[0], d.frames()[4]);
        let th = walker_thresholds();
        assert!(d.frames()[0].pixels().iter().any(|&p| th.contains(p)));
        assert!(d.frames()[0].pixels().iter().any(|&p| !th.contains(p)));
    }

    #[test]
    fn text_scale_fits() {
        assert_eq!(text_scale_for(4, (960, 540), 0.8), 24);
        assert_eq!(text_scale_for(4, (10, 10), 0.8), 1);
    }
}
