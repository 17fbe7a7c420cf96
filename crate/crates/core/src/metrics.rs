//! Signal-to-noise metrics over optical flow.
//!
//! Four measures, all in decibels:
//!
//! * **basic** — mean squared Frobenius norm of the flow Jacobian (motion
//!   boundary energy) against the intensity variance of the first frame;
//! * **perceptual** — the time-averaged boundary-strength map against the
//!   first frame, both weighted in frequency by `W(f) = f·e^(−f/f0)`;
//! * **temporal coherence** — variance of the per-pixel direction-coherence
//!   map `C` against its mean local variance;
//! * **motion contrast** — separation of mean foreground and background flow
//!   against their pooled spread.
//!
//! Every aggregate skips a border band of `border_exclude` pixels, where block
//! matching relies on clamped samples. Variances are population variances.
//!
//! The per-pixel time sums are gathered in one pass by [`FlowStats`], so a
//! whole video is analysed without keeping its flow fields in memory.

use std::f64::consts::E;
use std::fmt;

use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::decoder::{self, DecodeError, DecodeOptions, EstimatedMask, MapKind, ScalarMap};
use crate::encoder::FrameSequence;
use crate::flow::{estimate_flow, FlowError, FlowOptions};
use crate::types::{ContentMask, EncodingParams, FlowField, FrameBuffer};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("no flow fields")]
    NoFlows,
    #[error("need at least {needed} flow fields, got {got}")]
    TooFewFlows { needed: usize, got: usize },
    #[error("need at least 3 frames, got {0}")]
    TooFewFrames(usize),
    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch { expected: (usize, usize), actual: (usize, usize) },
    #[error("border exclusion of {border} px leaves nothing of a {w}x{h} frame")]
    EmptyInterior { w: usize, h: usize, border: usize },
    #[error("first frame has zero intensity variance")]
    ZeroNoiseVariance,
    #[error("noise frame has no frequency-weighted energy")]
    ZeroWeightedNoise,
    #[error("{0} region is empty inside the interior")]
    EmptyRegion(&'static str),
    #[error("invalid metric config: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MaskSource {
    #[default]
    GroundTruth,
    Estimated,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    /// Peak of the frequency weighting, cycles per pixel.
    pub f0: f64,
    /// Mean flow magnitude a pixel needs to count as moving, pixels/frame.
    pub tau: f64,
    /// Edge of the square neighbourhood for local variance, odd.
    pub local_window: usize,
    /// Border band skipped by every aggregate, pixels.
    pub border_exclude: usize,
    pub mask_source: MaskSource,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self::for_flow(&FlowOptions::default())
    }
}

impl MetricConfig {
    /// Defaults with the border band matched to the flow estimator.
    pub fn for_flow(o: &FlowOptions) -> Self {
        Self {
            f0: 0.1,
            tau: 0.5,
            local_window: 5,
            border_exclude: o.border_band(),
            mask_source: MaskSource::GroundTruth,
        }
    }

    pub fn validate(&self) -> Result<(), MetricError> {
        if !(self.f0 > 0.0 && self.f0.is_finite()) {
            return Err(MetricError::InvalidConfig("f0 must be positive"));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(MetricError::InvalidConfig("tau must be non-negative"));
        }
        if self.local_window < 3 || self.local_window.is_multiple_of(2) {
            return Err(MetricError::InvalidConfig("local_window must be odd and at least 3"));
        }
        Ok(())
    }

    pub(crate) fn interior(&self, w: usize, h: usize) -> Result<Interior, MetricError> {
        let b = self.border_exclude;
        if 2 * b >= w || 2 * b >= h {
            return Err(MetricError::EmptyInterior { w, h, border: b });
        }
        Ok(Interior {
            x0: b,
            x1: w - b,
            y0: b,
            y1: h - b,
        })
    }
}

/// Half-open pixel rectangle that aggregates run over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Interior {
    pub x0: usize,
    pub x1: usize,
    pub y0: usize,
    pub y1: usize,
}

impl Interior {
    pub fn count(&self) -> usize {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

/// A decibel value, or one of the sentinels a degenerate ratio produces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Db {
    Finite(f64),
    /// Zero numerator: no signal at all.
    NegInfinity,
    /// Zero denominator with a positive numerator.
    Infinity,
    /// Both sides zero, or the metric cannot be evaluated for this input.
    NotApplicable,
}

impl Db {
    pub fn from_ratio(num: f64, den: f64) -> Self {
        match (num > 0.0, den > 0.0) {
            (true, true) => Db::Finite(10.0 * (num / den).log10()),
            (true, false) => Db::Infinity,
            (false, true) => Db::NegInfinity,
            (false, false) => Db::NotApplicable,
        }
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Db::Finite(v) => Some(*v),
            _ => None,
        }
    }

    /// Numeric view: infinities map to `±inf`, not-applicable to `None`.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Db::Finite(v) => Some(*v),
            Db::NegInfinity => Some(f64::NEG_INFINITY),
            Db::Infinity => Some(f64::INFINITY),
            Db::NotApplicable => None,
        }
    }
}

impl fmt::Display for Db {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Db::Finite(v) => write!(f, "{v:.2}"),
            Db::NegInfinity => f.write_str("-inf"),
            Db::Infinity => f.write_str("inf"),
            Db::NotApplicable => f.write_str("n/a"),
        }
    }
}

impl Serialize for Db {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Db::Finite(v) => s.serialize_f64(*v),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Db {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Db::Finite(v)),
            Raw::Text(t) => match t.as_str() {
                "-inf" => Ok(Db::NegInfinity),
                "inf" => Ok(Db::Infinity),
                "n/a" => Ok(Db::NotApplicable),
                _ => Err(serde::de::Error::custom(format!("expected a number, \"-inf\", \"inf\" or \"n/a\", got {t:?}"))),
            },
        }
    }
}

/// Which mask the motion-contrast value was computed against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskUsed {
    None,
    GroundTruth,
    Estimated,
}

/// Everything needed to reproduce a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub params: Option<EncodingParams>,
    pub config: MetricConfig,
    pub flow: FlowOptions,
    pub frames: usize,
    pub mask_used: MaskUsed,
    /// How `combined_db` was formed.
    pub combined_rule: String,
    /// How the direction statistics treat slow pixels.
    pub coherence_rule: String,
}

pub const COMBINED_RULE: &str = "arithmetic mean of the finite component values";
pub const COHERENCE_RULE: &str =
    "circular variance over all flow fields; magnitude gate applied to the time-mean magnitude";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrReport {
    pub basic_db: Db,
    pub perceptual_db: Db,
    pub temporal_coherence_db: Db,
    pub motion_contrast_db: Db,
    pub combined_db: Db,
    /// No motion boundaries at all: nothing is encoded.
    pub contentless: bool,
    pub provenance: Provenance,
}

/// Mean of the finite values, not-applicable when there are none.
pub fn combine(values: &[Db]) -> Db {
    let finite: Vec<f64> = values.iter().filter_map(Db::finite).collect();
    if finite.is_empty() {
        Db::NotApplicable
    } else {
        Db::Finite(finite.iter().sum::<f64>() / finite.len() as f64)
    }
}

/// Squared Frobenius norm of the flow Jacobian at `(x, y)`, central
/// differences with indices clamped at the image edge.
#[inline]
pub(crate) fn jacobian_sq(f: &FlowField, x: usize, y: usize) -> f64 {
    let (w, h) = f.dims();
    let (xl, xr) = (x.saturating_sub(1), (x + 1).min(w - 1));
    let (yu, yd) = (y.saturating_sub(1), (y + 1).min(h - 1));
    let (u, v) = (f.u(), f.v());
    let dx = (xr - xl) as f64;
    let dy = (yd - yu) as f64;
    let d = |p: &[f32], i: usize, j: usize, n: f64| if n > 0.0 { (p[i] as f64 - p[j] as f64) / n } else { 0.0 };
    let ux = d(u, y * w + xr, y * w + xl, dx);
    let vx = d(v, y * w + xr, y * w + xl, dx);
    let uy = d(u, yd * w + x, yu * w + x, dy);
    let vy = d(v, yd * w + x, yu * w + x, dy);
    ux * ux + uy * uy + vx * vx + vy * vy
}

/// Per-pixel time sums over a stream of flow fields, restricted to the
/// interior (all maps are zero outside it).
#[derive(Clone, Debug)]
pub struct FlowStats {
    w: usize,
    h: usize,
    interior: Interior,
    tau: f64,
    local_window: usize,
    n: usize,
    /// Σ‖J‖² over interior pixels and time.
    jacobian_energy: f64,
    boundary: Vec<f64>,
    dir_x: Vec<f64>,
    dir_y: Vec<f64>,
    magnitude: Vec<f64>,
    sum_u: Vec<f64>,
    sum_v: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl FlowStats {
    pub fn new(w: usize, h: usize, cfg: &MetricConfig) -> Result<Self, MetricError> {
        cfg.validate()?;
        let interior = cfg.interior(w, h)?;
        let z = || vec![0.0; w * h];
        Ok(Self {
            w,
            h,
            interior,
            tau: cfg.tau,
            local_window: cfg.local_window,
            n: 0,
            jacobian_energy: 0.0,
            boundary: z(),
            dir_x: z(),
            dir_y: z(),
            magnitude: z(),
            sum_u: z(),
            sum_v: z(),
            sum_sq: z(),
        })
    }

    /// Accumulates a whole list of flows.
    pub fn from_flows(flows: &[FlowField], cfg: &MetricConfig) -> Result<Self, MetricError> {
        let first = flows.first().ok_or(MetricError::NoFlows)?;
        let mut s = Self::new(first.width(), first.height(), cfg)?;
        for f in flows {
            s.add(f)?;
        }
        Ok(s)
    }

    /// Estimates and accumulates the flows of consecutive frame pairs.
    /// Pairs are estimated in parallel in fixed-size chunks and added in
    /// order, so the result does not depend on the thread count.
    pub fn from_frames(frames: &[FrameBuffer], flow: &FlowOptions, cfg: &MetricConfig) -> Result<Self, MetricError> {
        const CHUNK: usize = 8;
        if frames.len() < 2 {
            return Err(MetricError::Flow(FlowError::TooFewFrames(frames.len())));
        }
        let (w, h) = frames[0].dims();
        let mut s = Self::new(w, h, cfg)?;
        let pairs: Vec<usize> = (0..frames.len() - 1).collect();
        for chunk in pairs.chunks(CHUNK) {
            let flows: Vec<FlowField> = chunk
                .par_iter()
                .map(|&i| estimate_flow(&frames[i], &frames[i + 1], flow))
                .collect::<Result<_, _>>()?;
            for f in &flows {
                s.add(f)?;
            }
        }
        Ok(s)
    }

    pub fn add(&mut self, f: &FlowField) -> Result<(), MetricError> {
        if f.dims() != (self.w, self.h) {
            return Err(MetricError::DimensionMismatch {
                expected: (self.w, self.h),
                actual: f.dims(),
            });
        }
        let Interior { x0, x1, y0, y1 } = self.interior;
        let w = self.w;
        // central differences need a neighbour on every side
        if x0 == 0 || y0 == 0 || x1 >= w || y1 >= self.h {
            return self.add_clamped(f);
        }
        let (fu, fv) = (f.u(), f.v());
        let mut energy = 0.0;
        let mut j2 = vec![0.0; x1 - x0];
        for y in y0..y1 {
            let row = y * w + x0..y * w + x1;
            let (left, right) = (row.start - 1..row.end - 1, row.start + 1..row.end + 1);
            let (up, down) = (row.start - w..row.end - w, row.start + w..row.end + w);
            let grads = fu[left.clone()]
                .iter()
                .zip(&fu[right.clone()])
                .zip(fu[up.clone()].iter().zip(&fu[down.clone()]))
                .zip(fv[left].iter().zip(&fv[right]).zip(fv[up].iter().zip(&fv[down])));
            for (o, (((&ul, &ur), (&uu, &ud)), ((&vl, &vr), (&vu, &vd)))) in j2.iter_mut().zip(grads) {
                let ux = (ur as f64 - ul as f64) / 2.0;
                let uy = (ud as f64 - uu as f64) / 2.0;
                let vx = (vr as f64 - vl as f64) / 2.0;
                let vy = (vd as f64 - vu as f64) / 2.0;
                *o = ux * ux + uy * uy + vx * vx + vy * vy;
            }
            energy += j2.iter().sum::<f64>();
            let acc = self.boundary[row.clone()]
                .iter_mut()
                .zip(&mut self.dir_x[row.clone()])
                .zip(&mut self.dir_y[row.clone()])
                .zip(&mut self.magnitude[row.clone()])
                .zip(&mut self.sum_u[row.clone()])
                .zip(&mut self.sum_v[row.clone()])
                .zip(&mut self.sum_sq[row.clone()]);
            for ((((((((b, dx), dy), mag), su), sv), sq), &j), (&u, &v)) in
                acc.zip(&j2).zip(fu[row.clone()].iter().zip(&fv[row]))
            {
                let (u, v) = (u as f64, v as f64);
                let m2 = u * u + v * v;
                let m = m2.sqrt();
                let inv = if m > 0.0 { 1.0 / m } else { 0.0 };
                *b += j.sqrt();
                *dx += u * inv;
                *dy += v * inv;
                *mag += m;
                *su += u;
                *sv += v;
                *sq += m2;
            }
        }
        self.jacobian_energy += energy;
        self.n += 1;
        Ok(())
    }

    /// `add` for an interior touching the frame edge, where gradients use
    /// one-sided differences.
    fn add_clamped(&mut self, f: &FlowField) -> Result<(), MetricError> {
        let Interior { x0, x1, y0, y1 } = self.interior;
        let w = self.w;
        let mut energy = 0.0;
        for y in y0..y1 {
            for x in x0..x1 {
                let i = y * w + x;
                let j2 = jacobian_sq(f, x, y);
                energy += j2;
                self.boundary[i] += j2.sqrt();
                let (u, v) = (f.u()[i] as f64, f.v()[i] as f64);
                let m2 = u * u + v * v;
                let m = m2.sqrt();
                if m > 0.0 {
                    self.dir_x[i] += u / m;
                    self.dir_y[i] += v / m;
                }
                self.magnitude[i] += m;
                self.sum_u[i] += u;
                self.sum_v[i] += v;
                self.sum_sq[i] += m2;
            }
        }
        self.jacobian_energy += energy;
        self.n += 1;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.w, self.h)
    }

    /// Mean squared Jacobian norm over interior pixels and time.
    pub fn boundary_energy(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.jacobian_energy / (self.n * self.interior.count()) as f64
    }

    /// Time-averaged Jacobian norm per pixel.
    pub fn boundary_map(&self) -> ScalarMap {
        let n = self.n.max(1) as f64;
        ScalarMap::new(self.w, self.h, self.boundary.iter().map(|&b| b / n).collect(), MapKind::BoundaryStrength)
            .expect("finite by construction")
    }

    /// Per-pixel coherence `C = exp(−Var_θ)` where the time-mean magnitude
    /// exceeds `tau`, else 0. `Var_θ = 1 − R` with `R` the length of the mean
    /// unit direction over all flow fields (a zero vector adds nothing to the
    /// sum but still counts).
    pub fn coherence_map(&self) -> ScalarMap {
        let n = self.n.max(1) as f64;
        let mut values = vec![0.0; self.w * self.h];
        let Interior { x0, x1, y0, y1 } = self.interior;
        for y in y0..y1 {
            for x in x0..x1 {
                let i = y * self.w + x;
                if self.magnitude[i] / n > self.tau {
                    let r = (self.dir_x[i].powi(2) + self.dir_y[i].powi(2)).sqrt() / n;
                    let var = (1.0 - r).clamp(0.0, 1.0);
                    values[i] = (-var).exp();
                }
            }
        }
        ScalarMap::new(self.w, self.h, values, MapKind::Coherence).expect("finite by construction")
    }

    /// Pooled mean vector and mean squared deviation of the flow over the
    /// interior pixels selected by `select`.
    fn region_moments(&self, select: impl Fn(usize, usize) -> bool) -> Option<((f64, f64), f64)> {
        let Interior { x0, x1, y0, y1 } = self.interior;
        let (mut n, mut su, mut sv, mut sq) = (0usize, 0.0, 0.0, 0.0);
        for y in y0..y1 {
            for x in x0..x1 {
                if select(x, y) {
                    let i = y * self.w + x;
                    n += 1;
                    su += self.sum_u[i];
                    sv += self.sum_v[i];
                    sq += self.sum_sq[i];
                }
            }
        }
        if n == 0 {
            return None;
        }
        let count = (n * self.n) as f64;
        let mu = (su / count, sv / count);
        let var = (sq / count - (mu.0 * mu.0 + mu.1 * mu.1)).max(0.0);
        Some((mu, var))
    }

    pub fn motion_contrast(&self, mask: &ContentMask) -> Result<Db, MetricError> {
        if mask.dims() != (self.w, self.h) {
            return Err(MetricError::DimensionMismatch {
                expected: (self.w, self.h),
                actual: mask.dims(),
            });
        }
        if self.n == 0 {
            return Err(MetricError::NoFlows);
        }
        let (mu_m, var_m) = self
            .region_moments(|x, y| mask.get(x, y))
            .ok_or(MetricError::EmptyRegion("foreground"))?;
        let (mu_b, var_b) = self
            .region_moments(|x, y| !mask.get(x, y))
            .ok_or(MetricError::EmptyRegion("background"))?;
        let num = (mu_m.0 - mu_b.0).powi(2) + (mu_m.1 - mu_b.1).powi(2);
        let den = 0.5 * (var_m + var_b);
        if num == 0.0 {
            return Ok(Db::NegInfinity);
        }
        Ok(Db::from_ratio(num, den))
    }

    pub fn temporal_coherence(&self) -> Result<Db, MetricError> {
        if self.n < 2 {
            return Err(MetricError::TooFewFlows { needed: 2, got: self.n });
        }
        Ok(coherence_snr(&self.coherence_map(), self.interior, self.local_window))
    }
}

/// `10·log10(Var(C) / mean local variance of C)` over the interior;
/// not applicable when `C` is constant there.
pub(crate) fn coherence_snr(c: &ScalarMap, interior: Interior, local_window: usize) -> Db {
    let Interior { x0, x1, y0, y1 } = interior;
    let w = c.width();
    let vals = c.values();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut s, mut s2) = (0.0, 0.0);
    for y in y0..y1 {
        for &v in &vals[y * w + x0..y * w + x1] {
            lo = lo.min(v);
            hi = hi.max(v);
            s += v;
            s2 += v * v;
        }
    }
    if lo == hi {
        return Db::NotApplicable;
    }
    let n = interior.count() as f64;
    let global = (s2 / n - (s / n).powi(2)).max(0.0);
    let local = mean_local_variance(vals, w, interior, local_window / 2);
    Db::from_ratio(global, local)
}

/// Mean over interior pixels of the population variance in the
/// `(2r+1)²` window, clipped to the interior.
fn mean_local_variance(vals: &[f64], w: usize, interior: Interior, r: usize) -> f64 {
    let Interior { x0, x1, y0, y1 } = interior;
    let (iw, ih) = (x1 - x0, y1 - y0);
    // integral images of the interior, (iw+1)×(ih+1)
    let mut s = vec![0.0; (iw + 1) * (ih + 1)];
    let mut s2 = vec![0.0; (iw + 1) * (ih + 1)];
    for y in 0..ih {
        let (mut row, mut row2) = (0.0, 0.0);
        for x in 0..iw {
            let v = vals[(y + y0) * w + x + x0];
            row += v;
            row2 += v * v;
            s[(y + 1) * (iw + 1) + x + 1] = s[y * (iw + 1) + x + 1] + row;
            s2[(y + 1) * (iw + 1) + x + 1] = s2[y * (iw + 1) + x + 1] + row2;
        }
    }
    let rect = |t: &[f64], xa: usize, ya: usize, xb: usize, yb: usize| {
        t[yb * (iw + 1) + xb] - t[ya * (iw + 1) + xb] - t[yb * (iw + 1) + xa] + t[ya * (iw + 1) + xa]
    };
    let mut total = 0.0;
    for y in 0..ih {
        let (ya, yb) = (y.saturating_sub(r), (y + r + 1).min(ih));
        for x in 0..iw {
            let (xa, xb) = (x.saturating_sub(r), (x + r + 1).min(iw));
            let n = ((xb - xa) * (yb - ya)) as f64;
            let m = rect(&s, xa, ya, xb, yb) / n;
            let var = (rect(&s2, xa, ya, xb, yb) / n - m * m).max(0.0);
            total += var;
        }
    }
    total / (iw * ih) as f64
}

fn population_variance(f: &FrameBuffer) -> f64 {
    let n = f.pixels().len() as f64;
    let mean = f.pixels().iter().map(|&p| p as f64).sum::<f64>() / n;
    f.pixels().iter().map(|&p| (p as f64 - mean).powi(2)).sum::<f64>() / n
}

fn basic_from(stats: &FlowStats, first_frame: &FrameBuffer) -> Result<Db, MetricError> {
    if first_frame.dims() != stats.dims() {
        return Err(MetricError::DimensionMismatch {
            expected: stats.dims(),
            actual: first_frame.dims(),
        });
    }
    let pn = population_variance(first_frame);
    if pn == 0.0 {
        return Err(MetricError::ZeroNoiseVariance);
    }
    Ok(Db::from_ratio(stats.boundary_energy(), pn))
}

/// Basic SNR: `10·log10(P_S / P_N)` with `P_S` the mean squared flow-Jacobian
/// norm and `P_N` the intensity variance of `first_frame`.
pub fn basic_snr(flows: &[FlowField], first_frame: &FrameBuffer, cfg: &MetricConfig) -> Result<Db, MetricError> {
    basic_from(&FlowStats::from_flows(flows, cfg)?, first_frame)
}

/// Perceptual SNR of the boundary-strength map of `flows`.
pub fn perceptual_snr(flows: &[FlowField], noise_frame: &FrameBuffer, cfg: &MetricConfig) -> Result<Db, MetricError> {
    let stats = FlowStats::from_flows(flows, cfg)?;
    perceptual_snr_from_map(&stats.boundary_map(), noise_frame, cfg)
}

/// Frequency-weighted energy ratio of `boundary` against `noise_frame`.
///
/// Both images are restricted to the interior (zero outside), zero-padded to
/// power-of-two sides and transformed; each bin is weighted by
/// `W(f) = f·e^(−f/f0)` with `f` the radial frequency in cycles per pixel on
/// the padded grid.
pub fn perceptual_snr_from_map(
    boundary: &ScalarMap,
    noise_frame: &FrameBuffer,
    cfg: &MetricConfig,
) -> Result<Db, MetricError> {
    cfg.validate()?;
    let (w, h) = boundary.dims();
    if noise_frame.dims() != (w, h) {
        return Err(MetricError::DimensionMismatch {
            expected: (w, h),
            actual: noise_frame.dims(),
        });
    }
    let interior = cfg.interior(w, h)?;
    let noise: Vec<f64> = noise_frame.pixels().iter().map(|&p| p as f64).collect();
    let sig = weighted_energy(boundary.values(), w, h, interior, cfg.f0);
    let den = weighted_energy(&noise, w, h, interior, cfg.f0);
    if den == 0.0 {
        return Err(MetricError::ZeroWeightedNoise);
    }
    Ok(Db::from_ratio(sig, den))
}

/// `Σ |H(img)|²·W(f)²` over the padded spectrum.
fn weighted_energy(img: &[f64], w: usize, h: usize, interior: Interior, f0: f64) -> f64 {
    let (pw, ph) = (w.next_power_of_two(), h.next_power_of_two());
    let mut buf = vec![Complex::new(0.0, 0.0); pw * ph];
    for y in interior.y0..interior.y1 {
        for x in interior.x0..interior.x1 {
            buf[y * pw + x].re = img[y * w + x];
        }
    }
    let mut planner = FftPlanner::<f64>::new();
    let row_fft = planner.plan_fft_forward(pw);
    for row in buf.chunks_exact_mut(pw) {
        row_fft.process(row);
    }
    let col_fft = planner.plan_fft_forward(ph);
    let mut col = vec![Complex::new(0.0, 0.0); ph];
    let mut energy = 0.0;
    let freq = |k: usize, n: usize| {
        let k = k as f64;
        let n_f = n as f64;
        if k <= n_f / 2.0 {
            k / n_f
        } else {
            (k - n_f) / n_f
        }
    };
    for x in 0..pw {
        for y in 0..ph {
            col[y] = buf[y * pw + x];
        }
        col_fft.process(&mut col);
        let fx = freq(x, pw);
        for (y, c) in col.iter().enumerate() {
            let fy = freq(y, ph);
            let f = (fx * fx + fy * fy).sqrt();
            let wf = f * (-f / f0).exp();
            energy += c.norm_sqr() * wf * wf;
        }
    }
    energy
}

/// Temporal-coherence SNR of `flows`; not applicable for a constant map.
pub fn temporal_coherence_snr(flows: &[FlowField], cfg: &MetricConfig) -> Result<Db, MetricError> {
    FlowStats::from_flows(flows, cfg)?.temporal_coherence()
}

/// Motion-contrast SNR of `flows` between `mask` and its complement.
pub fn motion_contrast_snr(flows: &[FlowField], mask: &ContentMask, cfg: &MetricConfig) -> Result<Db, MetricError> {
    FlowStats::from_flows(flows, cfg)?.motion_contrast(mask)
}

/// A report together with the maps it was computed from.
#[derive(Clone, Debug)]
pub struct VideoAnalysis {
    pub report: SnrReport,
    pub boundary: ScalarMap,
    pub coherence: ScalarMap,
    /// Present when the decoder was run and found a region.
    pub estimated: Option<EstimatedMask>,
    /// Why the decoder found nothing, when it was run.
    pub decode_error: Option<DecodeError>,
}

/// Runs flow estimation and all four metrics on a video.
///
/// With `mask_source = estimated` the contrast metric uses the decoder's mask
/// (`mask` is ignored); with `ground_truth` it uses `mask` and is
/// not applicable when none is given.
pub fn analyze_video(
    seq: &FrameSequence,
    mask: Option<&ContentMask>,
    cfg: &MetricConfig,
    flow: &FlowOptions,
) -> Result<SnrReport, MetricError> {
    Ok(analyze_video_detailed(seq, mask, cfg, flow, &DecodeOptions::default())?.report)
}

pub fn analyze_video_detailed(
    seq: &FrameSequence,
    mask: Option<&ContentMask>,
    cfg: &MetricConfig,
    flow: &FlowOptions,
    decode: &DecodeOptions,
) -> Result<VideoAnalysis, MetricError> {
    if seq.len() < 3 {
        return Err(MetricError::TooFewFrames(seq.len()));
    }
    let stats = FlowStats::from_frames(seq.frames(), flow, cfg)?;
    let first = &seq.frames()[0];
    let basic = basic_from(&stats, first)?;
    let boundary = stats.boundary_map();
    let coherence = stats.coherence_map();
    let perceptual = perceptual_snr_from_map(&boundary, first, cfg)?;
    let temporal = coherence_snr(&coherence, stats.interior, stats.local_window);

    let (mut estimated, mut decode_error) = (None, None);
    let (contrast, mask_used) = match cfg.mask_source {
        MaskSource::GroundTruth => match mask {
            Some(m) => (stats.motion_contrast(m)?, MaskUsed::GroundTruth),
            None => (Db::NotApplicable, MaskUsed::None),
        },
        MaskSource::Estimated => match decoder::estimate_mask_with(&boundary, &coherence, decode) {
            Ok(est) => {
                let db = match stats.motion_contrast(&est.mask) {
                    Ok(db) => db,
                    Err(MetricError::EmptyRegion(_)) => Db::NotApplicable,
                    Err(e) => return Err(e),
                };
                estimated = Some(est);
                (db, MaskUsed::Estimated)
            }
            Err(e) => {
                decode_error = Some(e);
                (Db::NotApplicable, MaskUsed::Estimated)
            }
        },
    };

    let report = SnrReport {
        basic_db: basic,
        perceptual_db: perceptual,
        temporal_coherence_db: temporal,
        motion_contrast_db: contrast,
        combined_db: combine(&[basic, perceptual, temporal, contrast]),
        contentless: basic == Db::NegInfinity,
        provenance: Provenance {
            params: seq.params().cloned(),
            config: *cfg,
            flow: *flow,
            frames: seq.len(),
            mask_used,
            combined_rule: COMBINED_RULE.to_string(),
            coherence_rule: COHERENCE_RULE.to_string(),
        },
    };
    Ok(VideoAnalysis {
        report,
        boundary,
        coherence,
        estimated,
        decode_error,
    })
}

/// Lower bound of a non-zero coherence value.
pub const COHERENCE_FLOOR: f64 = 1.0 / E;
