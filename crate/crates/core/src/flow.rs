//! Dense block-matching optical flow.
//!
//! Each pixel gets the integer displacement `(u, v)` minimising the sum of
//! absolute differences between the `(2·window+1)²` neighbourhood in frame `a`
//! and the same neighbourhood displaced by `(u, v)` in frame `b`. Windows are
//! clipped at the image border and samples of `b` are clamped to the image.
//!
//! The search runs coarse to fine over a 2×2-average pyramid: the coarsest
//! level searches exhaustively within `±⌈max_disp / 2^k⌉`, each finer level
//! only tests the 3×3 neighbourhoods around twice the coarser estimates of the
//! surrounding coarse pixels. The integer field is then box-smoothed.
//!
//! Ties are resolved by a total order on candidates: smaller squared length
//! first, then smaller `v`, then smaller `u`. Identical frames therefore give
//! exactly zero flow.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::FrameSequence;
use crate::types::{FlowField, FrameBuffer};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("frames differ in size: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("frame {actual:?} smaller than the {min}x{min} minimum for these options")]
    FrameTooSmall { actual: (usize, usize), min: usize },
    #[error("need at least 2 frames, got {0}")]
    TooFewFrames(usize),
    #[error("invalid flow options: {0}")]
    InvalidOptions(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowOptions {
    /// Block radius in pixels.
    pub window: usize,
    /// Largest displacement searched, pixels per frame.
    pub max_disp: usize,
    /// Pyramid levels, 1 = full resolution only.
    pub levels: usize,
    /// Box-filter radius applied to the final field, 0 disables.
    pub smoothing: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            window: 4,
            max_disp: 8,
            levels: 2,
            smoothing: 1,
        }
    }
}

impl FlowOptions {
    /// Width of the border band whose estimates rely on clamped samples.
    pub fn border_band(&self) -> usize {
        self.window + self.max_disp
    }

    pub fn min_frame_side(&self) -> usize {
        2 * (self.window + self.max_disp)
    }

    fn validate(&self) -> Result<(), FlowError> {
        if self.window == 0 {
            return Err(FlowError::InvalidOptions("window must be at least 1"));
        }
        if self.max_disp == 0 {
            return Err(FlowError::InvalidOptions("max_disp must be at least 1"));
        }
        if self.levels == 0 {
            return Err(FlowError::InvalidOptions("levels must be at least 1"));
        }
        Ok(())
    }
}

struct Plane {
    w: usize,
    h: usize,
    px: Vec<u8>,
}

impl Plane {
    fn from_frame(f: &FrameBuffer) -> Self {
        Self {
            w: f.width(),
            h: f.height(),
            px: f.pixels().to_vec(),
        }
    }

    fn half(&self) -> Self {
        let (w, h) = (self.w / 2, self.h / 2);
        let mut px = Vec::with_capacity(w * h);
        for y in 0..h {
            let r0 = &self.px[2 * y * self.w..];
            let r1 = &self.px[(2 * y + 1) * self.w..];
            for x in 0..w {
                let s = r0[2 * x] as u16 + r0[2 * x + 1] as u16 + r1[2 * x] as u16 + r1[2 * x + 1] as u16;
                px.push(((s + 2) / 4) as u8);
            }
        }
        Self { w, h, px }
    }

    #[inline]
    fn row(&self, y: usize) -> &[u8] {
        &self.px[y * self.w..(y + 1) * self.w]
    }
}

/// Candidate displacements within `±radius`, in tie-break order.
fn ordered_candidates(radius: i32) -> Vec<(i32, i32)> {
    let mut c: Vec<(i32, i32)> = (-radius..=radius)
        .flat_map(|dy| (-radius..=radius).map(move |dx| (dx, dy)))
        .collect();
    c.sort_by_key(|&(dx, dy)| (dx * dx + dy * dy, dy, dx));
    c
}

#[inline]
fn clamp_idx(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Absolute differences of row `y` of `a` against `b` displaced by `(dx, dy)`,
/// for columns `c0..=c1`.
#[allow(clippy::too_many_arguments)]
fn diff_row(a: &Plane, b: &Plane, y: usize, dx: i32, dy: i32, c0: usize, c1: usize, out: &mut [u16]) {
    let ar = a.row(y);
    let br = b.row(clamp_idx(y as isize + dy as isize, b.h));
    let w = a.w as isize;
    // columns whose displaced sample lies inside b
    let lo = (c0 as isize).max(-(dx as isize)).min(c1 as isize + 1);
    let hi = (c1 as isize).min(w - 1 - dx as isize).max(lo - 1);
    let out = &mut out[..=c1 - c0];
    for x in c0 as isize..lo {
        let i = (x - c0 as isize) as usize;
        out[i] = (ar[x as usize] as i16 - br[clamp_idx(x + dx as isize, a.w)] as i16).unsigned_abs();
    }
    if hi >= lo {
        let (lo_u, hi_u) = (lo as usize, hi as usize);
        let a_seg = &ar[lo_u..=hi_u];
        let b_seg = &br[(lo + dx as isize) as usize..=(hi + dx as isize) as usize];
        let o_seg = &mut out[lo_u - c0..=hi_u - c0];
        for ((o, &p), &q) in o_seg.iter_mut().zip(a_seg).zip(b_seg) {
                *o = p.abs_diff(q) as u16;
        }
    }
    for x in (hi + 1).max(lo)..=c1 as isize {
        let i = (x - c0 as isize) as usize;
        out[i] = (ar[x as usize] as i16 - br[clamp_idx(x + dx as isize, a.w)] as i16).unsigned_abs();
    }
}

/// Pixel box `[x0, x1] × [y0, y1]`, inclusive.
#[derive(Clone, Copy, Debug)]
struct Bbox {
    x0: usize,
    x1: usize,
    y0: usize,
    y1: usize,
}

impl Bbox {
    fn point(x: usize, y: usize) -> Self {
        Self {
            x0: x,
            x1: x,
            y0: y,
            y1: y,
        }
    }

    fn grow(&mut self, x: usize, y: usize) {
        self.x0 = self.x0.min(x);
        self.x1 = self.x1.max(x);
        self.y0 = self.y0.min(y);
        self.y1 = self.y1.max(y);
    }
}

/// Unsigned SAD accumulator. Column and prefix sums wrap; window costs are
/// exact as long as `(2r+1)²·255` fits the type.
trait Cost: Copy + Ord + std::ops::BitOr<Output = Self> + 'static {
    const ZERO: Self;
    const MAX: Self;
    fn from_diff(d: u16) -> Self;
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
}

impl Cost for u16 {
    const ZERO: Self = 0;
    const MAX: Self = u16::MAX;
    #[inline(always)]
    fn from_diff(d: u16) -> Self {
        d
    }
    #[inline(always)]
    fn add(self, o: Self) -> Self {
        self.wrapping_add(o)
    }
    #[inline(always)]
    fn sub(self, o: Self) -> Self {
        self.wrapping_sub(o)
    }
}

impl Cost for u32 {
    const ZERO: Self = 0;
    const MAX: Self = u32::MAX;
    #[inline(always)]
    fn from_diff(d: u16) -> Self {
        d as u32
    }
    #[inline(always)]
    fn add(self, o: Self) -> Self {
        self.wrapping_add(o)
    }
    #[inline(always)]
    fn sub(self, o: Self) -> Self {
        self.wrapping_sub(o)
    }
}

/// Whether every window cost of radius `r` is representable in a `u16`,
/// with `u16::MAX` left free as the "not allowed" sentinel.
fn fits_u16(r: usize) -> bool {
    (2 * r + 1).pow(2) * 255 < u16::MAX as usize
}

struct Scratch<C> {
    ring: Vec<Vec<u16>>,
    colsum: Vec<C>,
    prefix: Vec<C>,
    costs: Vec<C>,
}

impl<C: Cost> Scratch<C> {
    fn new(r: usize, w: usize) -> Self {
        Self {
            ring: vec![vec![0; w]; 2 * r + 1],
            colsum: vec![C::ZERO; w],
            prefix: vec![C::ZERO; w + 1],
            costs: vec![C::ZERO; w],
        }
    }
}

/// Runs the clipped-window SAD for one displacement over `bbox`, handing each
/// row `y` and the window costs of columns `bbox.x0..=bbox.x1` to `visit`.
fn sad_pass<C: Cost>(
    a: &Plane,
    b: &Plane,
    r: usize,
    (dx, dy): (i32, i32),
    bbox: Bbox,
    s: &mut Scratch<C>,
    mut visit: impl FnMut(usize, &[C]),
) {
    let (w, h) = (a.w, a.h);
    let c0 = bbox.x0.saturating_sub(r);
    let c1 = (bbox.x1 + r).min(w - 1);
    let n = c1 - c0 + 1;
    let ring_len = 2 * r + 1;
    let Scratch {
        ring,
        colsum,
        prefix,
        costs,
    } = s;
    let colsum = &mut colsum[..n];
    colsum.fill(C::ZERO);

    let top = bbox.y0.saturating_sub(r);
    let bottom = (bbox.y0 + r).min(h - 1);
    for yy in top..=bottom {
        let slot = &mut ring[yy % ring_len];
        diff_row(a, b, yy, dx, dy, c0, c1, slot);
        for (c, &d) in colsum.iter_mut().zip(&slot[..n]) {
            *c = c.add(C::from_diff(d));
        }
    }

    // interior columns whose window is not clipped by the image
    let xs = bbox.x0.max(r);
    let xe = bbox.x1.min(w - 1 - r);
    let window = |x: usize, prefix: &[C]| {
        let lo = x.saturating_sub(r) - c0;
        let hi = (x + r).min(w - 1) - c0;
        prefix[hi + 1].sub(prefix[lo])
    };

    for y in bbox.y0..=bbox.y1 {
        if y > bbox.y0 {
            if y > r {
                let old = &ring[(y - r - 1) % ring_len];
                for (c, &d) in colsum.iter_mut().zip(&old[..n]) {
                    *c = c.sub(C::from_diff(d));
                }
            }
            let add = y + r;
            if add < h {
                let slot = &mut ring[add % ring_len];
                diff_row(a, b, add, dx, dy, c0, c1, slot);
                for (c, &d) in colsum.iter_mut().zip(&slot[..n]) {
                    *c = c.add(C::from_diff(d));
                }
            }
        }
        let prefix = &mut prefix[..=n];
        prefix[0] = C::ZERO;
        let mut acc = C::ZERO;
        for (p, &c) in prefix[1..].iter_mut().zip(colsum.iter()) {
            acc = acc.add(c);
            *p = acc;
        }
        let costs = &mut costs[..bbox.x1 - bbox.x0 + 1];
        if xs <= xe {
            for x in bbox.x0..xs {
                costs[x - bbox.x0] = window(x, prefix);
            }
            let hi = &prefix[xs + r + 1 - c0..=xe + r + 1 - c0];
            let lo = &prefix[xs - r - c0..=xe - r - c0];
            for ((o, &p), &q) in costs[xs - bbox.x0..=xe - bbox.x0].iter_mut().zip(hi).zip(lo) {
                *o = p.sub(q);
            }
            for x in xe + 1..=bbox.x1 {
                costs[x - bbox.x0] = window(x, prefix);
            }
        } else {
            for x in bbox.x0..=bbox.x1 {
                costs[x - bbox.x0] = window(x, prefix);
            }
        }
        visit(y, costs);
    }
}

/// Keeps the first strictly smaller cost; written branch-free so it vectorises.
#[inline]
fn update_row<C: Cost>(best_cost: &mut [C], best: &mut [u16], costs: &[C], k: u16) {
    for ((bc, bi), &c) in best_cost.iter_mut().zip(best.iter_mut()).zip(costs) {
        let old = *bc;
        *bi = if c < old { k } else { *bi };
        *bc = old.min(c);
    }
}

fn to_vectors(best: &[u16], cands: &[(i32, i32)]) -> Vec<(i16, i16)> {
    best.iter()
        .map(|&k| {
            let (u, v) = cands[k as usize];
            (u as i16, v as i16)
        })
        .collect()
}

/// Exhaustive search over `±radius` at one level.
fn full_search<C: Cost>(a: &Plane, b: &Plane, r: usize, radius: i32) -> Vec<(i16, i16)> {
    let (w, h) = (a.w, a.h);
    let mut best_cost = vec![C::MAX; w * h];
    let mut best = vec![0u16; w * h];
    let mut scratch = Scratch::<C>::new(r, w);
    let all = Bbox {
        x0: 0,
        x1: w - 1,
        y0: 0,
        y1: h - 1,
    };
    let cands = ordered_candidates(radius);
    for (k, &d) in cands.iter().enumerate() {
        sad_pass(a, b, r, d, all, &mut scratch, |y, costs| {
            let row = y * w..(y + 1) * w;
            update_row(&mut best_cost[row.clone()], &mut best[row], costs, k as u16);
        });
    }
    to_vectors(&best, &cands)
}

/// Tests, at every pixel, the 3×3 neighbourhoods of twice the coarse
/// estimates found at its own and the eight surrounding coarse pixels. Using
/// the neighbours lets a correct estimate propagate into coarse pixels whose
/// own match was spurious.
/// Coarse rows per refinement band.
const BAND: usize = 32;

fn refine<C: Cost>(a: &Plane, b: &Plane, r: usize, radius: i32, coarse: &[(i16, i16)], cw: usize, ch: usize) -> Vec<(i16, i16)> {
    let (w, h) = (a.w, a.h);
    let cands = ordered_candidates(radius);
    let side = (2 * radius + 1) as usize;
    let cell = |u: i32, v: i32| (v + radius) as usize * side + (u + radius) as usize;
    let words = (side * side).div_ceil(64);

    // candidate bitset contributed by one upsampled coarse estimate
    let mut center_bits = vec![0u64; side * side * words];
    for cv in -radius..=radius {
        for cu in -radius..=radius {
            let bits = &mut center_bits[cell(cu, cv) * words..(cell(cu, cv) + 1) * words];
            for v in (cv - 1).max(-radius)..=(cv + 1).min(radius) {
                for u in (cu - 1).max(-radius)..=(cu + 1).min(radius) {
                    let k = cell(u, v);
                    bits[k / 64] |= 1 << (k % 64);
                }
            }
        }
    }

    // Candidate sets depend only on the coarse pixel a fine pixel falls in.
    // Bounding boxes are tracked per horizontal band so that a stray
    // candidate only costs work near where it occurs.
    let bands = ch.div_ceil(BAND);
    // word-major so that one word of a coarse row is contiguous
    let plane = cw * ch;
    let mut allowed = vec![0u64; plane * words];
    let mut center_boxes: Vec<Option<Bbox>> = vec![None; bands * side * side];
    let upsampled = |(cu, cv): (i16, i16)| {
        cell(
            (2 * cu as i32).clamp(-radius, radius),
            (2 * cv as i32).clamp(-radius, radius),
        )
    };
    for cy in 0..ch {
        let band = cy / BAND;
        let (ny0, ny1) = (cy.saturating_sub(1), (cy + 1).min(ch - 1));
        for cx in 0..cw {
            let (nx0, nx1) = (cx.saturating_sub(1), (cx + 1).min(cw - 1));
            let own = coarse[cy * cw + cx];
            let uniform = (ny0..=ny1).all(|ny| coarse[ny * cw + nx0..=ny * cw + nx1].iter().all(|&e| e == own));
            let mut seen = [usize::MAX; 9];
            let mut nc = 0;
            if uniform {
                seen[0] = upsampled(own);
                nc = 1;
            } else {
                for ny in ny0..=ny1 {
                    for &e in &coarse[ny * cw + nx0..=ny * cw + nx1] {
                        let c = upsampled(e);
                        if !seen[..nc].contains(&c) {
                            seen[nc] = c;
                            nc += 1;
                        }
                    }
                }
            }
            for &c in &seen[..nc] {
                for (wd, &m) in center_bits[c * words..(c + 1) * words].iter().enumerate() {
                    allowed[wd * plane + cy * cw + cx] |= m;
                }
                match &mut center_boxes[band * side * side + c] {
                    Some(bb) => bb.grow(cx, cy),
                    slot => *slot = Some(Bbox::point(cx, cy)),
                }
            }
        }
    }

    let mut best_cost = vec![C::MAX; w * h];
    let mut best = vec![0u16; w * h];
    let mut scratch = Scratch::<C>::new(r, w);
    let mut masked = vec![C::ZERO; w];
    let mut gate = vec![C::ZERO; cw];
    let mut boxes: Vec<Option<Bbox>> = vec![None; side * side];
    for band in 0..bands {
        // a candidate is needed wherever a centre within ±1 of it occurs
        boxes.fill(None);
        for cv in -radius..=radius {
            for cu in -radius..=radius {
                let Some(cb) = center_boxes[band * side * side + cell(cu, cv)] else { continue };
                for v in (cv - 1).max(-radius)..=(cv + 1).min(radius) {
                    for u in (cu - 1).max(-radius)..=(cu + 1).min(radius) {
                        match &mut boxes[cell(u, v)] {
                            Some(bb) => {
                                bb.grow(cb.x0, cb.y0);
                                bb.grow(cb.x1, cb.y1);
                            }
                            slot => *slot = Some(cb),
                        }
                    }
                }
            }
        }
        for (k, &d) in cands.iter().enumerate() {
            let c = cell(d.0, d.1);
            let Some(cb) = boxes[c] else { continue };
            // the last fine row/column maps onto the last coarse one when w or h is odd
            let bbox = Bbox {
                x0: 2 * cb.x0,
                x1: if cb.x1 == cw - 1 { w - 1 } else { 2 * cb.x1 + 1 },
                y0: 2 * cb.y0,
                y1: if cb.y1 == ch - 1 { h - 1 } else { 2 * cb.y1 + 1 },
            };
            let (word, bit) = (c / 64, 1u64 << (c % 64));
            sad_pass(a, b, r, d, bbox, &mut scratch, |y, costs| {
                // 0 where the coarse pixel allows d, all ones elsewhere
                let first = word * plane + (y / 2).min(ch - 1) * cw + cb.x0;
                let gate = &mut gate[..cb.x1 - cb.x0 + 1];
                for (g, &bits) in gate.iter_mut().zip(&allowed[first..]) {
                    *g = if bits & bit != 0 { C::ZERO } else { C::MAX };
                }
                let m = &mut masked[..costs.len()];
                for ((o, c), &g) in m.chunks_exact_mut(2).zip(costs.chunks_exact(2)).zip(gate.iter()) {
                    o[0] = c[0] | g;
                    o[1] = c[1] | g;
                }
                if m.len() % 2 == 1 {
                    let last = m.len() - 1;
                    m[last] = costs[last] | gate[gate.len() - 1];
                }
                let row = y * w + bbox.x0..y * w + bbox.x1 + 1;
                update_row(&mut best_cost[row.clone()], &mut best[row], m, k as u16);
            });
        }
    }
    to_vectors(&best, &cands)
}

/// Mean over the clipped `(2r+1)²` window, separable.
pub(crate) fn box_smooth(src: &[f32], w: usize, h: usize, r: usize) -> Vec<f32> {
    if r == 0 {
        return src.to_vec();
    }
    // horizontal window sums and counts
    let mut horiz = vec![0f64; w * h];
    let mut prefix = vec![0f64; w + 1];
    for (row, out) in src.chunks_exact(w).zip(horiz.chunks_exact_mut(w)) {
        for x in 0..w {
            prefix[x + 1] = prefix[x] + row[x] as f64;
        }
        for (x, o) in out.iter_mut().enumerate() {
            *o = prefix[(x + r).min(w - 1) + 1] - prefix[x.saturating_sub(r)];
        }
    }
    let span = |i: usize, n: usize| ((i + r).min(n - 1) - i.saturating_sub(r) + 1) as f64;
    let widths: Vec<f64> = (0..w).map(|x| span(x, w)).collect();

    // vertical running sum over rows of `horiz`
    let mut acc = vec![0f64; w];
    for row in horiz.chunks_exact(w).take(r.min(h - 1) + 1) {
        for (a, &v) in acc.iter_mut().zip(row) {
            *a += v;
        }
    }
    let mut out = vec![0f32; w * h];
    for y in 0..h {
        if y > 0 {
            if y + r < h {
                for (a, &v) in acc.iter_mut().zip(&horiz[(y + r) * w..(y + r + 1) * w]) {
                    *a += v;
                }
            }
            if y > r {
                for (a, &v) in acc.iter_mut().zip(&horiz[(y - r - 1) * w..(y - r) * w]) {
                    *a -= v;
                }
            }
        }
        let height = span(y, h);
        for ((o, &a), &wd) in out[y * w..(y + 1) * w].iter_mut().zip(&acc).zip(&widths) {
            *o = (a / (wd * height)) as f32;
        }
    }
    out
}

fn radius_at(max_disp: usize, level: usize) -> usize {
    max_disp.div_ceil(1 << level)
}

/// Dense flow from `a` to `b`.
pub fn estimate_flow(a: &FrameBuffer, b: &FrameBuffer, o: &FlowOptions) -> Result<FlowField, FlowError> {
    o.validate()?;
    if a.dims() != b.dims() {
        return Err(FlowError::DimensionMismatch(a.dims(), b.dims()));
    }
    let (w, h) = a.dims();
    let min = o.min_frame_side();
    if w < min || h < min {
        return Err(FlowError::FrameTooSmall { actual: (w, h), min });
    }

    let mut pyr_a = vec![Plane::from_frame(a)];
    let mut pyr_b = vec![Plane::from_frame(b)];
    for level in 1..o.levels {
        let next = pyr_a[level - 1].half();
        let need = 2 * (o.window + radius_at(o.max_disp, level));
        if next.w < need || next.h < need {
            break;
        }
        pyr_a.push(next);
        let nb = pyr_b[level - 1].half();
        pyr_b.push(nb);
    }

    let est = if fits_u16(o.window) {
        match_pyramid::<u16>(&pyr_a, &pyr_b, o)
    } else {
        match_pyramid::<u32>(&pyr_a, &pyr_b, o)
    };

    let u: Vec<f32> = est.iter().map(|d| d.0 as f32).collect();
    let v: Vec<f32> = est.iter().map(|d| d.1 as f32).collect();
    let u = box_smooth(&u, w, h, o.smoothing);
    let v = box_smooth(&v, w, h, o.smoothing);
    Ok(FlowField::new(w, h, u, v).expect("finite by construction"))
}

fn match_pyramid<C: Cost>(pyr_a: &[Plane], pyr_b: &[Plane], o: &FlowOptions) -> Vec<(i16, i16)> {
    let top = pyr_a.len() - 1;
    let mut est = full_search::<C>(&pyr_a[top], &pyr_b[top], o.window, radius_at(o.max_disp, top) as i32);
    for level in (0..top).rev() {
        let coarse = &pyr_a[level + 1];
        est = refine::<C>(
            &pyr_a[level],
            &pyr_b[level],
            o.window,
            radius_at(o.max_disp, level) as i32,
            &est,
            coarse.w,
            coarse.h,
        );
    }
    est
}

/// `flows[i]` is the flow from frame `i` to frame `i + 1`.
pub fn flow_sequence(seq: &FrameSequence, o: &FlowOptions) -> Result<Vec<FlowField>, FlowError> {
    flow_pairs(seq.frames(), o)
}

pub fn flow_pairs(frames: &[FrameBuffer], o: &FlowOptions) -> Result<Vec<FlowField>, FlowError> {
    if frames.len() < 2 {
        return Err(FlowError::TooFewFrames(frames.len()));
    }
    frames
        .par_windows(2)
        .map(|pair| estimate_flow(&pair[0], &pair[1], o))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::generate_noise;

    fn noise_frame(w: usize, h: usize, b: usize, seed: u64) -> FrameBuffer {
        let p = generate_noise(w, h, b, 0.5, seed).unwrap();
        FrameBuffer::new(w, h, p.pixels().to_vec()).unwrap()
    }

    /// b(x, y) = a(x - sx, y - sy) with wrap.
    fn scrolled(a: &FrameBuffer, sx: i64, sy: i64) -> FrameBuffer {
        let (w, h) = a.dims();
        let mut px = Vec::with_capacity(w * h);
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                px.push(a.get((x - sx).rem_euclid(w as i64) as usize, (y - sy).rem_euclid(h as i64) as usize));
            }
        }
        FrameBuffer::new(w, h, px).unwrap()
    }

    fn median(mut v: Vec<f32>) -> f32 {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[v.len() / 2]
    }

    #[test]
    fn candidate_order() {
        let c = ordered_candidates(1);
        assert_eq!(c[0], (0, 0));
        assert_eq!(&c[1..5], &[(0, -1), (-1, 0), (1, 0), (0, 1)]);
        assert_eq!(c[5], (-1, -1));
    }

    #[test]
    fn identical_frames_zero_flow() {
        let a = noise_frame(48, 40, 2, 1);
        let f = estimate_flow(&a, &a, &FlowOptions::default()).unwrap();
        assert!(f.is_zero());
    }

    #[test]
    fn constant_frames_zero_flow() {
        let a = FrameBuffer::filled(40, 40, 255).unwrap();
        assert!(estimate_flow(&a, &a, &FlowOptions::default()).unwrap().is_zero());
    }

    #[test]
    fn recovers_scroll_down_two() {
        let a = noise_frame(64, 64, 2, 5);
        let b = scrolled(&a, 0, 2);
        let f = estimate_flow(&a, &b, &FlowOptions::default()).unwrap();
        let mv = median(f.v().to_vec());
        let mu = median(f.u().to_vec());
        assert!((1.5..=2.5).contains(&mv), "{mv}");
        assert!((-0.5..=0.5).contains(&mu), "{mu}");
    }

    #[test]
    fn interior_exact_without_smoothing() {
        let a = noise_frame(64, 64, 2, 8);
        let b = scrolled(&a, -3, 5);
        let o = FlowOptions {
            smoothing: 0,
            ..Default::default()
        };
        let f = estimate_flow(&a, &b, &o).unwrap();
        let band = o.border_band();
        for y in band..64 - band {
            for x in band..64 - band {
                assert_eq!(f.at(x, y), (-3.0, 5.0), "({x},{y})");
            }
        }
    }

    #[test]
    fn single_level_matches_pyramid_on_clean_shift() {
        let a = noise_frame(64, 64, 1, 21);
        let b = scrolled(&a, 4, -2);
        let one = FlowOptions {
            levels: 1,
            smoothing: 0,
            ..Default::default()
        };
        let two = FlowOptions { levels: 2, ..one };
        let f1 = estimate_flow(&a, &b, &one).unwrap();
        let f2 = estimate_flow(&a, &b, &two).unwrap();
        for y in 12..52 {
            for x in 12..52 {
                assert_eq!(f1.at(x, y), f2.at(x, y));
            }
        }
    }

    #[test]
    fn errors() {
        let a = noise_frame(64, 64, 1, 1);
        let b = noise_frame(64, 48, 1, 1);
        assert!(matches!(
            estimate_flow(&a, &b, &FlowOptions::default()),
            Err(FlowError::DimensionMismatch(..))
        ));
        let tiny = noise_frame(20, 20, 1, 1);
        assert!(matches!(
            estimate_flow(&tiny, &tiny, &FlowOptions::default()),
            Err(FlowError::FrameTooSmall { .. })
        ));
        assert_eq!(flow_pairs(&[a], &FlowOptions::default()), Err(FlowError::TooFewFrames(1)));
    }

    #[test]
    fn smoothing_preserves_constants() {
        let src = vec![2.5f32; 7 * 5];
        assert!(box_smooth(&src, 7, 5, 2).iter().all(|&x| (x - 2.5).abs() < 1e-6));
    }
}
