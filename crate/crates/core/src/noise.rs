//! Seeded, tileable binary speckle noise.
//!
//! # Random stream
//!
//! Block colours come from a counter-based SplitMix64 stream so that any
//! implementation can reproduce a pattern bit for bit:
//!
//! ```text
//! base     = seed XOR (stream_key * 0xD1B54A32D192ED03)      (wrapping)
//! word(i)  = mix(base + (i + 1) * 0x9E3779B97F4A7C15)         (wrapping)
//! mix(z)   : z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!            z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!            z ^ (z >> 31)
//! white(i) = (word(i) >> 11) * 2^-53 < density
//! ```
//!
//! `word(i)` is exactly the `i`-th output of a SplitMix64 generator seeded
//! with `base`. Block `i` is the `i`-th block in row-major block order; the
//! block grid is `ceil(width / b) x ceil(height / b)`.
//!
//! After the blocks are painted, the last row is overwritten with the first
//! row and then the last column with the first column, so modular sampling
//! has no seam at the wrap.

use thiserror::Error;

/// Stream key of the background pattern (and of the single depth pattern).
pub const STREAM_BACKGROUND: u64 = 0;
/// Stream key of the foreground pattern.
pub const STREAM_FOREGROUND: u64 = 1;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const STREAM_MULTIPLIER: u64 = 0xD1B5_4A32_D192_ED03;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("block size {block_size} outside 1..={max}")]
    InvalidBlockSize { block_size: usize, max: usize },
    #[error("density {0} outside [0, 1]")]
    InvalidDensity(f64),
    #[error("pattern must be at least 2x2, got {0}x{1}")]
    TooSmall(usize, usize),
}

#[inline]
pub(crate) fn splitmix_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random access into the block stream of one `(seed, stream_key)` pair.
#[derive(Clone, Copy, Debug)]
pub struct BlockStream {
    base: u64,
}

impl BlockStream {
    pub fn new(seed: u64, stream_key: u64) -> Self {
        Self {
            base: seed ^ stream_key.wrapping_mul(STREAM_MULTIPLIER),
        }
    }

    #[inline]
    pub fn word(&self, index: u64) -> u64 {
        splitmix_mix(
            self.base
                .wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)),
        )
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn unit(&self, index: u64) -> f64 {
        (self.word(index) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoisePattern {
    width: usize,
    height: usize,
    block_size: usize,
    density: f64,
    seed: u64,
    stream_key: u64,
    block_cols: usize,
    block_rows: usize,
    blocks: Vec<bool>,
    pixels: Vec<u8>,
}

/// Pattern on the background stream.
pub fn generate_noise(
    width: usize,
    height: usize,
    block_size: usize,
    density: f64,
    seed: u64,
) -> Result<NoisePattern, NoiseError> {
    generate_noise_stream(width, height, block_size, density, seed, STREAM_BACKGROUND)
}

pub fn generate_noise_stream(
    width: usize,
    height: usize,
    block_size: usize,
    density: f64,
    seed: u64,
    stream_key: u64,
) -> Result<NoisePattern, NoiseError> {
    if width < 2 || height < 2 {
        return Err(NoiseError::TooSmall(width, height));
    }
    let max = width.min(height);
    if block_size == 0 || block_size > max {
        return Err(NoiseError::InvalidBlockSize { block_size, max });
    }
    if !(0.0..=1.0).contains(&density) {
        return Err(NoiseError::InvalidDensity(density));
    }

    let stream = BlockStream::new(seed, stream_key);
    let block_cols = width.div_ceil(block_size);
    let block_rows = height.div_ceil(block_size);
    let blocks: Vec<bool> = (0..(block_cols * block_rows) as u64)
        .map(|i| stream.unit(i) < density)
        .collect();

    let mut pixels = vec![0u8; width * height];
    for y in 0..height {
        let brow = &blocks[(y / block_size) * block_cols..][..block_cols];
        let row = &mut pixels[y * width..(y + 1) * width];
        for (x, px) in row.iter_mut().enumerate() {
            if brow[x / block_size] {
                *px = 255;
            }
        }
    }
    // edge copy: last row <- first row, then last column <- first column
    let (first, rest) = pixels.split_at_mut(width);
    rest[(height - 2) * width..].copy_from_slice(first);
    for y in 0..height {
        pixels[y * width + width - 1] = pixels[y * width];
    }

    Ok(NoisePattern {
        width,
        height,
        block_size,
        density,
        seed,
        stream_key,
        block_cols,
        block_rows,
        blocks,
        pixels,
    })
}

impl NoisePattern {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_key(&self) -> u64 {
        self.stream_key
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// Block colours before the edge copy, row-major over the block grid.
    pub fn blocks(&self) -> &[bool] {
        &self.blocks
    }

    pub fn block_grid(&self) -> (usize, usize) {
        (self.block_cols, self.block_rows)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Sample with modular wrap on both axes; negative offsets wrap from the
    /// far edge.
    #[inline]
    pub fn sample_wrapped(&self, x: i64, y: i64) -> u8 {
        let xi = x.rem_euclid(self.width as i64) as usize;
        let yi = y.rem_euclid(self.height as i64) as usize;
        self.pixels[yi * self.width + xi]
    }

    /// One row of the pattern, starting at wrapped column `x0` and wrapped row
    /// `y`, written into `out` (length = width).
    pub(crate) fn wrapped_row_into(&self, x0: i64, y: i64, out: &mut [u8]) {
        let w = self.width;
        let yi = y.rem_euclid(self.height as i64) as usize;
        let row = &self.pixels[yi * w..(yi + 1) * w];
        let start = x0.rem_euclid(w as i64) as usize;
        let (head, tail) = row.split_at(start);
        out[..tail.len()].copy_from_slice(tail);
        out[tail.len()..].copy_from_slice(head);
    }

    pub fn white_fraction(&self) -> f64 {
        self.pixels.iter().filter(|&&p| p == 255).count() as f64 / self.pixels.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Stateful SplitMix64, stepped sequentially. Serves as the reference for
    /// the counter-based stream.
    struct SplitMix64 {
        state: u64,
    }

    impl SplitMix64 {
        fn next(&mut self) -> u64 {
            self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = self.state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^ (z >> 31)
        }
    }

    /// Straight-line reference pattern built from the sequential generator.
    fn reference_pattern(w: usize, h: usize, b: usize, density: f64, seed: u64, key: u64) -> Vec<u8> {
        let mut rng = SplitMix64 {
            state: seed ^ key.wrapping_mul(0xD1B5_4A32_D192_ED03),
        };
        let bc = w.div_ceil(b);
        let br = h.div_ceil(b);
        let mut white = vec![false; bc * br];
        for cell in white.iter_mut() {
            let u = (rng.next() >> 11) as f64 / 9007199254740992.0;
            *cell = u < density;
        }
        let mut img = vec![0u8; w * h];
        for y in 0..h {
            for x in 0..w {
                if white[(y / b) * bc + x / b] {
                    img[y * w + x] = 255;
                }
            }
        }
        for x in 0..w {
            img[(h - 1) * w + x] = img[x];
        }
        for y in 0..h {
            img[y * w + w - 1] = img[y * w];
        }
        img
    }

    #[test]
    fn splitmix_known_vector() {
        // first outputs of SplitMix64 seeded with 0
        let mut g = SplitMix64 { state: 0 };
        assert_eq!(g.next(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(g.next(), 0x6E78_9E6A_A1B9_65F4);
        let s = BlockStream::new(0, 0);
        assert_eq!(s.word(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(s.word(1), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn matches_sequential_reference() {
        for &(w, h, b, d, seed, key) in &[
            (64, 64, 2, 0.5, 42, 0),
            (17, 13, 3, 0.3, 7, 1),
            (10, 31, 1, 0.9, u64::MAX, 0),
        ] {
            let p = generate_noise_stream(w, h, b, d, seed, key).unwrap();
            assert_eq!(p.pixels(), &reference_pattern(w, h, b, d, seed, key)[..]);
        }
    }

    #[test]
    fn fixed_64x64_fixture() {
        let p = generate_noise(64, 64, 2, 0.5, 42).unwrap();
        let f = p.white_fraction();
        assert!((0.38..=0.62).contains(&f), "{f}");
        assert_eq!(p.pixels(), &reference_pattern(64, 64, 2, 0.5, 42, 0)[..]);
    }

    #[test]
    fn density_extremes() {
        let zero = generate_noise(20, 10, 2, 0.0, 1).unwrap();
        assert!(zero.pixels().iter().all(|&p| p == 0));
        let one = generate_noise(20, 10, 2, 1.0, 1).unwrap();
        assert!(one.pixels().iter().all(|&p| p == 255));
    }

    #[test]
    fn tileable_edges() {
        let p = generate_noise(23, 19, 3, 0.5, 5).unwrap();
        let (w, h) = (23, 19);
        for x in 0..w {
            assert_eq!(p.get(x, h - 1), p.get(x, 0));
        }
        for y in 0..h {
            assert_eq!(p.get(w - 1, y), p.get(0, y));
        }
    }

    #[test]
    fn block_structure_inside_edges() {
        let b = 3;
        let p = generate_noise(30, 30, b, 0.5, 9).unwrap();
        for y in 0..29 {
            for x in 0..29 {
                assert_eq!(p.get(x, y), p.get(b * (x / b), b * (y / b)));
            }
        }
    }

    #[test]
    fn wrapped_sampling() {
        let p = generate_noise(5, 4, 1, 0.5, 3).unwrap();
        for x in 0..5 {
            assert_eq!(p.sample_wrapped(x, 0), p.get(x as usize, 0));
            assert_eq!(p.sample_wrapped(x, 4), p.get(x as usize, 0));
            assert_eq!(p.sample_wrapped(x, -1), p.get(x as usize, 3));
        }
        let mut row = vec![0; 5];
        p.wrapped_row_into(-2, 7, &mut row);
        for (x, &v) in row.iter().enumerate() {
            assert_eq!(v, p.sample_wrapped(x as i64 - 2, 7));
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            generate_noise(8, 8, 0, 0.5, 0),
            Err(NoiseError::InvalidBlockSize { .. })
        ));
        assert!(matches!(
            generate_noise(8, 8, 9, 0.5, 0),
            Err(NoiseError::InvalidBlockSize { .. })
        ));
        assert_eq!(
            generate_noise(8, 8, 1, -0.1, 0),
            Err(NoiseError::InvalidDensity(-0.1))
        );
    }

    #[test]
    fn streams_differ() {
        let bg = generate_noise_stream(32, 32, 1, 0.5, 11, STREAM_BACKGROUND).unwrap();
        let fg = generate_noise_stream(32, 32, 1, 0.5, 11, STREAM_FOREGROUND).unwrap();
        assert_ne!(bg.pixels(), fg.pixels());
    }
}
