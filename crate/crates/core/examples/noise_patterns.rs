//! Generate seeded binary speckle noise and check its block statistics and
//! wrap-around seams.

use temporal_noise::generate_noise;
use temporal_noise::noise::{generate_noise_stream, STREAM_FOREGROUND};
use temporal_noise::store::encode_png;
use temporal_noise::FrameBuffer;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for density in [0.1, 0.5, 0.9] {
        for block in 1..=3 {
            let p = generate_noise(192, 192, block, density, 42)?;
            let white = p.blocks().iter().filter(|&&b| b).count();
            println!(
                "density {density:.1}, block {block}: {white}/{} blocks white ({:.3}), {:.3} of pixels",
                p.blocks().len(),
                white as f64 / p.blocks().len() as f64,
                p.white_fraction()
            );
        }
    }

    let p = generate_noise(64, 48, 2, 0.5, 7)?;
    let (w, h) = (p.width(), p.height());
    let seam_free = (0..w).all(|x| p.get(x, 0) == p.get(x, h - 1)) && (0..h).all(|y| p.get(0, y) == p.get(w - 1, y));
    println!("64x48 pattern tileable: {seam_free}");
    println!("sample_wrapped(3, -1) = {} = get(3, {})", p.sample_wrapped(3, -1), h - 1);

    // the foreground carrier is an independent draw from the same seed
    let fg = generate_noise_stream(64, 48, 2, 0.5, 7, STREAM_FOREGROUND)?;
    let same = p.pixels().iter().zip(fg.pixels()).filter(|(a, b)| a == b).count();
    println!("background vs foreground agreement: {:.3}", same as f64 / p.pixels().len() as f64);

    let out = std::env::temp_dir().join("noise_64x48.png");
    std::fs::write(&out, encode_png(&FrameBuffer::new(w, h, p.pixels().to_vec())?)?)?;
    println!("wrote {}", out.display());
    Ok(())
}
