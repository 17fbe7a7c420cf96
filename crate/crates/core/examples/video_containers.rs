//! Write a video as Y4M and as a PNG frame sequence and read both back.

use temporal_noise::store::{read_png_sequence, read_y4m, write_png_sequence, write_y4m};
use temporal_noise::{encode_mask_animation, validate_params, ContentMask, EncodingParams, FrameBuffer, FrameSequence};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = validate_params(&EncodingParams {
        width: 64,
        height: 48,
        duration_s: 0.3,
        ..Default::default()
    })?;
    let mask = ContentMask::from_fn(64, 48, |x, y| (x as i64 - 32).pow(2) + (y as i64 - 24).pow(2) < 200)?;
    let video = encode_mask_animation(&mask, &params)?;

    let mut y4m = Vec::new();
    write_y4m(&video, &mut y4m)?;
    let back = read_y4m(&y4m[..])?;
    println!("y4m: {} bytes, {} frames, identical: {}", y4m.len(), back.len(), back.frames() == video.frames());

    let dir = std::env::temp_dir().join("tnoise_png_example");
    let files = write_png_sequence(&video, &dir)?;
    let back = read_png_sequence(&dir)?;
    println!("png: {} files in {}, identical: {}", files.len(), dir.display(), back.frames() == video.frames());

    let tiny = FrameSequence::new(vec![FrameBuffer::new(2, 2, vec![0, 255, 255, 0])?], 30, None)?;
    let mut bytes = Vec::new();
    write_y4m(&tiny, &mut bytes)?;
    println!("2x2 frame as y4m: {}", bytes.escape_ascii());
    Ok(())
}
