//! Estimate dense flow between two frames of scrolled noise, then on an
//! encoded video where foreground and background move apart.

use temporal_noise::{
    encode_mask_animation, estimate_flow, flow_sequence, generate_noise, validate_params, ContentMask, EncodingParams,
    FlowOptions, FrameBuffer,
};

fn median(mut v: Vec<f32>) -> f32 {
    v.sort_by(|a, b| a.total_cmp(b));
    v[v.len() / 2]
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let noise = generate_noise(96, 96, 1, 0.5, 3)?;
    let a = FrameBuffer::new(96, 96, noise.pixels().to_vec())?;
    let (sx, sy) = (4i64, -3i64);
    let b = FrameBuffer::new(
        96,
        96,
        (0..96i64 * 96)
            .map(|i| noise.sample_wrapped((i % 96 - sx).rem_euclid(96), i / 96 - sy))
            .collect(),
    )?;
    let opts = FlowOptions::default();
    let f = estimate_flow(&a, &b, &opts)?;
    println!("shift ({sx}, {sy}) -> median flow ({:.2}, {:.2})", median(f.u().to_vec()), median(f.v().to_vec()));

    let params = validate_params(&EncodingParams {
        width: 128,
        height: 96,
        duration_s: 0.2,
        ..Default::default()
    })?;
    let mask = ContentMask::from_fn(128, 96, |x, y| (32..96).contains(&x) && (24..72).contains(&y))?;
    let video = encode_mask_animation(&mask, &params)?;
    let flows = flow_sequence(&video, &opts)?;
    let (fg, bg): (Vec<f32>, Vec<f32>) = {
        let f = &flows[0];
        let (mut fg, mut bg) = (Vec::new(), Vec::new());
        for y in 30..66 {
            for x in 38..90 {
                fg.push(f.at(x, y).1);
            }
            for x in 0..20 {
                bg.push(f.at(x + 14, y).1);
            }
        }
        (fg, bg)
    };
    println!(
        "{} flow fields; vertical flow inside the mask {:.2}, outside {:.2} px/frame",
        flows.len(),
        median(fg),
        median(bg)
    );
    Ok(())
}
