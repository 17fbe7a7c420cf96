//! Encode a depth sequence: pixels inside the depth band scroll, the rest
//! stays still.

use temporal_noise::fixtures::{walker_depth, walker_thresholds};
use temporal_noise::{encode_depth_animation, validate_params, EncodingParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = validate_params(&EncodingParams {
        width: 240,
        height: 135,
        duration_s: 1.0,
        ..Default::default()
    })?;
    let depth = walker_depth(5, params.dims(), 12)?;
    let th = walker_thresholds();
    let video = encode_depth_animation(&depth, th, &params)?;

    let first = &video.frames()[0];
    for t in [1, 10, 29] {
        let d = &depth.frames()[temporal_noise::encoder::depth_index(t, depth.len(), video.len())];
        let frame = &video.frames()[t];
        let (mut moved, mut band) = (0, 0);
        for (i, (&a, &b)) in first.pixels().iter().zip(frame.pixels()).enumerate() {
            if th.contains(d.pixels()[i]) {
                band += 1;
                moved += (a != b) as usize;
            } else {
                assert_eq!(a, b, "pixels outside the band keep the static pattern");
            }
        }
        println!("frame {t}: {band} pixels in depth band [{}, {}], {moved} differ from frame 0", th.lower(), th.upper());
    }
    Ok(())
}
