//! Hide a circle in opposing noise motion and show that no single frame
//! reveals it.

use temporal_noise::store::write_y4m_file;
use temporal_noise::{encode_mask_animation, render_shape_mask, validate_params, EncodingParams, Shape, ShapeSpec};

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = validate_params(&EncodingParams {
        width: 256,
        height: 256,
        duration_s: 1.0,
        seed: 11,
        ..Default::default()
    })?;
    let mask = render_shape_mask(&ShapeSpec::new(
        Shape::Circle {
            cx: 128.0,
            cy: 128.0,
            radius: 60.0,
        },
        (256, 256),
    ))?;
    let video = encode_mask_animation(&mask, &params)?;
    println!("{} frames of {:?} at {} fps", video.len(), video.dims(), video.fps());

    let bits: Vec<f64> = mask.bits().iter().map(|&b| b as u8 as f64).collect();
    for t in [0, video.len() / 2, video.len() - 1] {
        let px: Vec<f64> = video.frames()[t].pixels().iter().map(|&p| p as f64).collect();
        println!("frame {t}: correlation with the mask {:+.4}", correlation(&px, &bits));
    }

    let out = std::env::temp_dir().join("circle.y4m");
    let bytes = write_y4m_file(&video, &out)?;
    println!("wrote {} ({bytes} bytes)", out.display());
    Ok(())
}
