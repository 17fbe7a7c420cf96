//! Rasterize text and geometric shapes into content masks.

use temporal_noise::fixtures::{random_shape, text_scale_for};
use temporal_noise::{render_shape_mask, render_text_mask, ContentMask, Shape, ShapeSpec, TextSpec};

fn preview(mask: &ContentMask, step: usize) {
    for y in (0..mask.height()).step_by(step) {
        let row: String = (0..mask.width())
            .step_by(step)
            .map(|x| if mask.get(x, y) { '#' } else { '.' })
            .collect();
        println!("{row}");
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let canvas = (96, 24);
    let text = render_text_mask(&TextSpec {
        text: "NOISE".into(),
        scale: text_scale_for(5, canvas, 0.9),
        canvas,
    })?;
    println!("text: {} foreground pixels", text.count_foreground());
    preview(&text, 2);

    let rect = render_shape_mask(&ShapeSpec::new(
        Shape::Rectangle {
            x: 10,
            y: 10,
            width: 10,
            height: 10,
        },
        (64, 64),
    ))?;
    println!("rectangle (10,10)-(20,20): {} pixels, boundary inclusive", rect.count_foreground());

    let hexagon = render_shape_mask(&ShapeSpec::new(Shape::regular(6, 32.0, 32.0, 24.0, 0.0), (64, 64)))?;
    println!("hexagon: {} pixels", hexagon.count_foreground());
    preview(&hexagon, 4);

    for seed in 0..4 {
        let spec = random_shape(seed, (256, 256));
        let m = render_shape_mask(&spec)?;
        println!("random shape {seed}: {} covering {:.1}%", spec.label(), 100.0 * m.count_foreground() as f64 / 65536.0);
    }
    Ok(())
}
