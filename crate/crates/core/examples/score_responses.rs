//! Score free-text identification responses against label sets and look
//! for a sharp accuracy step along the SNR axis.

use temporal_noise::eval::{
    render_accuracy_table, render_fps_table, render_threshold_table, score, snr_threshold_analysis, Category, LabelSet,
    ResponseRecord, ScoredVideo,
};

fn record(video: &str, who: &str, text: &str, fps: f64) -> ResponseRecord {
    ResponseRecord {
        video_id: video.into(),
        responder_id: who.into(),
        response_text: text.into(),
        perceptibility: Some(4),
        fps_shown: Some(fps),
        prompt_id: None,
        timestamp: 1_700_000_000.0,
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let labels = vec![
        LabelSet::new("w1", Category::Text, ["moon"])?,
        LabelSet::new("w2", Category::Text, ["frog"])?,
        LabelSet::new("s1", Category::Shapes, ["triangle"])?,
        LabelSet::new("o1", Category::ObjectImages, ["ant", "insect"])?,
        LabelSet::new("d1", Category::DynamicScenes, ["person walking", "walking", "person"])?,
    ];
    let responses = vec![
        record("w1", "p1", "Moon", 30.0),
        record("w2", "p1", "frog!", 30.0),
        record("s1", "p1", "a triangle", 10.0),
        record("o1", "p1", "beetle", 10.0),
        record("d1", "p1", "The person", 30.0),
        record("w1", "p2", "noon", 30.0),
        record("o1", "p2", "insect", 30.0),
    ];
    let report = score(&responses, &labels)?;
    print!("{}", render_accuracy_table(&report));
    println!();
    print!("{}", render_fps_table(&report));

    // accuracy that jumps from none to most once the SNR passes 2.5 dB
    let scored: Vec<ScoredVideo> = (0..60)
        .map(|i| {
            let snr_db = i as f64 / 12.0;
            ScoredVideo {
                video_id: format!("v{i}"),
                snr_db,
                correct: snr_db >= 2.5 && i % 7 != 0,
            }
        })
        .collect();
    println!();
    print!("{}", render_threshold_table(&snr_threshold_analysis(&scored, 0.5)?));
    Ok(())
}
