//! Plan a batch of videos, render them to disk, and prove every video can
//! be regenerated byte for byte from its manifest entry.

use temporal_noise::dataset::{generate, plan_batch, read_container, verify_regeneration, BatchEntry, BatchSpec, ParamOverrides};
use temporal_noise::fixtures::Fixture;
use temporal_noise::store::{ContainerFormat, ContentSource, Manifest};
use temporal_noise::EncodingParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = BatchSpec {
        params: ParamOverrides {
            width: Some(160),
            height: Some(90),
            duration_s: Some(0.5),
            ..Default::default()
        },
        format: ContainerFormat::Y4m,
        entries: vec![
            BatchEntry::new(ContentSource::Text {
                text: "SHIP".into(),
                scale: 4,
            }),
            BatchEntry::new(ContentSource::Fixture {
                fixture: Fixture::RandomShape { seed: 9 },
            }),
            BatchEntry::new(ContentSource::Fixture { fixture: Fixture::Ant }),
            BatchEntry::new(ContentSource::Fixture {
                fixture: Fixture::Walker { seed: 1, frames: 8 },
            }),
        ],
    };
    let manifest = plan_batch(&spec, &EncodingParams::default())?;
    let dir = std::env::temp_dir().join("tnoise_dataset_example");
    std::fs::create_dir_all(&dir)?;
    generate(&manifest, &dir, 0)?;
    let path = dir.join("manifest.json");
    manifest.write(&path)?;

    let reread = Manifest::read(&path)?;
    for entry in &reread.entries {
        let video = read_container(entry, &dir)?;
        let differing = verify_regeneration(entry, &dir)?;
        println!(
            "{:<28} {:<15} labels {:?}: {} frames, regenerates exactly: {}",
            entry.video_id,
            entry.category.as_str(),
            entry.labels,
            video.len(),
            differing.is_empty()
        );
    }
    println!("manifest: {}", path.display());
    Ok(())
}
