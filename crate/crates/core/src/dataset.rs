//! Turning manifest entries into videos and back.
//!
//! An entry is first put in canonical form (exactly what its manifest text
//! reads back as), then rendered, so the stored parameters are the ones the
//! video was made from and every entry regenerates byte for byte.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::{encode_depth_animation, encode_mask_animation, DepthThresholds, EncodeError, FrameSequence};
use crate::eval::{normalize_response, Category, EvalError, MeanStd};
use crate::flow::FlowOptions;
use crate::metrics::{analyze_video, Db, MetricConfig, MetricError, SnrReport};
use crate::fixtures::{Fixture, FixtureContent};
use crate::mask::{
    load_depth_sequence, load_mask_file, render_shape_mask, render_text_mask, resize_nearest, MaskError, ShapeSpec,
    TextSpec,
};
use crate::store::{
    canonicalize, png_sequence_files, write_png_sequence, write_y4m, ContainerFormat, ContentSource, Manifest, ManifestEntry, Prompts,
    SchemaTag, StoreError,
};
use crate::types::{validate_params, ContentMask, DepthSequence, EncodingParams, ParamErrors, Velocity};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Params(#[from] ParamErrors),
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Labels(#[from] EvalError),
    #[error("entries[{0}]: labels are required for file-based content")]
    MissingLabels(usize),
    #[error("{video_id}: {source}")]
    Metric {
        video_id: String,
        #[source]
        source: MetricError,
    },
}

/// Content ready for one of the two encoders.
pub enum Content {
    Mask(ContentMask),
    Depth(DepthSequence, DepthThresholds),
}

/// Load or render the content of `source` at the canvas size.
pub fn resolve_content(source: &ContentSource, canvas: (usize, usize), base: &Path) -> Result<Content, DatasetError> {
    Ok(match source {
        ContentSource::Text { text, scale } => Content::Mask(render_text_mask(&TextSpec {
            text: text.clone(),
            scale: *scale,
            canvas,
        })?),
        ContentSource::Shape { shape } => Content::Mask(render_shape_mask(&ShapeSpec::new(shape.clone(), canvas))?),
        ContentSource::MaskFile { path } => Content::Mask(load_mask_file(&base.join(path), Some(canvas))?),
        ContentSource::DepthDir { path, lower, upper } => {
            let seq = load_depth_sequence(&base.join(path))?;
            let frames = seq
                .frames()
                .iter()
                .map(|f| resize_nearest(f, canvas.0, canvas.1))
                .collect();
            Content::Depth(
                DepthSequence::new(frames).map_err(MaskError::from)?,
                DepthThresholds::new(*lower, *upper)?,
            )
        }
        ContentSource::Fixture { fixture } => match fixture.render(canvas)? {
            FixtureContent::Mask(m) => Content::Mask(m),
            FixtureContent::Depth(d, th) => Content::Depth(d, th),
        },
    })
}

/// Encode the video of an entry. `base` resolves relative content paths.
pub fn render_entry(entry: &ManifestEntry, base: &Path) -> Result<FrameSequence, DatasetError> {
    let params = validate_params(&entry.params)?;
    Ok(match resolve_content(&entry.source, params.dims(), base)? {
        Content::Mask(m) => encode_mask_animation(&m, &params)?,
        Content::Depth(d, th) => encode_depth_animation(&d, th, &params)?,
    })
}

/// The exact bytes of an entry's container as `(relative path, bytes)`
/// pairs: one `.y4m` file, or PNG frames plus their sidecar.
pub fn container_bytes(seq: &FrameSequence, entry: &ManifestEntry) -> Result<Vec<(PathBuf, Vec<u8>)>, DatasetError> {
    match entry.format {
        ContainerFormat::Y4m => {
            let mut bytes = Vec::new();
            write_y4m(seq, &mut bytes)?;
            Ok(vec![(PathBuf::from(&entry.container), bytes)])
        }
        ContainerFormat::Png => Ok(png_sequence_files(seq)?
            .into_iter()
            .map(|(name, bytes)| (Path::new(&entry.container).join(name), bytes))
            .collect()),
    }
}

/// Write an already rendered video to its container under `base`.
pub fn write_container(seq: &FrameSequence, entry: &ManifestEntry, base: &Path) -> Result<(), DatasetError> {
    match entry.format {
        ContainerFormat::Y4m => {
            let path = base.join(&entry.container);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(StoreError::io(parent))?;
            }
            crate::store::write_y4m_file(seq, &path)?;
        }
        ContainerFormat::Png => {
            write_png_sequence(seq, &base.join(&entry.container))?;
        }
    }
    Ok(())
}

/// Read an entry's container back.
pub fn read_container(entry: &ManifestEntry, base: &Path) -> Result<FrameSequence, StoreError> {
    let path = base.join(&entry.container);
    match entry.format {
        ContainerFormat::Y4m => crate::store::read_y4m_file(&path),
        ContainerFormat::Png => crate::store::read_png_sequence(&path),
    }
}

/// Re-render an entry from its fields and compare with the stored
/// container byte for byte. Returns the relative paths that differ.
pub fn verify_regeneration(entry: &ManifestEntry, base: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    let seq = render_entry(entry, base)?;
    let mut differing = Vec::new();
    for (rel, bytes) in container_bytes(&seq, entry)? {
        let path = base.join(&rel);
        let stored = std::fs::read(&path).map_err(StoreError::io(&path))?;
        if stored != bytes {
            differing.push(rel);
        }
    }
    Ok(differing)
}

/// Category implied by a content source.
pub fn default_category(source: &ContentSource) -> Category {
    match source {
        ContentSource::Text { .. } => Category::Text,
        ContentSource::Shape { .. } | ContentSource::Fixture {
            fixture: Fixture::RandomShape { .. },
        } => Category::Shapes,
        ContentSource::MaskFile { .. } | ContentSource::Fixture { fixture: Fixture::Ant } => Category::ObjectImages,
        ContentSource::DepthDir { .. } | ContentSource::Fixture {
            fixture: Fixture::Walker { .. },
        } => Category::DynamicScenes,
    }
}

/// Labels implied by a content source, if it implies any.
pub fn default_labels(source: &ContentSource, canvas: (usize, usize)) -> Option<BTreeSet<String>> {
    match source {
        ContentSource::Text { text, .. } => Some([normalize_response(text)].into()),
        ContentSource::Shape { shape } => Some([ShapeSpec::new(shape.clone(), canvas).label().to_string()].into()),
        ContentSource::Fixture { fixture } => Some(fixture.labels(canvas)),
        ContentSource::MaskFile { .. } | ContentSource::DepthDir { .. } => None,
    }
}

/// Encoding parameters with every field optional, layered over defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub fps: Option<u32>,
    pub duration_s: Option<f64>,
    pub velocity: Option<Velocity>,
    pub block_size: Option<usize>,
    pub density: Option<f64>,
    pub seed: Option<u64>,
}

impl ParamOverrides {
    pub fn apply(&self, base: &EncodingParams) -> EncodingParams {
        EncodingParams {
            width: self.width.unwrap_or(base.width),
            height: self.height.unwrap_or(base.height),
            fps: self.fps.unwrap_or(base.fps),
            duration_s: self.duration_s.unwrap_or(base.duration_s),
            velocity: self.velocity.unwrap_or(base.velocity),
            block_size: self.block_size.unwrap_or(base.block_size),
            density: self.density.unwrap_or(base.density),
            seed: self.seed.unwrap_or(base.seed),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchEntry {
    #[serde(default)]
    pub video_id: Option<String>,
    #[serde(default)]
    pub category: Option<Category>,
    #[serde(default)]
    pub labels: Option<BTreeSet<String>>,
    pub source: ContentSource,
    #[serde(default)]
    pub params: ParamOverrides,
    #[serde(default)]
    pub prompts: Option<Prompts>,
}

/// A list of videos to generate; `params` applies to every entry before the
/// entry's own overrides.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchSpec {
    #[serde(default)]
    pub params: ParamOverrides,
    #[serde(default)]
    pub format: ContainerFormat,
    pub entries: Vec<BatchEntry>,
}

impl crate::store::SchemaTag for BatchSpec {
    const SCHEMA: &'static str = "tnoise.batch/1";
}

fn slug(s: &str) -> String {
    let mut out: String = s
        .to_lowercase()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    out.truncate(24);
    out
}

fn source_slug(source: &ContentSource) -> String {
    match source {
        ContentSource::Text { text, .. } => slug(text),
        // the label does not depend on the canvas
        ContentSource::Shape { shape } => ShapeSpec::new(shape.clone(), (0, 0)).label().to_string(),
        ContentSource::MaskFile { path } | ContentSource::DepthDir { path, .. } => slug(
            Path::new(path)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .as_deref()
                .unwrap_or("file"),
        ),
        ContentSource::Fixture { fixture } => match fixture {
            Fixture::Ant => "ant".into(),
            Fixture::RandomShape { seed } => format!("shape{seed}"),
            Fixture::Walker { seed, .. } => format!("walker{seed}"),
        },
    }
}

/// `{category}_{index:03}_{content}_s{seed}`, without the index part when
/// `index` is `None`.
pub fn default_video_id(category: Category, source: &ContentSource, seed: u64, index: Option<usize>) -> String {
    match index {
        Some(i) => format!("{category}_{i:03}_{}_s{seed}", source_slug(source)),
        None => format!("{category}_{}_s{seed}", source_slug(source)),
    }
}

impl BatchEntry {
    pub fn new(source: ContentSource) -> Self {
        BatchEntry {
            video_id: None,
            category: None,
            labels: None,
            source,
            params: ParamOverrides::default(),
            prompts: None,
        }
    }
}

/// Build the canonical manifest entry for request `index` of a batch,
/// filling in category, labels and id from the source when absent.
pub fn make_entry(
    index: usize,
    req: &BatchEntry,
    shared: &EncodingParams,
    format: ContainerFormat,
) -> Result<ManifestEntry, DatasetError> {
    let params = req.params.apply(shared);
    let canvas = (params.width, params.height);
    let source = req.source.clone();
    let category = req.category.unwrap_or_else(|| default_category(&source));
    let labels = match &req.labels {
        Some(l) => l.iter().map(|s| normalize_response(s)).collect(),
        None => default_labels(&source, canvas).ok_or(DatasetError::MissingLabels(index))?,
    };
    let video_id = req
        .video_id
        .clone()
        .unwrap_or_else(|| default_video_id(category, &source, params.seed, Some(index)));
    let container = match format {
        ContainerFormat::Y4m => format!("videos/{video_id}.y4m"),
        ContainerFormat::Png => format!("videos/{video_id}"),
    };
    let entry = canonicalize(&ManifestEntry {
        video_id,
        category,
        labels,
        params,
        source,
        container,
        format,
        prompts: req.prompts.clone(),
    });
    entry.label_set().validate()?;
    validate_params(&entry.params)?;
    Ok(entry)
}

/// Manifest entries for every video of a batch, in order.
pub fn plan_batch(spec: &BatchSpec, base_params: &EncodingParams) -> Result<Manifest, DatasetError> {
    let shared = spec.params.apply(base_params);
    let entries = spec
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| make_entry(i, e, &shared, spec.format))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Manifest::new(entries)?)
}

/// Render and write every entry; `jobs` bounds parallelism (0 = all cores).
pub fn generate(manifest: &Manifest, base: &Path, jobs: usize) -> Result<(), DatasetError> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool");
    pool.install(|| {
        manifest.entries.par_iter().try_for_each(|e| {
            let seq = render_entry(e, base)?;
            write_container(&seq, e, base)
        })
    })
}

/// The mask a mask-encoded entry was made from; `None` for depth content,
/// whose foreground changes over time.
pub fn ground_truth_mask(entry: &ManifestEntry, base: &Path) -> Result<Option<ContentMask>, DatasetError> {
    Ok(match resolve_content(&entry.source, (entry.params.width, entry.params.height), base)? {
        Content::Mask(m) => Some(m),
        Content::Depth(..) => None,
    })
}

/// The SNR report of one video.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryAnalysis {
    pub video_id: String,
    pub category: Category,
    pub report: SnrReport,
}

/// Analyze an already decoded video of `entry`, using the entry's content
/// as ground truth where the configuration asks for it.
pub fn analyze_sequence(
    entry: &ManifestEntry,
    seq: &FrameSequence,
    base: &Path,
    cfg: &MetricConfig,
    flow: &FlowOptions,
) -> Result<EntryAnalysis, DatasetError> {
    let truth = match cfg.mask_source {
        crate::metrics::MaskSource::GroundTruth => ground_truth_mask(entry, base)?,
        crate::metrics::MaskSource::Estimated => None,
    };
    let report = analyze_video(seq, truth.as_ref(), cfg, flow).map_err(|source| DatasetError::Metric {
        video_id: entry.video_id.clone(),
        source,
    })?;
    Ok(EntryAnalysis {
        video_id: entry.video_id.clone(),
        category: entry.category,
        report,
    })
}

/// Analyze every stored video of a manifest, in manifest order; `jobs`
/// bounds parallelism (0 = all cores).
pub fn analyze_manifest(
    manifest: &Manifest,
    base: &Path,
    cfg: &MetricConfig,
    flow: &FlowOptions,
    jobs: usize,
) -> Result<Vec<EntryAnalysis>, DatasetError> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .expect("thread pool");
    pool.install(|| {
        manifest
            .entries
            .par_iter()
            .map(|e| analyze_sequence(e, &read_container(e, base)?, base, cfg, flow))
            .collect()
    })
}

/// Mean ± population standard deviation of each metric over the videos of
/// one category; only finite values enter a cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub category: Category,
    pub videos: usize,
    pub basic_db: Option<MeanStd>,
    pub perceptual_db: Option<MeanStd>,
    pub temporal_coherence_db: Option<MeanStd>,
    pub motion_contrast_db: Option<MeanStd>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrSummary {
    pub rows: Vec<CategoryRow>,
}

impl SchemaTag for SnrSummary {
    const SCHEMA: &'static str = "tnoise.snr_summary/1";
}

/// One row per category present, in the fixed category order.
pub fn summarize_by_category(results: &[EntryAnalysis]) -> SnrSummary {
    let cell = |c: Category, get: fn(&SnrReport) -> Db| {
        let values: Vec<f64> = results
            .iter()
            .filter(|r| r.category == c)
            .filter_map(|r| get(&r.report).finite())
            .collect();
        MeanStd::of(&values)
    };
    let rows = Category::ALL
        .into_iter()
        .filter_map(|c| {
            let videos = results.iter().filter(|r| r.category == c).count();
            (videos > 0).then(|| CategoryRow {
                category: c,
                videos,
                basic_db: cell(c, |r| r.basic_db),
                perceptual_db: cell(c, |r| r.perceptual_db),
                temporal_coherence_db: cell(c, |r| r.temporal_coherence_db),
                motion_contrast_db: cell(c, |r| r.motion_contrast_db),
            })
        })
        .collect();
    SnrSummary { rows }
}

/// Categories as rows, the four metrics as `mean ± std` columns.
pub fn render_snr_table(summary: &SnrSummary) -> String {
    let cols = ["Basic SNR (dB)", "Perceptual SNR (dB)", "Temporal Coherence SNR (dB)", "Motion Contrast SNR (dB)"];
    let mut out = format!("{:<16}{:>4}", "Category", "n");
    for c in cols {
        out += &format!("{c:>30}");
    }
    out.push('\n');
    let fmt = |m: &Option<MeanStd>| m.as_ref().map_or_else(|| "-".to_string(), |m| format!("{m:.2}"));
    for r in &summary.rows {
        out += &format!("{:<16}{:>4}", r.category.title(), r.videos);
        for m in [&r.basic_db, &r.perceptual_db, &r.temporal_coherence_db, &r.motion_contrast_db] {
            out += &format!("{:>30}", fmt(m));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::Shape;

    fn small() -> EncodingParams {
        EncodingParams {
            width: 32,
            height: 24,
            fps: 10,
            duration_s: 0.3,
            ..Default::default()
        }
    }

    #[test]
    fn params_are_quantized_before_rendering() {
        let p = EncodingParams {
            density: 1.0 / 3.0,
            ..small()
        };
        let req = BatchEntry::new(ContentSource::Shape {
            shape: Shape::Circle {
                cx: 16.0,
                cy: 12.0,
                radius: 7.123456789,
            },
        });
        let e = make_entry(0, &req, &p, ContainerFormat::Y4m).unwrap();
        assert_eq!(e.params.density, 0.333333);
        assert_eq!(e.category, Category::Shapes);
        assert_eq!(e.labels, ["circle".to_string()].into());
        assert_eq!(e.video_id, "shapes_000_circle_s0");
    }

    #[test]
    fn file_sources_need_labels() {
        let req = BatchEntry::new(ContentSource::MaskFile { path: "m.png".into() });
        let r = make_entry(3, &req, &small(), ContainerFormat::Y4m);
        assert!(matches!(r, Err(DatasetError::MissingLabels(3))));
    }

    #[test]
    fn regenerates_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        for format in [ContainerFormat::Y4m, ContainerFormat::Png] {
            let req = BatchEntry {
                video_id: Some(format!("t_{format:?}")),
                ..BatchEntry::new(ContentSource::Text {
                    text: "Hi".into(),
                    scale: 1,
                })
            };
            let e = make_entry(0, &req, &small(), format).unwrap();
            let seq = render_entry(&e, dir.path()).unwrap();
            write_container(&seq, &e, dir.path()).unwrap();
            assert!(verify_regeneration(&e, dir.path()).unwrap().is_empty());
            assert_eq!(read_container(&e, dir.path()).unwrap().frames(), seq.frames());
        }
    }
}
