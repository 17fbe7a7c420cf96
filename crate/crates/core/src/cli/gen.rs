use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand, ValueEnum};

use super::error::io_at;
use super::{create_dir, CliError};
use crate::dataset::{
    default_category, default_video_id, generate, make_entry, plan_batch, render_entry, write_container, BatchEntry,
    BatchSpec, ParamOverrides,
};
use crate::eval::Category;
use crate::fixtures::{random_shape, text_scale_for};
use crate::mask::Shape;
use crate::store::{read_document, ContainerFormat, ContentSource, Manifest, ManifestEntry, Prompts};
use crate::types::{EncodingParams, Velocity};

pub const MANIFEST_FILE: &str = "manifest.json";
const CONTENT_DIR: &str = "content";

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(subcommand)]
    what: GenCommand,
}

#[derive(Debug, Subcommand)]
enum GenCommand {
    /// A word or short phrase in the built-in 8×8 font.
    Text {
        /// Word or phrase to encode.
        text: String,
        /// Pixels per font pixel; defaults to filling 80% of the canvas.
        #[arg(long)]
        scale: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// A geometric shape centred on the canvas unless placed explicitly.
    Shape {
        /// Shape to draw.
        kind: ShapeKind,
        /// Circle or regular-polygon radius; defaults to 30% of the short side.
        #[arg(long, allow_negative_numbers = true)]
        radius: Option<f64>,
        /// Horizontal centre in pixels; defaults to the canvas centre.
        #[arg(long, allow_negative_numbers = true)]
        cx: Option<f64>,
        /// Vertical centre in pixels; defaults to the canvas centre.
        #[arg(long, allow_negative_numbers = true)]
        cy: Option<f64>,
        /// Square edge; defaults to 60% of the short side.
        #[arg(long)]
        side: Option<usize>,
        /// Rectangle extent as WxH.
        #[arg(long, value_parser = parse_size)]
        extent: Option<(usize, usize)>,
        /// Polygon vertices as `x,y x,y ...`.
        #[arg(long)]
        vertices: Option<String>,
        /// Seed of the `random` shape; defaults to the noise seed.
        #[arg(long)]
        shape_seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// A black-and-white mask image (PNG, foreground ≥ 128).
    Mask {
        /// Mask image to encode.
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// A directory of depth frames (PNG, sorted by name).
    Depth {
        /// Directory holding the depth frames.
        dir: PathBuf,
        /// Smallest depth value that belongs to the content.
        #[arg(long, default_value_t = 128)]
        lower: u8,
        /// Largest depth value that belongs to the content.
        #[arg(long, default_value_t = 255)]
        upper: u8,
        #[command(flatten)]
        common: Common,
    },
    /// Every entry of a batch document.
    Batch {
        /// Batch document (JSON).
        spec: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ShapeKind {
    Circle,
    Square,
    Rectangle,
    Triangle,
    Pentagon,
    Hexagon,
    Polygon,
    Random,
}

/// Encoding parameters; unset flags keep their defaults.
#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    /// Frame size as WxH [default: 960x540].
    #[arg(long, value_parser = parse_size)]
    size: Option<(usize, usize)>,
    /// Frames per second [default: 30].
    #[arg(long)]
    fps: Option<u32>,
    /// Duration in seconds [default: 4].
    #[arg(long)]
    duration: Option<f64>,
    /// Foreground velocity as VX,VY pixels per frame [default: 0,3].
    #[arg(long, value_parser = parse_velocity, allow_hyphen_values = true)]
    velocity: Option<Velocity>,
    /// Noise block edge in pixels [default: 2].
    #[arg(long)]
    block: Option<usize>,
    /// Probability that a block is white [default: 0.5].
    #[arg(long)]
    density: Option<f64>,
    /// Noise seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Container format.
    #[arg(long, value_enum, default_value = "y4m")]
    format: FormatArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Y4m,
    Png,
}

impl From<FormatArg> for ContainerFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Y4m => ContainerFormat::Y4m,
            FormatArg::Png => ContainerFormat::Png,
        }
    }
}

impl ParamArgs {
    fn overrides(&self) -> ParamOverrides {
        ParamOverrides {
            width: self.size.map(|s| s.0),
            height: self.size.map(|s| s.1),
            fps: self.fps,
            duration_s: self.duration,
            velocity: self.velocity,
            block_size: self.block,
            density: self.density,
            seed: self.seed,
        }
    }

    fn resolve(&self) -> EncodingParams {
        self.overrides().apply(&EncodingParams::default())
    }
}

#[derive(Debug, Clone, Args)]
struct Common {
    #[command(flatten)]
    params: ParamArgs,
    /// Video id; derived from category, content and seed when absent.
    #[arg(long)]
    id: Option<String>,
    /// Acceptable answers, comma separated; required for mask and depth.
    #[arg(long, value_delimiter = ',')]
    labels: Vec<String>,
    /// Category; derived from the content when absent.
    #[arg(long, value_parser = parse_category)]
    category: Option<Category>,
    /// Question text stored with the video (opaque).
    #[arg(long)]
    prompt: Option<String>,
    /// Chain-of-thought question text stored with the video (opaque).
    #[arg(long)]
    cot_prompt: Option<String>,
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WxH, e.g. 960x540")?;
    Ok((
        w.trim().parse().map_err(|e| format!("width: {e}"))?,
        h.trim().parse().map_err(|e| format!("height: {e}"))?,
    ))
}

fn parse_velocity(s: &str) -> Result<Velocity, String> {
    let (x, y) = s.split_once(',').ok_or("expected VX,VY, e.g. 0,3")?;
    Ok(Velocity::new(
        x.trim().parse().map_err(|e| format!("vx: {e}"))?,
        y.trim().parse().map_err(|e| format!("vy: {e}"))?,
    ))
}

fn parse_category(s: &str) -> Result<Category, String> {
    s.parse()
}

fn parse_vertices(s: &str) -> Result<Vec<(f64, f64)>, CliError> {
    s.split_whitespace()
        .enumerate()
        .map(|(i, pair)| {
            let bad = || CliError::invalid(format!("vertices[{i}]"), "InvalidVertex", format!("expected x,y, got `{pair}`"));
            let (x, y) = pair.split_once(',').ok_or_else(bad)?;
            Ok((x.parse().map_err(|_| bad())?, y.parse().map_err(|_| bad())?))
        })
        .collect()
}

pub fn run(out: &Path, jobs: usize, args: GenArgs) -> Result<(), CliError> {
    match args.what {
        GenCommand::Text { text, scale, common } => {
            let p = common.params.resolve();
            let scale = scale.unwrap_or_else(|| text_scale_for(text.chars().count(), (p.width, p.height), 0.8));
            single(out, ContentSource::Text { text, scale }, common)
        }
        GenCommand::Shape {
            kind,
            radius,
            cx,
            cy,
            side,
            extent,
            vertices,
            shape_seed,
            common,
        } => {
            let p = common.params.resolve();
            let (w, h) = (p.width as f64, p.height as f64);
            let short = w.min(h);
            let (cx, cy) = (cx.unwrap_or(w / 2.0), cy.unwrap_or(h / 2.0));
            let radius = radius.unwrap_or(0.3 * short);
            let rect = |rw: usize, rh: usize| Shape::Rectangle {
                x: (cx - rw as f64 / 2.0).round().max(0.0) as usize,
                y: (cy - rh as f64 / 2.0).round().max(0.0) as usize,
                width: rw,
                height: rh,
            };
            let shape = match kind {
                ShapeKind::Circle => Shape::Circle { cx, cy, radius },
                ShapeKind::Square => {
                    let s = side.unwrap_or((0.6 * short) as usize);
                    rect(s, s)
                }
                ShapeKind::Rectangle => {
                    let (rw, rh) = extent.unwrap_or(((0.8 * short) as usize, (0.5 * short) as usize));
                    rect(rw, rh)
                }
                ShapeKind::Triangle => Shape::regular(3, cx, cy, radius, -FRAC_PI_2),
                ShapeKind::Pentagon => Shape::regular(5, cx, cy, radius, -FRAC_PI_2),
                ShapeKind::Hexagon => Shape::regular(6, cx, cy, radius, -FRAC_PI_2),
                ShapeKind::Polygon => {
                    let v = vertices.ok_or_else(|| {
                        CliError::invalid("vertices", "MissingVertices", "`polygon` needs --vertices")
                    })?;
                    Shape::Polygon {
                        vertices: parse_vertices(&v)?,
                    }
                }
                ShapeKind::Random => random_shape(shape_seed.unwrap_or(p.seed), (p.width, p.height)).shape,
            };
            single(out, ContentSource::Shape { shape }, common)
        }
        GenCommand::Mask { file, common } => {
            let path = import(&file, out)?;
            single(out, ContentSource::MaskFile { path }, common)
        }
        GenCommand::Depth {
            dir,
            lower,
            upper,
            common,
        } => {
            let path = import(&dir, out)?;
            single(out, ContentSource::DepthDir { path, lower, upper }, common)
        }
        GenCommand::Batch { spec, params } => batch(out, jobs, &spec, &params),
    }
}

/// Copy a content file or directory (non-recursive) into the output tree
/// so the manifest stays self-contained; returns its relative path.
fn import(src: &Path, out: &Path) -> Result<String, CliError> {
    let name = src
        .file_name()
        .ok_or_else(|| CliError::Io(format!("{}: not a file or directory", src.display())))?
        .to_string_lossy()
        .into_owned();
    let dest = out.join(CONTENT_DIR).join(&name);
    if src.is_dir() {
        create_dir(&dest)?;
        for item in std::fs::read_dir(src).map_err(io_at(src))? {
            let item = item.map_err(io_at(src))?.path();
            if item.is_file() {
                let to = dest.join(item.file_name().expect("listed file"));
                std::fs::copy(&item, &to).map_err(io_at(&item))?;
            }
        }
    } else {
        create_dir(&out.join(CONTENT_DIR))?;
        std::fs::copy(src, &dest).map_err(io_at(src))?;
    }
    Ok(format!("{CONTENT_DIR}/{name}"))
}

fn prompts(common: &Common) -> Option<Prompts> {
    (common.prompt.is_some() || common.cot_prompt.is_some()).then(|| Prompts {
        direct: common.prompt.clone(),
        chain_of_thought: common.cot_prompt.clone(),
    })
}

fn single(out: &Path, source: ContentSource, common: Common) -> Result<(), CliError> {
    let params = common.params.resolve();
    let category = common.category.unwrap_or_else(|| default_category(&source));
    let video_id = common
        .id
        .clone()
        .unwrap_or_else(|| default_video_id(category, &source, params.seed, None));
    let labels: Option<BTreeSet<String>> = (!common.labels.is_empty()).then(|| common.labels.iter().cloned().collect());
    let req = BatchEntry {
        video_id: Some(video_id),
        category: Some(category),
        labels,
        source,
        params: common.params.overrides(),
        prompts: prompts(&common),
    };
    let entry = make_entry(0, &req, &EncodingParams::default(), common.params.format.into())?;
    let seq = render_entry(&entry, out)?;
    write_container(&seq, &entry, out)?;
    let manifest = upsert(out, vec![entry.clone()])?;
    println!(
        "{}: {} frames {}x{} -> {}",
        entry.video_id,
        seq.len(),
        entry.params.width,
        entry.params.height,
        out.join(&entry.container).display()
    );
    println!("labels: {}", entry.labels.iter().cloned().collect::<Vec<_>>().join(", "));
    println!("manifest: {} ({} entries)", out.join(MANIFEST_FILE).display(), manifest.entries.len());
    Ok(())
}

fn batch(out: &Path, jobs: usize, spec_path: &Path, params: &ParamArgs) -> Result<(), CliError> {
    let mut spec: BatchSpec = read_document(spec_path)?;
    let spec_dir = spec_path.parent().unwrap_or(Path::new("."));
    for e in &mut spec.entries {
        match &mut e.source {
            ContentSource::MaskFile { path } | ContentSource::DepthDir { path, .. } => {
                *path = import(&spec_dir.join(&*path), out)?;
            }
            _ => {}
        }
    }
    // the command-line format applies when the spec leaves it at the default
    if spec.format == ContainerFormat::default() {
        spec.format = params.format.into();
    }
    let planned = plan_batch(&spec, &params.resolve())?;
    generate(&planned, out, jobs)?;
    let manifest = upsert(out, planned.entries.clone())?;
    for e in &planned.entries {
        println!("{}: {}", e.video_id, out.join(&e.container).display());
    }
    println!(
        "generated {} videos; manifest: {} ({} entries)",
        planned.entries.len(),
        out.join(MANIFEST_FILE).display(),
        manifest.entries.len()
    );
    Ok(())
}

/// Add entries to the output manifest, replacing entries with the same id.
fn upsert(out: &Path, entries: Vec<ManifestEntry>) -> Result<Manifest, CliError> {
    let path = out.join(MANIFEST_FILE);
    let mut all = if path.exists() { Manifest::read(&path)?.entries } else { Vec::new() };
    for e in entries {
        match all.iter_mut().find(|x| x.video_id == e.video_id) {
            Some(slot) => *slot = e,
            None => all.push(e),
        }
    }
    let manifest = Manifest::new(all)?;
    create_dir(out)?;
    manifest.write(&path)?;
    Ok(manifest)
}
