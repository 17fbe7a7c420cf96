//! Lossless 8-bit grayscale PNG frames named `frame_%06d.png`, with a
//! `sequence.json` sidecar holding the frame rate and encoding parameters.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::canonical::{document_text, read_document, SchemaTag};
use super::StoreError;
use crate::encoder::FrameSequence;
use crate::types::{EncodingParams, FrameBuffer};

pub const SIDECAR_FILE: &str = "sequence.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceSidecar {
    pub fps: u32,
    pub frame_count: usize,
    pub width: usize,
    pub height: usize,
    pub params: Option<EncodingParams>,
}

impl SchemaTag for SequenceSidecar {
    const SCHEMA: &'static str = "tnoise.sequence/1";
}

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:06}.png")
}

/// Lossless PNG bytes of one grayscale frame.
pub fn encode_png(frame: &FrameBuffer) -> Result<Vec<u8>, StoreError> {
    let (w, h) = frame.dims();
    let img = image::GrayImage::from_raw(w as u32, h as u32, frame.pixels().to_vec()).expect("sized frame");
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png).map_err(|e| StoreError::Image {
        path: PathBuf::from("<memory>"),
        message: e.to_string(),
    })?;
    Ok(out.into_inner())
}

/// PNG bytes of an RGB image such as a decoder overlay.
pub fn encode_rgb_png(frame: &crate::decoder::RgbFrame) -> Result<Vec<u8>, StoreError> {
    let img = image::RgbImage::from_raw(frame.width as u32, frame.height as u32, frame.data.clone()).expect("sized frame");
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png).map_err(|e| StoreError::Image {
        path: PathBuf::from("<memory>"),
        message: e.to_string(),
    })?;
    Ok(out.into_inner())
}

/// File names and contents of a PNG sequence: frames in order, then the
/// sidecar.
pub fn png_sequence_files(seq: &FrameSequence) -> Result<Vec<(String, Vec<u8>)>, StoreError> {
    let (w, h) = seq.dims();
    let mut files = Vec::with_capacity(seq.len() + 1);
    for (i, f) in seq.frames().iter().enumerate() {
        files.push((frame_file_name(i), encode_png(f)?));
    }
    let sidecar = SequenceSidecar {
        fps: seq.fps(),
        frame_count: seq.len(),
        width: w,
        height: h,
        params: seq.params().cloned(),
    };
    files.push((SIDECAR_FILE.to_string(), document_text(&sidecar).into_bytes()));
    Ok(files)
}

/// Write every frame plus the sidecar into `dir` (created if missing).
/// Returns the frame paths followed by the sidecar path.
pub fn write_png_sequence(seq: &FrameSequence, dir: &Path) -> Result<Vec<PathBuf>, StoreError> {
    std::fs::create_dir_all(dir).map_err(StoreError::io(dir))?;
    png_sequence_files(seq)?
        .into_iter()
        .map(|(name, bytes)| {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(StoreError::io(&path))?;
            Ok(path)
        })
        .collect()
}

/// Decode one frame file to 8-bit luma.
pub(crate) fn read_gray_png(path: &Path) -> Result<FrameBuffer, StoreError> {
    let img = image::open(path).map_err(|e| match e {
        image::ImageError::IoError(source) => StoreError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => StoreError::Image {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    })?;
    let gray = img.into_luma8();
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    Ok(FrameBuffer::new(w, h, gray.into_raw()).expect("decoded image is consistent"))
}

pub fn read_png_sequence(dir: &Path) -> Result<FrameSequence, StoreError> {
    let sidecar: SequenceSidecar = read_document(&dir.join(SIDECAR_FILE))?;
    let expected = (sidecar.width, sidecar.height);
    let mut frames = Vec::with_capacity(sidecar.frame_count);
    for i in 0..sidecar.frame_count {
        let path = dir.join(frame_file_name(i));
        let f = read_gray_png(&path)?;
        if f.dims() != expected {
            return Err(StoreError::MixedDimensions {
                path,
                expected,
                actual: f.dims(),
            });
        }
        frames.push(f);
    }
    Ok(FrameSequence::new(frames, sidecar.fps, sidecar.params)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let frames: Vec<FrameBuffer> = (0..3u8)
            .map(|i| FrameBuffer::new(3, 2, vec![i, 255, 0, 7, i, 128]).unwrap())
            .collect();
        let seq = FrameSequence::new(frames, 30, None).unwrap();
        let paths = write_png_sequence(&seq, dir.path()).unwrap();
        let names: Vec<String> = paths
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(
            names,
            ["frame_000000.png", "frame_000001.png", "frame_000002.png", SIDECAR_FILE]
        );
        let back = read_png_sequence(dir.path()).unwrap();
        assert_eq!(back, seq);
        assert_eq!(back.fps(), 30);
    }

    #[test]
    fn mixed_dimensions_detected() {
        let dir = tempfile::tempdir().unwrap();
        let frames = vec![FrameBuffer::filled(2, 2, 0).unwrap(); 2];
        write_png_sequence(&FrameSequence::new(frames, 5, None).unwrap(), dir.path()).unwrap();
        image::GrayImage::new(4, 2).save(dir.path().join(frame_file_name(1))).unwrap();
        assert!(matches!(
            read_png_sequence(dir.path()),
            Err(StoreError::MixedDimensions { .. })
        ));
    }

    #[test]
    fn missing_sidecar_is_io() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(read_png_sequence(dir.path()), Err(StoreError::Io { .. })));
    }
}
