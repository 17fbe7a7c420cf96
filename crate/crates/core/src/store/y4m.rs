//! YUV4MPEG2 with luma carrying the frames and both 4:2:0 chroma planes
//! held at neutral 0x80.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::StoreError;
use crate::encoder::FrameSequence;
use crate::types::FrameBuffer;

const MAGIC: &str = "YUV4MPEG2";
const NEUTRAL_CHROMA: u8 = 0x80;
const MAX_HEADER: usize = 4096;

fn chroma_len(w: usize, h: usize) -> usize {
    w.div_ceil(2) * h.div_ceil(2)
}

/// Stream `seq` to `sink`; returns the number of bytes written.
pub fn write_y4m<W: Write>(seq: &FrameSequence, sink: &mut W) -> Result<u64, StoreError> {
    let (w, h) = seq.dims();
    if w % 2 != 0 || h % 2 != 0 {
        return Err(StoreError::OddDimensions(w, h));
    }
    let io = |e| StoreError::Io {
        path: "<y4m sink>".into(),
        source: e,
    };
    let header = format!("{MAGIC} W{w} H{h} F{}:1 Ip A1:1 C420jpeg\n", seq.fps());
    let chroma = vec![NEUTRAL_CHROMA; 2 * chroma_len(w, h)];
    sink.write_all(header.as_bytes()).map_err(io)?;
    let mut total = header.len() as u64;
    for f in seq.frames() {
        sink.write_all(b"FRAME\n").map_err(io)?;
        sink.write_all(f.pixels()).map_err(io)?;
        sink.write_all(&chroma).map_err(io)?;
        total += (6 + f.pixels().len() + chroma.len()) as u64;
    }
    sink.flush().map_err(io)?;
    Ok(total)
}

pub fn write_y4m_file(seq: &FrameSequence, path: &Path) -> Result<u64, StoreError> {
    let file = std::fs::File::create(path).map_err(StoreError::io(path))?;
    let mut sink = std::io::BufWriter::new(file);
    write_y4m(seq, &mut sink).map_err(|e| match e {
        StoreError::Io { source, .. } => StoreError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

fn read_line<R: BufRead>(src: &mut R, what: &str) -> Result<Option<Vec<u8>>, StoreError> {
    let mut line = Vec::new();
    let n = src
        .take(MAX_HEADER as u64)
        .read_until(b'\n', &mut line)
        .map_err(StoreError::io("<y4m source>"))?;
    if n == 0 {
        return Ok(None);
    }
    if line.last() != Some(&b'\n') {
        return Err(StoreError::BadHeader(format!("{what} line is not newline-terminated")));
    }
    line.pop();
    Ok(Some(line))
}

struct Header {
    width: usize,
    height: usize,
    fps: u32,
}

fn parse_header(line: &[u8]) -> Result<Header, StoreError> {
    let text = std::str::from_utf8(line).map_err(|_| StoreError::BadHeader("header is not ASCII".into()))?;
    let mut tokens = text.split(' ');
    if tokens.next() != Some(MAGIC) {
        return Err(StoreError::BadHeader(format!("missing {MAGIC} magic")));
    }
    let (mut width, mut height, mut fps) = (None, None, None);
    for tok in tokens.filter(|t| !t.is_empty()) {
        let (tag, val) = tok.split_at(1);
        let bad = || StoreError::BadHeader(format!("malformed field `{tok}`"));
        match tag {
            "W" => width = Some(val.parse::<usize>().map_err(|_| bad())?),
            "H" => height = Some(val.parse::<usize>().map_err(|_| bad())?),
            "F" => {
                let (num, den) = val.split_once(':').ok_or_else(bad)?;
                let (num, den): (u32, u32) = (num.parse().map_err(|_| bad())?, den.parse().map_err(|_| bad())?);
                if den == 0 || num % den != 0 || num == 0 {
                    return Err(StoreError::BadHeader(format!("frame rate {val} is not a positive integer")));
                }
                fps = Some(num / den);
            }
            "C" => {
                if !val.starts_with("420") {
                    return Err(StoreError::UnsupportedChromaTag(tok.to_string()));
                }
            }
            "I" if val != "p" && val != "?" => {
                return Err(StoreError::BadHeader(format!("interlacing `{tok}` is not supported")));
            }
            _ => {}
        }
    }
    match (width, height, fps) {
        (Some(w), Some(h), Some(fps)) if w > 0 && h > 0 => Ok(Header {
            width: w,
            height: h,
            fps,
        }),
        _ => Err(StoreError::BadHeader("W, H and F are required and positive".into())),
    }
}

fn read_exact_or<R: Read>(src: &mut R, buf: &mut [u8], frame: usize) -> Result<(), StoreError> {
    src.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => StoreError::TruncatedFrame(frame),
        _ => StoreError::Io {
            path: "<y4m source>".into(),
            source: e,
        },
    })
}

/// Parse a 4:2:0 stream; chroma is read and discarded.
pub fn read_y4m<R: Read>(source: R) -> Result<FrameSequence, StoreError> {
    let mut src = BufReader::new(source);
    let line = read_line(&mut src, "header")?.ok_or_else(|| StoreError::BadHeader("empty stream".into()))?;
    let header = parse_header(&line)?;
    let (w, h) = (header.width, header.height);
    let mut chroma = vec![0u8; 2 * chroma_len(w, h)];
    let mut frames = Vec::new();
    while let Some(marker) = read_line(&mut src, "FRAME")? {
        if !(marker == b"FRAME" || marker.starts_with(b"FRAME ")) {
            return Err(StoreError::BadHeader(format!(
                "expected FRAME marker before frame {}",
                frames.len()
            )));
        }
        let mut luma = vec![0u8; w * h];
        read_exact_or(&mut src, &mut luma, frames.len())?;
        read_exact_or(&mut src, &mut chroma, frames.len())?;
        frames.push(FrameBuffer::new(w, h, luma).expect("sized from the header"));
    }
    if frames.is_empty() {
        return Err(StoreError::BadHeader("stream holds no frames".into()));
    }
    Ok(FrameSequence::new(frames, header.fps, None)?)
}

pub fn read_y4m_file(path: &Path) -> Result<FrameSequence, StoreError> {
    let file = std::fs::File::open(path).map_err(StoreError::io(path))?;
    read_y4m(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> FrameSequence {
        let f = FrameBuffer::new(2, 2, vec![0, 255, 255, 0]).unwrap();
        FrameSequence::new(vec![f], 30, None).unwrap()
    }

    const FIXTURE: &[u8] = b"YUV4MPEG2 W2 H2 F30:1 Ip A1:1 C420jpeg\nFRAME\n\x00\xff\xff\x00\x80\x80";

    #[test]
    fn hand_assembled_bytes() {
        let mut out = Vec::new();
        let n = write_y4m(&two_by_two(), &mut out).unwrap();
        assert_eq!(out, FIXTURE);
        assert_eq!(n, FIXTURE.len() as u64);
        assert_eq!(read_y4m(FIXTURE).unwrap(), two_by_two());
    }

    #[test]
    fn odd_dimensions_rejected() {
        let f = FrameBuffer::filled(3, 2, 0).unwrap();
        let seq = FrameSequence::new(vec![f], 30, None).unwrap();
        assert!(matches!(write_y4m(&seq, &mut Vec::new()), Err(StoreError::OddDimensions(3, 2))));
    }

    #[test]
    fn truncated_and_malformed() {
        assert!(matches!(read_y4m(&FIXTURE[..FIXTURE.len() - 3]), Err(StoreError::TruncatedFrame(0))));
        let no_marker = b"YUV4MPEG2 W2 H2 F30:1 Ip A1:1 C420jpeg\n\x00\xff\xff\x00\x80\x80";
        assert!(matches!(read_y4m(&no_marker[..]), Err(StoreError::BadHeader(_))));
        let chroma = b"YUV4MPEG2 W2 H2 F30:1 C444\nFRAME\n";
        assert!(matches!(read_y4m(&chroma[..]), Err(StoreError::UnsupportedChromaTag(_))));
        assert!(matches!(read_y4m(&b"MPEG W2\n"[..]), Err(StoreError::BadHeader(_))));
        assert!(matches!(read_y4m(&b"YUV4MPEG2 W2 H2\n"[..]), Err(StoreError::BadHeader(_))));
    }

    #[test]
    fn frame_parameters_and_ratio_rates() {
        let text = b"YUV4MPEG2 W2 H2 F60:2 C420\nFRAME Ixyz\n\x01\x02\x03\x04\x80\x80";
        let seq = read_y4m(&text[..]).unwrap();
        assert_eq!(seq.fps(), 30);
        assert_eq!(seq.frames()[0].pixels(), &[1, 2, 3, 4]);
        let ntsc = b"YUV4MPEG2 W2 H2 F30000:1001 C420\nFRAME\n";
        assert!(matches!(read_y4m(&ntsc[..]), Err(StoreError::BadHeader(_))));
    }
}
