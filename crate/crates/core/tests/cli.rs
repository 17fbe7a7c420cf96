//! End-to-end runs of the `tnoise` binary.

use std::path::Path;
use std::process::{Command, Output};

use temporal_noise::eval::ResponseRecord;
use temporal_noise::store::{append_response, encode_png, write_y4m_file, Manifest};
use temporal_noise::*;

fn tnoise(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tnoise"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &[&str] = &["--size", "64x48", "--duration", "0.2"];

fn gen(out: &Path, args: &[&str]) {
    let mut all = vec!["gen"];
    all.extend_from_slice(args);
    all.extend_from_slice(SMALL);
    let o = tnoise(out, &all);
    assert!(o.status.success(), "{args:?}: {}", stderr(&o));
}

#[test]
fn gen_appends_to_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), &["text", "HI", "--labels", "hi"]);
    gen(dir.path(), &["shape", "circle", "--radius", "15"]);
    gen(dir.path(), &["shape", "triangle", "--format", "png"]);
    let m = Manifest::read(&dir.path().join("manifest.json")).unwrap();
    let ids: Vec<&str> = m.entries.iter().map(|e| e.video_id.as_str()).collect();
    assert_eq!(ids, ["text_hi_s0", "shapes_circle_s0", "shapes_triangle_s0"]);
    assert_eq!(m.entries[1].labels.iter().collect::<Vec<_>>(), ["circle"]);
    assert!(dir.path().join("videos/text_hi_s0.y4m").is_file());
    assert!(dir.path().join("videos/shapes_triangle_s0").is_dir());

    // regenerating the same id replaces the entry instead of duplicating it
    gen(dir.path(), &["text", "HI", "--labels", "hi"]);
    assert_eq!(Manifest::read(&dir.path().join("manifest.json")).unwrap().entries.len(), 3);
}

#[test]
fn invalid_parameters_exit_2_with_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = tnoise(dir.path(), &["gen", "text", "HI", "--velocity", "0,0", "--size", "64x48"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("velocity"), "{}", stderr(&o));

    let o = tnoise(dir.path(), &["gen", "text", "HI", "--density", "1.5", "--size", "64x48"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("density"), "{}", stderr(&o));

    let o = tnoise(dir.path(), &["decode", "v.y4m", "--threshold", "median"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_input_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = tnoise(dir.path(), &["decode", "no-such-video.y4m"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("no-such-video.y4m"));
    let o = tnoise(dir.path(), &["analyze"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn batch_of_fifteen_has_unique_ids() {
    let dir = tempfile::tempdir().unwrap();
    let words = ["GOLD", "FISH", "WAVE", "MILK", "JUMP", "TREE", "BIRD", "LAMP", "DOOR", "STAR"];
    let mut entries: Vec<String> = words
        .iter()
        .map(|w| format!(r#"{{"source":{{"kind":"text","text":"{w}","scale":1}}}}"#))
        .collect();
    entries.extend((0..5).map(|s| format!(r#"{{"source":{{"kind":"fixture","fixture":{{"kind":"random_shape","seed":{s}}}}}}}"#)));
    let spec = format!(
        r#"{{"schema":"tnoise.batch/1","params":{{"width":64,"height":48,"duration_s":0.1}},"entries":[{}]}}"#,
        entries.join(",")
    );
    std::fs::write(dir.path().join("batch.json"), spec).unwrap();
    let o = tnoise(dir.path(), &["gen", "batch", dir.path().join("batch.json").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = Manifest::read(&dir.path().join("manifest.json")).unwrap();
    let ids: std::collections::BTreeSet<&str> = m.entries.iter().map(|e| e.video_id.as_str()).collect();
    assert_eq!(m.entries.len(), 15);
    assert_eq!(ids.len(), 15);
}

#[test]
fn decode_circle_and_static_video() {
    let dir = tempfile::tempdir().unwrap();
    let truth = render_shape_mask(&ShapeSpec::new(
        Shape::Circle {
            cx: 128.0,
            cy: 128.0,
            radius: 60.0,
        },
        (256, 256),
    ))
    .unwrap();
    let p = validate_params(&EncodingParams {
        width: 256,
        height: 256,
        duration_s: 1.0,
        ..Default::default()
    })
    .unwrap();
    let video = encode_mask_animation(&truth, &p).unwrap();
    write_y4m_file(&video, &dir.path().join("circle.y4m")).unwrap();
    std::fs::write(dir.path().join("truth.png"), encode_png(&truth.to_frame()).unwrap()).unwrap();

    let o = tnoise(
        dir.path(),
        &["decode", dir.path().join("circle.y4m").to_str().unwrap(), "--truth", dir.path().join("truth.png").to_str().unwrap()],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o).lines().find(|l| l.starts_with("iou: ")).map(str::to_string).expect("iou line");
    let iou: f64 = line["iou: ".len()..].parse().unwrap();
    assert!(iou >= 0.8, "{iou}");
    for f in ["boundary.png", "coherence.png", "mask.png", "overlay_mask.png", "decode.json"] {
        assert!(dir.path().join("decode/circle").join(f).is_file(), "{f}");
    }

    let still = FrameSequence::new(vec![video.frames()[0].clone(); 8], 30, None).unwrap();
    write_y4m_file(&still, &dir.path().join("still.y4m")).unwrap();
    let o = tnoise(dir.path(), &["decode", dir.path().join("still.y4m").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("contentless"));
}

#[test]
fn analyze_writes_reports_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    for args in [["text", "AB"], ["shape", "square"]] {
        let o = tnoise(dir.path(), &["gen", args[0], args[1], "--size", "96x64", "--duration", "0.2"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let o = tnoise(dir.path(), &["analyze"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("Basic SNR (dB)") && text.contains("Text") && text.contains("Shapes"), "{text}");
    for f in ["text_ab_s0.snr.json", "shapes_square_s0.snr.json", "summary.json"] {
        assert!(dir.path().join("reports").join(f).is_file(), "{f}");
    }
    let o = tnoise(dir.path(), &["analyze", "--ids", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}

fn record(video: &str, text: &str) -> ResponseRecord {
    ResponseRecord {
        video_id: video.into(),
        responder_id: "p1".into(),
        response_text: text.into(),
        perceptibility: Some(5),
        fps_shown: None,
        prompt_id: None,
        timestamp: 0.0,
    }
}

#[test]
fn evaluate_matches_a_hand_count() {
    let dir = tempfile::tempdir().unwrap();
    for (word, label) in [("GO", "go"), ("UP", "up"), ("ON", "on")] {
        gen(dir.path(), &["text", word, "--labels", label]);
    }
    gen(dir.path(), &["shape", "circle"]);
    gen(dir.path(), &["shape", "square"]);
    let log = dir.path().join("responses.ndjson");
    for (v, t) in [
        ("text_go_s0", "Go"),
        ("text_up_s0", "up"),
        ("text_on_s0", "in"),
        ("shapes_circle_s0", "circle"),
        ("shapes_square_s0", "diamond"),
    ] {
        append_response(&log, &record(v, t)).unwrap();
    }
    let o = tnoise(dir.path(), &["evaluate", "--responses", log.to_str().unwrap(), "--perceptibility"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let row = |name: &str| text.lines().find(|l| l.starts_with(name)).unwrap_or_default().to_string();
    assert!(row("Text").ends_with("2/3"), "{text}");
    assert!(row("Shapes").ends_with("1/2"), "{text}");
    assert!(row("Overall").ends_with("3/5"), "{text}");
    assert!(dir.path().join("evaluation/accuracy.json").is_file());
}

#[test]
fn evaluate_rejects_an_invalid_record_with_its_path() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), &["text", "GO", "--labels", "go"]);
    let log = dir.path().join("responses.ndjson");
    std::fs::write(
        &log,
        "{\"schema\":\"tnoise.responses/1\"}\n{\"perceptibility\":9,\"responder_id\":\"p1\",\"response_text\":\"go\",\"timestamp\":0,\"video_id\":\"text_go_s0\"}\n",
    )
    .unwrap();
    let o = tnoise(dir.path(), &["evaluate", "--responses", log.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("perceptibility"), "{}", stderr(&o));
}
