//! The study backend over real HTTP on a loopback port.

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::path::Path;

use temporal_noise::cli::serve::{ServeArgs, Service};
use temporal_noise::dataset::{generate, plan_batch, BatchEntry, BatchSpec, ParamOverrides};
use temporal_noise::store::{read_responses, ContainerFormat, ContentSource, Manifest};
use temporal_noise::EncodingParams;

struct Reply {
    status: u16,
    body: Vec<u8>,
}

impl Reply {
    fn text(&self) -> String {
        String::from_utf8_lossy(&self.body).into_owned()
    }

    fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body).unwrap()
    }
}

fn request(addr: SocketAddr, method: &str, path: &str, body: &str) -> Reply {
    let mut s = TcpStream::connect(addr).unwrap();
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\nContent-Length: {}\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut raw = Vec::new();
    s.read_to_end(&mut raw).unwrap();
    let split = raw.windows(4).position(|w| w == b"\r\n\r\n").expect("header end");
    let head = String::from_utf8_lossy(&raw[..split]).into_owned();
    let status = head.split_whitespace().nth(1).unwrap().parse().unwrap();
    Reply {
        status,
        body: raw[split + 4..].to_vec(),
    }
}

const WORDS: [&str; 6] = ["SUN", "MAP", "CAT", "OWL", "BEE", "FOX"];

struct Study {
    dir: tempfile::TempDir,
    service: Option<Service>,
}

impl Study {
    fn start(sessions: &str) -> Study {
        let dir = tempfile::tempdir().unwrap();
        let spec = BatchSpec {
            params: ParamOverrides {
                width: Some(64),
                height: Some(48),
                duration_s: Some(0.4),
                ..Default::default()
            },
            format: ContainerFormat::Png,
            entries: WORDS
                .iter()
                .map(|t| BatchEntry::new(ContentSource::Text { text: t.to_string(), scale: 2 }))
                .collect(),
        };
        let mut manifest = plan_batch(&spec, &EncodingParams::default()).unwrap();
        manifest.entries[0].prompts = Some(temporal_noise::store::Prompts {
            direct: Some("prompt-a".into()),
            chain_of_thought: Some("prompt-b".into()),
        });
        generate(&manifest, dir.path(), 0).unwrap();
        manifest.write(&dir.path().join("manifest.json")).unwrap();
        std::fs::write(dir.path().join("sessions.json"), sessions).unwrap();
        let assets = dir.path().join("ui");
        std::fs::create_dir_all(&assets).unwrap();
        std::fs::write(assets.join("index.html"), "<!doctype html><title>study</title>").unwrap();
        let service = Service::start(&args(dir.path())).unwrap();
        Study {
            dir,
            service: Some(service),
        }
    }

    fn addr(&self) -> SocketAddr {
        self.service.as_ref().unwrap().addr()
    }

    fn log(&self) -> Vec<temporal_noise::eval::ResponseRecord> {
        read_responses(&self.dir.path().join("responses.ndjson")).unwrap()
    }
}

impl Drop for Study {
    fn drop(&mut self) {
        if let Some(s) = self.service.take() {
            s.shutdown();
        }
    }
}

fn args(dir: &Path) -> ServeArgs {
    ServeArgs {
        manifest: dir.join("manifest.json"),
        sessions: dir.join("sessions.json"),
        responses: dir.join("responses.ndjson"),
        host: "127.0.0.1".into(),
        port: 0,
        root: Some(dir.join("ui")),
        threads: 2,
    }
}

const SESSIONS: &str = r#"{"schema":"tnoise.sessions/1","sessions":[
  {"session_id":"s1","responder_id":"p1","fps":10,"shuffle_seed":3,"max_duration_s":120},
  {"session_id":"s2","responder_id":"p2","videos":["text_001_map_s0"],"prompt":"chain_of_thought","replay_allowed":false}
]}"#;

fn answer(video: &str, who: &str, rating: u8) -> String {
    format!(
        r#"{{"video_id":"{video}","responder_id":"{who}","response_text":"sun","perceptibility":{rating},"fps_shown":10,"timestamp":1700000000}}"#
    )
}

#[test]
fn session_descriptor_never_carries_labels() {
    let study = Study::start(SESSIONS);
    let r = request(study.addr(), "GET", "/session/s1", "");
    assert_eq!(r.status, 200);
    let d = r.json();
    let videos = d["videos"].as_array().unwrap();
    assert_eq!(videos.len(), 6);
    assert_eq!(d["total"], 6);
    assert_eq!(d["shuffle_seed"], 3);
    for v in videos {
        assert_eq!(v["fps_shown"], 10);
        assert_eq!(v["frame_step"], 3);
        assert_eq!(v["frames"], 4);
    }
    let mut order: Vec<&str> = videos.iter().map(|v| v["video"].as_str().unwrap()).collect();
    assert_ne!(order, ["v0000", "v0001", "v0002", "v0003", "v0004", "v0005"], "shuffled");
    order.sort();
    assert_eq!(order, ["v0000", "v0001", "v0002", "v0003", "v0004", "v0005"]);

    let manifest = Manifest::read(&study.dir.path().join("manifest.json")).unwrap();
    let mut payloads = vec![r.text()];
    for s in ["s1", "s2"] {
        payloads.push(request(study.addr(), "GET", &format!("/session/{s}"), "").text());
    }
    for i in 0..6 {
        payloads.push(request(study.addr(), "GET", &format!("/video/v{i:04}/meta"), "").text());
    }
    for p in &payloads {
        let lower = p.to_lowercase();
        for e in &manifest.entries {
            assert!(!p.contains(&e.video_id), "{p}");
            for l in &e.labels {
                assert!(!lower.contains(l.as_str()), "label {l} leaked: {p}");
            }
        }
        assert!(!lower.contains("category") && !lower.contains("labels"), "{p}");
    }
}

#[test]
fn session_options_and_prompts() {
    let study = Study::start(SESSIONS);
    let d = request(study.addr(), "GET", "/session/s2", "").json();
    assert_eq!(d["replay_allowed"], false);
    assert_eq!(d["videos"].as_array().unwrap().len(), 1);
    assert_eq!(d["videos"][0]["video"], "v0001");
    assert_eq!(d["videos"][0]["fps_shown"], 30);
    assert_eq!(d["videos"][0]["frame_step"], 1);
    let s1 = request(study.addr(), "GET", "/session/s1", "").json();
    let first = s1["videos"].as_array().unwrap().iter().find(|v| v["video"] == "v0000").unwrap().clone();
    assert_eq!(first["prompt"], "prompt-a");
    assert_eq!(s1["max_duration_s"], 120);
    assert_eq!(request(study.addr(), "GET", "/session/nope", "").status, 404);
}

#[test]
fn frames_and_metadata() {
    let study = Study::start(SESSIONS);
    let meta = request(study.addr(), "GET", "/video/v0002/meta", "").json();
    assert_eq!((meta["width"].as_u64(), meta["height"].as_u64(), meta["frame_count"].as_u64()), (Some(64), Some(48), Some(12)));
    let png = request(study.addr(), "GET", "/video/v0002/frame/11", "");
    assert_eq!(png.status, 200);
    assert_eq!(&png.body[1..4], b"PNG");
    assert_eq!(request(study.addr(), "GET", "/video/v0002/frame/12", "").status, 404);
    assert_eq!(request(study.addr(), "GET", "/video/v0099/meta", "").status, 404);
    assert_eq!(request(study.addr(), "GET", "/video/v0002/frame/x", "").status, 404);
}

#[test]
fn valid_submission_appends_exactly_one_line() {
    let study = Study::start(SESSIONS);
    let r = request(study.addr(), "POST", "/responses", &answer("v0000", "p1", 4));
    assert_eq!(r.status, 201, "{}", r.text());
    let log = study.log();
    assert_eq!(log.len(), 1);
    assert_eq!(log[0].video_id, "text_000_sun_s0");
    assert_eq!(log[0].perceptibility, Some(4));

    let d = request(study.addr(), "GET", "/session/s1", "").json();
    assert_eq!(d["completed"], serde_json::json!(["v0000"]));
}

#[test]
fn invalid_rating_is_rejected_and_log_unchanged() {
    let study = Study::start(SESSIONS);
    let r = request(study.addr(), "POST", "/responses", &answer("v0000", "p1", 6));
    assert_eq!(r.status, 422);
    assert_eq!(r.json()["error"]["path"], "perceptibility");
    let r = request(study.addr(), "POST", "/responses", r#"{"video_id":"v0000","responder_id":"p1"}"#);
    assert_eq!(r.status, 422);
    let r = request(study.addr(), "POST", "/responses", "not json");
    assert_eq!(r.status, 422);
    assert!(study.log().is_empty());
}

#[test]
fn duplicates_and_unassigned_videos_are_refused() {
    let study = Study::start(SESSIONS);
    assert_eq!(request(study.addr(), "POST", "/responses", &answer("v0001", "p2", 3)).status, 201);
    let dup = request(study.addr(), "POST", "/responses", &answer("v0001", "p2", 5));
    assert_eq!(dup.status, 409);
    let other = request(study.addr(), "POST", "/responses", &answer("v0002", "p2", 3));
    assert_eq!(other.status, 422);
    assert_eq!(other.json()["error"]["path"], "responder_id");
    let unknown = request(study.addr(), "POST", "/responses", &answer("v0042", "p1", 3));
    assert_eq!(unknown.status, 422);
    assert_eq!(study.log().len(), 1);
}

#[test]
fn answered_videos_survive_a_restart() {
    let mut study = Study::start(SESSIONS);
    assert_eq!(request(study.addr(), "POST", "/responses", &answer("v0003", "p1", 2)).status, 201);
    study.service.take().unwrap().shutdown();
    study.service = Some(Service::start(&args(study.dir.path())).unwrap());
    assert_eq!(request(study.addr(), "POST", "/responses", &answer("v0003", "p1", 2)).status, 409);
    let d = request(study.addr(), "GET", "/session/s1", "").json();
    assert_eq!(d["completed"], serde_json::json!(["v0003"]));
}

#[test]
fn static_assets_stay_inside_the_root() {
    let study = Study::start(SESSIONS);
    let index = request(study.addr(), "GET", "/", "");
    assert_eq!(index.status, 200);
    assert!(index.text().contains("<title>study</title>"));
    assert_eq!(request(study.addr(), "GET", "/../manifest.json", "").status, 404);
    assert_eq!(request(study.addr(), "GET", "/ui/../../manifest.json", "").status, 404);
    assert_eq!(request(study.addr(), "DELETE", "/responses", "").status, 405);
}

#[test]
fn bad_session_config_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let mut study = Study::start(SESSIONS);
    std::fs::copy(study.dir.path().join("manifest.json"), dir.path().join("manifest.json")).unwrap();
    study.service.take().unwrap().shutdown();
    std::fs::write(
        dir.path().join("sessions.json"),
        r#"{"schema":"tnoise.sessions/1","sessions":[{"session_id":"a","responder_id":"p","videos":["nope"]}]}"#,
    )
    .unwrap();
    let err = Service::start(&args(dir.path())).err().expect("unknown video rejected");
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("sessions[0].videos[0]"), "{err}");

    // a port that is already taken is an I/O failure
    let busy = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let mut a = args(study.dir.path());
    a.port = busy.local_addr().unwrap().port();
    let err = Service::start(&a).err().expect("port in use");
    assert_eq!(err.exit_code(), 3);
}
