//! Run the study backend on a free port, walk through a session over plain
//! HTTP, and submit one answer.

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};

use temporal_noise::cli::serve::{ServeArgs, Service};
use temporal_noise::dataset::{generate, plan_batch, BatchEntry, BatchSpec, ParamOverrides};
use temporal_noise::store::{ContainerFormat, ContentSource};
use temporal_noise::EncodingParams;

fn request(addr: SocketAddr, method: &str, path: &str, body: &str) -> std::io::Result<String> {
    let mut s = TcpStream::connect(addr)?;
    write!(
        s,
        "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\nContent-Length: {}\r\n\r\n{body}",
        body.len()
    )?;
    let mut out = Vec::new();
    s.read_to_end(&mut out)?;
    Ok(String::from_utf8_lossy(&out).into_owned())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("tnoise_study_example");
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir)?;
    let spec = BatchSpec {
        params: ParamOverrides {
            width: Some(64),
            height: Some(48),
            duration_s: Some(0.5),
            ..Default::default()
        },
        format: ContainerFormat::Png,
        entries: ["SUN", "MAP"]
            .map(|t| BatchEntry::new(ContentSource::Text { text: t.into(), scale: 2 }))
            .to_vec(),
    };
    let manifest = plan_batch(&spec, &EncodingParams::default())?;
    generate(&manifest, &dir, 0)?;
    manifest.write(&dir.join("manifest.json"))?;
    std::fs::write(
        dir.join("sessions.json"),
        r#"{"schema":"tnoise.sessions/1","sessions":[{"session_id":"demo","responder_id":"p1","fps":15}]}"#,
    )?;

    let service = Service::start(&ServeArgs {
        manifest: dir.join("manifest.json"),
        sessions: dir.join("sessions.json"),
        responses: dir.join("responses.ndjson"),
        host: "127.0.0.1".into(),
        port: 0,
        root: None,
        threads: 2,
    })?;
    let addr = service.addr();
    println!("listening on {addr}");

    let session = request(addr, "GET", "/session/demo", "")?;
    println!("{}", session.split("\r\n\r\n").nth(1).unwrap_or_default());
    let frame = request(addr, "GET", "/video/v0000/frame/0", "")?;
    println!("frame 0: {}", frame.lines().next().unwrap_or_default());

    let answer = r#"{"video_id":"v0000","responder_id":"p1","response_text":"sun","perceptibility":4,"fps_shown":15,"timestamp":1700000000}"#;
    for attempt in 1..=2 {
        let reply = request(addr, "POST", "/responses", answer)?;
        println!("submit #{attempt}: {}", reply.lines().next().unwrap_or_default());
    }
    service.shutdown();
    println!("log:\n{}", std::fs::read_to_string(dir.join("responses.ndjson"))?);
    Ok(())
}
