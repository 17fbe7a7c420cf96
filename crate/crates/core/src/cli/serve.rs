//! HTTP backend of the identification study.
//!
//! Endpoints (all JSON bodies are canonical documents):
//!
//! * `GET /session/<id>`: presentation order, per-video playback settings
//!   and progress; never labels or categories.
//! * `GET /video/<v>/meta`: frame size, rate and count.
//! * `GET /video/<v>/frame/<n>`: frame `n` as a grayscale PNG.
//! * `POST /responses`: one response record, appended to the log.
//! * `GET /` and other paths: static files below `--root`.
//!
//! Videos are addressed by opaque aliases (`v0000`, `v0001`, ... in
//! manifest order), so ids that spell out their content never reach the
//! client. Submissions use the alias; the log stores the real id.

use std::collections::{HashMap, HashSet};
use std::io::Read;
use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use clap::Args;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tiny_http::{Header, Method, Request, Response, Server};

use super::CliError;
use crate::dataset::read_container;
use crate::encoder::FrameSequence;
use crate::eval::ResponseRecord;
use crate::store::{document_text, encode_png, from_canonical_str, read_document, to_canonical_line, Manifest, ResponseLog, SchemaTag, StoreError};
use crate::types::frame_count;

/// Largest accepted request body.
const MAX_BODY: u64 = 64 * 1024;

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    /// Manifest of the videos being shown.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Session configuration document.
    #[arg(long)]
    pub sessions: PathBuf,
    /// Response log that submissions are appended to.
    #[arg(long)]
    pub responses: PathBuf,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// 0 picks a free port.
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Directory of static UI assets.
    #[arg(long)]
    pub root: Option<PathBuf>,
    /// Request-handling threads.
    #[arg(long, default_value_t = 4)]
    pub threads: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    #[default]
    Direct,
    ChainOfThought,
}

fn allowed() -> bool {
    true
}

/// One participant's run through a list of videos.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionSpec {
    pub session_id: String,
    pub responder_id: String,
    /// Video ids in presentation order; every manifest video when absent.
    #[serde(default)]
    pub videos: Option<Vec<String>>,
    /// Shuffle the order with this seed, which is also sent to the client.
    #[serde(default)]
    pub shuffle_seed: Option<u64>,
    /// Presentation rate; each video's own rate when absent.
    #[serde(default)]
    pub fps: Option<u32>,
    #[serde(default = "allowed")]
    pub replay_allowed: bool,
    #[serde(default)]
    pub max_duration_s: Option<f64>,
    /// Which stored question text accompanies each video.
    #[serde(default)]
    pub prompt: PromptKind,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub sessions: Vec<SessionSpec>,
}

impl SchemaTag for SessionConfig {
    const SCHEMA: &'static str = "tnoise.sessions/1";
}

/// How one video is presented: request frames `0, step, 2·step, ...`
/// (`frames` of them) and show them at `fps_shown`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoSlot {
    pub video: String,
    pub fps_shown: u32,
    pub frame_step: usize,
    pub frames: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionDescriptor {
    pub session_id: String,
    pub responder_id: String,
    pub shuffle_seed: Option<u64>,
    pub replay_allowed: bool,
    pub max_duration_s: Option<f64>,
    pub videos: Vec<VideoSlot>,
    /// Aliases of the videos already answered in this session.
    pub completed: Vec<String>,
    pub total: usize,
}

impl SchemaTag for SessionDescriptor {
    const SCHEMA: &'static str = "tnoise.session_descriptor/1";
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoMeta {
    pub video: String,
    pub width: usize,
    pub height: usize,
    pub fps: u32,
    pub frame_count: usize,
}

impl SchemaTag for VideoMeta {
    const SCHEMA: &'static str = "tnoise.video_meta/1";
}

struct Plan {
    spec: SessionSpec,
    /// Manifest indices in presentation order.
    order: Vec<usize>,
}

struct State {
    manifest: Manifest,
    base: PathBuf,
    root: Option<PathBuf>,
    aliases: HashMap<String, usize>,
    sessions: HashMap<String, Plan>,
    /// Manifest indices each responder was assigned.
    assigned: HashMap<String, HashSet<usize>>,
    log: ResponseLog,
    /// `(responder, video id)` pairs already in the log; also serializes
    /// the check-then-append of submissions.
    answered: Mutex<HashSet<(String, String)>>,
    videos: Mutex<HashMap<usize, Arc<FrameSequence>>>,
}

fn alias(index: usize) -> String {
    format!("v{index:04}")
}

/// A reply before it is turned into an HTTP response.
struct Reply {
    status: u16,
    content_type: &'static str,
    body: Vec<u8>,
}

impl Reply {
    fn json(status: u16, text: String) -> Self {
        Reply {
            status,
            content_type: "application/json",
            body: text.into_bytes(),
        }
    }

    fn error(status: u16, path: &str, kind: &str, message: impl ToString) -> Self {
        let body = serde_json::json!({ "error": { "path": path, "kind": kind, "message": message.to_string() } });
        Reply::json(status, to_canonical_line(&body))
    }

    fn not_found(what: &str) -> Self {
        Reply::error(404, "", "NotFound", what)
    }
}

impl State {
    fn load(args: &ServeArgs) -> Result<Self, CliError> {
        let manifest = Manifest::read(&args.manifest)?;
        let config: SessionConfig = read_document(&args.sessions)?;
        let index: HashMap<&str, usize> = manifest
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.video_id.as_str(), i))
            .collect();
        let mut sessions = HashMap::new();
        let mut assigned: HashMap<String, HashSet<usize>> = HashMap::new();
        for (i, spec) in config.sessions.iter().enumerate() {
            let mut order = match &spec.videos {
                Some(ids) => ids
                    .iter()
                    .enumerate()
                    .map(|(j, id)| {
                        index.get(id.as_str()).copied().ok_or_else(|| {
                            CliError::invalid(format!("sessions[{i}].videos[{j}]"), "UnknownVideoId", format!("`{id}` is not in the manifest"))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?,
                None => (0..manifest.entries.len()).collect(),
            };
            if let Some(seed) = spec.shuffle_seed {
                order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            }
            assigned.entry(spec.responder_id.clone()).or_default().extend(&order);
            let plan = Plan {
                spec: spec.clone(),
                order,
            };
            if sessions.insert(spec.session_id.clone(), plan).is_some() {
                return Err(CliError::invalid(format!("sessions[{i}].session_id"), "DuplicateSessionId", &spec.session_id));
            }
        }
        let log = ResponseLog::open(&args.responses)?;
        let answered = log
            .read()?
            .into_iter()
            .map(|r| (r.responder_id, r.video_id))
            .collect();
        Ok(State {
            aliases: (0..manifest.entries.len()).map(|i| (alias(i), i)).collect(),
            base: args.manifest.parent().unwrap_or(Path::new(".")).to_path_buf(),
            root: args.root.clone(),
            manifest,
            sessions,
            assigned,
            log,
            answered: Mutex::new(answered),
            videos: Mutex::new(HashMap::new()),
        })
    }

    fn session(&self, id: &str) -> Reply {
        let Some(plan) = self.sessions.get(id) else {
            return Reply::not_found("no such session");
        };
        let spec = &plan.spec;
        let answered = self.answered.lock().expect("not poisoned");
        let mut completed = Vec::new();
        let videos = plan
            .order
            .iter()
            .map(|&i| {
                let e = &self.manifest.entries[i];
                if answered.contains(&(spec.responder_id.clone(), e.video_id.clone())) {
                    completed.push(alias(i));
                }
                let fps_shown = spec.fps.unwrap_or(e.params.fps).min(e.params.fps).max(1);
                let step = ((e.params.fps as f64 / fps_shown as f64).round() as usize).max(1);
                let prompts = e.prompts.as_ref();
                VideoSlot {
                    video: alias(i),
                    fps_shown,
                    frame_step: step,
                    frames: frame_count(e.params.fps, e.params.duration_s).div_ceil(step),
                    prompt: match spec.prompt {
                        PromptKind::Direct => prompts.and_then(|p| p.direct.clone()),
                        PromptKind::ChainOfThought => prompts.and_then(|p| p.chain_of_thought.clone()),
                    },
                }
            })
            .collect();
        let d = SessionDescriptor {
            session_id: spec.session_id.clone(),
            responder_id: spec.responder_id.clone(),
            shuffle_seed: spec.shuffle_seed,
            replay_allowed: spec.replay_allowed,
            max_duration_s: spec.max_duration_s,
            videos,
            completed,
            total: plan.order.len(),
        };
        Reply::json(200, document_text(&d))
    }

    fn meta(&self, video: &str) -> Reply {
        let Some(&i) = self.aliases.get(video) else {
            return Reply::not_found("no such video");
        };
        let p = &self.manifest.entries[i].params;
        let m = VideoMeta {
            video: video.to_string(),
            width: p.width,
            height: p.height,
            fps: p.fps,
            frame_count: frame_count(p.fps, p.duration_s),
        };
        Reply::json(200, document_text(&m))
    }

    fn sequence(&self, i: usize) -> Result<Arc<FrameSequence>, StoreError> {
        if let Some(seq) = self.videos.lock().expect("not poisoned").get(&i) {
            return Ok(seq.clone());
        }
        let seq = Arc::new(read_container(&self.manifest.entries[i], &self.base)?);
        self.videos.lock().expect("not poisoned").insert(i, seq.clone());
        Ok(seq)
    }

    fn frame(&self, video: &str, n: &str) -> Reply {
        let Some(&i) = self.aliases.get(video) else {
            return Reply::not_found("no such video");
        };
        let Ok(n) = n.parse::<usize>() else {
            return Reply::not_found("no such frame");
        };
        let seq = match self.sequence(i) {
            Ok(s) => s,
            Err(e) => return Reply::error(500, "", "Store", e),
        };
        match seq.frames().get(n).map(encode_png) {
            Some(Ok(png)) => Reply {
                status: 200,
                content_type: "image/png",
                body: png,
            },
            Some(Err(e)) => Reply::error(500, "", "Store", e),
            None => Reply::not_found("no such frame"),
        }
    }

    fn submit(&self, body: &str) -> Reply {
        let mut record: ResponseRecord = match from_canonical_str(body) {
            Ok(r) => r,
            Err(StoreError::SchemaViolation { path, message }) => return Reply::error(422, &path, "SchemaViolation", message),
            Err(e) => return Reply::error(422, "", "SchemaViolation", e),
        };
        if let Err(e) = record.validate() {
            return match e {
                crate::eval::EvalError::InvalidResponse { path, reason } => Reply::error(422, &path, "InvalidResponse", reason),
                other => Reply::error(422, "", "InvalidResponse", other),
            };
        }
        let Some(&i) = self.aliases.get(&record.video_id) else {
            return Reply::error(422, "video_id", "UnknownVideo", "no such video");
        };
        if !self.assigned.get(&record.responder_id).is_some_and(|s| s.contains(&i)) {
            return Reply::error(422, "responder_id", "NotAssigned", "this responder was not assigned this video");
        }
        let alias = std::mem::replace(&mut record.video_id, self.manifest.entries[i].video_id.clone());
        let mut answered = self.answered.lock().expect("not poisoned");
        let key = (record.responder_id.clone(), record.video_id.clone());
        if answered.contains(&key) {
            return Reply::error(409, "video_id", "AlreadyAnswered", "a response for this video was already recorded");
        }
        if let Err(e) = self.log.append(&record) {
            return Reply::error(500, "", "Store", e);
        }
        answered.insert(key);
        let ack = serde_json::json!({ "status": "recorded", "video": alias });
        Reply::json(201, to_canonical_line(&ack))
    }

    fn asset(&self, path: &str) -> Reply {
        let Some(root) = &self.root else {
            return Reply::not_found("no such resource");
        };
        let rel = if path.is_empty() { "index.html" } else { path };
        let rel = Path::new(rel);
        if !rel.components().all(|c| matches!(c, Component::Normal(_))) {
            return Reply::not_found("no such resource");
        }
        match std::fs::read(root.join(rel)) {
            Ok(body) => Reply {
                status: 200,
                content_type: content_type(rel),
                body,
            },
            Err(_) => Reply::not_found("no such resource"),
        }
    }

    fn handle(&self, req: &mut Request) -> Reply {
        let url = req.url().to_string();
        let path = url.split('?').next().unwrap_or_default().trim_matches('/').to_string();
        let segments: Vec<&str> = path.split('/').collect();
        match (req.method(), segments.as_slice()) {
            (Method::Get, ["session", id]) => self.session(id),
            (Method::Get, ["video", v, "meta"]) => self.meta(v),
            (Method::Get, ["video", v, "frame", n]) => self.frame(v, n),
            (Method::Post, ["responses"]) => {
                let mut body = String::new();
                match req.as_reader().take(MAX_BODY + 1).read_to_string(&mut body) {
                    Ok(n) if n as u64 > MAX_BODY => Reply::error(413, "", "TooLarge", "request body too large"),
                    Ok(_) => self.submit(&body),
                    Err(e) => Reply::error(400, "", "BadBody", e),
                }
            }
            (Method::Get, _) => self.asset(&path),
            _ => Reply::error(405, "", "MethodNotAllowed", "unsupported method"),
        }
    }
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js") => "text/javascript",
        Some("css") => "text/css",
        Some("json") => "application/json",
        Some("png") => "image/png",
        Some("svg") => "image/svg+xml",
        _ => "application/octet-stream",
    }
}

/// A running server.
pub struct Service {
    server: Arc<Server>,
    stopping: Arc<AtomicBool>,
    workers: Vec<JoinHandle<()>>,
    addr: SocketAddr,
}

impl Service {
    /// Load the manifest, sessions and log, bind, and start the workers.
    pub fn start(args: &ServeArgs) -> Result<Service, CliError> {
        let state = Arc::new(State::load(args)?);
        let server = Server::http((args.host.as_str(), args.port))
            .map_err(|e| CliError::Io(format!("cannot listen on {}:{}: {e}", args.host, args.port)))?;
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| CliError::Io("not listening on an IP socket".into()))?;
        let server = Arc::new(server);
        let stopping = Arc::new(AtomicBool::new(false));
        let workers = (0..args.threads.max(1))
            .map(|_| {
                let (server, state, stopping) = (server.clone(), state.clone(), stopping.clone());
                std::thread::spawn(move || loop {
                    match server.recv() {
                        Ok(mut req) => {
                            let reply = state.handle(&mut req);
                            let header = Header::from_bytes("Content-Type", reply.content_type).expect("valid header");
                            let response = Response::from_data(reply.body)
                                .with_status_code(reply.status)
                                .with_header(header);
                            let _ = req.respond(response);
                        }
                        Err(_) if stopping.load(Ordering::SeqCst) => break,
                        Err(_) => continue,
                    }
                })
            })
            .collect();
        Ok(Service {
            server,
            stopping,
            workers,
            addr,
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stop accepting requests and wait for the workers to finish.
    pub fn shutdown(self) {
        self.stopping.store(true, Ordering::SeqCst);
        for _ in &self.workers {
            self.server.unblock();
        }
        for w in self.workers {
            let _ = w.join();
        }
    }

    /// Serve until the process is stopped.
    pub fn wait(self) {
        for w in self.workers {
            let _ = w.join();
        }
    }
}

pub fn run(args: ServeArgs) -> Result<(), CliError> {
    let service = Service::start(&args)?;
    println!("serving on http://{}", service.addr());
    service.wait();
    Ok(())
}
