//! `cgui watch`: polls a directory for `.cgui` changes, recompiles the entry
//! module and pushes the result to every connected preview over a websocket.
//!
//! Pushes are totally ordered: the hub stores the latest message and
//! broadcasts it under one lock, and a connecting client reads the current
//! message and subscribes under that same lock, so it sees the current state
//! followed by every later push, in order.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use cgui_core::codegen::{preview_page, BindingManifest, IrDocument, DEFAULT_PREVIEW_SCRIPT};
use cgui_core::compile::compile_file;
use cgui_core::diagnostic::{DiagnosticItem, Severity};
use cgui_core::functions::FunctionRegistry;
use serde::Serialize;
use tokio::sync::broadcast;

use crate::commands::{IO_ERROR, SUCCESS};

pub struct Options {
    pub dir: PathBuf,
    pub port: u16,
    pub poll_ms: u64,
    pub entry: Option<PathBuf>,
    pub search: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Payload {
    manifest: BindingManifest,
    ir: IrDocument,
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Push {
    Module { payload: Box<Payload> },
    Diagnostics { items: Vec<DiagnosticItem> },
}

impl Push {
    fn to_json(&self) -> Arc<str> {
        serde_json::to_string(self).expect("push messages serialize").into()
    }
}

struct Hub {
    current: Mutex<Option<Arc<str>>>,
    tx: broadcast::Sender<Arc<str>>,
}

impl Hub {
    fn new() -> Self {
        Hub {
            current: Mutex::new(None),
            tx: broadcast::channel(64).0,
        }
    }

    fn publish(&self, msg: Arc<str>) {
        let mut current = self.current.lock().expect("hub lock");
        *current = Some(Arc::clone(&msg));
        // No receivers is fine.
        let _ = self.tx.send(msg);
    }

    fn subscribe(&self) -> (Option<Arc<str>>, broadcast::Receiver<Arc<str>>) {
        let current = self.current.lock().expect("hub lock");
        (current.clone(), self.tx.subscribe())
    }

    fn latest(&self) -> Option<Arc<str>> {
        self.current.lock().expect("hub lock").clone()
    }
}

/// Snapshot of every `.cgui` file under the watched directory.
type Snapshot = BTreeMap<PathBuf, Vec<u8>>;

fn scan(dir: &Path, out: &mut Snapshot) {
    let Ok(entries) = fs::read_dir(dir) else { return };
    for entry in entries.flatten() {
        let path = entry.path();
        if path.is_dir() {
            scan(&path, out);
        } else if path.extension().is_some_and(|e| e == "cgui") {
            // A file that vanishes between listing and reading is simply absent.
            if let Ok(bytes) = fs::read(&path) {
                out.insert(path, bytes);
            }
        }
    }
}

struct Watcher {
    dir: PathBuf,
    entry: Option<PathBuf>,
    search: Vec<PathBuf>,
    snapshot: Snapshot,
}

impl Watcher {
    fn entry_file(&self) -> Option<PathBuf> {
        if let Some(e) = &self.entry {
            return Some(self.dir.join(e));
        }
        let top: Vec<&PathBuf> = self.snapshot.keys().filter(|p| p.parent() == Some(&self.dir)).collect();
        let candidates = if top.is_empty() {
            self.snapshot.keys().collect()
        } else {
            top
        };
        if let [only] = candidates[..] {
            return Some(only.clone());
        }
        let main = self.dir.join("main.cgui");
        if self.snapshot.contains_key(&main) {
            return Some(main);
        }
        candidates.first().map(|p| (*p).clone())
    }

    /// Rescans; true if any watched file was added, removed or edited.
    fn changed(&mut self) -> bool {
        let mut now = Snapshot::new();
        scan(&self.dir, &mut now);
        if now == self.snapshot {
            return false;
        }
        self.snapshot = now;
        true
    }

    fn compile(&self) -> Push {
        let Some(entry) = self.entry_file() else {
            return Push::Diagnostics {
                items: vec![DiagnosticItem {
                    file: self.dir.display().to_string(),
                    line: 1,
                    col: 1,
                    severity: Severity::Error,
                    message: "no .cgui files to preview".into(),
                }],
            };
        };
        let mut search = vec![self.dir.clone()];
        search.extend(self.search.iter().cloned());
        match compile_file(&entry, &search, &FunctionRegistry::with_builtins()) {
            Ok(c) => match c.module {
                Some(m) if !c.has_errors() => Push::Module {
                    payload: Box::new(Payload {
                        manifest: BindingManifest::from_module(&m),
                        ir: IrDocument::from_module(&m),
                    }),
                },
                _ => Push::Diagnostics {
                    items: c.diagnostics.iter().map(DiagnosticItem::from).collect(),
                },
            },
            Err(e) => Push::Diagnostics {
                items: vec![DiagnosticItem {
                    file: entry.display().to_string(),
                    line: 1,
                    col: 1,
                    severity: Severity::Error,
                    message: format!("cannot read file: {e}"),
                }],
            },
        }
    }
}

#[derive(Clone)]
struct AppState {
    hub: Arc<Hub>,
    preview_dir: Option<PathBuf>,
}

pub fn run(opts: Options) -> u8 {
    if !opts.dir.is_dir() {
        eprintln!("error: {} is not a directory", opts.dir.display());
        return IO_ERROR;
    }
    let runtime = match tokio::runtime::Builder::new_multi_thread().enable_all().build() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: cannot start the server runtime: {e}");
            return IO_ERROR;
        }
    };
    runtime.block_on(serve(opts))
}

async fn serve(opts: Options) -> u8 {
    let listener = match tokio::net::TcpListener::bind(("127.0.0.1", opts.port)).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: cannot listen on port {}: {e}", opts.port);
            return IO_ERROR;
        }
    };
    let addr = listener.local_addr().map(|a| a.to_string()).unwrap_or_default();

    let hub = Arc::new(Hub::new());
    let mut watcher = Watcher {
        dir: opts.dir.clone(),
        entry: opts.entry,
        search: opts.search,
        snapshot: Snapshot::new(),
    };
    watcher.changed();
    hub.publish(watcher.compile().to_json());

    let poll = Duration::from_millis(opts.poll_ms.max(1));
    let poll_hub = Arc::clone(&hub);
    std::thread::spawn(move || loop {
        std::thread::sleep(poll);
        if watcher.changed() {
            poll_hub.publish(watcher.compile().to_json());
        }
    });

    let state = AppState {
        hub,
        preview_dir: std::env::var_os("CGUI_PREVIEW_DIR").map(PathBuf::from),
    };
    let app = Router::new()
        .route("/", get(index))
        .route("/ws", get(ws_upgrade))
        .route("/state.json", get(latest))
        .route("/preview/{*path}", get(preview_asset))
        .with_state(state);

    println!("listening on http://{addr}/ (watching {})", opts.dir.display());
    let _ = io::stdout().flush();
    match axum::serve(listener, app).await {
        Ok(()) => SUCCESS,
        Err(e) => {
            eprintln!("error: server failed: {e}");
            IO_ERROR
        }
    }
}

async fn index() -> Html<String> {
    Html(preview_page("cgui watch", &[("live", "/ws")], DEFAULT_PREVIEW_SCRIPT))
}

/// The most recent push, for clients that poll instead of connecting.
async fn latest(State(state): State<AppState>) -> Response {
    match state.hub.latest() {
        Some(m) => ([(header::CONTENT_TYPE, "application/json")], m.to_string()).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    }
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("js" | "mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("html") => "text/html",
        Some("json" | "map") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("wasm") => "application/wasm",
        _ => "application/octet-stream",
    }
}

async fn preview_asset(State(state): State<AppState>, UrlPath(path): UrlPath<String>) -> Response {
    let Some(root) = state.preview_dir else {
        return (
            StatusCode::NOT_FOUND,
            "set CGUI_PREVIEW_DIR to serve the preview runtime",
        )
            .into_response();
    };
    let rel = Path::new(&path);
    if !rel.components().all(|c| matches!(c, Component::Normal(_))) {
        return StatusCode::NOT_FOUND.into_response();
    }
    let file = root.join(rel);
    match tokio::fs::read(&file).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&file))], bytes).into_response(),
        Err(_) => StatusCode::NOT_FOUND.into_response(),
    }
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(state): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| client(socket, state.hub))
}

async fn client(mut socket: WebSocket, hub: Arc<Hub>) {
    let (current, mut rx) = hub.subscribe();
    if let Some(m) = current {
        if socket.send(Message::Text(m.as_ref().into())).await.is_err() {
            return;
        }
    }
    loop {
        tokio::select! {
            msg = rx.recv() => {
                let text = match msg {
                    Ok(m) => m,
                    // Too slow to keep up: skip ahead to the newest state.
                    Err(broadcast::error::RecvError::Lagged(_)) => match hub.latest() {
                        Some(m) => m,
                        None => continue,
                    },
                    Err(broadcast::error::RecvError::Closed) => break,
                };
                if socket.send(Message::Text(text.as_ref().into())).await.is_err() {
                    break;
                }
            }
            inbound = socket.recv() => match inbound {
                None | Some(Err(_)) | Some(Ok(Message::Close(_))) => break,
                Some(Ok(_)) => {}
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn watcher(dir: &Path, entry: Option<&str>) -> Watcher {
        let mut w = Watcher {
            dir: dir.to_path_buf(),
            entry: entry.map(PathBuf::from),
            search: Vec::new(),
            snapshot: Snapshot::new(),
        };
        w.changed();
        w
    }

    #[test]
    fn entry_selection() {
        let tmp = tempfile::tempdir().unwrap();
        let d = tmp.path();
        fs::write(d.join("b.cgui"), "@gui\n v\n").unwrap();
        assert_eq!(watcher(d, None).entry_file(), Some(d.join("b.cgui")));
        fs::write(d.join("a.cgui"), "@gui\n v\n").unwrap();
        assert_eq!(watcher(d, None).entry_file(), Some(d.join("a.cgui")));
        fs::write(d.join("main.cgui"), "@gui\n v\n").unwrap();
        assert_eq!(watcher(d, None).entry_file(), Some(d.join("main.cgui")));
        assert_eq!(watcher(d, Some("b.cgui")).entry_file(), Some(d.join("b.cgui")));
    }

    #[test]
    fn change_detection_is_by_content() {
        let tmp = tempfile::tempdir().unwrap();
        let d = tmp.path();
        fs::create_dir(d.join("sub")).unwrap();
        fs::write(d.join("sub/x.cgui"), "@gui\n v\n").unwrap();
        let mut w = watcher(d, None);
        assert!(!w.changed());
        fs::write(d.join("sub/x.cgui"), "@gui\n v\n").unwrap();
        assert!(!w.changed());
        fs::write(d.join("sub/x.cgui"), "@gui\n w\n").unwrap();
        assert!(w.changed());
        fs::write(d.join("notes.txt"), "ignored").unwrap();
        assert!(!w.changed());
    }

    #[test]
    fn messages() {
        let tmp = tempfile::tempdir().unwrap();
        let d = tmp.path();
        fs::write(d.join("a.cgui"), "@gui\n v\n@constraints\n v.X << x\n@export x\n").unwrap();
        let msg: serde_json::Value = serde_json::from_str(&watcher(d, None).compile().to_json()).unwrap();
        assert_eq!(msg["type"], "module");
        assert_eq!(msg["payload"]["manifest"]["exports"][0]["name"], "x");
        assert_eq!(msg["payload"]["ir"]["version"], 1);

        fs::write(d.join("a.cgui"), "@gui\n v\n@constraints\n v.X << 1\n v.X << 2\n").unwrap();
        let msg: serde_json::Value = serde_json::from_str(&watcher(d, None).compile().to_json()).unwrap();
        assert_eq!(msg["type"], "diagnostics");
        let item = &msg["items"][0];
        assert_eq!(item["line"], 5);
        assert_eq!(item["severity"], "error");
        assert!(item["message"].as_str().unwrap().contains("multiple '<<' writers"));
        assert!(item["file"].as_str().unwrap().ends_with("a.cgui"));
    }

    #[test]
    fn hub_replays_current_state_then_later_pushes() {
        let hub = Hub::new();
        hub.publish("one".into());
        let (current, mut rx) = hub.subscribe();
        assert_eq!(current.as_deref(), Some("one"));
        hub.publish("two".into());
        assert_eq!(rx.try_recv().unwrap().as_ref(), "two");
    }
}
