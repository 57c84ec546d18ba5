//! Simulated tool-server fleet speaking a minimal MCP-style protocol.
//!
//! Two methods exist: `tools/list` returns a server's tool schemas,
//! `tools/call` invokes one tool. Requests and responses are single JSON
//! envelopes correlated by `request_id`. Dispatch is total: every request —
//! valid, unknown, or malformed — produces exactly one response, with
//! failures encoded as typed error codes rather than transport errors.
//!
//! Tool results come from per-server behavior tables: an exact
//! (canonicalized) parameter match hits a scripted case, otherwise the
//! tool's default, otherwise a deterministic synthesized line. Each tool
//! carries a simulated latency so scheduling experiments see realistic
//! wall-clock shapes.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};

use crate::registry::Registry;

pub const METHOD_TOOLS_LIST: &str = "tools/list";
pub const METHOD_TOOLS_CALL: &str = "tools/call";

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },
    #[error("behavior references unknown server `{0}`")]
    UnknownServer(String),
    #[error("behavior references unknown tool `{server}/{tool}`")]
    UnknownTool { server: String, tool: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    UnknownMethod,
    UnknownServer,
    UnknownTool,
    InvalidParams,
    TransportTimeout,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McpError {
    pub code: ErrorCode,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McpRequest {
    pub method: String,
    pub server_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<serde_json::Value>,
    pub request_id: String,
}

static REQUEST_COUNTER: AtomicU64 = AtomicU64::new(1);

/// Process-unique request id.
pub fn next_request_id(prefix: &str) -> String {
    format!("{prefix}-{}", REQUEST_COUNTER.fetch_add(1, Ordering::Relaxed))
}

impl McpRequest {
    pub fn tools_list(server_id: &str) -> Self {
        McpRequest {
            method: METHOD_TOOLS_LIST.into(),
            server_id: server_id.into(),
            tool: None,
            params: None,
            request_id: next_request_id("req"),
        }
    }

    pub fn tools_call(server_id: &str, tool: &str, params: serde_json::Value) -> Self {
        McpRequest {
            method: METHOD_TOOLS_CALL.into(),
            server_id: server_id.into(),
            tool: Some(tool.into()),
            params: Some(params),
            request_id: next_request_id("req"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McpResponse {
    pub request_id: String,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<McpError>,
}

impl McpResponse {
    pub fn success(request_id: &str, result: String) -> Self {
        McpResponse {
            request_id: request_id.into(),
            ok: true,
            result: Some(result),
            error: None,
        }
    }

    pub fn failure(request_id: &str, code: ErrorCode, message: String) -> Self {
        McpResponse {
            request_id: request_id.into(),
            ok: false,
            result: None,
            error: Some(McpError { code, message }),
        }
    }
}

/// Serialize with object keys sorted recursively, so parameter maps compare
/// by content rather than insertion order.
pub fn canonical_json(value: &serde_json::Value) -> String {
    fn normalize(value: &serde_json::Value) -> serde_json::Value {
        match value {
            serde_json::Value::Object(map) => {
                let sorted: BTreeMap<&String, serde_json::Value> =
                    map.iter().map(|(k, v)| (k, normalize(v))).collect();
                serde_json::to_value(sorted).expect("object normalizes")
            }
            serde_json::Value::Array(items) => {
                serde_json::Value::Array(items.iter().map(normalize).collect())
            }
            other => other.clone(),
        }
    }
    normalize(value).to_string()
}

// ---------------------------------------------------------------------------
// Behavior tables
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BehaviorCase {
    pub params: serde_json::Value,
    pub result: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ToolBehavior {
    #[serde(default)]
    pub latency_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cases: Vec<BehaviorCase>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ServerBehavior {
    pub server_id: String,
    /// Keyed by tool name.
    pub tools: BTreeMap<String, ToolBehavior>,
}

/// Latency overrides keyed `"server_id.tool"` → milliseconds; tools not
/// listed keep their behavior-table latency (default 0).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LatencyProfile {
    #[serde(default)]
    pub entries: BTreeMap<String, u64>,
}

impl LatencyProfile {
    pub fn from_path(path: &std::path::Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        serde_json::from_str(&text).map_err(|e| SimError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn set(&mut self, server_id: &str, tool: &str, ms: u64) {
        self.entries.insert(format!("{server_id}.{tool}"), ms);
    }
}

// ---------------------------------------------------------------------------
// Fleet
// ---------------------------------------------------------------------------

/// The whole simulated fleet: schemas from the registry plus behaviors.
pub struct Fleet {
    registry: Registry,
    behaviors: BTreeMap<String, ServerBehavior>,
}

impl Fleet {
    pub fn new(registry: Registry, behaviors: Vec<ServerBehavior>) -> Result<Self, SimError> {
        let mut map = BTreeMap::new();
        for behavior in behaviors {
            let Some(descriptor) = registry.get(&behavior.server_id) else {
                return Err(SimError::UnknownServer(behavior.server_id));
            };
            for tool in behavior.tools.keys() {
                if !descriptor.tools.iter().any(|t| &t.name == tool) {
                    return Err(SimError::UnknownTool {
                        server: behavior.server_id.clone(),
                        tool: tool.clone(),
                    });
                }
            }
            map.insert(behavior.server_id.clone(), behavior);
        }
        Ok(Fleet {
            registry,
            behaviors: map,
        })
    }

    /// Load a fixture directory: one `<server_id>.toml` descriptor per
    /// server plus an optional `<server_id>.behavior.json` table each.
    pub fn load_dir(dir: &std::path::Path) -> Result<Self, SimError> {
        let registry = Registry::load(dir).map_err(|e| SimError::Parse {
            path: dir.display().to_string(),
            message: e.to_string(),
        })?;
        let mut behavior_paths: Vec<std::path::PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| SimError::Io {
                path: dir.display().to_string(),
                source: e,
            })?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.ends_with(".behavior.json"))
            })
            .collect();
        behavior_paths.sort();
        let mut behaviors = Vec::with_capacity(behavior_paths.len());
        for path in behavior_paths {
            let text = std::fs::read_to_string(&path).map_err(|e| SimError::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            let behavior: ServerBehavior =
                serde_json::from_str(&text).map_err(|e| SimError::Parse {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?;
            behaviors.push(behavior);
        }
        Fleet::new(registry, behaviors)
    }

    /// Write the fixture layout `load_dir` reads: per-server descriptor
    /// TOMLs plus behavior tables.
    pub fn save_dir(&self, dir: &std::path::Path) -> Result<(), SimError> {
        std::fs::create_dir_all(dir).map_err(|e| SimError::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
        let io_err = |path: &std::path::Path, e: std::io::Error| SimError::Io {
            path: path.display().to_string(),
            source: e,
        };
        for descriptor in self.registry.iter() {
            let id = descriptor.server_id.clone();
            let mut single = Registry::default();
            single.insert(descriptor.clone()).expect("fresh registry");
            let path = dir.join(format!("{id}.toml"));
            std::fs::write(&path, single.to_toml()).map_err(|e| io_err(&path, e))?;
            if let Some(behavior) = self.behaviors.get(&id) {
                let path = dir.join(format!("{id}.behavior.json"));
                let text = serde_json::to_string_pretty(behavior).expect("behavior serializes");
                std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
            }
        }
        Ok(())
    }

    /// Override tool latencies from a profile; entries must name real
    /// servers and tools.
    pub fn apply_latency_profile(&mut self, profile: &LatencyProfile) -> Result<(), SimError> {
        for (key, ms) in &profile.entries {
            let Some((server_id, tool)) = key.split_once('.') else {
                return Err(SimError::Parse {
                    path: key.clone(),
                    message: "latency key must be `server_id.tool`".into(),
                });
            };
            let Some(descriptor) = self.registry.get(server_id) else {
                return Err(SimError::UnknownServer(server_id.to_string()));
            };
            if !descriptor.tools.iter().any(|t| t.name == tool) {
                return Err(SimError::UnknownTool {
                    server: server_id.to_string(),
                    tool: tool.to_string(),
                });
            }
            self.behaviors
                .entry(server_id.to_string())
                .or_insert_with(|| ServerBehavior {
                    server_id: server_id.to_string(),
                    tools: BTreeMap::new(),
                })
                .tools
                .entry(tool.to_string())
                .or_default()
                .latency_ms = *ms;
        }
        Ok(())
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    /// Simulated latency of one tool; zero when no behavior is scripted.
    pub fn tool_latency_ms(&self, server_id: &str, tool: &str) -> u64 {
        self.behaviors
            .get(server_id)
            .and_then(|b| b.tools.get(tool))
            .map(|t| t.latency_ms)
            .unwrap_or(0)
    }

    /// Latency of a server's first-listed tool — the one a planner should
    /// assume a task will call.
    pub fn primary_latency_ms(&self, server_id: &str) -> u64 {
        self.registry
            .get(server_id)
            .and_then(|d| d.tools.first())
            .map(|t| self.tool_latency_ms(server_id, &t.name))
            .unwrap_or(0)
    }

    /// Validate and dispatch without latency simulation.
    pub fn dispatch(&self, request: &McpRequest) -> McpResponse {
        let id = &request.request_id;
        match request.method.as_str() {
            METHOD_TOOLS_LIST => {
                let Some(descriptor) = self.registry.get(&request.server_id) else {
                    return McpResponse::failure(
                        id,
                        ErrorCode::UnknownServer,
                        format!("no server `{}`", request.server_id),
                    );
                };
                let listing =
                    serde_json::to_string(&descriptor.tools).expect("schemas serialize");
                McpResponse::success(id, listing)
            }
            METHOD_TOOLS_CALL => self.dispatch_call(request),
            other => McpResponse::failure(
                id,
                ErrorCode::UnknownMethod,
                format!("unsupported method `{other}`"),
            ),
        }
    }

    fn dispatch_call(&self, request: &McpRequest) -> McpResponse {
        let id = &request.request_id;
        let Some(descriptor) = self.registry.get(&request.server_id) else {
            return McpResponse::failure(
                id,
                ErrorCode::UnknownServer,
                format!("no server `{}`", request.server_id),
            );
        };
        let Some(tool_name) = request.tool.as_deref().filter(|t| !t.is_empty()) else {
            return McpResponse::failure(
                id,
                ErrorCode::InvalidParams,
                "tools/call requires `tool`".into(),
            );
        };
        let Some(schema) = descriptor.tools.iter().find(|t| t.name == tool_name) else {
            return McpResponse::failure(
                id,
                ErrorCode::UnknownTool,
                format!("server `{}` has no tool `{tool_name}`", request.server_id),
            );
        };
        let empty = serde_json::json!({});
        let params = request.params.as_ref().unwrap_or(&empty);
        let issues = crate::registry::check_params(schema, params);
        if let Some(first) = issues.first() {
            return McpResponse::failure(id, ErrorCode::InvalidParams, first.to_string());
        }
        let result = self.lookup_result(&request.server_id, tool_name, params);
        McpResponse::success(id, result)
    }

    fn lookup_result(&self, server_id: &str, tool: &str, params: &serde_json::Value) -> String {
        let behavior = self
            .behaviors
            .get(server_id)
            .and_then(|b| b.tools.get(tool));
        let canonical = canonical_json(params);
        if let Some(behavior) = behavior {
            for case in &behavior.cases {
                if canonical_json(&case.params) == canonical {
                    return case.result.clone();
                }
            }
            if let Some(default) = &behavior.default {
                return default.clone();
            }
        }
        format!("{tool} result for {canonical}")
    }

    /// Dispatch with the tool's simulated latency applied.
    pub async fn dispatch_with_latency(&self, request: &McpRequest) -> McpResponse {
        let latency = match (request.method.as_str(), request.tool.as_deref()) {
            (METHOD_TOOLS_CALL, Some(tool)) => self.tool_latency_ms(&request.server_id, tool),
            _ => 0,
        };
        if latency > 0 {
            tokio::time::sleep(std::time::Duration::from_millis(latency)).await;
        }
        self.dispatch(request)
    }
}

// ---------------------------------------------------------------------------
// Clients
// ---------------------------------------------------------------------------

#[async_trait]
pub trait McpClient: Send + Sync {
    /// Total call: transport problems come back as responses carrying
    /// `transport_timeout`, never as Rust errors.
    async fn call(&self, request: McpRequest) -> McpResponse;
}

/// Apply a deadline to a call; on expiry synthesize a timeout response.
pub async fn call_with_timeout(
    client: &dyn McpClient,
    request: McpRequest,
    timeout: std::time::Duration,
) -> McpResponse {
    let request_id = request.request_id.clone();
    match tokio::time::timeout(timeout, client.call(request)).await {
        Ok(response) => response,
        Err(_) => McpResponse::failure(
            &request_id,
            ErrorCode::TransportTimeout,
            format!("no response within {}ms", timeout.as_millis()),
        ),
    }
}

/// In-process client over a shared fleet.
pub struct LocalClient {
    fleet: Arc<Fleet>,
}

impl LocalClient {
    pub fn new(fleet: Arc<Fleet>) -> Self {
        LocalClient { fleet }
    }
}

#[async_trait]
impl McpClient for LocalClient {
    async fn call(&self, request: McpRequest) -> McpResponse {
        self.fleet.dispatch_with_latency(&request).await
    }
}

/// TCP client speaking newline-delimited JSON; one connection per call.
pub struct TcpClient {
    addr: String,
}

impl TcpClient {
    pub fn new(addr: String) -> Self {
        TcpClient { addr }
    }
}

#[async_trait]
impl McpClient for TcpClient {
    async fn call(&self, request: McpRequest) -> McpResponse {
        let request_id = request.request_id.clone();
        match self.call_inner(&request).await {
            Ok(response) => response,
            Err(message) => {
                McpResponse::failure(&request_id, ErrorCode::TransportTimeout, message)
            }
        }
    }
}

impl TcpClient {
    async fn call_inner(&self, request: &McpRequest) -> Result<McpResponse, String> {
        let stream = TcpStream::connect(&self.addr)
            .await
            .map_err(|e| format!("connect {}: {e}", self.addr))?;
        let (read_half, mut write_half) = stream.into_split();
        let mut line = serde_json::to_string(request).expect("request serializes");
        line.push('\n');
        write_half
            .write_all(line.as_bytes())
            .await
            .map_err(|e| format!("write: {e}"))?;
        let mut reader = BufReader::new(read_half);
        let mut buf = String::new();
        loop {
            buf.clear();
            let n = reader
                .read_line(&mut buf)
                .await
                .map_err(|e| format!("read: {e}"))?;
            if n == 0 {
                return Err("connection closed before response".into());
            }
            let response: McpResponse =
                serde_json::from_str(buf.trim()).map_err(|e| format!("bad response: {e}"))?;
            if response.request_id == request.request_id {
                return Ok(response);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Server
// ---------------------------------------------------------------------------

/// Serve the fleet over newline-delimited JSON on an already-bound listener.
/// Every received line yields exactly one response line; lines that do not
/// parse as an envelope get an `invalid_params` response echoing whatever
/// `request_id` could be recovered.
pub async fn serve(fleet: Arc<Fleet>, listener: TcpListener) -> std::io::Result<()> {
    loop {
        let (stream, _peer) = listener.accept().await?;
        let fleet = fleet.clone();
        tokio::spawn(async move {
            let (read_half, write_half) = stream.into_split();
            let writer = Arc::new(tokio::sync::Mutex::new(write_half));
            let mut reader = BufReader::new(read_half);
            let mut line = String::new();
            loop {
                line.clear();
                match reader.read_line(&mut line).await {
                    Ok(0) | Err(_) => break,
                    Ok(_) => {}
                }
                let text = line.trim().to_string();
                if text.is_empty() {
                    continue;
                }
                let fleet = fleet.clone();
                let writer = writer.clone();
                tokio::spawn(async move {
                    let response = respond_to_line(&fleet, &text).await;
                    let mut out =
                        serde_json::to_string(&response).expect("response serializes");
                    out.push('\n');
                    let mut writer = writer.lock().await;
                    let _ = writer.write_all(out.as_bytes()).await;
                });
            }
        });
    }
}

async fn respond_to_line(fleet: &Fleet, text: &str) -> McpResponse {
    match serde_json::from_str::<McpRequest>(text) {
        Ok(request) => fleet.dispatch_with_latency(&request).await,
        Err(e) => {
            // Salvage the id so the caller can still correlate the failure.
            let request_id = serde_json::from_str::<serde_json::Value>(text)
                .ok()
                .and_then(|v| v.get("request_id").and_then(|id| id.as_str()).map(String::from))
                .unwrap_or_default();
            McpResponse::failure(
                &request_id,
                ErrorCode::InvalidParams,
                format!("malformed envelope: {e}"),
            )
        }
    }
}
