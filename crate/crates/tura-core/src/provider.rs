//! Text-generation and embedding providers.
//!
//! Every stage that would normally call a hosted model goes through the two
//! traits here, so the whole pipeline runs in three modes:
//!
//! * remote — OpenAI-compatible HTTP endpoints, selected via environment
//!   variables (`TURA_LLM_ENDPOINT`, `TURA_EMBED_ENDPOINT`);
//! * replay — [`ScriptedTextGen`] serves canned responses keyed by prompt
//!   substring, for byte-reproducible runs;
//! * rule-based — [`RuleBasedGen`] and [`HashingEmbedder`] are deterministic
//!   stand-ins that need no network at all.

use std::sync::Mutex;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use crate::parsing;
use crate::prompts;
use crate::registry::{ParamType, ToolSchema};

#[derive(Debug, thiserror::Error)]
pub enum ProviderError {
    #[error("no scripted response matches prompt (hint: {0})")]
    NoMatch(String),
    #[error("provider returned empty output")]
    EmptyResponse,
    #[error("http error: {0}")]
    Http(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("provider misconfigured: {0}")]
    Config(String),
}

/// One generation request. Temperature is advisory; deterministic providers
/// ignore it.
#[derive(Debug, Clone)]
pub struct GenRequest {
    pub prompt: String,
    pub temperature: f64,
}

#[async_trait]
pub trait TextGenProvider: Send + Sync {
    async fn generate(&self, request: &GenRequest) -> Result<String, ProviderError>;
}

#[async_trait]
pub trait EmbeddingProvider: Send + Sync {
    /// Embed one text. Vectors from one provider always share a dimension.
    async fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError>;

    async fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        let mut out = Vec::with_capacity(texts.len());
        for t in texts {
            out.push(self.embed(t).await?);
        }
        Ok(out)
    }

    /// Known output dimension, if fixed ahead of the first call.
    fn dimension_hint(&self) -> Option<usize> {
        None
    }
}

// ---------------------------------------------------------------------------
// Scripted replay
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize, Serialize)]
struct ReplayEntry {
    /// Substring that must appear in the prompt for this entry to apply.
    #[serde(rename = "match")]
    pattern: String,
    /// Responses served in order; the last one repeats once exhausted.
    responses: Vec<String>,
}

#[derive(Debug, Deserialize, Serialize)]
struct ReplayFile {
    entries: Vec<ReplayEntry>,
}

/// Replays canned responses from a JSON file.
///
/// The entry whose `match` substring is longest among those contained in the
/// prompt wins, so specific patterns shadow generic ones. Each entry keeps a
/// cursor; after the list is exhausted the final response repeats.
pub struct ScriptedTextGen {
    entries: Vec<ReplayEntry>,
    cursors: Mutex<Vec<usize>>,
}

impl ScriptedTextGen {
    pub fn from_value(value: &serde_json::Value) -> Result<Self, ProviderError> {
        let file: ReplayFile = serde_json::from_value(value.clone())
            .map_err(|e| ProviderError::Config(format!("bad replay file: {e}")))?;
        Ok(Self::from_entries(file.entries))
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ProviderError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ProviderError::Config(format!("cannot read {}: {e}", path.display())))?;
        let file: ReplayFile = serde_json::from_str(&text)
            .map_err(|e| ProviderError::Config(format!("bad replay file {}: {e}", path.display())))?;
        Ok(Self::from_entries(file.entries))
    }

    fn from_entries(entries: Vec<ReplayEntry>) -> Self {
        let cursors = Mutex::new(vec![0; entries.len()]);
        ScriptedTextGen { entries, cursors }
    }
}

#[async_trait]
impl TextGenProvider for ScriptedTextGen {
    async fn generate(&self, request: &GenRequest) -> Result<String, ProviderError> {
        let best = self
            .entries
            .iter()
            .enumerate()
            .filter(|(_, e)| request.prompt.contains(&e.pattern))
            .max_by_key(|(_, e)| e.pattern.len());
        let Some((idx, entry)) = best else {
            let head: String = request.prompt.chars().take(60).collect();
            return Err(ProviderError::NoMatch(head));
        };
        if entry.responses.is_empty() {
            return Err(ProviderError::EmptyResponse);
        }
        let mut cursors = self.cursors.lock().expect("cursor lock");
        let cursor = cursors[idx].min(entry.responses.len() - 1);
        cursors[idx] = cursor + 1;
        Ok(entry.responses[cursor].clone())
    }
}

// ---------------------------------------------------------------------------
// Fallback composition
// ---------------------------------------------------------------------------

/// Tries providers in order; a provider's failure moves on to the next.
/// The final provider's error is returned if none succeed.
pub struct FallbackChain {
    providers: Vec<Box<dyn TextGenProvider>>,
}

impl FallbackChain {
    pub fn new(providers: Vec<Box<dyn TextGenProvider>>) -> Self {
        FallbackChain { providers }
    }
}

#[async_trait]
impl TextGenProvider for FallbackChain {
    async fn generate(&self, request: &GenRequest) -> Result<String, ProviderError> {
        let mut last = ProviderError::Config("empty fallback chain".into());
        for p in &self.providers {
            match p.generate(request).await {
                Ok(text) => return Ok(text),
                Err(e) => last = e,
            }
        }
        Err(last)
    }
}

// ---------------------------------------------------------------------------
// Rule-based offline generation
// ---------------------------------------------------------------------------

const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "by", "for", "from", "in", "into", "is", "it", "of",
    "on", "or", "per", "that", "the", "their", "this", "to", "via", "with", "within",
];

/// Deterministic stand-in for a hosted model.
///
/// Recognizes each pipeline prompt by its marker line and answers with rules:
/// decomposition splits on coordinating connectives, synthetic queries are
/// template fills over description keywords, planning emits independent
/// tasks, and execution calls the first advertised tool then finalizes with
/// the latest observation.
pub struct RuleBasedGen;

#[async_trait]
impl TextGenProvider for RuleBasedGen {
    async fn generate(&self, request: &GenRequest) -> Result<String, ProviderError> {
        let prompt = &request.prompt;
        if prompt.contains(prompts::MARK_DECOMPOSE) {
            return Ok(self.decompose(prompt));
        }
        if prompt.contains(prompts::MARK_SYNTH) {
            return Ok(self.synthesize_queries(prompt));
        }
        if prompt.contains(prompts::MARK_PLAN) {
            return Ok(self.plan(prompt));
        }
        if prompt.contains(prompts::MARK_EXECUTE) {
            return self.execute(prompt);
        }
        let head: String = prompt.chars().take(60).collect();
        Err(ProviderError::NoMatch(head))
    }
}

/// Connectives treated as intent boundaries by the rule-based decomposer.
/// Benchmark query synthesis joins intents with these, so offline
/// decomposition recovers the exact segments.
pub const CONNECTIVES: &[&str] = &[
    "; ",
    ", and also ",
    " and also ",
    ", also ",
    " as well as ",
    ", plus ",
    " plus ",
    ", then ",
    " and then ",
    ", and ",
    " and ",
];

impl RuleBasedGen {
    fn field<'a>(prompt: &'a str, label: &str) -> Option<&'a str> {
        prompt
            .lines()
            .find_map(|line| line.strip_prefix(label))
            .map(str::trim)
    }

    fn decompose(&self, prompt: &str) -> String {
        let query = Self::field(prompt, "Query: ").unwrap_or_default();
        let mut parts = vec![query.to_string()];
        for connective in CONNECTIVES {
            parts = parts
                .into_iter()
                .flat_map(|p| {
                    p.split(connective)
                        .map(|s| s.trim().to_string())
                        .collect::<Vec<_>>()
                })
                .collect();
        }
        let parts: Vec<String> = parts.into_iter().filter(|p| !p.is_empty()).collect();
        serde_json::to_string(&parts).expect("string list serializes")
    }

    fn synthesize_queries(&self, prompt: &str) -> String {
        let description = Self::field(prompt, "Description: ").unwrap_or_default();
        let count = prompt
            .lines()
            .find_map(|l| l.strip_prefix("Count: "))
            .and_then(|n| n.trim().parse::<usize>().ok())
            .unwrap_or(20);
        let words: Vec<&str> = description
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| w.len() > 2 && !STOPWORDS.contains(&w.to_lowercase().as_str()))
            .collect();
        let mut queries = Vec::with_capacity(count);
        for i in 0..count {
            let a = words.get(i % words.len().max(1)).unwrap_or(&"info").to_lowercase();
            let b = words
                .get((i + 1) % words.len().max(1))
                .unwrap_or(&"options")
                .to_lowercase();
            let q = match i % 5 {
                0 => format!("how to check {a} {b}"),
                1 => format!("find {a} {b} near me"),
                2 => format!("best {a} for {b}"),
                3 => format!("show me {a} {b}"),
                _ => format!("need {a} {b} today"),
            };
            queries.push(q);
        }
        serde_json::to_string(&queries).expect("string list serializes")
    }

    fn plan(&self, prompt: &str) -> String {
        // One independent task per sub-query, routed to its top candidate.
        let mut tasks = serde_json::Map::new();
        let mut index = 0usize;
        for line in prompt.lines() {
            let Some(rest) = line.strip_prefix("Sub-query ") else {
                continue;
            };
            let Some((_, body)) = rest.split_once(": ") else {
                continue;
            };
            // Body shape: `<query> | candidates: s1, s2, ...`
            let (query, candidates) = body.split_once(" | candidates: ").unwrap_or((body, ""));
            let server = candidates.split(',').next().unwrap_or("").trim();
            index += 1;
            tasks.insert(
                format!("T{index}"),
                serde_json::json!({ "query": query.trim(), "server": server }),
            );
        }
        serde_json::json!({ "tasks": tasks, "dependency": [] }).to_string()
    }

    fn execute(&self, prompt: &str) -> Result<String, ProviderError> {
        let actions_taken = prompt.matches("\nAction ").count();
        if actions_taken == 0 {
            let tools = Self::advertised_tools(prompt)?;
            let tool = tools
                .first()
                .ok_or_else(|| ProviderError::Config("server advertises no tools".into()))?;
            let params = derive_default_params(tool);
            let action = serde_json::json!({
                "thought": format!("The task needs data from `{}`; calling it.", tool.name),
                "action": { "type": "tool_call", "tool": tool.name, "params": params }
            });
            return Ok(action.to_string());
        }
        let observation = Self::last_observation(prompt).unwrap_or_else(|| "no result".into());
        let action = serde_json::json!({
            "thought": "The tool result covers the task; answering.",
            "action": { "type": "final", "answer": observation }
        });
        Ok(action.to_string())
    }

    fn advertised_tools(prompt: &str) -> Result<Vec<ToolSchema>, ProviderError> {
        let section = prompt
            .split_once("Available tools:")
            .map(|(_, rest)| rest)
            .ok_or_else(|| ProviderError::Config("prompt lists no tools".into()))?;
        let value = parsing::extract_json_array(section)
            .ok_or_else(|| ProviderError::Config("tool list is not a JSON array".into()))?;
        serde_json::from_value(value)
            .map_err(|e| ProviderError::Config(format!("tool list malformed: {e}")))
    }

    fn last_observation(prompt: &str) -> Option<String> {
        prompt
            .lines()
            .filter_map(|line| {
                let rest = line.strip_prefix("Observation ")?;
                let (_, body) = rest.split_once(": ")?;
                Some(body.to_string())
            })
            .next_back()
    }
}

/// Fill a tool's required params with schema-derived defaults. String
/// patterns are satisfied by probing a small set of plausible literals.
pub fn derive_default_params(tool: &ToolSchema) -> serde_json::Value {
    const PATTERN_CANDIDATES: &[&str] = &["2025-06-10", "auto", "1", "true", "12:00"];
    let mut params = serde_json::Map::new();
    for p in tool.params.iter().filter(|p| p.required) {
        let value = match p.param_type {
            ParamType::String => {
                let text = match &p.pattern {
                    Some(pattern) => regex::Regex::new(pattern)
                        .ok()
                        .and_then(|re| {
                            PATTERN_CANDIDATES
                                .iter()
                                .find(|c| re.is_match(c))
                                .map(|c| c.to_string())
                        })
                        .unwrap_or_else(|| "auto".into()),
                    None => "auto".into(),
                };
                serde_json::Value::String(text)
            }
            ParamType::Integer => serde_json::json!(1),
            ParamType::Number => serde_json::json!(1.0),
            ParamType::Boolean => serde_json::json!(true),
            ParamType::Enum => serde_json::Value::String(
                p.values.first().cloned().unwrap_or_else(|| "auto".into()),
            ),
        };
        params.insert(p.name.clone(), value);
    }
    serde_json::Value::Object(params)
}

// ---------------------------------------------------------------------------
// Hashing embedder
// ---------------------------------------------------------------------------

pub const DEFAULT_EMBED_DIM: usize = 2048;

/// Input window in tokens. Like real encoder models, the embedder reads a
/// bounded prefix; anything past it is dropped. Individual descriptions and
/// query segments fit comfortably, but concatenating a whole augmented
/// document overflows the window and loses the tail.
pub const DEFAULT_EMBED_WINDOW: usize = 64;

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Deterministic signed feature-hashing embedder.
///
/// Features are lowercase word unigrams and adjacent bigrams, recorded by
/// presence — a feature repeating within one text adds no extra weight.
/// Each feature hashes to a bucket with a hash-derived sign, and the result
/// is L2-normalized so dot product equals cosine similarity. Texts sharing
/// vocabulary land close together, which is all retrieval tests need.
pub struct HashingEmbedder {
    dim: usize,
    window: usize,
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        HashingEmbedder {
            dim: DEFAULT_EMBED_DIM,
            window: DEFAULT_EMBED_WINDOW,
        }
    }
}

impl HashingEmbedder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        HashingEmbedder {
            dim,
            window: DEFAULT_EMBED_WINDOW,
        }
    }

    pub fn embed_sync(&self, text: &str) -> Vec<f64> {
        let lowered = text.to_lowercase();
        let tokens: Vec<&str> = lowered
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .take(self.window)
            .collect();
        let mut features = std::collections::BTreeSet::new();
        for t in &tokens {
            features.insert(fnv1a64(t.as_bytes()));
        }
        for pair in tokens.windows(2) {
            features.insert(fnv1a64(format!("{}_{}", pair[0], pair[1]).as_bytes()));
        }
        let mut vector = vec![0.0f64; self.dim];
        for h in features {
            let bucket = ((h >> 1) % self.dim as u64) as usize;
            let sign = if h & 1 == 0 { 1.0 } else { -1.0 };
            vector[bucket] += sign;
        }
        let norm = vector.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut vector {
                *v /= norm;
            }
        }
        vector
    }
}

#[async_trait]
impl EmbeddingProvider for HashingEmbedder {
    async fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        Ok(self.embed_sync(text))
    }

    fn dimension_hint(&self) -> Option<usize> {
        Some(self.dim)
    }
}

// ---------------------------------------------------------------------------
// OpenAI-compatible HTTP providers
// ---------------------------------------------------------------------------

/// Chat-completions client for any OpenAI-compatible endpoint.
pub struct HttpTextGen {
    client: reqwest::Client,
    endpoint: String,
    model: String,
    api_key: Option<String>,
}

impl HttpTextGen {
    pub fn new(endpoint: String, model: String, api_key: Option<String>) -> Self {
        HttpTextGen {
            client: reqwest::Client::new(),
            endpoint: endpoint.trim_end_matches('/').to_string(),
            model,
            api_key,
        }
    }

    /// Build from `TURA_LLM_ENDPOINT` / `TURA_LLM_MODEL` / `TURA_LLM_API_KEY`.
    pub fn from_env() -> Option<Self> {
        let endpoint = std::env::var("TURA_LLM_ENDPOINT").ok()?;
        let model = std::env::var("TURA_LLM_MODEL").unwrap_or_else(|_| "default".into());
        let api_key = std::env::var("TURA_LLM_API_KEY").ok();
        Some(Self::new(endpoint, model, api_key))
    }
}

#[async_trait]
impl TextGenProvider for HttpTextGen {
    async fn generate(&self, request: &GenRequest) -> Result<String, ProviderError> {
        let url = format!("{}/chat/completions", self.endpoint);
        let body = serde_json::json!({
            "model": self.model,
            "temperature": request.temperature,
            "messages": [{ "role": "user", "content": request.prompt }],
        });
        let mut req = self.client.post(&url).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .await
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(ProviderError::Http(format!("{} from {url}", resp.status())));
        }
        let value: serde_json::Value = resp
            .json()
            .await
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let content = value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .filter(|s| !s.is_empty())
            .ok_or(ProviderError::EmptyResponse)?;
        Ok(content)
    }
}

/// Embeddings client for any OpenAI-compatible endpoint.
pub struct HttpEmbedder {
    client: reqwest::Client,
    endpoint: String,
    model: String,
    api_key: Option<String>,
}

impl HttpEmbedder {
    pub fn new(endpoint: String, model: String, api_key: Option<String>) -> Self {
        HttpEmbedder {
            client: reqwest::Client::new(),
            endpoint: endpoint.trim_end_matches('/').to_string(),
            model,
            api_key,
        }
    }

    /// Build from `TURA_EMBED_ENDPOINT` / `TURA_EMBED_MODEL`; the API key
    /// falls back to `TURA_LLM_API_KEY`.
    pub fn from_env() -> Option<Self> {
        let endpoint = std::env::var("TURA_EMBED_ENDPOINT").ok()?;
        let model = std::env::var("TURA_EMBED_MODEL").unwrap_or_else(|_| "default".into());
        let api_key = std::env::var("TURA_EMBED_API_KEY")
            .or_else(|_| std::env::var("TURA_LLM_API_KEY"))
            .ok();
        Some(Self::new(endpoint, model, api_key))
    }

    async fn request(&self, inputs: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        let url = format!("{}/embeddings", self.endpoint);
        let body = serde_json::json!({ "model": self.model, "input": inputs });
        let mut req = self.client.post(&url).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .await
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(ProviderError::Http(format!("{} from {url}", resp.status())));
        }
        let value: serde_json::Value = resp
            .json()
            .await
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let data = value["data"]
            .as_array()
            .ok_or(ProviderError::EmptyResponse)?;
        let mut out = Vec::with_capacity(data.len());
        for item in data {
            let vec = item["embedding"]
                .as_array()
                .ok_or(ProviderError::EmptyResponse)?
                .iter()
                .map(|v| v.as_f64().ok_or(ProviderError::EmptyResponse))
                .collect::<Result<Vec<f64>, _>>()?;
            out.push(vec);
        }
        Ok(out)
    }
}

#[async_trait]
impl EmbeddingProvider for HttpEmbedder {
    async fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        let mut vecs = self.request(&[text.to_string()]).await?;
        vecs.pop().ok_or(ProviderError::EmptyResponse)
    }

    async fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        if texts.is_empty() {
            return Ok(vec![]);
        }
        self.request(texts).await
    }
}

// ---------------------------------------------------------------------------
// Environment resolution
// ---------------------------------------------------------------------------

/// Text provider per environment: remote endpoint when configured, otherwise
/// optional replay backed by the rule-based fallback.
pub fn text_gen_from_env(replay: Option<&std::path::Path>) -> Result<Box<dyn TextGenProvider>, ProviderError> {
    if let Some(http) = HttpTextGen::from_env() {
        return Ok(Box::new(http));
    }
    let mut chain: Vec<Box<dyn TextGenProvider>> = Vec::new();
    if let Some(path) = replay {
        chain.push(Box::new(ScriptedTextGen::from_path(path)?));
    }
    chain.push(Box::new(RuleBasedGen));
    if chain.len() == 1 {
        Ok(chain.pop().expect("one provider"))
    } else {
        Ok(Box::new(FallbackChain::new(chain)))
    }
}

/// Embedding provider per environment: remote endpoint when configured,
/// otherwise the deterministic hashing embedder.
pub fn embedder_from_env() -> Box<dyn EmbeddingProvider> {
    if let Some(http) = HttpEmbedder::from_env() {
        return Box::new(http);
    }
    Box::new(HashingEmbedder::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block_on<F: std::future::Future>(fut: F) -> F::Output {
        tokio::runtime::Builder::new_current_thread()
            .build()
            .unwrap()
            .block_on(fut)
    }

    fn gen(prompt: &str) -> GenRequest {
        GenRequest {
            prompt: prompt.into(),
            temperature: 0.0,
        }
    }

    #[test]
    fn scripted_longest_match_wins_and_sequences() {
        let provider = ScriptedTextGen::from_value(&serde_json::json!({
            "entries": [
                { "match": "plan", "responses": ["generic"] },
                { "match": "plan for beijing", "responses": ["first", "second"] }
            ]
        }))
        .unwrap();
        let req = gen("make a plan for beijing now");
        assert_eq!(block_on(provider.generate(&req)).unwrap(), "first");
        assert_eq!(block_on(provider.generate(&req)).unwrap(), "second");
        // Exhausted: last response repeats.
        assert_eq!(block_on(provider.generate(&req)).unwrap(), "second");
        let err = block_on(provider.generate(&gen("unrelated"))).unwrap_err();
        assert!(matches!(err, ProviderError::NoMatch(_)));
    }

    #[test]
    fn fallback_chain_moves_past_failures() {
        let scripted = ScriptedTextGen::from_value(&serde_json::json!({
            "entries": [{ "match": "never-present", "responses": ["x"] }]
        }))
        .unwrap();
        let chain = FallbackChain::new(vec![Box::new(scripted), Box::new(RuleBasedGen)]);
        let prompt = format!("{}\nQuery: check tides and book ferry\n", prompts::MARK_DECOMPOSE);
        let out = block_on(chain.generate(&gen(&prompt))).unwrap();
        let list = parsing::parse_string_list(&out).unwrap();
        assert_eq!(list, vec!["check tides", "book ferry"]);
    }

    #[test]
    fn rule_based_decompose_handles_single_and_multi() {
        let single = format!("{}\nQuery: weather in beijing\n", prompts::MARK_DECOMPOSE);
        let out = block_on(RuleBasedGen.generate(&gen(&single))).unwrap();
        assert_eq!(parsing::parse_string_list(&out).unwrap(), vec!["weather in beijing"]);

        let multi = format!(
            "{}\nQuery: find a hotel, and also check flights, then reserve dinner\n",
            prompts::MARK_DECOMPOSE
        );
        let out = block_on(RuleBasedGen.generate(&gen(&multi))).unwrap();
        assert_eq!(
            parsing::parse_string_list(&out).unwrap(),
            vec!["find a hotel", "check flights", "reserve dinner"]
        );
    }

    #[test]
    fn rule_based_executor_calls_then_finalizes() {
        let tools = serde_json::json!([{
            "name": "get_weather",
            "description": "weather",
            "params": [
                { "name": "city", "type": "string", "required": true },
                { "name": "date", "type": "string", "required": true, "pattern": "^\\d{4}-\\d{2}-\\d{2}$" },
                { "name": "verbose", "type": "boolean", "required": false }
            ]
        }]);
        let first = format!(
            "{}\nServer: weather\nTask: beijing weather\nAvailable tools:\n{}\nHistory:\nObservation 1: task context\n",
            prompts::MARK_EXECUTE, tools
        );
        let out = block_on(RuleBasedGen.generate(&gen(&first))).unwrap();
        let v = parsing::extract_json_object(&out).unwrap();
        assert_eq!(v["action"]["type"], "tool_call");
        assert_eq!(v["action"]["tool"], "get_weather");
        assert_eq!(v["action"]["params"]["city"], "auto");
        assert_eq!(v["action"]["params"]["date"], "2025-06-10");
        assert!(v["action"]["params"].get("verbose").is_none());

        let second = format!(
            "{}\nAction 1: called\nObservation 2: Sunny, 22-30C\n",
            first
        );
        let out = block_on(RuleBasedGen.generate(&gen(&second))).unwrap();
        let v = parsing::extract_json_object(&out).unwrap();
        assert_eq!(v["action"]["type"], "final");
        assert_eq!(v["action"]["answer"], "Sunny, 22-30C");
    }

    #[test]
    fn hashing_embedder_is_normalized_and_deterministic() {
        let embedder = HashingEmbedder::default();
        let a = embedder.embed_sync("beijing weather forecast");
        let b = embedder.embed_sync("beijing weather forecast");
        assert_eq!(a, b);
        assert_eq!(a.len(), DEFAULT_EMBED_DIM);
        let norm: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-9);
        let c = embedder.embed_sync("stock prices tokyo exchange");
        assert_ne!(a, c);
        let sim: f64 = a.iter().zip(&c).map(|(x, y)| x * y).sum();
        let self_sim: f64 = a.iter().zip(&a).map(|(x, y)| x * y).sum();
        assert!(self_sim > sim, "self similarity must dominate");
    }

    #[test]
    fn hashing_embedder_empty_text_is_zero() {
        let v = HashingEmbedder::default().embed_sync("   ");
        assert!(v.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn shared_vocabulary_scores_higher_than_disjoint() {
        let e = HashingEmbedder::default();
        let query = e.embed_sync("what is the weather in beijing tomorrow");
        let related = e.embed_sync("beijing weather conditions and forecast");
        let unrelated = e.embed_sync("quarterly corporate tax filing deadlines");
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        assert!(dot(&query, &related) > dot(&query, &unrelated));
    }
}
