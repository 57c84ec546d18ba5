//! Tool-server registry: descriptors, tool schemas, and document augmentation.
//!
//! Each server is described once in TOML and loaded into a [`Registry`].
//! Retrieval does not index the raw description alone: it indexes an
//! [`AugmentedDocument`] — the description plus a set of synthetic queries
//! phrased the way users actually ask, which closes the lexical gap between
//! formal capability prose and vernacular requests.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::parsing;
use crate::prompts;
use crate::provider::{GenRequest, ProviderError, TextGenProvider};

/// Default number of synthetic queries generated per server.
pub const DEFAULT_SYNTH_QUERIES: usize = 20;
/// Default sampling temperature for synthetic-query generation; deliberately
/// above 1.0 so the paraphrases spread across phrasings instead of clustering.
pub const DEFAULT_SYNTH_TEMPERATURE: f64 = 1.2;

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
    #[error("duplicate server id `{0}`")]
    DuplicateServer(String),
    #[error("unknown server id `{0}`")]
    UnknownServer(String),
    #[error("invalid descriptor `{server}`: {message}")]
    InvalidDescriptor { server: String, message: String },
    #[error("synthetic query generation failed for `{server}`: {source}")]
    Augmentation {
        server: String,
        #[source]
        source: ProviderError,
    },
}

/// Parameter types supported by tool schemas.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamType {
    String,
    Integer,
    Number,
    Boolean,
    Enum,
}

/// One named parameter of a tool.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub param_type: ParamType,
    #[serde(default)]
    pub required: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Allowed values; only meaningful for `ParamType::Enum`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<String>,
    /// Optional regex a string value must fully match (e.g. an ISO date).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
}

/// Schema of a single callable tool on a server.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ToolSchema {
    pub name: String,
    pub description: String,
    #[serde(default)]
    pub params: Vec<ParamSpec>,
}

/// A registered tool server: identity, capability prose, and tool schemas.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ServerDescriptor {
    pub server_id: String,
    pub name: String,
    pub description: String,
    #[serde(default)]
    pub tools: Vec<ToolSchema>,
    /// Synthetic queries attached by `augment`; empty until then.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub synthetic_queries: Vec<String>,
}

impl ServerDescriptor {
    /// Validate internal consistency: non-empty ids/descriptions, unique tool
    /// names, enum params carry values, patterns compile.
    pub fn validate(&self) -> Result<(), RegistryError> {
        let fail = |message: String| RegistryError::InvalidDescriptor {
            server: self.server_id.clone(),
            message,
        };
        if self.server_id.trim().is_empty() {
            return Err(fail("empty server_id".into()));
        }
        if self.description.trim().is_empty() {
            return Err(fail("empty description".into()));
        }
        let mut tool_names = BTreeSet::new();
        for tool in &self.tools {
            if tool.name.trim().is_empty() {
                return Err(fail("tool with empty name".into()));
            }
            if !tool_names.insert(tool.name.clone()) {
                return Err(fail(format!("duplicate tool name `{}`", tool.name)));
            }
            let mut param_names = BTreeSet::new();
            for param in &tool.params {
                if !param_names.insert(param.name.clone()) {
                    return Err(fail(format!(
                        "duplicate param `{}` on tool `{}`",
                        param.name, tool.name
                    )));
                }
                if param.param_type == ParamType::Enum && param.values.is_empty() {
                    return Err(fail(format!(
                        "enum param `{}` on tool `{}` has no values",
                        param.name, tool.name
                    )));
                }
                if let Some(pattern) = &param.pattern {
                    regex::Regex::new(pattern).map_err(|e| {
                        fail(format!(
                            "param `{}` on tool `{}` has invalid pattern: {e}",
                            param.name, tool.name
                        ))
                    })?;
                }
            }
        }
        Ok(())
    }

    /// Stable content digest over id, description, and tool schemas.
    /// Synthetic queries are excluded: augmentation must not change identity.
    pub fn digest(&self) -> String {
        let mut hash: u64 = 0xcbf29ce484222325;
        let mut feed = |s: &str| {
            for b in s.bytes() {
                hash ^= b as u64;
                hash = hash.wrapping_mul(0x100000001b3);
            }
            hash ^= 0x1f;
            hash = hash.wrapping_mul(0x100000001b3);
        };
        feed(&self.server_id);
        feed(&self.description);
        for tool in &self.tools {
            feed(&tool.name);
            feed(&tool.description);
            for p in &tool.params {
                feed(&p.name);
                feed(&format!("{:?}", p.param_type));
                feed(&format!("{}", p.required));
                for v in &p.values {
                    feed(v);
                }
                if let Some(pat) = &p.pattern {
                    feed(pat);
                }
            }
        }
        format!("{hash:016x}")
    }
}

/// One problem found while checking a parameter object against a schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamIssue {
    NotAnObject,
    MissingRequired { param: String },
    UnknownParam { param: String },
    WrongType { param: String, expected: String },
    BadEnumValue { param: String, got: String },
    PatternMismatch { param: String, pattern: String },
}

impl std::fmt::Display for ParamIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParamIssue::NotAnObject => write!(f, "params must be a JSON object"),
            ParamIssue::MissingRequired { param } => {
                write!(f, "missing required param `{param}`")
            }
            ParamIssue::UnknownParam { param } => write!(f, "unknown param `{param}`"),
            ParamIssue::WrongType { param, expected } => {
                write!(f, "param `{param}` must be {expected}")
            }
            ParamIssue::BadEnumValue { param, got } => {
                write!(f, "param `{param}` has disallowed value `{got}`")
            }
            ParamIssue::PatternMismatch { param, pattern } => {
                write!(f, "param `{param}` does not match `{pattern}`")
            }
        }
    }
}

/// Check a parameter object against a tool schema, reporting every issue.
pub fn check_params(schema: &ToolSchema, params: &serde_json::Value) -> Vec<ParamIssue> {
    let Some(map) = params.as_object() else {
        return vec![ParamIssue::NotAnObject];
    };
    let mut issues = Vec::new();
    for key in map.keys() {
        if !schema.params.iter().any(|p| &p.name == key) {
            issues.push(ParamIssue::UnknownParam { param: key.clone() });
        }
    }
    for spec in &schema.params {
        let Some(value) = map.get(&spec.name) else {
            if spec.required {
                issues.push(ParamIssue::MissingRequired {
                    param: spec.name.clone(),
                });
            }
            continue;
        };
        check_value(spec, value, &mut issues);
    }
    issues
}

fn check_value(spec: &ParamSpec, value: &serde_json::Value, issues: &mut Vec<ParamIssue>) {
    let wrong = |expected: &str| ParamIssue::WrongType {
        param: spec.name.clone(),
        expected: expected.into(),
    };
    match spec.param_type {
        ParamType::String => {
            let Some(text) = value.as_str() else {
                issues.push(wrong("a string"));
                return;
            };
            if let Some(pattern) = &spec.pattern {
                let matches = regex::Regex::new(pattern)
                    .map(|re| re.is_match(text))
                    .unwrap_or(false);
                if !matches {
                    issues.push(ParamIssue::PatternMismatch {
                        param: spec.name.clone(),
                        pattern: pattern.clone(),
                    });
                }
            }
        }
        ParamType::Integer => {
            if value.as_i64().is_none() && value.as_u64().is_none() {
                issues.push(wrong("an integer"));
            }
        }
        ParamType::Number => {
            if !value.is_number() {
                issues.push(wrong("a number"));
            }
        }
        ParamType::Boolean => {
            if !value.is_boolean() {
                issues.push(wrong("a boolean"));
            }
        }
        ParamType::Enum => {
            let Some(text) = value.as_str() else {
                issues.push(wrong("an enum string"));
                return;
            };
            if !spec.values.iter().any(|v| v == text) {
                issues.push(ParamIssue::BadEnumValue {
                    param: spec.name.clone(),
                    got: text.into(),
                });
            }
        }
    }
}

/// Segment role inside an augmented document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentRole {
    Doc,
    SyntheticQuery,
}

/// One indexable text segment of a server's augmented document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Segment {
    pub role: SegmentRole,
    pub text: String,
}

/// The retrieval unit for one server: its description plus synthetic queries.
///
/// Multi-vector indexing embeds each segment separately; single-vector
/// indexing embeds the concatenation (description first, newline-joined).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AugmentedDocument {
    pub server_id: String,
    pub segments: Vec<Segment>,
}

impl AugmentedDocument {
    pub fn from_descriptor(d: &ServerDescriptor) -> Self {
        let mut segments = vec![Segment {
            role: SegmentRole::Doc,
            text: d.description.clone(),
        }];
        segments.extend(d.synthetic_queries.iter().map(|q| Segment {
            role: SegmentRole::SyntheticQuery,
            text: q.clone(),
        }));
        AugmentedDocument {
            server_id: d.server_id.clone(),
            segments,
        }
    }

    /// Concatenated form used by the single-vector ablation: description
    /// first, then each synthetic query, joined by single newlines.
    pub fn concatenated(&self) -> String {
        self.segments
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// TOML on-disk shape: one or more `[[server]]` tables per file.
#[derive(Debug, Serialize, Deserialize)]
struct RegistryFile {
    #[serde(default, rename = "server")]
    servers: Vec<ServerDescriptor>,
}

/// The full set of registered servers, keyed by id for deterministic order.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Registry {
    servers: BTreeMap<String, ServerDescriptor>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, descriptor: ServerDescriptor) -> Result<(), RegistryError> {
        descriptor.validate()?;
        if self.servers.contains_key(&descriptor.server_id) {
            return Err(RegistryError::DuplicateServer(descriptor.server_id));
        }
        self.servers.insert(descriptor.server_id.clone(), descriptor);
        Ok(())
    }

    pub fn get(&self, server_id: &str) -> Option<&ServerDescriptor> {
        self.servers.get(server_id)
    }

    pub fn contains(&self, server_id: &str) -> bool {
        self.servers.contains_key(server_id)
    }

    pub fn len(&self) -> usize {
        self.servers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.servers.is_empty()
    }

    /// Servers in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = &ServerDescriptor> {
        self.servers.values()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut ServerDescriptor> {
        self.servers.values_mut()
    }

    /// Load from a TOML file, or from every `*.toml` file in a directory.
    pub fn load(path: &Path) -> Result<Self, RegistryError> {
        let mut registry = Registry::new();
        if path.is_dir() {
            let mut files: Vec<_> = std::fs::read_dir(path)
                .map_err(|e| RegistryError::Io {
                    path: path.display().to_string(),
                    source: e,
                })?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|ext| ext == "toml"))
                .collect();
            files.sort();
            for file in files {
                registry.load_file(&file)?;
            }
        } else {
            registry.load_file(path)?;
        }
        Ok(registry)
    }

    fn load_file(&mut self, path: &Path) -> Result<(), RegistryError> {
        let text = std::fs::read_to_string(path).map_err(|e| RegistryError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let file: RegistryFile = toml::from_str(&text).map_err(|e| RegistryError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        for descriptor in file.servers {
            self.insert(descriptor)?;
        }
        Ok(())
    }

    /// Serialize the whole registry as one TOML document.
    pub fn to_toml(&self) -> String {
        let file = RegistryFile {
            servers: self.servers.values().cloned().collect(),
        };
        toml::to_string_pretty(&file).expect("registry serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), RegistryError> {
        std::fs::write(path, self.to_toml()).map_err(|e| RegistryError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    /// Validate every descriptor; returns the ids checked.
    pub fn validate_all(&self) -> Result<Vec<String>, RegistryError> {
        for d in self.servers.values() {
            d.validate()?;
        }
        Ok(self.servers.keys().cloned().collect())
    }

    /// Augmented documents for all servers, id order.
    pub fn augmented_documents(&self) -> Vec<AugmentedDocument> {
        self.servers
            .values()
            .map(AugmentedDocument::from_descriptor)
            .collect()
    }
}

/// Generate `n_queries` synthetic queries for one server and attach them.
///
/// The provider is asked once; if its output cannot be parsed as a JSON
/// string list the request is retried once, then quoted-string recovery is
/// applied before giving up. Results are deduplicated (exact match after
/// trimming) and truncated to `n_queries`.
pub async fn augment_server(
    descriptor: &mut ServerDescriptor,
    provider: &dyn TextGenProvider,
    n_queries: usize,
    temperature: f64,
) -> Result<usize, RegistryError> {
    if n_queries == 0 {
        descriptor.synthetic_queries.clear();
        return Ok(0);
    }
    let prompt = prompts::synthetic_query_prompt(descriptor, n_queries);
    let request = GenRequest {
        prompt,
        temperature,
    };
    let mut queries: Option<Vec<String>> = None;
    for _attempt in 0..2 {
        let raw = provider
            .generate(&request)
            .await
            .map_err(|e| RegistryError::Augmentation {
                server: descriptor.server_id.clone(),
                source: e,
            })?;
        if let Some(list) = parsing::parse_string_list(&raw) {
            if !list.is_empty() {
                queries = Some(list);
                break;
            }
        }
        // Last resort on the final attempt: salvage quoted spans.
        let salvaged = parsing::extract_quoted_strings(&raw);
        if !salvaged.is_empty() {
            queries = Some(salvaged);
            break;
        }
    }
    let list = queries.unwrap_or_default();
    let mut seen = BTreeSet::new();
    let mut kept = Vec::new();
    for q in list {
        let trimmed = q.trim().to_string();
        if !trimmed.is_empty() && seen.insert(trimmed.clone()) {
            kept.push(trimmed);
            if kept.len() == n_queries {
                break;
            }
        }
    }
    let count = kept.len();
    descriptor.synthetic_queries = kept;
    Ok(count)
}
