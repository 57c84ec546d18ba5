//! Query decomposition: split a possibly multi-intent query into
//! self-contained sub-queries.
//!
//! Decomposition is total by design: whatever the provider returns, the
//! caller always gets at least one sub-query. A provider failure or an
//! unparseable response degrades to the identity decomposition (the whole
//! query as a single sub-query), never to an error — retrieval quality
//! suffers, the pipeline does not stop.

use serde::{Deserialize, Serialize};

use crate::parsing;
use crate::prompts;
use crate::provider::{GenRequest, TextGenProvider};

/// Upper bound on sub-queries kept from one decomposition. Real queries do
/// not carry more distinct intents; anything beyond this is model noise.
pub const MAX_SUB_QUERIES: usize = 8;

/// Sampling temperature for decomposition: low, the task is extraction.
pub const DECOMPOSE_TEMPERATURE: f64 = 0.2;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubQuerySet {
    pub original: String,
    pub sub_queries: Vec<String>,
}

impl SubQuerySet {
    /// The identity decomposition.
    pub fn single(query: &str) -> Self {
        SubQuerySet {
            original: query.to_string(),
            sub_queries: vec![query.to_string()],
        }
    }

    pub fn is_multi_intent(&self) -> bool {
        self.sub_queries.len() > 1
    }
}

/// Decompose `query` via the provider; one retry on unparseable output,
/// then fall back to the identity decomposition.
pub async fn decompose(query: &str, provider: &dyn TextGenProvider) -> SubQuerySet {
    let request = GenRequest {
        prompt: prompts::decompose_prompt(query),
        temperature: DECOMPOSE_TEMPERATURE,
    };
    for _attempt in 0..2 {
        let Ok(raw) = provider.generate(&request).await else {
            continue;
        };
        if let Some(list) = parsing::parse_string_list(&raw) {
            let cleaned = sanitize(list);
            if !cleaned.is_empty() {
                return SubQuerySet {
                    original: query.to_string(),
                    sub_queries: cleaned,
                };
            }
        }
    }
    SubQuerySet::single(query)
}

/// Trim, drop empties, dedupe exact repeats, cap length.
fn sanitize(list: Vec<String>) -> Vec<String> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for item in list {
        let trimmed = item.trim().to_string();
        if trimmed.is_empty() || !seen.insert(trimmed.clone()) {
            continue;
        }
        out.push(trimmed);
        if out.len() == MAX_SUB_QUERIES {
            break;
        }
    }
    out
}
