//! Intent-aware retrieval: per-sub-query search, pool union, max-score
//! aggregation, and final top-K server selection.
//!
//! Each sub-query retrieves its own candidate list; the lists are unioned
//! into a pool that keeps provenance (which sub-query produced which score),
//! a server's aggregate score is its maximum over the pool, and the best K
//! servers survive. Max aggregation means one strong intent match cannot be
//! washed out by irrelevance to the other intents.

use serde::{Deserialize, Serialize};

use crate::decompose::SubQuerySet;
use crate::index::{sort_scores, ServerScore, VectorIndex};
use crate::provider::{EmbeddingProvider, ProviderError};

/// Final number of servers handed to the planner.
pub const DEFAULT_TOP_K: usize = 5;
/// Candidates each sub-query contributes to the pool.
pub const DEFAULT_TOP_N_PER_SUBQUERY: usize = 5;

#[derive(Debug, Clone, Copy)]
pub struct RetrieveParams {
    pub top_n_per_subquery: usize,
    pub top_k: usize,
}

impl Default for RetrieveParams {
    fn default() -> Self {
        RetrieveParams {
            top_n_per_subquery: DEFAULT_TOP_N_PER_SUBQUERY,
            top_k: DEFAULT_TOP_K,
        }
    }
}

/// One pooled candidate: a server scored against one particular sub-query.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoolEntry {
    pub server_id: String,
    pub score: f64,
    pub sub_query_index: usize,
}

/// The full retrieval trace for one query.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub sub_queries: Vec<String>,
    /// Ranked candidates per sub-query, parallel to `sub_queries`.
    pub per_sub_query: Vec<Vec<ServerScore>>,
    /// Union of all per-sub-query candidates, with provenance.
    pub pool: Vec<PoolEntry>,
    /// Aggregated top-K selection.
    pub selected: Vec<ServerScore>,
}

impl RetrievalResult {
    pub fn selected_ids(&self) -> Vec<String> {
        self.selected.iter().map(|s| s.server_id.clone()).collect()
    }

    /// Best servers for one sub-query, ranked, from the stored trace.
    pub fn candidates_for(&self, sub_query_index: usize) -> Vec<String> {
        self.per_sub_query
            .get(sub_query_index)
            .map(|list| list.iter().map(|s| s.server_id.clone()).collect())
            .unwrap_or_default()
    }
}

/// Aggregate a pool by max score per server, ranked.
pub fn aggregate_max(pool: &[PoolEntry]) -> Vec<ServerScore> {
    let mut best: std::collections::BTreeMap<&str, f64> = std::collections::BTreeMap::new();
    for entry in pool {
        let slot = best.entry(&entry.server_id).or_insert(f64::NEG_INFINITY);
        if entry.score > *slot {
            *slot = entry.score;
        }
    }
    let mut scores: Vec<ServerScore> = best
        .into_iter()
        .map(|(server_id, score)| ServerScore {
            server_id: server_id.to_string(),
            score,
        })
        .collect();
    sort_scores(&mut scores);
    scores
}

/// Retrieve servers for an already-decomposed query.
pub async fn retrieve(
    sub_queries: &SubQuerySet,
    index: &VectorIndex,
    embedder: &dyn EmbeddingProvider,
    params: RetrieveParams,
) -> Result<RetrievalResult, ProviderError> {
    let query_vectors = embedder.embed_batch(&sub_queries.sub_queries).await?;
    let mut per_sub_query = Vec::with_capacity(query_vectors.len());
    let mut pool = Vec::new();
    for (i, vector) in query_vectors.iter().enumerate() {
        let ranked = index.search(vector, params.top_n_per_subquery);
        for s in &ranked {
            pool.push(PoolEntry {
                server_id: s.server_id.clone(),
                score: s.score,
                sub_query_index: i,
            });
        }
        per_sub_query.push(ranked);
    }
    let mut selected = aggregate_max(&pool);
    selected.truncate(params.top_k);
    Ok(RetrievalResult {
        sub_queries: sub_queries.sub_queries.clone(),
        per_sub_query,
        pool,
        selected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::{EmbeddingVector, IndexMode, VectorSet};
    use crate::provider::{HashingEmbedder, DEFAULT_EMBED_DIM};
    use proptest::prelude::*;

    fn block_on<F: std::future::Future>(fut: F) -> F::Output {
        tokio::runtime::Builder::new_current_thread()
            .build()
            .unwrap()
            .block_on(fut)
    }

    fn planar(dim: usize, x: f64, y: f64) -> EmbeddingVector {
        let mut v = vec![0.0; dim];
        v[0] = x;
        v[1] = y;
        v
    }

    fn toy_index() -> VectorIndex {
        // Along e1: a=0.95, b=0.60, c=0.10. Along e2: a=..., others inverted.
        let dim = 4;
        VectorIndex::from_vector_sets(
            IndexMode::MultiVector,
            dim,
            vec![
                VectorSet {
                    server_id: "a".into(),
                    vectors: vec![planar(dim, 0.95, (1.0f64 - 0.95 * 0.95).sqrt())],
                },
                VectorSet {
                    server_id: "b".into(),
                    vectors: vec![planar(dim, 0.60, 0.80)],
                },
                VectorSet {
                    server_id: "c".into(),
                    vectors: vec![planar(dim, 0.10, (1.0f64 - 0.01).sqrt())],
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn aggregate_takes_per_server_max() {
        let pool = vec![
            PoolEntry { server_id: "a".into(), score: 0.4, sub_query_index: 0 },
            PoolEntry { server_id: "b".into(), score: 0.9, sub_query_index: 0 },
            PoolEntry { server_id: "a".into(), score: 0.7, sub_query_index: 1 },
            PoolEntry { server_id: "b".into(), score: 0.1, sub_query_index: 1 },
        ];
        let agg = aggregate_max(&pool);
        assert_eq!(agg.len(), 2);
        assert_eq!(agg[0].server_id, "b");
        assert!((agg[0].score - 0.9).abs() < 1e-12);
        assert_eq!(agg[1].server_id, "a");
        assert!((agg[1].score - 0.7).abs() < 1e-12);
    }

    #[test]
    fn single_sub_query_selection_matches_plain_search() {
        struct PlanarEmbedder;
        #[async_trait::async_trait]
        impl EmbeddingProvider for PlanarEmbedder {
            async fn embed(&self, _text: &str) -> Result<Vec<f64>, ProviderError> {
                Ok(planar(4, 1.0, 0.0))
            }
        }
        let index = toy_index();
        let set = SubQuerySet::single("anything");
        let result = block_on(retrieve(&set, &index, &PlanarEmbedder, RetrieveParams::default())).unwrap();
        let direct = index.search(&planar(4, 1.0, 0.0), DEFAULT_TOP_K);
        assert_eq!(result.selected.len(), direct.len());
        for (got, want) in result.selected.iter().zip(&direct) {
            assert_eq!(got.server_id, want.server_id);
            assert!((got.score - want.score).abs() < 1e-12);
        }
    }

    #[test]
    fn multi_intent_union_recovers_both_targets() {
        // Sub-query 0 points along e1 (best: a), sub-query 1 along e2 (best: c).
        struct AxisEmbedder;
        #[async_trait::async_trait]
        impl EmbeddingProvider for AxisEmbedder {
            async fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
                Ok(if text.contains("first") {
                    planar(4, 1.0, 0.0)
                } else {
                    planar(4, 0.0, 1.0)
                })
            }
        }
        let set = SubQuerySet {
            original: "both".into(),
            sub_queries: vec!["first intent".into(), "second intent".into()],
        };
        let params = RetrieveParams { top_n_per_subquery: 1, top_k: 2 };
        let result = block_on(retrieve(&set, &toy_index(), &AxisEmbedder, params)).unwrap();
        let ids = result.selected_ids();
        assert!(ids.contains(&"a".to_string()), "e1 target retrieved");
        assert!(ids.contains(&"c".to_string()), "e2 target retrieved");
        assert_eq!(result.pool.len(), 2);
        assert_eq!(result.per_sub_query[0][0].server_id, "a");
        assert_eq!(result.per_sub_query[1][0].server_id, "c");
    }

    #[test]
    fn end_to_end_with_hashing_embedder() {
        let embedder = HashingEmbedder::default();
        let docs = vec![
            ("weather", "beijing weather forecast temperature rain conditions"),
            ("hotels", "hotel room booking price availability reservation"),
            ("stocks", "stock market share price exchange ticker"),
        ];
        let sets: Vec<VectorSet> = docs
            .iter()
            .map(|(id, text)| VectorSet {
                server_id: (*id).into(),
                vectors: vec![embedder.embed_sync(text)],
            })
            .collect();
        let index =
            VectorIndex::from_vector_sets(IndexMode::MultiVector, DEFAULT_EMBED_DIM, sets)
                .unwrap();
        let set = SubQuerySet {
            original: "weather in beijing and hotel price".into(),
            sub_queries: vec![
                "weather forecast beijing".into(),
                "hotel room price".into(),
            ],
        };
        let result = block_on(retrieve(&set, &index, &embedder, RetrieveParams { top_n_per_subquery: 1, top_k: 2 })).unwrap();
        let ids = result.selected_ids();
        assert!(ids.contains(&"weather".to_string()));
        assert!(ids.contains(&"hotels".to_string()));
    }

    proptest! {
        /// Aggregation equals an independently computed per-server max, and
        /// ranking is total: descending score with id tie-break.
        #[test]
        fn aggregation_matches_oracle(
            raw in proptest::collection::vec((0u8..6, 0.0f64..1.0, 0usize..4), 1..40)
        ) {
            let pool: Vec<PoolEntry> = raw
                .iter()
                .map(|(id, score, sq)| PoolEntry {
                    server_id: format!("s{id}"),
                    score: *score,
                    sub_query_index: *sq,
                })
                .collect();
            let agg = aggregate_max(&pool);

            // Oracle: filter-and-fold per distinct server.
            let mut ids: Vec<String> = pool.iter().map(|e| e.server_id.clone()).collect();
            ids.sort();
            ids.dedup();
            prop_assert_eq!(agg.len(), ids.len());
            for id in &ids {
                let expected = pool
                    .iter()
                    .filter(|e| &e.server_id == id)
                    .map(|e| e.score)
                    .fold(f64::NEG_INFINITY, f64::max);
                let got = agg.iter().find(|s| &s.server_id == id).unwrap().score;
                prop_assert!((got - expected).abs() < 1e-12);
            }
            for pair in agg.windows(2) {
                prop_assert!(
                    pair[0].score > pair[1].score
                        || (pair[0].score == pair[1].score
                            && pair[0].server_id < pair[1].server_id)
                );
            }
        }

        /// Pool order never affects the aggregate.
        #[test]
        fn aggregation_is_permutation_invariant(
            raw in proptest::collection::vec((0u8..6, 0.0f64..1.0), 1..30),
            rotation in 0usize..30,
        ) {
            let pool: Vec<PoolEntry> = raw
                .iter()
                .enumerate()
                .map(|(i, (id, score))| PoolEntry {
                    server_id: format!("s{id}"),
                    score: *score,
                    sub_query_index: i % 3,
                })
                .collect();
            let mut rotated = pool.clone();
            rotated.rotate_left(rotation % pool.len());
            let a = aggregate_max(&pool);
            let b = aggregate_max(&rotated);
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                prop_assert_eq!(&x.server_id, &y.server_id);
                prop_assert!((x.score - y.score).abs() < 1e-12);
            }
        }
    }
}
