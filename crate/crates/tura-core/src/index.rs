//! Dense vector index over augmented server documents.
//!
//! Each server is represented by a set of vectors. In multi-vector mode
//! every document segment (description, each synthetic query) is embedded
//! separately and a server's score against a query is the maximum cosine
//! over its set — late interaction at the document level. Single-vector
//! mode embeds the concatenated document instead and exists as an ablation;
//! both modes share one scoring path because a singleton set's max is just
//! its only cosine.
//!
//! Search is exact (full scan). Ordering is total: score descending, then
//! server id ascending, so results are reproducible across runs.

use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::provider::{EmbeddingProvider, ProviderError};
use crate::registry::AugmentedDocument;

#[derive(Debug, thiserror::Error)]
pub enum IndexError {
    #[error("vector dimension mismatch: expected {expected}, got {got} for `{server}`")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        server: String,
    },
    #[error("duplicate server id `{0}` in index")]
    DuplicateServer(String),
    #[error("server `{0}` has no vectors")]
    EmptySet(String),
    #[error("index is empty")]
    Empty,
    #[error("embedding failed: {0}")]
    Embedding(#[from] ProviderError),
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },
}

pub type EmbeddingVector = Vec<f64>;

/// All vectors representing one server.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VectorSet {
    pub server_id: String,
    pub vectors: Vec<EmbeddingVector>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexMode {
    MultiVector,
    SingleVector,
}

/// A server and its similarity to some query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerScore {
    pub server_id: String,
    pub score: f64,
}

/// Cosine similarity; zero when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len(), "cosine over mismatched dimensions");
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Max-cosine between a query and a vector set.
pub fn max_sim(query: &[f64], set: &[EmbeddingVector]) -> f64 {
    set.iter()
        .map(|v| cosine(query, v))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Sort scores descending; equal scores order by server id ascending.
pub fn sort_scores(scores: &mut [ServerScore]) {
    scores.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .expect("scores are finite")
            .then_with(|| a.server_id.cmp(&b.server_id))
    });
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VectorIndex {
    mode: IndexMode,
    dimension: usize,
    sets: Vec<VectorSet>,
}

impl VectorIndex {
    /// Embed augmented documents into an index.
    ///
    /// Multi-vector: one vector per segment. Single-vector: one vector for
    /// the whole concatenated document.
    pub async fn build(
        mode: IndexMode,
        documents: &[AugmentedDocument],
        embedder: &dyn EmbeddingProvider,
    ) -> Result<Self, IndexError> {
        let mut sets = Vec::with_capacity(documents.len());
        for doc in documents {
            let texts: Vec<String> = match mode {
                IndexMode::MultiVector => doc.segments.iter().map(|s| s.text.clone()).collect(),
                IndexMode::SingleVector => vec![doc.concatenated()],
            };
            let vectors = embedder.embed_batch(&texts).await?;
            sets.push(VectorSet {
                server_id: doc.server_id.clone(),
                vectors,
            });
        }
        let dimension = sets
            .first()
            .and_then(|s| s.vectors.first())
            .map(|v| v.len())
            .ok_or(IndexError::Empty)?;
        Self::from_vector_sets(mode, dimension, sets)
    }

    /// Assemble an index from precomputed vectors. Validates uniqueness,
    /// non-empty sets, and consistent dimensions; sorts by server id.
    pub fn from_vector_sets(
        mode: IndexMode,
        dimension: usize,
        mut sets: Vec<VectorSet>,
    ) -> Result<Self, IndexError> {
        if sets.is_empty() {
            return Err(IndexError::Empty);
        }
        let mut seen = BTreeSet::new();
        for set in &sets {
            if !seen.insert(set.server_id.clone()) {
                return Err(IndexError::DuplicateServer(set.server_id.clone()));
            }
            if set.vectors.is_empty() {
                return Err(IndexError::EmptySet(set.server_id.clone()));
            }
            for v in &set.vectors {
                if v.len() != dimension {
                    return Err(IndexError::DimensionMismatch {
                        expected: dimension,
                        got: v.len(),
                        server: set.server_id.clone(),
                    });
                }
            }
        }
        sets.sort_by(|a, b| a.server_id.cmp(&b.server_id));
        Ok(VectorIndex {
            mode,
            dimension,
            sets,
        })
    }

    pub fn mode(&self) -> IndexMode {
        self.mode
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn server_ids(&self) -> Vec<String> {
        self.sets.iter().map(|s| s.server_id.clone()).collect()
    }

    /// Total stored vectors across all servers.
    pub fn vector_count(&self) -> usize {
        self.sets.iter().map(|s| s.vectors.len()).sum()
    }

    /// Score every server against the query, best first.
    pub fn score_all(&self, query: &[f64]) -> Vec<ServerScore> {
        let mut scores: Vec<ServerScore> = self
            .sets
            .par_iter()
            .map(|set| ServerScore {
                server_id: set.server_id.clone(),
                score: max_sim(query, &set.vectors),
            })
            .collect();
        sort_scores(&mut scores);
        scores
    }

    /// Top-k servers for the query.
    pub fn search(&self, query: &[f64], k: usize) -> Vec<ServerScore> {
        let mut scores = self.score_all(query);
        scores.truncate(k);
        scores
    }

    pub fn save(&self, path: &Path) -> Result<(), IndexError> {
        let json = serde_json::to_string(self).expect("index serializes");
        std::fs::write(path, json).map_err(|e| IndexError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self, IndexError> {
        let text = std::fs::read_to_string(path).map_err(|e| IndexError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let index: VectorIndex = serde_json::from_str(&text).map_err(|e| IndexError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        // Re-validate: files may be hand-edited.
        Self::from_vector_sets(index.mode, index.dimension, index.sets)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Unit vector with given components along the first two axes.
    fn planar(dim: usize, x: f64, y: f64) -> EmbeddingVector {
        let mut v = vec![0.0; dim];
        v[0] = x;
        v[1] = y;
        v
    }

    fn set(id: &str, vectors: Vec<EmbeddingVector>) -> VectorSet {
        VectorSet {
            server_id: id.into(),
            vectors,
        }
    }

    #[test]
    fn max_sim_picks_best_segment_with_exact_cosines() {
        // Query along e1; segment cosines are then exactly their x components.
        let dim = 8;
        let query = planar(dim, 1.0, 0.0);
        let a = vec![
            planar(dim, 0.2, (1.0f64 - 0.04).sqrt()),
            planar(dim, 0.9, (1.0f64 - 0.81).sqrt()),
        ];
        let b = vec![planar(dim, 0.5, (1.0f64 - 0.25).sqrt())];
        assert!((max_sim(&query, &a) - 0.9).abs() < 1e-9);
        assert!((max_sim(&query, &b) - 0.5).abs() < 1e-9);

        let index = VectorIndex::from_vector_sets(
            IndexMode::MultiVector,
            dim,
            vec![set("a", a), set("b", b)],
        )
        .unwrap();
        let top = index.search(&query, 2);
        assert_eq!(top[0].server_id, "a");
        assert!((top[0].score - 0.9).abs() < 1e-9);
        assert_eq!(top[1].server_id, "b");
        assert!((top[1].score - 0.5).abs() < 1e-9);
    }

    #[test]
    fn ties_break_by_server_id_ascending() {
        let dim = 4;
        let v = planar(dim, 1.0, 0.0);
        let index = VectorIndex::from_vector_sets(
            IndexMode::MultiVector,
            dim,
            vec![
                set("zeta", vec![v.clone()]),
                set("alpha", vec![v.clone()]),
                set("mid", vec![v.clone()]),
            ],
        )
        .unwrap();
        let ids: Vec<String> = index
            .search(&v, 3)
            .into_iter()
            .map(|s| s.server_id)
            .collect();
        assert_eq!(ids, vec!["alpha", "mid", "zeta"]);
    }

    #[test]
    fn validation_rejects_bad_sets() {
        let dim = 4;
        let v = planar(dim, 1.0, 0.0);
        let dup = VectorIndex::from_vector_sets(
            IndexMode::MultiVector,
            dim,
            vec![set("a", vec![v.clone()]), set("a", vec![v.clone()])],
        );
        assert!(matches!(dup, Err(IndexError::DuplicateServer(_))));

        let empty = VectorIndex::from_vector_sets(IndexMode::MultiVector, dim, vec![set("a", vec![])]);
        assert!(matches!(empty, Err(IndexError::EmptySet(_))));

        let mismatch = VectorIndex::from_vector_sets(
            IndexMode::MultiVector,
            dim,
            vec![set("a", vec![v]), set("b", vec![vec![0.0; 3]])],
        );
        assert!(matches!(mismatch, Err(IndexError::DimensionMismatch { .. })));
    }

    #[test]
    fn persistence_round_trip() {
        let dim = 4;
        let index = VectorIndex::from_vector_sets(
            IndexMode::SingleVector,
            dim,
            vec![set("a", vec![planar(dim, 0.6, 0.8)])],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.json");
        index.save(&path).unwrap();
        let loaded = VectorIndex::load(&path).unwrap();
        assert_eq!(loaded.mode(), IndexMode::SingleVector);
        assert_eq!(loaded.dimension(), 4);
        let q = planar(dim, 1.0, 0.0);
        assert!((loaded.score_all(&q)[0].score - 0.6).abs() < 1e-9);
    }

    #[test]
    fn cosine_handles_zero_vectors() {
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]), 0.0);
        assert!((cosine(&[2.0, 0.0], &[5.0, 0.0]) - 1.0).abs() < 1e-12);
    }

    proptest! {
        /// MaxSim equals the brute-force maximum over per-segment cosines,
        /// under any permutation of the segments.
        #[test]
        fn max_sim_matches_brute_force(
            query in proptest::collection::vec(-10.0f64..10.0, 6),
            vectors in proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, 6), 1..8),
            seed in 0u64..1000,
        ) {
            let expected = vectors
                .iter()
                .map(|v| cosine(&query, v))
                .fold(f64::NEG_INFINITY, f64::max);
            prop_assert!((max_sim(&query, &vectors) - expected).abs() < 1e-12);

            // Permutation invariance: rotate by seed.
            let mut rotated = vectors.clone();
            rotated.rotate_left((seed as usize) % vectors.len());
            prop_assert!((max_sim(&query, &rotated) - expected).abs() < 1e-12);
        }

        /// Adding a segment can only raise a server's score.
        #[test]
        fn extra_segment_never_lowers_score(
            query in proptest::collection::vec(-10.0f64..10.0, 6),
            vectors in proptest::collection::vec(proptest::collection::vec(-10.0f64..10.0, 6), 1..6),
            extra in proptest::collection::vec(-10.0f64..10.0, 6),
        ) {
            let base = max_sim(&query, &vectors);
            let mut extended = vectors.clone();
            extended.push(extra);
            prop_assert!(max_sim(&query, &extended) >= base - 1e-12);
        }
    }
}
