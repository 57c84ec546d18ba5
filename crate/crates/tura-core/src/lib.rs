//! Core engine for multi-intent query answering over a fleet of tool
//! servers.
//!
//! The pipeline has three model-facing stages — decompose a query into
//! sub-queries, retrieve candidate servers per sub-query from a
//! synthetic-query-augmented multi-vector index, plan and execute a task
//! DAG against the selected servers — plus a trajectory curation pipeline
//! for distilling training data and a benchmark harness over a simulated
//! fleet. Every stage runs offline by default (deterministic rule-based
//! providers, hashing embedder, in-process fleet) and switches to remote
//! OpenAI-compatible endpoints via environment variables.

pub mod bench;
pub mod corpus;
pub mod decompose;
pub mod distill;
pub mod engine;
pub mod execute;
pub mod index;
pub mod parsing;
pub mod plan;
pub mod prompts;
pub mod provider;
pub mod registry;
pub mod retrieve;
pub mod sim;

pub use decompose::SubQuerySet;
pub use engine::{Engine, EngineError, EngineReport};
pub use execute::{Action, ExecConfig, ExecutionReport, Outcome, Step, ThoughtMode, Trajectory};
pub use index::{EmbeddingVector, IndexMode, ServerScore, VectorIndex, VectorSet};
pub use plan::{MakespanEstimate, Plan, PlanKind, Schedule, SubTask};
pub use registry::{AugmentedDocument, Registry, ServerDescriptor, ToolSchema};
pub use retrieve::{PoolEntry, RetrievalResult, RetrieveParams};
pub use sim::{Fleet, LatencyProfile, LocalClient, McpClient, McpRequest, McpResponse, TcpClient};
