//! Trajectory distillation: expert synthesis, two-stage curation, and
//! training-record emission.
//!
//! Curation runs two judges in a fixed order. The correctness judge is a
//! deterministic rule engine — schema-valid tool calls confined to the
//! task's server, no unresolved output placeholders, a terminal answer
//! present — and its failures drop the trajectory outright. Survivors pass
//! to the efficiency judge, which repairs what it can by deletion
//! (consecutive repeats of one action, steps after the terminal) and prunes
//! cohort outliers whose step count exceeds the cohort's 95th percentile
//! (nearest rank). Repaired trajectories are re-validated by the
//! correctness judge only; the order never flips, because the efficiency
//! judge assumes structurally valid input.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::execute::{run_task, Action, ExecConfig, Step, Trajectory};
use crate::plan::{placeholder_refs, SubTask};
use crate::provider::TextGenProvider;
use crate::registry::{check_params, ParamIssue, Registry};
use crate::sim::McpClient;

#[derive(Debug, thiserror::Error)]
pub enum DistillError {
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at {path} line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Correctness,
    Efficiency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Pass,
    Fail,
    Corrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingCode {
    UnknownServer,
    ToolConfinement,
    MissingParam,
    UnknownParam,
    InvalidType,
    InvalidEnumValue,
    PatternMismatch,
    UnresolvedReference,
    MissingTerminal,
    DuplicateAction,
    PostTerminal,
    SubOptimality,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Finding {
    /// Step index the finding anchors to, when step-specific.
    pub step: Option<usize>,
    pub code: FindingCode,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub stage: Stage,
    pub decision: Decision,
    pub findings: Vec<Finding>,
}

impl JudgeVerdict {
    pub fn passed(&self) -> bool {
        self.decision != Decision::Fail
    }
}

// ---------------------------------------------------------------------------
// Correctness judge
// ---------------------------------------------------------------------------

fn map_issue(issue: &ParamIssue) -> FindingCode {
    match issue {
        ParamIssue::NotAnObject | ParamIssue::WrongType { .. } => FindingCode::InvalidType,
        ParamIssue::MissingRequired { .. } => FindingCode::MissingParam,
        ParamIssue::UnknownParam { .. } => FindingCode::UnknownParam,
        ParamIssue::BadEnumValue { .. } => FindingCode::InvalidEnumValue,
        ParamIssue::PatternMismatch { .. } => FindingCode::PatternMismatch,
    }
}

fn unresolved_in(text: &str) -> bool {
    !placeholder_refs(text).is_empty()
}

/// Validate one trajectory against the registry. Purely structural: no
/// model calls, no randomness.
pub fn judge_correctness(trajectory: &Trajectory, registry: &Registry) -> JudgeVerdict {
    let mut findings = Vec::new();
    let Some(descriptor) = registry.get(&trajectory.server_id) else {
        return JudgeVerdict {
            stage: Stage::Correctness,
            decision: Decision::Fail,
            findings: vec![Finding {
                step: None,
                code: FindingCode::UnknownServer,
                detail: format!("no server `{}` in registry", trajectory.server_id),
            }],
        };
    };

    if unresolved_in(&trajectory.refined_query) {
        findings.push(Finding {
            step: None,
            code: FindingCode::UnresolvedReference,
            detail: "refined query still contains an output placeholder".into(),
        });
    }

    let mut has_terminal = false;
    for (i, step) in trajectory.steps.iter().enumerate() {
        match &step.action {
            Action::Final { answer } => {
                has_terminal = true;
                if unresolved_in(answer) {
                    findings.push(Finding {
                        step: Some(i),
                        code: FindingCode::UnresolvedReference,
                        detail: "final answer still contains an output placeholder".into(),
                    });
                }
            }
            Action::ToolCall { tool, params } => {
                let Some(schema) = descriptor.tools.iter().find(|t| &t.name == tool) else {
                    findings.push(Finding {
                        step: Some(i),
                        code: FindingCode::ToolConfinement,
                        detail: format!(
                            "tool `{tool}` is not provided by `{}`",
                            trajectory.server_id
                        ),
                    });
                    continue;
                };
                for issue in check_params(schema, params) {
                    findings.push(Finding {
                        step: Some(i),
                        code: map_issue(&issue),
                        detail: issue.to_string(),
                    });
                }
                let param_text = params.to_string();
                if unresolved_in(&param_text) {
                    findings.push(Finding {
                        step: Some(i),
                        code: FindingCode::UnresolvedReference,
                        detail: "tool params still contain an output placeholder".into(),
                    });
                }
            }
        }
    }
    if !has_terminal {
        findings.push(Finding {
            step: None,
            code: FindingCode::MissingTerminal,
            detail: "trajectory never emits a final answer".into(),
        });
    }

    JudgeVerdict {
        stage: Stage::Correctness,
        decision: if findings.is_empty() {
            Decision::Pass
        } else {
            Decision::Fail
        },
        findings,
    }
}

// ---------------------------------------------------------------------------
// Efficiency judge
// ---------------------------------------------------------------------------

/// Per-trajectory efficiency pass: delete post-terminal steps, collapse
/// consecutive repeats of one action. Returns the verdict and the repaired
/// trajectory when anything changed.
pub fn repair_efficiency(trajectory: &Trajectory) -> (JudgeVerdict, Option<Trajectory>) {
    let mut findings = Vec::new();
    let mut steps: Vec<(usize, &Step)> = trajectory.steps.iter().enumerate().collect();

    // Everything after the first terminal action is dead weight.
    if let Some(pos) = steps.iter().position(|(_, s)| s.action.is_final()) {
        for (original_index, _) in steps.drain(pos + 1..) {
            findings.push(Finding {
                step: Some(original_index),
                code: FindingCode::PostTerminal,
                detail: "step occurs after the final answer".into(),
            });
        }
    }

    // Consecutive identical actions collapse to the first occurrence.
    let mut kept: Vec<(usize, &Step)> = Vec::with_capacity(steps.len());
    for (original_index, step) in steps {
        if let Some((_, previous)) = kept.last() {
            if previous.action == step.action {
                findings.push(Finding {
                    step: Some(original_index),
                    code: FindingCode::DuplicateAction,
                    detail: "action repeats the immediately preceding one".into(),
                });
                continue;
            }
        }
        kept.push((original_index, step));
    }

    if findings.is_empty() {
        return (
            JudgeVerdict {
                stage: Stage::Efficiency,
                decision: Decision::Pass,
                findings,
            },
            None,
        );
    }
    let mut repaired = trajectory.clone();
    repaired.steps = kept.into_iter().map(|(_, s)| s.clone()).collect();
    (
        JudgeVerdict {
            stage: Stage::Efficiency,
            decision: Decision::Corrected,
            findings,
        },
        Some(repaired),
    )
}

/// Nearest-rank 95th percentile of step counts.
fn p95(counts: &[usize]) -> usize {
    let mut sorted = counts.to_vec();
    sorted.sort_unstable();
    let rank = ((sorted.len() as f64 * 0.95).ceil() as usize).max(1);
    sorted[rank - 1]
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryVerdict {
    pub index: usize,
    pub correctness: JudgeVerdict,
    /// Absent when correctness already dropped the trajectory: the
    /// efficiency judge never sees invalid input.
    pub efficiency: Option<JudgeVerdict>,
    /// Re-run of the correctness judge on a repaired trajectory.
    pub revalidation: Option<JudgeVerdict>,
    pub kept: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurationOutcome {
    pub verdicts: Vec<TrajectoryVerdict>,
    /// Surviving trajectories, repaired where applicable, input order.
    pub kept: Vec<Trajectory>,
    pub corrected_count: usize,
}

impl CurationOutcome {
    pub fn dropped_count(&self) -> usize {
        self.verdicts.len() - self.kept.len()
    }
}

/// Run the full two-stage curation over a batch.
pub fn curate(trajectories: &[Trajectory], registry: &Registry) -> CurationOutcome {
    struct Candidate {
        index: usize,
        trajectory: Trajectory,
        corrected: bool,
    }
    let mut verdicts: Vec<TrajectoryVerdict> = Vec::with_capacity(trajectories.len());
    let mut candidates: Vec<Candidate> = Vec::new();

    for (index, trajectory) in trajectories.iter().enumerate() {
        let correctness = judge_correctness(trajectory, registry);
        if !correctness.passed() {
            verdicts.push(TrajectoryVerdict {
                index,
                correctness,
                efficiency: None,
                revalidation: None,
                kept: false,
            });
            continue;
        }
        let (efficiency, repaired) = repair_efficiency(trajectory);
        let (candidate, revalidation, kept) = match repaired {
            None => (trajectory.clone(), None, true),
            Some(repaired) => {
                let revalidation = judge_correctness(&repaired, registry);
                let ok = revalidation.passed();
                (repaired, Some(revalidation), ok)
            }
        };
        let corrected = efficiency.decision == Decision::Corrected && kept;
        verdicts.push(TrajectoryVerdict {
            index,
            correctness,
            efficiency: Some(efficiency),
            revalidation,
            kept,
        });
        if kept {
            candidates.push(Candidate {
                index,
                trajectory: candidate,
                corrected,
            });
        }
    }

    // Cohort pruning: within (server, query) cohorts, trajectories longer
    // than the cohort's 95th-percentile step count are sub-optimal.
    let mut cohorts: BTreeMap<(String, String), Vec<usize>> = BTreeMap::new();
    for c in &candidates {
        cohorts
            .entry((c.trajectory.server_id.clone(), c.trajectory.refined_query.clone()))
            .or_default()
            .push(c.trajectory.steps.len());
    }
    let ceilings: BTreeMap<(String, String), usize> = cohorts
        .into_iter()
        .map(|(key, counts)| {
            let ceiling = p95(&counts);
            (key, ceiling)
        })
        .collect();

    let mut kept = Vec::new();
    let mut corrected_count = 0;
    for candidate in candidates {
        let key = (
            candidate.trajectory.server_id.clone(),
            candidate.trajectory.refined_query.clone(),
        );
        let ceiling = ceilings[&key];
        if candidate.trajectory.steps.len() > ceiling {
            let verdict = verdicts
                .iter_mut()
                .find(|v| v.index == candidate.index)
                .expect("verdict exists");
            verdict.kept = false;
            if let Some(e) = verdict.efficiency.as_mut() {
                e.decision = Decision::Fail;
                e.findings.push(Finding {
                    step: None,
                    code: FindingCode::SubOptimality,
                    detail: format!(
                        "{} steps exceeds cohort 95th percentile of {ceiling}",
                        candidate.trajectory.steps.len()
                    ),
                });
            }
            continue;
        }
        if candidate.corrected {
            corrected_count += 1;
        }
        kept.push(candidate.trajectory);
    }

    CurationOutcome {
        verdicts,
        kept,
        corrected_count,
    }
}

// ---------------------------------------------------------------------------
// Training records
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordContext {
    pub refined_query: String,
    pub server_id: String,
    /// Content digest of the server descriptor the trajectory ran against.
    pub server_digest: String,
    pub tools: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetStep {
    pub thought: String,
    pub action: Action,
}

/// One supervised training sample distilled from a curated trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistillRecord {
    pub context: RecordContext,
    pub target: Vec<TargetStep>,
    pub final_answer: String,
}

/// Convert curated trajectories to records. `with_thought` keeps the
/// reasoning channel; turning it off trains an action-only policy while the
/// actions themselves stay identical.
pub fn to_records(kept: &[Trajectory], registry: &Registry, with_thought: bool) -> Vec<DistillRecord> {
    kept.iter()
        .filter_map(|trajectory| {
            let descriptor = registry.get(&trajectory.server_id)?;
            let target = trajectory
                .steps
                .iter()
                .map(|step| TargetStep {
                    thought: if with_thought {
                        step.thought.clone()
                    } else {
                        String::new()
                    },
                    action: step.action.clone(),
                })
                .collect();
            Some(DistillRecord {
                context: RecordContext {
                    refined_query: trajectory.refined_query.clone(),
                    server_id: trajectory.server_id.clone(),
                    server_digest: descriptor.digest(),
                    tools: descriptor.tools.iter().map(|t| t.name.clone()).collect(),
                },
                target,
                final_answer: trajectory.final_answer.clone().unwrap_or_default(),
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Expert synthesis and fault seeding
// ---------------------------------------------------------------------------

/// Sample independent sub-tasks over the registry's callable servers,
/// round-robin, with queries drawn from each server's synthetic queries.
pub fn sample_tasks(registry: &Registry, count: usize, seed: u64) -> Vec<SubTask> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let servers: Vec<_> = registry.iter().filter(|d| !d.tools.is_empty()).collect();
    assert!(!servers.is_empty(), "registry has no callable servers");
    (0..count)
        .map(|i| {
            let server = servers[i % servers.len()];
            let refined_query = if server.synthetic_queries.is_empty() {
                format!("look up {} item {}", server.server_id, i + 1)
            } else {
                server.synthetic_queries
                    [rng.random_range(0..server.synthetic_queries.len())]
                .clone()
            };
            SubTask {
                task_id: format!("D{}", i + 1),
                refined_query,
                server_id: server.server_id.clone(),
                depends_on: vec![],
            }
        })
        .collect()
}

/// Run each task through the executor with a teacher provider, collecting
/// every trajectory, failures included — judges need negative examples too.
pub async fn synthesize_expert(
    tasks: &[SubTask],
    teacher: &dyn TextGenProvider,
    client: &dyn McpClient,
    config: &ExecConfig,
) -> Vec<Trajectory> {
    let mut out = Vec::with_capacity(tasks.len());
    for task in tasks {
        out.push(run_task(task, &task.refined_query, teacher, client, config, None).await);
    }
    out
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FaultPlan {
    pub schema_faults: usize,
    pub duplicate_faults: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FaultLog {
    pub schema_indices: Vec<usize>,
    pub duplicate_indices: Vec<usize>,
}

/// Seed faults into disjoint trajectories, chosen by a seeded shuffle.
///
/// Schema faults rotate through four kinds of correctness violations;
/// duplicate faults insert a consecutive repeat of the first tool call, the
/// exact shape the efficiency judge repairs.
pub fn inject_faults(
    trajectories: &mut [Trajectory],
    plan: &FaultPlan,
    seed: u64,
) -> FaultLog {
    let total = plan.schema_faults + plan.duplicate_faults;
    assert!(
        total <= trajectories.len(),
        "cannot seed {total} faults into {} trajectories",
        trajectories.len()
    );
    let mut order: Vec<usize> = (0..trajectories.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut schema_indices: Vec<usize> = order[..plan.schema_faults].to_vec();
    let mut duplicate_indices: Vec<usize> =
        order[plan.schema_faults..total].to_vec();
    schema_indices.sort_unstable();
    duplicate_indices.sort_unstable();

    for (k, &index) in schema_indices.iter().enumerate() {
        let trajectory = &mut trajectories[index];
        let call_pos = trajectory
            .steps
            .iter()
            .position(|s| matches!(s.action, Action::ToolCall { .. }));
        match (k % 4, call_pos) {
            (0, Some(pos)) => {
                // Strip params: any required param now reads as missing.
                if let Action::ToolCall { params, .. } = &mut trajectory.steps[pos].action {
                    *params = serde_json::json!({});
                }
            }
            (1, Some(pos)) => {
                // Type violation: arrays are invalid for every param type.
                if let Action::ToolCall { params, .. } = &mut trajectory.steps[pos].action {
                    if let Some(map) = params.as_object_mut() {
                        if let Some(key) = map.keys().next().cloned() {
                            map.insert(key, serde_json::json!([1, 2]));
                        } else {
                            map.insert("bogus".into(), serde_json::json!(1));
                        }
                    }
                }
            }
            (2, Some(pos)) => {
                if let Action::ToolCall { tool, .. } = &mut trajectory.steps[pos].action {
                    *tool = "ghost_tool".into();
                }
            }
            _ => {
                trajectory.refined_query =
                    format!("{} using {{{{T99.output}}}}", trajectory.refined_query);
            }
        }
    }

    for &index in &duplicate_indices {
        let trajectory = &mut trajectories[index];
        let Some(pos) = trajectory
            .steps
            .iter()
            .position(|s| matches!(s.action, Action::ToolCall { .. }))
        else {
            continue;
        };
        let mut duplicate = trajectory.steps[pos].clone();
        if let Some(next) = trajectory.steps.get(pos + 1) {
            // The repeated call observes the first call's result.
            duplicate.observation = next.observation.clone();
        }
        trajectory.steps.insert(pos + 1, duplicate);
    }

    FaultLog {
        schema_indices,
        duplicate_indices,
    }
}

// ---------------------------------------------------------------------------
// JSONL IO
// ---------------------------------------------------------------------------

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), DistillError> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("item serializes"));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| DistillError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, DistillError> {
    let text = std::fs::read_to_string(path).map_err(|e| DistillError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut items = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(line).map_err(|e| DistillError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        items.push(item);
    }
    Ok(items)
}
