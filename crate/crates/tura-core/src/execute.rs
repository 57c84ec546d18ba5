//! ReAct-style execution of planned tasks over the tool protocol.
//!
//! Each task runs as an observation → thought → action loop against its
//! single server: the first observation is the task itself, every tool call
//! appends its result as the next observation, and a `final` action ends
//! the loop. Tasks execute concurrently as soon as their dependencies
//! finish (readiness is per task, not per wave, so the measured makespan
//! tracks the critical path), with an optional worker cap and a global
//! wall-clock budget. Upstream outputs are spliced into downstream queries
//! via `{{Tk.output}}` placeholders before the dependent task starts.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::parsing;
use crate::plan::{Plan, SubTask};
use crate::prompts;
use crate::provider::{GenRequest, TextGenProvider};
use crate::sim::{call_with_timeout, ErrorCode, McpClient, McpRequest};

/// Steps a single task may take before it is cut off.
pub const DEFAULT_MAX_STEPS: usize = 6;
/// Per tool-call timeout.
pub const DEFAULT_TASK_TIMEOUT: Duration = Duration::from_secs(10);
/// Whole-query wall-clock budget.
pub const DEFAULT_BUDGET: Duration = Duration::from_secs(30);

/// Execution temperature: actions should be boring.
pub const EXECUTE_TEMPERATURE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThoughtMode {
    /// Record the model's reasoning alongside each action.
    WithThought,
    /// Drop reasoning; history carries observations and actions only.
    ActionOnly,
}

#[derive(Debug, Clone)]
pub struct ExecConfig {
    pub max_steps: usize,
    pub per_task_timeout: Duration,
    pub budget: Option<Duration>,
    /// Concurrent task cap; `None` is unlimited.
    pub workers: Option<usize>,
    pub mode: ThoughtMode,
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig {
            max_steps: DEFAULT_MAX_STEPS,
            per_task_timeout: DEFAULT_TASK_TIMEOUT,
            budget: Some(DEFAULT_BUDGET),
            workers: None,
            mode: ThoughtMode::WithThought,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Action {
    ToolCall {
        tool: String,
        #[serde(default)]
        params: serde_json::Value,
    },
    Final { answer: String },
}

impl Action {
    pub fn is_final(&self) -> bool {
        matches!(self, Action::Final { .. })
    }
}

/// One ReAct step: what the agent saw, what it thought, what it did.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Step {
    pub observation: String,
    pub thought: String,
    pub action: Action,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    BudgetExceeded,
    ToolError,
    StepLimit,
    UpstreamFailed,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Outcome::Success => "success",
            Outcome::BudgetExceeded => "budget_exceeded",
            Outcome::ToolError => "tool_error",
            Outcome::StepLimit => "step_limit",
            Outcome::UpstreamFailed => "upstream_failed",
        };
        f.write_str(name)
    }
}

/// Full record of one task's execution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub task_id: String,
    pub server_id: String,
    pub refined_query: String,
    pub steps: Vec<Step>,
    pub outcome: Outcome,
    pub final_answer: Option<String>,
    pub elapsed_ms: u64,
}

impl Trajectory {
    pub fn succeeded(&self) -> bool {
        self.outcome == Outcome::Success
    }

    fn failed(task: &SubTask, query: &str, outcome: Outcome, started: Instant) -> Self {
        Trajectory {
            task_id: task.task_id.clone(),
            server_id: task.server_id.clone(),
            refined_query: query.to_string(),
            steps: vec![],
            outcome,
            final_answer: None,
            elapsed_ms: started.elapsed().as_millis() as u64,
        }
    }
}

/// Everything `execute_plan` learned, in plan order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub trajectories: Vec<Trajectory>,
    pub wall_ms: u64,
    pub success_count: usize,
    pub task_count: usize,
    /// Deterministic concatenation of per-task results; `None` when nothing
    /// succeeded. Contains no timing, so repeated runs compare bytewise.
    pub answer: Option<String>,
}

impl ExecutionReport {
    pub fn all_succeeded(&self) -> bool {
        self.success_count == self.task_count
    }
}

fn render_answer(trajectories: &[Trajectory]) -> Option<String> {
    if !trajectories.iter().any(Trajectory::succeeded) {
        return None;
    }
    let mut sections = Vec::with_capacity(trajectories.len());
    for t in trajectories {
        let body = match (&t.final_answer, t.outcome) {
            (Some(answer), _) => answer.clone(),
            (None, outcome) => format!("(no result: {outcome})"),
        };
        sections.push(format!(
            "## {id} ({server}): {query}\n{body}",
            id = t.task_id,
            server = t.server_id,
            query = t.refined_query,
        ));
    }
    Some(sections.join("\n\n"))
}

/// Splice resolved upstream answers into a dependent query.
pub fn splice_placeholders(query: &str, outputs: &BTreeMap<String, String>) -> String {
    let mut resolved = query.to_string();
    for (task_id, output) in outputs {
        let pattern = format!(r"\{{\{{\s*{}\.output\s*\}}\}}", regex::escape(task_id));
        let re = regex::Regex::new(&pattern).expect("placeholder pattern compiles");
        resolved = re.replace_all(&resolved, output.as_str()).into_owned();
    }
    resolved
}

fn remaining(deadline: Option<Instant>) -> Option<Duration> {
    deadline.map(|d| d.saturating_duration_since(Instant::now()))
}

fn budget_exhausted(deadline: Option<Instant>) -> bool {
    matches!(remaining(deadline), Some(r) if r.is_zero())
}

/// Run one task's ReAct loop to completion.
pub async fn run_task(
    task: &SubTask,
    resolved_query: &str,
    provider: &dyn TextGenProvider,
    client: &dyn McpClient,
    config: &ExecConfig,
    deadline: Option<Instant>,
) -> Trajectory {
    let started = Instant::now();
    let call_timeout = |deadline: Option<Instant>| -> Duration {
        match remaining(deadline) {
            Some(r) => config.per_task_timeout.min(r),
            None => config.per_task_timeout,
        }
    };

    // Tool discovery happens over the same protocol as calls, with one retry.
    let mut tools_json = None;
    for _ in 0..2 {
        if budget_exhausted(deadline) {
            return Trajectory::failed(task, resolved_query, Outcome::BudgetExceeded, started);
        }
        let request = McpRequest::tools_list(&task.server_id);
        let response = call_with_timeout(client, request, call_timeout(deadline)).await;
        if response.ok {
            tools_json = response.result;
            break;
        }
    }
    let Some(tools_json) = tools_json else {
        let outcome = if budget_exhausted(deadline) {
            Outcome::BudgetExceeded
        } else {
            Outcome::ToolError
        };
        return Trajectory::failed(task, resolved_query, outcome, started);
    };

    let mut steps: Vec<Step> = Vec::new();
    let mut history = format!("Observation 1: {}", prompts::single_line(resolved_query));
    let mut observation = resolved_query.to_string();
    let mut outcome = Outcome::StepLimit;
    let mut final_answer = None;
    let mut attempts = 0usize;

    while steps.len() < config.max_steps && attempts < config.max_steps * 2 {
        attempts += 1;
        if budget_exhausted(deadline) {
            outcome = Outcome::BudgetExceeded;
            break;
        }
        let prompt =
            prompts::execute_prompt(&task.server_id, resolved_query, &tools_json, &history);
        let request = GenRequest {
            prompt,
            temperature: EXECUTE_TEMPERATURE,
        };
        let generated =
            tokio::time::timeout(call_timeout(deadline), provider.generate(&request)).await;
        let Ok(Ok(raw)) = generated else {
            continue; // provider failure or timeout consumes an attempt
        };
        let Some((thought, action)) = parse_step(&raw) else {
            continue;
        };
        let thought = match config.mode {
            ThoughtMode::WithThought => thought,
            ThoughtMode::ActionOnly => String::new(),
        };

        let step_no = steps.len() + 1;
        if config.mode == ThoughtMode::WithThought {
            history.push_str(&format!("\nThought {step_no}: {}", prompts::single_line(&thought)));
        }
        history.push_str(&format!(
            "\nAction {step_no}: {}",
            serde_json::to_string(&action).expect("action serializes")
        ));

        match &action {
            Action::Final { answer } => {
                final_answer = Some(answer.clone());
                steps.push(Step {
                    observation,
                    thought,
                    action,
                });
                outcome = Outcome::Success;
                break;
            }
            Action::ToolCall { tool, params } => {
                let dispatch = McpRequest::tools_call(&task.server_id, tool, params.clone());
                let mut response =
                    call_with_timeout(client, dispatch, call_timeout(deadline)).await;
                // Transport timeouts are treated as transient: retry once.
                if !response.ok
                    && response.error.as_ref().map(|e| e.code) == Some(ErrorCode::TransportTimeout)
                    && !budget_exhausted(deadline)
                {
                    let retry = McpRequest::tools_call(&task.server_id, tool, params.clone());
                    response = call_with_timeout(client, retry, call_timeout(deadline)).await;
                }
                let next_observation = if response.ok {
                    response.result.unwrap_or_default()
                } else if response.error.as_ref().map(|e| e.code)
                    == Some(ErrorCode::TransportTimeout)
                {
                    steps.push(Step {
                        observation,
                        thought,
                        action,
                    });
                    outcome = if budget_exhausted(deadline) {
                        Outcome::BudgetExceeded
                    } else {
                        Outcome::ToolError
                    };
                    break;
                } else {
                    let err = response.error.expect("failed response carries error");
                    format!("tool error ({:?}): {}", err.code, err.message)
                };
                steps.push(Step {
                    observation,
                    thought,
                    action,
                });
                observation = next_observation;
                history.push_str(&format!(
                    "\nObservation {}: {}",
                    steps.len() + 1,
                    prompts::single_line(&observation)
                ));
            }
        }
    }

    Trajectory {
        task_id: task.task_id.clone(),
        server_id: task.server_id.clone(),
        refined_query: resolved_query.to_string(),
        steps,
        outcome,
        final_answer,
        elapsed_ms: started.elapsed().as_millis() as u64,
    }
}

/// Parse a model step: either `{"thought": ..., "action": {...}}` or a bare
/// action object.
fn parse_step(raw: &str) -> Option<(String, Action)> {
    let value = parsing::extract_json_object(raw)?;
    let (thought, action_value) = match value.get("action") {
        Some(action) => (
            value
                .get("thought")
                .and_then(|t| t.as_str())
                .unwrap_or_default()
                .to_string(),
            action.clone(),
        ),
        None => (String::new(), value),
    };
    let action: Action = serde_json::from_value(action_value).ok()?;
    if let Action::ToolCall { tool, params } = &action {
        if tool.trim().is_empty() || !params.is_object() {
            return None;
        }
    }
    Some((thought, action))
}

/// Execute a whole plan with dependency-driven concurrency.
pub async fn execute_plan(
    plan: &Plan,
    provider: Arc<dyn TextGenProvider>,
    client: Arc<dyn McpClient>,
    config: &ExecConfig,
) -> ExecutionReport {
    let started = Instant::now();
    let deadline = config.budget.map(|b| started + b);

    // A lone dependency-free task needs no DAG machinery.
    if let [task] = plan.tasks.as_slice() {
        if task.depends_on.is_empty() {
            let trajectory = run_task(
                task,
                &task.refined_query,
                provider.as_ref(),
                client.as_ref(),
                config,
                deadline,
            )
            .await;
            let success_count = usize::from(trajectory.succeeded());
            let trajectories = vec![trajectory];
            let answer = render_answer(&trajectories);
            return ExecutionReport {
                task_count: 1,
                success_count,
                trajectories,
                wall_ms: started.elapsed().as_millis() as u64,
                answer,
            };
        }
    }

    let semaphore = config
        .workers
        .map(|w| Arc::new(tokio::sync::Semaphore::new(w.max(1))));

    type Slot = Option<Arc<Trajectory>>;
    let mut senders: BTreeMap<String, tokio::sync::watch::Sender<Slot>> = BTreeMap::new();
    let mut receivers: BTreeMap<String, tokio::sync::watch::Receiver<Slot>> = BTreeMap::new();
    for task in &plan.tasks {
        let (tx, rx) = tokio::sync::watch::channel(None);
        senders.insert(task.task_id.clone(), tx);
        receivers.insert(task.task_id.clone(), rx);
    }

    let mut handles = Vec::with_capacity(plan.tasks.len());
    for task in &plan.tasks {
        let task = task.clone();
        let tx = senders.remove(&task.task_id).expect("sender exists");
        let deps: Vec<(String, tokio::sync::watch::Receiver<Slot>)> = task
            .depends_on
            .iter()
            .map(|d| (d.clone(), receivers[d].clone()))
            .collect();
        let provider = provider.clone();
        let client = client.clone();
        let config = config.clone();
        let semaphore = semaphore.clone();
        handles.push(tokio::spawn(async move {
            let started_task = Instant::now();
            let mut outputs: BTreeMap<String, String> = BTreeMap::new();
            let mut upstream_ok = true;
            for (dep_id, mut rx) in deps {
                let upstream: Option<Arc<Trajectory>> = match rx.wait_for(Option::is_some).await {
                    Ok(slot) => slot.clone(),
                    Err(_) => None,
                };
                match upstream.and_then(|t| t.final_answer.clone()) {
                    Some(answer) => {
                        outputs.insert(dep_id, answer);
                    }
                    None => {
                        upstream_ok = false;
                    }
                }
            }
            let trajectory = if !upstream_ok {
                Trajectory::failed(
                    &task,
                    &task.refined_query,
                    Outcome::UpstreamFailed,
                    started_task,
                )
            } else {
                // Permits are taken only after readiness so a capped worker
                // pool can never deadlock on dependency order.
                let _permit = match &semaphore {
                    Some(s) => Some(s.clone().acquire_owned().await.expect("semaphore open")),
                    None => None,
                };
                let resolved = splice_placeholders(&task.refined_query, &outputs);
                run_task(
                    &task,
                    &resolved,
                    provider.as_ref(),
                    client.as_ref(),
                    &config,
                    deadline,
                )
                .await
            };
            let trajectory = Arc::new(trajectory);
            let _ = tx.send(Some(trajectory.clone()));
            (task.task_id.clone(), trajectory)
        }));
    }

    let mut by_id: BTreeMap<String, Arc<Trajectory>> = BTreeMap::new();
    for handle in handles {
        let (task_id, trajectory) = handle.await.expect("task future completes");
        by_id.insert(task_id, trajectory);
    }
    let trajectories: Vec<Trajectory> = plan
        .tasks
        .iter()
        .map(|t| by_id[&t.task_id].as_ref().clone())
        .collect();
    let success_count = trajectories.iter().filter(|t| t.succeeded()).count();
    let answer = render_answer(&trajectories);
    ExecutionReport {
        task_count: trajectories.len(),
        success_count,
        trajectories,
        wall_ms: started.elapsed().as_millis() as u64,
        answer,
    }
}
