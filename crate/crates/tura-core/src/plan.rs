//! DAG task planning and wave scheduling.
//!
//! The planner turns retrieval output into sub-tasks, each a refined query
//! bound to one server, with explicit dependency edges. A task may embed
//! `{{Tk.output}}` in its query to splice in an upstream result; such a
//! reference implies the edge even when the plan omits it. Scheduling
//! layers the DAG into waves (Kahn's algorithm): everything in one wave has
//! all dependencies satisfied by earlier waves and runs in parallel.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::parsing;
use crate::prompts::{self, PlanCandidate};
use crate::provider::{GenRequest, TextGenProvider};
use crate::retrieve::RetrievalResult;

/// Planning temperature: structured output, keep it low.
pub const PLAN_TEMPERATURE: f64 = 0.2;

/// Minimum top-1 similarity for the single-intent fast path.
pub const SIMPLE_ROUTE_THRESHOLD: f64 = 0.5;

#[derive(Debug, thiserror::Error)]
pub enum PlanError {
    #[error("plan JSON missing or malformed: {0}")]
    Parse(String),
    #[error("plan has no tasks")]
    MissingTasks,
    #[error("task `{task}` uses server `{server}` which is not a retrieved candidate")]
    UnknownServer { task: String, server: String },
    #[error("bad dependency `{0}`, expected \"Tk->Tm\"")]
    BadDependency(String),
    #[error("dependency references unknown task `{0}`")]
    UnknownTaskRef(String),
    #[error("dependency cycle among tasks: {0:?}")]
    Cycle(Vec<String>),
}

/// One planned unit of work: a refined query routed to a single server.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubTask {
    pub task_id: String,
    pub refined_query: String,
    pub server_id: String,
    /// Task ids that must finish before this task starts.
    #[serde(default)]
    pub depends_on: Vec<String>,
}

/// Single-task plans skip DAG traversal; everything else schedules waves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanKind {
    Single,
    Dag,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Plan {
    pub original_query: String,
    pub kind: PlanKind,
    /// Tasks in deterministic id order.
    pub tasks: Vec<SubTask>,
}

impl Plan {
    /// Build from tasks, deriving the kind from the shape.
    pub fn new(original_query: &str, tasks: Vec<SubTask>) -> Self {
        let kind = if tasks.len() == 1 && tasks[0].depends_on.is_empty() {
            PlanKind::Single
        } else {
            PlanKind::Dag
        };
        Plan {
            original_query: original_query.to_string(),
            kind,
            tasks,
        }
    }

    pub fn get(&self, task_id: &str) -> Option<&SubTask> {
        self.tasks.iter().find(|t| t.task_id == task_id)
    }

    pub fn task_ids(&self) -> Vec<String> {
        self.tasks.iter().map(|t| t.task_id.clone()).collect()
    }

    /// Dependency edges as (from, to) pairs, deterministically ordered.
    pub fn edges(&self) -> Vec<(String, String)> {
        let mut edges = Vec::new();
        for task in &self.tasks {
            for dep in &task.depends_on {
                edges.push((dep.clone(), task.task_id.clone()));
            }
        }
        edges.sort_by(|a, b| {
            (task_key(&a.0), task_key(&a.1)).cmp(&(task_key(&b.0), task_key(&b.1)))
        });
        edges
    }

    /// Wire shape used on the provider boundary and by the CLI:
    /// `{"tasks": {"T1": {"query", "server"}}, "dependency": ["T1->T2"]}`.
    pub fn to_wire(&self) -> serde_json::Value {
        let mut tasks = serde_json::Map::new();
        for task in &self.tasks {
            tasks.insert(
                task.task_id.clone(),
                serde_json::json!({
                    "query": task.refined_query,
                    "server": task.server_id,
                }),
            );
        }
        let dependency: Vec<String> = self
            .edges()
            .into_iter()
            .map(|(from, to)| format!("{from}->{to}"))
            .collect();
        serde_json::json!({ "tasks": tasks, "dependency": dependency })
    }
}

/// Parallel execution layers; each inner list is one wave of task ids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Schedule {
    pub waves: Vec<Vec<String>>,
}

impl Schedule {
    /// Wave index of each task.
    pub fn wave_of(&self) -> BTreeMap<String, usize> {
        let mut map = BTreeMap::new();
        for (w, wave) in self.waves.iter().enumerate() {
            for id in wave {
                map.insert(id.clone(), w);
            }
        }
        map
    }
}

/// Predicted wall-clock cost of a plan under known per-task latencies.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MakespanEstimate {
    /// One task at a time, in schedule order.
    pub sequential_ms: u64,
    /// Unlimited parallelism: critical-path length.
    pub parallel_ms: u64,
}

impl MakespanEstimate {
    pub fn reduction_percent(&self) -> f64 {
        if self.sequential_ms == 0 {
            return 0.0;
        }
        (self.sequential_ms - self.parallel_ms) as f64 / self.sequential_ms as f64 * 100.0
    }
}

/// Numeric-aware ordering key so T2 sorts before T10.
fn task_key(id: &str) -> (String, u64, String) {
    let split = id
        .find(|c: char| c.is_ascii_digit())
        .unwrap_or(id.len());
    let (prefix, digits) = id.split_at(split);
    (prefix.to_string(), digits.parse().unwrap_or(0), id.to_string())
}

/// Task ids referenced as `{{Tk.output}}` inside a query.
pub fn placeholder_refs(query: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = query;
    while let Some(start) = rest.find("{{") {
        let tail = &rest[start + 2..];
        let Some(end) = tail.find("}}") else { break };
        let inner = tail[..end].trim();
        if let Some(task) = inner.strip_suffix(".output") {
            let task = task.trim();
            if !task.is_empty() {
                out.push(task.to_string());
            }
        }
        rest = &tail[end + 2..];
    }
    out
}

/// Parse and validate a plan from model JSON.
///
/// Expected shape:
/// `{"tasks": {"T1": {"query": "...", "server": "..."}}, "dependency": ["T1->T2"]}`
///
/// `allowed_servers` is the retrieval selection; any task routed elsewhere
/// is rejected. Placeholder references add implied edges, dependencies are
/// checked for dangling ids, and the result must be acyclic.
pub fn parse_plan(
    raw: &str,
    original_query: &str,
    allowed_servers: &BTreeSet<String>,
) -> Result<Plan, PlanError> {
    let value = parsing::extract_json_object(raw)
        .ok_or_else(|| PlanError::Parse("no JSON object found".into()))?;
    let tasks_value = value
        .get("tasks")
        .and_then(|t| t.as_object())
        .ok_or_else(|| PlanError::Parse("`tasks` must be an object".into()))?;
    if tasks_value.is_empty() {
        return Err(PlanError::MissingTasks);
    }

    let mut tasks = Vec::with_capacity(tasks_value.len());
    for (task_id, body) in tasks_value {
        let query = body
            .get("query")
            .and_then(|q| q.as_str())
            .filter(|q| !q.trim().is_empty())
            .ok_or_else(|| PlanError::Parse(format!("task `{task_id}` has no query")))?;
        let server = body
            .get("server")
            .and_then(|s| s.as_str())
            .filter(|s| !s.trim().is_empty())
            .ok_or_else(|| PlanError::Parse(format!("task `{task_id}` has no server")))?;
        if !allowed_servers.contains(server) {
            return Err(PlanError::UnknownServer {
                task: task_id.clone(),
                server: server.to_string(),
            });
        }
        tasks.push(SubTask {
            task_id: task_id.clone(),
            refined_query: query.trim().to_string(),
            server_id: server.to_string(),
            depends_on: Vec::new(),
        });
    }
    tasks.sort_by_key(|t| task_key(&t.task_id));

    let known: BTreeSet<String> = tasks.iter().map(|t| t.task_id.clone()).collect();
    let mut edges: BTreeSet<(String, String)> = BTreeSet::new();
    if let Some(deps) = value.get("dependency") {
        let list = deps
            .as_array()
            .ok_or_else(|| PlanError::Parse("`dependency` must be an array".into()))?;
        for item in list {
            let text = item
                .as_str()
                .ok_or_else(|| PlanError::BadDependency(item.to_string()))?;
            let (from, to) = text
                .split_once("->")
                .ok_or_else(|| PlanError::BadDependency(text.to_string()))?;
            let (from, to) = (from.trim().to_string(), to.trim().to_string());
            if from.is_empty() || to.is_empty() {
                return Err(PlanError::BadDependency(text.to_string()));
            }
            for id in [&from, &to] {
                if !known.contains(id) {
                    return Err(PlanError::UnknownTaskRef(id.clone()));
                }
            }
            edges.insert((from, to));
        }
    }
    // A textual reference to another task's output is a dependency whether
    // or not the plan declared it.
    for task in &tasks {
        for referenced in placeholder_refs(&task.refined_query) {
            if !known.contains(&referenced) {
                return Err(PlanError::UnknownTaskRef(referenced));
            }
            edges.insert((referenced, task.task_id.clone()));
        }
    }
    for (from, to) in &edges {
        if from == to {
            return Err(PlanError::Cycle(vec![from.clone()]));
        }
    }
    for task in &mut tasks {
        task.depends_on = edges
            .iter()
            .filter(|(_, to)| *to == task.task_id)
            .map(|(from, _)| from.clone())
            .collect();
        task.depends_on.sort_by_key(|id| task_key(id));
    }

    let plan = Plan::new(original_query, tasks);
    schedule(&plan)?; // surfaces cycles
    Ok(plan)
}

/// Layer the plan into waves with Kahn's algorithm.
pub fn schedule(plan: &Plan) -> Result<Schedule, PlanError> {
    let known: BTreeSet<&str> = plan.tasks.iter().map(|t| t.task_id.as_str()).collect();
    for task in &plan.tasks {
        for dep in &task.depends_on {
            if !known.contains(dep.as_str()) {
                return Err(PlanError::UnknownTaskRef(dep.clone()));
            }
        }
    }
    let mut placed: BTreeSet<String> = BTreeSet::new();
    let mut waves: Vec<Vec<String>> = Vec::new();
    while placed.len() < plan.tasks.len() {
        let mut wave: Vec<String> = plan
            .tasks
            .iter()
            .filter(|t| !placed.contains(&t.task_id))
            .filter(|t| t.depends_on.iter().all(|d| placed.contains(d)))
            .map(|t| t.task_id.clone())
            .collect();
        if wave.is_empty() {
            let stuck: Vec<String> = plan
                .tasks
                .iter()
                .filter(|t| !placed.contains(&t.task_id))
                .map(|t| t.task_id.clone())
                .collect();
            return Err(PlanError::Cycle(stuck));
        }
        wave.sort_by_key(|id| task_key(id));
        placed.extend(wave.iter().cloned());
        waves.push(wave);
    }
    Ok(Schedule { waves })
}

/// Predict sequential and parallel makespan from per-task latencies.
/// Tasks missing from the map cost zero.
pub fn predict_makespan(plan: &Plan, latency_ms: &BTreeMap<String, u64>) -> Result<MakespanEstimate, PlanError> {
    let schedule = schedule(plan)?;
    let cost = |id: &str| latency_ms.get(id).copied().unwrap_or(0);
    let sequential_ms = plan.tasks.iter().map(|t| cost(&t.task_id)).sum();

    // Critical path: finish(t) = latency(t) + max over deps of finish(dep).
    let mut finish: BTreeMap<String, u64> = BTreeMap::new();
    for wave in &schedule.waves {
        for id in wave {
            let task = plan.get(id).expect("scheduled task exists");
            let ready = task
                .depends_on
                .iter()
                .map(|d| finish[d])
                .max()
                .unwrap_or(0);
            finish.insert(id.clone(), ready + cost(id));
        }
    }
    let parallel_ms = finish.values().copied().max().unwrap_or(0);
    Ok(MakespanEstimate {
        sequential_ms,
        parallel_ms,
    })
}

/// True when retrieval already answers routing: one intent, confident top-1.
pub fn is_simple_route(retrieval: &RetrievalResult) -> bool {
    retrieval.sub_queries.len() == 1
        && retrieval
            .selected
            .first()
            .is_some_and(|s| s.score > SIMPLE_ROUTE_THRESHOLD)
}

/// Fallback plan: one independent task per sub-query, routed to that
/// sub-query's best candidate. Sub-queries with no candidates are skipped.
pub fn fallback_plan(retrieval: &RetrievalResult, original_query: &str) -> Plan {
    let mut tasks = Vec::new();
    for (i, sub_query) in retrieval.sub_queries.iter().enumerate() {
        let Some(best) = retrieval
            .per_sub_query
            .get(i)
            .and_then(|ranked| ranked.first())
        else {
            continue;
        };
        tasks.push(SubTask {
            task_id: format!("T{}", tasks.len() + 1),
            refined_query: sub_query.clone(),
            server_id: best.server_id.clone(),
            depends_on: vec![],
        });
    }
    Plan::new(original_query, tasks)
}

/// Plan via the provider with one validated retry, falling back to the
/// independent-task plan if both attempts fail.
pub async fn plan_dag(
    original_query: &str,
    retrieval: &RetrievalResult,
    provider: &dyn TextGenProvider,
) -> Plan {
    let allowed: BTreeSet<String> = retrieval
        .selected
        .iter()
        .map(|s| s.server_id.clone())
        .collect();
    let candidates: Vec<PlanCandidate> = retrieval
        .sub_queries
        .iter()
        .enumerate()
        .map(|(i, sq)| PlanCandidate {
            sub_query: sq.clone(),
            servers: retrieval
                .candidates_for(i)
                .into_iter()
                .filter(|s| allowed.contains(s))
                .collect(),
        })
        .collect();
    let base_prompt = prompts::plan_prompt(original_query, &candidates);

    let mut prompt = base_prompt.clone();
    for _attempt in 0..2 {
        let request = GenRequest {
            prompt: prompt.clone(),
            temperature: PLAN_TEMPERATURE,
        };
        let Ok(raw) = provider.generate(&request).await else {
            continue;
        };
        match parse_plan(&raw, original_query, &allowed) {
            Ok(plan) => return plan,
            Err(e) => {
                prompt = format!("{base_prompt}\nPrevious attempt was invalid: {e}. Correct it.");
            }
        }
    }
    fallback_plan(retrieval, original_query)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::ServerScore;
    use crate::provider::ScriptedTextGen;
    use proptest::prelude::*;

    fn block_on<F: std::future::Future>(fut: F) -> F::Output {
        tokio::runtime::Builder::new_current_thread()
            .build()
            .unwrap()
            .block_on(fut)
    }

    fn city_trip_plan_json() -> String {
        serde_json::json!({
            "tasks": {
                "T1": { "query": "weather in beijing tomorrow", "server": "city-weather" },
                "T2": { "query": "top attractions in beijing", "server": "city-attractions" },
                "T3": { "query": "hotels near city center", "server": "city-hotels" },
                "T4": { "query": "route covering {{T2.output}} starting from {{T3.output}}", "server": "city-routes" }
            },
            "dependency": ["T2->T4", "T3->T4"]
        })
        .to_string()
    }

    fn allowed() -> BTreeSet<String> {
        ["city-weather", "city-attractions", "city-hotels", "city-routes"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    #[test]
    fn parses_and_schedules_fan_in_plan() {
        let plan = parse_plan(&city_trip_plan_json(), "trip", &allowed()).unwrap();
        assert_eq!(plan.tasks.len(), 4);
        assert_eq!(plan.kind, PlanKind::Dag);
        assert_eq!(plan.get("T4").unwrap().depends_on, vec!["T2", "T3"]);
        let schedule = schedule(&plan).unwrap();
        assert_eq!(schedule.waves, vec![vec!["T1", "T2", "T3"], vec!["T4"]]);
    }

    #[test]
    fn wire_shape_round_trips() {
        let plan = parse_plan(&city_trip_plan_json(), "trip", &allowed()).unwrap();
        let wire = plan.to_wire().to_string();
        let again = parse_plan(&wire, "trip", &allowed()).unwrap();
        assert_eq!(again.task_ids(), plan.task_ids());
        assert_eq!(again.edges(), plan.edges());
        assert_eq!(
            plan.edges(),
            vec![
                ("T2".to_string(), "T4".to_string()),
                ("T3".to_string(), "T4".to_string())
            ]
        );
    }

    #[test]
    fn single_task_plan_kind() {
        let raw = serde_json::json!({
            "tasks": { "T1": { "query": "weather", "server": "city-weather" } },
            "dependency": []
        })
        .to_string();
        let plan = parse_plan(&raw, "weather", &allowed()).unwrap();
        assert_eq!(plan.kind, PlanKind::Single);
    }

    #[test]
    fn makespan_for_fan_in_plan() {
        let plan = parse_plan(&city_trip_plan_json(), "trip", &allowed()).unwrap();
        let latencies: BTreeMap<String, u64> = [
            ("T1".to_string(), 230),
            ("T2".to_string(), 620),
            ("T3".to_string(), 500),
            ("T4".to_string(), 300),
        ]
        .into();
        let estimate = predict_makespan(&plan, &latencies).unwrap();
        assert_eq!(estimate.sequential_ms, 1650);
        assert_eq!(estimate.parallel_ms, 920);
        assert!((estimate.reduction_percent() - 44.2).abs() < 0.1);
    }

    #[test]
    fn placeholder_reference_implies_edge() {
        let raw = serde_json::json!({
            "tasks": {
                "T1": { "query": "find station", "server": "city-weather" },
                "T2": { "query": "navigate to {{T1.output}}", "server": "city-routes" }
            },
            "dependency": []
        })
        .to_string();
        let plan = parse_plan(&raw, "q", &allowed()).unwrap();
        assert_eq!(plan.get("T2").unwrap().depends_on, vec!["T1"]);
    }

    #[test]
    fn rejects_unknown_server_and_dangling_ref_and_cycle() {
        let bad_server = serde_json::json!({
            "tasks": { "T1": { "query": "q", "server": "not-retrieved" } },
            "dependency": []
        })
        .to_string();
        assert!(matches!(
            parse_plan(&bad_server, "q", &allowed()),
            Err(PlanError::UnknownServer { .. })
        ));

        let dangling = serde_json::json!({
            "tasks": { "T1": { "query": "q", "server": "city-weather" } },
            "dependency": ["T1->T9"]
        })
        .to_string();
        assert!(matches!(
            parse_plan(&dangling, "q", &allowed()),
            Err(PlanError::UnknownTaskRef(_))
        ));

        let cyclic = serde_json::json!({
            "tasks": {
                "T1": { "query": "a", "server": "city-weather" },
                "T2": { "query": "b", "server": "city-hotels" }
            },
            "dependency": ["T1->T2", "T2->T1"]
        })
        .to_string();
        assert!(matches!(
            parse_plan(&cyclic, "q", &allowed()),
            Err(PlanError::Cycle(_))
        ));
    }

    #[test]
    fn numeric_aware_wave_ordering() {
        let tasks: Vec<SubTask> = (1..=11)
            .map(|i| SubTask {
                task_id: format!("T{i}"),
                refined_query: "q".into(),
                server_id: "s".into(),
                depends_on: vec![],
            })
            .collect();
        let plan = Plan::new("q", tasks);
        let s = schedule(&plan).unwrap();
        assert_eq!(s.waves.len(), 1);
        assert_eq!(s.waves[0][1], "T2");
        assert_eq!(s.waves[0][9], "T10");
    }

    #[test]
    fn placeholder_extraction() {
        assert_eq!(
            placeholder_refs("go via {{T2.output}} then {{ T10.output }}"),
            vec!["T2", "T10"]
        );
        assert!(placeholder_refs("no refs {{broken}}").is_empty());
    }

    fn retrieval_fixture() -> RetrievalResult {
        RetrievalResult {
            sub_queries: vec!["weather".into(), "hotels".into()],
            per_sub_query: vec![
                vec![
                    ServerScore { server_id: "city-weather".into(), score: 0.9 },
                    ServerScore { server_id: "city-routes".into(), score: 0.3 },
                ],
                vec![ServerScore { server_id: "city-hotels".into(), score: 0.8 }],
            ],
            pool: vec![],
            selected: vec![
                ServerScore { server_id: "city-weather".into(), score: 0.9 },
                ServerScore { server_id: "city-hotels".into(), score: 0.8 },
                ServerScore { server_id: "city-routes".into(), score: 0.3 },
            ],
        }
    }

    #[test]
    fn fallback_routes_each_sub_query_to_its_best() {
        let plan = fallback_plan(&retrieval_fixture(), "orig");
        assert_eq!(plan.tasks.len(), 2);
        assert_eq!(plan.tasks[0].server_id, "city-weather");
        assert_eq!(plan.tasks[1].server_id, "city-hotels");
        assert!(plan.tasks.iter().all(|t| t.depends_on.is_empty()));
    }

    #[test]
    fn plan_dag_retries_then_falls_back() {
        // First response routes to a non-candidate, second is unparseable:
        // both attempts fail, so the fallback plan appears.
        let provider = ScriptedTextGen::from_value(&serde_json::json!({
            "entries": [{
                "match": "Construct a task plan",
                "responses": [
                    "{\"tasks\": {\"T1\": {\"query\": \"q\", \"server\": \"rogue\"}}, \"dependency\": []}",
                    "not json"
                ]
            }]
        }))
        .unwrap();
        let plan = block_on(plan_dag("orig", &retrieval_fixture(), &provider));
        assert_eq!(plan.tasks.len(), 2);
        assert_eq!(plan.tasks[0].server_id, "city-weather");
    }

    #[test]
    fn plan_dag_accepts_valid_response() {
        let provider = ScriptedTextGen::from_value(&serde_json::json!({
            "entries": [{
                "match": "Construct a task plan",
                "responses": [serde_json::json!({
                    "tasks": {
                        "T1": { "query": "weather", "server": "city-weather" },
                        "T2": { "query": "hotels near {{T1.output}}", "server": "city-hotels" }
                    },
                    "dependency": ["T1->T2"]
                })
                .to_string()]
            }]
        }))
        .unwrap();
        let plan = block_on(plan_dag("orig", &retrieval_fixture(), &provider));
        assert_eq!(plan.get("T2").unwrap().depends_on, vec!["T1"]);
        let s = schedule(&plan).unwrap();
        assert_eq!(s.waves, vec![vec!["T1"], vec!["T2"]]);
    }

    #[test]
    fn simple_route_requires_one_confident_intent() {
        let mut r = retrieval_fixture();
        assert!(!is_simple_route(&r)); // two sub-queries
        r.sub_queries = vec!["weather".into()];
        assert!(is_simple_route(&r)); // top score 0.9
        r.selected[0].score = 0.2;
        assert!(!is_simple_route(&r)); // not confident
    }

    /// Longest-path oracle computed recursively, independent of the DP.
    fn longest_path(plan: &Plan, latency: &BTreeMap<String, u64>) -> u64 {
        fn finish(
            id: &str,
            plan: &Plan,
            latency: &BTreeMap<String, u64>,
            memo: &mut BTreeMap<String, u64>,
        ) -> u64 {
            if let Some(v) = memo.get(id) {
                return *v;
            }
            let task = plan.get(id).unwrap();
            let ready = task
                .depends_on
                .iter()
                .map(|d| finish(d, plan, latency, memo))
                .max()
                .unwrap_or(0);
            let value = ready + latency.get(id).copied().unwrap_or(0);
            memo.insert(id.to_string(), value);
            value
        }
        let mut memo = BTreeMap::new();
        plan.tasks
            .iter()
            .map(|t| finish(&t.task_id, plan, latency, &mut memo))
            .max()
            .unwrap_or(0)
    }

    proptest! {
        /// Random forward-edge DAGs: waves respect dependencies, every task
        /// appears exactly once, and the parallel estimate equals the
        /// longest-path oracle while never exceeding the sequential one.
        #[test]
        fn schedule_and_makespan_properties(
            n in 1usize..12,
            edge_bits in proptest::collection::vec(any::<bool>(), 66),
            lat in proptest::collection::vec(10u64..600, 12),
        ) {
            let mut tasks: Vec<SubTask> = (1..=n)
                .map(|i| SubTask {
                    task_id: format!("T{i}"),
                    refined_query: "q".into(),
                    server_id: "s".into(),
                    depends_on: vec![],
                })
                .collect();
            // Edges only from lower to higher index: acyclic by construction.
            let mut bit = 0;
            for i in 0..n {
                for j in (i + 1)..n {
                    if edge_bits[bit % edge_bits.len()] {
                        tasks[j].depends_on.push(format!("T{}", i + 1));
                    }
                    bit += 1;
                }
            }
            let plan = Plan::new("q", tasks);
            let schedule = schedule(&plan).unwrap();

            let wave_of = schedule.wave_of();
            prop_assert_eq!(wave_of.len(), n);
            for task in &plan.tasks {
                for dep in &task.depends_on {
                    prop_assert!(wave_of[dep] < wave_of[&task.task_id]);
                }
            }

            let latency: BTreeMap<String, u64> = (1..=n)
                .map(|i| (format!("T{i}"), lat[i - 1]))
                .collect();
            let estimate = predict_makespan(&plan, &latency).unwrap();
            prop_assert!(estimate.parallel_ms <= estimate.sequential_ms);
            prop_assert_eq!(estimate.parallel_ms, longest_path(&plan, &latency));
            prop_assert_eq!(
                estimate.sequential_ms,
                latency.values().sum::<u64>()
            );
        }
    }
}
