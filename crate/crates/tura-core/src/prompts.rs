//! Prompt templates for every model-backed stage.
//!
//! Each template opens with a fixed marker line. Providers that dispatch on
//! prompt content (scripted replay, the rule-based fallback) key off these
//! markers, so they are public constants rather than inline literals.

use crate::registry::ServerDescriptor;

pub const MARK_DECOMPOSE: &str = "Decompose the user query";
pub const MARK_SYNTH: &str = "Generate synthetic user queries";
pub const MARK_PLAN: &str = "Construct a task plan";
pub const MARK_EXECUTE: &str = "Decide the next step";

/// Collapse text to one line so prompt history stays line-oriented.
pub fn single_line(text: &str) -> String {
    text.replace(['\n', '\r'], " / ")
}

/// Ask for `count` user-voiced queries that the given server could answer.
/// High temperature is expected: the point is phrasing diversity.
pub fn synthetic_query_prompt(descriptor: &ServerDescriptor, count: usize) -> String {
    let tools: Vec<String> = descriptor
        .tools
        .iter()
        .map(|t| format!("- {}: {}", t.name, t.description))
        .collect();
    format!(
        "{MARK_SYNTH} for a tool server.\n\
         The queries must read like real search-box requests a person would type,\n\
         varied in phrasing and specificity, each answerable by this server alone.\n\
         Server: {id}\n\
         Description: {desc}\n\
         Tools:\n{tools}\n\
         Count: {count}\n\
         Respond with a JSON array of exactly {count} strings and nothing else.",
        id = descriptor.server_id,
        desc = single_line(&descriptor.description),
        tools = tools.join("\n"),
    )
}

/// Ask for the minimal set of independent sub-queries covering the query.
pub fn decompose_prompt(query: &str) -> String {
    format!(
        "{MARK_DECOMPOSE} into the smallest set of self-contained sub-queries.\n\
         Each sub-query must express exactly one intent and keep every detail\n\
         (places, dates, constraints) it needs to stand alone. Do not invent\n\
         intents that are not in the query; a single-intent query maps to a\n\
         one-element list.\n\
         Example query: Book a flight to Shanghai for next week and find some recommended restaurants in Shanghai.\n\
         Example answer: [\"Book a flight to Shanghai for next week\", \"Find recommended restaurants in Shanghai\"]\n\
         Query: {q}\n\
         Respond with a JSON array of strings and nothing else.",
        q = single_line(query),
    )
}

/// One retrieval candidate line fed to the planner.
pub struct PlanCandidate {
    pub sub_query: String,
    /// Server ids ranked best-first.
    pub servers: Vec<String>,
}

/// Ask for a dependency-aware task plan over the retrieved servers.
pub fn plan_prompt(original_query: &str, candidates: &[PlanCandidate]) -> String {
    let lines: Vec<String> = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| {
            format!(
                "Sub-query {n}: {q} | candidates: {s}",
                n = i + 1,
                q = single_line(&c.sub_query),
                s = c.servers.join(", "),
            )
        })
        .collect();
    format!(
        "{MARK_PLAN} that answers the whole query using the candidate servers.\n\
         Break the work into tasks T1..Tn. Each task holds a refined query and\n\
         the single server that should execute it. If one task needs another's\n\
         output, reference it as {{{{Tk.output}}}} inside the refined query and\n\
         declare the edge in `dependency` as \"Tk->Tm\" (Tk runs first).\n\
         Tasks without edges between them run in parallel. Use only listed\n\
         servers; keep the plan minimal.\n\
         Original query: {q}\n\
         {lines}\n\
         Respond with one JSON object shaped like\n\
         {{\"tasks\": {{\"T1\": {{\"query\": \"...\", \"server\": \"...\"}}}}, \"dependency\": [\"T1->T2\"]}}\n\
         and nothing else.",
        q = single_line(original_query),
        lines = lines.join("\n"),
    )
}

/// Ask for the next thought/action given the task and history so far.
pub fn execute_prompt(server_id: &str, task: &str, tools_json: &str, history: &str) -> String {
    format!(
        "{MARK_EXECUTE} for one task against a single tool server.\n\
         Call tools only from the list below. When an observation already\n\
         answers the task, stop with a final answer instead of another call.\n\
         Server: {server_id}\n\
         Task: {task}\n\
         Available tools:\n{tools_json}\n\
         History:\n{history}\n\
         Respond with one JSON object shaped like\n\
         {{\"thought\": \"...\", \"action\": {{\"type\": \"tool_call\", \"tool\": \"...\", \"params\": {{}}}}}}\n\
         or {{\"thought\": \"...\", \"action\": {{\"type\": \"final\", \"answer\": \"...\"}}}}\n\
         and nothing else.",
        task = single_line(task),
    )
}
