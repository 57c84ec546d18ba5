//! Tolerant extraction of JSON payloads from model output.
//!
//! LLM responses routinely wrap the requested JSON in prose, markdown code
//! fences, or trailing commentary. The helpers here locate the first
//! balanced JSON object/array in a blob of text and parse it, so callers
//! only deal with well-formed values or a single error.

use serde_json::Value;

/// Strip markdown code fences (```json ... ``` or ``` ... ```) in place,
/// keeping the fenced body. Text outside fences is preserved.
pub fn strip_code_fences(text: &str) -> String {
    if !text.contains("```") {
        return text.to_string();
    }
    let mut out = String::with_capacity(text.len());
    for (i, chunk) in text.split("```").enumerate() {
        if i % 2 == 0 {
            out.push_str(chunk);
        } else {
            // Inside a fence: drop an optional language tag on the first line.
            match chunk.split_once('\n') {
                Some((first, rest)) if first.trim().chars().all(|c| c.is_ascii_alphanumeric()) => {
                    out.push_str(rest);
                }
                _ => out.push_str(chunk),
            }
        }
    }
    out
}

/// Find the first balanced JSON object in `text` and parse it.
///
/// Scans for `{`, tracks brace depth while respecting string literals and
/// escapes, and tries successively later start positions if an earlier
/// candidate fails to parse.
pub fn extract_json_object(text: &str) -> Option<Value> {
    extract_balanced(&strip_code_fences(text), '{', '}')
}

/// Find the first balanced JSON array in `text` and parse it.
pub fn extract_json_array(text: &str) -> Option<Value> {
    extract_balanced(&strip_code_fences(text), '[', ']')
}

fn extract_balanced(text: &str, open: char, close: char) -> Option<Value> {
    let bytes: Vec<char> = text.chars().collect();
    let mut start = 0;
    while let Some(offset) = bytes[start..].iter().position(|&c| c == open) {
        let begin = start + offset;
        if let Some(end) = scan_balanced(&bytes, begin, open, close) {
            let candidate: String = bytes[begin..=end].iter().collect();
            if let Ok(value) = serde_json::from_str::<Value>(&candidate) {
                return Some(value);
            }
        }
        start = begin + 1;
        if start >= bytes.len() {
            break;
        }
    }
    None
}

/// Return the index of the matching close delimiter, or None if unbalanced.
fn scan_balanced(chars: &[char], begin: usize, open: char, close: char) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &c) in chars.iter().enumerate().skip(begin) {
        if in_string {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            c if c == open => depth += 1,
            c if c == close => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// Extract every double-quoted string literal from raw text.
///
/// Last-resort recovery when a provider was asked for a JSON string list
/// but returned something unparseable; quoted spans usually survive.
pub fn extract_quoted_strings(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut in_string = false;
    let mut escaped = false;
    for c in text.chars() {
        if !in_string {
            if c == '"' {
                in_string = true;
                current.clear();
            }
            continue;
        }
        if escaped {
            match c {
                'n' => current.push('\n'),
                't' => current.push('\t'),
                other => current.push(other),
            }
            escaped = false;
        } else if c == '\\' {
            escaped = true;
        } else if c == '"' {
            out.push(current.clone());
            in_string = false;
        } else {
            current.push(c);
        }
    }
    out
}

/// Parse model output expected to be a JSON array of strings.
///
/// Accepts a bare array, an array wrapped in prose/fences, or an object with
/// a single array-of-strings field. Returns trimmed, non-empty strings.
pub fn parse_string_list(text: &str) -> Option<Vec<String>> {
    let value = extract_json_array(text).or_else(|| {
        extract_json_object(text).and_then(|obj| {
            obj.as_object().and_then(|map| {
                map.values()
                    .find(|v| v.is_array())
                    .cloned()
            })
        })
    })?;
    let arr = value.as_array()?;
    let mut out = Vec::with_capacity(arr.len());
    for item in arr {
        let s = item.as_str()?;
        let trimmed = s.trim();
        if !trimmed.is_empty() {
            out.push(trimmed.to_string());
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn object_inside_prose_and_fences() {
        let text = "Sure! Here is the plan:\n```json\n{\"tasks\": [\"a\", \"b\"]}\n```\nLet me know.";
        let v = extract_json_object(text).unwrap();
        assert_eq!(v["tasks"][0], "a");
    }

    #[test]
    fn object_with_nested_braces_and_strings() {
        let text = r#"note { invalid, then {"x": {"y": "brace } in string"}, "z": 1}"#;
        let v = extract_json_object(text).unwrap();
        assert_eq!(v["z"], 1);
        assert_eq!(v["x"]["y"], "brace } in string");
    }

    #[test]
    fn bare_array() {
        let v = extract_json_array(r#"["one", "two"]"#).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 2);
    }

    #[test]
    fn no_json_returns_none() {
        assert!(extract_json_object("no structured data here").is_none());
        assert!(extract_json_array("still nothing").is_none());
    }

    #[test]
    fn quoted_string_recovery() {
        let text = "queries: \"first one\", junk, \"second \\\"quoted\\\" one\"";
        let got = extract_quoted_strings(text);
        assert_eq!(got, vec!["first one", "second \"quoted\" one"]);
    }

    #[test]
    fn string_list_from_array_or_wrapped_object() {
        assert_eq!(
            parse_string_list("[\" a \", \"b\", \"\"]").unwrap(),
            vec!["a", "b"]
        );
        assert_eq!(
            parse_string_list("{\"queries\": [\"q1\", \"q2\"]}").unwrap(),
            vec!["q1", "q2"]
        );
        assert!(parse_string_list("[1, 2]").is_none());
    }

    #[test]
    fn fence_without_language_tag() {
        let text = "```\n{\"k\": 3}\n```";
        assert_eq!(extract_json_object(text).unwrap()["k"], 3);
    }
}
