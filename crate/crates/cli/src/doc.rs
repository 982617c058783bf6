//! JSON documents in which every number sits under a `provenance` tag.

use serde::Serialize;
use serde_json::{Map, Value};

pub const PROVENANCE: &str = "provenance";

/// Allowed provenance kinds, as a tag string or as the `kind` of a tag object.
pub const KINDS: [&str; 6] = ["input", "formula", "probe", "literature", "rule", "assumption"];

pub fn tagged<T: Serialize>(value: &T, provenance: &str) -> Value {
    with_provenance(serde_json::to_value(value).expect("report types serialize"), provenance)
}

/// Adds the tag to an object, or wraps a non-object as `{value: ..}`.
pub fn with_provenance(v: Value, provenance: &str) -> Value {
    let mut m = match v {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("value".into(), other);
            m
        }
    };
    m.insert(PROVENANCE.into(), provenance.into());
    Value::Object(m)
}

pub fn entries(items: Vec<Value>, provenance: &str) -> Value {
    let mut m = Map::new();
    m.insert("entries".into(), Value::Array(items));
    m.insert(PROVENANCE.into(), provenance.into());
    Value::Object(m)
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn render(doc: &Value) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("json values render");
    s.push('\n');
    s
}

fn valid_tag(v: &Value) -> bool {
    match v {
        Value::String(s) => KINDS.contains(&s.as_str()),
        Value::Object(m) => m.get("kind").and_then(Value::as_str).is_some_and(|k| KINDS.contains(&k)),
        _ => false,
    }
}

/// JSON pointers of numbers with no valid `provenance` on themselves or an
/// enclosing object, plus pointers of malformed tags.
pub fn lint(doc: &Value) -> Vec<String> {
    let mut bad = Vec::new();
    walk(doc, String::new(), false, &mut bad);
    bad
}

fn walk(v: &Value, path: String, covered: bool, bad: &mut Vec<String>) {
    match v {
        Value::Number(_) if !covered => bad.push(path),
        Value::Object(m) => {
            let mut covered = covered;
            if let Some(tag) = m.get(PROVENANCE) {
                if valid_tag(tag) {
                    covered = true;
                } else {
                    bad.push(format!("{path}/{PROVENANCE}"));
                }
            }
            for (k, x) in m {
                if k != PROVENANCE {
                    walk(x, format!("{path}/{k}"), covered, bad);
                }
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                walk(x, format!("{path}/{i}"), covered, bad);
            }
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn lint_finds_bare_numbers() {
        let doc = json!({"a": {"provenance": "probe", "x": [1, 2]}, "b": {"y": 3}, "c": "text"});
        assert_eq!(lint(&doc), vec!["/b/y".to_string()]);
    }

    #[test]
    fn lint_accepts_provenance_objects_and_rejects_unknown_kinds() {
        let ok = json!({"facts": [{"h": 2, "provenance": {"kind": "rule", "premises": [0]}}]});
        assert!(lint(&ok).is_empty());
        let bad = json!({"provenance": "hunch", "h": 1});
        assert_eq!(lint(&bad), vec!["/provenance".to_string(), "/h".to_string()]);
    }

    #[test]
    fn wrapping_scalars() {
        let v = with_provenance(json!(5), "formula");
        assert_eq!(v, json!({"value": 5, "provenance": "formula"}));
    }
}
