//! Minimal JSON Schema checker covering the keywords used in `schemas/`.

use std::path::Path;

use serde_json::Value;

pub fn load(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{name}.schema.json"));
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn type_matches(t: &str, v: &Value) -> bool {
    match t {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "integer" => v.is_u64() || v.is_i64(),
        "number" => v.is_number(),
        "boolean" => v.is_boolean(),
        "null" => v.is_null(),
        _ => false,
    }
}

/// Returns every violation, each prefixed by its JSON path.
pub fn validate(schema: &Value, v: &Value) -> Vec<String> {
    let mut errors = Vec::new();
    walk(schema, v, "$", &mut errors);
    errors
}

fn walk(schema: &Value, v: &Value, at: &str, errors: &mut Vec<String>) {
    let mut fail = |msg: String| errors.push(format!("{at}: {msg}"));
    match schema.get("type") {
        Some(Value::String(t)) if !type_matches(t, v) => fail(format!("expected {t}")),
        Some(Value::Array(ts)) if !ts.iter().any(|t| type_matches(t.as_str().unwrap(), v)) => {
            fail(format!("expected one of {ts:?}"))
        }
        _ => {}
    }
    if let Some(Value::Array(options)) = schema.get("enum") {
        if !options.contains(v) {
            fail(format!("{v} not in enum"));
        }
    }
    if let (Some(min), Some(x)) = (schema.get("minimum").and_then(Value::as_f64), v.as_f64()) {
        if x < min {
            fail(format!("{x} below {min}"));
        }
    }
    if let (Some(max), Some(x)) = (schema.get("maximum").and_then(Value::as_f64), v.as_f64()) {
        if x > max {
            fail(format!("{x} above {max}"));
        }
    }
    if let Some(obj) = v.as_object() {
        if let Some(Value::Array(req)) = schema.get("required") {
            for key in req.iter().filter_map(Value::as_str) {
                if !obj.contains_key(key) {
                    fail(format!("missing key {key}"));
                }
            }
        }
        let props = schema.get("properties").and_then(Value::as_object);
        for (key, child) in obj {
            match props.and_then(|p| p.get(key)) {
                Some(s) => walk(s, child, &format!("{at}.{key}"), errors),
                None => match schema.get("additionalProperties") {
                    Some(Value::Bool(false)) => errors.push(format!("{at}: unexpected key {key}")),
                    Some(s @ Value::Object(_)) => walk(s, child, &format!("{at}.{key}"), errors),
                    _ => {}
                },
            }
        }
    }
    if let Some(items) = v.as_array() {
        let len = items.len() as u64;
        if schema.get("minItems").and_then(Value::as_u64).is_some_and(|m| len < m) {
            errors.push(format!("{at}: too few items"));
        }
        if schema.get("maxItems").and_then(Value::as_u64).is_some_and(|m| len > m) {
            errors.push(format!("{at}: too many items"));
        }
        if let Some(s) = schema.get("items") {
            for (i, item) in items.iter().enumerate() {
                walk(s, item, &format!("{at}[{i}]"), errors);
            }
        }
    }
}
