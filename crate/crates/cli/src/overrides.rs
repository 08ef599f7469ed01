//! `--set key=value` and flag overrides applied to the raw JSON config.

use serde_json::{json, Map, Value};

/// Short keys accepted by `--set` in place of a full dotted path.
const ALIASES: &[(&str, &str)] = &[
    ("mode", "allocator.mode"),
    ("l", "allocator.l"),
    ("gamma", "allocator.gamma"),
    ("a_m", "allocator.a_m"),
    ("theta_init", "allocator.theta_init"),
    ("lambda_bar", "allocator.lambda_bar"),
    ("duration", "scenario.duration"),
    ("seed", "scenario.seed"),
    ("x0_jitter", "scenario.x0_jitter"),
];

fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Sets `path` (dot-separated, numeric segments index arrays) to `value`,
/// creating intermediate objects as needed.
pub fn set_path(root: &mut Value, path: &str, value: Value) -> Result<(), String> {
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(format!("malformed key '{path}'"));
    }
    let mut node = root;
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        node = match node {
            Value::Array(items) => {
                let idx: usize = seg
                    .parse()
                    .map_err(|_| format!("'{seg}' in '{path}' must index an array"))?;
                let len = items.len();
                items
                    .get_mut(idx)
                    .ok_or_else(|| format!("index {idx} out of range (length {len}) in '{path}'"))?
            }
            Value::Object(map) => map.entry(seg.to_string()).or_insert_with(|| {
                if last {
                    Value::Null
                } else {
                    Value::Object(Map::new())
                }
            }),
            _ => return Err(format!("'{path}' descends into a non-container value")),
        };
    }
    *node = value;
    Ok(())
}

/// Applies one `key=value` assignment.
pub fn apply_assignment(root: &mut Value, assignment: &str) -> Result<(), String> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got '{assignment}'"))?;
    let key = key.trim();
    let path = ALIASES
        .iter()
        .find(|(alias, _)| *alias == key)
        .map_or(key, |(_, full)| full);
    set_path(root, path, parse_value(raw.trim()))
}

/// Moves the first fault, or creates one when both time and level are given.
pub fn apply_fault(root: &mut Value, time: Option<f64>, level: Option<f64>) -> Result<(), String> {
    if time.is_none() && level.is_none() {
        return Ok(());
    }
    let scenario = root
        .get_mut("scenario")
        .and_then(Value::as_object_mut)
        .ok_or("config has no scenario section")?;
    let faults = scenario.entry("faults").or_insert_with(|| json!([]));
    let list = faults
        .as_array_mut()
        .ok_or("scenario.faults must be a list")?;
    match list.first_mut() {
        Some(first) => {
            if let Some(t) = time {
                first["time"] = json!(t);
            }
            if let Some(l) = level {
                first["effectiveness"] = json!(l);
            }
        }
        None => match (time, level) {
            (Some(t), Some(l)) => list.push(json!({ "time": t, "effectiveness": l })),
            _ => {
                return Err("config has no fault; give both --fault-time and --fault-level".into())
            }
        },
    }
    Ok(())
}
