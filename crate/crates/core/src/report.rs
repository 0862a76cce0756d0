//! Canonical JSON rendering for reports.
//!
//! Output must be byte-identical across runs with the same configuration and
//! seed, so objects print with sorted keys and every float prints with 17
//! significant digits (`{:.16e}`), independent of its value.

use serde_json::Value;

/// Render a JSON value canonically: sorted object keys, fixed float format.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(value, &mut out);
    out
}

/// Serialize any report type and render it canonically.
pub fn to_canonical_json<T: serde::Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("report serializes");
    canonical_json(&v)
}

fn write_value(value: &Value, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                let f = n.as_f64().expect("number is i64, u64, or f64");
                out.push_str(&format_float(f));
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("strings escape"));
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            // serde_json's default map is a BTreeMap, so iteration is
            // already key-sorted; sort defensively in case the feature set
            // changes.
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, key) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(key).expect("strings escape"));
                out.push(':');
                write_value(&map[*key], out);
            }
            out.push('}');
        }
    }
}

/// 17 significant digits, scientific notation. JSON numbers cannot carry
/// NaN or infinity; those arrive here only if a report failed to guard them.
pub fn format_float(f: f64) -> String {
    format!("{f:.16e}")
}
