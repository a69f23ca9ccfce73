//! `--override key.path=value` handling: edits applied to the parsed config
//! document before validation, so sweeps can vary parameters without
//! duplicating config files.

use serde_json::Value;

use crate::error::CliError;

/// Apply one `key.path=value` override. Path segments descend into objects
/// by key and into arrays by index; the value is parsed as JSON, falling
/// back to a bare string.
pub fn apply_override(doc: &mut Value, spec: &str) -> Result<(), CliError> {
    let (path, raw_value) = spec.split_once('=').ok_or_else(|| {
        CliError::Usage(format!("override '{spec}' is not of the form key=value"))
    })?;
    let value: Value = serde_json::from_str(raw_value)
        .unwrap_or_else(|_| Value::String(raw_value.to_string()));

    let segments: Vec<&str> = path.split('.').collect();
    if segments.is_empty() || segments.iter().any(|s| s.is_empty()) {
        return Err(CliError::Usage(format!("override path '{path}' is empty or malformed")));
    }

    let mut cursor = doc;
    for (depth, segment) in segments.iter().enumerate() {
        let last = depth == segments.len() - 1;
        match cursor {
            Value::Object(map) => {
                if last {
                    map.insert(segment.to_string(), value);
                    return Ok(());
                }
                cursor = map.entry(segment.to_string()).or_insert(Value::Null);
            }
            Value::Array(items) => {
                let index: usize = segment.parse().map_err(|_| {
                    CliError::Usage(format!(
                        "override path '{path}': '{segment}' is not an array index"
                    ))
                })?;
                if index >= items.len() {
                    return Err(CliError::Usage(format!(
                        "override path '{path}': index {index} out of bounds ({} elements)",
                        items.len()
                    )));
                }
                if last {
                    items[index] = value;
                    return Ok(());
                }
                cursor = &mut items[index];
            }
            _ => {
                return Err(CliError::Usage(format!(
                    "override path '{path}': '{segment}' does not address an object or array"
                )));
            }
        }
    }
    unreachable!("loop returns on the last segment")
}
