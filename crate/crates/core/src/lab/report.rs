//! Machine-readable report output.
//!
//! JSON: `{"schema_version": 1, "kind": ..., "params": {...}, "rows": [...]}`.
//! CSV: one header line of flattened row keys (nested objects joined with `.`), then one line
//! per row. Keys keep the field order of the row type.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Report<P: Serialize, R: Serialize> {
    pub schema_version: u32,
    pub kind: &'static str,
    pub params: P,
    pub rows: Vec<R>,
}

impl<P: Serialize, R: Serialize> Report<P, R> {
    pub fn new(kind: &'static str, params: P, rows: Vec<R>) -> Self {
        Self { schema_version: SCHEMA_VERSION, kind, params, rows }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_csv(&self) -> Result<String> {
        rows_to_csv(&self.rows)
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), x, out);
            }
        }
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// Rows as CSV; every row must flatten to the same keys.
pub fn rows_to_csv<R: Serialize>(rows: &[R]) -> Result<String> {
    let mut header: Option<Vec<String>> = None;
    let mut s = String::new();
    for r in rows {
        let v = serde_json::to_value(r).map_err(|e| Error::Io(e.to_string()))?;
        let v = match v {
            Value::Object(_) => v,
            other => Value::Object(Map::from_iter([("value".to_string(), other)])),
        };
        let mut cells = Vec::new();
        flatten("", &v, &mut cells);
        let keys: Vec<String> = cells.iter().map(|(k, _)| k.clone()).collect();
        match &header {
            None => {
                s.push_str(&keys.join(","));
                s.push('\n');
                header = Some(keys);
            }
            Some(h) if *h != keys => return Err(Error::Io("rows do not share one column set".into())),
            Some(_) => {}
        }
        let vals: Vec<String> = cells.into_iter().map(|(_, v)| v).collect();
        s.push_str(&vals.join(","));
        s.push('\n');
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Inner {
        value: f64,
        uncertainty: f64,
    }

    #[derive(Serialize)]
    struct Row {
        n: usize,
        loc: Inner,
        bound: Option<f64>,
    }

    #[test]
    fn csv_flattens_nested_fields() {
        let rows = vec![
            Row { n: 2, loc: Inner { value: 0.5, uncertainty: 0.1 }, bound: None },
            Row { n: 4, loc: Inner { value: 0.25, uncertainty: 0.0 }, bound: Some(1.0) },
        ];
        let csv = rows_to_csv(&rows).unwrap();
        assert_eq!(csv, "n,loc.value,loc.uncertainty,bound\n2,0.5,0.1,\n4,0.25,0.0,1.0\n");
    }

    #[test]
    fn json_carries_schema_version() {
        let r = Report::new("demo", serde_json::json!({"n": 2}), vec![1, 2]);
        let v: Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["rows"][1], 2);
    }
}
