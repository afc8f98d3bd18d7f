//! Versioned JSON reports.

use bvattack_core::bv::QueryCount;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const SCHEMA: &str = "bvattack-report/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: f64,
    pub threads: usize,
}

/// Fields are written in declaration order; map entries in insertion
/// order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub command: String,
    pub invocation: Map<String, Value>,
    pub result: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queries: Option<QueryCount>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl Report {
    pub fn new(command: &str, invocation: Map<String, Value>, result: Value, queries: Option<QueryCount>) -> Self {
        Report { schema: SCHEMA.to_string(), command: command.to_string(), invocation, result, queries, timing: None }
    }

    pub fn render(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("reports serialize");
        text.push('\n');
        text
    }

    pub fn parse(text: &str) -> serde_json::Result<Report> {
        serde_json::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn round_trip_keeps_field_order() {
        let mut inv = Map::new();
        inv.insert("seed".into(), json!(7));
        inv.insert("p".into(), json!(24));
        let r = Report::new("lsfind", inv, json!({"verdict": "No", "a": [1, 2]}), Some(QueryCount { quantum: 24, classical: 0 }));
        let text = r.render();
        assert_eq!(Report::parse(&text).unwrap(), r);
        assert!(text.find("\"seed\"").unwrap() < text.find("\"p\"").unwrap());
        assert!(text.find("\"schema\"").unwrap() < text.find("\"command\"").unwrap());
        assert!(!text.contains("timing"));
    }
}
