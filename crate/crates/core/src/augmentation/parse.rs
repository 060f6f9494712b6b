//! Recovery of JSONL records from free-form completion text.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::AugmentError;
use crate::corpus::{CodeCommentPair, Label};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseReject {
    pub line: usize,
    pub text: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedGeneration {
    pub pairs: Vec<CodeCommentPair>,
    pub rejects: Vec<ParseReject>,
}

fn record_from_json(v: &Value) -> Result<(Option<String>, String, String, Option<Label>), String> {
    let obj = v.as_object().ok_or("not a JSON object")?;
    let field = |k: &str| -> Result<String, String> {
        obj.get(k)
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| format!("missing string field {k:?}"))
    };
    let code = field("code")?;
    let comment = field("comment")?;
    let label = match obj.get("label") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.parse::<Label>().map_err(|e| e.to_string())?),
        Some(_) => return Err("label must be a string".into()),
    };
    let id = obj.get("id").and_then(|v| match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    });
    Ok((id, code, comment, label))
}

/// Scans `raw` line by line. Lines that look like JSON objects are parsed
/// against the corpus schema; failures become rejects. All other lines
/// (prose, code fences) are skipped. Records without an id get `gen-<k>`;
/// repeated ids get a `-<k>` suffix.
pub fn parse_generation(raw: &str) -> Result<ParsedGeneration, AugmentError> {
    let mut seen = std::collections::HashSet::new();
    let mut pairs = Vec::new();
    let mut rejects = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        let t = line.trim().trim_end_matches(',');
        if !t.starts_with('{') {
            continue;
        }
        let parsed = serde_json::from_str::<Value>(t)
            .map_err(|e| e.to_string())
            .and_then(|v| record_from_json(&v));
        match parsed {
            Ok((id, code, comment, label)) => {
                let mut id = id.unwrap_or_else(|| format!("gen-{}", pairs.len()));
                while seen.contains(&id) {
                    id = format!("{id}-{}", pairs.len());
                }
                seen.insert(id.clone());
                pairs.push(CodeCommentPair::new(id, &code, &comment, label));
            }
            Err(reason) => rejects.push(ParseReject {
                line: i + 1,
                text: line.to_string(),
                reason,
            }),
        }
    }
    if pairs.is_empty() {
        return Err(AugmentError::NoRecordsFound {
            rejected: rejects.len(),
        });
    }
    Ok(ParsedGeneration { pairs, rejects })
}
