//! Quality control for generated pairs: duplicate, incompleteness and
//! ambiguity checks, applied in that order.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{CodeCommentPair, Dataset, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QcRule {
    Duplicate,
    Incomplete,
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub pair: CodeCommentPair,
    pub rule: QcRule,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleCounts {
    pub duplicate: usize,
    pub incomplete: usize,
    pub ambiguous: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntakeReport {
    pub accepted: Dataset,
    pub rejected: Vec<Rejection>,
    pub counts: RuleCounts,
}

impl IntakeReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "input": self.accepted.pairs.len() + self.rejected.len(),
            "accepted": self.accepted.pairs.len(),
            "rejected": self.rejected.len(),
            "counts": self.counts,
            "rejections": self.rejected,
        })
    }
}

pub const C_KEYWORDS: [&str; 32] = [
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else",
    "enum", "extern", "float", "for", "goto", "if", "int", "long", "register", "return", "short",
    "signed", "sizeof", "static", "struct", "switch", "typedef", "union", "unsigned", "void",
    "volatile", "while",
];

const PLACEHOLDERS: [&str; 14] = [
    "todo",
    "tbd",
    "fixme",
    "xxx",
    "placeholder",
    "comment",
    "<comment>",
    "[comment]",
    "n/a",
    "na",
    "comment here",
    "your comment here",
    "insert comment here",
    "add comment here",
];

/// Whitespace runs collapse to one space; ends trimmed.
pub fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Removes `//`, `/* */` and leading `*` markers from each comment line.
pub fn strip_comment_markers(comment: &str) -> String {
    let mut out = Vec::new();
    for line in comment.lines() {
        let mut l = line.trim();
        for prefix in ["///", "//!", "//", "/**", "/*"] {
            if let Some(rest) = l.strip_prefix(prefix) {
                l = rest;
                break;
            }
        }
        l = l.trim_end().trim_end_matches("*/").trim();
        l = l.trim_start_matches('*').trim();
        if !l.is_empty() {
            out.push(l);
        }
    }
    out.join(" ")
}

fn is_placeholder(stripped: &str) -> bool {
    let t = stripped.trim();
    if t.is_empty() || t.chars().all(|c| c == '.' || c == '…' || c.is_whitespace()) {
        return true;
    }
    let lower = t.to_lowercase();
    let lower = lower.trim_end_matches(['.', ':', '!']);
    PLACEHOLDERS.contains(&lower)
}

/// Checks `{}` and `()` nesting outside string/char literals and comments.
pub fn balanced_delimiters(code: &str) -> bool {
    let mut braces: i64 = 0;
    let mut parens: i64 = 0;
    let chars: Vec<char> = code.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '"' | '\'' => {
                let quote = c;
                i += 1;
                while i < chars.len() && chars[i] != quote {
                    if chars[i] == '\\' {
                        i += 1;
                    }
                    i += 1;
                }
                if i >= chars.len() {
                    return false;
                }
            }
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '/' if chars.get(i + 1) == Some(&'*') => {
                i += 2;
                while i + 1 < chars.len() && !(chars[i] == '*' && chars[i + 1] == '/') {
                    i += 1;
                }
                if i + 1 >= chars.len() {
                    return false;
                }
                i += 1;
            }
            '{' => braces += 1,
            '}' => braces -= 1,
            '(' => parens += 1,
            ')' => parens -= 1,
            _ => {}
        }
        if braces < 0 || parens < 0 {
            return false;
        }
        i += 1;
    }
    braces == 0 && parens == 0
}

/// At least one of `;`, `{`, `#include` or a C keyword as a whole word.
pub fn looks_like_c(code: &str) -> bool {
    if code.contains(';') || code.contains('{') || code.contains("#include") {
        return true;
    }
    code.split(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .any(|w| C_KEYWORDS.contains(&w))
}

/// Number of ASCII-alphabetic words once comment markers and surrounding
/// punctuation are removed.
pub fn english_word_count(comment: &str) -> usize {
    strip_comment_markers(comment)
        .split_whitespace()
        .map(|w| w.trim_matches(|c: char| c.is_ascii_punctuation()))
        .filter(|w| !w.is_empty() && w.chars().all(|c| c.is_ascii_alphabetic()))
        .count()
}

fn incomplete_reason(p: &CodeCommentPair) -> Option<String> {
    if p.code.trim().is_empty() {
        return Some("empty code".into());
    }
    if p.comment.trim().is_empty() {
        return Some("empty comment".into());
    }
    if !balanced_delimiters(&p.code) {
        return Some("unbalanced delimiters in code".into());
    }
    if is_placeholder(&strip_comment_markers(&p.comment)) {
        return Some("placeholder comment".into());
    }
    None
}

fn ambiguous_reason(p: &CodeCommentPair) -> Option<String> {
    if !looks_like_c(&p.code) {
        return Some("code does not look like C".into());
    }
    let words = english_word_count(&p.comment);
    if words < 2 {
        return Some(format!("comment has {words} English word(s)"));
    }
    None
}

/// Applies Duplicate, Incomplete and Ambiguous checks in order; each
/// rejected pair carries the first rule it fails. Duplicates are detected on
/// whitespace-normalised `(code, comment)` against `existing` and every
/// earlier pair of the batch.
pub fn qc_filter(pairs: &[CodeCommentPair], existing: &Dataset) -> IntakeReport {
    let key = |p: &CodeCommentPair| (normalize_ws(&p.code), normalize_ws(&p.comment));
    let mut seen: HashSet<(String, String)> = existing.pairs.iter().map(key).collect();
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    let mut counts = RuleCounts::default();
    for p in pairs {
        let verdict = if !seen.insert(key(p)) {
            Some((QcRule::Duplicate, "pair already present".to_string()))
        } else if let Some(r) = incomplete_reason(p) {
            Some((QcRule::Incomplete, r))
        } else {
            ambiguous_reason(p).map(|r| (QcRule::Ambiguous, r))
        };
        match verdict {
            None => accepted.push(p.clone()),
            Some((rule, detail)) => {
                match rule {
                    QcRule::Duplicate => counts.duplicate += 1,
                    QcRule::Incomplete => counts.incomplete += 1,
                    QcRule::Ambiguous => counts.ambiguous += 1,
                }
                rejected.push(Rejection {
                    pair: p.clone(),
                    rule,
                    detail,
                });
            }
        }
    }
    IntakeReport {
        accepted: Dataset {
            pairs: accepted,
            provenance: Provenance::LlmGenerated,
        },
        rejected,
        counts,
    }
}
