//! Labeled code-comment datasets: parsing, summary statistics, merging and
//! the text rendering fed to embedding providers.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Literal placed between code and comment when rendering a pair.
pub const SEPARATOR: &str = "\n[SEP]\n";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("input contains no records")]
    EmptyInput,
    #[error("pair {0} has no label")]
    UnlabeledPair(String),
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("input is not valid UTF-8")]
    InvalidUtf8,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Binary comment quality label. Numeric encoding: Useful = 1, NotUseful = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    NotUseful,
    Useful,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        match self {
            Label::NotUseful => 0,
            Label::Useful => 1,
        }
    }

    pub fn from_u8(v: u8) -> Option<Label> {
        match v {
            0 => Some(Label::NotUseful),
            1 => Some(Label::Useful),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Useful => "Useful",
            Label::NotUseful => "Not Useful",
        }
    }

    pub fn other(self) -> Label {
        match self {
            Label::Useful => Label::NotUseful,
            Label::NotUseful => Label::Useful,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = CorpusError;

    /// Case-insensitive; accepts `not useful`, `not_useful`, `not-useful`
    /// and `notuseful` for the negative class.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .chars()
            .filter(|c| !c.is_whitespace() && *c != '_' && *c != '-')
            .flat_map(char::to_lowercase)
            .collect();
        match norm.as_str() {
            "useful" => Ok(Label::Useful),
            "notuseful" => Ok(Label::NotUseful),
            _ => Err(CorpusError::UnknownLabel(s.to_string())),
        }
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeCommentPair {
    pub id: String,
    pub code: String,
    pub comment: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

impl CodeCommentPair {
    pub fn new(id: impl Into<String>, code: &str, comment: &str, label: Option<Label>) -> Self {
        CodeCommentPair {
            id: id.into(),
            code: code.trim().to_string(),
            comment: comment.trim().to_string(),
            label,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Seed,
    LlmGenerated,
    Merged,
}

impl Provenance {
    pub fn tag(self) -> &'static str {
        match self {
            Provenance::Seed => "seed",
            Provenance::LlmGenerated => "llm",
            Provenance::Merged => "merged",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    /// Guesses the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &std::path::Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("jsonl") || ext.eq_ignore_ascii_case("json") => {
                Format::Jsonl
            }
            _ => Format::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "jsonl" | "json" => Ok(Format::Jsonl),
            other => Err(format!("unknown format {other:?} (expected csv or jsonl)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub pairs: Vec<CodeCommentPair>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub n_total: usize,
    pub n_useful: usize,
    pub n_not_useful: usize,
    pub useful_share: f64,
}

impl fmt::Display for ClassDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<12} {:>8} {:>8}", "class", "count", "share")?;
        writeln!(
            f,
            "{:<12} {:>8} {:>8.3}",
            "Useful", self.n_useful, self.useful_share
        )?;
        let nu_share = if self.n_total == 0 {
            0.0
        } else {
            self.n_not_useful as f64 / self.n_total as f64
        };
        writeln!(
            f,
            "{:<12} {:>8} {:>8.3}",
            "Not Useful", self.n_not_useful, nu_share
        )?;
        write!(f, "{:<12} {:>8}", "total", self.n_total)
    }
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    #[serde(default)]
    id: Option<String>,
    code: String,
    comment: String,
    #[serde(default)]
    label: Option<String>,
    #[serde(skip)]
    line: usize,
}

fn parse_label(raw: Option<String>) -> Result<Option<Label>, CorpusError> {
    match raw {
        None => Ok(None),
        Some(s) if s.trim().is_empty() => Ok(None),
        Some(s) => s.parse().map(Some),
    }
}

/// Parses a CSV (`code,comment,label` header, optional `id`) or JSONL stream.
///
/// Missing ids are assigned the zero-based record index. The label column
/// may be absent or empty, which yields unlabeled pairs.
pub fn parse_dataset<R: Read>(
    mut source: R,
    format: Format,
    provenance: Provenance,
) -> Result<Dataset, CorpusError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let text = String::from_utf8(bytes).map_err(|_| CorpusError::InvalidUtf8)?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(&text);

    let raw = match format {
        Format::Csv => read_csv(text)?,
        Format::Jsonl => read_jsonl(text)?,
    };
    if raw.is_empty() {
        return Err(CorpusError::EmptyInput);
    }

    let mut seen = HashSet::with_capacity(raw.len());
    let mut pairs = Vec::with_capacity(raw.len());
    for (idx, rec) in raw.into_iter().enumerate() {
        let id = rec
            .id
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| idx.to_string());
        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId(id));
        }
        let line = rec.line;
        let label = parse_label(rec.label).map_err(|e| match e {
            CorpusError::UnknownLabel(v) => CorpusError::MalformedRecord {
                line,
                reason: format!("unknown label {v:?}"),
            },
            other => other,
        })?;
        pairs.push(CodeCommentPair::new(id, &rec.code, &rec.comment, label));
    }
    Ok(Dataset { pairs, provenance })
}

fn read_csv(text: &str) -> Result<Vec<RawRecord>, CorpusError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| csv_error(e, text, 1))?
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect::<Vec<_>>();
    if headers.iter().all(|h| h.is_empty()) {
        return Ok(Vec::new());
    }
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (code_col, comment_col) = match (col("code"), col("comment")) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(CorpusError::MalformedRecord {
                line: 1,
                reason: "header must contain code and comment columns".into(),
            })
        }
    };
    let label_col = col("label");
    let id_col = col("id");

    let mut out = Vec::new();
    for result in rdr.records() {
        let rec = result.map_err(|e| csv_error(e, text, 0))?;
        // Counted from the byte offset: the reader's own line counter
        // drifts on CRLF input.
        let line = rec
            .position()
            .map(|p| line_of(text, p.byte() as usize))
            .unwrap_or(0);
        let field = |i: usize| {
            rec.get(i).map(str::to_string).ok_or(CorpusError::MalformedRecord {
                line,
                reason: format!("missing column {i}"),
            })
        };
        out.push(RawRecord {
            id: id_col.and_then(|i| rec.get(i).map(str::to_string)),
            code: field(code_col)?,
            comment: field(comment_col)?,
            label: label_col.and_then(|i| rec.get(i).map(str::to_string)),
            line,
        });
    }
    Ok(out)
}

fn line_of(text: &str, byte: usize) -> usize {
    let bytes = text.as_bytes();
    let mut end = byte.min(bytes.len());
    while end < bytes.len() && (bytes[end] == b'\r' || bytes[end] == b'\n') {
        end += 1;
    }
    bytes[..end].iter().filter(|&&b| b == b'\n').count() + 1
}

fn csv_error(e: csv::Error, text: &str, fallback_line: usize) -> CorpusError {
    let line = e
        .position()
        .map(|p| line_of(text, p.byte() as usize))
        .unwrap_or(fallback_line);
    if let csv::ErrorKind::Utf8 { .. } = e.kind() {
        return CorpusError::InvalidUtf8;
    }
    CorpusError::MalformedRecord {
        line,
        reason: e.to_string(),
    }
}

fn read_jsonl(text: &str) -> Result<Vec<RawRecord>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut rec: RawRecord =
            serde_json::from_str(line).map_err(|e| CorpusError::MalformedRecord {
                line: i + 1,
                reason: e.to_string(),
            })?;
        rec.line = i + 1;
        out.push(rec);
    }
    Ok(out)
}

/// Writes a dataset in the given format using canonical label strings.
pub fn write_dataset<W: Write>(d: &Dataset, format: Format, out: W) -> Result<(), CorpusError> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["id", "code", "comment", "label"])
                .map_err(std::io::Error::from)?;
            for p in &d.pairs {
                let label = p.label.map(Label::as_str).unwrap_or("");
                w.write_record([p.id.as_str(), &p.code, &p.comment, label])
                    .map_err(std::io::Error::from)?;
            }
            w.flush()?;
        }
        Format::Jsonl => {
            let mut out = std::io::BufWriter::new(out);
            for p in &d.pairs {
                serde_json::to_writer(&mut out, p).map_err(std::io::Error::from)?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

pub fn dataset_stats(d: &Dataset) -> Result<ClassDistribution, CorpusError> {
    let mut n_useful = 0;
    let mut n_not_useful = 0;
    for p in &d.pairs {
        match p.label {
            Some(Label::Useful) => n_useful += 1,
            Some(Label::NotUseful) => n_not_useful += 1,
            None => return Err(CorpusError::UnlabeledPair(p.id.clone())),
        }
    }
    let n_total = n_useful + n_not_useful;
    let useful_share = if n_total == 0 {
        0.0
    } else {
        n_useful as f64 / n_total as f64
    };
    Ok(ClassDistribution {
        n_total,
        n_useful,
        n_not_useful,
        useful_share,
    })
}

/// Concatenates `a` then `b`. Every id is prefixed with its side's provenance
/// tag (`seed:`, `llm:`, ...); when both sides share a provenance the prefixes
/// become `<tag>-a:` and `<tag>-b:` so that ids stay distinct.
pub fn merge_datasets(a: &Dataset, b: &Dataset) -> Dataset {
    let (pa, pb) = if a.provenance == b.provenance {
        (
            format!("{}-a", a.provenance.tag()),
            format!("{}-b", b.provenance.tag()),
        )
    } else {
        (a.provenance.tag().to_string(), b.provenance.tag().to_string())
    };
    let relabel = |p: &CodeCommentPair, prefix: &str| CodeCommentPair {
        id: format!("{prefix}:{}", p.id),
        ..p.clone()
    };
    let pairs = a
        .pairs
        .iter()
        .map(|p| relabel(p, &pa))
        .chain(b.pairs.iter().map(|p| relabel(p, &pb)))
        .collect();
    Dataset {
        pairs,
        provenance: Provenance::Merged,
    }
}

pub fn render_input(p: &CodeCommentPair) -> String {
    let mut s = String::with_capacity(p.code.len() + SEPARATOR.len() + p.comment.len());
    s.push_str(&p.code);
    s.push_str(SEPARATOR);
    s.push_str(&p.comment);
    s
}

/// Ids of pairs whose code or comment contains the separator token, which
/// would make the rendering ambiguous.
pub fn separator_collisions(d: &Dataset) -> Vec<String> {
    const TOKEN: &str = "[SEP]";
    d.pairs
        .iter()
        .filter(|p| p.code.contains(TOKEN) || p.comment.contains(TOKEN))
        .map(|p| p.id.clone())
        .collect()
}
