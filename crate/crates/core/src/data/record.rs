use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{write_atomic, DataError};
use crate::sphere::UnitEmbedding;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Grounded,
    Hallucinated,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Grounded => "grounded",
            Label::Hallucinated => "hallucinated",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "grounded" => Ok(Label::Grounded),
            "hallucinated" => Ok(Label::Hallucinated),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

/// Hallucination taxonomy: unfaithfulness, confabulation, factual error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HallucType {
    I,
    II,
    III,
}

impl HallucType {
    pub fn as_str(self) -> &'static str {
        match self {
            HallucType::I => "I",
            HallucType::II => "II",
            HallucType::III => "III",
        }
    }
}

impl FromStr for HallucType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "I" => Ok(HallucType::I),
            "II" => Ok(HallucType::II),
            "III" => Ok(HallucType::III),
            other => Err(format!("unknown hallucination type {other:?}")),
        }
    }
}

fn default_domain() -> String {
    "default".to_string()
}

/// One (question, context?, response) item with its label and optional
/// embeddings. Fields not named here are carried through `extra`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub id: String,
    #[serde(default = "default_domain")]
    pub domain: String,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    pub response: String,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halluc_type: Option<HallucType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_emb: Option<UnitEmbedding>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_emb: Option<UnitEmbedding>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_emb: Option<UnitEmbedding>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl DetectionRecord {
    pub fn new(id: impl Into<String>, label: Label) -> Self {
        Self {
            id: id.into(),
            domain: default_domain(),
            question: String::new(),
            context: None,
            response: String::new(),
            label,
            halluc_type: None,
            q_emb: None,
            c_emb: None,
            r_emb: None,
            extra: Map::new(),
        }
    }

    pub fn is_grounded(&self) -> bool {
        self.label == Label::Grounded
    }

    /// Query and response embeddings, when both are present.
    pub fn qr(&self) -> Option<(&UnitEmbedding, &UnitEmbedding)> {
        Some((self.q_emb.as_ref()?, self.r_emb.as_ref()?))
    }

    /// Question, context and response embeddings, when all are present.
    pub fn qcr(&self) -> Option<(&UnitEmbedding, &UnitEmbedding, &UnitEmbedding)> {
        Some((self.q_emb.as_ref()?, self.c_emb.as_ref()?, self.r_emb.as_ref()?))
    }

    /// Embedding dimension, or `None` when nothing is embedded.
    pub fn dim(&self) -> Option<usize> {
        [&self.q_emb, &self.c_emb, &self.r_emb]
            .into_iter()
            .flatten()
            .map(|e| e.dim())
            .next()
    }

    pub fn is_fully_embedded(&self) -> bool {
        self.q_emb.is_some() && self.r_emb.is_some() && (self.context.is_none() || self.c_emb.is_some())
    }

    fn embeddings(&self) -> impl Iterator<Item = &UnitEmbedding> {
        [&self.q_emb, &self.c_emb, &self.r_emb].into_iter().flatten()
    }
}

/// Checks id uniqueness, context/embedding consistency and the shared
/// embedding dimension. `line_of(i)` maps a record index to its 1-based line.
fn validate(records: &[DetectionRecord], line_of: impl Fn(usize) -> usize) -> Result<(), DataError> {
    let mut seen = HashSet::new();
    let mut dim: Option<usize> = None;
    for (i, rec) in records.iter().enumerate() {
        let line = line_of(i);
        if !seen.insert(rec.id.as_str()) {
            return Err(DataError::DuplicateId {
                line,
                id: rec.id.clone(),
            });
        }
        if rec.c_emb.is_some() && rec.context.is_none() {
            return Err(DataError::Parse {
                line,
                message: "c_emb present without context".into(),
            });
        }
        for e in rec.embeddings() {
            let expected = *dim.get_or_insert(e.dim());
            if e.dim() != expected {
                return Err(DataError::DimensionMismatch {
                    line,
                    expected,
                    found: e.dim(),
                });
            }
        }
    }
    Ok(())
}

/// Parses JSONL text. Blank lines are skipped.
pub fn parse_dataset(text: &str) -> Result<Vec<DetectionRecord>, DataError> {
    let mut records = Vec::new();
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let rec: DetectionRecord = serde_json::from_str(raw).map_err(|e| DataError::Parse {
            line,
            message: e.to_string(),
        })?;
        records.push(rec);
        lines.push(line);
    }
    validate(&records, |i| lines[i])?;
    Ok(records)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<DetectionRecord>, DataError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    parse_dataset(&text)
}

pub fn write_dataset(records: &[DetectionRecord], path: impl AsRef<Path>) -> Result<(), DataError> {
    validate(records, |i| i + 1)?;
    let mut buf = Vec::new();
    for rec in records {
        serde_json::to_writer(&mut buf, rec).expect("record serializes");
        buf.write_all(b"\n").expect("write to vec");
    }
    write_atomic(path.as_ref(), &buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"{"id":"a","domain":"med","question":"q","response":"r","label":"grounded","q_emb":[3,4],"r_emb":[1,0]}
{"id":"b","domain":"med","question":"q","context":"c","response":"r","label":"hallucinated","halluc_type":"I","c_emb":[0,2]}

{"id":"c","question":"q","response":"r","label":"grounded","source":"x","score_hint":0.3}
"#;

    #[test]
    fn parses_in_file_order() {
        let recs = parse_dataset(GOOD).unwrap();
        assert_eq!(recs.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(), ["a", "b", "c"]);
        assert_eq!(recs[0].q_emb.as_ref().unwrap().as_slice(), &[0.6, 0.8]);
        assert_eq!(recs[1].halluc_type, Some(HallucType::I));
        assert_eq!(recs[2].domain, "default");
        assert_eq!(recs[2].extra["source"], "x");
    }

    #[test]
    fn duplicate_id_reports_line() {
        let mut text = String::new();
        for i in 0..6 {
            text += &format!("{{\"id\":\"r{i}\",\"question\":\"q\",\"response\":\"r\",\"label\":\"grounded\"}}\n");
        }
        text += "{\"id\":\"r2\",\"question\":\"q\",\"response\":\"r\",\"label\":\"grounded\"}\n";
        match parse_dataset(&text) {
            Err(DataError::DuplicateId { line, id }) => assert_eq!((line, id.as_str()), (7, "r2")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_label_names_field() {
        let text = r#"{"id":"a","question":"q","context":"c","response":"r"}"#;
        match parse_dataset(text) {
            Err(DataError::Parse { line, message }) => {
                assert_eq!(line, 1);
                assert!(message.contains("label"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch_and_bad_vectors() {
        let text = r#"{"id":"a","question":"q","response":"r","label":"grounded","q_emb":[1,0]}
{"id":"b","question":"q","response":"r","label":"grounded","q_emb":[1,0,0]}"#;
        assert!(matches!(
            parse_dataset(text),
            Err(DataError::DimensionMismatch { line: 2, expected: 2, found: 3 })
        ));
        let zero = r#"{"id":"a","question":"q","response":"r","label":"grounded","q_emb":[0,0]}"#;
        assert!(matches!(parse_dataset(zero), Err(DataError::Parse { line: 1, .. })));
        let orphan = r#"{"id":"a","question":"q","response":"r","label":"grounded","c_emb":[0,1]}"#;
        assert!(matches!(parse_dataset(orphan), Err(DataError::Parse { line: 1, .. })));
    }

    #[test]
    fn write_then_load_preserves_unknown_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let recs = parse_dataset(GOOD).unwrap();
        write_dataset(&recs, &path).unwrap();
        let back = load_dataset(&path).unwrap();
        assert_eq!(back, recs);
        assert!(fs::read_to_string(&path).unwrap().contains("score_hint"));
    }
}
