//! JSON-lines interchange formats.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::model::Span;
use crate::pipeline::DetectionResult;

#[derive(Debug, thiserror::Error)]
pub enum JsonlError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Parses every non-blank line; the first malformed line is an error.
pub fn read_jsonl<T: DeserializeOwned>(reader: impl BufRead) -> Result<Vec<T>, JsonlError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| JsonlError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(mut writer: impl Write, items: &[T]) -> Result<(), JsonlError> {
    for item in items {
        serde_json::to_writer(&mut writer, item)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

/// Gold arguments of one predicate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceInstance {
    pub doc_id: String,
    pub predicate_token: usize,
    pub arguments: Vec<Span>,
}

impl ReferenceInstance {
    pub fn id(&self) -> String {
        instance_id(&self.doc_id, self.predicate_token)
    }
}

pub fn instance_id(doc_id: &str, predicate_token: usize) -> String {
    format!("{doc_id}:{predicate_token}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Input,
    Backend,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub doc_id: String,
    pub predicate_token: usize,
    pub kind: ErrorKind,
    pub error: String,
}

/// One line of a detection results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum DetectionRecord {
    Ok(Box<DetectionResult>),
    Error(ErrorRecord),
}

impl DetectionRecord {
    pub fn id(&self) -> String {
        match self {
            DetectionRecord::Ok(r) => instance_id(&r.predicate.doc_id, r.predicate.predicate_token),
            DetectionRecord::Error(e) => instance_id(&e.doc_id, e.predicate_token),
        }
    }

    pub fn result(&self) -> Option<&DetectionResult> {
        match self {
            DetectionRecord::Ok(r) => Some(r),
            DetectionRecord::Error(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Document;

    #[test]
    fn jsonl_round_trip_and_errors() {
        let refs = vec![ReferenceInstance {
            doc_id: "d".into(),
            predicate_token: 4,
            arguments: vec![Span::new(0, 2, 1).unwrap()],
        }];
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &refs).unwrap();
        let back: Vec<ReferenceInstance> = read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back, refs);
        assert_eq!(back[0].id(), "d:4");

        let bad = "\n{\"doc_id\":\"d\"}\n";
        match read_jsonl::<ReferenceInstance>(bad.as_bytes()) {
            Err(JsonlError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn documents_parse_from_interchange_lines() {
        let line = r#"{"doc_id":"d1","sentences":[["A","b","."],["C","."]],"clusters":[{"cc_id":3,"mentions":[{"start":0,"end":1,"head":0},{"start":3,"end":4,"head":3}]}]}"#;
        let docs: Vec<Document> = read_jsonl(line.as_bytes()).unwrap();
        assert_eq!(docs[0].num_tokens(), 5);
        assert_eq!(docs[0].clusters()[0].mentions.len(), 2);
    }

    #[test]
    fn error_records_are_tagged() {
        let rec = DetectionRecord::Error(ErrorRecord {
            doc_id: "x".into(),
            predicate_token: 1,
            kind: ErrorKind::Input,
            error: "unknown document".into(),
        });
        let json = serde_json::to_string(&rec).unwrap();
        assert!(json.contains("\"status\":\"error\""));
        let back: DetectionRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rec);
        assert_eq!(back.id(), "x:1");
    }
}
