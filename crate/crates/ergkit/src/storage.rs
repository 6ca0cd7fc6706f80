//! Line-delimited file formats: datasets, banks, cassettes, response and
//! report files. One JSON record per line; dataset, bank, and cassette
//! files open with an explicit versioned header line, and every parse
//! error names its line.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::banks::{BankError, Banks, FactAnswer, KnowledgeFact};
use crate::gateway::{Cassette, ChatResponse};
use crate::scoring::Level;
use crate::synthesis::{CotTrace, Dialogue, Instruction};
use crate::verifier::VerificationReport;

#[derive(Debug, Error)]
pub enum StorageError {
    #[error("io failure on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error on line {line} of {path}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Bank(#[from] BankError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StorageError + '_ {
    move |source| StorageError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Header line opening every versioned file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Header {
    kind: String,
    format: String,
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bank_version: Option<String>,
}

const DATASET_VERSION: u32 = 1;
const BANK_VERSION: u32 = 1;
const CASSETTE_VERSION: u32 = 1;

/// Generation provenance stamped on every dataset record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub template_version: u32,
    pub rules_version: u32,
    pub bank_version: String,
    pub model_id: String,
}

/// The three thinking traces carried by a record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CotSet {
    pub original: CotTrace,
    pub structured: CotTrace,
    pub erg: CotTrace,
}

/// Single-turn or multi-turn payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecordPayload {
    SingleTurn { instruction: Instruction },
    MultiTurn { dialogue: Dialogue },
}

/// One synthesized sample: the instruction or dialogue, its graphs and
/// resolved parameters (inside the constraints), portable verifier specs,
/// rubrics, thinking traces, a canonical witness response, and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    #[serde(flatten)]
    pub payload: RecordPayload,
    pub difficulty: Level,
    pub verifier_specs: Vec<String>,
    pub rubrics: Vec<String>,
    pub cot: CotSet,
    pub canonical_response: String,
    pub provenance: Provenance,
}

impl DatasetRecord {
    /// Constraints governing the (final) response.
    pub fn active_constraints(&self) -> Vec<&crate::graph::EvaluatedConstraint> {
        match &self.payload {
            RecordPayload::SingleTurn { instruction } => instruction.constraints.iter().collect(),
            RecordPayload::MultiTurn { dialogue } => dialogue.final_active_constraints(),
        }
    }

    pub fn keywords(&self) -> &[String] {
        match &self.payload {
            RecordPayload::SingleTurn { instruction } => &instruction.keywords,
            RecordPayload::MultiTurn { dialogue } => &dialogue.keywords,
        }
    }

    /// Judge-evaluated rubrics attached to the final turn (empty for plain
    /// single-turn records).
    pub fn judge_rubrics(&self) -> Vec<String> {
        match &self.payload {
            RecordPayload::SingleTurn { .. } => Vec::new(),
            RecordPayload::MultiTurn { dialogue } => dialogue.rubric_texts.clone(),
        }
    }

    /// Verifies a response against the record's active constraints.
    pub fn verify(&self, response: &str) -> Result<VerificationReport, crate::verifier::CompileError> {
        match &self.payload {
            RecordPayload::SingleTurn { instruction } => instruction.verify(response),
            RecordPayload::MultiTurn { dialogue } => dialogue.verify_final(response),
        }
    }
}

/// A candidate response to one record, optionally with the model's
/// thinking text for judge scoring.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thinking: Option<String>,
}

/// Verification outcome for one record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub id: String,
    pub difficulty: Level,
    #[serde(flatten)]
    pub report: VerificationReport,
}

/// Judge outputs for one record: rubric verdicts and optional thinking
/// scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgedRecord {
    pub id: String,
    pub rubric_verdicts: Vec<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_logic: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_corr: Option<f64>,
}

fn write_lines(path: &Path, lines: Vec<String>) -> Result<(), StorageError> {
    let mut file = File::create(path).map_err(io_err(path))?;
    for line in lines {
        writeln!(file, "{line}").map_err(io_err(path))?;
    }
    Ok(())
}

fn encode<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("records always serialize")
}

fn read_jsonl<T: DeserializeOwned>(
    path: &Path,
    expect_format: Option<&str>,
) -> Result<Vec<T>, StorageError> {
    let file = File::open(path).map_err(io_err(path))?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    let mut saw_header = false;
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        // A leading header line is validated when the format demands one
        // and tolerated otherwise.
        if !saw_header && line.contains("\"kind\":\"header\"") {
            saw_header = true;
            let header: Header =
                serde_json::from_str(&line).map_err(|e| StorageError::Parse {
                    path: path.display().to_string(),
                    line: line_no,
                    message: format!("bad header: {e}"),
                })?;
            if let Some(expected) = expect_format {
                if header.format != expected {
                    return Err(StorageError::Parse {
                        path: path.display().to_string(),
                        line: line_no,
                        message: format!(
                            "expected a {expected} file, found format {:?}",
                            header.format
                        ),
                    });
                }
            }
            continue;
        }
        let value: T = serde_json::from_str(&line).map_err(|e| StorageError::Parse {
            path: path.display().to_string(),
            line: line_no,
            message: e.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

/// Writes a dataset: header line, then one record per line.
pub fn write_dataset(records: &[DatasetRecord], path: &Path) -> Result<(), StorageError> {
    let header = Header {
        kind: "header".into(),
        format: "dataset".into(),
        version: DATASET_VERSION,
        bank_version: None,
    };
    let mut lines = vec![encode(&header)];
    lines.extend(records.iter().map(encode));
    write_lines(path, lines)
}

/// Reads a dataset written by [`write_dataset`]. An empty file is an empty
/// collection.
pub fn read_dataset(path: &Path) -> Result<Vec<DatasetRecord>, StorageError> {
    read_jsonl(path, Some("dataset"))
}

pub fn write_responses(records: &[ResponseRecord], path: &Path) -> Result<(), StorageError> {
    write_lines(path, records.iter().map(encode).collect())
}

pub fn read_responses(path: &Path) -> Result<Vec<ResponseRecord>, StorageError> {
    read_jsonl(path, None)
}

pub fn write_reports(records: &[ReportRecord], path: &Path) -> Result<(), StorageError> {
    write_lines(path, records.iter().map(encode).collect())
}

pub fn read_reports(path: &Path) -> Result<Vec<ReportRecord>, StorageError> {
    read_jsonl(path, None)
}

pub fn write_judged(records: &[JudgedRecord], path: &Path) -> Result<(), StorageError> {
    write_lines(path, records.iter().map(encode).collect())
}

pub fn read_judged(path: &Path) -> Result<Vec<JudgedRecord>, StorageError> {
    read_jsonl(path, None)
}

/// One bank-file line: a kind tag, an id, and the kind-specific payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct BankLine {
    kind: String,
    id: String,
    payload: serde_json::Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FactPayload {
    question: String,
    answer: FactAnswer,
    category: String,
}

/// Writes the knowledge facts of a bank, one record per line under a
/// versioned header. Condition, operation, and dimension banks are closed
/// sets compiled into the library and are not serialized.
pub fn write_bank_file(banks: &Banks, path: &Path) -> Result<(), StorageError> {
    let header = Header {
        kind: "header".into(),
        format: "bank".into(),
        version: BANK_VERSION,
        bank_version: Some(banks.version.clone()),
    };
    let mut lines = vec![encode(&header)];
    for fact in banks.facts() {
        lines.push(encode(&BankLine {
            kind: "fact".into(),
            id: fact.id.clone(),
            payload: serde_json::to_value(FactPayload {
                question: fact.question.clone(),
                answer: fact.answer.clone(),
                category: fact.category.clone(),
            })
            .expect("fact payloads always serialize"),
        }));
    }
    write_lines(path, lines)
}

/// Reads a bank file written by [`write_bank_file`]. Schema errors name
/// the offending record; duplicate ids surface as integrity errors.
pub fn read_bank_file(path: &Path) -> Result<Banks, StorageError> {
    let lines: Vec<BankLine> = read_jsonl(path, Some("bank"))?;
    let mut facts: Vec<KnowledgeFact> = Vec::new();
    for (index, line) in lines.into_iter().enumerate() {
        match line.kind.as_str() {
            "fact" => {
                let payload: FactPayload =
                    serde_json::from_value(line.payload).map_err(|e| StorageError::Parse {
                        path: path.display().to_string(),
                        line: index + 2, // header occupies line 1
                        message: format!("fact {}: {e}", line.id),
                    })?;
                facts.push(KnowledgeFact {
                    id: line.id,
                    question: payload.question,
                    answer: payload.answer,
                    category: payload.category,
                });
            }
            other => {
                return Err(StorageError::Parse {
                    path: path.display().to_string(),
                    line: index + 2,
                    message: format!("unknown bank record kind {other:?} (id {})", line.id),
                })
            }
        }
    }
    let version = format!("file:{}", path.display());
    Ok(Banks::from_facts(facts, version)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CassetteLine {
    kind: String,
    digest: String,
    response: ChatResponse,
}

pub fn write_cassette(cassette: &Cassette, path: &Path) -> Result<(), StorageError> {
    let header = Header {
        kind: "header".into(),
        format: "cassette".into(),
        version: CASSETTE_VERSION,
        bank_version: None,
    };
    let mut lines = vec![encode(&header)];
    for (digest, response) in &cassette.entries {
        lines.push(encode(&CassetteLine {
            kind: "entry".into(),
            digest: digest.clone(),
            response: response.clone(),
        }));
    }
    write_lines(path, lines)
}

pub fn read_cassette(path: &Path) -> Result<Cassette, StorageError> {
    let lines: Vec<CassetteLine> = read_jsonl(path, Some("cassette"))?;
    let mut cassette = Cassette::default();
    for line in lines {
        cassette.insert(line.digest, line.response);
    }
    Ok(cassette)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::banks::default_banks;
    use crate::gateway::MockGateway;
    use crate::synthesis::{generate_dataset, GeneratorConfig, Synthesizer, TurnShape};

    fn sample_records() -> Vec<DatasetRecord> {
        let banks = default_banks().unwrap();
        let gateway = MockGateway;
        let synth = Synthesizer::new(&banks, &gateway);
        let config = GeneratorConfig {
            seed: 3,
            levels: vec![crate::scoring::Level::L1, crate::scoring::Level::L2],
            count_per_level: 2,
            turn_shape: TurnShape::Mixed,
            adversarial_fraction: 1.0,
            dialogue_turns: 1,
        };
        generate_dataset(&synth, &config).unwrap()
    }

    #[test]
    fn dataset_round_trip_is_lossless() {
        let records = sample_records();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.jsonl");
        write_dataset(&records, &path).unwrap();
        let back = read_dataset(&path).unwrap();
        assert_eq!(records, back);
        // Adversarial tags and all three patterns survive.
        assert!(back.iter().any(|r| matches!(
            &r.payload,
            RecordPayload::MultiTurn { dialogue } if dialogue.adversarial.is_some()
        )));
        for r in &back {
            assert!(!r.cot.erg.text.is_empty());
            assert!(!r.cot.original.text.is_empty());
            assert!(!r.cot.structured.text.is_empty());
        }
    }

    #[test]
    fn empty_file_reads_as_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        std::fs::write(&path, "").unwrap();
        assert!(read_dataset(&path).unwrap().is_empty());
    }

    #[test]
    fn truncated_line_names_its_position() {
        let records = sample_records();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.jsonl");
        write_dataset(&records, &path).unwrap();
        let mut content = std::fs::read_to_string(&path).unwrap();
        let keep = content.len() - 40;
        content.truncate(keep);
        std::fs::write(&path, content).unwrap();
        let err = read_dataset(&path).unwrap_err();
        assert!(matches!(err, StorageError::Parse { line, .. } if line >= 2));
    }

    #[test]
    fn bank_file_round_trips_and_rejects_duplicates() {
        let banks = default_banks().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bank.jsonl");
        write_bank_file(&banks, &path).unwrap();
        let back = read_bank_file(&path).unwrap();
        assert_eq!(back.facts(), banks.facts());

        let dup = format!(
            "{}\n{}\n{}\n",
            r#"{"kind":"header","format":"bank","version":1}"#,
            r#"{"kind":"fact","id":"x","payload":{"question":"q","answer":{"kind":"integer","value":1},"category":"t"}}"#,
            r#"{"kind":"fact","id":"x","payload":{"question":"q2","answer":{"kind":"integer","value":2},"category":"t"}}"#,
        );
        let dup_path = dir.path().join("dup.jsonl");
        std::fs::write(&dup_path, dup).unwrap();
        assert!(matches!(
            read_bank_file(&dup_path),
            Err(StorageError::Bank(BankError::DuplicateId(_)))
        ));
    }

    #[test]
    fn cassette_round_trips() {
        let mut cassette = Cassette::default();
        cassette.insert("abc".into(), ChatResponse::complete("hello"));
        cassette.insert("def".into(), ChatResponse::complete("multi\nline"));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cassette.jsonl");
        write_cassette(&cassette, &path).unwrap();
        assert_eq!(read_cassette(&path).unwrap(), cassette);
    }

    #[test]
    fn wrong_format_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("odd.jsonl");
        std::fs::write(&path, "{\"kind\":\"header\",\"format\":\"bank\",\"version\":1}\n").unwrap();
        assert!(matches!(
            read_dataset(&path),
            Err(StorageError::Parse { .. })
        ));
    }
}
