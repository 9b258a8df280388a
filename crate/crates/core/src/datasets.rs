//! Corpus and dialogue loading, truncation, and train/valid/test splits.
//!
//! Passages come as JSONL (`{"id", "text", "source"?}`) or TSV
//! (`id<TAB>text`); dialogues as JSONL
//! (`{"dialogue_id", "passage_id", "turns": [{"speaker", "text"}]}`).

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeds;
use crate::selfplay::{Passage, PassageSource, Speaker, Turn};
use crate::textproc::tokenize_with_spans;

/// Bundled synthetic corpus: 30 short passages in three source styles.
pub const TOY_CORPUS_JSONL: &str = include_str!("../data/toy_corpus.jsonl");
/// Bundled synthetic anchor dialogues, one per toy passage.
pub const TOY_DIALOGUES_JSONL: &str = include_str!("../data/toy_dialogues.jsonl");

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("no rows found")]
    EmptyFile,
    #[error("line {line}: malformed dialogue: {reason}")]
    MalformedDialogue { line: usize, reason: String },
    #[error("corpus of {0} items is too small to split (need at least 3)")]
    TooSmall(usize),
    #[error("split ratios must be non-negative and sum to 1, got {0:?}")]
    InvalidRatios((f64, f64, f64)),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PassageFormat {
    PlainJsonl,
    Tsv,
}

impl PassageFormat {
    pub fn from_path(path: &Path) -> PassageFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") => PassageFormat::Tsv,
            _ => PassageFormat::PlainJsonl,
        }
    }
}

#[derive(Deserialize)]
struct PassageRow {
    id: Option<String>,
    text: Option<String>,
    #[serde(default)]
    source: Option<PassageSource>,
}

/// A recorded dialogue used for anchors and the coherence dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dialogue {
    pub dialogue_id: String,
    pub passage_id: String,
    pub turns: Vec<Turn>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub name: String,
    pub source: PassageSource,
    pub passage_count: usize,
    pub truncate_tokens: Option<usize>,
    pub split_seed: u64,
    pub split_ratios: (f64, f64, f64),
}

impl CorpusManifest {
    pub fn validate(&self) -> Result<(), DatasetError> {
        check_ratios(self.split_ratios)
    }
}

fn read(path: &Path) -> Result<String, DatasetError> {
    fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Cut `passage` after its first `max_tokens` tokens, at a token boundary.
pub fn truncate_passage(passage: Passage, max_tokens: usize) -> Passage {
    let spans = tokenize_with_spans(&passage.text);
    if spans.len() <= max_tokens {
        return passage;
    }
    let cut = if max_tokens == 0 { 0 } else { spans[max_tokens - 1].1.end };
    let mut p = Passage::new(passage.id, &passage.text[..cut], passage.source);
    p.truncated_to = Some(max_tokens);
    p
}

pub fn parse_passages(
    content: &str,
    format: PassageFormat,
    truncate_tokens: Option<usize>,
) -> Result<Vec<Passage>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: String| DatasetError::MalformedRow {
            line: line_no,
            reason,
        };
        let (id, text, source) = match format {
            PassageFormat::PlainJsonl => {
                let row: PassageRow =
                    serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
                let id = row.id.ok_or_else(|| malformed("missing \"id\"".into()))?;
                let text = row.text.ok_or_else(|| malformed("missing \"text\"".into()))?;
                (id, text, row.source.unwrap_or_default())
            }
            PassageFormat::Tsv => {
                let (id, text) = line
                    .split_once('\t')
                    .ok_or_else(|| malformed("expected id<TAB>text".into()))?;
                (id.to_string(), text.to_string(), PassageSource::Other)
            }
        };
        if id.trim().is_empty() {
            return Err(malformed("empty id".into()));
        }
        let p = Passage::new(id, text, source);
        out.push(match truncate_tokens {
            Some(n) => truncate_passage(p, n),
            None => p,
        });
    }
    if out.is_empty() {
        return Err(DatasetError::EmptyFile);
    }
    Ok(out)
}

pub fn load_passages(
    path: &Path,
    format: PassageFormat,
    truncate_tokens: Option<usize>,
) -> Result<Vec<Passage>, DatasetError> {
    parse_passages(&read(path)?, format, truncate_tokens)
}

#[derive(Serialize)]
struct PassageOut<'a> {
    id: &'a str,
    text: &'a str,
    source: PassageSource,
}

/// JSONL in the format `load_passages` reads back.
pub fn passages_to_jsonl(passages: &[Passage]) -> String {
    let mut out = String::new();
    for p in passages {
        let row = PassageOut {
            id: &p.id,
            text: &p.text,
            source: p.source,
        };
        out.push_str(&serde_json::to_string(&row).expect("row serializes"));
        out.push('\n');
    }
    out
}

pub fn toy_corpus() -> Vec<Passage> {
    parse_passages(TOY_CORPUS_JSONL, PassageFormat::PlainJsonl, None).expect("bundled corpus parses")
}

pub fn toy_dialogues() -> Vec<Dialogue> {
    parse_dialogues(TOY_DIALOGUES_JSONL).expect("bundled dialogues parse")
}

pub fn parse_dialogues(content: &str) -> Result<Vec<Dialogue>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: String| DatasetError::MalformedDialogue {
            line: i + 1,
            reason,
        };
        let d: Dialogue = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
        if d.turns.is_empty() {
            return Err(malformed(format!("{}: empty turns list", d.dialogue_id)));
        }
        if let Some(k) = d.turns.windows(2).position(|w| w[0].speaker == w[1].speaker) {
            return Err(malformed(format!(
                "{}: turns {} and {} have the same speaker",
                d.dialogue_id,
                k,
                k + 1
            )));
        }
        if d.turns.iter().any(|t| t.text.trim().is_empty()) {
            return Err(malformed(format!("{}: empty utterance", d.dialogue_id)));
        }
        out.push(d);
    }
    if out.is_empty() {
        return Err(DatasetError::EmptyFile);
    }
    Ok(out)
}

pub fn load_dialogues(path: &Path) -> Result<Vec<Dialogue>, DatasetError> {
    parse_dialogues(&read(path)?)
}

impl Dialogue {
    pub fn teacher_turns(&self) -> usize {
        self.turns
            .iter()
            .filter(|t| t.speaker == Speaker::Teacher)
            .count()
    }
}

fn check_ratios(r: (f64, f64, f64)) -> Result<(), DatasetError> {
    let ok = [r.0, r.1, r.2].iter().all(|x| *x >= 0.0 && x.is_finite())
        && (r.0 + r.1 + r.2 - 1.0).abs() <= 1e-9;
    if ok {
        Ok(())
    } else {
        Err(DatasetError::InvalidRatios(r))
    }
}

/// Sizes for (train, valid, test): floor valid and test, remainder to train.
pub fn split_sizes(n: usize, ratios: (f64, f64, f64)) -> (usize, usize, usize) {
    let floor = |r: f64| ((r * n as f64) + 1e-9).floor() as usize;
    let valid = floor(ratios.1);
    let test = floor(ratios.2).min(n - valid);
    (n - valid - test, valid, test)
}

/// (train, valid, test).
pub type Splits<T> = (Vec<T>, Vec<T>, Vec<T>);

/// Seeded shuffle followed by contiguous cuts.
pub fn split<T: Clone>(
    corpus: &[T],
    seed: u64,
    ratios: (f64, f64, f64),
) -> Result<Splits<T>, DatasetError> {
    check_ratios(ratios)?;
    if corpus.len() < 3 {
        return Err(DatasetError::TooSmall(corpus.len()));
    }
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut seeds::rng(seed));
    let (tr, va, _) = split_sizes(corpus.len(), ratios);
    let pick = |idx: &[usize]| idx.iter().map(|&i| corpus[i].clone()).collect::<Vec<_>>();
    Ok((
        pick(&order[..tr]),
        pick(&order[tr..tr + va]),
        pick(&order[tr + va..]),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn toy_corpus_shape() {
        let c = toy_corpus();
        assert_eq!(c.len(), 30);
        for src in [PassageSource::Wikipedia, PassageSource::News, PassageSource::PaperAbstract] {
            assert_eq!(c.iter().filter(|p| p.source == src).count(), 10);
        }
        let d = toy_dialogues();
        assert_eq!(d.len(), 30);
        assert!(d.iter().all(|d| d.teacher_turns() == 3));
    }

    #[test]
    fn truncation_keeps_token_boundaries() {
        let text = (0..200).map(|i| format!("w{i},")).collect::<Vec<_>>().join(" ");
        let row = serde_json::json!({"id": "n1", "text": text}).to_string();
        let p = &parse_passages(&row, PassageFormat::PlainJsonl, Some(130)).unwrap()[0];
        assert_eq!(p.tokens.len(), 130);
        assert_eq!(p.truncated_to, Some(130));
        assert!(p.text.ends_with("w129,"));
        let p = &parse_passages(&row, PassageFormat::PlainJsonl, None).unwrap()[0];
        assert_eq!(p.text, text);
        assert_eq!(p.truncated_to, None);
    }

    #[test]
    fn malformed_rows_report_line() {
        let content = "{\"id\":\"a\",\"text\":\"x\"}\n\n{\"id\":\"b\"}\n";
        match parse_passages(content, PassageFormat::PlainJsonl, None) {
            Err(DatasetError::MalformedRow { line, reason }) => {
                assert_eq!(line, 3);
                assert!(reason.contains("text"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_passages("\n\n", PassageFormat::PlainJsonl, None),
            Err(DatasetError::EmptyFile)
        ));
        let tsv = parse_passages("a\tSome text here.\nb\tMore.", PassageFormat::Tsv, None).unwrap();
        assert_eq!(tsv[1].id, "b");
        assert!(parse_passages("no tab", PassageFormat::Tsv, None).is_err());
    }

    #[test]
    fn dialogue_validation() {
        let ok = r#"{"dialogue_id":"d","passage_id":"p","turns":[{"speaker":"teacher","text":"a"},{"speaker":"student","text":"b"},{"speaker":"teacher","text":"c"},{"speaker":"student","text":"d"},{"speaker":"teacher","text":"e"}]}"#;
        assert_eq!(parse_dialogues(ok).unwrap()[0].teacher_turns(), 3);
        let twice = r#"{"dialogue_id":"d","passage_id":"p","turns":[{"speaker":"teacher","text":"a"},{"speaker":"teacher","text":"b"}]}"#;
        assert!(matches!(parse_dialogues(twice), Err(DatasetError::MalformedDialogue { .. })));
        let empty = r#"{"dialogue_id":"d","passage_id":"p","turns":[]}"#;
        assert!(matches!(parse_dialogues(empty), Err(DatasetError::MalformedDialogue { .. })));
    }

    #[test]
    fn split_sizes_and_determinism() {
        let items: Vec<usize> = (0..10).collect();
        let (a, b, c) = split(&items, 1, (0.8, 0.1, 0.1)).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (8, 1, 1));
        assert_eq!(split(&items, 1, (0.8, 0.1, 0.1)).unwrap(), (a, b, c));
        assert!(matches!(split(&items[..2], 1, (0.8, 0.1, 0.1)), Err(DatasetError::TooSmall(2))));
        assert!(split(&items, 1, (0.5, 0.1, 0.1)).is_err());
    }

    #[test]
    fn split_partitions_exactly() {
        let items: Vec<usize> = (0..100).collect();
        for seed in 0..10 {
            let (a, b, c) = split(&items, seed, (0.8, 0.1, 0.1)).unwrap();
            let sa: HashSet<_> = a.iter().collect();
            let sb: HashSet<_> = b.iter().collect();
            let sc: HashSet<_> = c.iter().collect();
            assert!(sa.is_disjoint(&sb) && sa.is_disjoint(&sc) && sb.is_disjoint(&sc));
            let all: HashSet<_> = sa.union(&sb).chain(sc.iter()).cloned().collect();
            assert_eq!(all.len(), 100);
        }
    }
}
