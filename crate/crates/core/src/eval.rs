//! Objective evaluation: teacher-only ROUGE coverage, per-turn information
//! gain, a cloze QA proxy, coherence, a relevance proxy, utterance length and
//! rater agreement.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coherence::{softmax_pair, ClassifierHandle, ClassifierOutput, CoherenceError, CoherenceScorer, LabelConstants};
use crate::policy::{DecodeMode, PolicyParams};
use crate::seeds;
use crate::selfplay::{run_conversation, Conversation, Passage, SelfPlayError, Speaker};
use crate::student::Student;
use crate::textproc::{
    extract_entities, rouge_1_f1, split_sentences, tokenize, token_f1, RougeVariant, TokenSeq,
};

pub const MASK: &str = "[MASK]";
pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_EVAL_SEED: u64 = 7;

const CONTEXT_WINDOW: usize = 5;
const MAX_ENTITY_RUN: usize = 4;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("conversation has no teacher utterance")]
    EmptyConversation,
    #[error("passage {0} has no sentence with a maskable entity")]
    NoMaskableEntities(String),
    #[error("no questions to answer")]
    NoQuestions,
    #[error("ratings have zero variance")]
    DegenerateVariance,
    #[error("rating lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least two paired ratings, got {0}")]
    TooFewRatings(usize),
    #[error("evaluation corpus is empty")]
    EmptyCorpus,
    #[error("relevance backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error(transparent)]
    SelfPlay(#[from] SelfPlayError),
    #[error(transparent)]
    Coherence(#[from] CoherenceError),
    #[error("writing {path}: {reason}")]
    Io { path: String, reason: String },
}

fn teacher_tokens(conv: &Conversation) -> Result<TokenSeq, EvalError> {
    if conv.n_teacher_turns() == 0 {
        return Err(EvalError::EmptyConversation);
    }
    Ok(conv
        .turns
        .iter()
        .filter(|t| t.speaker == Speaker::Teacher)
        .fold(TokenSeq::default(), |acc, t| acc.concat(&tokenize(&t.text))))
}

/// ROUGE-1/2/L F1 of the passage against the teacher's utterances only.
pub fn conversation_coverage(passage: &Passage, conv: &Conversation) -> Result<(f64, f64, f64), EvalError> {
    let teacher = teacher_tokens(conv)?;
    let [r1, r2, rl] = RougeVariant::ALL.map(|v| v.score(&passage.tokens, &teacher));
    Ok((r1, r2, rl))
}

/// Unclipped ROUGE gain of every teacher utterance over everything said
/// before it, student turns included.
pub fn info_gain(passage: &Passage, conv: &Conversation, variant: RougeVariant) -> Result<Vec<f64>, EvalError> {
    if conv.n_teacher_turns() == 0 {
        return Err(EvalError::EmptyConversation);
    }
    let mut history = TokenSeq::default();
    let mut before = 0.0;
    let mut gains = Vec::new();
    for turn in &conv.turns {
        history = history.concat(&tokenize(&turn.text));
        let after = variant.score(&passage.tokens, &history);
        if turn.speaker == Speaker::Teacher {
            gains.push(after - before);
        }
        before = after;
    }
    Ok(gains)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClozeQuestion {
    pub passage_id: String,
    pub sentence: String,
    pub masked_entity: String,
    pub masked_form: String,
}

/// Entity to mask in `sentence`: longest first, then leftmost. Entities that
/// occur more than once in the sentence are skipped so the masked form has a
/// single `[MASK]`.
fn pick_entity(sentence: &str) -> Option<(String, usize)> {
    extract_entities(sentence, MAX_ENTITY_RUN)
        .into_iter()
        .filter(|e| sentence.matches(e.text.as_str()).count() == 1)
        .min_by_key(|e| {
            (
                std::cmp::Reverse(e.n_tokens),
                std::cmp::Reverse(e.text.chars().count()),
                e.start,
            )
        })
        .map(|e| (e.text, e.start))
}

/// Up to `k` cloze questions from distinct sentences, chosen with a seeded
/// shuffle and returned in passage order.
pub fn cloze_questions(passage: &Passage, k: usize, seed: u64) -> Result<Vec<ClozeQuestion>, EvalError> {
    let mut eligible: Vec<(usize, ClozeQuestion)> = passage
        .sentences
        .iter()
        .enumerate()
        .filter_map(|(i, s)| {
            let (entity, start) = pick_entity(s)?;
            let masked_form = format!("{}{MASK}{}", &s[..start], &s[start + entity.len()..]);
            Some((
                i,
                ClozeQuestion {
                    passage_id: passage.id.clone(),
                    sentence: s.clone(),
                    masked_entity: entity,
                    masked_form,
                },
            ))
        })
        .collect();
    if eligible.is_empty() {
        return Err(EvalError::NoMaskableEntities(passage.id.clone()));
    }
    eligible.shuffle(&mut seeds::rng(seed));
    eligible.truncate(k);
    eligible.sort_by_key(|(i, _)| *i);
    Ok(eligible.into_iter().map(|(_, q)| q).collect())
}

fn window_context(tokens: &[String], start: usize, end: usize) -> TokenSeq {
    let left = &tokens[start.saturating_sub(CONTEXT_WINDOW)..start];
    let right = &tokens[end..(end + CONTEXT_WINDOW).min(tokens.len())];
    TokenSeq::from_tokens(left.iter().chain(right).cloned())
}

/// Lexical QA PROXY. Every span of up to `entity length + 2` tokens inside a
/// single sentence of the conversation is a candidate answer; its score is the ROUGE-1 F1 of the
/// ±5 tokens around it against the ±5 tokens around the mask.
pub fn answer_cloze(question: &ClozeQuestion, conv: &Conversation) -> (String, f64) {
    let (left, right) = question
        .masked_form
        .split_once(MASK)
        .unwrap_or((question.masked_form.as_str(), ""));
    let left = tokenize(left).tokens;
    let right = tokenize(right).tokens;
    let q_ctx = TokenSeq::from_tokens(
        left[left.len().saturating_sub(CONTEXT_WINDOW)..]
            .iter()
            .chain(right.iter().take(CONTEXT_WINDOW))
            .cloned(),
    );
    let max_len = tokenize(&question.masked_entity).len() + 2;
    let mut best = (String::new(), 0.0);
    for sentence in conv.turns.iter().flat_map(|t| split_sentences(&t.text)) {
        let toks = tokenize(&sentence).tokens;
        for start in 0..toks.len() {
            for len in 1..=max_len.min(toks.len() - start) {
                let end = start + len;
                let score = rouge_1_f1(&q_ctx, &window_context(&toks, start, end));
                if score > best.1 {
                    best = (toks[start..end].join(" "), score);
                }
            }
        }
    }
    best
}

/// Mean token F1 of the proxy's answers and mean confidence.
pub fn qa_metrics(questions: &[ClozeQuestion], conv: &Conversation) -> Result<(f64, f64), EvalError> {
    if questions.is_empty() {
        return Err(EvalError::NoQuestions);
    }
    let (f1, conf) = questions.iter().fold((0.0, 0.0), |(f, c), q| {
        let (pred, confidence) = answer_cloze(q, conv);
        (f + token_f1(&tokenize(&pred), &tokenize(&q.masked_entity)), c + confidence)
    });
    let n = questions.len() as f64;
    Ok((f1 / n, conf / n))
}

fn log_tf(text: &str) -> BTreeMap<String, f64> {
    let mut tf: BTreeMap<String, f64> = BTreeMap::new();
    for t in tokenize(text).tokens {
        *tf.entry(t).or_insert(0.0) += 1.0;
    }
    for v in tf.values_mut() {
        *v = 1.0 + v.ln();
    }
    tf
}

/// Relevance PROXY: cosine of log-scaled term frequencies, mapped from
/// [-1, 1] to [0, 1].
pub fn relevance(student_utterance: &str, teacher_response: &str) -> f64 {
    let a = log_tf(student_utterance);
    let b = log_tf(teacher_response);
    let dot: f64 = a.iter().filter_map(|(t, x)| b.get(t).map(|y| x * y)).sum();
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    let cos = if na == 0.0 || nb == 0.0 { 0.0 } else { dot / (na * nb) };
    ((cos.clamp(-1.0, 1.0) + 1.0) / 2.0).clamp(0.0, 1.0)
}

/// Relevance from an external scorer speaking the coherence wire format.
pub fn relevance_external(
    handle: &dyn ClassifierHandle,
    student_utterance: &str,
    teacher_response: &str,
) -> Result<f64, EvalError> {
    let out = handle
        .classify(student_utterance, teacher_response)
        .map_err(|e| EvalError::BackendUnavailable(e.to_string()))?;
    Ok(match out {
        ClassifierOutput::Logits { o_c, o_i } => softmax_pair(o_c, o_i),
        ClassifierOutput::Label(l) => crate::coherence::score_constant_label(l, &LabelConstants::default()),
    })
}

/// Pearson correlation of two paired rating lists.
pub fn pearson_agreement(a: &[f64], b: &[f64]) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(EvalError::TooFewRatings(a.len()));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(EvalError::DegenerateVariance);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub n_turns: usize,
    pub seed: u64,
    pub n_questions: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            n_turns: 3,
            seed: DEFAULT_EVAL_SEED,
            n_questions: 5,
        }
    }
}

/// Metric row for one passage, or the aggregate over all of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub passage_id: String,
    pub r1: f64,
    pub r2: f64,
    pub rl: f64,
    pub qa_f1: f64,
    pub qa_conf: f64,
    pub coherence_mean: f64,
    pub relevance_mean: f64,
    /// ROUGE-1 information gain per teacher turn.
    pub ig_per_turn: Vec<f64>,
    pub ig_per_turn_r2: Vec<f64>,
    pub ig_per_turn_rl: Vec<f64>,
    pub avg_utterance_len: f64,
    pub n_questions: usize,
}

impl EvalRow {
    pub fn ig(&self, variant: RougeVariant) -> &[f64] {
        match variant {
            RougeVariant::R1 => &self.ig_per_turn,
            RougeVariant::R2 => &self.ig_per_turn_r2,
            RougeVariant::RL => &self.ig_per_turn_rl,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalBackends {
    pub coherence: String,
    pub qa: String,
    pub relevance: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub config: EvalConfig,
    pub policy: PolicyParams,
    pub backend: EvalBackends,
    pub passages: Vec<EvalRow>,
    pub aggregate: EvalRow,
    pub conversations: Vec<Conversation>,
}

fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn question_seed(base: u64, passage_id: &str) -> u64 {
    seeds::derive(base, &[seeds::hash_str(passage_id)])
}

fn evaluate_one(
    params: &PolicyParams,
    passage: &Passage,
    cfg: &EvalConfig,
    scorer: &dyn CoherenceScorer,
    student: &dyn Student,
) -> Result<(EvalRow, Conversation), EvalError> {
    let conv = run_conversation(
        passage,
        params,
        student,
        cfg.n_turns,
        DecodeMode::Greedy,
        seeds::derive(cfg.seed, &[seeds::hash_str(&passage.id)]),
    )?;
    let (r1, r2, rl) = conversation_coverage(passage, &conv)?;
    let (qa_f1, qa_conf, n_questions) =
        match cloze_questions(passage, cfg.n_questions, question_seed(cfg.seed, &passage.id)) {
            Ok(qs) => {
                let (f, c) = qa_metrics(&qs, &conv)?;
                (f, c, qs.len())
            }
            Err(EvalError::NoMaskableEntities(_)) => (0.0, 0.0, 0),
            Err(e) => return Err(e),
        };
    let texts = conv.texts();
    let mut coherence = Vec::new();
    let mut relevances = Vec::new();
    let mut lengths = Vec::new();
    for pos in conv.teacher_positions() {
        coherence.push(scorer.score(&texts[..pos], texts[pos])?.value);
        if pos > 0 {
            relevances.push(relevance(texts[pos - 1], texts[pos]));
        }
        lengths.push(tokenize(texts[pos]).len() as f64);
    }
    let row = EvalRow {
        passage_id: passage.id.clone(),
        r1,
        r2,
        rl,
        qa_f1,
        qa_conf,
        coherence_mean: mean(coherence),
        relevance_mean: mean(relevances),
        ig_per_turn: info_gain(passage, &conv, RougeVariant::R1)?,
        ig_per_turn_r2: info_gain(passage, &conv, RougeVariant::R2)?,
        ig_per_turn_rl: info_gain(passage, &conv, RougeVariant::RL)?,
        avg_utterance_len: mean(lengths),
        n_questions,
    };
    Ok((row, conv))
}

fn aggregate(rows: &[EvalRow], n_turns: usize) -> EvalRow {
    let col = |f: fn(&EvalRow) -> f64| mean(rows.iter().map(f));
    let ig = |v: RougeVariant| -> Vec<f64> {
        (0..n_turns)
            .map(|t| mean(rows.iter().filter_map(|r| r.ig(v).get(t).copied())))
            .collect()
    };
    EvalRow {
        passage_id: "aggregate".into(),
        r1: col(|r| r.r1),
        r2: col(|r| r.r2),
        rl: col(|r| r.rl),
        qa_f1: col(|r| r.qa_f1),
        qa_conf: col(|r| r.qa_conf),
        coherence_mean: col(|r| r.coherence_mean),
        relevance_mean: col(|r| r.relevance_mean),
        ig_per_turn: ig(RougeVariant::R1),
        ig_per_turn_r2: ig(RougeVariant::R2),
        ig_per_turn_rl: ig(RougeVariant::RL),
        avg_utterance_len: col(|r| r.avg_utterance_len),
        n_questions: rows.iter().map(|r| r.n_questions).sum(),
    }
}

/// Greedy self-play on every passage, then all metrics. Passages are scored
/// in parallel; rows keep corpus order.
pub fn evaluate(
    params: &PolicyParams,
    corpus: &[Passage],
    cfg: &EvalConfig,
    scorer: &dyn CoherenceScorer,
    student: &dyn Student,
) -> Result<EvalReport, EvalError> {
    if corpus.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let results: Vec<(EvalRow, Conversation)> = corpus
        .par_iter()
        .map(|p| evaluate_one(params, p, cfg, scorer, student))
        .collect::<Result<_, _>>()?;
    let (passages, conversations): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok(EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: cfg.clone(),
        policy: params.clone(),
        backend: EvalBackends {
            coherence: scorer.backend().report_name().to_string(),
            qa: "lexical-cloze (PROXY)".into(),
            relevance: "log-tf-cosine (PROXY)".into(),
        },
        aggregate: aggregate(&passages, cfg.n_turns),
        passages,
        conversations,
    })
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Flat CSV: one row per passage plus a final `aggregate` row.
    pub fn to_csv(&self) -> String {
        let n = self.config.n_turns;
        let mut header: Vec<String> = [
            "passage_id", "r1", "r2", "rl", "qa_f1", "qa_conf", "coherence_mean",
            "relevance_mean", "avg_utterance_len", "n_questions",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for tag in ["r1", "r2", "rl"] {
            header.extend((1..=n).map(|t| format!("ig_{tag}_turn{t}")));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&header).expect("in-memory write");
        for row in self.passages.iter().chain(std::iter::once(&self.aggregate)) {
            let mut rec = vec![
                row.passage_id.clone(),
                row.r1.to_string(),
                row.r2.to_string(),
                row.rl.to_string(),
                row.qa_f1.to_string(),
                row.qa_conf.to_string(),
                row.coherence_mean.to_string(),
                row.relevance_mean.to_string(),
                row.avg_utterance_len.to_string(),
                row.n_questions.to_string(),
            ];
            for v in RougeVariant::ALL {
                let ig = row.ig(v);
                rec.extend((0..n).map(|t| ig.get(t).map_or(String::new(), |x| x.to_string())));
            }
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn write(&self, json_path: &Path) -> Result<(), EvalError> {
        let io = |p: &Path, e: std::io::Error| EvalError::Io {
            path: p.display().to_string(),
            reason: e.to_string(),
        };
        std::fs::write(json_path, self.to_json()).map_err(|e| io(json_path, e))?;
        let csv_path = json_path.with_extension("csv");
        std::fs::write(&csv_path, self.to_csv()).map_err(|e| io(&csv_path, e))
    }
}
