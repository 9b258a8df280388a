//! Coherence scoring backends and the coherence-dataset builder.
//!
//! Three ways to score a teacher response against its history:
//! a two-logit classifier read through a softmax, a three-way entailment
//! classifier mapped to constant scores, and a lexical proxy that needs no
//! model at all. Classifiers sit behind [`ClassifierHandle`] so tests can use
//! fixed outputs and deployments can point at an HTTP scorer.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datasets::Dialogue;
use crate::selfplay::Speaker;
use crate::textproc::{rouge_1_f1, tokenize, TokenSeq};

/// Separator placed between history utterances and before the response
/// when a classifier input is serialized.
pub const SEP: &str = " [SEP] ";

#[derive(Debug, Error)]
pub enum CoherenceError {
    #[error("coherence backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("malformed classifier output: {0}")]
    MalformedLogits(String),
    #[error("malformed dialogue {dialogue_id}: {reason}")]
    MalformedDialogue { dialogue_id: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NliLabel {
    Entailed,
    Neutral,
    Contradict,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelConstants {
    pub s_e: f64,
    pub s_n: f64,
    pub s_c: f64,
}

impl Default for LabelConstants {
    fn default() -> Self {
        LabelConstants {
            s_e: 1.0,
            s_n: 0.2,
            s_c: 0.0,
        }
    }
}

impl LabelConstants {
    pub fn new(s_e: f64, s_n: f64, s_c: f64) -> Option<LabelConstants> {
        (s_e >= s_n && s_n >= s_c && (0.0..=1.0).contains(&s_e) && (0.0..=1.0).contains(&s_c))
            .then_some(LabelConstants { s_e, s_n, s_c })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoherenceScore {
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub logits: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<NliLabel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoherenceBackend {
    SoftmaxClassifier,
    ConstantLabels,
    LexicalBaseline,
}

impl CoherenceBackend {
    /// Name used in reports; proxies are labeled as such.
    pub fn report_name(self) -> &'static str {
        match self {
            CoherenceBackend::SoftmaxClassifier => "softmax-classifier",
            CoherenceBackend::ConstantLabels => "constant-labels",
            CoherenceBackend::LexicalBaseline => "lexical-baseline (PROXY)",
        }
    }
}

/// Raw output of a coherence classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassifierOutput {
    Logits { o_c: f64, o_i: f64 },
    Label(NliLabel),
}

pub trait ClassifierHandle: Send + Sync {
    fn classify(&self, history: &str, response: &str) -> Result<ClassifierOutput, CoherenceError>;
}

/// `exp(o_c) / (exp(o_c) + exp(o_i))`, computed without overflow.
pub fn softmax_pair(o_c: f64, o_i: f64) -> f64 {
    let d = o_i - o_c;
    if d >= 0.0 {
        let e = (-d).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + d.exp())
    }
}

pub fn join_history<S: AsRef<str>>(history: &[S]) -> String {
    history
        .iter()
        .map(AsRef::as_ref)
        .collect::<Vec<_>>()
        .join(SEP)
}

/// Single classifier input string: history and response joined by the separator.
pub fn classifier_input(history: &str, response: &str) -> String {
    format!("{history}{SEP}{response}")
}

pub fn score_softmax(
    history: &str,
    response: &str,
    backend: &dyn ClassifierHandle,
) -> Result<CoherenceScore, CoherenceError> {
    match backend.classify(history, response)? {
        ClassifierOutput::Logits { o_c, o_i } => logits_score(o_c, o_i),
        ClassifierOutput::Label(l) => Err(CoherenceError::MalformedLogits(format!(
            "expected logits, classifier returned label {l:?}"
        ))),
    }
}

fn logits_score(o_c: f64, o_i: f64) -> Result<CoherenceScore, CoherenceError> {
    if !o_c.is_finite() || !o_i.is_finite() {
        return Err(CoherenceError::MalformedLogits(format!(
            "non-finite logits ({o_c}, {o_i})"
        )));
    }
    Ok(CoherenceScore {
        value: softmax_pair(o_c, o_i),
        logits: Some((o_c, o_i)),
        label: None,
    })
}

pub fn score_constant_label(label: NliLabel, constants: &LabelConstants) -> f64 {
    match label {
        NliLabel::Entailed => constants.s_e,
        NliLabel::Neutral => constants.s_n,
        NliLabel::Contradict => constants.s_c,
    }
}

/// Lexical PROXY for coherence: half responsiveness to the last utterance,
/// half novelty with respect to the whole history.
pub fn score_lexical_baseline<S: AsRef<str>>(history: &[S], response: &str) -> CoherenceScore {
    let resp = tokenize(response);
    let last = history
        .last()
        .map(|s| tokenize(s.as_ref()))
        .unwrap_or_default();
    let full = history
        .iter()
        .fold(TokenSeq::default(), |acc, s| acc.concat(&tokenize(s.as_ref())));
    let relevance = rouge_1_f1(&last, &resp);
    let novelty = 1.0 - rouge_1_f1(&full, &resp);
    CoherenceScore {
        value: (0.5 * relevance + 0.5 * novelty).clamp(0.0, 1.0),
        logits: None,
        label: None,
    }
}

/// Anything that turns (history, response) into a coherence score in [0,1].
pub trait CoherenceScorer: Send + Sync {
    fn score(&self, history: &[&str], response: &str) -> Result<CoherenceScore, CoherenceError>;
    fn backend(&self) -> CoherenceBackend;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalBaseline;

impl CoherenceScorer for LexicalBaseline {
    fn score(&self, history: &[&str], response: &str) -> Result<CoherenceScore, CoherenceError> {
        Ok(score_lexical_baseline(history, response))
    }

    fn backend(&self) -> CoherenceBackend {
        CoherenceBackend::LexicalBaseline
    }
}

pub struct SoftmaxScorer<C> {
    pub classifier: C,
}

impl<C: ClassifierHandle> CoherenceScorer for SoftmaxScorer<C> {
    fn score(&self, history: &[&str], response: &str) -> Result<CoherenceScore, CoherenceError> {
        score_softmax(&join_history(history), response, &self.classifier)
    }

    fn backend(&self) -> CoherenceBackend {
        CoherenceBackend::SoftmaxClassifier
    }
}

pub struct ConstantLabelScorer<C> {
    pub classifier: C,
    pub constants: LabelConstants,
}

impl<C: ClassifierHandle> CoherenceScorer for ConstantLabelScorer<C> {
    fn score(&self, history: &[&str], response: &str) -> Result<CoherenceScore, CoherenceError> {
        match self.classifier.classify(&join_history(history), response)? {
            ClassifierOutput::Label(label) => Ok(CoherenceScore {
                value: score_constant_label(label, &self.constants),
                logits: None,
                label: Some(label),
            }),
            ClassifierOutput::Logits { .. } => Err(CoherenceError::MalformedLogits(
                "expected an entailment label, classifier returned logits".into(),
            )),
        }
    }

    fn backend(&self) -> CoherenceBackend {
        CoherenceBackend::ConstantLabels
    }
}

/// Accepts whichever reply shape the classifier sends: logits are read
/// through the softmax, labels through the constants.
pub struct AutoScorer<C> {
    pub classifier: C,
    pub constants: LabelConstants,
}

impl<C: ClassifierHandle> CoherenceScorer for AutoScorer<C> {
    fn score(&self, history: &[&str], response: &str) -> Result<CoherenceScore, CoherenceError> {
        match self.classifier.classify(&join_history(history), response)? {
            ClassifierOutput::Logits { o_c, o_i } => logits_score(o_c, o_i),
            ClassifierOutput::Label(label) => Ok(CoherenceScore {
                value: score_constant_label(label, &self.constants),
                logits: None,
                label: Some(label),
            }),
        }
    }

    fn backend(&self) -> CoherenceBackend {
        CoherenceBackend::SoftmaxClassifier
    }
}

/// Test stub returning the same output for every input.
#[derive(Debug, Clone, Copy)]
pub struct FixedClassifier(pub ClassifierOutput);

impl ClassifierHandle for FixedClassifier {
    fn classify(&self, _: &str, _: &str) -> Result<ClassifierOutput, CoherenceError> {
        Ok(self.0)
    }
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    history: &'a str,
    response: &'a str,
}

#[derive(Deserialize)]
struct ScoreReply {
    o_c: Option<f64>,
    o_i: Option<f64>,
    label: Option<String>,
}

/// Client for an external scorer speaking `POST /score`.
///
/// Request `{"history", "response"}`, reply `{"o_c", "o_i"}` or
/// `{"label": "entailed"|"neutral"|"contradict"}`. Transport failures and
/// 5xx replies are retried with capped exponential backoff.
pub struct HttpClassifier {
    endpoint: String,
    client: reqwest::blocking::Client,
    pub max_attempts: u32,
    pub base_backoff: Duration,
    pub max_backoff: Duration,
}

impl HttpClassifier {
    pub fn new(base_url: &str) -> Result<HttpClassifier, CoherenceError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| CoherenceError::BackendUnavailable(e.to_string()))?;
        Ok(HttpClassifier {
            endpoint: format!("{}/score", base_url.trim_end_matches('/')),
            client,
            max_attempts: 3,
            base_backoff: Duration::from_millis(100),
            max_backoff: Duration::from_secs(2),
        })
    }

    fn attempt(&self, history: &str, response: &str) -> Result<ScoreReply, (bool, String)> {
        let resp = self
            .client
            .post(&self.endpoint)
            .json(&ScoreRequest { history, response })
            .send()
            .map_err(|e| (true, e.to_string()))?;
        let status = resp.status();
        if status.is_server_error() {
            return Err((true, format!("scorer replied {status}")));
        }
        if !status.is_success() {
            return Err((false, format!("scorer replied {status}")));
        }
        resp.json::<ScoreReply>().map_err(|e| (false, e.to_string()))
    }
}

impl ClassifierHandle for HttpClassifier {
    fn classify(&self, history: &str, response: &str) -> Result<ClassifierOutput, CoherenceError> {
        let mut backoff = self.base_backoff;
        let mut last_err = String::new();
        for attempt in 0..self.max_attempts.max(1) {
            if attempt > 0 {
                std::thread::sleep(backoff);
                backoff = (backoff * 2).min(self.max_backoff);
            }
            match self.attempt(history, response) {
                Ok(reply) => return parse_reply(reply),
                Err((retryable, msg)) => {
                    last_err = msg;
                    if !retryable {
                        break;
                    }
                }
            }
        }
        Err(CoherenceError::BackendUnavailable(last_err))
    }
}

fn parse_reply(reply: ScoreReply) -> Result<ClassifierOutput, CoherenceError> {
    match reply {
        ScoreReply {
            o_c: Some(o_c),
            o_i: Some(o_i),
            ..
        } => Ok(ClassifierOutput::Logits { o_c, o_i }),
        ScoreReply {
            label: Some(l), ..
        } => match l.to_ascii_lowercase().as_str() {
            "entailed" => Ok(ClassifierOutput::Label(NliLabel::Entailed)),
            "neutral" => Ok(ClassifierOutput::Label(NliLabel::Neutral)),
            "contradict" => Ok(ClassifierOutput::Label(NliLabel::Contradict)),
            other => Err(CoherenceError::MalformedLogits(format!("unknown label {other:?}"))),
        },
        _ => Err(CoherenceError::MalformedLogits(
            "reply carries neither o_c/o_i nor label".into(),
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairLabel {
    Coherent,
    Incoherent,
}

/// One classifier training example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherencePair {
    #[serde(rename = "history")]
    pub history_text: String,
    #[serde(rename = "response")]
    pub response_text: String,
    pub label: PairLabel,
    pub dialogue_id: String,
    pub turn_index: usize,
}

/// For each teacher response r_i with history h_i, emit (h_i, r_i) as
/// coherent and (h_i, r_j) for every later teacher response r_j as incoherent.
pub fn build_coherence_dataset(dialogues: &[Dialogue]) -> Result<Vec<CoherencePair>, CoherenceError> {
    let mut out = Vec::new();
    for d in dialogues {
        let malformed = |reason: &str| CoherenceError::MalformedDialogue {
            dialogue_id: d.dialogue_id.clone(),
            reason: reason.to_string(),
        };
        if d.turns.is_empty() {
            return Err(malformed("no turns"));
        }
        if d.turns.windows(2).any(|w| w[0].speaker == w[1].speaker) {
            return Err(malformed("turns do not alternate"));
        }
        let teacher_pos: Vec<usize> = d
            .turns
            .iter()
            .enumerate()
            .filter(|(_, t)| t.speaker == Speaker::Teacher)
            .map(|(i, _)| i)
            .collect();
        if teacher_pos.is_empty() {
            return Err(malformed("no teacher responses"));
        }
        if teacher_pos.iter().any(|&i| d.turns[i].text.trim().is_empty()) {
            return Err(malformed("empty teacher response"));
        }
        for (k, &i) in teacher_pos.iter().enumerate() {
            let history = join_history(
                &d.turns[..i]
                    .iter()
                    .map(|t| t.text.as_str())
                    .collect::<Vec<_>>(),
            );
            out.push(CoherencePair {
                history_text: history.clone(),
                response_text: d.turns[i].text.clone(),
                label: PairLabel::Coherent,
                dialogue_id: d.dialogue_id.clone(),
                turn_index: i,
            });
            for &j in &teacher_pos[k + 1..] {
                out.push(CoherencePair {
                    history_text: history.clone(),
                    response_text: d.turns[j].text.clone(),
                    label: PairLabel::Incoherent,
                    dialogue_id: d.dialogue_id.clone(),
                    turn_index: i,
                });
            }
        }
    }
    Ok(out)
}
