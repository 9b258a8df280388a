//! The teacher policy: a log-linear choice over candidate utterances.
//!
//! Each teacher turn builds a small candidate set from the passage
//! sentences, describes every candidate with a fixed 6-dimensional feature
//! vector, and picks one with `softmax(w·f / T)`. The whole utterance is one
//! action, so `log p` of a turn and its gradient are available in closed form.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeds;
use crate::selfplay::{Passage, Speaker, Turn};
use crate::textproc::{rouge_1_f1, tokenize, TokenSeq};

pub const FEATURE_DIM: usize = 6;
pub const CHECKPOINT_VERSION: u32 = 1;

pub type Features = [f64; FEATURE_DIM];

/// Connectives removed by the LEAD_TRIM template.
pub const CONNECTIVES: [&str; 12] = [
    "however",
    "moreover",
    "furthermore",
    "additionally",
    "also",
    "therefore",
    "thus",
    "meanwhile",
    "nevertheless",
    "instead",
    "consequently",
    "finally",
];

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("passage {0} has no sentences")]
    EmptyPassage(String),
    #[error("no candidates to choose from")]
    NoCandidates,
    #[error("candidate index {index} out of range for {len} candidates")]
    InvalidIndex { index: usize, len: usize },
    #[error("invalid policy parameters: {0}")]
    InvalidParams(String),
    #[error("checkpoint {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint {path}: {reason}")]
    Checkpoint { path: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    Verbatim,
    LeadTrim,
    TopicPrefix,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub text: String,
    pub source_sentence_index: usize,
    pub template_id: TemplateId,
    pub features: Features,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub weights: Features,
    pub temperature: f64,
}

impl Default for PolicyParams {
    fn default() -> Self {
        PolicyParams::zeros()
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    weights: Vec<f64>,
    temperature: f64,
    feature_dim: usize,
    version: u32,
}

impl PolicyParams {
    /// Uniform policy.
    pub fn zeros() -> PolicyParams {
        PolicyParams {
            weights: [0.0; FEATURE_DIM],
            temperature: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        if !self.weights.iter().all(|w| w.is_finite()) {
            return Err(PolicyError::InvalidParams("non-finite weight".into()));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(PolicyError::InvalidParams(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    pub fn to_checkpoint_json(&self) -> String {
        let file = CheckpointFile {
            weights: self.weights.to_vec(),
            temperature: self.temperature,
            feature_dim: FEATURE_DIM,
            version: CHECKPOINT_VERSION,
        };
        serde_json::to_string_pretty(&file).expect("checkpoint serializes")
    }

    pub fn from_checkpoint_json(json: &str, origin: &str) -> Result<PolicyParams, PolicyError> {
        let bad = |reason: String| PolicyError::Checkpoint {
            path: origin.to_string(),
            reason,
        };
        let file: CheckpointFile = serde_json::from_str(json).map_err(|e| bad(e.to_string()))?;
        if file.version != CHECKPOINT_VERSION {
            return Err(bad(format!("unsupported version {}", file.version)));
        }
        if file.feature_dim != FEATURE_DIM || file.weights.len() != FEATURE_DIM {
            return Err(bad(format!(
                "expected {FEATURE_DIM} weights, got feature_dim={} and {} weights",
                file.feature_dim,
                file.weights.len()
            )));
        }
        let mut weights = [0.0; FEATURE_DIM];
        weights.copy_from_slice(&file.weights);
        let p = PolicyParams {
            weights,
            temperature: file.temperature,
        };
        p.validate().map_err(|e| bad(e.to_string()))?;
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<(), PolicyError> {
        fs::write(path, self.to_checkpoint_json() + "\n").map_err(|source| PolicyError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<PolicyParams, PolicyError> {
        let json = fs::read_to_string(path).map_err(|source| PolicyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        PolicyParams::from_checkpoint_json(&json, &path.display().to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMode {
    Greedy,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decision {
    pub chosen_index: usize,
    pub probs: Vec<f64>,
    pub log_prob: f64,
    pub mode: DecodeMode,
}

fn capitalize_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Lowercase the first letter unless the first word looks like an acronym
/// or a proper noun with inner capitals ("BERT", "GitHub").
fn lower_first(s: &str) -> String {
    let first_word = s.split_whitespace().next().unwrap_or("");
    if first_word.chars().skip(1).any(|c| c.is_uppercase()) {
        return s.to_string();
    }
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn lead_trim(sentence: &str) -> Option<String> {
    let first = sentence.split_whitespace().next()?;
    let word = first.trim_end_matches([',', ';', ':']);
    if !CONNECTIVES.contains(&word.to_lowercase().as_str()) {
        return None;
    }
    let rest = sentence[first.len()..].trim_start_matches([',', ' ', ';', ':']);
    if rest.is_empty() {
        return None;
    }
    Some(capitalize_first(rest))
}

/// History-dependent quantities shared by all candidates of one turn.
struct TurnContext {
    history: TokenSeq,
    last_student: Option<TokenSeq>,
    base_coverage: f64,
}

impl TurnContext {
    fn new(passage: &Passage, history: &[Turn]) -> TurnContext {
        let history_tokens = history
            .iter()
            .fold(TokenSeq::default(), |acc, t| acc.concat(&tokenize(&t.text)));
        let last_student = history
            .iter()
            .rev()
            .find(|t| t.speaker == Speaker::Student)
            .map(|t| tokenize(&t.text));
        TurnContext {
            base_coverage: rouge_1_f1(&passage.tokens, &history_tokens),
            history: history_tokens,
            last_student,
        }
    }

    fn features(&self, passage: &Passage, sentence_index: usize, text: &str) -> Features {
        let c = tokenize(text);
        let novelty = rouge_1_f1(&passage.tokens, &self.history.concat(&c)) - self.base_coverage;
        let responsiveness = self
            .last_student
            .as_ref()
            .map_or(0.0, |s| rouge_1_f1(s, &c));
        let n_sent = passage.sentences.len().max(1) as f64;
        let position = 1.0 - sentence_index as f64 / n_sent;
        let length = (c.len() as f64 / 40.0).min(1.0);
        let repetition = rouge_1_f1(&self.history, &c);
        [novelty, responsiveness, position, length, repetition, 1.0]
    }
}

/// Feature vector of a candidate:
/// novelty (coverage gain), responsiveness to the last student utterance,
/// passage position, length, repetition of the history, bias.
pub fn featurize(candidate: &Candidate, passage: &Passage, history: &[Turn]) -> Features {
    TurnContext::new(passage, history).features(
        passage,
        candidate.source_sentence_index,
        &candidate.text,
    )
}

/// Candidate utterances for the next teacher turn, in (sentence, template)
/// order with exact-text duplicates removed.
pub fn gen_candidates(passage: &Passage, history: &[Turn]) -> Result<Vec<Candidate>, PolicyError> {
    if passage.sentences.is_empty() {
        return Err(PolicyError::EmptyPassage(passage.id.clone()));
    }
    let ctx = TurnContext::new(passage, history);
    let mut out: Vec<Candidate> = Vec::with_capacity(passage.sentences.len() * 3);
    for (idx, sentence) in passage.sentences.iter().enumerate() {
        let mut texts = vec![(TemplateId::Verbatim, sentence.clone())];
        if let Some(trimmed) = lead_trim(sentence) {
            texts.push((TemplateId::LeadTrim, trimmed));
        }
        let prefixed = if history.is_empty() {
            format!("Did you know that {}", lower_first(sentence))
        } else {
            format!("Well, {sentence}")
        };
        texts.push((TemplateId::TopicPrefix, prefixed));
        for (template_id, text) in texts {
            if text.trim().is_empty() || out.iter().any(|c| c.text == text) {
                continue;
            }
            let features = ctx.features(passage, idx, &text);
            out.push(Candidate {
                text,
                source_sentence_index: idx,
                template_id,
                features,
            });
        }
    }
    if out.is_empty() {
        return Err(PolicyError::NoCandidates);
    }
    Ok(out)
}

fn dot(a: &Features, b: &Features) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Log-probabilities of every candidate under the policy.
pub fn log_probs(params: &PolicyParams, candidates: &[Candidate]) -> Result<Vec<f64>, PolicyError> {
    if candidates.is_empty() {
        return Err(PolicyError::NoCandidates);
    }
    let logits: Vec<f64> = candidates
        .iter()
        .map(|c| dot(&params.weights, &c.features) / params.temperature)
        .collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    Ok(logits.into_iter().map(|l| l - lse).collect())
}

pub fn probabilities(params: &PolicyParams, candidates: &[Candidate]) -> Result<Vec<f64>, PolicyError> {
    Ok(log_probs(params, candidates)?.into_iter().map(f64::exp).collect())
}

/// Index of the largest probability, lowest index on exact ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn decide(
    params: &PolicyParams,
    candidates: &[Candidate],
    mode: DecodeMode,
    seed: u64,
) -> Result<Decision, PolicyError> {
    let lp = log_probs(params, candidates)?;
    let probs: Vec<f64> = lp.iter().map(|l| l.exp()).collect();
    let chosen_index = match mode {
        DecodeMode::Greedy => argmax(&lp),
        DecodeMode::Sampled => {
            let u: f64 = seeds::rng(seed).random();
            let mut acc = 0.0;
            let mut pick = probs.len() - 1;
            for (i, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            pick
        }
    };
    Ok(Decision {
        chosen_index,
        log_prob: lp[chosen_index],
        probs,
        mode,
    })
}

/// `∇_w log p(chosen) = (f_chosen − Σ_k p_k f_k) / T`.
pub fn log_prob_grad(
    params: &PolicyParams,
    candidates: &[Candidate],
    chosen_index: usize,
) -> Result<Features, PolicyError> {
    if chosen_index >= candidates.len() {
        if candidates.is_empty() {
            return Err(PolicyError::NoCandidates);
        }
        return Err(PolicyError::InvalidIndex {
            index: chosen_index,
            len: candidates.len(),
        });
    }
    let probs = probabilities(params, candidates)?;
    let mut expected = [0.0; FEATURE_DIM];
    for (p, c) in probs.iter().zip(candidates) {
        for (e, f) in expected.iter_mut().zip(&c.features) {
            *e += p * f;
        }
    }
    let chosen = &candidates[chosen_index].features;
    let mut g = [0.0; FEATURE_DIM];
    for k in 0..FEATURE_DIM {
        g[k] = (chosen[k] - expected[k]) / params.temperature;
    }
    Ok(g)
}
