//! Coverage, coherence and mixed rewards for teacher utterances.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coherence::{CoherenceBackend, CoherenceError, CoherenceScorer};
use crate::selfplay::{Conversation, Passage, Speaker, Turn};
use crate::student::{Student, StudentError};
use crate::textproc::{rouge_1_f1, tokenize, TokenSeq};

#[derive(Debug, Error)]
pub enum RewardError {
    #[error("passage has no tokens")]
    EmptyPassage,
    #[error("conversation has no teacher turns")]
    EmptyConversation,
    #[error("invalid reward config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Coherence(#[from] CoherenceError),
    #[error(transparent)]
    Student(#[from] StudentError),
}

/// Which utterances a reward delta is credited to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributionMode {
    /// Each teacher utterance against the history before it.
    #[default]
    PerTurnTeacher,
    /// Coverage delta also includes the student reply that follows.
    PerTurnBoth,
    /// One breakdown for the whole conversation, copied to every turn.
    EndOfConversation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub beta: f64,
    pub cov_clip: f64,
    pub attribution: AttributionMode,
    pub coherence_backend: CoherenceBackend,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            beta: 0.7,
            cov_clip: 0.5,
            attribution: AttributionMode::PerTurnTeacher,
            coherence_backend: CoherenceBackend::LexicalBaseline,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), RewardError> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(RewardError::InvalidConfig(format!(
                "beta must lie in [0, 1], got {}",
                self.beta
            )));
        }
        if self.cov_clip.is_nan() || self.cov_clip <= 0.0 {
            return Err(RewardError::InvalidConfig(format!(
                "cov_clip must be positive, got {}",
                self.cov_clip
            )));
        }
        Ok(())
    }
}

/// Coverage part of a breakdown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coverage {
    pub r_cov_raw: f64,
    pub r_cov: f64,
    pub clipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_cov: f64,
    pub r_cov_raw: f64,
    pub r_coh: f64,
    pub r_mixed: f64,
    pub beta: f64,
    pub clipped: bool,
}

impl RewardBreakdown {
    pub fn new(cov: Coverage, r_coh: f64, beta: f64) -> RewardBreakdown {
        RewardBreakdown {
            r_cov: cov.r_cov,
            r_cov_raw: cov.r_cov_raw,
            r_coh,
            r_mixed: mixed_reward(cov.r_cov, r_coh, beta),
            beta,
            clipped: cov.clipped,
        }
    }
}

/// ROUGE-1 gain of the passage when `utterance` is appended to `history`,
/// clipped from above at `cfg.cov_clip`. Negative gains pass through.
pub fn coverage_reward(
    passage: &TokenSeq,
    history: &TokenSeq,
    utterance: &TokenSeq,
    cfg: &RewardConfig,
) -> Result<Coverage, RewardError> {
    if passage.is_empty() {
        return Err(RewardError::EmptyPassage);
    }
    let raw = rouge_1_f1(passage, &history.concat(utterance)) - rouge_1_f1(passage, history);
    Ok(clip(raw, cfg.cov_clip))
}

fn clip(raw: f64, cov_clip: f64) -> Coverage {
    Coverage {
        r_cov_raw: raw,
        r_cov: raw.min(cov_clip),
        clipped: raw > cov_clip,
    }
}

pub fn mixed_reward(r_cov: f64, r_coh: f64, beta: f64) -> f64 {
    beta * r_cov + (1.0 - beta) * r_coh
}

fn history_tokens(turns: &[Turn]) -> TokenSeq {
    turns
        .iter()
        .fold(TokenSeq::default(), |acc, t| acc.concat(&tokenize(&t.text)))
}

fn coherence_of(
    scorer: &dyn CoherenceScorer,
    history: &[Turn],
    response: &str,
) -> Result<f64, RewardError> {
    let texts: Vec<&str> = history.iter().map(|t| t.text.as_str()).collect();
    Ok(scorer.score(&texts, response)?.value)
}

/// Rewards for every teacher turn of `conv`, attributed per `cfg.attribution`.
pub fn attribute_rewards(
    passage: &Passage,
    conv: &Conversation,
    cfg: &RewardConfig,
    scorer: &dyn CoherenceScorer,
) -> Result<Vec<RewardBreakdown>, RewardError> {
    cfg.validate()?;
    if passage.tokens.is_empty() {
        return Err(RewardError::EmptyPassage);
    }
    let positions = conv.teacher_positions();
    if positions.is_empty() {
        return Err(RewardError::EmptyConversation);
    }
    let mut coh = Vec::with_capacity(positions.len());
    for &i in &positions {
        coh.push(coherence_of(scorer, &conv.turns[..i], &conv.turns[i].text)?);
    }
    match cfg.attribution {
        AttributionMode::PerTurnTeacher | AttributionMode::PerTurnBoth => positions
            .iter()
            .zip(&coh)
            .map(|(&i, &r_coh)| {
                let history = history_tokens(&conv.turns[..i]);
                let mut utterance = tokenize(&conv.turns[i].text);
                if cfg.attribution == AttributionMode::PerTurnBoth {
                    if let Some(next) = conv.turns.get(i + 1) {
                        if next.speaker == Speaker::Student {
                            utterance = utterance.concat(&tokenize(&next.text));
                        }
                    }
                }
                let cov = coverage_reward(&passage.tokens, &history, &utterance, cfg)?;
                Ok(RewardBreakdown::new(cov, r_coh, cfg.beta))
            })
            .collect(),
        AttributionMode::EndOfConversation => {
            let b = end_of_conversation(passage, conv, &positions, &coh, cfg)?;
            Ok(vec![b; positions.len()])
        }
    }
}

fn end_of_conversation(
    passage: &Passage,
    conv: &Conversation,
    positions: &[usize],
    coh: &[f64],
    cfg: &RewardConfig,
) -> Result<RewardBreakdown, RewardError> {
    let teacher_only = positions
        .iter()
        .fold(TokenSeq::default(), |acc, &i| acc.concat(&tokenize(&conv.turns[i].text)));
    let cov = coverage_reward(&passage.tokens, &TokenSeq::default(), &teacher_only, cfg)?;
    let mean_coh = coh.iter().sum::<f64>() / coh.len() as f64;
    Ok(RewardBreakdown::new(cov, mean_coh, cfg.beta))
}

/// Reward of a baseline utterance `text` substituted for the teacher turn at
/// `turn_index` of `sampled` (the history is `sampled.turns[..turn_index]`).
///
/// In `PerTurnBoth` mode the student reply to the baseline utterance is
/// regenerated with the same student seed. In `EndOfConversation` mode the
/// whole sampled conversation is re-scored with the substitution in place.
#[allow(clippy::too_many_arguments)]
pub fn baseline_reward(
    passage: &Passage,
    sampled: &Conversation,
    turn_index: usize,
    text: &str,
    student: &dyn Student,
    student_seed: u64,
    has_reply: bool,
    cfg: &RewardConfig,
    scorer: &dyn CoherenceScorer,
) -> Result<RewardBreakdown, RewardError> {
    let history = &sampled.turns[..turn_index];
    match cfg.attribution {
        AttributionMode::PerTurnTeacher | AttributionMode::PerTurnBoth => {
            let r_coh = coherence_of(scorer, history, text)?;
            let mut utterance = tokenize(text);
            if cfg.attribution == AttributionMode::PerTurnBoth && has_reply {
                let mut h = history.to_vec();
                h.push(Turn::new(Speaker::Teacher, text));
                let reply = student.respond(&h, student_seed)?;
                utterance = utterance.concat(&tokenize(&reply));
            }
            let cov = coverage_reward(&passage.tokens, &history_tokens(history), &utterance, cfg)?;
            Ok(RewardBreakdown::new(cov, r_coh, cfg.beta))
        }
        AttributionMode::EndOfConversation => {
            let mut alt = sampled.clone();
            alt.turns[turn_index].text = text.to_string();
            let positions = alt.teacher_positions();
            let mut coh = Vec::with_capacity(positions.len());
            for &i in &positions {
                coh.push(coherence_of(scorer, &alt.turns[..i], &alt.turns[i].text)?);
            }
            end_of_conversation(passage, &alt, &positions, &coh, cfg)
        }
    }
}
