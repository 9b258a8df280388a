//! Conversation orchestration between the teacher policy and the student.
//!
//! The teacher always opens. With `n_turns = 3` the transcript is
//! T, S, T, S, T: the teacher speaks three times and the student replies
//! twice. [`dual_rollout`] produces the sampled trajectory together with a
//! greedy baseline utterance for every teacher turn.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coherence::CoherenceScorer;
use crate::policy::{self, Candidate, Decision, DecodeMode, PolicyError, PolicyParams};
use crate::rewards::{self, RewardBreakdown, RewardConfig, RewardError};
use crate::seeds;
use crate::student::{Student, StudentError};
use crate::textproc::{split_sentences, tokenize, TokenSeq};

#[derive(Debug, Error)]
pub enum SelfPlayError {
    #[error("passage {0} has no tokens")]
    EmptyPassage(String),
    #[error("n_turns must be at least 1")]
    NoTurns,
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Student(#[from] StudentError),
    #[error(transparent)]
    Reward(#[from] RewardError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PassageSource {
    Wikipedia,
    News,
    PaperAbstract,
    #[default]
    Other,
}

/// A grounding document.
#[derive(Debug, Clone, PartialEq)]
pub struct Passage {
    pub id: String,
    pub text: String,
    pub tokens: TokenSeq,
    pub sentences: Vec<String>,
    pub source: PassageSource,
    pub truncated_to: Option<usize>,
}

impl Passage {
    pub fn new(id: impl Into<String>, text: impl Into<String>, source: PassageSource) -> Passage {
        let text = text.into();
        Passage {
            id: id.into(),
            tokens: tokenize(&text),
            sentences: split_sentences(&text),
            text,
            source,
            truncated_to: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Teacher,
    Student,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub speaker: Speaker,
    pub text: String,
    #[serde(skip)]
    pub decision: Option<Decision>,
}

impl Turn {
    pub fn new(speaker: Speaker, text: impl Into<String>) -> Turn {
        Turn {
            speaker,
            text: text.into(),
            decision: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conversation {
    pub passage_id: String,
    pub turns: Vec<Turn>,
}

impl Conversation {
    pub fn new(passage_id: impl Into<String>) -> Conversation {
        Conversation {
            passage_id: passage_id.into(),
            turns: Vec::new(),
        }
    }

    pub fn n_teacher_turns(&self) -> usize {
        self.turns
            .iter()
            .filter(|t| t.speaker == Speaker::Teacher)
            .count()
    }

    /// Indices into `turns` of the teacher utterances.
    pub fn teacher_positions(&self) -> Vec<usize> {
        self.turns
            .iter()
            .enumerate()
            .filter(|(_, t)| t.speaker == Speaker::Teacher)
            .map(|(i, _)| i)
            .collect()
    }

    /// Strict alternation starting with the teacher.
    pub fn is_well_formed(&self) -> bool {
        self.turns.first().is_none_or(|t| t.speaker == Speaker::Teacher)
            && self.turns.windows(2).all(|w| w[0].speaker != w[1].speaker)
    }

    pub fn texts(&self) -> Vec<&str> {
        self.turns.iter().map(|t| t.text.as_str()).collect()
    }
}

/// Serialized conversation row (one JSON object per line).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConversationRecord {
    pub passage_id: String,
    pub turns: Vec<Turn>,
    pub rewards: Vec<RewardBreakdown>,
}

impl ConversationRecord {
    pub fn new(conv: &Conversation, rewards: Vec<RewardBreakdown>) -> ConversationRecord {
        ConversationRecord {
            passage_id: conv.passage_id.clone(),
            turns: conv.turns.clone(),
            rewards,
        }
    }
}

/// Teacher decision for the next turn, given the history so far.
pub fn teacher_step(
    passage: &Passage,
    history: &[Turn],
    params: &PolicyParams,
    mode: DecodeMode,
    seed: u64,
) -> Result<(Vec<Candidate>, Decision), SelfPlayError> {
    let candidates = policy::gen_candidates(passage, history)?;
    let decision = policy::decide(params, &candidates, mode, seed)?;
    Ok((candidates, decision))
}

fn teacher_seed(seed: u64, turn: usize) -> u64 {
    seeds::derive(seed, &[0x7e, turn as u64])
}

fn student_seed(seed: u64, turn: usize) -> u64 {
    seeds::derive(seed, &[0x5d, turn as u64])
}

pub fn run_conversation(
    passage: &Passage,
    teacher: &PolicyParams,
    student: &dyn Student,
    n_turns: usize,
    mode: DecodeMode,
    seed: u64,
) -> Result<Conversation, SelfPlayError> {
    if passage.tokens.is_empty() {
        return Err(SelfPlayError::EmptyPassage(passage.id.clone()));
    }
    if n_turns == 0 {
        return Err(SelfPlayError::NoTurns);
    }
    let mut conv = Conversation::new(&passage.id);
    for n in 0..n_turns {
        let (cands, dec) = teacher_step(passage, &conv.turns, teacher, mode, teacher_seed(seed, n))?;
        let mut turn = Turn::new(Speaker::Teacher, cands[dec.chosen_index].text.clone());
        turn.decision = Some(dec);
        conv.turns.push(turn);
        if n + 1 < n_turns {
            let reply = student.respond(&conv.turns, student_seed(seed, n))?;
            conv.turns.push(Turn::new(Speaker::Student, reply));
        }
    }
    Ok(conv)
}

/// Per-teacher-turn record of a dual rollout.
#[derive(Debug, Clone)]
pub struct TurnRecord {
    pub candidates: Vec<Candidate>,
    pub sampled_decision: Decision,
    pub greedy_decision: Decision,
    pub sampled_reward: RewardBreakdown,
    pub greedy_reward: RewardBreakdown,
}

impl TurnRecord {
    /// Self-critic advantage `R(sampled) - R(greedy)`.
    pub fn advantage(&self) -> f64 {
        self.sampled_reward.r_mixed - self.greedy_reward.r_mixed
    }
}

#[derive(Debug, Clone)]
pub struct Rollout {
    pub sampled: Conversation,
    pub greedy: Conversation,
    pub per_turn: Vec<TurnRecord>,
}

/// How the greedy baseline is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMode {
    /// Greedy utterance scored against the sampled trajectory's history.
    #[default]
    StepLevel,
    /// Greedy decoding runs its own full conversation.
    FullGreedyTrajectory,
}

#[allow(clippy::too_many_arguments)]
pub fn dual_rollout(
    passage: &Passage,
    teacher: &PolicyParams,
    student: &dyn Student,
    n_turns: usize,
    seed: u64,
    reward_cfg: &RewardConfig,
    scorer: &dyn CoherenceScorer,
    baseline: BaselineMode,
) -> Result<Rollout, SelfPlayError> {
    if passage.tokens.is_empty() {
        return Err(SelfPlayError::EmptyPassage(passage.id.clone()));
    }
    if n_turns == 0 {
        return Err(SelfPlayError::NoTurns);
    }
    match baseline {
        BaselineMode::StepLevel => step_level_rollout(passage, teacher, student, n_turns, seed, reward_cfg, scorer),
        BaselineMode::FullGreedyTrajectory => {
            full_trajectory_rollout(passage, teacher, student, n_turns, seed, reward_cfg, scorer)
        }
    }
}

fn step_level_rollout(
    passage: &Passage,
    teacher: &PolicyParams,
    student: &dyn Student,
    n_turns: usize,
    seed: u64,
    reward_cfg: &RewardConfig,
    scorer: &dyn CoherenceScorer,
) -> Result<Rollout, SelfPlayError> {
    let mut sampled = Conversation::new(&passage.id);
    let mut greedy = Conversation::new(&passage.id);
    let mut steps = Vec::with_capacity(n_turns);
    for n in 0..n_turns {
        let candidates = policy::gen_candidates(passage, &sampled.turns)?;
        let s_dec = policy::decide(teacher, &candidates, DecodeMode::Sampled, teacher_seed(seed, n))?;
        let g_dec = policy::decide(teacher, &candidates, DecodeMode::Greedy, teacher_seed(seed, n))?;
        let history_len = sampled.turns.len();

        let mut t = Turn::new(Speaker::Teacher, candidates[s_dec.chosen_index].text.clone());
        t.decision = Some(s_dec.clone());
        sampled.turns.push(t);
        let mut g = Turn::new(Speaker::Teacher, candidates[g_dec.chosen_index].text.clone());
        g.decision = Some(g_dec.clone());
        greedy.turns.push(g);

        if n + 1 < n_turns {
            let sseed = student_seed(seed, n);
            let reply = student.respond(&sampled.turns, sseed)?;
            sampled.turns.push(Turn::new(Speaker::Student, reply.clone()));
            greedy.turns.push(Turn::new(Speaker::Student, reply));
        }
        steps.push((candidates, s_dec, g_dec, history_len));
    }

    let s_rewards = rewards::attribute_rewards(passage, &sampled, reward_cfg, scorer)?;
    let mut per_turn = Vec::with_capacity(n_turns);
    for (n, (candidates, s_dec, g_dec, history_len)) in steps.into_iter().enumerate() {
        // greedy baseline: the greedy utterance in place of the sampled one,
        // same history, same student seed for any follow-up reply
        let g_text = &candidates[g_dec.chosen_index].text;
        let g_reward = rewards::baseline_reward(
            passage,
            &sampled,
            history_len,
            g_text,
            student,
            student_seed(seed, n),
            n + 1 < n_turns,
            reward_cfg,
            scorer,
        )?;
        per_turn.push(TurnRecord {
            candidates,
            sampled_decision: s_dec,
            greedy_decision: g_dec,
            sampled_reward: s_rewards[n].clone(),
            greedy_reward: g_reward,
        });
    }
    Ok(Rollout {
        sampled,
        greedy,
        per_turn,
    })
}

fn full_trajectory_rollout(
    passage: &Passage,
    teacher: &PolicyParams,
    student: &dyn Student,
    n_turns: usize,
    seed: u64,
    reward_cfg: &RewardConfig,
    scorer: &dyn CoherenceScorer,
) -> Result<Rollout, SelfPlayError> {
    let sampled = run_conversation(passage, teacher, student, n_turns, DecodeMode::Sampled, seed)?;
    let greedy = run_conversation(passage, teacher, student, n_turns, DecodeMode::Greedy, seed)?;
    let s_rewards = rewards::attribute_rewards(passage, &sampled, reward_cfg, scorer)?;
    let g_rewards = rewards::attribute_rewards(passage, &greedy, reward_cfg, scorer)?;
    let mut per_turn = Vec::with_capacity(n_turns);
    for (n, pos) in sampled.teacher_positions().into_iter().enumerate() {
        let candidates = policy::gen_candidates(passage, &sampled.turns[..pos])?;
        let gpos = greedy.teacher_positions()[n];
        per_turn.push(TurnRecord {
            candidates,
            sampled_decision: sampled.turns[pos].decision.clone().expect("teacher turn has decision"),
            greedy_decision: greedy.turns[gpos].decision.clone().expect("teacher turn has decision"),
            sampled_reward: s_rewards[n].clone(),
            greedy_reward: g_rewards[n].clone(),
        });
    }
    Ok(Rollout {
        sampled,
        greedy,
        per_turn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherence::LexicalBaseline;
    use crate::policy::FEATURE_DIM;
    use crate::rewards::AttributionMode;
    use crate::student::RuleStudent;

    fn passage() -> Passage {
        Passage::new(
            "p1",
            "BERT was released by Google in 2018. It changed NLP benchmarks. However, training it costs a lot.",
            PassageSource::Other,
        )
    }

    #[test]
    fn three_turns_alternate() {
        let c = run_conversation(
            &passage(),
            &PolicyParams::zeros(),
            &RuleStudent::default(),
            3,
            DecodeMode::Sampled,
            1,
        )
        .unwrap();
        let speakers: Vec<_> = c.turns.iter().map(|t| t.speaker).collect();
        use Speaker::*;
        assert_eq!(speakers, vec![Teacher, Student, Teacher, Student, Teacher]);
        assert!(c.is_well_formed());
        assert_eq!(c.n_teacher_turns(), 3);
    }

    #[test]
    fn single_turn_and_determinism() {
        let p = passage();
        let st = RuleStudent::default();
        let one = run_conversation(&p, &PolicyParams::zeros(), &st, 1, DecodeMode::Greedy, 3).unwrap();
        assert_eq!(one.turns.len(), 1);
        let a = run_conversation(&p, &PolicyParams::zeros(), &st, 3, DecodeMode::Sampled, 9).unwrap();
        let b = run_conversation(&p, &PolicyParams::zeros(), &st, 3, DecodeMode::Sampled, 9).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            run_conversation(&Passage::new("e", " ", PassageSource::Other), &PolicyParams::zeros(), &st, 3, DecodeMode::Greedy, 1),
            Err(SelfPlayError::EmptyPassage(_))
        ));
    }

    #[test]
    fn dual_rollout_shapes() {
        let p = passage();
        let cfg = RewardConfig::default();
        let mut params = PolicyParams::zeros();
        params.weights = [1.0, 0.5, 0.2, 0.1, -1.0, 0.0];
        for baseline in [BaselineMode::StepLevel, BaselineMode::FullGreedyTrajectory] {
            let r = dual_rollout(&p, &params, &RuleStudent::default(), 3, 4, &cfg, &LexicalBaseline, baseline)
                .unwrap();
            assert_eq!(r.per_turn.len(), 3);
            assert_eq!(r.sampled.turns.len(), r.greedy.turns.len());
            for t in &r.per_turn {
                let probs = &t.greedy_decision.probs;
                let argmax = probs
                    .iter()
                    .enumerate()
                    .fold(0, |b, (i, &p)| if p > probs[b] { i } else { b });
                assert_eq!(t.greedy_decision.chosen_index, argmax);
                assert_eq!(t.candidates[0].features.len(), FEATURE_DIM);
            }
        }
    }

    #[test]
    fn deterministic_policy_has_zero_advantage() {
        let p = Passage::new("one", "Rust is fast.", PassageSource::Other);
        // length feature separates VERBATIM from the longer TOPIC_PREFIX
        // variant; a tiny temperature puts all mass on the latter
        let mut params = PolicyParams::zeros();
        params.weights = [0.0, 0.0, 0.0, 1.0, 0.0, 0.0];
        params.temperature = 1e-4;
        for mode in [AttributionMode::PerTurnTeacher, AttributionMode::EndOfConversation] {
            let cfg = RewardConfig {
                attribution: mode,
                ..RewardConfig::default()
            };
            let r = dual_rollout(&p, &params, &RuleStudent::default(), 3, 2, &cfg, &LexicalBaseline, BaselineMode::StepLevel)
                .unwrap();
            for t in &r.per_turn {
                assert_eq!(t.sampled_decision.chosen_index, t.greedy_decision.chosen_index);
                assert_eq!(t.advantage(), 0.0);
            }
        }
    }
}
