//! Teacher optimization: self-critic policy gradient plus an MLE anchor,
//! interleaved `a` MLE batches then `b` RL batches per cycle.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coherence::{CoherenceBackend, CoherenceScorer};
use crate::datasets::Dialogue;
use crate::policy::{self, Candidate, Features, PolicyError, PolicyParams, FEATURE_DIM};
use crate::rewards::{AttributionMode, RewardConfig, RewardError};
use crate::seeds;
use crate::selfplay::{self, BaselineMode, Passage, Rollout, SelfPlayError, Speaker, Turn};
use crate::student::Student;
use crate::textproc::{rouge_1_f1, tokenize};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("MLE batches requested but no anchors were given")]
    NoAnchors,
    #[error("anchor refers to passage {0}, which is not in the corpus")]
    PassageMissing(String),
    #[error("rollout is incomplete: {0}")]
    IncompleteRollout(String),
    #[error("parameters diverged at cycle {cycle}")]
    DivergedParameters { cycle: usize, last_good: PolicyParams },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    SelfPlay(#[from] SelfPlayError),
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Interleave schedule: `a` MLE batch updates then `b` RL batch updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GammaSchedule {
    pub mle_batches_per_cycle: usize,
    pub rl_batches_per_cycle: usize,
}

impl Default for GammaSchedule {
    fn default() -> Self {
        GammaSchedule {
            mle_batches_per_cycle: 3,
            rl_batches_per_cycle: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub beta: f64,
    pub gamma_schedule: GammaSchedule,
    /// When set, each cycle takes one step on `γ·L_rl + (1−γ)·L_mle`
    /// instead of interleaving.
    pub explicit_gamma: Option<f64>,
    pub learning_rate: f64,
    /// Number of cycles.
    pub steps: usize,
    pub mle_batch_size: usize,
    pub rl_batch_size: usize,
    pub n_turns: usize,
    pub seed: u64,
    pub cov_clip: f64,
    pub coherence_backend: CoherenceBackend,
    pub attribution: AttributionMode,
    pub baseline: BaselineMode,
    /// Weight each turn's log-prob term by the utterance token count.
    pub length_weighted: bool,
    pub workers: usize,
    pub checkpoint_dir: Option<PathBuf>,
    pub checkpoint_every: usize,
    pub init: PolicyParams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            beta: 0.7,
            gamma_schedule: GammaSchedule::default(),
            explicit_gamma: None,
            learning_rate: 1e-3,
            steps: 2000,
            mle_batch_size: 8,
            rl_batch_size: 5,
            n_turns: 3,
            seed: 0,
            cov_clip: 0.5,
            coherence_backend: CoherenceBackend::LexicalBaseline,
            attribution: AttributionMode::PerTurnTeacher,
            baseline: BaselineMode::StepLevel,
            length_weighted: false,
            workers: 1,
            checkpoint_dir: None,
            checkpoint_every: 100,
            init: PolicyParams::zeros(),
        }
    }
}

impl TrainConfig {
    pub fn reward_config(&self) -> RewardConfig {
        RewardConfig {
            beta: self.beta,
            cov_clip: self.cov_clip,
            attribution: self.attribution,
            coherence_backend: self.coherence_backend,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::InvalidConfig(m));
        if !(0.0..=1.0).contains(&self.beta) {
            return bad(format!("beta must lie in [0, 1], got {}", self.beta));
        }
        if self.cov_clip.is_nan() || self.cov_clip <= 0.0 {
            return bad(format!("cov_clip must be positive, got {}", self.cov_clip));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.gamma_schedule.rl_batches_per_cycle == 0 {
            return bad("rl_batches_per_cycle must be at least 1".into());
        }
        if let Some(g) = self.explicit_gamma {
            if !(0.0..=1.0).contains(&g) {
                return bad(format!("gamma must lie in [0, 1], got {g}"));
            }
        }
        if self.n_turns == 0 || self.rl_batch_size == 0 {
            return bad("n_turns and rl_batch_size must be at least 1".into());
        }
        if self.mle_batch_size == 0 && self.uses_mle() {
            return bad("mle_batch_size must be at least 1".into());
        }
        self.init.validate()?;
        Ok(())
    }

    fn uses_mle(&self) -> bool {
        match self.explicit_gamma {
            Some(g) => g < 1.0,
            None => self.gamma_schedule.mle_batches_per_cycle > 0,
        }
    }
}

/// A (history, gold teacher response) pair from a recorded dialogue.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorExample {
    pub passage_id: String,
    pub history: Vec<Turn>,
    pub gold_response: String,
    pub projected_action: Option<usize>,
}

/// One anchor per teacher turn.
pub fn anchors_from_dialogues(dialogues: &[Dialogue]) -> Vec<AnchorExample> {
    let mut out = Vec::new();
    for d in dialogues {
        for (i, t) in d.turns.iter().enumerate() {
            if t.speaker == Speaker::Teacher && !t.text.trim().is_empty() {
                out.push(AnchorExample {
                    passage_id: d.passage_id.clone(),
                    history: d.turns[..i].to_vec(),
                    gold_response: t.text.clone(),
                    projected_action: None,
                });
            }
        }
    }
    out
}

/// Keep only anchors whose passage is in `corpus`.
pub fn anchors_for_corpus(anchors: Vec<AnchorExample>, corpus: &[Passage]) -> Vec<AnchorExample> {
    anchors
        .into_iter()
        .filter(|a| corpus.iter().any(|p| p.id == a.passage_id))
        .collect()
}

/// Candidate closest to the gold response by ROUGE-1 F1, lowest index on ties.
pub fn project_reference(gold_response: &str, candidates: &[Candidate]) -> Result<usize, PolicyError> {
    if candidates.is_empty() {
        return Err(PolicyError::NoCandidates);
    }
    let gold = tokenize(gold_response);
    let scores: Vec<f64> = candidates
        .iter()
        .map(|c| rouge_1_f1(&gold, &tokenize(&c.text)))
        .collect();
    Ok(policy::argmax(&scores))
}

/// `−log p(projected action)` and its gradient.
pub fn mle_loss_and_grad(
    params: &PolicyParams,
    anchor: &AnchorExample,
    passage: Option<&Passage>,
) -> Result<(f64, Features), TrainError> {
    let passage = passage
        .filter(|p| p.id == anchor.passage_id)
        .ok_or_else(|| TrainError::PassageMissing(anchor.passage_id.clone()))?;
    let candidates = policy::gen_candidates(passage, &anchor.history)?;
    let action = match anchor.projected_action {
        Some(a) if a < candidates.len() => a,
        _ => project_reference(&anchor.gold_response, &candidates)?,
    };
    mle_on_candidates(params, &candidates, action)
}

fn mle_on_candidates(
    params: &PolicyParams,
    candidates: &[Candidate],
    action: usize,
) -> Result<(f64, Features), TrainError> {
    let lp = policy::log_probs(params, candidates)?;
    let g = policy::log_prob_grad(params, candidates, action)?;
    Ok((-lp[action], g.map(|x| -x)))
}

/// Self-critic loss `−Σ_n A_n log p(sampled_n)` with `A_n = R(sampled_n) − R(greedy_n)`.
/// Rewards are constants; log-probs are recomputed under `params`.
pub fn rl_loss_and_grad(
    params: &PolicyParams,
    rollout: &Rollout,
    length_weighted: bool,
) -> Result<(f64, Features), TrainError> {
    if rollout.per_turn.is_empty() {
        return Err(TrainError::IncompleteRollout("no turns".into()));
    }
    if rollout.per_turn.len() != rollout.sampled.n_teacher_turns() {
        return Err(TrainError::IncompleteRollout(format!(
            "{} turn records for {} teacher turns",
            rollout.per_turn.len(),
            rollout.sampled.n_teacher_turns()
        )));
    }
    let mut loss = 0.0;
    let mut grad = [0.0; FEATURE_DIM];
    for t in &rollout.per_turn {
        let a = t.sampled_decision.chosen_index;
        let weight = if length_weighted {
            tokenize(&t.candidates[a].text).len() as f64
        } else {
            1.0
        };
        let adv = t.advantage() * weight;
        if !adv.is_finite() {
            return Err(TrainError::IncompleteRollout("non-finite reward".into()));
        }
        let lp = policy::log_probs(params, &t.candidates)?;
        let g = policy::log_prob_grad(params, &t.candidates, a)?;
        loss -= adv * lp[a];
        for k in 0..FEATURE_DIM {
            grad[k] -= adv * g[k];
        }
    }
    Ok((loss, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpdateKind {
    Mle,
    Rl,
    Combined,
}

impl UpdateKind {
    pub fn code(self) -> char {
        match self {
            UpdateKind::Mle => 'M',
            UpdateKind::Rl => 'R',
            UpdateKind::Combined => 'G',
        }
    }
}

/// Statistics of one training cycle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleRecord {
    pub step: usize,
    pub loss_rl: f64,
    pub loss_mle: f64,
    pub mean_r_cov: f64,
    pub mean_r_coh: f64,
    pub mean_r_mixed: f64,
    pub mean_len: f64,
    pub max_r_cov: f64,
    pub n_clipped: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrainLog {
    pub records: Vec<CycleRecord>,
}

pub const TRAIN_LOG_HEADER: &str = "step,loss_rl,loss_mle,mean_r_cov,mean_r_coh,mean_r_mixed,mean_len";

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(TRAIN_LOG_HEADER);
        s.push('\n');
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.step, r.loss_rl, r.loss_mle, r.mean_r_cov, r.mean_r_coh, r.mean_r_mixed, r.mean_len
            );
        }
        s
    }

    /// Mean of `f` over records `range` (clamped to the log).
    pub fn window_mean(&self, range: std::ops::Range<usize>, f: impl Fn(&CycleRecord) -> f64) -> f64 {
        let end = range.end.min(self.records.len());
        let start = range.start.min(end);
        let slice = &self.records[start..end];
        if slice.is_empty() {
            return 0.0;
        }
        slice.iter().map(f).sum::<f64>() / slice.len() as f64
    }

    pub fn first_mean(&self, n: usize, f: impl Fn(&CycleRecord) -> f64) -> f64 {
        self.window_mean(0..n, f)
    }

    pub fn last_mean(&self, n: usize, f: impl Fn(&CycleRecord) -> f64) -> f64 {
        let len = self.records.len();
        self.window_mean(len.saturating_sub(n)..len, f)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: PolicyParams,
    pub log: TrainLog,
    pub trace: Vec<UpdateKind>,
}

/// Round-robin draw over a seeded reshuffle per epoch.
struct Sampler {
    len: usize,
    seed: u64,
    epoch: u64,
    order: Vec<usize>,
    cursor: usize,
}

impl Sampler {
    fn new(len: usize, seed: u64) -> Sampler {
        let mut s = Sampler {
            len,
            seed,
            epoch: 0,
            order: Vec::new(),
            cursor: 0,
        };
        s.reshuffle();
        s
    }

    fn reshuffle(&mut self) {
        self.order = (0..self.len).collect();
        self.order
            .shuffle(&mut seeds::rng(seeds::derive(self.seed, &[self.epoch])));
        self.cursor = 0;
    }

    fn take(&mut self, n: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            if self.cursor == self.order.len() {
                self.epoch += 1;
                self.reshuffle();
            }
            out.push(self.order[self.cursor]);
            self.cursor += 1;
        }
        out
    }
}

fn add_scaled(acc: &mut Features, g: &Features, scale: f64) {
    for k in 0..FEATURE_DIM {
        acc[k] += scale * g[k];
    }
}

struct RlBatch {
    loss: f64,
    grad: Features,
    r_cov: Vec<f64>,
    r_coh: Vec<f64>,
    r_mixed: Vec<f64>,
    lens: Vec<f64>,
    n_clipped: usize,
}

pub struct Trainer<'a> {
    pub config: TrainConfig,
    corpus: &'a [Passage],
    anchors: Vec<AnchorExample>,
    anchor_passage: Vec<usize>,
    scorer: &'a dyn CoherenceScorer,
    student: &'a dyn Student,
    pool: Option<rayon::ThreadPool>,
}

impl<'a> Trainer<'a> {
    pub fn new(
        config: TrainConfig,
        corpus: &'a [Passage],
        anchors: &[AnchorExample],
        scorer: &'a dyn CoherenceScorer,
        student: &'a dyn Student,
    ) -> Result<Trainer<'a>, TrainError> {
        config.validate()?;
        if corpus.is_empty() {
            return Err(TrainError::EmptyCorpus);
        }
        if config.uses_mle() && config.steps > 0 && anchors.is_empty() {
            return Err(TrainError::NoAnchors);
        }
        let index: HashMap<&str, usize> = corpus
            .iter()
            .enumerate()
            .map(|(i, p)| (p.id.as_str(), i))
            .collect();
        let mut resolved = Vec::with_capacity(anchors.len());
        let mut anchor_passage = Vec::with_capacity(anchors.len());
        for a in anchors {
            let pi = *index
                .get(a.passage_id.as_str())
                .ok_or_else(|| TrainError::PassageMissing(a.passage_id.clone()))?;
            let mut a = a.clone();
            if a.projected_action.is_none() {
                let cands = policy::gen_candidates(&corpus[pi], &a.history)?;
                a.projected_action = Some(project_reference(&a.gold_response, &cands)?);
            }
            resolved.push(a);
            anchor_passage.push(pi);
        }
        let pool = if config.workers > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(config.workers)
                    .build()
                    .map_err(|e| TrainError::InvalidConfig(e.to_string()))?,
            )
        } else {
            None
        };
        Ok(Trainer {
            config,
            corpus,
            anchors: resolved,
            anchor_passage,
            scorer,
            student,
            pool,
        })
    }

    fn mle_batch(&self, params: &PolicyParams, idx: &[usize]) -> Result<(f64, Features), TrainError> {
        let mut loss = 0.0;
        let mut grad = [0.0; FEATURE_DIM];
        for &i in idx {
            let (l, g) = mle_loss_and_grad(params, &self.anchors[i], Some(&self.corpus[self.anchor_passage[i]]))?;
            loss += l;
            add_scaled(&mut grad, &g, 1.0);
        }
        let n = idx.len() as f64;
        Ok((loss / n, grad.map(|x| x / n)))
    }

    fn rollouts(&self, params: &PolicyParams, idx: &[usize], seed: u64) -> Result<Vec<Rollout>, TrainError> {
        let reward_cfg = self.config.reward_config();
        let one = |(k, &pi): (usize, &usize)| -> Result<Rollout, TrainError> {
            Ok(selfplay::dual_rollout(
                &self.corpus[pi],
                params,
                self.student,
                self.config.n_turns,
                seeds::derive(seed, &[k as u64]),
                &reward_cfg,
                self.scorer,
                self.config.baseline,
            )?)
        };
        match &self.pool {
            Some(pool) => pool.install(|| {
                use rayon::prelude::*;
                idx.par_iter().enumerate().map(one).collect()
            }),
            None => idx.iter().enumerate().map(one).collect(),
        }
    }

    fn rl_batch(&self, params: &PolicyParams, idx: &[usize], seed: u64) -> Result<RlBatch, TrainError> {
        let rollouts = self.rollouts(params, idx, seed)?;
        let mut b = RlBatch {
            loss: 0.0,
            grad: [0.0; FEATURE_DIM],
            r_cov: Vec::new(),
            r_coh: Vec::new(),
            r_mixed: Vec::new(),
            lens: Vec::new(),
            n_clipped: 0,
        };
        for r in &rollouts {
            let (l, g) = rl_loss_and_grad(params, r, self.config.length_weighted)?;
            b.loss += l;
            add_scaled(&mut b.grad, &g, 1.0);
            for t in &r.per_turn {
                let sr = &t.sampled_reward;
                b.r_cov.push(sr.r_cov);
                b.r_coh.push(sr.r_coh);
                b.r_mixed.push(sr.r_mixed);
                b.n_clipped += usize::from(sr.clipped);
                b.lens.push(tokenize(&t.candidates[t.sampled_decision.chosen_index].text).len() as f64);
            }
        }
        let n = rollouts.len() as f64;
        b.loss /= n;
        b.grad = b.grad.map(|x| x / n);
        Ok(b)
    }

    fn step(&self, params: &mut PolicyParams, grad: &Features, cycle: usize, last_good: &PolicyParams) -> Result<(), TrainError> {
        for (w, g) in params.weights.iter_mut().zip(grad) {
            *w -= self.config.learning_rate * g;
        }
        if params.weights.iter().any(|w| !w.is_finite()) {
            if let Some(dir) = &self.config.checkpoint_dir {
                let path = dir.join("last-good.json");
                last_good.save(&path)?;
            }
            return Err(TrainError::DivergedParameters {
                cycle,
                last_good: last_good.clone(),
            });
        }
        Ok(())
    }

    fn checkpoint(&self, params: &PolicyParams, cycle: usize) -> Result<(), TrainError> {
        if let Some(dir) = &self.config.checkpoint_dir {
            std::fs::create_dir_all(dir).map_err(|source| TrainError::Io {
                path: dir.display().to_string(),
                source,
            })?;
            params.save(&dir.join(format!("checkpoint-{cycle:06}.json")))?;
        }
        Ok(())
    }

    pub fn run(&self) -> Result<TrainOutcome, TrainError> {
        let cfg = &self.config;
        let mut params = cfg.init.clone();
        let mut log = TrainLog::default();
        let mut trace = Vec::new();
        let mut passages = Sampler::new(self.corpus.len(), seeds::derive(cfg.seed, &[0x9a55]));
        let mut anchors = Sampler::new(self.anchors.len(), seeds::derive(cfg.seed, &[0xa2c4]));
        let a = cfg.gamma_schedule.mle_batches_per_cycle;
        let b = cfg.gamma_schedule.rl_batches_per_cycle;

        for cycle in 0..cfg.steps {
            let last_good = params.clone();
            let mut mle_losses = Vec::new();
            let mut batches = Vec::new();
            match cfg.explicit_gamma {
                None => {
                    for _ in 0..a {
                        let idx = anchors.take(cfg.mle_batch_size);
                        let (l, g) = self.mle_batch(&params, &idx)?;
                        self.step(&mut params, &g, cycle, &last_good)?;
                        mle_losses.push(l);
                        trace.push(UpdateKind::Mle);
                    }
                    for j in 0..b {
                        let idx = passages.take(cfg.rl_batch_size);
                        let batch = self.rl_batch(&params, &idx, seeds::derive(cfg.seed, &[cycle as u64, j as u64]))?;
                        self.step(&mut params, &batch.grad, cycle, &last_good)?;
                        batches.push(batch);
                        trace.push(UpdateKind::Rl);
                    }
                }
                Some(gamma) => {
                    let batch = self.rl_batch(&params, &passages.take(cfg.rl_batch_size), seeds::derive(cfg.seed, &[cycle as u64, 0]))?;
                    let mut g = [0.0; FEATURE_DIM];
                    add_scaled(&mut g, &batch.grad, gamma);
                    if gamma < 1.0 {
                        let (l, gm) = self.mle_batch(&params, &anchors.take(cfg.mle_batch_size))?;
                        add_scaled(&mut g, &gm, 1.0 - gamma);
                        mle_losses.push(l);
                    }
                    self.step(&mut params, &g, cycle, &last_good)?;
                    batches.push(batch);
                    trace.push(UpdateKind::Combined);
                }
            }

            let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
            let gather = |f: fn(&RlBatch) -> &Vec<f64>| -> Vec<f64> { batches.iter().flat_map(|x| f(x).iter().copied()).collect() };
            let r_cov = gather(|x| &x.r_cov);
            log.records.push(CycleRecord {
                step: cycle,
                loss_rl: mean(&batches.iter().map(|x| x.loss).collect::<Vec<_>>()),
                loss_mle: mean(&mle_losses),
                mean_r_cov: mean(&r_cov),
                mean_r_coh: mean(&gather(|x| &x.r_coh)),
                mean_r_mixed: mean(&gather(|x| &x.r_mixed)),
                mean_len: mean(&gather(|x| &x.lens)),
                max_r_cov: r_cov.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                n_clipped: batches.iter().map(|x| x.n_clipped).sum(),
            });
            if cfg.checkpoint_every > 0 && (cycle + 1) % cfg.checkpoint_every == 0 {
                self.checkpoint(&params, cycle + 1)?;
            }
        }
        Ok(TrainOutcome { params, log, trace })
    }
}

pub fn train(
    config: TrainConfig,
    corpus: &[Passage],
    anchors: &[AnchorExample],
    scorer: &dyn CoherenceScorer,
    student: &dyn Student,
) -> Result<TrainOutcome, TrainError> {
    Trainer::new(config, corpus, anchors, scorer, student)?.run()
}
