//! Self-play reinforcement training and evaluation for passage-grounded
//! teaching dialogues.
//!
//! A teacher policy with access to a passage converses with a simulated
//! student that has none. The teacher is trained with a self-critic policy
//! gradient on a mix of coverage (ROUGE gain against the passage) and
//! coherence rewards, and the resulting conversations are scored with
//! coverage, QA-proxy, coherence and relevance metrics. A small HTTP service
//! runs human evaluation sessions against trained checkpoints.

pub mod cli;
pub mod coherence;
pub mod datasets;
pub mod eval;
pub mod policy;
pub mod rewards;
pub mod seeds;
pub mod selfplay;
pub mod server;
pub mod student;
pub mod textproc;
pub mod trainer;

pub use coherence::{CoherenceScorer, LexicalBaseline};
pub use policy::{DecodeMode, PolicyParams};
pub use rewards::{AttributionMode, RewardBreakdown, RewardConfig};
pub use selfplay::{Conversation, Passage, Speaker, Turn};
pub use student::RuleStudent;
pub use textproc::{tokenize, TokenSeq};
pub use trainer::{train, TrainConfig};
