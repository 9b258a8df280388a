//! Simulated student. It never sees the passage: the only input is the
//! conversation history, and the reply is a template filled with an entity
//! lifted from the teacher's last utterance.

use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeds;
use crate::selfplay::{Speaker, Turn};
use crate::textproc::extract_entities;

#[derive(Debug, Error)]
pub enum StudentError {
    #[error("student needs a non-empty history")]
    EmptyHistory,
    #[error("history must end with a teacher utterance")]
    NotTeacherTurn,
    #[error("student backend unavailable: {0}")]
    BackendUnavailable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleCategory {
    InfoSeeking,
    OpenStatement,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StudentRule {
    pub category: RuleCategory,
    pub template: &'static str,
}

impl StudentRule {
    pub fn fill(&self, entity: &str) -> String {
        self.template.replace("{entity}", entity)
    }
}

pub const INFO_SEEKING: [StudentRule; 3] = [
    StudentRule {
        category: RuleCategory::InfoSeeking,
        template: "What is {entity}?",
    },
    StudentRule {
        category: RuleCategory::InfoSeeking,
        template: "Tell me more about {entity}.",
    },
    StudentRule {
        category: RuleCategory::InfoSeeking,
        template: "Why is {entity} important?",
    },
];

pub const OPEN_STATEMENTS: [StudentRule; 3] = [
    StudentRule {
        category: RuleCategory::OpenStatement,
        template: "That's interesting!",
    },
    StudentRule {
        category: RuleCategory::OpenStatement,
        template: "Go on.",
    },
    StudentRule {
        category: RuleCategory::OpenStatement,
        template: "What else can you tell me?",
    },
];

pub trait Student: Send + Sync {
    fn respond(&self, history: &[Turn], seed: u64) -> Result<String, StudentError>;
}

fn last_teacher(history: &[Turn]) -> Result<&Turn, StudentError> {
    let last = history.last().ok_or(StudentError::EmptyHistory)?;
    if last.speaker != Speaker::Teacher {
        return Err(StudentError::NotTeacherTurn);
    }
    Ok(last)
}

/// Rule-based student.
#[derive(Debug, Clone, Copy)]
pub struct RuleStudent {
    pub info_seeking_prob: f64,
}

impl Default for RuleStudent {
    fn default() -> Self {
        RuleStudent {
            info_seeking_prob: 0.6,
        }
    }
}

/// Entities the student may ask about, in order of appearance.
pub fn student_entities(teacher_utterance: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for e in extract_entities(teacher_utterance, 4) {
        if !out.contains(&e.text) {
            out.push(e.text);
        }
    }
    out
}

impl Student for RuleStudent {
    fn respond(&self, history: &[Turn], seed: u64) -> Result<String, StudentError> {
        let last = last_teacher(history)?;
        let entities = student_entities(&last.text);
        let mut rng = seeds::rng(seed);
        let ask = rng.random::<f64>() < self.info_seeking_prob;
        if ask && !entities.is_empty() {
            let rule = &INFO_SEEKING[rng.random_range(0..INFO_SEEKING.len())];
            let entity = &entities[rng.random_range(0..entities.len())];
            Ok(rule.fill(entity))
        } else {
            Ok(OPEN_STATEMENTS[rng.random_range(0..OPEN_STATEMENTS.len())]
                .template
                .to_string())
        }
    }
}

#[derive(Serialize)]
struct RespondRequest<'a> {
    history: Vec<&'a str>,
}

#[derive(Deserialize)]
struct RespondReply {
    utterance: String,
}

/// External student speaking `POST /respond {"history": [..]} -> {"utterance"}`.
pub struct HttpStudent {
    endpoint: String,
    client: reqwest::blocking::Client,
}

impl HttpStudent {
    pub fn new(base_url: &str) -> Result<HttpStudent, StudentError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| StudentError::BackendUnavailable(e.to_string()))?;
        Ok(HttpStudent {
            endpoint: format!("{}/respond", base_url.trim_end_matches('/')),
            client,
        })
    }
}

impl Student for HttpStudent {
    fn respond(&self, history: &[Turn], _seed: u64) -> Result<String, StudentError> {
        last_teacher(history)?;
        let req = RespondRequest {
            history: history.iter().map(|t| t.text.as_str()).collect(),
        };
        let unavailable = |e: reqwest::Error| StudentError::BackendUnavailable(e.to_string());
        let reply: RespondReply = self
            .client
            .post(&self.endpoint)
            .json(&req)
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(unavailable)?
            .json()
            .map_err(unavailable)?;
        Ok(reply.utterance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closure(teacher: &str) -> Vec<String> {
        let mut all: Vec<String> = OPEN_STATEMENTS.iter().map(|r| r.template.to_string()).collect();
        for e in student_entities(teacher) {
            for r in &INFO_SEEKING {
                all.push(r.fill(&e));
            }
        }
        all
    }

    #[test]
    fn no_entities_falls_back_to_open_statement() {
        let h = [Turn::new(Speaker::Teacher, "it is a nice day outside.")];
        let opens: Vec<_> = OPEN_STATEMENTS.iter().map(|r| r.template).collect();
        for seed in 0..50 {
            let r = RuleStudent::default().respond(&h, seed).unwrap();
            assert!(opens.contains(&r.as_str()));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let h = [Turn::new(Speaker::Teacher, "BERT obtains new results")];
        let s = RuleStudent::default();
        assert_eq!(s.respond(&h, 11).unwrap(), s.respond(&h, 11).unwrap());
    }

    #[test]
    fn replies_stay_in_template_closure() {
        let teacher = "Google released BERT in 2018 and it topped GLUE.";
        let h = [Turn::new(Speaker::Teacher, teacher)];
        let allowed = closure(teacher);
        let mut seen_question = false;
        for seed in 0..200 {
            let r = RuleStudent::default().respond(&h, seed).unwrap();
            assert!(allowed.contains(&r), "{r}");
            seen_question |= r.contains("BERT") || r.contains("2018");
        }
        assert!(seen_question);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            RuleStudent::default().respond(&[], 0),
            Err(StudentError::EmptyHistory)
        ));
        let h = [Turn::new(Speaker::Student, "hi")];
        assert!(matches!(
            RuleStudent::default().respond(&h, 0),
            Err(StudentError::NotTeacherTurn)
        ));
    }
}
