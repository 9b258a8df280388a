//! Human-evaluation session service.
//!
//! An evaluator chats with a teacher policy (three teacher turns), then tries
//! to recover masked passage sentences from the conversation, then scores
//! the teacher on a rubric. Every state change is appended to a JSONL event
//! log; the in-memory session table is rebuilt from that log on startup.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;
use tower_http::cors::CorsLayer;

use crate::eval::{cloze_questions, ClozeQuestion, EvalError};
use crate::policy::{DecodeMode, PolicyParams};
use crate::seeds;
use crate::selfplay::{teacher_step, Passage, Speaker, Turn};

pub const TEACHER_TURNS: usize = 3;
pub const QA_ITEMS: usize = 5;
pub const DEFAULT_PORT: u16 = 8080;

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("event log {path}: {reason}")]
    Log { path: String, reason: String },
    #[error("event log {path} is corrupt at line {line}: {reason}")]
    CorruptLog { path: String, line: usize, reason: String },
    #[error("no checkpoint loaded")]
    NoCheckpoints,
    #[error("binding {addr}: {reason}")]
    Bind { addr: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SessionState {
    Chatting,
    Qa,
    Rating,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratings {
    pub coherence: u8,
    pub readability: u8,
    pub overall: u8,
}

impl Ratings {
    fn validate(&self) -> Result<(), ApiError> {
        let bad = |field: &str, v: u8, lo: u8| {
            ApiError::unprocessable(
                "OutOfRange",
                format!("{field} must be in {lo}..=3, got {v}"),
            )
        };
        if !(1..=3).contains(&self.coherence) {
            return Err(bad("coherence", self.coherence, 1));
        }
        if !(1..=3).contains(&self.readability) {
            return Err(bad("readability", self.readability, 1));
        }
        if self.overall > 3 {
            return Err(bad("overall", self.overall, 0));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaAnswer {
    pub recoverable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recovered_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSession {
    pub session_id: u64,
    pub passage_id: String,
    pub checkpoint_id: String,
    pub created_at: u64,
    pub state: SessionState,
    pub turns: Vec<Turn>,
    pub qa_items: Vec<ClozeQuestion>,
    pub answers: Vec<QaAnswer>,
    pub qa_human_ratio: Option<f64>,
    pub ratings: Option<Ratings>,
}

impl EvalSession {
    pub fn teacher_turns(&self) -> usize {
        self.turns.iter().filter(|t| t.speaker == Speaker::Teacher).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Created {
        session_id: u64,
        passage_id: String,
        checkpoint_id: String,
        created_at: u64,
        opening: String,
    },
    Utterance {
        session_id: u64,
        user: String,
        teacher: String,
    },
    Qa {
        session_id: u64,
        answers: Vec<QaAnswer>,
        qa_human_ratio: f64,
    },
    Done {
        session: EvalSession,
    },
}

/// Append-only JSONL writer. Each event is flushed before the request that
/// produced it is answered.
struct EventLog {
    path: PathBuf,
    file: Mutex<File>,
}

impl EventLog {
    fn append(&self, event: &Event) -> Result<(), ApiError> {
        let mut line = serde_json::to_string(event).expect("event serializes");
        line.push('\n');
        let mut f = self.file.lock().unwrap_or_else(|p| p.into_inner());
        f.write_all(line.as_bytes())
            .and_then(|_| f.flush())
            .map_err(|e| ApiError::internal(format!("appending to {}: {e}", self.path.display())))
    }
}

/// Read every complete event in `path`. A torn final line (no trailing
/// newline, or unparsable) is dropped and truncated away so later appends
/// start on a fresh line.
pub fn replay_log(path: &Path) -> Result<Vec<Event>, ServerError> {
    let log_err = |e: std::io::Error| ServerError::Log {
        path: path.display().to_string(),
        reason: e.to_string(),
    };
    let mut file = match OpenOptions::new().read(true).write(true).open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(log_err(e)),
    };
    let mut reader = BufReader::new(&mut file);
    let mut events = Vec::new();
    let mut good_len = 0u64;
    let mut buf = String::new();
    let mut line_no = 0;
    let mut pending: Option<(usize, String)> = None;
    loop {
        buf.clear();
        let n = reader.read_line(&mut buf).map_err(log_err)?;
        if n == 0 {
            break;
        }
        line_no += 1;
        if let Some((line, reason)) = pending.take() {
            return Err(ServerError::CorruptLog {
                path: path.display().to_string(),
                line,
                reason,
            });
        }
        if !buf.ends_with('\n') {
            break;
        }
        if buf.trim().is_empty() {
            good_len += n as u64;
            continue;
        }
        match serde_json::from_str::<Event>(buf.trim_end()) {
            Ok(ev) => {
                events.push(ev);
                good_len += n as u64;
            }
            Err(e) => pending = Some((line_no, e.to_string())),
        }
    }
    drop(reader);
    if file.seek(SeekFrom::End(0)).map_err(log_err)? != good_len {
        file.set_len(good_len).map_err(log_err)?;
    }
    Ok(events)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    fn not_found(code: &'static str, message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::NOT_FOUND, code, message)
    }

    fn conflict(code: &'static str, message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::CONFLICT, code, message)
    }

    fn unprocessable(code: &'static str, message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }

    fn internal(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(json!({"error": self.code, "message": self.message})),
        )
            .into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> ApiError {
        ApiError::unprocessable("InvalidBody", r.body_text())
    }
}

type SessionCell = Arc<tokio::sync::Mutex<EvalSession>>;

/// Shared server state.
pub struct Service {
    passages: BTreeMap<String, Passage>,
    checkpoints: BTreeMap<String, PolicyParams>,
    checkpoint_order: Vec<String>,
    sessions: Mutex<HashMap<u64, SessionCell>>,
    next_id: AtomicU64,
    round_robin: AtomicUsize,
    log: EventLog,
}

fn now_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

/// QA items depend only on the passage, so every evaluator of a passage
/// gets the same masked sentences.
fn qa_seed(passage_id: &str) -> u64 {
    seeds::derive(0x9a, &[seeds::hash_str(passage_id)])
}

impl Service {
    /// Load state, replaying `log_path` if it exists.
    pub fn open(
        passages: Vec<Passage>,
        checkpoints: Vec<(String, PolicyParams)>,
        log_path: &Path,
    ) -> Result<Service, ServerError> {
        if checkpoints.is_empty() {
            return Err(ServerError::NoCheckpoints);
        }
        let events = replay_log(log_path)?;
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(log_path)
            .map_err(|e| ServerError::Log {
                path: log_path.display().to_string(),
                reason: e.to_string(),
            })?;
        let checkpoint_order = checkpoints.iter().map(|(id, _)| id.clone()).collect();
        let svc = Service {
            passages: passages.into_iter().map(|p| (p.id.clone(), p)).collect(),
            checkpoints: checkpoints.into_iter().collect(),
            checkpoint_order,
            sessions: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
            round_robin: AtomicUsize::new(0),
            log: EventLog {
                path: log_path.to_path_buf(),
                file: Mutex::new(file),
            },
        };
        svc.apply_replay(events);
        Ok(svc)
    }

    fn apply_replay(&self, events: Vec<Event>) {
        let mut table: BTreeMap<u64, EvalSession> = BTreeMap::new();
        for ev in events {
            match ev {
                Event::Created {
                    session_id,
                    passage_id,
                    checkpoint_id,
                    created_at,
                    opening,
                } => {
                    table.insert(
                        session_id,
                        EvalSession {
                            session_id,
                            passage_id,
                            checkpoint_id,
                            created_at,
                            state: SessionState::Chatting,
                            turns: vec![Turn::new(Speaker::Teacher, opening)],
                            qa_items: Vec::new(),
                            answers: Vec::new(),
                            qa_human_ratio: None,
                            ratings: None,
                        },
                    );
                }
                Event::Utterance {
                    session_id,
                    user,
                    teacher,
                } => {
                    if let Some(s) = table.get_mut(&session_id) {
                        s.turns.push(Turn::new(Speaker::Student, user));
                        s.turns.push(Turn::new(Speaker::Teacher, teacher));
                        if s.teacher_turns() >= TEACHER_TURNS {
                            s.state = SessionState::Qa;
                            s.qa_items = self.qa_items_for(&s.passage_id);
                        }
                    }
                }
                Event::Qa {
                    session_id,
                    answers,
                    qa_human_ratio,
                } => {
                    if let Some(s) = table.get_mut(&session_id) {
                        s.answers = answers;
                        s.qa_human_ratio = Some(qa_human_ratio);
                        s.state = SessionState::Rating;
                    }
                }
                Event::Done { session } => {
                    table.insert(session.session_id, session);
                }
            }
        }
        let max_id = table.keys().next_back().copied().unwrap_or(0);
        self.next_id.store(max_id + 1, Ordering::SeqCst);
        let mut sessions = self.sessions.lock().unwrap_or_else(|p| p.into_inner());
        for (id, s) in table {
            sessions.insert(id, Arc::new(tokio::sync::Mutex::new(s)));
        }
    }

    fn qa_items_for(&self, passage_id: &str) -> Vec<ClozeQuestion> {
        match self.passages.get(passage_id) {
            Some(p) => match cloze_questions(p, QA_ITEMS, qa_seed(passage_id)) {
                Ok(qs) => qs,
                Err(EvalError::NoMaskableEntities(_)) => Vec::new(),
                Err(_) => Vec::new(),
            },
            None => Vec::new(),
        }
    }

    fn cell(&self, raw_id: &str) -> Result<SessionCell, ApiError> {
        let unknown = || ApiError::not_found("UnknownSession", format!("no session {raw_id:?}"));
        let id: u64 = raw_id.parse().map_err(|_| unknown())?;
        self.sessions
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .get(&id)
            .cloned()
            .ok_or_else(unknown)
    }

    fn teacher_reply(&self, session: &EvalSession) -> Result<String, ApiError> {
        let passage = self
            .passages
            .get(&session.passage_id)
            .ok_or_else(|| ApiError::internal(format!("passage {} vanished", session.passage_id)))?;
        let params = self
            .checkpoints
            .get(&session.checkpoint_id)
            .ok_or_else(|| ApiError::internal(format!("checkpoint {} vanished", session.checkpoint_id)))?;
        let (cands, dec) = teacher_step(passage, &session.turns, params, DecodeMode::Greedy, 0)
            .map_err(|e| ApiError::internal(e.to_string()))?;
        Ok(cands[dec.chosen_index].text.clone())
    }

    /// Sessions in DONE state, ordered by id.
    pub fn done_sessions(&self) -> Vec<EvalSession> {
        let cells: Vec<SessionCell> = {
            let map = self.sessions.lock().unwrap_or_else(|p| p.into_inner());
            let mut v: Vec<(u64, SessionCell)> = map.iter().map(|(k, c)| (*k, c.clone())).collect();
            v.sort_by_key(|(k, _)| *k);
            v.into_iter().map(|(_, c)| c).collect()
        };
        cells
            .iter()
            .filter_map(|c| c.try_lock().ok().map(|s| s.clone()))
            .filter(|s| s.state == SessionState::Done)
            .collect()
    }
}

fn lock(cell: &SessionCell) -> Result<tokio::sync::MutexGuard<'_, EvalSession>, ApiError> {
    cell.try_lock()
        .map_err(|_| ApiError::conflict("Busy", "another request for this session is in progress"))
}

#[derive(Deserialize)]
struct CreateReq {
    passage_id: String,
    #[serde(default)]
    checkpoint_id: Option<String>,
}

async fn create_session(
    State(svc): State<Arc<Service>>,
    body: Result<Json<CreateReq>, JsonRejection>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let Json(req) = body?;
    let passage = svc
        .passages
        .get(&req.passage_id)
        .ok_or_else(|| ApiError::not_found("UnknownPassage", format!("no passage {:?}", req.passage_id)))?;
    let checkpoint_id = match req.checkpoint_id {
        Some(id) if svc.checkpoints.contains_key(&id) => id,
        Some(id) => return Err(ApiError::not_found("UnknownCheckpoint", format!("no checkpoint {id:?}"))),
        None => {
            let k = svc.round_robin.fetch_add(1, Ordering::SeqCst);
            svc.checkpoint_order[k % svc.checkpoint_order.len()].clone()
        }
    };
    let session_id = svc.next_id.fetch_add(1, Ordering::SeqCst);
    let mut session = EvalSession {
        session_id,
        passage_id: passage.id.clone(),
        checkpoint_id: checkpoint_id.clone(),
        created_at: now_secs(),
        state: SessionState::Chatting,
        turns: Vec::new(),
        qa_items: Vec::new(),
        answers: Vec::new(),
        qa_human_ratio: None,
        ratings: None,
    };
    let opening = svc.teacher_reply(&session)?;
    session.turns.push(Turn::new(Speaker::Teacher, opening.clone()));
    svc.log.append(&Event::Created {
        session_id,
        passage_id: session.passage_id.clone(),
        checkpoint_id: checkpoint_id.clone(),
        created_at: session.created_at,
        opening: opening.clone(),
    })?;
    svc.sessions
        .lock()
        .unwrap_or_else(|p| p.into_inner())
        .insert(session_id, Arc::new(tokio::sync::Mutex::new(session)));
    Ok(Json(json!({
        "session_id": session_id,
        "checkpoint_id": checkpoint_id,
        "opening_utterance": opening,
    })))
}

#[derive(Deserialize)]
struct UtteranceReq {
    text: String,
}

async fn post_utterance(
    State(svc): State<Arc<Service>>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<UtteranceReq>, JsonRejection>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let cell = svc.cell(&id)?;
    let mut s = lock(&cell)?;
    if s.state != SessionState::Chatting || s.teacher_turns() >= TEACHER_TURNS {
        return Err(ApiError::conflict("SessionClosed", "the chat phase of this session is over"));
    }
    let Json(req) = body?;
    let text = req.text.trim();
    if text.is_empty() {
        return Err(ApiError::unprocessable("EmptyUtterance", "utterance is empty"));
    }
    let mut next = s.clone();
    next.turns.push(Turn::new(Speaker::Student, text));
    let teacher = svc.teacher_reply(&next)?;
    next.turns.push(Turn::new(Speaker::Teacher, teacher.clone()));
    let closed = next.teacher_turns() >= TEACHER_TURNS;
    if closed {
        next.state = SessionState::Qa;
        next.qa_items = svc.qa_items_for(&next.passage_id);
    }
    svc.log.append(&Event::Utterance {
        session_id: next.session_id,
        user: text.to_string(),
        teacher: teacher.clone(),
    })?;
    *s = next;
    Ok(Json(json!({"teacher_response": teacher, "chat_closed": closed})))
}

async fn get_qa(
    State(svc): State<Arc<Service>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let cell = svc.cell(&id)?;
    let s = lock(&cell)?;
    if s.state != SessionState::Qa {
        return Err(ApiError::conflict("WrongState", format!("session is in state {:?}", s.state)));
    }
    let items: Vec<&str> = s.qa_items.iter().map(|q| q.masked_form.as_str()).collect();
    Ok(Json(json!({"items": items})))
}

#[derive(Deserialize)]
struct QaReq {
    answers: Vec<QaAnswer>,
}

async fn submit_qa(
    State(svc): State<Arc<Service>>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<QaReq>, JsonRejection>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let cell = svc.cell(&id)?;
    let mut s = lock(&cell)?;
    if s.state != SessionState::Qa {
        return Err(ApiError::conflict("WrongState", format!("session is in state {:?}", s.state)));
    }
    let Json(req) = body?;
    if req.answers.len() != s.qa_items.len() {
        return Err(ApiError::unprocessable(
            "LengthMismatch",
            format!("expected {} answers, got {}", s.qa_items.len(), req.answers.len()),
        ));
    }
    let ratio = if req.answers.is_empty() {
        0.0
    } else {
        req.answers.iter().filter(|a| a.recoverable).count() as f64 / req.answers.len() as f64
    };
    svc.log.append(&Event::Qa {
        session_id: s.session_id,
        answers: req.answers.clone(),
        qa_human_ratio: ratio,
    })?;
    s.answers = req.answers;
    s.qa_human_ratio = Some(ratio);
    s.state = SessionState::Rating;
    Ok(Json(json!({"qa_human_ratio": ratio})))
}

async fn submit_rating(
    State(svc): State<Arc<Service>>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<Ratings>, JsonRejection>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let cell = svc.cell(&id)?;
    let mut s = lock(&cell)?;
    if s.state != SessionState::Rating {
        return Err(ApiError::conflict("WrongState", format!("session is in state {:?}", s.state)));
    }
    let Json(ratings) = body?;
    ratings.validate()?;
    let mut next = s.clone();
    next.ratings = Some(ratings);
    next.state = SessionState::Done;
    svc.log.append(&Event::Done { session: next.clone() })?;
    *s = next;
    Ok(Json(json!({"done": true})))
}

/// Public view of a session. The passage text is attached only once the
/// session is DONE; masked entities never leave the server before then.
async fn get_session(
    State(svc): State<Arc<Service>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let cell = svc.cell(&id)?;
    let s = lock(&cell)?;
    let mut view = json!({
        "session_id": s.session_id,
        "passage_id": s.passage_id,
        "checkpoint_id": s.checkpoint_id,
        "state": s.state,
        "turns": s.turns,
        "teacher_turns": s.teacher_turns(),
        "max_teacher_turns": TEACHER_TURNS,
    });
    if s.state == SessionState::Done {
        view["passage_text"] = json!(svc.passages.get(&s.passage_id).map(|p| p.text.as_str()));
        view["qa_items"] = json!(s.qa_items);
        view["answers"] = json!(s.answers);
        view["qa_human_ratio"] = json!(s.qa_human_ratio);
        view["ratings"] = json!(s.ratings);
    }
    Ok(Json(view))
}

async fn list_passages(State(svc): State<Arc<Service>>) -> Json<serde_json::Value> {
    let ids: Vec<&String> = svc.passages.keys().collect();
    Json(json!({"passage_ids": ids}))
}

async fn list_checkpoints(State(svc): State<Arc<Service>>) -> Json<serde_json::Value> {
    Json(json!({"checkpoint_ids": svc.checkpoint_order}))
}

#[derive(Deserialize)]
struct ResultsQuery {
    checkpoint: Option<String>,
    #[serde(default)]
    aggregate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointSummary {
    pub n_sessions: usize,
    pub qa_human: f64,
    pub coherence: f64,
    pub readability: f64,
    pub overall: f64,
}

/// Per-checkpoint means of the subjective scores.
pub fn aggregate_results(sessions: &[EvalSession]) -> BTreeMap<String, CheckpointSummary> {
    let mut groups: BTreeMap<String, Vec<&EvalSession>> = BTreeMap::new();
    for s in sessions {
        groups.entry(s.checkpoint_id.clone()).or_default().push(s);
    }
    groups
        .into_iter()
        .map(|(ck, ss)| {
            let n = ss.len() as f64;
            let m = |f: &dyn Fn(&EvalSession) -> f64| ss.iter().map(|s| f(s)).sum::<f64>() / n;
            let r = |s: &EvalSession| s.ratings.unwrap_or(Ratings { coherence: 0, readability: 0, overall: 0 });
            (
                ck,
                CheckpointSummary {
                    n_sessions: ss.len(),
                    qa_human: m(&|s| s.qa_human_ratio.unwrap_or(0.0)),
                    coherence: m(&|s| r(s).coherence as f64),
                    readability: m(&|s| r(s).readability as f64),
                    overall: m(&|s| r(s).overall as f64),
                },
            )
        })
        .collect()
}

async fn export_results(State(svc): State<Arc<Service>>, Query(q): Query<ResultsQuery>) -> Response {
    let done: Vec<EvalSession> = svc
        .done_sessions()
        .into_iter()
        .filter(|s| q.checkpoint.as_ref().is_none_or(|c| &s.checkpoint_id == c))
        .collect();
    if q.aggregate {
        return Json(aggregate_results(&done)).into_response();
    }
    let mut body = String::new();
    for s in &done {
        let mut row = serde_json::to_value(s).expect("session serializes");
        row["passage_text"] = json!(svc.passages.get(&s.passage_id).map(|p| p.text.as_str()));
        body.push_str(&row.to_string());
        body.push('\n');
    }
    ([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response()
}

async fn not_found() -> ApiError {
    ApiError::not_found("NotFound", "no such route")
}

pub fn router(svc: Arc<Service>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/utterance", post(post_utterance))
        .route("/sessions/{id}/qa", get(get_qa).post(submit_qa))
        .route("/sessions/{id}/rating", post(submit_rating))
        .route("/results", get(export_results))
        .route("/passages", get(list_passages))
        .route("/checkpoints", get(list_checkpoints))
        .fallback(not_found)
        .layer(CorsLayer::permissive())
        .with_state(svc)
}

/// Serve until ctrl-c. Runs its own tokio runtime.
pub fn serve_blocking(svc: Service, port: u16) -> Result<(), ServerError> {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| ServerError::Bind {
            addr: format!("port {port}"),
            reason: e.to_string(),
        })?;
    rt.block_on(async move {
        let addr = format!("0.0.0.0:{port}");
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| ServerError::Bind {
                addr: addr.clone(),
                reason: e.to_string(),
            })?;
        eprintln!("listening on {addr}");
        axum::serve(listener, router(Arc::new(svc)))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| ServerError::Bind {
                addr,
                reason: e.to_string(),
            })
    })
}
