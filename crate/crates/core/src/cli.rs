//! Command-line front end. `run` returns the process exit code:
//! 0 success, 1 usage error, 2 data error, 3 runtime failure.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::coherence::{
    build_coherence_dataset, AutoScorer, CoherenceBackend, CoherenceError, CoherenceScorer,
    ConstantLabelScorer, HttpClassifier, LabelConstants, LexicalBaseline, SoftmaxScorer,
};
use crate::datasets::{
    load_dialogues, load_passages, passages_to_jsonl, split, toy_corpus, toy_dialogues,
    DatasetError, Dialogue, PassageFormat,
};
use crate::eval::{evaluate, pearson_agreement, EvalConfig, EvalError, DEFAULT_EVAL_SEED};
use crate::policy::{DecodeMode, PolicyError, PolicyParams};
use crate::rewards::{attribute_rewards, AttributionMode, RewardConfig, RewardError};
use crate::selfplay::{run_conversation, ConversationRecord, Passage, SelfPlayError};
use crate::server::{serve_blocking, ServerError, Service, DEFAULT_PORT};
use crate::student::{HttpStudent, RuleStudent, Student, StudentError};
use crate::trainer::{anchors_for_corpus, anchors_from_dialogues, train, TrainConfig, TrainError};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<PolicyError> for CliError {
    fn from(e: PolicyError) -> Self {
        match e {
            PolicyError::Io { .. } | PolicyError::Checkpoint { .. } | PolicyError::InvalidParams(_) => CliError::Data(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            TrainError::EmptyCorpus | TrainError::NoAnchors | TrainError::PassageMissing(_) => {
                CliError::Data(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::EmptyCorpus
            | EvalError::DegenerateVariance
            | EvalError::LengthMismatch(..)
            | EvalError::TooFewRatings(_) => CliError::Data(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<RewardError> for CliError {
    fn from(e: RewardError) -> Self {
        match e {
            RewardError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<SelfPlayError> for CliError {
    fn from(e: SelfPlayError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<CoherenceError> for CliError {
    fn from(e: CoherenceError) -> Self {
        match e {
            CoherenceError::MalformedDialogue { .. } => CliError::Data(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<StudentError> for CliError {
    fn from(e: StudentError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<ServerError> for CliError {
    fn from(e: ServerError) -> Self {
        match e {
            ServerError::CorruptLog { .. } => CliError::Data(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "teachplay", version, about = "Self-play teacher training and evaluation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Train a teacher policy; writes checkpoint.json and train_log.csv.
    Train(TrainArgs),
    /// Run one self-play conversation and print it as JSON.
    Selfplay(SelfplayArgs),
    /// Evaluate a checkpoint; writes a JSON report and a CSV export.
    Eval(EvalArgs),
    /// Build coherent/incoherent pairs from recorded dialogues.
    BuildCoherence(BuildCoherenceArgs),
    /// Split a corpus into train/valid/test JSONL files.
    Split(SplitArgs),
    /// Run the human-evaluation HTTP service.
    Serve(ServeArgs),
    /// Mean pairwise Pearson correlation between rating files.
    Agreement(AgreementArgs),
}

#[derive(Args, Debug)]
struct CorpusArgs {
    /// Passage file (.jsonl or .tsv). Defaults to the bundled toy corpus.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Keep only the first N tokens of each passage.
    #[arg(long)]
    truncate: Option<usize>,
}

#[derive(Args, Debug)]
struct BackendArgs {
    /// lexical | softmax | constants | url=<base-url>
    #[arg(long)]
    coherence: Option<String>,
    /// Base URL of the coherence classifier for softmax/constants.
    #[arg(long)]
    scorer_url: Option<String>,
    /// Base URL of an external student; the rule-based student otherwise.
    #[arg(long)]
    student_url: Option<String>,
}

#[derive(Args, Debug)]
struct RewardArgs {
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    cov_clip: Option<f64>,
    /// per-turn-teacher | per-turn-both | end-of-conversation
    #[arg(long, value_parser = parse_attribution)]
    mode: Option<AttributionMode>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Anchor dialogues (.jsonl). Defaults to the bundled toy dialogues.
    #[arg(long)]
    anchors: Option<PathBuf>,
    /// TOML file with TrainConfig keys; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Initial policy checkpoint.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[command(flatten)]
    reward: RewardArgs,
    #[command(flatten)]
    backend: BackendArgs,
    #[arg(long)]
    turns: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// MLE batches per cycle (a).
    #[arg(long)]
    mle_batches: Option<usize>,
    /// RL batches per cycle (b).
    #[arg(long)]
    rl_batches: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "teachplay-run")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SelfplayArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Passage id; the first passage by default.
    #[arg(long)]
    passage: Option<String>,
    /// Policy checkpoint; an untrained policy by default.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[command(flatten)]
    reward: RewardArgs,
    #[command(flatten)]
    backend: BackendArgs,
    #[arg(long, default_value_t = 3)]
    turns: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Decode greedily instead of sampling.
    #[arg(long)]
    greedy: bool,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[command(flatten)]
    backend: BackendArgs,
    #[arg(long, default_value_t = 3)]
    turns: usize,
    #[arg(long, default_value_t = DEFAULT_EVAL_SEED)]
    seed: u64,
    /// Evaluate one part of a seeded split: all | train | valid | test.
    #[arg(long, default_value = "all")]
    split: String,
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
    /// Report path (JSON; a .csv is written next to it). Stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BuildCoherenceArgs {
    /// Dialogue file (.jsonl). Defaults to the bundled toy dialogues.
    #[arg(long)]
    anchors: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SplitArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// train,valid,test fractions.
    #[arg(long, default_value = "0.8,0.1,0.1")]
    ratios: String,
    /// Output directory for train.jsonl, valid.jsonl, test.jsonl.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Policy checkpoint; repeat to rotate several. Id = file stem.
    #[arg(long)]
    checkpoint: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_PORT)]
    port: u16,
    #[arg(long, default_value = "events.jsonl")]
    log_path: PathBuf,
}

#[derive(Args, Debug)]
struct AgreementArgs {
    /// Rating CSV files, one per evaluator, rows aligned by item.
    #[arg(required = true, num_args = 2..)]
    files: Vec<PathBuf>,
    /// Column holding the rating; the last column by default.
    #[arg(long)]
    column: Option<String>,
}

fn parse_attribution(s: &str) -> std::result::Result<AttributionMode, String> {
    match s {
        "per-turn-teacher" => Ok(AttributionMode::PerTurnTeacher),
        "per-turn-both" => Ok(AttributionMode::PerTurnBoth),
        "end-of-conversation" => Ok(AttributionMode::EndOfConversation),
        other => Err(format!(
            "unknown mode {other:?} (per-turn-teacher, per-turn-both, end-of-conversation)"
        )),
    }
}

fn load_corpus(args: &CorpusArgs) -> Result<Vec<Passage>> {
    match &args.corpus {
        Some(path) => Ok(load_passages(path, PassageFormat::from_path(path), args.truncate)?),
        None => Ok(match args.truncate {
            Some(n) => toy_corpus()
                .into_iter()
                .map(|p| crate::datasets::truncate_passage(p, n))
                .collect(),
            None => toy_corpus(),
        }),
    }
}

fn load_dialogue_file(path: Option<&Path>) -> Result<Vec<Dialogue>> {
    match path {
        Some(p) => Ok(load_dialogues(p)?),
        None => Ok(toy_dialogues()),
    }
}

fn load_checkpoint(path: Option<&Path>) -> Result<PolicyParams> {
    match path {
        Some(p) => Ok(PolicyParams::load(p)?),
        None => Ok(PolicyParams::zeros()),
    }
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("creating {}: {e}", dir.display())))?;
    }
    fs::write(path, content).map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))
}

fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(p) => write_file(p, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Parsed `--coherence` choice.
enum ScorerChoice {
    Lexical,
    Softmax(String),
    Constants(String),
    Auto(String),
}

fn scorer_choice(args: &BackendArgs, configured: CoherenceBackend) -> Result<ScorerChoice> {
    let need_url = |kind: &str| {
        args.scorer_url
            .clone()
            .ok_or_else(|| CliError::Usage(format!("--coherence {kind} needs --scorer-url")))
    };
    match args.coherence.as_deref() {
        None => match configured {
            CoherenceBackend::LexicalBaseline => Ok(ScorerChoice::Lexical),
            CoherenceBackend::SoftmaxClassifier => Ok(ScorerChoice::Softmax(need_url("softmax")?)),
            CoherenceBackend::ConstantLabels => Ok(ScorerChoice::Constants(need_url("constants")?)),
        },
        Some("lexical") => Ok(ScorerChoice::Lexical),
        Some("softmax") => Ok(ScorerChoice::Softmax(need_url("softmax")?)),
        Some("constants") => Ok(ScorerChoice::Constants(need_url("constants")?)),
        Some(s) if s.starts_with("url=") && s.len() > 4 => Ok(ScorerChoice::Auto(s[4..].to_string())),
        Some(other) => Err(CliError::Usage(format!(
            "unknown --coherence {other:?} (lexical, softmax, constants, url=...)"
        ))),
    }
}

fn build_scorer(choice: &ScorerChoice) -> Result<Box<dyn CoherenceScorer>> {
    let client = |url: &str| HttpClassifier::new(url).map_err(CliError::from);
    Ok(match choice {
        ScorerChoice::Lexical => Box::new(LexicalBaseline),
        ScorerChoice::Softmax(url) => Box::new(SoftmaxScorer { classifier: client(url)? }),
        ScorerChoice::Constants(url) => Box::new(ConstantLabelScorer {
            classifier: client(url)?,
            constants: LabelConstants::default(),
        }),
        ScorerChoice::Auto(url) => Box::new(AutoScorer {
            classifier: client(url)?,
            constants: LabelConstants::default(),
        }),
    })
}

fn build_student(args: &BackendArgs) -> Result<Box<dyn Student>> {
    Ok(match &args.student_url {
        Some(url) => Box::new(HttpStudent::new(url)?),
        None => Box::new(RuleStudent::default()),
    })
}

/// Defaults, then the TOML file, then flags.
fn resolve_train_config(args: &TrainArgs) -> Result<TrainConfig> {
    let mut cfg = match &args.config {
        None => TrainConfig::default(),
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Data(format!("reading {}: {e}", path.display())))?;
            let table: toml::Table = toml::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let known: BTreeSet<String> = match serde_json::to_value(TrainConfig::default()) {
                Ok(serde_json::Value::Object(m)) => m.keys().cloned().collect(),
                _ => BTreeSet::new(),
            };
            if let Some(k) = table.keys().find(|k| !known.contains(*k)) {
                return Err(CliError::Usage(format!("{}: unknown key {k:?}", path.display())));
            }
            table
                .try_into()
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
    };
    if let Some(b) = args.reward.beta {
        cfg.beta = b;
    }
    if let Some(c) = args.reward.cov_clip {
        cfg.cov_clip = c;
    }
    if let Some(m) = args.reward.mode {
        cfg.attribution = m;
    }
    if let Some(t) = args.turns {
        cfg.n_turns = t;
    }
    if let Some(s) = args.steps {
        cfg.steps = s;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if let Some(lr) = args.lr {
        cfg.learning_rate = lr;
    }
    if let Some(a) = args.mle_batches {
        cfg.gamma_schedule.mle_batches_per_cycle = a;
    }
    if let Some(b) = args.rl_batches {
        cfg.gamma_schedule.rl_batches_per_cycle = b;
    }
    if let Some(p) = &args.checkpoint {
        cfg.init = PolicyParams::load(p)?;
    }
    cfg.checkpoint_dir = Some(args.out.join("checkpoints"));
    Ok(cfg)
}

fn backend_of(choice: &ScorerChoice) -> CoherenceBackend {
    match choice {
        ScorerChoice::Lexical => CoherenceBackend::LexicalBaseline,
        ScorerChoice::Softmax(_) | ScorerChoice::Auto(_) => CoherenceBackend::SoftmaxClassifier,
        ScorerChoice::Constants(_) => CoherenceBackend::ConstantLabels,
    }
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let mut cfg = resolve_train_config(&args)?;
    let choice = scorer_choice(&args.backend, cfg.coherence_backend)?;
    cfg.coherence_backend = backend_of(&choice);
    cfg.validate()?;
    let corpus = load_corpus(&args.corpus)?;
    let dialogues = load_dialogue_file(args.anchors.as_deref())?;
    let anchors = anchors_for_corpus(anchors_from_dialogues(&dialogues), &corpus);
    let scorer = build_scorer(&choice)?;
    let student = build_student(&args.backend)?;
    let outcome = train(cfg.clone(), &corpus, &anchors, scorer.as_ref(), student.as_ref())?;

    write_file(&args.out.join("checkpoint.json"), &outcome.params.to_checkpoint_json())?;
    write_file(&args.out.join("train_log.csv"), &outcome.log.to_csv())?;
    let echo = serde_json::to_string_pretty(&cfg).expect("config serializes") + "\n";
    write_file(&args.out.join("train_config.json"), &echo)?;
    eprintln!(
        "trained {} cycles (seed {}); wrote {}",
        cfg.steps,
        cfg.seed,
        args.out.display()
    );
    Ok(())
}

fn reward_config(args: &RewardArgs, backend: CoherenceBackend) -> Result<RewardConfig> {
    let mut cfg = RewardConfig {
        coherence_backend: backend,
        ..RewardConfig::default()
    };
    if let Some(b) = args.beta {
        cfg.beta = b;
    }
    if let Some(c) = args.cov_clip {
        cfg.cov_clip = c;
    }
    if let Some(m) = args.mode {
        cfg.attribution = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_selfplay(args: SelfplayArgs) -> Result<()> {
    if args.turns == 0 {
        return Err(CliError::Usage("--turns must be at least 1".into()));
    }
    let choice = scorer_choice(&args.backend, CoherenceBackend::LexicalBaseline)?;
    let rcfg = reward_config(&args.reward, backend_of(&choice))?;
    let corpus = load_corpus(&args.corpus)?;
    let passage = match &args.passage {
        Some(id) => corpus
            .iter()
            .find(|p| &p.id == id)
            .ok_or_else(|| CliError::Data(format!("no passage {id:?} in corpus")))?,
        None => corpus.first().ok_or_else(|| CliError::Data("corpus is empty".into()))?,
    };
    let params = load_checkpoint(args.checkpoint.as_deref())?;
    let scorer = build_scorer(&choice)?;
    let student = build_student(&args.backend)?;
    let mode = if args.greedy { DecodeMode::Greedy } else { DecodeMode::Sampled };
    let conv = run_conversation(passage, &params, student.as_ref(), args.turns, mode, args.seed)?;
    let rewards = attribute_rewards(passage, &conv, &rcfg, scorer.as_ref())?;
    let record = ConversationRecord::new(&conv, rewards);
    let out = json!({
        "seed": args.seed,
        "decode": if args.greedy { "greedy" } else { "sampled" },
        "reward_config": rcfg,
        "policy": params,
        "conversation": record,
    });
    emit(args.out.as_deref(), &(serde_json::to_string_pretty(&out).expect("json") + "\n"))
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    if args.turns == 0 {
        return Err(CliError::Usage("--turns must be at least 1".into()));
    }
    let choice = scorer_choice(&args.backend, CoherenceBackend::LexicalBaseline)?;
    let corpus = load_corpus(&args.corpus)?;
    let corpus = match args.split.as_str() {
        "all" => corpus,
        part @ ("train" | "valid" | "test") => {
            let (tr, va, te) = split(&corpus, args.split_seed, (0.8, 0.1, 0.1))?;
            match part {
                "train" => tr,
                "valid" => va,
                _ => te,
            }
        }
        other => return Err(CliError::Usage(format!("unknown --split {other:?} (all, train, valid, test)"))),
    };
    let params = load_checkpoint(args.checkpoint.as_deref())?;
    let scorer = build_scorer(&choice)?;
    let student = build_student(&args.backend)?;
    let cfg = EvalConfig {
        n_turns: args.turns,
        seed: args.seed,
        ..EvalConfig::default()
    };
    let report = evaluate(&params, &corpus, &cfg, scorer.as_ref(), student.as_ref())?;
    match &args.out {
        Some(path) => {
            write_file(path, &report.to_json())?;
            write_file(&path.with_extension("csv"), &report.to_csv())
        }
        None => emit(None, &report.to_json()),
    }
}

fn cmd_build_coherence(args: BuildCoherenceArgs) -> Result<()> {
    let dialogues = load_dialogue_file(args.anchors.as_deref())?;
    let pairs = build_coherence_dataset(&dialogues)?;
    let mut out = String::new();
    for p in &pairs {
        out.push_str(&serde_json::to_string(p).expect("pair serializes"));
        out.push('\n');
    }
    emit(args.out.as_deref(), &out)
}

fn parse_ratios(s: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("--ratios expects three numbers, got {s:?}")))?;
    match parts[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(CliError::Usage(format!("--ratios expects three numbers, got {s:?}"))),
    }
}

fn cmd_split(args: SplitArgs) -> Result<()> {
    let ratios = parse_ratios(&args.ratios)?;
    let corpus = load_corpus(&args.corpus)?;
    let (tr, va, te) = split(&corpus, args.seed, ratios).map_err(|e| match e {
        DatasetError::InvalidRatios(_) => CliError::Usage(e.to_string()),
        other => CliError::from(other),
    })?;
    for (name, part) in [("train", &tr), ("valid", &va), ("test", &te)] {
        write_file(&args.out.join(format!("{name}.jsonl")), &passages_to_jsonl(part))?;
    }
    println!("train={} valid={} test={} seed={}", tr.len(), va.len(), te.len(), args.seed);
    Ok(())
}

fn cmd_serve(args: ServeArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let mut checkpoints = Vec::new();
    for path in &args.checkpoint {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        checkpoints.push((id, PolicyParams::load(path)?));
    }
    if checkpoints.is_empty() {
        checkpoints.push(("untrained".to_string(), PolicyParams::zeros()));
    }
    let svc = Service::open(corpus, checkpoints, &args.log_path)?;
    Ok(serve_blocking(svc, args.port)?)
}

fn read_ratings(path: &Path, column: Option<&str>) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        .clone();
    let idx = match column {
        Some(c) => headers
            .iter()
            .position(|h| h == c)
            .ok_or_else(|| CliError::Data(format!("{}: no column {c:?}", path.display())))?,
        None => headers
            .len()
            .checked_sub(1)
            .ok_or_else(|| CliError::Data(format!("{}: no columns", path.display())))?,
    };
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let v = rec
            .get(idx)
            .and_then(|s| s.trim().parse::<f64>().ok())
            .ok_or_else(|| CliError::Data(format!("{}: row {} has no numeric rating", path.display(), i + 2)))?;
        out.push(v);
    }
    Ok(out)
}

fn cmd_agreement(args: AgreementArgs) -> Result<()> {
    let ratings: Vec<Vec<f64>> = args
        .files
        .iter()
        .map(|f| read_ratings(f, args.column.as_deref()))
        .collect::<Result<_>>()?;
    let mut pairs = Vec::new();
    let mut sum = 0.0;
    for i in 0..ratings.len() {
        for j in i + 1..ratings.len() {
            let r = pearson_agreement(&ratings[i], &ratings[j]).map_err(|e| {
                CliError::Data(format!(
                    "{} vs {}: {e}",
                    args.files[i].display(),
                    args.files[j].display()
                ))
            })?;
            sum += r;
            pairs.push(json!({
                "a": args.files[i].display().to_string(),
                "b": args.files[j].display().to_string(),
                "pearson": r,
            }));
        }
    }
    let mean = sum / pairs.len() as f64;
    let out = json!({"pairs": pairs, "mean_pearson": mean});
    println!("{}", serde_json::to_string_pretty(&out).expect("json"));
    Ok(())
}

/// Parse `argv` (program name first) and run the subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.cmd {
        Cmd::Train(a) => cmd_train(a),
        Cmd::Selfplay(a) => cmd_selfplay(a),
        Cmd::Eval(a) => cmd_eval(a),
        Cmd::BuildCoherence(a) => cmd_build_coherence(a),
        Cmd::Split(a) => cmd_split(a),
        Cmd::Serve(a) => cmd_serve(a),
        Cmd::Agreement(a) => cmd_agreement(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn attribution_names() {
        assert_eq!(parse_attribution("per-turn-both").unwrap(), AttributionMode::PerTurnBoth);
        assert!(parse_attribution("both").is_err());
    }

    #[test]
    fn ratios_parse() {
        assert_eq!(parse_ratios("0.8,0.1,0.1").unwrap(), (0.8, 0.1, 0.1));
        assert!(parse_ratios("0.8,0.2").is_err());
        assert!(parse_ratios("a,b,c").is_err());
    }

    #[test]
    fn usage_errors_exit_1() {
        assert_eq!(run(["teachplay", "train", "--bogus"]), 1);
        assert_eq!(run(["teachplay", "nope"]), 1);
        assert_eq!(run(["teachplay", "train", "--beta", "1.5", "--steps", "0"]), 1);
        assert_eq!(run(["teachplay", "selfplay", "--coherence", "softmax"]), 1);
    }

    #[test]
    fn config_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("c.toml");
        fs::write(&cfg_path, "beta = 0.2\nsteps = 7\nlearning_rate = 0.5\n").unwrap();
        let cli = Cli::try_parse_from([
            "teachplay", "train", "--config", cfg_path.to_str().unwrap(), "--beta", "0.9",
        ])
        .unwrap();
        let Cmd::Train(args) = cli.cmd else { panic!() };
        let cfg = resolve_train_config(&args).unwrap();
        assert_eq!(cfg.beta, 0.9);
        assert_eq!(cfg.steps, 7);
        assert_eq!(cfg.learning_rate, 0.5);
        assert_eq!(cfg.mle_batch_size, TrainConfig::default().mle_batch_size);

        fs::write(&cfg_path, "betta = 0.2\n").unwrap();
        let cli = Cli::try_parse_from(["teachplay", "train", "--config", cfg_path.to_str().unwrap()]).unwrap();
        let Cmd::Train(args) = cli.cmd else { panic!() };
        assert!(matches!(resolve_train_config(&args), Err(CliError::Usage(_))));
    }
}
