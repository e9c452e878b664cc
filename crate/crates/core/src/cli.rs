//! The `commentforge` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::corpus::{join_source, load_corpus, source_tokens, split_dataset, write_corpus, Article, TokenizerMode};
use crate::dataset_builder::{build_training_set, ScorerContext, Strategy, TrainingPair};
use crate::hashvec::fit_df;
use crate::metrics::{evaluate, ReferenceSet};
use crate::pointer_gen::{self, DecodeMode, GenerateOptions, PgModel, TokenPair};
use crate::retrieval::{component_scores, retrieve_comment, ArticleIndex, PoolComment, ScoredComment, Scorer};
use crate::toy;
use crate::upvote_scorer::{label_dataset, load_word2vec, train_us, UsModel};
use crate::util::{read_jsonl, to_jsonl, write_atomic};

#[derive(Debug, Parser)]
#[command(
    name = "commentforge",
    version,
    about = "Comment retrieval, scoring and generation for news articles"
)]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Configuration override, `key=value` (repeatable; dotted keys address sections).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    /// Global seed (falls back to COMMENTFORGE_SEED, then the configuration).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[arg(long, global = true, value_parser = parse_tokenizer)]
    pub tokenizer: Option<TokenizerMode>,

    /// Only log warnings and errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

fn parse_tokenizer(s: &str) -> Result<TokenizerMode, String> {
    s.parse::<TokenizerMode>().map_err(|e| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a raw corpus, write the clean copy and train/valid/test id lists.
    Ingest(IngestArgs),
    /// Build the hashed-bigram TF-IDF article index.
    BuildIndex(BuildIndexArgs),
    /// Two-step retrieval of the best existing comment for each query article.
    Retrieve(RetrieveArgs),
    /// Train the upvote scorer.
    TrainUs(TrainUsArgs),
    /// Score every comment of every article with S_r, S_u and the ensemble.
    Score(ScoreArgs),
    /// Pair articles with selected comments for generator training.
    BuildTrainset(BuildTrainsetArgs),
    /// Train the pointer-generator.
    TrainPg(TrainPgArgs),
    /// Generate comments with a trained pointer-generator.
    Generate(GenerateArgs),
    /// BLEU-1, ROUGE-L and CIDEr of generated comments.
    Evaluate(EvaluateArgs),
    /// Write a synthetic corpus with planted structure.
    MakeToy(MakeToyArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Train/valid/test fractions.
    #[arg(long, default_value = "0.8,0.1,0.1")]
    pub split: String,
}

#[derive(Debug, Args)]
pub struct BuildIndexArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScorerKind {
    Rs,
    Us,
    Es,
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    #[arg(long)]
    pub index: PathBuf,
    #[arg(long, value_enum, default_value = "rs")]
    pub scorer: ScorerKind,
    /// Upvote-scorer checkpoint (required for us and es).
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Query articles in corpus format.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, alias = "out")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainUsArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub threshold: Option<u64>,
    /// Pretrained vectors in word2vec text format; the embedding stays frozen.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildTrainsetArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_parser = parse_strategy)]
    pub strategy: Strategy,
    /// Upvote-scorer checkpoint (required for us and es).
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Comments kept per article by the scored strategies.
    #[arg(long, default_value_t = 1)]
    pub top_n: usize,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse::<Strategy>().map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct TrainPgArgs {
    #[arg(long)]
    pub pairs: PathBuf,
    /// Validation pairs driving the learning-rate schedule.
    #[arg(long)]
    pub valid: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// First epoch whose loss includes the coverage term.
    #[arg(long)]
    pub cov_from_epoch: Option<usize>,
    /// Train the plain attention baseline (no copying, no coverage).
    #[arg(long)]
    pub no_pointer: bool,
    /// Keep a checkpoint per epoch in this directory.
    #[arg(long)]
    pub checkpoint_dir: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Greedy,
    Beam,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Pair file or corpus file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "greedy")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 4)]
    pub beam: usize,
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Keep UNK tokens instead of copying the most-attended source token.
    #[arg(long)]
    pub no_unk_replace: bool,
    /// Beam search also blocks repeated trigrams.
    #[arg(long)]
    pub no_repeat_trigram: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub hyp: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// With a corpus as reference: every comment, or only the most upvoted.
    #[arg(long, default_value = "all", value_parser = parse_refset)]
    pub references: ReferenceSet,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_refset(s: &str) -> Result<ReferenceSet, String> {
    s.parse::<ReferenceSet>().map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ToyKind {
    /// Topic keywords, named people, upvote-correlated comments.
    General,
    /// Generic contradictory replies plus one specific comment per article.
    Contradiction,
    /// Comment-free articles over a tiny vocabulary.
    Bigram,
}

#[derive(Debug, Args)]
pub struct MakeToyArgs {
    #[arg(long, default_value_t = 50)]
    pub articles: usize,
    #[arg(long, value_enum, default_value = "general")]
    pub kind: ToyKind,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args`, runs the command and returns the process exit code:
/// 0 on success, 1 on runtime failure, 2 on usage errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let level = if cli.quiet { "warn" } else { "info" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                2
            } else {
                1
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn resolve_config(cli: &Cli) -> anyhow::Result<PipelineConfig> {
    let mut overrides = cli.overrides.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    if let Some(t) = cli.tokenizer {
        overrides.push(format!("tokenizer=\"{t}\""));
    }
    PipelineConfig::resolve(cli.config.as_deref(), &overrides).map_err(|e| match e {
        crate::Error::InvalidArgument(m) => usage(m),
        other => other.into(),
    })
}

/// Refuses to write over any of the command's inputs.
fn guard_output(out: &Path, inputs: &[&Path]) -> anyhow::Result<()> {
    let canon = |p: &Path| p.canonicalize().ok();
    if let Some(o) = canon(out) {
        for i in inputs {
            if canon(i).as_ref() == Some(&o) {
                return Err(usage(format!("output {} would overwrite an input", out.display())));
            }
        }
    }
    Ok(())
}

fn ensure_parent(path: &Path) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn write_out(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    ensure_parent(path)?;
    write_atomic(path, bytes)?;
    info!("wrote {}", path.display());
    Ok(())
}

fn load_articles(path: &Path) -> anyhow::Result<Vec<Article>> {
    let report = load_corpus(path)?;
    if report.malformed > 0 {
        warn!("{}: {} malformed records skipped", path.display(), report.malformed);
    }
    Ok(report.articles)
}

fn load_us(path: &Path, step: &str) -> anyhow::Result<UsModel> {
    if !path.is_file() {
        bail!(
            "upvote-scorer checkpoint {} not found; run `commentforge train-us --corpus <corpus> --out {}` before `{step}`",
            path.display(),
            path.display()
        );
    }
    Ok(UsModel::load(path)?)
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    let cfg = resolve_config(&cli)?;
    info!("config hash {}", &cfg.hash()[..16]);
    match cli.command {
        Command::Ingest(a) => ingest(&cfg, a),
        Command::BuildIndex(a) => build_index(&cfg, a),
        Command::Retrieve(a) => retrieve(&cfg, a),
        Command::TrainUs(a) => train_us_cmd(cfg, a),
        Command::Score(a) => score(&cfg, a),
        Command::BuildTrainset(a) => build_trainset(&cfg, a),
        Command::TrainPg(a) => train_pg(cfg, a),
        Command::Generate(a) => generate(&cfg, a),
        Command::Evaluate(a) => evaluate_cmd(&cfg, a),
        Command::MakeToy(a) => make_toy(&cfg, a),
    }
}

#[derive(Serialize)]
struct IngestReport<'a> {
    articles: usize,
    malformed: usize,
    dropped_comments: usize,
    train: usize,
    valid: usize,
    test: usize,
    warnings: &'a [String],
}

fn ingest(cfg: &PipelineConfig, a: IngestArgs) -> anyhow::Result<()> {
    let parts: Vec<f64> = a
        .split
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("--split {:?} is not three comma-separated numbers", a.split)))?;
    let fractions: [f64; 3] = parts
        .try_into()
        .map_err(|_| usage(format!("--split {:?} needs exactly three fractions", a.split)))?;
    let report = load_corpus(&a.input)?;
    let split = split_dataset(&report.articles, fractions, cfg.seed).map_err(|e| usage(e.to_string()))?;

    let corpus_path = a.out_dir.join("corpus.jsonl");
    guard_output(&corpus_path, &[&a.input])?;
    let mut buf = Vec::new();
    write_corpus(&report.articles, &mut buf)?;
    write_out(&corpus_path, &buf)?;
    for (name, part) in [("train", &split.train), ("valid", &split.valid), ("test", &split.test)] {
        let mut text = part.iter().map(|a| a.id.as_str()).collect::<Vec<_>>().join("\n");
        if !text.is_empty() {
            text.push('\n');
        }
        write_out(&a.out_dir.join(format!("{name}.ids")), text.as_bytes())?;
    }
    let summary = IngestReport {
        articles: report.articles.len(),
        malformed: report.malformed,
        dropped_comments: report.dropped_comments,
        train: split.train.len(),
        valid: split.valid.len(),
        test: split.test.len(),
        warnings: &report.warnings,
    };
    let mut json = serde_json::to_vec_pretty(&summary)?;
    json.push(b'\n');
    write_out(&a.out_dir.join("ingest.json"), &json)
}

fn build_index(cfg: &PipelineConfig, a: BuildIndexArgs) -> anyhow::Result<()> {
    let corpus = load_articles(&a.corpus)?;
    let index = ArticleIndex::build(&corpus, cfg.tokenizer)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    guard_output(&a.out.join("corpus.jsonl"), &[&a.corpus])?;
    index.save(&a.out, &corpus)?;
    info!("indexed {} articles into {}", index.len(), a.out.display());
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct RetrieveRecord {
    article_id: String,
    comment_id: String,
    source_article_id: String,
    score: f64,
}

fn scorer_for<'a>(kind: ScorerKind, model: Option<&'a UsModel>, alpha: f64) -> anyhow::Result<Scorer<'a>> {
    let need = || model.ok_or_else(|| usage("--scorer us and es need --model <upvote-scorer checkpoint>"));
    Ok(match kind {
        ScorerKind::Rs => Scorer::Relevance,
        ScorerKind::Us => Scorer::Upvote(need()?),
        ScorerKind::Es => Scorer::Ensemble { model: need()?, alpha },
    })
}

fn retrieve(cfg: &PipelineConfig, a: RetrieveArgs) -> anyhow::Result<()> {
    if !a.index.join("df.bin").is_file() {
        bail!(
            "{} is not a complete index; run `commentforge build-index --corpus <corpus> --out {}` first",
            a.index.display(),
            a.index.display()
        );
    }
    let (index, corpus) = ArticleIndex::load(&a.index)?;
    if index.mode != cfg.tokenizer {
        warn!(
            "index was built with tokenizer {}; using it instead of {}",
            index.mode, cfg.tokenizer
        );
    }
    let model = a.model.as_deref().map(|p| load_us(p, "retrieve")).transpose()?;
    let alpha = a.alpha.unwrap_or(cfg.alpha);
    let scorer = scorer_for(a.scorer, model.as_ref(), alpha)?;
    let k = a.k.unwrap_or(cfg.k);
    let queries = load_articles(&a.input)?;
    guard_output(&a.output, &[&a.input])?;
    let mut out = Vec::with_capacity(queries.len());
    for q in &queries {
        match retrieve_comment(q, &index, &corpus, scorer, k) {
            Ok(ScoredComment {
                comment_id,
                source_article_id,
                score,
            }) => out.push(RetrieveRecord {
                article_id: q.id.clone(),
                comment_id,
                source_article_id,
                score,
            }),
            Err(crate::Error::NoCandidates) => warn!("no candidate comment for {}", q.id),
            Err(e) => return Err(e.into()),
        }
    }
    write_out(&a.output, &to_jsonl(&out)?)
}

fn train_us_cmd(mut cfg: PipelineConfig, a: TrainUsArgs) -> anyhow::Result<()> {
    if let Some(t) = a.threshold {
        cfg.threshold = t;
        cfg.us.threshold = t;
    }
    if let Some(e) = a.epochs {
        cfg.us.epochs = e;
    }
    let corpus = load_articles(&a.corpus)?;
    let (examples, unlabeled) = label_dataset(&corpus, cfg.us.threshold, cfg.tokenizer)?;
    info!(
        "{} labeled examples from {} articles ({} articles without a comment at {} upvotes)",
        examples.len(),
        corpus.len() - unlabeled.len(),
        unlabeled.len(),
        cfg.us.threshold
    );
    let pretrained = a.embeddings.as_deref().map(load_word2vec).transpose()?;
    let mut model = UsModel::for_corpus(cfg.us.clone(), &corpus, pretrained.as_ref())?;
    let history = train_us(&mut model, &examples)?;
    info!(
        "best validation AUC {:.4} at epoch {}",
        history.best_valid_auc, history.best_epoch
    );
    guard_output(&a.out, &[&a.corpus])?;
    ensure_parent(&a.out)?;
    model.save(&a.out)?;
    let mut json = serde_json::to_vec_pretty(&history)?;
    json.push(b'\n');
    write_out(&sidecar(&a.out, "history.json"), &json)
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(format!(".{suffix}"));
    path.with_file_name(name)
}

#[derive(Serialize)]
struct ScoreRecord<'a> {
    article_id: &'a str,
    comment_id: &'a str,
    s_r: f64,
    s_u: f64,
    s_ensemble: f64,
}

fn score(cfg: &PipelineConfig, a: ScoreArgs) -> anyhow::Result<()> {
    let model = load_us(&a.model, "score")?;
    let alpha = a.alpha.unwrap_or(cfg.alpha);
    if !(0.0..=1.0).contains(&alpha) {
        return Err(usage(format!("--alpha must lie in [0, 1], got {alpha}")));
    }
    let corpus = load_articles(&a.corpus)?;
    let docs: Vec<Vec<String>> = corpus.iter().map(|a| a.source_tokens(cfg.tokenizer)).collect();
    let df = fit_df(&docs)?;
    guard_output(&a.out, &[&a.corpus, &a.model])?;
    let mut out = Vec::new();
    for article in &corpus {
        let pool: Vec<PoolComment> = article
            .comments
            .iter()
            .map(|c| PoolComment {
                source_article_id: article.id.clone(),
                comment: c.clone(),
            })
            .collect();
        let s_r = component_scores(article, &pool, &df, cfg.tokenizer, Scorer::Relevance)?;
        let s_u = component_scores(article, &pool, &df, cfg.tokenizer, Scorer::Upvote(&model))?;
        for ((c, r), u) in article.comments.iter().zip(s_r).zip(s_u) {
            out.push(ScoreRecord {
                article_id: &article.id,
                comment_id: &c.id,
                s_r: r,
                s_u: u,
                s_ensemble: crate::upvote_scorer::ensemble_score(r, u, alpha)?,
            });
        }
    }
    write_out(&a.out, &to_jsonl(&out)?)
}

fn build_trainset(cfg: &PipelineConfig, a: BuildTrainsetArgs) -> anyhow::Result<()> {
    let corpus = load_articles(&a.corpus)?;
    if corpus.is_empty() {
        bail!("corpus {} holds no article", a.corpus.display());
    }
    let needs_model = matches!(a.strategy, Strategy::Us | Strategy::Es);
    let model = match (&a.model, needs_model) {
        (Some(p), true) => Some(load_us(p, "build-trainset")?),
        (None, true) => {
            return Err(usage(format!(
                "--strategy {} needs --model <upvote-scorer checkpoint>",
                a.strategy
            )))
        }
        (_, false) => None,
    };
    let docs: Vec<Vec<String>> = corpus.iter().map(|a| a.source_tokens(cfg.tokenizer)).collect();
    let df = fit_df(&docs)?;
    let mut ctx = ScorerContext::new(&df, cfg.tokenizer);
    ctx.model = model.as_ref();
    ctx.alpha = a.alpha.unwrap_or(cfg.alpha);
    ctx.top_n = a.top_n;
    let report = build_training_set(&corpus, a.strategy, &ctx, cfg.seed)?;
    if !report.skipped.is_empty() {
        warn!("{} articles skipped without a usable comment", report.skipped.len());
    }
    info!("{} training pairs under strategy {}", report.pairs.len(), a.strategy);
    guard_output(&a.out, &[&a.corpus])?;
    write_out(&a.out, &to_jsonl(&report.pairs)?)
}

fn token_pairs(pairs: &[TrainingPair], mode: TokenizerMode) -> Vec<TokenPair> {
    pairs
        .iter()
        .map(|p| TokenPair::from_text(&p.source, &p.target, mode))
        .collect()
}

fn train_pg(mut cfg: PipelineConfig, a: TrainPgArgs) -> anyhow::Result<()> {
    if let Some(e) = a.epochs {
        cfg.pg.epochs = e;
    }
    if let Some(c) = a.cov_from_epoch {
        cfg.pg.cov_from_epoch = c;
    }
    if a.no_pointer {
        cfg.pg.pointer = false;
        cfg.pg.coverage = false;
    }
    let pairs: Vec<TrainingPair> = read_jsonl(&a.pairs)?;
    if pairs.is_empty() {
        bail!(
            "pair file {} is empty; run `commentforge build-trainset` first",
            a.pairs.display()
        );
    }
    let valid: Vec<TrainingPair> = match &a.valid {
        Some(p) => read_jsonl(p)?,
        None => Vec::new(),
    };
    let mut model = PgModel::for_pairs(cfg.pg.clone(), &pairs)?;
    info!(
        "vocabulary of {} tokens, {} parameters",
        model.vocab.len(),
        model.store.len()
    );
    let history = pointer_gen::train(
        &mut model,
        &token_pairs(&pairs, cfg.tokenizer),
        &token_pairs(&valid, cfg.tokenizer),
        a.checkpoint_dir.as_deref(),
    )?;
    guard_output(&a.out, &[&a.pairs])?;
    ensure_parent(&a.out)?;
    model.save(&a.out)?;
    let mut json = serde_json::to_vec_pretty(&history)?;
    json.push(b'\n');
    write_out(&sidecar(&a.out, "history.json"), &json)
}

/// Generation input: a pair record or an article.
#[derive(Deserialize)]
#[serde(untagged)]
enum SourceRecord {
    Pair { article_id: String, source: String },
    Article { id: String, title: String, body: String },
}

#[derive(Serialize)]
struct GeneratedRecord {
    article_id: String,
    text: String,
}

fn generate(_cfg: &PipelineConfig, a: GenerateArgs) -> anyhow::Result<()> {
    if a.beam < 1 {
        return Err(usage("--beam must be >= 1"));
    }
    if !a.model.is_file() {
        bail!(
            "generator checkpoint {} not found; run `commentforge train-pg --pairs <pairs> --out {}` first",
            a.model.display(),
            a.model.display()
        );
    }
    let model = PgModel::load(&a.model)?;
    let opts = GenerateOptions {
        mode: match a.mode {
            ModeArg::Greedy => DecodeMode::Greedy,
            ModeArg::Beam => DecodeMode::Beam,
        },
        beam_size: a.beam,
        max_len: a.max_len.unwrap_or(model.config.max_tgt_len),
        unk_replace: !a.no_unk_replace,
        no_repeat_trigram: a.no_repeat_trigram,
    };
    let records: Vec<SourceRecord> = read_jsonl(&a.input)?;
    guard_output(&a.out, &[&a.input, &a.model])?;
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for r in records {
        let (id, source) = match r {
            SourceRecord::Pair { article_id, source } => (article_id, source),
            SourceRecord::Article { id, title, body } => (id, join_source(&title, &body)),
        };
        // pair files repeat an article once per comment
        if !seen.insert(id.clone()) {
            continue;
        }
        let tokens = source_tokens(&source, model.config.tokenizer);
        if tokens.is_empty() {
            warn!("article {id} has an empty source; skipped");
            continue;
        }
        let g = model.generate(&tokens, &opts)?;
        out.push(GeneratedRecord {
            article_id: id,
            text: g.text(),
        });
    }
    write_out(&a.out, &to_jsonl(&out)?)
}

fn evaluate_cmd(cfg: &PipelineConfig, a: EvaluateArgs) -> anyhow::Result<()> {
    guard_output(&a.out, &[&a.hyp, &a.reference])?;
    let report = evaluate(&a.hyp, &a.reference, cfg.tokenizer, a.references)?;
    info!(
        "BLEU-1 {:.4} ROUGE-L {:.4} CIDEr {:.4} over {} pairs",
        report.bleu1, report.rouge_l, report.cider, report.n_pairs
    );
    let mut json = serde_json::to_vec_pretty(&report)?;
    json.push(b'\n');
    write_out(&a.out, &json)
}

fn make_toy(cfg: &PipelineConfig, a: MakeToyArgs) -> anyhow::Result<()> {
    let corpus = match a.kind {
        ToyKind::General => toy::toy_corpus(a.articles, cfg.seed),
        ToyKind::Contradiction => toy::contradiction_corpus(a.articles, cfg.seed),
        ToyKind::Bigram => toy::bigram_corpus(a.articles, cfg.seed),
    };
    let mut buf = Vec::new();
    write_corpus(&corpus, &mut buf)?;
    write_out(&a.out, &buf)
}
