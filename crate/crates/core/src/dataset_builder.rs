//! Generator training sets: each article paired with the comments chosen by a
//! selection strategy.

use std::fmt;
use std::str::FromStr;

use log::warn;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, Article, Comment, TokenizerMode};
use crate::error::{Error, Result};
use crate::hashvec::DfTable;
use crate::retrieval::{component_scores, PoolComment, Scorer};
use crate::upvote_scorer::UsModel;
use crate::util::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Every comment.
    All,
    /// Most upvoted comment; random when nobody upvoted.
    Raw,
    Rs,
    Us,
    Es,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Strategy::All),
            "raw" | "raw-upvote" => Ok(Strategy::Raw),
            "rs" => Ok(Strategy::Rs),
            "us" => Ok(Strategy::Us),
            "es" => Ok(Strategy::Es),
            other => Err(Error::InvalidArgument(format!(
                "unknown strategy {other:?} (expected all, raw, rs, us or es)"
            ))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::All => "all",
            Strategy::Raw => "raw",
            Strategy::Rs => "rs",
            Strategy::Us => "us",
            Strategy::Es => "es",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub article_id: String,
    pub source: String,
    pub target: String,
    #[serde(default)]
    pub score: f64,
}

/// What the scored strategies need besides the article itself.
#[derive(Debug, Clone, Copy)]
pub struct ScorerContext<'a> {
    pub df: &'a DfTable,
    pub mode: TokenizerMode,
    pub model: Option<&'a UsModel>,
    pub alpha: f64,
    pub top_n: usize,
}

impl<'a> ScorerContext<'a> {
    pub fn new(df: &'a DfTable, mode: TokenizerMode) -> Self {
        ScorerContext {
            df,
            mode,
            model: None,
            alpha: crate::upvote_scorer::DEFAULT_ALPHA,
            top_n: 1,
        }
    }

    fn scorer(&self, strategy: Strategy) -> Result<Scorer<'a>> {
        let need_model = || {
            self.model
                .ok_or_else(|| Error::InvalidArgument(format!("strategy {strategy} needs an upvote-scorer model")))
        };
        Ok(match strategy {
            Strategy::Rs => Scorer::Relevance,
            Strategy::Us => Scorer::Upvote(need_model()?),
            Strategy::Es => Scorer::Ensemble {
                model: need_model()?,
                alpha: self.alpha,
            },
            Strategy::All | Strategy::Raw => unreachable!("not a scorer strategy"),
        })
    }
}

/// Per-comment selection scores, in comment order. For `Raw` these are the
/// upvote counts.
pub fn strategy_scores(article: &Article, strategy: Strategy, ctx: &ScorerContext<'_>) -> Result<Vec<f64>> {
    match strategy {
        Strategy::All => Ok(vec![0.0; article.comments.len()]),
        Strategy::Raw => Ok(article.comments.iter().map(|c| c.upvotes as f64).collect()),
        _ => {
            let pool: Vec<PoolComment> = article
                .comments
                .iter()
                .map(|c| PoolComment {
                    source_article_id: article.id.clone(),
                    comment: c.clone(),
                })
                .collect();
            component_scores(article, &pool, ctx.df, ctx.mode, ctx.scorer(strategy)?)
        }
    }
}

/// Comment indices ordered best first: score descending, then comment id.
fn ranked(article: &Article, scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..article.comments.len()).collect();
    idx.sort_by(|a, b| {
        scores[*b]
            .total_cmp(&scores[*a])
            .then_with(|| article.comments[*a].id.cmp(&article.comments[*b].id))
    });
    idx
}

/// Best comments of `article` under a single-selection strategy, up to
/// `ctx.top_n`. `None` when the article has no comment.
pub fn select_comments<'c>(
    article: &'c Article,
    strategy: Strategy,
    ctx: &ScorerContext<'_>,
    seed: u64,
) -> Result<Vec<(&'c Comment, f64)>> {
    if strategy == Strategy::All {
        return Err(Error::InvalidArgument("strategy all selects every comment".into()));
    }
    if article.comments.is_empty() {
        return Ok(Vec::new());
    }
    let scores = strategy_scores(article, strategy, ctx)?;
    if strategy == Strategy::Raw && article.max_upvotes() == 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &article.id));
        let i = rng.gen_range(0..article.comments.len());
        return Ok(vec![(&article.comments[i], 0.0)]);
    }
    Ok(ranked(article, &scores)
        .into_iter()
        .take(ctx.top_n.max(1))
        .map(|i| (&article.comments[i], scores[i]))
        .collect())
}

pub fn select_comment<'c>(
    article: &'c Article,
    strategy: Strategy,
    ctx: &ScorerContext<'_>,
    seed: u64,
) -> Result<Option<&'c Comment>> {
    Ok(select_comments(article, strategy, ctx, seed)?.first().map(|(c, _)| *c))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildReport {
    pub pairs: Vec<TrainingPair>,
    /// Articles left out because no comment was usable.
    pub skipped: Vec<String>,
}

/// Builds the pair list in corpus order. Comments that tokenize to nothing
/// are ignored; articles left with no comment are skipped and reported.
pub fn build_training_set(
    corpus: &[Article],
    strategy: Strategy,
    ctx: &ScorerContext<'_>,
    seed: u64,
) -> Result<BuildReport> {
    let mut report = BuildReport::default();
    for article in corpus {
        let usable = Article {
            comments: article
                .comments
                .iter()
                .filter(|c| !tokenize(&c.text, ctx.mode).is_empty())
                .cloned()
                .collect(),
            ..article.clone()
        };
        if usable.comments.is_empty() {
            warn!("article {} has no usable comment; skipped", article.id);
            report.skipped.push(article.id.clone());
            continue;
        }
        let source = usable.source_text();
        let chosen: Vec<(&Comment, f64)> = match strategy {
            Strategy::All => usable.comments.iter().map(|c| (c, c.upvotes as f64)).collect(),
            _ => select_comments(&usable, strategy, ctx, seed)?,
        };
        report.pairs.extend(chosen.into_iter().map(|(c, score)| TrainingPair {
            article_id: article.id.clone(),
            source: source.clone(),
            target: c.text.clone(),
            score,
        }));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn comment(id: &str, text: &str, upvotes: u64) -> Comment {
        Comment {
            id: id.into(),
            text: text.into(),
            upvotes,
        }
    }

    fn article(id: &str, comments: Vec<Comment>) -> Article {
        Article {
            id: id.into(),
            title: "storm hits coast".into(),
            body: "the storm damaged the coast road".into(),
            category: None,
            comments,
        }
    }

    fn df_in(corpus: &[Article], mode: TokenizerMode) -> DfTable {
        let docs: Vec<Vec<String>> = corpus.iter().map(|a| a.source_tokens(mode)).collect();
        crate::hashvec::fit_df(&docs).unwrap()
    }

    fn df_for(corpus: &[Article]) -> DfTable {
        df_in(corpus, TokenizerMode::Whitespace)
    }

    #[test]
    fn raw_picks_first_max_by_id() {
        let a = article(
            "a",
            vec![comment("c0", "x", 3), comment("c1", "y", 9), comment("c2", "z", 9)],
        );
        let corpus = vec![a];
        let df = df_for(&corpus);
        let ctx = ScorerContext::new(&df, TokenizerMode::Whitespace);
        let picked = select_comment(&corpus[0], Strategy::Raw, &ctx, 1).unwrap().unwrap();
        assert_eq!(picked.id, "c1");
    }

    #[test]
    fn raw_zero_upvotes_is_seeded() {
        let comments = (0..20).map(|i| comment(&format!("c{i:02}"), "hello", 0)).collect();
        let corpus = vec![article("a", comments)];
        let df = df_for(&corpus);
        let ctx = ScorerContext::new(&df, TokenizerMode::Whitespace);
        let first = select_comment(&corpus[0], Strategy::Raw, &ctx, 7)
            .unwrap()
            .unwrap()
            .id
            .clone();
        for _ in 0..5 {
            assert_eq!(
                select_comment(&corpus[0], Strategy::Raw, &ctx, 7).unwrap().unwrap().id,
                first
            );
        }
        let others: Vec<String> = (0..30)
            .map(|s| {
                select_comment(&corpus[0], Strategy::Raw, &ctx, s)
                    .unwrap()
                    .unwrap()
                    .id
                    .clone()
            })
            .collect();
        assert!(others.iter().any(|id| *id != first));
    }

    #[test]
    fn pair_counts() {
        let corpus: Vec<Article> = (0..3)
            .map(|a| {
                article(
                    &format!("a{a}"),
                    (0..4).map(|c| comment(&format!("c{c}"), "storm road", c)).collect(),
                )
            })
            .collect();
        let df = df_for(&corpus);
        let ctx = ScorerContext::new(&df, TokenizerMode::Whitespace);
        assert_eq!(
            build_training_set(&corpus, Strategy::All, &ctx, 0).unwrap().pairs.len(),
            12
        );
        assert_eq!(
            build_training_set(&corpus, Strategy::Rs, &ctx, 0).unwrap().pairs.len(),
            3
        );
        assert_eq!(
            build_training_set(&corpus, Strategy::Raw, &ctx, 0).unwrap().pairs.len(),
            3
        );
    }

    #[test]
    fn rs_prefers_overlapping_comment() {
        let a = article(
            "a",
            vec![
                comment("c0", "nice weather", 50),
                comment("c1", "the coast road storm", 0),
            ],
        );
        let corpus = vec![a];
        let df = df_for(&corpus);
        let ctx = ScorerContext::new(&df, TokenizerMode::Whitespace);
        let rs = build_training_set(&corpus, Strategy::Rs, &ctx, 0).unwrap();
        assert_eq!(rs.pairs[0].target, "the coast road storm");
        assert!((rs.pairs[0].score - 1.0).abs() < 1e-12);
        let raw = build_training_set(&corpus, Strategy::Raw, &ctx, 0).unwrap();
        assert_eq!(raw.pairs[0].target, "nice weather");
    }

    #[test]
    fn scored_strategies_need_model() {
        let corpus = vec![article("a", vec![comment("c0", "x", 1)])];
        let df = df_for(&corpus);
        let ctx = ScorerContext::new(&df, TokenizerMode::Whitespace);
        assert!(build_training_set(&corpus, Strategy::Us, &ctx, 0).is_err());
    }

    #[test]
    fn unusable_articles_are_skipped() {
        let corpus = vec![
            article("a", vec![comment("c0", "!!!", 1)]),
            article("b", vec![comment("c0", "ok", 1)]),
        ];
        let df = df_in(&corpus, TokenizerMode::CjkChar);
        let ctx = ScorerContext::new(&df, TokenizerMode::CjkChar);
        let r = build_training_set(&corpus, Strategy::Rs, &ctx, 0).unwrap();
        assert_eq!(r.skipped, vec!["a".to_string()]);
        assert_eq!(r.pairs.len(), 1);
    }

    #[test]
    fn strategy_parses() {
        for s in ["all", "raw", "rs", "us", "es"] {
            assert_eq!(s.parse::<Strategy>().unwrap().to_string(), s);
        }
        assert!("best".parse::<Strategy>().is_err());
    }
}
