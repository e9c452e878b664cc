//! Two-step retrieval: find the articles most similar to a query, pool
//! their comments, and return the best-scoring comment.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::corpus::{load_corpus, tokenize, write_corpus, Article, Comment, TokenizerMode};
use crate::error::{Error, Result};
use crate::hashvec::{dot, fit_df, tfidf_vector, DfTable, SparseVector};
use crate::upvote_scorer::{ensemble_score, UsModel};

pub const DEFAULT_K: usize = 5;

/// TF-IDF vectors of indexed articles (title, separator, body).
#[derive(Debug, Clone)]
pub struct ArticleIndex {
    pub mode: TokenizerMode,
    ids: Vec<String>,
    vectors: Vec<SparseVector>,
    df: DfTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredComment {
    pub comment_id: String,
    pub source_article_id: String,
    pub score: f64,
}

/// A pooled comment with the article it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolComment {
    pub source_article_id: String,
    pub comment: Comment,
}

#[derive(Debug, Clone, Copy)]
pub enum Scorer<'a> {
    Relevance,
    Upvote(&'a UsModel),
    Ensemble { model: &'a UsModel, alpha: f64 },
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexMeta {
    tokenizer: TokenizerMode,
    articles: usize,
}

impl ArticleIndex {
    pub fn build(corpus: &[Article], mode: TokenizerMode) -> Result<Self> {
        let docs: Vec<Vec<String>> = corpus.iter().map(|a| a.source_tokens(mode)).collect();
        let df = fit_df(&docs)?;
        Ok(Self::with_df(corpus, mode, df))
    }

    /// Vectorizes `corpus` against an existing document-frequency table.
    pub fn with_df(corpus: &[Article], mode: TokenizerMode, df: DfTable) -> Self {
        let vectors = corpus
            .iter()
            .map(|a| tfidf_vector(&a.source_tokens(mode), &df))
            .collect();
        ArticleIndex {
            mode,
            ids: corpus.iter().map(|a| a.id.clone()).collect(),
            vectors,
            df,
        }
    }

    pub fn df(&self) -> &DfTable {
        &self.df
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn vector(&self, i: usize) -> &SparseVector {
        &self.vectors[i]
    }

    pub fn query_vector(&self, query: &Article) -> SparseVector {
        tfidf_vector(&query.source_tokens(self.mode), &self.df)
    }

    /// Writes `df.bin`, `corpus.jsonl` and `meta.json` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>, corpus: &[Article]) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.df.save(dir.join("df.bin"))?;
        let mut buf = Vec::new();
        write_corpus(corpus, &mut buf)?;
        crate::util::write_atomic(&dir.join("corpus.jsonl"), &buf)?;
        let meta = IndexMeta {
            tokenizer: self.mode,
            articles: corpus.len(),
        };
        crate::util::write_atomic(&dir.join("meta.json"), &serde_json::to_vec_pretty(&meta)?)
    }

    /// Loads an index directory together with its corpus.
    pub fn load(dir: impl AsRef<Path>) -> Result<(Self, Vec<Article>)> {
        let dir = dir.as_ref();
        let meta_path = dir.join("meta.json");
        let meta: IndexMeta = serde_json::from_slice(&fs::read(&meta_path).map_err(|e| Error::io(&meta_path, e))?)?;
        let df = DfTable::load(dir.join("df.bin"))?;
        let corpus = load_corpus(dir.join("corpus.jsonl"))?.articles;
        if corpus.len() != meta.articles {
            return Err(Error::format(dir, "index corpus does not match its metadata"));
        }
        Ok((Self::with_df(&corpus, meta.tokenizer, df), corpus))
    }
}

/// Ids of the `k` indexed articles most similar to `query`, best first.
/// The query's own id is never returned.
pub fn top_k_articles(query: &Article, index: &ArticleIndex, k: usize) -> Result<Vec<String>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    if index.is_empty() {
        return Err(Error::InvalidArgument("article index is empty".into()));
    }
    let q = index.query_vector(query);
    let mut scored: Vec<(f64, &String)> = index
        .ids
        .iter()
        .zip(&index.vectors)
        .filter(|(id, _)| **id != query.id)
        .map(|(id, v)| (dot(&q, v), id))
        .collect();
    if scored.len() < k {
        warn!("index holds {} candidate articles, fewer than k = {k}", scored.len());
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    Ok(scored.into_iter().take(k).map(|(_, id)| id.clone()).collect())
}

pub fn candidate_pool(article_ids: &[String], corpus: &[Article]) -> Result<Vec<PoolComment>> {
    let by_id: HashMap<&str, &Article> = corpus.iter().map(|a| (a.id.as_str(), a)).collect();
    let mut pool = Vec::new();
    for id in article_ids {
        let article = by_id
            .get(id.as_str())
            .ok_or_else(|| Error::UnknownArticle(id.clone()))?;
        pool.extend(article.comments.iter().map(|c| PoolComment {
            source_article_id: article.id.clone(),
            comment: c.clone(),
        }));
    }
    Ok(pool)
}

fn sort_scored(scored: &mut [ScoredComment]) {
    scored.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.comment_id.cmp(&b.comment_id))
            .then_with(|| a.source_article_id.cmp(&b.source_article_id))
    });
}

/// Raw TF-IDF dot products between the query and each pooled comment, in
/// pool order.
pub fn raw_relevance(query: &Article, pool: &[PoolComment], df: &DfTable, mode: TokenizerMode) -> Vec<f64> {
    let q = tfidf_vector(&query.source_tokens(mode), df);
    pool.iter()
        .map(|p| dot(&q, &tfidf_vector(&tokenize(&p.comment.text, mode), df)))
        .collect()
}

/// Divides by the maximum; an all-zero input stays zero.
pub fn normalize_by_max(raw: &[f64]) -> Vec<f64> {
    let max = raw.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        raw.iter().map(|r| r / max).collect()
    } else {
        vec![0.0; raw.len()]
    }
}

/// Relevance scores normalized by the pool maximum, sorted best first.
pub fn relevance_scores(
    query: &Article,
    pool: &[PoolComment],
    df: &DfTable,
    mode: TokenizerMode,
) -> Vec<ScoredComment> {
    score_pool(query, pool, df, mode, Scorer::Relevance).expect("relevance scoring is infallible")
}

/// Per-comment scores under `scorer`, in pool order. Also returns the
/// normalized relevance and upvote components when computed.
pub fn component_scores(
    query: &Article,
    pool: &[PoolComment],
    df: &DfTable,
    mode: TokenizerMode,
    scorer: Scorer<'_>,
) -> Result<Vec<f64>> {
    let relevance = || normalize_by_max(&raw_relevance(query, pool, df, mode));
    let upvote = |m: &UsModel| -> Result<Vec<f64>> { pool.iter().map(|p| m.score(query, &p.comment.text)).collect() };
    match scorer {
        Scorer::Relevance => Ok(relevance()),
        Scorer::Upvote(m) => upvote(m),
        Scorer::Ensemble { model, alpha } => {
            let s_r = relevance();
            let s_u = upvote(model)?;
            s_r.iter()
                .zip(&s_u)
                .map(|(r, u)| ensemble_score(*r, *u, alpha))
                .collect()
        }
    }
}

pub fn score_pool(
    query: &Article,
    pool: &[PoolComment],
    df: &DfTable,
    mode: TokenizerMode,
    scorer: Scorer<'_>,
) -> Result<Vec<ScoredComment>> {
    let scores = component_scores(query, pool, df, mode, scorer)?;
    let mut scored: Vec<ScoredComment> = pool
        .iter()
        .zip(scores)
        .map(|(p, score)| ScoredComment {
            comment_id: p.comment.id.clone(),
            source_article_id: p.source_article_id.clone(),
            score,
        })
        .collect();
    sort_scored(&mut scored);
    Ok(scored)
}

/// Two-step retrieval: top-`k` articles, pooled comments, best score.
pub fn retrieve_comment(
    query: &Article,
    index: &ArticleIndex,
    corpus: &[Article],
    scorer: Scorer<'_>,
    k: usize,
) -> Result<ScoredComment> {
    let ids = top_k_articles(query, index, k)?;
    let pool = candidate_pool(&ids, corpus)?;
    if pool.is_empty() {
        return Err(Error::NoCandidates);
    }
    let scored = score_pool(query, &pool, index.df(), index.mode, scorer)?;
    Ok(scored.into_iter().next().expect("pool is non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn article(id: &str, body: &str, comments: &[(&str, &str)]) -> Article {
        Article {
            id: id.into(),
            title: String::new(),
            body: body.into(),
            category: None,
            comments: comments
                .iter()
                .map(|(cid, t)| Comment {
                    id: (*cid).into(),
                    text: (*t).into(),
                    upvotes: 0,
                })
                .collect(),
        }
    }

    fn corpus() -> Vec<Article> {
        vec![
            article(
                "a1",
                "the dog broke its chin",
                &[("c1", "poor dog"), ("c2", "the dog broke its chin sadly")],
            ),
            article("a2", "stock markets fell today", &[("c3", "sell now")]),
            article(
                "a3",
                "a dog was rescued by a man",
                &[("c4", "good man"), ("c5", "the dog was rescued")],
            ),
        ]
    }

    #[test]
    fn self_query_ranks_itself_first_when_not_excluded() {
        let c = corpus();
        let index = ArticleIndex::build(&c, TokenizerMode::Whitespace).unwrap();
        let mut q = c[0].clone();
        q.id = "query".into();
        assert_eq!(top_k_articles(&q, &index, 1).unwrap(), vec!["a1"]);
        // own id excluded
        assert!(!top_k_articles(&c[0], &index, 3).unwrap().contains(&"a1".to_string()));
    }

    #[test]
    fn k_larger_than_index_returns_all() {
        let c = corpus();
        let index = ArticleIndex::build(&c, TokenizerMode::Whitespace).unwrap();
        let mut q = c[1].clone();
        q.id = "q".into();
        assert_eq!(top_k_articles(&q, &index, 10).unwrap().len(), 3);
        assert!(top_k_articles(&q, &index, 0).is_err());
    }

    #[test]
    fn pool_concatenates_in_order() {
        let c = corpus();
        let pool = candidate_pool(&["a3".into(), "a1".into()], &c).unwrap();
        let ids: Vec<&str> = pool.iter().map(|p| p.comment.id.as_str()).collect();
        assert_eq!(ids, vec!["c4", "c5", "c1", "c2"]);
        assert_eq!(pool[0].source_article_id, "a3");
        assert!(candidate_pool(&[], &c).unwrap().is_empty());
        assert!(matches!(
            candidate_pool(&["zz".into()], &c),
            Err(Error::UnknownArticle(_))
        ));
    }

    #[test]
    fn identical_comment_normalizes_to_one() {
        let c = corpus();
        let index = ArticleIndex::build(&c, TokenizerMode::Whitespace).unwrap();
        let q = article("q", "the dog broke its chin sadly", &[]);
        let pool = candidate_pool(&["a1".into(), "a3".into()], &c).unwrap();
        let scored = relevance_scores(&q, &pool, index.df(), TokenizerMode::Whitespace);
        assert_eq!(scored[0].comment_id, "c2");
        assert_eq!(scored[0].score, 1.0);
        assert!(scored.iter().all(|s| (0.0..=1.0).contains(&s.score)));
    }

    #[test]
    fn disjoint_pool_scores_zero() {
        let c = corpus();
        let index = ArticleIndex::build(&c, TokenizerMode::Whitespace).unwrap();
        let q = article("q", "completely unrelated words here", &[]);
        let pool = candidate_pool(&["a1".into()], &c).unwrap();
        let scored = relevance_scores(&q, &pool, index.df(), TokenizerMode::Whitespace);
        assert!(scored.iter().all(|s| s.score == 0.0));
        // ties fall back to ascending comment id
        assert_eq!(scored[0].comment_id, "c1");
    }

    #[test]
    fn no_candidates_is_an_error() {
        let c = vec![article("a", "x y z", &[]), article("b", "x y w", &[])];
        let index = ArticleIndex::build(&c, TokenizerMode::Whitespace).unwrap();
        let q = article("q", "x y", &[]);
        assert!(matches!(
            retrieve_comment(&q, &index, &c, Scorer::Relevance, 5),
            Err(Error::NoCandidates)
        ));
    }

    #[test]
    fn retrieval_is_composition_of_steps() {
        let c = corpus();
        let index = ArticleIndex::build(&c, TokenizerMode::Whitespace).unwrap();
        let q = article("q", "a dog broke its chin and was rescued", &[]);
        let got = retrieve_comment(&q, &index, &c, Scorer::Relevance, 2).unwrap();
        let ids = top_k_articles(&q, &index, 2).unwrap();
        let pool = candidate_pool(&ids, &c).unwrap();
        let manual = relevance_scores(&q, &pool, index.df(), TokenizerMode::Whitespace);
        assert_eq!(got, manual[0]);
        assert!(ids.contains(&got.source_article_id));
    }
}
