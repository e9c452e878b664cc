//! BLEU-1, ROUGE-L and CIDEr-D following the coco-caption conventions.
//!
//! All scorers take tokenized pairs; callers decide the tokenization.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, Article, TokenizerMode};
use crate::error::{Error, Result};

pub const ROUGE_BETA: f64 = 1.2;
pub const CIDER_SIGMA: f64 = 6.0;
pub const CIDER_MAX_N: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalPair {
    pub hypothesis: Vec<String>,
    pub references: Vec<Vec<String>>,
}

impl EvalPair {
    pub fn new(hypothesis: Vec<String>, references: Vec<Vec<String>>) -> Result<Self> {
        if references.is_empty() {
            return Err(Error::InvalidArgument(
                "an evaluation pair needs at least one reference".into(),
            ));
        }
        Ok(EvalPair { hypothesis, references })
    }

    pub fn from_text(hypothesis: &str, references: &[&str], mode: TokenizerMode) -> Result<Self> {
        Self::new(
            tokenize(hypothesis, mode),
            references.iter().map(|r| tokenize(r, mode)).collect(),
        )
    }
}

fn counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

/// Corpus BLEU-1: clipped unigram matches over hypothesis length, with the
/// brevity penalty computed against the closest reference length per pair
/// (shorter reference on ties).
pub fn bleu1(pairs: &[EvalPair]) -> f64 {
    let (mut correct, mut guess, mut hyp_len, mut ref_len) = (0usize, 0usize, 0usize, 0usize);
    for p in pairs {
        let h = counts(&p.hypothesis, 1);
        let mut max_ref: HashMap<&[String], usize> = HashMap::new();
        for r in &p.references {
            for (g, c) in counts(r, 1) {
                let e = max_ref.entry(g).or_insert(0);
                *e = (*e).max(c);
            }
        }
        correct += h
            .iter()
            .map(|(g, c)| (*c).min(max_ref.get(g).copied().unwrap_or(0)))
            .sum::<usize>();
        guess += p.hypothesis.len();
        hyp_len += p.hypothesis.len();
        ref_len += p
            .references
            .iter()
            .map(|r| r.len())
            .min_by_key(|l| (l.abs_diff(p.hypothesis.len()), *l))
            .unwrap_or(0);
    }
    if guess == 0 {
        return 0.0;
    }
    let precision = correct as f64 / guess as f64;
    let ratio = hyp_len as f64 / ref_len.max(1) as f64;
    if ratio < 1.0 {
        precision * (1.0 - 1.0 / ratio).exp()
    } else {
        precision
    }
}

pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L of one pair: LCS F-measure from the best precision and best
/// recall over references.
pub fn rouge_l_pair(pair: &EvalPair) -> f64 {
    if pair.hypothesis.is_empty() {
        return 0.0;
    }
    let (mut p_max, mut r_max) = (0.0f64, 0.0f64);
    for r in &pair.references {
        let l = lcs_len(&pair.hypothesis, r) as f64;
        p_max = p_max.max(l / pair.hypothesis.len() as f64);
        if !r.is_empty() {
            r_max = r_max.max(l / r.len() as f64);
        }
    }
    if p_max == 0.0 || r_max == 0.0 {
        return 0.0;
    }
    let b2 = ROUGE_BETA * ROUGE_BETA;
    (1.0 + b2) * p_max * r_max / (r_max + b2 * p_max)
}

pub fn rouge_l(pairs: &[EvalPair]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    pairs.iter().map(rouge_l_pair).sum::<f64>() / pairs.len() as f64
}

type Grams<'a> = HashMap<&'a [String], usize>;

fn all_grams(tokens: &[String]) -> Vec<Grams<'_>> {
    (1..=CIDER_MAX_N).map(|n| counts(tokens, n)).collect()
}

struct TfIdf<'a> {
    vec: Vec<HashMap<&'a [String], f64>>,
    norm: Vec<f64>,
    /// Bigram count; the reference implementation measures length this way.
    length: f64,
}

fn tfidf<'a>(grams: &[Grams<'a>], df: &HashMap<&[String], usize>, log_images: f64) -> TfIdf<'a> {
    let mut vec = Vec::with_capacity(grams.len());
    let mut norm = Vec::with_capacity(grams.len());
    let mut length = 0.0;
    for (n, g) in grams.iter().enumerate() {
        let mut v = HashMap::new();
        let mut sq = 0.0;
        for (gram, tf) in g {
            let d = (df.get(gram).copied().unwrap_or(0).max(1) as f64).ln();
            let w = *tf as f64 * (log_images - d);
            sq += w * w;
            v.insert(*gram, w);
            if n == 1 {
                length += *tf as f64;
            }
        }
        vec.push(v);
        norm.push(sq.sqrt());
    }
    TfIdf { vec, norm, length }
}

fn cider_sim(h: &TfIdf<'_>, r: &TfIdf<'_>) -> Vec<f64> {
    let delta = h.length - r.length;
    let penalty = (-(delta * delta) / (2.0 * CIDER_SIGMA * CIDER_SIGMA)).exp();
    (0..CIDER_MAX_N)
        .map(|n| {
            let mut val = 0.0;
            for (g, wh) in &h.vec[n] {
                let wr = r.vec[n].get(g).copied().unwrap_or(0.0);
                val += wh.min(wr) * wr;
            }
            if h.norm[n] != 0.0 && r.norm[n] != 0.0 {
                val /= h.norm[n] * r.norm[n];
            }
            val * penalty
        })
        .collect()
}

/// Per-pair CIDEr-D scores with document frequencies fitted on the
/// references of `pairs`.
pub fn cider_per_pair(pairs: &[EvalPair]) -> Vec<f64> {
    let ref_grams: Vec<Vec<Vec<Grams<'_>>>> = pairs
        .iter()
        .map(|p| p.references.iter().map(|r| all_grams(r)).collect())
        .collect();
    let mut df: HashMap<&[String], usize> = HashMap::new();
    for refs in &ref_grams {
        let mut seen: HashSet<&[String]> = HashSet::new();
        for r in refs {
            for g in r {
                seen.extend(g.keys().copied());
            }
        }
        for g in seen {
            *df.entry(g).or_insert(0) += 1;
        }
    }
    let log_images = (pairs.len() as f64).ln();
    pairs
        .iter()
        .zip(&ref_grams)
        .map(|(p, refs)| {
            let h = tfidf(&all_grams(&p.hypothesis), &df, log_images);
            let mut acc = [0.0; CIDER_MAX_N];
            for r in refs {
                let r = tfidf(r, &df, log_images);
                for (a, s) in acc.iter_mut().zip(cider_sim(&h, &r)) {
                    *a += s;
                }
            }
            let mean = acc.iter().sum::<f64>() / CIDER_MAX_N as f64;
            mean / refs.len() as f64 * 10.0
        })
        .collect()
}

/// Corpus CIDEr-D: mean of the per-pair scores.
pub fn cider(pairs: &[EvalPair]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    if pairs.len() == 1 {
        warn!("CIDEr over a single pair: document frequencies are degenerate");
    }
    cider_per_pair(pairs).iter().sum::<f64>() / pairs.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub bleu1: f64,
    pub rouge_l: f64,
    pub cider: f64,
    pub n_pairs: usize,
    pub warnings: Vec<String>,
}

pub fn score_pairs(pairs: &[EvalPair]) -> MetricReport {
    let mut warnings = Vec::new();
    if pairs.len() == 1 {
        warnings.push("single pair: CIDEr document frequencies are degenerate".to_string());
    }
    if !pairs.is_empty() && pairs.iter().all(|p| p.hypothesis.is_empty()) {
        warnings.push("every hypothesis is empty".to_string());
    }
    MetricReport {
        bleu1: bleu1(pairs),
        rouge_l: rouge_l(pairs),
        cider: cider(pairs),
        n_pairs: pairs.len(),
        warnings,
    }
}

/// Which gold comments of a corpus-format reference file count as references.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceSet {
    #[default]
    All,
    /// Only the most upvoted comment (lowest id on ties).
    Top,
}

impl std::str::FromStr for ReferenceSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(ReferenceSet::All),
            "top" => Ok(ReferenceSet::Top),
            other => Err(Error::InvalidArgument(format!(
                "unknown reference set {other:?} (expected all or top)"
            ))),
        }
    }
}

#[derive(Debug, Deserialize)]
struct HypRecord {
    article_id: String,
    text: String,
}

/// Reference records: an article in corpus format, an explicit list, or one
/// text per line (repeated ids accumulate).
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RefRecord {
    Article(Article),
    List {
        article_id: String,
        references: Vec<String>,
    },
    Text {
        article_id: String,
        text: String,
    },
    Pair {
        article_id: String,
        target: String,
    },
}

fn read_lines<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    crate::util::read_jsonl(path)
}

/// Gold references per article id, in first-appearance order.
pub fn load_references(path: &Path, set: ReferenceSet) -> Result<Vec<(String, Vec<String>)>> {
    let mut order: Vec<String> = Vec::new();
    let mut refs: HashMap<String, Vec<String>> = HashMap::new();
    for rec in read_lines::<RefRecord>(path)? {
        let (id, texts) = match rec {
            RefRecord::Article(a) => {
                let texts = match set {
                    ReferenceSet::All => a.comments.iter().map(|c| c.text.clone()).collect(),
                    ReferenceSet::Top => {
                        let mut cs: Vec<_> = a.comments.iter().collect();
                        cs.sort_by(|x, y| y.upvotes.cmp(&x.upvotes).then_with(|| x.id.cmp(&y.id)));
                        cs.first().map(|c| vec![c.text.clone()]).unwrap_or_default()
                    }
                };
                (a.id, texts)
            }
            RefRecord::List { article_id, references } => (article_id, references),
            RefRecord::Text { article_id, text } => (article_id, vec![text]),
            RefRecord::Pair { article_id, target } => (article_id, vec![target]),
        };
        if !refs.contains_key(&id) {
            order.push(id.clone());
        }
        refs.entry(id).or_default().extend(texts);
    }
    Ok(order
        .into_iter()
        .map(|id| {
            let r = refs.remove(&id).unwrap_or_default();
            (id, r)
        })
        .collect())
}

/// Aligns a generated file with gold references by article id and scores it.
/// Gold articles without a hypothesis score as empty; hypotheses for unknown
/// articles are an error.
pub fn evaluate(hyp_path: &Path, ref_path: &Path, mode: TokenizerMode, set: ReferenceSet) -> Result<MetricReport> {
    let gold = load_references(existing_file(ref_path)?, set)?;
    let hyps: Vec<HypRecord> = read_lines(hyp_path)?;
    let gold_ids: HashSet<&str> = gold.iter().map(|(id, _)| id.as_str()).collect();
    let unknown: Vec<String> = hyps
        .iter()
        .filter(|h| !gold_ids.contains(h.article_id.as_str()))
        .map(|h| h.article_id.clone())
        .collect();
    if !unknown.is_empty() {
        return Err(Error::IdMismatch(unknown));
    }
    let mut by_id: BTreeMap<&str, &str> = BTreeMap::new();
    for h in &hyps {
        by_id.insert(&h.article_id, &h.text);
    }
    let mut missing = 0usize;
    let mut pairs = Vec::with_capacity(gold.len());
    for (id, refs) in &gold {
        let refs: Vec<Vec<String>> = refs.iter().map(|r| tokenize(r, mode)).collect();
        if refs.is_empty() {
            warn!("article {id} has no reference; skipped");
            continue;
        }
        let hyp = match by_id.get(id.as_str()) {
            Some(t) => tokenize(t, mode),
            None => {
                missing += 1;
                Vec::new()
            }
        };
        pairs.push(EvalPair::new(hyp, refs)?);
    }
    let mut report = score_pairs(&pairs);
    if missing > 0 {
        report.warnings.insert(
            0,
            format!(
                "{missing} of {} articles have no hypothesis; scored as empty",
                pairs.len()
            ),
        );
    }
    for w in &report.warnings {
        warn!("{w}");
    }
    Ok(report)
}

fn existing_file(path: &Path) -> Result<&Path> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
        ))
    }
}
