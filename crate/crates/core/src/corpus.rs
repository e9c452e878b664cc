//! Corpus ingestion, tokenization, vocabularies and dataset splits.
//!
//! A corpus is a JSONL file with one article per line:
//!
//! ```text
//! {"id": str, "title": str, "body": str, "category": str|null,
//!  "comments": [{"id": str, "text": str, "upvotes": int}]}
//! ```
//!
//! Articles are fed to every model as `title <sep> body`.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Token placed between title and body.
pub const SEP: &str = "<sep>";

pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";
pub const BOS: &str = "<bos>";
pub const EOS: &str = "<eos>";

pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;
pub const BOS_ID: usize = 2;
pub const EOS_ID: usize = 3;

const RESERVED: [&str; 4] = [PAD, UNK, BOS, EOS];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    pub id: String,
    pub text: String,
    pub upvotes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub title: String,
    pub body: String,
    pub category: Option<String>,
    pub comments: Vec<Comment>,
}

impl Article {
    /// The model-facing source text: title, separator, body.
    pub fn source_text(&self) -> String {
        join_source(&self.title, &self.body)
    }

    pub fn source_tokens(&self, mode: TokenizerMode) -> Vec<String> {
        let mut tokens = tokenize(&self.title, mode);
        tokens.push(SEP.to_string());
        tokens.extend(tokenize(&self.body, mode));
        tokens
    }

    pub fn max_upvotes(&self) -> u64 {
        self.comments.iter().map(|c| c.upvotes).max().unwrap_or(0)
    }
}

pub fn join_source(title: &str, body: &str) -> String {
    format!("{title} {SEP} {body}")
}

/// Tokenizes a source string produced by [`join_source`], keeping the
/// separator as a token. Strings without a separator are tokenized whole.
pub fn source_tokens(text: &str, mode: TokenizerMode) -> Vec<String> {
    match text.split_once(SEP) {
        Some((title, body)) => {
            let mut tokens = tokenize(title, mode);
            tokens.push(SEP.to_string());
            tokens.extend(tokenize(body, mode));
            tokens
        }
        None => tokenize(text, mode),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum TokenizerMode {
    /// One token per CJK codepoint, maximal alphanumeric runs as words,
    /// everything else dropped.
    #[default]
    #[serde(rename = "cjk-char")]
    CjkChar,
    #[serde(rename = "whitespace")]
    Whitespace,
}

impl FromStr for TokenizerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cjk-char" => Ok(Self::CjkChar),
            "whitespace" => Ok(Self::Whitespace),
            other => Err(Error::InvalidArgument(format!(
                "unknown tokenizer mode `{other}` (expected cjk-char or whitespace)"
            ))),
        }
    }
}

impl fmt::Display for TokenizerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::CjkChar => "cjk-char",
            Self::Whitespace => "whitespace",
        })
    }
}

pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3040..=0x30FF        // hiragana, katakana
        | 0x3400..=0x4DBF      // ext A
        | 0x4E00..=0x9FFF      // unified ideographs
        | 0xAC00..=0xD7AF      // hangul syllables
        | 0xF900..=0xFAFF      // compatibility ideographs
        | 0x20000..=0x2FA1F) // ext B and beyond
}

pub fn tokenize(text: &str, mode: TokenizerMode) -> Vec<String> {
    match mode {
        TokenizerMode::Whitespace => text.split_whitespace().map(str::to_string).collect(),
        TokenizerMode::CjkChar => {
            let mut tokens = Vec::new();
            let mut run = String::new();
            for c in text.chars() {
                if is_cjk(c) {
                    if !run.is_empty() {
                        tokens.push(std::mem::take(&mut run));
                    }
                    tokens.push(c.to_string());
                } else if c.is_alphanumeric() {
                    run.push(c);
                } else if !run.is_empty() {
                    tokens.push(std::mem::take(&mut run));
                }
            }
            if !run.is_empty() {
                tokens.push(run);
            }
            tokens
        }
    }
}

/// Token strings paired with their vocabulary ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    pub ids: Vec<usize>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn truncated(mut self, max_len: usize) -> Self {
        self.tokens.truncate(max_len);
        self.ids.truncate(max_len);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    id_to_token: Vec<String>,
    token_to_id: HashMap<String, usize>,
}

impl Vocab {
    /// A vocabulary holding only the four reserved tokens.
    pub fn reserved_only() -> Self {
        Self::from_tokens(Vec::<String>::new())
    }

    /// Builds a vocabulary from non-reserved tokens in id order (ids start at 4).
    /// Duplicates and reserved strings are skipped.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Vocab {
            id_to_token: Vec::new(),
            token_to_id: HashMap::new(),
        };
        for t in RESERVED {
            vocab.push(t.to_string());
        }
        for t in tokens {
            let t = t.into();
            if !vocab.token_to_id.contains_key(&t) {
                vocab.push(t);
            }
        }
        vocab
    }

    fn push(&mut self, token: String) {
        self.token_to_id.insert(token.clone(), self.id_to_token.len());
        self.id_to_token.push(token);
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.token_to_id.get(token).copied()
    }

    pub fn id_or_unk(&self, token: &str) -> usize {
        self.id(token).unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.id_to_token.get(id).map(String::as_str)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.token_to_id.contains_key(token)
    }

    /// Non-reserved tokens in id order.
    pub fn tokens(&self) -> &[String] {
        &self.id_to_token[RESERVED.len()..]
    }

    pub fn encode(&self, tokens: &[String]) -> TokenSequence {
        TokenSequence {
            ids: tokens.iter().map(|t| self.id_or_unk(t)).collect(),
            tokens: tokens.to_vec(),
        }
    }
}

/// Keeps the `cap - 4` most frequent tokens over titles, bodies and
/// comments; ties go to the lexicographically smaller token.
pub fn build_vocab(corpus: &[Article], cap: usize, mode: TokenizerMode) -> Result<Vocab> {
    let texts = corpus.iter().flat_map(|a| {
        [a.title.as_str(), a.body.as_str()]
            .into_iter()
            .chain(a.comments.iter().map(|c| c.text.as_str()))
    });
    build_vocab_from_texts(texts, cap, mode)
}

/// Same ranking as [`build_vocab`] over arbitrary texts. Separator markers
/// are not counted.
pub fn build_vocab_from_texts<'a>(
    texts: impl IntoIterator<Item = &'a str>,
    cap: usize,
    mode: TokenizerMode,
) -> Result<Vocab> {
    if cap < 5 {
        return Err(Error::InvalidArgument(format!("vocab cap must be >= 5, got {cap}")));
    }
    let mut counts: HashMap<String, u64> = HashMap::new();
    for text in texts {
        for part in text.split(SEP) {
            for t in tokenize(part, mode) {
                if !RESERVED.contains(&t.as_str()) {
                    *counts.entry(t).or_default() += 1;
                }
            }
        }
    }
    let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(cap - RESERVED.len());
    Ok(Vocab::from_tokens(ranked.into_iter().map(|(t, _)| t)))
}

#[derive(Debug, Default)]
pub struct LoadReport {
    pub articles: Vec<Article>,
    pub malformed: usize,
    pub dropped_comments: usize,
    pub warnings: Vec<String>,
}

#[derive(Deserialize)]
struct RawArticle {
    id: String,
    title: String,
    body: String,
    #[serde(default)]
    category: Option<String>,
    comments: Vec<Comment>,
}

/// Loads a JSONL corpus, skipping malformed records.
///
/// Fails when the file is unreadable or when more than 10% of the
/// non-blank lines are malformed.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<LoadReport> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut report = LoadReport::default();
    let mut seen = HashSet::new();
    let mut total = 0usize;

    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        total += 1;
        let raw: RawArticle = match serde_json::from_str(&line) {
            Ok(raw) => raw,
            Err(e) => {
                let msg = format!("{}:{}: skipping malformed record: {e}", path.display(), lineno + 1);
                warn!("{msg}");
                report.warnings.push(msg);
                report.malformed += 1;
                continue;
            }
        };
        if !seen.insert(raw.id.clone()) {
            let msg = format!(
                "{}:{}: skipping duplicate article id {}",
                path.display(),
                lineno + 1,
                raw.id
            );
            warn!("{msg}");
            report.warnings.push(msg);
            report.malformed += 1;
            continue;
        }
        let before = raw.comments.len();
        let comments: Vec<Comment> = raw.comments.into_iter().filter(|c| !c.text.trim().is_empty()).collect();
        report.dropped_comments += before - comments.len();
        report.articles.push(Article {
            id: raw.id,
            title: raw.title,
            body: raw.body,
            category: raw.category,
            comments,
        });
    }

    // strictly more than 10%
    if report.malformed * 10 > total {
        return Err(Error::TooManyMalformed {
            path: path.to_path_buf(),
            malformed: report.malformed,
            total,
        });
    }
    Ok(report)
}

pub fn write_corpus<W: Write>(articles: &[Article], mut out: W) -> Result<()> {
    for a in articles {
        serde_json::to_writer(&mut out, a)?;
        out.write_all(b"\n").map_err(|e| Error::io("<corpus writer>", e))?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<Article>,
    pub valid: Vec<Article>,
    pub test: Vec<Article>,
}

/// Seeded shuffle into train/valid/test. Each part keeps corpus order.
pub fn split_dataset(corpus: &[Article], fractions: [f64; 3], seed: u64) -> Result<Split> {
    let sum: f64 = fractions.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || fractions.iter().any(|f| *f < 0.0 || !f.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "split fractions must be non-negative and sum to 1, got {fractions:?}"
        )));
    }
    let n = corpus.len();
    let n_train = ((fractions[0] * n as f64).round() as usize).min(n);
    let n_valid = ((fractions[1] * n as f64).round() as usize).min(n - n_train);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut part = vec![2u8; n];
    for &i in &order[..n_train] {
        part[i] = 0;
    }
    for &i in &order[n_train..n_train + n_valid] {
        part[i] = 1;
    }
    let pick = |p: u8| -> Vec<Article> {
        corpus
            .iter()
            .zip(&part)
            .filter(|(_, q)| **q == p)
            .map(|(a, _)| a.clone())
            .collect()
    };
    Ok(Split {
        train: pick(0),
        valid: pick(1),
        test: pick(2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn art(id: &str, title: &str, body: &str, comments: &[(&str, &str, u64)]) -> Article {
        Article {
            id: id.into(),
            title: title.into(),
            body: body.into(),
            category: None,
            comments: comments
                .iter()
                .map(|(id, text, up)| Comment {
                    id: (*id).into(),
                    text: (*text).into(),
                    upvotes: *up,
                })
                .collect(),
        }
    }

    #[test]
    fn cjk_one_token_per_char() {
        assert_eq!(
            tokenize("好人有好报", TokenizerMode::CjkChar),
            vec!["好", "人", "有", "好", "报"]
        );
    }

    #[test]
    fn cjk_mixed_alnum_runs() {
        assert_eq!(
            tokenize("BLEU-1得分", TokenizerMode::CjkChar),
            vec!["BLEU", "1", "得", "分"]
        );
    }

    #[test]
    fn whitespace_mode() {
        assert_eq!(tokenize("me too", TokenizerMode::Whitespace), vec!["me", "too"]);
        assert!(tokenize("", TokenizerMode::Whitespace).is_empty());
        assert!(tokenize("  ", TokenizerMode::CjkChar).is_empty());
    }

    #[test]
    fn source_round_trip_keeps_separator() {
        let a = art("a", "dog hurt", "a man helped", &[]);
        let from_text = source_tokens(&a.source_text(), TokenizerMode::CjkChar);
        assert_eq!(from_text, a.source_tokens(TokenizerMode::CjkChar));
        assert_eq!(from_text[2], SEP);
    }

    #[test]
    fn vocab_keeps_most_frequent() {
        let corpus = vec![art("1", "a a a", "a a b b b", &[])];
        let v = build_vocab(&corpus, 5, TokenizerMode::Whitespace).unwrap();
        assert_eq!(v.len(), 5);
        assert_eq!(v.token(4), Some("a"));
        assert_eq!(v.id("b"), None);
        assert_eq!(v.id_or_unk("b"), UNK_ID);
    }

    #[test]
    fn vocab_tie_prefers_lexicographically_smaller() {
        let corpus = vec![art("1", "z y", "x", &[("c", "y z x q", 0)])];
        // x, y, z appear twice; q once. cap 6 keeps two of the three tied.
        let v = build_vocab(&corpus, 6, TokenizerMode::Whitespace).unwrap();
        assert_eq!(v.tokens(), &["x".to_string(), "y".to_string()]);
    }

    #[test]
    fn vocab_cap_above_distinct_keeps_all() {
        let corpus = vec![art("1", "a b", "c", &[("c1", "d", 1)])];
        let v = build_vocab(&corpus, 100, TokenizerMode::Whitespace).unwrap();
        assert_eq!(v.len(), 8);
    }

    #[test]
    fn vocab_empty_corpus_and_bad_cap() {
        let v = build_vocab(&[], 50, TokenizerMode::CjkChar).unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(v.token(BOS_ID), Some(BOS));
        assert!(build_vocab(&[], 4, TokenizerMode::CjkChar).is_err());
    }

    #[test]
    fn split_counts_and_determinism() {
        let corpus: Vec<Article> = (0..10).map(|i| art(&i.to_string(), "t", "b", &[])).collect();
        let s1 = split_dataset(&corpus, [0.8, 0.1, 0.1], 7).unwrap();
        let s2 = split_dataset(&corpus, [0.8, 0.1, 0.1], 7).unwrap();
        assert_eq!((s1.train.len(), s1.valid.len(), s1.test.len()), (8, 1, 1));
        assert_eq!(s1, s2);

        let all = split_dataset(&corpus, [1.0, 0.0, 0.0], 3).unwrap();
        assert_eq!(all.train, corpus);
        assert!(split_dataset(&corpus, [0.5, 0.1, 0.1], 3).is_err());
    }
}
