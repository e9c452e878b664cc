//! Upvote scorer and ensemble scorer.
//!
//! The upvote scorer is a binary classifier trained on articles that have
//! at least one comment at or above the upvote threshold. Article and
//! comment go through one shared embedding table and one shared BiLSTM.
//! The comment's last hidden state `h_m` queries the article states through
//! a bilinear form `e_i = h_i^T W_a h_m`; the softmax-weighted article
//! context `u` is concatenated with `h_m` and mapped to a logit by a single
//! affine layer, then squashed with a sigmoid.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{build_vocab, tokenize, Article, TokenizerMode, Vocab};
use crate::diffcore::{
    bilstm, load_checkpoint, save_checkpoint, Adam, BiLstmParams, Graph, ParamId, ParamStore, Tensor, Var,
};
use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD: u64 = 10;
pub const DEFAULT_ALPHA: f64 = 0.2;
const CHECKPOINT_KIND: &str = "upvote-scorer";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UsConfig {
    pub tokenizer: TokenizerMode,
    pub vocab_cap: usize,
    /// Used when no pretrained embedding file is given; otherwise the file's
    /// dimension wins.
    pub emb_dim: usize,
    pub hidden: usize,
    pub max_article_len: usize,
    pub max_comment_len: usize,
    pub threshold: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub clip_norm: f64,
    pub init_scale: f64,
    pub pos_weight: f64,
    pub valid_fraction: f64,
    /// Epochs without validation-AUC improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for UsConfig {
    fn default() -> Self {
        UsConfig {
            tokenizer: TokenizerMode::CjkChar,
            vocab_cap: 50_000,
            emb_dim: 64,
            hidden: 256,
            max_article_len: 400,
            max_comment_len: 100,
            threshold: DEFAULT_THRESHOLD,
            epochs: 10,
            batch_size: 16,
            lr: 1e-3,
            clip_norm: crate::diffcore::CLIP_NORM,
            init_scale: crate::diffcore::INIT_SCALE,
            pos_weight: 1.0,
            valid_fraction: 0.1,
            patience: 3,
            seed: 13,
        }
    }
}

/// One (article, comment) pair with its upvote label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub article_id: String,
    pub comment_id: String,
    pub article: Vec<String>,
    pub comment: Vec<String>,
    pub label: u8,
}

/// Splits a corpus into labeled examples and unlabeled articles.
///
/// An article is labeled when one of its comments reaches `threshold`
/// upvotes; all of its comments then become examples, positive iff they
/// reach the threshold.
pub fn label_dataset(
    corpus: &[Article],
    threshold: u64,
    mode: TokenizerMode,
) -> Result<(Vec<LabeledExample>, Vec<Article>)> {
    if threshold < 1 {
        return Err(Error::InvalidArgument("upvote threshold must be >= 1".into()));
    }
    let mut examples = Vec::new();
    let mut unlabeled = Vec::new();
    for article in corpus {
        if article.max_upvotes() < threshold {
            unlabeled.push(article.clone());
            continue;
        }
        let source = article.source_tokens(mode);
        for c in &article.comments {
            examples.push(LabeledExample {
                article_id: article.id.clone(),
                comment_id: c.id.clone(),
                article: source.clone(),
                comment: tokenize(&c.text, mode),
                label: u8::from(c.upvotes >= threshold),
            });
        }
    }
    Ok((examples, unlabeled))
}

/// Linear interpolation `alpha * s_r + (1 - alpha) * s_u`.
pub fn ensemble_score(s_r: f64, s_u: f64, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    Ok(alpha * s_r + (1.0 - alpha) * s_u)
}

/// Area under the ROC curve; ties count one half.
pub fn auc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|a, b| scores[*a].total_cmp(&scores[*b]));
    // average ranks over ties
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[idx[k]] = r;
        }
        i = j + 1;
    }
    let n_pos = labels.iter().filter(|l| **l == 1).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return f64::NAN;
    }
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, l)| **l == 1).map(|(r, _)| r).sum();
    (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg)
}

/// Reads word2vec text format: a `count dim` header, then `token v1 .. vd`.
pub fn load_word2vec(path: impl AsRef<Path>) -> Result<(usize, HashMap<String, Vec<f64>>)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::format(path, "empty embedding file"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| Error::format(path, "bad `count dim` header")))
        .collect::<Result<_>>()?;
    let [count, dim] = dims[..] else {
        return Err(Error::format(path, "bad `count dim` header"));
    };
    let mut vectors = HashMap::with_capacity(count);
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let mut parts = line.split_whitespace();
        let token = parts.next().unwrap().to_string();
        let values: Vec<f64> = parts
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::format(path, format!("line {}: {e}", i + 2)))?;
        if values.len() != dim {
            return Err(Error::format(
                path,
                format!("line {}: expected {dim} values, got {}", i + 2, values.len()),
            ));
        }
        vectors.insert(token, values);
    }
    Ok((dim, vectors))
}

/// `e_i = h_i^T W_a h_m`, softmax over `i`, and the weighted sum of the
/// rows of `keys`. Returns `(attention, context)`.
pub fn bilinear_attention(g: &mut Graph, keys: Var, w_a: Var, h_m: Var) -> (Var, Var) {
    let query = g.matvec(w_a, h_m);
    let e = g.matvec(keys, query);
    let attention = g.softmax(e);
    let context = g.vecmat(attention, keys);
    (attention, context)
}

pub struct UsModel {
    pub config: UsConfig,
    pub vocab: Vocab,
    pub store: ParamStore,
    pub emb: ParamId,
    pub encoder: BiLstmParams,
    pub w_a: ParamId,
    pub f_w: ParamId,
    pub f_b: ParamId,
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone, Copy)]
pub struct UsForward {
    pub logit: Var,
    pub score: Var,
    pub attention: Var,
    pub context: Var,
    pub comment_state: Var,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsEpoch {
    pub epoch: usize,
    pub loss: f64,
    pub valid_auc: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UsHistory {
    pub epochs: Vec<UsEpoch>,
    pub best_epoch: usize,
    pub best_valid_auc: f64,
}

impl UsModel {
    /// Fresh model. With `pretrained`, the embedding table takes its
    /// dimension from the vectors, copies them for known tokens, and is frozen.
    pub fn new(config: UsConfig, vocab: Vocab, pretrained: Option<&(usize, HashMap<String, Vec<f64>>)>) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let s = config.init_scale;
        let emb_dim = pretrained.map_or(config.emb_dim, |(d, _)| *d);
        let emb = store.add_uniform("us.emb", &[vocab.len(), emb_dim], s, &mut rng);
        if let Some((_, vectors)) = pretrained {
            let table = &mut store.get_mut(emb).value;
            let mut hits = 0;
            for id in 0..vocab.len() {
                if let Some(v) = vectors.get(vocab.token(id).unwrap()) {
                    table.data_mut()[id * emb_dim..(id + 1) * emb_dim].copy_from_slice(v);
                    hits += 1;
                }
            }
            info!("pretrained embeddings cover {hits} of {} vocab entries", vocab.len());
            store.set_trainable(emb, false);
        }
        let h = config.hidden;
        let encoder = BiLstmParams::new(&mut store, "us.enc", emb_dim, h, s, &mut rng);
        let w_a = store.add_uniform("us.w_a", &[2 * h, 2 * h], s, &mut rng);
        let f_w = store.add_uniform("us.f.w", &[4 * h], s, &mut rng);
        let f_b = store.add_zeros("us.f.b", &[]);
        UsModel {
            config,
            vocab,
            store,
            emb,
            encoder,
            w_a,
            f_w,
            f_b,
        }
    }

    /// Builds the vocabulary from `corpus` and creates a model.
    pub fn for_corpus(
        config: UsConfig,
        corpus: &[Article],
        pretrained: Option<&(usize, HashMap<String, Vec<f64>>)>,
    ) -> Result<Self> {
        let vocab = build_vocab(corpus, config.vocab_cap, config.tokenizer)?;
        Ok(Self::new(config, vocab, pretrained))
    }

    fn encode(&self, tokens: &[String], max_len: usize) -> Vec<usize> {
        tokens.iter().take(max_len).map(|t| self.vocab.id_or_unk(t)).collect()
    }

    /// Records the forward pass on `g` for pre-encoded ids.
    pub fn forward_ids(&self, g: &mut Graph, article: &[usize], comment: &[usize]) -> Result<UsForward> {
        if article.is_empty() || comment.is_empty() {
            return Err(Error::InvalidArgument(
                "upvote scorer needs non-empty article and comment".into(),
            ));
        }
        let store = &self.store;
        let a_in: Vec<Var> = article.iter().map(|id| g.embed(store, self.emb, *id)).collect();
        let c_in: Vec<Var> = comment.iter().map(|id| g.embed(store, self.emb, *id)).collect();
        let a_states = bilstm(g, store, &self.encoder, &a_in)?.states;
        let c_states = bilstm(g, store, &self.encoder, &c_in)?.states;
        let h_m = *c_states.last().unwrap();

        let w_a = g.param(store, self.w_a);
        let keys = g.stack(&a_states);
        let (attention, context) = bilinear_attention(g, keys, w_a, h_m);

        let feat = g.concat(&[context, h_m]);
        let f_w = g.param(store, self.f_w);
        let f_b = g.param(store, self.f_b);
        let z = g.dot(f_w, feat);
        let logit = g.add(z, f_b);
        let score = g.sigmoid(logit);
        Ok(UsForward {
            logit,
            score,
            attention,
            context,
            comment_state: h_m,
        })
    }

    pub fn score_tokens(&self, article: &[String], comment: &[String]) -> Result<f64> {
        let a = self.encode(article, self.config.max_article_len);
        let c = self.encode(comment, self.config.max_comment_len);
        let mut g = Graph::new();
        let out = self.forward_ids(&mut g, &a, &c)?;
        Ok(g.value(out.score).item())
    }

    /// `S_u` for a comment text under an article.
    pub fn score(&self, article: &Article, comment_text: &str) -> Result<f64> {
        let mode = self.config.tokenizer;
        let comment = tokenize(comment_text, mode);
        if comment.is_empty() {
            // nothing the encoder can read; neutral score
            return Ok(0.5);
        }
        self.score_tokens(&article.source_tokens(mode), &comment)
    }

    fn example_loss(&self, g: &mut Graph, ex: &EncodedExample) -> Result<Var> {
        let out = self.forward_ids(g, &ex.article, &ex.comment)?;
        Ok(g.bce_with_logits(out.logit, ex.label as f64, self.config.pos_weight))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let config = serde_json::to_value(&self.config)?;
        let meta = serde_json::json!({ "vocab": self.vocab.tokens() });
        save_checkpoint(path, CHECKPOINT_KIND, config, meta, &self.store)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let (header, store) = load_checkpoint(path)?;
        if header.kind != CHECKPOINT_KIND {
            return Err(Error::format(
                path,
                format!("expected an {CHECKPOINT_KIND} checkpoint, got {}", header.kind),
            ));
        }
        let config: UsConfig = serde_json::from_value(header.config)?;
        let tokens: Vec<String> = serde_json::from_value(header.meta["vocab"].clone())?;
        let vocab = Vocab::from_tokens(tokens);
        let find = |name: &str| {
            store
                .find(name)
                .ok_or_else(|| Error::format(path, format!("missing parameter {name}")))
        };
        let lstm = |dir: &str| -> Result<crate::diffcore::LstmParams> {
            let w = find(&format!("us.enc.{dir}.w"))?;
            let b = find(&format!("us.enc.{dir}.b"))?;
            let shape = store.value(w).shape();
            let hidden = shape[0] / 4;
            Ok(crate::diffcore::LstmParams {
                w,
                b,
                input_dim: shape[1] - hidden,
                hidden,
            })
        };
        let encoder = BiLstmParams {
            fwd: lstm("fwd")?,
            bwd: lstm("bwd")?,
        };
        Ok(UsModel {
            emb: find("us.emb")?,
            w_a: find("us.w_a")?,
            f_w: find("us.f.w")?,
            f_b: find("us.f.b")?,
            config,
            vocab,
            store,
            encoder,
        })
    }
}

impl std::fmt::Debug for UsModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("UsModel")
            .field("vocab_size", &self.vocab.len())
            .field("hidden", &self.encoder.fwd.hidden)
            .field("params", &self.store.len())
            .finish()
    }
}

struct EncodedExample {
    article: Vec<usize>,
    comment: Vec<usize>,
    label: u8,
}

/// Trains with binary cross-entropy and Adam, keeping the parameters of the
/// epoch with the best validation AUC.
pub fn train_us(model: &mut UsModel, examples: &[LabeledExample]) -> Result<UsHistory> {
    let cfg = model.config.clone();
    let n_pos = examples.iter().filter(|e| e.label == 1).count();
    if n_pos == 0 || n_pos == examples.len() {
        return Err(Error::SingleClass(if n_pos == 0 { 0 } else { 1 }));
    }
    let usable: Vec<EncodedExample> = examples
        .iter()
        .filter(|e| !e.article.is_empty() && !e.comment.is_empty())
        .map(|e| EncodedExample {
            article: model.encode(&e.article, cfg.max_article_len),
            comment: model.encode(&e.comment, cfg.max_comment_len),
            label: e.label,
        })
        .collect();
    if usable.len() < examples.len() {
        warn!("{} examples with empty text skipped", examples.len() - usable.len());
    }

    // stratified validation split
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut train = Vec::new();
    let mut valid = Vec::new();
    for label in [0u8, 1] {
        let mut idx: Vec<usize> = (0..usable.len()).filter(|i| usable[*i].label == label).collect();
        idx.shuffle(&mut rng);
        let n_valid = if cfg.valid_fraction > 0.0 && idx.len() > 1 {
            ((idx.len() as f64 * cfg.valid_fraction).round() as usize).clamp(1, idx.len() - 1)
        } else {
            0
        };
        valid.extend_from_slice(&idx[..n_valid]);
        train.extend_from_slice(&idx[n_valid..]);
    }
    train.sort_unstable();
    valid.sort_unstable();
    // without a validation set, select on training AUC
    let eval_set = if valid.is_empty() { train.clone() } else { valid.clone() };

    let mut opt = Adam::new(cfg.lr)?;
    let mut history = UsHistory {
        best_valid_auc: f64::NEG_INFINITY,
        ..Default::default()
    };
    let mut best = model.store.clone();
    let mut stale = 0;

    for epoch in 1..=cfg.epochs {
        train.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in train.chunks(cfg.batch_size.max(1)) {
            model.store.zero_grad();
            for &i in batch {
                let mut g = Graph::new();
                let loss = model.example_loss(&mut g, &usable[i])?;
                total += g.value(loss).item();
                let scaled = g.scale(loss, 1.0 / batch.len() as f64);
                g.backward(scaled, &mut model.store)?;
            }
            model.store.clip_grad_norm(cfg.clip_norm);
            opt.step(&mut model.store);
        }
        let loss = total / train.len().max(1) as f64;

        let mut scores = Vec::with_capacity(eval_set.len());
        let mut labels = Vec::with_capacity(eval_set.len());
        for &i in &eval_set {
            let ex = &usable[i];
            let mut g = Graph::new();
            let out = model.forward_ids(&mut g, &ex.article, &ex.comment)?;
            scores.push(g.value(out.score).item());
            labels.push(ex.label);
        }
        let valid_auc = auc(&scores, &labels);
        info!("upvote scorer epoch {epoch}: loss {loss:.5} valid AUC {valid_auc:.4}");
        history.epochs.push(UsEpoch { epoch, loss, valid_auc });

        if valid_auc > history.best_valid_auc {
            history.best_valid_auc = valid_auc;
            history.best_epoch = epoch;
            best = model.store.clone();
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                info!("early stop after epoch {epoch}");
                break;
            }
        }
    }
    model.store = best;
    Ok(history)
}

/// Random small model for tests and gradient checks.
pub fn random_model<R: Rng>(rng: &mut R, vocab_size: usize, emb_dim: usize, hidden: usize) -> UsModel {
    let tokens: Vec<String> = (0..vocab_size.saturating_sub(4)).map(|i| format!("w{i}")).collect();
    let config = UsConfig {
        emb_dim,
        hidden,
        seed: rng.gen(),
        init_scale: 0.5,
        ..Default::default()
    };
    let mut model = UsModel::new(config, Vocab::from_tokens(tokens), None);
    // non-zero bias so every parameter carries gradient signal
    model.store.get_mut(model.f_b).value = Tensor::scalar(rng.gen_range(-0.5..0.5));
    model
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Comment;

    fn article(id: &str, ups: &[u64]) -> Article {
        Article {
            id: id.into(),
            title: "title".into(),
            body: "body text".into(),
            category: None,
            comments: ups
                .iter()
                .enumerate()
                .map(|(i, u)| Comment {
                    id: format!("{id}-{i}"),
                    text: format!("comment {i}"),
                    upvotes: *u,
                })
                .collect(),
        }
    }

    #[test]
    fn threshold_is_inclusive() {
        let (ex, unlabeled) = label_dataset(&[article("a", &[10, 9])], 10, TokenizerMode::Whitespace).unwrap();
        assert!(unlabeled.is_empty());
        assert_eq!(ex.iter().map(|e| e.label).collect::<Vec<_>>(), vec![1, 0]);
    }

    #[test]
    fn partition_counts() {
        let corpus = vec![
            article("a", &[0, 0]),
            article("b", &[12, 3, 1]),
            article("c", &[9]),
            article("d", &[10]),
            article("e", &[]),
        ];
        let (ex, unlabeled) = label_dataset(&corpus, 10, TokenizerMode::Whitespace).unwrap();
        assert_eq!(ex.len(), 4);
        let ids: Vec<&str> = unlabeled.iter().map(|a| a.id.as_str()).collect();
        assert_eq!(ids, vec!["a", "c", "e"]);
        assert!(label_dataset(&corpus, 0, TokenizerMode::Whitespace).is_err());
    }

    #[test]
    fn ensemble_endpoints_and_range() {
        assert_eq!(ensemble_score(0.7, 0.2, 1.0).unwrap(), 0.7);
        assert_eq!(ensemble_score(0.7, 0.2, 0.0).unwrap(), 0.2);
        assert!((ensemble_score(1.0, 0.5, 0.2).unwrap() - 0.6).abs() < 1e-15);
        assert!(ensemble_score(0.1, 0.1, 1.5).is_err());
        assert!(ensemble_score(0.1, 0.1, -0.1).is_err());
    }

    #[test]
    fn auc_known_values() {
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]), 1.0);
        assert_eq!(auc(&[0.9, 0.8, 0.2, 0.1], &[0, 0, 1, 1]), 0.0);
        assert_eq!(auc(&[0.5, 0.5], &[0, 1]), 0.5);
        // one inversion of four pairs
        assert_eq!(auc(&[0.1, 0.6, 0.5, 0.9], &[0, 0, 1, 1]), 0.75);
    }

    #[test]
    fn zero_head_scores_one_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut m = random_model(&mut rng, 10, 4, 3);
        m.store.get_mut(m.f_w).value.data_mut().fill(0.0);
        m.store.get_mut(m.f_b).value = Tensor::scalar(0.0);
        let s = m.score_tokens(&["w1".into(), "w2".into()], &["w3".into()]).unwrap();
        assert_eq!(s, 0.5);
    }

    #[test]
    fn zero_bilinear_gives_mean_context() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut m = random_model(&mut rng, 10, 4, 3);
        m.store.get_mut(m.w_a).value.data_mut().fill(0.0);
        let mut g = Graph::new();
        let out = m.forward_ids(&mut g, &[4, 5, 6], &[7, 8]).unwrap();
        let att = g.value(out.attention).data().to_vec();
        assert!(att.iter().all(|a| (a - 1.0 / 3.0).abs() < 1e-15));
        // recompute the article states separately and average them
        let mut g2 = Graph::new();
        let ins: Vec<Var> = [4, 5, 6].iter().map(|i| g2.embed(&m.store, m.emb, *i)).collect();
        let states = bilstm(&mut g2, &m.store, &m.encoder, &ins).unwrap().states;
        let ctx = g.value(out.context).data();
        for (k, c) in ctx.iter().enumerate() {
            let mean: f64 = states.iter().map(|s| g2.value(*s).data()[k]).sum::<f64>() / 3.0;
            assert!((c - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_inputs_rejected_and_single_class_fatal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut m = random_model(&mut rng, 10, 4, 3);
        let mut g = Graph::new();
        assert!(m.forward_ids(&mut g, &[], &[4]).is_err());
        let ex = LabeledExample {
            article_id: "a".into(),
            comment_id: "c".into(),
            article: vec!["w1".into()],
            comment: vec!["w2".into()],
            label: 0,
        };
        assert!(matches!(
            train_us(&mut m, &[ex.clone(), ex]),
            Err(Error::SingleClass(0))
        ));
    }

    #[test]
    fn not_symmetric_in_article_and_comment() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = random_model(&mut rng, 12, 4, 3);
        let a: Vec<String> = vec!["w1".into(), "w2".into(), "w3".into()];
        let c: Vec<String> = vec!["w4".into(), "w5".into()];
        let s1 = m.score_tokens(&a, &c).unwrap();
        let s2 = m.score_tokens(&c, &a).unwrap();
        assert!((s1 - s2).abs() > 1e-9, "{s1} vs {s2}");
    }
}
