//! Pointer-generator sequence-to-sequence model with coverage.
//!
//! A bidirectional LSTM encodes the source; its final states are projected
//! to initialize a unidirectional LSTM decoder. At each step the decoder
//! attends over the source with additive attention that also sees the
//! coverage vector (the running sum of past attention). The output
//! distribution over the per-example extended vocabulary mixes generation
//! and copying:
//!
//! ```text
//! p_gen = sigmoid(w_h . h*_t + w_s . s_t + w_x . x_t + b_ptr)
//! P(w)  = p_gen * P_vocab(w) + (1 - p_gen) * sum_{i: w_i = w} a_i
//! ```
//!
//! The training loss per step is `-ln P(y_t) + lambda * sum_i min(a_i, c_i)`.

use std::collections::HashMap;
use std::path::Path;

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    build_vocab_from_texts, source_tokens, tokenize, TokenizerMode, Vocab, BOS_ID, EOS_ID, PAD_ID, SEP, UNK_ID,
};
use crate::diffcore::{
    bilstm, load_checkpoint, lstm_cell, save_checkpoint, Adam, BiLstmParams, Graph, LstmParams, ParamId, ParamStore,
    Var,
};
use crate::error::{Error, Result};

const CHECKPOINT_KIND: &str = "pointer-generator";
const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PgConfig {
    pub tokenizer: TokenizerMode,
    pub vocab_cap: usize,
    pub emb_dim: usize,
    /// Per direction.
    pub enc_hidden: usize,
    pub dec_hidden: usize,
    pub attn_dim: usize,
    /// Copy mechanism on. Off gives plain attention seq2seq (`p_gen = 1`).
    pub pointer: bool,
    pub coverage: bool,
    pub lambda_cov: f64,
    /// First epoch (1-based) whose loss includes the coverage term.
    pub cov_from_epoch: usize,
    pub max_src_len: usize,
    pub max_tgt_len: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub lr_decay: f64,
    pub clip_norm: f64,
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for PgConfig {
    fn default() -> Self {
        PgConfig {
            tokenizer: TokenizerMode::CjkChar,
            vocab_cap: 50_000,
            emb_dim: 128,
            enc_hidden: 256,
            dec_hidden: 512,
            attn_dim: 512,
            pointer: true,
            coverage: true,
            lambda_cov: 1.0,
            cov_from_epoch: 1,
            max_src_len: 400,
            max_tgt_len: 50,
            epochs: 10,
            batch_size: 16,
            lr: 1e-3,
            lr_decay: 0.5,
            clip_norm: crate::diffcore::CLIP_NORM,
            init_scale: crate::diffcore::INIT_SCALE,
            seed: 13,
        }
    }
}

/// Base vocabulary plus the source-only tokens of one example.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedVocab {
    base_size: usize,
    oov: Vec<String>,
    oov_ids: HashMap<String, usize>,
}

impl ExtendedVocab {
    /// Collects source tokens missing from `vocab`. The separator is never
    /// extended.
    pub fn new(vocab: &Vocab, source: &[String]) -> Self {
        let mut ext = ExtendedVocab {
            base_size: vocab.len(),
            oov: Vec::new(),
            oov_ids: HashMap::new(),
        };
        for t in source {
            if !vocab.contains(t) && t != SEP && !ext.oov_ids.contains_key(t) {
                ext.oov_ids.insert(t.clone(), vocab.len() + ext.oov.len());
                ext.oov.push(t.clone());
            }
        }
        ext
    }

    pub fn base_size(&self) -> usize {
        self.base_size
    }

    pub fn len(&self) -> usize {
        self.base_size + self.oov.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn oov_tokens(&self) -> &[String] {
        &self.oov
    }

    /// Extended id of `token`: base id, temporary id, or UNK.
    pub fn id(&self, vocab: &Vocab, token: &str) -> usize {
        vocab
            .id(token)
            .or_else(|| self.oov_ids.get(token).copied())
            .unwrap_or(UNK_ID)
    }

    pub fn token<'a>(&'a self, vocab: &'a Vocab, id: usize) -> Option<&'a str> {
        if id < self.base_size {
            vocab.token(id)
        } else {
            self.oov.get(id - self.base_size).map(String::as_str)
        }
    }
}

/// One source/target pair mapped to ids.
#[derive(Debug, Clone)]
pub struct PgExample {
    pub source: Vec<String>,
    /// Base-vocabulary ids (OOV as UNK) for the encoder.
    pub src_ids: Vec<usize>,
    /// Extended ids, used to scatter attention into the copy distribution.
    pub src_ext: Vec<usize>,
    pub ext: ExtendedVocab,
    /// Decoder inputs: BOS then the target prefix, base ids.
    pub dec_inputs: Vec<usize>,
    /// Gold outputs: target then EOS, extended ids when copying is on.
    pub targets: Vec<usize>,
}

pub struct EncoderOut {
    pub states: Vec<Var>,
    /// `[n, 2E]` stacked encoder states.
    pub keys: Var,
    /// `[n, A]` precomputed attention features of the keys.
    pub key_feat: Var,
    pub init: (Var, Var),
}

/// Decoder recurrent state and coverage after some number of steps.
#[derive(Debug, Clone, Copy)]
pub struct DecodeState {
    pub h: Var,
    pub c: Var,
    /// Sum of all previous attention distributions, one entry per source position.
    pub coverage: Var,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct StepOut {
    /// Final distribution over the extended vocabulary.
    pub dist: Var,
    pub attention: Var,
    pub p_gen: Var,
    /// `sum_i min(a_i, c_i)` against the coverage before this step.
    pub cov_penalty: Var,
    pub state: DecodeState,
}

#[derive(Debug, Clone, Copy)]
pub struct LossOut {
    /// Mean over steps of NLL plus the weighted coverage penalty.
    pub loss: Var,
    pub nll_sum: f64,
    pub cov_sum: f64,
    pub steps: usize,
    /// Steps whose argmax equals the gold token.
    pub correct: usize,
}

pub struct PgModel {
    pub config: PgConfig,
    pub vocab: Vocab,
    pub store: ParamStore,
    /// Forces `p_gen` to a constant; `None` uses the learned gate.
    pub p_gen_override: Option<f64>,
    pub emb: ParamId,
    pub encoder: BiLstmParams,
    pub reduce_h: (ParamId, ParamId),
    pub reduce_c: (ParamId, ParamId),
    pub decoder: LstmParams,
    pub attn_wh: ParamId,
    pub attn_ws: ParamId,
    pub attn_wc: ParamId,
    pub attn_b: ParamId,
    pub attn_v: ParamId,
    pub out_w: ParamId,
    pub out_b: ParamId,
    pub ptr_wh: ParamId,
    pub ptr_ws: ParamId,
    pub ptr_wx: ParamId,
    pub ptr_b: ParamId,
}

impl std::fmt::Debug for PgModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PgModel")
            .field("vocab_size", &self.vocab.len())
            .field("pointer", &self.config.pointer)
            .field("coverage", &self.config.coverage)
            .field("params", &self.store.len())
            .finish()
    }
}

impl PgModel {
    pub fn new(config: PgConfig, vocab: Vocab) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let s = config.init_scale;
        let (v, e, eh, dh, a) = (
            vocab.len(),
            config.emb_dim,
            config.enc_hidden,
            config.dec_hidden,
            config.attn_dim,
        );
        let emb = store.add_uniform("pg.emb", &[v, e], s, &mut rng);
        let encoder = BiLstmParams::new(&mut store, "pg.enc", e, eh, s, &mut rng);
        let reduce_h = (
            store.add_uniform("pg.reduce_h.w", &[dh, 2 * eh], s, &mut rng),
            store.add_zeros("pg.reduce_h.b", &[dh]),
        );
        let reduce_c = (
            store.add_uniform("pg.reduce_c.w", &[dh, 2 * eh], s, &mut rng),
            store.add_zeros("pg.reduce_c.b", &[dh]),
        );
        let decoder = LstmParams::new(&mut store, "pg.dec", e, dh, s, &mut rng);
        let attn_wh = store.add_uniform("pg.attn.wh", &[2 * eh, a], s, &mut rng);
        let attn_ws = store.add_uniform("pg.attn.ws", &[a, dh], s, &mut rng);
        let attn_wc = store.add_uniform("pg.attn.wc", &[a], s, &mut rng);
        let attn_b = store.add_zeros("pg.attn.b", &[a]);
        let attn_v = store.add_uniform("pg.attn.v", &[a], s, &mut rng);
        let out_w = store.add_uniform("pg.out.w", &[v, dh + 2 * eh], s, &mut rng);
        let out_b = store.add_zeros("pg.out.b", &[v]);
        let ptr_wh = store.add_uniform("pg.ptr.wh", &[2 * eh], s, &mut rng);
        let ptr_ws = store.add_uniform("pg.ptr.ws", &[dh], s, &mut rng);
        let ptr_wx = store.add_uniform("pg.ptr.wx", &[e], s, &mut rng);
        let ptr_b = store.add_zeros("pg.ptr.b", &[]);
        PgModel {
            config,
            vocab,
            store,
            p_gen_override: None,
            emb,
            encoder,
            reduce_h,
            reduce_c,
            decoder,
            attn_wh,
            attn_ws,
            attn_wc,
            attn_b,
            attn_v,
            out_w,
            out_b,
            ptr_wh,
            ptr_ws,
            ptr_wx,
            ptr_b,
        }
    }

    /// Builds the vocabulary from the pairs' sources and targets.
    pub fn for_pairs(config: PgConfig, pairs: &[crate::dataset_builder::TrainingPair]) -> Result<Self> {
        let texts = pairs.iter().flat_map(|p| [p.source.as_str(), p.target.as_str()]);
        let vocab = build_vocab_from_texts(texts, config.vocab_cap, config.tokenizer)?;
        Ok(Self::new(config, vocab))
    }

    fn copying(&self) -> bool {
        self.config.pointer
    }

    /// Maps a tokenized pair to ids. The source is truncated to
    /// `max_src_len`, the target to `max_tgt_len`.
    pub fn prepare(&self, source: &[String], target: &[String]) -> PgExample {
        let source: Vec<String> = source.iter().take(self.config.max_src_len).cloned().collect();
        let ext = ExtendedVocab::new(&self.vocab, &source);
        let src_ids = source.iter().map(|t| self.vocab.id_or_unk(t)).collect();
        let src_ext = source.iter().map(|t| ext.id(&self.vocab, t)).collect();
        let target = &target[..target.len().min(self.config.max_tgt_len)];
        let mut dec_inputs = vec![BOS_ID];
        dec_inputs.extend(target.iter().map(|t| self.vocab.id_or_unk(t)));
        let mut targets: Vec<usize> = target
            .iter()
            .map(|t| {
                if self.copying() {
                    ext.id(&self.vocab, t)
                } else {
                    self.vocab.id_or_unk(t)
                }
            })
            .collect();
        targets.push(EOS_ID);
        PgExample {
            source,
            src_ids,
            src_ext,
            ext,
            dec_inputs,
            targets,
        }
    }

    pub fn prepare_text(&self, source: &str, target: &str) -> PgExample {
        let mode = self.config.tokenizer;
        self.prepare(&source_tokens(source, mode), &tokenize(target, mode))
    }

    pub fn encode(&self, g: &mut Graph, src_ids: &[usize]) -> Result<EncoderOut> {
        if src_ids.is_empty() {
            return Err(Error::InvalidArgument("pointer-generator source is empty".into()));
        }
        let store = &self.store;
        let inputs: Vec<Var> = src_ids.iter().map(|id| g.embed(store, self.emb, *id)).collect();
        let out = bilstm(g, store, &self.encoder, &inputs)?;
        let keys = g.stack(&out.states);
        let wh = g.param(store, self.attn_wh);
        let key_feat = g.matmul(keys, wh);

        let hcat = g.concat(&[out.fwd_final.0, out.bwd_final.0]);
        let ccat = g.concat(&[out.fwd_final.1, out.bwd_final.1]);
        let project = |g: &mut Graph, (w, b): (ParamId, ParamId), x: Var| {
            let w = g.param(store, w);
            let b = g.param(store, b);
            let wx = g.matvec(w, x);
            let z = g.add(wx, b);
            g.tanh(z)
        };
        let h0 = project(g, self.reduce_h, hcat);
        let c0 = project(g, self.reduce_c, ccat);
        Ok(EncoderOut {
            states: out.states,
            keys,
            key_feat,
            init: (h0, c0),
        })
    }

    pub fn initial_state(&self, g: &mut Graph, enc: &EncoderOut) -> DecodeState {
        let coverage = g.zeros(&[enc.states.len()]);
        DecodeState {
            h: enc.init.0,
            c: enc.init.1,
            coverage,
            steps: 0,
        }
    }

    /// One decoder step fed with base-vocabulary id `x_id`.
    pub fn decode_step(
        &self,
        g: &mut Graph,
        enc: &EncoderOut,
        ex: &PgExample,
        state: &DecodeState,
        x_id: usize,
    ) -> Result<StepOut> {
        if x_id >= ex.ext.len() {
            return Err(Error::InvalidArgument(format!(
                "decoder input id {x_id} outside the extended vocabulary ({})",
                ex.ext.len()
            )));
        }
        let x_id = if x_id < self.vocab.len() { x_id } else { UNK_ID };
        let store = &self.store;
        let x = g.embed(store, self.emb, x_id);
        let (h, c) = lstm_cell(g, store, &self.decoder, x, state.h, state.c);

        let ws = g.param(store, self.attn_ws);
        let s_feat = g.matvec(ws, h);
        let mut pre = g.add_row(enc.key_feat, s_feat);
        if self.config.coverage {
            let wc = g.param(store, self.attn_wc);
            let cov_feat = g.outer(state.coverage, wc);
            pre = g.add(pre, cov_feat);
        }
        let ab = g.param(store, self.attn_b);
        let pre = g.add_row(pre, ab);
        let act = g.tanh(pre);
        let v = g.param(store, self.attn_v);
        let scores = g.matvec(act, v);
        let attention = g.softmax(scores);
        let context = g.vecmat(attention, enc.keys);

        let out_in = g.concat(&[h, context]);
        let ow = g.param(store, self.out_w);
        let ob = g.param(store, self.out_b);
        let logits = g.matvec(ow, out_in);
        let logits = g.add(logits, ob);
        let p_vocab = g.softmax(logits);

        let ext_len = ex.ext.len();
        let base: Vec<usize> = (0..self.vocab.len()).collect();
        let gen_dist = g.scatter_add(p_vocab, &base, ext_len);

        let p_gen = match (self.copying(), self.p_gen_override) {
            (false, _) => g.scalar(1.0),
            (true, Some(p)) => g.scalar(p),
            (true, None) => {
                let wh = g.param(store, self.ptr_wh);
                let wsv = g.param(store, self.ptr_ws);
                let wx = g.param(store, self.ptr_wx);
                let b = g.param(store, self.ptr_b);
                let t1 = g.dot(wh, context);
                let t2 = g.dot(wsv, h);
                let t3 = g.dot(wx, x);
                let z = g.add(t1, t2);
                let z = g.add(z, t3);
                let z = g.add(z, b);
                g.sigmoid(z)
            }
        };

        let dist = if self.copying() {
            let gen_part = g.scalar_mul(p_gen, gen_dist);
            let neg = g.scale(p_gen, -1.0);
            let p_copy = g.add_const(neg, 1.0);
            let copy_dist = g.scatter_add(attention, &ex.src_ext, ext_len);
            let copy_part = g.scalar_mul(p_copy, copy_dist);
            g.add(gen_part, copy_part)
        } else {
            gen_dist
        };

        let overlap = g.minimum(attention, state.coverage);
        let cov_penalty = g.sum(overlap);
        let coverage = g.add(state.coverage, attention);
        Ok(StepOut {
            dist,
            attention,
            p_gen,
            cov_penalty,
            state: DecodeState {
                h,
                c,
                coverage,
                steps: state.steps + 1,
            },
        })
    }

    /// Teacher-forced loss over one example.
    pub fn loss(&self, g: &mut Graph, ex: &PgExample, lambda_cov: f64) -> Result<LossOut> {
        let enc = self.encode(g, &ex.src_ids)?;
        let mut state = self.initial_state(g, &enc);
        let mut terms = Vec::with_capacity(ex.targets.len());
        let (mut nll_sum, mut cov_sum, mut correct) = (0.0, 0.0, 0);
        for (&x, &y) in ex.dec_inputs.iter().zip(&ex.targets) {
            let step = self.decode_step(g, &enc, ex, &state, x)?;
            let dist = g.value(step.dist).data();
            if argmax(dist) == y {
                correct += 1;
            }
            let p = g.pick(step.dist, y);
            let lnp = g.ln_clamped(p, PROB_FLOOR);
            let nll = g.scale(lnp, -1.0);
            nll_sum += g.value(nll).item();
            let term = if lambda_cov != 0.0 {
                cov_sum += g.value(step.cov_penalty).item();
                let cov = g.scale(step.cov_penalty, lambda_cov);
                g.add(nll, cov)
            } else {
                nll
            };
            terms.push(term);
            state = step.state;
        }
        let total = terms[1..].iter().fold(terms[0], |acc, t| g.add(acc, *t));
        let loss = g.scale(total, 1.0 / terms.len() as f64);
        Ok(LossOut {
            loss,
            nll_sum,
            cov_sum,
            steps: terms.len(),
            correct,
        })
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
                format!("expected a {CHECKPOINT_KIND} checkpoint, got {}", header.kind),
            ));
        }
        let config: PgConfig = serde_json::from_value(header.config)?;
        let tokens: Vec<String> = serde_json::from_value(header.meta["vocab"].clone())?;
        let mut model = PgModel::new(config, Vocab::from_tokens(tokens));
        if model.store.len() != store.len() {
            return Err(Error::format(
                path,
                "parameter manifest does not match the model layout",
            ));
        }
        for (dst, src) in model.store.iter_mut().zip(store.iter()) {
            if dst.name != src.name || dst.value.shape() != src.value.shape() {
                return Err(Error::format(path, format!("unexpected parameter {}", src.name)));
            }
            dst.value = src.value.clone();
            dst.trainable = src.trainable;
        }
        Ok(model)
    }
}

pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgEpoch {
    pub epoch: usize,
    /// Learning rate used during this epoch.
    pub lr: f64,
    pub loss: f64,
    pub train_ppl: f64,
    pub valid_ppl: f64,
    pub token_accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PgHistory {
    pub epochs: Vec<PgEpoch>,
}

/// Tokenized pair ready for training.
#[derive(Debug, Clone)]
pub struct TokenPair {
    pub source: Vec<String>,
    pub target: Vec<String>,
}

impl TokenPair {
    pub fn from_text(source: &str, target: &str, mode: TokenizerMode) -> Self {
        TokenPair {
            source: source_tokens(source, mode),
            target: tokenize(target, mode),
        }
    }
}

/// Perplexity and teacher-forced accuracy of `pairs` (no coverage term).
pub fn evaluate_pairs(model: &PgModel, pairs: &[PgExample]) -> Result<(f64, f64)> {
    let (mut nll, mut steps, mut correct) = (0.0, 0usize, 0usize);
    for ex in pairs {
        let mut g = Graph::new();
        let out = model.loss(&mut g, ex, 0.0)?;
        nll += out.nll_sum;
        steps += out.steps;
        correct += out.correct;
    }
    let steps = steps.max(1) as f64;
    Ok(((nll / steps).exp(), correct as f64 / steps))
}

/// Trains with Adam and per-epoch learning-rate halving whenever the
/// validation perplexity rises. Without validation pairs the training
/// perplexity drives the schedule. With `checkpoint_dir`, the model is saved
/// as `epoch-N.ckpt` after every epoch.
pub fn train(
    model: &mut PgModel,
    train_pairs: &[TokenPair],
    valid_pairs: &[TokenPair],
    checkpoint_dir: Option<&Path>,
) -> Result<PgHistory> {
    train_with(model, train_pairs, valid_pairs, checkpoint_dir, |_| true)
}

/// [`train`] with a callback run after each epoch; returning `false` stops
/// training early.
pub fn train_with(
    model: &mut PgModel,
    train_pairs: &[TokenPair],
    valid_pairs: &[TokenPair],
    checkpoint_dir: Option<&Path>,
    mut keep_going: impl FnMut(&PgEpoch) -> bool,
) -> Result<PgHistory> {
    let cfg = model.config.clone();
    let prepare = |pairs: &[TokenPair]| -> Vec<PgExample> {
        pairs
            .iter()
            .filter(|p| !p.source.is_empty() && !p.target.is_empty())
            .map(|p| model.prepare(&p.source, &p.target))
            .collect()
    };
    let train_ex = prepare(train_pairs);
    if train_ex.is_empty() {
        return Err(Error::EmptyTargets);
    }
    let valid_ex = prepare(valid_pairs);

    let mut opt = Adam::new(cfg.lr)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_ex.len()).collect();
    let mut history = PgHistory::default();
    let mut prev_ppl = f64::INFINITY;

    for epoch in 1..=cfg.epochs {
        let lambda = if cfg.coverage && epoch >= cfg.cov_from_epoch {
            cfg.lambda_cov
        } else {
            0.0
        };
        let lr = opt.lr();
        order.shuffle(&mut rng);
        let (mut total, mut nll, mut steps, mut correct) = (0.0, 0.0, 0usize, 0usize);
        for batch in order.chunks(cfg.batch_size.max(1)) {
            model.store.zero_grad();
            for &i in batch {
                let mut g = Graph::new();
                let out = model.loss(&mut g, &train_ex[i], lambda)?;
                total += g.value(out.loss).item();
                nll += out.nll_sum;
                steps += out.steps;
                correct += out.correct;
                let scaled = g.scale(out.loss, 1.0 / batch.len() as f64);
                g.backward(scaled, &mut model.store)?;
            }
            model.store.clip_grad_norm(cfg.clip_norm);
            opt.step(&mut model.store);
        }
        let train_ppl = (nll / steps.max(1) as f64).exp();
        let valid_ppl = if valid_ex.is_empty() {
            train_ppl
        } else {
            evaluate_pairs(model, &valid_ex)?.0
        };
        let rec = PgEpoch {
            epoch,
            lr,
            loss: total / train_ex.len() as f64,
            train_ppl,
            valid_ppl,
            token_accuracy: correct as f64 / steps.max(1) as f64,
        };
        info!(
            "pointer-generator epoch {epoch}: lr {lr:.2e} loss {:.4} train ppl {train_ppl:.3} valid ppl {valid_ppl:.3}",
            rec.loss
        );
        let go_on = keep_going(&rec);
        history.epochs.push(rec);
        if valid_ppl > prev_ppl {
            opt.decay_lr(cfg.lr_decay)?;
        }
        prev_ppl = valid_ppl;
        if let Some(dir) = checkpoint_dir {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            model.save(dir.join(format!("epoch-{epoch}.ckpt")))?;
        }
        if !go_on {
            break;
        }
    }
    Ok(history)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodeMode {
    Greedy,
    Beam,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerateOptions {
    pub mode: DecodeMode,
    pub beam_size: usize,
    pub max_len: usize,
    /// Replace emitted UNKs by the most-attended source token.
    pub unk_replace: bool,
    /// Beam only: also forbid repeating any trigram.
    pub no_repeat_trigram: bool,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions {
            mode: DecodeMode::Greedy,
            beam_size: 4,
            max_len: 50,
            unk_replace: true,
            no_repeat_trigram: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub tokens: Vec<String>,
    /// Extended ids chosen at each step, before UNK replacement.
    pub ids: Vec<usize>,
    pub log_prob: f64,
}

impl Generated {
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

#[derive(Clone)]
struct Hyp {
    ids: Vec<usize>,
    attn_argmax: Vec<Vec<usize>>,
    log_prob: f64,
    state: DecodeState,
    done: bool,
}

impl Hyp {
    fn score(&self) -> f64 {
        self.log_prob / self.ids.len().max(1) as f64
    }
}

fn blocked(ids: &[usize], cand: usize, no_repeat_trigram: bool) -> bool {
    if cand == PAD_ID || cand == BOS_ID {
        return true;
    }
    if ids.last() == Some(&cand) {
        return true;
    }
    if no_repeat_trigram && ids.len() >= 2 {
        let (a, b) = (ids[ids.len() - 2], ids[ids.len() - 1]);
        return ids.windows(3).any(|w| w == [a, b, cand]);
    }
    false
}

/// Source positions ordered by attention, highest first.
fn attention_order(att: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..att.len()).collect();
    idx.sort_by(|a, b| att[*b].total_cmp(&att[*a]).then(a.cmp(b)));
    idx
}

impl PgModel {
    /// Decodes a comment for `source` (already tokenized).
    pub fn generate(&self, source: &[String], opts: &GenerateOptions) -> Result<Generated> {
        if opts.beam_size < 1 {
            return Err(Error::InvalidArgument("beam size must be >= 1".into()));
        }
        let ex = self.prepare(source, &[]);
        let mut g = Graph::new();
        let enc = self.encode(&mut g, &ex.src_ids)?;
        let init = self.initial_state(&mut g, &enc);
        let width = match opts.mode {
            DecodeMode::Greedy => 1,
            DecodeMode::Beam => opts.beam_size,
        };
        let trigram = opts.no_repeat_trigram && opts.mode == DecodeMode::Beam;

        let mut beams = vec![Hyp {
            ids: Vec::new(),
            attn_argmax: Vec::new(),
            log_prob: 0.0,
            state: init,
            done: false,
        }];
        let mut finished: Vec<Hyp> = Vec::new();

        for _ in 0..opts.max_len {
            let mut cands: Vec<Hyp> = Vec::new();
            for hyp in &beams {
                let prev = hyp.ids.last().copied().unwrap_or(BOS_ID);
                let step = self.decode_step(&mut g, &enc, &ex, &hyp.state, prev)?;
                let dist = g.value(step.dist).data();
                let order = attention_order(g.value(step.attention).data());
                let mut ranked: Vec<usize> = (0..dist.len()).filter(|c| !blocked(&hyp.ids, *c, trigram)).collect();
                ranked.sort_by(|a, b| dist[*b].total_cmp(&dist[*a]).then(a.cmp(b)));
                for &cand in ranked.iter().take(width) {
                    let mut next = hyp.clone();
                    next.ids.push(cand);
                    next.attn_argmax.push(order.clone());
                    next.log_prob += dist[cand].max(PROB_FLOOR).ln();
                    next.state = step.state;
                    next.done = cand == EOS_ID;
                    cands.push(next);
                }
            }
            cands.sort_by(|a, b| b.log_prob.total_cmp(&a.log_prob));
            beams.clear();
            for c in cands {
                if c.done {
                    finished.push(c);
                } else if beams.len() < width {
                    beams.push(c);
                }
                if beams.len() == width {
                    break;
                }
            }
            if finished.len() >= width || beams.is_empty() {
                break;
            }
        }
        finished.extend(beams);
        let best = finished
            .into_iter()
            .max_by(|a, b| a.score().total_cmp(&b.score()))
            .expect("at least one hypothesis");

        let mut tokens: Vec<String> = Vec::new();
        let mut ids = best.ids.clone();
        if ids.last() == Some(&EOS_ID) {
            ids.pop();
        }
        for (t, id) in ids.iter().enumerate() {
            let mut tok = ex.ext.token(&self.vocab, *id).unwrap_or(crate::corpus::UNK).to_string();
            if *id == UNK_ID && opts.unk_replace {
                let prev = tokens.last();
                if let Some(pos) = best.attn_argmax[t]
                    .iter()
                    .find(|p| ex.source[**p] != SEP && Some(&ex.source[**p]) != prev)
                {
                    tok = ex.source[*pos].clone();
                }
            }
            if tokens.last() == Some(&tok) {
                continue;
            }
            tokens.push(tok);
        }
        Ok(Generated {
            tokens,
            ids: best.ids,
            log_prob: best.log_prob,
        })
    }

    pub fn generate_text(&self, source: &str, opts: &GenerateOptions) -> Result<Generated> {
        self.generate(&source_tokens(source, self.config.tokenizer), opts)
    }
}

/// Random tiny model used by tests and numerical checks. Pointer gate
/// weights and biases are randomized so every parameter carries signal.
pub fn random_model(seed: u64, vocab_size: usize, dims: (usize, usize, usize, usize)) -> PgModel {
    use rand::Rng;
    let (emb, enc, dec, attn) = dims;
    let tokens: Vec<String> = (0..vocab_size.saturating_sub(4)).map(|i| format!("w{i}")).collect();
    let config = PgConfig {
        tokenizer: TokenizerMode::Whitespace,
        emb_dim: emb,
        enc_hidden: enc,
        dec_hidden: dec,
        attn_dim: attn,
        init_scale: 0.5,
        seed,
        ..Default::default()
    };
    let mut model = PgModel::new(config, Vocab::from_tokens(tokens));
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
    for p in model.store.iter_mut() {
        if p.name.ends_with(".b") {
            for v in p.value.data_mut() {
                *v = rng.gen_range(-0.3..0.3);
            }
        }
    }
    model
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn tiny(seed: u64) -> PgModel {
        random_model(seed, 12, (4, 3, 5, 4))
    }

    fn first_step(model: &PgModel, src: &str) -> (Graph, PgExample, StepOut) {
        let ex = model.prepare(&toks(src), &toks("w1"));
        let mut g = Graph::new();
        let enc = model.encode(&mut g, &ex.src_ids).unwrap();
        let st = model.initial_state(&mut g, &enc);
        let out = model.decode_step(&mut g, &enc, &ex, &st, BOS_ID).unwrap();
        (g, ex, out)
    }

    #[test]
    fn extended_vocab_appends_source_oov() {
        let model = tiny(1);
        let ext = ExtendedVocab::new(&model.vocab, &toks("w1 zeta <sep> eta zeta"));
        assert_eq!(ext.oov_tokens(), &["zeta".to_string(), "eta".to_string()]);
        assert_eq!(ext.id(&model.vocab, "zeta"), model.vocab.len());
        assert_eq!(ext.token(&model.vocab, model.vocab.len() + 1), Some("eta"));
        assert_eq!(ext.id(&model.vocab, "nowhere"), UNK_ID);
    }

    #[test]
    fn distribution_sums_to_one() {
        let model = tiny(2);
        let (g, ex, out) = first_step(&model, "w1 w2 omega w3");
        let d = g.value(out.dist).data();
        assert_eq!(d.len(), ex.ext.len());
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(g.value(out.cov_penalty).item(), 0.0);
    }

    #[test]
    fn forced_gate_endpoints() {
        let mut model = tiny(3);
        model.p_gen_override = Some(1.0);
        let (g, ex, out) = first_step(&model, "w1 omega w1");
        let d = g.value(out.dist).data();
        assert_eq!(d[ex.ext.id(&model.vocab, "omega")], 0.0);

        model.p_gen_override = Some(0.0);
        let (g, ex, out) = first_step(&model, "w1 omega w1");
        let d = g.value(out.dist).data();
        let a = g.value(out.attention).data();
        assert!((d[ex.ext.id(&model.vocab, "w1")] - (a[0] + a[2])).abs() < 1e-15);
        assert!((d[ex.ext.id(&model.vocab, "omega")] - a[1]).abs() < 1e-15);
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_pointer_weights_give_half() {
        let mut model = tiny(4);
        for name in ["pg.ptr.wh", "pg.ptr.ws", "pg.ptr.wx", "pg.ptr.b"] {
            let id = model.store.find(name).unwrap();
            model.store.get_mut(id).value.data_mut().fill(0.0);
        }
        let (g, _, out) = first_step(&model, "w1 w2");
        assert_eq!(g.value(out.p_gen).item(), 0.5);
    }

    #[test]
    fn plain_mode_ignores_copy() {
        let mut model = tiny(5);
        model.config.pointer = false;
        let (g, _, out) = first_step(&model, "w1 w2");
        assert_eq!(g.value(out.p_gen).item(), 1.0);
    }

    #[test]
    fn empty_source_and_bad_input() {
        let model = tiny(6);
        let mut g = Graph::new();
        assert!(model.encode(&mut g, &[]).is_err());
        let ex = model.prepare(&toks("w1"), &toks("w2"));
        let enc = model.encode(&mut g, &ex.src_ids).unwrap();
        let st = model.initial_state(&mut g, &enc);
        assert!(model.decode_step(&mut g, &enc, &ex, &st, ex.ext.len()).is_err());
    }

    #[test]
    fn zero_lambda_is_pure_nll() {
        let model = tiny(7);
        let ex = model.prepare(&toks("w1 w2 w3"), &toks("w2 w3"));
        let mut g = Graph::new();
        let out = model.loss(&mut g, &ex, 0.0).unwrap();
        let mean = out.nll_sum / out.steps as f64;
        assert!((g.value(out.loss).item() - mean).abs() < 1e-12);
        assert_eq!(out.steps, 3);
    }

    #[test]
    fn generation_never_repeats_adjacent_tokens() {
        let model = tiny(8);
        for mode in [DecodeMode::Greedy, DecodeMode::Beam] {
            let opts = GenerateOptions {
                mode,
                beam_size: 3,
                max_len: 15,
                ..Default::default()
            };
            let out = model.generate(&toks("w1 w2 zeta w3"), &opts).unwrap();
            assert!(out.tokens.windows(2).all(|w| w[0] != w[1]), "{:?}", out.tokens);
        }
        let bad = GenerateOptions {
            beam_size: 0,
            ..Default::default()
        };
        assert!(model.generate(&toks("w1"), &bad).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let model = tiny(9);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pg.ckpt");
        model.save(&path).unwrap();
        let back = PgModel::load(&path).unwrap();
        let opts = GenerateOptions::default();
        let src = toks("w3 w4 w5");
        assert_eq!(
            model.generate(&src, &opts).unwrap(),
            back.generate(&src, &opts).unwrap()
        );
    }
}
