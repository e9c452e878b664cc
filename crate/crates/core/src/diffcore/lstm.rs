use rand::Rng;

use super::{Graph, ParamId, ParamStore, Var};
use crate::error::{Error, Result};

/// Weights of one LSTM direction. `w` is `[4H, X + H]` over the
/// concatenated `[x; h_prev]`, gates stacked as input, forget, candidate,
/// output.
#[derive(Debug, Clone, Copy)]
pub struct LstmParams {
    pub w: ParamId,
    pub b: ParamId,
    pub input_dim: usize,
    pub hidden: usize,
}

impl LstmParams {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden: usize,
        init_scale: f64,
        rng: &mut R,
    ) -> Self {
        let w = store.add_uniform(
            format!("{prefix}.w"),
            &[4 * hidden, input_dim + hidden],
            init_scale,
            rng,
        );
        let b = store.add_zeros(format!("{prefix}.b"), &[4 * hidden]);
        LstmParams {
            w,
            b,
            input_dim,
            hidden,
        }
    }
}

pub fn lstm_cell(g: &mut Graph, store: &ParamStore, p: &LstmParams, x: Var, h_prev: Var, c_prev: Var) -> (Var, Var) {
    let hd = p.hidden;
    let w = g.param(store, p.w);
    let b = g.param(store, p.b);
    let xh = g.concat(&[x, h_prev]);
    let wx = g.matvec(w, xh);
    let z = g.add(wx, b);
    let zi = g.slice(z, 0, hd);
    let zf = g.slice(z, hd, hd);
    let zg = g.slice(z, 2 * hd, hd);
    let zo = g.slice(z, 3 * hd, hd);
    let i = g.sigmoid(zi);
    let f = g.sigmoid(zf);
    let cand = g.tanh(zg);
    let o = g.sigmoid(zo);
    let keep = g.mul(f, c_prev);
    let write = g.mul(i, cand);
    let c = g.add(keep, write);
    let tc = g.tanh(c);
    let h = g.mul(o, tc);
    (h, c)
}

/// Runs an LSTM over `inputs` from zero state. Returns the hidden state at
/// every step and the final `(h, c)`.
pub fn lstm_run(g: &mut Graph, store: &ParamStore, p: &LstmParams, inputs: &[Var]) -> (Vec<Var>, (Var, Var)) {
    let mut h = g.zeros(&[p.hidden]);
    let mut c = g.zeros(&[p.hidden]);
    let mut out = Vec::with_capacity(inputs.len());
    for x in inputs {
        (h, c) = lstm_cell(g, store, p, *x, h, c);
        out.push(h);
    }
    (out, (h, c))
}

#[derive(Debug, Clone, Copy)]
pub struct BiLstmParams {
    pub fwd: LstmParams,
    pub bwd: LstmParams,
}

impl BiLstmParams {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        prefix: &str,
        input_dim: usize,
        hidden: usize,
        init_scale: f64,
        rng: &mut R,
    ) -> Self {
        BiLstmParams {
            fwd: LstmParams::new(store, &format!("{prefix}.fwd"), input_dim, hidden, init_scale, rng),
            bwd: LstmParams::new(store, &format!("{prefix}.bwd"), input_dim, hidden, init_scale, rng),
        }
    }

    pub fn output_dim(&self) -> usize {
        self.fwd.hidden + self.bwd.hidden
    }
}

#[derive(Debug, Clone)]
pub struct BiLstmOutput {
    /// `[h_fwd_t; h_bwd_t]` per position.
    pub states: Vec<Var>,
    /// Forward direction after the last position.
    pub fwd_final: (Var, Var),
    /// Backward direction after the first position.
    pub bwd_final: (Var, Var),
}

pub fn bilstm(g: &mut Graph, store: &ParamStore, p: &BiLstmParams, inputs: &[Var]) -> Result<BiLstmOutput> {
    if inputs.is_empty() {
        return Err(Error::InvalidArgument("BiLSTM input sequence is empty".into()));
    }
    let (fwd, fwd_final) = lstm_run(g, store, &p.fwd, inputs);
    let reversed: Vec<Var> = inputs.iter().rev().copied().collect();
    let (mut bwd, bwd_final) = lstm_run(g, store, &p.bwd, &reversed);
    bwd.reverse();
    let states = fwd.iter().zip(&bwd).map(|(f, b)| g.concat(&[*f, *b])).collect();
    Ok(BiLstmOutput {
        states,
        fwd_final,
        bwd_final,
    })
}
