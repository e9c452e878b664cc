#![allow(dead_code)]

use commentforge::diffcore::{Graph, ParamStore, Var};

pub const STEP: f64 = 1e-5;

/// `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Compares backward gradients of every trainable entry of `store` with
/// central differences. Returns the worst relative error and where it
/// occurred.
pub fn gradcheck<F>(store: &mut ParamStore, loss: F) -> (f64, String)
where
    F: Fn(&mut Graph, &ParamStore) -> Var,
{
    gradcheck_model(store, |s| s, |g, s| loss(g, s))
}

/// [`gradcheck`] for a model owning its parameter store.
pub fn gradcheck_model<M, S, F>(model: &mut M, store: S, loss: F) -> (f64, String)
where
    S: Fn(&mut M) -> &mut ParamStore,
    F: Fn(&mut Graph, &M) -> Var,
{
    store(model).zero_grad();
    let mut g = Graph::new();
    let l = loss(&mut g, model);
    g.backward(l, store(model)).expect("backward");

    let eval = |m: &M| {
        let mut g = Graph::new();
        let l = loss(&mut g, m);
        g.value(l).item()
    };

    let mut worst = (0.0, String::new());
    let ids: Vec<_> = store(model).ids().collect();
    for id in ids {
        if !store(model).get(id).trainable {
            continue;
        }
        for k in 0..store(model).get(id).value.len() {
            let analytic = store(model).get(id).grad.data()[k];
            let orig = store(model).get(id).value.data()[k];
            store(model).get_mut(id).value.data_mut()[k] = orig + STEP;
            let plus = eval(model);
            store(model).get_mut(id).value.data_mut()[k] = orig - STEP;
            let minus = eval(model);
            store(model).get_mut(id).value.data_mut()[k] = orig;
            let numeric = (plus - minus) / (2.0 * STEP);
            let err = rel_error(analytic, numeric);
            if err > worst.0 {
                let name = &store(model).get(id).name;
                worst = (err, format!("{name}[{k}] analytic {analytic:e} numeric {numeric:e}"));
            }
        }
    }
    worst
}

pub fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}
