use super::ParamStore;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64) -> Result<Self> {
        Self::with_betas(lr, 0.9, 0.999, 1e-8)
    }

    pub fn with_betas(lr: f64, beta1: f64, beta2: f64, eps: f64) -> Result<Self> {
        if lr.is_nan() || lr <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {lr}"
            )));
        }
        Ok(Adam {
            lr,
            beta1,
            beta2,
            eps,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        })
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Multiplies the learning rate by `factor`.
    pub fn decay_lr(&mut self, factor: f64) -> Result<()> {
        if factor.is_nan() || factor <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "decay factor must be positive, got {factor}"
            )));
        }
        self.lr *= factor;
        Ok(())
    }

    /// One bias-corrected Adam update of every trainable parameter.
    pub fn step(&mut self, store: &mut ParamStore) {
        if self.m.len() != store.len() {
            self.m = store.iter().map(|p| vec![0.0; p.value.len()]).collect();
            self.v = self.m.clone();
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (k, p) in store.iter_mut().enumerate() {
            if !p.trainable {
                continue;
            }
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            let grad = p.grad.data().to_vec();
            for (i, (w, g)) in p.value.data_mut().iter_mut().zip(grad).enumerate() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                *w -= self.lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcore::{Graph, Tensor};

    #[test]
    fn rejects_non_positive_lr() {
        assert!(Adam::new(0.0).is_err());
        assert!(Adam::new(-1e-3).is_err());
        let mut a = Adam::new(1e-3).unwrap();
        a.decay_lr(0.5).unwrap();
        assert_eq!(a.lr(), 5e-4);
        assert!(a.decay_lr(0.0).is_err());
    }

    #[test]
    fn one_step_descends() {
        let mut store = ParamStore::new();
        let p = store.add("p", Tensor::scalar(1.0), true);
        let mut opt = Adam::new(0.1).unwrap();
        let mut g = Graph::new();
        let v = g.param(&store, p);
        let sq = g.dot(v, v);
        let l = g.scale(sq, 0.5);
        g.backward(l, &mut store).unwrap();
        opt.step(&mut store);
        assert!(store.value(p).item() < 1.0);
    }

    #[test]
    fn converges_on_quadratic() {
        // f(x, y) = (x - 3)^2 + 10 (y + 1)^2, minimizer (3, -1)
        let mut store = ParamStore::new();
        let p = store.add("p", Tensor::vector(vec![0.0, 0.0]), true);
        let mut opt = Adam::new(0.2).unwrap();
        let target = Tensor::vector(vec![3.0, -1.0]);
        let weight = Tensor::vector(vec![1.0, 10.0]);
        for step in 0..200 {
            if step > 0 && step % 40 == 0 {
                opt.decay_lr(0.5).unwrap();
            }
            store.zero_grad();
            let mut g = Graph::new();
            let v = g.param(&store, p);
            let t = g.constant(target.clone());
            let w = g.constant(weight.clone());
            let d = g.sub(v, t);
            let wd = g.mul(d, w);
            let l = g.dot(wd, d);
            g.backward(l, &mut store).unwrap();
            opt.step(&mut store);
        }
        let x = store.value(p).data();
        assert!((x[0] - 3.0).abs() < 1e-3, "{x:?}");
        assert!((x[1] + 1.0).abs() < 1e-3, "{x:?}");
    }

    #[test]
    fn frozen_parameters_untouched() {
        let mut store = ParamStore::new();
        let p = store.add("p", Tensor::vector(vec![0.25, -0.5]), false);
        store.get_mut(p).grad = Tensor::vector(vec![1.0, 1.0]);
        let before = store.value(p).clone();
        let mut opt = Adam::new(0.5).unwrap();
        for _ in 0..10 {
            opt.step(&mut store);
        }
        assert_eq!(store.value(p), &before);
    }
}
