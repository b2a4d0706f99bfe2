//! Dense ReLU perceptron with hand-written backpropagation.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// One affine layer, `out = input . w + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Dense {
    /// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` for weights and bias.
    pub fn init(fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        let w = Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-bound..=bound));
        let b = Array1::from_shape_fn(fan_out, |_| rng.random_range(-bound..=bound));
        Dense { w, b }
    }

    pub fn n_params(&self) -> usize {
        self.w.len() + self.b.len()
    }
}

/// `in -> hidden -> out` with ReLU, or a single affine map when `hidden == 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Activations kept by a training-mode forward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    /// Input to each layer after dropout.
    inputs: Vec<Array2<f64>>,
    /// Dropout scale per layer input (`0` where dropped), if dropout was applied.
    masks: Vec<Option<Array2<f64>>>,
    /// Pre-activation of each hidden layer.
    pre: Vec<Array2<f64>>,
}

impl Mlp {
    pub fn new(n_in: usize, hidden: usize, n_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let layers = if hidden == 0 {
            vec![Dense::init(n_in, n_out, rng)]
        } else {
            vec![Dense::init(n_in, hidden, rng), Dense::init(hidden, n_out, rng)]
        };
        Mlp { layers }
    }

    pub fn n_in(&self) -> usize {
        self.layers[0].w.nrows()
    }

    pub fn n_out(&self) -> usize {
        self.layers.last().expect("at least one layer").w.ncols()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(Dense::n_params).sum()
    }

    /// Inference pass, no dropout.
    pub fn forward(&self, z: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut x = z.to_owned();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            x = x.dot(&layer.w) + &layer.b;
            if i < last {
                x.mapv_inplace(|v| v.max(0.0));
            }
        }
        x
    }

    /// Training pass with inverted dropout on every layer input.
    pub fn forward_train(
        &self,
        z: ArrayView2<'_, f64>,
        dropout: f64,
        rng: &mut ChaCha8Rng,
    ) -> (Array2<f64>, MlpCache) {
        let mut cache = MlpCache {
            inputs: Vec::with_capacity(self.layers.len()),
            masks: Vec::with_capacity(self.layers.len()),
            pre: Vec::new(),
        };
        let mut x = z.to_owned();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mask = (dropout > 0.0).then(|| {
                let keep = 1.0 / (1.0 - dropout);
                Array2::from_shape_fn(x.dim(), |_| if rng.random::<f64>() < dropout { 0.0 } else { keep })
            });
            if let Some(m) = &mask {
                x *= m;
            }
            let out = x.dot(&layer.w) + &layer.b;
            cache.inputs.push(x);
            cache.masks.push(mask);
            x = if i < last {
                cache.pre.push(out.clone());
                out.mapv(|v| v.max(0.0))
            } else {
                out
            };
        }
        (x, cache)
    }

    /// Gradients of every parameter, flattened in [`Mlp::params`] order, for
    /// upstream gradient `d_out`.
    pub fn backward(&self, cache: &MlpCache, d_out: Array2<f64>) -> Vec<f64> {
        let mut grads: Vec<(Array2<f64>, Array1<f64>)> = Vec::with_capacity(self.layers.len());
        let mut delta = d_out;
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let dw = cache.inputs[i].t().dot(&delta);
            let db = delta.sum_axis(Axis(0));
            grads.push((dw, db));
            if i == 0 {
                break;
            }
            let mut d_in = delta.dot(&layer.w.t());
            if let Some(m) = &cache.masks[i] {
                d_in *= m;
            }
            ndarray::Zip::from(&mut d_in)
                .and(&cache.pre[i - 1])
                .for_each(|d, &p| {
                    if p <= 0.0 {
                        *d = 0.0;
                    }
                });
            delta = d_in;
        }
        grads.reverse();
        let mut flat = Vec::with_capacity(self.n_params());
        for (dw, db) in grads {
            flat.extend(dw.iter());
            flat.extend(db.iter());
        }
        flat
    }

    /// All parameters, layer by layer, weights (row-major) then bias.
    pub fn params(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.n_params());
        for layer in &self.layers {
            flat.extend(layer.w.iter());
            flat.extend(layer.b.iter());
        }
        flat
    }

    pub fn set_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.n_params(), "parameter vector length");
        let mut at = 0;
        for layer in &mut self.layers {
            for v in layer.w.iter_mut().chain(layer.b.iter_mut()) {
                *v = flat[at];
                at += 1;
            }
        }
    }
}
