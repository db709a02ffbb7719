use rand::Rng;

use crate::error::{Error, Result};

/// Log-probabilities are clamped at this floor before taking the log.
pub const LOG_FLOOR: f64 = 1e-12;

/// Parameter tensors of a one-hidden-layer network, row-major.
/// `w1` is `hidden x inputs`, `w2` is `outputs x hidden`.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Params {
    pub fn zeros(inputs: usize, hidden: usize, outputs: usize) -> Self {
        Params {
            w1: vec![0.0; hidden * inputs],
            b1: vec![0.0; hidden],
            w2: vec![0.0; outputs * hidden],
            b2: vec![0.0; outputs],
        }
    }

    pub fn zeros_like(other: &Params) -> Self {
        Params {
            w1: vec![0.0; other.w1.len()],
            b1: vec![0.0; other.b1.len()],
            w2: vec![0.0; other.w2.len()],
            b2: vec![0.0; other.b2.len()],
        }
    }

    pub fn tensors(&self) -> [&[f64]; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    pub fn len(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

/// `inputs -> ReLU(hidden) -> softmax(outputs)` classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    inputs: usize,
    hidden: usize,
    outputs: usize,
    pub params: Params,
}

impl Mlp {
    pub fn zeros(inputs: usize, hidden: usize, outputs: usize) -> Self {
        Mlp {
            inputs,
            hidden,
            outputs,
            params: Params::zeros(inputs, hidden, outputs),
        }
    }

    pub fn from_params(inputs: usize, hidden: usize, outputs: usize, params: Params) -> Result<Self> {
        let expected = Params::zeros(inputs, hidden, outputs);
        for (have, want) in params.tensors().iter().zip(expected.tensors()) {
            if have.len() != want.len() {
                return Err(Error::Dimension {
                    expected: want.len(),
                    actual: have.len(),
                });
            }
        }
        Ok(Mlp {
            inputs,
            hidden,
            outputs,
            params,
        })
    }

    /// Glorot-uniform weights, `U(-r, r)` with `r = sqrt(6 / (fan_in + fan_out))`
    /// per layer; zero biases.
    pub fn glorot<R: Rng + ?Sized>(inputs: usize, hidden: usize, outputs: usize, rng: &mut R) -> Self {
        let mut mlp = Mlp::zeros(inputs, hidden, outputs);
        let r1 = (6.0 / (inputs + hidden) as f64).sqrt();
        let r2 = (6.0 / (hidden + outputs) as f64).sqrt();
        mlp.params.w1.iter_mut().for_each(|w| *w = rng.random_range(-r1..r1));
        mlp.params.w2.iter_mut().for_each(|w| *w = rng.random_range(-r2..r2));
        mlp
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.inputs {
            return Err(Error::Dimension {
                expected: self.inputs,
                actual: x.len(),
            });
        }
        Ok(())
    }

    // pre-activations of the hidden layer and logits, written into buffers
    fn forward_into(&self, x: &[f64], hidden_pre: &mut [f64], logits: &mut [f64]) {
        let p = &self.params;
        for (j, z) in hidden_pre.iter_mut().enumerate() {
            let row = &p.w1[j * self.inputs..(j + 1) * self.inputs];
            *z = p.b1[j] + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
        }
        for (c, z) in logits.iter_mut().enumerate() {
            let row = &p.w2[c * self.hidden..(c + 1) * self.hidden];
            *z = p.b2[c]
                + row
                    .iter()
                    .zip(hidden_pre.iter())
                    .map(|(w, h)| w * h.max(0.0))
                    .sum::<f64>();
        }
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut hidden = vec![0.0; self.hidden];
        let mut logits = vec![0.0; self.outputs];
        self.forward_into(x, &mut hidden, &mut logits);
        Ok(logits)
    }

    /// Class probabilities for one input.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut z = self.logits(x)?;
        softmax_in_place(&mut z);
        Ok(z)
    }

    /// Index of the most probable class (lowest index on ties).
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.logits(x)?))
    }

    /// Mean cross-entropy over a batch and its exact gradient.
    pub fn backward<X: AsRef<[f64]>>(&self, inputs: &[X], targets: &[usize]) -> Result<(f64, Params)> {
        if inputs.is_empty() || inputs.len() != targets.len() {
            return Err(Error::Dimension {
                expected: inputs.len(),
                actual: targets.len(),
            });
        }
        let mut grads = Params::zeros_like(&self.params);
        let mut hidden_pre = vec![0.0; self.hidden];
        let mut probs = vec![0.0; self.outputs];
        let mut hidden_grad = vec![0.0; self.hidden];
        let mut total_loss = 0.0;
        for (x, &target) in inputs.iter().zip(targets) {
            let x = x.as_ref();
            self.check_input(x)?;
            if target >= self.outputs {
                return Err(Error::Dimension {
                    expected: self.outputs,
                    actual: target + 1,
                });
            }
            self.forward_into(x, &mut hidden_pre, &mut probs);
            softmax_in_place(&mut probs);
            total_loss += cross_entropy(&probs, target);

            // dL/dlogits = p - onehot
            probs[target] -= 1.0;
            hidden_grad.iter_mut().for_each(|g| *g = 0.0);
            for (c, &d) in probs.iter().enumerate() {
                grads.b2[c] += d;
                let w_row = &self.params.w2[c * self.hidden..(c + 1) * self.hidden];
                let g_row = &mut grads.w2[c * self.hidden..(c + 1) * self.hidden];
                for j in 0..self.hidden {
                    g_row[j] += d * hidden_pre[j].max(0.0);
                    hidden_grad[j] += d * w_row[j];
                }
            }
            for j in 0..self.hidden {
                if hidden_pre[j] <= 0.0 {
                    continue;
                }
                let d = hidden_grad[j];
                grads.b1[j] += d;
                let g_row = &mut grads.w1[j * self.inputs..(j + 1) * self.inputs];
                for (g, xi) in g_row.iter_mut().zip(x) {
                    *g += d * xi;
                }
            }
        }
        let scale = 1.0 / inputs.len() as f64;
        for t in grads.tensors_mut() {
            t.iter_mut().for_each(|g| *g *= scale);
        }
        Ok((total_loss * scale, grads))
    }

    /// Mean cross-entropy of the batch.
    pub fn mean_loss<X: AsRef<[f64]>>(&self, inputs: &[X], targets: &[usize]) -> Result<f64> {
        let mut total = 0.0;
        for (x, &t) in inputs.iter().zip(targets) {
            total += cross_entropy(&self.forward(x.as_ref())?, t);
        }
        Ok(total / inputs.len() as f64)
    }
}

/// Max-shifted softmax.
pub fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
}

/// `-ln p[target]`, with `p` clamped at [`LOG_FLOOR`].
pub fn cross_entropy(probs: &[f64], target: usize) -> f64 {
    -probs[target].max(LOG_FLOOR).ln()
}

pub fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
        .0
}
