//! Analytic backpropagation against central finite differences of a loss
//! written out independently here.

use qot_core::neuralnet::{Mlp, Params};
use qot_core::seed;
use rand::Rng;

/// Mean cross-entropy of a ReLU/softmax network, computed from scratch.
fn reference_loss(p: &Params, inputs: usize, hidden: usize, outputs: usize, xs: &[Vec<f64>], ts: &[usize]) -> f64 {
    let mut total = 0.0;
    for (x, &t) in xs.iter().zip(ts) {
        let h: Vec<f64> = (0..hidden)
            .map(|j| {
                let z: f64 = p.b1[j] + (0..inputs).map(|i| p.w1[j * inputs + i] * x[i]).sum::<f64>();
                z.max(0.0)
            })
            .collect();
        let z: Vec<f64> = (0..outputs)
            .map(|k| p.b2[k] + (0..hidden).map(|j| p.w2[k * hidden + j] * h[j]).sum::<f64>())
            .collect();
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = z.iter().map(|v| (v - m).exp()).sum::<f64>().ln() + m;
        total += log_sum - z[t];
    }
    total / xs.len() as f64
}

fn flatten(p: &Params) -> Vec<f64> {
    p.tensors().iter().flat_map(|t| t.iter().copied()).collect()
}

fn with_flat(p: &Params, flat: &[f64]) -> Params {
    let mut q = p.clone();
    let mut offset = 0;
    for t in q.tensors_mut() {
        let n = t.len();
        t.copy_from_slice(&flat[offset..offset + n]);
        offset += n;
    }
    q
}

#[test]
fn backprop_matches_central_differences() {
    let step = 1e-5;
    let mut worst: f64 = 0.0;
    for case in 0..100u64 {
        let mut rng = seed::rng_for(99, "gradient-check", case);
        let inputs = rng.random_range(1..=7);
        let hidden = rng.random_range(1..=6);
        let outputs = rng.random_range(2..=7);
        let batch = rng.random_range(1..=8);
        let mut model = Mlp::glorot(inputs, hidden, outputs, &mut rng);
        for b in model.params.b1.iter_mut().chain(model.params.b2.iter_mut()) {
            *b = rng.random_range(-0.5..0.5);
        }
        let xs: Vec<Vec<f64>> = (0..batch)
            .map(|_| (0..inputs).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let ts: Vec<usize> = (0..batch).map(|_| rng.random_range(0..outputs)).collect();

        let (loss, grads) = model.backward(&xs, &ts).unwrap();
        let reference = reference_loss(&model.params, inputs, hidden, outputs, &xs, &ts);
        assert!((loss - reference).abs() < 1e-10, "case {case}: loss {loss} vs {reference}");

        let base = flatten(&model.params);
        let numeric: Vec<f64> = (0..base.len())
            .map(|i| {
                let mut plus = base.clone();
                let mut minus = base.clone();
                plus[i] += step;
                minus[i] -= step;
                let lp = reference_loss(&with_flat(&model.params, &plus), inputs, hidden, outputs, &xs, &ts);
                let lm = reference_loss(&with_flat(&model.params, &minus), inputs, hidden, outputs, &xs, &ts);
                (lp - lm) / (2.0 * step)
            })
            .collect();
        let analytic = flatten(&grads);
        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
        let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt() + numeric.iter().map(|n| n * n).sum::<f64>().sqrt();
        let relative = if scale == 0.0 { 0.0 } else { diff / scale };
        worst = worst.max(relative);
        assert!(relative < 1e-4, "case {case}: relative error {relative}");
    }
    println!("worst relative gradient error {worst:e}");
}
