//! Shared helpers for the integration and acceptance suites: independent
//! reference implementations used as oracles against the library paths.

#![allow(dead_code)]

use cuesel::mlp::{cross_entropy_mean, InputBatch, NetworkParameters, Scalar, Workspace};

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
}

/// Naive dense forward pass, written independently of the library kernels
/// (nested loops over `Vec<Vec<f64>>`, no sparsity, no buffer reuse).
/// Returns per-layer pre-activations and activations.
pub struct NaiveTrace {
    pub pre_activations: Vec<Vec<f64>>,
    pub activations: Vec<Vec<f64>>,
    pub probs: Vec<f64>,
}

pub fn naive_forward(params: &NetworkParameters<f64>, rows: &[f64], dim: usize) -> NaiveTrace {
    let batch = rows.len() / dim;
    assert_eq!(rows.len(), batch * dim);
    let mut current: Vec<Vec<f64>> = (0..batch)
        .map(|b| rows[b * dim..(b + 1) * dim].to_vec())
        .collect();
    let depth = params.layers.len();
    let mut pre_activations = Vec::new();
    let mut activations = Vec::new();

    for (l, layer) in params.layers.iter().enumerate() {
        let mut pre: Vec<Vec<f64>> = Vec::with_capacity(batch);
        for row in &current {
            let mut z = layer.bias.clone();
            for (k, &a) in row.iter().enumerate() {
                for j in 0..layer.fan_out {
                    z[j] += a * layer.weights[k * layer.fan_out + j];
                }
            }
            pre.push(z);
        }
        let act: Vec<Vec<f64>> = if l + 1 < depth {
            pre.iter()
                .map(|z| z.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect())
                .collect()
        } else {
            pre.iter().map(|z| naive_softmax(z)).collect()
        };
        pre_activations.push(pre.concat());
        activations.push(act.concat());
        current = act;
    }

    NaiveTrace {
        probs: activations.last().unwrap().clone(),
        pre_activations,
        activations,
    }
}

fn naive_softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Mean cross-entropy of the network on a dense batch, through the library
/// forward pass. This is the function the finite-difference oracle probes.
pub fn batch_loss(params: &NetworkParameters<f64>, rows: &[f64], dim: usize, labels: &[u8]) -> f64 {
    let config = params.config();
    let mut ws = Workspace::new(&config, labels.len());
    let probs = params.forward_into(InputBatch::Dense { rows, dim }, &mut ws);
    cross_entropy_mean(probs, labels, config.output_dim)
}

/// Central finite differences over every weight and bias; returns the
/// maximum relative error against the analytic gradients.
pub fn fd_max_relative_error(
    params: &NetworkParameters<f64>,
    rows: &[f64],
    dim: usize,
    labels: &[u8],
    step: f64,
) -> f64 {
    let config = params.config();
    let mut ws = Workspace::new(&config, labels.len());
    params.forward_into(InputBatch::Dense { rows, dim }, &mut ws);
    let mut grads = NetworkParameters::zeros(&config);
    params.backward_into(InputBatch::Dense { rows, dim }, &mut ws, labels, &mut grads);

    let mut probe = params.clone();
    let mut worst = 0.0f64;
    for l in 0..params.layers.len() {
        for i in 0..params.layers[l].weights.len() {
            let analytic = grads.layers[l].weights[i].to_f64();
            let original = probe.layers[l].weights[i];
            probe.layers[l].weights[i] = original + step;
            let plus = batch_loss(&probe, rows, dim, labels);
            probe.layers[l].weights[i] = original - step;
            let minus = batch_loss(&probe, rows, dim, labels);
            probe.layers[l].weights[i] = original;
            let numeric = (plus - minus) / (2.0 * step);
            worst = worst.max(relative_error(numeric, analytic));
        }
        for i in 0..params.layers[l].bias.len() {
            let analytic = grads.layers[l].bias[i].to_f64();
            let original = probe.layers[l].bias[i];
            probe.layers[l].bias[i] = original + step;
            let plus = batch_loss(&probe, rows, dim, labels);
            probe.layers[l].bias[i] = original - step;
            let minus = batch_loss(&probe, rows, dim, labels);
            probe.layers[l].bias[i] = original;
            let numeric = (plus - minus) / (2.0 * step);
            worst = worst.max(relative_error(numeric, analytic));
        }
    }
    worst
}

/// Exact ordered-triple probabilities of sequential renormalized sampling
/// without replacement from `weights`, by brute-force enumeration.
pub fn enumerate_ordered_triples(weights: &[f64]) -> std::collections::HashMap<[usize; 3], f64> {
    let total: f64 = weights.iter().sum();
    let n = weights.len();
    let mut out = std::collections::HashMap::new();
    for a in 0..n {
        let pa = weights[a] / total;
        let rem_a = total - weights[a];
        for b in 0..n {
            if b == a {
                continue;
            }
            let pb = weights[b] / rem_a;
            let rem_b = rem_a - weights[b];
            for c in 0..n {
                if c == a || c == b {
                    continue;
                }
                let pc = weights[c] / rem_b;
                out.insert([a, b, c], pa * pb * pc);
            }
        }
    }
    out
}

/// Perceptron convergence check: returns true when a linear separator for
/// the two-class set exists (guaranteed to terminate within `max_epochs`
/// passes only if one does; used as a separability oracle).
pub fn perceptron_finds_separator(xs: &[Vec<f64>], ys: &[bool], max_epochs: usize) -> bool {
    assert_eq!(xs.len(), ys.len());
    let dim = xs[0].len();
    let mut w = vec![0.0f64; dim];
    let mut bias = 0.0f64;
    for _ in 0..max_epochs {
        let mut errors = 0;
        for (x, &y) in xs.iter().zip(ys) {
            let score: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + bias;
            let predicted = score > 0.0;
            if predicted != y {
                errors += 1;
                let sign = if y { 1.0 } else { -1.0 };
                for (wi, &xi) in w.iter_mut().zip(x) {
                    *wi += sign * xi;
                }
                bias += sign;
            }
        }
        if errors == 0 {
            return true;
        }
    }
    false
}
