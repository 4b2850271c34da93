//! Forward and backward kernels shared by the CNN and the MLP.
//!
//! Buffers are flat, row-major `f64` slices. Backward kernels accumulate into
//! their gradient outputs, so callers can sum over a mini-batch in place.

use rand::Rng;

/// Dot product with four independent accumulators so the loop vectorises.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Valid (unpadded) multi-channel 1D convolution.
///
/// `input` is `[in_ch][len]`, `weight` is `[out_ch][in_ch][k]`, output is
/// `[out_ch][len - k + 1]`.
pub fn conv1d_forward(
    input: &[f64],
    in_ch: usize,
    len: usize,
    weight: &[f64],
    bias: &[f64],
    k: usize,
    out: &mut [f64],
) {
    let out_ch = bias.len();
    let out_len = len - k + 1;
    debug_assert_eq!(out.len(), out_ch * out_len);
    for o in 0..out_ch {
        let row = &mut out[o * out_len..(o + 1) * out_len];
        row.fill(bias[o]);
        for c in 0..in_ch {
            let x = &input[c * len..(c + 1) * len];
            let w = &weight[(o * in_ch + c) * k..(o * in_ch + c + 1) * k];
            for (j, &wj) in w.iter().enumerate() {
                axpy(wj, &x[j..j + out_len], row);
            }
        }
    }
}

/// Gradients of [`conv1d_forward`]. `grad_input` is skipped when `None`.
#[allow(clippy::too_many_arguments)]
pub fn conv1d_backward(
    input: &[f64],
    in_ch: usize,
    len: usize,
    weight: &[f64],
    k: usize,
    grad_out: &[f64],
    out_ch: usize,
    grad_weight: &mut [f64],
    grad_bias: &mut [f64],
    mut grad_input: Option<&mut [f64]>,
) {
    let out_len = len - k + 1;
    for o in 0..out_ch {
        let g = &grad_out[o * out_len..(o + 1) * out_len];
        if g.iter().all(|v| *v == 0.0) {
            continue;
        }
        grad_bias[o] += g.iter().sum::<f64>();
        for c in 0..in_ch {
            let x = &input[c * len..(c + 1) * len];
            let base = (o * in_ch + c) * k;
            for j in 0..k {
                grad_weight[base + j] += dot(g, &x[j..j + out_len]);
            }
            if let Some(gi) = grad_input.as_deref_mut() {
                let gx = &mut gi[c * len..(c + 1) * len];
                for j in 0..k {
                    axpy(weight[base + j], g, &mut gx[j..j + out_len]);
                }
            }
        }
    }
}

pub fn relu_in_place(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Zeroes `grad` where the pre-activation was not positive.
pub fn relu_backward(pre: &[f64], grad: &mut [f64]) {
    for (g, &z) in grad.iter_mut().zip(pre) {
        if z <= 0.0 {
            *g = 0.0;
        }
    }
}

/// Non-overlapping max pooling per channel; trailing samples that do not
/// fill a window are dropped. Returns the pooled values and the flat input
/// index of each window's maximum (first maximum on ties).
pub fn maxpool_forward(input: &[f64], ch: usize, len: usize, pool: usize) -> (Vec<f64>, Vec<usize>) {
    let out_len = len / pool;
    let mut out = Vec::with_capacity(ch * out_len);
    let mut idx = Vec::with_capacity(ch * out_len);
    for c in 0..ch {
        for u in 0..out_len {
            let start = c * len + u * pool;
            let mut best = start;
            for i in start + 1..start + pool {
                if input[i] > input[best] {
                    best = i;
                }
            }
            out.push(input[best]);
            idx.push(best);
        }
    }
    (out, idx)
}

/// Routes pooled gradients back to the recorded argmax positions.
pub fn maxpool_backward(grad_out: &[f64], argmax: &[usize], grad_input: &mut [f64]) {
    for (g, &i) in grad_out.iter().zip(argmax) {
        grad_input[i] += g;
    }
}

/// Inverted-dropout mask: kept units are scaled by `1 / (1 - rate)`.
pub fn dropout_mask<R: Rng + ?Sized>(len: usize, rate: f64, rng: &mut R) -> Vec<f64> {
    let keep_scale = 1.0 / (1.0 - rate);
    (0..len)
        .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep_scale })
        .collect()
}

pub fn apply_mask(v: &mut [f64], mask: &[f64]) {
    for (x, m) in v.iter_mut().zip(mask) {
        *x *= m;
    }
}

/// `out = W x + b` for `W` of shape `[out][in]`.
pub fn dense_forward(weight: &[f64], bias: &[f64], input: &[f64], out: &mut [f64]) {
    let n_in = input.len();
    for (o, y) in out.iter_mut().enumerate() {
        *y = bias[o] + dot(&weight[o * n_in..(o + 1) * n_in], input);
    }
}

/// Gradients of [`dense_forward`]. `grad_input` is skipped when `None`.
pub fn dense_backward(
    weight: &[f64],
    input: &[f64],
    grad_out: &[f64],
    grad_weight: &mut [f64],
    grad_bias: &mut [f64],
    mut grad_input: Option<&mut [f64]>,
) {
    let n_in = input.len();
    for (o, &g) in grad_out.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        grad_bias[o] += g;
        axpy(g, input, &mut grad_weight[o * n_in..(o + 1) * n_in]);
        if let Some(gi) = grad_input.as_deref_mut() {
            axpy(g, &weight[o * n_in..(o + 1) * n_in], gi);
        }
    }
}

/// Numerically stable softmax (max subtraction).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Cross-entropy of `softmax(logits)` against `true_class`, with its
/// gradient `softmax(logits) - onehot(true_class)`.
pub fn cross_entropy(logits: &[f64], true_class: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // Sum the non-target terms separately so a dominant true logit keeps a
    // tiny positive loss instead of rounding to zero.
    let rest: f64 = logits
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != true_class)
        .map(|(_, z)| (z - max).exp())
        .sum();
    let own = (logits[true_class] - max).exp();
    let loss = if own == 1.0 {
        rest.ln_1p()
    } else {
        max - logits[true_class] + (own + rest).ln()
    };
    let mut grad = softmax(logits);
    grad[true_class] -= 1.0;
    (loss, grad)
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}
