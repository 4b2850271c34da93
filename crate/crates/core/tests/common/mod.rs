#![allow(dead_code)]

use rockclass::neural::{Architecture, CnnConfig, MlpConfig, Network};
use rockclass::rng::stream_rng;
use rockclass::spectra::{GridSpec, LabeledDataset};
use rockclass::synthgen::{make_synthetic_corpus, SyntheticMineralSpec};

use rand::{Rng, RngCore};

pub fn tiny_cnn(dropout_rate: f64) -> Architecture {
    Architecture::Cnn(CnnConfig {
        conv_channels: [2, 3],
        kernel_size: 3,
        pool_size: 2,
        hidden_units: 6,
        num_classes: 3,
        dropout_rate,
        input_length: 32,
    })
}

pub fn tiny_mlp(dropout_rate: f64) -> Architecture {
    Architecture::Mlp(MlpConfig {
        hidden_layers: vec![7, 5],
        num_classes: 3,
        dropout_rate,
        input_length: 12,
    })
}

/// Worst per-tensor relative error `|a - n| / (|a| + |n|)` (Euclidean norms)
/// between analytic and central-difference gradients of one sample's loss.
/// With `mask_seed` set, every evaluation reuses the same dropout masks.
pub fn gradient_check(arch: Architecture, seed: u64, mask_seed: Option<u64>) -> Vec<(String, f64)> {
    let mut rng = stream_rng(seed, 1);
    let mut net = Network::init(arch.clone(), &mut rng).unwrap();
    let input: Vec<f64> = (0..arch.input_length()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let target = (seed as usize) % arch.num_classes();
    let loss = |net: &Network, grads: &mut [Vec<f64>]| -> f64 {
        match mask_seed {
            Some(s) => {
                let mut r = stream_rng(s, 0);
                net.loss_and_grad(&input, target, Some(&mut r as &mut dyn RngCore), grads).unwrap()
            }
            None => net.loss_and_grad(&input, target, None, grads).unwrap(),
        }
    };
    let mut analytic = net.zero_grads();
    loss(&net, &mut analytic);
    let h = 1e-5;
    let mut out = Vec::new();
    for t in 0..net.params.len() {
        let mut diff = 0.0;
        let mut norm_a = 0.0;
        let mut norm_n = 0.0;
        for j in 0..net.params[t].len() {
            let orig = net.params[t].values[j];
            let mut scratch = net.zero_grads();
            net.params[t].values[j] = orig + h;
            let up = loss(&net, &mut scratch);
            net.params[t].values[j] = orig - h;
            let down = loss(&net, &mut scratch);
            net.params[t].values[j] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic[t][j];
            diff += (a - numeric).powi(2);
            norm_a += a * a;
            norm_n += numeric * numeric;
        }
        let denom = norm_a.sqrt() + norm_n.sqrt();
        let rel = if denom < 1e-12 { 0.0 } else { diff.sqrt() / denom };
        out.push((net.params[t].name.clone(), rel));
    }
    out
}

/// Two classes with one Gaussian peak each, far apart, on a short grid.
pub fn two_peak_corpus(per_class: usize, noise: f64, seed: u64) -> LabeledDataset {
    let grid = GridSpec::new(100.0, 1100.0, 64).unwrap();
    let specs = vec![
        SyntheticMineralSpec::new("Left", &[(300.0, 30.0, 1.0)]),
        SyntheticMineralSpec::new("Right", &[(900.0, 30.0, 1.0)]),
    ];
    make_synthetic_corpus(&specs, per_class, &grid, noise, seed).unwrap()
}

pub fn small_cnn_for(ds: &LabeledDataset) -> CnnConfig {
    CnnConfig {
        conv_channels: [4, 8],
        kernel_size: 5,
        pool_size: 2,
        hidden_units: 16,
        ..CnnConfig::for_dataset(ds)
    }
}
