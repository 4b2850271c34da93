use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::kernels::*;
use super::NeuralError;

/// A named parameter tensor stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub shape: Vec<usize>,
    #[serde(skip)]
    pub values: Vec<f64>,
}

impl Param {
    pub fn new(name: &str, shape: &[usize], values: Vec<f64>) -> Self {
        assert_eq!(shape.iter().product::<usize>(), values.len(), "shape/value mismatch for {name}");
        Self {
            name: name.to_string(),
            shape: shape.to_vec(),
            values,
        }
    }

    fn zeros(name: &str, shape: &[usize]) -> Self {
        Self {
            name: name.to_string(),
            shape: shape.to_vec(),
            values: vec![0.0; shape.iter().product()],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CnnConfig {
    pub conv_channels: [usize; 2],
    pub kernel_size: usize,
    pub pool_size: usize,
    pub hidden_units: usize,
    pub num_classes: usize,
    pub dropout_rate: f64,
    pub input_length: usize,
}

impl Default for CnnConfig {
    fn default() -> Self {
        Self {
            conv_channels: [16, 32],
            kernel_size: 5,
            pool_size: 2,
            hidden_units: 128,
            num_classes: 14,
            dropout_rate: 0.3,
            input_length: 1024,
        }
    }
}

impl CnnConfig {
    pub fn conv1_len(&self) -> usize {
        self.input_length + 1 - self.kernel_size
    }

    pub fn pool1_len(&self) -> usize {
        self.conv1_len() / self.pool_size
    }

    pub fn conv2_len(&self) -> usize {
        self.pool1_len() + 1 - self.kernel_size
    }

    pub fn pool2_len(&self) -> usize {
        self.conv2_len() / self.pool_size
    }

    pub fn flattened_len(&self) -> usize {
        self.conv_channels[1] * self.pool2_len()
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        let bad = |m: String| Err(NeuralError::InvalidConfig(m));
        if self.num_classes < 2 {
            return bad(format!("num_classes must be >= 2, got {}", self.num_classes));
        }
        if self.conv_channels.contains(&0) || self.hidden_units == 0 {
            return bad("channel and hidden counts must be positive".into());
        }
        if self.kernel_size == 0 || self.pool_size == 0 {
            return bad("kernel_size and pool_size must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout_rate must lie in [0, 1), got {}", self.dropout_rate));
        }
        // Each stage must leave at least one output sample.
        let ok = self.input_length >= self.kernel_size
            && self.conv1_len() >= self.pool_size
            && self.pool1_len() >= self.kernel_size
            && self.conv2_len() >= self.pool_size;
        if !ok {
            return bad(format!(
                "input_length {} too short for kernel {} and pool {}",
                self.input_length, self.kernel_size, self.pool_size
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    pub hidden_layers: Vec<usize>,
    pub num_classes: usize,
    pub dropout_rate: f64,
    pub input_length: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden_layers: vec![128, 64],
            num_classes: 14,
            dropout_rate: 0.0,
            input_length: 1024,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        if self.num_classes < 2 {
            return Err(NeuralError::InvalidConfig(format!(
                "num_classes must be >= 2, got {}",
                self.num_classes
            )));
        }
        if self.input_length == 0 || self.hidden_layers.contains(&0) {
            return Err(NeuralError::InvalidConfig("layer widths must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(NeuralError::InvalidConfig(format!(
                "dropout_rate must lie in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        Ok(())
    }

    fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_length];
        w.extend(&self.hidden_layers);
        w.push(self.num_classes);
        w
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Architecture {
    Cnn(CnnConfig),
    Mlp(MlpConfig),
}

impl Architecture {
    pub fn validate(&self) -> Result<(), NeuralError> {
        match self {
            Self::Cnn(c) => c.validate(),
            Self::Mlp(m) => m.validate(),
        }
    }

    pub fn input_length(&self) -> usize {
        match self {
            Self::Cnn(c) => c.input_length,
            Self::Mlp(m) => m.input_length,
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            Self::Cnn(c) => c.num_classes,
            Self::Mlp(m) => m.num_classes,
        }
    }

    pub fn dropout_rate(&self) -> f64 {
        match self {
            Self::Cnn(c) => c.dropout_rate,
            Self::Mlp(m) => m.dropout_rate,
        }
    }

    pub fn set_dropout_rate(&mut self, rate: f64) {
        match self {
            Self::Cnn(c) => c.dropout_rate = rate,
            Self::Mlp(m) => m.dropout_rate = rate,
        }
    }

    /// Parameter tensors in declared order, zero-filled.
    pub fn zero_params(&self) -> Vec<Param> {
        match self {
            Self::Cnn(c) => {
                let [c1, c2] = c.conv_channels;
                let k = c.kernel_size;
                vec![
                    Param::zeros("conv1.weight", &[c1, 1, k]),
                    Param::zeros("conv1.bias", &[c1]),
                    Param::zeros("conv2.weight", &[c2, c1, k]),
                    Param::zeros("conv2.bias", &[c2]),
                    Param::zeros("dense1.weight", &[c.hidden_units, c.flattened_len()]),
                    Param::zeros("dense1.bias", &[c.hidden_units]),
                    Param::zeros("dense2.weight", &[c.num_classes, c.hidden_units]),
                    Param::zeros("dense2.bias", &[c.num_classes]),
                ]
            }
            Self::Mlp(m) => m
                .widths()
                .windows(2)
                .enumerate()
                .flat_map(|(i, w)| {
                    [
                        Param::zeros(&format!("dense{}.weight", i + 1), &[w[1], w[0]]),
                        Param::zeros(&format!("dense{}.bias", i + 1), &[w[1]]),
                    ]
                })
                .collect(),
        }
    }
}

/// Network parameters plus the architecture they instantiate.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub arch: Architecture,
    pub params: Vec<Param>,
}

/// Intermediates recorded by a forward pass, consumed by [`Network::backward`].
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub logits: Vec<f64>,
    input: Vec<f64>,
    stages: Vec<Stage>,
}

#[derive(Debug, Clone)]
struct Stage {
    /// Pre-activation output of the stage's linear/conv op.
    pre: Vec<f64>,
    /// Pooling argmax (conv stages only).
    argmax: Vec<usize>,
    /// Dropout multipliers, if dropout was active.
    mask: Option<Vec<f64>>,
    /// Stage output after activation, pooling and dropout; input of the next stage.
    out: Vec<f64>,
}

impl Network {
    pub fn zeros(arch: Architecture) -> Result<Self, NeuralError> {
        arch.validate()?;
        let params = arch.zero_params();
        Ok(Self { arch, params })
    }

    /// Uniform initialisation in `±1/sqrt(fan_in)` for weights and biases.
    pub fn init<R: Rng + ?Sized>(arch: Architecture, rng: &mut R) -> Result<Self, NeuralError> {
        let mut net = Self::zeros(arch)?;
        for pair in net.params.chunks_mut(2) {
            let fan_in: usize = pair[0].shape[1..].iter().product();
            let bound = 1.0 / (fan_in as f64).sqrt();
            for p in pair.iter_mut() {
                for v in &mut p.values {
                    *v = rng.random_range(-bound..bound);
                }
            }
        }
        Ok(net)
    }

    pub fn input_length(&self) -> usize {
        self.arch.input_length()
    }

    pub fn num_classes(&self) -> usize {
        self.arch.num_classes()
    }

    pub fn dropout_rate(&self) -> f64 {
        self.arch.dropout_rate()
    }

    pub fn num_parameters(&self) -> usize {
        self.params.iter().map(Param::len).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.values.iter().all(|v| v.is_finite()))
    }

    pub fn zero_grads(&self) -> Vec<Vec<f64>> {
        self.params.iter().map(|p| vec![0.0; p.len()]).collect()
    }

    fn check_input(&self, input: &[f64]) -> Result<(), NeuralError> {
        if input.len() != self.input_length() {
            return Err(NeuralError::ShapeMismatch {
                expected: self.input_length(),
                got: input.len(),
            });
        }
        Ok(())
    }

    /// Logits for `input`. Dropout is applied only when `dropout_rng` is given.
    pub fn forward(&self, input: &[f64], dropout_rng: Option<&mut dyn RngCore>) -> Result<Vec<f64>, NeuralError> {
        Ok(self.forward_trace(input, dropout_rng)?.logits)
    }

    pub fn forward_trace(
        &self,
        input: &[f64],
        mut dropout_rng: Option<&mut dyn RngCore>,
    ) -> Result<ForwardTrace, NeuralError> {
        self.check_input(input)?;
        let rate = self.dropout_rate();
        let mut dropout = |v: &mut Vec<f64>| -> Option<Vec<f64>> {
            let rng = dropout_rng.as_deref_mut()?;
            if rate == 0.0 {
                return None;
            }
            let mask = dropout_mask(v.len(), rate, rng);
            apply_mask(v, &mask);
            Some(mask)
        };
        let p = &self.params;
        let mut stages = Vec::new();
        let logits = match &self.arch {
            Architecture::Cnn(c) => {
                let [c1, c2] = c.conv_channels;
                let k = c.kernel_size;

                let mut pre1 = vec![0.0; c1 * c.conv1_len()];
                conv1d_forward(input, 1, c.input_length, &p[0].values, &p[1].values, k, &mut pre1);
                let mut act1 = pre1.clone();
                relu_in_place(&mut act1);
                let (mut out1, arg1) = maxpool_forward(&act1, c1, c.conv1_len(), c.pool_size);
                let mask1 = dropout(&mut out1);

                let mut pre2 = vec![0.0; c2 * c.conv2_len()];
                conv1d_forward(&out1, c1, c.pool1_len(), &p[2].values, &p[3].values, k, &mut pre2);
                let mut act2 = pre2.clone();
                relu_in_place(&mut act2);
                let (mut out2, arg2) = maxpool_forward(&act2, c2, c.conv2_len(), c.pool_size);
                let mask2 = dropout(&mut out2);

                let mut pre3 = vec![0.0; c.hidden_units];
                dense_forward(&p[4].values, &p[5].values, &out2, &mut pre3);
                let mut out3 = pre3.clone();
                relu_in_place(&mut out3);
                let mask3 = dropout(&mut out3);

                let mut logits = vec![0.0; c.num_classes];
                dense_forward(&p[6].values, &p[7].values, &out3, &mut logits);

                stages.push(Stage { pre: pre1, argmax: arg1, mask: mask1, out: out1 });
                stages.push(Stage { pre: pre2, argmax: arg2, mask: mask2, out: out2 });
                stages.push(Stage { pre: pre3, argmax: Vec::new(), mask: mask3, out: out3 });
                logits
            }
            Architecture::Mlp(_) => {
                let layers = p.len() / 2;
                let mut current = input.to_vec();
                let mut logits = Vec::new();
                for l in 0..layers {
                    let w = &p[2 * l];
                    let mut pre = vec![0.0; w.shape[0]];
                    dense_forward(&w.values, &p[2 * l + 1].values, &current, &mut pre);
                    if l + 1 == layers {
                        logits = pre;
                        break;
                    }
                    let mut out = pre.clone();
                    relu_in_place(&mut out);
                    let mask = dropout(&mut out);
                    current = out.clone();
                    stages.push(Stage { pre, argmax: Vec::new(), mask, out });
                }
                logits
            }
        };
        Ok(ForwardTrace {
            logits,
            input: input.to_vec(),
            stages,
        })
    }

    /// Accumulates parameter gradients of a loss with gradient `grad_logits`
    /// into `grads` (one buffer per parameter tensor).
    pub fn backward(&self, trace: &ForwardTrace, grad_logits: &[f64], grads: &mut [Vec<f64>]) {
        let p = &self.params;
        match &self.arch {
            Architecture::Cnn(c) => {
                let [c1, c2] = c.conv_channels;
                let k = c.kernel_size;
                let (s1, s2, s3) = (&trace.stages[0], &trace.stages[1], &trace.stages[2]);
                let (g_head, g_tail) = grads.split_at_mut(6);

                // dense2
                let mut g3 = vec![0.0; c.hidden_units];
                {
                    let (gw, gb) = g_tail.split_at_mut(1);
                    dense_backward(&p[6].values, &s3.out, grad_logits, &mut gw[0], &mut gb[0], Some(&mut g3));
                }
                if let Some(m) = &s3.mask {
                    apply_mask(&mut g3, m);
                }
                relu_backward(&s3.pre, &mut g3);

                // dense1
                let mut g2 = vec![0.0; c.flattened_len()];
                {
                    let (gw, gb) = g_head[4..6].split_at_mut(1);
                    dense_backward(&p[4].values, &s2.out, &g3, &mut gw[0], &mut gb[0], Some(&mut g2));
                }
                if let Some(m) = &s2.mask {
                    apply_mask(&mut g2, m);
                }
                let mut g_act2 = vec![0.0; c2 * c.conv2_len()];
                maxpool_backward(&g2, &s2.argmax, &mut g_act2);
                relu_backward(&s2.pre, &mut g_act2);

                // conv2
                let mut g1 = vec![0.0; c1 * c.pool1_len()];
                {
                    let (gw, gb) = g_head[2..4].split_at_mut(1);
                    conv1d_backward(
                        &s1.out,
                        c1,
                        c.pool1_len(),
                        &p[2].values,
                        k,
                        &g_act2,
                        c2,
                        &mut gw[0],
                        &mut gb[0],
                        Some(&mut g1),
                    );
                }
                if let Some(m) = &s1.mask {
                    apply_mask(&mut g1, m);
                }
                let mut g_act1 = vec![0.0; c1 * c.conv1_len()];
                maxpool_backward(&g1, &s1.argmax, &mut g_act1);
                relu_backward(&s1.pre, &mut g_act1);

                // conv1
                let (gw, gb) = g_head[0..2].split_at_mut(1);
                conv1d_backward(&trace.input, 1, c.input_length, &p[0].values, k, &g_act1, c1, &mut gw[0], &mut gb[0], None);
            }
            Architecture::Mlp(_) => {
                let layers = p.len() / 2;
                let mut g = grad_logits.to_vec();
                for l in (0..layers).rev() {
                    let input = if l == 0 { &trace.input } else { &trace.stages[l - 1].out };
                    let mut g_in = if l > 0 { Some(vec![0.0; input.len()]) } else { None };
                    let (gw, gb) = grads[2 * l..2 * l + 2].split_at_mut(1);
                    dense_backward(&p[2 * l].values, input, &g, &mut gw[0], &mut gb[0], g_in.as_deref_mut());
                    if let Some(mut gi) = g_in {
                        let stage = &trace.stages[l - 1];
                        if let Some(m) = &stage.mask {
                            apply_mask(&mut gi, m);
                        }
                        relu_backward(&stage.pre, &mut gi);
                        g = gi;
                    }
                }
            }
        }
    }

    /// Cross-entropy loss of one sample; accumulates its gradients into `grads`.
    pub fn loss_and_grad(
        &self,
        input: &[f64],
        target: usize,
        dropout_rng: Option<&mut dyn RngCore>,
        grads: &mut [Vec<f64>],
    ) -> Result<f64, NeuralError> {
        let trace = self.forward_trace(input, dropout_rng)?;
        let (loss, grad_logits) = cross_entropy(&trace.logits, target);
        self.backward(&trace, &grad_logits, grads);
        Ok(loss)
    }
}
