use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tape::{NodeId, Tape};
use super::tensor::Tensor;
use crate::error::{shape_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::Config(format!("unknown activation '{other}'"))),
        }
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Tanh => v.tanh(),
        }
    }
}

/// Fully connected network. Hidden layers use `activation`; the output layer
/// is linear.
///
/// Layer `l` maps `sizes[l] -> sizes[l + 1]` with weights stored as a
/// `[fan_in, fan_out]` matrix, so a batch forward is `x · W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    sizes: Vec<usize>,
    weights: Vec<Tensor>,
    biases: Vec<Tensor>,
    activation: Activation,
}

impl MlpParams {
    /// Weights uniform in `±1/sqrt(fan_in)`, zero biases.
    pub fn init(sizes: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "layer sizes must have at least two positive entries, got {sizes:?}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(sizes.len() - 1);
        let mut biases = Vec::with_capacity(sizes.len() - 1);
        for pair in sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let w = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-bound..=bound))
                .collect();
            weights.push(Tensor::from_parts(vec![fan_in, fan_out], w));
            biases.push(Tensor::zeros(&[fan_out]));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            weights,
            biases,
            activation,
        })
    }

    /// Assembles a network from explicit layers.
    pub fn from_layers(layers: Vec<(Tensor, Tensor)>, activation: Activation) -> Result<Self> {
        let mut sizes = Vec::new();
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for (w, b) in layers {
            let (fan_in, fan_out) = w.dims2("MlpParams::from_layers")?;
            match sizes.last() {
                None => sizes.push(fan_in),
                Some(&prev) if prev != fan_in => {
                    return Err(shape_err("MlpParams::from_layers", prev, fan_in));
                }
                _ => {}
            }
            if b.shape() != [fan_out] {
                return Err(shape_err("MlpParams::from_layers bias", [fan_out], b.shape()));
            }
            sizes.push(fan_out);
            weights.push(w);
            biases.push(b);
        }
        if weights.is_empty() {
            return Err(Error::Empty("MlpParams::from_layers"));
        }
        Ok(Self {
            sizes,
            weights,
            biases,
            activation,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn in_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn out_dim(&self) -> usize {
        *self.sizes.last().expect("non-empty sizes")
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, layer: usize) -> &Tensor {
        &self.weights[layer]
    }

    pub fn bias(&self, layer: usize) -> &Tensor {
        &self.biases[layer]
    }

    pub fn param_count(&self) -> usize {
        self.sizes.windows(2).map(|p| (p[0] + 1) * p[1]).sum()
    }

    /// Parameters with stable names `{prefix}w{l}` and `{prefix}b{l}`.
    pub fn named_params(&self, prefix: &str) -> Vec<(String, &Tensor)> {
        let mut out = Vec::with_capacity(2 * self.weights.len());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            out.push((format!("{prefix}w{l}"), w));
            out.push((format!("{prefix}b{l}"), b));
        }
        out
    }

    pub fn named_params_mut(&mut self, prefix: &str) -> Vec<(String, &mut Tensor)> {
        let mut out = Vec::with_capacity(2 * self.weights.len());
        for (l, (w, b)) in self.weights.iter_mut().zip(self.biases.iter_mut()).enumerate() {
            out.push((format!("{prefix}w{l}"), w));
            out.push((format!("{prefix}b{l}"), b));
        }
        out
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        let (_, cols) = x.dims2("mlp_forward")?;
        if cols != self.in_dim() {
            return Err(shape_err("mlp_forward", [0, self.in_dim()], x.shape()));
        }
        Ok(())
    }

    /// Batch forward pass without recording.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        self.check_input(x)?;
        let last = self.weights.len() - 1;
        let mut h = x.clone();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = h.matmul(w)?;
            let q = b.len();
            for row in z.data_mut().chunks_mut(q) {
                for (v, bv) in row.iter_mut().zip(b.data()) {
                    *v += bv;
                    if l != last {
                        *v = self.activation.apply(*v);
                    }
                }
            }
            h = z;
        }
        Ok(h)
    }

    /// Records the forward pass on `tape`, registering parameters under
    /// `prefix`.
    pub fn record(&self, tape: &mut Tape, input: NodeId, prefix: &str) -> Result<NodeId> {
        self.check_input(tape.value(input))?;
        let last = self.weights.len() - 1;
        let mut h = input;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let wn = tape.param(format!("{prefix}w{l}"), w.clone());
            let bn = tape.param(format!("{prefix}b{l}"), b.clone());
            let z = tape.matmul(h, wn)?;
            let z = tape.add_bias(z, bn)?;
            h = if l == last {
                z
            } else {
                match self.activation {
                    Activation::Relu => tape.relu(z),
                    Activation::Tanh => tape.tanh(z),
                }
            };
        }
        Ok(h)
    }
}

/// Forward pass of `params` on `x`. With a tape, the input is recorded as a
/// constant and the parameters under the prefix `mlp.`.
pub fn mlp_forward(params: &MlpParams, x: &Tensor, tape: Option<&mut Tape>) -> Result<Tensor> {
    match tape {
        None => params.forward(x),
        Some(tape) => {
            params.check_input(x)?;
            let input = tape.constant(x.clone());
            let out = params.record(tape, input, "mlp.")?;
            Ok(tape.value(out).clone())
        }
    }
}
