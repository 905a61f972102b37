use super::mlp::{Activation, MlpParams};
use super::tape::{NodeId, Tape};
use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BasisMode {
    /// One shared network whose last layer has `k * out_dim` outputs.
    #[default]
    MultiHead,
    /// `k` independent networks with `out_dim` outputs each.
    Parallel,
}

impl BasisMode {
    pub fn name(self) -> &'static str {
        match self {
            BasisMode::MultiHead => "multihead",
            BasisMode::Parallel => "parallel",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "multihead" => Ok(BasisMode::MultiHead),
            "parallel" => Ok(BasisMode::Parallel),
            other => Err(Error::Config(format!("unknown basis mode '{other}'"))),
        }
    }
}

/// `k` basis functions `X -> Y` realised by one or more MLPs.
///
/// Both modes evaluate to `[batch, k, out_dim]`; on a tape they produce a
/// `[batch, k * out_dim]` node with basis `j` in columns `j*out_dim..`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisArchitecture {
    mode: BasisMode,
    k: usize,
    out_dim: usize,
    nets: Vec<MlpParams>,
}

impl BasisArchitecture {
    pub fn new(
        mode: BasisMode,
        k: usize,
        in_dim: usize,
        hidden: &[usize],
        out_dim: usize,
        activation: Activation,
        seed: u64,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("basis count k must be >= 1".into()));
        }
        let sizes = |out: usize| {
            let mut s = Vec::with_capacity(hidden.len() + 2);
            s.push(in_dim);
            s.extend_from_slice(hidden);
            s.push(out);
            s
        };
        let nets = match mode {
            BasisMode::MultiHead => vec![MlpParams::init(&sizes(k * out_dim), activation, seed)?],
            BasisMode::Parallel => (0..k as u64)
                .map(|j| MlpParams::init(&sizes(out_dim), activation, seed.wrapping_add(j)))
                .collect::<Result<_>>()?,
        };
        Ok(Self {
            mode,
            k,
            out_dim,
            nets,
        })
    }

    /// Wraps existing networks. MultiHead expects one network whose output
    /// width is a multiple of `k`; Parallel expects `k` networks with equal
    /// input and output widths.
    pub fn from_nets(mode: BasisMode, k: usize, nets: Vec<MlpParams>) -> Result<Self> {
        let first = nets.first().ok_or(Error::Empty("BasisArchitecture::from_nets"))?;
        let out_dim = match mode {
            BasisMode::MultiHead => {
                if nets.len() != 1 || k == 0 || first.out_dim() % k != 0 {
                    return Err(Error::InvalidArgument(format!(
                        "multihead basis needs one net with k*d outputs (k={k})"
                    )));
                }
                first.out_dim() / k
            }
            BasisMode::Parallel => {
                if nets.len() != k
                    || nets
                        .iter()
                        .any(|n| n.out_dim() != first.out_dim() || n.in_dim() != first.in_dim())
                {
                    return Err(Error::InvalidArgument(format!(
                        "parallel basis needs {k} nets with matching dims"
                    )));
                }
                first.out_dim()
            }
        };
        Ok(Self {
            mode,
            k,
            out_dim,
            nets,
        })
    }

    pub fn mode(&self) -> BasisMode {
        self.mode
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn in_dim(&self) -> usize {
        self.nets[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn nets(&self) -> &[MlpParams] {
        &self.nets
    }

    pub fn param_count(&self) -> usize {
        self.nets.iter().map(MlpParams::param_count).sum()
    }

    fn prefix(&self, j: usize) -> String {
        match self.mode {
            BasisMode::MultiHead => "basis.".to_string(),
            BasisMode::Parallel => format!("basis.{j}."),
        }
    }

    pub fn named_params(&self) -> Vec<(String, &Tensor)> {
        self.nets
            .iter()
            .enumerate()
            .flat_map(|(j, n)| n.named_params(&self.prefix(j)))
            .collect()
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let prefixes: Vec<String> = (0..self.nets.len()).map(|j| self.prefix(j)).collect();
        self.nets
            .iter_mut()
            .zip(prefixes)
            .flat_map(|(n, p)| n.named_params_mut(&p))
            .collect()
    }

    /// `[batch, k, out_dim]` basis values.
    pub fn evaluate(&self, x: &Tensor) -> Result<Tensor> {
        let flat = match self.mode {
            BasisMode::MultiHead => self.nets[0].forward(x)?,
            BasisMode::Parallel => {
                let outs = self
                    .nets
                    .iter()
                    .map(|n| n.forward(x))
                    .collect::<Result<Vec<_>>>()?;
                let batch = x.rows();
                let mut data = Vec::with_capacity(batch * self.k * self.out_dim);
                for i in 0..batch {
                    for o in &outs {
                        data.extend_from_slice(o.row(i));
                    }
                }
                Tensor::from_parts(vec![batch, self.k * self.out_dim], data)
            }
        };
        let batch = flat.rows();
        flat.reshape(vec![batch, self.k, self.out_dim])
    }

    /// Records evaluation on `tape`, returning a `[batch, k * out_dim]` node.
    pub fn record(&self, tape: &mut Tape, input: NodeId) -> Result<NodeId> {
        match self.mode {
            BasisMode::MultiHead => self.nets[0].record(tape, input, &self.prefix(0)),
            BasisMode::Parallel => {
                let parts = self
                    .nets
                    .iter()
                    .enumerate()
                    .map(|(j, n)| n.record(tape, input, &self.prefix(j)))
                    .collect::<Result<Vec<_>>>()?;
                tape.concat_cols(&parts)
            }
        }
    }
}
