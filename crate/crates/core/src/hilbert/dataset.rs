use super::space::HilbertSpace;
use crate::error::{shape_err, Error, Result};
use crate::numerics::Tensor;

/// Samples `{(x_i, y_i)}` of one function.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDataset {
    inputs: Tensor,
    outputs: Tensor,
    space: HilbertSpace,
}

impl FunctionDataset {
    pub fn new(inputs: Tensor, outputs: Tensor, space: HilbertSpace) -> Result<Self> {
        let (m, _) = inputs.dims2("FunctionDataset inputs")?;
        let (mo, d) = outputs.dims2("FunctionDataset outputs")?;
        if m == 0 {
            return Err(Error::Empty("FunctionDataset"));
        }
        if m != mo {
            return Err(shape_err("FunctionDataset rows", m, mo));
        }
        if let HilbertSpace::LogitSpace { classes } = space {
            if d != classes {
                return Err(shape_err("FunctionDataset logit outputs", classes, d));
            }
        }
        Ok(Self {
            inputs,
            outputs,
            space,
        })
    }

    pub fn inputs(&self) -> &Tensor {
        &self.inputs
    }

    pub fn outputs(&self) -> &Tensor {
        &self.outputs
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn in_dim(&self) -> usize {
        self.inputs.row_len()
    }

    pub fn out_dim(&self) -> usize {
        self.outputs.row_len()
    }

    /// Same inputs, different outputs.
    pub fn with_outputs(&self, outputs: Tensor) -> Result<Self> {
        Self::new(self.inputs.clone(), outputs, self.space)
    }

    /// Rows `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        Self::new(
            self.inputs.slice_rows(start, end)?,
            self.outputs.slice_rows(start, end)?,
            self.space,
        )
    }
}
