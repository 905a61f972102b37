//! Inner products, norms and simplex/logit algebra.

mod dataset;
mod simplex;
mod space;

pub use dataset::FunctionDataset;
pub use simplex::{
    aitchison_inner_product, label_to_logits, logit_inner_product, logit_to_probability,
    probability_to_logit, simplex_add, simplex_scale, LogitVector, SimplexPoint,
};
pub use space::{mc_inner_product, norm, HilbertSpace};
