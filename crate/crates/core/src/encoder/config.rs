use super::coefficients::{CoefficientMethod, Ridge};
use crate::error::{Error, Result};
use crate::hilbert::HilbertSpace;
use crate::numerics::{Activation, BasisMode};

/// Learning-rate schedule over the fixed step budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LrSchedule {
    #[default]
    Constant,
    /// Half-cosine decay from the base rate to zero at the last step.
    Cosine,
}

impl LrSchedule {
    pub fn name(self) -> &'static str {
        match self {
            LrSchedule::Constant => "constant",
            LrSchedule::Cosine => "cosine",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(LrSchedule::Constant),
            "cosine" => Ok(LrSchedule::Cosine),
            other => Err(Error::Config(format!("unknown lr_schedule '{other}'"))),
        }
    }

    /// Rate for the zero-based `step` out of `total`.
    pub fn rate(self, base: f64, step: usize, total: usize) -> f64 {
        match self {
            LrSchedule::Constant => base,
            LrSchedule::Cosine => {
                let frac = step as f64 / total.max(1) as f64;
                0.5 * base * (1.0 + (std::f64::consts::PI * frac).cos())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    /// Number of basis functions.
    pub k: usize,
    pub method: CoefficientMethod,
    /// Gram ridge; see [`Ridge`].
    pub ridge: f64,
    pub ridge_relative: bool,
    pub use_residuals: bool,
    pub space: HilbertSpace,
    pub mode: BasisMode,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub in_dim: usize,
    pub out_dim: usize,
    /// Fixed optimizer step budget.
    pub steps: usize,
    /// Tasks per training step (`n`).
    pub tasks_per_step: usize,
    pub learning_rate: f64,
    pub lr_schedule: LrSchedule,
    /// Fraction of each training dataset used to fit coefficients; the rest
    /// scores the loss.
    pub example_fraction: f64,
    pub seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            k: 100,
            method: CoefficientMethod::LeastSquares,
            ridge: 1e-3,
            ridge_relative: true,
            use_residuals: false,
            space: HilbertSpace::EuclideanL2MC,
            mode: BasisMode::MultiHead,
            hidden: vec![64, 64],
            activation: Activation::Relu,
            in_dim: 1,
            out_dim: 1,
            steps: 1000,
            tasks_per_step: 10,
            learning_rate: 1e-3,
            lr_schedule: LrSchedule::Constant,
            example_fraction: 0.5,
            seed: 0,
        }
    }
}

const KEYS: &[&str] = &[
    "k",
    "method",
    "ridge",
    "ridge_relative",
    "residuals",
    "space",
    "classes",
    "mode",
    "hidden",
    "activation",
    "in_dim",
    "out_dim",
    "steps",
    "tasks_per_step",
    "learning_rate",
    "lr_schedule",
    "example_fraction",
    "seed",
];

impl EncoderConfig {
    pub fn ridge_spec(&self) -> Ridge {
        Ridge {
            lambda: self.ridge,
            relative: self.ridge_relative,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.k == 0 {
            return fail("k must be >= 1".into());
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return fail(format!("ridge must be a finite value >= 0, got {}", self.ridge));
        }
        if self.in_dim == 0 || self.out_dim == 0 {
            return fail("in_dim and out_dim must be positive".into());
        }
        if self.hidden.contains(&0) {
            return fail("hidden sizes must be positive".into());
        }
        if self.tasks_per_step == 0 {
            return fail("tasks_per_step must be >= 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.example_fraction > 0.0 && self.example_fraction < 1.0) {
            return fail(format!(
                "example_fraction must lie in (0, 1), got {}",
                self.example_fraction
            ));
        }
        if let HilbertSpace::LogitSpace { classes } = self.space {
            if classes != self.out_dim {
                return fail(format!("logit space has {classes} classes but out_dim = {}", self.out_dim));
            }
        }
        Ok(())
    }

    /// Keys understood by [`EncoderConfig::set`].
    pub fn keys() -> &'static [&'static str] {
        KEYS
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("{key}: invalid {what} '{value}'"));
        let int = || value.parse::<usize>().map_err(|_| bad("integer"));
        let real = || value.parse::<f64>().map_err(|_| bad("number"));
        let flag = || value.parse::<bool>().map_err(|_| bad("boolean"));
        match key {
            "k" => self.k = int()?,
            "method" => self.method = CoefficientMethod::parse(value)?,
            "ridge" => self.ridge = real()?,
            "ridge_relative" => self.ridge_relative = flag()?,
            "residuals" => self.use_residuals = flag()?,
            "space" => {
                self.space = match value {
                    "euclidean" => HilbertSpace::EuclideanL2MC,
                    "logit" => HilbertSpace::LogitSpace {
                        classes: self.out_dim.max(2),
                    },
                    _ => return Err(bad("space")),
                }
            }
            "classes" => {
                let classes = int()?;
                if self.space.is_logit() {
                    self.space = HilbertSpace::logit(classes)?;
                }
            }
            "mode" => self.mode = BasisMode::parse(value)?,
            "hidden" => {
                self.hidden = if value.trim().is_empty() {
                    Vec::new()
                } else {
                    value
                        .split(',')
                        .map(|s| s.trim().parse::<usize>().map_err(|_| bad("size list")))
                        .collect::<Result<_>>()?
                }
            }
            "activation" => self.activation = Activation::parse(value)?,
            "in_dim" => self.in_dim = int()?,
            "out_dim" => self.out_dim = int()?,
            "steps" => self.steps = int()?,
            "tasks_per_step" => self.tasks_per_step = int()?,
            "learning_rate" => self.learning_rate = real()?,
            "lr_schedule" => self.lr_schedule = LrSchedule::parse(value)?,
            "example_fraction" => self.example_fraction = real()?,
            "seed" => self.seed = value.parse::<u64>().map_err(|_| bad("seed"))?,
            _ => return Err(Error::Config(format!("unknown encoder key '{key}'"))),
        }
        Ok(())
    }

    /// Textual form of every field, in a fixed order; `from_pairs` inverts it.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let classes = match self.space {
            HilbertSpace::LogitSpace { classes } => classes,
            HilbertSpace::EuclideanL2MC => 0,
        };
        let hidden: Vec<String> = self.hidden.iter().map(ToString::to_string).collect();
        vec![
            ("k", self.k.to_string()),
            ("method", self.method.name().to_string()),
            ("ridge", format!("{:?}", self.ridge)),
            ("ridge_relative", self.ridge_relative.to_string()),
            ("residuals", self.use_residuals.to_string()),
            ("in_dim", self.in_dim.to_string()),
            ("out_dim", self.out_dim.to_string()),
            ("space", self.space.name().to_string()),
            ("classes", classes.to_string()),
            ("mode", self.mode.name().to_string()),
            ("hidden", hidden.join(",")),
            ("activation", self.activation.name().to_string()),
            ("steps", self.steps.to_string()),
            ("tasks_per_step", self.tasks_per_step.to_string()),
            ("learning_rate", format!("{:?}", self.learning_rate)),
            ("lr_schedule", self.lr_schedule.name().to_string()),
            ("example_fraction", format!("{:?}", self.example_fraction)),
            ("seed", self.seed.to_string()),
        ]
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut cfg = EncoderConfig::default();
        for (k, v) in pairs {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
