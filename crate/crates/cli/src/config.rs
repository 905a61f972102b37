//! Run configuration: flat `key = value` text grouped under `[section]`
//! headers. Every key has a default; unknown sections and keys are rejected.

use std::collections::BTreeSet;
use std::path::Path;

use fenc_core::encoder::EncoderConfig;
use fenc_core::geometry::Tolerances;
use fenc_core::hilbert::HilbertSpace;
use fenc_core::tasks::{ClassificationTaskSpec, PolynomialTaskSpec};

use crate::error::{CliError, CliResult};

pub const SECTIONS: &[&str] = &["encoder", "task", "run", "ablate", "classify"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Polynomial,
    Classification,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Polynomial => "polynomial",
            Family::Classification => "classification",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    BasisCounts,
    ExampleCounts,
}

impl Sweep {
    pub fn name(self) -> &'static str {
        match self {
            Sweep::BasisCounts => "basis_counts",
            Sweep::ExampleCounts => "example_counts",
        }
    }

    pub fn parse(s: &str) -> CliResult<Self> {
        match s {
            "basis_counts" => Ok(Sweep::BasisCounts),
            "example_counts" => Ok(Sweep::ExampleCounts),
            other => Err(CliError::Usage(format!(
                "ablate.sweep: expected basis_counts or example_counts, got '{other}'"
            ))),
        }
    }
}

/// Task family plus the evaluation variants derived from it.
///
/// For polynomials, type-1 tasks come from `polynomial` itself, type-2 tasks
/// widen the coefficient range to `[type2_low, type2_high]`, and type-3 tasks
/// raise the degree by `type3_extra_degree`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskConfig {
    pub family: Family,
    pub polynomial: PolynomialTaskSpec,
    pub type2_low: f64,
    pub type2_high: f64,
    pub type3_extra_degree: usize,
    /// Points per training dataset, split into example and query halves by
    /// the encoder's example fraction.
    pub train_points: usize,
    pub classification: ClassificationTaskSpec,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            family: Family::Polynomial,
            polynomial: PolynomialTaskSpec::type1(),
            type2_low: -20.0,
            type2_high: 20.0,
            type3_extra_degree: 1,
            train_points: 100,
            classification: ClassificationTaskSpec::default(),
        }
    }
}

impl TaskConfig {
    pub fn type2_spec(&self) -> PolynomialTaskSpec {
        PolynomialTaskSpec {
            coefficient_low: self.type2_low,
            coefficient_high: self.type2_high,
            ..self.polynomial.clone()
        }
    }

    pub fn type3_spec(&self) -> PolynomialTaskSpec {
        PolynomialTaskSpec {
            degree: self.polynomial.degree + self.type3_extra_degree,
            ..self.polynomial.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    /// Seeds for `eval` and `ablate`; `train` uses `encoder.seed`.
    pub seeds: Vec<u64>,
    pub eval_every: usize,
    pub eval_tasks: usize,
    pub smoothing: usize,
    /// Also score inner-product coefficients with the same basis.
    pub compare_ip: bool,
    pub threads: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            seeds: vec![0, 1, 2],
            eval_every: 100,
            eval_tasks: 20,
            smoothing: 40,
            compare_ip: false,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblateSettings {
    pub sweep: Sweep,
    pub values: Vec<usize>,
}

impl Default for AblateSettings {
    fn default() -> Self {
        Self {
            sweep: Sweep::BasisCounts,
            values: vec![1, 2, 3, 5, 10],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifySettings {
    pub tolerances: Tolerances,
    pub space: HilbertSpace,
}

impl Default for ClassifySettings {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            space: HilbertSpace::EuclideanL2MC,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub encoder: EncoderConfig,
    pub task: TaskConfig,
    pub run: RunSettings,
    pub ablate: AblateSettings,
    pub classify: ClassifySettings,
    explicit: BTreeSet<String>,
}

impl Default for RunConfig {
    /// Polynomial benchmark defaults.
    fn default() -> Self {
        Self {
            encoder: EncoderConfig {
                k: 11,
                steps: 3000,
                hidden: vec![64, 64],
                tasks_per_step: 10,
                ..EncoderConfig::default()
            },
            task: TaskConfig::default(),
            run: RunSettings::default(),
            ablate: AblateSettings::default(),
            classify: ClassifySettings::default(),
            explicit: BTreeSet::new(),
        }
    }
}

fn usage(section: &str, key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{section}.{key}: {msg}"))
}

fn parse_num<T: std::str::FromStr>(section: &str, key: &str, value: &str) -> CliResult<T> {
    value
        .trim()
        .parse()
        .map_err(|_| usage(section, key, format!("cannot parse '{value}'")))
}

fn parse_list<T: std::str::FromStr>(section: &str, key: &str, value: &str) -> CliResult<Vec<T>> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| parse_num(section, key, v)).collect()
}

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Defaults, then the optional file, then `section.key=value` overrides,
    /// then validation.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> CliResult<Self> {
        let mut cfg = RunConfig::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            cfg.apply_text(&text)?;
        }
        for o in overrides {
            let (lhs, value) = o
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("override '{o}' is not section.key=value")))?;
            let (section, key) = lhs
                .split_once('.')
                .ok_or_else(|| CliError::Usage(format!("override '{o}' is not section.key=value")))?;
            cfg.set(section.trim(), key.trim(), value.trim())?;
        }
        cfg.finalize()?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> CliResult<()> {
        let mut section: Option<String> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !SECTIONS.contains(&name) {
                    return Err(CliError::Usage(format!("line {}: unknown section [{name}]", lineno + 1)));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("line {}: expected key = value", lineno + 1)))?;
            let section = section
                .as_deref()
                .ok_or_else(|| CliError::Usage(format!("line {}: key outside of a [section]", lineno + 1)))?;
            self.set(section, key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, section: &str, key: &str, value: &str) -> CliResult<()> {
        match section {
            "encoder" => self
                .encoder
                .set(key, value)
                .map_err(|e| usage(section, key, e))?,
            "task" => self.set_task(key, value)?,
            "run" => self.set_run(key, value)?,
            "ablate" => match key {
                "sweep" => self.ablate.sweep = Sweep::parse(value)?,
                "values" => self.ablate.values = parse_list(section, key, value)?,
                _ => return Err(usage(section, key, "unknown key")),
            },
            "classify" => match key {
                "hull_tol" => self.classify.tolerances.hull = parse_num(section, key, value)?,
                "span_tol" => self.classify.tolerances.span = parse_num(section, key, value)?,
                "space" => {
                    self.classify.space = match value {
                        "euclidean" => HilbertSpace::EuclideanL2MC,
                        "logit" => HilbertSpace::logit(2).map_err(|e| usage(section, key, e))?,
                        _ => return Err(usage(section, key, format!("unknown space '{value}'"))),
                    }
                }
                "classes" => {
                    let classes: usize = parse_num(section, key, value)?;
                    if self.classify.space.is_logit() {
                        self.classify.space = HilbertSpace::logit(classes).map_err(|e| usage(section, key, e))?;
                    }
                }
                _ => return Err(usage(section, key, "unknown key")),
            },
            _ => return Err(CliError::Usage(format!("unknown section '{section}'"))),
        }
        self.explicit.insert(format!("{section}.{key}"));
        Ok(())
    }

    fn set_task(&mut self, key: &str, value: &str) -> CliResult<()> {
        const S: &str = "task";
        let p = &mut self.task.polynomial;
        let c = &mut self.task.classification;
        match key {
            "family" => {
                self.task.family = match value {
                    "polynomial" => Family::Polynomial,
                    "classification" => Family::Classification,
                    _ => return Err(usage(S, key, format!("unknown family '{value}'"))),
                }
            }
            "degree" => p.degree = parse_num(S, key, value)?,
            "coefficient_low" => p.coefficient_low = parse_num(S, key, value)?,
            "coefficient_high" => p.coefficient_high = parse_num(S, key, value)?,
            "input_low" => p.input_low = parse_num(S, key, value)?,
            "input_high" => p.input_high = parse_num(S, key, value)?,
            "m_example" => p.m_example = parse_num(S, key, value)?,
            "m_query" => p.m_query = parse_num(S, key, value)?,
            "noise_std" => p.noise_std = parse_num(S, key, value)?,
            "type2_low" => self.task.type2_low = parse_num(S, key, value)?,
            "type2_high" => self.task.type2_high = parse_num(S, key, value)?,
            "type3_extra_degree" => self.task.type3_extra_degree = parse_num(S, key, value)?,
            "train_points" => self.task.train_points = parse_num(S, key, value)?,
            "classes" => c.classes = parse_num(S, key, value)?,
            "heldout_classes" => c.heldout_classes = parse_num(S, key, value)?,
            "feature_dim" => c.feature_dim = parse_num(S, key, value)?,
            "center_radius" => c.center_radius = parse_num(S, key, value)?,
            "spread" => c.spread = parse_num(S, key, value)?,
            "examples_per_polarity" => c.examples_per_polarity = parse_num(S, key, value)?,
            "queries_per_polarity" => c.queries_per_polarity = parse_num(S, key, value)?,
            "master_seed" => c.master_seed = parse_num(S, key, value)?,
            _ => return Err(usage(S, key, "unknown key")),
        }
        Ok(())
    }

    fn set_run(&mut self, key: &str, value: &str) -> CliResult<()> {
        const S: &str = "run";
        match key {
            "seeds" => self.run.seeds = parse_list(S, key, value)?,
            "eval_every" => self.run.eval_every = parse_num(S, key, value)?,
            "eval_tasks" => self.run.eval_tasks = parse_num(S, key, value)?,
            "smoothing" => self.run.smoothing = parse_num(S, key, value)?,
            "compare_ip" => self.run.compare_ip = parse_num(S, key, value)?,
            "threads" => self.run.threads = parse_num(S, key, value)?,
            _ => return Err(usage(S, key, "unknown key")),
        }
        Ok(())
    }

    fn is_explicit(&self, key: &str) -> bool {
        self.explicit.contains(key)
    }

    /// Derives encoder dimensions from the task family and validates
    /// everything.
    pub fn finalize(&mut self) -> CliResult<()> {
        match self.task.family {
            Family::Polynomial => {
                self.task.polynomial.validate().map_err(|e| CliError::Usage(format!("task: {e}")))?;
                self.task.type2_spec().validate().map_err(|e| CliError::Usage(format!("task: {e}")))?;
                self.derive_dim("encoder.in_dim", 1, |e| &mut e.in_dim)?;
                self.derive_dim("encoder.out_dim", 1, |e| &mut e.out_dim)?;
                if self.encoder.space.is_logit() {
                    return Err(CliError::Usage("encoder.space: polynomial tasks need euclidean".into()));
                }
            }
            Family::Classification => {
                self.task
                    .classification
                    .validate()
                    .map_err(|e| CliError::Usage(format!("task: {e}")))?;
                let feature_dim = self.task.classification.feature_dim;
                self.derive_dim("encoder.in_dim", feature_dim, |e| &mut e.in_dim)?;
                self.derive_dim("encoder.out_dim", 2, |e| &mut e.out_dim)?;
                if self.is_explicit("encoder.space") && !self.encoder.space.is_logit() {
                    return Err(CliError::Usage("encoder.space: classification tasks need logit".into()));
                }
                self.encoder.space = HilbertSpace::logit(2)?;
            }
        }
        self.encoder.validate().map_err(|e| CliError::Usage(format!("encoder: {e}")))?;
        if self.task.train_points < 2 {
            return Err(CliError::Usage("task.train_points: must be >= 2".into()));
        }
        if self.run.eval_tasks == 0 {
            return Err(CliError::Usage("run.eval_tasks: must be >= 1".into()));
        }
        if self.run.threads == 0 {
            return Err(CliError::Usage("run.threads: must be >= 1".into()));
        }
        let t = self.classify.tolerances;
        if !(t.hull >= 0.0 && t.span >= 0.0) {
            return Err(CliError::Usage("classify: tolerances must be >= 0".into()));
        }
        Ok(())
    }

    fn derive_dim(&mut self, key: &str, value: usize, field: impl Fn(&mut EncoderConfig) -> &mut usize) -> CliResult<()> {
        let explicit = self.is_explicit(key);
        let slot = field(&mut self.encoder);
        if explicit && *slot != value {
            return Err(CliError::Usage(format!("{key}: task family needs {value}, got {slot}")));
        }
        *slot = value;
        Ok(())
    }

    /// Every setting as text, grouped by section, in a fixed order.
    pub fn sections(&self) -> Vec<(&'static str, Vec<(&'static str, String)>)> {
        let p = &self.task.polynomial;
        let c = &self.task.classification;
        let t = &self.task;
        let r = &self.run;
        vec![
            ("encoder", self.encoder.to_pairs()),
            (
                "task",
                vec![
                    ("family", t.family.name().to_string()),
                    ("degree", p.degree.to_string()),
                    ("coefficient_low", format!("{:?}", p.coefficient_low)),
                    ("coefficient_high", format!("{:?}", p.coefficient_high)),
                    ("input_low", format!("{:?}", p.input_low)),
                    ("input_high", format!("{:?}", p.input_high)),
                    ("m_example", p.m_example.to_string()),
                    ("m_query", p.m_query.to_string()),
                    ("noise_std", format!("{:?}", p.noise_std)),
                    ("type2_low", format!("{:?}", t.type2_low)),
                    ("type2_high", format!("{:?}", t.type2_high)),
                    ("type3_extra_degree", t.type3_extra_degree.to_string()),
                    ("train_points", t.train_points.to_string()),
                    ("classes", c.classes.to_string()),
                    ("heldout_classes", c.heldout_classes.to_string()),
                    ("feature_dim", c.feature_dim.to_string()),
                    ("center_radius", format!("{:?}", c.center_radius)),
                    ("spread", format!("{:?}", c.spread)),
                    ("examples_per_polarity", c.examples_per_polarity.to_string()),
                    ("queries_per_polarity", c.queries_per_polarity.to_string()),
                    ("master_seed", c.master_seed.to_string()),
                ],
            ),
            (
                "run",
                vec![
                    ("seeds", join(&r.seeds)),
                    ("eval_every", r.eval_every.to_string()),
                    ("eval_tasks", r.eval_tasks.to_string()),
                    ("smoothing", r.smoothing.to_string()),
                    ("compare_ip", r.compare_ip.to_string()),
                    ("threads", r.threads.to_string()),
                ],
            ),
            (
                "ablate",
                vec![
                    ("sweep", self.ablate.sweep.name().to_string()),
                    ("values", join(&self.ablate.values)),
                ],
            ),
            (
                "classify",
                vec![
                    ("hull_tol", format!("{:?}", self.classify.tolerances.hull)),
                    ("span_tol", format!("{:?}", self.classify.tolerances.span)),
                    ("space", self.classify.space.name().to_string()),
                ],
            ),
        ]
    }

    /// The configuration in the same text format it is read from.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (section, pairs) in self.sections() {
            out.push_str(&format!("[{section}]\n"));
            for (k, v) in pairs {
                out.push_str(&format!("{k} = {v}\n"));
            }
            out.push('\n');
        }
        out
    }
}
