use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::{json, Map, Value};

use fenc_core::encoder::{
    load_model, save_model, train_with, CoefficientMethod, FunctionEncoderModel, TaskSampler, TrainingRecord,
};
use fenc_core::geometry::{classify_transfer, TransferReport};
use fenc_core::hilbert::FunctionDataset;
use fenc_core::tasks::{read_task_csv, ClassificationSampler, PolynomialSampler};

use crate::config::{Family, RunConfig, Sweep};
use crate::error::{CliError, CliResult};
use crate::eval::{self, check_compatible, class_pool, evaluate, median, with_method, EvalResult, TYPES};
use crate::output::{ensure_dir, fmt_f64, line_plot, moving_average, write_atomic, CsvTable, Series};

pub const SCHEMA_VERSION: u32 = 1;
pub const MODEL_FILE: &str = "model.fenc";

/// Options shared by every command.
#[derive(Debug, Clone)]
pub struct Common {
    pub out: PathBuf,
    pub reproducible: bool,
}

impl Common {
    fn stamp(&self) -> Option<String> {
        if self.reproducible {
            return None;
        }
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Some(format!("generated at unix time {secs}"))
    }

    fn clock(&self, since: Instant) -> f64 {
        if self.reproducible {
            0.0
        } else {
            since.elapsed().as_secs_f64()
        }
    }
}

/// One evaluation point of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub step: usize,
    pub train_loss: f64,
    pub reg_loss: f64,
    pub metrics: EvalResult,
    pub wall_clock: f64,
}

pub const METRICS_HEADER: [&str; 10] = [
    "step",
    "train_loss",
    "reg_loss",
    "type1_abs_sq",
    "type1_rel",
    "type2_abs_sq",
    "type2_rel",
    "type3_abs_sq",
    "type3_rel",
    "wall_clock",
];

impl MetricsRow {
    /// CSV fields; types the family does not have are left empty.
    pub fn fields(&self) -> Vec<String> {
        let mut f = vec![self.step.to_string(), fmt_f64(self.train_loss), fmt_f64(self.reg_loss)];
        for m in &self.metrics {
            match m {
                Some(m) => {
                    f.push(fmt_f64(m.abs_sq));
                    f.push(fmt_f64(m.rel));
                }
                None => f.extend([String::new(), String::new()]),
            }
        }
        f.push(fmt_f64(self.wall_clock));
        f
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("step".into(), json!(self.step));
        obj.insert("train_loss".into(), json!(self.train_loss));
        obj.insert("reg_loss".into(), json!(self.reg_loss));
        for (name, m) in TYPES.iter().zip(&self.metrics) {
            obj.insert((*name).into(), metrics_json(m.as_ref()));
        }
        obj.insert("wall_clock".into(), json!(self.wall_clock));
        Value::Object(obj)
    }
}

fn metrics_json(m: Option<&eval::TypeMetrics>) -> Value {
    match m {
        None => Value::Null,
        Some(m) => {
            let mut o = json!({"abs_sq": m.abs_sq, "rel": m.rel});
            if let Some(a) = m.accuracy {
                o["accuracy"] = json!(a);
            }
            o
        }
    }
}

pub fn config_echo(cfg: &RunConfig) -> Value {
    let mut top = Map::new();
    for (section, pairs) in cfg.sections() {
        let mut m = Map::new();
        for (k, v) in pairs {
            m.insert(k.to_string(), Value::String(v));
        }
        top.insert(section.to_string(), Value::Object(m));
    }
    Value::Object(top)
}

fn report(command: &str, cfg: &RunConfig, results: Value) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config_echo": config_echo(cfg),
        "results": results,
    })
}

fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn train_family(
    cfg: &RunConfig,
    observer: impl FnMut(&TrainingRecord, &FunctionEncoderModel) -> fenc_core::Result<()>,
) -> CliResult<FunctionEncoderModel> {
    fn go(
        sampler: &impl TaskSampler,
        cfg: &RunConfig,
        observer: impl FnMut(&TrainingRecord, &FunctionEncoderModel) -> fenc_core::Result<()>,
    ) -> CliResult<FunctionEncoderModel> {
        Ok(train_with(sampler, cfg.encoder.clone(), observer)?)
    }
    match cfg.task.family {
        Family::Polynomial => go(
            &PolynomialSampler::new(cfg.task.polynomial.clone(), cfg.task.train_points),
            cfg,
            observer,
        ),
        Family::Classification => {
            let pool = class_pool(&cfg.task)?.expect("classification pool");
            go(&ClassificationSampler { pool }, cfg, observer)
        }
    }
}

pub struct TrainOutput {
    pub model: FunctionEncoderModel,
    pub rows: Vec<MetricsRow>,
}

/// Trains per `cfg.encoder`, evaluating every `run.eval_every` steps and at
/// the last step.
pub fn run_training(cfg: &RunConfig, common: &Common) -> CliResult<TrainOutput> {
    let pool = class_pool(&cfg.task)?;
    let start = Instant::now();
    let mut rows = Vec::new();
    let mut eval_error: Option<CliError> = None;
    let total = cfg.encoder.steps;
    let every = cfg.run.eval_every;
    let model = train_family(cfg, |rec, model| {
        let due = rec.step == total || (every > 0 && rec.step % every == 0);
        if due {
            match evaluate(model, &cfg.task, pool.as_ref(), cfg.encoder.seed, rec.step as u64, cfg.run.eval_tasks) {
                Ok(metrics) => rows.push(MetricsRow {
                    step: rec.step,
                    train_loss: rec.loss,
                    reg_loss: rec.reg_loss,
                    metrics,
                    wall_clock: common.clock(start),
                }),
                Err(e) => {
                    eval_error = Some(e);
                    return Err(fenc_core::Error::InvalidArgument("evaluation failed".into()));
                }
            }
        }
        Ok(())
    });
    if let Some(e) = eval_error {
        return Err(e);
    }
    Ok(TrainOutput { model: model?, rows })
}

pub fn metrics_csv(rows: &[MetricsRow]) -> CliResult<Vec<u8>> {
    let mut t = CsvTable::new(&METRICS_HEADER)?;
    for r in rows {
        t.row(&r.fields())?;
    }
    t.into_bytes()
}

pub fn cmd_train(cfg: &RunConfig, common: &Common) -> CliResult<Value> {
    ensure_dir(&common.out)?;
    let out = run_training(cfg, common)?;
    let model_path = common.out.join(MODEL_FILE);
    save_model(&out.model, &model_path)?;
    write_atomic(&common.out.join("metrics.csv"), &metrics_csv(&out.rows)?)?;

    let log = out.model.training_log();
    let losses: Vec<f64> = log.iter().map(|r| r.loss).collect();
    let smoothed = moving_average(&losses, cfg.run.smoothing);
    let mut t = CsvTable::new(&["step", "loss", "reg_loss", "average_loss", "loss_smoothed"])?;
    for (r, s) in log.iter().zip(&smoothed) {
        t.row(&[
            r.step.to_string(),
            fmt_f64(r.loss),
            fmt_f64(r.reg_loss),
            fmt_f64(r.average_loss),
            fmt_f64(*s),
        ])?;
    }
    write_atomic(&common.out.join("train_log.csv"), &t.into_bytes()?)?;

    let stamp = common.stamp();
    let loss_svg = line_plot(
        "training loss",
        "step",
        &format!("loss (moving average, window {})", cfg.run.smoothing),
        &[Series {
            label: "loss",
            points: log.iter().zip(&smoothed).map(|(r, s)| (r.step as f64, *s)).collect(),
        }],
        true,
        stamp.as_deref(),
    );
    write_atomic(&common.out.join("loss.svg"), loss_svg.as_bytes())?;
    let series: Vec<Series> = TYPES
        .iter()
        .enumerate()
        .filter(|(i, _)| out.rows.iter().any(|r| r.metrics[*i].is_some()))
        .map(|(i, name)| Series {
            label: name,
            points: out
                .rows
                .iter()
                .filter_map(|r| r.metrics[i].map(|m| (r.step as f64, m.rel)))
                .collect(),
        })
        .collect();
    let transfer_svg = line_plot("relative error by transfer type", "step", "relative error", &series, true, stamp.as_deref());
    write_atomic(&common.out.join("transfer.svg"), transfer_svg.as_bytes())?;

    let results = json!({
        "model_file": MODEL_FILE,
        "steps": log.len(),
        "param_count": out.model.param_count(),
        "final": out.rows.last().map(MetricsRow::to_json).unwrap_or(Value::Null),
    });
    let value = report("train", cfg, results);
    write_json(&common.out.join("train.json"), &value)?;
    Ok(value)
}

/// Min, median and max.
fn spread(values: &[f64]) -> Value {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    json!({"min": min, "median": median(values), "max": max})
}

pub fn cmd_eval(cfg: &RunConfig, model_path: &Path, common: &Common) -> CliResult<Value> {
    if cfg.run.seeds.is_empty() {
        return Err(CliError::Usage("run.seeds: at least one seed is required".into()));
    }
    let model = load_model(model_path).map_err(|e| match e {
        fenc_core::Error::Io(io) => CliError::Io(format!("{}: {io}", model_path.display())),
        other => CliError::Runtime(format!("{}: {other}", model_path.display())),
    })?;
    check_compatible(&model, &cfg.task)?;
    let pool = class_pool(&cfg.task)?;
    let mut methods = vec![(model.config().method, model.clone())];
    if cfg.run.compare_ip {
        let other = match model.config().method {
            CoefficientMethod::LeastSquares => CoefficientMethod::InnerProduct,
            CoefficientMethod::InnerProduct => CoefficientMethod::LeastSquares,
        };
        methods.push((other, with_method(&model, other)?));
    }

    ensure_dir(&common.out)?;
    let mut csv = CsvTable::new(&["method", "seed", "type", "abs_sq", "rel", "accuracy"])?;
    let mut by_method = Map::new();
    for (method, m) in &methods {
        let per_seed: Vec<EvalResult> = cfg
            .run
            .seeds
            .iter()
            .map(|&s| evaluate(m, &cfg.task, pool.as_ref(), s, 0, cfg.run.eval_tasks))
            .collect::<CliResult<_>>()?;
        let mut types = Map::new();
        for (i, name) in TYPES.iter().enumerate() {
            let metrics: Vec<(u64, eval::TypeMetrics)> = cfg
                .run
                .seeds
                .iter()
                .zip(&per_seed)
                .filter_map(|(&s, r)| r[i].map(|t| (s, t)))
                .collect();
            if metrics.is_empty() {
                types.insert((*name).into(), Value::Null);
                continue;
            }
            for (s, t) in &metrics {
                csv.row(&[
                    method.name().to_string(),
                    s.to_string(),
                    (*name).to_string(),
                    fmt_f64(t.abs_sq),
                    fmt_f64(t.rel),
                    t.accuracy.map(fmt_f64).unwrap_or_default(),
                ])?;
            }
            let rel: Vec<f64> = metrics.iter().map(|(_, t)| t.rel).collect();
            let abs: Vec<f64> = metrics.iter().map(|(_, t)| t.abs_sq).collect();
            let mut entry = json!({"rel": spread(&rel), "abs_sq": spread(&abs)});
            let acc: Vec<f64> = metrics.iter().filter_map(|(_, t)| t.accuracy).collect();
            if !acc.is_empty() {
                entry["accuracy"] = spread(&acc);
            }
            types.insert((*name).into(), entry);
        }
        by_method.insert(method.name().into(), Value::Object(types));
    }
    write_atomic(&common.out.join("eval.csv"), &csv.into_bytes()?)?;
    let results = json!({
        "model_file": model_path.display().to_string(),
        "model_config": model
            .config()
            .to_pairs()
            .into_iter()
            .map(|(k, v)| (k.to_string(), Value::String(v)))
            .collect::<Map<_, _>>(),
        "seeds": cfg.run.seeds,
        "tasks_per_type": cfg.run.eval_tasks,
        "methods": by_method,
    });
    let value = report("eval", cfg, results);
    write_json(&common.out.join("eval.json"), &value)?;
    Ok(value)
}

/// Result of one (value, seed) ablation run.
#[derive(Debug, Clone)]
pub struct AblationRun {
    pub value: usize,
    pub seed: u64,
    pub metrics: EvalResult,
    pub train_seconds: f64,
}

/// The configuration of one ablation run.
pub fn ablation_config(base: &RunConfig, sweep: Sweep, value: usize, seed: u64) -> CliResult<RunConfig> {
    let mut cfg = base.clone();
    cfg.encoder.seed = seed;
    match sweep {
        Sweep::BasisCounts => cfg.encoder.k = value,
        Sweep::ExampleCounts => {
            // `value` examples at evaluation, and the same number in the
            // example part of each training dataset
            cfg.task.polynomial.m_example = value;
            let total = (value as f64 / cfg.encoder.example_fraction).ceil() as usize;
            cfg.task.train_points = total.max(value + 1);
            cfg.task.classification.examples_per_polarity = value.div_ceil(2).max(1);
        }
    }
    cfg.finalize()?;
    Ok(cfg)
}

pub fn ablation_run(base: &RunConfig, sweep: Sweep, value: usize, seed: u64, common: &Common) -> CliResult<AblationRun> {
    let cfg = ablation_config(base, sweep, value, seed)?;
    let start = Instant::now();
    let model = train_family(&cfg, |_, _| Ok(()))?;
    let train_seconds = common.clock(start);
    let pool = class_pool(&cfg.task)?;
    let metrics = evaluate(&model, &cfg.task, pool.as_ref(), seed, 0, cfg.run.eval_tasks)?;
    Ok(AblationRun {
        value,
        seed,
        metrics,
        train_seconds,
    })
}

/// Runs every (value, seed) pair on `threads` workers; results keep the
/// (value, seed) order regardless of scheduling.
pub fn run_ablation(cfg: &RunConfig, common: &Common) -> CliResult<Vec<AblationRun>> {
    if cfg.ablate.values.is_empty() {
        return Err(CliError::Usage("ablate.values: at least one value is required".into()));
    }
    if cfg.run.seeds.is_empty() {
        return Err(CliError::Usage("run.seeds: at least one seed is required".into()));
    }
    if cfg.ablate.values.contains(&0) {
        return Err(CliError::Usage("ablate.values: values must be >= 1".into()));
    }
    let jobs: Vec<(usize, u64)> = cfg
        .ablate
        .values
        .iter()
        .flat_map(|&v| cfg.run.seeds.iter().map(move |&s| (v, s)))
        .collect();
    let results: Mutex<Vec<Option<CliResult<AblationRun>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = cfg.run.threads.min(jobs.len()).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= jobs.len() {
                    break;
                }
                let (v, s) = jobs[i];
                let r = ablation_run(cfg, cfg.ablate.sweep, v, s, common);
                results.lock().expect("ablation results lock")[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .expect("ablation results lock")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect()
}

pub const ABLATION_HEADER: [&str; 13] = [
    "value",
    "type1_rel_min",
    "type1_rel_median",
    "type1_rel_max",
    "type2_rel_min",
    "type2_rel_median",
    "type2_rel_max",
    "type3_rel_min",
    "type3_rel_median",
    "type3_rel_max",
    "train_seconds_median",
    "relative_cost",
    "seeds",
];

/// Per-value summary: min/median/max relative error over seeds per type,
/// plus median training time and its increase over the smallest value.
pub struct AblationSummary {
    pub value: usize,
    pub rel: [Option<[f64; 3]>; 3],
    pub train_seconds: f64,
    pub relative_cost: f64,
    pub seeds: usize,
}

pub fn summarize(runs: &[AblationRun]) -> Vec<AblationSummary> {
    let mut values: Vec<usize> = runs.iter().map(|r| r.value).collect();
    values.sort_unstable();
    values.dedup();
    let time_of = |v: usize| median(&runs.iter().filter(|r| r.value == v).map(|r| r.train_seconds).collect::<Vec<_>>());
    let base_time = values.first().map(|&v| time_of(v)).unwrap_or(0.0);
    values
        .iter()
        .map(|&v| {
            let group: Vec<&AblationRun> = runs.iter().filter(|r| r.value == v).collect();
            let mut rel = [None; 3];
            for (i, slot) in rel.iter_mut().enumerate() {
                let xs: Vec<f64> = group.iter().filter_map(|r| r.metrics[i].map(|m| m.rel)).collect();
                if !xs.is_empty() {
                    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
                    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    *slot = Some([min, median(&xs), max]);
                }
            }
            let t = time_of(v);
            AblationSummary {
                value: v,
                rel,
                train_seconds: t,
                relative_cost: if base_time > 0.0 { t / base_time - 1.0 } else { 0.0 },
                seeds: group.len(),
            }
        })
        .collect()
}

pub fn cmd_ablate(cfg: &RunConfig, common: &Common) -> CliResult<Value> {
    ensure_dir(&common.out)?;
    let runs = run_ablation(cfg, common)?;

    let mut raw = CsvTable::new(&[
        "value",
        "seed",
        "type1_abs_sq",
        "type1_rel",
        "type2_abs_sq",
        "type2_rel",
        "type3_abs_sq",
        "type3_rel",
        "train_seconds",
    ])?;
    for r in &runs {
        let mut f = vec![r.value.to_string(), r.seed.to_string()];
        for m in &r.metrics {
            match m {
                Some(m) => f.extend([fmt_f64(m.abs_sq), fmt_f64(m.rel)]),
                None => f.extend([String::new(), String::new()]),
            }
        }
        f.push(fmt_f64(r.train_seconds));
        raw.row(&f)?;
    }
    write_atomic(&common.out.join("ablate_runs.csv"), &raw.into_bytes()?)?;

    let summary = summarize(&runs);
    let mut t = CsvTable::new(&ABLATION_HEADER)?;
    let mut json_rows = Vec::new();
    for s in &summary {
        let mut f = vec![s.value.to_string()];
        let mut entry = json!({"value": s.value, "seeds": s.seeds, "train_seconds_median": s.train_seconds, "relative_cost": s.relative_cost});
        for (name, r) in TYPES.iter().zip(&s.rel) {
            match r {
                Some([lo, mid, hi]) => {
                    f.extend([fmt_f64(*lo), fmt_f64(*mid), fmt_f64(*hi)]);
                    entry[*name] = json!({"min": lo, "median": mid, "max": hi});
                }
                None => {
                    f.extend([String::new(), String::new(), String::new()]);
                    entry[*name] = Value::Null;
                }
            }
        }
        f.extend([fmt_f64(s.train_seconds), fmt_f64(s.relative_cost), s.seeds.to_string()]);
        t.row(&f)?;
        json_rows.push(entry);
    }
    write_atomic(&common.out.join("ablate.csv"), &t.into_bytes()?)?;

    let x_label = match cfg.ablate.sweep {
        Sweep::BasisCounts => "basis functions (k)",
        Sweep::ExampleCounts => "example points (m)",
    };
    let mut series = Vec::new();
    for (i, name) in TYPES.iter().enumerate() {
        let pts: Vec<(f64, f64)> = summary
            .iter()
            .filter_map(|s| s.rel[i].map(|r| (s.value as f64, r[1])))
            .collect();
        if !pts.is_empty() {
            series.push(Series { label: name, points: pts });
        }
    }
    let svg = line_plot("median relative error over seeds", x_label, "relative error", &series, true, common.stamp().as_deref());
    write_atomic(&common.out.join("ablate.svg"), svg.as_bytes())?;

    let results = json!({
        "sweep": cfg.ablate.sweep.name(),
        "rows": json_rows,
    });
    let value = report("ablate", cfg, results);
    write_json(&common.out.join("ablate.json"), &value)?;
    Ok(value)
}

pub fn transfer_json(report: &TransferReport) -> Value {
    json!({
        "transfer_type": report.transfer_type.name(),
        "tolerances": {"hull": report.tolerances.hull, "span": report.tolerances.span},
        "hull": {
            "weights": report.hull.weights,
            "residual_norm": report.hull.residual_norm,
            "relative_residual": report.hull.relative_residual,
            "iterations": report.hull.iterations,
        },
        "span": {
            "weights": report.span.weights,
            "residual_norm": report.span.residual_norm,
            "relative_residual": report.span.relative_residual,
        },
    })
}

fn read_dataset(path: &Path, cfg: &RunConfig) -> CliResult<FunctionDataset> {
    if !path.exists() {
        return Err(CliError::Io(format!("{}: no such file", path.display())));
    }
    read_task_csv(path, cfg.classify.space).map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn cmd_classify(cfg: &RunConfig, target: &Path, sources: &[PathBuf], common: &Common) -> CliResult<Value> {
    if sources.is_empty() {
        return Err(CliError::Usage("classify needs at least one --source".into()));
    }
    let t = read_dataset(target, cfg)?;
    let mut s = Vec::with_capacity(sources.len());
    for path in sources {
        let d = read_dataset(path, cfg)?;
        if d.inputs() != t.inputs() {
            return Err(CliError::Runtime(format!(
                "{}: input samples differ from the target {}",
                path.display(),
                target.display()
            )));
        }
        if d.out_dim() != t.out_dim() {
            return Err(CliError::Runtime(format!(
                "{}: {} output columns, target {} has {}",
                path.display(),
                d.out_dim(),
                target.display(),
                t.out_dim()
            )));
        }
        s.push(d);
    }
    let report_ = classify_transfer(&t, &s, cfg.classify.tolerances)?;
    let mut results = transfer_json(&report_);
    results["target"] = json!(target.display().to_string());
    results["sources"] = json!(sources.iter().map(|p| p.display().to_string()).collect::<Vec<_>>());
    let value = report("classify", cfg, results);
    ensure_dir(&common.out)?;
    write_json(&common.out.join("transfer.json"), &value)?;
    Ok(value)
}
