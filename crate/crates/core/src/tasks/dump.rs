//! Task dumps: a CSV of samples (`x_0.., y_0..` header, floats with 17
//! significant digits) and a `key=value` descriptor sidecar.

use std::fs;
use std::path::Path;

use super::TaskDescriptor;
use crate::error::{Error, Result};
use crate::hilbert::{FunctionDataset, HilbertSpace};
use crate::numerics::Tensor;

fn csv_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}

pub fn write_task_csv(path: impl AsRef<Path>, dataset: &FunctionDataset) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let header: Vec<String> = (0..dataset.in_dim())
        .map(|i| format!("x_{i}"))
        .chain((0..dataset.out_dim()).map(|i| format!("y_{i}")))
        .collect();
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for i in 0..dataset.len() {
        let row: Vec<String> = dataset
            .inputs()
            .row(i)
            .iter()
            .chain(dataset.outputs().row(i))
            .map(|v| format!("{v:.16e}"))
            .collect();
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a task CSV. Columns named `x_*` are inputs and `y_*` outputs.
pub fn read_task_csv(path: impl AsRef<Path>, space: HilbertSpace) -> Result<FunctionDataset> {
    let path = path.as_ref();
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    let mut x_cols = Vec::new();
    let mut y_cols = Vec::new();
    for (i, name) in header.iter().enumerate() {
        if name.starts_with("x_") {
            x_cols.push(i);
        } else if name.starts_with("y_") {
            y_cols.push(i);
        } else {
            return Err(csv_err(path, format!("unexpected column '{name}'")));
        }
    }
    if x_cols.is_empty() || y_cols.is_empty() {
        return Err(csv_err(path, "need at least one x_ and one y_ column"));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let field = |i: usize| -> Result<f64> {
            rec.get(i)
                .ok_or_else(|| csv_err(path, format!("row {rows}: missing column {i}")))?
                .parse::<f64>()
                .map_err(|e| csv_err(path, format!("row {rows}: {e}")))
        };
        for &i in &x_cols {
            xs.push(field(i)?);
        }
        for &i in &y_cols {
            ys.push(field(i)?);
        }
        rows += 1;
    }
    FunctionDataset::new(
        Tensor::new(vec![rows, x_cols.len()], xs)?,
        Tensor::new(vec![rows, y_cols.len()], ys)?,
        space,
    )
}

pub fn write_descriptor(path: impl AsRef<Path>, descriptor: &TaskDescriptor) -> Result<()> {
    let text = match descriptor {
        TaskDescriptor::Polynomial { coefficients } => {
            let cs: Vec<String> = coefficients.iter().map(|c| format!("{c:.16e}")).collect();
            format!("kind=polynomial\ndegree={}\ncoefficients={}\n", coefficients.len().saturating_sub(1), cs.join(","))
        }
        TaskDescriptor::Class { class_id } => format!("kind=class\nclass_id={class_id}\n"),
    };
    fs::write(path, text)?;
    Ok(())
}

pub fn read_descriptor(path: impl AsRef<Path>) -> Result<TaskDescriptor> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let get = |key: &str| {
        text.lines()
            .filter_map(|l| l.split_once('='))
            .find(|(k, _)| k.trim() == key)
            .map(|(_, v)| v.trim().to_string())
            .ok_or_else(|| Error::MissingDescriptor(format!("{}: no '{key}'", path.display())))
    };
    match get("kind")?.as_str() {
        "polynomial" => {
            let raw = get("coefficients")?;
            let coefficients = raw
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::MissingDescriptor(format!("{}: {e}", path.display())))?;
            Ok(TaskDescriptor::Polynomial { coefficients })
        }
        "class" => {
            let class_id = get("class_id")?
                .parse()
                .map_err(|e| Error::MissingDescriptor(format!("{}: {e}", path.display())))?;
            Ok(TaskDescriptor::Class { class_id })
        }
        other => Err(Error::MissingDescriptor(format!("unknown kind '{other}'"))),
    }
}
