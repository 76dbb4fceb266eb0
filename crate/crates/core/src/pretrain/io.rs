use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::json;

use super::{AuxDataset, AuxModel, Task};

/// Reads an auxiliary CSV with header `x1,...,xn,y` and normalizes it.
pub fn read_aux_csv(path: impl AsRef<Path>, task: Task) -> Result<AuxDataset> {
    let (inputs, targets) = read_xy_csv(path.as_ref())?;
    AuxDataset::from_raw(inputs, targets, task)
}

/// Raw `(inputs, targets)` from an `x1,...,xn,y` CSV.
pub fn read_xy_csv(path: &Path) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let cols = headers.len();
    if cols < 2 {
        return Err(Error::input(format!("{}: expected header x1,...,xn,y", path.display())));
    }
    for (k, name) in headers.iter().enumerate() {
        let want = if k + 1 == cols { "y".to_string() } else { format!("x{}", k + 1) };
        if name.trim() != want {
            return Err(Error::input(format!(
                "{}: header column {} is '{name}', expected '{want}'",
                path.display(),
                k + 1
            )));
        }
    }
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let values = record
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::input(format!("{}: row {}: {e}", path.display(), line + 2)))?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input(format!("{}: row {}: non-finite value", path.display(), line + 2)));
        }
        targets.push(values[cols - 1]);
        inputs.push(values[..cols - 1].to_vec());
    }
    if inputs.is_empty() {
        return Err(Error::input(format!("{}: no data rows", path.display())));
    }
    Ok((inputs, targets))
}

/// Writes raw observations in the `x1,...,xn,y` layout.
pub fn write_aux_csv(path: impl AsRef<Path>, inputs: &[Vec<f64>], targets: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let dim = inputs.first().map_or(0, Vec::len);
    let header: Vec<String> = (1..=dim).map(|k| format!("x{k}")).chain(["y".to_string()]).collect();
    writeln!(w, "{}", header.join(","))?;
    for (x, y) in inputs.iter().zip(targets) {
        let row: Vec<String> = x.iter().chain([y]).map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

impl AuxModel {
    pub fn to_json(&self) -> Result<String> {
        json::to_string(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: AuxModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = BufWriter::new(File::create(path)?);
        f.write_all(self.to_json()?.as_bytes())?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let model: AuxModel = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        model.validate()?;
        Ok(model)
    }
}
