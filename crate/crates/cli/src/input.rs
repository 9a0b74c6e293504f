//! Dataset readers for `cubedc estimate`.

use std::fs::File;
use std::path::Path;

use cubedc::estimators::{RegressionSample, TreatmentSample};
use cubedc::simgen::Example;

use crate::CliError;

pub fn schema(example: Example) -> &'static [&'static str] {
    match example {
        Example::Location => &["x"],
        Example::MaxScore => &["x1", "x2", "y"],
        Example::ValueSearch => &["x", "a", "y", "pi"],
    }
}

/// Rows of finite reals under the example's header, with their line numbers.
fn read_rows(path: &Path, example: Example) -> Result<Vec<(u64, Vec<f64>)>, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let expected = schema(example);
    let header = reader
        .headers()
        .map_err(|e| CliError::Input(format!("{}: line 1: {e}", path.display())))?
        .clone();
    if header.iter().ne(expected.iter().copied()) {
        return Err(CliError::Input(format!(
            "{}: line 1: header {:?} does not match the {} schema {:?}",
            path.display(),
            header.iter().collect::<Vec<_>>(),
            example,
            expected
        )));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::Input(format!("{}: line {line}: {e}", path.display()))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let values = record
            .iter()
            .zip(expected)
            .map(|(field, name)| match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(CliError::Input(format!(
                    "{}: line {line}: column {name}: expected a finite number, got {field:?}",
                    path.display()
                ))),
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push((line, values));
    }
    if rows.is_empty() {
        return Err(CliError::Input(format!("{}: no data rows", path.display())));
    }
    Ok(rows)
}

pub fn read_location(path: &Path) -> Result<Vec<f64>, CliError> {
    Ok(read_rows(path, Example::Location)?
        .into_iter()
        .map(|(_, v)| v[0])
        .collect())
}

pub fn read_maxscore(path: &Path) -> Result<Vec<RegressionSample>, CliError> {
    Ok(read_rows(path, Example::MaxScore)?
        .into_iter()
        .map(|(_, v)| RegressionSample::new(vec![v[0], v[1]], v[2]))
        .collect())
}

pub fn read_valuesearch(path: &Path) -> Result<Vec<TreatmentSample>, CliError> {
    read_rows(path, Example::ValueSearch)?
        .into_iter()
        .map(|(line, v)| {
            let bad =
                |msg: String| CliError::Input(format!("{}: line {line}: {msg}", path.display()));
            let a = match v[1] {
                0.0 => 0,
                1.0 => 1,
                x => return Err(bad(format!("column a must be 0 or 1, got {x}"))),
            };
            if !(v[3] > 0.0 && v[3] < 1.0) {
                return Err(bad(format!("column pi must lie in (0, 1), got {}", v[3])));
            }
            Ok(TreatmentSample::new(vec![v[0]], a, v[2], v[3]))
        })
        .collect()
}
