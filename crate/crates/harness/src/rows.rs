//! Flat result rows and their CSV encoding.

use crate::error::{HarnessError, Result};
use std::path::Path;

/// Fixed column order of every results file.
pub const CSV_HEADER: &str =
    "seed,n,k,regime,model,p,q,lambda,algorithm,m,trials,successes,mean_overlap,separation_margin_mean,elapsed_ms";

/// One aggregated experiment record. Required-queries experiments emit one
/// row per trial (trials = 1, m = the stopping point, successes = 0 flags a
/// capped run); rate experiments emit one row per grid point and algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub regime: String,
    pub model: String,
    pub p: f64,
    pub q: f64,
    pub lambda: f64,
    pub algorithm: String,
    pub m: usize,
    pub trials: usize,
    pub successes: usize,
    pub mean_overlap: f64,
    pub separation_margin_mean: f64,
    pub elapsed_ms: u64,
}

impl ResultRow {
    pub fn to_record(&self) -> Vec<String> {
        vec![
            self.seed.to_string(),
            self.n.to_string(),
            self.k.to_string(),
            self.regime.clone(),
            self.model.clone(),
            self.p.to_string(),
            self.q.to_string(),
            self.lambda.to_string(),
            self.algorithm.clone(),
            self.m.to_string(),
            self.trials.to_string(),
            self.successes.to_string(),
            self.mean_overlap.to_string(),
            self.separation_margin_mean.to_string(),
            self.elapsed_ms.to_string(),
        ]
    }

    pub fn from_record(fields: &[String]) -> Result<ResultRow> {
        if fields.len() != 15 {
            return Err(HarnessError::Config(format!(
                "expected 15 columns, found {}",
                fields.len()
            )));
        }
        fn num<T: std::str::FromStr>(v: &str, name: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            v.parse()
                .map_err(|e| HarnessError::Config(format!("column {name}: {e}")))
        }
        let row = ResultRow {
            seed: num(&fields[0], "seed")?,
            n: num(&fields[1], "n")?,
            k: num(&fields[2], "k")?,
            regime: fields[3].clone(),
            model: fields[4].clone(),
            p: num(&fields[5], "p")?,
            q: num(&fields[6], "q")?,
            lambda: num(&fields[7], "lambda")?,
            algorithm: fields[8].clone(),
            m: num(&fields[9], "m")?,
            trials: num(&fields[10], "trials")?,
            successes: num(&fields[11], "successes")?,
            mean_overlap: num(&fields[12], "mean_overlap")?,
            separation_margin_mean: num(&fields[13], "separation_margin_mean")?,
            elapsed_ms: num(&fields[14], "elapsed_ms")?,
        };
        if row.successes > row.trials {
            return Err(HarnessError::Config(format!(
                "successes {} exceed trials {}",
                row.successes, row.trials
            )));
        }
        if !(0.0..=1.0).contains(&row.mean_overlap) {
            return Err(HarnessError::Config(format!(
                "mean_overlap {} outside [0, 1]",
                row.mean_overlap
            )));
        }
        Ok(row)
    }
}

fn csv_error(path: &Path, err: csv::Error) -> HarnessError {
    match err.into_kind() {
        csv::ErrorKind::Io(source) => HarnessError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => HarnessError::Config(format!("{}: {other:?}", path.display())),
    }
}

pub fn write_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    writer
        .write_record(CSV_HEADER.split(','))
        .map_err(|e| csv_error(path, e))?;
    for row in rows {
        writer
            .write_record(row.to_record())
            .map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.join(",") != CSV_HEADER {
        return Err(HarnessError::Config(format!(
            "{}: unexpected header {:?}",
            path.display(),
            header.join(",")
        )));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let fields: Vec<String> = record.iter().map(str::to_owned).collect();
        rows.push(ResultRow::from_record(&fields)?);
    }
    Ok(rows)
}
