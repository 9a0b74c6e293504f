use std::fmt;
use std::io::{Read, Write};

use crate::simgen::Example;
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 11] = [
    "example",
    "N",
    "S",
    "reps",
    "coord",
    "bias",
    "sd",
    "se_mean",
    "cp",
    "pooled_sd",
    "runtime_s",
];

/// One (design cell, coordinate) summary.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub example: Example,
    pub n_total: usize,
    pub groups: usize,
    pub reps: usize,
    /// 1-based coordinate index.
    pub coord: usize,
    pub bias: f64,
    pub sd: f64,
    pub se_mean: f64,
    pub cp: f64,
    /// Kept in memory only; the CSV schema has no column for it.
    pub pooled_bias: Option<f64>,
    pub pooled_sd: Option<f64>,
    pub reps_used: usize,
    pub runtime_s: Option<f64>,
}

impl TableRow {
    /// Monte-Carlo standard error of the bias.
    pub fn bias_mc_se(&self) -> f64 {
        self.sd / (self.reps_used as f64).sqrt()
    }

    /// True when `|bias|` exceeds five Monte-Carlo standard errors.
    pub fn bias_flagged(&self) -> bool {
        self.bias.abs() > 5.0 * self.bias_mc_se()
    }

    /// `sd / se_mean`.
    pub fn sd_se_ratio(&self) -> f64 {
        self.sd / self.se_mean
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MonteCarloTable {
    pub rows: Vec<TableRow>,
}

impl MonteCarloTable {
    pub fn extend(&mut self, other: MonteCarloTable) {
        self.rows.extend(other.rows);
    }

    /// Clears runtimes so output depends only on seed and design.
    pub fn without_runtime(mut self) -> Self {
        for row in &mut self.rows {
            row.runtime_s = None;
        }
        self
    }
}

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

fn csv_err(e: impl fmt::Display) -> Error {
    Error::Csv(e.to_string())
}

/// Writes the table with every float at 17 significant digits.
pub fn write_table<W: Write>(table: &MonteCarloTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in &table.rows {
        w.write_record([
            r.example.name().to_string(),
            r.n_total.to_string(),
            r.groups.to_string(),
            r.reps.to_string(),
            r.coord.to_string(),
            float(r.bias),
            float(r.sd),
            float(r.se_mean),
            float(r.cp),
            opt_float(r.pooled_sd),
            opt_float(r.runtime_s),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(csv_err)
}

/// Parses a table written by [`write_table`]. `pooled_bias` comes back as
/// `None` and `reps_used` equals `reps`.
pub fn read_table<R: Read>(input: R) -> Result<MonteCarloTable> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers().map_err(csv_err)?;
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Csv(format!(
            "unexpected header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let line = i + 2;
        let field = |k: usize| record.get(k).unwrap_or("");
        let bad = |k: usize| {
            Error::Csv(format!(
                "line {line}: bad {} value {:?}",
                CSV_HEADER[k],
                field(k)
            ))
        };
        let int = |k: usize| field(k).parse::<usize>().map_err(|_| bad(k));
        let real = |k: usize| field(k).parse::<f64>().map_err(|_| bad(k));
        let opt = |k: usize| {
            if field(k).is_empty() {
                Ok(None)
            } else {
                real(k).map(Some)
            }
        };
        let reps = int(3)?;
        rows.push(TableRow {
            example: field(0).parse().map_err(|_| bad(0))?,
            n_total: int(1)?,
            groups: int(2)?,
            reps,
            coord: int(4)?,
            bias: real(5)?,
            sd: real(6)?,
            se_mean: real(7)?,
            cp: real(8)?,
            pooled_bias: None,
            pooled_sd: opt(9)?,
            reps_used: reps,
            runtime_s: opt(10)?,
        });
    }
    Ok(MonteCarloTable { rows })
}

impl fmt::Display for MonteCarloTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<12} {:>9} {:>6} {:>6} {:>5} {:>11} {:>10} {:>10} {:>7} {:>10} {:>9}",
            "example",
            "N",
            "S",
            "reps",
            "coord",
            "bias",
            "sd",
            "se_mean",
            "cp",
            "pooled_sd",
            "runtime_s"
        )?;
        for r in &self.rows {
            let pooled = r
                .pooled_sd
                .map(|v| format!("{v:.5}"))
                .unwrap_or_else(|| "-".into());
            let runtime = r
                .runtime_s
                .map(|v| format!("{v:.2}"))
                .unwrap_or_else(|| "-".into());
            write!(
                f,
                "{:<12} {:>9} {:>6} {:>6} {:>5} {:>11.6} {:>10.5} {:>10.5} {:>7.3} {:>10} {:>9}",
                r.example.name(),
                r.n_total,
                r.groups,
                r.reps,
                r.coord,
                r.bias,
                r.sd,
                r.se_mean,
                r.cp,
                pooled,
                runtime
            )?;
            if r.bias_flagged() {
                write!(f, "  bias>5mcse")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(coord: usize, pooled: Option<f64>, runtime: Option<f64>) -> TableRow {
        TableRow {
            example: Example::MaxScore,
            n_total: 1 << 18,
            groups: 16,
            reps: 500,
            coord,
            bias: -1.234_567_890_123_456_7e-4,
            sd: 0.1 + 0.2,
            se_mean: std::f64::consts::PI / 100.0,
            cp: 0.932,
            pooled_bias: None,
            pooled_sd: pooled,
            reps_used: 500,
            runtime_s: runtime,
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let table = MonteCarloTable {
            rows: vec![row(1, Some(1.0 / 3.0), Some(12.5)), row(2, None, None)],
        };
        let mut buf = Vec::new();
        write_table(&table, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("example,N,S,reps,coord,bias,sd,se_mean,cp,pooled_sd,runtime_s\n"));
        assert!(text.lines().nth(2).unwrap().ends_with(",,"));
        assert_eq!(read_table(buf.as_slice()).unwrap(), table);
    }

    #[test]
    fn reader_rejects_bad_input() {
        assert!(read_table("a,b\n1,2\n".as_bytes()).is_err());
        let bad = "example,N,S,reps,coord,bias,sd,se_mean,cp,pooled_sd,runtime_s\nlocation,1,2,3,1,x,0,0,0,,\n";
        let err = read_table(bad.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("bias"), "{err}");
    }

    #[test]
    fn bias_flag_threshold() {
        let mut r = row(1, None, None);
        r.sd = 1.0;
        r.reps_used = 100;
        r.bias = 0.49;
        assert!(!r.bias_flagged());
        r.bias = -0.51;
        assert!(r.bias_flagged());
    }

    #[test]
    fn text_table_has_one_line_per_row() {
        let table = MonteCarloTable {
            rows: vec![row(1, None, Some(1.0)), row(2, Some(0.5), None)],
        };
        assert_eq!(table.to_string().lines().count(), 3);
    }
}
