//! Sampled observable histories and their CSV form.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::ModelParams;

/// Provenance carried alongside a series.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub params: Option<ModelParams>,
    /// Truncation orders of the energy observables, or of the generator for
    /// effective-Hamiltonian runs.
    pub orders: Vec<usize>,
    pub domain_walls: Option<usize>,
    pub schedule_hash: String,
    /// `floquet`, `deff_n{k}`, `delta`, or free text for synthetic data.
    pub generator: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    metadata: RunMetadata,
    columns: Vec<String>,
    periods: Vec<u64>,
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn new(metadata: RunMetadata, columns: Vec<String>) -> Result<Self> {
        for (i, c) in columns.iter().enumerate() {
            if c == "period" || c == "time" || columns[..i].contains(c) {
                return Err(Error::InvalidParams(format!("duplicate or reserved column `{c}`")));
            }
        }
        Ok(Self {
            metadata,
            columns,
            periods: Vec::new(),
            times: Vec::new(),
            values: Vec::new(),
        })
    }

    /// Series with a single observable column and no period indices beyond
    /// the row number; convenient for synthetic data.
    pub fn from_samples(column: &str, times: &[f64], values: &[f64]) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InsufficientData("times and values differ in length".into()));
        }
        let mut s = Self::new(
            RunMetadata {
                generator: "synthetic".into(),
                ..RunMetadata::default()
            },
            vec![column.to_string()],
        )?;
        for (k, (&t, &v)) in times.iter().zip(values).enumerate() {
            s.push(k as u64, t, vec![v])?;
        }
        Ok(s)
    }

    pub fn push(&mut self, period: u64, time: f64, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::DimensionMismatch {
                expected: self.columns.len(),
                found: row.len(),
            });
        }
        if !time.is_finite() {
            return Err(Error::Domain(format!("non-finite sample time {time}")));
        }
        if let Some(&last) = self.times.last() {
            if time <= last {
                return Err(Error::Domain(format!("sample time {time} not after {last}")));
            }
        }
        self.periods.push(period);
        self.times.push(time);
        self.values.push(row);
        Ok(())
    }

    pub fn metadata(&self) -> &RunMetadata {
        &self.metadata
    }

    pub fn set_metadata(&mut self, metadata: RunMetadata) {
        self.metadata = metadata;
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn periods(&self) -> &[u64] {
        &self.periods
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let k = self.column_index(name)?;
        Ok(self.values.iter().map(|r| r[k]).collect())
    }

    /// Rows with period at most `period`.
    pub fn truncate_after(&mut self, period: u64) {
        let keep = self.periods.partition_point(|&p| p <= period);
        self.periods.truncate(keep);
        self.times.truncate(keep);
        self.values.truncate(keep);
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["period".to_string(), "time".to_string()];
        h.extend(self.columns.iter().cloned());
        h
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.header())?;
        for k in 0..self.len() {
            out.write_record(self.record(k))?;
        }
        out.flush()?;
        Ok(())
    }

    pub(crate) fn record(&self, k: usize) -> Vec<String> {
        let mut rec = vec![self.periods[k].to_string(), format_f64(self.times[k])];
        rec.extend(self.values[k].iter().map(|&v| format_f64(v)));
        rec
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Reads a series written by [`TimeSeries::write_csv`]; metadata is left
    /// at its default.
    pub fn read_csv(r: impl Read) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header.len() < 2 || header[0] != "period" || header[1] != "time" {
            return Err(Error::MissingColumn("period,time".into()));
        }
        let mut s = Self::new(RunMetadata::default(), header[2..].to_vec())?;
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |k: usize| -> Result<f64> {
                rec.get(k)
                    .ok_or_else(|| Error::Domain(format!("short CSV row at field {k}")))?
                    .parse::<f64>()
                    .map_err(|e| Error::Domain(format!("bad number in CSV: {e}")))
            };
            let period = rec
                .get(0)
                .unwrap_or_default()
                .parse::<u64>()
                .map_err(|e| Error::Domain(format!("bad period in CSV: {e}")))?;
            let values = (2..header.len()).map(parse).collect::<Result<Vec<_>>>()?;
            s.push(period, parse(1)?, values)?;
        }
        Ok(s)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Shortest representation that parses back to the same value.
fn format_f64(v: f64) -> String {
    format!("{v:?}")
}
