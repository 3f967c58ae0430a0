//! Aligned collections of time series and their CSV representation.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("series '{name}' has length {found}, expected {expected}")]
    Length {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("duplicate series name '{0}'")]
    DuplicateName(String),
    #[error("series name '{0}' is reserved")]
    ReservedName(String),
    #[error("CSV input has no '{0}' column")]
    MissingColumn(String),
    #[error("row {row}, column '{column}': cannot parse '{value}' as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

const TIME: &str = "t";
const EPSILON: &str = "epsilon";
const H_TRUE: &str = "h_true";
const H_HAT: &str = "h_hat";
const H_BAR_HAT: &str = "h_bar_hat";
const RESERVED: [&str; 5] = [TIME, EPSILON, H_TRUE, H_HAT, H_BAR_HAT];

/// Observations ε_t with optional latent and estimated log-volatility series
/// and named covariates, all sharing one time index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SeriesBundle {
    /// Time keys: an integer position or a calendar date, as text.
    pub index: Vec<String>,
    pub epsilon: Vec<f64>,
    pub h_true: Option<Vec<f64>>,
    pub h_hat: Option<Vec<f64>>,
    pub h_bar_hat: Option<Vec<f64>>,
    covariates: BTreeMap<String, Vec<f64>>,
}

/// Formats a float so that parsing the text gives back the same value.
pub fn format_f64(x: f64) -> String {
    format!("{x:?}")
}

impl SeriesBundle {
    /// A bundle indexed by 0, 1, 2, …
    pub fn new(epsilon: Vec<f64>) -> Self {
        let index = (0..epsilon.len()).map(|i| i.to_string()).collect();
        Self {
            index,
            epsilon,
            ..Default::default()
        }
    }

    pub fn with_index(index: Vec<String>, epsilon: Vec<f64>) -> Result<Self, SeriesError> {
        check_len(EPSILON, index.len(), epsilon.len())?;
        Ok(Self {
            index,
            epsilon,
            ..Default::default()
        })
    }

    pub fn len(&self) -> usize {
        self.epsilon.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epsilon.is_empty()
    }

    pub fn set_h_true(&mut self, h: Vec<f64>) -> Result<(), SeriesError> {
        check_len(H_TRUE, self.len(), h.len())?;
        self.h_true = Some(h);
        Ok(())
    }

    pub fn set_h_hat(&mut self, h: Vec<f64>) -> Result<(), SeriesError> {
        check_len(H_HAT, self.len(), h.len())?;
        self.h_hat = Some(h);
        Ok(())
    }

    pub fn set_h_bar_hat(&mut self, h: Vec<f64>) -> Result<(), SeriesError> {
        check_len(H_BAR_HAT, self.len(), h.len())?;
        self.h_bar_hat = Some(h);
        Ok(())
    }

    pub fn add_covariate(&mut self, name: &str, values: Vec<f64>) -> Result<(), SeriesError> {
        if RESERVED.contains(&name) {
            return Err(SeriesError::ReservedName(name.to_string()));
        }
        if self.covariates.contains_key(name) {
            return Err(SeriesError::DuplicateName(name.to_string()));
        }
        check_len(name, self.len(), values.len())?;
        self.covariates.insert(name.to_string(), values);
        Ok(())
    }

    pub fn covariate(&self, name: &str) -> Option<&[f64]> {
        self.covariates.get(name).map(Vec::as_slice)
    }

    /// Covariates in name order.
    pub fn covariates(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.covariates.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    fn columns(&self) -> Vec<(&str, &[f64])> {
        let mut cols: Vec<(&str, &[f64])> = vec![(EPSILON, &self.epsilon)];
        for (name, s) in [(H_TRUE, &self.h_true), (H_HAT, &self.h_hat), (H_BAR_HAT, &self.h_bar_hat)] {
            if let Some(v) = s {
                cols.push((name, v));
            }
        }
        cols.extend(self.covariates());
        cols
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), SeriesError> {
        let mut w = csv::Writer::from_writer(writer);
        let cols = self.columns();
        let mut header = vec![TIME];
        header.extend(cols.iter().map(|c| c.0));
        w.write_record(&header)?;
        for (i, key) in self.index.iter().enumerate() {
            let mut row = vec![key.clone()];
            row.extend(cols.iter().map(|c| format_f64(c.1[i])));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), SeriesError> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Reads the layout produced by [`SeriesBundle::write_csv`].
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, SeriesError> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        let pos = |name: &str| headers.iter().position(|h| h == name);
        let t_col = pos(TIME).ok_or_else(|| SeriesError::MissingColumn(TIME.into()))?;
        let e_col = pos(EPSILON).ok_or_else(|| SeriesError::MissingColumn(EPSILON.into()))?;
        let mut index = Vec::new();
        let mut data: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
        for (row, record) in r.records().enumerate() {
            let record = record?;
            index.push(record[t_col].to_string());
            for (j, field) in record.iter().enumerate() {
                if j == t_col {
                    continue;
                }
                let v = field.trim().parse::<f64>().map_err(|_| SeriesError::Parse {
                    row: row + 1,
                    column: headers[j].to_string(),
                    value: field.to_string(),
                })?;
                data[j].push(v);
            }
        }
        let mut bundle = Self::with_index(index, std::mem::take(&mut data[e_col]))?;
        for (j, name) in headers.iter().enumerate() {
            if j == t_col || j == e_col {
                continue;
            }
            let values = std::mem::take(&mut data[j]);
            match name {
                H_TRUE => bundle.set_h_true(values)?,
                H_HAT => bundle.set_h_hat(values)?,
                H_BAR_HAT => bundle.set_h_bar_hat(values)?,
                _ => bundle.add_covariate(name, values)?,
            }
        }
        Ok(bundle)
    }

    pub fn load_csv(path: &Path) -> Result<Self, SeriesError> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

fn check_len(name: &str, expected: usize, found: usize) -> Result<(), SeriesError> {
    if expected != found {
        return Err(SeriesError::Length {
            name: name.to_string(),
            expected,
            found,
        });
    }
    Ok(())
}
