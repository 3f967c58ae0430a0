//! Reading price and covariate CSV files into an aligned [`SeriesBundle`],
//! and writing a synthetic data set with known parameters.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::model::NoiseKind;
use crate::series::{format_f64, SeriesBundle};
use crate::simulate::{simulate_sv, ArSpec};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: no column named '{column}'")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}, row {row}: cannot parse time key '{value}' (expected YYYY-MM-DD or an integer)")]
    BadTimeKey {
        path: PathBuf,
        row: usize,
        value: String,
    },
    #[error("{path}, row {row}: time key '{value}' is of a different kind than the first row")]
    MixedTimeKeys {
        path: PathBuf,
        row: usize,
        value: String,
    },
    #[error("{path}, row {row}: cannot parse value '{value}'")]
    BadValue {
        path: PathBuf,
        row: usize,
        value: String,
    },
    #[error("{path}, row {row}: duplicate time key '{value}'")]
    DuplicateKey {
        path: PathBuf,
        row: usize,
        value: String,
    },
    #[error("{path}, row {row}: time key '{value}' is earlier than the previous row")]
    NonIncreasing {
        path: PathBuf,
        row: usize,
        value: String,
    },
    #[error("{path}, row {row}: price {value} is not positive")]
    NonPositive {
        path: PathBuf,
        row: usize,
        value: f64,
    },
    #[error("{path}: fewer than two rows")]
    TooShort { path: PathBuf },
    #[error("no time keys are shared by all input files")]
    EmptyJoin,
}

/// How the price column becomes the return series ε_t.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReturnKind {
    /// ε_t = log(P_t / P_{t−1}).
    #[default]
    LogReturn,
    /// The column already holds ε_t.
    Raw,
}

impl std::str::FromStr for ReturnKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "log-return" | "log_return" | "logreturn" => Ok(ReturnKind::LogReturn),
            "raw" => Ok(ReturnKind::Raw),
            other => Err(format!("unknown return kind '{other}'")),
        }
    }
}

impl fmt::Display for ReturnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReturnKind::LogReturn => "log-return",
            ReturnKind::Raw => "raw",
        })
    }
}

/// Transformation applied to covariate levels before they enter the design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovariateTransform {
    #[default]
    Log,
    Raw,
}

impl std::str::FromStr for CovariateTransform {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "log" => Ok(CovariateTransform::Log),
            "raw" => Ok(CovariateTransform::Raw),
            other => Err(format!("unknown covariate transform '{other}'")),
        }
    }
}

/// Where the input files are and how to read them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IngestSpec {
    pub price_file: PathBuf,
    /// Covariate name to file. Every file uses the same column names.
    pub covariate_files: BTreeMap<String, PathBuf>,
    pub date_column: String,
    pub value_column: String,
    pub return_kind: ReturnKind,
    pub covariate_transform: CovariateTransform,
}

impl IngestSpec {
    pub fn new(price_file: impl Into<PathBuf>) -> Self {
        Self {
            price_file: price_file.into(),
            covariate_files: BTreeMap::new(),
            date_column: "date".into(),
            value_column: "close".into(),
            return_kind: ReturnKind::LogReturn,
            covariate_transform: CovariateTransform::Log,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum TimeKey {
    Date(NaiveDate),
    Index(i64),
}

impl TimeKey {
    fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
            return Some(TimeKey::Date(d));
        }
        s.parse::<i64>().ok().map(TimeKey::Index)
    }

    fn same_kind(&self, other: &Self) -> bool {
        matches!(
            (self, other),
            (TimeKey::Date(_), TimeKey::Date(_)) | (TimeKey::Index(_), TimeKey::Index(_))
        )
    }
}

impl fmt::Display for TimeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeKey::Date(d) => write!(f, "{}", d.format("%Y-%m-%d")),
            TimeKey::Index(i) => write!(f, "{i}"),
        }
    }
}

struct Column {
    keys: Vec<TimeKey>,
    values: Vec<f64>,
}

fn read_column(path: &Path, date_column: &str, value_column: &str) -> Result<Column, IngestError> {
    let csv_err = |source| IngestError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers().map_err(csv_err)?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn {
                path: path.to_path_buf(),
                column: name.to_string(),
            })
    };
    let (kc, vc) = (find(date_column)?, find(value_column)?);
    let mut keys: Vec<TimeKey> = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        // Header is line 1, so data row i sits on line i + 2.
        let row = i + 2;
        let raw_key = rec.get(kc).unwrap_or("");
        let key = TimeKey::parse(raw_key).ok_or_else(|| IngestError::BadTimeKey {
            path: path.to_path_buf(),
            row,
            value: raw_key.to_string(),
        })?;
        if let Some(prev) = keys.last() {
            if !prev.same_kind(&key) {
                return Err(IngestError::MixedTimeKeys {
                    path: path.to_path_buf(),
                    row,
                    value: raw_key.to_string(),
                });
            }
            if key == *prev {
                return Err(IngestError::DuplicateKey {
                    path: path.to_path_buf(),
                    row,
                    value: raw_key.to_string(),
                });
            }
            if key < *prev {
                return Err(IngestError::NonIncreasing {
                    path: path.to_path_buf(),
                    row,
                    value: raw_key.to_string(),
                });
            }
        }
        let raw_value = rec.get(vc).unwrap_or("");
        let value = raw_value
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| IngestError::BadValue {
                path: path.to_path_buf(),
                row,
                value: raw_value.to_string(),
            })?;
        keys.push(key);
        values.push(value);
    }
    Ok(Column { keys, values })
}

/// Outcome of [`ingest_csv`].
#[derive(Debug, Clone, PartialEq)]
pub struct IngestReport {
    pub bundle: SeriesBundle,
    /// Rows read from each file, keyed by "price" or the covariate name.
    pub rows_read: BTreeMap<String, usize>,
    /// Rows of each file that did not survive the inner join.
    pub dropped: BTreeMap<String, usize>,
}

/// Reads the price file and covariate files and inner-joins them on the
/// time key.
pub fn ingest_csv(spec: &IngestSpec) -> Result<IngestReport, IngestError> {
    let price = read_column(&spec.price_file, &spec.date_column, &spec.value_column)?;
    let (keys, eps): (Vec<TimeKey>, Vec<f64>) = match spec.return_kind {
        ReturnKind::LogReturn => {
            if price.values.len() < 2 {
                return Err(IngestError::TooShort {
                    path: spec.price_file.clone(),
                });
            }
            for (i, &v) in price.values.iter().enumerate() {
                if v <= 0.0 {
                    return Err(IngestError::NonPositive {
                        path: spec.price_file.clone(),
                        row: i + 2,
                        value: v,
                    });
                }
            }
            let r = price.values.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
            (price.keys[1..].to_vec(), r)
        }
        ReturnKind::Raw => (price.keys.clone(), price.values.clone()),
    };
    let mut rows_read = BTreeMap::from([("price".to_string(), price.keys.len())]);
    let mut covs = Vec::new();
    for (name, path) in &spec.covariate_files {
        let c = read_column(path, &spec.date_column, &spec.value_column)?;
        if spec.covariate_transform == CovariateTransform::Log {
            if let Some(i) = c.values.iter().position(|&v| v <= 0.0) {
                return Err(IngestError::NonPositive {
                    path: path.clone(),
                    row: i + 2,
                    value: c.values[i],
                });
            }
        }
        rows_read.insert(name.clone(), c.keys.len());
        let map: BTreeMap<TimeKey, f64> = c.keys.into_iter().zip(c.values).collect();
        covs.push((name.clone(), map));
    }
    let mut out_keys = Vec::new();
    let mut out_eps = Vec::new();
    let mut out_cov: Vec<Vec<f64>> = vec![Vec::new(); covs.len()];
    for (k, e) in keys.iter().zip(&eps) {
        if covs.iter().all(|(_, m)| m.contains_key(k)) {
            out_keys.push(k.to_string());
            out_eps.push(*e);
            for (j, (_, m)) in covs.iter().enumerate() {
                let v = m[k];
                out_cov[j].push(match spec.covariate_transform {
                    CovariateTransform::Log => v.ln(),
                    CovariateTransform::Raw => v,
                });
            }
        }
    }
    if out_eps.is_empty() {
        return Err(IngestError::EmptyJoin);
    }
    let n = out_eps.len();
    let mut dropped = BTreeMap::from([("price".to_string(), keys.len() - n)]);
    for (name, m) in &covs {
        dropped.insert(name.clone(), m.len() - n);
    }
    let mut bundle = SeriesBundle::with_index(out_keys, out_eps).expect("aligned");
    for ((name, _), values) in covs.iter().zip(out_cov) {
        bundle.add_covariate(name, values).expect("aligned");
    }
    Ok(IngestReport {
        bundle,
        rows_read,
        dropped,
    })
}

/// Known ground truth of the synthetic data set.
pub const FIXTURE_DELTA: f64 = 0.2;
pub const FIXTURE_RETURN_SCALE: f64 = 0.01;
pub const FIXTURE_COVARIATE: &str = "implied_vol";

/// Paths written by [`write_fixture`].
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureFiles {
    pub prices: PathBuf,
    pub covariate: PathBuf,
}

fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d += Duration::days(1);
    }
    out
}

/// Writes a price file and an implied-volatility style covariate file for a
/// simulated AR(2) log-volatility process with Δ = 0.2.
///
/// Returns are 0.01·ε_t and prices 100·exp(Σ returns). The covariate is
/// e^{H_t} times lognormal measurement noise, expressed in percent.
pub fn write_fixture(dir: &Path, n_returns: usize, seed: u64) -> Result<FixtureFiles, IngestError> {
    let spec = ArSpec::ar2(FIXTURE_DELTA).expect("valid fixture process");
    let bundle = simulate_sv(&spec, n_returns, NoiseKind::Gaussian, seed);
    let h = bundle.h_true.as_ref().expect("simulated");
    let dates = business_days(NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date"), n_returns + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| IngestError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let prices = dir.join("fixture_prices.csv");
    let covariate = dir.join("fixture_implied_vol.csv");
    let mut p_text = String::from("date,close\n");
    let mut c_text = String::from("date,close\n");
    let mut price = 100.0f64;
    p_text.push_str(&format!("{},{}\n", dates[0].format("%Y-%m-%d"), format_f64(price)));
    for t in 0..n_returns {
        price *= (FIXTURE_RETURN_SCALE * bundle.epsilon[t]).exp();
        let day = dates[t + 1].format("%Y-%m-%d");
        p_text.push_str(&format!("{day},{}\n", format_f64(price)));
        let noise: f64 = StandardNormal.sample(&mut rng);
        let level = 100.0 * FIXTURE_RETURN_SCALE * (h[t] + 0.2 * noise).exp();
        c_text.push_str(&format!("{day},{}\n", format_f64(level)));
    }
    std::fs::write(&prices, p_text).map_err(io_err(&prices))?;
    std::fs::write(&covariate, c_text).map_err(io_err(&covariate))?;
    Ok(FixtureFiles { prices, covariate })
}
