use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use toml::{Table as TomlTable, Value};

use super::{Result, StudyError};
use crate::estimate::PcLassoConfig;
use crate::forecast::CLASSIFIER_THRESHOLD;
use crate::ingest::{CovariateTransform, IngestSpec, ReturnKind};
use crate::model::NoiseKind;
use crate::simulate::{ArSpec, LorenzConfig, SimError, DEFAULT_BURN_IN};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    SimStudy,
    LorenzStudy,
    Backtest,
}

impl StudyKind {
    /// Section name in the config file, also the CLI subcommand.
    pub fn section(self) -> &'static str {
        match self {
            StudyKind::SimStudy => "sim-study",
            StudyKind::LorenzStudy => "lorenz-study",
            StudyKind::Backtest => "backtest",
        }
    }
}

impl fmt::Display for StudyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.section())
    }
}

impl FromStr for StudyKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        [StudyKind::SimStudy, StudyKind::LorenzStudy, StudyKind::Backtest]
            .into_iter()
            .find(|k| k.section() == s)
            .ok_or_else(|| format!("unknown study '{s}'"))
    }
}

/// Log-volatility process of the simulation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum HProcess {
    /// H_t = .5H_{t−1} + .4H_{t−2} + h_t.
    Ar2,
    /// H_t = .05H_{t−1} + .05H_{t−2} + .25H_{t−3} + .2H_{t−4} + .35H_{t−5} + h_t.
    Ar5,
}

impl HProcess {
    pub fn spec(self, delta: f64, burn_in: usize) -> std::result::Result<ArSpec, SimError> {
        let coefficients = match self {
            HProcess::Ar2 => crate::simulate::AR2_COEFFICIENTS.to_vec(),
            HProcess::Ar5 => crate::simulate::AR5_COEFFICIENTS.to_vec(),
        };
        ArSpec::new(coefficients, delta, burn_in)
    }

    pub(crate) fn code(self) -> u64 {
        match self {
            HProcess::Ar2 => 2,
            HProcess::Ar5 => 5,
        }
    }
}

impl fmt::Display for HProcess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HProcess::Ar2 => "ar2",
            HProcess::Ar5 => "ar5",
        })
    }
}

impl FromStr for HProcess {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "ar2" => Ok(HProcess::Ar2),
            "ar5" => Ok(HProcess::Ar5),
            other => Err(format!("unknown process '{other}' (expected ar2 or ar5)")),
        }
    }
}

/// Input files of a backtest.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DataConfig {
    pub price_file: Option<PathBuf>,
    pub covariates: BTreeMap<String, PathBuf>,
    pub date_column: String,
    pub value_column: String,
    pub return_kind: ReturnKind,
    pub covariate_transform: CovariateTransform,
}

impl DataConfig {
    pub fn ingest_spec(&self) -> Result<IngestSpec> {
        let price = self
            .price_file
            .clone()
            .ok_or_else(|| StudyError::Config("backtest needs price_file".into()))?;
        Ok(IngestSpec {
            price_file: price,
            covariate_files: self.covariates.clone(),
            date_column: self.date_column.clone(),
            value_column: self.value_column.clone(),
            return_kind: self.return_kind,
            covariate_transform: self.covariate_transform,
        })
    }
}

/// Settings of one study run.
///
/// | key | sim-study | lorenz-study | backtest |
/// |---|---|---|---|
/// | replicates | 1000 | 100 | 100 |
/// | sample_sizes | [625, 1250] | | |
/// | split_fractions | | [0.3, 0.4, 0.5] | [0.5, 0.6] |
/// | threshold_multipliers | [2, 3, 4] | [4] | [4] |
/// | ar_order | 10 | | |
/// | lag_count | | 20 | 10 per input series |
/// | deltas | 0.05, 0.10, …, 0.50 | | |
/// | processes | ["ar2", "ar5"] | | |
///
/// Every study also reads `seed`, `noise`, `folds`, `unit_scores`,
/// `classifier_threshold` and `burn_in`; the Lorenz study reads
/// `lorenz_sigma`, `lorenz_rho`, `lorenz_beta`, `lorenz_dt`, `lorenz_steps`
/// and `lorenz_initial`; the backtest reads `price_file`, `covariates`,
/// `date_column`, `value_column`, `return_kind` and `covariate_transform`.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub study: StudyKind,
    pub replicates: usize,
    pub seed: u64,
    pub sample_sizes: Vec<usize>,
    pub split_fractions: Vec<f64>,
    pub threshold_multipliers: Vec<f64>,
    pub ar_order: usize,
    pub lag_count: usize,
    /// True Δ values of the simulation study.
    pub deltas: Vec<f64>,
    pub processes: Vec<HProcess>,
    pub noise: NoiseKind,
    pub burn_in: usize,
    pub folds: usize,
    pub unit_scores: bool,
    pub classifier_threshold: f64,
    pub lorenz: LorenzConfig,
    pub data: DataConfig,
}

pub const DEFAULT_SEED: u64 = 20_190_301;

impl StudyConfig {
    pub fn defaults(study: StudyKind) -> Self {
        let mut c = Self {
            study,
            replicates: 100,
            seed: DEFAULT_SEED,
            sample_sizes: vec![625, 1250],
            split_fractions: vec![0.5, 0.6],
            threshold_multipliers: vec![4.0],
            ar_order: 10,
            lag_count: 10,
            deltas: (1..=10).map(|i| i as f64 * 0.05).collect(),
            processes: vec![HProcess::Ar2, HProcess::Ar5],
            noise: NoiseKind::Gaussian,
            burn_in: DEFAULT_BURN_IN,
            folds: PcLassoConfig::default().folds,
            unit_scores: false,
            classifier_threshold: CLASSIFIER_THRESHOLD,
            lorenz: LorenzConfig::default(),
            data: DataConfig {
                date_column: "date".into(),
                value_column: "close".into(),
                ..DataConfig::default()
            },
        };
        match study {
            StudyKind::SimStudy => {
                c.replicates = 1000;
                c.threshold_multipliers = vec![2.0, 3.0, 4.0];
            }
            StudyKind::LorenzStudy => {
                c.split_fractions = vec![0.3, 0.4, 0.5];
                c.lag_count = 20;
            }
            StudyKind::Backtest => {}
        }
        c
    }

    pub fn lasso(&self) -> PcLassoConfig {
        PcLassoConfig {
            folds: self.folds,
            unit_scores: self.unit_scores,
            ..PcLassoConfig::default()
        }
    }

    /// Reads a config file: top-level keys apply to every study and the
    /// section named after the study overrides them. Relative paths are
    /// taken relative to the file's directory.
    pub fn load(study: StudyKind, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| StudyError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut c = Self::defaults(study);
        c.apply_document(&text, path.parent())?;
        Ok(c)
    }

    pub fn apply_document(&mut self, text: &str, base: Option<&Path>) -> Result<()> {
        let doc: TomlTable = text
            .parse()
            .map_err(|e| StudyError::Config(format!("{e}")))?;
        let sections = ["sim-study", "lorenz-study", "backtest"];
        for (k, v) in &doc {
            if !sections.contains(&k.as_str()) {
                self.set(k, v, base)?;
            }
        }
        if let Some(v) = doc.get(self.study.section()) {
            let section = v.as_table().ok_or_else(|| {
                StudyError::Config(format!("[{}] must be a section", self.study.section()))
            })?;
            for (k, v) in section {
                self.set(k, v, base)?;
            }
        }
        Ok(())
    }

    /// Applies a `key=value` override. The value is read as a TOML value and
    /// falls back to a plain string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| StudyError::Config(format!("expected key=value, got '{assignment}'")))?;
        let (key, value) = (key.trim(), value.trim());
        let doc = format!("{key} = {value}");
        let parsed: TomlTable = match doc.parse() {
            Ok(t) => t,
            Err(_) => format!("{key} = {}", Value::String(value.to_string()))
                .parse()
                .map_err(|e| StudyError::Config(format!("{e}")))?,
        };
        for (k, v) in &parsed {
            self.set(k, v, None)?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, v: &Value, base: Option<&Path>) -> Result<()> {
        let bad = |what: &str| StudyError::Config(format!("{key}: expected {what}, got {v}"));
        let path = |v: &Value| -> Result<PathBuf> {
            let p = PathBuf::from(v.as_str().ok_or_else(|| bad("a path string"))?);
            Ok(match base {
                Some(b) if p.is_relative() => b.join(p),
                _ => p,
            })
        };
        let text = v.as_str();
        let parse_str = |_: &Value| text.ok_or_else(|| bad("a string"));
        match key {
            "replicates" => self.replicates = to_usize(v).ok_or_else(|| bad("a positive integer"))?,
            "seed" => {
                self.seed = match v {
                    Value::Integer(i) => *i as u64,
                    Value::String(s) => s.parse().map_err(|_| bad("an integer"))?,
                    _ => return Err(bad("an integer")),
                }
            }
            "sample_sizes" | "sample_size" => {
                self.sample_sizes = list(v, to_usize).ok_or_else(|| bad("positive integers"))?
            }
            "split_fractions" | "split_fraction" => {
                self.split_fractions = list(v, to_f64).ok_or_else(|| bad("numbers"))?
            }
            "threshold_multipliers" => {
                self.threshold_multipliers = list(v, to_f64).ok_or_else(|| bad("numbers"))?
            }
            "deltas" | "delta" => self.deltas = list(v, to_f64).ok_or_else(|| bad("numbers"))?,
            "processes" | "process" => {
                self.processes = list(v, |x| x.as_str().and_then(|s| s.parse().ok()))
                    .ok_or_else(|| bad("\"ar2\" or \"ar5\""))?
            }
            "ar_order" => self.ar_order = to_usize(v).ok_or_else(|| bad("a positive integer"))?,
            "lag_count" => self.lag_count = to_usize(v).ok_or_else(|| bad("a positive integer"))?,
            "burn_in" => self.burn_in = to_usize(v).ok_or_else(|| bad("an integer"))?,
            "folds" => self.folds = to_usize(v).ok_or_else(|| bad("an integer"))?,
            "noise" => self.noise = parse_str(v)?.parse().map_err(|_| bad("gaussian or laplace"))?,
            "unit_scores" => self.unit_scores = v.as_bool().ok_or_else(|| bad("true or false"))?,
            "classifier_threshold" => {
                self.classifier_threshold = to_f64(v).ok_or_else(|| bad("a number"))?
            }
            "lorenz_sigma" => self.lorenz.sigma = to_f64(v).ok_or_else(|| bad("a number"))?,
            "lorenz_rho" => self.lorenz.rho = to_f64(v).ok_or_else(|| bad("a number"))?,
            "lorenz_beta" => self.lorenz.beta = to_f64(v).ok_or_else(|| bad("a number"))?,
            "lorenz_dt" => self.lorenz.dt = to_f64(v).ok_or_else(|| bad("a number"))?,
            "lorenz_steps" => self.lorenz.n_steps = to_usize(v).ok_or_else(|| bad("an integer"))?,
            "lorenz_initial" => {
                let xs = list(v, to_f64).filter(|x| x.len() == 3).ok_or_else(|| bad("three numbers"))?;
                self.lorenz.initial = [xs[0], xs[1], xs[2]];
            }
            "price_file" => self.data.price_file = Some(path(v)?),
            "covariates" => {
                let t = v.as_table().ok_or_else(|| bad("a table of name = path"))?;
                for (name, p) in t {
                    self.data.covariates.insert(name.clone(), path(p)?);
                }
            }
            "date_column" => self.data.date_column = parse_str(v)?.to_string(),
            "value_column" => self.data.value_column = parse_str(v)?.to_string(),
            "return_kind" => {
                self.data.return_kind = parse_str(v)?.parse().map_err(|_| bad("log-return or raw"))?
            }
            "covariate_transform" => {
                self.data.covariate_transform =
                    parse_str(v)?.parse().map_err(|_| bad("log or raw"))?
            }
            other => return Err(StudyError::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(StudyError::Config(m));
        if self.replicates == 0 {
            return fail("replicates must be positive".into());
        }
        if self.threshold_multipliers.is_empty()
            || self.threshold_multipliers.iter().any(|k| !(*k > 0.0 && k.is_finite()))
        {
            return fail("threshold_multipliers must be a non-empty list of positive numbers".into());
        }
        if self.ar_order == 0 || self.lag_count == 0 {
            return fail("ar_order and lag_count must be positive".into());
        }
        if self.folds < 2 {
            return fail("folds must be at least 2".into());
        }
        if !(self.classifier_threshold >= 0.0) {
            return fail("classifier_threshold must be non-negative".into());
        }
        match self.study {
            StudyKind::SimStudy => {
                if self.sample_sizes.is_empty() || self.deltas.is_empty() || self.processes.is_empty() {
                    return fail("sample_sizes, deltas and processes must be non-empty".into());
                }
                if let Some(t) = self.sample_sizes.iter().find(|&&t| t <= 2 * self.ar_order) {
                    return fail(format!("sample size {t} is too small for ar_order {}", self.ar_order));
                }
                if let Some(d) = self.deltas.iter().find(|d| !(**d > 0.0 && **d <= 1.0)) {
                    return fail(format!("delta {d} is outside (0, 1]"));
                }
            }
            StudyKind::LorenzStudy | StudyKind::Backtest => {
                if self.split_fractions.is_empty() {
                    return fail("split_fractions must be non-empty".into());
                }
                if let Some(f) = self.split_fractions.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
                    return fail(format!("split fraction {f} is outside (0, 1)"));
                }
            }
        }
        if self.study == StudyKind::LorenzStudy {
            let l = &self.lorenz;
            if !(l.dt > 0.0) || l.n_steps <= self.lag_count + 2 * self.folds {
                return fail("lorenz_dt must be positive and lorenz_steps large enough for the lags".into());
            }
        }
        Ok(())
    }

    /// The effective settings as a TOML document.
    pub fn to_toml(&self) -> String {
        let mut t = TomlTable::new();
        let floats = |x: &[f64]| Value::Array(x.iter().map(|v| Value::Float(*v)).collect());
        let ints = |x: &[usize]| Value::Array(x.iter().map(|v| Value::Integer(*v as i64)).collect());
        t.insert("study".into(), Value::String(self.study.to_string()));
        t.insert("replicates".into(), Value::Integer(self.replicates as i64));
        t.insert("seed".into(), Value::String(self.seed.to_string()));
        t.insert("threshold_multipliers".into(), floats(&self.threshold_multipliers));
        t.insert("noise".into(), Value::String(self.noise.to_string()));
        t.insert("folds".into(), Value::Integer(self.folds as i64));
        t.insert("unit_scores".into(), Value::Boolean(self.unit_scores));
        t.insert("classifier_threshold".into(), Value::Float(self.classifier_threshold));
        match self.study {
            StudyKind::SimStudy => {
                t.insert("sample_sizes".into(), ints(&self.sample_sizes));
                t.insert("deltas".into(), floats(&self.deltas));
                t.insert(
                    "processes".into(),
                    Value::Array(self.processes.iter().map(|p| Value::String(p.to_string())).collect()),
                );
                t.insert("ar_order".into(), Value::Integer(self.ar_order as i64));
                t.insert("burn_in".into(), Value::Integer(self.burn_in as i64));
            }
            StudyKind::LorenzStudy => {
                let l = &self.lorenz;
                t.insert("split_fractions".into(), floats(&self.split_fractions));
                t.insert("lag_count".into(), Value::Integer(self.lag_count as i64));
                t.insert("lorenz_sigma".into(), Value::Float(l.sigma));
                t.insert("lorenz_rho".into(), Value::Float(l.rho));
                t.insert("lorenz_beta".into(), Value::Float(l.beta));
                t.insert("lorenz_dt".into(), Value::Float(l.dt));
                t.insert("lorenz_steps".into(), Value::Integer(l.n_steps as i64));
                t.insert("lorenz_initial".into(), floats(&l.initial));
            }
            StudyKind::Backtest => {
                let d = &self.data;
                t.insert("split_fractions".into(), floats(&self.split_fractions));
                t.insert("lag_count".into(), Value::Integer(self.lag_count as i64));
                if let Some(p) = &d.price_file {
                    t.insert("price_file".into(), Value::String(p.display().to_string()));
                }
                let covs: TomlTable = d
                    .covariates
                    .iter()
                    .map(|(k, p)| (k.clone(), Value::String(p.display().to_string())))
                    .collect();
                t.insert("covariates".into(), Value::Table(covs));
                t.insert("date_column".into(), Value::String(d.date_column.clone()));
                t.insert("value_column".into(), Value::String(d.value_column.clone()));
                t.insert("return_kind".into(), Value::String(d.return_kind.to_string()));
            }
        }
        t.to_string()
    }
}

fn to_usize(v: &Value) -> Option<usize> {
    v.as_integer().filter(|&i| i >= 0).map(|i| i as usize)
}

fn to_f64(v: &Value) -> Option<f64> {
    v.as_float().or_else(|| v.as_integer().map(|i| i as f64))
}

fn list<T>(v: &Value, f: impl Fn(&Value) -> Option<T>) -> Option<Vec<T>> {
    match v {
        Value::Array(xs) => xs.iter().map(f).collect(),
        scalar => f(scalar).map(|x| vec![x]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for k in [StudyKind::SimStudy, StudyKind::LorenzStudy, StudyKind::Backtest] {
            StudyConfig::defaults(k).validate().unwrap();
            assert_eq!(k.section().parse::<StudyKind>().unwrap(), k);
        }
        let s = StudyConfig::defaults(StudyKind::SimStudy);
        assert_eq!(s.deltas.len(), 10);
        assert!((s.deltas[9] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sections_override_top_level() {
        let text = "replicates = 7\nseed = 3\n[lorenz-study]\nreplicates = 9\nsplit_fractions = 0.3\n[sim-study]\nreplicates = 11\n";
        let mut c = StudyConfig::defaults(StudyKind::LorenzStudy);
        c.apply_document(text, None).unwrap();
        assert_eq!(c.replicates, 9);
        assert_eq!(c.seed, 3);
        assert_eq!(c.split_fractions, vec![0.3]);
    }

    #[test]
    fn overrides() {
        let mut c = StudyConfig::defaults(StudyKind::Backtest);
        c.apply_override("threshold_multipliers=[3, 4.5]").unwrap();
        c.apply_override("price_file=data/spx.csv").unwrap();
        c.apply_override("covariates.vix = \"vix.csv\"").unwrap();
        c.apply_override("noise=laplace").unwrap();
        assert_eq!(c.threshold_multipliers, vec![3.0, 4.5]);
        assert_eq!(c.data.price_file.as_deref(), Some(Path::new("data/spx.csv")));
        assert_eq!(c.data.covariates["vix"], PathBuf::from("vix.csv"));
        assert_eq!(c.noise, NoiseKind::Laplace);
        assert!(c.apply_override("nonsense=1").is_err());
        assert!(c.apply_override("replicates").is_err());
    }

    #[test]
    fn invalid_settings() {
        let mut c = StudyConfig::defaults(StudyKind::Backtest);
        c.threshold_multipliers.clear();
        assert!(c.validate().is_err());
        let mut c = StudyConfig::defaults(StudyKind::LorenzStudy);
        c.split_fractions = vec![1.0];
        assert!(c.validate().is_err());
        let mut c = StudyConfig::defaults(StudyKind::SimStudy);
        c.replicates = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        for k in [StudyKind::SimStudy, StudyKind::LorenzStudy, StudyKind::Backtest] {
            let c = StudyConfig::defaults(k);
            let mut d = StudyConfig::defaults(k);
            d.replicates = 1;
            let text = c.to_toml().replace("study = ", "# study = ");
            d.apply_document(&text, None).unwrap();
            assert_eq!(c, d);
        }
    }
}
