use std::path::Path;

use rayon::prelude::*;

use super::{create_dir, derive_seed, mean_sd, write_text, HProcess, Result, StudyConfig, StudyError, StudyKind, Table};
use crate::estimate::{estimate_delta, h_proxy, population_sd, yule_walker_ar};
use crate::series::format_f64;
use crate::simulate::simulate_sv;

/// Mean and spread of Δ̂ over the replicates of one table cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SimCell {
    pub process: HProcess,
    pub sample_size: usize,
    pub delta: f64,
    pub multiplier: f64,
    pub mean: f64,
    pub sd: f64,
    /// Replicates in which no observation reached the threshold.
    pub warnings: usize,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTable {
    pub cells: Vec<SimCell>,
    pub ar_order: usize,
}

impl SimTable {
    pub fn cell(&self, process: HProcess, sample_size: usize, delta: f64, multiplier: f64) -> Option<&SimCell> {
        self.cells.iter().find(|c| {
            c.process == process
                && c.sample_size == sample_size
                && (c.delta - delta).abs() < 1e-9
                && (c.multiplier - multiplier).abs() < 1e-9
        })
    }

    fn blocks(&self) -> Vec<(HProcess, usize)> {
        let mut b: Vec<(HProcess, usize)> = Vec::new();
        for c in &self.cells {
            if !b.contains(&(c.process, c.sample_size)) {
                b.push((c.process, c.sample_size));
            }
        }
        b
    }

    fn axes(&self) -> (Vec<f64>, Vec<f64>) {
        let mut deltas: Vec<f64> = Vec::new();
        let mut ks: Vec<f64> = Vec::new();
        for c in &self.cells {
            if !deltas.contains(&c.delta) {
                deltas.push(c.delta);
            }
            if !ks.contains(&c.multiplier) {
                ks.push(c.multiplier);
            }
        }
        (deltas, ks)
    }

    /// One row per (process, size, statistic, k) and one column per true Δ.
    pub fn wide(&self) -> Table {
        let (deltas, ks) = self.axes();
        let mut headers = vec!["process".to_string(), "sample_size".into(), "statistic".into(), "k".into()];
        headers.extend(deltas.iter().map(|d| format!("delta_{}", format_f64(*d))));
        let mut t = Table::new(headers);
        for (p, n) in self.blocks() {
            for stat in ["mean", "sd"] {
                for &k in &ks {
                    let mut row = vec![p.to_string(), n.to_string(), stat.to_string(), format_f64(k)];
                    for &d in &deltas {
                        let c = self.cell(p, n, d, k).expect("full grid");
                        row.push(format_f64(if stat == "mean" { c.mean } else { c.sd }));
                    }
                    t.push(row);
                }
            }
        }
        t
    }

    pub fn long(&self) -> Table {
        let mut t = Table::new([
            "process", "sample_size", "delta", "k", "mean", "sd", "warnings", "replicates",
        ]);
        for c in &self.cells {
            t.push(vec![
                c.process.to_string(),
                c.sample_size.to_string(),
                format_f64(c.delta),
                format_f64(c.multiplier),
                format_f64(c.mean),
                format_f64(c.sd),
                c.warnings.to_string(),
                c.replicates.to_string(),
            ]);
        }
        t
    }

    pub fn render(&self) -> String {
        let (deltas, ks) = self.axes();
        let mut out = String::new();
        for (p, n) in self.blocks() {
            out.push_str(&format!("H process {p}, T = {n} - {}\n", self.ar_order));
            let mut headers = vec!["".to_string()];
            headers.extend(deltas.iter().map(|d| format!("{d:.2}")));
            let mut t = Table::new(headers);
            let mut warnings = 0;
            for stat in ["avg", "std. dev."] {
                for &k in &ks {
                    let mut row = vec![format!("{stat} k={k}")];
                    for &d in &deltas {
                        let c = self.cell(p, n, d, k).expect("full grid");
                        warnings += if stat == "avg" { c.warnings } else { 0 };
                        row.push(format!("{:.3}", if stat == "avg" { c.mean } else { c.sd }));
                    }
                    t.push(row);
                }
            }
            out.push_str(&t.render());
            out.push_str(&format!("replicates without exceedances: {warnings}\n\n"));
        }
        out
    }

    /// Writes `sim_table.csv`, `sim_table_long.csv` and `sim_table.txt`.
    pub fn write(&self, out_dir: &Path) -> Result<()> {
        create_dir(out_dir)?;
        self.wide().write_csv(&out_dir.join("sim_table.csv"))?;
        self.long().write_csv(&out_dir.join("sim_table_long.csv"))?;
        write_text(&out_dir.join("sim_table.txt"), &self.render())
    }
}

/// One replicate: Δ̂ at each multiplier and whether the threshold was
/// never reached.
fn replicate(config: &StudyConfig, process: HProcess, n: usize, delta: f64, seed: u64) -> Result<Vec<(f64, bool)>> {
    let spec = process.spec(delta, config.burn_in)?;
    let bundle = simulate_sv(&spec, n, config.noise, seed);
    let eps = &bundle.epsilon;
    let h_hat = h_proxy(eps);
    let p = config.ar_order;
    let ar = yule_walker_ar(&h_hat, p)?;
    let h_bar = ar.fitted(&h_hat);
    let sigma = population_sd(eps);
    config
        .threshold_multipliers
        .iter()
        .map(|&k| {
            let est = estimate_delta(&eps[p..], &h_bar, k * sigma, config.noise)?;
            Ok((est.delta_hat, est.exceedances == 0))
        })
        .collect()
}

/// Simulates every (process, sample size, Δ) cell `replicates` times, fits
/// an AR model to the log-volatility proxy by Yule-Walker and estimates Δ
/// at each threshold multiple of the sample standard deviation.
pub fn run_sim_study(config: &StudyConfig) -> Result<SimTable> {
    if config.study != StudyKind::SimStudy {
        return Err(StudyError::Config(format!("expected a sim-study config, got {}", config.study)));
    }
    config.validate()?;
    let mut cells = Vec::new();
    for &p in &config.processes {
        for &n in &config.sample_sizes {
            for &d in &config.deltas {
                cells.push((p, n, d));
            }
        }
    }
    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| (0..config.replicates as u64).map(move |r| (c, r)))
        .collect();
    let results: Vec<Result<Vec<(f64, bool)>>> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let (p, n, d) = cells[c];
            let key = (p.code() << 48) | ((n as u64) << 20) | super::real_key(d);
            replicate(config, p, n, d, derive_seed(config.seed, key, r))
        })
        .collect();
    let results: Vec<Vec<(f64, bool)>> = results.into_iter().collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (c, chunk) in results.chunks(config.replicates).enumerate() {
        let (process, sample_size, delta) = cells[c];
        for (j, &k) in config.threshold_multipliers.iter().enumerate() {
            let values: Vec<f64> = chunk.iter().map(|r| r[j].0).collect();
            let (mean, sd) = mean_sd(&values).expect("replicates > 0");
            out.push(SimCell {
                process,
                sample_size,
                delta,
                multiplier: k,
                mean,
                sd,
                warnings: chunk.iter().filter(|r| r[j].1).count(),
                replicates: config.replicates,
            });
        }
    }
    Ok(SimTable {
        cells: out,
        ar_order: config.ar_order,
    })
}
