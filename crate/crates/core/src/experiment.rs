//! End-to-end runs: hold out each horizon, forecast it with the hybrid
//! ensemble and the ARIMA baseline, and score both.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arima::{self, ArimaModel, MAX_D, MAX_ORDER};
use crate::concordance::ConcordanceMeasure;
use crate::error::{Error, Result};
use crate::evaluation::{case_label, EvalCase, EvalReport};
use crate::forecaster::{forecast_measures, EnsembleForecast};
use crate::gp::GpConfig;
use crate::matcher::MatchQuery;
use crate::rng::derive_seed;
use crate::timeseries::{load_csv, Series, DEFAULT_VALUE_COLUMN};

const HORIZON_TAG: u64 = 0x484f_5249;
const ROLLING_TAG: u64 = 0x524f_4c4c;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: PathBuf,
    pub column: String,
    pub present_window: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub measures: Vec<ConcordanceMeasure>,
    pub horizons: Vec<usize>,
    pub arima_d: usize,
    pub arima_max_p: usize,
    pub arima_max_q: usize,
    /// Master seed. Each horizon (and each rolling day) derives its own GP
    /// seed from it, so `gp.rng_seed` is not used by runs.
    pub seed: u64,
    pub report: PathBuf,
    pub paths: PathBuf,
    /// Re-forecast one day ahead from every origin inside the horizon
    /// instead of forecasting the whole horizon from its start.
    pub rolling: bool,
    pub gp: GpConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: PathBuf::from("prices.csv"),
            column: DEFAULT_VALUE_COLUMN.to_string(),
            present_window: 30,
            min_len: 10,
            max_len: 30,
            measures: ConcordanceMeasure::ENSEMBLE.to_vec(),
            horizons: vec![5, 10, 15, 20],
            arima_d: 1,
            arima_max_p: MAX_ORDER,
            arima_max_q: MAX_ORDER,
            seed: 0,
            report: PathBuf::from("report.csv"),
            paths: PathBuf::from("paths.csv"),
            rolling: false,
            gp: GpConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return bad(format!(
                "horizons must be non-empty and >= 1, got {:?}",
                self.horizons
            ));
        }
        if !(2 <= self.min_len
            && self.min_len <= self.max_len
            && self.max_len <= self.present_window)
        {
            return bad(format!(
                "need 2 <= min_len ({}) <= max_len ({}) <= present_window ({})",
                self.min_len, self.max_len, self.present_window
            ));
        }
        if !self.measures.iter().any(|m| *m != ConcordanceMeasure::Weak) {
            return bad("measures must include at least one of tau, rho, gini".into());
        }
        if self.arima_d > MAX_D || self.arima_max_p > MAX_ORDER || self.arima_max_q > MAX_ORDER {
            return bad(format!(
                "ARIMA bounds: d <= {MAX_D}, p and q <= {MAX_ORDER}; got d={} p={} q={}",
                self.arima_d, self.arima_max_p, self.arima_max_q
            ));
        }
        self.gp.validate()
    }
}

/// Canonical TOML dump of every resolved parameter.
pub fn print_config(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("RunConfig always serializes")
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
}

/// Forecasts for one held-out horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonRun {
    pub horizon: usize,
    pub dates: Vec<NaiveDate>,
    pub actual: Vec<f64>,
    pub prior_actual: f64,
    pub hybrid: Vec<f64>,
    pub arima: Vec<f64>,
    /// One ensemble per forecast origin: a single one, or one per day when rolling.
    pub ensembles: Vec<EnsembleForecast>,
    /// ARIMA models, aligned with `ensembles`.
    pub arima_models: Vec<ArimaModel>,
}

impl HorizonRun {
    pub fn label(&self) -> String {
        case_label(self.horizon)
    }

    fn cases(&self) -> Result<(EvalCase, EvalCase)> {
        Ok((
            EvalCase::new(self.actual.clone(), self.hybrid.clone(), self.prior_actual)?,
            EvalCase::new(self.actual.clone(), self.arima.clone(), self.prior_actual)?,
        ))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub report: EvalReport,
    pub runs: Vec<HorizonRun>,
}

impl ExperimentOutput {
    pub fn report_csv(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.report.write_csv(&mut buf)?;
        Ok(buf)
    }

    /// Long-format `date,actual,hybrid,arima`, one block per horizon in
    /// configured order.
    pub fn paths_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["date", "actual", "hybrid", "arima"])?;
        for run in &self.runs {
            for i in 0..run.horizon {
                w.write_record([
                    run.dates[i].format("%Y-%m-%d").to_string(),
                    format!("{:.6}", run.actual[i]),
                    format!("{:.6}", run.hybrid[i]),
                    format!("{:.6}", run.arima[i]),
                ])?;
            }
        }
        w.into_inner()
            .map_err(|e| Error::InvalidConfig(format!("path CSV buffer: {e}")))
    }
}

/// Load `cfg.input`, evaluate every horizon, and write the report and path
/// files. Nothing is written unless every stage succeeds.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentOutput> {
    cfg.validate().map_err(|e| e.in_stage("config"))?;
    let series = load_csv(&cfg.input, &cfg.column).map_err(|e| e.in_stage("load"))?;
    let out = evaluate_series(&series, cfg)?;
    let report = out.report_csv().map_err(|e| e.in_stage("report"))?;
    let paths = out.paths_csv().map_err(|e| e.in_stage("report"))?;
    write_all(&[(&cfg.report, &report), (&cfg.paths, &paths)]).map_err(|e| e.in_stage("write"))?;
    Ok(out)
}

/// The in-memory part of [`run_experiment`].
pub fn evaluate_series(series: &Series, cfg: &RunConfig) -> Result<ExperimentOutput> {
    cfg.validate().map_err(|e| e.in_stage("config"))?;
    let runs = cfg
        .horizons
        .par_iter()
        .map(|&h| run_horizon(series, cfg, h))
        .collect::<Result<Vec<_>>>()?;
    let (hybrid, arima): (Vec<EvalCase>, Vec<EvalCase>) = runs
        .iter()
        .map(HorizonRun::cases)
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("evaluate"))?
        .into_iter()
        .unzip();
    let report = EvalReport::build(&hybrid, &arima).map_err(|e| e.in_stage("evaluate"))?;
    Ok(ExperimentOutput { report, runs })
}

fn run_horizon(series: &Series, cfg: &RunConfig, h: usize) -> Result<HorizonRun> {
    let label = case_label(h);
    let n = series.len();
    if h + 2 > n {
        return Err(Error::TooShort { min: h + 2, got: n }.in_stage(format!("holdout ({label})")));
    }
    let origin = n - h;
    // one step per origin when rolling, the whole horizon otherwise
    let origins: Vec<(usize, usize)> = if cfg.rolling {
        (0..h).map(|j| (origin + j, 1)).collect()
    } else {
        vec![(origin, h)]
    };

    let mut hybrid = Vec::with_capacity(h);
    let mut arima_path = Vec::with_capacity(h);
    let mut ensembles = Vec::with_capacity(origins.len());
    let mut arima_models = Vec::with_capacity(origins.len());
    for (j, &(end, steps)) in origins.iter().enumerate() {
        // Models only ever see this prefix, never the held-out values.
        let prefix = series.prefix(end)?;
        let seed = if cfg.rolling {
            derive_seed(cfg.seed, &[HORIZON_TAG, h as u64, ROLLING_TAG, j as u64])
        } else {
            derive_seed(cfg.seed, &[HORIZON_TAG, h as u64])
        };
        let stage = |what: &str| format!("{what} ({label})");

        let gp = GpConfig {
            rng_seed: seed,
            ..cfg.gp.clone()
        };
        let ens = MatchQuery::trailing(
            &prefix,
            cfg.present_window,
            cfg.measures[0],
            cfg.min_len,
            cfg.max_len,
            steps,
        )
        .and_then(|q| forecast_measures(&q, &cfg.measures, &gp))
        .map_err(|e| e.in_stage(stage("hybrid")))?;

        let values = prefix.values();
        let model = arima::select_order(values, cfg.arima_max_p, cfg.arima_max_q, cfg.arima_d)
            .and_then(|m| arima::forecast(&m, values, steps).map(|f| (m, f)))
            .map_err(|e| e.in_stage(stage("arima")));
        let (model, f) = model?;

        hybrid.extend_from_slice(&ens.ensemble);
        arima_path.extend(f);
        ensembles.push(ens);
        arima_models.push(model);
    }

    let values = series.values();
    Ok(HorizonRun {
        horizon: h,
        dates: series.dates()[origin..].to_vec(),
        actual: values[origin..].to_vec(),
        prior_actual: values[origin - 1],
        hybrid,
        arima: arima_path,
        ensembles,
        arima_models,
    })
}

/// Write every file to a sibling temporary, then rename them all into
/// place, so a failed write leaves no partial outputs.
fn write_all(files: &[(&PathBuf, &Vec<u8>)]) -> Result<()> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Io { path, source }
    };
    let mut staged = Vec::with_capacity(files.len());
    for (path, bytes) in files {
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".partial");
        let tmp = PathBuf::from(tmp);
        let written = fs::File::create(&tmp)
            .and_then(|mut f| f.write_all(bytes).and_then(|_| f.sync_all()))
            .map_err(io(&tmp));
        if let Err(e) = written {
            let _ = fs::remove_file(&tmp);
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            return Err(e);
        }
        staged.push((tmp, path));
    }
    for (tmp, path) in staged {
        fs::rename(&tmp, path).map_err(io(path))?;
    }
    Ok(())
}
