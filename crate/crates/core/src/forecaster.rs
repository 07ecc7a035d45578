//! Turn a best match into a forecast: evolve `g` mapping the matched past
//! onto the present, correct it by a linear trend in its residuals, and
//! apply both to the values that followed the matched past.

use rayon::prelude::*;

use crate::concordance::ConcordanceMeasure;
use crate::error::{check_pair, Error, Result};
use crate::gp::{evolve, Expr, GpConfig};
use crate::matcher::{best_match, MatchQuery, MatchResult};
use crate::rng::derive_seed;
use crate::timeseries::{Series, Window};

/// Residuals `e_k = present_k - g(past_k)` and their least-squares line
/// `e_k ≈ slope * k + intercept` for `k = 1..=l`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualModel {
    pub residuals: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
}

impl ResidualModel {
    /// Extrapolated residual at window position `k` (1-based).
    pub fn at(&self, k: usize) -> f64 {
        self.slope * k as f64 + self.intercept
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastResult {
    pub measure: ConcordanceMeasure,
    pub matched: MatchResult,
    pub g: Expr,
    pub point_forecasts: Vec<f64>,
    pub residual_model: ResidualModel,
    pub best_fitness: f64,
}

impl ForecastResult {
    /// Flat report record: measure, offset, length, score, expression,
    /// fitness, then the forecasts.
    pub fn to_record(&self) -> Vec<String> {
        let mut rec = vec![
            self.measure.to_string(),
            self.matched.past.start.to_string(),
            self.matched.past.len.to_string(),
            format!("{:.6}", self.matched.score),
            format!("{:.4}", self.g),
            format!("{:.6e}", self.best_fitness),
        ];
        rec.extend(self.point_forecasts.iter().map(|v| format!("{v:.6}")));
        rec
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleForecast {
    pub per_measure: Vec<ForecastResult>,
    /// Per-day mean over the non-`Weak` measures.
    pub ensemble: Vec<f64>,
}

pub fn fit_g(m: &MatchResult, series: &Series, config: &GpConfig) -> Result<(Expr, f64)> {
    let past = series.slice(m.past)?;
    let present = series.slice(m.present_tail)?;
    let out = evolve(config, past, present)?;
    let fitness = out.best.score();
    Ok((out.best.expr, fitness))
}

pub fn residual_model(g: &Expr, past: &[f64], present: &[f64]) -> Result<ResidualModel> {
    check_pair(past, present, 2)?;
    let residuals: Vec<f64> = past
        .iter()
        .zip(present)
        .map(|(p, f)| f - g.eval(*p))
        .collect();
    let (slope, intercept) = least_squares_line(&residuals);
    Ok(ResidualModel {
        residuals,
        slope,
        intercept,
    })
}

/// OLS fit of `y_k` on `k = 1..=n`.
fn least_squares_line(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let k_mean = (n + 1.0) / 2.0;
    let y_mean = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, v) in y.iter().enumerate() {
        let dk = (i + 1) as f64 - k_mean;
        sxy += dk * (v - y_mean);
        sxx += dk * dk;
    }
    let slope = sxy / sxx;
    (slope, y_mean - slope * k_mean)
}

/// Forecast `h` steps from an already evolved `g`.
pub fn forecast_with_g(
    m: &MatchResult,
    series: &Series,
    g: Expr,
    best_fitness: f64,
    h: usize,
) -> Result<ForecastResult> {
    let past = series.slice(m.past)?;
    let present = series.slice(m.present_tail)?;
    let residual_model = residual_model(&g, past, present)?;
    let continuation = series.slice(Window::new(m.past.end(), h))?;
    let l = m.past.len;
    let point_forecasts = continuation
        .iter()
        .enumerate()
        .map(|(j, p)| g.eval(*p) + residual_model.at(l + j + 1))
        .collect();
    Ok(ForecastResult {
        measure: m.measure,
        matched: m.clone(),
        g,
        point_forecasts,
        residual_model,
        best_fitness,
    })
}

pub fn forecast(
    m: &MatchResult,
    series: &Series,
    config: &GpConfig,
    h: usize,
) -> Result<ForecastResult> {
    if m.past.end() + h > series.len() {
        return Err(Error::WindowOutOfRange {
            start: m.past.end(),
            len: h,
            series_len: series.len(),
        });
    }
    let (g, fitness) = fit_g(m, series, config)?;
    forecast_with_g(m, series, g, fitness, h)
}

/// Run match + forecast for each measure with its own derived seed, then
/// average the non-`Weak` forecasts day by day.
pub fn forecast_measures(
    q: &MatchQuery<'_>,
    measures: &[ConcordanceMeasure],
    config: &GpConfig,
) -> Result<EnsembleForecast> {
    if !measures.iter().any(|m| *m != ConcordanceMeasure::Weak) {
        return Err(Error::InvalidConfig(
            "ensemble needs at least one of tau, rho, gini".into(),
        ));
    }
    let per_measure = measures
        .par_iter()
        .map(|&measure| {
            let mq = q.with_measure(measure);
            let cfg = GpConfig {
                rng_seed: derive_seed(config.rng_seed, &[measure.tag()]),
                ..config.clone()
            };
            let m = best_match(&mq)?;
            forecast(&m, q.series, &cfg, q.horizon)
        })
        .collect::<Result<Vec<_>>>()?;

    let members: Vec<&ForecastResult> = per_measure
        .iter()
        .filter(|f| f.measure != ConcordanceMeasure::Weak)
        .collect();
    let ensemble = (0..q.horizon)
        .map(|j| members.iter().map(|f| f.point_forecasts[j]).sum::<f64>() / members.len() as f64)
        .collect();
    Ok(EnsembleForecast {
        per_measure,
        ensemble,
    })
}

/// [`forecast_measures`] over Tau, Rho and Gini.
pub fn forecast_all(q: &MatchQuery<'_>, config: &GpConfig) -> Result<EnsembleForecast> {
    forecast_measures(q, &ConcordanceMeasure::ENSEMBLE, config)
}
