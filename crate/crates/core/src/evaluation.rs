//! Forecast accuracy metrics and the rank-sum model comparison.

use std::fmt;
use std::io::Write;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::concordance::mid_ranks;
use crate::error::{check_pair, Error, Result};

/// Significance level for declaring one model better.
pub const ALPHA: f64 = 0.05;
/// Pooled sizes up to this use exact enumeration when there are no ties.
pub const EXACT_MAX_TOTAL: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Model {
    Arima,
    Hybrid,
}

impl Model {
    pub fn label(self) -> &'static str {
        match self {
            Model::Arima => "ARIMA",
            Model::Hybrid => "Hybrid",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// "1 Week" for 5 business days, "2 Weeks" for 10, and so on.
pub fn case_label(horizon: usize) -> String {
    match horizon {
        5 => "1 Week".into(),
        h if h % 5 == 0 && h > 0 => format!("{} Weeks", h / 5),
        h => format!("{h} Days"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalCase {
    pub label: String,
    pub horizon: usize,
    pub actual: Vec<f64>,
    pub predicted: Vec<f64>,
    /// Last observed value before the horizon; anchors the day-1 direction.
    pub prior_actual: f64,
}

impl EvalCase {
    pub fn new(actual: Vec<f64>, predicted: Vec<f64>, prior_actual: f64) -> Result<Self> {
        check_pair(&actual, &predicted, 1)?;
        let horizon = actual.len();
        Ok(Self {
            label: case_label(horizon),
            horizon,
            actual,
            predicted,
            prior_actual,
        })
    }

    pub fn abs_errors(&self) -> impl Iterator<Item = f64> + '_ {
        self.actual
            .iter()
            .zip(&self.predicted)
            .map(|(a, p)| (a - p).abs())
    }
}

pub fn mape(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(actual, predicted, 1)?;
    if let Some(i) = actual.iter().position(|&a| a == 0.0) {
        return Err(Error::ZeroActual(i));
    }
    let s: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p).abs() / a.abs())
        .sum();
    Ok(100.0 * s / actual.len() as f64)
}

pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pair(actual, predicted, 1)?;
    let s: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p).powi(2))
        .sum();
    Ok((s / actual.len() as f64).sqrt())
}

fn step_sign(from: f64, to: f64) -> i8 {
    let d = to - from;
    if d > 0.0 {
        1
    } else if d < 0.0 {
        -1
    } else {
        0
    }
}

fn directions(prior: f64, path: &[f64]) -> impl Iterator<Item = i8> + '_ {
    std::iter::once(prior)
        .chain(path.iter().copied())
        .zip(path.iter().copied())
        .map(|(a, b)| step_sign(a, b))
}

/// Days whose predicted step direction differs from the actual one.
pub fn direction_mismatches(case: &EvalCase) -> usize {
    directions(case.prior_actual, &case.actual)
        .zip(directions(case.prior_actual, &case.predicted))
        .filter(|(a, p)| a != p)
        .count()
}

/// Percentage of days, pooled over `cases`, whose direction matches.
pub fn efficiency(cases: &[EvalCase]) -> Result<f64> {
    let days: usize = cases.iter().map(|c| c.horizon).sum();
    if days == 0 {
        return Err(Error::Empty("no evaluation days".into()));
    }
    let misses: usize = cases.iter().map(direction_mismatches).sum();
    Ok(100.0 * (days - misses) as f64 / days as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankSum {
    /// Rank sum of the first sample.
    pub w: f64,
    pub z: f64,
    pub p: f64,
    /// Whether `p` came from exact enumeration.
    pub exact: bool,
}

/// Two-sided Wilcoxon rank-sum test of `a` against `b`.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<RankSum> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::TooShort {
            min: 2,
            got: a.len().min(b.len()),
        });
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidSeries("non-finite sample value".into()));
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = mid_ranks(&pooled);
    let w: f64 = ranks[..a.len()].iter().sum();
    let (z, p_normal) = normal_approx(&ranks, a.len(), w);
    let ties = ranks.iter().any(|r| r.fract() != 0.0);
    if !ties && pooled.len() <= EXACT_MAX_TOTAL {
        let p = exact_p(a.len(), b.len(), w as usize);
        return Ok(RankSum {
            w,
            z,
            p,
            exact: true,
        });
    }
    Ok(RankSum {
        w,
        z,
        p: p_normal,
        exact: false,
    })
}

/// Normal approximation with tie-corrected variance and continuity
/// correction; returns `(z, two-sided p)`. A fully tied sample gives `(0, 1)`.
pub fn normal_approx(ranks: &[f64], n: usize, w: f64) -> (f64, f64) {
    let total = ranks.len() as f64;
    let (nf, mf) = (n as f64, total - n as f64);
    let mean = nf * (total + 1.0) / 2.0;
    let tie_term = tie_correction(ranks);
    let var = nf * mf / 12.0 * ((total + 1.0) - tie_term / (total * (total - 1.0)));
    if var <= 0.0 {
        return (0.0, 1.0);
    }
    let diff = w - mean;
    let corrected = (diff.abs() - 0.5).max(0.0).copysign(diff);
    let z = corrected / var.sqrt();
    let std = Normal::standard();
    let p = (2.0 * std.sf(z.abs())).min(1.0);
    (z, p)
}

/// `sum(t^3 - t)` over groups of tied ranks.
fn tie_correction(ranks: &[f64]) -> f64 {
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted
        .chunk_by(|x, y| x == y)
        .map(|g| {
            let t = g.len() as f64;
            t * t * t - t
        })
        .sum()
}

/// Exact two-sided p for rank sum `w` of `n` items among `n + m` untied ranks.
pub fn exact_p(n: usize, m: usize, w: usize) -> f64 {
    let dist = rank_sum_counts(n, n + m);
    let total: f64 = dist.iter().sum();
    let lower: f64 = dist[..=w.min(dist.len() - 1)].iter().sum();
    let upper: f64 = dist[w.min(dist.len())..].iter().sum();
    (2.0 * lower.min(upper) / total).min(1.0)
}

/// `counts[s]` = number of `n`-subsets of `{1..=total}` with sum `s`.
fn rank_sum_counts(n: usize, total: usize) -> Vec<f64> {
    let max_sum = (total - n + 1..=total).sum::<usize>();
    // ways[k][s]: k-subsets of the ranks seen so far summing to s
    let mut ways = vec![vec![0.0; max_sum + 1]; n + 1];
    ways[0][0] = 1.0;
    for r in 1..=total {
        for k in (1..=n.min(r)).rev() {
            for s in (r..=max_sum).rev() {
                ways[k][s] += ways[k - 1][s - r];
            }
        }
    }
    ways.swap_remove(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaseScores {
    pub direction_mismatches: usize,
    pub mape: f64,
    pub rmse: f64,
}

impl CaseScores {
    pub fn of(case: &EvalCase) -> Result<Self> {
        Ok(Self {
            direction_mismatches: direction_mismatches(case),
            mape: mape(&case.actual, &case.predicted)?,
            rmse: rmse(&case.actual, &case.predicted)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseRow {
    pub label: String,
    pub horizon: usize,
    pub arima: CaseScores,
    pub hybrid: CaseScores,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub test: RankSum,
    /// `None` when the difference is not significant at [`ALPHA`].
    pub better: Option<Model>,
}

impl Comparison {
    pub fn verdict(&self) -> &'static str {
        match self.better {
            Some(m) => m.label(),
            None => "no significant difference",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub rows: Vec<CaseRow>,
    pub efficiency_arima: f64,
    pub efficiency_hybrid: f64,
    pub wilcoxon: Comparison,
}

impl EvalReport {
    /// Score paired cases; `hybrid[i]` and `arima[i]` must forecast the same
    /// actuals. The rank-sum test compares pooled per-day absolute errors,
    /// hybrid as the first sample.
    pub fn build(hybrid: &[EvalCase], arima: &[EvalCase]) -> Result<Self> {
        if hybrid.is_empty() {
            return Err(Error::Empty("no evaluation cases".into()));
        }
        if hybrid.len() != arima.len() {
            return Err(Error::LengthMismatch {
                left: hybrid.len(),
                right: arima.len(),
            });
        }
        let mut rows = Vec::with_capacity(hybrid.len());
        for (h, a) in hybrid.iter().zip(arima) {
            if h.actual != a.actual || h.prior_actual != a.prior_actual {
                return Err(Error::InvalidConfig(format!(
                    "case '{}' pairs forecasts of different actuals",
                    h.label
                )));
            }
            rows.push(CaseRow {
                label: h.label.clone(),
                horizon: h.horizon,
                arima: CaseScores::of(a)?,
                hybrid: CaseScores::of(h)?,
            });
        }
        let eh: Vec<f64> = hybrid.iter().flat_map(EvalCase::abs_errors).collect();
        let ea: Vec<f64> = arima.iter().flat_map(EvalCase::abs_errors).collect();
        let test = wilcoxon_rank_sum(&eh, &ea)?;
        let better = (test.p < ALPHA).then(|| {
            let expected = eh.len() as f64 * (eh.len() + ea.len() + 1) as f64 / 2.0;
            if test.w < expected {
                Model::Hybrid
            } else {
                Model::Arima
            }
        });
        Ok(Self {
            rows,
            efficiency_arima: efficiency(arima)?,
            efficiency_hybrid: efficiency(hybrid)?,
            wilcoxon: Comparison { test, better },
        })
    }

    /// `case,model,direction_mismatches,mape,rmse` rows, ARIMA before Hybrid
    /// within each case, then `wilcoxon,<verdict>,<W>,<z>,<p>`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["case", "model", "direction_mismatches", "mape", "rmse"])?;
        for row in &self.rows {
            for (model, s) in [(Model::Arima, &row.arima), (Model::Hybrid, &row.hybrid)] {
                w.write_record([
                    row.label.clone(),
                    model.to_string(),
                    s.direction_mismatches.to_string(),
                    format!("{:.6}", s.mape),
                    format!("{:.6}", s.rmse),
                ])?;
            }
        }
        let t = &self.wilcoxon.test;
        w.write_record([
            "wilcoxon".to_string(),
            self.wilcoxon.verdict().to_string(),
            format!("{:.6}", t.w),
            format!("{:.6}", t.z),
            format!("{:.6}", t.p),
        ])?;
        w.flush().map_err(|e| Error::Io {
            path: "<report>".into(),
            source: e,
        })?;
        Ok(())
    }
}
