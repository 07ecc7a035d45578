//! ARIMA(p, d, q) baseline fitted by conditional sum of squares, with BIC
//! order selection.
//!
//! The differenced series `w` is modelled in mean form:
//!
//! ```text
//! w_t - mu = sum_i ar_i (w_{t-i} - mu) + e_t + sum_j ma_j e_{t-j}
//! ```
//!
//! Innovations before `t = max(p, q)` are fixed at zero.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};

pub const MAX_ORDER: usize = 5;
pub const MAX_D: usize = 2;
/// Minimum differenced observations per estimated parameter.
pub const OBS_PER_PARAM: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArimaModel {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    /// Mean of the differenced series.
    pub intercept: f64,
    pub sigma2: f64,
    pub bic: f64,
    /// Innovations entering the sum of squares.
    pub n_obs: usize,
}

impl ArimaModel {
    /// Whether the AR polynomial has all roots outside the unit circle,
    /// checked by stepping the coefficients down to partial autocorrelations.
    pub fn is_stationary(&self) -> bool {
        stationary(&self.ar)
    }

    /// Whether the MA polynomial has all roots outside the unit circle.
    pub fn is_invertible(&self) -> bool {
        invertible(&self.ma)
    }

    /// One-line summary: orders, coefficients, sigma2, BIC, and a flag for
    /// non-stationary AR fits.
    pub fn summary(&self) -> String {
        let list = |v: &[f64]| {
            v.iter()
                .map(|c| format!("{c:.4}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        format!(
            "ARIMA({},{},{}) intercept={:.4} ar=[{}] ma=[{}] sigma2={:.6} bic={:.4}{}",
            self.p,
            self.d,
            self.q,
            self.intercept,
            list(&self.ar),
            list(&self.ma),
            self.sigma2,
            self.bic,
            if self.is_stationary() {
                ""
            } else {
                " non-stationary"
            }
        )
    }

    /// Sum of squared innovations on the differenced series.
    pub fn css(&self, x: &[f64]) -> Result<f64> {
        let w = difference(x, self.d)?;
        Ok(css(&w, self.intercept, &self.ar, &self.ma))
    }
}

/// AR stationarity by stepping the coefficients down to partial
/// autocorrelations, each of which must lie strictly inside (-1, 1).
fn stationary(ar: &[f64]) -> bool {
    let mut a = ar.to_vec();
    while let Some(&k) = a.last() {
        if k.is_nan() || k.abs() >= 1.0 {
            return false;
        }
        let m = a.len() - 1;
        let denom = 1.0 - k * k;
        a = (0..m).map(|j| (a[j] + k * a[m - 1 - j]) / denom).collect();
    }
    true
}

fn invertible(ma: &[f64]) -> bool {
    stationary(&ma.iter().map(|t| -t).collect::<Vec<_>>())
}

pub fn difference(x: &[f64], d: usize) -> Result<Vec<f64>> {
    if x.len() <= d {
        return Err(Error::TooShort {
            min: d + 1,
            got: x.len(),
        });
    }
    let mut out = x.to_vec();
    for _ in 0..d {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(out)
}

/// Invert `difference`: `heads[k]` is the first value of the k-times
/// differenced series, for `k = 0..d`.
pub fn integrate(w: &[f64], heads: &[f64]) -> Vec<f64> {
    let mut out = w.to_vec();
    for &head in heads.iter().rev() {
        let mut level = Vec::with_capacity(out.len() + 1);
        level.push(head);
        for v in &out {
            let prev = *level.last().expect("non-empty");
            level.push(prev + v);
        }
        out = level;
    }
    out
}

/// Conditional innovations of `w` under the given parameters.
pub fn innovations(w: &[f64], mu: f64, ar: &[f64], ma: &[f64]) -> Vec<f64> {
    let start = ar.len().max(ma.len());
    let mut e = vec![0.0; w.len()];
    for t in start..w.len() {
        let mut v = w[t] - mu;
        for (i, phi) in ar.iter().enumerate() {
            v -= phi * (w[t - 1 - i] - mu);
        }
        for (j, theta) in ma.iter().enumerate() {
            v -= theta * e[t - 1 - j];
        }
        e[t] = v;
    }
    e
}

fn css(w: &[f64], mu: f64, ar: &[f64], ma: &[f64]) -> f64 {
    let start = ar.len().max(ma.len());
    let s: f64 = innovations(w, mu, ar, ma)[start..]
        .iter()
        .map(|e| e * e)
        .sum();
    if s.is_finite() {
        s
    } else {
        f64::INFINITY
    }
}

/// Least-squares AR(p) coefficients with intercept; zeros if singular.
fn ols_ar(w: &[f64], p: usize) -> Vec<f64> {
    if p == 0 {
        return Vec::new();
    }
    let k = p + 1;
    let mut xtx = vec![vec![0.0; k]; k];
    let mut xty = vec![0.0; k];
    for t in p..w.len() {
        let row: Vec<f64> = std::iter::once(1.0)
            .chain((1..=p).map(|i| w[t - i]))
            .collect();
        for a in 0..k {
            xty[a] += row[a] * w[t];
            for b in 0..k {
                xtx[a][b] += row[a] * row[b];
            }
        }
    }
    match solve(xtx, xty) {
        Some(beta) => beta[1..].to_vec(),
        None => vec![0.0; p],
    }
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let (top, rest) = a.split_at_mut(col + 1);
        let pivot = &top[col];
        for (offset, row) in rest.iter_mut().enumerate() {
            let factor = row[col] / pivot[col];
            for (r, p) in row[col..].iter_mut().zip(&pivot[col..]) {
                *r -= factor * p;
            }
            b[col + 1 + offset] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

pub fn fit(x: &[f64], p: usize, d: usize, q: usize) -> Result<ArimaModel> {
    if p > MAX_ORDER || q > MAX_ORDER || d > MAX_D {
        return Err(Error::InvalidConfig(format!(
            "orders ({p},{d},{q}) exceed bounds p,q <= {MAX_ORDER}, d <= {MAX_D}"
        )));
    }
    let w = difference(x, d)?;
    let k = p + q + 1;
    if w.len() < OBS_PER_PARAM * k {
        return Err(Error::TooShort {
            min: OBS_PER_PARAM * k + d,
            got: x.len(),
        });
    }

    let mean = w.iter().sum::<f64>() / w.len() as f64;
    let sd = (w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / w.len() as f64).sqrt();
    let mut start = vec![mean];
    start.extend(ols_ar(&w, p));
    start.extend(std::iter::repeat_n(0.0, q));
    let mut steps = vec![(0.1 * sd).max(1e-3)];
    steps.extend(std::iter::repeat_n(0.1, p + q));

    // With non-invertible MA terms the conditional innovations explode and the
    // surface is too rough for the simplex to settle. AR terms are left free;
    // non-stationary fits are reported through `is_stationary`.
    let objective = |theta: &[f64]| {
        let (ar, ma) = theta[1..].split_at(p);
        if invertible(ma) {
            css(&w, theta[0], ar, ma)
        } else {
            f64::INFINITY
        }
    };
    let best = nelder_mead(objective, &start, &steps, NelderMeadOptions::default())?;

    let n_eff = w.len() - p.max(q);
    let sigma2 = (best.fx / n_eff as f64).max(f64::MIN_POSITIVE);
    let bic = n_eff as f64 * sigma2.ln() + k as f64 * (n_eff as f64).ln();
    Ok(ArimaModel {
        p,
        d,
        q,
        intercept: best.x[0],
        ar: best.x[1..=p].to_vec(),
        ma: best.x[1 + p..].to_vec(),
        sigma2,
        bic,
        n_obs: n_eff,
    })
}

/// Fit every `(p, q)` on the grid and keep the lowest BIC; ties go to the
/// smaller `p + q`, then the smaller `p`. Grid points that fail to fit
/// (too little data, no convergence) are skipped.
pub fn select_order(x: &[f64], max_p: usize, max_q: usize, d: usize) -> Result<ArimaModel> {
    let grid: Vec<(usize, usize)> = (0..=max_p)
        .flat_map(|p| (0..=max_q).map(move |q| (p, q)))
        .collect();
    let fits: Vec<(usize, usize, Result<ArimaModel>)> = grid
        .par_iter()
        .map(|&(p, q)| (p, q, fit(x, p, d, q)))
        .collect();
    let mut failures = Vec::new();
    let mut best: Option<ArimaModel> = None;
    for (p, q, r) in fits {
        match r {
            Ok(m) => {
                let better = match &best {
                    None => true,
                    Some(b) => m
                        .bic
                        .total_cmp(&b.bic)
                        .then((m.p + m.q).cmp(&(b.p + b.q)))
                        .then(m.p.cmp(&b.p))
                        .is_lt(),
                };
                if better {
                    best = Some(m);
                }
            }
            Err(e) => failures.push(format!("({p},{d},{q}): {e}")),
        }
    }
    best.ok_or_else(|| Error::AllFitsFailed(failures.join("; ")))
}

/// `h`-step forecast on the original scale.
pub fn forecast(m: &ArimaModel, x: &[f64], h: usize) -> Result<Vec<f64>> {
    if h == 0 {
        return Ok(Vec::new());
    }
    let w = difference(x, m.d)?;
    let mut ext = w.clone();
    let mut e = innovations(&w, m.intercept, &m.ar, &m.ma);
    for _ in 0..h {
        let t = ext.len();
        let mut v = m.intercept;
        for (i, phi) in m.ar.iter().enumerate() {
            v += phi * (lag(&ext, t, i + 1).unwrap_or(m.intercept) - m.intercept);
        }
        for (j, theta) in m.ma.iter().enumerate() {
            v += theta * lag(&e, t, j + 1).unwrap_or(0.0);
        }
        ext.push(v);
        e.push(0.0);
    }
    let mut out = ext[w.len()..].to_vec();
    // undo each differencing level, anchored at that level's last observation
    for k in (0..m.d).rev() {
        let level = difference(x, k)?;
        let mut acc = *level.last().expect("non-empty");
        for v in out.iter_mut() {
            acc += *v;
            *v = acc;
        }
    }
    Ok(out)
}

fn lag(v: &[f64], t: usize, k: usize) -> Option<f64> {
    t.checked_sub(k).map(|i| v[i])
}
