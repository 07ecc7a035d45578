//! Rank-based association measures used to score past-vs-present similarity.
//!
//! All measures work on mid-ranks (ties share their average rank) and return
//! 0 when either input is constant.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_pair, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConcordanceMeasure {
    Tau,
    Rho,
    Gini,
    Weak,
}

impl ConcordanceMeasure {
    pub const ALL: [ConcordanceMeasure; 4] = [Self::Tau, Self::Rho, Self::Gini, Self::Weak];
    /// The measures whose forecasts are averaged into the ensemble.
    pub const ENSEMBLE: [ConcordanceMeasure; 3] = [Self::Tau, Self::Rho, Self::Gini];

    pub fn score(self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            Self::Tau => kendall_tau(x, y),
            Self::Rho => spearman_rho(x, y),
            Self::Gini => gini_gamma(x, y),
            Self::Weak => weak_concordance(x, y),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Tau => "tau",
            Self::Rho => "rho",
            Self::Gini => "gini",
            Self::Weak => "weak",
        }
    }

    /// Stable numeric tag for seed derivation.
    pub(crate) fn tag(self) -> u64 {
        match self {
            Self::Tau => 1,
            Self::Rho => 2,
            Self::Gini => 3,
            Self::Weak => 4,
        }
    }
}

impl fmt::Display for ConcordanceMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConcordanceMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tau" | "kendall" => Ok(Self::Tau),
            "rho" | "spearman" => Ok(Self::Rho),
            "gini" => Ok(Self::Gini),
            "weak" => Ok(Self::Weak),
            other => Err(Error::InvalidConfig(format!(
                "unknown concordance measure `{other}`"
            ))),
        }
    }
}

fn cmp_f64(a: &f64, b: &f64) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|v| *v == x[0])
}

/// Mid-ranks, 1-based: tied values share the mean of the ranks they span.
pub fn mid_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| cmp_f64(&x[a], &x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && x[order[j]] == x[order[i]] {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

/// Number of pairs inside runs of equal values of an already sorted slice.
fn tied_pairs<T, F: Fn(&T, &T) -> bool>(sorted: &[T], eq: F) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if eq(&w[0], &w[1]) {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Merge sort that returns the number of inversions it removed.
fn sort_counting_swaps(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = {
        let (lo, hi) = v.split_at_mut(mid);
        let (blo, bhi) = buf.split_at_mut(mid);
        sort_counting_swaps(lo, blo) + sort_counting_swaps(hi, bhi)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Kendall's tau-b, computed in O(n log n) by counting merge-sort swaps.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 2)?;
    if is_constant(x) || is_constant(y) {
        return Ok(0.0);
    }
    let n = x.len() as u64;
    let n0 = n * (n - 1) / 2;

    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| cmp_f64(&a.0, &b.0).then_with(|| cmp_f64(&a.1, &b.1)));
    let tied_x = tied_pairs(&pairs, |a, b| a.0 == b.0);
    let tied_xy = tied_pairs(&pairs, |a, b| a.0 == b.0 && a.1 == b.1);

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = vec![0.0; ys.len()];
    let discordant = sort_counting_swaps(&mut ys, &mut buf);
    let tied_y = tied_pairs(&ys, |a, b| a == b);

    // concordant - discordant over pairs untied in both margins
    let numerator = (n0 + tied_xy) as f64 - (tied_x + tied_y) as f64 - 2.0 * discordant as f64;
    let denom = (((n0 - tied_x) as f64) * ((n0 - tied_y) as f64)).sqrt();
    Ok((numerator / denom).clamp(-1.0, 1.0))
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

/// Spearman's rho: Pearson correlation of mid-ranks.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 2)?;
    if is_constant(x) || is_constant(y) {
        return Ok(0.0);
    }
    Ok(pearson(&mid_ranks(x), &mid_ranks(y)))
}

/// Gini's cograduation index on mid-ranks.
pub fn gini_gamma(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 2)?;
    if is_constant(x) || is_constant(y) {
        return Ok(0.0);
    }
    let n = x.len();
    let (r, s) = (mid_ranks(x), mid_ranks(y));
    let np1 = (n + 1) as f64;
    let numerator: f64 = r
        .iter()
        .zip(&s)
        .map(|(ri, si)| (np1 - ri - si).abs() - (ri - si).abs())
        .sum();
    let dn = ((n * n) / 2) as f64;
    Ok((numerator / dn).clamp(-1.0, 1.0))
}

fn step_sign(a: f64, b: f64) -> i8 {
    match cmp_f64(&b, &a) {
        Ordering::Greater => 1,
        Ordering::Less => -1,
        Ordering::Equal => 0,
    }
}

/// Share of adjacent steps where both sequences move the same way
/// (up, down, or flat).
pub fn weak_concordance(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y, 2)?;
    if is_constant(x) || is_constant(y) {
        return Ok(0.0);
    }
    let matches = x
        .windows(2)
        .zip(y.windows(2))
        .filter(|(a, b)| step_sign(a[0], a[1]) == step_sign(b[0], b[1]))
        .count();
    Ok(matches as f64 / (x.len() - 1) as f64)
}
