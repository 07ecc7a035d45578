//! Exhaustive search for the past segment most concordant with the present.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::concordance::ConcordanceMeasure;
use crate::error::{Error, Result};
use crate::timeseries::{Series, Window};

#[derive(Debug, Clone)]
pub struct MatchQuery<'a> {
    pub series: &'a Series,
    pub present: Window,
    pub measure: ConcordanceMeasure,
    pub min_len: usize,
    pub max_len: usize,
    pub horizon: usize,
}

impl<'a> MatchQuery<'a> {
    /// Query against the trailing `present_len` points of `series`.
    pub fn trailing(
        series: &'a Series,
        present_len: usize,
        measure: ConcordanceMeasure,
        min_len: usize,
        max_len: usize,
        horizon: usize,
    ) -> Result<Self> {
        let q = Self {
            series,
            present: series.trailing(present_len)?,
            measure,
            min_len,
            max_len,
            horizon,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn with_measure(&self, measure: ConcordanceMeasure) -> Self {
        Self {
            measure,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(2 <= self.min_len && self.min_len <= self.max_len && self.max_len <= self.present.len)
        {
            return Err(Error::InvalidConfig(format!(
                "need 2 <= min_len ({}) <= max_len ({}) <= present window ({})",
                self.min_len, self.max_len, self.present.len
            )));
        }
        if self.present.end() != self.series.len() {
            return Err(Error::InvalidConfig(
                "present window must end the series".into(),
            ));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be >= 1".into()));
        }
        Ok(())
    }

    /// The last `len` points of the present window.
    pub fn present_tail(&self, len: usize) -> Window {
        Window::new(self.present.end() - len, len)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub past: Window,
    pub measure: ConcordanceMeasure,
    pub score: f64,
    pub present_tail: Window,
}

/// Score descending, then length descending, then offset descending.
pub fn rank_order(a: &MatchResult, b: &MatchResult) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(b.past.len.cmp(&a.past.len))
        .then(b.past.start.cmp(&a.past.start))
}

/// Score every admissible (offset, length) pair and rank the results.
///
/// A candidate at offset `o` with length `L` is admissible when its
/// `horizon`-point continuation still ends before the present window starts.
pub fn search(q: &MatchQuery<'_>) -> Result<Vec<MatchResult>> {
    let mut results = score_all(q)?;
    results.par_sort_unstable_by(rank_order);
    Ok(results)
}

/// Head of [`search`], selected without sorting the full candidate list.
pub fn best_match(q: &MatchQuery<'_>) -> Result<MatchResult> {
    let all = score_all(q)?;
    Ok(all.into_iter().min_by(rank_order).expect("non-empty"))
}

fn score_all(q: &MatchQuery<'_>) -> Result<Vec<MatchResult>> {
    q.validate()?;
    let values = q.series.values();
    let results: Vec<MatchResult> = (q.min_len..=q.max_len)
        .into_par_iter()
        .flat_map_iter(|len| {
            let tail = q.present_tail(len);
            let present = &values[tail.start..tail.end()];
            let last_offset = q.present.start.checked_sub(len + q.horizon);
            let offsets = match last_offset {
                Some(last) => 0..last + 1,
                None => 0..0,
            };
            offsets.map(move |o| {
                let past = Window::new(o, len);
                let score = q
                    .measure
                    .score(&values[o..o + len], present)
                    .expect("equal lengths >= 2");
                MatchResult {
                    past,
                    measure: q.measure,
                    score,
                    present_tail: tail,
                }
            })
        })
        .collect();
    if results.is_empty() {
        return Err(Error::NoAdmissibleSegment(format!(
            "series of length {} leaves no room before a present window of {} with horizon {}",
            q.series.len(),
            q.present.len,
            q.horizon
        )));
    }
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concordance::ConcordanceMeasure::*;

    fn series(values: Vec<f64>) -> Series {
        Series::from_values("T", values).unwrap()
    }

    /// Zig-zag background with a planted copy of the final `k` points.
    fn planted(k: usize, at: usize, total: usize, transform: impl Fn(f64) -> f64) -> Series {
        let mut v: Vec<f64> = (0..total)
            .map(|i| 50.0 + ((i * 7919) % 13) as f64 + (i as f64 * 0.37).sin() * 4.0)
            .collect();
        let tail: Vec<f64> = v[total - k..].to_vec();
        for (j, t) in tail.iter().enumerate() {
            v[at + j] = transform(*t);
        }
        series(v)
    }

    #[test]
    fn planted_copy_ranks_first() {
        let s = planted(12, 40, 150, |x| x);
        let q = MatchQuery::trailing(&s, 12, Tau, 12, 12, 3).unwrap();
        let best = best_match(&q).unwrap();
        assert_eq!(best.past, Window::new(40, 12));
        assert_eq!(best.score, 1.0);
    }

    #[test]
    fn monotone_transform_scores_one() {
        let s = planted(12, 40, 150, |x| (x / 10.0).exp() + 3.0);
        for m in [Tau, Rho, Gini] {
            let q = MatchQuery::trailing(&s, 12, m, 12, 12, 3).unwrap();
            let best = best_match(&q).unwrap();
            assert_eq!(best.past.start, 40, "{m}");
            assert!((best.score - 1.0).abs() < 1e-12, "{m} {}", best.score);
        }
    }

    #[test]
    fn ties_prefer_longer_then_recent() {
        // strictly increasing series: every candidate scores 1
        let s = series((0..60).map(f64::from).collect());
        let q = MatchQuery::trailing(&s, 10, Tau, 5, 10, 2).unwrap();
        let ranked = search(&q).unwrap();
        assert_eq!(ranked[0].past, Window::new(38, 10));
        assert_eq!(ranked[1].past, Window::new(37, 10));
        assert!(ranked.iter().all(|r| r.score == 1.0));
        assert_eq!(ranked.last().unwrap().past, Window::new(0, 5));
    }

    #[test]
    fn continuation_constraint_and_rescoring() {
        let s = planted(15, 10, 120, |x| x * 1.5);
        let q = MatchQuery::trailing(&s, 20, Rho, 8, 15, 5).unwrap();
        let ranked = search(&q).unwrap();
        let expected: usize = (8..=15).map(|l| q.present.start - l - 5 + 1).sum();
        assert_eq!(ranked.len(), expected);
        for r in &ranked {
            assert!(r.past.end() + q.horizon <= q.present.start);
            assert_eq!(r.present_tail.end(), s.len());
            let again = r
                .measure
                .score(s.slice(r.past).unwrap(), s.slice(r.present_tail).unwrap())
                .unwrap();
            assert_eq!(again.to_bits(), r.score.to_bits());
        }
        assert_eq!(search(&q).unwrap(), ranked);
    }

    #[test]
    fn too_short_series() {
        let s = series((0..25).map(|i| (i as f64).sin()).collect());
        let q = MatchQuery::trailing(&s, 20, Tau, 10, 20, 5).unwrap();
        assert!(matches!(search(&q), Err(Error::NoAdmissibleSegment(_))));
    }

    #[test]
    fn query_validation() {
        let s = series((0..50).map(f64::from).collect());
        assert!(MatchQuery::trailing(&s, 10, Tau, 1, 5, 1).is_err());
        assert!(MatchQuery::trailing(&s, 10, Tau, 6, 5, 1).is_err());
        assert!(MatchQuery::trailing(&s, 10, Tau, 5, 11, 1).is_err());
        assert!(MatchQuery::trailing(&s, 10, Tau, 5, 10, 0).is_err());
        assert!(MatchQuery::trailing(&s, 60, Tau, 5, 10, 1).is_err());
    }
}
