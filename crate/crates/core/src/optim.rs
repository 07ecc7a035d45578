//! Nelder-Mead simplex minimizer.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Iteration cap per simplex run.
    pub max_iter: usize,
    /// Converged when `f_worst - f_best <= ftol * (|f_best| + ftol)`.
    pub ftol: f64,
    /// Also converged when every vertex is within `xtol` (per coordinate,
    /// relative to `1 + |x_best|`) of the best one.
    pub xtol: f64,
    /// Fresh simplices built around the incumbent after convergence.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iter: 20_000,
            ftol: 1e-12,
            xtol: 1e-10,
            restarts: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimize `f` from `start`, with initial simplex edges `steps`.
/// NaN objective values are treated as +inf.
pub fn nelder_mead<F>(
    f: F,
    start: &[f64],
    steps: &[f64],
    opts: NelderMeadOptions,
) -> Result<Minimum>
where
    F: Fn(&[f64]) -> f64,
{
    assert_eq!(start.len(), steps.len());
    let f = |x: &[f64]| sanitize(f(x));
    let mut best = Minimum {
        x: start.to_vec(),
        fx: f(start),
        iterations: 0,
    };
    if start.is_empty() {
        return Ok(best);
    }
    for round in 0..=opts.restarts {
        let run = simplex_run(&f, &best.x, steps, opts)?;
        let improved = run.fx < best.fx;
        let tiny = (best.fx - run.fx).abs() <= opts.ftol * (best.fx.abs() + opts.ftol);
        best = Minimum {
            iterations: best.iterations + run.iterations,
            ..if improved { run } else { best }
        };
        if round > 0 && tiny {
            break;
        }
    }
    Ok(best)
}

fn simplex_run<F>(f: &F, start: &[f64], steps: &[f64], opts: NelderMeadOptions) -> Result<Minimum>
where
    F: Fn(&[f64]) -> f64,
{
    const ALPHA: f64 = 1.0;
    const GAMMA: f64 = 2.0;
    const RHO: f64 = 0.5;
    const SIGMA: f64 = 0.5;

    let n = start.len();
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(start.to_vec());
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += steps[i];
        pts.push(v);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();

    let along = |from: &[f64], to: &[f64], t: f64| -> Vec<f64> {
        from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect()
    };

    for iter in 0..opts.max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let (fb, fw) = (vals[0], vals[n]);
        let collapsed = pts[1..].iter().all(|p| {
            p.iter()
                .zip(&pts[0])
                .all(|(a, b)| (a - b).abs() <= opts.xtol * (1.0 + b.abs()))
        });
        if fb.is_finite() && (collapsed || fw - fb <= opts.ftol * (fb.abs() + opts.ftol)) {
            return Ok(Minimum {
                x: pts.swap_remove(0),
                fx: fb,
                iterations: iter,
            });
        }

        let mut centroid = vec![0.0; n];
        for p in &pts[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        // reflect the worst vertex through the centroid of the rest
        let xr = along(&centroid, &pts[n], -ALPHA);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = along(&centroid, &pts[n], -GAMMA);
            let fe = f(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, fc) = if fr < vals[n] {
                let xc = along(&centroid, &xr, RHO);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(&centroid, &pts[n], RHO);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < vals[n].min(fr) {
                pts[n] = xc;
                vals[n] = fc;
            } else {
                for i in 1..=n {
                    pts[i] = along(&pts[0], &pts[i], SIGMA);
                    vals[i] = f(&pts[i]);
                }
            }
        }
    }
    Err(Error::NonConvergence(opts.max_iter))
}
