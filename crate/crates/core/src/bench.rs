//! Solver timings over a ladder of single-block stochastic matrices and a
//! log-log fit of runtime against dimension.

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::poset::DEFAULT_EXTENSION_CAP;
use crate::solver::{solve, SolveOptions};
use crate::stochastic::{generate_stochastic_mx, parse_dfac};

pub const DEFAULT_LADDER: [u64; 5] = [13, 21, 34, 55, 89];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: u64,
    pub mean_seconds: f64,
    pub std_seconds: f64,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    /// Exponent `p` in `time ≈ c · n^p`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub fit: Option<ScalingFit>,
}

/// Least-squares line through `(ln x, ln y)`.
pub fn loglog_fit(points: &[(f64, f64)]) -> Option<ScalingFit> {
    if points.len() < 2 || points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return None;
    }
    let k = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(ScalingFit { slope, intercept: my - slope * mx, r_squared })
}

/// Times `solve` on `generate_stochastic_mx([n])` for each Fibonacci `n`.
/// Matrix generation is excluded from the timing.
pub fn run_bench(sizes: &[u64], reps: usize, opts: &SolveOptions) -> Result<BenchReport> {
    if reps == 0 {
        return Err(Error::InvalidInput("reps must be positive".into()));
    }
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let m = generate_stochastic_mx(&parse_dfac(&[n])?, DEFAULT_EXTENSION_CAP)?.to_linear();
        // untimed warm-up so cold caches do not land in the first sample
        solve(&m, opts)?;
        let mut times = Vec::with_capacity(reps);
        for _ in 0..reps {
            let start = Instant::now();
            let s = solve(&m, opts)?;
            times.push(start.elapsed().as_secs_f64());
            debug_assert_eq!(s.len(), n as usize);
        }
        let mean = times.iter().sum::<f64>() / reps as f64;
        let var = if reps > 1 {
            times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (reps - 1) as f64
        } else {
            0.0
        };
        rows.push(BenchRow { n, mean_seconds: mean, std_seconds: var.sqrt(), reps });
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.mean_seconds)).collect();
    Ok(BenchReport { fit: loglog_fit(&pts), rows })
}

impl BenchReport {
    /// Plain-text table with one line per size and the fit underneath.
    pub fn table(&self) -> String {
        let mut out = String::from("n\tmean_s\tstd_s\n");
        for r in &self.rows {
            out.push_str(&format!("{}\t{:.4}\t{:.4}\n", r.n, r.mean_seconds, r.std_seconds));
        }
        if let Some(f) = &self.fit {
            out.push_str(&format!("slope {:.3}  R^2 {:.4}\n", f.slope, f.r_squared));
        }
        out
    }
}
