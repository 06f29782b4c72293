//! Matrix exponential by scaling and squaring with a degree 13 Padé
//! approximant, and the check `exp(t ⊕ Q_h) = ⊗ exp(t Q_h)`.

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

use super::kron::{kron_prod, kron_sum};

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// 1-norm below which the degree 13 approximant needs no scaling
const THETA13: f64 = 5.371920351148152;

fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn expm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", n, a.ncols())));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let nrm = norm1(a);
    let s = if nrm > THETA13 { (nrm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a * 2f64.powi(-s);
    let b = &PADE13;
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::InvalidInput("Padé denominator is singular".into()))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

/// Off-diagonal entries nonnegative and rows summing to zero.
pub fn is_generator(q: &DMatrix<f64>, tol: f64) -> bool {
    q.is_square()
        && q.row_iter().enumerate().all(|(i, row)| {
            let scale = row.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
            row.sum().abs() <= tol * scale && row.iter().enumerate().all(|(j, &x)| j == i || x >= -tol * scale)
        })
}

/// Random generator with off-diagonal rates in `[0, 1)`.
pub fn random_generator(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let mut q = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { rng.gen::<f64>() });
    for i in 0..n {
        let s: f64 = q.row(i).sum();
        q[(i, i)] = -s;
    }
    q
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpIdentityReport {
    pub dimension: usize,
    /// Largest elementwise difference between the two sides.
    pub deviation: f64,
    /// Largest `|row sum - 1|` or negative entry of either side.
    pub stochastic_defect: f64,
}

fn stochastic_defect(p: &DMatrix<f64>) -> f64 {
    let rows = p.row_iter().map(|r| (r.sum() - 1.0).abs()).fold(0.0, f64::max);
    let neg = p.iter().fold(0.0f64, |acc, &x| acc.max(-x));
    rows.max(neg)
}

pub fn check_exponential_identity(factors: &[DMatrix<f64>], t: f64, tol: f64) -> Result<ExpIdentityReport> {
    if factors.is_empty() {
        return Err(Error::InvalidInput("no factors".into()));
    }
    for (h, f) in factors.iter().enumerate() {
        if !is_generator(f, 1e-12) {
            return Err(Error::InvalidInput(format!("factor {} is not a generator", h + 1)));
        }
    }
    let mut sum = factors[0].clone();
    let mut prod = expm(&(&factors[0] * t))?;
    for f in &factors[1..] {
        sum = kron_sum(&sum, f)?;
        prod = kron_prod(&prod, &expm(&(f * t))?)?;
    }
    let lhs = expm(&(sum * t))?;
    let deviation = (&lhs - &prod).amax();
    let report = ExpIdentityReport {
        dimension: lhs.nrows(),
        deviation,
        stochastic_defect: stochastic_defect(&lhs).max(stochastic_defect(&prod)),
    };
    let worst = report.deviation.max(report.stochastic_defect);
    if worst.is_nan() || worst > tol {
        return Err(Error::ToleranceExceeded { deviation: worst, tolerance: tol });
    }
    Ok(report)
}
