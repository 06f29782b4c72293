//! Exact eigenvalues of matrices whose spectrum is an integer combination of
//! their entries. Symbols are replaced by widely spaced powers of two, the
//! numeric eigenvalues are computed at a precision large enough to keep the
//! digits apart, and each eigenvalue is read back digit by digit.

mod eig;
mod encoding;
mod real;

use nalgebra::{DMatrix, Schur};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbolic::{Expr, LinearMatrix, Monomial};

pub use eig::{eigenvalues, DenseMatrix, Eigenvalue};
pub use encoding::{build_encoding, build_encoding_with, decode_form, Decoded, Encoding, ZLinearForm, DEFAULT_GUARD_BITS};
pub use real::{MpFloat, Real};

/// Relative tolerance for fingerprint agreement across batches.
const FINGERPRINT_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Fixed mantissa width. When unset the width is derived from the
    /// encoding and raised automatically if decoding fails.
    pub precision_bits: Option<u32>,
    pub guard_bits: u32,
    /// Largest coefficient magnitude to decode. Defaults to the larger of
    /// the dimension and the matrix's structural bound.
    pub coeff_bound: Option<u64>,
    pub balance: bool,
    /// Number of precision doublings of the guard before giving up.
    pub retries: u32,
    /// Seed for the generic substitution used to pair batches. `None`
    /// uses square roots of primes.
    pub reference_seed: Option<u64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            precision_bits: None,
            guard_bits: DEFAULT_GUARD_BITS,
            coeff_bound: None,
            balance: true,
            retries: 3,
            reference_seed: None,
        }
    }
}

/// Multiset of eigenvalue forms over a named symbol list, kept in canonical
/// (descending) order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZLinearSpectrum {
    pub symbols: Vec<String>,
    pub forms: Vec<ZLinearForm>,
}

impl ZLinearSpectrum {
    pub fn new(symbols: Vec<String>, mut forms: Vec<ZLinearForm>) -> Result<Self> {
        if let Some(f) = forms.iter().find(|f| f.coeffs.len() != symbols.len()) {
            return Err(Error::DimensionMismatch(format!(
                "form has {} coefficients for {} symbols",
                f.coeffs.len(),
                symbols.len()
            )));
        }
        forms.sort_by(|a, b| b.cmp(a));
        Ok(ZLinearSpectrum { symbols, forms })
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    /// Coefficient-wise sum of all forms.
    pub fn total(&self) -> Vec<i64> {
        let mut t = vec![0; self.symbols.len()];
        for f in &self.forms {
            for (a, c) in t.iter_mut().zip(&f.coeffs) {
                *a += c;
            }
        }
        t
    }

    pub fn display(&self) -> Vec<String> {
        self.forms.iter().map(|f| f.display(&self.symbols)).collect()
    }

    /// Forms as expressions in the symbol names, sorted.
    pub fn to_exprs(&self) -> Vec<Expr> {
        let names: Vec<Monomial> = self.symbols.iter().map(|s| Monomial::parse(s)).collect();
        let mut out: Vec<Expr> = self
            .forms
            .iter()
            .map(|f| Expr::from_terms(f.coeffs.iter().enumerate().map(|(k, &c)| (names[k].clone(), c))))
            .collect();
        out.sort();
        out
    }
}

/// Eigenvalues of a numeric matrix at `bits` of precision, rounded to `f64`.
/// Widths up to 53 bits run in native floating point.
pub fn hp_eigenvalues(rows: &[Vec<f64>], bits: u32) -> Result<Vec<(f64, f64)>> {
    fn go<T: Real>(rows: &[Vec<f64>], bits: u32) -> Result<Vec<(f64, f64)>> {
        let a = DenseMatrix::<T>::from_rows_f64(rows, bits)?;
        Ok(eigenvalues(a, true)?.iter().map(|(re, im)| (re.to_f64(), im.to_f64())).collect())
    }
    if bits <= 53 {
        go::<f64>(rows, bits)
    } else {
        go::<MpFloat>(rows, bits)
    }
}

/// Values used to tag eigenvalues when pairing batches: generic reals in
/// `[1, 2)`, exact in binary.
pub fn reference_substitution(m: usize, seed: Option<u64>) -> Vec<f64> {
    match seed {
        Some(s) => {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            (0..m).map(|_| rng.gen_range(1.0..2.0)).collect()
        }
        None => first_primes(m)
            .into_iter()
            .map(|p| {
                let r = (p as f64).sqrt();
                r / 2f64.powi(r.log2().floor() as i32)
            })
            .collect(),
    }
}

fn first_primes(m: usize) -> Vec<u64> {
    let mut primes: Vec<u64> = Vec::with_capacity(m);
    let mut c = 2u64;
    while primes.len() < m {
        if primes.iter().take_while(|&&p| p * p <= c).all(|&p| !c.is_multiple_of(p)) {
            primes.push(c);
        }
        c += 1;
    }
    primes
}

/// Additive tag `delta * r_k` on every symbol, read back from the decode
/// remainder as `sum_k c_k r_k`.
struct Fingerprint<'a> {
    r: &'a [f64],
    delta_log2: i64,
}

fn coeff_bound(m: &LinearMatrix, opts: &SolveOptions) -> u64 {
    opts.coeff_bound
        .unwrap_or_else(|| (m.n() as u64).max(m.structural_coeff_bound()))
}

fn encoded_matrix<T: Real>(m: &LinearMatrix, e: &Encoding, fp: Option<&Fingerprint>) -> DenseMatrix<T> {
    let bits = e.precision_bits();
    let beta = e.base_log2() as i64;
    let tags: Option<Vec<T>> =
        fp.map(|fp| fp.r.iter().map(|&r| T::from_f64(r, bits).mul_pow2(fp.delta_log2)).collect());
    DenseMatrix::from_fn(m.n(), |i, j| {
        let mut acc = T::zero(bits);
        for &(k, c) in m.entry(i, j) {
            let ck = T::from_i64(c, bits);
            if let Some(p) = e.power(k) {
                acc = acc.add(&ck.mul_pow2(p as i64 * beta));
            }
            if let Some(t) = &tags {
                acc = acc.add(&ck.mul(&t[k]));
            }
        }
        acc
    })
}

fn run_encoded<T: Real>(
    m: &LinearMatrix,
    e: &Encoding,
    fp: Option<&Fingerprint>,
    balance: bool,
) -> Result<Vec<Decoded>> {
    let a = encoded_matrix::<T>(m, e, fp);
    let ev = eigenvalues(a, balance)?;
    ev.iter().map(|(re, im)| decode_form(re, im, e)).collect()
}

fn run(m: &LinearMatrix, e: &Encoding, fp: Option<&Fingerprint>, balance: bool) -> Result<Vec<Decoded>> {
    if e.precision_bits() <= 53 {
        run_encoded::<f64>(m, e, fp, balance)
    } else {
        run_encoded::<MpFloat>(m, e, fp, balance)
    }
}

fn check_trace(m: &LinearMatrix, forms: &[ZLinearForm]) -> Result<()> {
    let mut total = vec![0i64; m.symbol_count()];
    for f in forms {
        for (a, c) in total.iter_mut().zip(&f.coeffs) {
            *a += c;
        }
    }
    if total != m.trace_form() {
        return Err(Error::NotZLinear {
            value: "trace".into(),
            reason: format!("forms sum to {total:?}, trace is {:?}", m.trace_form()),
        });
    }
    Ok(())
}

/// Retries `attempt` with a doubled guard on decode or convergence failure,
/// unless the precision is pinned.
fn with_retries<R>(opts: &SolveOptions, mut attempt: impl FnMut(u32) -> Result<R>) -> Result<R> {
    let mut guard = opts.guard_bits;
    let tries = if opts.precision_bits.is_some() { 0 } else { opts.retries };
    for i in 0..=tries {
        match attempt(guard) {
            Ok(r) => return Ok(r),
            Err(Error::NotZLinear { .. } | Error::NoConvergence { .. } | Error::PairingFailed(_)) if i < tries => {
                guard = guard.saturating_mul(2);
            }
            Err(e) => return Err(e),
        }
    }
    unreachable!("loop returns on its last iteration")
}

pub fn solve(m: &LinearMatrix, opts: &SolveOptions) -> Result<ZLinearSpectrum> {
    let symbols = m.symbols().to_vec();
    if m.symbol_count() == 0 {
        return ZLinearSpectrum::new(symbols, vec![ZLinearForm::zero(0); m.n()]);
    }
    let c = coeff_bound(m, opts);
    with_retries(opts, |guard| {
        let mut e = build_encoding_with(m.symbol_count(), c, None, guard)?;
        if let Some(b) = opts.precision_bits {
            e.set_precision_bits(b);
        }
        let decoded = run(m, &e, None, opts.balance)?;
        let forms: Vec<ZLinearForm> = decoded.into_iter().map(|d| d.form).collect();
        check_trace(m, &forms)?;
        ZLinearSpectrum::new(symbols.clone(), forms)
    })
}

/// Splits `0..m` into `k` contiguous batches of near-equal size.
pub fn even_batches(m: usize, k: usize) -> Vec<Vec<usize>> {
    let k = k.clamp(1, m.max(1));
    (0..k).map(|i| (i * m / k..(i + 1) * m / k).collect()).filter(|b: &Vec<usize>| !b.is_empty()).collect()
}

fn validate_partition(m: usize, batches: &[Vec<usize>]) -> Result<()> {
    let mut seen = vec![false; m];
    for b in batches {
        if b.is_empty() {
            return Err(Error::InvalidInput("empty batch".into()));
        }
        for &k in b {
            if k >= m || std::mem::replace(&mut seen[k], true) {
                return Err(Error::InvalidInput(format!("batches are not a partition (symbol {})", k + 1)));
            }
        }
    }
    if let Some(k) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidInput(format!("symbol {} is in no batch", k + 1)));
    }
    Ok(())
}

/// Solves each batch of symbols separately (in parallel on `workers`
/// threads) and sums the partial forms. Each batch run also carries a small
/// generic substitution of every symbol; it survives in the decode remainder
/// as a tag that is the same for an eigenvalue in every batch, which is how
/// partial eigenvalues are matched up.
pub fn solve_batched(
    m: &LinearMatrix,
    batches: &[Vec<usize>],
    workers: usize,
    opts: &SolveOptions,
) -> Result<ZLinearSpectrum> {
    let count = m.symbol_count();
    if count == 0 {
        return solve(m, opts);
    }
    validate_partition(count, batches)?;
    if batches.len() == 1 {
        return solve(m, opts);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let c = coeff_bound(m, opts);
    let r = reference_substitution(count, opts.reference_seed);

    with_retries(opts, |guard| {
        let probe = build_encoding_with(count, c, Some(&batches[0]), guard)?;
        // keep |delta * sum c_k r_k| <= B/8
        let fmax = 2.0 * c as f64 * count as f64;
        let delta_log2 = probe.base_log2() as i64 - (8.0 * fmax).log2().ceil() as i64;
        let fp = Fingerprint { r: &r, delta_log2 };
        let extra = (16.0 * count as f64).log2().ceil() as u32;

        let runs: Vec<Result<Vec<Decoded>>> = pool.install(|| {
            batches
                .par_iter()
                .map(|b| {
                    let mut e = build_encoding_with(count, c, Some(b), guard + extra)?;
                    if let Some(bits) = opts.precision_bits {
                        e.set_precision_bits(bits);
                    }
                    run(m, &e, Some(&fp), opts.balance)
                })
                .collect()
        });
        let scale = 2f64.powi(-delta_log2 as i32);
        let mut tagged: Vec<Vec<(f64, ZLinearForm)>> = Vec::with_capacity(batches.len());
        for run in runs {
            let mut v: Vec<(f64, ZLinearForm)> = run?.into_iter().map(|d| (d.remainder * scale, d.form)).collect();
            v.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
            tagged.push(v);
        }

        let mut forms = Vec::with_capacity(m.n());
        for i in 0..m.n() {
            let f0 = tagged[0][i].0;
            let tol = FINGERPRINT_TOL * f0.abs().max(1.0);
            let mut sum = ZLinearForm::zero(count);
            for t in &tagged {
                let (f, part) = &t[i];
                if (f - f0).abs() > tol {
                    return Err(Error::PairingFailed(format!("tags {f0} and {f} disagree at rank {i}")));
                }
                for (a, p) in sum.coeffs.iter_mut().zip(&part.coeffs) {
                    *a += p;
                }
            }
            let expect = sum.evaluate(&r);
            if (expect - f0).abs() > tol {
                return Err(Error::PairingFailed(format!(
                    "assembled form {} has tag {expect}, measured {f0}",
                    sum.display(m.symbols())
                )));
            }
            forms.push(sum);
        }
        check_trace(m, &forms)?;
        ZLinearSpectrum::new(m.symbols().to_vec(), forms)
    })
}

/// Machine-precision eigenvalues from nalgebra's real Schur form. Its
/// deflation test at unit roundoff stalls on matrices with many repeated
/// eigenvalues, so the tolerance is loosened step by step, and as a last
/// resort the matrix is rotated by a random orthogonal similarity.
pub fn reference_eigenvalues(a: DMatrix<f64>, rng: &mut impl Rng) -> Result<Vec<(f64, f64)>> {
    let n = a.nrows();
    let max_iter = 100 * n.max(1);
    // nalgebra reports failure on an already triangular input such as 0
    if (0..n).all(|i| (0..i).all(|j| a[(i, j)] == 0.0)) {
        return Ok(a.diagonal().iter().map(|&d| (d, 0.0)).collect());
    }
    let mut work = a.clone();
    for _ in 0..4 {
        for eps in [f64::EPSILON, 1e-14, 1e-13, 1e-12] {
            if let Some(s) = Schur::try_new(work.clone(), eps, max_iter) {
                return Ok(s.complex_eigenvalues().iter().map(|c| (c.re, c.im)).collect());
            }
        }
        let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let q = g.qr().q();
        work = q.transpose() * &a * q;
    }
    Err(Error::NoConvergence { sweeps: max_iter })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub trials: usize,
    pub max_discrepancy: f64,
}

/// Checks a spectrum against machine-precision eigenvalues of the matrix at
/// random integer substitutions in `[1, 97]`. Discrepancies are relative to
/// the largest eigenvalue magnitude.
pub fn verify_by_substitution(
    m: &LinearMatrix,
    s: &ZLinearSpectrum,
    trials: usize,
    seed: u64,
) -> Result<VerifyReport> {
    if s.len() != m.n() || s.symbols.len() != m.symbol_count() {
        return Err(Error::DimensionMismatch(format!(
            "spectrum has {} forms over {} symbols, matrix is {}x{} over {}",
            s.len(),
            s.symbols.len(),
            m.n(),
            m.n(),
            m.symbol_count()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let ints: Vec<i64> = (0..m.symbol_count()).map(|_| rng.gen_range(1..=97)).collect();
        let values: Vec<f64> = ints.iter().map(|&x| x as f64).collect();
        let numeric = reference_eigenvalues(m.evaluate(&values), &mut rng)?;
        let expected: Vec<f64> = s.forms.iter().map(|f| f.evaluate(&values)).collect();
        let scale = expected.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
        let mut used = vec![false; numeric.len()];
        let mut trial_worst = 0.0f64;
        for &e in &expected {
            let (best, dist) = numeric
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .map(|(i, &(re, im))| (i, (re - e).hypot(im)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("as many numeric eigenvalues as forms");
            used[best] = true;
            trial_worst = trial_worst.max(dist / scale);
        }
        if trial_worst > 1e-6 {
            return Err(Error::MismatchDetected {
                discrepancy: trial_worst,
                substitution: ints,
            });
        }
        worst = worst.max(trial_worst);
    }
    Ok(VerifyReport {
        trials,
        max_discrepancy: worst,
    })
}
