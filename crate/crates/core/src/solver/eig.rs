//! Dense nonsymmetric eigenvalues: radix-2 balancing, Householder reduction
//! to upper Hessenberg form, then Francis double-shift QR.

use crate::error::{Error, Result};

use super::real::Real;

/// Row-major square matrix over a [`Real`] backend.
#[derive(Debug, Clone)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        DenseMatrix { n, data }
    }

    pub fn from_rows_f64(rows: &[Vec<f64>], bits: u32) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("matrix must be square".into()));
        }
        if rows.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        Ok(Self::from_fn(n, |i, j| T::from_f64(rows[i][j], bits)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.n + j]
    }

    fn at(&mut self, i: usize, j: usize) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

/// Eigenvalue as `(re, im)`.
pub type Eigenvalue<T> = (T, T);

/// All eigenvalues of `a`. Conjugate pairs appear adjacent, positive
/// imaginary part first. Arithmetic runs at the precision of `a`'s entries.
pub fn eigenvalues<T: Real>(mut a: DenseMatrix<T>, balance: bool) -> Result<Vec<Eigenvalue<T>>> {
    if a.n == 0 {
        return Ok(Vec::new());
    }
    if balance {
        balance_in_place(&mut a);
    }
    hessenberg_in_place(&mut a);
    hqr(a)
}

/// Diagonal similarity by powers of two so that off-diagonal row and column
/// norms are comparable. Exact in binary arithmetic.
fn balance_in_place<T: Real>(a: &mut DenseMatrix<T>) {
    let n = a.n;
    let bits = a.data[0].bits();
    for _ in 0..64 {
        let mut done = true;
        for i in 0..n {
            let mut c = T::zero(bits);
            let mut r = T::zero(bits);
            for j in 0..n {
                if j != i {
                    c = c.add(&a.get(j, i).abs());
                    r = r.add(&a.get(i, j).abs());
                }
            }
            if c.is_zero() || r.is_zero() {
                continue;
            }
            let (lc, lr) = (c.log2_abs(), r.log2_abs());
            let e = ((lr - lc) / 2.0).round() as i64;
            if e == 0 {
                continue;
            }
            // accept only if the scaled norm drops by at least 5%
            let before = c.add(&r);
            let after = c.mul_pow2(e).add(&r.mul_pow2(-e));
            if after.log2_abs() >= before.log2_abs() + 0.95f64.log2() {
                continue;
            }
            done = false;
            for j in 0..n {
                *a.at(i, j) = a.get(i, j).mul_pow2(-e);
                *a.at(j, i) = a.get(j, i).mul_pow2(e);
            }
        }
        if done {
            break;
        }
    }
}

fn hessenberg_in_place<T: Real>(a: &mut DenseMatrix<T>) {
    let n = a.n;
    if n < 3 {
        return;
    }
    let bits = a.data[0].bits();
    let zero = T::zero(bits);
    let mut v: Vec<T> = Vec::with_capacity(n);
    for k in 0..n - 2 {
        v.clear();
        v.extend((k + 1..n).map(|i| a.get(i, k).clone()));
        // scale to avoid overflow in the f64 backend
        let scale = v.iter().fold(zero.clone(), |m, x| {
            let ax = x.abs();
            if ax > m {
                ax
            } else {
                m
            }
        });
        if scale.is_zero() {
            continue;
        }
        let mut norm2 = zero.clone();
        for x in v.iter_mut() {
            *x = x.div(&scale);
            norm2 = norm2.add(&x.mul(x));
        }
        let alpha = norm2.sqrt().with_sign_of(&v[0]).neg();
        if v[1..].iter().all(|x| x.is_zero()) {
            continue;
        }
        v[0] = v[0].sub(&alpha);
        // H = I - v v^T / h with h = alpha^2 - alpha v0_orig = -alpha * v[0]
        let h = alpha.mul(&v[0]).neg();
        let len = v.len();

        for j in k..n {
            let mut s = zero.clone();
            for (l, vl) in v.iter().enumerate() {
                s = s.add(&vl.mul(a.get(k + 1 + l, j)));
            }
            let f = s.div(&h);
            for (l, vl) in v.iter().enumerate() {
                a.at(k + 1 + l, j).sub_mul_assign(&f, vl);
            }
        }
        for i in 0..n {
            let mut s = zero.clone();
            for (l, vl) in v.iter().enumerate() {
                s = s.add(&a.get(i, k + 1 + l).mul(vl));
            }
            let f = s.div(&h);
            for (l, vl) in v.iter().enumerate() {
                a.at(i, k + 1 + l).sub_mul_assign(&f, vl);
            }
        }
        for l in 1..len {
            *a.at(k + 1 + l, k) = zero.clone();
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix. The iteration
/// budget is `40 n` sweeps in total.
fn hqr<T: Real>(mut a: DenseMatrix<T>) -> Result<Vec<Eigenvalue<T>>> {
    let n = a.n;
    let bits = a.data[0].bits();
    let zero = T::zero(bits);
    let eps = T::epsilon(bits);
    let half = T::from_f64(0.5, bits);
    let budget = 40 * n;
    let mut sweeps = 0usize;

    let mut anorm = zero.clone();
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm = anorm.add(&a.get(i, j).abs());
        }
    }

    let mut wr: Vec<T> = vec![zero.clone(); n];
    let mut wi: Vec<T> = vec![zero.clone(); n];
    let mut nn = n as isize - 1;
    let mut t = zero.clone();
    let (mut p, mut q, mut r);
    let (mut x, mut y, mut z);
    let mut w;

    while nn >= 0 {
        let mut its = 0;
        let mut l;
        loop {
            // look for a single small subdiagonal element
            l = nn;
            while l > 0 {
                let (lu, lm) = (l as usize, l as usize - 1);
                let mut s = a.get(lm, lm).abs().add(&a.get(lu, lu).abs());
                if s.is_zero() {
                    s = anorm.clone();
                }
                if a.get(lu, lm).abs() <= eps.mul(&s) {
                    *a.at(lu, lm) = zero.clone();
                    break;
                }
                l -= 1;
            }
            let nu = nn as usize;
            x = a.get(nu, nu).clone();
            if l == nn {
                wr[nu] = x.add(&t);
                wi[nu] = zero.clone();
                nn -= 1;
                break;
            }
            y = a.get(nu - 1, nu - 1).clone();
            w = a.get(nu, nu - 1).mul(a.get(nu - 1, nu));
            if l == nn - 1 {
                p = half.mul(&y.sub(&x));
                q = p.mul(&p).add(&w);
                z = q.abs().sqrt();
                x = x.add(&t);
                if !q.is_negative() {
                    z = p.add(&z.with_sign_of(&p));
                    wr[nu - 1] = x.add(&z);
                    wr[nu] = wr[nu - 1].clone();
                    if !z.is_zero() {
                        wr[nu] = x.sub(&w.div(&z));
                    }
                    wi[nu - 1] = zero.clone();
                    wi[nu] = zero.clone();
                } else {
                    wr[nu - 1] = x.add(&p);
                    wr[nu] = x.add(&p);
                    wi[nu - 1] = z.clone();
                    wi[nu] = z.neg();
                }
                nn -= 2;
                break;
            }

            if sweeps >= budget {
                return Err(Error::NoConvergence { sweeps });
            }
            if its > 0 && its % 10 == 0 {
                // exceptional shift
                t = t.add(&x);
                for i in 0..=nu {
                    *a.at(i, i) = a.get(i, i).sub(&x);
                }
                let s = a.get(nu, nu - 1).abs().add(&a.get(nu - 1, nu - 2).abs());
                x = T::from_f64(0.75, bits).mul(&s);
                y = x.clone();
                w = T::from_f64(-0.4375, bits).mul(&s).mul(&s);
            }
            its += 1;
            sweeps += 1;

            // look for two consecutive small subdiagonal elements
            let lu = l as usize;
            let mut m = nu - 2;
            loop {
                z = a.get(m, m).clone();
                r = x.sub(&z);
                let s0 = y.sub(&z);
                p = r.mul(&s0).sub(&w).div(a.get(m + 1, m)).add(a.get(m, m + 1));
                q = a.get(m + 1, m + 1).sub(&z).sub(&r).sub(&s0);
                r = a.get(m + 2, m + 1).clone();
                let s = p.abs().add(&q.abs()).add(&r.abs());
                p = p.div(&s);
                q = q.div(&s);
                r = r.div(&s);
                if m == lu {
                    break;
                }
                let u = a.get(m, m - 1).abs().mul(&q.abs().add(&r.abs()));
                let v = p
                    .abs()
                    .mul(&a.get(m - 1, m - 1).abs().add(&z.abs()).add(&a.get(m + 1, m + 1).abs()));
                if u <= eps.mul(&v) {
                    break;
                }
                m -= 1;
            }
            for i in m..nu - 1 {
                *a.at(i + 2, i) = zero.clone();
                if i != m {
                    *a.at(i + 2, i - 1) = zero.clone();
                }
            }

            // double QR step on rows l..nn and columns m..nn
            for k in m..nu {
                if k != m {
                    p = a.get(k, k - 1).clone();
                    q = a.get(k + 1, k - 1).clone();
                    r = if k + 1 != nu { a.get(k + 2, k - 1).clone() } else { zero.clone() };
                    x = p.abs().add(&q.abs()).add(&r.abs());
                    if !x.is_zero() {
                        p = p.div(&x);
                        q = q.div(&x);
                        r = r.div(&x);
                    }
                }
                let s = p.mul(&p).add(&q.mul(&q)).add(&r.mul(&r)).sqrt().with_sign_of(&p);
                if s.is_zero() {
                    continue;
                }
                if k == m {
                    if l as usize != m {
                        *a.at(k, k - 1) = a.get(k, k - 1).neg();
                    }
                } else {
                    *a.at(k, k - 1) = s.mul(&x).neg();
                }
                p = p.add(&s);
                x = p.div(&s);
                y = q.div(&s);
                z = r.div(&s);
                q = q.div(&p);
                r = r.div(&p);
                for j in k..=nu {
                    let mut pp = a.get(k, j).add(&q.mul(a.get(k + 1, j)));
                    if k + 1 != nu {
                        pp = pp.add(&r.mul(a.get(k + 2, j)));
                        a.at(k + 2, j).sub_mul_assign(&pp, &z);
                    }
                    a.at(k + 1, j).sub_mul_assign(&pp, &y);
                    a.at(k, j).sub_mul_assign(&pp, &x);
                }
                let mmin = nu.min(k + 3);
                for i in lu..=mmin {
                    let mut pp = x.mul(a.get(i, k)).add(&y.mul(a.get(i, k + 1)));
                    if k + 1 != nu {
                        pp = pp.add(&z.mul(a.get(i, k + 2)));
                        a.at(i, k + 2).sub_mul_assign(&pp, &r);
                    }
                    a.at(i, k + 1).sub_mul_assign(&pp, &q);
                    *a.at(i, k) = a.get(i, k).sub(&pp);
                }
            }
        }
    }
    Ok(wr.into_iter().zip(wi).collect())
}
