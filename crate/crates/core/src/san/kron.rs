//! Kronecker sums and products, symbolic and numeric, and generator
//! matrices with zero row sums.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::symbolic::{Expr, ExprMatrix};

/// `a ⊗ b`; state `(i, k)` has index `i * n_b + k`. Symbolic entries
/// multiply into product monomials.
pub fn kron_prod_expr(a: &ExprMatrix, b: &ExprMatrix) -> ExprMatrix {
    let nb = b.n();
    ExprMatrix::from_fn(a.n() * nb, |r, c| a.get(r / nb, c / nb).mul(b.get(r % nb, c % nb)))
}

/// `a ⊕ b = a ⊗ I + I ⊗ b`.
pub fn kron_sum_expr(a: &ExprMatrix, b: &ExprMatrix) -> ExprMatrix {
    let nb = b.n();
    ExprMatrix::from_fn(a.n() * nb, |r, c| {
        let (i, k, j, l) = (r / nb, r % nb, c / nb, c % nb);
        let mut e = Expr::zero();
        if k == l {
            e = e.add(a.get(i, j));
        }
        if i == j {
            e = e.add(b.get(k, l));
        }
        e
    })
}

fn check_square(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!("{}x{} is not square", m.nrows(), m.ncols())));
    }
    Ok(())
}

pub fn kron_prod(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square(a)?;
    check_square(b)?;
    Ok(a.kronecker(b))
}

pub fn kron_sum(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square(a)?;
    check_square(b)?;
    let ia = DMatrix::identity(a.nrows(), a.nrows());
    let ib = DMatrix::identity(b.nrows(), b.nrows());
    Ok(a.kronecker(&ib) + ia.kronecker(b))
}

/// `q = q0 - diag(q0 · 1)` with its parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorMatrix {
    pub q0: ExprMatrix,
    /// Diagonal correction `-(q0 · 1)_i`.
    pub qd: Vec<Expr>,
    pub q: ExprMatrix,
}

impl GeneratorMatrix {
    /// Whether every row of `q` sums to the zero expression.
    pub fn rows_vanish(&self) -> bool {
        self.q.row_sums().iter().all(Expr::is_zero)
    }
}

pub fn make_generator(q0: &ExprMatrix) -> GeneratorMatrix {
    let qd: Vec<Expr> = q0.row_sums().iter().map(|s| s.scale(-1)).collect();
    let mut q = q0.clone();
    for (i, d) in qd.iter().enumerate() {
        q.set(i, i, q0.get(i, i).add(d));
    }
    GeneratorMatrix { q0: q0.clone(), qd, q }
}

pub fn make_generator_f64(q0: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square(q0)?;
    let mut q = q0.clone();
    for i in 0..q.nrows() {
        let s: f64 = q0.row(i).sum();
        q[(i, i)] -= s;
    }
    Ok(q)
}

/// Largest `|row sum|` of a numeric matrix.
pub fn max_row_sum(q: &DMatrix<f64>) -> f64 {
    q.row_iter().map(|r| r.sum().abs()).fold(0.0, f64::max)
}
