//! Integer linear combinations of symbol monomials, and matrices over them.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A product of base symbols, kept in factor order (`a*d` for `a` from the
/// first Kronecker factor and `d` from the second).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<String>);

impl Monomial {
    pub fn symbol(name: impl Into<String>) -> Self {
        Monomial(vec![name.into()])
    }

    /// Parses the `x*y` naming used in files.
    pub fn parse(name: &str) -> Self {
        Monomial(name.split('*').map(str::to_owned).collect())
    }

    pub fn times(&self, other: &Monomial) -> Monomial {
        let mut f = self.0.clone();
        f.extend(other.0.iter().cloned());
        // factors commute
        f.sort();
        Monomial(f)
    }

    pub fn factors(&self) -> &[String] {
        &self.0
    }

    pub fn name(&self) -> String {
        self.0.join("*")
    }

    pub fn evaluate(&self, value: &dyn Fn(&str) -> f64) -> f64 {
        self.0.iter().map(|s| value(s)).product()
    }

    pub fn rename(&self, f: &dyn Fn(&str) -> String) -> Monomial {
        Monomial(self.0.iter().map(|s| f(s)).collect())
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Integer combination of monomials; zero coefficients are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr(BTreeMap<Monomial, i64>);

impl Expr {
    pub fn zero() -> Self {
        Expr::default()
    }

    pub fn symbol(name: impl Into<String>) -> Self {
        Expr::term(Monomial::symbol(name), 1)
    }

    pub fn term(m: Monomial, coeff: i64) -> Self {
        let mut e = Expr::zero();
        e.add_term(m, coeff);
        e
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, i64)>) -> Self {
        let mut e = Expr::zero();
        for (m, c) in terms {
            e.add_term(m, c);
        }
        e
    }

    pub fn add_term(&mut self, m: Monomial, coeff: i64) {
        if coeff == 0 {
            return;
        }
        match self.0.entry(m) {
            Entry::Vacant(v) => {
                v.insert(coeff);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if *o.get() == 0 {
                    o.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, i64)> {
        self.0.iter().map(|(m, &c)| (m, c))
    }

    pub fn coeff(&self, m: &Monomial) -> i64 {
        self.0.get(m).copied().unwrap_or(0)
    }

    pub fn add(&self, other: &Expr) -> Expr {
        let mut e = self.clone();
        for (m, c) in other.terms() {
            e.add_term(m.clone(), c);
        }
        e
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        self.add(&other.scale(-1))
    }

    pub fn scale(&self, k: i64) -> Expr {
        Expr::from_terms(self.terms().map(|(m, c)| (m.clone(), c * k)))
    }

    /// Bilinear product; monomials concatenate in operand order.
    pub fn mul(&self, other: &Expr) -> Expr {
        let mut e = Expr::zero();
        for (ma, ca) in self.terms() {
            for (mb, cb) in other.terms() {
                e.add_term(ma.times(mb), ca * cb);
            }
        }
        e
    }

    pub fn evaluate(&self, value: &dyn Fn(&str) -> f64) -> f64 {
        self.terms().map(|(m, c)| c as f64 * m.evaluate(value)).sum()
    }

    pub fn rename(&self, f: &dyn Fn(&str) -> String) -> Expr {
        Expr::from_terms(self.terms().map(|(m, c)| (m.rename(f), c)))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms().enumerate() {
            let sign = if c < 0 { "-" } else { "+" };
            match (i, sign) {
                (0, "+") => {}
                (0, _) => f.write_str("-")?,
                _ => write!(f, " {sign} ")?,
            }
            if c.abs() != 1 {
                write!(f, "{}*", c.abs())?;
            }
            write!(f, "{m}")?;
        }
        Ok(())
    }
}

/// Square matrix of [`Expr`] entries, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExprMatrix {
    n: usize,
    entries: Vec<Expr>,
}

impl ExprMatrix {
    pub fn new(n: usize, entries: Vec<Expr>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {n}x{n} matrix",
                entries.len()
            )));
        }
        Ok(ExprMatrix { n, entries })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Expr) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(f(i, j));
            }
        }
        ExprMatrix { n, entries }
    }

    /// Builds a matrix of plain symbols from a grid of names.
    pub fn from_names(rows: &[&[&str]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("ragged symbol grid".into()));
        }
        Ok(ExprMatrix::from_fn(n, |i, j| Expr::symbol(rows[i][j])))
    }

    pub fn identity(n: usize) -> Self {
        // identity entries are the empty monomial with coefficient 1
        ExprMatrix::from_fn(n, |i, j| {
            if i == j {
                Expr::term(Monomial(Vec::new()), 1)
            } else {
                Expr::zero()
            }
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, e: Expr) {
        self.entries[i * self.n + j] = e;
    }

    pub fn entries(&self) -> &[Expr] {
        &self.entries
    }

    pub fn row_sums(&self) -> Vec<Expr> {
        (0..self.n)
            .map(|i| {
                (0..self.n).fold(Expr::zero(), |acc, j| acc.add(self.get(i, j)))
            })
            .collect()
    }

    /// The common row sum, when every row sums to the same expression.
    pub fn constant_row_sum(&self) -> Option<Expr> {
        let sums = self.row_sums();
        let first = sums.first()?.clone();
        sums.iter().all(|s| *s == first).then_some(first)
    }

    pub fn add(&self, other: &ExprMatrix) -> Result<ExprMatrix> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(format!("{} vs {}", self.n, other.n)));
        }
        Ok(ExprMatrix::from_fn(self.n, |i, j| self.get(i, j).add(other.get(i, j))))
    }

    pub fn scale(&self, k: i64) -> ExprMatrix {
        ExprMatrix::from_fn(self.n, |i, j| self.get(i, j).scale(k))
    }

    pub fn evaluate(&self, value: &dyn Fn(&str) -> f64) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j).evaluate(value))
    }

    pub fn rename(&self, f: &dyn Fn(&str) -> String) -> ExprMatrix {
        ExprMatrix::from_fn(self.n, |i, j| self.get(i, j).rename(f))
    }

    /// Names of all base symbols, sorted.
    pub fn base_symbols(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .entries
            .iter()
            .flat_map(|e| e.terms().flat_map(|(m, _)| m.factors().to_vec()).collect::<Vec<_>>())
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Indexes the monomials by first appearance, scanning row-major.
    pub fn to_linear(&self) -> LinearMatrix {
        let mut index: HashMap<&Monomial, usize> = HashMap::new();
        let mut symbols: Vec<String> = Vec::new();
        let mut entries = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            let mut row = Vec::new();
            for (m, c) in e.terms() {
                let next = index.len();
                let k = *index.entry(m).or_insert_with(|| {
                    symbols.push(m.name());
                    next
                });
                row.push((k, c));
            }
            entries.push(row);
        }
        LinearMatrix {
            n: self.n,
            symbols,
            entries,
        }
    }
}

/// Square matrix whose entries are integer combinations of indexed symbols.
/// This is the input format of the eigensolver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearMatrix {
    n: usize,
    symbols: Vec<String>,
    // row-major; each entry lists (symbol index, coefficient)
    entries: Vec<Vec<(usize, i64)>>,
}

impl LinearMatrix {
    pub fn new(n: usize, symbols: Vec<String>, entries: Vec<Vec<(usize, i64)>>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {n}x{n} matrix",
                entries.len()
            )));
        }
        let m = symbols.len();
        for e in &entries {
            if let Some(&(k, _)) = e.iter().find(|&&(k, _)| k >= m) {
                return Err(Error::InvalidInput(format!("symbol index {} out of range", k + 1)));
            }
        }
        let mut sorted = symbols.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("duplicate symbol names".into()));
        }
        Ok(LinearMatrix { n, symbols, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol_count(&self) -> usize {
        self.symbols.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &[(usize, i64)] {
        &self.entries[i * self.n + j]
    }

    /// Coefficient vector of the trace.
    pub fn trace_form(&self) -> Vec<i64> {
        let mut t = vec![0; self.symbols.len()];
        for i in 0..self.n {
            for &(k, c) in self.entry(i, i) {
                t[k] += c;
            }
        }
        t
    }

    /// Largest row sum of `|coefficient|` over the per-symbol coefficient
    /// matrices. No eigenvalue form can carry a larger coefficient.
    pub fn structural_coeff_bound(&self) -> u64 {
        let m = self.symbols.len();
        let mut best = 0u64;
        for i in 0..self.n {
            let mut row = vec![0u64; m];
            for j in 0..self.n {
                for &(k, c) in self.entry(i, j) {
                    row[k] += c.unsigned_abs();
                }
            }
            best = best.max(row.into_iter().max().unwrap_or(0));
        }
        best
    }

    pub fn evaluate(&self, values: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| {
            self.entry(i, j).iter().map(|&(k, c)| c as f64 * values[k]).sum()
        })
    }

    pub fn to_expr(&self) -> ExprMatrix {
        let names: Vec<Monomial> = self.symbols.iter().map(|s| Monomial::parse(s)).collect();
        ExprMatrix::from_fn(self.n, |i, j| {
            Expr::from_terms(self.entry(i, j).iter().map(|&(k, c)| (names[k].clone(), c)))
        })
    }
}

/// `{"n":..,"symbols":[..],"entries":[[[[k,c],..],..],..]}` with 1-based `k`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearMatrixJson {
    pub n: usize,
    pub symbols: Vec<String>,
    pub entries: Vec<Vec<Vec<(usize, i64)>>>,
}

impl From<&LinearMatrix> for LinearMatrixJson {
    fn from(m: &LinearMatrix) -> Self {
        LinearMatrixJson {
            n: m.n,
            symbols: m.symbols.clone(),
            entries: (0..m.n)
                .map(|i| {
                    (0..m.n)
                        .map(|j| m.entry(i, j).iter().map(|&(k, c)| (k + 1, c)).collect())
                        .collect()
                })
                .collect(),
        }
    }
}

impl TryFrom<LinearMatrixJson> for LinearMatrix {
    type Error = Error;

    fn try_from(j: LinearMatrixJson) -> Result<Self> {
        if j.entries.len() != j.n || j.entries.iter().any(|r| r.len() != j.n) {
            return Err(Error::DimensionMismatch("entries must be n x n".into()));
        }
        let mut entries = Vec::with_capacity(j.n * j.n);
        for row in j.entries {
            for e in row {
                let mut terms = Vec::with_capacity(e.len());
                for (k, c) in e {
                    if k == 0 {
                        return Err(Error::InvalidInput("symbol indices are 1-based".into()));
                    }
                    terms.push((k - 1, c));
                }
                entries.push(terms);
            }
        }
        LinearMatrix::new(j.n, j.symbols, entries)
    }
}
