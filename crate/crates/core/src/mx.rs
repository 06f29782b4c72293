//! General M^X construction: linear extensions, permutation composition and
//! the ascent-descent map.
//!
//! Entry `(i, j)` is `ε(φ_i⁻¹ ∘ φ_j)`, where `ε` records a `1` for every
//! ascent of the one-line word. With the extensions `213, 231` this yields
//! `[[11, 10], [10, 11]]`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poset::{linear_extensions, LinearExtension, Poset};
use crate::symbolic::{Expr, ExprMatrix, LinearMatrix};

/// Ascent/descent word of a permutation: bit `p` is set iff `perm[p] < perm[p+1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AdString {
    len: usize,
    words: Vec<u64>,
}

impl AdString {
    pub fn zeros(len: usize) -> Self {
        AdString {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, p: usize) -> bool {
        self.words[p / 64] >> (p % 64) & 1 == 1
    }

    pub fn set(&mut self, p: usize, ascent: bool) {
        let bit = 1u64 << (p % 64);
        if ascent {
            self.words[p / 64] |= bit;
        } else {
            self.words[p / 64] &= !bit;
        }
    }

    pub fn is_all_ascents(&self) -> bool {
        (0..self.len).all(|p| self.get(p))
    }

    /// Concatenation `self ++ [bit] ++ other`.
    pub fn join(&self, bit: bool, other: &AdString) -> AdString {
        let mut out = AdString::zeros(self.len + 1 + other.len);
        for p in 0..self.len {
            out.set(p, self.get(p));
        }
        out.set(self.len, bit);
        for p in 0..other.len {
            out.set(self.len + 1 + p, other.get(p));
        }
        out
    }
}

impl fmt::Display for AdString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in 0..self.len {
            f.write_str(if self.get(p) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for AdString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut a = AdString::zeros(s.len());
        for (p, ch) in s.chars().enumerate() {
            match ch {
                '1' => a.set(p, true),
                '0' => {}
                _ => return Err(Error::InvalidInput(format!("not a 01-string: {s:?}"))),
            }
        }
        Ok(a)
    }
}

pub fn ascent_descent(perm: &[usize]) -> AdString {
    let len = perm.len().saturating_sub(1);
    let mut a = AdString::zeros(len);
    for p in 0..len {
        if perm[p] < perm[p + 1] {
            a.set(p, true);
        }
    }
    a
}

/// `x ↦ φ_i⁻¹(φ_j(x))` in one-line notation.
pub fn compose_entry(phi_i: &[usize], phi_j: &[usize]) -> Vec<usize> {
    assert_eq!(phi_i.len(), phi_j.len(), "permutations of different sizes");
    let inv = inverse(phi_i);
    phi_j.iter().map(|&y| inv[y - 1]).collect()
}

fn inverse(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (p, &v) in perm.iter().enumerate() {
        inv[v - 1] = p + 1;
    }
    inv
}

/// Interns ascent-descent words in order of first appearance.
#[derive(Debug, Clone, Default)]
pub struct SymbolTable {
    entries: Vec<AdString>,
    index: HashMap<AdString, u32>,
}

impl SymbolTable {
    pub fn intern(&mut self, s: AdString) -> u32 {
        if let Some(&k) = self.index.get(&s) {
            return k;
        }
        let k = self.entries.len() as u32;
        self.index.insert(s.clone(), k);
        self.entries.push(s);
        k
    }

    pub fn entries(&self) -> &[AdString] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Square matrix of monomial entries `a_k`, stored as 0-based symbol indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct SymbolicMatrix {
    n: usize,
    symbols: Vec<String>,
    entries: Vec<u32>,
}

/// Matrix file layout; symbol indices are 1-based.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub n: usize,
    pub symbols: Vec<String>,
    pub entries: Vec<Vec<u32>>,
}

impl TryFrom<MatrixJson> for SymbolicMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        if j.entries.len() != j.n || j.entries.iter().any(|r| r.len() != j.n) {
            return Err(Error::DimensionMismatch("entries must be n x n".into()));
        }
        let mut flat = Vec::with_capacity(j.n * j.n);
        for k in j.entries.into_iter().flatten() {
            if k == 0 {
                return Err(Error::InvalidInput("symbol indices are 1-based".into()));
            }
            flat.push(k - 1);
        }
        SymbolicMatrix::new(j.n, j.symbols, flat)
    }
}

impl From<SymbolicMatrix> for MatrixJson {
    fn from(m: SymbolicMatrix) -> Self {
        MatrixJson {
            n: m.n,
            entries: m.entries.chunks(m.n.max(1)).map(|r| r.iter().map(|k| k + 1).collect()).collect(),
            symbols: m.symbols,
        }
    }
}

impl SymbolicMatrix {
    pub fn new(n: usize, symbols: Vec<String>, entries: Vec<u32>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {n}x{n} matrix",
                entries.len()
            )));
        }
        if let Some(&k) = entries.iter().find(|&&k| k as usize >= symbols.len()) {
            return Err(Error::InvalidInput(format!("symbol index {} out of range", k + 1)));
        }
        let mut sorted = symbols.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("duplicate symbol names".into()));
        }
        Ok(SymbolicMatrix { n, symbols, entries })
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

    /// 0-based symbol index of entry `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> usize {
        self.entries[i * self.n + j] as usize
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn to_linear(&self) -> LinearMatrix {
        let entries = self.entries.iter().map(|&k| vec![(k as usize, 1)]).collect();
        LinearMatrix::new(self.n, self.symbols.clone(), entries).expect("validated on construction")
    }

    pub fn to_expr(&self) -> ExprMatrix {
        ExprMatrix::from_fn(self.n, |i, j| Expr::symbol(self.symbols[self.get(i, j)].clone()))
    }

    /// Index of the first row whose symbol multiset differs from row 0.
    pub fn unbalanced_row(&self) -> Option<usize> {
        let sorted_row = |i: usize| {
            let mut r = self.row(i).to_vec();
            r.sort_unstable();
            r
        };
        let first = sorted_row(0);
        (1..self.n).find(|&i| sorted_row(i) != first)
    }

    /// Whether both matrices agree after a bijective renaming of symbols.
    pub fn equivalent_up_to_renaming(&self, other: &SymbolicMatrix) -> bool {
        if self.n != other.n || self.symbols.len() != other.symbols.len() {
            return false;
        }
        let m = self.symbols.len();
        let mut fwd = vec![u32::MAX; m];
        let mut back = vec![u32::MAX; m];
        for (&a, &b) in self.entries.iter().zip(&other.entries) {
            let (a, b) = (a as usize, b as usize);
            if fwd[a] == u32::MAX && back[b] == u32::MAX {
                fwd[a] = b as u32;
                back[b] = a as u32;
            } else if fwd[a] != b as u32 || back[b] != a as u32 {
                return false;
            }
        }
        true
    }

    pub(crate) fn from_symbol_ids(n: usize, table: &SymbolTable, entries: Vec<u32>) -> Self {
        SymbolicMatrix {
            n,
            symbols: table.entries().iter().map(|s| s.to_string()).collect(),
            entries,
        }
    }
}

/// Builds M^X for `p`, with rows and columns in lexicographic extension order.
pub fn generate_mx(p: &Poset, cap: usize) -> Result<SymbolicMatrix> {
    let exts = linear_extensions(p, cap)?;
    Ok(mx_from_extensions(&exts))
}

/// M^X over an explicit list of extensions.
pub fn mx_from_extensions(exts: &[LinearExtension]) -> SymbolicMatrix {
    let n = exts.len();
    let inverses: Vec<Vec<usize>> = exts.iter().map(|e| inverse(e.as_slice())).collect();
    // words in parallel, numbering sequentially so the labels never depend
    // on the schedule
    let rows: Vec<Vec<AdString>> = inverses
        .par_iter()
        .map(|inv| {
            exts.iter()
                .map(|phi_j| {
                    let w: Vec<usize> = phi_j.as_slice().iter().map(|&y| inv[y - 1]).collect();
                    ascent_descent(&w)
                })
                .collect()
        })
        .collect();
    let mut table = SymbolTable::default();
    let mut entries = Vec::with_capacity(n * n);
    for row in rows {
        for s in row {
            entries.push(table.intern(s));
        }
    }
    SymbolicMatrix::from_symbol_ids(n, &table, entries)
}
