//! Direct generator for the disjoint-block subclass of M^X.
//!
//! The dimension is given as a product of Fibonacci factors. A factor `f`
//! selects a block of `m` elements with `fib(m + 1) = f`; the block's
//! extensions are the products of non-overlapping adjacent transpositions,
//! indexed here by swap masks. Entries are assembled from per-block
//! ascent-descent tables, so no permutation of the full ground set is ever
//! built.

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mx::{ascent_descent, AdString, SymbolTable, SymbolicMatrix};

/// `fib(1) = fib(2) = 1`.
pub fn fib(k: u32) -> u64 {
    let (mut a, mut b) = (0u64, 1u64);
    for _ in 0..k {
        (a, b) = (b, a.saturating_add(b));
    }
    a
}

/// A validated Fibonacci factorization of the matrix dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FibFactorization {
    factors: Vec<u64>,
    block_sizes: Vec<usize>,
    n: u64,
}

impl FibFactorization {
    pub fn factors(&self) -> &[u64] {
        &self.factors
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn n(&self) -> u64 {
        self.n
    }
}

/// Parses a `dfac` list such as `[2, 13]` (dimension 26, blocks of 2 and 6).
pub fn parse_dfac(factors: &[u64]) -> Result<FibFactorization> {
    if factors.is_empty() {
        return Err(Error::InvalidInput("dfac must not be empty".into()));
    }
    let mut block_sizes = Vec::with_capacity(factors.len());
    let mut n = 1u64;
    for &f in factors {
        // factor 1 is Fibonacci but selects a block with a single extension
        if f < 2 {
            return Err(Error::NotFibonacci(f));
        }
        let m = (2..94u32)
            .find(|&k| fib(k) >= f)
            .filter(|&k| fib(k) == f)
            .ok_or(Error::NotFibonacci(f))?;
        block_sizes.push(m as usize - 1);
        n = n
            .checked_mul(f)
            .ok_or_else(|| Error::InvalidInput("dimension overflows u64".into()))?;
    }
    Ok(FibFactorization {
        factors: factors.to_vec(),
        block_sizes,
        n,
    })
}

/// Non-adjacent adjacent-transposition set within one block. Bit `p` swaps
/// the block's positions `p` and `p + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SwapMask {
    len: u8,
    bits: u64,
}

impl SwapMask {
    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn swaps(&self, p: usize) -> bool {
        self.bits >> p & 1 == 1
    }

    /// The involution on `0..=len` this mask encodes.
    pub fn involution(&self) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..=self.len()).collect();
        for p in 0..self.len() {
            if self.swaps(p) {
                perm.swap(p, p + 1);
            }
        }
        perm
    }
}

impl fmt::Display for SwapMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in 0..self.len() {
            f.write_str(if self.swaps(p) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// All swap masks of a block of `m` elements, counting in binary with the
/// first pair as the most significant digit. This is the lexicographic
/// order of the corresponding involutions.
pub fn block_masks(m: usize) -> Vec<SwapMask> {
    assert!((1..=64).contains(&m), "block size {m} out of range");
    fn grow(len: usize, p: usize, bits: u64, out: &mut Vec<SwapMask>) {
        if p == len {
            out.push(SwapMask { len: len as u8, bits });
            return;
        }
        grow(len, p + 1, bits, out);
        if p == 0 || bits >> (p - 1) & 1 == 0 {
            grow(len, p + 1, bits | 1 << p, out);
        }
    }
    let mut out = Vec::new();
    grow(m - 1, 0, 0, &mut out);
    out
}

/// Cartesian product of the per-block mask lists, first block outermost.
pub fn epsilon_filtration(block_sizes: &[usize], cap: usize) -> Result<Vec<Vec<SwapMask>>> {
    if block_sizes.iter().any(|&m| m == 0 || m > 64) {
        return Err(Error::InvalidInput("block sizes must lie in 1..=64".into()));
    }
    let total = block_sizes
        .iter()
        .try_fold(1usize, |acc, &m| acc.checked_mul(fib(m as u32 + 1) as usize))
        .filter(|&t| t <= cap)
        .ok_or(Error::CapExceeded { cap })?;
    let per_block: Vec<Vec<SwapMask>> = block_sizes.iter().map(|&m| block_masks(m)).collect();
    let mut out = Vec::with_capacity(total);
    for idx in 0..total {
        let digits = mixed_radix(idx, &per_block.iter().map(Vec::len).collect::<Vec<_>>());
        out.push(digits.iter().zip(&per_block).map(|(&d, b)| b[d]).collect());
    }
    Ok(out)
}

fn mixed_radix(mut idx: usize, radices: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; radices.len()];
    for (d, &r) in digits.iter_mut().zip(radices).rev() {
        *d = idx % r;
        idx /= r;
    }
    digits
}

struct BlockTable {
    size: usize,
    // local symbol id of (i, j), row-major
    ids: Vec<u32>,
    words: Vec<AdString>,
}

impl BlockTable {
    fn new(m: usize) -> Self {
        let invs: Vec<Vec<usize>> = block_masks(m).iter().map(SwapMask::involution).collect();
        let size = invs.len();
        let mut local = SymbolTable::default();
        let mut ids = Vec::with_capacity(size * size);
        for si in &invs {
            for sj in &invs {
                // involutions are their own inverses
                let w: Vec<usize> = sj.iter().map(|&x| si[x]).collect();
                ids.push(local.intern(ascent_descent(&w)));
            }
        }
        BlockTable {
            size,
            ids,
            words: local.entries().to_vec(),
        }
    }
}

/// Builds the matrix for `f`; equal to the general construction on
/// `chain_block_poset(f.block_sizes())`, symbol numbering included.
pub fn generate_stochastic_mx(f: &FibFactorization, cap: usize) -> Result<SymbolicMatrix> {
    let n = usize::try_from(f.n()).ok().filter(|&n| n <= cap).ok_or(Error::CapExceeded { cap })?;
    let tables: Vec<BlockTable> = f.block_sizes().iter().map(|&m| BlockTable::new(m)).collect();
    let radices: Vec<usize> = tables.iter().map(|t| t.size).collect();
    let key_radices: Vec<u64> = tables.iter().map(|t| t.words.len() as u64).collect();

    let digits: Vec<Vec<usize>> = (0..n).map(|i| mixed_radix(i, &radices)).collect();
    let keys: Vec<Vec<u64>> = digits
        .par_iter()
        .map(|di| {
            digits
                .iter()
                .map(|dj| {
                    tables.iter().enumerate().fold(0u64, |key, (b, t)| {
                        key * key_radices[b] + t.ids[di[b] * t.size + dj[b]] as u64
                    })
                })
                .collect()
        })
        .collect();

    let mut global: HashMap<u64, u32> = HashMap::new();
    let mut table = SymbolTable::default();
    let mut entries = Vec::with_capacity(n * n);
    for key in keys.into_iter().flatten() {
        let id = match global.get(&key) {
            Some(&id) => id,
            None => {
                let word = block_word(key, &tables, &key_radices);
                let id = table.intern(word);
                global.insert(key, id);
                id
            }
        };
        entries.push(id);
    }
    Ok(SymbolicMatrix::from_symbol_ids(n, &table, entries))
}

fn block_word(key: u64, tables: &[BlockTable], radices: &[u64]) -> AdString {
    let mut ids = vec![0usize; tables.len()];
    let mut k = key;
    for b in (0..tables.len()).rev() {
        ids[b] = (k % radices[b]) as usize;
        k /= radices[b];
    }
    let mut word = tables[0].words[ids[0]].clone();
    for b in 1..tables.len() {
        // consecutive blocks occupy increasing value ranges: always an ascent
        word = word.join(true, &tables[b].words[ids[b]]);
    }
    word
}

/// Substitutes `values[k]` for symbol `k` and checks every row sums to one.
pub fn substitute_and_check_stochastic(m: &SymbolicMatrix, values: &[f64]) -> Result<DMatrix<f64>> {
    if values.len() != m.symbol_count() {
        return Err(Error::InvalidInput(format!(
            "{} values for {} symbols",
            values.len(),
            m.symbol_count()
        )));
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidInput("substituted values must be finite and nonnegative".into()));
    }
    if let Some(row) = m.unbalanced_row() {
        return Err(Error::NotRowBalanced { row });
    }
    let a = DMatrix::from_fn(m.n(), m.n(), |i, j| values[m.get(i, j)]);
    for (row, r) in a.row_iter().enumerate() {
        let sum: f64 = r.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::NotStochastic { row, sum });
        }
    }
    Ok(a)
}
