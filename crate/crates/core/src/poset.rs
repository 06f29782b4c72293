//! Finite strict partial orders and their linear extensions.
//!
//! A relation `(u, v)` constrains *values*: in every linear extension,
//! written in one-line notation, the value `u` appears before the value `v`.
//! For the order `2 < 3, 2 < 1` this gives the extensions `213` and `231`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default bound on the number of enumerated extensions.
pub const DEFAULT_EXTENSION_CAP: usize = 1_000_000;

/// A validated strict partial order on `{1..n}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PosetJson", into = "PosetJson")]
pub struct Poset {
    n: usize,
    relations: Vec<(usize, usize)>,
    // closure[u * n + v] == true iff u precedes v (0-based)
    closure: Vec<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PosetJson {
    n: usize,
    relations: Vec<[usize; 2]>,
}

impl TryFrom<PosetJson> for Poset {
    type Error = Error;

    fn try_from(raw: PosetJson) -> Result<Self> {
        Poset::new(raw.n, raw.relations.iter().map(|&[u, v]| (u, v)))
    }
}

impl From<Poset> for PosetJson {
    fn from(p: Poset) -> Self {
        PosetJson {
            n: p.n,
            relations: p.relations.iter().map(|&(u, v)| [u, v]).collect(),
        }
    }
}

impl Poset {
    /// Validates `relations` on `{1..n}` and precomputes the transitive closure.
    pub fn new(n: usize, relations: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("poset must have at least one element".into()));
        }
        let mut rels: Vec<(usize, usize)> = Vec::new();
        for (u, v) in relations {
            for x in [u, v] {
                if x == 0 || x > n {
                    return Err(Error::OutOfRange { value: x, n });
                }
            }
            if u == v {
                return Err(Error::CycleDetected(u, v));
            }
            rels.push((u, v));
        }
        rels.sort_unstable();
        rels.dedup();

        let mut closure = vec![false; n * n];
        for &(u, v) in &rels {
            closure[(u - 1) * n + (v - 1)] = true;
        }
        // Warshall
        for k in 0..n {
            for i in 0..n {
                if !closure[i * n + k] {
                    continue;
                }
                for j in 0..n {
                    if closure[k * n + j] {
                        closure[i * n + j] = true;
                    }
                }
            }
        }
        for u in 0..n {
            for v in u + 1..n {
                if closure[u * n + v] && closure[v * n + u] {
                    return Err(Error::CycleDetected(u + 1, v + 1));
                }
            }
        }
        Ok(Poset {
            n,
            relations: rels,
            closure,
        })
    }

    /// The antichain on `{1..n}`.
    pub fn empty(n: usize) -> Result<Self> {
        Poset::new(n, std::iter::empty())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Canonical relation list: sorted, without duplicates.
    pub fn relations(&self) -> &[(usize, usize)] {
        &self.relations
    }

    /// Whether `u` precedes `v` in the transitive closure (1-based values).
    pub fn precedes(&self, u: usize, v: usize) -> bool {
        self.closure[(u - 1) * self.n + (v - 1)]
    }

    /// All pairs of the transitive closure, sorted.
    pub fn closure_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n;
        (0..n * n)
            .filter(|&k| self.closure[k])
            .map(|k| (k / n + 1, k % n + 1))
            .collect()
    }

    /// Whether `perm` respects every relation.
    pub fn is_extension(&self, perm: &[usize]) -> bool {
        if perm.len() != self.n {
            return false;
        }
        let mut pos = vec![usize::MAX; self.n];
        for (p, &v) in perm.iter().enumerate() {
            if v == 0 || v > self.n || pos[v - 1] != usize::MAX {
                return false;
            }
            pos[v - 1] = p;
        }
        self.relations.iter().all(|&(u, v)| pos[u - 1] < pos[v - 1])
    }
}

/// A permutation in one-line notation that respects a poset.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinearExtension(Vec<usize>);

impl LinearExtension {
    /// Wraps a one-line permutation of `{1..n}`; panics if it is not one.
    pub fn from_perm(perm: Vec<usize>) -> Self {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &v in &perm {
            assert!(v >= 1 && v <= n && !seen[v - 1], "not a permutation: {perm:?}");
            seen[v - 1] = true;
        }
        LinearExtension(perm)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

impl fmt::Display for LinearExtension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if self.0.len() > 9 { " " } else { "" };
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(sep)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Enumerates every linear extension in lexicographic order.
///
/// Prefixes are grown only by elements whose predecessors are all placed, so
/// the work is proportional to the size of the output rather than `n!`.
pub fn linear_extensions(p: &Poset, cap: usize) -> Result<Vec<LinearExtension>> {
    let n = p.n;
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for &(u, v) in &p.relations {
        succ[u - 1].push(v - 1);
        indeg[v - 1] += 1;
    }

    struct Walk<'a> {
        succ: &'a [Vec<usize>],
        indeg: Vec<usize>,
        placed: Vec<bool>,
        prefix: Vec<usize>,
        out: Vec<LinearExtension>,
        cap: usize,
    }

    impl Walk<'_> {
        fn extend(&mut self) -> Result<()> {
            let n = self.placed.len();
            if self.prefix.len() == n {
                if self.out.len() == self.cap {
                    return Err(Error::CapExceeded { cap: self.cap });
                }
                self.out.push(LinearExtension(self.prefix.clone()));
                return Ok(());
            }
            for x in 0..n {
                if self.placed[x] || self.indeg[x] != 0 {
                    continue;
                }
                self.placed[x] = true;
                self.prefix.push(x + 1);
                for &y in &self.succ[x] {
                    self.indeg[y] -= 1;
                }
                self.extend()?;
                for &y in &self.succ[x] {
                    self.indeg[y] += 1;
                }
                self.prefix.pop();
                self.placed[x] = false;
            }
            Ok(())
        }
    }

    let mut walk = Walk {
        succ: &succ,
        indeg,
        placed: vec![false; n],
        prefix: Vec::with_capacity(n),
        out: Vec::new(),
        cap,
    };
    walk.extend()?;
    Ok(walk.out)
}

/// Poset built from consecutive blocks of local-transposition chains.
///
/// Inside a block, `i` precedes `j` whenever `j >= i + 2`, so each extension
/// of a block of size `m` is a product of disjoint adjacent transpositions
/// and there are `fib(m + 1)` of them. Every element of a block precedes
/// every element of the following block. Only covering relations are stored,
/// which for sizes `[5, 2]` are exactly the nine arrows of the two-chain
/// example (`1<3, 1<4, 2<4, 2<5, 3<5, 4<6, 4<7, 5<6, 5<7`).
pub fn chain_block_poset(block_sizes: &[usize]) -> Result<Poset> {
    if block_sizes.is_empty() || block_sizes.contains(&0) {
        return Err(Error::InvalidInput("block sizes must be positive".into()));
    }
    let n: usize = block_sizes.iter().sum();
    let mut rels = Vec::new();
    let mut start = 1;
    for (b, &m) in block_sizes.iter().enumerate() {
        let end = start + m - 1;
        for i in start..=end {
            for d in [2, 3] {
                if i + d <= end {
                    rels.push((i, i + d));
                }
            }
        }
        if let Some(&next) = block_sizes.get(b + 1) {
            let tail = end.saturating_sub(1).max(start)..=end;
            let head = (end + 1)..=(end + next.min(2));
            for u in tail {
                for v in head.clone() {
                    rels.push((u, v));
                }
            }
        }
        start = end + 1;
    }
    Poset::new(n, rels)
}
