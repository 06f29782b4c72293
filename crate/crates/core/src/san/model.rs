//! Multidimensional models: Kronecker terms over per-position factors, and
//! the spectrum of the assembled generator composed from factor spectra.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mx::{MatrixJson, SymbolicMatrix};
use crate::solver::{solve, SolveOptions};
use crate::symbolic::{Expr, ExprMatrix, LinearMatrix, LinearMatrixJson};

use super::kron::{kron_prod_expr, make_generator, GeneratorMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectralMode {
    Sum,
    Product,
}

/// How two spectra combine: pairwise sum or product, then minus `shift`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpectralMap {
    pub mode: SpectralMode,
    pub shift: Expr,
}

/// All pairings of `sa` with `sb` under `map`, sorted.
pub fn compose_spectrum(sa: &[Expr], sb: &[Expr], map: &SpectralMap) -> Vec<Expr> {
    let mut out = Vec::with_capacity(sa.len() * sb.len());
    for x in sa {
        for y in sb {
            let v = match map.mode {
                SpectralMode::Sum => x.add(y),
                SpectralMode::Product => x.mul(y),
            };
            out.push(v.sub(&map.shift));
        }
    }
    out.sort();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermKind {
    Local,
    Sync,
}

/// One Kronecker term: per position, a factor index or the identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub kind: TermKind,
    /// 0-based factor indices; `None` is the identity at that position.
    pub components: Vec<Option<usize>>,
}

/// Factor matrix in either file format.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FactorJson {
    Monomial(MatrixJson),
    Linear(LinearMatrixJson),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TermJson {
    kind: TermKind,
    /// 1-based factor indices, `null` for identity.
    components: Vec<Option<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SanModelJson {
    factors: Vec<FactorJson>,
    terms: Vec<TermJson>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SanModel {
    factors: Vec<ExprMatrix>,
    terms: Vec<Term>,
    dims: Vec<usize>,
}

impl SanModel {
    /// Validates term shapes. Symbols shared between different factors
    /// are qualified as `F<h>.<name>` (1-based `h`) so that factors stay
    /// independent.
    pub fn new(factors: Vec<ExprMatrix>, terms: Vec<Term>) -> Result<Self> {
        if factors.is_empty() || terms.is_empty() {
            return Err(Error::InvalidInput("a model needs at least one factor and one term".into()));
        }
        let h = terms[0].components.len();
        if h == 0 {
            return Err(Error::InvalidInput("terms need at least one position".into()));
        }
        let mut dims: Vec<Option<usize>> = vec![None; h];
        for (t, term) in terms.iter().enumerate() {
            if term.components.len() != h {
                return Err(Error::DimensionMismatch(format!(
                    "term {} has {} positions, expected {h}",
                    t + 1,
                    term.components.len()
                )));
            }
            let active = term.components.iter().flatten().count();
            match term.kind {
                TermKind::Local if active != 1 => {
                    return Err(Error::InvalidInput(format!(
                        "local term {} must have exactly one non-identity component",
                        t + 1
                    )))
                }
                _ if active == 0 => {
                    return Err(Error::InvalidInput(format!("term {} is the identity", t + 1)));
                }
                _ => {}
            }
            for (pos, c) in term.components.iter().enumerate() {
                let Some(f) = *c else { continue };
                let Some(fm) = factors.get(f) else {
                    return Err(Error::InvalidInput(format!("term {} refers to factor {}", t + 1, f + 1)));
                };
                match dims[pos] {
                    Some(d) if d != fm.n() => {
                        return Err(Error::DimensionMismatch(format!(
                            "position {} mixes dimensions {d} and {}",
                            pos + 1,
                            fm.n()
                        )))
                    }
                    _ => dims[pos] = Some(fm.n()),
                }
            }
        }
        let dims: Vec<usize> = dims
            .iter()
            .enumerate()
            .map(|(p, d)| d.ok_or_else(|| Error::InvalidInput(format!("position {} is never used", p + 1))))
            .collect::<Result<_>>()?;

        let names: Vec<BTreeSet<String>> =
            factors.iter().map(|f| f.base_symbols().into_iter().collect()).collect();
        if names.iter().flatten().any(|s| s.contains('*') || s.is_empty()) {
            return Err(Error::InvalidInput("symbol names must be non-empty and free of '*'".into()));
        }
        let clash = (0..names.len()).any(|i| (i + 1..names.len()).any(|j| !names[i].is_disjoint(&names[j])));
        let factors = if clash {
            factors
                .iter()
                .enumerate()
                .map(|(i, f)| f.rename(&|s| format!("F{}.{s}", i + 1)))
                .collect()
        } else {
            factors
        };
        Ok(SanModel { factors, terms, dims })
    }

    /// Local sum `⊕ factors` over positions.
    pub fn local(factors: Vec<ExprMatrix>) -> Result<Self> {
        let h = factors.len();
        let terms = (0..h)
            .map(|i| Term {
                kind: TermKind::Local,
                components: (0..h).map(|p| (p == i).then_some(i)).collect(),
            })
            .collect();
        SanModel::new(factors, terms)
    }

    /// Single synchronized term `⊗ factors`.
    pub fn synchronized(factors: Vec<ExprMatrix>) -> Result<Self> {
        let h = factors.len();
        let terms = vec![Term {
            kind: TermKind::Sync,
            components: (0..h).map(Some).collect(),
        }];
        SanModel::new(factors, terms)
    }

    pub fn factors(&self) -> &[ExprMatrix] {
        &self.factors
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dimension(&self) -> usize {
        self.dims.iter().product()
    }

    fn term_matrix(&self, term: &Term) -> ExprMatrix {
        let mut acc: Option<ExprMatrix> = None;
        for (pos, c) in term.components.iter().enumerate() {
            let m = match c {
                Some(f) => self.factors[*f].clone(),
                None => ExprMatrix::identity(self.dims[pos]),
            };
            acc = Some(match acc {
                None => m,
                Some(a) => kron_prod_expr(&a, &m),
            });
        }
        acc.expect("at least one position")
    }

    /// `Q0 = Σ_k ⊗_h Q_k^(h)`.
    pub fn assemble(&self) -> ExprMatrix {
        let mut total: Option<ExprMatrix> = None;
        for t in &self.terms {
            let m = self.term_matrix(t);
            total = Some(match total {
                None => m,
                Some(acc) => acc.add(&m).expect("equal dimensions"),
            });
        }
        total.expect("at least one term")
    }

    pub fn generator(&self) -> GeneratorMatrix {
        make_generator(&self.assemble())
    }

    /// The single factor used at each position, if positions never mix
    /// different factors.
    fn position_factors(&self) -> Option<Vec<usize>> {
        let mut per: Vec<Option<usize>> = vec![None; self.dims.len()];
        for t in &self.terms {
            for (p, c) in t.components.iter().enumerate() {
                if let Some(f) = c {
                    match per[p] {
                        Some(g) if g != *f => return None,
                        _ => per[p] = Some(*f),
                    }
                }
            }
        }
        per.into_iter().collect()
    }

    /// Spectrum of the generator from the factor spectra: every choice of
    /// one eigenvalue per position contributes `Σ_terms Π_positions λ`,
    /// minus the common row sum. `None` when positions mix factors or the
    /// row sums of `Q0` differ.
    pub fn composed_spectrum(&self, factor_spectra: &[Vec<Expr>]) -> Result<Option<Vec<Expr>>> {
        if factor_spectra.len() != self.factors.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} spectra for {} factors",
                factor_spectra.len(),
                self.factors.len()
            )));
        }
        for (f, s) in factor_spectra.iter().enumerate() {
            if s.len() != self.factors[f].n() {
                return Err(Error::DimensionMismatch(format!("factor {} spectrum has {} values", f + 1, s.len())));
            }
        }
        let Some(per) = self.position_factors() else { return Ok(None) };
        let Some(k) = self.assemble().constant_row_sum() else { return Ok(None) };

        let total = self.dimension();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; self.dims.len()];
        for _ in 0..total {
            let mut ev = Expr::zero();
            for t in &self.terms {
                let mut prod: Option<Expr> = None;
                for (p, c) in t.components.iter().enumerate() {
                    if c.is_some() {
                        let lam = &factor_spectra[per[p]][idx[p]];
                        prod = Some(match prod {
                            None => lam.clone(),
                            Some(acc) => acc.mul(lam),
                        });
                    }
                }
                ev = ev.add(&prod.expect("non-identity term"));
            }
            out.push(ev.sub(&k));
            // odometer over positions, last position fastest
            for p in (0..idx.len()).rev() {
                idx[p] += 1;
                if idx[p] < self.dims[p] {
                    break;
                }
                idx[p] = 0;
            }
        }
        out.sort();
        Ok(Some(out))
    }

    /// Solves every factor exactly and composes.
    pub fn solve_composed(&self, opts: &SolveOptions) -> Result<Option<Vec<Expr>>> {
        let spectra: Vec<Vec<Expr>> = self
            .factors
            .iter()
            .map(|f| solve(&f.to_linear(), opts).map(|s| s.to_exprs()))
            .collect::<Result<_>>()?;
        self.composed_spectrum(&spectra)
    }
}

impl TryFrom<SanModelJson> for SanModel {
    type Error = Error;

    fn try_from(j: SanModelJson) -> Result<Self> {
        let factors = j
            .factors
            .into_iter()
            .map(|f| match f {
                FactorJson::Monomial(m) => SymbolicMatrix::try_from(m).map(|m| m.to_expr()),
                FactorJson::Linear(l) => LinearMatrix::try_from(l).map(|l| l.to_expr()),
            })
            .collect::<Result<Vec<_>>>()?;
        let terms = j
            .terms
            .into_iter()
            .map(|t| {
                let components = t
                    .components
                    .into_iter()
                    .map(|c| match c {
                        Some(0) => Err(Error::InvalidInput("factor indices are 1-based".into())),
                        Some(f) => Ok(Some(f - 1)),
                        None => Ok(None),
                    })
                    .collect::<Result<_>>()?;
                Ok(Term { kind: t.kind, components })
            })
            .collect::<Result<Vec<_>>>()?;
        SanModel::new(factors, terms)
    }
}

impl From<&SanModel> for SanModelJson {
    fn from(m: &SanModel) -> Self {
        SanModelJson {
            factors: m
                .factors
                .iter()
                .map(|f| FactorJson::Linear(LinearMatrixJson::from(&f.to_linear())))
                .collect(),
            terms: m
                .terms
                .iter()
                .map(|t| TermJson {
                    kind: t.kind,
                    components: t.components.iter().map(|c| c.map(|f| f + 1)).collect(),
                })
                .collect(),
        }
    }
}
