//! Power-of-two encodings of symbols and balanced-digit decoding of the
//! resulting numeric eigenvalues.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::real::Real;

pub const DEFAULT_GUARD_BITS: u32 = 32;

/// Assignment of numeric values to symbols. Active symbol `k` gets
/// `B^power[k]`; masked symbols get 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoding {
    base_log2: u32,
    coeff_bound: u64,
    powers: Vec<Option<u32>>,
    precision_bits: u32,
}

impl Encoding {
    pub fn base_log2(&self) -> u32 {
        self.base_log2
    }

    pub fn base(&self) -> u64 {
        1u64 << self.base_log2
    }

    pub fn coeff_bound(&self) -> u64 {
        self.coeff_bound
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    pub fn set_precision_bits(&mut self, bits: u32) {
        self.precision_bits = bits;
    }

    pub fn symbol_count(&self) -> usize {
        self.powers.len()
    }

    /// Power of `B` assigned to symbol `k`, or `None` if it is masked.
    pub fn power(&self, k: usize) -> Option<u32> {
        self.powers[k]
    }

    /// `log2` of the value of symbol `k`.
    pub fn value_log2(&self, k: usize) -> Option<u64> {
        self.powers[k].map(|p| p as u64 * self.base_log2 as u64)
    }

    /// Value of symbol `k` if it fits in a `u128`.
    pub fn value(&self, k: usize) -> Option<u128> {
        match self.value_log2(k) {
            None => Some(0),
            Some(e) if e < 128 => Some(1u128 << e),
            Some(_) => None,
        }
    }

    fn active(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.powers.iter().enumerate().filter_map(|(k, p)| p.map(|p| (k, p)))
    }

    pub fn active_count(&self) -> usize {
        self.active().count()
    }
}

/// Encoding with coefficient bound `C = n` and the default guard.
pub fn build_encoding(m: usize, n: usize, batch: Option<&[usize]>) -> Result<Encoding> {
    build_encoding_with(m, n as u64, batch, DEFAULT_GUARD_BITS)
}

pub fn build_encoding_with(m: usize, coeff_bound: u64, batch: Option<&[usize]>, guard_bits: u32) -> Result<Encoding> {
    if m == 0 {
        return Err(Error::InvalidInput("encoding needs at least one symbol".into()));
    }
    let c = coeff_bound.max(1);
    let base_log2 = (2 * c + 2).next_power_of_two().trailing_zeros();
    let mut powers = vec![None; m];
    match batch {
        None => {
            for (k, p) in powers.iter_mut().enumerate() {
                *p = Some(k as u32 + 1);
            }
        }
        Some(batch) => {
            let mut sorted = batch.to_vec();
            sorted.sort_unstable();
            if sorted.is_empty() || sorted.windows(2).any(|w| w[0] == w[1]) || sorted[sorted.len() - 1] >= m {
                return Err(Error::InvalidInput("batch must be a non-empty set of symbol indices".into()));
            }
            for (i, &k) in sorted.iter().enumerate() {
                powers[k] = Some(i as u32 + 1);
            }
        }
    }
    let active = powers.iter().flatten().count() as u32;
    Ok(Encoding {
        base_log2,
        coeff_bound: c,
        powers,
        precision_bits: (active + 1) * base_log2 + guard_bits,
    })
}

/// Integer coefficient vector over the symbols of a matrix.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ZLinearForm {
    pub coeffs: Vec<i64>,
}

impl ZLinearForm {
    pub fn zero(m: usize) -> Self {
        ZLinearForm { coeffs: vec![0; m] }
    }

    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().zip(values).map(|(&c, &v)| c as f64 * v).sum()
    }

    /// Human-readable form such as `a1 - 2*a3`.
    pub fn display(&self, symbols: &[String]) -> String {
        let mut out = String::new();
        for (k, &c) in self.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let mag = c.unsigned_abs();
            if out.is_empty() {
                if c < 0 {
                    out.push('-');
                }
            } else {
                out.push_str(if c < 0 { " - " } else { " + " });
            }
            if mag != 1 {
                out.push_str(&format!("{mag}*"));
            }
            out.push_str(&symbols[k]);
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }
}

/// Outcome of decoding one eigenvalue: the digits, and the leftover
/// remainder which is below `B/4` in magnitude.
#[derive(Debug, Clone)]
pub struct Decoded {
    pub form: ZLinearForm,
    pub remainder: f64,
}

/// Balanced-digit extraction from the highest power down.
pub fn decode_form<T: Real>(re: &T, im: &T, e: &Encoding) -> Result<Decoded> {
    let quarter_log2 = e.base_log2 as f64 - 2.0;
    let not_linear = |reason: String| Error::NotZLinear {
        value: format!("{:e}{:+e}i", re.to_f64(), im.to_f64()),
        reason,
    };
    if !im.is_zero() && im.log2_abs() >= quarter_log2 {
        return Err(not_linear("imaginary part exceeds B/4".into()));
    }
    let bits = re.bits();
    let mut order: Vec<(usize, u32)> = e.active().collect();
    order.sort_by_key(|&(_, p)| std::cmp::Reverse(p));
    let mut coeffs = vec![0i64; e.powers.len()];
    let mut r = re.clone();
    for (k, p) in order {
        let shift = p as i64 * e.base_log2 as i64;
        let digit = r.mul_pow2(-shift).round();
        let c = digit.to_f64();
        if !c.is_finite() || c.abs() > e.coeff_bound as f64 {
            return Err(not_linear(format!("digit {c} for symbol {} exceeds the bound {}", k + 1, e.coeff_bound)));
        }
        r = r.sub(&T::from_i64(c as i64, bits).mul_pow2(shift));
        coeffs[k] = c as i64;
    }
    if !r.is_zero() && r.log2_abs() >= quarter_log2 {
        return Err(not_linear(format!("remainder {:e} exceeds B/4", r.to_f64())));
    }
    Ok(Decoded {
        form: ZLinearForm { coeffs },
        remainder: r.to_f64(),
    })
}
