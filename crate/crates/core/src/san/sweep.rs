//! Spectrum of `F(t) = s ⊕ M_h(t) + (1 - s) ⊗ M_h(t) + Q_D(t)` over a
//! time grid, where each factor `M_h` is a symbolic matrix whose symbols
//! follow periodic entry functions.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::io::{self, Write};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mx::SymbolicMatrix;
use crate::poset::DEFAULT_EXTENSION_CAP;
use crate::solver::{reference_eigenvalues, SolveOptions};
use crate::stochastic::{generate_stochastic_mx, parse_dfac};

use super::kron::{kron_prod, kron_sum, make_generator_f64};
use super::model::SanModel;

/// `base + amp * sin(2π freq t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntryFn {
    pub base: f64,
    pub amp: f64,
    pub freq: f64,
    pub phase: f64,
}

impl EntryFn {
    pub fn constant(v: f64) -> Self {
        EntryFn { base: v, amp: 0.0, freq: 0.0, phase: 0.0 }
    }

    pub fn at(&self, t: f64) -> f64 {
        self.base + self.amp * (TAU * self.freq * t + self.phase).sin()
    }

    /// `sup |f'|`.
    pub fn max_slope(&self) -> f64 {
        (self.amp * TAU * self.freq).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepFactor {
    pub matrix: SymbolicMatrix,
    /// One function per symbol of `matrix`.
    pub entries: Vec<EntryFn>,
}

impl SweepFactor {
    pub fn values(&self, t: f64) -> Vec<f64> {
        self.entries.iter().map(|f| f.at(t)).collect()
    }

    pub fn at(&self, t: f64) -> DMatrix<f64> {
        self.matrix.to_linear().evaluate(&self.values(t))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub s: f64,
    pub factors: Vec<SweepFactor>,
    pub grid: Vec<f64>,
}

impl SweepConfig {
    pub fn new(s: f64, factors: Vec<SweepFactor>, grid: Vec<f64>) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::InvalidInput(format!("s = {s} is outside [0, 1]")));
        }
        if factors.is_empty() {
            return Err(Error::InvalidInput("no factors".into()));
        }
        for (h, f) in factors.iter().enumerate() {
            if f.entries.len() != f.matrix.symbol_count() {
                return Err(Error::DimensionMismatch(format!(
                    "factor {} has {} symbols but {} entry functions",
                    h + 1,
                    f.matrix.symbol_count(),
                    f.entries.len()
                )));
            }
        }
        if grid.is_empty() || grid.iter().any(|t| !t.is_finite()) || grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("time grid must be finite and strictly increasing".into()));
        }
        Ok(SweepConfig { s, factors, grid })
    }

    /// Three stochastic blocks of dimensions 2, 3 and 2 with random
    /// nonnegative periodic entries.
    pub fn toy(s: f64, grid: Vec<f64>, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let factors = [2u64, 3, 2]
            .iter()
            .map(|&d| {
                let matrix = generate_stochastic_mx(&parse_dfac(&[d])?, DEFAULT_EXTENSION_CAP)?;
                let entries = (0..matrix.symbol_count())
                    .map(|_| {
                        let base = rng.gen_range(0.2..1.0);
                        EntryFn {
                            base,
                            amp: rng.gen_range(0.0..0.5) * base,
                            freq: rng.gen_range(1..=3) as f64,
                            phase: rng.gen_range(0.0..TAU),
                        }
                    })
                    .collect();
                Ok(SweepFactor { matrix, entries })
            })
            .collect::<Result<Vec<_>>>()?;
        SweepConfig::new(s, factors, grid)
    }

    /// Same factors with every entry frozen at its value at `t`.
    pub fn frozen(&self, t: f64) -> SweepConfig {
        let factors = self
            .factors
            .iter()
            .map(|f| SweepFactor {
                matrix: f.matrix.clone(),
                entries: f.entries.iter().map(|e| EntryFn::constant(e.at(t))).collect(),
            })
            .collect();
        SweepConfig { s: self.s, factors, grid: self.grid.clone() }
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.matrix.n()).collect()
    }

    pub fn dimension(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn matrix_at(&self, t: f64) -> Result<DMatrix<f64>> {
        let ms: Vec<DMatrix<f64>> = self.factors.iter().map(|f| f.at(t)).collect();
        let mut sum = ms[0].clone();
        let mut prod = ms[0].clone();
        for m in &ms[1..] {
            sum = kron_sum(&sum, m)?;
            prod = kron_prod(&prod, m)?;
        }
        make_generator_f64(&(sum * self.s + prod * (1.0 - self.s)))
    }

    /// Upper estimate of `sup ‖F'(t)‖_F` from the entry-function slopes.
    pub fn lipschitz_bound(&self) -> f64 {
        // Frobenius norms: ‖I_a ⊗ X ⊗ I_b‖ = √(ab)‖X‖, ‖X ⊗ Y‖ = ‖X‖‖Y‖,
        // product rule for the synchronized term; ‖M_h‖, ‖M_h'‖ bounded
        // entrywise by sup |f| and sup |f'|
        let n_h: Vec<f64> = self.factors.iter().map(|f| f.matrix.n() as f64).collect();
        let val: Vec<f64> = self
            .factors
            .iter()
            .map(|f| frobenius_bound(f, |e| e.base.abs() + e.amp.abs()))
            .collect();
        let der: Vec<f64> = self.factors.iter().map(|f| frobenius_bound(f, EntryFn::max_slope)).collect();
        let total: f64 = n_h.iter().product();
        let mut sum_d = 0.0;
        let mut prod_d = 0.0;
        for h in 0..self.factors.len() {
            let others: f64 = total / n_h[h];
            sum_d += others.sqrt() * der[h];
            let rest: f64 = (0..self.factors.len()).filter(|&g| g != h).map(|g| val[g]).product();
            prod_d += der[h] * rest;
        }
        let off = self.s * sum_d + (1.0 - self.s) * prod_d;
        // each diagonal correction is a row sum: |Σ_j x_j| ≤ √N ‖x‖
        off * (1.0 + total.sqrt())
    }
}

fn frobenius_bound(f: &SweepFactor, g: impl Fn(&EntryFn) -> f64) -> f64 {
    let m = f.entries.iter().map(g).fold(0.0, f64::max);
    m * f.matrix.n() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub t: f64,
    /// Eigenvalues sorted by real part descending, then imaginary part.
    pub eigenvalues: Vec<(f64, f64)>,
}

#[allow(non_snake_case)]
pub fn sweep_F(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.grid
        .par_iter()
        .enumerate()
        .map(|(k, &t)| {
            let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
            let mut ev = reference_eigenvalues(cfg.matrix_at(t)?, &mut rng)?;
            ev.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
            Ok(SweepRow { t, eigenvalues: ev })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub lipschitz: f64,
    /// Largest `max_k |λ_k(t_{i+1}) - λ_k(t_i)| / (t_{i+1} - t_i)`.
    pub max_rate: f64,
    pub continuous: bool,
}

/// Compares the sorted real parts at adjacent grid points with the
/// Lipschitz estimate. Meaningful for symmetric `F`, where eigenvalues
/// move no faster than the matrix does.
pub fn check_continuity(cfg: &SweepConfig, rows: &[SweepRow]) -> ContinuityReport {
    let lipschitz = cfg.lipschitz_bound();
    let mut max_rate = 0.0f64;
    for w in rows.windows(2) {
        let dt = w[1].t - w[0].t;
        let step = w[0]
            .eigenvalues
            .iter()
            .zip(&w[1].eigenvalues)
            .map(|(a, b)| (a.0 - b.0).abs())
            .fold(0.0, f64::max);
        max_rate = max_rate.max(step / dt);
    }
    ContinuityReport {
        lipschitz,
        max_rate,
        continuous: max_rate <= lipschitz * (1.0 + 1e-9) + 1e-9,
    }
}

/// Spectrum at `t` of the pure local model (`s = 1`), composed from the
/// exact factor spectra and evaluated, sorted descending.
pub fn composed_local_spectrum(cfg: &SweepConfig, t: f64, opts: &SolveOptions) -> Result<Vec<f64>> {
    let exprs = cfg.factors.iter().map(|f| f.matrix.to_expr()).collect();
    let model = SanModel::local(exprs)?;
    let forms = model
        .solve_composed(opts)?
        .ok_or_else(|| Error::InvalidInput("factors do not have constant row sums".into()))?;
    // factor symbols are either unique or qualified as F<h>.<name>
    let lookup: Vec<(String, usize, usize)> = cfg
        .factors
        .iter()
        .enumerate()
        .flat_map(|(h, f)| f.matrix.symbols().iter().enumerate().map(move |(k, s)| (s.clone(), h, k)))
        .collect();
    let values: Vec<Vec<f64>> = cfg.factors.iter().map(|f| f.values(t)).collect();
    let value = |name: &str| -> f64 {
        if let Some((h, rest)) = name.strip_prefix('F').and_then(|r| r.split_once('.')) {
            if let Ok(h) = h.parse::<usize>() {
                let k = cfg.factors[h - 1].matrix.symbols().iter().position(|s| s == rest);
                if let Some(k) = k {
                    return values[h - 1][k];
                }
            }
        }
        let (_, h, k) = lookup.iter().find(|(s, _, _)| s == name).expect("known symbol");
        values[*h][*k]
    };
    let mut out: Vec<f64> = forms.iter().map(|e| e.evaluate(&value)).collect();
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}

pub fn write_csv(rows: &[SweepRow], mut w: impl Write) -> io::Result<()> {
    let n = rows.first().map_or(0, |r| r.eigenvalues.len());
    let mut header = String::from("t");
    for k in 1..=n {
        write!(header, ",lambda{k}").expect("string write");
    }
    writeln!(w, "{header}")?;
    for r in rows {
        write!(w, "{}", r.t)?;
        for (re, _) in &r.eigenvalues {
            write!(w, ",{re}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Line chart of the real parts against `t`, one polyline per eigenvalue.
pub fn render_svg(rows: &[SweepRow]) -> String {
    let (w, h, pad) = (640.0, 400.0, 40.0);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    if rows.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let (t0, t1) = (rows[0].t, rows[rows.len() - 1].t);
    let all = rows.iter().flat_map(|r| r.eigenvalues.iter().map(|e| e.0));
    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let span_t = if t1 > t0 { t1 - t0 } else { 1.0 };
    let span_y = if hi > lo { hi - lo } else { 1.0 };
    let x = |t: f64| pad + (t - t0) / span_t * (w - 2.0 * pad);
    let y = |v: f64| h - pad - (v - lo) / span_y * (h - 2.0 * pad);
    writeln!(
        svg,
        "<g stroke=\"black\"><line x1=\"{pad}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/><line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{}\"/></g>",
        h - pad,
        w - pad,
        h - pad,
        h - pad
    )
    .expect("string write");
    writeln!(
        svg,
        "<g font-size=\"11\" font-family=\"sans-serif\"><text x=\"{pad}\" y=\"{}\">t={t0:.3}</text><text x=\"{}\" y=\"{}\" text-anchor=\"end\">t={t1:.3}</text><text x=\"2\" y=\"{}\">{hi:.3}</text><text x=\"2\" y=\"{}\">{lo:.3}</text></g>",
        h - pad + 16.0,
        w - pad,
        h - pad + 16.0,
        pad,
        h - pad
    )
    .expect("string write");
    let n = rows[0].eigenvalues.len();
    for k in 0..n {
        let hue = 360.0 * k as f64 / n.max(1) as f64;
        let pts: Vec<String> = rows
            .iter()
            .map(|r| format!("{:.2},{:.2}", x(r.t), y(r.eigenvalues[k].0)))
            .collect();
        writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"hsl({hue:.0},70%,40%)\" stroke-width=\"1.2\" points=\"{}\"/>",
            pts.join(" ")
        )
        .expect("string write");
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn uniform_grid(t0: f64, t1: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 {
        return vec![t0];
    }
    (0..steps).map(|k| t0 + (t1 - t0) * k as f64 / (steps - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_dimension() {
        let cfg = SweepConfig::toy(0.5, uniform_grid(0.0, 1.0, 5), 1).unwrap();
        assert_eq!(cfg.dims(), vec![2, 3, 2]);
        assert_eq!(cfg.dimension(), 12);
        let f = cfg.matrix_at(0.3).unwrap();
        assert_eq!(f.shape(), (12, 12));
        assert!(f.row_iter().all(|r| r.sum().abs() < 1e-12));
    }

    #[test]
    fn constant_local_sweep_matches_composition() {
        let cfg = SweepConfig::toy(1.0, uniform_grid(0.0, 1.0, 9), 4).unwrap().frozen(0.37);
        let rows = sweep_F(&cfg).unwrap();
        let want = composed_local_spectrum(&cfg, 0.0, &SolveOptions::default()).unwrap();
        for r in &rows {
            assert_eq!(r.eigenvalues.len(), 12);
            for (got, w) in r.eigenvalues.iter().zip(&want) {
                assert!((got.0 - w).abs() < 1e-8 && got.1.abs() < 1e-8, "{:?} vs {want:?}", r.eigenvalues);
            }
        }
        assert_eq!(rows[0].eigenvalues, rows[8].eigenvalues);
    }

    #[test]
    fn zero_entries_give_zero_spectrum() {
        let mut cfg = SweepConfig::toy(0.5, uniform_grid(0.0, 1.0, 4), 2).unwrap();
        for f in &mut cfg.factors {
            for e in &mut f.entries {
                *e = EntryFn::constant(0.0);
            }
        }
        for r in sweep_F(&cfg).unwrap() {
            assert!(r.eigenvalues.iter().all(|&(re, im)| re == 0.0 && im == 0.0));
        }
    }

    #[test]
    fn half_mixture_is_continuous() {
        let cfg = SweepConfig::toy(0.5, uniform_grid(0.0, 1.0, 201), 7).unwrap();
        let rows = sweep_F(&cfg).unwrap();
        // every block is symmetric, hence F is and its spectrum is real
        assert!(rows.iter().all(|r| r.eigenvalues.iter().all(|e| e.1.abs() < 1e-9)));
        let c = check_continuity(&cfg, &rows);
        assert!(c.continuous, "{c:?}");
        assert!(c.max_rate > 0.0);
    }

    #[test]
    fn csv_and_svg() {
        let cfg = SweepConfig::toy(0.5, uniform_grid(0.0, 1.0, 3), 3).unwrap();
        let rows = sweep_F(&cfg).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("t,lambda1,lambda2,") && lines[0].ends_with(",lambda12"));
        assert_eq!(lines[1].split(',').count(), 13);
        let svg = render_svg(&rows);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 12);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(SweepConfig::toy(1.5, vec![0.0], 1).is_err());
        assert!(SweepConfig::toy(0.5, vec![1.0, 0.0], 1).is_err());
        let cfg = SweepConfig::toy(0.5, vec![0.0], 1).unwrap();
        let mut f = cfg.factors.clone();
        f[0].entries.pop();
        assert!(SweepConfig::new(0.5, f, vec![0.0]).is_err());
    }
}
