//! Symmetric doubly stochastic matrices whose rows permute one probability
//! vector, and a report-only check of `σ(D A Dᵀ)` against `D Λ_A Dᵀ`.

use nalgebra::{Complex, DMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::solver::reference_eigenvalues;

const SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitMatrix {
    x: Vec<f64>,
    phis: Vec<Vec<usize>>,
    d: DMatrix<f64>,
}

impl OrbitMatrix {
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn phis(&self) -> &[Vec<usize>] {
        &self.phis
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// A permutation matrix, `D[i][perm[i]] = 1`, as an orbit of `e_1`.
    pub fn from_permutation_matrix(perm: &[usize]) -> Result<Self> {
        let n = perm.len();
        let mut x = vec![0.0; n];
        if n > 0 {
            x[0] = 1.0;
        }
        let phis: Vec<Vec<usize>> = perm
            .iter()
            .map(|&p| {
                let mut phi: Vec<usize> = (0..n).collect();
                if p < n {
                    phi.swap(0, p);
                }
                phi
            })
            .collect();
        check_permutation(perm, n)?;
        build_orbit_matrix(&x, &phis)
    }

    pub fn is_permutation_matrix(&self) -> bool {
        self.d.iter().all(|&v| v == 0.0 || v == 1.0)
    }
}

fn check_permutation(p: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for &v in p {
        if v >= n || std::mem::replace(&mut seen[v], true) {
            return Err(Error::InvalidInput(format!("{p:?} is not a permutation of 0..{n}")));
        }
    }
    if p.len() != n {
        return Err(Error::DimensionMismatch(format!("permutation of length {} for n = {n}", p.len())));
    }
    Ok(())
}

/// Row `i` of `D` is `x` rearranged by `phis[i]`: `D[i][j] = x[phis[i][j]]`
/// (0-based).
pub fn build_orbit_matrix(x: &[f64], phis: &[Vec<usize>]) -> Result<OrbitMatrix> {
    let n = x.len();
    if phis.len() != n {
        return Err(Error::DimensionMismatch(format!("{} permutations for a vector of length {n}", phis.len())));
    }
    for p in phis {
        check_permutation(p, n)?;
    }
    let total: f64 = x.iter().sum();
    if (total - 1.0).abs() > SUM_TOL {
        return Err(Error::NotUnitRowSum(total));
    }
    let d = DMatrix::from_fn(n, n, |i, j| x[phis[i][j]]);
    for i in 0..n {
        for j in i + 1..n {
            if (d[(i, j)] - d[(j, i)]).abs() > SUM_TOL {
                return Err(Error::NotSymmetric(i + 1, j + 1));
            }
        }
    }
    Ok(OrbitMatrix { x: x.to_vec(), phis: phis.to_vec(), d })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Pass,
    Fail,
    /// `D Λ_A Dᵀ` is not diagonal, so there is nothing to compare.
    Inapplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RLinearityReport {
    pub verdict: Verdict,
    /// Largest off-diagonal magnitude of `D Λ_A Dᵀ`.
    pub off_diagonal: f64,
    /// Greedy matching distance between the diagonal of `D Λ_A Dᵀ` and
    /// `σ(D A Dᵀ)`; `None` when inapplicable.
    pub distance: Option<f64>,
    pub transformed: Vec<(f64, f64)>,
    pub predicted: Vec<(f64, f64)>,
}

/// Largest distance in a greedy nearest-neighbour matching of two equally
/// long multisets.
pub fn multiset_distance(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let Some((k, d)) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
        else {
            return f64::INFINITY;
        };
        used[k] = true;
        worst = worst.max(d);
    }
    if a.len() == b.len() {
        worst
    } else {
        f64::INFINITY
    }
}

fn sorted_eigenvalues(a: DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut ev: Vec<Complex<f64>> = reference_eigenvalues(a, &mut rng)?
        .into_iter()
        .map(|(re, im)| Complex::new(re, im))
        .collect();
    ev.sort_by(|p, q| q.re.total_cmp(&p.re).then(q.im.total_cmp(&p.im)));
    Ok(ev)
}

/// Never fails on mathematical grounds; errors only for shape problems or
/// eigenvalue non-convergence.
pub fn check_r_linearity(a: &DMatrix<f64>, d: &OrbitMatrix, tol: f64) -> Result<RLinearityReport> {
    let n = d.n();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch(format!("A is {}x{}, D is {n}x{n}", a.nrows(), a.ncols())));
    }
    let dm = d.matrix();
    let transformed = sorted_eigenvalues(dm * a * dm.transpose())?;
    let lam = sorted_eigenvalues(a.clone())?;
    let dc = dm.map(|v| Complex::new(v, 0.0));
    let lam_m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(lam));
    let m = &dc * lam_m * dc.transpose();

    let mut off = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off = off.max(m[(i, j)].norm());
            }
        }
    }
    let predicted: Vec<Complex<f64>> = (0..n).map(|i| m[(i, i)]).collect();
    let pairs = |v: &[Complex<f64>]| v.iter().map(|c| (c.re, c.im)).collect::<Vec<_>>();
    let (verdict, distance) = if off > tol {
        (Verdict::Inapplicable, None)
    } else {
        let dist = multiset_distance(&predicted, &transformed);
        (if dist <= tol { Verdict::Pass } else { Verdict::Fail }, Some(dist))
    };
    Ok(RLinearityReport {
        verdict,
        off_diagonal: off,
        distance,
        transformed: pairs(&transformed),
        predicted: pairs(&predicted),
    })
}

/// Every involution of `0..n`, i.e. every symmetric permutation matrix.
pub fn involutions(n: usize) -> Vec<Vec<usize>> {
    fn go(p: &mut Vec<Option<usize>>, out: &mut Vec<Vec<usize>>) {
        let Some(i) = p.iter().position(Option::is_none) else {
            out.push(p.iter().map(|v| v.expect("filled")).collect());
            return;
        };
        p[i] = Some(i);
        go(p, out);
        for j in i + 1..p.len() {
            if p[j].is_none() {
                p[i] = Some(j);
                p[j] = Some(i);
                go(p, out);
                p[j] = None;
            }
        }
        p[i] = None;
    }
    let mut out = Vec::new();
    go(&mut vec![None; n], &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn shifts(n: usize, k: isize) -> Vec<Vec<usize>> {
        (0..n)
            .map(|i| (0..n).map(|j| (j as isize + k * i as isize).rem_euclid(n as isize) as usize).collect())
            .collect()
    }

    #[test]
    fn permutation_matrix_from_unit_vector() {
        let d = OrbitMatrix::from_permutation_matrix(&[1, 0, 2]).unwrap();
        let want = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(d.matrix(), &want);
        assert!(d.is_permutation_matrix());
        // a 3-cycle is not symmetric
        assert_eq!(OrbitMatrix::from_permutation_matrix(&[1, 2, 0]).unwrap_err().kind(), "NotSymmetric");
    }

    #[test]
    fn flat_vector() {
        let n = 4;
        let x = vec![0.25; n];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let phis: Vec<Vec<usize>> = (0..n)
            .map(|_| {
                let mut p: Vec<usize> = (0..n).collect();
                for i in (1..n).rev() {
                    p.swap(i, rng.gen_range(0..=i));
                }
                p
            })
            .collect();
        let d = build_orbit_matrix(&x, &phis).unwrap();
        assert!(d.matrix().iter().all(|&v| v == 0.25));
    }

    #[test]
    fn circulant_arrangements() {
        let x = [0.5, 0.3, 0.2];
        // brute force: D[i][j] = x[(j + k i) mod 3] is symmetric iff k = 1 mod 3
        for k in 0..3isize {
            let brute = (0..3).all(|i: usize| {
                (0..3).all(|j: usize| {
                    x[(j as isize + k * i as isize).rem_euclid(3) as usize]
                        == x[(i as isize + k * j as isize).rem_euclid(3) as usize]
                })
            });
            let built = build_orbit_matrix(&x, &shifts(3, k));
            assert_eq!(built.is_ok(), brute, "k = {k}");
        }
        assert!(build_orbit_matrix(&x, &shifts(3, 1)).is_ok());
        assert_eq!(build_orbit_matrix(&x, &shifts(3, 2)).unwrap_err(), Error::NotSymmetric(1, 2));
    }

    #[test]
    fn input_validation() {
        assert!(matches!(
            build_orbit_matrix(&[0.5, 0.6], &shifts(2, 1)),
            Err(Error::NotUnitRowSum(_))
        ));
        assert!(build_orbit_matrix(&[1.0, 0.0], &[vec![0, 1]]).is_err());
        assert!(build_orbit_matrix(&[1.0, 0.0], &[vec![0, 0], vec![1, 0]]).is_err());
    }

    #[test]
    fn involution_counts() {
        // telephone numbers
        let counts: Vec<usize> = (0..=8).map(|n| involutions(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 4, 10, 26, 76, 232, 764]);
    }

    #[test]
    fn permutation_conjugation_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=6 {
            for p in involutions(n) {
                let d = OrbitMatrix::from_permutation_matrix(&p).unwrap();
                let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
                let r = check_r_linearity(&a, &d, 1e-9).unwrap();
                assert_eq!(r.verdict, Verdict::Pass, "{p:?}: {r:?}");
            }
        }
    }

    #[test]
    fn identity_passes() {
        let d = OrbitMatrix::from_permutation_matrix(&[0, 1, 2, 3]).unwrap();
        let a = DMatrix::from_row_slice(4, 4, &[
            1.0, 2.0, 0.0, 0.0, -2.0, 1.0, 0.0, 0.0, 0.0, 0.0, 3.0, 1.0, 0.0, 0.0, 0.0, -1.0,
        ]);
        let r = check_r_linearity(&a, &d, 1e-9).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.distance.map(|x| x < 1e-12), Some(true));
    }

    #[test]
    fn flat_orbit_with_identity() {
        // J/n · I · J/n = J/n, spectrum {1, 0, ...}; D Λ Dᵀ = J/n is not diagonal
        let n = 3;
        let d = build_orbit_matrix(&vec![1.0 / 3.0; n], &vec![(0..n).collect(); n]).unwrap();
        let r = check_r_linearity(&DMatrix::identity(n, n), &d, 1e-9).unwrap();
        assert_eq!(r.verdict, Verdict::Inapplicable);
        assert!((r.off_diagonal - 1.0 / 3.0).abs() < 1e-12);
        let mut re: Vec<f64> = r.transformed.iter().map(|c| c.0).collect();
        re.sort_by(f64::total_cmp);
        assert!(re[0].abs() < 1e-12 && re[1].abs() < 1e-12 && (re[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_permutation_orbit_reports() {
        let x = [0.5, 0.3, 0.2];
        let d = build_orbit_matrix(&x, &shifts(3, 1)).unwrap();
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 3.0]);
        let r = check_r_linearity(&a, &d, 1e-9).unwrap();
        assert_eq!(r.transformed.len(), 3);
        assert!(r.verdict == Verdict::Inapplicable || r.distance.is_some());
    }
}
