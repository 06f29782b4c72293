//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zle::bench::{run_bench, DEFAULT_LADDER};
use zle::mx::{generate_mx, SymbolicMatrix};
use zle::poset::{chain_block_poset, linear_extensions, Poset, DEFAULT_EXTENSION_CAP};
use zle::san::{
    build_orbit_matrix, check_exponential_identity, check_r_linearity, compose_spectrum, composed_local_spectrum,
    involutions, kron_prod, make_generator, make_generator_f64, multiset_distance, random_generator, render_svg,
    sweep_F, uniform_grid, write_csv, OrbitMatrix, SanModel, SpectralMap, SpectralMode, SweepConfig, Verdict,
};
use zle::solver::{even_batches, reference_eigenvalues, solve, solve_batched, verify_by_substitution, SolveOptions};
use zle::stochastic::{generate_stochastic_mx, parse_dfac};
use zle::symbolic::ExprMatrix;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: zle::Error) -> String {
    format!("{}: {e}", e.kind())
}

/// Test corpus: name and matrix, general constructions first.
fn corpus() -> Vec<(String, SymbolicMatrix)> {
    let mut out = Vec::new();
    let posets: Vec<(&str, Poset)> = vec![
        ("poset 2<3,2<1", Poset::new(3, [(2, 3), (2, 1)])),
        ("empty poset n=3", Poset::empty(3)),
        ("empty poset n=4", Poset::empty(4)),
        ("poset 1<2 on 4", Poset::new(4, [(1, 2)])),
        ("zigzag 1<3,2<3,2<4", Poset::new(4, [(1, 3), (2, 3), (2, 4)])),
        ("two chains 1<2,3<4 on 5", Poset::new(5, [(1, 2), (3, 4)])),
        ("chain 1<2<3 on 5", Poset::new(5, [(1, 2), (2, 3)])),
        ("chain blocks [5,2]", chain_block_poset(&[5, 2])),
    ]
    .into_iter()
    .map(|(name, p)| (name, p.expect("valid poset")))
    .collect();
    for (name, p) in posets {
        out.push((format!("general {name}"), generate_mx(&p, DEFAULT_EXTENSION_CAP).expect("generates")));
    }
    let dfacs: [&[u64]; 12] =
        [&[2], &[3], &[5], &[8], &[13], &[21], &[34], &[55], &[2, 3], &[8, 2], &[2, 13], &[3, 3, 3]];
    for d in dfacs {
        let m = generate_stochastic_mx(&parse_dfac(d).expect("fibonacci"), DEFAULT_EXTENSION_CAP).expect("generates");
        out.push((format!("stochastic {d:?}"), m));
    }
    out
}

fn two_extension_poset() -> Outcome {
    let p = Poset::new(3, [(2, 3), (2, 1)]).map_err(err)?;
    let exts: Vec<String> = linear_extensions(&p, 10).map_err(err)?.iter().map(|e| e.to_string()).collect();
    ensure(exts == ["213", "231"], || format!("extensions {exts:?}"))?;
    let m = generate_mx(&p, 10).map_err(err)?;
    ensure(m.symbols() == ["11", "10"], || format!("symbols {:?}", m.symbols()))?;
    let grid: Vec<Vec<usize>> = (0..2).map(|i| (0..2).map(|j| m.get(i, j)).collect()).collect();
    ensure(grid == [[0, 1], [1, 0]], || format!("entries {grid:?}"))?;
    let s = solve(&m.to_linear(), &SolveOptions::default()).map_err(err)?;
    let forms: Vec<Vec<i64>> = s.forms.iter().map(|f| f.coeffs.clone()).collect();
    ensure(forms == [[1, 1], [1, -1]], || format!("forms {forms:?}"))?;
    Ok(format!("[[a1,a2],[a2,a1]], spectrum {{{}}}", s.display().join(", ")))
}

fn fibonacci_counts() -> Outcome {
    // independent recurrence
    let mut f = vec![0u64, 1];
    while f.len() < 20 {
        let k = f.len();
        f.push(f[k - 1] + f[k - 2]);
    }
    for m in 1..=10usize {
        let p = chain_block_poset(&[m]).map_err(err)?;
        let count = linear_extensions(&p, DEFAULT_EXTENSION_CAP).map_err(err)?.len() as u64;
        ensure(count == f[m + 1], || format!("block {m}: {count} extensions, want {}", f[m + 1]))?;
    }
    let a = parse_dfac(&[2, 13]).map_err(err)?;
    let b = parse_dfac(&[8, 2]).map_err(err)?;
    ensure(a.n() == 26 && b.n() == 16, || format!("n = {} and {}", a.n(), b.n()))?;
    ensure(a.block_sizes() == [2, 6] && b.block_sizes() == [5, 2], || "block sizes".into())?;
    Ok("counts 1,2,3,5,8,13,21,34,55,89; [2,13] -> 26, [8,2] -> 16".into())
}

fn factorizations(limit: u64) -> Vec<Vec<u64>> {
    let fibs = [2u64, 3, 5, 8, 13, 21, 34, 55];
    let mut out = Vec::new();
    let mut stack: Vec<Vec<u64>> = fibs.iter().filter(|&&f| f <= limit).map(|&f| vec![f]).collect();
    while let Some(d) = stack.pop() {
        let n: u64 = d.iter().product();
        for &f in &fibs {
            if n * f <= limit {
                let mut e = d.clone();
                e.push(f);
                stack.push(e);
            }
        }
        out.push(d);
    }
    out.sort();
    out
}

fn generator_equivalence() -> Outcome {
    let all = factorizations(64);
    for d in &all {
        let f = parse_dfac(d).map_err(err)?;
        let fast = generate_stochastic_mx(&f, DEFAULT_EXTENSION_CAP).map_err(err)?;
        let general = generate_mx(&chain_block_poset(f.block_sizes()).map_err(err)?, DEFAULT_EXTENSION_CAP).map_err(err)?;
        ensure(fast.equivalent_up_to_renaming(&general), || format!("{d:?} differs"))?;
        ensure(fast == general, || format!("{d:?} differs in symbol numbering"))?;
    }
    Ok(format!("{} ordered factorizations with n <= 64, identical including numbering", all.len()))
}

fn solver_oracle(corpus: &[(String, SymbolicMatrix)]) -> Outcome {
    let mut worst = 0.0f64;
    for (k, (name, m)) in corpus.iter().enumerate() {
        let lin = m.to_linear();
        let s = solve(&lin, &SolveOptions::default()).map_err(|e| format!("{name}: {}", err(e)))?;
        let r = verify_by_substitution(&lin, &s, 10, 1000 + k as u64).map_err(|e| format!("{name}: {}", err(e)))?;
        worst = worst.max(r.max_discrepancy);
    }
    Ok(format!("{} matrices x 10 substitutions, max relative discrepancy {worst:.2e}", corpus.len()))
}

fn batch_equivalence(corpus: &[(String, SymbolicMatrix)]) -> Outcome {
    let opts = SolveOptions::default();
    let mut runs = 0;
    for (k, (name, m)) in corpus.iter().enumerate() {
        let lin = m.to_linear();
        let plain = solve(&lin, &opts).map_err(err)?;
        for batches in [2, 4] {
            let workers = 1 + (k + batches) % 4;
            let b = solve_batched(&lin, &even_batches(lin.symbol_count(), batches), workers, &opts)
                .map_err(|e| format!("{name}, {batches} batches: {}", err(e)))?;
            ensure(b == plain, || format!("{name}: {batches} batches on {workers} workers differ"))?;
            runs += 1;
        }
    }
    Ok(format!("{runs} batched solves equal to unbatched, 1 to 4 workers"))
}

fn scaling() -> Outcome {
    let report = run_bench(&DEFAULT_LADDER, 3, &SolveOptions::default()).map_err(err)?;
    let fit = report.fit.clone().ok_or("no fit")?;
    let times: Vec<String> = report.rows.iter().map(|r| format!("{}:{:.3}s", r.n, r.mean_seconds)).collect();
    let detail = format!("slope {:.2}, R^2 {:.4} ({})", fit.slope, fit.r_squared, times.join(" "));
    ensure((2.3..=4.2).contains(&fit.slope) && fit.r_squared >= 0.95, || detail.clone())?;
    Ok(detail)
}

fn worked_factors() -> (ExprMatrix, ExprMatrix) {
    (
        ExprMatrix::from_names(&[&["a", "b", "c"], &["b", "a", "c"], &["c", "b", "a"]]).expect("square"),
        ExprMatrix::from_names(&[&["d", "e"], &["e", "d"]]).expect("square"),
    )
}

fn kronecker_spectra() -> Outcome {
    let (a, b) = worked_factors();
    let opts = SolveOptions::default();
    let sa = solve(&a.to_linear(), &opts).map_err(err)?;
    let sb = solve(&b.to_linear(), &opts).map_err(err)?;
    let sa_txt = sa.display();
    ensure(sa_txt == ["a + b + c", "a - c", "a - b"], || format!("spectrum of A {sa_txt:?}"))?;
    let g = SanModel::local(vec![a.clone(), b.clone()]).map_err(err)?.generator();
    let k = g.q0.constant_row_sum().ok_or("row sums differ")?;
    ensure(k.to_string() == "a + b + c + d + e", || format!("k = {k}"))?;
    let solved = solve(&g.q.to_linear(), &opts).map_err(err)?.to_exprs();
    let composed =
        compose_spectrum(&sa.to_exprs(), &sb.to_exprs(), &SpectralMap { mode: SpectralMode::Sum, shift: k });
    ensure(solved == composed, || format!("{solved:?} vs {composed:?}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let vals: BTreeMap<&str, f64> = ["a", "b", "c", "d", "e"].iter().map(|&s| (s, rng.gen_range(0.0..1.0))).collect();
        let value = |s: &str| vals[s];
        let (na, nb) = (a.evaluate(&value), b.evaluate(&value));
        let ev = |m: DMatrix<f64>, rng: &mut ChaCha8Rng| -> Result<Vec<nalgebra::Complex<f64>>, String> {
            Ok(reference_eigenvalues(m, rng).map_err(err)?.into_iter().map(|(r, i)| nalgebra::Complex::new(r, i)).collect())
        };
        let la = ev(na.clone(), &mut rng)?;
        let lb = ev(nb.clone(), &mut rng)?;
        let products: Vec<_> = la.iter().flat_map(|x| lb.iter().map(move |y| x * y)).collect();
        let direct = ev(kron_prod(&na, &nb).map_err(err)?, &mut rng)?;
        let d = multiset_distance(&products, &direct);
        ensure(d <= 1e-8, || format!("product spectrum off by {d:e}"))?;
        worst = worst.max(d);
    }
    Ok(format!("sum: {} exact forms; product: 10 substitutions, max distance {worst:.1e}", composed.len()))
}

fn generator_rows(corpus: &[(String, SymbolicMatrix)]) -> Outcome {
    let (a, b) = worked_factors();
    let mut mats: Vec<(String, ExprMatrix)> = corpus.iter().map(|(n, m)| (n.clone(), m.to_expr())).collect();
    mats.push(("A (+) B".into(), SanModel::local(vec![a.clone(), b.clone()]).map_err(err)?.assemble()));
    mats.push(("A (x) B".into(), SanModel::synchronized(vec![a, b]).map_err(err)?.assemble()));
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for (name, q0) in &mats {
        let g = make_generator(q0);
        ensure(g.rows_vanish(), || format!("{name}: symbolic row sums nonzero"))?;
        let syms = q0.base_symbols();
        let vals: BTreeMap<String, f64> = syms.iter().map(|s| (s.clone(), rng.gen_range(0.0..1.0))).collect();
        let value = |s: &str| vals[s];
        for q in [g.q.evaluate(&value), make_generator_f64(&q0.evaluate(&value)).map_err(err)?] {
            let r = q.row_iter().map(|row| row.sum().abs()).fold(0.0, f64::max);
            ensure(r <= 1e-12, || format!("{name}: numeric row sum {r:e}"))?;
            worst = worst.max(r);
        }
    }
    Ok(format!("{} generators, exact symbolically, numeric max |row sum| {worst:.1e}", mats.len()))
}

fn exponential_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    let mut dims_seen = Vec::new();
    for _ in 0..10 {
        let mut dims = Vec::new();
        loop {
            let d = rng.gen_range(2..=5);
            if dims.iter().product::<usize>() * d > 64 {
                break;
            }
            dims.push(d);
        }
        let t = rng.gen_range(0.1..2.0);
        let fs: Vec<_> = dims.iter().map(|&n| random_generator(n, &mut rng)).collect();
        let r = check_exponential_identity(&fs, t, 1e-10).map_err(err)?;
        worst = worst.max(r.deviation);
        dims_seen.push(r.dimension);
    }
    Ok(format!("10 factor sets, dimensions {dims_seen:?}, max deviation {worst:.1e}"))
}

fn permutation_subcase() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut count = 0;
    for n in 1..=8 {
        for p in involutions(n) {
            let d = OrbitMatrix::from_permutation_matrix(&p).map_err(err)?;
            for _ in 0..5 {
                let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
                let r = check_r_linearity(&a, &d, 1e-9).map_err(err)?;
                ensure(r.verdict == Verdict::Pass, || format!("{p:?}: {r:?}"))?;
            }
            count += 1;
        }
    }
    // orbits of non-degenerate vectors only need to produce a report
    let mut verdicts = BTreeMap::new();
    for n in 2..=6 {
        let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
        let s: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v /= s);
        let hankel: Vec<Vec<usize>> = (0..n).map(|i| (0..n).map(|j| (i + j) % n).collect()).collect();
        let flat = build_orbit_matrix(&vec![1.0 / n as f64; n], &hankel).map_err(err)?;
        for d in [build_orbit_matrix(&x, &hankel).map_err(err)?, flat] {
            let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let r = check_r_linearity(&a, &d, 1e-9).map_err(err)?;
            *verdicts.entry(format!("{:?}", r.verdict)).or_insert(0) += 1;
        }
    }
    Ok(format!("{count} symmetric permutation matrices x 5 pass; other orbits: {verdicts:?}"))
}

fn sweep(dir: &PathBuf) -> Outcome {
    let cfg = SweepConfig::toy(0.5, uniform_grid(0.0, 1.0, 101), 11).map_err(err)?;
    let f = cfg.matrix_at(0.25).map_err(err)?;
    ensure(cfg.dims() == [2, 3, 2] && f.shape() == (12, 12), || format!("shape {:?}", f.shape()))?;
    let rows = sweep_F(&cfg).map_err(err)?;
    fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    let csv = dir.join("sweep.csv");
    let svg = dir.join("sweep.svg");
    write_csv(&rows, fs::File::create(&csv).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    fs::write(&svg, render_svg(&rows)).map_err(|e| e.to_string())?;
    let header = fs::read_to_string(&csv).map_err(|e| e.to_string())?.lines().next().unwrap_or("").to_string();
    ensure(header.starts_with("t,lambda1,") && header.ends_with(",lambda12"), || header.clone())?;

    let frozen = SweepConfig::toy(1.0, uniform_grid(0.0, 1.0, 21), 12).map_err(err)?.frozen(0.4);
    let want = composed_local_spectrum(&frozen, 0.0, &SolveOptions::default()).map_err(err)?;
    let mut worst = 0.0f64;
    for r in sweep_F(&frozen).map_err(err)? {
        for (got, w) in r.eigenvalues.iter().zip(&want) {
            worst = worst.max((got.0 - w).abs()).max(got.1.abs());
        }
    }
    ensure(worst <= 1e-8, || format!("constant local sweep differs by {worst:e}"))?;
    Ok(format!("12x12 F(t), 101 points; s=1 constant matches composed sum within {worst:.1e}; {}", svg.display()))
}

fn main() -> ExitCode {
    let corpus = corpus();
    let out_dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    type Check<'a> = (&'a str, Duration, Box<dyn Fn() -> Outcome + 'a>);
    let checks: Vec<Check> = vec![
        ("two-extension poset end to end", Duration::from_secs(1), Box::new(two_extension_poset)),
        ("Fibonacci extension counts", Duration::from_secs(1), Box::new(fibonacci_counts)),
        ("stochastic and general generators agree", Duration::from_secs(10), Box::new(generator_equivalence)),
        ("substitution oracle on 20 matrices", Duration::from_secs(300), Box::new(|| solver_oracle(&corpus))),
        ("batched solve equals unbatched", Duration::from_secs(300), Box::new(|| batch_equivalence(&corpus))),
        ("runtime scaling exponent", Duration::from_secs(900), Box::new(scaling)),
        ("Kronecker sum and product spectra", Duration::from_secs(30), Box::new(kronecker_spectra)),
        ("generator rows vanish", Duration::from_secs(10), Box::new(|| generator_rows(&corpus))),
        ("exponential identity", Duration::from_secs(30), Box::new(exponential_identity)),
        ("permutation orbit matrices", Duration::from_secs(60), Box::new(permutation_subcase)),
        ("F(t) sweep", Duration::from_secs(60), Box::new(|| sweep(&out_dir))),
    ];
    let mut failed = 0;
    for (k, (name, budget, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(d) if took > *budget => Err(format!("over budget {budget:?}: {d}")),
            o => o,
        };
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {:>2} {name} ({:.2}s): {detail}", k + 1, took.as_secs_f64());
    }
    println!("{} of {} criteria passed", checks.len() - failed, checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
