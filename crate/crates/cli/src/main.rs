use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use zle::bench::{run_bench, DEFAULT_LADDER};
use zle::mx::{generate_mx, SymbolicMatrix};
use zle::poset::{Poset, DEFAULT_EXTENSION_CAP};
use zle::san::{
    check_continuity, render_svg, sweep_F, uniform_grid, write_csv, SanModel, SanModelJson, SweepConfig,
};
use zle::solver::{even_batches, solve, solve_batched, verify_by_substitution, SolveOptions, ZLinearSpectrum};
use zle::stochastic::{generate_stochastic_mx, parse_dfac};
use zle::symbolic::{LinearMatrix, LinearMatrixJson};

/// Z-linear eigenvalue matrices: generation, exact spectra, and Kronecker
/// model composition.
#[derive(Parser)]
#[command(name = "zle", version)]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Matrix JSON from a poset JSON file.
    Gen {
        #[arg(long)]
        poset: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EXTENSION_CAP)]
        cap: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Matrix JSON for a Fibonacci factorization such as "2,13".
    GenStochastic {
        #[arg(long)]
        dfac: String,
        #[arg(long, default_value_t = DEFAULT_EXTENSION_CAP)]
        cap: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Exact spectrum of a matrix file.
    Eig(EigArgs),
    /// Assembles a model file into its generator and composed spectrum.
    San {
        #[arg(long)]
        model: PathBuf,
        /// Also run the solver on the assembled generator.
        #[arg(long)]
        solve: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Spectrum of the three-factor toy model over a time grid.
    Sweep {
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        #[arg(long, default_value_t = 1.0)]
        t1: f64,
        #[arg(long, default_value_t = 101)]
        steps: usize,
        #[arg(long, default_value = "sweep.csv")]
        csv: PathBuf,
        #[arg(long, default_value = "sweep.svg")]
        svg: PathBuf,
    },
    /// Solver timings over a ladder of Fibonacci sizes.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LADDER)]
        sizes: Vec<u64>,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct Output {
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EigArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 1)]
    batches: usize,
    #[arg(long, env = "ZLE_WORKERS", default_value_t = 1)]
    workers: usize,
    /// Mantissa width, or "auto".
    #[arg(long, env = "ZLE_PRECISION_BITS", default_value = "auto")]
    precision_bits: String,
    /// Check the result at this many random substitutions.
    #[arg(long, value_name = "T")]
    verify: Option<usize>,
    /// Print one form per line instead of JSON.
    #[arg(long)]
    text: bool,
    #[command(flatten)]
    out: Output,
}

/// Either matrix file layout.
#[derive(Deserialize)]
#[serde(untagged)]
enum MatrixFile {
    Monomial(SymbolicMatrix),
    Linear(LinearMatrixJson),
}

/// Poset file; validated by `Poset::new` so that its error kinds survive.
#[derive(Deserialize)]
struct PosetFile {
    n: usize,
    relations: Vec<[usize; 2]>,
}

#[derive(Serialize)]
struct SanOutput {
    dims: Vec<usize>,
    generator: LinearMatrixJson,
    composed_spectrum: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    spectrum: Option<ZLinearSpectrum>,
    #[serde(skip_serializing_if = "Option::is_none")]
    agrees: Option<bool>,
}

struct Failure {
    kind: String,
    message: String,
    code: u8,
}

impl From<zle::Error> for Failure {
    fn from(e: zle::Error) -> Self {
        let code = match e.kind() {
            "NotZLinear" => 3,
            "NoConvergence" | "PairingFailed" | "MismatchDetected" | "ToleranceExceeded" => 4,
            _ => 2,
        };
        Failure { kind: e.kind().into(), message: e.to_string(), code }
    }
}

fn invalid(kind: &str, message: impl Into<String>) -> Failure {
    Failure { kind: kind.into(), message: message.into(), code: 2 }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| invalid("Io", format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid("Parse", format!("{}: {e}", path.display())))
}

fn emit(out: &Output, text: &str) -> Result<(), Failure> {
    match &out.out {
        Some(p) => fs::write(p, text).map_err(|e| invalid("Io", format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(|e| invalid("Io", e.to_string()))
        }
    }
}

fn to_json(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string(v).expect("serializable");
    s.push('\n');
    s
}

fn parse_precision(s: &str) -> Result<Option<u32>, Failure> {
    match s {
        "auto" => Ok(None),
        _ => match s.parse::<u32>() {
            Ok(b) if b >= 2 => Ok(Some(b)),
            _ => Err(invalid("InvalidInput", format!("precision bits must be \"auto\" or an integer >= 2, got {s:?}"))),
        },
    }
}

fn eig(a: &EigArgs, seed: u64) -> Result<(), Failure> {
    let m: LinearMatrix = match read_json::<MatrixFile>(&a.input)? {
        MatrixFile::Monomial(m) => m.to_linear(),
        MatrixFile::Linear(j) => LinearMatrix::try_from(j)?,
    };
    if a.batches == 0 || a.workers == 0 {
        return Err(invalid("InvalidInput", "batches and workers must be positive"));
    }
    let opts = SolveOptions {
        precision_bits: parse_precision(&a.precision_bits)?,
        reference_seed: (seed != 0).then_some(seed),
        ..SolveOptions::default()
    };
    let spectrum = if a.batches == 1 {
        solve(&m, &opts)?
    } else {
        solve_batched(&m, &even_batches(m.symbol_count(), a.batches), a.workers, &opts)?
    };
    if let Some(trials) = a.verify {
        let report = verify_by_substitution(&m, &spectrum, trials, seed)?;
        eprintln!("{}", json!({ "verification": report }));
    }
    let text = if a.text {
        spectrum.display().iter().map(|s| format!("{s}\n")).collect()
    } else {
        to_json(&spectrum)
    };
    emit(&a.out, &text)
}

fn san(model: &Path, run_solver: bool, out: &Output) -> Result<(), Failure> {
    let model = SanModel::try_from(read_json::<SanModelJson>(model)?)?;
    let opts = SolveOptions::default();
    let q = model.generator().q.to_linear();
    let composed = model.solve_composed(&opts)?;
    let (spectrum, agrees) = if run_solver {
        let s = solve(&q, &opts)?;
        let agrees = composed.as_ref().map(|c| *c == s.to_exprs());
        (Some(s), agrees)
    } else {
        (None, None)
    };
    let report = SanOutput {
        dims: model.dims().to_vec(),
        generator: LinearMatrixJson::from(&q),
        composed_spectrum: composed.map(|c| c.iter().map(|e| e.to_string()).collect()),
        spectrum,
        agrees,
    };
    emit(out, &to_json(&report))
}

fn sweep(s: f64, t0: f64, t1: f64, steps: usize, csv: &Path, svg: &Path, seed: u64) -> Result<(), Failure> {
    if steps == 0 || !(t1 > t0 || steps == 1) {
        return Err(invalid("InvalidInput", "need steps >= 1 and t1 > t0"));
    }
    let cfg = SweepConfig::toy(s, uniform_grid(t0, t1, steps), seed)?;
    let rows = sweep_F(&cfg)?;
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).map_err(|e| invalid("Io", e.to_string()))?;
    fs::write(csv, buf).map_err(|e| invalid("Io", format!("{}: {e}", csv.display())))?;
    fs::write(svg, render_svg(&rows)).map_err(|e| invalid("Io", format!("{}: {e}", svg.display())))?;
    let c = check_continuity(&cfg, &rows);
    println!(
        "{}",
        json!({ "dimension": cfg.dimension(), "points": rows.len(), "continuity": c,
                "csv": csv.display().to_string(), "svg": svg.display().to_string() })
    );
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Gen { poset, cap, out } => {
            let raw: PosetFile = read_json(&poset)?;
            let p = Poset::new(raw.n, raw.relations.iter().map(|&[u, v]| (u, v)))?;
            emit(&out, &to_json(&generate_mx(&p, cap)?))
        }
        Command::GenStochastic { dfac, cap, out } => {
            let factors = dfac
                .split(',')
                .map(|f| f.trim().parse::<u64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| invalid("InvalidInput", format!("--dfac {dfac:?}: {e}")))?;
            emit(&out, &to_json(&generate_stochastic_mx(&parse_dfac(&factors)?, cap)?))
        }
        Command::Eig(a) => eig(&a, cli.seed),
        Command::San { model, solve, out } => san(&model, solve, &out),
        Command::Sweep { s, t0, t1, steps, csv, svg } => sweep(s, t0, t1, steps, &csv, &svg, cli.seed),
        Command::Bench { sizes, reps, json } => {
            let report = run_bench(&sizes, reps, &SolveOptions::default())?;
            if json {
                println!("{}", serde_json::to_string(&report).expect("serializable"));
            } else {
                print!("{}", report.table());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": "Usage", "message": e.to_string().trim_end() }));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({ "error": f.kind, "message": f.message }));
            ExitCode::from(f.code)
        }
    }
}
