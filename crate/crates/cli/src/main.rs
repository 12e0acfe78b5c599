use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qscond::condnum::{cond_gv, cond_qs, cond_report, CondReport, MatrixSource, Rhs, Solved, WeightSpec};
use qscond::experiments::{check_chains, example1_rows, run_table, ExperimentConfig, Generator, RhsKind, Table};
use qscond::io::{dense_to_csv, dense_to_json, parse_dense, parse_params, parse_rhs, parse_weights, ParamsFile, WeightsFile};
use qscond::qsrep::{gv_materialize, gv_to_qs, qs_from_dense, qs_materialize};
use qscond::verify::{run_verification, VerifyConfig};
use qscond::Precision;
use twofloat::TwoFloat;

#[derive(Parser)]
#[command(name = "qscond", version, about = "Structured condition numbers for quasiseparable systems AX = B")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Which {
    All,
    Qs,
    Gv,
    Eff,
    Unstructured,
}

#[derive(Subcommand)]
enum Command {
    /// Print the dense matrix of a generator file.
    Materialize {
        params: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Condition numbers of A X = B.
    Cond {
        /// Generator JSON (quasiseparable or tangent) or a dense CSV/JSON matrix.
        #[arg(long)]
        a: PathBuf,
        /// Dense CSV/JSON matrix or sparse rhs JSON.
        #[arg(long)]
        b: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        which: Which,
        /// `natural`, or a path to an explicit weights file.
        #[arg(long, default_value = "natural")]
        weights: String,
        /// Entrywise tolerance when rebuilding generators from a dense A.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value = "extended")]
        precision: Precision,
        #[arg(long)]
        json: bool,
    },
    /// Compare every closed form with the enumeration oracle on random tiny instances.
    Verify {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        json: bool,
        #[arg(long, hide = true, default_value_t = 0.0)]
        inject_fault: f64,
    },
    /// Regenerate one of the experiment tables.
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct ReproduceArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    example: u8,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 20)]
    m: usize,
    /// Sparse rhs density; dense rhs when omitted.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "extended")]
    precision: Precision,
    /// Output file; `.md` gives Markdown, anything else CSV. Stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Exit status for a run that completed but found a problem.
const VERIFY_FAILED: u8 = 1;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_source(path: &Path, tol: f64) -> Result<MatrixSource> {
    let text = read(path)?;
    let ctx = || format!("parsing {}", path.display());
    if text.trim_start().starts_with('{') {
        Ok(match parse_params(&text).with_context(ctx)? {
            ParamsFile::Qs(q) => MatrixSource::Qs(q),
            ParamsFile::Gv(g) => MatrixSource::Gv(g),
        })
    } else {
        Ok(MatrixSource::Dense { matrix: parse_dense(&text).with_context(ctx)?, tol })
    }
}

fn materialize(params: &Path, format: Format) -> Result<u8> {
    let text = read(params)?;
    let a = match parse_params(&text).with_context(|| format!("parsing {}", params.display()))? {
        ParamsFile::Qs(q) => qs_materialize(&q),
        ParamsFile::Gv(g) => gv_materialize(&g),
    };
    match format {
        Format::Csv => print!("{}", dense_to_csv(&a)),
        Format::Json => println!("{}", dense_to_json(&a)),
    }
    Ok(0)
}

fn print_values(values: &[(&str, Option<f64>)], json: bool) {
    if json {
        let obj: serde_json::Map<String, serde_json::Value> =
            values.iter().map(|(k, v)| (k.to_string(), v.map_or(serde_json::Value::Null, |x| x.into()))).collect();
        println!("{}", serde_json::Value::Object(obj));
    } else {
        println!("{}", values.iter().map(|(k, _)| *k).collect::<Vec<_>>().join(","));
        println!("{}", values.iter().map(|(_, v)| v.map(|x| format!("{x:e}")).unwrap_or_default()).collect::<Vec<_>>().join(","));
    }
}

fn natural_cond(source: &MatrixSource, rhs: &Rhs, which: Which, precision: Precision, json: bool) -> Result<u8> {
    if which == Which::Gv && !matches!(source, MatrixSource::Gv(_)) {
        bail!("--which gv needs tangent generators for A");
    }
    let r = cond_report(source, rhs, None, precision)?;
    let values: Vec<(&str, Option<f64>)> = match which {
        Which::All => {
            if json {
                println!("{}", serde_json::to_string_pretty(&r)?);
            } else {
                println!("{}\n{}", CondReport::CSV_HEADER, r.csv_row(None));
            }
            return Ok(0);
        }
        Which::Qs => vec![("k_qs", Some(r.k_qs))],
        Which::Gv => vec![("k_gv", r.k_gv)],
        Which::Eff => vec![("k_eff", Some(r.k_eff))],
        Which::Unstructured => vec![("k_unstructured", Some(r.k_unstructured_rhs()))],
    };
    print_values(&values, json);
    Ok(0)
}

fn weighted_cond(source: &MatrixSource, rhs: &Rhs, which: Which, weights: &Path, json: bool) -> Result<u8> {
    let w = parse_weights(&read(weights)?).with_context(|| format!("parsing {}", weights.display()))?;
    let b = rhs.materialize();
    let (name, value) = match (w, source) {
        (WeightsFile::Gv(w, f), MatrixSource::Gv(g)) if matches!(which, Which::All | Which::Gv) => {
            let s: Solved<TwoFloat> = Solved::new(&gv_materialize(g), &b)?;
            ("k_gv", cond_gv(g, &s, rhs, &WeightSpec::Explicit { params: w, rhs: f })?)
        }
        (WeightsFile::Qs(w, f), source) if matches!(which, Which::All | Which::Qs) => {
            let q = match source {
                MatrixSource::Qs(q) => q.clone(),
                MatrixSource::Gv(g) => gv_to_qs(g),
                MatrixSource::Dense { matrix, tol } => qs_from_dense(matrix, *tol)?,
            };
            let s: Solved<TwoFloat> = Solved::new(&qs_materialize(&q), &b)?;
            ("k_qs", cond_qs(&q, &s, rhs, &WeightSpec::Explicit { params: w, rhs: f })?)
        }
        _ => bail!("explicit weights apply to k_qs (quasiseparable weights) or k_gv (tangent weights and generators)"),
    };
    print_values(&[(name, Some(value))], json);
    Ok(0)
}

fn verify(cfg: VerifyConfig, json: bool) -> Result<u8> {
    let s = run_verification(&cfg)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&s)?);
    } else {
        for c in &s.checks {
            println!("{:<13} {:>4} comparisons, max relative deviation {:.3e}", c.name, c.comparisons, c.max_deviation);
        }
        println!("chain violations: {}", s.chain_violations.len());
        for v in &s.chain_violations {
            println!("  {}: {:e} > {:e}", v.check, v.lhs, v.rhs);
        }
        println!("{}", if s.passed { "PASS" } else { "FAIL" });
    }
    Ok(if s.passed { 0 } else { VERIFY_FAILED })
}

fn reproduce(args: ReproduceArgs) -> Result<u8> {
    let ReproduceArgs { example, n, m, rho, trials, seed, precision, out } = args;
    let out = out.as_deref();
    let generator = match example {
        1 => Generator::Example1Fixed,
        2 => Generator::RandomGv,
        _ => Generator::IllscaledQs,
    };
    let config = ExperimentConfig {
        generator,
        n: n.unwrap_or(match example {
            1 => 5,
            2 => 60,
            _ => 40,
        }),
        m,
        rhs: rho.map_or(RhsKind::Dense, |rho| RhsKind::Sparse { rho }),
        seed,
        trials,
        precision,
    };
    let table: Table = if example == 1 {
        Table { config, rows: example1_rows(precision)?, aborted: vec![] }
    } else {
        run_table(&config)?
    };
    let markdown = out.is_some_and(|p| p.extension().is_some_and(|e| e == "md"));
    let text = if markdown { table.to_markdown() } else { table.to_csv() };
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    for a in &table.aborted {
        eprintln!("trial {} aborted: {}", a.trial, a.reason);
    }
    let violations: Vec<_> = table.rows.iter().flat_map(|r| check_chains(&r.report).into_iter().map(move |v| (r.trial, v))).collect();
    for (t, v) in &violations {
        eprintln!("trial {t}: {} fails ({:e} > {:e})", v.check, v.lhs, v.rhs);
    }
    Ok(if violations.is_empty() { 0 } else { VERIFY_FAILED })
}

fn threads() -> Result<()> {
    if let Ok(v) = std::env::var("QSCOND_THREADS") {
        let n: usize = v.parse().ok().filter(|&n| n > 0).with_context(|| format!("QSCOND_THREADS must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    threads()?;
    match cli.command {
        Command::Materialize { params, format } => materialize(&params, format),
        Command::Cond { a, b, which, weights, tol, precision, json } => {
            let source = load_source(&a, tol)?;
            let rhs = parse_rhs(&read(&b)?).with_context(|| format!("parsing {}", b.display()))?;
            if weights == "natural" {
                natural_cond(&source, &rhs, which, precision, json)
            } else {
                weighted_cond(&source, &rhs, which, Path::new(&weights), json)
            }
        }
        Command::Verify { n, m, trials, seed, json, inject_fault } => {
            verify(VerifyConfig { n, m, trials, seed, fault: inject_fault }, json)
        }
        Command::Reproduce(args) => reproduce(args),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
