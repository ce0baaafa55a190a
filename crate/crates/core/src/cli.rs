//! Command-line front end.
//!
//! Exit statuses: 0 success, 1 usage or file error, 2 not jointly definite
//! (`solve`) or not certified (`verify`), 3 numerical failure.

use std::io::Write;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{corpus, corpus_entry, generate_random, read_instance, write_instance, GeneratorConfig};
use crate::problem::ProblemInstance;
use crate::secular::Branch;
use crate::solver::{solve, SolveOptions, SolveReport, SolveStatus};
use crate::verifier::{check_strict_lngm, Tolerances};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_DEFINITE: i32 = 2;
pub const EXIT_NOT_CERTIFIED: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const BENCH_HEADER: &str = "n,count,eig_time,bis_time,bis_iter_call,bis_iter_total,num_lngm";

#[derive(Debug, Parser)]
#[command(
    name = "lngm",
    version,
    about = "Local-nonglobal minimizers of one-constraint quadratic problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one instance and print its report.
    Solve {
        #[command(flatten)]
        source: Source,
        /// Bisection tolerance.
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Check whether a point and multiplier form a strict local-nonglobal minimizer.
    Verify {
        #[command(flatten)]
        source: Source,
        /// Comma-separated coordinates.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long, allow_hyphen_values = true)]
        mu: f64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Generate random instances.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Target::Psi1)]
        target: Target,
        #[arg(long, default_value_t = 0.8)]
        anchor: f64,
        /// Output directory; required when count > 1.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve batches of random instances and print average statistics as CSV.
    Bench {
        /// Comma-separated dimensions.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1e-5)]
        eps: f64,
        /// Instances solved in parallel; 1 gives the most faithful timings.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// List the built-in example instances.
    Corpus,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Instance file in JSON form.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Name of a built-in example.
    #[arg(long)]
    corpus: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Target {
    Psi1,
    Psi3,
}

impl Source {
    fn load(&self) -> Result<ProblemInstance> {
        match (&self.input, &self.corpus) {
            (Some(path), _) => read_instance(path),
            (None, Some(name)) => corpus_entry(name)
                .map(|e| e.instance)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown corpus entry {name:?}"))),
            (None, None) => Err(Error::InvalidArgument("no instance given".into())),
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve { source, tol, format } => cmd_solve(&source, tol, format, out),
        Command::Verify {
            source,
            point,
            mu,
            format,
        } => cmd_verify(&source, &point, mu, format, out),
        Command::Generate {
            n,
            count,
            seed,
            target,
            anchor,
            out: dir,
        } => cmd_generate(n, count, seed, target, anchor, dir, out),
        Command::Bench {
            n,
            count,
            seed,
            eps,
            jobs,
        } => cmd_bench(&n, count, seed, eps, jobs, out),
        Command::Corpus => cmd_corpus(out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn io(e: std::io::Error) -> Error {
    Error::Io(e)
}

fn cmd_solve(source: &Source, tol: f64, format: Format, out: &mut dyn Write) -> Result<i32> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidArgument(format!("--tol must be positive, got {tol}")));
    }
    let inst = source.load()?;
    let report = solve(&inst, &SolveOptions::with_eps(tol));
    match format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&report)?).map_err(io)?,
        Format::Text => write_report_text(&report, out).map_err(io)?,
    }
    Ok(match report.status {
        SolveStatus::Solved => EXIT_OK,
        SolveStatus::NotJointlyDefinite => EXIT_NOT_DEFINITE,
        SolveStatus::NumericalFailure => EXIT_NUMERICAL,
    })
}

fn write_report_text(r: &SolveReport, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "status: {:?}", r.status)?;
    writeln!(out, "n: {}, kind: {:?}", r.n, r.kind)?;
    if let Some(d) = &r.definiteness {
        match d.mu1 {
            Some(mu1) => writeln!(
                out,
                "pencil: {:?} at mu1 = {mu1} (margin {:e})",
                d.verdict, d.lambda_min_at_mu1
            )?,
            None => writeln!(
                out,
                "pencil: {:?}; no definiteness certificate (best margin {:e})",
                d.verdict, d.lambda_min_at_mu1
            )?,
        }
    }
    for b in &r.branches {
        let o = &b.outcome;
        writeln!(
            out,
            "branch {}: interval ({}, {}), {:?}, {} iterations, eta* = {}",
            o.branch,
            b.interval.0,
            b.interval.1,
            o.terminal,
            o.iterations,
            o.eta_star.map_or("none".into(), |e| e.to_string())
        )?;
    }
    writeln!(out, "local-nonglobal minimizers: {}", r.certificates.len())?;
    for (k, c) in r.certificates.iter().enumerate() {
        writeln!(
            out,
            "  [{k}] x = {:?}, mu = {}, f0 = {}, eta = {}, branch = {}",
            c.x_star,
            c.mu_star,
            c.f0_value,
            c.eta_star.map_or("-".into(), |e| e.to_string()),
            c.branch.map_or("-".into(), |b| b.to_string()),
        )?;
        writeln!(
            out,
            "      residuals: constraint {:e}, stationarity {:e}; inertia {:?}",
            c.constraint_residual,
            c.stationarity_residual,
            c.inertia.as_tuple()
        )?;
    }
    for c in &r.rejected {
        writeln!(out, "  rejected: x = {:?}, mu = {}", c.x_star, c.mu_star)?;
    }
    for n in &r.notes {
        writeln!(out, "note: {n}")?;
    }
    Ok(())
}

fn parse_point(text: &str) -> Result<DVector<f64>> {
    let vals: std::result::Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let vals = vals.map_err(|e| Error::InvalidArgument(format!("bad --point {text:?}: {e}")))?;
    Ok(DVector::from_vec(vals))
}

fn cmd_verify(source: &Source, point: &str, mu: f64, format: Format, out: &mut dyn Write) -> Result<i32> {
    let inst = source.load()?;
    let x = parse_point(point)?;
    let v = check_strict_lngm(&inst, &x, mu, &Tolerances::default())?;
    match format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&v)?).map_err(io)?,
        Format::Text => {
            let flag = |b: bool| if b { "ok" } else { "FAIL" };
            let opt = |b: Option<bool>| b.map_or("n/a", |b| if b { "ok" } else { "FAIL" });
            writeln!(out, "certified: {}", v.certified()).map_err(io)?;
            writeln!(out, "kkt: {}", flag(v.kkt_ok)).map_err(io)?;
            writeln!(out, "regular: {}", flag(v.regular_ok)).map_err(io)?;
            writeln!(out, "tangent_pd: {}", flag(v.tangent_pd_ok)).map_err(io)?;
            writeln!(out, "not_psd: {}", flag(v.not_psd_ok)).map_err(io)?;
            writeln!(out, "inertia: {} {:?}", flag(v.inertia_ok), v.inertia.as_tuple()).map_err(io)?;
            writeln!(out, "a1_nonzero: {}", opt(v.a1_nonzero_ok)).map_err(io)?;
            writeln!(out, "mu_positive: {}", opt(v.mu_positive_ok)).map_err(io)?;
            writeln!(
                out,
                "residuals: constraint {:e} (tol {:e}), stationarity {:e} (tol {:e})",
                v.constraint_residual, v.feasibility_tol, v.stationarity_residual, v.stationarity_tol
            )
            .map_err(io)?;
            writeln!(
                out,
                "margins: min tangent eigenvalue {:e}, min Hessian eigenvalue {:e}",
                v.min_tangent_eigenvalue, v.min_hessian_eigenvalue
            )
            .map_err(io)?;
            if let Some(w) = &v.witness {
                writeln!(out, "witness: {w:?}").map_err(io)?;
            }
            for r in &v.reasons {
                writeln!(out, "reason: {r}").map_err(io)?;
            }
        }
    }
    Ok(if v.certified() { EXIT_OK } else { EXIT_NOT_CERTIFIED })
}

fn cmd_generate(
    n: usize,
    count: usize,
    seed: u64,
    target: Target,
    anchor: f64,
    dir: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<i32> {
    if count > 1 && dir.is_none() {
        return Err(Error::InvalidArgument("--out is required when --count > 1".into()));
    }
    if let Some(d) = &dir {
        std::fs::create_dir_all(d)?;
    }
    for i in 0..count {
        let cfg = GeneratorConfig {
            seed: seed.wrapping_add(i as u64),
            target_branch: match target {
                Target::Psi1 => Branch::Psi1,
                Target::Psi3 => Branch::Psi3,
            },
            anchor_fraction: anchor,
            ..GeneratorConfig::new(n, 0)
        };
        let inst = generate_random(&cfg)?;
        match &dir {
            Some(d) => {
                let path = d.join(format!("n{n}-seed{}.json", cfg.seed));
                write_instance(&inst, &path)?;
                writeln!(out, "{}", path.display()).map_err(io)?;
            }
            None => writeln!(out, "{}", crate::instance::instance_to_json(&inst)).map_err(io)?,
        }
    }
    Ok(EXIT_OK)
}

fn cmd_corpus(out: &mut dyn Write) -> Result<i32> {
    for e in corpus() {
        let applicability = format!("{:?}", e.applicability);
        writeln!(out, "{:<20} {:<14} {}", e.name, applicability, e.description).map_err(io)?;
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub count: usize,
    /// Mean eigendecomposition time per instance, seconds.
    pub eig_time: f64,
    /// Mean bisection time per instance, seconds.
    pub bis_time: f64,
    /// Mean iterations per bisection call that iterated.
    pub bis_iter_call: f64,
    /// Mean iterations summed over the calls of one instance.
    pub bis_iter_total: f64,
    pub num_lngm: f64,
}

impl BenchRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{:.6e},{:.6e},{:.4},{:.4},{:.4}",
            self.n, self.count, self.eig_time, self.bis_time, self.bis_iter_call, self.bis_iter_total, self.num_lngm
        )
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct BenchSample {
    eig: f64,
    bis: f64,
    iters: usize,
    calls: usize,
    lngm: usize,
}

pub fn instance_seed(seed: u64, n: usize, i: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((n as u64) << 32)
        .wrapping_add(i as u64)
}

/// Generates `count` instances of dimension `n` and averages their solve
/// statistics. `None` when `count` is zero.
pub fn bench_row(n: usize, count: usize, seed: u64, eps: f64, jobs: usize) -> Result<Option<BenchRow>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("bench needs n >= 2, got {n}")));
    }
    if count == 0 {
        return Ok(None);
    }
    let opts = SolveOptions::with_eps(eps);
    let results: Mutex<Vec<Option<Result<BenchSample>>>> = Mutex::new((0..count).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let work = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        if i >= count {
            break;
        }
        let sample = generate_random(&GeneratorConfig::new(n, instance_seed(seed, n, i))).map(|inst| {
            let r = solve(&inst, &opts);
            BenchSample {
                eig: r.timings.eig_seconds,
                bis: r.timings.bis_seconds,
                iters: r.bisection_iterations(),
                calls: r
                    .branches
                    .iter()
                    .map(|b| usize::from(b.outcome.iterations > 0) + usize::from(b.tightened.is_some()))
                    .sum(),
                lngm: r.certificates.len(),
            }
        });
        results.lock().expect("bench results lock")[i] = Some(sample);
    };
    let jobs = jobs.clamp(1, count);
    if jobs == 1 {
        work();
    } else {
        std::thread::scope(|s| {
            for _ in 0..jobs {
                s.spawn(work);
            }
        });
    }
    let mut total = BenchSample::default();
    for r in results.into_inner().expect("bench results lock") {
        let s = r.expect("every index is processed")?;
        total.eig += s.eig;
        total.bis += s.bis;
        total.iters += s.iters;
        total.calls += s.calls;
        total.lngm += s.lngm;
    }
    let c = count as f64;
    Ok(Some(BenchRow {
        n,
        count,
        eig_time: total.eig / c,
        bis_time: total.bis / c,
        bis_iter_call: if total.calls > 0 {
            total.iters as f64 / total.calls as f64
        } else {
            0.0
        },
        bis_iter_total: total.iters as f64 / c,
        num_lngm: total.lngm as f64 / c,
    }))
}

fn cmd_bench(ns: &[usize], count: usize, seed: u64, eps: f64, jobs: usize, out: &mut dyn Write) -> Result<i32> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("--eps must be positive, got {eps}")));
    }
    if let Some(&bad) = ns.iter().find(|&&n| n < 2) {
        return Err(Error::InvalidArgument(format!("bench needs n >= 2, got {bad}")));
    }
    writeln!(out, "{BENCH_HEADER}").map_err(io)?;
    for &n in ns {
        if let Some(row) = bench_row(n, count, seed, eps, jobs)? {
            writeln!(out, "{}", row.csv()).map_err(io)?;
        }
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("lngm").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn solve_corpus_json() {
        let (code, out, _) = run_str(&["solve", "--corpus", "psi-roots-eq"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["certificates"].as_array().unwrap().len(), 2);
        assert_eq!(v["branches"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn solve_exit_codes() {
        let (code, out, _) = run_str(&["solve", "--corpus", "remark-2.2", "--format", "text"]);
        assert_eq!(code, 2);
        assert!(out.contains("NotJointlyDefinite"));
        assert_eq!(run_str(&["solve", "--corpus", "psi-roots-eq", "--tol", "0"]).0, 1);
        assert_eq!(run_str(&["solve", "--corpus", "no-such-entry"]).0, 1);
        assert_eq!(run_str(&["solve"]).0, 1);
        assert_eq!(run_str(&["frobnicate"]).0, 1);
    }

    #[test]
    fn verify_outcomes() {
        let (code, out, _) = run_str(&["verify", "--corpus", "problem-2.12", "--point", "0,0,0", "--mu", "1"]);
        assert_eq!(code, 2);
        assert!(out.contains("tangent_pd: FAIL") && out.contains("witness"));
        let (code, _, _) = run_str(&["verify", "--corpus", "psi-roots-eq", "--point", "0,0", "--mu", "1"]);
        assert_eq!(code, 2);
        let (code, _, _) = run_str(&["verify", "--corpus", "psi-roots-eq", "--point", "0,0,0", "--mu", "1"]);
        assert_eq!(code, 1);
    }

    #[test]
    fn bench_header_only_for_zero_count() {
        let (code, out, _) = run_str(&["bench", "--n", "3", "--count", "0"]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), BENCH_HEADER);
    }

    #[test]
    fn bench_is_deterministic_apart_from_times() {
        let a = bench_row(3, 6, 4, 1e-5, 1).unwrap().unwrap();
        let b = bench_row(3, 6, 4, 1e-5, 3).unwrap().unwrap();
        assert_eq!(
            (a.bis_iter_call, a.bis_iter_total, a.num_lngm),
            (b.bis_iter_call, b.bis_iter_total, b.num_lngm)
        );
        assert!(a.num_lngm >= 1.0);
    }

    #[test]
    fn generate_to_stdout() {
        let (code, out, _) = run_str(&["generate", "--n", "3", "--seed", "2"]);
        assert_eq!(code, 0);
        let inst = crate::instance::instance_from_json(&out).unwrap();
        assert_eq!(inst.n(), 3);
        assert_eq!(run_str(&["generate", "--n", "1"]).0, 1);
        assert_eq!(run_str(&["generate", "--n", "3", "--count", "2"]).0, 1);
    }
}
