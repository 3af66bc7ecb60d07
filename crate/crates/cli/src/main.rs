//! `pqec` command line tool.
//!
//! Exit codes: 0 when the requested check or construction succeeds, 2 when it completes
//! but the answer is negative (verification fails, precondition unmet), 1 for usage and
//! I/O errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use pqec::channel::Subchannel;
use pqec::codes::{
    er_channel, er_optimal_scheme, qubit_code_circuit, qubit_rank2_witness, rank_bound_counterexample,
    rank_saturating_channel, schur_code, MagicFamilyParams, QubitCodeCircuit, RankFamily, CONSTRUCTORS,
};
use pqec::matcore::{c, ComplexMatrix};
use pqec::pqec::{check_condition_d, kl_check, projected_linear_witness, verify_scheme, ConditionDWitness, Scheme};
use pqec::randgen::{random_channel, random_pure_state, random_schur_channel, RngSeed};
use pqec::sim::{run_monte_carlo, SimTarget};
use pqec::Error;

#[derive(Parser, Debug)]
#[command(name = "pqec", version, about = "Probabilistic quantum error correction toolkit")]
struct Cli {
    /// Relative tolerance for equality and proportionality tests.
    #[arg(long, global = true, env = "PQEC_TOL", default_value_t = pqec::DEFAULT_TOL)]
    tol: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Verify a scheme, a condition-D witness, or an isometric code against a channel.
    Check(CheckArgs),
    /// Build a named code or channel family and write its artifacts.
    Construct(ConstructArgs),
    /// Sample a scheme or a qubit circuit on a pure input.
    Simulate(SimulateArgs),
    /// Run the built-in demonstrations.
    Demo(DemoArgs),
    /// Success rates of the constructors on random channels, as CSV.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long)]
    channel: PathBuf,
    /// Scheme JSON (`encoder`, `recovery`, `p`, `residual`).
    #[arg(long, conflicts_with = "witness")]
    scheme: Option<PathBuf>,
    /// Witness JSON (`s_star`, `r_star`); with `s_star` alone the deterministic test runs.
    #[arg(long)]
    witness: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConstructArgs {
    /// One of: qubit-rank2, schur, er-family, rank-sat-xi, rank-sat-xi1, rank-bound-xi, rank-bound-xi1.
    name: String,
    /// Channel JSON; when absent a random channel is drawn where that makes sense.
    #[arg(long)]
    channel: Option<PathBuf>,
    /// Physical dimension s.
    #[arg(long, default_value_t = 4)]
    dim: usize,
    /// Logical dimension d.
    #[arg(long, default_value_t = 2)]
    logical: usize,
    /// Kraus rank of sampled channels.
    #[arg(long, default_value_t = 2)]
    rank: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Eigenvalues of R for the E_R family.
    #[arg(long, num_args = 4, value_names = ["L1", "L2", "L3", "L4"])]
    lambda: Option<Vec<f64>>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long, conflicts_with = "circuit")]
    scheme: Option<PathBuf>,
    #[arg(long)]
    circuit: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Input amplitudes as re,im pairs; a random pure state is drawn when absent.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    psi: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DemoArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Family {
    Ginibre,
    Schur,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value_t = 4)]
    dim: usize,
    #[arg(long, default_value_t = 2)]
    logical: usize,
    #[arg(long, default_value_t = 2)]
    rank: usize,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Family::Ginibre)]
    family: Family,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Negative answers map to exit code 2, everything else that goes wrong to 1.
enum Failure {
    Negative(String),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

type CmdResult = Result<(), Failure>;

fn negative(msg: impl Into<String>) -> Failure {
    Failure::Negative(msg.into())
}

/// Library errors that describe a property of the input rather than a malformed input.
fn classify(e: Error) -> Failure {
    match e {
        Error::Precondition(_)
        | Error::ConstructionFailed(_)
        | Error::NotProportional { .. }
        | Error::NotTraceNonIncreasing { .. } => Failure::Negative(e.to_string()),
        other => Failure::Other(anyhow!(other)),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, v: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(v)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn emit(out: &Option<PathBuf>, v: &Value) -> anyhow::Result<()> {
    match out {
        Some(p) => write_json(p, v),
        None => {
            println!("{}", serde_json::to_string_pretty(v)?);
            Ok(())
        }
    }
}

fn cmd_check(a: &CheckArgs, tol: f64) -> CmdResult {
    let e: Subchannel = read_json(&a.channel)?;
    let report = if let Some(sp) = &a.scheme {
        let s: Scheme = read_json(sp)?;
        let v = verify_scheme(&e, &s.encoder, &s.recovery, tol).map_err(classify)?;
        json!({"kind": "scheme", "p": v.p, "residual": v.residual, "passed": v.passed})
    } else if let Some(wp) = &a.witness {
        let raw: Value = read_json(wp)?;
        if raw.get("r_star").is_some() {
            let w: ConditionDWitness = serde_json::from_value(raw).context("parsing witness")?;
            let rep = check_condition_d(&e, &w, tol).map_err(classify)?;
            json!({
                "kind": "witness",
                "passed": rep.passed,
                "max_deviation": rep.max_deviation,
                "coeffs": rep.coeffs,
                "p": rep.scheme.as_ref().map(|s| s.success_prob),
            })
        } else {
            let s: ComplexMatrix =
                serde_json::from_value(raw.get("s_star").cloned().ok_or_else(|| anyhow!("witness has no s_star"))?)
                    .context("parsing s_star")?;
            let ok = kl_check(&e, &s, tol).map_err(classify)?;
            json!({"kind": "isometric-code", "passed": ok})
        }
    } else {
        return Err(Failure::Other(anyhow!("check needs --scheme or --witness")));
    };
    emit(&a.out, &report)?;
    if report["passed"] == Value::Bool(true) {
        Ok(())
    } else {
        Err(negative("check failed"))
    }
}

fn load_or_sample(a: &ConstructArgs, schur: bool) -> anyhow::Result<Subchannel> {
    match &a.channel {
        Some(p) => read_json(p),
        None => {
            let mut rng = RngSeed::new(a.seed).rng();
            let ch = if schur {
                random_schur_channel(a.dim, a.rank, &mut rng)?
            } else {
                random_channel(a.dim, a.rank, &mut rng)?
            };
            Ok(ch)
        }
    }
}

/// Reads the written channel and scheme back and verifies them.
fn reverify(dir: &Path, tol: f64) -> Result<f64, Failure> {
    let e: Subchannel = read_json(&dir.join("channel.json"))?;
    let s: Scheme = read_json(&dir.join("scheme.json"))?;
    let v = verify_scheme(&e, &s.encoder, &s.recovery, tol).map_err(classify)?;
    if !v.passed {
        return Err(negative(format!("re-verification failed (residual {:.3e})", v.residual)));
    }
    Ok(v.p)
}

fn cmd_construct(a: &ConstructArgs, tol: f64) -> CmdResult {
    if !CONSTRUCTORS.contains(&a.name.as_str()) {
        return Err(Failure::Other(anyhow!("unknown constructor '{}'; expected one of {:?}", a.name, CONSTRUCTORS)));
    }
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let dir = a.out.as_path();
    let mut files = vec!["channel.json"];
    let mut extra = json!({});
    let has_scheme = match a.name.as_str() {
        "qubit-rank2" => {
            let e = load_or_sample(a, false)?;
            write_json(&dir.join("channel.json"), &e)?;
            let w = qubit_rank2_witness(&e, tol).map_err(classify)?;
            let (circ, scheme) = qubit_code_circuit(&e, tol).map_err(classify)?;
            write_json(&dir.join("witness.json"), &w)?;
            write_json(&dir.join("circuit.json"), &circ)?;
            write_json(&dir.join("scheme.json"), &scheme)?;
            files.extend(["witness.json", "circuit.json", "scheme.json"]);
            true
        }
        "schur" => {
            let e = load_or_sample(a, true)?;
            write_json(&dir.join("channel.json"), &e)?;
            let w = schur_code(&e, a.logical, tol).map_err(classify)?;
            let rep = check_condition_d(&e, &w, tol).map_err(classify)?;
            let scheme = rep.scheme.ok_or_else(|| negative("witness did not pass"))?;
            write_json(&dir.join("witness.json"), &w)?;
            write_json(&dir.join("scheme.json"), &scheme)?;
            files.extend(["witness.json", "scheme.json"]);
            true
        }
        "er-family" => {
            let lam = a.lambda.clone().unwrap_or_else(|| vec![0.25, 0.5, 0.5, 0.5]);
            let m = MagicFamilyParams::new([lam[0], lam[1], lam[2], lam[3]]).map_err(|e| Failure::Other(anyhow!(e)))?;
            let r = m.r_op();
            let e = er_channel(&r).map_err(classify)?;
            let p_op = ComplexMatrix::identity(2).scale_re(m.p0() / 2.0);
            let scheme = er_optimal_scheme(&r, &p_op, tol).map_err(classify)?;
            write_json(&dir.join("channel.json"), &e)?;
            write_json(&dir.join("scheme.json"), &scheme)?;
            files.push("scheme.json");
            extra = json!({"lambda": m.lambda, "p0": m.p0(), "p1": m.p1()});
            true
        }
        "rank-sat-xi" | "rank-sat-xi1" => {
            let kind = if a.name.ends_with("xi1") { RankFamily::Xi1 } else { RankFamily::Xi };
            let (e, scheme) = rank_saturating_channel(kind, a.logical, a.dim).map_err(classify)?;
            write_json(&dir.join("channel.json"), &e)?;
            write_json(&dir.join("scheme.json"), &scheme)?;
            files.push("scheme.json");
            extra = json!({"choi_rank": e.choi_rank(pqec::channel::CHOI_RANK_TOL).map_err(classify)?});
            true
        }
        "rank-bound-xi" | "rank-bound-xi1" => {
            let kind = if a.name.ends_with("xi1") { RankFamily::Xi1 } else { RankFamily::Xi };
            let e = rank_bound_counterexample(kind, a.logical, a.dim).map_err(classify)?;
            write_json(&dir.join("channel.json"), &e)?;
            extra = json!({"choi_rank": e.choi_rank(pqec::channel::CHOI_RANK_TOL).map_err(classify)?});
            false
        }
        _ => unreachable!("checked against CONSTRUCTORS"),
    };
    let p = if has_scheme { Some(reverify(dir, tol)?) } else { None };
    let summary = json!({"constructor": a.name, "p": p, "files": files, "details": extra});
    println!("{}", serde_json::to_string_pretty(&summary).map_err(|e| Failure::Other(e.into()))?);
    Ok(())
}

fn parse_psi(v: &[f64]) -> anyhow::Result<ComplexMatrix> {
    if v.is_empty() || v.len() % 2 != 0 {
        bail!("--psi needs an even number of values (re,im pairs)");
    }
    let amps: Vec<_> = v.chunks(2).map(|p| c(p[0], p[1])).collect();
    let psi = ComplexMatrix::column(&amps);
    let n = psi.frobenius_norm();
    if n == 0.0 {
        bail!("--psi is the zero vector");
    }
    Ok(psi.scale_re(1.0 / n))
}

fn cmd_simulate(a: &SimulateArgs, _tol: f64) -> CmdResult {
    let e: Subchannel = read_json(&a.channel)?;
    let scheme: Option<Scheme> = a.scheme.as_ref().map(|p| read_json(p)).transpose()?;
    let circuit: Option<QubitCodeCircuit> = a.circuit.as_ref().map(|p| read_json(p)).transpose()?;
    let (target, d) = match (&scheme, &circuit) {
        (Some(s), None) => (SimTarget::Scheme(s), s.logical_dim()),
        (None, Some(c)) => (SimTarget::Circuit(c), 2),
        _ => return Err(Failure::Other(anyhow!("simulate needs exactly one of --scheme or --circuit"))),
    };
    let psi = match &a.psi {
        Some(v) => parse_psi(v)?,
        None => random_pure_state(d, &mut RngSeed::with_stream(a.seed, u64::MAX).rng()),
    };
    if psi.rows() != d {
        return Err(Failure::Other(anyhow!("--psi has dimension {}, expected {d}", psi.rows())));
    }
    let rep = run_monte_carlo(&e, target, &psi, a.shots, RngSeed::new(a.seed)).map_err(|e| Failure::Other(anyhow!(e)))?;
    emit(&a.out, &serde_json::to_value(&rep).map_err(|e| Failure::Other(e.into()))?)?;
    Ok(())
}

fn cmd_demo(a: &DemoArgs, tol: f64) -> CmdResult {
    let mut rows = Vec::new();
    for (name, kind, d, s) in [("rank-sat-xi1", RankFamily::Xi1, 2, 4), ("rank-sat-xi", RankFamily::Xi, 2, 4)] {
        let (e, sch) = rank_saturating_channel(kind, d, s).map_err(classify)?;
        let r = e.choi_rank(pqec::channel::CHOI_RANK_TOL).map_err(classify)?;
        rows.push(json!({"demo": name, "choi_rank": r, "p": sch.success_prob}));
    }
    let m = MagicFamilyParams::new([0.25, 0.5, 0.5, 0.5]).map_err(classify)?;
    let sch = er_optimal_scheme(&m.r_op(), &ComplexMatrix::identity(2).scale_re(m.p0() / 2.0), tol).map_err(classify)?;
    rows.push(json!({"demo": "er-family", "p0": m.p0(), "p1": m.p1(), "p": sch.success_prob}));
    let e = random_channel(4, 2, &mut RngSeed::new(a.seed).rng()).map_err(classify)?;
    let (circ, sch) = qubit_code_circuit(&e, tol).map_err(classify)?;
    let psi = random_pure_state(2, &mut RngSeed::with_stream(a.seed, 1).rng());
    let rep = run_monte_carlo(&e, SimTarget::Circuit(&circ), &psi, 10_000, RngSeed::new(a.seed)).map_err(classify)?;
    rows.push(json!({
        "demo": "qubit-circuit",
        "p": sch.success_prob,
        "accept_freq": rep.accept_freq,
        "accepted_fidelity": rep.accepted_fidelity_mean,
    }));
    let e = rank_bound_counterexample(RankFamily::Xi1, 2, 4).map_err(classify)?;
    let w = qubit_rank2_witness(&e, tol).map_err(classify)?;
    let rep = check_condition_d(&e, &w, tol).map_err(classify)?;
    rows.push(json!({"demo": "rank-bound-xi1", "passed": rep.passed, "p": rep.scheme.map(|s| s.success_prob)}));
    println!("{}", serde_json::to_string_pretty(&Value::Array(rows)).map_err(|e| Failure::Other(e.into()))?);
    Ok(())
}

fn bench_sample(b: &BenchArgs, k: usize, tol: f64) -> Vec<(usize, &'static str, bool, f64)> {
    let seed = RngSeed::new(b.seed).child(k as u64);
    let mut rows = Vec::new();
    let ok_p = |w: Option<ConditionDWitness>, e: &Subchannel| -> (bool, f64) {
        match w.map(|w| check_condition_d(e, &w, tol)) {
            Some(Ok(rep)) if rep.passed => (true, rep.scheme.map(|s| s.success_prob).unwrap_or(0.0)),
            _ => (false, 0.0),
        }
    };
    match b.family {
        Family::Ginibre => {
            let e = match random_channel(b.dim, b.rank, &mut seed.rng()) {
                Ok(e) => e,
                Err(_) => return vec![(k, "linear", false, 0.0)],
            };
            if b.dim == 4 && b.logical == 2 && b.rank <= 2 {
                let r = qubit_code_circuit(&e, tol).map(|(_, s)| s.success_prob);
                rows.push((k, "qubit-rank2", r.is_ok(), r.unwrap_or(0.0)));
            }
            let v = ComplexMatrix::from_fn(b.dim, b.logical, |i, j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) });
            let (ok, p) = ok_p(projected_linear_witness(&e, &v, tol).ok().flatten(), &e);
            rows.push((k, "linear", ok, p));
        }
        Family::Schur => {
            let e = match random_schur_channel(b.dim, b.rank, &mut seed.rng()) {
                Ok(e) => e,
                Err(_) => return vec![(k, "schur", false, 0.0)],
            };
            let (ok, p) = ok_p(schur_code(&e, b.logical, tol).ok(), &e);
            rows.push((k, "schur", ok, p));
        }
    }
    rows
}

fn cmd_bench(b: &BenchArgs, tol: f64) -> CmdResult {
    if b.logical == 0 || b.logical > b.dim || b.rank == 0 {
        return Err(Failure::Other(anyhow!("need 1 <= logical <= dim and rank >= 1")));
    }
    let rows: Vec<_> = (0..b.samples).into_par_iter().flat_map_iter(|k| bench_sample(b, k, tol)).collect();
    let mut out = String::from("sample,constructor,success,p\n");
    for (k, name, ok, p) in rows {
        out.push_str(&format!("{k},{name},{ok},{p:.16e}\n"));
    }
    match &b.out {
        Some(path) => fs::write(path, out).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{out}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        eprintln!("error: tolerance must be a positive number");
        return ExitCode::from(1);
    }
    let res = match &cli.command {
        Command::Check(a) => cmd_check(a, cli.tol),
        Command::Construct(a) => cmd_construct(a, cli.tol),
        Command::Simulate(a) => cmd_simulate(a, cli.tol),
        Command::Demo(a) => cmd_demo(a, cli.tol),
        Command::Bench(a) => cmd_bench(a, cli.tol),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Negative(msg)) => {
            eprintln!("fail: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
