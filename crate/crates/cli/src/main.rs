use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qftkit::accept::{self, AcceptOptions};
use qftkit::circuit::Circuit;
use qftkit::qft_pow2::{self, QftPlan};
use qftkit::shor::{self, Backend, FactorPolicy, QftVariant, ShorError};
use qftkit::sim::{derive_seed, dft_reference, rng_from_seed, SparseState, C64};

mod verify;

/// Seed used when neither `--seed` nor `QFTKIT_SEED` is given.
const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Parser)]
#[command(name = "qftkit", version, about = "Quantum Fourier transform circuits: build, inspect, simulate, verify")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a circuit and write it as a netlist.
    Build {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=64))]
        n: u64,
        /// Phase band for `banded`, `prep-approx` and the preparation inside `logdepth`.
        #[arg(long)]
        band: Option<usize>,
        /// Copy count for `logdepth` and `copy`.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Report size, depth, width and gate counts of a netlist.
    Stats {
        path: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Simulate a netlist on a basis input (bit string, first character most significant).
    Sim {
        path: PathBuf,
        #[arg(long)]
        input: String,
        #[arg(long, env = "QFTKIT_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        shots: usize,
    },
    /// Run a verification suite; exits 1 if any check fails.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=10))]
        n: Option<u64>,
        #[arg(long, env = "QFTKIT_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Find a nontrivial divisor of an odd composite.
    Factor {
        modulus: u64,
        #[arg(long, value_enum, default_value_t = BackendArg::Analytic)]
        backend: BackendArg,
        #[arg(long, value_enum, default_value_t = QftArg::Standard)]
        qft: QftArg,
        /// Copies used to erase the input in the logdepth variant.
        #[arg(long, default_value_t = shor::DEFAULT_ERASE_COPIES)]
        copies: usize,
        #[arg(long, env = "QFTKIT_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        max_retries: usize,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        samples_per_base: u64,
        /// Bases to try first, comma separated.
        #[arg(long, value_delimiter = ',')]
        base: Vec<u64>,
    },
    /// Run the acceptance battery; exits 1 if any criterion fails.
    Accept {
        #[arg(long)]
        quick: bool,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Standard,
    Banded,
    Split,
    Logdepth,
    Prep,
    PrepApprox,
    Copy,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Suite {
    Unitary,
    Arith,
    Phase,
    Moduli,
    Bounds,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Gate,
    Analytic,
}

#[derive(Clone, Copy, ValueEnum)]
enum QftArg {
    Standard,
    Logdepth,
}

/// Failure to run at all (exit 2) versus a check that ran and failed (exit 1).
enum Failure {
    Usage(String),
    Check(String),
}

type CmdResult = Result<(), Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build { kind, n, band, k, out, json } => build(kind, n as usize, band, k, out, json),
        Command::Stats { path, json } => stats(&path, json),
        Command::Sim { path, input, seed, shots } => sim(&path, &input, seed, shots),
        Command::Verify { suite, n, seed, json } => verify::run(suite, n.map(|v| v as usize), seed, json),
        Command::Factor { modulus, backend, qft, copies, seed, max_retries, samples_per_base, base } => {
            let policy = FactorPolicy {
                backend: match backend {
                    BackendArg::Gate => Backend::Gate,
                    BackendArg::Analytic => Backend::Analytic,
                },
                qft: match qft {
                    QftArg::Standard => QftVariant::Standard,
                    QftArg::Logdepth => QftVariant::Logdepth { copies },
                },
                max_attempts: max_retries,
                samples_per_base: samples_per_base as usize,
                forced_bases: base,
            };
            factor(modulus, seed, &policy)
        }
        Command::Accept { quick, json } => accept_cmd(quick, json),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("failed: {msg}");
            ExitCode::from(1)
        }
    }
}

fn build(kind: Kind, n: usize, band: Option<usize>, k: Option<usize>, out: Option<PathBuf>, json: bool) -> CmdResult {
    let circuit = match kind {
        Kind::Standard => qft_pow2::standard_qft(n),
        Kind::Banded => qft_pow2::banded_qft(n, band.unwrap_or(n)),
        Kind::Split => qft_pow2::split_qft(n),
        Kind::Logdepth => {
            let mut plan = QftPlan::logdepth(n, k.unwrap_or(4));
            plan.band = band;
            plan.build()
        }
        Kind::Prep => qft_pow2::prep_exact(n),
        Kind::PrepApprox => qft_pow2::prep_approx(n, band.unwrap_or(n)),
        Kind::Copy => qft_pow2::copy_fourier(n, k.unwrap_or(2)),
    }
    .map_err(usage)?;
    if let Some(path) = &out {
        fs::write(path, circuit.encode_netlist()).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    if json || out.is_some() {
        print_stats(&circuit, json);
    } else {
        print!("{}", circuit.encode_netlist());
    }
    Ok(())
}

fn load(path: &PathBuf) -> Result<Circuit, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Circuit::decode_netlist(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn param(c: &Circuit, key: &str) -> Option<usize> {
    c.meta().params.get(key).and_then(|v| v.parse().ok())
}

/// Analytic error bound for circuits whose builder has one.
fn error_bound(c: &Circuit) -> Option<f64> {
    let n = param(c, "n")?;
    match c.meta().name.as_str() {
        "standard_qft" | "split_qft" => Some(0.0),
        "banded_qft" => Some(qft_pow2::banded_error_bound(n, param(c, "band").unwrap_or(n))),
        "prep" => Some(qft_pow2::prep_error_bound(n, param(c, "band").unwrap_or(n))),
        _ => None,
    }
}

fn stats_json(c: &Circuit) -> Value {
    let m = c.metrics();
    json!({
        "n": param(c, "n").unwrap_or(c.n_data()),
        "size": m.size,
        "depth": m.depth,
        "width": m.width,
        "gate_histogram": m.gate_histogram,
        "error_bound": error_bound(c),
        "measured_error": null,
        "seed": null,
    })
}

fn print_stats(c: &Circuit, json: bool) {
    let v = stats_json(c);
    if json {
        println!("{v}");
        return;
    }
    let name = if c.meta().name.is_empty() { "circuit" } else { &c.meta().name };
    println!("{name}: n {} size {} depth {} width {}", v["n"], v["size"], v["depth"], v["width"]);
    let hist: Vec<String> = c.metrics().gate_histogram.iter().map(|(g, k)| format!("{g} {k}")).collect();
    println!("gates: {}", hist.join(", "));
    let low = c.lowered_metrics();
    println!("lowered to h/p/cp: size {} depth {}", low.size, low.depth);
    if let Some(b) = error_bound(c) {
        println!("error bound {b:.3e}");
    }
}

fn stats(path: &PathBuf, json: bool) -> CmdResult {
    print_stats(&load(path)?, json);
    Ok(())
}

/// Data wires above this are too many to print amplitudes for.
const MAX_SIM_PRINT: usize = 16;

fn sim(path: &PathBuf, input: &str, seed: u64, shots: usize) -> CmdResult {
    let c = load(path)?;
    let n = c.n_data();
    if input.len() != n || !input.chars().all(|ch| ch == '0' || ch == '1') {
        return Err(usage(format!("input must be {n} binary digits, got `{input}`")));
    }
    if n > MAX_SIM_PRINT {
        return Err(usage(format!("{n} data wires exceed the {MAX_SIM_PRINT}-wire simulation limit")));
    }
    let value = u128::from_str_radix(input, 2).map_err(usage)?;
    let mut rng = rng_from_seed(seed);
    let mut state = SparseState::from_value(c.width(), value, n);
    let record = state.apply_circuit(&c, &mut rng).map_err(usage)?;
    // read the result register in the order the builder recorded
    let order: Vec<usize> = c.meta().output_order.clone().unwrap_or_else(|| (0..n).collect());
    let mut result_wires = order.clone();
    result_wires.extend((0..n).filter(|w| !order.contains(w)));
    let (amps, leak) = state.project(&result_wires);
    let is_qft = matches!(c.meta().name.as_str(), "standard_qft" | "split_qft" | "banded_qft") && order.len() == n;
    let measured_error = is_qft
        .then(|| dft_reference(1 << n).ok())
        .flatten()
        .map(|f| amps.iter().enumerate().map(|(y, a)| (a - f[(y, value as usize)]).norm_sqr()).sum::<f64>().sqrt());
    let mut out = json!({
        "n": n,
        "input": input,
        "amplitudes": amps.iter().map(|a: &C64| [round(a.re), round(a.im)]).collect::<Vec<_>>(),
        "ancilla_norm": round(leak),
        "measured_error": measured_error,
        "seed": seed,
    });
    if !record.is_empty() {
        out["classical"] = json!(record);
    }
    if shots > 0 {
        let mut hist: BTreeMap<String, usize> = BTreeMap::new();
        for t in 0..shots {
            let mut rng = rng_from_seed(derive_seed(seed, t as u64));
            let mut s = SparseState::from_value(c.width(), value, n);
            let rec = s.apply_circuit(&c, &mut rng).map_err(usage)?;
            let key = if rec.is_empty() {
                // sample the result register
                let marg = s.marginal(&order);
                let u = (derive_seed(seed ^ 0x5eed, t as u64) >> 11) as f64 / (1u64 << 53) as f64;
                let mut acc = 0.0;
                let y = marg.iter().find(|(_, p)| {
                    acc += **p;
                    u < acc
                });
                format!("{:0width$b}", y.map(|(y, _)| *y).unwrap_or(0), width = order.len())
            } else {
                rec.values().rev().map(|b| char::from(b'0' + b)).collect()
            };
            *hist.entry(key).or_default() += 1;
        }
        out["shots"] = json!(hist);
    }
    println!("{out}");
    Ok(())
}

fn round(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

fn factor(modulus: u64, seed: u64, policy: &FactorPolicy) -> CmdResult {
    match shor::factor(modulus, seed, policy) {
        Ok(r) => {
            println!(
                "{}",
                json!({ "modulus": r.modulus, "divisor": r.divisor, "classical": r.classical, "attempts": r.attempts, "trace": r.trace, "seed": seed })
            );
            Ok(())
        }
        Err(ShorError::Exhausted { trace }) => {
            println!("{}", json!({ "modulus": modulus, "divisor": null, "attempts": trace.len(), "trace": trace, "seed": seed }));
            Err(Failure::Check(format!("no divisor of {modulus} within {} attempts", trace.len())))
        }
        Err(e) => Err(usage(e)),
    }
}

fn accept_cmd(quick: bool, json: bool) -> CmdResult {
    let mut failed = Vec::new();
    for (id, _) in accept::CRITERIA {
        let r = accept::run_criterion(id, AcceptOptions { quick }).expect("listed criterion");
        if json {
            println!("{}", json!(r));
        } else {
            println!("{r}");
        }
        if !r.passed {
            failed.push(id.to_string());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("criteria {}", failed.join(", "))))
    }
}
