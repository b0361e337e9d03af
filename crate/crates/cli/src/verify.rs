//! Verification suites behind `qftkit verify`.

use serde_json::json;

use qftkit::circuit::Circuit;
use qftkit::phasest::{self, phase_probs};
use qftkit::qft_moduli::{arbitrary_modulus_estimate, default_k_bits, mixed_radix_qft, CrtBasis};
use qftkit::qft_pow2::*;
use qftkit::revarith::{build_adder, build_multiplier, prefix_add, telescoping_subtract, RegisterSpec};
use qftkit::sim::*;

use crate::{usage, CmdResult, Failure, Suite};

struct Check {
    name: String,
    value: f64,
    limit: f64,
    /// Whether `value` must stay at or below `limit` (else at or above).
    upper: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Check {
        Check { name: name.into(), value, limit, upper: true }
    }

    fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Check {
        Check { name: name.into(), value, limit, upper: false }
    }

    fn passed(&self) -> bool {
        if self.upper {
            self.value <= self.limit
        } else {
            self.value >= self.limit
        }
    }
}

type Checks = Result<Vec<Check>, Failure>;

pub fn run(suite: Suite, n: Option<usize>, seed: u64, json: bool) -> CmdResult {
    let suites: &[Suite] = match suite {
        Suite::All => &[Suite::Unitary, Suite::Arith, Suite::Phase, Suite::Moduli, Suite::Bounds],
        _ => std::slice::from_ref(&suite),
    };
    let mut failed = 0;
    for &s in suites {
        let checks = match s {
            Suite::Unitary => unitary(n.unwrap_or(6))?,
            Suite::Arith => arith(n.unwrap_or(3))?,
            Suite::Phase => phase(n.unwrap_or(8), seed)?,
            Suite::Moduli => moduli(seed)?,
            Suite::Bounds => bounds(n.unwrap_or(10))?,
            Suite::All => unreachable!(),
        };
        for c in &checks {
            failed += !c.passed() as usize;
            if json {
                let v = json!({ "check": c.name, "value": c.value, "limit": c.limit, "passed": c.passed(), "seed": seed });
                println!("{v}");
            } else {
                let (verdict, op) = (if c.passed() { "ok  " } else { "FAIL" }, if c.upper { "<=" } else { ">=" });
                println!("{verdict} {}: {:.6e} {op} {:.6e}", c.name, c.value, c.limit);
            }
        }
    }
    if failed > 0 {
        return Err(Failure::Check(format!("{failed} check(s)")));
    }
    Ok(())
}

fn distance_to_dft(c: &Circuit, n: usize) -> Result<f64, Failure> {
    let target = reorder_rows(&dft_reference(1 << n).map_err(usage)?, c.meta().output_order.as_deref().unwrap_or(&[]));
    operator_distance(c, &target, DistanceMode::Exact).map_err(usage)
}

fn unitary(n: usize) -> Checks {
    let mut out = vec![Check::at_most(format!("standard n={n}"), distance_to_dft(&standard_qft(n).map_err(usage)?, n)?, 1e-9)];
    if n >= 2 {
        out.push(Check::at_most(format!("split n={n}"), distance_to_dft(&split_qft(n).map_err(usage)?, n)?, 1e-9));
    }
    for band in 1..n {
        let d = distance_to_dft(&banded_qft(n, band).map_err(usage)?, n)?;
        out.push(Check::at_most(format!("banded n={n} b={band}"), d, banded_error_bound(n, band) + 1e-12));
    }
    let m = n.min(5);
    let prep = prep_exact(m).map_err(usage)?;
    let mut worst: f64 = 1.0;
    for x in 0..1u64 << m {
        let mut s = SparseState::from_value(prep.width(), x as u128, m);
        s.apply_circuit(&prep, &mut rng_from_seed(0)).map_err(usage)?;
        let (amps, _) = s.project(&(0..m).chain(psi_register(m)).collect::<Vec<_>>());
        let rows: Vec<C64> = (0..1usize << m).map(|y| amps[x as usize | y << m]).collect();
        worst = worst.min(inner(&rows, &FourierState { n: m, x }.amplitudes()).norm_sqr());
    }
    out.push(Check::at_least(format!("prep fidelity n={m}"), worst, 1.0 - 1e-10));
    Ok(out)
}

/// Number of basis inputs on which a classical circuit disagrees with `f`.
fn mismatches(c: &Circuit, inputs: u128, f: impl Fn(u128) -> u128) -> Result<f64, Failure> {
    let data: Vec<usize> = (0..c.n_data()).collect();
    let mut bad = 0;
    for v in 0..inputs {
        let mut s = SparseState::from_value(c.width(), v, c.n_data());
        s.apply_circuit(c, &mut rng_from_seed(0)).map_err(usage)?;
        let key = &s.entries()[0].0;
        let clean = s.len() == 1 && (c.n_data()..c.width()).all(|w| !SparseState::bit(key, w));
        bad += (!clean || SparseState::read(key, &data) != f(v)) as usize;
    }
    Ok(bad as f64)
}

fn arith(n: usize) -> Checks {
    let n = n.min(5);
    let mask = (1u128 << n) - 1;
    let add = build_adder(&RegisterSpec::range(0, n), &RegisterSpec::range(n, n)).map_err(usage)?;
    let mul = build_multiplier(&RegisterSpec::range(0, n), &RegisterSpec::range(n, n), &RegisterSpec::range(2 * n, 2 * n))
        .map_err(usage)?;
    let pa = prefix_add(3, n.min(3)).map_err(usage)?;
    let ts = telescoping_subtract(3, n.min(3)).map_err(usage)?;
    let w = n.min(3);
    let wm = (1u128 << w) - 1;
    let field = |v: u128, i: usize| v >> (w * i) & wm;
    Ok(vec![
        Check::at_most(format!("adder n={n}"), mismatches(&add, 1 << (2 * n), |v| (v & mask) | ((v + (v >> n)) & mask) << n)?, 0.0),
        Check::at_most(
            format!("multiplier n={n}"),
            mismatches(&mul, 1 << (2 * n), |v| v | ((v & mask) * (v >> n)) << (2 * n))?,
            0.0,
        ),
        Check::at_most(
            format!("prefix_add k=3 n={w}"),
            mismatches(&pa, 1 << (3 * w), |v| {
                (0..3).fold(0, |acc, i| acc | ((0..=i).map(|j| field(v, j)).sum::<u128>() & wm) << (w * i))
            })?,
            0.0,
        ),
        Check::at_most(
            format!("telescoping k=3 n={w}"),
            mismatches(&ts, 1 << (3 * w), |v| {
                (0..3).fold(0, |acc, i| {
                    let d = if i == 0 { field(v, 0) } else { (field(v, i) + wm + 1 - field(v, i - 1)) & wm };
                    acc | d << (w * i)
                })
            })?,
            0.0,
        ),
    ])
}

fn phase(n: usize, seed: u64) -> Checks {
    let trials = 2000;
    let mut out = Vec::new();
    for k in [16usize, 32, 48] {
        let s = run_channel(&QftPlan::logdepth(n, k), (1u64 << n) / 3, trials, seed).map_err(usage)?;
        let p = s.failure_bound;
        let slack = 3.0 * (p * (1.0 - p) / trials as f64).sqrt();
        out.push(Check::at_most(format!("erase failure n={n} k={k}"), s.failure_rate, p + slack));
    }
    let floor = 0.5 + 2f64.sqrt() / 4.0;
    let worst = (0..100_000)
        .map(|i| phase_probs(i as f64 / 100_000.0).into_iter().fold(0.0, f64::max))
        .fold(1.0, f64::min);
    out.push(Check::at_least("min max probability", worst, floor - 1e-9));
    let m = n.min(12) as u32;
    let wrong = (0..1u64 << m)
        .filter(|&x| {
            let (ls, _) = phasest::sample_and_mode(x, m, 256, seed ^ x).expect("even copy count");
            phasest::reconstruct_x(&ls) != x
        })
        .count();
    out.push(Check::at_most(format!("reconstruction misses n={m} k=256"), wrong as f64, 0.0));
    Ok(out)
}

fn moduli(seed: u64) -> Checks {
    let mut out = Vec::new();
    for m in [6u64, 12, 15, 30, 105] {
        let b = CrtBasis::from_modulus(m).map_err(usage)?;
        let f = mixed_radix_qft(&b).map_err(usage)?;
        let e = spectral_norm(&(f - dft_reference(m as usize).map_err(usage)?));
        out.push(Check::at_most(format!("mixed radix m={m}"), e, 1e-10));
    }
    for m in [5u64, 7, 12] {
        let k = default_k_bits(m);
        let mut success: f64 = 1.0;
        let mut recovered = 0usize;
        for x in 0..m {
            for s in 0..100 {
                let r = arbitrary_modulus_estimate(m, k, 25, x, seed.wrapping_add(s)).map_err(usage)?;
                success = success.min(r.success_probability);
                recovered += r.recovered as usize;
            }
        }
        out.push(Check::at_least(format!("per-sample success m={m}"), success, 0.5 + 1e-12));
        out.push(Check::at_least(format!("mode recovery m={m}"), recovered as f64 / (100 * m) as f64, 0.99));
    }
    Ok(out)
}

#[allow(clippy::approx_constant)]
fn bounds(n: usize) -> Checks {
    let p = cos_product(64);
    let mut worst: f64 = 0.0;
    for m in 2..=20 {
        for r in 1..m {
            worst = worst.max(overlap_witness(m, r).map_err(usage)?.trace_distance);
        }
    }
    let floor = 0.5 + 2f64.sqrt() / 4.0;
    let min_max = (0..100_000)
        .map(|i| phase_probs(i as f64 / 100_000.0).into_iter().fold(0.0, f64::max))
        .fold(1.0, f64::min);
    let mut out = vec![
        Check::at_least("cos product lower", p, 0.6366),
        Check::at_most("cos product upper", p, 0.6367),
        Check::at_most("trace distance n<=20", worst, 0.7712),
        Check::at_least("min max probability", min_max, 0.853553),
        Check::at_least("min max probability exact", min_max, floor - 1e-9),
    ];
    for i in 1..=8 {
        let (tail, bound) = cos_tail(i);
        out.push(Check::at_least(format!("cos tail i={i}"), tail, bound));
    }
    let cone = standard_qft(n).map_err(usage)?;
    let top = cone.meta().output_order.as_ref().map(|o| o[0]).unwrap_or(0);
    let seen = cone.light_cone(top).map_err(usage)?.iter().filter(|&&w| w < n).count();
    out.push(Check::at_least(format!("light cone n={n}"), seen as f64, n as f64));
    Ok(out)
}
