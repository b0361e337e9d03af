//! Order finding and the factoring loop around it.
//!
//! Two backends sample the measured value `y in [0, 2^{2n})`: a gate-level
//! one that simulates the order-finding circuit (small `N` only), and an
//! analytic one that samples the exact output distribution given the true
//! order. They agree wherever both run.

use std::f64::consts::PI;

use num_integer::{Integer, Roots};
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitBuilder, CircuitError};
use crate::phasest;
use crate::qft_pow2::{prep_exact, standard_qft, QftError};
use crate::revarith::{iterated_product, ArithError, RegisterSpec};
use crate::sim::{derive_seed, rng_from_seed, SimError, SparseState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShorError {
    #[error("value error: {0}")]
    Value(String),
    #[error("base shares the factor {divisor} with the modulus")]
    NotCoprime { divisor: u64 },
    #[error("capacity: {0}")]
    Capacity(String),
    #[error("no divisor found in {} attempts", trace.len())]
    Exhausted { trace: Vec<Attempt> },
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Qft(#[from] QftError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

pub type ShorResult<T> = Result<T, ShorError>;

/// Largest modulus accepted at all.
pub const MAX_MODULUS: u64 = 1 << 20;
/// Largest modulus the gate backend simulates.
pub const MAX_GATE_MODULUS: u64 = 15;
/// Largest `2^{2n}` the analytic backend enumerates.
pub const MAX_ANALYTIC_RANGE: u64 = 1 << 24;
/// Copies used to estimate `x` when the logdepth variant erases its input.
pub const DEFAULT_ERASE_COPIES: usize = 96;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Gate,
    Analytic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QftVariant {
    Standard,
    /// Fourier-state preparation followed by erasing `x` from an estimate
    /// made out of `copies` measured copies.
    Logdepth { copies: usize },
}

/// One order-finding instance: odd composite `modulus`, base `a`, `n` the
/// bit length of the modulus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FactorTask {
    pub modulus: u64,
    pub n: u32,
    pub a: u64,
    pub seed: u64,
}

impl FactorTask {
    pub fn new(modulus: u64, a: u64, seed: u64) -> ShorResult<FactorTask> {
        if modulus < 3 || modulus.is_multiple_of(2) || modulus >= MAX_MODULUS {
            return Err(ShorError::Value(format!("modulus {modulus} must be odd in 3..2^20")));
        }
        if a < 1 || a >= modulus {
            return Err(ShorError::Value(format!("base {a} outside 1..{modulus}")));
        }
        Ok(FactorTask { modulus, n: 64 - modulus.leading_zeros(), a, seed })
    }

    /// `2^{2n}`, the size of the first register.
    pub fn range(&self) -> u64 {
        1 << (2 * self.n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct OrderResult {
    pub y: u64,
    pub range: u64,
    /// `(k, r)` with `k / r` the chosen convergent of `y / range`.
    pub convergent: Option<(u64, u64)>,
    /// Whether `a^r = 1 mod N`.
    pub verified: bool,
}

pub fn pow_mod(base: u64, mut exp: u64, modulus: u64) -> u64 {
    let m = modulus as u128;
    let mut b = base as u128 % m;
    let mut acc = 1u128 % m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u64
}

/// `b_j = a^{2^j} mod N` for `j < 2n`.
pub fn precompute_powers(a: u64, modulus: u64) -> ShorResult<Vec<u64>> {
    let task = FactorTask::new(modulus, a, 0)?;
    let d = a.gcd(&modulus);
    if d > 1 {
        return Err(ShorError::NotCoprime { divisor: d });
    }
    let mut b = a;
    let mut out = Vec::with_capacity(2 * task.n as usize);
    for _ in 0..2 * task.n {
        out.push(b);
        b = (b as u128 * b as u128 % modulus as u128) as u64;
    }
    Ok(out)
}

/// Smallest `r >= 1` with `a^r = 1 mod N`, by iteration.
pub fn multiplicative_order(a: u64, modulus: u64) -> ShorResult<u64> {
    if a.gcd(&modulus) != 1 {
        return Err(ShorError::NotCoprime { divisor: a.gcd(&modulus) });
    }
    let mut v = a % modulus;
    let mut r = 1;
    while v != 1 {
        v = (v as u128 * a as u128 % modulus as u128) as u64;
        r += 1;
    }
    Ok(r)
}

/// Convergents `(k, r)` of `y / m`, in order.
pub fn convergents(y: u64, m: u64) -> Vec<(u64, u64)> {
    let (mut num, mut den) = (y as u128, m as u128);
    let (mut h0, mut h1) = (0u128, 1u128);
    let (mut k0, mut k1) = (1u128, 0u128);
    let mut out = Vec::new();
    while den != 0 {
        let q = num / den;
        (h0, h1) = (h1, q * h1 + h0);
        (k0, k1) = (k1, q * k1 + k0);
        out.push((h1 as u64, k1 as u64));
        (num, den) = (den, num - q * den);
    }
    out
}

/// Convergent `k / r` of `y / m` with the largest `r < N` among those with
/// `|y/m - k/r| <= 1/m`.
pub fn continued_fraction_post(y: u64, m: u64, modulus: u64) -> Option<(u64, u64)> {
    convergents(y, m)
        .into_iter()
        .rfind(|&(k, r)| r < modulus && (y as i128 * r as i128 - k as i128 * m as i128).abs() <= r as i128)
}

/// `Pr[y]` for order `r` over a register of size `range`: the `r` residue
/// classes contribute Fejer kernels of lengths `q` and `q + 1`, `q = range / r`.
pub fn analytic_probability(y: u64, r: u64, range: u64) -> f64 {
    let q = range / r;
    let long = range % r;
    let theta = ((r as u128 * y as u128) % range as u128) as f64 / range as f64;
    let fejer = |len: u64| {
        let s = (PI * theta).sin();
        if s.abs() < 1e-300 {
            (len * len) as f64
        } else {
            ((PI * len as f64 * theta).sin() / s).powi(2)
        }
    };
    (long as f64 * fejer(q + 1) + (r - long) as f64 * fejer(q)) / (range as f64 * range as f64)
}

/// Full distribution of `y`. Analytic ranges above `2^20` are refused here;
/// [`sample_ys`] streams them instead.
pub fn order_distribution(task: &FactorTask, backend: Backend, qft: QftVariant) -> ShorResult<Vec<f64>> {
    match backend {
        Backend::Analytic => {
            if task.range() > 1 << 20 {
                return Err(ShorError::Capacity(format!("range {} too large to materialize", task.range())));
            }
            let r = multiplicative_order(task.a, task.modulus)?;
            Ok((0..task.range()).map(|y| analytic_probability(y, r, task.range())).collect())
        }
        Backend::Gate => gate_distribution(task, qft),
    }
}

/// `count` samples of `y`, deterministic in `seed`.
pub fn sample_ys(task: &FactorTask, backend: Backend, qft: QftVariant, count: usize, seed: u64) -> ShorResult<Vec<u64>> {
    let mut rng = rng_from_seed(seed);
    match backend {
        Backend::Gate => {
            let dist = gate_distribution(task, qft)?;
            let w = WeightedIndex::new(&dist).map_err(|e| ShorError::Value(e.to_string()))?;
            Ok((0..count).map(|_| w.sample(&mut rng) as u64).collect())
        }
        Backend::Analytic => {
            let range = task.range();
            if range > MAX_ANALYTIC_RANGE {
                return Err(ShorError::Capacity(format!("range {range} above 2^24")));
            }
            let r = multiplicative_order(task.a, task.modulus)?;
            // one pass over y against sorted uniforms
            let mut us: Vec<(f64, usize)> = (0..count).map(|i| (rng.gen::<f64>(), i)).collect();
            us.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut out = vec![range - 1; count];
            let mut cdf = 0.0;
            let mut next = 0;
            for y in 0..range {
                cdf += analytic_probability(y, r, range);
                while next < count && us[next].0 < cdf {
                    out[us[next].1] = y;
                    next += 1;
                }
                if next == count {
                    break;
                }
            }
            Ok(out)
        }
    }
}

/// Wires of the gate-level order-finding circuit: `x` on `0..2n`, the
/// function register on `2n..3n`, and for the logdepth variant the phase
/// register on `3n..5n`.
pub fn order_finding_circuit(task: &FactorTask, qft: QftVariant) -> ShorResult<Circuit> {
    if task.modulus > MAX_GATE_MODULUS {
        return Err(ShorError::Capacity(format!("gate backend needs N <= {MAX_GATE_MODULUS}")));
    }
    let n = task.n as usize;
    let bases = precompute_powers(task.a, task.modulus)?;
    let data = match qft {
        QftVariant::Standard => 3 * n,
        QftVariant::Logdepth { .. } => 5 * n,
    };
    let mut b = CircuitBuilder::new(data);
    for w in 0..2 * n {
        b.h(w);
    }
    let product = iterated_product(&bases, task.modulus, &RegisterSpec::range(0, 2 * n), &RegisterSpec::range(2 * n, n))?;
    b.append(&product, &(0..3 * n).collect::<Vec<_>>())?;
    let circuit = match qft {
        QftVariant::Standard => {
            let f = standard_qft(2 * n)?;
            b.append(&f, &(0..2 * n).collect::<Vec<_>>())?;
            b.finish().with_output_order(f.meta().output_order.clone().unwrap_or_default())
        }
        QftVariant::Logdepth { .. } => {
            let prep = prep_exact(2 * n)?;
            let map: Vec<usize> = (0..2 * n).chain(3 * n..5 * n).collect();
            b.append(&prep, &map)?;
            b.finish().with_output_order(phase_wires(n))
        }
    };
    Ok(circuit.with_name("order_finding").with_param("N", task.modulus).with_param("a", task.a))
}

/// The phase register as an LSB-first integer register.
fn phase_wires(n: usize) -> Vec<usize> {
    (3 * n..5 * n).rev().collect()
}

fn gate_distribution(task: &FactorTask, qft: QftVariant) -> ShorResult<Vec<f64>> {
    let n = task.n as usize;
    let c = order_finding_circuit(task, qft)?;
    let mut state = SparseState::from_value(c.n_data(), 0, 0);
    state.apply_on(&c, &(0..c.n_data()).collect::<Vec<_>>())?;
    let order = c.meta().output_order.clone().unwrap_or_default();
    if let QftVariant::Logdepth { copies } = qft {
        // each branch XORs its own estimate of x into the x register; a
        // wrong estimate leaves that branch's x register dirty
        let x_wires: Vec<usize> = (0..2 * n).collect();
        let mut estimates = std::collections::HashMap::new();
        let mut failed = None;
        state.map_keys(|key| {
            let x = SparseState::read(key, &x_wires) as u64;
            let est = *estimates.entry(x).or_insert_with(|| {
                match phasest::sample_and_mode(x, 2 * n as u32, copies, derive_seed(task.seed, x)) {
                    Ok((ls, _)) => phasest::reconstruct_x(&ls),
                    Err(e) => {
                        failed = Some(e);
                        x
                    }
                }
            });
            for (i, &w) in x_wires.iter().enumerate() {
                if est >> i & 1 == 1 {
                    key[w / 64] ^= 1 << (w % 64);
                }
            }
        });
        if let Some(e) = failed {
            return Err(ShorError::Value(e.to_string()));
        }
    }
    let mut dist = vec![0.0; task.range() as usize];
    for (y, p) in state.marginal(&order) {
        dist[y as usize] += p;
    }
    Ok(dist)
}

/// One run: sample `y` with the task's seed and post-process it.
pub fn order_finding_run(task: &FactorTask, backend: Backend, qft: QftVariant) -> ShorResult<OrderResult> {
    let y = sample_ys(task, backend, qft, 1, task.seed)?[0];
    Ok(post_process(task, y))
}

fn post_process(task: &FactorTask, y: u64) -> OrderResult {
    let convergent = continued_fraction_post(y, task.range(), task.modulus);
    let verified = convergent.is_some_and(|(_, r)| pow_mod(task.a, r, task.modulus) == 1);
    OrderResult { y, range: task.range(), convergent, verified }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactorPolicy {
    pub backend: Backend,
    pub qft: QftVariant,
    pub max_attempts: usize,
    /// `y` samples drawn per base before moving on.
    pub samples_per_base: usize,
    /// Bases tried first, in order, before random ones.
    pub forced_bases: Vec<u64>,
}

impl Default for FactorPolicy {
    fn default() -> Self {
        FactorPolicy {
            backend: Backend::Analytic,
            qft: QftVariant::Standard,
            max_attempts: 10,
            samples_per_base: 1,
            forced_bases: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttemptOutcome {
    /// `gcd(a, N) > 1`.
    SharedFactor { divisor: u64 },
    /// No sample produced a verified order.
    NoOrder,
    OddOrder { r: u64 },
    /// `gcd(a^{r/2} - 1, N)` is 1 or `N`.
    TrivialGcd { r: u64, half_power: u64 },
    Found { r: u64, divisor: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Attempt {
    pub a: u64,
    pub samples: Vec<OrderResult>,
    pub outcome: AttemptOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactorReport {
    pub modulus: u64,
    pub divisor: u64,
    /// Divisors found without any order finding (even or prime-power moduli).
    pub classical: bool,
    pub attempts: usize,
    pub trace: Vec<Attempt>,
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

/// `(p, e)` with `p^e = N` and `e >= 2`, largest `e` first.
pub fn perfect_power(modulus: u64) -> Option<(u64, u32)> {
    (2..64 - modulus.leading_zeros()).rev().find_map(|e| {
        let p = modulus.nth_root(e);
        (p > 1 && p.checked_pow(e) == Some(modulus)).then_some((p, e))
    })
}

/// A nontrivial divisor of `N`.
pub fn factor(modulus: u64, seed: u64, policy: &FactorPolicy) -> ShorResult<FactorReport> {
    if !(4..MAX_MODULUS).contains(&modulus) {
        return Err(ShorError::Value(format!("modulus {modulus} outside 4..2^20")));
    }
    if is_prime(modulus) {
        return Err(ShorError::Value(format!("{modulus} is prime")));
    }
    let classical = |divisor| FactorReport { modulus, divisor, classical: true, attempts: 0, trace: Vec::new() };
    if modulus.is_multiple_of(2) {
        return Ok(classical(2));
    }
    if let Some((p, _)) = perfect_power(modulus) {
        return Ok(classical(p));
    }
    if policy.samples_per_base == 0 {
        return Err(ShorError::Value("need at least one sample per base".into()));
    }
    let mut rng = rng_from_seed(seed);
    let mut trace = Vec::new();
    for attempt in 0..policy.max_attempts {
        let a = match policy.forced_bases.get(attempt) {
            Some(&a) => a,
            None => rng.gen_range(2..modulus),
        };
        let outcome = try_base(modulus, a, derive_seed(seed, attempt as u64), policy)?;
        let found = match outcome.outcome {
            AttemptOutcome::SharedFactor { divisor } | AttemptOutcome::Found { divisor, .. } => Some(divisor),
            _ => None,
        };
        trace.push(outcome);
        if let Some(divisor) = found {
            assert!(divisor > 1 && divisor < modulus && modulus.is_multiple_of(divisor));
            return Ok(FactorReport { modulus, divisor, classical: false, attempts: trace.len(), trace });
        }
    }
    Err(ShorError::Exhausted { trace })
}

fn try_base(modulus: u64, a: u64, seed: u64, policy: &FactorPolicy) -> ShorResult<Attempt> {
    let d = a.gcd(&modulus);
    if d > 1 {
        return Ok(Attempt { a, samples: Vec::new(), outcome: AttemptOutcome::SharedFactor { divisor: d } });
    }
    let task = FactorTask::new(modulus, a, seed)?;
    let ys = sample_ys(&task, policy.backend, policy.qft, policy.samples_per_base, seed)?;
    let samples: Vec<OrderResult> = ys.into_iter().map(|y| post_process(&task, y)).collect();
    let Some(r) = samples.iter().find(|s| s.verified).and_then(|s| s.convergent).map(|(_, r)| r) else {
        return Ok(Attempt { a, samples, outcome: AttemptOutcome::NoOrder });
    };
    if !r.is_multiple_of(2) {
        return Ok(Attempt { a, samples, outcome: AttemptOutcome::OddOrder { r } });
    }
    let half_power = pow_mod(a, r / 2, modulus);
    let d = (half_power + modulus - 1).gcd(&modulus);
    let outcome = if d > 1 && d < modulus {
        AttemptOutcome::Found { r, divisor: d }
    } else {
        AttemptOutcome::TrivialGcd { r, half_power }
    };
    Ok(Attempt { a, samples, outcome })
}
