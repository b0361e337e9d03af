//! Fourier transforms modulo `2^n`.
//!
//! Input `x` sits LSB first on data wires `0..n`. The exact builders leave
//! output bit `b` of `y` on wire `n - 1 - b` and record that permutation as
//! the circuit's `output_order` instead of emitting swaps.
//!
//! Fourier-state builders use `2n` data wires: `x` on `0..n` and a phase
//! register on `n..2n`, where wire `n + j` ends in `mu_{x / 2^{j+1}}`. Read as
//! an integer register the phase register is LSB first over wires
//! `2n-1, ..., n`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Basis, Circuit, CircuitBuilder, CircuitError, DyadicAngle};
use crate::phasest::{self, PhaseError};
use crate::revarith::{emit_multiplier, emit_telescoping, wires, ArithError};
use crate::sim::{derive_seed, rng_from_seed, SimError, SparseState, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QftError {
    #[error("parameter out of range: {0}")]
    Range(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Phase(#[from] PhaseError),
}

pub type QftResult<T> = Result<T, QftError>;

pub const MAX_QFT_QUBITS: usize = 64;

/// `(|0> + e^{2 pi i theta}|1>) / sqrt 2`, `theta` in turns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MuState {
    pub theta: f64,
}

impl MuState {
    pub fn amplitudes(self) -> [C64; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        [C64::new(s, 0.0), C64::from_polar(s, 2.0 * std::f64::consts::PI * self.theta)]
    }

    /// `<self|other>`, of magnitude `|cos(pi (a - b))|`.
    pub fn inner(self, other: MuState) -> C64 {
        let (a, b) = (self.amplitudes(), other.amplitudes());
        a[0].conj() * b[0] + a[1].conj() * b[1]
    }
}

/// `psi_x`, the Fourier basis state with phase parameter `x` mod `2^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FourierState {
    pub n: usize,
    pub x: u64,
}

impl FourierState {
    /// Amplitude of `|y>` is `e^{2 pi i x y / 2^n} / 2^{n/2}`.
    pub fn amplitudes(self) -> Vec<C64> {
        let dim = 1usize << self.n;
        let s = 1.0 / (dim as f64).sqrt();
        let mask = dim as u128 - 1;
        (0..dim)
            .map(|y| {
                let xy = (self.x as u128 * y as u128) & mask;
                C64::from_polar(s, 2.0 * std::f64::consts::PI * xy as f64 / dim as f64)
            })
            .collect()
    }

    /// Factor `j` (0-based) is `mu_{x / 2^{j+1}}`, carried by bit `n-1-j` of `y`.
    pub fn factors(self) -> Vec<MuState> {
        (1..=self.n as u32).map(|j| MuState { theta: phasest::phase_of(self.x, j) }).collect()
    }
}

/// Tensor product with `qubits[b]` on bit `b` of the index.
pub fn product_state(qubits: &[MuState]) -> Vec<C64> {
    let mut v = vec![C64::new(1.0, 0.0)];
    for (b, q) in qubits.iter().enumerate() {
        let amps = q.amplitudes();
        let mut next = vec![C64::new(0.0, 0.0); v.len() * 2];
        for (i, a) in v.iter().enumerate() {
            next[i] = a * amps[0];
            next[i | 1 << b] = a * amps[1];
        }
        v = next;
    }
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QftKind {
    Standard,
    Banded,
    Split,
    Logdepth,
}

/// What to build. `band` is the number of significant phase bits (banded
/// and the Fourier-state preparation inside logdepth); `copies` is the copy
/// count for logdepth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct QftPlan {
    pub kind: QftKind,
    pub n: usize,
    pub band: Option<usize>,
    pub copies: Option<usize>,
}

impl QftPlan {
    pub fn standard(n: usize) -> QftPlan {
        QftPlan { kind: QftKind::Standard, n, band: None, copies: None }
    }

    pub fn banded(n: usize, band: usize) -> QftPlan {
        QftPlan { kind: QftKind::Banded, n, band: Some(band), copies: None }
    }

    pub fn split(n: usize) -> QftPlan {
        QftPlan { kind: QftKind::Split, n, band: None, copies: None }
    }

    pub fn logdepth(n: usize, copies: usize) -> QftPlan {
        QftPlan { kind: QftKind::Logdepth, n, band: None, copies: Some(copies) }
    }

    pub fn with_band(mut self, band: usize) -> QftPlan {
        self.band = Some(band);
        self
    }

    pub fn validate(&self) -> QftResult<()> {
        check_n(self.n, MAX_QFT_QUBITS)?;
        if self.band == Some(0) {
            return Err(QftError::Range("band must be at least 1".into()));
        }
        if self.kind == QftKind::Logdepth {
            let k = self.copies.unwrap_or(0);
            if k < 2 || k % 2 == 1 {
                return Err(QftError::Range(format!("copy count {k} must be even and at least 2")));
            }
        }
        Ok(())
    }

    pub fn build(&self) -> QftResult<Circuit> {
        self.validate()?;
        match self.kind {
            QftKind::Standard => standard_qft(self.n),
            QftKind::Banded => banded_qft(self.n, self.band.unwrap_or(self.n)),
            QftKind::Split => split_qft(self.n),
            QftKind::Logdepth => logdepth_qft(self),
        }
    }

    /// Analytic operator-norm error bound of the built circuit, where one exists.
    pub fn error_bound(&self) -> Option<f64> {
        match self.kind {
            QftKind::Standard | QftKind::Split => Some(0.0),
            QftKind::Banded => Some(banded_error_bound(self.n, self.band.unwrap_or(self.n))),
            QftKind::Logdepth => None,
        }
    }
}

fn check_n(n: usize, max: usize) -> QftResult<()> {
    if n == 0 || n > max {
        return Err(QftError::Range(format!("n = {n} outside 1..={max}")));
    }
    Ok(())
}

fn reversed_order(n: usize) -> Vec<usize> {
    (0..n).rev().collect()
}

/// DFT on `w` (LSB first) keeping controlled phases of at least
/// `2^-(band+1)` turns; output bit `b` lands on `w[len-1-b]`.
fn emit_dft(b: &mut CircuitBuilder, w: &[usize], band: usize) {
    let n = w.len();
    if n > 1 {
        emit_dft(b, &w[1..], band);
    }
    // cross phase x_0 * y_lo / 2^n; y_lo bit s sits on w[n-1-s]
    for s in 0..n.saturating_sub(1) {
        let log = (n - s) as u32;
        if log as usize <= band + 1 {
            b.cp(w[0], w[n - 1 - s], DyadicAngle::pow2_inv(log));
        }
    }
    b.h(w[0]);
}

/// Exact transform: `n` Hadamards and `n(n-1)/2` controlled phases.
pub fn standard_qft(n: usize) -> QftResult<Circuit> {
    check_n(n, MAX_QFT_QUBITS)?;
    let mut b = CircuitBuilder::new(n);
    emit_dft(&mut b, &(0..n).collect::<Vec<_>>(), n);
    Ok(b.finish().with_name("standard_qft").with_param("n", n).with_output_order(reversed_order(n)))
}

/// [`standard_qft`] without the controlled phases below `2^-(band+1)` turns.
/// A band above `n` is clamped to `n`.
pub fn banded_qft(n: usize, band: usize) -> QftResult<Circuit> {
    check_n(n, MAX_QFT_QUBITS)?;
    if band == 0 {
        return Err(QftError::Range("band must be at least 1".into()));
    }
    let band = band.min(n);
    let mut b = CircuitBuilder::new(n);
    emit_dft(&mut b, &(0..n).collect::<Vec<_>>(), band);
    Ok(b.finish()
        .with_name("banded_qft")
        .with_param("n", n)
        .with_param("band", band)
        .with_output_order(reversed_order(n)))
}

/// `2 pi` times the total angle of the dropped phases; each dropped `CP(t)`
/// is within `2 pi t` of the identity in operator norm.
pub fn banded_error_bound(n: usize, band: usize) -> f64 {
    let band = band.min(n);
    // a phase of 2^-log appears n - log + 1 times
    let dropped: f64 = (band + 2..=n).map(|log| (n - log + 1) as f64 * 0.5f64.powi(log as i32)).sum();
    2.0 * std::f64::consts::PI * dropped
}

/// Cross phase `e^{2 pi i x_lo y_lo / 2^n}` as multiply, phase the product
/// bits, unmultiply.
fn emit_split_cross(b: &mut CircuitBuilder, x_lo: &[usize], y_lo: &[usize], n: usize) {
    let out = b.alloc(n);
    let start = b.mark();
    emit_multiplier(b, &wires(x_lo), &wires(y_lo), &out);
    let mult = b.gates_since(start);
    for (t, &w) in out.iter().enumerate() {
        b.p(w, DyadicAngle::pow2_inv((n - t) as u32));
    }
    b.push_inverse(&mult);
}

fn emit_split(b: &mut CircuitBuilder, w: &[usize]) {
    let n = w.len();
    if n <= 3 {
        emit_dft(b, w, n);
        return;
    }
    let m = n / 2;
    emit_split(b, &w[m..]);
    let y_lo: Vec<usize> = w[m..].iter().rev().copied().collect();
    emit_split_cross(b, &w[..m], &y_lo, n);
    emit_split(b, &w[..m]);
}

/// The middle stage of [`split_qft`] at size `n`, on its own.
pub fn split_step2(n: usize) -> QftResult<Circuit> {
    check_n(n, MAX_QFT_QUBITS)?;
    let m = n / 2;
    let mut b = CircuitBuilder::new(n);
    let y_lo: Vec<usize> = (m..n).rev().collect();
    emit_split_cross(&mut b, &(0..m).collect::<Vec<_>>(), &y_lo, n);
    Ok(b.finish().with_name("split_step2").with_param("n", n))
}

/// Exact transform that splits the input at `floor(n/2)` bits and replaces
/// the quadratic block of cross phases by a multiplier.
pub fn split_qft(n: usize) -> QftResult<Circuit> {
    check_n(n, MAX_QFT_QUBITS)?;
    let mut b = CircuitBuilder::new(n);
    emit_split(&mut b, &(0..n).collect::<Vec<_>>());
    Ok(b.finish().with_name("split_qft").with_param("n", n).with_output_order(reversed_order(n)))
}

/// CNOT doubling tree copying `src` into `count - 1` fresh wires; returns
/// `src` followed by the copies.
fn fan_out(b: &mut CircuitBuilder, src: usize, count: usize) -> Vec<usize> {
    let mut holders = vec![src];
    let fresh = b.alloc(count.saturating_sub(1));
    let mut next = fresh.iter();
    while holders.len() < count {
        let round: Vec<usize> = holders.clone();
        for h in round {
            if let Some(&t) = next.next() {
                b.cnot(h, t);
                holders.push(t);
            }
        }
    }
    holders
}

fn emit_prep(b: &mut CircuitBuilder, n: usize, band: usize) {
    // bits of x feeding target j
    let feeds = |j: usize| (j + 1 - band.min(j + 1))..=j;
    let mut uses = vec![0usize; n];
    for j in 0..n {
        feeds(j).for_each(|i| uses[i] += 1);
    }
    let start = b.mark();
    let x_copies: Vec<Vec<usize>> = (0..n).map(|i| fan_out(b, i, uses[i])).collect();
    let fan_x = b.gates_since(start);
    for j in 0..n {
        b.h(n + j);
    }
    let start = b.mark();
    let t_copies: Vec<Vec<usize>> = (0..n).map(|j| fan_out(b, n + j, feeds(j).count())).collect();
    let fan_t = b.gates_since(start);
    let mut next_copy = vec![0usize; n];
    for (j, targets) in t_copies.iter().enumerate() {
        for (slot, i) in feeds(j).enumerate() {
            let xc = x_copies[i][next_copy[i]];
            next_copy[i] += 1;
            b.cp(xc, targets[slot], DyadicAngle::pow2_inv((j - i + 1) as u32));
        }
    }
    b.push_inverse(&fan_t);
    b.push_inverse(&fan_x);
}

/// `|x>|0^n> -> |x>|psi_x>` with every phase bit present.
pub fn prep_exact(n: usize) -> QftResult<Circuit> {
    check_n(n, MAX_QFT_QUBITS)?;
    let mut b = CircuitBuilder::new(2 * n);
    emit_prep(&mut b, n, n);
    Ok(b.finish().with_name("prep").with_param("n", n).with_param("band", n))
}

/// Like [`prep_exact`], but target `j` only sees `x_j, ..., x_{j-k+1}`.
pub fn prep_approx(n: usize, k: usize) -> QftResult<Circuit> {
    check_n(n, MAX_QFT_QUBITS)?;
    if k == 0 || k > n {
        return Err(QftError::Range(format!("band {k} outside 1..={n}")));
    }
    let mut b = CircuitBuilder::new(2 * n);
    emit_prep(&mut b, n, k);
    Ok(b.finish().with_name("prep").with_param("n", n).with_param("band", k))
}

/// Per-qubit distance bound `2 pi 2^-k` of the truncated preparation, summed over `n` qubits.
pub fn prep_error_bound(n: usize, k: usize) -> f64 {
    if k >= n {
        return 0.0;
    }
    n as f64 * 2.0 * std::f64::consts::PI * 0.5f64.powi(k as i32)
}

/// Phase register as an LSB-first integer register.
pub fn psi_register(n: usize) -> Vec<usize> {
    (n..2 * n).rev().collect()
}

/// `|psi_x>|0>...|0> -> |psi_x>...|psi_x>` over `k` integer registers of
/// `n` bits; the source is register `k-1` (wires `(k-1)n..kn`).
pub fn copy_fourier(n: usize, k: usize) -> QftResult<Circuit> {
    check_n(n, MAX_QFT_QUBITS)?;
    if k == 0 {
        return Err(QftError::Range("need at least one register".into()));
    }
    let mut b = CircuitBuilder::new(k * n);
    for w in 0..(k - 1) * n {
        b.h(w);
    }
    let regs: Vec<Vec<usize>> = (0..k).map(|i| (i * n..(i + 1) * n).collect()).collect();
    emit_telescoping(&mut b, &regs);
    Ok(b.finish().with_name("copy_fourier").with_param("n", n).with_param("k", k))
}

/// Gate-level skeleton of the logarithmic-depth transform: preparation,
/// copying, one measurement layer over all copies (the first half in the X
/// basis, the rest in Y), inverse copying. The classical estimation between
/// measurement and uncopying is carried out by [`run_channel`].
pub fn logdepth_qft(plan: &QftPlan) -> QftResult<Circuit> {
    plan.validate()?;
    let n = plan.n;
    let k = plan.copies.unwrap_or(0);
    let band = plan.band.unwrap_or(n).min(n);
    let mut b = CircuitBuilder::new(2 * n);
    emit_prep(&mut b, n, band);
    let copy = copy_fourier(n, k)?;
    let mut map: Vec<usize> = b.alloc((k - 1) * n);
    map.extend(psi_register(n));
    b.append(&copy, &map)?;
    let bits = b.alloc_classical(k * n);
    for (c, reg) in map.chunks(n).enumerate() {
        let basis = if c < k / 2 { Basis::X } else { Basis::Y };
        for (t, &w) in reg.iter().enumerate() {
            b.measure(w, basis, bits[c * n + t]);
        }
    }
    b.append_inverse(&copy, &map)?;
    let order: Vec<usize> = psi_register(n);
    Ok(b.finish()
        .with_name("logdepth_qft")
        .with_param("n", n)
        .with_param("k", k)
        .with_param("band", band)
        .with_output_order(order))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelMode {
    /// Sparse simulation of preparation, copies, measurement and uncopying.
    Coherent,
    /// Outcome sampling straight from the phase-estimation statistics.
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelStats {
    pub n: usize,
    pub k: usize,
    pub x: u64,
    pub mode: ChannelMode,
    pub trials: usize,
    /// Trials whose output overlaps `|0>|psi_x>|0...>` with fidelity 1.
    pub successes: usize,
    /// Trials that left the input register in `|0>`.
    pub cleared: usize,
    pub mean_fidelity: f64,
    pub failure_rate: f64,
    pub failure_bound: f64,
}

/// Largest `n * k` simulated coherently by [`run_channel`].
pub const COHERENT_LIMIT: usize = 16;

/// Runs `trials` independent passes of the transform on basis input `x`.
pub fn run_channel(plan: &QftPlan, x: u64, trials: usize, seed: u64) -> QftResult<ChannelStats> {
    plan.validate()?;
    let (n, k) = (plan.n, plan.copies.unwrap_or(0));
    let mode = if n * k <= COHERENT_LIMIT { ChannelMode::Coherent } else { ChannelMode::Sampled };
    run_channel_with(plan, x, trials, seed, mode)
}

pub fn run_channel_with(plan: &QftPlan, x: u64, trials: usize, seed: u64, mode: ChannelMode) -> QftResult<ChannelStats> {
    plan.validate()?;
    if plan.kind != QftKind::Logdepth {
        return Err(QftError::Range("channel runner needs a logdepth plan".into()));
    }
    let (n, k) = (plan.n, plan.copies.unwrap_or(0));
    if n < 64 && x >> n != 0 {
        return Err(QftError::Range(format!("x = {x} does not fit in {n} bits")));
    }
    let outcomes: Vec<(f64, bool)> = match mode {
        ChannelMode::Sampled => (0..trials)
            .into_par_iter()
            .map(|t| {
                let (ls, _) = phasest::sample_and_mode(x, n as u32, k, derive_seed(seed, t as u64))?;
                let ok = phasest::reconstruct_x(&ls) == x;
                Ok((if ok { 1.0 } else { 0.0 }, ok))
            })
            .collect::<QftResult<_>>()?,
        ChannelMode::Coherent => coherent_trials(plan, x, trials, seed)?,
    };
    let successes = outcomes.iter().filter(|(f, _)| *f > 1.0 - 1e-9).count();
    let cleared = outcomes.iter().filter(|(_, c)| *c).count();
    let mean_fidelity = outcomes.iter().map(|(f, _)| f).sum::<f64>() / trials.max(1) as f64;
    Ok(ChannelStats {
        n,
        k,
        x,
        mode,
        trials,
        successes,
        cleared,
        mean_fidelity,
        failure_rate: 1.0 - successes as f64 / trials.max(1) as f64,
        failure_bound: phasest::failure_bound(n as u32, k),
    })
}

fn coherent_trials(plan: &QftPlan, x: u64, trials: usize, seed: u64) -> QftResult<Vec<(f64, bool)>> {
    let (n, k) = (plan.n, plan.copies.unwrap_or(0));
    if n * k > COHERENT_LIMIT {
        return Err(SimError::Capacity { qubits: n * k, cap: COHERENT_LIMIT }.into());
    }
    let band = plan.band.unwrap_or(n).min(n);
    let prep = prep_approx(n, band)?;
    let copy = copy_fourier(n, k)?;
    let mut state = SparseState::from_value(2 * n, x as u128, n);
    state.apply_on(&prep, &(0..2 * n).collect::<Vec<_>>())?;
    let base = state.width();
    state.grow(base + (k - 1) * n);
    let mut regs: Vec<usize> = (base..base + (k - 1) * n).collect();
    regs.extend(psi_register(n));
    state.apply_on(&copy, &regs)?;
    let ideal = FourierState { n, x }.amplitudes();

    // the erase step is a classical function of the estimate, so each
    // distinct estimate is simulated once
    let mut finished: HashMap<u64, (f64, bool)> = HashMap::new();
    let mut out = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut rng = rng_from_seed(derive_seed(seed, t as u64));
        let mut shot = state.clone();
        let mut record = std::collections::BTreeMap::new();
        let mut tally = vec![[0u32; 4]; n];
        for (c, reg) in regs.chunks(n).enumerate() {
            let basis = if c < k / 2 { Basis::X } else { Basis::Y };
            for (bit, &w) in reg.iter().enumerate() {
                shot.apply_gate(&crate::circuit::Gate::Measure { qubit: w, basis, out: 0 }, &mut rng, &mut record);
                let outcome = record[&0] as usize;
                let l = if basis == Basis::X { 2 * outcome } else { 1 + 2 * outcome };
                // integer bit `bit` carries position n - bit
                tally[n - 1 - bit][l] += 1;
            }
        }
        let estimate = phasest::reconstruct_x(&phasest::OutcomeTally { counts: tally }.modes());
        if let std::collections::hash_map::Entry::Vacant(slot) = finished.entry(estimate) {
            let mut erased = state.clone();
            erased.map_keys(|key| {
                for i in 0..n {
                    if estimate >> i & 1 == 1 {
                        key[i / 64] ^= 1 << (i % 64);
                    }
                }
            });
            erased.apply_on(&crate::circuit::inverse(&copy)?, &regs)?;
            let (amps, _) = erased.project(&psi_register(n));
            let fidelity = crate::sim::inner(&ideal, &amps).norm_sqr();
            let x_wires: Vec<usize> = (0..n).collect();
            let cleared = erased.marginal(&x_wires).get(&0).copied().unwrap_or(0.0) > 1.0 - 1e-9;
            slot.insert((fidelity, cleared));
        }
        out.push(finished[&estimate]);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverlapWitness {
    pub n: usize,
    pub r: usize,
    /// `|<psi'_z | psi_{z + 2^r}>|` from the closed-form cosine product.
    pub inner_product: f64,
    pub trace_distance: f64,
    /// The same overlap from explicit state vectors, when `n <= 20`.
    pub vector_inner_product: Option<f64>,
}

/// `prod_{t=2}^{upper} cos(pi / 2^t)`.
pub fn cos_product(upper: usize) -> f64 {
    (2..=upper).map(|t| (std::f64::consts::PI / 2f64.powi(t as i32)).cos()).product()
}

/// `(prod_{t>i} cos(pi / 2^t), 1 - pi^2 / (6 * 4^i))`; the tail and its lower bound.
pub fn cos_tail(i: usize) -> (f64, f64) {
    let tail = (i + 1..i + 80).map(|t| (std::f64::consts::PI / 2f64.powi(t as i32)).cos()).product();
    let bound = 1.0 - std::f64::consts::PI.powi(2) / (6.0 * 4f64.powi(i as i32));
    (tail, bound)
}

/// Overlap between `psi_{z + 2^r}` with `z = 2^n - 1` and the state `psi'_z`
/// that agrees with `psi_z` except at position `r + 1`, which holds
/// `mu_{(2^r - 1) / 2^{r+1}}`.
pub fn overlap_witness(n: usize, r: usize) -> QftResult<OverlapWitness> {
    check_n(n, MAX_QFT_QUBITS)?;
    if r == 0 || r >= n {
        return Err(QftError::Range(format!("r = {r} outside 1..{n}")));
    }
    let ip = cos_product(n - r);
    let vector_inner_product = (n <= 20).then(|| {
        let z = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let shifted = z.wrapping_add(1 << r) & z;
        let target = FourierState { n, x: shifted }.amplitudes();
        // position p (1-based) is bit n - p of the index
        let mut qubits = vec![MuState { theta: 0.0 }; n];
        for p in 1..=n {
            let theta = if p == r + 1 {
                ((1u64 << r) - 1) as f64 / (1u64 << (r + 1)) as f64
            } else {
                phasest::phase_of(z, p as u32)
            };
            qubits[n - p] = MuState { theta };
        }
        crate::sim::inner(&product_state(&qubits), &target).norm()
    });
    Ok(OverlapWitness { n, r, inner_product: ip, trace_distance: (1.0 - ip * ip).max(0.0).sqrt(), vector_inner_product })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;

    #[test]
    fn standard_three_angles() {
        let c = standard_qft(3).unwrap();
        let mut angles: Vec<String> = c
            .gates()
            .filter_map(|g| match g {
                Gate::CP(_, _, t) => Some(t.to_string()),
                _ => None,
            })
            .collect();
        angles.sort();
        assert_eq!(angles, ["1/2^2", "1/2^2", "1/2^3"]);
        assert_eq!(c.gates().filter(|g| matches!(g, Gate::H(_))).count(), 3);
    }

    #[test]
    fn standard_depth_and_counts() {
        for n in 1..=20 {
            let c = standard_qft(n).unwrap();
            assert_eq!(c.size(), n + n * (n - 1) / 2);
            assert!(c.depth() <= 2 * n - 1, "n = {n}: depth {}", c.depth());
        }
        assert!(standard_qft(0).is_err());
    }

    #[test]
    fn banded_full_band_is_standard() {
        assert_eq!(banded_qft(8, 8).unwrap().layers(), standard_qft(8).unwrap().layers());
        assert_eq!(banded_error_bound(8, 8), 0.0);
        assert!(banded_qft(8, 3).unwrap().size() <= 8 * 3 + 8);
    }

    #[test]
    fn copy_single_register_is_empty() {
        assert_eq!(copy_fourier(3, 1).unwrap().size(), 0);
    }

    #[test]
    fn witness_closed_forms() {
        let w = overlap_witness(10, 8).unwrap();
        assert!((w.inner_product - (std::f64::consts::PI / 4.0).cos()).abs() < 1e-12);
        assert!((w.vector_inner_product.unwrap() - w.inner_product).abs() < 1e-10);
        assert!(overlap_witness(5, 5).is_err());
    }
}
