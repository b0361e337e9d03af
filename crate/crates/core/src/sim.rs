//! Statevector simulation and metrology.
//!
//! Basis index bit `i` is quantum wire `i`, so data wires occupy the low bits
//! and ancillas the high bits. Two backends share gate semantics: a dense
//! amplitude array (up to [`MAX_DENSE_QUBITS`]) and a sparse map from basis
//! strings to amplitudes, which stays small for arithmetic circuits whose
//! ancillas are functions of the data.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::circuit::{Basis, Circuit, CircuitError, DyadicAngle, Gate};

pub type C64 = Complex64;
pub type Matrix = DMatrix<C64>;

pub const MAX_DENSE_QUBITS: usize = 26;
pub const MAX_UNITARY_QUBITS: usize = 12;
pub const MAX_DFT: usize = 4096;
const NORM_TOL: f64 = 1e-9;
const PRUNE: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("{qubits} qubits exceed the capacity of {cap}")]
    Capacity { qubits: usize, cap: usize },
    #[error("circuit contains measurements")]
    MeasurementPresent,
    #[error("norm drifted to {norm} during simulation")]
    NormDrift { norm: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("extracted operator is not unitary (deviation {0:e})")]
    NotUnitary(f64),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

pub type SimResult<T> = Result<T, SimError>;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent per-trial seed; a splitmix64 step over `seed + index`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn phase(theta: DyadicAngle) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * theta.turns())
}

fn quarter() -> DyadicAngle {
    DyadicAngle::pow2_inv(2)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    q: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn basis(q: usize, index: usize) -> SimResult<StateVector> {
        if q > MAX_DENSE_QUBITS {
            return Err(SimError::Capacity { qubits: q, cap: MAX_DENSE_QUBITS });
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << q];
        amps[index] = C64::new(1.0, 0.0);
        Ok(StateVector { q, amps })
    }

    /// Normalizes `amps`; its length must be a power of two.
    pub fn from_amplitudes(amps: Vec<C64>) -> SimResult<StateVector> {
        if !amps.len().is_power_of_two() {
            return Err(SimError::Dimension(format!("{} amplitudes", amps.len())));
        }
        let q = amps.len().trailing_zeros() as usize;
        if q > MAX_DENSE_QUBITS {
            return Err(SimError::Capacity { qubits: q, cap: MAX_DENSE_QUBITS });
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(SimError::Dimension("zero vector".into()));
        }
        Ok(StateVector { q, amps: amps.into_iter().map(|a| a / norm).collect() })
    }

    pub fn qubits(&self) -> usize {
        self.q
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        inner(&self.amps, &other.amps)
    }

    fn apply(&mut self, g: &Gate, rng: &mut ChaCha8Rng, record: &mut BTreeMap<usize, u8>) {
        let amps = &mut self.amps;
        match *g {
            Gate::H(t) => {
                let m = 1 << t;
                for i in 0..amps.len() {
                    if i & m == 0 {
                        let (a, b) = (amps[i], amps[i | m]);
                        amps[i] = (a + b) * FRAC_1_SQRT_2;
                        amps[i | m] = (a - b) * FRAC_1_SQRT_2;
                    }
                }
            }
            Gate::X(t) => {
                let m = 1 << t;
                for i in 0..amps.len() {
                    if i & m == 0 {
                        amps.swap(i, i | m);
                    }
                }
            }
            Gate::P(t, th) => {
                let (m, ph) = (1 << t, phase(th));
                amps.iter_mut().enumerate().filter(|(i, _)| i & m != 0).for_each(|(_, a)| *a *= ph);
            }
            Gate::CP(a, b, th) => {
                let (m, ph) = ((1 << a) | (1 << b), phase(th));
                amps.iter_mut().enumerate().filter(|(i, _)| i & m == m).for_each(|(_, a)| *a *= ph);
            }
            Gate::Cnot(c, t) => {
                let (mc, mt) = (1 << c, 1 << t);
                for i in 0..amps.len() {
                    if i & mc != 0 && i & mt == 0 {
                        amps.swap(i, i | mt);
                    }
                }
            }
            Gate::Toffoli(a, b, t) => {
                let (mc, mt) = ((1 << a) | (1 << b), 1 << t);
                for i in 0..amps.len() {
                    if i & mc == mc && i & mt == 0 {
                        amps.swap(i, i | mt);
                    }
                }
            }
            Gate::Measure { qubit, basis, out } => {
                rotate_into_z(basis, qubit, |g| self.apply(&g, rng, record));
                let m = 1 << qubit;
                let p1: f64 = self.amps.iter().enumerate().filter(|(i, _)| i & m != 0).map(|(_, a)| a.norm_sqr()).sum();
                let bit = rng.gen::<f64>() < p1;
                let keep = if bit { p1 } else { 1.0 - p1 };
                let scale = 1.0 / keep.sqrt();
                for (i, a) in self.amps.iter_mut().enumerate() {
                    *a = if ((i & m) != 0) == bit { *a * scale } else { C64::new(0.0, 0.0) };
                }
                record.insert(out, bit as u8);
                rotate_out_of_z(basis, qubit, |g| self.apply(&g, rng, record));
            }
        }
    }
}

/// Gates taking the measured basis onto Z (eigenvalue +1 state onto |0>).
fn rotate_into_z(basis: Basis, q: usize, mut f: impl FnMut(Gate)) {
    match basis {
        Basis::Z => {}
        Basis::X => f(Gate::H(q)),
        Basis::Y => {
            f(Gate::P(q, quarter().neg()));
            f(Gate::H(q));
        }
    }
}

fn rotate_out_of_z(basis: Basis, q: usize, mut f: impl FnMut(Gate)) {
    match basis {
        Basis::Z => {}
        Basis::X => f(Gate::H(q)),
        Basis::Y => {
            f(Gate::H(q));
            f(Gate::P(q, quarter()));
        }
    }
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimRun {
    pub final_state: StateVector,
    pub classical_record: BTreeMap<usize, u8>,
    pub seed: u64,
}

fn check_width(c: &Circuit, q: usize) -> SimResult<()> {
    if q != c.width() {
        return Err(SimError::Dimension(format!("state has {q} qubits, circuit {}", c.width())));
    }
    Ok(())
}

pub fn apply_circuit(c: &Circuit, input: StateVector, seed: u64) -> SimResult<SimRun> {
    check_width(c, input.q)?;
    let mut rng = rng_from_seed(seed);
    let mut record = BTreeMap::new();
    let mut state = input;
    for g in c.gates() {
        state.apply(g, &mut rng, &mut record);
    }
    let norm = state.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(SimError::NormDrift { norm });
    }
    Ok(SimRun { final_state: state, classical_record: record, seed })
}

/// Sparse state over an arbitrary number of wires; basis strings are packed
/// little-endian into `u64` words.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseState {
    width: usize,
    entries: Vec<(Vec<u64>, C64)>,
}

fn bit(key: &[u64], w: usize) -> bool {
    key[w / 64] >> (w % 64) & 1 == 1
}

fn flip(key: &mut [u64], w: usize) {
    key[w / 64] ^= 1 << (w % 64);
}

impl SparseState {
    /// Basis state with the listed wires set to one.
    pub fn basis(width: usize, ones: &[usize]) -> SparseState {
        let mut key = vec![0u64; width.div_ceil(64).max(1)];
        for &w in ones {
            flip(&mut key, w);
        }
        SparseState { width, entries: vec![(key, C64::new(1.0, 0.0))] }
    }

    /// Basis state whose low `bits` wires hold `value`.
    pub fn from_value(width: usize, value: u128, bits: usize) -> SparseState {
        let ones: Vec<usize> = (0..bits).filter(|&i| value >> i & 1 == 1).collect();
        SparseState::basis(width, &ones)
    }

    /// Embeds `amps` (indexed LSB-first over `wires`); every other wire is |0>.
    pub fn embed(width: usize, wires: &[usize], amps: &[C64]) -> SparseState {
        let words = width.div_ceil(64).max(1);
        let mut entries = Vec::new();
        for (idx, &a) in amps.iter().enumerate() {
            if a.norm_sqr() > 0.0 {
                let mut key = vec![0u64; words];
                for (b, &w) in wires.iter().enumerate() {
                    if idx >> b & 1 == 1 {
                        flip(&mut key, w);
                    }
                }
                entries.push((key, a));
            }
        }
        SparseState { width, entries }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn entries(&self) -> &[(Vec<u64>, C64)] {
        &self.entries
    }

    pub fn bit(key: &[u64], w: usize) -> bool {
        bit(key, w)
    }

    /// Reads `wires` (LSB first) out of a basis string.
    pub fn read(key: &[u64], wires: &[usize]) -> u128 {
        wires.iter().enumerate().fold(0u128, |acc, (b, &w)| acc | ((bit(key, w) as u128) << b))
    }

    /// Amplitudes over `wires` conditioned on all other wires being 0,
    /// together with the squared norm found elsewhere.
    pub fn project(&self, wires: &[usize]) -> (Vec<C64>, f64) {
        let mut out = vec![C64::new(0.0, 0.0); 1 << wires.len()];
        let mut mask = vec![0u64; self.width.div_ceil(64).max(1)];
        for &w in wires {
            flip(&mut mask, w);
        }
        let mut leak = 0.0;
        for (key, a) in &self.entries {
            if key.iter().zip(&mask).all(|(k, m)| k & !m == 0) {
                out[Self::read(key, wires) as usize] += a;
            } else {
                leak += a.norm_sqr();
            }
        }
        (out, leak)
    }

    /// Distribution of the value held on `wires`.
    pub fn marginal(&self, wires: &[usize]) -> BTreeMap<u128, f64> {
        let mut m = BTreeMap::new();
        for (key, a) in &self.entries {
            *m.entry(Self::read(key, wires)).or_insert(0.0) += a.norm_sqr();
        }
        m
    }

    /// Applies a classical bijection on basis strings.
    pub fn map_keys(&mut self, mut f: impl FnMut(&mut Vec<u64>)) {
        for (key, _) in &mut self.entries {
            f(key);
        }
        self.merge();
    }

    fn merge(&mut self) {
        self.entries.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(Vec<u64>, C64)> = Vec::with_capacity(self.entries.len());
        for (k, a) in self.entries.drain(..) {
            match out.last_mut() {
                Some((lk, la)) if *lk == k => *la += a,
                _ => out.push((k, a)),
            }
        }
        out.retain(|(_, a)| a.norm_sqr() > PRUNE * PRUNE);
        self.entries = out;
    }

    pub fn apply_gate(&mut self, g: &Gate, rng: &mut ChaCha8Rng, record: &mut BTreeMap<usize, u8>) {
        match *g {
            Gate::H(t) => {
                let mut next = Vec::with_capacity(self.entries.len() * 2);
                for (key, a) in self.entries.drain(..) {
                    let a = a * FRAC_1_SQRT_2;
                    let one = bit(&key, t);
                    let mut other = key.clone();
                    flip(&mut other, t);
                    if one {
                        next.push((other, a));
                        next.push((key, -a));
                    } else {
                        next.push((key, a));
                        next.push((other, a));
                    }
                }
                self.entries = next;
                self.merge();
            }
            Gate::X(t) => self.entries.iter_mut().for_each(|(k, _)| flip(k, t)),
            Gate::Cnot(c, t) => self.entries.iter_mut().filter(|(k, _)| bit(k, c)).for_each(|(k, _)| flip(k, t)),
            Gate::Toffoli(a, b, t) => self
                .entries
                .iter_mut()
                .filter(|(k, _)| bit(k, a) && bit(k, b))
                .for_each(|(k, _)| flip(k, t)),
            Gate::P(t, th) => {
                let ph = phase(th);
                self.entries.iter_mut().filter(|(k, _)| bit(k, t)).for_each(|(_, a)| *a *= ph);
            }
            Gate::CP(x, y, th) => {
                let ph = phase(th);
                self.entries.iter_mut().filter(|(k, _)| bit(k, x) && bit(k, y)).for_each(|(_, a)| *a *= ph);
            }
            Gate::Measure { qubit, basis, out } => {
                rotate_into_z(basis, qubit, |g| self.apply_gate(&g, rng, record));
                let total: f64 = self.entries.iter().map(|(_, a)| a.norm_sqr()).sum();
                let p1: f64 = self.entries.iter().filter(|(k, _)| bit(k, qubit)).map(|(_, a)| a.norm_sqr()).sum();
                let outcome = rng.gen::<f64>() * total < p1;
                self.entries.retain(|(k, _)| bit(k, qubit) == outcome);
                let scale = 1.0 / self.norm();
                self.entries.iter_mut().for_each(|(_, a)| *a *= scale);
                record.insert(out, outcome as u8);
                rotate_out_of_z(basis, qubit, |g| self.apply_gate(&g, rng, record));
            }
        }
    }

    pub fn apply_circuit(&mut self, c: &Circuit, rng: &mut ChaCha8Rng) -> SimResult<BTreeMap<usize, u8>> {
        check_width(c, self.width)?;
        let mut record = BTreeMap::new();
        for g in c.gates() {
            self.apply_gate(g, rng, &mut record);
        }
        let norm = self.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(SimError::NormDrift { norm });
        }
        Ok(record)
    }

    /// Appends `c` acting on `wires[i]` for its data wire `i` and fresh
    /// ancillas beyond the current width. Measurement-free circuits only.
    pub fn apply_on(&mut self, c: &Circuit, wires: &[usize]) -> SimResult<()> {
        if c.has_measurement() {
            return Err(SimError::MeasurementPresent);
        }
        if wires.len() != c.n_data() {
            return Err(SimError::Dimension(format!("{} wires for {} data wires", wires.len(), c.n_data())));
        }
        let mut map = wires.to_vec();
        map.extend(self.width..self.width + c.n_ancilla());
        self.grow(self.width + c.n_ancilla());
        let mut rng = rng_from_seed(0);
        let mut record = BTreeMap::new();
        for g in c.gates() {
            let mapped = remap(g, &map);
            self.apply_gate(&mapped, &mut rng, &mut record);
        }
        Ok(())
    }

    /// Extends the register with wires in |0>.
    pub fn grow(&mut self, width: usize) {
        let words = width.div_ceil(64).max(1);
        for (k, _) in &mut self.entries {
            k.resize(words, 0);
        }
        self.width = self.width.max(width);
    }
}

fn remap(g: &Gate, map: &[usize]) -> Gate {
    match *g {
        Gate::H(t) => Gate::H(map[t]),
        Gate::X(t) => Gate::X(map[t]),
        Gate::P(t, th) => Gate::P(map[t], th),
        Gate::CP(a, b, th) => Gate::cp(map[a], map[b], th),
        Gate::Cnot(a, b) => Gate::Cnot(map[a], map[b]),
        Gate::Toffoli(a, b, t) => Gate::Toffoli(map[a], map[b], map[t]),
        Gate::Measure { .. } => unreachable!("measurement-free"),
    }
}

/// Output of `c` on data basis input `index` with ancillas |0>, returned as
/// data-wire amplitudes plus the squared norm left on nonzero ancillas.
pub fn run_basis_column(c: &Circuit, index: usize) -> SimResult<(Vec<C64>, f64)> {
    if c.has_measurement() {
        return Err(SimError::MeasurementPresent);
    }
    let data: Vec<usize> = (0..c.n_data()).collect();
    if c.width() <= 16 {
        let input = StateVector::basis(c.width(), index)?;
        let run = apply_circuit(c, input, 0)?;
        let dim = 1 << c.n_data();
        let amps = run.final_state.amps;
        let leak = amps[dim..].iter().map(|a| a.norm_sqr()).sum();
        Ok((amps[..dim].to_vec(), leak))
    } else {
        let mut s = SparseState::from_value(c.width(), index as u128, c.n_data());
        s.apply_circuit(c, &mut rng_from_seed(0))?;
        Ok(s.project(&data))
    }
}

/// Operator on the data wires with ancillas prepared and returned in |0>.
pub fn extract_unitary(c: &Circuit) -> SimResult<Matrix> {
    if c.has_measurement() {
        return Err(SimError::MeasurementPresent);
    }
    if c.n_data() > MAX_UNITARY_QUBITS {
        return Err(SimError::Capacity { qubits: c.n_data(), cap: MAX_UNITARY_QUBITS });
    }
    let dim = 1usize << c.n_data();
    let columns: Vec<Vec<C64>> =
        (0..dim).into_par_iter().map(|x| run_basis_column(c, x).map(|r| r.0)).collect::<SimResult<_>>()?;
    let u = Matrix::from_fn(dim, dim, |r, col| columns[col][r]);
    let dev = (u.adjoint() * &u - Matrix::identity(dim, dim)).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if dev > NORM_TOL {
        return Err(SimError::NotUnitary(dev));
    }
    Ok(u)
}

/// Entry `(x, y)` is `e^{2 pi i x y / m} / sqrt(m)`.
pub fn dft_reference(m: usize) -> SimResult<Matrix> {
    if m == 0 || m > MAX_DFT {
        return Err(SimError::Capacity { qubits: m, cap: MAX_DFT });
    }
    let s = 1.0 / (m as f64).sqrt();
    Ok(Matrix::from_fn(m, m, |x, y| C64::from_polar(s, 2.0 * PI * ((x * y) % m) as f64 / m as f64)))
}

/// Row `y` of `target` moved to the basis index whose bit `order[b]` is bit `b` of `y`.
pub fn reorder_rows(target: &Matrix, order: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(target.nrows(), target.ncols());
    for y in 0..target.nrows() {
        let phys = order.iter().enumerate().fold(0, |acc, (b, &w)| acc | ((y >> b & 1) << w));
        out.set_row(phys, &target.row(y));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceMode {
    Exact,
    /// Max over basis inputs of the output error; a lower bound on the operator norm.
    BasisProbe,
}

pub fn spectral_norm(m: &Matrix) -> f64 {
    m.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

pub fn operator_distance(c: &Circuit, target: &Matrix, mode: DistanceMode) -> SimResult<f64> {
    let dim = 1usize << c.n_data();
    if target.nrows() != dim || target.ncols() != dim {
        return Err(SimError::Dimension(format!(
            "target is {}x{}, circuit acts on {dim} basis states",
            target.nrows(),
            target.ncols()
        )));
    }
    match mode {
        DistanceMode::Exact => Ok(spectral_norm(&(extract_unitary(c)? - target))),
        DistanceMode::BasisProbe => {
            let errs: Vec<f64> = (0..dim)
                .into_par_iter()
                .map(|x| {
                    let (col, leak) = run_basis_column(c, x)?;
                    let d: f64 = col.iter().zip(target.column(x).iter()).map(|(a, b)| (a - b).norm_sqr()).sum();
                    Ok((d + leak).sqrt())
                })
                .collect::<SimResult<_>>()?;
            Ok(errs.into_iter().fold(0.0, f64::max))
        }
    }
}

/// `sqrt(1 - |<a|b>|^2)`, clamped into `[0, 1]`.
pub fn trace_distance_pure(a: &StateVector, b: &StateVector) -> SimResult<f64> {
    if a.q != b.q {
        return Err(SimError::Dimension(format!("{} vs {} qubits", a.q, b.q)));
    }
    Ok(trace_distance_amps(&a.amps, &b.amps))
}

pub fn trace_distance_amps(a: &[C64], b: &[C64]) -> f64 {
    (1.0 - inner(a, b).norm_sqr()).clamp(0.0, 1.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::CircuitBuilder;

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn hadamard_on_zero() {
        let mut b = CircuitBuilder::new(1);
        b.h(0);
        let run = apply_circuit(&b.finish(), StateVector::basis(1, 0).unwrap(), 1).unwrap();
        for a in run.final_state.amplitudes() {
            assert!(close(*a, C64::new(FRAC_1_SQRT_2, 0.0)));
        }
    }

    #[test]
    fn cp_half_on_11() {
        let mut b = CircuitBuilder::new(2);
        b.cp(0, 1, DyadicAngle::pow2_inv(1));
        let run = apply_circuit(&b.finish(), StateVector::basis(2, 3).unwrap(), 1).unwrap();
        assert!(close(run.final_state.amplitudes()[3], C64::new(-1.0, 0.0)));
    }

    #[test]
    fn dft_entries() {
        assert!(close(dft_reference(1).unwrap()[(0, 0)], C64::new(1.0, 0.0)));
        let f2 = dft_reference(2).unwrap();
        assert!(close(f2[(1, 1)], C64::new(-FRAC_1_SQRT_2, 0.0)));
        assert!(close(dft_reference(4).unwrap()[(1, 3)], C64::new(0.0, -0.5)));
    }

    #[test]
    fn hadamard_unitary_is_f2() {
        let mut b = CircuitBuilder::new(1);
        b.h(0);
        let u = extract_unitary(&b.finish()).unwrap();
        assert!((u - dft_reference(2).unwrap()).norm() < 1e-12);
        let id = extract_unitary(&Circuit::empty(2)).unwrap();
        assert!((id - Matrix::identity(4, 4)).norm() < 1e-12);
    }

    #[test]
    fn trace_distance_extremes() {
        let z = StateVector::basis(1, 0).unwrap();
        let o = StateVector::basis(1, 1).unwrap();
        assert!(trace_distance_pure(&z, &z).unwrap() < 1e-12);
        assert!((trace_distance_pure(&z, &o).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn extra_phase_distance_is_exact_value() {
        let mut b = CircuitBuilder::new(1);
        b.p(0, DyadicAngle::pow2_inv(1));
        let d = operator_distance(&b.finish(), &Matrix::identity(2, 2), DistanceMode::Exact).unwrap();
        assert!((d - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sparse_and_dense_agree_with_measurement() {
        let mut b = CircuitBuilder::new(3);
        b.alloc_classical(1);
        b.h(0);
        b.cnot(0, 1);
        b.ccx(0, 1, 2);
        b.cp(1, 2, DyadicAngle::pow2_inv(3));
        b.h(2);
        b.measure(1, Basis::Y, 0);
        let c = b.finish();
        for seed in 0..20 {
            let dense = apply_circuit(&c, StateVector::basis(3, 0).unwrap(), seed).unwrap();
            let mut s = SparseState::basis(3, &[]);
            let rec = s.apply_circuit(&c, &mut rng_from_seed(seed)).unwrap();
            assert_eq!(rec, dense.classical_record);
            let (proj, leak) = s.project(&[0, 1, 2]);
            assert!(leak < 1e-12);
            for (a, b) in proj.iter().zip(dense.final_state.amplitudes()) {
                assert!(close(*a, *b));
            }
        }
    }

    #[test]
    fn capacity_errors() {
        assert!(matches!(StateVector::basis(27, 0), Err(SimError::Capacity { .. })));
        assert!(extract_unitary(&Circuit::empty(13)).is_err());
    }
}
