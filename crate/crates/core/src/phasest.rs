//! Phase estimation from copies of a Fourier state.
//!
//! Position `j` (1-based) of `psi_x` is the qubit `mu_{x / 2^j}`. Measuring it
//! in the X basis yields outcome `l = 0` or `2`, in the Y basis `l = 1` or `3`;
//! the most frequent `l_j` satisfies `|l_j / 4 - x / 2^j|_1 < 1/4` with high
//! probability and the `l_j` determine `x` through a product of 2x2 matrices.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::revarith::ladner_fischer;
use crate::sim::rng_from_seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhaseError {
    #[error("value error: {0}")]
    Value(String),
}

pub type PhaseResult<T> = Result<T, PhaseError>;

/// Distance from `y` to the nearest integer.
pub fn dist1(y: f64) -> f64 {
    let f = y.rem_euclid(1.0);
    f.min(1.0 - f)
}

/// Fractional part of `x / 2^j`, exact for `j <= 64`.
pub fn phase_of(x: u64, j: u32) -> f64 {
    if j >= 64 {
        return x as f64 / 2f64.powi(j as i32);
    }
    (x & ((1u64 << j) - 1)) as f64 / (1u64 << j) as f64
}

/// `p_l = cos^2(pi (theta - l/4))` for `l = 0..4`.
pub fn phase_probs(theta: f64) -> [f64; 4] {
    std::array::from_fn(|l| (std::f64::consts::PI * (theta - l as f64 / 4.0)).cos().powi(2))
}

/// Outcome probabilities for position `j` of `psi_x`, `1 <= j <= n`.
pub fn measurement_probs(x: u64, j: u32, n: u32) -> PhaseResult<[f64; 4]> {
    if j == 0 || j > n {
        return Err(PhaseError::Value(format!("position {j} outside 1..={n}")));
    }
    if n < 64 && x >> n != 0 {
        return Err(PhaseError::Value(format!("x = {x} does not fit in {n} bits")));
    }
    Ok(phase_probs(phase_of(x, j)))
}

/// Per-position outcome counts; entries 0 and 2 come from X-basis shots,
/// 1 and 3 from Y-basis shots.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct OutcomeTally {
    pub counts: Vec<[u32; 4]>,
}

impl OutcomeTally {
    /// Most frequent outcome at each position; ties go to the smaller `l`.
    pub fn modes(&self) -> Vec<u8> {
        self.counts.iter().map(mode).collect()
    }
}

pub fn mode(counts: &[u32; 4]) -> u8 {
    let mut best = 0;
    for l in 1..4 {
        if counts[l] > counts[best] {
            best = l;
        }
    }
    best as u8
}

fn check_copies(k: usize) -> PhaseResult<()> {
    if k < 2 || k % 2 == 1 {
        return Err(PhaseError::Value(format!("copy count {k} must be even and at least 2")));
    }
    Ok(())
}

/// Draws `k/2` X-basis and `k/2` Y-basis shots per position.
pub fn sample_tally(x: u64, n: u32, k: usize, rng: &mut ChaCha8Rng) -> PhaseResult<OutcomeTally> {
    check_copies(k)?;
    let mut counts = Vec::with_capacity(n as usize);
    for j in 1..=n {
        let p = measurement_probs(x, j, n)?;
        let mut c = [0u32; 4];
        for _ in 0..k / 2 {
            c[if rng.gen::<f64>() < p[0] { 0 } else { 2 }] += 1;
            c[if rng.gen::<f64>() < p[1] { 1 } else { 3 }] += 1;
        }
        counts.push(c);
    }
    Ok(OutcomeTally { counts })
}

/// `(l_1, ..., l_n)` and the tally behind it; deterministic in `seed`.
pub fn sample_and_mode(x: u64, n: u32, k: usize, seed: u64) -> PhaseResult<(Vec<u8>, OutcomeTally)> {
    let tally = sample_tally(x, n, k, &mut rng_from_seed(seed))?;
    Ok((tally.modes(), tally))
}

/// Whether `|l_j / 4 - x / 2^j|_1 < 1/4` for every position.
pub fn promise_holds(ls: &[u8], x: u64) -> bool {
    ls.iter().enumerate().all(|(i, &l)| dist1(l as f64 / 4.0 - phase_of(x, i as u32 + 1)) < 0.25)
}

/// One of the four 0/1 matrices `A_0..A_3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TransferMatrix {
    A0,
    A1,
    A2,
    A3,
}

impl TransferMatrix {
    pub const ALL: [TransferMatrix; 4] = [Self::A0, Self::A1, Self::A2, Self::A3];

    pub fn from_outcome(l: u8) -> TransferMatrix {
        Self::ALL[(l & 3) as usize]
    }

    /// Rows of the matrix.
    pub fn entries(self) -> [[u8; 2]; 2] {
        match self {
            Self::A0 => [[1, 0], [0, 1]],
            Self::A1 => [[1, 1], [0, 0]],
            Self::A2 => [[0, 1], [1, 0]],
            Self::A3 => [[0, 0], [1, 1]],
        }
    }

    fn from_entries(m: [[u8; 2]; 2]) -> Option<TransferMatrix> {
        Self::ALL.into_iter().find(|a| a.entries() == m)
    }

    /// Integer matrix product `self * rhs`; the set is closed under it.
    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, rhs: TransferMatrix) -> TransferMatrix {
        let (a, b) = (self.entries(), rhs.entries());
        let m = std::array::from_fn(|r| std::array::from_fn(|c| a[r][0] * b[0][c] + a[r][1] * b[1][c]));
        Self::from_entries(m).expect("transfer matrices are closed under multiplication")
    }

    /// Entry (row 2, column 1) in one-based indexing: 1 iff the first column is `e_2`.
    pub fn low_left(self) -> u8 {
        self.entries()[1][0]
    }
}

/// `x` from the modes, bit `j-1` being `(A_{l_j} ... A_{l_1})[2, 1]`. The
/// prefix products follow the logarithmic-depth pairing schedule.
pub fn reconstruct_x(ls: &[u8]) -> u64 {
    let mut acc: Vec<TransferMatrix> = ls.iter().map(|&l| TransferMatrix::from_outcome(l)).collect();
    for level in ladner_fischer(acc.len()) {
        for (src, dst) in level {
            acc[dst] = acc[dst].mul(acc[src]);
        }
    }
    pack_bits(&acc)
}

/// Left-to-right reference for [`reconstruct_x`].
pub fn reconstruct_x_sequential(ls: &[u8]) -> u64 {
    let mut prod = TransferMatrix::A0;
    let acc: Vec<TransferMatrix> = ls
        .iter()
        .map(|&l| {
            prod = TransferMatrix::from_outcome(l).mul(prod);
            prod
        })
        .collect();
    pack_bits(&acc)
}

fn pack_bits(prefix: &[TransferMatrix]) -> u64 {
    prefix.iter().take(64).enumerate().fold(0, |x, (i, a)| x | (a.low_left() as u64) << i)
}

/// `4 n e^{-k/8}`, clamped to `[0, 1]`.
pub fn failure_bound(n: u32, k: usize) -> f64 {
    (4.0 * n as f64 * (-(k as f64) / 8.0).exp()).clamp(0.0, 1.0)
}

/// Chance that `t` trials at rate `p_x` match or beat `t` at rate `p_y`,
/// bounded by `2 e^{-(p_y - p_x)^2 t / 2}`.
pub fn bernoulli_bound(p_x: f64, p_y: f64, t: usize) -> PhaseResult<f64> {
    if p_x >= p_y {
        return Err(PhaseError::Value(format!("need p_x < p_y, got {p_x} >= {p_y}")));
    }
    Ok(2.0 * (-(p_y - p_x).powi(2) * t as f64 / 2.0).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probs_at_integer_and_eighth() {
        let p = measurement_probs(4, 2, 3).unwrap();
        for (a, b) in p.iter().zip([1.0, 0.5, 0.0, 0.5]) {
            assert!((a - b).abs() < 1e-12);
        }
        let p = phase_probs(0.125);
        let top = 0.5 + 2f64.sqrt() / 4.0;
        assert!((p[0] - top).abs() < 1e-12 && (p[1] - top).abs() < 1e-12);
        assert!((top - 0.853553).abs() < 1e-6);
    }

    #[test]
    fn reconstruct_examples() {
        assert_eq!(reconstruct_x(&[0, 0, 0, 0]), 0);
        assert_eq!(reconstruct_x(&[2, 1, 3]), 5);
        assert!(promise_holds(&[2, 1, 3], 5));
    }

    #[test]
    fn bounds() {
        assert!((failure_bound(8, 48) - 32.0 * (-6f64).exp()).abs() < 1e-12);
        assert!((failure_bound(8, 48) - 0.07930).abs() < 5e-5);
        assert_eq!(failure_bound(3, 0), 1.0);
        let b = bernoulli_bound(0.5, 0.5 + 2f64.sqrt() / 4.0, 24).unwrap();
        assert!((b - 2.0 * (-1.5f64).exp()).abs() < 1e-12);
        assert!((b - 0.44626).abs() < 1e-5);
        assert!(bernoulli_bound(0.6, 0.6, 3).is_err());
    }

    #[test]
    fn zero_phase_always_mode_zero() {
        for seed in 0..20 {
            let (ls, tally) = sample_and_mode(0, 5, 8, seed).unwrap();
            assert!(ls.iter().all(|&l| l == 0));
            assert!(tally.counts.iter().all(|c| c[0] + c[2] == 4 && c[1] + c[3] == 4));
        }
        assert!(sample_and_mode(0, 5, 7, 0).is_err());
    }
}
