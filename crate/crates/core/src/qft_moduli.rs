//! Fourier transforms for moduli other than powers of two, checked as
//! matrices: the Chinese-remainder factorization of `F_m`, and estimation of
//! `x` from `psi_x mod m` through an inverse power-of-two transform.

use std::f64::consts::PI;

use num_integer::Integer;
use rand::distributions::{Distribution, WeightedIndex};
use serde::Serialize;
use thiserror::Error;

use crate::sim::{dft_reference, rng_from_seed, Matrix, SimError, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModuliError {
    #[error("value error: {0}")]
    Value(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

pub type ModuliResult<T> = Result<T, ModuliError>;

/// Largest modulus whose matrices are materialized.
pub const MAX_CRT_MODULUS: u64 = 4096;
pub const MAX_ESTIMATE_MODULUS: u64 = 512;

/// Pairwise coprime factors `m_1..m_k` of `m` with `f_j = m / m_j` and
/// `g_j = f_j^{-1} mod m_j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CrtBasis {
    pub m: u64,
    pub factors: Vec<u64>,
    pub f: Vec<u64>,
    pub g: Vec<u64>,
}

impl CrtBasis {
    pub fn new(factors: Vec<u64>) -> ModuliResult<CrtBasis> {
        if factors.is_empty() || factors.iter().any(|&q| q < 2) {
            return Err(ModuliError::Value("factors must all be at least 2".into()));
        }
        for (i, &a) in factors.iter().enumerate() {
            for &b in &factors[i + 1..] {
                if a.gcd(&b) != 1 {
                    return Err(ModuliError::Value(format!("factors {a} and {b} share a divisor")));
                }
            }
        }
        let m = factors.iter().try_fold(1u64, |acc, &q| acc.checked_mul(q));
        let m = m.ok_or_else(|| ModuliError::Value("modulus overflows".into()))?;
        let f: Vec<u64> = factors.iter().map(|&q| m / q).collect();
        let g = f
            .iter()
            .zip(&factors)
            .map(|(&fj, &q)| {
                let e = ((fj % q) as i128).extended_gcd(&(q as i128));
                e.x.rem_euclid(q as i128) as u64
            })
            .collect();
        Ok(CrtBasis { m, factors, f, g })
    }

    /// Prime-power factorization of `m` by trial division.
    pub fn from_modulus(m: u64) -> ModuliResult<CrtBasis> {
        if m < 2 {
            return Err(ModuliError::Value(format!("modulus {m} must be at least 2")));
        }
        let mut rest = m;
        let mut factors = Vec::new();
        let mut p = 2;
        while p * p <= rest {
            if rest.is_multiple_of(p) {
                let mut q = 1;
                while rest.is_multiple_of(p) {
                    rest /= p;
                    q *= p;
                }
                factors.push(q);
            }
            p += 1;
        }
        if rest > 1 {
            factors.push(rest);
        }
        CrtBasis::new(factors)
    }

    /// Residue tuple of `x`.
    pub fn residues(&self, x: u64) -> Vec<u64> {
        self.factors.iter().map(|&q| x % q).collect()
    }

    /// `sum_j f_j g_j x_j mod m`.
    pub fn reconstruct(&self, residues: &[u64]) -> u64 {
        let m = self.m as u128;
        residues
            .iter()
            .enumerate()
            .fold(0u128, |acc, (j, &r)| (acc + self.f[j] as u128 * self.g[j] as u128 % m * r as u128) % m) as u64
    }

    /// Mixed-radix index of a residue tuple, first coordinate most significant
    /// (the Kronecker-product ordering).
    pub fn tuple_index(&self, residues: &[u64]) -> usize {
        residues.iter().zip(&self.factors).fold(0usize, |acc, (&r, &q)| acc * q as usize + r as usize)
    }

    fn tuple_of_index(&self, mut index: usize) -> Vec<u64> {
        let mut out = vec![0; self.factors.len()];
        for (j, &q) in self.factors.iter().enumerate().rev() {
            out[j] = (index % q as usize) as u64;
            index /= q as usize;
        }
        out
    }
}

fn permutation(dim: usize, image: impl Fn(usize) -> usize) -> Matrix {
    let mut p = Matrix::zeros(dim, dim);
    for col in 0..dim {
        p[(image(col), col)] = C64::new(1.0, 0.0);
    }
    p
}

/// `(C, A)`: `C|x> = |x mod m_1, ..., x mod m_k>` and
/// `A|x_1, ..., x_k> = |g_1 x_1, ..., g_k x_k>`.
pub fn crt_maps(basis: &CrtBasis) -> ModuliResult<(Matrix, Matrix)> {
    if basis.m > MAX_CRT_MODULUS {
        return Err(SimError::Capacity { qubits: basis.m as usize, cap: MAX_CRT_MODULUS as usize }.into());
    }
    let dim = basis.m as usize;
    let c = permutation(dim, |x| basis.tuple_index(&basis.residues(x as u64)));
    let a = permutation(dim, |i| {
        let t: Vec<u64> = basis.tuple_of_index(i).iter().enumerate().map(|(j, &r)| r * basis.g[j] % basis.factors[j]).collect();
        basis.tuple_index(&t)
    });
    Ok((c, a))
}

/// Inverse of `C` built from the reconstruction formula rather than by transposing.
pub fn crt_inverse(basis: &CrtBasis) -> ModuliResult<Matrix> {
    if basis.m > MAX_CRT_MODULUS {
        return Err(SimError::Capacity { qubits: basis.m as usize, cap: MAX_CRT_MODULUS as usize }.into());
    }
    Ok(permutation(basis.m as usize, |i| basis.reconstruct(&basis.tuple_of_index(i)) as usize))
}

/// `C^dagger (F_{m_1} x ... x F_{m_k}) A C`.
pub fn mixed_radix_qft(basis: &CrtBasis) -> ModuliResult<Matrix> {
    if basis.m > 1024 {
        return Err(SimError::Capacity { qubits: basis.m as usize, cap: 1024 }.into());
    }
    let (c, a) = crt_maps(basis)?;
    let mut f = Matrix::identity(1, 1);
    for &q in &basis.factors {
        f = f.kronecker(&dft_reference(q as usize)?);
    }
    Ok(c.adjoint() * f * a * c)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateReport {
    pub m: u64,
    pub k_bits: u32,
    pub x: u64,
    pub copies: usize,
    /// Exact probability that one sample rounds to `x`.
    pub success_probability: f64,
    /// Fraction of the drawn samples that rounded to `x`.
    pub empirical_success: f64,
    pub mode: u64,
    pub recovered: bool,
}

/// Default number of bits beyond `floor(log2 m)`.
pub const DEFAULT_PADDING: u32 = 3;

pub fn default_k_bits(m: u64) -> u32 {
    63 - m.leading_zeros() + DEFAULT_PADDING
}

/// Output distribution over `z in [0, 2^k)` of the inverse `2^k` transform
/// applied to `psi_x mod m`, zero-padded.
pub fn estimate_distribution(m: u64, k_bits: u32, x: u64) -> ModuliResult<Vec<f64>> {
    if !(2..=MAX_ESTIMATE_MODULUS).contains(&m) {
        return Err(ModuliError::Value(format!("modulus {m} outside 2..={MAX_ESTIMATE_MODULUS}")));
    }
    if x >= m {
        return Err(ModuliError::Value(format!("x = {x} not reduced mod {m}")));
    }
    if k_bits > 12 || (1u64 << k_bits) < m {
        return Err(ModuliError::Value(format!("2^{k_bits} must cover {m} and stay within 4096")));
    }
    let big = 1usize << k_bits;
    let norm = 1.0 / ((m as f64) * big as f64).sqrt();
    Ok((0..big)
        .map(|z| {
            let amp: C64 = (0..m as usize)
                .map(|y| {
                    let turns = (x as f64 * y as f64 / m as f64) - (y as f64 * z as f64 / big as f64);
                    C64::from_polar(1.0, 2.0 * PI * turns.fract())
                })
                .sum();
            (amp * norm).norm_sqr()
        })
        .collect())
}

/// `round(z m / 2^k) mod m`.
pub fn round_estimate(z: u64, m: u64, k_bits: u32) -> u64 {
    let scaled = (z as u128 * m as u128 * 2 + (1u128 << k_bits)) >> (k_bits + 1);
    (scaled % m as u128) as u64
}

/// Draws `copies` samples from the inverse-transformed state and takes the
/// mode of their rounded values, smallest value on ties.
pub fn arbitrary_modulus_estimate(m: u64, k_bits: u32, copies: usize, x: u64, seed: u64) -> ModuliResult<EstimateReport> {
    if copies == 0 {
        return Err(ModuliError::Value("need at least one copy".into()));
    }
    let dist = estimate_distribution(m, k_bits, x)?;
    let success_probability: f64 =
        dist.iter().enumerate().filter(|(z, _)| round_estimate(*z as u64, m, k_bits) == x).map(|(_, p)| p).sum();
    let sampler = WeightedIndex::new(&dist).map_err(|e| ModuliError::Value(e.to_string()))?;
    let mut rng = rng_from_seed(seed);
    let mut counts = vec![0usize; m as usize];
    for _ in 0..copies {
        counts[round_estimate(sampler.sample(&mut rng) as u64, m, k_bits) as usize] += 1;
    }
    let mode = (0..m as usize).fold(0, |best, v| if counts[v] > counts[best] { v } else { best }) as u64;
    Ok(EstimateReport {
        m,
        k_bits,
        x,
        copies,
        success_probability,
        empirical_success: counts[x as usize] as f64 / copies as f64,
        mode,
        recovered: mode == x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_basis() {
        let b = CrtBasis::from_modulus(15).unwrap();
        assert_eq!(b.factors, [3, 5]);
        assert_eq!(b.g, [2, 2]);
        assert_eq!(b.residues(7), [1, 2]);
        assert_eq!(b.reconstruct(&[1, 2]), 7);
        assert!(CrtBasis::new(vec![4, 6]).is_err());
    }

    #[test]
    fn rounding() {
        assert_eq!(round_estimate(0, 5, 6), 0);
        assert_eq!(round_estimate(63, 5, 6), 0);
        assert_eq!(round_estimate(13, 5, 6), 1);
    }
}
