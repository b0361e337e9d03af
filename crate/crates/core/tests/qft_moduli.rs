use num_integer::Integer;
use qftkit::qft_moduli::*;
use qftkit::sim::{dft_reference, spectral_norm, Matrix};

/// Inverse of `a` mod `q` by brute force.
fn inverse_by_search(a: u64, q: u64) -> u64 {
    (1..q).find(|g| a * g % q == 1).unwrap()
}

#[test]
fn bases_match_brute_force_inverses() {
    for m in [6u64, 10, 12, 15, 30, 105, 210, 1001] {
        let b = CrtBasis::from_modulus(m).unwrap();
        assert_eq!(b.factors.iter().product::<u64>(), m);
        for (j, &q) in b.factors.iter().enumerate() {
            assert_eq!(b.g[j], inverse_by_search(m / q % q, q), "m = {m}");
            assert_eq!(b.f[j] * b.g[j] % q, 1);
        }
    }
    assert_eq!(CrtBasis::from_modulus(12).unwrap().factors, [4, 3]);
    assert!(CrtBasis::new(vec![6, 9]).is_err());
}

#[test]
fn crt_maps_are_permutations_and_invert() {
    for m in [6u64, 12, 15, 30] {
        let b = CrtBasis::from_modulus(m).unwrap();
        let (c, a) = crt_maps(&b).unwrap();
        let dim = m as usize;
        for p in [&c, &a] {
            for i in 0..dim {
                assert_eq!(p.row(i).iter().filter(|z| z.re == 1.0).count(), 1);
                assert_eq!(p.column(i).iter().filter(|z| z.re == 1.0).count(), 1);
            }
        }
        let back = crt_inverse(&b).unwrap() * &c;
        assert_eq!(back, Matrix::identity(dim, dim), "m = {m}");
        for x in 0..m {
            assert_eq!(b.reconstruct(&b.residues(x)), x);
        }
    }
    let b = CrtBasis::from_modulus(15).unwrap();
    let (c, _) = crt_maps(&b).unwrap();
    // tuple (1, 2) has mixed-radix index 1 * 5 + 2
    assert_eq!(c[(7, 7)].re, 1.0);
    assert_eq!(b.tuple_index(&[1, 2]), 7);
}

#[test]
fn mixed_radix_identity() {
    for m in [6u64, 12, 15, 30, 105] {
        let b = CrtBasis::from_modulus(m).unwrap();
        let err = spectral_norm(&(mixed_radix_qft(&b).unwrap() - dft_reference(m as usize).unwrap()));
        assert!(err <= 1e-10, "m = {m}: {err}");
    }
    // a single factor makes C and A the identity
    let b = CrtBasis::new(vec![7]).unwrap();
    let (c, a) = crt_maps(&b).unwrap();
    assert_eq!(c, Matrix::identity(7, 7));
    assert_eq!(a, Matrix::identity(7, 7));
    // reversing the factor order still works
    let b = CrtBasis::new(vec![5, 3]).unwrap();
    assert!(spectral_norm(&(mixed_radix_qft(&b).unwrap() - dft_reference(15).unwrap())) < 1e-10);
}

#[test]
fn power_of_two_modulus_is_exact() {
    for (m, k) in [(8u64, 3u32), (16, 4), (32, 5)] {
        for x in 0..m {
            let r = arbitrary_modulus_estimate(m, k, 10, x, x).unwrap();
            assert!((r.success_probability - 1.0).abs() < 1e-9, "m = {m}, k = {k}, x = {x}");
            assert!(r.recovered);
        }
    }
    // padding a power of two breaks exactness but not the majority
    let r = arbitrary_modulus_estimate(8, 5, 1, 3, 0).unwrap();
    assert!(r.success_probability < 1.0 - 1e-6 && r.success_probability > 0.5);
}

#[test]
fn five_with_six_bits() {
    let r = arbitrary_modulus_estimate(5, 6, 10_000, 3, 11).unwrap();
    println!("m=5 k=6 x=3: exact {:.4}, empirical {:.4}", r.success_probability, r.empirical_success);
    assert!(r.empirical_success > 0.5);
    assert!(r.success_probability > 0.5);
}

#[test]
fn distribution_is_normalized() {
    for (m, x) in [(5u64, 0u64), (7, 6), (12, 5), (100, 37)] {
        let k = default_k_bits(m);
        let total: f64 = estimate_distribution(m, k, x).unwrap().iter().sum();
        assert!((total - 1.0).abs() < 1e-10);
    }
    assert!(estimate_distribution(600, 12, 0).is_err());
    assert!(estimate_distribution(5, 2, 0).is_err());
}

#[test]
fn single_sample_success_exceeds_half() {
    for m in 3u64..=40 {
        let k = default_k_bits(m);
        for x in 0..m {
            let r = arbitrary_modulus_estimate(m, k, 1, x, 0).unwrap();
            assert!(r.success_probability > 0.5, "m = {m}, x = {x}: {}", r.success_probability);
        }
    }
}

#[test]
fn mode_recovers_with_25_copies() {
    for m in [5u64, 7, 12] {
        let k = default_k_bits(m);
        for x in 0..m {
            let hits = (0..200).filter(|&s| arbitrary_modulus_estimate(m, k, 25, x, s).unwrap().recovered).count();
            assert!(hits >= 198, "m = {m}, x = {x}: {hits}/200");
        }
    }
}

#[test]
fn residues_agree_with_gcd_structure() {
    let b = CrtBasis::from_modulus(105).unwrap();
    for x in 0..105u64 {
        let r = b.residues(x);
        for (j, &q) in b.factors.iter().enumerate() {
            assert_eq!(x.gcd(&q) == 1, r[j].gcd(&q) == 1);
        }
    }
}
