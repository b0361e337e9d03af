use qftkit::circuit::Circuit;
use qftkit::qft_pow2::*;
use qftkit::revarith::{build_subtractor, RegisterSpec};
use qftkit::sim::*;

fn dft_in_order(c: &Circuit, n: usize) -> Matrix {
    reorder_rows(&dft_reference(1 << n).unwrap(), c.meta().output_order.as_ref().unwrap())
}

fn tensor(parts: &[Vec<C64>]) -> Vec<C64> {
    // parts[0] occupies the low index bits
    let mut out = vec![C64::new(1.0, 0.0)];
    for p in parts {
        let mut next = Vec::with_capacity(out.len() * p.len());
        for b in p {
            for a in &out {
                next.push(a * b);
            }
        }
        out = next;
    }
    out
}

/// Phase register of `prep` run on `|x>|0>`, checking `x` survives untouched.
fn prepared(c: &Circuit, n: usize, x: u64) -> Vec<C64> {
    let mut s = SparseState::from_value(c.width(), x as u128, n);
    s.apply_circuit(c, &mut rng_from_seed(0)).unwrap();
    let mut wires: Vec<usize> = (0..n).collect();
    wires.extend(psi_register(n));
    let (amps, leak) = s.project(&wires);
    assert!(leak < 1e-10);
    let rows: Vec<C64> = (0..1usize << n).map(|y| amps[x as usize | y << n]).collect();
    let kept: f64 = rows.iter().map(|a| a.norm_sqr()).sum();
    assert!((kept - 1.0).abs() < 1e-9, "input register disturbed");
    rows
}

fn fidelity(a: &[C64], b: &[C64]) -> f64 {
    inner(a, b).norm_sqr()
}

#[test]
fn one_qubit_transform_is_hadamard() {
    let c = standard_qft(1).unwrap();
    assert_eq!(c.size(), 1);
    assert!(operator_distance(&c, &dft_reference(2).unwrap(), DistanceMode::Exact).unwrap() < 1e-12);
}

#[test]
fn standard_matches_dft() {
    for n in 1..=8 {
        let c = standard_qft(n).unwrap();
        let d = operator_distance(&c, &dft_in_order(&c, n), DistanceMode::Exact).unwrap();
        assert!(d < 1e-10, "n = {n}: {d}");
    }
}

#[test]
fn banded_distance_within_bound() {
    for n in 1..=8 {
        for band in 1..=n {
            let c = banded_qft(n, band).unwrap();
            let d = operator_distance(&c, &dft_in_order(&c, n), DistanceMode::Exact).unwrap();
            let bound = banded_error_bound(n, band);
            assert!(d <= bound + 1e-9, "n = {n}, band = {band}: {d} > {bound}");
            if band == n {
                assert!(d < 1e-10);
            }
        }
    }
    // band ceil(log2(10 / 0.001)) = 14 clamps to 10
    let c = banded_qft(10, 14).unwrap();
    assert_eq!(c.meta().params["band"], "10");
    assert!(operator_distance(&c, &dft_in_order(&c, 10), DistanceMode::Exact).unwrap() <= 0.001);
}

#[test]
fn split_is_exact() {
    for n in 2..=7 {
        let c = split_qft(n).unwrap();
        let d = operator_distance(&c, &dft_in_order(&c, n), DistanceMode::Exact).unwrap();
        assert!(d < 1e-9, "n = {n}: {d}");
        // extract_unitary rejects any amplitude left on ancillas
        let (_, leak) = run_basis_column(&c, (1 << n) - 1).unwrap();
        assert!(leak < 1e-10);
    }
}

#[test]
fn split_size_recurrence() {
    for n in 4..=16 {
        let total = split_qft(n).unwrap().size();
        let parts = split_qft(n.div_ceil(2)).unwrap().size()
            + split_qft(n / 2).unwrap().size()
            + split_step2(n).unwrap().size();
        assert_eq!(total, parts, "n = {n}");
    }
}

#[test]
fn prep_exact_states() {
    let c = prep_exact(3).unwrap();
    let zero = prepared(&c, 3, 0);
    assert!(zero.iter().all(|a| (a - C64::new(1.0 / 8f64.sqrt(), 0.0)).norm() < 1e-12));
    // x = 5: positions hold mu_{0.1}, mu_{0.01}, mu_{0.101}
    let want = product_state(&[MuState { theta: 0.625 }, MuState { theta: 0.25 }, MuState { theta: 0.5 }]);
    assert!((fidelity(&prepared(&c, 3, 5), &want) - 1.0).abs() < 1e-10);
    let c4 = prep_exact(4).unwrap();
    for x in 0..16 {
        let f = fidelity(&prepared(&c4, 4, x), &FourierState { n: 4, x }.amplitudes());
        assert!((f - 1.0).abs() < 1e-10, "x = {x}");
    }
}

#[test]
fn prep_approx_error_and_size() {
    assert_eq!(prep_approx(5, 5).unwrap().layers(), prep_exact(5).unwrap().layers());
    let (n, k) = (6, 4);
    let c = prep_approx(n, k).unwrap();
    let worst = (0..64u64)
        .map(|x| {
            let got = prepared(&c, n, x);
            let want = FourierState { n, x }.amplitudes();
            got.iter().zip(&want).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
        })
        .fold(0.0, f64::max);
    assert!(worst <= prep_error_bound(n, k), "{worst}");
    for n in 4..=12 {
        for k in 1..=n {
            assert!(prep_approx(n, k).unwrap().size() <= 12 * n * k);
        }
    }
}

#[test]
fn prep_depth_is_logarithmic() {
    for n in [4usize, 8, 16, 32, 64] {
        let d = prep_exact(n).unwrap().depth();
        assert!(d as f64 <= 6.0 * (n as f64).log2() + 6.0, "n = {n}: depth {d}");
    }
}

#[test]
fn copy_produces_product_of_copies() {
    let (n, k) = (2, 3);
    let c = copy_fourier(n, k).unwrap();
    for x in 0..4u64 {
        let psi = FourierState { n, x }.amplitudes();
        let src: Vec<usize> = ((k - 1) * n..k * n).collect();
        let mut s = SparseState::embed(c.width(), &src, &psi);
        s.apply_circuit(&c, &mut rng_from_seed(0)).unwrap();
        let (amps, leak) = s.project(&(0..k * n).collect::<Vec<_>>());
        assert!(leak < 1e-10);
        let want = tensor(&vec![psi.clone(); k]);
        assert!((fidelity(&amps, &want) - 1.0).abs() < 1e-10, "x = {x}");
    }
}

#[test]
fn subtraction_adds_phases() {
    let n = 3;
    let c = build_subtractor(&RegisterSpec::range(0, n), &RegisterSpec::range(n, n)).unwrap();
    for (x, y) in [(1u64, 2u64), (5, 7), (6, 3), (0, 4)] {
        let input = tensor(&[FourierState { n, x }.amplitudes(), FourierState { n, x: y }.amplitudes()]);
        let mut s = SparseState::embed(c.width(), &(0..2 * n).collect::<Vec<_>>(), &input);
        s.apply_circuit(&c, &mut rng_from_seed(0)).unwrap();
        let (amps, _) = s.project(&(0..2 * n).collect::<Vec<_>>());
        let want = tensor(&[FourierState { n, x: (x + y) % 8 }.amplitudes(), FourierState { n, x: y }.amplitudes()]);
        assert!((fidelity(&amps, &want) - 1.0).abs() < 1e-10);
    }
}

#[test]
fn coherent_channel_small() {
    let plan = QftPlan::logdepth(2, 4);
    for x in 0..4 {
        let stats = run_channel(&plan, x, 500, 17 + x).unwrap();
        assert_eq!(stats.mode, ChannelMode::Coherent);
        let rate = stats.successes as f64 / 500.0;
        println!("n=2 k=4 x={x}: success {rate:.3}, analytic floor {:.3}", 1.0 - stats.failure_bound);
        assert!(rate >= 0.5);
        assert_eq!(stats.successes, stats.cleared);
    }
}

#[test]
fn sampled_channel_meets_bound() {
    let plan = QftPlan::logdepth(8, 48);
    let stats = run_channel(&plan, 0b1011_0110, 2000, 3).unwrap();
    assert_eq!(stats.mode, ChannelMode::Sampled);
    assert!(stats.failure_rate <= 32.0 * (-6f64).exp(), "{}", stats.failure_rate);
    for k in [16usize, 32, 48] {
        for x in [0u64, 0x5a, 0xff, 0x81] {
            let s = run_channel(&QftPlan::logdepth(8, k), x, 2000, k as u64).unwrap();
            let p = s.failure_bound;
            let slack = 3.0 * (p * (1.0 - p) / 2000.0).sqrt();
            assert!(s.failure_rate <= p + slack, "k = {k}, x = {x}: {}", s.failure_rate);
        }
    }
}

#[test]
fn logdepth_rejects_odd_copies() {
    assert!(QftPlan::logdepth(4, 5).build().is_err());
    assert!(QftPlan::logdepth(4, 0).build().is_err());
}

#[test]
fn logdepth_depth_sweep() {
    let sizes = [4usize, 8, 16, 32];
    let depth = |n: usize, k: usize| QftPlan::logdepth(n, k).build().unwrap().depth();
    let mut worst: f64 = 0.0;
    for &n in &sizes {
        for &k in &sizes {
            let d = depth(n, k);
            worst = worst.max(d as f64 / ((n as f64).log2() + (k as f64).log2()));
            // doubling either parameter adds a bounded number of layers
            assert!(depth(2 * n, k) - d <= 70, "n = {n}, k = {k}");
            assert!(depth(n, 2 * k) - d <= 70, "n = {n}, k = {k}");
        }
    }
    println!("logdepth depth / (log n + log k) <= {worst:.2}");
    assert!(worst <= 45.0);
}

#[test]
fn exact_outputs_see_every_input() {
    for n in 2..=10 {
        for c in [standard_qft(n).unwrap(), split_qft(n).unwrap()] {
            let out = c.meta().output_order.as_ref().unwrap()[0];
            let cone = c.light_cone(out).unwrap();
            assert!((0..n).all(|w| cone.contains(&w)), "{} n = {n}", c.meta().name);
            assert!(c.depth() >= (n as f64).log2().ceil() as usize);
        }
        let p = prep_exact(n).unwrap();
        let cone = p.light_cone(psi_register(n)[0]).unwrap();
        assert!((0..n).all(|w| cone.contains(&w)));
    }
}

#[test]
#[allow(clippy::approx_constant)]
fn cosine_product_witness() {
    assert!((overlap_witness(5, 3).unwrap().inner_product - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    let p = cos_product(64);
    assert!(p > 0.6366 && p < 0.6367);
    // Viete: the infinite product is 2/pi
    assert!((cos_product(80) - 2.0 / std::f64::consts::PI).abs() < 1e-9);
    for n in 2..=14 {
        for r in 1..n {
            let w = overlap_witness(n, r).unwrap();
            assert!((w.vector_inner_product.unwrap() - w.inner_product).abs() < 1e-10, "n = {n}, r = {r}");
            assert!(w.trace_distance < 0.7712);
        }
    }
    for i in 1..10 {
        let (tail, bound) = cos_tail(i);
        assert!(tail > bound);
    }
}

#[test]
fn fourier_state_factorizes() {
    for n in 1..=6 {
        for x in 0..1u64 << n {
            let fs = FourierState { n, x };
            // factor j is carried by bit n-1-j
            let qubits: Vec<MuState> = fs.factors().into_iter().rev().collect();
            assert!((fidelity(&product_state(&qubits), &fs.amplitudes()) - 1.0).abs() < 1e-12);
        }
    }
}
