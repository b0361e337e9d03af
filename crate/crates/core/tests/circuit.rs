use proptest::prelude::*;
use qftkit::circuit::*;
use qftkit::qft_pow2::{copy_fourier, prep_exact, psi_register, standard_qft};
use qftkit::sim::{extract_unitary, spectral_norm, Matrix};

/// A gate on `q` wires described by a tag, three wire picks and an angle.
#[derive(Clone, Debug)]
struct Spec(u8, usize, usize, usize, i128, u32);

fn spec() -> impl Strategy<Value = Spec> {
    (0u8..6, any::<usize>(), any::<usize>(), any::<usize>(), -64i128..64, 0u32..7).prop_map(|(t, a, b, c, n, d)| Spec(t, a, b, c, n, d))
}

/// Builds a measurement-free circuit; picks that would repeat a wire fall back to H.
fn build(q: usize, specs: &[Spec]) -> Circuit {
    let mut b = CircuitBuilder::new(q);
    for Spec(t, a, bb, c, num, d) in specs {
        let (a, bw, cw) = (a % q, bb % q, c % q);
        let theta = DyadicAngle::new(*num, *d).unwrap();
        match t {
            0 => b.h(a),
            1 => b.x(a),
            2 => b.p(a, theta),
            3 if a != bw => b.cp(a, bw, theta),
            4 if a != bw => b.cnot(a, bw),
            5 if a != bw && bw != cw && a != cw => b.ccx(a, bw, cw),
            _ => b.h(a),
        }
    }
    b.finish()
}

fn circuit() -> impl Strategy<Value = Circuit> {
    (2usize..6, proptest::collection::vec(spec(), 0..30)).prop_map(|(q, s)| build(q, &s))
}

#[test]
fn compose_examples() {
    let c = standard_qft(3).unwrap();
    let e = compose(&Circuit::empty(3), &c, &[0, 1, 2]).unwrap();
    assert_eq!(e.layers(), c.layers());
    let mut b = CircuitBuilder::new(1);
    b.h(0);
    let h = b.finish();
    let hh = compose(&h, &h, &[0]).unwrap();
    assert!(spectral_norm(&(extract_unitary(&hh).unwrap() - Matrix::identity(2, 2))) < 1e-12);

    let prep = prep_exact(3).unwrap();
    let copy = copy_fourier(3, 2).unwrap();
    // the copy's source register is its last one, which goes on the phase register
    let mut map: Vec<usize> = (prep.width()..prep.width() + 3).collect();
    map.extend(psi_register(3));
    let mut wide = CircuitBuilder::like(&prep);
    wide.alloc(3);
    for g in prep.gates() {
        wide.push(*g);
    }
    let base = wide.finish();
    let both = compose(&base, &copy, &map).unwrap();
    assert!(both.depth() <= prep.depth() + copy.depth());
    assert_eq!(both.size(), prep.size() + copy.size());
}

#[test]
fn inverse_examples() {
    let mut b = CircuitBuilder::new(1);
    b.p(0, DyadicAngle::pow2_inv(3));
    let inv = inverse(&b.finish()).unwrap();
    assert_eq!(inv.gates().next(), Some(&Gate::P(0, DyadicAngle::new(7, 3).unwrap())));
    let f = standard_qft(4).unwrap();
    let id = compose(&f, &inverse(&f).unwrap(), &(0..4).collect::<Vec<_>>()).unwrap();
    assert!(spectral_norm(&(extract_unitary(&id).unwrap() - Matrix::identity(16, 16))) < 1e-10);
    let mut m = CircuitBuilder::new(1);
    let bit = m.alloc_classical(1)[0];
    m.measure(0, Basis::X, bit);
    assert!(matches!(inverse(&m.finish()), Err(CircuitError::NonInvertible)));
}

#[test]
fn standard_metrics() {
    for n in 1..=12 {
        let m = standard_qft(n).unwrap().metrics();
        assert_eq!(m.size, n * (n + 1) / 2);
        assert_eq!(m.gate_histogram.get("h"), Some(&n));
        assert!(m.depth <= 2 * n - 1);
    }
}

proptest! {
    #[test]
    fn layers_are_disjoint(c in circuit()) {
        for layer in c.layers() {
            let mut seen = std::collections::BTreeSet::new();
            for g in layer {
                for w in g.support().iter() {
                    prop_assert!(seen.insert(*w));
                }
            }
        }
    }

    #[test]
    fn compose_adds_size_and_bounds_depth(a in circuit(), b in circuit()) {
        prop_assume!(b.n_data() <= a.n_data());
        let map: Vec<usize> = (0..b.n_data()).collect();
        let c = compose(&a, &b, &map).unwrap();
        prop_assert_eq!(c.size(), a.size() + b.size());
        prop_assert!(c.depth() <= a.depth() + b.depth());
    }

    #[test]
    fn inverse_undoes(c in circuit()) {
        let inv = inverse(&c).unwrap();
        let q = c.n_data();
        let id = compose(&c, &inv, &(0..q).collect::<Vec<_>>()).unwrap();
        let u = extract_unitary(&id).unwrap();
        prop_assert!(spectral_norm(&(u - Matrix::identity(1 << q, 1 << q))) < 1e-10);
        let twice = inverse(&inv).unwrap();
        prop_assert_eq!(twice.gates().collect::<Vec<_>>(), c.gates().collect::<Vec<_>>());
    }

    #[test]
    fn light_cone_bounds(c in circuit()) {
        let has_toffoli = c.gates().any(|g| matches!(g, Gate::Toffoli(..)));
        let base: usize = if has_toffoli { 3 } else { 2 };
        for w in 0..c.n_data() {
            let cone = c.light_cone(w).unwrap();
            prop_assert!(cone.contains(&w));
            prop_assert!(cone.len() <= base.saturating_pow(c.depth() as u32));
        }
    }

    #[test]
    fn netlist_round_trip(c in circuit(), n in 1usize..9) {
        let order: Vec<usize> = (0..c.n_data()).rev().collect();
        let c = c.with_name("random").with_param("n", n).with_output_order(order);
        let text = c.encode_netlist();
        prop_assert_eq!(Circuit::decode_netlist(&text).unwrap(), c);
    }

    #[test]
    fn angles_normalize(num in -1000i128..1000, d in 0u32..10) {
        let a = DyadicAngle::new(num, d).unwrap();
        prop_assert!(a.turns() >= 0.0 && a.turns() < 1.0);
        prop_assert!(a.numerator() % 2 == 1 || a.numerator() == 0);
        prop_assert!(a.add(a.neg()).is_zero());
        prop_assert_eq!(DyadicAngle::parse(&a.to_string()).unwrap(), a);
    }
}
