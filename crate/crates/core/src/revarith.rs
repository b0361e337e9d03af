//! Reversible arithmetic over X/CNOT/Toffoli.
//!
//! Everything is assembled from out-of-place boolean logic on [`Bit`]s that
//! folds constants and writes only into fresh ancillas. A [`bennett`] section
//! records such logic, copies its result out with CNOTs, then replays the
//! recorded gates inverted, so every public builder returns its ancillas in
//! |0>. Register wire lists are LSB first and all arithmetic is mod `2^width`.

use thiserror::Error;

use crate::circuit::{inverse, Circuit, CircuitBuilder, CircuitError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("registers overlap on wire {0}")]
    Overlap(usize),
    #[error("value error: {0}")]
    Value(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

pub type ArithResult<T> = Result<T, ArithError>;

/// An `n`-bit register, LSB first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegisterSpec {
    wires: Vec<usize>,
}

impl RegisterSpec {
    pub fn new(wires: Vec<usize>) -> ArithResult<RegisterSpec> {
        if wires.is_empty() {
            return Err(ArithError::Value("register must have at least one wire".into()));
        }
        check_disjoint(&[&wires])?;
        Ok(RegisterSpec { wires })
    }

    /// Wires `start..start + n`.
    pub fn range(start: usize, n: usize) -> RegisterSpec {
        RegisterSpec { wires: (start..start + n).collect() }
    }

    pub fn wires(&self) -> &[usize] {
        &self.wires
    }

    pub fn len(&self) -> usize {
        self.wires.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wires.is_empty()
    }
}

/// `z = first + second mod 2^n`; many pairs denote the same `z`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairwiseNumber {
    pub first: RegisterSpec,
    pub second: RegisterSpec,
}

impl PairwiseNumber {
    pub fn value(first: u64, second: u64, n: usize) -> u64 {
        first.wrapping_add(second) & mask(n)
    }

    /// `out ^= first + second`.
    pub fn canonicalize_into(&self, out: &RegisterSpec) -> ArithResult<Circuit> {
        let n = out.len();
        if self.first.len() != n || self.second.len() != n {
            return Err(ArithError::Value("pairwise halves and output differ in width".into()));
        }
        check_disjoint(&[&self.first.wires, &self.second.wires, &out.wires])?;
        let mut b = builder_for(&[&self.first, &self.second, out]);
        add_xor(&mut b, &wires(&self.first.wires), &wires(&self.second.wires), Bit::Zero, &out.wires);
        Ok(b.finish().with_name("canonicalize"))
    }
}

pub(crate) fn mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn check_disjoint(regs: &[&[usize]]) -> ArithResult<()> {
    let mut seen = std::collections::BTreeSet::new();
    for r in regs {
        for &w in r.iter() {
            if !seen.insert(w) {
                return Err(ArithError::Overlap(w));
            }
        }
    }
    Ok(())
}

fn builder_for(regs: &[&RegisterSpec]) -> CircuitBuilder {
    let n = regs.iter().flat_map(|r| r.wires.iter()).max().map_or(0, |m| m + 1);
    CircuitBuilder::new(n)
}

fn same_width(regs: &[&RegisterSpec]) -> ArithResult<usize> {
    let n = regs[0].len();
    if regs.iter().any(|r| r.len() != n) {
        return Err(ArithError::Value("registers differ in width".into()));
    }
    Ok(n)
}

/// A boolean value known at build time or held on a wire.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Bit {
    Zero,
    One,
    W(usize),
}

pub(crate) fn wires(ws: &[usize]) -> Vec<Bit> {
    ws.iter().map(|&w| Bit::W(w)).collect()
}

pub(crate) fn constant(value: u64, n: usize) -> Vec<Bit> {
    (0..n).map(|i| if value >> i & 1 == 1 { Bit::One } else { Bit::Zero }).collect()
}

pub(crate) fn xor_into(b: &mut CircuitBuilder, x: Bit, target: usize) {
    match x {
        Bit::Zero => {}
        Bit::One => b.x(target),
        Bit::W(w) => b.cnot(w, target),
    }
}

pub(crate) fn not(b: &mut CircuitBuilder, x: Bit) -> Bit {
    match x {
        Bit::Zero => Bit::One,
        Bit::One => Bit::Zero,
        Bit::W(w) => {
            let t = b.alloc_one();
            b.cnot(w, t);
            b.x(t);
            Bit::W(t)
        }
    }
}

pub(crate) fn and(b: &mut CircuitBuilder, x: Bit, y: Bit) -> Bit {
    match (x, y) {
        (Bit::Zero, _) | (_, Bit::Zero) => Bit::Zero,
        (Bit::One, o) | (o, Bit::One) => o,
        (Bit::W(p), Bit::W(q)) if p == q => x,
        (Bit::W(p), Bit::W(q)) => {
            let t = b.alloc_one();
            b.ccx(p, q, t);
            Bit::W(t)
        }
    }
}

/// Parity of `bits`.
pub(crate) fn xor_many(b: &mut CircuitBuilder, bits: &[Bit]) -> Bit {
    let mut parity = false;
    let mut ws: Vec<usize> = Vec::new();
    for &x in bits {
        match x {
            Bit::Zero => {}
            Bit::One => parity = !parity,
            Bit::W(w) => match ws.iter().position(|&v| v == w) {
                Some(i) => {
                    ws.remove(i);
                }
                None => ws.push(w),
            },
        }
    }
    match (ws.as_slice(), parity) {
        ([], false) => Bit::Zero,
        ([], true) => Bit::One,
        (&[w], false) => Bit::W(w),
        _ => {
            let t = b.alloc_one();
            for &w in &ws {
                b.cnot(w, t);
            }
            if parity {
                b.x(t);
            }
            Bit::W(t)
        }
    }
}

/// `g xor (p and h)`.
fn xor_and(b: &mut CircuitBuilder, g: Bit, p: Bit, h: Bit) -> Bit {
    match (p, h) {
        (Bit::Zero, _) | (_, Bit::Zero) => g,
        (Bit::One, o) | (o, Bit::One) => xor_many(b, &[g, o]),
        (Bit::W(pw), Bit::W(hw)) => {
            let t = b.alloc_one();
            xor_into(b, g, t);
            if pw == hw {
                b.cnot(pw, t);
            } else {
                b.ccx(pw, hw, t);
            }
            Bit::W(t)
        }
    }
}

pub(crate) fn majority(b: &mut CircuitBuilder, x: Bit, y: Bit, z: Bit) -> Bit {
    match (x, y, z) {
        (Bit::Zero, p, q) | (p, Bit::Zero, q) | (p, q, Bit::Zero) => and(b, p, q),
        (Bit::One, p, q) | (p, Bit::One, q) | (p, q, Bit::One) => match (p, q) {
            (Bit::One, _) | (_, Bit::One) => Bit::One,
            (Bit::W(pw), Bit::W(qw)) if pw != qw => {
                // p or q = p xor q xor pq
                let t = b.alloc_one();
                b.ccx(pw, qw, t);
                b.cnot(pw, t);
                b.cnot(qw, t);
                Bit::W(t)
            }
            _ => p,
        },
        (Bit::W(p), Bit::W(q), Bit::W(r)) => {
            if p == q || p == r {
                return x;
            }
            if q == r {
                return y;
            }
            let t = b.alloc_one();
            b.ccx(p, q, t);
            b.ccx(p, r, t);
            b.ccx(q, r, t);
            Bit::W(t)
        }
    }
}

/// Recorded logic, CNOT copy-out, recorded logic undone.
pub(crate) fn bennett<T>(
    b: &mut CircuitBuilder,
    compute: impl FnOnce(&mut CircuitBuilder) -> T,
    copy: impl FnOnce(&mut CircuitBuilder, &T),
) -> T {
    let start = b.mark();
    let value = compute(b);
    let recorded = b.gates_since(start);
    copy(b, &value);
    b.push_inverse(&recorded);
    value
}

/// Brent-Kung style recursive pairing. Each level lists `(src, dst)` pairs
/// meaning `dst <- src o dst`; pairs within a level are disjoint.
pub fn ladner_fischer(k: usize) -> Vec<Vec<(usize, usize)>> {
    fn rec(idx: &[usize], levels: &mut Vec<Vec<(usize, usize)>>) {
        if idx.len() < 2 {
            return;
        }
        levels.push(idx.chunks_exact(2).map(|p| (p[0], p[1])).collect());
        let odd: Vec<usize> = idx.iter().skip(1).step_by(2).copied().collect();
        rec(&odd, levels);
        let fill: Vec<(usize, usize)> = (2..idx.len()).step_by(2).map(|i| (idx[i - 1], idx[i])).collect();
        if !fill.is_empty() {
            levels.push(fill);
        }
    }
    let idx: Vec<usize> = (0..k).collect();
    let mut levels = Vec::new();
    rec(&idx, &mut levels);
    levels
}

/// `(p_i, c_i)` with `a + b + cin = sum_i (p_i xor c_i) 2^i`; `c` has one extra
/// entry holding the carry out of the top bit.
pub(crate) fn sum_terms(b: &mut CircuitBuilder, x: &[Bit], y: &[Bit], cin: Bit) -> (Vec<Bit>, Vec<Bit>) {
    let n = x.len();
    let p: Vec<Bit> = (0..n).map(|i| xor_many(b, &[x[i], y[i]])).collect();
    // element 0 is the carry-in; element i + 1 is (generate_i, propagate_i)
    let mut gen = vec![cin];
    let mut prop = vec![Bit::Zero];
    for i in 0..n {
        gen.push(and(b, x[i], y[i]));
        prop.push(p[i]);
    }
    for level in ladner_fischer(n + 1) {
        for (src, dst) in level {
            let g = xor_and(b, gen[dst], prop[dst], gen[src]);
            let q = and(b, prop[dst], prop[src]);
            gen[dst] = g;
            prop[dst] = q;
        }
    }
    (p, gen)
}

/// `target ^= x + y + cin`.
pub(crate) fn add_xor(b: &mut CircuitBuilder, x: &[Bit], y: &[Bit], cin: Bit, target: &[usize]) {
    bennett(
        b,
        |b| sum_terms(b, x, y, cin),
        |b, (p, c)| {
            for (i, &t) in target.iter().enumerate() {
                xor_into(b, p[i], t);
                xor_into(b, c[i], t);
            }
        },
    );
}

/// `target ^= x - y`.
pub(crate) fn sub_xor(b: &mut CircuitBuilder, x: &[Bit], y: &[Bit], target: &[usize]) {
    bennett(
        b,
        |b| {
            let ny: Vec<Bit> = y.iter().map(|&v| not(b, v)).collect();
            sum_terms(b, x, &ny, Bit::One)
        },
        |b, (p, c)| {
            for (i, &t) in target.iter().enumerate() {
                xor_into(b, p[i], t);
                xor_into(b, c[i], t);
            }
        },
    );
}

/// `x + y + cin` into fresh wires (garbage left behind).
pub(crate) fn add_fresh(b: &mut CircuitBuilder, x: &[Bit], y: &[Bit], cin: Bit) -> Vec<Bit> {
    let (p, c) = sum_terms(b, x, y, cin);
    (0..x.len()).map(|i| xor_many(b, &[p[i], c[i]])).collect()
}

/// `y <- y + x` in place.
pub(crate) fn emit_adder(b: &mut CircuitBuilder, x: &[usize], y: &[usize]) {
    let s = b.alloc(y.len());
    add_xor(b, &wires(x), &wires(y), Bit::Zero, &s);
    sub_xor(b, &wires(&s), &wires(x), y);
    for (&si, &yi) in s.iter().zip(y) {
        b.cnot(si, yi);
        b.cnot(yi, si);
    }
}

/// Carry-save step on constant-folded bits: `x + y + z = s + c`.
pub(crate) fn three_two_bits(b: &mut CircuitBuilder, x: &[Bit], y: &[Bit], z: &[Bit]) -> (Vec<Bit>, Vec<Bit>) {
    let n = x.len();
    let s = (0..n).map(|i| xor_many(b, &[x[i], y[i], z[i]])).collect();
    let mut c = vec![Bit::Zero];
    for i in 0..n.saturating_sub(1) {
        c.push(majority(b, x[i], y[i], z[i]));
    }
    (s, c)
}

fn emit_three_two_into(b: &mut CircuitBuilder, x: &[usize], y: &[usize], z: &[usize], s: &[usize], c: &[usize]) {
    let n = x.len();
    for i in 0..n {
        b.cnot(x[i], s[i]);
        b.cnot(y[i], s[i]);
        b.cnot(z[i], s[i]);
        if i + 1 < n {
            b.ccx(x[i], y[i], c[i + 1]);
            b.ccx(x[i], z[i], c[i + 1]);
            b.ccx(y[i], z[i], c[i + 1]);
        }
    }
}

/// Reduces a list of addends (each a register of bits) to at most two.
pub(crate) fn wallace(b: &mut CircuitBuilder, mut rows: Vec<Vec<Bit>>) -> Vec<Vec<Bit>> {
    while rows.len() > 2 {
        let mut next = Vec::new();
        let mut chunks = rows.chunks_exact(3);
        for t in &mut chunks {
            let (s, c) = three_two_bits(b, &t[0], &t[1], &t[2]);
            next.push(s);
            next.push(c);
        }
        next.extend(chunks.remainder().iter().cloned());
        rows = next;
    }
    rows
}

/// `out ^= x * y mod 2^|out|`.
pub(crate) fn emit_multiplier(b: &mut CircuitBuilder, x: &[Bit], y: &[Bit], out: &[usize]) {
    let w = out.len();
    bennett(
        b,
        |b| {
            let rows: Vec<Vec<Bit>> = y
                .iter()
                .enumerate()
                .map(|(j, &yj)| {
                    (0..w).map(|k| if k >= j && k - j < x.len() { and(b, x[k - j], yj) } else { Bit::Zero }).collect()
                })
                .collect();
            wallace(b, rows)
        },
        |b, rows| match rows.len() {
            0 => {}
            1 => rows[0].iter().zip(out).for_each(|(&v, &t)| xor_into(b, v, t)),
            _ => add_xor(b, &rows[0], &rows[1], Bit::Zero, out),
        },
    );
}

/// `u * v mod modulus` into fresh wires; `u, v < modulus < 2^n` with `n = u.len()`.
pub(crate) fn mod_mul_fresh(b: &mut CircuitBuilder, u: &[Bit], v: &[Bit], modulus: u64) -> Vec<Bit> {
    let n = u.len();
    let w = 2 * n;
    let rows: Vec<Vec<Bit>> = v
        .iter()
        .enumerate()
        .map(|(j, &vj)| (0..w).map(|k| if k >= j && k - j < n { and(b, u[k - j], vj) } else { Bit::Zero }).collect())
        .collect();
    let rows = wallace(b, rows);
    let mut p = match rows.len() {
        0 => vec![Bit::Zero; w],
        1 => rows[0].clone(),
        _ => add_fresh(b, &rows[0], &rows[1], Bit::Zero),
    };
    // restoring reduction: subtract modulus * 2^i whenever it fits
    for i in (0..n).rev() {
        let shifted = (modulus as u128) << i;
        let complement = ((1u128 << w) - shifted) as u64;
        let cbits = constant(complement, w);
        let (_, carries) = sum_terms(b, &p, &cbits, Bit::Zero);
        let fits = carries[w];
        let addend: Vec<Bit> = cbits.iter().map(|&c| if c == Bit::One { fits } else { Bit::Zero }).collect();
        p = add_fresh(b, &p, &addend, Bit::Zero);
    }
    p.truncate(n);
    p
}

pub fn build_adder(x: &RegisterSpec, y: &RegisterSpec) -> ArithResult<Circuit> {
    same_width(&[x, y])?;
    check_disjoint(&[&x.wires, &y.wires])?;
    let mut b = builder_for(&[x, y]);
    emit_adder(&mut b, &x.wires, &y.wires);
    Ok(b.finish().with_name("adder").with_param("n", x.len()))
}

/// Gate-for-gate inverse of [`build_adder`]: `y <- y - x`.
pub fn build_subtractor(x: &RegisterSpec, y: &RegisterSpec) -> ArithResult<Circuit> {
    Ok(inverse(&build_adder(x, y)?)?.with_name("subtractor"))
}

/// `(s, c) ^= carry-save(x, y, z)`; with `s = c = 0` on input, `x + y + z = s + c`.
pub fn build_three_two(
    x: &RegisterSpec,
    y: &RegisterSpec,
    z: &RegisterSpec,
    s: &RegisterSpec,
    c: &RegisterSpec,
) -> ArithResult<Circuit> {
    let n = same_width(&[x, y, z, s, c])?;
    check_disjoint(&[&x.wires, &y.wires, &z.wires, &s.wires, &c.wires])?;
    let mut b = builder_for(&[x, y, z, s, c]);
    emit_three_two_into(&mut b, &x.wires, &y.wires, &z.wires, &s.wires, &c.wires);
    Ok(b.finish().with_name("three_two").with_param("n", n))
}

/// Two chained carry-save steps; the intermediate pair is uncomputed.
pub fn build_four_two(
    x: &RegisterSpec,
    y: &RegisterSpec,
    z: &RegisterSpec,
    w: &RegisterSpec,
    s: &RegisterSpec,
    c: &RegisterSpec,
) -> ArithResult<Circuit> {
    let n = same_width(&[x, y, z, w, s, c])?;
    check_disjoint(&[&x.wires, &y.wires, &z.wires, &w.wires, &s.wires, &c.wires])?;
    let mut b = builder_for(&[x, y, z, w, s, c]);
    bennett(
        &mut b,
        |b| {
            let s1 = b.alloc(n);
            let c1 = b.alloc(n);
            emit_three_two_into(b, &x.wires, &y.wires, &z.wires, &s1, &c1);
            (s1, c1)
        },
        |b, (s1, c1)| emit_three_two_into(b, s1, c1, &w.wires, &s.wires, &c.wires),
    );
    Ok(b.finish().with_name("four_two").with_param("n", n))
}

/// Prefix network over `k` blocks. `op_block` acts on `2w` data wires as
/// `(x, y) -> (x, x o y)`; block `i` occupies wires `i*w .. (i+1)*w`.
/// Metadata records `instances` and `block_depth`.
pub fn prefix_combine(k: usize, op_block: &Circuit) -> ArithResult<Circuit> {
    if k == 0 {
        return Err(ArithError::Value("prefix over zero blocks".into()));
    }
    if !op_block.n_data().is_multiple_of(2) {
        return Err(ArithError::Value("op block must act on two equal-width blocks".into()));
    }
    let w = op_block.n_data() / 2;
    let mut b = CircuitBuilder::new(k * w);
    let levels = ladner_fischer(k);
    let mut instances = 0;
    for level in &levels {
        for &(src, dst) in level {
            let map: Vec<usize> = (src * w..(src + 1) * w).chain(dst * w..(dst + 1) * w).collect();
            b.append(op_block, &map)?;
            instances += 1;
        }
    }
    Ok(b.finish()
        .with_name("prefix_combine")
        .with_param("k", k)
        .with_param("instances", instances)
        .with_param("block_depth", levels.len()))
}

/// A running value kept as an unreduced sum of one or two registers.
type Pairwise = Vec<Vec<Bit>>;

fn pairwise_combine(b: &mut CircuitBuilder, left: &Pairwise, right: &Pairwise) -> Pairwise {
    let mut regs: Vec<Vec<Bit>> = left.iter().chain(right).cloned().collect();
    while regs.len() > 2 {
        let rest = regs.split_off(3);
        let (s, c) = three_two_bits(b, &regs[0], &regs[1], &regs[2]);
        regs = vec![s, c];
        regs.extend(rest);
    }
    regs
}

/// `(a_1, ..., a_k) -> (a_1, a_2 - a_1, ..., a_k - a_{k-1})` in place.
pub(crate) fn emit_telescoping(b: &mut CircuitBuilder, regs: &[Vec<usize>]) {
    let k = regs.len();
    if k < 2 {
        return;
    }
    let n = regs[0].len();
    let diffs: Vec<Vec<usize>> = (1..k).map(|_| b.alloc(n)).collect();
    // odd then even indices, so each round reads disjoint register pairs
    for parity in [1, 0] {
        for i in (1..k).filter(|i| i % 2 == parity) {
            sub_xor(b, &wires(&regs[i]), &wires(&regs[i - 1]), &diffs[i - 1]);
        }
    }
    // prefix sums of (a_1, d_2, ..., d_k) reproduce a_j; XOR them away
    bennett(
        b,
        |b| {
            let mut vals: Vec<Pairwise> = vec![vec![wires(&regs[0])]];
            vals.extend(diffs.iter().map(|d| vec![wires(d)]));
            for level in ladner_fischer(k) {
                for (src, dst) in level {
                    vals[dst] = pairwise_combine(b, &vals[src], &vals[dst]);
                }
            }
            vals
        },
        |b, vals| {
            for j in 1..k {
                match vals[j].as_slice() {
                    [single] => single.iter().zip(&regs[j]).for_each(|(&v, &t)| xor_into(b, v, t)),
                    [p, q] => add_xor(b, p, q, Bit::Zero, &regs[j]),
                    _ => unreachable!("pairwise values hold one or two registers"),
                }
            }
        },
    );
    for (j, d) in diffs.iter().enumerate() {
        for (&dw, &aw) in d.iter().zip(&regs[j + 1]) {
            b.cnot(dw, aw);
            b.cnot(aw, dw);
        }
    }
}

fn stacked_registers(k: usize, n: usize) -> ArithResult<Vec<Vec<usize>>> {
    if k == 0 || n == 0 {
        return Err(ArithError::Value("need at least one register of width at least one".into()));
    }
    Ok((0..k).map(|i| (i * n..(i + 1) * n).collect()).collect())
}

/// Register `i` is wires `i*n .. (i+1)*n`.
pub fn telescoping_subtract(k: usize, n: usize) -> ArithResult<Circuit> {
    let regs = stacked_registers(k, n)?;
    let mut b = CircuitBuilder::new(k * n);
    emit_telescoping(&mut b, &regs);
    Ok(b.finish().with_name("telescoping_subtract").with_param("k", k).with_param("n", n))
}

/// `(x_1, ..., x_k) -> (x_1, x_1 + x_2, ..., x_1 + ... + x_k)`; inverse of
/// [`telescoping_subtract`].
pub fn prefix_add(k: usize, n: usize) -> ArithResult<Circuit> {
    Ok(inverse(&telescoping_subtract(k, n)?)?.with_name("prefix_add"))
}

/// `f`, then `out ^= result`, then `f` undone. `f` must be an X/CNOT/Toffoli
/// network that leaves `out` alone; wrapped wires are `f`'s wires.
pub fn bennett_wrap(f: &Circuit, result: &[usize], out: &RegisterSpec) -> ArithResult<Circuit> {
    if !f.is_classical_reversible() {
        return Err(ArithError::Value("f must be an X/CNOT/Toffoli network".into()));
    }
    if result.len() != out.len() {
        return Err(ArithError::Value("result and output widths differ".into()));
    }
    if let Some(&w) = out.wires.iter().find(|&&w| w >= f.n_data()) {
        return Err(ArithError::Value(format!("output wire {w} is not a data wire of f")));
    }
    if let Some(&w) = result.iter().find(|&&w| w >= f.width()) {
        return Err(ArithError::Value(format!("result wire {w} is not a wire of f")));
    }
    if let Some(g) = f.gates().find(|g| g.support().iter().any(|w| out.wires.contains(w))) {
        return Err(CircuitError::Structural(format!("f touches an output wire in `{g}`")).into());
    }
    let mut b = CircuitBuilder::like(f);
    let gates: Vec<_> = f.gates().copied().collect();
    for g in &gates {
        b.push(*g);
    }
    for (&r, &o) in result.iter().zip(&out.wires) {
        b.cnot(r, o);
    }
    b.push_inverse(&gates);
    Ok(b.finish().with_name("bennett"))
}

/// `out ^= x * y mod 2^|out|`.
pub fn build_multiplier(x: &RegisterSpec, y: &RegisterSpec, out: &RegisterSpec) -> ArithResult<Circuit> {
    check_disjoint(&[&x.wires, &y.wires, &out.wires])?;
    let mut b = builder_for(&[x, y, out]);
    emit_multiplier(&mut b, &wires(&x.wires), &wires(&y.wires), &out.wires);
    Ok(b.finish().with_name("multiplier").with_param("n", out.len()))
}

pub(crate) fn check_modulus(bases: &[u64], modulus: u64) -> ArithResult<()> {
    if modulus < 3 || modulus.is_multiple_of(2) {
        return Err(ArithError::Value(format!("modulus {modulus} must be odd and at least 3")));
    }
    if let Some(&bj) = bases.iter().find(|&&bj| bj >= modulus) {
        return Err(ArithError::Value(format!("base {bj} is not reduced mod {modulus}")));
    }
    Ok(())
}

pub(crate) fn emit_iterated_product(b: &mut CircuitBuilder, bases: &[u64], modulus: u64, x: &[usize], out: &[usize]) {
    let n = out.len();
    bennett(
        b,
        |b| {
            let mut layer: Vec<Vec<Bit>> = Vec::new();
            for (&bj, &xj) in bases.iter().zip(x) {
                if bj == 1 {
                    continue;
                }
                // x_j ? b_j : 1, bit by bit
                let leaf: Vec<Bit> = (0..n)
                    .map(|i| match (bj >> i & 1 == 1, i == 0) {
                        (true, true) => Bit::One,
                        (true, false) => Bit::W(xj),
                        (false, true) => not(b, Bit::W(xj)),
                        (false, false) => Bit::Zero,
                    })
                    .collect();
                layer.push(leaf);
            }
            while layer.len() > 1 {
                let mut next = Vec::new();
                for pair in layer.chunks(2) {
                    next.push(match pair {
                        [u, v] => mod_mul_fresh(b, u, v, modulus),
                        [u] => u.clone(),
                        _ => unreachable!(),
                    });
                }
                layer = next;
            }
            layer.pop().unwrap_or_else(|| constant(1, n))
        },
        |b, root| root.iter().zip(out).for_each(|(&v, &t)| xor_into(b, v, t)),
    );
}

/// `out ^= prod_j bases[j]^{x_j} mod modulus` via a binary tree of modular
/// multipliers; `out` needs at least `bits(modulus)` wires.
pub fn iterated_product(bases: &[u64], modulus: u64, x: &RegisterSpec, out: &RegisterSpec) -> ArithResult<Circuit> {
    check_modulus(bases, modulus)?;
    if bases.len() != x.len() {
        return Err(ArithError::Value(format!("{} bases for {} control bits", bases.len(), x.len())));
    }
    let bits = 64 - modulus.leading_zeros() as usize;
    if out.len() < bits {
        return Err(ArithError::Value(format!("output needs {bits} wires")));
    }
    check_disjoint(&[&x.wires, &out.wires])?;
    let mut b = builder_for(&[x, out]);
    emit_iterated_product(&mut b, bases, modulus, &x.wires, &out.wires[..bits]);
    Ok(b.finish().with_name("iterated_product").with_param("modulus", modulus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{rng_from_seed, SparseState};

    /// Runs a classical circuit on a basis input; panics on dirty ancillas.
    fn eval(c: &Circuit, input: u128) -> u128 {
        let mut s = SparseState::from_value(c.width(), input, c.n_data());
        s.apply_circuit(c, &mut rng_from_seed(0)).unwrap();
        assert_eq!(s.len(), 1);
        let data: Vec<usize> = (0..c.n_data()).collect();
        let (amps, leak) = s.project(&data);
        assert!(leak < 1e-12, "ancilla left dirty");
        amps.iter().position(|a| a.norm() > 0.5).unwrap() as u128
    }

    fn field(v: u128, start: usize, n: usize) -> u64 {
        ((v >> start) as u64) & mask(n)
    }

    #[test]
    fn adder_examples_and_exhaustive() {
        let c = build_adder(&RegisterSpec::range(0, 4), &RegisterSpec::range(4, 4)).unwrap();
        assert_eq!(eval(&c, 3 | 5 << 4), 3 | 8 << 4);
        assert_eq!(eval(&c, 3 | 14 << 4), 3 | 1 << 4);
        let c3 = build_adder(&RegisterSpec::range(0, 3), &RegisterSpec::range(3, 3)).unwrap();
        let s3 = build_subtractor(&RegisterSpec::range(0, 3), &RegisterSpec::range(3, 3)).unwrap();
        for x in 0..8u128 {
            for y in 0..8u128 {
                assert_eq!(eval(&c3, x | y << 3), x | ((x + y) % 8) << 3);
                assert_eq!(eval(&s3, x | y << 3), x | ((y + 8 - x) % 8) << 3);
            }
        }
    }

    #[test]
    fn three_two_sum_is_preserved() {
        let r = |i: usize| RegisterSpec::range(3 * i, 3);
        let c = build_three_two(&r(0), &r(1), &r(2), &r(3), &r(4)).unwrap();
        for v in 0..512u128 {
            let out = eval(&c, v);
            let (x, y, z) = (field(v, 0, 3), field(v, 3, 3), field(v, 6, 3));
            assert_eq!((field(out, 9, 3) + field(out, 12, 3)) % 8, (x + y + z) % 8);
        }
        let r4 = |i: usize| RegisterSpec::range(4 * i, 4);
        let c4 = build_three_two(&r4(0), &r4(1), &r4(2), &r4(3), &r4(4)).unwrap();
        let out = eval(&c4, 7 | 6 << 4 | 5 << 8);
        assert_eq!((field(out, 12, 4) + field(out, 16, 4)) % 16, 2);
        assert_eq!(eval(&c4, 0), 0);
    }

    #[test]
    fn three_two_depth_is_constant() {
        let depth = |n: usize| {
            let r = |i: usize| RegisterSpec::range(n * i, n);
            build_three_two(&r(0), &r(1), &r(2), &r(3), &r(4)).unwrap().depth()
        };
        assert_eq!(depth(4), depth(16));
        let four = |n: usize| {
            let r = |i: usize| RegisterSpec::range(n * i, n);
            build_four_two(&r(0), &r(1), &r(2), &r(3), &r(4), &r(5)).unwrap().depth()
        };
        assert_eq!(four(4), four(16));
    }

    #[test]
    fn four_two_sum_is_preserved() {
        let r = |i: usize| RegisterSpec::range(2 * i, 2);
        let c = build_four_two(&r(0), &r(1), &r(2), &r(3), &r(4), &r(5)).unwrap();
        for v in 0..256u128 {
            let out = eval(&c, v);
            let total: u64 = (0..4).map(|i| field(v, 2 * i, 2)).sum();
            assert_eq!((field(out, 8, 2) + field(out, 10, 2)) % 4, total % 4);
            assert_eq!(field(out, 0, 8), field(v, 0, 8));
        }
    }

    #[test]
    fn prefix_xor_network() {
        let mut op = CircuitBuilder::new(2);
        op.cnot(0, 1);
        let op = op.finish();
        assert_eq!(prefix_combine(1, &op).unwrap().size(), 0);
        assert!(prefix_combine(0, &op).is_err());
        let c = prefix_combine(4, &op).unwrap();
        assert_eq!(eval(&c, 0b1111), 0b0101);
        for k in 1..=33usize {
            let c = prefix_combine(k, &op).unwrap();
            let inst: usize = c.meta().params["instances"].parse().unwrap();
            let depth: usize = c.meta().params["block_depth"].parse().unwrap();
            assert!(inst <= 4 * k);
            assert!(depth <= 2 * (k as f64).log2().ceil() as usize);
        }
    }

    #[test]
    fn prefix_add_and_telescoping() {
        let pa = prefix_add(4, 4).unwrap();
        assert_eq!(eval(&pa, 1 | 2 << 4 | 3 << 8 | 4 << 12), 1 | 3 << 4 | 6 << 8 | 10 << 12);
        let pa2 = prefix_add(2, 4).unwrap();
        assert_eq!(eval(&pa2, 15 | 1 << 4), 15);
        let ts = telescoping_subtract(4, 4).unwrap();
        assert_eq!(eval(&ts, 1 | 3 << 4 | 6 << 8 | 10 << 12), 1 | 2 << 4 | 3 << 8 | 4 << 12);
        let ts3 = telescoping_subtract(3, 3).unwrap();
        assert_eq!(eval(&ts3, 5 | 5 << 3 | 5 << 6), 5);
    }

    #[test]
    fn bennett_single_and() {
        let mut f = CircuitBuilder::new(3);
        let r = f.alloc_one();
        f.ccx(0, 1, r);
        let f = f.finish();
        let w = bennett_wrap(&f, &[r], &RegisterSpec::range(2, 1)).unwrap();
        assert_eq!(eval(&w, 0b011), 0b111);
        assert!(w.size() <= 2 * f.size() + 1);
        let mut bad = CircuitBuilder::new(3);
        bad.cnot(0, 2);
        assert!(bennett_wrap(&bad.finish(), &[0], &RegisterSpec::range(2, 1)).is_err());
    }

    #[test]
    fn multiplier_examples() {
        let c = build_multiplier(&RegisterSpec::range(0, 3), &RegisterSpec::range(3, 3), &RegisterSpec::range(6, 6))
            .unwrap();
        assert_eq!(field(eval(&c, 3 | 5 << 3), 6, 6), 15);
        assert_eq!(field(eval(&c, 6), 6, 6), 0);
    }

    #[test]
    fn iterated_product_example() {
        let c = iterated_product(&[7, 4, 1, 1], 15, &RegisterSpec::range(0, 4), &RegisterSpec::range(4, 4)).unwrap();
        assert_eq!(field(eval(&c, 0b0011), 4, 4), 13);
        assert_eq!(field(eval(&c, 0), 4, 4), 1);
        assert!(iterated_product(&[7, 4], 16, &RegisterSpec::range(0, 2), &RegisterSpec::range(2, 5)).is_err());
        assert!(iterated_product(&[17, 4], 15, &RegisterSpec::range(0, 2), &RegisterSpec::range(2, 4)).is_err());
    }

    #[test]
    fn overlap_is_rejected() {
        assert!(matches!(
            build_adder(&RegisterSpec::range(0, 3), &RegisterSpec::range(2, 3)),
            Err(ArithError::Overlap(2))
        ));
    }
}
