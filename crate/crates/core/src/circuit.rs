//! Layered circuit IR over typed wires with exact dyadic phases.
//!
//! Quantum wires are numbered `0..width`: data wires first, then ancillas.
//! Classical wires live in their own index space. Every [`Circuit`] is kept
//! ASAP-compacted, and gates inside a layer are ordered by lowest wire index,
//! so structural equality is equality of gate multisets per layer.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Deref;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("structural error: {0}")]
    Structural(String),
    #[error("circuit contains a measurement and cannot be inverted")]
    NonInvertible,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: `{literal}` is not a dyadic angle")]
    NonDyadic { line: usize, literal: String },
    #[error("value error: {0}")]
    Value(String),
}

pub type CircuitResult<T> = Result<T, CircuitError>;

/// Largest supported `log_denominator`.
pub const MAX_LOG_DEN: u32 = 64;

/// Phase `numerator / 2^log_denominator` turns, reduced and normalized into `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicAngle {
    num: u64,
    log_den: u32,
}

impl DyadicAngle {
    pub const ZERO: DyadicAngle = DyadicAngle { num: 0, log_den: 0 };

    pub fn new(numerator: i128, log_denominator: u32) -> CircuitResult<Self> {
        if log_denominator > MAX_LOG_DEN {
            return Err(CircuitError::Value(format!(
                "log denominator {log_denominator} exceeds {MAX_LOG_DEN}"
            )));
        }
        let modulus = 1i128 << log_denominator;
        Ok(Self::reduce(numerator.rem_euclid(modulus) as u128, log_denominator))
    }

    /// The angle `1 / 2^k`.
    pub fn pow2_inv(k: u32) -> Self {
        Self::new(1, k).expect("k within range")
    }

    fn reduce(mut num: u128, mut log_den: u32) -> Self {
        if num == 0 {
            return Self::ZERO;
        }
        while num.is_multiple_of(2) {
            num /= 2;
            log_den -= 1;
        }
        DyadicAngle { num: num as u64, log_den }
    }

    pub fn numerator(&self) -> u64 {
        self.num
    }

    pub fn log_denominator(&self) -> u32 {
        self.log_den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn turns(&self) -> f64 {
        self.num as f64 * 2f64.powi(-(self.log_den as i32))
    }

    /// Additive inverse modulo one.
    #[allow(clippy::should_implement_trait)]
    pub fn neg(self) -> Self {
        if self.is_zero() {
            return self;
        }
        Self::reduce((1u128 << self.log_den) - self.num as u128, self.log_den)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(self, other: Self) -> Self {
        let l = self.log_den.max(other.log_den);
        let a = (self.num as u128) << (l - self.log_den);
        let b = (other.num as u128) << (l - other.log_den);
        Self::reduce((a + b) % (1u128 << l), l)
    }

    /// Accepts `a/2^b`, `a/d` with `d` a power of two, or a bare integer.
    pub fn parse(text: &str) -> Result<Self, String> {
        let bad = || format!("`{text}` is not a dyadic angle");
        let (num_txt, den_txt) = match text.split_once('/') {
            Some((a, b)) => (a, Some(b)),
            None => (text, None),
        };
        let num: i128 = num_txt.parse().map_err(|_| bad())?;
        let log_den = match den_txt {
            None => 0,
            Some(d) => {
                if let Some(exp) = d.strip_prefix("2^") {
                    exp.parse::<u32>().map_err(|_| bad())?
                } else {
                    let den: u128 = d.parse().map_err(|_| bad())?;
                    if den == 0 || !den.is_power_of_two() {
                        return Err(bad());
                    }
                    den.trailing_zeros()
                }
            }
        };
        Self::new(num, log_den).map_err(|e| e.to_string())
    }
}

impl fmt::Display for DyadicAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.num, self.log_den)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WireKind {
    Data,
    Ancilla,
    Classical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Wire {
    pub index: usize,
    pub kind: WireKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    fn tag(self) -> &'static str {
        match self {
            Basis::X => "x",
            Basis::Y => "y",
            Basis::Z => "z",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    H(usize),
    X(usize),
    P(usize, DyadicAngle),
    /// Symmetric in its two wires; constructed with the smaller index first.
    CP(usize, usize, DyadicAngle),
    Cnot(usize, usize),
    Toffoli(usize, usize, usize),
    Measure { qubit: usize, basis: Basis, out: usize },
}

/// Quantum wires touched by a gate.
#[derive(Clone, Copy, Debug)]
pub struct Support {
    wires: [usize; 3],
    len: usize,
}

impl Deref for Support {
    type Target = [usize];
    fn deref(&self) -> &[usize] {
        &self.wires[..self.len]
    }
}

impl Gate {
    pub fn cp(a: usize, b: usize, theta: DyadicAngle) -> Gate {
        Gate::CP(a.min(b), a.max(b), theta)
    }

    pub fn support(&self) -> Support {
        let (wires, len) = match *self {
            Gate::H(t) | Gate::X(t) | Gate::P(t, _) => ([t, 0, 0], 1),
            Gate::Measure { qubit, .. } => ([qubit, 0, 0], 1),
            Gate::CP(a, b, _) | Gate::Cnot(a, b) => ([a, b, 0], 2),
            Gate::Toffoli(a, b, c) => ([a, b, c], 3),
        };
        Support { wires, len }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Gate::H(_) => "h",
            Gate::X(_) => "x",
            Gate::P(..) => "p",
            Gate::CP(..) => "cp",
            Gate::Cnot(..) => "cnot",
            Gate::Toffoli(..) => "ccx",
            Gate::Measure { .. } => "meas",
        }
    }

    /// `None` for measurements.
    pub fn inverse(&self) -> Option<Gate> {
        match *self {
            Gate::P(t, th) => Some(Gate::P(t, th.neg())),
            Gate::CP(a, b, th) => Some(Gate::CP(a, b, th.neg())),
            Gate::Measure { .. } => None,
            g => Some(g),
        }
    }

    pub fn is_classical_reversible(&self) -> bool {
        matches!(self, Gate::X(_) | Gate::Cnot(..) | Gate::Toffoli(..))
    }

    fn remap(&self, q: impl Fn(usize) -> usize, c: impl Fn(usize) -> usize) -> Gate {
        match *self {
            Gate::H(t) => Gate::H(q(t)),
            Gate::X(t) => Gate::X(q(t)),
            Gate::P(t, th) => Gate::P(q(t), th),
            Gate::CP(a, b, th) => Gate::cp(q(a), q(b), th),
            Gate::Cnot(a, b) => Gate::Cnot(q(a), q(b)),
            Gate::Toffoli(a, b, t) => Gate::Toffoli(q(a), q(b), q(t)),
            Gate::Measure { qubit, basis, out } => Gate::Measure { qubit: q(qubit), basis, out: c(out) },
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::H(t) => write!(f, "h {t}"),
            Gate::X(t) => write!(f, "x {t}"),
            Gate::P(t, th) => write!(f, "p {th} {t}"),
            Gate::CP(a, b, th) => write!(f, "cp {th} {a} {b}"),
            Gate::Cnot(c, t) => write!(f, "cnot {c} {t}"),
            Gate::Toffoli(a, b, t) => write!(f, "ccx {a} {b} {t}"),
            Gate::Measure { qubit, basis, out } => write!(f, "meas {} {qubit} -> c{out}", basis.tag()),
        }
    }
}

/// Free-form provenance attached by builders.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Metadata {
    pub name: String,
    pub params: BTreeMap<String, String>,
    /// `output_order[b]` is the wire carrying bit `b` (LSB first) of the result register.
    pub output_order: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    n_data: usize,
    n_ancilla: usize,
    n_classical: usize,
    layers: Vec<Vec<Gate>>,
    meta: Metadata,
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Metrics {
    pub size: usize,
    pub depth: usize,
    pub width: usize,
    pub gate_histogram: BTreeMap<String, usize>,
}

impl Circuit {
    pub fn empty(n_data: usize) -> Circuit {
        CircuitBuilder::new(n_data).finish()
    }

    pub fn n_data(&self) -> usize {
        self.n_data
    }

    pub fn n_ancilla(&self) -> usize {
        self.n_ancilla
    }

    pub fn n_classical(&self) -> usize {
        self.n_classical
    }

    /// Number of quantum wires.
    pub fn width(&self) -> usize {
        self.n_data + self.n_ancilla
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn size(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn layers(&self) -> &[Vec<Gate>] {
        &self.layers
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> + '_ {
        self.layers.iter().flatten()
    }

    pub fn meta(&self) -> &Metadata {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut Metadata {
        &mut self.meta
    }

    pub fn with_name(mut self, name: &str) -> Circuit {
        self.meta.name = name.to_string();
        self
    }

    pub fn with_param(mut self, key: &str, value: impl fmt::Display) -> Circuit {
        self.meta.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn with_output_order(mut self, order: Vec<usize>) -> Circuit {
        self.meta.output_order = Some(order);
        self
    }

    pub fn wires(&self) -> Vec<Wire> {
        let quantum = (0..self.width()).map(|index| Wire {
            index,
            kind: if index < self.n_data { WireKind::Data } else { WireKind::Ancilla },
        });
        let classical = (0..self.n_classical).map(|index| Wire { index, kind: WireKind::Classical });
        quantum.chain(classical).collect()
    }

    pub fn has_measurement(&self) -> bool {
        self.gates().any(|g| matches!(g, Gate::Measure { .. }))
    }

    pub fn is_classical_reversible(&self) -> bool {
        self.gates().all(Gate::is_classical_reversible)
    }

    pub fn metrics(&self) -> Metrics {
        let mut gate_histogram = BTreeMap::new();
        for g in self.gates() {
            *gate_histogram.entry(g.tag().to_string()).or_insert(0) += 1;
        }
        Metrics { size: self.size(), depth: self.depth(), width: self.width(), gate_histogram }
    }

    /// Same circuit rewritten over {H, P, CP} (measurements kept).
    pub fn lowered(&self) -> Circuit {
        let mut b = CircuitBuilder::like(self);
        let half = DyadicAngle::pow2_inv(1);
        let quarter = DyadicAngle::pow2_inv(2);
        for g in self.gates() {
            match *g {
                Gate::X(t) => {
                    b.h(t);
                    b.p(t, half);
                    b.h(t);
                }
                Gate::Cnot(c, t) => {
                    b.h(t);
                    b.cp(c, t, half);
                    b.h(t);
                }
                Gate::Toffoli(a, c, t) => {
                    // controlled-sqrt(Z) ladder: b - (a xor b) + a = 2ab quarter turns
                    b.h(t);
                    b.cp(c, t, quarter);
                    b.h(c);
                    b.cp(a, c, half);
                    b.h(c);
                    b.cp(c, t, quarter.neg());
                    b.h(c);
                    b.cp(a, c, half);
                    b.h(c);
                    b.cp(a, t, quarter);
                    b.h(t);
                }
                g => b.push(g),
            }
        }
        let mut out = b.finish();
        out.meta = self.meta.clone();
        out
    }

    pub fn lowered_metrics(&self) -> Metrics {
        self.lowered().metrics()
    }

    /// Data-wire inputs on which quantum wire `out` can depend.
    pub fn light_cone(&self, out: usize) -> CircuitResult<BTreeSet<usize>> {
        if out >= self.width() {
            return Err(CircuitError::Structural(format!("unknown quantum wire {out}")));
        }
        let mut cone = BTreeSet::from([out]);
        for layer in self.layers.iter().rev() {
            for g in layer {
                let s = g.support();
                if s.iter().any(|w| cone.contains(w)) {
                    cone.extend(s.iter().copied());
                }
            }
        }
        Ok(cone)
    }

    pub fn encode_netlist(&self) -> String {
        let mut s = format!("qubits {} ancilla {} classical {}\n", self.n_data, self.n_ancilla, self.n_classical);
        if !self.meta.name.is_empty() {
            s.push_str(&format!("#@ name {}\n", self.meta.name));
        }
        for (k, v) in &self.meta.params {
            s.push_str(&format!("#@ param {k} {v}\n"));
        }
        if let Some(order) = &self.meta.output_order {
            let list: Vec<String> = order.iter().map(usize::to_string).collect();
            s.push_str(&format!("#@ order {}\n", list.join(" ")));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            if i > 0 {
                s.push_str("---\n");
            }
            for g in layer {
                s.push_str(&g.to_string());
                s.push('\n');
            }
        }
        s
    }

    pub fn decode_netlist(text: &str) -> CircuitResult<Circuit> {
        netlist::decode(text)
    }
}

/// Sequential builder; every pushed gate lands in the earliest layer after
/// all previous gates on its wires.
#[derive(Clone, Debug)]
pub struct CircuitBuilder {
    n_data: usize,
    n_ancilla: usize,
    n_classical: usize,
    layers: Vec<Vec<Gate>>,
    frontier: Vec<usize>,
    cfrontier: Vec<usize>,
    log: Vec<Gate>,
}

impl CircuitBuilder {
    pub fn new(n_data: usize) -> CircuitBuilder {
        CircuitBuilder {
            n_data,
            n_ancilla: 0,
            n_classical: 0,
            layers: Vec::new(),
            frontier: vec![0; n_data],
            cfrontier: Vec::new(),
            log: Vec::new(),
        }
    }

    /// Empty builder with the same wire counts as `c`.
    pub fn like(c: &Circuit) -> CircuitBuilder {
        let mut b = CircuitBuilder::new(c.n_data);
        b.alloc(c.n_ancilla);
        b.alloc_classical(c.n_classical);
        b
    }

    pub fn n_data(&self) -> usize {
        self.n_data
    }

    pub fn width(&self) -> usize {
        self.n_data + self.n_ancilla
    }

    /// Fresh ancilla wires, assumed to start in |0>.
    pub fn alloc(&mut self, count: usize) -> Vec<usize> {
        let start = self.width();
        self.n_ancilla += count;
        self.frontier.resize(self.width(), 0);
        (start..start + count).collect()
    }

    pub fn alloc_one(&mut self) -> usize {
        self.alloc(1)[0]
    }

    pub fn alloc_classical(&mut self, count: usize) -> Vec<usize> {
        let start = self.n_classical;
        self.n_classical += count;
        self.cfrontier.resize(self.n_classical, 0);
        (start..start + count).collect()
    }

    pub fn try_push(&mut self, g: Gate) -> CircuitResult<()> {
        let s = g.support();
        for (i, &w) in s.iter().enumerate() {
            if w >= self.width() {
                return Err(CircuitError::Structural(format!("gate `{g}` uses unknown wire {w}")));
            }
            if s[..i].contains(&w) {
                return Err(CircuitError::Structural(format!("gate `{g}` repeats wire {w}")));
            }
        }
        let mut layer = s.iter().map(|&w| self.frontier[w]).max().unwrap_or(0);
        if let Gate::Measure { out, .. } = g {
            if out >= self.n_classical {
                return Err(CircuitError::Structural(format!("gate `{g}` uses unknown classical wire {out}")));
            }
            layer = layer.max(self.cfrontier[out]);
            self.cfrontier[out] = layer + 1;
        }
        for &w in s.iter() {
            self.frontier[w] = layer + 1;
        }
        if layer == self.layers.len() {
            self.layers.push(Vec::new());
        }
        self.layers[layer].push(g);
        self.log.push(g);
        Ok(())
    }

    /// Panics on malformed gates; builders only emit gates over wires they own.
    pub fn push(&mut self, g: Gate) {
        if let Err(e) = self.try_push(g) {
            panic!("{e}");
        }
    }

    pub fn h(&mut self, t: usize) {
        self.push(Gate::H(t));
    }

    pub fn x(&mut self, t: usize) {
        self.push(Gate::X(t));
    }

    pub fn p(&mut self, t: usize, theta: DyadicAngle) {
        if !theta.is_zero() {
            self.push(Gate::P(t, theta));
        }
    }

    pub fn cp(&mut self, a: usize, b: usize, theta: DyadicAngle) {
        if !theta.is_zero() {
            self.push(Gate::cp(a, b, theta));
        }
    }

    pub fn cnot(&mut self, c: usize, t: usize) {
        self.push(Gate::Cnot(c, t));
    }

    pub fn ccx(&mut self, a: usize, b: usize, t: usize) {
        self.push(Gate::Toffoli(a, b, t));
    }

    pub fn measure(&mut self, qubit: usize, basis: Basis, out: usize) {
        self.push(Gate::Measure { qubit, basis, out });
    }

    /// Position in the emitted gate sequence, for later [`Self::gates_since`].
    pub fn mark(&self) -> usize {
        self.log.len()
    }

    pub fn gates_since(&self, mark: usize) -> Vec<Gate> {
        self.log[mark..].to_vec()
    }

    /// Emits the inverse of a gate sequence (reversed, each gate inverted).
    pub fn push_inverse(&mut self, gates: &[Gate]) {
        for g in gates.iter().rev() {
            self.push(g.inverse().expect("measurement-free sequence"));
        }
    }

    /// Appends `c` with its data wire `i` mapped to `data_map[i]`; its ancillas
    /// and classical wires become fresh wires here.
    pub fn append(&mut self, c: &Circuit, data_map: &[usize]) -> CircuitResult<()> {
        let (qmap, cmap) = self.mapping_for(c, data_map)?;
        for g in c.gates() {
            self.try_push(g.remap(|w| qmap[w], |w| cmap[w]))?;
        }
        Ok(())
    }

    pub fn append_inverse(&mut self, c: &Circuit, data_map: &[usize]) -> CircuitResult<()> {
        if c.has_measurement() {
            return Err(CircuitError::NonInvertible);
        }
        let (qmap, cmap) = self.mapping_for(c, data_map)?;
        let gates: Vec<Gate> = c.gates().collect::<Vec<_>>().into_iter().rev().copied().collect();
        for g in gates {
            self.try_push(g.inverse().expect("checked").remap(|w| qmap[w], |w| cmap[w]))?;
        }
        Ok(())
    }

    fn mapping_for(&mut self, c: &Circuit, data_map: &[usize]) -> CircuitResult<(Vec<usize>, Vec<usize>)> {
        if data_map.len() != c.n_data {
            return Err(CircuitError::Structural(format!(
                "wire map has {} entries for {} data wires",
                data_map.len(),
                c.n_data
            )));
        }
        let distinct: BTreeSet<usize> = data_map.iter().copied().collect();
        if distinct.len() != data_map.len() {
            return Err(CircuitError::Structural("wire map is not injective".into()));
        }
        if let Some(&w) = data_map.iter().find(|&&w| w >= self.width()) {
            return Err(CircuitError::Structural(format!("wire map targets unknown wire {w}")));
        }
        let mut qmap = data_map.to_vec();
        qmap.extend(self.alloc(c.n_ancilla));
        let cmap = self.alloc_classical(c.n_classical);
        Ok((qmap, cmap))
    }

    pub fn finish(mut self) -> Circuit {
        for layer in &mut self.layers {
            layer.sort_by_key(|g| g.support().iter().copied().min().unwrap_or(0));
        }
        Circuit {
            n_data: self.n_data,
            n_ancilla: self.n_ancilla,
            n_classical: self.n_classical,
            layers: self.layers,
            meta: Metadata::default(),
        }
    }
}

/// `a` followed by `b`, with `b`'s data wire `i` on `a`'s wire `wire_map[i]`.
pub fn compose(a: &Circuit, b: &Circuit, wire_map: &[usize]) -> CircuitResult<Circuit> {
    let mut builder = CircuitBuilder::like(a);
    for g in a.gates() {
        builder.push(*g);
    }
    builder.append(b, wire_map)?;
    let mut out = builder.finish();
    out.meta = a.meta.clone();
    Ok(out)
}

pub fn inverse(c: &Circuit) -> CircuitResult<Circuit> {
    let mut builder = CircuitBuilder::new(c.n_data);
    let identity: Vec<usize> = (0..c.n_data).collect();
    builder.append_inverse(c, &identity)?;
    let mut out = builder.finish();
    out.meta = c.meta.clone();
    Ok(out)
}

mod netlist {
    use super::*;

    fn parse_err(line: usize, msg: impl Into<String>) -> CircuitError {
        CircuitError::Parse { line, msg: msg.into() }
    }

    fn index(tok: Option<&str>, line: usize, what: &str) -> CircuitResult<usize> {
        let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
        tok.parse().map_err(|_| parse_err(line, format!("bad {what} `{tok}`")))
    }

    fn angle(tok: Option<&str>, line: usize) -> CircuitResult<DyadicAngle> {
        let tok = tok.ok_or_else(|| parse_err(line, "missing angle"))?;
        let looks_numeric = tok.chars().all(|c| c.is_ascii_digit() || "-+/^.eE".contains(c));
        if !looks_numeric {
            return Err(parse_err(line, format!("bad angle `{tok}`")));
        }
        DyadicAngle::parse(tok).map_err(|_| CircuitError::NonDyadic { line, literal: tok.to_string() })
    }

    pub(super) fn decode(text: &str) -> CircuitResult<Circuit> {
        let mut builder: Option<CircuitBuilder> = None;
        let mut meta = Metadata::default();
        let mut layer_wires: BTreeSet<usize> = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if let Some(pragma) = trimmed.strip_prefix("#@") {
                let mut toks = pragma.split_whitespace();
                match toks.next() {
                    Some("name") => meta.name = toks.collect::<Vec<_>>().join(" "),
                    Some("param") => {
                        let k = toks.next().ok_or_else(|| parse_err(line, "param without key"))?;
                        meta.params.insert(k.to_string(), toks.collect::<Vec<_>>().join(" "));
                    }
                    Some("order") => {
                        let order = toks
                            .map(|t| t.parse::<usize>().map_err(|_| parse_err(line, format!("bad wire `{t}`"))))
                            .collect::<CircuitResult<Vec<_>>>()?;
                        meta.output_order = Some(order);
                    }
                    _ => {}
                }
                continue;
            }
            let content = trimmed.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut toks = content.split_whitespace();
            let head = toks.next().unwrap_or_default();
            let Some(b) = builder.as_mut() else {
                if head != "qubits" {
                    return Err(parse_err(line, "expected header `qubits <n> ancilla <m> classical <k>`"));
                }
                let n = index(toks.next(), line, "qubit count")?;
                if toks.next() != Some("ancilla") {
                    return Err(parse_err(line, "expected `ancilla`"));
                }
                let m = index(toks.next(), line, "ancilla count")?;
                if toks.next() != Some("classical") {
                    return Err(parse_err(line, "expected `classical`"));
                }
                let k = index(toks.next(), line, "classical count")?;
                let mut nb = CircuitBuilder::new(n);
                nb.alloc(m);
                nb.alloc_classical(k);
                builder = Some(nb);
                continue;
            };
            if head == "---" {
                layer_wires.clear();
                continue;
            }
            let gate = match head {
                "h" => Gate::H(index(toks.next(), line, "wire")?),
                "x" => Gate::X(index(toks.next(), line, "wire")?),
                "p" => {
                    let th = angle(toks.next(), line)?;
                    Gate::P(index(toks.next(), line, "wire")?, th)
                }
                "cp" => {
                    let th = angle(toks.next(), line)?;
                    let a = index(toks.next(), line, "wire")?;
                    Gate::cp(a, index(toks.next(), line, "wire")?, th)
                }
                "cnot" => {
                    let c = index(toks.next(), line, "wire")?;
                    Gate::Cnot(c, index(toks.next(), line, "wire")?)
                }
                "ccx" => {
                    let a = index(toks.next(), line, "wire")?;
                    let c = index(toks.next(), line, "wire")?;
                    Gate::Toffoli(a, c, index(toks.next(), line, "wire")?)
                }
                "meas" => {
                    let basis = match toks.next() {
                        Some("x") => Basis::X,
                        Some("y") => Basis::Y,
                        Some("z") => Basis::Z,
                        other => return Err(parse_err(line, format!("bad basis {other:?}"))),
                    };
                    let qubit = index(toks.next(), line, "wire")?;
                    if toks.next() != Some("->") {
                        return Err(parse_err(line, "expected `->`"));
                    }
                    let c = toks.next().ok_or_else(|| parse_err(line, "missing classical wire"))?;
                    let out = index(c.strip_prefix('c'), line, "classical wire")?;
                    Gate::Measure { qubit, basis, out }
                }
                other => return Err(parse_err(line, format!("unknown gate `{other}`"))),
            };
            if let Some(extra) = toks.next() {
                return Err(parse_err(line, format!("unexpected token `{extra}`")));
            }
            for &w in gate.support().iter() {
                if !layer_wires.insert(w) {
                    return Err(parse_err(line, format!("wire {w} used twice in one layer")));
                }
            }
            b.try_push(gate).map_err(|e| parse_err(line, e.to_string()))?;
        }
        let builder = builder.ok_or_else(|| parse_err(1, "missing header"))?;
        let mut c = builder.finish();
        c.meta = meta;
        Ok(c)
    }
}
