//! Exact product-state simulation over basis inputs.
//!
//! Every qubit holds a single Y-rotation angle `a * pi / 2^D` where `D` is the
//! finest denominator in the circuit. Bits are the angles 0 and pi.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, GateKind};

#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize)]
pub enum SimError {
    #[error("gate {gate}: control qubit {qubit} is not in a basis state")]
    NonBitControl { gate: usize, qubit: u32 },
    #[error("unknown register `{0}`")]
    UnknownRegister(String),
    #[error("value {value} does not fit register `{name}`")]
    ValueTooWide { name: String, value: String },
    #[error("register `{0}` does not decode to an integer")]
    Undecodable(String),
}

/// Decoded contents of a register.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum RegValue {
    Binary(BigUint),
    Fourier(BigUint),
}

impl RegValue {
    pub fn value(&self) -> &BigUint {
        match self {
            RegValue::Binary(v) | RegValue::Fourier(v) => v,
        }
    }
}

#[derive(Clone, Copy)]
struct Op {
    kind: GateKind,
    neg: u8,
    q: [u32; 3],
    angle: usize,
}

/// Arithmetic on angle cells modulo `2^(D+1)`.
trait Cell: Clone + PartialEq {
    fn empty() -> Self;
    fn add(&self, other: &Self, mask: &Self) -> Self;
    /// `pi - self`.
    fn reflect(&self, pi: &Self, mask: &Self) -> Self;
}

impl Cell for u128 {
    fn empty() -> Self {
        0
    }
    fn add(&self, other: &Self, mask: &Self) -> Self {
        self.wrapping_add(*other) & mask
    }
    fn reflect(&self, pi: &Self, mask: &Self) -> Self {
        pi.wrapping_sub(*self) & mask
    }
}

impl Cell for BigUint {
    fn empty() -> Self {
        BigUint::ZERO
    }
    fn add(&self, other: &Self, mask: &Self) -> Self {
        (self + other) & mask
    }
    fn reflect(&self, pi: &Self, mask: &Self) -> Self {
        (pi + mask + 1u32 - self) & mask
    }
}

struct Engine<T: Cell> {
    pi: T,
    mask: T,
    angles: Vec<T>,
}

/// A circuit compiled for repeated simulation.
pub struct Simulator<'c> {
    circuit: &'c Circuit,
    ops: Vec<Op>,
    depth: u32,
    small: Option<Engine<u128>>,
    big: Option<Engine<BigUint>>,
}

/// Snapshot of all qubit angles, in units of `pi / 2^depth`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimState {
    depth: u32,
    cells: Vec<BigUint>,
}

impl SimState {
    pub fn angle_units(&self, q: u32) -> &BigUint {
        &self.cells[q as usize]
    }

    pub fn bit(&self, q: u32) -> Option<bool> {
        let c = &self.cells[q as usize];
        if c.is_zero() {
            Some(false)
        } else if *c == BigUint::one() << self.depth as usize {
            Some(true)
        } else {
            None
        }
    }

    pub fn decode(&self, qubits: &[u32]) -> Option<RegValue> {
        decode(self.depth, qubits.iter().map(|&q| &self.cells[q as usize]))
    }

    /// True when every listed qubit holds |0>.
    pub fn all_zero(&self, qubits: &[u32]) -> bool {
        qubits.iter().all(|&q| self.cells[q as usize].is_zero())
    }
}

fn decode<'a>(depth: u32, cells: impl Iterator<Item = &'a BigUint> + Clone) -> Option<RegValue> {
    let pi = BigUint::one() << depth as usize;
    let mut v = BigUint::zero();
    let mut binary = true;
    for (k, c) in cells.clone().enumerate() {
        if *c == pi {
            v.set_bit(k as u64, true);
        } else if !c.is_zero() {
            binary = false;
            break;
        }
    }
    if binary {
        return Some(RegValue::Binary(v));
    }
    let w = cells.clone().count();
    let top = cells.clone().last()?;
    // qubit w-1 holds v*pi/2^(w-1), which fixes v mod 2^w
    let shift = w as i64 - 1 - depth as i64;
    let v = if shift >= 0 {
        (top << shift as usize) & ((BigUint::one() << w) - 1u32)
    } else {
        let s = (-shift) as usize;
        if top.trailing_zeros().unwrap_or(u64::MAX) < s as u64 {
            return None;
        }
        top >> s
    };
    let modulus_mask = (BigUint::one() << (depth as usize + 1)) - 1u32;
    for (k, c) in cells.enumerate() {
        let expect = if k as u32 <= depth {
            (&v << (depth as usize - k)) & &modulus_mask
        } else {
            let s = k - depth as usize;
            if v.trailing_zeros().unwrap_or(u64::MAX) < s as u64 {
                return None;
            }
            (&v >> s) & &modulus_mask
        };
        if *c != expect {
            return None;
        }
    }
    Some(RegValue::Fourier(v))
}

impl<'c> Simulator<'c> {
    pub fn new(circuit: &'c Circuit) -> Simulator<'c> {
        let depth = circuit
            .gates
            .iter()
            .filter_map(|g| g.angle().map(|a| a.log2_den()))
            .max()
            .unwrap_or(0);
        let mut raw_angles = Vec::new();
        let ops = circuit
            .gates
            .iter()
            .map(|g| {
                let qs = g.qubits();
                let mut q = [0u32; 3];
                q[..qs.len()].copy_from_slice(qs);
                let neg = g.controls().enumerate().fold(0u8, |m, (i, c)| m | (c.neg as u8) << i);
                let angle = match g.angle() {
                    Some(a) => {
                        raw_angles.push(a.scaled(depth));
                        raw_angles.len() - 1
                    }
                    None => usize::MAX,
                };
                Op { kind: g.kind(), neg, q, angle }
            })
            .collect();
        let (small, big) = if depth + 1 < 127 {
            let angles = raw_angles.iter().map(|a| to_u128(a)).collect();
            let e = Engine { pi: 1u128 << depth, mask: (1u128 << (depth + 1)) - 1, angles };
            (Some(e), None)
        } else {
            let pi = BigUint::one() << depth as usize;
            let mask = (BigUint::one() << (depth as usize + 1)) - 1u32;
            (None, Some(Engine { pi, mask, angles: raw_angles }))
        };
        Simulator { circuit, ops, depth, small, big }
    }

    pub fn circuit(&self) -> &Circuit {
        self.circuit
    }

    fn initial(&self, inputs: &BTreeMap<String, BigUint>) -> Result<Vec<bool>, SimError> {
        let mut bits = vec![false; self.circuit.qubit_count as usize];
        for (name, value) in inputs {
            let qs: &[u32] = match self.circuit.register(name) {
                Some(r) => &r.qubits,
                None => self
                    .circuit
                    .meta
                    .views
                    .get(name)
                    .ok_or_else(|| SimError::UnknownRegister(name.clone()))?,
            };
            if value.bits() as usize > qs.len() {
                return Err(SimError::ValueTooWide { name: name.clone(), value: value.to_string() });
            }
            for (k, &q) in qs.iter().enumerate() {
                bits[q as usize] = value.bit(k as u64);
            }
        }
        Ok(bits)
    }

    /// Runs the whole circuit.
    pub fn run(&self, inputs: &BTreeMap<String, BigUint>) -> Result<SimState, SimError> {
        Ok(self.run_with_snapshots(inputs, &[])?.pop().expect("final state"))
    }

    /// Runs the circuit and returns the state before each listed gate index
    /// (sorted ascending), followed by the final state.
    pub fn run_with_snapshots(
        &self,
        inputs: &BTreeMap<String, BigUint>,
        at: &[usize],
    ) -> Result<Vec<SimState>, SimError> {
        let bits = self.initial(inputs)?;
        match (&self.small, &self.big) {
            (Some(e), _) => {
                let cells: Vec<u128> = bits.iter().map(|&b| if b { e.pi } else { 0 }).collect();
                let snaps = self.exec(e, cells, at)?;
                Ok(snaps
                    .into_iter()
                    .map(|c| SimState { depth: self.depth, cells: c.into_iter().map(BigUint::from).collect() })
                    .collect())
            }
            (_, Some(e)) => {
                let cells: Vec<BigUint> =
                    bits.iter().map(|&b| if b { e.pi.clone() } else { BigUint::zero() }).collect();
                let snaps = self.exec(e, cells, at)?;
                Ok(snaps.into_iter().map(|cells| SimState { depth: self.depth, cells }).collect())
            }
            _ => unreachable!(),
        }
    }

    fn exec<T: Cell>(&self, e: &Engine<T>, mut cells: Vec<T>, at: &[usize]) -> Result<Vec<Vec<T>>, SimError> {
        let zero = T::empty();
        let mut snaps = Vec::with_capacity(at.len() + 1);
        let mut next = at.iter().peekable();
        for (i, op) in self.ops.iter().enumerate() {
            while next.peek().is_some_and(|&&k| k == i) {
                snaps.push(cells.clone());
                next.next();
            }
            let nc = op.kind.num_controls();
            let mut fire = true;
            for j in 0..nc {
                let q = op.q[j];
                let c = &cells[q as usize];
                let bit = if *c == zero {
                    false
                } else if *c == e.pi {
                    true
                } else {
                    return Err(SimError::NonBitControl { gate: i, qubit: q });
                };
                fire &= bit != (op.neg >> j & 1 == 1);
            }
            if !fire {
                continue;
            }
            let t = op.q[nc] as usize;
            match op.kind {
                GateKind::X | GateKind::CX | GateKind::CCX => cells[t] = cells[t].reflect(&e.pi, &e.mask),
                GateKind::SWAP | GateKind::CSWAP => cells.swap(t, op.q[nc + 1] as usize),
                GateKind::RY | GateKind::CRY => cells[t] = cells[t].add(&e.angles[op.angle], &e.mask),
            }
        }
        while next.next().is_some() {
            snaps.push(cells.clone());
        }
        snaps.push(cells);
        Ok(snaps)
    }

    /// Decoded value of every register in the final state.
    pub fn outputs(&self, state: &SimState) -> Result<BTreeMap<String, BigUint>, SimError> {
        self.circuit
            .registers
            .iter()
            .map(|r| {
                state
                    .decode(&r.qubits)
                    .map(|v| (r.name.clone(), v.value().clone()))
                    .ok_or_else(|| SimError::Undecodable(r.name.clone()))
            })
            .collect()
    }
}

fn to_u128(v: &BigUint) -> u128 {
    let d = v.to_u64_digits();
    d.first().copied().unwrap_or(0) as u128 | (d.get(1).copied().unwrap_or(0) as u128) << 64
}

/// Simulates `c` on the given register values and decodes every register.
pub fn simulate(c: &Circuit, inputs: &[(&str, u64)]) -> Result<BTreeMap<String, BigUint>, SimError> {
    let inputs = inputs.iter().map(|&(n, v)| (n.to_string(), BigUint::from(v))).collect();
    let sim = Simulator::new(c);
    let state = sim.run(&inputs)?;
    sim.outputs(&state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angle::DyadicAngle;
    use crate::builder::Builder;
    use crate::circuit::{Ctl, Role};

    #[test]
    fn toffoli_truth_table() {
        let mut b = Builder::new();
        let a = b.reg("a", 2, Role::Input);
        let t = b.reg("t", 1, Role::Output);
        b.ccx(a[0], a[1], t[0]);
        let c = b.finish();
        for v in 0..4u64 {
            let out = simulate(&c, &[("a", v)]).unwrap();
            assert_eq!(out["t"], BigUint::from((v == 3) as u32));
        }
    }

    #[test]
    fn negated_controls_and_swaps() {
        let mut b = Builder::new();
        let a = b.reg("a", 3, Role::Input);
        b.cswap(Ctl::neg(a[0]), a[1], a[2]);
        let c = b.finish();
        assert_eq!(simulate(&c, &[("a", 0b010)]).unwrap()["a"], BigUint::from(0b100u32));
        assert_eq!(simulate(&c, &[("a", 0b011)]).unwrap()["a"], BigUint::from(0b011u32));
    }

    #[test]
    fn rotation_control_must_be_a_bit() {
        let mut b = Builder::new();
        let a = b.reg("a", 2, Role::Input);
        b.ry(a[0], DyadicAngle::from_i64(1, 1).unwrap());
        b.cx(a[0], a[1]);
        let c = b.finish();
        assert_eq!(simulate(&c, &[]), Err(SimError::NonBitControl { gate: 1, qubit: a[0] }));
    }

    #[test]
    fn x_reflects_angles() {
        let mut b = Builder::new();
        let a = b.reg("a", 1, Role::Input);
        b.ry(a[0], DyadicAngle::from_i64(1, 2).unwrap());
        b.x(a[0]);
        b.ry(a[0], DyadicAngle::from_i64(1, 2).unwrap());
        let c = b.finish();
        // pi - pi/4 + pi/4 = pi
        assert_eq!(simulate(&c, &[]).unwrap()["a"], BigUint::one());
    }

    #[test]
    fn fourier_decoding() {
        // qubit k of value 5 on 3 qubits: 5pi, 5pi/2, 5pi/4
        let st = SimState {
            depth: 2,
            cells: vec![BigUint::from(4u32), BigUint::from(2u32), BigUint::from(5u32)],
        };
        assert_eq!(st.decode(&[0, 1, 2]), Some(RegValue::Fourier(BigUint::from(5u32))));
        let bad = SimState { depth: 2, cells: vec![BigUint::zero(), BigUint::from(2u32), BigUint::from(5u32)] };
        assert_eq!(bad.decode(&[0, 1, 2]), None);
    }

    #[test]
    fn snapshots_in_order() {
        let mut b = Builder::new();
        let a = b.reg("a", 1, Role::Input);
        b.x(a[0]);
        b.x(a[0]);
        let c = b.finish();
        let sim = Simulator::new(&c);
        let s = sim.run_with_snapshots(&BTreeMap::new(), &[1, 2]).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s[0].bit(0), Some(true));
        assert_eq!(s[1].bit(0), Some(false));
    }
}
