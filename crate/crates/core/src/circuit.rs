//! Gate-level circuit representation.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle::DyadicAngle;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateKind {
    X,
    CX,
    CCX,
    SWAP,
    CSWAP,
    RY,
    CRY,
}

impl GateKind {
    pub const ALL: [GateKind; 7] = [
        GateKind::X,
        GateKind::CX,
        GateKind::CCX,
        GateKind::SWAP,
        GateKind::CSWAP,
        GateKind::RY,
        GateKind::CRY,
    ];

    pub fn num_controls(self) -> usize {
        match self {
            GateKind::X | GateKind::SWAP | GateKind::RY => 0,
            GateKind::CX | GateKind::CSWAP | GateKind::CRY => 1,
            GateKind::CCX => 2,
        }
    }

    pub fn num_targets(self) -> usize {
        match self {
            GateKind::SWAP | GateKind::CSWAP => 2,
            _ => 1,
        }
    }

    pub fn arity(self) -> usize {
        self.num_controls() + self.num_targets()
    }

    pub fn has_angle(self) -> bool {
        matches!(self, GateKind::RY | GateKind::CRY)
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::X => "X",
            GateKind::CX => "CX",
            GateKind::CCX => "CCX",
            GateKind::SWAP => "SWAP",
            GateKind::CSWAP => "CSWAP",
            GateKind::RY => "RY",
            GateKind::CRY => "CRY",
        }
    }

    pub fn from_name(s: &str) -> Option<GateKind> {
        GateKind::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A control qubit, optionally negated (fires on |0>).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Ctl {
    pub q: u32,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub neg: bool,
}

impl Ctl {
    pub fn pos(q: u32) -> Ctl {
        Ctl { q, neg: false }
    }
    pub fn neg(q: u32) -> Ctl {
        Ctl { q, neg: true }
    }
    pub fn flip(self) -> Ctl {
        Ctl { q: self.q, neg: !self.neg }
    }
}

impl From<u32> for Ctl {
    fn from(q: u32) -> Ctl {
        Ctl::pos(q)
    }
}

/// One gate. Controls come first in `qubits`; bit `i` of `neg` negates control `i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "GateRepr", try_from = "GateRepr")]
pub struct Gate {
    kind: GateKind,
    neg: u8,
    qubits: [u32; 3],
    angle: Option<Box<DyadicAngle>>,
}

impl Gate {
    pub fn new(
        kind: GateKind,
        controls: &[Ctl],
        targets: &[u32],
        angle: Option<DyadicAngle>,
    ) -> Result<Gate, CircuitError> {
        if controls.len() != kind.num_controls() || targets.len() != kind.num_targets() {
            return Err(CircuitError::Arity(kind));
        }
        if kind.has_angle() != angle.is_some() {
            return Err(CircuitError::Angle(kind));
        }
        let mut qubits = [u32::MAX; 3];
        let mut neg = 0u8;
        for (i, c) in controls.iter().enumerate() {
            qubits[i] = c.q;
            if c.neg {
                neg |= 1 << i;
            }
        }
        for (i, &t) in targets.iter().enumerate() {
            qubits[controls.len() + i] = t;
        }
        let g = Gate { kind, neg, qubits, angle: angle.map(Box::new) };
        let qs = g.qubits();
        for i in 0..qs.len() {
            if qs[i + 1..].contains(&qs[i]) {
                return Err(CircuitError::DuplicateQubit(qs[i]));
            }
        }
        Ok(g)
    }

    pub fn x(t: u32) -> Gate {
        Gate { kind: GateKind::X, neg: 0, qubits: [t, u32::MAX, u32::MAX], angle: None }
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    /// Controls followed by targets.
    pub fn qubits(&self) -> &[u32] {
        &self.qubits[..self.kind.arity()]
    }

    pub fn controls(&self) -> impl Iterator<Item = Ctl> + '_ {
        (0..self.kind.num_controls())
            .map(move |i| Ctl { q: self.qubits[i], neg: self.neg >> i & 1 == 1 })
    }

    pub fn targets(&self) -> &[u32] {
        &self.qubits[self.kind.num_controls()..self.kind.arity()]
    }

    pub fn angle(&self) -> Option<&DyadicAngle> {
        self.angle.as_deref()
    }

    pub fn has_negated_control(&self) -> bool {
        self.neg != 0
    }

    pub fn inverse(&self) -> Gate {
        let mut g = self.clone();
        if let Some(a) = &mut g.angle {
            **a = a.neg();
        }
        g
    }

    pub fn remap(&self, f: impl Fn(u32) -> u32) -> Gate {
        let mut g = self.clone();
        for i in 0..g.kind.arity() {
            g.qubits[i] = f(g.qubits[i]);
        }
        g
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        let ctl: Vec<String> = self
            .controls()
            .map(|c| if c.neg { format!("!{}", c.q) } else { c.q.to_string() })
            .collect();
        if !ctl.is_empty() {
            write!(f, " {} ;", ctl.join(" "))?;
        }
        for t in self.targets() {
            write!(f, " {t}")?;
        }
        if let Some(a) = self.angle() {
            write!(f, " ; {a}")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct GateRepr {
    kind: GateKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    controls: Vec<Ctl>,
    targets: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    angle: Option<DyadicAngle>,
}

impl From<Gate> for GateRepr {
    fn from(g: Gate) -> GateRepr {
        GateRepr {
            kind: g.kind,
            controls: g.controls().collect(),
            targets: g.targets().to_vec(),
            angle: g.angle().cloned(),
        }
    }
}

impl TryFrom<GateRepr> for Gate {
    type Error = CircuitError;
    fn try_from(r: GateRepr) -> Result<Gate, CircuitError> {
        Gate::new(r.kind, &r.controls, &r.targets, r.angle)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Input,
    Output,
    Ancilla,
    Work,
    Flag,
}

/// A named group of qubits, least significant first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub name: String,
    pub qubits: Vec<u32>,
    pub role: Role,
}

impl Register {
    pub fn width(&self) -> usize {
        self.qubits.len()
    }
}

/// A contiguous gate range with a label. Ranges of one circuit do not overlap.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    Qft,
    Iqft,
    PhiMul,
}

/// A Fourier transform emitted somewhere in the circuit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transform {
    pub kind: TransformKind,
    pub width: u32,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Meta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_big")]
    pub modulus: Option<BigUint>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_big")]
    pub multiplier: Option<BigUint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<String>,
    #[serde(default)]
    pub stages: Vec<Stage>,
    #[serde(default)]
    pub transforms: Vec<Transform>,
    /// Named qubit lists used by probes; may overlap registers.
    #[serde(default)]
    pub views: BTreeMap<String, Vec<u32>>,
    /// Named gate positions used by probes.
    #[serde(default)]
    pub marks: Vec<(String, usize)>,
    #[serde(default)]
    pub extras: BTreeMap<String, String>,
}

mod opt_big {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<BigUint>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(b) => s.serialize_str(&b.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigUint>, D::Error> {
        let s: Option<String> = Option::deserialize(d)?;
        s.map(|s| s.parse().map_err(serde::de::Error::custom)).transpose()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CircuitError {
    #[error("qubit {0} is out of range")]
    QubitOutOfRange(u32),
    #[error("qubit {0} appears twice in one gate")]
    DuplicateQubit(u32),
    #[error("wrong number of qubits for {0}")]
    Arity(GateKind),
    #[error("{0} angle missing or unexpected")]
    Angle(GateKind),
    #[error("qubit {0} belongs to two registers")]
    RegisterOverlap(u32),
    #[error("register `{0}` declared twice")]
    DuplicateRegister(String),
    #[error("register `{0}` has zero width")]
    ZeroWidth(String),
    #[error("unknown register `{0}`")]
    UnknownRegister(String),
    #[error("stage ranges overlap or exceed the gate list")]
    BadStages,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    pub qubit_count: u32,
    pub registers: Vec<Register>,
    pub gates: Vec<Gate>,
    pub meta: Meta,
}

impl Circuit {
    /// Lays out registers contiguously in the order given.
    pub fn new(regs: &[(&str, usize, Role)]) -> Result<Circuit, CircuitError> {
        let mut c = Circuit::default();
        for &(name, w, role) in regs {
            if w == 0 {
                return Err(CircuitError::ZeroWidth(name.to_string()));
            }
            if c.register(name).is_some() {
                return Err(CircuitError::DuplicateRegister(name.to_string()));
            }
            let qubits = (c.qubit_count..c.qubit_count + w as u32).collect();
            c.qubit_count += w as u32;
            c.registers.push(Register { name: name.to_string(), qubits, role });
        }
        Ok(c)
    }

    pub fn push(&mut self, g: Gate) -> Result<(), CircuitError> {
        if let Some(&q) = g.qubits().iter().find(|&&q| q >= self.qubit_count) {
            return Err(CircuitError::QubitOutOfRange(q));
        }
        self.gates.push(g);
        Ok(())
    }

    pub fn register(&self, name: &str) -> Option<&Register> {
        self.registers.iter().find(|r| r.name == name)
    }

    pub fn reg(&self, name: &str) -> Result<&Register, CircuitError> {
        self.register(name).ok_or_else(|| CircuitError::UnknownRegister(name.to_string()))
    }

    /// Qubits in registers whose role is not `work`.
    pub fn data_qubits(&self) -> u32 {
        let work: usize = self
            .registers
            .iter()
            .filter(|r| r.role == Role::Work)
            .map(|r| r.width())
            .sum();
        self.qubit_count - work as u32
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        let mut owner = vec![false; self.qubit_count as usize];
        for r in &self.registers {
            for &q in &r.qubits {
                let slot = owner.get_mut(q as usize).ok_or(CircuitError::QubitOutOfRange(q))?;
                if *slot {
                    return Err(CircuitError::RegisterOverlap(q));
                }
                *slot = true;
            }
        }
        for g in &self.gates {
            if let Some(&q) = g.qubits().iter().find(|&&q| q >= self.qubit_count) {
                return Err(CircuitError::QubitOutOfRange(q));
            }
        }
        let mut stages: Vec<_> = self.meta.stages.iter().map(|s| (s.start, s.end)).collect();
        stages.sort();
        let mut last = 0;
        for (s, e) in stages {
            if s < last || e < s || e > self.gates.len() {
                return Err(CircuitError::BadStages);
            }
            last = e;
        }
        Ok(())
    }

    pub fn histogram(&self) -> BTreeMap<GateKind, usize> {
        let mut h = BTreeMap::new();
        for g in &self.gates {
            *h.entry(g.kind()).or_insert(0) += 1;
        }
        h
    }

    pub fn count(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind() == kind).count()
    }

    /// Reverses the gate order and negates every angle.
    pub fn inverse(&self) -> Circuit {
        let mut c = self.clone();
        c.gates = self.gates.iter().rev().map(Gate::inverse).collect();
        let len = self.gates.len();
        for s in &mut c.meta.stages {
            (s.start, s.end) = (len - s.end, len - s.start);
        }
        c.meta.stages.reverse();
        c.meta.marks = self.meta.marks.iter().rev().map(|(n, i)| (n.clone(), len - i)).collect();
        c.meta.transforms = self
            .meta
            .transforms
            .iter()
            .rev()
            .map(|t| Transform {
                kind: t.kind.inverse(),
                width: t.width,
                start: len - t.end,
                end: len - t.start,
            })
            .collect();
        c
    }

    /// Gates in the range that act on any qubit of the given set.
    pub fn gates_touching<'a>(&'a self, range: Range<usize>, qs: &'a [u32]) -> impl Iterator<Item = &'a Gate> {
        self.gates[range].iter().filter(move |g| g.qubits().iter().any(|q| qs.contains(q)))
    }
}

impl TransformKind {
    pub fn inverse(self) -> TransformKind {
        match self {
            TransformKind::Qft => TransformKind::Iqft,
            TransformKind::Iqft => TransformKind::Qft,
            TransformKind::PhiMul => TransformKind::PhiMul,
        }
    }
}
