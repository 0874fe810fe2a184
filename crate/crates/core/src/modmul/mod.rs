//! Modular multiplier synthesis: the modular-adder baseline and the division,
//! Montgomery and Barrett designs, with in-place and controlled wrappers.

mod binary;
mod phi;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adders::AdderKind;
use crate::builder::Builder;
use crate::circuit::{Circuit, Ctl, Role};
use crate::fourier::{iqft, qft};
use crate::numtheory::{self, build_ctx, ceil_log2, mod_inverse, pow2, BarrettParams, ModulusCtx};

pub use binary::{clear_by_mac, division_reduce, modular_add, mul_const_inplace, shift_reduce};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    Baseline,
    Division,
    Montgomery,
    Barrett,
}

impl Design {
    pub const ALL: [Design; 4] = [Design::Baseline, Design::Division, Design::Montgomery, Design::Barrett];

    pub fn name(self) -> &'static str {
        match self {
            Design::Baseline => "baseline",
            Design::Division => "division",
            Design::Montgomery => "montgomery",
            Design::Barrett => "barrett",
        }
    }
}

impl std::fmt::Display for Design {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Design {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Design::ALL.into_iter().find(|d| d.name() == s).ok_or_else(|| format!("unknown design `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiplierSpec {
    pub design: Design,
    pub backend: AdderKind,
    pub n: usize,
    #[serde(with = "big_str")]
    pub modulus: BigUint,
    #[serde(with = "big_str")]
    pub multiplier: BigUint,
    #[serde(default)]
    pub in_place: bool,
    #[serde(default)]
    pub controlled: bool,
    #[serde(default)]
    pub quantum_quantum: bool,
    /// Drop Fourier rotations finer than `pi / 2^k`.
    #[serde(default)]
    pub truncation: Option<u32>,
    /// Montgomery only: skip the `2^m` pre-scaling and return `X y 2^-m mod N`.
    #[serde(default)]
    pub raw_residue: bool,
}

mod big_str {
    use num_bigint::BigUint;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("n = {0} is below the minimum width of 4")]
    TooNarrow(usize),
    #[error("modulus {modulus} is not an odd {n}-bit number")]
    BadModulus { n: usize, modulus: BigUint },
    #[error("multiplier {0} is not in (0, N)")]
    BadMultiplier(BigUint),
    #[error("multiplier {0} has no inverse modulo N")]
    NotInvertible(BigUint),
    #[error("quantum-quantum multiplication cannot be in place")]
    QuantumInPlace,
    #[error("quantum-quantum multiplication needs a binary division, montgomery or barrett design")]
    QuantumUnsupported,
    #[error("a controlled multiplier must be in place")]
    ControlledOutOfPlace,
    #[error("raw Montgomery residues need an out-of-place multiplier by a classical constant")]
    RawInPlace,
}

impl MultiplierSpec {
    pub fn new(design: Design, backend: AdderKind, modulus: BigUint, multiplier: BigUint) -> MultiplierSpec {
        MultiplierSpec {
            design,
            backend,
            n: modulus.bits() as usize,
            modulus,
            multiplier,
            in_place: false,
            controlled: false,
            quantum_quantum: false,
            truncation: None,
            raw_residue: false,
        }
    }

    pub fn in_place(mut self) -> Self {
        self.in_place = true;
        self
    }

    /// Controlled and in place.
    pub fn controlled(mut self) -> Self {
        self.in_place = true;
        self.controlled = true;
        self
    }

    pub fn quantum(mut self) -> Self {
        self.quantum_quantum = true;
        self
    }

    pub fn m(&self) -> usize {
        ceil_log2(self.n as u64) as usize
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let n = self.n;
        if n < 4 {
            return Err(SynthError::TooNarrow(n));
        }
        let nm = &self.modulus;
        if nm.is_even() || nm.bits() as usize != n || *nm == pow2(n - 1) {
            return Err(SynthError::BadModulus { n, modulus: nm.clone() });
        }
        if self.quantum_quantum {
            if self.raw_residue {
                return Err(SynthError::RawInPlace);
            }
            if self.in_place || self.controlled {
                return Err(SynthError::QuantumInPlace);
            }
            if self.design == Design::Baseline || !self.backend.is_binary() {
                return Err(SynthError::QuantumUnsupported);
            }
            return Ok(());
        }
        let x = &self.multiplier;
        if *x == BigUint::ZERO || x >= nm {
            return Err(SynthError::BadMultiplier(x.clone()));
        }
        if self.controlled && !self.in_place {
            return Err(SynthError::ControlledOutOfPlace);
        }
        if self.in_place && !x.gcd(nm).is_one() {
            return Err(SynthError::NotInvertible(x.clone()));
        }
        if self.raw_residue && self.in_place {
            return Err(SynthError::RawInPlace);
        }
        Ok(())
    }

    /// The classical constant the circuit multiplies by: Montgomery designs absorb
    /// the `2^-m` of the reduction into it.
    pub(crate) fn effective(&self, x: &BigUint) -> BigUint {
        if self.design == Design::Montgomery && !self.raw_residue {
            (x << self.m()) % &self.modulus
        } else {
            x.clone()
        }
    }
}

/// Register layout shared by both halves of an in-place multiplier.
#[derive(Clone, Debug)]
pub(crate) enum Layout {
    /// `t` has `n + 1` qubits; `flag` is the Fourier comparison ancilla.
    Baseline { t: Vec<u32>, flag: Option<u32> },
    /// Remainder in `acc[..n]`, quotient bits above it.
    Division { acc: Vec<u32> },
    /// Product in `acc[m..m + n]`; `acc[..m]` and the top qubit hold `u~`.
    Montgomery { acc: Vec<u32> },
    /// `xy` is empty for the Fourier backend.
    Barrett { s: Vec<u32>, xy: Vec<u32>, qh: Vec<u32>, adj: u32 },
}

impl Layout {
    fn declare(b: &mut Builder, spec: &MultiplierSpec) -> Layout {
        let (n, m) = (spec.n, spec.m());
        let out_role = if spec.in_place { Role::Ancilla } else { Role::Output };
        match spec.design {
            Design::Baseline => {
                let t = b.fresh(n + 1);
                b.declare("p", &t[..n], out_role);
                b.declare("sign", &t[n..], Role::Flag);
                let flag = (spec.backend == AdderKind::Fourier).then(|| b.reg("flag", 1, Role::Flag)[0]);
                Layout::Baseline { t, flag }
            }
            Design::Division => {
                let acc = b.fresh(n + m);
                b.declare("p", &acc[..n], out_role);
                b.declare("q", &acc[n..], Role::Ancilla);
                b.view("acc", &acc);
                Layout::Division { acc }
            }
            Design::Montgomery => {
                let acc = b.fresh(n + m + 1);
                b.declare("p", &acc[m..m + n], out_role);
                let u: Vec<u32> = acc[..m].iter().chain(&acc[n + m..]).copied().collect();
                b.declare("u", &u, Role::Ancilla);
                b.view("acc", &acc);
                b.view("estimate", &acc[m..]);
                Layout::Montgomery { acc }
            }
            Design::Barrett => {
                let bp = BarrettParams::new(&spec.modulus).expect("validated modulus");
                let s = b.fresh(n + m + 1);
                b.declare("p", &s[..n], out_role);
                b.declare("s_hi", &s[n..], Role::Ancilla);
                // the Fourier variant estimates the quotient from scaled partials directly
                let xy = if spec.backend.is_binary() { b.reg("xy_app", bp.est_width, Role::Ancilla) } else { Vec::new() };
                let qh = b.reg("qhat", bp.est_width, Role::Ancilla);
                let adj = b.reg("adj", 1, Role::Flag)[0];
                b.view("acc", &s);
                b.view("qhat_int", &qh[bp.s2..]);
                Layout::Barrett { s, xy, qh, adj }
            }
        }
    }

    fn output(&self, n: usize, m: usize) -> Vec<u32> {
        match self {
            Layout::Baseline { t, .. } => t[..n].to_vec(),
            Layout::Division { acc } => acc[..n].to_vec(),
            Layout::Montgomery { acc } => acc[m..m + n].to_vec(),
            Layout::Barrett { s, .. } => s[..n].to_vec(),
        }
    }
}

/// Everything a multiplier body needs besides the builder.
pub(crate) struct Ctx<'a> {
    pub spec: &'a MultiplierSpec,
    pub kind: AdderKind,
    pub n: usize,
    pub m: usize,
    pub nmod: &'a BigUint,
    pub mc: ModulusCtx,
    pub y: &'a [u32],
    pub lay: &'a Layout,
    /// Leave the product in the Fourier basis (Montgomery only).
    pub fourier_out: bool,
}

impl Ctx<'_> {
    pub fn y_ctl(&self) -> Vec<Ctl> {
        self.y.iter().map(|&q| Ctl::pos(q)).collect()
    }
}

fn body(b: &mut Builder, spec: &MultiplierSpec, x: &BigUint, y: &[u32], lay: &Layout, fourier_out: bool) {
    let mc = build_ctx(&spec.modulus, &spec.effective(x)).expect("validated spec");
    let cx = Ctx { spec, kind: spec.backend, n: spec.n, m: spec.m(), nmod: &spec.modulus, mc, y, lay, fourier_out };
    if spec.backend.is_binary() {
        binary::body(b, &cx);
    } else {
        phi::body(b, &cx);
    }
}

fn stamp(b: &mut Builder, spec: &MultiplierSpec) {
    let meta = b.meta_mut();
    meta.n = Some(spec.n as u32);
    meta.m = Some(spec.m() as u32);
    meta.modulus = Some(spec.modulus.clone());
    meta.multiplier = (!spec.quantum_quantum).then(|| spec.multiplier.clone());
    meta.design = Some(spec.design.name().to_string());
    meta.backend = Some(spec.backend.name().to_string());
    for (k, v) in [
        ("in_place", spec.in_place),
        ("controlled", spec.controlled),
        ("quantum_quantum", spec.quantum_quantum),
        ("raw_residue", spec.raw_residue),
    ] {
        meta.extras.insert(k.to_string(), v.to_string());
    }
    if let Some(k) = spec.truncation {
        meta.extras.insert("truncation".to_string(), k.to_string());
    }
}

/// Builds the circuit described by `spec`.
///
/// Out of place: `|y>|0> -> |y>|Xy mod N>` with the product in register `p`.
/// In place: `|y> -> |Xy mod N>`. Controlled: the product is applied only when
/// `ctrl` is set. Quantum-quantum: `|x>|y>|0> -> |x>|y>|xy mod N>`.
pub fn synthesize(spec: &MultiplierSpec) -> Result<Circuit, SynthError> {
    spec.validate()?;
    let mut b = Builder::new();
    b.set_truncation(spec.truncation);
    stamp(&mut b, spec);
    if spec.quantum_quantum {
        let x = b.reg("x", spec.n, Role::Input);
        let y = b.reg("y", spec.n, Role::Input);
        let lay = Layout::declare(&mut b, spec);
        let mc = build_ctx(&spec.modulus, &BigUint::one()).expect("validated spec");
        let cx = Ctx { spec, kind: spec.backend, n: spec.n, m: spec.m(), nmod: &spec.modulus, mc, y: &y, lay: &lay, fourier_out: false };
        binary::body_qq(&mut b, &cx, &x);
        return Ok(b.finish());
    }
    let ctrl = spec.controlled.then(|| b.reg("ctrl", 1, Role::Input)[0]);
    let y = b.reg("y", spec.n, Role::Input);
    let lay = Layout::declare(&mut b, spec);
    if !spec.in_place {
        body(&mut b, spec, &spec.multiplier, &y, &lay, false);
        return Ok(b.finish());
    }
    let p = lay.output(spec.n, spec.m());
    // Binary bodies act identically for X and X^-1 when y is zero, so the
    // product register itself can park y while the control is off. Fourier
    // bodies expect their accumulator in the Fourier basis and get a cache.
    let fourier = !spec.backend.is_binary();
    let cache = match ctrl {
        Some(_) if fourier => b.reg("cache", spec.n, Role::Ancilla),
        _ => p.clone(),
    };
    // Swapping while both halves are still in the Fourier basis lets the two
    // basis changes run side by side on different registers.
    let keep = fourier && spec.design == Design::Montgomery;
    // copies of the control so the swap layers need not queue on one qubit
    let copies: Vec<u32> = match ctrl {
        Some(c) => {
            let extra = b.reg("ctrl_copy", spec.m() - 1, Role::Ancilla);
            [c].into_iter().chain(extra).collect()
        }
        None => Vec::new(),
    };
    let fan = |b: &mut Builder| {
        let mut have = 1;
        while have < copies.len() {
            for i in 0..have.min(copies.len() - have) {
                b.cx(copies[i], copies[have + i]);
            }
            have *= 2;
        }
    };
    let park = |b: &mut Builder| {
        if !copies.is_empty() {
            b.stage("wrapper", |b| {
                for (k, (&a, &z)) in y.iter().zip(&cache).enumerate() {
                    b.cswap(Ctl::neg(copies[k % copies.len()]), a, z);
                }
            });
        }
    };
    let s = b.len();
    b.stage("wrapper", |b| fan(b));
    let fanned = s..b.len();
    park(&mut b);
    body(&mut b, spec, &spec.multiplier, &y, &lay, keep);
    b.stage("wrapper", |b| {
        for (k, (&a, &z)) in y.iter().zip(&p).enumerate() {
            // with a separate cache both registers are zero here when the control is off
            if ctrl.is_some() && !fourier {
                b.cswap(copies[k % copies.len()], a, z);
            } else {
                b.swap(a, z);
            }
        }
        if keep {
            iqft(b, &y);
            qft(b, &p);
        }
    });
    let inv = mod_inverse(&spec.multiplier, &spec.modulus).expect("validated spec");
    let s = b.len();
    body(&mut b, spec, &inv, &y, &lay, keep);
    let e = b.len();
    b.invert_range(s..e);
    park(&mut b);
    b.stage("wrapper", |b| b.append_inverse(fanned));
    Ok(b.finish())
}

/// `X y mod N` for the product a spec describes, with `x` the quantum operand
/// in the quantum-quantum case.
pub fn expected_product(spec: &MultiplierSpec, x: &BigUint, y: &BigUint) -> BigUint {
    let mut p = numtheory::mul_mod(x, y, &spec.modulus);
    if spec.design == Design::Montgomery && spec.raw_residue {
        let r_inv = mod_inverse(&pow2(spec.m()), &spec.modulus).expect("N is odd");
        p = numtheory::mul_mod(&p, &r_inv, &spec.modulus);
    }
    p
}
