//! Reversible adders: majority ripple, prefix-ripple and carry-lookahead, plus the
//! select-undo controlled adder and constant comparison.
//!
//! Addends are given bit by bit as [`Lit`]s so that classical constants, quantum
//! registers and controlled constants share one code path. Gates that depend on
//! a known-zero addend bit are never emitted.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::builder::Builder;
use crate::circuit::Ctl;
use crate::fourier;
use crate::numtheory::{floor_log2, pow2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum AdderKind {
    Ripple,
    PrefixRipple,
    Lookahead,
    Fourier,
}

impl AdderKind {
    pub const ALL: [AdderKind; 4] = [AdderKind::Ripple, AdderKind::PrefixRipple, AdderKind::Lookahead, AdderKind::Fourier];
    pub const BINARY: [AdderKind; 3] = [AdderKind::Ripple, AdderKind::PrefixRipple, AdderKind::Lookahead];

    pub fn name(self) -> &'static str {
        match self {
            AdderKind::Ripple => "ripple",
            AdderKind::PrefixRipple => "prefix_ripple",
            AdderKind::Lookahead => "lookahead",
            AdderKind::Fourier => "fourier",
        }
    }

    pub fn is_binary(self) -> bool {
        self != AdderKind::Fourier
    }
}

impl fmt::Display for AdderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AdderKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        AdderKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown adder `{s}`"))
    }
}

/// One bit of an addend.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lit {
    Zero,
    One,
    Q(Ctl),
    /// Conjunction of two qubits.
    And(Ctl, Ctl),
}

impl Lit {
    fn and(self, c: Option<Ctl>) -> Lit {
        match (self, c) {
            (l, None) | (l @ Lit::Zero, _) => l,
            (Lit::One, Some(c)) => Lit::Q(c),
            (Lit::Q(a), Some(c)) => Lit::And(c, a),
            (Lit::And(..), Some(_)) => panic!("three-way conjunction"),
        }
    }
}

/// Bits of `c mod 2^w`, each conditioned on `ctrl` if given.
pub fn const_lits(c: &BigUint, w: usize, ctrl: Option<Ctl>) -> Vec<Lit> {
    (0..w).map(|i| if c.bit(i as u64) { Lit::One.and(ctrl) } else { Lit::Zero }).collect()
}

/// Bits of a register zero-extended to `w`, each conditioned on `ctrl` if given.
pub fn reg_lits(a: &[u32], w: usize, ctrl: Option<Ctl>) -> Vec<Lit> {
    (0..w).map(|i| a.get(i).map_or(Lit::Zero, |&q| Lit::Q(Ctl::pos(q)).and(ctrl))).collect()
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AdderError {
    #[error("empty target register")]
    EmptyTarget,
    #[error("addend register has {addend} qubits but the target has {target}")]
    AddendTooWide { addend: usize, target: usize },
    #[error("qubit {0} is both an operand and part of the target")]
    Overlap(u32),
}

#[derive(Clone, Debug)]
pub enum Addend<'a> {
    Const(BigUint),
    Reg(&'a [u32]),
}

#[derive(Clone, Debug)]
pub struct AddSpec<'a> {
    pub target: &'a [u32],
    pub addend: Addend<'a>,
    pub control: Option<Ctl>,
    pub subtract: bool,
}

impl<'a> AddSpec<'a> {
    pub fn constant(target: &'a [u32], c: BigUint) -> Self {
        AddSpec { target, addend: Addend::Const(c), control: None, subtract: false }
    }

    pub fn register(target: &'a [u32], a: &'a [u32]) -> Self {
        AddSpec { target, addend: Addend::Reg(a), control: None, subtract: false }
    }

    pub fn controlled(mut self, c: Ctl) -> Self {
        self.control = Some(c);
        self
    }

    pub fn minus(mut self) -> Self {
        self.subtract = true;
        self
    }

    fn check(&self) -> Result<(), AdderError> {
        if self.target.is_empty() {
            return Err(AdderError::EmptyTarget);
        }
        let mut others: Vec<u32> = self.control.iter().map(|c| c.q).collect();
        if let Addend::Reg(a) = self.addend {
            if a.len() > self.target.len() {
                return Err(AdderError::AddendTooWide { addend: a.len(), target: self.target.len() });
            }
            others.extend_from_slice(a);
        }
        match others.into_iter().find(|q| self.target.contains(q)) {
            Some(q) => Err(AdderError::Overlap(q)),
            None => Ok(()),
        }
    }
}

/// `target += addend` (or `-=`), conditioned on the control if given.
pub fn add(b: &mut Builder, kind: AdderKind, spec: &AddSpec) -> Result<(), AdderError> {
    spec.check()?;
    let t = spec.target;
    let w = t.len();
    match &spec.addend {
        Addend::Const(c) => {
            let c = c % pow2(w);
            let v = if spec.subtract { (pow2(w) - &c) % pow2(w) } else { c };
            add_lits(b, kind, t, &const_lits(&v, w, spec.control));
        }
        Addend::Reg(a) => {
            if spec.subtract {
                b.xs(t);
            }
            match (kind, spec.control) {
                (AdderKind::PrefixRipple, Some(c)) => select_undo(b, kind, t, &reg_lits(a, w, None), c),
                _ => add_lits(b, kind, t, &reg_lits(a, w, spec.control)),
            }
            if spec.subtract {
                b.xs(t);
            }
        }
    }
    Ok(())
}

/// `out = src + addend` for a zero `out` of the same width; `src` is unchanged.
pub fn add_out_of_place(b: &mut Builder, kind: AdderKind, src: &[u32], lits: &[Lit], out: &[u32]) {
    assert_eq!(src.len(), out.len());
    for (&s, &o) in src.iter().zip(out) {
        b.cx(s, o);
    }
    add_lits(b, kind, out, lits);
}

/// In-place, uncontrolled `target += lits mod 2^w`.
pub fn add_lits(b: &mut Builder, kind: AdderKind, t: &[u32], lits: &[Lit]) {
    assert_eq!(t.len(), lits.len(), "addend width");
    if lits.iter().all(|l| *l == Lit::Zero) {
        return;
    }
    match kind {
        AdderKind::Ripple => {
            let a = Operand::new(b, lits, true);
            ripple_inplace(b, &a.full(), t);
            a.release(b);
        }
        AdderKind::Lookahead => {
            let a = Operand::new(b, lits, false);
            lookahead_inplace(b, &a.qs, t);
            a.release(b);
        }
        AdderKind::PrefixRipple => {
            let (lits, a) = Operand::split_and(b, lits);
            prefix_inplace(b, &lits, t);
            a.release(b);
        }
        AdderKind::Fourier => {
            let (lits, a) = Operand::split_and(b, lits);
            fourier::qft(b, t);
            fourier_add_lits(b, t, &lits);
            fourier::iqft(b, t);
            a.release(b);
        }
    }
}

/// Adds `lits` to a register already in the Fourier basis, one rotation layer
/// per distinct control.
pub fn fourier_add_lits(b: &mut Builder, t: &[u32], lits: &[Lit]) {
    let mut by_ctl: BTreeMap<Option<Ctl>, BigInt> = BTreeMap::new();
    for (i, l) in lits.iter().enumerate() {
        let key = match l {
            Lit::Zero => continue,
            Lit::One => None,
            Lit::Q(c) => Some(*c),
            Lit::And(..) => panic!("conjunctions must be materialised first"),
        };
        *by_ctl.entry(key).or_default() += BigInt::from(pow2(i));
    }
    for (c, v) in by_ctl {
        fourier::phi_add(b, t, &v, 0, c);
    }
}

/// Controlled in-place addition built from an uncontrolled out-of-place adder,
/// a controlled swap layer and the reversed adder.
pub fn select_undo(b: &mut Builder, kind: AdderKind, t: &[u32], lits: &[Lit], ctrl: Ctl) {
    let w = t.len();
    let prefix = kind == AdderKind::PrefixRipple;
    let z = b.alloc(if prefix { w + 1 } else { w });
    let s = b.len();
    if prefix {
        prefix_pass(b, lits, t, &z);
    } else {
        add_out_of_place(b, kind, t, lits, &z);
    }
    let e = b.len();
    for i in 0..w {
        b.cswap(ctrl, t[i], z[i]);
    }
    for i in 0..w {
        b.cx(ctrl, t[i]);
        b.cx(ctrl, z[i]);
    }
    b.append_inverse(s..e);
    for &q in t {
        b.cx(ctrl, q);
    }
    b.free(&z);
}

/// `out ^= ctrl & [target < c]`, or `[target >= c]` when `less` is false.
/// The target is left unchanged.
pub fn compare_const(b: &mut Builder, kind: AdderKind, t: &[u32], c: &BigUint, out: u32, ctrl: Option<Ctl>, less: bool) {
    let w = t.len();
    let ctl: Vec<Ctl> = ctrl.into_iter().collect();
    if c.is_zero() || *c >= pow2(w) {
        // the comparison is constant
        if less == !c.is_zero() {
            b.mcx(&ctl, out);
        }
        return;
    }
    if kind == AdderKind::Fourier {
        let h = b.alloc(1)[0];
        let ext: Vec<u32> = t.iter().copied().chain([h]).collect();
        let s = b.len();
        fourier::qft(b, &ext);
        fourier::phi_add_const(b, &ext, c, true, None);
        fourier::iqft(b, &ext);
        let e = b.len();
        let mut ctl = ctl;
        ctl.push(Ctl { q: h, neg: !less });
        b.mcx(&ctl, out);
        b.append_inverse(s..e);
        b.free(&[h]);
        return;
    }
    // carry out of t + 2^w - c is [t >= c]
    let v = pow2(w) - c;
    with_carry(b, kind, t, &const_lits(&v, w, None), |b, carry| {
        let mut ctl = ctl;
        ctl.push(Ctl { q: carry, neg: less });
        b.mcx(&ctl, out);
    });
}

/// Computes the carry out of `t + lits` into some qubit, runs `f` on it, then
/// uncomputes everything.
pub fn with_carry<T>(b: &mut Builder, kind: AdderKind, t: &[u32], lits: &[Lit], f: impl FnOnce(&mut Builder, u32) -> T) -> T {
    let w = t.len();
    match kind {
        AdderKind::Ripple => {
            let a = Operand::new(b, lits, true);
            let qs = a.full();
            let c0 = b.alloc(1)[0];
            let s = b.len();
            maj_chain(b, c0, &qs, t);
            let e = b.len();
            let out = f(b, qs[w - 1]);
            b.append_inverse(s..e);
            b.free(&[c0]);
            a.release(b);
            out
        }
        AdderKind::Lookahead => {
            let a = Operand::new(b, lits, false);
            let z = b.alloc(w);
            let tree = PTree::new(b, w);
            let s = b.len();
            generate(b, &a.qs, t, &z);
            propagate(b, &a.qs, t);
            network(b, t, &z, &tree);
            let e = b.len();
            let out = f(b, z[w - 1]);
            b.append_inverse(s..e);
            tree.free(b);
            b.free(&z);
            a.release(b);
            out
        }
        AdderKind::PrefixRipple => {
            let (lits, a) = Operand::split_and(b, lits);
            let z = b.alloc(w + 1);
            let s = b.len();
            prefix_pass(b, &lits, t, &z);
            let e = b.len();
            let out = f(b, z[w]);
            b.append_inverse(s..e);
            b.free(&z);
            a.release(b);
            out
        }
        AdderKind::Fourier => panic!("Fourier adders have no carry qubit"),
    }
}

/// Addend bits as qubits, copying into work qubits where needed.
struct Operand {
    qs: Vec<Option<u32>>,
    own: Vec<u32>,
    gates: Range<usize>,
}

impl Operand {
    /// With `full`, every bit gets a qubit (zero bits included) whenever a copy is made.
    fn new(b: &mut Builder, lits: &[Lit], full: bool) -> Operand {
        let s = b.len();
        let mut seen = Vec::new();
        let direct = lits.iter().all(|l| match l {
            Lit::Zero => !full,
            Lit::Q(c) if !c.neg && !seen.contains(&c.q) => {
                seen.push(c.q);
                true
            }
            _ => false,
        });
        if direct {
            let qs = lits.iter().map(|l| if let Lit::Q(c) = l { Some(c.q) } else { None }).collect();
            return Operand { qs, own: Vec::new(), gates: s..s };
        }
        let own = b.alloc(lits.len());
        let mut qs = Vec::with_capacity(lits.len());
        // copies of one control fan out as a doubling tree
        let mut copies: BTreeMap<Ctl, Vec<u32>> = BTreeMap::new();
        for (l, &q) in lits.iter().zip(&own) {
            match *l {
                Lit::Zero => {}
                Lit::One => b.x(q),
                Lit::Q(c) => copies.entry(c).or_default().push(q),
                Lit::And(x, y) => b.ccx(x, y, q),
            }
            qs.push(if *l == Lit::Zero && !full { None } else { Some(q) });
        }
        for (c, qs) in copies {
            b.cx(c, qs[0]);
            let mut have = 1;
            while have < qs.len() {
                let k = have.min(qs.len() - have);
                for i in 0..k {
                    b.cx(qs[i], qs[have + i]);
                }
                have += k;
            }
        }
        Operand { qs, own, gates: s..b.len() }
    }

    /// Copies only the conjunction bits and returns the rewritten literals.
    fn split_and(b: &mut Builder, lits: &[Lit]) -> (Vec<Lit>, Operand) {
        let s = b.len();
        let ands: Vec<usize> = (0..lits.len()).filter(|&i| matches!(lits[i], Lit::And(..))).collect();
        let own = b.alloc(ands.len());
        let mut out = lits.to_vec();
        for (&i, &q) in ands.iter().zip(&own) {
            if let Lit::And(x, y) = lits[i] {
                b.ccx(x, y, q);
            }
            out[i] = Lit::Q(Ctl::pos(q));
        }
        (out, Operand { qs: Vec::new(), own, gates: s..b.len() })
    }

    fn full(&self) -> Vec<u32> {
        self.qs.iter().map(|q| q.expect("fully materialised operand")).collect()
    }

    fn release(self, b: &mut Builder) {
        b.append_inverse(self.gates);
        b.free(&self.own);
    }
}

fn maj(b: &mut Builder, c: u32, x: u32, a: u32) {
    b.cx(a, x);
    b.cx(a, c);
    b.ccx(c, x, a);
}

fn uma(b: &mut Builder, c: u32, x: u32, a: u32) {
    b.ccx(c, x, a);
    b.cx(a, c);
    b.cx(c, x);
}

/// Leaves the carry out in `a[w-1]`.
fn maj_chain(b: &mut Builder, c0: u32, a: &[u32], t: &[u32]) {
    maj(b, c0, t[0], a[0]);
    for i in 1..t.len() {
        maj(b, a[i - 1], t[i], a[i]);
    }
}

fn ripple_inplace(b: &mut Builder, a: &[u32], t: &[u32]) {
    let c0 = b.alloc(1)[0];
    maj_chain(b, c0, a, t);
    for i in (1..t.len()).rev() {
        uma(b, a[i - 1], t[i], a[i]);
    }
    uma(b, c0, t[0], a[0]);
    b.free(&[c0]);
}

/// Propagate bits above level 0, indexed `[level - 1][block - 1]`.
struct PTree {
    levels: Vec<Vec<u32>>,
}

impl PTree {
    fn new(b: &mut Builder, w: usize) -> PTree {
        let top = if w == 0 { 0 } else { floor_log2(w as u64) as usize };
        let levels = (1..top).map(|t| b.alloc((w >> t).saturating_sub(1))).collect();
        PTree { levels }
    }

    fn get(&self, p: &[u32], t: usize, m: usize) -> u32 {
        if t == 0 { p[m] } else { self.levels[t - 1][m - 1] }
    }

    fn free(self, b: &mut Builder) {
        for l in self.levels.iter().rev() {
            b.free(l);
        }
    }
}

fn generate(b: &mut Builder, a: &[Option<u32>], t: &[u32], z: &[u32]) {
    for i in 0..t.len() {
        if let Some(q) = a[i] {
            b.ccx(q, t[i], z[i]);
        }
    }
}

fn propagate(b: &mut Builder, a: &[Option<u32>], t: &[u32]) {
    for i in 0..t.len() {
        if let Some(q) = a[i] {
            b.cx(q, t[i]);
        }
    }
}

/// Carry network over propagate bits `p` and generate bits in `z`, where `z[i-1]`
/// holds position `i`. Leaves the carry into position `i` in `z[i-1]`.
fn network(b: &mut Builder, p: &[u32], z: &[u32], tree: &PTree) {
    let w = p.len();
    let top = floor_log2(w as u64) as usize;
    let zz = |i: usize| z[i - 1];
    let p_round = |b: &mut Builder, t: usize| {
        for m in 1..(w >> t) {
            b.ccx(tree.get(p, t - 1, 2 * m), tree.get(p, t - 1, 2 * m + 1), tree.get(p, t, m));
        }
    };
    for t in 1..top {
        p_round(b, t);
    }
    for t in 1..=top {
        for m in 0..(w >> t) {
            b.ccx(zz((m << t) + (1 << (t - 1))), tree.get(p, t - 1, 2 * m + 1), zz((m + 1) << t));
        }
    }
    let mut tc = 0;
    while 3usize << (tc + 1) <= 2 * w {
        tc += 1;
    }
    for t in (1..=tc).rev() {
        for m in 1..=((w - (1 << (t - 1))) >> t) {
            b.ccx(zz(m << t), tree.get(p, t - 1, 2 * m), zz((m << t) + (1 << (t - 1))));
        }
    }
    for t in (1..top).rev() {
        p_round(b, t);
    }
}

fn lookahead_inplace(b: &mut Builder, a: &[Option<u32>], t: &[u32]) {
    let w = t.len();
    let z = b.alloc(w);
    let tree = PTree::new(b, w);
    generate(b, a, t, &z);
    propagate(b, a, t);
    let s = b.len();
    network(b, t, &z, &tree);
    let e = b.len();
    for i in 1..w {
        b.cx(z[i - 1], t[i]);
    }
    // the carries of a + !sum equal those of a + t
    b.xs(t);
    propagate(b, a, t);
    b.append_inverse(s..e);
    propagate(b, a, t);
    generate(b, a, t, &z);
    b.xs(t);
    tree.free(b);
    b.free(&z);
}

fn prop_lits(b: &mut Builder, a: &[Lit], t: &[u32]) {
    for (l, &q) in a.iter().zip(t) {
        match *l {
            Lit::One => b.x(q),
            Lit::Q(c) => b.cx(c, q),
            Lit::Zero => {}
            Lit::And(..) => panic!("conjunctions must be materialised first"),
        }
    }
}

/// `dst ^= a & !p`, the generate bit once `p = a ^ t` is in place.
fn gen_into(b: &mut Builder, a: Lit, p: u32, dst: u32) {
    match a {
        Lit::One => b.cx(Ctl::neg(p), dst),
        Lit::Q(c) => b.ccx(c, Ctl::neg(p), dst),
        _ => {}
    }
}

/// Out-of-place prefix-ripple pass: `z = t + a` over `w + 1` bits, `t` restored.
fn prefix_pass(b: &mut Builder, a: &[Lit], t: &[u32], z: &[u32]) {
    let w = t.len();
    debug_assert_eq!(z.len(), w + 1);
    prop_lits(b, a, t);
    let pairs: Vec<usize> = (0..w.saturating_sub(1)).step_by(2).collect();
    // two-bit propagate into z[i+1], two-bit generate into z[i+2]
    for &i in &pairs {
        b.ccx(t[i], t[i + 1], z[i + 1]);
        gen_into(b, a[i + 1], t[i + 1], z[i + 2]);
        match a[i] {
            Lit::One => {
                b.cx(t[i + 1], z[i + 2]);
                b.cx(z[i + 1], z[i + 2]);
            }
            Lit::Q(c) => {
                b.cx(t[i + 1], z[i + 1]);
                b.ccx(c, z[i + 1], z[i + 2]);
                b.cx(t[i + 1], z[i + 1]);
            }
            _ => {}
        }
    }
    for &i in pairs.iter().skip(1) {
        b.ccx(z[i], z[i + 1], z[i + 2]);
    }
    if w % 2 == 1 {
        let j = w - 1;
        b.ccx(t[j], z[j], z[w]);
        gen_into(b, a[j], t[j], z[w]);
    }
    // odd carries replace the two-bit propagate
    for &i in &pairs {
        b.cx(t[i + 1], z[i]);
        b.ccx(t[i], z[i], z[i + 1]);
        b.cx(t[i + 1], z[i]);
        gen_into(b, a[i], t[i], z[i + 1]);
    }
    for i in 0..w {
        b.cx(t[i], z[i]);
    }
    prop_lits(b, a, t);
}

fn prefix_inplace(b: &mut Builder, a: &[Lit], t: &[u32]) {
    let w = t.len();
    let z = b.alloc(w + 1);
    let s = b.len();
    prefix_pass(b, a, t, &z);
    let e = b.len();
    for i in 0..w {
        b.swap(t[i], z[i]);
    }
    b.xs(t);
    b.xs(&z[..w]);
    b.append_inverse(s..e);
    b.xs(t);
    b.free(&z);
}
