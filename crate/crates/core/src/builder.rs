//! Incremental circuit construction with a shared pool of work qubits.

use std::ops::Range;

use crate::angle::DyadicAngle;
use crate::circuit::{Circuit, Ctl, Gate, GateKind, Register, Role, Stage, Transform, TransformKind};

pub struct Builder {
    c: Circuit,
    pool: Vec<u32>,
    side: Vec<u32>,
    work: Vec<u32>,
    truncation: Option<u32>,
}

impl Default for Builder {
    fn default() -> Self {
        Self::new()
    }
}

impl Builder {
    pub fn new() -> Builder {
        Builder { c: Circuit::default(), pool: Vec::new(), side: Vec::new(), work: Vec::new(), truncation: None }
    }

    /// Rotations whose denominator exponent exceeds `k` are dropped.
    pub fn set_truncation(&mut self, k: Option<u32>) {
        self.truncation = k;
    }

    pub fn truncation(&self) -> Option<u32> {
        self.truncation
    }

    pub fn circuit(&self) -> &Circuit {
        &self.c
    }

    pub fn meta_mut(&mut self) -> &mut crate::circuit::Meta {
        &mut self.c.meta
    }

    /// Fresh qubits that belong to no register yet.
    pub fn fresh(&mut self, w: usize) -> Vec<u32> {
        let start = self.c.qubit_count;
        self.c.qubit_count += w as u32;
        (start..start + w as u32).collect()
    }

    pub fn declare(&mut self, name: &str, qubits: &[u32], role: Role) {
        assert!(self.c.register(name).is_none(), "register {name} declared twice");
        self.c.registers.push(Register { name: name.to_string(), qubits: qubits.to_vec(), role });
    }

    pub fn reg(&mut self, name: &str, w: usize, role: Role) -> Vec<u32> {
        let qs = self.fresh(w);
        self.declare(name, &qs, role);
        qs
    }

    pub fn view(&mut self, name: &str, qubits: &[u32]) {
        self.c.meta.views.insert(name.to_string(), qubits.to_vec());
    }

    pub fn mark(&mut self, name: &str) {
        let i = self.len();
        self.c.meta.marks.push((name.to_string(), i));
    }

    /// Takes `k` zeroed work qubits from the pool, growing it if needed.
    pub fn alloc(&mut self, k: usize) -> Vec<u32> {
        if self.pool.len() < k {
            let grown = self.fresh(k - self.pool.len());
            self.work.extend(&grown);
            self.pool.splice(0..0, grown.into_iter().rev());
        }
        let at = self.pool.len() - k;
        let mut out = self.pool.split_off(at);
        out.reverse();
        out
    }

    /// Returns work qubits to the pool; they must be zero again.
    pub fn free(&mut self, qs: &[u32]) {
        self.pool.extend(qs.iter().rev());
    }

    pub fn pool_size(&self) -> usize {
        self.pool.len()
    }

    /// Runs `f` with `pool` as the only source of work qubits and hands the pool
    /// back afterwards (possibly grown). Blocks given disjoint pools share no scratch
    /// qubits, so the scheduler can overlap them.
    pub fn with_pool<T>(&mut self, pool: &mut Vec<u32>, f: impl FnOnce(&mut Builder) -> T) -> T {
        let saved = std::mem::replace(&mut self.pool, std::mem::take(pool));
        let out = f(self);
        *pool = std::mem::replace(&mut self.pool, saved);
        out
    }

    /// Like `with_pool`, with one secondary pool kept for the whole build.
    pub fn with_side_pool<T>(&mut self, f: impl FnOnce(&mut Builder) -> T) -> T {
        let mut side = std::mem::take(&mut self.side);
        let out = self.with_pool(&mut side, f);
        self.side = side;
        out
    }

    pub fn len(&self) -> usize {
        self.c.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.gates.is_empty()
    }

    fn push(&mut self, kind: GateKind, ctl: &[Ctl], tgt: &[u32], angle: Option<DyadicAngle>) {
        let g = Gate::new(kind, ctl, tgt, angle).unwrap_or_else(|e| panic!("bad {kind} gate: {e}"));
        self.c.push(g).expect("qubit allocated by this builder");
    }

    pub fn x(&mut self, t: u32) {
        self.push(GateKind::X, &[], &[t], None);
    }

    pub fn cx(&mut self, c: impl Into<Ctl>, t: u32) {
        self.push(GateKind::CX, &[c.into()], &[t], None);
    }

    pub fn ccx(&mut self, a: impl Into<Ctl>, b: impl Into<Ctl>, t: u32) {
        self.push(GateKind::CCX, &[a.into(), b.into()], &[t], None);
    }

    /// X on `t` conditioned on every control in `ctl` (zero, one or two of them).
    pub fn mcx(&mut self, ctl: &[Ctl], t: u32) {
        match ctl {
            [] => self.x(t),
            [c] if c.neg => {
                self.x(t);
                self.cx(Ctl::pos(c.q), t);
            }
            [c] => self.cx(*c, t),
            [a, b] => self.ccx(*a, *b, t),
            _ => panic!("at most two controls supported"),
        }
    }

    pub fn swap(&mut self, a: u32, b: u32) {
        self.push(GateKind::SWAP, &[], &[a, b], None);
    }

    pub fn cswap(&mut self, c: impl Into<Ctl>, a: u32, b: u32) {
        self.push(GateKind::CSWAP, &[c.into()], &[a, b], None);
    }

    fn keep(&self, a: &DyadicAngle) -> bool {
        !a.is_zero() && self.truncation.is_none_or(|k| a.log2_den() <= k)
    }

    pub fn ry(&mut self, t: u32, a: DyadicAngle) {
        if self.keep(&a) {
            self.push(GateKind::RY, &[], &[t], Some(a));
        }
    }

    pub fn cry(&mut self, c: impl Into<Ctl>, t: u32, a: DyadicAngle) {
        if self.keep(&a) {
            self.push(GateKind::CRY, &[c.into()], &[t], Some(a));
        }
    }

    /// RY or CRY depending on whether a control is given.
    pub fn rot(&mut self, c: Option<Ctl>, t: u32, a: DyadicAngle) {
        match c {
            Some(c) => self.cry(c, t, a),
            None => self.ry(t, a),
        }
    }

    pub fn xs(&mut self, qs: &[u32]) {
        for &q in qs {
            self.x(q);
        }
    }

    /// Records a labelled range around the gates emitted by `f`.
    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Builder) -> T) -> T {
        let start = self.len();
        let out = f(self);
        let end = self.len();
        if end > start {
            self.c.meta.stages.push(Stage { name: name.to_string(), start, end });
        }
        out
    }

    pub fn transform<T>(&mut self, kind: TransformKind, width: usize, f: impl FnOnce(&mut Builder) -> T) -> T {
        let start = self.len();
        let out = f(self);
        let end = self.len();
        self.c.meta.transforms.push(Transform { kind, width: width as u32, start, end });
        out
    }

    /// Replaces the gates in `r` by their inverse, keeping metadata consistent.
    pub fn invert_range(&mut self, r: Range<usize>) {
        let (s, e) = (r.start, r.end);
        let inv: Vec<Gate> = self.c.gates[s..e].iter().rev().map(Gate::inverse).collect();
        self.c.gates.splice(s..e, inv);
        let mirror = |a: usize, b: usize| (s + e - b, s + e - a);
        let meta = &mut self.c.meta;
        let mut inner: Vec<Stage> = Vec::new();
        meta.stages.retain(|st| {
            if st.start >= s && st.end <= e {
                let (a, b) = mirror(st.start, st.end);
                inner.push(Stage { name: st.name.clone(), start: a, end: b });
                false
            } else {
                true
            }
        });
        inner.reverse();
        meta.stages.extend(inner);
        meta.stages.sort_by_key(|st| st.start);
        for t in meta.transforms.iter_mut().filter(|t| t.start >= s && t.end <= e) {
            (t.start, t.end) = mirror(t.start, t.end);
            t.kind = t.kind.inverse();
        }
        meta.transforms.sort_by_key(|t| t.start);
        for (_, i) in meta.marks.iter_mut().filter(|(_, i)| *i > s && *i < e) {
            *i = s + e - *i;
        }
        meta.marks.sort_by_key(|(_, i)| *i);
    }

    /// Appends the inverse of the gates in `r`.
    pub fn append_inverse(&mut self, r: Range<usize>) {
        let at = self.len();
        let inv: Vec<Gate> = self.c.gates[r.clone()].iter().rev().map(Gate::inverse).collect();
        self.c.gates.extend(inv);
        let end = self.len();
        let copies: Vec<Transform> = self
            .c
            .meta
            .transforms
            .iter()
            .filter(|t| t.start >= r.start && t.end <= r.end)
            .map(|t| Transform {
                kind: t.kind.inverse(),
                width: t.width,
                start: at + r.end - t.end,
                end: at + r.end - t.start,
            })
            .collect();
        self.c.meta.transforms.extend(copies);
        self.c.meta.transforms.sort_by_key(|t| t.start);
        debug_assert_eq!(end - at, r.len());
    }

    /// Emits `f`, then its inverse after `g` runs in between.
    pub fn conjugate<T>(&mut self, f: impl FnOnce(&mut Builder), g: impl FnOnce(&mut Builder) -> T) -> T {
        let s = self.len();
        f(self);
        let e = self.len();
        let out = g(self);
        self.append_inverse(s..e);
        out
    }

    /// Finalises the circuit: pooled qubits become the `work` register and any
    /// undeclared qubits become the `anc` register.
    pub fn finish(mut self) -> Circuit {
        if !self.work.is_empty() {
            let mut w = self.work.clone();
            w.sort_unstable();
            self.declare("work", &w, Role::Work);
        }
        let mut owned = vec![false; self.c.qubit_count as usize];
        for r in &self.c.registers {
            for &q in &r.qubits {
                owned[q as usize] = true;
            }
        }
        let rest: Vec<u32> = (0..self.c.qubit_count).filter(|&q| !owned[q as usize]).collect();
        if !rest.is_empty() {
            self.declare("anc", &rest, Role::Ancilla);
        }
        self.c.validate().expect("builder keeps registers disjoint");
        self.c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pool_reuses_qubits() {
        let mut b = Builder::new();
        b.reg("a", 2, Role::Input);
        let w = b.alloc(3);
        assert_eq!(w, vec![2, 3, 4]);
        b.free(&w);
        assert_eq!(b.alloc(2), vec![2, 3]);
        let c = b.finish();
        assert_eq!(c.register("work").unwrap().qubits, vec![2, 3, 4]);
        assert_eq!(c.data_qubits(), 2);
    }

    #[test]
    fn separate_pools_are_disjoint() {
        let mut b = Builder::new();
        let mut p1 = b.alloc(2);
        let mut p2 = b.alloc(2);
        let a = b.with_pool(&mut p1, |b| {
            let x = b.alloc(3);
            b.free(&x);
            x
        });
        let c = b.with_pool(&mut p2, |b| {
            let x = b.alloc(2);
            b.free(&x);
            x
        });
        assert_eq!(p1.len(), 3);
        assert!(a.iter().all(|q| !c.contains(q)));
        b.free(&p1);
        b.free(&p2);
        assert_eq!(b.pool_size(), 5);
    }

    #[test]
    fn invert_range_mirrors_metadata() {
        let mut b = Builder::new();
        let q = b.reg("q", 2, Role::Input);
        b.x(q[0]);
        let s = b.len();
        b.stage("inner", |b| {
            b.cx(q[0], q[1]);
            b.transform(TransformKind::Qft, 2, |b| b.cry(q[0], q[1], DyadicAngle::from_i64(1, 1).unwrap()));
        });
        let e = b.len();
        b.invert_range(s..e);
        let c = b.finish();
        assert_eq!(c.gates[1].kind(), GateKind::CRY);
        assert_eq!(c.meta.stages[0], Stage { name: "inner".into(), start: 1, end: 3 });
        assert_eq!(c.meta.transforms[0].kind, TransformKind::Iqft);
        assert_eq!((c.meta.transforms[0].start, c.meta.transforms[0].end), (1, 2));
    }

    #[test]
    fn truncation_drops_fine_rotations() {
        let mut b = Builder::new();
        let q = b.reg("q", 2, Role::Input);
        b.set_truncation(Some(2));
        b.cry(q[0], q[1], DyadicAngle::from_i64(1, 3).unwrap());
        b.cry(q[0], q[1], DyadicAngle::from_i64(1, 2).unwrap());
        b.ry(q[0], DyadicAngle::zero());
        assert_eq!(b.len(), 1);
    }
}
