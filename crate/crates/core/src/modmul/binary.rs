//! Multiplier bodies built from binary adders.

use std::ops::Range;

use num_bigint::BigUint;
use num_traits::Zero;

use super::{Ctx, Design, Layout};
use crate::adders::{add, compare_const, AddSpec, AdderKind};
use crate::builder::Builder;
use crate::circuit::{Ctl, Role};
use crate::numtheory::{pow2, BarrettParams};

fn add_const(b: &mut Builder, kind: AdderKind, t: &[u32], c: &BigUint, ctrl: Option<Ctl>, minus: bool) {
    let mut s = AddSpec::constant(t, c.clone());
    s.control = ctrl;
    s.subtract = minus;
    add(b, kind, &s).expect("disjoint operands");
}

fn add_reg(b: &mut Builder, kind: AdderKind, t: &[u32], a: &[u32], ctrl: Option<Ctl>, minus: bool) {
    let mut s = AddSpec::register(t, a);
    s.control = ctrl;
    s.subtract = minus;
    add(b, kind, &s).expect("disjoint operands");
}

/// `acc += sum_k y_k c_k` for a zero `acc`; the first term is a plain copy.
fn multiply(b: &mut Builder, kind: AdderKind, acc: &[u32], y: &[u32], consts: &[BigUint]) {
    for (k, (&q, c)) in y.iter().zip(consts).enumerate() {
        if k == 0 {
            for (i, &t) in acc.iter().enumerate() {
                if c.bit(i as u64) {
                    b.cx(q, t);
                }
            }
        } else {
            add_const(b, kind, acc, c, Some(Ctl::pos(q)), false);
        }
    }
}

/// Controlled modular addition `t[..n] = t[..n] + ctrl * a mod N` on an
/// `(n+1)`-qubit register whose top qubit starts and ends at zero, using two
/// adders and one comparator.
pub fn modular_add(b: &mut Builder, kind: AdderKind, t: &[u32], a: &BigUint, ctrl: Ctl, nmod: &BigUint) {
    let n = t.len() - 1;
    let wrap = pow2(n + 1);
    add_const(b, kind, t, &((&wrap + a - nmod) % &wrap), Some(ctrl), false);
    add_const(b, kind, &t[..n], nmod, Some(Ctl::pos(t[n])), false);
    // the sign is set exactly when no reduction happened, i.e. when the sum is >= a
    compare_const(b, kind, &t[..n], a, t[n], Some(ctrl), false);
}

/// In-place `q = q * c mod 2^w` for odd `c`, most significant control first.
pub fn mul_const_inplace(b: &mut Builder, kind: AdderKind, q: &[u32], c: &BigUint) {
    assert!(c.bit(0), "multiplier must be odd");
    let half = c >> 1u32;
    for k in (0..q.len().saturating_sub(1)).rev() {
        add_const(b, kind, &q[k + 1..], &half, Some(Ctl::pos(q[k])), false);
    }
}

/// `v = 2v mod N` for `v < N`, using the zero qubit `f` as the shifted-out bit.
/// Since `N` is odd, the parity of the result says whether `N` was subtracted.
pub fn shift_reduce(b: &mut Builder, kind: AdderKind, v: &[u32], f: u32, nmod: &BigUint) {
    let n = v.len();
    b.swap(v[n - 1], f);
    for i in (1..n).rev() {
        b.swap(v[i], v[i - 1]);
    }
    let w: Vec<u32> = v.iter().copied().chain([f]).collect();
    add_const(b, kind, &w, nmod, None, true);
    add_const(b, kind, v, nmod, Some(Ctl::pos(f)), false);
    b.cx(v[0], f);
    b.x(f);
}

/// `target -= sum_k ctl_k * addends_k mod 2^w`. Terms are split over as many
/// scratch accumulators as the work pool can hold; the partial sums are combined
/// pairwise, subtracted, and then uncomputed.
pub fn clear_by_mac(b: &mut Builder, kind: AdderKind, target: &[u32], ctl: &[Ctl], addends: &[BigUint]) {
    let w = target.len();
    let terms: Vec<(Ctl, BigUint)> = ctl
        .iter()
        .zip(addends)
        .map(|(&c, a)| (c, a % pow2(w)))
        .filter(|(_, a)| !a.is_zero())
        .collect();
    let run = |b: &mut Builder, t: &[u32], chunk: &[(Ctl, BigUint)], minus: bool| {
        for (c, a) in chunk {
            add_const(b, kind, t, a, Some(*c), minus);
        }
    };
    let fp = 4 * (w + 1);
    let groups = (b.pool_size() / fp).clamp(1, terms.len().div_ceil(w).max(1));
    if groups <= 1 {
        run(b, target, &terms, true);
        return;
    }
    let chunks: Vec<&[(Ctl, BigUint)]> = terms.chunks(terms.len().div_ceil(groups)).collect();
    let mut pools: Vec<Vec<u32>> = (0..chunks.len()).map(|_| b.alloc(fp - w)).collect();
    let regs: Vec<Vec<u32>> = (1..chunks.len()).map(|_| b.alloc(w)).collect();
    b.with_pool(&mut pools[0], |b| run(b, target, chunks[0], true));
    let s = b.len();
    for (i, chunk) in chunks.iter().enumerate().skip(1) {
        b.with_pool(&mut pools[i], |b| run(b, &regs[i - 1], chunk, false));
    }
    let e = b.len();
    let mut live: Vec<usize> = (0..regs.len()).collect();
    while live.len() > 1 {
        let mut next = Vec::new();
        for pair in live.chunks(2) {
            if let [l, r] = *pair {
                b.with_pool(&mut pools[l + 1], |b| add_reg(b, kind, &regs[l], &regs[r], None, false));
            }
            next.push(pair[0]);
        }
        live = next;
    }
    let f = b.len();
    b.with_pool(&mut pools[0], |b| add_reg(b, kind, target, &regs[0], None, true));
    b.append_inverse(e..f);
    b.append_inverse(s..e);
    for r in regs.iter().rev() {
        b.free(r);
    }
    for p in pools.iter().rev() {
        b.free(p);
    }
}

/// Reduces `acc` (holding `t < 2^m N`) to `t mod N` in `acc[..n]` and `t div N`
/// in `acc[n..]`, most significant quotient bit first. Each trial subtraction
/// leaves its sign, the inverted quotient bit, in the vacated top qubit of its
/// window; a closing X layer turns these into the quotient.
pub fn division_reduce(b: &mut Builder, kind: AdderKind, acc: &[u32], n: usize, nmod: &BigUint) {
    let m = acc.len() - n;
    for k in (0..m).rev() {
        add_const(b, kind, &acc[k..k + n + 1], nmod, None, true);
        add_const(b, kind, &acc[k..k + n], nmod, Some(Ctl::pos(acc[k + n])), false);
    }
    b.xs(&acc[n..]);
}

fn montgomery_reduce(b: &mut Builder, kind: AdderKind, acc: &[u32], n: usize, m: usize, nmod: &BigUint) {
    let half = nmod >> 1u32;
    for i in 0..m {
        add_const(b, kind, &acc[i + 1..], &half, Some(Ctl::pos(acc[i])), true);
    }
    let sign = acc[n + m];
    add_const(b, kind, &acc[m..m + n], nmod, Some(Ctl::pos(sign)), false);
    b.cx(acc[m], sign);
}

fn u_reg(acc: &[u32], n: usize, m: usize) -> Vec<u32> {
    acc[..m].iter().chain(&acc[n + m..]).copied().collect()
}

/// Steps from the quotient estimate to the reduced product; returns the range
/// that computed the estimate so it can be reversed.
fn barrett_reduce(b: &mut Builder, kind: AdderKind, s: &[u32], xy: &[u32], qh: &[u32], adj: u32, n: usize, bp: &BarrettParams) -> Range<usize> {
    let nmod = &bp.modulus;
    let r0 = b.len();
    for (j, &q) in xy.iter().enumerate() {
        add_const(b, kind, qh, &bp.est_coeff(j), Some(Ctl::pos(q)), false);
    }
    let r1 = b.len();
    let qbits = &qh[bp.s2..];
    let sub_qn = |b: &mut Builder, minus: bool| {
        for (i, &q) in qbits.iter().enumerate() {
            add_const(b, kind, &s[i..], nmod, Some(Ctl::pos(q)), minus);
        }
    };
    sub_qn(b, true);
    compare_const(b, kind, &s[..n + 1], nmod, adj, None, false);
    add_const(b, kind, &s[..n + 1], nmod, Some(Ctl::pos(adj)), true);
    sub_qn(b, false);
    // s - xy * 2^n_t is negative exactly when the adjustment happened
    let top = *s.last().expect("nonempty");
    add_reg(b, kind, &s[bp.n_t..], xy, None, true);
    b.cx(top, adj);
    add_reg(b, kind, &s[bp.n_t..], xy, None, false);
    sub_qn(b, true);
    r0..r1
}

pub(super) fn body(b: &mut Builder, cx: &Ctx) {
    let (kind, n, m, nmod) = (cx.kind, cx.n, cx.m, cx.nmod);
    let y = cx.y;
    let partials = &cx.mc.partials;
    match cx.lay {
        Layout::Baseline { t, .. } => {
            b.stage("multiplication", |b| {
                for (k, p) in partials.iter().enumerate() {
                    modular_add(b, kind, t, p, Ctl::pos(y[k]), nmod);
                }
            });
        }
        Layout::Division { acc } => {
            b.stage("multiplication", |b| multiply(b, kind, acc, y, partials));
            b.stage("reduction", |b| division_reduce(b, kind, acc, n, nmod));
            b.stage("uncomputation", |b| {
                let q = &acc[n..];
                mul_const_inplace(b, kind, q, nmod);
                add_reg(b, kind, q, &acc[..m], None, false);
                clear_by_mac(b, kind, q, &cx.y_ctl(), partials);
            });
        }
        Layout::Montgomery { acc } => {
            b.stage("multiplication", |b| multiply(b, kind, acc, y, partials));
            b.stage("reduction", |b| montgomery_reduce(b, kind, acc, n, m, nmod));
            b.stage("uncomputation", |b| {
                clear_by_mac(b, kind, &u_reg(acc, n, m), &cx.y_ctl(), &cx.mc.uncompute_addends);
            });
        }
        Layout::Barrett { s, xy, qh, adj } => {
            let bp = BarrettParams::new(nmod).expect("validated modulus");
            let approx: Vec<BigUint> = partials.iter().map(|p| bp.approx_partial(p)).collect();
            b.stage("multiplication", |b| {
                multiply(b, kind, s, y, partials);
                // separate scratch keeps the narrow products off the main adders' qubits
                b.with_side_pool(|b| multiply(b, kind, xy, y, &approx));
            });
            let r3 = b.stage("reduction", |b| barrett_reduce(b, kind, s, xy, qh, *adj, n, &bp));
            b.stage("uncomputation", |b| {
                b.append_inverse(r3);
                clear_by_mac(b, kind, xy, &cx.y_ctl(), &approx);
            });
        }
    }
}

/// Out-of-place product of two quantum registers. Partials `2^k x mod N` are
/// produced by shifting `x` in place and undone in reverse during
/// uncomputation, so `x` is returned unchanged.
pub(super) fn body_qq(b: &mut Builder, cx: &Ctx, x: &[u32]) {
    let (kind, n, m, nmod) = (cx.kind, cx.n, cx.m, cx.nmod);
    let y = cx.y;
    let f = b.reg("flag", 1, Role::Flag)[0];
    let shift = |b: &mut Builder| {
        let s = b.len();
        shift_reduce(b, kind, x, f, nmod);
        s..b.len()
    };
    // Montgomery absorbs 2^-m, so the partials start from x 2^m mod N
    let pre: Vec<Range<usize>> = match cx.spec.design {
        Design::Montgomery => b.stage("operand_shift", |b| (0..m).map(|_| shift(b)).collect()),
        _ => Vec::new(),
    };
    let (acc, hi) = match cx.lay {
        Layout::Division { acc } | Layout::Montgomery { acc } => (acc.clone(), None),
        Layout::Barrett { s, xy, .. } => (s.clone(), Some(xy.clone())),
        Layout::Baseline { .. } => unreachable!("rejected by validation"),
    };
    let bp = BarrettParams::new(nmod).expect("validated modulus");
    let steps: Vec<Range<usize>> = b.stage("multiplication", |b| {
        let mut steps = Vec::new();
        for k in 0..n {
            let c = Some(Ctl::pos(y[k]));
            add_reg(b, kind, &acc, x, c, false);
            if let Some(xy) = &hi {
                add_reg(b, kind, xy, &x[bp.n_t..], c, false);
            }
            if k + 1 < n {
                steps.push(shift(b));
            }
        }
        steps
    });
    // walks the partials back down, clearing `target` term by term
    let unwind = |b: &mut Builder, target: &[u32], src: &[u32]| {
        for k in (0..n).rev() {
            add_reg(b, kind, target, src, Some(Ctl::pos(y[k])), true);
            if k > 0 {
                b.append_inverse(steps[k - 1].clone());
            }
        }
    };
    match cx.lay {
        Layout::Division { acc } => {
            b.stage("reduction", |b| division_reduce(b, kind, acc, n, nmod));
            b.stage("uncomputation", |b| {
                let q = &acc[n..];
                mul_const_inplace(b, kind, q, nmod);
                add_reg(b, kind, q, &acc[..m], None, false);
                unwind(b, q, &x[..m]);
            });
        }
        Layout::Montgomery { acc } => {
            b.stage("reduction", |b| montgomery_reduce(b, kind, acc, n, m, nmod));
            b.stage("uncomputation", |b| {
                let u = u_reg(acc, n, m);
                mul_const_inplace(b, kind, &u, nmod);
                unwind(b, &u, &x[..m + 1]);
                for r in pre.iter().rev() {
                    b.append_inverse(r.clone());
                }
            });
        }
        Layout::Barrett { s, xy, qh, adj } => {
            let r3 = b.stage("reduction", |b| barrett_reduce(b, kind, s, xy, qh, *adj, n, &bp));
            b.stage("uncomputation", |b| {
                b.append_inverse(r3);
                unwind(b, xy, &x[bp.n_t..]);
            });
        }
        Layout::Baseline { .. } => unreachable!("rejected by validation"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::simulate;

    #[test]
    fn shift_reduce_examples() {
        for kind in AdderKind::BINARY {
            for (v, want) in [(3u64, 6u64), (5, 3), (0, 0), (6, 5)] {
                let mut b = Builder::new();
                let r = b.reg("y", 3, Role::Input);
                let f = b.reg("f", 1, Role::Flag)[0];
                shift_reduce(&mut b, kind, &r, f, &BigUint::from(7u32));
                let out = simulate(&b.finish(), &[("y", v)]).unwrap();
                assert_eq!(out["y"], BigUint::from(want), "{kind} v={v}");
                assert_eq!(out["f"], BigUint::zero());
                assert!(out["work"].is_zero());
            }
        }
    }

    #[test]
    fn modular_add_examples() {
        for kind in AdderKind::BINARY {
            for (t, a, c, want) in [(3u64, 5u64, 1u64, 1u64), (3, 5, 0, 3), (6, 6, 1, 5), (0, 4, 1, 4)] {
                let mut b = Builder::new();
                let ctl = b.reg("c", 1, Role::Input)[0];
                let r = b.reg("y", 4, Role::Input);
                modular_add(&mut b, kind, &r, &BigUint::from(a), Ctl::pos(ctl), &BigUint::from(7u32));
                let out = simulate(&b.finish(), &[("y", t), ("c", c)]).unwrap();
                assert_eq!(out["y"], BigUint::from(want), "{kind} t={t} a={a} c={c}");
            }
        }
    }

    #[test]
    fn modular_add_exhaustive_13() {
        let nm = BigUint::from(13u32);
        for kind in AdderKind::BINARY {
            for a in 0..13u64 {
                let mut b = Builder::new();
                let ctl = b.reg("c", 1, Role::Input)[0];
                let r = b.reg("y", 5, Role::Input);
                modular_add(&mut b, kind, &r, &BigUint::from(a), Ctl::pos(ctl), &nm);
                let c = b.finish();
                for t in 0..13u64 {
                    for on in 0..2u64 {
                        let out = simulate(&c, &[("y", t), ("c", on)]).unwrap();
                        assert_eq!(out["y"], BigUint::from((t + on * a) % 13), "{kind} t={t} a={a}");
                    }
                }
            }
        }
    }

    #[test]
    fn mul_const_inplace_exhaustive() {
        for kind in AdderKind::BINARY {
            for c in [1u64, 3, 7, 13] {
                for q in 0..16u64 {
                    let mut b = Builder::new();
                    let r = b.reg("y", 4, Role::Input);
                    mul_const_inplace(&mut b, kind, &r, &BigUint::from(c));
                    let out = simulate(&b.finish(), &[("y", q)]).unwrap();
                    assert_eq!(out["y"], BigUint::from(q * c % 16));
                }
            }
        }
    }

    #[test]
    fn division_reduce_quotient_and_remainder() {
        // t = 45 = 6 * 7 + 3
        let mut b = Builder::new();
        let acc = b.reg("acc", 6, Role::Input);
        division_reduce(&mut b, AdderKind::Ripple, &acc, 3, &BigUint::from(7u32));
        let out = simulate(&b.finish(), &[("acc", 45)]).unwrap();
        assert_eq!(out["acc"], BigUint::from(6u32 * 8 + 3));
    }

    #[test]
    fn clear_by_mac_splits_over_the_pool() {
        let addends: Vec<BigUint> = [3u32, 5, 6, 7, 1, 2, 4, 7].iter().map(|&a| BigUint::from(a)).collect();
        for kind in AdderKind::BINARY {
            let mut b = Builder::new();
            let y = b.reg("y", 8, Role::Input);
            let t = b.reg("t", 3, Role::Input);
            let warm = b.alloc(64);
            b.free(&warm);
            let ctl: Vec<Ctl> = y.iter().map(|&q| Ctl::pos(q)).collect();
            clear_by_mac(&mut b, kind, &t, &ctl, &addends);
            let c = b.finish();
            for yv in [0u64, 1, 0b1011_0110, 255] {
                let sum: u64 = (0..8).filter(|k| yv >> k & 1 == 1).map(|k| [3, 5, 6, 7, 1, 2, 4, 7][k]).sum();
                let out = simulate(&c, &[("y", yv), ("t", sum % 8)]).unwrap();
                assert!(out["t"].is_zero(), "{kind} y={yv}");
                assert!(out["work"].is_zero());
            }
        }
    }
}
