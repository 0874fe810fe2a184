//! Multiplier bodies in the Fourier basis.

use num_bigint::{BigInt, BigUint};

use super::{Ctx, Layout};
use crate::builder::Builder;
use crate::circuit::Ctl;
use crate::fourier::{angle, iqft, phi_add, phi_add_reg, phi_mac, phi_mul_inplace, qft, signed};
use crate::numtheory::{pow2, BarrettParams};

fn big(v: &BigUint) -> BigInt {
    BigInt::from(v.clone())
}

fn mac(b: &mut Builder, acc: &[u32], ctl: &[Ctl], addends: &[BigUint], subtract: bool) {
    phi_mac(b, acc, ctl, &signed(addends, subtract), 0).expect("one addend per control");
}

/// `reg += sign * sum_i q_i N 2^i`, each term applied to the qubits at and above `i`.
fn add_multiple(b: &mut Builder, reg: &[u32], q: &[u32], nmod: &BigInt, subtract: bool) {
    let c = if subtract { -nmod } else { nmod.clone() };
    for (i, &qi) in q.iter().enumerate() {
        phi_add(b, &reg[i..], &c, 0, Some(Ctl::pos(qi)));
    }
}

/// Controlled `reg += c`, most significant qubit first: those qubits leave the
/// preceding transform earliest.
fn add_top_down(b: &mut Builder, reg: &[u32], c: &BigInt, ctrl: u32) {
    for k in (0..reg.len()).rev() {
        b.cry(ctrl, reg[k], angle(c, k as u32));
    }
}

/// `acc -= sum_k ctl_k addends_k`, one row at a time from the top control down,
/// each row starting on a different target. When the body is inverted the rows
/// run low control first, matching the order in which an inverse transform on
/// the controls releases its qubits.
fn staggered_mac(b: &mut Builder, acc: &[u32], ctl: &[Ctl], addends: &[BigUint]) {
    let w = acc.len();
    for (k, c) in addends.iter().enumerate().rev() {
        let c = -big(c);
        for s in 0..w {
            let j = (k + s) % w;
            b.cry(ctl[k], acc[j], angle(&c, j as u32));
        }
    }
}

pub(super) fn body(b: &mut Builder, cx: &Ctx) {
    let (n, m) = (cx.n, cx.m);
    let nmod = big(cx.nmod);
    let y = cx.y_ctl();
    let partials = &cx.mc.partials;
    match cx.lay {
        Layout::Baseline { t, flag } => {
            let flag = flag.expect("fourier baseline has a flag");
            let top = t[n];
            b.stage("multiplication", |b| {
                for (k, p) in partials.iter().enumerate() {
                    let (c, p) = (Some(y[k]), big(p));
                    phi_add(b, t, &(&p - &nmod), 0, c);
                    iqft(b, t);
                    b.cx(top, flag);
                    qft(b, t);
                    phi_add(b, t, &nmod, 0, Some(Ctl::pos(flag)));
                    phi_add(b, t, &-&p, 0, c);
                    iqft(b, t);
                    // the wrap flag equals the complement of the sign of (sum - p)
                    b.x(top);
                    b.ccx(y[k], top, flag);
                    b.x(top);
                    qft(b, t);
                    phi_add(b, t, &p, 0, c);
                }
                iqft(b, t);
            });
        }
        Layout::Division { acc } => {
            b.stage("multiplication", |b| mac(b, acc, &y, partials, false));
            b.stage("reduction", |b| {
                // split off the low bits so acc[m-1..] is a clean (n+1)-qubit window
                let j = m - 1;
                iqft(b, &acc[..j]);
                for i in 0..j {
                    for h in j..acc.len() {
                        b.cry(acc[i], acc[h], angle(&BigInt::from(-1), (h - i) as u32));
                    }
                }
                for j in (0..m).rev() {
                    let win = &acc[j..j + n + 1];
                    phi_add(b, win, &-&nmod, 0, None);
                    iqft(b, win);
                    qft(b, &win[..n]);
                    add_top_down(b, &win[..n], &nmod, win[n]);
                    if j > 0 {
                        for k in 1..=n {
                            b.cry(acc[j - 1], acc[j - 1 + k], angle(&BigInt::from(1), k as u32));
                        }
                    }
                }
                b.xs(&acc[n..]);
                iqft(b, &acc[..n]);
            });
            b.stage("uncomputation", |b| {
                let q = &acc[n..];
                let nlow = cx.nmod % pow2(m);
                phi_mul_inplace(b, q, &nlow).expect("N is odd");
                phi_add_reg(b, q, &acc[..m], false);
                let low: Vec<BigUint> = partials.iter().map(|p| p % pow2(m)).collect();
                mac(b, q, &y, &low, true);
            });
        }
        Layout::Montgomery { acc } => {
            b.stage("multiplication", |b| mac(b, acc, &y, partials, false));
            b.stage("reduction", |b| {
                for i in 0..m {
                    phi_add(b, &acc[i + 1..], &-&nmod, 1, Some(Ctl::pos(acc[i])));
                }
                let est = &acc[m..];
                iqft(b, est);
                qft(b, &est[..n]);
                add_top_down(b, &est[..n], &nmod, est[n]);
                b.cx(est[0], est[n]);
                if !cx.fourier_out {
                    iqft(b, &est[..n]);
                }
            });
            b.stage("uncomputation", |b| {
                let u: Vec<u32> = acc[..m].iter().chain(&acc[n + m..]).copied().collect();
                qft(b, &u);
                staggered_mac(b, &u, &y, &cx.mc.uncompute_addends);
            });
        }
        Layout::Barrett { s, qh, adj, .. } => {
            let adj = *adj;
            let bp = BarrettParams::new(cx.nmod).expect("validated modulus");
            let f = bp.frac_bits;
            let scaled: Vec<BigUint> = partials.iter().map(|p| bp.scaled_partial(p)).collect();
            let top = *s.last().expect("nonempty");
            let r1 = b.stage("multiplication", |b| {
                mac(b, s, &y, partials, false);
                let r = b.len();
                mac(b, qh, &y, &scaled, false);
                iqft(b, qh);
                r..b.len()
            });
            b.stage("reduction", |b| {
                let (frac, qbits) = qh.split_at(f);
                add_multiple(b, s, qbits, &nmod, true);
                phi_add(b, s, &-&nmod, 0, None);
                iqft(b, s);
                b.cx(top, adj);
                b.x(adj);
                qft(b, s);
                phi_add(b, s, &nmod, 0, Some(Ctl::neg(adj)));
                // adj is set exactly when r 2^f - frac N < 0; build that value in
                // the Fourier window frac ++ s and read its sign
                let neg = pow2(f) - cx.nmod % pow2(f);
                let win: Vec<u32> = frac.iter().chain(s.iter()).copied().collect();
                let r = b.len();
                for (i, &q) in frac.iter().enumerate() {
                    phi_add(b, s, &-(&nmod << i), f as u32, Some(Ctl::pos(q)));
                }
                phi_mul_inplace(b, frac, &neg).expect("N is odd");
                iqft(b, &win);
                let e = b.len();
                b.cx(top, adj);
                b.append_inverse(r..e);
                iqft(b, s);
            });
            b.stage("uncomputation", |b| b.append_inverse(r1));
        }
    }
}
