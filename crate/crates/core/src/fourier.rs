//! Fourier-basis arithmetic with Y rotations.
//!
//! A width-`w` register holds `v` in the Fourier basis when qubit `k` carries the
//! rotation angle `v * pi / 2^k`. Bit `k` of `v` is then the angle `v_k * pi`, so
//! qubit 0 is the same in both bases and the zero register needs no transform.

use num_bigint::{BigInt, BigUint};
use num_traits::Zero;
use thiserror::Error;

use crate::angle::DyadicAngle;
use crate::builder::Builder;
use crate::circuit::{Ctl, TransformKind};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FourierError {
    #[error("multiplier {0} is even")]
    EvenMultiplier(BigUint),
    #[error("{addends} addends for {controls} control bits")]
    LengthMismatch { addends: usize, controls: usize },
}

/// `c * pi / 2^k`, exactly.
pub fn angle(c: &BigInt, k: u32) -> DyadicAngle {
    DyadicAngle::new(c.clone(), k).expect("rotation denominator within limits")
}

/// Binary to Fourier basis.
pub fn qft(b: &mut Builder, reg: &[u32]) {
    phi_mul_inplace(b, reg, &BigUint::from(1u32)).expect("1 is odd");
}

/// Fourier to binary basis.
pub fn iqft(b: &mut Builder, reg: &[u32]) {
    let s = b.len();
    b.transform(TransformKind::Qft, reg.len(), |b| qft_gates(b, reg, &BigInt::from(1)));
    b.invert_range(s..b.len());
}

fn qft_gates(b: &mut Builder, reg: &[u32], x: &BigInt) {
    let w = reg.len();
    for j in (1..w).rev() {
        for k in (0..j).rev() {
            b.cry(reg[k], reg[j], angle(x, (j - k) as u32));
        }
    }
}

/// Multiplies a binary register in place by an odd constant, leaving
/// `x * y mod 2^w` in the Fourier basis. With `x = 1` this is the QFT.
pub fn phi_mul_inplace(b: &mut Builder, reg: &[u32], x: &BigUint) -> Result<(), FourierError> {
    if x.is_zero() || !x.bit(0) {
        return Err(FourierError::EvenMultiplier(x.clone()));
    }
    let x = BigInt::from(x.clone());
    let kind = if x == BigInt::from(1) { TransformKind::Qft } else { TransformKind::PhiMul };
    b.transform(kind, reg.len(), |b| qft_gates(b, reg, &x));
    Ok(())
}

/// Adds `c / 2^shift` to a Fourier register, optionally controlled. A nonzero
/// `shift` encodes fractional addends exactly.
pub fn phi_add(b: &mut Builder, reg: &[u32], c: &BigInt, shift: u32, ctrl: Option<Ctl>) {
    if c.is_zero() {
        return;
    }
    for (k, &q) in reg.iter().enumerate() {
        b.rot(ctrl, q, angle(c, k as u32 + shift));
    }
}

pub fn phi_add_const(b: &mut Builder, reg: &[u32], c: &BigUint, subtract: bool, ctrl: Option<Ctl>) {
    let c = BigInt::from(c.clone());
    phi_add(b, reg, &if subtract { -c } else { c }, 0, ctrl);
}

/// Adds (or subtracts) the binary register `src` into the Fourier register `acc`.
pub fn phi_add_reg(b: &mut Builder, acc: &[u32], src: &[u32], subtract: bool) {
    let sign = BigInt::from(if subtract { -1 } else { 1 });
    for (j, &s) in src.iter().enumerate() {
        for (k, &q) in acc.iter().enumerate().skip(j) {
            b.cry(s, q, angle(&sign, (k - j) as u32));
        }
    }
}

/// `acc += sum_k ctl_k * addends[k]`, emitted diagonal by diagonal so that each
/// round touches every control and every target at most once.
pub fn phi_mac(b: &mut Builder, acc: &[u32], ctl: &[Ctl], addends: &[BigInt], shift: u32) -> Result<(), FourierError> {
    if ctl.len() != addends.len() {
        return Err(FourierError::LengthMismatch { addends: addends.len(), controls: ctl.len() });
    }
    let rows: Vec<usize> = (0..ctl.len()).filter(|&k| !addends[k].is_zero()).collect();
    let span = acc.len().max(rows.len());
    for s in 0..span {
        for (i, &k) in rows.iter().enumerate() {
            let j = (i + s) % span;
            if j < acc.len() {
                b.cry(ctl[k], acc[j], angle(&addends[k], j as u32 + shift));
            }
        }
    }
    Ok(())
}

/// Signed addends for [`phi_mac`].
pub fn signed(addends: &[BigUint], subtract: bool) -> Vec<BigInt> {
    addends
        .iter()
        .map(|a| {
            let a = BigInt::from(a.clone());
            if subtract { -a } else { a }
        })
        .collect()
}
