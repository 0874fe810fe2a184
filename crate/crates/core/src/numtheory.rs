//! Classical big-integer oracles and precomputed constants.

use num_bigint::{BigInt, BigUint, RandBigInt, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NumError {
    #[error("{0} and {1} are not coprime")]
    NotCoprime(BigUint, BigUint),
    #[error("modulus must be at least 2")]
    SmallModulus,
    #[error("modulus {0} is even")]
    EvenModulus(BigUint),
    #[error("{0} is out of range")]
    OutOfRange(String),
}

/// `ceil(log2(x))` for `x >= 1`.
pub fn ceil_log2(x: u64) -> u32 {
    assert!(x >= 1);
    64 - (x - 1).leading_zeros()
}

pub fn floor_log2(x: u64) -> u32 {
    assert!(x >= 1);
    63 - x.leading_zeros()
}

pub fn bit(v: &BigUint, i: usize) -> bool {
    v.bit(i as u64)
}

pub fn pow2(k: usize) -> BigUint {
    BigUint::one() << k
}

/// `v mod 2^w`.
pub fn low_bits(v: &BigUint, w: usize) -> BigUint {
    v & (pow2(w) - 1u32)
}

/// `-v mod 2^w`.
pub fn neg_mod_pow2(v: &BigUint, w: usize) -> BigUint {
    let r = low_bits(v, w);
    if r.is_zero() {
        r
    } else {
        pow2(w) - r
    }
}

pub fn mod_inverse(a: &BigUint, m: &BigUint) -> Result<BigUint, NumError> {
    if *m < BigUint::from(2u32) {
        return Err(NumError::SmallModulus);
    }
    let ai = BigInt::from_biguint(Sign::Plus, a % m);
    let mi = BigInt::from_biguint(Sign::Plus, m.clone());
    let e = ai.extended_gcd(&mi);
    if !e.gcd.is_one() {
        return Err(NumError::NotCoprime(a.clone(), m.clone()));
    }
    Ok(e.x.mod_floor(&mi).to_biguint().expect("non-negative"))
}

/// Result of one classical Montgomery reduction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Redc {
    /// `t * 2^-m mod N`.
    pub s: BigUint,
    /// `t * N^-1 mod 2^m`.
    pub u: BigUint,
    /// `(t - uN) / 2^m`, which lies in `[-N, N)`.
    pub estimate: BigInt,
}

pub fn redc_oracle(t: &BigUint, n_mod: &BigUint, m: usize) -> Result<Redc, NumError> {
    if n_mod.is_even() {
        return Err(NumError::EvenModulus(n_mod.clone()));
    }
    if *t >= n_mod << m {
        return Err(NumError::OutOfRange(format!("t = {t}")));
    }
    let r = pow2(m);
    let u = if m == 0 { BigUint::zero() } else { (t * mod_inverse(n_mod, &r)?) % &r };
    let diff = BigInt::from(t.clone()) - BigInt::from(&u * n_mod);
    let estimate = diff >> m;
    let nb = BigInt::from(n_mod.clone());
    let s = if estimate.sign() == Sign::Minus { &estimate + &nb } else { estimate.clone() };
    Ok(Redc { s: s.to_biguint().expect("corrected estimate is non-negative"), u, estimate })
}

/// Precomputed constants for multiplication by a fixed `X` modulo `N`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModulusCtx {
    pub modulus: BigUint,
    pub multiplier: BigUint,
    pub n: usize,
    pub m: usize,
    /// `N^-1 mod 2^(m+1)`.
    pub n_inv: BigUint,
    /// `2^k X mod N` for `k < n`.
    pub partials: Vec<BigUint>,
    /// `partials[k] * N^-1 mod 2^(m+1)`.
    pub uncompute_addends: Vec<BigUint>,
}

impl ModulusCtx {
    /// `2^k X mod N` for any `k`.
    pub fn partial(&self, k: usize) -> BigUint {
        (&self.multiplier << k) % &self.modulus
    }
}

pub fn build_ctx(modulus: &BigUint, x: &BigUint) -> Result<ModulusCtx, NumError> {
    if modulus.is_even() {
        return Err(NumError::EvenModulus(modulus.clone()));
    }
    if x.is_zero() || x >= modulus {
        return Err(NumError::OutOfRange(format!("X = {x}")));
    }
    let n = modulus.bits() as usize;
    let m = ceil_log2(n as u64) as usize;
    let r = pow2(m + 1);
    let n_inv = mod_inverse(modulus, &r)?;
    let partials: Vec<BigUint> = (0..n).map(|k| (x << k) % modulus).collect();
    let uncompute_addends = partials.iter().map(|p| (p * &n_inv) % &r).collect();
    Ok(ModulusCtx {
        modulus: modulus.clone(),
        multiplier: x.clone(),
        n,
        m,
        n_inv,
        partials,
        uncompute_addends,
    })
}

/// Widths and constants for the truncated Barrett quotient estimate.
///
/// With `L = ceil(log2 n)`: each partial keeps its top `n_k = L + 2` bits, `nu = 2^(n-1)/N`
/// is kept to `n_v = L + 3` fractional bits, and the product of the two is computed with
/// `s1 = L + 2` bits dropped from every addend before the final `s2 = L + 2` bit shift.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BarrettParams {
    pub k: usize,
    pub mu: BigUint,
    pub nu_bits: usize,
    pub nu_trunc: BigUint,
    pub n_k: usize,
    pub n_t: usize,
    pub s1: usize,
    pub s2: usize,
    /// Width of the approximate-product and quotient-estimate registers, `2L + 2`.
    pub est_width: usize,
    /// Quotient bits, `L`.
    pub q_bits: usize,
    /// Fraction bits of the Fourier variant's scaled quotient.
    pub frac_bits: usize,
    pub modulus: BigUint,
}

impl BarrettParams {
    pub fn new(modulus: &BigUint) -> Result<BarrettParams, NumError> {
        if modulus.is_even() {
            return Err(NumError::EvenModulus(modulus.clone()));
        }
        let k = modulus.bits() as usize;
        if k < 4 {
            return Err(NumError::OutOfRange(format!("N = {modulus} is narrower than 4 bits")));
        }
        let l = ceil_log2(k as u64) as usize;
        let n_k = l + 2;
        let nu_bits = l + 3;
        Ok(BarrettParams {
            k,
            mu: pow2(2 * k) / modulus,
            nu_bits,
            nu_trunc: pow2(k - 1 + nu_bits) / modulus,
            n_k,
            n_t: k.saturating_sub(n_k),
            s1: l + 2,
            s2: l + 2,
            est_width: 2 * l + 2,
            q_bits: l,
            frac_bits: l + 2,
            modulus: modulus.clone(),
        })
    }

    /// Addend for bit `j` of the approximate product: `floor(nu_trunc * 2^j / 2^s1)`.
    pub fn est_coeff(&self, j: usize) -> BigUint {
        (&self.nu_trunc << j) >> self.s1
    }

    /// Truncated partial `floor(p / 2^n_t)`.
    pub fn approx_partial(&self, p: &BigUint) -> BigUint {
        p >> self.n_t
    }

    /// Fourier variant addend `floor(p * 2^f / N)`.
    pub fn scaled_partial(&self, p: &BigUint) -> BigUint {
        (p << self.frac_bits) / &self.modulus
    }
}

/// Quotient estimate computed by the binary Barrett circuit from the approximate
/// product `approx_t = sum y_i floor(p_i / 2^n_t)`.
pub fn barrett_qhat_oracle(t: &BigUint, p: &BarrettParams, approx_t: &BigUint) -> Result<BigUint, NumError> {
    if *t >= &p.modulus * p.k {
        return Err(NumError::OutOfRange(format!("t = {t}")));
    }
    if approx_t.bits() as usize > p.est_width {
        return Err(NumError::OutOfRange(format!("approximate product {approx_t}")));
    }
    let mut acc = BigUint::zero();
    for j in 0..p.est_width {
        if approx_t.bit(j as u64) {
            acc += p.est_coeff(j);
        }
    }
    Ok(acc >> p.s2)
}

/// The textbook estimate `floor(floor(t / 2^(k-1)) * mu / 2^(k+1))`.
pub fn barrett_qhat_classic(t: &BigUint, modulus: &BigUint) -> BigUint {
    let k = modulus.bits() as usize;
    let mu = pow2(2 * k) / modulus;
    ((t >> (k - 1)) * mu) >> (k + 1)
}

pub fn mul_mod(a: &BigUint, b: &BigUint, modulus: &BigUint) -> BigUint {
    (a * b) % modulus
}

/// Odd `N` drawn uniformly from `(2^(n-1), 2^n)`.
pub fn sample_modulus<R: Rng + ?Sized>(n: usize, rng: &mut R) -> BigUint {
    let lo = pow2(n - 1);
    let half = rng.gen_biguint_below(&pow2(n - 2));
    lo + (half << 1u32) + 1u32
}

/// `X` drawn uniformly from `(0, N)`, optionally restricted to units.
pub fn sample_multiplier<R: Rng + ?Sized>(modulus: &BigUint, coprime: bool, rng: &mut R) -> BigUint {
    loop {
        let x = rng.gen_biguint_range(&BigUint::one(), modulus);
        if !coprime || x.gcd(modulus).is_one() {
            return x;
        }
    }
}

pub fn to_u64(v: &BigUint) -> u64 {
    v.to_u64().expect("value fits in 64 bits")
}
