//! Scalar abstraction and exact phase arithmetic.
//!
//! Floating-point code in this crate is generic over [`Real`] (implemented
//! for `f32` and `f64`). Phases of the form `λ·M` with `M` an exact integer
//! are reduced modulo one using the exact dyadic value of `λ`, so the only
//! rounding is the final conversion of the fractional part.

use std::fmt::{Debug, Display};

use num_bigint::{BigInt, BigUint, Sign};
use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, One, Signed, ToPrimitive, Zero};

/// Floating-point scalar usable throughout the crate.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Send + Sync + Debug + Display + 'static
{
    /// Lossless-enough conversion from `f64` constants.
    fn c(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `e(t) = exp(2πi t)`.
#[inline]
pub fn unit<T: Real>(turns: T) -> Complex<T> {
    let angle = T::TAU() * turns;
    let (s, c) = angle.sin_cos();
    Complex::new(c, s)
}

/// `e(num/den)` with the rational phase reduced exactly before the division.
#[inline]
pub fn unit_rational<T: Real>(num: u128, den: u128) -> Complex<T> {
    let r = num % den;
    // The wrap keeps the angle inside (-π, π].
    let t = if 2 * r > den {
        -((den - r) as f64 / den as f64)
    } else {
        r as f64 / den as f64
    };
    unit(T::c(t))
}

/// Exact decomposition of a finite float as `sign · mantissa · 2^exp`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dyadic {
    pub negative: bool,
    pub mantissa: u64,
    pub exp: i32,
}

impl Dyadic {
    pub fn of<T: Real>(v: T) -> Self {
        let (mantissa, exp, sign) = v.integer_decode();
        Dyadic {
            negative: sign < 0 && mantissa != 0,
            mantissa,
            exp: exp as i32,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0
    }

    /// Exact value as `numerator / 2^shift` with `shift >= 0`.
    pub fn to_scaled(&self) -> (BigInt, u32) {
        let mut num = BigInt::from(self.mantissa);
        if self.negative {
            num = -num;
        }
        if self.exp >= 0 {
            (num << self.exp as usize, 0)
        } else {
            (num, (-self.exp) as u32)
        }
    }

    /// Fractional part of `self · m` in `[0, 1)`, exact up to the final rounding.
    pub fn frac_mul_u128(&self, m: u128) -> f64 {
        if self.mantissa == 0 || m == 0 || self.exp >= 0 {
            return 0.0;
        }
        let shift = (-self.exp) as u32;
        let f = match (self.mantissa as u128).checked_mul(m) {
            Some(p) => frac_of_scaled_u128(p, shift),
            None => {
                let p = BigUint::from(self.mantissa) * BigUint::from(m);
                frac_of_scaled_big(&p, shift)
            }
        };
        if self.negative {
            negate_frac(f)
        } else {
            f
        }
    }

    /// Signed variant of [`Dyadic::frac_mul_u128`].
    pub fn frac_mul_i128(&self, m: i128) -> f64 {
        let f = self.frac_mul_u128(m.unsigned_abs());
        if m < 0 {
            negate_frac(f)
        } else {
            f
        }
    }

    /// Arbitrary-width variant.
    pub fn frac_mul_big(&self, m: &BigInt) -> f64 {
        if let Some(v) = m.to_i128() {
            return self.frac_mul_i128(v);
        }
        if self.mantissa == 0 || self.exp >= 0 {
            return 0.0;
        }
        let shift = (-self.exp) as u32;
        let p = BigUint::from(self.mantissa) * m.magnitude();
        let f = frac_of_scaled_big(&p, shift);
        if self.negative ^ (m.sign() == Sign::Minus) {
            negate_frac(f)
        } else {
            f
        }
    }
}

#[inline]
fn negate_frac(f: f64) -> f64 {
    if f == 0.0 {
        0.0
    } else {
        1.0 - f
    }
}

/// `(p mod 2^shift) / 2^shift`.
#[inline]
fn frac_of_scaled_u128(p: u128, shift: u32) -> f64 {
    if shift >= 128 {
        return ldexp(p as f64, -(shift as i32));
    }
    let r = p & ((1u128 << shift) - 1);
    ldexp(r as f64, -(shift as i32))
}

fn frac_of_scaled_big(p: &BigUint, shift: u32) -> f64 {
    let mask = (BigUint::one() << shift as usize) - BigUint::one();
    let r = p & mask;
    let bits = r.bits();
    if bits <= 128 {
        return ldexp(r.to_u128().unwrap_or(0) as f64, -(shift as i32));
    }
    // Keep the top 64 bits; the rest is far below double resolution.
    let drop = bits - 64;
    let top = (r >> drop as usize).to_u64().unwrap_or(0);
    ldexp(top as f64, drop as i32 - shift as i32)
}

/// `v · 2^e` without intermediate overflow or underflow for moderate `e`.
#[inline]
pub fn ldexp(v: f64, e: i32) -> f64 {
    if e > 1000 || e < -1000 {
        let half = e / 2;
        v * 2f64.powi(half) * 2f64.powi(e - half)
    } else {
        v * 2f64.powi(e)
    }
}

/// Pairwise (cascade) summation of `len` complex terms produced on demand.
pub fn pairwise_sum<T: Real, F: Fn(usize) -> Complex<T>>(len: usize, term: &F) -> Complex<T> {
    fn go<T: Real, F: Fn(usize) -> Complex<T>>(lo: usize, hi: usize, term: &F) -> Complex<T> {
        if hi - lo <= 256 {
            let mut acc = Complex::new(T::zero(), T::zero());
            for i in lo..hi {
                acc = acc + term(i);
            }
            acc
        } else {
            let mid = lo + (hi - lo) / 2;
            go(lo, mid, term) + go(mid, hi, term)
        }
    }
    go(0, len, term)
}

/// Sum of complex terms; pairwise above 2^16 terms, plain loop below.
pub fn sum_terms<T: Real, F: Fn(usize) -> Complex<T>>(len: usize, term: F) -> Complex<T> {
    if len > 1 << 16 {
        pairwise_sum(len, &term)
    } else {
        let mut acc = Complex::new(T::zero(), T::zero());
        for i in 0..len {
            acc = acc + term(i);
        }
        acc
    }
}

/// `b^e mod m` by binary exponentiation.
pub fn mod_pow(base: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let m128 = m as u128;
    let mut b = (base % m) as u128;
    let mut acc: u128 = 1;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m128;
        }
        b = b * b % m128;
        e >>= 1;
    }
    acc as u64
}

/// `m^n` if it fits in 128 bits.
pub fn pow_u128(m: u128, n: u32) -> Option<u128> {
    m.checked_pow(n)
}

/// `m^n` as an arbitrary-width integer.
pub fn pow_big(m: &BigInt, n: u32) -> BigInt {
    num_traits::pow(m.clone(), n as usize)
}

pub fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Euler's totient by trial division.
pub fn totient(mut q: u64) -> u64 {
    let mut result = q;
    let mut p = 2u64;
    while p * p <= q {
        if q % p == 0 {
            while q % p == 0 {
                q /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if q > 1 {
        result -= result / q;
    }
    result
}

/// Converts an exact big rational-ish quotient `num / 2^shift` to a float.
pub fn scaled_to_f64(num: &BigInt, shift: u32) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let bits = num.bits();
    let (top, extra) = if bits > 100 {
        let drop = bits - 64;
        let t: BigInt = num.abs() >> drop as usize;
        (t.to_f64().unwrap_or(0.0), drop as i32)
    } else {
        (num.abs().to_f64().unwrap_or(0.0), 0)
    };
    let v = ldexp(top, extra - shift as i32);
    if num.is_negative() {
        -v
    } else {
        v
    }
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_frac_matches_exact_cases() {
        let d = Dyadic::of(0.5f64);
        assert_eq!(d.frac_mul_u128(3), 0.5);
        assert_eq!(d.frac_mul_u128(4), 0.0);
        assert_eq!(Dyadic::of(-0.25f64).frac_mul_u128(1), 0.75);
        assert_eq!(Dyadic::of(0.25f64).frac_mul_i128(-1), 0.75);
        assert_eq!(Dyadic::of(3.0f64).frac_mul_u128(7), 0.0);
    }

    #[test]
    fn dyadic_frac_large_product() {
        // λ = 2^-80 · (2^52 + 1), m = 2^60: λ·m = 2^32 + 2^-20, frac = 2^-20.
        let lam = ldexp((1u64 << 52) as f64 + 1.0, -80);
        let f = Dyadic::of(lam).frac_mul_u128(1u128 << 60);
        assert_eq!(f, ldexp(1.0, -20));
        let big = BigInt::from(1u128 << 100) * BigInt::from(1u128 << 100);
        // λ·2^200 is an integer.
        assert_eq!(Dyadic::of(lam).frac_mul_big(&big), 0.0);
    }

    #[test]
    fn mod_pow_small() {
        assert_eq!(mod_pow(2, 10, 1000), 24);
        assert_eq!(mod_pow(7, 0, 5), 1);
        assert_eq!(mod_pow(7, 3, 1), 0);
    }

    #[test]
    fn totient_values() {
        let want = [1, 1, 2, 2, 4, 2, 6, 4, 6, 4];
        for (q, &w) in (1..=10).zip(want.iter()) {
            assert_eq!(totient(q), w);
        }
    }
}
