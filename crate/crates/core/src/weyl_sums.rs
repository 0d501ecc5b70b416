//! Short Weyl sums `T(α;x,y) = Σ_{x-y<m≤x} e(α mⁿ)`, the difference operator
//! on monomials, the Weyl differencing inequality and the minor-arc bound.

use num_bigint::BigInt;
use num_complex::Complex;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::arcs::ArcPoint;
use crate::error::{invalid, Error, Result};
use crate::scalar::{mod_pow, unit, Dyadic, Real};

/// Summation window `(x - y, x]` of a degree-n Weyl sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WindowSpec {
    pub n: u32,
    pub x: u64,
    pub y: u64,
}

impl WindowSpec {
    pub fn new(n: u32, x: u64, y: u64) -> Result<Self> {
        let w = WindowSpec { n, x, y };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return invalid(format!("degree must be >= 2, got {}", self.n));
        }
        if self.y == 0 || self.y > self.x {
            return invalid(format!("need 1 <= y <= x, got x={}, y={}", self.x, self.y));
        }
        Ok(())
    }

    /// First summation point `x - y + 1`.
    pub fn start(&self) -> u64 {
        self.x - self.y + 1
    }

    /// `√x < y ≤ x/ln x`, the range of the mean-value estimate.
    pub fn in_moment_range(&self) -> bool {
        let x = self.x as f64;
        let y = self.y as f64;
        x.sqrt() < y && y <= x / x.ln()
    }

    /// `y ≤ x/100`, the range of the minor-arc lemma.
    pub fn in_minor_range(&self) -> bool {
        self.y.saturating_mul(100) <= self.x
    }
}

/// Fractional phase of `(a/q + λ)·mⁿ`, reduced exactly.
#[inline]
fn arc_phase(n: u32, m: u64, a: u64, q: u64, lambda: &Dyadic) -> f64 {
    let rational = if q == 1 {
        0.0
    } else {
        let res = (a as u128 * mod_pow(m, n as u64, q) as u128) % q as u128;
        res as f64 / q as f64
    };
    let irrational = if lambda.is_zero() {
        0.0
    } else {
        match (m as u128).checked_pow(n) {
            Some(p) => lambda.frac_mul_u128(p),
            None => lambda.frac_mul_big(&num_traits::pow(BigInt::from(m), n as usize)),
        }
    };
    rational + irrational
}

/// `T(a/q + λ; x, y)`.
///
/// The rational part uses `mⁿ mod q`; the λ part reduces `λ·mⁿ` modulo one
/// against the exact dyadic value of λ, so no phase error accumulates with m.
pub fn short_weyl_sum<T: Real>(w: &WindowSpec, arc: &ArcPoint<T>) -> Result<Complex<T>> {
    w.validate()?;
    let lambda = Dyadic::of(arc.lambda);
    let start = w.start();
    let (n, a, q) = (w.n, arc.a, arc.q);
    let s = crate::scalar::sum_terms(w.y as usize, |i| {
        let ph = arc_phase(n, start + i as u64, a, q, &lambda);
        let z = unit::<f64>(ph);
        Complex::new(T::c(z.re), T::c(z.im))
    });
    Ok(s)
}

/// `T(α; x, y)` for a raw real α.
pub fn short_weyl_sum_at<T: Real>(w: &WindowSpec, alpha: T) -> Result<Complex<T>> {
    let arc = ArcPoint {
        a: 0,
        q: 1,
        lambda: alpha,
    };
    short_weyl_sum(w, &arc)
}

/// Fractional phases `{α mⁿ}` for `m` in the window, indexed from `x - y + 1`.
fn phase_table<T: Real>(w: &WindowSpec, alpha: T) -> Vec<f64> {
    let d = Dyadic::of(alpha);
    (0..w.y)
        .map(|i| arc_phase(w.n, w.start() + i, 0, 1, &d))
        .collect()
}

/// `g_k(u; h_1,…,h_k)` with `Δ_k(uⁿ; h) = h_1⋯h_k · g_k(u)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DifferencePoly {
    pub n: u32,
    pub k: u32,
    pub shifts: Vec<i64>,
    /// Coefficients in ascending powers of u; degree `n - k`.
    #[serde(serialize_with = "crate::serialize_decimal_vec")]
    pub coeffs: Vec<BigInt>,
}

impl DifferencePoly {
    pub fn eval(&self, u: &BigInt) -> BigInt {
        self.coeffs
            .iter()
            .rev()
            .fold(BigInt::zero(), |acc, c| acc * u + c)
    }

    pub fn leading(&self) -> &BigInt {
        self.coeffs.last().expect("nonempty")
    }
}

/// `p(u + h) - p(u)` for ascending coefficients.
fn forward_shift(p: &[BigInt], h: i64) -> Vec<BigInt> {
    let h = BigInt::from(h);
    let deg = p.len() - 1;
    let mut out = vec![BigInt::zero(); p.len()];
    // (u+h)^j = Σ_i C(j,i) u^i h^{j-i}
    for (j, c) in p.iter().enumerate() {
        let mut binom = BigInt::one();
        let mut hp = BigInt::one();
        for i in (0..=j).rev() {
            if i < j {
                out[i] += c * &binom * &hp;
            }
            binom = binom * BigInt::from(i) / BigInt::from(j - i + 1);
            hp *= &h;
        }
    }
    out.truncate(deg.max(1));
    out
}

pub fn difference_poly(n: u32, shifts: &[i64]) -> Result<DifferencePoly> {
    let k = shifts.len() as u32;
    if k == 0 || k >= n {
        return invalid(format!(
            "depth must satisfy 1 <= k <= n-1, got k={k}, n={n}"
        ));
    }
    if shifts.iter().any(|&h| h == 0) {
        return invalid("shifts must be nonzero");
    }
    let mut p = vec![BigInt::zero(); n as usize + 1];
    p[n as usize] = BigInt::one();
    for &h in shifts {
        p = forward_shift(&p, h);
        let hb = BigInt::from(h);
        for c in p.iter_mut() {
            debug_assert!((&*c % &hb).is_zero());
            *c = &*c / &hb;
        }
    }
    Ok(DifferencePoly {
        n,
        k,
        shifts: shifts.to_vec(),
        coeffs: p,
    })
}

/// `Δ_k(uⁿ; h)` by inclusion–exclusion over the `2^k` shifted points.
pub fn iterated_difference(n: u32, u: &BigInt, shifts: &[i64]) -> BigInt {
    let k = shifts.len();
    let mut acc = BigInt::zero();
    for mask in 0u32..(1 << k) {
        let mut v = u.clone();
        for (i, &h) in shifts.iter().enumerate() {
            if mask >> i & 1 == 1 {
                v += h;
            }
        }
        let term = num_traits::pow(v, n as usize);
        if (k as u32 - mask.count_ones()) % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

/// Both sides of the Weyl differencing inequality
/// `|T|^{2^k} ≤ (2y)^{2^k-k-1} Σ_{|h_i|<y} |Σ_{m∈I_k} e(αΔ_k(mⁿ;h))|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DifferencingCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl DifferencingCheck {
    pub fn holds(&self, rel_tol: f64) -> bool {
        self.lhs <= self.rhs * (1.0 + rel_tol)
    }
}

/// Default cap on `(2y-1)^k · y` inner terms.
pub const DIFFERENCING_CAP: u128 = 2_000_000_000;

/// Evaluates both sides of the inequality directly.
///
/// `I_j = I_{j-1} ∩ (I_{j-1} - h_j)` keeps every shifted point inside the
/// window, so the differenced phase is assembled from the phase table
/// `{α mⁿ}` by the recursion `g_j(m) = g_{j-1}(m + h_j) - g_{j-1}(m)`.
pub fn weyl_differencing_check<T: Real>(
    w: &WindowSpec,
    alpha: T,
    k: u32,
) -> Result<DifferencingCheck> {
    weyl_differencing_check_capped(w, alpha, k, DIFFERENCING_CAP)
}

pub fn weyl_differencing_check_capped<T: Real>(
    w: &WindowSpec,
    alpha: T,
    k: u32,
    cap: u128,
) -> Result<DifferencingCheck> {
    w.validate()?;
    if k == 0 || k >= w.n {
        return invalid(format!("depth must satisfy 1 <= k <= n-1, got {k}"));
    }
    let y = w.y as i64;
    let work = (2 * w.y as u128 - 1).pow(k) * w.y as u128;
    if work > cap {
        return Err(Error::BudgetExceeded {
            what: "differencing enumeration",
            needed: work,
            cap,
        });
    }
    let table = phase_table(w, alpha);
    let t: Complex<f64> = table.iter().map(|&p| unit::<f64>(p)).sum();
    let lhs = t.norm().powi(1 << k);

    // Level j holds the differenced phases on I_j as (offset of I_j, values).
    fn descend(levels: &mut Vec<(i64, Vec<f64>)>, depth: usize, k: usize, y: i64, acc: &mut f64) {
        if depth == k {
            let vals = &levels[depth].1;
            let s: Complex<f64> = vals.iter().map(|&p| unit::<f64>(p)).sum();
            *acc += s.norm();
            return;
        }
        for h in -(y - 1)..y {
            let (off, prev) = &levels[depth];
            let (off, len) = (*off, prev.len() as i64);
            // m and m + h both in [off, off + len).
            let lo = off.max(off - h);
            let hi = (off + len).min(off + len - h);
            let next: Vec<f64> = if lo < hi {
                (lo..hi)
                    .map(|m| {
                        let d = prev[(m + h - off) as usize] - prev[(m - off) as usize];
                        d - d.round()
                    })
                    .collect()
            } else {
                Vec::new()
            };
            if levels.len() > depth + 1 {
                levels[depth + 1] = (lo, next);
            } else {
                levels.push((lo, next));
            }
            descend(levels, depth + 1, k, y, acc);
        }
    }

    let mut levels = vec![(0i64, table)];
    let mut inner = 0.0;
    descend(&mut levels, 0, k as usize, y, &mut inner);
    let expo = (1i32 << k) - k as i32 - 1;
    let rhs = (2.0 * w.y as f64).powi(expo) * inner;
    Ok(DifferencingCheck { lhs, rhs })
}

/// Explicit constant with `τ(h) ≤ 3.53·h^{1/3}` for all `h ≥ 1`
/// (product over p < 8 of `max_e (e+1)/p^{e/3}`).
pub const DIVISOR_CUBE_ROOT_CONST: f64 = 3.53;

const PRIMES: [u128; 40] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173,
];

/// `max_{1 ≤ h ≤ limit} τ(h)`, exact.
///
/// The maximum is attained at a product of consecutive primes with
/// nonincreasing exponents, so a depth-first search over those shapes is
/// exhaustive. The first 40 primes cover every `limit < 2^128`.
pub fn max_divisor_count(limit: u128) -> u64 {
    fn go(idx: usize, prod: u128, max_e: u32, tau: u64, limit: u128, best: &mut u64) {
        *best = (*best).max(tau);
        if idx == PRIMES.len() {
            return;
        }
        let p = PRIMES[idx];
        let mut v = prod;
        for e in 1..=max_e {
            v = match v.checked_mul(p) {
                Some(v) if v <= limit => v,
                _ => break,
            };
            go(idx + 1, v, e, tau * (e as u64 + 1), limit, best);
        }
    }
    if limit == 0 {
        return 0;
    }
    let mut best = 1;
    go(0, 1, 127, 1, limit, &mut best);
    best
}

/// `max_{h ≤ limit} τ(h)` by a divisor sieve; test oracle.
pub fn max_divisor_count_sieve(limit: usize) -> u64 {
    let mut tau = vec![0u32; limit + 1];
    for d in 1..=limit {
        let mut m = d;
        while m <= limit {
            tau[m] += 1;
            m += d;
        }
    }
    tau.iter().skip(1).copied().max().unwrap_or(0) as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinorArcBound {
    pub value: f64,
    /// `max_{h<y^{n-1}} τ(h)`, or its explicit upper bound.
    pub divisor_max: f64,
    /// False when the divisor maximum is the cube-root bound.
    pub divisor_exact: bool,
    /// `y ≤ x/100` as the lemma assumes.
    pub in_range: bool,
}

/// `2y·(4·n!·(1/q + 1/y + q ln q / yⁿ)·max_{h<y^{n-1}} τ(h))^{1/2^{n-1}}`.
pub fn minor_arc_bound<T: Real>(w: &WindowSpec, arc: &ArcPoint<T>) -> Result<MinorArcBound> {
    w.validate()?;
    let q = arc.q as f64;
    let lam = arc.lambda.to_f64().unwrap().abs();
    if lam > 1.0 / (q * q) {
        return invalid(format!("|alpha - a/q| = {lam} exceeds 1/q^2"));
    }
    let n = w.n;
    let y = w.y as f64;
    let limit = (w.y as u128).checked_pow(n - 1).map(|v| v - 1);
    let (divisor_max, divisor_exact) = match limit {
        Some(l) if l < u128::MAX / 2 => (max_divisor_count(l) as f64, true),
        _ => (
            DIVISOR_CUBE_ROOT_CONST * y.powf((n - 1) as f64 / 3.0),
            false,
        ),
    };
    let fact: f64 = (1..=n).map(|i| i as f64).product();
    let paren = 1.0 / q + 1.0 / y + q * q.ln() / y.powi(n as i32);
    let inner = 4.0 * fact * paren * divisor_max;
    let value = 2.0 * y * inner.powf(1.0 / (1u64 << (n - 1)) as f64);
    Ok(MinorArcBound {
        value,
        divisor_max,
        divisor_exact,
        in_range: w.in_minor_range(),
    })
}

/// Checks `Δ_k(uⁿ; h) = Π h_i · g_k(u)` at one point.
pub fn factorization_holds(p: &DifferencePoly, u: &BigInt) -> bool {
    let prod: BigInt = p.shifts.iter().map(|&h| BigInt::from(h)).product();
    iterated_difference(p.n, u, &p.shifts) == prod * p.eval(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;
    use proptest::prelude::*;

    fn poly(coeffs: &[i64]) -> Vec<BigInt> {
        coeffs.iter().map(|&c| BigInt::from(c)).collect()
    }

    #[test]
    fn trivial_sums() {
        let w = WindowSpec::new(3, 100, 37).unwrap();
        let s = short_weyl_sum(&w, &ArcPoint::<f64>::origin()).unwrap();
        assert_eq!(s, Complex::new(37.0, 0.0));
        let w = WindowSpec::new(3, 10, 10).unwrap();
        let s = short_weyl_sum(&w, &ArcPoint::new(1, 2, 0.0f64).unwrap()).unwrap();
        assert!(s.norm() < 1e-12);
    }

    #[test]
    fn arc_sum_matches_high_precision_reference() {
        // Reference with phases reduced in exact rationals: λ = 10⁻⁹ is first
        // converted to its dyadic value, then a/q + λ·m³ is reduced by BigInt.
        let w = WindowSpec::new(3, 100, 50).unwrap();
        let lam = 1e-9f64;
        let got = short_weyl_sum(&w, &ArcPoint::new(1, 3, lam).unwrap()).unwrap();
        let (num, shift) = Dyadic::of(lam).to_scaled();
        let den = BigInt::one() << shift as usize;
        let mut want = Complex::new(0.0, 0.0);
        for m in 51u64..=100 {
            let m3 = BigInt::from(m).pow(3);
            // 1/3·m³ + num·m³/2^shift over the common denominator 3·2^shift.
            let top = &m3 * &den + BigInt::from(3) * &num * &m3;
            let d = BigInt::from(3) * &den;
            let r = ((top % &d) + &d) % &d;
            let frac = r.to_f64().unwrap() / d.to_f64().unwrap();
            want += unit::<f64>(frac);
        }
        assert!((got - want).norm() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn difference_poly_examples() {
        assert_eq!(difference_poly(3, &[1]).unwrap().coeffs, poly(&[1, 3, 3]));
        assert_eq!(difference_poly(3, &[1, 1]).unwrap().coeffs, poly(&[6, 6]));
        assert_eq!(
            difference_poly(4, &[1, 2]).unwrap().coeffs,
            poly(&[32, 36, 12])
        );
        assert!(difference_poly(3, &[1, 1, 1]).is_err());
        assert!(difference_poly(3, &[0]).is_err());
    }

    #[test]
    fn leading_coefficients() {
        for n in 3..=10u32 {
            for k in 1..n {
                let shifts: Vec<i64> = (1..=k as i64)
                    .map(|i| if i % 2 == 0 { -i } else { i })
                    .collect();
                let p = difference_poly(n, &shifts).unwrap();
                let want: u64 = ((n - k + 1)..=n).map(|v| v as u64).product();
                assert_eq!(p.leading(), &BigInt::from(want));
                assert_eq!(p.coeffs.len(), (n - k + 1) as usize);
            }
        }
    }

    #[test]
    fn differencing_trivial_alpha() {
        let w = WindowSpec::new(3, 16, 8).unwrap();
        let c = weyl_differencing_check(&w, 0.0f64, 1).unwrap();
        assert_eq!(c.lhs, 64.0);
        assert!(c.rhs >= 64.0);
    }

    #[test]
    fn differencing_examples() {
        let w = WindowSpec::new(3, 50, 16).unwrap();
        let c = weyl_differencing_check(&w, 2f64.sqrt().fract(), 2).unwrap();
        assert!(c.holds(1e-9), "{c:?}");
        let w = WindowSpec::new(4, 64, 16).unwrap();
        let c = weyl_differencing_check(&w, 0.3f64, 3).unwrap();
        assert!(c.holds(1e-9), "{c:?}");
    }

    #[test]
    fn divisor_max_matches_sieve() {
        for limit in [1usize, 2, 11, 12, 100, 359, 360, 1000, 5039, 5040, 100_000] {
            assert_eq!(
                max_divisor_count(limit as u128),
                max_divisor_count_sieve(limit),
                "{limit}"
            );
        }
    }

    #[test]
    fn minor_bound_examples() {
        let w = WindowSpec::new(3, 10_000, 100).unwrap();
        let b = minor_arc_bound(&w, &ArcPoint::new(1, 97, 0.0f64).unwrap()).unwrap();
        // max τ(h) for h < 10⁴ is 64 (at 7560 and 9240).
        assert_eq!(b.divisor_max, 64.0);
        let paren = 1.0 / 97.0 + 0.01 + 97.0 * 97f64.ln() / 1e6;
        let want = 200.0 * (4.0 * 6.0 * paren * 64.0).powf(0.25);
        assert!((b.value - want).abs() < 1e-9 * want);
        let w = WindowSpec::new(3, 1 << 40, 1 << 20).unwrap();
        let b = minor_arc_bound(&w, &ArcPoint::<f64>::origin()).unwrap();
        assert!(b.value > 2.0 * w.y as f64);
    }

    proptest! {
        #[test]
        fn factorization_identity(n in 3u32..8, k in 1u32..3, u in -1000i64..1000, seed in any::<u64>()) {
            prop_assume!(k < n);
            let shifts: Vec<i64> = (0..k).map(|i| ((seed >> (8 * i)) % 41) as i64 - 20).map(|h| if h == 0 { 7 } else { h }).collect();
            let p = difference_poly(n, &shifts).unwrap();
            prop_assert!(factorization_holds(&p, &BigInt::from(u)));
        }

        #[test]
        fn weyl_sum_symmetries(x in 10u64..500, frac in 0.0f64..1.0, alpha in -0.5f64..0.5) {
            let y = ((x as f64 * frac) as u64).max(1);
            let w = WindowSpec::new(3, x, y).unwrap();
            let s = short_weyl_sum_at(&w, alpha).unwrap();
            prop_assert!(s.norm() <= y as f64 * (1.0 + 1e-12));
            let shifted = short_weyl_sum_at(&w, alpha + 1.0).unwrap();
            // α + 1 may round; compare against the rounded value's own sum.
            let back = short_weyl_sum_at(&w, (alpha + 1.0) - 1.0).unwrap();
            prop_assert!((shifted - back).norm() < 1e-9 * y as f64);
            let neg = short_weyl_sum_at(&w, -alpha).unwrap();
            prop_assert!((neg - s.conj()).norm() < 1e-9 * y as f64);
        }
    }
}
