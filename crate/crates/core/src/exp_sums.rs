//! Complete rational exponential sums `S_b(a,q) = Σ_{k=1}^{q} e((a kⁿ + b k)/q)`.
//!
//! Phases are reduced as exact residues mod `q`; only the final `j/q` enters
//! floating point.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::scalar::{gcd_u64, mod_pow, sum_terms, unit_rational, Real};

/// Parameters of one complete sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompleteSumSpec {
    pub n: u32,
    pub a: i64,
    pub q: u64,
    pub b: i64,
}

impl CompleteSumSpec {
    pub fn new(n: u32, a: i64, q: u64, b: i64) -> Self {
        CompleteSumSpec { n, a, q, b }
    }

    /// Untwisted sum `S(a,q) = S_0(a,q)`.
    pub fn untwisted(n: u32, a: i64, q: u64) -> Self {
        Self::new(n, a, q, 0)
    }

    /// Reduces `a` and `b` into `[0, q)` and checks the invariants.
    pub fn normalized(&self) -> Result<(u64, u64)> {
        if self.q == 0 {
            return Err(Error::ZeroModulus);
        }
        if self.n < 2 {
            return invalid(format!("degree must be >= 2, got {}", self.n));
        }
        let a = self.a.rem_euclid(self.q as i64) as u64;
        let b = self.b.rem_euclid(self.q as i64) as u64;
        if gcd_u64(a, self.q) != 1 {
            return Err(Error::NotCoprime {
                a: self.a,
                q: self.q,
            });
        }
        Ok((a, b))
    }
}

/// `kⁿ mod q` for `k = 0..q`.
pub fn power_residues(n: u32, q: u64) -> Vec<u64> {
    (0..q).map(|k| mod_pow(k, n as u64, q)).collect()
}

/// Table of `e(j/q)` for `j = 0..q`.
pub fn unit_table<T: Real>(q: u64) -> Vec<Complex<T>> {
    (0..q)
        .map(|j| unit_rational(j as u128, q as u128))
        .collect()
}

/// Evaluates `S_b(a,q)`.
pub fn complete_sum<T: Real>(spec: CompleteSumSpec) -> Result<Complex<T>> {
    let (a, b) = spec.normalized()?;
    let q = spec.q;
    let (a128, b128, q128) = (a as u128, b as u128, q as u128);
    Ok(sum_terms(q as usize, |i| {
        let k = i as u64 + 1;
        let kn = mod_pow(k, spec.n as u64, q) as u128;
        let num = (a128 * kn + b128 * (k as u128 % q128)) % q128;
        unit_rational(num, q128)
    }))
}

/// Units mod `q` grouped into cosets of the subgroup of n-th powers of units.
///
/// `S_b(a c^n, q) = S_{b c^{-1}}(a, q)` for every unit `c`, so one
/// representative per coset determines every `|S_b(a,q)|` up to a
/// permutation of `b` that preserves `gcd(b, q)`.
#[derive(Debug, Clone)]
pub struct UnitCosets {
    pub q: u64,
    /// Coset representatives in increasing order.
    pub reps: Vec<u64>,
    /// `class[a]` is the index into `reps` for units `a`, `None` otherwise.
    pub class: Vec<Option<u32>>,
}

impl UnitCosets {
    pub fn new(n: u32, q: u64) -> Self {
        let units: Vec<u64> = (0..q).filter(|&a| gcd_u64(a, q) == 1).collect();
        let mut powers: Vec<u64> = units.iter().map(|&c| mod_pow(c, n as u64, q)).collect();
        powers.sort_unstable();
        powers.dedup();
        let mut class = vec![None; q as usize];
        let mut reps = Vec::new();
        for &a in &units {
            if class[a as usize].is_some() {
                continue;
            }
            let idx = reps.len() as u32;
            reps.push(a);
            for &p in &powers {
                let member = ((a as u128 * p as u128) % q as u128) as usize;
                class[member] = Some(idx);
            }
        }
        UnitCosets { q, reps, class }
    }
}

/// `max_{(a,q)=1, b} |S_b(a,q)| / (q^{1/2} · gcd(b,q))`, with `gcd(0,q) = q`.
pub fn hua_bound_ratio<T: Real>(n: u32, q: u64) -> Result<T> {
    if q == 0 {
        return Err(Error::ZeroModulus);
    }
    if n < 2 {
        return invalid("degree must be >= 2");
    }
    let table = unit_table::<T>(q);
    let residues = power_residues(n, q);
    let cosets = UnitCosets::new(n, q);
    let gcds: Vec<u64> = (0..q).map(|b| gcd_u64(b, q)).collect();
    let sqrt_q = T::from_u64(q).unwrap().sqrt();
    let mut best = T::zero();
    let qs = q as usize;
    let mut phase = vec![0usize; qs];
    for &a in &cosets.reps {
        // phase[k] tracks (a kⁿ + b k) mod q as b increases.
        for (k, p) in phase.iter_mut().enumerate() {
            *p = ((a as u128 * residues[k] as u128) % q as u128) as usize;
        }
        for b in 0..qs {
            let mut acc = Complex::new(T::zero(), T::zero());
            for &p in phase.iter() {
                acc = acc + table[p];
            }
            let ratio = acc.norm() / (sqrt_q * T::from_u64(gcds[b]).unwrap());
            if ratio > best {
                best = ratio;
            }
            for (k, p) in phase.iter_mut().enumerate() {
                *p += k;
                if *p >= qs {
                    *p -= qs;
                }
            }
        }
    }
    Ok(best)
}

/// `max_{(a,q)=1} |S(a,q)| / q^{1-1/n}`.
pub fn weyl_complete_ratio<T: Real>(n: u32, q: u64) -> Result<T> {
    if q == 0 {
        return Err(Error::ZeroModulus);
    }
    if n < 2 {
        return invalid("degree must be >= 2");
    }
    let table = unit_table::<T>(q);
    let residues = power_residues(n, q);
    let cosets = UnitCosets::new(n, q);
    let qf = T::from_u64(q).unwrap();
    let scale = qf.powf(T::one() - T::one() / T::from_u32(n).unwrap());
    let mut best = T::zero();
    for &a in &cosets.reps {
        let s = untwisted_from_tables(a, q, &residues, &table);
        best = best.max(s.norm() / scale);
    }
    Ok(best)
}

/// `S(a,q)` from precomputed residue and unit tables.
pub(crate) fn untwisted_from_tables<T: Real>(
    a: u64,
    q: u64,
    residues: &[u64],
    table: &[Complex<T>],
) -> Complex<T> {
    let mut acc = Complex::new(T::zero(), T::zero());
    for &r in residues {
        acc = acc + table[((a as u128 * r as u128) % q as u128) as usize];
    }
    acc
}

/// `S(a,q)` for every unit `a` mod `q`, indexed by `a` (zero for non-units).
pub fn untwisted_sums_all_units<T: Real>(n: u32, q: u64) -> Vec<Complex<T>> {
    let table = unit_table::<T>(q);
    let residues = power_residues(n, q);
    let cosets = UnitCosets::new(n, q);
    let per_rep: Vec<Complex<T>> = cosets
        .reps
        .iter()
        .map(|&a| untwisted_from_tables(a, q, &residues, &table))
        .collect();
    cosets
        .class
        .iter()
        .map(|c| match c {
            Some(i) => per_rep[*i as usize],
            None => Complex::new(T::zero(), T::zero()),
        })
        .collect()
}

/// Ratio scan over `1..=q_max`, parallel over `q`.
pub fn ratio_scan<T: Real>(n: u32, q_max: u64, hua: bool) -> Result<Vec<(u64, T)>> {
    (1..=q_max)
        .into_par_iter()
        .map(|q| {
            let r = if hua {
                hua_bound_ratio::<T>(n, q)?
            } else {
                weyl_complete_ratio::<T>(n, q)?
            };
            Ok((q, r))
        })
        .collect()
}
