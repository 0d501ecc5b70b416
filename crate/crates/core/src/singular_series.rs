//! Local factors `A(q,N) = Σ_{(a,q)=1} (S(a,q)/q)^r e(-aN/q)` and the
//! truncated singular series `𝔖(N,Q) = Σ_{q≤Q} A(q,N)`.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::exp_sums::untwisted_sums_all_units;
use crate::scalar::{gcd_u64, unit_rational};

/// `A(q,N)`; the imaginary part is a rounding diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalFactor {
    pub q: u64,
    pub re: f64,
    pub im: f64,
}

impl LocalFactor {
    pub fn value(&self) -> Complex<f64> {
        Complex::new(self.re, self.im)
    }
}

/// Normalised sums `S(a,q)/q` for all `q ≤ q_max`, shared across targets N.
#[derive(Debug, Clone)]
pub struct SumTables {
    pub n: u32,
    /// `normalized[q][a] = S(a,q)/q`, zero for non-units; index 0 unused.
    normalized: Vec<Vec<Complex<f64>>>,
}

impl SumTables {
    pub fn new(n: u32, q_max: u64) -> Result<Self> {
        if n < 2 {
            return invalid("degree must be >= 2");
        }
        let mut normalized: Vec<Vec<Complex<f64>>> = (0..=q_max)
            .into_par_iter()
            .map(|q| {
                if q == 0 {
                    return Vec::new();
                }
                let qf = q as f64;
                untwisted_sums_all_units::<f64>(n, q)
                    .into_iter()
                    .map(|s| s / qf)
                    .collect()
            })
            .collect();
        // a = 0 is the only unit residue modulo 1.
        normalized[1] = vec![Complex::new(1.0, 0.0)];
        Ok(SumTables { n, normalized })
    }

    pub fn q_max(&self) -> u64 {
        self.normalized.len() as u64 - 1
    }

    pub fn local(&self, r: u32, q: u64, target: u128) -> Result<LocalFactor> {
        if q == 0 || q > self.q_max() {
            return invalid(format!("modulus {q} outside 1..={}", self.q_max()));
        }
        let row = &self.normalized[q as usize];
        let nq = (target % q as u128) as u64;
        let mut acc = Complex::new(0.0, 0.0);
        for a in 0..q {
            if gcd_u64(a, q) != 1 {
                continue;
            }
            let s = row[a as usize];
            // e(-aN/q)
            let k = (a as u128 * nq as u128) % q as u128;
            let twist: Complex<f64> = unit_rational(q as u128 - k, q as u128);
            acc += s.powu(r) * twist;
        }
        Ok(LocalFactor {
            q,
            re: acc.re,
            im: acc.im,
        })
    }

    /// `𝔖(N,Q)` with its tail estimate.
    pub fn series(&self, r: u32, target: u128, q_trunc: u64) -> Result<SeriesValue> {
        if q_trunc == 0 {
            return invalid("truncation must be >= 1");
        }
        let factors: Vec<LocalFactor> = (1..=q_trunc)
            .into_par_iter()
            .map(|q| self.local(r, q, target))
            .collect::<Result<_>>()?;
        let mut partial = 0.0;
        for f in &factors {
            partial += f.re;
        }
        let tail = tail_estimate(self.n, r, &factors);
        Ok(SeriesValue {
            value: partial,
            tail_estimate: tail,
            q_trunc,
            tail_converges: 2 * self.n < r,
            factors,
        })
    }
}

/// `𝔖(N,Q)` and the local factors it was summed from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    pub tail_estimate: f64,
    pub q_trunc: u64,
    /// `r/n > 2`; otherwise the tail sum diverges and the estimate is infinite.
    pub tail_converges: bool,
    #[serde(skip)]
    pub factors: Vec<LocalFactor>,
}

impl SeriesValue {
    /// Running partial sums `𝔖(N,q)` for `q = 1..=Q`.
    pub fn running(&self) -> Vec<f64> {
        self.factors
            .iter()
            .scan(0.0, |acc, f| {
                *acc += f.re;
                Some(*acc)
            })
            .collect()
    }
}

/// `c·Σ_{q>Q} q^{1-r/n} ≈ c·Q^{2-r/n}/(r/n-2)`, with
/// `c = max_{Q/2<q≤Q} |A(q)|·q^{r/n-1}` read off the last octave.
fn tail_estimate(n: u32, r: u32, factors: &[LocalFactor]) -> f64 {
    let q_trunc = factors.len() as u64;
    let e = r as f64 / n as f64;
    if e <= 2.0 {
        return f64::INFINITY;
    }
    let lo = q_trunc / 2;
    let c = factors
        .iter()
        .filter(|f| f.q > lo)
        .map(|f| f.value().norm() * (f.q as f64).powf(e - 1.0))
        .fold(0.0, f64::max);
    c * (q_trunc as f64).powf(2.0 - e) / (e - 2.0)
}

pub fn local_sum(n: u32, r: u32, q: u64, target: u128) -> Result<LocalFactor> {
    if q == 0 {
        return invalid("modulus must be >= 1");
    }
    let tables = SumTables {
        n,
        normalized: {
            let mut v = vec![Vec::new(); q as usize + 1];
            v[q as usize] = if q == 1 {
                vec![Complex::new(1.0, 0.0)]
            } else {
                untwisted_sums_all_units::<f64>(n, q)
                    .into_iter()
                    .map(|s| s / q as f64)
                    .collect()
            };
            v
        },
    };
    tables.local(r, q, target)
}

pub fn singular_series(n: u32, r: u32, target: u128, q_trunc: u64) -> Result<SeriesValue> {
    SumTables::new(n, q_trunc)?.series(r, target, q_trunc)
}

/// `|A(q₁q₂) - A(q₁)A(q₂)| / max(|A(q₁)A(q₂)|, |A(q₁q₂)|, 10⁻¹²)`.
pub fn multiplicativity_check(n: u32, r: u32, target: u128, q1: u64, q2: u64) -> Result<f64> {
    if q1 == 0 || q2 == 0 {
        return invalid("moduli must be >= 1");
    }
    if gcd_u64(q1, q2) != 1 {
        return invalid(format!("moduli {q1} and {q2} are not coprime"));
    }
    let a1 = local_sum(n, r, q1, target)?.value();
    let a2 = local_sum(n, r, q2, target)?.value();
    let a12 = local_sum(n, r, q1 * q2, target)?.value();
    let prod = a1 * a2;
    let scale = prod.norm().max(a12.norm()).max(1e-12);
    Ok((a12 - prod).norm() / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exp_sums::weyl_complete_ratio;
    use crate::scalar::totient;

    #[test]
    fn trivial_factors() {
        assert_eq!(
            local_sum(3, 9, 1, 12345).unwrap().value(),
            Complex::new(1.0, 0.0)
        );
        for target in [1u128, 2, 7, 100] {
            assert!(local_sum(3, 9, 2, target).unwrap().value().norm() < 1e-14);
        }
    }

    #[test]
    fn q9_against_double_sum() {
        // Independent double summation with i128 phases.
        let (n, r, q, target) = (3u32, 9u32, 9u64, 9u128);
        let mut want = Complex::new(0.0, 0.0);
        for a in 1..q as i128 {
            if gcd_u64(a as u64, q) != 1 {
                continue;
            }
            let mut s = Complex::new(0.0, 0.0);
            for k in 1..=q as i128 {
                let t = (a * k.pow(n)).rem_euclid(q as i128) as f64 / q as f64;
                s += Complex::from_polar(1.0, std::f64::consts::TAU * t);
            }
            let t = (-(a * target as i128)).rem_euclid(q as i128) as f64 / q as f64;
            want += (s / q as f64).powu(r) * Complex::from_polar(1.0, std::f64::consts::TAU * t);
        }
        let got = local_sum(n, r, q, target).unwrap();
        assert!((got.value() - want).norm() < 1e-12);
        assert!(got.im.abs() < 1e-9 * (1.0 + got.re.abs()));
    }

    #[test]
    fn multiplicativity_examples() {
        assert!(multiplicativity_check(3, 9, 100, 1, 7).unwrap() < 1e-12);
        assert!(multiplicativity_check(3, 9, 100, 2, 3).unwrap() < 1e-12);
        assert!(multiplicativity_check(3, 9, 100, 9, 5).unwrap() < 1e-8);
        assert!(multiplicativity_check(3, 9, 100, 6, 4).is_err());
    }

    #[test]
    fn truncation_at_one() {
        let s = singular_series(3, 9, 1000, 1).unwrap();
        assert_eq!(s.value, 1.0);
        assert!(s.tail_estimate.is_finite());
    }

    #[test]
    fn local_factor_bound() {
        let tables = SumTables::new(3, 200).unwrap();
        let c = (1..=200)
            .map(|q| weyl_complete_ratio::<f64>(3, q).unwrap())
            .fold(0.0, f64::max);
        for q in 1..=200u64 {
            let a = tables.local(9, q, 777).unwrap();
            let bound = totient(q) as f64 * (c * (q as f64).powf(-1.0 / 3.0)).powi(9);
            assert!(a.value().norm() <= bound * (1.0 + 1e-9), "q={q}");
            assert!(a.im.abs() < 1e-9 * (1.0 + a.re.abs()));
        }
    }
}
