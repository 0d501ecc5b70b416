//! Dirichlet approximation, derived circle-method parameters and the
//! major/minor arc dissection.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::counting::ProblemInstance;
use crate::error::{invalid, Error, Result};
use crate::scalar::{gcd_u64, Dyadic, Real};

/// `α ≡ a/q + λ (mod 1)` with `gcd(a,q) = 1`, `0 ≤ a < q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArcPoint<T> {
    pub a: u64,
    pub q: u64,
    pub lambda: T,
}

impl<T: Real> ArcPoint<T> {
    pub fn new(a: u64, q: u64, lambda: T) -> Result<Self> {
        if q == 0 {
            return Err(Error::ZeroModulus);
        }
        if a >= q {
            return invalid(format!("arc numerator {a} must be below q = {q}"));
        }
        if gcd_u64(a, q) != 1 {
            return Err(Error::NotCoprime { a: a as i64, q });
        }
        if !lambda.is_finite() {
            return invalid("arc offset must be finite");
        }
        Ok(ArcPoint { a, q, lambda })
    }

    /// The arc centre `0/1` with zero offset.
    pub fn origin() -> Self {
        ArcPoint {
            a: 0,
            q: 1,
            lambda: T::zero(),
        }
    }

    /// `a/q + λ` as a float (loses the exact split).
    pub fn alpha(&self) -> T {
        T::from_u64(self.a).unwrap() / T::from_u64(self.q).unwrap() + self.lambda
    }

    /// Negated point: `-α ≡ (q-a)/q - λ`.
    pub fn negated(&self) -> Self {
        let a = if self.a == 0 { 0 } else { self.q - self.a };
        ArcPoint {
            a,
            q: self.q,
            lambda: -self.lambda,
        }
    }
}

/// Exact rational approximation of `α` by continued fractions.
///
/// Returns the last convergent `p/q` of `α mod 1` with `q ≤ τ`; the
/// following denominator exceeds `τ`, hence `|λ| < 1/(qτ)`. The double `α`
/// is expanded through its exact dyadic value.
pub fn dirichlet_approx<T: Real>(alpha: T, tau: T) -> Result<ArcPoint<T>> {
    if !alpha.is_finite() {
        return invalid("alpha must be finite");
    }
    let (num, shift) = Dyadic::of(alpha).to_scaled();
    let den = BigInt::one() << shift as usize;
    dirichlet_approx_ratio(&num, &den, tau)
}

/// [`dirichlet_approx`] for `α = num/den` given exactly.
pub fn dirichlet_approx_ratio<T: Real>(num: &BigInt, den: &BigInt, tau: T) -> Result<ArcPoint<T>> {
    if !(tau >= T::one()) || !tau.is_finite() {
        return invalid("tau must be a finite number >= 1");
    }
    if !den.is_positive() {
        return invalid("denominator must be positive");
    }
    let frac_num = num.mod_floor(den);
    let tau_f = tau.to_f64().unwrap();

    let (mut h_prev2, mut h_prev) = (BigInt::zero(), BigInt::one());
    let (mut k_prev2, mut k_prev) = (BigInt::one(), BigInt::zero());
    let (mut x, mut y) = (frac_num.clone(), den.clone());
    let mut best = (BigInt::zero(), BigInt::one());
    loop {
        let (digit, rem) = x.div_mod_floor(&y);
        let h = &digit * &h_prev + &h_prev2;
        let k = &digit * &k_prev + &k_prev2;
        if k.to_f64().unwrap_or(f64::INFINITY) > tau_f {
            break;
        }
        best = (h.clone(), k.clone());
        if rem.is_zero() {
            break;
        }
        h_prev2 = std::mem::replace(&mut h_prev, h);
        k_prev2 = std::mem::replace(&mut k_prev, k);
        x = std::mem::replace(&mut y, rem);
    }

    let (p, q) = best;
    let q_u = q
        .to_u64()
        .ok_or(Error::Overflow("continued-fraction denominator"))?;
    let lam_num = &frac_num * &q - &p * den;
    let lam_den = den * &q;
    let lambda = T::from_f64(ratio_to_f64(&lam_num, &lam_den)).unwrap();
    let a = (&p % &q).to_u64().unwrap();
    debug_assert!(
        lambda.abs().to_f64().unwrap() * q_u as f64 * tau_f <= 1.0 + 1e-12,
        "Dirichlet bound violated"
    );
    ArcPoint::new(a, q_u, lambda)
}

/// Correctly scaled `num/den` as a double.
pub(crate) fn ratio_to_f64(num: &BigInt, den: &BigInt) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let shift = den.bits() as i64 - num.bits() as i64 + 64;
    let q = if shift >= 0 {
        (num << shift as usize) / den
    } else {
        (num >> (-shift) as usize) / den
    };
    crate::scalar::ldexp(q.to_f64().unwrap(), -(shift as i32))
}

/// Derived parameters of the arc dissection for one problem instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowParams<T> {
    pub n: u32,
    /// `N_k = (μ_k N + H)^{1/n}`.
    pub tops: Vec<T>,
    /// `H_k = (μ_k N + H)^{1/n} - (μ_k N - H)^{1/n}`.
    pub lengths: Vec<T>,
    pub tau: T,
    /// Global half-width `η = ℒ / (2n H_r N_r^{n-1})`.
    pub eta: T,
    /// `ℒ = ln N`.
    pub log_scale: T,
    /// Index of the smallest weight (the window that fixes `τ`).
    pub min_index: usize,
    /// Index of the largest weight (the `r`-th window after sorting).
    pub max_index: usize,
}

impl<T: Real> WindowParams<T> {
    /// Half-width of the arc-centre neighbourhood, `η_q = 1/(2n q N_r^{n-1})`.
    pub fn eta_q(&self, q: u64) -> T {
        let n = T::from_u32(self.n).unwrap();
        let top = self.tops[self.max_index];
        T::one() / (T::c(2.0) * n * T::from_u64(q).unwrap() * top.powi(self.n as i32 - 1))
    }

    /// `H_r / ℒ`, the largest major-arc denominator.
    pub fn major_q_limit(&self) -> T {
        self.lengths[self.max_index] / self.log_scale
    }

    /// Parameters for a single window `(x - y, x]`, treating `N = xⁿ`.
    pub fn single_window(n: u32, x: T, y: T) -> Result<Self> {
        if n < 2 || !(y > T::zero()) || !(x >= y) {
            return invalid("single window needs n >= 2 and 0 < y <= x");
        }
        let nn = T::from_u32(n).unwrap();
        let tau = T::c(2.0) * nn * (nn - T::one()) * x.powi(n as i32 - 2) * y;
        let log_scale = nn * x.ln();
        let eta = log_scale / (T::c(2.0) * nn * y * x.powi(n as i32 - 1));
        Ok(WindowParams {
            n,
            tops: vec![x],
            lengths: vec![y],
            tau: tau.max(T::one()),
            eta,
            log_scale,
            min_index: 0,
            max_index: 0,
        })
    }
}

/// Computes `N_k`, `H_k`, `τ`, `η` and `ℒ` from the defining radicals.
pub fn window_params<T: Real>(p: &ProblemInstance<T>) -> Result<WindowParams<T>> {
    let n = p.n;
    let nn = T::from_u32(n).unwrap();
    let big_n = T::from_u128(p.target).unwrap();
    let inv_n = T::one() / nn;
    let mut tops = Vec::with_capacity(p.r);
    let mut lengths = Vec::with_capacity(p.r);
    for (k, &mu) in p.mu.iter().enumerate() {
        let centre = mu * big_n;
        let upper = centre + p.h;
        let lower = centre - p.h;
        if !(lower > T::zero()) {
            return Err(Error::WindowReachesZero {
                index: k,
                lower: lower.to_f64().unwrap(),
            });
        }
        let a = upper.powf(inv_n);
        let b = lower.powf(inv_n);
        // a - b = (A - B) / Σ a^i b^{n-1-i}, free of cancellation.
        let mut denom = T::zero();
        for i in 0..n {
            denom = denom + a.powi(i as i32) * b.powi((n - 1 - i) as i32);
        }
        tops.push(a);
        lengths.push((T::c(2.0) * p.h) / denom);
    }
    let min_index = argmin(&p.mu);
    let max_index = argmax(&p.mu);
    let two = T::c(2.0);
    let tau = two * (nn - T::one()) * nn * tops[min_index].powi(n as i32 - 2) * lengths[min_index];
    let log_scale = big_n.ln();
    let eta = log_scale / (two * nn * lengths[max_index] * tops[max_index].powi(n as i32 - 1));
    Ok(WindowParams {
        n,
        tops,
        lengths,
        tau,
        eta,
        log_scale,
        min_index,
        max_index,
    })
}

fn argmin<T: Real>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x < v[best] {
            best = i;
        }
    }
    best
}

fn argmax<T: Real>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Arc label of a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ArcLabel {
    /// Neighbourhood `|λ| ≤ η_q` of a major-arc centre.
    M1,
    /// Rest of the major arcs.
    M2,
    Minor,
}

impl std::fmt::Display for ArcLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ArcLabel::M1 => "M1",
            ArcLabel::M2 => "M2",
            ArcLabel::Minor => "Minor",
        })
    }
}

/// Classifies an arc point; ties `|λ| = η_q` go to `M1`.
pub fn classify<T: Real>(arc: &ArcPoint<T>, wp: &WindowParams<T>) -> ArcLabel {
    let q = T::from_u64(arc.q).unwrap();
    if q > wp.major_q_limit() {
        return ArcLabel::Minor;
    }
    if arc.lambda.abs() <= wp.eta_q(arc.q) {
        ArcLabel::M1
    } else {
        ArcLabel::M2
    }
}
