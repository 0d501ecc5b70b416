//! The integral `γ(λ;x,y) = ∫_{-1/2}^{1/2} e(λ(x - y/2 + yt)ⁿ) dt` and the
//! constant `γ(n,r) = (1/π)∫₀^∞ (sin t/t)^r dt`.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::arcs::ratio_to_f64;
use crate::error::{invalid, Error, Result};
use crate::scalar::{unit, Dyadic, Real};
use crate::weyl_sums::WindowSpec;

const GL_ORDER: usize = 16;

/// Gauss–Legendre nodes and weights on [-1, 1].
fn gauss_legendre() -> &'static [(f64, f64); GL_ORDER] {
    static TABLE: OnceLock<[(f64, f64); GL_ORDER]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = GL_ORDER;
        let mut out = [(0.0, 0.0); GL_ORDER];
        for i in 0..n {
            // Newton iteration from the Chebyshev-like initial guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            out[i] = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        out
    })
}

/// Composite Gauss–Legendre over `[a, b]` split into `panels` equal pieces.
fn integrate_panels(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let gl = gauss_legendre();
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    let mut comp = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let s: f64 = gl
            .iter()
            .map(|&(x, w)| w * f(mid + 0.5 * h * x))
            .sum::<f64>()
            * 0.5
            * h;
        // Kahan compensation; panel sums are all of similar size.
        let y = s - comp;
        let t = total + y;
        comp = (t - total) - y;
        total = t;
    }
    total
}

/// Upper limit on quadrature panels for [`gamma_integral`].
pub const MAX_PANELS: u64 = 1 << 26;

/// `γ(λ;x,y)` for an integer window.
pub fn gamma_integral<T: Real>(w: &WindowSpec, lambda: T) -> Result<Complex<T>> {
    w.validate()?;
    gamma_integral_real(
        w.n,
        T::from_u64(w.x).unwrap(),
        T::from_u64(w.y).unwrap(),
        lambda,
    )
}

/// `γ(λ;x,y)` for real `x ≥ y > 0`.
///
/// Panels are sized so the phase moves by at most half a cycle. On each
/// panel the phase at the centre `u₀` is reduced modulo one exactly (`u₀`,
/// `x`, `y` and `λ` are all dyadic or rational with known denominators) and
/// only the increment `λ((u₀+d)ⁿ - u₀ⁿ)` is taken in floating point.
pub fn gamma_integral_real<T: Real>(n: u32, x: T, y: T, lambda: T) -> Result<Complex<T>> {
    if n == 0 {
        return invalid("degree must be positive");
    }
    if !(y > T::zero()) || !(x >= y) || !x.is_finite() || !lambda.is_finite() {
        return invalid("need finite x >= y > 0");
    }
    if lambda == T::zero() {
        return Ok(Complex::new(T::one(), T::zero()));
    }
    let (xf, yf, lf) = (
        x.to_f64().unwrap(),
        y.to_f64().unwrap(),
        lambda.to_f64().unwrap(),
    );
    let variation = n as f64 * lf.abs() * xf.powi(n as i32 - 1) * yf;
    let panels = (2.0 * variation).ceil() + 1.0;
    if panels > MAX_PANELS as f64 {
        return Err(Error::BudgetExceeded {
            what: "oscillatory quadrature panels",
            needed: panels as u128,
            cap: MAX_PANELS as u128,
        });
    }
    let panels = panels as u64;

    let (xn, xs) = Dyadic::of(xf).to_scaled();
    let (yn, ys) = Dyadic::of(yf).to_scaled();
    let s = xs.max(ys);
    let xn = xn << (s - xs) as usize;
    let yn = yn << (s - ys) as usize;
    let (ln, ls) = Dyadic::of(lf).to_scaled();
    // u₀ = (2P(X - Y) + Y(2j+1)) / (2P·2^s), λ = L / 2^ls.
    let two_p = BigInt::from(2 * panels);
    let den_u = &two_p << s as usize;
    let den = num_traits::pow(den_u.clone(), n as usize) << ls as usize;
    let base = &two_p * (&xn - &yn);

    let gl = gauss_legendre();
    let half_panel = 0.5 * yf / panels as f64;
    let binom: Vec<f64> = (0..=n as u64)
        .scan(1.0f64, |c, i| {
            let v = *c;
            *c = *c * (n as u64 - i) as f64 / (i + 1) as f64;
            Some(v)
        })
        .collect();

    let mut total = Complex::new(0.0f64, 0.0);
    for j in 0..panels {
        let un = &base + &yn * BigInt::from(2 * j + 1);
        let num = &ln * num_traits::pow(un.clone(), n as usize);
        let r = num.mod_floor(&den);
        let centre_phase = ratio_to_f64(&r, &den);
        let u0 = ratio_to_f64(&un, &den_u);
        let mut panel = Complex::new(0.0, 0.0);
        for &(t, wgt) in gl.iter() {
            let d = half_panel * t;
            // (u₀+d)ⁿ - u₀ⁿ = Σ_{i≥1} C(n,i) u₀^{n-i} dⁱ
            let mut inc = 0.0;
            let mut dp = 1.0;
            for i in 1..=n as usize {
                dp *= d;
                inc += binom[i] * u0.powi((n as usize - i) as i32) * dp;
            }
            panel += unit::<f64>(centre_phase + lf * inc) * wgt;
        }
        total += panel;
    }
    let scale = 0.5 / panels as f64;
    Ok(Complex::new(T::c(total.re * scale), T::c(total.im * scale)))
}

/// `γ(n,r)`, exact. The value depends on r only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaConstant {
    pub r: u32,
    #[serde(serialize_with = "crate::serialize_decimal")]
    pub numerator: BigInt,
    #[serde(serialize_with = "crate::serialize_decimal")]
    pub denominator: BigInt,
    pub real_value: f64,
}

impl GammaConstant {
    pub fn exact(&self) -> BigRational {
        BigRational::new(self.numerator.clone(), self.denominator.clone())
    }
}

fn binomial(n: u32, k: u32) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `Σ_{0≤j<r/2} (-1)^j C(r,j)(r-2j)^{r-1} / (2^r (r-1)!)`.
pub fn gamma_constant(r: u32) -> Result<GammaConstant> {
    if r < 2 {
        return invalid(format!("summand count must be >= 2, got {r}"));
    }
    let mut sum = BigInt::zero();
    for j in 0..r.div_ceil(2) {
        let term = binomial(r, j) * num_traits::pow(BigInt::from(r - 2 * j), (r - 1) as usize);
        if j % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    let fact: BigInt = (1..r).map(BigInt::from).product();
    let den = (BigInt::one() << r as usize) * fact;
    let q = BigRational::new(sum, den);
    let real_value = ratio_to_f64(q.numer(), q.denom());
    debug_assert!(q.numer().is_positive());
    Ok(GammaConstant {
        r,
        numerator: q.numer().clone(),
        denominator: q.denom().clone(),
        real_value,
    })
}

/// `(1/π)∫₀^∞ (sin t/t)^r dt` by composite Gauss–Legendre quadrature.
///
/// On `[T, ∞)` the mean of `sin^r` is `C(r, r/2)/2^r` for even r and 0 for
/// odd r; its contribution `c_r T^{1-r}/(r-1)` is added in closed form. The
/// oscillating remainder integrates by parts to at most `2/T^r`, and T is
/// chosen so that this is below `10^{-11}·π`.
pub fn gamma_oracle(r: u32) -> Result<f64> {
    if r < 2 {
        return invalid(format!("summand count must be >= 2, got {r}"));
    }
    let rf = r as f64;
    let cut = 1e3f64.max((2e11 / std::f64::consts::PI).powf(1.0 / rf));
    // Quarter-period panels of the fastest harmonic, at most width 1.
    let width = (std::f64::consts::FRAC_PI_2 / rf).min(1.0);
    let panels = (cut / width).ceil() as usize;
    let f = |t: f64| {
        if t == 0.0 {
            1.0
        } else {
            (t.sin() / t).powi(r as i32)
        }
    };
    let body = integrate_panels(f, 0.0, cut, panels);
    let mean = if r % 2 == 0 {
        binomial(r, r / 2).to_f64().unwrap() / 2f64.powi(r as i32)
    } else {
        0.0
    };
    let tail = mean * cut.powf(1.0 - rf) / (rf - 1.0);
    Ok((body + tail) / std::f64::consts::PI)
}

/// `(3/(2πr))^{1/2}`, the Gaussian approximation to `γ(n,r)`.
pub fn gamma_gaussian_approx(r: u32) -> f64 {
    (3.0 / (2.0 * std::f64::consts::PI * r as f64)).sqrt()
}
