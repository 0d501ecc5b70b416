//! Exponent tables, the main-term prediction, residual scans on the arcs, and
//! the comparison of exact counts against the prediction.

use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arcs::{classify, dirichlet_approx, ArcLabel, ArcPoint, WindowParams};
use crate::counting::{count_representations, count_to_f64, CountConfig, ProblemInstance};
use crate::error::{invalid, Result};
use crate::exp_sums::{complete_sum, CompleteSumSpec};
use crate::oscillatory::{gamma_constant, gamma_integral};
use crate::scalar::{gcd_u64, Real};
use crate::singular_series::{SeriesValue, SumTables};
use crate::weyl_sums::{minor_arc_bound, short_weyl_sum, WindowSpec};

/// Default seed for sampled scans.
pub const DEFAULT_SEED: u64 = 20240901;

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// `θ(n,r) = 2/((r+1)(n²-n))`.
pub fn theta(n: u32, r: u32) -> Result<BigRational> {
    if n < 3 {
        return invalid(format!("degree must be >= 3, got {n}"));
    }
    let (n, r) = (n as i64, r as i64);
    Ok(ratio(2, (r + 1) * (n * n - n)))
}

/// The least summand count admitted by Wright's exponent, `(n-2)2^{n-1} + 5`.
pub fn wright_min_r(n: u32) -> u64 {
    (n as u64 - 2) * (1u64 << (n - 1)) + 5
}

/// Wright's exponent: `1/n` times the least of his three branch values.
pub fn wright_theta(n: u32, r: u32) -> Result<BigRational> {
    if n < 3 || n > 40 {
        return invalid(format!("degree must be in 3..=40, got {n}"));
    }
    if (r as u64) < wright_min_r(n) {
        return invalid(format!("Wright's exponent needs r >= {}", wright_min_r(n)));
    }
    let (n, r) = (n as i64, r as i64);
    let p = 1i64 << n;
    let h = p / 2;
    let branches = [
        ratio((r - p) * (h + 1), (n * r + n - p - 3) * h + r),
        ratio(r - (n - 2) * h - 4, r + h - 4),
        ratio(r - h, n * r - h + n - 1),
    ];
    let least = branches.into_iter().min().unwrap();
    Ok(least / BigInt::from(n))
}

/// Formats a rational as `p/q`, or `p` when integral.
pub fn format_rational(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaRow {
    pub n: u32,
    pub r: u32,
    pub theta: String,
}

/// Wright's exponent at `r = (n-2)2^{n-1} + 5`, `n = 3..=10`.
pub fn wright_table() -> Vec<ThetaRow> {
    (3..=10)
        .map(|n| {
            let r = wright_min_r(n) as u32;
            ThetaRow {
                n,
                r,
                theta: format_rational(&wright_theta(n, r).unwrap()),
            }
        })
        .collect()
}

/// `θ(n, 2ⁿ+1)`, `n = 3..=10`.
pub fn theta_table() -> Vec<ThetaRow> {
    (3..=10)
        .map(|n| {
            let r = (1u32 << n) + 1;
            ThetaRow {
                n,
                r,
                theta: format_rational(&theta(n, r).unwrap()),
            }
        })
        .collect()
}

/// Both tables as aligned text.
pub fn render_tables() -> String {
    let mut out = String::new();
    for (title, rows) in [
        ("Wright exponent, r = (n-2)2^(n-1) + 5", wright_table()),
        ("theta(n, r), r = 2^n + 1", theta_table()),
    ] {
        out.push_str(title);
        out.push('\n');
        out.push_str(&format!("{:>4} {:>6} {:>10}\n", "n", "r", "theta"));
        for row in rows {
            out.push_str(&format!("{:>4} {:>6} {:>10}\n", row.n, row.r, row.theta));
        }
        out.push('\n');
    }
    out
}

/// Main term `(2^r γ/nʳ)·Πμ_i^{-1+1/n}·𝔖(N)·H^{r-1}/N^{r-r/n}` and its parts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MainTermPrediction {
    pub value: f64,
    /// `2^r γ(n,r) / nʳ`.
    pub coefficient: f64,
    /// `Π μ_i^{-1+1/n}`.
    pub weight_factor: f64,
    pub gamma: f64,
    pub singular: f64,
    pub singular_tail: f64,
}

/// `2^r r^{r-r/n} γ(n,r) / nʳ`, the equal-weight coefficient.
pub fn equal_weight_coefficient(n: u32, r: u32) -> Result<f64> {
    let g = gamma_constant(r)?.real_value;
    let (nf, rf) = (n as f64, r as f64);
    Ok((rf * 2f64.ln() + (rf - rf / nf) * rf.ln() + g.ln() - rf * nf.ln()).exp())
}

pub fn predict_main_term<T: Real>(
    p: &ProblemInstance<T>,
    q_trunc: u64,
) -> Result<MainTermPrediction> {
    let tables = SumTables::new(p.n, q_trunc)?;
    predict_main_term_with(p, &tables, q_trunc)
}

/// [`predict_main_term`] reusing precomputed complete sums.
pub fn predict_main_term_with<T: Real>(
    p: &ProblemInstance<T>,
    tables: &SumTables,
    q_trunc: u64,
) -> Result<MainTermPrediction> {
    let series: SeriesValue = tables.series(p.r as u32, p.target, q_trunc)?;
    let g = gamma_constant(p.r as u32)?.real_value;
    let (nf, rf) = (p.n as f64, p.r as f64);
    let log_coef = rf * 2f64.ln() + g.ln() - rf * nf.ln();
    let log_weights: f64 =
        p.mu.iter()
            .map(|m| (-1.0 + 1.0 / nf) * m.to_f64().unwrap().ln())
            .sum();
    let h = p.h.to_f64().unwrap();
    let big_n = p.target as f64;
    let log_scale = (rf - 1.0) * h.ln() - (rf - rf / nf) * big_n.ln();
    let value = (log_coef + log_weights + log_scale).exp() * series.value;
    Ok(MainTermPrediction {
        value,
        coefficient: log_coef.exp(),
        weight_factor: log_weights.exp(),
        gamma: g,
        singular: series.value,
        singular_tail: series.tail_estimate,
    })
}

/// One sample of `|T - (y/q)S(a,q)γ(λ;x,y)|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualRow {
    pub n: u32,
    pub x: u64,
    pub y: u64,
    pub a: u64,
    pub q: u64,
    pub lambda: f64,
    pub t_abs: f64,
    pub main_abs: f64,
    pub residual: f64,
    /// `residual / q^{0.6}`.
    pub normalized: f64,
}

/// Exponent standing in for `1/2 + ε` in normalisations.
pub const RESIDUAL_EXPONENT: f64 = 0.6;

pub fn residual_at(w: &WindowSpec, arc: &ArcPoint<f64>) -> Result<ResidualRow> {
    let t = short_weyl_sum(w, arc)?;
    let s = complete_sum::<f64>(CompleteSumSpec::untwisted(w.n, arc.a as i64, arc.q))?;
    let g = gamma_integral(w, arc.lambda)?;
    let main = s * g * (w.y as f64 / arc.q as f64);
    let residual = (t - main).norm();
    Ok(ResidualRow {
        n: w.n,
        x: w.x,
        y: w.y,
        a: arc.a,
        q: arc.q,
        lambda: arc.lambda,
        t_abs: t.norm(),
        main_abs: main.norm(),
        residual,
        normalized: residual / (arc.q as f64).powf(RESIDUAL_EXPONENT),
    })
}

fn random_unit(rng: &mut ChaCha8Rng, q: u64) -> u64 {
    if q == 1 {
        return 0;
    }
    loop {
        let a = rng.gen_range(1..q);
        if gcd_u64(a, q) == 1 {
            return a;
        }
    }
}

/// Samples `(a, q, λ)` with `2 ≤ q ≤ q_max` and `|λ| ≤ 1/(2nqx^{n-1})` for
/// each `x`, with `y = ⌊x^{0.6}⌋`, and evaluates the residual.
pub fn major_arc_residual_scan(
    n: u32,
    xs: &[u64],
    q_max: u64,
    samples: usize,
    seed: u64,
) -> Result<Vec<ResidualRow>> {
    if q_max < 2 {
        return invalid("q_max must be >= 2");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(xs.len() * samples);
    for &x in xs {
        let y = ((x as f64).powf(0.6).floor() as u64).clamp(1, x);
        let w = WindowSpec::new(n, x, y)?;
        let points: Vec<ArcPoint<f64>> = (0..samples)
            .map(|_| {
                let q = rng.gen_range(2..=q_max);
                let a = random_unit(&mut rng, q);
                let eta = 1.0 / (2.0 * n as f64 * q as f64 * (x as f64).powi(n as i32 - 1));
                let lambda = rng.gen_range(-eta..=eta);
                ArcPoint { a, q, lambda }
            })
            .collect();
        use rayon::prelude::*;
        let batch: Vec<ResidualRow> = points
            .par_iter()
            .map(|arc| residual_at(&w, arc))
            .collect::<Result<_>>()?;
        rows.extend(batch);
    }
    Ok(rows)
}

/// Per-bin maxima of `normalized` over ten equal-width q-bins of `[q_lo, q_hi]`,
/// and the ratio of the largest to the smallest nonempty bin.
pub fn decile_ratio(rows: &[ResidualRow], q_lo: u64, q_hi: u64) -> (Vec<f64>, f64) {
    let mut bins = vec![f64::NAN; 10];
    let width = (q_hi - q_lo + 1) as f64 / 10.0;
    for row in rows.iter().filter(|r| r.q >= q_lo && r.q <= q_hi) {
        let b = (((row.q - q_lo) as f64 / width) as usize).min(9);
        bins[b] = if bins[b].is_nan() {
            row.normalized
        } else {
            bins[b].max(row.normalized)
        };
    }
    let filled: Vec<f64> = bins.iter().copied().filter(|v| !v.is_nan()).collect();
    let hi = filled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = filled.iter().copied().fold(f64::INFINITY, f64::min);
    (bins, hi / lo)
}

/// `q^{1-1/n} ln q + min(y q^{-1/n}, x^{1/2} q^{1/2-1/n})`.
pub fn major_arc_sum_bound(n: u32, x: u64, y: u64, q: u64) -> f64 {
    let (nf, qf) = (n as f64, q as f64);
    qf.powf(1.0 - 1.0 / nf) * qf.ln()
        + (y as f64 * qf.powf(-1.0 / nf)).min((x as f64).sqrt() * qf.powf(0.5 - 1.0 / nf))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub a: u64,
    pub q: u64,
    pub lambda: f64,
    pub label: ArcLabel,
    pub t_abs: f64,
    pub lemma_bound: f64,
    pub major_bound: f64,
    /// `lemma_bound - |T|`.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub window: WindowSpec,
    pub minor: Vec<SweepRow>,
    pub m2: Vec<SweepRow>,
}

impl SweepReport {
    pub fn violations(&self) -> usize {
        self.minor.iter().filter(|r| r.slack < 0.0).count()
    }

    /// `max |T| / major_bound` over M2 rows with `q` below and above the median q.
    pub fn m2_constants(&self) -> (f64, f64) {
        let mut qs: Vec<u64> = self.m2.iter().map(|r| r.q).collect();
        qs.sort_unstable();
        let median = qs.get(qs.len() / 2).copied().unwrap_or(0);
        let fit = |keep: &dyn Fn(u64) -> bool| {
            self.m2
                .iter()
                .filter(|r| keep(r.q))
                .map(|r| r.t_abs / r.major_bound)
                .fold(0.0, f64::max)
        };
        (fit(&|q| q < median), fit(&|q| q >= median))
    }
}

pub fn sweep_point(
    w: &WindowSpec,
    wp: &WindowParams<f64>,
    alpha: f64,
    arc: &ArcPoint<f64>,
) -> Result<SweepRow> {
    let t = short_weyl_sum(w, arc)?.norm();
    let lemma = minor_arc_bound(w, arc)?.value;
    Ok(SweepRow {
        alpha,
        a: arc.a,
        q: arc.q,
        lambda: arc.lambda,
        label: classify(arc, wp),
        t_abs: t,
        lemma_bound: lemma,
        major_bound: major_arc_sum_bound(w.n, w.x, w.y, arc.q),
        slack: lemma - t,
    })
}

/// Minor-arc points from uniform α, and constructed `𝔐₂` points, for the
/// window `(x-y, x]` with `τ = 2n(n-1)x^{n-2}y`.
pub fn minor_arc_sweep(n: u32, x: u64, y: u64, samples: usize, seed: u64) -> Result<SweepReport> {
    let w = WindowSpec::new(n, x, y)?;
    let wp = WindowParams::single_window(n, x as f64, y as f64)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut minor_points = Vec::with_capacity(samples);
    let mut attempts = 0usize;
    while minor_points.len() < samples && attempts < 100 * samples.max(1) {
        attempts += 1;
        let alpha: f64 = rng.gen_range(0.0..1.0);
        let arc = dirichlet_approx(alpha, wp.tau)?;
        if classify(&arc, &wp) == ArcLabel::Minor {
            minor_points.push((alpha, arc));
        }
    }

    let mut m2_points = Vec::new();
    let q_limit = wp.major_q_limit().floor() as u64;
    if q_limit >= 1 {
        for _ in 0..samples {
            let q = rng.gen_range(1..=q_limit);
            let a = random_unit(&mut rng, q);
            let lo = wp.eta_q(q);
            let hi = 1.0 / (q as f64 * wp.tau);
            if !(lo < hi) {
                continue;
            }
            let mag = rng.gen_range(lo..=hi);
            let lambda = if rng.gen_bool(0.5) { mag } else { -mag };
            let lambda = if lambda.abs() <= lo { hi } else { lambda };
            let arc = ArcPoint::new(a, q, lambda)?;
            m2_points.push((arc.alpha(), arc));
        }
    }

    use rayon::prelude::*;
    let eval = |pts: &[(f64, ArcPoint<f64>)]| -> Result<Vec<SweepRow>> {
        pts.par_iter()
            .map(|(alpha, arc)| sweep_point(&w, &wp, *alpha, arc))
            .collect()
    };
    Ok(SweepReport {
        window: w,
        minor: eval(&minor_points)?,
        m2: eval(&m2_points)?,
    })
}

/// How `H` is chosen for each target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum HRule {
    /// `H = N^e`.
    Power(f64),
    Fixed(f64),
}

impl HRule {
    pub fn h_for(&self, target: u128) -> f64 {
        match *self {
            HRule::Power(e) => (target as f64).powf(e),
            HRule::Fixed(h) => h,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountRow {
    #[serde(serialize_with = "crate::serialize_decimal")]
    pub target: u128,
    pub h: f64,
    #[serde(serialize_with = "crate::serialize_decimal")]
    pub j_exact: BigUint,
    pub j_predicted: f64,
    pub ratio: f64,
    pub singular_value: f64,
    pub singular_tail: f64,
    pub runtime_s: f64,
    /// Some `μ_k N - H ≤ 0`; windows were clipped to `m ≥ 1`.
    pub windows_reach_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountReport {
    pub n: u32,
    pub r: usize,
    pub h_rule: HRule,
    pub q_trunc: u64,
    pub rows: Vec<CountRow>,
}

impl CountReport {
    /// Every ratio inside `[lo, hi]` and `|ratio - 1|` nonincreasing along the rows.
    pub fn trend_holds(&self, lo: f64, hi: f64) -> bool {
        let in_band = self.rows.iter().all(|r| r.ratio >= lo && r.ratio <= hi);
        let improving = self
            .rows
            .windows(2)
            .all(|p| (p[1].ratio - 1.0).abs() <= (p[0].ratio - 1.0).abs());
        in_band && improving
    }
}

/// Exact `J` against the predicted main term for each target.
pub fn end_to_end_report(
    n: u32,
    targets: &[u128],
    h_rule: HRule,
    mu: &[f64],
    q_trunc: u64,
    cfg: &CountConfig,
) -> Result<CountReport> {
    let tables = SumTables::new(n, q_trunc)?;
    let mut rows = Vec::with_capacity(targets.len());
    for &target in targets {
        let h = h_rule.h_for(target);
        let p = ProblemInstance::new(n, mu.len(), target, h, mu.to_vec())?;
        let start = Instant::now();
        let outcome = count_representations(&p, cfg)?;
        let runtime_s = start.elapsed().as_secs_f64();
        let pred = predict_main_term_with(&p, &tables, q_trunc)?;
        rows.push(CountRow {
            target,
            h,
            ratio: count_to_f64(&outcome.count) / pred.value,
            j_exact: outcome.count,
            j_predicted: pred.value,
            singular_value: pred.singular,
            singular_tail: pred.singular_tail,
            runtime_s,
            windows_reach_zero: outcome.windows_reach_zero,
        });
    }
    Ok(CountReport {
        n,
        r: mu.len(),
        h_rule,
        q_trunc,
        rows,
    })
}

/// Equal weights `1/r`.
pub fn equal_mu(r: usize) -> Vec<f64> {
    vec![1.0 / r as f64; r]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_examples() {
        assert_eq!(format_rational(&theta(3, 9).unwrap()), "1/30");
        assert_eq!(format_rational(&theta(4, 17).unwrap()), "1/108");
        assert_eq!(format_rational(&theta(10, 1025).unwrap()), "1/46170");
    }

    #[test]
    fn wright_examples() {
        assert_eq!(format_rational(&wright_theta(3, 9).unwrap()), "1/51");
        assert_eq!(format_rational(&wright_theta(4, 21).unwrap()), "1/100");
        assert_eq!(format_rational(&wright_theta(5, 53).unwrap()), "1/325");
        assert!(wright_theta(3, 8).is_err());
    }

    #[test]
    fn equal_weights_reduce_to_coefficient() {
        let p = ProblemInstance::equal_weights(3, 9, 1_000_000, 1e4f64).unwrap();
        let pred = predict_main_term(&p, 50).unwrap();
        let coef = equal_weight_coefficient(3, 9).unwrap();
        let direct = pred.coefficient * pred.weight_factor;
        assert!((direct - coef).abs() < 1e-12 * coef);
    }

    #[test]
    fn prediction_scales_with_h() {
        let p = ProblemInstance::equal_weights(3, 9, 1_000_000, 1e4f64).unwrap();
        let mut p2 = p.clone();
        p2.h = 2e4;
        let a = predict_main_term(&p, 50).unwrap().value;
        let b = predict_main_term(&p2, 50).unwrap().value;
        assert!((b / a - 256.0).abs() < 1e-9 * 256.0);
    }

    #[test]
    fn trivial_residual() {
        let w = WindowSpec::new(3, 10_000, 100).unwrap();
        let row = residual_at(&w, &ArcPoint::origin()).unwrap();
        assert!(row.residual < 1e-9);
    }

    #[test]
    fn trivial_report() {
        let r = end_to_end_report(
            3,
            &[9],
            HRule::Fixed(6.0),
            &equal_mu(9),
            20,
            &CountConfig::default(),
        )
        .unwrap();
        assert_eq!(r.rows[0].j_exact, BigUint::from(1u8));
        assert!(r.rows[0].j_predicted > 0.0);
    }
}
