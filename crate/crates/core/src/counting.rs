//! Exact counting of ordered representations `N = x_1ⁿ + … + x_rⁿ` with
//! `|x_iⁿ - μ_i N| ≤ H`, and exact mean values of short Weyl sums.
//!
//! Sums of powers are exact `u128` keys. Multiplicities are `u128`; the
//! counter refuses instances whose total tuple count could exceed that width.

use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::scalar::{Dyadic, Real};
use crate::weyl_sums::WindowSpec;

/// The counting problem `x_1ⁿ + … + x_rⁿ = N`, `|x_iⁿ - μ_i N| ≤ H`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemInstance<T> {
    pub n: u32,
    pub r: usize,
    pub target: u128,
    pub h: T,
    pub mu: Vec<T>,
}

impl<T: Real> ProblemInstance<T> {
    pub fn new(n: u32, r: usize, target: u128, h: T, mu: Vec<T>) -> Result<Self> {
        if n < 3 {
            return invalid(format!("degree must be >= 3, got {n}"));
        }
        if r < 2 {
            return invalid(format!("need at least two summands, got {r}"));
        }
        if mu.len() != r {
            return invalid(format!("expected {r} weights, got {}", mu.len()));
        }
        if target == 0 {
            return invalid("target must be >= 1");
        }
        if !(h > T::zero()) || !h.is_finite() {
            return invalid("H must be positive and finite");
        }
        if mu.iter().any(|m| !(*m > T::zero()) || !m.is_finite()) {
            return invalid("weights must be positive");
        }
        let total = mu.iter().fold(T::zero(), |acc, &m| acc + m);
        let tol = T::c(1e-12).max(T::from_usize(r).unwrap() * T::epsilon() * T::c(4.0));
        if (total - T::one()).abs() > tol {
            return invalid(format!("weights sum to {total}, expected 1"));
        }
        Ok(ProblemInstance {
            n,
            r,
            target,
            h,
            mu,
        })
    }

    /// All weights equal to `1/r`.
    pub fn equal_weights(n: u32, r: usize, target: u128, h: T) -> Result<Self> {
        let w = T::one() / T::from_usize(r).unwrap();
        Self::new(n, r, target, h, vec![w; r])
    }

    /// `r = 2ⁿ + 1`, the summand count of the main theorem.
    pub fn has_standard_r(&self) -> bool {
        self.n < 64 && self.r as u128 == (1u128 << self.n) + 1
    }

    pub fn centre(&self, k: usize) -> T {
        self.mu[k] * T::from_u128(self.target).unwrap()
    }

    /// True when some window's real lower end `μ_k N - H` is not positive.
    pub fn windows_reach_zero(&self) -> bool {
        (0..self.r).any(|k| !(self.centre(k) - self.h > T::zero()))
    }

    pub fn windows(&self) -> Result<Vec<Vec<u64>>> {
        (0..self.r)
            .map(|k| power_window(self.n, self.centre(k), self.h))
            .collect()
    }

    /// Same instance with the weights permuted.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut out = self.clone();
        out.mu = perm.iter().map(|&i| self.mu[i]).collect();
        out
    }
}

/// Natural numbers `m ≥ 1` with `|mⁿ - centre| ≤ h`, decided exactly.
///
/// Both bounds are taken as the exact dyadic values of the floats; a lower
/// end at or below zero is clipped to `m = 1`.
pub fn power_window<T: Real>(n: u32, centre: T, h: T) -> Result<Vec<u64>> {
    if n == 0 {
        return invalid("degree must be positive");
    }
    if !(h >= T::zero()) || !h.is_finite() || !centre.is_finite() {
        return invalid("window needs finite centre and nonnegative H");
    }
    let (c_num, c_shift) = Dyadic::of(centre).to_scaled();
    let (h_num, h_shift) = Dyadic::of(h).to_scaled();
    let shift = c_shift.max(h_shift);
    let c_num = c_num << (shift - c_shift) as usize;
    let h_num = h_num << (shift - h_shift) as usize;
    let lower = &c_num - &h_num;
    let upper = &c_num + &h_num;

    // mⁿ·2^shift compared against the scaled bounds.
    let scaled =
        |m: u64| -> BigInt { num_traits::pow(BigInt::from(m), n as usize) << shift as usize };
    let one_scaled = BigInt::from(1u8) << shift as usize;
    if upper < one_scaled {
        return Ok(Vec::new());
    }
    let root = |v: T| -> u64 {
        let r = v.to_f64().unwrap().max(0.0).powf(1.0 / n as f64);
        if r.is_finite() {
            r.floor() as u64
        } else {
            u64::MAX / 2
        }
    };

    let mut hi = root(centre + h).max(1);
    while scaled(hi + 1) <= upper {
        hi += 1;
    }
    while hi > 0 && scaled(hi) > upper {
        hi -= 1;
    }
    if hi == 0 {
        return Ok(Vec::new());
    }

    let mut lo = if lower <= one_scaled {
        1
    } else {
        root(centre - h).max(1)
    };
    while lo > 1 && scaled(lo - 1) >= lower {
        lo -= 1;
    }
    while lo <= hi && scaled(lo) < lower {
        lo += 1;
    }
    Ok((lo..=hi).collect())
}

/// Resource limits for the exact counters.
#[derive(Debug, Clone, Copy)]
pub struct CountConfig {
    /// Memory cap for counters, in bytes.
    pub mem_budget: usize,
    /// Node cap for the depth-first oracle.
    pub naive_node_cap: u64,
    /// Cap on enumerated multisets in [`moment_integral`].
    pub moment_tuple_cap: u128,
}

impl Default for CountConfig {
    fn default() -> Self {
        CountConfig {
            mem_budget: 2 << 30,
            naive_node_cap: 100_000_000,
            moment_tuple_cap: 500_000_000,
        }
    }
}

impl CountConfig {
    pub fn with_mem_mb(mut self, mb: usize) -> Self {
        self.mem_budget = mb << 20;
        self
    }
}

/// Multiset counter `sum → multiplicity`, sparse or dense over a key range.
#[derive(Debug, Clone)]
enum Counter {
    Sparse(Vec<(u128, u128)>),
    Dense { lo: u128, counts: Vec<u128> },
}

impl Counter {
    fn single(values: &[u128], keep_lo: u128, keep_hi: u128) -> Counter {
        Counter::Sparse(
            values
                .iter()
                .filter(|&&v| v >= keep_lo && v <= keep_hi)
                .map(|&v| (v, 1))
                .collect(),
        )
    }

    fn entries(&self) -> usize {
        match self {
            Counter::Sparse(v) => v.len(),
            Counter::Dense { counts, .. } => counts.len(),
        }
    }

    fn key_range(&self) -> Option<(u128, u128)> {
        match self {
            Counter::Sparse(v) => Some((v.first()?.0, v.last()?.0)),
            Counter::Dense { lo, counts } if !counts.is_empty() => {
                Some((*lo, *lo + counts.len() as u128 - 1))
            }
            Counter::Dense { .. } => None,
        }
    }

    fn get(&self, key: u128) -> u128 {
        match self {
            Counter::Sparse(v) => match v.binary_search_by(|e| e.0.cmp(&key)) {
                Ok(i) => v[i].1,
                Err(_) => 0,
            },
            Counter::Dense { lo, counts } => {
                if key < *lo {
                    return 0;
                }
                counts.get((key - lo) as usize).copied().unwrap_or(0)
            }
        }
    }

    fn for_each_nonzero(&self, mut f: impl FnMut(u128, u128)) {
        match self {
            Counter::Sparse(v) => v.iter().for_each(|&(k, c)| f(k, c)),
            Counter::Dense { lo, counts } => {
                for (i, &c) in counts.iter().enumerate() {
                    if c != 0 {
                        f(lo + i as u128, c)
                    }
                }
            }
        }
    }

    /// Adds one more summand from `window`, keeping keys in `[keep_lo, keep_hi]`.
    fn convolve(
        &self,
        window: &[u128],
        keep_lo: u128,
        keep_hi: u128,
        mem: usize,
    ) -> Result<Counter> {
        let (old_lo, old_hi) = match self.key_range() {
            Some(r) => r,
            None => return Ok(Counter::Sparse(Vec::new())),
        };
        let (wmin, wmax) = (window[0], *window.last().unwrap());
        let lo = keep_lo.max(old_lo + wmin);
        let hi = keep_hi.min(old_hi + wmax);
        if lo > hi {
            return Ok(Counter::Sparse(Vec::new()));
        }
        let span = hi - lo + 1;
        let pairs = self.entries() as u128 * window.len() as u128;
        let dense_cap = (mem / 16) as u128;
        if span <= dense_cap && span <= 4 * pairs {
            let mut counts = vec![0u128; span as usize];
            match self {
                Counter::Dense {
                    lo: src_lo,
                    counts: src,
                } => {
                    for &w in window {
                        // dst index = src_lo + i + w - lo
                        let base = *src_lo + w;
                        let (src_start, dst_start) = if base >= lo {
                            (0u128, base - lo)
                        } else {
                            (lo - base, 0u128)
                        };
                        if src_start >= src.len() as u128 || dst_start >= span {
                            continue;
                        }
                        let len = (src.len() as u128 - src_start).min(span - dst_start) as usize;
                        let s = &src[src_start as usize..src_start as usize + len];
                        let d = &mut counts[dst_start as usize..dst_start as usize + len];
                        for (dv, sv) in d.iter_mut().zip(s) {
                            *dv += *sv;
                        }
                    }
                }
                Counter::Sparse(src) => {
                    for &(k, c) in src {
                        for &w in window {
                            let t = k + w;
                            if t >= lo && t <= hi {
                                counts[(t - lo) as usize] += c;
                            }
                        }
                    }
                }
            }
            return Ok(Counter::Dense { lo, counts });
        }

        let cap = (mem / 32) as u128;
        if pairs > cap {
            return Err(Error::BudgetExceeded {
                what: "sparse counter",
                needed: pairs,
                cap,
            });
        }
        let mut out = Vec::with_capacity(pairs as usize);
        self.for_each_nonzero(|k, c| {
            for &w in window {
                let t = k + w;
                if t >= lo && t <= hi {
                    out.push((t, c));
                }
            }
        });
        out.par_sort_unstable_by_key(|e| e.0);
        let mut merged: Vec<(u128, u128)> = Vec::with_capacity(out.len());
        for (k, c) in out {
            match merged.last_mut() {
                Some(last) if last.0 == k => last.1 += c,
                _ => merged.push((k, c)),
            }
        }
        Ok(Counter::Sparse(merged))
    }
}

/// Result of [`count_representations`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountOutcome {
    #[serde(serialize_with = "crate::serialize_decimal")]
    pub count: BigUint,
    pub window_sizes: Vec<usize>,
    /// Entries held by the two half counters before the join.
    pub counter_sizes: (usize, usize),
    pub windows_reach_zero: bool,
    pub seconds: f64,
}

fn window_powers(n: u32, window: &[u64]) -> Result<Vec<u128>> {
    window
        .iter()
        .map(|&m| {
            (m as u128)
                .checked_pow(n)
                .ok_or(Error::Overflow("power window"))
        })
        .collect()
}

/// Exact ordered count by meet-in-the-middle convolution.
pub fn count_representations<T: Real>(
    p: &ProblemInstance<T>,
    cfg: &CountConfig,
) -> Result<CountOutcome> {
    let start = Instant::now();
    let windows = p.windows()?;
    let window_sizes: Vec<usize> = windows.iter().map(|w| w.len()).collect();
    let done = |count: BigUint, sizes: (usize, usize)| CountOutcome {
        count,
        window_sizes: window_sizes.clone(),
        counter_sizes: sizes,
        windows_reach_zero: p.windows_reach_zero(),
        seconds: start.elapsed().as_secs_f64(),
    };
    if windows.iter().any(|w| w.is_empty()) {
        return Ok(done(BigUint::zero(), (0, 0)));
    }
    let total: Option<u128> = window_sizes
        .iter()
        .try_fold(1u128, |acc, &s| acc.checked_mul(s as u128));
    if total.is_none() {
        return Err(Error::Overflow("tuple count exceeds 128 bits"));
    }
    let mut powers: Vec<Vec<u128>> = windows
        .iter()
        .map(|w| window_powers(p.n, w))
        .collect::<Result<_>>()?;
    powers.sort_by_key(|w| w.len());
    let target = p.target;

    let left: Vec<&Vec<u128>> = powers.iter().step_by(2).collect();
    let right: Vec<&Vec<u128>> = powers.iter().skip(1).step_by(2).collect();
    let min_sum = |ws: &[&Vec<u128>]| ws.iter().map(|w| w[0]).sum::<u128>();
    let max_sum = |ws: &[&Vec<u128>]| ws.iter().map(|w| *w.last().unwrap()).sum::<u128>();

    let build = |half: &[&Vec<u128>], other: &[&Vec<u128>]| -> Result<Counter> {
        let other_min = min_sum(other);
        let other_max = max_sum(other);
        let bounds = |used: usize| {
            let rest_min = other_min + min_sum(&half[used..]);
            let rest_max = other_max + max_sum(&half[used..]);
            let keep_lo = target.saturating_sub(rest_max);
            let keep_hi = target.checked_sub(rest_min);
            (keep_lo, keep_hi)
        };
        let (lo, hi) = bounds(1);
        let Some(hi) = hi else {
            return Ok(Counter::Sparse(Vec::new()));
        };
        let mut counter = Counter::single(half[0], lo, hi);
        for used in 1..half.len() {
            let (lo, hi) = bounds(used + 1);
            let Some(hi) = hi else {
                return Ok(Counter::Sparse(Vec::new()));
            };
            counter = counter.convolve(half[used], lo, hi, cfg.mem_budget)?;
        }
        Ok(counter)
    };

    let lc = build(&left, &right)?;
    let rc = build(&right, &left)?;
    let sizes = (lc.entries(), rc.entries());

    let mut keys: Vec<(u128, u128)> = Vec::with_capacity(lc.entries());
    lc.for_each_nonzero(|k, c| keys.push((k, c)));
    let count: u128 = keys
        .par_iter()
        .map(|&(k, c)| match target.checked_sub(k) {
            Some(rest) => c * rc.get(rest),
            None => 0,
        })
        .sum();
    Ok(done(BigUint::from(count), sizes))
}

/// Depth-first enumeration with residual-range pruning; verification oracle.
pub fn count_representations_naive<T: Real>(
    p: &ProblemInstance<T>,
    cfg: &CountConfig,
) -> Result<BigUint> {
    let windows = p.windows()?;
    if windows.iter().any(|w| w.is_empty()) {
        return Ok(BigUint::zero());
    }
    let powers: Vec<Vec<u128>> = windows
        .iter()
        .map(|w| window_powers(p.n, w))
        .collect::<Result<_>>()?;
    let r = powers.len();
    let mut min_rem = vec![0u128; r + 1];
    let mut max_rem = vec![0u128; r + 1];
    for i in (0..r).rev() {
        min_rem[i] = min_rem[i + 1] + powers[i][0];
        max_rem[i] = max_rem[i + 1] + *powers[i].last().unwrap();
    }

    struct Dfs<'a> {
        powers: &'a [Vec<u128>],
        min_rem: &'a [u128],
        max_rem: &'a [u128],
        nodes: u64,
        cap: u64,
        count: u128,
    }
    impl Dfs<'_> {
        fn go(&mut self, depth: usize, residual: u128) -> Result<()> {
            self.nodes += 1;
            if self.nodes > self.cap {
                return Err(Error::BudgetExceeded {
                    what: "naive enumeration",
                    needed: self.nodes as u128,
                    cap: self.cap as u128,
                });
            }
            if residual < self.min_rem[depth] || residual > self.max_rem[depth] {
                return Ok(());
            }
            let window = &self.powers[depth];
            if depth + 1 == self.powers.len() {
                if window.binary_search(&residual).is_ok() {
                    self.count += 1;
                }
                return Ok(());
            }
            for &v in window {
                if v > residual {
                    break;
                }
                self.go(depth + 1, residual - v)?;
            }
            Ok(())
        }
    }

    let mut dfs = Dfs {
        powers: &powers,
        min_rem: &min_rem,
        max_rem: &max_rem,
        nodes: 0,
        cap: cfg.naive_node_cap,
        count: 0,
    };
    dfs.go(0, p.target)?;
    Ok(BigUint::from(dfs.count))
}

/// `∫₀¹ |T(α;x,y)|^{2^k} dα` as an exact count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentCount {
    pub k: u32,
    #[serde(serialize_with = "crate::serialize_decimal")]
    pub count: BigUint,
}

fn binomial_u128(n: u128, k: u128) -> Option<u128> {
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// Number of ordered `2^k`-tuples from `(x-y, x]` whose two halves of
/// `ν = 2^{k-1}` entries have equal sums of n-th powers, i.e. `Σ_s C(s)²` for
/// the ν-fold counter `C`.
///
/// Multisets are enumerated once with their permutation weights. When the
/// keys do not fit the memory budget the enumeration is repeated in passes,
/// each keeping one residue class of keys.
pub fn moment_integral(w: &WindowSpec, k: u32, cfg: &CountConfig) -> Result<MomentCount> {
    w.validate()?;
    if k == 0 || k > w.n {
        return invalid(format!("depth k must satisfy 1 <= k <= n, got {k}"));
    }
    if k > 7 {
        return invalid("depth above 7 is not supported");
    }
    let nu = 1usize << (k - 1);
    let y = w.y as usize;
    let base = w.x - w.y + 1;
    let base_pow = (base as u128)
        .checked_pow(w.n)
        .ok_or(Error::Overflow("moment keys"))?;
    let values: Vec<u128> = (0..w.y)
        .map(|i| {
            ((base + i) as u128)
                .checked_pow(w.n)
                .map(|v| v - base_pow)
                .ok_or(Error::Overflow("moment keys"))
        })
        .collect::<Result<_>>()?;
    let vmax = *values.last().unwrap();
    let key_max = vmax
        .checked_mul(nu as u128)
        .ok_or(Error::Overflow("moment keys"))?;
    let factorial: u128 = (1..=nu as u128).product();
    let wbits = 128 - factorial.leading_zeros();
    let kbits = 128 - key_max.leading_zeros();
    if kbits + wbits > 128 {
        return Err(Error::Overflow("moment keys with weights"));
    }

    let multisets = binomial_u128(y as u128 + nu as u128 - 1, nu as u128)
        .ok_or(Error::Overflow("multiset count"))?;
    if multisets > cfg.moment_tuple_cap {
        return Err(Error::BudgetExceeded {
            what: "moment multiset enumeration",
            needed: multisets,
            cap: cfg.moment_tuple_cap,
        });
    }
    let per_pass_cap = (cfg.mem_budget / 16).max(1) as u128;
    let passes = multisets.div_ceil(per_pass_cap).max(1);

    // Inverse factorials are exact because the weight ν!/∏m_i! is an integer;
    // the weight is assembled incrementally from run lengths.
    let mut fact = vec![1u128; nu + 1];
    for i in 1..=nu {
        fact[i] = fact[i - 1] * i as u128;
    }

    let mut total = BigUint::zero();
    for pass in 0..passes {
        let mut keys: Vec<u128> = Vec::new();
        let mut idx = vec![0usize; nu];
        enumerate_multisets(&values, &mut idx, 0, 0, 0, &mut |key, idx| {
            if passes > 1 && key % passes != pass {
                return;
            }
            let mut denom = 1u128;
            let mut run = 1usize;
            for i in 1..=idx.len() {
                if i < idx.len() && idx[i] == idx[i - 1] {
                    run += 1;
                } else {
                    denom *= fact[run];
                    run = 1;
                }
            }
            let weight = fact[nu] / denom;
            keys.push((key << wbits) | weight);
        });
        keys.par_sort_unstable();
        let mask = (1u128 << wbits) - 1;
        let mut acc: u128 = 0;
        let mut i = 0;
        while i < keys.len() {
            let key = keys[i] >> wbits;
            let mut c: u128 = 0;
            while i < keys.len() && keys[i] >> wbits == key {
                c += keys[i] & mask;
                i += 1;
            }
            let sq = c.checked_mul(c).ok_or(Error::Overflow("moment square"))?;
            match acc.checked_add(sq) {
                Some(v) => acc = v,
                None => {
                    total += BigUint::from(acc);
                    acc = sq;
                }
            }
        }
        total += BigUint::from(acc);
    }
    Ok(MomentCount { k, count: total })
}

fn enumerate_multisets(
    values: &[u128],
    idx: &mut [usize],
    pos: usize,
    start: usize,
    partial: u128,
    visit: &mut dyn FnMut(u128, &[usize]),
) {
    if pos == idx.len() {
        visit(partial, idx);
        return;
    }
    for i in start..values.len() {
        idx[pos] = i;
        enumerate_multisets(values, idx, pos + 1, i, partial + values[i], visit);
    }
}

/// Lower bound `y^ν` on [`moment_integral`] for `y ≥ ν` (diagonal solutions).
pub fn diagonal_lower_bound(y: u64, k: u32) -> BigUint {
    let nu = 1u32 << (k - 1);
    num_traits::pow(BigUint::from(y), nu as usize)
}

/// Compares two counts as floats for ratio reporting.
pub fn count_to_f64(c: &BigUint) -> f64 {
    c.to_f64().unwrap_or(f64::INFINITY)
}
