//! Circle-method toolkit for Waring's problem with almost proportional
//! summands: complete and short exponential sums, the arc dissection, the
//! singular series, the archimedean constant, and an exact representation
//! counter to compare against the predicted main term.
//!
//! Floating-point routines are generic over [`Real`] (`f32`, `f64`); exact
//! quantities use `u128`, `BigInt` and `BigRational`. The `*64` aliases fix
//! the scalar to `f64`.

pub mod arcs;
pub mod counting;
pub mod error;
pub mod exp_sums;
pub mod oscillatory;
pub mod scalar;
pub mod singular_series;
pub mod verify;
pub mod weyl_sums;

pub use arcs::{classify, dirichlet_approx, window_params, ArcLabel, ArcPoint, WindowParams};
pub use counting::{
    count_representations, count_representations_naive, moment_integral, power_window, CountConfig,
    CountOutcome, MomentCount, ProblemInstance,
};
pub use error::{Error, Result};
pub use exp_sums::{complete_sum, hua_bound_ratio, weyl_complete_ratio, CompleteSumSpec};
pub use oscillatory::{gamma_constant, gamma_integral, gamma_oracle, GammaConstant};
pub use scalar::Real;
pub use singular_series::{
    local_sum, multiplicativity_check, singular_series, LocalFactor, SeriesValue,
};
pub use verify::{
    end_to_end_report, major_arc_residual_scan, minor_arc_sweep, predict_main_term, theta,
    wright_theta, CountReport,
};
pub use weyl_sums::{
    difference_poly, minor_arc_bound, short_weyl_sum, weyl_differencing_check, DifferencePoly,
    WindowSpec,
};

pub type Complex64 = num_complex::Complex<f64>;
pub type ArcPoint64 = ArcPoint<f64>;
pub type WindowParams64 = WindowParams<f64>;
pub type ProblemInstance64 = ProblemInstance<f64>;

/// Serializes an exact integer as a decimal string.
pub(crate) fn serialize_decimal<S, D>(v: &D, s: S) -> std::result::Result<S::Ok, S::Error>
where
    S: serde::Serializer,
    D: std::fmt::Display,
{
    s.serialize_str(&v.to_string())
}

pub(crate) fn serialize_decimal_vec<S, D>(v: &[D], s: S) -> std::result::Result<S::Ok, S::Error>
where
    S: serde::Serializer,
    D: std::fmt::Display,
{
    s.collect_seq(v.iter().map(|d| d.to_string()))
}
