//! Closed forms for the first-return and Green generating functions, the
//! spectral radius, and the coefficient asymptotics they imply.
//!
//! With `m = d - 1`, the first-return generating function is
//!
//! ```text
//! U(z) = ((m + λ) - sqrt((m + λ)^2 - 4 λ m z^2)) / (2m)
//! ```
//!
//! and `G(z) = 1 / (1 - U(z))`. Both have a square-root branch point at
//! `z = 1/ρ` with `ρ = 2 sqrt(m λ) / (m + λ)`. All arguments are real.

mod darboux;
mod series;

pub use darboux::{darboux_fd_check, darboux_report, phi, psi, DarbouxReport, PsiDerivatives};
pub use series::{sqrt_one_minus, PowerSeries, SeriesError};

use std::f64::consts::PI;

use thiserror::Error;

use crate::model::{ModelError, Regime, Scalar, WalkParams};
use crate::scaled::ScaledFloat;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenfunError {
    #[error("argument {arg} lies outside the domain {domain}")]
    Domain { arg: f64, domain: String },
    #[error("requires a transient walk (lambda < d - 1)")]
    NotTransient,
    #[error("no step-return asymptotic is available for recurrent walks (lambda > d - 1)")]
    NotCoveredRegime,
    #[error("step index must be at least 1")]
    ZeroStep,
    #[error("closed forms disagree: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

fn branches(params: &WalkParams) -> f64 {
    f64::from(params.d() - 1)
}

/// `Σ c_k x^k = (1 - sqrt(1 - 4x)) / (2x)`, evaluated as
/// `2 / (1 + sqrt(1 - 4x))` so that small `x` does not cancel.
pub fn catalan_gf(x: f64) -> Result<f64, GenfunError> {
    if !(-0.25..=0.25).contains(&x) {
        return Err(GenfunError::Domain {
            arg: x,
            domain: "[-1/4, 1/4]".into(),
        });
    }
    Ok(2.0 / (1.0 + (1.0 - 4.0 * x).sqrt()))
}

/// `2 sqrt((d-1) λ) / (d-1+λ)` without clipping at 1.
pub fn rho_formula(params: &WalkParams) -> f64 {
    let m = branches(params);
    let lambda = params.lambda_f64();
    2.0 * (m * lambda).sqrt() / (m + lambda)
}

/// Radius of convergence of `U`, `(d-1+λ) / (2 sqrt((d-1) λ))`.
pub fn u_radius(params: &WalkParams) -> f64 {
    let m = branches(params);
    let lambda = params.lambda_f64();
    (m + lambda) / (2.0 * (m * lambda).sqrt())
}

/// Spectral radius: the formula on `(0, d-1]`, exactly 1 from the critical
/// point on.
pub fn spectral_radius(params: &WalkParams) -> f64 {
    match params.regime() {
        Regime::Transient => rho_formula(params),
        Regime::Critical | Regime::Recurrent => 1.0,
    }
}

/// `ρ²` in any scalar type; rational whenever λ is.
pub fn rho_squared<T: Scalar>(params: &WalkParams) -> Result<T, GenfunError> {
    let lambda = T::from_lambda(params.lambda())?;
    let m = T::from_u64(u64::from(params.d() - 1));
    let total = m.clone() + lambda.clone();
    Ok(T::from_u64(4) * lambda * m / (total.clone() * total))
}

/// Probability of ever returning to the root, `min(λ, d-1) / (d-1)`.
pub fn return_probability(params: &WalkParams) -> f64 {
    let m = branches(params);
    params.lambda_f64().min(m) / m
}

fn u_discriminant(params: &WalkParams, z: f64) -> Result<f64, GenfunError> {
    let radius = u_radius(params);
    if !z.is_finite() || z.abs() > radius * (1.0 + 1e-12) {
        return Err(GenfunError::Domain {
            arg: z,
            domain: format!("|z| <= {radius}"),
        });
    }
    let m = branches(params);
    let lambda = params.lambda_f64();
    Ok(((m + lambda).powi(2) - 4.0 * lambda * m * z * z).max(0.0))
}

/// First-return generating function `U(o,o|z)`.
pub fn u_closed(params: &WalkParams, z: f64) -> Result<f64, GenfunError> {
    let disc = u_discriminant(params, z)?;
    let lambda = params.lambda_f64();
    let total = branches(params) + lambda;
    // rationalised: ((m+λ) - sqrt(D)) / 2m = 2 λ z² / ((m+λ) + sqrt(D))
    Ok(2.0 * lambda * z * z / (total + disc.sqrt()))
}

/// Green function `G(o,o|z) = 2(d-1) / (2(d-1) - (d-1+λ) + sqrt(...))`,
/// defined wherever `U(z)` is and `U(z) < 1`.
pub fn g_closed(params: &WalkParams, z: f64) -> Result<f64, GenfunError> {
    let disc = u_discriminant(params, z)?;
    let m = branches(params);
    let lambda = params.lambda_f64();
    let denom = 2.0 * m - (m + lambda) + disc.sqrt();
    if denom <= 0.0 {
        return Err(GenfunError::Domain {
            arg: z,
            domain: "region where U(z) < 1".into(),
        });
    }
    Ok(2.0 * m / denom)
}

/// Power series of `U` in `z` through `z^order`, expanded from the closed
/// form: `U(z) = (d-1+λ)/(2(d-1)) · (1 - sqrt(1 - ρ² z²))` with the square
/// root taken from [`sqrt_one_minus`].
pub fn series_u<T: Scalar>(
    params: &WalkParams,
    order: usize,
) -> Result<PowerSeries<T>, GenfunError> {
    let lambda = T::from_lambda(params.lambda())?;
    let m = T::from_u64(u64::from(params.d() - 1));
    let scale = (m.clone() + lambda) / (T::from_u64(2) * m);
    let rho2 = rho_squared::<T>(params)?;
    let root = sqrt_one_minus::<T>(order / 2);

    let mut coefficients = vec![T::zero(); order + 1];
    let mut rho_pow = T::one();
    for (n, b) in root.coefficients().iter().enumerate().skip(1) {
        rho_pow = rho_pow * rho2.clone();
        coefficients[2 * n] = -(scale.clone() * b.clone() * rho_pow.clone());
    }
    Ok(PowerSeries::new(coefficients))
}

/// Power series of `G` through `z^order`, by series division
/// `G = 1 / (1 - U)` applied to [`series_u`].
pub fn series_g<T: Scalar>(
    params: &WalkParams,
    order: usize,
) -> Result<PowerSeries<T>, GenfunError> {
    Ok(series_u::<T>(params, order)?.one_minus().reciprocal()?)
}

fn check_step(n: u64) -> Result<(), GenfunError> {
    if n == 0 {
        return Err(GenfunError::ZeroStep);
    }
    Ok(())
}

fn power_law(constant: f64, base: f64, n: u64, exponent: f64) -> ScaledFloat {
    let n = n as f64;
    ScaledFloat::from_ln(constant.ln() + 2.0 * n * base.ln() + exponent * n.ln())
}

/// Leading asymptotic of `p^(2n)(o,o)` as given by the Darboux constant
/// `p_const` of [`DarbouxReport`] in the transient regime and
/// `(π n)^(-1/2)` at the critical point.
pub fn p_asymptotic_scaled(params: &WalkParams, n: u64) -> Result<ScaledFloat, GenfunError> {
    check_step(n)?;
    match params.regime() {
        Regime::Transient => {
            let report = darboux_report(params)?;
            Ok(power_law(report.p_const, report.rho, n, -1.5))
        }
        Regime::Critical => Ok(power_law(1.0 / PI.sqrt(), 1.0, n, -0.5)),
        Regime::Recurrent => Err(GenfunError::NotCoveredRegime),
    }
}

pub fn p_asymptotic(params: &WalkParams, n: u64) -> Result<f64, GenfunError> {
    p_asymptotic_scaled(params, n).map(|s| s.to_f64())
}

/// Leading asymptotic of `p^(2n)(o,o)` read off the square-root singularity
/// of `G` at `1/ρ`, using `p_const_singularity`; identical to
/// [`p_asymptotic_scaled`] at the critical point.
pub fn p_asymptotic_singularity_scaled(
    params: &WalkParams,
    n: u64,
) -> Result<ScaledFloat, GenfunError> {
    check_step(n)?;
    match params.regime() {
        Regime::Transient => {
            let report = darboux_report(params)?;
            Ok(power_law(report.p_const_singularity, report.rho, n, -1.5))
        }
        _ => p_asymptotic_scaled(params, n),
    }
}

/// `π^(-1/2) ρ_f^(2n) n^(-3/2)` with `ρ_f` from [`rho_formula`], for every
/// λ > 0.
pub fn f_asymptotic_scaled(params: &WalkParams, n: u64) -> Result<ScaledFloat, GenfunError> {
    check_step(n)?;
    Ok(power_law(1.0 / PI.sqrt(), rho_formula(params), n, -1.5))
}

pub fn f_asymptotic(params: &WalkParams, n: u64) -> Result<f64, GenfunError> {
    f_asymptotic_scaled(params, n).map(|s| s.to_f64())
}

/// Constant `K` with `f^(2n) ~ K ρ_f^(2n) n^(-3/2)`, from Stirling's
/// estimate `c_{n-1} ~ 4^(n-1) π^(-1/2) n^(-3/2)` inserted into the Catalan
/// formula: `K = (d-1+λ) / (4 (d-1) sqrt(π))`.
pub fn f_const_stirling(params: &WalkParams) -> f64 {
    let m = branches(params);
    (m + params.lambda_f64()) / (4.0 * m * PI.sqrt())
}

pub fn f_asymptotic_stirling_scaled(
    params: &WalkParams,
    n: u64,
) -> Result<ScaledFloat, GenfunError> {
    check_step(n)?;
    Ok(power_law(
        f_const_stirling(params),
        rho_formula(params),
        n,
        -1.5,
    ))
}

/// `dρ/dλ = sqrt((d-1)/λ) (d-1-λ) / (d-1+λ)^2` on the transient range.
///
/// This is the derivative of [`rho_formula`] and agrees with central
/// differences of [`spectral_radius`]. The expression
/// `sqrt((d-1)/λ) (d-1+λ) / (d-1-λ)^2`, which is also positive, does not
/// match those differences and is not used.
pub fn rho_derivative(params: &WalkParams) -> Result<f64, GenfunError> {
    if params.regime() != Regime::Transient {
        return Err(GenfunError::NotTransient);
    }
    let m = branches(params);
    let lambda = params.lambda_f64();
    Ok((m / lambda).sqrt() * (m - lambda) / (m + lambda).powi(2))
}
