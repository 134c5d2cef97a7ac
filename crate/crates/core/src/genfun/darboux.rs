//! Constants for the coefficient asymptotics of the Green function in the
//! transient regime.
//!
//! Writing `a = 2m/(m+λ)` and `b = (m-λ)/(m+λ)` with `m = d-1`, the Green
//! function is `G(z) = a / (b + sqrt(1 - ρ² z²))`, and it solves
//! `G = Φ(z G)` for
//!
//! ```text
//! Φ(t) = (-a b + sqrt(a² + ρ² (1 - b²) t²)) / (1 - b²).
//! ```
//!
//! With `Ψ(u, v) = Φ(u v) - v`, the singular point is `(1/ρ, G(1/ρ))`, where
//! `∂Ψ/∂v = 0`. The constants `c1 = ∂²Ψ/∂v²` and `c2 = ∂Ψ/∂u` there have
//! closed forms that [`darboux_fd_check`] re-derives numerically.

use std::f64::consts::PI;

use crate::model::{Regime, WalkParams};

use super::{g_closed, rho_formula, GenfunError};

/// Agreement required between the two algebraic forms of each constant.
const FORM_TOLERANCE: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct DarbouxReport {
    pub a: f64,
    pub b: f64,
    /// `(m-λ)^3 / (2 m (m+λ)^2)`
    pub c1: f64,
    /// `2 ρ m / (m-λ)`
    pub c2: f64,
    pub rho: f64,
    /// `sqrt(c1 / (2π ρ c2)) · 2^(-3/2) = (m-λ)^2 / (16 sqrt(π λ) m^(3/2))`.
    pub p_const: f64,
    /// `π^(-1/2)`, the constant paired with `ρ^(2n) n^(-3/2)` in
    /// [`super::f_asymptotic`].
    pub f_const: f64,
    /// Leading coefficient of the square-root singularity of `G` transferred
    /// to `p^(2n)`: `a / (2 b² sqrt(π)) = sqrt(c2 / (π ρ c1)) / 2`.
    ///
    /// Exact step-return probabilities satisfy
    /// `p^(2n) ρ^(-2n) n^(3/2) → p_const_singularity`; at `d = 3, λ = 1`
    /// this is `6/sqrt(π) ≈ 3.385`, while `p_const ≈ 0.01247`.
    pub p_const_singularity: f64,
    /// `(m+λ) / (4 m sqrt(π))`, the limit of `f^(2n) ρ^(-2n) n^(3/2)`; see
    /// [`super::f_const_stirling`].
    pub f_const_stirling: f64,
}

fn check_forms(name: &str, lhs: f64, rhs: f64) -> Result<(), GenfunError> {
    if (lhs - rhs).abs() > FORM_TOLERANCE * lhs.abs().max(rhs.abs()) {
        return Err(GenfunError::Inconsistent(format!("{name}: {lhs} vs {rhs}")));
    }
    Ok(())
}

pub fn darboux_report(params: &WalkParams) -> Result<DarbouxReport, GenfunError> {
    if params.regime() != Regime::Transient {
        return Err(GenfunError::NotTransient);
    }
    let m = f64::from(params.d() - 1);
    let lambda = params.lambda_f64();
    let rho = rho_formula(params);
    let a = 2.0 * m / (m + lambda);
    let b = (m - lambda) / (m + lambda);
    let c1 = (m - lambda).powi(3) / (2.0 * m * (m + lambda).powi(2));
    let c2 = 2.0 * rho * m / (m - lambda);

    let p_const = (c1 / (2.0 * PI * rho * c2)).sqrt() * 2f64.powf(-1.5);
    let p_const_explicit = (m - lambda).powi(2) / (16.0 * (PI * lambda).sqrt() * m.powf(1.5));
    check_forms("p_const", p_const, p_const_explicit)?;

    let p_const_singularity = a / (2.0 * b * b * PI.sqrt());
    let p_const_implicit = 0.5 * (c2 / (PI * rho * c1)).sqrt();
    check_forms("p_const_singularity", p_const_singularity, p_const_implicit)?;

    Ok(DarbouxReport {
        a,
        b,
        c1,
        c2,
        rho,
        p_const,
        f_const: 1.0 / PI.sqrt(),
        p_const_singularity,
        f_const_stirling: super::f_const_stirling(params),
    })
}

/// `Φ(t)` built from the report's `a`, `b` and `ρ`.
pub fn phi(report: &DarbouxReport, t: f64) -> f64 {
    let (a, b, rho) = (report.a, report.b, report.rho);
    let one_minus_b2 = 1.0 - b * b;
    (-a * b + (a * a + rho * rho * one_minus_b2 * t * t).sqrt()) / one_minus_b2
}

/// `Ψ(u, v) = Φ(u v) - v`.
pub fn psi(report: &DarbouxReport, u: f64, v: f64) -> f64 {
    phi(report, u * v) - v
}

/// Numerical partial derivatives of `Ψ` at `(1/ρ, G(1/ρ))`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiDerivatives {
    pub u: f64,
    pub v: f64,
    pub dpsi_dv: f64,
    pub d2psi_dv2: f64,
    pub dpsi_du: f64,
}

/// Central differences with one Richardson extrapolation step
/// (`(4 D(h/2) - D(h)) / 3`), which removes the `h²` error term.
fn richardson(diff: impl Fn(f64) -> f64, h: f64) -> f64 {
    (4.0 * diff(h / 2.0) - diff(h)) / 3.0
}

pub fn darboux_fd_check(params: &WalkParams) -> Result<PsiDerivatives, GenfunError> {
    let report = darboux_report(params)?;
    let u = 1.0 / report.rho;
    // the square root in G vanishes at 1/ρ, leaving G = 2m / (m - λ)
    let m = f64::from(params.d() - 1);
    let v = 2.0 * m / (m - params.lambda_f64());
    let v_closed = g_closed(params, u)?;
    if (v_closed - v).abs() > 1e-6 * v {
        return Err(GenfunError::Inconsistent(format!(
            "G(1/rho) = {v_closed}, expected {v}"
        )));
    }
    let f = |uu: f64, vv: f64| psi(&report, uu, vv);
    let hv = 1e-3 * v.abs().max(1.0);
    let hu = 1e-3 * u.abs().max(1.0);

    let dpsi_dv = richardson(|h| (f(u, v + h) - f(u, v - h)) / (2.0 * h), hv);
    let d2psi_dv2 = richardson(
        |h| (f(u, v + h) - 2.0 * f(u, v) + f(u, v - h)) / (h * h),
        hv,
    );
    let dpsi_du = richardson(|h| (f(u + h, v) - f(u - h, v)) / (2.0 * h), hu);
    Ok(PsiDerivatives {
        u,
        v,
        dpsi_dv,
        d2psi_dv2,
        dpsi_du,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_params;

    #[test]
    fn report_at_d3_lambda1() {
        let r = darboux_report(&make_params(3, 1.0).unwrap()).unwrap();
        assert!((r.c1 - 1.0 / 36.0).abs() < 1e-16);
        assert!((r.c2 - 8.0 * 2f64.sqrt() / 3.0).abs() < 1e-14);
        assert!((r.c2 - 3.771_236).abs() < 1e-6);
        let expected = 1.0 / (16.0 * PI.sqrt() * 2f64.powf(1.5));
        assert!((r.p_const - expected).abs() < 1e-16);
        assert!((r.p_const - 0.012_466_9).abs() < 1e-7);
        assert!((r.p_const_singularity - 6.0 / PI.sqrt()).abs() < 1e-14);
        assert!((r.f_const_stirling - 3.0 / (8.0 * PI.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn report_rejects_non_transient() {
        assert_eq!(
            darboux_report(&make_params(3, 2.0).unwrap()),
            Err(GenfunError::NotTransient)
        );
        assert_eq!(
            darboux_report(&make_params(3, 7.0).unwrap()),
            Err(GenfunError::NotTransient)
        );
    }

    #[test]
    fn green_function_is_a_fixed_point_of_phi() {
        let p = make_params(4, 0.7).unwrap();
        let r = darboux_report(&p).unwrap();
        for z in [0.0, 0.3, 0.9, 1.0 / r.rho] {
            let g = g_closed(&p, z).unwrap();
            assert!((phi(&r, z * g) - g).abs() < 1e-12 * g);
        }
    }

    #[test]
    fn finite_differences_recover_c1_and_c2() {
        for (d, lam) in [(3, 1.0), (3, 0.5), (4, 1.5), (5, 2.5), (2, 0.5)] {
            let p = make_params(d, lam).unwrap();
            let r = darboux_report(&p).unwrap();
            let fd = darboux_fd_check(&p).unwrap();
            assert!(
                fd.dpsi_dv.abs() < 1e-9,
                "d={d} lambda={lam}: {}",
                fd.dpsi_dv
            );
            assert!(
                (fd.d2psi_dv2 - r.c1).abs() <= 1e-5 * r.c1,
                "d={d} lambda={lam}"
            );
            assert!(
                (fd.dpsi_du - r.c2).abs() <= 1e-5 * r.c2,
                "d={d} lambda={lam}"
            );
        }
    }
}
