//! Return and first-return probabilities at the root, computed by forward
//! dynamic programming on the distance chain, together with the Catalan
//! closed form for first returns.
//!
//! Two backends are available. [`Arithmetic::Rational`] is exact and is the
//! oracle the closed forms are checked against; it is capped at
//! [`RATIONAL_STEP_CAP`] steps by default. [`Arithmetic::ScaledFloat`] keeps
//! one power-of-two exponent per DP row and reaches tens of thousands of
//! steps without underflow.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::model::{radial_kernel, Lambda, ModelError, WalkParams};
use crate::scaled::ScaledFloat;

/// Largest step count the rational backend accepts unless told otherwise.
pub const RATIONAL_STEP_CAP: usize = 2000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExactError {
    #[error("rational mode is capped at {cap} steps, {requested} requested")]
    CapacityExceeded { requested: usize, cap: usize },
    #[error("first-return tables need max_step >= 2, got {0}")]
    MaxStepTooSmall(usize),
    #[error("first-return index must be at least 1")]
    ZeroIndex,
    #[error("expected a {expected:?} table, got {found:?}")]
    WrongKind {
        expected: TableKind,
        found: TableKind,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arithmetic {
    Rational,
    ScaledFloat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TableKind {
    /// `p^(n)(o,o)`, the chance of sitting at the root after `n` steps.
    StepReturn,
    /// `f^(n)(o,o)`, the chance that the first return happens at step `n`.
    FirstReturn,
}

/// A single probability in either backend.
#[derive(Debug, Clone, PartialEq)]
pub enum Prob {
    Exact(BigRational),
    Scaled(ScaledFloat),
}

impl Prob {
    pub fn to_f64(&self) -> f64 {
        match self {
            Prob::Exact(r) => r.to_f64().unwrap_or(0.0),
            Prob::Scaled(s) => s.to_f64(),
        }
    }

    pub fn to_scaled(&self) -> ScaledFloat {
        match self {
            Prob::Exact(r) => ScaledFloat::from_rational(r),
            Prob::Scaled(s) => *s,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Prob::Exact(r) => Some(r),
            Prob::Scaled(_) => None,
        }
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prob::Exact(r) => write!(f, "{r}"),
            Prob::Scaled(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProbValues {
    Rational(Vec<BigRational>),
    Scaled(Vec<ScaledFloat>),
}

/// Probabilities indexed by step count `0..=max_step`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbTable {
    kind: TableKind,
    values: ProbValues,
}

impl ProbTable {
    pub fn new(kind: TableKind, values: ProbValues) -> Self {
        ProbTable { kind, values }
    }

    pub fn kind(&self) -> TableKind {
        self.kind
    }

    pub fn arithmetic(&self) -> Arithmetic {
        match self.values {
            ProbValues::Rational(_) => Arithmetic::Rational,
            ProbValues::Scaled(_) => Arithmetic::ScaledFloat,
        }
    }

    pub fn len(&self) -> usize {
        match &self.values {
            ProbValues::Rational(v) => v.len(),
            ProbValues::Scaled(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn max_step(&self) -> usize {
        self.len().saturating_sub(1)
    }

    pub fn values(&self) -> &ProbValues {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut ProbValues {
        &mut self.values
    }

    pub fn get(&self, n: usize) -> Option<Prob> {
        match &self.values {
            ProbValues::Rational(v) => v.get(n).cloned().map(Prob::Exact),
            ProbValues::Scaled(v) => v.get(n).copied().map(Prob::Scaled),
        }
    }

    pub fn rational(&self) -> Option<&[BigRational]> {
        match &self.values {
            ProbValues::Rational(v) => Some(v),
            ProbValues::Scaled(_) => None,
        }
    }

    pub fn scaled(&self) -> Vec<ScaledFloat> {
        match &self.values {
            ProbValues::Rational(v) => v.iter().map(ScaledFloat::from_rational).collect(),
            ProbValues::Scaled(v) => v.clone(),
        }
    }

    /// Checks parity, range, the value at step 0 and, for first returns,
    /// that partial sums never exceed `bound` (pass the total return
    /// probability, or 1).
    pub fn check_invariants(&self, bound: f64) -> Result<(), String> {
        let vals = self.scaled();
        let expected_zero = match self.kind {
            TableKind::StepReturn => ScaledFloat::ONE,
            TableKind::FirstReturn => ScaledFloat::ZERO,
        };
        match vals.first() {
            Some(v) if *v == expected_zero => {}
            Some(v) => return Err(format!("value at step 0 is {v}")),
            None => return Err("empty table".into()),
        }
        let mut partial = 0.0;
        for (n, v) in vals.iter().enumerate() {
            if n % 2 == 1 && !v.is_zero() {
                return Err(format!("odd step {n} has mass {v}"));
            }
            if *v > ScaledFloat::ONE {
                return Err(format!("step {n} exceeds one: {v}"));
            }
            if self.kind == TableKind::FirstReturn {
                partial += v.to_f64();
                if partial > bound + 1e-12 {
                    return Err(format!("partial sum {partial} at step {n} exceeds {bound}"));
                }
            }
        }
        Ok(())
    }
}

/// `λ = a/b` with weights `a` (down) and `b(d-1)` (up) over the common
/// denominator `D = b(d-1) + a`, so each DP row is an integer vector over `D^t`.
struct IntegerKernel {
    down: BigInt,
    up: BigInt,
    denom: BigInt,
}

impl IntegerKernel {
    fn new(params: &WalkParams) -> Result<Self, ModelError> {
        let lambda = match params.lambda() {
            Lambda::Exact(r) => r,
            Lambda::Float(x) => return Err(ModelError::InexactLambda(*x)),
        };
        let down = lambda.numer().clone();
        let up = lambda.denom() * BigInt::from(params.d() - 1);
        let denom = &down + &up;
        Ok(IntegerKernel { down, up, denom })
    }
}

fn check_cap(max_step: usize, cap: usize) -> Result<(), ExactError> {
    if max_step > cap {
        return Err(ExactError::CapacityExceeded {
            requested: max_step,
            cap,
        });
    }
    Ok(())
}

/// Forward DP in integer numerators. With `absorb` set, mass reaching the
/// root after step 0 is recorded and removed, giving first-return
/// probabilities; otherwise the root reflects and step-return
/// probabilities are recorded. Levels farther than the remaining step
/// budget can never come back and are dropped.
fn rational_dp(kernel: &IntegerKernel, max_step: usize, absorb: bool) -> Vec<BigRational> {
    let mut out = Vec::with_capacity(max_step + 1);
    out.push(if absorb {
        BigRational::zero()
    } else {
        BigRational::one()
    });
    let mut row: Vec<BigInt> = vec![BigInt::one()];
    let mut denom = BigInt::one();
    for t in 1..=max_step {
        let reach = (max_step - t).min(t);
        let mut next = vec![BigInt::zero(); reach + 2];
        for (k, mass) in row.iter().enumerate() {
            if mass.is_zero() {
                continue;
            }
            if k == 0 {
                next[1] += mass * &kernel.denom;
            } else {
                next[k - 1] += mass * &kernel.down;
                if k < reach {
                    next[k + 1] += mass * &kernel.up;
                }
            }
        }
        next.truncate(reach + 1);
        denom *= &kernel.denom;
        out.push(BigRational::new(next[0].clone(), denom.clone()));
        if absorb {
            next[0] = BigInt::zero();
        }
        row = next;
    }
    out
}

/// Same recursion in floats, run on the tilted vector `q_t(k) = P_t(k) s^k`
/// with `s = sqrt(p_down / p_up)`. The tilt makes both directions carry the
/// weight `sqrt(p_up p_down)`, so entries within a row stay comparable and a
/// single power-of-two exponent per row is enough. `q_t(0) = P_t(0)`.
fn scaled_dp(params: &WalkParams, max_step: usize, absorb: bool) -> Vec<ScaledFloat> {
    const RESCALE_BELOW: f64 = 1.0 / (1u64 << 63) as f64;
    let kernel = radial_kernel::<f64>(params).expect("float kernels always build");
    let tilt = (kernel.p_down / kernel.p_up).sqrt();
    let weight = (kernel.p_down * kernel.p_up).sqrt();

    let mut out = Vec::with_capacity(max_step + 1);
    out.push(if absorb {
        ScaledFloat::ZERO
    } else {
        ScaledFloat::ONE
    });
    let mut row = vec![1.0f64];
    let mut row_exp: i64 = 0;
    let mut next: Vec<f64> = Vec::with_capacity(max_step + 2);
    for t in 1..=max_step {
        let reach = (max_step - t).min(t);
        next.clear();
        next.resize(reach + 2, 0.0);
        for (k, &mass) in row.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            if k == 0 {
                next[1] += mass * tilt;
            } else {
                next[k - 1] += mass * weight;
                if k < reach {
                    next[k + 1] += mass * weight;
                }
            }
        }
        next.truncate(reach + 1);
        out.push(ScaledFloat::new(next[0], row_exp));
        if absorb {
            next[0] = 0.0;
        }
        let peak = next.iter().cloned().fold(0.0, f64::max);
        if peak > 0.0 && peak < RESCALE_BELOW {
            let shift = ScaledFloat::from_f64(peak).exp2();
            let factor = ScaledFloat::new(1.0, -shift).to_f64();
            next.iter_mut().for_each(|v| *v *= factor);
            row_exp += shift;
        }
        std::mem::swap(&mut row, &mut next);
    }
    out
}

/// `p^(n)(o,o)` for `n = 0..=max_step`.
pub fn pn_return_dp(
    params: &WalkParams,
    max_step: usize,
    arithmetic: Arithmetic,
) -> Result<ProbTable, ExactError> {
    pn_return_dp_with_cap(params, max_step, arithmetic, RATIONAL_STEP_CAP)
}

pub fn pn_return_dp_with_cap(
    params: &WalkParams,
    max_step: usize,
    arithmetic: Arithmetic,
    cap: usize,
) -> Result<ProbTable, ExactError> {
    let values = match arithmetic {
        Arithmetic::Rational => {
            check_cap(max_step, cap)?;
            ProbValues::Rational(rational_dp(&IntegerKernel::new(params)?, max_step, false))
        }
        Arithmetic::ScaledFloat => ProbValues::Scaled(scaled_dp(params, max_step, false)),
    };
    Ok(ProbTable::new(TableKind::StepReturn, values))
}

/// `f^(n)(o,o)` for `n = 0..=max_step`, obtained by zeroing the root mass
/// after every step of the same DP.
pub fn first_return_dp(
    params: &WalkParams,
    max_step: usize,
    arithmetic: Arithmetic,
) -> Result<ProbTable, ExactError> {
    first_return_dp_with_cap(params, max_step, arithmetic, RATIONAL_STEP_CAP)
}

pub fn first_return_dp_with_cap(
    params: &WalkParams,
    max_step: usize,
    arithmetic: Arithmetic,
    cap: usize,
) -> Result<ProbTable, ExactError> {
    if max_step < 2 {
        return Err(ExactError::MaxStepTooSmall(max_step));
    }
    let values = match arithmetic {
        Arithmetic::Rational => {
            check_cap(max_step, cap)?;
            ProbValues::Rational(rational_dp(&IntegerKernel::new(params)?, max_step, true))
        }
        Arithmetic::ScaledFloat => ProbValues::Scaled(scaled_dp(params, max_step, true)),
    };
    Ok(ProbTable::new(TableKind::FirstReturn, values))
}

/// `c_k = C(2k, k) / (k + 1)`.
pub fn catalan_number(k: u64) -> BigUint {
    // c_{i+1} = c_i * 2(2i+1) / (i+2), and every division is exact
    let mut c = BigUint::one();
    for i in 0..k {
        c = c * BigUint::from(2 * (2 * i + 1)) / BigUint::from(i + 2);
    }
    c
}

/// `f^(2n)(o,o) = c_{n-1} p_up^(n-1) p_down^n`: an excursion of length `2n`
/// away from the root, counted by the Catalan numbers.
pub fn first_return_catalan(
    params: &WalkParams,
    n: u64,
    arithmetic: Arithmetic,
) -> Result<Prob, ExactError> {
    if n == 0 {
        return Err(ExactError::ZeroIndex);
    }
    match arithmetic {
        Arithmetic::Rational => {
            let k = radial_kernel::<BigRational>(params)?;
            let c = BigRational::from_integer(catalan_number(n - 1).into());
            let up = num_traits::pow(k.p_up, (n - 1) as usize);
            let down = num_traits::pow(k.p_down, n as usize);
            Ok(Prob::Exact(c * up * down))
        }
        Arithmetic::ScaledFloat => {
            let k = radial_kernel::<f64>(params)?;
            // fold one Catalan ratio with each p_up p_down pair to stay near 1
            let pair = k.p_up * k.p_down;
            let mut acc = ScaledFloat::from_f64(k.p_down);
            for i in 0..n - 1 {
                let ratio = (2 * (2 * i + 1)) as f64 / (i + 2) as f64;
                acc = acc * (ratio * pair);
            }
            Ok(Prob::Scaled(acc))
        }
    }
}

/// `C(2n, n) / 4^n`, the critical-walk return probability at step `2n`,
/// accumulated as a product of `(2k-1)/(2k)` factors.
pub fn central_binomial_ratio(n: u64) -> ScaledFloat {
    let mut acc = ScaledFloat::ONE;
    for k in 1..=n {
        acc = acc * ((2 * k - 1) as f64 / (2 * k) as f64);
    }
    acc
}

/// Renewal identity at the coefficient level:
/// `p[0] = 1`, `p[n] = Σ_{k=1..n} f[k] p[n-k]`.
pub fn convolve_first_return(first: &ProbTable) -> Result<ProbTable, ExactError> {
    if first.kind() != TableKind::FirstReturn {
        return Err(ExactError::WrongKind {
            expected: TableKind::FirstReturn,
            found: first.kind(),
        });
    }
    let values = match first.values() {
        ProbValues::Rational(f) => {
            let mut p: Vec<BigRational> = Vec::with_capacity(f.len());
            p.push(BigRational::one());
            for n in 1..f.len() {
                let mut acc = BigRational::zero();
                for k in (2..=n).step_by(2) {
                    if !f[k].is_zero() {
                        acc += &f[k] * &p[n - k];
                    }
                }
                p.push(acc);
            }
            ProbValues::Rational(p)
        }
        ProbValues::Scaled(f) => {
            let mut p: Vec<ScaledFloat> = Vec::with_capacity(f.len());
            p.push(ScaledFloat::ONE);
            for n in 1..f.len() {
                let acc = (1..=n).map(|k| f[k] * p[n - k]).sum();
                p.push(acc);
            }
            ProbValues::Scaled(p)
        }
    };
    Ok(ProbTable::new(TableKind::StepReturn, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_params;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn exact(d: u32, n: i64, den: i64) -> WalkParams {
        WalkParams::with_ratio(d, n, den).unwrap()
    }

    #[test]
    fn step_return_values() {
        let t = pn_return_dp(&exact(3, 1, 1), 6, Arithmetic::Rational).unwrap();
        let v = t.rational().unwrap();
        assert_eq!(v[0], q(1, 1));
        assert_eq!(v[1], q(0, 1));
        assert_eq!(v[2], q(1, 3));
        assert_eq!(v[4], q(5, 27));
        assert_eq!(v[6], q(29, 243));

        let t = pn_return_dp(&exact(3, 2, 1), 4, Arithmetic::Rational).unwrap();
        let v = t.rational().unwrap();
        assert_eq!(v[2], q(1, 2));
        assert_eq!(v[4], q(3, 8));
    }

    #[test]
    fn zero_steps() {
        let t = pn_return_dp(&exact(3, 1, 1), 0, Arithmetic::Rational).unwrap();
        assert_eq!(t.max_step(), 0);
        assert_eq!(t.get(0), Some(Prob::Exact(q(1, 1))));
    }

    #[test]
    fn first_return_values() {
        let t = first_return_dp(&exact(3, 1, 1), 6, Arithmetic::Rational).unwrap();
        let v = t.rational().unwrap();
        assert_eq!(v[0], q(0, 1));
        assert_eq!(v[2], q(1, 3));
        assert_eq!(v[3], q(0, 1));
        assert_eq!(v[4], q(2, 27));
        assert_eq!(v[6], q(8, 243));
        assert!(matches!(
            first_return_dp(&exact(3, 1, 1), 1, Arithmetic::Rational),
            Err(ExactError::MaxStepTooSmall(1))
        ));
    }

    #[test]
    fn catalan_formula_values() {
        let p = exact(3, 1, 1);
        let f = |n| first_return_catalan(&p, n, Arithmetic::Rational).unwrap();
        assert_eq!(f(1), Prob::Exact(q(1, 3)));
        assert_eq!(f(3), Prob::Exact(q(8, 243)));
        assert_eq!(
            first_return_catalan(&exact(3, 2, 1), 2, Arithmetic::Rational).unwrap(),
            Prob::Exact(q(1, 8))
        );
        assert_eq!(
            first_return_catalan(&p, 0, Arithmetic::Rational),
            Err(ExactError::ZeroIndex)
        );
    }

    #[test]
    fn catalan_numbers() {
        let expected = [1u32, 1, 2, 5, 14, 42, 132, 429, 1430, 4862, 16796];
        for (k, c) in expected.iter().enumerate() {
            assert_eq!(catalan_number(k as u64), BigUint::from(*c));
        }
        // Segner recurrence as an independent check further out
        let mut cs = vec![BigUint::one()];
        for k in 0..40 {
            let next: BigUint = (0..=k).map(|i| &cs[i] * &cs[k - i]).sum();
            cs.push(next);
        }
        for (k, c) in cs.iter().enumerate() {
            assert_eq!(&catalan_number(k as u64), c);
        }
    }

    #[test]
    fn convolution_reproduces_step_returns() {
        let f = first_return_dp(&exact(3, 1, 1), 6, Arithmetic::Rational).unwrap();
        let p = convolve_first_return(&f).unwrap();
        let v = p.rational().unwrap();
        assert_eq!(v[1], q(0, 1));
        assert_eq!(v[4], q(5, 27));

        let f = first_return_dp(&exact(3, 2, 1), 6, Arithmetic::Rational).unwrap();
        let p = convolve_first_return(&f).unwrap();
        assert_eq!(p.rational().unwrap()[6], q(5, 16));

        let step = pn_return_dp(&exact(3, 1, 1), 4, Arithmetic::Rational).unwrap();
        assert!(matches!(
            convolve_first_return(&step),
            Err(ExactError::WrongKind { .. })
        ));
    }

    #[test]
    fn rational_cap_is_enforced() {
        let p = exact(3, 1, 1);
        assert_eq!(
            pn_return_dp(&p, 2001, Arithmetic::Rational),
            Err(ExactError::CapacityExceeded {
                requested: 2001,
                cap: 2000
            })
        );
        assert!(first_return_dp_with_cap(&p, 12, Arithmetic::Rational, 10).is_err());
        assert!(pn_return_dp(&p, 5000, Arithmetic::ScaledFloat).is_ok());
    }

    #[test]
    fn float_lambda_needs_scaled_mode() {
        let p = make_params(3, 1.0).unwrap();
        assert!(matches!(
            pn_return_dp(&p, 4, Arithmetic::Rational),
            Err(ExactError::Model(ModelError::InexactLambda(_)))
        ));
        let t = pn_return_dp(&p, 4, Arithmetic::ScaledFloat).unwrap();
        assert!((t.get(4).unwrap().to_f64() - 5.0 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn scaled_matches_rational_to_sixty_steps() {
        for (d, n, den) in [(3, 1, 1), (2, 1, 2), (5, 7, 2), (4, 9, 1), (3, 1, 10)] {
            let p = exact(d, n, den);
            for absorb in [false, true] {
                let (r, s) = if absorb {
                    (
                        first_return_dp(&p, 120, Arithmetic::Rational).unwrap(),
                        first_return_dp(&p, 120, Arithmetic::ScaledFloat).unwrap(),
                    )
                } else {
                    (
                        pn_return_dp(&p, 120, Arithmetic::Rational).unwrap(),
                        pn_return_dp(&p, 120, Arithmetic::ScaledFloat).unwrap(),
                    )
                };
                for (a, b) in r.scaled().iter().zip(s.scaled()) {
                    assert!(
                        a.rel_diff(&b) <= 1e-12,
                        "d={d} lambda={n}/{den}: {a} vs {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn scaled_catalan_matches_rational() {
        let p = exact(4, 3, 2);
        for n in [1, 2, 10, 60, 300] {
            let r = first_return_catalan(&p, n, Arithmetic::Rational).unwrap();
            let s = first_return_catalan(&p, n, Arithmetic::ScaledFloat).unwrap();
            assert!(r.to_scaled().rel_diff(&s.to_scaled()) < 1e-12);
        }
    }

    #[test]
    fn scaled_dp_reaches_far_without_underflow() {
        // ρ ≈ 0.14 here, so p^(2n) ≈ 10^(-1.7 n): far below f64 range at n = 2000
        let p = exact(3, 1, 100);
        let t = pn_return_dp(&p, 4000, Arithmetic::ScaledFloat).unwrap();
        let last = t.get(4000).unwrap().to_scaled();
        assert!(!last.is_zero());
        assert_eq!(last.to_f64(), 0.0);
        t.check_invariants(1.0).unwrap();
    }

    #[test]
    fn central_binomial_small_values() {
        assert_eq!(central_binomial_ratio(0).to_f64(), 1.0);
        assert_eq!(central_binomial_ratio(1).to_f64(), 0.5);
        assert_eq!(central_binomial_ratio(2).to_f64(), 0.375);
        assert_eq!(central_binomial_ratio(3).to_f64(), 0.3125);
    }

    #[test]
    fn invariants_hold_and_detect_corruption() {
        let p = exact(3, 1, 1);
        let mut f = first_return_dp(&p, 40, Arithmetic::Rational).unwrap();
        f.check_invariants(0.5).unwrap();
        pn_return_dp(&p, 40, Arithmetic::Rational)
            .unwrap()
            .check_invariants(1.0)
            .unwrap();
        if let ProbValues::Rational(v) = f.values_mut() {
            v[5] = q(1, 7);
        }
        assert!(f.check_invariants(0.5).is_err());
    }
}
