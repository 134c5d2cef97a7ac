//! Walk parameters, transition kernels and tree geometry for the λ-biased
//! random walk on the d-regular tree.
//!
//! An edge at distance `n` from the root carries conductance `λ^(-n)`, so a
//! vertex at depth `k ≥ 1` moves toward the root with probability
//! `λ/(d-1+λ)` and to each of its `d-1` children with probability
//! `1/(d-1+λ)`. The root moves to each of its `d` neighbours with
//! probability `1/d`. Everything that concerns returns to the root factors
//! through the distance chain `|X_n|` on the non-negative integers, which is
//! why the tree itself is only ever exposed one row at a time.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("degree must be at least 2, got {0}")]
    DegreeTooSmall(u64),
    #[error("lambda must be positive, got {0}")]
    NonPositiveLambda(String),
    #[error("lambda must be finite, got {0}")]
    NonFinite(String),
    #[error("cannot parse lambda from {0:?}")]
    InvalidLambda(String),
    #[error("exact arithmetic needs a rational lambda, got the float {0}")]
    InexactLambda(f64),
}

/// The bias parameter, kept exact whenever the caller supplied it exactly.
#[derive(Debug, Clone, PartialEq)]
pub enum Lambda {
    Exact(BigRational),
    Float(f64),
}

impl Lambda {
    pub fn ratio(numer: i64, denom: i64) -> Result<Self, ModelError> {
        if denom == 0 {
            return Err(ModelError::InvalidLambda(format!("{numer}/{denom}")));
        }
        Ok(Lambda::Exact(BigRational::new(numer.into(), denom.into())))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Lambda::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Lambda::Float(x) => *x,
        }
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Lambda::Exact(r) => Some(r),
            Lambda::Float(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Lambda::Exact(_))
    }

    fn validate(&self) -> Result<(), ModelError> {
        match self {
            Lambda::Exact(r) if !r.is_positive() => {
                Err(ModelError::NonPositiveLambda(r.to_string()))
            }
            Lambda::Float(x) if !x.is_finite() => Err(ModelError::NonFinite(x.to_string())),
            Lambda::Float(x) if *x <= 0.0 => Err(ModelError::NonPositiveLambda(x.to_string())),
            _ => Ok(()),
        }
    }
}

impl From<f64> for Lambda {
    fn from(x: f64) -> Self {
        Lambda::Float(x)
    }
}

impl From<BigRational> for Lambda {
    fn from(r: BigRational) -> Self {
        Lambda::Exact(r)
    }
}

impl fmt::Display for Lambda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lambda::Exact(r) => write!(f, "{r}"),
            Lambda::Float(x) => write!(f, "{x}"),
        }
    }
}

/// Accepts `p/q`, plain decimals such as `1.25` (read exactly), and falls
/// back to a binary float for anything else `f64` understands (`1e-3`).
impl FromStr for Lambda {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || ModelError::InvalidLambda(s.to_string());
        if let Some((num, den)) = s.split_once('/') {
            let num = BigInt::from_str(num.trim()).map_err(|_| bad())?;
            let den = BigInt::from_str(den.trim()).map_err(|_| bad())?;
            if den.is_zero() {
                return Err(bad());
            }
            return Ok(Lambda::Exact(BigRational::new(num, den)));
        }
        if let Some(r) = parse_decimal(s) {
            return Ok(Lambda::Exact(r));
        }
        s.parse::<f64>().map(Lambda::Float).map_err(|_| bad())
    }
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).ok()?;
    let denom = num_traits::pow(BigInt::from(10u8), frac_part.len());
    Some(BigRational::new(numer * sign, denom))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Transient,
    Critical,
    Recurrent,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Transient => "transient",
            Regime::Critical => "critical",
            Regime::Recurrent => "recurrent",
        }
    }

    /// Transient and critical walks share the closed form for the spectral radius.
    pub fn below_or_at_critical(self) -> bool {
        !matches!(self, Regime::Recurrent)
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Degree and bias of the walk. Immutable once validated.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkParams {
    d: u32,
    lambda: Lambda,
}

/// Validates a float-valued bias. Use [`WalkParams::new`] for rational input.
pub fn make_params(d: u32, lambda: f64) -> Result<WalkParams, ModelError> {
    WalkParams::new(d, Lambda::Float(lambda))
}

impl WalkParams {
    pub fn new(d: u32, lambda: impl Into<Lambda>) -> Result<Self, ModelError> {
        let lambda = lambda.into();
        if d < 2 {
            return Err(ModelError::DegreeTooSmall(d.into()));
        }
        lambda.validate()?;
        Ok(WalkParams { d, lambda })
    }

    pub fn with_ratio(d: u32, numer: i64, denom: i64) -> Result<Self, ModelError> {
        WalkParams::new(d, Lambda::ratio(numer, denom)?)
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn lambda(&self) -> &Lambda {
        &self.lambda
    }

    pub fn lambda_f64(&self) -> f64 {
        self.lambda.to_f64()
    }

    /// Exact comparison of λ with `d - 1` on the stored representation.
    pub fn regime(&self) -> Regime {
        let ord = match &self.lambda {
            Lambda::Exact(r) => r.cmp(&BigRational::from_integer(BigInt::from(self.d - 1))),
            Lambda::Float(x) => x
                .partial_cmp(&f64::from(self.d - 1))
                .expect("validated lambda is finite"),
        };
        match ord {
            Ordering::Less => Regime::Transient,
            Ordering::Equal => Regime::Critical,
            Ordering::Greater => Regime::Recurrent,
        }
    }
}

/// Number types the kernels and series can be built in: `f64` for reach,
/// `BigRational` for exactness.
pub trait Scalar: Clone + fmt::Debug + PartialOrd + Num + std::ops::Neg<Output = Self> {
    fn from_lambda(lambda: &Lambda) -> Result<Self, ModelError>;
    fn from_u64(n: u64) -> Self;
}

impl Scalar for f64 {
    fn from_lambda(lambda: &Lambda) -> Result<Self, ModelError> {
        Ok(lambda.to_f64())
    }

    fn from_u64(n: u64) -> Self {
        n as f64
    }
}

impl Scalar for BigRational {
    fn from_lambda(lambda: &Lambda) -> Result<Self, ModelError> {
        match lambda {
            Lambda::Exact(r) => Ok(r.clone()),
            Lambda::Float(x) => Err(ModelError::InexactLambda(*x)),
        }
    }

    fn from_u64(n: u64) -> Self {
        <BigRational as FromPrimitive>::from_u64(n).expect("u64 fits in a rational")
    }
}

/// Transition probabilities of the distance-to-root chain.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialKernel<T> {
    /// From level 0 the chain moves to level 1 surely.
    pub p_origin_up: T,
    pub p_down: T,
    pub p_up: T,
}

pub fn radial_kernel<T: Scalar>(params: &WalkParams) -> Result<RadialKernel<T>, ModelError> {
    let lambda = T::from_lambda(params.lambda())?;
    let branches = T::from_u64(u64::from(params.d() - 1));
    let total = branches.clone() + lambda.clone();
    Ok(RadialKernel {
        p_origin_up: T::one(),
        p_down: lambda / total.clone(),
        p_up: branches / total,
    })
}

/// One row of the tree kernel: what a vertex at `vertex_depth` does next.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeKernelRow<T> {
    pub vertex_depth: u64,
    pub prob_toward_root: T,
    pub prob_per_child: T,
    pub child_count: u32,
}

impl<T: Scalar> TreeKernelRow<T> {
    pub fn row_sum(&self) -> T {
        self.prob_toward_root.clone()
            + T::from_u64(u64::from(self.child_count)) * self.prob_per_child.clone()
    }
}

pub fn tree_kernel_row<T: Scalar>(
    params: &WalkParams,
    depth: u64,
) -> Result<TreeKernelRow<T>, ModelError> {
    let d = params.d();
    if depth == 0 {
        return Ok(TreeKernelRow {
            vertex_depth: 0,
            prob_toward_root: T::zero(),
            prob_per_child: T::one() / T::from_u64(u64::from(d)),
            child_count: d,
        });
    }
    let lambda = T::from_lambda(params.lambda())?;
    let total = T::from_u64(u64::from(d - 1)) + lambda.clone();
    Ok(TreeKernelRow {
        vertex_depth: depth,
        prob_toward_root: lambda / total.clone(),
        prob_per_child: T::one() / total,
        child_count: d - 1,
    })
}

/// `M_n`, the number of vertices at distance exactly `n` from the root.
pub fn sphere_size(params: &WalkParams, n: u32) -> BigUint {
    if n == 0 {
        return BigUint::one();
    }
    let d = BigUint::from(params.d());
    let branches = BigUint::from(params.d() - 1);
    d * num_traits::pow(branches, (n - 1) as usize)
}

/// `lim M_n^(1/n) = d - 1`.
pub fn growth_rate(params: &WalkParams) -> f64 {
    f64::from(params.d() - 1)
}

/// The transience/recurrence threshold `λ_c = d - 1`.
pub fn critical_lambda(params: &WalkParams) -> f64 {
    f64::from(params.d() - 1)
}
