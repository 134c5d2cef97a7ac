//! Non-negative reals stored as `mantissa · 2^exponent` so that return
//! probabilities like `ρ^(2n) n^(-3/2)` stay representable long after an
//! `f64` would have underflowed.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// `mantissa · 2^exp2` with `mantissa ∈ [0.5, 1)`, or zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledFloat {
    mantissa: f64,
    exp2: i64,
}

/// Splits a finite non-negative `x` into `m · 2^e` with `m ∈ [0.5, 1)`.
fn frexp(x: f64) -> (f64, i64) {
    if x == 0.0 {
        return (0.0, 0);
    }
    let bits = x.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i64;
    if raw_exp == 0 {
        // subnormal: rescale into the normal range first
        let (m, e) = frexp(x * 2f64.powi(64));
        return (m, e - 64);
    }
    let m = f64::from_bits((bits & !(0x7ffu64 << 52)) | (1022u64 << 52));
    (m, raw_exp - 1022)
}

/// `2^e` for `e` within the normal exponent range.
fn pow2(e: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&e));
    f64::from_bits(((e + 1023) as u64) << 52)
}

/// `m · 2^e` without intermediate overflow; underflows to zero gracefully.
fn ldexp(m: f64, e: i64) -> f64 {
    if m == 0.0 {
        return 0.0;
    }
    let mut value = m;
    let mut e = e;
    while e > 1000 {
        value *= pow2(1000);
        e -= 1000;
        if value.is_infinite() {
            return value;
        }
    }
    while e < -1000 {
        value *= pow2(-1000);
        e += 1000;
        if value == 0.0 {
            return 0.0;
        }
    }
    value * pow2(e)
}

impl ScaledFloat {
    pub const ZERO: ScaledFloat = ScaledFloat {
        mantissa: 0.0,
        exp2: 0,
    };
    pub const ONE: ScaledFloat = ScaledFloat {
        mantissa: 0.5,
        exp2: 1,
    };

    /// `mantissa · 2^exp2` for a non-negative finite mantissa.
    pub fn new(mantissa: f64, exp2: i64) -> Self {
        assert!(
            mantissa.is_finite() && mantissa >= 0.0,
            "scaled floats hold finite non-negative values, got {mantissa}"
        );
        let (m, e) = frexp(mantissa);
        if m == 0.0 {
            return ScaledFloat::ZERO;
        }
        ScaledFloat {
            mantissa: m,
            exp2: e + exp2,
        }
    }

    pub fn from_f64(x: f64) -> Self {
        ScaledFloat::new(x, 0)
    }

    /// `exp(ln_value)`, keeping the integer part of the exponent exact.
    pub fn from_ln(ln_value: f64) -> Self {
        if ln_value == f64::NEG_INFINITY {
            return ScaledFloat::ZERO;
        }
        let log2 = ln_value / std::f64::consts::LN_2;
        let whole = log2.floor();
        let frac = ln_value - whole * std::f64::consts::LN_2;
        ScaledFloat::new(frac.exp(), whole as i64)
    }

    /// Correctly scaled conversion of a non-negative rational.
    pub fn from_rational(r: &BigRational) -> Self {
        assert!(!r.is_negative(), "scaled floats hold non-negative values");
        if r.is_zero() {
            return ScaledFloat::ZERO;
        }
        let (num_m, num_e) = big_to_scaled(r.numer());
        let (den_m, den_e) = big_to_scaled(r.denom());
        ScaledFloat::new(num_m / den_m, num_e - den_e)
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0.0
    }

    pub fn mantissa(&self) -> f64 {
        self.mantissa
    }

    pub fn exp2(&self) -> i64 {
        self.exp2
    }

    /// Nearest `f64`; underflows to 0 and overflows to infinity.
    pub fn to_f64(&self) -> f64 {
        ldexp(self.mantissa, self.exp2)
    }

    pub fn ln(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.mantissa.ln() + self.exp2 as f64 * std::f64::consts::LN_2
    }

    pub fn powi(self, n: u64) -> Self {
        let mut acc = ScaledFloat::ONE;
        let mut base = self;
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            n >>= 1;
        }
        acc
    }

    /// Relative difference `|a - b| / max(|a|, |b|)`, zero when both vanish.
    pub fn rel_diff(&self, other: &ScaledFloat) -> f64 {
        if self.is_zero() && other.is_zero() {
            return 0.0;
        }
        let big = if self >= other { *self } else { *other };
        let lhs = ldexp(self.mantissa, self.exp2 - big.exp2);
        let rhs = ldexp(other.mantissa, other.exp2 - big.exp2);
        (lhs - rhs).abs() / big.mantissa
    }

    /// Decimal rendering with 15 significant digits, independent of the
    /// `f64` range.
    pub fn to_sci_string(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let x = self.to_f64();
        if x.is_normal() {
            return format!("{x:.14e}");
        }
        let log10 = self.mantissa.log10() + self.exp2 as f64 * std::f64::consts::LOG10_2;
        let mut exp10 = log10.floor();
        let mut mant10 = 10f64.powf(log10 - exp10);
        if mant10 >= 9.999_999_999_999_995 {
            mant10 = 1.0;
            exp10 += 1.0;
        }
        format!("{mant10:.14}e{}", exp10 as i64)
    }
}

fn big_to_scaled(n: &BigInt) -> (f64, i64) {
    let bits = n.bits() as i64;
    let shift = (bits - 64).max(0);
    let top = (n >> shift as usize).to_f64().expect("at most 64 bits");
    (top, shift)
}

impl Default for ScaledFloat {
    fn default() -> Self {
        ScaledFloat::ZERO
    }
}

impl Mul for ScaledFloat {
    type Output = ScaledFloat;

    fn mul(self, rhs: ScaledFloat) -> ScaledFloat {
        if self.is_zero() || rhs.is_zero() {
            return ScaledFloat::ZERO;
        }
        ScaledFloat::new(self.mantissa * rhs.mantissa, self.exp2 + rhs.exp2)
    }
}

impl Mul<f64> for ScaledFloat {
    type Output = ScaledFloat;

    fn mul(self, rhs: f64) -> ScaledFloat {
        self * ScaledFloat::from_f64(rhs)
    }
}

impl Div for ScaledFloat {
    type Output = ScaledFloat;

    fn div(self, rhs: ScaledFloat) -> ScaledFloat {
        assert!(!rhs.is_zero(), "division by a zero scaled float");
        if self.is_zero() {
            return ScaledFloat::ZERO;
        }
        ScaledFloat::new(self.mantissa / rhs.mantissa, self.exp2 - rhs.exp2)
    }
}

impl Add for ScaledFloat {
    type Output = ScaledFloat;

    fn add(self, rhs: ScaledFloat) -> ScaledFloat {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (big, small) = if self.exp2 >= rhs.exp2 {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let gap = big.exp2 - small.exp2;
        if gap > 60 {
            return big;
        }
        ScaledFloat::new(big.mantissa + ldexp(small.mantissa, -gap), big.exp2)
    }
}

impl std::iter::Sum for ScaledFloat {
    fn sum<I: Iterator<Item = ScaledFloat>>(iter: I) -> Self {
        iter.fold(ScaledFloat::ZERO, |acc, x| acc + x)
    }
}

impl PartialOrd for ScaledFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => Some(Ordering::Equal),
            (true, false) => Some(Ordering::Less),
            (false, true) => Some(Ordering::Greater),
            (false, false) => match self.exp2.cmp(&other.exp2) {
                Ordering::Equal => self.mantissa.partial_cmp(&other.mantissa),
                ord => Some(ord),
            },
        }
    }
}

impl fmt::Display for ScaledFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_sci_string())
    }
}
