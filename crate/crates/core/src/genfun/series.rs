//! Truncated power series, enough algebra for `1 / (1 - U)` and coefficient
//! comparisons.

use std::ops::Mul;

use thiserror::Error;

use crate::model::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("series with zero constant term has no reciprocal")]
    NotInvertible,
}

/// Coefficients `c_0..=c_order`; nothing is known past `order`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries<T> {
    coefficients: Vec<T>,
}

impl<T: Scalar> PowerSeries<T> {
    /// # Panics
    /// If `coefficients` is empty: a series carries at least its constant term.
    pub fn new(coefficients: Vec<T>) -> Self {
        assert!(!coefficients.is_empty(), "a series has order >= 0");
        PowerSeries { coefficients }
    }

    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficient(&self, power: usize) -> Option<&T> {
        self.coefficients.get(power)
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    pub fn into_coefficients(self) -> Vec<T> {
        self.coefficients
    }

    pub fn truncate(&self, order: usize) -> Self {
        PowerSeries::new(self.coefficients[..=order.min(self.order())].to_vec())
    }

    /// Horner evaluation of the truncated polynomial.
    pub fn evaluate(&self, z: &T) -> T {
        self.coefficients
            .iter()
            .rev()
            .fold(T::zero(), |acc, c| acc * z.clone() + c.clone())
    }

    /// `1 - self`.
    pub fn one_minus(&self) -> Self {
        let mut coefficients: Vec<T> = self.coefficients.iter().map(|c| -c.clone()).collect();
        coefficients[0] = T::one() + coefficients[0].clone();
        PowerSeries::new(coefficients)
    }

    /// Multiplicative inverse through the same order.
    pub fn reciprocal(&self) -> Result<Self, SeriesError> {
        let c0 = self.coefficients[0].clone();
        if c0.is_zero() {
            return Err(SeriesError::NotInvertible);
        }
        let mut inv: Vec<T> = Vec::with_capacity(self.coefficients.len());
        inv.push(T::one() / c0.clone());
        for n in 1..self.coefficients.len() {
            let mut acc = T::zero();
            for k in 1..=n {
                if !self.coefficients[k].is_zero() {
                    acc = acc + self.coefficients[k].clone() * inv[n - k].clone();
                }
            }
            inv.push(-acc / c0.clone());
        }
        Ok(PowerSeries::new(inv))
    }
}

impl<T: Scalar> Mul for &PowerSeries<T> {
    type Output = PowerSeries<T>;

    /// Product truncated to the smaller of the two orders.
    fn mul(self, rhs: &PowerSeries<T>) -> PowerSeries<T> {
        let order = self.order().min(rhs.order());
        let coefficients = (0..=order)
            .map(|n| {
                (0..=n).fold(T::zero(), |acc, k| {
                    acc + self.coefficients[k].clone() * rhs.coefficients[n - k].clone()
                })
            })
            .collect();
        PowerSeries::new(coefficients)
    }
}

/// Coefficients of `(1 - w)^(1/2)` through `w^order`, from
/// `b_0 = 1`, `b_n = b_{n-1} (2n - 3) / (2n)`.
pub fn sqrt_one_minus<T: Scalar>(order: usize) -> PowerSeries<T> {
    let mut coefficients = Vec::with_capacity(order + 1);
    coefficients.push(T::one());
    for n in 1..=order as u64 {
        let prev: T = coefficients.last().cloned().expect("non-empty");
        // 2n - 3 is negative only at n = 1
        let factor = if n == 1 {
            -T::one() / T::from_u64(2)
        } else {
            T::from_u64(2 * n - 3) / T::from_u64(2 * n)
        };
        coefficients.push(prev * factor);
    }
    PowerSeries::new(coefficients)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn sqrt_series_squares_to_one_minus_w() {
        let s = sqrt_one_minus::<BigRational>(30);
        assert_eq!(s.coefficient(1), Some(&q(-1, 2)));
        assert_eq!(s.coefficient(2), Some(&q(-1, 8)));
        assert_eq!(s.coefficient(3), Some(&q(-1, 16)));
        let sq = &s * &s;
        assert_eq!(sq.coefficient(0), Some(&q(1, 1)));
        assert_eq!(sq.coefficient(1), Some(&q(-1, 1)));
        assert!(sq.coefficients()[2..].iter().all(|c| *c == q(0, 1)));
    }

    #[test]
    fn reciprocal_of_geometric() {
        // 1 / (1 - z) = 1 + z + z^2 + ...
        let s = PowerSeries::new(vec![q(1, 1), q(-1, 1), q(0, 1), q(0, 1)]);
        let inv = s.reciprocal().unwrap();
        assert_eq!(inv.coefficients(), &[q(1, 1), q(1, 1), q(1, 1), q(1, 1)]);
        let z = PowerSeries::new(vec![q(0, 1), q(1, 1)]);
        assert_eq!(z.reciprocal(), Err(SeriesError::NotInvertible));
    }

    #[test]
    fn horner_and_truncation() {
        let s = PowerSeries::new(vec![1.0, 2.0, 3.0]);
        assert_eq!(s.evaluate(&2.0), 17.0);
        assert_eq!(s.truncate(1).coefficients(), &[1.0, 2.0]);
        assert_eq!(s.one_minus().coefficients(), &[0.0, -2.0, -3.0]);
        assert_eq!(s.order(), 2);
    }
}
