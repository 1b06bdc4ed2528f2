//! Arithmetic abstraction over exact rationals and floating point.
//!
//! Small discrete instances and the counterexample law are handled in exact
//! `BigRational` arithmetic; particle-derived instances use `f64` with a
//! zero-test tolerance. All solvers in this crate are generic over [`Scalar`].

use num::rational::BigRational;
use num::{BigInt, FromPrimitive, Signed, ToPrimitive, Zero};

/// Field scalar with a notion of "numerically zero".
pub trait Scalar:
    num_traits::Num + Signed + Clone + PartialOrd + std::fmt::Debug + Send + Sync + 'static
{
    /// Comparison tolerance: zero for exact arithmetic.
    fn tol() -> Self;

    /// Exact where possible (`f64` -> `BigRational` is lossless).
    fn from_f64(x: f64) -> Self;

    fn to_f64(&self) -> f64;

    fn is_zero_tol(&self) -> bool {
        self.abs() <= Self::tol()
    }
}

impl Scalar for f64 {
    fn tol() -> Self {
        1e-12
    }

    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn tol() -> Self {
        BigRational::zero()
    }

    fn from_f64(x: f64) -> Self {
        <BigRational as FromPrimitive>::from_f64(x).expect("finite f64")
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Ratio of two machine integers as an exact rational.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses a decimal string like `"0.375"` or a ratio like `"3/8"` exactly.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (int_part, frac_part) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    let negative = int_part.starts_with('-');
    let int_digits = int_part.trim_start_matches(['-', '+']);
    if int_digits.is_empty() && frac_part.is_empty() {
        return None;
    }
    let mut digits = String::with_capacity(int_digits.len() + frac_part.len());
    digits.push_str(if int_digits.is_empty() { "0" } else { int_digits });
    digits.push_str(frac_part);
    let num: BigInt = digits.parse().ok()?;
    let den = BigInt::from(10u32).pow(frac_part.len() as u32);
    let r = BigRational::new(num, den);
    Some(if negative { -r } else { r })
}

/// Renders a rational as a short decimal when the denominator is 2^a 5^b,
/// otherwise as `num/den`.
pub fn format_rational(r: &BigRational) -> String {
    let mut den = r.denom().clone();
    let mut pow10 = 0u32;
    let two = BigInt::from(2u32);
    let five = BigInt::from(5u32);
    let mut twos = 0u32;
    let mut fives = 0u32;
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if den == BigInt::from(1u32) {
        pow10 = twos.max(fives);
    }
    if pow10 > 0 || r.denom() == &BigInt::from(1u32) {
        let scaled = r.numer() * BigInt::from(10u32).pow(pow10) / r.denom();
        let s = scaled.abs().to_string();
        let sign = if r.is_negative() { "-" } else { "" };
        if pow10 == 0 {
            return format!("{sign}{s}");
        }
        let s = format!("{:0>width$}", s, width = pow10 as usize + 1);
        let (int, frac) = s.split_at(s.len() - pow10 as usize);
        return format!("{sign}{int}.{frac}");
    }
    format!("{}/{}", r.numer(), r.denom())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_and_ratios() {
        assert_eq!(parse_rational("0.375").unwrap(), ratio(3, 8));
        assert_eq!(parse_rational("3/8").unwrap(), ratio(3, 8));
        assert_eq!(parse_rational("-1.5").unwrap(), ratio(-3, 2));
        assert_eq!(parse_rational("2").unwrap(), ratio(2, 1));
        assert!(parse_rational("1/0").is_none());
    }

    #[test]
    fn formats_dyadic_denominators_as_decimals() {
        assert_eq!(format_rational(&ratio(3, 8)), "0.375");
        assert_eq!(format_rational(&ratio(1, 3)), "1/3");
        assert_eq!(format_rational(&ratio(-3, 2)), "-1.5");
        assert_eq!(format_rational(&ratio(5, 1)), "5");
    }

    #[test]
    fn f64_conversion_is_exact_for_rationals() {
        let r = <BigRational as Scalar>::from_f64(0.1);
        assert_eq!(Scalar::to_f64(&r), 0.1);
    }
}
