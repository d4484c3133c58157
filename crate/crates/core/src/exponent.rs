//! Integrability exponents `s`, `r` with exact rational arithmetic.

use core::fmt;
use core::str::FromStr;

use crate::Error;

/// A positive rational exponent or `+∞`.
///
/// Kept as a reduced fraction so that admissibility tests such as
/// `3/s + 2/r ≤ 2` are decided exactly rather than in floating point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exponent {
    Finite { num: u64, den: u64 },
    Infinite,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Exponent {
    pub fn ratio(num: u64, den: u64) -> Result<Self, Error> {
        if num == 0 || den == 0 {
            return Err(Error::InvalidArgument("exponent must be a positive ratio"));
        }
        let g = gcd(num, den);
        Ok(Exponent::Finite {
            num: num / g,
            den: den / g,
        })
    }

    pub fn integer(value: u64) -> Result<Self, Error> {
        Self::ratio(value, 1)
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    pub fn to_f64(&self) -> f64 {
        match *self {
            Exponent::Finite { num, den } => num as f64 / den as f64,
            Exponent::Infinite => f64::INFINITY,
        }
    }

    /// `(num, den)` of `1/self`, with `1/∞ = 0/1`.
    fn reciprocal_parts(&self) -> (u128, u128) {
        match *self {
            Exponent::Finite { num, den } => (den as u128, num as u128),
            Exponent::Infinite => (0, 1),
        }
    }

    /// Exact test of `a/self + b/other ≤ bound`.
    fn weighted_reciprocal_sum_le(&self, a: u128, other: &Exponent, b: u128, bound: u128) -> bool {
        let (p1, q1) = self.reciprocal_parts();
        let (p2, q2) = other.reciprocal_parts();
        // a·p1/q1 + b·p2/q2 ≤ bound  ⇔  a·p1·q2 + b·p2·q1 ≤ bound·q1·q2
        a * p1 * q2 + b * p2 * q1 <= bound * q1 * q2
    }

    /// `true` when `self > 3/2` (the spatial exponent range of the criterion).
    pub fn exceeds_three_halves(&self) -> bool {
        match *self {
            Exponent::Finite { num, den } => 2 * num as u128 > 3 * den as u128,
            Exponent::Infinite => true,
        }
    }

    /// `true` when `self ≥ 1`.
    pub fn at_least_one(&self) -> bool {
        match *self {
            Exponent::Finite { num, den } => num >= den,
            Exponent::Infinite => true,
        }
    }
}

/// Serrin-type admissibility `3/s + 2/r ≤ 2`, decided exactly.
pub fn serrin_admissible(s: Exponent, r: Exponent) -> bool {
    s.weighted_reciprocal_sum_le(3, &r, 2, 2)
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Exponent::Finite { num, den: 1 } => write!(f, "{num}"),
            Exponent::Finite { num, den } => write!(f, "{num}/{den}"),
            Exponent::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    /// Accepts `inf`, integers, fractions `p/q` and plain decimals `1.75`.
    fn from_str(text: &str) -> Result<Self, Error> {
        const BAD: Error = Error::InvalidArgument("unparseable exponent");
        let text = text.trim();
        if matches!(text, "inf" | "infinity" | "∞" | "+inf") {
            return Ok(Exponent::Infinite);
        }
        if let Some((p, q)) = text.split_once('/') {
            let p: u64 = p.trim().parse().map_err(|_| BAD)?;
            let q: u64 = q.trim().parse().map_err(|_| BAD)?;
            return Exponent::ratio(p, q);
        }
        let (int_part, frac_part) = text.split_once('.').unwrap_or((text, ""));
        if frac_part.len() > 12 || (int_part.is_empty() && frac_part.is_empty()) {
            return Err(BAD);
        }
        let int: u64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| BAD)?
        };
        let frac: u64 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|_| BAD)?
        };
        let den = 10u64.pow(frac_part.len() as u32);
        let num = int.checked_mul(den).and_then(|v| v.checked_add(frac)).ok_or(BAD)?;
        Exponent::ratio(num, den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str) -> Exponent {
        s.parse().unwrap()
    }

    #[test]
    fn parses_forms() {
        assert_eq!(e("2"), Exponent::Finite { num: 2, den: 1 });
        assert_eq!(e("1.5"), Exponent::Finite { num: 3, den: 2 });
        assert_eq!(e("6/4"), Exponent::Finite { num: 3, den: 2 });
        assert_eq!(e("inf"), Exponent::Infinite);
        assert!("abc".parse::<Exponent>().is_err());
        assert!("0".parse::<Exponent>().is_err());
    }

    #[test]
    fn boundary_pairs_are_admissible() {
        assert!(serrin_admissible(e("2"), e("4")));
        assert!(serrin_admissible(e("inf"), e("1")));
        assert!(serrin_admissible(e("3"), e("2")));
        assert!(serrin_admissible(e("1.8"), e("6")));
        assert!(!serrin_admissible(e("1.8"), e("5.9")));
        assert!(!serrin_admissible(e("2"), e("3")));
        assert!(serrin_admissible(e("2"), e("5")));
        assert!(serrin_admissible(e("1.6"), e("inf")));
    }

    #[test]
    fn range_checks() {
        assert!(!e("1.5").exceeds_three_halves());
        assert!(e("1.51").exceeds_three_halves());
        assert!(!e("1").exceeds_three_halves());
        assert!(e("1").at_least_one());
        assert!(!e("1/2").at_least_one());
    }
}
