//! Exact scalars for the cobordism categories: rationals whose denominator
//! is a power of two. Only invertibility of 2 is ever needed, so this ring
//! is exactly the right one and keeps every computation exact.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub};

use serde::Serialize;

/// A dyadic rational `mantissa * 2^exp`, kept normalized so that the
/// mantissa is odd (or the value is zero with `exp == 0`).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dyadic {
    mantissa: i64,
    exp: i32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { mantissa: 0, exp: 0 };
    pub const ONE: Dyadic = Dyadic { mantissa: 1, exp: 0 };

    pub fn new(mantissa: i64, exp: i32) -> Self {
        Self { mantissa, exp }.normalized()
    }

    pub fn from_int(n: i64) -> Self {
        Self::new(n, 0)
    }

    /// `2^k`, including negative `k`.
    pub fn pow2(k: i32) -> Self {
        Dyadic { mantissa: 1, exp: k }
    }

    pub fn half() -> Self {
        Self::pow2(-1)
    }

    fn normalized(mut self) -> Self {
        if self.mantissa == 0 {
            return Dyadic::ZERO;
        }
        while self.mantissa % 2 == 0 {
            self.mantissa /= 2;
            self.exp += 1;
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == 0
    }

    /// Units of the dyadic ring are exactly `±2^k`.
    pub fn is_unit(&self) -> bool {
        self.mantissa == 1 || self.mantissa == -1
    }

    pub fn inverse(&self) -> Option<Dyadic> {
        if self.is_unit() {
            Some(Dyadic { mantissa: self.mantissa, exp: -self.exp })
        } else {
            None
        }
    }

    /// Exact quotient `self / rhs` when it is again dyadic.
    pub fn checked_div(&self, rhs: &Dyadic) -> Option<Dyadic> {
        if rhs.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Dyadic::ZERO);
        }
        if self.mantissa % rhs.mantissa != 0 {
            return None;
        }
        Some(Dyadic::new(self.mantissa / rhs.mantissa, self.exp - rhs.exp))
    }

    /// Numerator and denominator as ordinary integers. Panics on overflow,
    /// which cannot happen for the coefficient sizes this crate produces.
    pub fn as_fraction(&self) -> (i64, u64) {
        if self.exp >= 0 {
            let n = self
                .mantissa
                .checked_mul(1i64.checked_shl(self.exp as u32).expect("exponent overflow"))
                .expect("mantissa overflow");
            (n, 1)
        } else {
            (self.mantissa, 1u64.checked_shl((-self.exp) as u32).expect("exponent overflow"))
        }
    }

    pub fn mantissa(&self) -> i64 {
        self.mantissa
    }

    pub fn exponent(&self) -> i32 {
        self.exp
    }
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let e = self.exp.min(rhs.exp);
        let a = self
            .mantissa
            .checked_shl((self.exp - e) as u32)
            .expect("dyadic add overflow");
        let b = rhs
            .mantissa
            .checked_shl((rhs.exp - e) as u32)
            .expect("dyadic add overflow");
        Dyadic::new(a.checked_add(b).expect("dyadic add overflow"), e)
    }
}

impl AddAssign for Dyadic {
    fn add_assign(&mut self, rhs: Dyadic) {
        *self = *self + rhs;
    }
}

impl Sub for Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: Dyadic) -> Dyadic {
        self + (-rhs)
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic { mantissa: -self.mantissa, exp: self.exp }
    }
}

impl Mul for Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: Dyadic) -> Dyadic {
        if self.is_zero() || rhs.is_zero() {
            return Dyadic::ZERO;
        }
        let m = self.mantissa.checked_mul(rhs.mantissa).expect("dyadic mul overflow");
        Dyadic::new(m, self.exp + rhs.exp)
    }
}

impl MulAssign for Dyadic {
    fn mul_assign(&mut self, rhs: Dyadic) {
        *self = *self * rhs;
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, d) = self.as_fraction();
        if d == 1 {
            write!(f, "{n}")
        } else {
            write!(f, "{n}/{d}")
        }
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Dyadic {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let h = Dyadic::half();
        assert_eq!(h + h, Dyadic::ONE);
        assert_eq!(h * Dyadic::from_int(2), Dyadic::ONE);
        assert_eq!(Dyadic::from_int(3) * h, Dyadic::new(3, -1));
        assert_eq!(Dyadic::from_int(5) - Dyadic::from_int(5), Dyadic::ZERO);
        assert_eq!((-Dyadic::ONE) * (-Dyadic::ONE), Dyadic::ONE);
    }

    #[test]
    fn units_and_division() {
        assert!(Dyadic::pow2(-3).is_unit());
        assert!(!Dyadic::from_int(3).is_unit());
        assert_eq!(Dyadic::pow2(2).inverse(), Some(Dyadic::pow2(-2)));
        assert_eq!(Dyadic::from_int(6).checked_div(&Dyadic::from_int(3)), Some(Dyadic::from_int(2)));
        assert_eq!(Dyadic::from_int(3).checked_div(&Dyadic::from_int(6)), Some(Dyadic::half()));
        assert_eq!(Dyadic::from_int(3).checked_div(&Dyadic::from_int(9)), None);
        assert_eq!(
            Dyadic::new(3, -2).checked_div(&Dyadic::new(3, 1)),
            Some(Dyadic::pow2(-3))
        );
    }

    #[test]
    fn display_fractions() {
        assert_eq!(Dyadic::new(-3, -2).to_string(), "-3/4");
        assert_eq!(Dyadic::from_int(7).to_string(), "7");
        assert_eq!(Dyadic::ZERO.to_string(), "0");
    }
}
