//! Tropical semiring over negative natural-log costs.

use std::fmt;

/// A cost in the tropical semiring: `plus` is `min`, `times` is `+`.
///
/// `ONE` (0.0) is the multiplicative identity, `ZERO` (+inf) the additive one.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default)]
pub struct Weight(f64);

impl Weight {
    pub const ONE: Weight = Weight(0.0);
    pub const ZERO: Weight = Weight(f64::INFINITY);

    pub fn new(value: f64) -> Self {
        Weight(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::INFINITY
    }

    pub fn plus(self, other: Weight) -> Weight {
        if other.0 < self.0 {
            other
        } else {
            self
        }
    }

    pub fn times(self, other: Weight) -> Weight {
        if self.is_zero() || other.is_zero() {
            Weight::ZERO
        } else {
            Weight(self.0 + other.0)
        }
    }

    /// Left division `other⁻¹ ⊗ self`; only defined for non-zero `other`.
    pub fn divide(self, other: Weight) -> Weight {
        if self.is_zero() {
            Weight::ZERO
        } else {
            Weight(self.0 - other.0)
        }
    }

    /// Bit pattern with `-0.0` folded onto `0.0`; used where weights act as hash keys.
    pub(crate) fn key(self) -> u64 {
        if self.0 == 0.0 {
            0
        } else {
            self.0.to_bits()
        }
    }

    pub fn approx_eq(self, other: Weight, tol: f64) -> bool {
        if self.is_zero() || other.is_zero() {
            return self.is_zero() && other.is_zero();
        }
        (self.0 - other.0).abs() <= tol
    }
}

impl From<f64> for Weight {
    fn from(v: f64) -> Self {
        Weight(v)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            write!(f, "Infinity")
        } else {
            write!(f, "{:.6}", self.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w() -> impl Strategy<Value = Weight> {
        prop_oneof![
            (-50.0f64..50.0).prop_map(Weight::new),
            Just(Weight::ZERO),
            Just(Weight::ONE),
        ]
    }

    proptest! {
        #[test]
        fn semiring_axioms(a in w(), b in w(), c in w()) {
            prop_assert_eq!(a.plus(b), b.plus(a));
            prop_assert_eq!(a.plus(a), a);
            prop_assert_eq!(a.plus(Weight::ZERO), a);
            prop_assert_eq!(a.plus(b).plus(c), a.plus(b.plus(c)));
            prop_assert!(a.times(Weight::ONE).approx_eq(a, 0.0));
            prop_assert!(a.times(b).times(c).approx_eq(a.times(b.times(c)), 1e-9));
            prop_assert!(a.times(Weight::ZERO).is_zero());
            // distributivity of + over min
            prop_assert!(a.times(b.plus(c)).approx_eq(a.times(b).plus(a.times(c)), 1e-9));
        }
    }

    #[test]
    fn display_uses_six_digits() {
        assert_eq!(Weight::new(1.0 / 3.0).to_string(), "0.333333");
        assert_eq!(Weight::ZERO.to_string(), "Infinity");
    }
}
