// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt::Debug;

use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Number type for levels and energies: `f64` for measured data, or an
/// exact rational (e.g. `num_rational::Rational64`) when the inputs are
/// rational and exact results are wanted.
pub trait Scalar: Num + FromPrimitive + ToPrimitive + Clone + PartialOrd + Debug {}

impl<T> Scalar for T where T: Num + FromPrimitive + ToPrimitive + Clone + PartialOrd + Debug {}

pub(crate) fn from_usize<V: Scalar>(n: usize) -> V {
    V::from_usize(n).expect("count fits the scalar type")
}

pub(crate) fn half<V: Scalar>() -> V {
    V::one() / (V::one() + V::one())
}
