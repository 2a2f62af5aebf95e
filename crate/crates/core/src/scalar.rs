use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::{de::DeserializeOwned, Serialize};

/// Floating-point scalar every numeric type in this crate is generic over.
///
/// Blanket-implemented, so `f32` and `f64` qualify automatically; the
/// `*64` aliases at the crate root pick `f64` for ordinary use.
pub trait Scalar:
    Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Lossy view as f64, for reporting and serialization boundaries.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl<T> Scalar for T where
    T: Float
        + NumAssign
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Debug
        + Display
        + Serialize
        + DeserializeOwned
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` constant into the active scalar type.
pub fn real<F: Scalar>(x: f64) -> F {
    F::from_f64(x).expect("constant representable in scalar type")
}
