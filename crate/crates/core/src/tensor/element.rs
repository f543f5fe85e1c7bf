use super::TensorError;

mod private {
    pub trait Sealed {}
    impl Sealed for u8 {}
    impl Sealed for u16 {}
    impl Sealed for i32 {}
    impl Sealed for f32 {}
    impl Sealed for f64 {}
}

/// Binary element-wise operation kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// The closed set of element types a tensor can hold: `u8`, `u16`, `i32`,
/// `f32` and `f64`.
///
/// Every implementor is plain old data: any bit pattern is a valid value and
/// there is no padding, which is what allows byte-level views of storage.
pub trait TensorElement:
    Copy + Default + PartialEq + PartialOrd + std::fmt::Debug + Send + Sync + 'static + private::Sealed
{
    /// Lossless widening to `f64` (exact for every supported type).
    fn to_f64(self) -> f64;

    /// Converts from `f64`. Integer targets round half away from zero and
    /// saturate to their range (NaN maps to zero); float targets round to
    /// nearest.
    fn from_f64(v: f64) -> Self;

    /// Applies `op`. Integer arithmetic wraps on overflow; integer division
    /// by zero is an error. Float arithmetic follows IEEE-754.
    fn binary(self, rhs: Self, op: BinaryOp) -> Result<Self, TensorError>;
}

/// Floating point element types.
pub trait FloatElement: TensorElement {
    fn powf(self, exponent: Self) -> Self;
}

macro_rules! impl_int_element {
    ($t:ty) => {
        impl TensorElement for $t {
            #[inline]
            fn to_f64(self) -> f64 {
                self as f64
            }

            #[inline]
            fn from_f64(v: f64) -> Self {
                // `f64::round` is half-away-from-zero; `as` saturates and maps NaN to 0
                v.round() as $t
            }

            #[inline]
            fn binary(self, rhs: Self, op: BinaryOp) -> Result<Self, TensorError> {
                Ok(match op {
                    BinaryOp::Add => self.wrapping_add(rhs),
                    BinaryOp::Sub => self.wrapping_sub(rhs),
                    BinaryOp::Mul => self.wrapping_mul(rhs),
                    BinaryOp::Div => {
                        if rhs == 0 {
                            return Err(TensorError::DivisionByZero);
                        }
                        self.wrapping_div(rhs)
                    }
                })
            }
        }
    };
}

macro_rules! impl_float_element {
    ($t:ty) => {
        impl TensorElement for $t {
            #[inline]
            fn to_f64(self) -> f64 {
                self as f64
            }

            #[inline]
            fn from_f64(v: f64) -> Self {
                v as $t
            }

            #[inline]
            fn binary(self, rhs: Self, op: BinaryOp) -> Result<Self, TensorError> {
                Ok(match op {
                    BinaryOp::Add => self + rhs,
                    BinaryOp::Sub => self - rhs,
                    BinaryOp::Mul => self * rhs,
                    BinaryOp::Div => self / rhs,
                })
            }
        }

        impl FloatElement for $t {
            #[inline]
            fn powf(self, exponent: Self) -> Self {
                <$t>::powf(self, exponent)
            }
        }
    };
}

impl_int_element!(u8);
impl_int_element!(u16);
impl_int_element!(i32);
impl_float_element!(f32);
impl_float_element!(f64);
