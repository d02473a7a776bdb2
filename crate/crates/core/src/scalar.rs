//! Field abstraction over `f64` and `Complex64`.

use num_complex::Complex64;

/// Scalar field 𝕂 ∈ {ℝ, ℂ}.
pub trait Scalar:
    nalgebra::ComplexField<RealField = f64>
    + faer::traits::ComplexField<Real = f64>
    + Copy
    + Send
    + Sync
    + std::fmt::Display
    + 'static
{
    const IS_COMPLEX: bool;

    /// Projects onto the field; the imaginary part is dropped for `f64`.
    fn from_c64(z: Complex64) -> Self;
    fn to_c64(self) -> Complex64;

    fn re(self) -> f64 {
        self.to_c64().re
    }
    fn cj(self) -> Self {
        nalgebra::ComplexField::conjugate(self)
    }
    fn abs_val(self) -> f64 {
        self.to_c64().norm()
    }
    fn of(x: f64) -> Self {
        Self::from_c64(Complex64::new(x, 0.0))
    }
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;
    fn from_c64(z: Complex64) -> Self {
        z.re
    }
    fn to_c64(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Scalar for Complex64 {
    const IS_COMPLEX: bool = true;
    fn from_c64(z: Complex64) -> Self {
        z
    }
    fn to_c64(self) -> Complex64 {
        self
    }
}
