use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Pieces the unit period is split into before double-exponential quadrature, so that
/// jumps at dyadic points fall on piece boundaries.
const PIECES: usize = 64;

/// ∫₀¹ f by piecewise double-exponential quadrature to absolute accuracy `tol`.
pub fn integrate_period(f: impl Fn(f64) -> f64, tol: f64) -> f64 {
    let h = 1.0 / PIECES as f64;
    (0..PIECES)
        .map(|k| quadrature::integrate(&f, k as f64 * h, (k + 1) as f64 * h, tol / PIECES as f64).integral)
        .sum()
}

fn integrate_scalar<T: Scalar>(f: impl Fn(f64) -> T, tol: f64) -> T {
    let re = integrate_period(|y| f(y).to_c64().re, tol);
    if !T::IS_COMPLEX {
        return T::of(re);
    }
    let im = integrate_period(|y| f(y).to_c64().im, tol);
    T::from_c64(num_complex::Complex64::new(re, im))
}

/// (α_h, α_m) = (⟨α⁻¹⟩⁻¹, ⟨α⟩) over one period (0,1): the H-limit diag(α_h, α_m) of the
/// laminate α(n x₁)·I.
pub fn laminate_limit<T: Scalar>(profile: impl Fn(f64) -> T) -> Result<(T, T)> {
    let inv = integrate_scalar(|y| T::one() / profile(y), 1e-12);
    if inv.abs_val() < 1e-14 {
        return Err(Error::VanishingHarmonicMean);
    }
    let mean = integrate_scalar(&profile, 1e-12);
    Ok((T::one() / inv, mean))
}
