use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// ⟨1, f⟩ on (0,1) for per-cell values on a uniform grid.
pub fn cell_integral<T: Scalar>(f: &DVector<T>) -> T {
    let h = 1.0 / f.len() as f64;
    f.iter().copied().fold(T::zero(), |s, x| s + x) * T::of(h)
}

/// ι*φ = φ − ⟨1, φ⟩/(b−a) on (a, b): the orthogonal projection onto g₀ = {1}^⊥.
pub fn project_g0_1d<T: Scalar>(phi: &DVector<T>, a: f64, b: f64) -> DVector<T> {
    let h = (b - a) / phi.len() as f64;
    let mean = phi.iter().copied().fold(T::zero(), |s, x| s + x) * T::of(h / (b - a));
    phi.map(|x| x - mean)
}

/// (ι* a ι)⁻¹φ on (0,1) from the closed formula
/// a⁻¹φ − a⁻¹ ⟨1, a⁻¹φ⟩ / ⟨a⁻¹⟩, with per-cell values of a and φ.
pub fn projected_inverse_1d<T: Scalar>(a: &[T], phi: &DVector<T>) -> Result<DVector<T>> {
    if a.len() != phi.len() || a.is_empty() {
        return Err(Error::Shape(format!("{} coefficient cells for {} values", a.len(), phi.len())));
    }
    let scale = phi.iter().map(|x| x.abs_val()).sum::<f64>() / phi.len() as f64;
    let m = cell_integral(phi);
    if m.abs_val() > 1e-10 * scale.max(1.0) {
        return Err(Error::NonMeanFree(m.abs_val()));
    }
    let ainv = DVector::from_iterator(a.len(), a.iter().map(|&x| T::one() / x));
    let hm = cell_integral(&ainv);
    let amax = ainv.camax();
    if hm.abs_val() < 1e-12 * amax {
        return Err(Error::VanishingHarmonicMean);
    }
    let ainv_phi = ainv.component_mul(phi);
    let c = cell_integral(&ainv_phi) / hm;
    Ok(&ainv_phi - ainv * c)
}

/// Harmonic mean ⟨a⁻¹⟩⁻¹ of per-cell values.
pub fn harmonic_mean<T: Scalar>(a: &[T]) -> T {
    let inv = DVector::from_iterator(a.len(), a.iter().map(|&x| T::one() / x));
    T::one() / cell_integral(&inv)
}

/// Arithmetic mean ⟨a⟩ of per-cell values.
pub fn arithmetic_mean<T: Scalar>(a: &[T]) -> T {
    cell_integral(&DVector::from_column_slice(a))
}
