use std::f64::consts::PI;

use nalgebra::DVector;

use super::grid::{DiscreteGradient, GridDomain};
use crate::error::Result;
use crate::hilbert::ProbeSet;
use crate::scalar::Scalar;

/// Default number of sine modes per axis (3 in 3D keeps the set at 27 fields).
pub fn default_modes(d: usize) -> usize {
    if d >= 3 {
        3
    } else {
        5
    }
}

/// Products Π_a sin(k_a π (x_a − lo_a)/L_a), 1 ≤ k_a ≤ modes, as closures over x.
pub fn sine_modes(domain: &GridDomain, modes: usize) -> Vec<Box<dyn Fn(&[f64]) -> f64 + Send + Sync>> {
    let d = domain.dim();
    let count = modes.pow(d as u32);
    let mut out: Vec<Box<dyn Fn(&[f64]) -> f64 + Send + Sync>> = Vec::with_capacity(count);
    for idx in 0..count {
        let mut ks = Vec::with_capacity(d);
        let mut r = idx;
        for _ in 0..d {
            ks.push((r % modes + 1) as f64);
            r /= modes;
        }
        let lo = domain.lo().to_vec();
        let len: Vec<f64> = (0..d).map(|a| domain.extent(a)).collect();
        out.push(Box::new(move |x: &[f64]| (0..ks.len()).map(|a| (ks[a] * PI * (x[a] - lo[a]) / len[a]).sin()).product()));
    }
    out
}

/// Sine probes on the scalar space (sampled at the nodes).
pub fn scalar_probes<T: Scalar>(grad: &DiscreteGradient<T>, modes: usize) -> Result<ProbeSet<T>> {
    let v: Vec<DVector<T>> = sine_modes(grad.domain(), modes).iter().map(|f| grad.sample_scalar(|x| T::of(f(x)))).collect();
    ProbeSet::new(grad.scalar_space(), v)
}

/// e_i ⊗ sine-mode probes on the vector space (sampled at the quadrature points).
pub fn vector_probes<T: Scalar>(grad: &DiscreteGradient<T>, modes: usize) -> Result<ProbeSet<T>> {
    let d = grad.domain().dim();
    let mut v = Vec::new();
    for f in sine_modes(grad.domain(), modes) {
        for i in 0..d {
            v.push(grad.sample_vector(|x| {
                let mut e = vec![T::zero(); d];
                e[i] = T::of(f(x));
                e
            }));
        }
    }
    ProbeSet::new(grad.vector_space(), v)
}

/// Smooth bump exp(1 − 1/(1 − s²)), s = |x − c|/ρ, with peak 1 and support the ball B(c, ρ).
pub fn bump(center: &[f64], radius: f64) -> impl Fn(&[f64]) -> f64 + Clone {
    let c = center.to_vec();
    move |x: &[f64]| {
        let s2: f64 = x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (radius * radius);
        if s2 >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - s2)).exp()
        }
    }
}
