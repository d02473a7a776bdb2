use nalgebra::DVector;
use rayon::prelude::*;

use super::op::LinearOp;
use super::probe::ProbeSet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

fn check<T: Scalar>(s: &LinearOp<T>, t: &LinearOp<T>, left: Option<&ProbeSet<T>>, right: &ProbeSet<T>) -> Result<()> {
    if !s.source().same(t.source()) || !s.target().same(t.target()) {
        return Err(Error::Shape("compared operators act between different spaces".into()));
    }
    if !right.space().same(s.source()) {
        return Err(Error::Shape(format!(
            "right probes live in dim {}, operator source has dim {}",
            right.space().dim(),
            s.source().dim()
        )));
    }
    if let Some(l) = left {
        if !l.space().same(s.target()) {
            return Err(Error::Shape(format!(
                "left probes live in dim {}, operator target has dim {}",
                l.space().dim(),
                s.target().dim()
            )));
        }
    }
    Ok(())
}

fn max_pairing<T: Scalar>(target: &LinearOp<T>, left: &ProbeSet<T>, images: &[DVector<T>]) -> f64 {
    let w_left: Vec<DVector<T>> = left.vectors().iter().map(|p| target.target().apply_weight(p)).collect();
    let mut worst = 0.0f64;
    for d in images {
        for wp in &w_left {
            worst = worst.max(wp.dotc(d).abs_val());
        }
    }
    worst
}

/// max_{i,j} |⟨φ_i, (s − t) ψ_j⟩|.
pub fn wot_gap<T: Scalar>(s: &LinearOp<T>, t: &LinearOp<T>, left: &ProbeSet<T>, right: &ProbeSet<T>) -> Result<f64> {
    check(s, t, Some(left), right)?;
    let diffs: Vec<DVector<T>> = right.vectors().par_iter().map(|p| s.apply(p) - t.apply(p)).collect();
    Ok(max_pairing(s, left, &diffs))
}

/// max_j ‖(s − t) ψ_j‖.
pub fn strong_gap<T: Scalar>(s: &LinearOp<T>, t: &LinearOp<T>, right: &ProbeSet<T>) -> Result<f64> {
    check(s, t, None, right)?;
    Ok(right
        .vectors()
        .par_iter()
        .map(|p| s.target().norm(&(s.apply(p) - t.apply(p))))
        .reduce(|| 0.0, f64::max))
}

/// max_{i,j} |⟨φ_i, t ψ_j⟩|, the natural scale for relative gaps.
pub fn wot_scale<T: Scalar>(t: &LinearOp<T>, left: &ProbeSet<T>, right: &ProbeSet<T>) -> Result<f64> {
    check(t, t, Some(left), right)?;
    let images: Vec<DVector<T>> = right.vectors().par_iter().map(|p| t.apply(p)).collect();
    Ok(max_pairing(t, left, &images))
}

/// wot_gap divided by wot_scale of the reference `t` (plain gap when that scale is roundoff
/// next to ‖s ψ‖, ‖t ψ‖).
pub fn relative_wot_gap<T: Scalar>(
    s: &LinearOp<T>,
    t: &LinearOp<T>,
    left: &ProbeSet<T>,
    right: &ProbeSet<T>,
) -> Result<f64> {
    check(s, t, Some(left), right)?;
    let w_left: Vec<DVector<T>> = left.vectors().iter().map(|p| t.target().apply_weight(p)).collect();
    let (gap, scale, tnorm) = right
        .vectors()
        .par_iter()
        .map(|p| {
            let tp = t.apply(p);
            let sp = s.apply(p);
            let norm = t.target().norm(&tp).max(t.target().norm(&sp));
            let d = sp - &tp;
            let (g, sc) = w_left.iter().fold((0.0f64, 0.0f64), |(g, sc), wp| {
                (g.max(wp.dotc(&d).abs_val()), sc.max(wp.dotc(&tp).abs_val()))
            });
            (g, sc, norm)
        })
        .reduce(|| (0.0, 0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1), a.2.max(b.2)));
    let lnorm = left.vectors().iter().map(|p| t.target().norm(p)).fold(0.0, f64::max);
    // A reference whose pairings are roundoff (e.g. a vanishing off-diagonal block) has no scale.
    Ok(if scale > 1e-10 * tnorm * lnorm { gap / scale } else { gap })
}

/// (wot_gap(s, t), wot_scale(t)) from one pass over the right probes.
pub fn wot_gap_scale<T: Scalar>(
    s: &LinearOp<T>,
    t: &LinearOp<T>,
    left: &ProbeSet<T>,
    right: &ProbeSet<T>,
) -> Result<(f64, f64)> {
    check(s, t, Some(left), right)?;
    let w_left: Vec<DVector<T>> = left.vectors().iter().map(|p| t.target().apply_weight(p)).collect();
    Ok(right
        .vectors()
        .par_iter()
        .map(|p| {
            let tp = t.apply(p);
            let d = s.apply(p) - &tp;
            w_left.iter().fold((0.0f64, 0.0f64), |(g, sc), wp| {
                (g.max(wp.dotc(&d).abs_val()), sc.max(wp.dotc(&tp).abs_val()))
            })
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1))))
}
