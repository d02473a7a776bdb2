use std::sync::Arc;

use nalgebra::DMatrix;

use crate::elliptic::{CoefficientField, GridDomain};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type CellFn<T> = Arc<dyn Fn(&[f64]) -> DMatrix<T> + Send + Sync>;
pub type Profile<T> = Arc<dyn Fn(f64) -> T + Send + Sync>;

/// How a_n is produced from n.
#[derive(Clone)]
pub enum SequenceKind<T: Scalar> {
    /// a_n(x) = a(n x) for a 1-periodic cell field a on Y = [0,1)^d.
    PeriodicRescale(CellFn<T>),
    /// a_n(x) = α(n x₁)·I for a 1-periodic profile α.
    LaminateX1(Profile<T>),
    /// Fields given explicitly for each n (they fix their own grids).
    ExplicitList(Vec<(usize, CoefficientField<T>)>),
}

/// Oscillating family (a_n) with bounds (α, β) uniform in n.
#[derive(Clone)]
pub struct CoefficientSequence<T: Scalar> {
    kind: SequenceKind<T>,
    alpha: f64,
    beta: f64,
}

impl<T: Scalar> std::fmt::Debug for CoefficientSequence<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let k = match &self.kind {
            SequenceKind::PeriodicRescale(_) => "periodic_rescale",
            SequenceKind::LaminateX1(_) => "laminate_x1",
            SequenceKind::ExplicitList(_) => "explicit_list",
        };
        write!(f, "CoefficientSequence({k}, M({}, {}))", self.alpha, self.beta)
    }
}

fn frac(x: f64) -> f64 {
    x - x.floor()
}

/// Resolution rule: at least `cells_per_period` cells per oscillation period on each axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MeshRule {
    pub cells_per_period: usize,
}

impl MeshRule {
    pub fn default_for(d: usize) -> Self {
        MeshRule { cells_per_period: if d == 1 { 32 } else { 16 } }
    }

    /// Grid on the box [lo, hi] resolving oscillation frequency n.
    pub fn grid(&self, lo: &[f64], hi: &[f64], n: usize) -> Result<GridDomain> {
        let cells = lo
            .iter()
            .zip(hi)
            .map(|(a, b)| ((b - a) * (self.cells_per_period * n) as f64).round().max(1.0) as usize)
            .collect();
        GridDomain::new(lo.to_vec(), hi.to_vec(), cells)
    }
}

/// Default unknown budget; the `HOMLAB_BUDGET` variable overrides it.
pub const DEFAULT_BUDGET: usize = 4_000_000;

pub fn budget() -> usize {
    std::env::var("HOMLAB_BUDGET")
        .ok()
        .and_then(|s| s.trim().parse::<f64>().ok())
        .map(|x| x as usize)
        .unwrap_or(DEFAULT_BUDGET)
}

/// Refuses grids whose vector-field unknown count exceeds `budget`.
pub fn check_budget(domain: &GridDomain, budget: usize) -> Result<()> {
    let d = domain.dim();
    let pts = if d == 1 { 1 } else { 1 << d };
    let unknowns = domain.n_cells() * pts * d;
    if unknowns > budget {
        return Err(Error::MeshRuleViolation(format!("{unknowns} unknowns exceed the budget of {budget}")));
    }
    Ok(())
}

impl<T: Scalar> CoefficientSequence<T> {
    pub fn new(kind: SequenceKind<T>, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= beta) {
            return Err(Error::Invalid(format!("need 0 < alpha <= beta, got ({alpha}, {beta})")));
        }
        Ok(CoefficientSequence { kind, alpha, beta })
    }

    pub fn laminate(profile: impl Fn(f64) -> T + Send + Sync + 'static, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(SequenceKind::LaminateX1(Arc::new(profile)), alpha, beta)
    }

    pub fn periodic(cell: impl Fn(&[f64]) -> DMatrix<T> + Send + Sync + 'static, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(SequenceKind::PeriodicRescale(Arc::new(cell)), alpha, beta)
    }

    /// a_n ≡ m for every n.
    pub fn constant(m: DMatrix<T>, alpha: f64, beta: f64) -> Result<Self> {
        Self::periodic(move |_| m.clone(), alpha, beta)
    }

    pub fn kind(&self) -> &SequenceKind<T> {
        &self.kind
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.alpha, self.beta)
    }

    /// a_n sampled at the cell midpoints of `domain`, checked against M(α, β).
    pub fn field(&self, n: usize, domain: &GridDomain) -> Result<CoefficientField<T>> {
        let d = domain.dim();
        let nf = n as f64;
        let f = match &self.kind {
            SequenceKind::PeriodicRescale(cell) => {
                CoefficientField::from_fn(domain, |x| cell(&x.iter().map(|&t| frac(nf * t)).collect::<Vec<_>>()))?
            }
            SequenceKind::LaminateX1(p) => CoefficientField::scalar(domain, |x| p(frac(nf * x[0])))?,
            SequenceKind::ExplicitList(list) => {
                let (_, f) = list
                    .iter()
                    .find(|(m, _)| *m == n)
                    .ok_or_else(|| Error::Invalid(format!("no explicit field for n = {n}")))?;
                if f.domain() != domain {
                    return Err(Error::Shape(format!("explicit field for n = {n} lives on another grid")));
                }
                f.clone()
            }
        };
        debug_assert_eq!(f.domain().dim(), d);
        f.with_bounds(self.alpha, self.beta)
            .map_err(|e| Error::Coercivity(format!("a_n for n = {n}: {e}")))
    }

    /// The sequence of pointwise adjoints (a_n*).
    pub fn adjoint(&self) -> Self {
        let kind = match &self.kind {
            SequenceKind::PeriodicRescale(c) => {
                let c = c.clone();
                SequenceKind::PeriodicRescale(Arc::new(move |y: &[f64]| c(y).adjoint()))
            }
            SequenceKind::LaminateX1(p) => {
                let p = p.clone();
                SequenceKind::LaminateX1(Arc::new(move |y| p(y).cj()))
            }
            SequenceKind::ExplicitList(l) => SequenceKind::ExplicitList(l.iter().map(|(n, f)| (*n, f.adjoint())).collect()),
        };
        CoefficientSequence { kind, alpha: self.alpha, beta: self.beta }
    }

    /// The 1D profile of a laminate, if this is one.
    pub fn profile(&self) -> Option<&Profile<T>> {
        match &self.kind {
            SequenceKind::LaminateX1(p) => Some(p),
            _ => None,
        }
    }
}

/// a on (0, ½), b on (½, 1).
pub fn two_phase<T: Scalar>(a: T, b: T) -> impl Fn(f64) -> T + Clone + Send + Sync + 'static {
    move |y| if y < 0.5 { a } else { b }
}

/// mean + amp·sin(2πy).
pub fn sine_profile<T: Scalar>(mean: T, amp: f64) -> impl Fn(f64) -> T + Clone + Send + Sync + 'static {
    move |y| mean + T::of(amp * (2.0 * std::f64::consts::PI * y).sin())
}

/// Symmetric checkerboard on the unit cell: a where the two half-period indices agree.
pub fn checkerboard<T: Scalar>(d: usize, a: T, b: T) -> impl Fn(&[f64]) -> DMatrix<T> + Clone + Send + Sync + 'static {
    move |y: &[f64]| {
        let parity = y.iter().map(|&t| usize::from(t >= 0.5)).sum::<usize>() % 2;
        DMatrix::identity(d, d) * if parity == 0 { a } else { b }
    }
}
