use nalgebra::{DMatrix, DVector};

use super::grid::{DiscreteGradient, GridDomain};
use crate::error::{Error, Result};
use crate::hilbert::LinearOp;
use crate::scalar::Scalar;
use crate::sparse::CsrMatrix;

/// Cell-wise constant d×d coefficient a(x), sampled at cell midpoints.
#[derive(Clone, Debug)]
pub struct CoefficientField<T: Scalar> {
    domain: GridDomain,
    cells: Vec<DMatrix<T>>,
    bounds: Option<(f64, f64)>,
}

/// Cell-wise test of Re a ≥ α and Re a⁻¹ ≥ 1/β.
#[derive(Clone, Debug)]
pub struct Membership {
    pub alpha: f64,
    pub beta: f64,
    /// min over cells of λ_min(Re a(x)).
    pub min_re: f64,
    /// min over cells of λ_min(Re a(x)⁻¹); NaN if some cell is singular.
    pub min_re_inv: f64,
    /// First cell violating a bound.
    pub worst_cell: Option<usize>,
}

impl Membership {
    pub fn passes(&self) -> bool {
        self.worst_cell.is_none()
    }
}

pub(crate) fn re_min<T: Scalar>(m: &DMatrix<T>) -> f64 {
    let h = (m + m.adjoint()) * T::of(0.5);
    h.symmetric_eigenvalues().iter().fold(f64::INFINITY, |a, &b| a.min(b))
}

/// (λ_min(Re m), λ_min(Re m⁻¹)); the second is NaN for singular m.
pub(crate) fn cell_minima<T: Scalar>(m: &DMatrix<T>) -> (f64, f64) {
    let r = re_min(m);
    match m.clone().try_inverse() {
        Some(inv) => (r, re_min(&inv)),
        None => (r, f64::NAN),
    }
}

impl<T: Scalar> CoefficientField<T> {
    pub fn new(domain: &GridDomain, cells: Vec<DMatrix<T>>) -> Result<Self> {
        let d = domain.dim();
        if cells.len() != domain.n_cells() {
            return Err(Error::Shape(format!("{} cell matrices for {} cells", cells.len(), domain.n_cells())));
        }
        if let Some(k) = cells.iter().position(|m| m.nrows() != d || m.ncols() != d) {
            return Err(Error::Shape(format!("cell {k} matrix is not {d}x{d}")));
        }
        Ok(CoefficientField { domain: domain.clone(), cells, bounds: None })
    }

    pub fn constant(domain: &GridDomain, m: DMatrix<T>) -> Result<Self> {
        Self::new(domain, vec![m; domain.n_cells()])
    }

    pub fn from_fn(domain: &GridDomain, f: impl Fn(&[f64]) -> DMatrix<T>) -> Result<Self> {
        let cells = (0..domain.n_cells()).map(|c| f(&domain.cell_center(c))).collect();
        Self::new(domain, cells)
    }

    /// α(x)·I.
    pub fn scalar(domain: &GridDomain, f: impl Fn(&[f64]) -> T) -> Result<Self> {
        let d = domain.dim();
        Self::from_fn(domain, |x| DMatrix::identity(d, d) * f(x))
    }

    /// Per-cell scalar values times the identity.
    pub fn from_values(domain: &GridDomain, values: &[T]) -> Result<Self> {
        let d = domain.dim();
        Self::new(domain, values.iter().map(|&v| DMatrix::identity(d, d) * v).collect())
    }

    /// Attaches declared bounds after checking membership in M(α, β).
    pub fn with_bounds(mut self, alpha: f64, beta: f64) -> Result<Self> {
        let m = self.membership(alpha, beta)?;
        if !m.passes() {
            return Err(Error::Coercivity(format!(
                "coefficient leaves M({alpha}, {beta}) at cell {} (min Re a = {:.6}, min Re a^-1 = {:.6})",
                m.worst_cell.unwrap(),
                m.min_re,
                m.min_re_inv
            )));
        }
        self.bounds = Some((alpha, beta));
        Ok(self)
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        self.bounds
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }
    pub fn cells(&self) -> &[DMatrix<T>] {
        &self.cells
    }
    pub fn cell(&self, c: usize) -> &DMatrix<T> {
        &self.cells[c]
    }

    pub fn membership(&self, alpha: f64, beta: f64) -> Result<Membership> {
        if !(alpha > 0.0 && alpha <= beta) {
            return Err(Error::Invalid(format!("need 0 < alpha <= beta, got ({alpha}, {beta})")));
        }
        let tol = 1e-12;
        let mut min_re = f64::INFINITY;
        let mut min_re_inv = f64::INFINITY;
        let mut worst = None;
        for (c, m) in self.cells.iter().enumerate() {
            let (r, ri) = cell_minima(m);
            min_re = min_re.min(r);
            min_re_inv = if ri.is_nan() { f64::NAN } else { min_re_inv.min(ri) };
            let bad = r < alpha - tol * alpha || ri.is_nan() || ri < 1.0 / beta - tol / beta;
            if bad && worst.is_none() {
                worst = Some(c);
            }
        }
        Ok(Membership { alpha, beta, min_re, min_re_inv, worst_cell: worst })
    }

    /// Tightest (α, β) with a ∈ M(α, β), or an error if Re a is not positive definite.
    pub fn tight_bounds(&self) -> Result<(f64, f64)> {
        let mut a = f64::INFINITY;
        let mut b = f64::INFINITY;
        for m in &self.cells {
            let (r, ri) = cell_minima(m);
            a = a.min(r);
            b = b.min(ri);
        }
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::Coercivity(format!("Re a is not positive definite (min {a:e})")));
        }
        Ok((a, 1.0 / b))
    }

    /// Pointwise a(x)*.
    pub fn adjoint(&self) -> Self {
        CoefficientField { domain: self.domain.clone(), cells: self.cells.iter().map(|m| m.adjoint()).collect(), bounds: self.bounds }
    }

    /// Pointwise a(x)⁻¹.
    pub fn inverse(&self) -> Result<Self> {
        let cells = self
            .cells
            .iter()
            .enumerate()
            .map(|(c, m)| m.clone().try_inverse().ok_or_else(|| Error::Coercivity(format!("cell {c} is singular"))))
            .collect::<Result<Vec<_>>>()?;
        let bounds = self.bounds.map(|(a, b)| (1.0 / b, 1.0 / a));
        Ok(CoefficientField { domain: self.domain.clone(), cells, bounds })
    }

    pub fn map(&self, f: impl Fn(&DMatrix<T>) -> DMatrix<T>) -> Result<Self> {
        Self::new(&self.domain, self.cells.iter().map(f).collect())
    }

    pub fn scale(&self, s: T) -> Self {
        CoefficientField { domain: self.domain.clone(), cells: self.cells.iter().map(|m| m * s).collect(), bounds: None }
    }

    /// Volume average ∫a / |Ω|.
    pub fn mean(&self) -> DMatrix<T> {
        let d = self.domain.dim();
        let mut s = DMatrix::zeros(d, d);
        for m in &self.cells {
            s += m;
        }
        s / T::of(self.cells.len() as f64)
    }

    /// The multiplication operator on the vector space of `grad` (block-diagonal sparse).
    pub fn multiplier(&self, grad: &DiscreteGradient<T>) -> Result<LinearOp<T>> {
        if grad.domain() != &self.domain {
            return Err(Error::Shape("coefficient and gradient live on different grids".into()));
        }
        let v = grad.vector_space();
        LinearOp::sparse(v, v, self.multiplier_matrix(grad.points_per_cell()))
    }

    pub(crate) fn multiplier_matrix(&self, npts: usize) -> CsrMatrix<T> {
        let d = self.domain.dim();
        let n = self.cells.len() * npts * d;
        let mut trips = Vec::with_capacity(n * d);
        for (c, m) in self.cells.iter().enumerate() {
            for q in 0..npts {
                let base = (c * npts + q) * d;
                for i in 0..d {
                    for j in 0..d {
                        if m[(i, j)] != T::zero() {
                            trips.push((base + i, base + j, m[(i, j)]));
                        }
                    }
                }
            }
        }
        CsrMatrix::from_triplets(n, n, trips)
    }

    /// Applies a(x) pointwise to a field laid out like the vector space of a gradient.
    pub fn apply_pointwise(&self, npts: usize, v: &DVector<T>) -> DVector<T> {
        let d = self.domain.dim();
        let mut out = DVector::zeros(v.len());
        for (c, m) in self.cells.iter().enumerate() {
            for q in 0..npts {
                let base = (c * npts + q) * d;
                let r = m * v.rows(base, d);
                out.rows_mut(base, d).copy_from(&r);
            }
        }
        out
    }

    /// Text grid format: a header `d n_1 .. n_d`, then one line per cell (axis 0 fastest)
    /// with the d×d entries in row-major order; complex entries are written `re,im`.
    pub fn to_text(&self) -> String {
        let d = self.domain.dim();
        let mut s = format!("{d}");
        for n in self.domain.cells() {
            s.push_str(&format!(" {n}"));
        }
        s.push('\n');
        for m in &self.cells {
            let mut row = Vec::with_capacity(d * d);
            for i in 0..d {
                for j in 0..d {
                    let z = m[(i, j)].to_c64();
                    row.push(if T::IS_COMPLEX { format!("{:e},{:e}", z.re, z.im) } else { format!("{:e}", z.re) });
                }
            }
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    /// Reads the text grid format onto `domain`, whose cell counts must match the header.
    pub fn from_text(domain: &GridDomain, text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hl, header) = lines.next().ok_or(Error::Parse { line: 0, msg: "empty coefficient file".into() })?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse { line: hl, msg: format!("bad header token `{t}`") }))
            .collect::<Result<_>>()?;
        if nums.is_empty() || nums.len() != nums[0] + 1 || nums[1..] != *domain.cells() {
            return Err(Error::Parse { line: hl, msg: format!("header {nums:?} does not match grid {:?}", domain.cells()) });
        }
        let d = nums[0];
        let mut cells = Vec::with_capacity(domain.n_cells());
        for (ln, l) in lines {
            let vals: Vec<T> = l.split_whitespace().map(|t| parse_entry::<T>(t, ln)).collect::<Result<_>>()?;
            if vals.len() != d * d {
                return Err(Error::Parse { line: ln, msg: format!("expected {} entries, got {}", d * d, vals.len()) });
            }
            cells.push(DMatrix::from_row_slice(d, d, &vals));
        }
        if cells.len() != domain.n_cells() {
            return Err(Error::Parse { line: 0, msg: format!("{} cells listed, {} expected", cells.len(), domain.n_cells()) });
        }
        Self::new(domain, cells)
    }
}

fn parse_entry<T: Scalar>(t: &str, line: usize) -> Result<T> {
    let bad = || Error::Parse { line, msg: format!("bad entry `{t}`") };
    match t.split_once(',') {
        Some((re, im)) => {
            let z = num_complex::Complex64::new(re.parse().map_err(|_| bad())?, im.parse().map_err(|_| bad())?);
            if !T::IS_COMPLEX && z.im != 0.0 {
                return Err(Error::Parse { line, msg: "complex entry in a real field".into() });
            }
            Ok(T::from_c64(z))
        }
        None => Ok(T::of(t.parse().map_err(|_| bad())?)),
    }
}
