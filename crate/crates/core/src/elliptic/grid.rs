use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::hilbert::{HilbertSpace, LinearOp, Subspace};
use crate::scalar::Scalar;
use crate::sparse::CsrMatrix;

/// Axis-aligned box in ℝ^d (d ≤ 3) with a uniform cell grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDomain {
    lo: Vec<f64>,
    hi: Vec<f64>,
    cells: Vec<usize>,
}

impl GridDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, cells: Vec<usize>) -> Result<Self> {
        let d = cells.len();
        if !(1..=3).contains(&d) || lo.len() != d || hi.len() != d {
            return Err(Error::Invalid(format!("grid dimension must be 1..=3 with matching extents, got {d}")));
        }
        if let Some(a) = (0..d).find(|&a| cells[a] == 0) {
            return Err(Error::Invalid(format!("axis {a} has no cells")));
        }
        if let Some(a) = (0..d).find(|&a| !(hi[a] > lo[a])) {
            return Err(Error::Invalid(format!("axis {a} has empty extent")));
        }
        Ok(GridDomain { lo, hi, cells })
    }

    /// (0,1)^d with `n` cells per axis.
    pub fn unit(d: usize, n: usize) -> Result<Self> {
        Self::new(vec![0.0; d], vec![1.0; d], vec![n; d])
    }

    pub fn dim(&self) -> usize {
        self.cells.len()
    }
    pub fn cells(&self) -> &[usize] {
        &self.cells
    }
    pub fn lo(&self) -> &[f64] {
        &self.lo
    }
    pub fn hi(&self) -> &[f64] {
        &self.hi
    }
    pub fn extent(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }
    pub fn h(&self, axis: usize) -> f64 {
        self.extent(axis) / self.cells[axis] as f64
    }
    pub fn n_cells(&self) -> usize {
        self.cells.iter().product()
    }
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.h(a)).product()
    }
    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.extent(a)).product()
    }

    /// Largest |x₁| over the closed box; the constant R of the Poincaré bound γ ≥ 1/(2R).
    pub fn max_abs_x1(&self) -> f64 {
        self.lo[0].abs().max(self.hi[0].abs())
    }

    /// Cell multi-index; axis 0 varies fastest.
    pub fn cell_multi(&self, idx: usize) -> [usize; 3] {
        let mut m = [0; 3];
        let mut r = idx;
        for a in 0..self.dim() {
            m[a] = r % self.cells[a];
            r /= self.cells[a];
        }
        m
    }

    pub fn cell_index(&self, m: &[usize]) -> usize {
        let mut idx = 0;
        for a in (0..self.dim()).rev() {
            idx = idx * self.cells[a] + m[a];
        }
        idx
    }

    pub fn cell_center(&self, idx: usize) -> Vec<f64> {
        let m = self.cell_multi(idx);
        (0..self.dim()).map(|a| self.lo[a] + (m[a] as f64 + 0.5) * self.h(a)).collect()
    }

    pub fn node_coord(&self, m: &[usize]) -> Vec<f64> {
        (0..self.dim()).map(|a| self.lo[a] + m[a] as f64 * self.h(a)).collect()
    }
}

/// Boundary behaviour of the discrete gradient.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    /// grad₀: boundary nodes eliminated (homogeneous Dirichlet data).
    Dirichlet,
    /// grad: all nodes, no boundary condition.
    Neumann,
    /// grad_#: nodes identified across opposite faces.
    Periodic,
}

impl Flavor {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "dirichlet" => Ok(Flavor::Dirichlet),
            "neumann" => Ok(Flavor::Neumann),
            "periodic" => Ok(Flavor::Periodic),
            _ => Err(Error::Invalid(format!("unknown flavor `{s}`"))),
        }
    }
}

/// Quadrature points carrying the vector field inside each cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointLayout {
    /// One point per cell (only in 1D, where it gives the plain forward difference).
    Midpoint,
    /// The 2^d cell corners; component i is the difference along the axis-i edge through the corner.
    Corners,
}

impl PointLayout {
    pub fn default_for(d: usize) -> Self {
        if d == 1 {
            PointLayout::Midpoint
        } else {
            PointLayout::Corners
        }
    }

    pub fn points_per_cell(&self, d: usize) -> usize {
        match self {
            PointLayout::Midpoint => 1,
            PointLayout::Corners => 1 << d,
        }
    }
}

/// Sparse gradient from nodal scalars to point-wise vector fields, with the weighted spaces
/// it acts between. Scalar weights are lumped masses; vector weights are |cell| / points.
pub struct DiscreteGradient<T: Scalar> {
    domain: GridDomain,
    flavor: Flavor,
    layout: PointLayout,
    scalar: HilbertSpace<T>,
    vector: HilbertSpace<T>,
    op: LinearOp<T>,
    node_coords: Vec<Vec<f64>>,
    point_coords: Vec<Vec<f64>>,
    g0: std::sync::OnceLock<Subspace<T>>,
}

impl<T: Scalar> std::fmt::Debug for DiscreteGradient<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DiscreteGradient({:?}, {:?}, {:?}, cells {:?})", self.flavor, self.layout, self.domain.dim(), self.domain.cells())
    }
}

fn node_dof(domain: &GridDomain, flavor: Flavor, m: &[usize]) -> Option<usize> {
    let d = domain.dim();
    let mut idx = 0;
    for a in (0..d).rev() {
        let n = domain.cells[a];
        let (k, size) = match flavor {
            Flavor::Dirichlet => {
                if m[a] == 0 || m[a] == n {
                    return None;
                }
                (m[a] - 1, n - 1)
            }
            Flavor::Neumann => (m[a], n + 1),
            Flavor::Periodic => (m[a] % n, n),
        };
        idx = idx * size + k;
    }
    Some(idx)
}

fn scalar_count(domain: &GridDomain, flavor: Flavor) -> usize {
    domain
        .cells
        .iter()
        .map(|&n| match flavor {
            Flavor::Dirichlet => n - 1,
            Flavor::Neumann => n + 1,
            Flavor::Periodic => n,
        })
        .product()
}

fn corner(q: usize, a: usize) -> usize {
    (q >> a) & 1
}

impl<T: Scalar> DiscreteGradient<T> {
    pub fn build(domain: &GridDomain, flavor: Flavor) -> Result<Arc<Self>> {
        Self::with_layout(domain, flavor, PointLayout::default_for(domain.dim()))
    }

    pub fn with_layout(domain: &GridDomain, flavor: Flavor, layout: PointLayout) -> Result<Arc<Self>> {
        let d = domain.dim();
        if layout == PointLayout::Midpoint && d != 1 {
            return Err(Error::Invalid("midpoint gradients are only defined in 1D".into()));
        }
        if flavor == Flavor::Dirichlet && domain.cells.iter().any(|&n| n < 2) {
            return Err(Error::Invalid("Dirichlet grids need at least two cells per axis".into()));
        }
        let ns = scalar_count(domain, flavor);
        let npts = layout.points_per_cell(d);
        let nc = domain.n_cells();
        let vol = domain.cell_volume();

        let mut node_w = vec![0.0; ns];
        let mut node_coords = vec![Vec::new(); ns];
        let mut trips = Vec::new();
        let mut point_coords = Vec::with_capacity(nc * npts);
        for c in 0..nc {
            let cm = domain.cell_multi(c);
            for q in 0..(1usize << d) {
                let mut m = [0usize; 3];
                for a in 0..d {
                    m[a] = cm[a] + corner(q, a);
                }
                if let Some(k) = node_dof(domain, flavor, &m[..d]) {
                    node_w[k] += vol / (1 << d) as f64;
                    if node_coords[k].is_empty() {
                        node_coords[k] = domain.node_coord(&m[..d]);
                    }
                }
            }
            for q in 0..npts {
                let row0 = (c * npts + q) * d;
                match layout {
                    PointLayout::Midpoint => {
                        point_coords.push(domain.cell_center(c));
                        let h = domain.h(0);
                        if let Some(k) = node_dof(domain, flavor, &[cm[0] + 1]) {
                            trips.push((row0, k, T::of(1.0 / h)));
                        }
                        if let Some(k) = node_dof(domain, flavor, &[cm[0]]) {
                            trips.push((row0, k, T::of(-1.0 / h)));
                        }
                    }
                    PointLayout::Corners => {
                        let mut pm = [0usize; 3];
                        for a in 0..d {
                            pm[a] = cm[a] + corner(q, a);
                        }
                        point_coords.push(domain.node_coord(&pm[..d]));
                        for i in 0..d {
                            let h = domain.h(i);
                            let mut up = pm;
                            let mut down = pm;
                            up[i] = cm[i] + 1;
                            down[i] = cm[i];
                            if let Some(k) = node_dof(domain, flavor, &up[..d]) {
                                trips.push((row0 + i, k, T::of(1.0 / h)));
                            }
                            if let Some(k) = node_dof(domain, flavor, &down[..d]) {
                                trips.push((row0 + i, k, T::of(-1.0 / h)));
                            }
                        }
                    }
                }
            }
        }
        let nv = nc * npts * d;
        let scalar = HilbertSpace::diagonal(node_w)?;
        let vector = HilbertSpace::diagonal(vec![vol / npts as f64; nv])?;
        let op = LinearOp::sparse(&scalar, &vector, CsrMatrix::from_triplets(nv, ns, trips))?;
        Ok(Arc::new(DiscreteGradient {
            domain: domain.clone(),
            flavor,
            layout,
            scalar,
            vector,
            op,
            node_coords,
            point_coords,
            g0: std::sync::OnceLock::new(),
        }))
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }
    pub fn flavor(&self) -> Flavor {
        self.flavor
    }
    pub fn layout(&self) -> PointLayout {
        self.layout
    }
    /// Consistency order of the difference stencil.
    pub fn order(&self) -> usize {
        1
    }
    pub fn scalar_space(&self) -> &HilbertSpace<T> {
        &self.scalar
    }
    pub fn vector_space(&self) -> &HilbertSpace<T> {
        &self.vector
    }
    pub fn op(&self) -> &LinearOp<T> {
        &self.op
    }
    pub fn matrix(&self) -> &CsrMatrix<T> {
        self.op.as_sparse().expect("sparse gradient")
    }
    pub fn points_per_cell(&self) -> usize {
        self.layout.points_per_cell(self.domain.dim())
    }
    pub fn n_points(&self) -> usize {
        self.domain.n_cells() * self.points_per_cell()
    }
    /// Coordinates of the scalar unknowns.
    pub fn node_coords(&self) -> &[Vec<f64>] {
        &self.node_coords
    }
    /// Coordinates of the vector-field quadrature points (cell-major).
    pub fn point_coords(&self) -> &[Vec<f64>] {
        &self.point_coords
    }

    pub fn apply(&self, u: &DVector<T>) -> DVector<T> {
        self.op.apply(u)
    }

    /// The scalar representative of div₋₁ r = −grad* r.
    pub fn div(&self, r: &DVector<T>) -> DVector<T> {
        -self.op.apply_adjoint(r).expect("sparse adjoint")
    }

    /// Range of the gradient (g₀ for the Dirichlet flavor) as an implicit subspace.
    /// The Neumann and periodic gradients are made injective by dropping the first node.
    pub fn range_subspace(&self) -> Result<Subspace<T>> {
        if let Some(s) = self.g0.get() {
            return Ok(s.clone());
        }
        let g = self.injective_matrix();
        let s = Subspace::range_of(&self.vector, g)?;
        let _ = self.g0.set(s.clone());
        Ok(s)
    }

    /// Gradient matrix with constants removed from its kernel (columns restricted for
    /// the Neumann and periodic flavors).
    pub fn injective_matrix(&self) -> CsrMatrix<T> {
        let g = self.matrix();
        match self.flavor {
            Flavor::Dirichlet => g.clone(),
            _ => g.select_cols(&(1..g.ncols()).collect::<Vec<_>>()),
        }
    }

    /// Samples a scalar function at the scalar unknowns.
    pub fn sample_scalar(&self, f: impl Fn(&[f64]) -> T) -> DVector<T> {
        DVector::from_iterator(self.node_coords.len(), self.node_coords.iter().map(|x| f(x)))
    }

    /// Samples a vector field at the quadrature points.
    pub fn sample_vector(&self, f: impl Fn(&[f64]) -> Vec<T>) -> DVector<T> {
        let d = self.domain.dim();
        let mut v = DVector::zeros(self.vector.dim());
        for (p, x) in self.point_coords.iter().enumerate() {
            let val = f(x);
            for i in 0..d {
                v[p * d + i] = val[i];
            }
        }
        v
    }

    /// Index of the cell owning quadrature point `p`.
    pub fn point_cell(&self, p: usize) -> usize {
        p / self.points_per_cell()
    }

    /// The constant vector field ξ.
    pub fn constant_field(&self, xi: &[T]) -> DVector<T> {
        let d = self.domain.dim();
        DVector::from_fn(self.vector.dim(), |k, _| xi[k % d])
    }
}
