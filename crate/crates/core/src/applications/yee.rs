use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::elliptic::GridDomain;
use crate::error::{Error, Result};
use crate::hilbert::{kernel_range, HilbertSpace, LinearOp, Subspace};
use crate::sparse::CsrMatrix;

/// Staggered 3D grid: scalars on interior nodes, E-type fields on interior edges (zero
/// tangential trace), B-type fields on interior faces (zero normal trace), densities on cells.
/// Every entity carries the cell volume as weight.
pub struct YeeGrid {
    domain: GridDomain,
    nodes: Vec<[usize; 3]>,
    /// (axis, lower node)
    edges: Vec<(usize, [usize; 3])>,
    /// (normal axis, lower corner)
    faces: Vec<(usize, [usize; 3])>,
    node_space: HilbertSpace<f64>,
    edge_space: HilbertSpace<f64>,
    face_space: HilbertSpace<f64>,
    cell_space: HilbertSpace<f64>,
    grad0: CsrMatrix<f64>,
    curl0: CsrMatrix<f64>,
    div0: CsrMatrix<f64>,
}

fn e(a: usize) -> [usize; 3] {
    let mut v = [0; 3];
    v[a] = 1;
    v
}

fn add(m: [usize; 3], o: [usize; 3]) -> [usize; 3] {
    [m[0] + o[0], m[1] + o[1], m[2] + o[2]]
}

impl YeeGrid {
    pub fn new(domain: &GridDomain) -> Result<Arc<Self>> {
        if domain.dim() != 3 {
            return Err(Error::Invalid("the staggered curl grid is three-dimensional".into()));
        }
        let n = [domain.cells()[0], domain.cells()[1], domain.cells()[2]];
        if n.iter().any(|&k| k < 2) {
            return Err(Error::Invalid("need at least two cells per axis".into()));
        }
        let h = [domain.h(0), domain.h(1), domain.h(2)];
        let vol = domain.cell_volume();
        let interior = |m: [usize; 3], a: usize| m[a] >= 1 && m[a] < n[a];

        let mut nodes = Vec::new();
        for k in 1..n[2] {
            for j in 1..n[1] {
                for i in 1..n[0] {
                    nodes.push([i, j, k]);
                }
            }
        }
        let mut edges = Vec::new();
        for a in 0..3 {
            for k in 0..=n[2] {
                for j in 0..=n[1] {
                    for i in 0..=n[0] {
                        let m = [i, j, k];
                        if m[a] < n[a] && (0..3).filter(|&b| b != a).all(|b| interior(m, b)) {
                            edges.push((a, m));
                        }
                    }
                }
            }
        }
        let mut faces = Vec::new();
        for a in 0..3 {
            for k in 0..=n[2] {
                for j in 0..=n[1] {
                    for i in 0..=n[0] {
                        let m = [i, j, k];
                        if interior(m, a) && (0..3).filter(|&b| b != a).all(|b| m[b] < n[b]) {
                            faces.push((a, m));
                        }
                    }
                }
            }
        }
        let node_idx: HashMap<[usize; 3], usize> = nodes.iter().enumerate().map(|(k, &m)| (m, k)).collect();
        let edge_idx: HashMap<(usize, [usize; 3]), usize> = edges.iter().enumerate().map(|(k, &x)| (x, k)).collect();
        let face_idx: HashMap<(usize, [usize; 3]), usize> = faces.iter().enumerate().map(|(k, &x)| (x, k)).collect();
        let cell = |m: [usize; 3]| m[0] + n[0] * (m[1] + n[1] * m[2]);

        let mut t = Vec::new();
        for (r, &(a, m)) in edges.iter().enumerate() {
            if let Some(&k) = node_idx.get(&add(m, e(a))) {
                t.push((r, k, 1.0 / h[a]));
            }
            if let Some(&k) = node_idx.get(&m) {
                t.push((r, k, -1.0 / h[a]));
            }
        }
        let grad0 = CsrMatrix::from_triplets(edges.len(), nodes.len(), t);

        // (curl E)_a = ∂_b E_c − ∂_c E_b with (a, b, c) cyclic
        let mut t = Vec::new();
        for (r, &(a, m)) in faces.iter().enumerate() {
            let (b, c) = ((a + 1) % 3, (a + 2) % 3);
            for (axis, dir, sign) in [(c, b, 1.0), (b, c, -1.0)] {
                if let Some(&k) = edge_idx.get(&(axis, add(m, e(dir)))) {
                    t.push((r, k, sign / h[dir]));
                }
                if let Some(&k) = edge_idx.get(&(axis, m)) {
                    t.push((r, k, -sign / h[dir]));
                }
            }
        }
        let curl0 = CsrMatrix::from_triplets(faces.len(), edges.len(), t);

        let nc = n[0] * n[1] * n[2];
        let mut t = Vec::new();
        for k in 0..n[2] {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    let m = [i, j, k];
                    for a in 0..3 {
                        if let Some(&f) = face_idx.get(&(a, add(m, e(a)))) {
                            t.push((cell(m), f, 1.0 / h[a]));
                        }
                        if let Some(&f) = face_idx.get(&(a, m)) {
                            t.push((cell(m), f, -1.0 / h[a]));
                        }
                    }
                }
            }
        }
        let div0 = CsrMatrix::from_triplets(nc, faces.len(), t);
        let sp = |k: usize| HilbertSpace::diagonal(vec![vol; k]);
        Ok(Arc::new(YeeGrid {
            domain: domain.clone(),
            node_space: sp(nodes.len())?,
            edge_space: sp(edges.len())?,
            face_space: sp(faces.len())?,
            cell_space: sp(nc)?,
            nodes,
            edges,
            faces,
            grad0,
            curl0,
            div0,
        }))
    }

    pub fn unit(n: usize) -> Result<Arc<Self>> {
        Self::new(&GridDomain::unit(3, n)?)
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }
    pub fn node_space(&self) -> &HilbertSpace<f64> {
        &self.node_space
    }
    pub fn edge_space(&self) -> &HilbertSpace<f64> {
        &self.edge_space
    }
    pub fn face_space(&self) -> &HilbertSpace<f64> {
        &self.face_space
    }
    pub fn cell_space(&self) -> &HilbertSpace<f64> {
        &self.cell_space
    }
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    /// grad₀: interior nodes → interior edges.
    pub fn grad0(&self) -> &CsrMatrix<f64> {
        &self.grad0
    }
    /// curl₀: interior edges → interior faces.
    pub fn curl0(&self) -> &CsrMatrix<f64> {
        &self.curl0
    }
    /// div₀: interior faces → cells.
    pub fn div0(&self) -> &CsrMatrix<f64> {
        &self.div0
    }
    /// curl = curl₀*: faces → edges (all weights equal, so the transpose).
    pub fn curl(&self) -> CsrMatrix<f64> {
        self.curl0.transpose()
    }

    pub fn curl0_op(&self) -> LinearOp<f64> {
        LinearOp::sparse(&self.edge_space, &self.face_space, self.curl0.clone()).expect("shapes")
    }
    pub fn curl_op(&self) -> LinearOp<f64> {
        LinearOp::sparse(&self.face_space, &self.edge_space, self.curl()).expect("shapes")
    }
    pub fn grad0_op(&self) -> LinearOp<f64> {
        LinearOp::sparse(&self.node_space, &self.edge_space, self.grad0.clone()).expect("shapes")
    }
    pub fn div0_op(&self) -> LinearOp<f64> {
        LinearOp::sparse(&self.face_space, &self.cell_space, self.div0.clone()).expect("shapes")
    }

    fn coord(&self, m: [usize; 3], half: [f64; 3]) -> [f64; 3] {
        let lo = self.domain.lo();
        let mut x = [0.0; 3];
        for a in 0..3 {
            x[a] = lo[a] + (m[a] as f64 + half[a]) * self.domain.h(a);
        }
        x
    }

    pub fn edge_midpoint(&self, k: usize) -> [f64; 3] {
        let (a, m) = self.edges[k];
        let mut half = [0.0; 3];
        half[a] = 0.5;
        self.coord(m, half)
    }
    pub fn face_center(&self, k: usize) -> [f64; 3] {
        let (a, m) = self.faces[k];
        let mut half = [0.5; 3];
        half[a] = 0.0;
        self.coord(m, half)
    }
    pub fn node_coord(&self, k: usize) -> [f64; 3] {
        self.coord(self.nodes[k], [0.0; 3])
    }
    pub fn edge_axis(&self, k: usize) -> usize {
        self.edges[k].0
    }
    pub fn face_axis(&self, k: usize) -> usize {
        self.faces[k].0
    }

    /// Component `edge_axis(k)` of f at each edge midpoint.
    pub fn sample_edges(&self, f: impl Fn(&[f64; 3]) -> [f64; 3]) -> DVector<f64> {
        DVector::from_fn(self.edges.len(), |k, _| f(&self.edge_midpoint(k))[self.edges[k].0])
    }
    pub fn sample_faces(&self, f: impl Fn(&[f64; 3]) -> [f64; 3]) -> DVector<f64> {
        DVector::from_fn(self.faces.len(), |k, _| f(&self.face_center(k))[self.faces[k].0])
    }
    pub fn sample_nodes(&self, f: impl Fn(&[f64; 3]) -> f64) -> DVector<f64> {
        DVector::from_fn(self.nodes.len(), |k, _| f(&self.node_coord(k)))
    }

    /// Indices of the cells sharing edge k (up to four).
    pub fn edge_cells(&self, k: usize) -> Vec<usize> {
        let (a, m) = self.edges[k];
        let n = self.domain.cells();
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        let mut out = Vec::with_capacity(4);
        for db in [0, 1] {
            for dc in [0, 1] {
                if m[b] < db || m[c] < dc {
                    continue;
                }
                let mut q = m;
                q[b] -= db;
                q[c] -= dc;
                if q[b] < n[b] && q[c] < n[c] {
                    out.push(self.domain.cell_index(&q));
                }
            }
        }
        out
    }

    /// Indices of the (two) cells sharing interior face k.
    pub fn face_cells(&self, k: usize) -> [usize; 2] {
        let (a, m) = self.faces[k];
        let mut lower = m;
        lower[a] -= 1;
        [self.domain.cell_index(&lower), self.domain.cell_index(&m)]
    }

    /// max |curl₀ grad₀| and max |div₀ curl₀| entries.
    pub fn complex_defects(&self) -> (f64, f64) {
        (self.curl0.matmul(&self.grad0).max_abs(), self.div0.matmul(&self.curl0).max_abs())
    }
}

/// Which field space is split.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HelmholtzFlavor {
    /// Edge fields: ran(grad₀) ⊕ ran(curl) ⊕ H_D.
    Dirichlet,
    /// Face fields: ran(div₀*) ⊕ ran(curl₀) ⊕ H_N.
    Neumann,
}

pub struct HelmholtzSplit {
    pub flavor: HelmholtzFlavor,
    pub gradients: Subspace<f64>,
    pub curls: Subspace<f64>,
    pub harmonic: Subspace<f64>,
}

impl HelmholtzSplit {
    pub fn dims(&self) -> [usize; 3] {
        [self.gradients.dim(), self.curls.dim(), self.harmonic.dim()]
    }

    /// Largest pairwise cross Gram entry.
    pub fn orthogonality(&self) -> f64 {
        let parts = [&self.gradients, &self.curls, &self.harmonic];
        let w = self.gradients.ambient().weight_matrix();
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in i + 1..3 {
                let (bi, bj) = (parts[i].basis().unwrap(), parts[j].basis().unwrap());
                if bi.ncols() > 0 && bj.ncols() > 0 {
                    worst = worst.max((bi.transpose() * &w * bj).amax());
                }
            }
        }
        worst
    }

    /// ‖x − (P_grad + P_curl + P_harm) x‖ / ‖x‖.
    pub fn reassembly_error(&self, x: &DVector<f64>) -> f64 {
        let h = self.gradients.ambient();
        let sum = self.gradients.project(x) + self.curls.project(x) + self.harmonic.project(x);
        h.norm(&(x - sum)) / h.norm(x).max(f64::MIN_POSITIVE)
    }
}

/// Gradient, curl and harmonic parts of the edge (Dirichlet) or face (Neumann) fields,
/// computed by weighted SVD on the explicit operators.
pub fn helmholtz_decompose(grid: &YeeGrid, flavor: HelmholtzFlavor) -> Result<HelmholtzSplit> {
    let (g, c) = match flavor {
        HelmholtzFlavor::Dirichlet => (grid.grad0_op(), grid.curl_op()),
        HelmholtzFlavor::Neumann => (grid.div0_op().adjoint()?, grid.curl0_op()),
    };
    let (_, gradients) = kernel_range(&g, 1e-10)?;
    let (_, curls) = kernel_range(&c, 1e-10)?;
    let h = gradients.ambient().clone();
    let (bg, bc) = (gradients.basis().unwrap(), curls.basis().unwrap());
    let both = DMatrix::from_fn(h.dim(), bg.ncols() + bc.ncols(), |i, j| {
        if j < bg.ncols() {
            bg[(i, j)]
        } else {
            bc[(i, j - bg.ncols())]
        }
    });
    let harmonic = Subspace::span(&h, &both, 1e-10)?.complement()?;
    let split = HelmholtzSplit { flavor, gradients, curls, harmonic };
    let o = split.orthogonality();
    if o > 1e-8 {
        return Err(Error::Internal(format!("Helmholtz parts are not orthogonal ({o:e})")));
    }
    if split.dims().iter().sum::<usize>() != h.dim() {
        return Err(Error::Internal("Helmholtz dimensions do not add up".into()));
    }
    Ok(split)
}
