use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::op::LinearOp;
use super::space::HilbertSpace;
use super::subspace::Subspace;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default number of pseudo-random probes on abstract spaces.
pub const DEFAULT_RANDOM_PROBES: usize = 8;

/// Finite family of unit vectors standing in for test functions.
#[derive(Clone, Debug)]
pub struct ProbeSet<T: Scalar> {
    space: HilbertSpace<T>,
    vectors: Vec<DVector<T>>,
    seed: Option<u64>,
}

impl<T: Scalar> ProbeSet<T> {
    /// Normalises the given vectors; rejects zero vectors and empty lists.
    pub fn new(space: &HilbertSpace<T>, vectors: Vec<DVector<T>>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::Invalid("probe set is empty".into()));
        }
        let mut out = Vec::with_capacity(vectors.len());
        for v in vectors {
            if v.len() != space.dim() {
                return Err(Error::Shape(format!("probe of length {} in dim {}", v.len(), space.dim())));
            }
            let n = space.norm(&v);
            if n == 0.0 {
                return Err(Error::Invalid("zero probe vector".into()));
            }
            out.push(v / T::of(n));
        }
        Ok(ProbeSet { space: space.clone(), vectors: out, seed: None })
    }

    /// `count` seeded pseudo-random unit vectors.
    pub fn random(space: &HilbertSpace<T>, count: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vectors = (0..count.max(1))
            .map(|_| {
                let v = random_vector(space.dim(), &mut rng);
                let n = space.norm(&v);
                v / T::of(n)
            })
            .collect();
        ProbeSet { space: space.clone(), vectors, seed: Some(seed) }
    }

    pub fn space(&self) -> &HilbertSpace<T> {
        &self.space
    }

    pub fn vectors(&self) -> &[DVector<T>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Projects each probe onto `sub`, renormalises, and expresses it in the
    /// subspace's operator space. Probes (nearly) orthogonal to `sub` are dropped,
    /// so the result may be empty.
    pub fn restrict(&self, sub: &Subspace<T>) -> Result<Self> {
        if !self.space.same(sub.ambient()) {
            return Err(Error::Shape("probes and subspace live in different spaces".into()));
        }
        let mut out = Vec::new();
        for v in &self.vectors {
            let p = sub.project(v);
            let n = self.space.norm(&p);
            if n > 1e-8 {
                out.push(sub.restrict(&(p / T::of(n))));
            }
        }
        let target = sub.op_space();
        for v in out.iter_mut() {
            let n = target.norm(v);
            *v /= T::of(n);
        }
        Ok(ProbeSet { space: target.clone(), vectors: out, seed: self.seed })
    }

    /// Images of the probes under `op`, renormalised (used to build probes on a range).
    pub fn mapped(&self, op: &LinearOp<T>) -> Result<Self> {
        let images: Vec<_> = self.vectors.iter().map(|v| op.apply(v)).filter(|v| op.target().norm(v) > 1e-12).collect();
        Self::new(op.target(), images)
    }

    pub fn concat(&self, other: &Self) -> Result<Self> {
        if !self.space.same(&other.space) {
            return Err(Error::Shape("probe sets on different spaces".into()));
        }
        let mut vectors = self.vectors.clone();
        vectors.extend(other.vectors.iter().cloned());
        Ok(ProbeSet { space: self.space.clone(), vectors, seed: self.seed })
    }
}

/// Seeded vector with entries uniform in [-1, 1] (both parts in complex mode).
pub fn random_vector<T: Scalar>(n: usize, rng: &mut ChaCha8Rng) -> DVector<T> {
    DVector::from_fn(n, |_, _| {
        let re = rng.gen_range(-1.0..1.0);
        let im = if T::IS_COMPLEX { rng.gen_range(-1.0..1.0) } else { 0.0 };
        T::from_c64(Complex64::new(re, im))
    })
}
