use std::f64::consts::PI;
use std::sync::Arc;

use approx::assert_relative_eq;
use homlab::elliptic::{DiscreteGradient, Flavor, GridDomain};
use homlab::hilbert::*;
use homlab::io::{read_triplets, write_triplets};
use homlab::sparse::CsrMatrix;
use homlab::{Complex64, Error};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rand_mat(r: usize, c: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
}

fn rand_weights(n: usize, rng: &mut ChaCha8Rng) -> HilbertSpace<f64> {
    HilbertSpace::diagonal((0..n).map(|_| rng.gen_range(0.2..3.0)).collect()).unwrap()
}

fn cell_space(n: usize) -> HilbertSpace<f64> {
    HilbertSpace::diagonal(vec![1.0 / n as f64; n]).unwrap()
}

fn sine_probes(n: usize, modes: usize) -> ProbeSet<f64> {
    let s = cell_space(n);
    let v = (1..=modes)
        .map(|k| DVector::from_fn(n, |i, _| (k as f64 * PI * (i as f64 + 0.5) / n as f64).sin()))
        .collect();
    ProbeSet::new(&s, v).unwrap()
}

fn multiplier(n: usize, f: impl Fn(f64) -> f64) -> LinearOp<f64> {
    let s = cell_space(n);
    let d: Vec<f64> = (0..n).map(|i| f((i as f64 + 0.5) / n as f64)).collect();
    LinearOp::sparse(&s, &s, CsrMatrix::diagonal(&d)).unwrap()
}

#[test]
fn symmetric_matrix_is_self_adjoint_for_identity_weights() {
    let s = HilbertSpace::<f64>::euclidean(4);
    let m = DMatrix::from_fn(4, 4, |i, j| (i + j) as f64);
    let a = LinearOp::dense(&s, &s, m.clone()).unwrap();
    assert_eq!(a.adjoint().unwrap().to_dense(), m);
}

#[test]
fn weighted_adjoint_inner_product_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let src = rand_weights(10, &mut rng);
    let tgt = rand_weights(10, &mut rng);
    let a = LinearOp::dense(&src, &tgt, rand_mat(10, 10, &mut rng)).unwrap();
    let adj = a.adjoint().unwrap();
    for _ in 0..20 {
        let x = DVector::from_fn(10, |_, _| rng.gen_range(-1.0..1.0));
        let y = DVector::from_fn(10, |_, _| rng.gen_range(-1.0..1.0));
        assert!((tgt.inner(&y, &a.apply(&x)) - src.inner(&adj.apply(&y), &x)).abs() < 1e-12);
    }
}

#[test]
fn block_adjoint_swaps_and_adjoins() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h0 = rand_weights(3, &mut rng);
    let h1 = rand_weights(4, &mut rng);
    let h = HilbertSpace::product(&[&h0, &h1]).unwrap();
    let b = LinearOp::dense(&h1, &h0, rand_mat(3, 4, &mut rng)).unwrap();
    let c = LinearOp::dense(&h0, &h1, rand_mat(4, 3, &mut rng)).unwrap();
    let mut m = DMatrix::zeros(7, 7);
    m.view_mut((0, 3), (3, 4)).copy_from(&b.to_dense());
    m.view_mut((3, 0), (4, 3)).copy_from(&c.to_dense());
    let adj = LinearOp::dense(&h, &h, m).unwrap().adjoint().unwrap().to_dense();
    assert!(adj.view((0, 0), (3, 3)).amax() == 0.0 && adj.view((3, 3), (4, 4)).amax() == 0.0);
    assert!((adj.view((0, 3), (3, 4)) - c.adjoint().unwrap().to_dense()).amax() < 1e-14);
    assert!((adj.view((3, 0), (4, 3)) - b.adjoint().unwrap().to_dense()).amax() < 1e-14);
}

#[test]
fn matrix_free_without_transpose_has_no_adjoint() {
    let s = HilbertSpace::<f64>::euclidean(3);
    let op = LinearOp::from_fn(&s, &s, Arc::new(|x: &DVector<f64>| x * 2.0), None);
    assert!(matches!(op.adjoint(), Err(Error::MissingTranspose)));
    let op = LinearOp::from_fn(&s, &s, Arc::new(|x: &DVector<f64>| x * 2.0), Some(Arc::new(|x: &DVector<f64>| x * 2.0)));
    assert_eq!(op.adjoint().unwrap().apply(&DVector::from_element(3, 1.0))[0], 2.0);
}

#[test]
fn complex_inner_product_is_antilinear_in_first_slot() {
    let s = HilbertSpace::<Complex64>::diagonal(vec![1.0, 2.0]).unwrap();
    let i = Complex64::new(0.0, 1.0);
    let x = DVector::from_vec(vec![Complex64::new(1.0, 0.0), i]);
    let y = DVector::from_vec(vec![Complex64::new(2.0, 1.0), Complex64::new(0.0, -1.0)]);
    assert_relative_eq!((s.inner(&(&x * i), &y) - s.inner(&x, &y) * (-i)).norm(), 0.0, epsilon = 1e-15);
    assert_relative_eq!((s.inner(&x, &(&y * i)) - s.inner(&x, &y) * i).norm(), 0.0, epsilon = 1e-15);
    // 1·(2+i) + 2·(−i)(−i) = 2 + i − 2
    assert_relative_eq!((s.inner(&x, &y) - Complex64::new(0.0, 1.0)).norm(), 0.0, epsilon = 1e-15);
}

#[test]
fn non_positive_weights_are_rejected() {
    assert!(HilbertSpace::<f64>::diagonal(vec![1.0, 0.0]).is_err());
    assert!(HilbertSpace::<f64>::dense(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
}

#[test]
fn zero_operator_kernel_range() {
    let s = HilbertSpace::<f64>::euclidean(5);
    let (k, r) = kernel_range(&LinearOp::zero(&s, &s), 1e-10).unwrap();
    assert_eq!((k.dim(), r.dim()), (5, 0));
}

#[test]
fn gradient_kernels_by_boundary_condition() {
    let d = GridDomain::unit(1, 64).unwrap();
    let g0 = DiscreteGradient::<f64>::build(&d, Flavor::Dirichlet).unwrap();
    assert_eq!(kernel_range(g0.op(), 1e-10).unwrap().0.dim(), 0);
    let gn = DiscreteGradient::<f64>::build(&d, Flavor::Neumann).unwrap();
    let (k, _) = kernel_range(gn.op(), 1e-10).unwrap();
    assert_eq!(k.dim(), 1);
    let v = k.basis().unwrap().column(0).into_owned();
    assert!((v.max() - v.min()).abs() < 1e-10 * v.amax());
}

#[test]
fn coercivity_examples() {
    let s = HilbertSpace::<f64>::euclidean(3);
    let r = coercivity_check(&LinearOp::identity(&s).scale(2.0), 2.0, 2.0).unwrap();
    assert_relative_eq!(r.re_min, 2.0, epsilon = 1e-12);
    assert_relative_eq!(r.re_inv_min, 0.5, epsilon = 1e-12);
    assert!(r.passes());

    let s = HilbertSpace::<f64>::euclidean(2);
    let t = LinearOp::dense(&s, &s, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 1.0, 1.0])).unwrap();
    let r = coercivity_check(&t, 1.0, 2.0).unwrap();
    assert_relative_eq!(r.re_min, 1.0, epsilon = 1e-12);
    assert_relative_eq!(r.re_inv_min, 0.5, epsilon = 1e-12);
    assert!(r.passes());
}

#[test]
fn coercivity_fails_below_alpha() {
    // Re T = Q diag(0.3, 1, 2, 5) Qᵀ with a skew part on top
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let q = rand_mat(4, 4, &mut rng).qr().q();
    let p = &q * DMatrix::from_diagonal(&DVector::from_vec(vec![0.3, 1.0, 2.0, 5.0])) * q.transpose();
    let k = rand_mat(4, 4, &mut rng);
    let s = HilbertSpace::<f64>::euclidean(4);
    let t = LinearOp::dense(&s, &s, p + &k - k.transpose()).unwrap();
    let r = coercivity_check(&t, 1.0, 100.0).unwrap();
    assert_relative_eq!(r.re_min, 0.3, epsilon = 1e-12);
    assert!(!r.passes_alpha());
}

#[test]
fn singular_operator_is_flagged() {
    let s = HilbertSpace::<f64>::euclidean(2);
    let t = LinearOp::dense(&s, &s, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])).unwrap();
    let r = coercivity_check(&t, 0.5, 1.0).unwrap();
    assert!(r.singular && !r.passes_beta());
}

#[test]
fn lanczos_path_matches_known_spectrum() {
    let n = 800;
    let s = cell_space(n);
    let d: Vec<f64> = (0..n).map(|i| 0.7 + 3.0 * i as f64 / n as f64).collect();
    let t = LinearOp::sparse(&s, &s, CsrMatrix::diagonal(&d)).unwrap();
    let r = coercivity_check(&t, 0.5, 4.0).unwrap();
    assert!(r.iterative);
    assert!((r.re_min - 0.7).abs() < 1e-6, "{}", r.re_min);
    assert!((operator_norm(&t).unwrap() - d[n - 1]).abs() < 1e-6);
    assert!(r.passes());
}

#[test]
fn wot_gap_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let s = rand_weights(6, &mut rng);
    let a = LinearOp::dense(&s, &s, rand_mat(6, 6, &mut rng)).unwrap();
    let p = ProbeSet::random(&s, 4, 1);
    assert_eq!(wot_gap(&a, &a, &p, &p).unwrap(), 0.0);
    assert_eq!(strong_gap(&a, &a, &p).unwrap(), 0.0);

    // s − t = φ₁⟨ψ₁, ·⟩
    let (phi, psi) = (p.vectors()[0].clone(), p.vectors()[1].clone());
    let rank_one = &phi * s.apply_weight(&psi).transpose();
    let b = LinearOp::dense(&s, &s, a.to_dense() + rank_one).unwrap();
    let left = ProbeSet::new(&s, vec![phi]).unwrap();
    let right = ProbeSet::new(&s, vec![psi]).unwrap();
    assert_relative_eq!(wot_gap(&b, &a, &left, &right).unwrap(), 1.0, epsilon = 1e-12);
    assert_relative_eq!(strong_gap(&b, &a, &right).unwrap(), 1.0, epsilon = 1e-12);
}

#[test]
fn shape_mismatch_is_reported() {
    let a = LinearOp::identity(&HilbertSpace::<f64>::euclidean(3));
    let b = LinearOp::identity(&HilbertSpace::<f64>::euclidean(4));
    let p = ProbeSet::random(&HilbertSpace::<f64>::euclidean(3), 2, 0);
    assert!(matches!(wot_gap(&a, &b, &p, &p), Err(Error::Shape(_))));
}

#[test]
fn oscillating_multipliers_converge_weakly_not_strongly() {
    let cells = 4096;
    let probes = sine_probes(cells, 5);
    let zero = multiplier(cells, |_| 0.0);
    let mut prev = f64::INFINITY;
    for n in [4, 8, 16, 32, 64] {
        let m = multiplier(cells, |x| (2.0 * PI * n as f64 * x).sin());
        let w = wot_gap(&m, &zero, &probes, &probes).unwrap();
        let s = strong_gap(&m, &zero, &probes).unwrap();
        // pairings of sin(2πn·) with products of low modes: O(1/n) by the quadrature oracle
        let oracle = (1..=5)
            .flat_map(|j| (1..=5).map(move |k| (j, k)))
            .map(|(j, k)| {
                let f = |x: f64| 2.0 * (j as f64 * PI * x).sin() * (k as f64 * PI * x).sin() * (2.0 * PI * n as f64 * x).sin();
                quad(f).abs()
            })
            .fold(0.0, f64::max);
        assert!((w - oracle).abs() < 1e-4, "n={n}: {w} vs {oracle}");
        assert!(w < prev);
        prev = w;
        assert!(s > 0.6, "strong gap {s}");
    }
}

fn quad(f: impl Fn(f64) -> f64) -> f64 {
    // composite Simpson on (0,1), fine enough for n ≤ 64
    let m = 20_000;
    let h = 1.0 / m as f64;
    (0..=m)
        .map(|i| {
            let w = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            w * f(i as f64 * h)
        })
        .sum::<f64>()
        * h
        / 3.0
}

#[test]
fn closure_of_coercive_sequence() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let s = HilbertSpace::<f64>::euclidean(6);
    let build = |rng: &mut ChaCha8Rng| {
        let x = rand_mat(6, 6, rng) * 0.3;
        let k = rand_mat(6, 6, rng) * 0.3;
        DMatrix::identity(6, 6) + &x * x.transpose() + &k - k.transpose()
    };
    let t = build(&mut rng);
    let e = build(&mut rng);
    let (alpha, beta) = (0.5, 20.0);
    let t_op = LinearOp::dense(&s, &s, t.clone()).unwrap();
    assert!(coercivity_check(&LinearOp::dense(&s, &s, e.clone()).unwrap(), alpha, beta).unwrap().passes());
    let full = ProbeSet::new(&s, (0..6).map(|i| DVector::from_fn(6, |j, _| if i == j { 1.0 } else { 0.0 })).collect()).unwrap();
    let mut last = f64::INFINITY;
    for n in [1, 10, 100, 1000] {
        let tn = &t * (1.0 - 1.0 / n as f64) + &e * (1.0 / n as f64);
        let op = LinearOp::dense(&s, &s, tn).unwrap();
        assert!(coercivity_check(&op, alpha, beta).unwrap().passes());
        last = wot_gap(&op, &t_op, &full, &full).unwrap();
    }
    assert!(last < 1e-2);
    assert!(coercivity_check_tol(&t_op, alpha, beta, 1e-8).unwrap().passes());
}

#[test]
fn probes_are_unit_and_nonempty() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = rand_weights(9, &mut rng);
    let p = ProbeSet::random(&s, DEFAULT_RANDOM_PROBES, 77);
    assert_eq!(p.len(), DEFAULT_RANDOM_PROBES);
    for v in p.vectors() {
        assert!((s.norm(v) - 1.0).abs() < 1e-12);
    }
    assert_eq!(ProbeSet::random(&s, 3, 77).vectors()[0], p.vectors()[0]);
    assert!(ProbeSet::new(&s, vec![]).is_err());
    assert!(ProbeSet::new(&s, vec![DVector::zeros(9)]).is_err());
}

#[test]
fn implicit_subspace_projector_properties() {
    let n = 3000;
    let s = HilbertSpace::<f64>::diagonal((0..n).map(|i| 1.0 + (i % 7) as f64 * 0.1).collect()).unwrap();
    // first differences: injective generator with n−1 columns
    let trips: Vec<(usize, usize, f64)> = (0..n - 1).flat_map(|j| [(j, j, 1.0), (j + 1, j, -1.0)]).collect();
    let g = CsrMatrix::from_triplets(n, n - 1, trips);
    let sub = Subspace::range_of(&s, g).unwrap();
    assert!(!sub.is_explicit());
    let probes = ProbeSet::random(&s, 6, 5);
    assert!(sub.defect(probes.vectors()) < 1e-8);
    let comp = sub.complement().unwrap();
    let x = probes.vectors()[0].clone();
    assert!((sub.project(&x) + comp.project(&x) - &x).amax() < 1e-8);
}

#[test]
fn explicit_subspace_is_orthonormal() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let s = rand_weights(12, &mut rng);
    let sub = Subspace::span(&s, &rand_mat(12, 5, &mut rng), 1e-10).unwrap();
    assert_eq!(sub.dim(), 5);
    assert!(sub.defect(&[]) < 1e-10);
    assert_eq!(sub.complement().unwrap().dim(), 7);
}

#[test]
fn triplet_text_round_trip() {
    let m = CsrMatrix::from_triplets(3, 4, vec![(0, 1, 1.5), (2, 3, -2.25), (1, 0, 1e-17)]);
    let back: CsrMatrix<f64> = read_triplets(&write_triplets(&m)).unwrap();
    assert_eq!(back.to_dense(), m.to_dense());
    assert!(read_triplets::<f64>("2 2\n0 5 1.0\n").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjoint_is_an_involution(seed in 0u64..100_000, n in 1usize..9, m in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (src, tgt) = (rand_weights(n, &mut rng), rand_weights(m, &mut rng));
        let a = LinearOp::dense(&src, &tgt, rand_mat(m, n, &mut rng)).unwrap();
        let back = a.adjoint().unwrap().adjoint().unwrap();
        prop_assert!((back.to_dense() - a.to_dense()).amax() < 1e-12);
    }

    #[test]
    fn kernel_is_orthogonal_to_adjoint_range(seed in 0u64..100_000, n in 2usize..10, rank in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (src, tgt) = (rand_weights(n, &mut rng), rand_weights(n + 1, &mut rng));
        let r = rank.min(n);
        let a = LinearOp::dense(&src, &tgt, rand_mat(n + 1, r, &mut rng) * rand_mat(r, n, &mut rng)).unwrap();
        let (k, _) = kernel_range(&a, 1e-10).unwrap();
        let (_, ra) = kernel_range(&a.adjoint().unwrap(), 1e-10).unwrap();
        prop_assert_eq!(k.dim() + ra.dim(), n);
        prop_assert_eq!(ra.dim(), r);
        let cross = k.basis().unwrap().transpose() * src.weight_matrix() * ra.basis().unwrap();
        prop_assert!(cross.iter().all(|x| x.abs() < 1e-8));
    }

    #[test]
    fn coercivity_is_symmetric_under_inversion(seed in 0u64..100_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = rand_weights(5, &mut rng);
        let x = rand_mat(5, 5, &mut rng);
        let k = rand_mat(5, 5, &mut rng);
        let m = DMatrix::identity(5, 5) * 0.5 + &x * x.transpose() + &k - k.transpose();
        let wm = s.weight_matrix();
        let wi = wm.clone().try_inverse().unwrap();
        // W⁻¹·(sym + skew) is W-symmetric plus W-skew
        let t = LinearOp::dense(&s, &s, &wi * m).unwrap();
        let r = coercivity_check(&t, 0.1, 1e6).unwrap();
        let (alpha, beta) = (r.re_min * 0.999, 1.0 / (r.re_inv_min * 0.999));
        prop_assert!(coercivity_check(&t, alpha, beta).unwrap().passes());
        let inv = LinearOp::dense(&s, &s, t.to_dense().try_inverse().unwrap()).unwrap();
        prop_assert!(coercivity_check(&inv, 1.0 / beta, 1.0 / alpha).unwrap().passes());
    }

    #[test]
    fn wot_gap_is_a_pseudometric(seed in 0u64..100_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = rand_weights(5, &mut rng);
        let ops: Vec<LinearOp<f64>> = (0..3).map(|_| LinearOp::dense(&s, &s, rand_mat(5, 5, &mut rng)).unwrap()).collect();
        let p = ProbeSet::random(&s, 3, seed);
        let d = |i: usize, j: usize| wot_gap(&ops[i], &ops[j], &p, &p).unwrap();
        prop_assert_eq!(d(0, 1), d(1, 0));
        prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-14);
        prop_assert_eq!(d(2, 2), 0.0);
    }

    #[test]
    fn operators_are_linear(seed in 0u64..100_000, lam in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = rand_weights(7, &mut rng);
        let a = LinearOp::sparse(&s, &s, CsrMatrix::from_dense(&rand_mat(7, 7, &mut rng))).unwrap();
        let x = DVector::from_fn(7, |_, _| rng.gen_range(-1.0..1.0));
        let y = DVector::from_fn(7, |_, _| rng.gen_range(-1.0..1.0));
        let lhs = a.apply(&(&x + &y * lam));
        let rhs = a.apply(&x) + a.apply(&y) * lam;
        prop_assert!((&lhs - &rhs).amax() <= 1e-10 * lhs.amax().max(1.0));
    }
}
