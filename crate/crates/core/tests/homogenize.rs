use approx::assert_relative_eq;
use homlab::elliptic::{harmonic_mean, GridDomain};
use homlab::homogenize::*;
use homlab::{Complex64, Error};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn diag(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(v))
}

#[test]
fn laminate_limit_examples() {
    let (h, m) = laminate_limit(two_phase(1.0, 4.0)).unwrap();
    assert_relative_eq!(h, 1.6, epsilon = 1e-10);
    assert_relative_eq!(m, 2.5, epsilon = 1e-10);
    let (h, m) = laminate_limit(|_| 3.25).unwrap();
    assert_relative_eq!(h, 3.25, epsilon = 1e-12);
    assert_relative_eq!(m, 3.25, epsilon = 1e-12);
    let (h, m) = laminate_limit(sine_profile(2.0, 1.0)).unwrap();
    assert_relative_eq!(h, 3f64.sqrt(), epsilon = 1e-10);
    assert_relative_eq!(m, 2.0, epsilon = 1e-10);
}

#[test]
fn quadrature_oracle_for_sine_profile() {
    // Midpoint rule on a fine grid is spectrally accurate for smooth periodic integrands.
    let n = 4096;
    let s: f64 = (0..n).map(|k| 1.0 / (2.0 + (2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n as f64).sin())).sum();
    assert_relative_eq!(s / n as f64, 0.5773503, epsilon = 1e-7);
    assert_relative_eq!(integrate_period(|y| 1.0 / (2.0 + (2.0 * std::f64::consts::PI * y).sin()), 1e-12), s / n as f64, epsilon = 1e-12);
}

#[test]
fn complex_laminate_limit() {
    let z = Complex64::new(2.0, 0.3);
    let (h, m) = laminate_limit(sine_profile(z, 1.0)).unwrap();
    assert!((m - z).norm() < 1e-10);
    // ∫ dy/(z + sin 2πy) = 1/sqrt(z² − 1) on the principal branch for Re z > 1.
    assert!((h - (z * z - 1.0).sqrt()).norm() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn harmonic_below_arithmetic(a in 0.2f64..5.0, b in 0.2f64..5.0) {
        let (h, m) = laminate_limit(two_phase(a, b)).unwrap();
        prop_assert!(h <= m + 1e-12);
        if (a - b).abs() < 1e-14 {
            prop_assert!((h - m).abs() < 1e-12);
        } else {
            prop_assert!(m - h > 1e-12);
        }
    }

    #[test]
    fn sine_profile_means_are_ordered(mean in 1.5f64..4.0, amp in 0.0f64..1.0) {
        let (h, m) = laminate_limit(sine_profile(mean, amp)).unwrap();
        prop_assert!(h <= m + 1e-12);
        prop_assert!((m - mean).abs() < 1e-10);
    }
}

#[test]
fn constant_cell_has_zero_corrector() {
    let a = diag(&[2.0, 3.0]);
    let field = homlab::elliptic::CoefficientField::constant(&GridDomain::unit(2, 8).unwrap(), a.clone()).unwrap();
    let s = cell_problem(&field, &[0.3, -0.7]).unwrap();
    assert!(s.corrector.amax() < 1e-12);
    assert_eq!(homogenized_tensor(&field).unwrap().map(|x| (x * 1e10).round() / 1e10), a);
}

#[test]
fn laminate_cell_corrector_matches_1d_oracle() {
    let n = 32;
    let dom = GridDomain::unit(2, n).unwrap();
    let f = homlab::elliptic::CoefficientField::scalar(&dom, |x| if x[0] < 0.5 { 1.0 } else { 4.0 }).unwrap();
    let s = cell_problem(&f, &[1.0, 0.0]).unwrap();
    assert!(s.flux_residual < 1e-9);
    // 1D oracle: a (1 + w') = α_h, so w' = α_h/a − 1 and w is piecewise linear.
    let ah = harmonic_mean(&[1.0, 4.0]);
    let w = &s.corrector;
    let node = |i: usize, j: usize| j * n + i;
    for j in 0..n {
        for i in 0..n {
            assert_relative_eq!(w[node(i, j)], w[node(i, 0)], epsilon = 1e-10);
            let slope = (w[node((i + 1) % n, j)] - w[node(i, j)]) * n as f64;
            let a = if (i as f64 + 0.5) / (n as f64) < 0.5 { 1.0 } else { 4.0 };
            assert_relative_eq!(slope, ah / a - 1.0, epsilon = 1e-8);
        }
    }
    let s2 = cell_problem(&f, &[0.0, 1.0]).unwrap();
    assert!(s2.corrector.amax() < 1e-10);
}

#[test]
fn laminate_cell_tensor() {
    let f = homlab::elliptic::CoefficientField::scalar(&GridDomain::unit(2, 128).unwrap(), |x| if x[0] < 0.5 { 1.0 } else { 4.0 })
        .unwrap();
    let (a, res) = homogenized_tensor_report(&f).unwrap();
    assert!(res < 1e-9);
    assert!((a[(0, 0)] - 1.6).abs() / 1.6 < 1e-2);
    assert!((a[(1, 1)] - 2.5).abs() / 2.5 < 1e-2);
    assert!(a[(0, 1)].abs() < 1e-8 && a[(1, 0)].abs() < 1e-8);
}

#[test]
fn laminate_cell_tensor_converges_under_refinement() {
    // Sine laminate: cell-averaged sampling converges to (√3, 2).
    let err = |n: usize| {
        let f = homlab::elliptic::CoefficientField::scalar(&GridDomain::unit(2, n).unwrap(), |x| {
            2.0 + (2.0 * std::f64::consts::PI * x[0]).sin()
        })
        .unwrap();
        let a = homogenized_tensor(&f).unwrap();
        (a[(0, 0)] - 3f64.sqrt()).abs() + (a[(1, 1)] - 2.0).abs()
    };
    let (e1, e2, e3) = (err(8), err(16), err(32));
    assert!(e2 < e1 && e3 < e2, "{e1:e} {e2:e} {e3:e}");
    assert!(e3 < 1e-2);
}

#[test]
fn checkerboard_tensor_is_geometric_mean() {
    let dom = GridDomain::unit(2, 256).unwrap();
    let f = homlab::elliptic::CoefficientField::from_fn(&dom, checkerboard(2, 1.0, 4.0)).unwrap();
    let (a, res) = homogenized_tensor_report(&f).unwrap();
    assert!(res < 1e-9);
    for i in 0..2 {
        assert!((a[(i, i)] - 2.0).abs() / 2.0 < 2e-2, "{a}");
    }
    assert!(a[(0, 1)].abs() < 1e-8);
    assert!((a[(0, 1)] - a[(1, 0)]).abs() < 1e-8);
}

#[test]
fn checkerboard_flux_is_curl_free_in_mean() {
    // a v_ξ is divergence free in the periodic sense: ⟨a v_ξ, grad_# φ⟩ = 0 for every basis φ.
    let dom = GridDomain::unit(2, 32).unwrap();
    let f = homlab::elliptic::CoefficientField::from_fn(&dom, checkerboard(2, 1.0, 4.0)).unwrap();
    for xi in [[1.0, 0.0], [0.0, 1.0], [0.6, -0.8]] {
        assert!(cell_problem(&f, &xi).unwrap().flux_residual < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn cell_tensor_inherits_bounds_and_symmetry(vals in proptest::collection::vec(0.5f64..3.0, 16)) {
        let dom = GridDomain::unit(2, 8).unwrap();
        let f = homlab::elliptic::CoefficientField::from_fn(&dom, |x| {
            let i = ((x[0] * 4.0) as usize).min(3) + 4 * ((x[1] * 4.0) as usize).min(3);
            DMatrix::identity(2, 2) * vals[i]
        })
        .unwrap();
        let a = homogenized_tensor(&f).unwrap();
        prop_assert!((&a - a.transpose()).amax() < 1e-8);
        let e = a.symmetric_eigenvalues();
        prop_assert!(e.min() >= 0.5 - 1e-8);
        prop_assert!(e.max() <= 3.0 + 1e-8);
    }
}

#[test]
fn sequence_fields_respect_declared_bounds() {
    let seq = CoefficientSequence::<f64>::laminate(sine_profile(2.0, 1.0), 1.0, 3.0).unwrap();
    for n in [1, 3, 8] {
        let dom = MeshRule::default_for(1).grid(&[0.0], &[1.0], n).unwrap();
        assert_eq!(dom.cells()[0], 32 * n);
        let f = seq.field(n, &dom).unwrap();
        assert!(f.membership(1.0, 3.0).unwrap().passes());
    }
    let bad = CoefficientSequence::<f64>::laminate(sine_profile(2.0, 1.0), 1.5, 3.0).unwrap();
    let dom = GridDomain::unit(1, 64).unwrap();
    assert!(matches!(bad.field(1, &dom), Err(Error::Coercivity(_))));
    assert!(CoefficientSequence::<f64>::laminate(|_| 1.0, 2.0, 1.0).is_err());
}

#[test]
fn budget_guard_refuses_large_runs() {
    let seq = CoefficientSequence::<f64>::laminate(two_phase(1.0, 4.0), 1.0, 4.0).unwrap();
    let mut o = ExperimentOptions::unit(2);
    o.budget = 10_000;
    let r = hconvergence_experiment(&seq, &|_| 1.0, Some(&diag(&[1.6, 2.5])), &[1, 2, 64], &o);
    assert!(matches!(r, Err(Error::MeshRuleViolation(_))));
}

#[test]
fn constant_sequence_is_at_solver_tolerance() {
    let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, -0.5, 2.0]);
    let seq = CoefficientSequence::constant(m.clone(), 1.9, 2.2).unwrap();
    let mut o = ExperimentOptions::unit(2);
    o.rule = MeshRule { cells_per_period: 8 };
    let r = schur_equiv_check(&seq, &|_| 1.0, &m, &[1, 2, 4], &o).unwrap();
    for row in &r.rows {
        assert!(row.error() < 1e-10, "{}", row.error());
        assert!(row.tau.unwrap().max() < 1e-10);
    }
    assert!(r.joint_passes());
    let adj = adjoint_symmetry_check(&seq, &|_| 1.0, &m, &[1, 2, 4], &o).unwrap();
    assert!(adj.passes() && adj.adjoint.joint_passes());
}

#[test]
fn one_dimensional_sine_family_converges_to_harmonic_mean() {
    let seq = CoefficientSequence::<f64>::laminate(sine_profile(2.0, 1.0), 1.0, 3.0).unwrap();
    let mut o = ExperimentOptions::unit(1);
    o.rule = MeshRule { cells_per_period: 64 };
    let r = schur_equiv_check(&seq, &|_| 1.0, &DMatrix::from_element(1, 1, 3f64.sqrt()), &default_n_list(1), &o).unwrap();
    assert!(r.final_error() < 2e-2, "{}", r.final_error());
    assert!(r.passes() && r.tau_passes());
    let wrong = hconvergence_experiment(&seq, &|_| 1.0, Some(&DMatrix::from_element(1, 1, 2.0)), &default_n_list(1), &o).unwrap();
    assert!(wrong.final_error() > 5e-2);
    assert!(!wrong.passes());
}

#[test]
fn extrapolated_limit_is_flagged() {
    let seq = CoefficientSequence::<f64>::laminate(sine_profile(2.0, 1.0), 1.0, 3.0).unwrap();
    let o = ExperimentOptions::unit(1);
    let est = hconvergence_experiment(&seq, &|_| 1.0, None, &default_n_list(1), &o).unwrap();
    assert!(est.estimated && est.candidate.is_none());
    let exact = hconvergence_experiment(&seq, &|_| 1.0, Some(&DMatrix::from_element(1, 1, 3f64.sqrt())), &default_n_list(1), &o)
        .unwrap();
    let (a, b) = (&est.rows.last().unwrap().limit_pairings, &exact.rows.last().unwrap().limit_pairings);
    let scale = b.iter().fold(0.0f64, |s, x| s.max(x.abs()));
    for (x, y) in a.iter().zip(b) {
        assert!((x - y).abs() < 2e-2 * scale);
    }
    assert!(hconvergence_experiment(&seq, &|_| 1.0, None, &[1, 2], &o).is_err());
}

#[test]
fn qdind_constant_and_two_phase() {
    let o = ExperimentOptions::unit(1);
    let c = qdind_check(&CoefficientSequence::<f64>::laminate(|_| 2.5, 1.0, 3.0).unwrap(), &[1, 2, 4], &o).unwrap();
    assert!(c.all_vanish() && c.passes());
    let t = qdind_check(&CoefficientSequence::<f64>::laminate(two_phase(1.0, 4.0), 1.0, 4.0).unwrap(), &[1, 2, 4, 8], &o).unwrap();
    assert_relative_eq!(t.harmonic, 1.6, epsilon = 1e-10);
    assert_relative_eq!(t.arithmetic, 2.5, epsilon = 1e-10);
}

#[test]
fn qdind_sine_gaps_vanish_together() {
    let o = ExperimentOptions::unit(1);
    let seq = CoefficientSequence::<f64>::laminate(sine_profile(2.0, 1.0), 1.0, 3.0).unwrap();
    let r = qdind_check(&seq, &default_n_list(1), &o).unwrap();
    assert!(r.correlation.unwrap() > 0.9, "{:?}", r.correlation);
    assert!(r.passes());
}

#[test]
fn pearson_oracle() {
    assert_relative_eq!(pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap(), 1.0, epsilon = 1e-14);
    assert_relative_eq!(pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0, epsilon = 1e-14);
    assert!(pearson(&[1.0, 1.0], &[1.0, 2.0]).is_none());
}

#[test]
fn real_symmetric_adjoint_reports_are_identical() {
    let seq = CoefficientSequence::<f64>::laminate(sine_profile(2.0, 1.0), 1.0, 3.0).unwrap();
    let o = ExperimentOptions::unit(1);
    let r = adjoint_symmetry_check(&seq, &|_| 1.0, &DMatrix::from_element(1, 1, 3f64.sqrt()), &[1, 4, 16], &o).unwrap();
    assert!(r.max_difference() < 1e-12);
    assert!(r.passes());
}

#[test]
fn complex_family_and_its_adjoint() {
    let z = Complex64::new(2.0, 0.3);
    let seq = CoefficientSequence::laminate(sine_profile(z, 1.0), 0.9, 3.5).unwrap();
    let (h, _) = laminate_limit(sine_profile(z, 1.0)).unwrap();
    let o = ExperimentOptions::unit(1);
    let r = adjoint_symmetry_check(&seq, &|_| Complex64::new(1.0, 0.0), &DMatrix::from_element(1, 1, h), &default_n_list(1), &o)
        .unwrap();
    assert!(r.primal.joint_passes(), "{}", r.primal.final_error());
    assert!(r.adjoint.joint_passes());
    assert!(r.passes());
}

#[test]
fn nonsymmetric_constant_and_its_adjoint() {
    let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, -0.2, 1.5]);
    let seq = CoefficientSequence::constant(m.clone(), 1.2, 2.5).unwrap();
    let mut o = ExperimentOptions::unit(2);
    o.rule = MeshRule { cells_per_period: 6 };
    let r = adjoint_symmetry_check(&seq, &|x| x[0] + 1.0, &m, &[1, 2], &o).unwrap();
    assert!(r.passes() && r.adjoint.joint_passes());
    // Constant M and Mᵀ give the same u; the fluxes M grad u and Mᵀ grad u differ.
    let p = &r.primal.rows[0].limit_flux_pairings;
    let a = &r.adjoint.rows[0].limit_flux_pairings;
    assert!(p.iter().zip(a).any(|(x, y)| (x - y).abs() > 1e-6));
}

#[test]
fn mean_of_two_phase_cells() {
    assert_relative_eq!(harmonic_mean(&[1.0, 4.0]), 1.6, epsilon = 1e-14);
}

#[test]
fn two_dimensional_laminate_sequence() {
    let seq = CoefficientSequence::<f64>::laminate(two_phase(1.0, 4.0), 1.0, 4.0).unwrap();
    let o = ExperimentOptions::unit(2);
    let r = schur_equiv_check(&seq, &|_| 1.0, &diag(&[1.6, 2.5]), &default_n_list(2), &o).unwrap();
    let last = r.rows.last().unwrap();
    assert_eq!(last.cells, 256);
    assert!(last.error() < 5e-2, "{}", last.error());
    assert!(r.passes());
    // Every Schur gap decays, roughly like 1/n over the last doublings.
    let taus: Vec<[f64; 4]> = r.rows.iter().map(|x| x.tau.unwrap().as_array()).collect();
    for k in 0..4 {
        for w in taus[2..].windows(2) {
            assert!(w[1][k] < 0.7 * w[0][k], "component {k}: {taus:?}");
        }
        assert!(taus[taus.len() - 1][k] < 0.25 * taus[0][k]);
    }
}

#[test]
fn checkerboard_fine_scale_simulation_agrees_with_geometric_mean() {
    let seq = CoefficientSequence::<f64>::periodic(checkerboard(2, 1.0, 4.0), 1.0, 4.0).unwrap();
    let o = ExperimentOptions::unit(2);
    let r = hconvergence_experiment(&seq, &|_| 1.0, Some(&(DMatrix::identity(2, 2) * 2.0)), &[2, 4, 8, 16], &o).unwrap();
    assert!(r.final_error() < 5e-2, "{}", r.final_error());
    assert!(r.passes());
    // A wrong isotropic candidate (the arithmetic mean) stays visibly off.
    let wrong = hconvergence_experiment(&seq, &|_| 1.0, Some(&(DMatrix::identity(2, 2) * 2.5)), &[16], &o).unwrap();
    assert!(wrong.final_error() > 0.1);
}
