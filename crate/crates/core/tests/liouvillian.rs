mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use common::*;
use skinlab_core::lattice::{self, Construction, LatticeOperators};
use skinlab_core::liouvillian::{self, DEFAULT_DIM_CAP};
use skinlab_core::{linalg, CMat, C64};

fn ops(phi: f64, n: usize) -> LatticeOperators {
    lattice::build_obc(&cosine(phi), n, Construction::TruncateP).unwrap()
}

/// Master-equation right side written out elementwise.
fn rhs_elementwise(o: &LatticeOperators, rho: &CMat) -> CMat {
    let n = rho.nrows();
    let (h, p) = (o.h(), o.p());
    let p2 = &(p * p);
    CMat::from_fn(n, n, |i, j| {
        let mut s = C64::new(0.0, 0.0);
        for k in 0..n {
            s += C64::new(0.0, -1.0) * (h[(i, k)] * rho[(k, j)] - rho[(i, k)] * h[(k, j)]);
            s -= (p2[(i, k)] * rho[(k, j)] + rho[(i, k)] * p2[(k, j)]) * 0.5;
            for l in 0..n {
                s += p[(i, k)] * rho[(k, l)] * p[(l, j)];
            }
        }
        s
    })
}

#[test]
fn kronecker_form_reproduces_master_equation() {
    let o = ops(0.9, 6);
    let lm = liouvillian::build_liouvillian(&o);
    for seed in 0..20 {
        let rho = random_hermitian(6, seed);
        let d = linalg::max_abs_diff(&lm.apply(&rho), &rhs_elementwise(&o, &rho));
        assert!(d < 1e-12, "{d:e}");
    }
}

#[test]
fn trace_and_hermiticity_preservation() {
    let hn = lattice::build_hatano_nelson(1.0, 2.0, 7).unwrap();
    for o in [ops(FRAC_PI_4, 7), hn] {
        let lm = liouvillian::build_liouvillian(&o);
        for seed in 0..50 {
            let out = lm.apply(&random_hermitian(7, 100 + seed));
            assert!(linalg::trace(&out).norm() < 1e-10);
            assert!(linalg::hermiticity_error(&out) < 1e-10);
        }
    }
}

#[test]
fn unitary_limit_spectrum() {
    let mut h = std::collections::BTreeMap::new();
    h.insert(1, C64::new(1.0, 0.0));
    h.insert(-1, C64::new(1.0, 0.0));
    let m = skinlab_core::BandModel::new(h, Default::default(), "hop").unwrap();
    let o = lattice::build_obc(&m, 5, Construction::TruncateP).unwrap();
    let lm = liouvillian::build_liouvillian(&o);
    let got = liouvillian::liouvillian_spectrum(&lm, DEFAULT_DIM_CAP, false).unwrap();
    let e: Vec<f64> = (1..=5).map(|a| 2.0 * (std::f64::consts::PI * a as f64 / 6.0).cos()).collect();
    let want: Vec<C64> = e
        .iter()
        .flat_map(|&ea| e.iter().map(move |&eb| C64::new(0.0, eb - ea)))
        .collect();
    assert!(linalg::multiset_distance(&got.eigenvalues, &want) < 1e-10);
}

#[test]
fn commuting_spectrum_closed_form() {
    for n in [3, 5] {
        let lm = liouvillian::build_liouvillian(&ops(0.0, n));
        let spec = liouvillian::liouvillian_spectrum(&lm, DEFAULT_DIM_CAP, true).unwrap();
        let want: Vec<C64> = liouvillian::analytic_commuting_spectrum(1.0, 1.0, n)
            .into_iter()
            .map(|x| x.2)
            .collect();
        assert_eq!(want.len(), n * n);
        assert!(linalg::multiset_distance(&spec.eigenvalues, &want) < 1e-8);
        assert!(spec.max_relative_residual.unwrap() <= 1e-8);
    }
    // Eigenvector |φ_α⟩⟨φ_β| for one pair, built from the sine modes.
    let n = 5;
    let lm = liouvillian::build_liouvillian(&ops(0.0, n));
    let (a, b) = (2, 4);
    let (pa, pb) = (sine_mode(a, n), sine_mode(b, n));
    let rho = CMat::from_fn(n, n, |i, j| C64::new(pa[i] * pb[j], 0.0));
    let lam = liouvillian::analytic_commuting_spectrum(1.0, 1.0, n)
        .into_iter()
        .find(|x| x.0 == a && x.1 == b)
        .unwrap()
        .2;
    let out = lm.apply(&rho);
    assert!(linalg::max_abs_diff(&out, &linalg::scale(&rho, lam)) < 1e-12);
}

#[test]
fn kernel_dimensions() {
    for n in [5, 7, 11] {
        for (phi, want) in [(0.0, n), (FRAC_PI_4, 1), (FRAC_PI_2, 1)] {
            let lm = liouvillian::build_liouvillian(&ops(phi, n));
            let rep = liouvillian::stationary_states(&lm, DEFAULT_DIM_CAP).unwrap();
            assert_eq!(rep.zero_eigenvalue_multiplicity, want, "N {n} phi {phi}");
            assert!(!rep.ill_conditioned);
            assert!(rep.singular_value_gap() >= 1e3);
            assert!(rep.kernel_overlap(&liouvillian::maximally_mixed(n)) >= 1.0 - 1e-8);
            for b in &rep.kernel_basis {
                assert!(linalg::max_abs(&lm.apply(b)) <= 1e-8);
            }
        }
    }
}

#[test]
fn bidiagonal_state_is_stationary_for_symmetric_operators() {
    for n in [5, 11, 21] {
        let o = ops(0.0, n);
        assert!(linalg::max_abs_diff(&linalg::transpose(o.p()), o.p()) < 1e-12);
        let lm = liouvillian::build_liouvillian(&o);
        let rsa = liouvillian::rho_sa(n).unwrap();
        assert!(linalg::max_abs(&lm.apply(&rsa)) < 1e-8);
        if n <= 11 {
            let rep = liouvillian::stationary_states(&lm, DEFAULT_DIM_CAP).unwrap();
            assert!(rep.kernel_overlap(&rsa) >= 1.0 - 1e-8);
        }
    }
    // Not stationary once P loses its reflection symmetry.
    let lm = liouvillian::build_liouvillian(&ops(FRAC_PI_2, 11));
    assert!(linalg::max_abs(&lm.apply(&liouvillian::rho_sa(11).unwrap())) > 1e-3);
}

#[test]
fn maximally_mixed_is_always_stationary() {
    let hn = lattice::build_hatano_nelson(1.0, 2.0, 9).unwrap();
    for o in [ops(0.0, 9), ops(1.3, 9), hn] {
        let lm = liouvillian::build_liouvillian(&o);
        assert!(linalg::max_abs(&lm.apply(&liouvillian::maximally_mixed(9))) < 1e-12);
    }
}

#[test]
fn hatano_nelson_kernel_is_simple() {
    let o = lattice::build_hatano_nelson(1.0, 2.0, 21).unwrap();
    let lm = liouvillian::build_liouvillian(&o);
    let rep = liouvillian::stationary_states(&lm, DEFAULT_DIM_CAP).unwrap();
    assert_eq!(rep.zero_eigenvalue_multiplicity, 1);
    let r = &rep.kernel_basis[0];
    assert!(linalg::max_abs_diff(r, &liouvillian::maximally_mixed(21)) < 1e-10);
}

#[test]
fn spectrum_structure() {
    let hn = lattice::build_hatano_nelson(1.0, 2.0, 9).unwrap();
    for o in [ops(FRAC_PI_2, 9), ops(0.0, 9), hn] {
        let lm = liouvillian::build_liouvillian(&o);
        let spec = liouvillian::liouvillian_spectrum(&lm, DEFAULT_DIM_CAP, false).unwrap();
        let c = liouvillian::check_liouvillian(&lm, &spec);
        assert!(c.trace_preservation < 1e-10);
        assert!(c.conjugation_asymmetry < 1e-8);
        assert!(c.max_real_part <= 1e-8);
    }
}

#[test]
fn projection_onto_kernel_matches_sine_basis() {
    let n = 7;
    let lm = liouvillian::build_liouvillian(&ops(0.0, n));
    let rep = liouvillian::stationary_states(&lm, DEFAULT_DIM_CAP).unwrap();
    let mut psi = vec![C64::new(0.0, 0.0); n];
    psi[2] = C64::new(1.0, 0.0);
    let rho0 = linalg::outer(&psi, &psi);
    let got = rep.project(&rho0).unwrap();
    assert!(linalg::max_abs_diff(&got, &commuting_projection(&psi)) < 1e-10);
}
