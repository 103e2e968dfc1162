mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use common::*;
use skinlab_core::bulk;
use skinlab_core::evolve::{self, DensityMatrix};
use skinlab_core::lattice::{self, Construction, LatticeOperators};
use skinlab_core::liouvillian;
use skinlab_core::trajectories::{self as tj, EnsemblePlan, NoiseStream, ScriptedNoise, ZeroNoise};
use skinlab_core::{linalg, BandModel, CMat, C64};

fn ops(phi: f64, n: usize) -> LatticeOperators {
    lattice::build_obc(&cosine(phi), n, Construction::TruncateP).unwrap()
}

#[test]
fn norm_is_conserved_over_long_paths() {
    let o = ops(FRAC_PI_2, 11);
    let psi0 = evolve::site_vector(11, 6).unwrap();
    let r = tj::run_trajectory(&o, &psi0, 50.0, 0.005, &mut NoiseStream::new(3, 0)).unwrap();
    assert_eq!(r.n_steps, 10_000);
    assert!(r.max_norm_drift < 1e-9, "{:e}", r.max_norm_drift);
}

#[test]
fn without_jumps_trajectories_are_deterministic() {
    let m = BandModel::cosine(1.0, 0.2, 0.0, 0.0).unwrap();
    let o = lattice::build_obc(&m, 9, Construction::TruncateP).unwrap();
    let psi0 = evolve::site_vector(9, 5).unwrap();
    let a = tj::run_trajectory(&o, &psi0, 2.0, 0.01, &mut NoiseStream::new(1, 1)).unwrap();
    let b = evolve::propagate_semiclassical(&o, &psi0, 2.0).unwrap();
    for (x, y) in a.psi.iter().zip(&b.psi) {
        assert!((x - y).norm() < 1e-11);
    }
}

#[test]
fn scripted_increments_follow_the_stochastic_exponential() {
    let o = ops(0.7, 5);
    let psi0 = evolve::site_vector(5, 2).unwrap();
    let xs = vec![0.3, -1.2, 2.0];
    let r = tj::run_trajectory(&o, &psi0, 0.03, 0.01, &mut ScriptedNoise::new(xs.clone())).unwrap();
    let mut want = psi0.clone();
    for x in xs {
        let g = CMat::from_fn(5, 5, |i, j| o.h()[(i, j)] * 0.01 + o.p()[(i, j)] * (0.1 * x));
        want = linalg::matvec(&linalg::expm(&linalg::scale(&g, C64::new(0.0, -1.0))), &want);
    }
    for (a, b) in r.psi.iter().zip(&want) {
        assert!((a - b).norm() < 1e-12);
    }
    let z = tj::run_trajectory(&o, &psi0, 0.5, 0.01, &mut ZeroNoise).unwrap();
    let u = linalg::expm(&linalg::scale(o.h(), C64::new(0.0, -0.5)));
    let w = linalg::matvec(&u, &psi0);
    for (a, b) in z.psi.iter().zip(&w) {
        assert!((a - b).norm() < 1e-11);
    }
}

#[test]
fn time_step_validation() {
    let o = ops(0.0, 4);
    let psi0 = evolve::site_vector(4, 1).unwrap();
    assert!(tj::run_trajectory(&o, &psi0, 1.0, 0.02, &mut ZeroNoise).is_err());
    assert!(tj::run_trajectory(&o, &psi0, 1.0, 0.0, &mut ZeroNoise).is_err());
    assert!(tj::run_trajectory(&o, &psi0, 1.0037, 0.005, &mut ZeroNoise).is_err());
    assert!(EnsemblePlan::new(1.0, 0.005, 0, 1).is_err());
}

/// Exact one-step expectations of the discrete scheme by Gauss-Hermite
/// quadrature over the single normal draw: `A = E[U]` acting on `ψ` and
/// `S = E[conj(U) ⊗ U]` acting on `vec(ρ)`.
fn one_step_expectations(o: &LatticeOperators, dt: f64) -> (CMat, CMat) {
    let n = o.n_sites();
    let (x, w) = gauss_hermite(40);
    let mut a = CMat::zeros(n, n);
    let mut s = CMat::zeros(n * n, n * n);
    for (xi, wi) in x.iter().zip(&w) {
        let g = CMat::from_fn(n, n, |i, j| o.h()[(i, j)] * dt + o.p()[(i, j)] * (dt.sqrt() * xi));
        let u = linalg::unitary_from_hermitian(&g).unwrap();
        a = linalg::axpy(&a, C64::new(*wi, 0.0), &u);
        for b in 0..n {
            for c in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        s[(i + n * j, c + n * b)] += u[(j, b)].conj() * u[(i, c)] * *wi;
                    }
                }
            }
        }
    }
    (a, s)
}

#[test]
fn discretization_bias_is_first_order_and_small() {
    let n = 11;
    let o = ops(FRAC_PI_2, n);
    let psi0 = evolve::site_vector(n, 6).unwrap();
    let rho0 = DensityMatrix::site(n, 6).unwrap();
    let exact_psi = evolve::propagate_semiclassical(&o, &psi0, 3.0).unwrap().psi;
    let master = evolve::propagate_master(&liouvillian::build_liouvillian(&o), &rho0, 3.0).unwrap();
    let mut biases = Vec::new();
    for dt in [0.005, 0.0025] {
        let (a, s) = one_step_expectations(&o, dt);
        let steps = (3.0 / dt as f64).round() as usize;
        let mut psi = psi0.clone();
        let mut v = linalg::vectorize(rho0.matrix());
        for _ in 0..steps {
            psi = linalg::matvec(&a, &psi);
            v = linalg::matvec(&s, &v);
        }
        let rho = linalg::unvectorize(&v, n);
        let bias_rho = linalg::frobenius(&(rho.clone() - master.matrix().clone()));
        let se_rho = ((1.0 - linalg::frobenius(&rho).powi(2)) / 4000.0).sqrt();
        assert!(bias_rho < 0.2 * se_rho, "{bias_rho:e} vs {se_rho:e}");
        let mut worst = 0.0f64;
        let mut bias_psi = 0.0f64;
        for i in 0..n {
            let var = (rho[(i, i)].re - psi[i].norm_sqr()).max(1e-30);
            let d = (psi[i] - exact_psi[i]).norm();
            worst = worst.max(d / (var / 5000.0).sqrt());
            bias_psi = bias_psi.max(d);
        }
        assert!(worst < 0.2, "{worst}");
        biases.push(bias_psi);
    }
    let ratio = biases[0] / biases[1];
    assert!((1.6..2.4).contains(&ratio), "{ratio}");
}

#[test]
fn ensemble_tracks_effective_hamiltonian_and_master_equation() {
    let n = 11;
    let o = ops(FRAC_PI_2, n);
    let psi0 = evolve::site_vector(n, 6).unwrap();
    let e = tj::run_ensemble(&o, &psi0, 3.0, 0.005, 600, 11).unwrap();
    assert!(e.max_norm_drift < 1e-9);
    assert!(e.final_norms.iter().all(|x| (x - 1.0).abs() < 1e-9));
    let want = evolve::propagate_semiclassical(&o, &psi0, 3.0).unwrap().psi;
    for i in 0..n {
        let d = (e.mean_psi[i] - want[i]).norm();
        assert!(d <= 4.0 * e.mean_psi_standard_error[i] + 1e-12, "site {i}");
    }
    let master = evolve::propagate_master(&liouvillian::build_liouvillian(&o), &DensityMatrix::site(n, 6).unwrap(), 3.0)
        .unwrap();
    let err = linalg::frobenius(&(e.rho_estimate.clone() - master.matrix().clone()));
    assert!(err < 5.0 * e.standard_error, "{err} vs {}", e.standard_error);
    assert!((linalg::trace(&e.rho_estimate) - C64::new(1.0, 0.0)).norm() < 1e-9);
}

#[test]
fn ensemble_is_reproducible_and_order_independent() {
    let o = ops(0.4, 6);
    let psi0 = evolve::site_vector(6, 3).unwrap();
    let plan = EnsemblePlan::new(0.2, 0.01, 100, 99).unwrap();
    let a = tj::run_plan(&o, &psi0, &plan).unwrap();
    let b = tj::run_plan(&o, &psi0, &plan).unwrap();
    assert_eq!(a.rho_estimate, b.rho_estimate);
    // Leaves evaluated in reverse order, reduced in index order.
    let mut parts: Vec<_> = plan
        .leaves()
        .into_iter()
        .rev()
        .map(|r| (r.start, tj::run_leaf(&o, &psi0, &plan, r).unwrap()))
        .collect();
    parts.sort_by_key(|p| p.0);
    let total = tj::reduce_tree(parts.into_iter().map(|p| p.1).collect()).unwrap();
    let c = tj::finalize(&plan, total);
    assert_eq!(a.rho_estimate, c.rho_estimate);
    assert_eq!(a.mean_psi, c.mean_psi);
    assert_eq!(a.final_norms, c.final_norms);
    assert_eq!(plan.leaves().len(), 4);
    let single = tj::run_ensemble(&o, &psi0, 0.2, 0.01, 1, 99).unwrap();
    assert!(single.standard_error.is_nan());
}

#[test]
fn bloch_ensemble_reproduces_momentum_multiplier() {
    let m = cosine(FRAC_PI_2);
    let n_k = 16;
    let t = 1.5;
    let psi0 = tj::localized_bloch_state(n_k);
    let runs = 10_000;
    let mut acc = CMat::zeros(n_k, n_k);
    for i in 0..runs {
        let psi = tj::bloch_trajectory(&m, &psi0, t, &mut NoiseStream::new(5, i)).unwrap();
        acc = acc + linalg::outer(&psi, &psi);
    }
    let tol = 4.0 / (runs as f64).sqrt() / (2.0 * PI);
    for j in 0..n_k {
        for l in 0..n_k {
            let k = skinlab_core::band::grid_point(j, n_k);
            let kp = skinlab_core::band::grid_point(l, n_k);
            let want = bulk::multiplier(&m, k, kp, t) / (2.0 * PI);
            let got = acc[(j, l)] / runs as f64;
            assert!((got - want).norm() < tol, "({j},{l})");
        }
    }
}

#[test]
fn stroboscopic_walk_statistics() {
    let m = cosine(FRAC_PI_2);
    let psi0 = tj::localized_bloch_state(4);
    let runs = 40_000;
    let mut s2 = 0.0;
    for i in 0..runs {
        let r = tj::stroboscopic_loop(&m, &psi0, 25, 0..0, &mut NoiseStream::new(8, i)).unwrap();
        assert_eq!(r.wiener.len(), 26);
        assert_eq!(r.wiener[0], 0.0);
        s2 += r.wiener[25] * r.wiener[25];
    }
    let var = s2 / runs as f64;
    assert!((var / 25.0 - 1.0).abs() < 0.03, "{var}");
}

#[test]
fn comb_of_localized_state_is_a_single_site() {
    let c = tj::comb_amplitudes(&tj::localized_bloch_state(32), -3..4);
    for (i, z) in c.iter().enumerate() {
        let want = if i == 3 { 1.0 } else { 0.0 };
        assert!((z - C64::new(want, 0.0)).norm() < 1e-12);
    }
}

#[test]
fn stroboscopic_coherences_match_bulk_solution() {
    let m = cosine(FRAC_PI_2);
    let n_k = 128;
    let psi0 = tj::localized_bloch_state(n_k);
    let runs = 4000u64;
    let sites = -12i64..13;
    let pairs = [(0i64, 0i64), (5, 5), (-5, -5), (3, -3), (8, 2), (-10, 10)];
    let mut sum = vec![C64::new(0.0, 0.0); pairs.len()];
    let mut sum2 = vec![0.0; pairs.len()];
    for i in 0..runs {
        let r = tj::stroboscopic_loop(&m, &psi0, 10, sites.clone(), &mut NoiseStream::new(21, i)).unwrap();
        let c = &r.comb[10];
        for (q, &(a, b)) in pairs.iter().enumerate() {
            let x = c[(a + 12) as usize] * c[(b + 12) as usize].conj();
            sum[q] += x;
            sum2[q] += x.norm_sqr();
        }
    }
    for (q, &(a, b)) in pairs.iter().enumerate() {
        let mean = sum[q] / runs as f64;
        let var = (sum2[q] / runs as f64 - mean.norm_sqr()).max(0.0);
        let se = (var / runs as f64).sqrt();
        let want = bulk::bulk_wannier_element(&m, n_k, 10.0, a, b).unwrap();
        assert!((mean - want).norm() <= 4.0 * se + 1e-12, "({a},{b}): {mean} vs {want}");
    }
}
