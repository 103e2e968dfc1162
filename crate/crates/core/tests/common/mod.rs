//! Independent oracles shared by the integration tests. Nothing here calls
//! into the code under test except for plain matrix containers.

#![allow(dead_code)]

use std::f64::consts::PI;

use skinlab_core::{linalg, BandModel, CMat, C64};

pub fn cosine(phi: f64) -> BandModel {
    BandModel::cosine(1.0, 0.0, 1.0, phi).unwrap()
}

/// `R[1 + cos(k + φ)]` and `2J cos k + 2T cos 2k` by direct substitution.
pub fn eq3_p(r: f64, phi: f64, k: f64) -> f64 {
    r * (1.0 + (k + phi).cos())
}
pub fn eq3_h(j: f64, t: f64, k: f64) -> f64 {
    2.0 * j * k.cos() + 2.0 * t * (2.0 * k).cos()
}

/// Eigenvalues `2Δ[1 + cos(πα/(N+1))]` of the Hatano-Nelson `P²`.
pub fn hn_p2_eigenvalues(j1: f64, j2: f64, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (1..=n)
        .map(|a| 2.0 * (j2 - j1) * (1.0 + (PI * a as f64 / (n as f64 + 1.0)).cos()))
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Closed-form sum for the Hatano-Nelson jump operator `P_{n,m}`, 1-based
/// sites.
pub fn hn_p_closed_form(j1: f64, j2: f64, n_sites: usize) -> CMat {
    let nf = n_sites as f64 + 1.0;
    CMat::from_fn(n_sites, n_sites, |a, b| {
        let (n, m) = ((a + 1) as f64, (b + 1) as f64);
        let mut s = 0.0;
        for alpha in 1..=n_sites {
            let th = PI * alpha as f64 / nf;
            let e = (2.0 * (j2 - j1) * (1.0 + th.cos())).max(0.0).sqrt();
            s += e * (PI * n * alpha as f64 / nf).sin() * (PI * m * alpha as f64 / nf).sin();
        }
        C64::from_polar(2.0 / nf * s, PI * (n - m) / 2.0)
    })
}

/// Open-chain sine mode, 1-based sites.
pub fn sine_mode(alpha: usize, n: usize) -> Vec<f64> {
    let c = (2.0 / (n as f64 + 1.0)).sqrt();
    (1..=n)
        .map(|s| c * (PI * (s * alpha) as f64 / (n as f64 + 1.0)).sin())
        .collect()
}

/// `Σ_α |⟨φ_α|ψ⟩|² |φ_α⟩⟨φ_α|` for real sine modes.
pub fn commuting_projection(psi: &[C64]) -> CMat {
    let n = psi.len();
    let mut out = CMat::zeros(n, n);
    for alpha in 1..=n {
        let phi = sine_mode(alpha, n);
        let ov: C64 = phi.iter().zip(psi).map(|(a, b)| b * *a).sum();
        let w = ov.norm_sqr();
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += C64::new(w * phi[i] * phi[j], 0.0);
            }
        }
    }
    out
}

/// `-Σ λ ln λ` through a Jacobi eigenvalue sweep on the real symmetric
/// embedding; used where a second opinion on entropy is wanted.
pub fn entropy_real_symmetric(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[(i, j)].re).collect()).collect();
    for _ in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[p][q] * a[p][q];
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (2.0 * a[p][q]).atan2(a[q][q] - a[p][p]);
                let (c, s) = (theta.cos(), theta.sin());
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
        if off < 1e-30 {
            break;
        }
    }
    (0..n)
        .map(|i| a[i][i].clamp(0.0, 1.0))
        .filter(|&l| l > 0.0)
        .map(|l| -l * l.ln())
        .sum()
}

/// Nodes and weights of Gauss-Hermite quadrature for the standard normal
/// weight (Golub-Welsch on the Jacobi matrix with off-diagonals `√k`).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let j = CMat::from_fn(n, n, |a, b| {
        if a + 1 == b || b + 1 == a {
            C64::new((a.max(b) as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let (x, v) = linalg::hermitian_eigen(&j).unwrap();
    let w = (0..n).map(|k| v[(0, k)].norm_sqr()).collect();
    (x, w)
}

/// Deterministic pseudo-random Hermitian matrix.
pub fn random_hermitian(n: usize, seed: u64) -> CMat {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    let a = CMat::from_fn(n, n, |_, _| C64::new(next(), next()));
    CMat::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

/// Deterministic pseudo-random density matrix `A A† / tr`.
pub fn random_density(n: usize, seed: u64) -> CMat {
    let a = random_hermitian(n, seed);
    let b = &a * &a;
    let t = linalg::trace(&b).re;
    CMat::from_fn(n, n, |i, j| b[(i, j)] / t)
}

pub fn maxabs(m: &CMat) -> f64 {
    linalg::max_abs(m)
}
