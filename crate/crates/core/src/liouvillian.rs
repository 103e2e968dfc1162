//! Dense Lindblad superoperator with a single Hermitian jump operator `P`:
//!
//! `dρ/dt = -i[H, ρ] + PρP - ½{P², ρ}`.
//!
//! With column-stacking `vec`, the matrix is
//! `L = -i(I⊗H - Hᵀ⊗I) - ½(I⊗P² + (P²)ᵀ⊗I) + Pᵀ⊗P`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::lattice::LatticeOperators;
use crate::linalg::{self, ZERO};
use crate::{CMat, Error, Result, C64};

/// Default cap on `N²` for dense spectra.
pub const DEFAULT_DIM_CAP: usize = 4096;
/// Relative zero-eigenvalue threshold.
pub const ZERO_TOL: f64 = 1e-8;
/// Relative eigenpair residual bound.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct LiouvillianMatrix {
    n_sites: usize,
    h: CMat,
    p: CMat,
    p2: CMat,
    l: CMat,
}

impl LiouvillianMatrix {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }
    /// The `N² × N²` matrix.
    pub fn matrix(&self) -> &CMat {
        &self.l
    }
    pub fn dim(&self) -> usize {
        self.n_sites * self.n_sites
    }

    /// `L vec(ρ)` reshaped to a matrix.
    pub fn apply(&self, rho: &CMat) -> CMat {
        let v = linalg::vectorize(rho);
        linalg::unvectorize(&linalg::matvec(&self.l, &v), self.n_sites)
    }

    /// Right side of the master equation evaluated with matrix products,
    /// independent of the Kronecker assembly.
    pub fn apply_direct(&self, rho: &CMat) -> CMat {
        lindblad_rhs(&self.h, &self.p, &self.p2, rho)
    }

    /// `1e-8 · max(1, ‖L‖_maxabs / N)`.
    pub fn zero_tolerance(&self) -> f64 {
        ZERO_TOL * (linalg::max_abs(&self.l) / self.n_sites as f64).max(1.0)
    }
}

/// `-i[H, ρ] + PρP - ½{P², ρ}`.
pub fn lindblad_rhs(h: &CMat, p: &CMat, p2: &CMat, rho: &CMat) -> CMat {
    let hr = h * rho;
    let rh = rho * h;
    let prp = &(p * rho) * p;
    let p2r = p2 * rho;
    let rp2 = rho * p2;
    let n = rho.nrows();
    CMat::from_fn(n, n, |i, j| {
        C64::new(0.0, -1.0) * (hr[(i, j)] - rh[(i, j)]) + prp[(i, j)]
            - (p2r[(i, j)] + rp2[(i, j)]) * 0.5
    })
}

pub fn build_liouvillian(ops: &LatticeOperators) -> LiouvillianMatrix {
    let n = ops.n_sites();
    let (h, p, p2) = (ops.h(), ops.p(), ops.p2());
    // K = -iH - ½P²; L = I⊗K + conj(K)⊗I + Pᵀ⊗P.
    let k = CMat::from_fn(n, n, |i, j| C64::new(0.0, -1.0) * h[(i, j)] - p2[(i, j)] * 0.5);
    let d = n * n;
    let mut l = CMat::zeros(d, d);
    for b in 0..n {
        for a in 0..n {
            let col = a + n * b;
            // I⊗K: row (i, b), K[i, a].
            for i in 0..n {
                l[(i + n * b, col)] += k[(i, a)];
            }
            // conj(K)⊗I: row (a, j), conj(K[j, b]).
            for j in 0..n {
                l[(a + n * j, col)] += k[(j, b)].conj();
            }
            // Pᵀ⊗P: row (i, j), P[b, j] P[i, a].
            for j in 0..n {
                let pbj = p[(b, j)];
                if pbj == ZERO {
                    continue;
                }
                for i in 0..n {
                    l[(i + n * j, col)] += pbj * p[(i, a)];
                }
            }
        }
    }
    LiouvillianMatrix {
        n_sites: n,
        h: h.clone(),
        p: p.clone(),
        p2: p2.clone(),
        l,
    }
}

/// Dense Liouvillian spectrum.
#[derive(Debug, Clone)]
pub struct SuperSpectrum {
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: Vec<C64>,
    /// Right eigenvectors in the same order, when requested.
    pub eigenvectors: Option<CMat>,
    /// Largest `‖L v - λ v‖₂ / ‖L‖₂` (only when eigenvectors are computed).
    pub max_relative_residual: Option<f64>,
}

pub fn liouvillian_spectrum(
    lm: &LiouvillianMatrix,
    cap: usize,
    with_vectors: bool,
) -> Result<SuperSpectrum> {
    let d = lm.dim();
    if d > cap {
        return Err(Error::SizeCap { dim: d, cap });
    }
    if !with_vectors {
        let mut eigenvalues = linalg::eigenvalues(&lm.l)?;
        eigenvalues.sort_by(linalg::cmp_re_im);
        return Ok(SuperSpectrum {
            eigenvalues,
            eigenvectors: None,
            max_relative_residual: None,
        });
    }
    let (vals, vecs) = linalg::eigen(&lm.l)?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&x, &y| linalg::cmp_re_im(&vals[x], &vals[y]));
    let eigenvalues: Vec<C64> = order.iter().map(|&i| vals[i]).collect();
    let mut v = CMat::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        let norm = (0..d).map(|i| vecs[(i, src)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..d {
            v[(i, dst)] = vecs[(i, src)] / norm;
        }
    }
    let scale = linalg::spectral_norm_estimate(&lm.l, 30).max(f64::MIN_POSITIVE);
    let lv = &lm.l * &v;
    let mut worst = 0.0f64;
    for j in 0..d {
        let r = (0..d)
            .map(|i| (lv[(i, j)] - eigenvalues[j] * v[(i, j)]).norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(r / scale);
    }
    if worst > RESIDUAL_TOL {
        return Err(Error::NumericalFailure {
            context: "liouvillian eigendecomposition",
            residual: worst,
        });
    }
    Ok(SuperSpectrum {
        eigenvalues,
        eigenvectors: Some(v),
        max_relative_residual: Some(worst),
    })
}

/// Kernel of the Liouvillian.
#[derive(Debug, Clone)]
pub struct StationaryReport {
    /// Number of eigenvalues with `|λ| ≤ tolerance`.
    pub zero_eigenvalue_multiplicity: usize,
    pub tolerance: f64,
    /// Hermitian, Frobenius-orthonormal before rescaling. The first element
    /// carries all of the trace and is rescaled to unit trace; the others
    /// are traceless.
    pub kernel_basis: Vec<CMat>,
    /// Orthonormal right null vectors of `L` (columns, length `N²`).
    pub kernel_vectors: CMat,
    /// Orthonormal null vectors of `L†`.
    pub left_kernel_vectors: CMat,
    /// Largest singular value inside the kernel.
    pub largest_kernel_singular_value: f64,
    /// Smallest singular value outside the kernel.
    pub smallest_nonkernel_singular_value: f64,
    /// Ill-conditioning flag: the non-kernel singular values come within
    /// `10 ×` the zero tolerance, or eigenvalue and singular-value counts
    /// disagree.
    pub ill_conditioned: bool,
}

impl StationaryReport {
    /// Ratio between the first non-kernel and the last kernel singular
    /// value.
    pub fn singular_value_gap(&self) -> f64 {
        if self.largest_kernel_singular_value > 0.0 {
            self.smallest_nonkernel_singular_value / self.largest_kernel_singular_value
        } else {
            f64::INFINITY
        }
    }

    /// `‖Π vec(ρ)‖² / ‖vec(ρ)‖²` for the orthogonal projector `Π` onto the
    /// kernel.
    pub fn kernel_overlap(&self, rho: &CMat) -> f64 {
        let v = linalg::vectorize(rho);
        let total: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let k = &self.kernel_vectors;
        let mut inside = 0.0;
        for c in 0..k.ncols() {
            let dot: C64 = (0..k.nrows()).map(|i| k[(i, c)].conj() * v[i]).sum();
            inside += dot.norm_sqr();
        }
        inside / total
    }

    /// Long-time limit `R (W†R)⁻¹ W† vec(ρ₀)` where `R` and `W` span the
    /// right and left kernels.
    pub fn project(&self, rho0: &CMat) -> Result<CMat> {
        let n = rho0.nrows();
        let r = &self.kernel_vectors;
        let w = &self.left_kernel_vectors;
        let v0 = linalg::vectorize(rho0);
        let wh = linalg::dagger(w);
        let g = &wh * r;
        let rhs = CMat::from_fn(v0.len(), 1, |i, _| v0[i]);
        let b = &wh * &rhs;
        let c = linalg::solve(&g, &b);
        let out = r * &c;
        let v: Vec<C64> = (0..out.nrows()).map(|i| out[(i, 0)]).collect();
        Ok(linalg::hermitian_part(&linalg::unvectorize(&v, n)))
    }
}

pub fn stationary_states(lm: &LiouvillianMatrix, cap: usize) -> Result<StationaryReport> {
    let d = lm.dim();
    if d > cap {
        return Err(Error::SizeCap { dim: d, cap });
    }
    stationary_states_of_matrix(&lm.l, lm.n_sites, lm.zero_tolerance())
}

/// Kernel analysis of a raw `N² × N²` Liouvillian with zero tolerance `tol`.
pub fn stationary_states_of_matrix(l: &CMat, n: usize, tol: f64) -> Result<StationaryReport> {
    let d = n * n;
    check_square("L", l, d)?;
    let eigs = linalg::eigenvalues(l)?;
    let mult = eigs.iter().filter(|z| z.norm() <= tol).count();
    let (u, s, v) = linalg::svd(l)?;
    let sv_count = s.iter().filter(|&&x| x <= tol).count();
    let dim = mult.max(1).min(d);
    let largest_kernel = s[d - dim];
    let smallest_nonkernel = if dim < d { s[d - dim - 1] } else { 0.0 };
    let ill_conditioned = sv_count != mult || smallest_nonkernel < 10.0 * tol;

    let kernel_vectors = CMat::from_fn(d, dim, |i, c| v[(i, d - dim + c)]);
    let left_kernel_vectors = CMat::from_fn(d, dim, |i, c| u[(i, d - dim + c)]);
    let kernel_basis = hermitian_basis(&kernel_vectors, n, dim);
    Ok(StationaryReport {
        zero_eigenvalue_multiplicity: mult,
        tolerance: tol,
        kernel_basis,
        kernel_vectors,
        left_kernel_vectors,
        largest_kernel_singular_value: largest_kernel,
        smallest_nonkernel_singular_value: smallest_nonkernel,
        ill_conditioned,
    })
}

/// Picks `dim` real-independent Hermitian matrices from the span of the
/// kernel vectors and rotates them so only the first has nonzero trace.
fn hermitian_basis(kernel: &CMat, n: usize, dim: usize) -> Vec<CMat> {
    let mut cands: Vec<CMat> = Vec::with_capacity(2 * kernel.ncols());
    for c in 0..kernel.ncols() {
        let col: Vec<C64> = (0..kernel.nrows()).map(|i| kernel[(i, c)]).collect();
        let k = linalg::unvectorize(&col, n);
        let kh = linalg::dagger(&k);
        cands.push(CMat::from_fn(n, n, |i, j| (k[(i, j)] + kh[(i, j)]) * 0.5));
        cands.push(CMat::from_fn(n, n, |i, j| {
            (k[(i, j)] - kh[(i, j)]) * C64::new(0.0, -0.5)
        }));
    }
    // Real Gram-Schmidt under the Frobenius inner product, largest norm first.
    let inner = |a: &CMat, b: &CMat| -> f64 {
        let mut s = 0.0;
        for j in 0..n {
            for i in 0..n {
                s += (a[(i, j)].conj() * b[(i, j)]).re;
            }
        }
        s
    };
    let mut basis: Vec<CMat> = Vec::with_capacity(dim);
    let mut pool = cands;
    while basis.len() < dim && !pool.is_empty() {
        let (best, norm) = pool
            .iter()
            .enumerate()
            .map(|(i, m)| (i, inner(m, m).sqrt()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if norm < 1e-8 {
            break;
        }
        let e = linalg::scale(&pool.swap_remove(best), C64::new(1.0 / norm, 0.0));
        for m in pool.iter_mut() {
            let c = inner(&e, m);
            *m = linalg::axpy(m, C64::new(-c, 0.0), &e);
        }
        basis.push(e);
    }
    // Householder reflection mapping the trace vector onto the first axis.
    let t: Vec<f64> = basis.iter().map(|m| linalg::trace(m).re).collect();
    let tn = t.iter().map(|x| x * x).sum::<f64>().sqrt();
    if tn < 1e-12 || basis.is_empty() {
        return basis;
    }
    let sign = if t[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut w = t.clone();
    w[0] += sign * tn;
    let wn2: f64 = w.iter().map(|x| x * x).sum();
    let q = basis.len();
    let rotated: Vec<CMat> = (0..q)
        .map(|r| {
            let mut acc = CMat::zeros(n, n);
            for (c, b) in basis.iter().enumerate() {
                let delta = if r == c { 1.0 } else { 0.0 };
                let coef = delta - 2.0 * w[r] * w[c] / wn2;
                if coef != 0.0 {
                    acc = linalg::axpy(&acc, C64::new(coef, 0.0), b);
                }
            }
            acc
        })
        .collect();
    let mut out = rotated;
    let tr = linalg::trace(&out[0]).re;
    out[0] = linalg::hermitian_part(&linalg::scale(&out[0], C64::new(1.0 / tr, 0.0)));
    out
}

/// `λ_{αβ} = i(E_β - E_α) - ½(p_α - p_β)²` with `E_α = 2J cos(πα/(N+1))` and
/// `p_α = R[1 + cos(πα/(N+1))]`, for `α, β = 1..N`.
pub fn analytic_commuting_spectrum(j: f64, r: f64, n_sites: usize) -> Vec<(usize, usize, C64)> {
    let theta = |a: usize| PI * a as f64 / (n_sites as f64 + 1.0);
    let e = |a: usize| 2.0 * j * theta(a).cos();
    let p = |a: usize| r * (1.0 + theta(a).cos());
    let mut out = Vec::with_capacity(n_sites * n_sites);
    for a in 1..=n_sites {
        for b in 1..=n_sites {
            let dp = p(a) - p(b);
            out.push((a, b, C64::new(-0.5 * dp * dp, e(b) - e(a))));
        }
    }
    out
}

/// `⟨n|φ^(α)⟩ = √(2/(N+1)) sin(πnα/(N+1))`, `n = 1..N`.
pub fn open_chain_mode(alpha: usize, n_sites: usize) -> Vec<f64> {
    let c = (2.0 / (n_sites as f64 + 1.0)).sqrt();
    (1..=n_sites)
        .map(|n| c * (PI * (n * alpha) as f64 / (n_sites as f64 + 1.0)).sin())
        .collect()
}

/// Diagonal-plus-antidiagonal stationary state `(I + X)/(N+1)` with `X` the
/// exchange matrix. For even `N` that has trace `N/(N+1)` and is rescaled to
/// unit trace.
pub fn rho_sa(n_sites: usize) -> Result<CMat> {
    if n_sites < 1 {
        return Err(Error::InvalidSize(format!("n_sites = {n_sites}")));
    }
    let n = n_sites;
    let norm = if n % 2 == 1 { n + 1 } else { n } as f64;
    Ok(CMat::from_fn(n, n, |i, j| {
        let v = (i == j) as u8 as f64 + (j == n - 1 - i) as u8 as f64;
        C64::new(v / norm, 0.0)
    }))
}

/// `I/N`.
pub fn maximally_mixed(n_sites: usize) -> CMat {
    linalg::scale(&linalg::identity(n_sites), C64::new(1.0 / n_sites as f64, 0.0))
}

/// Structural invariants of a Liouvillian.
#[derive(Debug, Clone, Copy)]
pub struct LiouvillianChecks {
    /// `max |L† vec(I)|`.
    pub trace_preservation: f64,
    /// Greedy matching distance between the spectrum and its conjugate.
    pub conjugation_asymmetry: f64,
    pub max_real_part: f64,
}

pub fn check_liouvillian(lm: &LiouvillianMatrix, spectrum: &SuperSpectrum) -> LiouvillianChecks {
    let n = lm.n_sites;
    let d = lm.dim();
    let mut trace_preservation = 0.0f64;
    for col in 0..d {
        let s: C64 = (0..n).map(|i| lm.l[(i + n * i, col)]).sum();
        trace_preservation = trace_preservation.max(s.norm());
    }
    let conj: Vec<C64> = spectrum.eigenvalues.iter().map(|z| z.conj()).collect();
    LiouvillianChecks {
        trace_preservation,
        conjugation_asymmetry: linalg::multiset_distance(&spectrum.eigenvalues, &conj),
        max_real_part: spectrum
            .eigenvalues
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max),
    }
}

pub(crate) fn check_square(name: &'static str, m: &CMat, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::InvalidSize(format!(
            "{name} is {}x{}, expected {n}x{n}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}
