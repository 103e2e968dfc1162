//! Finite open-boundary lattices in the Wannier basis.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::band::BandModel;
use crate::linalg::{self, ZERO};
use crate::{CMat, Error, Result, C64};

/// Tolerance on the Hermiticity of inputs to [`sqrt_psd`].
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues in `[-PSD_TOL, 0)` are clamped to zero; lower ones are an error.
pub const PSD_TOL: f64 = 1e-10;

/// How the jump operator of a finite lattice is obtained from band data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Construction {
    /// Toeplitz-truncate `P(k)`; `P² = P·P`.
    #[default]
    TruncateP,
    /// Toeplitz-truncate `P(k)²`; `P` is its PSD square root.
    TruncateP2ThenSqrt,
}

/// Dense operators `H`, `P`, `P²` and `H_eff = H - (i/2) P²` on `N` sites.
#[derive(Debug, Clone)]
pub struct LatticeOperators {
    n_sites: usize,
    h: CMat,
    p: CMat,
    p2: CMat,
    h_eff: CMat,
    construction: Construction,
}

impl LatticeOperators {
    /// Assembles operators from explicit matrices. `P` must be Hermitian
    /// PSD and `H` Hermitian.
    pub fn from_matrices(h: CMat, p: CMat, construction: Construction) -> Result<Self> {
        let n = h.nrows();
        if n < 1 || h.ncols() != n || p.nrows() != n || p.ncols() != n {
            return Err(Error::InvalidSize(format!(
                "H is {}x{}, P is {}x{}",
                h.nrows(),
                h.ncols(),
                p.nrows(),
                p.ncols()
            )));
        }
        let p2 = &p * &p;
        Self::assemble(h, p, p2, construction)
    }

    fn assemble(h: CMat, p: CMat, p2: CMat, construction: Construction) -> Result<Self> {
        let n = h.nrows();
        let herm_tol = |m: &CMat| HERMITIAN_TOL * linalg::max_abs(m).max(1.0);
        if linalg::hermiticity_error(&h) > herm_tol(&h) {
            return Err(Error::param("H", "matrix is not Hermitian"));
        }
        if linalg::hermiticity_error(&p) > herm_tol(&p) {
            return Err(Error::param("P", "matrix is not Hermitian"));
        }
        let p_min = linalg::hermitian_eigenvalues(&p)?
            .first()
            .copied()
            .unwrap_or(0.0);
        if p_min < -PSD_TOL {
            return Err(Error::NotPsd {
                min_eigenvalue: p_min,
            });
        }
        let h_eff = linalg::axpy(&h, C64::new(0.0, -0.5), &p2);
        Ok(LatticeOperators {
            n_sites: n,
            h,
            p,
            p2,
            h_eff,
            construction,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }
    pub fn h(&self) -> &CMat {
        &self.h
    }
    pub fn p(&self) -> &CMat {
        &self.p
    }
    pub fn p2(&self) -> &CMat {
        &self.p2
    }
    pub fn h_eff(&self) -> &CMat {
        &self.h_eff
    }
    pub fn construction(&self) -> Construction {
        self.construction
    }
}

/// Toeplitz matrix `M[a, b] = x_{b-a}` on `n` sites; ranges that do not fit
/// are dropped.
pub fn toeplitz(coeffs: &BTreeMap<i64, C64>, n: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    for (&r, &c) in coeffs {
        if r.unsigned_abs() as usize >= n {
            continue;
        }
        for a in 0..n {
            let b = a as i64 + r;
            if b >= 0 && (b as usize) < n {
                m[(a, b as usize)] = c;
            }
        }
    }
    m
}

/// Open-boundary operators of a band model.
pub fn build_obc(
    model: &BandModel,
    n_sites: usize,
    construction: Construction,
) -> Result<LatticeOperators> {
    if n_sites < 2 {
        return Err(Error::InvalidSize(format!("n_sites = {n_sites} < 2")));
    }
    if model.max_range() as usize >= n_sites {
        return Err(Error::InvalidSize(format!(
            "coefficient range {} does not fit {n_sites} sites",
            model.max_range()
        )));
    }
    let h = toeplitz(model.h_coeffs(), n_sites);
    match construction {
        Construction::TruncateP => {
            let p = toeplitz(model.p_coeffs(), n_sites);
            let p2 = &p * &p;
            LatticeOperators::assemble(h, p, p2, construction)
        }
        Construction::TruncateP2ThenSqrt => {
            let p2 = toeplitz(&model.p_squared_coeffs(), n_sites);
            let p = sqrt_psd(&p2)?;
            LatticeOperators::assemble(h, p, p2, construction)
        }
    }
}

/// Dissipative Hatano-Nelson lattice with hoppings `J1` (towards lower
/// sites) and `J2 >= J1` (towards higher sites). The jump operator is the
/// PSD square root of the tridiagonal `P²`, so it is long-ranged.
pub fn build_hatano_nelson(j1: f64, j2: f64, n_sites: usize) -> Result<LatticeOperators> {
    if !(j1 >= 0.0) {
        return Err(Error::param("J1", format!("J1 = {j1} must be >= 0")));
    }
    if !(j2 >= j1) {
        return Err(Error::param("J2", format!("J2 = {j2} must be >= J1 = {j1}")));
    }
    if n_sites < 2 {
        return Err(Error::InvalidSize(format!("n_sites = {n_sites} < 2")));
    }
    let hop = C64::new(0.5 * (j1 + j2), 0.0);
    let d = j2 - j1;
    let mut h = CMat::zeros(n_sites, n_sites);
    let mut p2 = CMat::zeros(n_sites, n_sites);
    for a in 0..n_sites {
        p2[(a, a)] = C64::new(2.0 * d, 0.0);
        if a + 1 < n_sites {
            h[(a, a + 1)] = hop;
            h[(a + 1, a)] = hop;
            p2[(a, a + 1)] = C64::new(0.0, -d);
            p2[(a + 1, a)] = C64::new(0.0, d);
        }
    }
    let p = sqrt_psd(&p2)?;
    LatticeOperators::assemble(h, p, p2, Construction::TruncateP2ThenSqrt)
}

/// Bloch dispersion of the dissipative Hatano-Nelson lattice,
/// `(J1 + J2) cos k - i (J2 - J1)(1 + sin k)`.
pub fn hatano_nelson_pbc_energy(j1: f64, j2: f64, k: f64) -> C64 {
    C64::new((j1 + j2) * k.cos(), -(j2 - j1) * (1.0 + k.sin()))
}

/// Hermitian PSD square root via eigendecomposition.
pub fn sqrt_psd(m: &CMat) -> Result<CMat> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::InvalidSize(format!("{}x{} is not square", n, m.ncols())));
    }
    if linalg::hermiticity_error(m) > HERMITIAN_TOL * linalg::max_abs(m).max(1.0) {
        return Err(Error::param("M", "matrix is not Hermitian"));
    }
    let (vals, vecs) = linalg::hermitian_eigen(m)?;
    if let Some(&min) = vals.first() {
        if min < -PSD_TOL {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
            });
        }
    }
    let roots: Vec<f64> = vals.iter().map(|&v| v.max(0.0).sqrt()).collect();
    let mut s = CMat::zeros(n, n);
    for k in 0..n {
        if roots[k] == 0.0 {
            continue;
        }
        for j in 0..n {
            let c = vecs[(j, k)].conj() * roots[k];
            for i in 0..n {
                s[(i, j)] += vecs[(i, k)] * c;
            }
        }
    }
    Ok(linalg::hermitian_part(&s))
}

/// Eigendecomposition of `H_eff` under open boundaries.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: Vec<C64>,
    /// Unit-norm right eigenvectors as columns; the largest-modulus entry of
    /// each column is real and positive.
    pub right_eigenvectors: CMat,
    /// `⟨n⟩ = Σ n |v_n|²` with 1-based sites.
    pub mean_positions: Vec<f64>,
    /// Largest `‖H_eff v - E v‖₂ / ‖H_eff‖₂` over all eigenpairs.
    pub max_relative_residual: f64,
}

/// Maximum accepted relative eigenpair residual.
pub const EIG_RESIDUAL_TOL: f64 = 1e-8;

pub fn obc_spectrum(ops: &LatticeOperators) -> Result<SpectrumReport> {
    let a = ops.h_eff();
    let n = ops.n_sites();
    let (vals, vecs) = if linalg::hermiticity_error(a) <= 1e-14 * linalg::max_abs(a).max(1.0) {
        let (v, u) = linalg::hermitian_eigen(a)?;
        (v.into_iter().map(|x| C64::new(x, 0.0)).collect(), u)
    } else {
        linalg::eigen(a)?
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| linalg::cmp_re_im(&vals[x], &vals[y]));

    let mut eigenvalues = Vec::with_capacity(n);
    let mut right = CMat::zeros(n, n);
    let mut mean_positions = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col: Vec<C64> = (0..n).map(|i| vecs[(i, src)]).collect();
        normalize_with_phase(&mut col);
        let mean: f64 = col
            .iter()
            .enumerate()
            .map(|(i, z)| (i + 1) as f64 * z.norm_sqr())
            .sum();
        for (i, z) in col.into_iter().enumerate() {
            right[(i, dst)] = z;
        }
        eigenvalues.push(vals[src]);
        mean_positions.push(mean);
    }

    let scale = linalg::spectral_norm(a)?.max(f64::MIN_POSITIVE);
    let av = a * &right;
    let mut worst = 0.0f64;
    for j in 0..n {
        let r: f64 = (0..n)
            .map(|i| (av[(i, j)] - eigenvalues[j] * right[(i, j)]).norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(r / scale);
    }
    if worst > EIG_RESIDUAL_TOL {
        return Err(Error::NumericalFailure {
            context: "open-boundary eigendecomposition",
            residual: worst,
        });
    }
    Ok(SpectrumReport {
        eigenvalues,
        right_eigenvectors: right,
        mean_positions,
        max_relative_residual: worst,
    })
}

/// Unit 2-norm with the largest-modulus component made real positive.
pub(crate) fn normalize_with_phase(v: &mut [C64]) {
    let norm = linalg::norm2(v);
    if norm == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
        .unwrap_or(ZERO);
    let phase = if pivot.norm() > 0.0 {
        pivot.conj() / pivot.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    for z in v.iter_mut() {
        *z = *z * phase / norm;
    }
}

/// Mean normalized eigenvector displacement from the lattice center, in
/// `[-1, 1]`. Values near `±1` mean the eigenvectors pile up at one edge.
pub fn skin_localization(report: &SpectrumReport, n_sites: usize) -> f64 {
    if n_sites < 2 || report.mean_positions.is_empty() {
        return 0.0;
    }
    let center = (n_sites as f64 + 1.0) / 2.0;
    let half = (n_sites as f64 - 1.0) / 2.0;
    report
        .mean_positions
        .iter()
        .map(|&m| (m - center) / half)
        .sum::<f64>()
        / report.mean_positions.len() as f64
}

/// `max |HP - PH|`.
pub fn commutator_norm(ops: &LatticeOperators) -> f64 {
    linalg::max_abs(&linalg::commutator(ops.h(), ops.p()))
}

/// Structural invariants of a set of lattice operators.
#[derive(Debug, Clone, Copy)]
pub struct InvariantReport {
    pub hermiticity: f64,
    pub p2_mismatch: f64,
    pub p_min_eigenvalue: f64,
    pub max_imag_eigenvalue: f64,
}

pub fn check_invariants(ops: &LatticeOperators) -> Result<InvariantReport> {
    let hermiticity = linalg::hermiticity_error(ops.h())
        .max(linalg::hermiticity_error(ops.p()))
        .max(linalg::hermiticity_error(ops.p2()));
    let p2_mismatch = linalg::max_abs_diff(&(ops.p() * ops.p()), ops.p2());
    let p_min_eigenvalue = linalg::hermitian_eigenvalues(ops.p())?
        .first()
        .copied()
        .unwrap_or(0.0);
    let max_imag_eigenvalue = linalg::eigenvalues(ops.h_eff())?
        .iter()
        .map(|z| z.im)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(InvariantReport {
        hermiticity,
        p2_mismatch,
        p_min_eigenvalue,
        max_imag_eigenvalue,
    })
}
