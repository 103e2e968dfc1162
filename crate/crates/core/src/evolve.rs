//! Master-equation and no-jump propagation on finite lattices, plus the
//! observables reported for both.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::lattice::LatticeOperators;
use crate::linalg::{self, ZERO};
use crate::liouvillian::{self, LiouvillianMatrix};
use crate::{CMat, Error, Result, C64};

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;
/// Invariant drift that aborts a propagation.
pub const DRIFT_TOL: f64 = 1e-6;
/// Eigenbasis condition number above which the master propagator switches
/// to scaling and squaring.
pub const MASTER_COND_LIMIT: f64 = 1e8;
/// Same for the no-jump propagator.
pub const SEMICLASSICAL_COND_LIMIT: f64 = 1e10;

/// Hermitian, unit-trace, positive semidefinite `N × N` matrix.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    rho: CMat,
}

/// Deviations of a matrix from the density-matrix invariants.
#[derive(Debug, Clone, Copy)]
pub struct StateDrift {
    pub hermiticity: f64,
    pub trace: f64,
    pub min_eigenvalue: f64,
}

impl StateDrift {
    pub fn of(rho: &CMat) -> Result<Self> {
        let herm = linalg::hermitian_part(rho);
        Ok(StateDrift {
            hermiticity: linalg::hermiticity_error(rho),
            trace: (linalg::trace(rho) - C64::new(1.0, 0.0)).norm(),
            min_eigenvalue: linalg::hermitian_eigenvalues(&herm)?
                .first()
                .copied()
                .unwrap_or(0.0),
        })
    }

    /// Largest violation, counting only negative eigenvalues.
    pub fn worst(&self) -> f64 {
        self.hermiticity
            .max(self.trace)
            .max((-self.min_eigenvalue).max(0.0))
    }
}

impl DensityMatrix {
    pub fn new(rho: CMat) -> Result<Self> {
        if rho.nrows() == 0 || rho.nrows() != rho.ncols() {
            return Err(Error::InvalidSize(format!(
                "density matrix is {}x{}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let d = StateDrift::of(&rho)?;
        if d.hermiticity > HERMITIAN_TOL {
            return Err(Error::param("rho", format!("not Hermitian ({:e})", d.hermiticity)));
        }
        if d.trace > TRACE_TOL {
            return Err(Error::param("rho", format!("trace off by {:e}", d.trace)));
        }
        if d.min_eigenvalue < -POSITIVITY_TOL {
            return Err(Error::NotPsd {
                min_eigenvalue: d.min_eigenvalue,
            });
        }
        Ok(DensityMatrix { rho })
    }

    /// `|ψ⟩⟨ψ| / ⟨ψ|ψ⟩`.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm = linalg::norm2(psi);
        if psi.is_empty() || norm == 0.0 {
            return Err(Error::param("psi", "zero vector"));
        }
        let v: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Ok(DensityMatrix {
            rho: linalg::outer(&v, &v),
        })
    }

    /// `|n⟩⟨n|` with a 1-based site label.
    pub fn site(n_sites: usize, site: usize) -> Result<Self> {
        Self::pure(&site_vector(n_sites, site)?)
    }

    pub fn maximally_mixed(n_sites: usize) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidSize("n_sites = 0".into()));
        }
        Ok(DensityMatrix {
            rho: liouvillian::maximally_mixed(n_sites),
        })
    }

    pub fn matrix(&self) -> &CMat {
        &self.rho
    }
    pub fn into_matrix(self) -> CMat {
        self.rho
    }
    pub fn n_sites(&self) -> usize {
        self.rho.nrows()
    }
}

/// Unit vector on a 1-based site.
pub fn site_vector(n_sites: usize, site: usize) -> Result<Vec<C64>> {
    if site < 1 || site > n_sites {
        return Err(Error::param(
            "site",
            format!("site {site} outside 1..={n_sites}"),
        ));
    }
    let mut v = alloc::vec![ZERO; n_sites];
    v[site - 1] = C64::new(1.0, 0.0);
    Ok(v)
}

enum Method {
    Spectral {
        values: Vec<C64>,
        vectors: CMat,
        inverse: CMat,
    },
    Expm,
}

/// Master-equation propagator reusing one eigendecomposition of `L` across
/// times.
pub struct MasterPropagator {
    l: CMat,
    n_sites: usize,
    zero_tol: f64,
    condition: f64,
    method: Method,
}

impl MasterPropagator {
    pub fn new(lm: &LiouvillianMatrix) -> Result<Self> {
        let l = lm.matrix().clone();
        let d = l.nrows();
        let (values, vectors) = linalg::eigen(&l)?;
        let inverse = linalg::solve(&vectors, &linalg::identity(d));
        let condition = linalg::one_norm(&vectors) * linalg::one_norm(&inverse);
        let method = if condition.is_finite() && condition <= MASTER_COND_LIMIT {
            Method::Spectral {
                values,
                vectors,
                inverse,
            }
        } else {
            Method::Expm
        };
        Ok(MasterPropagator {
            l,
            n_sites: lm.n_sites(),
            zero_tol: lm.zero_tolerance(),
            condition,
            method,
        })
    }

    /// 1-norm condition number of the eigenvector matrix.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn uses_fallback(&self) -> bool {
        matches!(self.method, Method::Expm)
    }

    /// Eigenvalues of `L` (only for the spectral method).
    pub fn eigenvalues(&self) -> Option<&[C64]> {
        match &self.method {
            Method::Spectral { values, .. } => Some(values),
            Method::Expm => None,
        }
    }

    /// Smallest `|Re λ|` among eigenvalues that are not zero modes.
    pub fn slowest_rate(&self) -> Result<f64> {
        let owned;
        let values = match &self.method {
            Method::Spectral { values, .. } => values.as_slice(),
            Method::Expm => {
                owned = linalg::eigenvalues(&self.l)?;
                owned.as_slice()
            }
        };
        values
            .iter()
            .map(|z| z.re.abs())
            .filter(|&r| r > self.zero_tol)
            .min_by(f64::total_cmp)
            .ok_or(Error::NumericalFailure {
                context: "no decaying Liouvillian mode",
                residual: 0.0,
            })
    }

    /// `10 / |Re λ_slow|`.
    pub fn long_time(&self) -> Result<f64> {
        Ok(10.0 / self.slowest_rate()?)
    }

    fn check_input(&self, rho0: &DensityMatrix) -> Result<()> {
        if rho0.n_sites() != self.n_sites {
            return Err(Error::InvalidSize(format!(
                "state has {} sites, Liouvillian {}",
                rho0.n_sites(),
                self.n_sites
            )));
        }
        Ok(())
    }

    pub fn propagate(&self, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
        self.check_input(rho0)?;
        if !(t >= 0.0) {
            return Err(Error::param("t", format!("t = {t} must be >= 0")));
        }
        if t == 0.0 {
            return Ok(rho0.clone());
        }
        let v0 = linalg::vectorize(rho0.matrix());
        let v = match &self.method {
            Method::Spectral {
                values,
                vectors,
                inverse,
            } => {
                let c = linalg::matvec(inverse, &v0);
                let scaled: Vec<C64> = c
                    .iter()
                    .zip(values)
                    .map(|(c, l)| c * (l * t).exp())
                    .collect();
                linalg::matvec(vectors, &scaled)
            }
            Method::Expm => {
                let e = linalg::expm(&linalg::scale(&self.l, C64::new(t, 0.0)));
                linalg::matvec(&e, &v0)
            }
        };
        finish(linalg::unvectorize(&v, self.n_sites), "master propagation")
    }

    pub fn propagate_many(&self, rho0: &DensityMatrix, times: &[f64]) -> Result<Vec<DensityMatrix>> {
        times.iter().map(|&t| self.propagate(rho0, t)).collect()
    }

    /// Spectral projection of `ρ₀` onto the zero modes of `L`: the
    /// `t → ∞` state when every other mode decays.
    pub fn stationary_projection(&self, rho0: &DensityMatrix) -> Result<DensityMatrix> {
        self.check_input(rho0)?;
        let v0 = linalg::vectorize(rho0.matrix());
        match &self.method {
            Method::Spectral {
                values,
                vectors,
                inverse,
            } => {
                let c = linalg::matvec(inverse, &v0);
                let kept: Vec<C64> = c
                    .iter()
                    .zip(values)
                    .map(|(c, l)| if l.norm() <= self.zero_tol { *c } else { ZERO })
                    .collect();
                let v = linalg::matvec(vectors, &kept);
                finish(linalg::unvectorize(&v, self.n_sites), "stationary projection")
            }
            Method::Expm => {
                let lm_rep = liouvillian::stationary_states_of_matrix(&self.l, self.n_sites, self.zero_tol)?;
                finish(lm_rep.project(rho0.matrix())?, "stationary projection")
            }
        }
    }
}

fn finish(rho: CMat, context: &'static str) -> Result<DensityMatrix> {
    let drift = StateDrift::of(&rho)?;
    if drift.worst() > DRIFT_TOL {
        return Err(Error::NumericalFailure {
            context,
            residual: drift.worst(),
        });
    }
    Ok(DensityMatrix {
        rho: linalg::hermitian_part(&rho),
    })
}

/// `matrix-form(exp(L t) vec(ρ₀))`.
pub fn propagate_master(lm: &LiouvillianMatrix, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    MasterPropagator::new(lm)?.propagate(rho0, t)
}

/// Classical fourth-order Runge-Kutta integration of the master equation;
/// a cross-check for the spectral propagator.
pub fn rk4_master(ops: &LatticeOperators, rho0: &CMat, t: f64, dt: f64) -> Result<CMat> {
    if !(dt > 0.0) || !(t >= 0.0) {
        return Err(Error::param("dt", "dt > 0 and t >= 0 required"));
    }
    let steps = (t / dt).round() as usize;
    let h = t / steps.max(1) as f64;
    let f = |r: &CMat| liouvillian::lindblad_rhs(ops.h(), ops.p(), ops.p2(), r);
    let mut rho = rho0.clone();
    for _ in 0..steps {
        let k1 = f(&rho);
        let k2 = f(&linalg::axpy(&rho, C64::new(0.5 * h, 0.0), &k1));
        let k3 = f(&linalg::axpy(&rho, C64::new(0.5 * h, 0.0), &k2));
        let k4 = f(&linalg::axpy(&rho, C64::new(h, 0.0), &k3));
        let n = rho.nrows();
        rho = CMat::from_fn(n, n, |i, j| {
            rho[(i, j)] + (k1[(i, j)] + (k2[(i, j)] + k3[(i, j)]) * 2.0 + k4[(i, j)]) * (h / 6.0)
        });
    }
    Ok(rho)
}

/// Unnormalized no-jump state.
#[derive(Debug, Clone)]
pub struct SemiclassicalState {
    pub psi: Vec<C64>,
    pub time: f64,
    /// Scaling and squaring was used because `H_eff` is close to defective.
    pub used_fallback: bool,
}

impl SemiclassicalState {
    pub fn norm(&self) -> f64 {
        linalg::norm2(&self.psi)
    }

    /// `Σ n |ψ_n|² / Σ |ψ_n|²` with 1-based sites.
    pub fn normalized_first_moment(&self) -> f64 {
        first_moment_of(&self.psi)
    }
}

/// `Σ n |ψ_n|² / Σ |ψ_n|²` with 1-based sites.
pub fn first_moment_of(psi: &[C64]) -> f64 {
    let w: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    psi.iter()
        .enumerate()
        .map(|(i, z)| (i + 1) as f64 * z.norm_sqr())
        .sum::<f64>()
        / w
}

/// `exp(-i H_eff t)` through one cached eigendecomposition.
pub struct SemiclassicalPropagator {
    h_eff: CMat,
    spectral: Option<(Vec<C64>, CMat, CMat)>,
}

impl SemiclassicalPropagator {
    pub fn new(ops: &LatticeOperators) -> Result<Self> {
        let h_eff = ops.h_eff().clone();
        let n = h_eff.nrows();
        let (values, vectors) = linalg::eigen(&h_eff)?;
        let inverse = linalg::solve(&vectors, &linalg::identity(n));
        let cond = linalg::one_norm(&vectors) * linalg::one_norm(&inverse);
        let spectral = if cond.is_finite() && cond <= SEMICLASSICAL_COND_LIMIT {
            Some((values, vectors, inverse))
        } else {
            None
        };
        Ok(SemiclassicalPropagator { h_eff, spectral })
    }

    pub fn propagate(&self, psi0: &[C64], t: f64) -> Result<SemiclassicalState> {
        let n = self.h_eff.nrows();
        if psi0.len() != n {
            return Err(Error::InvalidSize(format!(
                "psi has {} components, lattice {n}",
                psi0.len()
            )));
        }
        if !(t >= 0.0) {
            return Err(Error::param("t", format!("t = {t} must be >= 0")));
        }
        let psi = match &self.spectral {
            Some((values, vectors, inverse)) => {
                let c = linalg::matvec(inverse, psi0);
                let scaled: Vec<C64> = c
                    .iter()
                    .zip(values)
                    .map(|(c, e)| c * (C64::new(0.0, -t) * e).exp())
                    .collect();
                linalg::matvec(vectors, &scaled)
            }
            None => {
                let e = linalg::expm(&linalg::scale(&self.h_eff, C64::new(0.0, -t)));
                linalg::matvec(&e, psi0)
            }
        };
        let n0 = linalg::norm2(psi0);
        let n1 = linalg::norm2(&psi);
        if n1 > n0 * (1.0 + 1e-10) + 1e-10 {
            return Err(Error::NumericalFailure {
                context: "no-jump propagation gained norm",
                residual: n1 - n0,
            });
        }
        Ok(SemiclassicalState {
            psi,
            time: t,
            used_fallback: self.spectral.is_none(),
        })
    }
}

/// `exp(-i H_eff t) ψ₀`.
pub fn propagate_semiclassical(ops: &LatticeOperators, psi0: &[C64], t: f64) -> Result<SemiclassicalState> {
    SemiclassicalPropagator::new(ops)?.propagate(psi0, t)
}

/// `-Σ λ ln λ` in nats, eigenvalues clamped to `[0, 1]`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    entropy_of_matrix(rho.matrix())
}

pub fn entropy_of_matrix(rho: &CMat) -> Result<f64> {
    let vals = linalg::hermitian_eigenvalues(&linalg::hermitian_part(rho))?;
    Ok(vals
        .into_iter()
        .map(|l| l.clamp(0.0, 1.0))
        .filter(|&l| l > 0.0)
        .map(|l| -l * l.ln())
        .sum())
}

/// Entropy along a time grid plus its asymptotic value.
#[derive(Debug, Clone)]
pub struct EntropyTrace {
    pub points: Vec<(f64, f64)>,
    pub rho_infinity: DensityMatrix,
    pub s_infinity: f64,
}

pub fn entropy_trace(lm: &LiouvillianMatrix, rho0: &DensityMatrix, times: &[f64]) -> Result<EntropyTrace> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("times", "must be sorted ascending"));
    }
    let prop = MasterPropagator::new(lm)?;
    entropy_trace_with(&prop, rho0, times)
}

pub fn entropy_trace_with(
    prop: &MasterPropagator,
    rho0: &DensityMatrix,
    times: &[f64],
) -> Result<EntropyTrace> {
    let mut points = Vec::with_capacity(times.len());
    for &t in times {
        points.push((t, von_neumann_entropy(&prop.propagate(rho0, t)?)?));
    }
    let rho_infinity = prop.stationary_projection(rho0)?;
    let s_infinity = von_neumann_entropy(&rho_infinity)?;
    Ok(EntropyTrace {
        points,
        rho_infinity,
        s_infinity,
    })
}

#[derive(Debug, Clone)]
pub struct Observables {
    pub populations: Vec<f64>,
    /// `|ρ_{n, N+1-n}|`.
    pub coherence_antidiag: Vec<f64>,
    /// `Σ n ρ_{n,n}`, 1-based.
    pub first_moment: f64,
    pub purity: f64,
}

pub fn observables(rho: &DensityMatrix) -> Observables {
    let r = rho.matrix();
    let n = r.nrows();
    let populations: Vec<f64> = (0..n).map(|i| r[(i, i)].re).collect();
    let coherence_antidiag = (0..n).map(|i| r[(i, n - 1 - i)].norm()).collect();
    let first_moment = populations
        .iter()
        .enumerate()
        .map(|(i, p)| (i + 1) as f64 * p)
        .sum();
    let mut purity = 0.0;
    for j in 0..n {
        for i in 0..n {
            purity += r[(i, j)].norm_sqr();
        }
    }
    Observables {
        populations,
        coherence_antidiag,
        first_moment,
        purity,
    }
}
