//! Exact relaxation of a translation-invariant (edge-free) lattice.
//!
//! The collective jump operator is diagonal in momentum, so every element
//! of `ρ_{k,k'}` evolves independently:
//! `ρ_{k,k'}(t) = ρ_{k,k'}(0) exp[i G(k,k') t]` with
//! `G(k,k') = H(k') - H(k) + (i/2)[P(k') - P(k)]²`.
//! Wannier elements follow from a two-sided discrete Fourier transform on a
//! uniform grid of `M` momenta, which is an `M`-site ring.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::Range;

#[allow(unused_imports)]
use num_traits::Float;

use crate::band::{grid_point, BandModel};
use crate::linalg::ZERO;
use crate::{CMat, Error, Result, C64};

/// Default momentum grid.
pub const DEFAULT_N_K: usize = 512;
/// Samples below this modulus are excluded from decay fits.
pub const UNDERFLOW_FLOOR: f64 = 1e-14;

/// `exp[i G(k,k') t]`.
pub fn multiplier(model: &BandModel, k: f64, kp: f64, t: f64) -> C64 {
    let (hk, pk) = model.eval(k);
    let (hkp, pkp) = model.eval(kp);
    let dp = pkp.re - pk.re;
    let g = C64::new(hkp.re - hk.re, 0.5 * dp * dp);
    (C64::new(0.0, t) * g).exp()
}

/// Momentum-space density matrix on the grid `k_j = -π + 2πj/M`.
#[derive(Debug, Clone)]
pub struct BulkState {
    n_k: usize,
    rho_kk: CMat,
    time: f64,
}

impl BulkState {
    pub fn new(rho_kk: CMat, time: f64) -> Result<Self> {
        let n_k = rho_kk.nrows();
        check_grid(n_k)?;
        if rho_kk.ncols() != n_k {
            return Err(Error::InvalidSize(format!(
                "rho_kk is {}x{}",
                n_k,
                rho_kk.ncols()
            )));
        }
        if !(time >= 0.0) {
            return Err(Error::param("time", format!("t = {time} must be >= 0")));
        }
        Ok(BulkState { n_k, rho_kk, time })
    }

    /// Excitation on site 0: `Ψ(k) = 1/√(2π)`, so `ρ_{k,k'} = 1/(2π)`.
    pub fn localized(n_k: usize) -> Result<Self> {
        check_grid(n_k)?;
        let c = C64::new(1.0 / (2.0 * PI), 0.0);
        Ok(BulkState {
            n_k,
            rho_kk: CMat::from_fn(n_k, n_k, |_, _| c),
            time: 0.0,
        })
    }

    pub fn n_k(&self) -> usize {
        self.n_k
    }
    pub fn rho_kk(&self) -> &CMat {
        &self.rho_kk
    }
    pub fn time(&self) -> f64 {
        self.time
    }

    /// `(2π/M) Σ_j ρ_{k_j,k_j}`.
    pub fn trace(&self) -> C64 {
        let s: C64 = (0..self.n_k).map(|j| self.rho_kk[(j, j)]).sum();
        s * (2.0 * PI / self.n_k as f64)
    }
}

fn check_grid(n_k: usize) -> Result<()> {
    if n_k < 2 || n_k % 2 != 0 {
        return Err(Error::InvalidSize(format!(
            "momentum grid size {n_k} must be even and >= 2"
        )));
    }
    Ok(())
}

/// Advances `state` by `t`.
pub fn bulk_evolve(model: &BandModel, state: &BulkState, t: f64) -> Result<BulkState> {
    if !(t >= 0.0) {
        return Err(Error::param("t", format!("t = {t} must be >= 0")));
    }
    let m = state.n_k;
    let ks: Vec<f64> = (0..m).map(|j| grid_point(j, m)).collect();
    let rho = CMat::from_fn(m, m, |j, l| {
        if j == l {
            state.rho_kk[(j, l)]
        } else {
            state.rho_kk[(j, l)] * multiplier(model, ks[j], ks[l], t)
        }
    });
    Ok(BulkState {
        n_k: m,
        rho_kk: rho,
        time: state.time + t,
    })
}

/// Largest time before the ballistic front wraps around the `M`-site ring.
pub fn max_time(model: &BandModel, n_k: usize) -> f64 {
    let v = model.max_group_velocity();
    if v > 0.0 {
        n_k as f64 / (4.0 * v)
    } else {
        f64::INFINITY
    }
}

fn check_time(model: &BandModel, n_k: usize, t: f64) -> Result<()> {
    if !(t >= 0.0) {
        return Err(Error::param("t", format!("t = {t} must be >= 0")));
    }
    let limit = max_time(model, n_k);
    if t > limit {
        return Err(Error::param(
            "t",
            format!("t = {t} exceeds the wrap-around limit {limit} for M = {n_k}"),
        ));
    }
    Ok(())
}

/// Site-basis density matrix restricted to a window of sites.
#[derive(Debug, Clone)]
pub struct WannierDensity {
    pub sites: Range<i64>,
    pub time: f64,
    /// `rho[(a, b)] = ρ_{sites.start + a, sites.start + b}`.
    pub rho: CMat,
}

impl WannierDensity {
    pub fn get(&self, n: i64, m: i64) -> Option<C64> {
        if self.sites.contains(&n) && self.sites.contains(&m) {
            let a = (n - self.sites.start) as usize;
            let b = (m - self.sites.start) as usize;
            Some(self.rho[(a, b)])
        } else {
            None
        }
    }

    /// `Σ_n ρ_{n,n}` over the window.
    pub fn trace(&self) -> C64 {
        (0..self.rho.nrows()).map(|a| self.rho[(a, a)]).sum()
    }

    /// `Σ_n n ρ_{n,n}` over the window.
    pub fn first_moment(&self) -> f64 {
        (0..self.rho.nrows())
            .map(|a| (self.sites.start + a as i64) as f64 * self.rho[(a, a)].re)
            .sum()
    }
}

/// Full ring `[-M/2, M/2)`.
pub fn full_window(n_k: usize) -> Range<i64> {
    let h = (n_k / 2) as i64;
    -h..h
}

/// Wannier density matrix at time `t` for the initial excitation on site 0,
/// by `M`-point trapezoidal quadrature on both momentum axes.
pub fn bulk_wannier_density(
    model: &BandModel,
    n_k: usize,
    t: f64,
    window: Range<i64>,
) -> Result<WannierDensity> {
    check_grid(n_k)?;
    check_time(model, n_k, t)?;
    let full = full_window(n_k);
    if window.start >= window.end || window.start < full.start || window.end > full.end {
        return Err(Error::param(
            "window",
            format!(
                "sites {}..{} must be a non-empty subrange of {}..{}",
                window.start, window.end, full.start, full.end
            ),
        ));
    }
    let m = n_k;
    let ks: Vec<f64> = (0..m).map(|j| grid_point(j, m)).collect();
    let e = multiplier_matrix(model, &ks, t);
    let w = (window.end - window.start) as usize;
    let inv_m = 1.0 / m as f64;
    // F[a, j] = e^{i k_j n_a} / M, so ρ = F E F†.
    let f = CMat::from_fn(w, m, |a, j| {
        let n = (window.start + a as i64) as f64;
        C64::from_polar(inv_m, ks[j] * n)
    });
    let fe = &f * &e;
    let fh = crate::linalg::dagger(&f);
    let rho = &fe * &fh;
    Ok(WannierDensity {
        sites: window,
        time: t,
        rho,
    })
}

fn multiplier_matrix(model: &BandModel, ks: &[f64], t: f64) -> CMat {
    let m = ks.len();
    let h: Vec<f64> = ks.iter().map(|&k| model.h_at(k).re).collect();
    let p: Vec<f64> = ks.iter().map(|&k| model.p_at(k).re).collect();
    CMat::from_fn(m, m, |j, l| {
        let dp = p[l] - p[j];
        let g = C64::new(h[l] - h[j], 0.5 * dp * dp);
        (C64::new(0.0, t) * g).exp()
    })
}

/// A single Wannier element `ρ_{n,m}(t)` in `O(M²)`.
pub fn bulk_wannier_element(model: &BandModel, n_k: usize, t: f64, n: i64, m: i64) -> Result<C64> {
    check_grid(n_k)?;
    check_time(model, n_k, t)?;
    let full = full_window(n_k);
    if !full.contains(&n) || !full.contains(&m) {
        return Err(Error::param(
            "site",
            format!("({n}, {m}) outside {}..{}", full.start, full.end),
        ));
    }
    let mm = n_k;
    let ks: Vec<f64> = (0..mm).map(|j| grid_point(j, mm)).collect();
    let h: Vec<f64> = ks.iter().map(|&k| model.h_at(k).re).collect();
    let p: Vec<f64> = ks.iter().map(|&k| model.p_at(k).re).collect();
    let left: Vec<C64> = ks.iter().map(|&k| C64::from_polar(1.0, k * n as f64)).collect();
    let right: Vec<C64> = ks.iter().map(|&k| C64::from_polar(1.0, -k * m as f64)).collect();
    let mut total = ZERO;
    for j in 0..mm {
        let mut row = ZERO;
        for l in 0..mm {
            let dp = p[l] - p[j];
            let g = C64::new(h[l] - h[j], 0.5 * dp * dp);
            row += (C64::new(0.0, t) * g).exp() * right[l];
        }
        total += left[j] * row;
    }
    Ok(total / (mm * mm) as f64)
}

/// Line in the `(n, m)` plane along which decay is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Line {
    /// `m = n`
    Diagonal,
    /// `m = -n`
    AntiDiagonal,
}

/// Least-squares fit `y = intercept + slope · x`.
#[derive(Debug, Clone, Copy)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope (zero for two points).
    pub slope_stderr: f64,
    /// Root-mean-square residual of `y`.
    pub residual_rms: f64,
}

/// Fits of `ln|ρ|` against `ln t` and against `t`.
#[derive(Debug, Clone)]
pub struct DecayReport {
    pub line: Line,
    pub velocity: f64,
    /// `(t, n, m, |ρ_{n,m}(t)|)` for every supplied time.
    pub samples: Vec<(f64, i64, i64, f64)>,
    /// `ln|ρ| = a + exponent · ln t`; `slope` is the power-law exponent.
    pub power_law: LinearFit,
    /// `ln|ρ| = a + rate · t`; `slope` is the (negative) exponential rate.
    pub exponential: LinearFit,
}

impl DecayReport {
    pub fn exponent(&self) -> f64 {
        self.power_law.slope
    }
    /// True when the exponential fit has the smaller residual.
    pub fn exponential_preferred(&self) -> bool {
        self.exponential.residual_rms < self.power_law.residual_rms
    }
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::InvalidSize(format!("{n} points cannot be fitted")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::param("times", "abscissae are all equal"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    let slope_stderr = if n > 2 {
        (ss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr,
        residual_rms: (ss / nf).sqrt(),
    })
}

/// Samples `|ρ_{n,m}(t)|` at `n = round(velocity · t)`, `m = ±n`, and fits
/// the latest half of `times`.
pub fn decay_exponents(
    model: &BandModel,
    n_k: usize,
    times: &[f64],
    line: Line,
    velocity: f64,
) -> Result<DecayReport> {
    if times.len() < 3 {
        return Err(Error::InvalidSize(format!(
            "{} times supplied, at least 3 needed",
            times.len()
        )));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || !(times[0] > 0.0) {
        return Err(Error::param(
            "times",
            "must be positive and strictly increasing",
        ));
    }
    let mut samples = Vec::with_capacity(times.len());
    for &t in times {
        let n = (velocity * t).round() as i64;
        let m = match line {
            Line::Diagonal => n,
            Line::AntiDiagonal => -n,
        };
        let v = bulk_wannier_element(model, n_k, t, n, m)?.norm();
        samples.push((t, n, m, v));
    }
    if samples.iter().all(|s| s.3 < UNDERFLOW_FLOOR) {
        return Err(Error::Underflow {
            floor: UNDERFLOW_FLOOR,
        });
    }
    let tail: Vec<&(f64, i64, i64, f64)> = samples[times.len() / 2..]
        .iter()
        .filter(|s| s.3 >= UNDERFLOW_FLOOR)
        .collect();
    if tail.len() < 2 {
        return Err(Error::Underflow {
            floor: UNDERFLOW_FLOOR,
        });
    }
    let ln_t: Vec<f64> = tail.iter().map(|s| s.0.ln()).collect();
    let t: Vec<f64> = tail.iter().map(|s| s.0).collect();
    let ln_v: Vec<f64> = tail.iter().map(|s| s.3.ln()).collect();
    Ok(DecayReport {
        line,
        velocity,
        power_law: linear_fit(&ln_t, &ln_v)?,
        exponential: linear_fit(&t, &ln_v)?,
        samples,
    })
}
