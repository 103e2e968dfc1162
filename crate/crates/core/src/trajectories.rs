//! Stochastic Schrödinger unraveling with exactly unitary steps, the exact
//! Bloch-space trajectory, the stroboscopic loop map, and ensemble
//! averaging with a fixed reduction order.
//!
//! Each trajectory draws its increments from its own ChaCha stream keyed by
//! `(master_seed, trajectory_index)`. Trajectories are grouped into leaves of
//! consecutive indices; leaves are summed sequentially and then merged by a
//! pairwise tree whose shape depends only on the number of leaves. Any
//! scheduler that evaluates leaves independently therefore reproduces the
//! sequential result bit for bit.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::Range;

#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::band::{grid_point, BandModel};
use crate::lattice::LatticeOperators;
use crate::linalg::{self, ZERO};
use crate::{CMat, Error, Result, C64};

/// Largest accepted time step (energies in units of the hopping).
pub const MAX_DT: f64 = 0.01;
pub const DEFAULT_DT: f64 = 0.005;
/// Trajectories per leaf of the reduction tree.
pub const DEFAULT_LEAF_SIZE: usize = 32;

/// Source of i.i.d. standard normal numbers.
pub trait NoiseSource {
    fn standard_normal(&mut self) -> f64;
}

/// Independent, reproducible stream for one trajectory.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    master_seed: u64,
    trajectory_index: u64,
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(master_seed: u64, trajectory_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(trajectory_index);
        NoiseStream {
            master_seed,
            trajectory_index,
            rng,
        }
    }
    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }
    pub fn trajectory_index(&self) -> u64 {
        self.trajectory_index
    }
    /// Number of 32-bit words consumed so far.
    pub fn word_position(&self) -> u128 {
        self.rng.get_word_pos()
    }
}

impl NoiseSource for NoiseStream {
    fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

/// Always zero; turns every stochastic map into its deterministic part.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroNoise;

impl NoiseSource for ZeroNoise {
    fn standard_normal(&mut self) -> f64 {
        0.0
    }
}

/// Replays fixed values, then zeros.
#[derive(Debug, Clone)]
pub struct ScriptedNoise {
    values: Vec<f64>,
    pos: usize,
}

impl ScriptedNoise {
    pub fn new(values: Vec<f64>) -> Self {
        ScriptedNoise { values, pos: 0 }
    }
}

impl NoiseSource for ScriptedNoise {
    fn standard_normal(&mut self) -> f64 {
        let v = self.values.get(self.pos).copied().unwrap_or(0.0);
        self.pos += 1;
        v
    }
}

/// `exp(-i(H dt + P dW)) ψ` through the eigendecomposition of the Hermitian
/// generator.
pub fn trajectory_step(ops: &LatticeOperators, psi: &[C64], dt: f64, dw: f64) -> Result<Vec<C64>> {
    let n = ops.n_sites();
    if psi.len() != n {
        return Err(Error::InvalidSize(format!(
            "psi has {} components, lattice {n}",
            psi.len()
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::param("dt", format!("dt = {dt} must be > 0")));
    }
    let (h, p) = (ops.h(), ops.p());
    let g = CMat::from_fn(n, n, |i, j| h[(i, j)] * dt + p[(i, j)] * dw);
    apply_unitary(&g, psi)
}

fn apply_unitary(g: &CMat, psi: &[C64]) -> Result<Vec<C64>> {
    let n = psi.len();
    let (vals, v) = linalg::hermitian_eigen(g)?;
    let mut out = alloc::vec![ZERO; n];
    for k in 0..n {
        let mut c = ZERO;
        for i in 0..n {
            c += v[(i, k)].conj() * psi[i];
        }
        c *= C64::new(0.0, -vals[k]).exp();
        for i in 0..n {
            out[i] += v[(i, k)] * c;
        }
    }
    Ok(out)
}

fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt <= MAX_DT) {
        return Err(Error::param("dt", format!("dt = {dt} must lie in (0, {MAX_DT}]")));
    }
    if !(t_final >= 0.0) {
        return Err(Error::param("t_final", format!("t_final = {t_final} must be >= 0")));
    }
    let steps = (t_final / dt).round();
    if (steps * dt - t_final).abs() > 1e-9 * t_final.max(1.0) {
        return Err(Error::param(
            "t_final",
            format!("t_final = {t_final} is not a multiple of dt = {dt}"),
        ));
    }
    Ok(steps as usize)
}

/// Final state of one trajectory.
#[derive(Debug, Clone)]
pub struct TrajectoryResult {
    pub psi: Vec<C64>,
    pub n_steps: usize,
    /// Largest `|‖ψ‖ - ‖ψ₀‖|` seen along the path.
    pub max_norm_drift: f64,
}

pub fn run_trajectory<N: NoiseSource>(
    ops: &LatticeOperators,
    psi0: &[C64],
    t_final: f64,
    dt: f64,
    noise: &mut N,
) -> Result<TrajectoryResult> {
    let steps = step_count(t_final, dt)?;
    let n0 = linalg::norm2(psi0);
    let sqrt_dt = dt.sqrt();
    let mut psi = psi0.to_vec();
    let mut drift = 0.0f64;
    for _ in 0..steps {
        let dw = sqrt_dt * noise.standard_normal();
        psi = trajectory_step(ops, &psi, dt, dw)?;
        drift = drift.max((linalg::norm2(&psi) - n0).abs());
    }
    Ok(TrajectoryResult {
        psi,
        n_steps: steps,
        max_norm_drift: drift,
    })
}

/// Trajectory recorded every `record_every` steps, including `t = 0`.
pub fn run_trajectory_path<N: NoiseSource>(
    ops: &LatticeOperators,
    psi0: &[C64],
    t_final: f64,
    dt: f64,
    record_every: usize,
    noise: &mut N,
) -> Result<Vec<(f64, Vec<C64>)>> {
    let steps = step_count(t_final, dt)?;
    let every = record_every.max(1);
    let sqrt_dt = dt.sqrt();
    let mut psi = psi0.to_vec();
    let mut out = alloc::vec![(0.0, psi.clone())];
    for s in 1..=steps {
        psi = trajectory_step(ops, &psi, dt, sqrt_dt * noise.standard_normal())?;
        if s % every == 0 || s == steps {
            out.push((s as f64 * dt, psi.clone()));
        }
    }
    Ok(out)
}

/// Ensemble parameters.
#[derive(Debug, Clone, Copy)]
pub struct EnsemblePlan {
    pub t_final: f64,
    pub dt: f64,
    pub n_traj: usize,
    pub master_seed: u64,
    pub leaf_size: usize,
}

impl EnsemblePlan {
    pub fn new(t_final: f64, dt: f64, n_traj: usize, master_seed: u64) -> Result<Self> {
        step_count(t_final, dt)?;
        if n_traj < 1 {
            return Err(Error::param("n_traj", "at least one trajectory is needed"));
        }
        Ok(EnsemblePlan {
            t_final,
            dt,
            n_traj,
            master_seed,
            leaf_size: DEFAULT_LEAF_SIZE,
        })
    }

    /// Consecutive trajectory-index ranges, one per leaf.
    pub fn leaves(&self) -> Vec<Range<u64>> {
        let size = self.leaf_size.max(1) as u64;
        let total = self.n_traj as u64;
        (0..total.div_ceil(size))
            .map(|l| l * size..((l + 1) * size).min(total))
            .collect()
    }
}

/// Running sums over a set of trajectories.
#[derive(Debug, Clone)]
pub struct Partial {
    pub count: usize,
    pub sum_psi: Vec<C64>,
    pub sum_abs2: Vec<f64>,
    pub sum_rho: CMat,
    /// `Σ ‖ψψ†‖_F² = Σ ‖ψ‖⁴`.
    pub sum_frob2: f64,
    pub max_norm_drift: f64,
    /// Final norm of every trajectory, in index order.
    pub final_norms: Vec<f64>,
}

impl Partial {
    fn empty(n: usize) -> Self {
        Partial {
            count: 0,
            sum_psi: alloc::vec![ZERO; n],
            sum_abs2: alloc::vec![0.0; n],
            sum_rho: CMat::zeros(n, n),
            sum_frob2: 0.0,
            max_norm_drift: 0.0,
            final_norms: Vec::new(),
        }
    }

    fn add(&mut self, psi: &[C64], drift: f64) {
        let n = psi.len();
        for i in 0..n {
            self.sum_psi[i] += psi[i];
            self.sum_abs2[i] += psi[i].norm_sqr();
        }
        for j in 0..n {
            let cj = psi[j].conj();
            for i in 0..n {
                self.sum_rho[(i, j)] += psi[i] * cj;
            }
        }
        let nn: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        self.sum_frob2 += nn * nn;
        self.count += 1;
        self.max_norm_drift = self.max_norm_drift.max(drift);
        self.final_norms.push(nn.sqrt());
    }

    /// `self` followed by `other`.
    pub fn merge(mut self, other: Partial) -> Partial {
        for (a, b) in self.sum_psi.iter_mut().zip(&other.sum_psi) {
            *a += b;
        }
        for (a, b) in self.sum_abs2.iter_mut().zip(&other.sum_abs2) {
            *a += b;
        }
        self.sum_rho = &self.sum_rho + &other.sum_rho;
        self.sum_frob2 += other.sum_frob2;
        self.count += other.count;
        self.max_norm_drift = self.max_norm_drift.max(other.max_norm_drift);
        self.final_norms.extend(other.final_norms);
        self
    }
}

/// Runs the trajectories `indices` sequentially.
pub fn run_leaf(
    ops: &LatticeOperators,
    psi0: &[C64],
    plan: &EnsemblePlan,
    indices: Range<u64>,
) -> Result<Partial> {
    let mut acc = Partial::empty(ops.n_sites());
    for idx in indices {
        let mut noise = NoiseStream::new(plan.master_seed, idx);
        let r = run_trajectory(ops, psi0, plan.t_final, plan.dt, &mut noise)?;
        acc.add(&r.psi, r.max_norm_drift);
    }
    Ok(acc)
}

/// Pairwise tree: `(0,1), (2,3), …` then recursively, carrying an odd last
/// element up unchanged.
pub fn reduce_tree(mut parts: Vec<Partial>) -> Option<Partial> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a.merge(b)),
                None => next.push(a),
            }
        }
        parts = next;
    }
    parts.pop()
}

/// Ensemble average and its statistical error.
#[derive(Debug, Clone)]
pub struct TrajectoryEnsemble {
    pub n_traj: usize,
    pub master_seed: u64,
    pub dt: f64,
    pub t_final: f64,
    /// `(1/M) Σ |ψ⟩⟨ψ|`.
    pub rho_estimate: CMat,
    /// Sample Frobenius deviation of the projectors divided by `√M`
    /// (NaN for a single trajectory).
    pub standard_error: f64,
    /// `(1/M) Σ ψ`.
    pub mean_psi: Vec<C64>,
    /// Per-component standard error of `mean_psi` (real and imaginary
    /// variances combined).
    pub mean_psi_standard_error: Vec<f64>,
    pub final_norms: Vec<f64>,
    pub max_norm_drift: f64,
}

pub fn finalize(plan: &EnsemblePlan, total: Partial) -> TrajectoryEnsemble {
    let m = total.count as f64;
    let inv = 1.0 / m;
    let rho_estimate = linalg::scale(&total.sum_rho, C64::new(inv, 0.0));
    let mean_psi: Vec<C64> = total.sum_psi.iter().map(|z| z * inv).collect();
    let (standard_error, mean_psi_standard_error) = if total.count > 1 {
        let f2 = linalg::frobenius(&rho_estimate).powi(2);
        let var = ((total.sum_frob2 - m * f2) / (m - 1.0)).max(0.0);
        let se_psi = total
            .sum_abs2
            .iter()
            .zip(&mean_psi)
            .map(|(s, mu)| (((s - m * mu.norm_sqr()) / (m - 1.0)).max(0.0) / m).sqrt())
            .collect();
        ((var / m).sqrt(), se_psi)
    } else {
        (f64::NAN, alloc::vec![f64::NAN; mean_psi.len()])
    };
    TrajectoryEnsemble {
        n_traj: total.count,
        master_seed: plan.master_seed,
        dt: plan.dt,
        t_final: plan.t_final,
        rho_estimate,
        standard_error,
        mean_psi,
        mean_psi_standard_error,
        final_norms: total.final_norms,
        max_norm_drift: total.max_norm_drift,
    }
}

/// Sequential ensemble run; any parallel driver that evaluates the same
/// leaves and calls [`reduce_tree`] gives an identical result.
pub fn run_ensemble(
    ops: &LatticeOperators,
    psi0: &[C64],
    t_final: f64,
    dt: f64,
    n_traj: usize,
    master_seed: u64,
) -> Result<TrajectoryEnsemble> {
    let plan = EnsemblePlan::new(t_final, dt, n_traj, master_seed)?;
    run_plan(ops, psi0, &plan)
}

pub fn run_plan(ops: &LatticeOperators, psi0: &[C64], plan: &EnsemblePlan) -> Result<TrajectoryEnsemble> {
    if psi0.len() != ops.n_sites() {
        return Err(Error::InvalidSize(format!(
            "psi has {} components, lattice {}",
            psi0.len(),
            ops.n_sites()
        )));
    }
    let parts = plan
        .leaves()
        .into_iter()
        .map(|r| run_leaf(ops, psi0, plan, r))
        .collect::<Result<Vec<_>>>()?;
    let total = reduce_tree(parts).expect("at least one leaf");
    Ok(finalize(plan, total))
}

/// `Ψ(k) = 1/√(2π)` on an `M`-point grid: the excitation on site 0.
pub fn localized_bloch_state(n_k: usize) -> Vec<C64> {
    alloc::vec![C64::new(1.0 / (2.0 * PI).sqrt(), 0.0); n_k]
}

/// `Ψ(k,t) = Ψ(k,0) exp[-iH(k)t - iP(k)W]` with one draw `W ~ N(0, t)`.
pub fn bloch_trajectory<N: NoiseSource>(
    model: &BandModel,
    psi0_k: &[C64],
    t: f64,
    noise: &mut N,
) -> Result<Vec<C64>> {
    if !(t >= 0.0) {
        return Err(Error::param("t", format!("t = {t} must be >= 0")));
    }
    let w = t.sqrt() * noise.standard_normal();
    Ok(bloch_phase(model, psi0_k, t, w))
}

fn bloch_phase(model: &BandModel, psi0_k: &[C64], t: f64, w: f64) -> Vec<C64> {
    let m = psi0_k.len();
    psi0_k
        .iter()
        .enumerate()
        .map(|(j, z)| {
            let (h, p) = model.eval(grid_point(j, m));
            z * C64::new(0.0, -(h.re * t + p.re * w)).exp()
        })
        .collect()
}

/// `ψ_n = (1/√(2π)) (2π/M) Σ_j Ψ(k_j) e^{i k_j n}` for `n` in `sites`.
pub fn comb_amplitudes(psi_k: &[C64], sites: Range<i64>) -> Vec<C64> {
    let m = psi_k.len();
    let c = (2.0 * PI).sqrt() / m as f64;
    sites
        .map(|n| {
            let s: C64 = psi_k
                .iter()
                .enumerate()
                .map(|(j, z)| z * C64::from_polar(1.0, grid_point(j, m) * n as f64))
                .sum();
            s * c
        })
        .collect()
}

/// Round-trip record of the loop map.
#[derive(Debug, Clone)]
pub struct StroboscopicRun {
    /// `W_t` for `t = 0..=T` (`W_0 = 0`).
    pub wiener: Vec<f64>,
    /// Comb amplitudes over the requested sites for `t = 0..=T`.
    pub comb: Vec<Vec<C64>>,
    pub sites: Range<i64>,
    /// `Ψ(k, T)`.
    pub final_psi_k: Vec<C64>,
}

/// `Ψ(k,t) = Ψ(k,0) exp[-iH(k)t - iP(k)W_t]` at integer `t`, with
/// `W_t = ξ_1 + … + ξ_t` (variance `t`).
pub fn stroboscopic_loop<N: NoiseSource>(
    model: &BandModel,
    psi0_k: &[C64],
    n_roundtrips: usize,
    sites: Range<i64>,
    noise: &mut N,
) -> Result<StroboscopicRun> {
    if n_roundtrips < 1 {
        return Err(Error::param("n_roundtrips", "at least one round trip"));
    }
    if psi0_k.len() < 2 {
        return Err(Error::InvalidSize(format!("{} momenta", psi0_k.len())));
    }
    let mut w = 0.0;
    let mut wiener = alloc::vec![0.0];
    let mut comb = alloc::vec![comb_amplitudes(psi0_k, sites.clone())];
    let mut last = psi0_k.to_vec();
    for t in 1..=n_roundtrips {
        w += noise.standard_normal();
        wiener.push(w);
        last = bloch_phase(model, psi0_k, t as f64, w);
        comb.push(comb_amplitudes(&last, sites.clone()));
    }
    Ok(StroboscopicRun {
        wiener,
        comb,
        sites,
        final_psi_k: last,
    })
}
