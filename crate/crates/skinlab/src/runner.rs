//! Experiment dispatch: numerical modules in, figure datasets out.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;
use skinlab_core::band::grid_point;
use skinlab_core::bulk::{self, Line};
use skinlab_core::curve::{distance_to_curve, winding_number};
use skinlab_core::evolve::{self, DensityMatrix, MasterPropagator, SemiclassicalPropagator};
use skinlab_core::lattice::{self, LatticeOperators};
use skinlab_core::liouvillian::{self, DEFAULT_DIM_CAP};
use skinlab_core::trajectories::EnsemblePlan;
use skinlab_core::{linalg, CMat, C64};

use crate::config::{Experiment, ExperimentConfig, ModelInstance, ModelKind, Validated};
use crate::ensemble;
use crate::error::{RunError, RunResult};
use crate::formats::{self, BandModelJson, Cell, Csv, FileEntry, Header, Writer};
use crate::row;

pub const DEFAULT_OUTPUT_DIR: &str = "skinlab-out";
pub const MANIFEST_NAME: &str = "manifest.json";

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    /// Replaces `master_seed` for trajectory runs; ignored otherwise.
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub figure: String,
    pub config_sha256: String,
    pub config: ExperimentConfig,
    pub wall_time_seconds: f64,
    pub files: Vec<FileEntry>,
}

pub fn load_config(path: &Path) -> RunResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    ExperimentConfig::from_json(&text)
}

pub fn apply_overrides(mut c: ExperimentConfig, opts: &RunOptions) -> ExperimentConfig {
    if let Some(s) = opts.seed {
        if c.experiment == Experiment::Trajectories {
            c.master_seed = Some(s);
        }
    }
    if let Some(o) = &opts.out {
        c.output_dir = Some(o.clone());
    }
    c
}

/// Validates, runs and writes datasets plus `manifest.json` into the output
/// directory. Returns that directory and the manifest.
pub fn run_experiment(config: ExperimentConfig, opts: &RunOptions) -> RunResult<(PathBuf, Manifest)> {
    if opts.threads == Some(0) {
        return Err(RunError::invalid("--threads", "must be >= 1"));
    }
    let config = apply_overrides(config, opts);
    let v = config.validate()?;
    let dir = v
        .config
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    let start = Instant::now();
    let mut w = Writer::new(&dir)?;
    let header = Header {
        experiment: v.config.experiment.name(),
        figure: v.config.experiment.figure(),
        config_sha256: v.hash.clone(),
    };
    ensemble::with_threads(opts.threads, || dispatch(&v, &header, &mut w))
        .map_err(|e| RunError::invalid("--threads", e.to_string()))??;
    let manifest = Manifest {
        tool: "skinlab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: header.experiment.into(),
        figure: header.figure.into(),
        config_sha256: v.hash.clone(),
        config: v.config.clone(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        files: w.files.clone(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    let path = dir.join(MANIFEST_NAME);
    std::fs::write(&path, text).map_err(|e| RunError::io(&path, e))?;
    Ok((dir, manifest))
}

fn dispatch(v: &Validated, h: &Header, w: &mut Writer) -> RunResult<()> {
    let name = v.config.experiment.name();
    let ctx = Ctx { v, h, name };
    match v.config.experiment {
        Experiment::Spectra => ctx.spectra(w),
        Experiment::BulkRelax => ctx.bulk_relax(w),
        Experiment::ObcRelax => ctx.obc_relax(w),
        Experiment::LiouvillianSpectrum => ctx.liouvillian_spectrum(w),
        Experiment::EntropyTrace => ctx.entropy_trace(w),
        Experiment::Trajectories => ctx.trajectories(w),
        Experiment::HatanoNelson => ctx.hatano_nelson(w),
        Experiment::SemiclassicalDrift => ctx.semiclassical_drift(w),
    }
}

struct Ctx<'a> {
    v: &'a Validated,
    h: &'a Header,
    name: &'static str,
}

fn phi_cell(m: &ModelInstance) -> Cell {
    m.phi.map(Cell::F).unwrap_or(Cell::S(String::new()))
}

fn tagged(prefix: &str, m: &ModelInstance, suffix: &str) -> String {
    format!("{prefix}_{}{suffix}", m.tag)
}

fn series_columns() -> [&'static str; 4] {
    ["t", "S", "purity", "first_moment"]
}

impl Ctx<'_> {
    fn num(&self) -> impl Fn(skinlab_core::Error) -> RunError + '_ {
        move |e| match e {
            skinlab_core::Error::InvalidParameter { name, reason } => RunError::invalid(name, reason),
            other => RunError::Numerical {
                experiment: self.name,
                source: other,
            },
        }
    }

    fn n_sites(&self) -> usize {
        self.v.config.n_sites.expect("validated")
    }

    fn times(&self) -> &[f64] {
        self.v.config.times.as_deref().expect("validated")
    }

    fn initial(&self) -> usize {
        self.v.config.initial_site.expect("validated")
    }

    fn ops(&self, m: &ModelInstance) -> RunResult<LatticeOperators> {
        let n = self.n_sites();
        match &m.kind {
            ModelKind::Band(b) => {
                let c = self.v.config.construction.expect("validated").into();
                lattice::build_obc(b, n, c)
            }
            ModelKind::HatanoNelson { j1, j2 } => lattice::build_hatano_nelson(*j1, *j2, n),
        }
        .map_err(self.num())
    }

    fn spectra(&self, w: &mut Writer) -> RunResult<()> {
        let n = self.n_sites();
        let n_pbc = self.v.config.n_pbc.expect("validated");
        let mut summary = Csv::new(
            self.h,
            "one row per model: skin localization and position of the open-boundary spectrum relative to the periodic curve",
            &[
                "tag",
                "phi",
                "n_sites",
                "skin_localization",
                "min_winding",
                "max_winding",
                "mean_distance",
                "max_distance",
                "max_relative_residual",
            ],
        );
        for m in &self.v.models {
            let curve: Vec<(f64, C64)> = match &m.kind {
                ModelKind::Band(b) => {
                    w.json(
                        &tagged("spectra", m, "_model.json"),
                        self.h,
                        "band model Fourier coefficients [m, re, im]",
                        serde_json::to_value(BandModelJson::from_model(b)).expect("model serializes"),
                    )?;
                    b.pbc_spectrum(n_pbc).map_err(self.num())?
                }
                ModelKind::HatanoNelson { j1, j2 } => (0..n_pbc)
                    .map(|j| {
                        let k = grid_point(j, n_pbc);
                        (k, lattice::hatano_nelson_pbc_energy(*j1, *j2, k))
                    })
                    .collect(),
            };
            let ops = self.ops(m)?;
            let rep = lattice::obc_spectrum(&ops).map_err(self.num())?;
            let pts: Vec<C64> = curve.iter().map(|x| x.1).collect();

            let mut pbc = Csv::new(self.h, "periodic-boundary spectrum E(k) = H(k) - (i/2) P(k)^2", &["index", "k", "re_E", "im_E"]);
            for (i, (k, e)) in curve.iter().enumerate() {
                pbc.row(&row![i, *k, e.re, e.im]);
            }
            w.csv(&tagged("spectra", m, "_pbc.csv"), pbc)?;

            let mut obc = Csv::new(
                self.h,
                "open-boundary eigenvalues of H_eff; mean_position is 1-based",
                &["index", "re_E", "im_E", "mean_position", "winding", "distance_to_pbc"],
            );
            let mut winds = Vec::new();
            let mut dists = Vec::new();
            for (i, (z, pos)) in rep.eigenvalues.iter().zip(&rep.mean_positions).enumerate() {
                let wn = winding_number(&pts, *z);
                let d = distance_to_curve(&pts, *z);
                winds.push(wn);
                dists.push(d);
                obc.row(&row![i, z.re, z.im, *pos, wn, d]);
            }
            w.csv(&tagged("spectra", m, "_obc.csv"), obc)?;

            let mean = dists.iter().sum::<f64>() / dists.len() as f64;
            let max = dists.iter().cloned().fold(0.0, f64::max);
            summary.row(&[
                Cell::S(m.tag.clone()),
                phi_cell(m),
                n.into(),
                lattice::skin_localization(&rep, n).into(),
                (*winds.iter().min().unwrap()).into(),
                (*winds.iter().max().unwrap()).into(),
                mean.into(),
                max.into(),
                rep.max_relative_residual.into(),
            ]);
        }
        w.csv("spectra_summary.csv", summary)
    }

    fn bulk_relax(&self, w: &mut Writer) -> RunResult<()> {
        let n_k = self.v.config.n_k.expect("validated");
        let half = self.v.config.window.expect("validated") as i64;
        let times = self.times();
        for m in &self.v.models {
            let ModelKind::Band(b) = &m.kind else { unreachable!("validated") };
            let mut series = Csv::new(
                self.h,
                "edge-free relaxation from site 0; peaks over the full grid window, antidiag excludes n = 0",
                &["t", "trace_re", "trace_im", "first_moment", "diag_peak", "antidiag_peak"],
            );
            let mut frames = Vec::new();
            for (i, &t) in times.iter().enumerate() {
                let full = bulk::bulk_wannier_density(b, n_k, t, bulk::full_window(n_k)).map_err(self.num())?;
                let lim = (n_k / 2) as i64;
                let mut diag = 0.0f64;
                let mut anti = 0.0f64;
                for n in -lim + 1..lim {
                    diag = diag.max(full.get(n, n).unwrap().norm());
                    if n != 0 {
                        anti = anti.max(full.get(n, -n).unwrap().norm());
                    }
                }
                let tr = full.trace();
                series.row(&row![t, tr.re, tr.im, full.first_moment(), diag, anti]);
                let size = (2 * half + 1) as usize;
                let block = CMat::from_fn(size, size, |a, c| full.get(a as i64 - half, c as i64 - half).unwrap());
                w.csv(
                    &tagged("bulk", m, &format!("_t{i}.csv")),
                    formats::density_csv(self.h, &format!("density matrix in the site basis at t = {t}"), &block, -half),
                )?;
                frames.push(block);
            }
            w.csv(&tagged("bulk", m, "_series.csv"), series)?;
            w.json(
                &tagged("bulk", m, "_frames.json"),
                self.h,
                "density-matrix frames, rows n and columns m from first_site",
                formats::frames_json(times, &frames, -half),
            )?;

            let fit_times: Vec<f64> = times.iter().cloned().filter(|&t| t > 0.0).collect();
            if fit_times.len() >= 4 {
                let v = (0..4096)
                    .map(|j| b.group_velocity(grid_point(j, 4096)).abs())
                    .fold(0.0, f64::max);
                let mut lines = serde_json::Map::new();
                for (key, line) in [("diagonal", Line::Diagonal), ("antidiagonal", Line::AntiDiagonal)] {
                    let entry = match bulk::decay_exponents(b, n_k, &fit_times, line, v) {
                        Ok(r) => json!({
                            "power_law_exponent": r.power_law.slope,
                            "power_law_stderr": r.power_law.slope_stderr,
                            "power_law_residual_rms": r.power_law.residual_rms,
                            "exponential_rate": r.exponential.slope,
                            "exponential_residual_rms": r.exponential.residual_rms,
                            "exponential_preferred": r.exponential_preferred(),
                            "samples": r.samples.iter().map(|s| json!([s.0, s.1, s.2, s.3])).collect::<Vec<_>>(),
                        }),
                        Err(skinlab_core::Error::Underflow { floor }) => json!({ "underflow_below": floor }),
                        Err(e) => return Err(self.num()(e)),
                    };
                    lines.insert(key.into(), entry);
                }
                lines.insert("velocity".into(), json!(v));
                w.json(
                    &tagged("bulk", m, "_decay.json"),
                    self.h,
                    "fits of |rho| along n = +-v t (diagonal) and m = -n (antidiagonal) over the later half of the times; samples are [t, n, m, abs]",
                    serde_json::Value::Object(lines),
                )?;
            }
        }
        Ok(())
    }

    fn density_series(
        &self,
        w: &mut Writer,
        prefix: &str,
        m: &ModelInstance,
        prop: &MasterPropagator,
        rho0: &DensityMatrix,
    ) -> RunResult<()> {
        let times = self.times();
        let mut series = Csv::new(self.h, "observables of the master-equation state; first_moment is 1-based", &series_columns());
        let mut frames = Vec::new();
        for (i, &t) in times.iter().enumerate() {
            let r = prop.propagate(rho0, t).map_err(self.num())?;
            let obs = evolve::observables(&r);
            let s = evolve::von_neumann_entropy(&r).map_err(self.num())?;
            series.row(&row![t, s, obs.purity, obs.first_moment]);
            w.csv(
                &tagged(prefix, m, &format!("_t{i}.csv")),
                formats::density_csv(self.h, &format!("density matrix at t = {t}, 1-based sites"), r.matrix(), 1),
            )?;
            frames.push(r.into_matrix());
        }
        w.csv(&tagged(prefix, m, "_series.csv"), series)?;
        w.json(
            &tagged(prefix, m, "_frames.json"),
            self.h,
            "density-matrix frames, rows n and columns m from first_site",
            formats::frames_json(times, &frames, 1),
        )
    }

    fn obc_relax(&self, w: &mut Writer) -> RunResult<()> {
        let rho0 = DensityMatrix::site(self.n_sites(), self.initial()).map_err(self.num())?;
        for m in &self.v.models {
            let lm = liouvillian::build_liouvillian(&self.ops(m)?);
            let prop = MasterPropagator::new(&lm).map_err(self.num())?;
            self.density_series(w, "obc", m, &prop, &rho0)?;
        }
        Ok(())
    }

    fn liouvillian_spectrum(&self, w: &mut Writer) -> RunResult<()> {
        let n = self.n_sites();
        let mut summary = Csv::new(
            self.h,
            "one row per model: kernel of the Liouvillian and structural checks",
            &[
                "tag",
                "phi",
                "n_sites",
                "kernel_dimension",
                "zero_tolerance",
                "singular_value_gap",
                "max_real_part",
                "conjugation_asymmetry",
                "trace_preservation",
            ],
        );
        for m in &self.v.models {
            let lm = liouvillian::build_liouvillian(&self.ops(m)?);
            let spec = liouvillian::liouvillian_spectrum(&lm, DEFAULT_DIM_CAP, false).map_err(self.num())?;
            let stat = liouvillian::stationary_states(&lm, DEFAULT_DIM_CAP).map_err(self.num())?;
            let chk = liouvillian::check_liouvillian(&lm, &spec);
            w.csv(
                &tagged("liouvillian", m, ".csv"),
                formats::eigenvalue_csv(self.h, "Liouvillian eigenvalues sorted by (re, im)", &spec.eigenvalues),
            )?;
            summary.row(&[
                Cell::S(m.tag.clone()),
                phi_cell(m),
                n.into(),
                stat.zero_eigenvalue_multiplicity.into(),
                stat.tolerance.into(),
                stat.singular_value_gap().into(),
                chk.max_real_part.into(),
                chk.conjugation_asymmetry.into(),
                chk.trace_preservation.into(),
            ]);
        }
        w.csv("liouvillian_summary.csv", summary)
    }

    fn entropy_trace(&self, w: &mut Writer) -> RunResult<()> {
        let n = self.n_sites();
        let rho0 = DensityMatrix::site(n, self.initial()).map_err(self.num())?;
        let mut summary = Csv::new(
            self.h,
            "one row per model: long-time entropy; s_infinity is the entropy of the zero-mode projection",
            &["tag", "phi", "n_sites", "initial_site", "long_time", "s_long_time", "s_infinity", "ln_n"],
        );
        for m in &self.v.models {
            let lm = liouvillian::build_liouvillian(&self.ops(m)?);
            let prop = MasterPropagator::new(&lm).map_err(self.num())?;
            let mut times = self.times().to_vec();
            let long = prop.long_time().ok();
            if let Some(lt) = long {
                if lt > *times.last().unwrap() {
                    times.push(lt);
                }
            }
            let tr = evolve::entropy_trace_with(&prop, &rho0, &times).map_err(self.num())?;
            let mut csv = Csv::new(
                self.h,
                "von Neumann entropy (nats) along the master-equation evolution; a final row at the long time 10/|Re lambda_slow| is appended when it exceeds the requested times",
                &series_columns(),
            );
            for &(t, s) in &tr.points {
                let obs = evolve::observables(&prop.propagate(&rho0, t).map_err(self.num())?);
                csv.row(&row![t, s, obs.purity, obs.first_moment]);
            }
            w.csv(&tagged("entropy", m, ".csv"), csv)?;
            let s_long = tr.points.last().unwrap().1;
            summary.row(&[
                Cell::S(m.tag.clone()),
                phi_cell(m),
                n.into(),
                self.initial().into(),
                long.map(Cell::F).unwrap_or(Cell::S(String::new())),
                s_long.into(),
                tr.s_infinity.into(),
                (n as f64).ln().into(),
            ]);
        }
        w.csv("entropy_summary.csv", summary)
    }

    fn trajectories(&self, w: &mut Writer) -> RunResult<()> {
        let n = self.n_sites();
        let c = &self.v.config;
        let (dt, n_traj, seed) = (c.dt.unwrap(), c.n_traj.unwrap(), c.master_seed.unwrap());
        let psi0 = evolve::site_vector(n, self.initial()).map_err(self.num())?;
        let rho0 = DensityMatrix::pure(&psi0).map_err(self.num())?;
        for m in &self.v.models {
            let ops = self.ops(m)?;
            let sc = SemiclassicalPropagator::new(&ops).map_err(self.num())?;
            let master = if n * n <= DEFAULT_DIM_CAP {
                Some(MasterPropagator::new(&liouvillian::build_liouvillian(&ops)).map_err(self.num())?)
            } else {
                None
            };
            for (i, &t) in self.times().iter().enumerate() {
                let plan = EnsemblePlan::new(t, dt, n_traj, seed).map_err(self.num())?;
                let e = ensemble::run_parallel(&ops, &psi0, &plan).map_err(self.num())?;
                let stem = tagged("traj", m, &format!("_t{i}"));
                w.csv(
                    &format!("{stem}_rho.csv"),
                    formats::density_csv(self.h, &format!("ensemble average of |psi><psi| at t = {t}, 1-based sites"), &e.rho_estimate, 1),
                )?;
                let nj = sc.propagate(&psi0, t).map_err(self.num())?;
                let mut mp = Csv::new(
                    self.h,
                    &format!("ensemble mean wavefunction at t = {t} and the no-jump prediction exp(-i H_eff t) psi0"),
                    &["n", "re", "im", "standard_error", "no_jump_re", "no_jump_im"],
                );
                for s in 0..n {
                    let (a, b) = (e.mean_psi[s], nj.psi[s]);
                    mp.row(&row![s + 1, a.re, a.im, e.mean_psi_standard_error[s], b.re, b.im]);
                }
                w.csv(&format!("{stem}_mean_psi.csv"), mp)?;
                let mut norms = Csv::new(self.h, "final norm of every trajectory", &["trajectory", "final_norm"]);
                for (k, x) in e.final_norms.iter().enumerate() {
                    norms.row(&row![k, *x]);
                }
                w.csv(&format!("{stem}_norms.csv"), norms)?;
                let master_err = match &master {
                    Some(p) => {
                        let r = p.propagate(&rho0, t).map_err(self.num())?;
                        Some(linalg::frobenius(&(&e.rho_estimate - r.matrix())))
                    }
                    None => None,
                };
                w.json(
                    &format!("{stem}_summary.json"),
                    self.h,
                    "ensemble statistics; master_frobenius_error compares with the dense master-equation solution",
                    json!({
                        "t": t,
                        "n_traj": e.n_traj,
                        "master_seed": e.master_seed,
                        "dt": e.dt,
                        "leaf_size": plan.leaf_size,
                        "standard_error": finite_or_null(e.standard_error),
                        "max_norm_drift": e.max_norm_drift,
                        "master_frobenius_error": master_err,
                    }),
                )?;
            }
        }
        Ok(())
    }

    fn hatano_nelson(&self, w: &mut Writer) -> RunResult<()> {
        let n = self.n_sites();
        let m = &self.v.models[0];
        let ModelKind::HatanoNelson { j1, j2 } = m.kind else { unreachable!("validated") };
        let ops = self.ops(m)?;

        let p2 = linalg::hermitian_eigenvalues(ops.p2()).map_err(self.num())?;
        let mut closed: Vec<f64> = (1..=n)
            .map(|a| 2.0 * (j2 - j1) * (1.0 + (std::f64::consts::PI * a as f64 / (n as f64 + 1.0)).cos()))
            .collect();
        closed.sort_by(f64::total_cmp);
        let mut csv = Csv::new(self.h, "eigenvalues of P^2, ascending, next to 2(J2-J1)[1 + cos(pi a/(N+1))]", &["index", "eigenvalue", "closed_form"]);
        for (i, (a, b)) in p2.iter().zip(&closed).enumerate() {
            csv.row(&row![i, *a, *b]);
        }
        w.csv("hn_p2_spectrum.csv", csv)?;

        let rep = lattice::obc_spectrum(&ops).map_err(self.num())?;
        let mut obc = Csv::new(self.h, "open-boundary eigenvalues of H_eff; mean_position is 1-based", &["index", "re_E", "im_E", "mean_position"]);
        for (i, (z, p)) in rep.eigenvalues.iter().zip(&rep.mean_positions).enumerate() {
            obc.row(&row![i, z.re, z.im, *p]);
        }
        w.csv("hn_obc_spectrum.csv", obc)?;

        let lm = liouvillian::build_liouvillian(&ops);
        let prop = MasterPropagator::new(&lm).map_err(self.num())?;
        let mut values = match prop.eigenvalues() {
            Some(v) => v.to_vec(),
            None => liouvillian::liouvillian_spectrum(&lm, DEFAULT_DIM_CAP, false).map_err(self.num())?.eigenvalues,
        };
        values.sort_by(linalg::cmp_re_im);
        w.csv(
            "hn_liouvillian.csv",
            formats::eigenvalue_csv(self.h, "Liouvillian eigenvalues sorted by (re, im)", &values),
        )?;
        let tol = lm.zero_tolerance();
        let kernel = values.iter().filter(|z| z.norm() <= tol).count();

        let rho0 = DensityMatrix::site(n, self.initial()).map_err(self.num())?;
        self.density_series(w, "obc", m, &prop, &rho0)?;
        let mixed = liouvillian::maximally_mixed(n);
        let long = prop.long_time().map_err(self.num())?;
        let r = prop.propagate(&rho0, long).map_err(self.num())?;
        w.json(
            "hn_summary.json",
            self.h,
            "kernel dimension and relaxation to the maximally mixed state",
            json!({
                "n_sites": n,
                "j1": j1,
                "j2": j2,
                "initial_site": self.initial(),
                "kernel_dimension": kernel,
                "zero_tolerance": tol,
                "eigenvector_condition": finite_or_null(prop.condition()),
                "long_time": long,
                "maxabs_to_mixed_at_long_time": linalg::max_abs_diff(r.matrix(), &mixed),
            }),
        )
    }

    fn semiclassical_drift(&self, w: &mut Writer) -> RunResult<()> {
        let n = self.n_sites();
        let dt = self.v.config.dt.unwrap();
        let psi0 = evolve::site_vector(n, self.initial()).map_err(self.num())?;
        for m in &self.v.models {
            let ops = self.ops(m)?;
            let sc = SemiclassicalPropagator::new(&ops).map_err(self.num())?;
            let mut rho = DensityMatrix::site(n, self.initial()).map_err(self.num())?.into_matrix();
            let mut now = 0.0;
            let mut csv = Csv::new(
                self.h,
                &format!("first moments (1-based): master equation by fourth-order Runge-Kutta with step {dt}, normalized no-jump evolution"),
                &["t", "lindblad_first_moment", "semiclassical_first_moment", "semiclassical_norm", "lindblad_trace"],
            );
            for &t in self.times() {
                rho = evolve::rk4_master(&ops, &rho, t - now, dt).map_err(self.num())?;
                now = t;
                let moment: f64 = (0..n).map(|i| (i + 1) as f64 * rho[(i, i)].re).sum();
                let s = sc.propagate(&psi0, t).map_err(self.num())?;
                csv.row(&row![t, moment, s.normalized_first_moment(), s.norm(), linalg::trace(&rho).re]);
            }
            w.csv(&tagged("drift", m, ".csv"), csv)?;
        }
        Ok(())
    }
}

fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        serde_json::Value::Null
    }
}
