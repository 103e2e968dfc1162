//! Experiment configuration: one JSON document per run.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use skinlab_core::lattice::Construction;
use skinlab_core::liouvillian::DEFAULT_DIM_CAP;
use skinlab_core::trajectories::{EnsemblePlan, DEFAULT_DT, MAX_DT};
use skinlab_core::{bulk, BandModel, C64};

use crate::error::{RunError, RunResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Spectra,
    BulkRelax,
    ObcRelax,
    LiouvillianSpectrum,
    EntropyTrace,
    Trajectories,
    HatanoNelson,
    SemiclassicalDrift,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Spectra => "spectra",
            Experiment::BulkRelax => "bulk_relax",
            Experiment::ObcRelax => "obc_relax",
            Experiment::LiouvillianSpectrum => "liouvillian_spectrum",
            Experiment::EntropyTrace => "entropy_trace",
            Experiment::Trajectories => "trajectories",
            Experiment::HatanoNelson => "hatano_nelson",
            Experiment::SemiclassicalDrift => "semiclassical_drift",
        }
    }

    /// Figure tag written into every output header.
    pub fn figure(self) -> &'static str {
        match self {
            Experiment::Spectra => "fig1",
            Experiment::BulkRelax => "fig2",
            Experiment::ObcRelax | Experiment::Trajectories => "fig3",
            Experiment::EntropyTrace => "fig3-inset",
            Experiment::LiouvillianSpectrum => "fig4",
            Experiment::SemiclassicalDrift => "fig6",
            Experiment::HatanoNelson => "fig7",
        }
    }
}

/// Lattice model. Fourier coefficients are `[m, re, im]` triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Cosine {
        j: f64,
        #[serde(default)]
        t: f64,
        r: f64,
        #[serde(default)]
        phi: f64,
    },
    Fourier {
        h: Vec<[f64; 3]>,
        p: Vec<[f64; 3]>,
        #[serde(default)]
        label: String,
    },
    HatanoNelson {
        j1: f64,
        j2: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstructionSpec {
    TruncateP,
    TruncateP2ThenSqrt,
}

impl From<ConstructionSpec> for Construction {
    fn from(c: ConstructionSpec) -> Self {
        match c {
            ConstructionSpec::TruncateP => Construction::TruncateP,
            ConstructionSpec::TruncateP2ThenSqrt => Construction::TruncateP2ThenSqrt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub model: ModelSpec,
    /// Sweep over `φ` for a cosine model; one output set per value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phis: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sites: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_traj: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// 1-based site of the initial excitation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_site: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub construction: Option<ConstructionSpec>,
    /// Half-width of the site window written by `bulk_relax`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    /// Momentum samples of the periodic-boundary curve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_pbc: Option<usize>,
}

/// Concrete lattice model of one sweep entry.
#[derive(Debug, Clone)]
pub enum ModelKind {
    Band(BandModel),
    HatanoNelson { j1: f64, j2: f64 },
}

#[derive(Debug, Clone)]
pub struct ModelInstance {
    /// File-name tag.
    pub tag: String,
    pub phi: Option<f64>,
    pub kind: ModelKind,
}

/// A config with defaults filled in, checked, and hashed.
#[derive(Debug, Clone)]
pub struct Validated {
    pub config: ExperimentConfig,
    pub models: Vec<ModelInstance>,
    pub hash: String,
}

const DEFAULT_N_PBC: usize = 1024;
const DEFAULT_WINDOW: usize = 20;
const DEFAULT_N_TRAJ: usize = 1000;
const DEFAULT_RK4_DT: f64 = 1e-3;

impl ExperimentConfig {
    pub fn from_json(text: &str) -> RunResult<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Fills defaults, checks every field the experiment reads, and rejects
    /// fields it does not read.
    pub fn validate(&self) -> RunResult<Validated> {
        let mut c = self.clone();
        let exp = c.experiment;
        let models = build_models(&c)?;
        let hn = models.iter().any(|m| matches!(m.kind, ModelKind::HatanoNelson { .. }));
        use Experiment::*;

        match exp {
            HatanoNelson if !hn => {
                return Err(RunError::invalid("model.kind", "hatano_nelson experiment needs a hatano_nelson model"))
            }
            BulkRelax if hn => {
                return Err(RunError::invalid("model.kind", "bulk_relax needs a band model"))
            }
            _ => {}
        }

        let needs_sites = exp != BulkRelax;
        let needs_times = !matches!(exp, Spectra | LiouvillianSpectrum);
        let needs_initial = matches!(exp, ObcRelax | EntropyTrace | Trajectories | HatanoNelson | SemiclassicalDrift);
        let dense = matches!(exp, ObcRelax | LiouvillianSpectrum | EntropyTrace | HatanoNelson);

        reject_unused("n_sites", c.n_sites.is_some(), needs_sites)?;
        reject_unused("times", c.times.is_some(), needs_times)?;
        reject_unused("initial_site", c.initial_site.is_some(), needs_initial)?;
        reject_unused("n_k", c.n_k.is_some(), exp == BulkRelax)?;
        reject_unused("window", c.window.is_some(), exp == BulkRelax)?;
        reject_unused("n_pbc", c.n_pbc.is_some(), exp == Spectra)?;
        reject_unused("n_traj", c.n_traj.is_some(), exp == Trajectories)?;
        reject_unused("master_seed", c.master_seed.is_some(), exp == Trajectories)?;
        reject_unused("dt", c.dt.is_some(), matches!(exp, Trajectories | SemiclassicalDrift))?;
        reject_unused("construction", c.construction.is_some(), needs_sites && !hn)?;

        if needs_sites {
            let n = c.n_sites.ok_or_else(|| RunError::invalid("n_sites", "required"))?;
            if n < 2 {
                return Err(RunError::invalid("n_sites", format!("{n} < 2")));
            }
            if dense && n * n > DEFAULT_DIM_CAP {
                return Err(RunError::invalid(
                    "n_sites",
                    format!("N² = {} exceeds the dense Liouvillian cap {DEFAULT_DIM_CAP}", n * n),
                ));
            }
            for m in &models {
                if let ModelKind::Band(b) = &m.kind {
                    if b.max_range() as usize >= n {
                        return Err(RunError::invalid(
                            "n_sites",
                            format!("{n} sites cannot hold hopping range {}", b.max_range()),
                        ));
                    }
                }
            }
            if !hn {
                c.construction.get_or_insert(ConstructionSpec::TruncateP);
            }
            if needs_initial {
                let s = *c.initial_site.get_or_insert(n.div_ceil(2));
                if s < 1 || s > n {
                    return Err(RunError::invalid("initial_site", format!("{s} outside 1..={n}")));
                }
            }
        }

        if needs_times {
            let times = c.times.as_deref().ok_or_else(|| RunError::invalid("times", "required"))?;
            if times.is_empty() {
                return Err(RunError::invalid("times", "empty"));
            }
            if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
                return Err(RunError::invalid("times", "entries must be finite and >= 0"));
            }
            if times.windows(2).any(|w| w[1] <= w[0]) {
                return Err(RunError::invalid("times", "must be strictly increasing"));
            }
        }

        match exp {
            Spectra => {
                let n = *c.n_pbc.get_or_insert(DEFAULT_N_PBC);
                if n < 16 {
                    return Err(RunError::invalid("n_pbc", format!("{n} < 16")));
                }
            }
            BulkRelax => {
                let n_k = *c.n_k.get_or_insert(bulk::DEFAULT_N_K);
                if n_k < 4 || n_k % 2 != 0 {
                    return Err(RunError::invalid("n_k", format!("{n_k} must be even and >= 4")));
                }
                let w = *c.window.get_or_insert(DEFAULT_WINDOW.min(n_k / 2 - 1));
                if w >= n_k / 2 {
                    return Err(RunError::invalid("window", format!("{w} must be < n_k/2 = {}", n_k / 2)));
                }
                let t_last = *c.times.as_ref().unwrap().last().unwrap();
                for m in &models {
                    if let ModelKind::Band(b) = &m.kind {
                        let cap = bulk::max_time(b, n_k);
                        if t_last > cap {
                            return Err(RunError::invalid(
                                "times",
                                format!("t = {t_last} exceeds the wrap-around limit {cap} for n_k = {n_k}"),
                            ));
                        }
                    }
                }
            }
            Trajectories => {
                let dt = *c.dt.get_or_insert(DEFAULT_DT);
                let n_traj = *c.n_traj.get_or_insert(DEFAULT_N_TRAJ);
                let seed = *c.master_seed.get_or_insert(0);
                let t = *c.times.as_ref().unwrap().last().unwrap();
                EnsemblePlan::new(t, dt, n_traj, seed).map_err(|e| match e {
                    skinlab_core::Error::InvalidParameter { name, reason } => {
                        RunError::invalid(if name == "t_final" { "times" } else { name }, reason)
                    }
                    other => RunError::invalid("dt", other.to_string()),
                })?;
            }
            SemiclassicalDrift => {
                let dt = *c.dt.get_or_insert(DEFAULT_RK4_DT);
                if !(dt > 0.0 && dt <= MAX_DT) {
                    return Err(RunError::invalid("dt", format!("{dt} outside (0, {MAX_DT}]")));
                }
            }
            _ => {}
        }

        let hash = config_hash(&c);
        Ok(Validated { config: c, models, hash })
    }
}

fn reject_unused(field: &str, present: bool, used: bool) -> RunResult<()> {
    if present && !used {
        return Err(RunError::invalid(field, "not used by this experiment"));
    }
    Ok(())
}

/// SHA-256 of the canonical JSON of the filled-in config, without
/// `output_dir`.
pub fn config_hash(c: &ExperimentConfig) -> String {
    let mut c = c.clone();
    c.output_dir = None;
    crate::formats::sha256_hex(&serde_json::to_vec(&c).expect("config serializes"))
}

fn build_models(c: &ExperimentConfig) -> RunResult<Vec<ModelInstance>> {
    let numerical = |e: skinlab_core::Error| match e {
        skinlab_core::Error::InvalidParameter { name, reason } => RunError::invalid(format!("model.{name}"), reason),
        other => RunError::invalid("model", other.to_string()),
    };
    match &c.model {
        ModelSpec::Cosine { j, t, r, phi } => {
            for (name, v) in [("j", j), ("t", t), ("r", r), ("phi", phi)] {
                if !v.is_finite() {
                    return Err(RunError::invalid(format!("model.{name}"), "must be finite"));
                }
            }
            if *r < 0.0 {
                return Err(RunError::invalid("model.r", format!("{r} < 0")));
            }
            match &c.phis {
                None => Ok(vec![ModelInstance {
                    tag: "model".into(),
                    phi: Some(*phi),
                    kind: ModelKind::Band(BandModel::cosine(*j, *t, *r, *phi).map_err(numerical)?),
                }]),
                Some(phis) => {
                    if phis.is_empty() {
                        return Err(RunError::invalid("phis", "empty"));
                    }
                    if phis.iter().any(|p| !p.is_finite()) {
                        return Err(RunError::invalid("phis", "entries must be finite"));
                    }
                    phis.iter()
                        .enumerate()
                        .map(|(i, &p)| {
                            Ok(ModelInstance {
                                tag: format!("phi{i}"),
                                phi: Some(p),
                                kind: ModelKind::Band(BandModel::cosine(*j, *t, *r, p).map_err(numerical)?),
                            })
                        })
                        .collect()
                }
            }
        }
        ModelSpec::Fourier { h, p, label } => {
            if c.phis.is_some() {
                return Err(RunError::invalid("phis", "only a cosine model can be swept"));
            }
            let h = coeff_map("model.h", h)?;
            let p = coeff_map("model.p", p)?;
            let label = if label.is_empty() { "fourier".to_string() } else { label.clone() };
            Ok(vec![ModelInstance {
                tag: "model".into(),
                phi: None,
                kind: ModelKind::Band(BandModel::new(h, p, label).map_err(numerical)?),
            }])
        }
        ModelSpec::HatanoNelson { j1, j2 } => {
            if c.phis.is_some() {
                return Err(RunError::invalid("phis", "only a cosine model can be swept"));
            }
            if !(j1.is_finite() && j2.is_finite()) {
                return Err(RunError::invalid("model.j1", "hoppings must be finite"));
            }
            if j2 < j1 {
                return Err(RunError::invalid("model.j2", format!("j2 = {j2} < j1 = {j1} makes P² indefinite")));
            }
            Ok(vec![ModelInstance {
                tag: "hn".into(),
                phi: None,
                kind: ModelKind::HatanoNelson { j1: *j1, j2: *j2 },
            }])
        }
    }
}

/// `[m, re, im]` triples to a coefficient map; `m` must be an integer and
/// appear once.
pub fn coeff_map(field: &str, triples: &[[f64; 3]]) -> RunResult<BTreeMap<i64, C64>> {
    let mut out = BTreeMap::new();
    for &[m, re, im] in triples {
        if m.fract() != 0.0 || !m.is_finite() || m.abs() > 1e6 {
            return Err(RunError::invalid(field, format!("harmonic {m} is not an integer")));
        }
        if !(re.is_finite() && im.is_finite()) {
            return Err(RunError::invalid(field, format!("coefficient of harmonic {m} is not finite")));
        }
        if out.insert(m as i64, C64::new(re, im)).is_some() {
            return Err(RunError::invalid(field, format!("harmonic {m} listed twice")));
        }
    }
    Ok(out)
}
