//! Run configuration: presets, the JSON config file and its layering
//! (flag > file > preset default).

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use swarmtrack::eval::EvalConfig;
use swarmtrack::filter::{FilterParams, Method};
use swarmtrack::manager::{Gates, RunParams};
use swarmtrack::motion::{CsmParams, ObservationModel};
use swarmtrack::sim::SimConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Synthetic scenes: world units, dt = 0.1 s.
    #[default]
    Simulation,
    /// Millimetre-scale footage at 100 Hz.
    Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvpfSection {
    /// Isotropic particle variance.
    pub sigma2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CskpfSection {
    /// Maneuver frequency, 1/s.
    pub alpha: f64,
    /// Maximum acceleration magnitude per axis.
    pub a_max: f64,
    /// Frames before the CSKPF output is accepted (including the two bootstrap frames).
    pub warmup_frames: usize,
    /// Isotropic variance of the triangulated observation.
    pub observation_variance: f64,
}

/// Filter, gate and bookkeeping parameters of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamConfig {
    pub preset: Preset,
    pub dt: f64,
    pub particles: usize,
    pub object_radius: f64,
    pub min_history: usize,
    pub cvpf: CvpfSection,
    pub cskpf: CskpfSection,
    pub gates: Gates,
}

impl ParamConfig {
    pub fn preset(preset: Preset) -> Self {
        let base = match preset {
            Preset::Simulation => RunParams::simulation(Method::Cskpf, 0),
            Preset::Real => RunParams::real_scale(Method::Cskpf, 0),
        };
        Self {
            preset,
            dt: base.filter.csm.dt,
            particles: base.filter.particles,
            object_radius: base.filter.object_radius,
            min_history: base.min_history,
            cvpf: CvpfSection {
                sigma2: base.filter.sigma2,
            },
            cskpf: CskpfSection {
                alpha: base.filter.csm.alpha[0],
                a_max: base.filter.csm.a_max[0],
                warmup_frames: base.warmup_frames,
                observation_variance: base.filter.observation.r[(0, 0)],
            },
            gates: base.gates,
        }
    }

    pub fn run_params(&self, method: Method, seed: u64) -> swarmtrack::Result<RunParams> {
        let p = RunParams {
            method,
            filter: FilterParams {
                particles: self.particles,
                sigma2: self.cvpf.sigma2,
                csm: CsmParams::isotropic(self.cskpf.alpha, self.cskpf.a_max, self.dt)?,
                observation: ObservationModel::isotropic(self.cskpf.observation_variance)?,
                object_radius: self.object_radius,
            },
            gates: self.gates,
            warmup_frames: self.cskpf.warmup_frames,
            min_history: self.min_history,
            seed,
        };
        p.validate()?;
        Ok(p)
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub method: Method,
    pub seed: u64,
    pub params: ParamConfig,
}

impl RunConfig {
    pub fn run_params(&self) -> swarmtrack::Result<RunParams> {
        self.params.run_params(self.method, self.seed)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialCvpf {
    pub sigma2: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialCskpf {
    pub alpha: Option<f64>,
    pub a_max: Option<f64>,
    pub warmup_frames: Option<usize>,
    pub observation_variance: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialGates {
    pub epipolar_px: Option<f64>,
    pub max_speed: Option<f64>,
    pub duplicate_radius: Option<f64>,
}

/// The JSON config file; every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<Preset>,
    pub method: Option<Method>,
    pub seed: Option<u64>,
    pub dt: Option<f64>,
    pub particles: Option<usize>,
    pub object_radius: Option<f64>,
    pub min_history: Option<usize>,
    #[serde(default)]
    pub cvpf: PartialCvpf,
    #[serde(default)]
    pub cskpf: PartialCskpf,
    #[serde(default)]
    pub gates: PartialGates,
    /// Scene for `simulate` and `sweep`.
    pub sim: Option<SimConfig>,
    pub eval: Option<EvalConfig>,
}

fn set<T: Copy>(dst: &mut T, src: Option<T>) {
    if let Some(v) = src {
        *dst = v;
    }
}

impl ConfigFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(swarmtrack::Error::from)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn load_opt(path: Option<&Path>) -> anyhow::Result<Self> {
        path.map(Self::load).transpose().map(Option::unwrap_or_default)
    }

    /// Preset defaults overlaid with the file values.
    pub fn run_config(&self, preset_flag: Option<Preset>) -> RunConfig {
        let preset = preset_flag.or(self.preset).unwrap_or_default();
        let mut p = ParamConfig::preset(preset);
        set(&mut p.dt, self.dt);
        set(&mut p.particles, self.particles);
        set(&mut p.object_radius, self.object_radius);
        set(&mut p.min_history, self.min_history);
        set(&mut p.cvpf.sigma2, self.cvpf.sigma2);
        set(&mut p.cskpf.alpha, self.cskpf.alpha);
        set(&mut p.cskpf.a_max, self.cskpf.a_max);
        set(&mut p.cskpf.warmup_frames, self.cskpf.warmup_frames);
        set(&mut p.cskpf.observation_variance, self.cskpf.observation_variance);
        set(&mut p.gates.epipolar_px, self.gates.epipolar_px);
        set(&mut p.gates.max_speed, self.gates.max_speed);
        set(&mut p.gates.duplicate_radius, self.gates.duplicate_radius);
        RunConfig {
            method: self.method.unwrap_or(Method::Cskpf),
            seed: self.seed.unwrap_or(0),
            params: p,
        }
    }
}

/// Tracking flags that override the config file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct TrackOverrides {
    /// Parameter preset.
    #[arg(long)]
    pub preset: Option<Preset>,
    /// Tracker: cvpf or cskpf.
    #[arg(long)]
    pub method: Option<Method>,
    /// Random seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Particles per tracker.
    #[arg(long)]
    pub particles: Option<usize>,
    /// CVPF particle variance.
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// CSKPF maneuver frequency, 1/s.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// CSKPF maximum acceleration.
    #[arg(long)]
    pub a_max: Option<f64>,
    /// CSKPF warm-up length in frames.
    #[arg(long)]
    pub warmup_frames: Option<usize>,
    /// Variance of the triangulated observation.
    #[arg(long)]
    pub observation_variance: Option<f64>,
    /// Frame interval, s.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Cross-view epipolar gate, px.
    #[arg(long)]
    pub epipolar_px: Option<f64>,
    /// Birth speed gate, units/s.
    #[arg(long)]
    pub max_speed: Option<f64>,
}

impl TrackOverrides {
    pub fn resolve(&self, file: &ConfigFile) -> RunConfig {
        let mut rc = file.run_config(self.preset);
        set(&mut rc.method, self.method);
        set(&mut rc.seed, self.seed);
        let p = &mut rc.params;
        set(&mut p.particles, self.particles);
        set(&mut p.cvpf.sigma2, self.sigma2);
        set(&mut p.cskpf.alpha, self.alpha);
        set(&mut p.cskpf.a_max, self.a_max);
        set(&mut p.cskpf.warmup_frames, self.warmup_frames);
        set(&mut p.cskpf.observation_variance, self.observation_variance);
        set(&mut p.dt, self.dt);
        set(&mut p.gates.epipolar_px, self.epipolar_px);
        set(&mut p.gates.max_speed, self.max_speed);
        rc
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestInputs {
    pub measurements: PathBuf,
    pub calibration: PathBuf,
}

/// Everything needed to repeat a `track` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub method: Method,
    pub seed: u64,
    pub params: ParamConfig,
    pub inputs: ManifestInputs,
    pub output: PathBuf,
}

impl Manifest {
    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            method: self.method,
            seed: self.seed,
            params: self.params,
        }
    }
}
