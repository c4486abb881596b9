//! Batch driver: simulate scenes, track them, evaluate, sweep and reproject.

pub mod config;

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use swarmtrack::eval::{evaluate, EvalConfig, Metrics};
use swarmtrack::filter::Method;
use swarmtrack::geometry::project;
use swarmtrack::io;
use swarmtrack::manager::{run, Dataset, TrackSet};
use swarmtrack::sim::{generate_truth, render_all, SimConfig};

use config::{ConfigFile, Manifest, ManifestInputs, RunConfig, TrackOverrides};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "swarmtrack", version, about = "Multi-view 3D swarm tracking")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "SWARMTRACK_WORKERS")]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic swarm: measurements, ground truth and calibration.
    Simulate(SimulateArgs),
    /// Track a measurement file and write trajectories plus a run manifest.
    Track(TrackArgs),
    /// Score trajectories against ground truth.
    Eval(EvalArgs),
    /// Simulate, track and score repeatedly over swarm sizes.
    Sweep(SweepArgs),
    /// Project trajectories back into the views next to the blob outlines.
    Reproject(ReprojectArgs),
}

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    /// JSON config; its `sim` section describes the scene.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Number of objects (default 1).
    #[arg(long)]
    pub n_objects: Option<usize>,
    /// Scene seed (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Scene length in seconds (default 5).
    #[arg(long)]
    pub duration: Option<f64>,
    /// Centroid noise standard deviation in pixels (default 0.5).
    #[arg(long)]
    pub noise: Option<f64>,
}

#[derive(Debug, clap::Args)]
pub struct TrackArgs {
    /// Re-run a previous manifest; other inputs are ignored.
    #[arg(long, conflicts_with_all = ["measurements", "calibration", "config"])]
    pub manifest: Option<PathBuf>,
    /// Blob measurement JSON.
    #[arg(long, required_unless_present = "manifest")]
    pub measurements: Option<PathBuf>,
    /// Camera calibration JSON.
    #[arg(long, required_unless_present = "manifest")]
    pub calibration: Option<PathBuf>,
    /// JSON config file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Track CSV (default `tracks.csv`).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Manifest path (default: the output path with `.manifest.json`).
    #[arg(long)]
    pub manifest_out: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: TrackOverrides,
}

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    /// Ground-truth CSV.
    #[arg(long)]
    pub truth: PathBuf,
    /// Track CSV.
    #[arg(long)]
    pub tracks: PathBuf,
    /// Match gate and miss penalty in world units (default 1.5).
    #[arg(long)]
    pub d0: Option<f64>,
    /// First frame scored.
    #[arg(long)]
    pub from_frame: Option<u32>,
    /// Last frame scored.
    #[arg(long)]
    pub to_frame: Option<u32>,
    /// JSON config file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Metrics JSON (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct SweepArgs {
    /// JSON config file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Swarm sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,20,40,60")]
    pub n_list: Vec<usize>,
    /// Repeats per swarm size and method.
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    /// Methods, comma separated (default: the configured method).
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<Method>,
    /// Repeat `r` uses seed `base_seed + r` for the scene and the tracker.
    #[arg(long)]
    pub base_seed: Option<u64>,
    /// First frame scored (default 3, after bootstrap).
    #[arg(long)]
    pub from_frame: Option<u32>,
    /// Match gate and miss penalty in world units (default 1.5).
    #[arg(long)]
    pub d0: Option<f64>,
    /// Summary CSV (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: TrackOverrides,
}

#[derive(Debug, clap::Args)]
pub struct ReprojectArgs {
    /// Track CSV.
    #[arg(long)]
    pub tracks: PathBuf,
    #[arg(long)]
    pub calibration: PathBuf,
    /// Blob outlines are included when given.
    #[arg(long)]
    pub measurements: Option<PathBuf>,
    #[arg(long)]
    pub from_frame: Option<u32>,
    #[arg(long)]
    pub to_frame: Option<u32>,
    /// Overlay JSON (default: stdout).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Exit code for an error: 3 for numerical failures, 2 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<swarmtrack::Error>() {
            return if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_INPUT };
        }
    }
    EXIT_INPUT
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Diagnostics go to stderr.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

pub fn execute(cli: Cli) -> anyhow::Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            bail!(swarmtrack::Error::InvalidConfig("workers must be >= 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().context("starting worker pool")?;
    pool.install(|| match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Track(a) => cmd_track(&a).map(|_| ()),
        Command::Eval(a) => cmd_eval(&a).map(|_| ()),
        Command::Sweep(a) => cmd_sweep(&a).map(|_| ()),
        Command::Reproject(a) => cmd_reproject(&a).map(|_| ()),
    })
}

fn write_or_print(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

pub const MEASUREMENTS_FILE: &str = "measurements.json";
pub const TRUTH_FILE: &str = "truth.csv";
pub const CALIBRATION_FILE: &str = "calibration.json";

fn sim_config(file: &ConfigFile, a: &SimulateArgs) -> SimConfig {
    let mut cfg = file.sim.clone().unwrap_or_default();
    if let Some(n) = a.n_objects {
        cfg.n_objects = n;
    }
    if let Some(s) = a.seed.or(if file.sim.is_none() { file.seed } else { None }) {
        cfg.seed = s;
    }
    if let Some(d) = a.duration {
        cfg.duration = d;
    }
    if let Some(n) = a.noise {
        cfg.pixel_noise_sigma = n;
    }
    cfg
}

/// Writes `measurements.json`, `truth.csv` and `calibration.json` to `out_dir`.
pub fn cmd_simulate(a: &SimulateArgs) -> anyhow::Result<()> {
    let file = ConfigFile::load_opt(a.config.as_deref())?;
    let cfg = sim_config(&file, a);
    cfg.validate()?;
    let cams = cfg.rig.cameras()?;
    let gt = generate_truth(&cfg)?;
    let rendered = render_all(&cfg, &gt, &cams)?;
    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    io::write_measurements(&a.out_dir.join(MEASUREMENTS_FILE), &rendered.by_view_id(&cams))?;
    io::write_truth(&a.out_dir.join(TRUTH_FILE), &gt)?;
    io::write_calibration(&a.out_dir.join(CALIBRATION_FILE), &cams)?;
    Ok(())
}

fn load_dataset(measurements: &Path, calibration: &Path) -> anyhow::Result<Dataset> {
    if !calibration.exists() {
        return Err(anyhow::Error::new(swarmtrack::Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            "calibration file not found",
        ))))
        .with_context(|| format!("calibration missing: {}", calibration.display()));
    }
    let cams = io::read_calibration(calibration).with_context(|| format!("reading {}", calibration.display()))?;
    let frames = io::read_measurements(measurements).with_context(|| format!("reading {}", measurements.display()))?;
    Ok(Dataset::new(cams, frames)?)
}

fn default_manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Runs the tracker; returns the manifest that reproduces the run.
pub fn cmd_track(a: &TrackArgs) -> anyhow::Result<Manifest> {
    let manifest = match &a.manifest {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
            let mut m: Manifest = serde_json::from_str(&text)
                .map_err(swarmtrack::Error::from)
                .with_context(|| format!("parsing manifest {}", path.display()))?;
            if let Some(o) = &a.output {
                m.output = o.clone();
            }
            m
        }
        None => {
            let file = ConfigFile::load_opt(a.config.as_deref())?;
            let rc: RunConfig = a.overrides.resolve(&file);
            Manifest {
                method: rc.method,
                seed: rc.seed,
                params: rc.params,
                inputs: ManifestInputs {
                    measurements: a.measurements.clone().expect("required by clap"),
                    calibration: a.calibration.clone().expect("required by clap"),
                },
                output: a.output.clone().unwrap_or_else(|| PathBuf::from("tracks.csv")),
            }
        }
    };
    let params = manifest.run_config().run_params()?;
    let ds = load_dataset(&manifest.inputs.measurements, &manifest.inputs.calibration)?;
    let tracks = run(&ds, &params)?;
    io::write_tracks(&manifest.output, &tracks)?;
    if a.manifest.is_none() || a.manifest_out.is_some() {
        let path = a.manifest_out.clone().unwrap_or_else(|| default_manifest_path(&manifest.output));
        std::fs::write(&path, to_json(&manifest)?).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(manifest)
}

fn eval_config(file: &ConfigFile, d0: Option<f64>, from: Option<u32>, to: Option<u32>) -> EvalConfig {
    let mut cfg = file.eval.unwrap_or_default();
    if let Some(d) = d0 {
        cfg.d0 = d;
    }
    if from.is_some() || to.is_some() {
        let (a, b) = cfg.window.unwrap_or((0, u32::MAX));
        cfg.window = Some((from.unwrap_or(a), to.unwrap_or(b)));
    }
    cfg
}

/// Scores a track CSV against a truth CSV.
pub fn cmd_eval(a: &EvalArgs) -> anyhow::Result<Metrics> {
    let file = ConfigFile::load_opt(a.config.as_deref())?;
    let cfg = eval_config(&file, a.d0, a.from_frame, a.to_frame);
    let gt = io::read_truth(&a.truth).with_context(|| format!("reading {}", a.truth.display()))?;
    let ts = io::read_tracks(&a.tracks).with_context(|| format!("reading {}", a.tracks.display()))?;
    let m = evaluate(&gt, &ts, &cfg)?;
    write_or_print(a.output.as_deref(), &to_json(&m)?)?;
    Ok(m)
}

/// Mean and sample standard deviation of one metric over repeats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

pub fn summarize(xs: &[f64]) -> Option<Summary> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some(Summary { mean, std })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub method: Method,
    pub repeats: usize,
    pub integrity: Summary,
    pub continuity: Summary,
    /// Over repeats with at least one match.
    pub precision: Option<Summary>,
    pub idsw_mean: f64,
}

/// Simulates and tracks one scene with each method.
pub fn sweep_repeat(
    scene: &SimConfig,
    run_cfg: &RunConfig,
    methods: &[Method],
    eval: &EvalConfig,
) -> swarmtrack::Result<Vec<Metrics>> {
    let cams = scene.rig.cameras()?;
    let gt = generate_truth(scene)?;
    let rendered = render_all(scene, &gt, &cams)?;
    let ds = Dataset::new(cams.clone(), rendered.by_view_id(&cams))?;
    methods
        .iter()
        .map(|&m| {
            let rc = RunConfig { method: m, ..*run_cfg };
            let tracks = run(&ds, &rc.run_params()?)?;
            evaluate(&gt, &tracks, eval)
        })
        .collect()
}

/// Per-(N, method) mean ± std of the metrics over seeded repeats.
pub fn cmd_sweep(a: &SweepArgs) -> anyhow::Result<Vec<SweepRow>> {
    if a.repeats == 0 {
        bail!(swarmtrack::Error::InvalidConfig("repeats must be >= 1".into()));
    }
    if a.n_list.is_empty() || a.n_list.contains(&0) {
        bail!(swarmtrack::Error::InvalidConfig("N list must hold positive sizes".into()));
    }
    let file = ConfigFile::load_opt(a.config.as_deref())?;
    let mut run_cfg = a.overrides.resolve(&file);
    let scene = file.sim.clone().unwrap_or_default();
    // the tracker runs at the scene's frame interval
    run_cfg.params.dt = scene.dt;
    run_cfg.run_params()?;
    let methods: Vec<Method> = if a.methods.is_empty() {
        vec![run_cfg.method]
    } else {
        a.methods.clone()
    };
    let base_seed = a.base_seed.or(a.overrides.seed).unwrap_or(scene.seed);
    let mut eval = eval_config(&file, a.d0, a.from_frame, None);
    if eval.window.is_none() {
        eval.window = Some((a.from_frame.unwrap_or(3), u32::MAX));
    }
    eval.validate()?;
    let jobs: Vec<(usize, usize)> = a
        .n_list
        .iter()
        .flat_map(|&n| (0..a.repeats).map(move |r| (n, r)))
        .collect();
    let results: Vec<Vec<Metrics>> = jobs
        .par_iter()
        .map(|&(n, r)| {
            let seed = base_seed + r as u64;
            let sc = SimConfig {
                n_objects: n,
                seed,
                ..scene.clone()
            };
            let rc = RunConfig { seed, ..run_cfg };
            sweep_repeat(&sc, &rc, &methods, &eval)
        })
        .collect::<swarmtrack::Result<_>>()?;
    let mut rows = Vec::new();
    for (k, &n) in a.n_list.iter().enumerate() {
        let block = &results[k * a.repeats..(k + 1) * a.repeats];
        for (mi, &method) in methods.iter().enumerate() {
            let col = |f: &dyn Fn(&Metrics) -> Option<f64>| -> Vec<f64> { block.iter().filter_map(|r| f(&r[mi])).collect() };
            rows.push(SweepRow {
                n,
                method,
                repeats: a.repeats,
                integrity: summarize(&col(&|m| Some(m.integrity))).expect("repeats >= 1"),
                continuity: summarize(&col(&|m| Some(m.continuity))).expect("repeats >= 1"),
                precision: summarize(&col(&|m| m.precision)),
                idsw_mean: col(&|m| Some(m.idsw_total as f64)).iter().sum::<f64>() / a.repeats as f64,
            });
        }
    }
    write_or_print(a.output.as_deref(), &sweep_csv(&rows))?;
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(
        "n,method,repeats,integrity_mean,integrity_std,continuity_mean,continuity_std,precision_mean,precision_std,idsw_mean\n",
    );
    for r in rows {
        let (pm, ps) = r
            .precision
            .map(|p| (p.mean.to_string(), p.std.to_string()))
            .unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.n,
            r.method,
            r.repeats,
            r.integrity.mean,
            r.integrity.std,
            r.continuity.mean,
            r.continuity.std,
            pm,
            ps,
            r.idsw_mean
        ));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlobOverlay {
    pub id: usize,
    /// `[u_min, v_min, u_max, v_max]`, inclusive pixel bounds.
    pub bbox: [i32; 4],
    /// Pixels of the blob with a 4-neighbour outside it.
    pub outline: Vec<[i32; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackPoint {
    pub id: u64,
    pub u: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViewOverlay {
    pub view_id: u32,
    pub blobs: Vec<BlobOverlay>,
    pub tracks: Vec<TrackPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameOverlay {
    pub frame: u32,
    pub views: Vec<ViewOverlay>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Overlay {
    pub frames: Vec<FrameOverlay>,
}

fn outline(pixels: &[[i32; 2]]) -> Vec<[i32; 2]> {
    let set: BTreeSet<[i32; 2]> = pixels.iter().copied().collect();
    pixels
        .iter()
        .copied()
        .filter(|p| {
            [[1, 0], [-1, 0], [0, 1], [0, -1]]
                .iter()
                .any(|d| !set.contains(&[p[0] + d[0], p[1] + d[1]]))
        })
        .collect()
}

fn bbox(pixels: &[[i32; 2]]) -> [i32; 4] {
    let mut b = [i32::MAX, i32::MAX, i32::MIN, i32::MIN];
    for p in pixels {
        b[0] = b[0].min(p[0]);
        b[1] = b[1].min(p[1]);
        b[2] = b[2].max(p[0]);
        b[3] = b[3].max(p[1]);
    }
    b
}

/// Reprojected track points per frame and view, with blob outlines.
pub fn reproject(
    tracks: &TrackSet,
    cameras: &[swarmtrack::geometry::CameraModel],
    measurements: Option<&io::MeasurementFrames>,
    from: Option<u32>,
    to: Option<u32>,
) -> Overlay {
    let mut frames: BTreeSet<u32> = tracks.trajectories.iter().flat_map(|t| t.frames.iter().copied()).collect();
    if let Some(ms) = measurements {
        frames.extend(ms.iter().map(|(f, _)| *f));
    }
    let (lo, hi) = (from.unwrap_or(0), to.unwrap_or(u32::MAX));
    let mut cams: Vec<_> = cameras.iter().collect();
    cams.sort_by_key(|c| c.view_id());
    let frames = frames
        .into_iter()
        .filter(|f| (lo..=hi).contains(f))
        .map(|f| {
            let blobs_of = |view_id: u32| -> Vec<BlobOverlay> {
                measurements
                    .and_then(|ms| ms.iter().find(|(g, _)| *g == f))
                    .map(|(_, views)| {
                        views
                            .iter()
                            .filter(|(v, _)| *v == view_id)
                            .flat_map(|(_, bs)| bs.iter())
                            .map(|b| BlobOverlay {
                                id: b.id,
                                bbox: bbox(&b.pixels),
                                outline: outline(&b.pixels),
                            })
                            .collect()
                    })
                    .unwrap_or_default()
            };
            let views = cams
                .iter()
                .map(|c| ViewOverlay {
                    view_id: c.view_id(),
                    blobs: blobs_of(c.view_id()),
                    tracks: tracks
                        .trajectories
                        .iter()
                        .filter_map(|t| {
                            let px = project(c, &t.position_at(f)?).ok()?;
                            Some(TrackPoint {
                                id: t.id,
                                u: px.u,
                                v: px.v,
                            })
                        })
                        .collect(),
                })
                .collect();
            FrameOverlay { frame: f, views }
        })
        .collect();
    Overlay { frames }
}

pub fn cmd_reproject(a: &ReprojectArgs) -> anyhow::Result<Overlay> {
    let tracks = io::read_tracks(&a.tracks).with_context(|| format!("reading {}", a.tracks.display()))?;
    let cams = io::read_calibration(&a.calibration).with_context(|| format!("reading {}", a.calibration.display()))?;
    let ms = a
        .measurements
        .as_deref()
        .map(|p| io::read_measurements(p).with_context(|| format!("reading {}", p.display())))
        .transpose()?;
    let overlay = reproject(&tracks, &cams, ms.as_ref(), a.from_frame, a.to_frame);
    write_or_print(a.output.as_deref(), &to_json(&overlay)?)?;
    Ok(overlay)
}
