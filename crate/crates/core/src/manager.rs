//! Multi-tracker orchestration: bootstrap over the first two frames, parallel
//! per-frame stepping, spawning from unassociated blobs, retirement and
//! trajectory parsing.

use std::collections::BTreeSet;

use nalgebra::{Matrix3, Point3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::association::{FrameData, Measurement, MeasurementFrames, ViewFrame};
use crate::error::{Error, Result};
use crate::filter::{step, FilterParams, Method, StepOutcome, Tracker};
use crate::geometry::{epipolar_distance_with, fundamental_matrix, triangulate_views, CameraModel};
use crate::motion::{position_of, Covariance9, CsmParams, ObservationModel, StateCsm};

/// Gates of the exhaustive cross-view / cross-frame matching.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Gates {
    /// Maximum mean epipolar distance of a cross-view pair, px.
    pub epipolar_px: f64,
    /// Maximum speed; frame-to-frame links farther than `max_speed·dt` are rejected.
    pub max_speed: f64,
    /// New trackers closer than this to an existing one are discarded.
    pub duplicate_radius: f64,
}

impl Default for Gates {
    fn default() -> Self {
        Self {
            epipolar_px: 3.0,
            max_speed: 10.0,
            duplicate_radius: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunParams {
    pub method: Method,
    pub filter: FilterParams,
    pub gates: Gates,
    /// Frames until the CSKPF output is accepted (`T_h`); the first two are bootstrap.
    pub warmup_frames: usize,
    /// Trackers with shorter histories are not reported.
    pub min_history: usize,
    pub seed: u64,
}

impl RunParams {
    /// Defaults for the synthetic scenes (world units, seconds).
    pub fn simulation(method: Method, seed: u64) -> Self {
        Self {
            method,
            filter: FilterParams {
                particles: 100,
                sigma2: 0.09,
                csm: CsmParams::isotropic(5.0, 5.0, 0.1).expect("valid preset"),
                observation: ObservationModel::isotropic(0.01).expect("valid preset"),
                object_radius: 0.5,
            },
            gates: Gates::default(),
            warmup_frames: 10,
            min_history: 3,
            seed,
        }
    }

    /// Defaults for millimetre-scale footage at 100 Hz.
    pub fn real_scale(method: Method, seed: u64) -> Self {
        Self {
            method,
            filter: FilterParams {
                particles: 300,
                sigma2: 4.0,
                csm: CsmParams::isotropic(1.0, 0.1, 0.01).expect("valid preset"),
                observation: ObservationModel::isotropic(0.25).expect("valid preset"),
                object_radius: 1.5,
            },
            gates: Gates {
                epipolar_px: 3.0,
                max_speed: 1000.0,
                duplicate_radius: 1.5,
            },
            warmup_frames: 10,
            min_history: 3,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.filter.particles < 1 {
            return bad("particles must be >= 1");
        }
        if !(self.filter.sigma2 >= 0.0) {
            return bad("sigma2 must be >= 0");
        }
        self.filter.csm.validate()?;
        if !(self.filter.object_radius >= 0.0) {
            return bad("object radius must be >= 0");
        }
        let g = &self.gates;
        if !(g.epipolar_px >= 0.0 && g.max_speed >= 0.0 && g.duplicate_radius >= 0.0) {
            return bad("gates must be >= 0");
        }
        Ok(())
    }

    fn warmup_steps(&self) -> usize {
        match self.method {
            Method::Cvpf => 0,
            Method::Cskpf => self.warmup_frames.saturating_sub(2),
        }
    }
}

/// Blobs of one frame, one list per camera (in camera order).
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBlobs {
    pub frame: u32,
    pub views: Vec<Vec<Measurement>>,
}

/// Calibrated cameras plus consecutive frames of blobs.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub cameras: Vec<CameraModel>,
    pub frames: Vec<FrameBlobs>,
}

impl Dataset {
    /// Orders the cameras by view id and the frames by number; every view
    /// referenced by a blob needs a camera.
    pub fn new(mut cameras: Vec<CameraModel>, frames: MeasurementFrames) -> Result<Self> {
        cameras.sort_by_key(|c| c.view_id());
        let mut out = Vec::with_capacity(frames.len());
        for (frame, views) in frames {
            let mut lists = vec![Vec::new(); cameras.len()];
            for (view_id, blobs) in views {
                let at = cameras
                    .iter()
                    .position(|c| c.view_id() == view_id)
                    .ok_or(Error::CalibrationMissing(view_id))?;
                lists[at].extend(blobs);
            }
            out.push(FrameBlobs { frame, views: lists });
        }
        out.sort_by_key(|f| f.frame);
        if out.windows(2).any(|w| w[0].frame == w[1].frame) {
            return Err(Error::Format("duplicate frame number".into()));
        }
        Ok(Self { cameras, frames: out })
    }

    pub fn frame_data(&self, i: usize) -> FrameData {
        let f = &self.frames[i];
        FrameData {
            frame: f.frame,
            views: self
                .cameras
                .iter()
                .zip(&f.views)
                .map(|(c, blobs)| ViewFrame::new(c.view_id(), c.width(), c.height(), blobs.clone()))
                .collect(),
        }
    }
}

/// A cross-view blob tuple and its triangulated point.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossViewPoint {
    /// Blob index per view.
    pub association: Vec<usize>,
    pub point: Point3<f64>,
    /// RMS reprojection residual, px.
    pub residual: f64,
}

/// Pairwise fundamental matrices, `f[a][b]` maps view `a` pixels to lines in view `b`.
pub fn fundamental_matrices(cameras: &[CameraModel]) -> Result<Vec<Vec<Matrix3<f64>>>> {
    let n = cameras.len();
    let mut out = vec![vec![Matrix3::zeros(); n]; n];
    for a in 0..n {
        for b in 0..n {
            if a != b {
                out[a][b] = fundamental_matrix(&cameras[a], &cameras[b])?;
            }
        }
    }
    Ok(out)
}

/// Every blob tuple (one per view) whose pairs all pass the epipolar gate,
/// triangulated. Blobs in `exclude[v]` are skipped. Lexicographic order.
pub fn cross_view_points(
    frame: &FrameData,
    cameras: &[CameraModel],
    fmats: &[Vec<Matrix3<f64>>],
    epipolar_px: f64,
    exclude: Option<&[BTreeSet<usize>]>,
) -> Vec<CrossViewPoint> {
    #[allow(clippy::too_many_arguments)]
    fn rec(
        v: usize,
        chosen: &mut Vec<usize>,
        frame: &FrameData,
        cameras: &[CameraModel],
        fmats: &[Vec<Matrix3<f64>>],
        gate: f64,
        exclude: Option<&[BTreeSet<usize>]>,
        out: &mut Vec<CrossViewPoint>,
    ) {
        if v == frame.views.len() {
            let views: Vec<_> = chosen
                .iter()
                .enumerate()
                .map(|(w, &k)| (&cameras[w], frame.views[w].blobs[k].centroid))
                .collect();
            if let Ok((point, residual)) = triangulate_views(&views) {
                if cameras.iter().all(|c| c.depth(&point) > 0.0) {
                    out.push(CrossViewPoint {
                        association: chosen.clone(),
                        point,
                        residual,
                    });
                }
            }
            return;
        }
        for (k, blob) in frame.views[v].blobs.iter().enumerate() {
            if exclude.is_some_and(|e| e[v].contains(&k)) {
                continue;
            }
            let ok = chosen.iter().enumerate().all(|(w, &j)| {
                epipolar_distance_with(&fmats[w][v], frame.views[w].blobs[j].centroid, blob.centroid) <= gate
            });
            if ok {
                chosen.push(k);
                rec(v + 1, chosen, frame, cameras, fmats, gate, exclude, out);
                chosen.pop();
            }
        }
    }
    let mut out = Vec::new();
    if frame.views.len() < 2 || frame.views.len() != cameras.len() {
        return out;
    }
    rec(0, &mut Vec::new(), frame, cameras, fmats, epipolar_px, exclude, &mut out);
    out
}

/// A frame-to-frame link seeding one tracker.
#[derive(Debug, Clone, PartialEq)]
pub struct Birth {
    pub previous: CrossViewPoint,
    pub current: CrossViewPoint,
    pub velocity: Vector3<f64>,
}

/// Links points of consecutive frames within `max_speed·dt`, shortest links
/// first; a link is dropped when its current point lies within the duplicate
/// radius of `occupied` or of an already accepted link.
pub fn link_points(
    previous: &[CrossViewPoint],
    current: &[CrossViewPoint],
    occupied: &[Point3<f64>],
    gates: &Gates,
    dt: f64,
) -> Vec<Birth> {
    let reach = gates.max_speed * dt;
    let mut links: Vec<(f64, usize, usize)> = Vec::new();
    for (i, a) in previous.iter().enumerate() {
        for (j, b) in current.iter().enumerate() {
            let d = (b.point - a.point).norm();
            if d <= reach {
                links.push((d, i, j));
            }
        }
    }
    links.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut taken: Vec<Point3<f64>> = occupied.to_vec();
    let mut births = Vec::new();
    for (_, i, j) in links {
        let p = current[j].point;
        if taken.iter().any(|q| (p - q).norm() < gates.duplicate_radius) {
            continue;
        }
        taken.push(p);
        births.push(Birth {
            previous: previous[i].clone(),
            current: current[j].clone(),
            velocity: (p - previous[i].point) / dt,
        });
    }
    births
}

/// Diagonal initial covariance: position variance from the reprojection
/// residual (converted to world units, floored at the observation noise),
/// velocity variance `2·pos/dt²` and the Rayleigh variance at zero mean
/// acceleration.
pub fn initial_covariance(
    birth: &CrossViewPoint,
    cameras: &[CameraModel],
    csm: &CsmParams,
    obs: &ObservationModel,
) -> Covariance9 {
    let world_per_px = cameras
        .iter()
        .map(|c| c.depth(&birth.point) / c.focal_scale())
        .fold(0.0, f64::max);
    let res = birth.residual * world_per_px;
    let mut p = Covariance9::zeros();
    for axis in 0..3 {
        let pos = (res * res).max(obs.r[(axis, axis)]);
        let i = 3 * axis;
        p[(i, i)] = pos;
        p[(i + 1, i + 1)] = 2.0 * pos / (csm.dt * csm.dt);
        p[(i + 2, i + 2)] = csm.a_max[axis].powi(2) * (4.0 - std::f64::consts::PI) / std::f64::consts::PI;
    }
    p
}

/// Active and retired trackers plus the blobs claimed at the latest frames.
#[derive(Debug, Clone, Default)]
pub struct TrackerPool {
    pub active: Vec<Tracker>,
    pub inactive: Vec<Tracker>,
    /// Blob indices claimed per view at the previous and current frame.
    pub associated_prev: Vec<BTreeSet<usize>>,
    pub associated: Vec<BTreeSet<usize>>,
    next_id: u64,
}

impl TrackerPool {
    fn new(views: usize) -> Self {
        Self {
            associated_prev: vec![BTreeSet::new(); views],
            associated: vec![BTreeSet::new(); views],
            next_id: 1,
            ..Default::default()
        }
    }

    fn claim(&mut self, association: &[usize]) {
        for (set, &k) in self.associated.iter_mut().zip(association) {
            set.insert(k);
        }
    }

    fn advance(&mut self) {
        let views = self.associated.len();
        self.associated_prev = std::mem::replace(&mut self.associated, vec![BTreeSet::new(); views]);
    }

    fn spawn(&mut self, births: Vec<Birth>, frame: &FrameData, cameras: &[CameraModel], params: &RunParams) {
        for b in births {
            let mut state = StateCsm::zeros();
            for axis in 0..3 {
                state[3 * axis] = b.current.point[axis];
                state[3 * axis + 1] = b.velocity[axis];
            }
            let cov = initial_covariance(&b.current, cameras, &params.filter.csm, &params.filter.observation);
            let last = frame
                .views
                .iter()
                .zip(&b.current.association)
                .map(|(v, &k)| Some(v.blobs[k].clone()))
                .collect();
            self.claim(&b.current.association);
            let id = self.next_id;
            self.next_id += 1;
            self.active.push(Tracker::new(
                id,
                frame.frame,
                state,
                cov,
                b.current.association.clone(),
                last,
                params.warmup_steps(),
                params.seed,
            ));
        }
    }
}

/// Trackers seeded from every gated link between the first two frames.
pub fn bootstrap(
    first: &FrameData,
    second: &FrameData,
    cameras: &[CameraModel],
    params: &RunParams,
) -> Result<Vec<Tracker>> {
    let fmats = fundamental_matrices(cameras)?;
    let p1 = cross_view_points(first, cameras, &fmats, params.gates.epipolar_px, None);
    let p2 = cross_view_points(second, cameras, &fmats, params.gates.epipolar_px, None);
    let births = link_points(&p1, &p2, &[], &params.gates, params.filter.dt());
    let mut pool = TrackerPool::new(cameras.len());
    pool.spawn(births, second, cameras, params);
    Ok(pool.active)
}

/// Trackers seeded from blobs no tracker claimed at `t−1` and `t`.
#[allow(clippy::too_many_arguments)]
pub fn spawn_new(
    previous: &FrameData,
    current: &FrameData,
    claimed_prev: &[BTreeSet<usize>],
    claimed: &[BTreeSet<usize>],
    occupied: &[Point3<f64>],
    cameras: &[CameraModel],
    fmats: &[Vec<Matrix3<f64>>],
    params: &RunParams,
) -> Vec<Birth> {
    let gate = params.gates.epipolar_px;
    let p1 = cross_view_points(previous, cameras, fmats, gate, Some(claimed_prev));
    if p1.is_empty() {
        return Vec::new();
    }
    let p2 = cross_view_points(current, cameras, fmats, gate, Some(claimed));
    link_points(&p1, &p2, occupied, &params.gates, params.filter.dt())
}

/// One reported trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub id: u64,
    pub frames: Vec<u32>,
    /// `[x, vx, ax, y, vy, ay, z, vz, az]` per frame.
    pub states: Vec<StateCsm>,
    /// Blob id per view per frame.
    pub associations: Vec<Vec<Option<usize>>>,
}

impl Trajectory {
    pub fn index_of(&self, frame: u32) -> Option<usize> {
        self.frames.binary_search(&frame).ok()
    }

    pub fn position_at(&self, frame: u32) -> Option<Point3<f64>> {
        self.index_of(frame).map(|i| position_of(&self.states[i]))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackSet {
    pub trajectories: Vec<Trajectory>,
}

impl TrackSet {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }
}

fn parse(trackers: &[Tracker], ds: &Dataset, min_history: usize) -> TrackSet {
    let mut trajectories: Vec<Trajectory> = trackers
        .iter()
        .filter(|t| t.history.len() >= min_history)
        .map(|t| Trajectory {
            id: t.id,
            frames: t.history.iter().map(|h| h.frame).collect(),
            states: t.history.iter().map(|h| h.state).collect(),
            associations: t
                .history
                .iter()
                .map(|h| {
                    let blobs = ds.frames.binary_search_by_key(&h.frame, |f| f.frame).ok().map(|i| &ds.frames[i]);
                    (0..ds.cameras.len())
                        .map(|v| {
                            let k = *h.association.get(v)?;
                            blobs.and_then(|b| b.views[v].get(k)).map(|m| m.id)
                        })
                        .collect()
                })
                .collect(),
        })
        .collect();
    trajectories.sort_by_key(|t| t.id);
    TrackSet { trajectories }
}

/// Tracks every object through the dataset with the chosen method.
pub fn run(ds: &Dataset, params: &RunParams) -> Result<TrackSet> {
    params.validate()?;
    if ds.frames.is_empty() {
        return Ok(TrackSet::default());
    }
    if ds.frames.len() < 3 {
        return Err(Error::InsufficientFrames {
            needed: 3,
            got: ds.frames.len(),
        });
    }
    let cameras = &ds.cameras;
    let fmats = fundamental_matrices(cameras)?;
    let mut pool = TrackerPool::new(cameras.len());
    let mut prev_frame = ds.frame_data(0);
    let mut frame = ds.frame_data(1);
    {
        let p1 = cross_view_points(&prev_frame, cameras, &fmats, params.gates.epipolar_px, None);
        let p2 = cross_view_points(&frame, cameras, &fmats, params.gates.epipolar_px, None);
        let births = link_points(&p1, &p2, &[], &params.gates, params.filter.dt());
        pool.spawn(births, &frame, cameras, params);
    }
    for i in 2..ds.frames.len() {
        prev_frame = std::mem::replace(&mut frame, ds.frame_data(i));
        pool.advance();
        let outcomes: Vec<Result<StepOutcome>> = pool
            .active
            .par_iter_mut()
            .map(|tr| step(params.method, tr, &frame, cameras, &params.filter))
            .collect();
        let mut still = Vec::with_capacity(pool.active.len());
        for (tr, out) in std::mem::take(&mut pool.active).into_iter().zip(outcomes) {
            match out? {
                StepOutcome::Updated(u) => {
                    pool.claim(&u.association);
                    still.push(tr);
                }
                StepOutcome::Lost => pool.inactive.push(tr),
            }
        }
        pool.active = still;
        let occupied: Vec<Point3<f64>> = pool.active.iter().map(|t| position_of(&t.state)).collect();
        let births = spawn_new(
            &prev_frame,
            &frame,
            &pool.associated_prev,
            &pool.associated,
            &occupied,
            cameras,
            &fmats,
            params,
        );
        pool.spawn(births, &frame, cameras, params);
    }
    let mut all = pool.inactive;
    all.extend(pool.active);
    Ok(parse(&all, ds, params.min_history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{epipolar_distance, triangulate};
    use crate::sim::{generate_truth, render_all, render_frame, render_rng, OutOfView, RigConfig, SimConfig};

    fn dataset(cfg: &SimConfig) -> (Dataset, crate::sim::GroundTruth) {
        let cams = cfg.rig.cameras().unwrap();
        let gt = generate_truth(cfg).unwrap();
        let r = render_all(cfg, &gt, &cams).unwrap();
        let frames = r
            .frames
            .into_iter()
            .map(|(f, views)| (f, views.into_iter().enumerate().map(|(v, b)| (v as u32 + 1, b)).collect()))
            .collect();
        (Dataset::new(cams, frames).unwrap(), gt)
    }

    fn frame_of(cams: &[CameraModel], f: u32, pts: &[Point3<f64>], noise: f64, seed: u64) -> FrameData {
        let mut rng = render_rng(seed);
        let views = render_frame(f, pts, cams, 0.5, noise, OutOfView::Error, &mut rng).unwrap();
        FrameData {
            frame: f,
            views: cams
                .iter()
                .zip(views)
                .map(|(c, b)| ViewFrame::new(c.view_id(), c.width(), c.height(), b))
                .collect(),
        }
    }

    #[test]
    fn bootstrap_single_noiseless() {
        let cams = RigConfig::default().cameras().unwrap();
        let v = Vector3::new(5.0, -2.0, 1.0);
        let p1 = Point3::new(1.0, 2.0, 3.0);
        let p2 = p1 + v * 0.1;
        let f1 = frame_of(&cams, 1, &[p1], 0.0, 0);
        let f2 = frame_of(&cams, 2, &[p2], 0.0, 0);
        let params = RunParams::simulation(Method::Cskpf, 0);
        let trs = bootstrap(&f1, &f2, &cams, &params).unwrap();
        assert_eq!(trs.len(), 1);
        // the rasterized centroid, not the disc centre, is the noiseless observation
        let obs = |f: &FrameData| {
            triangulate(&cams[0], f.views[0].blobs[0].centroid, &cams[1], f.views[1].blobs[0].centroid)
                .unwrap()
                .0
        };
        let expected = (obs(&f2) - obs(&f1)) / 0.1;
        let s = trs[0].state;
        assert!((Vector3::new(s[1], s[4], s[7]) - expected).norm() <= 1e-6);
        assert!((Vector3::new(s[1], s[4], s[7]) - v).norm() <= 1.0);
        assert_eq!(trs[0].warmup_remaining, 8);
    }

    #[test]
    fn bootstrap_far_apart_objects() {
        let cams = RigConfig::default().cameras().unwrap();
        let a = Point3::new(-10.0, -10.0, 5.0);
        let b = Point3::new(20.0, 15.0, -8.0);
        let d = Vector3::new(0.5, 0.1, 0.0);
        let f1 = frame_of(&cams, 1, &[a, b], 0.0, 0);
        let f2 = frame_of(&cams, 2, &[a + d, b + d], 0.0, 0);
        let trs = bootstrap(&f1, &f2, &cams, &RunParams::simulation(Method::Cvpf, 0)).unwrap();
        assert_eq!(trs.len(), 2);
        for t in &trs {
            let v = Vector3::new(t.state[1], t.state[4], t.state[7]);
            assert!((v - d / 0.1).norm() < 1.0);
        }
    }

    // Independent enumeration: all view-1 × view-2 pairs, per-pair epipolar
    // check, all cross-frame links, greedy acceptance by link length.
    fn oracle(f1: &FrameData, f2: &FrameData, cams: &[CameraModel], g: &Gates, dt: f64) -> Vec<(Vec<usize>, Point3<f64>)> {
        let pts = |f: &FrameData| {
            let mut out = Vec::new();
            for (i, a) in f.views[0].blobs.iter().enumerate() {
                for (j, b) in f.views[1].blobs.iter().enumerate() {
                    if epipolar_distance(&cams[0], a.centroid, &cams[1], b.centroid).unwrap() <= g.epipolar_px {
                        if let Ok((p, _)) = triangulate(&cams[0], a.centroid, &cams[1], b.centroid) {
                            out.push((vec![i, j], p));
                        }
                    }
                }
            }
            out
        };
        let (a, b) = (pts(f1), pts(f2));
        let mut links = Vec::new();
        for (i, (_, p)) in a.iter().enumerate() {
            for (j, (_, q)) in b.iter().enumerate() {
                let d = (q - p).norm();
                if d <= g.max_speed * dt {
                    links.push((d, i, j));
                }
            }
        }
        links.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut out: Vec<(Vec<usize>, Point3<f64>)> = Vec::new();
        for (_, _, j) in links {
            if out.iter().all(|(_, q)| (b[j].1 - q).norm() >= g.duplicate_radius) {
                out.push(b[j].clone());
            }
        }
        out
    }

    #[test]
    fn bootstrap_matches_enumeration_oracle() {
        for seed in 0..5 {
            let cfg = SimConfig {
                n_objects: 10,
                seed,
                ..Default::default()
            };
            let (ds, _) = dataset(&cfg);
            let (f1, f2) = (ds.frame_data(0), ds.frame_data(1));
            let params = RunParams::simulation(Method::Cskpf, seed);
            let trs = bootstrap(&f1, &f2, &ds.cameras, &params).unwrap();
            let want = oracle(&f1, &f2, &ds.cameras, &params.gates, 0.1);
            assert_eq!(trs.len(), want.len(), "seed {seed}");
            for (t, (assoc, p)) in trs.iter().zip(&want) {
                assert_eq!(&t.history[0].association, assoc);
                assert!((position_of(&t.state) - p).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn spawn_cases() {
        let cams = RigConfig::default().cameras().unwrap();
        let fmats = fundamental_matrices(&cams).unwrap();
        let params = RunParams::simulation(Method::Cskpf, 0);
        let a = Point3::new(0.0, 0.0, 0.0);
        let d = Vector3::new(0.5, 0.0, 0.0);
        let f1 = frame_of(&cams, 1, &[a], 0.0, 0);
        let f2 = frame_of(&cams, 2, &[a + d], 0.0, 0);
        let all = vec![BTreeSet::from([0usize]); 2];
        let none = vec![BTreeSet::new(); 2];
        assert!(spawn_new(&f1, &f2, &all, &all, &[], &cams, &fmats, &params).is_empty());
        assert_eq!(spawn_new(&f1, &f2, &none, &none, &[], &cams, &fmats, &params).len(), 1);
        // an existing tracker at the same spot suppresses the duplicate
        assert!(spawn_new(&f1, &f2, &none, &none, &[a + d], &cams, &fmats, &params).is_empty());
    }

    #[test]
    fn newcomer_spawns_one_tracker() {
        let cams = RigConfig::default().cameras().unwrap();
        let fmats = fundamental_matrices(&cams).unwrap();
        let params = RunParams::simulation(Method::Cskpf, 0);
        let old = Point3::new(-10.0, 5.0, 0.0);
        let new = Point3::new(12.0, -6.0, 4.0);
        let d = Vector3::new(0.4, 0.2, 0.0);
        // the old object is claimed in both frames, the newcomer appears at t−1
        let f1 = frame_of(&cams, 1, &[old, new], 0.0, 0);
        let f2 = frame_of(&cams, 2, &[old + d, new + d], 0.0, 0);
        let claimed = vec![BTreeSet::from([0usize]); 2];
        let births = spawn_new(&f1, &f2, &claimed, &claimed, &[old + d], &cams, &fmats, &params);
        assert_eq!(births.len(), 1);
        assert!((births[0].current.point - (new + d)).norm() < 0.1);
    }

    #[test]
    fn run_preconditions() {
        let cams = RigConfig::default().cameras().unwrap();
        let empty = Dataset::new(cams.clone(), vec![]).unwrap();
        let params = RunParams::simulation(Method::Cskpf, 0);
        assert!(run(&empty, &params).unwrap().is_empty());
        let two = Dataset::new(cams.clone(), vec![(1, vec![]), (2, vec![])]).unwrap();
        assert!(matches!(run(&two, &params), Err(Error::InsufficientFrames { needed: 3, got: 2 })));
        assert!(matches!(
            Dataset::new(cams, vec![(1, vec![(7, vec![])])]),
            Err(Error::CalibrationMissing(7))
        ));
    }

    #[test]
    fn single_object_tracked_by_both_methods() {
        let cfg = SimConfig {
            n_objects: 1,
            seed: 2,
            ..Default::default()
        };
        let (ds, gt) = dataset(&cfg);
        for method in [Method::Cvpf, Method::Cskpf] {
            let ts = run(&ds, &RunParams::simulation(method, 1)).unwrap();
            assert_eq!(ts.len(), 1, "{method}");
            let t = &ts.trajectories[0];
            assert_eq!(t.frames, (2..=50).collect::<Vec<_>>());
            assert!(t.states.iter().all(|s| s.iter().all(|x| x.is_finite())));
            for (f, s) in t.frames.iter().zip(&t.states) {
                let k = gt.objects[0].at(*f).unwrap();
                assert!((position_of(s) - gt.objects[0].positions[k]).norm() < 1.5, "{method} frame {f}");
            }
        }
    }

    #[test]
    fn run_is_deterministic_and_order_free() {
        let cfg = SimConfig {
            n_objects: 15,
            seed: 4,
            ..Default::default()
        };
        let (ds, _) = dataset(&cfg);
        let params = RunParams::simulation(Method::Cskpf, 9);
        let a = run(&ds, &params).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run(&ds, &params).unwrap());
        assert_eq!(a, b);
        for t in &a.trajectories {
            assert!(t.frames.windows(2).all(|w| w[0] < w[1]));
            assert!(t.frames.len() >= 3);
        }
    }

    #[test]
    fn associations_refer_to_existing_blobs() {
        let cfg = SimConfig {
            n_objects: 10,
            seed: 6,
            ..Default::default()
        };
        let (ds, _) = dataset(&cfg);
        let ts = run(&ds, &RunParams::simulation(Method::Cvpf, 0)).unwrap();
        for t in &ts.trajectories {
            for (f, assoc) in t.frames.iter().zip(&t.associations) {
                let fb = &ds.frames[ds.frames.iter().position(|x| x.frame == *f).unwrap()];
                for (v, id) in assoc.iter().enumerate() {
                    let id = id.expect("associated");
                    assert!(fb.views[v].iter().any(|m| m.id == id));
                }
            }
        }
    }
}
