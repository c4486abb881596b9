//! Synthetic swarms with smoothly varying speed, heading and climb angle,
//! rendered as balls into two orthogonal cameras with Gaussian centroid noise.

use std::collections::HashMap;

use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::association::{Measurement, MeasurementFrames};
use crate::error::{Error, Result};
use crate::geometry::{ball_radius_px, project, raster_disc, CameraModel, Pixel, RasterPixel};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutOfView {
    /// Drop the pixels (and the object) outside the image.
    #[default]
    Clip,
    Error,
}

/// Two cameras looking at `target` from `+x` and `+y`, `distance` away.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RigConfig {
    pub target: [f64; 3],
    pub distance: f64,
    pub focal: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for RigConfig {
    fn default() -> Self {
        // the swarm drifts along +x (|heading| <= 1 rad), so the rig is
        // centred ahead of the initialization box
        Self {
            target: [15.0, 0.0, 0.0],
            distance: 150.0,
            focal: 1200.0,
            width: 1024,
            height: 1024,
        }
    }
}

impl RigConfig {
    pub fn cameras(&self) -> Result<Vec<CameraModel>> {
        let t = Point3::from(self.target);
        let c1 = CameraModel::look_at(
            1,
            t + Vector3::x() * self.distance,
            t,
            Vector3::z(),
            self.focal,
            self.width,
            self.height,
        )?;
        let c2 = CameraModel::look_at(
            2,
            t + Vector3::y() * self.distance,
            t,
            Vector3::z(),
            self.focal,
            self.width,
            self.height,
        )?;
        Ok(vec![c1, c2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub n_objects: usize,
    /// Initial positions are uniform in `[-box_half, box_half]³`.
    pub box_half: f64,
    pub speed_base: f64,
    pub speed_amp: f64,
    /// Period of the speed oscillation, s.
    pub speed_period: f64,
    /// Period of the heading and climb oscillations, s.
    pub turn_period: f64,
    pub ball_radius: f64,
    pub dt: f64,
    pub duration: f64,
    pub pixel_noise_sigma: f64,
    pub seed: u64,
    pub rig: RigConfig,
    pub out_of_view: OutOfView,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_objects: 1,
            box_half: 20.0,
            speed_base: 6.0,
            speed_amp: 2.0,
            speed_period: 5.0,
            turn_period: 20.0,
            ball_radius: 0.5,
            dt: 0.1,
            duration: 5.0,
            pixel_noise_sigma: 0.5,
            seed: 0,
            rig: RigConfig::default(),
            out_of_view: OutOfView::Clip,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n_objects < 1 {
            return bad("n_objects must be >= 1");
        }
        if !(self.dt > 0.0) {
            return bad("dt must be > 0");
        }
        if !(self.duration > 0.0) {
            return bad("duration must be > 0");
        }
        if !(self.speed_period > 0.0 && self.turn_period > 0.0) {
            return bad("periods must be > 0");
        }
        if self.ball_radius < 0.0 || self.pixel_noise_sigma < 0.0 || self.box_half < 0.0 {
            return bad("radius, noise and box size must be >= 0");
        }
        if self.frame_count() < 1 {
            return bad("duration shorter than one time step");
        }
        Ok(())
    }

    /// Frames `1..=frame_count()`; frame `f` is at time `f * dt`.
    pub fn frame_count(&self) -> u32 {
        (self.duration / self.dt + 1e-9).floor() as u32
    }
}

/// Random per-object phases and amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kinematics {
    pub speed_phase: f64,
    pub heading_phase: f64,
    pub climb_phase: f64,
    pub heading_amp: f64,
    pub climb_amp: f64,
}

impl Kinematics {
    pub fn velocity(&self, cfg: &SimConfig, t: f64) -> Vector3<f64> {
        let speed = cfg.speed_base + cfg.speed_amp * (2.0 * PI / cfg.speed_period * t + self.speed_phase).sin();
        let w = 2.0 * PI / cfg.turn_period;
        let heading = 0.5 * self.heading_amp * (1.0 + (w * t + self.heading_phase).cos());
        let climb = 0.25 * self.climb_amp * (w * t + self.climb_phase).cos();
        speed
            * Vector3::new(
                climb.cos() * heading.cos(),
                climb.cos() * heading.sin(),
                climb.sin(),
            )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectTruth {
    pub id: u64,
    pub frames: Vec<u32>,
    pub positions: Vec<Point3<f64>>,
    pub velocities: Vec<Vector3<f64>>,
}

impl ObjectTruth {
    pub fn at(&self, frame: u32) -> Option<usize> {
        self.frames.binary_search(&frame).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    pub objects: Vec<ObjectTruth>,
}

impl GroundTruth {
    pub fn frames(&self) -> Vec<u32> {
        let mut f: Vec<u32> = self.objects.iter().flat_map(|o| o.frames.iter().copied()).collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    /// `(object id, position)` of every object alive at `frame`.
    pub fn positions_at(&self, frame: u32) -> Vec<(u64, Point3<f64>)> {
        self.objects
            .iter()
            .filter_map(|o| o.at(frame).map(|i| (o.id, o.positions[i])))
            .collect()
    }
}

pub fn draw_kinematics<R: Rng + ?Sized>(rng: &mut R) -> Kinematics {
    Kinematics {
        speed_phase: rng.random_range(0.0..2.0 * PI),
        heading_phase: rng.random_range(0.0..2.0 * PI),
        climb_phase: rng.random_range(0.0..2.0 * PI),
        heading_amp: rng.random_range(-1.0..=1.0),
        climb_amp: rng.random_range(-1.0..=1.0),
    }
}

/// Forward-Euler integration of one object's velocity from `start`.
pub fn integrate(cfg: &SimConfig, id: u64, start: Point3<f64>, k: &Kinematics) -> ObjectTruth {
    let n = cfg.frame_count();
    let mut p = start;
    let mut frames = Vec::with_capacity(n as usize);
    let mut positions = Vec::with_capacity(n as usize);
    let mut velocities = Vec::with_capacity(n as usize);
    for f in 1..=n {
        let t_prev = (f - 1) as f64 * cfg.dt;
        p += k.velocity(cfg, t_prev) * cfg.dt;
        frames.push(f);
        positions.push(p);
        velocities.push(k.velocity(cfg, f as f64 * cfg.dt));
    }
    ObjectTruth {
        id,
        frames,
        positions,
        velocities,
    }
}

fn truth_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn render_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Random swarm per the configured kinematics. Object ids start at 1.
pub fn generate_truth(cfg: &SimConfig) -> Result<GroundTruth> {
    cfg.validate()?;
    let mut rng = truth_rng(cfg.seed);
    let b = cfg.box_half;
    let objects = (0..cfg.n_objects)
        .map(|i| {
            let start = Point3::new(
                rng.random_range(-b..=b),
                rng.random_range(-b..=b),
                rng.random_range(-b..=b),
            );
            let k = draw_kinematics(&mut rng);
            integrate(cfg, i as u64 + 1, start, &k)
        })
        .collect();
    Ok(GroundTruth { objects })
}

/// Frame at which the two crossing objects coincide in view 1.
pub const CROSSING_FRAME: u32 = 25;

/// Scripted near-collision: two objects 20 units apart along camera 1's axis
/// fly past each other in that view; with the default rig their discs merge
/// in view 1 for three frames around [`CROSSING_FRAME`] and stay apart in view
/// 2. A slow opposite climb separates them vertically at the start so that
/// cross-object blob pairs fail the epipolar gate.
pub fn crossing_truth(cfg: &SimConfig) -> GroundTruth {
    let c = cfg.rig.target;
    let lane = |id: u64, dx: f64, vy: f64, vz: f64| {
        let v = Vector3::new(0.0, vy, vz);
        let frames: Vec<u32> = (1..=cfg.frame_count()).collect();
        let positions = frames
            .iter()
            .map(|&f| {
                let t = (f as f64 - CROSSING_FRAME as f64) * cfg.dt;
                Point3::new(c[0] + dx, c[1] + vy * t, c[2] + vz * t)
            })
            .collect();
        ObjectTruth {
            id,
            velocities: vec![v; frames.len()],
            frames,
            positions,
        }
    };
    GroundTruth {
        objects: vec![lane(1, -10.0, 3.5, 0.2), lane(2, 10.0, -3.5, -0.2)],
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi] = lo;
        }
    }
}

/// Merges footprints that share or touch pixels (8-connectivity) into blobs.
pub fn merge_footprints(view_id: u32, frame: u32, footprints: &[Vec<RasterPixel>]) -> Vec<Measurement> {
    let mut owner: HashMap<RasterPixel, usize> = HashMap::new();
    let mut uf = UnionFind((0..footprints.len()).collect());
    for (o, fp) in footprints.iter().enumerate() {
        for p in fp {
            for dv in -1..=1 {
                for du in -1..=1 {
                    if let Some(&other) = owner.get(&[p[0] + du, p[1] + dv]) {
                        if other != o {
                            uf.union(o, other);
                        }
                    }
                }
            }
        }
        for p in fp {
            owner.entry(*p).or_insert(o);
        }
    }
    let mut groups: Vec<(usize, Vec<RasterPixel>)> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for (o, fp) in footprints.iter().enumerate() {
        if fp.is_empty() {
            continue;
        }
        let root = uf.find(o);
        let at = *slot.entry(root).or_insert_with(|| {
            groups.push((root, Vec::new()));
            groups.len() - 1
        });
        groups[at].1.extend_from_slice(fp);
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(id, (_, px))| Measurement::from_pixels(view_id, frame, id, px).expect("non-empty footprint"))
        .collect()
}

/// Renders one frame: each object is a disc of the ball's apparent radius
/// around its projection shifted by `N(0, noise_sigma²)` per image axis;
/// touching discs merge into one blob. Returns one blob list per camera.
pub fn render_frame<R: Rng + ?Sized>(
    frame: u32,
    positions: &[Point3<f64>],
    cameras: &[CameraModel],
    ball_radius: f64,
    noise_sigma: f64,
    out_of_view: OutOfView,
    rng: &mut R,
) -> Result<Vec<Vec<Measurement>>> {
    let mut views = Vec::with_capacity(cameras.len());
    for cam in cameras {
        let mut footprints = Vec::with_capacity(positions.len());
        for (o, p) in positions.iter().enumerate() {
            let du: f64 = rng.sample(StandardNormal);
            let dv: f64 = rng.sample(StandardNormal);
            let fp = match (project(cam, p), ball_radius_px(cam, p, ball_radius)) {
                (Ok(px), Ok(r)) => {
                    let c = Pixel::new(px.u + noise_sigma * du, px.v + noise_sigma * dv);
                    raster_disc(c, r, cam.width(), cam.height())
                }
                _ => Vec::new(),
            };
            if fp.is_empty() && out_of_view == OutOfView::Error {
                return Err(Error::ObjectOutOfView {
                    object: o,
                    view: cam.view_id(),
                    frame,
                });
            }
            footprints.push(fp);
        }
        views.push(merge_footprints(cam.view_id(), frame, &footprints));
    }
    Ok(views)
}

/// Rendered measurements of every frame, per view.
#[derive(Debug, Clone)]
pub struct Rendered {
    pub frames: Vec<(u32, Vec<Vec<Measurement>>)>,
}

impl Rendered {
    /// Blobs keyed by view id, in the layout of the measurement file.
    pub fn by_view_id(&self, cameras: &[CameraModel]) -> MeasurementFrames {
        self.frames
            .iter()
            .map(|(f, views)| {
                let v = cameras.iter().zip(views).map(|(c, b)| (c.view_id(), b.clone())).collect();
                (*f, v)
            })
            .collect()
    }
}

pub fn render_all(cfg: &SimConfig, truth: &GroundTruth, cameras: &[CameraModel]) -> Result<Rendered> {
    let mut rng = render_rng(cfg.seed);
    let mut frames = Vec::new();
    for f in truth.frames() {
        let pts: Vec<Point3<f64>> = truth.positions_at(f).into_iter().map(|(_, p)| p).collect();
        let views = render_frame(
            f,
            &pts,
            cameras,
            cfg.ball_radius,
            cfg.pixel_noise_sigma,
            cfg.out_of_view,
            &mut rng,
        )?;
        frames.push((f, views));
    }
    Ok(Rendered { frames })
}
