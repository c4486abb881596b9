//! Single-tracker particle filtering.
//!
//! Both filters draw a fresh particle cloud around the predicted state every
//! frame, weight each particle by the credibility of its best candidate
//! association and take the normalized weighted mean. The CSKPF additionally
//! draws from the predicted CSM covariance and runs a Kalman correction with
//! the triangulated observation.

use nalgebra::{Point3, SVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::association::{best_candidate, best_credibility, candidate_groups, FrameData, Measurement};
use crate::error::{Error, Result};
use crate::geometry::{project_ball, triangulate_views, CameraModel, RasterPixel};
use crate::motion::{
    csm_from_cv, cv_from_csm, kalman_correct, position_of, predict_csm, predict_cv, Covariance9, CsmParams,
    MeanAcceleration, ObservationModel, StateCsm, StateCv,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cvpf,
    Cskpf,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Cvpf => "cvpf",
            Method::Cskpf => "cskpf",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cvpf" => Ok(Method::Cvpf),
            "cskpf" => Ok(Method::Cskpf),
            other => Err(Error::InvalidConfig(format!("unknown method {other:?}"))),
        }
    }
}

/// Parameters shared by every tracker of a run.
#[derive(Debug, Clone)]
pub struct FilterParams {
    pub particles: usize,
    /// Isotropic CVPF particle variance.
    pub sigma2: f64,
    pub csm: CsmParams,
    pub observation: ObservationModel,
    /// Radius of the rendered ball used for particle footprints.
    pub object_radius: f64,
}

impl FilterParams {
    pub fn dt(&self) -> f64 {
        self.csm.dt
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    pub states: Vec<StateCsm>,
    pub weights: Vec<f64>,
}

impl ParticleSet {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn all_zero(&self) -> bool {
        self.weights.iter().all(|&w| w == 0.0)
    }
}

fn uniform(states: Vec<StateCsm>) -> ParticleSet {
    let n = states.len();
    ParticleSet {
        states,
        weights: vec![1.0 / n as f64; n],
    }
}

/// Isotropic Gaussian particles around a CV state (acceleration entries zero).
pub fn sample_particles_cv<R: Rng + ?Sized>(mean: &StateCv, sigma2: f64, n: usize, rng: &mut R) -> ParticleSet {
    let sigma = sigma2.max(0.0).sqrt();
    let states = (0..n)
        .map(|_| {
            let noise = StateCv::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
            csm_from_cv(&(mean + noise * sigma))
        })
        .collect();
    uniform(states)
}

/// Multivariate Gaussian particles `N(mean, cov)` via a jittered Cholesky factor.
pub fn sample_particles_csm<R: Rng + ?Sized>(
    mean: &StateCsm,
    cov: &Covariance9,
    n: usize,
    rng: &mut R,
) -> Result<ParticleSet> {
    let trace = cov.trace();
    if cov.iter().any(|x| !x.is_finite()) {
        return Err(Error::FactorizationFailure("non-finite covariance".into()));
    }
    if trace == 0.0 && cov.abs().max() == 0.0 {
        return Ok(uniform(vec![*mean; n]));
    }
    let jitter = 1e-9 * trace / 9.0;
    let chol = (cov + Covariance9::identity() * jitter)
        .cholesky()
        .ok_or_else(|| Error::FactorizationFailure(format!("covariance with trace {trace:e} is not positive definite")))?;
    let l = chol.l();
    let states = (0..n)
        .map(|_| {
            let z = SVector::<f64, 9>::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
            mean + l * z
        })
        .collect();
    Ok(uniform(states))
}

/// Footprint of a state on every view; empty when behind a camera.
pub fn footprints(cameras: &[CameraModel], state: &StateCsm, radius: f64) -> Vec<Vec<RasterPixel>> {
    let p = position_of(state);
    cameras
        .iter()
        .map(|c| project_ball(c, &p, radius).unwrap_or_default())
        .collect()
}

/// Sets each weight to the credibility of the particle's best candidate
/// association (0 without one). Weights are left unnormalized.
pub fn weigh_particles(
    mut ps: ParticleSet,
    frame: &FrameData,
    cameras: &[CameraModel],
    prev: &[Option<&Measurement>],
    radius: f64,
) -> ParticleSet {
    for (state, w) in ps.states.iter().zip(ps.weights.iter_mut()) {
        let proj = footprints(cameras, state, radius);
        *w = best_credibility(&proj, frame, prev);
    }
    ps
}

/// Weighted mean of the particles with weights normalized to sum 1.
pub fn estimate_state(ps: &ParticleSet) -> Result<StateCsm> {
    let total: f64 = ps.weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::AllZeroWeights);
    }
    let mut acc = StateCsm::zeros();
    for (s, w) in ps.states.iter().zip(&ps.weights) {
        if *w > 0.0 {
            acc += s * (*w / total);
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrackerStatus {
    Active,
    Inactive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryEntry {
    pub frame: u32,
    pub state: StateCsm,
    pub observation: Option<Point3<f64>>,
    /// Blob index per view; empty for entries created without association.
    pub association: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Tracker {
    pub id: u64,
    pub status: TrackerStatus,
    pub state: StateCsm,
    pub cov: Covariance9,
    pub a_bar: MeanAcceleration,
    /// Blob held on each view at the last updated frame.
    pub last_assoc: Vec<Option<Measurement>>,
    pub history: Vec<HistoryEntry>,
    pub birth_frame: u32,
    /// CV steps left before the CSKPF output is accepted.
    pub warmup_remaining: usize,
    /// CSM filter run alongside the CV output during warm-up.
    pub shadow: Option<(StateCsm, Covariance9)>,
    rng: ChaCha8Rng,
}

impl Tracker {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: u64,
        frame: u32,
        state: StateCsm,
        cov: Covariance9,
        association: Vec<usize>,
        last_assoc: Vec<Option<Measurement>>,
        warmup: usize,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id);
        Self {
            id,
            status: TrackerStatus::Active,
            state,
            cov,
            a_bar: MeanAcceleration::default(),
            last_assoc,
            history: vec![HistoryEntry {
                frame,
                state,
                observation: Some(position_of(&state)),
                association,
            }],
            birth_frame: frame,
            warmup_remaining: warmup,
            shadow: (warmup > 0).then_some((state, cov)),
            rng,
        }
    }

    pub fn is_active(&self) -> bool {
        self.status == TrackerStatus::Active
    }

    pub fn last_frame(&self) -> u32 {
        self.history.last().map(|h| h.frame).unwrap_or(self.birth_frame)
    }

    fn prev_refs(&self) -> Vec<Option<&Measurement>> {
        self.last_assoc.iter().map(|m| m.as_ref()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepUpdate {
    /// State accepted for this frame.
    pub state: StateCsm,
    /// Particle estimate before any Kalman correction.
    pub estimate: StateCsm,
    /// Predicted covariance used for sampling and correction (CSKPF).
    pub predicted_cov: Option<Covariance9>,
    pub cov: Option<Covariance9>,
    pub observation: Option<Point3<f64>>,
    pub association: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Updated(Box<StepUpdate>),
    Lost,
}

struct Association {
    indices: Vec<usize>,
    observation: Option<Point3<f64>>,
}

// Most likely association at the estimated state; when the estimate itself
// overlaps nothing on some view, the highest-weight particle's association is
// used instead.
fn associate(
    estimate: &StateCsm,
    ps: &ParticleSet,
    frame: &FrameData,
    cameras: &[CameraModel],
    prev: &[Option<&Measurement>],
    radius: f64,
) -> Option<Association> {
    let at_estimate = candidate_groups(&footprints(cameras, estimate, radius), frame, prev);
    let chosen = match best_candidate(&at_estimate) {
        Some(c) => c.indices.clone(),
        None => {
            let mut best = 0;
            for (i, w) in ps.weights.iter().enumerate() {
                if *w > ps.weights[best] {
                    best = i;
                }
            }
            let g = candidate_groups(&footprints(cameras, &ps.states[best], radius), frame, prev);
            best_candidate(&g)?.indices.clone()
        }
    };
    let views: Vec<_> = cameras
        .iter()
        .zip(&frame.views)
        .zip(&chosen)
        .map(|((cam, view), &k)| (cam, view.blobs[k].centroid))
        .collect();
    let observation = triangulate_views(&views).ok().map(|(p, _)| p);
    Some(Association {
        indices: chosen,
        observation,
    })
}

fn commit(tr: &mut Tracker, frame: &FrameData, update: &StepUpdate) {
    tr.state = update.state;
    if let Some(cov) = update.cov {
        tr.cov = cov;
    }
    tr.last_assoc = frame
        .views
        .iter()
        .zip(&update.association)
        .map(|(v, &k)| Some(v.blobs[k].clone()))
        .collect();
    tr.history.push(HistoryEntry {
        frame: frame.frame,
        state: update.state,
        observation: update.observation,
        association: update.association.clone(),
    });
}

fn retire(tr: &mut Tracker) -> StepOutcome {
    tr.status = TrackerStatus::Inactive;
    StepOutcome::Lost
}

fn check_active(tr: &Tracker) -> Result<()> {
    if !tr.is_active() {
        return Err(Error::InvalidConfig(format!("tracker {} is inactive", tr.id)));
    }
    Ok(())
}

// CV predict → sample → weigh → estimate → associate, without committing.
fn cv_update(
    tr: &mut Tracker,
    frame: &FrameData,
    cameras: &[CameraModel],
    params: &FilterParams,
) -> Option<StepUpdate> {
    let predicted = predict_cv(&cv_from_csm(&tr.state), params.dt());
    let ps = sample_particles_cv(&predicted, params.sigma2, params.particles, &mut tr.rng);
    let prev = tr.prev_refs();
    let ps = weigh_particles(ps, frame, cameras, &prev, params.object_radius);
    let estimate = estimate_state(&ps).ok()?;
    let assoc = associate(&estimate, &ps, frame, cameras, &prev, params.object_radius)?;
    Some(StepUpdate {
        state: estimate,
        estimate,
        predicted_cov: None,
        cov: None,
        observation: assoc.observation,
        association: assoc.indices,
    })
}

/// One constant-velocity particle filter step. Marks the tracker inactive
/// and returns `Lost` when no particle overlaps a blob on every view.
pub fn step_cvpf(
    tr: &mut Tracker,
    frame: &FrameData,
    cameras: &[CameraModel],
    params: &FilterParams,
) -> Result<StepOutcome> {
    check_active(tr)?;
    match cv_update(tr, frame, cameras, params) {
        Some(update) => {
            commit(tr, frame, &update);
            Ok(StepOutcome::Updated(Box::new(update)))
        }
        None => Ok(retire(tr)),
    }
}

/// Warm-up step of a CSKPF tracker: the CV output is accepted while a CSM
/// Kalman filter runs alongside on the same observations to estimate the
/// mean acceleration and covariance. When warm-up ends the tracker continues
/// from that filter's state.
pub fn step_warmup(
    tr: &mut Tracker,
    frame: &FrameData,
    cameras: &[CameraModel],
    params: &FilterParams,
) -> Result<StepOutcome> {
    check_active(tr)?;
    if tr.warmup_remaining == 0 {
        return step_cskpf(tr, frame, cameras, params);
    }
    let Some(mut update) = cv_update(tr, frame, cameras, params) else {
        return Ok(retire(tr));
    };
    let (s, p) = tr.shadow.unwrap_or((tr.state, tr.cov));
    let (mut s, mut p) = predict_csm(&s, &p, &params.csm, &tr.a_bar);
    if let Some(y) = update.observation {
        (s, p) = kalman_correct(&s, &p, &y, &params.observation)?;
    }
    tr.a_bar = MeanAcceleration::from_state(&s, &params.csm.a_max);
    let mut accepted = update.state;
    accepted[2] = tr.a_bar.0[0];
    accepted[5] = tr.a_bar.0[1];
    accepted[8] = tr.a_bar.0[2];
    update.state = accepted;
    update.cov = Some(p);
    commit(tr, frame, &update);
    tr.warmup_remaining -= 1;
    if tr.warmup_remaining == 0 {
        tr.state = s;
        tr.cov = p;
        tr.shadow = None;
    } else {
        tr.shadow = Some((s, p));
    }
    Ok(StepOutcome::Updated(Box::new(update)))
}

/// One CSKPF step: CSM prediction, sampling from the predicted covariance,
/// weighting, estimation, association and Kalman correction.
pub fn step_cskpf(
    tr: &mut Tracker,
    frame: &FrameData,
    cameras: &[CameraModel],
    params: &FilterParams,
) -> Result<StepOutcome> {
    check_active(tr)?;
    if tr.warmup_remaining > 0 {
        return Err(Error::WarmupPending {
            remaining: tr.warmup_remaining,
        });
    }
    let (predicted, p_pred) = predict_csm(&tr.state, &tr.cov, &params.csm, &tr.a_bar);
    let ps = sample_particles_csm(&predicted, &p_pred, params.particles, &mut tr.rng)?;
    let prev = tr.prev_refs();
    let ps = weigh_particles(ps, frame, cameras, &prev, params.object_radius);
    let Ok(estimate) = estimate_state(&ps) else {
        return Ok(retire(tr));
    };
    let Some(assoc) = associate(&estimate, &ps, frame, cameras, &prev, params.object_radius) else {
        return Ok(retire(tr));
    };
    let (state, cov) = match assoc.observation {
        Some(y) => kalman_correct(&estimate, &p_pred, &y, &params.observation)?,
        None => (estimate, p_pred),
    };
    tr.a_bar = MeanAcceleration::from_state(&state, &params.csm.a_max);
    let update = StepUpdate {
        state,
        estimate,
        predicted_cov: Some(p_pred),
        cov: Some(cov),
        observation: assoc.observation,
        association: assoc.indices,
    };
    commit(tr, frame, &update);
    Ok(StepOutcome::Updated(Box::new(update)))
}

/// Dispatches one step for the given method.
pub fn step(
    method: Method,
    tr: &mut Tracker,
    frame: &FrameData,
    cameras: &[CameraModel],
    params: &FilterParams,
) -> Result<StepOutcome> {
    match method {
        Method::Cvpf => step_cvpf(tr, frame, cameras, params),
        Method::Cskpf if tr.warmup_remaining > 0 => step_warmup(tr, frame, cameras, params),
        Method::Cskpf => step_cskpf(tr, frame, cameras, params),
    }
}
