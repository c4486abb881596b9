//! Kinematic prediction: constant velocity (CV), the current statistical
//! model (CSM) for maneuvering targets, and the linear Kalman correction.
//!
//! CV states are ordered `[x, vx, y, vy, z, vz]`; CSM states are ordered
//! `[x, vx, ax, y, vy, ay, z, vz, az]`.

use nalgebra::{Matrix3, Point3, SMatrix, SVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type StateCv = SVector<f64, 6>;
pub type StateCsm = SVector<f64, 9>;
pub type Covariance9 = SMatrix<f64, 9, 9>;
pub type Transition9 = SMatrix<f64, 9, 9>;
pub type Control9 = SMatrix<f64, 9, 3>;
pub type Observation = SMatrix<f64, 3, 9>;

/// Per-axis CSM parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsmParams {
    /// Reciprocal of the maneuver time constant, 1/s.
    pub alpha: [f64; 3],
    /// Maximum possible acceleration magnitude.
    pub a_max: [f64; 3],
    /// Sampling interval, s.
    pub dt: f64,
}

impl CsmParams {
    pub fn isotropic(alpha: f64, a_max: f64, dt: f64) -> Result<Self> {
        Self::new([alpha; 3], [a_max; 3], dt)
    }

    pub fn new(alpha: [f64; 3], a_max: [f64; 3], dt: f64) -> Result<Self> {
        let p = Self { alpha, a_max, dt };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt must be > 0, got {}", self.dt)));
        }
        for i in 0..3 {
            if !(self.alpha[i] > 0.0 && self.alpha[i].is_finite()) {
                return Err(Error::InvalidConfig(format!("alpha[{i}] must be > 0")));
            }
            if !(self.a_max[i] > 0.0 && self.a_max[i].is_finite()) {
                return Err(Error::InvalidConfig(format!("a_max[{i}] must be > 0")));
            }
        }
        Ok(())
    }
}

/// Current average acceleration, clamped to `[-a_max, a_max]` per axis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanAcceleration(pub [f64; 3]);

impl MeanAcceleration {
    pub fn clamped(a: [f64; 3], a_max: &[f64; 3]) -> Self {
        Self([
            a[0].clamp(-a_max[0], a_max[0]),
            a[1].clamp(-a_max[1], a_max[1]),
            a[2].clamp(-a_max[2], a_max[2]),
        ])
    }

    /// Acceleration block of a CSM state.
    pub fn from_state(s: &StateCsm, a_max: &[f64; 3]) -> Self {
        Self::clamped([s[2], s[5], s[8]], a_max)
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::from(self.0)
    }
}

/// Position observation `y = H x + n`, `n ~ N(0, R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationModel {
    pub h: Observation,
    pub r: Matrix3<f64>,
}

impl ObservationModel {
    pub fn position(r: Matrix3<f64>) -> Result<Self> {
        if (r - r.transpose()).abs().max() > 1e-12 * (1.0 + r.abs().max()) || r.cholesky().is_none() {
            return Err(Error::InvalidConfig("observation noise must be symmetric positive definite".into()));
        }
        Ok(Self {
            h: position_selector(),
            r,
        })
    }

    pub fn isotropic(variance: f64) -> Result<Self> {
        Self::position(Matrix3::identity() * variance)
    }
}

/// The 3×9 matrix extracting `(x, y, z)` from a CSM state.
pub fn position_selector() -> Observation {
    let mut h = Observation::zeros();
    h[(0, 0)] = 1.0;
    h[(1, 3)] = 1.0;
    h[(2, 6)] = 1.0;
    h
}

pub fn position_of(s: &StateCsm) -> Point3<f64> {
    Point3::new(s[0], s[3], s[6])
}

pub fn velocity_of(s: &StateCsm) -> Vector3<f64> {
    Vector3::new(s[1], s[4], s[7])
}

pub fn acceleration_of(s: &StateCsm) -> Vector3<f64> {
    Vector3::new(s[2], s[5], s[8])
}

pub fn csm_from_cv(s: &StateCv) -> StateCsm {
    StateCsm::from_column_slice(&[s[0], s[1], 0.0, s[2], s[3], 0.0, s[4], s[5], 0.0])
}

pub fn cv_from_csm(s: &StateCsm) -> StateCv {
    StateCv::from_column_slice(&[s[0], s[1], s[3], s[4], s[6], s[7]])
}

pub fn cv_transition(dt: f64) -> SMatrix<f64, 6, 6> {
    let mut f = SMatrix::<f64, 6, 6>::identity();
    for axis in 0..3 {
        f[(2 * axis, 2 * axis + 1)] = dt;
    }
    f
}

/// Constant-velocity prediction: positions advance by `velocity * dt`.
pub fn predict_cv(s: &StateCv, dt: f64) -> StateCv {
    let mut out = *s;
    for axis in 0..3 {
        out[2 * axis] += s[2 * axis + 1] * dt;
    }
    out
}

// Each CSM entry is Δt^n · B(x) / (2 x^n)-shaped with x = αΔt, where B is a
// combination of 1, x, x², x³, e^{-x}, x e^{-x} and e^{-2x} whose Taylor
// coefficients below x^n vanish. For small x the closed form cancels
// catastrophically, so B(x)/x^n is summed from its series instead.
#[derive(Clone, Copy)]
struct ExpCombo {
    poly: [f64; 4],
    e1: f64,
    x_e1: f64,
    e2: f64,
}

const SERIES_CUTOFF: f64 = 1.0;
const SERIES_TERMS: usize = 40;

impl ExpCombo {
    fn closed(&self, x: f64) -> f64 {
        let e1 = (-x).exp();
        let e2 = (-2.0 * x).exp();
        let p = self.poly;
        p[0] + x * (p[1] + x * (p[2] + x * p[3])) + self.e1 * e1 + self.x_e1 * x * e1 + self.e2 * e2
    }

    fn coeff(&self, m: usize, inv_fact: &[f64]) -> f64 {
        let sign1 = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
        let mut c = if m < 4 { self.poly[m] } else { 0.0 };
        c += self.e1 * sign1 * inv_fact[m];
        c += self.e2 * sign1 * 2f64.powi(m as i32) * inv_fact[m];
        if m >= 1 {
            c += self.x_e1 * (-sign1) * inv_fact[m - 1];
        }
        c
    }

    /// `B(x) / x^n`.
    fn ratio(&self, x: f64, n: i32) -> f64 {
        if x >= SERIES_CUTOFF {
            return self.closed(x) / x.powi(n);
        }
        let mut inv_fact = [0.0; SERIES_TERMS + 8];
        inv_fact[0] = 1.0;
        for k in 1..inv_fact.len() {
            inv_fact[k] = inv_fact[k - 1] / k as f64;
        }
        let n = n as usize;
        // Horner over the tail, highest power first
        let mut acc = 0.0;
        for m in (n..n + SERIES_TERMS).rev() {
            acc = acc * x + self.coeff(m, &inv_fact);
        }
        acc
    }
}

const G13: ExpCombo = ExpCombo { poly: [-1.0, 1.0, 0.0, 0.0], e1: 1.0, x_e1: 0.0, e2: 0.0 };
const G23: ExpCombo = ExpCombo { poly: [1.0, 0.0, 0.0, 0.0], e1: -1.0, x_e1: 0.0, e2: 0.0 };
const U1: ExpCombo = ExpCombo { poly: [1.0, -1.0, 0.5, 0.0], e1: -1.0, x_e1: 0.0, e2: 0.0 };
const U2: ExpCombo = ExpCombo { poly: [-1.0, 1.0, 0.0, 0.0], e1: 1.0, x_e1: 0.0, e2: 0.0 };
const Q11: ExpCombo = ExpCombo { poly: [1.0, 2.0, -2.0, 2.0 / 3.0], e1: 0.0, x_e1: -4.0, e2: -1.0 };
const Q12: ExpCombo = ExpCombo { poly: [1.0, -2.0, 1.0, 0.0], e1: -2.0, x_e1: 2.0, e2: 1.0 };
const Q13: ExpCombo = ExpCombo { poly: [1.0, 0.0, 0.0, 0.0], e1: 0.0, x_e1: -2.0, e2: -1.0 };
const Q22: ExpCombo = ExpCombo { poly: [-3.0, 2.0, 0.0, 0.0], e1: 4.0, x_e1: 0.0, e2: -1.0 };
const Q23: ExpCombo = ExpCombo { poly: [1.0, 0.0, 0.0, 0.0], e1: -2.0, x_e1: 0.0, e2: 1.0 };
const Q33: ExpCombo = ExpCombo { poly: [1.0, 0.0, 0.0, 0.0], e1: 0.0, x_e1: 0.0, e2: -1.0 };

/// Single-axis CSM transition `G₁` and control `u₁`.
pub fn csm_axis_transition(alpha: f64, dt: f64) -> (Matrix3<f64>, Vector3<f64>) {
    let x = alpha * dt;
    let e = (-x).exp();
    let g13 = dt * dt * G13.ratio(x, 2);
    let g23 = dt * G23.ratio(x, 1);
    let g = Matrix3::new(1.0, dt, g13, 0.0, 1.0, g23, 0.0, 0.0, e);
    let u = Vector3::new(dt * dt * U1.ratio(x, 2), dt * U2.ratio(x, 1), -(-x).exp_m1());
    (g, u)
}

/// Block-diagonal CSM transition `G` (9×9) and control `U` (9×3).
pub fn csm_transition(p: &CsmParams) -> (Transition9, Control9) {
    let mut g = Transition9::zeros();
    let mut u = Control9::zeros();
    for axis in 0..3 {
        let (g1, u1) = csm_axis_transition(p.alpha[axis], p.dt);
        g.fixed_view_mut::<3, 3>(3 * axis, 3 * axis).copy_from(&g1);
        u.fixed_view_mut::<3, 1>(3 * axis, axis).copy_from(&u1);
    }
    (g, u)
}

/// The symmetric `[q_jk]` matrix for one axis (before the `2ασ²` factor).
pub fn csm_axis_q(alpha: f64, dt: f64) -> Matrix3<f64> {
    let x = alpha * dt;
    let half = 0.5;
    let q11 = half * dt.powi(5) * Q11.ratio(x, 5);
    let q12 = half * dt.powi(4) * Q12.ratio(x, 4);
    let q13 = half * dt.powi(3) * Q13.ratio(x, 3);
    let q22 = half * dt.powi(3) * Q22.ratio(x, 3);
    let q23 = half * dt.powi(2) * Q23.ratio(x, 2);
    let q33 = half * dt * Q33.ratio(x, 1);
    Matrix3::new(q11, q12, q13, q12, q22, q23, q13, q23, q33)
}

/// Acceleration variance from the modified Rayleigh model around `a_bar`.
/// At `a_bar == 0` both branches agree; the positive branch is used.
pub fn rayleigh_variance(a_bar: f64, a_max: f64) -> f64 {
    let k = (4.0 - std::f64::consts::PI) / std::f64::consts::PI;
    if a_bar >= 0.0 {
        k * (a_max - a_bar).powi(2)
    } else {
        k * (-a_max - a_bar).powi(2)
    }
}

/// Block-diagonal process noise `Q = diag(2 αᵢ σᵢ² [q_jk(αᵢ)])`.
pub fn csm_process_noise(p: &CsmParams, a_bar: &MeanAcceleration) -> Covariance9 {
    let mut q = Covariance9::zeros();
    for axis in 0..3 {
        let sigma2 = rayleigh_variance(a_bar.0[axis], p.a_max[axis]);
        let block = csm_axis_q(p.alpha[axis], p.dt) * (2.0 * p.alpha[axis] * sigma2);
        q.fixed_view_mut::<3, 3>(3 * axis, 3 * axis).copy_from(&block);
    }
    q
}

pub fn symmetrize(p: &Covariance9) -> Covariance9 {
    (p + p.transpose()) * 0.5
}

/// CSM prediction of state and covariance.
pub fn predict_csm(
    s: &StateCsm,
    cov: &Covariance9,
    p: &CsmParams,
    a_bar: &MeanAcceleration,
) -> (StateCsm, Covariance9) {
    let (g, u) = csm_transition(p);
    let q = csm_process_noise(p, a_bar);
    let state = g * s + u * a_bar.as_vector();
    let cov = symmetrize(&(g * cov * g.transpose() + q));
    (state, cov)
}

/// Kalman correction of a predicted state with a position observation.
pub fn kalman_correct(
    s_pred: &StateCsm,
    cov_pred: &Covariance9,
    y: &Point3<f64>,
    m: &ObservationModel,
) -> Result<(StateCsm, Covariance9)> {
    let h = &m.h;
    let pht = cov_pred * h.transpose();
    let innovation_cov = h * pht + m.r;
    let chol = innovation_cov.cholesky().ok_or(Error::SingularInnovation)?;
    let s_inv = chol.inverse();
    if s_inv.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularInnovation);
    }
    let gain = pht * s_inv;
    let innovation = y.coords - h * s_pred;
    let state = s_pred + gain * innovation;
    let cov = symmetrize(&(cov_pred - gain * h * cov_pred));
    Ok((state, cov))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn min_eig(p: &Covariance9) -> f64 {
        symmetrize(p).symmetric_eigenvalues().min()
    }

    #[test]
    fn cv_fixed_point_and_unit_velocity() {
        let s = StateCv::from_column_slice(&[1.0, 0.0, 2.0, 0.0, 3.0, 0.0]);
        assert_eq!(predict_cv(&s, 0.1), s);
        let s = StateCv::from_column_slice(&[0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let out = predict_cv(&s, 0.1);
        assert_abs_diff_eq!(out, StateCv::from_column_slice(&[0.1, 1.0, 0.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn cv_matches_block_matrix() {
        let s = StateCv::from_column_slice(&[0.3, -1.2, 4.0, 2.5, -7.0, 0.75]);
        let dt = 0.037;
        // explicit 6x6 multiply, F = blockdiag([[1, dt], [0, 1]])
        let mut f = [[0.0; 6]; 6];
        for b in 0..3 {
            f[2 * b][2 * b] = 1.0;
            f[2 * b][2 * b + 1] = dt;
            f[2 * b + 1][2 * b + 1] = 1.0;
        }
        let mut expected = [0.0; 6];
        for i in 0..6 {
            for j in 0..6 {
                expected[i] += f[i][j] * s[j];
            }
        }
        let got = predict_cv(&s, dt);
        for i in 0..6 {
            assert_abs_diff_eq!(got[i], expected[i], epsilon = 1e-12);
        }
        assert_abs_diff_eq!(cv_transition(dt) * s, got, epsilon = 1e-12);
    }

    #[test]
    fn transition_vanishing_dt() {
        let p = CsmParams::isotropic(5.0, 5.0, 1e-6).unwrap();
        let (g, u) = csm_transition(&p);
        assert!((g - Transition9::identity()).abs().max() <= 1e-5);
        assert!(u.abs().max() <= 1e-5);
        // entries other than the dt and e^{-αdt} ones are below 1e-8
        let (g1, u1) = csm_axis_transition(5.0, 1e-6);
        assert!(g1[(0, 2)].abs() <= 1e-8 && g1[(1, 2)].abs() <= 1e-5);
        assert!(u1.amax() <= 1e-5);
        assert!(u1[0].abs() <= 1e-8 && u1[1].abs() <= 1e-8);
    }

    #[test]
    fn transition_decay_entry() {
        let (g1, _) = csm_axis_transition(5.0, 0.1);
        assert_abs_diff_eq!(g1[(2, 2)], 0.606_530_659_712_633_4, epsilon = 1e-15);
    }

    #[test]
    fn transition_small_alpha_matches_taylor() {
        let dt = 0.1;
        let (g1, _) = csm_axis_transition(1e-4, dt);
        let taylor = Matrix3::new(1.0, dt, dt * dt / 2.0, 0.0, 1.0, dt, 0.0, 0.0, 1.0);
        // deviations are O(αdt) = 1e-5
        assert!((g1 - taylor).abs().max() <= 2e-5);
        assert!((g1 - taylor).fixed_view::<2, 3>(0, 0).abs().max() <= 1e-6);
    }

    #[test]
    fn series_and_closed_form_agree_at_cutoff() {
        let combos = [
            (G13, 2),
            (G23, 1),
            (U1, 2),
            (U2, 1),
            (Q11, 5),
            (Q12, 4),
            (Q13, 3),
            (Q22, 3),
            (Q23, 2),
            (Q33, 1),
        ];
        let x = SERIES_CUTOFF * (1.0 - 1e-12);
        for (combo, n) in combos {
            let series = combo.ratio(x, n);
            let closed = combo.closed(x) / x.powi(n);
            assert!((series - closed).abs() <= 1e-12 * closed.abs(), "n={n}: {series} vs {closed}");
        }
    }

    #[test]
    fn process_noise_edge_cases() {
        let p = CsmParams::isotropic(5.0, 5.0, 0.1).unwrap();
        let q = csm_process_noise(&p, &MeanAcceleration([5.0, 0.0, -5.0]));
        assert!(q.fixed_view::<3, 3>(0, 0).abs().max() == 0.0);
        assert!(q.fixed_view::<3, 3>(6, 6).abs().max() == 0.0);
        let k = (4.0 - std::f64::consts::PI) / std::f64::consts::PI;
        assert_abs_diff_eq!(rayleigh_variance(0.0, 5.0), k * 25.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rayleigh_variance(-0.0, 5.0), k * 25.0, epsilon = 1e-15);
        let q = csm_process_noise(&p, &MeanAcceleration::default());
        assert_eq!(q, q.transpose());
        assert!(min_eig(&q) >= -1e-12);
    }

    #[test]
    fn predict_fixed_point_and_noise_injection() {
        let p = CsmParams::isotropic(5.0, 5.0, 0.1).unwrap();
        let s = StateCsm::from_column_slice(&[1.0, 0.0, 0.0, -2.0, 0.0, 0.0, 3.0, 0.0, 0.0]);
        let (out, cov) = predict_csm(&s, &Covariance9::zeros(), &p, &MeanAcceleration::default());
        assert_abs_diff_eq!(position_of(&out), position_of(&s), epsilon = 1e-15);
        let q = csm_process_noise(&p, &MeanAcceleration::default());
        assert_abs_diff_eq!(cov, q, epsilon = 1e-15);
        assert!(cov.abs().max() > 0.0);
    }

    #[test]
    fn correction_zero_innovation_shrinks_trace() {
        let s = StateCsm::from_column_slice(&[1.0, 2.0, 0.1, 3.0, -1.0, 0.0, 5.0, 0.5, -0.2]);
        let cov = Covariance9::identity() * 0.5;
        let m = ObservationModel::isotropic(0.1).unwrap();
        let y = position_of(&s);
        let (out, cov2) = kalman_correct(&s, &cov, &y, &m).unwrap();
        assert_abs_diff_eq!(out, s, epsilon = 1e-15);
        assert!(cov2.trace() < cov.trace());
    }

    #[test]
    fn correction_perfect_measurement() {
        let s = StateCsm::from_column_slice(&[1.0, 2.0, 0.1, 3.0, -1.0, 0.0, 5.0, 0.5, -0.2]);
        let cov = Covariance9::from_diagonal(&SVector::<f64, 9>::from_column_slice(&[
            0.4, 1.0, 2.0, 0.3, 1.0, 2.0, 0.2, 1.0, 2.0,
        ]));
        let m = ObservationModel::isotropic(1e-12).unwrap();
        let y = Point3::new(1.5, 2.0, 4.0);
        let (out, _) = kalman_correct(&s, &cov, &y, &m).unwrap();
        assert_abs_diff_eq!(position_of(&out), y, epsilon = 1e-6);
    }

    #[test]
    fn corrected_position_between_prediction_and_observation() {
        let s = StateCsm::from_column_slice(&[0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0]);
        let cov = Covariance9::identity() * 0.2;
        let m = ObservationModel::isotropic(0.3).unwrap();
        let y = Point3::new(1.0, -2.0, 0.5);
        let (out, _) = kalman_correct(&s, &cov, &y, &m).unwrap();
        let p = position_of(&out);
        for i in 0..3 {
            let lo = y[i].min(0.0);
            let hi = y[i].max(0.0);
            assert!(p[i] >= lo && p[i] <= hi);
        }
    }

    #[test]
    fn singular_innovation_detected() {
        let s = StateCsm::zeros();
        let mut cov = Covariance9::identity();
        cov[(0, 0)] = -1.0;
        let m = ObservationModel {
            h: position_selector(),
            r: Matrix3::identity(),
        };
        let r = kalman_correct(&s, &cov, &Point3::origin(), &m);
        assert!(matches!(r, Err(Error::SingularInnovation)));
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(CsmParams::isotropic(0.0, 5.0, 0.1).is_err());
        assert!(CsmParams::isotropic(5.0, -1.0, 0.1).is_err());
        assert!(CsmParams::isotropic(5.0, 5.0, 0.0).is_err());
        assert!(ObservationModel::isotropic(0.0).is_err());
    }

    fn random_psd(entries: &[f64]) -> Covariance9 {
        let a = Covariance9::from_iterator(entries.iter().copied());
        a * a.transpose() * 0.1
    }

    proptest! {
        #[test]
        fn process_noise_symmetric_psd(
            alpha in 0.05f64..20.0,
            dt in 0.0005f64..2.0,
            a_max in 0.01f64..50.0,
            frac in -1.0f64..1.0,
        ) {
            let p = CsmParams::isotropic(alpha, a_max, dt).unwrap();
            let q = csm_process_noise(&p, &MeanAcceleration([frac * a_max; 3]));
            prop_assert_eq!(q, q.transpose());
            let scale = q.abs().max().max(1e-300);
            prop_assert!(min_eig(&q) >= -1e-9 * scale.max(1.0));
        }

        #[test]
        fn predict_preserves_covariance_invariants(
            entries in proptest::collection::vec(-2.0f64..2.0, 81),
            alpha in 0.1f64..10.0,
            dt in 0.001f64..1.0,
        ) {
            let p = CsmParams::isotropic(alpha, 3.0, dt).unwrap();
            let cov = random_psd(&entries);
            let (_, out) = predict_csm(&StateCsm::zeros(), &cov, &p, &MeanAcceleration([0.5, -1.0, 0.0]));
            prop_assert!((out - out.transpose()).abs().max() <= 1e-9);
            prop_assert!(min_eig(&out) >= -1e-9 * out.abs().max().max(1.0));
        }

        #[test]
        fn correction_never_increases_position_trace(
            entries in proptest::collection::vec(-2.0f64..2.0, 81),
            y in proptest::collection::vec(-10.0f64..10.0, 3),
            r in 0.001f64..5.0,
        ) {
            let cov = random_psd(&entries) + Covariance9::identity() * 1e-6;
            let m = ObservationModel::isotropic(r).unwrap();
            let (_, out) = kalman_correct(&StateCsm::zeros(), &cov, &Point3::new(y[0], y[1], y[2]), &m).unwrap();
            let h = position_selector();
            let before = (h * cov * h.transpose()).trace();
            let after = (h * out * h.transpose()).trace();
            prop_assert!(after <= before + 1e-12 * before.max(1.0));
        }

        #[test]
        fn csm_reduces_to_cv_for_slow_maneuvers(
            s in proptest::collection::vec(-10.0f64..10.0, 6),
            dt in 0.001f64..0.5,
        ) {
            let alpha = 1e-4 / dt;
            let cv = StateCv::from_column_slice(&s);
            let p = CsmParams::isotropic(alpha, 5.0, dt).unwrap();
            let (out, _) = predict_csm(&csm_from_cv(&cv), &Covariance9::zeros(), &p, &MeanAcceleration::default());
            let expected = predict_cv(&cv, dt);
            prop_assert!((cv_from_csm(&out) - expected).abs().max() <= 1e-6);
        }
    }
}
