//! Pinhole cameras, ball footprints, triangulation and epipolar gating.
//!
//! Pixel coordinates follow the raster convention: pixel `[u, v]` is the unit
//! square centred on `(u, v)`, `u` runs along image columns and `v` along rows.

use nalgebra::{DMatrix, Matrix3, Matrix3x4, Point3, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer raster coordinate `[u, v]`.
pub type RasterPixel = [i32; 2];

/// Continuous image coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
}

impl Pixel {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    /// The raster pixel whose square contains this coordinate.
    pub fn nearest(&self) -> RasterPixel {
        [self.u.round() as i32, self.v.round() as i32]
    }

    pub fn distance(&self, other: &Pixel) -> f64 {
        ((self.u - other.u).powi(2) + (self.v - other.v).powi(2)).sqrt()
    }
}

/// One calibrated view.
///
/// The projection matrix is stored as given and also in a normalized form
/// whose left 3×3 block has a unit-norm third row and positive determinant, so
/// the homogeneous third coordinate of a projected point is its metric depth.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    view_id: u32,
    projection: Matrix3x4<f64>,
    normalized: Matrix3x4<f64>,
    width: u32,
    height: u32,
    focal_scale: f64,
}

impl CameraModel {
    pub fn new(view_id: u32, projection: Matrix3x4<f64>, width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidCamera(format!(
                "view {view_id}: image size {width}x{height}"
            )));
        }
        if projection.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidCamera(format!("view {view_id}: non-finite projection")));
        }
        let svd = projection.svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smax <= 0.0 || smin / smax < 1e-12 {
            return Err(Error::InvalidCamera(format!("view {view_id}: projection is not rank 3")));
        }
        let m: Matrix3<f64> = projection.fixed_view::<3, 3>(0, 0).into_owned();
        let det = m.determinant();
        let row3 = m.row(2).norm();
        if row3 <= 0.0 || det == 0.0 {
            return Err(Error::InvalidCamera(format!(
                "view {view_id}: left 3x3 block is singular"
            )));
        }
        let scale = det.signum() * row3;
        let normalized = projection / scale;
        let focal_scale = (det / scale.powi(3)).abs().sqrt();
        Ok(Self {
            view_id,
            projection,
            normalized,
            width,
            height,
            focal_scale,
        })
    }

    /// Builds `K [R | -R c]` for a camera at `position` looking at `target`.
    /// Image `v` grows in the direction opposite to `up`.
    pub fn look_at(
        view_id: u32,
        position: Point3<f64>,
        target: Point3<f64>,
        up: Vector3<f64>,
        focal: f64,
        width: u32,
        height: u32,
    ) -> Result<Self> {
        let forward = (target - position).normalize();
        let right = forward.cross(&up);
        if right.norm() < 1e-12 {
            return Err(Error::InvalidCamera("up vector is parallel to viewing direction".into()));
        }
        let right = right.normalize();
        let down = forward.cross(&right);
        let rot = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        let k = Matrix3::new(
            focal,
            0.0,
            (width as f64 - 1.0) / 2.0,
            0.0,
            focal,
            (height as f64 - 1.0) / 2.0,
            0.0,
            0.0,
            1.0,
        );
        let t = -(rot * position.coords);
        let mut rt = Matrix3x4::zeros();
        rt.fixed_view_mut::<3, 3>(0, 0).copy_from(&rot);
        rt.set_column(3, &t);
        Self::new(view_id, k * rt, width, height)
    }

    pub fn view_id(&self) -> u32 {
        self.view_id
    }

    pub fn projection(&self) -> &Matrix3x4<f64> {
        &self.projection
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Pixels per world unit at unit depth.
    pub fn focal_scale(&self) -> f64 {
        self.focal_scale
    }

    /// Metric depth of `p` along the optical axis.
    pub fn depth(&self, p: &Point3<f64>) -> f64 {
        (self.normalized.row(2) * p.to_homogeneous())[0]
    }

    pub fn contains(&self, px: RasterPixel) -> bool {
        px[0] >= 0 && px[1] >= 0 && (px[0] as u32) < self.width && (px[1] as u32) < self.height
    }

    /// World position of the optical centre.
    pub fn center(&self) -> Point3<f64> {
        let m: Matrix3<f64> = self.normalized.fixed_view::<3, 3>(0, 0).into_owned();
        let p4: Vector3<f64> = self.normalized.column(3).into_owned();
        // `new` rejects singular left blocks
        let inv = m.try_inverse().expect("left 3x3 block is invertible");
        Point3::from(-(inv * p4))
    }
}

/// Projects a world point to pixel coordinates.
pub fn project(camera: &CameraModel, p: &Point3<f64>) -> Result<Pixel> {
    let h = camera.normalized * p.to_homogeneous();
    if h[2] <= 0.0 {
        return Err(Error::PointBehindCamera { depth: h[2] });
    }
    Ok(Pixel::new(h[0] / h[2], h[1] / h[2]))
}

/// Raster pixels whose centres lie inside the disc, clipped to the image.
/// The pixel nearest the centre is always included when it is in bounds.
pub fn raster_disc(center: Pixel, radius_px: f64, width: u32, height: u32) -> Vec<RasterPixel> {
    let mut out = Vec::new();
    let r = radius_px.max(0.0);
    let r2 = r * r;
    let u0 = ((center.u - r).floor() as i64).max(0);
    let u1 = ((center.u + r).ceil() as i64).min(width as i64 - 1);
    let v0 = ((center.v - r).floor() as i64).max(0);
    let v1 = ((center.v + r).ceil() as i64).min(height as i64 - 1);
    let nearest = center.nearest();
    let nearest_in = nearest[0] >= 0
        && nearest[1] >= 0
        && (nearest[0] as i64) < width as i64
        && (nearest[1] as i64) < height as i64;
    let mut has_nearest = false;
    for v in v0..=v1 {
        for u in u0..=u1 {
            let du = u as f64 - center.u;
            let dv = v as f64 - center.v;
            let px = [u as i32, v as i32];
            if du * du + dv * dv <= r2 {
                has_nearest |= px == nearest;
                out.push(px);
            }
        }
    }
    if nearest_in && !has_nearest {
        out.push(nearest);
        out.sort_by_key(|p| (p[1], p[0]));
    }
    out
}

/// Footprint of a ball of `radius` world units, approximated as a filled disc
/// of radius `focal_scale * radius / depth` around the projected centre.
pub fn project_ball(camera: &CameraModel, center: &Point3<f64>, radius: f64) -> Result<Vec<RasterPixel>> {
    let px = project(camera, center)?;
    let depth = camera.depth(center);
    let r_px = camera.focal_scale * radius.max(0.0) / depth;
    Ok(raster_disc(px, r_px, camera.width, camera.height))
}

/// Disc radius in pixels of a ball at `center`.
pub fn ball_radius_px(camera: &CameraModel, center: &Point3<f64>, radius: f64) -> Result<f64> {
    let depth = camera.depth(center);
    if depth <= 0.0 {
        return Err(Error::PointBehindCamera { depth });
    }
    Ok(camera.focal_scale * radius / depth)
}

/// Linear (DLT) triangulation from any number of views.
///
/// Returns the point and the RMS reprojection residual in pixels.
pub fn triangulate_views(views: &[(&CameraModel, Pixel)]) -> Result<(Point3<f64>, f64)> {
    if views.len() < 2 {
        return Err(Error::DegenerateRays { condition: 0.0 });
    }
    let mut a = DMatrix::<f64>::zeros(2 * views.len(), 4);
    for (i, (cam, px)) in views.iter().enumerate() {
        let p = &cam.normalized;
        let r0 = p.row(2) * px.u - p.row(0);
        let r1 = p.row(2) * px.v - p.row(1);
        // scaling by the direction part keeps large world coordinates from
        // dominating the algebraic error
        let scale = |r: &nalgebra::RowVector4<f64>| {
            let n = r.fixed_columns::<3>(0).norm();
            if n > 0.0 { n } else { r.norm() }
        };
        a.row_mut(2 * i).copy_from(&(r0 / scale(&r0)));
        a.row_mut(2 * i + 1).copy_from(&(r1 / scale(&r1)));
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let smax = svd.singular_values[order[0]];
    // rank must be at least 3 for a unique null direction
    let s_third = svd.singular_values[order[2]];
    let condition = if smax > 0.0 { s_third / smax } else { 0.0 };
    if condition < 1e-10 {
        return Err(Error::DegenerateRays { condition });
    }
    let null_idx = if order.len() > 3 { order[3] } else { order[order.len() - 1] };
    let x: Vector4<f64> = v_t.row(null_idx).transpose().fixed_rows::<4>(0).into_owned();
    if x[3].abs() < 1e-12 * x.norm() {
        return Err(Error::DegenerateRays { condition: x[3].abs() });
    }
    let point = Point3::new(x[0] / x[3], x[1] / x[3], x[2] / x[3]);
    let mut sq = 0.0;
    for (cam, px) in views {
        let proj = project(cam, &point)?;
        sq += proj.distance(px).powi(2);
    }
    Ok((point, (sq / views.len() as f64).sqrt()))
}

/// Two-view triangulation; see [`triangulate_views`].
pub fn triangulate(
    cam1: &CameraModel,
    px1: Pixel,
    cam2: &CameraModel,
    px2: Pixel,
) -> Result<(Point3<f64>, f64)> {
    triangulate_views(&[(cam1, px1), (cam2, px2)])
}

/// Fundamental matrix mapping view-1 pixels to epipolar lines in view 2.
pub fn fundamental_matrix(cam1: &CameraModel, cam2: &CameraModel) -> Result<Matrix3<f64>> {
    let c1 = cam1.center();
    let c2 = cam2.center();
    if (c1 - c2).norm() <= 1e-9 * (1.0 + c1.coords.norm()) {
        return Err(Error::DegenerateRig);
    }
    let p1 = &cam1.normalized;
    let p2 = &cam2.normalized;
    let e2 = p2 * c1.to_homogeneous();
    let ex = Matrix3::new(0.0, -e2[2], e2[1], e2[2], 0.0, -e2[0], -e2[1], e2[0], 0.0);
    let m1: Matrix3<f64> = p1.fixed_view::<3, 3>(0, 0).into_owned();
    let m2: Matrix3<f64> = p2.fixed_view::<3, 3>(0, 0).into_owned();
    let f = ex * m2 * m1.try_inverse().ok_or(Error::DegenerateRig)?;
    Ok(f / f.norm())
}

/// Mean of the two point-to-epipolar-line distances, in pixels.
pub fn epipolar_distance(
    cam1: &CameraModel,
    px1: Pixel,
    cam2: &CameraModel,
    px2: Pixel,
) -> Result<f64> {
    let f = fundamental_matrix(cam1, cam2)?;
    Ok(epipolar_distance_with(&f, px1, px2))
}

/// [`epipolar_distance`] with a precomputed fundamental matrix.
pub fn epipolar_distance_with(f: &Matrix3<f64>, px1: Pixel, px2: Pixel) -> f64 {
    let x1 = Vector3::new(px1.u, px1.v, 1.0);
    let x2 = Vector3::new(px2.u, px2.v, 1.0);
    let line2 = f * x1;
    let line1 = f.transpose() * x2;
    let d2 = line2.dot(&x2).abs() / (line2[0].hypot(line2[1])).max(f64::MIN_POSITIVE);
    let d1 = line1.dot(&x1).abs() / (line1[0].hypot(line1[1])).max(f64::MIN_POSITIVE);
    0.5 * (d1 + d2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn rig() -> (CameraModel, CameraModel) {
        let c1 = CameraModel::look_at(
            1,
            Point3::new(100.0, 0.0, 0.0),
            Point3::origin(),
            Vector3::z(),
            800.0,
            640,
            480,
        )
        .unwrap();
        let c2 = CameraModel::look_at(
            2,
            Point3::new(0.0, 100.0, 0.0),
            Point3::origin(),
            Vector3::z(),
            800.0,
            640,
            480,
        )
        .unwrap();
        (c1, c2)
    }

    fn canonical() -> CameraModel {
        CameraModel::new(0, Matrix3x4::identity(), 100, 100).unwrap()
    }

    #[test]
    fn canonical_projection() {
        let px = project(&canonical(), &Point3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(px, Pixel::new(0.0, 0.0));
    }

    #[test]
    fn optical_axis_hits_principal_point() {
        let (c1, _) = rig();
        for depth in [1.0, 10.0, 99.0, 150.0] {
            let px = project(&c1, &Point3::new(100.0 - depth, 0.0, 0.0)).unwrap();
            assert_abs_diff_eq!(px.u, 319.5, epsilon = 1e-9);
            assert_abs_diff_eq!(px.v, 239.5, epsilon = 1e-9);
        }
    }

    #[test]
    fn behind_camera_is_an_error() {
        let r = project(&canonical(), &Point3::new(0.0, 0.0, -1.0));
        assert!(matches!(r, Err(Error::PointBehindCamera { .. })));
        let r = project_ball(&canonical(), &Point3::new(0.0, 0.0, 0.0), 1.0);
        assert!(matches!(r, Err(Error::PointBehindCamera { .. })));
    }

    #[test]
    fn negated_projection_gives_same_pixels_and_depth() {
        let (c1, _) = rig();
        let neg = CameraModel::new(1, -c1.projection() * 3.0, 640, 480).unwrap();
        let p = Point3::new(3.0, -2.0, 5.0);
        let a = project(&c1, &p).unwrap();
        let b = project(&neg, &p).unwrap();
        assert_abs_diff_eq!(a.u, b.u, epsilon = 1e-9);
        assert_abs_diff_eq!(c1.depth(&p), neg.depth(&p), epsilon = 1e-9);
        assert_abs_diff_eq!(c1.focal_scale(), 800.0, epsilon = 1e-9);
        assert_abs_diff_eq!(neg.focal_scale(), 800.0, epsilon = 1e-9);
    }

    #[test]
    fn invalid_cameras_rejected() {
        assert!(CameraModel::new(0, Matrix3x4::identity(), 0, 10).is_err());
        assert!(CameraModel::new(0, Matrix3x4::zeros(), 10, 10).is_err());
    }

    #[test]
    fn camera_center_recovered() {
        let (c1, c2) = rig();
        assert_abs_diff_eq!((c1.center() - Point3::new(100.0, 0.0, 0.0)).norm(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!((c2.center() - Point3::new(0.0, 100.0, 0.0)).norm(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_radius_ball_is_nearest_pixel() {
        let (c1, _) = rig();
        let p = Point3::new(1.0, 2.3, -1.7);
        let pix = project_ball(&c1, &p, 0.0).unwrap();
        assert_eq!(pix, vec![project(&c1, &p).unwrap().nearest()]);
    }

    #[test]
    fn ball_outside_frame_is_empty() {
        let (c1, _) = rig();
        let pix = project_ball(&c1, &Point3::new(0.0, 500.0, 0.0), 0.5).unwrap();
        assert!(pix.is_empty());
    }

    #[test]
    fn ball_footprint_clipped_at_border() {
        let cam = canonical();
        // centre on the image corner: roughly a quarter disc remains
        let pix = raster_disc(Pixel::new(0.0, 0.0), 10.0, cam.width(), cam.height());
        assert!(pix.iter().all(|p| cam.contains(*p)));
        let full = raster_disc(Pixel::new(50.0, 50.0), 10.0, 100, 100).len();
        let frac = pix.len() as f64 / full as f64;
        assert!(frac > 0.25 && frac < 0.35, "{frac}");
    }

    // Exhaustive sphere-silhouette oracle: a pixel is covered when its
    // back-projected ray passes within `radius` of the sphere centre.
    fn sphere_silhouette_count(focal: f64, depth: f64, radius: f64) -> usize {
        let extent = (focal * radius / depth * 2.0).ceil() as i64 + 2;
        let mut n = 0;
        for v in -extent..=extent {
            for u in -extent..=extent {
                let ray = Vector3::new(u as f64 / focal, v as f64 / focal, 1.0).normalize();
                let c = Vector3::new(0.0, 0.0, depth);
                let along = c.dot(&ray);
                let dist2 = c.norm_squared() - along * along;
                if dist2 <= radius * radius {
                    n += 1;
                }
            }
        }
        n
    }

    #[test]
    fn ball_pixel_count_matches_silhouette_oracle() {
        for focal in [100.0, 200.0, 400.0] {
            let p = Matrix3x4::new(focal, 0.0, 0.0, 0.0, 0.0, focal, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0);
            // shift the principal point to the image centre
            let mut p = p;
            p[(0, 2)] = 500.0;
            p[(1, 2)] = 500.0;
            let cam = CameraModel::new(0, p, 1000, 1000).unwrap();
            let center = Point3::new(0.0, 0.0, 10.0);
            let r_px = ball_radius_px(&cam, &center, 0.5).unwrap();
            assert_abs_diff_eq!(r_px, 0.05 * focal, epsilon = 1e-9);
            assert!(r_px >= 5.0);
            let got = project_ball(&cam, &center, 0.5).unwrap().len() as f64;
            let area = std::f64::consts::PI * r_px * r_px;
            assert!((got - area).abs() <= 0.1 * area, "focal {focal}: {got} vs {area}");
            let oracle = sphere_silhouette_count(focal, 10.0, 0.5) as f64;
            assert!((got - oracle).abs() <= 0.1 * oracle, "focal {focal}: {got} vs oracle {oracle}");
        }
    }

    #[test]
    fn noiseless_round_trip() {
        let (c1, c2) = rig();
        let p = Point3::new(3.0, -4.5, 7.25);
        let (q, res) = triangulate(&c1, project(&c1, &p).unwrap(), &c2, project(&c2, &p).unwrap()).unwrap();
        assert_abs_diff_eq!((q - p).norm(), 0.0, epsilon = 1e-9);
        assert!(res < 1e-8);
    }

    #[test]
    fn identical_cameras_are_degenerate() {
        let (c1, _) = rig();
        let px = project(&c1, &Point3::new(1.0, 2.0, 3.0)).unwrap();
        let r = triangulate(&c1, px, &c1, px);
        assert!(matches!(r, Err(Error::DegenerateRays { .. })));
        assert!(matches!(epipolar_distance(&c1, px, &c1, px), Err(Error::DegenerateRig)));
    }

    #[test]
    fn noisy_triangulation_close_to_refined_optimum() {
        use rand::{Rng, SeedableRng};
        use rand_distr::StandardNormal;
        let (c1, c2) = rig();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let p = Point3::new(
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
            );
            let mut noisy = |c: &CameraModel| {
                let px = project(c, &p).unwrap();
                let du: f64 = rng.sample(StandardNormal);
                let dv: f64 = rng.sample(StandardNormal);
                Pixel::new(px.u + du, px.v + dv)
            };
            let (px1, px2) = (noisy(&c1), noisy(&c2));
            let (q, res) = triangulate(&c1, px1, &c2, px2).unwrap();
            assert!(res > 0.0);
            // grid-search refinement of geometric reprojection error around q
            let cost = |x: &Point3<f64>| {
                project(&c1, x).unwrap().distance(&px1).powi(2) + project(&c2, x).unwrap().distance(&px2).powi(2)
            };
            let mut best = q;
            let mut step = 0.05;
            for _ in 0..30 {
                let mut improved = false;
                for d in [
                    Vector3::x(),
                    -Vector3::x(),
                    Vector3::y(),
                    -Vector3::y(),
                    Vector3::z(),
                    -Vector3::z(),
                ] {
                    let cand = best + d * step;
                    if cost(&cand) < cost(&best) {
                        best = cand;
                        improved = true;
                    }
                }
                if !improved {
                    step *= 0.5;
                }
            }
            let dlt_err = (q - p).norm();
            let ref_err = (best - p).norm();
            assert!(dlt_err <= 3.0 * ref_err.max(1e-3), "{dlt_err} vs {ref_err}");
        }
    }

    #[test]
    fn epipolar_zero_for_consistent_pair_and_symmetric() {
        let (c1, c2) = rig();
        let p = Point3::new(-2.0, 5.0, 1.0);
        let px1 = project(&c1, &p).unwrap();
        let px2 = project(&c2, &p).unwrap();
        assert!(epipolar_distance(&c1, px1, &c2, px2).unwrap() <= 1e-9);
        let q = Pixel::new(px2.u + 3.0, px2.v - 7.0);
        let d12 = epipolar_distance(&c1, px1, &c2, q).unwrap();
        let d21 = epipolar_distance(&c2, q, &c1, px1).unwrap();
        assert!((d12 - d21).abs() < 1e-9);
    }

    // Epipolar line in view 2 built from the projections of two points on the
    // back-projected ray of px1, no fundamental matrix involved.
    fn line_distance_oracle(c1: &CameraModel, px1: Pixel, c2: &CameraModel, px2: Pixel) -> f64 {
        let center = c1.center();
        let m: Matrix3<f64> = c1.projection().fixed_view::<3, 3>(0, 0).into_owned();
        let dir = m.try_inverse().unwrap() * Vector3::new(px1.u, px1.v, 1.0);
        let sign = if c1.depth(&(center + dir)) > 0.0 { 1.0 } else { -1.0 };
        let a = project(c2, &(center + dir * sign * 20.0)).unwrap();
        let b = project(c2, &(center + dir * sign * 60.0)).unwrap();
        let (dx, dy) = (b.u - a.u, b.v - a.v);
        ((px2.u - a.u) * dy - (px2.v - a.v) * dx).abs() / dx.hypot(dy)
    }

    #[test]
    fn inconsistent_pair_stays_near_reprojection_optimum() {
        // far-off-origin point, view-row disagreement of ~2 px; the optimum
        // reprojects within ~1 px per view, a badly scaled DLT drifts by 5 px
        let t = Point3::new(15.0, 0.0, 0.0);
        let c1 = CameraModel::look_at(1, t + Vector3::x() * 150.0, t, Vector3::z(), 1200.0, 1024, 1024).unwrap();
        let c2 = CameraModel::look_at(2, t + Vector3::y() * 150.0, t, Vector3::z(), 1200.0, 1024, 1024).unwrap();
        let p = Point3::new(25.0, 8.0, 0.5);
        let a = project(&c1, &p).unwrap();
        let b = project(&c2, &p).unwrap();
        let (q, res) = triangulate(&c1, Pixel::new(a.u, a.v - 1.0), &c2, Pixel::new(b.u, b.v + 1.0)).unwrap();
        assert!((q - p).norm() < 0.05, "{}", (q - p).norm());
        assert!(res < 1.5, "{res}");
    }

    #[test]
    fn perpendicular_offset_matches_line_oracle() {
        let (c1, c2) = rig();
        let p = Point3::new(1.0, -3.0, 4.0);
        let px1 = project(&c1, &p).unwrap();
        let px2 = project(&c2, &p).unwrap();
        let f = fundamental_matrix(&c1, &c2).unwrap();
        let line = f * Vector3::new(px1.u, px1.v, 1.0);
        let n = Vector3::new(line[0], line[1], 0.0).normalize();
        let moved = Pixel::new(px2.u + 5.0 * n[0], px2.v + 5.0 * n[1]);
        let d = epipolar_distance(&c1, px1, &c2, moved).unwrap();
        let d2 = line_distance_oracle(&c1, px1, &c2, moved);
        assert_abs_diff_eq!(d2, 5.0, epsilon = 1e-6);
        let back = line_distance_oracle(&c2, moved, &c1, px1);
        assert_abs_diff_eq!(d, 0.5 * (d2 + back), epsilon = 1e-6);
    }
}
