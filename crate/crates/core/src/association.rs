//! Temporal-spatial association between predicted states and per-view blobs.
//!
//! A predicted 3D state is projected into every view; each blob it overlaps
//! becomes a candidate on that view, and every per-view combination of
//! candidates is a candidate association whose credibility is
//! `prod_v exp(tau_v - 1)`. The Gaussian normalizing constant is omitted: it is
//! the same for every candidate, so argmax and normalized weights are
//! unaffected.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{Pixel, RasterPixel};

pub const PATCH_SIZE: usize = 16;

/// Grayscale appearance window.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

/// Row-major grayscale image.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl GrayImage {
    pub fn get(&self, u: i64, v: i64) -> f32 {
        if u < 0 || v < 0 || u as usize >= self.width || v as usize >= self.height {
            0.0
        } else {
            self.data[v as usize * self.width + u as usize]
        }
    }
}

impl Patch {
    /// `PATCH_SIZE`² window centred on `centroid`, zero outside the image.
    pub fn extract(image: &GrayImage, centroid: Pixel) -> Self {
        let c = centroid.nearest();
        let half = (PATCH_SIZE / 2) as i64;
        let mut data = Vec::with_capacity(PATCH_SIZE * PATCH_SIZE);
        for dv in 0..PATCH_SIZE as i64 {
            for du in 0..PATCH_SIZE as i64 {
                data.push(image.get(c[0] as i64 - half + du, c[1] as i64 - half + dv));
            }
        }
        Self {
            width: PATCH_SIZE,
            height: PATCH_SIZE,
            data,
        }
    }
}

/// Blobs grouped as `(frame, [(view_id, blobs)])`.
pub type MeasurementFrames = Vec<(u32, Vec<(u32, Vec<Measurement>)>)>;

/// A foreground blob on one view at one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub view_id: u32,
    pub frame: u32,
    /// Index within its (view, frame).
    pub id: usize,
    pub pixels: Vec<RasterPixel>,
    pub centroid: Pixel,
    pub patch: Option<Patch>,
}

impl Measurement {
    /// Builds a blob from its pixels; duplicates are removed and the centroid
    /// is their mean.
    pub fn from_pixels(view_id: u32, frame: u32, id: usize, mut pixels: Vec<RasterPixel>) -> Result<Self> {
        pixels.sort_by_key(|p| (p[1], p[0]));
        pixels.dedup();
        if pixels.is_empty() {
            return Err(Error::Format(format!("blob {id} on view {view_id} frame {frame} has no pixels")));
        }
        let centroid = centroid_of(&pixels);
        Ok(Self {
            view_id,
            frame,
            id,
            pixels,
            centroid,
            patch: None,
        })
    }
}

pub fn centroid_of(pixels: &[RasterPixel]) -> Pixel {
    let n = pixels.len() as f64;
    let (su, sv) = pixels
        .iter()
        .fold((0.0, 0.0), |(su, sv), p| (su + p[0] as f64, sv + p[1] as f64));
    Pixel::new(su / n, sv / n)
}

/// `|projected ∩ m.pixels| / |m.pixels|`.
pub fn overlap_ratio(projected: &[RasterPixel], m: &Measurement) -> f64 {
    if m.pixels.is_empty() {
        return 0.0;
    }
    let blob: std::collections::HashSet<RasterPixel> = m.pixels.iter().copied().collect();
    let mut seen = std::collections::HashSet::new();
    let hits = projected
        .iter()
        .filter(|p| blob.contains(*p) && seen.insert(**p))
        .count();
    hits as f64 / blob.len() as f64
}

/// Zero-mean normalized cross-correlation; 0 when either patch is flat.
pub fn ncc(a: &Patch, b: &Patch) -> Result<f64> {
    if a.width != b.width || a.height != b.height || a.data.len() != b.data.len() {
        return Err(Error::DimensionMismatch((a.width, a.height), (b.width, b.height)));
    }
    let n = a.data.len() as f64;
    if n == 0.0 {
        return Ok(0.0);
    }
    let ma = a.data.iter().map(|&x| x as f64).sum::<f64>() / n;
    let mb = b.data.iter().map(|&x| x as f64).sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.data.iter().zip(&b.data) {
        let dx = x as f64 - ma;
        let dy = y as f64 - mb;
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return Ok(0.0);
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Appearance factor between a blob and the blob this tracker held on the
/// same view at the previous frame. Without patches the factor is 1.
pub fn appearance(m: &Measurement, prev: Option<&Measurement>) -> f64 {
    match (m.patch.as_ref(), prev.and_then(|p| p.patch.as_ref())) {
        (Some(a), Some(b)) => ncc(a, b).unwrap_or(0.0).max(0.0),
        _ => 1.0,
    }
}

/// Per-view similarity `tau = eta * NCC`, clamped to `[0, 1]`.
pub fn view_similarity(projection: &[RasterPixel], m: &Measurement, prev: Option<&Measurement>) -> f64 {
    let eta = overlap_ratio(projection, m);
    if eta == 0.0 {
        return 0.0;
    }
    (eta * appearance(m, prev)).clamp(0.0, 1.0)
}

/// `prod_v exp(tau_v - 1)`.
pub fn credibility(taus: &[f64]) -> f64 {
    taus.iter().fold(1.0, |w, &t| w * (t - 1.0).exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateAssociation {
    /// One blob index per view, in view order.
    pub indices: Vec<usize>,
    pub credibility: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CandidateGroup {
    pub candidates: Vec<CandidateAssociation>,
}

impl CandidateGroup {
    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }
}

/// Highest-credibility candidate; ties go to the lexicographically smallest
/// index tuple.
pub fn best_candidate(g: &CandidateGroup) -> Option<&CandidateAssociation> {
    let mut best: Option<&CandidateAssociation> = None;
    for c in &g.candidates {
        best = match best {
            None => Some(c),
            Some(b) if c.credibility > b.credibility => Some(c),
            Some(b) if c.credibility == b.credibility && c.indices < b.indices => Some(c),
            keep => keep,
        };
    }
    best
}

/// Blobs of one view at one frame with a pixel → blob lookup.
#[derive(Debug, Clone)]
pub struct ViewFrame {
    pub view_id: u32,
    pub blobs: Vec<Measurement>,
    width: usize,
    height: usize,
    // blob index + 1 per pixel, 0 = background, SHARED = see `shared`
    labels: Vec<u32>,
    shared: HashMap<usize, Vec<u32>>,
}

const SHARED: u32 = u32::MAX;

impl ViewFrame {
    pub fn new(view_id: u32, width: u32, height: u32, blobs: Vec<Measurement>) -> Self {
        let (width, height) = (width as usize, height as usize);
        let mut labels = vec![0u32; width * height];
        let mut shared: HashMap<usize, Vec<u32>> = HashMap::new();
        for (k, b) in blobs.iter().enumerate() {
            for p in &b.pixels {
                if p[0] < 0 || p[1] < 0 || p[0] as usize >= width || p[1] as usize >= height {
                    continue;
                }
                let at = p[1] as usize * width + p[0] as usize;
                match labels[at] {
                    0 => labels[at] = k as u32 + 1,
                    SHARED => shared.entry(at).or_default().push(k as u32),
                    prev => {
                        labels[at] = SHARED;
                        shared.insert(at, vec![prev - 1, k as u32]);
                    }
                }
            }
        }
        Self {
            view_id,
            blobs,
            width,
            height,
            labels,
            shared,
        }
    }

    /// Overlap ratio with every touched blob, ascending by blob index.
    pub fn overlaps(&self, projected: &[RasterPixel]) -> Vec<(usize, f64)> {
        let mut counts: Vec<(usize, usize)> = Vec::new();
        let mut bump = |k: usize| match counts.iter_mut().find(|(b, _)| *b == k) {
            Some((_, c)) => *c += 1,
            None => counts.push((k, 1)),
        };
        for p in projected {
            if p[0] < 0 || p[1] < 0 || p[0] as usize >= self.width || p[1] as usize >= self.height {
                continue;
            }
            let at = p[1] as usize * self.width + p[0] as usize;
            match self.labels[at] {
                0 => {}
                SHARED => {
                    for &k in &self.shared[&at] {
                        bump(k as usize);
                    }
                }
                l => bump(l as usize - 1),
            }
        }
        counts.sort_unstable_by_key(|(k, _)| *k);
        counts
            .into_iter()
            .map(|(k, c)| (k, c as f64 / self.blobs[k].pixels.len() as f64))
            .collect()
    }

    /// `(blob, tau)` for every overlapped blob, ascending by blob index.
    pub fn similarities(&self, projected: &[RasterPixel], prev: Option<&Measurement>) -> Vec<(usize, f64)> {
        self.overlaps(projected)
            .into_iter()
            .map(|(k, eta)| (k, (eta * appearance(&self.blobs[k], prev)).clamp(0.0, 1.0)))
            .collect()
    }
}

/// All views of one frame.
#[derive(Debug, Clone)]
pub struct FrameData {
    pub frame: u32,
    pub views: Vec<ViewFrame>,
}

impl FrameData {
    pub fn blob_count(&self) -> usize {
        self.views.iter().map(|v| v.blobs.len()).sum()
    }
}

/// Exhaustive candidate group: the Cartesian product over views of every
/// overlapped blob (indices ascending within a view, so enumeration order is
/// lexicographic). Empty when any view has no overlap.
pub fn candidate_groups(
    projections: &[Vec<RasterPixel>],
    frame: &FrameData,
    prev: &[Option<&Measurement>],
) -> CandidateGroup {
    let per_view: Vec<Vec<(usize, f64)>> = frame
        .views
        .iter()
        .zip(projections)
        .enumerate()
        .map(|(v, (view, proj))| view.similarities(proj, prev.get(v).copied().flatten()))
        .collect();
    if per_view.len() != frame.views.len() || per_view.iter().any(|v| v.is_empty()) {
        return CandidateGroup::default();
    }
    let mut candidates = Vec::new();
    let mut cursor = vec![0usize; per_view.len()];
    let mut taus = vec![0.0; per_view.len()];
    loop {
        let indices: Vec<usize> = cursor.iter().zip(&per_view).map(|(&c, v)| v[c].0).collect();
        for (t, (&c, v)) in taus.iter_mut().zip(cursor.iter().zip(&per_view)) {
            *t = v[c].1;
        }
        candidates.push(CandidateAssociation {
            indices,
            credibility: credibility(&taus),
        });
        // odometer increment, last view fastest
        let mut axis = per_view.len();
        loop {
            if axis == 0 {
                return CandidateGroup { candidates };
            }
            axis -= 1;
            cursor[axis] += 1;
            if cursor[axis] < per_view[axis].len() {
                break;
            }
            cursor[axis] = 0;
        }
    }
}

/// Weight of the best candidate without materializing the group. Credibility
/// factorizes over views, so the maximum is the product of per-view maxima.
pub fn best_credibility(
    projections: &[Vec<RasterPixel>],
    frame: &FrameData,
    prev: &[Option<&Measurement>],
) -> f64 {
    let mut w = 1.0;
    for (v, (view, proj)) in frame.views.iter().zip(projections).enumerate() {
        let best = view
            .similarities(proj, prev.get(v).copied().flatten())
            .into_iter()
            .map(|(_, t)| t)
            .fold(f64::NEG_INFINITY, f64::max);
        if best == f64::NEG_INFINITY {
            return 0.0;
        }
        w *= (best - 1.0).exp();
    }
    w
}
