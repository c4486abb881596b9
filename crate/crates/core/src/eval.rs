//! Trajectory quality: per-frame matching of tracks to ground truth and the
//! integrity, continuity and precision metrics.

use std::collections::HashMap;

use nalgebra::Point3;
use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manager::{TrackSet, Trajectory};
use crate::sim::{GroundTruth, ObjectTruth};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Threshold distance; pairs farther apart never match.
    pub d0: f64,
    /// Inclusive frame window; ground-truth instants outside it are ignored.
    pub window: Option<(u32, u32)>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { d0: 1.5, window: None }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.d0 > 0.0 && self.d0.is_finite()) {
            return Err(Error::InvalidConfig("d0 must be > 0".into()));
        }
        if let Some((a, b)) = self.window {
            if a > b {
                return Err(Error::InvalidConfig(format!("empty frame window {a}..{b}")));
            }
        }
        Ok(())
    }

    fn in_window(&self, f: u32) -> bool {
        self.window.is_none_or(|(a, b)| (a..=b).contains(&f))
    }
}

/// Matching series of one ground-truth object.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchSeries {
    pub gt_id: u64,
    pub frames: Vec<u32>,
    /// Matched track id per frame, `None` when unmatched.
    pub matches: Vec<Option<u64>>,
    /// Discrepancy at matched instants.
    pub distances: Vec<Option<f64>>,
}

/// `|p − q|` when the track exists at `frame`, else `d0`.
pub fn discrepancy(gt: &ObjectTruth, track: &Trajectory, frame: u32, d0: f64) -> f64 {
    match (gt.at(frame), track.position_at(frame)) {
        (Some(i), Some(q)) => (gt.positions[i] - q).norm(),
        _ => d0,
    }
}

// cost scale for the integer assignment
const SCALE: f64 = 1e6;

/// Minimum-cost assignment over gated pairs that first maximizes the number of
/// matches. `pairs` holds `(row, col, cost)`; returns matched `(row, col)`.
pub fn gated_assignment(rows: usize, cols: usize, pairs: &[(usize, usize, f64)]) -> Vec<(usize, usize)> {
    if pairs.is_empty() {
        return Vec::new();
    }
    let max_cost = pairs.iter().map(|p| (p.2 * SCALE).round() as i64).max().unwrap_or(0);
    let big = (max_cost + 1) * (rows.min(cols) as i64 + 1);
    let transpose = rows > cols;
    let (r, c) = if transpose { (cols, rows) } else { (rows, cols) };
    let mut w = Matrix::new(r, c, 0i64);
    for &(i, j, d) in pairs {
        let (a, b) = if transpose { (j, i) } else { (i, j) };
        w[(a, b)] = big - (d * SCALE).round() as i64;
    }
    let (_, assign) = kuhn_munkres(&w);
    assign
        .into_iter()
        .enumerate()
        .filter(|&(a, b)| w[(a, b)] > 0)
        .map(|(a, b)| if transpose { (b, a) } else { (a, b) })
        .collect()
}

// Splits the gated bipartite graph into connected components.
fn components(rows: usize, pairs: &[(usize, usize, f64)]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..rows).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut first_row_of_col: HashMap<usize, usize> = HashMap::new();
    for &(i, j, _) in pairs {
        if let Some(&k) = first_row_of_col.get(&j) {
            let (a, b) = (find(&mut parent, i), find(&mut parent, k));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        } else {
            first_row_of_col.insert(j, i);
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for &(i, _, _) in pairs {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups
        .into_values()
        .map(|mut g| {
            g.sort_unstable();
            g.dedup();
            g
        })
        .collect();
    out.sort_unstable();
    out
}

/// Per-frame matching: last frame's pairs are kept while still within `d0`,
/// the rest is an optimal gated one-to-one assignment.
pub fn match_tracks(gt: &GroundTruth, tracks: &TrackSet, cfg: &EvalConfig) -> Result<Vec<MatchSeries>> {
    cfg.validate()?;
    let mut series: Vec<MatchSeries> = gt
        .objects
        .iter()
        .map(|o| MatchSeries {
            gt_id: o.id,
            frames: Vec::new(),
            matches: Vec::new(),
            distances: Vec::new(),
        })
        .collect();
    let frames: Vec<u32> = gt.frames().into_iter().filter(|f| cfg.in_window(*f)).collect();
    let mut previous: HashMap<usize, usize> = HashMap::new();
    for &f in &frames {
        let live_gt: Vec<(usize, Point3<f64>)> = gt
            .objects
            .iter()
            .enumerate()
            .filter_map(|(i, o)| o.at(f).map(|k| (i, o.positions[k])))
            .collect();
        let live_tr: Vec<(usize, Point3<f64>)> = tracks
            .trajectories
            .iter()
            .enumerate()
            .filter_map(|(j, t)| t.position_at(f).map(|q| (j, q)))
            .collect();
        let tr_pos: HashMap<usize, Point3<f64>> = live_tr.iter().copied().collect();

        let mut current: HashMap<usize, usize> = HashMap::new();
        let mut used_tracks = std::collections::HashSet::new();
        for &(i, p) in &live_gt {
            if let Some(&j) = previous.get(&i) {
                if let Some(q) = tr_pos.get(&j) {
                    if (p - q).norm() <= cfg.d0 {
                        current.insert(i, j);
                        used_tracks.insert(j);
                    }
                }
            }
        }
        let open_gt: Vec<(usize, Point3<f64>)> =
            live_gt.iter().copied().filter(|(i, _)| !current.contains_key(i)).collect();
        let open_tr: Vec<(usize, Point3<f64>)> =
            live_tr.iter().copied().filter(|(j, _)| !used_tracks.contains(j)).collect();
        let mut pairs = Vec::new();
        for (a, (_, p)) in open_gt.iter().enumerate() {
            for (b, (_, q)) in open_tr.iter().enumerate() {
                let d = (p - q).norm();
                if d <= cfg.d0 {
                    pairs.push((a, b, d));
                }
            }
        }
        for comp in components(open_gt.len(), &pairs) {
            let mut cols: Vec<usize> = pairs.iter().filter(|p| comp.binary_search(&p.0).is_ok()).map(|p| p.1).collect();
            cols.sort_unstable();
            cols.dedup();
            let local: Vec<(usize, usize, f64)> = pairs
                .iter()
                .filter_map(|&(a, b, d)| {
                    let r = comp.binary_search(&a).ok()?;
                    let c = cols.binary_search(&b).ok()?;
                    Some((r, c, d))
                })
                .collect();
            for (r, c) in gated_assignment(comp.len(), cols.len(), &local) {
                current.insert(open_gt[comp[r]].0, open_tr[cols[c]].0);
            }
        }
        for &(i, p) in &live_gt {
            let s = &mut series[i];
            s.frames.push(f);
            match current.get(&i) {
                Some(&j) => {
                    s.matches.push(Some(tracks.trajectories[j].id));
                    s.distances.push(Some((p - tr_pos[&j]).norm()));
                }
                None => {
                    s.matches.push(None);
                    s.distances.push(None);
                }
            }
        }
        previous = current;
    }
    Ok(series)
}

fn instants(ms: &[MatchSeries]) -> usize {
    ms.iter().map(|s| s.frames.len()).sum()
}

pub fn matched_instants(ms: &[MatchSeries]) -> usize {
    ms.iter().map(|s| s.matches.iter().filter(|m| m.is_some()).count()).sum()
}

/// Identity switches of one series: changes between consecutive matched ids,
/// unmatched instants skipped.
pub fn id_switches(s: &MatchSeries) -> usize {
    let ids: Vec<u64> = s.matches.iter().flatten().copied().collect();
    ids.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Fraction of ground-truth instants with a match; 0 when there are none.
pub fn integrity(ms: &[MatchSeries]) -> f64 {
    let n = instants(ms);
    if n == 0 {
        return 0.0;
    }
    matched_instants(ms) as f64 / n as f64
}

/// `1 − switches / instants`; 1 when there are no instants.
pub fn continuity(ms: &[MatchSeries]) -> f64 {
    let n = instants(ms);
    if n == 0 {
        return 1.0;
    }
    let sw: usize = ms.iter().map(id_switches).sum();
    (1.0 - sw as f64 / n as f64).max(0.0)
}

/// Mean discrepancy over matched instants.
pub fn precision(ms: &[MatchSeries]) -> Result<f64> {
    let d: Vec<f64> = ms.iter().flat_map(|s| s.distances.iter().flatten().copied()).collect();
    if d.is_empty() {
        return Err(Error::NoMatches);
    }
    Ok(d.iter().sum::<f64>() / d.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub integrity: f64,
    pub continuity: f64,
    /// `None` when nothing matched.
    pub precision: Option<f64>,
    pub idsw_total: usize,
    pub matched_instants: usize,
    pub total_instants: usize,
}

pub fn metrics_of(ms: &[MatchSeries]) -> Metrics {
    Metrics {
        integrity: integrity(ms),
        continuity: continuity(ms),
        precision: precision(ms).ok(),
        idsw_total: ms.iter().map(id_switches).sum(),
        matched_instants: matched_instants(ms),
        total_instants: instants(ms),
    }
}

pub fn evaluate(gt: &GroundTruth, tracks: &TrackSet, cfg: &EvalConfig) -> Result<Metrics> {
    Ok(metrics_of(&match_tracks(gt, tracks, cfg)?))
}
