//! File formats: camera calibration JSON, blob measurement JSON, ground-truth
//! CSV and track CSV.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{Matrix3x4, Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::association::{centroid_of, Measurement};
use crate::error::{Error, Result};
use crate::geometry::{CameraModel, Pixel, RasterPixel};
use crate::manager::{TrackSet, Trajectory};
use crate::motion::StateCsm;
use crate::sim::{GroundTruth, ObjectTruth};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraRecord {
    pub view_id: u32,
    /// Row-major 3×4 projection matrix.
    pub projection: Vec<f64>,
    pub width: u32,
    pub height: u32,
}

impl CameraRecord {
    pub fn from_camera(c: &CameraModel) -> Self {
        let p = c.projection();
        Self {
            view_id: c.view_id(),
            projection: (0..3).flat_map(|r| (0..4).map(move |k| p[(r, k)])).collect(),
            width: c.width(),
            height: c.height(),
        }
    }

    pub fn to_camera(&self) -> Result<CameraModel> {
        if self.projection.len() != 12 {
            return Err(Error::InvalidCamera(format!(
                "view {}: projection needs 12 numbers, got {}",
                self.view_id,
                self.projection.len()
            )));
        }
        CameraModel::new(
            self.view_id,
            Matrix3x4::from_row_slice(&self.projection),
            self.width,
            self.height,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobRecord {
    pub id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centroid: Option<[f64; 2]>,
    pub pixels: Vec<RasterPixel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewRecord {
    pub view_id: u32,
    pub blobs: Vec<BlobRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame: u32,
    pub views: Vec<ViewRecord>,
}

pub use crate::association::MeasurementFrames;

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn cameras_from_json(r: impl Read) -> Result<Vec<CameraModel>> {
    let recs: Vec<CameraRecord> = serde_json::from_reader(r)?;
    let cams = recs.iter().map(CameraRecord::to_camera).collect::<Result<Vec<_>>>()?;
    let mut ids: Vec<u32> = cams.iter().map(|c| c.view_id()).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidCamera("duplicate view id".into()));
    }
    Ok(cams)
}

pub fn read_calibration(path: &Path) -> Result<Vec<CameraModel>> {
    cameras_from_json(open(path)?)
}

pub fn write_calibration(path: &Path, cameras: &[CameraModel]) -> Result<()> {
    let recs: Vec<CameraRecord> = cameras.iter().map(CameraRecord::from_camera).collect();
    write_json(path, &recs)
}

/// Converts blob records; a given centroid must lie within 0.5 px of the
/// pixel mean, a missing one is computed.
pub fn measurements_from_records(records: Vec<FrameRecord>) -> Result<MeasurementFrames> {
    records
        .into_iter()
        .map(|fr| {
            let views = fr
                .views
                .into_iter()
                .map(|vr| {
                    let blobs = vr
                        .blobs
                        .into_iter()
                        .map(|b| {
                            let mut m = Measurement::from_pixels(vr.view_id, fr.frame, b.id, b.pixels)?;
                            if let Some([u, v]) = b.centroid {
                                let c = Pixel::new(u, v);
                                let mean = centroid_of(&m.pixels);
                                if !(c.distance(&mean) <= 0.5) {
                                    return Err(Error::Format(format!(
                                        "blob {} on view {} frame {}: centroid ({u}, {v}) is {:.3} px from the pixel mean",
                                        b.id,
                                        vr.view_id,
                                        fr.frame,
                                        c.distance(&mean)
                                    )));
                                }
                                m.centroid = c;
                            }
                            Ok(m)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok((vr.view_id, blobs))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((fr.frame, views))
        })
        .collect()
}

pub fn records_from_measurements(frames: &MeasurementFrames) -> Vec<FrameRecord> {
    frames
        .iter()
        .map(|(f, views)| FrameRecord {
            frame: *f,
            views: views
                .iter()
                .map(|(view_id, blobs)| ViewRecord {
                    view_id: *view_id,
                    blobs: blobs
                        .iter()
                        .map(|m| BlobRecord {
                            id: m.id,
                            centroid: Some([m.centroid.u, m.centroid.v]),
                            pixels: m.pixels.clone(),
                        })
                        .collect(),
                })
                .collect(),
        })
        .collect()
}

pub fn read_measurements(path: &Path) -> Result<MeasurementFrames> {
    let recs: Vec<FrameRecord> = serde_json::from_reader(open(path)?)?;
    measurements_from_records(recs)
}

pub fn write_measurements(path: &Path, frames: &MeasurementFrames) -> Result<()> {
    // compact: pixel lists dominate the size
    let mut w = create(path)?;
    serde_json::to_writer(&mut w, &records_from_measurements(frames))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TruthRow {
    id: u64,
    frame: u32,
    x: f64,
    y: f64,
    z: f64,
    vx: f64,
    vy: f64,
    vz: f64,
}

pub fn write_truth_to(w: impl Write, gt: &GroundTruth) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for o in &gt.objects {
        for ((f, p), v) in o.frames.iter().zip(&o.positions).zip(&o.velocities) {
            wr.serialize(TruthRow {
                id: o.id,
                frame: *f,
                x: p.x,
                y: p.y,
                z: p.z,
                vx: v.x,
                vy: v.y,
                vz: v.z,
            })?;
        }
    }
    wr.flush()?;
    Ok(())
}

pub fn write_truth(path: &Path, gt: &GroundTruth) -> Result<()> {
    write_truth_to(create(path)?, gt)
}

pub fn truth_from_csv(r: impl Read) -> Result<GroundTruth> {
    let mut rows: Vec<TruthRow> = csv::Reader::from_reader(r)
        .deserialize()
        .collect::<std::result::Result<_, _>>()?;
    rows.sort_by_key(|r| (r.id, r.frame));
    let mut objects: Vec<ObjectTruth> = Vec::new();
    for r in rows {
        if objects.last().is_none_or(|o| o.id != r.id) {
            objects.push(ObjectTruth {
                id: r.id,
                frames: Vec::new(),
                positions: Vec::new(),
                velocities: Vec::new(),
            });
        }
        let o = objects.last_mut().expect("pushed above");
        if o.frames.last() == Some(&r.frame) {
            return Err(Error::Format(format!("object {} has frame {} twice", r.id, r.frame)));
        }
        o.frames.push(r.frame);
        o.positions.push(Point3::new(r.x, r.y, r.z));
        o.velocities.push(Vector3::new(r.vx, r.vy, r.vz));
    }
    Ok(GroundTruth { objects })
}

pub fn read_truth(path: &Path) -> Result<GroundTruth> {
    truth_from_csv(open(path)?)
}

const STATE_COLUMNS: [&str; 11] = ["id", "frame", "x", "y", "z", "vx", "vy", "vz", "ax", "ay", "az"];

/// Track CSV with one `view{k}_blob` column per view (at least two).
pub fn write_tracks_to(w: impl Write, ts: &TrackSet) -> Result<()> {
    let views = ts
        .trajectories
        .iter()
        .flat_map(|t| t.associations.iter().map(Vec::len))
        .max()
        .unwrap_or(0)
        .max(2);
    let mut wr = csv::Writer::from_writer(w);
    let mut header: Vec<String> = STATE_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((1..=views).map(|k| format!("view{k}_blob")));
    wr.write_record(&header)?;
    let mut order: Vec<&Trajectory> = ts.trajectories.iter().collect();
    order.sort_by_key(|t| t.id);
    for t in order {
        for (i, (f, s)) in t.frames.iter().zip(&t.states).enumerate() {
            let mut rec = vec![t.id.to_string(), f.to_string()];
            // x y z, vx vy vz, ax ay az
            for d in 0..3 {
                for axis in 0..3 {
                    rec.push(s[3 * axis + d].to_string());
                }
            }
            let assoc = t.associations.get(i);
            for v in 0..views {
                rec.push(
                    assoc
                        .and_then(|a| a.get(v).copied().flatten())
                        .map(|k| k.to_string())
                        .unwrap_or_default(),
                );
            }
            wr.write_record(&rec)?;
        }
    }
    wr.flush()?;
    Ok(())
}

pub fn write_tracks(path: &Path, ts: &TrackSet) -> Result<()> {
    write_tracks_to(create(path)?, ts)
}

pub fn tracks_from_csv(r: impl Read) -> Result<TrackSet> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format(format!("track CSV lacks column {name:?}")))
    };
    let idx: Vec<usize> = STATE_COLUMNS.iter().map(|c| col(c)).collect::<Result<_>>()?;
    let mut view_cols: Vec<(usize, usize)> = header
        .iter()
        .enumerate()
        .filter_map(|(i, h)| {
            let k: usize = h.strip_prefix("view")?.strip_suffix("_blob")?.parse().ok()?;
            Some((k, i))
        })
        .collect();
    view_cols.sort_unstable();
    let num = |s: &str, what: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Format(format!("bad {what} value {s:?}")))
    };
    let mut rows: Vec<(u64, u32, StateCsm, Vec<Option<usize>>)> = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let id: u64 = field(idx[0])
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("bad id {:?}", field(idx[0]))))?;
        let frame: u32 = field(idx[1])
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("bad frame {:?}", field(idx[1]))))?;
        let mut s = StateCsm::zeros();
        for d in 0..3 {
            for axis in 0..3 {
                let c = idx[2 + 3 * d + axis];
                s[3 * axis + d] = num(field(c), STATE_COLUMNS[2 + 3 * d + axis])?;
            }
        }
        if !s.iter().all(|x| x.is_finite()) {
            return Err(Error::Format(format!("track {id} frame {frame}: non-finite state")));
        }
        let assoc = view_cols
            .iter()
            .map(|&(_, i)| {
                let f = field(i).trim();
                if f.is_empty() {
                    Ok(None)
                } else {
                    f.parse()
                        .map(Some)
                        .map_err(|_| Error::Format(format!("bad blob id {f:?}")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((id, frame, s, assoc));
    }
    rows.sort_by_key(|r| (r.0, r.1));
    let mut trajectories: Vec<Trajectory> = Vec::new();
    for (id, frame, s, assoc) in rows {
        if trajectories.last().is_none_or(|t| t.id != id) {
            trajectories.push(Trajectory {
                id,
                frames: Vec::new(),
                states: Vec::new(),
                associations: Vec::new(),
            });
        }
        let t = trajectories.last_mut().expect("pushed above");
        if t.frames.last() == Some(&frame) {
            return Err(Error::Format(format!("track {id} has frame {frame} twice")));
        }
        t.frames.push(frame);
        t.states.push(s);
        t.associations.push(assoc);
    }
    Ok(TrackSet { trajectories })
}

pub fn read_tracks(path: &Path) -> Result<TrackSet> {
    tracks_from_csv(open(path)?)
}
