use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fresnel_loc::blockage::RssiTrace;
use fresnel_loc::geometry::{ObstacleTrack, Point2, TrackSample};
use fresnel_loc::pipeline::Target;
use fresnel_loc::simulator::Node;
use serde::{Deserialize, Serialize};

const UNIFORM_TOLERANCE: f64 = 1e-6;

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))
}

fn require_headers(rdr: &mut csv::Reader<fs::File>, path: &Path, want: &[&str]) -> Result<Vec<String>> {
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if headers.len() < want.len() || headers.iter().zip(want).any(|(h, w)| h != w) {
        bail!(
            "{}: expected header {}, found {}",
            path.display(),
            want.join(","),
            headers.join(",")
        );
    }
    Ok(headers)
}

fn rows(rdr: &mut csv::Reader<fs::File>, path: &Path, width: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("{}: row {}", path.display(), i + 2))?;
        if rec.len() != width {
            bail!("{}: row {} has {} fields, expected {width}", path.display(), i + 2, rec.len());
        }
        let vals = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .with_context(|| format!("{}: row {}: bad number {f:?}", path.display(), i + 2))
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(vals);
    }
    Ok(out)
}

/// Reads `time_s,rssi_dbm`. Non-uniform timestamps are resampled at
/// `interval`, or at the median spacing when none is given.
pub fn read_trace(path: &Path, interval: Option<f64>) -> Result<RssiTrace> {
    let mut rdr = reader(path)?;
    require_headers(&mut rdr, path, &["time_s", "rssi_dbm"])?;
    let readings: Vec<(f64, f64)> = rows(&mut rdr, path, 2)?.into_iter().map(|r| (r[0], r[1])).collect();
    if readings.len() < 2 {
        bail!("{}: a trace needs at least two samples", path.display());
    }
    let mut gaps: Vec<f64> = readings.windows(2).map(|w| w[1].0 - w[0].0).collect();
    gaps.sort_by(f64::total_cmp);
    let median = gaps[gaps.len() / 2];
    let uniform = gaps[0] > 0.0 && (gaps[gaps.len() - 1] - gaps[0]) <= UNIFORM_TOLERANCE * median;
    let span = readings[readings.len() - 1].0 - readings[0].0;
    let mean_gap = span / (readings.len() - 1) as f64;
    let values = || readings.iter().map(|r| r.1).collect::<Vec<f64>>();
    let trace = match interval {
        None if uniform => RssiTrace::new(values(), mean_gap, readings[0].0),
        Some(dt) if uniform && (dt - median).abs() <= UNIFORM_TOLERANCE * median => {
            RssiTrace::new(values(), dt, readings[0].0)
        }
        Some(dt) => RssiTrace::from_timestamped(&readings, dt),
        None => RssiTrace::from_timestamped(&readings, median),
    };
    trace.with_context(|| format!("invalid trace {}", path.display()))
}

pub fn write_trace(path: &Path, trace: &RssiTrace) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["time_s", "rssi_dbm"])?;
    for (i, v) in trace.samples().iter().enumerate() {
        w.write_record([format!("{:.6}", trace.time_at(i)), format!("{v:.6}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `time_s,x_m,y_m[,nx,ny]`. Without direction columns the motion
/// direction is taken from chords between consecutive samples.
pub fn read_track(path: &Path, width: f64) -> Result<ObstacleTrack> {
    let mut rdr = reader(path)?;
    let headers = require_headers(&mut rdr, path, &["time_s", "x_m", "y_m"])?;
    let track = match headers.len() {
        3 => {
            let pts: Vec<(f64, Point2)> = rows(&mut rdr, path, 3)?
                .into_iter()
                .map(|r| (r[0], Point2::new(r[1], r[2])))
                .collect();
            ObstacleTrack::from_positions(&pts, width)
        }
        5 if headers[3] == "nx" && headers[4] == "ny" => {
            let samples = rows(&mut rdr, path, 5)?
                .into_iter()
                .enumerate()
                .map(|(i, r)| {
                    let direction = Point2::new(r[3], r[4]).normalized().with_context(|| {
                        format!("{}: row {} has a zero direction", path.display(), i + 2)
                    })?;
                    Ok(TrackSample {
                        t: r[0],
                        center: Point2::new(r[1], r[2]),
                        direction,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            ObstacleTrack::new(samples, width)
        }
        _ => bail!(
            "{}: expected header time_s,x_m,y_m or time_s,x_m,y_m,nx,ny",
            path.display()
        ),
    };
    track.with_context(|| format!("invalid track {}", path.display()))
}

pub fn write_track(path: &Path, track: &ObstacleTrack, directions: bool) -> Result<()> {
    let mut w = writer(path)?;
    if directions {
        w.write_record(["time_s", "x_m", "y_m", "nx", "ny"])?;
    } else {
        w.write_record(["time_s", "x_m", "y_m"])?;
    }
    for s in track.samples() {
        let mut rec = vec![
            format!("{:.6}", s.t),
            format!("{:.6}", s.center.x),
            format!("{:.6}", s.center.y),
        ];
        if directions {
            rec.push(format!("{:.9}", s.direction.x));
            rec.push(format!("{:.9}", s.direction.y));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `start_s,end_s`.
pub fn read_sections(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut rdr = reader(path)?;
    require_headers(&mut rdr, path, &["start_s", "end_s"])?;
    Ok(rows(&mut rdr, path, 2)?.into_iter().map(|r| (r[0], r[1])).collect())
}

pub fn write_sections(path: &Path, sections: &[(f64, f64)]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["start_s", "end_s"])?;
    for (s, e) in sections {
        w.write_record([format!("{s:.6}"), format!("{e:.6}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `raw_x,raw_y,true_x,true_y` calibration pairs.
pub fn read_pairs(path: &Path) -> Result<Vec<(Point2, Point2)>> {
    let mut rdr = reader(path)?;
    require_headers(&mut rdr, path, &["raw_x", "raw_y", "true_x", "true_y"])?;
    Ok(rows(&mut rdr, path, 4)?
        .into_iter()
        .map(|r| (Point2::new(r[0], r[1]), Point2::new(r[2], r[3])))
        .collect())
}

pub fn write_pairs(path: &Path, pairs: &[(Point2, Point2)]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["raw_x", "raw_y", "true_x", "true_y"])?;
    for (raw, truth) in pairs {
        w.write_record([raw.x, raw.y, truth.x, truth.y].map(|v| format!("{v:.6}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

pub fn write_toml<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &toml::to_string(value)?)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Index of a recorded (or simulated) data set. Paths are relative to the
/// manifest's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub lambda: f64,
    pub obstacle_width: f64,
    /// Resampling interval for non-uniform traces.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_interval: Option<f64>,
    pub anchors: Vec<Node>,
    pub targets: Vec<Target>,
    pub tracks: Vec<PathBuf>,
    /// When present, track coordinates are raw camera positions and these
    /// pairs calibrate them to world meters.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration_pairs: Option<PathBuf>,
    pub observations: Vec<ManifestObservation>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestObservation {
    pub anchor_id: String,
    pub tx_id: String,
    pub trace: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<PathBuf>,
}
