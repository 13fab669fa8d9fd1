//! Camera-position calibration: per-axis affine maps from raw image
//! coordinates to world meters, fitted by ordinary least squares.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ObstacleTrack, Point2, TrackSample};

/// `world = scale * raw + offset`, independently per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationModel {
    pub scale: Point2,
    pub offset: Point2,
}

impl Default for CalibrationModel {
    fn default() -> Self {
        Self {
            scale: Point2::new(1.0, 1.0),
            offset: Point2::ORIGIN,
        }
    }
}

impl CalibrationModel {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.scale.x, self.scale.y, self.offset.x, self.offset.y]
            .iter()
            .all(|v| v.is_finite())
            && self.scale.x != 0.0
            && self.scale.y != 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid calibration model {self:?}")))
        }
    }

    pub fn apply(&self, raw: Point2) -> Point2 {
        Point2::new(
            self.scale.x * raw.x + self.offset.x,
            self.scale.y * raw.y + self.offset.y,
        )
    }

    /// Maps every center of `track`; directions are re-derived from chords
    /// because an anisotropic scale changes them.
    pub fn apply_track(&self, track: &ObstacleTrack) -> Result<ObstacleTrack> {
        let pts: Vec<(f64, Point2)> = track
            .samples()
            .iter()
            .map(|s: &TrackSample| (s.t, self.apply(s.center)))
            .collect();
        ObstacleTrack::from_positions(&pts, track.width())
    }

    /// Root-mean-square world-frame residual over `pairs`.
    pub fn residual_rms(&self, pairs: &[(Point2, Point2)]) -> f64 {
        if pairs.is_empty() {
            return 0.0;
        }
        let ss: f64 = pairs
            .iter()
            .map(|&(raw, truth)| {
                let d = self.apply(raw) - truth;
                d.dot(d)
            })
            .sum();
        (ss / pairs.len() as f64).sqrt()
    }
}

fn fit_axis(raw: &[f64], truth: &[f64], axis: &str) -> Result<(f64, f64)> {
    let n = raw.len() as f64;
    let mx = raw.iter().sum::<f64>() / n;
    let my = truth.iter().sum::<f64>() / n;
    let sxx: f64 = raw.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = raw.iter().zip(truth).map(|(x, y)| (x - mx) * (y - my)).sum();
    let spread = raw.iter().fold(0.0f64, |m, x| m.max((x - mx).abs()));
    if !(sxx > 0.0) || spread <= 1e-12 * mx.abs().max(1.0) {
        return Err(Error::Input(format!("raw {axis} coordinates are constant")));
    }
    let scale = sxy / sxx;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::Input(format!("{axis} axis has no linear relation")));
    }
    Ok((scale, my - scale * mx))
}

/// Per-axis least-squares fit from `(raw, true)` pairs.
pub fn fit_calibration(pairs: &[(Point2, Point2)]) -> Result<CalibrationModel> {
    if pairs.len() < 2 {
        return Err(Error::Input(format!(
            "calibration needs at least 2 pairs, got {}",
            pairs.len()
        )));
    }
    if pairs.iter().any(|(r, t)| !r.is_finite() || !t.is_finite()) {
        return Err(Error::Input("calibration pairs must be finite".into()));
    }
    let col = |f: fn(&(Point2, Point2)) -> f64| pairs.iter().map(f).collect::<Vec<_>>();
    let (sx, ox) = fit_axis(&col(|p| p.0.x), &col(|p| p.1.x), "x")?;
    let (sy, oy) = fit_axis(&col(|p| p.0.y), &col(|p| p.1.y), "y")?;
    Ok(CalibrationModel {
        scale: Point2::new(sx, sy),
        offset: Point2::new(ox, oy),
    })
}
