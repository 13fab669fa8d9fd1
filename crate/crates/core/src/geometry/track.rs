use serde::{Deserialize, Serialize};

use super::{Point2, Segment2};
use crate::error::{Error, Result};

/// One camera observation of the obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackSample {
    pub t: f64,
    pub center: Point2,
    /// Unit vector of motion.
    pub direction: Point2,
}

/// Time series of obstacle center positions and motion directions for a
/// thin board of fixed width, modelled as a segment parallel to its motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleTrack {
    samples: Vec<TrackSample>,
    width: f64,
}

impl ObstacleTrack {
    /// Builds a track from samples that carry explicit directions.
    pub fn new(samples: Vec<TrackSample>, width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::Input(format!("obstacle width must be positive, got {width}")));
        }
        if samples.len() < 2 {
            return Err(Error::Input("a track needs at least two samples".into()));
        }
        for (i, s) in samples.iter().enumerate() {
            if !(s.t.is_finite() && s.center.is_finite() && s.direction.is_finite()) {
                return Err(Error::Input(format!("track sample {i} is not finite")));
            }
            if (s.direction.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::Input(format!(
                    "track sample {i}: direction is not a unit vector (|n| = {})",
                    s.direction.norm()
                )));
            }
        }
        if let Some(i) = samples.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(Error::Input(format!(
                "track timestamps must be strictly increasing (sample {})",
                i + 1
            )));
        }
        Ok(Self { samples, width })
    }

    /// Builds a track from bare positions, taking each sample's direction from
    /// the forward chord to the next sample (the last one uses the backward
    /// chord). Stationary stretches inherit the previous direction.
    pub fn from_positions(points: &[(f64, Point2)], width: f64) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Input("a track needs at least two samples".into()));
        }
        let n = points.len();
        let chords: Vec<Option<Point2>> = (0..n)
            .map(|i| {
                let (a, b) = if i + 1 < n { (i, i + 1) } else { (i - 1, i) };
                (points[b].1 - points[a].1).normalized()
            })
            .collect();
        let first = chords.iter().flatten().next().copied().ok_or_else(|| {
            Error::Input("track never moves; motion direction is undefined".into())
        })?;
        let mut last = first;
        let samples = points
            .iter()
            .zip(chords)
            .map(|(&(t, center), chord)| {
                if let Some(c) = chord {
                    last = c;
                }
                TrackSample {
                    t,
                    center,
                    direction: last,
                }
            })
            .collect();
        Self::new(samples, width)
    }

    pub fn samples(&self) -> &[TrackSample] {
        &self.samples
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn start_time(&self) -> f64 {
        self.samples[0].t
    }

    pub fn end_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    pub fn covers(&self, t: f64) -> bool {
        t >= self.start_time() && t <= self.end_time()
    }

    /// Index `i` and fraction `f` such that `t` lies between samples `i` and `i+1`.
    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        if !self.covers(t) {
            return Err(Error::Range {
                t,
                start: self.start_time(),
                end: self.end_time(),
            });
        }
        let upper = self.samples.partition_point(|s| s.t <= t);
        let i = upper.saturating_sub(1).min(self.samples.len() - 2);
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        Ok((i, ((t - a.t) / (b.t - a.t)).clamp(0.0, 1.0)))
    }

    pub fn center_at(&self, t: f64) -> Result<Point2> {
        let (i, f) = self.locate(t)?;
        Ok(self.samples[i].center.lerp(self.samples[i + 1].center, f))
    }

    /// Linearly interpolated, renormalized direction. When the two bracketing
    /// directions nearly cancel (a turnaround), the nearer sample wins.
    pub fn direction_at(&self, t: f64) -> Result<Point2> {
        let (i, f) = self.locate(t)?;
        let (a, b) = (self.samples[i].direction, self.samples[i + 1].direction);
        Ok(a.lerp(b, f)
            .normalized()
            .filter(|_| a.dot(b) > -1.0 + 1e-9)
            .unwrap_or(if f < 0.5 { a } else { b }))
    }

    /// Speed from the chord between the bracketing samples.
    pub fn speed_at(&self, t: f64) -> Result<f64> {
        let (i, _) = self.locate(t)?;
        let (a, b) = (&self.samples[i], &self.samples[i + 1]);
        Ok(a.center.distance(b.center) / (b.t - a.t))
    }

    /// Leading edge `center + (w/2) n`.
    pub fn leading_edge(&self, t: f64) -> Result<Point2> {
        Ok(self.center_at(t)? + self.direction_at(t)? * (self.width / 2.0))
    }

    /// Trailing edge `center - (w/2) n`.
    pub fn trailing_edge(&self, t: f64) -> Result<Point2> {
        Ok(self.center_at(t)? - self.direction_at(t)? * (self.width / 2.0))
    }

    /// Applies a rigid transform (rotation then translation) to positions and
    /// the rotation alone to directions.
    pub fn transformed(&self, rotation: f64, translation: Point2) -> Self {
        let samples = self
            .samples
            .iter()
            .map(|s| TrackSample {
                t: s.t,
                center: s.center.rotate(rotation) + translation,
                direction: s.direction.rotate(rotation),
            })
            .collect();
        Self {
            samples,
            width: self.width,
        }
    }

    /// Sub-track restricted to `[start, end]`, keeping the bracketing samples.
    pub fn window(&self, start: f64, end: f64) -> Result<Self> {
        let lo = self.samples.partition_point(|s| s.t <= start).saturating_sub(1);
        let hi = self.samples.partition_point(|s| s.t < end).min(self.samples.len() - 1);
        if hi <= lo {
            return Err(Error::Input(format!("window [{start}, {end}] holds no track data")));
        }
        Self::new(self.samples[lo..=hi].to_vec(), self.width)
    }
}

/// Obstacle region at time `t`: the segment from the trailing edge to the leading edge.
pub fn obstacle_region(track: &ObstacleTrack, t: f64) -> Result<Segment2> {
    Ok(Segment2::new(track.leading_edge(t)?, track.trailing_edge(t)?))
}
