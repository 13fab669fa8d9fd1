//! Scenario synthesis: obstacle trajectories, received-power traces with
//! Fresnel-blockage dips, and the exact ground truth behind them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::blockage::RssiTrace;
use crate::error::{Error, Result};
use crate::geometry::{
    obstacle_region, segment_min_value, AnchorPose, FresnelParams, ObstacleTrack, Point2,
    TrackSample,
};

/// A named anchor or transmitter in world coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub position: Point2,
    /// Heading of an anchor's local frame (radians); ignored for transmitters.
    #[serde(default)]
    pub rotation: f64,
}

impl Node {
    pub fn new(id: impl Into<String>, position: Point2) -> Self {
        Self {
            id: id.into(),
            position,
            rotation: 0.0,
        }
    }

    pub fn pose(&self) -> AnchorPose {
        AnchorPose {
            position: self.position,
            rotation: self.rotation,
        }
    }
}

/// Received-power model used by [`synth_rssi`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelConfig {
    /// Unblocked received power at 1 m, dBm. The per-link level follows
    /// log-distance path loss from here.
    pub baseline_power: f64,
    pub path_loss_exponent: f64,
    /// Static per-link offset, N(0, sigma) dB, drawn once per link.
    pub link_shadowing_sigma: f64,
    /// Attenuation while the obstacle overlaps the zone, dB.
    pub blockage_depth: f64,
    /// Duration of the attenuation ramps at each end of an overlap, seconds.
    pub edge_ramp: f64,
    /// Per-sample white Gaussian noise, dB.
    pub noise_sigma: f64,
    pub sample_interval: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            baseline_power: -35.0,
            path_loss_exponent: 2.0,
            link_shadowing_sigma: 1.0,
            blockage_depth: 10.0,
            edge_ramp: 0.2,
            noise_sigma: 1.0,
            sample_interval: 0.05,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.blockage_depth > 0.0
            && self.noise_sigma >= 0.0
            && self.link_shadowing_sigma >= 0.0
            && self.edge_ramp >= 0.0
            && self.sample_interval > 0.0
            && self.baseline_power.is_finite()
            && self.path_loss_exponent > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid channel configuration {self:?}")))
        }
    }
}

/// Affine camera distortion applied to observed obstacle centers:
/// `raw = scale * true + offset + N(0, noise_sigma)` per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub scale: Point2,
    pub offset: Point2,
    #[serde(default)]
    pub noise_sigma: f64,
}

/// A complete synthetic deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub anchors: Vec<Node>,
    pub transmitters: Vec<Node>,
    pub lambda: f64,
    /// Time-disjoint obstacle passes, in world coordinates.
    pub tracks: Vec<ObstacleTrack>,
    pub rng_seed: u64,
    /// Lower-left and upper-right corners of the arena.
    pub arena: (Point2, Point2),
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Input(format!("wavelength must be positive, got {}", self.lambda)));
        }
        let (lo, hi) = self.arena;
        let inside = |p: Point2| p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
        for n in self.anchors.iter().chain(&self.transmitters) {
            if !n.position.is_finite() || !inside(n.position) {
                return Err(Error::Input(format!("node {} lies outside the arena", n.id)));
            }
        }
        for (i, tr) in self.tracks.iter().enumerate() {
            if tr.samples().iter().any(|s| !inside(s.center)) {
                return Err(Error::Input(format!("track {i} leaves the arena")));
            }
        }
        let mut spans: Vec<(f64, f64)> =
            self.tracks.iter().map(|t| (t.start_time(), t.end_time())).collect();
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        if spans.windows(2).any(|w| w[1].0 < w[0].1) {
            return Err(Error::Input("obstacle tracks overlap in time".into()));
        }
        Ok(())
    }

    pub fn anchor(&self, id: &str) -> Result<(usize, &Node)> {
        self.anchors
            .iter()
            .enumerate()
            .find(|(_, n)| n.id == id)
            .ok_or_else(|| Error::Input(format!("unknown anchor {id:?}")))
    }

    pub fn transmitter(&self, id: &str) -> Result<(usize, &Node)> {
        self.transmitters
            .iter()
            .enumerate()
            .find(|(_, n)| n.id == id)
            .ok_or_else(|| Error::Input(format!("unknown transmitter {id:?}")))
    }

    /// True Fresnel parameters of a pair, in the anchor's local frame.
    pub fn fresnel_params(&self, anchor_id: &str, tx_id: &str) -> Result<FresnelParams> {
        let (_, a) = self.anchor(anchor_id)?;
        let (_, t) = self.transmitter(tx_id)?;
        FresnelParams::from_transmitter(a.pose().to_local(t.position), self.lambda)
    }

    /// First track start to last track end.
    pub fn time_span(&self) -> Option<(f64, f64)> {
        let start = self.tracks.iter().map(|t| t.start_time()).reduce(f64::min)?;
        let end = self.tracks.iter().map(|t| t.end_time()).reduce(f64::max)?;
        Some((start, end))
    }
}

/// Back-and-forth motion at constant speed along `line`, starting at
/// `line.0` at `start_time`. Direction flips at each end.
pub fn synth_track(
    line: (Point2, Point2),
    speed: f64,
    width: f64,
    round_trips: u32,
    interval: f64,
    start_time: f64,
) -> Result<ObstacleTrack> {
    let (a, b) = line;
    let length = a.distance(b);
    let dir = (b - a)
        .normalized()
        .ok_or_else(|| Error::Input("obstacle line has zero length".into()))?;
    if !(speed > 0.0 && speed.is_finite()) {
        return Err(Error::Input(format!("speed must be positive, got {speed}")));
    }
    if round_trips == 0 {
        return Err(Error::Input("need at least one round trip".into()));
    }
    if !(interval > 0.0 && interval.is_finite()) {
        return Err(Error::Input(format!("track interval must be positive, got {interval}")));
    }
    let leg = length / speed;
    let duration = 2.0 * leg * round_trips as f64;
    let steps = (duration / interval - 1e-9).ceil() as usize;
    let samples = (0..=steps)
        .map(|k| {
            let t = (k as f64 * interval).min(duration);
            let phase = t % (2.0 * leg);
            let (along, direction) = if phase < leg {
                (phase * speed, dir)
            } else {
                ((2.0 * leg - phase) * speed, -dir)
            };
            // the last sample closes the final inbound leg
            let (along, direction) = if k == steps { (0.0, -dir) } else { (along, direction) };
            TrackSample {
                t: start_time + t,
                center: a + dir * along,
                direction,
            }
        })
        .collect();
    ObstacleTrack::new(samples, width)
}

/// Maximal time intervals during which the obstacle region of `track`
/// intersects the zone of `params` (expressed in the same frame as the track).
///
/// Transitions are bracketed on a fine scan and bisected to 1e-5 s.
pub fn overlap_sections(track: &ObstacleTrack, params: &FresnelParams) -> Vec<(f64, f64)> {
    let margin = |t: f64| {
        obstacle_region(track, t)
            .map(|seg| segment_min_value(&seg, params) - 1.0)
            .unwrap_or(f64::INFINITY)
    };
    let inside = |t: f64| margin(t) <= 0.0;
    let (t0, t1) = (track.start_time(), track.end_time());
    let spacing = track
        .samples()
        .windows(2)
        .map(|w| w[1].t - w[0].t)
        .fold(f64::INFINITY, f64::min);
    let h = (spacing / 4.0).min(0.01);
    let steps = ((t1 - t0) / h).ceil() as usize;

    let bisect = |mut lo: f64, mut hi: f64, lo_inside: bool| {
        while hi - lo > 1e-5 {
            let mid = 0.5 * (lo + hi);
            if inside(mid) == lo_inside {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };

    let mut sections = Vec::new();
    let mut prev_t = t0;
    let mut prev_in = inside(t0);
    let mut open = prev_in.then_some(t0);
    for k in 1..=steps {
        let t = (t0 + k as f64 * h).min(t1);
        let now_in = inside(t);
        if now_in != prev_in {
            let edge = bisect(prev_t, t, prev_in);
            if now_in {
                open = Some(edge);
            } else if let Some(s) = open.take() {
                sections.push((s, edge));
            }
        }
        prev_t = t;
        prev_in = now_in;
    }
    if let Some(s) = open {
        sections.push((s, t1));
    }
    sections
}

/// Tracks of a scenario moved into an anchor's local frame.
pub fn tracks_in_anchor_frame(tracks: &[ObstacleTrack], pose: &AnchorPose) -> Vec<ObstacleTrack> {
    let translation = -pose.position.rotate(-pose.rotation);
    tracks
        .iter()
        .map(|t| t.transformed(-pose.rotation, translation))
        .collect()
}

/// Ground-truth blockage sections of one (anchor, transmitter) pair for one track.
pub fn ground_truth_sections(
    scenario: &Scenario,
    anchor_id: &str,
    tx_id: &str,
    track: &ObstacleTrack,
) -> Result<Vec<(f64, f64)>> {
    let (_, anchor) = scenario.anchor(anchor_id)?;
    let params = scenario.fresnel_params(anchor_id, tx_id)?;
    let local = tracks_in_anchor_frame(std::slice::from_ref(track), &anchor.pose());
    Ok(overlap_sections(&local[0], &params))
}

/// Ground-truth sections of a pair over every track of the scenario.
pub fn ground_truth_all(scenario: &Scenario, anchor_id: &str, tx_id: &str) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for tr in &scenario.tracks {
        out.extend(ground_truth_sections(scenario, anchor_id, tx_id, tr)?);
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

/// Attenuation envelope in `[0, 1]`: zero outside every section, linear
/// ramps of length `ramp` just inside each start and end, 1 in between.
fn envelope(t: f64, sections: &[(f64, f64)], ramp: f64) -> f64 {
    sections
        .iter()
        .filter(|&&(s, e)| t >= s && t <= e)
        .map(|&(s, e)| {
            if ramp > 0.0 {
                ((t - s) / ramp).min((e - t) / ramp).min(1.0)
            } else {
                1.0
            }
        })
        .fold(0.0, f64::max)
}

fn pair_rng(seed: u64, anchor_index: usize, tx_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((anchor_index as u64) << 32) | tx_index as u64);
    rng
}

/// Received-power trace at an anchor for one transmitter, sampled over the
/// scenario's time span.
pub fn synth_rssi(
    scenario: &Scenario,
    anchor_id: &str,
    tx_id: &str,
    channel: &ChannelConfig,
) -> Result<RssiTrace> {
    channel.validate()?;
    let (ai, anchor) = scenario.anchor(anchor_id)?;
    let (ti, tx) = scenario.transmitter(tx_id)?;
    let (start, end) = scenario
        .time_span()
        .ok_or_else(|| Error::Input("scenario has no obstacle tracks".into()))?;
    let sections = ground_truth_all(scenario, anchor_id, tx_id)?;

    let mut rng = pair_rng(scenario.rng_seed, ai, ti);
    let shadow = Normal::new(0.0, channel.link_shadowing_sigma)
        .map_err(|e| Error::Config(e.to_string()))?
        .sample(&mut rng);
    let noise = Normal::new(0.0, channel.noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
    let distance = anchor.position.distance(tx.position).max(1e-3);
    let level = channel.baseline_power
        - 10.0 * channel.path_loss_exponent * distance.log10()
        + shadow;

    let dt = channel.sample_interval;
    let count = ((end - start) / dt + 1e-9).floor() as usize + 1;
    let samples = (0..count)
        .map(|i| {
            let t = start + i as f64 * dt;
            level - channel.blockage_depth * envelope(t, &sections, channel.edge_ramp)
                + noise.sample(&mut rng)
        })
        .collect();
    RssiTrace::new(samples, dt, start)
}

/// Tracks as a camera would report them: distorted, noisy centers with
/// directions re-derived from chords.
pub fn observe_tracks(scenario: &Scenario, camera: &CameraModel) -> Result<Vec<ObstacleTrack>> {
    let mut rng = pair_rng(scenario.rng_seed, usize::MAX >> 32, usize::MAX >> 32);
    let noise = Normal::new(0.0, camera.noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
    scenario
        .tracks
        .iter()
        .map(|tr| {
            let raw: Vec<(f64, Point2)> = tr
                .samples()
                .iter()
                .map(|s| {
                    let p = Point2::new(
                        camera.scale.x * s.center.x + camera.offset.x + noise.sample(&mut rng),
                        camera.scale.y * s.center.y + camera.offset.y + noise.sample(&mut rng),
                    );
                    (s.t, p)
                })
                .collect();
            ObstacleTrack::from_positions(&raw, tr.width())
        })
        .collect()
}

/// Reference points for camera calibration: a 4 x 4 grid over the arena,
/// each paired with its distorted observation.
pub fn calibration_pairs(scenario: &Scenario, camera: &CameraModel) -> Result<Vec<(Point2, Point2)>> {
    let mut rng = pair_rng(scenario.rng_seed, usize::MAX >> 33, usize::MAX >> 33);
    let noise = Normal::new(0.0, camera.noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
    let (lo, hi) = scenario.arena;
    let mut pairs = Vec::with_capacity(16);
    for i in 0..4 {
        for j in 0..4 {
            let truth = Point2::new(
                lo.x + (hi.x - lo.x) * (i as f64 + 0.5) / 4.0,
                lo.y + (hi.y - lo.y) * (j as f64 + 0.5) / 4.0,
            );
            let raw = Point2::new(
                camera.scale.x * truth.x + camera.offset.x + noise.sample(&mut rng),
                camera.scale.y * truth.y + camera.offset.y + noise.sample(&mut rng),
            );
            pairs.push((raw, truth));
        }
    }
    Ok(pairs)
}

/// One straight obstacle line of a scenario description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSpec {
    pub start: Point2,
    pub end: Point2,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round_trips: Option<u32>,
}

/// Obstacle settings shared by all lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObstacleSpec {
    pub width: f64,
    pub speed: f64,
    pub round_trips: u32,
    /// Camera frame interval, seconds.
    pub track_interval: f64,
    /// Idle time between consecutive lines, seconds.
    pub line_pause: f64,
}

impl Default for ObstacleSpec {
    fn default() -> Self {
        Self {
            width: 0.9,
            speed: 0.57,
            round_trips: 6,
            track_interval: 0.05,
            line_pause: 1.0,
        }
    }
}

/// Serializable scenario description; [`ScenarioSpec::build`] expands the
/// obstacle lines into tracks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub lambda: f64,
    pub arena: (Point2, Point2),
    pub anchors: Vec<Node>,
    pub transmitters: Vec<Node>,
    #[serde(default)]
    pub obstacle: ObstacleSpec,
    pub lines: Vec<LineSpec>,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera: Option<CameraModel>,
}

/// Carrier wavelength at 5.22 GHz, meters.
pub const WAVELENGTH_5_22_GHZ: f64 = 0.0574;

impl ScenarioSpec {
    /// 6 m x 6 m room, three anchors along one wall, two transmitters along
    /// the opposite wall, and six obstacle lines parallel to the x axis.
    /// Lines 1-5 cross every link; line 6 runs behind the transmitters.
    pub fn paper_mirror(seed: u64) -> Self {
        let node = |id: &str, x: f64, y: f64| Node::new(id, Point2::new(x, y));
        let line = |y: f64| LineSpec {
            start: Point2::new(0.3, y),
            end: Point2::new(5.7, y),
            speed: None,
            round_trips: None,
        };
        Self {
            seed,
            lambda: WAVELENGTH_5_22_GHZ,
            arena: (Point2::new(0.0, 0.0), Point2::new(6.0, 6.0)),
            anchors: vec![node("A", 1.2, 0.3), node("B", 3.0, 0.7), node("C", 4.8, 0.3)],
            transmitters: vec![node("TD1", 1.8, 5.6), node("TD2", 4.2, 5.6)],
            obstacle: ObstacleSpec::default(),
            lines: [1.3, 2.2, 3.1, 4.0, 4.9, 5.85].into_iter().map(line).collect(),
            channel: ChannelConfig::default(),
            camera: None,
        }
    }

    /// Tracks for each line, back to back with `line_pause` between them.
    pub fn build(&self) -> Result<Scenario> {
        let ob = &self.obstacle;
        let mut tracks = Vec::with_capacity(self.lines.len());
        let mut t = 0.0;
        for line in &self.lines {
            let tr = synth_track(
                (line.start, line.end),
                line.speed.unwrap_or(ob.speed),
                ob.width,
                line.round_trips.unwrap_or(ob.round_trips),
                ob.track_interval,
                t,
            )?;
            t = tr.end_time() + ob.line_pause;
            tracks.push(tr);
        }
        let sc = Scenario {
            anchors: self.anchors.clone(),
            transmitters: self.transmitters.clone(),
            lambda: self.lambda,
            tracks,
            rng_seed: self.seed,
            arena: self.arena,
        };
        sc.validate()?;
        Ok(sc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn track_timing_and_directions() {
        let tr = synth_track((Point2::new(0.0, 2.0), Point2::new(6.0, 2.0)), 0.6, 0.9, 1, 0.05, 0.0).unwrap();
        assert_abs_diff_eq!(tr.end_time() - tr.start_time(), 20.0, epsilon = 1e-9);
        assert_eq!(tr.width(), 0.9);
        assert_eq!(tr.direction_at(3.0).unwrap(), Point2::new(1.0, 0.0));
        assert_eq!(tr.direction_at(13.0).unwrap(), Point2::new(-1.0, 0.0));
        assert_abs_diff_eq!(tr.center_at(5.0).unwrap().x, 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(tr.center_at(15.0).unwrap().x, 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(tr.center_at(20.0).unwrap().x, 0.0, epsilon = 1e-9);
        assert!(synth_track((Point2::ORIGIN, Point2::ORIGIN), 0.6, 0.9, 1, 0.05, 0.0).is_err());
        assert!(synth_track((Point2::ORIGIN, Point2::new(1.0, 0.0)), 0.0, 0.9, 1, 0.05, 0.0).is_err());
        assert!(synth_track((Point2::ORIGIN, Point2::new(1.0, 0.0)), 1.0, 0.9, 0, 0.05, 0.0).is_err());
    }

    fn one_link(y_line: f64, trips: u32) -> Scenario {
        let mut spec = ScenarioSpec::paper_mirror(11);
        spec.anchors.truncate(1);
        spec.transmitters.truncate(1);
        spec.lines = vec![LineSpec {
            start: Point2::new(0.3, y_line),
            end: Point2::new(5.7, y_line),
            speed: None,
            round_trips: Some(trips),
        }];
        spec.build().unwrap()
    }

    #[test]
    fn every_pass_crosses_once() {
        let sc = one_link(3.0, 6);
        let gt = ground_truth_all(&sc, "A", "TD1").unwrap();
        assert_eq!(gt.len(), 12);
    }

    #[test]
    fn line_behind_transmitter_never_blocks() {
        let sc = one_link(5.85, 2);
        assert!(ground_truth_all(&sc, "A", "TD1").unwrap().is_empty());
        let ch = ChannelConfig { noise_sigma: 0.0, ..Default::default() };
        let tr = synth_rssi(&sc, "A", "TD1", &ch).unwrap();
        let first = tr.samples()[0];
        assert!(tr.samples().iter().all(|&v| v == first));
    }

    #[test]
    fn analytic_sections_match_dense_sampling() {
        let sc = one_link(2.1, 2);
        let params = sc.fresnel_params("A", "TD1").unwrap();
        let local = tracks_in_anchor_frame(&sc.tracks, &sc.anchors[0].pose());
        let tr = &local[0];
        let analytic = overlap_sections(tr, &params);
        // 1 kHz oracle
        let n = ((tr.end_time() - tr.start_time()) * 1000.0).round() as usize;
        let mut dense = Vec::new();
        let mut open: Option<f64> = None;
        for k in 0..=n {
            let t = (tr.start_time() + k as f64 / 1000.0).min(tr.end_time());
            let inside = crate::geometry::segment_intersects_ffz(&obstacle_region(tr, t).unwrap(), &params);
            match (inside, open) {
                (true, None) => open = Some(t),
                (false, Some(s)) => {
                    dense.push((s, t));
                    open = None;
                }
                _ => {}
            }
        }
        assert_eq!(analytic.len(), dense.len());
        for (a, d) in analytic.iter().zip(&dense) {
            assert!((a.0 - d.0).abs() <= 1e-3 + 1e-4, "{a:?} vs {d:?}");
            assert!((a.1 - d.1).abs() <= 1e-3 + 1e-4, "{a:?} vs {d:?}");
        }
    }

    #[test]
    fn noiseless_dip_spans_section() {
        let sc = one_link(3.0, 1);
        let ch = ChannelConfig { noise_sigma: 0.0, ..Default::default() };
        let trace = synth_rssi(&sc, "A", "TD1", &ch).unwrap();
        let gt = ground_truth_all(&sc, "A", "TD1").unwrap();
        let level = trace.samples()[0];
        let dipped: Vec<f64> = (0..trace.len())
            .filter(|&i| trace.samples()[i] < level - 1e-9)
            .map(|i| trace.time_at(i))
            .collect();
        let first_dip = dipped[0];
        let first_gt = gt[0];
        let dt = ch.sample_interval;
        assert!((first_dip - first_gt.0).abs() <= dt + 1e-9);
        let last_in_first = dipped.iter().copied().filter(|&t| t < first_gt.1 + 1.0).fold(f64::MIN, f64::max);
        assert!((last_in_first - first_gt.1).abs() <= dt + 1e-9);
        let floor = trace.samples().iter().copied().fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(floor, level - ch.blockage_depth, epsilon = 1e-9);
    }

    #[test]
    fn same_seed_same_trace() {
        let sc = one_link(3.0, 1);
        let ch = ChannelConfig::default();
        assert_eq!(synth_rssi(&sc, "A", "TD1", &ch).unwrap(), synth_rssi(&sc, "A", "TD1", &ch).unwrap());
        let mut other = sc.clone();
        other.rng_seed += 1;
        assert_ne!(synth_rssi(&sc, "A", "TD1", &ch).unwrap(), synth_rssi(&other, "A", "TD1", &ch).unwrap());
    }

    #[test]
    fn paper_mirror_scenario_is_valid() {
        let sc = ScenarioSpec::paper_mirror(1).build().unwrap();
        assert_eq!(sc.anchors.len(), 3);
        assert_eq!(sc.transmitters.len(), 2);
        assert_eq!(sc.tracks.len(), 6);
        let (s, e) = sc.time_span().unwrap();
        assert!(e - s > 600.0 && e - s < 800.0);
        for a in &sc.anchors {
            for t in &sc.transmitters {
                let n = ground_truth_all(&sc, &a.id, &t.id).unwrap().len();
                assert_eq!(n, 60, "{} {}", a.id, t.id);
            }
        }
        assert!(sc.anchor("Z").is_err());
    }
}
