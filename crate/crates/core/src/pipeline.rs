//! End-to-end localization: detection, boundary points, ellipse fit and
//! evaluation for every (anchor, transmitter) pair.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{trilaterate, AnchorReading, PathLossModel};
use crate::blockage::{detect_multi, event_sections, BlockageEvent, DetectionConfig, RssiTrace};
use crate::boundary::collect_boundary_points;
use crate::error::{Error, Result};
use crate::eval::{
    boundary_distance_cdf, confusion, localization_error, median, percentile,
    ConfusionDurations, SectionSet,
};
use crate::fitting::{fit, localize, FitMethod, FitResult, GridConfig};
use crate::geometry::{FresnelParams, ObstacleTrack, Point2};
use crate::simulator::{
    ground_truth_all, synth_rssi, tracks_in_anchor_frame, ChannelConfig, Node, Scenario,
};

/// Pipeline settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub detection: DetectionConfig,
    pub grid: GridConfig,
    pub method: FitMethod,
    /// Restrict every trace to this absolute time window, seconds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<(f64, f64)>,
    /// Propagation model assumed by the triangulation baseline.
    pub path_loss: PathLossModel,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let ch = ChannelConfig::default();
        Self {
            detection: DetectionConfig::default(),
            grid: GridConfig::default(),
            method: FitMethod::Split,
            window: None,
            path_loss: PathLossModel {
                exponent: ch.path_loss_exponent,
                ref_power: ch.baseline_power,
            },
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.detection.validate()?;
        self.grid.validate()?;
        self.path_loss.validate()?;
        if let Some((s, e)) = self.window {
            if !(s.is_finite() && e.is_finite() && e > s) {
                return Err(Error::Config(format!("invalid observation window [{s}, {e}]")));
            }
        }
        Ok(())
    }
}

/// A transmitter to localize, with its true position when known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<Point2>,
}

/// One received-power trace and, optionally, its ground-truth sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairObservation {
    pub anchor_id: String,
    pub tx_id: String,
    pub trace: RssiTrace,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_sections: Option<Vec<(f64, f64)>>,
}

/// Everything the pipeline consumes, whether simulated or recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineInput {
    pub lambda: f64,
    pub anchors: Vec<Node>,
    pub targets: Vec<Target>,
    /// Obstacle tracks in world coordinates.
    pub tracks: Vec<ObstacleTrack>,
    pub observations: Vec<PairObservation>,
}

impl PipelineInput {
    /// Synthesizes every pair's trace and ground truth from a scenario.
    pub fn from_scenario(scenario: &Scenario, channel: &ChannelConfig) -> Result<Self> {
        scenario.validate()?;
        let pairs: Vec<(&Node, &Node)> = scenario
            .anchors
            .iter()
            .flat_map(|a| scenario.transmitters.iter().map(move |t| (a, t)))
            .collect();
        let observations = pairs
            .par_iter()
            .map(|(a, t)| {
                Ok(PairObservation {
                    anchor_id: a.id.clone(),
                    tx_id: t.id.clone(),
                    trace: synth_rssi(scenario, &a.id, &t.id, channel)?,
                    truth_sections: Some(ground_truth_all(scenario, &a.id, &t.id)?),
                })
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.in_stage("simulate"))?;
        Ok(Self {
            lambda: scenario.lambda,
            anchors: scenario.anchors.clone(),
            targets: scenario
                .transmitters
                .iter()
                .map(|t| Target {
                    id: t.id.clone(),
                    position: Some(t.position),
                })
                .collect(),
            tracks: scenario.tracks.clone(),
            observations,
        })
    }

    fn anchor(&self, id: &str) -> Result<&Node> {
        self.anchors
            .iter()
            .find(|a| a.id == id)
            .ok_or_else(|| Error::Input(format!("unknown anchor {id:?}")))
    }

    fn target(&self, id: &str) -> Result<&Target> {
        self.targets
            .iter()
            .find(|t| t.id == id)
            .ok_or_else(|| Error::Input(format!("unknown transmitter {id:?}")))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Input(format!("wavelength must be positive, got {}", self.lambda)));
        }
        for o in &self.observations {
            self.anchor(&o.anchor_id)?;
            self.target(&o.tx_id)?;
        }
        let mut keys: Vec<_> = self.observations.iter().map(|o| (&o.anchor_id, &o.tx_id)).collect();
        keys.sort();
        if keys.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Input("duplicate (anchor, transmitter) observation".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairStatus {
    Localized,
    InsufficientEvents,
    FitFailed,
}

/// Percentiles of the boundary-point distance distribution, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfSummary {
    pub count: usize,
    pub p50: f64,
    pub p90: f64,
    pub p95: f64,
    pub max: f64,
}

impl CdfSummary {
    pub fn from_sorted(sorted: &[f64]) -> Option<Self> {
        Some(Self {
            count: sorted.len(),
            p50: percentile(sorted, 0.5)?,
            p90: percentile(sorted, 0.9)?,
            p95: percentile(sorted, 0.95)?,
            max: *sorted.last()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub anchor_id: String,
    pub tx_id: String,
    pub status: PairStatus,
    pub event_count: usize,
    pub boundary_points: usize,
    pub dropped_events: usize,
    pub fit: Option<FitResult>,
    pub estimate: Option<Point2>,
    pub error: Option<f64>,
    pub horizon: f64,
    pub confusion: Option<ConfusionDurations>,
    pub accuracy: Option<f64>,
    pub boundary_distance: Option<CdfSummary>,
    /// Sorted distances of every boundary point to the true zone, meters.
    pub boundary_distances: Vec<f64>,
    pub events: Vec<BlockageEvent>,
}

impl PairReport {
    /// Counts and horizons agree with each other.
    pub fn is_consistent(&self) -> bool {
        let counts = self.event_count == self.boundary_points / 2 + self.dropped_events
            && self.event_count == self.events.len();
        let horizon = self.confusion.is_none_or(|c| {
            ((c.tp + c.tn + c.fp + c.fn_) - self.horizon).abs() <= 1e-6 && c.horizon == self.horizon
        });
        let status = match self.status {
            PairStatus::Localized => self.estimate.is_some() && self.fit.is_some(),
            _ => self.estimate.is_none(),
        };
        counts && horizon && status
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangulationReport {
    pub tx_id: String,
    pub anchors_used: usize,
    pub estimate: Option<Point2>,
    pub error: Option<f64>,
    pub collinear: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub pairs: usize,
    pub localized: usize,
    /// Mean over every localized pair with a known truth.
    pub mean_error: Option<f64>,
    pub median_error: Option<f64>,
    pub mean_accuracy: Option<f64>,
    pub mean_triangulation_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub lambda: f64,
    pub pairs: Vec<PairReport>,
    pub triangulation: Vec<TriangulationReport>,
    pub summary: Summary,
}

impl RunReport {
    pub fn is_consistent(&self) -> bool {
        self.pairs.iter().all(PairReport::is_consistent)
            && self.summary.pairs == self.pairs.len()
            && self.summary.localized
                == self.pairs.iter().filter(|p| p.status == PairStatus::Localized).count()
    }

    pub fn pair(&self, anchor_id: &str, tx_id: &str) -> Option<&PairReport> {
        self.pairs
            .iter()
            .find(|p| p.anchor_id == anchor_id && p.tx_id == tx_id)
    }
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Mean trace power outside the detected sections; falls back to the whole
/// trace when every sample is inside one.
fn unblocked_mean(trace: &RssiTrace, sections: &[(f64, f64)]) -> f64 {
    let outside: Vec<f64> = (0..trace.len())
        .filter(|&i| {
            let t = trace.time_at(i);
            !sections.iter().any(|&(s, e)| t >= s && t <= e)
        })
        .map(|i| trace.samples()[i])
        .collect();
    let pool = if outside.is_empty() { trace.samples() } else { &outside };
    pool.iter().sum::<f64>() / pool.len() as f64
}

struct PairOutcome {
    report: PairReport,
    mean_power: f64,
}

fn run_pair(input: &PipelineInput, obs: &PairObservation, cfg: &PipelineConfig) -> Result<PairOutcome> {
    let anchor = input.anchor(&obs.anchor_id)?;
    let target = input.target(&obs.tx_id)?;
    let pose = anchor.pose();
    let trace = match cfg.window {
        Some((s, e)) => obs.trace.window(s, e).map_err(|e| e.in_stage("window"))?,
        None => obs.trace.clone(),
    };
    let events = detect_multi(&trace, &cfg.detection).map_err(|e| e.in_stage("detect"))?;
    let detected = event_sections(&events);

    let local_tracks = tracks_in_anchor_frame(&input.tracks, &pose);
    let points = collect_boundary_points(&local_tracks, &events);
    if points.dropped_events > 0 {
        log::warn!(
            "{} -> {}: {} of {} events not covered by a track",
            obs.anchor_id,
            obs.tx_id,
            points.dropped_events,
            events.len()
        );
    }

    let (status, fit_result): (PairStatus, Option<FitResult>) = if points.is_empty() {
        (PairStatus::InsufficientEvents, None)
    } else {
        match fit(&points, input.lambda, &cfg.grid, cfg.method) {
            Ok(f) => (PairStatus::Localized, Some(f)),
            Err(e @ Error::FitFailure(_)) => {
                log::warn!("{} -> {}: {e}", obs.anchor_id, obs.tx_id);
                (PairStatus::FitFailed, None)
            }
            Err(e) => return Err(e.in_stage("fit")),
        }
    };
    let estimate = fit_result.as_ref().map(|f| localize(&pose, f));
    let error = estimate
        .zip(target.position)
        .map(|(est, truth)| localization_error(est, truth));

    let horizon = trace.observation_length();
    let (confusion_d, accuracy) = match &obs.truth_sections {
        Some(truth) if horizon > 0.0 => {
            let origin = trace.start_time();
            let det = SectionSet::from_absolute(detected.iter().copied(), origin, horizon)
                .map_err(|e| e.in_stage("evaluate"))?;
            let gt = SectionSet::from_absolute(truth.iter().copied(), origin, horizon)
                .map_err(|e| e.in_stage("evaluate"))?;
            let c = confusion(&det, &gt).map_err(|e| e.in_stage("evaluate"))?;
            (Some(c), Some(c.accuracy()))
        }
        _ => (None, None),
    };
    let boundary_distances = match target.position {
        Some(tp) if !points.is_empty() => {
            let truth = FresnelParams::from_transmitter(pose.to_local(tp), input.lambda)
                .map_err(|e| e.in_stage("evaluate"))?;
            boundary_distance_cdf(&points, &truth).map_err(|e| e.in_stage("evaluate"))?
        }
        _ => Vec::new(),
    };

    Ok(PairOutcome {
        mean_power: unblocked_mean(&trace, &detected),
        report: PairReport {
            anchor_id: obs.anchor_id.clone(),
            tx_id: obs.tx_id.clone(),
            status,
            event_count: events.len(),
            boundary_points: points.len(),
            dropped_events: points.dropped_events,
            fit: fit_result,
            estimate,
            error,
            horizon,
            confusion: confusion_d,
            accuracy,
            boundary_distance: CdfSummary::from_sorted(&boundary_distances),
            boundary_distances,
            events,
        },
    })
}

/// Runs detection, boundary-point extraction, fitting, localization and
/// evaluation for every observation, plus the triangulation baseline per
/// transmitter. Output order is by (anchor id, transmitter id).
pub fn run_pipeline(input: &PipelineInput, cfg: &PipelineConfig) -> Result<RunReport> {
    cfg.validate()?;
    input.validate()?;
    let mut outcomes = input
        .observations
        .par_iter()
        .map(|obs| run_pair(input, obs, cfg))
        .collect::<Result<Vec<_>>>()?;
    outcomes.sort_by(|a, b| {
        (&a.report.anchor_id, &a.report.tx_id).cmp(&(&b.report.anchor_id, &b.report.tx_id))
    });

    let mut tx_ids: Vec<&str> = input.observations.iter().map(|o| o.tx_id.as_str()).collect();
    tx_ids.sort();
    tx_ids.dedup();
    let mut triangulation = Vec::with_capacity(tx_ids.len());
    for tx in tx_ids {
        let readings: Vec<AnchorReading> = outcomes
            .iter()
            .filter(|o| o.report.tx_id == tx)
            .map(|o| {
                Ok(AnchorReading {
                    anchor_position: input.anchor(&o.report.anchor_id)?.position,
                    mean_power: o.mean_power,
                })
            })
            .collect::<Result<_>>()?;
        let truth = input.target(tx)?.position;
        let tri = if readings.len() >= 3 {
            match trilaterate(&readings, &cfg.path_loss) {
                Ok(t) => Some(t),
                Err(e) => {
                    log::warn!("triangulation for {tx} failed: {e}");
                    None
                }
            }
        } else {
            None
        };
        triangulation.push(TriangulationReport {
            tx_id: tx.to_string(),
            anchors_used: readings.len(),
            estimate: tri.map(|t| t.position),
            error: tri.zip(truth).map(|(t, p)| localization_error(t.position, p)),
            collinear: tri.is_some_and(|t| t.collinear),
        });
    }

    let pairs: Vec<PairReport> = outcomes.into_iter().map(|o| o.report).collect();
    let errors: Vec<f64> = pairs.iter().filter_map(|p| p.error).collect();
    let accuracies: Vec<f64> = pairs.iter().filter_map(|p| p.accuracy).collect();
    let tri_errors: Vec<f64> = triangulation.iter().filter_map(|t| t.error).collect();
    let summary = Summary {
        pairs: pairs.len(),
        localized: pairs.iter().filter(|p| p.status == PairStatus::Localized).count(),
        mean_error: mean(&errors),
        median_error: median(&errors),
        mean_accuracy: mean(&accuracies),
        mean_triangulation_error: mean(&tri_errors),
    };
    Ok(RunReport {
        lambda: input.lambda,
        pairs,
        triangulation,
        summary,
    })
}
