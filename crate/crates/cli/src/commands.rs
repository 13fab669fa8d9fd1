use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use fresnel_loc::blockage::{detect_multi, BlockageEvent, Resolution};
use fresnel_loc::boundary::{collect_boundary_points, BoundaryPoint};
use fresnel_loc::calibration::{fit_calibration, CalibrationModel};
use fresnel_loc::fitting::{fit, localize as estimate_position, FitMethod, FitResult};
use fresnel_loc::geometry::{AnchorPose, ObstacleTrack, Point2};
use fresnel_loc::pipeline::{run_pipeline, PairObservation, PipelineConfig, PipelineInput, RunReport};
use fresnel_loc::simulator::{
    calibration_pairs, observe_tracks, tracks_in_anchor_frame, ScenarioSpec,
};
use fresnel_loc::Error;
use serde::Serialize;

use crate::io::{self, Manifest, ManifestObservation};
use crate::{
    CalibrateArgs, DetectArgs, EvaluateArgs, ExportArgs, LocalizeArgs, MethodArg, PipelineFlags,
    ResolutionArg, SimulateArgs,
};

/// 3 when the chain holds a fit failure, 2 for every other error.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    let fit_failed = err
        .chain()
        .filter_map(|e| e.downcast_ref::<Error>())
        .any(|e| matches!(e.root(), Error::FitFailure(_)));
    if fit_failed {
        3
    } else {
        2
    }
}

fn load_config(path: Option<&Path>, flags: &PipelineFlags) -> Result<PipelineConfig> {
    let mut cfg: PipelineConfig = match path {
        Some(p) => io::read_toml(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(t) = flags.threshold {
        cfg.detection.correlation_threshold = t;
    }
    if let Some(m) = flags.method {
        cfg.method = match m {
            MethodArg::Plain => FitMethod::Plain,
            MethodArg::Split => FitMethod::Split,
        };
    }
    if let Some(r) = flags.resolution {
        cfg.detection.resolution = match r {
            ResolutionArg::BestFirst => Resolution::BestFirst,
            ResolutionArg::ForwardScan => Resolution::ForwardScan,
        };
    }
    if let Some(s) = flags.scan_step {
        cfg.detection.scan_step = Some(s);
    }
    if let (Some(s), Some(e)) = (flags.window_start, flags.window_end) {
        cfg.window = Some((s, e));
    }
    if let Some(d) = flags.d_step {
        cfg.grid.d_step = d;
    }
    if let Some(t) = flags.theta_step_deg {
        cfg.grid.theta_step = t.to_radians();
    }
    if let Some(r) = flags.refine_levels {
        cfg.grid.refine_levels = r;
    }
    cfg.validate().context("invalid pipeline configuration")?;
    Ok(cfg)
}

fn load_spec(path: Option<&Path>, seed: Option<u64>) -> Result<ScenarioSpec> {
    let mut spec = match path {
        Some(p) => io::read_toml::<ScenarioSpec>(p)?,
        None => ScenarioSpec::paper_mirror(0),
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    Ok(spec)
}

fn pair_stem(anchor: &str, tx: &str) -> String {
    format!("{anchor}_{tx}")
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let mut spec = load_spec(args.scenario.as_deref(), args.seed)?;
    if let Some(s) = args.noise_sigma {
        spec.channel.noise_sigma = s;
    }
    let scenario = spec.build().context("invalid scenario")?;
    let input = PipelineInput::from_scenario(&scenario, &spec.channel)?;
    let out = &args.out;

    let mut observations = Vec::with_capacity(input.observations.len());
    for obs in &input.observations {
        let stem = pair_stem(&obs.anchor_id, &obs.tx_id);
        let trace = PathBuf::from(format!("traces/{stem}.csv"));
        io::write_trace(&out.join(&trace), &obs.trace)?;
        let truth = PathBuf::from(format!("truth/{stem}.csv"));
        io::write_sections(&out.join(&truth), obs.truth_sections.as_deref().unwrap_or(&[]))?;
        observations.push(ManifestObservation {
            anchor_id: obs.anchor_id.clone(),
            tx_id: obs.tx_id.clone(),
            trace,
            truth: Some(truth),
        });
    }

    let (tracks, pairs_path) = match &spec.camera {
        Some(cam) => {
            let path = PathBuf::from("calibration.csv");
            io::write_pairs(&out.join(&path), &calibration_pairs(&scenario, cam)?)?;
            (observe_tracks(&scenario, cam)?, Some(path))
        }
        None => (scenario.tracks.clone(), None),
    };
    let mut track_paths = Vec::with_capacity(tracks.len());
    for (i, tr) in tracks.iter().enumerate() {
        let path = PathBuf::from(format!("tracks/line_{}.csv", i + 1));
        io::write_track(&out.join(&path), tr, pairs_path.is_none())?;
        track_paths.push(path);
    }

    let manifest = Manifest {
        lambda: scenario.lambda,
        obstacle_width: spec.obstacle.width,
        sample_interval: Some(spec.channel.sample_interval),
        anchors: input.anchors.clone(),
        targets: input.targets.clone(),
        tracks: track_paths,
        calibration_pairs: pairs_path,
        observations,
    };
    io::write_toml(&out.join("manifest.toml"), &manifest)?;
    io::write_toml(&out.join("scenario.toml"), &spec)?;
    log::info!("wrote {} traces to {}", manifest.observations.len(), out.display());
    Ok(())
}

#[derive(Serialize)]
struct CalibrationOutput {
    model: CalibrationModel,
    pairs: usize,
    residual_rms: f64,
}

pub fn calibrate(args: &CalibrateArgs) -> Result<()> {
    let pairs = io::read_pairs(&args.pairs)?;
    let model = fit_calibration(&pairs)?;
    let out = CalibrationOutput {
        model,
        pairs: pairs.len(),
        residual_rms: model.residual_rms(&pairs),
    };
    io::emit(args.out.as_deref(), &io::to_json(&out)?)
}

fn load_calibration(path: &Path) -> Result<CalibrationModel> {
    #[derive(serde::Deserialize)]
    struct Wrapped {
        model: CalibrationModel,
    }
    let model = io::read_json::<Wrapped>(path)
        .map(|w| w.model)
        .or_else(|_| io::read_json::<CalibrationModel>(path))?;
    model.validate()?;
    Ok(model)
}

#[derive(Serialize)]
struct DetectOutput {
    start_time: f64,
    sample_interval: f64,
    samples: usize,
    events: Vec<BlockageEvent>,
}

pub fn detect(config: Option<&Path>, args: &DetectArgs) -> Result<()> {
    let cfg = load_config(config, &args.flags)?;
    let mut trace = io::read_trace(&args.trace, args.sample_interval)?;
    if let Some((s, e)) = cfg.window {
        trace = trace.window(s, e)?;
    }
    let events = detect_multi(&trace, &cfg.detection).map_err(|e| e.in_stage("detect"))?;
    let out = DetectOutput {
        start_time: trace.start_time(),
        sample_interval: trace.sample_interval(),
        samples: trace.len(),
        events,
    };
    io::emit(args.out.as_deref(), &io::to_json(&out)?)
}

#[derive(Serialize)]
struct LocalizeOutput {
    events: Vec<BlockageEvent>,
    boundary_points: Vec<BoundaryPoint>,
    dropped_events: usize,
    fit: FitResult,
    estimate: Point2,
}

pub fn localize(config: Option<&Path>, args: &LocalizeArgs) -> Result<()> {
    let cfg = load_config(config, &args.flags)?;
    let mut trace = io::read_trace(&args.trace, args.sample_interval)?;
    if let Some((s, e)) = cfg.window {
        trace = trace.window(s, e)?;
    }
    let calibration = args.calibration.as_deref().map(load_calibration).transpose()?;
    let tracks = args
        .tracks
        .iter()
        .map(|p| {
            let tr = io::read_track(p, args.width)?;
            match &calibration {
                Some(m) => Ok(m.apply_track(&tr)?),
                None => Ok(tr),
            }
        })
        .collect::<Result<Vec<ObstacleTrack>>>()?;
    let pose = AnchorPose {
        position: Point2::new(args.anchor_x, args.anchor_y),
        rotation: args.anchor_rotation,
    };
    let events = detect_multi(&trace, &cfg.detection).map_err(|e| e.in_stage("detect"))?;
    let points = collect_boundary_points(&tracks_in_anchor_frame(&tracks, &pose), &events);
    if points.dropped_events > 0 {
        log::warn!("{} of {} events not covered by a track", points.dropped_events, events.len());
    }
    if points.is_empty() {
        return Err(anyhow!(Error::FitFailure(format!(
            "insufficient events: {} detected, none covered by a track",
            events.len()
        ))));
    }
    let fitted = fit(&points, args.lambda, &cfg.grid, cfg.method).map_err(|e| e.in_stage("fit"))?;
    let out = LocalizeOutput {
        estimate: estimate_position(&pose, &fitted),
        dropped_events: points.dropped_events,
        boundary_points: points.points,
        events,
        fit: fitted,
    };
    io::emit(args.out.as_deref(), &io::to_json(&out)?)
}

fn load_data(path: &Path) -> Result<PipelineInput> {
    let manifest_path = if path.is_dir() {
        path.join("manifest.toml")
    } else {
        path.to_path_buf()
    };
    let root = manifest_path.parent().unwrap_or(Path::new("."));
    let m: Manifest = io::read_toml(&manifest_path)?;
    let calibration = match &m.calibration_pairs {
        Some(p) => Some(fit_calibration(&io::read_pairs(&root.join(p))?).context("camera calibration")?),
        None => None,
    };
    let tracks = m
        .tracks
        .iter()
        .map(|p| {
            let tr = io::read_track(&root.join(p), m.obstacle_width)?;
            match &calibration {
                Some(c) => Ok(c.apply_track(&tr)?),
                None => Ok(tr),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let observations = m
        .observations
        .iter()
        .map(|o| {
            Ok(PairObservation {
                anchor_id: o.anchor_id.clone(),
                tx_id: o.tx_id.clone(),
                trace: io::read_trace(&root.join(&o.trace), m.sample_interval)?,
                truth_sections: o.truth.as_ref().map(|p| io::read_sections(&root.join(p))).transpose()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PipelineInput {
        lambda: m.lambda,
        anchors: m.anchors,
        targets: m.targets,
        tracks,
        observations,
    })
}

pub fn evaluate(config: Option<&Path>, args: &EvaluateArgs) -> Result<()> {
    let cfg = load_config(config, &args.flags)?;
    let input = match (&args.data, &args.scenario) {
        (Some(d), _) => {
            if args.seed.is_some() {
                bail!("--seed only applies to --scenario");
            }
            load_data(d)?
        }
        (None, Some(s)) => {
            let spec = load_spec(Some(s), args.seed)?;
            let sc = spec.build().context("invalid scenario")?;
            PipelineInput::from_scenario(&sc, &spec.channel)?
        }
        (None, None) => bail!("either --data or --scenario is required"),
    };
    let report = run_pipeline(&input, &cfg)?;
    if !report.is_consistent() {
        bail!("report failed its internal consistency checks");
    }
    io::emit(args.out.as_deref(), &io::to_json(&report)?)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

pub fn export_plot(args: &ExportArgs) -> Result<()> {
    let report: RunReport = io::read_json(&args.report)?;
    let out = &args.out;

    io::write_rows(
        &out.join("boundary_cdf.csv"),
        &["anchor_id", "tx_id", "distance_m", "cdf"],
        report.pairs.iter().flat_map(|p| {
            let n = p.boundary_distances.len() as f64;
            p.boundary_distances.iter().enumerate().map(move |(i, d)| {
                vec![
                    p.anchor_id.clone(),
                    p.tx_id.clone(),
                    format!("{d:.6}"),
                    format!("{:.6}", (i + 1) as f64 / n),
                ]
            })
        }),
    )?;

    io::write_rows(
        &out.join("errors.csv"),
        &["anchor_id", "tx_id", "status", "events", "error_m", "x_m", "y_m", "d_m", "theta_deg"],
        report.pairs.iter().map(|p| {
            vec![
                p.anchor_id.clone(),
                p.tx_id.clone(),
                serde_json::to_value(&p.status)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default(),
                p.event_count.to_string(),
                opt(p.error),
                opt(p.estimate.map(|e| e.x)),
                opt(p.estimate.map(|e| e.y)),
                opt(p.fit.map(|f| f.params.d())),
                opt(p.fit.map(|f| f.params.theta().to_degrees())),
            ]
        }),
    )?;

    io::write_rows(
        &out.join("confusion.csv"),
        &["anchor_id", "tx_id", "tp_s", "tn_s", "fp_s", "fn_s", "horizon_s", "accuracy"],
        report.pairs.iter().filter_map(|p| {
            let c = p.confusion?;
            Some(vec![
                p.anchor_id.clone(),
                p.tx_id.clone(),
                format!("{:.6}", c.tp),
                format!("{:.6}", c.tn),
                format!("{:.6}", c.fp),
                format!("{:.6}", c.fn_),
                format!("{:.6}", c.horizon),
                format!("{:.6}", c.accuracy()),
            ])
        }),
    )?;

    io::write_rows(
        &out.join("triangulation.csv"),
        &["tx_id", "anchors", "error_m", "x_m", "y_m"],
        report.triangulation.iter().map(|t| {
            vec![
                t.tx_id.clone(),
                t.anchors_used.to_string(),
                opt(t.error),
                opt(t.estimate.map(|e| e.x)),
                opt(t.estimate.map(|e| e.y)),
            ]
        }),
    )?;
    Ok(())
}
