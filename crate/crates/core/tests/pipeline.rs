use fresnel_loc::blockage::BlockageEvent;
use fresnel_loc::boundary::collect_boundary_points;
use fresnel_loc::fitting::{fit, localize, FitMethod, GridConfig};
use fresnel_loc::geometry::{ObstacleTrack, Point2};
use fresnel_loc::pipeline::{run_pipeline, PairStatus, PipelineConfig, PipelineInput};
use fresnel_loc::simulator::{
    ground_truth_all, synth_track, tracks_in_anchor_frame, ChannelConfig, Node, Scenario,
};
use proptest::prelude::*;

const LAMBDA: f64 = 0.0574;

fn scenario(anchor: Node, tx: Point2, ys: &[f64], round_trips: u32, seed: u64) -> Scenario {
    let mut tracks: Vec<ObstacleTrack> = Vec::new();
    for &y in ys {
        let start = tracks.last().map_or(0.0, |t| t.end_time() + 1.0);
        let line = (Point2::new(0.3, y), Point2::new(5.7, y));
        tracks.push(synth_track(line, 0.57, 0.9, round_trips, 0.05, start).unwrap());
    }
    Scenario {
        anchors: vec![anchor],
        transmitters: vec![Node::new("T", tx)],
        lambda: LAMBDA,
        tracks,
        rng_seed: seed,
        arena: (Point2::new(0.0, 0.0), Point2::new(6.0, 6.0)),
    }
}

#[test]
fn rotated_anchor_localizes_through_full_pipeline() {
    let mut anchor = Node::new("A", Point2::new(2.5, 0.5));
    anchor.rotation = 0.7;
    let sc = scenario(anchor, Point2::new(3.6, 5.4), &[4.2, 4.8], 3, 11);
    let input = PipelineInput::from_scenario(&sc, &ChannelConfig::default()).unwrap();
    let report = run_pipeline(&input, &PipelineConfig::default()).unwrap();
    let pair = &report.pairs[0];
    assert_eq!(pair.status, PairStatus::Localized);
    assert!(pair.error.unwrap() < 1.0, "{pair:?}");
    assert!(pair.accuracy.unwrap() > 0.9, "{pair:?}");
    assert!(report.is_consistent());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Events placed exactly on the ground-truth sections give boundary
    /// points that pin the transmitter down.
    #[test]
    fn truth_sections_round_trip(
        tx_x in 1.0..5.0f64,
        tx_y in 4.6..5.4f64,
        rotation in -0.6..0.6f64,
    ) {
        let mut anchor = Node::new("A", Point2::new(3.0, 0.5));
        anchor.rotation = rotation;
        let pose = anchor.pose();
        let tx = Point2::new(tx_x, tx_y);
        let sc = scenario(anchor, tx, &[tx_y - 1.2, tx_y - 0.6], 1, 0);
        let events: Vec<BlockageEvent> = ground_truth_all(&sc, "A", "T")
            .unwrap()
            .into_iter()
            .map(|(s, e)| BlockageEvent { t_start: s, t_end: e, correlation: 1.0, template_index: 0 })
            .collect();
        prop_assert_eq!(events.len(), 4);
        let local = tracks_in_anchor_frame(&sc.tracks, &pose);
        let points = collect_boundary_points(&local, &events);
        prop_assert_eq!(points.len(), 8);
        let fitted = fit(&points, LAMBDA, &GridConfig::default(), FitMethod::Split).unwrap();
        let estimate = localize(&pose, &fitted);
        prop_assert!(estimate.distance(tx) < 0.01, "estimate {:?} truth {:?}", estimate, tx);
    }
}
