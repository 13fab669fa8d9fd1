//! Fresnel-boundary points from blockage timings and obstacle tracks.
//!
//! When a blockage starts, the first part of the obstacle to touch the zone
//! is its leading edge; when it ends, the last part to leave is its trailing
//! edge. Each event therefore yields one start point and one end point.

use serde::{Deserialize, Serialize};

use crate::blockage::BlockageEvent;
use crate::error::Result;
use crate::geometry::{ObstacleTrack, Point2, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Start,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub position: Point2,
    pub kind: PointKind,
    pub event_index: usize,
    /// `None` until [`split_sides`] has run.
    pub side: Option<Side>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundaryPointSet {
    pub points: Vec<BoundaryPoint>,
    /// Events skipped because their start or end time fell outside every track.
    pub dropped_events: usize,
}

impl BoundaryPointSet {
    pub fn from_points(points: Vec<BoundaryPoint>) -> Self {
        Self {
            points,
            dropped_events: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn side(&self, side: Side) -> impl Iterator<Item = &BoundaryPoint> {
        self.points.iter().filter(move |p| p.side == Some(side))
    }

    pub fn positions(&self) -> impl Iterator<Item = Point2> + '_ {
        self.points.iter().map(|p| p.position)
    }
}

/// Leading edge of the obstacle at the blockage start.
pub fn boundary_point_start(track: &ObstacleTrack, t_s: f64) -> Result<BoundaryPoint> {
    Ok(BoundaryPoint {
        position: track.leading_edge(t_s)?,
        kind: PointKind::Start,
        event_index: 0,
        side: None,
    })
}

/// Trailing edge of the obstacle at the blockage end.
pub fn boundary_point_end(track: &ObstacleTrack, t_e: f64) -> Result<BoundaryPoint> {
    Ok(BoundaryPoint {
        position: track.trailing_edge(t_e)?,
        kind: PointKind::End,
        event_index: 0,
        side: None,
    })
}

/// Labels the start/end points of one event with opposite sides of the
/// estimated anchor–transmitter line.
///
/// The line runs from the anchor (origin) through the midpoint of the two
/// points. The end point is on the right when it lies clockwise of that
/// line, and the start point then takes the left. For midpoints with
/// positive x this is the slope test `g(x_e) > y_e`; the cross-product form
/// keeps the orientation consistent for any bearing, including a vertical
/// line.
pub fn split_sides(start: BoundaryPoint, end: BoundaryPoint) -> (BoundaryPoint, BoundaryPoint) {
    let mid = (start.position + end.position) * 0.5;
    let end_is_right = mid.cross(end.position) < 0.0;
    let (s_side, e_side) = if end_is_right {
        (Side::Left, Side::Right)
    } else {
        (Side::Right, Side::Left)
    };
    (
        BoundaryPoint {
            side: Some(s_side),
            ..start
        },
        BoundaryPoint {
            side: Some(e_side),
            ..end
        },
    )
}

/// Boundary points for every event whose start and end both fall inside one
/// track. Points are side-labelled and carry the event's index in `events`.
pub fn collect_boundary_points(
    tracks: &[ObstacleTrack],
    events: &[BlockageEvent],
) -> BoundaryPointSet {
    let mut set = BoundaryPointSet::default();
    for (index, ev) in events.iter().enumerate() {
        let Some(track) = tracks
            .iter()
            .find(|tr| tr.covers(ev.t_start) && tr.covers(ev.t_end))
        else {
            log::debug!(
                "dropping event {index} ([{:.3}, {:.3}] s): not covered by any track",
                ev.t_start,
                ev.t_end
            );
            set.dropped_events += 1;
            continue;
        };
        // both times are inside the span, so these cannot fail
        let (Ok(s), Ok(e)) = (
            boundary_point_start(track, ev.t_start),
            boundary_point_end(track, ev.t_end),
        ) else {
            set.dropped_events += 1;
            continue;
        };
        let (s, e) = split_sides(
            BoundaryPoint {
                event_index: index,
                ..s
            },
            BoundaryPoint {
                event_index: index,
                ..e
            },
        );
        set.points.push(s);
        set.points.push(e);
    }
    set
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::TrackSample;
    use approx::assert_abs_diff_eq;

    fn still(center: Point2, dir: Point2, w: f64) -> ObstacleTrack {
        ObstacleTrack::new(
            vec![
                TrackSample { t: 0.0, center, direction: dir },
                TrackSample { t: 10.0, center, direction: dir },
            ],
            w,
        )
        .unwrap()
    }

    fn bp(x: f64, y: f64, kind: PointKind) -> BoundaryPoint {
        BoundaryPoint {
            position: Point2::new(x, y),
            kind,
            event_index: 0,
            side: None,
        }
    }

    #[test]
    fn start_and_end_points() {
        let tr = still(Point2::new(1.0, 2.0), Point2::new(1.0, 0.0), 0.9);
        let s = boundary_point_start(&tr, 1.0).unwrap();
        assert_abs_diff_eq!(s.position.x, 1.45, epsilon = 1e-12);
        assert_abs_diff_eq!(s.position.y, 2.0, epsilon = 1e-12);
        assert_eq!(s.kind, PointKind::Start);
        let e = boundary_point_end(&tr, 1.0).unwrap();
        assert_abs_diff_eq!(e.position.x, 0.55, epsilon = 1e-12);

        let rev = still(Point2::new(1.0, 2.0), Point2::new(-1.0, 0.0), 0.9);
        assert_abs_diff_eq!(boundary_point_start(&rev, 1.0).unwrap().position.x, 0.55, epsilon = 1e-12);
        assert!(boundary_point_start(&rev, 11.0).is_err());
    }

    #[test]
    fn edge_offsets_along_motion() {
        let tr = ObstacleTrack::from_positions(
            &[(0.0, Point2::new(0.0, 1.0)), (4.0, Point2::new(2.0, 3.0))],
            0.8,
        )
        .unwrap();
        let s = boundary_point_start(&tr, 1.0).unwrap().position;
        let e = boundary_point_end(&tr, 3.0).unwrap().position;
        let n1 = tr.direction_at(1.0).unwrap();
        let n3 = tr.direction_at(3.0).unwrap();
        assert_abs_diff_eq!((s - tr.center_at(1.0).unwrap()).dot(n1), 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!((e - tr.center_at(3.0).unwrap()).dot(n3), -0.4, epsilon = 1e-12);
    }

    #[test]
    fn split_examples() {
        let (s, e) = split_sides(bp(1.0, 1.0, PointKind::Start), bp(3.0, -1.0, PointKind::End));
        assert_eq!((s.side, e.side), (Some(Side::Left), Some(Side::Right)));

        let (s, e) = split_sides(bp(3.0, -1.0, PointKind::Start), bp(1.0, 1.0, PointKind::End));
        assert_eq!((s.side, e.side), (Some(Side::Right), Some(Side::Left)));

        let (s, e) = split_sides(bp(1.0, 1.0, PointKind::Start), bp(1.0, -1.0, PointKind::End));
        assert_eq!((s.side, e.side), (Some(Side::Left), Some(Side::Right)));
    }

    #[test]
    fn split_matches_slope_test_for_positive_x_midpoints() {
        let pts = [(1.0, 2.0), (2.5, -0.3), (0.7, 0.1), (4.0, 1.0), (3.2, -2.2)];
        for &(sx, sy) in &pts {
            for &(ex, ey) in &pts {
                let mid_x = (sx + ex) / 2.0;
                let mid_y = (sy + ey) / 2.0;
                if (sx, sy) == (ex, ey) || mid_x <= 0.0 {
                    continue;
                }
                let g = mid_y / mid_x * ex;
                let (s, e) = split_sides(bp(sx, sy, PointKind::Start), bp(ex, ey, PointKind::End));
                let expected = if g > ey { (Side::Left, Side::Right) } else { (Side::Right, Side::Left) };
                assert_eq!((s.side.unwrap(), e.side.unwrap()), expected);
            }
        }
    }

    #[test]
    fn split_handles_vertical_and_negative_x_lines() {
        // line along +y: a point at negative x is counter-clockwise (left)
        let (s, e) = split_sides(bp(-0.2, 2.0, PointKind::Start), bp(0.2, 2.0, PointKind::End));
        assert_eq!((s.side, e.side), (Some(Side::Left), Some(Side::Right)));
        // line along -x: positive y is clockwise (right)
        let (s, e) = split_sides(bp(-2.0, -0.2, PointKind::Start), bp(-2.0, 0.2, PointKind::End));
        assert_eq!((s.side, e.side), (Some(Side::Left), Some(Side::Right)));
    }

    #[test]
    fn collect_labels_and_drops() {
        let tr = ObstacleTrack::from_positions(
            &[(0.0, Point2::new(0.0, -2.0)), (10.0, Point2::new(0.0, 2.0))],
            0.5,
        )
        .unwrap();
        let ev = |s: f64, e: f64| BlockageEvent {
            t_start: s,
            t_end: e,
            correlation: 0.9,
            template_index: 0,
        };
        let set = collect_boundary_points(std::slice::from_ref(&tr), &[ev(2.0, 4.0), ev(9.0, 11.0)]);
        assert_eq!(set.len(), 2);
        assert_eq!(set.dropped_events, 1);
        assert_eq!(set.side(Side::Left).count(), 1);
        assert_eq!(set.side(Side::Right).count(), 1);
        assert!(set.points.iter().all(|p| p.event_index == 0));

        let many: Vec<BlockageEvent> = (0..12).map(|i| ev(0.5 * i as f64, 0.5 * i as f64 + 1.0)).collect();
        let set = collect_boundary_points(std::slice::from_ref(&tr), &many);
        assert_eq!(set.len(), 24);
        for pair in set.points.chunks(2) {
            assert_eq!(pair[0].event_index, pair[1].event_index);
            assert_ne!(pair[0].side, pair[1].side);
        }
        assert!(collect_boundary_points(&[tr], &[]).is_empty());
    }
}
