//! Planar geometry of the first Fresnel zone and of moving obstacles.
//!
//! Everything here is expressed in the anchor-relative frame: the receiving
//! anchor sits at the origin and the transmitter lies at distance `d` along
//! bearing `theta` measured counter-clockwise from +x.

pub(crate) mod ellipse;
mod point;
mod track;

pub use ellipse::{
    angle_diff, boundary_distance, curve_residual, ffz_contains, ffz_value, segment_intersects_ffz,
    segment_min_value, FresnelParams, Side,
};
pub use point::{AnchorPose, Point2, Segment2};
pub use track::{obstacle_region, ObstacleTrack, TrackSample};
