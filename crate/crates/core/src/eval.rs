//! Evaluation metrics: blockage-section confusion, boundary-point distance
//! distribution and localization error.

use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryPointSet;
use crate::error::{Error, Result};
use crate::geometry::{boundary_distance, FresnelParams, Point2};

/// Disjoint, sorted time intervals inside `[0, horizon]`.
///
/// Construction clips to the horizon and merges overlapping or touching
/// intervals, so every set satisfies the invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionSet {
    intervals: Vec<(f64, f64)>,
    horizon: f64,
}

impl SectionSet {
    pub fn new(intervals: impl IntoIterator<Item = (f64, f64)>, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Input(format!("horizon must be positive, got {horizon}")));
        }
        let mut clipped: Vec<(f64, f64)> = Vec::new();
        for (s, e) in intervals {
            if !(s.is_finite() && e.is_finite()) {
                return Err(Error::Input("section bounds must be finite".into()));
            }
            let (s, e) = (s.max(0.0), e.min(horizon));
            if e > s {
                clipped.push((s, e));
            }
        }
        clipped.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(clipped.len());
        for (s, e) in clipped {
            match merged.last_mut() {
                Some(last) if s <= last.1 => last.1 = last.1.max(e),
                _ => merged.push((s, e)),
            }
        }
        Ok(Self {
            intervals: merged,
            horizon,
        })
    }

    /// Sections on an absolute clock starting at `origin`, shifted so the
    /// horizon starts at zero.
    pub fn from_absolute(
        intervals: impl IntoIterator<Item = (f64, f64)>,
        origin: f64,
        horizon: f64,
    ) -> Result<Self> {
        Self::new(
            intervals.into_iter().map(|(s, e)| (s - origin, e - origin)),
            horizon,
        )
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Total covered time.
    pub fn length(&self) -> f64 {
        self.intervals.iter().map(|(s, e)| e - s).sum()
    }

    pub fn intersection_length(&self, other: &SectionSet) -> f64 {
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j, mut total) = (0, 0, 0.0);
        while i < a.len() && j < b.len() {
            let lo = a[i].0.max(b[j].0);
            let hi = a[i].1.min(b[j].1);
            if hi > lo {
                total += hi - lo;
            }
            if a[i].1 < b[j].1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        total
    }
}

/// Time spent in each cell of the detected-vs-true confusion table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionDurations {
    pub tp: f64,
    pub tn: f64,
    pub fp: f64,
    pub fn_: f64,
    pub horizon: f64,
}

/// Fractions of the horizon, in the same order as the durations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionRatios {
    pub tp: f64,
    pub tn: f64,
    pub fp: f64,
    pub fn_: f64,
}

impl ConfusionDurations {
    /// Durations from an external source; they need not add up to `horizon`.
    pub fn from_durations(tp: f64, tn: f64, fp: f64, fn_: f64, horizon: f64) -> Self {
        Self {
            tp,
            tn,
            fp,
            fn_,
            horizon,
        }
    }

    pub fn ratios(&self) -> ConfusionRatios {
        let h = self.horizon;
        ConfusionRatios {
            tp: self.tp / h,
            tn: self.tn / h,
            fp: self.fp / h,
            fn_: self.fn_ / h,
        }
    }

    /// `(tp + tn) / horizon`.
    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) / self.horizon
    }
}

/// Partition of the horizon into true/false positive/negative time.
pub fn confusion(detected: &SectionSet, truth: &SectionSet) -> Result<ConfusionDurations> {
    if (detected.horizon - truth.horizon).abs() > 1e-9 * truth.horizon.max(1.0) {
        return Err(Error::Input(format!(
            "horizon mismatch: detected {} s vs truth {} s",
            detected.horizon, truth.horizon
        )));
    }
    let tp = detected.intersection_length(truth);
    let fp = (detected.length() - tp).max(0.0);
    let fn_ = (truth.length() - tp).max(0.0);
    let tn = (truth.horizon - tp - fp - fn_).max(0.0);
    Ok(ConfusionDurations {
        tp,
        tn,
        fp,
        fn_,
        horizon: truth.horizon,
    })
}

/// Sorted distances from each boundary point to the true FFZ boundary.
pub fn boundary_distance_cdf(points: &BoundaryPointSet, truth: &FresnelParams) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(Error::Input("no boundary points".into()));
    }
    let mut d = points
        .positions()
        .map(|p| boundary_distance(p, truth))
        .collect::<Result<Vec<f64>>>()?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Linear-interpolated percentile (`q` in `[0, 100]`) of sorted data.
pub fn percentile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = (q.clamp(0.0, 100.0) / 100.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

pub fn median(values: &[f64]) -> Option<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    percentile(&v, 50.0)
}

pub fn localization_error(estimate: Point2, truth: Point2) -> f64 {
    estimate.distance(truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{BoundaryPoint, PointKind};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn section_normalization() {
        let s = SectionSet::new([(5.0, 7.0), (1.0, 2.0), (2.0, 3.0), (6.0, 12.0), (-1.0, 0.5)], 10.0).unwrap();
        assert_eq!(s.intervals(), &[(0.0, 0.5), (1.0, 3.0), (5.0, 10.0)]);
        assert_abs_diff_eq!(s.length(), 7.5, epsilon = 1e-12);
        assert!(SectionSet::new([(0.0, 1.0)], 0.0).is_err());
    }

    #[test]
    fn confusion_examples() {
        let truth = SectionSet::new([(1.0, 3.0), (6.0, 7.0)], 10.0).unwrap();
        let c = confusion(&truth, &truth).unwrap();
        assert_eq!((c.fp, c.fn_), (0.0, 0.0));
        assert_abs_diff_eq!(c.tp, 3.0, epsilon = 1e-12);

        let empty = SectionSet::new([], 10.0).unwrap();
        let c = confusion(&empty, &truth).unwrap();
        assert_eq!((c.tp, c.fp), (0.0, 0.0));
        assert_abs_diff_eq!(c.fn_, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.tn, 7.0, epsilon = 1e-12);

        let other = SectionSet::new([], 11.0).unwrap();
        assert!(confusion(&other, &truth).is_err());
    }

    #[test]
    fn published_durations_give_published_ratios() {
        let c = ConfusionDurations::from_durations(99.0, 547.0, 19.0, 43.0, 713.0);
        let r = c.ratios();
        assert_abs_diff_eq!(100.0 * r.tp, 13.9, epsilon = 0.1);
        assert_abs_diff_eq!(100.0 * r.tn, 76.7, epsilon = 0.1);
        assert_abs_diff_eq!(100.0 * r.fp, 2.7, epsilon = 0.1);
        assert_abs_diff_eq!(100.0 * r.fn_, 6.0, epsilon = 0.1);
        assert!(c.accuracy() > 0.9);
    }

    #[test]
    fn cdf_examples() {
        let fp = FresnelParams::new(4.0, 0.0, 0.06).unwrap();
        let mk = |p: Point2| BoundaryPoint { position: p, kind: PointKind::Start, event_index: 0, side: None };
        let on = BoundaryPointSet::from_points((0..6).map(|k| mk(fp.boundary_point(k as f64))).collect());
        assert!(boundary_distance_cdf(&on, &fp).unwrap().iter().all(|&d| d < 1e-6));
        let mut off = on.clone();
        off.points.push(mk(Point2::new(4.515, 0.0)));
        let cdf = boundary_distance_cdf(&off, &fp).unwrap();
        assert_abs_diff_eq!(*cdf.last().unwrap(), 0.5, epsilon = 1e-6);
        assert!(boundary_distance_cdf(&BoundaryPointSet::default(), &fp).is_err());
    }

    #[test]
    fn error_and_percentiles() {
        assert_eq!(localization_error(Point2::new(1.0, 2.0), Point2::new(1.0, 2.0)), 0.0);
        assert_abs_diff_eq!(localization_error(Point2::ORIGIN, Point2::new(3.0, 4.0)), 5.0, epsilon = 1e-12);
        assert_eq!(percentile(&[1.0, 2.0, 3.0], 50.0), Some(2.0));
        assert_eq!(percentile(&[1.0, 2.0], 50.0), Some(1.5));
        assert_eq!(median(&[3.0, 1.0, 2.0, 10.0]), Some(2.5));
        assert_eq!(percentile(&[], 50.0), None);
    }

    fn arb_sections() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((0.0f64..100.0, 0.0f64..10.0).prop_map(|(s, l)| (s, s + l)), 0..8)
    }

    proptest! {
        #[test]
        fn confusion_partitions_and_is_symmetric(a in arb_sections(), b in arb_sections()) {
            let det = SectionSet::new(a, 100.0).unwrap();
            let gt = SectionSet::new(b, 100.0).unwrap();
            let c = confusion(&det, &gt).unwrap();
            prop_assert!((c.tp + c.tn + c.fp + c.fn_ - 100.0).abs() < 1e-6);
            let swapped = confusion(&gt, &det).unwrap();
            prop_assert!((c.fp - swapped.fn_).abs() < 1e-9);
            prop_assert!((c.fn_ - swapped.fp).abs() < 1e-9);
            prop_assert!((c.tp - swapped.tp).abs() < 1e-9);
            for w in det.intervals().windows(2) {
                prop_assert!(w[0].1 < w[1].0);
            }
        }
    }
}
