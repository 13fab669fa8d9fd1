//! Multi-anchor RSSI triangulation, kept as a reference point for the
//! single-anchor method.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Log-distance path loss `r = A - 10 n log10(d)` with `A` the power at 1 m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    pub exponent: f64,
    pub ref_power: f64,
}

impl PathLossModel {
    pub fn new(exponent: f64, ref_power: f64) -> Result<Self> {
        let m = Self { exponent, ref_power };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1.5..=6.0).contains(&self.exponent) {
            return Err(Error::Config(format!(
                "path-loss exponent {} outside [1.5, 6]",
                self.exponent
            )));
        }
        if !self.ref_power.is_finite() {
            return Err(Error::Config("reference power is not finite".into()));
        }
        Ok(())
    }

    /// Received power at `distance` meters.
    pub fn power_at(&self, distance: f64) -> f64 {
        self.ref_power - 10.0 * self.exponent * distance.log10()
    }
}

/// Distance implied by a received power.
pub fn invert_path_loss(power: f64, model: &PathLossModel) -> f64 {
    10f64.powf((model.ref_power - power) / (10.0 * model.exponent))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorReading {
    pub anchor_position: Point2,
    pub mean_power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trilateration {
    pub position: Point2,
    /// Sum of squared range residuals at the solution.
    pub cost: f64,
    /// Anchors were (nearly) collinear; the solution may be mirrored.
    pub collinear: bool,
}

fn range_cost(p: Point2, anchors: &[(Point2, f64)]) -> f64 {
    anchors
        .iter()
        .map(|&(a, r)| {
            let e = p.distance(a) - r;
            e * e
        })
        .sum()
}

/// Levenberg–Marquardt on the range residuals `|p - a_i| - r_i`.
fn refine(mut p: Point2, anchors: &[(Point2, f64)]) -> (Point2, f64) {
    let mut cost = range_cost(p, anchors);
    let mut damping = 1e-3;
    for _ in 0..200 {
        // normal equations J^T J dp = -J^T r
        let (mut h00, mut h01, mut h11, mut g0, mut g1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(a, r) in anchors {
            let diff = p - a;
            let dist = diff.norm();
            let (jx, jy) = if dist > 1e-12 {
                (diff.x / dist, diff.y / dist)
            } else {
                (0.0, 0.0)
            };
            let res = dist - r;
            h00 += jx * jx;
            h01 += jx * jy;
            h11 += jy * jy;
            g0 += jx * res;
            g1 += jy * res;
        }
        let mut improved = false;
        for _ in 0..20 {
            let a00 = h00 * (1.0 + damping) + 1e-12;
            let a11 = h11 * (1.0 + damping) + 1e-12;
            let det = a00 * a11 - h01 * h01;
            if det.abs() < 1e-300 {
                damping *= 10.0;
                continue;
            }
            let dx = -(a11 * g0 - h01 * g1) / det;
            let dy = -(a00 * g1 - h01 * g0) / det;
            let cand = Point2::new(p.x + dx, p.y + dy);
            let c = range_cost(cand, anchors);
            if c < cost {
                let step = dx.hypot(dy);
                p = cand;
                let gain = cost - c;
                cost = c;
                damping = (damping / 10.0).max(1e-12);
                improved = true;
                if step < 1e-12 || gain < 1e-20 {
                    return (p, cost);
                }
                break;
            }
            damping *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (p, cost)
}

/// Intersection points of two circles; for disjoint or nested circles the
/// point on the center line between them.
fn circle_seeds(a: (Point2, f64), b: (Point2, f64)) -> Vec<Point2> {
    let (ca, ra) = a;
    let (cb, rb) = b;
    let d = ca.distance(cb);
    if d < 1e-12 {
        return vec![];
    }
    let u = (cb - ca) * (1.0 / d);
    if d > ra + rb || d < (ra - rb).abs() {
        // pick the point splitting the gap between the two circles
        let along = if d > ra + rb {
            ra + (d - ra - rb) / 2.0
        } else if ra > rb {
            (ra + d + rb) / 2.0
        } else {
            -(rb - d + ra) / 2.0
        };
        return vec![ca + u * along];
    }
    let x = (d * d + ra * ra - rb * rb) / (2.0 * d);
    let h = (ra * ra - x * x).max(0.0).sqrt();
    let base = ca + u * x;
    let perp = Point2::new(-u.y, u.x);
    vec![base + perp * h, base - perp * h]
}

fn is_collinear(points: &[Point2]) -> bool {
    let n = points.len() as f64;
    let mean = points.iter().fold(Point2::ORIGIN, |acc, &p| acc + p) * (1.0 / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &p in points {
        let q = p - mean;
        sxx += q.x * q.x;
        sxy += q.x * q.y;
        syy += q.y * q.y;
    }
    let tr = sxx + syy;
    let det = sxx * syy - sxy * sxy;
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    let small = tr / 2.0 - disc;
    small <= 1e-9 * tr.max(1e-12)
}

/// Position minimizing squared range residuals to at least three anchors.
///
/// Starts from every pairwise circle intersection and the anchor centroid,
/// refines each with Levenberg–Marquardt, and keeps the lowest cost.
/// Readings are sorted first so the result does not depend on their order.
pub fn trilaterate(readings: &[AnchorReading], model: &PathLossModel) -> Result<Trilateration> {
    if readings.len() < 3 {
        return Err(Error::Input(format!(
            "triangulation needs at least 3 anchors, got {}",
            readings.len()
        )));
    }
    model.validate()?;
    if readings
        .iter()
        .any(|r| !(r.anchor_position.is_finite() && r.mean_power.is_finite()))
    {
        return Err(Error::Input("non-finite anchor reading".into()));
    }
    let mut sorted = readings.to_vec();
    sorted.sort_by(|a, b| {
        a.anchor_position
            .x
            .total_cmp(&b.anchor_position.x)
            .then(a.anchor_position.y.total_cmp(&b.anchor_position.y))
            .then(a.mean_power.total_cmp(&b.mean_power))
    });
    let anchors: Vec<(Point2, f64)> = sorted
        .iter()
        .map(|r| (r.anchor_position, invert_path_loss(r.mean_power, model)))
        .collect();
    let positions: Vec<Point2> = anchors.iter().map(|a| a.0).collect();
    let collinear = is_collinear(&positions);
    if collinear {
        log::warn!("anchors are collinear; triangulation is ambiguous");
    }

    let centroid = positions.iter().fold(Point2::ORIGIN, |acc, &p| acc + p) * (1.0 / positions.len() as f64);
    let mut seeds = vec![centroid];
    for i in 0..anchors.len() {
        for j in i + 1..anchors.len() {
            seeds.extend(circle_seeds(anchors[i], anchors[j]));
        }
    }
    let (position, cost) = seeds
        .into_iter()
        .map(|s| refine(s, &anchors))
        .min_by(|a, b| {
            a.1.total_cmp(&b.1)
                .then(a.0.x.total_cmp(&b.0.x))
                .then(a.0.y.total_cmp(&b.0.y))
        })
        .expect("at least the centroid seed");
    Ok(Trilateration {
        position,
        cost,
        collinear,
    })
}
