//! Grid-search fit of the first Fresnel ellipse to boundary points.
//!
//! Two losses are available. The plain loss sums `(F - 1)^2` over all
//! points. The split loss fits each side-labelled subset to its own half of
//! the ellipse and averages per side, so a side with many points does not
//! swamp the other.

use std::cmp::Ordering;
use std::f64::consts::TAU;

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryPointSet;
use crate::error::{Error, Result};
use crate::geometry::ellipse::{wrap_angle, EllipseFrame};
use crate::geometry::{AnchorPose, FresnelParams, Point2, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FitMethod {
    Plain,
    #[default]
    Split,
}

/// Search grid over distance and bearing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub d_range: (f64, f64),
    pub d_step: f64,
    pub theta_range: (f64, f64),
    pub theta_step: f64,
    /// Rounds of 10x finer local search around the incumbent.
    pub refine_levels: u32,
    /// Finish with a continuous simplex search started from the grid optimum.
    pub polish: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            d_range: (0.3, 12.0),
            d_step: 0.05,
            theta_range: (0.0, TAU),
            theta_step: 0.5f64.to_radians(),
            refine_levels: 2,
            polish: true,
        }
    }
}

/// Half-width, in parent steps, of each refinement window.
const REFINE_HALF_SPAN: i64 = 2;
const REFINE_FACTOR: f64 = 10.0;
const MAX_RECENTRES: usize = 50;
const POLISH_ITERS: u64 = 400;

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        let (dlo, dhi) = self.d_range;
        let (tlo, thi) = self.theta_range;
        let ok = dlo > 0.0
            && dlo < dhi
            && dhi.is_finite()
            && tlo < thi
            && tlo.is_finite()
            && thi.is_finite()
            && self.d_step > 0.0
            && self.theta_step > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid search grid {self:?}")))
        }
    }

    fn theta_periodic(&self) -> bool {
        self.theta_range.1 - self.theta_range.0 >= TAU - 1e-12
    }

    /// Final step sizes after all refinement rounds.
    pub fn final_steps(&self) -> (f64, f64) {
        let f = REFINE_FACTOR.powi(self.refine_levels as i32);
        (self.d_step / f, self.theta_step / f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: FresnelParams,
    pub loss: f64,
    pub point_count: usize,
    /// Method actually used (a split request falls back to plain when a side is empty).
    pub method: FitMethod,
}

/// Sum of `(F - 1)^2` over all points.
pub fn plain_loss(points: &BoundaryPointSet, fp: &FresnelParams) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Input("no boundary points to evaluate".into()));
    }
    let pts: Vec<Point2> = points.positions().collect();
    Ok(plain_loss_frame(&pts, &fp.frame()))
}

/// Per-side mean of squared split-curve residuals. A side with no points
/// makes this fall back to [`plain_loss`].
pub fn split_loss(points: &BoundaryPointSet, fp: &FresnelParams) -> Result<f64> {
    let sides = SidedPoints::from_set(points);
    if sides.left.is_empty() || sides.right.is_empty() {
        log::warn!("split loss needs points on both sides; falling back to plain loss");
        return plain_loss(points, fp);
    }
    Ok(sides.loss(&fp.frame()))
}

#[inline]
fn plain_loss_frame(points: &[Point2], frame: &EllipseFrame) -> f64 {
    points
        .iter()
        .map(|&p| {
            let r = frame.value(p) - 1.0;
            r * r
        })
        .sum()
}

/// Residual of one point against its half-curve, with a linear penalty in
/// units of wavelength for points beyond the major-axis band.
#[inline]
fn penalized_residual(frame: &EllipseFrame, p: Point2, side: Side) -> f64 {
    match frame.curve_residual(p, side) {
        Ok(r) => r,
        Err((excess, limit)) => (excess - limit) / frame.lambda + 1.0,
    }
}

struct SidedPoints {
    left: Vec<Point2>,
    right: Vec<Point2>,
}

impl SidedPoints {
    fn from_set(points: &BoundaryPointSet) -> Self {
        Self {
            left: points.side(Side::Left).map(|p| p.position).collect(),
            right: points.side(Side::Right).map(|p| p.position).collect(),
        }
    }

    #[inline]
    fn loss(&self, frame: &EllipseFrame) -> f64 {
        let mean_sq = |pts: &[Point2], side: Side| {
            pts.iter()
                .map(|&p| {
                    let r = penalized_residual(frame, p, side);
                    r * r
                })
                .sum::<f64>()
                / pts.len() as f64
        };
        mean_sq(&self.right, Side::Right) + mean_sq(&self.left, Side::Left)
    }
}

enum Objective {
    Plain(Vec<Point2>),
    Split(SidedPoints),
}

impl Objective {
    #[inline]
    fn eval(&self, frame: &EllipseFrame) -> f64 {
        let v = match self {
            Objective::Plain(pts) => plain_loss_frame(pts, frame),
            Objective::Split(s) => s.loss(frame),
        };
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    loss: f64,
    d: f64,
    theta: f64,
}

/// Loss first, then smaller d, then smaller theta.
fn cell_order(a: &Cell, b: &Cell) -> Ordering {
    a.loss
        .total_cmp(&b.loss)
        .then(a.d.total_cmp(&b.d))
        .then(a.theta.total_cmp(&b.theta))
}

fn search(objective: &Objective, lambda: f64, ds: &[f64], thetas: &[f64]) -> Option<Cell> {
    let trig: Vec<(f64, f64, f64)> = thetas
        .iter()
        .map(|&t| {
            let (s, c) = t.sin_cos();
            (t, c, s)
        })
        .collect();
    ds.par_iter()
        .filter_map(|&d| {
            trig.iter()
                .map(|&(theta, c, s)| Cell {
                    loss: objective.eval(&EllipseFrame::with_trig(d, c, s, lambda)),
                    d,
                    theta,
                })
                .min_by(cell_order)
        })
        .min_by(cell_order)
}

fn axis(lo: f64, hi: f64, step: f64, inclusive: bool) -> Vec<f64> {
    let span = (hi - lo) / step;
    let n = if inclusive {
        (span + 1e-9).floor() as usize + 1
    } else {
        (span - 1e-9).ceil() as usize
    };
    (0..n).map(|i| lo + i as f64 * step).collect()
}

struct PolishCost<'a> {
    objective: &'a Objective,
    lambda: f64,
    d_range: (f64, f64),
}

impl CostFunction for PolishCost<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let (d, theta) = (x[0], x[1]);
        if d < self.d_range.0 || d > self.d_range.1 {
            return Ok(f64::INFINITY);
        }
        let (s, c) = theta.sin_cos();
        Ok(self.objective.eval(&EllipseFrame::with_trig(d, c, s, self.lambda)))
    }
}

fn polish(objective: &Objective, lambda: f64, start: Cell, steps: (f64, f64), d_range: (f64, f64)) -> Option<Cell> {
    let cost = PolishCost { objective, lambda, d_range };
    let x0 = vec![start.d, start.theta];
    let simplex = vec![
        x0.clone(),
        vec![start.d + steps.0, start.theta],
        vec![start.d, start.theta + steps.1],
    ];
    let solver = NelderMead::new(simplex).with_sd_tolerance(1e-15).ok()?;
    let res = Executor::new(cost, solver)
        .configure(|state| state.max_iters(POLISH_ITERS))
        .run()
        .ok()?;
    let best = res.state().get_best_param()?;
    let loss = res.state().get_best_cost();
    loss.is_finite().then(|| Cell { loss, d: best[0], theta: best[1] })
}

/// Exhaustive grid search for `(d, theta)` followed by `refine_levels` rounds
/// of local refinement, each 10x finer and spanning two parent steps on
/// either side of the incumbent. A level re-centres its window until the
/// incumbent stops improving. With `polish` set, a simplex search from the
/// grid optimum replaces it when it lowers the loss.
pub fn fit(
    points: &BoundaryPointSet,
    lambda: f64,
    grid: &GridConfig,
    method: FitMethod,
) -> Result<FitResult> {
    grid.validate()?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("wavelength must be positive, got {lambda}")));
    }
    if points.is_empty() {
        return Err(Error::Input("no boundary points to fit".into()));
    }
    let sided = SidedPoints::from_set(points);
    let (objective, method) = match method {
        FitMethod::Split if !sided.left.is_empty() && !sided.right.is_empty() => {
            (Objective::Split(sided), FitMethod::Split)
        }
        FitMethod::Split => {
            log::warn!("split fit needs points on both sides; using plain loss");
            (Objective::Plain(points.positions().collect()), FitMethod::Plain)
        }
        FitMethod::Plain => (Objective::Plain(points.positions().collect()), FitMethod::Plain),
    };

    let periodic = grid.theta_periodic();
    let (dlo, dhi) = grid.d_range;
    let (tlo, thi) = grid.theta_range;
    let ds = axis(dlo, dhi, grid.d_step, true);
    let thetas: Vec<f64> = axis(tlo, thi, grid.theta_step, !periodic)
        .into_iter()
        .map(|t| if periodic { wrap_angle(t) } else { t })
        .collect();
    let mut best = search(&objective, lambda, &ds, &thetas)
        .filter(|c| c.loss.is_finite())
        .ok_or_else(|| Error::FitFailure("loss is non-finite over the whole grid".into()))?;

    let (mut d_step, mut t_step) = (grid.d_step, grid.theta_step);
    for _ in 0..grid.refine_levels {
        d_step /= REFINE_FACTOR;
        t_step /= REFINE_FACTOR;
        // re-centre while the incumbent keeps improving
        for _ in 0..MAX_RECENTRES {
            let span = REFINE_HALF_SPAN * REFINE_FACTOR as i64;
            let ds: Vec<f64> = (-span..=span)
                .map(|i| best.d + i as f64 * d_step)
                .filter(|&d| d >= dlo - 1e-12 && d <= dhi + 1e-12)
                .collect();
            let thetas: Vec<f64> = (-span..=span)
                .map(|j| best.theta + j as f64 * t_step)
                .filter_map(|t| {
                    if periodic {
                        Some(wrap_angle(t))
                    } else {
                        (t >= tlo - 1e-12 && t <= thi + 1e-12).then_some(t)
                    }
                })
                .collect();
            match search(&objective, lambda, &ds, &thetas) {
                Some(c) if c.loss < best.loss => best = c,
                _ => break,
            }
        }
    }

    if grid.polish {
        if let Some(c) = polish(&objective, lambda, best, (d_step, t_step), (dlo, dhi)) {
            if c.loss < best.loss {
                best = c;
            }
        }
    }
    let theta = if periodic { wrap_angle(best.theta) } else { best.theta.clamp(tlo, thi) };

    Ok(FitResult {
        params: FresnelParams::new(best.d, theta, lambda)?,
        loss: best.loss,
        point_count: points.len(),
        method,
    })
}

/// World-frame transmitter position implied by a fit.
pub fn localize(pose: &AnchorPose, fit: &FitResult) -> Point2 {
    pose.to_world(fit.params.transmitter())
}
