//! Blockage-event detection from a received-power time series.
//!
//! A blockage shows up as a trapezoidal dip: power ramps down when the
//! obstacle enters the first Fresnel zone, stays low while it is inside and
//! ramps back up as it leaves. Dips are found by zero-mean normalized
//! correlation against a bank of piecewise-linear templates, local-maximum
//! peak picking, a correlation threshold, and a resolution step that reduces
//! detections from competing templates to non-overlapping events.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniformly sampled received power, in dBm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RssiTrace {
    samples: Vec<f64>,
    sample_interval: f64,
    start_time: f64,
}

impl RssiTrace {
    pub fn new(samples: Vec<f64>, sample_interval: f64, start_time: f64) -> Result<Self> {
        if !(sample_interval > 0.0 && sample_interval.is_finite()) {
            return Err(Error::Input(format!(
                "sample interval must be positive, got {sample_interval}"
            )));
        }
        if !start_time.is_finite() {
            return Err(Error::Input("trace start time is not finite".into()));
        }
        if samples.is_empty() {
            return Err(Error::Input("trace holds no samples".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("trace sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_interval,
            start_time,
        })
    }

    /// Resamples packet-paced `(time, power)` readings onto a uniform grid by
    /// linear interpolation. Timestamps must be strictly increasing.
    pub fn from_timestamped(readings: &[(f64, f64)], sample_interval: f64) -> Result<Self> {
        if readings.len() < 2 {
            return Err(Error::Input("need at least two readings to resample".into()));
        }
        if !(sample_interval > 0.0 && sample_interval.is_finite()) {
            return Err(Error::Input(format!(
                "sample interval must be positive, got {sample_interval}"
            )));
        }
        if let Some(i) = readings.windows(2).position(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Input(format!(
                "trace timestamps must be strictly increasing (row {})",
                i + 1
            )));
        }
        let t0 = readings[0].0;
        let span = readings[readings.len() - 1].0 - t0;
        let count = (span / sample_interval + 1e-9).floor() as usize + 1;
        let mut j = 0;
        let samples = (0..count)
            .map(|i| {
                let t = t0 + i as f64 * sample_interval;
                while j + 2 < readings.len() && readings[j + 1].0 <= t {
                    j += 1;
                }
                let (ta, ra) = readings[j];
                let (tb, rb) = readings[j + 1];
                let f = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
                ra + (rb - ra) * f
            })
            .collect();
        Self::new(samples, sample_interval, t0)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_interval(&self) -> f64 {
        self.sample_interval
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn end_time(&self) -> f64 {
        self.time_at(self.samples.len() - 1)
    }

    /// `(count - 1) * sample_interval`.
    pub fn observation_length(&self) -> f64 {
        (self.samples.len() - 1) as f64 * self.sample_interval
    }

    pub fn time_at(&self, index: usize) -> f64 {
        self.start_time + index as f64 * self.sample_interval
    }

    /// Samples whose timestamps fall inside `[start, end]`.
    pub fn window(&self, start: f64, end: f64) -> Result<Self> {
        let dt = self.sample_interval;
        let lo = ((start - self.start_time) / dt - 1e-9).ceil().max(0.0) as usize;
        let hi = (((end - self.start_time) / dt + 1e-9).floor() as isize)
            .min(self.samples.len() as isize - 1);
        if hi < lo as isize {
            return Err(Error::Input(format!("window [{start}, {end}] holds no samples")));
        }
        Self::new(
            self.samples[lo..=hi as usize].to_vec(),
            dt,
            self.time_at(lo),
        )
    }
}

/// Blockage template shape: ramp fraction `p` and timescale `tau` (seconds).
/// Total length is `(1 + p) tau`; each ramp lasts `p tau / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemplateParams {
    pub p: f64,
    pub tau: f64,
}

impl TemplateParams {
    pub fn new(p: f64, tau: f64) -> Result<Self> {
        let w = Self { p, tau };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p.is_finite() && self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!(
                "template needs p > 0 and tau > 0, got p = {}, tau = {}",
                self.p, self.tau
            )));
        }
        Ok(())
    }

    /// `(1 + p) tau`.
    pub fn length(&self) -> f64 {
        (1.0 + self.p) * self.tau
    }

    /// Template with ramps of `ramp` seconds and total length `length`.
    pub fn from_ramp(ramp: f64, length: f64) -> Result<Self> {
        let tau = length - 2.0 * ramp;
        if !(ramp > 0.0 && tau > 0.0) {
            return Err(Error::Config(format!(
                "template of length {length} s cannot hold two {ramp} s ramps"
            )));
        }
        Self::new(2.0 * ramp / tau, tau)
    }

    /// Duration of each ramp, `p tau / 2`.
    pub fn ramp(&self) -> f64 {
        self.p * self.tau / 2.0
    }

    /// Number of whole sample intervals spanned by the template.
    pub fn sample_span(&self, interval: f64) -> usize {
        (self.length() / interval + 1e-9).floor() as usize
    }
}

/// Normalized template value: 0 outside the event, -1 on the floor.
pub fn template_value(w: &TemplateParams, t: f64) -> f64 {
    let ramp = w.p * w.tau / 2.0;
    let rise_start = (2.0 + w.p) * w.tau / 2.0;
    let end = w.length();
    if t <= 0.0 || t >= end {
        0.0
    } else if t < ramp {
        -t / ramp
    } else if t <= rise_start {
        -1.0
    } else {
        2.0 * t / (w.p * w.tau) - (2.0 + 2.0 * w.p) / w.p
    }
}

/// Template values at `0, interval, 2 interval, ...` up to the template length.
pub fn sample_template(w: &TemplateParams, interval: f64) -> Result<Vec<f64>> {
    w.validate()?;
    if !(interval > 0.0 && interval.is_finite()) {
        return Err(Error::Config(format!("sample interval must be positive, got {interval}")));
    }
    let span = w.sample_span(interval);
    if span < 2 {
        return Err(Error::Config(format!(
            "template p = {}, tau = {} is too short for a {interval} s grid (needs {} >= 2 intervals)",
            w.p, w.tau, span
        )));
    }
    Ok((0..=span).map(|j| template_value(w, j as f64 * interval)).collect())
}

/// Detector settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectionConfig {
    pub templates: Vec<TemplateParams>,
    pub correlation_threshold: f64,
    /// Cursor step of the multi-template scan; `None` means the trace's
    /// sample interval.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan_step: Option<f64>,
    pub resolution: Resolution,
}

/// How candidates from different templates are reduced to disjoint events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    /// Highest correlation first, dropping overlapping candidates.
    #[default]
    BestFirst,
    /// Time-ordered scan taking the best candidate at the first covered instant.
    ForwardScan,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            templates: default_template_bank(),
            correlation_threshold: 0.6,
            scan_step: None,
            resolution: Resolution::BestFirst,
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.templates.is_empty() {
            return Err(Error::Config("template bank is empty".into()));
        }
        for w in &self.templates {
            w.validate()?;
        }
        let th = self.correlation_threshold;
        if !(th > 0.0 && th < 1.0) {
            return Err(Error::Config(format!(
                "correlation threshold must lie in (0, 1), got {th}"
            )));
        }
        if let Some(step) = self.scan_step {
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::Config(format!("scan step must be positive, got {step}")));
            }
        }
        Ok(())
    }
}

/// Ramps of 0.1, 0.2 and 0.3 s crossed with lengths 2.0 to 6.0 s in 0.05 s
/// steps (243 templates).
pub fn default_template_bank() -> Vec<TemplateParams> {
    ramp_template_bank(&[0.1, 0.2, 0.3], 2.0, 6.0, 0.05).expect("static bank is valid")
}

/// p in {0.25, 0.5, 1.0} crossed with tau in {0.5, 1, 2, 4} s, ordered by p then tau.
pub fn coarse_template_bank() -> Vec<TemplateParams> {
    let mut bank = Vec::with_capacity(12);
    for p in [0.25, 0.5, 1.0] {
        for tau in [0.5, 1.0, 2.0, 4.0] {
            bank.push(TemplateParams { p, tau });
        }
    }
    bank
}

/// Templates for every ramp duration in `ramps` crossed with total lengths
/// from `min_length` to `max_length` in steps of `length_step`, ordered by
/// ramp then length.
pub fn ramp_template_bank(
    ramps: &[f64],
    min_length: f64,
    max_length: f64,
    length_step: f64,
) -> Result<Vec<TemplateParams>> {
    if !(length_step > 0.0 && min_length > 0.0 && max_length >= min_length) {
        return Err(Error::Config(format!(
            "invalid template length range [{min_length}, {max_length}] step {length_step}"
        )));
    }
    let count = ((max_length - min_length) / length_step + 1e-9).floor() as usize + 1;
    let mut bank = Vec::with_capacity(ramps.len() * count);
    for &ramp in ramps {
        for i in 0..count {
            bank.push(TemplateParams::from_ramp(ramp, min_length + i as f64 * length_step)?);
        }
    }
    Ok(bank)
}

/// A detected blockage. `template_index` is zero-based into the bank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockageEvent {
    pub t_start: f64,
    pub t_end: f64,
    pub correlation: f64,
    pub template_index: usize,
}

impl BlockageEvent {
    pub fn overlaps(&self, other: &BlockageEvent) -> bool {
        self.t_start < other.t_end && other.t_start < self.t_end
    }
}

fn is_flat(sum_sq: f64, mean: f64, count: usize) -> bool {
    let scale = 1e-10 * mean.abs().max(1.0);
    sum_sq <= count as f64 * scale * scale
}

/// Zero-mean normalized correlation of the template against every window of
/// the trace that fits entirely inside it.
///
/// Entry `i` aligns the template start with sample `i`; the series has
/// `len - n_tmp` entries where `n_tmp` is the template span in samples.
/// Windows with zero variance correlate as 0.
pub fn normalized_correlation(trace: &RssiTrace, w: &TemplateParams) -> Result<Vec<f64>> {
    let tmpl = sample_template(w, trace.sample_interval())?;
    let m = tmpl.len();
    if trace.len() < m {
        return Err(Error::Input(format!(
            "trace of {} samples is shorter than the {m}-sample template",
            trace.len()
        )));
    }
    let tmean = tmpl.iter().sum::<f64>() / m as f64;
    let tz: Vec<f64> = tmpl.iter().map(|v| v - tmean).collect();
    let tss: f64 = tz.iter().map(|v| v * v).sum();

    let r = trace.samples();
    let count = r.len() + 1 - m;
    Ok((0..count)
        .map(|i| {
            let win = &r[i..i + m];
            let mean = win.iter().sum::<f64>() / m as f64;
            let mut num = 0.0;
            let mut ss = 0.0;
            for (x, t) in win.iter().zip(&tz) {
                let dx = x - mean;
                num += dx * t;
                ss += dx * dx;
            }
            if is_flat(ss, mean, m) || is_flat(tss, tmean, m) {
                0.0
            } else {
                (num / (ss * tss).sqrt()).clamp(-1.0, 1.0)
            }
        })
        .collect())
}

/// Local maximum of a correlation series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub index: usize,
    pub value: f64,
}

/// Indices whose value is the maximum of the open window
/// `(i - window/2, i + window/2)`, clipped at the series ends. Among equal
/// values inside one window only the earliest survives.
pub fn detect_peaks(c: &[f64], window: usize) -> Vec<Peak> {
    let half = window.saturating_sub(1) / 2;
    (0..c.len())
        .filter(|&i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(c.len() - 1);
            (lo..i).all(|j| c[j] < c[i]) && (i + 1..=hi).all(|j| c[j] <= c[i])
        })
        .map(|i| Peak { index: i, value: c[i] })
        .collect()
}

fn detect_with_template(
    trace: &RssiTrace,
    w: &TemplateParams,
    threshold: f64,
    template_index: usize,
) -> Result<Vec<BlockageEvent>> {
    let c = normalized_correlation(trace, w)?;
    let span = w.sample_span(trace.sample_interval());
    Ok(detect_peaks(&c, span)
        .into_iter()
        .filter(|pk| pk.value > threshold)
        .map(|pk| {
            let t_start = trace.time_at(pk.index);
            BlockageEvent {
                t_start,
                t_end: t_start + w.length(),
                correlation: pk.value,
                template_index,
            }
        })
        .collect())
}

/// Blockage candidates for a single template: correlation peaks above the
/// threshold, each ending one template length after it starts.
///
/// `template_index` is the position of `w` in `cfg.templates` (0 if absent).
pub fn detect_single(
    trace: &RssiTrace,
    w: &TemplateParams,
    cfg: &DetectionConfig,
) -> Result<Vec<BlockageEvent>> {
    let index = cfg.templates.iter().position(|x| x == w).unwrap_or(0);
    detect_with_template(trace, w, cfg.correlation_threshold, index)
}

/// Runs every template of the bank and resolves the candidates (see
/// [`resolve_candidates`]).
pub fn detect_multi(trace: &RssiTrace, cfg: &DetectionConfig) -> Result<Vec<BlockageEvent>> {
    cfg.validate()?;
    let per_template: Vec<Vec<BlockageEvent>> = cfg
        .templates
        .par_iter()
        .enumerate()
        .map(|(k, w)| detect_with_template(trace, w, cfg.correlation_threshold, k))
        .collect::<Result<_>>()?;
    Ok(match cfg.resolution {
        Resolution::BestFirst => resolve_best_first(&per_template),
        Resolution::ForwardScan => resolve_candidates(
            &per_template,
            trace.start_time(),
            trace.end_time(),
            cfg.scan_step.unwrap_or(trace.sample_interval()),
        ),
    })
}

fn priority(a: &BlockageEvent, b: &BlockageEvent) -> std::cmp::Ordering {
    b.correlation
        .total_cmp(&a.correlation)
        .then(a.template_index.cmp(&b.template_index))
        .then(a.t_start.total_cmp(&b.t_start))
}

/// Accepts candidates in decreasing correlation (ties: lower template index,
/// then earlier start), skipping any that overlap an accepted event.
/// Returns the accepted events sorted by start.
pub fn resolve_best_first(candidates: &[Vec<BlockageEvent>]) -> Vec<BlockageEvent> {
    let mut pool: Vec<BlockageEvent> = candidates.iter().flatten().copied().collect();
    pool.sort_by(priority);
    let mut accepted: Vec<BlockageEvent> = Vec::new();
    for e in pool {
        if !accepted.iter().any(|a| a.overlaps(&e)) {
            accepted.push(e);
        }
    }
    accepted.sort_by(|a, b| a.t_start.total_cmp(&b.t_start));
    accepted
}

/// Forward scan over candidate events from several templates.
///
/// A cursor starts at `start` and advances by `step`. Whenever it lies
/// strictly inside one or more candidates that begin at or after the last
/// accepted event's end, the candidate with the highest correlation is
/// accepted (ties: lower template index, then earlier start) and the cursor
/// jumps to its end.
pub fn resolve_candidates(
    candidates: &[Vec<BlockageEvent>],
    start: f64,
    end: f64,
    step: f64,
) -> Vec<BlockageEvent> {
    let mut pool: Vec<BlockageEvent> = candidates.iter().flatten().copied().collect();
    pool.sort_by(|a, b| a.t_start.total_cmp(&b.t_start));

    let mut accepted = Vec::new();
    let mut last_end = f64::NEG_INFINITY;
    let mut base = start;
    let mut k = 0u64;
    let mut cursor = base;
    while cursor < end {
        let best = pool
            .iter()
            .take_while(|e| e.t_start < cursor)
            .filter(|e| e.t_start >= last_end && cursor < e.t_end)
            .min_by(|a, b| priority(a, b));
        match best {
            Some(e) => {
                accepted.push(*e);
                last_end = e.t_end;
                base = e.t_end;
                k = 0;
                cursor = base;
            }
            None => {
                k += 1;
                cursor = base + k as f64 * step;
            }
        }
    }
    accepted
}

/// Union of `[t_start, t_end]` over events, as `(start, end)` pairs.
pub fn event_sections(events: &[BlockageEvent]) -> Vec<(f64, f64)> {
    events.iter().map(|e| (e.t_start, e.t_end)).collect()
}
