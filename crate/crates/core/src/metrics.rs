//! Average angular and endpoint error against piecewise-constant ground truth.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::event_model::{DvsEvent, FlowConfig, FlowEvent, SensorGeometry, Timestamp, Velocity};
use crate::flow_engine::FlowEngine;

/// Constant global flow over `[t_start_us, t_end_us)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruthSegment {
    pub t_start_us: Timestamp,
    pub t_end_us: Timestamp,
    pub velocity: Velocity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthFlow {
    segments: Vec<GroundTruthSegment>,
}

impl GroundTruthFlow {
    pub fn constant(velocity: Velocity, t_start_us: Timestamp, t_end_us: Timestamp) -> Result<Self> {
        Self::piecewise(vec![GroundTruthSegment { t_start_us, t_end_us, velocity }])
    }

    /// Segments must be non-empty, ordered and non-overlapping.
    pub fn piecewise(segments: Vec<GroundTruthSegment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidGroundTruth("no segments".into()));
        }
        for (i, s) in segments.iter().enumerate() {
            if s.t_end_us <= s.t_start_us {
                return Err(Error::InvalidGroundTruth(format!("segment {i} has an empty time range")));
            }
            if !s.velocity.vx.is_finite() || !s.velocity.vy.is_finite() {
                return Err(Error::InvalidGroundTruth(format!("segment {i} has a non-finite velocity")));
            }
        }
        for (i, w) in segments.windows(2).enumerate() {
            if w[1].t_start_us < w[0].t_end_us {
                return Err(Error::InvalidGroundTruth(format!(
                    "segment {} overlaps or precedes segment {}",
                    i + 1,
                    i
                )));
            }
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[GroundTruthSegment] {
        &self.segments
    }

    pub fn velocity_at(&self, t: Timestamp) -> Option<Velocity> {
        let idx = self.segments.partition_point(|s| s.t_start_us <= t);
        let seg = self.segments.get(idx.checked_sub(1)?)?;
        (t < seg.t_end_us).then_some(seg.velocity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorReport {
    /// Degrees; NaN when no sample had a defined angle.
    pub aae_mean: f64,
    pub aae_std: f64,
    pub aee_mean: f64,
    pub aee_std: f64,
    /// Flow events covered by ground truth (the AEE population).
    pub n_samples: u64,
    /// Samples that entered the angular average.
    pub n_angular: u64,
    /// Samples left out of the AAE because a vector was zero.
    pub n_excluded_zero: u64,
    /// Flow events outside every ground-truth segment.
    pub n_excluded_gap: u64,
}

impl ErrorReport {
    pub fn n_excluded(&self) -> u64 {
        self.n_excluded_zero + self.n_excluded_gap
    }
}

/// Angle between two vectors in degrees, `None` if either is zero.
pub fn angular_error(estimate: Velocity, truth: Velocity) -> Option<f64> {
    let (ne, nt) = (estimate.norm(), truth.norm());
    if ne == 0.0 || nt == 0.0 {
        return None;
    }
    let cos = (estimate.vx * truth.vx + estimate.vy * truth.vy) / (ne * nt);
    Some(cos.clamp(-1.0, 1.0).acos().to_degrees())
}

pub fn endpoint_error(estimate: Velocity, truth: Velocity) -> f64 {
    (estimate.vx - truth.vx).hypot(estimate.vy - truth.vy)
}

/// Population mean and standard deviation.
fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn evaluate(flow: &[FlowEvent], truth: &GroundTruthFlow) -> Result<ErrorReport> {
    evaluate_velocities(flow.iter().map(|f| (f.timestamp, f.velocity)), truth)
}

/// [`evaluate`] over bare `(timestamp, velocity)` samples.
pub fn evaluate_velocities(
    samples: impl IntoIterator<Item = (Timestamp, Velocity)>,
    truth: &GroundTruthFlow,
) -> Result<ErrorReport> {
    let mut angular = Vec::new();
    let mut endpoint = Vec::new();
    let mut seen = 0u64;
    let mut zero = 0u64;
    let mut gap = 0u64;
    for (t, v) in samples {
        seen += 1;
        let Some(gt) = truth.velocity_at(t) else {
            gap += 1;
            continue;
        };
        endpoint.push(endpoint_error(v, gt));
        match angular_error(v, gt) {
            Some(a) => angular.push(a),
            None => zero += 1,
        }
    }
    if seen == 0 {
        return Err(Error::NoFlowEvents);
    }
    if endpoint.is_empty() {
        return Err(Error::NoGroundTruthCoverage);
    }
    let (aae_mean, aae_std) = mean_std(&angular);
    let (aee_mean, aee_std) = mean_std(&endpoint);
    Ok(ErrorReport {
        aae_mean,
        aae_std,
        aee_mean,
        aee_std,
        n_samples: endpoint.len() as u64,
        n_angular: angular.len() as u64,
        n_excluded_zero: zero,
        n_excluded_gap: gap,
    })
}

/// Runs the engine once per radius over the same stream. Radii are
/// evaluated in parallel; the output keeps the input order.
pub fn radius_sweep(
    events: &[DvsEvent],
    geometry: SensorGeometry,
    truth: &GroundTruthFlow,
    radii: &[u32],
    base: FlowConfig,
) -> Result<Vec<(u32, ErrorReport)>> {
    if radii.is_empty() {
        return Err(Error::InvalidConfig("radius sweep needs at least one radius".into()));
    }
    radii
        .par_iter()
        .map(|&radius| {
            let mut engine = FlowEngine::new(geometry, base.with_radius(radius))?;
            let flow = engine.run(events)?;
            Ok((radius, evaluate(&flow, truth)?))
        })
        .collect()
}
