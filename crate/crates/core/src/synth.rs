//! Synthetic event streams from rigidly translating binary patterns.
//!
//! Each pixel `(x, y)` sees the world pattern at `(x - sx(t), y - sy(t))`
//! where the integer shift `s(t) = trunc(v * t / 1e6)` follows the
//! configured velocity. An event fires whenever a pixel's value changes,
//! so the stream carries exact global ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::event_model::{DvsEvent, Polarity, SensorGeometry, Timestamp, Velocity, MICROS_PER_SECOND};
use crate::metrics::GroundTruthFlow;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneKind {
    /// A single straight step edge, perpendicular to the dominant motion axis.
    Edge,
    /// Isolated random dots.
    SparseDots,
    /// Per-pixel random texture.
    DenseTexture,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneSpec {
    pub kind: SceneKind,
    pub velocity: Velocity,
    pub duration_us: u64,
    pub geometry: SensorGeometry,
    /// Fraction of lit pixels for dots and texture.
    pub density: f64,
    /// Spurious events per pixel per second.
    pub noise_rate: f64,
    pub seed: u64,
}

impl SceneSpec {
    pub fn new(kind: SceneKind, velocity: Velocity, duration_us: u64) -> Self {
        let density = match kind {
            SceneKind::Edge => 0.5,
            SceneKind::SparseDots => 0.02,
            SceneKind::DenseTexture => 0.3,
        };
        Self {
            kind,
            velocity,
            duration_us,
            geometry: SensorGeometry::default(),
            density,
            noise_rate: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate().map_err(|_| Error::DegenerateScene("empty sensor".into()))?;
        if self.duration_us == 0 {
            return Err(Error::DegenerateScene("duration must be positive".into()));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::DegenerateScene(format!("density {} outside (0, 1]", self.density)));
        }
        if !(self.noise_rate >= 0.0 && self.noise_rate.is_finite()) {
            return Err(Error::DegenerateScene(format!("noise rate {} must be >= 0", self.noise_rate)));
        }
        if !(self.velocity.vx.is_finite() && self.velocity.vy.is_finite()) {
            return Err(Error::DegenerateScene("velocity must be finite".into()));
        }
        Ok(())
    }

    /// Noise rate giving on average `fraction * signal_events` extra events.
    pub fn noise_rate_for(&self, signal_events: usize, fraction: f64) -> f64 {
        let seconds = self.duration_us as f64 / MICROS_PER_SECOND;
        fraction * signal_events as f64 / (self.geometry.pixel_count() as f64 * seconds)
    }
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub events: Vec<DvsEvent>,
    pub truth: GroundTruthFlow,
}

enum Pattern {
    /// Lit where the coordinate along the axis is below `origin`.
    Edge { horizontal_motion: bool, origin: i64 },
    Random { seed: u64, threshold: u64 },
}

impl Pattern {
    fn value(&self, u: i64, v: i64) -> bool {
        match *self {
            Pattern::Edge { horizontal_motion: true, origin } => u < origin,
            Pattern::Edge { horizontal_motion: false, origin } => v < origin,
            Pattern::Random { seed, threshold } => mix(seed, u, v) < threshold,
        }
    }
}

fn mix(seed: u64, u: i64, v: i64) -> u64 {
    // splitmix64 finaliser over the packed coordinates.
    let mut z = seed ^ (u as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (v as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Integer displacement along one axis at time `t`.
pub fn shift_at(velocity: f64, t: Timestamp) -> i64 {
    (velocity * t as f64 / MICROS_PER_SECOND).trunc() as i64
}

/// Times in `(0, duration)` at which the integer displacement changes.
fn step_times(velocity: f64, duration_us: u64) -> Vec<Timestamp> {
    let speed = velocity.abs();
    if speed == 0.0 {
        return Vec::new();
    }
    let mut times = Vec::new();
    for k in 1u64.. {
        let mut t = (k as f64 * MICROS_PER_SECOND / speed).ceil() as u64;
        // Pin t to the first instant the displacement reaches k.
        while (shift_at(speed, t) as u64) < k {
            t += 1;
        }
        while t > 0 && shift_at(speed, t - 1) as u64 >= k {
            t -= 1;
        }
        if t >= duration_us {
            break;
        }
        times.push(t);
    }
    times
}

/// Column (or row) the edge starts at, in sensor coordinates.
pub fn edge_origin(spec: &SceneSpec) -> i64 {
    let horizontal = spec.velocity.vx.abs() >= spec.velocity.vy.abs();
    let (extent, v) = if horizontal {
        (spec.geometry.width as i64, spec.velocity.vx)
    } else {
        (spec.geometry.height as i64, spec.velocity.vy)
    };
    if v >= 0.0 {
        extent / 4
    } else {
        3 * extent / 4
    }
}

pub fn generate(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let pattern = match spec.kind {
        SceneKind::Edge => Pattern::Edge {
            horizontal_motion: spec.velocity.vx.abs() >= spec.velocity.vy.abs(),
            origin: edge_origin(spec),
        },
        SceneKind::SparseDots | SceneKind::DenseTexture => Pattern::Random {
            seed: mix(spec.seed, 0x5EED, spec.kind as i64),
            threshold: (spec.density * u64::MAX as f64) as u64,
        },
    };

    let mut times = step_times(spec.velocity.vx, spec.duration_us);
    times.extend(step_times(spec.velocity.vy, spec.duration_us));
    times.sort_unstable();
    times.dedup();

    let (w, h) = (spec.geometry.width, spec.geometry.height);
    let mut signal = Vec::new();
    let mut previous = (0i64, 0i64);
    for &t in &times {
        let now = (shift_at(spec.velocity.vx, t), shift_at(spec.velocity.vy, t));
        for y in 0..h {
            for x in 0..w {
                let before = pattern.value(x as i64 - previous.0, y as i64 - previous.1);
                let after = pattern.value(x as i64 - now.0, y as i64 - now.1);
                if before != after {
                    let polarity = if after { Polarity::On } else { Polarity::Off };
                    signal.push(DvsEvent::new(t, x, y, polarity));
                }
            }
        }
        previous = now;
    }

    let events = if spec.noise_rate > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let expected = spec.noise_rate * spec.geometry.pixel_count() as f64 * spec.duration_us as f64 / MICROS_PER_SECOND;
        let count = Poisson::new(expected)
            .map_err(|e| Error::DegenerateScene(format!("noise: {e}")))?
            .sample(&mut rng) as usize;
        let mut noise: Vec<DvsEvent> = (0..count)
            .map(|_| {
                let t = rng.random_range(0..spec.duration_us);
                let x = rng.random_range(0..w);
                let y = rng.random_range(0..h);
                let p = if rng.random_bool(0.5) { Polarity::On } else { Polarity::Off };
                DvsEvent::new(t, x, y, p)
            })
            .collect();
        noise.sort_by_key(|e| e.timestamp);
        merge_by_time(signal, noise)
    } else {
        signal
    };

    let truth = GroundTruthFlow::constant(spec.velocity, 0, spec.duration_us)?;
    Ok(Scene { events, truth })
}

/// Stable merge; on equal timestamps `a` comes first.
fn merge_by_time(a: Vec<DvsEvent>, b: Vec<DvsEvent>) -> Vec<DvsEvent> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut b = b.into_iter().peekable();
    for e in a {
        while let Some(n) = b.next_if(|n| n.timestamp < e.timestamp) {
            out.push(n);
        }
        out.push(e);
    }
    out.extend(b);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_scene_is_silent() {
        for kind in [SceneKind::Edge, SceneKind::SparseDots, SceneKind::DenseTexture] {
            let scene = generate(&SceneSpec::new(kind, Velocity::ZERO, 1_000_000)).unwrap();
            assert!(scene.events.is_empty());
        }
    }

    #[test]
    fn edge_column_follows_closed_form() {
        let v = 250.0;
        let spec = SceneSpec::new(SceneKind::Edge, Velocity::new(v, 0.0), 300_000);
        let scene = generate(&spec).unwrap();
        assert!(!scene.events.is_empty());
        let origin = edge_origin(&spec);
        for e in &scene.events {
            // Column x0 + floor(v t / 1e6) - 1 lights up at each step.
            let expected = origin + (v * e.timestamp as f64 / 1e6).floor() as i64 - 1;
            assert_eq!(e.x as i64, expected);
            assert_eq!(e.polarity, Polarity::On);
        }
        let mut times: Vec<_> = scene.events.iter().map(|e| e.timestamp).collect();
        times.dedup();
        for t in times {
            let n = scene.events.iter().filter(|e| e.timestamp == t).count();
            assert_eq!(n, 180);
        }
    }

    #[test]
    fn step_times_land_on_slice_grid() {
        assert_eq!(step_times(100.0, 50_000), vec![10_000, 20_000, 30_000, 40_000]);
        assert_eq!(step_times(-100.0, 25_000), vec![10_000, 20_000]);
        assert_eq!(step_times(3.0, 1_000_000), vec![333_334, 666_667]);
    }

    #[test]
    fn same_seed_same_stream() {
        let mut spec = SceneSpec::new(SceneKind::DenseTexture, Velocity::new(100.0, -100.0), 50_000);
        spec.noise_rate = 2.0;
        spec.seed = 42;
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.events, b.events);
        spec.seed = 43;
        assert_ne!(a.events, generate(&spec).unwrap().events);
    }

    #[test]
    fn streams_respect_bounds_and_order() {
        for kind in [SceneKind::Edge, SceneKind::SparseDots, SceneKind::DenseTexture] {
            let mut spec = SceneSpec::new(kind, Velocity::new(-170.0, 90.0), 80_000);
            spec.noise_rate = 5.0;
            spec.geometry = SensorGeometry::new(64, 48).unwrap();
            let scene = generate(&spec).unwrap();
            assert!(scene.events.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
            assert!(scene.events.iter().all(|e| e.x < 64 && e.y < 48 && e.timestamp < 80_000));
        }
    }

    #[test]
    fn density_controls_dot_count() {
        let spec = SceneSpec::new(SceneKind::DenseTexture, Velocity::new(100.0, 0.0), 10_001);
        let scene = generate(&spec).unwrap();
        // One step of a 0.3-density texture flips about 2 * 0.3 * 0.7 of all pixels.
        let frac = scene.events.len() as f64 / spec.geometry.pixel_count() as f64;
        assert!((frac - 0.42).abs() < 0.02, "{frac}");
    }

    #[test]
    fn noise_rate_hits_target_fraction() {
        let mut spec = SceneSpec::new(SceneKind::SparseDots, Velocity::new(100.0, 0.0), 200_000);
        let signal = generate(&spec).unwrap().events.len();
        spec.noise_rate = spec.noise_rate_for(signal, 0.2);
        let total = generate(&spec).unwrap().events.len();
        let frac = (total - signal) as f64 / signal as f64;
        assert!((frac - 0.2).abs() < 0.03, "{frac}");
    }

    #[test]
    fn degenerate_specs() {
        let mut spec = SceneSpec::new(SceneKind::SparseDots, Velocity::new(1.0, 0.0), 0);
        assert!(matches!(generate(&spec), Err(Error::DegenerateScene(_))));
        spec.duration_us = 10;
        spec.density = 0.0;
        assert!(generate(&spec).is_err());
        spec.density = 0.5;
        spec.geometry = SensorGeometry { width: 0, height: 5 };
        assert!(generate(&spec).is_err());
    }
}
