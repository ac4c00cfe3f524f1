//! Streaming orchestration: rotate, accumulate, downsample, match, emit.

use serde::Serialize;

use crate::block_match::{match_event, NoMatch};
use crate::error::{Error, Result};
use crate::event_model::{
    Direction, DvsEvent, FlowConfig, FlowEvent, RegressionPolicy, SensorGeometry, Timestamp, Velocity,
};
use crate::slice_store::SliceTriple;

/// Flow directions counted over one slice epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct DirectionHistogram {
    pub counts: [u64; 9],
    pub epoch: u64,
}

impl DirectionHistogram {
    pub fn new(epoch: u64) -> Self {
        Self { counts: [0; 9], epoch }
    }

    pub fn from_flow<'a>(flow: impl IntoIterator<Item = &'a FlowEvent>) -> Self {
        let mut hist = Self::default();
        for f in flow {
            hist.record(f.direction);
        }
        hist
    }

    pub fn record(&mut self, direction: Direction) {
        self.counts[direction.index()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn merge(&mut self, other: &DirectionHistogram) {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
    }
}

/// The most populated bin; the lowest index wins a tie.
pub fn dominant_direction(hist: &DirectionHistogram) -> Result<Direction> {
    if hist.total() == 0 {
        return Err(Error::EmptyHistogram);
    }
    let mut best = 0;
    for i in 1..9 {
        if hist.counts[i] > hist.counts[best] {
            best = i;
        }
    }
    Ok(Direction::ALL[best])
}

/// Running counters. `events_in` counts accepted events, so
/// `events_in = flow_events_out + skipped_downsample + skipped_border + filtered_sparse`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct EngineStats {
    pub events_in: u64,
    pub flow_events_out: u64,
    pub rotations: u64,
    pub ties: u64,
    pub skipped_border: u64,
    pub skipped_downsample: u64,
    pub filtered_sparse: u64,
    pub dropped_regressions: u64,
}

#[derive(Debug, Clone)]
pub struct FlowEngine {
    geometry: SensorGeometry,
    config: FlowConfig,
    slices: Option<SliceTriple>,
    last_timestamp: Option<Timestamp>,
    since_last_match: u32,
    histogram: DirectionHistogram,
    published: Vec<DirectionHistogram>,
    stats: EngineStats,
}

impl FlowEngine {
    pub fn new(geometry: SensorGeometry, config: FlowConfig) -> Result<Self> {
        geometry.validate()?;
        config.validate()?;
        Ok(Self {
            geometry,
            config,
            slices: None,
            last_timestamp: None,
            since_last_match: 0,
            histogram: DirectionHistogram::new(0),
            published: Vec::new(),
            stats: EngineStats::default(),
        })
    }

    pub fn config(&self) -> &FlowConfig {
        &self.config
    }

    pub fn geometry(&self) -> SensorGeometry {
        self.geometry
    }

    pub fn stats(&self) -> EngineStats {
        self.stats
    }

    pub fn slices(&self) -> Option<&SliceTriple> {
        self.slices.as_ref()
    }

    /// Histograms of epochs closed so far, oldest first.
    pub fn histograms(&self) -> &[DirectionHistogram] {
        &self.published
    }

    /// All flow emitted so far, across epochs.
    pub fn total_histogram(&self) -> DirectionHistogram {
        let mut total = self.histogram;
        for h in &self.published {
            total.merge(h);
        }
        total.epoch = 0;
        total
    }

    pub fn process_event(&mut self, event: &DvsEvent) -> Result<Option<FlowEvent>> {
        self.geometry.check(event.x as u32, event.y as u32)?;
        if let Some(previous) = self.last_timestamp {
            if event.timestamp < previous {
                match self.config.regression_policy {
                    RegressionPolicy::Error => {
                        return Err(Error::TimestampRegression { previous, found: event.timestamp })
                    }
                    RegressionPolicy::Drop => {
                        self.stats.dropped_regressions += 1;
                        return Ok(None);
                    }
                }
            }
        }
        self.last_timestamp = Some(event.timestamp);
        self.stats.events_in += 1;

        let d = self.config.slice_duration_us;
        let slices = self.slices.get_or_insert_with(|| {
            // Epochs sit on the grid of multiples of d.
            SliceTriple::starting_at(self.geometry, d, event.timestamp / d * d)
        });

        let rotated = slices.maybe_rotate(event.timestamp);
        if rotated > 0 {
            self.stats.rotations += rotated;
            let closed = std::mem::replace(&mut self.histogram, DirectionHistogram::new(slices.rotations()));
            self.published.push(closed);
        }

        slices.accumulate(event)?;

        self.since_last_match += 1;
        if self.since_last_match < self.config.downsample_n {
            self.stats.skipped_downsample += 1;
            return Ok(None);
        }
        self.since_last_match = 0;

        match match_event(slices, event.x, event.y, &self.config) {
            Ok(m) => {
                let (dx, dy) = m.winner.offset();
                let speed = self.config.unit_speed();
                let flow = FlowEvent {
                    timestamp: event.timestamp,
                    x: event.x,
                    y: event.y,
                    direction: m.winner,
                    velocity: Velocity::new(dx as f64 * speed, dy as f64 * speed),
                    distances: m.distances,
                    tie: m.tie,
                };
                self.histogram.record(m.winner);
                self.stats.flow_events_out += 1;
                if m.tie {
                    self.stats.ties += 1;
                }
                Ok(Some(flow))
            }
            Err(NoMatch::Border) => {
                self.stats.skipped_border += 1;
                Ok(None)
            }
            Err(NoMatch::Sparse) => {
                self.stats.filtered_sparse += 1;
                Ok(None)
            }
        }
    }

    /// Processes a whole stream and collects the emitted flow.
    pub fn run<'a>(&mut self, events: impl IntoIterator<Item = &'a DvsEvent>) -> Result<Vec<FlowEvent>> {
        let mut out = Vec::new();
        for event in events {
            if let Some(flow) = self.process_event(event)? {
                out.push(flow);
            }
        }
        Ok(out)
    }

    /// Closes the in-progress epoch and returns its histogram with the
    /// final statistics.
    pub fn finish(self) -> (DirectionHistogram, EngineStats) {
        (self.histogram, self.stats)
    }
}
