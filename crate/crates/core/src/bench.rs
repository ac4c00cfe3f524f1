//! Wall-clock throughput of the software engine.

use std::time::Instant;

use serde::Serialize;

use crate::error::Result;
use crate::event_model::{DvsEvent, FlowConfig, SensorGeometry};
use crate::flow_engine::FlowEngine;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchReport {
    pub events: u64,
    pub flow_events: u64,
    pub seconds: f64,
    pub events_per_second: f64,
    pub ns_per_event: f64,
}

/// Times one single-threaded pass of the engine over `events`.
pub fn bench_engine(events: &[DvsEvent], geometry: SensorGeometry, config: FlowConfig) -> Result<BenchReport> {
    let mut engine = FlowEngine::new(geometry, config)?;
    let mut flow_events = 0u64;
    let start = Instant::now();
    for e in events {
        if engine.process_event(e)?.is_some() {
            flow_events += 1;
        }
    }
    let seconds = start.elapsed().as_secs_f64().max(1e-9);
    let n = events.len() as u64;
    Ok(BenchReport {
        events: n,
        flow_events,
        seconds,
        events_per_second: n as f64 / seconds,
        ns_per_event: if n == 0 { 0.0 } else { seconds * 1e9 / n as f64 },
    })
}
