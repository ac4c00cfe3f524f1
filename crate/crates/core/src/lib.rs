//! Event-driven block-matching optical flow for dynamic vision sensors.
//!
//! Events are accumulated, polarity-blind, into binary time slices that
//! rotate every `d` microseconds. For every processed event the block
//! around it in slice `t-d` is compared by Hamming distance against nine
//! displaced blocks in slice `t-2d`; the best match gives one of nine
//! flow directions at a speed of one pixel per `d`.
//!
//! ```
//! use blockflow::{FlowConfig, FlowEngine, SensorGeometry};
//! use blockflow::synth::{generate, SceneKind, SceneSpec};
//! use blockflow::event_model::Velocity;
//!
//! let scene = generate(&SceneSpec::new(SceneKind::DenseTexture, Velocity::new(100.0, 0.0), 60_000)).unwrap();
//! let mut engine = FlowEngine::new(SensorGeometry::default(), FlowConfig::default().with_slice_duration(10_000)).unwrap();
//! let flow = engine.run(&scene.events).unwrap();
//! let dominant = blockflow::dominant_direction(&engine.total_histogram()).unwrap();
//! assert_eq!(dominant, blockflow::Direction::EAST);
//! # let _ = flow;
//! ```

pub mod bench;
pub mod block_match;
pub mod error;
pub mod event_model;
pub mod flow_engine;
pub mod io;
pub mod metrics;
pub mod render;
pub mod slice_store;
pub mod synth;
pub mod timing_model;

pub use block_match::{hamming_distance, match_event, select_minimum, MatchResult, NoMatch};
pub use error::{Error, Result};
pub use event_model::{
    direction_from_index, BorderPolicy, Direction, DvsEvent, FlowConfig, FlowEvent, Polarity, RegressionPolicy,
    SensorGeometry, Timestamp, Velocity,
};
pub use flow_engine::{dominant_direction, DirectionHistogram, EngineStats, FlowEngine};
pub use metrics::{angular_error, endpoint_error, evaluate, radius_sweep, ErrorReport, GroundTruthFlow};
pub use slice_store::{BitSlice, BlockBits, SliceTriple};
pub use timing_model::{cycles_per_event, speedup_vs_software, step_fsm, CycleReport, HardwareConfig};
