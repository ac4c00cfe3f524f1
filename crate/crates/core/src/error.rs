use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("direction index {0} out of range 0..=8")]
    DirectionOutOfRange(u8),

    #[error("event at ({x}, {y}) lies outside the {width}x{height} sensor")]
    OutOfGeometry { x: u32, y: u32, width: u16, height: u16 },

    #[error("timestamp regression: {found} us after {previous} us")]
    TimestampRegression { previous: u64, found: u64 },

    #[error("block dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: u32, right: u32 },

    #[error("histogram is empty")]
    EmptyHistogram,

    #[error("no flow events to evaluate")]
    NoFlowEvents,

    #[error("ground truth covers none of the flow events")]
    NoGroundTruthCoverage,

    #[error("invalid ground truth: {0}")]
    InvalidGroundTruth(String),

    #[error("degenerate scene: {0}")]
    DegenerateScene(String),

    #[error("malformed FSM stimulus at position {index}: {reason}")]
    MalformedStimulus { index: usize, reason: String },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),
}
