//! CSV formats for events, flow and ground truth.
//!
//! Events:        `timestamp_us,x,y,polarity`
//! Flow:          `timestamp_us,x,y,dir_index,vx_pps,vy_pps,tie`
//! Ground truth:  `t_start_us,t_end_us,vx_pps,vy_pps`
//!
//! Lines starting with `#` are comments and a leading header line is
//! optional.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::error::Error;
use crate::event_model::{
    Direction, DvsEvent, FlowEvent, Polarity, RegressionPolicy, SensorGeometry, Timestamp, Velocity,
};
use crate::metrics::{GroundTruthFlow, GroundTruthSegment};

pub const EVENT_HEADER: &str = "timestamp_us,x,y,polarity";
pub const FLOW_HEADER: &str = "timestamp_us,x,y,dir_index,vx_pps,vy_pps,tie";
pub const TRUTH_HEADER: &str = "t_start_us,t_end_us,vx_pps,vy_pps";

const WRAP: u64 = 1 << 32;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error(transparent)]
    Core(#[from] Error),
}

fn parse_err(line: u64, message: impl Into<String>) -> FormatError {
    FormatError::Parse { line, message: message.into() }
}

/// One row of a flow file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowRecord {
    pub timestamp: Timestamp,
    pub x: u16,
    pub y: u16,
    pub direction: Direction,
    pub velocity: Velocity,
    pub tie: bool,
}

impl From<&FlowEvent> for FlowRecord {
    fn from(f: &FlowEvent) -> Self {
        Self { timestamp: f.timestamp, x: f.x, y: f.y, direction: f.direction, velocity: f.velocity, tie: f.tie }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventReadOptions {
    pub geometry: SensorGeometry,
    pub regression: RegressionPolicy,
}

impl Default for EventReadOptions {
    fn default() -> Self {
        Self { geometry: SensorGeometry::default(), regression: RegressionPolicy::Error }
    }
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input)
}

/// Iterates data records, skipping one leading header whose first field
/// is not a number.
fn for_each_record<R: Read>(
    input: R,
    columns: usize,
    mut f: impl FnMut(u64, &csv::StringRecord) -> Result<(), FormatError>,
) -> Result<(), FormatError> {
    let mut reader = csv_reader(input);
    let mut record = csv::StringRecord::new();
    let mut first = true;
    while reader.read_record(&mut record)? {
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if first {
            first = false;
            if record[0].parse::<f64>().is_err() {
                continue;
            }
        }
        if record.len() != columns {
            return Err(parse_err(line, format!("expected {columns} fields, found {}", record.len())));
        }
        f(line, &record)?;
    }
    Ok(())
}

fn field<T: std::str::FromStr>(record: &csv::StringRecord, i: usize, name: &str, line: u64) -> Result<T, FormatError> {
    record[i].parse().map_err(|_| parse_err(line, format!("bad {name} {:?}", &record[i])))
}

pub fn read_events<R: Read>(input: R, options: &EventReadOptions) -> Result<Vec<DvsEvent>, FormatError> {
    let mut events = Vec::new();
    let mut previous_raw: Option<u64> = None;
    let mut wrap_offset = 0u64;
    let mut last: Option<Timestamp> = None;
    for_each_record(input, 4, |line, record| {
        let raw: u64 = field(record, 0, "timestamp", line)?;
        let x: u32 = field(record, 1, "x", line)?;
        let y: u32 = field(record, 2, "y", line)?;
        let p: u8 = field(record, 3, "polarity", line)?;
        let polarity = Polarity::from_bit(p).ok_or_else(|| parse_err(line, format!("polarity {p} is not 0 or 1")))?;
        options.geometry.check(x, y).map_err(|e| parse_err(line, e.to_string()))?;

        // A 32-bit counter wrap shows up as a jump back of more than half its range.
        if let Some(prev) = previous_raw {
            if raw < prev && prev - raw > WRAP / 2 {
                wrap_offset += WRAP;
            }
        }
        previous_raw = Some(raw);
        let timestamp = raw + wrap_offset;
        if let Some(prev) = last {
            if timestamp < prev {
                match options.regression {
                    RegressionPolicy::Error => {
                        return Err(parse_err(
                            line,
                            Error::TimestampRegression { previous: prev, found: timestamp }.to_string(),
                        ))
                    }
                    RegressionPolicy::Drop => return Ok(()),
                }
            }
        }
        last = Some(timestamp);
        events.push(DvsEvent::new(timestamp, x as u16, y as u16, polarity));
        Ok(())
    })?;
    Ok(events)
}

pub fn write_events<W: Write>(mut out: W, events: &[DvsEvent]) -> std::io::Result<()> {
    writeln!(out, "{EVENT_HEADER}")?;
    for e in events {
        writeln!(out, "{},{},{},{}", e.timestamp, e.x, e.y, e.polarity.as_bit())?;
    }
    out.flush()
}

pub fn read_flow<R: Read>(input: R) -> Result<Vec<FlowRecord>, FormatError> {
    let mut flow = Vec::new();
    for_each_record(input, 7, |line, record| {
        let index: u8 = field(record, 3, "dir_index", line)?;
        let direction = Direction::from_index(index).map_err(|e| parse_err(line, e.to_string()))?;
        let tie = match &record[6] {
            "0" => false,
            "1" => true,
            other => return Err(parse_err(line, format!("tie flag {other:?} is not 0 or 1"))),
        };
        flow.push(FlowRecord {
            timestamp: field(record, 0, "timestamp", line)?,
            x: field(record, 1, "x", line)?,
            y: field(record, 2, "y", line)?,
            direction,
            velocity: Velocity::new(field(record, 4, "vx", line)?, field(record, 5, "vy", line)?),
            tie,
        });
        Ok(())
    })?;
    Ok(flow)
}

pub fn write_flow<W: Write>(mut out: W, flow: impl IntoIterator<Item = FlowRecord>) -> std::io::Result<()> {
    writeln!(out, "{FLOW_HEADER}")?;
    for f in flow {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            f.timestamp,
            f.x,
            f.y,
            f.direction.index(),
            f.velocity.vx,
            f.velocity.vy,
            f.tie as u8
        )?;
    }
    out.flush()
}

pub fn read_truth<R: Read>(input: R) -> Result<GroundTruthFlow, FormatError> {
    let mut segments = Vec::new();
    for_each_record(input, 4, |line, record| {
        segments.push(GroundTruthSegment {
            t_start_us: field(record, 0, "t_start_us", line)?,
            t_end_us: field(record, 1, "t_end_us", line)?,
            velocity: Velocity::new(field(record, 2, "vx", line)?, field(record, 3, "vy", line)?),
        });
        Ok(())
    })?;
    Ok(GroundTruthFlow::piecewise(segments)?)
}

pub fn write_truth<W: Write>(mut out: W, truth: &GroundTruthFlow) -> std::io::Result<()> {
    writeln!(out, "{TRUTH_HEADER}")?;
    for s in truth.segments() {
        writeln!(out, "{},{},{},{}", s.t_start_us, s.t_end_us, s.velocity.vx, s.velocity.vy)?;
    }
    out.flush()
}

pub fn read_events_file(path: &Path, options: &EventReadOptions) -> Result<Vec<DvsEvent>, FormatError> {
    read_events(BufReader::new(File::open(path)?), options)
}

pub fn read_flow_file(path: &Path) -> Result<Vec<FlowRecord>, FormatError> {
    read_flow(BufReader::new(File::open(path)?))
}

pub fn read_truth_file(path: &Path) -> Result<GroundTruthFlow, FormatError> {
    read_truth(BufReader::new(File::open(path)?))
}

pub fn create(path: &Path) -> std::io::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}
