//! Core value types: address-events, sensor geometry, the nine flow
//! directions and the engine configuration.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Timestamps are microseconds on an unwrapped 64-bit clock.
pub type Timestamp = u64;

pub const MICROS_PER_SECOND: f64 = 1_000_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    Off,
    On,
}

impl Polarity {
    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(Polarity::Off),
            1 => Some(Polarity::On),
            _ => None,
        }
    }

    pub fn as_bit(self) -> u8 {
        match self {
            Polarity::Off => 0,
            Polarity::On => 1,
        }
    }
}

/// One DVS address-event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DvsEvent {
    pub timestamp: Timestamp,
    pub x: u16,
    pub y: u16,
    pub polarity: Polarity,
}

impl DvsEvent {
    pub fn new(timestamp: Timestamp, x: u16, y: u16, polarity: Polarity) -> Self {
        Self { timestamp, x, y, polarity }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SensorGeometry {
    pub width: u16,
    pub height: u16,
}

impl Default for SensorGeometry {
    fn default() -> Self {
        Self { width: 240, height: 180 }
    }
}

impl SensorGeometry {
    pub fn new(width: u16, height: u16) -> Result<Self> {
        let geometry = Self { width, height };
        geometry.validate()?;
        Ok(geometry)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidConfig(format!(
                "sensor geometry {}x{} must be at least 1x1",
                self.width, self.height
            )));
        }
        Ok(())
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && x < self.width as i64 && y < self.height as i64
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn check(&self, x: u32, y: u32) -> Result<()> {
        if x < self.width as u32 && y < self.height as u32 {
            Ok(())
        } else {
            Err(Error::OutOfGeometry { x, y, width: self.width, height: self.height })
        }
    }
}

/// One of the nine flow directions: zero motion plus the eight neighbours.
///
/// Indices run counter-clockwise from East in image coordinates, where
/// `dy > 0` points down the sensor:
///
/// | index | name | offset  |
/// |------:|------|---------|
/// | 0     | C    | (0, 0)  |
/// | 1     | E    | (1, 0)  |
/// | 2     | NE   | (1, -1) |
/// | 3     | N    | (0, -1) |
/// | 4     | NW   | (-1, -1)|
/// | 5     | W    | (-1, 0) |
/// | 6     | SW   | (-1, 1) |
/// | 7     | S    | (0, 1)  |
/// | 8     | SE   | (1, 1)  |
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Direction(u8);

const OFFSETS: [(i8, i8); 9] = [
    (0, 0),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

const NAMES: [&str; 9] = ["C", "E", "NE", "N", "NW", "W", "SW", "S", "SE"];

impl Direction {
    pub const COUNT: usize = 9;
    pub const CENTER: Direction = Direction(0);
    pub const EAST: Direction = Direction(1);
    pub const NORTH_EAST: Direction = Direction(2);
    pub const NORTH: Direction = Direction(3);
    pub const NORTH_WEST: Direction = Direction(4);
    pub const WEST: Direction = Direction(5);
    pub const SOUTH_WEST: Direction = Direction(6);
    pub const SOUTH: Direction = Direction(7);
    pub const SOUTH_EAST: Direction = Direction(8);

    pub const ALL: [Direction; 9] = [
        Direction(0),
        Direction(1),
        Direction(2),
        Direction(3),
        Direction(4),
        Direction(5),
        Direction(6),
        Direction(7),
        Direction(8),
    ];

    pub fn from_index(index: u8) -> Result<Self> {
        if (index as usize) < Self::COUNT {
            Ok(Direction(index))
        } else {
            Err(Error::DirectionOutOfRange(index))
        }
    }

    pub fn from_offset(dx: i8, dy: i8) -> Option<Self> {
        OFFSETS
            .iter()
            .position(|&o| o == (dx, dy))
            .map(|i| Direction(i as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn offset(self) -> (i8, i8) {
        OFFSETS[self.0 as usize]
    }

    pub fn name(self) -> &'static str {
        NAMES[self.0 as usize]
    }

    pub fn is_center(self) -> bool {
        self.0 == 0
    }

    pub fn opposite(self) -> Self {
        let (dx, dy) = self.offset();
        Self::from_offset(-dx, -dy).expect("offset set is closed under negation")
    }
}

impl fmt::Debug for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Direction({}:{})", self.0, self.name())
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn direction_from_index(index: u8) -> Result<Direction> {
    Direction::from_index(index)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BorderPolicy {
    /// Out-of-sensor pixels read as zero.
    #[default]
    ZeroPad,
    /// Events whose blocks leave the sensor produce no flow.
    SkipEvent,
}

/// What the engine does when a timestamp goes backwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegressionPolicy {
    #[default]
    Error,
    Drop,
}

/// Largest supported block radius. A candidate search region is
/// `2r + 3` pixels wide and has to fit in one 64-bit row word.
pub const MAX_BLOCK_RADIUS: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub slice_duration_us: u64,
    pub block_radius: u32,
    pub downsample_n: u32,
    pub min_active_pixels: u32,
    pub border_policy: BorderPolicy,
    pub regression_policy: RegressionPolicy,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            slice_duration_us: 40_000,
            block_radius: 4,
            downsample_n: 1,
            min_active_pixels: 0,
            border_policy: BorderPolicy::ZeroPad,
            regression_policy: RegressionPolicy::Error,
        }
    }
}

impl FlowConfig {
    pub fn with_slice_duration(mut self, us: u64) -> Self {
        self.slice_duration_us = us;
        self
    }

    pub fn with_radius(mut self, radius: u32) -> Self {
        self.block_radius = radius;
        self
    }

    pub fn with_downsample(mut self, n: u32) -> Self {
        self.downsample_n = n;
        self
    }

    pub fn block_dimension(&self) -> u32 {
        2 * self.block_radius + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.slice_duration_us == 0 {
            return Err(Error::InvalidConfig("slice duration must be positive".into()));
        }
        if self.block_radius == 0 || self.block_radius > MAX_BLOCK_RADIUS {
            return Err(Error::InvalidConfig(format!(
                "block radius {} outside 1..={}",
                self.block_radius, MAX_BLOCK_RADIUS
            )));
        }
        if self.downsample_n == 0 {
            return Err(Error::InvalidConfig("downsample factor must be at least 1".into()));
        }
        Ok(())
    }

    /// Speed of a one-pixel displacement per slice, in pixels per second.
    pub fn unit_speed(&self) -> f64 {
        MICROS_PER_SECOND / self.slice_duration_us as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Velocity {
    pub vx: f64,
    pub vy: f64,
}

impl Velocity {
    pub const ZERO: Velocity = Velocity { vx: 0.0, vy: 0.0 };

    pub fn new(vx: f64, vy: f64) -> Self {
        Self { vx, vy }
    }

    pub fn norm(&self) -> f64 {
        self.vx.hypot(self.vy)
    }

    pub fn is_zero(&self) -> bool {
        self.vx == 0.0 && self.vy == 0.0
    }
}

/// A per-event motion estimate.
///
/// `direction` is the direction of motion and `distances` are indexed by
/// the motion direction each candidate block stands for, so
/// `distances[direction.index()]` is always the minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowEvent {
    pub timestamp: Timestamp,
    pub x: u16,
    pub y: u16,
    pub direction: Direction,
    pub velocity: Velocity,
    pub distances: [u32; 9],
    pub tie: bool,
}
