//! Cycle model of the hardware matcher and its control state machine.
//!
//! Per event the datapath reads one block row per clock from single-port
//! RAM, then spends one clock on the Hamming distances and one on the
//! minimum, i.e. `block_dimension + 2` clocks.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum RamPorts {
    #[default]
    SinglePort,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardwareConfig {
    pub clock_hz: f64,
    pub block_dimension: u32,
    pub ram_ports: RamPorts,
}

impl Default for HardwareConfig {
    fn default() -> Self {
        Self { clock_hz: 50e6, block_dimension: 9, ram_ports: RamPorts::SinglePort }
    }
}

impl HardwareConfig {
    pub fn new(clock_hz: f64, block_dimension: u32) -> Result<Self> {
        let config = Self { clock_hz, block_dimension, ram_ports: RamPorts::SinglePort };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.clock_hz.is_finite() && self.clock_hz > 0.0) {
            return Err(Error::InvalidConfig(format!("clock {} Hz must be positive", self.clock_hz)));
        }
        if self.block_dimension < 3 || self.block_dimension.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "block dimension {} must be odd and at least 3",
                self.block_dimension
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Phase {
    BlockRead,
    HD,
    GetMinimum,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleReport {
    pub cycles_per_event: u64,
    /// Seconds.
    pub time_per_event: f64,
    /// Events per second.
    pub max_event_rate: f64,
    pub breakdown: BTreeMap<Phase, u64>,
}

impl CycleReport {
    pub fn time_per_event_ns(&self, config: &HardwareConfig) -> f64 {
        self.cycles_per_event as f64 * 1e9 / config.clock_hz
    }
}

pub fn cycles_per_event(config: &HardwareConfig) -> Result<CycleReport> {
    config.validate()?;
    let breakdown = BTreeMap::from([
        (Phase::BlockRead, config.block_dimension as u64),
        (Phase::HD, 1),
        (Phase::GetMinimum, 1),
    ]);
    let cycles: u64 = breakdown.values().sum();
    Ok(CycleReport {
        cycles_per_event: cycles,
        time_per_event: cycles as f64 / config.clock_hz,
        max_event_rate: config.clock_hz / cycles as f64,
        breakdown,
    })
}

/// How many times faster the hardware is than a software time per event.
pub fn speedup_vs_software(report: &CycleReport, software_us_per_event: f64) -> Result<f64> {
    if !(software_us_per_event.is_finite() && software_us_per_event > 0.0) {
        return Err(Error::InvalidConfig("software time per event must be positive".into()));
    }
    Ok(software_us_per_event * 1e-6 / report.time_per_event)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FsmState {
    Idle,
    Read,
    DataCheck,
    ExtractEvents,
    ReadBlocks,
    SadHd,
    GetMinimum,
    SendData,
    TimeoutCheck,
    RamRotation,
}

impl FsmState {
    pub fn label(self) -> &'static str {
        match self {
            FsmState::Idle => "IDLE",
            FsmState::Read => "Read",
            FsmState::DataCheck => "Data Check",
            FsmState::ExtractEvents => "Extract Events",
            FsmState::ReadBlocks => "Read Blocks",
            FsmState::SadHd => "SAD/HD",
            FsmState::GetMinimum => "Get Minimum",
            FsmState::SendData => "Send data",
            FsmState::TimeoutCheck => "Timeout Check",
            FsmState::RamRotation => "RAM Rotation",
        }
    }

    pub fn is_computation(self) -> bool {
        matches!(self, FsmState::ReadBlocks | FsmState::SadHd | FsmState::GetMinimum)
    }
}

/// Handshake input seen by the state machine.
///
/// The request line is active low: `Hold` keeps `req = 1` for one clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stimulus {
    Hold,
    Request {
        /// Outcome of the data check.
        data_valid: bool,
        /// Clocks the receiver keeps `ack = 1` before releasing it.
        ack_hold_cycles: u32,
        /// Whether the slice interval has expired, triggering a rotation.
        timeout: bool,
    },
}

impl Stimulus {
    pub fn event() -> Self {
        Stimulus::Request { data_valid: true, ack_hold_cycles: 0, timeout: false }
    }
}

/// One state per clock, ending with the resting IDLE state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FsmTrace {
    pub states: Vec<FsmState>,
}

impl FsmTrace {
    /// States in visiting order with consecutive repeats collapsed.
    pub fn visits(&self) -> Vec<FsmState> {
        let mut out: Vec<FsmState> = Vec::new();
        for &s in &self.states {
            if out.last() != Some(&s) {
                out.push(s);
            }
        }
        out
    }

    pub fn cycles_in(&self, state: FsmState) -> u64 {
        self.states.iter().filter(|&&s| s == state).count() as u64
    }

    pub fn computation_cycles(&self) -> u64 {
        self.states.iter().filter(|s| s.is_computation()).count() as u64
    }
}

pub fn step_fsm(config: &HardwareConfig, stimuli: &[Stimulus]) -> Result<FsmTrace> {
    config.validate()?;
    let mut states = Vec::new();
    for (index, stimulus) in stimuli.iter().enumerate() {
        match *stimulus {
            Stimulus::Hold => states.push(FsmState::Idle),
            Stimulus::Request { data_valid, ack_hold_cycles, timeout } => {
                if !data_valid && (ack_hold_cycles > 0 || timeout) {
                    return Err(Error::MalformedStimulus {
                        index,
                        reason: "handshake given for a request that fails the data check".into(),
                    });
                }
                states.extend([FsmState::Idle, FsmState::Read, FsmState::DataCheck]);
                if !data_valid {
                    continue;
                }
                states.push(FsmState::ExtractEvents);
                states.extend(std::iter::repeat_n(FsmState::ReadBlocks, config.block_dimension as usize));
                states.extend([FsmState::SadHd, FsmState::GetMinimum]);
                states.extend(std::iter::repeat_n(FsmState::SendData, 1 + ack_hold_cycles as usize));
                states.push(FsmState::TimeoutCheck);
                if timeout {
                    states.push(FsmState::RamRotation);
                }
            }
        }
    }
    states.push(FsmState::Idle);
    Ok(FsmTrace { states })
}
