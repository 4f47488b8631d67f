//! Simulation configuration, read from and written to JSON.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use wsmac_core::models::Regime;
use wsmac_core::protocol::{DEFAULT_EMA_WINDOW, DEFAULT_TH_PDR, DEFAULT_TIMEOUT_PERIODS};
use wsmac_core::trace::WHITE_SPACE_US;

use crate::error::{config_err, Result};
use crate::jammer::JammerSpec;
use crate::topology::Topology;

pub const DEFAULT_SLOT_LEN_US: u64 = 50_000;
pub const DEFAULT_DURATION_US: u64 = 7_200_000_000;
pub const DEFAULT_LPL_MAX_TX: u32 = 3;

fn default_max_tx() -> u32 {
    DEFAULT_LPL_MAX_TX
}

/// MAC under test. Serialized as `{"kind": "LUCID"}` or
/// `{"kind": "LPL_BASELINE", "max_tx": 3}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ProtocolKind {
    /// Receiver-aware, model-scheduled MAC.
    #[serde(rename = "LUCID")]
    ReceiverAware,
    #[serde(rename = "LPL_BASELINE")]
    LplBaseline {
        #[serde(default = "default_max_tx")]
        max_tx: u32,
    },
}

impl ProtocolKind {
    pub fn name(&self) -> String {
        match self {
            ProtocolKind::ReceiverAware => "LUCID".to_string(),
            ProtocolKind::LplBaseline { max_tx } => format!("LPL_BASELINE(max_tx={max_tx})"),
        }
    }
}

/// Where node models come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ModelSource {
    /// Each node's models are trained on synthetic traces of the jammers
    /// that reach it.
    Trained {
        #[serde(default = "default_training_us")]
        training_duration_us: u64,
        #[serde(default = "default_components")]
        n_components: usize,
    },
    /// Model files per node id.
    Files { paths: BTreeMap<u32, PathBuf> },
}

fn default_training_us() -> u64 {
    600_000_000
}

fn default_components() -> usize {
    7
}

impl Default for ModelSource {
    fn default() -> Self {
        ModelSource::Trained {
            training_duration_us: default_training_us(),
            n_components: default_components(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeedbackConfig {
    pub n_window: u32,
    pub th_pdr: f64,
    pub timeout_periods: u32,
}

impl Default for FeedbackConfig {
    fn default() -> Self {
        Self {
            n_window: DEFAULT_EMA_WINDOW,
            th_pdr: DEFAULT_TH_PDR,
            timeout_periods: DEFAULT_TIMEOUT_PERIODS,
        }
    }
}

/// Timing knobs of the receiver-aware MAC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReceiverAwareConfig {
    /// Airtime of a data frame including its ACK.
    pub data_airtime_us: u64,
    /// Packets carried by one data frame: 114 payload bytes of a 127-byte
    /// frame hold six 19-byte records.
    pub max_frame_packets: usize,
    /// Transmissions of one frame per hop before its packets are dropped.
    pub max_attempts: u32,
    /// Width of one hop window in the control region.
    pub control_window_us: u64,
    pub control_airtime_us: u64,
    pub sync_airtime_us: u64,
    /// Gap between the coordinator's bootstrap sync packets.
    pub bootstrap_sync_gap_us: u64,
    pub model_exchange_start_us: u64,
    pub model_airtime_us: u64,
    pub relay_jitter_min_us: u64,
    pub relay_jitter_max_us: u64,
}

impl Default for ReceiverAwareConfig {
    fn default() -> Self {
        Self {
            data_airtime_us: WHITE_SPACE_US,
            max_frame_packets: 6,
            max_attempts: 5,
            control_window_us: 4_000,
            control_airtime_us: 1_000,
            sync_airtime_us: 1_000,
            bootstrap_sync_gap_us: 500_000,
            model_exchange_start_us: 3_000_000,
            model_airtime_us: 250_000,
            relay_jitter_min_us: 1_000,
            relay_jitter_max_us: 20_000,
        }
    }
}

/// Timing knobs of the low-power-listening baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LplConfig {
    pub wake_interval_us: u64,
    pub cca_us: u64,
    /// Listening time after energy was detected.
    pub listen_after_detect_us: u64,
    pub strobe_airtime_us: u64,
    pub strobe_gap_us: u64,
    pub backoff_min_us: u64,
    pub backoff_max_us: u64,
}

impl Default for LplConfig {
    fn default() -> Self {
        Self {
            wake_interval_us: 125_000,
            cca_us: 500,
            listen_after_detect_us: 10_000,
            strobe_airtime_us: WHITE_SPACE_US / 2,
            strobe_gap_us: 400,
            backoff_min_us: 10_000,
            backoff_max_us: 125_000,
        }
    }
}

/// Free-form labels copied into reports.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunLabels {
    pub scenario: String,
    pub environment: String,
    pub interference_type: String,
}

fn default_slot_len() -> u64 {
    DEFAULT_SLOT_LEN_US
}

fn default_duration() -> u64 {
    DEFAULT_DURATION_US
}

fn default_n_slot() -> u32 {
    2
}

fn default_regime() -> Regime {
    Regime::Offpeak
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub topology: Topology,
    pub protocol: ProtocolKind,
    pub t_data_us: u64,
    #[serde(default = "default_slot_len")]
    pub slot_len_us: u64,
    #[serde(default = "default_n_slot")]
    pub n_slot: u32,
    #[serde(default = "default_duration")]
    pub duration_us: u64,
    #[serde(default)]
    pub jammers: Vec<JammerSpec>,
    #[serde(default)]
    pub models: ModelSource,
    /// Regime every node schedules with at start.
    #[serde(default = "default_regime")]
    pub initial_regime: Regime,
    #[serde(default)]
    pub feedback: FeedbackConfig,
    #[serde(default)]
    pub receiver_aware: ReceiverAwareConfig,
    #[serde(default)]
    pub lpl: LplConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub labels: RunLabels,
}

impl SimConfig {
    /// Defaults for everything but topology, protocol and data period.
    pub fn new(topology: Topology, protocol: ProtocolKind, t_data_us: u64) -> Self {
        Self {
            topology,
            protocol,
            t_data_us,
            slot_len_us: DEFAULT_SLOT_LEN_US,
            n_slot: default_n_slot(),
            duration_us: DEFAULT_DURATION_US,
            jammers: Vec::new(),
            models: ModelSource::default(),
            initial_regime: default_regime(),
            feedback: FeedbackConfig::default(),
            receiver_aware: ReceiverAwareConfig::default(),
            lpl: LplConfig::default(),
            seed: 0,
            labels: RunLabels::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SimConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Network depth plus two periods are kept free of new packets at the
    /// end of a run so in-flight traffic can drain.
    pub fn drain_periods(&self) -> u64 {
        u64::from(self.topology.max_depth()) + 2
    }

    pub fn validate(&self) -> Result<()> {
        self.topology.validate()?;
        if self.slot_len_us == 0 || self.t_data_us == 0 {
            return Err(config_err("slot_len_us and t_data_us must be positive"));
        }
        if self.t_data_us % self.slot_len_us != 0 {
            return Err(config_err(format!(
                "slot_len_us {} does not divide t_data_us {}",
                self.slot_len_us, self.t_data_us
            )));
        }
        if self.slot_len_us < WHITE_SPACE_US {
            return Err(config_err("a slot must hold at least one sub-slot"));
        }
        if self.n_slot == 0 {
            return Err(config_err("n_slot must be at least 1"));
        }
        let periods = self.duration_us / self.t_data_us;
        if periods < self.drain_periods() + 3 {
            return Err(config_err(format!(
                "duration covers {periods} data periods; at least {} are needed",
                self.drain_periods() + 3
            )));
        }
        for j in &self.jammers {
            j.validate()?;
        }
        let ra = &self.receiver_aware;
        if ra.max_frame_packets == 0 || ra.max_attempts == 0 {
            return Err(config_err(
                "frames need room for a packet and at least one attempt",
            ));
        }
        if ra.data_airtime_us == 0 || ra.data_airtime_us > WHITE_SPACE_US {
            return Err(config_err("data airtime must fit in one sub-slot"));
        }
        if ra.control_airtime_us == 0 || ra.control_airtime_us > ra.control_window_us {
            return Err(config_err("control airtime must fit in a control window"));
        }
        if ra.sync_airtime_us == 0 || ra.sync_airtime_us > ra.control_window_us {
            return Err(config_err("sync airtime must fit in a control window"));
        }
        if ra.relay_jitter_min_us > ra.relay_jitter_max_us {
            return Err(config_err("relay jitter range is empty"));
        }
        if ra.bootstrap_sync_gap_us == 0 || ra.model_airtime_us == 0 {
            return Err(config_err("bootstrap timings must be positive"));
        }
        let lpl = &self.lpl;
        if lpl.wake_interval_us == 0 || lpl.cca_us == 0 || lpl.strobe_airtime_us == 0 {
            return Err(config_err("LPL timings must be positive"));
        }
        if lpl.backoff_min_us > lpl.backoff_max_us {
            return Err(config_err("LPL backoff range is empty"));
        }
        if let ProtocolKind::LplBaseline { max_tx } = self.protocol {
            if max_tx == 0 {
                return Err(config_err("max_tx must be at least 1"));
            }
        }
        if let ModelSource::Trained {
            training_duration_us,
            n_components,
        } = self.models
        {
            if n_components == 0 || training_duration_us < 2 * self.slot_len_us {
                return Err(config_err(
                    "training needs components and at least two slots",
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> SimConfig {
        SimConfig::new(
            Topology::five_node(),
            ProtocolKind::ReceiverAware,
            60_000_000,
        )
    }

    #[test]
    fn json_round_trip_with_defaults() {
        let cfg = base();
        let text = cfg.to_json().unwrap();
        assert!(text.contains("\"kind\": \"LUCID\""));
        assert_eq!(SimConfig::from_json(&text).unwrap(), cfg);
        let lpl: ProtocolKind = serde_json::from_str(r#"{"kind":"LPL_BASELINE"}"#).unwrap();
        assert_eq!(lpl, ProtocolKind::LplBaseline { max_tx: 3 });
    }

    #[test]
    fn unknown_protocol_rejected() {
        let text = base().to_json().unwrap().replace("LUCID", "CSMA");
        assert!(SimConfig::from_json(&text).is_err());
    }

    #[test]
    fn slot_must_divide_period() {
        let mut cfg = base();
        cfg.slot_len_us = 70_000;
        assert!(cfg.validate().unwrap_err().to_string().contains("divide"));
        let mut cfg = base();
        cfg.duration_us = 5 * cfg.t_data_us;
        assert!(cfg.validate().is_err());
    }
}
