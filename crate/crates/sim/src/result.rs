//! Simulation output.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use wsmac_core::models::Regime;

/// Terminal fate of a data packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PacketOutcome {
    Delivered,
    LostCollision,
    LostInterference,
    LostNoRendezvous,
}

impl PacketOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            PacketOutcome::Delivered => "DELIVERED",
            PacketOutcome::LostCollision => "LOST_COLLISION",
            PacketOutcome::LostInterference => "LOST_INTERFERENCE",
            PacketOutcome::LostNoRendezvous => "LOST_NO_RENDEZVOUS",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub packet_id: u64,
    pub origin: u32,
    pub period_index: u64,
    pub generated_us: u64,
    /// Time the outcome became final.
    pub time_us: u64,
    /// Node the packet was last sent to (the coordinator when delivered).
    pub dst: u32,
    pub outcome: PacketOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LedgerSummary {
    pub generated: u64,
    pub delivered: u64,
    pub lost_collision: u64,
    pub lost_interference: u64,
    pub lost_no_rendezvous: u64,
}

impl LedgerSummary {
    pub fn losses(&self) -> u64 {
        self.lost_collision + self.lost_interference + self.lost_no_rendezvous
    }

    pub fn is_conserved(&self) -> bool {
        self.generated == self.delivered + self.losses()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodPdr {
    pub period_index: u64,
    pub generated: u64,
    pub delivered: u64,
    pub pdr_pct: f64,
}

/// One online evaluation by the coordinator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmaSample {
    pub period_index: u64,
    pub time_us: u64,
    pub pdr_pct: f64,
    /// Smoothed PDR; `None` while the warm-up window is filling.
    pub ema_pct: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriggerRecord {
    pub time_us: u64,
    pub period_index: u64,
    pub ema_pct: f64,
    pub target: Regime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub seed: u64,
    pub protocol: String,
    #[serde(default)]
    pub labels: crate::config::RunLabels,
    pub n_nodes: usize,
    pub duration_us: u64,
    pub t_data_us: u64,
    pub pdr_pct: f64,
    pub duty_cycle_pct: f64,
    pub per_period_pdr: Vec<PeriodPdr>,
    pub ema_series: Vec<EmaSample>,
    pub triggers: Vec<TriggerRecord>,
    /// Radio-on time per node id.
    pub node_radio_on_us: BTreeMap<u32, u64>,
    pub ledger_summary: LedgerSummary,
    /// Regime each node ended the run with (receiver-aware MAC only).
    pub final_regimes: BTreeMap<u32, Regime>,
    /// Non-fatal protocol failures, e.g. a missing neighbour model.
    pub errors: Vec<String>,
    #[serde(skip)]
    pub ledger: Vec<LedgerEntry>,
}

pub const LEDGER_CSV_HEADER: &str = "time_us,src,dst,outcome";

impl SimResult {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    /// Per-packet ledger, one row per generated packet ordered by id.
    pub fn ledger_csv(&self) -> String {
        let mut out = String::from(LEDGER_CSV_HEADER);
        out.push('\n');
        for e in &self.ledger {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                e.time_us,
                e.origin,
                e.dst,
                e.outcome.as_str()
            );
        }
        out
    }
}
