//! JSON model file holding the peak and off-peak model pairs.
//!
//! Floats are written by serde_json's shortest round-trip formatter, so a
//! save/load cycle reproduces every parameter bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::gmm::GmmParams;
use super::hmm::HmmParams;
use crate::error::{Error, Result};
use crate::trace::Thresholds;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Interference regime selecting which model pair is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Regime {
    Peak,
    Offpeak,
}

impl Regime {
    pub fn other(self) -> Self {
        match self {
            Regime::Peak => Regime::Offpeak,
            Regime::Offpeak => Regime::Peak,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Peak => "PEAK",
            Regime::Offpeak => "OFFPEAK",
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "PEAK" => Ok(Regime::Peak),
            "OFFPEAK" | "OFF-PEAK" | "OFF_PEAK" => Ok(Regime::Offpeak),
            other => Err(Error::InvalidArgument(format!("unknown regime '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub gmm: GmmParams,
    pub hmm: HmmParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPair {
    pub peak: ModelEntry,
    pub offpeak: ModelEntry,
    pub active: Regime,
}

impl ModelPair {
    pub fn get(&self, regime: Regime) -> &ModelEntry {
        match regime {
            Regime::Peak => &self.peak,
            Regime::Offpeak => &self.offpeak,
        }
    }

    pub fn active_entry(&self) -> &ModelEntry {
        self.get(self.active)
    }

    pub fn validate(&self) -> Result<()> {
        for e in [&self.peak, &self.offpeak] {
            e.gmm.validate()?;
            e.hmm.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub slot_len_us: u64,
    pub thresholds: Thresholds,
    pub models: ModelPair,
}

impl ModelFile {
    pub fn new(thresholds: Thresholds, models: ModelPair) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            slot_len_us: thresholds.slot_len_us,
            thresholds,
            models,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses and validates version, slot length and digests.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFile(format!(
                "unsupported format_version {} (expected {MODEL_FORMAT_VERSION})",
                file.format_version
            )));
        }
        if file.slot_len_us != file.thresholds.slot_len_us {
            return Err(Error::ModelFile(
                "slot_len_us disagrees with thresholds".into(),
            ));
        }
        file.thresholds.validate()?;
        file.models.validate()?;
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
