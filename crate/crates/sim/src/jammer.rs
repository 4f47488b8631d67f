//! Interference sources replaying IAT distributions.

use serde::{Deserialize, Serialize};
use wsmac_core::models::Regime;
use wsmac_core::rng::{derive_seed, rng_from_seed};
use wsmac_core::trace::{arrivals_until, IatDistribution};

use crate::error::{config_err, Result};

pub const DEFAULT_BURST_US: u64 = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum JammerMode {
    Peak,
    Offpeak,
    Silent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JammerPhase {
    pub start_us: u64,
    pub mode: JammerMode,
}

fn default_burst() -> u64 {
    DEFAULT_BURST_US
}

fn default_schedule() -> Vec<JammerPhase> {
    vec![JammerPhase {
        start_us: 0,
        mode: JammerMode::Peak,
    }]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JammerSpec {
    pub x: f64,
    pub y: f64,
    pub interference_range_m: f64,
    /// Emission length spawned by each arrival.
    #[serde(default = "default_burst")]
    pub burst_us: u64,
    pub peak: IatDistribution,
    pub offpeak: IatDistribution,
    /// Mode changes, ordered by start time.
    #[serde(default = "default_schedule")]
    pub schedule: Vec<JammerPhase>,
}

impl JammerSpec {
    pub fn distribution(&self, regime: Regime) -> &IatDistribution {
        match regime {
            Regime::Peak => &self.peak,
            Regime::Offpeak => &self.offpeak,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x.is_finite() && self.y.is_finite()) {
            return Err(config_err("jammer position must be finite"));
        }
        if !(self.interference_range_m.is_finite() && self.interference_range_m >= 0.0) {
            return Err(config_err("jammer interference range must be non-negative"));
        }
        if self.burst_us == 0 {
            return Err(config_err("jammer burst length must be positive"));
        }
        if self
            .schedule
            .windows(2)
            .any(|w| w[1].start_us < w[0].start_us)
        {
            return Err(config_err("jammer schedule must be ordered by start time"));
        }
        self.peak.validate()?;
        self.offpeak.validate()?;
        Ok(())
    }
}

/// Merged emission intervals `[start, end)` of one jammer, sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EmissionTimeline {
    intervals: Vec<(u64, u64)>,
    arrivals: usize,
}

impl EmissionTimeline {
    pub fn intervals(&self) -> &[(u64, u64)] {
        &self.intervals
    }

    /// Number of arrivals that spawned emissions (before merging).
    pub fn arrival_count(&self) -> usize {
        self.arrivals
    }

    /// True when any emission overlaps `[start, end)`.
    pub fn overlaps(&self, start: u64, end: u64) -> bool {
        let idx = self.intervals.partition_point(|iv| iv.1 <= start);
        idx < self.intervals.len() && self.intervals[idx].0 < end
    }

    /// Total emitting time inside `[start, end)`.
    pub fn busy_time(&self, start: u64, end: u64) -> u64 {
        let idx = self.intervals.partition_point(|iv| iv.1 <= start);
        self.intervals[idx..]
            .iter()
            .take_while(|iv| iv.0 < end)
            .map(|iv| iv.1.min(end) - iv.0.max(start))
            .sum()
    }
}

/// Emission intervals in `[quiet_until_us, duration_us)`, following the
/// jammer's mode schedule. Deterministic per (jammer index, seed).
pub fn generate_jammer_events(
    jammer: &JammerSpec,
    jammer_index: u32,
    duration_us: u64,
    quiet_until_us: u64,
    seed: u64,
) -> Result<EmissionTimeline> {
    jammer.validate()?;
    let mut rng = rng_from_seed(derive_seed(seed, 0x4a41_4d00 + u64::from(jammer_index)));
    let peak = jammer.peak.sampler()?;
    let offpeak = jammer.offpeak.sampler()?;
    let mut arrivals = Vec::new();
    for (i, phase) in jammer.schedule.iter().enumerate() {
        let end = jammer
            .schedule
            .get(i + 1)
            .map_or(duration_us, |p| p.start_us)
            .min(duration_us);
        let start = phase.start_us.max(quiet_until_us);
        if start >= end {
            continue;
        }
        let sampler = match phase.mode {
            JammerMode::Peak => &peak,
            JammerMode::Offpeak => &offpeak,
            JammerMode::Silent => continue,
        };
        // arrivals fall in (start, end]; keep those that start inside the phase
        arrivals.extend(
            arrivals_until(sampler, &mut rng, start, end)
                .into_iter()
                .filter(|&t| t < end),
        );
    }
    let mut intervals: Vec<(u64, u64)> = Vec::with_capacity(arrivals.len());
    for &t in &arrivals {
        let e = (t + jammer.burst_us).min(duration_us);
        match intervals.last_mut() {
            Some(last) if t <= last.1 => last.1 = last.1.max(e),
            _ => intervals.push((t, e)),
        }
    }
    Ok(EmissionTimeline {
        intervals,
        arrivals: arrivals.len(),
    })
}
