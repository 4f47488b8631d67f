//! Interference arrival traces: ingestion, synthesis, slot featurization
//! and the threshold rule that labels slots FREE or BUSY.
//!
//! A trace is a list of arrival timestamps (µs) observed on one
//! IEEE 802.15.4 channel. Slots partition the time axis into
//! `[k·slot_len, (k+1)·slot_len)`; each slot is summarised by the mean
//! inter-arrival time of its arrivals and their count.

use std::fmt::Write as _;
use std::io::Read;

use rand::Rng;
use rand_distr::{Distribution, Exp, Pareto};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{rng_from_seed, SimRng};

/// Lowest and highest IEEE 802.15.4 channel numbers in the 2.4 GHz band.
pub const MIN_CHANNEL: u8 = 11;
pub const MAX_CHANNEL: u8 = 26;

/// Airtime of a 133-byte frame plus its ACK at 250 kbps.
pub const WHITE_SPACE_US: u64 = 8512;

// ============================================================================
// Domain types
// ============================================================================

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrivalTrace {
    channel_id: u8,
    arrivals: Vec<u64>,
    duration_us: u64,
}

impl ArrivalTrace {
    /// Builds a trace, coalescing duplicate timestamps.
    pub fn new(channel_id: u8, mut arrivals: Vec<u64>, duration_us: u64) -> Result<Self> {
        check_channel(channel_id)?;
        if let Some(w) = arrivals.windows(2).find(|w| w[1] < w[0]) {
            return Err(invalid(format!(
                "arrivals must be non-decreasing ({} after {})",
                w[1], w[0]
            )));
        }
        arrivals.dedup();
        if let Some(&last) = arrivals.last() {
            if last > duration_us {
                return Err(invalid(format!(
                    "arrival {last} lies beyond trace duration {duration_us}"
                )));
            }
        }
        Ok(Self {
            channel_id,
            arrivals,
            duration_us,
        })
    }

    pub fn channel_id(&self) -> u8 {
        self.channel_id
    }

    pub fn arrivals(&self) -> &[u64] {
        &self.arrivals
    }

    pub fn duration_us(&self) -> u64 {
        self.duration_us
    }

    pub fn len(&self) -> usize {
        self.arrivals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrivals.is_empty()
    }

    /// Successive differences between arrivals.
    pub fn inter_arrival_times(&self) -> Vec<u64> {
        self.arrivals.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Sub-trace covering `[start_us, end_us)`, re-based to start at zero.
    pub fn window(&self, start_us: u64, end_us: u64) -> ArrivalTrace {
        let lo = self.arrivals.partition_point(|&t| t < start_us);
        let hi = self.arrivals.partition_point(|&t| t < end_us);
        ArrivalTrace {
            channel_id: self.channel_id,
            arrivals: self.arrivals[lo..hi].iter().map(|t| t - start_us).collect(),
            duration_us: end_us.min(self.duration_us).saturating_sub(start_us),
        }
    }

    /// Merges several traces observed on one channel (e.g. two jammers
    /// heard by the same node).
    pub fn superpose(traces: &[ArrivalTrace]) -> Result<ArrivalTrace> {
        let first = traces
            .first()
            .ok_or_else(|| invalid("superpose needs at least one trace"))?;
        let mut arrivals: Vec<u64> = traces
            .iter()
            .flat_map(|t| t.arrivals.iter().copied())
            .collect();
        arrivals.sort_unstable();
        let duration = traces.iter().map(|t| t.duration_us).max().unwrap_or(0);
        ArrivalTrace::new(first.channel_id, arrivals, duration)
    }
}

fn check_channel(channel_id: u8) -> Result<()> {
    if !(MIN_CHANNEL..=MAX_CHANNEL).contains(&channel_id) {
        return Err(invalid(format!(
            "channel {channel_id} outside [{MIN_CHANNEL}, {MAX_CHANNEL}]"
        )));
    }
    Ok(())
}

/// Threshold configuration for labelling slots and for the CCA model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub th_iat_us: u64,
    pub th_count: u32,
    pub slot_len_us: u64,
    pub cca_dbm: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self::characterization()
    }
}

impl Thresholds {
    /// Defaults used when characterizing traces (100 ms slots).
    pub fn characterization() -> Self {
        Self {
            th_iat_us: WHITE_SPACE_US,
            th_count: 11,
            slot_len_us: 100_000,
            cca_dbm: -77.0,
        }
    }

    /// Defaults used by the MAC (50 ms slots).
    pub fn mac() -> Self {
        Self {
            slot_len_us: 50_000,
            ..Self::characterization()
        }
    }

    pub fn with_slot_len(self, slot_len_us: u64) -> Self {
        Self {
            slot_len_us,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.th_iat_us == 0 {
            return Err(invalid("th_iat_us must be positive"));
        }
        if self.th_count == 0 {
            return Err(invalid("th_count must be at least 1"));
        }
        if self.slot_len_us < self.th_iat_us {
            return Err(invalid(format!(
                "slot length {} shorter than th_iat {}",
                self.slot_len_us, self.th_iat_us
            )));
        }
        Ok(())
    }
}

/// Per-slot observation: mean inter-arrival time and arrival count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotFeatures {
    pub slot_index: u64,
    pub mean_iat_us: f64,
    pub count: u32,
}

impl SlotFeatures {
    pub fn new(slot_index: u64, mean_iat_us: f64, count: u32) -> Self {
        Self {
            slot_index,
            mean_iat_us,
            count,
        }
    }

    /// The observation as a point in the 2-D feature space.
    pub fn point(&self) -> [f64; 2] {
        [self.mean_iat_us, f64::from(self.count)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ChannelState {
    Free,
    Busy,
}

impl ChannelState {
    /// Index used by models: FREE = 0, BUSY = 1.
    pub fn index(self) -> usize {
        match self {
            ChannelState::Free => 0,
            ChannelState::Busy => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            ChannelState::Free
        } else {
            ChannelState::Busy
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ChannelState::Free => "FREE",
            ChannelState::Busy => "BUSY",
        }
    }
}

impl std::str::FromStr for ChannelState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "FREE" => Ok(ChannelState::Free),
            "BUSY" => Ok(ChannelState::Busy),
            other => Err(invalid(format!("unknown channel state '{other}'"))),
        }
    }
}

// ============================================================================
// IAT distributions
// ============================================================================

/// Distribution of interference inter-arrival times, in microseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IatDistribution {
    /// Histogram of IAT values; `bins` holds `(iat_us, mass)` pairs.
    Empirical {
        bins: Vec<(u64, f64)>,
    },
    Exponential {
        rate_per_us: f64,
    },
    Pareto {
        shape: f64,
        scale_us: f64,
    },
}

impl IatDistribution {
    pub fn exponential_with_mean(mean_us: f64) -> Self {
        IatDistribution::Exponential {
            rate_per_us: 1.0 / mean_us,
        }
    }

    /// Empirical distribution from observed IATs (zero gaps are dropped).
    pub fn from_iats(iats: &[u64]) -> Result<Self> {
        let mut sorted: Vec<u64> = iats.iter().copied().filter(|&v| v > 0).collect();
        if sorted.is_empty() {
            return Err(invalid("no positive inter-arrival times"));
        }
        sorted.sort_unstable();
        let n = sorted.len() as f64;
        let mut bins: Vec<(u64, f64)> = Vec::new();
        for v in sorted {
            match bins.last_mut() {
                Some((last, mass)) if *last == v => *mass += 1.0,
                _ => bins.push((v, 1.0)),
            }
        }
        for (_, m) in &mut bins {
            *m /= n;
        }
        let dist = IatDistribution::Empirical { bins };
        dist.validate()?;
        Ok(dist)
    }

    /// Empirical distribution from a trace's own IATs.
    pub fn from_trace(trace: &ArrivalTrace) -> Result<Self> {
        Self::from_iats(&trace.inter_arrival_times())
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            IatDistribution::Empirical { bins } => {
                if bins.is_empty() {
                    return Err(invalid("empirical distribution has no bins"));
                }
                if bins.iter().any(|&(v, _)| v == 0) {
                    return Err(invalid("degenerate distribution: mass at zero IAT"));
                }
                if bins.iter().any(|&(_, m)| !(m >= 0.0) || !m.is_finite()) {
                    return Err(invalid("empirical masses must be finite and non-negative"));
                }
                let total: f64 = bins.iter().map(|&(_, m)| m).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(invalid(format!("empirical masses sum to {total}, not 1")));
                }
            }
            IatDistribution::Exponential { rate_per_us } => {
                if !(rate_per_us.is_finite() && *rate_per_us > 0.0) {
                    return Err(invalid(
                        "degenerate distribution: exponential rate must be positive and finite",
                    ));
                }
            }
            IatDistribution::Pareto { shape, scale_us } => {
                if !(shape.is_finite() && *shape > 0.0 && scale_us.is_finite() && *scale_us > 0.0) {
                    return Err(invalid(
                        "degenerate distribution: pareto shape and scale must be positive",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Mean IAT in µs (infinite for Pareto with shape ≤ 1).
    pub fn mean_us(&self) -> f64 {
        match self {
            IatDistribution::Empirical { bins } => bins.iter().map(|&(v, m)| v as f64 * m).sum(),
            IatDistribution::Exponential { rate_per_us } => 1.0 / rate_per_us,
            IatDistribution::Pareto { shape, scale_us } => {
                if *shape <= 1.0 {
                    f64::INFINITY
                } else {
                    shape * scale_us / (shape - 1.0)
                }
            }
        }
    }

    /// Builds a reusable sampler. Fails on invalid parameters.
    pub fn sampler(&self) -> Result<IatSampler> {
        self.validate()?;
        Ok(match self {
            IatDistribution::Empirical { bins } => {
                let mut acc = 0.0;
                let cumulative = bins
                    .iter()
                    .map(|&(v, m)| {
                        acc += m;
                        (acc, v)
                    })
                    .collect();
                IatSampler::Empirical(cumulative)
            }
            IatDistribution::Exponential { rate_per_us } => {
                IatSampler::Exponential(Exp::new(*rate_per_us).map_err(|e| invalid(e.to_string()))?)
            }
            IatDistribution::Pareto { shape, scale_us } => IatSampler::Pareto(
                Pareto::new(*scale_us, *shape).map_err(|e| invalid(e.to_string()))?,
            ),
        })
    }
}

/// Draws integer IATs (≥ 1 µs) from an [`IatDistribution`].
#[derive(Debug, Clone)]
pub enum IatSampler {
    Empirical(Vec<(f64, u64)>),
    Exponential(Exp<f64>),
    Pareto(Pareto<f64>),
}

impl IatSampler {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            IatSampler::Empirical(cum) => {
                let total = cum.last().map_or(1.0, |c| c.0);
                let u: f64 = rng.random::<f64>() * total;
                let idx = cum.partition_point(|&(c, _)| c <= u).min(cum.len() - 1);
                cum[idx].1
            }
            IatSampler::Exponential(d) => to_micros(d.sample(rng)),
            IatSampler::Pareto(d) => to_micros(d.sample(rng)),
        }
    }
}

fn to_micros(x: f64) -> u64 {
    if x.is_finite() {
        (x.round() as u64).max(1)
    } else {
        u64::MAX / 4
    }
}

// ============================================================================
// Operations
// ============================================================================

/// Parses the plain-text trace format.
///
/// One unsigned integer timestamp per line; an optional first line
/// `# duration_us=<N> channel=<C>` overrides duration and channel. Other
/// `#` lines are comments.
pub fn ingest_trace<R: Read>(mut source: R, channel_id: u8) -> Result<ArrivalTrace> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    parse_trace(&text, channel_id)
}

pub fn parse_trace(text: &str, channel_id: u8) -> Result<ArrivalTrace> {
    let mut channel = channel_id;
    let mut header_duration = None;
    let mut arrivals: Vec<u64> = Vec::new();
    let mut seen_content = false;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if !seen_content && comment.contains('=') {
                for token in comment.split_whitespace() {
                    let (key, value) = token.split_once('=').ok_or_else(|| Error::Parse {
                        line: line_no,
                        msg: format!("malformed header token '{token}'"),
                    })?;
                    let bad = |what: &str| Error::Parse {
                        line: line_no,
                        msg: format!("bad {what} '{value}'"),
                    };
                    match key {
                        "duration_us" => {
                            header_duration =
                                Some(value.parse::<u64>().map_err(|_| bad("duration"))?)
                        }
                        "channel" => channel = value.parse::<u8>().map_err(|_| bad("channel"))?,
                        _ => {
                            return Err(Error::Parse {
                                line: line_no,
                                msg: format!("unknown header key '{key}'"),
                            })
                        }
                    }
                }
            }
            seen_content = true;
            continue;
        }
        seen_content = true;
        let value: u64 = line.parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("expected unsigned integer timestamp, found '{line}'"),
        })?;
        if let Some(&previous) = arrivals.last() {
            if value < previous {
                return Err(Error::Ordering {
                    line: line_no,
                    value,
                    previous,
                });
            }
            if value == previous {
                continue;
            }
        }
        arrivals.push(value);
    }

    let last = arrivals.last().copied().unwrap_or(0);
    let duration_us = match header_duration {
        Some(d) if d < last => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("header duration {d} is shorter than last arrival {last}"),
            })
        }
        Some(d) => d,
        None => last,
    };
    check_channel(channel)?;
    Ok(ArrivalTrace {
        channel_id: channel,
        arrivals,
        duration_us,
    })
}

/// Writes a trace in the format read by [`ingest_trace`].
pub fn emit_trace(trace: &ArrivalTrace) -> String {
    let mut out = String::with_capacity(trace.arrivals.len() * 8 + 48);
    let _ = writeln!(
        out,
        "# duration_us={} channel={}",
        trace.duration_us, trace.channel_id
    );
    for t in &trace.arrivals {
        let _ = writeln!(out, "{t}");
    }
    out
}

/// Generates a trace by cumulative IAT draws, truncated at `duration_us`.
pub fn synthesize_trace(
    dist: &IatDistribution,
    duration_us: u64,
    seed: u64,
    channel_id: u8,
) -> Result<ArrivalTrace> {
    if duration_us == 0 {
        return Err(invalid("duration must be positive"));
    }
    check_channel(channel_id)?;
    let sampler = dist.sampler()?;
    let mut rng = rng_from_seed(seed);
    let arrivals = arrivals_until(&sampler, &mut rng, 0, duration_us);
    Ok(ArrivalTrace {
        channel_id,
        arrivals,
        duration_us,
    })
}

/// Cumulative arrivals in `(start_us, end_us]` drawn from `sampler`.
pub fn arrivals_until(
    sampler: &IatSampler,
    rng: &mut SimRng,
    start_us: u64,
    end_us: u64,
) -> Vec<u64> {
    let mut arrivals = Vec::new();
    let mut t = start_us;
    loop {
        t = t.saturating_add(sampler.draw(rng));
        if t > end_us {
            break;
        }
        arrivals.push(t);
    }
    arrivals
}

/// Number of slots covering a trace: the ceiling partition of its
/// duration, widened if an arrival sits exactly on the end boundary.
pub fn slot_count(trace: &ArrivalTrace, slot_len_us: u64) -> u64 {
    let by_duration = trace.duration_us.div_ceil(slot_len_us);
    let by_arrivals = trace.arrivals.last().map_or(0, |&t| t / slot_len_us + 1);
    by_duration.max(by_arrivals)
}

/// Featurizes a trace slot by slot.
///
/// Slots with fewer than two arrivals carry `mean_iat_us = slot_len_us`.
/// Gaps are only taken between arrivals of the same slot.
pub fn extract_slot_features(trace: &ArrivalTrace, slot_len_us: u64) -> Result<Vec<SlotFeatures>> {
    if slot_len_us == 0 {
        return Err(invalid("slot length must be positive"));
    }
    let n_slots = slot_count(trace, slot_len_us);
    let mut out = Vec::with_capacity(n_slots as usize);
    let arrivals = &trace.arrivals;
    let mut i = 0usize;
    for k in 0..n_slots {
        let end = (k + 1) * slot_len_us;
        let start_idx = i;
        while i < arrivals.len() && arrivals[i] < end {
            i += 1;
        }
        let slot = &arrivals[start_idx..i];
        let count = slot.len();
        let mean_iat_us = if count >= 2 {
            (slot[count - 1] - slot[0]) as f64 / (count - 1) as f64
        } else {
            slot_len_us as f64
        };
        out.push(SlotFeatures {
            slot_index: k,
            mean_iat_us,
            count: count as u32,
        });
    }
    Ok(out)
}

/// Threshold rule: BUSY iff `mean_iat ≤ TH_IAT` and `count ≥ TH_count`.
pub fn label_state(features: &SlotFeatures, th: &Thresholds) -> ChannelState {
    if features.mean_iat_us <= th.th_iat_us as f64 && features.count >= th.th_count {
        ChannelState::Busy
    } else {
        ChannelState::Free
    }
}

pub fn label_channel_states(features: &[SlotFeatures], th: &Thresholds) -> Vec<ChannelState> {
    features.iter().map(|f| label_state(f, th)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ingest_three_lines() {
        let t = parse_trace("0\n8512\n100000", 18).unwrap();
        assert_eq!(t.arrivals(), &[0, 8512, 100_000]);
        assert_eq!(t.duration_us(), 100_000);
        assert_eq!(t.channel_id(), 18);
    }

    #[test]
    fn ingest_empty() {
        let t = parse_trace("", 18).unwrap();
        assert!(t.is_empty());
        assert_eq!(t.duration_us(), 0);
    }

    #[test]
    fn ingest_rejects_decreasing() {
        match parse_trace("5\n3", 18) {
            Err(Error::Ordering { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected ordering error, got {other:?}"),
        }
    }

    #[test]
    fn ingest_reports_malformed_line() {
        match parse_trace("1\n2\nabc\n", 18) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn ingest_header_and_duplicates() {
        let t = parse_trace(
            "# duration_us=500000 channel=13\n# comment\n10\n10\n20\n",
            18,
        )
        .unwrap();
        assert_eq!(t.arrivals(), &[10, 20]);
        assert_eq!(t.duration_us(), 500_000);
        assert_eq!(t.channel_id(), 13);
    }

    #[test]
    fn ingest_rejects_short_header_duration() {
        assert!(parse_trace("# duration_us=5\n10\n", 18).is_err());
    }

    #[test]
    fn features_mean_of_gaps() {
        let t = ArrivalTrace::new(18, vec![10_000, 20_000, 30_000], 100_000).unwrap();
        let f = extract_slot_features(&t, 100_000).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].count, 3);
        assert_eq!(f[0].mean_iat_us, 10_000.0);
    }

    #[test]
    fn empty_slot_gets_sentinel() {
        let t = ArrivalTrace::new(18, vec![150_000], 200_000).unwrap();
        let f = extract_slot_features(&t, 100_000).unwrap();
        assert_eq!(f[0].count, 0);
        assert_eq!(f[0].mean_iat_us, 100_000.0);
        assert_eq!(f[1].count, 1);
        assert_eq!(f[1].mean_iat_us, 100_000.0);
    }

    #[test]
    fn partial_last_slot_kept() {
        let t = ArrivalTrace::new(18, vec![], 250_000).unwrap();
        assert_eq!(extract_slot_features(&t, 100_000).unwrap().len(), 3);
    }

    #[test]
    fn arrival_on_end_boundary_is_counted() {
        let t = parse_trace("0\n8512\n100000", 18).unwrap();
        let f = extract_slot_features(&t, 100_000).unwrap();
        assert_eq!(f.iter().map(|s| s.count).sum::<u32>(), 3);
    }

    #[test]
    fn threshold_rule_examples() {
        let th = Thresholds::default();
        assert_eq!(
            label_state(&SlotFeatures::new(0, 8512.0, 11), &th),
            ChannelState::Busy
        );
        assert_eq!(
            label_state(&SlotFeatures::new(0, 8513.0, 50), &th),
            ChannelState::Free
        );
        assert_eq!(
            label_state(&SlotFeatures::new(0, 100.0, 10), &th),
            ChannelState::Free
        );
    }

    #[test]
    fn thresholds_validate() {
        assert!(Thresholds::default().validate().is_ok());
        assert!(Thresholds::default()
            .with_slot_len(1000)
            .validate()
            .is_err());
        let zero = Thresholds {
            th_count: 0,
            ..Thresholds::default()
        };
        assert!(zero.validate().is_err());
    }

    #[test]
    fn synthesize_exponential_mean() {
        let dist = IatDistribution::exponential_with_mean(1000.0);
        let t = synthesize_trace(&dist, 10_000_000, 7, 18).unwrap();
        assert!((9_000..=11_000).contains(&t.len()), "{} arrivals", t.len());
        let iats = t.inter_arrival_times();
        let mean = iats.iter().sum::<u64>() as f64 / iats.len() as f64;
        assert!((mean - 1000.0).abs() / 1000.0 < 0.05, "mean {mean}");
    }

    #[test]
    fn synthesize_truncates() {
        let dist = IatDistribution::Empirical {
            bins: vec![(5, 1.0)],
        };
        let t = synthesize_trace(&dist, 1, 3, 18).unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn synthesize_is_deterministic() {
        let dist = IatDistribution::Pareto {
            shape: 1.5,
            scale_us: 200.0,
        };
        let a = synthesize_trace(&dist, 5_000_000, 11, 18).unwrap();
        let b = synthesize_trace(&dist, 5_000_000, 11, 18).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_distributions_rejected() {
        let zero = IatDistribution::Empirical {
            bins: vec![(0, 1.0)],
        };
        assert!(synthesize_trace(&zero, 100, 1, 18).is_err());
        let inf = IatDistribution::Exponential {
            rate_per_us: f64::INFINITY,
        };
        assert!(synthesize_trace(&inf, 100, 1, 18).is_err());
        assert!(synthesize_trace(&IatDistribution::exponential_with_mean(10.0), 0, 1, 18).is_err());
    }

    #[test]
    fn empirical_from_iats_sums_to_one() {
        let d = IatDistribution::from_iats(&[1, 2, 2, 3, 3, 3]).unwrap();
        let IatDistribution::Empirical { bins } = &d else {
            panic!()
        };
        let total: f64 = bins.iter().map(|b| b.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(bins.len(), 3);
    }

    proptest! {
        #[test]
        fn features_conserve_arrivals(mut ts in proptest::collection::vec(0u64..2_000_000, 0..300), slot in 1_000u64..300_000) {
            ts.sort_unstable();
            let duration = ts.last().copied().unwrap_or(0) + 17;
            let trace = ArrivalTrace::new(20, ts, duration).unwrap();
            let f = extract_slot_features(&trace, slot).unwrap();
            let total: u64 = f.iter().map(|s| u64::from(s.count)).sum();
            prop_assert_eq!(total, trace.len() as u64);
            prop_assert!(f.iter().all(|s| s.mean_iat_us >= 0.0));
        }

        #[test]
        fn emit_then_ingest_round_trips(mut ts in proptest::collection::vec(0u64..10_000_000, 0..200), extra in 0u64..1000, ch in 11u8..=26) {
            ts.sort_unstable();
            let duration = ts.last().copied().unwrap_or(0) + extra;
            let trace = ArrivalTrace::new(ch, ts, duration).unwrap();
            let text = emit_trace(&trace);
            let back = parse_trace(&text, 11).unwrap();
            prop_assert_eq!(&back, &trace);
            prop_assert_eq!(emit_trace(&back), text);
        }

        #[test]
        fn labelling_is_idempotent(iats in proptest::collection::vec(0.0f64..200_000.0, 1..50), counts in proptest::collection::vec(0u32..300, 1..50)) {
            let th = Thresholds::default();
            let feats: Vec<SlotFeatures> = iats.iter().zip(&counts).enumerate()
                .map(|(i, (&m, &c))| SlotFeatures::new(i as u64, m, c)).collect();
            let a = label_channel_states(&feats, &th);
            let b = label_channel_states(&feats, &th);
            prop_assert_eq!(&a, &b);
            for (f, s) in feats.iter().zip(&a) {
                prop_assert_eq!(*s, label_state(f, &th));
            }
        }
    }
}
