//! Reading traces, feature tables and model files; unit conversion.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use wsmac_core::models::ModelFile;
use wsmac_core::trace::{
    extract_slot_features, label_channel_states, parse_trace, ArrivalTrace, ChannelState,
    SlotFeatures, Thresholds,
};

use crate::failure::{CmdResult, Failure, InputContext};

pub const FEATURES_CSV_HEADER: &str = "slot_index,mean_iat_us,count,state";

/// Converts a human-facing millisecond flag to whole microseconds.
pub fn ms_to_us(ms: f64, flag: &str) -> CmdResult<u64> {
    if !ms.is_finite() || ms <= 0.0 {
        return Err(Failure::input(format!(
            "--{flag} must be a positive number of ms, got {ms}"
        )));
    }
    let us = (ms * 1000.0).round();
    if us < 1.0 || us > u64::MAX as f64 {
        return Err(Failure::input(format!("--{flag} {ms} ms is out of range")));
    }
    Ok(us as u64)
}

pub fn thresholds(slot_ms: f64, th_iat_ms: f64, th_count: u32) -> CmdResult<Thresholds> {
    let th = Thresholds {
        th_iat_us: ms_to_us(th_iat_ms, "th-iat-ms")?,
        th_count,
        slot_len_us: ms_to_us(slot_ms, "slot-ms")?,
        ..Thresholds::characterization()
    };
    th.validate().input("invalid thresholds")?;
    Ok(th)
}

fn read_text(path: &Path) -> CmdResult<String> {
    fs::read_to_string(path).input(format!("cannot read {}", path.display()))
}

pub fn read_trace(path: &Path, channel: u8) -> CmdResult<ArrivalTrace> {
    parse_trace(&read_text(path)?, channel).input(format!("malformed trace {}", path.display()))
}

pub fn read_model(path: &Path) -> CmdResult<ModelFile> {
    ModelFile::load(path).input(format!("cannot load model {}", path.display()))
}

pub fn features_csv(features: &[SlotFeatures], states: &[ChannelState]) -> String {
    let mut out = String::from(FEATURES_CSV_HEADER);
    out.push('\n');
    for (f, s) in features.iter().zip(states) {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            f.slot_index,
            f.mean_iat_us,
            f.count,
            s.as_str()
        );
    }
    out
}

fn parse_state(s: &str) -> Option<ChannelState> {
    match s.trim().to_ascii_uppercase().as_str() {
        "FREE" => Some(ChannelState::Free),
        "BUSY" => Some(ChannelState::Busy),
        _ => None,
    }
}

/// Parses a features table; the `state` column is optional.
fn parse_features_csv(
    text: &str,
    path: &Path,
) -> CmdResult<(Vec<SlotFeatures>, Option<Vec<ChannelState>>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Failure::input(format!("{} is empty", path.display())))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let col = |name: &str| cols.iter().position(|c| *c == name);
    let (Some(ci), Some(cm), Some(cc)) = (col("slot_index"), col("mean_iat_us"), col("count"))
    else {
        return Err(Failure::input(format!(
            "{}: features table needs slot_index, mean_iat_us and count columns",
            path.display()
        )));
    };
    let cs = col("state");
    let mut features = Vec::new();
    let mut states = Vec::new();
    for (n, line) in lines {
        let bad = |what: &str| Failure::input(format!("{}:{}: {what}", path.display(), n + 1));
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let get = |i: usize| fields.get(i).copied().ok_or_else(|| bad("missing column"));
        let slot_index = get(ci)?.parse::<u64>().map_err(|_| bad("bad slot_index"))?;
        let mean_iat_us = get(cm)?
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite() && *v >= 0.0)
            .ok_or_else(|| bad("bad mean_iat_us"))?;
        let count = get(cc)?.parse::<u32>().map_err(|_| bad("bad count"))?;
        features.push(SlotFeatures::new(slot_index, mean_iat_us, count));
        if let Some(cs) = cs {
            states.push(parse_state(get(cs)?).ok_or_else(|| bad("state must be FREE or BUSY"))?);
        }
    }
    Ok((features, cs.map(|_| states)))
}

/// Labelled training slots from either an arrival trace (labelled by the
/// threshold rule) or a features table with a `state` column.
pub fn labelled_slots(
    path: &Path,
    th: &Thresholds,
    channel: u8,
) -> CmdResult<(Vec<SlotFeatures>, Vec<ChannelState>)> {
    let text = read_text(path)?;
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if first.trim_start().starts_with("slot_index") {
        let (features, states) = parse_features_csv(&text, path)?;
        let states = states.ok_or_else(|| {
            Failure::input(format!(
                "{} is unlabeled: add a state column (FREE/BUSY)",
                path.display()
            ))
        })?;
        Ok((features, states))
    } else {
        let trace =
            parse_trace(&text, channel).input(format!("malformed trace {}", path.display()))?;
        let features =
            extract_slot_features(&trace, th.slot_len_us).input("feature extraction failed")?;
        let states = label_channel_states(&features, th);
        Ok((features, states))
    }
}
