//! Node-side protocol logic: flooding time sync, model exchange timing,
//! receiver-aware rendezvous scheduling, the PDR/EMA feedback loop and
//! model-selection flooding.
//!
//! Everything here is event-free; the simulator decides when to call it.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::models::{predict_white_spaces, ModelPair, Regime};
use crate::trace::WHITE_SPACE_US;

/// Interval between sync rounds (5 minutes).
pub const SYNC_PERIOD_US: u64 = 300_000_000;
/// Sync packets per flood round.
pub const SYNC_PACKETS_PER_ROUND: usize = 3;
/// Length of one node's model-broadcast window.
pub const MODEL_WINDOW_US: u64 = 300_000;
/// Upper bound on model-selection packets sent by one node per flood.
pub const MAX_MODEL_SELECT_TX: u32 = 5;
/// Level of a node that has not heard any sync packet yet.
pub const UNSYNCED_LEVEL: u8 = 255;

pub const DEFAULT_TH_PDR: f64 = 93.0;
pub const DEFAULT_EMA_WINDOW: u32 = 40;
pub const DEFAULT_TIMEOUT_PERIODS: u32 = 5;

// ----------------------------------------------------------------------------
// time sync
// ----------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyncPacket {
    /// Sender's local clock at transmission.
    pub timestamp_us: u64,
    pub authoritative_level: u8,
    /// Sender's local clock minus the coordinator clock.
    pub offset_with_coordinator_us: i64,
}

impl SyncPacket {
    pub fn from_coordinator(timestamp_us: u64) -> Self {
        Self {
            timestamp_us,
            authoritative_level: 0,
            offset_with_coordinator_us: 0,
        }
    }
}

/// Offset to the coordinator from the offset to a neighbour plus that
/// neighbour's own offset to the coordinator.
pub fn offset_to_coordinator(delta_neighbor_us: i64, neighbor_offset_us: i64) -> i64 {
    delta_neighbor_us + neighbor_offset_us
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RadioState {
    Active,
    Sleep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataPacket {
    pub origin: u32,
    pub seq: u64,
    /// Data period the packet was generated in.
    pub period_index: u64,
    pub generated_us: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    pub node_id: u32,
    /// Local clock minus coordinator clock, as last estimated.
    pub clock_offset_us: i64,
    pub authoritative_level: u8,
    pub own_models: Option<ModelPair>,
    pub neighbor_models: BTreeMap<u32, ModelPair>,
    pub next_hop: Option<u32>,
    pub radio: RadioState,
    pub pending_queue: VecDeque<DataPacket>,
    /// Target of the flood last joined and the age this node sent.
    pub model_select: Option<(Regime, u32)>,
    pub model_select_acked: bool,
}

impl NodeState {
    pub fn coordinator(node_id: u32) -> Self {
        Self {
            authoritative_level: 0,
            next_hop: None,
            ..Self::node(node_id, 0)
        }
    }

    pub fn node(node_id: u32, next_hop: u32) -> Self {
        Self {
            node_id,
            clock_offset_us: 0,
            authoritative_level: UNSYNCED_LEVEL,
            own_models: None,
            neighbor_models: BTreeMap::new(),
            next_hop: Some(next_hop),
            radio: RadioState::Sleep,
            pending_queue: VecDeque::new(),
            model_select: None,
            model_select_acked: false,
        }
    }

    pub fn is_coordinator(&self) -> bool {
        self.next_hop.is_none()
    }

    /// Converts a reading of the local clock into coordinator time.
    pub fn to_global(&self, local_us: u64) -> u64 {
        (local_us as i64 - self.clock_offset_us).max(0) as u64
    }

    pub fn to_local(&self, global_us: u64) -> u64 {
        (global_us as i64 + self.clock_offset_us).max(0) as u64
    }

    /// Regime this node currently schedules with.
    pub fn active_regime(&self) -> Option<Regime> {
        self.own_models.as_ref().map(|m| m.active)
    }

    /// Switches every held model pair, own and neighbours', to `regime`.
    pub fn set_active_regime(&mut self, regime: Regime) {
        if let Some(m) = self.own_models.as_mut() {
            m.active = regime;
        }
        for m in self.neighbor_models.values_mut() {
            m.active = regime;
        }
    }
}

/// Applies a received sync packet. Only packets from a strictly lower
/// authoritative level are accepted; the node then corrects its offset,
/// takes level `pkt + 1` and returns the packet to rebroadcast.
pub fn apply_sync(
    local: &mut NodeState,
    pkt: &SyncPacket,
    rx_timestamp_us: u64,
) -> Option<SyncPacket> {
    if local.is_coordinator() || pkt.authoritative_level >= local.authoritative_level {
        return None;
    }
    let delta_neighbor = rx_timestamp_us as i64 - pkt.timestamp_us as i64;
    local.clock_offset_us = offset_to_coordinator(delta_neighbor, pkt.offset_with_coordinator_us);
    local.authoritative_level = pkt.authoritative_level.saturating_add(1);
    Some(SyncPacket {
        timestamp_us: rx_timestamp_us,
        authoritative_level: local.authoritative_level,
        offset_with_coordinator_us: local.clock_offset_us,
    })
}

/// Emission times of one sync round.
pub fn sync_flood_schedule(t0_us: u64, gap_us: u64) -> Result<[u64; SYNC_PACKETS_PER_ROUND]> {
    if gap_us == 0 {
        return Err(invalid("sync gap must be positive"));
    }
    Ok([t0_us, t0_us + gap_us, t0_us + 2 * gap_us])
}

// ----------------------------------------------------------------------------
// model exchange and scheduling
// ----------------------------------------------------------------------------

/// Start of node `n`'s model broadcast window.
pub fn model_broadcast_time(
    n: u32,
    t_start_us: u64,
    n_window: u32,
    t_window_us: u64,
) -> Result<u64> {
    if n_window == 0 {
        return Err(invalid("n_window must be at least 1"));
    }
    Ok(t_start_us + u64::from(n % n_window) * t_window_us)
}

/// Sub-slots that fit in one slot.
pub fn n_subslots(slot_len_us: u64) -> u32 {
    (slot_len_us / WHITE_SPACE_US) as u32
}

/// Transmission time of node `n` inside a FREE slot.
pub fn subslot_tx_time(n: u32, slot_start_us: u64, n_ss: u32, t_ss_us: u64) -> Result<u64> {
    if n_ss == 0 {
        return Err(invalid("a slot needs at least one sub-slot"));
    }
    Ok(slot_start_us + u64::from(n % n_ss) * t_ss_us)
}

/// Data period containing a global time.
pub fn period_index(global_us: u64, t_data_us: u64) -> u64 {
    global_us / t_data_us
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SlotRole {
    RxActive,
    Tx { sub_slot: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub slot_index: u32,
    pub role: SlotRole,
    pub start_us: u64,
}

/// Slot grid of one data period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodPlan {
    pub period_index: u64,
    pub period_start_us: u64,
    pub slot_len_us: u64,
    pub horizon_slots: u32,
    pub n_slot: u32,
}

impl PeriodPlan {
    pub fn slot_start(&self, slot: u32) -> u64 {
        self.period_start_us + u64::from(slot) * self.slot_len_us
    }
}

/// Receive slots: the first `n_slot` predicted FREE slots of the active
/// model, or the very first slots when nothing is predicted FREE.
fn rx_slots(models: &ModelPair, plan: &PeriodPlan) -> Vec<u32> {
    let hmm = &models.active_entry().hmm;
    let pred = predict_white_spaces(hmm, plan.period_index, plan.horizon_slots);
    let n = plan.n_slot as usize;
    if pred.free_slots.is_empty() {
        (0..plan.n_slot.min(plan.horizon_slots)).collect()
    } else {
        pred.free_slots.into_iter().take(n).collect()
    }
}

pub fn plan_rx_schedule(own_models: &ModelPair, plan: &PeriodPlan) -> Result<Vec<ScheduleEntry>> {
    if plan.n_slot == 0 {
        return Err(invalid("n_slot must be at least 1"));
    }
    Ok(rx_slots(own_models, plan)
        .into_iter()
        .map(|slot| ScheduleEntry {
            slot_index: slot,
            role: SlotRole::RxActive,
            start_us: plan.slot_start(slot),
        })
        .collect())
}

/// Transmit entries towards `next_hop`, mirroring its receive schedule.
pub fn plan_tx_schedule(
    next_hop_models: Option<&ModelPair>,
    next_hop: u32,
    own_id: u32,
    plan: &PeriodPlan,
    n_ss: u32,
) -> Result<Vec<ScheduleEntry>> {
    let models = next_hop_models.ok_or(Error::MissingModel(next_hop))?;
    if plan.n_slot == 0 {
        return Err(invalid("n_slot must be at least 1"));
    }
    rx_slots(models, plan)
        .into_iter()
        .map(|slot| {
            Ok(ScheduleEntry {
                slot_index: slot,
                role: SlotRole::Tx {
                    sub_slot: own_id % n_ss.max(1),
                },
                start_us: subslot_tx_time(own_id, plan.slot_start(slot), n_ss, WHITE_SPACE_US)?,
            })
        })
        .collect()
}

// ----------------------------------------------------------------------------
// feedback
// ----------------------------------------------------------------------------

/// Delivery ratio in percent.
pub fn compute_pdr(n_rx: u64, n_total: u64) -> Result<f64> {
    if n_total == 0 {
        return Err(invalid("PDR undefined without expected packets"));
    }
    if n_rx > n_total {
        return Err(invalid(format!(
            "{n_rx} received exceeds {n_total} expected"
        )));
    }
    Ok(100.0 * n_rx as f64 / n_total as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackState {
    pub ema: f64,
    pub alpha: f64,
    pub n_window: u32,
    pub th_pdr: f64,
    pub timeout_periods: u32,
    pub periods_below: u32,
    pub warmup: Vec<f64>,
}

impl Default for FeedbackState {
    fn default() -> Self {
        Self::new(DEFAULT_EMA_WINDOW, DEFAULT_TH_PDR, DEFAULT_TIMEOUT_PERIODS)
    }
}

/// Emitted when the smoothed PDR has stayed below threshold long enough.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchTrigger {
    pub ema: f64,
}

impl FeedbackState {
    pub fn new(n_window: u32, th_pdr: f64, timeout_periods: u32) -> Self {
        let n_window = n_window.max(1);
        Self {
            ema: 0.0,
            alpha: 2.0 / (f64::from(n_window) + 1.0),
            n_window,
            th_pdr,
            timeout_periods: timeout_periods.max(1),
            periods_below: 0,
            warmup: Vec::new(),
        }
    }

    pub fn is_warm(&self) -> bool {
        self.warmup.len() >= self.n_window as usize
    }

    /// Buffers PDRs until the first window is full and seeds the EMA with
    /// their mean; afterwards applies `ema ← α·pdr + (1−α)·ema`.
    pub fn update_ema(&mut self, pdr: f64) -> Result<()> {
        if !(0.0..=100.0).contains(&pdr) {
            return Err(invalid(format!("PDR {pdr} outside [0, 100]")));
        }
        if self.is_warm() {
            self.ema = self.alpha * pdr + (1.0 - self.alpha) * self.ema;
        } else {
            self.warmup.push(pdr);
            if self.is_warm() {
                self.ema = self.warmup.iter().sum::<f64>() / self.warmup.len() as f64;
            }
        }
        Ok(())
    }

    /// Counts consecutive below-threshold periods and fires once the
    /// timeout is reached. Silent during warm-up.
    pub fn feedback_decide(&mut self) -> Option<SwitchTrigger> {
        if !self.is_warm() {
            return None;
        }
        if self.ema < self.th_pdr {
            self.periods_below += 1;
        } else {
            self.periods_below = 0;
        }
        if self.periods_below >= self.timeout_periods {
            self.periods_below = 0;
            return Some(SwitchTrigger { ema: self.ema });
        }
        None
    }
}

// ----------------------------------------------------------------------------
// model selection
// ----------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSelectPacket {
    pub age: u32,
    pub target_model: Regime,
}

/// Coordinator side: switches itself and returns the packets of a new
/// flood (all age 0, at most [`MAX_MODEL_SELECT_TX`]).
pub fn flood_model_select(coordinator: &mut NodeState, target: Regime) -> Vec<ModelSelectPacket> {
    coordinator.set_active_regime(target);
    coordinator.model_select = Some((target, 0));
    coordinator.model_select_acked = false;
    vec![
        ModelSelectPacket {
            age: 0,
            target_model: target,
        };
        MAX_MODEL_SELECT_TX as usize
    ]
}

/// What a node does with a received model-selection packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelSelectAction {
    /// First reception of this flood: switched and must forward.
    Forward(ModelSelectPacket),
    /// A neighbour one hop further forwarded our packet.
    ImplicitAck,
    Ignore,
}

pub fn handle_model_select(local: &mut NodeState, pkt: &ModelSelectPacket) -> ModelSelectAction {
    match local.model_select {
        Some((target, age)) if target == pkt.target_model => {
            if pkt.age == age + 1 {
                local.model_select_acked = true;
                ModelSelectAction::ImplicitAck
            } else {
                ModelSelectAction::Ignore
            }
        }
        _ => {
            local.set_active_regime(pkt.target_model);
            local.model_select = Some((pkt.target_model, pkt.age + 1));
            local.model_select_acked = false;
            ModelSelectAction::Forward(ModelSelectPacket {
                age: pkt.age + 1,
                target_model: pkt.target_model,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{FeatureScaler, GmmParams, HmmParams, ModelEntry};
    use proptest::prelude::*;

    #[test]
    fn coordinator_offset_is_sum() {
        assert_eq!(offset_to_coordinator(3000, 5000), 8000);
        let mut n = NodeState::node(4, 1);
        let pkt = SyncPacket {
            timestamp_us: 10_000,
            authoritative_level: 1,
            offset_with_coordinator_us: 5000,
        };
        let out = apply_sync(&mut n, &pkt, 13_000).unwrap();
        assert_eq!(n.clock_offset_us, 8000);
        assert_eq!(out.offset_with_coordinator_us, 8000);
        assert_eq!(out.authoritative_level, 2);
    }

    #[test]
    fn sync_level_rules() {
        let mut n = NodeState::node(2, 1);
        assert_eq!(n.authoritative_level, UNSYNCED_LEVEL);
        apply_sync(&mut n, &SyncPacket::from_coordinator(0), 0).unwrap();
        assert_eq!(n.authoritative_level, 1);
        let before = n.clone();
        let late = SyncPacket {
            timestamp_us: 50,
            authoritative_level: 2,
            offset_with_coordinator_us: 99,
        };
        assert!(apply_sync(&mut n, &late, 70).is_none());
        assert_eq!(n, before);
    }

    #[test]
    fn sync_rounds() {
        assert_eq!(
            sync_flood_schedule(0, 1_000_000).unwrap(),
            [0, 1_000_000, 2_000_000]
        );
        assert_eq!(
            sync_flood_schedule(SYNC_PERIOD_US, 5).unwrap()[0],
            300_000_000
        );
        assert!(sync_flood_schedule(0, 0).is_err());
    }

    #[test]
    fn broadcast_and_subslot_times() {
        assert_eq!(
            model_broadcast_time(5, 0, 8, MODEL_WINDOW_US).unwrap(),
            1_500_000
        );
        assert_eq!(model_broadcast_time(8, 42, 8, MODEL_WINDOW_US).unwrap(), 42);
        assert!(model_broadcast_time(1, 0, 0, MODEL_WINDOW_US).is_err());
        assert_eq!(n_subslots(50_000), 5);
        assert_eq!(
            subslot_tx_time(7, 1000, 5, WHITE_SPACE_US).unwrap(),
            1000 + 17_024
        );
        assert_eq!(subslot_tx_time(0, 1000, 5, WHITE_SPACE_US).unwrap(), 1000);
    }

    #[test]
    fn pdr_percentage() {
        assert_eq!(compute_pdr(93, 100).unwrap(), 93.0);
        assert_eq!(compute_pdr(0, 50).unwrap(), 0.0);
        assert!(compute_pdr(5, 4).is_err());
        assert!(compute_pdr(0, 0).is_err());
    }

    #[test]
    fn ema_smoothing_step() {
        let mut fb = FeedbackState::default();
        assert!((fb.alpha - 0.048_780_487_804_878_05).abs() < 1e-9);
        for _ in 0..40 {
            fb.update_ema(95.0).unwrap();
        }
        assert_eq!(fb.ema, 95.0);
        fb.update_ema(90.0).unwrap();
        assert!((fb.ema - 94.756_097_560_975_6).abs() < 1e-9);
    }

    #[test]
    fn warmup_mean() {
        let mut fb = FeedbackState::new(4, 93.0, 5);
        for p in [100.0, 80.0, 90.0] {
            fb.update_ema(p).unwrap();
            assert!(!fb.is_warm());
            assert!(fb.feedback_decide().is_none());
        }
        fb.update_ema(70.0).unwrap();
        assert_eq!(fb.ema, 85.0);
    }

    fn warm(th: f64) -> FeedbackState {
        let mut fb = FeedbackState::new(1, th, 5);
        fb.update_ema(100.0).unwrap();
        fb
    }

    #[test]
    fn trigger_after_five() {
        let mut fb = warm(93.0);
        fb.ema = 50.0;
        let fired: Vec<bool> = (0..5).map(|_| fb.feedback_decide().is_some()).collect();
        assert_eq!(fired, [false, false, false, false, true]);
        assert_eq!(fb.periods_below, 0);
    }

    #[test]
    fn four_below_then_above_resets() {
        let mut fb = warm(93.0);
        fb.ema = 50.0;
        for _ in 0..4 {
            assert!(fb.feedback_decide().is_none());
        }
        fb.ema = 99.0;
        assert!(fb.feedback_decide().is_none());
        assert_eq!(fb.periods_below, 0);
    }

    #[test]
    fn model_select_ages() {
        let mut c = NodeState::coordinator(1);
        let pkts = flood_model_select(&mut c, Regime::Peak);
        assert_eq!(pkts.len(), 5);
        assert!(pkts.iter().all(|p| p.age == 0));
        let mut n = NodeState::node(2, 1);
        let fwd = handle_model_select(&mut n, &pkts[0]);
        assert_eq!(
            fwd,
            ModelSelectAction::Forward(ModelSelectPacket {
                age: 1,
                target_model: Regime::Peak
            })
        );
        assert_eq!(
            handle_model_select(&mut n, &pkts[0]),
            ModelSelectAction::Ignore
        );
        let child = ModelSelectPacket {
            age: 2,
            target_model: Regime::Peak,
        };
        assert_eq!(
            handle_model_select(&mut n, &child),
            ModelSelectAction::ImplicitAck
        );
        assert!(n.model_select_acked);
        // coordinator hears its child's forward as ACK
        let from_child = ModelSelectPacket {
            age: 1,
            target_model: Regime::Peak,
        };
        assert_eq!(
            handle_model_select(&mut c, &from_child),
            ModelSelectAction::ImplicitAck
        );
    }

    fn hmm(pi0: f64, a00: f64, a11: f64) -> HmmParams {
        let g = |m: f64| {
            GmmParams::new(
                vec![1.0],
                vec![[m, 5.0]],
                vec![[100.0, 1.0]],
                FeatureScaler::identity(),
            )
            .unwrap()
        };
        HmmParams::new(
            [pi0, 1.0 - pi0],
            [[a00, 1.0 - a00], [1.0 - a11, a11]],
            [g(60_000.0), g(500.0)],
        )
        .unwrap()
    }

    pub(crate) fn pair(h: HmmParams) -> ModelPair {
        let entry = ModelEntry {
            gmm: h.emission(crate::trace::ChannelState::Free).clone(),
            hmm: h,
        };
        ModelPair {
            peak: entry.clone(),
            offpeak: entry,
            active: Regime::Offpeak,
        }
    }

    #[test]
    fn empty_prediction_uses_first_slots() {
        let models = pair(hmm(0.0, 1.0, 1.0));
        let plan = PeriodPlan {
            period_index: 0,
            period_start_us: 0,
            slot_len_us: 50_000,
            horizon_slots: 200,
            n_slot: 2,
        };
        let rx = plan_rx_schedule(&models, &plan).unwrap();
        assert_eq!(
            rx.iter().map(|e| e.slot_index).collect::<Vec<_>>(),
            vec![0, 1]
        );
        assert_eq!(rx[1].start_us, 50_000);
    }

    #[test]
    fn tx_subslot_and_missing_model() {
        let models = pair(hmm(1.0, 1.0, 1.0));
        let plan = PeriodPlan {
            period_index: 3,
            period_start_us: 1_000_000,
            slot_len_us: 50_000,
            horizon_slots: 200,
            n_slot: 3,
        };
        let tx = plan_tx_schedule(Some(&models), 1, 7, &plan, 5).unwrap();
        assert_eq!(tx.len(), 3);
        for e in &tx {
            assert_eq!(e.role, SlotRole::Tx { sub_slot: 2 });
            assert_eq!(e.start_us, plan.slot_start(e.slot_index) + 17_024);
        }
        assert!(matches!(
            plan_tx_schedule(None, 9, 7, &plan, 5),
            Err(Error::MissingModel(9))
        ));
    }

    proptest! {
        #[test]
        fn rendezvous_containment(
            pi0 in 0.0f64..=1.0, a00 in 0.0f64..=1.0, a11 in 0.0f64..=1.0,
            period in 0u64..1_000_000, horizon in 1u32..1500, n_slot in 1u32..6, id in 0u32..64,
        ) {
            let models = pair(hmm(pi0, a00, a11));
            let plan = PeriodPlan { period_index: period, period_start_us: period * 60_000_000, slot_len_us: 50_000, horizon_slots: horizon, n_slot };
            let rx: Vec<u32> = plan_rx_schedule(&models, &plan).unwrap().iter().map(|e| e.slot_index).collect();
            let tx = plan_tx_schedule(Some(&models.clone()), 1, id, &plan, 5).unwrap();
            for e in &tx {
                prop_assert!(rx.contains(&e.slot_index));
                let start = plan.slot_start(e.slot_index);
                prop_assert!(e.start_us >= start && e.start_us < start + plan.slot_len_us);
            }
        }

        #[test]
        fn ema_bounded_after_warmup(pdrs in prop::collection::vec(0.0f64..=100.0, 5..100)) {
            let mut fb = FeedbackState::new(4, 93.0, 5);
            for p in &pdrs {
                fb.update_ema(*p).unwrap();
            }
            let lo = pdrs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = pdrs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(fb.ema >= lo - 1e-9 && fb.ema <= hi + 1e-9);
        }

        #[test]
        fn constant_stream_is_fixed_point(c in 0.0f64..=100.0, n in 40usize..120) {
            let mut fb = FeedbackState::default();
            for _ in 0..n {
                fb.update_ema(c).unwrap();
            }
            prop_assert!((fb.ema - c).abs() < 1e-9);
        }

        #[test]
        fn trigger_count_bounded(below in prop::collection::vec(any::<bool>(), 0..200)) {
            let mut fb = warm(93.0);
            let mut triggers = 0;
            for b in &below {
                fb.ema = if *b { 10.0 } else { 99.0 };
                if fb.feedback_decide().is_some() {
                    triggers += 1;
                }
            }
            prop_assert!(triggers <= below.len() / 5);
        }

        #[test]
        fn sync_levels_follow_path(depth in 1usize..20, offsets in prop::collection::vec(-50_000i64..50_000, 20)) {
            // a chain of nodes with true offsets; lossless flood from the coordinator
            let mut prev = SyncPacket::from_coordinator(1_000_000);
            let mut t_global = 1_000_000u64;
            for (hop, off) in offsets.iter().take(depth).enumerate() {
                let mut n = NodeState::node(hop as u32 + 2, hop as u32 + 1);
                t_global += 1000;
                let rx_local = (t_global as i64 + off) as u64;
                let sent_local_at_rx = prev.timestamp_us as i64 + 1000;
                let pkt = SyncPacket { timestamp_us: sent_local_at_rx as u64, ..prev };
                let out = apply_sync(&mut n, &pkt, rx_local).unwrap();
                prop_assert_eq!(n.authoritative_level as usize, hop + 1);
                prop_assert_eq!(n.clock_offset_us, *off);
                prev = out;
            }
        }
    }
}
