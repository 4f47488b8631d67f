//! Driver for the receiver-aware MAC: bootstrap sync and model exchange,
//! model-scheduled data slots, a control region for sync and model
//! selection, and the coordinator's PDR feedback loop.
//!
//! Period layout: the first `horizon` slots carry data; the last
//! `control_slots` slots form the control region, split into a sync lane
//! and a model-select lane of `max_depth + 2` hop windows each. A node at
//! level `L` listens in window `L − 1` and relays in window `L`.

use std::collections::BTreeMap;

use rand::Rng;
use wsmac_core::models::ModelPair;
use wsmac_core::protocol::{
    apply_sync, flood_model_select, handle_model_select, model_broadcast_time, n_subslots,
    plan_rx_schedule, plan_tx_schedule, sync_flood_schedule, DataPacket, FeedbackState,
    ModelSelectAction, ModelSelectPacket, NodeState, PeriodPlan, SyncPacket, MAX_MODEL_SELECT_TX,
    MODEL_WINDOW_US, SYNC_PACKETS_PER_ROUND, SYNC_PERIOD_US, UNSYNCED_LEVEL,
};
use wsmac_core::rng::SimRng;
use wsmac_core::Error as CoreError;

use crate::channel::{Channel, RxOutcome};
use crate::config::SimConfig;
use crate::engine::{loss_cause, EventQueue, PacketStore, RunOutput};
use crate::error::Result;
use crate::result::{EmaSample, TriggerRecord};

/// Largest initial clock error of a node relative to the coordinator.
const MAX_INITIAL_OFFSET_US: i64 = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Lane {
    Sync,
    ModelSelect,
}

#[derive(Debug, Clone)]
enum Payload {
    Sync(SyncPacket),
    Model,
    ModelSelect(ModelSelectPacket),
    Data {
        dst: usize,
        packets: Vec<DataPacket>,
    },
}

#[derive(Debug, Clone)]
enum Event {
    StartPeriods {
        node: usize,
    },
    Period {
        node: usize,
        period: u64,
    },
    SyncTx {
        node: usize,
        pkt: SyncPacket,
        airtime: u64,
    },
    ModelTx {
        node: usize,
        nominal_us: u64,
    },
    SlotTx {
        node: usize,
    },
    ModelSelectTx {
        node: usize,
    },
    TxEnd {
        tx: usize,
        payload: Payload,
    },
    Evaluate {
        period: u64,
    },
}

/// Model-select flood progress of one node.
#[derive(Debug, Clone, Copy, Default)]
struct FloodState {
    pkt: Option<ModelSelectPacket>,
    budget: u32,
    sent: u32,
    scheduled_period: Option<u64>,
}

/// Timing shared by every period.
#[derive(Debug, Clone, Copy)]
pub struct PeriodLayout {
    pub t_data_us: u64,
    pub slot_len_us: u64,
    pub horizon_slots: u32,
    pub control_slots: u32,
    pub window_us: u64,
    pub windows_per_lane: u32,
}

impl PeriodLayout {
    pub fn new(cfg: &SimConfig) -> Self {
        let total = (cfg.t_data_us / cfg.slot_len_us) as u32;
        let windows_per_lane = cfg.topology.max_depth() + 2;
        let window_us = cfg.receiver_aware.control_window_us;
        let control_us = 2 * u64::from(windows_per_lane) * window_us;
        let control_slots =
            (control_us.div_ceil(cfg.slot_len_us) as u32).min(total.saturating_sub(1));
        Self {
            t_data_us: cfg.t_data_us,
            slot_len_us: cfg.slot_len_us,
            horizon_slots: total - control_slots,
            control_slots,
            window_us,
            windows_per_lane,
        }
    }

    fn control_start(&self, period: u64) -> u64 {
        period * self.t_data_us + u64::from(self.horizon_slots) * self.slot_len_us
    }

    fn lane_start(&self, period: u64, lane: Lane) -> u64 {
        let base = self.control_start(period);
        match lane {
            Lane::Sync => base,
            Lane::ModelSelect => base + u64::from(self.windows_per_lane) * self.window_us,
        }
    }

    fn window(&self, period: u64, lane: Lane, w: u32) -> (u64, u64) {
        let s = self.lane_start(period, lane) + u64::from(w) * self.window_us;
        (s, s + self.window_us)
    }

    fn lane_span(&self, period: u64, lane: Lane) -> (u64, u64) {
        let s = self.lane_start(period, lane);
        (s, s + u64::from(self.windows_per_lane) * self.window_us)
    }
}

/// End of the quiet bootstrap phase (sync flood and model exchange).
pub fn bootstrap_end_us(cfg: &SimConfig) -> u64 {
    cfg.receiver_aware.model_exchange_start_us + cfg.topology.len() as u64 * MODEL_WINDOW_US
}

/// First data period: the first boundary at or after bootstrap.
pub fn first_data_period(cfg: &SimConfig) -> u64 {
    bootstrap_end_us(cfg).div_ceil(cfg.t_data_us)
}

struct Driver<'a> {
    cfg: &'a SimConfig,
    layout: PeriodLayout,
    ids: Vec<u32>,
    coordinator: usize,
    parent: Vec<Option<usize>>,
    has_children: Vec<bool>,
    nodes: Vec<NodeState>,
    true_offset: Vec<i64>,
    /// Level from the most recent successful sync, used to pick windows.
    last_level: Vec<u8>,
    flood: Vec<FloodState>,
    frame_in_flight: Vec<bool>,
    queue: EventQueue<Event>,
    channel: Channel,
    packets: PacketStore,
    rng: SimRng,
    feedback: FeedbackState,
    ema_series: Vec<EmaSample>,
    triggers: Vec<TriggerRecord>,
    missing_models: BTreeMap<(u32, u32), u64>,
    first_period: u64,
    gen_end_period: u64,
    n_ss: u32,
}

pub fn run(
    cfg: &SimConfig,
    models: Vec<ModelPair>,
    channel: Channel,
    mut rng: SimRng,
) -> Result<RunOutput> {
    let ids = cfg.topology.ids();
    let index: BTreeMap<u32, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let coordinator = index[&cfg.topology.coordinator];
    let parent: Vec<Option<usize>> = ids
        .iter()
        .map(|id| cfg.topology.parent(*id).map(|p| index[&p]))
        .collect();
    let has_children: Vec<bool> = (0..ids.len()).map(|i| parent.contains(&Some(i))).collect();
    let nodes: Vec<NodeState> = ids
        .iter()
        .zip(models)
        .enumerate()
        .map(|(i, (&id, m))| {
            let mut n = match parent[i] {
                None => NodeState::coordinator(id),
                Some(p) => NodeState::node(id, ids[p]),
            };
            n.own_models = Some(m);
            n
        })
        .collect();
    let true_offset: Vec<i64> = (0..ids.len())
        .map(|i| {
            if i == coordinator {
                0
            } else {
                rng.random_range(-MAX_INITIAL_OFFSET_US..=MAX_INITIAL_OFFSET_US)
            }
        })
        .collect();
    let layout = PeriodLayout::new(cfg);
    let bootstrap_end = bootstrap_end_us(cfg);
    let first_period = first_data_period(cfg);
    let gen_end_period = (cfg.duration_us / cfg.t_data_us).saturating_sub(cfg.drain_periods());
    let n = ids.len();
    let mut d = Driver {
        cfg,
        layout,
        ids,
        coordinator,
        parent,
        has_children,
        nodes,
        true_offset,
        last_level: vec![UNSYNCED_LEVEL; n],
        flood: vec![FloodState::default(); n],
        frame_in_flight: vec![false; n],
        queue: EventQueue::default(),
        channel,
        packets: PacketStore::default(),
        rng,
        feedback: FeedbackState::new(
            cfg.feedback.n_window,
            cfg.feedback.th_pdr,
            cfg.feedback.timeout_periods,
        ),
        ema_series: Vec::new(),
        triggers: Vec::new(),
        missing_models: BTreeMap::new(),
        first_period,
        gen_end_period,
        n_ss: n_subslots(cfg.slot_len_us),
    };
    d.last_level[coordinator] = 0;
    d.bootstrap(bootstrap_end)?;
    // period timers start once bootstrap sync has settled the clocks
    for i in 0..n {
        d.queue
            .push(bootstrap_end, d.ids[i], Event::StartPeriods { node: i });
    }
    for period in first_period..gen_end_period {
        let t =
            (period + 1 + u64::from(cfg.topology.max_depth())) * cfg.t_data_us + cfg.slot_len_us;
        d.queue
            .push(t, d.ids[coordinator], Event::Evaluate { period });
    }
    while let Some((now, ev)) = d.queue.pop_before(cfg.duration_us) {
        d.handle(now, ev)?;
    }
    let final_regimes = d
        .nodes
        .iter()
        .filter_map(|n| n.active_regime().map(|r| (n.node_id, r)))
        .collect();
    let errors = d
        .missing_models
        .iter()
        .map(|((node, hop), periods)| {
            format!("node {node} had no model of next hop {hop} in {periods} periods; its packets were stranded")
        })
        .collect();
    Ok(RunOutput {
        packets: d.packets,
        channel: d.channel,
        ema_series: d.ema_series,
        triggers: d.triggers,
        final_regimes,
        errors,
    })
}

impl Driver<'_> {
    /// True time at which node `i` performs an action it schedules for
    /// coordinator time `global_us`.
    fn act_time(&self, i: usize, global_us: u64) -> u64 {
        let err = self.nodes[i].clock_offset_us - self.true_offset[i];
        (global_us as i64 + err).max(0) as u64
    }

    fn local_clock(&self, i: usize, true_us: u64) -> u64 {
        (true_us as i64 + self.true_offset[i]).max(0) as u64
    }

    fn listen(&mut self, i: usize, global_start: u64, global_end: u64) {
        let s = self.act_time(i, global_start);
        let e = self.act_time(i, global_end);
        self.channel.add_listen(i, s, e);
    }

    fn bootstrap(&mut self, bootstrap_end: u64) -> Result<()> {
        let ra = self.cfg.receiver_aware;
        for i in 0..self.ids.len() {
            self.channel.add_listen(i, 0, bootstrap_end);
        }
        for t in sync_flood_schedule(0, ra.bootstrap_sync_gap_us)? {
            let pkt = SyncPacket::from_coordinator(t);
            self.queue.push(
                t,
                self.ids[self.coordinator],
                Event::SyncTx {
                    node: self.coordinator,
                    pkt,
                    airtime: ra.sync_airtime_us,
                },
            );
        }
        let n_window = self.ids.len() as u32;
        for i in 0..self.ids.len() {
            let g = model_broadcast_time(
                i as u32,
                ra.model_exchange_start_us,
                n_window,
                MODEL_WINDOW_US,
            )?;
            // clocks are not synced yet; the handler re-times the broadcast
            self.queue.push(
                g,
                self.ids[i],
                Event::ModelTx {
                    node: i,
                    nominal_us: g,
                },
            );
        }
        Ok(())
    }

    fn handle(&mut self, now: u64, ev: Event) -> Result<()> {
        match ev {
            Event::StartPeriods { node } => {
                self.schedule_period(node, self.first_period);
                Ok(())
            }
            Event::Period { node, period } => {
                self.schedule_period(node, period + 1);
                self.on_period(node, period)
            }
            Event::SyncTx {
                node,
                mut pkt,
                airtime,
            } => {
                pkt.timestamp_us = self.local_clock(node, now);
                self.transmit(node, now, airtime, Payload::Sync(pkt));
                Ok(())
            }
            Event::ModelTx { node, nominal_us } => {
                let t = self.act_time(node, nominal_us);
                if t > now {
                    self.queue.push(
                        t,
                        self.ids[node],
                        Event::ModelTx {
                            node,
                            nominal_us: now,
                        },
                    );
                } else {
                    let airtime = self.cfg.receiver_aware.model_airtime_us;
                    self.transmit(node, now, airtime, Payload::Model);
                }
                Ok(())
            }
            Event::SlotTx { node } => {
                self.on_slot_tx(node, now);
                Ok(())
            }
            Event::ModelSelectTx { node } => {
                self.on_model_select_tx(node, now);
                Ok(())
            }
            Event::TxEnd { tx, payload } => self.on_tx_end(now, tx, payload),
            Event::Evaluate { period } => self.on_evaluate(now, period),
        }
    }

    fn transmit(&mut self, node: usize, now: u64, airtime: u64, payload: Payload) {
        let tx = self.channel.log_tx(node, now, now + airtime);
        self.queue
            .push(now + airtime, self.ids[node], Event::TxEnd { tx, payload });
    }

    fn level_of(&self, i: usize) -> Option<u32> {
        let l = self.last_level[i];
        (l != UNSYNCED_LEVEL).then_some(u32::from(l))
    }

    /// Listens where the parent of a level-`L` node transmits, or the whole
    /// lane when the level is unknown.
    fn listen_lane(&mut self, i: usize, period: u64, lane: Lane) {
        let (s, e) = match self.level_of(i) {
            Some(l) if l >= 1 => {
                self.layout
                    .window(period, lane, (l - 1).min(self.layout.windows_per_lane - 1))
            }
            _ => self.layout.lane_span(period, lane),
        };
        self.listen(i, s, e);
    }

    /// Random transmission time inside hop window `w`, coordinator time.
    fn window_tx_time(&mut self, period: u64, lane: Lane, w: u32, airtime: u64) -> u64 {
        let w = w.min(self.layout.windows_per_lane - 1);
        let (s, e) = self.layout.window(period, lane, w);
        s + self.rng.random_range(0..=(e - s - airtime))
    }

    fn schedule_period(&mut self, i: usize, period: u64) {
        if period < self.cfg.duration_us / self.cfg.t_data_us {
            let t = self.act_time(i, period * self.cfg.t_data_us);
            self.queue
                .push(t, self.ids[i], Event::Period { node: i, period });
        }
    }

    fn sync_round_slot(&self, period: u64) -> Option<u64> {
        let round_periods =
            (SYNC_PERIOD_US / self.cfg.t_data_us).max(SYNC_PACKETS_PER_ROUND as u64);
        let k = (period - self.first_period) % round_periods;
        (k < SYNC_PACKETS_PER_ROUND as u64).then_some(k)
    }

    fn on_period(&mut self, i: usize, period: u64) -> Result<()> {
        let now = self.queue.now();
        let is_coord = i == self.coordinator;
        let sync_slot = self.sync_round_slot(period);
        if sync_slot == Some(0) && !is_coord {
            self.nodes[i].authoritative_level = UNSYNCED_LEVEL;
        }
        if !is_coord && period < self.gen_end_period {
            let next = self.parent[i].expect("non-coordinators have a parent");
            let pkt = self.packets.generate(i, self.ids[i], period, now, next);
            self.nodes[i].pending_queue.push_back(pkt);
        }
        let plan = PeriodPlan {
            period_index: period,
            period_start_us: period * self.cfg.t_data_us,
            slot_len_us: self.cfg.slot_len_us,
            horizon_slots: self.layout.horizon_slots,
            n_slot: self.cfg.n_slot,
        };
        if self.has_children[i] {
            let own = self.nodes[i]
                .own_models
                .as_ref()
                .expect("every node holds models");
            for entry in plan_rx_schedule(own, &plan)? {
                self.listen(i, entry.start_us, entry.start_us + self.cfg.slot_len_us);
            }
        }
        if let Some(next) = self.parent[i] {
            let next_id = self.ids[next];
            match plan_tx_schedule(
                self.nodes[i].neighbor_models.get(&next_id),
                next_id,
                self.ids[i],
                &plan,
                self.n_ss,
            ) {
                Ok(entries) => {
                    for entry in entries {
                        let t = self.act_time(i, entry.start_us);
                        self.queue.push(t, self.ids[i], Event::SlotTx { node: i });
                    }
                }
                Err(CoreError::MissingModel(hop)) => {
                    *self.missing_models.entry((self.ids[i], hop)).or_default() += 1;
                }
                Err(e) => return Err(e.into()),
            }
        }
        let air = self.cfg.receiver_aware.sync_airtime_us;
        if sync_slot.is_some() {
            if is_coord {
                let g = self.window_tx_time(period, Lane::Sync, 0, air);
                let pkt = SyncPacket::from_coordinator(g);
                self.queue.push(
                    g,
                    self.ids[i],
                    Event::SyncTx {
                        node: i,
                        pkt,
                        airtime: air,
                    },
                );
            } else {
                self.listen_lane(i, period, Lane::Sync);
            }
        }
        if !is_coord {
            self.listen_lane(i, period, Lane::ModelSelect);
        }
        self.schedule_model_select(i, period);
        Ok(())
    }

    /// Queues this node's model-select transmission in `period`'s control
    /// region if a flood is pending and its window has not passed.
    fn schedule_model_select(&mut self, i: usize, period: u64) {
        let f = self.flood[i];
        if f.pkt.is_none() || f.sent >= f.budget || self.nodes[i].model_select_acked {
            return;
        }
        if f.scheduled_period.is_some_and(|p| p >= period) {
            return;
        }
        let level = self.level_of(i).unwrap_or(self.layout.windows_per_lane - 1);
        let air = self.cfg.receiver_aware.control_airtime_us;
        let (win_start, _) = self.layout.window(period, Lane::ModelSelect, level);
        if self.act_time(i, win_start) < self.queue.now() {
            return;
        }
        let g = self.window_tx_time(period, Lane::ModelSelect, level, air);
        let t = self.act_time(i, g);
        self.flood[i].scheduled_period = Some(period);
        self.queue
            .push(t, self.ids[i], Event::ModelSelectTx { node: i });
    }

    fn on_model_select_tx(&mut self, i: usize, now: u64) {
        let Some(pkt) = self.flood[i].pkt else { return };
        if self.nodes[i].model_select_acked || self.flood[i].sent >= self.flood[i].budget {
            return;
        }
        self.flood[i].sent += 1;
        let air = self.cfg.receiver_aware.control_airtime_us;
        self.transmit(i, now, air, Payload::ModelSelect(pkt));
        if self.has_children[i] {
            // listen in the next hop window for a child's forward
            let period = self.global_period(i, now);
            let level = self.level_of(i).unwrap_or(0);
            if level + 1 < self.layout.windows_per_lane {
                let (s, e) = self.layout.window(period, Lane::ModelSelect, level + 1);
                self.listen(i, s, e);
            }
        }
    }

    fn global_period(&self, i: usize, now: u64) -> u64 {
        let err = self.nodes[i].clock_offset_us - self.true_offset[i];
        ((now as i64 - err).max(0) as u64) / self.cfg.t_data_us
    }

    fn on_slot_tx(&mut self, i: usize, now: u64) {
        if self.frame_in_flight[i] || self.nodes[i].pending_queue.is_empty() {
            return;
        }
        let dst = self.parent[i].expect("senders have a parent");
        let take = self
            .cfg
            .receiver_aware
            .max_frame_packets
            .min(self.nodes[i].pending_queue.len());
        let packets: Vec<DataPacket> = self.nodes[i].pending_queue.drain(..take).collect();
        self.frame_in_flight[i] = true;
        let air = self.cfg.receiver_aware.data_airtime_us;
        self.transmit(i, now, air, Payload::Data { dst, packets });
    }

    fn on_tx_end(&mut self, now: u64, tx: usize, payload: Payload) -> Result<()> {
        let src = self.channel.tx(tx).src;
        match payload {
            Payload::Data { dst, packets } => {
                self.frame_in_flight[src] = false;
                let outcome = self.channel.resolve_reception(tx, dst);
                if outcome == RxOutcome::Delivered {
                    for p in packets {
                        if dst == self.coordinator {
                            self.packets.deliver(&p, now, dst);
                        } else {
                            let next = self.parent[dst].expect("relays have a parent");
                            self.packets.advance(&p, next);
                            self.nodes[dst].pending_queue.push_back(p);
                        }
                    }
                } else {
                    let cause = loss_cause(outcome);
                    let max = self.cfg.receiver_aware.max_attempts;
                    for p in packets.into_iter().rev() {
                        if !self.packets.fail(&p, cause, dst, now, max) {
                            self.nodes[src].pending_queue.push_front(p);
                        }
                    }
                }
            }
            Payload::Sync(pkt) => {
                for r in self.receivers(tx) {
                    let rx_local = self.local_clock(r, self.channel.tx(tx).start);
                    if let Some(relay) = apply_sync(&mut self.nodes[r], &pkt, rx_local) {
                        self.last_level[r] = relay.authoritative_level;
                        self.schedule_sync_relay(r, now, relay);
                    }
                }
            }
            Payload::Model => {
                let pair = self.nodes[src]
                    .own_models
                    .clone()
                    .expect("every node holds models");
                let src_id = self.ids[src];
                for r in self.receivers(tx) {
                    self.nodes[r].neighbor_models.insert(src_id, pair.clone());
                }
            }
            Payload::ModelSelect(pkt) => {
                for r in self.receivers(tx) {
                    if let ModelSelectAction::Forward(fwd) =
                        handle_model_select(&mut self.nodes[r], &pkt)
                    {
                        let budget = if self.has_children[r] {
                            MAX_MODEL_SELECT_TX
                        } else {
                            1
                        };
                        self.flood[r] = FloodState {
                            pkt: Some(fwd),
                            budget,
                            sent: 0,
                            scheduled_period: None,
                        };
                        let period = self.global_period(r, now);
                        self.schedule_model_select(r, period);
                    }
                }
            }
        }
        Ok(())
    }

    fn receivers(&self, tx: usize) -> Vec<usize> {
        (0..self.ids.len())
            .filter(|&r| self.channel.resolve_reception(tx, r) == RxOutcome::Delivered)
            .collect()
    }

    fn schedule_sync_relay(&mut self, r: usize, now: u64, relay: SyncPacket) {
        let ra = self.cfg.receiver_aware;
        let air = ra.sync_airtime_us;
        let period = self.global_period(r, now);
        let t = if period < self.first_period {
            now + self
                .rng
                .random_range(ra.relay_jitter_min_us..=ra.relay_jitter_max_us)
        } else {
            let level = u32::from(relay.authoritative_level);
            let g = self.window_tx_time(period, Lane::Sync, level, air);
            self.act_time(r, g)
        };
        self.queue.push(
            t,
            self.ids[r],
            Event::SyncTx {
                node: r,
                pkt: relay,
                airtime: air,
            },
        );
    }

    fn on_evaluate(&mut self, now: u64, period: u64) -> Result<()> {
        let expected = (self.ids.len() - 1) as u64;
        if expected == 0 {
            return Ok(());
        }
        let delivered = self.packets.delivered_in_period(period);
        let pdr = wsmac_core::protocol::compute_pdr(delivered, expected)?;
        self.feedback.update_ema(pdr)?;
        let warm = self.feedback.is_warm();
        self.ema_series.push(EmaSample {
            period_index: period,
            time_us: now,
            pdr_pct: pdr,
            ema_pct: warm.then_some(self.feedback.ema),
        });
        if let Some(trigger) = self.feedback.feedback_decide() {
            let c = self.coordinator;
            let current = self.nodes[c]
                .active_regime()
                .unwrap_or(self.cfg.initial_regime);
            let target = current.other();
            let pkts = flood_model_select(&mut self.nodes[c], target);
            self.flood[c] = FloodState {
                pkt: pkts.first().copied(),
                budget: pkts.len() as u32,
                sent: 0,
                scheduled_period: None,
            };
            self.triggers.push(TriggerRecord {
                time_us: now,
                period_index: period,
                ema_pct: trigger.ema,
                target,
            });
            let current_period = now / self.cfg.t_data_us;
            self.schedule_model_select(c, current_period);
        }
        Ok(())
    }
}

/// True when no parent has two children sharing a sub-slot.
#[cfg(test)]
fn distinct_subslots(cfg: &SimConfig) -> bool {
    use std::collections::BTreeSet;
    let n_ss = n_subslots(cfg.slot_len_us).max(1);
    cfg.topology.ids().iter().all(|&p| {
        let subs: BTreeSet<u32> = cfg.topology.children(p).iter().map(|c| c % n_ss).collect();
        subs.len() == cfg.topology.children(p).len()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ProtocolKind;
    use crate::topology::Topology;

    #[test]
    fn layout_reserves_control_region() {
        let cfg = SimConfig::new(
            Topology::five_node(),
            ProtocolKind::ReceiverAware,
            60_000_000,
        );
        let l = PeriodLayout::new(&cfg);
        assert_eq!(l.horizon_slots + l.control_slots, 1200);
        assert_eq!(l.control_slots, 1);
        let (s, e) = l.lane_span(0, Lane::ModelSelect);
        assert!(e <= cfg.t_data_us && s >= l.control_start(0));
        let grid = SimConfig::new(
            Topology::grid(4, 4, 20.0),
            ProtocolKind::ReceiverAware,
            10_000_000,
        );
        assert_eq!(PeriodLayout::new(&grid).control_slots, 2);
    }

    #[test]
    fn builtin_topologies_avoid_sibling_subslot_clash() {
        for topo in [Topology::five_node(), Topology::grid(4, 4, 20.0)] {
            let cfg = SimConfig::new(topo, ProtocolKind::ReceiverAware, 10_000_000);
            assert!(distinct_subslots(&cfg));
        }
    }
}
