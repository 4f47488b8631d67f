//! Event queue, packet bookkeeping and result assembly shared by the MAC
//! drivers.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use wsmac_core::protocol::{compute_pdr, DataPacket};

use crate::channel::{Channel, RxOutcome};
use crate::config::SimConfig;
use crate::duty::{account_duty_cycle, on_time};
use crate::error::Result;
use crate::result::{LedgerEntry, LedgerSummary, PacketOutcome, PeriodPdr, SimResult};

struct Scheduled<E> {
    time: u64,
    node: u32,
    seq: u64,
    event: E,
}

impl<E> Scheduled<E> {
    fn key(&self) -> (u64, u32, u64) {
        (self.time, self.node, self.seq)
    }
}

impl<E> PartialEq for Scheduled<E> {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl<E> Eq for Scheduled<E> {}

impl<E> PartialOrd for Scheduled<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Scheduled<E> {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.key().cmp(&self.key())
    }
}

/// Min-queue of events ordered by (time, node id, insertion sequence).
pub struct EventQueue<E> {
    heap: BinaryHeap<Scheduled<E>>,
    next_seq: u64,
    now: u64,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        Self {
            heap: BinaryHeap::new(),
            next_seq: 0,
            now: 0,
        }
    }
}

impl<E> EventQueue<E> {
    pub fn now(&self) -> u64 {
        self.now
    }

    /// Schedules `event`; times in the past are clamped to the engine clock.
    pub fn push(&mut self, time: u64, node: u32, event: E) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Scheduled {
            time: time.max(self.now),
            node,
            seq,
            event,
        });
    }

    /// Next event strictly before `until`, advancing the clock.
    pub fn pop_before(&mut self, until: u64) -> Option<(u64, E)> {
        if self.heap.peek()?.time >= until {
            return None;
        }
        let s = self.heap.pop()?;
        debug_assert!(s.time >= self.now, "event causality violated");
        self.now = s.time;
        Some((s.time, s.event))
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[derive(Debug, Clone)]
struct PacketState {
    origin: usize,
    period_index: u64,
    generated_us: u64,
    /// Transmissions of the packet on its current hop.
    hop_attempts: u32,
    last_failure: Option<PacketOutcome>,
    /// Node the packet was last sent towards.
    last_dst: usize,
    outcome: Option<(PacketOutcome, u64)>,
}

/// Every generated packet with its current or terminal state.
#[derive(Debug, Default)]
pub struct PacketStore {
    packets: Vec<PacketState>,
}

pub fn loss_cause(outcome: RxOutcome) -> PacketOutcome {
    match outcome {
        RxOutcome::Delivered => PacketOutcome::Delivered,
        RxOutcome::NotListening => PacketOutcome::LostNoRendezvous,
        RxOutcome::LostCollision => PacketOutcome::LostCollision,
        RxOutcome::LostInterference => PacketOutcome::LostInterference,
    }
}

impl PacketStore {
    pub fn generate(
        &mut self,
        origin: usize,
        origin_id: u32,
        period_index: u64,
        now: u64,
        next_hop: usize,
    ) -> DataPacket {
        let seq = self.packets.len() as u64;
        self.packets.push(PacketState {
            origin,
            period_index,
            generated_us: now,
            hop_attempts: 0,
            last_failure: None,
            last_dst: next_hop,
            outcome: None,
        });
        DataPacket {
            origin: origin_id,
            seq,
            period_index,
            generated_us: now,
        }
    }

    fn get(&mut self, pkt: &DataPacket) -> &mut PacketState {
        &mut self.packets[pkt.seq as usize]
    }

    /// Packet reached the coordinator.
    pub fn deliver(&mut self, pkt: &DataPacket, now: u64, dst: usize) {
        let p = self.get(pkt);
        p.last_dst = dst;
        p.outcome = Some((PacketOutcome::Delivered, now));
    }

    /// Packet moved one hop forward.
    pub fn advance(&mut self, pkt: &DataPacket, next_hop: usize) {
        let p = self.get(pkt);
        p.hop_attempts = 0;
        p.last_failure = None;
        p.last_dst = next_hop;
    }

    /// Records a failed transmission towards `dst`. Returns true when the
    /// attempt budget is exhausted and the packet is dropped.
    pub fn fail(
        &mut self,
        pkt: &DataPacket,
        cause: PacketOutcome,
        dst: usize,
        now: u64,
        max_attempts: u32,
    ) -> bool {
        let p = self.get(pkt);
        p.hop_attempts += 1;
        p.last_failure = Some(cause);
        p.last_dst = dst;
        if p.hop_attempts >= max_attempts {
            p.outcome = Some((cause, now));
            true
        } else {
            false
        }
    }

    pub fn delivered_in_period(&self, period_index: u64) -> u64 {
        // packets are generated in period order; scan the matching range only
        let lo = self
            .packets
            .partition_point(|p| p.period_index < period_index);
        self.packets[lo..]
            .iter()
            .take_while(|p| p.period_index == period_index)
            .filter(|p| matches!(p.outcome, Some((PacketOutcome::Delivered, _))))
            .count() as u64
    }

    /// Closes every packet still in the network at the end of the run.
    pub fn strand_remaining(&mut self, now: u64) {
        for p in &mut self.packets {
            if p.outcome.is_none() {
                p.outcome = Some((
                    p.last_failure.unwrap_or(PacketOutcome::LostNoRendezvous),
                    now,
                ));
            }
        }
    }

    pub fn ledger(&self, ids: &[u32]) -> Vec<LedgerEntry> {
        self.packets
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let (outcome, time_us) = p
                    .outcome
                    .expect("packets are closed before the ledger is read");
                LedgerEntry {
                    packet_id: k as u64,
                    origin: ids[p.origin],
                    period_index: p.period_index,
                    generated_us: p.generated_us,
                    time_us,
                    dst: ids[p.last_dst],
                    outcome,
                }
            })
            .collect()
    }
}

/// Parts of a result that do not depend on the MAC.
pub struct RunOutput {
    pub packets: PacketStore,
    pub channel: Channel,
    pub ema_series: Vec<crate::result::EmaSample>,
    pub triggers: Vec<crate::result::TriggerRecord>,
    pub final_regimes: BTreeMap<u32, wsmac_core::models::Regime>,
    pub errors: Vec<String>,
}

pub fn assemble_result(cfg: &SimConfig, mut out: RunOutput) -> Result<SimResult> {
    let ids = cfg.topology.ids();
    out.packets.strand_remaining(cfg.duration_us);
    let ledger = out.packets.ledger(&ids);
    let mut summary = LedgerSummary::default();
    let mut by_period: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
    for e in &ledger {
        summary.generated += 1;
        let cell = by_period.entry(e.period_index).or_default();
        cell.0 += 1;
        match e.outcome {
            PacketOutcome::Delivered => {
                summary.delivered += 1;
                cell.1 += 1;
            }
            PacketOutcome::LostCollision => summary.lost_collision += 1,
            PacketOutcome::LostInterference => summary.lost_interference += 1,
            PacketOutcome::LostNoRendezvous => summary.lost_no_rendezvous += 1,
        }
    }
    let per_period_pdr = by_period
        .into_iter()
        .map(|(period_index, (generated, delivered))| {
            Ok(PeriodPdr {
                period_index,
                generated,
                delivered,
                pdr_pct: compute_pdr(delivered, generated)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let radio = out.channel.radio_on_intervals(cfg.duration_us);
    let duty_cycle_pct = account_duty_cycle(&radio, cfg.duration_us, ids.len())?;
    let node_radio_on_us = ids
        .iter()
        .zip(&radio)
        .map(|(&id, iv)| (id, on_time(iv)))
        .collect();
    let pdr_pct = if summary.generated == 0 {
        0.0
    } else {
        compute_pdr(summary.delivered, summary.generated)?
    };
    Ok(SimResult {
        seed: cfg.seed,
        protocol: cfg.protocol.name(),
        labels: cfg.labels.clone(),
        n_nodes: ids.len(),
        duration_us: cfg.duration_us,
        t_data_us: cfg.t_data_us,
        pdr_pct,
        duty_cycle_pct,
        per_period_pdr,
        ema_series: out.ema_series,
        triggers: out.triggers,
        node_radio_on_us,
        ledger_summary: summary,
        final_regimes: out.final_regimes,
        errors: out.errors,
        ledger,
    })
}
