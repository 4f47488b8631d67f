//! Low-power-listening baseline: periodic channel sampling, strobed
//! unicast with CCA before each train, random backoff and a bounded
//! number of transmissions per packet.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;
use wsmac_core::protocol::DataPacket;
use wsmac_core::rng::SimRng;

use crate::channel::{Channel, Energy, RxOutcome};
use crate::config::{LplConfig, SimConfig};
use crate::engine::{loss_cause, EventQueue, PacketStore, RunOutput};
use crate::error::Result;
use crate::result::PacketOutcome;

#[derive(Debug, Clone, Copy)]
enum Event {
    Wake {
        node: usize,
    },
    WakeCcaEnd {
        node: usize,
        start: u64,
    },
    Generate {
        node: usize,
        period: u64,
    },
    Attempt {
        node: usize,
    },
    SendCcaEnd {
        node: usize,
        start: u64,
    },
    Strobe {
        node: usize,
        train: u64,
        k: u32,
    },
    StrobeEnd {
        node: usize,
        train: u64,
        k: u32,
        tx: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sender {
    Idle,
    /// Waiting for an attempt (CCA or backoff).
    Pending,
    Train(u64),
}

struct Driver {
    lpl: LplConfig,
    max_tx: u32,
    ids: Vec<u32>,
    coordinator: usize,
    parent: Vec<Option<usize>>,
    queues: Vec<VecDeque<DataPacket>>,
    sender: Vec<Sender>,
    next_train: u64,
    strobes_per_train: u32,
    queue: EventQueue<Event>,
    channel: Channel,
    packets: PacketStore,
    rng: SimRng,
}

/// Data starts at the same period boundary as the receiver-aware MAC so
/// both see identical jammer timelines.
pub fn run(
    cfg: &SimConfig,
    max_tx: u32,
    channel: Channel,
    mut rng: SimRng,
    first_period: u64,
) -> Result<RunOutput> {
    let ids = cfg.topology.ids();
    let index: BTreeMap<u32, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let coordinator = index[&cfg.topology.coordinator];
    let parent: Vec<Option<usize>> = ids
        .iter()
        .map(|id| cfg.topology.parent(*id).map(|p| index[&p]))
        .collect();
    let lpl = cfg.lpl;
    let strobe_period = lpl.strobe_airtime_us + lpl.strobe_gap_us;
    let strobes_per_train = (lpl.wake_interval_us.div_ceil(strobe_period) + 2) as u32;
    let n = ids.len();
    let mut queue = EventQueue::default();
    for i in 0..n {
        let phase = rng.random_range(0..lpl.wake_interval_us);
        queue.push(phase, ids[i], Event::Wake { node: i });
    }
    let gen_end = (cfg.duration_us / cfg.t_data_us).saturating_sub(cfg.drain_periods());
    for period in first_period..gen_end {
        for i in 0..n {
            if i == coordinator {
                continue;
            }
            let jitter = rng.random_range(0..cfg.t_data_us / 2);
            queue.push(
                period * cfg.t_data_us + jitter,
                ids[i],
                Event::Generate { node: i, period },
            );
        }
    }
    let mut d = Driver {
        lpl,
        max_tx,
        ids,
        coordinator,
        parent,
        queues: vec![VecDeque::new(); n],
        sender: vec![Sender::Idle; n],
        next_train: 0,
        strobes_per_train,
        queue,
        channel,
        packets: PacketStore::default(),
        rng,
    };
    while let Some((now, ev)) = d.queue.pop_before(cfg.duration_us) {
        d.handle(now, ev);
    }
    Ok(RunOutput {
        packets: d.packets,
        channel: d.channel,
        ema_series: Vec::new(),
        triggers: Vec::new(),
        final_regimes: BTreeMap::new(),
        errors: Vec::new(),
    })
}

impl Driver {
    fn push(&mut self, t: u64, node: usize, ev: Event) {
        self.queue.push(t, self.ids[node], ev);
    }

    fn handle(&mut self, now: u64, ev: Event) {
        match ev {
            Event::Wake { node } => {
                self.push(now + self.lpl.wake_interval_us, node, Event::Wake { node });
                // a node busy with its own train skips the sample
                if !matches!(self.sender[node], Sender::Train(_)) {
                    self.push(
                        now + self.lpl.cca_us,
                        node,
                        Event::WakeCcaEnd { node, start: now },
                    );
                }
            }
            Event::WakeCcaEnd { node, start } => {
                let end = if self.channel.sense(node, start, now) == Energy::Clear {
                    now
                } else {
                    now + self.lpl.listen_after_detect_us
                };
                self.channel.add_listen(node, start, end);
            }
            Event::Generate { node, period } => {
                let next = self.parent[node].expect("generators have a parent");
                let pkt = self
                    .packets
                    .generate(node, self.ids[node], period, now, next);
                self.enqueue(node, pkt, now);
            }
            Event::Attempt { node } => {
                if self.queues[node].is_empty() {
                    self.sender[node] = Sender::Idle;
                } else {
                    self.push(
                        now + self.lpl.cca_us,
                        node,
                        Event::SendCcaEnd { node, start: now },
                    );
                }
            }
            Event::SendCcaEnd { node, start } => {
                self.channel.add_listen(node, start, now);
                match self.channel.sense(node, start, now) {
                    Energy::Clear => self.start_train(node, now),
                    Energy::Node => self.attempt_failed(node, PacketOutcome::LostCollision, now),
                    Energy::Jammer => {
                        self.attempt_failed(node, PacketOutcome::LostInterference, now)
                    }
                }
            }
            Event::Strobe { node, train, k } => {
                if self.sender[node] != Sender::Train(train) {
                    return;
                }
                let tx = self
                    .channel
                    .log_tx(node, now, now + self.lpl.strobe_airtime_us);
                self.push(
                    now + self.lpl.strobe_airtime_us,
                    node,
                    Event::StrobeEnd { node, train, k, tx },
                );
            }
            Event::StrobeEnd { node, train, k, tx } => self.on_strobe_end(node, train, k, tx, now),
        }
    }

    fn enqueue(&mut self, node: usize, pkt: DataPacket, now: u64) {
        self.queues[node].push_back(pkt);
        if self.sender[node] == Sender::Idle {
            self.sender[node] = Sender::Pending;
            self.push(now, node, Event::Attempt { node });
        }
    }

    fn start_train(&mut self, node: usize, now: u64) {
        self.next_train += 1;
        let train = self.next_train;
        self.sender[node] = Sender::Train(train);
        let period = self.lpl.strobe_airtime_us + self.lpl.strobe_gap_us;
        let end = now + u64::from(self.strobes_per_train) * period;
        // radio stays on between strobes to catch the ACK
        self.channel.add_listen(node, now, end);
        for k in 0..self.strobes_per_train {
            self.push(
                now + u64::from(k) * period,
                node,
                Event::Strobe { node, train, k },
            );
        }
    }

    fn on_strobe_end(&mut self, node: usize, train: u64, k: u32, tx: usize, now: u64) {
        let dst = self.parent[node].expect("senders have a parent");
        let outcome = self.channel.resolve_reception(tx, dst);
        if outcome == RxOutcome::Delivered {
            let pkt = self.queues[node]
                .pop_front()
                .expect("a train carries a queued packet");
            self.channel.truncate_listen(node, now - 1, now);
            self.channel.truncate_listen(dst, now - 1, now);
            if dst == self.coordinator {
                self.packets.deliver(&pkt, now, dst);
            } else {
                let next = self.parent[dst].expect("relays have a parent");
                self.packets.advance(&pkt, next);
                self.enqueue(dst, pkt, now);
            }
            self.sender[node] = Sender::Pending;
            self.push(now, node, Event::Attempt { node });
        } else if k + 1 == self.strobes_per_train && self.sender[node] == Sender::Train(train) {
            self.attempt_failed(node, loss_cause(outcome), now);
        }
    }

    fn attempt_failed(&mut self, node: usize, cause: PacketOutcome, now: u64) {
        let dst = self.parent[node].expect("senders have a parent");
        let pkt = *self.queues[node]
            .front()
            .expect("an attempt carries a queued packet");
        if self.packets.fail(&pkt, cause, dst, now, self.max_tx) {
            self.queues[node].pop_front();
        }
        self.sender[node] = Sender::Pending;
        let backoff = self
            .rng
            .random_range(self.lpl.backoff_min_us..=self.lpl.backoff_max_us);
        self.push(now + backoff, node, Event::Attempt { node });
    }
}
