//! Shared medium: unit-disk connectivity, transmission log, listening
//! intervals and jammer emissions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::jammer::{EmissionTimeline, JammerSpec};
use crate::topology::{distance, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RxOutcome {
    Delivered,
    /// The receiver's radio was off for part of the airtime or it was
    /// transmitting itself.
    NotListening,
    LostCollision,
    LostInterference,
}

/// What a clear-channel assessment picked up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Energy {
    Clear,
    Node,
    Jammer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TxRecord {
    pub src: usize,
    pub start: u64,
    pub end: u64,
}

/// Node indices are positions in the topology's node list.
#[derive(Debug)]
pub struct Channel {
    in_range: Vec<Vec<bool>>,
    /// Jammers whose interference range covers each node.
    exposure: Vec<Vec<usize>>,
    timelines: Vec<EmissionTimeline>,
    tx_log: Vec<TxRecord>,
    longest_airtime: u64,
    listen: Vec<BTreeMap<u64, u64>>,
    tx_intervals: Vec<Vec<(u64, u64)>>,
}

/// Jammers covering each node of `topo`, by node index.
pub fn jammer_exposure(topo: &Topology, jammers: &[JammerSpec]) -> Vec<Vec<usize>> {
    topo.nodes
        .iter()
        .map(|n| {
            jammers
                .iter()
                .enumerate()
                .filter(|(_, j)| distance((n.x, n.y), (j.x, j.y)) <= j.interference_range_m)
                .map(|(k, _)| k)
                .collect()
        })
        .collect()
}

impl Channel {
    pub fn new(topo: &Topology, jammers: &[JammerSpec], timelines: Vec<EmissionTimeline>) -> Self {
        let ids = topo.ids();
        let n = ids.len();
        let in_range = ids
            .iter()
            .map(|&a| ids.iter().map(|&b| topo.in_range(a, b)).collect())
            .collect();
        Self {
            in_range,
            exposure: jammer_exposure(topo, jammers),
            timelines,
            tx_log: Vec::new(),
            longest_airtime: 0,
            listen: vec![BTreeMap::new(); n],
            tx_intervals: vec![Vec::new(); n],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.listen.len()
    }

    pub fn in_range(&self, a: usize, b: usize) -> bool {
        self.in_range[a][b]
    }

    pub fn tx(&self, id: usize) -> TxRecord {
        self.tx_log[id]
    }

    /// Records a transmission. Calls must come in start-time order.
    pub fn log_tx(&mut self, src: usize, start: u64, end: u64) -> usize {
        debug_assert!(self.tx_log.last().is_none_or(|r| r.start <= start));
        self.longest_airtime = self.longest_airtime.max(end - start);
        self.tx_log.push(TxRecord { src, start, end });
        self.tx_intervals[src].push((start, end));
        self.tx_log.len() - 1
    }

    /// Marks the radio of `node` as listening during `[start, end)`.
    pub fn add_listen(&mut self, node: usize, start: u64, end: u64) {
        if end <= start {
            return;
        }
        let map = &mut self.listen[node];
        let mut s = start;
        let mut e = end;
        if let Some((&ps, &pe)) = map.range(..=s).next_back() {
            if pe >= s {
                s = ps;
                e = e.max(pe);
            }
        }
        let absorbed: Vec<u64> = map.range(s..=e).map(|(&k, _)| k).collect();
        for k in absorbed {
            if let Some(ke) = map.remove(&k) {
                e = e.max(ke);
            }
        }
        map.insert(s, e);
    }

    /// Ends the listening interval that contains `at` at `new_end`.
    pub fn truncate_listen(&mut self, node: usize, at: u64, new_end: u64) {
        let map = &mut self.listen[node];
        if let Some((&s, e)) = map.range_mut(..=at).next_back() {
            if *e > at {
                *e = new_end.max(at).min(*e).max(s);
            }
        }
    }

    pub fn is_listening(&self, node: usize, start: u64, end: u64) -> bool {
        self.listen[node]
            .range(..=start)
            .next_back()
            .is_some_and(|(_, &e)| e >= end)
    }

    /// Indices of logged transmissions overlapping `[start, end)`.
    fn overlapping(&self, start: u64, end: u64) -> impl Iterator<Item = (usize, &TxRecord)> {
        let horizon = start.saturating_sub(self.longest_airtime);
        let first = self.tx_log.partition_point(|r| r.start < horizon);
        self.tx_log[first..]
            .iter()
            .enumerate()
            .map(move |(k, r)| (first + k, r))
            .filter(move |(_, r)| r.start < end && r.end > start)
    }

    fn jammed(&self, node: usize, start: u64, end: u64) -> bool {
        self.exposure[node]
            .iter()
            .any(|&j| self.timelines[j].overlaps(start, end))
    }

    /// Energy sensed by `node` during `[start, end)`, ignoring its own
    /// transmissions. Node transmissions take precedence over jammers.
    pub fn sense(&self, node: usize, start: u64, end: u64) -> Energy {
        if self
            .overlapping(start, end)
            .any(|(_, r)| r.src != node && self.in_range[r.src][node])
        {
            Energy::Node
        } else if self.jammed(node, start, end) {
            Energy::Jammer
        } else {
            Energy::Clear
        }
    }

    /// Fate of logged transmission `tx_id` at `receiver`. Only valid once
    /// every transmission starting before its end has been logged.
    pub fn resolve_reception(&self, tx_id: usize, receiver: usize) -> RxOutcome {
        let tx = self.tx_log[tx_id];
        if !self.in_range[tx.src][receiver] || !self.is_listening(receiver, tx.start, tx.end) {
            return RxOutcome::NotListening;
        }
        let mut collision = false;
        for (k, r) in self.overlapping(tx.start, tx.end) {
            if k == tx_id {
                continue;
            }
            if r.src == receiver {
                return RxOutcome::NotListening;
            }
            if self.in_range[r.src][receiver] {
                collision = true;
            }
        }
        if collision {
            RxOutcome::LostCollision
        } else if self.jammed(receiver, tx.start, tx.end) {
            RxOutcome::LostInterference
        } else {
            RxOutcome::Delivered
        }
    }

    /// Listening and transmitting intervals of every node, clipped to
    /// `[0, until)`.
    pub fn radio_on_intervals(&self, until: u64) -> Vec<Vec<(u64, u64)>> {
        self.listen
            .iter()
            .zip(&self.tx_intervals)
            .map(|(l, t)| {
                l.iter()
                    .map(|(&s, &e)| (s, e))
                    .chain(t.iter().copied())
                    .filter(|iv| iv.0 < until)
                    .map(|(s, e)| (s, e.min(until)))
                    .collect()
            })
            .collect()
    }
}
