//! Node placement, unit-disk connectivity and the static routing tree.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};

pub const DEFAULT_COMM_RANGE_M: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: u32,
    pub x: f64,
    pub y: f64,
}

fn default_range() -> f64 {
    DEFAULT_COMM_RANGE_M
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub nodes: Vec<NodeSpec>,
    pub coordinator: u32,
    /// child → parent
    pub routes: BTreeMap<u32, u32>,
    #[serde(default = "default_range")]
    pub comm_range_m: f64,
}

pub fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

impl Topology {
    /// Five nodes: a three-hop line from the coordinator with a side branch
    /// at the third node. Neighbours are 20 m apart.
    pub fn five_node() -> Self {
        let nodes = vec![
            NodeSpec {
                id: 1,
                x: 0.0,
                y: 0.0,
            },
            NodeSpec {
                id: 2,
                x: 20.0,
                y: 0.0,
            },
            NodeSpec {
                id: 3,
                x: 40.0,
                y: 0.0,
            },
            NodeSpec {
                id: 4,
                x: 60.0,
                y: 0.0,
            },
            NodeSpec {
                id: 5,
                x: 40.0,
                y: 20.0,
            },
        ];
        let routes = [(2, 1), (3, 2), (4, 3), (5, 3)].into_iter().collect();
        Self {
            nodes,
            coordinator: 1,
            routes,
            comm_range_m: DEFAULT_COMM_RANGE_M,
        }
    }

    /// `rows × cols` grid, ids assigned row-major from 1, coordinator in the
    /// corner. Nodes route left along their row; column 0 routes upwards.
    pub fn grid(rows: u32, cols: u32, spacing_m: f64) -> Self {
        let id = |r: u32, c: u32| r * cols + c + 1;
        let mut nodes = Vec::new();
        let mut routes = BTreeMap::new();
        for r in 0..rows {
            for c in 0..cols {
                nodes.push(NodeSpec {
                    id: id(r, c),
                    x: f64::from(c) * spacing_m,
                    y: f64::from(r) * spacing_m,
                });
                if c > 0 {
                    routes.insert(id(r, c), id(r, c - 1));
                } else if r > 0 {
                    routes.insert(id(r, c), id(r - 1, c));
                }
            }
        }
        Self {
            nodes,
            coordinator: 1,
            routes,
            comm_range_m: DEFAULT_COMM_RANGE_M,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn position(&self, id: u32) -> Option<(f64, f64)> {
        self.nodes.iter().find(|n| n.id == id).map(|n| (n.x, n.y))
    }

    pub fn ids(&self) -> Vec<u32> {
        self.nodes.iter().map(|n| n.id).collect()
    }

    pub fn parent(&self, id: u32) -> Option<u32> {
        self.routes.get(&id).copied()
    }

    pub fn children(&self, id: u32) -> Vec<u32> {
        self.routes
            .iter()
            .filter(|(_, p)| **p == id)
            .map(|(c, _)| *c)
            .collect()
    }

    pub fn in_range(&self, a: u32, b: u32) -> bool {
        match (self.position(a), self.position(b)) {
            (Some(pa), Some(pb)) => a != b && distance(pa, pb) <= self.comm_range_m,
            _ => false,
        }
    }

    pub fn neighbors(&self, id: u32) -> Vec<u32> {
        self.ids()
            .into_iter()
            .filter(|&o| self.in_range(id, o))
            .collect()
    }

    /// Hops from a node to the coordinator.
    pub fn depth(&self, id: u32) -> u32 {
        let mut d = 0;
        let mut cur = id;
        while let Some(p) = self.parent(cur) {
            d += 1;
            cur = p;
            if d as usize > self.nodes.len() {
                break;
            }
        }
        d
    }

    pub fn max_depth(&self) -> u32 {
        self.ids()
            .into_iter()
            .map(|i| self.depth(i))
            .max()
            .unwrap_or(0)
    }

    /// Checks that routes form a tree rooted at the coordinator with every
    /// parent inside communication range.
    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(config_err("topology has no nodes"));
        }
        if !(self.comm_range_m.is_finite() && self.comm_range_m > 0.0) {
            return Err(config_err("comm_range_m must be positive"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for n in &self.nodes {
            if !seen.insert(n.id) {
                return Err(config_err(format!("duplicate node id {}", n.id)));
            }
            if !(n.x.is_finite() && n.y.is_finite()) {
                return Err(config_err(format!(
                    "node {} has a non-finite position",
                    n.id
                )));
            }
        }
        if !seen.contains(&self.coordinator) {
            return Err(config_err(format!(
                "coordinator {} is not a node",
                self.coordinator
            )));
        }
        if self.routes.contains_key(&self.coordinator) {
            return Err(config_err("the coordinator cannot have a parent"));
        }
        for n in &self.nodes {
            if n.id == self.coordinator {
                continue;
            }
            let parent = self
                .parent(n.id)
                .ok_or_else(|| config_err(format!("node {} has no route", n.id)))?;
            if !seen.contains(&parent) {
                return Err(config_err(format!(
                    "node {} routes to unknown node {parent}",
                    n.id
                )));
            }
            if !self.in_range(n.id, parent) {
                return Err(config_err(format!(
                    "node {} is out of range of its parent {parent}",
                    n.id
                )));
            }
            // walk to the root; a cycle never reaches it
            let mut cur = n.id;
            for _ in 0..=self.nodes.len() {
                match self.parent(cur) {
                    Some(p) => cur = p,
                    None => break,
                }
            }
            if cur != self.coordinator {
                return Err(config_err(format!(
                    "route from node {} does not reach the coordinator",
                    n.id
                )));
            }
        }
        for child in self.routes.keys() {
            if !seen.contains(child) {
                return Err(config_err(format!("route for unknown node {child}")));
            }
        }
        Ok(())
    }
}
