//! Allocations: sets of `(node, item)` seed pairs.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::utility::{ItemCatalog, ItemId, ItemSet};

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Allocation {
    pairs: BTreeSet<(NodeId, ItemId)>,
}

impl Allocation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (NodeId, ItemId)>) -> Self {
        Allocation {
            pairs: pairs.into_iter().collect(),
        }
    }

    /// `nodes x {item}`.
    pub fn block(nodes: &[NodeId], item: ItemId) -> Self {
        Self::from_pairs(nodes.iter().map(|&v| (v, item)))
    }

    pub fn insert(&mut self, node: NodeId, item: ItemId) -> bool {
        self.pairs.insert((node, item))
    }

    pub fn contains(&self, node: NodeId, item: ItemId) -> bool {
        self.pairs.contains(&(node, item))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (NodeId, ItemId)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn union(&self, other: &Allocation) -> Allocation {
        Allocation {
            pairs: self.pairs.union(&other.pairs).copied().collect(),
        }
    }

    pub fn is_disjoint(&self, other: &Allocation) -> bool {
        self.pairs.is_disjoint(&other.pairs)
    }

    /// `S_i`, ascending.
    pub fn seeds_of(&self, item: ItemId) -> Vec<NodeId> {
        self.pairs.iter().filter(|p| p.1 == item).map(|p| p.0).collect()
    }

    /// `S`: every seed node, ascending and deduplicated.
    pub fn nodes(&self) -> Vec<NodeId> {
        let mut v: Vec<NodeId> = self.pairs.iter().map(|p| p.0).collect();
        v.dedup();
        v
    }

    pub fn items(&self) -> ItemSet {
        self.pairs.iter().fold(0, |acc, p| acc | 1 << p.1)
    }

    /// Seed nodes with the bundle allocated to each, ascending by node.
    pub fn seed_masks(&self) -> Vec<(NodeId, ItemSet)> {
        let mut out: Vec<(NodeId, ItemSet)> = Vec::new();
        for &(v, i) in &self.pairs {
            match out.last_mut() {
                Some((u, mask)) if *u == v => *mask |= 1 << i,
                _ => out.push((v, 1 << i)),
            }
        }
        out
    }

    /// Checks `|S_i| <= b_i` for every item; unlisted items have budget 0.
    pub fn check_budgets(&self, budgets: &[(ItemId, usize)]) -> Result<()> {
        let mut counts: Vec<usize> = Vec::new();
        for &(_, i) in &self.pairs {
            if counts.len() <= i {
                counts.resize(i + 1, 0);
            }
            counts[i] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            let b = budgets.iter().find(|b| b.0 == i).map_or(0, |b| b.1);
            if c > b {
                return Err(Error::Budget(format!("item {i} has {c} seeds but budget {b}")));
            }
        }
        Ok(())
    }

    pub fn validate(&self, graph: &Graph, catalog: &ItemCatalog) -> Result<()> {
        for &(v, i) in &self.pairs {
            if v as usize >= graph.node_count() {
                return Err(Error::Invalid(format!("seed node {v} is not in the graph")));
            }
            if i >= catalog.item_count() {
                return Err(Error::UnknownItem(format!("item index {i}")));
            }
        }
        Ok(())
    }

    /// Parses `node item-id` lines, `#` comments allowed.
    pub fn parse<R: BufRead>(reader: R, catalog: &ItemCatalog) -> Result<Allocation> {
        let mut out = Allocation::new();
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            let [node, item] = fields[..] else {
                return Err(Error::parse(lineno, "expected `node item`"));
            };
            let node: NodeId = node
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad node id `{node}`")))?;
            let item = catalog.index_of(item)?;
            if !out.insert(node, item) {
                return Err(Error::parse(lineno, "duplicate seed pair"));
            }
        }
        Ok(out)
    }

    pub fn to_text(&self, catalog: &ItemCatalog) -> String {
        let mut out = String::new();
        for &(v, i) in &self.pairs {
            let _ = writeln!(out, "{v} {}", catalog.item(i).name);
        }
        out
    }
}
