//! Reverse-reachable (RR) sets: plain, marginal on fixed seeds, and weighted
//! by the welfare gain of a superior item; plus greedy node selection.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::allocation::Allocation;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::rng::{self, Domain};
use crate::utility::ItemId;

#[derive(Debug, Clone, PartialEq)]
pub struct RRSet {
    pub root: NodeId,
    /// Empty when a marginal set was discarded.
    pub members: Vec<NodeId>,
    pub weight: f64,
}

impl RRSet {
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Inputs for weighted RR sets: the best inferior utility held by each
/// fixed seed node and the superior item's utility.
#[derive(Debug, Clone)]
pub struct WeightedContext {
    held: Vec<Option<f64>>,
    superior: f64,
}

impl WeightedContext {
    /// `utilities[i]` is `E[U+({i})]`. `base` must not allocate `superior`.
    pub fn new(
        graph: &Graph,
        base: &Allocation,
        superior: ItemId,
        utilities: &[f64],
    ) -> Result<Self> {
        let mut held: Vec<Option<f64>> = vec![None; graph.node_count()];
        for (v, i) in base.pairs() {
            if i == superior {
                return Err(Error::Precondition(
                    "the fixed allocation already holds the superior item".into(),
                ));
            }
            let slot = held
                .get_mut(v as usize)
                .ok_or_else(|| Error::Invalid(format!("seed node {v} is not in the graph")))?;
            let u = utilities[i];
            *slot = Some(slot.map_or(u, |h: f64| h.max(u)));
        }
        Ok(WeightedContext {
            held,
            superior: utilities[superior],
        })
    }

    /// Largest weight any RR set can carry.
    pub fn max_weight(&self) -> f64 {
        self.superior
    }

    /// Smallest weight any RR set can carry.
    pub fn min_weight(&self) -> f64 {
        let worst = self.held.iter().flatten().fold(0.0f64, |a, &h| a.max(h));
        (self.superior - worst).max(0.0)
    }
}

#[derive(Debug, Clone)]
pub enum RrKind {
    Standard,
    /// Sets reaching a `true` node are discarded (kept as empty sets).
    Marginal(Vec<bool>),
    Weighted(WeightedContext),
}

/// Per-worker visit marks, cleared by epoch rather than by refilling.
pub(crate) struct Marks {
    epoch: u32,
    seen: Vec<u32>,
}

impl Marks {
    pub(crate) fn new(n: usize) -> Self {
        Marks {
            epoch: 0,
            seen: vec![0; n],
        }
    }

    fn next(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.seen.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
    }

    fn visit(&mut self, v: NodeId) -> bool {
        let s = &mut self.seen[v as usize];
        if *s == self.epoch {
            false
        } else {
            *s = self.epoch;
            true
        }
    }
}

fn coin<R: Rng + ?Sized>(p: f64, rng: &mut R) -> bool {
    if p >= 1.0 {
        true
    } else if p <= 0.0 {
        false
    } else {
        rng.random::<f64>() < p
    }
}

/// Level-synchronous reverse BFS from a uniform root.
fn grow<R: Rng + ?Sized>(graph: &Graph, kind: &RrKind, marks: &mut Marks, rng: &mut R) -> RRSet {
    let n = graph.node_count();
    let root = rng.random_range(0..n) as NodeId;
    marks.next();
    marks.visit(root);
    let mut members = vec![root];
    let mut level_start = 0;
    loop {
        match kind {
            RrKind::Marginal(fixed) => {
                if members[level_start..].iter().any(|&v| fixed[v as usize]) {
                    return RRSet { root, members: Vec::new(), weight: 1.0 };
                }
            }
            RrKind::Weighted(ctx) => {
                let hit = members[level_start..]
                    .iter()
                    .filter_map(|&v| ctx.held[v as usize])
                    .fold(None, |acc: Option<f64>, h| Some(acc.map_or(h, |a| a.max(h))));
                if let Some(best) = hit {
                    let weight = (ctx.superior - best).max(0.0);
                    return RRSet { root, members, weight };
                }
            }
            RrKind::Standard => {}
        }
        let level_end = members.len();
        if level_start == level_end {
            break;
        }
        for idx in level_start..level_end {
            let u = members[idx];
            for &e in graph.in_edges(u) {
                let edge = graph.edge(e);
                if marks.seen[edge.source as usize] != marks.epoch && coin(edge.prob, rng) {
                    marks.visit(edge.source);
                    members.push(edge.source);
                }
            }
        }
        level_start = level_end;
    }
    let weight = match kind {
        RrKind::Weighted(ctx) => ctx.superior,
        _ => 1.0,
    };
    RRSet { root, members, weight }
}

/// Plain RR set: every node that reaches a uniform root in a sampled world.
pub fn sample_rr<R: Rng + ?Sized>(graph: &Graph, rng: &mut R) -> Result<RRSet> {
    non_empty(graph)?;
    Ok(grow(graph, &RrKind::Standard, &mut Marks::new(graph.node_count()), rng))
}

/// Like [`sample_rr`] but empty whenever the set meets `fixed`.
pub fn sample_marginal_rr<R: Rng + ?Sized>(graph: &Graph, fixed: &[NodeId], rng: &mut R) -> Result<RRSet> {
    non_empty(graph)?;
    let kind = RrKind::Marginal(node_mask(graph, fixed)?);
    Ok(grow(graph, &kind, &mut Marks::new(graph.node_count()), rng))
}

/// Reverse BFS that stops after the first level touching a fixed seed; the
/// weight is the utility gained by converting the root to the superior item.
pub fn sample_weighted_rr<R: Rng + ?Sized>(graph: &Graph, ctx: &WeightedContext, rng: &mut R) -> Result<RRSet> {
    non_empty(graph)?;
    let kind = RrKind::Weighted(ctx.clone());
    Ok(grow(graph, &kind, &mut Marks::new(graph.node_count()), rng))
}

fn non_empty(graph: &Graph) -> Result<()> {
    if graph.node_count() == 0 {
        return Err(Error::Invalid("RR sampling needs at least one node".into()));
    }
    Ok(())
}

pub(crate) fn node_mask(graph: &Graph, nodes: &[NodeId]) -> Result<Vec<bool>> {
    let mut mask = vec![false; graph.node_count()];
    for &v in nodes {
        *mask
            .get_mut(v as usize)
            .ok_or_else(|| Error::Invalid(format!("node {v} is not in the graph")))? = true;
    }
    Ok(mask)
}

/// Draws RR sets by sample index: set `k` of a sampler always comes from
/// stream `k` of `(seed, phase)`, whatever the thread count.
pub struct RrSampler<'a> {
    pub graph: &'a Graph,
    pub kind: RrKind,
    pub seed: u64,
    pub phase: u64,
}

impl RrSampler<'_> {
    pub(crate) fn rng(&self, index: u64) -> ChaCha8Rng {
        rng::stream(self.seed, Domain::RrSample, self.phase, index)
    }

    pub fn sample(&self, index: u64) -> RRSet {
        grow(self.graph, &self.kind, &mut Marks::new(self.graph.node_count()), &mut self.rng(index))
    }
}

/// Flat storage for a list of RR sets; empty sets still count towards `θ`.
#[derive(Debug, Clone, Default)]
pub struct RRCollection {
    n: usize,
    offsets: Vec<usize>,
    nodes: Vec<NodeId>,
    weights: Vec<f64>,
    roots: Vec<NodeId>,
}

const CHUNK: usize = 1 << 14;

impl RRCollection {
    pub fn new(n: usize) -> Self {
        RRCollection {
            n,
            offsets: vec![0],
            ..Default::default()
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// `θ`.
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn push(&mut self, set: RRSet) {
        self.nodes.extend_from_slice(&set.members);
        self.offsets.push(self.nodes.len());
        self.weights.push(set.weight);
        self.roots.push(set.root);
    }

    pub fn members(&self, i: usize) -> &[NodeId] {
        &self.nodes[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn root(&self, i: usize) -> NodeId {
        self.roots[i]
    }

    pub fn empty_count(&self) -> usize {
        (0..self.len()).filter(|&i| self.members(i).is_empty()).count()
    }

    /// Total stored node entries.
    pub fn total_size(&self) -> usize {
        self.nodes.len()
    }

    /// Appends sets `len()..target` from `sampler`.
    pub fn extend_to(&mut self, target: usize, sampler: &RrSampler) {
        let n = sampler.graph.node_count();
        while self.len() < target {
            let start = self.len() as u64;
            let end = (self.len() + CHUNK).min(target) as u64;
            let sets: Vec<RRSet> = (start..end)
                .into_par_iter()
                .map_init(
                    || Marks::new(n),
                    |marks, idx| grow(sampler.graph, &sampler.kind, marks, &mut sampler.rng(idx)),
                )
                .collect();
            for s in sets {
                self.push(s);
            }
        }
    }

    fn index(&self) -> (Vec<usize>, Vec<u32>) {
        let mut offsets = vec![0usize; self.n + 1];
        for &v in &self.nodes {
            offsets[v as usize + 1] += 1;
        }
        for v in 0..self.n {
            offsets[v + 1] += offsets[v];
        }
        let mut cursor = offsets.clone();
        let mut ids = vec![0u32; self.nodes.len()];
        for i in 0..self.len() {
            for &v in self.members(i) {
                ids[cursor[v as usize]] = i as u32;
                cursor[v as usize] += 1;
            }
        }
        (offsets, ids)
    }

    /// `F_R(S)`: fraction of sets (empties included) that meet `seeds`.
    pub fn coverage_fraction(&self, seeds: &[NodeId]) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let hit = (0..self.len())
            .filter(|&i| self.members(i).iter().any(|v| seeds.contains(v)))
            .count();
        hit as f64 / self.len() as f64
    }

    /// `M_R(S)`: total weight of sets meeting `seeds`.
    pub fn weighted_coverage(&self, seeds: &[NodeId]) -> f64 {
        (0..self.len())
            .filter(|&i| self.members(i).iter().any(|v| seeds.contains(v)))
            .map(|i| self.weights[i])
            .sum()
    }
}

/// Greedy picks and the objective after each prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub seeds: Vec<NodeId>,
    pub values: Vec<f64>,
}

fn check_k(coll: &RRCollection, k: usize, excluded: &[bool]) -> Result<()> {
    let available = (0..coll.n).filter(|&v| !excluded.get(v).copied().unwrap_or(false)).count();
    if k > available {
        return Err(Error::Invalid(format!("cannot pick {k} seeds from {available} candidate nodes")));
    }
    Ok(())
}

/// Greedy maximum coverage; ties go to the smaller node id. `values` holds
/// `F_R` after each pick.
pub fn node_selection_count(coll: &RRCollection, k: usize, excluded: &[bool]) -> Result<Selection> {
    check_k(coll, k, excluded)?;
    let (offsets, ids) = coll.index();
    let mut counts: Vec<usize> = (0..coll.n).map(|v| offsets[v + 1] - offsets[v]).collect();
    let mut covered = vec![false; coll.len()];
    let mut blocked: Vec<bool> = (0..coll.n).map(|v| excluded.get(v).copied().unwrap_or(false)).collect();
    let mut hit = 0usize;
    let theta = coll.len().max(1) as f64;
    let mut sel = Selection { seeds: Vec::with_capacity(k), values: Vec::with_capacity(k) };
    for _ in 0..k {
        let mut best: Option<usize> = None;
        for v in 0..coll.n {
            if !blocked[v] && best.is_none_or(|b| counts[v] > counts[b]) {
                best = Some(v);
            }
        }
        let v = best.expect("k checked against candidates");
        blocked[v] = true;
        for &s in &ids[offsets[v]..offsets[v + 1]] {
            let s = s as usize;
            if !covered[s] {
                covered[s] = true;
                hit += 1;
                for &u in coll.members(s) {
                    counts[u as usize] -= 1;
                }
            }
        }
        sel.seeds.push(v as NodeId);
        sel.values.push(hit as f64 / theta);
    }
    Ok(sel)
}

/// Greedy weighted coverage; `values` holds `M_R` after each pick. Gains of
/// affected nodes are recomputed from scratch so equal gains compare equal.
pub fn node_selection_weighted(coll: &RRCollection, k: usize, excluded: &[bool]) -> Result<Selection> {
    check_k(coll, k, excluded)?;
    let (offsets, ids) = coll.index();
    let mut covered = vec![false; coll.len()];
    let gain_of = |v: usize, covered: &[bool]| -> f64 {
        ids[offsets[v]..offsets[v + 1]]
            .iter()
            .filter(|&&s| !covered[s as usize])
            .map(|&s| coll.weights[s as usize])
            .sum()
    };
    let mut gains: Vec<f64> = (0..coll.n).map(|v| gain_of(v, &covered)).collect();
    let mut blocked: Vec<bool> = (0..coll.n).map(|v| excluded.get(v).copied().unwrap_or(false)).collect();
    let mut total = 0.0;
    let mut sel = Selection { seeds: Vec::with_capacity(k), values: Vec::with_capacity(k) };
    let mut stale: Vec<NodeId> = Vec::new();
    for _ in 0..k {
        let mut best: Option<usize> = None;
        for v in 0..coll.n {
            if !blocked[v] && best.is_none_or(|b| gains[v] > gains[b]) {
                best = Some(v);
            }
        }
        let v = best.expect("k checked against candidates");
        blocked[v] = true;
        total += gains[v];
        stale.clear();
        for &s in &ids[offsets[v]..offsets[v + 1]] {
            let s = s as usize;
            if !covered[s] {
                covered[s] = true;
                stale.extend_from_slice(coll.members(s));
            }
        }
        stale.sort_unstable();
        stale.dedup();
        for &u in &stale {
            gains[u as usize] = gain_of(u as usize, &covered);
        }
        sel.seeds.push(v as NodeId);
        sel.values.push(total);
    }
    Ok(sel)
}
