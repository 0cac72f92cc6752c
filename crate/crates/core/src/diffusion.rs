//! UIC diffusion in a possible world and Monte Carlo welfare estimation.

use rand::RngCore;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::allocation::Allocation;
use crate::error::{Error, Result};
use crate::graph::{EdgeId, Graph, NodeId};
use crate::rng::{self, Domain};
use crate::stats::Estimate;
use crate::utility::{members, ItemCatalog, ItemSet, NoiseWorld};

/// Largest catalog the simulator accepts; adoption enumerates subsets of
/// each node's desire set.
pub const MAX_SIM_ITEMS: usize = 10;

/// Edge liveness for one possible world.
#[derive(Debug, Clone)]
pub enum EdgeWorld {
    /// Edge `e` is live iff word `2e` of the stream falls below `p_e`.
    /// Liveness is a pure function of the edge id, so an edge keeps its
    /// status however often it is queried.
    Sampled(ChaCha8Rng),
    Fixed(Vec<bool>),
}

#[derive(Debug, Clone)]
pub struct PossibleWorld {
    pub edges: EdgeWorld,
    pub noise: NoiseWorld,
}

impl PossibleWorld {
    /// World number `index` of the family identified by `seed`.
    pub fn sample(catalog: &ItemCatalog, seed: u64, index: u64) -> Self {
        let mut noise_rng = rng::stream(seed, Domain::NoiseWorld, 0, index);
        PossibleWorld {
            edges: EdgeWorld::Sampled(rng::stream(seed, Domain::EdgeWorld, 0, index)),
            noise: catalog.sample_noise(&mut noise_rng),
        }
    }

    pub fn fixed(live: Vec<bool>, noise: NoiseWorld) -> Self {
        PossibleWorld {
            edges: EdgeWorld::Fixed(live),
            noise,
        }
    }

    pub fn is_live(&mut self, graph: &Graph, e: EdgeId) -> bool {
        match &mut self.edges {
            EdgeWorld::Fixed(live) => live[e as usize],
            EdgeWorld::Sampled(rng) => {
                let p = graph.edge(e).prob;
                if p >= 1.0 {
                    return true;
                }
                if p <= 0.0 {
                    return false;
                }
                rng.set_word_pos(2 * e as u128);
                rng::unit_f64(rng.next_u64()) < p
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionResult {
    /// Final adoption set of every node.
    pub adoption: Vec<ItemSet>,
    pub welfare: f64,
    /// Number of adopters of each item.
    pub item_counts: Vec<usize>,
    /// Last round in which some adoption changed (0 for no seeds).
    pub rounds: usize,
    /// `(node, before, after)` for every adoption change, per round.
    pub changes: Vec<Vec<(NodeId, ItemSet, ItemSet)>>,
}

/// Adoption rule: among `T` with `current ⊆ T ⊆ desire` and `U(T) >= 0`,
/// maximise `U(T)`, then `|T|`, then prefer the smaller mask.
pub(crate) fn best_response(utab: &[f64], current: ItemSet, desire: ItemSet) -> ItemSet {
    let free = desire & !current;
    let mut best = current;
    let mut best_u = utab[current as usize];
    let mut sub = free;
    loop {
        let t = current | sub;
        let u = utab[t as usize];
        if u >= 0.0 {
            let better = u > best_u
                || (u == best_u
                    && (t.count_ones() > best.count_ones()
                        || (t.count_ones() == best.count_ones() && t < best)));
            if better {
                best = t;
                best_u = u;
            }
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & free;
    }
    best
}

/// Reusable per-worker buffers; reset through the touched list so repeated
/// simulations on large graphs cost only what they visit.
pub(crate) struct Scratch {
    desire: Vec<ItemSet>,
    adopt: Vec<ItemSet>,
    queued: Vec<bool>,
    touched: Vec<NodeId>,
}

impl Scratch {
    pub(crate) fn new(n: usize) -> Self {
        Scratch {
            desire: vec![0; n],
            adopt: vec![0; n],
            queued: vec![false; n],
            touched: Vec::new(),
        }
    }

    fn touch(&mut self, v: NodeId) {
        let i = v as usize;
        if self.desire[i] == 0 && self.adopt[i] == 0 && !self.queued[i] {
            self.touched.push(v);
        }
    }

    fn reset(&mut self) {
        for &v in &self.touched {
            self.desire[v as usize] = 0;
            self.adopt[v as usize] = 0;
            self.queued[v as usize] = false;
        }
        self.touched.clear();
    }
}

pub(crate) struct Outcome {
    pub welfare: f64,
    pub counts: [u32; MAX_SIM_ITEMS],
    pub rounds: usize,
}

/// Runs one diffusion; leaves final state in `scratch` until the next call.
pub(crate) fn run(
    graph: &Graph,
    utab: &[f64],
    seeds: &[(NodeId, ItemSet)],
    world: &mut PossibleWorld,
    scratch: &mut Scratch,
    mut log: Option<&mut Vec<Vec<(NodeId, ItemSet, ItemSet)>>>,
) -> Outcome {
    scratch.reset();
    for &(v, mask) in seeds {
        scratch.touch(v);
        scratch.desire[v as usize] |= mask;
    }
    let mut changed: Vec<NodeId> = Vec::new();
    let mut round_log = Vec::new();
    for &(v, _) in seeds {
        let i = v as usize;
        let next = best_response(utab, 0, scratch.desire[i]);
        if next != 0 {
            scratch.adopt[i] = next;
            changed.push(v);
            round_log.push((v, 0, next));
        }
    }
    let mut rounds = usize::from(!changed.is_empty());
    if let Some(log) = log.as_mut() {
        if !round_log.is_empty() {
            log.push(round_log);
        }
    }
    let mut receivers: Vec<NodeId> = Vec::new();
    while !changed.is_empty() {
        receivers.clear();
        for &u in &changed {
            let carried = scratch.adopt[u as usize];
            for &e in graph.out_edges(u) {
                if !world.is_live(graph, e) {
                    continue;
                }
                let v = graph.edge(e).target;
                let i = v as usize;
                if scratch.desire[i] | carried != scratch.desire[i] {
                    scratch.touch(v);
                    scratch.desire[i] |= carried;
                    if !scratch.queued[i] {
                        scratch.queued[i] = true;
                        receivers.push(v);
                    }
                }
            }
        }
        changed.clear();
        let mut round_log = Vec::new();
        for &v in &receivers {
            let i = v as usize;
            scratch.queued[i] = false;
            let before = scratch.adopt[i];
            let next = best_response(utab, before, scratch.desire[i]);
            if next != before {
                scratch.adopt[i] = next;
                changed.push(v);
                round_log.push((v, before, next));
            }
        }
        if !changed.is_empty() {
            rounds += 1;
            if let Some(log) = log.as_mut() {
                log.push(round_log);
            }
        }
    }
    let mut welfare = 0.0;
    let mut counts = [0u32; MAX_SIM_ITEMS];
    for &v in &scratch.touched {
        let a = scratch.adopt[v as usize];
        welfare += utab[a as usize];
        for i in members(a) {
            counts[i] += 1;
        }
    }
    Outcome {
        welfare,
        counts,
        rounds,
    }
}

pub(crate) fn check_inputs(graph: &Graph, catalog: &ItemCatalog, allocation: &Allocation) -> Result<()> {
    if catalog.item_count() > MAX_SIM_ITEMS {
        return Err(Error::Limit(format!(
            "the simulator supports at most {MAX_SIM_ITEMS} items, catalog has {}",
            catalog.item_count()
        )));
    }
    allocation.validate(graph, catalog)
}

/// Deterministic diffusion of `allocation` in `world`.
pub fn simulate(
    graph: &Graph,
    catalog: &ItemCatalog,
    allocation: &Allocation,
    world: &mut PossibleWorld,
) -> Result<DiffusionResult> {
    check_inputs(graph, catalog, allocation)?;
    if world.noise.0.len() != catalog.item_count() {
        return Err(Error::Invalid("noise world does not cover every item".into()));
    }
    if let EdgeWorld::Fixed(live) = &world.edges {
        if live.len() != graph.edge_count() {
            return Err(Error::Invalid("edge world does not cover every edge".into()));
        }
    }
    let utab = catalog.utility_table(&world.noise);
    let mut scratch = Scratch::new(graph.node_count());
    let mut changes = Vec::new();
    let out = run(graph, &utab, &allocation.seed_masks(), world, &mut scratch, Some(&mut changes));
    Ok(DiffusionResult {
        adoption: scratch.adopt.clone(),
        welfare: out.welfare,
        item_counts: out.counts[..catalog.item_count()].iter().map(|&c| c as usize).collect(),
        rounds: out.rounds,
        changes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WelfareEstimate {
    pub welfare: Estimate,
    /// Mean number of adopters of each item.
    pub adoption: Vec<f64>,
}

/// Mean welfare over worlds `0..samples` of the family `seed`.
pub fn estimate_welfare(
    graph: &Graph,
    catalog: &ItemCatalog,
    allocation: &Allocation,
    samples: usize,
    seed: u64,
) -> Result<WelfareEstimate> {
    check_inputs(graph, catalog, allocation)?;
    if samples == 0 {
        return Err(Error::Invalid("at least one sample is required".into()));
    }
    let seeds = allocation.seed_masks();
    let per_sample: Vec<(f64, [u32; MAX_SIM_ITEMS])> = (0..samples as u64)
        .into_par_iter()
        .map_init(
            || Scratch::new(graph.node_count()),
            |scratch, idx| {
                let mut world = PossibleWorld::sample(catalog, seed, idx);
                let utab = catalog.utility_table(&world.noise);
                let out = run(graph, &utab, &seeds, &mut world, scratch, None);
                (out.welfare, out.counts)
            },
        )
        .collect();
    let welfare: Vec<f64> = per_sample.iter().map(|s| s.0).collect();
    let adoption = (0..catalog.item_count())
        .map(|i| per_sample.iter().map(|s| f64::from(s.1[i])).sum::<f64>() / samples as f64)
        .collect();
    Ok(WelfareEstimate {
        welfare: Estimate::from_samples(&welfare),
        adoption,
    })
}

/// `rho(candidate ∪ base) - rho(base)`, replaying the same world for both
/// terms of every sample.
pub fn estimate_marginal_welfare(
    graph: &Graph,
    catalog: &ItemCatalog,
    candidate: &Allocation,
    base: &Allocation,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    if !candidate.is_disjoint(base) {
        return Err(Error::Invalid("candidate and base allocations overlap".into()));
    }
    let union = candidate.union(base);
    check_inputs(graph, catalog, &union)?;
    if samples == 0 {
        return Err(Error::Invalid("at least one sample is required".into()));
    }
    let with = union.seed_masks();
    let without = base.seed_masks();
    let diffs: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map_init(
            || Scratch::new(graph.node_count()),
            |scratch, idx| {
                let mut world = PossibleWorld::sample(catalog, seed, idx);
                let utab = catalog.utility_table(&world.noise);
                let a = run(graph, &utab, &with, &mut world, scratch, None).welfare;
                let b = if without.is_empty() {
                    0.0
                } else {
                    run(graph, &utab, &without, &mut world, scratch, None).welfare
                };
                a - b
            },
        )
        .collect();
    Ok(Estimate::from_samples(&diffs))
}
