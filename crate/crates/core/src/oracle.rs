//! Exact expectations on tiny instances by enumerating every possible world.

use rayon::prelude::*;

use crate::allocation::Allocation;
use crate::diffusion::{self, PossibleWorld, Scratch};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::stats::pairwise_sum;
use crate::utility::{ItemCatalog, ItemId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    /// Cap on uncertain edges (`0 < p < 1`); certain edges are free.
    pub max_edges: usize,
    /// Cap on the number of joint noise outcomes.
    pub max_noise_support: usize,
    /// Cap on candidate allocations examined by [`optimal_allocation`].
    pub max_allocation_space: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_edges: 15,
            max_noise_support: 64,
            max_allocation_space: 100_000,
        }
    }
}

/// Every edge world with its probability.
pub fn edge_worlds(graph: &Graph, limits: &OracleLimits) -> Result<Vec<(Vec<bool>, f64)>> {
    let uncertain: Vec<usize> = graph
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.prob > 0.0 && e.prob < 1.0)
        .map(|(i, _)| i)
        .collect();
    if uncertain.len() > limits.max_edges {
        return Err(Error::Limit(format!(
            "{} uncertain edges exceeds the oracle limit of {}",
            uncertain.len(),
            limits.max_edges
        )));
    }
    let base: Vec<bool> = graph.edges().iter().map(|e| e.prob >= 1.0).collect();
    Ok((0..1u64 << uncertain.len())
        .map(|bits| {
            let mut live = base.clone();
            let mut p = 1.0;
            for (k, &e) in uncertain.iter().enumerate() {
                let on = bits >> k & 1 == 1;
                live[e] = on;
                let q = graph.edge(e as u32).prob;
                p *= if on { q } else { 1.0 - q };
            }
            (live, p)
        })
        .collect())
}

/// Precomputed worlds for repeated exact welfare queries.
pub struct WelfareOracle<'a> {
    graph: &'a Graph,
    catalog: &'a ItemCatalog,
    edges: Vec<(Vec<bool>, f64)>,
    noise: Vec<(Vec<f64>, f64)>,
}

impl<'a> WelfareOracle<'a> {
    pub fn new(graph: &'a Graph, catalog: &'a ItemCatalog, limits: &OracleLimits) -> Result<Self> {
        if catalog.item_count() > diffusion::MAX_SIM_ITEMS {
            return Err(Error::Limit("too many items for the simulator".into()));
        }
        let support = catalog.noise_support().ok_or_else(|| {
            Error::Limit("the oracle needs zero or two-point noise on every item".into())
        })?;
        if support.len() > limits.max_noise_support {
            return Err(Error::Limit(format!(
                "{} joint noise outcomes exceeds the oracle limit of {}",
                support.len(),
                limits.max_noise_support
            )));
        }
        let noise = support
            .into_iter()
            .map(|(w, p)| (catalog.utility_table(&w), p))
            .collect();
        Ok(WelfareOracle {
            graph,
            catalog,
            edges: edge_worlds(graph, limits)?,
            noise,
        })
    }

    fn contributions(&self, allocation: &Allocation, idx: usize, scratch: &mut Scratch) -> f64 {
        let (live, pe) = &self.edges[idx / self.noise.len()];
        let (utab, pn) = &self.noise[idx % self.noise.len()];
        let mut world = PossibleWorld::fixed(live.clone(), crate::utility::NoiseWorld(Vec::new()));
        let seeds = allocation.seed_masks();
        pe * pn * diffusion::run(self.graph, utab, &seeds, &mut world, scratch, None).welfare
    }

    fn world_count(&self) -> usize {
        self.edges.len() * self.noise.len()
    }

    /// `rho(S)`, single-threaded.
    pub fn welfare(&self, allocation: &Allocation) -> Result<f64> {
        diffusion::check_inputs(self.graph, self.catalog, allocation)?;
        let mut scratch = Scratch::new(self.graph.node_count());
        let parts: Vec<f64> = (0..self.world_count())
            .map(|i| self.contributions(allocation, i, &mut scratch))
            .collect();
        Ok(pairwise_sum(&parts))
    }

    /// `rho(S)` with worlds spread over the rayon pool; bit-identical to
    /// [`WelfareOracle::welfare`].
    pub fn welfare_par(&self, allocation: &Allocation) -> Result<f64> {
        diffusion::check_inputs(self.graph, self.catalog, allocation)?;
        let parts: Vec<f64> = (0..self.world_count())
            .into_par_iter()
            .map_init(
                || Scratch::new(self.graph.node_count()),
                |scratch, i| self.contributions(allocation, i, scratch),
            )
            .collect();
        Ok(pairwise_sum(&parts))
    }
}

impl WelfareOracle<'_> {
    /// Exact welfare and expected number of adopters of each item.
    pub fn outcome(&self, allocation: &Allocation) -> Result<ExactOutcome> {
        diffusion::check_inputs(self.graph, self.catalog, allocation)?;
        let m = self.catalog.item_count();
        let seeds = allocation.seed_masks();
        let parts: Vec<(f64, Vec<f64>)> = (0..self.world_count())
            .into_par_iter()
            .map_init(
                || Scratch::new(self.graph.node_count()),
                |scratch, idx| {
                    let (live, pe) = &self.edges[idx / self.noise.len()];
                    let (utab, pn) = &self.noise[idx % self.noise.len()];
                    let mut world = PossibleWorld::fixed(live.clone(), crate::utility::NoiseWorld(Vec::new()));
                    let out = diffusion::run(self.graph, utab, &seeds, &mut world, scratch, None);
                    let p = pe * pn;
                    (p * out.welfare, out.counts[..m].iter().map(|&c| p * f64::from(c)).collect())
                },
            )
            .collect();
        let welfare: Vec<f64> = parts.iter().map(|p| p.0).collect();
        let adoption = (0..m)
            .map(|i| pairwise_sum(&parts.iter().map(|p| p.1[i]).collect::<Vec<f64>>()))
            .collect();
        Ok(ExactOutcome {
            welfare: pairwise_sum(&welfare),
            adoption,
        })
    }
}

/// Exact expectations of one allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactOutcome {
    pub welfare: f64,
    pub adoption: Vec<f64>,
}

/// `E_w[rho_w(S)]` over every edge and noise world.
pub fn exact_welfare(
    graph: &Graph,
    catalog: &ItemCatalog,
    allocation: &Allocation,
    limits: &OracleLimits,
) -> Result<f64> {
    WelfareOracle::new(graph, catalog, limits)?.welfare_par(allocation)
}

fn reach_count(graph: &Graph, live: &[bool], seeds: &[NodeId], seen: &mut Vec<bool>) -> usize {
    seen.clear();
    seen.resize(graph.node_count(), false);
    let mut stack: Vec<NodeId> = Vec::new();
    for &s in seeds {
        if !seen[s as usize] {
            seen[s as usize] = true;
            stack.push(s);
        }
    }
    let mut count = stack.len();
    while let Some(u) = stack.pop() {
        for &e in graph.out_edges(u) {
            let v = graph.edge(e).target as usize;
            if live[e as usize] && !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v as NodeId);
            }
        }
    }
    count
}

/// `sigma(S)`: expected number of nodes reachable from `seeds`.
pub fn exact_spread(graph: &Graph, seeds: &[NodeId], limits: &OracleLimits) -> Result<f64> {
    if let Some(&bad) = seeds.iter().find(|&&s| s as usize >= graph.node_count()) {
        return Err(Error::Invalid(format!("seed {bad} is not in the graph")));
    }
    let worlds = edge_worlds(graph, limits)?;
    let mut seen = Vec::new();
    let parts: Vec<f64> = worlds
        .iter()
        .map(|(live, p)| p * reach_count(graph, live, seeds, &mut seen) as f64)
        .collect();
    Ok(pairwise_sum(&parts))
}

/// `sigma(S ∪ S^P) - sigma(S^P)`.
pub fn exact_marginal_spread(
    graph: &Graph,
    seeds: &[NodeId],
    base: &[NodeId],
    limits: &OracleLimits,
) -> Result<f64> {
    let union: Vec<NodeId> = seeds.iter().chain(base).copied().collect();
    Ok(exact_spread(graph, &union, limits)? - exact_spread(graph, base, limits)?)
}

/// Per-world reachability bitmasks for graphs with at most 64 nodes, so
/// that spreads of many seed sets can be evaluated cheaply.
pub struct SpreadOracle {
    worlds: Vec<(Vec<u64>, f64)>,
}

impl SpreadOracle {
    pub fn new(graph: &Graph, limits: &OracleLimits) -> Result<Self> {
        let n = graph.node_count();
        if n > 64 {
            return Err(Error::Limit("spread tables support at most 64 nodes".into()));
        }
        let mut seen = Vec::new();
        let worlds = edge_worlds(graph, limits)?
            .into_iter()
            .map(|(live, p)| {
                let reach = (0..n as NodeId)
                    .map(|v| {
                        reach_count(graph, &live, &[v], &mut seen);
                        seen.iter()
                            .enumerate()
                            .filter(|(_, &s)| s)
                            .fold(0u64, |acc, (u, _)| acc | 1 << u)
                    })
                    .collect();
                (reach, p)
            })
            .collect();
        Ok(SpreadOracle { worlds })
    }

    fn covered(reach: &[u64], seeds: &[NodeId]) -> u64 {
        seeds.iter().fold(0, |acc, &s| acc | reach[s as usize])
    }

    pub fn spread(&self, seeds: &[NodeId]) -> f64 {
        let parts: Vec<f64> = self
            .worlds
            .iter()
            .map(|(reach, p)| p * f64::from(Self::covered(reach, seeds).count_ones()))
            .collect();
        pairwise_sum(&parts)
    }

    /// `sigma(S | S^P)` computed world by world.
    pub fn marginal_spread(&self, seeds: &[NodeId], base: &[NodeId]) -> f64 {
        let parts: Vec<f64> = self
            .worlds
            .iter()
            .map(|(reach, p)| {
                let b = Self::covered(reach, base);
                p * f64::from((Self::covered(reach, seeds) & !b).count_ones())
            })
            .collect();
        pairwise_sum(&parts)
    }

    /// Best marginal spread over all `k`-subsets of `candidates`.
    pub fn best_marginal(&self, candidates: &[NodeId], k: usize, base: &[NodeId]) -> (Vec<NodeId>, f64) {
        let mut best = (Vec::new(), f64::NEG_INFINITY);
        for_each_subset(candidates, k, k, &mut |s| {
            let v = self.marginal_spread(s, base);
            if v > best.1 {
                best = (s.to_vec(), v);
            }
        });
        best
    }
}

/// Calls `f` on every subset of `pool` with size in `lo..=hi`, in
/// lexicographic order of positions.
pub fn for_each_subset(pool: &[NodeId], lo: usize, hi: usize, f: &mut dyn FnMut(&[NodeId])) {
    fn rec(pool: &[NodeId], start: usize, lo: usize, hi: usize, cur: &mut Vec<NodeId>, f: &mut dyn FnMut(&[NodeId])) {
        if cur.len() >= lo {
            f(cur);
        }
        if cur.len() == hi {
            return;
        }
        for i in start..pool.len() {
            cur.push(pool[i]);
            rec(pool, i + 1, lo, hi, cur, f);
            cur.pop();
        }
    }
    rec(pool, 0, lo, hi, &mut Vec::new(), f);
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// Exhaustive CWelMax: the budget-feasible allocation of the budgeted items
/// that maximizes `rho(S ∪ S^P)`. Seed sets of different items may overlap.
pub fn optimal_allocation(
    graph: &Graph,
    catalog: &ItemCatalog,
    budgets: &[(ItemId, usize)],
    base: &Allocation,
    limits: &OracleLimits,
) -> Result<(Allocation, f64)> {
    let n = graph.node_count() as u64;
    let mut space: u64 = 1;
    for &(_, b) in budgets {
        let per: u64 = (0..=(b as u64).min(n)).map(|k| binomial(n, k)).fold(0, u64::saturating_add);
        space = space.saturating_mul(per);
    }
    if space > limits.max_allocation_space {
        return Err(Error::Limit(format!(
            "{space} candidate allocations exceeds the oracle limit of {}",
            limits.max_allocation_space
        )));
    }
    let oracle = WelfareOracle::new(graph, catalog, limits)?;
    let nodes: Vec<NodeId> = (0..n as NodeId).collect();
    let mut choices: Vec<Vec<Vec<NodeId>>> = Vec::new();
    for &(item, b) in budgets {
        let pool: Vec<NodeId> = nodes.iter().copied().filter(|&v| !base.contains(v, item)).collect();
        let mut sets = Vec::new();
        for_each_subset(&pool, 0, b, &mut |s| sets.push(s.to_vec()));
        choices.push(sets);
    }
    let mut candidates: Vec<Allocation> = vec![base.clone()];
    for (k, &(item, _)) in budgets.iter().enumerate() {
        candidates = candidates
            .iter()
            .flat_map(|a| {
                choices[k].iter().map(move |s| {
                    let mut next = a.clone();
                    for &v in s {
                        next.insert(v, item);
                    }
                    next
                })
            })
            .collect();
    }
    let values: Vec<f64> = candidates
        .par_iter()
        .map(|a| oracle.welfare(a))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    let base_pairs = base.clone();
    let chosen = Allocation::from_pairs(candidates[best].pairs().filter(|&(v, i)| !base_pairs.contains(v, i)));
    Ok((chosen, values[best]))
}
