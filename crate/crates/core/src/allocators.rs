//! Allocation algorithms: SeqGRD, SeqGRD-NM, MaxGRD, max-seq and SupGRD,
//! plus the round-robin, snake and greedy-marginal baselines.

use std::fmt;

use log::debug;

use crate::allocation::Allocation;
use crate::diffusion::{estimate_marginal_welfare, estimate_welfare};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::ris::{node_selection_weighted, WeightedContext};
use crate::selectors::{prima_plus, supgrd_sampling, SamplerParams};
use crate::stats::Estimate;
use crate::utility::{ItemCatalog, ItemId, McSettings};

/// Per-item budgets, in the order the caller lists them.
pub type Budgets = [(ItemId, usize)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocatorConfig {
    pub sampler: SamplerParams,
    /// Simulations per marginal-welfare estimate.
    pub mc_samples: usize,
    pub seed: u64,
    /// Upper bound on `n * m * sum(b)` for the greedy-marginal baseline.
    pub gm_cap: usize,
}

impl Default for AllocatorConfig {
    fn default() -> Self {
        AllocatorConfig {
            sampler: SamplerParams::default(),
            mc_samples: 5000,
            seed: 0,
            gm_cap: 1_000_000,
        }
    }
}

impl AllocatorConfig {
    fn check(&self) -> Result<()> {
        self.sampler.check()?;
        if self.mc_samples == 0 {
            return Err(Error::Invalid("mc_samples must be at least 1".into()));
        }
        Ok(())
    }

    fn mc(&self) -> McSettings {
        McSettings { seed: self.seed, ..McSettings::default() }
    }
}

/// One step of an allocator run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub phase: &'static str,
    pub item: Option<ItemId>,
    pub seeds: Vec<NodeId>,
    pub marginal: Option<Estimate>,
    pub decision: &'static str,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "phase={}", self.phase)?;
        if let Some(i) = self.item {
            write!(f, " item={i}")?;
        }
        let seeds: Vec<String> = self.seeds.iter().map(|v| v.to_string()).collect();
        write!(f, " seeds={}", seeds.join(","))?;
        if let Some(m) = self.marginal {
            write!(f, " marginal={} stderr={}", m.mean, m.stderr)?;
        }
        write!(f, " decision={}", self.decision)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllocatorOutput {
    pub allocation: Allocation,
    pub trace: Vec<TraceEvent>,
}

impl AllocatorOutput {
    fn new() -> Self {
        AllocatorOutput { allocation: Allocation::new(), trace: Vec::new() }
    }

    fn log(&mut self, event: TraceEvent) {
        debug!("{event}");
        self.trace.push(event);
    }

    pub fn trace_lines(&self) -> Vec<String> {
        self.trace.iter().map(|e| e.to_string()).collect()
    }
}

fn check_items(catalog: &ItemCatalog, base: &Allocation, budgets: &Budgets) -> Result<()> {
    let mut seen = 0u32;
    for &(i, _) in budgets {
        if i >= catalog.item_count() {
            return Err(Error::UnknownItem(format!("#{i}")));
        }
        if seen & 1 << i != 0 {
            return Err(Error::Invalid(format!("item `{}` has two budgets", catalog.item(i).name)));
        }
        seen |= 1 << i;
    }
    if base.items() & seen != 0 {
        return Err(Error::Invalid(format!(
            "items {{{}}} are already allocated by the base allocation",
            catalog.set_name(base.items() & seen)
        )));
    }
    Ok(())
}

/// Budgets sorted by decreasing `E[U+({i})]`, ties in catalog order.
pub fn sorted_by_truncated_utility(
    catalog: &ItemCatalog,
    budgets: &Budgets,
    mc: McSettings,
) -> Result<Vec<(ItemId, usize)>> {
    let eu = catalog.item_truncated_utilities(mc)?;
    let mut sorted = budgets.to_vec();
    sorted.sort_by(|a, b| eu[b.0].mean.total_cmp(&eu[a.0].mean).then(a.0.cmp(&b.0)));
    Ok(sorted)
}

fn sequential(
    graph: &Graph,
    catalog: &ItemCatalog,
    base: &Allocation,
    budgets: &Budgets,
    config: &AllocatorConfig,
    marginal_check: bool,
) -> Result<AllocatorOutput> {
    config.check()?;
    check_items(catalog, base, budgets)?;
    let sorted = sorted_by_truncated_utility(catalog, budgets, config.mc())?;
    let item_budgets: Vec<usize> = sorted.iter().map(|b| b.1).collect();
    let total: usize = item_budgets.iter().sum();
    let prima = prima_plus(graph, config.sampler, &base.nodes(), &item_budgets, total, config.seed)?;
    let seeds = prima.seeds;
    let mut out = AllocatorOutput::new();
    let mut cursor = 0;
    let mut skipped = Vec::new();
    for &(i, b) in &sorted {
        let block = &seeds[cursor..cursor + b];
        let candidate = Allocation::block(block, i);
        if !marginal_check {
            out.allocation = out.allocation.union(&candidate);
            cursor += b;
            out.log(TraceEvent { phase: "tentative", item: Some(i), seeds: block.to_vec(), marginal: None, decision: "keep" });
            continue;
        }
        let current = out.allocation.union(base);
        let m = estimate_marginal_welfare(graph, catalog, &candidate, &current, config.mc_samples, config.seed)?;
        let keep = m.mean > 2.0 * m.stderr;
        out.log(TraceEvent {
            phase: "tentative",
            item: Some(i),
            seeds: block.to_vec(),
            marginal: Some(m),
            decision: if keep { "keep" } else { "defer" },
        });
        if keep {
            out.allocation = out.allocation.union(&candidate);
            cursor += b;
        } else {
            skipped.push((i, b));
        }
    }
    for (i, b) in skipped {
        let block = &seeds[cursor..cursor + b];
        out.allocation = out.allocation.union(&Allocation::block(block, i));
        cursor += b;
        out.log(TraceEvent { phase: "append", item: Some(i), seeds: block.to_vec(), marginal: None, decision: "keep" });
    }
    Ok(out)
}

/// SeqGRD: consecutive PRIMA+ seed blocks, items by decreasing truncated
/// utility, an item kept in place only if its estimated marginal welfare
/// exceeds twice its standard error.
pub fn seqgrd(
    graph: &Graph,
    catalog: &ItemCatalog,
    base: &Allocation,
    budgets: &Budgets,
    config: &AllocatorConfig,
) -> Result<AllocatorOutput> {
    sequential(graph, catalog, base, budgets, config, true)
}

/// SeqGRD without the marginal check.
pub fn seqgrd_nm(
    graph: &Graph,
    catalog: &ItemCatalog,
    base: &Allocation,
    budgets: &Budgets,
    config: &AllocatorConfig,
) -> Result<AllocatorOutput> {
    sequential(graph, catalog, base, budgets, config, false)
}

/// MaxGRD: the single item whose top-`b_i` prefix has the largest marginal
/// welfare over `base`. Ties go to the item listed first.
pub fn maxgrd(
    graph: &Graph,
    catalog: &ItemCatalog,
    base: &Allocation,
    budgets: &Budgets,
    config: &AllocatorConfig,
) -> Result<AllocatorOutput> {
    config.check()?;
    check_items(catalog, base, budgets)?;
    let item_budgets: Vec<usize> = budgets.iter().map(|b| b.1).collect();
    let b_max = item_budgets.iter().copied().max().unwrap_or(0);
    let prima = prima_plus(graph, config.sampler, &base.nodes(), &item_budgets, b_max, config.seed)?;
    let mut out = AllocatorOutput::new();
    let mut best: Option<(f64, Allocation)> = None;
    for &(i, b) in budgets {
        if b == 0 {
            continue;
        }
        let prefix = &prima.seeds[..b];
        let candidate = Allocation::block(prefix, i);
        let m = estimate_marginal_welfare(graph, catalog, &candidate, base, config.mc_samples, config.seed)?;
        out.log(TraceEvent { phase: "candidate", item: Some(i), seeds: prefix.to_vec(), marginal: Some(m), decision: "evaluate" });
        if best.as_ref().is_none_or(|(v, _)| m.mean > *v) {
            best = Some((m.mean, candidate));
        }
    }
    if let Some((_, a)) = best {
        let item = a.pairs().next().map(|p| p.1);
        out.log(TraceEvent { phase: "select", item, seeds: a.nodes(), marginal: None, decision: "keep" });
        out.allocation = a;
    }
    Ok(out)
}

/// The better of SeqGRD and MaxGRD by welfare estimated on common worlds.
/// SeqGRD wins ties.
pub fn max_seq(
    graph: &Graph,
    catalog: &ItemCatalog,
    budgets: &Budgets,
    config: &AllocatorConfig,
) -> Result<AllocatorOutput> {
    let base = Allocation::new();
    let seq = seqgrd(graph, catalog, &base, budgets, config)?;
    let max = maxgrd(graph, catalog, &base, budgets, config)?;
    let ws = estimate_welfare(graph, catalog, &seq.allocation, config.mc_samples, config.seed)?.welfare;
    let wm = estimate_welfare(graph, catalog, &max.allocation, config.mc_samples, config.seed)?.welfare;
    let (mut winner, name) = if wm.mean > ws.mean { (max, "maxgrd") } else { (seq, "seqgrd") };
    let trace = vec![
        TraceEvent { phase: "compare-seqgrd", item: None, seeds: Vec::new(), marginal: Some(ws), decision: "evaluate" },
        TraceEvent { phase: "compare-maxgrd", item: None, seeds: Vec::new(), marginal: Some(wm), decision: "evaluate" },
        TraceEvent { phase: name, item: None, seeds: winner.allocation.nodes(), marginal: None, decision: "keep" },
    ];
    for e in &trace {
        debug!("{e}");
    }
    winner.trace.extend(trace);
    Ok(winner)
}

/// SupGRD: `b'` seeds of the superior item chosen on weighted RR sets.
///
/// Requires a superior item, a pure-competition catalog and a base
/// allocation without the superior item.
pub fn supgrd(
    graph: &Graph,
    catalog: &ItemCatalog,
    base: &Allocation,
    superior: ItemId,
    b_prime: usize,
    config: &AllocatorConfig,
) -> Result<AllocatorOutput> {
    config.check()?;
    match catalog.superior_item() {
        Some(i) if i == superior => {}
        Some(i) => {
            return Err(Error::Precondition(format!(
                "`{}` is not the superior item; `{}` is",
                catalog.item(superior).name,
                catalog.item(i).name
            )))
        }
        None => return Err(Error::Precondition("the catalog has no superior item".into())),
    }
    catalog
        .check_pure_competition()
        .map_err(|e| Error::Precondition(format!("catalog is not pure competition: {e}")))?;
    if base.items() & 1 << superior != 0 {
        return Err(Error::Precondition("the base allocation already holds the superior item".into()));
    }
    base.validate(graph, catalog)?;
    let mut out = AllocatorOutput::new();
    if b_prime == 0 {
        return Ok(out);
    }
    let utilities: Vec<f64> = catalog.item_truncated_utilities(config.mc())?.iter().map(|e| e.mean).collect();
    let ctx = WeightedContext::new(graph, base, superior, &utilities)?;
    let sampled = supgrd_sampling(graph, &ctx, b_prime, config.sampler, config.seed)?;
    let sel = node_selection_weighted(&sampled.collection, b_prime, &[])?;
    out.log(TraceEvent { phase: "supgrd", item: Some(superior), seeds: sel.seeds.clone(), marginal: None, decision: "keep" });
    out.allocation = Allocation::block(&sel.seeds, superior);
    Ok(out)
}

fn deal(seeds: &[NodeId], budgets: &Budgets, flip: bool) -> Result<Allocation> {
    let total: usize = budgets.iter().map(|b| b.1).sum();
    if seeds.len() < total {
        return Err(Error::Budget(format!("{} seeds for a total budget of {total}", seeds.len())));
    }
    let mut left: Vec<usize> = budgets.iter().map(|b| b.1).collect();
    let mut order: Vec<usize> = (0..budgets.len()).collect();
    let mut alloc = Allocation::new();
    let mut next = seeds.iter();
    while left.iter().any(|&l| l > 0) {
        for &slot in &order {
            if left[slot] > 0 {
                let v = *next.next().expect("enough seeds");
                alloc.insert(v, budgets[slot].0);
                left[slot] -= 1;
            }
        }
        if flip {
            order.reverse();
        }
    }
    Ok(alloc)
}

/// Deals `seeds` to items in a fixed cycle, skipping exhausted items.
pub fn round_robin(seeds: &[NodeId], budgets: &Budgets) -> Result<Allocation> {
    deal(seeds, budgets, false)
}

/// Like [`round_robin`] but the cycle reverses after every pass.
pub fn snake(seeds: &[NodeId], budgets: &Budgets) -> Result<Allocation> {
    deal(seeds, budgets, true)
}

/// Greedy over `(node, item)` pairs by estimated marginal welfare. Ties go to
/// the smaller node, then to the item listed first.
pub fn greedy_marginal(
    graph: &Graph,
    catalog: &ItemCatalog,
    budgets: &Budgets,
    config: &AllocatorConfig,
) -> Result<AllocatorOutput> {
    config.check()?;
    let base = Allocation::new();
    check_items(catalog, &base, budgets)?;
    let n = graph.node_count();
    let total: usize = budgets.iter().map(|b| b.1).sum();
    let work = n.saturating_mul(budgets.len()).saturating_mul(total);
    if work > config.gm_cap {
        return Err(Error::Limit(format!(
            "greedy marginal needs {work} pair evaluations (cap {}); use seqgrd instead",
            config.gm_cap
        )));
    }
    let mut left: Vec<usize> = budgets.iter().map(|b| b.1).collect();
    let mut out = AllocatorOutput::new();
    while left.iter().any(|&l| l > 0) {
        let mut best: Option<(NodeId, ItemId, Estimate)> = None;
        for v in 0..n as NodeId {
            for (slot, &(i, _)) in budgets.iter().enumerate() {
                if left[slot] == 0 || out.allocation.contains(v, i) {
                    continue;
                }
                let candidate = Allocation::from_pairs([(v, i)]);
                let m = estimate_marginal_welfare(graph, catalog, &candidate, &out.allocation, config.mc_samples, config.seed)?;
                if best.as_ref().is_none_or(|b| m.mean > b.2.mean) {
                    best = Some((v, i, m));
                }
            }
        }
        let Some((v, i, m)) = best else { break };
        out.allocation.insert(v, i);
        let slot = budgets.iter().position(|b| b.0 == i).expect("listed item");
        left[slot] -= 1;
        out.log(TraceEvent { phase: "gm", item: Some(i), seeds: vec![v], marginal: Some(m), decision: "keep" });
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
