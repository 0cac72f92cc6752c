//! Algorithm dispatch and CSV records for experiment runs.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::allocation::Allocation;
use crate::allocators::{self, AllocatorConfig, AllocatorOutput};
use crate::diffusion::estimate_welfare;
use crate::error::{Error, Result};
use crate::fmt_f64;
use crate::graph::{Graph, NodeId};
use crate::oracle::{OracleLimits, WelfareOracle};
use crate::selectors::prima_plus;
use crate::stats::Estimate;
use crate::utility::{ItemCatalog, ItemId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    SeqGrd,
    SeqGrdNm,
    MaxGrd,
    MaxSeq,
    SupGrd,
    Gm,
    RoundRobin,
    Snake,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::SeqGrd,
        Algorithm::SeqGrdNm,
        Algorithm::MaxGrd,
        Algorithm::MaxSeq,
        Algorithm::SupGrd,
        Algorithm::Gm,
        Algorithm::RoundRobin,
        Algorithm::Snake,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::SeqGrd => "seqgrd",
            Algorithm::SeqGrdNm => "seqgrd-nm",
            Algorithm::MaxGrd => "maxgrd",
            Algorithm::MaxSeq => "max-seq",
            Algorithm::SupGrd => "supgrd",
            Algorithm::Gm => "gm",
            Algorithm::RoundRobin => "round-robin",
            Algorithm::Snake => "snake",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown algorithm `{s}`")))
    }
}

/// Everything an allocator needs besides its tuning knobs.
#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: Graph,
    pub catalog: ItemCatalog,
    pub budgets: Vec<(ItemId, usize)>,
    /// Fixed allocation `S^P`; may be empty.
    pub base: Allocation,
}

impl Instance {
    pub fn check(&self) -> Result<()> {
        self.base.validate(&self.graph, &self.catalog)
    }

    fn require_empty_base(&self, algo: Algorithm) -> Result<()> {
        if self.base.is_empty() {
            Ok(())
        } else {
            Err(Error::Precondition(format!("{algo} does not take a base allocation")))
        }
    }
}

/// Top `sum(b)` PRIMA+ seeds outside the base, used by the dealing baselines.
pub fn baseline_seeds(inst: &Instance, config: &AllocatorConfig) -> Result<Vec<NodeId>> {
    let budgets: Vec<usize> = inst.budgets.iter().map(|b| b.1).collect();
    let total = budgets.iter().sum();
    Ok(prima_plus(&inst.graph, config.sampler, &inst.base.nodes(), &budgets, total, config.seed)?.seeds)
}

/// Runs one algorithm. SupGRD takes its budget from the superior item's
/// entry and ignores the others.
pub fn allocate(algo: Algorithm, inst: &Instance, config: &AllocatorConfig) -> Result<AllocatorOutput> {
    inst.check()?;
    let (g, c, base, b) = (&inst.graph, &inst.catalog, &inst.base, &inst.budgets[..]);
    match algo {
        Algorithm::SeqGrd => allocators::seqgrd(g, c, base, b, config),
        Algorithm::SeqGrdNm => allocators::seqgrd_nm(g, c, base, b, config),
        Algorithm::MaxGrd => allocators::maxgrd(g, c, base, b, config),
        Algorithm::MaxSeq => {
            inst.require_empty_base(algo)?;
            allocators::max_seq(g, c, b, config)
        }
        Algorithm::SupGrd => {
            let sup = c
                .superior_item()
                .ok_or_else(|| Error::Precondition("the catalog has no superior item".into()))?;
            let b_prime = b.iter().find(|x| x.0 == sup).map(|x| x.1).ok_or_else(|| {
                Error::Budget(format!("no budget given for the superior item `{}`", c.item(sup).name))
            })?;
            allocators::supgrd(g, c, base, sup, b_prime, config)
        }
        Algorithm::Gm => {
            inst.require_empty_base(algo)?;
            allocators::greedy_marginal(g, c, b, config)
        }
        Algorithm::RoundRobin | Algorithm::Snake => {
            let seeds = baseline_seeds(inst, config)?;
            let allocation = if algo == Algorithm::Snake {
                allocators::snake(&seeds, b)?
            } else {
                allocators::round_robin(&seeds, b)?
            };
            Ok(AllocatorOutput { allocation, trace: Vec::new() })
        }
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub algorithm: String,
    /// Expected adopters of each item, in catalog order.
    pub adoption: Vec<f64>,
    pub welfare: Estimate,
    pub seconds: Option<f64>,
}

impl Record {
    pub fn csv_row(&self) -> String {
        let mut cols = vec![self.algorithm.clone()];
        cols.extend(self.adoption.iter().map(|&a| fmt_f64(a)));
        cols.push(fmt_f64(self.welfare.mean));
        cols.push(fmt_f64(self.welfare.stderr));
        if let Some(s) = self.seconds {
            cols.push(fmt_f64(s));
        }
        cols.join(",")
    }
}

pub fn csv_header(catalog: &ItemCatalog, timing: bool) -> String {
    let mut cols = vec!["algorithm".to_string()];
    cols.extend(catalog.items().iter().map(|it| format!("adopters_{}", it.name)));
    cols.push("welfare_mean".into());
    cols.push("welfare_stderr".into());
    if timing {
        cols.push("seconds".into());
    }
    cols.join(",")
}

pub fn write_csv(catalog: &ItemCatalog, records: &[Record], timing: bool) -> String {
    let mut out = csv_header(catalog, timing);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Monte Carlo record of `allocation ∪ base`.
pub fn estimate_record(
    name: &str,
    inst: &Instance,
    allocation: &Allocation,
    samples: usize,
    seed: u64,
) -> Result<Record> {
    let all = allocation.union(&inst.base);
    let est = estimate_welfare(&inst.graph, &inst.catalog, &all, samples, seed)?;
    Ok(Record {
        algorithm: name.to_string(),
        adoption: est.adoption,
        welfare: est.welfare,
        seconds: None,
    })
}

/// Exact record of `allocation ∪ base`.
pub fn exact_record(name: &str, inst: &Instance, allocation: &Allocation, limits: &OracleLimits) -> Result<Record> {
    let all = allocation.union(&inst.base);
    let out = WelfareOracle::new(&inst.graph, &inst.catalog, limits)?.outcome(&all)?;
    Ok(Record {
        algorithm: name.to_string(),
        adoption: out.adoption,
        welfare: Estimate::exact(out.welfare),
        seconds: None,
    })
}

/// Allocates with `algo`, then estimates welfare of the result together
/// with the base. Every algorithm is evaluated on the same worlds.
pub fn run(
    algo: Algorithm,
    inst: &Instance,
    config: &AllocatorConfig,
    timing: bool,
) -> Result<(AllocatorOutput, Record)> {
    let start = Instant::now();
    let out = allocate(algo, inst, config)?;
    let elapsed = start.elapsed().as_secs_f64();
    let mut record = estimate_record(algo.name(), inst, &out.allocation, config.mc_samples, config.seed)?;
    if timing {
        record.seconds = Some(elapsed);
    }
    Ok((out, record))
}
