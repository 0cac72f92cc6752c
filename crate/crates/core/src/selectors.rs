//! Sample-size schedules and the two stopping-rule samplers: PRIMA+ over
//! marginal RR sets and the SupGRD sampler over weighted RR sets.

use std::f64::consts::{E, LN_2, SQRT_2};

use log::debug;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::ris::{self, node_selection_count, node_selection_weighted, RRCollection, RrKind, RrSampler, WeightedContext};

/// Refuse schedules that would need more RR sets than this.
pub const MAX_RR_SETS: f64 = 2.0e8;

/// `ln C(n, k)` through log-gamma.
pub fn ln_choose(n: usize, k: usize) -> f64 {
    if k == 0 || k >= n {
        return 0.0;
    }
    let (n, k) = (n as f64, k as f64);
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

fn check_nk(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::Invalid(format!("schedule needs 1 <= k <= n, got k = {k}, n = {n}")));
    }
    Ok(())
}

/// `ln log2 n`, clamped at 0 for `n < 2`.
fn ln_log2(x: f64) -> f64 {
    x.log2().max(1.0).ln()
}

/// `λ'_k = (2 + 2ε'/3)(ln C(n,k) + ℓ' ln n + ln log2 n) n / ε'^2`.
pub fn lambda_prime(n: usize, k: usize, eps_prime: f64, ell_prime: f64) -> Result<f64> {
    check_nk(n, k)?;
    let nf = n as f64;
    Ok((2.0 + 2.0 / 3.0 * eps_prime) * (ln_choose(n, k) + ell_prime * nf.ln() + ln_log2(nf)) * nf
        / (eps_prime * eps_prime))
}

/// `λ*_k = 2n((1 - 1/e)α + β_k)^2 / ε^2`.
pub fn lambda_star(n: usize, k: usize, eps: f64, ell_prime: f64) -> Result<f64> {
    check_nk(n, k)?;
    let nf = n as f64;
    let c = 1.0 - 1.0 / E;
    let alpha = (ell_prime * nf.ln() + LN_2).sqrt();
    let beta = (c * (ln_choose(n, k) + ell_prime * nf.ln() + LN_2)).sqrt();
    Ok(2.0 * nf * (c * alpha + beta).powi(2) / (eps * eps))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerParams {
    pub epsilon: f64,
    pub ell: f64,
}

impl Default for SamplerParams {
    fn default() -> Self {
        SamplerParams { epsilon: 0.5, ell: 1.0 }
    }
}

impl SamplerParams {
    pub fn check(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Invalid(format!("epsilon {} must lie in (0, 1)", self.epsilon)));
        }
        if !(self.ell > 0.0 && self.ell.is_finite()) {
            return Err(Error::Invalid(format!("ell {} must be positive", self.ell)));
        }
        Ok(())
    }

    pub fn eps_prime(&self) -> f64 {
        SQRT_2 * self.epsilon
    }

    /// `ℓ + ln 2 / ln n`.
    pub fn ell_hat(&self, n: usize) -> f64 {
        self.ell + LN_2 / (n as f64).ln()
    }

    /// `log_n(n^ℓ̂ · |b|)`.
    pub fn ell_prime(&self, n: usize, budgets: usize) -> f64 {
        self.ell_hat(n) + (budgets as f64).ln() / (n as f64).ln()
    }
}

fn target(theta: f64) -> Result<usize> {
    if !theta.is_finite() || theta > MAX_RR_SETS {
        return Err(Error::Limit(format!("schedule asks for {theta:.3e} RR sets")));
    }
    Ok(theta.ceil().max(1.0) as usize)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimaOutcome {
    /// Ordered seeds; every prefix is a greedy solution for its length.
    pub seeds: Vec<NodeId>,
    /// Size of the final, freshly generated collection.
    pub theta: usize,
    /// `(k, LB)` for every budget whose coverage test succeeded.
    pub lower_bounds: Vec<(usize, f64)>,
    /// `(k, prefix)` each time a smaller budget reused a previous selection.
    pub reused_prefixes: Vec<(usize, Vec<NodeId>)>,
    /// Growth of `|R|` over the search, in order.
    pub theta_history: Vec<usize>,
    /// `key=value` lines describing every iteration.
    pub trace: Vec<String>,
}

/// PRIMA+: `b_max` seeds outside `fixed`, ordered so that each prefix of a
/// length in `budgets` approximately maximizes the marginal spread.
///
/// Budgets are visited largest first so that a smaller budget can reuse the
/// prefix of the selection made for a larger one.
pub fn prima_plus(
    graph: &Graph,
    params: SamplerParams,
    fixed: &[NodeId],
    budgets: &[usize],
    b_max: usize,
    seed: u64,
) -> Result<PrimaOutcome> {
    params.check()?;
    let n = graph.node_count();
    let mask = ris::node_mask(graph, fixed)?;
    let free = mask.iter().filter(|&&f| !f).count();
    if b_max > free {
        return Err(Error::Budget(format!("{b_max} seeds requested but only {free} nodes are free")));
    }
    let mut outcome = PrimaOutcome {
        seeds: Vec::new(),
        theta: 0,
        lower_bounds: Vec::new(),
        reused_prefixes: Vec::new(),
        theta_history: Vec::new(),
        trace: Vec::new(),
    };
    if b_max == 0 {
        return Ok(outcome);
    }
    if n < 2 {
        outcome.seeds = (0..n as NodeId).filter(|&v| !mask[v as usize]).take(b_max).collect();
        return Ok(outcome);
    }
    let mut bs: Vec<usize> = budgets.iter().copied().filter(|&b| b > 0 && b <= b_max).collect();
    bs.push(b_max);
    bs.sort_unstable_by(|a, b| b.cmp(a));
    bs.dedup();

    let nf = n as f64;
    let eps_prime = params.eps_prime();
    let ell_prime = params.ell_prime(n, bs.len());
    let sampler = RrSampler { graph, kind: RrKind::Marginal(mask.clone()), seed, phase: 0 };
    let mut coll = RRCollection::new(n);
    let mut needed: f64 = 0.0;
    let mut s = 0;
    let mut i: i32 = 1;
    let mut switch = false;
    let mut previous: Vec<NodeId> = Vec::new();
    let i_max = (nf.log2() - 1.0).floor() as i32;

    while i <= i_max && s < bs.len() {
        let k = bs[s];
        let x = nf / 2f64.powi(i);
        let theta_i = target(lambda_prime(n, k, eps_prime, ell_prime)? / x)?;
        coll.extend_to(theta_i, &sampler);
        outcome.theta_history.push(coll.len());
        let chosen: Vec<NodeId> = if switch {
            let prefix = previous[..k].to_vec();
            outcome.reused_prefixes.push((k, prefix.clone()));
            prefix
        } else {
            previous = node_selection_count(&coll, k, &mask)?.seeds;
            previous.clone()
        };
        let f = coll.coverage_fraction(&chosen);
        let line = format!(
            "phase=prima i={i} s={s} k={k} x={x} theta={} F={f} reuse={switch}",
            coll.len()
        );
        debug!("{line}");
        outcome.trace.push(line);
        if nf * f >= (1.0 + eps_prime) * x {
            let lb = nf * f / (1.0 + eps_prime);
            let theta_k = lambda_star(n, k, params.epsilon, ell_prime)? / lb;
            needed = needed.max(theta_k);
            coll.extend_to(target(theta_k)?, &sampler);
            outcome.theta_history.push(coll.len());
            outcome.lower_bounds.push((k, lb));
            let line = format!("phase=prima-lb k={k} LB={lb} theta={}", coll.len());
            debug!("{line}");
            outcome.trace.push(line);
            s += 1;
            switch = true;
        } else {
            i += 1;
            switch = false;
        }
    }
    if s < bs.len() {
        needed = needed.max(lambda_star(n, bs[s], params.epsilon, ell_prime)?);
    }
    let theta = target(needed)?;
    let fresh = RrSampler { phase: 1, ..sampler };
    let mut final_coll = RRCollection::new(n);
    final_coll.extend_to(theta, &fresh);
    let sel = node_selection_count(&final_coll, b_max, &mask)?;
    let line = format!("phase=prima-final theta={theta} F={}", sel.values.last().copied().unwrap_or(0.0));
    debug!("{line}");
    outcome.trace.push(line);
    outcome.seeds = sel.seeds;
    outcome.theta = theta;
    Ok(outcome)
}

#[derive(Debug, Clone)]
pub struct SupgrdOutcome {
    /// The freshly generated final collection.
    pub collection: RRCollection,
    pub lower_bound: f64,
    pub upper_bound: f64,
    /// Whether some iteration passed the statistical test.
    pub test_passed: bool,
    pub theta: usize,
    pub trace: Vec<String>,
}

/// Schedules of the weighted sampler: `(λ', λ)` for budget `b'`.
pub fn supgrd_lambdas(n: usize, b_prime: usize, params: SamplerParams, upper_bound: f64) -> Result<(f64, f64)> {
    check_nk(n, b_prime)?;
    let nf = n as f64;
    let eps_prime = params.eps_prime();
    let ell_hat = params.ell_hat(n);
    let ln_inv_delta = ell_hat * nf.ln() + upper_bound.log2().ceil().max(1.0).ln();
    let lp = (2.0 + 2.0 / 3.0 * eps_prime) * (ln_choose(n, b_prime) + ln_inv_delta) * nf / (eps_prime * eps_prime);
    let c = 1.0 - 1.0 / E;
    let alpha = (ell_hat * nf.ln() + LN_2).sqrt();
    let beta = (c * (ln_choose(n, b_prime) + ell_hat * nf.ln() + LN_2)).sqrt();
    let l = 2.0 * nf * (c * alpha + beta).powi(2) / (params.epsilon * params.epsilon);
    Ok((lp, l))
}

/// Builds the weighted RR collection used to place `b'` seeds of the
/// superior item. Weights are scaled by `w_max` inside the schedule so the
/// statistical test works on variables in `[0, 1]`.
pub fn supgrd_sampling(
    graph: &Graph,
    ctx: &WeightedContext,
    b_prime: usize,
    params: SamplerParams,
    seed: u64,
) -> Result<SupgrdOutcome> {
    params.check()?;
    let n = graph.node_count();
    if b_prime == 0 || b_prime > n {
        return Err(Error::Budget(format!("budget {b_prime} must lie in 1..={n}")));
    }
    let w_max = ctx.max_weight();
    if w_max.is_nan() || w_max <= 0.0 {
        return Err(Error::Precondition(
            "the superior item has zero expected truncated utility".into(),
        ));
    }
    let nf = n as f64;
    let eps_prime = params.eps_prime();
    let ub = nf * w_max;
    let mut trace = Vec::new();
    let sampler = RrSampler { graph, kind: RrKind::Weighted(ctx.clone()), seed, phase: 0 };
    let mut lb = ctx.min_weight();
    let mut passed = false;
    if n >= 2 {
        let (lp, _) = supgrd_lambdas(n, b_prime, params, ub)?;
        let mut coll = RRCollection::new(n);
        let iters = (ub.log2() - 1.0).floor() as i32;
        for i in 1..=iters {
            let x = ub / 2f64.powi(i);
            coll.extend_to(target(lp * w_max / x)?, &sampler);
            let sel = node_selection_weighted(&coll, b_prime, &[])?;
            let m = sel.values.last().copied().unwrap_or(0.0);
            let est = nf / coll.len() as f64 * m;
            let line = format!("phase=supgrd i={i} x={x} theta={} M={m} estimate={est}", coll.len());
            debug!("{line}");
            trace.push(line);
            if est >= (1.0 + eps_prime) * x {
                lb = est / (1.0 + eps_prime);
                passed = true;
                break;
            }
        }
    }
    let lambda = if n >= 2 { supgrd_lambdas(n, b_prime, params, ub)?.1 } else { 1.0 };
    let theta = target(lambda * w_max / lb)?;
    let fresh = RrSampler { phase: 1, ..sampler };
    let mut collection = RRCollection::new(n);
    collection.extend_to(theta, &fresh);
    let line = format!("phase=supgrd-final LB={lb} UB={ub} theta={theta}");
    debug!("{line}");
    trace.push(line);
    Ok(SupgrdOutcome {
        collection,
        lower_bound: lb,
        upper_bound: ub,
        test_passed: passed,
        theta,
        trace,
    })
}
