//! Item catalogs: bundle valuations, additive prices and zero-mean noise.

mod config;

pub use config::{parse_probability_list, CatalogConfig};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::rng::{self, Domain};
use crate::stats::Estimate;

pub type ItemId = usize;
/// Bitmask over catalog items; bit `i` set means item `i` is in the set.
pub type ItemSet = u32;

/// Largest catalog accepted (valuations are stored for all `2^m` bundles).
pub const MAX_ITEMS: usize = 20;

const TOL: f64 = 1e-9;

/// Zero-mean noise attached to one item.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseSpec {
    Zero,
    Gaussian { sigma: f64 },
    /// Gaussian resampled until it falls inside `[-bound, bound]`.
    TruncatedGaussian { sigma: f64, bound: f64 },
    /// `+a` or `-a` with probability 1/2 each.
    TwoPoint { a: f64 },
}

impl NoiseSpec {
    fn check(&self) -> std::result::Result<(), String> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        match *self {
            NoiseSpec::Zero => Ok(()),
            NoiseSpec::Gaussian { sigma } if ok(sigma) => Ok(()),
            NoiseSpec::TruncatedGaussian { sigma, bound } if ok(sigma) && ok(bound) => {
                if bound == 0.0 && sigma > 0.0 {
                    Err("truncated-gaussian bound must be positive".into())
                } else {
                    Ok(())
                }
            }
            NoiseSpec::TwoPoint { a } if ok(a) => Ok(()),
            _ => Err(format!("noise parameters must be finite and non-negative: {self:?}")),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseSpec::Zero => 0.0,
            NoiseSpec::Gaussian { sigma } => sigma * rng.sample::<f64, _>(StandardNormal),
            NoiseSpec::TruncatedGaussian { sigma, bound } => {
                if sigma == 0.0 {
                    return 0.0;
                }
                loop {
                    let x = sigma * rng.sample::<f64, _>(StandardNormal);
                    if x.abs() <= bound {
                        return x;
                    }
                }
            }
            NoiseSpec::TwoPoint { a } => {
                if rng.random::<bool>() {
                    a
                } else {
                    -a
                }
            }
        }
    }

    /// `(min, max)` of the noise, or `None` when unbounded.
    pub fn bounds(&self) -> Option<(f64, f64)> {
        match *self {
            NoiseSpec::Zero => Some((0.0, 0.0)),
            NoiseSpec::Gaussian { sigma: 0.0 } => Some((0.0, 0.0)),
            NoiseSpec::Gaussian { .. } => None,
            NoiseSpec::TruncatedGaussian { sigma: 0.0, .. } => Some((0.0, 0.0)),
            NoiseSpec::TruncatedGaussian { bound, .. } => Some((-bound, bound)),
            NoiseSpec::TwoPoint { a } => Some((-a, a)),
        }
    }

    /// `(value, probability)` pairs for finitely supported noise.
    pub fn support(&self) -> Option<Vec<(f64, f64)>> {
        match *self {
            NoiseSpec::TwoPoint { a } if a > 0.0 => Some(vec![(-a, 0.5), (a, 0.5)]),
            _ => match self.bounds() {
                Some((0.0, 0.0)) => Some(vec![(0.0, 1.0)]),
                _ => None,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub name: String,
    pub price: f64,
    pub noise: NoiseSpec,
}

impl Item {
    pub fn new(name: impl Into<String>, price: f64) -> Self {
        Item {
            name: name.into(),
            price,
            noise: NoiseSpec::Zero,
        }
    }

    pub fn with_noise(mut self, noise: NoiseSpec) -> Self {
        self.noise = noise;
        self
    }
}

/// How bundles missing from the valuation table are filled in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Completion {
    /// `V(I)` is the largest listed value over subsets of `I`.
    #[default]
    Max,
    /// Every non-empty bundle must be listed.
    Strict,
}

/// One sampled noise value per item, fixed for a whole diffusion.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseWorld(pub Vec<f64>);

impl NoiseWorld {
    pub fn zero(m: usize) -> Self {
        NoiseWorld(vec![0.0; m])
    }
}

/// Monte Carlo settings for expectations that have no closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McSettings {
    pub samples: usize,
    pub seed: u64,
}

impl Default for McSettings {
    fn default() -> Self {
        McSettings {
            samples: 100_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItemCatalog {
    items: Vec<Item>,
    values: Vec<f64>,
    listed: Vec<(ItemSet, f64)>,
}

/// First failed catalog property, if any.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptyNotZero(f64),
    NotMonotone { subset: ItemSet, superset: ItemSet },
    /// `V(I + x) - V(I) < V(J + x) - V(J)` with `J = I + y`.
    NotSubmodular { smaller: ItemSet, larger: ItemSet, item: ItemId },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub violation: Option<Violation>,
    pub message: String,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

impl ItemCatalog {
    pub fn new(items: Vec<Item>, listed: Vec<(ItemSet, f64)>, completion: Completion) -> Result<Self> {
        let m = items.len();
        if m > MAX_ITEMS {
            return Err(Error::Limit(format!("{m} items exceeds the maximum of {MAX_ITEMS}")));
        }
        for (i, item) in items.iter().enumerate() {
            if item.name.is_empty() || item.name.contains(',') || item.name.trim() != item.name {
                return Err(Error::Config(format!("invalid item id `{}`", item.name)));
            }
            if items[..i].iter().any(|o| o.name == item.name) {
                return Err(Error::Config(format!("duplicate item id `{}`", item.name)));
            }
            if !item.price.is_finite() {
                return Err(Error::Config(format!("price of `{}` is not finite", item.name)));
            }
            item.noise
                .check()
                .map_err(|e| Error::Config(format!("item `{}`: {e}", item.name)))?;
        }
        let full = 1usize << m;
        let mut table: Vec<Option<f64>> = vec![None; full];
        for &(set, v) in &listed {
            if set as usize >= full {
                return Err(Error::UnknownItem(format!("bundle mask {set:#b}")));
            }
            if !v.is_finite() {
                return Err(Error::Config("valuation is not finite".into()));
            }
            if set == 0 {
                if v != 0.0 {
                    return Err(Error::Config("the empty bundle must have value 0".into()));
                }
                continue;
            }
            if table[set as usize].replace(v).is_some() {
                return Err(Error::Config(format!("bundle {set:#b} listed twice")));
            }
        }
        for (i, item) in items.iter().enumerate() {
            if table[1 << i].is_none() {
                return Err(Error::Config(format!("no valuation for item `{}`", item.name)));
            }
        }
        let mut values = vec![0.0; full];
        for set in 1..full {
            values[set] = match (table[set], completion) {
                (Some(v), _) => v,
                (None, Completion::Strict) => {
                    return Err(Error::Config(format!(
                        "strict valuation table is missing a bundle ({set:#b})"
                    )))
                }
                (None, Completion::Max) => {
                    let mut best = f64::NEG_INFINITY;
                    let mut rest = set;
                    while rest != 0 {
                        let bit = rest & rest.wrapping_neg();
                        best = best.max(values[set & !bit]);
                        rest &= rest - 1;
                    }
                    best
                }
            };
        }
        let mut listed: Vec<(ItemSet, f64)> = listed.into_iter().filter(|&(s, _)| s != 0).collect();
        listed.sort_by_key(|&(s, _)| s);
        Ok(ItemCatalog { items, values, listed })
    }

    pub fn item_count(&self) -> usize {
        self.items.len()
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn item(&self, i: ItemId) -> &Item {
        &self.items[i]
    }

    pub fn full_set(&self) -> ItemSet {
        ((1u64 << self.items.len()) - 1) as ItemSet
    }

    /// Bundles explicitly present in the valuation table.
    pub fn listed(&self) -> &[(ItemSet, f64)] {
        &self.listed
    }

    pub fn index_of(&self, name: &str) -> Result<ItemId> {
        self.items
            .iter()
            .position(|it| it.name == name)
            .ok_or_else(|| Error::UnknownItem(name.to_string()))
    }

    /// Parses a comma-joined list of item ids.
    pub fn set_from_names(&self, joined: &str) -> Result<ItemSet> {
        let mut set = 0;
        for name in joined.split(',').map(str::trim) {
            if name.is_empty() {
                continue;
            }
            let bit = 1 << self.index_of(name)?;
            if set & bit != 0 {
                return Err(Error::Config(format!("item `{name}` repeated in `{joined}`")));
            }
            set |= bit;
        }
        Ok(set)
    }

    pub fn set_name(&self, set: ItemSet) -> String {
        members(set)
            .map(|i| self.items[i].name.as_str())
            .collect::<Vec<_>>()
            .join(",")
    }

    fn check_set(&self, set: ItemSet) -> Result<()> {
        if set & !self.full_set() != 0 {
            return Err(Error::UnknownItem(format!("bundle mask {set:#b}")));
        }
        Ok(())
    }

    pub fn value(&self, set: ItemSet) -> f64 {
        self.values[set as usize]
    }

    pub fn price(&self, set: ItemSet) -> f64 {
        members(set).map(|i| self.items[i].price).sum()
    }

    /// `V(I) - P(I)`: utility with all noise at zero.
    pub fn deterministic_utility(&self, set: ItemSet) -> f64 {
        self.value(set) - self.price(set)
    }

    /// `U(I) = V(I) - P(I) + N(I)`.
    pub fn utility(&self, set: ItemSet, noise: &NoiseWorld) -> Result<f64> {
        self.check_set(set)?;
        if noise.0.len() != self.items.len() {
            return Err(Error::Invalid("noise world does not match the catalog".into()));
        }
        let n: f64 = members(set).map(|i| noise.0[i]).sum();
        Ok(self.value(set) - self.price(set) + n)
    }

    /// Utility of every bundle in one noise world, indexed by mask.
    pub fn utility_table(&self, noise: &NoiseWorld) -> Vec<f64> {
        let full = self.values.len();
        let mut additive = vec![0.0; full];
        for set in 1..full {
            let low = set.trailing_zeros() as usize;
            additive[set] = additive[set & (set - 1)] + noise.0[low] - self.items[low].price;
        }
        (0..full).map(|s| self.values[s] + additive[s]).collect()
    }

    pub fn sample_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> NoiseWorld {
        NoiseWorld(self.items.iter().map(|it| it.noise.sample(rng)).collect())
    }

    /// Every joint noise outcome with its probability, or `None` if some
    /// item's noise is not finitely supported.
    pub fn noise_support(&self) -> Option<Vec<(NoiseWorld, f64)>> {
        self.noise_support_of(self.full_set())
    }

    fn noise_support_of(&self, set: ItemSet) -> Option<Vec<(NoiseWorld, f64)>> {
        let mut out = vec![(NoiseWorld::zero(self.items.len()), 1.0)];
        for i in members(set) {
            let support = self.items[i].noise.support()?;
            let mut next = Vec::with_capacity(out.len() * support.len());
            for (world, p) in &out {
                for &(v, q) in &support {
                    let mut w = world.clone();
                    w.0[i] = v;
                    next.push((w, p * q));
                }
            }
            out = next;
        }
        Some(out)
    }

    /// `E[max(0, U(I))]`: exact for finitely supported noise, Monte Carlo
    /// otherwise.
    pub fn expected_truncated_utility(&self, set: ItemSet, mc: McSettings) -> Result<Estimate> {
        self.check_set(set)?;
        let base = self.deterministic_utility(set);
        if let Some(worlds) = self.noise_support_of(set) {
            let mean = worlds
                .iter()
                .map(|(w, p)| p * (base + members(set).map(|i| w.0[i]).sum::<f64>()).max(0.0))
                .sum();
            return Ok(Estimate::exact(mean));
        }
        if mc.samples == 0 {
            return Err(Error::Invalid("Monte Carlo needs at least one sample".into()));
        }
        let mut rng = rng::stream(mc.seed, Domain::TruncatedUtility, set as u64, 0);
        let xs: Vec<f64> = (0..mc.samples)
            .map(|_| {
                let n: f64 = members(set).map(|i| self.items[i].noise.sample(&mut rng)).sum();
                (base + n).max(0.0)
            })
            .collect();
        Ok(Estimate::from_samples(&xs))
    }

    /// `E[U+({i})]` for every item in catalog order.
    pub fn item_truncated_utilities(&self, mc: McSettings) -> Result<Vec<Estimate>> {
        (0..self.items.len())
            .map(|i| self.expected_truncated_utility(1 << i, mc))
            .collect()
    }

    /// Smallest expected truncated utility of a single item.
    pub fn u_min(&self, mc: McSettings) -> Result<Estimate> {
        self.item_truncated_utilities(mc)?
            .into_iter()
            .min_by(|a, b| a.mean.total_cmp(&b.mean))
            .ok_or_else(|| Error::Invalid("empty catalog".into()))
    }

    /// Expected best truncated utility over all bundles.
    pub fn u_max(&self, mc: McSettings) -> Result<Estimate> {
        if self.items.len() > MAX_ITEMS {
            return Err(Error::Limit("too many items for bundle enumeration".into()));
        }
        let best = |noise: &NoiseWorld| {
            self.utility_table(noise)
                .into_iter()
                .fold(0.0f64, |acc, u| acc.max(u))
        };
        if let Some(worlds) = self.noise_support() {
            if worlds.len() <= 1 << 16 {
                return Ok(Estimate::exact(worlds.iter().map(|(w, p)| p * best(w)).sum()));
            }
        }
        if mc.samples == 0 {
            return Err(Error::Invalid("Monte Carlo needs at least one sample".into()));
        }
        let mut rng = rng::stream(mc.seed, Domain::TruncatedUtility, u64::MAX, 0);
        let xs: Vec<f64> = (0..mc.samples).map(|_| best(&self.sample_noise(&mut rng))).collect();
        Ok(Estimate::from_samples(&xs))
    }

    /// The item whose lowest possible utility beats every other item's
    /// highest possible utility. Needs bounded noise on every item.
    pub fn superior_item(&self) -> Option<ItemId> {
        let ranges: Vec<(f64, f64)> = self
            .items
            .iter()
            .enumerate()
            .map(|(i, it)| {
                let (lo, hi) = it.noise.bounds()?;
                let u = self.deterministic_utility(1 << i);
                Some((u + lo, u + hi))
            })
            .collect::<Option<_>>()?;
        (0..ranges.len()).find(|&i| {
            ranges
                .iter()
                .enumerate()
                .all(|(j, r)| j == i || ranges[i].0 > r.1)
        })
    }

    /// Checks that a node holding any non-empty bundle strictly loses utility
    /// by adding another item, whatever the noise. Under this condition every
    /// node adopts at most one item.
    pub fn check_pure_competition(&self) -> std::result::Result<(), String> {
        let m = self.items.len();
        let mut hi = Vec::with_capacity(m);
        for it in &self.items {
            match it.noise.bounds() {
                Some((_, h)) => hi.push(h),
                None => return Err(format!("item `{}` has unbounded noise", it.name)),
            }
        }
        for set in 1..self.values.len() as ItemSet {
            for j in 0..m {
                if set & (1 << j) != 0 {
                    continue;
                }
                let gain = self.value(set | 1 << j) - self.value(set) - self.items[j].price + hi[j];
                if gain >= 0.0 {
                    return Err(format!(
                        "adding `{}` to {{{}}} can gain utility {gain}",
                        self.items[j].name,
                        self.set_name(set)
                    ));
                }
            }
        }
        Ok(())
    }

    /// Exhaustive check of `V(empty) = 0`, monotonicity and submodularity.
    ///
    /// Both properties are checked on single-item steps, which is equivalent
    /// to checking every `(I, J, x)` triple.
    pub fn validate(&self) -> ValidationReport {
        let violation = self.find_violation();
        let message = match &violation {
            None => "ok".to_string(),
            Some(Violation::EmptyNotZero(v)) => format!("V(empty) = {v}, expected 0"),
            Some(Violation::NotMonotone { subset, superset }) => format!(
                "not monotone: V({{{}}}) = {} > V({{{}}}) = {}",
                self.set_name(*subset),
                self.value(*subset),
                self.set_name(*superset),
                self.value(*superset)
            ),
            Some(Violation::NotSubmodular { smaller, larger, item }) => format!(
                "not submodular: adding `{}` gains more on {{{}}} than on {{{}}}",
                self.items[*item].name,
                self.set_name(*larger),
                self.set_name(*smaller)
            ),
        };
        ValidationReport { violation, message }
    }

    fn find_violation(&self) -> Option<Violation> {
        if self.values[0] != 0.0 {
            return Some(Violation::EmptyNotZero(self.values[0]));
        }
        let m = self.items.len();
        let scale = self.values.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let tol = TOL * scale;
        for set in 0..self.values.len() as ItemSet {
            for x in 0..m {
                let bx = 1 << x;
                if set & bx != 0 {
                    continue;
                }
                if self.value(set) > self.value(set | bx) + tol {
                    return Some(Violation::NotMonotone {
                        subset: set,
                        superset: set | bx,
                    });
                }
            }
        }
        for set in 0..self.values.len() as ItemSet {
            for x in 0..m {
                let bx = 1 << x;
                if set & bx != 0 {
                    continue;
                }
                let gain = self.value(set | bx) - self.value(set);
                for y in 0..m {
                    let by = 1 << y;
                    if y == x || set & by != 0 {
                        continue;
                    }
                    let larger = set | by;
                    let gain_larger = self.value(larger | bx) - self.value(larger);
                    if gain_larger > gain + tol {
                        return Some(Violation::NotSubmodular {
                            smaller: set,
                            larger,
                            item: x,
                        });
                    }
                }
            }
        }
        None
    }
}

/// Item ids contained in `set`, ascending.
pub fn members(set: ItemSet) -> impl Iterator<Item = ItemId> {
    let mut rest = set;
    std::iter::from_fn(move || {
        if rest == 0 {
            return None;
        }
        let i = rest.trailing_zeros() as ItemId;
        rest &= rest - 1;
        Some(i)
    })
}

/// `v_i = ln(scale * p_i)`.
pub fn utilities_from_probabilities(probs: &[f64], scale: f64) -> Result<Vec<f64>> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::Invalid(format!("scale {scale} must be positive")));
    }
    probs
        .iter()
        .map(|&p| {
            if p.is_nan() || p <= 0.0 {
                Err(Error::Invalid(format!("probability {p} must be positive")))
            } else {
                Ok((scale * p).ln())
            }
        })
        .collect()
}

#[cfg(test)]
mod tests;
