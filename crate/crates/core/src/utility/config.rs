//! TOML catalog configs and probability lists.
//!
//! ```toml
//! completion = "max"          # or "strict"
//!
//! [[items]]
//! id = "i1"
//! price = 1.0
//! noise = { kind = "two-point", a = 0.5 }
//!
//! [valuation]
//! "i1" = 5.0
//! "i1,i2" = 7.0
//!
//! [budgets]
//! i1 = 2
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;

use serde::Deserialize;

use super::{Completion, Item, ItemCatalog, ItemId, NoiseSpec};
use crate::error::{Error, Result};
use crate::fmt_f64;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    completion: Option<String>,
    items: Vec<RawItem>,
    valuation: BTreeMap<String, f64>,
    #[serde(default)]
    budgets: BTreeMap<String, i64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawItem {
    id: String,
    price: f64,
    #[serde(default = "zero_noise")]
    noise: NoiseSpec,
}

fn zero_noise() -> NoiseSpec {
    NoiseSpec::Zero
}

/// A catalog plus the per-item budgets declared alongside it.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogConfig {
    pub catalog: ItemCatalog,
    pub completion: Completion,
    /// `(item, budget)` in catalog order.
    pub budgets: Vec<(ItemId, usize)>,
}

impl CatalogConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let completion = match raw.completion.as_deref() {
            None | Some("max") => Completion::Max,
            Some("strict") => Completion::Strict,
            Some(other) => {
                return Err(Error::Config(format!("unknown completion mode `{other}`")))
            }
        };
        if raw.items.is_empty() {
            return Err(Error::Config("catalog declares no items".into()));
        }
        let items: Vec<Item> = raw
            .items
            .into_iter()
            .map(|r| Item {
                name: r.id,
                price: r.price,
                noise: r.noise,
            })
            .collect();
        let names: Vec<String> = items.iter().map(|it| it.name.clone()).collect();
        let lookup = |name: &str| -> Result<ItemId> {
            names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::UnknownItem(name.to_string()))
        };
        if names.len() > super::MAX_ITEMS {
            return Err(Error::Limit(format!("{} items exceeds {}", names.len(), super::MAX_ITEMS)));
        }
        let mut listed = Vec::with_capacity(raw.valuation.len());
        for (key, value) in &raw.valuation {
            let mut set = 0;
            for name in key.split(',').map(str::trim) {
                let bit = 1 << lookup(name)?;
                if set & bit != 0 {
                    return Err(Error::Config(format!("item `{name}` repeated in `{key}`")));
                }
                set |= bit;
            }
            listed.push((set, *value));
        }
        let catalog = ItemCatalog::new(items, listed, completion)?;
        let mut budgets = Vec::with_capacity(raw.budgets.len());
        for (name, b) in &raw.budgets {
            if *b < 0 {
                return Err(Error::Config(format!("budget of `{name}` is negative")));
            }
            budgets.push((lookup(name)?, *b as usize));
        }
        budgets.sort_unstable();
        Ok(CatalogConfig {
            catalog,
            completion,
            budgets,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Serializes back to the TOML config format with exact floats.
    pub fn to_toml(&self) -> String {
        let mut out = String::new();
        if self.completion == Completion::Strict {
            out.push_str("completion = \"strict\"\n\n");
        }
        for it in self.catalog.items() {
            let noise = match it.noise {
                NoiseSpec::Zero => "{ kind = \"zero\" }".to_string(),
                NoiseSpec::Gaussian { sigma } => {
                    format!("{{ kind = \"gaussian\", sigma = {} }}", fmt_f64(sigma))
                }
                NoiseSpec::TruncatedGaussian { sigma, bound } => format!(
                    "{{ kind = \"truncated-gaussian\", sigma = {}, bound = {} }}",
                    fmt_f64(sigma),
                    fmt_f64(bound)
                ),
                NoiseSpec::TwoPoint { a } => format!("{{ kind = \"two-point\", a = {} }}", fmt_f64(a)),
            };
            let _ = writeln!(
                out,
                "[[items]]\nid = {}\nprice = {}\nnoise = {noise}\n",
                toml_string(&it.name),
                fmt_f64(it.price)
            );
        }
        out.push_str("[valuation]\n");
        for &(set, v) in self.catalog.listed() {
            let _ = writeln!(out, "{} = {}", toml_string(&self.catalog.set_name(set)), fmt_f64(v));
        }
        if !self.budgets.is_empty() {
            out.push_str("\n[budgets]\n");
            for &(i, b) in &self.budgets {
                let _ = writeln!(out, "{} = {b}", toml_string(&self.catalog.item(i).name));
            }
        }
        out
    }
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

/// Parses `name probability` lines (`#` comments allowed).
pub fn parse_probability_list<R: BufRead>(reader: R) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let [name, p] = fields[..] else {
            return Err(Error::parse(lineno, "expected `name probability`"));
        };
        let p: f64 = p
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad probability `{p}`")))?;
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Invalid(format!("line {lineno}: probability {p} not in (0, 1]")));
        }
        out.push((name.to_string(), p));
    }
    Ok(out)
}
