// Copyright (c) 2026 The geospine Authors
// SPDX-License-Identifier: Apache-2.0

//! Allocation files (JSON).
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "budget_kind": "pure",
//!   "budget": 1.0,
//!   "beta": [0.5, 0.5],
//!   "alpha": {"all": [0.25, 0.25, 0.25, 0.25]},
//!   "gamma_overrides": [{"level": 2, "index": 1, "gamma": 0.0, "skip_measurement": true}]
//! }
//! ```
//!
//! `alpha` holds either one `"all"` entry or one entry per geolevel keyed
//! `"1"`, `"2"`, .... Geounits without an override carry their level's beta.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::allocation::{Allocation, BudgetKind};
use crate::error::{Error, Result};
use crate::io::{parse_error, FORMAT_VERSION};
use crate::spine::{GeounitId, Spine};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AllocationDoc {
    format_version: u32,
    budget_kind: BudgetKind,
    budget: f64,
    beta: Vec<f64>,
    alpha: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    gamma_overrides: Vec<GammaOverride>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GammaOverride {
    level: usize,
    index: usize,
    gamma: f64,
    #[serde(default)]
    skip_measurement: bool,
}

fn cross(e: Error) -> Error {
    match e {
        Error::AllocationInvalid(m) => Error::CrossRef(m),
        other => other,
    }
}

pub fn parse_allocation(text: &str, file: &str, spine: &Spine) -> Result<Allocation> {
    let doc: AllocationDoc = serde_json::from_str(text)
        .map_err(|e| parse_error(file, e.line(), e.column(), e.to_string()))?;
    if doc.format_version != FORMAT_VERSION {
        return Err(parse_error(
            file,
            1,
            1,
            format!("unsupported format_version {}", doc.format_version),
        ));
    }
    let levels = spine.num_levels();
    let alpha: Vec<Vec<f64>> = match doc.alpha.get("all") {
        Some(all) if doc.alpha.len() == 1 => vec![all.clone(); levels],
        Some(_) => {
            return Err(Error::CrossRef(
                "alpha mixes \"all\" with per-level entries".into(),
            ))
        }
        None => {
            if doc.alpha.len() != levels {
                return Err(Error::CrossRef(format!(
                    "alpha has {} levels, spine has {levels}",
                    doc.alpha.len()
                )));
            }
            (1..=levels)
                .map(|l| {
                    doc.alpha
                        .get(&l.to_string())
                        .cloned()
                        .ok_or_else(|| Error::CrossRef(format!("alpha is missing geolevel {l}")))
                })
                .collect::<Result<_>>()?
        }
    };
    let mut alloc =
        Allocation::new(spine, doc.budget_kind, doc.budget, doc.beta, alpha).map_err(cross)?;
    for o in &doc.gamma_overrides {
        if o.level == 0 || o.level > levels {
            return Err(Error::CrossRef(format!(
                "gamma override names geolevel {} of {levels}",
                o.level
            )));
        }
        let level = o.level - 1;
        let size = spine.level_size(level);
        if o.index == 0 || o.index > size {
            return Err(Error::CrossRef(format!(
                "gamma override names geounit ({},{}), geolevel has {size}",
                o.level, o.index
            )));
        }
        let position = if level == spine.block_level() {
            spine.block_position(o.index - 1)
        } else {
            o.index - 1
        };
        if o.skip_measurement != (o.gamma == 0.0) {
            return Err(Error::CrossRef(format!(
                "geounit ({},{}): skip_measurement must be set exactly when gamma is zero",
                o.level, o.index
            )));
        }
        alloc.set_gamma(GeounitId::new(level, position), o.gamma);
    }
    alloc.validate(spine).map_err(cross)?;
    Ok(alloc)
}

pub fn emit_allocation(alloc: &Allocation, spine: &Spine) -> String {
    let mut alpha = BTreeMap::new();
    let first = alloc.alpha(0);
    if alloc.alphas().iter().all(|a| a.as_slice() == first) {
        alpha.insert("all".to_string(), first.to_vec());
    } else {
        for (l, a) in alloc.alphas().iter().enumerate() {
            alpha.insert((l + 1).to_string(), a.clone());
        }
    }
    let mut gamma_overrides = Vec::new();
    for id in spine.geounit_ids() {
        let gamma = alloc.gamma(id);
        if gamma != alloc.beta()[id.level] {
            let index = if id.level == spine.block_level() {
                spine.block_id(id.index)
            } else {
                id.index
            };
            gamma_overrides.push(GammaOverride {
                level: id.level + 1,
                index: index + 1,
                gamma,
                skip_measurement: gamma == 0.0,
            });
        }
    }
    let doc = AllocationDoc {
        format_version: FORMAT_VERSION,
        budget_kind: alloc.kind(),
        budget: alloc.budget(),
        beta: alloc.beta().to_vec(),
        alpha,
        gamma_overrides,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("allocation serializes");
    s.push('\n');
    s
}
