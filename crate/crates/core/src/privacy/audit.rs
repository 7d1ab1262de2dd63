// Copyright (c) 2026 The geospine Authors
// SPDX-License-Identifier: Apache-2.0

//! Worst-case privacy loss of the whole set of measurements.
//!
//! Changing one record changes one cell of one block by one. Every measured
//! geounit containing that block answers each of its query groups, and each
//! group touches the cell in exactly one row. The loss from geounit `(l,u)`
//! is therefore `budget * gamma[l,u] * sum_i alpha[i,l]`, and the total is
//! the largest such sum along a root-to-block path.

use crate::allocation::{Allocation, BudgetKind};
use crate::error::{Error, Result};
use crate::spine::Spine;
use crate::workload::WorkloadPlan;

/// Slack allowed between achieved and target budget.
pub const AUDIT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct PrivacyAudit {
    pub budget_kind: BudgetKind,
    pub budget: f64,
    /// Achieved epsilon (pure DP) or rho (zCDP).
    pub achieved: f64,
    /// Id of a block whose path attains the maximum.
    pub worst_path_block: usize,
    /// Contribution of each geolevel along the worst path.
    pub per_level: Vec<f64>,
}

impl PrivacyAudit {
    pub fn passes(&self) -> bool {
        self.achieved <= self.budget + AUDIT_TOLERANCE
    }
}

/// Audits `alloc` for whichever budget kind it carries.
pub fn audit(spine: &Spine, alloc: &Allocation, plan: &WorkloadPlan) -> Result<PrivacyAudit> {
    alloc.validate(spine)?;
    plan.check_levels(spine.num_levels())?;
    let levels = spine.num_levels();
    let weights: Vec<Vec<f64>> = (0..levels)
        .map(|l| {
            alloc.check_query_groups(l, plan.for_level(l).num_groups())?;
            Ok(plan.for_level(l).weighted_column_sums(alloc.alpha(l)))
        })
        .collect::<Result<_>>()?;
    let cells = plan.num_cells();

    let mut best = f64::NEG_INFINITY;
    let mut best_pos = 0;
    let mut best_cell = 0;
    let mut path = vec![0.0; levels];
    for pos in 0..spine.num_blocks() {
        for (l, g) in path.iter_mut().enumerate() {
            *g = alloc.gamma_level(l)[spine.ancestor_index(l, pos)];
        }
        for c in 0..cells {
            let total: f64 = path.iter().zip(&weights).map(|(g, w)| g * w[c]).sum();
            if total > best {
                best = total;
                best_pos = pos;
                best_cell = c;
            }
        }
    }
    let budget = alloc.budget();
    let per_level = (0..levels)
        .map(|l| {
            budget * alloc.gamma_level(l)[spine.ancestor_index(l, best_pos)] * weights[l][best_cell]
        })
        .collect();
    Ok(PrivacyAudit {
        budget_kind: alloc.kind(),
        budget,
        achieved: budget * best,
        worst_path_block: spine.block_id(best_pos),
        per_level,
    })
}

pub fn audit_pure(spine: &Spine, alloc: &Allocation, plan: &WorkloadPlan) -> Result<PrivacyAudit> {
    expect_kind(alloc, BudgetKind::Pure)?;
    audit(spine, alloc, plan)
}

/// Sensitivity enters squared, but differences of neighboring histograms
/// are 0/1 so the column sums are the same as under pure DP.
pub fn audit_zcdp(spine: &Spine, alloc: &Allocation, plan: &WorkloadPlan) -> Result<PrivacyAudit> {
    expect_kind(alloc, BudgetKind::Zcdp)?;
    audit(spine, alloc, plan)
}

fn expect_kind(alloc: &Allocation, kind: BudgetKind) -> Result<()> {
    if alloc.kind() != kind {
        return Err(Error::Unsupported(format!(
            "allocation is {:?}, audit expects {kind:?}",
            alloc.kind()
        )));
    }
    Ok(())
}
