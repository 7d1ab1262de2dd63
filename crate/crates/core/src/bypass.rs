// Copyright (c) 2026 The geospine Authors
// SPDX-License-Identifier: Apache-2.0

//! Bypassing low-fanout parents and the pass that applies the decision rule
//! over a whole spine.
//!
//! Bypassing parent `p` with children `c_1..c_k` replaces `p` by `k` new
//! geounits at the same level. New geounit `j` has the single child `c_j`
//! and share `gamma[p] + gamma[c_j]`; every child's share becomes zero.
//! The root-to-block sums of shares are unchanged.

use crate::allocation::Allocation;
use crate::error::{Error, Result};
use crate::spine::{GeounitId, NodeSpec, Origin, Spine};

/// Relative tolerance for deciding that children carry equal shares.
const EQUAL_GAMMA_TOLERANCE: f64 = 1e-12;

/// Bypasses `parent`, which must be neither the root nor a block and whose
/// children must carry equal shares.
pub fn bypass_parent(
    spine: &Spine,
    alloc: &Allocation,
    parent: GeounitId,
) -> Result<(Spine, Allocation)> {
    spine.geounit(parent)?;
    if parent.level == 0 || parent.level == spine.block_level() {
        return Err(Error::RootOrLeaf(parent));
    }
    let shares: Vec<f64> = spine.children(parent).map(|c| alloc.gamma(c)).collect();
    let first = shares[0];
    let scale = shares.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
    if shares
        .iter()
        .any(|g| (g - first).abs() > EQUAL_GAMMA_TOLERANCE * scale)
    {
        return Err(Error::UnequalChildGamma(parent));
    }
    Ok(apply_bypass(spine, alloc, parent))
}

/// The bypass operation without the equal-share precondition.
pub(crate) fn apply_bypass(
    spine: &Spine,
    alloc: &Allocation,
    parent: GeounitId,
) -> (Spine, Allocation) {
    let level = parent.level;
    let p = parent.index;
    let unit = spine.unit(parent);
    let children = unit.children();
    let c = children.len();
    let gamma_parent = alloc.gamma(parent);

    let mut draft = spine.to_draft();
    let mut gamma: Vec<Vec<f64>> = alloc.gamma_rows().to_vec();

    // level of the parent: splice in one node per child
    let old_row = std::mem::take(&mut draft[level]);
    let mut row = Vec::with_capacity(old_row.len() + c - 1);
    let mut grow = Vec::with_capacity(old_row.len() + c - 1);
    for (i, node) in old_row.into_iter().enumerate() {
        if i == p {
            for (j, child) in children.clone().enumerate() {
                row.push(NodeSpec {
                    label: format!("{}/{}", node.label, j + 1),
                    parent: node.parent,
                    key: 0,
                });
                grow.push(gamma_parent + gamma[level + 1][child]);
            }
        } else {
            row.push(node);
            grow.push(gamma[level][i]);
        }
    }
    for (i, node) in row.iter_mut().enumerate() {
        node.key = i;
    }
    draft[level] = row;
    gamma[level] = grow;

    for (i, node) in draft[level + 1].iter_mut().enumerate() {
        let q = node.parent.expect("non-root geounit has a parent");
        node.parent = Some(if q < p {
            q
        } else if q == p {
            p + (i - children.start)
        } else {
            q + c - 1
        });
    }
    for child in children {
        gamma[level + 1][child] = 0.0;
    }

    let (spine, origin) = Spine::from_draft(draft).expect("bypass keeps the spine valid");
    let mut out = alloc.clone();
    out.replace_gamma(reorder(gamma, &origin));
    (spine, out)
}

fn reorder(gamma: Vec<Vec<f64>>, origin: &Origin) -> Vec<Vec<f64>> {
    gamma
        .into_iter()
        .zip(origin)
        .map(|(row, order)| order.iter().map(|&i| row[i]).collect())
        .collect()
}

/// The decision rule. Under pure DP, bypass when the smallest child share is
/// at least `(c - 1) / 2` times the parent share; under zCDP only
/// single-child parents are bypassed.
pub fn bypass_rule(gamma_child_min: f64, gamma_parent: f64, c: usize, pure_dp: bool) -> bool {
    if pure_dp && gamma_child_min >= (c as f64 - 1.0) * gamma_parent / 2.0 {
        return true;
    }
    c == 1
}

pub fn should_bypass(spine: &Spine, alloc: &Allocation, parent: GeounitId, pure_dp: bool) -> bool {
    let c = spine.fanout(parent);
    if c == 0 {
        return false;
    }
    let child_min = spine
        .children(parent)
        .map(|ch| alloc.gamma(ch))
        .fold(f64::INFINITY, f64::min);
    bypass_rule(child_min, alloc.gamma(parent), c, pure_dp)
}

/// A bypass that leaves the strategy unchanged: the parent has no share, or
/// it has one child whose share is already zero.
fn is_trivial(spine: &Spine, alloc: &Allocation, parent: GeounitId) -> bool {
    if alloc.gamma(parent) == 0.0 {
        return true;
    }
    spine.fanout(parent) == 1 && spine.children(parent).all(|ch| alloc.gamma(ch) == 0.0)
}

/// One bottom-up pass of the decision rule over every non-root parent,
/// starting one level above the blocks.
pub fn pareto_pass(spine: &Spine, alloc: &Allocation, pure_dp: bool) -> (Spine, Allocation) {
    let mut spine = spine.clone();
    let mut alloc = alloc.clone();
    if spine.num_levels() < 3 {
        return (spine, alloc);
    }
    for level in (1..spine.block_level()).rev() {
        let mut index = 0;
        while index < spine.level_size(level) {
            let id = GeounitId::new(level, index);
            let c = spine.fanout(id);
            if !is_trivial(&spine, &alloc, id) && should_bypass(&spine, &alloc, id, pure_dp) {
                let (s, a) = apply_bypass(&spine, &alloc, id);
                spine = s;
                alloc = a;
                index += c;
            } else {
                index += 1;
            }
        }
    }
    (spine, alloc)
}

/// Best variance of a parent's total under a total-only workload, before and
/// after bypassing, in units of the per-measurement noise variance.
///
/// Before: inverse-variance mean of the parent's answer and the sum of its
/// `c` children, `2c / (c gp^2 + gc^2)`. After: `2c / (gp + gc)^2`.
pub fn total_query_variances(c: usize, gamma_parent: f64, gamma_child: f64) -> (f64, f64) {
    let c = c as f64;
    let before = 2.0 * c / (c * gamma_parent * gamma_parent + gamma_child * gamma_child);
    let after = 2.0 * c / (gamma_parent + gamma_child).powi(2);
    (before, after)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::BudgetKind;

    fn g(level: usize, index: usize) -> GeounitId {
        GeounitId::new(level, index)
    }

    /// root -> 2 groups -> blocks 2 + 1
    fn three_level() -> Spine {
        Spine::build(
            &[1, 2, 3],
            &[
                (g(1, 0), g(0, 0)),
                (g(1, 1), g(0, 0)),
                (g(2, 0), g(1, 0)),
                (g(2, 1), g(1, 0)),
                (g(2, 2), g(1, 1)),
            ],
        )
        .unwrap()
    }

    fn alloc(spine: &Spine, beta: Vec<f64>) -> Allocation {
        Allocation::uniform_alpha(spine, BudgetKind::Pure, 1.0, beta, vec![1.0]).unwrap()
    }

    #[test]
    fn four_steps() {
        let s = three_level();
        let a = alloc(&s, vec![0.5, 0.2, 0.3]);
        let (s2, a2) = bypass_parent(&s, &a, g(1, 0)).unwrap();
        assert_eq!(s2.level_sizes(), vec![1, 3, 3]);
        assert_eq!(s2.block_ids(), s.block_ids());
        for u in 0..2 {
            assert_eq!(s2.fanout(g(1, u)), 1);
            assert!((a2.gamma(g(1, u)) - 0.5).abs() < 1e-15);
            assert_eq!(a2.gamma(g(2, u)), 0.0);
        }
        assert_eq!(a2.gamma(g(1, 2)), 0.2);
        assert_eq!(a2.gamma(g(2, 2)), 0.3);
        for p in 0..3 {
            assert!((a2.path_sum(&s2, p) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn root_and_blocks_are_not_bypassed() {
        let s = three_level();
        let a = alloc(&s, vec![0.5, 0.2, 0.3]);
        assert!(matches!(
            bypass_parent(&s, &a, g(0, 0)),
            Err(Error::RootOrLeaf(_))
        ));
        assert!(matches!(
            bypass_parent(&s, &a, g(2, 0)),
            Err(Error::RootOrLeaf(_))
        ));
    }

    #[test]
    fn unequal_children_rejected() {
        let s = three_level();
        let mut a = alloc(&s, vec![0.5, 0.2, 0.3]);
        a.set_gamma(g(2, 1), 0.31);
        assert!(matches!(
            bypass_parent(&s, &a, g(1, 0)),
            Err(Error::UnequalChildGamma(_))
        ));
    }

    #[test]
    fn rule_boundaries() {
        assert!(bypass_rule(1.0, 1.0, 3, true));
        assert!(!bypass_rule(1.0, 1.0, 4, true));
        assert!(bypass_rule(0.1, 1.0, 1, false));
        assert!(!bypass_rule(1.0, 1.0, 2, false));
        assert!(bypass_rule(0.0, 1.0, 1, true));
    }

    #[test]
    fn zcdp_pass_bypasses_only_single_children() {
        let s = three_level();
        let a =
            Allocation::uniform_alpha(&s, BudgetKind::Zcdp, 1.0, vec![0.2, 0.3, 0.5], vec![1.0])
                .unwrap();
        let (s2, a2) = pareto_pass(&s, &a, false);
        // group 2 has one child
        assert_eq!(s2.level_sizes(), vec![1, 2, 3]);
        assert!((a2.gamma(g(1, 1)) - 0.8).abs() < 1e-15);
        assert_eq!(a2.gamma(g(2, 2)), 0.0);
        assert_eq!(a2.gamma(g(1, 0)), 0.3);
        let again = pareto_pass(&s2, &a2, false);
        assert_eq!(again, (s2, a2));
    }

    #[test]
    fn remark_scalars() {
        let (before, after) = total_query_variances(3, 0.25, 0.25);
        assert!((before - after).abs() < 1e-12);
        let (before, after) = total_query_variances(4, 0.25, 0.25);
        assert!(before < after);
    }
}
