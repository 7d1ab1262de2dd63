// Copyright (c) 2026 The geospine Authors
// SPDX-License-Identifier: Apache-2.0

//! First optimization stage: regroup blocks and tracts so that off-spine
//! entities sit closer to the spine.
//!
//! Level roles count up from the blocks: block groups are one level above
//! the blocks, tracts two, tract groups three and counties four.

use crate::error::{Error, Result};
use crate::osed::{sorted_descending, OseSet, OsedPair, OsedTable};
use crate::spine::{GeounitId, NodeSpec, Spine};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OptConfig {
    /// Slack added to `ceil(sqrt(n))` when bounding fanouts.
    pub fanout_cutoff: usize,
    pub max_outer_iterations: usize,
}

impl Default for OptConfig {
    fn default() -> Self {
        OptConfig {
            fanout_cutoff: 2,
            max_outer_iterations: 1000,
        }
    }
}

impl OptConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_outer_iterations == 0 {
            return Err(Error::Unsupported(
                "max_outer_iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Largest allowed group size for `n` items.
    pub fn group_limit(&self, n: usize) -> usize {
        ceil_sqrt(n) + self.fanout_cutoff
    }
}

pub fn ceil_sqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt().ceil() as usize;
    while r * r < n {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= n {
        r -= 1;
    }
    r
}

/// `x <= y` in lexicographic order, shorter vectors padded with zeros.
pub fn lex_leq(x: &[u32], y: &[u32]) -> bool {
    let len = x.len().max(y.len());
    for i in 0..len {
        let a = x.get(i).copied().unwrap_or(0);
        let b = y.get(i).copied().unwrap_or(0);
        if a != b {
            return a < b;
        }
    }
    true
}

fn block_group_level(spine: &Spine) -> Result<usize> {
    let levels = spine.num_levels();
    if levels < 3 {
        return Err(Error::LevelConvention {
            levels,
            required: 3,
        });
    }
    Ok(levels - 2)
}

fn tract_group_level(spine: &Spine) -> Result<usize> {
    let levels = spine.num_levels();
    if levels < 5 {
        return Err(Error::LevelConvention {
            levels,
            required: 5,
        });
    }
    Ok(levels - 4)
}

/// Splits `m` items into `ceil(m / limit)` runs whose sizes differ by at
/// most one.
fn balanced_chunks(m: usize, limit: usize) -> Vec<usize> {
    let parts = m.div_ceil(limit.max(1));
    (0..parts)
        .map(|i| m / parts + usize::from(i < m % parts))
        .collect()
}

/// Rebuilds the block-group level. Inside each tract, blocks are grouped by
/// the set of entities containing them, and each group is cut into block
/// groups of at most `ceil(sqrt(n)) + fanout_cutoff` blocks, `n` being the
/// tract's block count.
pub fn redefine_block_groups(spine: &Spine, oses: &OseSet, cfg: &OptConfig) -> Result<Spine> {
    cfg.validate()?;
    let bg_level = block_group_level(spine)?;
    let tract_level = bg_level - 1;
    let block_level = spine.block_level();
    let mut draft = spine.to_draft();
    let mut groups: Vec<NodeSpec> = Vec::new();
    let mut blocks: Vec<NodeSpec> = Vec::with_capacity(spine.num_blocks());

    for (t, tract) in spine.level(tract_level).iter().enumerate() {
        let positions = tract.blocks();
        let limit = cfg.group_limit(positions.len());
        // signature classes in order of first appearance
        let mut classes: Vec<(Vec<bool>, Vec<usize>)> = Vec::new();
        for pos in positions {
            let id = spine.block_id(pos);
            let sig = oses.signature(id);
            match classes.iter_mut().find(|(s, _)| *s == sig) {
                Some((_, members)) => members.push(pos),
                None => classes.push((sig, vec![pos])),
            }
        }
        let mut k = 0;
        for (_, members) in classes {
            let mut rest = members.as_slice();
            for size in balanced_chunks(members.len(), limit) {
                let (chunk, tail) = rest.split_at(size);
                rest = tail;
                k += 1;
                let group_index = groups.len();
                groups.push(NodeSpec {
                    label: format!("{}:{k}", tract.label()),
                    parent: Some(t),
                    key: group_index,
                });
                for &pos in chunk {
                    blocks.push(NodeSpec {
                        label: spine.level(block_level)[pos].label().to_string(),
                        parent: Some(group_index),
                        key: spine.block_id(pos),
                    });
                }
            }
        }
    }
    draft[bg_level] = groups;
    draft[block_level] = blocks;
    Spine::from_nodes(draft)
}

/// Replaces the tract-group level so that each tract group holds exactly one
/// tract, keeping each tract in its county.
pub fn initialize_tract_groups(spine: &Spine) -> Result<Spine> {
    let tg_level = tract_group_level(spine)?;
    let tract_level = tg_level + 1;
    let mut draft = spine.to_draft();
    let tract_groups = &draft[tg_level];
    let tracts = &draft[tract_level];
    let new_groups: Vec<NodeSpec> = tracts
        .iter()
        .enumerate()
        .map(|(i, tract)| NodeSpec {
            label: format!("tg[{}]", tract.label),
            parent: tract_groups[tract.parent.expect("tract has a parent")].parent,
            key: i,
        })
        .collect();
    for (i, tract) in draft[tract_level].iter_mut().enumerate() {
        tract.parent = Some(i);
    }
    draft[tg_level] = new_groups;
    Spine::from_nodes(draft)
}

/// OSED vector of `spine` if siblings `u` and `v` were combined, computed
/// along the root path only.
fn tentative_distances(spine: &Spine, table: &OsedTable, u: GeounitId, v: GeounitId) -> Vec<u32> {
    let merged_sums: Vec<OsedPair> = table
        .child_sums_at(u)
        .iter()
        .zip(table.child_sums_at(v))
        .map(|(a, b)| a.add(*b))
        .collect();
    let mut replaced: Vec<OsedPair> = table
        .pairs_at(u)
        .iter()
        .zip(table.pairs_at(v))
        .map(|(a, b)| a.add(*b))
        .collect();
    let mut new_pairs: Vec<OsedPair> = merged_sums
        .iter()
        .map(|&s| OsedPair::from_child_sums(s))
        .collect();
    let mut node = spine.parent(u).expect("combined geounits are not the root");
    loop {
        let updated: Vec<OsedPair> = table
            .child_sums_at(node)
            .iter()
            .zip(&replaced)
            .zip(&new_pairs)
            .map(|((s, old), new)| OsedPair::from_child_sums(s.sub(*old).add(*new)))
            .collect();
        match spine.parent(node) {
            None => return updated.iter().map(|p| p.entity).collect(),
            Some(up) => {
                replaced = table.pairs_at(node).to_vec();
                new_pairs = updated;
                node = up;
            }
        }
    }
}

/// Greedy combination of sibling tract groups. See
/// [`optimize_tract_groups_traced`].
pub fn optimize_tract_groups(spine: &Spine, oses: &OseSet, cfg: &OptConfig) -> Result<Spine> {
    optimize_tract_groups_traced(spine, oses, cfg).map(|(s, _)| s)
}

/// Greedy combination of sibling tract groups.
///
/// For each county, pairs of tract groups are scanned in ascending index
/// order. A pair is skipped when it would hold more than
/// `ceil(sqrt(n)) + fanout_cutoff` tracts, `n` being the county's tract
/// count. Otherwise the pair is combined if the sorted OSED vector does not
/// increase lexicographically, after which the county's pairs are scanned
/// again. Passes over all counties repeat until one makes no change.
///
/// Also returns the sorted OSED vector at the start and after every
/// accepted combination.
pub fn optimize_tract_groups_traced(
    spine: &Spine,
    oses: &OseSet,
    cfg: &OptConfig,
) -> Result<(Spine, Vec<Vec<u32>>)> {
    cfg.validate()?;
    let tg_level = tract_group_level(spine)?;
    let county_level = tg_level - 1;
    let mut spine = spine.clone();
    let mut table = OsedTable::compute(&spine, oses)?;
    let mut current = sorted_descending(&table.root_distances());
    let mut trace = vec![current.clone()];

    for _ in 0..cfg.max_outer_iterations {
        let mut changed = false;
        for county in 0..spine.level_size(county_level) {
            'rescan: loop {
                let groups = spine.level(county_level)[county].children();
                let tracts: usize = groups
                    .clone()
                    .map(|g| spine.level(tg_level)[g].fanout())
                    .sum();
                let limit = cfg.group_limit(tracts);
                for i in groups.clone() {
                    for j in i + 1..groups.end {
                        let u = GeounitId::new(tg_level, i);
                        let v = GeounitId::new(tg_level, j);
                        if spine.fanout(u) + spine.fanout(v) > limit {
                            continue;
                        }
                        let candidate =
                            sorted_descending(&tentative_distances(&spine, &table, u, v));
                        if lex_leq(&candidate, &current) {
                            spine = spine.combine_siblings(u, v)?;
                            table = OsedTable::compute(&spine, oses)?;
                            current = sorted_descending(&table.root_distances());
                            debug_assert_eq!(current, candidate);
                            trace.push(current.clone());
                            changed = true;
                            continue 'rescan;
                        }
                    }
                }
                break;
            }
        }
        if !changed {
            break;
        }
    }
    Ok((spine, trace))
}

/// Result of the first stage.
#[derive(Clone, Debug)]
pub struct StageOne {
    pub spine: Spine,
    pub osed_before: Vec<u32>,
    pub osed_after: Vec<u32>,
    /// Sorted OSED vectors of the accepted tract-group combinations.
    pub trace: Vec<Vec<u32>>,
}

/// Block-group redefinition followed, when the spine has a tract-group
/// level, by tract-group initialization and greedy combination. Spines too
/// shallow for a step skip it.
pub fn stage_one(spine: &Spine, oses: &OseSet, cfg: &OptConfig) -> Result<StageOne> {
    cfg.validate()?;
    let osed_before = crate::osed::osed_all(spine, oses)?;
    let mut out = spine.clone();
    let mut trace = Vec::new();
    if spine.num_levels() >= 3 {
        out = redefine_block_groups(&out, oses, cfg)?;
    }
    if spine.num_levels() >= 5 {
        out = initialize_tract_groups(&out)?;
        let (s, t) = optimize_tract_groups_traced(&out, oses, cfg)?;
        out = s;
        trace = t;
    }
    let osed_after = crate::osed::osed_all(&out, oses)?;
    Ok(StageOne {
        spine: out,
        osed_before,
        osed_after,
        trace,
    })
}
