// Copyright (c) 2026 The geospine Authors
// SPDX-License-Identifier: Apache-2.0

//! Hierarchical spines: a rooted tree of geounits over a fixed number of
//! geolevels whose leaves are the blocks.
//!
//! Geounits are addressed positionally by [`GeounitId`] (zero-based level and
//! index). Positions are canonical: level `l + 1` lists the children of
//! geounit 0 at level `l` first, then the children of geounit 1, and so on,
//! so every geounit's blocks form a contiguous range of block positions.
//! Sibling blocks are kept in ascending block-id order, where a block id is
//! the stable identifier a block received when the spine was first built.
//! Structural edits return new spines with positions recomputed.

use std::fmt;
use std::ops::Range;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Zero-based `(level, index)` address of a geounit. Displayed one-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GeounitId {
    pub level: usize,
    pub index: usize,
}

impl GeounitId {
    pub const ROOT: GeounitId = GeounitId { level: 0, index: 0 };

    pub fn new(level: usize, index: usize) -> Self {
        GeounitId { level, index }
    }
}

impl fmt::Display for GeounitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.level + 1, self.index + 1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Geounit {
    label: String,
    parent: Option<usize>,
    children: Range<usize>,
    blocks: Range<usize>,
}

impl Geounit {
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Index of the parent within the previous level.
    pub fn parent(&self) -> Option<usize> {
        self.parent
    }

    /// Indices of the children within the next level.
    pub fn children(&self) -> Range<usize> {
        self.children.clone()
    }

    /// Positions of the descendant blocks.
    pub fn blocks(&self) -> Range<usize> {
        self.blocks.clone()
    }

    pub fn fanout(&self) -> usize {
        self.children.len()
    }
}

/// One node of an unvalidated spine description.
///
/// `key` orders siblings. At the block level it is also the block id, so
/// block keys must be a permutation of `0..number_of_blocks`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeSpec {
    pub label: String,
    pub parent: Option<usize>,
    pub key: usize,
}

/// For each level, `origin[l][position]` is the index of that geounit in the
/// description the spine was built from.
pub(crate) type Origin = Vec<Vec<usize>>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Spine {
    levels: Vec<Vec<Geounit>>,
    block_ids: Vec<usize>,
    block_positions: Vec<usize>,
}

impl Spine {
    /// Builds a spine from per-level counts and child-to-parent links.
    ///
    /// Every geounit except the root must appear exactly once as a child.
    /// Input indices at the block level become the block ids.
    pub fn build(level_sizes: &[usize], parent_map: &[(GeounitId, GeounitId)]) -> Result<Spine> {
        if level_sizes.first() != Some(&1) {
            return Err(Error::CycleOrForest(
                "the top geolevel must hold exactly one root".into(),
            ));
        }
        let mut parents: Vec<Vec<Option<usize>>> =
            level_sizes.iter().map(|&n| vec![None; n]).collect();
        for &(child, parent) in parent_map {
            if child.level >= level_sizes.len() || child.index >= level_sizes[child.level] {
                return Err(Error::UnknownGeounit(child));
            }
            if parent.level >= level_sizes.len() || parent.index >= level_sizes[parent.level] {
                return Err(Error::UnknownGeounit(parent));
            }
            if child.level == 0 {
                return Err(Error::CycleOrForest(format!(
                    "root {child} is assigned a parent"
                )));
            }
            if parent.level + 1 != child.level {
                return Err(Error::LevelSkip { child, parent });
            }
            let slot = &mut parents[child.level][child.index];
            if slot.is_some() {
                return Err(Error::CycleOrForest(format!(
                    "geounit {child} is assigned more than one parent"
                )));
            }
            *slot = Some(parent.index);
        }
        let levels = parents
            .into_iter()
            .enumerate()
            .map(|(level, row)| {
                row.into_iter()
                    .enumerate()
                    .map(|(index, parent)| NodeSpec {
                        label: format!("{}.{}", level + 1, index + 1),
                        parent,
                        key: index,
                    })
                    .collect()
            })
            .collect();
        Spine::from_nodes(levels)
    }

    /// Builds a spine from explicit per-level node descriptions.
    pub fn from_nodes(levels: Vec<Vec<NodeSpec>>) -> Result<Spine> {
        Spine::from_draft(levels).map(|(spine, _)| spine)
    }

    pub(crate) fn from_draft(levels: Vec<Vec<NodeSpec>>) -> Result<(Spine, Origin)> {
        let depth = levels.len();
        if depth == 0 || levels[0].len() != 1 {
            return Err(Error::CycleOrForest(
                "the top geolevel must hold exactly one root".into(),
            ));
        }
        if levels[0][0].parent.is_some() {
            return Err(Error::CycleOrForest("the root has a parent".into()));
        }
        for (level, nodes) in levels.iter().enumerate().skip(1) {
            for (index, node) in nodes.iter().enumerate() {
                match node.parent {
                    None => {
                        return Err(Error::CycleOrForest(format!(
                            "geounit {} has no parent",
                            GeounitId::new(level, index)
                        )))
                    }
                    Some(p) if p >= levels[level - 1].len() => {
                        return Err(Error::UnknownGeounit(GeounitId::new(level - 1, p)))
                    }
                    Some(_) => {}
                }
            }
        }
        // every geounit above the blocks needs a child
        for level in 0..depth - 1 {
            let mut has_child = vec![false; levels[level].len()];
            for node in &levels[level + 1] {
                has_child[node.parent.unwrap()] = true;
            }
            if let Some(index) = has_child.iter().position(|&c| !c) {
                return Err(Error::EmptyGeounit(GeounitId::new(level, index)));
            }
        }
        let n_blocks = levels[depth - 1].len();
        let mut seen = vec![false; n_blocks];
        for node in &levels[depth - 1] {
            if node.key >= n_blocks || std::mem::replace(&mut seen[node.key], true) {
                return Err(Error::CycleOrForest(format!(
                    "block ids must be a permutation of 1..={n_blocks}"
                )));
            }
        }

        let mut origin: Origin = Vec::with_capacity(depth);
        origin.push(vec![0]);
        let mut position_of: Vec<usize> = vec![0];
        for level in 1..depth {
            let nodes = &levels[level];
            let mut order: Vec<usize> = (0..nodes.len()).collect();
            order.sort_by_key(|&i| (position_of[nodes[i].parent.unwrap()], nodes[i].key, i));
            let mut next = vec![0; nodes.len()];
            for (pos, &i) in order.iter().enumerate() {
                next[i] = pos;
            }
            origin.push(order);
            position_of = next;
        }

        let mut out: Vec<Vec<Geounit>> = Vec::with_capacity(depth);
        for level in 0..depth {
            let units = origin[level]
                .iter()
                .map(|&i| {
                    let spec = &levels[level][i];
                    Geounit {
                        label: spec.label.clone(),
                        parent: None,
                        children: 0..0,
                        blocks: 0..0,
                    }
                })
                .collect();
            out.push(units);
        }
        // parents and child ranges
        for level in 1..depth {
            let (upper, lower) = out.split_at_mut(level);
            let upper = &mut upper[level - 1];
            let mut parent_pos_of_draft = vec![0; levels[level - 1].len()];
            for (pos, &i) in origin[level - 1].iter().enumerate() {
                parent_pos_of_draft[i] = pos;
            }
            for (pos, &i) in origin[level].iter().enumerate() {
                let p = parent_pos_of_draft[levels[level][i].parent.unwrap()];
                lower[0][pos].parent = Some(p);
                let range = &mut upper[p].children;
                if range.start == range.end {
                    *range = pos..pos + 1;
                } else {
                    range.end = pos + 1;
                }
            }
        }
        for (pos, unit) in out[depth - 1].iter_mut().enumerate() {
            unit.blocks = pos..pos + 1;
        }
        for level in (0..depth - 1).rev() {
            let (upper, lower) = out.split_at_mut(level + 1);
            for unit in upper[level].iter_mut() {
                let first = &lower[0][unit.children.start];
                let last = &lower[0][unit.children.end - 1];
                unit.blocks = first.blocks.start..last.blocks.end;
            }
        }
        let block_ids: Vec<usize> = origin[depth - 1]
            .iter()
            .map(|&i| levels[depth - 1][i].key)
            .collect();
        let mut block_positions = vec![0; n_blocks];
        for (pos, &id) in block_ids.iter().enumerate() {
            block_positions[id] = pos;
        }
        Ok((
            Spine {
                levels: out,
                block_ids,
                block_positions,
            },
            origin,
        ))
    }

    /// Node descriptions that rebuild this spine unchanged.
    pub(crate) fn to_draft(&self) -> Vec<Vec<NodeSpec>> {
        let last = self.levels.len() - 1;
        self.levels
            .iter()
            .enumerate()
            .map(|(level, units)| {
                units
                    .iter()
                    .enumerate()
                    .map(|(index, unit)| NodeSpec {
                        label: unit.label.clone(),
                        parent: unit.parent,
                        key: if level == last {
                            self.block_ids[index]
                        } else {
                            index
                        },
                    })
                    .collect()
            })
            .collect()
    }

    /// Number of geolevels, `L`.
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Index of the block geolevel.
    pub fn block_level(&self) -> usize {
        self.levels.len() - 1
    }

    /// `U[l]`.
    pub fn level_size(&self, level: usize) -> usize {
        self.levels[level].len()
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(Vec::len).collect()
    }

    pub fn level(&self, level: usize) -> &[Geounit] {
        &self.levels[level]
    }

    pub fn num_blocks(&self) -> usize {
        self.block_ids.len()
    }

    pub fn total_geounits(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn contains(&self, id: GeounitId) -> bool {
        id.level < self.levels.len() && id.index < self.levels[id.level].len()
    }

    pub fn geounit(&self, id: GeounitId) -> Result<&Geounit> {
        self.levels
            .get(id.level)
            .and_then(|l| l.get(id.index))
            .ok_or(Error::UnknownGeounit(id))
    }

    pub(crate) fn unit(&self, id: GeounitId) -> &Geounit {
        &self.levels[id.level][id.index]
    }

    pub fn root(&self) -> &Geounit {
        &self.levels[0][0]
    }

    pub fn parent(&self, id: GeounitId) -> Option<GeounitId> {
        self.unit(id)
            .parent
            .map(|p| GeounitId::new(id.level - 1, p))
    }

    pub fn children(&self, id: GeounitId) -> impl Iterator<Item = GeounitId> {
        let level = id.level + 1;
        self.unit(id)
            .children()
            .map(move |index| GeounitId::new(level, index))
    }

    /// Number of children; zero for blocks.
    pub fn fanout(&self, id: GeounitId) -> usize {
        self.unit(id).fanout()
    }

    /// `b[l,u]`, the number of descendant blocks.
    pub fn block_count(&self, id: GeounitId) -> usize {
        self.unit(id).blocks.len()
    }

    /// Stable id of the block at `position`.
    pub fn block_id(&self, position: usize) -> usize {
        self.block_ids[position]
    }

    pub fn block_ids(&self) -> &[usize] {
        &self.block_ids
    }

    /// Current position of the block with stable id `id`.
    pub fn block_position(&self, id: usize) -> usize {
        self.block_positions[id]
    }

    /// Index at `level` of the geounit containing the block at `position`.
    pub fn ancestor_index(&self, level: usize, position: usize) -> usize {
        let units = &self.levels[level];
        units.partition_point(|u| u.blocks.end <= position)
    }

    /// All geounit ids, level by level.
    pub fn geounit_ids(&self) -> impl Iterator<Item = GeounitId> + '_ {
        self.levels.iter().enumerate().flat_map(|(level, units)| {
            (0..units.len()).map(move |index| GeounitId::new(level, index))
        })
    }

    /// Block-membership matrix of geolevel `level`.
    pub fn level_matrix(&self, level: usize) -> LevelMatrix {
        LevelMatrix {
            cols: self.num_blocks(),
            rows: self.levels[level].iter().map(|u| u.blocks()).collect(),
        }
    }

    /// Replaces siblings `u` and `v` by one geounit holding both sets of
    /// children. The merged geounit takes the lower of the two positions.
    pub fn combine_siblings(&self, u: GeounitId, v: GeounitId) -> Result<Spine> {
        self.combine_siblings_mapped(u, v).map(|(s, _)| s)
    }

    pub(crate) fn combine_siblings_mapped(
        &self,
        u: GeounitId,
        v: GeounitId,
    ) -> Result<(Spine, Origin)> {
        if !self.contains(u) {
            return Err(Error::UnknownGeounit(u));
        }
        if !self.contains(v) {
            return Err(Error::UnknownGeounit(v));
        }
        if u == v || u.level != v.level || u.level == 0 || self.parent(u) != self.parent(v) {
            return Err(Error::NotSiblings(u, v));
        }
        if u.level == self.block_level() {
            return Err(Error::Unsupported("blocks cannot be combined".into()));
        }
        let level = u.level;
        let (keep, drop) = (u.index.min(v.index), u.index.max(v.index));
        let mut draft = self.to_draft();
        let merged_label = format!(
            "{}+{}",
            self.levels[level][keep].label, self.levels[level][drop].label
        );
        let remap = |i: usize| -> usize {
            match i.cmp(&drop) {
                std::cmp::Ordering::Less => i,
                std::cmp::Ordering::Equal => keep,
                std::cmp::Ordering::Greater => i - 1,
            }
        };
        let row = &mut draft[level];
        row[keep].label = merged_label;
        row.remove(drop);
        for (i, node) in row.iter_mut().enumerate() {
            node.key = i;
        }
        for node in draft[level + 1].iter_mut() {
            node.parent = node.parent.map(remap);
        }
        Spine::from_draft(draft)
    }
}

/// Sparse 0/1 matrix whose row `u` marks the blocks of geounit `u` of one
/// geolevel. Rows are contiguous position ranges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelMatrix {
    cols: usize,
    rows: Vec<Range<usize>>,
}

impl LevelMatrix {
    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, u: usize) -> Range<usize> {
        self.rows[u].clone()
    }

    pub fn rows(&self) -> &[Range<usize>] {
        &self.rows
    }

    pub fn row_sum(&self, u: usize) -> usize {
        self.rows[u].len()
    }

    pub fn get(&self, u: usize, block: usize) -> u8 {
        u8::from(self.rows[u].contains(&block))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.nrows(), self.cols, |r, c| f64::from(self.get(r, c)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(level: usize, index: usize) -> GeounitId {
        GeounitId::new(level, index)
    }

    fn two_block() -> Spine {
        Spine::build(&[1, 2], &[(g(1, 0), g(0, 0)), (g(1, 1), g(0, 0))]).unwrap()
    }

    /// Root with 2 children; child 0 has blocks {0,1}, child 1 has block {2}.
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

    #[test]
    fn smallest_spine() {
        let s = two_block();
        assert_eq!(s.num_levels(), 2);
        assert_eq!(s.level_sizes(), vec![1, 2]);
        assert_eq!(s.block_count(GeounitId::ROOT), 2);
        assert_eq!(s.fanout(GeounitId::ROOT), 2);
        assert_eq!(s.fanout(g(1, 0)), 0);
    }

    #[test]
    fn two_block_matrices() {
        let s = two_block();
        assert_eq!(
            s.level_matrix(0).to_dense(),
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0])
        );
        assert_eq!(s.level_matrix(1).to_dense(), DMatrix::identity(2, 2));
    }

    #[test]
    fn level_matrix_follows_block_order() {
        let s = three_level();
        let m = s.level_matrix(1).to_dense();
        assert_eq!(m, DMatrix::from_row_slice(2, 3, &[1., 1., 0., 0., 0., 1.]));
        assert_eq!(s.level_matrix(2).to_dense(), DMatrix::identity(3, 3));
    }

    #[test]
    fn canonical_order_groups_blocks_by_parent() {
        // blocks 0 and 2 belong to the second level-2 unit
        let s = Spine::build(
            &[1, 2, 3],
            &[
                (g(1, 0), g(0, 0)),
                (g(1, 1), g(0, 0)),
                (g(2, 0), g(1, 1)),
                (g(2, 1), g(1, 0)),
                (g(2, 2), g(1, 1)),
            ],
        )
        .unwrap();
        assert_eq!(s.block_ids(), &[1, 0, 2]);
        assert_eq!(s.level(1)[1].blocks(), 1..3);
        assert_eq!(s.block_position(2), 2);
        assert_eq!(s.ancestor_index(1, 0), 0);
        assert_eq!(s.ancestor_index(1, 2), 1);
    }

    #[test]
    fn two_parents_rejected() {
        let err = Spine::build(
            &[1, 2],
            &[(g(1, 0), g(0, 0)), (g(1, 1), g(0, 0)), (g(1, 0), g(0, 0))],
        )
        .unwrap_err();
        assert!(matches!(err, Error::CycleOrForest(_)));
    }

    #[test]
    fn orphan_and_forest_rejected() {
        let err = Spine::build(&[1, 2], &[(g(1, 0), g(0, 0))]).unwrap_err();
        assert!(matches!(err, Error::CycleOrForest(_)));
        let err = Spine::build(&[2, 1], &[(g(1, 0), g(0, 0))]).unwrap_err();
        assert!(matches!(err, Error::CycleOrForest(_)));
    }

    #[test]
    fn level_skip_rejected() {
        let err = Spine::build(
            &[1, 1, 2],
            &[(g(1, 0), g(0, 0)), (g(2, 0), g(1, 0)), (g(2, 1), g(0, 0))],
        )
        .unwrap_err();
        assert!(matches!(err, Error::LevelSkip { .. }));
    }

    #[test]
    fn childless_internal_rejected() {
        let err = Spine::build(
            &[1, 2, 1],
            &[(g(1, 0), g(0, 0)), (g(1, 1), g(0, 0)), (g(2, 0), g(1, 0))],
        )
        .unwrap_err();
        assert!(matches!(err, Error::EmptyGeounit(id) if id == g(1, 1)));
    }

    #[test]
    fn combine_two_groups() {
        let s = three_level();
        let merged = s.combine_siblings(g(1, 0), g(1, 1)).unwrap();
        assert_eq!(merged.level_sizes(), vec![1, 1, 3]);
        assert_eq!(merged.fanout(GeounitId::ROOT), 1);
        assert_eq!(merged.fanout(g(1, 0)), 3);
        assert_eq!(merged.level(1)[0].label(), "2.1+2.2");
        assert_eq!(merged.block_ids(), s.block_ids());
    }

    #[test]
    fn combine_requires_siblings() {
        let s = three_level();
        assert!(matches!(
            s.combine_siblings(g(2, 1), g(2, 2)),
            Err(Error::NotSiblings(..))
        ));
        assert!(matches!(
            s.combine_siblings(g(1, 0), g(1, 0)),
            Err(Error::NotSiblings(..))
        ));
        assert!(matches!(
            s.combine_siblings(g(1, 0), g(1, 7)),
            Err(Error::UnknownGeounit(_))
        ));
    }

    #[test]
    fn balanced_root_fanout() {
        let mut links = Vec::new();
        for i in 0..3 {
            links.push((g(1, i), g(0, 0)));
        }
        for i in 0..9 {
            links.push((g(2, i), g(1, i / 3)));
        }
        let s = Spine::build(&[1, 3, 9], &links).unwrap();
        assert_eq!(s.fanout(GeounitId::ROOT), 3);
    }
}
