// Copyright (c) 2026 The geospine Authors
// SPDX-License-Identifier: Apache-2.0

//! Off-spine entity distances (OSEDs): how many spine geounits must be added
//! or subtracted to compose an entity's block set exactly.

use crate::error::{Error, Result};
use crate::spine::{GeounitId, Spine};

const SATURATION: u32 = i32::MAX as u32;

/// Named entities given as block-membership indicators indexed by block id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OseSet {
    names: Vec<String>,
    membership: Vec<Vec<bool>>,
}

impl OseSet {
    pub fn new(names: Vec<String>, membership: Vec<Vec<bool>>) -> Result<OseSet> {
        if names.len() != membership.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} entity names for {} indicators",
                names.len(),
                membership.len()
            )));
        }
        Ok(OseSet { names, membership })
    }

    /// Builds indicators over `num_blocks` blocks from member block ids.
    pub fn from_members(num_blocks: usize, entities: Vec<(String, Vec<usize>)>) -> Result<OseSet> {
        let mut names = Vec::with_capacity(entities.len());
        let mut membership = Vec::with_capacity(entities.len());
        for (name, blocks) in entities {
            let mut row = vec![false; num_blocks];
            for b in blocks {
                if b >= num_blocks {
                    return Err(Error::CrossRef(format!(
                        "entity `{name}` references block {} of a {num_blocks}-block spine",
                        b + 1
                    )));
                }
                row[b] = true;
            }
            names.push(name);
            membership.push(row);
        }
        Ok(OseSet { names, membership })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn indicator(&self, k: usize) -> &[bool] {
        &self.membership[k]
    }

    pub fn contains(&self, k: usize, block_id: usize) -> bool {
        self.membership[k][block_id]
    }

    /// Member block ids of entity `k`, ascending.
    pub fn members(&self, k: usize) -> Vec<usize> {
        self.membership[k]
            .iter()
            .enumerate()
            .filter_map(|(b, &m)| m.then_some(b))
            .collect()
    }

    /// The bit vector `(C_k(block))_k` for one block id.
    pub fn signature(&self, block_id: usize) -> Vec<bool> {
        self.membership.iter().map(|row| row[block_id]).collect()
    }

    pub(crate) fn check_covers(&self, spine: &Spine) -> Result<()> {
        for (name, row) in self.names.iter().zip(&self.membership) {
            if row.len() != spine.num_blocks() {
                return Err(Error::MembershipMissing {
                    entity: name.clone(),
                    expected: spine.num_blocks(),
                    found: row.len(),
                });
            }
        }
        Ok(())
    }
}

/// Per-node distance pair: cost to compose the entity restricted to the
/// node's blocks, and cost to compose its complement within the node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct OsedPair {
    pub entity: u32,
    pub complement: u32,
}

impl OsedPair {
    fn leaf(member: bool) -> Self {
        OsedPair {
            entity: u32::from(member),
            complement: u32::from(!member),
        }
    }

    /// Combines the summed pairs of a node's children.
    pub(crate) fn from_child_sums(sum: OsedPair) -> Self {
        OsedPair {
            entity: sum.entity.min(sum.complement.saturating_add(1)),
            complement: sum.complement.min(sum.entity.saturating_add(1)),
        }
    }

    pub(crate) fn add(self, other: OsedPair) -> OsedPair {
        OsedPair {
            entity: self.entity.saturating_add(other.entity).min(SATURATION),
            complement: self
                .complement
                .saturating_add(other.complement)
                .min(SATURATION),
        }
    }

    pub(crate) fn sub(self, other: OsedPair) -> OsedPair {
        OsedPair {
            entity: self.entity - other.entity,
            complement: self.complement - other.complement,
        }
    }
}

/// Distances for every entity at every geounit, `[level][index][entity]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OsedTable {
    pairs: Vec<Vec<Vec<OsedPair>>>,
    /// Sums of children's pairs for internal nodes.
    child_sums: Vec<Vec<Vec<OsedPair>>>,
}

impl OsedTable {
    pub fn compute(spine: &Spine, oses: &OseSet) -> Result<OsedTable> {
        oses.check_covers(spine)?;
        let k = oses.len();
        let depth = spine.num_levels();
        let mut pairs: Vec<Vec<Vec<OsedPair>>> = vec![Vec::new(); depth];
        let mut child_sums: Vec<Vec<Vec<OsedPair>>> = vec![Vec::new(); depth];
        let last = spine.block_level();
        pairs[last] = (0..spine.num_blocks())
            .map(|pos| {
                let id = spine.block_id(pos);
                (0..k)
                    .map(|e| OsedPair::leaf(oses.contains(e, id)))
                    .collect()
            })
            .collect();
        child_sums[last] = vec![vec![OsedPair::default(); k]; spine.num_blocks()];
        for level in (0..last).rev() {
            let mut level_pairs = Vec::with_capacity(spine.level_size(level));
            let mut level_sums = Vec::with_capacity(spine.level_size(level));
            for unit in spine.level(level) {
                let mut sum = vec![OsedPair::default(); k];
                for child in unit.children() {
                    for (s, c) in sum.iter_mut().zip(&pairs[level + 1][child]) {
                        *s = s.add(*c);
                    }
                }
                level_pairs.push(sum.iter().map(|&s| OsedPair::from_child_sums(s)).collect());
                level_sums.push(sum);
            }
            pairs[level] = level_pairs;
            child_sums[level] = level_sums;
        }
        Ok(OsedTable { pairs, child_sums })
    }

    pub fn pair(&self, id: GeounitId, entity: usize) -> OsedPair {
        self.pairs[id.level][id.index][entity]
    }

    pub fn pairs_at(&self, id: GeounitId) -> &[OsedPair] {
        &self.pairs[id.level][id.index]
    }

    pub(crate) fn child_sums_at(&self, id: GeounitId) -> &[OsedPair] {
        &self.child_sums[id.level][id.index]
    }

    /// `c[k,1,1]` for every entity.
    pub fn root_distances(&self) -> Vec<u32> {
        self.pairs[0][0].iter().map(|p| p.entity).collect()
    }
}

/// OSED of every entity, in entity order.
pub fn osed_all(spine: &Spine, oses: &OseSet) -> Result<Vec<u32>> {
    Ok(OsedTable::compute(spine, oses)?.root_distances())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reducer {
    Max,
    Mean,
    SortedDescending,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Reduced {
    Scalar(f64),
    Vector(Vec<u32>),
}

impl Reducer {
    pub fn apply(self, distances: &[u32]) -> Reduced {
        match self {
            Reducer::Max => {
                Reduced::Scalar(f64::from(distances.iter().copied().max().unwrap_or(0)))
            }
            Reducer::Mean => {
                if distances.is_empty() {
                    Reduced::Scalar(0.0)
                } else {
                    let total: f64 = distances.iter().map(|&d| f64::from(d)).sum();
                    Reduced::Scalar(total / distances.len() as f64)
                }
            }
            Reducer::SortedDescending => Reduced::Vector(sorted_descending(distances)),
        }
    }
}

pub fn sorted_descending(distances: &[u32]) -> Vec<u32> {
    let mut v = distances.to_vec();
    v.sort_unstable_by(|a, b| b.cmp(a));
    v
}

pub fn osed_reduced(spine: &Spine, oses: &OseSet, reducer: Reducer) -> Result<Reduced> {
    Ok(reducer.apply(&osed_all(spine, oses)?))
}

/// Largest spine, counted in geounits over all levels, accepted by
/// [`brute_force_osed`].
pub const BRUTE_FORCE_CAP: usize = 25;

/// Minimum number of geounits combined with signs in {-1, +1} whose signed
/// block indicators sum to `indicator` (indexed by block id). Exhaustive
/// search by increasing cardinality.
pub fn brute_force_osed(spine: &Spine, indicator: &[bool]) -> Result<u32> {
    let total = spine.total_geounits();
    if total > BRUTE_FORCE_CAP {
        return Err(Error::TooLarge {
            geounits: total,
            cap: BRUTE_FORCE_CAP,
        });
    }
    if indicator.len() != spine.num_blocks() {
        return Err(Error::MembershipMissing {
            entity: "<indicator>".into(),
            expected: spine.num_blocks(),
            found: indicator.len(),
        });
    }
    let target: Vec<i32> = (0..spine.num_blocks())
        .map(|pos| i32::from(indicator[spine.block_id(pos)]))
        .collect();
    let rows: Vec<std::ops::Range<usize>> = spine
        .geounit_ids()
        .map(|id| spine.level(id.level)[id.index].blocks())
        .collect();

    struct Search<'a> {
        rows: &'a [std::ops::Range<usize>],
        target: &'a [i32],
        current: Vec<i32>,
    }

    impl Search<'_> {
        fn run(&mut self, next: usize, budget: usize) -> bool {
            if self.current == self.target {
                return true;
            }
            if budget == 0 {
                return false;
            }
            for g in next..self.rows.len() {
                for sign in [1, -1] {
                    for p in self.rows[g].clone() {
                        self.current[p] += sign;
                    }
                    let found = self.run(g + 1, budget - 1);
                    for p in self.rows[g].clone() {
                        self.current[p] -= sign;
                    }
                    if found {
                        return true;
                    }
                }
            }
            false
        }
    }

    let mut search = Search {
        rows: &rows,
        target: &target,
        current: vec![0; target.len()],
    };
    // selecting each member block is always a solution
    let upper = target.iter().filter(|&&t| t == 1).count();
    for budget in 0..=upper {
        if search.run(0, budget) {
            return Ok(budget as u32);
        }
    }
    Ok(upper as u32)
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

    fn flat(n: usize) -> Spine {
        let links: Vec<_> = (0..n).map(|i| (g(1, i), g(0, 0))).collect();
        Spine::build(&[1, n], &links).unwrap()
    }

    #[test]
    fn geounit_shaped_entity_costs_one() {
        let spine = Spine::build(
            &[1, 2, 4],
            &[
                (g(1, 0), g(0, 0)),
                (g(1, 1), g(0, 0)),
                (g(2, 0), g(1, 0)),
                (g(2, 1), g(1, 0)),
                (g(2, 2), g(1, 1)),
                (g(2, 3), g(1, 1)),
            ],
        )
        .unwrap();
        let oses = OseSet::from_members(4, vec![("county".into(), vec![2, 3])]).unwrap();
        assert_eq!(osed_all(&spine, &oses).unwrap(), vec![1]);
        assert_eq!(brute_force_osed(&spine, oses.indicator(0)).unwrap(), 1);
    }

    #[test]
    fn empty_entity_costs_zero() {
        let oses = OseSet::from_members(3, vec![("none".into(), vec![])]).unwrap();
        assert_eq!(osed_all(&flat(3), &oses).unwrap(), vec![0]);
    }

    #[test]
    fn reducers() {
        assert_eq!(Reducer::Max.apply(&[3, 1]), Reduced::Scalar(3.0));
        assert_eq!(Reducer::Mean.apply(&[3, 1]), Reduced::Scalar(2.0));
        assert_eq!(
            Reducer::SortedDescending.apply(&[1, 3]),
            Reduced::Vector(vec![3, 1])
        );
    }

    #[test]
    fn brute_force_single_block() {
        assert_eq!(brute_force_osed(&two_block(), &[true, false]).unwrap(), 1);
    }

    #[test]
    fn brute_force_complement_of_block() {
        // root minus one block beats adding two blocks
        assert_eq!(brute_force_osed(&flat(3), &[true, false, true]).unwrap(), 2);
        let oses = OseSet::from_members(3, vec![("c".into(), vec![0, 2])]).unwrap();
        assert_eq!(osed_all(&flat(3), &oses).unwrap(), vec![2]);
        assert_eq!(
            brute_force_osed(&flat(4), &[true, false, true, true]).unwrap(),
            2
        );
    }

    #[test]
    fn brute_force_size_cap() {
        let err = brute_force_osed(&flat(30), &[false; 30]).unwrap_err();
        assert!(matches!(err, Error::TooLarge { geounits: 31, .. }));
    }

    #[test]
    fn missing_membership() {
        let oses = OseSet::new(vec!["x".into()], vec![vec![true]]).unwrap();
        assert!(matches!(
            osed_all(&two_block(), &oses),
            Err(Error::MembershipMissing {
                expected: 2,
                found: 1,
                ..
            })
        ));
    }

    #[test]
    fn complement_column_matches_complement_entity() {
        let spine = flat(5);
        let ind = vec![true, true, false, true, false];
        let inv: Vec<bool> = ind.iter().map(|b| !b).collect();
        let oses = OseSet::new(vec!["a".into(), "b".into()], vec![ind, inv]).unwrap();
        let table = OsedTable::compute(&spine, &oses).unwrap();
        assert_eq!(
            table.pair(GeounitId::ROOT, 0).complement,
            table.pair(GeounitId::ROOT, 1).entity
        );
        assert_eq!(
            table.pair(GeounitId::ROOT, 1).complement,
            table.pair(GeounitId::ROOT, 0).entity
        );
    }
}
