// Copyright (c) 2026 The geospine Authors
// SPDX-License-Identifier: Apache-2.0

//! Deterministic synthetic inputs for the benchmarks.

use geospine::{
    Allocation, BudgetKind, Factor, GeounitId, OseSet, QueryGroupSpec, Spine, Workload,
};

/// Shape of a six-level synthetic spine.
#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub counties: usize,
    pub tracts_per_county: usize,
    pub blocks_per_tract: usize,
}

/// State, counties, one tract group per tract, tracts, one block group per
/// tract, blocks.
pub fn synthetic_spine(shape: Shape) -> Spine {
    let g = GeounitId::new;
    let tracts = shape.counties * shape.tracts_per_county;
    let blocks = tracts * shape.blocks_per_tract;
    let mut links = Vec::with_capacity(shape.counties + 3 * tracts + blocks);
    for c in 0..shape.counties {
        links.push((g(1, c), g(0, 0)));
    }
    for t in 0..tracts {
        links.push((g(2, t), g(1, t / shape.tracts_per_county)));
        links.push((g(3, t), g(2, t)));
        links.push((g(4, t), g(3, t)));
    }
    for b in 0..blocks {
        links.push((g(5, b), g(4, b / shape.blocks_per_tract)));
    }
    Spine::build(&[1, shape.counties, tracts, tracts, tracts, blocks], &links)
        .expect("synthetic spine is valid")
}

/// Entities cutting across tracts: entity `k` holds every block whose id
/// is congruent to `k` modulo `stride`, plus one whole tract.
pub fn synthetic_oses(shape: Shape, count: usize, stride: usize) -> OseSet {
    let blocks = shape.counties * shape.tracts_per_county * shape.blocks_per_tract;
    let entities = (0..count)
        .map(|k| {
            let tract = (k * 7) % (blocks / shape.blocks_per_tract);
            let mut members: Vec<usize> = (0..blocks)
                .filter(|b| b % stride == k % stride || b / shape.blocks_per_tract == tract)
                .collect();
            members.dedup();
            (format!("entity {k}"), members)
        })
        .collect();
    OseSet::from_members(blocks, entities).expect("members are in range")
}

/// Total, marginal and detailed queries over a 2 x 3 schema.
pub fn synthetic_workload() -> Workload {
    let spec = |f: Vec<Factor>| QueryGroupSpec::new(f).expect("valid group");
    Workload::new(
        vec![2, 3],
        vec![
            spec(vec![Factor::Ones(2), Factor::Ones(3)]),
            spec(vec![Factor::Identity(2), Factor::Ones(3)]),
            spec(vec![Factor::Identity(2), Factor::Identity(3)]),
        ],
    )
    .expect("valid workload")
}

pub fn synthetic_allocation(spine: &Spine, kind: BudgetKind) -> Allocation {
    let beta = vec![0.1, 0.15, 0.15, 0.2, 0.2, 0.2];
    Allocation::uniform_alpha(spine, kind, 1.0, beta, vec![0.2, 0.3, 0.5])
        .expect("valid allocation")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_consistent() {
        let shape = Shape {
            counties: 3,
            tracts_per_county: 5,
            blocks_per_tract: 4,
        };
        let s = synthetic_spine(shape);
        assert_eq!(s.level_sizes(), vec![1, 3, 15, 15, 15, 60]);
        assert_eq!(synthetic_oses(shape, 4, 9).len(), 4);
        let a = synthetic_allocation(&s, BudgetKind::Pure);
        assert!(a.validate(&s).is_ok());
    }
}
