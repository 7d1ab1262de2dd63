// Copyright (c) 2026 The geospine Authors
// SPDX-License-Identifier: Apache-2.0

//! Noisy answers to every query group of every measured geounit.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::allocation::{Allocation, BudgetKind};
use crate::error::{Error, Result};
use crate::privacy::noise::{sample_one, NoiseFamily, NoiseSpec};
use crate::spine::{GeounitId, Spine};
use crate::workload::WorkloadPlan;

/// Block-level histogram, laid out block-id major: `counts[id * cells + c]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram {
    cells: usize,
    counts: Vec<u64>,
}

impl Histogram {
    pub fn new(num_blocks: usize, cells: usize, counts: Vec<u64>) -> Result<Histogram> {
        if counts.len() != num_blocks * cells {
            return Err(Error::DimensionMismatch(format!(
                "histogram has {} counts for {num_blocks} blocks of {cells} cells",
                counts.len()
            )));
        }
        Ok(Histogram { cells, counts })
    }

    pub fn zeros(num_blocks: usize, cells: usize) -> Histogram {
        Histogram {
            cells,
            counts: vec![0; num_blocks * cells],
        }
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn num_blocks(&self) -> usize {
        self.counts.len() / self.cells.max(1)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, block_id: usize, cell: usize) -> u64 {
        self.counts[block_id * self.cells + cell]
    }

    pub fn set(&mut self, block_id: usize, cell: usize, value: u64) {
        self.counts[block_id * self.cells + cell] = value;
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseMode {
    Continuous,
    Discrete,
    /// Exact answers, for debugging.
    None,
}

/// One noisy query answer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Measurement {
    pub geounit: GeounitId,
    pub query_group: usize,
    pub query_index: usize,
    pub true_answer: f64,
    pub noisy_answer: f64,
    /// Laplace scale `b` under pure DP, Gaussian variance under zCDP.
    pub scale: f64,
}

/// Laplace scale or Gaussian variance of one query group's noise.
pub fn noise_scale(kind: BudgetKind, budget: f64, gamma: f64, alpha: f64) -> f64 {
    match kind {
        BudgetKind::Pure => 2.0 / (budget * gamma * alpha),
        BudgetKind::Zcdp => 1.0 / (budget * gamma * alpha),
    }
}

fn family(kind: BudgetKind, mode: NoiseMode) -> Option<NoiseFamily> {
    match (kind, mode) {
        (_, NoiseMode::None) => None,
        (BudgetKind::Pure, NoiseMode::Continuous) => Some(NoiseFamily::Laplace),
        (BudgetKind::Pure, NoiseMode::Discrete) => Some(NoiseFamily::DiscreteLaplace),
        (BudgetKind::Zcdp, NoiseMode::Continuous) => Some(NoiseFamily::Gaussian),
        (BudgetKind::Zcdp, NoiseMode::Discrete) => Some(NoiseFamily::DiscreteGaussian),
    }
}

pub fn run_mechanism(
    spine: &Spine,
    alloc: &Allocation,
    plan: &WorkloadPlan,
    histogram: &Histogram,
    mode: NoiseMode,
    seed: u64,
) -> Result<Vec<Measurement>> {
    run_mechanism_replication(spine, alloc, plan, histogram, mode, seed, 0)
}

/// One independent run of the mechanism. Each (geounit, query group) pair
/// draws from its own stream of a generator keyed by `seed`, so results do
/// not depend on evaluation order. Geounits with zero share are skipped.
pub fn run_mechanism_replication(
    spine: &Spine,
    alloc: &Allocation,
    plan: &WorkloadPlan,
    histogram: &Histogram,
    mode: NoiseMode,
    seed: u64,
    replication: u32,
) -> Result<Vec<Measurement>> {
    alloc.validate(spine)?;
    plan.check_levels(spine.num_levels())?;
    let cells = plan.num_cells();
    if histogram.cells() != cells || histogram.num_blocks() != spine.num_blocks() {
        return Err(Error::DimensionMismatch(format!(
            "histogram is {} blocks x {} cells, spine and workload need {} x {cells}",
            histogram.num_blocks(),
            histogram.cells(),
            spine.num_blocks()
        )));
    }
    for l in 0..spine.num_levels() {
        alloc.check_query_groups(l, plan.for_level(l).num_groups())?;
    }
    // prefix[p][c]: counts of cell c over the first p block positions
    let mut prefix = vec![0u64; (spine.num_blocks() + 1) * cells];
    for p in 0..spine.num_blocks() {
        let id = spine.block_id(p);
        for c in 0..cells {
            prefix[(p + 1) * cells + c] = prefix[p * cells + c] + histogram.get(id, c);
        }
    }
    let family = family(alloc.kind(), mode);
    let mut out = Vec::new();
    let mut stream: u64 = 0;
    let mut cell_counts = vec![0.0; cells];
    for id in spine.geounit_ids() {
        let gamma = alloc.gamma(id);
        if gamma <= 0.0 {
            continue;
        }
        let range = spine.unit(id).blocks();
        for (c, v) in cell_counts.iter_mut().enumerate() {
            *v = (prefix[range.end * cells + c] - prefix[range.start * cells + c]) as f64;
        }
        let workload = plan.for_level(id.level);
        for (gidx, group) in workload.groups().iter().enumerate() {
            let alpha = alloc.alpha(id.level)[gidx];
            let scale = noise_scale(alloc.kind(), alloc.budget(), gamma, alpha);
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream((u64::from(replication) << 32) | stream);
            stream += 1;
            for (r, answer) in group.answer(&cell_counts).into_iter().enumerate() {
                let noisy = match family {
                    None => answer,
                    Some(f) => sample_one(&NoiseSpec::new(f, scale, answer)?, &mut rng),
                };
                out.push(Measurement {
                    geounit: id,
                    query_group: gidx,
                    query_index: r,
                    true_answer: answer,
                    noisy_answer: noisy,
                    scale,
                });
            }
        }
    }
    Ok(out)
}
