// Copyright (c) 2026 The geospine Authors
// SPDX-License-Identifier: Apache-2.0

//! Matrix-mechanism analytics for the strategy `diag(r)(A (x) W)`, where `A`
//! stacks the block-membership rows of the measured geounits.
//!
//! The Gram matrix of the rescaled strategy factors as `G (x) H` with
//! `G = A^T diag(w) A` over blocks and `H = W^T diag(q) W` over histogram
//! cells. For pure DP `w = gamma^2` and `q = (alpha eps / 2)^2`; for zCDP
//! `w = gamma` and `q = alpha rho`. Rescaled Laplace noise has variance 2,
//! rescaled Gaussian noise variance 1.

use nalgebra::DMatrix;

use crate::allocation::{Allocation, BudgetKind};
use crate::error::{Error, Result};
use crate::linalg::spd_inverse;
use crate::privacy::mechanism::Measurement;
use crate::spine::{GeounitId, Spine};
use crate::workload::Workload;

/// Factors of `(S^T S)^{-1} = spine_inv (x) query_inv`, plus the variance of
/// one unit of rescaled noise.
#[derive(Clone, Debug)]
pub struct GramInverse {
    /// Indexed by block position of the strategy spine.
    pub spine_inv: DMatrix<f64>,
    pub query_inv: DMatrix<f64>,
    pub noise_variance: f64,
}

/// Per-geounit weight on the spine side of the Gram matrix.
pub fn spine_weight(kind: BudgetKind, gamma: f64) -> f64 {
    match kind {
        BudgetKind::Pure => gamma * gamma,
        BudgetKind::Zcdp => gamma,
    }
}

/// Per-query weight on the workload side of the Gram matrix.
pub fn query_weight(kind: BudgetKind, budget: f64, alpha: f64) -> f64 {
    match kind {
        BudgetKind::Pure => (alpha * budget / 2.0).powi(2),
        BudgetKind::Zcdp => alpha * budget,
    }
}

pub fn unit_noise_variance(kind: BudgetKind) -> f64 {
    match kind {
        BudgetKind::Pure => 2.0,
        BudgetKind::Zcdp => 1.0,
    }
}

/// The query proportions shared by all geolevels.
fn shared_alpha<'a>(alloc: &'a Allocation, workload: &Workload) -> Result<&'a [f64]> {
    let first = alloc.alpha(0);
    if alloc.alphas().iter().any(|a| a.as_slice() != first) {
        return Err(Error::Unsupported(
            "variance analytics need the same query proportions in every geolevel".into(),
        ));
    }
    alloc.check_query_groups(0, workload.num_groups())?;
    Ok(first)
}

/// `G = A^T diag(w) A` and `H = W^T diag(q) W`.
pub fn gram_factors(
    spine: &Spine,
    alloc: &Allocation,
    workload: &Workload,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    alloc.validate(spine)?;
    let alpha = shared_alpha(alloc, workload)?;
    let b = spine.num_blocks();
    let mut g = DMatrix::<f64>::zeros(b, b);
    for id in spine.geounit_ids() {
        let gamma = alloc.gamma(id);
        if gamma <= 0.0 {
            continue;
        }
        let w = spine_weight(alloc.kind(), gamma);
        let range = spine.unit(id).blocks();
        for j in range.clone() {
            for i in range.clone() {
                g[(i, j)] += w;
            }
        }
    }
    let n = workload.num_cells();
    let mut h = DMatrix::<f64>::zeros(n, n);
    for (group, &a) in workload.groups().iter().zip(alpha) {
        let q = query_weight(alloc.kind(), alloc.budget(), a);
        for cells in group.cells_by_row() {
            for &c1 in &cells {
                for &c2 in &cells {
                    h[(c1, c2)] += q;
                }
            }
        }
    }
    Ok((g, h))
}

pub fn gram_inverse(spine: &Spine, alloc: &Allocation, workload: &Workload) -> Result<GramInverse> {
    let (g, h) = gram_factors(spine, alloc, workload)?;
    let spine_inv = spd_inverse(&g, "spine Gram factor")?;
    let query_inv = spd_inverse(
        &h,
        "workload Gram factor (is the detailed cell group missing?)",
    )?;
    Ok(GramInverse {
        spine_inv,
        query_inv,
        noise_variance: unit_noise_variance(alloc.kind()),
    })
}

/// Expected squared error of one workload query at one geounit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VarianceEntry {
    pub geounit: GeounitId,
    pub query_group: usize,
    pub query_index: usize,
    pub value: f64,
}

/// Running sums for O(1) sums of contiguous blocks of a square matrix.
struct Prefix2d {
    n: usize,
    sums: Vec<f64>,
}

impl Prefix2d {
    fn new(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut sums = vec![0.0; (n + 1) * (n + 1)];
        for i in 0..n {
            for j in 0..n {
                sums[(i + 1) * (n + 1) + j + 1] =
                    m[(i, j)] + sums[i * (n + 1) + j + 1] + sums[(i + 1) * (n + 1) + j]
                        - sums[i * (n + 1) + j];
            }
        }
        Prefix2d { n, sums }
    }

    fn square(&self, lo: usize, hi: usize) -> f64 {
        let w = self.n + 1;
        self.sums[hi * w + hi] - self.sums[lo * w + hi] - self.sums[hi * w + lo]
            + self.sums[lo * w + lo]
    }
}

fn quadratic_form_sum(m: &DMatrix<f64>, idx: &[usize]) -> f64 {
    let mut total = 0.0;
    for &i in idx {
        for &j in idx {
            total += m[(i, j)];
        }
    }
    total
}

/// Diagonal of `Var(V x_hat) = V (S^T S)^{-1} V^T` for `V = B (x) W`, where
/// `B` holds the block-membership rows of every geounit of `rows_spine`.
///
/// `rows_spine` may differ from the strategy spine (for instance the spine
/// before a bypass) but must cover the same block ids. Each diagonal entry
/// is the product `(b^T G^{-1} b)(w^T H^{-1} w)` times the unit noise
/// variance; the full variance matrix is never formed.
pub fn variance_diagonals(
    spine: &Spine,
    alloc: &Allocation,
    workload: &Workload,
    rows_spine: &Spine,
) -> Result<Vec<VarianceEntry>> {
    if rows_spine.num_blocks() != spine.num_blocks() {
        return Err(Error::DimensionMismatch(format!(
            "workload spine has {} blocks, strategy spine {}",
            rows_spine.num_blocks(),
            spine.num_blocks()
        )));
    }
    let gi = gram_inverse(spine, alloc, workload)?;
    let prefix = Prefix2d::new(&gi.spine_inv);

    let query_side: Vec<Vec<f64>> = workload
        .groups()
        .iter()
        .map(|g| {
            g.cells_by_row()
                .iter()
                .map(|cells| quadratic_form_sum(&gi.query_inv, cells))
                .collect()
        })
        .collect();

    let mut out = Vec::new();
    for id in rows_spine.geounit_ids() {
        let range = rows_spine.unit(id).blocks();
        let mut positions: Vec<usize> = range
            .map(|p| spine.block_position(rows_spine.block_id(p)))
            .collect();
        positions.sort_unstable();
        let contiguous = positions.windows(2).all(|w| w[1] == w[0] + 1);
        let spine_side = if contiguous {
            prefix.square(positions[0], positions[positions.len() - 1] + 1)
        } else {
            quadratic_form_sum(&gi.spine_inv, &positions)
        };
        for (gidx, rows) in query_side.iter().enumerate() {
            for (r, &q) in rows.iter().enumerate() {
                out.push(VarianceEntry {
                    geounit: id,
                    query_group: gidx,
                    query_index: r,
                    value: gi.noise_variance * spine_side * q,
                });
            }
        }
    }
    Ok(out)
}

/// Ordinary least squares estimate of the block histogram from raw
/// measurements `z = (a_u (x) w_i) x + y`.
///
/// Measurements are rescaled internally to homoskedastic form. The result
/// is laid out block-id major: entry `block_id * n + cell`.
pub fn ols_estimate(
    spine: &Spine,
    alloc: &Allocation,
    workload: &Workload,
    measurements: &[Measurement],
) -> Result<Vec<f64>> {
    OlsSolver::new(spine, alloc, workload)?.solve(measurements)
}

/// Least squares solver with the Gram inverse factored once, for repeated
/// estimates on the same strategy.
pub struct OlsSolver<'a> {
    spine: &'a Spine,
    alloc: &'a Allocation,
    gram: GramInverse,
    query_weights: Vec<f64>,
    cells: Vec<Vec<Vec<usize>>>,
    expected: usize,
}

impl<'a> OlsSolver<'a> {
    pub fn new(spine: &'a Spine, alloc: &'a Allocation, workload: &Workload) -> Result<Self> {
        let gram = gram_inverse(spine, alloc, workload)?;
        let query_weights = shared_alpha(alloc, workload)?
            .iter()
            .map(|&a| query_weight(alloc.kind(), alloc.budget(), a))
            .collect();
        let expected = spine
            .geounit_ids()
            .filter(|&id| alloc.is_measured(id))
            .count()
            * workload.num_rows();
        Ok(OlsSolver {
            spine,
            alloc,
            gram,
            query_weights,
            cells: workload.groups().iter().map(|g| g.cells_by_row()).collect(),
            expected,
        })
    }

    pub fn gram(&self) -> &GramInverse {
        &self.gram
    }

    pub fn solve(&self, measurements: &[Measurement]) -> Result<Vec<f64>> {
        let (spine, alloc) = (self.spine, self.alloc);
        let n = self.gram.query_inv.nrows();
        let b = spine.num_blocks();
        if measurements.len() != self.expected {
            return Err(Error::DimensionMismatch(format!(
                "{} measurements for {} strategy rows",
                measurements.len(),
                self.expected
            )));
        }
        // S^T z_tilde, accumulated per geounit then spread over its blocks
        let mut per_unit: Vec<Vec<Vec<f64>>> = spine
            .level_sizes()
            .iter()
            .map(|&u| vec![Vec::new(); u])
            .collect();
        for m in measurements {
            if !spine.contains(m.geounit) || !alloc.is_measured(m.geounit) {
                return Err(Error::DimensionMismatch(format!(
                    "measurement for unmeasured geounit {}",
                    m.geounit
                )));
            }
            let group_cells = self
                .cells
                .get(m.query_group)
                .and_then(|g| g.get(m.query_index));
            let Some(group_cells) = group_cells else {
                return Err(Error::DimensionMismatch(format!(
                    "query ({}, {}) is not in the workload",
                    m.query_group + 1,
                    m.query_index + 1
                )));
            };
            let acc = &mut per_unit[m.geounit.level][m.geounit.index];
            if acc.is_empty() {
                acc.resize(n, 0.0);
            }
            let q = self.query_weights[m.query_group];
            for &c in group_cells {
                acc[c] += q * m.noisy_answer;
            }
        }
        let mut rhs = DMatrix::<f64>::zeros(b, n);
        for id in spine.geounit_ids() {
            let acc = &per_unit[id.level][id.index];
            if acc.is_empty() {
                continue;
            }
            let w = spine_weight(alloc.kind(), alloc.gamma(id));
            for p in spine.unit(id).blocks() {
                for c in 0..n {
                    rhs[(p, c)] += w * acc[c];
                }
            }
        }
        // (G (x) H)^{-1} vec(R) = vec(G^{-1} R H^{-1}) for row-major vec
        let est = &self.gram.spine_inv * rhs * &self.gram.query_inv;
        let mut out = vec![0.0; b * n];
        for p in 0..b {
            let id = spine.block_id(p);
            for c in 0..n {
                out[id * n + c] = est[(p, c)];
            }
        }
        Ok(out)
    }
}
