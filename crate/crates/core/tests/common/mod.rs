// Copyright (c) 2026 The geospine Authors
// SPDX-License-Identifier: Apache-2.0

//! Random fixtures and dense reference computations shared by the
//! integration tests.

#![allow(dead_code)]

use geospine::{
    Allocation, BudgetKind, Factor, GeounitId, Measurement, OseSet, QueryGroupSpec, Spine, Workload,
};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Level sizes are non-decreasing from a single root; every geounit above
/// the blocks gets at least one child. Block ids are a random permutation.
pub fn random_spine_with(
    rng: &mut impl Rng,
    levels: usize,
    max_blocks: usize,
    max_total: usize,
) -> Spine {
    assert!(levels >= 1);
    loop {
        let mut sizes = vec![1usize];
        for _ in 1..levels {
            let prev = *sizes.last().unwrap();
            let hi = (prev * 3).min(max_blocks).max(prev);
            sizes.push(rng.random_range(prev..=hi));
        }
        if sizes.iter().sum::<usize>() > max_total {
            continue;
        }
        let mut links = Vec::new();
        for l in 1..levels {
            let mut parents: Vec<usize> = (0..sizes[l - 1]).collect();
            while parents.len() < sizes[l] {
                parents.push(rng.random_range(0..sizes[l - 1]));
            }
            parents.shuffle(rng);
            for (i, p) in parents.into_iter().enumerate() {
                links.push((GeounitId::new(l, i), GeounitId::new(l - 1, p)));
            }
        }
        return Spine::build(&sizes, &links).expect("generated spine is valid");
    }
}

/// At most 4 levels, 12 blocks and 25 geounits.
pub fn random_small_spine(rng: &mut impl Rng) -> Spine {
    let levels = rng.random_range(1..=4);
    random_spine_with(rng, levels, 12, 25)
}

pub fn random_oses(rng: &mut impl Rng, blocks: usize, count: usize) -> OseSet {
    let membership = (0..count)
        .map(|_| loop {
            let m: Vec<bool> = (0..blocks).map(|_| rng.random_bool(0.5)).collect();
            if m.iter().any(|&b| b) {
                break m;
            }
        })
        .collect();
    let names = (0..count).map(|k| format!("e{k}")).collect();
    OseSet::new(names, membership).unwrap()
}

/// Random proportions summing to one, each at least `floor`.
pub fn random_proportions(rng: &mut impl Rng, k: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0) + floor).collect();
    let total: f64 = raw.iter().sum();
    let mut p: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let head: f64 = p[..k - 1].iter().sum();
    p[k - 1] = 1.0 - head;
    p
}

/// A workload on `cells` cells (1 to 4) whose last group is the full
/// identity, so the query Gram matrix is nonsingular.
pub fn random_workload(rng: &mut impl Rng) -> Workload {
    let dims = match rng.random_range(0..4) {
        0 => vec![1],
        1 => vec![2],
        2 => vec![3],
        _ => vec![2, 2],
    };
    let mut groups = Vec::new();
    for _ in 0..rng.random_range(0..3) {
        let factors = dims
            .iter()
            .map(|&d| {
                if rng.random_bool(0.5) {
                    Factor::Identity(d)
                } else {
                    Factor::Ones(d)
                }
            })
            .collect();
        groups.push(QueryGroupSpec::new(factors).unwrap());
    }
    groups.push(QueryGroupSpec::new(dims.iter().map(|&d| Factor::Identity(d)).collect()).unwrap());
    Workload::new(dims, groups).unwrap()
}

fn factor_matrix(f: Factor) -> DMatrix<f64> {
    match f {
        Factor::Identity(k) => DMatrix::identity(k, k),
        Factor::Ones(k) => DMatrix::from_element(1, k, 1.0),
    }
}

/// Dense rows of every query group stacked, in workload order, built as
/// Kronecker products of the factors.
fn workload_rows(workload: &Workload) -> Vec<(usize, usize, Vec<f64>)> {
    let mut out = Vec::new();
    for (g, spec) in workload.specs().iter().enumerate() {
        let m = spec
            .factors()
            .iter()
            .fold(DMatrix::from_element(1, 1, 1.0), |acc, &f| {
                acc.kronecker(&factor_matrix(f))
            });
        for r in 0..m.nrows() {
            out.push((g, r, m.row(r).iter().copied().collect()));
        }
    }
    out
}

/// Block-indicator row of a geounit over block ids.
fn block_row(spine: &Spine, id: GeounitId) -> Vec<f64> {
    let mut row = vec![0.0; spine.num_blocks()];
    for p in spine.geounit(id).unwrap().blocks() {
        row[spine.block_id(p)] = 1.0;
    }
    row
}

fn kron(a: &[f64], w: &[f64]) -> Vec<f64> {
    a.iter()
        .flat_map(|&x| w.iter().map(move |&y| x * y))
        .collect()
}

/// Homoskedastic strategy matrix: each measured query row divided by the
/// standard deviation of its noise, with the row's key.
pub fn dense_strategy(
    spine: &Spine,
    alloc: &Allocation,
    workload: &Workload,
) -> (DMatrix<f64>, Vec<(GeounitId, usize, usize)>, Vec<f64>) {
    let rows = workload_rows(workload);
    let mut data = Vec::new();
    let mut keys = Vec::new();
    let mut sds = Vec::new();
    for id in spine.geounit_ids() {
        let gamma = alloc.gamma(id);
        if gamma == 0.0 {
            continue;
        }
        let a = block_row(spine, id);
        for (g, r, w) in &rows {
            let alpha = alloc.alpha(id.level)[*g];
            // Laplace(b) has sd b*sqrt(2); Gaussian sd is sqrt(variance)
            let sd = match alloc.kind() {
                BudgetKind::Pure => 2.0 / (alloc.budget() * gamma * alpha) * 2f64.sqrt(),
                BudgetKind::Zcdp => (1.0 / (alloc.budget() * gamma * alpha)).sqrt(),
            };
            data.extend(kron(&a, w).into_iter().map(|v| v / sd));
            keys.push((id, *g, *r));
            sds.push(sd);
        }
    }
    let ncols = spine.num_blocks() * workload.num_cells();
    (DMatrix::from_row_slice(keys.len(), ncols, &data), keys, sds)
}

/// Query matrix `B (x) W` over the geounits of `rows_spine`.
pub fn dense_queries(rows_spine: &Spine, workload: &Workload) -> DMatrix<f64> {
    let rows = workload_rows(workload);
    let mut data = Vec::new();
    let mut count = 0;
    for id in rows_spine.geounit_ids() {
        let a = block_row(rows_spine, id);
        for (_, _, w) in &rows {
            data.extend(kron(&a, w));
            count += 1;
        }
    }
    DMatrix::from_row_slice(count, rows_spine.num_blocks() * workload.num_cells(), &data)
}

/// Full `Var(V x_hat) = V (S^T S)^{-1} V^T`, by LU inversion.
pub fn dense_variance(
    spine: &Spine,
    alloc: &Allocation,
    workload: &Workload,
    rows_spine: &Spine,
) -> DMatrix<f64> {
    let (s, _, _) = dense_strategy(spine, alloc, workload);
    let gram_inv = (s.transpose() * &s)
        .try_inverse()
        .expect("strategy has full column rank");
    let v = dense_queries(rows_spine, workload);
    &v * gram_inv * v.transpose()
}

/// Weighted least squares over the raw measurements.
pub fn dense_ols(
    spine: &Spine,
    alloc: &Allocation,
    workload: &Workload,
    measurements: &[Measurement],
) -> DVector<f64> {
    let (s, keys, sds) = dense_strategy(spine, alloc, workload);
    let mut z = DVector::zeros(keys.len());
    for (i, key) in keys.iter().enumerate() {
        let m = measurements
            .iter()
            .find(|m| (m.geounit, m.query_group, m.query_index) == *key)
            .expect("every measured row has a measurement");
        z[i] = m.noisy_answer / sds[i];
    }
    let gram_inv = (s.transpose() * &s).try_inverse().unwrap();
    gram_inv * s.transpose() * z
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}
