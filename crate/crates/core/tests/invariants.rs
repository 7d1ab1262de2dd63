// Copyright (c) 2026 The geospine Authors
// SPDX-License-Identifier: Apache-2.0

mod common;

use common::*;
use geospine::io::{emit_spine, parse_spine};
use geospine::{
    brute_force_osed, lex_leq, ols_estimate, osed_all, pareto_pass, run_mechanism,
    variance_diagonals, Allocation, BudgetKind, GeounitId, Histogram, NoiseMode, Spine,
    WorkloadPlan,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn parent_matrix(spine: &Spine, level: usize) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(spine.level_size(level), spine.level_size(level + 1));
    for u in 0..spine.level_size(level) {
        for c in spine.children(GeounitId::new(level, u)) {
            p[(u, c.index)] = 1.0;
        }
    }
    p
}

fn random_alloc(rng: &mut impl Rng, spine: &Spine, kind: BudgetKind, groups: usize) -> Allocation {
    let beta = random_proportions(rng, spine.num_levels(), 0.05);
    let alpha = random_proportions(rng, groups, 0.05);
    let budget = rng.random_range(0.2..4.0);
    Allocation::uniform_alpha(spine, kind, budget, beta, alpha).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn level_matrices_nest(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = random_small_spine(&mut r);
        for l in 0..s.block_level() {
            let lhs = s.level_matrix(l).to_dense();
            let rhs = parent_matrix(&s, l) * s.level_matrix(l + 1).to_dense();
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn every_level_partitions_the_blocks(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = random_small_spine(&mut r);
        for l in 0..s.num_levels() {
            let total: usize = (0..s.level_size(l)).map(|u| s.block_count(GeounitId::new(l, u))).sum();
            prop_assert_eq!(total, s.num_blocks());
        }
    }

    #[test]
    fn combining_siblings_keeps_blocks(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = random_spine_with(&mut r, 3, 12, 25);
        let kids: Vec<GeounitId> = s.children(GeounitId::ROOT).collect();
        let pairs: Vec<(GeounitId, GeounitId)> = kids
            .iter()
            .enumerate()
            .flat_map(|(i, &u)| kids[i + 1..].iter().map(move |&v| (u, v)))
            .collect();
        prop_assume!(!pairs.is_empty());
        let (u, v) = pairs[r.random_range(0..pairs.len())];
        let t = s.combine_siblings(u, v).unwrap();
        let mut before = s.block_ids().to_vec();
        let mut after = t.block_ids().to_vec();
        before.sort_unstable();
        after.sort_unstable();
        prop_assert_eq!(before, after);
        prop_assert_eq!(t.level_size(1), s.level_size(1) - 1);
        prop_assert_eq!(t.level_size(2), s.level_size(2));
    }

    #[test]
    fn spine_files_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = random_small_spine(&mut r);
        let back = parse_spine(&emit_spine(&s), "s.txt").unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn osed_is_bounded_by_membership(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = random_spine_with(&mut r, 4, 30, 60);
        let oses = random_oses(&mut r, s.num_blocks(), 4);
        let d = osed_all(&s, &oses).unwrap();
        for (k, &dk) in d.iter().enumerate() {
            prop_assert!(dk >= 1);
            prop_assert!(dk as usize <= oses.members(k).len());
        }
    }

    #[test]
    fn osed_matches_exhaustive_search(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = random_small_spine(&mut r);
        let oses = random_oses(&mut r, s.num_blocks(), 2);
        let d = osed_all(&s, &oses).unwrap();
        for k in 0..2 {
            prop_assert_eq!(d[k], brute_force_osed(&s, oses.indicator(k)).unwrap());
        }
    }

    #[test]
    fn pareto_pass_keeps_path_sums(seed in any::<u64>(), pure in any::<bool>()) {
        let mut r = rng(seed);
        let levels = r.random_range(3..=6);
        let s = random_spine_with(&mut r, levels, 40, 120);
        let kind = if pure { BudgetKind::Pure } else { BudgetKind::Zcdp };
        let a = random_alloc(&mut r, &s, kind, 1);
        let (s2, a2) = pareto_pass(&s, &a, pure);
        prop_assert_eq!(s2.num_blocks(), s.num_blocks());
        for id in 0..s.num_blocks() {
            let before = a.path_sum(&s, s.block_position(id));
            let after = a2.path_sum(&s2, s2.block_position(id));
            prop_assert!((before - after).abs() < 1e-12);
        }
        // a second pass has nothing left to do
        let again = pareto_pass(&s2, &a2, pure);
        prop_assert_eq!(again.0, s2);
    }

    #[test]
    fn lex_order_is_total(x in proptest::collection::vec(0u32..4, 0..5),
                          y in proptest::collection::vec(0u32..4, 0..5)) {
        prop_assert!(lex_leq(&x, &x));
        prop_assert!(lex_leq(&x, &y) || lex_leq(&y, &x));
        let mut padded = x.clone();
        padded.push(0);
        prop_assert!(lex_leq(&x, &padded) && lex_leq(&padded, &x));
    }

    #[test]
    fn kronecker_variance_matches_dense(seed in any::<u64>(), pure in any::<bool>()) {
        let mut r = rng(seed);
        let levels = r.random_range(1..=4);
        let s = random_spine_with(&mut r, levels, 8, 20);
        let w = random_workload(&mut r);
        let kind = if pure { BudgetKind::Pure } else { BudgetKind::Zcdp };
        let a = random_alloc(&mut r, &s, kind, w.num_groups());
        let fast = variance_diagonals(&s, &a, &w, &s).unwrap();
        let dense = dense_variance(&s, &a, &w, &s);
        prop_assert_eq!(fast.len(), dense.nrows());
        for (i, e) in fast.iter().enumerate() {
            prop_assert!(close(e.value, dense[(i, i)], 1e-8), "{} vs {}", e.value, dense[(i, i)]);
        }
    }

    #[test]
    fn variance_scales_with_budget(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = random_spine_with(&mut r, 3, 8, 20);
        let w = random_workload(&mut r);
        let a = random_alloc(&mut r, &s, BudgetKind::Pure, w.num_groups());
        let doubled = a.clone().with_budget(BudgetKind::Pure, 2.0 * a.budget());
        let base = variance_diagonals(&s, &a, &w, &s).unwrap();
        let more = variance_diagonals(&s, &doubled, &w, &s).unwrap();
        for (x, y) in base.iter().zip(&more) {
            prop_assert!(close(x.value, 4.0 * y.value, 1e-10));
        }
    }

    #[test]
    fn least_squares_matches_dense(seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = random_spine_with(&mut r, 3, 8, 20);
        let w = random_workload(&mut r);
        let a = random_alloc(&mut r, &s, BudgetKind::Zcdp, w.num_groups());
        let n = w.num_cells();
        let counts: Vec<u64> = (0..s.num_blocks() * n).map(|_| r.random_range(0..50)).collect();
        let h = Histogram::new(s.num_blocks(), n, counts.clone()).unwrap();
        let plan = WorkloadPlan::Uniform(w.clone());

        let exact = run_mechanism(&s, &a, &plan, &h, NoiseMode::None, seed).unwrap();
        let est = ols_estimate(&s, &a, &w, &exact).unwrap();
        for (e, &c) in est.iter().zip(&counts) {
            prop_assert!((e - c as f64).abs() < 1e-8);
        }

        let noisy = run_mechanism(&s, &a, &plan, &h, NoiseMode::Continuous, seed).unwrap();
        let est = ols_estimate(&s, &a, &w, &noisy).unwrap();
        let dense = dense_ols(&s, &a, &w, &noisy);
        for (e, d) in est.iter().zip(dense.iter()) {
            prop_assert!((e - d).abs() < 1e-7 * (1.0 + d.abs()));
        }
    }
}
