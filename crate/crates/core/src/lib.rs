// Copyright (c) 2026 The geospine Authors
// SPDX-License-Identifier: Apache-2.0

//! Hierarchical geographic spines for differentially private histogram
//! release: off-spine entity distances, spine regrouping, bypassing of
//! low-fanout geounits, matrix-mechanism variances and privacy audits.

pub mod allocation;
pub mod bypass;
pub mod error;
pub mod io;
pub mod linalg;
pub mod matmech;
pub mod optimize;
pub mod osed;
pub mod privacy;
pub mod spine;
pub mod workload;

pub use allocation::{Allocation, BudgetKind};
pub use bypass::{bypass_parent, bypass_rule, pareto_pass, should_bypass, total_query_variances};
pub use error::{Error, Result};
pub use matmech::{
    gram_inverse, ols_estimate, variance_diagonals, GramInverse, OlsSolver, VarianceEntry,
};
pub use optimize::{
    initialize_tract_groups, lex_leq, optimize_tract_groups, optimize_tract_groups_traced,
    redefine_block_groups, stage_one, OptConfig, StageOne,
};
pub use osed::{brute_force_osed, osed_all, osed_reduced, OseSet, OsedTable, Reduced, Reducer};
pub use privacy::{
    audit, audit_pure, audit_zcdp, run_mechanism, zcdp_to_approx_dp, Histogram, Measurement,
    NoiseMode, PrivacyAudit,
};
pub use spine::{Geounit, GeounitId, LevelMatrix, NodeSpec, Spine};
pub use workload::{Factor, QueryGroup, QueryGroupSpec, Workload, WorkloadPlan};
