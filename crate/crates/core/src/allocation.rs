// Copyright (c) 2026 The geospine Authors
// SPDX-License-Identifier: Apache-2.0

//! Budget allocation across geolevels, geounits and query groups.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spine::{GeounitId, Spine};

/// Allowed deviation of a proportion vector's sum from one.
pub const SUM_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetKind {
    /// Pure ε-DP with Laplace noise.
    Pure,
    /// ρ-zCDP with Gaussian noise.
    Zcdp,
}

impl BudgetKind {
    pub fn is_pure(self) -> bool {
        matches!(self, BudgetKind::Pure)
    }
}

/// Proportions of a global budget.
///
/// `beta[l]` is the share of geolevel `l`, `gamma[l][u]` the share of
/// geounit `(l, u)` (equal to `beta[l]` on a fresh spine) and `alpha[l][i]`
/// the share of query group `i` within geolevel `l`.
#[derive(Clone, Debug, PartialEq)]
pub struct Allocation {
    kind: BudgetKind,
    budget: f64,
    beta: Vec<f64>,
    alpha: Vec<Vec<f64>>,
    gamma: Vec<Vec<f64>>,
}

impl Allocation {
    /// Fresh allocation with `gamma[l][u] = beta[l]`.
    pub fn new(
        spine: &Spine,
        kind: BudgetKind,
        budget: f64,
        beta: Vec<f64>,
        alpha: Vec<Vec<f64>>,
    ) -> Result<Allocation> {
        let gamma = spine
            .level_sizes()
            .iter()
            .zip(&beta)
            .map(|(&n, &b)| vec![b; n])
            .collect();
        let alloc = Allocation {
            kind,
            budget,
            beta,
            alpha,
            gamma,
        };
        alloc.validate(spine)?;
        Ok(alloc)
    }

    /// Same proportions for every level's query groups.
    pub fn uniform_alpha(
        spine: &Spine,
        kind: BudgetKind,
        budget: f64,
        beta: Vec<f64>,
        alpha: Vec<f64>,
    ) -> Result<Allocation> {
        let alpha = vec![alpha; spine.num_levels()];
        Allocation::new(spine, kind, budget, beta, alpha)
    }

    pub fn kind(&self) -> BudgetKind {
        self.kind
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn alpha(&self, level: usize) -> &[f64] {
        &self.alpha[level]
    }

    pub fn alphas(&self) -> &[Vec<f64>] {
        &self.alpha
    }

    pub fn gamma(&self, id: GeounitId) -> f64 {
        self.gamma[id.level][id.index]
    }

    pub fn gamma_level(&self, level: usize) -> &[f64] {
        &self.gamma[level]
    }

    pub fn set_gamma(&mut self, id: GeounitId, value: f64) {
        self.gamma[id.level][id.index] = value;
    }

    pub fn with_budget(mut self, kind: BudgetKind, budget: f64) -> Allocation {
        self.kind = kind;
        self.budget = budget;
        self
    }

    /// Geounits with zero share are not measured.
    pub fn is_measured(&self, id: GeounitId) -> bool {
        self.gamma(id) > 0.0
    }

    /// True when every geounit still carries its geolevel share.
    pub fn is_fresh(&self) -> bool {
        self.gamma
            .iter()
            .zip(&self.beta)
            .all(|(row, &b)| row.iter().all(|&g| g == b))
    }

    /// Same proportions with `gamma` reset to `beta` on `spine`.
    pub fn rebased(&self, spine: &Spine) -> Result<Allocation> {
        Allocation::new(
            spine,
            self.kind,
            self.budget,
            self.beta.clone(),
            self.alpha.clone(),
        )
    }

    /// Sum of `gamma` along the root-to-block path of the block at `position`.
    pub fn path_sum(&self, spine: &Spine, position: usize) -> f64 {
        (0..spine.num_levels())
            .map(|l| self.gamma[l][spine.ancestor_index(l, position)])
            .sum()
    }

    pub(crate) fn replace_gamma(&mut self, gamma: Vec<Vec<f64>>) {
        self.gamma = gamma;
    }

    pub(crate) fn gamma_rows(&self) -> &[Vec<f64>] {
        &self.gamma
    }

    /// Checks shapes against `spine`, proportion sums and signs.
    pub fn validate(&self, spine: &Spine) -> Result<()> {
        let levels = spine.num_levels();
        if !(self.budget.is_finite() && self.budget > 0.0) {
            return Err(Error::AllocationInvalid(format!(
                "budget must be positive, got {}",
                self.budget
            )));
        }
        if self.beta.len() != levels {
            return Err(Error::AllocationInvalid(format!(
                "beta has {} entries for {levels} geolevels",
                self.beta.len()
            )));
        }
        if let Some(b) = self.beta.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(Error::AllocationInvalid(format!(
                "beta entries must be positive, got {b}"
            )));
        }
        let beta_sum: f64 = self.beta.iter().sum();
        if (beta_sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::AllocationInvalid(format!("beta sums to {beta_sum}")));
        }
        if self.alpha.len() != levels {
            return Err(Error::AllocationInvalid(format!(
                "alpha has {} levels for {levels} geolevels",
                self.alpha.len()
            )));
        }
        for (l, row) in self.alpha.iter().enumerate() {
            if row.is_empty() || row.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
                return Err(Error::AllocationInvalid(format!(
                    "alpha for geolevel {} must be non-empty and positive",
                    l + 1
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > SUM_TOLERANCE {
                return Err(Error::AllocationInvalid(format!(
                    "alpha for geolevel {} sums to {s}",
                    l + 1
                )));
            }
        }
        if self.gamma.len() != levels
            || self
                .gamma
                .iter()
                .zip(spine.level_sizes())
                .any(|(row, n)| row.len() != n)
        {
            return Err(Error::AllocationInvalid(
                "gamma does not match the spine's geounits".into(),
            ));
        }
        for (l, row) in self.gamma.iter().enumerate() {
            if let Some(u) = row.iter().position(|g| !(g.is_finite() && *g >= 0.0)) {
                return Err(Error::AllocationInvalid(format!(
                    "gamma of {} must be finite and nonnegative",
                    GeounitId::new(l, u)
                )));
            }
        }
        Ok(())
    }

    /// Checks that level `l` has one alpha entry per query group.
    pub fn check_query_groups(&self, level: usize, groups: usize) -> Result<()> {
        if self.alpha[level].len() != groups {
            return Err(Error::DimensionMismatch(format!(
                "geolevel {} has {} alpha entries for {groups} query groups",
                level + 1,
                self.alpha[level].len()
            )));
        }
        Ok(())
    }
}
