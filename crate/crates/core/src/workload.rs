// Copyright (c) 2026 The geospine Authors
// SPDX-License-Identifier: Apache-2.0

//! Query groups written as Kronecker products of identity and ones-row
//! factors over the histogram schema, e.g. `I(63)*1(2)*I(2)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    /// `I(k)`: keep the attribute.
    Identity(usize),
    /// `1(k)`: sum the attribute out.
    Ones(usize),
}

impl Factor {
    pub fn size(self) -> usize {
        match self {
            Factor::Identity(k) | Factor::Ones(k) => k,
        }
    }

    fn rows(self) -> usize {
        match self {
            Factor::Identity(k) => k,
            Factor::Ones(_) => 1,
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::Identity(k) => write!(f, "I({k})"),
            Factor::Ones(k) => write!(f, "1({k})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryGroupSpec {
    factors: Vec<Factor>,
}

impl QueryGroupSpec {
    pub fn new(factors: Vec<Factor>) -> Result<QueryGroupSpec> {
        if factors.is_empty() || factors.iter().any(|f| f.size() == 0) {
            return Err(Error::DimensionMismatch(
                "query groups need at least one factor of positive size".into(),
            ));
        }
        Ok(QueryGroupSpec { factors })
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.size()).collect()
    }

    pub fn num_cells(&self) -> usize {
        self.factors.iter().map(|f| f.size()).product()
    }

    pub fn num_rows(&self) -> usize {
        self.factors.iter().map(|f| f.rows()).product()
    }

    /// Realizes the Kronecker product. Each cell lands in exactly one row.
    pub fn realize(&self) -> QueryGroup {
        let n = self.num_cells();
        let mut row_of_cell = Vec::with_capacity(n);
        let dims = self.dims();
        let mut coords = vec![0usize; dims.len()];
        for _ in 0..n {
            let mut row = 0;
            for (f, &c) in self.factors.iter().zip(&coords) {
                if let Factor::Identity(k) = f {
                    row = row * k + c;
                }
            }
            row_of_cell.push(row);
            // advance mixed-radix counter, last attribute fastest
            for d in (0..dims.len()).rev() {
                coords[d] += 1;
                if coords[d] < dims[d] {
                    break;
                }
                coords[d] = 0;
            }
        }
        QueryGroup {
            rows: self.num_rows(),
            row_of_cell,
        }
    }
}

impl fmt::Display for QueryGroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, factor) in self.factors.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            write!(f, "{factor}")?;
        }
        Ok(())
    }
}

impl FromStr for QueryGroupSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let mut factors = Vec::new();
        for part in s.split('*') {
            let part = part.trim();
            let (kind, rest) = part
                .split_once('(')
                .ok_or_else(|| format!("expected `I(k)` or `1(k)`, found `{part}`"))?;
            let size = rest
                .strip_suffix(')')
                .ok_or_else(|| format!("unclosed factor `{part}`"))?
                .trim()
                .parse::<usize>()
                .map_err(|e| format!("bad factor size in `{part}`: {e}"))?;
            if size == 0 {
                return Err(format!("factor `{part}` has size zero"));
            }
            factors.push(match kind.trim() {
                "I" => Factor::Identity(size),
                "1" => Factor::Ones(size),
                other => return Err(format!("unknown factor kind `{other}`")),
            });
        }
        QueryGroupSpec::new(factors).map_err(|e| e.to_string())
    }
}

/// A realized query group: a 0/1 matrix with one nonzero per column,
/// stored as the row index of every cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryGroup {
    rows: usize,
    row_of_cell: Vec<usize>,
}

impl QueryGroup {
    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.row_of_cell.len()
    }

    pub fn row_of_cell(&self, cell: usize) -> usize {
        self.row_of_cell[cell]
    }

    /// Cells summed by each row.
    pub fn cells_by_row(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.rows];
        for (cell, &r) in self.row_of_cell.iter().enumerate() {
            out[r].push(cell);
        }
        out
    }

    /// Answers of every row on a histogram over this group's cells.
    pub fn answer(&self, cells: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (&r, &x) in self.row_of_cell.iter().zip(cells) {
            out[r] += x;
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows, self.ncols());
        for (c, &r) in self.row_of_cell.iter().enumerate() {
            m[(r, c)] = 1.0;
        }
        m
    }
}

/// Vertically stacked query groups over one histogram schema.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Workload {
    dims: Vec<usize>,
    groups: Vec<QueryGroupSpec>,
    realized: Vec<QueryGroup>,
}

impl Workload {
    pub fn new(dims: Vec<usize>, groups: Vec<QueryGroupSpec>) -> Result<Workload> {
        if groups.is_empty() {
            return Err(Error::DimensionMismatch(
                "workload has no query groups".into(),
            ));
        }
        for g in &groups {
            if g.dims() != dims {
                return Err(Error::DimensionMismatch(format!(
                    "query group `{g}` has factor sizes {:?}, schema is {:?}",
                    g.dims(),
                    dims
                )));
            }
        }
        let realized = groups.iter().map(QueryGroupSpec::realize).collect();
        Ok(Workload {
            dims,
            groups,
            realized,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn specs(&self) -> &[QueryGroupSpec] {
        &self.groups
    }

    pub fn groups(&self) -> &[QueryGroup] {
        &self.realized
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    /// Histogram cells per geounit, `n`.
    pub fn num_cells(&self) -> usize {
        self.dims.iter().product()
    }

    /// Total queries per geounit, `m`.
    pub fn num_rows(&self) -> usize {
        self.realized.iter().map(QueryGroup::nrows).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.num_cells();
        let mut m = DMatrix::zeros(self.num_rows(), n);
        let mut offset = 0;
        for g in &self.realized {
            for c in 0..n {
                m[(offset + g.row_of_cell(c), c)] = 1.0;
            }
            offset += g.nrows();
        }
        m
    }

    /// `W^T alpha`: the alpha-weighted column sums. Equal to one in every
    /// cell when `alpha` sums to one.
    pub fn weighted_column_sums(&self, alpha: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_cells()];
        for (_, &a) in self.realized.iter().zip(alpha) {
            for v in out.iter_mut() {
                *v += a;
            }
        }
        out
    }
}

/// The query groups measured in each geolevel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WorkloadPlan {
    /// One workload shared by every geolevel.
    Uniform(Workload),
    /// A workload per geolevel; used by audits and the mechanism only.
    PerLevel(Vec<Workload>),
}

impl WorkloadPlan {
    pub fn for_level(&self, level: usize) -> &Workload {
        match self {
            WorkloadPlan::Uniform(w) => w,
            WorkloadPlan::PerLevel(ws) => &ws[level],
        }
    }

    pub fn uniform(&self) -> Option<&Workload> {
        match self {
            WorkloadPlan::Uniform(w) => Some(w),
            WorkloadPlan::PerLevel(_) => None,
        }
    }

    pub fn num_cells(&self) -> usize {
        self.for_level(0).num_cells()
    }

    pub fn check_levels(&self, levels: usize) -> Result<()> {
        if let WorkloadPlan::PerLevel(ws) = self {
            if ws.len() != levels {
                return Err(Error::DimensionMismatch(format!(
                    "{} per-level workloads for {levels} geolevels",
                    ws.len()
                )));
            }
            let n = ws[0].num_cells();
            if ws.iter().any(|w| w.num_cells() != n) {
                return Err(Error::DimensionMismatch(
                    "per-level workloads disagree on the histogram size".into(),
                ));
            }
        }
        Ok(())
    }
}
