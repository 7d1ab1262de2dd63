// Copyright (c) 2026 The geospine Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

use crate::spine::GeounitId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("spine is not a single rooted tree: {0}")]
    CycleOrForest(String),

    #[error("geounit {child} names parent {parent}, which is not exactly one level up")]
    LevelSkip { child: GeounitId, parent: GeounitId },

    #[error("geounit {0} is above the block level but has no children")]
    EmptyGeounit(GeounitId),

    #[error("geounits {0} and {1} are not distinct siblings")]
    NotSiblings(GeounitId, GeounitId),

    #[error("geounit {0} does not exist on this spine")]
    UnknownGeounit(GeounitId),

    #[error("membership for entity `{entity}` covers {found} blocks, spine has {expected}")]
    MembershipMissing {
        entity: String,
        expected: usize,
        found: usize,
    },

    #[error("exhaustive search over {geounits} geounits exceeds the cap of {cap}")]
    TooLarge { geounits: usize, cap: usize },

    #[error("operation needs at least {required} geolevels, spine has {levels}")]
    LevelConvention { levels: usize, required: usize },

    #[error("children of {0} carry unequal proportions")]
    UnequalChildGamma(GeounitId),

    #[error("geounit {0} is the root or a block and cannot be bypassed")]
    RootOrLeaf(GeounitId),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("invalid allocation: {0}")]
    AllocationInvalid(String),

    #[error("solver failed to converge: {0}")]
    Convergence(String),

    #[error("{file}:{line}:{column}: {message}")]
    Parse {
        file: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("inconsistent bundle: {0}")]
    CrossRef(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
