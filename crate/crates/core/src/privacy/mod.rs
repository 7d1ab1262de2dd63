// Copyright (c) 2026 The geospine Authors
// SPDX-License-Identifier: Apache-2.0

//! Privacy accounting, budget conversion, noise samplers and the noisy
//! measurement mechanism.

pub mod audit;
pub mod conversion;
pub mod mechanism;
pub mod noise;

pub use audit::{audit, audit_pure, audit_zcdp, PrivacyAudit, AUDIT_TOLERANCE};
pub use conversion::{log_objective, zcdp_to_approx_dp, Conversion};
pub use mechanism::{run_mechanism, run_mechanism_replication, Histogram, Measurement, NoiseMode};
pub use noise::{sample, sample_one, NoiseFamily, NoiseSpec};
