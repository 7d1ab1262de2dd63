// Copyright (c) 2026 The geospine Authors
// SPDX-License-Identifier: Apache-2.0

//! Report writers. Output depends only on the inputs, so equal runs give
//! byte-identical files.

use serde_json::json;

use crate::matmech::VarianceEntry;
use crate::privacy::{Conversion, Measurement, PrivacyAudit};
use crate::spine::{GeounitId, Spine};

/// 1-based index of a geounit as written in files; block ids at the block
/// level.
pub fn file_index(spine: &Spine, id: GeounitId) -> usize {
    if id.level == spine.block_level() {
        spine.block_id(id.index) + 1
    } else {
        id.index + 1
    }
}

pub fn variance_csv(spine: &Spine, entries: &[VarianceEntry]) -> String {
    let mut out = String::from("level,geounit,query_group,query_index,expected_squared_error\n");
    for e in entries {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            e.geounit.level + 1,
            file_index(spine, e.geounit),
            e.query_group + 1,
            e.query_index + 1,
            e.value
        ));
    }
    out
}

/// Distances on the input spine, after regrouping and on the final spine.
pub fn osed_report_csv(
    names: &[String],
    before: &[u32],
    regrouped: &[u32],
    after: &[u32],
) -> String {
    let mut out = String::from("entity,osed_before,osed_regrouped,osed_after\n");
    for (((name, b), r), a) in names.iter().zip(before).zip(regrouped).zip(after) {
        out.push_str(&format!("{name},{b},{r},{a}\n"));
    }
    out
}

pub fn measurements_csv(spine: &Spine, measurements: &[Measurement]) -> String {
    let mut out =
        String::from("level,geounit,query_group,query_index,true_answer,noisy_answer,scale\n");
    for m in measurements {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            m.geounit.level + 1,
            file_index(spine, m.geounit),
            m.query_group + 1,
            m.query_index + 1,
            m.true_answer,
            m.noisy_answer,
            m.scale
        ));
    }
    out
}

/// Block-id-major estimate vector as `block_index,cell,estimate` rows.
pub fn estimate_csv(cells: usize, estimate: &[f64]) -> String {
    let mut out = String::from("block_index,cell,estimate\n");
    for (i, v) in estimate.iter().enumerate() {
        out.push_str(&format!("{},{},{v}\n", i / cells + 1, i % cells + 1));
    }
    out
}

/// Analytic variance next to the empirical mean squared error.
pub fn variance_comparison_csv(spine: &Spine, rows: &[(VarianceEntry, f64)]) -> String {
    let mut out = String::from(
        "level,geounit,query_group,query_index,expected_squared_error,empirical_mse,ratio\n",
    );
    for (e, mse) in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{mse},{}\n",
            e.geounit.level + 1,
            file_index(spine, e.geounit),
            e.query_group + 1,
            e.query_index + 1,
            e.value,
            mse / e.value
        ));
    }
    out
}

/// Audit report; `conversion` adds the (eps, delta) guarantee of a zCDP run.
pub fn audit_json(audit: &PrivacyAudit, conversion: Option<(f64, Conversion)>) -> String {
    let mut doc = json!({
        "budget_kind": audit.budget_kind,
        "budget": audit.budget,
        "achieved": audit.achieved,
        "worst_path_block": audit.worst_path_block + 1,
        "per_level": audit.per_level,
        "passes": audit.passes(),
    });
    if let Some((eps, c)) = conversion {
        doc["delta_for_eps"] = json!({ "eps": eps, "delta": c.delta, "alpha": c.alpha });
    }
    let mut s = serde_json::to_string_pretty(&doc).expect("audit serializes");
    s.push('\n');
    s
}
