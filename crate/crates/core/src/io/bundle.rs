// Copyright (c) 2026 The geospine Authors
// SPDX-License-Identifier: Apache-2.0

//! A bundle is a directory holding `spine.txt`, `oses.csv`,
//! `allocation.json`, `workload.txt` and optionally `histogram.csv`.

use std::fs;
use std::path::{Path, PathBuf};

use crate::allocation::Allocation;
use crate::error::{Error, Result};
use crate::io::{
    emit_allocation, emit_histogram, emit_oses, emit_spine, emit_workload, parse_allocation,
    parse_histogram, parse_oses, parse_spine, parse_workload,
};
use crate::osed::OseSet;
use crate::privacy::Histogram;
use crate::spine::Spine;
use crate::workload::WorkloadPlan;

pub const SPINE_FILE: &str = "spine.txt";
pub const OSE_FILE: &str = "oses.csv";
pub const ALLOCATION_FILE: &str = "allocation.json";
pub const WORKLOAD_FILE: &str = "workload.txt";
pub const HISTOGRAM_FILE: &str = "histogram.csv";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BundlePaths {
    pub spine: PathBuf,
    pub oses: PathBuf,
    pub allocation: PathBuf,
    pub workload: PathBuf,
    pub histogram: Option<PathBuf>,
}

impl BundlePaths {
    /// Standard file names inside `dir`; the histogram is used when present.
    pub fn from_dir(dir: &Path) -> BundlePaths {
        let histogram = dir.join(HISTOGRAM_FILE);
        BundlePaths {
            spine: dir.join(SPINE_FILE),
            oses: dir.join(OSE_FILE),
            allocation: dir.join(ALLOCATION_FILE),
            workload: dir.join(WORKLOAD_FILE),
            histogram: histogram.exists().then_some(histogram),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bundle {
    pub spine: Spine,
    pub oses: OseSet,
    pub allocation: Allocation,
    pub workload: WorkloadPlan,
    pub histogram: Option<Histogram>,
}

fn read(path: &Path) -> Result<(String, String)> {
    let text = fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    Ok((text, path.display().to_string()))
}

pub fn load_bundle(paths: &BundlePaths) -> Result<Bundle> {
    let (text, name) = read(&paths.spine)?;
    let spine = parse_spine(&text, &name)?;
    let (text, name) = read(&paths.oses)?;
    let oses = parse_oses(&text, &name, spine.num_blocks())?;
    let (text, name) = read(&paths.allocation)?;
    let allocation = parse_allocation(&text, &name, &spine)?;
    let (text, name) = read(&paths.workload)?;
    let workload = parse_workload(&text, &name)?;
    workload
        .check_levels(spine.num_levels())
        .map_err(|e| Error::CrossRef(format!("{name}: {e}")))?;
    for l in 0..spine.num_levels() {
        allocation
            .check_query_groups(l, workload.for_level(l).num_groups())
            .map_err(|e| Error::CrossRef(e.to_string()))?;
    }
    let histogram = match &paths.histogram {
        Some(p) => {
            let (text, name) = read(p)?;
            Some(parse_histogram(
                &text,
                &name,
                spine.num_blocks(),
                workload.num_cells(),
            )?)
        }
        None => None,
    };
    Ok(Bundle {
        spine,
        oses,
        allocation,
        workload,
        histogram,
    })
}

/// Writes `bundle` into `dir` under the standard names.
pub fn write_bundle(dir: &Path, bundle: &Bundle) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(SPINE_FILE), emit_spine(&bundle.spine))?;
    fs::write(dir.join(OSE_FILE), emit_oses(&bundle.oses))?;
    fs::write(
        dir.join(ALLOCATION_FILE),
        emit_allocation(&bundle.allocation, &bundle.spine),
    )?;
    fs::write(dir.join(WORKLOAD_FILE), emit_workload(&bundle.workload))?;
    if let Some(h) = &bundle.histogram {
        fs::write(dir.join(HISTOGRAM_FILE), emit_histogram(h))?;
    }
    Ok(())
}
