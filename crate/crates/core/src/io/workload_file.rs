// Copyright (c) 2026 The geospine Authors
// SPDX-License-Identifier: Apache-2.0

//! Workload files.
//!
//! ```text
//! format_version=1
//! dims=2,2
//! 1(2)*1(2)
//! I(2)*I(2)
//! ```
//!
//! One query group per line. A file may instead split the groups into
//! `[level l]` sections, one for every geolevel.

use crate::error::{Error, Result};
use crate::io::{check_version, content_lines, header_value, parse_error};
use crate::workload::{QueryGroupSpec, Workload, WorkloadPlan};

pub fn parse_workload(text: &str, file: &str) -> Result<WorkloadPlan> {
    let mut lines = content_lines(text);
    check_version(file, lines.next())?;
    let Some(line) = lines.next() else {
        return Err(parse_error(file, 2, 1, "expected `dims=...`"));
    };
    let raw = header_value(file, &line, "dims")?;
    let offset = line.text.find('=').map_or(0, |i| i + 1);
    let mut dims = Vec::new();
    let mut column = offset + 1;
    for part in raw.split(',') {
        match part.trim().parse::<usize>() {
            Ok(d) if d >= 1 => dims.push(d),
            _ => {
                return Err(parse_error(
                    file,
                    line.number,
                    column,
                    format!(
                        "dimension must be a positive integer, got `{}`",
                        part.trim()
                    ),
                ))
            }
        }
        column += part.len() + 1;
    }

    // sections[0] collects groups outside any section
    let mut sections: Vec<Vec<QueryGroupSpec>> = vec![Vec::new()];
    let mut current = 0;
    for line in lines {
        let t = line.text.trim();
        if let Some(inner) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            let level = inner
                .strip_prefix("level")
                .and_then(|n| n.trim().parse::<usize>().ok())
                .filter(|&n| n >= 1)
                .ok_or_else(|| parse_error(file, line.number, 1, "expected `[level <n>]`"))?;
            if level != sections.len() {
                return Err(parse_error(
                    file,
                    line.number,
                    1,
                    format!("expected section [level {}]", sections.len()),
                ));
            }
            sections.push(Vec::new());
            current = level;
            continue;
        }
        let spec: QueryGroupSpec = t.parse().map_err(|e: String| {
            parse_error(file, line.number, 1, format!("bad query group `{t}`: {e}"))
        })?;
        if spec.dims() != dims {
            return Err(parse_error(
                file,
                line.number,
                1,
                format!(
                    "query group `{t}` has sizes {:?}, schema is {:?}",
                    spec.dims(),
                    dims
                ),
            ));
        }
        sections[current].push(spec);
    }
    if sections.len() == 1 {
        return Ok(WorkloadPlan::Uniform(Workload::new(
            dims,
            sections.pop().unwrap(),
        )?));
    }
    if !sections[0].is_empty() {
        return Err(Error::CrossRef(format!(
            "{file}: query groups appear before the first [level] section"
        )));
    }
    let per_level = sections
        .into_iter()
        .skip(1)
        .enumerate()
        .map(|(l, groups)| {
            Workload::new(dims.clone(), groups)
                .map_err(|e| Error::CrossRef(format!("{file}: level {}: {e}", l + 1)))
        })
        .collect::<Result<_>>()?;
    Ok(WorkloadPlan::PerLevel(per_level))
}

pub fn emit_workload(plan: &WorkloadPlan) -> String {
    let dims = plan.for_level(0).dims();
    let dims: Vec<String> = dims.iter().map(ToString::to_string).collect();
    let mut out = format!("format_version=1\ndims={}\n", dims.join(","));
    let write = |out: &mut String, w: &Workload| {
        for spec in w.specs() {
            out.push_str(&format!("{spec}\n"));
        }
    };
    match plan {
        WorkloadPlan::Uniform(w) => write(&mut out, w),
        WorkloadPlan::PerLevel(ws) => {
            for (l, w) in ws.iter().enumerate() {
                out.push_str(&format!("[level {}]\n", l + 1));
                write(&mut out, w);
            }
        }
    }
    out
}
