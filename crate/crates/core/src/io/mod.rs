// Copyright (c) 2026 The geospine Authors
// SPDX-License-Identifier: Apache-2.0

//! Text formats for spines, entities, allocations, workloads, histograms and
//! reports. Indices in files are 1-based; block indices are block ids.

pub mod allocation_file;
pub mod bundle;
pub mod histogram_file;
pub mod ose_file;
pub mod reports;
pub mod spine_file;
pub mod workload_file;

pub use allocation_file::{emit_allocation, parse_allocation};
pub use bundle::{load_bundle, write_bundle, Bundle, BundlePaths};
pub use histogram_file::{emit_histogram, parse_histogram};
pub use ose_file::{emit_oses, parse_oses};
pub use spine_file::{emit_spine, parse_spine};
pub use workload_file::{emit_workload, parse_workload};

use crate::error::Error;

pub const FORMAT_VERSION: u32 = 1;

pub(crate) fn parse_error(
    file: &str,
    line: usize,
    column: usize,
    message: impl Into<String>,
) -> Error {
    Error::Parse {
        file: file.to_string(),
        line,
        column,
        message: message.into(),
    }
}

/// A non-blank, non-comment line with its 1-based number.
pub(crate) struct Line<'a> {
    pub number: usize,
    pub text: &'a str,
}

impl<'a> Line<'a> {
    /// Comma-separated fields with their 1-based starting columns. At most
    /// `max` fields are produced; the last one keeps any further commas.
    pub fn fields(&self, max: usize) -> Vec<(usize, &'a str)> {
        let mut out = Vec::new();
        let mut start = 0;
        let text = self.text;
        while out.len() + 1 < max {
            match text[start..].find(',') {
                Some(i) => {
                    out.push((start + 1, text[start..start + i].trim()));
                    start += i + 1;
                }
                None => break,
            }
        }
        out.push((start + 1, text[start..].trim()));
        out
    }
}

/// Lines that carry content; `#` starts a comment line.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = Line<'_>> {
    text.lines()
        .enumerate()
        .map(|(i, t)| Line {
            number: i + 1,
            text: t.trim_end_matches('\r'),
        })
        .filter(|l| {
            let t = l.text.trim();
            !t.is_empty() && !t.starts_with('#')
        })
}

/// Parses `key=value`, requiring the given key.
pub(crate) fn header_value<'a>(file: &str, line: &Line<'a>, key: &str) -> Result<&'a str, Error> {
    match line.text.split_once('=') {
        Some((k, v)) if k.trim() == key => Ok(v.trim()),
        _ => Err(parse_error(
            file,
            line.number,
            1,
            format!("expected `{key}=...`"),
        )),
    }
}

pub(crate) fn check_version(file: &str, line: Option<Line<'_>>) -> Result<(), Error> {
    let Some(line) = line else {
        return Err(parse_error(
            file,
            1,
            1,
            "empty file, expected `format_version=1`",
        ));
    };
    let v = header_value(file, &line, "format_version")?;
    if v != FORMAT_VERSION.to_string() {
        let column = line.text.find('=').map_or(1, |i| i + 2);
        return Err(parse_error(
            file,
            line.number,
            column,
            format!("unsupported format_version {v}"),
        ));
    }
    Ok(())
}

/// Parses a positive 1-based index and returns it 0-based.
pub(crate) fn parse_index(
    file: &str,
    line: usize,
    field: (usize, &str),
    what: &str,
) -> Result<usize, Error> {
    match field.1.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v - 1),
        _ => Err(parse_error(
            file,
            line,
            field.0,
            format!("{what} must be a positive integer, got `{}`", field.1),
        )),
    }
}
