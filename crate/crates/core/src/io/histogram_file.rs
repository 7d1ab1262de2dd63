// Copyright (c) 2026 The geospine Authors
// SPDX-License-Identifier: Apache-2.0

//! Histogram files: CSV with header `block_index,cell,count`. Cells are
//! numbered from 1 with the last schema attribute varying fastest; omitted
//! entries are zero.

use crate::error::Result;
use crate::io::{content_lines, parse_error, parse_index};
use crate::privacy::Histogram;

pub fn parse_histogram(
    text: &str,
    file: &str,
    num_blocks: usize,
    cells: usize,
) -> Result<Histogram> {
    let mut lines = content_lines(text);
    match lines.next() {
        Some(l) if l.text.trim() == "block_index,cell,count" => {}
        Some(l) => {
            return Err(parse_error(
                file,
                l.number,
                1,
                "expected header `block_index,cell,count`",
            ))
        }
        None => {
            return Err(parse_error(
                file,
                1,
                1,
                "expected header `block_index,cell,count`",
            ))
        }
    }
    let mut hist = Histogram::zeros(num_blocks, cells);
    let mut seen = vec![false; num_blocks * cells];
    for line in lines {
        let fields = line.fields(3);
        if fields.len() != 3 {
            return Err(parse_error(
                file,
                line.number,
                1,
                "expected `block_index,cell,count`",
            ));
        }
        let block = parse_index(file, line.number, fields[0], "block_index")?;
        if block >= num_blocks {
            return Err(parse_error(
                file,
                line.number,
                fields[0].0,
                format!("block {} is not on the {num_blocks}-block spine", block + 1),
            ));
        }
        let cell = parse_index(file, line.number, fields[1], "cell")?;
        if cell >= cells {
            return Err(parse_error(
                file,
                line.number,
                fields[1].0,
                format!("cell {} exceeds the {cells}-cell schema", cell + 1),
            ));
        }
        let count: u64 = fields[2].1.parse().map_err(|_| {
            parse_error(
                file,
                line.number,
                fields[2].0,
                format!("count must be a nonnegative integer, got `{}`", fields[2].1),
            )
        })?;
        if std::mem::replace(&mut seen[block * cells + cell], true) {
            return Err(parse_error(file, line.number, 1, "entry listed twice"));
        }
        hist.set(block, cell, count);
    }
    Ok(hist)
}

/// Writes every nonzero count.
pub fn emit_histogram(hist: &Histogram) -> String {
    let mut out = String::from("block_index,cell,count\n");
    for b in 0..hist.num_blocks() {
        for c in 0..hist.cells() {
            let v = hist.get(b, c);
            if v != 0 {
                out.push_str(&format!("{},{},{v}\n", b + 1, c + 1));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = "block_index,cell,count\n1,2,5\n2,4,1\n";
        let h = parse_histogram(text, "h.csv", 2, 4).unwrap();
        assert_eq!(h.counts(), &[0, 5, 0, 0, 0, 0, 0, 1]);
        assert_eq!(emit_histogram(&h), text);
    }

    #[test]
    fn rejects_negative_counts() {
        assert!(parse_histogram("block_index,cell,count\n1,1,-3\n", "h", 1, 1).is_err());
    }
}
