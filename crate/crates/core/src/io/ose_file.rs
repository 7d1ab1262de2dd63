// Copyright (c) 2026 The geospine Authors
// SPDX-License-Identifier: Apache-2.0

//! Entity files: CSV with header `entity,block_index`, one member block per
//! row. Entities keep the order of their first row.

use crate::error::Result;
use crate::io::{content_lines, parse_error, parse_index};
use crate::osed::OseSet;

pub fn parse_oses(text: &str, file: &str, num_blocks: usize) -> Result<OseSet> {
    let mut lines = content_lines(text);
    match lines.next() {
        Some(l) if l.text.trim() == "entity,block_index" => {}
        Some(l) => {
            return Err(parse_error(
                file,
                l.number,
                1,
                "expected header `entity,block_index`",
            ))
        }
        None => {
            return Err(parse_error(
                file,
                1,
                1,
                "expected header `entity,block_index`",
            ))
        }
    }
    let mut entities: Vec<(String, Vec<usize>)> = Vec::new();
    for line in lines {
        let fields = line.fields(2);
        if fields.len() != 2 || fields[0].1.is_empty() {
            return Err(parse_error(
                file,
                line.number,
                1,
                "expected `entity,block_index`",
            ));
        }
        let name = fields[0].1;
        let block = parse_index(file, line.number, fields[1], "block_index")?;
        match entities.iter_mut().find(|(n, _)| n == name) {
            Some((_, members)) => {
                if members.contains(&block) {
                    return Err(parse_error(
                        file,
                        line.number,
                        fields[1].0,
                        format!("block {} listed twice for `{name}`", block + 1),
                    ));
                }
                members.push(block);
            }
            None => entities.push((name.to_string(), vec![block])),
        }
    }
    OseSet::from_members(num_blocks, entities)
}

pub fn emit_oses(oses: &OseSet) -> String {
    let mut out = String::from("entity,block_index\n");
    for (k, name) in oses.names().iter().enumerate() {
        for b in oses.members(k) {
            out.push_str(&format!("{name},{}\n", b + 1));
        }
    }
    out
}
