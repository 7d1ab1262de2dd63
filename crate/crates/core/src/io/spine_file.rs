// Copyright (c) 2026 The geospine Authors
// SPDX-License-Identifier: Apache-2.0

//! Spine files.
//!
//! ```text
//! format_version=1
//! levels=3
//! root=US
//! 2,1,1,county A
//! 3,1,1,block 1
//! ```
//!
//! After the headers (`root` is optional) each line is
//! `level,index,parent_index,label` for one non-root geounit. Indices order
//! siblings; at the block level the index is the block id.

use crate::error::{Error, Result};
use crate::io::{check_version, content_lines, header_value, parse_error, parse_index};
use crate::spine::{NodeSpec, Spine};

const DEFAULT_ROOT_LABEL: &str = "1.1";

pub fn parse_spine(text: &str, file: &str) -> Result<Spine> {
    let mut lines = content_lines(text).peekable();
    check_version(file, lines.next())?;
    let Some(line) = lines.next() else {
        return Err(parse_error(file, 2, 1, "expected `levels=...`"));
    };
    let raw = header_value(file, &line, "levels")?;
    let levels: usize = match raw.parse() {
        Ok(v) if v >= 1 => v,
        _ => {
            return Err(parse_error(
                file,
                line.number,
                "levels=".len() + 1,
                format!("levels must be a positive integer, got `{raw}`"),
            ))
        }
    };
    let mut root_label = DEFAULT_ROOT_LABEL.to_string();
    if let Some(line) = lines.peek() {
        if line.text.trim_start().starts_with("root=") {
            root_label = header_value(file, line, "root")?.to_string();
            lines.next();
        }
    }

    // slots[level][index] = (parent, label, line number)
    let mut slots: Vec<Vec<Option<(usize, String, usize)>>> = vec![Vec::new(); levels];
    for line in lines {
        let fields = line.fields(4);
        if fields.len() < 4 {
            let column = line.text.len() + 1;
            return Err(parse_error(
                file,
                line.number,
                column,
                "expected `level,index,parent_index,label`",
            ));
        }
        let level = parse_index(file, line.number, fields[0], "level")?;
        if level == 0 || level >= levels {
            return Err(parse_error(
                file,
                line.number,
                fields[0].0,
                format!("level must be between 2 and {levels}"),
            ));
        }
        let index = parse_index(file, line.number, fields[1], "index")?;
        let parent = parse_index(file, line.number, fields[2], "parent_index")?;
        let row = &mut slots[level];
        if row.len() <= index {
            row.resize(index + 1, None);
        }
        if row[index].is_some() {
            return Err(parse_error(
                file,
                line.number,
                fields[1].0,
                format!("geounit ({},{}) is listed twice", level + 1, index + 1),
            ));
        }
        row[index] = Some((parent, fields[3].1.to_string(), line.number));
    }

    let mut draft: Vec<Vec<NodeSpec>> = Vec::with_capacity(levels);
    draft.push(vec![NodeSpec {
        label: root_label,
        parent: None,
        key: 0,
    }]);
    for (level, row) in slots.into_iter().enumerate().skip(1) {
        if row.is_empty() {
            return Err(Error::CrossRef(format!(
                "geolevel {} has no geounits",
                level + 1
            )));
        }
        let upper = draft[level - 1].len();
        let mut nodes = Vec::with_capacity(row.len());
        for (index, slot) in row.into_iter().enumerate() {
            let Some((parent, label, number)) = slot else {
                return Err(Error::CrossRef(format!(
                    "geolevel {} skips index {}",
                    level + 1,
                    index + 1
                )));
            };
            if parent >= upper {
                return Err(parse_error(
                    file,
                    number,
                    1,
                    format!("parent ({},{}) does not exist", level, parent + 1),
                ));
            }
            nodes.push(NodeSpec {
                label,
                parent: Some(parent),
                key: index,
            });
        }
        draft.push(nodes);
    }
    Spine::from_nodes(draft)
}

pub fn emit_spine(spine: &Spine) -> String {
    let mut out = format!(
        "format_version=1\nlevels={}\nroot={}\n",
        spine.num_levels(),
        spine.root().label()
    );
    let last = spine.block_level();
    for level in 1..spine.num_levels() {
        for (pos, unit) in spine.level(level).iter().enumerate() {
            let index = if level == last {
                spine.block_id(pos)
            } else {
                pos
            };
            out.push_str(&format!(
                "{},{},{},{}\n",
                level + 1,
                index + 1,
                unit.parent().expect("non-root geounit") + 1,
                unit.label()
            ));
        }
    }
    out
}
