//! Compact text format for edge configurations.
//!
//! ```text
//! strip K=2 model=standard
//! -1 H: V:1101
//! 0 H:11011 V:1111
//! 1 H:10111 V:0111
//! ```
//!
//! The header names the half-width and model. Each following line is one
//! column `i H:<bits> V:<bits>`, bits in row order from `-K` to `K`, `1` for
//! open and `0` for closed. `H` lists the horizontal edges `(i, j) -> (i+1, j)`
//! and `V` the vertical edges of column `i + 1`; line `-1` carries only the
//! verticals of column 0. Cross-model lines have an empty `V:` field. Blank
//! lines and lines starting with `#` are ignored.

use std::fmt;
use std::str::FromStr;

use super::{EdgeColumn, Model, StripEdges, StripGeometry};
use crate::error::{Error, Result};

fn write_bits(f: &mut fmt::Formatter<'_>, bits: &[bool]) -> fmt::Result {
    for &b in bits {
        f.write_str(if b { "1" } else { "0" })?;
    }
    Ok(())
}

impl fmt::Display for StripEdges {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "strip K={} model={}", self.geometry.k(), self.geometry.model())?;
        if let Some(v) = &self.column0_vertical {
            f.write_str("-1 H: V:")?;
            write_bits(f, v)?;
            writeln!(f)?;
        }
        for (i, col) in self.columns.iter().enumerate() {
            write!(f, "{i} H:")?;
            write_bits(f, &col.horizontal)?;
            f.write_str(" V:")?;
            if let Some(v) = &col.vertical {
                write_bits(f, v)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn parse_bits(field: &str, prefix: &str, line: usize) -> Result<Vec<bool>> {
    let bits = field
        .strip_prefix(prefix)
        .ok_or_else(|| Error::Parse { line, reason: format!("expected `{prefix}` field, got `{field}`") })?;
    bits.chars()
        .map(|c| match c {
            '1' => Ok(true),
            '0' => Ok(false),
            other => Err(Error::Parse { line, reason: format!("invalid bit `{other}`") }),
        })
        .collect()
}

fn parse_header(text: &str, line: usize) -> Result<StripGeometry> {
    let err = |reason: String| Error::Parse { line, reason };
    let mut words = text.split_whitespace();
    if words.next() != Some("strip") {
        return Err(err("missing `strip` header".into()));
    }
    let mut k = None;
    let mut model = None;
    for w in words {
        if let Some(v) = w.strip_prefix("K=") {
            k = Some(v.parse::<usize>().map_err(|e| err(format!("bad K: {e}")))?);
        } else if let Some(v) = w.strip_prefix("model=") {
            model = Some(match v {
                "cross" => Model::Cross,
                "standard" => Model::Standard,
                other => return Err(err(format!("unknown model `{other}`"))),
            });
        } else {
            return Err(err(format!("unexpected header field `{w}`")));
        }
    }
    let (Some(k), Some(model)) = (k, model) else {
        return Err(err("header needs K= and model=".into()));
    };
    StripGeometry::new(k, model).map_err(|e| err(e.to_string()))
}

impl FromStr for StripEdges {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines =
            s.lines().enumerate().map(|(n, l)| (n + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse { line: 0, reason: "empty input".into() })?;
        let geometry = parse_header(header, hline)?;
        let mut column0_vertical = None;
        let mut columns = Vec::new();
        for (line, text) in lines {
            let fields: Vec<&str> = text.split_whitespace().collect();
            let (index, h, v) = match fields.as_slice() {
                [i, h, v] => (*i, *h, *v),
                _ => return Err(Error::Parse { line, reason: "expected `i H:<bits> V:<bits>`".into() }),
            };
            let index: i64 =
                index.parse().map_err(|e| Error::Parse { line, reason: format!("bad column index: {e}") })?;
            let horizontal = parse_bits(h, "H:", line)?;
            let vertical = parse_bits(v, "V:", line)?;
            if index == -1 {
                if !horizontal.is_empty() || column0_vertical.is_some() || !columns.is_empty() {
                    return Err(Error::Parse { line, reason: "misplaced column -1 line".into() });
                }
                column0_vertical = Some(vertical);
                continue;
            }
            if index != columns.len() as i64 {
                return Err(Error::Parse { line, reason: format!("expected column {}, got {index}", columns.len()) });
            }
            let vertical = match geometry.model() {
                Model::Cross if vertical.is_empty() => None,
                Model::Cross => {
                    return Err(Error::Parse { line, reason: "cross model lines have no verticals".into() })
                }
                Model::Standard => Some(vertical),
            };
            let col = EdgeColumn { horizontal, vertical };
            col.check(&geometry).map_err(|e| Error::Parse { line, reason: e.to_string() })?;
            columns.push(col);
        }
        StripEdges::new(geometry, column0_vertical, columns)
    }
}
