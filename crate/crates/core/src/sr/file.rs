//! Text format for custom structures:
//!
//! ```text
//! # comments start with '#'
//! name = heisenberg
//! n = 3                      # optional, must match coords
//! d = 2                      # optional, must match the number of `field` lines
//! coords = x, y, t
//! field X = 1, 0, -y/2       # horizontal, declared orthonormal
//! field Y = 0, 1, x/2
//! complement T = 0, 0, 1
//! density = 1                # optional, default 1
//! ranks = 2, 3               # optional, computed numerically when absent
//! ```
//!
//! Coefficients are arithmetic expressions in the coordinate names; functions
//! are spelled `math::sqrt`, `math::exp`, … Integer literals divide as integers
//! (`1/2` is 0), so write `1.0/2` or `0.5`.

use std::path::Path;
use std::sync::Arc;

use super::brackets::{default_sample_points, filtration_ranks};
use super::structure::{SubRiemannianStructure, VectorFieldSpec};
use crate::error::{Error, Result};
use crate::function::{CompiledExpr, ScalarFn};

const RANK_TOLERANCE: f64 = 1e-6;
const RANK_SAMPLES: usize = 5;

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Top-level comma split, returning each piece with its 1-based column.
fn split_list(text: &str, column: usize) -> Vec<(String, usize)> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in text.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push((start, i));
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push((start, text.len()));
    out.into_iter()
        .map(|(s, e)| {
            let piece = &text[s..e];
            let lead = piece.len() - piece.trim_start().len();
            (piece.trim().to_string(), column + s + lead)
        })
        .collect()
}

fn compile_fn(source: &str, coords: &[String], line: usize, column: usize) -> Result<ScalarFn> {
    if source.is_empty() {
        return Err(parse_err(line, column, "empty expression"));
    }
    if let Ok(c) = source.parse::<f64>() {
        return Ok(ScalarFn::Const(c));
    }
    Ok(ScalarFn::Expr(Arc::new(CompiledExpr::compile(
        source, coords, line, column,
    )?)))
}

struct PendingField {
    label: String,
    horizontal: bool,
    line: usize,
    pieces: Vec<(String, usize)>,
}

/// Parses a structure definition; errors carry 1-based line and column.
pub fn parse_structure(text: &str) -> Result<SubRiemannianStructure> {
    let mut name: Option<String> = None;
    let mut n_decl: Option<(usize, usize)> = None;
    let mut d_decl: Option<(usize, usize)> = None;
    let mut coords: Option<Vec<String>> = None;
    let mut fields: Vec<PendingField> = Vec::new();
    let mut density: Option<(String, usize, usize)> = None;
    let mut ranks: Option<Vec<usize>> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let Some(eq) = content.find('=') else {
            let col = content.len() - content.trim_start().len() + 1;
            return Err(parse_err(line, col, "expected `key = value`"));
        };
        let key = content[..eq].trim();
        let key_col = content.len() - content.trim_start().len() + 1;
        let value_raw = &content[eq + 1..];
        let value_col = eq + 2 + (value_raw.len() - value_raw.trim_start().len());
        let value = value_raw.trim();
        let mut words = key.split_whitespace();
        let head = words.next().unwrap_or("");
        let label = words.next();
        if words.next().is_some() {
            return Err(parse_err(line, key_col, format!("unexpected key `{key}`")));
        }
        let parse_usize = |s: &str, col: usize| -> Result<usize> {
            s.parse::<usize>().map_err(|_| {
                parse_err(
                    line,
                    col,
                    format!("expected a non-negative integer, got `{s}`"),
                )
            })
        };
        match (head, label) {
            ("name", None) => name = Some(value.to_string()),
            ("n", None) => n_decl = Some((parse_usize(value, value_col)?, line)),
            ("d", None) => d_decl = Some((parse_usize(value, value_col)?, line)),
            ("coords", None) => {
                let list: Vec<String> = split_list(value, value_col)
                    .into_iter()
                    .map(|(s, col)| {
                        let ok = !s.is_empty()
                            && s.chars()
                                .next()
                                .is_some_and(|c| c.is_alphabetic() || c == '_')
                            && s.chars().all(|c| c.is_alphanumeric() || c == '_');
                        if ok {
                            Ok(s)
                        } else {
                            Err(parse_err(
                                line,
                                col,
                                format!("invalid coordinate name `{s}`"),
                            ))
                        }
                    })
                    .collect::<Result<_>>()?;
                coords = Some(list);
            }
            ("field" | "complement", Some(lbl)) => fields.push(PendingField {
                label: lbl.to_string(),
                horizontal: head == "field",
                line,
                pieces: split_list(value, value_col),
            }),
            ("density", None) => density = Some((value.to_string(), line, value_col)),
            ("ranks", None) => {
                ranks = Some(
                    split_list(value, value_col)
                        .into_iter()
                        .map(|(s, col)| parse_usize(&s, col))
                        .collect::<Result<_>>()?,
                )
            }
            _ => return Err(parse_err(line, key_col, format!("unknown key `{key}`"))),
        }
    }

    let coords = coords.ok_or_else(|| parse_err(1, 1, "missing `coords` line"))?;
    let n = coords.len();
    if let Some((nd, line)) = n_decl {
        if nd != n {
            return Err(parse_err(
                line,
                1,
                format!("n = {nd} but {n} coordinates are listed"),
            ));
        }
    }
    let mut horizontal = Vec::new();
    let mut complement = Vec::new();
    for f in &fields {
        if f.pieces.len() != n {
            return Err(parse_err(
                f.line,
                1,
                format!(
                    "field `{}` has {} coefficients, expected {n}",
                    f.label,
                    f.pieces.len()
                ),
            ));
        }
        let coeffs = f
            .pieces
            .iter()
            .map(|(src, col)| compile_fn(src, &coords, f.line, *col))
            .collect::<Result<Vec<_>>>()?;
        let spec = VectorFieldSpec::new(f.label.clone(), coeffs);
        if f.horizontal {
            horizontal.push(spec);
        } else {
            complement.push(spec);
        }
    }
    if let Some((dd, line)) = d_decl {
        if dd != horizontal.len() {
            return Err(parse_err(
                line,
                1,
                format!(
                    "d = {dd} but {} horizontal fields are listed",
                    horizontal.len()
                ),
            ));
        }
    }
    let density = match density {
        Some((src, line, col)) => compile_fn(&src, &coords, line, col)?,
        None => ScalarFn::one(),
    };
    let name = name.unwrap_or_else(|| "custom".to_string());
    let declared = ranks.is_some();
    // Ranks are provisional until measured: [d, n] always passes validation.
    let provisional = ranks.clone().unwrap_or_else(|| {
        let d = horizontal.len();
        if d == n || d == 0 {
            vec![n]
        } else {
            vec![d, n]
        }
    });
    let s = SubRiemannianStructure::new(
        name.clone(),
        coords.clone(),
        horizontal.clone(),
        complement.clone(),
        provisional,
        density.clone(),
    )?;
    if declared {
        return Ok(s);
    }
    let measured = filtration_ranks(&s, &default_sample_points(n, RANK_SAMPLES), RANK_TOLERANCE)?;
    SubRiemannianStructure::new(name, coords, horizontal, complement, measured, density)
}

pub fn load_structure(path: &Path) -> Result<SubRiemannianStructure> {
    let text = std::fs::read_to_string(path)?;
    parse_structure(&text)
}
