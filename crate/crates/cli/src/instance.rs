//! `NCP-INSTANCE v1` text format.
//!
//! ```text
//! NCP-INSTANCE v1 circular
//! seed 7
//! omega 1 1
//! 5.2359877559829882e-1
//! A 2 3
//! ...
//! ```
//!
//! A line with two tokens is an integer parameter, a line with three tokens
//! opens a dense block of `rows` lines with `cols` values each.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use conewton::problems::lowrank::CompletionInstance;
use conewton::problems::CircularConeInstance;
use conewton::{Matrix, Vector};
use thiserror::Error;

pub const MAGIC: &str = "NCP-INSTANCE";
pub const VERSION: &str = "v1";

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Header { line: usize, message: String },
    #[error("line {line}: {message}")]
    Body { line: usize, message: String },
    #[error("missing {0}")]
    Missing(&'static str),
    #[error("invalid instance: {0}")]
    Invalid(String),
}

impl ParseError {
    pub fn is_header(&self) -> bool {
        matches!(self, ParseError::Header { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Circular(CircularConeInstance),
    Lowrank(CompletionInstance),
}

impl Instance {
    pub fn kind(&self) -> &'static str {
        match self {
            Instance::Circular(_) => "circular",
            Instance::Lowrank(_) => "lowrank",
        }
    }
}

fn put_block(out: &mut String, name: &str, m: &Matrix) {
    writeln!(out, "{name} {} {}", m.nrows(), m.ncols()).unwrap();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.16e}", m[(i, j)])).collect();
        writeln!(out, "{}", row.join(" ")).unwrap();
    }
}

fn put_vector(out: &mut String, name: &str, v: &Vector) {
    put_block(out, name, &Matrix::from_column_slice(v.len(), 1, v.as_slice()));
}

fn put_scalar(out: &mut String, name: &str, v: f64) {
    put_block(out, name, &Matrix::from_element(1, 1, v));
}

pub fn write(instance: &Instance) -> String {
    let mut out = format!("{MAGIC} {VERSION} {}\n", instance.kind());
    match instance {
        Instance::Circular(c) => {
            writeln!(out, "seed {}", c.seed).unwrap();
            put_scalar(&mut out, "omega", c.omega);
            put_block(&mut out, "A", &c.a);
            put_vector(&mut out, "b", &c.b);
            put_vector(&mut out, "c", &c.c);
            put_vector(&mut out, "planted_x", &c.planted_x);
            put_vector(&mut out, "planted_y", &c.planted_y);
            put_vector(&mut out, "planted_slack", &c.planted_slack);
        }
        Instance::Lowrank(l) => {
            writeln!(out, "seed {}", l.seed).unwrap();
            writeln!(out, "r_max {}", l.r_max).unwrap();
            put_scalar(&mut out, "p", l.p);
            put_block(&mut out, "Mask", &l.mask);
            put_block(&mut out, "G", &l.g);
            put_block(&mut out, "planted", &l.planted);
        }
    }
    out
}

#[derive(Default)]
struct Fields {
    ints: BTreeMap<String, u64>,
    blocks: BTreeMap<String, Matrix>,
}

impl Fields {
    fn int(&self, name: &'static str) -> Result<u64, ParseError> {
        self.ints.get(name).copied().ok_or(ParseError::Missing(name))
    }

    fn block(&mut self, name: &'static str) -> Result<Matrix, ParseError> {
        self.blocks.remove(name).ok_or(ParseError::Missing(name))
    }

    fn vector(&mut self, name: &'static str) -> Result<Vector, ParseError> {
        let m = self.block(name)?;
        if m.ncols() != 1 {
            return Err(ParseError::Invalid(format!("{name} must have one column")));
        }
        Ok(m.column(0).into_owned())
    }

    fn scalar(&mut self, name: &'static str) -> Result<f64, ParseError> {
        let m = self.block(name)?;
        if m.shape() != (1, 1) {
            return Err(ParseError::Invalid(format!("{name} must be 1 x 1")));
        }
        Ok(m[(0, 0)])
    }
}

fn body_err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Body { line, message: message.into() }
}

pub fn parse(text: &str) -> Result<Instance, ParseError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or(ParseError::Header {
        line: 1,
        message: "empty input".into(),
    })?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    let kind = match tokens.as_slice() {
        [MAGIC, VERSION, kind] => *kind,
        _ => {
            return Err(ParseError::Header {
                line: hline,
                message: format!("expected `{MAGIC} {VERSION} <kind>`, found `{header}`"),
            })
        }
    };
    if kind != "circular" && kind != "lowrank" {
        return Err(ParseError::Header {
            line: hline,
            message: format!("unknown instance kind `{kind}`"),
        });
    }

    let mut fields = Fields::default();
    while let Some((ln, line)) = lines.next() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [name, value] => {
                let v = value.parse::<u64>().map_err(|e| body_err(ln, format!("{name}: {e}")))?;
                fields.ints.insert((*name).to_string(), v);
            }
            [name, rows, cols] => {
                let rows: usize = rows.parse().map_err(|e| body_err(ln, format!("rows: {e}")))?;
                let cols: usize = cols.parse().map_err(|e| body_err(ln, format!("cols: {e}")))?;
                let mut data = Vec::with_capacity(rows * cols);
                for r in 0..rows {
                    let (rl, row) = lines.next().ok_or_else(|| body_err(ln, format!("block {name} ends after {r} of {rows} rows")))?;
                    let before = data.len();
                    for tok in row.split_whitespace() {
                        data.push(tok.parse::<f64>().map_err(|e| body_err(rl, format!("`{tok}`: {e}")))?);
                    }
                    if data.len() - before != cols {
                        return Err(body_err(rl, format!("expected {cols} values, found {}", data.len() - before)));
                    }
                }
                fields.blocks.insert((*name).to_string(), Matrix::from_row_slice(rows, cols, &data));
            }
            _ => return Err(body_err(ln, format!("unrecognised line `{line}`"))),
        }
    }

    let seed = fields.int("seed")?;
    let instance = match kind {
        "circular" => {
            let omega = fields.scalar("omega")?;
            let a = fields.block("A")?;
            let inst = CircularConeInstance {
                n: a.ncols(),
                m: a.nrows(),
                omega,
                a,
                b: fields.vector("b")?,
                c: fields.vector("c")?,
                seed,
                planted_x: fields.vector("planted_x")?,
                planted_y: fields.vector("planted_y")?,
                planted_slack: fields.vector("planted_slack")?,
            };
            inst.validate().map_err(|e| ParseError::Invalid(e.to_string()))?;
            Instance::Circular(inst)
        }
        _ => {
            let r_max = fields.int("r_max")? as usize;
            let p = fields.scalar("p")?;
            let mask = fields.block("Mask")?;
            let g = fields.block("G")?;
            let planted = fields.block("planted")?;
            let n = mask.nrows();
            if mask.shape() != (n, n) || g.shape() != (n, n) || planted.shape() != (n, n) {
                return Err(ParseError::Invalid("Mask, G and planted must be square of equal order".into()));
            }
            Instance::Lowrank(CompletionInstance {
                n,
                p,
                r_max,
                mask,
                g,
                seed,
                planted,
            })
        }
    };
    Ok(instance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use conewton::problems::generate_circular;
    use conewton::problems::lowrank::generate_completion;

    #[test]
    fn circular_round_trip_is_bit_exact() {
        let inst = Instance::Circular(generate_circular(7, 2, 0.4, 3).unwrap());
        let text = write(&inst);
        assert_eq!(parse(&text).unwrap(), inst);
        assert_eq!(write(&parse(&text).unwrap()), text);
    }

    #[test]
    fn lowrank_round_trip_is_bit_exact() {
        let inst = Instance::Lowrank(generate_completion(5, 0.3, 2, 8).unwrap());
        assert_eq!(parse(&write(&inst)).unwrap(), inst);
    }

    #[test]
    fn header_errors_name_the_line() {
        let err = parse("\n\nNCP-INSTANCE v2 circular\n").unwrap_err();
        assert!(err.is_header());
        assert!(err.to_string().starts_with("line 3:"));
    }

    #[test]
    fn short_block_reports_row_line() {
        let text = "NCP-INSTANCE v1 circular\nseed 1\nomega 1 1\n0.5\nA 1 2\n1.0\n";
        let err = parse(text).unwrap_err();
        assert_eq!(err.to_string(), "line 6: expected 2 values, found 1");
    }
}
