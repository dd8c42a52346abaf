//! Relation and measure documents, and exact-rational text forms.
//!
//! Text relation format:
//!
//! ```text
//! # comments and blank lines are ignored
//! rows 3
//! cols 3
//! model_rows 0 1 2
//! model_cols 0 1 2
//! 0 1 1
//! 0 0 1
//! 0 0 0
//! ```
//!
//! The JSON form carries the same fields:
//! `{"rows": 3, "cols": 3, "model_rows": [...], "model_cols": [...], "matrix": [[0,1,1], ...]}`.

use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::KeislerMeasure;
use crate::relation::{AmbientRelation, Side};
use crate::types::TypeSpace;
use crate::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationDoc {
    pub rows: usize,
    pub cols: usize,
    pub model_rows: Vec<usize>,
    pub model_cols: Vec<usize>,
    pub matrix: Vec<Vec<u8>>,
}

impl RelationDoc {
    pub fn from_relation(rel: &AmbientRelation) -> RelationDoc {
        RelationDoc {
            rows: rel.rows(),
            cols: rel.cols(),
            model_rows: rel.model_rows().to_vec(),
            model_cols: rel.model_cols().to_vec(),
            matrix: rel
                .matrix()
                .into_iter()
                .map(|r| r.into_iter().map(u8::from).collect())
                .collect(),
        }
    }

    pub fn to_relation(&self) -> Result<AmbientRelation> {
        if self.matrix.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "header says {} rows, matrix has {}",
                self.rows,
                self.matrix.len()
            )));
        }
        let mut bits = Vec::with_capacity(self.rows);
        for (i, row) in self.matrix.iter().enumerate() {
            if row.len() != self.cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {}",
                    row.len(),
                    self.cols
                )));
            }
            let mut out = Vec::with_capacity(self.cols);
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => out.push(false),
                    1 => out.push(true),
                    other => {
                        return Err(Error::NonBinaryEntry {
                            row: i,
                            col: j,
                            entry: other.to_string(),
                        })
                    }
                }
            }
            bits.push(out);
        }
        AmbientRelation::new(self.rows, self.cols, &bits, &self.model_rows, &self.model_cols)
    }
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse()
        .map_err(|_| Error::Parse(format!("line {line}: expected a count, got {tok:?}")))
}

/// Parses the plain-text relation format.
pub fn parse_relation_text(text: &str) -> Result<AmbientRelation> {
    let (mut rows, mut cols) = (None, None);
    let (mut model_rows, mut model_cols) = (None, None);
    let mut matrix = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let head = toks.next().expect("nonempty line");
        let rest: Vec<&str> = toks.collect();
        let lineno = k + 1;
        let list = |v: &[&str]| v.iter().map(|t| parse_usize(t, lineno)).collect::<Result<Vec<_>>>();
        match head {
            "rows" | "cols" => {
                let [n] = rest[..] else {
                    return Err(Error::Parse(format!("line {lineno}: `{head}` takes one count")));
                };
                let n = parse_usize(n, lineno)?;
                if head == "rows" {
                    rows = Some(n);
                } else {
                    cols = Some(n);
                }
            }
            "model_rows" => model_rows = Some(list(&rest)?),
            "model_cols" => model_cols = Some(list(&rest)?),
            _ => {
                let row = line
                    .split_whitespace()
                    .enumerate()
                    .map(|(j, t)| match t {
                        "0" => Ok(0u8),
                        "1" => Ok(1u8),
                        other => Err(Error::NonBinaryEntry {
                            row: matrix.len(),
                            col: j,
                            entry: other.to_string(),
                        }),
                    })
                    .collect::<Result<Vec<u8>>>()?;
                matrix.push(row);
            }
        }
    }
    let rows = rows.unwrap_or(matrix.len());
    let cols = cols.unwrap_or_else(|| matrix.first().map_or(0, Vec::len));
    RelationDoc {
        rows,
        cols,
        model_rows: model_rows.unwrap_or_else(|| (0..rows).collect()),
        model_cols: model_cols.unwrap_or_else(|| (0..cols).collect()),
        matrix,
    }
    .to_relation()
}

pub fn parse_relation_json(text: &str) -> Result<AmbientRelation> {
    serde_json::from_str::<RelationDoc>(text)?.to_relation()
}

/// JSON when the document starts with `{`, the text format otherwise.
pub fn parse_relation(text: &str) -> Result<AmbientRelation> {
    if text.trim_start().starts_with('{') {
        parse_relation_json(text)
    } else {
        parse_relation_text(text)
    }
}

pub fn load_relation(path: impl AsRef<Path>) -> Result<AmbientRelation> {
    parse_relation(&std::fs::read_to_string(path)?)
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

pub fn write_relation_text(rel: &AmbientRelation) -> String {
    let mut out = format!(
        "rows {}\ncols {}\nmodel_rows {}\nmodel_cols {}\n",
        rel.rows(),
        rel.cols(),
        join(rel.model_rows()),
        join(rel.model_cols())
    );
    for row in rel.matrix() {
        let cells: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_relation_json(rel: &AmbientRelation) -> String {
    let mut s = serde_json::to_string(&RelationDoc::from_relation(rel)).expect("plain data");
    s.push('\n');
    s
}

/// `num/den`, always with an explicit denominator.
pub fn format_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Accepts `n`, `n/d` and finite decimals such as `0.125`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int.starts_with('-');
        let digits = format!("{}{frac}", int.trim_start_matches(['-', '+']));
        let n = BigInt::from_str(&digits).map_err(|_| bad())?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let q = Rational::new(n, d);
        return Ok(if negative { -q } else { q });
    }
    Ok(Rational::from_integer(BigInt::from_str(s).map_err(|_| bad())?))
}

/// A point of a measure document: a type named by its trace over the model
/// parameters (a `0`/`1` string) or by one of its realizers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element: Option<usize>,
    pub weight: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureDoc {
    pub side: Side,
    pub weights: Vec<WeightEntry>,
}

pub fn trace_string(bits: &FixedBitSet, len: usize) -> String {
    (0..len).map(|i| if bits.contains(i) { '1' } else { '0' }).collect()
}

fn parse_trace(s: &str, len: usize) -> Result<FixedBitSet> {
    if s.len() != len {
        return Err(Error::DimensionMismatch(format!(
            "trace {s:?} has {} bits, the model has {len} parameters",
            s.len()
        )));
    }
    let mut bits = FixedBitSet::with_capacity(len);
    for (i, c) in s.chars().enumerate() {
        match c {
            '1' => bits.insert(i),
            '0' => {}
            _ => return Err(Error::Parse(format!("trace {s:?} is not a bit string"))),
        }
    }
    Ok(bits)
}

impl MeasureDoc {
    pub fn from_measure(mu: &KeislerMeasure<Rational>) -> MeasureDoc {
        let space = mu.space();
        let len = space.relation().params(space.side()).len();
        MeasureDoc {
            side: space.side(),
            weights: mu
                .weights()
                .iter()
                .map(|(&id, w)| WeightEntry {
                    trace: Some(trace_string(&space.types()[id].trace, len)),
                    element: None,
                    weight: format_rational(w),
                })
                .collect(),
        }
    }

    /// Resolves the document against the type space of its side.
    pub fn to_measure(&self, space: &Arc<TypeSpace>) -> Result<KeislerMeasure<Rational>> {
        if space.side() != self.side {
            return Err(Error::ModelMismatch);
        }
        let len = space.relation().params(space.side()).len();
        let mut weights: Vec<(usize, Rational)> = Vec::with_capacity(self.weights.len());
        for entry in &self.weights {
            let id = match (&entry.trace, entry.element) {
                (Some(t), None) => space
                    .by_trace(&parse_trace(t, len)?)
                    .ok_or(Error::TypeNotInSpace)?,
                (None, Some(e)) => space.type_of(e)?,
                _ => {
                    return Err(Error::Parse(
                        "each weight names exactly one of `trace` or `element`".into(),
                    ))
                }
            };
            let w = parse_rational(&entry.weight)?;
            match weights.iter_mut().find(|(i, _)| *i == id) {
                Some((_, acc)) => *acc += w,
                None => weights.push((id, w)),
            }
        }
        KeislerMeasure::new(space, weights)
    }
}

pub fn parse_measure(text: &str, space: &Arc<TypeSpace>) -> Result<KeislerMeasure<Rational>> {
    serde_json::from_str::<MeasureDoc>(text)?.to_measure(space)
}

pub fn write_measure(mu: &KeislerMeasure<Rational>) -> String {
    let mut s = serde_json::to_string(&MeasureDoc::from_measure(mu)).expect("plain data");
    s.push('\n');
    s
}

/// Reads the side of a measure document without resolving it.
pub fn measure_side(text: &str) -> Result<Side> {
    Ok(serde_json::from_str::<MeasureDoc>(text)?.side)
}
