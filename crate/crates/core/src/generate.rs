//! Relation generators.
//!
//! Specs are written as function calls, e.g. `half_graph(6)`,
//! `random_bipartite(8,8,0.5,7)` or `from_matrix([[0,1],[1,0]])`. A trailing
//! `@half` restricts the model to the first half of the rows and columns
//! (rounded up).

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::relation::AmbientRelation;

#[derive(Clone, Debug, PartialEq)]
pub enum Generator {
    HalfGraph(usize),
    RandomBipartite { rows: usize, cols: usize, p: f64, seed: u64 },
    UnionFiniteGraphs(usize),
    FullSubsets(usize),
    FromMatrix(Vec<Vec<u8>>),
    /// Functional relation (each row has at most one 1), possibly complemented
    /// or transposed; ladder index is at most 2 by construction.
    RandomStable { rows: usize, cols: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub generator: Generator,
    pub half_model: bool,
}

impl GeneratorSpec {
    pub fn build(&self) -> Result<AmbientRelation> {
        let rel = generate(&self.generator)?;
        if self.half_model {
            half_model(&rel)
        } else {
            Ok(rel)
        }
    }
}

/// Restricts the model to the first ⌈n/2⌉ rows and columns.
pub fn half_model(rel: &AmbientRelation) -> Result<AmbientRelation> {
    let mr: Vec<usize> = (0..rel.rows().div_ceil(2)).collect();
    let mc: Vec<usize> = (0..rel.cols().div_ceil(2)).collect();
    rel.with_model(&mr, &mc)
}

pub fn generate(g: &Generator) -> Result<AmbientRelation> {
    match g {
        Generator::HalfGraph(n) => {
            positive(*n, "half_graph size")?;
            Ok(half_graph(*n))
        }
        Generator::RandomBipartite { rows, cols, p, seed } => {
            positive(*rows, "rows")?;
            positive(*cols, "cols")?;
            if !(0.0..=1.0).contains(p) {
                return Err(Error::InvalidParameter(format!("probability {p} not in [0,1]")));
            }
            Ok(random_bipartite(*rows, *cols, *p, *seed))
        }
        Generator::UnionFiniteGraphs(k) => {
            if !(1..=4).contains(k) {
                return Err(Error::InvalidParameter(format!(
                    "union_finite_graphs supports 1..=4 vertices, got {k}"
                )));
            }
            Ok(union_finite_graphs(*k))
        }
        Generator::FullSubsets(n) => {
            if !(1..=16).contains(n) {
                return Err(Error::InvalidParameter(format!(
                    "full_subsets supports 1..=16 columns, got {n}"
                )));
            }
            Ok(full_subsets(*n))
        }
        Generator::FromMatrix(rows) => from_matrix(rows),
        Generator::RandomStable { rows, cols, seed } => {
            positive(*rows, "rows")?;
            positive(*cols, "cols")?;
            Ok(random_stable(*rows, *cols, *seed))
        }
    }
}

fn positive(n: usize, what: &str) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidParameter(format!("{what} must be positive")))
    } else {
        Ok(())
    }
}

/// `entry(i, j) = 1` iff `i < j`.
pub fn half_graph(n: usize) -> AmbientRelation {
    AmbientRelation::from_fn(n, n, |i, j| i < j).expect("n > 0")
}

pub fn random_bipartite(rows: usize, cols: usize, p: f64, seed: u64) -> AmbientRelation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m: Vec<Vec<bool>> = (0..rows)
        .map(|_| (0..cols).map(|_| rng.gen_bool(p)).collect())
        .collect();
    let mr: Vec<usize> = (0..rows).collect();
    let mc: Vec<usize> = (0..cols).collect();
    AmbientRelation::new(rows, cols, &m, &mr, &mc).expect("consistent dimensions")
}

/// Block-diagonal union of every symmetric 0/1 matrix (graph with optional
/// loops) on 1..=k labelled vertices.
pub fn union_finite_graphs(k: usize) -> AmbientRelation {
    let mut blocks: Vec<Vec<Vec<bool>>> = Vec::new();
    for m in 1..=k {
        let pairs: Vec<(usize, usize)> = (0..m)
            .flat_map(|i| (i..m).map(move |j| (i, j)))
            .collect();
        for mask in 0u64..(1 << pairs.len()) {
            let mut block = vec![vec![false; m]; m];
            for (bit, &(i, j)) in pairs.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    block[i][j] = true;
                    block[j][i] = true;
                }
            }
            blocks.push(block);
        }
    }
    let n: usize = blocks.iter().map(Vec::len).sum();
    let mut matrix = vec![vec![false; n]; n];
    let mut off = 0;
    for block in &blocks {
        for (i, row) in block.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                matrix[off + i][off + j] = v;
            }
        }
        off += block.len();
    }
    let all: Vec<usize> = (0..n).collect();
    AmbientRelation::new(n, n, &matrix, &all, &all).expect("square block union")
}

/// `2ⁿ × n` matrix whose rows enumerate every subset of the columns.
pub fn full_subsets(n: usize) -> AmbientRelation {
    AmbientRelation::from_fn(1 << n, n, |r, j| r >> j & 1 == 1).expect("n > 0")
}

pub fn from_matrix(rows: &[Vec<u8>]) -> Result<AmbientRelation> {
    if rows.is_empty() || rows[0].is_empty() {
        return Err(Error::InvalidParameter("empty matrix".into()));
    }
    let cols = rows[0].len();
    let mut m = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        let mut out = Vec::with_capacity(r.len());
        for (j, &v) in r.iter().enumerate() {
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
        m.push(out);
    }
    let mr: Vec<usize> = (0..rows.len()).collect();
    let mc: Vec<usize> = (0..cols).collect();
    AmbientRelation::new(rows.len(), cols, &m, &mr, &mc)
}

pub fn random_stable(rows: usize, cols: usize, seed: u64) -> AmbientRelation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flavour = rng.gen_range(0..4u8);
    let transpose = flavour & 1 == 1;
    let complement = flavour & 2 == 2;
    let (r, c) = if transpose { (cols, rows) } else { (rows, cols) };
    let target: Vec<Option<usize>> = (0..r)
        .map(|_| {
            if rng.gen_bool(0.2) {
                None
            } else {
                Some(rng.gen_range(0..c))
            }
        })
        .collect();
    let base = AmbientRelation::from_fn(r, c, |a, b| (target[a] == Some(b)) != complement)
        .expect("positive dims");
    if transpose {
        base.opposite()
    } else {
        base
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::HalfGraph(n) => write!(f, "half_graph({n})"),
            Generator::RandomBipartite { rows, cols, p, seed } => {
                write!(f, "random_bipartite({rows},{cols},{p},{seed})")
            }
            Generator::UnionFiniteGraphs(k) => write!(f, "union_finite_graphs({k})"),
            Generator::FullSubsets(n) => write!(f, "full_subsets({n})"),
            Generator::FromMatrix(rows) => {
                let inner: Vec<String> = rows
                    .iter()
                    .map(|r| {
                        let cells: Vec<String> = r.iter().map(u8::to_string).collect();
                        format!("[{}]", cells.join(","))
                    })
                    .collect();
                write!(f, "from_matrix([{}])", inner.join(","))
            }
            Generator::RandomStable { rows, cols, seed } => {
                write!(f, "random_stable({rows},{cols},{seed})")
            }
        }
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.generator)?;
        if self.half_model {
            write!(f, "@half")?;
        }
        Ok(())
    }
}

fn parse_args(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).collect()
}

fn arg<T: FromStr>(args: &[&str], i: usize, name: &str) -> Result<T> {
    args.get(i)
        .ok_or_else(|| Error::Parse(format!("{name}: missing argument {}", i + 1)))?
        .parse()
        .map_err(|_| Error::Parse(format!("{name}: bad argument {:?}", args[i])))
}

impl FromStr for GeneratorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (body, half_model) = match s.strip_suffix("@half") {
            Some(b) => (b.trim(), true),
            None => (s, false),
        };
        let open = body
            .find('(')
            .ok_or_else(|| Error::Parse(format!("generator {body:?} lacks '('")))?;
        let name = body[..open].trim();
        let inner = body[open + 1..]
            .strip_suffix(')')
            .ok_or_else(|| Error::Parse(format!("generator {body:?} lacks ')'")))?;
        let args = parse_args(inner);
        let want = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::Parse(format!(
                    "{name} takes {n} arguments, got {}",
                    args.len()
                )))
            }
        };
        let generator = match name {
            "half_graph" => {
                want(1)?;
                Generator::HalfGraph(arg(&args, 0, name)?)
            }
            "random_bipartite" => {
                want(4)?;
                Generator::RandomBipartite {
                    rows: arg(&args, 0, name)?,
                    cols: arg(&args, 1, name)?,
                    p: arg(&args, 2, name)?,
                    seed: arg(&args, 3, name)?,
                }
            }
            "union_finite_graphs" => {
                want(1)?;
                Generator::UnionFiniteGraphs(arg(&args, 0, name)?)
            }
            "full_subsets" => {
                want(1)?;
                Generator::FullSubsets(arg(&args, 0, name)?)
            }
            "random_stable" => {
                want(3)?;
                Generator::RandomStable {
                    rows: arg(&args, 0, name)?,
                    cols: arg(&args, 1, name)?,
                    seed: arg(&args, 2, name)?,
                }
            }
            "from_matrix" => {
                let rows: Vec<Vec<u8>> = serde_json::from_str(inner)?;
                Generator::FromMatrix(rows)
            }
            other => return Err(Error::Parse(format!("unknown generator {other:?}"))),
        };
        Ok(GeneratorSpec {
            generator,
            half_model,
        })
    }
}
