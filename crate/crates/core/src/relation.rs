//! The ambient relation, its sub-model, formulas and the atoms of the
//! generated Boolean algebras.
//!
//! A relation is a 0/1 matrix over ambient rows (the `x` side) and ambient
//! columns (the `y` side). The sub-model is a pair of index sets. Formulas on
//! the [`Side::Phi`] side are Boolean combinations of column instances
//! `φ(x, b)` with `b` in the column model; formulas on the [`Side::Opp`] side
//! are combinations of row instances `φ(a, y)` with `a` in the row model.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which partition of the relation is treated as the variable side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Variables range over rows, parameters over model columns.
    Phi,
    /// Variables range over columns, parameters over model rows.
    Opp,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Phi => Side::Opp,
            Side::Opp => Side::Phi,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AmbientRelation {
    rows: usize,
    cols: usize,
    /// `row_bits[a]` has bit `b` set iff φ(a, b).
    row_bits: Vec<FixedBitSet>,
    /// `col_bits[b]` has bit `a` set iff φ(a, b).
    col_bits: Vec<FixedBitSet>,
    model_rows: Vec<usize>,
    model_cols: Vec<usize>,
}

fn validate_model(indices: &[usize], size: usize, name: &'static str) -> Result<Vec<usize>> {
    if indices.is_empty() {
        return Err(Error::EmptyModel(name));
    }
    let mut sorted = indices.to_vec();
    sorted.sort_unstable();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(Error::DuplicateModelIndex(w[0]));
        }
    }
    if let Some(&bad) = sorted.iter().find(|&&i| i >= size) {
        return Err(Error::ModelIndexOutOfRange { index: bad, size });
    }
    Ok(sorted)
}

impl AmbientRelation {
    /// Builds a relation from explicit rows; every row must have length `cols`.
    pub fn new(
        rows: usize,
        cols: usize,
        matrix: &[Vec<bool>],
        model_rows: &[usize],
        model_cols: &[usize],
    ) -> Result<Self> {
        if matrix.len() != rows {
            return Err(Error::DimensionMismatch(format!(
                "declared {rows} rows, found {}",
                matrix.len()
            )));
        }
        if let Some((i, r)) = matrix.iter().enumerate().find(|(_, r)| r.len() != cols) {
            return Err(Error::DimensionMismatch(format!(
                "row {i} has length {}, expected {cols}",
                r.len()
            )));
        }
        let model_rows = validate_model(model_rows, rows, "rows")?;
        let model_cols = validate_model(model_cols, cols, "columns")?;
        let mut row_bits = vec![FixedBitSet::with_capacity(cols); rows];
        let mut col_bits = vec![FixedBitSet::with_capacity(rows); cols];
        for (a, row) in matrix.iter().enumerate() {
            for (b, &v) in row.iter().enumerate() {
                if v {
                    row_bits[a].insert(b);
                    col_bits[b].insert(a);
                }
            }
        }
        Ok(AmbientRelation {
            rows,
            cols,
            row_bits,
            col_bits,
            model_rows,
            model_cols,
        })
    }

    /// Relation with the whole ambient structure as the model.
    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let matrix: Vec<Vec<bool>> = (0..rows)
            .map(|a| (0..cols).map(|b| f(a, b)).collect())
            .collect();
        let mr: Vec<usize> = (0..rows).collect();
        let mc: Vec<usize> = (0..cols).collect();
        Self::new(rows, cols, &matrix, &mr, &mc)
    }

    /// Same matrix, different sub-model.
    pub fn with_model(&self, model_rows: &[usize], model_cols: &[usize]) -> Result<Self> {
        let mut out = self.clone();
        out.model_rows = validate_model(model_rows, self.rows, "rows")?;
        out.model_cols = validate_model(model_cols, self.cols, "columns")?;
        Ok(out)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn model_rows(&self) -> &[usize] {
        &self.model_rows
    }

    pub fn model_cols(&self) -> &[usize] {
        &self.model_cols
    }

    #[inline]
    pub fn entry(&self, a: usize, b: usize) -> bool {
        self.row_bits[a].contains(b)
    }

    pub fn row(&self, a: usize) -> &FixedBitSet {
        &self.row_bits[a]
    }

    pub fn column(&self, b: usize) -> &FixedBitSet {
        &self.col_bits[b]
    }

    pub fn matrix(&self) -> Vec<Vec<bool>> {
        (0..self.rows)
            .map(|a| (0..self.cols).map(|b| self.entry(a, b)).collect())
            .collect()
    }

    /// Transposed relation with the model sets swapped.
    pub fn opposite(&self) -> AmbientRelation {
        AmbientRelation {
            rows: self.cols,
            cols: self.rows,
            row_bits: self.col_bits.clone(),
            col_bits: self.row_bits.clone(),
            model_rows: self.model_cols.clone(),
            model_cols: self.model_rows.clone(),
        }
    }

    /// Number of ambient elements on the variable side of `side`.
    pub fn element_count(&self, side: Side) -> usize {
        match side {
            Side::Phi => self.rows,
            Side::Opp => self.cols,
        }
    }

    /// Model elements of the variable side of `side`.
    pub fn model_elements(&self, side: Side) -> &[usize] {
        match side {
            Side::Phi => &self.model_rows,
            Side::Opp => &self.model_cols,
        }
    }

    /// Model parameters generating the algebra on `side`.
    pub fn params(&self, side: Side) -> &[usize] {
        self.model_elements(side.opposite())
    }

    /// Truth of φ between a variable-side element and a parameter-side element.
    #[inline]
    pub fn holds(&self, side: Side, element: usize, param: usize) -> bool {
        match side {
            Side::Phi => self.entry(element, param),
            Side::Opp => self.entry(param, element),
        }
    }

    /// Elements of `side` satisfying the instance at `param`.
    pub fn instance(&self, side: Side, param: usize) -> &FixedBitSet {
        match side {
            Side::Phi => &self.col_bits[param],
            Side::Opp => &self.row_bits[param],
        }
    }

    /// Restriction of an element's row (or column) to the model parameters,
    /// indexed by position in [`params`](Self::params).
    pub fn trace(&self, side: Side, element: usize) -> FixedBitSet {
        let params = self.params(side);
        let mut t = FixedBitSet::with_capacity(params.len());
        for (pos, &p) in params.iter().enumerate() {
            if self.holds(side, element, p) {
                t.insert(pos);
            }
        }
        t
    }

    /// Atoms of the algebra generated by the model parameters on `side`.
    ///
    /// Elements are grouped by trace; atoms are listed in order of their least element.
    pub fn atoms(&self, side: Side) -> Vec<Atom> {
        let n = self.element_count(side);
        let mut index: HashMap<FixedBitSet, usize> = HashMap::new();
        let mut atoms: Vec<Atom> = Vec::new();
        for e in 0..n {
            let t = self.trace(side, e);
            let id = *index.entry(t.clone()).or_insert_with(|| {
                atoms.push(Atom {
                    signature: t,
                    extension: FixedBitSet::with_capacity(n),
                });
                atoms.len() - 1
            });
            atoms[id].extension.insert(e);
        }
        atoms
    }

    /// Builds a formula on `side`, checking that every atom is a model parameter.
    pub fn formula(&self, side: Side, expr: Expr) -> Result<Formula> {
        let nnf = Nnf::from_expr(&expr, true);
        self.check_atoms(side, &nnf)?;
        let extension = nnf.extension(self, side);
        Ok(Formula {
            side,
            nnf,
            extension,
        })
    }

    fn check_atoms(&self, side: Side, nnf: &Nnf) -> Result<()> {
        let params = self.params(side);
        let mut bad = None;
        nnf.visit_atoms(&mut |a| {
            if bad.is_none() && params.binary_search(&a).is_err() {
                bad = Some(a);
            }
        });
        match bad {
            Some(atom) => Err(Error::AtomOutsideModel { atom, side }),
            None => Ok(()),
        }
    }
}

/// An atom of a finite algebra: a trace pattern and the elements realizing it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    /// Bit per model parameter (by position in [`AmbientRelation::params`]).
    pub signature: FixedBitSet,
    pub extension: FixedBitSet,
}

/// Atoms of Def_φ(M): rows grouped by their trace on the column model.
pub fn atoms_of_phi_algebra(rel: &AmbientRelation) -> Vec<Atom> {
    rel.atoms(Side::Phi)
}

/// User-facing Boolean expression over instance atoms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    True,
    False,
    /// Instance at a parameter index (a column for φ-formulas, a row for φ^opp-formulas).
    Atom(usize),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
}

impl std::ops::Not for Expr {
    type Output = Expr;

    fn not(self) -> Expr {
        Expr::negate(self)
    }
}

impl Expr {
    pub fn negate(e: Expr) -> Expr {
        Expr::Not(Box::new(e))
    }

    pub fn and(a: Expr, b: Expr) -> Expr {
        Expr::And(vec![a, b])
    }

    pub fn or(a: Expr, b: Expr) -> Expr {
        Expr::Or(vec![a, b])
    }
}

/// Negation normal form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Nnf {
    True,
    False,
    Lit(usize, bool),
    And(Vec<Nnf>),
    Or(Vec<Nnf>),
}

impl Nnf {
    fn from_expr(e: &Expr, positive: bool) -> Nnf {
        match (e, positive) {
            (Expr::True, true) | (Expr::False, false) => Nnf::True,
            (Expr::True, false) | (Expr::False, true) => Nnf::False,
            (Expr::Atom(a), pol) => Nnf::Lit(*a, pol),
            (Expr::Not(inner), pol) => Nnf::from_expr(inner, !pol),
            (Expr::And(xs), true) | (Expr::Or(xs), false) => {
                Nnf::And(xs.iter().map(|x| Nnf::from_expr(x, positive)).collect())
            }
            (Expr::Or(xs), true) | (Expr::And(xs), false) => {
                Nnf::Or(xs.iter().map(|x| Nnf::from_expr(x, positive)).collect())
            }
        }
    }

    fn to_expr(&self) -> Expr {
        match self {
            Nnf::True => Expr::True,
            Nnf::False => Expr::False,
            Nnf::Lit(a, true) => Expr::Atom(*a),
            Nnf::Lit(a, false) => Expr::negate(Expr::Atom(*a)),
            Nnf::And(xs) => Expr::And(xs.iter().map(Nnf::to_expr).collect()),
            Nnf::Or(xs) => Expr::Or(xs.iter().map(Nnf::to_expr).collect()),
        }
    }

    fn visit_atoms(&self, f: &mut impl FnMut(usize)) {
        match self {
            Nnf::True | Nnf::False => {}
            Nnf::Lit(a, _) => f(*a),
            Nnf::And(xs) | Nnf::Or(xs) => xs.iter().for_each(|x| x.visit_atoms(f)),
        }
    }

    fn extension(&self, rel: &AmbientRelation, side: Side) -> FixedBitSet {
        let n = rel.element_count(side);
        let full = || {
            let mut s = FixedBitSet::with_capacity(n);
            s.insert_range(..);
            s
        };
        match self {
            Nnf::True => full(),
            Nnf::False => FixedBitSet::with_capacity(n),
            Nnf::Lit(a, true) => rel.instance(side, *a).clone(),
            Nnf::Lit(a, false) => {
                let mut s = rel.instance(side, *a).clone();
                s.toggle_range(..);
                s
            }
            Nnf::And(xs) => {
                let mut s = full();
                for x in xs {
                    s.intersect_with(&x.extension(rel, side));
                }
                s
            }
            Nnf::Or(xs) => {
                let mut s = FixedBitSet::with_capacity(n);
                for x in xs {
                    s.union_with(&x.extension(rel, side));
                }
                s
            }
        }
    }

    fn holds(&self, rel: &AmbientRelation, side: Side, element: usize) -> bool {
        match self {
            Nnf::True => true,
            Nnf::False => false,
            Nnf::Lit(a, pol) => rel.holds(side, element, *a) == *pol,
            Nnf::And(xs) => xs.iter().all(|x| x.holds(rel, side, element)),
            Nnf::Or(xs) => xs.iter().any(|x| x.holds(rel, side, element)),
        }
    }
}

/// A φ-formula (or φ^opp-formula) kept in negation normal form with its
/// ambient extension cached.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Formula {
    side: Side,
    nnf: Nnf,
    extension: FixedBitSet,
}

impl Formula {
    pub fn side(&self) -> Side {
        self.side
    }

    /// Cached extension over the ambient elements of the formula's side.
    pub fn extension(&self) -> &FixedBitSet {
        &self.extension
    }

    /// The formula as an expression tree (in negation normal form).
    pub fn expr(&self) -> Expr {
        self.nnf.to_expr()
    }

    /// Parameter indices mentioned by the formula.
    pub fn atoms(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.nnf.visit_atoms(&mut |a| out.push(a));
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Truth at a single ambient element, evaluated against `rel`.
    pub fn holds(&self, rel: &AmbientRelation, element: usize) -> bool {
        self.nnf.holds(rel, self.side, element)
    }

    pub fn is_false(&self) -> bool {
        matches!(self.nnf, Nnf::False) || matches!(&self.nnf, Nnf::Or(xs) if xs.is_empty())
    }

    /// Conjunction of two formulas on the same side.
    pub fn and(&self, other: &Formula) -> Formula {
        assert_eq!(self.side, other.side, "formulas on different sides");
        let mut ext = self.extension.clone();
        ext.intersect_with(&other.extension);
        Formula {
            side: self.side,
            nnf: Nnf::And(vec![self.nnf.clone(), other.nnf.clone()]),
            extension: ext,
        }
    }

    pub fn or(&self, other: &Formula) -> Formula {
        assert_eq!(self.side, other.side, "formulas on different sides");
        let mut ext = self.extension.clone();
        ext.union_with(&other.extension);
        Formula {
            side: self.side,
            nnf: Nnf::Or(vec![self.nnf.clone(), other.nnf.clone()]),
            extension: ext,
        }
    }

    pub fn negate(&self) -> Formula {
        let mut ext = self.extension.clone();
        ext.toggle_range(..);
        Formula {
            side: self.side,
            nnf: Nnf::from_expr(&self.nnf.to_expr(), false),
            extension: ext,
        }
    }
}

/// Recomputes the extension of `f` against `rel`.
pub fn eval_formula(rel: &AmbientRelation, f: &Formula) -> Result<FixedBitSet> {
    rel.check_atoms(f.side, &f.nnf)?;
    Ok(f.nnf.extension(rel, f.side))
}

/// The defining conjunction of an atom: `⋀ ±φ(x, b)` over every model parameter.
pub fn atom_formula(rel: &AmbientRelation, side: Side, signature: &FixedBitSet) -> Formula {
    let lits = rel
        .params(side)
        .iter()
        .enumerate()
        .map(|(pos, &p)| {
            if signature.contains(pos) {
                Expr::Atom(p)
            } else {
                Expr::negate(Expr::Atom(p))
            }
        })
        .collect();
    rel.formula(side, Expr::And(lits))
        .expect("atom formula uses model parameters only")
}

/// Disjunction of atom formulas (empty disjunction is FALSE).
pub fn union_of_atoms<'a>(
    rel: &AmbientRelation,
    side: Side,
    signatures: impl IntoIterator<Item = &'a FixedBitSet>,
) -> Formula {
    let disjuncts: Vec<Expr> = signatures
        .into_iter()
        .map(|s| atom_formula(rel, side, s).expr())
        .collect();
    let expr = match disjuncts.len() {
        0 => Expr::False,
        _ => Expr::Or(disjuncts),
    };
    rel.formula(side, expr).expect("atoms use model parameters only")
}
