//! Type spaces over the model, definitions of types, and the pairing χ.
//!
//! A φ-type is identified with its trace on the model parameters; its
//! realizers are the ambient elements carrying that trace. A type space
//! covers every ambient element of one side, so types realized only outside
//! the model show up as soon as the ambient structure contributes new traces.

use std::collections::HashMap;
use std::sync::Arc;

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::relation::{union_of_atoms, AmbientRelation, Expr, Formula, Side};

#[derive(Clone, Debug, PartialEq)]
pub enum Definability {
    /// A formula on the opposite side that decides the trace on every model parameter.
    Definable(Formula),
    /// Two model parameters that no opposite-side formula can separate but
    /// which the trace separates.
    Undefinable { witness: (usize, usize) },
}

impl Definability {
    pub fn formula(&self) -> Option<&Formula> {
        match self {
            Definability::Definable(f) => Some(f),
            Definability::Undefinable { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhiType {
    pub id: usize,
    /// Bit per model parameter, by position in [`AmbientRelation::params`].
    pub trace: FixedBitSet,
    /// Ambient elements realizing the type, ascending.
    pub realizers: Vec<usize>,
    pub realized_in_m: bool,
    /// Filled by [`TypeSpace::with_definitions`].
    pub definability: Option<Definability>,
}

impl PhiType {
    pub fn definition(&self) -> Option<&Formula> {
        self.definability.as_ref().and_then(Definability::formula)
    }

    pub fn is_definable(&self) -> bool {
        self.definition().is_some()
    }

    /// Least realizer inside the model, if any.
    pub fn model_realizer(&self, rel: &AmbientRelation, side: Side) -> Option<usize> {
        let model = rel.model_elements(side);
        self.realizers
            .iter()
            .copied()
            .find(|e| model.binary_search(e).is_ok())
    }
}

#[derive(Clone, Debug)]
pub struct TypeSpace {
    rel: Arc<AmbientRelation>,
    side: Side,
    types: Vec<PhiType>,
    type_of_element: Vec<usize>,
    by_trace: HashMap<FixedBitSet, usize>,
}

impl PartialEq for TypeSpace {
    fn eq(&self, other: &Self) -> bool {
        self.side == other.side && self.types == other.types && self.rel == other.rel
    }
}

impl TypeSpace {
    pub fn relation(&self) -> &Arc<AmbientRelation> {
        &self.rel
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn types(&self) -> &[PhiType] {
        &self.types
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn get(&self, id: usize) -> Result<&PhiType> {
        self.types.get(id).ok_or(Error::UnknownType(id))
    }

    /// Type of an ambient element of this side.
    pub fn type_of(&self, element: usize) -> Result<usize> {
        self.type_of_element
            .get(element)
            .copied()
            .ok_or(Error::ElementOutOfRange {
                index: element,
                size: self.type_of_element.len(),
            })
    }

    pub fn by_trace(&self, trace: &FixedBitSet) -> Option<usize> {
        self.by_trace.get(trace).copied()
    }

    /// Fills in the definition (or undefinability witness) of every type.
    pub fn with_definitions(mut self) -> TypeSpace {
        let defs: Vec<Definability> = self
            .types
            .iter()
            .map(|t| definition_of(&self, t).expect("type belongs to its own space"))
            .collect();
        for (t, d) in self.types.iter_mut().zip(defs) {
            t.definability = Some(d);
        }
        self
    }

    pub fn all_definable(&self) -> bool {
        self.types.iter().all(PhiType::is_definable)
    }

    pub fn contains(&self, t: &PhiType) -> bool {
        self.types
            .get(t.id)
            .is_some_and(|own| own.trace == t.trace && own.realizers == t.realizers)
    }
}

/// One type per distinct trace among the ambient elements of `side`.
pub fn compute_type_space(rel: &Arc<AmbientRelation>, side: Side) -> TypeSpace {
    let model = rel.model_elements(side);
    let n = rel.element_count(side);
    let mut type_of_element = vec![0; n];
    let mut by_trace = HashMap::new();
    let mut types: Vec<PhiType> = Vec::new();
    for (id, atom) in rel.atoms(side).into_iter().enumerate() {
        let realizers: Vec<usize> = atom.extension.ones().collect();
        for &e in &realizers {
            type_of_element[e] = id;
        }
        let realized_in_m = realizers.iter().any(|e| model.binary_search(e).is_ok());
        by_trace.insert(atom.signature.clone(), id);
        types.push(PhiType {
            id,
            trace: atom.signature,
            realizers,
            realized_in_m,
            definability: None,
        });
    }
    TypeSpace {
        rel: Arc::clone(rel),
        side,
        types,
        type_of_element,
        by_trace,
    }
}

/// Classes of model parameters indistinguishable by opposite-side formulas,
/// each listed as positions into `rel.params(side)`.
fn parameter_classes(rel: &AmbientRelation, side: Side) -> Vec<(FixedBitSet, Vec<usize>)> {
    let params = rel.params(side);
    let opp = side.opposite();
    let mut index: HashMap<FixedBitSet, usize> = HashMap::new();
    let mut classes: Vec<(FixedBitSet, Vec<usize>)> = Vec::new();
    for (pos, &p) in params.iter().enumerate() {
        let sig = rel.trace(opp, p);
        let id = *index.entry(sig.clone()).or_insert_with(|| {
            classes.push((sig, Vec::new()));
            classes.len() - 1
        });
        classes[id].1.push(pos);
    }
    classes
}

/// Decides whether `t` has a definition by a formula of the opposite side.
///
/// Types realized inside the model are defined by the single instance at
/// their least model realizer. Other types are definable iff their trace is a
/// union of the opposite-side atoms restricted to the model; the definition is
/// then that union. Otherwise a pair of parameters in one atom with different
/// trace values is returned.
pub fn definition_of(ts: &TypeSpace, t: &PhiType) -> Result<Definability> {
    if !ts.contains(t) {
        return Err(Error::TypeNotInSpace);
    }
    let rel = &ts.rel;
    let side = ts.side;
    let opp = side.opposite();
    if let Some(a) = t.model_realizer(rel, side) {
        let f = rel.formula(opp, Expr::Atom(a))?;
        return Ok(Definability::Definable(f));
    }
    let params = rel.params(side);
    let mut chosen: Vec<FixedBitSet> = Vec::new();
    for (sig, members) in parameter_classes(rel, side) {
        let first = members[0];
        let value = t.trace.contains(first);
        if let Some(&other) = members.iter().find(|&&pos| t.trace.contains(pos) != value) {
            return Ok(Definability::Undefinable {
                witness: (params[first], params[other]),
            });
        }
        if value {
            chosen.push(sig);
        }
    }
    Ok(Definability::Definable(union_of_atoms(rel, opp, &chosen)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Chi {
    pub forward: bool,
    pub backward: bool,
    pub symmetric: bool,
}

/// χ(p, q): `forward` is d_p evaluated at a realizer of q, `backward` is d_q
/// evaluated at a realizer of p.
pub fn chi_eval(rel: &AmbientRelation, p: &PhiType, q: &PhiType) -> Result<Chi> {
    let dp = p.definition().ok_or(Error::Undefinable(vec![(Side::Phi, p.id)]))?;
    let dq = q.definition().ok_or(Error::Undefinable(vec![(Side::Opp, q.id)]))?;
    if dp.side() != Side::Opp || dq.side() != Side::Phi {
        return Err(Error::ModelMismatch);
    }
    let b = *q.realizers.first().ok_or(Error::NoRealizer(q.id))?;
    let a = *p.realizers.first().ok_or(Error::NoRealizer(p.id))?;
    let forward = dp.holds(rel, b);
    let backward = dq.holds(rel, a);
    Ok(Chi {
        forward,
        backward,
        symmetric: forward == backward,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::half_graph;

    fn arc(r: AmbientRelation) -> Arc<AmbientRelation> {
        Arc::new(r)
    }

    #[test]
    fn all_ones_has_one_type() {
        let rel = arc(AmbientRelation::from_fn(3, 3, |_, _| true).unwrap());
        let ts = compute_type_space(&rel, Side::Phi);
        assert_eq!(ts.len(), 1);
        assert_eq!(ts.types()[0].trace.count_ones(..), 3);
        assert!(ts.types()[0].definability.is_none());
    }

    #[test]
    fn whole_model_types_are_realized() {
        let rel = arc(half_graph(6));
        for side in [Side::Phi, Side::Opp] {
            let ts = compute_type_space(&rel, side);
            assert!(ts.types().iter().all(|t| t.realized_in_m));
        }
    }

    #[test]
    fn realized_type_defined_by_its_row() {
        let rel = arc(half_graph(6).with_model(&[0, 1, 2], &[0, 1, 2]).unwrap());
        let ts = compute_type_space(&rel, Side::Phi).with_definitions();
        let t = &ts.types()[ts.type_of(1).unwrap()];
        let d = t.definition().unwrap();
        assert_eq!(d.expr(), Expr::Atom(1));
        for (pos, &b) in rel.params(Side::Phi).iter().enumerate() {
            assert_eq!(d.holds(&rel, b), t.trace.contains(pos));
        }
    }

    #[test]
    fn external_empty_trace_is_defined_by_false() {
        // model rows 0..2, model columns 0..4: rows 3.. all have empty trace
        let rel = arc(half_graph(8).with_model(&[0, 1, 2], &[0, 1, 2, 3]).unwrap());
        let ts = compute_type_space(&rel, Side::Phi).with_definitions();
        let t = &ts.types()[ts.type_of(3).unwrap()];
        assert!(!t.realized_in_m);
        assert_eq!(t.trace.count_ones(..), 0);
        assert!(t.definition().unwrap().is_false());
    }

    #[test]
    fn adversarial_undefinable_type() {
        // 2x2 all-ones model block, external row with trace (1, 0)
        let m = vec![vec![true, true], vec![true, true], vec![true, false]];
        let rel = arc(AmbientRelation::new(3, 2, &m, &[0, 1], &[0, 1]).unwrap());
        let ts = compute_type_space(&rel, Side::Phi).with_definitions();
        let t = &ts.types()[ts.type_of(2).unwrap()];
        assert_eq!(
            t.definability,
            Some(Definability::Undefinable { witness: (0, 1) })
        );
    }

    #[test]
    fn definition_of_foreign_type_errors() {
        let a = arc(half_graph(4));
        let b = arc(half_graph(5));
        let ta = compute_type_space(&a, Side::Phi);
        let tb = compute_type_space(&b, Side::Phi);
        assert_eq!(
            definition_of(&ta, &tb.types()[4]),
            Err(Error::TypeNotInSpace)
        );
    }

    #[test]
    fn chi_on_realized_pairs_is_matrix_entry() {
        let rel = arc(crate::generate::random_bipartite(6, 5, 0.5, 4));
        let p_space = compute_type_space(&rel, Side::Phi).with_definitions();
        let q_space = compute_type_space(&rel, Side::Opp).with_definitions();
        for a in 0..rel.rows() {
            for b in 0..rel.cols() {
                let p = &p_space.types()[p_space.type_of(a).unwrap()];
                let q = &q_space.types()[q_space.type_of(b).unwrap()];
                let chi = chi_eval(&rel, p, q).unwrap();
                assert_eq!(chi.forward, rel.entry(a, b));
                assert_eq!(chi.backward, rel.entry(a, b));
                assert!(chi.symmetric);
            }
        }
    }

    #[test]
    fn chi_requires_definitions() {
        let rel = arc(half_graph(3));
        let p_space = compute_type_space(&rel, Side::Phi);
        let q_space = compute_type_space(&rel, Side::Opp).with_definitions();
        assert!(matches!(
            chi_eval(&rel, &p_space.types()[0], &q_space.types()[0]),
            Err(Error::Undefinable(_))
        ));
    }
}
