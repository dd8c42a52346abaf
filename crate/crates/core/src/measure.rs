//! Keisler measures as weighted sums of types.
//!
//! On a finite algebra every finitely additive probability measure is a
//! weighted sum of its atoms, so a measure is stored as a map from type id to
//! weight. The Sobczyk–Hammer split is computed exactly: the atomic part
//! carries all the mass and the strongly continuous part is always zero.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::relation::Formula;
use crate::scalar::{self, Scalar};
use crate::types::TypeSpace;

#[derive(Clone, Debug)]
pub struct KeislerMeasure<S> {
    space: Arc<TypeSpace>,
    weights: BTreeMap<usize, S>,
}

impl<S: Scalar> PartialEq for KeislerMeasure<S> {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.space, &other.space) || self.space == other.space)
            && self.weights == other.weights
    }
}

impl<S: Scalar> KeislerMeasure<S> {
    /// Validates ids and nonnegativity, drops zero weights, and requires total mass 1.
    pub fn new(space: &Arc<TypeSpace>, weights: impl IntoIterator<Item = (usize, S)>) -> Result<Self> {
        let mut map: BTreeMap<usize, S> = BTreeMap::new();
        for (id, w) in weights {
            space.get(id)?;
            if w.is_negative_value() {
                return Err(Error::NegativeWeight(id));
            }
            if w.is_zero() {
                continue;
            }
            let slot = map.entry(id).or_insert_with(S::zero);
            *slot = slot.clone() + w;
        }
        let total = scalar::sum(map.values().cloned());
        if !total.close_to(&S::one()) {
            return Err(Error::WeightSum(format!("{total:?}")));
        }
        Ok(KeislerMeasure {
            space: Arc::clone(space),
            weights: map,
        })
    }

    pub fn space(&self) -> &Arc<TypeSpace> {
        &self.space
    }

    pub fn weights(&self) -> &BTreeMap<usize, S> {
        &self.weights
    }

    pub fn weight(&self, id: usize) -> S {
        self.weights.get(&id).cloned().unwrap_or_else(S::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights.keys().copied()
    }

    pub fn total(&self) -> S {
        scalar::sum(self.weights.values().cloned())
    }

    /// Weights sorted by descending weight, ties broken by ascending type id.
    pub fn ranked(&self) -> Vec<(usize, S)> {
        let mut v: Vec<(usize, S)> = self.weights.iter().map(|(&k, w)| (k, w.clone())).collect();
        v.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.0.cmp(&b.0))
        });
        v
    }

    /// Convex combination `Σ c_k μ_k` of measures over the same space.
    pub fn mixture(parts: &[(S, &KeislerMeasure<S>)]) -> Result<Self> {
        let space = parts.first().ok_or(Error::EmptyAverage)?.1.space.clone();
        let mut weights: Vec<(usize, S)> = Vec::new();
        for (c, m) in parts {
            if !Arc::ptr_eq(&m.space, &space) && *m.space != *space {
                return Err(Error::ModelMismatch);
            }
            weights.extend(m.weights.iter().map(|(&k, w)| (k, c.clone() * w.clone())));
        }
        KeislerMeasure::new(&space, weights)
    }
}

/// Point mass at a type.
pub fn dirac<S: Scalar>(space: &Arc<TypeSpace>, type_id: usize) -> Result<KeislerMeasure<S>> {
    space.get(type_id)?;
    KeislerMeasure::new(space, [(type_id, S::one())])
}

/// Empirical measure of a list of ambient elements (multiplicities counted).
pub fn average<S: Scalar>(space: &Arc<TypeSpace>, elements: &[usize]) -> Result<KeislerMeasure<S>> {
    if elements.is_empty() {
        return Err(Error::EmptyAverage);
    }
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &e in elements {
        *counts.entry(space.type_of(e)?).or_default() += 1;
    }
    let n = elements.len() as u64;
    KeislerMeasure::new(
        space,
        counts
            .into_iter()
            .map(|(id, c)| (id, S::from_ratio(c as i64, n))),
    )
}

fn check_formula<S: Scalar>(mu: &KeislerMeasure<S>, f: &Formula) -> Result<()> {
    let rel = mu.space.relation();
    let side = mu.space.side();
    if f.side() != side || f.extension().len() != rel.element_count(side) {
        return Err(Error::ModelMismatch);
    }
    let params = rel.params(side);
    if f.atoms().iter().any(|a| params.binary_search(a).is_err()) {
        return Err(Error::ModelMismatch);
    }
    Ok(())
}

/// μ(f): total weight of the types satisfying `f` (checked on a realizer).
pub fn measure_of_formula<S: Scalar>(mu: &KeislerMeasure<S>, f: &Formula) -> Result<S> {
    check_formula(mu, f)?;
    let rel = mu.space.relation();
    let mut total = S::zero();
    for (&id, w) in &mu.weights {
        let t = mu.space.get(id)?;
        let e = *t.realizers.first().ok_or(Error::NoRealizer(id))?;
        if f.holds(rel, e) {
            total = total + w.clone();
        }
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition<S: Scalar> {
    /// The {0,1}-valued part: Σ r_i δ_{p_i}.
    pub atomic: KeislerMeasure<S>,
    /// (type id, weight), descending weight then ascending id.
    pub components: Vec<(usize, S)>,
    /// Mass of the strongly continuous part; zero on a finite algebra.
    pub residual: S,
}

/// Splits a raw assignment of values to all atoms (indexed by type id).
pub fn sobczyk_hammer_decompose<S: Scalar>(
    space: &Arc<TypeSpace>,
    raw: &[S],
) -> Result<Decomposition<S>> {
    if raw.len() != space.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} atom values for {} atoms",
            raw.len(),
            space.len()
        )));
    }
    if let Some(i) = raw.iter().position(Scalar::is_negative_value) {
        return Err(Error::NegativeWeight(i));
    }
    let atomic = KeislerMeasure::new(space, raw.iter().cloned().enumerate())?;
    let components = atomic.ranked();
    let residual = S::one() - atomic.total();
    // a finite algebra has no strongly continuous measures
    let residual = if residual.close_to(&S::zero()) {
        S::zero()
    } else {
        residual
    };
    Ok(Decomposition {
        atomic,
        components,
        residual,
    })
}

/// Smallest ε for which μ fails to be ε-strongly continuous: on a finite
/// algebra the finest partition is the atom partition, so this is the
/// largest atom weight.
pub fn strong_continuity_deficit<S: Scalar>(mu: &KeislerMeasure<S>) -> S {
    scalar::max(mu.weights.values().cloned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{full_subsets, half_graph};
    use crate::relation::{Expr, Side};
    use crate::types::compute_type_space;
    use crate::Rational;

    fn space(rel: crate::relation::AmbientRelation) -> Arc<TypeSpace> {
        Arc::new(compute_type_space(&Arc::new(rel), Side::Phi))
    }

    fn q(n: i64, d: u64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn dirac_is_zero_one_valued() {
        let sp = space(half_graph(5));
        let mu: KeislerMeasure<Rational> = dirac(&sp, 0).unwrap();
        assert_eq!(mu.weights().len(), 1);
        let rel = sp.relation().clone();
        for b in 0..5 {
            let f = rel.formula(Side::Phi, Expr::Atom(b)).unwrap();
            let v = measure_of_formula(&mu, &f).unwrap();
            assert!(v == q(0, 1) || v == q(1, 1));
        }
        assert_eq!(
            dirac::<Rational>(&sp, 99).unwrap_err(),
            Error::UnknownType(99)
        );
    }

    #[test]
    fn average_examples() {
        let sp = space(half_graph(4));
        let single: KeislerMeasure<Rational> = average(&sp, &[2]).unwrap();
        assert_eq!(single, dirac(&sp, sp.type_of(2).unwrap()).unwrap());

        let two: KeislerMeasure<Rational> = average(&sp, &[0, 1]).unwrap();
        assert_eq!(two.weights().values().cloned().collect::<Vec<_>>(), vec![q(1, 2), q(1, 2)]);

        let rep: KeislerMeasure<Rational> = average(&sp, &[3, 3, 1]).unwrap();
        assert_eq!(rep.weight(sp.type_of(3).unwrap()), q(2, 3));
        assert_eq!(rep.weight(sp.type_of(1).unwrap()), q(1, 3));

        assert_eq!(average::<Rational>(&sp, &[]).unwrap_err(), Error::EmptyAverage);
        assert!(matches!(
            average::<Rational>(&sp, &[7]),
            Err(Error::ElementOutOfRange { .. })
        ));
    }

    #[test]
    fn measure_of_formula_examples() {
        let sp = space(half_graph(4));
        let rel = sp.relation().clone();
        let mu: KeislerMeasure<Rational> = average(&sp, &[0, 1, 2, 3]).unwrap();
        let t = rel.formula(Side::Phi, Expr::True).unwrap();
        let f = rel.formula(Side::Phi, Expr::False).unwrap();
        assert_eq!(measure_of_formula(&mu, &t).unwrap(), q(1, 1));
        assert_eq!(measure_of_formula(&mu, &f).unwrap(), q(0, 1));
        let col2 = rel.formula(Side::Phi, Expr::Atom(2)).unwrap();
        assert_eq!(measure_of_formula(&mu, &col2).unwrap(), q(2, 4));
    }

    #[test]
    fn formula_from_other_side_is_rejected() {
        let sp = space(half_graph(4));
        let rel = sp.relation().clone();
        let mu: KeislerMeasure<Rational> = dirac(&sp, 0).unwrap();
        let g = rel.formula(Side::Opp, Expr::Atom(1)).unwrap();
        assert_eq!(measure_of_formula(&mu, &g), Err(Error::ModelMismatch));
    }

    #[test]
    fn constructor_validation() {
        let sp = space(half_graph(3));
        assert_eq!(
            KeislerMeasure::new(&sp, [(0, q(-1, 2)), (1, q(3, 2))]).unwrap_err(),
            Error::NegativeWeight(0)
        );
        assert!(matches!(
            KeislerMeasure::new(&sp, [(0, q(1, 2))]),
            Err(Error::WeightSum(_))
        ));
        let m = KeislerMeasure::new(&sp, [(0, q(1, 1)), (1, q(0, 1))]).unwrap();
        assert_eq!(m.weights().len(), 1);
    }

    #[test]
    fn decomposition_examples() {
        let sp = space(full_subsets(2));
        let d = sobczyk_hammer_decompose(&sp, &[q(1, 4), q(1, 4), q(1, 4), q(1, 4)]).unwrap();
        assert_eq!(d.residual, q(0, 1));
        assert!(d.components.iter().all(|(_, w)| *w == q(1, 4)));

        let d = sobczyk_hammer_decompose(&sp, &[q(1, 6), q(0, 1), q(1, 2), q(1, 3)]).unwrap();
        assert_eq!(
            d.components,
            vec![(2, q(1, 2)), (3, q(1, 3)), (0, q(1, 6))]
        );
        assert_eq!(d.residual, q(0, 1));

        assert!(matches!(
            sobczyk_hammer_decompose(&sp, &[q(1, 2), q(1, 2), q(-1, 4), q(1, 4)]),
            Err(Error::NegativeWeight(2))
        ));
        assert!(matches!(
            sobczyk_hammer_decompose(&sp, &[q(1, 2), q(1, 2), q(1, 4), q(1, 4)]),
            Err(Error::WeightSum(_))
        ));
    }

    #[test]
    fn deficit_examples() {
        let sp = space(full_subsets(2));
        let d: KeislerMeasure<Rational> = dirac(&sp, 1).unwrap();
        assert_eq!(strong_continuity_deficit(&d), q(1, 1));
        let u: KeislerMeasure<Rational> = average(&sp, &[0, 1, 2, 3]).unwrap();
        assert_eq!(strong_continuity_deficit(&u), q(1, 4));
        let h: KeislerMeasure<Rational> = average(&sp, &[0, 3]).unwrap();
        assert_eq!(strong_continuity_deficit(&h), q(1, 2));
    }

    #[test]
    fn float_measures_work_too() {
        let sp = space(full_subsets(2));
        let m: KeislerMeasure<f64> = average(&sp, &[0, 1, 2]).unwrap();
        assert!(m.total().close_to(&1.0));
        let mix = KeislerMeasure::mixture(&[(0.5, &m), (0.5, &dirac(&sp, 3).unwrap())]).unwrap();
        assert!((mix.weight(3) - 0.5).abs() < 1e-12);
    }
}
