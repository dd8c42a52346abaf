//! The function F_μ, the Morley product at φ(x, y), and the evaluation map.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::KeislerMeasure;
use crate::relation::Side;
use crate::scalar::Scalar;
use crate::types::{PhiType, TypeSpace};

#[derive(Clone, Debug, PartialEq)]
pub struct MorleyReport<S> {
    /// (μ ⊗ ν)(φ); `None` when a weighted type is undefinable.
    pub value_forward: Option<S>,
    /// (ν ⊗ μ)(φ).
    pub value_backward: Option<S>,
    pub commutes: bool,
    pub undefinable_types: Vec<(Side, usize)>,
}

fn undefinable_in<S: Scalar>(mu: &KeislerMeasure<S>) -> Vec<(Side, usize)> {
    let side = mu.space().side();
    mu.support()
        .filter(|&id| !mu.space().types()[id].is_definable())
        .map(|id| (side, id))
        .collect()
}

fn check_pair<S: Scalar>(mu: &KeislerMeasure<S>, nu: &KeislerMeasure<S>) -> Result<()> {
    if mu.space().side() != Side::Phi || nu.space().side() != Side::Opp {
        return Err(Error::ModelMismatch);
    }
    if !Arc::ptr_eq(mu.space().relation(), nu.space().relation())
        && mu.space().relation() != nu.space().relation()
    {
        return Err(Error::ModelMismatch);
    }
    Ok(())
}

/// Does the definition of `p` hold of `q`? Evaluated at q's least realizer.
fn satisfies_definition(space_of_p: &TypeSpace, p: &PhiType, q: &PhiType) -> bool {
    let d = p.definition().expect("caller checked definability");
    d.holds(space_of_p.relation(), q.realizers[0])
}

/// F_μ as a table over the types of `opp`: the value at q is the total weight
/// of the types in μ's support whose definitions hold of q.
pub fn f_mu_values<S: Scalar>(
    mu: &KeislerMeasure<S>,
    opp: &TypeSpace,
) -> Result<BTreeMap<usize, S>> {
    if mu.space().side() != Side::Phi || opp.side() != Side::Opp {
        return Err(Error::ModelMismatch);
    }
    if mu.space().relation() != opp.relation() {
        return Err(Error::ModelMismatch);
    }
    let blocked = undefinable_in(mu);
    if !blocked.is_empty() {
        return Err(Error::Undefinable(blocked));
    }
    let space = mu.space();
    Ok(opp
        .types()
        .iter()
        .map(|q| {
            let v = mu
                .weights()
                .iter()
                .filter(|(&id, _)| satisfies_definition(space, &space.types()[id], q))
                .fold(S::zero(), |acc, (_, w)| acc + w.clone());
            (q.id, v)
        })
        .collect())
}

/// (μ ⊗ ν)(φ) = ∫ F_μ dν.
pub fn morley_product<S: Scalar>(mu: &KeislerMeasure<S>, nu: &KeislerMeasure<S>) -> Result<S> {
    check_pair(mu, nu)?;
    let mut blocked = undefinable_in(mu);
    blocked.extend(undefinable_in(nu));
    if !blocked.is_empty() {
        return Err(Error::Undefinable(blocked));
    }
    let f = f_mu_values(mu, nu.space())?;
    Ok(nu
        .weights()
        .iter()
        .fold(S::zero(), |acc, (id, s)| acc + s.clone() * f[id].clone()))
}

/// Both orders of the product, computed as independent double sums.
pub fn evaluation_map<S: Scalar>(
    mu: &KeislerMeasure<S>,
    nu: &KeislerMeasure<S>,
) -> Result<MorleyReport<S>> {
    check_pair(mu, nu)?;
    let mut blocked = undefinable_in(mu);
    blocked.extend(undefinable_in(nu));
    if !blocked.is_empty() {
        return Ok(MorleyReport {
            value_forward: None,
            value_backward: None,
            commutes: false,
            undefinable_types: blocked,
        });
    }
    let (ps, qs) = (mu.space(), nu.space());
    let mut forward = S::zero();
    let mut backward = S::zero();
    for (&i, r) in mu.weights() {
        let p = &ps.types()[i];
        for (&j, s) in nu.weights() {
            let q = &qs.types()[j];
            let rs = r.clone() * s.clone();
            // δ_q(d_p)
            if satisfies_definition(ps, p, q) {
                forward = forward + rs.clone();
            }
            // δ_p(d_q)
            if satisfies_definition(qs, q, p) {
                backward = backward + rs;
            }
        }
    }
    let commutes = forward.close_to(&backward);
    Ok(MorleyReport {
        value_forward: Some(forward),
        value_backward: Some(backward),
        commutes,
        undefinable_types: Vec::new(),
    })
}

/// E_φ over every pair of the two lists, row-major; cells evaluated in parallel.
pub fn evaluation_grid<S: Scalar>(
    mus: &[KeislerMeasure<S>],
    nus: &[KeislerMeasure<S>],
) -> Result<Vec<Vec<MorleyReport<S>>>> {
    mus.par_iter()
        .map(|mu| nus.iter().map(|nu| evaluation_map(mu, nu)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{half_graph, random_bipartite};
    use crate::measure::{average, dirac};
    use crate::relation::AmbientRelation;
    use crate::types::compute_type_space;
    use crate::Rational;

    fn spaces(rel: AmbientRelation) -> (Arc<TypeSpace>, Arc<TypeSpace>) {
        let rel = Arc::new(rel);
        (
            Arc::new(compute_type_space(&rel, Side::Phi).with_definitions()),
            Arc::new(compute_type_space(&rel, Side::Opp).with_definitions()),
        )
    }

    #[test]
    fn dirac_values_are_matrix_entries() {
        let rel = random_bipartite(5, 6, 0.5, 21);
        let (ps, qs) = spaces(rel.clone());
        for a in 0..5 {
            let mu: KeislerMeasure<Rational> = dirac(&ps, ps.type_of(a).unwrap()).unwrap();
            let f = f_mu_values(&mu, &qs).unwrap();
            for b in 0..6 {
                let qid = qs.type_of(b).unwrap();
                let expected = if rel.entry(a, b) { 1 } else { 0 };
                assert_eq!(f[&qid], Rational::from_ratio(expected, 1));
            }
        }
    }

    #[test]
    fn uniform_mu_gives_column_density() {
        let rel = half_graph(6);
        let (ps, qs) = spaces(rel.clone());
        let mu: KeislerMeasure<Rational> = average(&ps, &(0..6).collect::<Vec<_>>()).unwrap();
        let f = f_mu_values(&mu, &qs).unwrap();
        for b in 0..6 {
            let ones = (0..6).filter(|&a| rel.entry(a, b)).count();
            assert_eq!(f[&qs.type_of(b).unwrap()], Rational::from_ratio(ones as i64, 6));
        }
    }

    #[test]
    fn all_ones_is_constant() {
        let (ps, qs) = spaces(AmbientRelation::from_fn(3, 4, |_, _| true).unwrap());
        let mu: KeislerMeasure<Rational> = dirac(&ps, 0).unwrap();
        let nu: KeislerMeasure<Rational> = dirac(&qs, 0).unwrap();
        let rep = evaluation_map(&mu, &nu).unwrap();
        assert_eq!(rep.value_forward, Some(Rational::from_ratio(1, 1)));
        assert_eq!(rep.value_backward, Some(Rational::from_ratio(1, 1)));
        assert!(rep.commutes);
    }

    #[test]
    fn averages_give_edge_density() {
        let rel = random_bipartite(7, 7, 0.4, 5);
        let (ps, qs) = spaces(rel.clone());
        let rows = [0usize, 2, 2, 5];
        let cols = [1usize, 3, 6];
        let mu: KeislerMeasure<Rational> = average(&ps, &rows).unwrap();
        let nu: KeislerMeasure<Rational> = average(&qs, &cols).unwrap();
        let ones: usize = rows
            .iter()
            .map(|&a| cols.iter().filter(|&&b| rel.entry(a, b)).count())
            .sum();
        let expected = Rational::from_ratio(ones as i64, (rows.len() * cols.len()) as u64);
        assert_eq!(morley_product(&mu, &nu).unwrap(), expected);
        let rep = evaluation_map(&mu, &nu).unwrap();
        assert_eq!(rep.value_forward, Some(expected.clone()));
        assert_eq!(rep.value_backward, Some(expected));
    }

    #[test]
    fn product_against_point_mass_is_measure_of_instance() {
        let rel = random_bipartite(6, 5, 0.5, 8);
        let (ps, qs) = spaces(rel.clone());
        let mu: KeislerMeasure<Rational> = average(&ps, &[0, 1, 1, 4]).unwrap();
        for b in 0..5 {
            let nu: KeislerMeasure<Rational> = dirac(&qs, qs.type_of(b).unwrap()).unwrap();
            let f = rel.formula(Side::Phi, crate::relation::Expr::Atom(b)).unwrap();
            assert_eq!(
                morley_product(&mu, &nu).unwrap(),
                crate::measure::measure_of_formula(&mu, &f).unwrap()
            );
        }
    }

    #[test]
    fn undefinable_support_is_reported() {
        let m = vec![vec![true, true], vec![true, true], vec![true, false]];
        let rel = AmbientRelation::new(3, 2, &m, &[0, 1], &[0, 1]).unwrap();
        let (ps, qs) = spaces(rel);
        let bad = ps.type_of(2).unwrap();
        let mu: KeislerMeasure<Rational> = dirac(&ps, bad).unwrap();
        let nu: KeislerMeasure<Rational> = dirac(&qs, 0).unwrap();
        let rep = evaluation_map(&mu, &nu).unwrap();
        assert_eq!(rep.value_forward, None);
        assert_eq!(rep.undefinable_types, vec![(Side::Phi, bad)]);
        assert!(matches!(morley_product(&mu, &nu), Err(Error::Undefinable(_))));
        assert!(matches!(f_mu_values(&mu, &qs), Err(Error::Undefinable(_))));
    }

    #[test]
    fn sides_must_match() {
        let (ps, qs) = spaces(half_graph(3));
        let mu: KeislerMeasure<Rational> = dirac(&ps, 0).unwrap();
        let nu: KeislerMeasure<Rational> = dirac(&qs, 0).unwrap();
        assert_eq!(evaluation_map(&nu, &mu), Err(Error::ModelMismatch));
    }
}
