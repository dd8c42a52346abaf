mod common;

use common::*;
use locstab::generate::{half_model, random_bipartite, random_stable};
use locstab::measure::{average, sobczyk_hammer_decompose, KeislerMeasure};
use locstab::morley::{evaluation_map, morley_product};
use locstab::relation::Side;
use locstab::stability::ladder_index;
use locstab::Rational;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn averages_sum_to_one(seed in 0u64..1000, elems in proptest::collection::vec(0usize..9, 1..20)) {
        let rel = half_model(&random_bipartite(9, 7, 0.5, seed)).unwrap();
        let (ps, _) = spaces(rel);
        let mu: KeislerMeasure<Rational> = average(&ps, &elems).unwrap();
        prop_assert_eq!(mu.total(), q(1, 1));
    }

    #[test]
    fn decomposition_is_idempotent(seed in 0u64..1000, raw in proptest::collection::vec(0i64..10, 1..40)) {
        let rel = random_bipartite(40, 6, 0.5, seed);
        let (ps, _) = spaces(rel);
        let mut raw: Vec<i64> = raw.into_iter().cycle().take(ps.len()).collect();
        if raw.iter().all(|&x| x == 0) { raw[0] = 1; }
        let total: i64 = raw.iter().sum();
        let w: Vec<Rational> = raw.iter().map(|&x| q(x, total as u64)).collect();
        let d = sobczyk_hammer_decompose(&ps, &w).unwrap();
        prop_assert_eq!(&d.residual, &q(0, 1));
        let again: Vec<Rational> = (0..ps.len()).map(|i| d.atomic.weight(i)).collect();
        prop_assert_eq!(sobczyk_hammer_decompose(&ps, &again).unwrap(), d);
    }

    #[test]
    fn stable_products_commute(seed in 0u64..500, rows in 4usize..20, cols in 4usize..20, wseed in 0u64..1000) {
        let rel = half_model(&random_stable(rows, cols, seed)).unwrap();
        prop_assert!(ladder_index(&rel, 3).unwrap().0 <= 2);
        let (ps, qs) = spaces(rel);
        let dp: Vec<usize> = ps.types().iter().filter(|t| t.is_definable()).map(|t| t.id).collect();
        let dq: Vec<usize> = qs.types().iter().filter(|t| t.is_definable()).map(|t| t.id).collect();
        let mut r = rng(wseed);
        let mu = KeislerMeasure::new(&ps, random_weights(&mut r, &dp, 4)).unwrap();
        let nu = KeislerMeasure::new(&qs, random_weights(&mut r, &dq, 4)).unwrap();
        let rep = evaluation_map(&mu, &nu).unwrap();
        prop_assert!(rep.commutes);
        prop_assert_eq!(rep.value_forward.clone(), Some(morley_product(&mu, &nu).unwrap()));
    }

    #[test]
    fn realized_products_are_densities(seed in 0u64..500, wseed in 0u64..1000) {
        let rel = half_model(&random_bipartite(10, 10, 0.5, seed)).unwrap();
        let (ps, qs) = spaces(rel);
        let rp: Vec<usize> = ps.types().iter().filter(|t| t.realized_in_m).map(|t| t.id).collect();
        let rq: Vec<usize> = qs.types().iter().filter(|t| t.realized_in_m).map(|t| t.id).collect();
        let mut r = rng(wseed);
        let mu = KeislerMeasure::new(&ps, random_weights(&mut r, &rp, 4)).unwrap();
        let nu = KeislerMeasure::new(&qs, random_weights(&mut r, &rq, 4)).unwrap();
        let rep = evaluation_map(&mu, &nu).unwrap();
        let expect = product_by_realizers(&mu, &nu);
        prop_assert_eq!(rep.value_forward, Some(expect.clone()));
        prop_assert_eq!(rep.value_backward, Some(expect));
    }
}

#[test]
fn type_spaces_partition_elements() {
    for seed in 0..20 {
        let rel = half_model(&random_bipartite(12, 8, 0.4, seed)).unwrap();
        let (ps, qs) = spaces(rel.clone());
        for (sp, side) in [(&ps, Side::Phi), (&qs, Side::Opp)] {
            let n: usize = sp.types().iter().map(|t| t.realizers.len()).sum();
            assert_eq!(n, rel.element_count(side));
        }
    }
}
