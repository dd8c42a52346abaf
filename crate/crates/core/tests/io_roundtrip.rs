use locstab::generate::{half_model, random_bipartite, GeneratorSpec};
use locstab::io::{format_rational, parse_rational, parse_relation, write_relation_json, write_relation_text};
use locstab::Rational;
use proptest::prelude::*;

proptest! {
    #[test]
    fn canonical_documents_round_trip(rows in 1usize..12, cols in 1usize..12, seed in 0u64..1000) {
        let rel = half_model(&random_bipartite(rows, cols, 0.5, seed)).unwrap();
        let text = write_relation_text(&rel);
        prop_assert_eq!(&write_relation_text(&parse_relation(&text).unwrap()), &text);
        let json = write_relation_json(&rel);
        prop_assert_eq!(&write_relation_json(&parse_relation(&json).unwrap()), &json);
        prop_assert_eq!(parse_relation(&text).unwrap(), rel);
    }

    #[test]
    fn rationals_round_trip(n in -1000i64..1000, d in 1i64..1000) {
        let v = Rational::new(n.into(), d.into());
        prop_assert_eq!(parse_rational(&format_rational(&v)).unwrap(), v);
    }

    #[test]
    fn generator_specs_round_trip(n in 1usize..20, r in 1usize..9, c in 1usize..9, seed in 0u64..99, half in any::<bool>()) {
        for s in [
            format!("half_graph({n})"),
            format!("random_bipartite({r},{c},0.25,{seed})"),
            format!("random_stable({r},{c},{seed})"),
            format!("full_subsets({})", c.min(6)),
        ] {
            let s = if half { format!("{s}@half") } else { s };
            let spec: GeneratorSpec = s.parse().unwrap();
            prop_assert_eq!(spec.to_string(), s);
        }
    }
}
