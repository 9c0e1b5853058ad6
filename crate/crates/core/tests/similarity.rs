use flexcloud::relstore::RatingMap;
use flexcloud::textkit::{sim_inv_euclidean, sim_jaccard, sim_pearson, tokenize};
use proptest::collection::{btree_map, vec};
use proptest::prelude::*;

fn words() -> impl Strategy<Value = Vec<String>> {
    vec(
        prop::sample::select(vec!["java", "data", "art", "history", "latin", "poetry"]),
        0..8,
    )
    .prop_map(|w| w.into_iter().map(String::from).collect())
}

fn ratings() -> impl Strategy<Value = RatingMap> {
    btree_map(0i64..10, -5.0f64..5.0, 0..8).prop_map(|m| m.into_iter().collect())
}

fn half_star_ratings() -> impl Strategy<Value = RatingMap> {
    btree_map(0i64..10, (0u8..=10).prop_map(|h| h as f64 / 2.0), 0..8)
        .prop_map(|m| m.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn symmetric_bitwise(a in words(), b in words(), u in ratings(), v in half_star_ratings()) {
        prop_assert_eq!(sim_jaccard(&a, &b).to_bits(), sim_jaccard(&b, &a).to_bits());
        prop_assert_eq!(sim_pearson(&u, &v).to_bits(), sim_pearson(&v, &u).to_bits());
        prop_assert_eq!(sim_inv_euclidean(&u, &v).to_bits(), sim_inv_euclidean(&v, &u).to_bits());
    }

    #[test]
    fn within_range(a in words(), b in words(), u in ratings(), v in ratings()) {
        let j = sim_jaccard(&a, &b);
        prop_assert!((0.0..=1.0).contains(&j));
        let e = sim_inv_euclidean(&u, &v);
        prop_assert!((0.0..=1.0).contains(&e));
        let p = sim_pearson(&u, &v);
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&p), "{}", p);
    }

    #[test]
    fn pearson_ignores_positive_affine_maps(
        pairs in btree_map(0i64..10, (-5.0f64..5.0, -5.0f64..5.0), 0..8),
        extra in ratings(),
        scale in 0.1f64..10.0,
        shift in -10.0f64..10.0,
    ) {
        let u: RatingMap = pairs.iter().map(|(k, p)| (*k, p.0)).chain(extra.iter().map(|(k, x)| (k + 10, x))).collect();
        let v: RatingMap = pairs.iter().map(|(k, p)| (*k, p.1)).collect();
        let moved: RatingMap = v.iter().map(|(k, y)| (k, scale * y + shift)).collect();
        // A nearly constant side can cross the zero-variance rule.
        let ys: Vec<f64> = v.iter().map(|p| p.1).collect();
        let spread = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max) - ys.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assume!(ys.len() < 2 || spread > 1e-6);
        let (before, after) = (sim_pearson(&u, &v), sim_pearson(&u, &moved));
        prop_assert!((before - after).abs() <= 1e-9, "{} vs {}", before, after);
    }

    #[test]
    fn identical_maps_are_fully_similar(u in ratings()) {
        prop_assume!(!u.is_empty());
        prop_assert_eq!(sim_inv_euclidean(&u, &u), 1.0);
    }

    #[test]
    fn identical_text_is_fully_similar(text in "[a-z ]{1,40}") {
        let t = tokenize(&text);
        prop_assume!(!t.is_empty());
        prop_assert_eq!(sim_jaccard(&t, &t), 1.0);
    }
}
