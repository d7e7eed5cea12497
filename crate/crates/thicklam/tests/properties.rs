use proptest::prelude::*;

use thicklam::flatsurf::expansion::{continued_fraction, flow_factor};
use thicklam::hypgraph::farey::{farey_distance, geodesic_successors};
use thicklam::hypgraph::{gromov_product, ExactGraph, FareyGraph, TreeGraph};
use thicklam::manifest::{Certificate, SessionManifest};
use thicklam::modular::{Mat2, Slope};
use thicklam::numeric::{q_frac, Q};
use thicklam::traintrack::torus::{euclid_digits, split_sequence};
use thicklam::word::{Letter, Word};

fn slope() -> impl Strategy<Value = Slope> {
    prop_oneof![
        1 => Just(Slope::infinity()),
        20 => (-200i64..200, 1i64..120).prop_filter_map("reduced", |(p, q)| {
            (num_integer::gcd(p, q) == 1).then(|| Slope::new(p, q).unwrap())
        }),
    ]
}

fn word(max: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(0usize..4, 0..max).prop_map(|v| Word::from_letters(v.into_iter().map(Letter::from_index)))
}

fn generator() -> impl Strategy<Value = Mat2> {
    prop_oneof![Just(Mat2::t()), Just(Mat2::s()), Just(Mat2::new(1, -1, 0, 1)), Just(Mat2::new(0, 1, -1, 0))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn farey_distance_is_a_metric(a in slope(), b in slope(), c in slope()) {
        prop_assert_eq!(farey_distance(&a, &b), farey_distance(&b, &a));
        prop_assert_eq!(farey_distance(&a, &b) == 0, a == b);
        prop_assert!(farey_distance(&a, &c) <= farey_distance(&a, &b) + farey_distance(&b, &c));
    }

    #[test]
    fn farey_distance_is_invariant(a in slope(), b in slope(), gens in prop::collection::vec(generator(), 1..6)) {
        let m = gens.iter().fold(Mat2::identity(), |acc, g| acc.mul(g));
        prop_assert_eq!(farey_distance(&m.act(&a), &m.act(&b)), farey_distance(&a, &b));
    }

    #[test]
    fn successors_step_toward_the_target(a in slope(), b in slope()) {
        let d = farey_distance(&a, &b);
        for s in geodesic_successors(&a, &b) {
            prop_assert!(s.adjacent(&a));
            prop_assert_eq!(farey_distance(&s, &b) + 1, d);
        }
    }

    #[test]
    fn farey_geodesics_are_paths(a in slope(), b in slope()) {
        let g = FareyGraph::default();
        let path = g.geodesic(&a, &b);
        prop_assert_eq!(path.len() as u64, farey_distance(&a, &b) + 1);
        prop_assert!(path.windows(2).all(|w| w[0].adjacent(&w[1])));
    }

    #[test]
    fn tree_products_are_common_prefixes(x in word(12), y in word(12)) {
        let g = TreeGraph::default();
        let p = gromov_product(&g, &x, &y, &Word::identity());
        prop_assert_eq!(p.to_f64(), x.common_prefix(&y) as f64);
    }

    #[test]
    fn words_form_a_group(x in word(10), y in word(10)) {
        prop_assert_eq!(x.mul(&x.inverse()), Word::identity());
        prop_assert_eq!(x.mul(&y).inverse(), y.inverse().mul(&x.inverse()));
        prop_assert_eq!(x.to_string().parse::<Word>().unwrap(), x);
    }

    #[test]
    fn continued_fractions_round_trip(s in slope()) {
        prop_assume!(!s.is_infinity());
        prop_assert_eq!(Slope::from_continued_fraction(&s.continued_fraction()), s.clone());
        prop_assert_eq!(s.continued_fraction(), euclid_digits(s.p(), s.q()));
        let x = Q::new(s.p().clone(), s.q().clone());
        prop_assert_eq!(continued_fraction(&x, 1000), euclid_digits(s.p(), s.q()));
    }

    #[test]
    fn splits_terminate_with_a_central_split(p in 1i64..500, q in 1i64..500) {
        prop_assume!(num_integer::gcd(p, q) == 1 && p != q);
        let seq = split_sequence(&Slope::new(p, q).unwrap(), 10_000);
        prop_assert!(seq.word().ends_with('C'));
    }

    #[test]
    fn flow_factors_invert(n in -64i64..64, d in 1i64..16) {
        let t = q_frac(n, d);
        prop_assert_eq!(flow_factor(&t) * flow_factor(&-t.clone()), q_frac(1, 1));
    }

    #[test]
    fn certificates_round_trip(seed in any::<u64>(), path in prop::collection::vec("[a-z]{1,6}", 0..4)) {
        let m = SessionManifest::new(seed, path.join(" "));
        let c = Certificate::issue(m, "test.kind", true, serde_json::json!({ "path": path }));
        let back = Certificate::from_json(&c.to_json()).unwrap();
        prop_assert!(back.replay().unwrap().pass);
    }
}
