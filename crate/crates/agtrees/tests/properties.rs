//! Property-based invariants of trees, growth, chains, projections and the
//! urn primitives.

use agtrees::chains::{decorated_chain_step, lift_decorated, nonplanar_chain_step, semiplanar_chain_step};
use agtrees::decorated::{project_collapsed, project_decorated, DecoratedTree};
use agtrees::growth::{grow_decorated_to, grow_nonplanar, grow_nonplanar_fast, grow_semiplanar, GrowthModel, Variant};
use agtrees::numeric::{format_q, parse_rational};
use agtrees::sampling::{replica_rng, sample_index, RngChooser};
use agtrees::semiplanar::SemiPlanarTree;
use agtrees::tree::LabelledTree;
use agtrees::urn::{compositions, decrement_pmf, dirmult_pmf, UrnWeights};
use agtrees::{Params, Scalar, Q};
use proptest::prelude::*;

/// Valid `(α, γ)` with `0 ≤ γ ≤ α ≤ 1`, kept off the boundary `α = 1`.
fn params() -> impl Strategy<Value = Params<f64>> {
    (0.05f64..0.95, 0.0f64..1.0).prop_map(|(a, t)| Params::new(a, a * t).expect("valid"))
}

fn exact_params() -> impl Strategy<Value = Params<Q>> {
    (1i64..20, 0i64..=20).prop_map(|(a, t)| {
        let alpha = Q::ratio(a, 20);
        let gamma = alpha.clone() * Q::ratio(t, 20);
        Params::new(alpha, gamma).expect("valid")
    })
}

fn assert_labels(t: &LabelledTree, n: usize) {
    assert_eq!(t.n_leaves(), n);
    assert_eq!(t.labels(), (1..=n).collect::<Vec<_>>());
    t.tree().validate().expect("valid tree");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grown_trees_are_valid_and_round_trip(p in params(), n in 1usize..14, seed in any::<u64>()) {
        let mut rng = replica_rng(seed, 0);
        let mut ch = RngChooser::new(&mut rng);
        let np = grow_nonplanar(&GrowthModel::new(Variant::NonPlanar, p.clone()).unwrap(), n, &mut ch).unwrap();
        assert_labels(&np, n);
        prop_assert_eq!(LabelledTree::parse(&np.encode()).unwrap(), np.clone());

        let fast = LabelledTree::from_tree(grow_nonplanar_fast(&p, n, &mut ch).unwrap());
        assert_labels(&fast, n);

        let sp = grow_semiplanar(&GrowthModel::new(Variant::SemiPlanar, p.clone()).unwrap(), n, &mut ch).unwrap();
        prop_assert!(sp.tree().leftmost_pairs_are_minimal());
        prop_assert_eq!(SemiPlanarTree::parse(&sp.encode()).unwrap().encode(), sp.encode());
        assert_labels(&sp.project(), n);
    }

    #[test]
    fn chains_preserve_size_and_labels(p in params(), n in 3usize..12, steps in 1usize..20, seed in any::<u64>()) {
        let mut rng = replica_rng(seed, 1);
        let mut ch = RngChooser::new(&mut rng);
        let mut np = grow_nonplanar(&GrowthModel::new(Variant::NonPlanar, p.clone()).unwrap(), n, &mut ch).unwrap();
        let mut sp = grow_semiplanar(&GrowthModel::new(Variant::SemiPlanar, p.clone()).unwrap(), n, &mut ch).unwrap();
        for _ in 0..steps {
            np = nonplanar_chain_step(&np, &p, &mut ch, None).unwrap();
            sp = semiplanar_chain_step(&sp, &p, &mut ch, None).unwrap();
            assert_labels(&np, n);
            assert_labels(&sp.project(), n);
            prop_assert!(sp.tree().leftmost_pairs_are_minimal());
        }
    }

    #[test]
    fn decorated_masses_are_conserved(p in params(), k in 1usize..5, extra in 0usize..20, steps in 0usize..20, seed in any::<u64>()) {
        let n = k + 1 + extra;
        let mut rng = replica_rng(seed, 2);
        let mut ch = RngChooser::new(&mut rng);
        let shape = grow_nonplanar(&GrowthModel::new(Variant::NonPlanar, p.clone()).unwrap(), k, &mut ch).unwrap();
        let mut d = grow_decorated_to(&DecoratedTree::unit(&shape), &p, n, &mut ch).unwrap();
        for _ in 0..steps {
            if k >= 2 {
                d = decorated_chain_step(&d, &p, &mut ch, None).unwrap();
            }
            d.validate().unwrap();
            prop_assert_eq!(d.n(), n);
            prop_assert_eq!(d.k(), k);
            prop_assert_eq!(d.masses().iter().map(|(_, m)| m).sum::<usize>(), n);
        }
        prop_assert_eq!(DecoratedTree::from_key(&d.key()).unwrap(), d.clone());
        prop_assert_eq!(DecoratedTree::from_json(&d.to_json()).unwrap(), d.clone());
        // a lift of d projects back onto d
        let lifted = lift_decorated(&d, &p, &mut ch).unwrap();
        prop_assert_eq!(project_decorated(&lifted.project(), k).unwrap(), d);
    }

    #[test]
    fn projections_commute_and_count(p in params(), n in 2usize..12, seed in any::<u64>()) {
        let mut rng = replica_rng(seed, 3);
        let mut ch = RngChooser::new(&mut rng);
        let t = grow_nonplanar(&GrowthModel::new(Variant::NonPlanar, p).unwrap(), n, &mut ch).unwrap();
        for k in 1..=n {
            let d = project_decorated(&t, k).unwrap();
            prop_assert_eq!(d.n(), n);
            prop_assert_eq!(d.k(), k);
            prop_assert_eq!(project_collapsed(t.tree(), k).unwrap().to_decorated(), d.clone());
            for k2 in 1..=k {
                prop_assert_eq!(d.project(k2).unwrap(), project_decorated(&t, k2).unwrap());
            }
        }
        prop_assert_eq!(project_decorated(&t, n).unwrap(), DecoratedTree::unit(&t));
    }

    #[test]
    fn dirichlet_multinomial_sums_to_one(ws in prop::collection::vec(1i64..30, 1..5), n in 0usize..9) {
        let w = UrnWeights::new(ws.iter().map(|&x| Q::ratio(x, 7)).collect()).unwrap();
        let total = compositions(n, ws.len()).iter().fold(Q::zero(), |a, c| a + dirmult_pmf(n, &w, c).unwrap());
        prop_assert_eq!(total, Q::one());
    }

    #[test]
    fn decrement_rows_sum_to_one(p in exact_params(), n in 1usize..25) {
        let theta = p.alpha.clone() - p.gamma.clone();
        let total = (1..=n).fold(Q::zero(), |a, m| a + decrement_pmf(n, m, &p.alpha, &theta).unwrap());
        prop_assert_eq!(total, Q::one());
    }

    #[test]
    fn rational_parsing_round_trips(num in 0i64..1000, den in 1i64..1000) {
        let q = Q::ratio(num, den);
        prop_assert_eq!(parse_rational(&format_q(&q)).unwrap(), q);
    }

    #[test]
    fn inverse_cdf_never_picks_zero_weight(ws in prop::collection::vec(0u8..4, 1..8), u in 0.0f64..1.0) {
        prop_assume!(ws.iter().any(|&w| w > 0));
        let w: Vec<f64> = ws.iter().map(|&x| x as f64).collect();
        let i = sample_index(&w, u);
        prop_assert!(i < w.len());
        prop_assert!(w[i] > 0.0);
    }
}
