//! Exact verifier: stochasticity, fixed points, lumpability, intertwining,
//! the down-step independence table and independent counting oracles.

use agtrees::exact::*;
use agtrees::growth::{GrowthModel, Variant};
use agtrees::{Params, Scalar, Q};

fn p(a: &str, g: &str) -> Params<Q> {
    Params::parse(a, g).unwrap()
}

#[test]
fn every_kernel_is_stochastic_at_four_leaves() {
    let caps = Caps::default();
    let params = p("2/3", "1/3");
    let kinds = [ChainKind::Uniform, ChainKind::AlphaChain, ChainKind::NonPlanar, ChainKind::SemiPlanar, ChainKind::Decorated(2), ChainKind::Decorated(3)];
    for kind in kinds {
        let k = exact_kernel(kind, 4, &params, &caps).unwrap();
        assert!(k.n_rows() > 0);
        assert!(k.row_sum_residual().is_zero(), "{kind:?}");
        assert!(k.is_nonnegative(), "{kind:?}");
    }
}

#[test]
fn uniform_law_is_fixed_by_the_uniform_chain() {
    let caps = Caps::default();
    let k = exact_kernel(ChainKind::Uniform, 4, &p("1/2", "1/2"), &caps).unwrap();
    let uniform: Law = k.rows.keys().map(|s| (s.clone(), Q::ratio(1, 15))).collect();
    assert_eq!(uniform.len(), 15);
    assert!(check_stationarity(&k, &uniform).unwrap().is_zero());
}

#[test]
fn growth_law_is_fixed_and_perturbations_are_detected() {
    let caps = Caps::default();
    let params = p("2/3", "1/3");
    let law = law_of(&nonplanar_growth_law(&GrowthModel::new(Variant::NonPlanar, params.clone()).unwrap(), 4, &caps).unwrap());
    let k = exact_kernel(ChainKind::NonPlanar, 4, &params, &caps).unwrap();
    assert!(check_stationarity(&k, &law).unwrap().is_zero());
    let mut perturbed = law.clone();
    let mut keys = perturbed.keys().cloned();
    let (a, b) = (keys.next().unwrap(), keys.next().unwrap());
    *perturbed.get_mut(&a).unwrap() += Q::ratio(1, 100);
    *perturbed.get_mut(&b).unwrap() -= Q::ratio(1, 100);
    assert!(!check_stationarity(&k, &perturbed).unwrap().is_zero());
}

#[test]
fn nonplanar_kernel_factorizes_through_the_semiplanar_chain() {
    for (a, g) in [("2/3", "1/3"), ("1/2", "1/2"), ("3/4", "1/4")] {
        let mut ctx = ExactContext::new(4, p(a, g), Caps::default());
        for c in kernel_equality_checks(&mut ctx, &[2, 3]).unwrap() {
            assert!(c.pass, "{} at ({a},{g}): {:?}", c.name, c.residual);
        }
    }
}

#[test]
fn implemented_neighbour_law_matches_the_lift_and_the_alternative_does_not() {
    let mut ctx = ExactContext::new(5, p("2/3", "1/3"), Caps::default());
    let rows = i_tilde_report(&mut ctx).unwrap();
    let zero = |s: &Option<String>| s.as_deref().map(|r| agtrees::numeric::parse_rational(r).unwrap().is_zero());
    assert!(rows.iter().all(|r| zero(&r.implemented_residual) != Some(false)));
    assert!(rows.iter().any(|r| zero(&r.alternative_residual) == Some(false)));
    assert!(rows.iter().any(|r| r.alternative_row_sum != "1/1"));
}

#[test]
fn lumpability_passes_for_decorated_blocks_and_fails_for_a_wrong_partition() {
    let mut ctx = ExactContext::new(4, p("2/3", "1/3"), Caps::default());
    let checks = lumpability_intertwining_checks(&mut ctx, 2).unwrap();
    assert!(checks.iter().find(|c| c.name.starts_with("lumpability")).unwrap().pass);
    assert!(checks.iter().find(|c| c.name.starts_with("intertwining/collapsed")).unwrap().pass);

    let k = exact_kernel(ChainKind::NonPlanar, 4, &p("2/3", "1/3"), &Caps::default()).unwrap();
    assert!(check_lumpability(&k, |_| "all".to_string()).pass);
    // blocks by the position of label 1 in the encoding are not lumpable
    let wrong = check_lumpability(&k, |s| s.find('4').unwrap().to_string());
    assert!(!wrong.pass);
    let (x1, x2, _) = wrong.witness.unwrap();
    assert_ne!(x1, x2);
}

#[test]
fn identity_lift_is_a_trivial_intertwining() {
    let k = exact_kernel(ChainKind::SemiPlanar, 4, &p("2/3", "1/3"), &Caps::default()).unwrap();
    let id = ExactKernel::from_map(k.rows.keys(), |s| Ok(s.to_string())).unwrap();
    let r = check_intertwining(&id, &k, &id, &k);
    assert!(r.pass);
}

#[test]
fn decorated_composite_satisfies_the_matrix_identity_and_projected_markov_property() {
    let mut ctx = ExactContext::new(4, p("2/3", "1/3"), Caps::default());
    let checks = lumpability_intertwining_checks(&mut ctx, 2).unwrap();
    let d = checks.iter().find(|c| c.name.starts_with("intertwining/decorated")).unwrap();
    assert_eq!(d.details["matrix_residual"], "0/1");
    // the conditional-law clause does not hold at the decorated level
    assert_eq!(d.details["conditional_residual"], "1/16");
    assert!(check_projected_markov(&mut ctx, 2).unwrap().is_zero());
}

#[test]
fn independence_table_at_five_leaves() {
    let params = p("2/3", "1/3");
    let rep = check_downstep_independence(5, &params, &Caps::default()).unwrap();
    let zero = |s: &str| agtrees::numeric::parse_rational(s).unwrap().is_zero();
    assert!(zero(&rep.factorization_residual));
    assert!(zero(&rep.pushforward_residual));
    assert!(zero(&rep.off_diagonal_residual_i_ge_2));
    for row in &rep.table {
        let expected = match (row.i, row.i_tilde) {
            (1, 1) => "0/1",
            // leaves 1 and 2 are interchangeable: (1, 2) has the law of (2, 2)
            (1, 2) | (2, 2) => "1/10",
            (i, j) if i == j => match i {
                3 => "2/5",
                4 => "7/10",
                _ => "1/1",
            },
            _ => "3/10",
        };
        assert_eq!(row.prob, expected, "({}, {})", row.i, row.i_tilde);
    }
}

#[test]
fn enumeration_agrees_with_the_counting_recursion() {
    let caps = Caps::default();
    for n in 1..=6 {
        assert_eq!(enumerate_space(SpaceKind::NonPlanar, n, &caps).unwrap().len() as u128, count_labelled_trees(n), "n = {n}");
    }
    let known = [1u128, 1, 3, 15, 105, 945, 10395];
    for n in 1..=7 {
        assert_eq!(count_binary_trees(n), known[n - 1]);
        assert_eq!(enumerate_space(SpaceKind::Binary, n, &caps).unwrap().len() as u128, known[n - 1]);
    }
    assert_eq!(count_labelled_trees(4), 26);
}

#[test]
fn caps_are_enforced() {
    let caps = Caps { nonplanar: 4, semiplanar: 4, decorated: 4 };
    assert!(exact_kernel(ChainKind::NonPlanar, 5, &p("2/3", "1/3"), &caps).is_err());
    assert!(enumerate_space(SpaceKind::SemiPlanar, 5, &caps).is_err());
}

#[test]
fn exact_results_are_reproducible() {
    let run = || {
        let mut ctx = ExactContext::new(4, p("3/4", "1/4"), Caps::default());
        serde_json::to_string(&stationarity_checks(&mut ctx, &[2]).unwrap()).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn structural_identities_hold_exactly() {
    let caps = Caps::default();
    let params = p("2/3", "1/3");
    let mut ctx = ExactContext::new(4, params.clone(), caps.clone());
    assert!(check_projection_commutes(4, &params, &caps).unwrap().is_zero());
    for v in [Variant::SemiPlanar, Variant::Internal, Variant::BranchPoint(3)] {
        assert!(check_down_pushforward(v, 5, &params, &caps).unwrap().is_zero(), "{v:?}");
    }
    for k in 1..4 {
        assert!(check_decorated_growth(4, k, &params, &caps).unwrap().is_zero());
        assert!(check_leaf_location(4, k, &params, &caps).unwrap().is_zero());
        assert!(check_lift(&mut ctx, k).unwrap().is_zero());
    }
    assert!(check_resample_selection(4, 2, &params).unwrap().is_zero());
    assert!(check_tower(&mut ctx, 2, 3).unwrap().is_zero());
    assert!(check_weighted_start(3, 5, &params, &caps).unwrap().is_zero());
    assert!(check_branchpoint_decomposition(3, 2, &params, &caps).unwrap().is_zero());
    let shape = agtrees::tree::LabelledTree::parse("(1,2,3)").unwrap();
    assert!(check_decorated_dirmult(&shape, 3, &params).unwrap().is_zero());
}
