//! Monte Carlo harness: determinism, replica merging and reference laws.

use agtrees::cli::{exact_reference, urn_reference};
use agtrees::harness::{dirmult_decorated_law, run_replica, run_simulation, Observable, RunConfig, Space, Start};
use agtrees::stats::{compare_distributions, Reference};
use agtrees::tree::LabelledTree;
use agtrees::Params;

fn config(space: Space) -> RunConfig {
    let mut cfg = RunConfig::new(space, Params::new(2.0 / 3.0, 1.0 / 3.0).unwrap());
    cfg.n = 5;
    cfg.k = 2;
    cfg.steps = 3_000;
    cfg.burn_in = 500;
    cfg.thin = 2;
    cfg.replicas = 3;
    cfg.seed = 11;
    cfg
}

#[test]
fn simulations_are_reproducible_and_replicas_merge_by_sum() {
    for space in [Space::Uniform, Space::Alpha, Space::NonPlanar, Space::SemiPlanar, Space::Decorated] {
        let mut cfg = config(space);
        if space == Space::Decorated {
            // a [2]-shape is unique; the masses carry the state
            cfg.observable = Observable::Masses;
        }
        let a = run_simulation(&cfg).unwrap();
        let b = run_simulation(&cfg).unwrap();
        assert_eq!(a.counts, b.counts, "{space:?}");
        assert_eq!(a.total, cfg.replicas * cfg.samples_per_replica());
        let mut merged = std::collections::BTreeMap::new();
        for r in 0..cfg.replicas {
            for (k, v) in run_replica(&cfg, r).unwrap().counts {
                *merged.entry(k).or_insert(0u64) += v;
            }
        }
        assert_eq!(merged, a.counts);
        let mut other = cfg.clone();
        other.seed += 1;
        assert_ne!(run_simulation(&other).unwrap().counts, a.counts);
    }
}

#[test]
fn invalid_configurations_are_rejected() {
    let mut cfg = config(Space::Decorated);
    cfg.k = 5;
    assert!(run_simulation(&cfg).is_err());
    let mut cfg = config(Space::NonPlanar);
    cfg.n = 2;
    assert!(run_simulation(&cfg).is_err());
    let mut cfg = config(Space::NonPlanar);
    cfg.burn_in = cfg.steps + 1;
    assert!(run_simulation(&cfg).is_err());
}

#[test]
fn semiplanar_state_occupation_matches_the_exact_law() {
    let mut cfg = config(Space::SemiPlanar);
    cfg.n = 4;
    cfg.steps = 200_000;
    cfg.thin = 1;
    cfg.replicas = 1;
    cfg.observable = Observable::State;
    cfg.start = Start::Growth;
    let reference = exact_reference(&cfg, &Params::parse("2/3", "1/3").unwrap()).unwrap();
    let run = run_simulation(&cfg).unwrap();
    let c = compare_distributions(&run.counts, &Reference::Law(reference)).unwrap();
    assert!(c.tv < 0.02, "tv = {}", c.tv);
}

#[test]
fn urn_reference_agrees_with_the_exact_decorated_law() {
    let mut cfg = config(Space::Decorated);
    cfg.n = 5;
    cfg.observable = Observable::Masses;
    let p = Params::parse("2/3", "1/3").unwrap();
    let exact = exact_reference(&cfg, &p).unwrap();
    let urn = urn_reference(&cfg, &p).unwrap();
    assert_eq!(exact.len(), urn.len());
    for (k, v) in &exact {
        assert!((v - urn[k]).abs() < 1e-12, "{k}");
    }
    let direct = dirmult_decorated_law(&LabelledTree::parse("(1,2)").unwrap(), 5, &p.to_f64()).unwrap();
    assert!((direct.values().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn streams_are_identical_across_runs_and_thread_counts() {
    let mut cfg = config(Space::NonPlanar);
    cfg.steps = 10;
    cfg.burn_in = 0;
    cfg.thin = 1;
    cfg.keep_stream = true;
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| run_simulation(&cfg).unwrap());
    let b = four.install(|| run_simulation(&cfg).unwrap());
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.replicas[0].stream.len(), 10);
}

#[test]
fn uniform_chain_converges_to_the_uniform_law() {
    let mut cfg = RunConfig::new(Space::Uniform, Params::new(0.5, 0.5).unwrap());
    cfg.n = 4;
    cfg.steps = 1_000_000;
    cfg.burn_in = 1_000;
    cfg.observable = Observable::State;
    cfg.seed = 4;
    let reference = exact_reference(&cfg, &Params::parse("1/2", "1/2").unwrap()).unwrap();
    assert_eq!(reference.len(), 15);
    assert!(reference.values().all(|&v| (v - 1.0 / 15.0).abs() < 1e-15));
    let run = run_simulation(&cfg).unwrap();
    let c = compare_distributions(&run.counts, &Reference::Law(reference)).unwrap();
    assert!(c.tv <= 0.01, "tv = {}", c.tv);
}

#[test]
fn drift_weights_of_the_binary_two_leaf_shape() {
    let w = agtrees::harness::wf_weights(&LabelledTree::parse("(1,2)").unwrap(), &Params::new(0.5, 0.5).unwrap());
    let get = |a: &str| w.iter().find(|(k, _)| k == a).unwrap().1;
    assert_eq!(get("e:"), 0.5);
    assert_eq!(get("e:1"), -0.5);
    assert_eq!(get("e:2"), -0.5);
    // the binary branch point has weight α − γ = 0 and carries no mass
    assert_eq!(get("v:"), 0.0);
}

#[test]
fn scaling_trajectories_are_proportions() {
    let mut cfg = agtrees::harness::ScalingConfig::standard();
    cfg.ns = vec![12];
    cfg.horizon = 5.0;
    cfg.replicas = 1;
    let shape = LabelledTree::parse(&cfg.shape).unwrap();
    let tr = agtrees::harness::scaling_replica(&cfg, &shape, 12, 0).unwrap();
    for row in &tr.proportions {
        assert!(row.iter().all(|&x| (0.0..=1.0).contains(&x)));
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
    if let Some(s) = tr.stop_step {
        // frozen after the stop
        let at: Vec<&Vec<f64>> = tr.steps.iter().zip(&tr.proportions).filter(|(t, _)| **t >= s).map(|(_, p)| p).collect();
        assert!(at.windows(2).all(|w| w[0] == w[1]));
    }
}
