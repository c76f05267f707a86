//! Runs the non-planar chain from a caterpillar and compares its shape
//! occupation frequencies with independent growth samples as the run length
//! increases.
//!
//! Usage: `cargo run --release --example monte_carlo_convergence -- [n]`

use agtrees::harness::{growth_shape_reference, run_simulation, RunConfig, Space};
use agtrees::stats::{compare_distributions, Reference};
use agtrees::{Params, Result};

fn main() -> Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    let params = Params::new(0.7, 0.4)?;
    let reference = Reference::Counts(growth_shape_reference(&params, n, 1_000_000, 1, 8)?);
    for steps in [1_000u64, 10_000, 100_000] {
        let mut cfg = RunConfig::new(Space::NonPlanar, params.clone());
        cfg.n = n;
        cfg.burn_in = 1_000;
        cfg.steps = cfg.burn_in + steps;
        cfg.seed = 5;
        let run = run_simulation(&cfg)?;
        let c = compare_distributions(&run.counts, &reference)?;
        println!("{steps:>7} steps: TV = {:.4}, {} shapes visited", c.tv, run.counts.len());
    }
    Ok(())
}
