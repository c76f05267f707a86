//! Runs the decorated chain on a two-leaf shape and shows the mass
//! dynamics, then lifts the final state back to a semi-planar tree.
//!
//! Usage: `cargo run --example decorated_chain -- [n] [steps]`

use agtrees::chains::{decorated_chain_step, lift_decorated};
use agtrees::decorated::DecoratedTree;
use agtrees::growth::grow_decorated_to;
use agtrees::sampling::{replica_rng, RngChooser};
use agtrees::tree::LabelledTree;
use agtrees::{Params, Result};

fn main() -> Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(12);
    let steps: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(10);
    let params = Params::new(2.0 / 3.0, 1.0 / 3.0)?;
    let mut rng = replica_rng(3, 0);
    let mut ch = RngChooser::new(&mut rng);

    let shape = LabelledTree::parse("(1,2)")?;
    let mut d = grow_decorated_to(&DecoratedTree::unit(&shape), &params, n, &mut ch)?;
    println!("start {}", d.key());
    for step in 1..=steps {
        d = decorated_chain_step(&d, &params, &mut ch, None)?;
        let masses: Vec<String> = d.masses().iter().map(|(a, m)| format!("{a}={m}")).collect();
        println!("{step:>3}: {}", masses.join(" "));
    }
    println!("a lift of the final state: {}", lift_decorated(&d, &params, &mut ch)?.encode());
    Ok(())
}
