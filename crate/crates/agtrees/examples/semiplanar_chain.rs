//! Runs the semi-planar and non-planar down-up chains, tracing each
//! down-step (uniform leaf, local-search partner, deleted label).
//!
//! Usage: `cargo run --example semiplanar_chain -- [n] [steps]`

use agtrees::chains::{nonplanar_chain_step, semiplanar_chain_step, DownStepTrace};
use agtrees::growth::{grow_nonplanar, grow_semiplanar, GrowthModel, Variant};
use agtrees::sampling::{replica_rng, RngChooser};
use agtrees::{Params, Result};

fn main() -> Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    let steps: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(5);
    let params = Params::new(2.0 / 3.0, 1.0 / 3.0)?;
    let mut rng = replica_rng(7, 0);
    let mut ch = RngChooser::new(&mut rng);

    let mut sp = grow_semiplanar(&GrowthModel::new(Variant::SemiPlanar, params.clone())?, n, &mut ch)?;
    println!("semi-planar start {}", sp.encode());
    for _ in 0..steps {
        let mut tr = DownStepTrace::default();
        sp = semiplanar_chain_step(&sp, &params, &mut ch, Some(&mut tr))?;
        println!("  I={} Ĩ={} after down {} -> {}", tr.i, tr.i_tilde, tr.post, sp.encode());
    }

    let mut np = grow_nonplanar(&GrowthModel::new(Variant::NonPlanar, params.clone())?, n, &mut ch)?;
    println!("non-planar start {}", np.encode());
    for _ in 0..steps {
        let mut tr = DownStepTrace::default();
        np = nonplanar_chain_step(&np, &params, &mut ch, Some(&mut tr))?;
        println!("  I={} Ĩ={} after down {} -> {}", tr.i, tr.i_tilde, tr.post, np.encode());
    }
    Ok(())
}
