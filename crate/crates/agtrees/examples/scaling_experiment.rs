//! A reduced Wright-Fisher scaling experiment on decorated mass
//! proportions: relaxation time in chain steps for several total masses and
//! the fitted exponent (close to 2).
//!
//! Usage: `cargo run --release --example scaling_experiment -- [out_dir]`

use agtrees::harness::{wf_scaling_experiment, ScalingConfig};
use agtrees::Result;

fn main() -> Result<()> {
    let out = std::env::args().nth(1).map(std::path::PathBuf::from);
    let mut cfg = ScalingConfig::standard();
    cfg.ns = vec![20, 40];
    cfg.horizon = 60.0;
    cfg.replicas = 2;
    let s = wf_scaling_experiment(&cfg, out.as_deref())?;
    for p in &s.points {
        println!("n = {:>3}: τ = {:>8.1} steps = {:.3} n² ; max |z| = {:.2}", p.n, p.tau_steps, p.tau_units, p.max_z);
    }
    if let Some(f) = &s.fit {
        println!("fitted exponent {:.2} ± {:.2}", f.slope, f.slope_se);
    }
    Ok(())
}
