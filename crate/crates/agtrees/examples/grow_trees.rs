//! Grows trees with every variant of the `(α, γ)` growth process and prints
//! the exact law of the non-planar process at small size.
//!
//! Usage: `cargo run --example grow_trees -- [n] [alpha] [gamma]`

use agtrees::exact::{exact_law, format_law, Caps};
use agtrees::growth::{grow_nonplanar, grow_semiplanar, GrowthModel, Variant};
use agtrees::sampling::{replica_rng, RngChooser};
use agtrees::{Params, Result};

fn main() -> Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    let alpha = args.get(2).map(String::as_str).unwrap_or("2/3");
    let gamma = args.get(3).map(String::as_str).unwrap_or("1/3");
    let exact = Params::parse(alpha, gamma)?;
    let params = exact.to_f64();

    let mut rng = replica_rng(42, 0);
    let mut ch = RngChooser::new(&mut rng);
    for variant in [Variant::NonPlanar, Variant::SemiPlanar, Variant::Internal, Variant::BranchPoint(3)] {
        let model = GrowthModel::new(variant, params.clone())?;
        let tree = if variant == Variant::NonPlanar {
            grow_nonplanar(&model, n, &mut ch)?.encode()
        } else {
            grow_semiplanar(&model, n, &mut ch)?.encode()
        };
        println!("{variant:?}: {tree}");
    }

    let model = GrowthModel::new(Variant::NonPlanar, exact)?;
    println!("exact non-planar law at n = 4:");
    for (tree, p) in format_law(&exact_law(&model, 4, None, &Caps::default())?) {
        println!("  {tree:<16} {p}");
    }
    Ok(())
}
