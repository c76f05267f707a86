//! The urn-level building blocks: Dirichlet-multinomial laws, the
//! decrement matrix and the ordered Chinese restaurant, in exact rationals.
//!
//! Usage: `cargo run --example urn_primitives`

use agtrees::numeric::format_q;
use agtrees::urn::{compositions, decrement_pmf, dirmult_pmf, ocrp_permutation_pmf, permutations, UrnWeights};
use agtrees::{Result, Scalar, Q};

fn main() -> Result<()> {
    let (alpha, gamma) = (Q::ratio(2, 3), Q::ratio(1, 3));
    // urn with one leaf edge (1 − α), one internal edge (γ), one vertex (α − γ)
    let w = UrnWeights::new(vec![Q::one() - alpha.clone(), gamma.clone(), alpha.clone() - gamma.clone()])?;
    println!("Dirichlet-multinomial, 4 balls on weights {:?}:", w.weights().iter().map(format_q).collect::<Vec<_>>());
    let mut total = Q::zero();
    for c in compositions(4, 3) {
        let p = dirmult_pmf(4, &w, &c)?;
        total += p.clone();
        println!("  {c:?} {}", format_q(&p));
    }
    println!("  total {}", format_q(&total));

    println!("decrement law out of a block of 6 (α = 2/3, θ = 1/3):");
    for m in 1..=6 {
        println!("  {m}: {}", format_q(&decrement_pmf(6, m, &alpha, &gamma)?));
    }

    println!("ordered restaurant, permutations of 3 (α = 2/3, θ = 1/3):");
    for sigma in permutations(3) {
        println!("  {sigma:?} {}", format_q(&ocrp_permutation_pmf(&sigma, &alpha, &gamma)?));
    }
    Ok(())
}
