//! Runs the exact verifier at one parameter point and prints every check.
//!
//! Usage: `cargo run --release --example exact_report -- [n] [alpha] [gamma]`

use agtrees::exact::*;
use agtrees::growth::Variant;
use agtrees::{Params, Result};

fn main() -> Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let alpha = args.get(2).map(String::as_str).unwrap_or("2/3");
    let gamma = args.get(3).map(String::as_str).unwrap_or("1/3");
    let params = Params::parse(alpha, gamma)?;
    let caps = Caps::default();
    let mut ctx = ExactContext::new(n, params.clone(), caps.clone());
    let ks: Vec<usize> = (2..n).collect();
    let mut checks = stationarity_checks(&mut ctx, &ks)?;
    checks.extend(kernel_equality_checks(&mut ctx, &ks)?);
    checks.extend(lumpability_intertwining_checks(&mut ctx, 2)?);
    for c in &checks {
        println!("{:<48} {} residual={}", c.name, if c.pass { "PASS" } else { "FAIL" }, c.residual.clone().unwrap_or_default());
    }
    let ind = check_downstep_independence(n, &params, &caps)?;
    println!("independence: factorization={} pushforward={} off-diagonal={} (i>=2: {})",
        ind.factorization_residual, ind.pushforward_residual, ind.off_diagonal_residual, ind.off_diagonal_residual_i_ge_2);
    for row in &ind.table {
        println!("  P(E_{},{}) = {:<12} reference {:<12} {}", row.i, row.i_tilde, row.prob, row.reference, if row.matches { "ok" } else { "differs" });
    }
    for row in i_tilde_report(&mut ctx)? {
        println!("I~ law c={} j={}: implemented {:?} alternative {:?} (sum {}), lifted {:?}, residuals {:?}/{:?}",
            row.c, row.j, row.implemented, row.alternative, row.alternative_row_sum, row.lifted, row.implemented_residual, row.alternative_residual);
    }
    if n >= 4 {
        let (shapes, r) = check_internal_order_law(n, 4.min(n), &params, &caps)?;
        println!("internal order law: {shapes} shapes, residual {}", agtrees::numeric::format_q(&r));
    }
    println!("projection commutes: {}", agtrees::numeric::format_q(&check_projection_commutes(n, &params, &caps)?));
    for v in [Variant::SemiPlanar, Variant::Internal, Variant::BranchPoint(3)] {
        if let Ok(r) = check_down_pushforward(v, n, &params, &caps) {
            println!("down pushforward {v:?}: {}", agtrees::numeric::format_q(&r));
        }
    }
    for k in 1..n {
        println!("decorated growth k={k}: {}", agtrees::numeric::format_q(&check_decorated_growth(n, k, &params, &caps)?));
        println!("leaf location k={k}: {}", agtrees::numeric::format_q(&check_leaf_location(n, k, &params, &caps)?));
        if k >= 2 {
            println!("resample selection k={k}: {}", agtrees::numeric::format_q(&check_resample_selection(n, k, &params)?));
        }
        println!("lift k={k}: {}", agtrees::numeric::format_q(&check_lift(&mut ctx, k)?));
    }
    if n >= 4 {
        println!("tower 2<3: {}", agtrees::numeric::format_q(&check_tower(&mut ctx, 2, 3)?));
        println!("projected Markov k=2: {}", agtrees::numeric::format_q(&check_projected_markov(&mut ctx, 2)?));
    }
    if params.alpha > params.gamma {
        println!("weighted start c=3: {}", agtrees::numeric::format_q(&check_weighted_start(3, n, &params, &caps)?));
    }
    if params.alpha > params.gamma {
        println!("bp decomposition c=3 m={}: {}", n - 3, agtrees::numeric::format_q(&check_branchpoint_decomposition(3, n - 3, &params, &caps)?));
    }
    Ok(())
}
