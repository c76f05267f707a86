//! Projects a labelled tree onto its first `k` labels, as a collapsed tree
//! (label sets) and as a decorated tree (masses), and prints both as JSON.
//!
//! Usage: `cargo run --example project_tree -- [tree] [k]`

use agtrees::decorated::{project_collapsed, project_decorated};
use agtrees::tree::LabelledTree;
use agtrees::Result;

fn main() -> Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let src = args.get(1).map(String::as_str).unwrap_or("(((1,4),(2,6,7)),3,5)");
    let k: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(2);
    let t = LabelledTree::parse(src)?;
    let c = project_collapsed(t.tree(), k)?;
    let d = project_decorated(&t, k)?;
    println!("tree       {}", t.encode());
    println!("shape      {}", d.shape().encode());
    println!("collapsed  {}", c.key());
    println!("decorated  {}", d.key());
    println!("{}", serde_json::to_string_pretty(&d.to_json()).expect("serializable"));
    Ok(())
}
