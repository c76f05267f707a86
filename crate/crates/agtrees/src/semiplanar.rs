//! Semi-planar and planar trees.
//!
//! In a semi-planar tree every branch point orders its children from left to
//! right, except that the two children with the smallest least labels are
//! mutually unordered and occupy the two leftmost slots. With children
//! `t_1, …, t_c` in least-label order, `t_l` (`l ≥ 3`) sits at position
//! `σ_v(l − 2) + 2` for a permutation `σ_v` of `[c − 2]`.
//!
//! The arena stores the planar left-to-right order directly; the leftmost
//! pair is kept sorted so that equal semi-planar trees have equal layouts.

use std::fmt;
use std::hash::{Hash, Hasher};

use crate::decorated::{project_collapsed, CollapsedTree};
use crate::error::{Error, Result};
use crate::numeric::{Params, Scalar};
use crate::sampling::Chooser;
use crate::tree::{part_address, Encoding, LabelledTree, Part, PartAddress, PartKind, Tree, NIL};

/// Semi-planar tree (see the module documentation).
#[derive(Clone, Debug)]
pub struct SemiPlanarTree {
    pub(crate) tree: Tree,
}

/// Planar tree: a full left-to-right order at every branch point. Arises
/// transiently from label swaps in the semi-planar chain.
#[derive(Clone, Debug)]
pub struct PlanarTree {
    pub(crate) tree: Tree,
}

macro_rules! keyed {
    ($t:ty, $enc:expr) => {
        impl PartialEq for $t {
            fn eq(&self, other: &Self) -> bool {
                self.encode() == other.encode()
            }
        }
        impl Eq for $t {}
        impl Hash for $t {
            fn hash<H: Hasher>(&self, state: &mut H) {
                self.encode().hash(state)
            }
        }
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.encode())
            }
        }
        impl $t {
            /// Canonical text encoding.
            pub fn encode(&self) -> String {
                self.tree.encode($enc)
            }
            /// Underlying arena tree (planar order).
            pub fn tree(&self) -> &Tree {
                &self.tree
            }
            /// Number of leaves.
            pub fn n_leaves(&self) -> usize {
                self.tree.n_leaves()
            }
            /// Forgets the orders.
            pub fn project(&self) -> LabelledTree {
                LabelledTree::from_tree(self.tree.clone())
            }
        }
    };
}

keyed!(SemiPlanarTree, Encoding::SemiPlanar);
keyed!(PlanarTree, Encoding::Planar);

impl std::str::FromStr for SemiPlanarTree {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SemiPlanarTree::parse(s)
    }
}

/// Outcome of the local search from a selected leaf.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LocalSearchResult {
    /// Least label of the first spinal bush.
    pub a: usize,
    /// Least label of the designated neighbouring subtree or bush (0 if
    /// there is none).
    pub b: usize,
    /// `max{i, a, b}`: the leaf that is actually deleted.
    pub i_tilde: usize,
}

impl SemiPlanarTree {
    /// Wraps an arena tree whose leftmost pairs are minimal.
    pub fn from_tree(mut tree: Tree) -> Result<Self> {
        if !tree.leftmost_pairs_are_minimal() {
            return Err(Error::NotSemiPlanar(tree.encode(Encoding::Planar)));
        }
        tree.sort_leftmost_pairs();
        Ok(SemiPlanarTree { tree })
    }

    /// The 1-leaf tree.
    pub fn single(label: usize) -> Self {
        SemiPlanarTree { tree: Tree::single(label) }
    }

    /// Parses the semi-planar grammar, e.g. `(1,(2,5,7)[1],3,(6,8))[2,1]`.
    /// Branches with `c ≥ 3` children must carry an order suffix.
    pub fn parse(s: &str) -> Result<Self> {
        SemiPlanarTree::from_tree(Tree::parse(s, Encoding::SemiPlanar)?)
    }

    /// Orders `σ_v` of the branch points with `c ≥ 3` children, keyed by
    /// branch-point address.
    pub fn orders(&self) -> Vec<(PartAddress, Vec<usize>)> {
        let t = &self.tree;
        let mins = t.min_labels();
        t.branch_points()
            .into_iter()
            .filter(|&v| t.children(v).len() >= 3)
            .map(|v| (part_address(t, Part::Vertex(v), &mins), sigma_of(t, v, &mins)))
            .collect()
    }

    /// Inserts leaf `j` into part `x` at location `l`: `l = 0` for edges
    /// (new binary branch point), `l ∈ [c − 1]` for a branch point with `c`
    /// children — the new leaf becomes the `l`-th non-leftmost child and the
    /// existing order values `≥ l` shift up by one.
    pub fn insert_leaf(&self, x: &PartAddress, l: usize, j: usize) -> Result<Self> {
        let (part, _) = x.resolve(&self.tree)?;
        let mut t = self.tree.clone();
        sp_insert_at(&mut t, part, l, j)?;
        Ok(SemiPlanarTree { tree: t })
    }

    /// Deletes leaf `j` (positions of the remaining children are kept; a
    /// binary parent is contracted) and optionally relabels. Errors if the
    /// result is not semi-planar, which cannot happen when `j` is the
    /// largest label.
    pub fn delete_leaf(&self, j: usize, relabel: bool) -> Result<Self> {
        PlanarTree { tree: self.tree.clone() }.delete_leaf(j, relabel)
    }

    /// The planar representative: the leftmost pair in least-label order.
    pub fn to_planar(&self) -> PlanarTree {
        PlanarTree { tree: self.tree.clone() }
    }

    /// Swaps labels `i` and `j` positionally (every subtree keeps its
    /// position; only the two leaves exchange places). The pair must be
    /// admissible: `j` is the least label of a child subtree of `i`'s
    /// parent, or — when that parent is binary — of `i`'s grandparent.
    pub fn swap_labels(&self, i: usize, j: usize) -> Result<PlanarTree> {
        let t = &self.tree;
        let li = t.leaf(i).ok_or(Error::MissingLabel(i))?;
        let lj = t.leaf(j).ok_or(Error::MissingLabel(j))?;
        if i != j {
            let mins = t.min_labels();
            let v = t.parent(li);
            let is_child_min = |w: usize| w != NIL && t.children(w).iter().any(|&c| mins[c] == j && t.is_ancestor(c, lj));
            let ok = is_child_min(v) || (v != NIL && t.children(v).len() == 2 && is_child_min(t.parent(v)));
            if !ok {
                return Err(Error::InadmissibleSwap(i, j));
            }
        }
        let mut tree = t.clone();
        tree.swap_leaf_labels(i, j)?;
        Ok(PlanarTree { tree })
    }

    /// Local search from leaf `i`: `a` is the least label of the first
    /// spinal bush; `b` is the least label of the second spinal bush when the
    /// parent is binary (0 if there is none), of the third slot when `i` is
    /// in the leftmost pair, and of the left neighbour otherwise.
    pub fn local_search(&self, i: usize) -> Result<LocalSearchResult> {
        let t = &self.tree;
        let leaf = t.leaf(i).ok_or(Error::MissingLabel(i))?;
        let v = t.parent(leaf);
        if v == NIL {
            return Ok(LocalSearchResult { a: 0, b: 0, i_tilde: i });
        }
        let kids = t.children(v);
        let a = kids.iter().filter(|&&c| c != leaf).map(|&c| t.min_label(c)).min().expect("sibling");
        let b = if kids.len() == 2 {
            let g = t.parent(v);
            if g == NIL {
                0
            } else {
                t.children(g).iter().filter(|&&c| c != v).map(|&c| t.min_label(c)).min().expect("sibling")
            }
        } else {
            let idx = kids.iter().position(|&c| c == leaf).expect("child");
            if idx <= 1 {
                t.min_label(kids[2])
            } else {
                t.min_label(kids[idx - 1])
            }
        };
        Ok(LocalSearchResult { a, b, i_tilde: i.max(a).max(b) })
    }

    /// Internal structure of part `x` of the `[k]`-shape (see
    /// [`internal_structure`]).
    pub fn internal_structure(&self, k: usize, x: &PartAddress) -> Result<SemiPlanarTree> {
        let t = internal_structure(&self.tree, k, x)?;
        SemiPlanarTree::from_tree(t)
    }
}

impl PlanarTree {
    /// Deletes leaf `j`, keeping the positions of all other subtrees, and
    /// returns the result as a semi-planar tree; errors with
    /// [`Error::NotSemiPlanar`] if some leftmost pair is not minimal.
    pub fn delete_leaf(&self, j: usize, relabel: bool) -> Result<SemiPlanarTree> {
        let mut t = self.tree.clone();
        t.remove_leaf(j)?;
        if relabel {
            t.relabel_down_from(j);
        }
        SemiPlanarTree::from_tree(t)
    }

    /// Whether the planar tree represents a semi-planar tree.
    pub fn is_semiplanar(&self) -> bool {
        self.tree.leftmost_pairs_are_minimal()
    }
}

/// `σ_v` of branch point `v` (empty for `c ≤ 2`).
pub fn sigma_of(t: &Tree, v: usize, mins: &[usize]) -> Vec<usize> {
    let kids = t.children(v);
    if kids.len() < 3 {
        return Vec::new();
    }
    let sorted = t.children_by_min(v, mins);
    sorted[2..]
        .iter()
        .map(|&c| kids.iter().position(|&x| x == c).expect("child") - 1)
        .collect()
}

/// Arranges the children of `v` so that the two least-label children come
/// first (sorted) and child of rank `l ≥ 3` sits at extra position
/// `sigma[l − 3]`.
pub fn apply_sigma(t: &mut Tree, v: usize, sigma: &[usize]) {
    let mins = t.min_labels();
    let sorted = t.children_by_min(v, &mins);
    let c = sorted.len();
    assert_eq!(sigma.len(), c.saturating_sub(2), "order length");
    let mut slots = vec![NIL; c];
    for (r, &ch) in sorted.iter().enumerate() {
        if r < 2 {
            slots[r] = ch;
        } else {
            slots[sigma[r - 2] + 1] = ch;
        }
    }
    *t.children_mut(v) = slots;
}

/// Inserts leaf `j` at `part` and location `l` of a planar arena tree.
pub fn sp_insert_at(t: &mut Tree, part: Part, l: usize, j: usize) -> Result<usize> {
    match part {
        Part::Edge(v) => {
            if l != 0 {
                return Err(Error::OutOfRange(format!("edge insertion needs location 0, got {l}")));
            }
            let (w, leaf) = t.insert_edge(v, j)?;
            let mins_ok = t.min_label(t.children(w)[0]) < j;
            if !mins_ok {
                t.children_mut(w).swap(0, 1);
            }
            Ok(leaf)
        }
        Part::Vertex(v) => {
            let c = t.children(v).len();
            if l < 1 || l > c - 1 {
                return Err(Error::OutOfRange(format!("location {l} not in 1..={}", c - 1)));
            }
            t.insert_vertex(v, l + 1, j)
        }
    }
}

/// Draws the left-to-right order of `L` tables of an ordered `(α, θ)`
/// restaurant: returns `σ` with `σ(l)` the position of the `l`-th table.
pub fn draw_table_order<S: Scalar, C: Chooser<S> + ?Sized>(ch: &mut C, len: usize, alpha: &S, theta: &S) -> Vec<usize> {
    // line[p] = table at position p
    let mut line: Vec<usize> = Vec::with_capacity(len);
    for table in 0..len {
        if table == 0 {
            line.push(0);
            continue;
        }
        let mut w = vec![alpha.clone(); table + 1];
        w[table] = theta.clone();
        let g = ch.choose(&w);
        line.insert(g, table);
    }
    let mut sigma = vec![0; len];
    for (p, &table) in line.iter().enumerate() {
        sigma[table] = p + 1;
    }
    sigma
}

/// Samples semi-planar orders for a non-planar tree: independently at every
/// branch point with `c ≥ 3` children, `σ_v` follows the `(α, α − γ)`
/// table-order law on `[c − 2]`.
pub fn sample_orders<S: Scalar, C: Chooser<S> + ?Sized>(t: &LabelledTree, params: &Params<S>, ch: &mut C) -> Result<SemiPlanarTree> {
    let mut tree = t.tree().clone();
    let theta = params.right_gap_weight();
    for v in tree.branch_points() {
        let c = tree.children(v).len();
        if c >= 3 {
            if params.alpha.is_zero() {
                return Err(Error::InvalidParams("orders need alpha > 0 at a multifurcating branch".into()));
            }
            let sigma = draw_table_order(ch, c - 2, &params.alpha, &theta);
            apply_sigma(&mut tree, v, &sigma);
        }
    }
    SemiPlanarTree::from_tree(tree)
}

/// Internal structure of part `x` of the `[k]`-shape of `t`, as a planar
/// arena tree with rank-relabelled leaves:
///
/// * external edge of leaf `i`: the subtree hanging at the shape parent that
///   contains `i` (`y_x` leaves, `i` becomes 1);
/// * internal or root edge: the same subtree with the part below the edge's
///   lower endpoint replaced by leaf 1 (`y_x + 1` leaves);
/// * branch point with `c` shape children: the branch point with its shape
///   children replaced by leaves `1..c` in least-label order and the other
///   subtrees relabelled `c + 1, …` (`c + y_x` leaves).
pub fn internal_structure(t: &Tree, k: usize, x: &PartAddress) -> Result<Tree> {
    let c = project_collapsed(t, k)?;
    let (part, kind) = x.resolve(&c.tree)?;
    Ok(internal_structure_of(t, &c, part, kind))
}

pub(crate) fn internal_structure_of(t: &Tree, c: &CollapsedTree, part: Part, kind: PartKind) -> Tree {
    let rank_map = |set: &[usize], offset: usize| {
        let set = set.to_vec();
        move |l: usize| offset + 1 + set.binary_search(&l).expect("label in part")
    };
    match part {
        Part::Edge(s) => {
            let set = c.labels(part).to_vec();
            let shape = &c.tree;
            let sp = shape.parent(s);
            let mut r = s;
            while t.parent(r) != sp && t.parent(r) != NIL {
                r = t.parent(r);
            }
            if kind == PartKind::LeafEdge {
                Tree::copy_cut(t, r, &|_| None, &rank_map(&set, 0))
            } else {
                Tree::copy_cut(t, r, &|u| if u == s { Some(1) } else { None }, &rank_map(&set, 1))
            }
        }
        Part::Vertex(v) => {
            let set = c.labels(part).to_vec();
            let mins = t.min_labels();
            let shape_kids: Vec<usize> = {
                let mut ks: Vec<usize> = t.children(v).iter().copied().filter(|&ch| c.tree.contains(mins[ch])).collect();
                ks.sort_by_key(|&ch| mins[ch]);
                ks
            };
            let cc = shape_kids.len();
            let kids = shape_kids.clone();
            Tree::copy_cut(
                t,
                v,
                &move |u| kids.iter().position(|&s| s == u).map(|p| p + 1),
                &rank_map(&set, cc),
            )
        }
    }
}

/// Rebuilds a tree from its `[k]`-shape, label sets and internal structures
/// (one per part, in the order of `parts`), inverting
/// [`internal_structure`]. Orders inside the structures are kept.
pub fn graft(c: &CollapsedTree, structures: &[(Part, Tree)]) -> Result<Tree> {
    let shape = &c.tree;
    let n: usize = structures.iter().map(|(p, _)| c.labels(*p).len()).sum();
    let find = |p: Part| -> Result<&Tree> {
        structures
            .iter()
            .find(|(q, _)| *q == p)
            .map(|(_, t)| t)
            .ok_or_else(|| Error::DanglingAddress(format!("{p:?}")))
    };
    // placeholder labels for not-yet-built regions
    let ph_edge = |v: usize| n + 1 + 2 * v;
    let ph_vertex = |v: usize| n + 2 + 2 * v;
    let root = shape.root();
    let root_part = Part::Edge(root);
    let mut out = map_structure(c, root_part, find(root_part)?, &|_| ph_vertex(root));
    let mins = shape.min_labels();
    let mut stack = vec![root];
    while let Some(s) = stack.pop() {
        if shape.is_leaf(s) {
            continue;
        }
        // replace the vertex placeholder of s by its structure
        let vs = map_structure(c, Part::Vertex(s), find(Part::Vertex(s))?, &|j| {
            let child = shape.children_by_min(s, &mins)[j - 1];
            ph_edge(child)
        });
        out.replace_leaf_with(ph_vertex(s), &vs, vs.root(), &|l| l)?;
        for &child in shape.children(s) {
            let es = map_structure(c, Part::Edge(child), find(Part::Edge(child))?, &|_| ph_vertex(child));
            out.replace_leaf_with(ph_edge(child), &es, es.root(), &|l| l)?;
            stack.push(child);
        }
    }
    Ok(out)
}

/// Maps an internal structure's labels back to big-tree labels; the
/// structure's reserved leaves (1 for internal edges, `1..c` for branch
/// points) are sent to placeholders via `reserved`.
fn map_structure(c: &CollapsedTree, p: Part, s: &Tree, reserved: &dyn Fn(usize) -> usize) -> Tree {
    let set = c.labels(p).to_vec();
    let shape = &c.tree;
    let (offset, kind_leaf) = match p {
        Part::Edge(v) if shape.is_leaf(v) => (0, true),
        Part::Edge(_) => (1, false),
        Part::Vertex(v) => (shape.children(v).len(), false),
    };
    let mut t = s.clone();
    t.map_labels(|l| {
        if kind_leaf || l > offset {
            set[l - offset - 1]
        } else {
            reserved(l)
        }
    });
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(s: &str) -> SemiPlanarTree {
        SemiPlanarTree::parse(s).unwrap()
    }

    const FIG: &str = "((1,(2,5,7)[1],3,(6,8))[2,1],4)";

    #[test]
    fn figure_tree_round_trip_and_orders() {
        let t = sp(FIG);
        assert_eq!(t.encode(), FIG);
        assert_eq!(t.project().encode(), "((1,(2,5,7),3,(6,8)),4)");
        let orders = t.orders();
        assert_eq!(orders.len(), 2);
        assert!(orders.iter().any(|(a, s)| a.to_string() == "v:1" && s == &vec![2, 1]));
        assert!(SemiPlanarTree::parse("(1,2,3)").is_err());
    }

    #[test]
    fn figure_local_search_and_down_step() {
        let t = sp(FIG);
        let ls = t.local_search(3).unwrap();
        assert_eq!(ls, LocalSearchResult { a: 1, b: 6, i_tilde: 6 });
        let planar = t.swap_labels(3, 6).unwrap();
        let down = planar.delete_leaf(6, true).unwrap();
        assert_eq!(down.encode(), "((1,(2,5,6)[1],(3,7))[1],4)");
    }

    #[test]
    fn local_search_examples() {
        let cherry = sp("(1,2)");
        assert_eq!(cherry.local_search(1).unwrap(), LocalSearchResult { a: 2, b: 0, i_tilde: 2 });
        let cat = sp("(((1,2),3),4)");
        assert_eq!(cat.local_search(1).unwrap(), LocalSearchResult { a: 2, b: 3, i_tilde: 3 });
    }

    #[test]
    fn three_star_swaps() {
        let star = sp("(1,2,3)[1]");
        assert!(star.swap_labels(1, 2).unwrap().is_semiplanar());
        assert!(!star.swap_labels(2, 3).unwrap().is_semiplanar());
        assert_eq!(star.swap_labels(2, 2).unwrap(), star.to_planar());
        assert_eq!(sp("((1,2),(3,4))").swap_labels(1, 4), Err(Error::InadmissibleSwap(1, 4)));
    }

    #[test]
    fn insertion_locations() {
        let t = sp("(1,2,3)[1]");
        let v = PartAddress::parse("v:").unwrap();
        assert_eq!(t.insert_leaf(&v, 1, 4).unwrap().encode(), "(1,2,3,4)[2,1]");
        assert_eq!(t.insert_leaf(&v, 2, 4).unwrap().encode(), "(1,2,3,4)[1,2]");
        assert!(t.insert_leaf(&v, 3, 4).is_err());
        assert!(t.insert_leaf(&v, 0, 4).is_err());
        let e = PartAddress::parse("e:1").unwrap();
        assert_eq!(t.insert_leaf(&e, 0, 4).unwrap().encode(), "((1,4),2,3)[1]");
        assert!(t.insert_leaf(&e, 1, 4).is_err());
    }

    #[test]
    fn deletion_rules() {
        let t = sp("(1,2,(3,5),4)[2,1]");
        // the subtree (3,5) sits rightmost and keeps its slot as leaf 5
        assert_eq!(t.delete_leaf(3, false).unwrap().encode(), "(1,2,4,5)[1,2]");
        let t = sp("(1,2,3,4)[2,1]");
        assert_eq!(t.delete_leaf(3, false).unwrap().encode(), "(1,2,4)[1]");
        assert_eq!(sp("((1,3),2)").delete_leaf(3, false).unwrap().encode(), "(1,2)");
    }

    #[test]
    fn figure_internal_structures() {
        let t = sp(FIG);
        let is_v = t.internal_structure(3, &PartAddress::parse("v:").unwrap()).unwrap();
        assert_eq!(is_v.encode(), "(1,2,3,(4,5))[2,1]");
        let is_e2 = t.internal_structure(3, &PartAddress::parse("e:2").unwrap()).unwrap();
        assert_eq!(is_e2.encode(), "(1,2,3)[1]");
        let is_root = t.internal_structure(3, &PartAddress::parse("e:").unwrap()).unwrap();
        assert_eq!(is_root.encode(), "(1,2)");
        let is_e1 = t.internal_structure(3, &PartAddress::parse("e:1").unwrap()).unwrap();
        assert_eq!(is_e1.encode(), "1");
    }

    #[test]
    fn graft_inverts_extraction() {
        let t = sp(FIG);
        let c = project_collapsed(&t.tree, 3).unwrap();
        let parts = crate::tree::insertable_parts(&c.tree);
        let structs: Vec<(Part, Tree)> = parts
            .iter()
            .map(|&p| (p, internal_structure_of(&t.tree, &c, p, crate::tree::part_kind(&c.tree, p))))
            .collect();
        let back = SemiPlanarTree::from_tree(graft(&c, &structs).unwrap()).unwrap();
        assert_eq!(back, t);
    }
}
