//! Decorated and collapsed trees: a `[k]`-tree shape whose insertable parts
//! carry masses (decorated) or label sets (collapsed).
//!
//! Masses are stored per arena node — the edge above a node and, for branch
//! points, the vertex itself — so that positional operations on the shape
//! (label swaps, deletions, insertions) carry masses along without any
//! re-indexing.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{Params, Scalar};
use crate::tree::{insertable_parts, part_address, part_kind, Encoding, LabelledTree, Part, PartAddress, PartKind, Tree, NIL};

/// Part entry of the JSON representation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartJson {
    /// Part address (`e:1.2`, `v:`, …).
    pub addr: String,
    /// Mass of the part.
    pub mass: usize,
    /// Label set (collapsed trees only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub labels: Option<Vec<usize>>,
}

/// JSON representation shared by decorated and collapsed trees.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoratedJson {
    /// Shape in the tree grammar.
    pub shape: String,
    /// Parts in canonical order.
    pub parts: Vec<PartJson>,
}

/// A `[k]`-tree shape with a nonnegative integer mass on every insertable
/// part; masses sum to `n` and every external edge has mass at least 1.
#[derive(Clone, Debug)]
pub struct DecoratedTree {
    pub(crate) tree: Tree,
    pub(crate) edge: Vec<usize>,
    pub(crate) vertex: Vec<usize>,
}

impl PartialEq for DecoratedTree {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}
impl Eq for DecoratedTree {}

impl fmt::Display for DecoratedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// Parts of `t` in canonical order: preorder over least-label-sorted
/// children, each node's edge before the node's branch point.
pub fn canonical_parts(t: &Tree) -> Vec<Part> {
    let mins = t.min_labels();
    let mut out = Vec::new();
    let mut stack = vec![t.root()];
    while let Some(v) = stack.pop() {
        out.push(Part::Edge(v));
        if !t.is_leaf(v) {
            out.push(Part::Vertex(v));
            for c in t.children_by_min(v, &mins).into_iter().rev() {
                stack.push(c);
            }
        }
    }
    out
}

impl DecoratedTree {
    /// Builds a decorated tree from a shape and masses keyed by address.
    /// Parts not listed get mass zero (external edges must be listed).
    pub fn new(shape: &LabelledTree, masses: &BTreeMap<String, usize>) -> Result<Self> {
        let tree = shape.tree().clone();
        let mut d = DecoratedTree { edge: vec![0; tree.capacity()], vertex: vec![0; tree.capacity()], tree };
        let mins = d.tree.min_labels();
        let mut used = 0;
        for p in canonical_parts(&d.tree) {
            let addr = part_address(&d.tree, p, &mins).to_string();
            if let Some(&m) = masses.get(&addr) {
                used += 1;
                d.set_mass(p, m);
            }
        }
        if used != masses.len() {
            return Err(Error::InvalidMasses("unknown part address".into()));
        }
        d.validate()?;
        Ok(d)
    }

    /// The shape with every leaf edge of mass 1 and all other masses 0.
    pub fn unit(shape: &LabelledTree) -> Self {
        let tree = shape.tree().clone();
        let mut d = DecoratedTree { edge: vec![0; tree.capacity()], vertex: vec![0; tree.capacity()], tree };
        for v in d.tree.preorder() {
            if d.tree.is_leaf(v) {
                d.edge[v] = 1;
            }
        }
        d
    }

    pub(crate) fn ensure_capacity(&mut self) {
        let cap = self.tree.capacity();
        self.edge.resize(cap, 0);
        self.vertex.resize(cap, 0);
    }

    /// Checks the mass invariants.
    pub fn validate(&self) -> Result<()> {
        self.tree.validate()?;
        for v in self.tree.preorder() {
            if self.tree.is_leaf(v) && self.edge[v] == 0 {
                return Err(Error::InvalidMasses(format!("leaf {} has mass 0", self.tree.label(v))));
            }
            if self.tree.is_leaf(v) && self.vertex[v] != 0 {
                return Err(Error::InvalidMasses("leaf carries vertex mass".into()));
            }
        }
        Ok(())
    }

    /// Shape as a non-planar tree.
    pub fn shape(&self) -> LabelledTree {
        LabelledTree::from_tree(self.tree.clone())
    }

    /// Arena of the shape.
    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    /// Number of shape leaves `k`.
    pub fn k(&self) -> usize {
        self.tree.n_leaves()
    }

    /// Total mass `n`.
    pub fn n(&self) -> usize {
        self.tree.preorder().into_iter().map(|v| self.edge[v] + self.vertex[v]).sum()
    }

    /// Mass of part `p`.
    pub fn mass(&self, p: Part) -> usize {
        match p {
            Part::Edge(v) => self.edge[v],
            Part::Vertex(v) => self.vertex[v],
        }
    }

    /// Sets the mass of part `p`.
    pub fn set_mass(&mut self, p: Part, m: usize) {
        match p {
            Part::Edge(v) => self.edge[v] = m,
            Part::Vertex(v) => self.vertex[v] = m,
        }
    }

    /// Reduced mass `ỹ`: mass minus one on external edges.
    pub fn reduced_mass(&self, p: Part) -> usize {
        let m = self.mass(p);
        if part_kind(&self.tree, p) == PartKind::LeafEdge {
            m - 1
        } else {
            m
        }
    }

    /// Parts in canonical order.
    pub fn parts(&self) -> Vec<Part> {
        canonical_parts(&self.tree)
    }

    /// `(address, mass)` pairs in canonical order.
    pub fn masses(&self) -> Vec<(PartAddress, usize)> {
        let mins = self.tree.min_labels();
        self.parts().into_iter().map(|p| (part_address(&self.tree, p, &mins), self.mass(p))).collect()
    }

    /// Compact canonical key: `shape;m1,m2,…` with masses in canonical part
    /// order.
    pub fn key(&self) -> String {
        let masses: Vec<String> = self.parts().into_iter().map(|p| self.mass(p).to_string()).collect();
        format!("{};{}", self.tree.encode(Encoding::NonPlanar), masses.join(","))
    }

    /// Parses a key produced by [`DecoratedTree::key`].
    pub fn from_key(key: &str) -> Result<Self> {
        let (shape, masses) = key.split_once(';').ok_or_else(|| Error::Parse(format!("bad key {key:?}")))?;
        let shape = LabelledTree::parse(shape)?;
        let tree = shape.into_tree();
        let parts = canonical_parts(&tree);
        let vals: Vec<usize> = masses
            .split(',')
            .map(|x| x.parse().map_err(|_| Error::Parse(format!("bad key {key:?}"))))
            .collect::<Result<_>>()?;
        if vals.len() != parts.len() {
            return Err(Error::Parse(format!("bad key {key:?}")));
        }
        let mut d = DecoratedTree { edge: vec![0; tree.capacity()], vertex: vec![0; tree.capacity()], tree };
        for (p, m) in parts.into_iter().zip(vals) {
            d.set_mass(p, m);
        }
        d.validate()?;
        Ok(d)
    }

    /// JSON representation.
    pub fn to_json(&self) -> DecoratedJson {
        DecoratedJson {
            shape: self.tree.encode(Encoding::NonPlanar),
            parts: self.masses().into_iter().map(|(a, m)| PartJson { addr: a.to_string(), mass: m, labels: None }).collect(),
        }
    }

    /// Parses the JSON representation.
    pub fn from_json(j: &DecoratedJson) -> Result<Self> {
        let shape = LabelledTree::parse(&j.shape)?;
        let masses = j.parts.iter().map(|p| (p.addr.clone(), p.mass)).collect();
        DecoratedTree::new(&shape, &masses)
    }

    /// Growth weight of part `p` under decorated growth: current mass plus
    /// the shape's initial weight (`1 − α` external, `γ` internal,
    /// `(c − 1)α − γ` branch point), i.e. `ỹ_x + w_x`.
    pub fn growth_weight<S: Scalar>(&self, p: Part, params: &Params<S>) -> S {
        S::from_usize(self.reduced_mass(p)) + initial_weight(&self.tree, p, params)
    }

    /// Projection onto the shape restricted to `[k]`: leaves above `k` are
    /// deleted (largest first) and their masses merged into the part they
    /// collapse onto.
    pub fn project(&self, k: usize) -> Result<DecoratedTree> {
        if k == 0 || k > self.k() {
            return Err(Error::OutOfRange(format!("k = {k}")));
        }
        let mut d = self.clone();
        for l in self.tree.labels().into_iter().rev() {
            if l > k {
                d.delete_shape_leaf(l)?;
            }
        }
        Ok(d)
    }

    /// Deletes shape leaf `l`, moving its edge mass to the parent branch
    /// point, or — when the parent is binary — merging parent edge, parent
    /// vertex, the leaf's edge and the sibling edge into one edge.
    pub(crate) fn delete_shape_leaf(&mut self, l: usize) -> Result<()> {
        let leaf = self.tree.leaf(l).ok_or(Error::MissingLabel(l))?;
        let parent = self.tree.parent(leaf);
        let m = self.edge[leaf];
        let pe = if parent == NIL { 0 } else { self.edge[parent] };
        let pv = if parent == NIL { 0 } else { self.vertex[parent] };
        let rem = self.tree.remove_leaf(l)?;
        self.edge[leaf] = 0;
        match rem.contracted {
            Some((survivor, _)) => {
                self.edge[survivor] += pe + pv + m;
                self.edge[parent] = 0;
                self.vertex[parent] = 0;
            }
            None => self.vertex[parent] += m,
        }
        Ok(())
    }
}

/// Initial growth weight of part `p` of shape `t`.
pub fn initial_weight<S: Scalar>(t: &Tree, p: Part, params: &Params<S>) -> S {
    match part_kind(t, p) {
        PartKind::LeafEdge => params.leaf_weight(),
        PartKind::InternalEdge | PartKind::RootEdge => params.internal_weight(),
        PartKind::BranchPoint => {
            let v = match p {
                Part::Vertex(v) => v,
                Part::Edge(v) => v,
            };
            params.branch_weight(t.children(v).len())
        }
    }
}

/// Decorated projection of a labelled tree onto `[k]`.
pub fn project_decorated(t: &LabelledTree, k: usize) -> Result<DecoratedTree> {
    DecoratedTree::unit(t).project(k)
}

/// A `[k]`-tree shape with a label set on every insertable part; the sets
/// partition `[n]` and the set of a leaf edge contains its own leaf.
#[derive(Clone, Debug)]
pub struct CollapsedTree {
    pub(crate) tree: Tree,
    pub(crate) edge: Vec<Vec<usize>>,
    pub(crate) vertex: Vec<Vec<usize>>,
}

impl PartialEq for CollapsedTree {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}
impl Eq for CollapsedTree {}

impl CollapsedTree {
    /// Shape arena.
    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    /// Shape as a non-planar tree.
    pub fn shape(&self) -> LabelledTree {
        LabelledTree::from_tree(self.tree.clone())
    }

    /// Label set of part `p`.
    pub fn labels(&self, p: Part) -> &[usize] {
        match p {
            Part::Edge(v) => &self.edge[v],
            Part::Vertex(v) => &self.vertex[v],
        }
    }

    /// `(address, label set)` pairs in canonical order.
    pub fn label_sets(&self) -> Vec<(PartAddress, Vec<usize>)> {
        let mins = self.tree.min_labels();
        canonical_parts(&self.tree)
            .into_iter()
            .map(|p| (part_address(&self.tree, p, &mins), self.labels(p).to_vec()))
            .collect()
    }

    /// Compact canonical key: shape followed by the label sets.
    pub fn key(&self) -> String {
        let sets: Vec<String> = canonical_parts(&self.tree)
            .into_iter()
            .map(|p| self.labels(p).iter().map(|l| l.to_string()).collect::<Vec<_>>().join("."))
            .collect();
        format!("{};{}", self.tree.encode(Encoding::NonPlanar), sets.join(","))
    }

    /// JSON representation (masses and label sets).
    pub fn to_json(&self) -> DecoratedJson {
        DecoratedJson {
            shape: self.tree.encode(Encoding::NonPlanar),
            parts: self
                .label_sets()
                .into_iter()
                .map(|(a, s)| PartJson { addr: a.to_string(), mass: s.len(), labels: Some(s) })
                .collect(),
        }
    }

    /// Forgets labels, keeping cardinalities.
    pub fn to_decorated(&self) -> DecoratedTree {
        DecoratedTree {
            tree: self.tree.clone(),
            edge: self.edge.iter().map(|s| s.len()).collect(),
            vertex: self.vertex.iter().map(|s| s.len()).collect(),
        }
    }
}

/// Collapses a tree onto its `[k]`-shape: every label `i > k` is assigned to
/// the first insertable part of the shape met on its ancestral line; each
/// `i ≤ k` to its own leaf edge.
pub fn project_collapsed(t: &Tree, k: usize) -> Result<CollapsedTree> {
    let n_max = t.max_label();
    if k == 0 || k > t.n_leaves() {
        return Err(Error::OutOfRange(format!("k = {k}")));
    }
    if t.labels() != (1..=n_max).collect::<Vec<_>>() {
        return Err(Error::InvalidMasses("collapsing needs labels 1..n".into()));
    }
    let mut shape = t.clone();
    for l in (k + 1..=n_max).rev() {
        shape.remove_leaf(l)?;
    }
    let cap = t.capacity();
    let mut edge = vec![Vec::new(); cap];
    let mut vertex = vec![Vec::new(); cap];
    let mins = t.min_labels();
    for i in 1..=n_max {
        let leaf = t.leaf(i).expect("label present");
        if i <= k {
            edge[leaf].push(i);
            continue;
        }
        let mut w = leaf;
        let mut u = t.parent(leaf);
        while u != NIL && !shape.is_alive(u) {
            w = u;
            u = t.parent(u);
        }
        if u == NIL {
            edge[shape.root()].push(i);
        } else if mins[w] > k {
            vertex[u].push(i);
        } else {
            let s = shape
                .children(u)
                .iter()
                .copied()
                .find(|&s| t.is_ancestor(w, s))
                .expect("shape child below the contracted node");
            edge[s].push(i);
        }
    }
    let mut tree = shape;
    tree.sort_all_children();
    Ok(CollapsedTree { tree, edge, vertex })
}

/// The same assignment, returned as a map from part to label set, for
/// arbitrary part lists (used by internal-structure extraction).
pub fn part_of_labels(c: &CollapsedTree) -> BTreeMap<usize, Part> {
    let mut out = BTreeMap::new();
    for p in insertable_parts(&c.tree) {
        for &l in c.labels(p) {
            out.insert(l, p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lt(s: &str) -> LabelledTree {
        LabelledTree::parse(s).unwrap()
    }

    fn sets(c: &CollapsedTree) -> BTreeMap<String, Vec<usize>> {
        c.label_sets().into_iter().filter(|(_, s)| !s.is_empty()).map(|(a, s)| (a.to_string(), s)).collect()
    }

    #[test]
    fn figure_example_collapse() {
        let t = lt("((1,(2,5,7),3,(6,8)),4)");
        let c = project_collapsed(t.tree(), 3).unwrap();
        assert_eq!(c.shape().encode(), "(1,2,3)");
        let s = sets(&c);
        assert_eq!(s["e:"], vec![4]);
        assert_eq!(s["e:1"], vec![1]);
        assert_eq!(s["e:2"], vec![2, 5, 7]);
        assert_eq!(s["e:3"], vec![3]);
        assert_eq!(s["v:"], vec![6, 8]);
        let d = c.to_decorated();
        assert_eq!(d.n(), 8);
        assert_eq!(d.key(), "(1,2,3);1,2,1,3,1");
        assert_eq!(d, project_decorated(&t, 3).unwrap());
    }

    #[test]
    fn small_examples() {
        let c = project_collapsed(lt("((1,3),2)").tree(), 2).unwrap();
        let s = sets(&c);
        assert_eq!(s.len(), 2);
        assert_eq!(s["e:1"], vec![1, 3]);
        assert_eq!(s["e:2"], vec![2]);
        let t = lt("((1,4),(2,3))");
        let c = project_collapsed(t.tree(), 4).unwrap();
        assert!(c.label_sets().iter().all(|(a, s)| if a.kind == PartKind::LeafEdge { s.len() == 1 } else { s.is_empty() }));
        assert!(project_collapsed(t.tree(), 0).is_err());
        assert!(project_collapsed(t.tree(), 5).is_err());
    }

    #[test]
    fn key_and_json_round_trip() {
        let d = project_decorated(&lt("((1,(2,5,7),3,(6,8)),4)"), 3).unwrap();
        assert_eq!(DecoratedTree::from_key(&d.key()).unwrap(), d);
        assert_eq!(DecoratedTree::from_json(&d.to_json()).unwrap(), d);
        let bad: BTreeMap<String, usize> = [("e:1".to_string(), 0)].into_iter().collect();
        assert!(DecoratedTree::new(&lt("(1,2)"), &bad).is_err());
    }
}
