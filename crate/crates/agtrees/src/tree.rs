//! Rooted multifurcating leaf-labelled trees.
//!
//! [`Tree`] is an arena of nodes with ordered child lists. The child order
//! is interpreted differently by each tree family:
//!
//! * [`LabelledTree`] (non-planar) keeps children sorted by least leaf label,
//!   so structural equality is equality of the arena layout;
//! * `SemiPlanarTree` keeps the two least-label children leftmost and the
//!   remaining children in their planar left-to-right order;
//! * `PlanarTree` keeps an arbitrary left-to-right order.
//!
//! The root vertex `∅` is implicit: [`Tree::root`] is the topmost node and
//! the edge above it is the root edge. Node ids of surviving nodes are stable
//! under insertions and deletions, which lets decorated trees store masses
//! per node.

use std::fmt;
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};

/// Sentinel for "no node".
pub const NIL: usize = usize::MAX;

#[derive(Clone, Debug)]
struct Node {
    parent: usize,
    children: Vec<usize>,
    /// Leaf label, or 0 for a branch point.
    label: usize,
    alive: bool,
}

/// Arena-backed ordered rooted tree with labelled leaves.
#[derive(Clone, Debug)]
pub struct Tree {
    nodes: Vec<Node>,
    root: usize,
    leaf_of: Vec<usize>,
    free: Vec<usize>,
    leaves: usize,
}

/// What [`Tree::remove_leaf`] changed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Removal {
    /// Parent of the removed leaf (freed if it was contracted).
    pub parent: usize,
    /// Index of the removed leaf in its parent's child list.
    pub index: usize,
    /// When the parent was binary: `(survivor, index_in_grandparent)`; the
    /// surviving sibling took the parent's place, and the parent was freed.
    pub contracted: Option<(usize, usize)>,
}

/// Text rendering mode of a tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Encoding {
    /// Children in least-label order, no order annotations.
    NonPlanar,
    /// Children in least-label order; branches with `c ≥ 3` children carry
    /// `[σ(1),…,σ(c−2)]`, the positions of the non-leftmost children.
    SemiPlanar,
    /// Children in least-label order; every branch carries `[σ*(1),…,σ*(c)]`,
    /// the left-to-right positions of all its children.
    Planar,
}

impl Tree {
    /// The tree with a single leaf.
    pub fn single(label: usize) -> Self {
        assert!(label >= 1, "labels are positive integers");
        let mut t = Tree { nodes: Vec::new(), root: NIL, leaf_of: Vec::new(), free: Vec::new(), leaves: 0 };
        let v = t.alloc(NIL, label);
        t.root = v;
        t
    }

    fn alloc(&mut self, parent: usize, label: usize) -> usize {
        let node = Node { parent, children: Vec::new(), label, alive: true };
        let id = if let Some(id) = self.free.pop() {
            self.nodes[id] = node;
            id
        } else {
            self.nodes.push(node);
            self.nodes.len() - 1
        };
        if label > 0 {
            if self.leaf_of.len() <= label {
                self.leaf_of.resize(label + 1, NIL);
            }
            self.leaf_of[label] = id;
            self.leaves += 1;
        }
        id
    }

    fn release(&mut self, id: usize) {
        self.nodes[id].alive = false;
        self.nodes[id].children.clear();
        self.free.push(id);
    }

    /// Topmost node (the child of the implicit root vertex).
    pub fn root(&self) -> usize {
        self.root
    }

    /// Size of the node arena (ids are `< capacity`).
    pub fn capacity(&self) -> usize {
        self.nodes.len()
    }

    /// Parent of `v`, or [`NIL`] for the root.
    pub fn parent(&self, v: usize) -> usize {
        self.nodes[v].parent
    }

    /// Children of `v` in stored order.
    pub fn children(&self, v: usize) -> &[usize] {
        &self.nodes[v].children
    }

    /// Mutable child list of `v` (order changes only).
    pub(crate) fn children_mut(&mut self, v: usize) -> &mut Vec<usize> {
        &mut self.nodes[v].children
    }

    /// Whether `v` is a leaf.
    pub fn is_leaf(&self, v: usize) -> bool {
        self.nodes[v].label > 0
    }

    /// Whether `v` is a live node of the arena.
    pub fn is_alive(&self, v: usize) -> bool {
        v < self.nodes.len() && self.nodes[v].alive
    }

    /// Label of leaf `v` (0 for branch points).
    pub fn label(&self, v: usize) -> usize {
        self.nodes[v].label
    }

    /// Node carrying leaf `label`.
    pub fn leaf(&self, label: usize) -> Option<usize> {
        match self.leaf_of.get(label) {
            Some(&v) if v != NIL => Some(v),
            _ => None,
        }
    }

    /// Whether leaf `label` is present.
    pub fn contains(&self, label: usize) -> bool {
        self.leaf(label).is_some()
    }

    /// Number of leaves.
    pub fn n_leaves(&self) -> usize {
        self.leaves
    }

    /// Sorted leaf labels.
    pub fn labels(&self) -> Vec<usize> {
        (1..self.leaf_of.len()).filter(|&l| self.leaf_of[l] != NIL).collect()
    }

    /// Largest leaf label.
    pub fn max_label(&self) -> usize {
        self.labels().last().copied().unwrap_or(0)
    }

    /// Live nodes in preorder (parents before children, stored order).
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            out.push(v);
            for &c in self.nodes[v].children.iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    /// Least leaf label below every node, indexed by node id
    /// ([`NIL`] for freed slots).
    pub fn min_labels(&self) -> Vec<usize> {
        let mut mins = vec![NIL; self.nodes.len()];
        for &v in self.preorder().iter().rev() {
            let node = &self.nodes[v];
            mins[v] = if node.label > 0 {
                node.label
            } else {
                node.children.iter().map(|&c| mins[c]).min().unwrap_or(NIL)
            };
        }
        mins
    }

    /// Least leaf label below `v`.
    pub fn min_label(&self, v: usize) -> usize {
        let mut best = NIL;
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            let node = &self.nodes[u];
            if node.label > 0 {
                best = best.min(node.label);
            } else {
                stack.extend(node.children.iter().copied());
            }
        }
        best
    }

    /// Sorted leaf labels below `v`.
    pub fn subtree_labels(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            let node = &self.nodes[u];
            if node.label > 0 {
                out.push(node.label);
            } else {
                stack.extend(node.children.iter().copied());
            }
        }
        out.sort_unstable();
        out
    }

    /// Live branch points in preorder.
    pub fn branch_points(&self) -> Vec<usize> {
        self.preorder().into_iter().filter(|&v| !self.is_leaf(v)).collect()
    }

    /// Children of `v` sorted by least leaf label.
    pub fn children_by_min(&self, v: usize, mins: &[usize]) -> Vec<usize> {
        let mut ch = self.nodes[v].children.clone();
        ch.sort_unstable_by_key(|&c| mins[c]);
        ch
    }

    /// Whether `anc` is `v` or an ancestor of `v`.
    pub fn is_ancestor(&self, anc: usize, mut v: usize) -> bool {
        while v != NIL {
            if v == anc {
                return true;
            }
            v = self.nodes[v].parent;
        }
        false
    }

    /// Splits the edge above `below` with a new binary branch point whose
    /// children are `[below, new leaf]`. Returns `(branch, leaf)`.
    pub fn insert_edge(&mut self, below: usize, label: usize) -> Result<(usize, usize)> {
        if self.contains(label) {
            return Err(Error::DuplicateLabel(label));
        }
        if label == 0 {
            return Err(Error::OutOfRange("labels are positive".into()));
        }
        if !self.is_alive(below) {
            return Err(Error::DanglingAddress(format!("node {below}")));
        }
        let parent = self.nodes[below].parent;
        let w = self.alloc(parent, 0);
        let leaf = self.alloc(w, label);
        if parent == NIL {
            self.root = w;
        } else {
            let idx = self.nodes[parent].children.iter().position(|&c| c == below).expect("child of parent");
            self.nodes[parent].children[idx] = w;
        }
        self.nodes[below].parent = w;
        self.nodes[w].children = vec![below, leaf];
        Ok((w, leaf))
    }

    /// Adds a new leaf as the child of branch point `v` at index `pos` of its
    /// child list. Returns the leaf's node id.
    pub fn insert_vertex(&mut self, v: usize, pos: usize, label: usize) -> Result<usize> {
        if self.contains(label) {
            return Err(Error::DuplicateLabel(label));
        }
        if label == 0 {
            return Err(Error::OutOfRange("labels are positive".into()));
        }
        if !self.is_alive(v) || self.is_leaf(v) {
            return Err(Error::DanglingAddress(format!("branch point {v}")));
        }
        if pos > self.nodes[v].children.len() {
            return Err(Error::OutOfRange(format!("child position {pos}")));
        }
        let leaf = self.alloc(v, label);
        self.nodes[v].children.insert(pos, leaf);
        Ok(leaf)
    }

    /// Removes leaf `label`; a parent left with one child is contracted, its
    /// surviving child taking the parent's place (and list position).
    pub fn remove_leaf(&mut self, label: usize) -> Result<Removal> {
        let leaf = self.leaf(label).ok_or(Error::MissingLabel(label))?;
        if self.leaves == 1 {
            return Err(Error::LastLeaf);
        }
        let parent = self.nodes[leaf].parent;
        let index = self.nodes[parent].children.iter().position(|&c| c == leaf).expect("child");
        self.nodes[parent].children.remove(index);
        self.leaf_of[label] = NIL;
        self.leaves -= 1;
        self.release(leaf);
        let mut contracted = None;
        if self.nodes[parent].children.len() == 1 {
            let survivor = self.nodes[parent].children[0];
            let gp = self.nodes[parent].parent;
            let mut gidx = 0;
            if gp == NIL {
                self.root = survivor;
            } else {
                gidx = self.nodes[gp].children.iter().position(|&c| c == parent).expect("child");
                self.nodes[gp].children[gidx] = survivor;
            }
            self.nodes[survivor].parent = gp;
            self.release(parent);
            contracted = Some((survivor, gidx));
        }
        Ok(Removal { parent, index, contracted })
    }

    /// Shifts every label above `j` down by one (the increasing bijection
    /// applied after deleting leaf `j`).
    pub fn relabel_down_from(&mut self, j: usize) {
        for l in j + 1..self.leaf_of.len() {
            let v = self.leaf_of[l];
            if v != NIL {
                self.nodes[v].label = l - 1;
                self.leaf_of[l - 1] = v;
                self.leaf_of[l] = NIL;
            }
        }
    }

    /// Applies a label map to every leaf. The map must be injective on the
    /// current labels and map to positive integers.
    pub fn map_labels(&mut self, f: impl Fn(usize) -> usize) {
        let old: Vec<(usize, usize)> = self.labels().into_iter().map(|l| (l, self.leaf_of[l])).collect();
        for &(l, _) in &old {
            self.leaf_of[l] = NIL;
        }
        for (l, v) in old {
            let nl = f(l);
            assert!(nl >= 1, "labels are positive");
            if self.leaf_of.len() <= nl {
                self.leaf_of.resize(nl + 1, NIL);
            }
            assert!(self.leaf_of[nl] == NIL, "label map is not injective");
            self.leaf_of[nl] = v;
            self.nodes[v].label = nl;
        }
    }

    /// Exchanges the labels of leaves `i` and `j`: both leaves keep their
    /// positions, only the labels move.
    pub fn swap_leaf_labels(&mut self, i: usize, j: usize) -> Result<()> {
        let vi = self.leaf(i).ok_or(Error::MissingLabel(i))?;
        let vj = self.leaf(j).ok_or(Error::MissingLabel(j))?;
        self.nodes[vi].label = j;
        self.nodes[vj].label = i;
        self.leaf_of[i] = vj;
        self.leaf_of[j] = vi;
        Ok(())
    }

    /// Sorts every child list by least leaf label.
    pub fn sort_all_children(&mut self) {
        let mins = self.min_labels();
        for v in self.preorder() {
            self.nodes[v].children.sort_unstable_by_key(|&c| mins[c]);
        }
    }

    /// Sorts only the two leftmost children of every branch point by least
    /// label, leaving the rest in place.
    pub fn sort_leftmost_pairs(&mut self) {
        let mins = self.min_labels();
        for v in self.preorder() {
            let ch = &mut self.nodes[v].children;
            if ch.len() >= 2 && mins[ch[0]] > mins[ch[1]] {
                ch.swap(0, 1);
            }
        }
    }

    /// Whether every branch point has its two least-label children in the two
    /// leftmost positions.
    pub fn leftmost_pairs_are_minimal(&self) -> bool {
        let mins = self.min_labels();
        self.preorder().into_iter().all(|v| {
            let ch = &self.nodes[v].children;
            if ch.len() < 3 {
                return true;
            }
            let pair_max = mins[ch[0]].max(mins[ch[1]]);
            ch[2..].iter().all(|&c| mins[c] > pair_max)
        })
    }

    /// Renders the tree in the given mode.
    pub fn encode(&self, mode: Encoding) -> String {
        let mins = self.min_labels();
        let mut out = String::new();
        self.encode_node(self.root, mode, &mins, &mut out);
        out
    }

    fn encode_node(&self, v: usize, mode: Encoding, mins: &[usize], out: &mut String) {
        let node = &self.nodes[v];
        if node.label > 0 {
            out.push_str(&node.label.to_string());
            return;
        }
        let sorted = self.children_by_min(v, mins);
        out.push('(');
        for (r, &c) in sorted.iter().enumerate() {
            if r > 0 {
                out.push(',');
            }
            self.encode_node(c, mode, mins, out);
        }
        out.push(')');
        let c = sorted.len();
        let pos_of = |child: usize| node.children.iter().position(|&x| x == child).expect("child");
        match mode {
            Encoding::NonPlanar => {}
            Encoding::SemiPlanar if c >= 3 => {
                let sigma: Vec<String> = sorted[2..].iter().map(|&ch| (pos_of(ch) - 1).to_string()).collect();
                out.push('[');
                out.push_str(&sigma.join(","));
                out.push(']');
            }
            Encoding::SemiPlanar => {}
            Encoding::Planar => {
                let sigma: Vec<String> = sorted.iter().map(|&ch| (pos_of(ch) + 1).to_string()).collect();
                out.push('[');
                out.push_str(&sigma.join(","));
                out.push(']');
            }
        }
    }

    /// Canonical string of the unlabelled shape (leaves are `*`).
    pub fn shape_key(&self) -> String {
        fn rec(t: &Tree, v: usize) -> String {
            if t.is_leaf(v) {
                return "*".to_string();
            }
            let mut parts: Vec<String> = t.children(v).iter().map(|&c| rec(t, c)).collect();
            parts.sort();
            format!("({})", parts.concat())
        }
        rec(self, self.root)
    }

    /// Parses the tree grammar `tree := label | "(" tree ("," tree)+ ")" [σ]`.
    ///
    /// Children may be listed in any order; they are stored in least-label
    /// order unless an order suffix is present. In [`Encoding::NonPlanar`]
    /// mode suffixes are rejected; in [`Encoding::SemiPlanar`] mode exactly
    /// the branches with `c ≥ 3` children carry a `c − 2` entry suffix; in
    /// [`Encoding::Planar`] mode every branch carries a `c` entry suffix.
    pub fn parse(s: &str, mode: Encoding) -> Result<Tree> {
        let mut p = Parser { s: s.as_bytes(), i: 0 };
        let raw = p.tree()?;
        p.skip_ws();
        if p.i != p.s.len() {
            return Err(Error::Parse(format!("trailing input at byte {}", p.i)));
        }
        let mut t = Tree { nodes: Vec::new(), root: NIL, leaf_of: Vec::new(), free: Vec::new(), leaves: 0 };
        t.root = t.build(&raw, NIL, mode)?;
        Ok(t)
    }

    fn build(&mut self, raw: &Raw, parent: usize, mode: Encoding) -> Result<usize> {
        match raw {
            Raw::Leaf(l) => {
                if *l == 0 {
                    return Err(Error::Parse("labels are positive".into()));
                }
                if self.contains(*l) {
                    return Err(Error::DuplicateLabel(*l));
                }
                Ok(self.alloc(parent, *l))
            }
            Raw::Branch(kids, suffix) => {
                let v = self.alloc(parent, 0);
                let mut built = Vec::with_capacity(kids.len());
                for k in kids {
                    let c = self.build(k, v, mode)?;
                    built.push((self.min_label(c), c));
                }
                built.sort_unstable();
                let sorted: Vec<usize> = built.into_iter().map(|(_, c)| c).collect();
                let c = sorted.len();
                let want = match mode {
                    Encoding::NonPlanar => 0,
                    Encoding::SemiPlanar => c.saturating_sub(2) * usize::from(c >= 3),
                    Encoding::Planar => c,
                };
                let got = suffix.as_ref().map_or(0, |s| s.len());
                if got != want {
                    return Err(Error::Parse(format!("branch with {c} children needs an order of length {want}, got {got}")));
                }
                let children = match suffix {
                    None => sorted,
                    Some(sigma) => {
                        if !crate::urn::is_permutation(sigma) {
                            return Err(Error::Parse(format!("order {sigma:?} is not a permutation")));
                        }
                        let mut slots = vec![NIL; c];
                        if mode == Encoding::Planar {
                            for (r, &p) in sigma.iter().enumerate() {
                                slots[p - 1] = sorted[r];
                            }
                        } else {
                            slots[0] = sorted[0];
                            slots[1] = sorted[1];
                            for (r, &p) in sigma.iter().enumerate() {
                                slots[p + 1] = sorted[r + 2];
                            }
                        }
                        slots
                    }
                };
                self.nodes[v].children = children;
                Ok(v)
            }
        }
    }

    /// Structural check: parent pointers, leaf index and branching degrees.
    pub fn validate(&self) -> Result<()> {
        let mut seen = 0;
        for v in self.preorder() {
            let node = &self.nodes[v];
            if !node.alive {
                return Err(Error::Parse(format!("dead node {v} reachable")));
            }
            if node.label == 0 && node.children.len() < 2 {
                return Err(Error::Parse(format!("branch point {v} has fewer than 2 children")));
            }
            if node.label > 0 {
                seen += 1;
                if self.leaf(node.label) != Some(v) {
                    return Err(Error::Parse(format!("leaf index broken for {}", node.label)));
                }
            }
            for &c in &node.children {
                if self.nodes[c].parent != v {
                    return Err(Error::Parse(format!("parent pointer broken at {c}")));
                }
            }
        }
        if seen != self.leaves {
            return Err(Error::Parse("leaf count mismatch".into()));
        }
        Ok(())
    }

    /// Rank (1-based) of child `c` among the children of its parent in
    /// least-label order.
    pub fn rank_of(&self, c: usize, mins: &[usize]) -> usize {
        let p = self.nodes[c].parent;
        1 + self.nodes[p].children.iter().filter(|&&x| mins[x] < mins[c]).count()
    }

    /// Path of child ranks from the root to `v`.
    pub fn path_of(&self, v: usize, mins: &[usize]) -> Vec<usize> {
        let mut path = Vec::new();
        let mut u = v;
        while self.nodes[u].parent != NIL {
            path.push(self.rank_of(u, mins));
            u = self.nodes[u].parent;
        }
        path.reverse();
        path
    }

    /// Node reached from the root by a path of child ranks.
    pub fn resolve_path(&self, path: &[usize], mins: &[usize]) -> Result<usize> {
        let mut v = self.root;
        for &r in path {
            if self.is_leaf(v) || r == 0 || r > self.nodes[v].children.len() {
                return Err(Error::DanglingAddress(format!("{path:?}")));
            }
            v = self.children_by_min(v, mins)[r - 1];
        }
        Ok(v)
    }

    /// Copies the subtree rooted at `v` of `other` into this arena under
    /// `parent` (which must be fixed up by the caller), keeping child order.
    pub(crate) fn graft_copy(&mut self, other: &Tree, v: usize, parent: usize, map_label: &dyn Fn(usize) -> usize) -> usize {
        let label = other.label(v);
        let id = self.alloc(parent, if label > 0 { map_label(label) } else { 0 });
        let kids: Vec<usize> = other.children(v).to_vec();
        let mut new_kids = Vec::with_capacity(kids.len());
        for c in kids {
            new_kids.push(self.graft_copy(other, c, id, map_label));
        }
        self.nodes[id].children = new_kids;
        id
    }

    /// Copies the subtree of `other` rooted at `v`, turning every node for
    /// which `cut` returns a label into a leaf with that label, and mapping
    /// the remaining leaf labels through `map_label`.
    pub fn copy_cut(other: &Tree, v: usize, cut: &dyn Fn(usize) -> Option<usize>, map_label: &dyn Fn(usize) -> usize) -> Tree {
        fn rec(t: &mut Tree, other: &Tree, v: usize, parent: usize, cut: &dyn Fn(usize) -> Option<usize>, map_label: &dyn Fn(usize) -> usize) -> usize {
            if let Some(l) = cut(v) {
                return t.alloc(parent, l);
            }
            let label = other.label(v);
            let id = t.alloc(parent, if label > 0 { map_label(label) } else { 0 });
            let kids: Vec<usize> = other.children(v).to_vec();
            let new_kids: Vec<usize> = kids.into_iter().map(|c| rec(t, other, c, id, cut, map_label)).collect();
            t.nodes[id].children = new_kids;
            id
        }
        let mut t = Tree { nodes: Vec::new(), root: NIL, leaf_of: Vec::new(), free: Vec::new(), leaves: 0 };
        t.root = rec(&mut t, other, v, NIL, cut, map_label);
        t
    }

    /// Builds a tree from a copy of the subtree of `other` rooted at `v`.
    pub fn from_subtree(other: &Tree, v: usize, map_label: &dyn Fn(usize) -> usize) -> Tree {
        let mut t = Tree { nodes: Vec::new(), root: NIL, leaf_of: Vec::new(), free: Vec::new(), leaves: 0 };
        t.root = t.graft_copy(other, v, NIL, map_label);
        t
    }

    /// Replaces leaf `label` by a copy of the subtree of `other` rooted at
    /// `v`, keeping the leaf's position.
    pub fn replace_leaf_with(&mut self, label: usize, other: &Tree, v: usize, map_label: &dyn Fn(usize) -> usize) -> Result<usize> {
        let leaf = self.leaf(label).ok_or(Error::MissingLabel(label))?;
        let parent = self.nodes[leaf].parent;
        let idx = if parent == NIL { 0 } else { self.nodes[parent].children.iter().position(|&c| c == leaf).expect("child") };
        self.leaf_of[label] = NIL;
        self.leaves -= 1;
        self.release(leaf);
        let id = self.graft_copy(other, v, parent, map_label);
        if parent == NIL {
            self.root = id;
        } else {
            self.nodes[parent].children[idx] = id;
        }
        Ok(id)
    }
}

enum Raw {
    Leaf(usize),
    Branch(Vec<Raw>, Option<Vec<usize>>),
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.i).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.i += 1;
            Ok(())
        } else {
            Err(Error::Parse(format!("expected '{}' at byte {}", c as char, self.i)))
        }
    }

    fn number(&mut self) -> Result<usize> {
        self.skip_ws();
        let start = self.i;
        while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
            self.i += 1;
        }
        if start == self.i {
            return Err(Error::Parse(format!("expected a number at byte {start}")));
        }
        std::str::from_utf8(&self.s[start..self.i])
            .expect("ascii digits")
            .parse()
            .map_err(|e| Error::Parse(format!("{e}")))
    }

    fn tree(&mut self) -> Result<Raw> {
        if self.peek() == Some(b'(') {
            self.i += 1;
            let mut kids = vec![self.tree()?];
            while self.peek() == Some(b',') {
                self.i += 1;
                kids.push(self.tree()?);
            }
            self.expect(b')')?;
            if kids.len() < 2 {
                return Err(Error::Parse("a branch needs at least two children".into()));
            }
            let suffix = if self.peek() == Some(b'[') {
                self.i += 1;
                let mut sigma = vec![self.number()?];
                while self.peek() == Some(b',') {
                    self.i += 1;
                    sigma.push(self.number()?);
                }
                self.expect(b']')?;
                Some(sigma)
            } else {
                None
            };
            Ok(Raw::Branch(kids, suffix))
        } else {
            Ok(Raw::Leaf(self.number()?))
        }
    }
}

/// Kind of an insertable part.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PartKind {
    /// Edge above a leaf (also the unique edge of a 1-leaf tree).
    LeafEdge,
    /// Edge above a branch point other than the topmost one.
    InternalEdge,
    /// A branch point.
    BranchPoint,
    /// Edge above the topmost branch point.
    RootEdge,
}

impl PartKind {
    /// Whether the part is an edge.
    pub fn is_edge(self) -> bool {
        self != PartKind::BranchPoint
    }
}

/// Address of an insertable part: `e:` + path for the edge above the node at
/// `path`, `v:` + path for the branch point at `path`. Paths are
/// dot-separated 1-based child ranks in least-label order; the empty path is
/// the topmost node, so `e:` is the root edge.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartAddress {
    /// Part kind.
    pub kind: PartKind,
    /// Child ranks from the topmost node.
    pub path: Vec<usize>,
}

impl PartAddress {
    /// Address of the root edge.
    pub fn root_edge() -> Self {
        PartAddress { kind: PartKind::RootEdge, path: Vec::new() }
    }

    /// Parses `e:1.2`, `v:`, `e:` and similar. The kind of an edge is fixed
    /// by [`PartAddress::resolve`]; parsing yields `RootEdge` for `e:` and
    /// `InternalEdge` for other edge paths until resolved.
    pub fn parse(s: &str) -> Result<Self> {
        let (tag, rest) = s.split_once(':').ok_or_else(|| Error::Parse(format!("bad address {s:?}")))?;
        let path: Vec<usize> = if rest.is_empty() {
            Vec::new()
        } else {
            rest.split('.')
                .map(|x| x.parse::<usize>().map_err(|_| Error::Parse(format!("bad address {s:?}"))))
                .collect::<Result<_>>()?
        };
        let kind = match (tag, path.is_empty()) {
            ("e", true) => PartKind::RootEdge,
            ("e", false) => PartKind::InternalEdge,
            ("v", _) => PartKind::BranchPoint,
            _ => return Err(Error::Parse(format!("bad address {s:?}"))),
        };
        Ok(PartAddress { kind, path })
    }

    /// Resolves against `t`, returning the part and the corrected kind.
    pub fn resolve(&self, t: &Tree) -> Result<(Part, PartKind)> {
        let mins = t.min_labels();
        let v = t.resolve_path(&self.path, &mins).map_err(|_| Error::DanglingAddress(self.to_string()))?;
        let part = if self.kind == PartKind::BranchPoint {
            if t.is_leaf(v) {
                return Err(Error::DanglingAddress(self.to_string()));
            }
            Part::Vertex(v)
        } else {
            Part::Edge(v)
        };
        Ok((part, part_kind(t, part)))
    }
}

impl fmt::Display for PartAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.kind == PartKind::BranchPoint { "v" } else { "e" };
        let path: Vec<String> = self.path.iter().map(|r| r.to_string()).collect();
        write!(f, "{tag}:{}", path.join("."))
    }
}

/// An insertable part in arena terms: the edge above a node, or a branch
/// point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Part {
    /// Edge above the node.
    Edge(usize),
    /// Branch point.
    Vertex(usize),
}

/// Kind of part `p` of `t`.
pub fn part_kind(t: &Tree, p: Part) -> PartKind {
    match p {
        Part::Vertex(_) => PartKind::BranchPoint,
        Part::Edge(v) if t.is_leaf(v) => PartKind::LeafEdge,
        Part::Edge(v) if v == t.root() => PartKind::RootEdge,
        Part::Edge(_) => PartKind::InternalEdge,
    }
}

/// Address of part `p` of `t`.
pub fn part_address(t: &Tree, p: Part, mins: &[usize]) -> PartAddress {
    let v = match p {
        Part::Edge(v) | Part::Vertex(v) => v,
    };
    PartAddress { kind: part_kind(t, p), path: t.path_of(v, mins) }
}

/// All insertable parts of `t`: every edge (one per node) and every branch
/// point, in preorder with the edge of a node before the node itself.
pub fn insertable_parts(t: &Tree) -> Vec<Part> {
    let mut out = Vec::new();
    for v in t.preorder() {
        out.push(Part::Edge(v));
        if !t.is_leaf(v) {
            out.push(Part::Vertex(v));
        }
    }
    out
}

/// Non-planar rooted tree with distinct positive leaf labels, kept in
/// canonical form (children sorted by least leaf label).
#[derive(Clone, Debug)]
pub struct LabelledTree {
    tree: Tree,
}

impl PartialEq for LabelledTree {
    fn eq(&self, other: &Self) -> bool {
        self.encode() == other.encode()
    }
}
impl Eq for LabelledTree {}
impl Hash for LabelledTree {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.encode().hash(state)
    }
}

impl fmt::Display for LabelledTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}

impl std::str::FromStr for LabelledTree {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        LabelledTree::parse(s)
    }
}

/// Ancestral line of a leaf with the spinal bushes hanging off it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinalDecomposition {
    /// Addresses of the branch points `v_1, …, v_l` on the line from the
    /// leaf's parent up to the topmost node.
    pub line: Vec<PartAddress>,
    /// For each `v_j`, the subtrees rooted at its children off the spine, in
    /// least-label order.
    pub bushes: Vec<Vec<LabelledTree>>,
}

impl SpinalDecomposition {
    /// Least label of bush `j` (0-based), if present.
    pub fn bush_min(&self, j: usize) -> Option<usize> {
        self.bushes.get(j).and_then(|b| b.iter().map(|t| t.tree.labels()[0]).min())
    }
}

impl LabelledTree {
    /// Wraps an arena tree, putting it into canonical form.
    pub fn from_tree(mut tree: Tree) -> Self {
        tree.sort_all_children();
        LabelledTree { tree }
    }

    /// The 1-leaf tree.
    pub fn single(label: usize) -> Self {
        LabelledTree { tree: Tree::single(label) }
    }

    /// Parses the tree grammar (no order suffixes allowed).
    pub fn parse(s: &str) -> Result<Self> {
        Ok(LabelledTree::from_tree(Tree::parse(s, Encoding::NonPlanar)?))
    }

    /// Canonical text encoding, e.g. `((1,2),3)`.
    pub fn encode(&self) -> String {
        self.tree.encode(Encoding::NonPlanar)
    }

    /// Underlying arena tree (canonical order).
    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    /// Consumes the wrapper.
    pub fn into_tree(self) -> Tree {
        self.tree
    }

    /// Number of leaves.
    pub fn n_leaves(&self) -> usize {
        self.tree.n_leaves()
    }

    /// Sorted labels.
    pub fn labels(&self) -> Vec<usize> {
        self.tree.labels()
    }

    /// All insertable parts with their addresses.
    pub fn parts(&self) -> Vec<PartAddress> {
        let mins = self.tree.min_labels();
        insertable_parts(&self.tree).into_iter().map(|p| part_address(&self.tree, p, &mins)).collect()
    }

    /// Inserts leaf `j` into part `x`: an edge is split by a new binary
    /// branch point carrying `j`; a branch point gains `j` as a child.
    pub fn insert_leaf(&self, x: &PartAddress, j: usize) -> Result<Self> {
        if self.tree.contains(j) {
            return Err(Error::DuplicateLabel(j));
        }
        let (part, _) = x.resolve(&self.tree)?;
        let mut t = self.tree.clone();
        insert_at_part(&mut t, part, j)?;
        Ok(LabelledTree::from_tree(t))
    }

    /// Deletes leaf `j`, contracting a binary parent; with `relabel`, labels
    /// above `j` shift down by one.
    pub fn delete_leaf(&self, j: usize, relabel: bool) -> Result<Self> {
        let mut t = self.tree.clone();
        t.remove_leaf(j)?;
        if relabel {
            t.relabel_down_from(j);
        }
        Ok(LabelledTree::from_tree(t))
    }

    /// Deletes every label outside `keep` (largest first), without
    /// relabelling.
    pub fn restrict(&self, keep: impl Fn(usize) -> bool) -> Result<Self> {
        let mut t = self.tree.clone();
        for l in self.tree.labels().into_iter().rev() {
            if !keep(l) {
                t.remove_leaf(l)?;
            }
        }
        Ok(LabelledTree::from_tree(t))
    }

    /// Swaps the positions of leaves `i` and `j`.
    pub fn swap_labels(&self, i: usize, j: usize) -> Result<Self> {
        let mut t = self.tree.clone();
        t.swap_leaf_labels(i, j)?;
        Ok(LabelledTree::from_tree(t))
    }

    /// Ancestral line of leaf `i` and its spinal bushes.
    pub fn spinal_decomposition(&self, i: usize) -> Result<SpinalDecomposition> {
        let t = &self.tree;
        let leaf = t.leaf(i).ok_or(Error::MissingLabel(i))?;
        let mins = t.min_labels();
        let mut line = Vec::new();
        let mut bushes = Vec::new();
        let mut child = leaf;
        let mut v = t.parent(leaf);
        while v != NIL {
            line.push(part_address(t, Part::Vertex(v), &mins));
            let bush = t
                .children_by_min(v, &mins)
                .into_iter()
                .filter(|&c| c != child)
                .map(|c| LabelledTree { tree: Tree::from_subtree(t, c, &|l| l) })
                .collect();
            bushes.push(bush);
            child = v;
            v = t.parent(v);
        }
        Ok(SpinalDecomposition { line, bushes })
    }

    /// Canonical string of the unlabelled shape.
    pub fn shape_key(&self) -> String {
        self.tree.shape_key()
    }

    /// Whether every branch point has exactly two children.
    pub fn is_binary(&self) -> bool {
        self.tree.branch_points().iter().all(|&v| self.tree.children(v).len() == 2)
    }
}

/// Inserts leaf `j` at arena part `part`: edges get a new binary branch
/// point (new leaf to the right), branch points get `j` appended as their
/// rightmost child. Returns the new leaf's node id.
pub fn insert_at_part(t: &mut Tree, part: Part, j: usize) -> Result<usize> {
    match part {
        Part::Edge(v) => Ok(t.insert_edge(v, j)?.1),
        Part::Vertex(v) => {
            let pos = t.children(v).len();
            t.insert_vertex(v, pos, j)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lt(s: &str) -> LabelledTree {
        LabelledTree::parse(s).unwrap()
    }

    #[test]
    fn parse_and_encode_round_trip() {
        for s in ["1", "(1,2)", "((1,2),3)", "(1,(2,5,7),3,(6,8))", "((1,(2,5,7),3,(6,8)),4)"] {
            assert_eq!(lt(s).encode(), s);
        }
        assert_eq!(lt("(3,(2,1))").encode(), "((1,2),3)");
        assert!(LabelledTree::parse("(1)").is_err());
        assert!(LabelledTree::parse("(1,1)").is_err());
        assert!(LabelledTree::parse("(1,2").is_err());
        assert!(LabelledTree::parse("(1,2,3)[1]").is_err());
    }

    #[test]
    fn insertion_examples() {
        let one = LabelledTree::single(1);
        let cherry = one.insert_leaf(&PartAddress::root_edge(), 2).unwrap();
        assert_eq!(cherry.encode(), "(1,2)");
        let star = cherry.insert_leaf(&PartAddress::parse("v:").unwrap(), 3).unwrap();
        assert_eq!(star.encode(), "(1,2,3)");
        assert!(star.insert_leaf(&PartAddress::parse("v:").unwrap(), 3).is_err());
        assert!(star.insert_leaf(&PartAddress::parse("e:4").unwrap(), 5).is_err());
        let cat = lt("(((1,2),3),4)");
        for x in cat.parts() {
            let t = cat.insert_leaf(&x, 9).unwrap();
            assert_eq!(t.delete_leaf(9, false).unwrap(), cat);
        }
    }

    #[test]
    fn deletion_examples() {
        assert_eq!(lt("(1,2)").delete_leaf(2, false).unwrap().encode(), "1");
        assert_eq!(lt("((1,2),3)").delete_leaf(2, false).unwrap().encode(), "(1,3)");
        assert_eq!(lt("((1,2),3)").delete_leaf(2, true).unwrap().encode(), "(1,2)");
        assert_eq!(lt("(1,2,3)").delete_leaf(3, false).unwrap().encode(), "(1,2)");
        assert_eq!(lt("1").delete_leaf(1, false), Err(Error::LastLeaf));
        assert_eq!(lt("(1,2)").delete_leaf(3, false), Err(Error::MissingLabel(3)));
    }

    #[test]
    fn swap_examples() {
        let t = lt("((1,2),3)");
        assert_eq!(t.swap_labels(2, 2).unwrap(), t);
        // ((3,2),1) as written; the canonical listing puts leaf 1 first
        let swapped = t.swap_labels(1, 3).unwrap();
        assert_eq!(swapped, lt("((2,3),1)"));
        assert_eq!(swapped.encode(), "(1,(2,3))");
        assert!(t.swap_labels(1, 4).is_err());
    }

    #[test]
    fn spinal_examples() {
        let sd = lt("(1,2)").spinal_decomposition(1).unwrap();
        assert_eq!(sd.bushes.len(), 1);
        assert_eq!(sd.bushes[0][0].encode(), "2");
        let sd = lt("((1,2),3)").spinal_decomposition(1).unwrap();
        assert_eq!(sd.bushes.iter().map(|b| b[0].encode()).collect::<Vec<_>>(), vec!["2", "3"]);
        let sd = lt("(1,2,3)").spinal_decomposition(1).unwrap();
        assert_eq!(sd.bushes.len(), 1);
        assert_eq!(sd.bushes[0].len(), 2);
        assert_eq!(sd.bush_min(0), Some(2));
    }

    #[test]
    fn addresses() {
        let t = lt("((1,(2,5,7),3,(6,8)),4)");
        let parts = t.parts();
        assert_eq!(parts.len(), 12 + 4);
        let strs: Vec<String> = parts.iter().map(|p| p.to_string()).collect();
        assert!(strs.contains(&"e:".to_string()));
        assert!(strs.contains(&"v:1.2".to_string()));
        assert!(strs.contains(&"e:1.4.2".to_string()));
        let (part, kind) = PartAddress::parse("e:1.4.2").unwrap().resolve(t.tree()).unwrap();
        assert_eq!(kind, PartKind::LeafEdge);
        if let Part::Edge(v) = part {
            assert_eq!(t.tree().label(v), 8);
        }
        assert!(PartAddress::parse("v:2").unwrap().resolve(t.tree()).is_err());
    }

    #[test]
    fn shape_keys() {
        assert_eq!(lt("((1,2),3)").shape_key(), lt("(1,(2,3))").shape_key());
        assert_ne!(lt("((1,2),3)").shape_key(), lt("(1,2,3)").shape_key());
    }
}
