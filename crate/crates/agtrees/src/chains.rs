//! Down-up Markov chains.
//!
//! A down-up chain on trees with `n` leaves selects a leaf `I` uniformly,
//! transforms the tree and picks a leaf `Ĩ` to delete, relabels
//! `Ĩ + 1, …, n` by `Ĩ, …, n − 1`, and grows leaf `n` back with a growth
//! rule. This module provides the generic framework and three concrete
//! chains:
//!
//! * the semi-planar chain: `Ĩ = max{I, a, b}` by local search, positional
//!   label swap, deletion, semi-planar up-step;
//! * the non-planar chain: `Ĩ` from the spinal bushes at a binary parent, or
//!   from the ordered-restaurant neighbour law at a multifurcating parent;
//! * the decorated chain on `[k]`-shapes with masses, described autonomously
//!   by urn draws, with leaf resampling when the shape changes.
//!
//! Each step can record a [`DownStepTrace`].

use crate::decorated::{canonical_parts, initial_weight, CollapsedTree, DecoratedTree};
use crate::error::{Error, Result};
use crate::growth::{grow_decorated, grow_semiplanar, grow_tree, GrowthModel, Variant};
use crate::numeric::{Params, Scalar};
use crate::sampling::Chooser;
use crate::semiplanar::{graft, sample_orders, LocalSearchResult, SemiPlanarTree};
use crate::tree::{part_kind, Encoding, LabelledTree, Part, PartKind, Tree, NIL};
use crate::urn::{draw_beta_binomial, draw_decrement};

/// Which case of the decorated kernel a down-step went through.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub enum CaseTag {
    /// External edge with mass above 1: mass decrement.
    A1,
    /// Internal or root edge: mass decrement.
    A2,
    /// Branch point: mass decrement.
    A3,
    /// External edge with mass 1, parent mass moves onto the edge; shape kept.
    B1,
    /// External edge with mass 1 at a parent where no mass is found next to
    /// the leaf: shape down-step and leaf resampling.
    B2,
    /// External edge with mass 1 at a binary parent without mass but with
    /// mass on the edge above: the leaf moves up into that edge.
    B3,
    /// External edge with mass 1 at a binary parent, no mass on the parent
    /// or the edge above: shape down-step and leaf resampling.
    B4,
}

/// Audit record of one down-step.
#[derive(Clone, Debug, Default, PartialEq, serde::Serialize)]
pub struct DownStepTrace {
    /// Selected leaf (for decorated chains: the shape leaf of the selected
    /// external edge, or 0 if another part was selected).
    pub i: usize,
    /// Least label of the first spinal bush (0 if not computed).
    pub a: usize,
    /// Second local-search label (0 if none or not computed).
    pub b: usize,
    /// Deleted leaf (0 for decorated steps that keep the shape).
    pub i_tilde: usize,
    /// Decorated-kernel case.
    pub case: Option<CaseTag>,
    /// State before the step.
    pub pre: String,
    /// State after the down-phase.
    pub post: String,
}

fn uniform_leaf<S: Scalar, C: Chooser<S> + ?Sized>(lo: usize, n: usize, ch: &mut C) -> usize {
    let w = vec![S::one(); n - lo];
    lo + 1 + ch.choose(&w)
}

/// Deletes leaf `j` of an arena tree and relabels with the increasing
/// bijection.
fn delete_relabel(t: &mut Tree, j: usize) -> Result<()> {
    t.remove_leaf(j)?;
    t.relabel_down_from(j);
    Ok(())
}

/// One step of a generic down-up chain on arena trees: `I` uniform on
/// `[n]`; `transform(t, I)` returns a tree and the leaf to delete; the leaf
/// is deleted, labels above it shift down, and leaf `n` is inserted by the
/// growth model (semi-planar locations for [`Variant::SemiPlanar`]).
pub fn generic_downup_step<S, C, F>(t: &Tree, mut transform: F, model: &GrowthModel<S>, ch: &mut C) -> Result<Tree>
where
    S: Scalar,
    C: Chooser<S> + ?Sized,
    F: FnMut(&Tree, usize, &mut C) -> Result<(Tree, usize)>,
{
    let n = t.n_leaves();
    if n < 3 {
        return Err(Error::OutOfRange(format!("down-up chains need n >= 3, got {n}")));
    }
    let i = uniform_leaf::<S, C>(0, n, ch);
    let (mut u, j) = transform(t, i, ch)?;
    if !u.contains(j) {
        return Err(Error::MissingLabel(j));
    }
    delete_relabel(&mut u, j)?;
    let split = model.variant == Variant::SemiPlanar;
    if split && !u.leftmost_pairs_are_minimal() {
        return Err(Error::NotSemiPlanar(u.encode(Encoding::Planar)));
    }
    grow_tree(&mut u, &model.params, model.variant, split, ch)?;
    if !split {
        u.sort_all_children();
    }
    Ok(u)
}

/// Aldous' down-up chain on binary trees: delete a uniform leaf and insert
/// leaf `n` into a uniform edge.
pub fn uniform_chain_step<S: Scalar, C: Chooser<S> + ?Sized>(t: &LabelledTree, ch: &mut C) -> Result<LabelledTree> {
    let half = S::ratio(1, 2);
    let model = GrowthModel::new(Variant::NonPlanar, Params::new(half.clone(), half)?)?;
    let u = generic_downup_step(t.tree(), |t: &Tree, i, _: &mut C| Ok((t.clone(), i)), &model, ch)?;
    Ok(LabelledTree::from_tree(u))
}

/// Binary local search: `Ĩ = max{i, a, b}` with `a` the least label of the
/// sibling subtree and `b` the least label of the other children of the
/// grandparent (0 at the root).
pub fn binary_local_search(t: &Tree, i: usize) -> Result<LocalSearchResult> {
    let leaf = t.leaf(i).ok_or(Error::MissingLabel(i))?;
    let v = t.parent(leaf);
    if v == NIL {
        return Ok(LocalSearchResult { a: 0, b: 0, i_tilde: i });
    }
    let a = t.children(v).iter().filter(|&&c| c != leaf).map(|&c| t.min_label(c)).min().expect("sibling");
    let g = t.parent(v);
    let b = if g == NIL {
        0
    } else {
        t.children(g).iter().filter(|&&c| c != v).map(|&c| t.min_label(c)).min().expect("sibling")
    };
    Ok(LocalSearchResult { a, b, i_tilde: i.max(a).max(b) })
}

/// The binary `α`-chain: local search on a binary tree, swap, delete, and
/// `(α, α)`-growth.
pub fn alpha_chain_step<S: Scalar, C: Chooser<S> + ?Sized>(t: &LabelledTree, alpha: &S, ch: &mut C) -> Result<LabelledTree> {
    if !t.is_binary() {
        return Err(Error::InvalidParams("the alpha-chain runs on binary trees".into()));
    }
    let model = GrowthModel::new(Variant::NonPlanar, Params::new(alpha.clone(), alpha.clone())?)?;
    let u = generic_downup_step(
        t.tree(),
        |t: &Tree, i, _: &mut C| {
            let ls = binary_local_search(t, i)?;
            let mut u = t.clone();
            u.swap_leaf_labels(i, ls.i_tilde)?;
            Ok((u, ls.i_tilde))
        },
        &model,
        ch,
    )?;
    Ok(LabelledTree::from_tree(u))
}

// ---------------------------------------------------------------------------
// semi-planar chain

/// Down-phase of the semi-planar chain with `I` uniform on the labels
/// greater than `reserved` (0 for the standard chain, 1 for internal growth,
/// `c` for `c`-order branch-point growth): local search, positional swap,
/// deletion of `Ĩ`, increasing relabelling.
pub fn semiplanar_down<S: Scalar, C: Chooser<S> + ?Sized>(
    t: &SemiPlanarTree,
    reserved: usize,
    ch: &mut C,
    trace: Option<&mut DownStepTrace>,
) -> Result<SemiPlanarTree> {
    let n = t.n_leaves();
    if n <= reserved || n < 2 {
        return Err(Error::OutOfRange(format!("no deletable leaf among {n}")));
    }
    let i = uniform_leaf::<S, C>(reserved, n, ch);
    let ls = t.local_search(i)?;
    let out = t.swap_labels(i, ls.i_tilde)?.delete_leaf(ls.i_tilde, true)?;
    if let Some(tr) = trace {
        *tr = DownStepTrace { i, a: ls.a, b: ls.b, i_tilde: ls.i_tilde, case: None, pre: t.encode(), post: out.encode() };
    }
    Ok(out)
}

/// One step of the semi-planar `(α, γ)`-chain.
pub fn semiplanar_chain_step<S: Scalar, C: Chooser<S> + ?Sized>(
    t: &SemiPlanarTree,
    params: &Params<S>,
    ch: &mut C,
    trace: Option<&mut DownStepTrace>,
) -> Result<SemiPlanarTree> {
    if t.n_leaves() < 3 {
        return Err(Error::OutOfRange("down-up chains need n >= 3".into()));
    }
    let mut d = semiplanar_down(t, 0, ch, trace)?;
    grow_tree(&mut d.tree, params, Variant::SemiPlanar, true, ch)?;
    Ok(d)
}

// ---------------------------------------------------------------------------
// non-planar chain

/// Law of `Ĩ` at a parent with `c ≥ 3` children when `I` is the least label
/// of the `j`-th child (children ranked by least label): entries
/// `(j', P(Ĩ = i_{j'}))`. Derived from the ordered-restaurant neighbour
/// probabilities, with `D = (c − 2)α − γ`:
///
/// * `j ≤ 2`: `P(i_3) = (α − γ)/D`, `P(i_{j'}) = α/D` for `j' > 3`;
/// * `j > 2`: `P(i_j) = ((j − 2)α − γ)/D`, `P(i_{j'}) = α/D` for `j' > j`.
///
/// When `D = 0` (only possible for `c = 3`, `α = γ`) the law is the point
/// mass at `i_3`.
pub fn i_tilde_law<S: Scalar>(c: usize, j: usize, params: &Params<S>) -> Result<Vec<(usize, S)>> {
    if c < 3 || j < 1 || j > c {
        return Err(Error::OutOfRange(format!("child rank {j} of {c}")));
    }
    let (alpha, gamma) = (&params.alpha, &params.gamma);
    let d = S::from_usize(c - 2) * alpha.clone() - gamma.clone();
    if d.is_zero() {
        if c == 3 {
            return Ok(vec![(3, S::one())]);
        }
        return Err(Error::InvalidParams("degenerate neighbour law".into()));
    }
    let mut out = Vec::new();
    if j <= 2 {
        out.push((3, (alpha.clone() - gamma.clone()) / d.clone()));
        for jp in 4..=c {
            out.push((jp, alpha.clone() / d.clone()));
        }
    } else {
        out.push((j, (S::from_usize(j - 2) * alpha.clone() - gamma.clone()) / d.clone()));
        for jp in j + 1..=c {
            out.push((jp, alpha.clone() / d.clone()));
        }
    }
    Ok(out)
}

/// The alternative `Ĩ`-law with denominator `(c − 1)α − γ` and diagonal
/// term `((c − 1 − j)α − γ)`, kept for comparison: its rows do not in
/// general sum to 1. Same layout as [`i_tilde_law`].
pub fn i_tilde_law_alternative<S: Scalar>(c: usize, j: usize, params: &Params<S>) -> Result<Vec<(usize, S)>> {
    if c < 3 || j < 1 || j > c {
        return Err(Error::OutOfRange(format!("child rank {j} of {c}")));
    }
    let (alpha, gamma) = (&params.alpha, &params.gamma);
    let d = S::from_usize(c - 1) * alpha.clone() - gamma.clone();
    let mut out = Vec::new();
    if j <= 2 {
        out.push((3, (alpha.clone() - gamma.clone()) / d.clone()));
        for jp in 4..=c {
            out.push((jp, alpha.clone() / d.clone()));
        }
    } else {
        let diag = (S::from_usize(c - 1) - S::from_usize(j)) * alpha.clone() - gamma.clone();
        out.push((j, diag / d.clone()));
        for jp in j + 1..=c {
            out.push((jp, alpha.clone() / d.clone()));
        }
    }
    Ok(out)
}

/// Draws `Ĩ` for the non-planar chain from leaf `i` of `t`.
pub fn draw_i_tilde<S: Scalar, C: Chooser<S> + ?Sized>(
    t: &Tree,
    i: usize,
    params: &Params<S>,
    ch: &mut C,
) -> Result<LocalSearchResult> {
    let leaf = t.leaf(i).ok_or(Error::MissingLabel(i))?;
    let v = t.parent(leaf);
    if v == NIL || t.children(v).len() == 2 {
        return binary_local_search(t, i);
    }
    let mut mins: Vec<usize> = t.children(v).iter().map(|&c| t.min_label(c)).collect();
    mins.sort_unstable();
    let j = mins.iter().position(|&m| m == i).expect("leaf is a child") + 1;
    let law = i_tilde_law(mins.len(), j, params)?;
    let w: Vec<S> = law.iter().map(|(_, p)| p.clone()).collect();
    let jp = law[ch.choose(&w)].0;
    Ok(LocalSearchResult { a: 0, b: 0, i_tilde: mins[jp - 1] })
}

/// Down-phase of the non-planar chain: `I` uniform, `Ĩ` drawn, positional
/// swap, deletion and relabelling.
pub fn nonplanar_down<S: Scalar, C: Chooser<S> + ?Sized>(
    t: &LabelledTree,
    params: &Params<S>,
    ch: &mut C,
    trace: Option<&mut DownStepTrace>,
) -> Result<LabelledTree> {
    let n = t.n_leaves();
    if n < 2 {
        return Err(Error::LastLeaf);
    }
    let i = uniform_leaf::<S, C>(0, n, ch);
    let ls = draw_i_tilde(t.tree(), i, params, ch)?;
    let mut u = t.tree().clone();
    u.swap_leaf_labels(i, ls.i_tilde)?;
    delete_relabel(&mut u, ls.i_tilde)?;
    let out = LabelledTree::from_tree(u);
    if let Some(tr) = trace {
        *tr = DownStepTrace { i, a: ls.a, b: ls.b, i_tilde: ls.i_tilde, case: None, pre: t.encode(), post: out.encode() };
    }
    Ok(out)
}

/// One step of the non-planar `(α, γ)`-chain.
pub fn nonplanar_chain_step<S: Scalar, C: Chooser<S> + ?Sized>(
    t: &LabelledTree,
    params: &Params<S>,
    ch: &mut C,
    trace: Option<&mut DownStepTrace>,
) -> Result<LabelledTree> {
    if t.n_leaves() < 3 {
        return Err(Error::OutOfRange("down-up chains need n >= 3".into()));
    }
    let d = nonplanar_down(t, params, ch, trace)?;
    let mut u = d.into_tree();
    grow_tree(&mut u, params, Variant::NonPlanar, false, ch)?;
    Ok(LabelledTree::from_tree(u))
}

/// The exchangeable variant of the non-planar chain for `γ = 1 − α`: no
/// relabelling; the deleted label is reinserted by the up-step.
pub fn exchangeable_chain_step<S: Scalar, C: Chooser<S> + ?Sized>(
    t: &LabelledTree,
    params: &Params<S>,
    ch: &mut C,
) -> Result<LabelledTree> {
    if params.gamma != S::one() - params.alpha.clone() {
        return Err(Error::InvalidParams("the exchangeable variant needs gamma = 1 - alpha".into()));
    }
    let n = t.n_leaves();
    if n < 3 {
        return Err(Error::OutOfRange("down-up chains need n >= 3".into()));
    }
    let i = uniform_leaf::<S, C>(0, n, ch);
    let ls = draw_i_tilde(t.tree(), i, params, ch)?;
    let mut u = t.tree().clone();
    u.swap_leaf_labels(i, ls.i_tilde)?;
    u.remove_leaf(ls.i_tilde)?;
    let slots = crate::growth::slot_weights(&u, params, Variant::NonPlanar, false);
    let w: Vec<S> = slots.iter().map(|(_, w)| w.clone()).collect();
    let slot = slots[ch.choose(&w)].0;
    crate::tree::insert_at_part(&mut u, slot.part, ls.i_tilde)?;
    Ok(LabelledTree::from_tree(u))
}

// ---------------------------------------------------------------------------
// decorated chain

/// Resamples leaf `k` into a decorated `[k − 1]`-tree of mass `n − 1`:
/// part `x` is chosen with probability `ỹ_x/(n − k)`; an edge is split by
/// `DirMult^{ỹ_x − 1}(1 − α, α − γ, γ, w_x)` into the new leaf (plus one),
/// the new branch point, the new edge above it and the continuing lower
/// part of `x` (which keeps `x`'s external status); a branch point with `c`
/// children gives the new leaf `1 + Y_k` with
/// `(Y_k, Y_x) ~ DirMult^{y_x − 1}(1 − α, cα − γ)` and keeps `Y_x`.
pub fn resample_leaf<S: Scalar, C: Chooser<S> + ?Sized>(d: &DecoratedTree, params: &Params<S>, ch: &mut C) -> Result<DecoratedTree> {
    let k = d.k() + 1;
    if d.n() < k {
        return Err(Error::InvalidMasses("no free mass to resample a leaf from".into()));
    }
    let mut out = d.clone();
    let parts = canonical_parts(&out.tree);
    let w: Vec<S> = parts.iter().map(|&p| S::from_usize(out.reduced_mass(p))).collect();
    let x = parts[ch.choose(&w)];
    let one_minus_alpha = params.leaf_weight();
    match x {
        Part::Edge(u) => {
            let external = part_kind(&out.tree, x) == PartKind::LeafEdge;
            let wx = initial_weight(&out.tree, x, params);
            let yt = out.reduced_mass(x);
            let split = ch.dirmult(yt - 1, &[one_minus_alpha, params.right_gap_weight(), params.internal_weight(), wx]);
            let (branch, leaf) = out.tree.insert_edge(u, k)?;
            out.ensure_capacity();
            out.edge[leaf] = split[0] + 1;
            out.vertex[leaf] = 0;
            out.vertex[branch] = split[1];
            out.edge[branch] = split[2];
            out.edge[u] = split[3] + usize::from(external);
        }
        Part::Vertex(u) => {
            let c = out.tree.children(u).len();
            let y = out.vertex[u];
            let wx = S::from_usize(c) * params.alpha.clone() - params.gamma.clone();
            let split = ch.dirmult(y - 1, &[one_minus_alpha, wx]);
            let end = c;
            let leaf = out.tree.insert_vertex(u, end, k)?;
            out.ensure_capacity();
            out.edge[leaf] = split[0] + 1;
            out.vertex[leaf] = 0;
            out.vertex[u] = split[1];
        }
    }
    out.tree.sort_all_children();
    Ok(out)
}

/// Non-planar down-step on the shape of `d` starting from shape leaf `i`
/// (whose edge has mass 1): `Ĩ` is drawn as in the non-planar chain, labels
/// are swapped positionally (masses stay with their positions), the leaf at
/// `i`'s old position is removed together with its unit mass, masses of a
/// contracted parent merge into the surviving edge, and labels above `Ĩ`
/// shift down. Returns the deleted label.
fn shape_down<S: Scalar, C: Chooser<S> + ?Sized>(d: &mut DecoratedTree, i: usize, params: &Params<S>, ch: &mut C) -> Result<LocalSearchResult> {
    let ls = draw_i_tilde(&d.tree, i, params, ch)?;
    let leaf = d.tree.leaf(i).ok_or(Error::MissingLabel(i))?;
    d.tree.swap_leaf_labels(i, ls.i_tilde)?;
    d.edge[leaf] = 0;
    d.delete_shape_leaf(ls.i_tilde)?;
    d.tree.relabel_down_from(ls.i_tilde);
    d.tree.sort_all_children();
    Ok(ls)
}

/// Down-phase of the decorated chain (mass `n` to `n − 1`, shape on `[k]`
/// kept up to relabelling).
pub fn decorated_down<S: Scalar, C: Chooser<S> + ?Sized>(
    d: &DecoratedTree,
    params: &Params<S>,
    ch: &mut C,
    trace: Option<&mut DownStepTrace>,
) -> Result<DecoratedTree> {
    let k = d.k();
    let n = d.n();
    if k >= n {
        return Err(Error::InvalidMasses(format!("decorated chains need k < n (k = {k}, n = {n})")));
    }
    let mut out = d.clone();
    let parts = canonical_parts(&out.tree);
    let w: Vec<S> = parts.iter().map(|&p| S::from_usize(out.mass(p))).collect();
    let x = parts[ch.choose(&w)];
    let kind = part_kind(&out.tree, x);
    let mut rec = DownStepTrace::default();
    let external_unit = kind == PartKind::LeafEdge && out.mass(x) == 1;
    if !external_unit {
        out.set_mass(x, out.mass(x) - 1);
        rec.case = Some(match kind {
            PartKind::LeafEdge => CaseTag::A1,
            PartKind::InternalEdge | PartKind::RootEdge => CaseTag::A2,
            PartKind::BranchPoint => CaseTag::A3,
        });
    } else {
        let leaf = match x {
            Part::Edge(u) => u,
            Part::Vertex(_) => unreachable!("leaf edge"),
        };
        let i = out.tree.label(leaf);
        rec.i = i;
        let v = out.tree.parent(leaf);
        let c = out.tree.children(v).len();
        let yv = out.vertex[v];
        let (alpha, gamma) = (&params.alpha, &params.gamma);
        if c > 2 {
            let rest = S::from_usize(c - 2) * alpha.clone() - gamma.clone();
            let ng = draw_beta_binomial(ch, yv, alpha, &rest);
            if ng > 0 {
                let y = draw_decrement(ch, ng, alpha, alpha);
                out.edge[leaf] = y;
                out.vertex[v] = yv - y;
                rec.case = Some(CaseTag::B1);
            } else {
                let ls = shape_down(&mut out, i, params, ch)?;
                (rec.a, rec.b, rec.i_tilde) = (ls.a, ls.b, ls.i_tilde);
                out = resample_leaf(&out, params, ch)?;
                rec.case = Some(CaseTag::B2);
            }
        } else if yv > 0 {
            let y = draw_decrement(ch, yv, alpha, &params.right_gap_weight());
            out.edge[leaf] = y;
            out.vertex[v] = yv - y;
            rec.case = Some(CaseTag::B1);
        } else if out.edge[v] > 0 {
            let ye = out.edge[v];
            let nb = draw_decrement(ch, ye, gamma, gamma);
            let nt = 1 + draw_beta_binomial(ch, nb - 1, &params.leaf_weight(), &params.right_gap_weight());
            // move leaf i from v up into the edge above v
            out.edge[leaf] = 0;
            out.edge[v] = 0;
            out.vertex[v] = 0;
            let rem = out.tree.remove_leaf(i)?;
            let (survivor, _) = rem.contracted.expect("binary parent is contracted");
            let (branch, new_leaf) = out.tree.insert_edge(survivor, i)?;
            out.ensure_capacity();
            out.edge[branch] = ye - nb;
            out.vertex[branch] = nb - nt;
            out.edge[new_leaf] = nt;
            out.vertex[new_leaf] = 0;
            out.tree.sort_all_children();
            rec.case = Some(CaseTag::B3);
        } else {
            let ls = shape_down(&mut out, i, params, ch)?;
            (rec.a, rec.b, rec.i_tilde) = (ls.a, ls.b, ls.i_tilde);
            out = resample_leaf(&out, params, ch)?;
            rec.case = Some(CaseTag::B4);
        }
    }
    if let Some(tr) = trace {
        rec.pre = d.key();
        rec.post = out.key();
        *tr = rec;
    }
    Ok(out)
}

/// One step of the decorated `(α, γ)`-chain: autonomous down-phase, then a
/// decorated growth step.
pub fn decorated_chain_step<S: Scalar, C: Chooser<S> + ?Sized>(
    d: &DecoratedTree,
    params: &Params<S>,
    ch: &mut C,
    trace: Option<&mut DownStepTrace>,
) -> Result<DecoratedTree> {
    d.validate()?;
    let mut out = decorated_down(d, params, ch, trace)?;
    grow_decorated(&mut out, params, ch)?;
    Ok(out)
}

/// Samples a semi-planar tree whose decorated projection is `d`: label
/// sets are exchangeable given their sizes, and every part receives an
/// independent internal structure — standard growth on external edges,
/// internal growth on internal and root edges, and `c`-order branch-point
/// growth (with ordered-restaurant start orders) on branch points.
pub fn lift_decorated<S: Scalar, C: Chooser<S> + ?Sized>(d: &DecoratedTree, params: &Params<S>, ch: &mut C) -> Result<SemiPlanarTree> {
    d.validate()?;
    let k = d.k();
    let n = d.n();
    let shape = &d.tree;
    let parts = canonical_parts(shape);
    let cap = shape.capacity();
    let mut collapsed = CollapsedTree { tree: shape.clone(), edge: vec![Vec::new(); cap], vertex: vec![Vec::new(); cap] };
    let mut room: Vec<usize> = parts.iter().map(|&p| d.reduced_mass(p)).collect();
    for &p in &parts {
        if let Part::Edge(u) = p {
            if shape.is_leaf(u) {
                collapsed.edge[u].push(shape.label(u));
            }
        }
    }
    for l in k + 1..=n {
        let w: Vec<S> = room.iter().map(|&r| S::from_usize(r)).collect();
        let idx = ch.choose(&w);
        room[idx] -= 1;
        match parts[idx] {
            Part::Edge(u) => collapsed.edge[u].push(l),
            Part::Vertex(u) => collapsed.vertex[u].push(l),
        }
    }
    let mut structures = Vec::with_capacity(parts.len());
    for &p in &parts {
        let y = d.mass(p);
        let s = match (p, part_kind(shape, p)) {
            (_, PartKind::LeafEdge) => grow_semiplanar(&GrowthModel::new(Variant::SemiPlanar, params.clone())?, y, ch)?,
            (_, PartKind::InternalEdge | PartKind::RootEdge) => {
                if y == 0 {
                    SemiPlanarTree::single(1)
                } else {
                    grow_semiplanar(&GrowthModel::new(Variant::Internal, params.clone())?, y + 1, ch)?
                }
            }
            (Part::Vertex(v), PartKind::BranchPoint) => {
                let c = shape.children(v).len();
                if y == 0 {
                    let star = LabelledTree::parse(&format!(
                        "({})",
                        (1..=c).map(|i| i.to_string()).collect::<Vec<_>>().join(",")
                    ))?;
                    sample_orders(&star, params, ch)?
                } else {
                    grow_semiplanar(&GrowthModel::new(Variant::BranchPoint(c), params.clone())?, c + y, ch)?
                }
            }
            (Part::Edge(_), PartKind::BranchPoint) => unreachable!("edges are not branch points"),
        };
        structures.push((p, s.tree));
    }
    SemiPlanarTree::from_tree(graft(&collapsed, &structures)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Q;
    use crate::sampling::{enumerate, replica_rng, RngChooser};
    use std::collections::BTreeMap;

    fn q(a: i64, b: i64) -> Q {
        Q::ratio(a, b)
    }

    #[test]
    fn i_tilde_rows_sum_to_one() {
        for (a, g) in [(q(1, 2), q(1, 2)), (q(2, 3), q(1, 3)), (q(3, 4), q(1, 4)), (q(1, 1), q(0, 1))] {
            let p = Params::new(a, g).unwrap();
            for c in 3..=8 {
                for j in 1..=c {
                    let law = i_tilde_law(c, j, &p).unwrap();
                    let s: Q = law.iter().map(|(_, x)| x.clone()).sum();
                    assert_eq!(s, q(1, 1), "c={c} j={j}");
                }
            }
        }
    }

    #[test]
    fn i_tilde_examples() {
        let p = Params::new(q(1, 1), q(1, 2)).unwrap();
        assert_eq!(i_tilde_law(4, 1, &p).unwrap(), vec![(3, q(1, 3)), (4, q(2, 3))]);
        assert_eq!(i_tilde_law(3, 3, &p).unwrap(), vec![(3, q(1, 1))]);
        let alt = i_tilde_law_alternative(4, 1, &p).unwrap();
        let s: Q = alt.iter().map(|(_, x)| x.clone()).sum();
        assert_ne!(s, q(1, 1));
    }

    #[test]
    fn figure_down_step_given_i3() {
        let t = SemiPlanarTree::parse("((1,(2,5,7)[1],3,(6,8))[2,1],4)").unwrap();
        let ls = t.local_search(3).unwrap();
        let out = t.swap_labels(3, ls.i_tilde).unwrap().delete_leaf(ls.i_tilde, true).unwrap();
        assert_eq!(out.encode(), "((1,(2,5,6)[1],(3,7))[1],4)");
    }

    #[test]
    fn one_step_preserves_leaf_count() {
        let p = Params::new(0.6, 0.3).unwrap();
        let mut rng = replica_rng(7, 0);
        let mut ch = RngChooser::new(&mut rng);
        let m = GrowthModel::new(Variant::SemiPlanar, p.clone()).unwrap();
        let mut t = grow_semiplanar(&m, 9, &mut ch).unwrap();
        let mut u = t.project();
        for _ in 0..200 {
            t = semiplanar_chain_step(&t, &p, &mut ch, None).unwrap();
            u = nonplanar_chain_step(&u, &p, &mut ch, None).unwrap();
            assert_eq!(t.n_leaves(), 9);
            assert_eq!(u.n_leaves(), 9);
            assert_eq!(u.labels(), (1..=9).collect::<Vec<_>>());
        }
    }

    #[test]
    fn resample_examples() {
        let p = Params::new(q(2, 3), q(1, 3)).unwrap();
        // branch point with mass 1 selected: y_k = 1, y_x -> 0
        let d = DecoratedTree::from_key("(1,2);0,1,1,1").unwrap();
        let out = enumerate::<Q, String>(|ch| resample_leaf(&d, &p, ch).unwrap().key());
        assert_eq!(out, vec![(q(1, 1), "(1,2,3);0,0,1,1,1".to_string())]);
        // external edge with mass 2: leaf 1 on the edge of 2
        let d = DecoratedTree::from_key("(1,2);0,0,1,2").unwrap();
        let out = enumerate::<Q, String>(|ch| resample_leaf(&d, &p, ch).unwrap().key());
        assert_eq!(out, vec![(q(1, 1), "(1,(2,3));0,0,1,0,0,1,1".to_string())]);
    }

    #[test]
    fn decorated_mass_decrement_on_branch_point() {
        let p = Params::new(q(2, 3), q(1, 3)).unwrap();
        let d = DecoratedTree::from_key("(1,2,3);0,2,1,1,1").unwrap();
        let mut tr = DownStepTrace::default();
        let mut hits = 0;
        for (pr, (key, case)) in enumerate::<Q, _>(|ch| {
            let out = decorated_down(&d, &p, ch, Some(&mut tr)).unwrap();
            (out.key(), tr.case)
        }) {
            if case == Some(CaseTag::A3) {
                hits += 1;
                assert_eq!(key, "(1,2,3);0,1,1,1,1");
                assert_eq!(pr, q(2, 5));
            }
        }
        assert_eq!(hits, 1);
    }

    #[test]
    fn lift_projects_back() {
        let p = Params::new(0.7, 0.4).unwrap();
        let mut rng = replica_rng(3, 1);
        let mut ch = RngChooser::new(&mut rng);
        let mut masses = BTreeMap::new();
        for (a, m) in [("e:", 2), ("v:", 2), ("e:1", 3), ("e:2", 1), ("v:2", 1), ("e:2.1", 1), ("e:2.2", 2)] {
            masses.insert(a.to_string(), m);
        }
        let d = DecoratedTree::new(&LabelledTree::parse("(1,(2,3))").unwrap(), &masses).unwrap();
        for _ in 0..50 {
            let t = lift_decorated(&d, &p, &mut ch).unwrap();
            assert_eq!(t.n_leaves(), d.n());
            let back = crate::decorated::project_decorated(&t.project(), d.k()).unwrap();
            assert_eq!(back, d);
        }
    }
}
