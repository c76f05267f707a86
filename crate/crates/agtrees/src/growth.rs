//! Growth processes: at each step a new leaf is inserted into a part chosen
//! with probability proportional to its weight.
//!
//! | part                         | weight          |
//! |------------------------------|-----------------|
//! | external (leaf) edge         | `1 − α`         |
//! | internal edge, root edge     | `γ`             |
//! | branch point, `c` children   | `(c − 1)α − γ`  |
//!
//! In semi-planar growth the branch-point weight is split over insertion
//! locations `l ∈ [c − 1]`: `α` for `l ≤ c − 2` and `α − γ` for the
//! rightmost location. The internal variant gives leaf 1's edge weight `γ`;
//! the `c`-order branch-point variant gives the root edge and the edges of
//! leaves `1..c` weight zero. Decorated growth is a Pólya urn over the parts
//! of a fixed shape.

use std::collections::BTreeMap;

use crate::decorated::{canonical_parts, DecoratedTree};
use crate::error::{Error, Result};
use crate::numeric::{Params, Scalar};
use crate::sampling::Chooser;
use crate::semiplanar::{sample_orders, sp_insert_at, SemiPlanarTree};
use crate::tree::{insert_at_part, insertable_parts, part_address, part_kind, LabelledTree, Part, PartAddress, PartKind, Tree};

/// Which growth process.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// `(α, γ)`-growth of non-planar trees.
    NonPlanar,
    /// Semi-planar `(α, γ)`-growth.
    SemiPlanar,
    /// Internal growth: leaf 1's edge has weight `γ` (requires `γ > 0`).
    Internal,
    /// `c`-order branch-point growth: the root edge and the edges of leaves
    /// `1..c` have weight zero (requires `α > γ`).
    BranchPoint(usize),
    /// Decorated growth on a fixed shape.
    Decorated,
}

/// A growth process with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthModel<S> {
    /// Process variant.
    pub variant: Variant,
    /// Parameters `(α, γ)`.
    pub params: Params<S>,
}

impl<S: Scalar> GrowthModel<S> {
    /// Validated constructor.
    pub fn new(variant: Variant, params: Params<S>) -> Result<Self> {
        match variant {
            Variant::Internal if params.gamma.is_zero() => {
                return Err(Error::InvalidParams("internal growth needs gamma > 0".into()))
            }
            Variant::BranchPoint(c) if !(params.alpha > params.gamma) || c < 2 => {
                return Err(Error::InvalidParams("branch-point growth needs alpha > gamma and c >= 2".into()))
            }
            _ => {}
        }
        Ok(GrowthModel { variant, params })
    }

    /// Initial state (`n` leaves at the start): the 1-leaf tree, or the
    /// `c`-star for branch-point growth.
    pub fn initial_tree(&self) -> LabelledTree {
        match self.variant {
            Variant::BranchPoint(c) => LabelledTree::parse(&star(c)).expect("star"),
            _ => LabelledTree::single(1),
        }
    }
}

fn star(c: usize) -> String {
    format!("({})", (1..=c).map(|i| i.to_string()).collect::<Vec<_>>().join(","))
}

/// A part together with an insertion location (0 for edges).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Slot {
    /// Part of the tree.
    pub part: Part,
    /// Location: 0 for edges, `1..=c−1` for a branch point with `c`
    /// children in semi-planar mode, 0 for branch points otherwise.
    pub loc: usize,
}

/// Weight of part `p` under the given variant (branch points unsplit).
pub fn part_weight<S: Scalar>(t: &Tree, p: Part, params: &Params<S>, variant: Variant) -> S {
    let kind = part_kind(t, p);
    match (variant, p) {
        (Variant::Internal, Part::Edge(v)) if t.label(v) == 1 => return params.internal_weight(),
        (Variant::BranchPoint(c), Part::Edge(v)) if v == t.root() || (t.is_leaf(v) && t.label(v) <= c) => return S::zero(),
        _ => {}
    }
    match kind {
        PartKind::LeafEdge => params.leaf_weight(),
        PartKind::InternalEdge | PartKind::RootEdge => params.internal_weight(),
        PartKind::BranchPoint => {
            let v = match p {
                Part::Vertex(v) | Part::Edge(v) => v,
            };
            params.branch_weight(t.children(v).len())
        }
    }
}

/// All slots with their weights. With `split`, branch points are split into
/// locations (semi-planar growth).
pub fn slot_weights<S: Scalar>(t: &Tree, params: &Params<S>, variant: Variant, split: bool) -> Vec<(Slot, S)> {
    let mut out = Vec::new();
    for p in insertable_parts(t) {
        match p {
            Part::Vertex(v) if split => {
                let c = t.children(v).len();
                for l in 1..c {
                    let w = if l + 1 == c { params.right_gap_weight() } else { params.alpha.clone() };
                    out.push((Slot { part: p, loc: l }, w));
                }
            }
            _ => out.push((Slot { part: p, loc: 0 }, part_weight(t, p, params, variant))),
        }
    }
    out
}

/// Weight table keyed by part address and location.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightTable<S> {
    /// `(address, location, weight)` entries.
    pub entries: Vec<(PartAddress, usize, S)>,
    /// Sum of the weights.
    pub total: S,
}

impl<S: Scalar> WeightTable<S> {
    fn from_slots(t: &Tree, slots: Vec<(Slot, S)>) -> Self {
        let mins = t.min_labels();
        let total = slots.iter().fold(S::zero(), |a, (_, w)| a + w.clone());
        let entries = slots.into_iter().map(|(s, w)| (part_address(t, s.part, &mins), s.loc, w)).collect();
        WeightTable { entries, total }
    }

    /// Weight of an entry, if present.
    pub fn get(&self, addr: &str, loc: usize) -> Option<S> {
        self.entries.iter().find(|(a, l, _)| a.to_string() == addr && *l == loc).map(|(_, _, w)| w.clone())
    }
}

/// State of a growth process.
#[derive(Clone, Debug, PartialEq)]
pub enum GrowthState {
    /// Non-planar tree.
    NonPlanar(LabelledTree),
    /// Semi-planar tree.
    SemiPlanar(SemiPlanarTree),
    /// Decorated tree.
    Decorated(DecoratedTree),
}

impl GrowthState {
    /// Canonical encoding (decorated trees use their compact key).
    pub fn encode(&self) -> String {
        match self {
            GrowthState::NonPlanar(t) => t.encode(),
            GrowthState::SemiPlanar(t) => t.encode(),
            GrowthState::Decorated(d) => d.key(),
        }
    }
}

/// Weight table of `state` under `model`.
pub fn growth_weight_table<S: Scalar>(state: &GrowthState, model: &GrowthModel<S>) -> Result<WeightTable<S>> {
    let p = &model.params;
    match (state, model.variant) {
        (GrowthState::Decorated(d), Variant::Decorated) => {
            let t = d.tree();
            let slots = canonical_parts(t).into_iter().map(|q| (Slot { part: q, loc: 0 }, d.growth_weight(q, p))).collect();
            Ok(WeightTable::from_slots(t, slots))
        }
        (GrowthState::Decorated(_), _) | (_, Variant::Decorated) => Err(Error::VariantMismatch("decorated".into())),
        (GrowthState::NonPlanar(_), Variant::SemiPlanar) => Err(Error::VariantMismatch("semi-planar growth of a non-planar tree".into())),
        (GrowthState::SemiPlanar(_), Variant::NonPlanar) => Err(Error::VariantMismatch("non-planar growth of a semi-planar tree".into())),
        (GrowthState::NonPlanar(t), v) => Ok(WeightTable::from_slots(t.tree(), slot_weights(t.tree(), p, v, false))),
        (GrowthState::SemiPlanar(t), v) => Ok(WeightTable::from_slots(t.tree(), slot_weights(t.tree(), p, v, true))),
    }
}

/// Inserts the next leaf (label = current maximum + 1) into an arena tree.
/// Returns the slot used.
pub fn grow_tree<S: Scalar, C: Chooser<S> + ?Sized>(t: &mut Tree, params: &Params<S>, variant: Variant, split: bool, ch: &mut C) -> Result<Slot> {
    let slots = slot_weights(t, params, variant, split);
    let weights: Vec<S> = slots.iter().map(|(_, w)| w.clone()).collect();
    if !weights.iter().any(|w| *w > S::zero()) {
        return Err(Error::ZeroWeight);
    }
    let slot = slots[ch.choose(&weights)].0;
    let label = t.max_label() + 1;
    if split {
        sp_insert_at(t, slot.part, slot.loc, label)?;
    } else {
        insert_at_part(t, slot.part, label)?;
    }
    Ok(slot)
}

/// One decorated growth step: part `x` gains one unit of mass with
/// probability `(ỹ_x + w_x)/(n − α)`. Returns the part.
pub fn grow_decorated<S: Scalar, C: Chooser<S> + ?Sized>(d: &mut DecoratedTree, params: &Params<S>, ch: &mut C) -> Result<Part> {
    let parts = canonical_parts(d.tree());
    let weights: Vec<S> = parts.iter().map(|&p| d.growth_weight(p, params)).collect();
    if !weights.iter().any(|w| *w > S::zero()) {
        return Err(Error::ZeroWeight);
    }
    let p = parts[ch.choose(&weights)];
    d.set_mass(p, d.mass(p) + 1);
    Ok(p)
}

/// One growth step of any variant.
pub fn grow_step<S: Scalar, C: Chooser<S> + ?Sized>(state: &mut GrowthState, model: &GrowthModel<S>, ch: &mut C) -> Result<()> {
    let p = &model.params;
    match (state, model.variant) {
        (GrowthState::Decorated(d), Variant::Decorated) => {
            grow_decorated(d, p, ch)?;
        }
        (GrowthState::Decorated(_), _) | (_, Variant::Decorated) => return Err(Error::VariantMismatch("decorated".into())),
        (GrowthState::NonPlanar(_), Variant::SemiPlanar) | (GrowthState::SemiPlanar(_), Variant::NonPlanar) => {
            return Err(Error::VariantMismatch("state and variant disagree on planarity".into()))
        }
        (GrowthState::NonPlanar(t), v) => {
            let mut tree = t.tree().clone();
            grow_tree(&mut tree, p, v, false, ch)?;
            *t = LabelledTree::from_tree(tree);
        }
        (GrowthState::SemiPlanar(t), v) => {
            grow_tree(&mut t.tree, p, v, true, ch)?;
        }
    }
    Ok(())
}

/// Grows a non-planar tree with `n` leaves from the model's initial tree.
pub fn grow_nonplanar<S: Scalar, C: Chooser<S> + ?Sized>(model: &GrowthModel<S>, n: usize, ch: &mut C) -> Result<LabelledTree> {
    let mut t = model.initial_tree().into_tree();
    while t.n_leaves() < n {
        grow_tree(&mut t, &model.params, model.variant, false, ch)?;
    }
    Ok(LabelledTree::from_tree(t))
}

/// Grows a semi-planar tree with `n` leaves. Branch-point growth starts
/// from the `c`-star with orders drawn from the `(α, α − γ)` table-order law.
pub fn grow_semiplanar<S: Scalar, C: Chooser<S> + ?Sized>(model: &GrowthModel<S>, n: usize, ch: &mut C) -> Result<SemiPlanarTree> {
    let start = sample_orders(&model.initial_tree(), &model.params, ch)?;
    let mut t = start.tree;
    let variant = if model.variant == Variant::NonPlanar { Variant::SemiPlanar } else { model.variant };
    while t.n_leaves() < n {
        grow_tree(&mut t, &model.params, variant, true, ch)?;
    }
    SemiPlanarTree::from_tree(t)
}

/// Standard non-planar growth to `n` leaves driven by class totals instead
/// of a full weight table: each step first picks the class of the
/// insertion part — leaf edges (total `m(1 − α)` with `m` leaves),
/// internal and root edges (`γ` times the number of branch points) or
/// branch points (`(m − 1)α − γ·#branch points`) — and then a part within
/// the class (uniformly for edges, proportionally to `(c − 1)α − γ` for
/// branch points). Same law as [`grow_nonplanar`] with
/// [`Variant::NonPlanar`]; children are left in insertion order (use
/// [`LabelledTree::from_tree`] to canonicalise).
pub fn grow_nonplanar_fast<S: Scalar, C: Chooser<S> + ?Sized>(params: &Params<S>, n: usize, ch: &mut C) -> Result<Tree> {
    if n == 0 {
        return Err(Error::OutOfRange("n must be positive".into()));
    }
    let (alpha, gamma) = (&params.alpha, &params.gamma);
    let mut t = Tree::single(1);
    let mut branch: Vec<usize> = Vec::with_capacity(n);
    let mut buf: Vec<S> = Vec::with_capacity(n);
    for m in 1..n {
        let b = S::from_usize(branch.len());
        let class = [
            S::from_usize(m) * (S::one() - alpha.clone()),
            gamma.clone() * b.clone(),
            S::from_usize(m - 1) * alpha.clone() - gamma.clone() * b,
        ];
        let label = m + 1;
        match ch.choose(&class) {
            0 => {
                buf.clear();
                buf.resize(m, S::one());
                let leaf = t.leaf(ch.choose(&buf) + 1).expect("labels are 1..m");
                branch.push(t.insert_edge(leaf, label)?.0);
            }
            1 => {
                buf.clear();
                buf.resize(branch.len(), S::one());
                let below = branch[ch.choose(&buf)];
                branch.push(t.insert_edge(below, label)?.0);
            }
            _ => {
                buf.clear();
                buf.extend(branch.iter().map(|&v| params.branch_weight(t.children(v).len())));
                let v = branch[ch.choose(&buf)];
                let pos = t.children(v).len();
                t.insert_vertex(v, pos, label)?;
            }
        }
    }
    Ok(t)
}

/// Grows a decorated tree from `start` until its total mass is `n`.
pub fn grow_decorated_to<S: Scalar, C: Chooser<S> + ?Sized>(start: &DecoratedTree, params: &Params<S>, n: usize, ch: &mut C) -> Result<DecoratedTree> {
    let mut d = start.clone();
    while d.n() < n {
        grow_decorated(&mut d, params, ch)?;
    }
    Ok(d)
}

/// Stable identity of an insertion gap of a semi-planar tree that survives
/// insertions elsewhere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GapId {
    /// The edge above a node.
    Edge(usize),
    /// The gap of a branch point immediately left of one of its
    /// non-leftmost children.
    Before(usize, usize),
    /// The rightmost gap of a branch point.
    End(usize),
}

/// Semi-planar growth from an arbitrarily weighted start: every gap carries
/// an explicit weight, and insertions reorganise the table locally (new leaf
/// `1 − α`; new gap left of the new leaf `α`; a split edge keeps its weight
/// below and gets `γ` above; a new branch point `α − γ`; all other gaps keep
/// their weights).
#[derive(Clone, Debug)]
pub struct WeightedStart<S> {
    tree: SemiPlanarTree,
    weights: BTreeMap<GapId, S>,
}

impl<S: Scalar> WeightedStart<S> {
    /// Builds a start from a tree and explicit weights; every gap must be
    /// listed and weights must be nonnegative.
    pub fn new(tree: SemiPlanarTree, weights: BTreeMap<GapId, S>) -> Result<Self> {
        let ws = WeightedStart { tree, weights };
        for g in ws.gaps() {
            match ws.weights.get(&g) {
                Some(w) if *w >= S::zero() => {}
                _ => return Err(Error::InvalidParams(format!("missing or negative weight for {g:?}"))),
            }
        }
        if ws.weights.len() != ws.gaps().len() {
            return Err(Error::InvalidParams("weights for unknown gaps".into()));
        }
        Ok(ws)
    }

    /// The standard semi-planar weights on `tree`.
    pub fn standard(tree: SemiPlanarTree, params: &Params<S>) -> Self {
        Self::with_variant(tree, params, Variant::SemiPlanar)
    }

    /// The weights of a growth variant on `tree`.
    pub fn with_variant(tree: SemiPlanarTree, params: &Params<S>, variant: Variant) -> Self {
        let t = &tree.tree;
        let mut weights = BTreeMap::new();
        for (slot, w) in slot_weights(t, params, variant, true) {
            weights.insert(gap_of(t, slot), w);
        }
        WeightedStart { tree, weights }
    }

    /// Current tree.
    pub fn tree(&self) -> &SemiPlanarTree {
        &self.tree
    }

    /// Current weights by gap identity.
    pub fn weights(&self) -> &BTreeMap<GapId, S> {
        &self.weights
    }

    /// All gaps of the current tree in slot order.
    pub fn gaps(&self) -> Vec<GapId> {
        let t = &self.tree.tree;
        slot_weights(t, &Params { alpha: S::one(), gamma: S::zero() }, Variant::SemiPlanar, true)
            .into_iter()
            .map(|(s, _)| gap_of(t, s))
            .collect()
    }

    /// Weight table keyed by address and location.
    pub fn table(&self) -> WeightTable<S> {
        let t = &self.tree.tree;
        let slots = slot_weights(t, &Params { alpha: S::one(), gamma: S::zero() }, Variant::SemiPlanar, true)
            .into_iter()
            .map(|(s, _)| (s, self.weights[&gap_of(t, s)].clone()))
            .collect();
        WeightTable::from_slots(t, slots)
    }

    /// Inserts the next leaf into `slot` and reorganises the weights.
    pub fn insert(&mut self, slot: Slot, params: &Params<S>) -> Result<()> {
        let label = self.tree.tree.max_label() + 1;
        let t = &mut self.tree.tree;
        let leaf = sp_insert_at(t, slot.part, slot.loc, label)?;
        match slot.part {
            Part::Edge(_) => {
                let w = t.parent(leaf);
                self.weights.insert(GapId::Edge(w), params.internal_weight());
                self.weights.insert(GapId::End(w), params.right_gap_weight());
            }
            Part::Vertex(v) => {
                self.weights.insert(GapId::Before(v, leaf), params.alpha.clone());
            }
        }
        self.weights.insert(GapId::Edge(leaf), params.leaf_weight());
        Ok(())
    }

    /// One growth step: a gap is chosen with probability proportional to
    /// its weight.
    pub fn step<C: Chooser<S> + ?Sized>(&mut self, params: &Params<S>, ch: &mut C) -> Result<Slot> {
        let t = &self.tree.tree;
        let slots: Vec<Slot> = slot_weights(t, params, Variant::SemiPlanar, true).into_iter().map(|(s, _)| s).collect();
        let weights: Vec<S> = slots.iter().map(|&s| self.weights[&gap_of(t, s)].clone()).collect();
        if !weights.iter().any(|w| *w > S::zero()) {
            return Err(Error::ZeroWeight);
        }
        let slot = slots[ch.choose(&weights)];
        self.insert(slot, params)?;
        Ok(slot)
    }
}

/// Gap identity of a slot.
pub fn gap_of(t: &Tree, s: Slot) -> GapId {
    match s.part {
        Part::Edge(v) => GapId::Edge(v),
        Part::Vertex(v) => {
            let kids = t.children(v);
            if s.loc + 1 == kids.len() {
                GapId::End(v)
            } else {
                GapId::Before(v, kids[s.loc + 1])
            }
        }
    }
}

/// Resolves a gap of `t` given by address and location (convenience for
/// building explicit starts).
pub fn gap_at(t: &Tree, addr: &PartAddress, loc: usize) -> Result<GapId> {
    let (part, _) = addr.resolve(t)?;
    Ok(gap_of(t, Slot { part, loc }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Q;
    use crate::sampling::enumerate;

    fn q(a: i64, b: i64) -> Q {
        Q::ratio(a, b)
    }

    #[test]
    fn fast_sampler_has_the_exact_growth_law() {
        for (a, g) in [(q(2, 3), q(1, 3)), (q(1, 2), q(1, 2)), (q(7, 10), q(2, 5)), (q(1, 3), q(0, 1))] {
            let p = Params::new(a, g).unwrap();
            let m = GrowthModel::new(Variant::NonPlanar, p.clone()).unwrap();
            for n in 1..=5 {
                let mut slow: BTreeMap<String, Q> = BTreeMap::new();
                for (w, t) in enumerate::<Q, _>(|ch| grow_nonplanar(&m, n, ch).unwrap()) {
                    *slow.entry(t.encode()).or_insert_with(Q::zero) += w;
                }
                let mut fast: BTreeMap<String, Q> = BTreeMap::new();
                for (w, t) in enumerate::<Q, _>(|ch| grow_nonplanar_fast(&p, n, ch).unwrap()) {
                    *fast.entry(LabelledTree::from_tree(t).encode()).or_insert_with(Q::zero) += w;
                }
                slow.retain(|_, w| !w.is_zero());
                fast.retain(|_, w| !w.is_zero());
                assert_eq!(slow, fast, "n = {n}");
            }
        }
    }

    #[test]
    fn cherry_table() {
        let p = Params::new(q(2, 3), q(1, 4)).unwrap();
        let m = GrowthModel::new(Variant::NonPlanar, p.clone()).unwrap();
        let st = GrowthState::NonPlanar(LabelledTree::parse("(1,2)").unwrap());
        let tab = growth_weight_table(&st, &m).unwrap();
        assert_eq!(tab.get("e:1", 0), Some(q(1, 3)));
        assert_eq!(tab.get("e:2", 0), Some(q(1, 3)));
        assert_eq!(tab.get("e:", 0), Some(q(1, 4)));
        assert_eq!(tab.get("v:", 0), Some(q(2, 3) - q(1, 4)));
        assert_eq!(tab.total, q(2, 1) - q(2, 3));
    }

    #[test]
    fn semiplanar_c4_locations() {
        let p = Params::new(q(2, 3), q(1, 4)).unwrap();
        let m = GrowthModel::new(Variant::SemiPlanar, p).unwrap();
        let st = GrowthState::SemiPlanar(SemiPlanarTree::parse("(1,2,3,4)[1,2]").unwrap());
        let tab = growth_weight_table(&st, &m).unwrap();
        let v: Vec<Q> = (1..=3).map(|l| tab.get("v:", l).unwrap()).collect();
        assert_eq!(v, vec![q(2, 3), q(2, 3), q(2, 3) - q(1, 4)]);
        assert_eq!(tab.total, q(4, 1) - q(2, 3));
    }

    #[test]
    fn forced_first_steps() {
        let p = Params::new(q(1, 2), q(1, 3)).unwrap();
        let m = GrowthModel::new(Variant::NonPlanar, p.clone()).unwrap();
        let out = enumerate::<Q, String>(|ch| grow_nonplanar(&m, 2, ch).unwrap().encode());
        assert_eq!(out, vec![(q(1, 1), "(1,2)".to_string())]);
        let m = GrowthModel::new(Variant::Internal, p.clone()).unwrap();
        let tab = growth_weight_table(&GrowthState::NonPlanar(m.initial_tree()), &m).unwrap();
        assert_eq!(tab.entries.len(), 1);
        assert_eq!(tab.total, q(1, 3));
        assert!(GrowthModel::new(Variant::Internal, Params::new(q(1, 2), q(0, 1)).unwrap()).is_err());
        assert!(GrowthModel::new(Variant::BranchPoint(3), Params::new(q(1, 2), q(1, 2)).unwrap()).is_err());
    }

    #[test]
    fn decorated_branch_probability() {
        let p = Params::new(q(2, 3), q(1, 4)).unwrap();
        let shape = LabelledTree::parse("(1,2)").unwrap();
        let d = DecoratedTree::from_key("(1,2);1,2,3,1").unwrap();
        assert_eq!(d.shape(), shape);
        let m = GrowthModel::new(Variant::Decorated, p.clone()).unwrap();
        let tab = growth_weight_table(&GrowthState::Decorated(d.clone()), &m).unwrap();
        let n = d.n();
        assert_eq!(tab.total, Q::from_usize(n) - q(2, 3));
        let pv = tab.get("v:", 0).unwrap() / tab.total.clone();
        assert_eq!(pv, (q(2, 1) + q(2, 3) - q(1, 4)) / (Q::from_usize(n) - q(2, 3)));
    }

    #[test]
    fn weight_reorganisation_on_root_edge_insertion() {
        // a 3-leaf tree with arbitrary distinct weights
        let t = SemiPlanarTree::parse("((1,2),3)").unwrap();
        let tree = t.tree().clone();
        let mut weights = BTreeMap::new();
        for (i, (slot, _)) in slot_weights(&tree, &Params::new(q(1, 2), q(1, 4)).unwrap(), Variant::SemiPlanar, true).into_iter().enumerate() {
            weights.insert(gap_of(&tree, slot), q(i as i64 + 1, 7));
        }
        let mut ws = WeightedStart::new(t, weights.clone()).unwrap();
        let p = Params::new(q(1, 2), q(1, 5)).unwrap();
        let root = tree.root();
        ws.insert(Slot { part: Part::Edge(root), loc: 0 }, &p).unwrap();
        let after = ws.weights();
        for (g, w) in &weights {
            assert_eq!(&after[g], w, "old weight of {g:?} preserved");
        }
        let new: Vec<&Q> = after.iter().filter(|(g, _)| !weights.contains_key(g)).map(|(_, w)| w).collect();
        let mut new_sorted: Vec<Q> = new.into_iter().cloned().collect();
        new_sorted.sort();
        let mut expect = vec![q(1, 5), q(1, 2) - q(1, 5), q(1, 2)];
        expect.sort();
        assert_eq!(new_sorted, expect);
        let tab = ws.table();
        assert_eq!(tab.get("e:", 0), Some(q(1, 5)));
        assert_eq!(tab.get("v:", 1), Some(q(1, 2) - q(1, 5)));
        assert_eq!(tab.get("e:2", 0), Some(q(1, 2)));
        assert_eq!(tab.get("e:1", 0), Some(weights[&GapId::Edge(root)].clone()));
    }
}
