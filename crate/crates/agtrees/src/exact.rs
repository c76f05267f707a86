//! Exact rational verification by exhaustive enumeration.
//!
//! Laws and transition kernels are assembled by exhausting every random
//! choice of the (single) implementation of each stochastic procedure via
//! [`crate::sampling::enumerate`]. States are keyed by their canonical
//! encodings and kept in sorted maps, so every result is bit-reproducible.
//! No floating point is used in this module.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::chains::{
    alpha_chain_step, decorated_chain_step, i_tilde_law, i_tilde_law_alternative, lift_decorated,
    nonplanar_chain_step, resample_leaf, semiplanar_chain_step, semiplanar_down, uniform_chain_step,
};
use crate::decorated::{canonical_parts, initial_weight, project_collapsed, project_decorated, DecoratedTree};
use crate::error::{Error, Result};
use crate::growth::{grow_decorated, grow_semiplanar, grow_tree, GrowthModel, Variant, WeightedStart};
use crate::numeric::{abs_q, format_q, Params, Scalar, Q};
use crate::sampling::{enumerate, ScriptChooser};
use crate::semiplanar::{sample_orders, sigma_of, SemiPlanarTree};
use crate::tree::{part_address, part_kind, LabelledTree, Part, PartKind, Tree};
use crate::urn::{compositions, dirmult_pmf, ocrp_ordered_partition_pmf, ocrp_permutation_pmf, UrnWeights};

/// A law on keyed states.
pub type Law = BTreeMap<String, Q>;

/// A law that also keeps one representative object per key.
pub type Dist<T> = BTreeMap<String, (T, Q)>;

/// Enumeration caps (maximum number of leaves per state space).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Caps {
    /// Binary and non-planar trees.
    pub nonplanar: usize,
    /// Semi-planar trees.
    pub semiplanar: usize,
    /// Total mass of decorated and collapsed trees.
    pub decorated: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { nonplanar: 9, semiplanar: 7, decorated: 7 }
    }
}

fn cap_check(what: &str, n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::CapExceeded(format!("{what}: n = {n} exceeds the cap {cap}")));
    }
    Ok(())
}

/// Kind of state space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SpaceKind {
    /// Binary leaf-labelled trees.
    Binary,
    /// Non-planar leaf-labelled trees.
    NonPlanar,
    /// Semi-planar trees.
    SemiPlanar,
    /// Decorated `[k]`-trees.
    Decorated(usize),
    /// Collapsed `[k]`-trees.
    Collapsed(usize),
}

/// A finite state space: sorted canonical keys and an index map.
#[derive(Clone, Debug)]
pub struct StateSpace {
    /// Kind.
    pub kind: SpaceKind,
    /// Number of leaves (or total mass).
    pub n: usize,
    /// Sorted canonical keys.
    pub states: Vec<String>,
    index: HashMap<String, usize>,
}

impl StateSpace {
    fn from_keys(kind: SpaceKind, n: usize, keys: impl IntoIterator<Item = String>) -> Self {
        let set: BTreeSet<String> = keys.into_iter().collect();
        let states: Vec<String> = set.into_iter().collect();
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        StateSpace { kind, n, states, index }
    }

    /// Number of states.
    pub fn len(&self) -> usize {
        self.states.len()
    }

    /// Whether the space is empty.
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Index of a key.
    pub fn index_of(&self, key: &str) -> Option<usize> {
        self.index.get(key).copied()
    }
}

fn all_trees(n: usize, binary: bool, split: bool) -> Vec<Tree> {
    let mut level = vec![Tree::single(1)];
    for m in 1..n {
        let mut next: BTreeMap<String, Tree> = BTreeMap::new();
        let unit = Params { alpha: Q::ratio(1, 2), gamma: Q::ratio(1, 4) };
        for t in &level {
            for (slot, _) in crate::growth::slot_weights(t, &unit, Variant::SemiPlanar, split) {
                if binary && matches!(slot.part, Part::Vertex(_)) {
                    continue;
                }
                let mut u = t.clone();
                if split {
                    crate::semiplanar::sp_insert_at(&mut u, slot.part, slot.loc, m + 1).expect("valid slot");
                } else {
                    crate::tree::insert_at_part(&mut u, slot.part, m + 1).expect("valid part");
                    u.sort_all_children();
                }
                let key = u.encode(if split { crate::tree::Encoding::SemiPlanar } else { crate::tree::Encoding::NonPlanar });
                next.entry(key).or_insert(u);
            }
        }
        level = next.into_values().collect();
    }
    level
}

/// All decorated `[k]`-trees of mass `n`.
pub fn all_decorated(n: usize, k: usize) -> Result<Vec<DecoratedTree>> {
    if k == 0 || k > n {
        return Err(Error::OutOfRange(format!("k = {k}, n = {n}")));
    }
    let mut out = Vec::new();
    for shape in all_trees(k, false, false) {
        let shape = LabelledTree::from_tree(shape);
        let unit = DecoratedTree::unit(&shape);
        let parts = canonical_parts(unit.tree());
        for comp in compositions(n - k, parts.len()) {
            let mut d = unit.clone();
            for (p, extra) in parts.iter().zip(comp) {
                d.set_mass(*p, d.mass(*p) + extra);
            }
            out.push(d);
        }
    }
    Ok(out)
}

/// Enumerates a state space by recursive insertion of leaves in all
/// positions (decorated: shapes times mass compositions; collapsed:
/// projections of all non-planar trees).
pub fn enumerate_space(kind: SpaceKind, n: usize, caps: &Caps) -> Result<StateSpace> {
    if n == 0 {
        return Err(Error::OutOfRange("n must be positive".into()));
    }
    let keys: Vec<String> = match kind {
        SpaceKind::Binary | SpaceKind::NonPlanar => {
            cap_check("non-planar space", n, caps.nonplanar)?;
            all_trees(n, kind == SpaceKind::Binary, false)
                .iter()
                .map(|t| t.encode(crate::tree::Encoding::NonPlanar))
                .collect()
        }
        SpaceKind::SemiPlanar => {
            cap_check("semi-planar space", n, caps.semiplanar)?;
            all_trees(n, false, true).iter().map(|t| t.encode(crate::tree::Encoding::SemiPlanar)).collect()
        }
        SpaceKind::Decorated(k) => {
            cap_check("decorated space", n, caps.decorated)?;
            all_decorated(n, k)?.iter().map(|d| d.key()).collect()
        }
        SpaceKind::Collapsed(k) => {
            cap_check("collapsed space", n, caps.decorated)?;
            all_trees(n, false, false)
                .iter()
                .map(|t| project_collapsed(t, k).map(|c| c.key()))
                .collect::<Result<_>>()?
        }
    };
    Ok(StateSpace::from_keys(kind, n, keys))
}

/// Number of leaf-labelled (non-planar, multifurcating) trees with `n`
/// leaves by the recursion on the block of leaf 1:
/// `f(n) = Σ_{j=1}^{n−1} C(n−1, j−1) f(j) S(n−j)` with `S(0) = S(1) = 1`,
/// `S(m) = 2f(m)` — counted independently of [`enumerate_space`].
pub fn count_labelled_trees(n: usize) -> u128 {
    let mut f = vec![0u128; n.max(2) + 1];
    f[1] = 1;
    let binom = |a: usize, b: usize| -> u128 {
        let mut r: u128 = 1;
        for i in 0..b {
            r = r * (a - i) as u128 / (i + 1) as u128;
        }
        r
    };
    for m in 2..=n {
        let s = |r: usize, f: &[u128]| if r <= 1 { 1 } else { 2 * f[r] };
        f[m] = (1..m).map(|j| binom(m - 1, j - 1) * f[j] * s(m - j, &f)).sum();
    }
    f[n]
}

/// `(2n − 3)!!`, the number of binary trees with `n ≥ 2` leaves (1 for
/// `n = 1`).
pub fn count_binary_trees(n: usize) -> u128 {
    (1..n).map(|i| (2 * i - 1) as u128).product::<u128>().max(1)
}

// ---------------------------------------------------------------------------
// laws

/// Strips representatives.
pub fn law_of<T>(d: &Dist<T>) -> Law {
    d.iter().map(|(k, (_, p))| (k.clone(), p.clone())).collect()
}

/// Total mass of a law.
pub fn total(law: &Law) -> Q {
    law.values().fold(Q::zero(), |a, b| a + b.clone())
}

/// Maximum absolute difference of two laws over the union of supports.
pub fn law_residual(a: &Law, b: &Law) -> Q {
    let keys: BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    keys.into_iter()
        .map(|k| abs_q(&(a.get(k).cloned().unwrap_or_else(Q::zero) - b.get(k).cloned().unwrap_or_else(Q::zero))))
        .max()
        .unwrap_or_else(Q::zero)
}

/// Pushes a law through a random map, exhausting its randomness.
/// Parallel over source states; the merge is exact, hence deterministic.
pub fn push_forward<T, U, F, K>(dist: &Dist<T>, step: F, key: K) -> Result<Dist<U>>
where
    T: Sync,
    U: Send + Clone,
    F: Fn(&T, &mut ScriptChooser<Q>) -> Result<U> + Sync,
    K: Fn(&U) -> String + Sync,
{
    let pieces: Vec<Result<Vec<(String, U, Q)>>> = dist
        .par_iter()
        .map(|(_, (t, p))| {
            let outs = enumerate::<Q, Result<U>>(|ch| step(t, ch));
            outs.into_iter()
                .map(|(q, u)| {
                    let u = u?;
                    Ok((key(&u), u, q * p.clone()))
                })
                .collect()
        })
        .collect();
    let mut out: Dist<U> = BTreeMap::new();
    for piece in pieces {
        for (k, u, q) in piece? {
            match out.get_mut(&k) {
                Some((_, acc)) => *acc = acc.clone() + q,
                None => {
                    out.insert(k, (u, q));
                }
            }
        }
    }
    Ok(out)
}

/// Point mass.
pub fn point<T>(key: String, t: T) -> Dist<T> {
    let mut d = BTreeMap::new();
    d.insert(key, (t, Q::one()));
    d
}

/// Deterministic image of a law.
pub fn map_dist<T, U: Clone, F: Fn(&T) -> Result<U>, K: Fn(&U) -> String>(d: &Dist<T>, f: F, key: K) -> Result<Dist<U>> {
    let mut out: Dist<U> = BTreeMap::new();
    for (t, p) in d.values() {
        let u = f(t)?;
        let k = key(&u);
        match out.get_mut(&k) {
            Some((_, acc)) => *acc = acc.clone() + p.clone(),
            None => {
                out.insert(k, (u, p.clone()));
            }
        }
    }
    Ok(out)
}

fn star(c: usize) -> LabelledTree {
    LabelledTree::parse(&format!("({})", (1..=c).map(|i| i.to_string()).collect::<Vec<_>>().join(","))).expect("star")
}

/// Exact law of the non-planar growth process (any non-decorated variant,
/// without orders) at `n` leaves.
pub fn nonplanar_growth_law(model: &GrowthModel<Q>, n: usize, caps: &Caps) -> Result<Dist<LabelledTree>> {
    cap_check("non-planar growth", n, caps.nonplanar)?;
    let start = model.initial_tree();
    if n < start.n_leaves() {
        return Err(Error::OutOfRange(format!("n = {n} below the initial size")));
    }
    let mut d = point(start.encode(), start);
    for _ in d.values().next().expect("start").0.n_leaves()..n {
        d = push_forward(
            &d,
            |t: &LabelledTree, ch| {
                let mut u = t.tree().clone();
                grow_tree(&mut u, &model.params, model.variant, false, ch)?;
                Ok(LabelledTree::from_tree(u))
            },
            |t| t.encode(),
        )?;
    }
    Ok(d)
}

/// Exact law of the semi-planar growth process of a variant at `n` leaves
/// (branch-point growth starts from the star with ordered-restaurant
/// orders).
pub fn semiplanar_growth_law(model: &GrowthModel<Q>, n: usize, caps: &Caps) -> Result<Dist<SemiPlanarTree>> {
    cap_check("semi-planar growth", n, caps.semiplanar)?;
    let start = model.initial_tree();
    if n < start.n_leaves() {
        return Err(Error::OutOfRange(format!("n = {n} below the initial size")));
    }
    let variant = if model.variant == Variant::NonPlanar { Variant::SemiPlanar } else { model.variant };
    let mut d = push_forward(&point(start.encode(), start.clone()), |t, ch| sample_orders(t, &model.params, ch), |t| t.encode())?;
    for _ in start.n_leaves()..n {
        d = push_forward(
            &d,
            |t: &SemiPlanarTree, ch| {
                let mut u = t.clone();
                grow_tree(&mut u.tree, &model.params, variant, true, ch)?;
                Ok(u)
            },
            |t| t.encode(),
        )?;
    }
    Ok(d)
}

/// Exact law of decorated growth from a law of starting states up to
/// total mass `n`.
pub fn decorated_growth_law(start: &Dist<DecoratedTree>, params: &Params<Q>, n: usize) -> Result<Dist<DecoratedTree>> {
    let mut d = start.clone();
    loop {
        let m = d.values().next().map(|(t, _)| t.n()).unwrap_or(n);
        if m >= n {
            return Ok(d);
        }
        d = push_forward(
            &d,
            |t: &DecoratedTree, ch| {
                let mut u = t.clone();
                grow_decorated(&mut u, params, ch)?;
                Ok(u)
            },
            |t| t.key(),
        )?;
    }
}

/// Exact law of the `n`-th growth step. For [`Variant::Decorated`], `k` is
/// the shape size and decorated growth starts from the unit decoration of
/// the `k`-leaf growth law.
pub fn exact_law(model: &GrowthModel<Q>, n: usize, k: Option<usize>, caps: &Caps) -> Result<Law> {
    match model.variant {
        Variant::SemiPlanar => Ok(law_of(&semiplanar_growth_law(model, n, caps)?)),
        Variant::Decorated => {
            let k = k.ok_or_else(|| Error::InvalidParams("decorated law needs k".into()))?;
            cap_check("decorated growth", n, caps.decorated)?;
            let base = GrowthModel::new(Variant::NonPlanar, model.params.clone())?;
            let shapes = nonplanar_growth_law(&base, k, caps)?;
            let start = map_dist(&shapes, |t| Ok(DecoratedTree::unit(t)), |d| d.key())?;
            Ok(law_of(&decorated_growth_law(&start, &model.params, n)?))
        }
        _ => Ok(law_of(&nonplanar_growth_law(model, n, caps)?)),
    }
}

// ---------------------------------------------------------------------------
// kernels

/// A row-stochastic matrix with exact entries, keyed by canonical state
/// encodings (rows and columns may live on different spaces).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExactKernel {
    /// `rows[x][y] = K(x, y)`; zero entries are omitted.
    pub rows: BTreeMap<String, BTreeMap<String, Q>>,
}

impl ExactKernel {
    /// Entry `K(x, y)`.
    pub fn get(&self, x: &str, y: &str) -> Q {
        self.rows.get(x).and_then(|r| r.get(y)).cloned().unwrap_or_else(Q::zero)
    }

    /// Adds `p` to entry `(x, y)`.
    pub fn add(&mut self, x: &str, y: &str, p: Q) {
        let row = self.rows.entry(x.to_string()).or_default();
        match row.get_mut(y) {
            Some(acc) => *acc = acc.clone() + p,
            None => {
                row.insert(y.to_string(), p);
            }
        }
    }

    /// Number of rows.
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Largest `|Σ_y K(x, y) − 1|`.
    pub fn row_sum_residual(&self) -> Q {
        self.rows.values().map(|r| abs_q(&(r.values().fold(Q::zero(), |a, b| a + b.clone()) - Q::one()))).max().unwrap_or_else(Q::zero)
    }

    /// Whether every entry is nonnegative.
    pub fn is_nonnegative(&self) -> bool {
        self.rows.values().all(|r| r.values().all(|p| *p >= Q::zero()))
    }

    /// Matrix product `self · other`.
    pub fn compose(&self, other: &ExactKernel) -> ExactKernel {
        let rows = self
            .rows
            .par_iter()
            .map(|(x, row)| {
                let mut out: BTreeMap<String, Q> = BTreeMap::new();
                for (y, p) in row {
                    if let Some(r2) = other.rows.get(y) {
                        for (z, q) in r2 {
                            let v = p.clone() * q.clone();
                            match out.get_mut(z) {
                                Some(acc) => *acc = acc.clone() + v,
                                None => {
                                    out.insert(z.clone(), v);
                                }
                            }
                        }
                    }
                }
                out.retain(|_, v| !v.is_zero());
                (x.clone(), out)
            })
            .collect();
        ExactKernel { rows }
    }

    /// Largest entrywise absolute difference over the union of supports.
    pub fn max_abs_diff(&self, other: &ExactKernel) -> Q {
        let xs: BTreeSet<&String> = self.rows.keys().chain(other.rows.keys()).collect();
        let empty = BTreeMap::new();
        xs.into_iter()
            .map(|x| {
                let a = self.rows.get(x).unwrap_or(&empty);
                let b = other.rows.get(x).unwrap_or(&empty);
                law_residual(a, b)
            })
            .max()
            .unwrap_or_else(Q::zero)
    }

    /// `μᵀK`. Errors if `μ` charges a state without a row.
    pub fn left_apply(&self, law: &Law) -> Result<Law> {
        let mut out: Law = BTreeMap::new();
        for (x, p) in law {
            let row = self.rows.get(x).ok_or_else(|| Error::DimensionMismatch(format!("no row for {x}")))?;
            for (y, q) in row {
                let v = p.clone() * q.clone();
                match out.get_mut(y) {
                    Some(acc) => *acc = acc.clone() + v,
                    None => {
                        out.insert(y.clone(), v);
                    }
                }
            }
        }
        Ok(out)
    }

    /// The 0/1 matrix of a function.
    pub fn from_map<'a>(states: impl IntoIterator<Item = &'a String>, f: impl Fn(&str) -> Result<String>) -> Result<ExactKernel> {
        let mut k = ExactKernel::default();
        for s in states {
            k.add(s, &f(s)?, Q::one());
        }
        Ok(k)
    }

    /// Conditional-law ("lifting") kernel of a law along a projection:
    /// `Λ(y, x) = μ(x)/μ(λ^{-1}(y))` for `λ(x) = y`.
    pub fn lift(fine: &Law, proj: impl Fn(&str) -> Result<String>) -> Result<ExactKernel> {
        let mut coarse: Law = BTreeMap::new();
        let mut image = Vec::with_capacity(fine.len());
        for (x, p) in fine {
            let y = proj(x)?;
            *coarse.entry(y.clone()).or_insert_with(Q::zero) += p.clone();
            image.push((y, x, p));
        }
        let mut k = ExactKernel::default();
        for (y, x, p) in image {
            if !p.is_zero() {
                k.add(&y, x, p.clone() / coarse[&y].clone());
            }
        }
        Ok(k)
    }

    /// Largest entry difference, formatted.
    pub fn describe_residual(&self, other: &ExactKernel) -> String {
        format_q(&self.max_abs_diff(other))
    }
}

/// Assembles a kernel by exhausting the randomness of `step` from every
/// state. Parallel over states.
pub fn kernel_from<T, U, F, K>(states: &[(String, T)], step: F, key: K) -> Result<ExactKernel>
where
    T: Sync,
    F: Fn(&T, &mut ScriptChooser<Q>) -> Result<U> + Sync,
    K: Fn(&U) -> String + Sync,
{
    let rows: Vec<Result<(String, BTreeMap<String, Q>)>> = states
        .par_iter()
        .map(|(k, t)| {
            let mut row: BTreeMap<String, Q> = BTreeMap::new();
            for (p, u) in enumerate::<Q, Result<U>>(|ch| step(t, ch)) {
                let y = key(&u?);
                *row.entry(y).or_insert_with(Q::zero) += p;
            }
            Ok((k.clone(), row))
        })
        .collect();
    let mut out = ExactKernel::default();
    for r in rows {
        let (k, row) = r?;
        out.rows.insert(k, row);
    }
    Ok(out)
}

/// Chain whose kernel is assembled by [`exact_kernel`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ChainKind {
    /// Aldous' chain on binary trees.
    Uniform,
    /// The binary `α`-chain (uses `params.alpha`).
    AlphaChain,
    /// Non-planar `(α, γ)`-chain.
    NonPlanar,
    /// Semi-planar `(α, γ)`-chain.
    SemiPlanar,
    /// Autonomous decorated chain on `[k]`-trees.
    Decorated(usize),
}

/// Exact transition matrix of a chain on its full state space.
pub fn exact_kernel(kind: ChainKind, n: usize, params: &Params<Q>, caps: &Caps) -> Result<ExactKernel> {
    match kind {
        ChainKind::Uniform | ChainKind::AlphaChain => {
            cap_check("binary kernel", n, caps.nonplanar)?;
            let states: Vec<(String, LabelledTree)> =
                all_trees(n, true, false).into_iter().map(LabelledTree::from_tree).map(|t| (t.encode(), t)).collect();
            if kind == ChainKind::Uniform {
                kernel_from(&states, uniform_chain_step, |t| t.encode())
            } else {
                kernel_from(&states, |t, ch| alpha_chain_step(t, &params.alpha, ch), |t| t.encode())
            }
        }
        ChainKind::NonPlanar => {
            cap_check("non-planar kernel", n, caps.nonplanar)?;
            let states: Vec<(String, LabelledTree)> =
                all_trees(n, false, false).into_iter().map(LabelledTree::from_tree).map(|t| (t.encode(), t)).collect();
            kernel_from(&states, |t, ch| nonplanar_chain_step(t, params, ch, None), |t| t.encode())
        }
        ChainKind::SemiPlanar => {
            cap_check("semi-planar kernel", n, caps.semiplanar)?;
            let states: Vec<(String, SemiPlanarTree)> = all_trees(n, false, true)
                .into_iter()
                .map(|t| SemiPlanarTree::from_tree(t).expect("enumerated trees are semi-planar"))
                .map(|t| (t.encode(), t))
                .collect();
            kernel_from(&states, |t, ch| semiplanar_chain_step(t, params, ch, None), |t| t.encode())
        }
        ChainKind::Decorated(k) => {
            cap_check("decorated kernel", n, caps.decorated)?;
            let states: Vec<(String, DecoratedTree)> = all_decorated(n, k)?.into_iter().map(|d| (d.key(), d)).collect();
            kernel_from(&states, |d, ch| decorated_chain_step(d, params, ch, None), |d| d.key())
        }
    }
}

// ---------------------------------------------------------------------------
// checks

/// `max_s |(μᵀK − μᵀ)_s|`.
pub fn check_stationarity(kernel: &ExactKernel, law: &Law) -> Result<Q> {
    Ok(law_residual(&kernel.left_apply(law)?, law))
}

/// Outcome of a Kemeny–Snell lumpability check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LumpabilityResult {
    /// Whether all rows of each block agree on every block.
    pub pass: bool,
    /// On failure: two states of one block and a target block on which
    /// their aggregated rows differ.
    pub witness: Option<(String, String, String)>,
}

/// Kemeny–Snell criterion: `K(x₁, λ⁻¹(y)) = K(x₂, λ⁻¹(y))` whenever
/// `λ(x₁) = λ(x₂)`.
pub fn check_lumpability(kernel: &ExactKernel, block: impl Fn(&str) -> String) -> LumpabilityResult {
    let mut reference: BTreeMap<String, (String, BTreeMap<String, Q>)> = BTreeMap::new();
    for (x, row) in &kernel.rows {
        let mut agg: BTreeMap<String, Q> = BTreeMap::new();
        for (y, p) in row {
            *agg.entry(block(y)).or_insert_with(Q::zero) += p.clone();
        }
        agg.retain(|_, p| !p.is_zero());
        let b = block(x);
        match reference.get(&b) {
            None => {
                reference.insert(b, (x.clone(), agg));
            }
            Some((x0, agg0)) => {
                let targets: BTreeSet<&String> = agg.keys().chain(agg0.keys()).collect();
                for t in targets {
                    if agg.get(t) != agg0.get(t) {
                        return LumpabilityResult { pass: false, witness: Some((x0.clone(), x.clone(), t.clone())) };
                    }
                }
            }
        }
    }
    LumpabilityResult { pass: true, witness: None }
}

/// Residuals of an intertwining check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntertwiningResult {
    /// `max |ΛK − CΛ|`: the conditional-law condition with `C` the
    /// candidate kernel.
    pub conditional_residual: String,
    /// `max |C − ΛKλ|`.
    pub matrix_residual: String,
    /// Whether both residuals are zero.
    pub pass: bool,
}

/// Intertwining criterion for a lift `Λ`, a kernel `K`, a projection `λ`
/// and a candidate projected kernel `C`: checks `C = ΛKλ` and `ΛK = CΛ`.
pub fn check_intertwining(lift: &ExactKernel, kernel: &ExactKernel, projection: &ExactKernel, candidate: &ExactKernel) -> IntertwiningResult {
    let lk = lift.compose(kernel);
    let lkl = lk.compose(projection);
    let cl = candidate.compose(lift);
    let cond = lk.max_abs_diff(&cl);
    let mat = candidate.max_abs_diff(&lkl);
    IntertwiningResult { pass: cond.is_zero() && mat.is_zero(), conditional_residual: format_q(&cond), matrix_residual: format_q(&mat) }
}

/// Formats a law as `key → value` strings.
pub fn format_law(law: &Law) -> BTreeMap<String, String> {
    law.iter().map(|(k, v)| (k.clone(), format_q(v))).collect()
}

// ---------------------------------------------------------------------------
// context with cached laws and kernels

/// Cached exact objects for one `(n, α, γ)`.
pub struct ExactContext {
    /// Parameters.
    pub params: Params<Q>,
    /// Number of leaves.
    pub n: usize,
    /// Caps.
    pub caps: Caps,
    sp_law: Option<Dist<SemiPlanarTree>>,
    sp_kernel: Option<ExactKernel>,
}

impl ExactContext {
    /// New context.
    pub fn new(n: usize, params: Params<Q>, caps: Caps) -> Self {
        ExactContext { params, n, caps, sp_law: None, sp_kernel: None }
    }

    /// Semi-planar growth law `P̂_n`.
    pub fn semiplanar_law(&mut self) -> Result<&Dist<SemiPlanarTree>> {
        if self.sp_law.is_none() {
            let m = GrowthModel::new(Variant::SemiPlanar, self.params.clone())?;
            self.sp_law = Some(semiplanar_growth_law(&m, self.n, &self.caps)?);
        }
        Ok(self.sp_law.as_ref().expect("cached"))
    }

    /// Semi-planar kernel `K̂_n`.
    pub fn semiplanar_kernel(&mut self) -> Result<&ExactKernel> {
        if self.sp_kernel.is_none() {
            self.sp_kernel = Some(exact_kernel(ChainKind::SemiPlanar, self.n, &self.params, &self.caps)?);
        }
        Ok(self.sp_kernel.as_ref().expect("cached"))
    }

    /// Non-planar growth law as the projection of `P̂_n`.
    pub fn nonplanar_law(&mut self) -> Result<Law> {
        let d = self.semiplanar_law()?;
        Ok(law_of(&map_dist(d, |t| Ok(t.project()), |t| t.encode())?))
    }

    /// Decorated stationary law (projection of `P̂_n` to `[k]`).
    pub fn decorated_law(&mut self, k: usize) -> Result<Law> {
        let d = self.semiplanar_law()?;
        Ok(law_of(&map_dist(d, |t| project_decorated(&t.project(), k), |d| d.key())?))
    }

    fn projection<F: Fn(&SemiPlanarTree) -> Result<String>>(&mut self, f: F) -> Result<(Law, ExactKernel, ExactKernel)> {
        let d = self.semiplanar_law()?.clone();
        let fine = law_of(&d);
        let proj: HashMap<String, String> = d.iter().map(|(k, (t, _))| Ok((k.clone(), f(t)?))).collect::<Result<_>>()?;
        let lookup = |s: &str| proj.get(s).cloned().ok_or_else(|| Error::DimensionMismatch(format!("unknown state {s}")));
        let lift = ExactKernel::lift(&fine, lookup)?;
        let kernel = self.semiplanar_kernel()?;
        let pi = ExactKernel::from_map(kernel.rows.keys(), |s| match proj.get(s) {
            Some(v) => Ok(v.clone()),
            None => {
                let t = SemiPlanarTree::parse(s)?;
                f(&t)
            }
        })?;
        Ok((fine, lift, pi))
    }

    /// `(Π̂, π̂)` for the non-planar projection.
    pub fn nonplanar_lift(&mut self) -> Result<(ExactKernel, ExactKernel)> {
        let (_, lift, pi) = self.projection(|t| Ok(t.project().encode()))?;
        Ok((lift, pi))
    }

    /// `(Π̂•, π̂•)` for the decorated projection onto `[k]`.
    pub fn decorated_lift(&mut self, k: usize) -> Result<(ExactKernel, ExactKernel)> {
        let (_, lift, pi) = self.projection(|t| Ok(project_decorated(&t.project(), k)?.key()))?;
        Ok((lift, pi))
    }

    /// `(Π̂*, π̂*, block)` for the collapsed projection onto `[k]`, with the
    /// collapsed-to-decorated map.
    pub fn collapsed_lift(&mut self, k: usize) -> Result<(ExactKernel, ExactKernel, HashMap<String, String>)> {
        let (_, lift, pi) = self.projection(|t| Ok(project_collapsed(t.tree(), k)?.key()))?;
        let d = self.semiplanar_law()?.clone();
        let mut block = HashMap::new();
        for (t, _) in d.values() {
            let c = project_collapsed(t.tree(), k)?;
            block.insert(c.key(), c.to_decorated().key());
        }
        let kernel = self.semiplanar_kernel()?;
        for s in kernel.rows.keys() {
            let t = SemiPlanarTree::parse(s)?;
            let c = project_collapsed(t.tree(), k)?;
            block.insert(c.key(), c.to_decorated().key());
        }
        Ok((lift, pi, block))
    }

    /// `Π̂ · K̂ · π̂` for the non-planar projection.
    pub fn composed_nonplanar_kernel(&mut self) -> Result<ExactKernel> {
        let (lift, pi) = self.nonplanar_lift()?;
        let k = self.semiplanar_kernel()?;
        Ok(lift.compose(k).compose(&pi))
    }

    /// `Π̂• · K̂ · π̂•` for the decorated projection.
    pub fn composed_decorated_kernel(&mut self, k: usize) -> Result<ExactKernel> {
        let (lift, pi) = self.decorated_lift(k)?;
        let kh = self.semiplanar_kernel()?;
        Ok(lift.compose(kh).compose(&pi))
    }
}

/// Result of a named exact check.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    /// Check name.
    pub name: String,
    /// Whether the check passed.
    pub pass: bool,
    /// Largest residual (exact, formatted), if the check has one.
    pub residual: Option<String>,
    /// Free-form details.
    pub details: serde_json::Value,
}

impl CheckResult {
    fn residual(name: impl Into<String>, r: Q, details: serde_json::Value) -> Self {
        CheckResult { name: name.into(), pass: r.is_zero(), residual: Some(format_q(&r)), details }
    }
}

/// Stationarity of the semi-planar, non-planar and decorated kernels
/// (`ks`) with respect to the growth law.
pub fn stationarity_checks(ctx: &mut ExactContext, ks: &[usize]) -> Result<Vec<CheckResult>> {
    let n = ctx.n;
    let params = ctx.params.clone();
    let mut out = Vec::new();
    let sp = law_of(ctx.semiplanar_law()?);
    let r = check_stationarity(ctx.semiplanar_kernel()?, &sp)?;
    out.push(CheckResult::residual(format!("stationarity/semiplanar/n={n}"), r, serde_json::json!({"states": sp.len()})));
    let np = ctx.nonplanar_law()?;
    let knp = exact_kernel(ChainKind::NonPlanar, n, &params, &ctx.caps)?;
    let r = check_stationarity(&knp, &np)?;
    out.push(CheckResult::residual(format!("stationarity/nonplanar/n={n}"), r, serde_json::json!({"states": np.len()})));
    for &k in ks {
        if k >= n {
            continue;
        }
        let dl = ctx.decorated_law(k)?;
        let kd = exact_kernel(ChainKind::Decorated(k), n, &params, &ctx.caps)?;
        let r = check_stationarity(&kd, &dl)?;
        out.push(CheckResult::residual(format!("stationarity/decorated/n={n}/k={k}"), r, serde_json::json!({"states": dl.len()})));
    }
    Ok(out)
}

/// The rows of `k` indexed by the rows of `like` (states outside the
/// support of the growth law have no lift and are not compared).
pub fn restrict_rows(k: &ExactKernel, like: &ExactKernel) -> ExactKernel {
    ExactKernel { rows: like.rows.keys().filter_map(|x| k.rows.get(x).map(|r| (x.clone(), r.clone()))).collect() }
}

/// Kernel factorization: non-planar kernel versus `Π̂K̂π̂`, decorated
/// kernels versus `Π̂•K̂π̂•`.
pub fn kernel_equality_checks(ctx: &mut ExactContext, ks: &[usize]) -> Result<Vec<CheckResult>> {
    let n = ctx.n;
    let params = ctx.params.clone();
    let mut out = Vec::new();
    let knp = exact_kernel(ChainKind::NonPlanar, n, &params, &ctx.caps)?;
    let comp = ctx.composed_nonplanar_kernel()?;
    out.push(CheckResult::residual(
        format!("kernel-equality/nonplanar/n={n}"),
        restrict_rows(&knp, &comp).max_abs_diff(&comp),
        serde_json::json!({"rows": comp.n_rows()}),
    ));
    for &k in ks {
        if k >= n {
            continue;
        }
        let kd = exact_kernel(ChainKind::Decorated(k), n, &params, &ctx.caps)?;
        let comp = ctx.composed_decorated_kernel(k)?;
        out.push(CheckResult::residual(
            format!("kernel-equality/decorated/n={n}/k={k}"),
            restrict_rows(&kd, &comp).max_abs_diff(&comp),
            serde_json::json!({"rows": comp.n_rows()}),
        ));
    }
    Ok(out)
}

/// Kemeny–Snell check of the collapsed-to-decorated partition under the
/// collapsed kernel `Π̂*K̂π̂*`, plus the two intertwining checks (collapsed
/// lift, decorated composite against the autonomous decorated kernel).
pub fn lumpability_intertwining_checks(ctx: &mut ExactContext, k: usize) -> Result<Vec<CheckResult>> {
    let n = ctx.n;
    let params = ctx.params.clone();
    let mut out = Vec::new();
    let (lift_c, pi_c, block) = ctx.collapsed_lift(k)?;
    let kh = ctx.semiplanar_kernel()?.clone();
    let kc = lift_c.compose(&kh).compose(&pi_c);
    let lump = check_lumpability(&kc, |s| block.get(s).cloned().unwrap_or_else(|| s.to_string()));
    out.push(CheckResult {
        name: format!("lumpability/collapsed-to-decorated/n={n}/k={k}"),
        pass: lump.pass,
        residual: None,
        details: serde_json::to_value(&lump).expect("serialize"),
    });
    let it = check_intertwining(&lift_c, &kh, &pi_c, &kc);
    out.push(CheckResult {
        name: format!("intertwining/collapsed/n={n}/k={k}"),
        pass: it.pass,
        residual: Some(it.conditional_residual.clone()),
        details: serde_json::to_value(&it).expect("serialize"),
    });
    let (lift_d, pi_d) = ctx.decorated_lift(k)?;
    let kd = restrict_rows(&exact_kernel(ChainKind::Decorated(k), n, &params, &ctx.caps)?, &lift_d);
    let it = check_intertwining(&lift_d, &kh, &pi_d, &kd);
    out.push(CheckResult {
        name: format!("intertwining/decorated/n={n}/k={k}"),
        pass: it.pass,
        residual: Some(it.conditional_residual.clone()),
        details: serde_json::to_value(&it).expect("serialize"),
    });
    Ok(out)
}

/// Two-step Markov property of the decorated projection: starting from
/// `X₀ ~ Π̂•(d, ·)`, the joint law of the projected states `(Y₁, Y₂)` of the
/// semi-planar chain equals `K•(d, y₁)K•(y₁, y₂)` for every `d`, with `K•`
/// the decorated kernel. Returns the largest residual.
pub fn check_projected_markov(ctx: &mut ExactContext, k: usize) -> Result<Q> {
    let n = ctx.n;
    let params = ctx.params.clone();
    let (lift, pi) = ctx.decorated_lift(k)?;
    let kh = ctx.semiplanar_kernel()?.clone();
    let kd = exact_kernel(ChainKind::Decorated(k), n, &params, &ctx.caps)?;
    let proj = |x: &str| -> String { pi.rows.get(x).and_then(|r| r.keys().next().cloned()).unwrap_or_default() };
    let mut res = Q::zero();
    for (d, row) in &lift.rows {
        // v1[y1][x1] = P(X₁ = x₁, Y₁ = y₁)
        let mut v1: BTreeMap<String, Law> = BTreeMap::new();
        for (x0, p0) in row {
            for (x1, q) in kh.rows.get(x0).ok_or_else(|| Error::DimensionMismatch(x0.clone()))? {
                *v1.entry(proj(x1)).or_default().entry(x1.clone()).or_insert_with(Q::zero) += p0.clone() * q.clone();
            }
        }
        let mut joint = Law::new();
        for (y1, xs) in &v1 {
            for (x1, p1) in xs {
                for (x2, q) in kh.rows.get(x1).ok_or_else(|| Error::DimensionMismatch(x1.clone()))? {
                    *joint.entry(format!("{y1}|{}", proj(x2))).or_insert_with(Q::zero) += p1.clone() * q.clone();
                }
            }
        }
        let mut pred = Law::new();
        for (y1, p1) in kd.rows.get(d).ok_or_else(|| Error::DimensionMismatch(d.clone()))? {
            for (y2, p2) in kd.rows.get(y1).ok_or_else(|| Error::DimensionMismatch(y1.clone()))? {
                pred.insert(format!("{y1}|{y2}"), p1.clone() * p2.clone());
            }
        }
        res = res.max(law_residual(&joint, &pred));
    }
    Ok(res)
}

/// One row of the independence table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IndependenceRow {
    /// Selected leaf.
    pub i: usize,
    /// Deleted leaf.
    pub i_tilde: usize,
    /// Exact `P(E_{i,ĩ})`.
    pub prob: String,
    /// `1/(n − 1 − α)` for `i < ĩ`, `(i − 1 − α)/(n − 1 − α)` for
    /// `i = ĩ ≥ 2`, `0` for `(1, 1)`.
    pub reference: String,
    /// Whether the two agree.
    pub matches: bool,
}

/// Exact report on the down-step independence property.
#[derive(Clone, Debug, Serialize)]
pub struct IndependenceReport {
    /// Number of leaves.
    pub n: usize,
    /// `P(E_{i,ĩ})` for all `1 ≤ i ≤ ĩ ≤ n`.
    pub table: Vec<IndependenceRow>,
    /// `max |P(E ∩ {T̂_{ĩ−1} = s}) − P(E)P(T̂_{ĩ−1} = s)|`.
    pub factorization_residual: String,
    /// `max` over `(i, ĩ)` of the residual between the conditional law of
    /// the swapped and reduced tree given `E_{i,ĩ}` and `P̂_{n−1}`.
    pub pushforward_residual: String,
    /// `max |P(E_{i,ĩ}) − 1/(n−1−α)|` over `i < ĩ`.
    pub off_diagonal_residual: String,
    /// The same restricted to `i ≥ 2`.
    pub off_diagonal_residual_i_ge_2: String,
}

/// Exact check of the down-step independence property under `P̂_n`.
pub fn check_downstep_independence(n: usize, params: &Params<Q>, caps: &Caps) -> Result<IndependenceReport> {
    if n < 2 {
        return Err(Error::OutOfRange("n >= 2 required".into()));
    }
    let model = GrowthModel::new(Variant::SemiPlanar, params.clone())?;
    let law = semiplanar_growth_law(&model, n, caps)?;
    let prev = law_of(&semiplanar_growth_law(&model, n - 1, caps)?);
    let restricted: Vec<Law> = (0..n).map(|m| if m == 0 { Law::new() } else { law_of(&semiplanar_growth_law(&model, m, caps).expect("within cap")) }).collect();
    let alpha = params.alpha.clone();
    let denom = Q::from_usize(n - 1) - alpha.clone();
    let mut table = Vec::new();
    let mut fact = Q::zero();
    let mut push = Q::zero();
    let mut off = Q::zero();
    let mut off2 = Q::zero();
    for i in 1..=n {
        let mut by_tilde: BTreeMap<usize, (Q, Law, Law)> = BTreeMap::new();
        for (t, p) in law.values() {
            let ls = t.local_search(i)?;
            let it = ls.i_tilde;
            let entry = by_tilde.entry(it).or_insert_with(|| (Q::zero(), Law::new(), Law::new()));
            entry.0 += p.clone();
            if it >= 2 {
                let mut r = t.clone();
                for l in (it..=n).rev() {
                    r = r.delete_leaf(l, false)?;
                }
                *entry.1.entry(r.encode()).or_insert_with(Q::zero) += p.clone();
            }
            let d = t.swap_labels(i, it)?.delete_leaf(it, true)?;
            *entry.2.entry(d.encode()).or_insert_with(Q::zero) += p.clone();
        }
        for it in i..=n {
            let (pe, joint, down) = by_tilde.remove(&it).unwrap_or_else(|| (Q::zero(), Law::new(), Law::new()));
            let reference = if it > i {
                Q::one() / denom.clone()
            } else if i >= 2 {
                (Q::from_usize(i - 1) - alpha.clone()) / denom.clone()
            } else {
                Q::zero()
            };
            if it > i {
                let r = abs_q(&(pe.clone() - reference.clone()));
                off = off.max(r.clone());
                if i >= 2 {
                    off2 = off2.max(r);
                }
            }
            table.push(IndependenceRow { i, i_tilde: it, prob: format_q(&pe), reference: format_q(&reference), matches: pe == reference });
            if pe.is_zero() {
                continue;
            }
            if it >= 2 {
                let base = &restricted[it - 1];
                let scaled: Law = base.iter().map(|(k, q)| (k.clone(), q.clone() * pe.clone())).collect();
                fact = fact.max(law_residual(&joint, &scaled));
            }
            let cond: Law = down.into_iter().map(|(k, q)| (k, q / pe.clone())).collect();
            push = push.max(law_residual(&cond, &prev));
        }
    }
    Ok(IndependenceReport {
        n,
        table,
        factorization_residual: format_q(&fact),
        pushforward_residual: format_q(&push),
        off_diagonal_residual: format_q(&off),
        off_diagonal_residual_i_ge_2: format_q(&off2),
    })
}

/// One row of the `Ĩ`-law report.
#[derive(Clone, Debug, Serialize)]
pub struct ITildeRow {
    /// Number of children of the parent.
    pub c: usize,
    /// Rank of the selected leaf among the children.
    pub j: usize,
    /// Neighbour law used by the implementation.
    pub implemented: Vec<(usize, String)>,
    /// The alternative law (denominator `(c−1)α−γ`).
    pub alternative: Vec<(usize, String)>,
    /// Row sum of the alternative law.
    pub alternative_row_sum: String,
    /// Conditional law of `Ĩ` computed from the exact lift and the
    /// semi-planar local search (absent when no tree of the enumerated size
    /// has this configuration).
    pub lifted: Option<Vec<(usize, String)>>,
    /// `max |implemented − lifted|`.
    pub implemented_residual: Option<String>,
    /// `max |alternative − lifted|`.
    pub alternative_residual: Option<String>,
}

/// Both candidate `Ĩ`-laws side by side with the law implied by the lift
/// `Π̂_n` and the semi-planar local search, for all `c ≤ n`.
pub fn i_tilde_report(ctx: &mut ExactContext) -> Result<Vec<ITildeRow>> {
    let n = ctx.n;
    let params = ctx.params.clone();
    let d = ctx.semiplanar_law()?.clone();
    // group semi-planar trees by projection
    let mut groups: BTreeMap<String, Vec<(SemiPlanarTree, Q)>> = BTreeMap::new();
    for (t, p) in d.values() {
        groups.entry(t.project().encode()).or_default().push((t.clone(), p.clone()));
    }
    // (c, j) -> list of conditional laws over j'
    let mut observed: BTreeMap<(usize, usize), Vec<BTreeMap<usize, Q>>> = BTreeMap::new();
    for members in groups.values() {
        let t = members[0].0.project();
        let tot: Q = members.iter().fold(Q::zero(), |a, (_, p)| a + p.clone());
        let tree = t.tree();
        for i in 1..=n {
            let leaf = tree.leaf(i).expect("label");
            let v = tree.parent(leaf);
            if v == crate::tree::NIL || tree.children(v).len() < 3 {
                continue;
            }
            let mut mins: Vec<usize> = tree.children(v).iter().map(|&c| tree.min_label(c)).collect();
            mins.sort_unstable();
            let j = mins.iter().position(|&m| m == i).expect("child") + 1;
            let mut law: BTreeMap<usize, Q> = BTreeMap::new();
            for (s, p) in members {
                let it = s.local_search(i)?.i_tilde;
                let jp = mins.iter().position(|&m| m == it).map(|x| x + 1).unwrap_or(0);
                *law.entry(jp).or_insert_with(Q::zero) += p.clone() / tot.clone();
            }
            observed.entry((mins.len(), j)).or_default().push(law);
        }
    }
    let mut rows = Vec::new();
    for c in 3..=n.max(3) {
        for j in 1..=c {
            let imp = i_tilde_law(c, j, &params)?;
            let alt = i_tilde_law_alternative(c, j, &params)?;
            let alt_sum = alt.iter().fold(Q::zero(), |a, (_, p)| a + p.clone());
            let to_map = |v: &[(usize, Q)]| v.iter().cloned().collect::<BTreeMap<usize, Q>>();
            let diff = |a: &BTreeMap<usize, Q>, b: &BTreeMap<usize, Q>| {
                let keys: BTreeSet<&usize> = a.keys().chain(b.keys()).collect();
                keys.into_iter()
                    .map(|k| abs_q(&(a.get(k).cloned().unwrap_or_else(Q::zero) - b.get(k).cloned().unwrap_or_else(Q::zero))))
                    .max()
                    .unwrap_or_else(Q::zero)
            };
            let (lifted, ri, ra) = match observed.get(&(c, j)) {
                Some(laws) => {
                    let ri = laws.iter().map(|l| diff(l, &to_map(&imp))).max().unwrap_or_else(Q::zero);
                    let ra = laws.iter().map(|l| diff(l, &to_map(&alt))).max().unwrap_or_else(Q::zero);
                    let first: Vec<(usize, String)> = laws[0].iter().map(|(k, v)| (*k, format_q(v))).collect();
                    (Some(first), Some(format_q(&ri)), Some(format_q(&ra)))
                }
                None => (None, None, None),
            };
            rows.push(ITildeRow {
                c,
                j,
                implemented: imp.iter().map(|(k, v)| (*k, format_q(v))).collect(),
                alternative: alt.iter().map(|(k, v)| (*k, format_q(v))).collect(),
                alternative_row_sum: format_q(&alt_sum),
                lifted,
                implemented_residual: ri,
                alternative_residual: ra,
            });
        }
    }
    Ok(rows)
}

/// Conditional law of the orders given the shape versus the product of
/// `(α, α − γ)` table-order pmfs, over all semi-planar trees with `n`
/// leaves whose shape has a branch point with exactly `c` children.
/// Returns the number of shapes checked and the largest residual.
pub fn check_internal_order_law(n: usize, c: usize, params: &Params<Q>, caps: &Caps) -> Result<(usize, Q)> {
    let model = GrowthModel::new(Variant::SemiPlanar, params.clone())?;
    let d = semiplanar_growth_law(&model, n, caps)?;
    let mut groups: BTreeMap<String, Vec<(SemiPlanarTree, Q)>> = BTreeMap::new();
    for (t, p) in d.values() {
        groups.entry(t.project().encode()).or_default().push((t.clone(), p.clone()));
    }
    let theta = params.right_gap_weight();
    let mut shapes = 0;
    let mut res = Q::zero();
    for members in groups.values() {
        let tree = members[0].0.tree();
        if !tree.branch_points().iter().any(|&v| tree.children(v).len() == c) {
            continue;
        }
        shapes += 1;
        let tot: Q = members.iter().fold(Q::zero(), |a, (_, p)| a + p.clone());
        let mut seen = Q::zero();
        for (s, p) in members {
            let t = s.tree();
            let mins = t.min_labels();
            let mut pred = Q::one();
            for v in t.branch_points() {
                if t.children(v).len() >= 3 {
                    pred *= ocrp_permutation_pmf(&sigma_of(t, v, &mins), &params.alpha, &theta)?;
                }
            }
            seen += pred.clone();
            res = res.max(abs_q(&(p.clone() / tot.clone() - pred)));
        }
        // every order with positive predicted mass must be present
        res = res.max(abs_q(&(Q::one() - seen)));
    }
    Ok((shapes, res))
}

/// Down-step pushforward: the down-phase applied to the `n`-leaf growth
/// law of a variant gives the `(n − 1)`-leaf law. Returns the residual.
pub fn check_down_pushforward(variant: Variant, n: usize, params: &Params<Q>, caps: &Caps) -> Result<Q> {
    let model = GrowthModel::new(variant, params.clone())?;
    let reserved = match variant {
        Variant::Internal => 1,
        Variant::BranchPoint(c) => c,
        _ => 0,
    };
    let law = semiplanar_growth_law(&model, n, caps)?;
    let down = push_forward(&law, |t, ch| semiplanar_down(t, reserved, ch, None), |t| t.encode())?;
    let prev = semiplanar_growth_law(&model, n - 1, caps)?;
    Ok(law_residual(&law_of(&down), &law_of(&prev)))
}

/// The semi-planar law pushed to non-planar trees equals the non-planar
/// growth law. Returns the residual.
pub fn check_projection_commutes(n: usize, params: &Params<Q>, caps: &Caps) -> Result<Q> {
    let sp = semiplanar_growth_law(&GrowthModel::new(Variant::SemiPlanar, params.clone())?, n, caps)?;
    let np = nonplanar_growth_law(&GrowthModel::new(Variant::NonPlanar, params.clone())?, n, caps)?;
    let pushed = map_dist(&sp, |t| Ok(t.project()), |t| t.encode())?;
    Ok(law_residual(&law_of(&pushed), &law_of(&np)))
}

/// Decorated growth from the unit decoration of `T_k` equals the decorated
/// projection of `T_n`. Returns the residual.
pub fn check_decorated_growth(n: usize, k: usize, params: &Params<Q>, caps: &Caps) -> Result<Q> {
    let model = GrowthModel::new(Variant::NonPlanar, params.clone())?;
    let big = nonplanar_growth_law(&model, n, caps)?;
    let projected = map_dist(&big, |t| project_decorated(t, k), |d| d.key())?;
    let grown = exact_law(&GrowthModel::new(Variant::Decorated, params.clone())?, n, Some(k), caps)?;
    Ok(law_residual(&law_of(&projected), &grown))
}

/// Decorated growth masses are Dirichlet-multinomial: from a unit
/// decoration of `shape`, the extra masses after `m` steps follow
/// `DirMult^m` with the initial weights. Returns the residual.
pub fn check_decorated_dirmult(shape: &LabelledTree, m: usize, params: &Params<Q>) -> Result<Q> {
    let unit = DecoratedTree::unit(shape);
    let parts = canonical_parts(unit.tree());
    let weights: Vec<Q> = parts.iter().map(|&p| initial_weight(unit.tree(), p, params)).collect();
    let urn = UrnWeights::new(weights)?;
    let law = decorated_growth_law(&point(unit.key(), unit.clone()), params, unit.n() + m)?;
    let mut res = Q::zero();
    let mut mass = Q::zero();
    for (d, p) in law.values() {
        let counts: Vec<usize> = parts.iter().map(|&x| d.mass(x) - unit.mass(x)).collect();
        let pred = dirmult_pmf(m, &urn, &counts)?;
        mass += pred.clone();
        res = res.max(abs_q(&(p.clone() - pred)));
    }
    Ok(res.max(abs_q(&(Q::one() - mass))))
}

/// Weighted-start growth from the branch-point weights on the `c`-star
/// (with random start orders) reproduces `c`-order branch-point growth.
pub fn check_weighted_start(c: usize, n: usize, params: &Params<Q>, caps: &Caps) -> Result<Q> {
    let model = GrowthModel::new(Variant::BranchPoint(c), params.clone())?;
    let reference = semiplanar_growth_law(&model, n, caps)?;
    let starts = push_forward(&point(String::new(), star(c)), |t, ch| sample_orders(t, params, ch), |t| t.encode())?;
    let ws = map_dist(&starts, |t| Ok(WeightedStart::with_variant(t.clone(), params, Variant::BranchPoint(c))), |w| w.tree().encode())?;
    let grown = push_forward(
        &ws,
        |w, ch| {
            let mut w = w.clone();
            while w.tree().n_leaves() < n {
                w.step(params, ch)?;
            }
            Ok(w.tree().clone())
        },
        |t| t.encode(),
    )?;
    Ok(law_residual(&law_of(&grown), &law_of(&reference)))
}

/// Leaf-`(k + 1)` location: under `P̂_n`, conditional on the decorated
/// projection onto `[k]`, label `k + 1` lies in part `x` with probability
/// `ỹ_x/(n − k)`. Returns the residual.
pub fn check_leaf_location(n: usize, k: usize, params: &Params<Q>, caps: &Caps) -> Result<Q> {
    if k >= n {
        return Err(Error::OutOfRange("k < n required".into()));
    }
    let model = GrowthModel::new(Variant::SemiPlanar, params.clone())?;
    let d = semiplanar_growth_law(&model, n, caps)?;
    let mut by: BTreeMap<String, (DecoratedTree, Q, BTreeMap<String, Q>)> = BTreeMap::new();
    for (t, p) in d.values() {
        let c = project_collapsed(t.tree(), k)?;
        let dec = c.to_decorated();
        let mins = c.tree().min_labels();
        let part = canonical_parts(c.tree()).into_iter().find(|&x| c.labels(x).contains(&(k + 1))).expect("label k+1 placed");
        let addr = part_address(c.tree(), part, &mins).to_string();
        let e = by.entry(dec.key()).or_insert_with(|| (dec.clone(), Q::zero(), BTreeMap::new()));
        e.1 += p.clone();
        *e.2.entry(addr).or_insert_with(Q::zero) += p.clone();
    }
    let mut res = Q::zero();
    let nk = Q::from_usize(n - k);
    for (dec, tot, parts) in by.values() {
        let mins = dec.tree().min_labels();
        for x in canonical_parts(dec.tree()) {
            let addr = part_address(dec.tree(), x, &mins).to_string();
            let obs = parts.get(&addr).cloned().unwrap_or_else(Q::zero) / tot.clone();
            let pred = Q::from_usize(dec.reduced_mass(x)) / nk.clone();
            res = res.max(abs_q(&(obs - pred)));
        }
    }
    Ok(res)
}

/// Spatial Markov property and the lift: for every decorated `[k]`-tree of
/// mass `n` charged by the growth law, the exact law of
/// [`lift_decorated`] equals the conditional law `Π̂•(d, ·)`.
pub fn check_lift(ctx: &mut ExactContext, k: usize) -> Result<Q> {
    let params = ctx.params.clone();
    let (lift, _) = ctx.decorated_lift(k)?;
    let mut res = Q::zero();
    for (key, row) in &lift.rows {
        let d = DecoratedTree::from_key(key)?;
        let mut law = Law::new();
        for (p, t) in enumerate::<Q, Result<SemiPlanarTree>>(|ch| lift_decorated(&d, &params, ch)) {
            *law.entry(t?.encode()).or_insert_with(Q::zero) += p;
        }
        res = res.max(law_residual(&law, row));
    }
    Ok(res)
}

/// Resampling selection probabilities: from every decorated `[k − 1]`-tree
/// of mass `n − 1`, the part receiving leaf `k` is chosen with probability
/// `ỹ_x/(n − k)`. Returns the residual.
pub fn check_resample_selection(n: usize, k: usize, params: &Params<Q>) -> Result<Q> {
    let mut res = Q::zero();
    for d in all_decorated(n - 1, k - 1)? {
        let mins = d.tree().min_labels();
        let mut law: BTreeMap<String, Q> = BTreeMap::new();
        for (p, out) in enumerate::<Q, Result<DecoratedTree>>(|ch| resample_leaf(&d, params, ch)) {
            let out = out?;
            // locate the part of d that received leaf k: the parent
            // (vertex insertion) or the edge split by the new branch point
            let t = out.tree();
            let leaf = t.leaf(k).expect("new leaf");
            let par = t.parent(leaf);
            let shape_has = |v: usize| d.tree().is_alive(v) && !d.tree().is_leaf(v) && d.tree().children(v).len() + 1 == t.children(v).len();
            let part = if shape_has(par) {
                Part::Vertex(par)
            } else {
                let other = *t.children(par).iter().find(|&&c| c != leaf).expect("sibling");
                Part::Edge(other)
            };
            *law.entry(part_address(d.tree(), part, &mins).to_string()).or_insert_with(Q::zero) += p;
        }
        let nk = Q::from_usize(n - k);
        for x in canonical_parts(d.tree()) {
            let addr = part_address(d.tree(), x, &mins).to_string();
            let pred = Q::from_usize(d.reduced_mass(x)) / nk.clone();
            res = res.max(abs_q(&(law.get(&addr).cloned().unwrap_or_else(Q::zero) - pred)));
        }
    }
    Ok(res)
}

/// Tower property in stationarity: projecting the decorated `[k']`-chain
/// onto `[k]` gives the decorated `[k]`-chain. Compares the joint laws of
/// two consecutive projected states. Returns the residual.
pub fn check_tower(ctx: &mut ExactContext, k: usize, k2: usize) -> Result<Q> {
    let n = ctx.n;
    let params = ctx.params.clone();
    let mu2 = ctx.decorated_law(k2)?;
    let mu = ctx.decorated_law(k)?;
    let kk2 = exact_kernel(ChainKind::Decorated(k2), n, &params, &ctx.caps)?;
    let kk = exact_kernel(ChainKind::Decorated(k), n, &params, &ctx.caps)?;
    let proj = |s: &str| -> Result<String> { Ok(DecoratedTree::from_key(s)?.project(k)?.key()) };
    let mut lhs: Law = Law::new();
    for (x, p) in &mu2 {
        let px = proj(x)?;
        for (y, q) in kk2.rows.get(x).ok_or_else(|| Error::DimensionMismatch(x.clone()))? {
            *lhs.entry(format!("{px}|{}", proj(y)?)).or_insert_with(Q::zero) += p.clone() * q.clone();
        }
    }
    let mut rhs: Law = Law::new();
    for (x, p) in &mu {
        for (y, q) in kk.rows.get(x).ok_or_else(|| Error::DimensionMismatch(x.clone()))? {
            *rhs.entry(format!("{x}|{y}")).or_insert_with(Q::zero) += p.clone() * q.clone();
        }
    }
    Ok(law_residual(&lhs, &rhs))
}

/// Branch-point growth decomposition: in `c`-order branch-point growth
/// with `m` inserted leaves, the gap totals are
/// `DirMult^m(α, …, α, α − γ)`; given the totals, the ordered partitions of
/// the gaps are independent ordered restaurants (`(α, α)` inner gaps,
/// `(α, α − γ)` rightmost), the labels are allocated to the gaps uniformly
/// given the totals, and the relabelled subtrees are independent
/// copies of semi-planar growth. Returns the residual.
pub fn check_branchpoint_decomposition(c: usize, m: usize, params: &Params<Q>, caps: &Caps) -> Result<Q> {
    let model = GrowthModel::new(Variant::BranchPoint(c), params.clone())?;
    let law = semiplanar_growth_law(&model, c + m, caps)?;
    let sp = GrowthModel::new(Variant::SemiPlanar, params.clone())?;
    let small: Vec<Law> = (0..=m).map(|j| if j == 0 { Law::new() } else { law_of(&semiplanar_growth_law(&sp, j, caps).expect("cap")) }).collect();
    let mut gap_w = vec![params.alpha.clone(); c - 1];
    gap_w[c - 2] = params.right_gap_weight();
    let urn = UrnWeights::new(gap_w)?;
    let mut res = Q::zero();
    let mut mass = Q::zero();
    for (t, p) in law.values() {
        let tree = t.tree();
        let root = tree.root();
        let kids = tree.children(root);
        let mins = tree.min_labels();
        // gaps after each reserved child from the second on
        let mut gaps: Vec<Vec<usize>> = vec![Vec::new(); c - 1];
        let mut seen_reserved = 0;
        for &ch in kids {
            if mins[ch] <= c {
                seen_reserved += 1;
            } else {
                gaps[seen_reserved - 2].push(ch);
            }
        }
        let totals: Vec<usize> = gaps.iter().map(|g| g.iter().map(|&s| tree.subtree_labels(s).len()).sum()).collect();
        // exchangeability: given the totals, every allocation of the labels
        // to the gaps is equally likely
        let mut pred = dirmult_pmf(m, &urn, &totals)?;
        let mut left = m;
        for &t in &totals {
            pred /= crate::numeric::binomial::<Q>(left, t);
            left -= t;
        }
        for (l, g) in gaps.iter().enumerate() {
            let mut labels: Vec<usize> = g.iter().flat_map(|&s| tree.subtree_labels(s)).collect();
            labels.sort_unstable();
            let rank = |x: usize| labels.binary_search(&x).expect("label") + 1;
            let blocks: Vec<Vec<usize>> = g
                .iter()
                .map(|&s| {
                    let mut b: Vec<usize> = tree.subtree_labels(s).into_iter().map(rank).collect();
                    b.sort_unstable();
                    b
                })
                .collect();
            let theta = if l + 2 == c { params.right_gap_weight() } else { params.alpha.clone() };
            pred *= ocrp_ordered_partition_pmf(&blocks, &params.alpha, &theta)?;
            for &s in g {
                let mut sl = tree.subtree_labels(s);
                sl.sort_unstable();
                let sub = Tree::from_subtree(tree, s, &|x| sl.binary_search(&x).expect("label") + 1);
                let sub = SemiPlanarTree::from_tree(sub)?;
                pred *= small[sl.len()].get(&sub.encode()).cloned().unwrap_or_else(Q::zero);
            }
        }
        mass += pred.clone();
        res = res.max(abs_q(&(p.clone() - pred)));
    }
    Ok(res.max(abs_q(&(Q::one() - mass))))
}

/// Whether a decorated part is an external edge (helper for reports).
pub fn is_external(d: &DecoratedTree, p: Part) -> bool {
    part_kind(d.tree(), p) == PartKind::LeafEdge
}

/// Exact law of the first `n` steps of decorated growth from the unit
/// decoration of a fixed shape (used by the Monte Carlo reference).
pub fn decorated_from_shape_law(shape: &LabelledTree, n: usize, params: &Params<Q>) -> Result<Law> {
    let unit = DecoratedTree::unit(shape);
    Ok(law_of(&decorated_growth_law(&point(unit.key(), unit.clone()), params, n)?))
}

/// Grows a semi-planar tree of `n` leaves under `params` exactly (path
/// law); convenience wrapper around [`grow_semiplanar`].
pub fn semiplanar_law_by_paths(n: usize, params: &Params<Q>) -> Result<Law> {
    let model = GrowthModel::new(Variant::SemiPlanar, params.clone())?;
    let mut law = Law::new();
    for (p, t) in enumerate::<Q, Result<SemiPlanarTree>>(|ch| grow_semiplanar(&model, n, ch)) {
        *law.entry(t?.encode()).or_insert_with(Q::zero) += p;
    }
    Ok(law)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> Q {
        Q::ratio(a, b)
    }

    #[test]
    fn space_sizes() {
        let caps = Caps::default();
        assert_eq!(enumerate_space(SpaceKind::Binary, 4, &caps).unwrap().len(), 15);
        assert_eq!(enumerate_space(SpaceKind::NonPlanar, 3, &caps).unwrap().len(), 4);
        assert_eq!(enumerate_space(SpaceKind::SemiPlanar, 3, &caps).unwrap().len(), 4);
        assert!(enumerate_space(SpaceKind::NonPlanar, 10, &caps).is_err());
        for n in 1..=6 {
            assert_eq!(enumerate_space(SpaceKind::NonPlanar, n, &caps).unwrap().len() as u128, count_labelled_trees(n));
        }
    }

    #[test]
    fn uniform_law_and_kernel() {
        let caps = Caps::default();
        let p = Params::new(q(1, 2), q(1, 2)).unwrap();
        let law = exact_law(&GrowthModel::new(Variant::NonPlanar, p.clone()).unwrap(), 4, None, &caps).unwrap();
        assert_eq!(law.len(), 15);
        assert!(law.values().all(|v| *v == q(1, 15)));
        let k = exact_kernel(ChainKind::Uniform, 4, &p, &caps).unwrap();
        assert!(k.row_sum_residual().is_zero());
        assert!(check_stationarity(&k, &law).unwrap().is_zero());
        let mut bad = law.clone();
        let first = bad.keys().next().unwrap().clone();
        *bad.get_mut(&first).unwrap() += q(1, 100);
        assert!(!check_stationarity(&k, &bad).unwrap().is_zero());
    }

    #[test]
    fn trivial_lumpability_and_intertwining() {
        let caps = Caps::default();
        let p = Params::new(q(1, 2), q(1, 2)).unwrap();
        let k = exact_kernel(ChainKind::Uniform, 4, &p, &caps).unwrap();
        assert!(check_lumpability(&k, |_| "all".into()).pass);
        let bad = check_lumpability(&k, |s| if s.starts_with("((1,2)") { "a".into() } else { "b".into() });
        assert!(!bad.pass && bad.witness.is_some());
        let id = ExactKernel::from_map(k.rows.keys(), |s| Ok(s.to_string())).unwrap();
        assert!(check_intertwining(&id, &k, &id, &k).pass);
    }
}
