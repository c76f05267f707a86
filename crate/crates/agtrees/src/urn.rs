//! Exchangeable-partition building blocks: Pólya urns, the
//! Dirichlet-multinomial law, Chinese restaurant seating (unordered and
//! ordered) and the decrement matrix of the regenerative ordered restaurant.
//!
//! Every Γ-ratio is written as a rising product, so all functions are exact
//! in the rational backend.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{binomial, rising, Scalar};
use crate::sampling::Chooser;

/// Initial weights of a generalized Pólya urn, one per colour.
#[derive(Clone, Debug, PartialEq)]
pub struct UrnWeights<S> {
    weights: Vec<S>,
}

impl<S: Scalar> UrnWeights<S> {
    /// Validates that all weights are nonnegative with a positive total.
    pub fn new(weights: Vec<S>) -> Result<Self> {
        if weights.iter().any(|w| *w < S::zero()) {
            return Err(Error::InvalidParams("negative urn weight".into()));
        }
        let total = sum(&weights);
        if !(total > S::zero()) {
            return Err(Error::ZeroWeight);
        }
        Ok(UrnWeights { weights })
    }

    /// The weights, in colour order.
    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    /// Number of colours.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    /// Whether there are no colours (never true for a validated urn).
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn sum<S: Scalar>(xs: &[S]) -> S {
    xs.iter().cloned().fold(S::zero(), |a, b| a + b)
}

/// All vectors of `k` nonnegative integers summing to `n`, in lexicographic
/// order of the first coordinates.
pub fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            cur.push(n);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for first in 0..=n {
            cur.push(first);
            rec(n - first, k - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k == 0 {
        if n == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Dirichlet-multinomial pmf without validation.
///
/// `n!/Π n_j! · Π (w_j)↑n_j / (Σ w)↑n`, where `x↑m` is the rising product.
/// A zero weight forces its count to be zero.
pub fn dirmult_pmf_unchecked<S: Scalar>(n: usize, weights: &[S], counts: &[usize]) -> S {
    let total = sum(weights);
    let mut p = S::one() / rising(&total, n);
    let mut remaining = n;
    for (w, &c) in weights.iter().zip(counts) {
        p = p * binomial::<S>(remaining, c) * rising(w, c);
        remaining -= c;
    }
    p
}

/// Probability that a Pólya urn with initial `weights`, run for `n` draws,
/// ends with occupancy `counts` (the Dirichlet-multinomial pmf).
///
/// Errors on length mismatch, counts not summing to `n`, or zero total
/// weight. Colours of weight zero are allowed and can only have count zero.
pub fn dirmult_pmf<S: Scalar>(n: usize, weights: &UrnWeights<S>, counts: &[usize]) -> Result<S> {
    if counts.len() != weights.len() {
        return Err(Error::LengthMismatch { expected: weights.len(), got: counts.len() });
    }
    let s: usize = counts.iter().sum();
    if s != n {
        return Err(Error::OutOfRange(format!("counts sum to {s}, expected {n}")));
    }
    Ok(dirmult_pmf_unchecked(n, weights.weights(), counts))
}

/// Beta-binomial pmf `P(X = m)` for `X ~ BetaBin^n(a, b)`: the number of
/// draws of the first colour in a two-colour urn.
pub fn beta_binomial_pmf<S: Scalar>(n: usize, a: &S, b: &S, m: usize) -> S {
    if m > n {
        return S::zero();
    }
    dirmult_pmf_unchecked(n, &[a.clone(), b.clone()], &[m, n - m])
}

/// Number of records (left-to-right maxima) of a sequence.
pub fn record_count(sigma: &[usize]) -> usize {
    let mut best = 0;
    let mut r = 0;
    for &s in sigma {
        if s > best {
            best = s;
            r += 1;
        }
    }
    r
}

/// Whether `sigma` is a permutation of `1..=len`.
pub fn is_permutation(sigma: &[usize]) -> bool {
    let mut seen = vec![false; sigma.len() + 1];
    for &s in sigma {
        if s == 0 || s > sigma.len() || seen[s] {
            return false;
        }
        seen[s] = true;
    }
    true
}

/// Law of the left-to-right order of the tables of an ordered `(α, θ)`
/// restaurant: `σ(l)` is the position of the `l`-th opened table.
///
/// Equals `(θ/α)^{R(σ)} Γ(θ/α)/Γ(θ/α + L)` with `R` the record count,
/// evaluated as the product of the seating probabilities, which stays
/// finite at `θ = 0` (the rightmost gap then has weight zero).
pub fn ocrp_permutation_pmf<S: Scalar>(sigma: &[usize], alpha: &S, theta: &S) -> Result<S> {
    if !(*alpha > S::zero()) {
        return Err(Error::InvalidParams("ordered restaurant needs alpha > 0".into()));
    }
    if *theta < S::zero() {
        return Err(Error::InvalidParams("ordered restaurant needs theta >= 0".into()));
    }
    if !is_permutation(sigma) {
        return Err(Error::InvalidParams(format!("{sigma:?} is not a permutation")));
    }
    let mut p = S::one();
    let mut best = 0;
    for (l, &s) in sigma.iter().enumerate() {
        if l == 0 {
            best = s;
            continue;
        }
        let denom = S::from_usize(l) * alpha.clone() + theta.clone();
        let num = if s > best { theta.clone() } else { alpha.clone() };
        best = best.max(s);
        if num.is_zero() {
            return Ok(S::zero());
        }
        p = p * num / denom;
    }
    Ok(p)
}

/// Probability that an ordered `(α, θ)` restaurant with customers
/// `1..=m` (seated in increasing order) ends with the blocks `blocks`,
/// listed left to right.
pub fn ocrp_ordered_partition_pmf<S: Scalar>(blocks: &[Vec<usize>], alpha: &S, theta: &S) -> Result<S> {
    let m: usize = blocks.iter().map(|b| b.len()).sum();
    let mut block_of = vec![usize::MAX; m + 1];
    for (pos, b) in blocks.iter().enumerate() {
        for &l in b {
            if l == 0 || l > m || block_of[l] != usize::MAX {
                return Err(Error::InvalidParams("blocks do not partition 1..m".into()));
            }
            block_of[l] = pos;
        }
    }
    if blocks.iter().any(|b| b.is_empty()) {
        return Err(Error::InvalidParams("empty block".into()));
    }
    let mut state = SeatingState::empty(true, alpha.clone(), theta.clone())?;
    // table index (order of appearance) -> final left-to-right position
    let mut table_pos: Vec<usize> = Vec::new();
    let mut p = S::one();
    for l in 1..=m {
        let pos = block_of[l];
        let seat = match table_pos.iter().position(|&q| q == pos) {
            Some(t) => Seat::Existing(t),
            None => {
                table_pos.push(pos);
                Seat::NewAtGap(table_pos.iter().filter(|&&q| q < pos).count())
            }
        };
        let dist = state.next_distribution(true)?;
        let w = dist.iter().find(|(s, _)| *s == seat).map(|(_, w)| w.clone()).unwrap_or_else(S::zero);
        if w.is_zero() {
            return Ok(S::zero());
        }
        p = p * w;
        state.seat(&seat);
    }
    Ok(p)
}

/// All permutations of `1..=len` in lexicographic order.
pub fn permutations(len: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        let len = used.len() - 1;
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for v in 1..=len {
            if !used[v] {
                used[v] = true;
                cur.push(v);
                rec(cur, used, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; len + 1], &mut out);
    out
}

/// Decrement matrix entry `q_{α,θ}(n, m)`: the probability that the leftmost
/// table of an ordered `(α, θ)` restaurant with `n` customers seats `m`.
///
/// `C(n,m) · ((n−m)α + mθ)/n · Γ(m−α)/Γ(1−α) · Γ(n−m+θ)/Γ(n+θ)`, with the
/// `m = n` entry simplified so that `θ = 0` is finite.
pub fn decrement_pmf<S: Scalar>(n: usize, m: usize, alpha: &S, theta: &S) -> Result<S> {
    if m < 1 || m > n {
        return Err(Error::OutOfRange(format!("first-block size {m} not in 1..={n}")));
    }
    let one_minus_alpha = S::one() - alpha.clone();
    // Γ(m−α)/Γ(1−α) = (1−α)↑(m−1)
    let head = rising(&one_minus_alpha, m - 1);
    if m == n {
        // mθ/n · Γ(θ)/Γ(n+θ) = Γ(1+θ)/Γ(n+θ) = 1/(1+θ)↑(n−1)
        let tail = rising(&(S::one() + theta.clone()), n - 1);
        return Ok(head / tail);
    }
    let lin = (S::from_usize(n - m) * alpha.clone() + S::from_usize(m) * theta.clone()) / S::from_usize(n);
    let tail = rising(&(S::from_usize(n - m) + theta.clone()), m);
    Ok(binomial::<S>(n, m) * lin * head / tail)
}

/// Draws `m ~ q_{α,θ}(n, ·)`.
pub fn draw_decrement<S: Scalar, C: Chooser<S> + ?Sized>(ch: &mut C, n: usize, alpha: &S, theta: &S) -> usize {
    let w: Vec<S> = (1..=n)
        .map(|m| decrement_pmf(n, m, alpha, theta).expect("m in range"))
        .collect();
    1 + ch.choose(&w)
}

/// Draws `X ~ BetaBin^n(a, b)` as a two-colour urn.
pub fn draw_beta_binomial<S: Scalar, C: Chooser<S> + ?Sized>(ch: &mut C, n: usize, a: &S, b: &S) -> usize {
    ch.dirmult(n, &[a.clone(), b.clone()])[0]
}

/// State of a Chinese restaurant: table sizes in order of appearance and,
/// for an ordered restaurant, the left-to-right positions of the tables.
#[derive(Clone, Debug, PartialEq)]
pub struct SeatingState<S> {
    counts: Vec<usize>,
    order: Option<Vec<usize>>,
    alpha: S,
    theta: S,
}

/// Outcome of seating the next customer.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Seat {
    /// Join the existing table with this index (order of appearance).
    Existing(usize),
    /// Open a new table (unordered restaurant).
    New,
    /// Open a new table in gap `g`: `0` is left of the leftmost table and
    /// `L` right of the rightmost (ordered restaurant).
    NewAtGap(usize),
}

impl<S: Scalar> SeatingState<S> {
    /// Validated constructor. `order`, when given, lists the left-to-right
    /// position of each table (`order[l]` for the `l`-th opened table).
    ///
    /// Domain: `0 ≤ α ≤ 1` and `θ > −α`, or `α < 0` with `θ = m·|α|` for a
    /// positive integer `m` bounding the number of tables (unordered only).
    pub fn new(counts: Vec<usize>, order: Option<Vec<usize>>, alpha: S, theta: S) -> Result<Self> {
        if counts.contains(&0) {
            return Err(Error::InvalidParams("tables must be occupied".into()));
        }
        let standard = alpha >= S::zero() && alpha <= S::one() && theta.clone() + alpha.clone() > S::zero();
        let finite = alpha < S::zero() && order.is_none() && {
            let m = (theta.clone() / -alpha.clone()).to_f64();
            m >= 1.0 && m.fract() == 0.0 && counts.len() as f64 <= m
        };
        if !(standard || finite) {
            return Err(Error::InvalidParams(format!("restaurant parameters ({alpha}, {theta})")));
        }
        if let Some(o) = &order {
            if o.len() != counts.len() || !is_permutation(o) {
                return Err(Error::InvalidParams("order is not a permutation of the tables".into()));
            }
            if !(alpha > S::zero()) || theta < S::zero() {
                return Err(Error::InvalidParams("ordered restaurant needs alpha > 0, theta >= 0".into()));
            }
        }
        Ok(SeatingState { counts, order, alpha, theta })
    }

    /// Empty restaurant.
    pub fn empty(ordered: bool, alpha: S, theta: S) -> Result<Self> {
        SeatingState::new(Vec::new(), if ordered { Some(Vec::new()) } else { None }, alpha, theta)
    }

    /// Table sizes in order of appearance.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Left-to-right table positions (ordered mode).
    pub fn order(&self) -> Option<&[usize]> {
        self.order.as_deref()
    }

    /// Number of seated customers.
    pub fn customers(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Law of the next customer's seat.
    pub fn next_distribution(&self, ordered: bool) -> Result<Vec<(Seat, S)>> {
        restaurant_next_distribution(self, ordered)
    }

    /// Seats one customer.
    pub fn seat(&mut self, seat: &Seat) {
        match *seat {
            Seat::Existing(l) => self.counts[l] += 1,
            Seat::New => self.counts.push(1),
            Seat::NewAtGap(g) => {
                let order = self.order.get_or_insert_with(Vec::new);
                for p in order.iter_mut() {
                    if *p > g {
                        *p += 1;
                    }
                }
                order.push(g + 1);
                self.counts.push(1);
            }
        }
    }
}

/// Law of the next customer's seat: existing table `l` with probability
/// `(N_l − α)/(n + θ)`; a new table with `(Lα + θ)/(n + θ)`, which in
/// ordered mode is split as `α` per left or interior gap and `θ` for the
/// rightmost gap. The first customer opens the first table.
pub fn restaurant_next_distribution<S: Scalar>(state: &SeatingState<S>, ordered: bool) -> Result<Vec<(Seat, S)>> {
    if ordered && state.order.is_none() {
        return Err(Error::InvalidParams("ordered law requested for an unordered state".into()));
    }
    let l = state.counts.len();
    if l == 0 {
        let seat = if ordered { Seat::NewAtGap(0) } else { Seat::New };
        return Ok(vec![(seat, S::one())]);
    }
    let n = S::from_usize(state.customers());
    let denom = n + state.theta.clone();
    let mut out: Vec<(Seat, S)> = state
        .counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (Seat::Existing(i), (S::from_usize(c) - state.alpha.clone()) / denom.clone()))
        .collect();
    if ordered {
        for g in 0..l {
            out.push((Seat::NewAtGap(g), state.alpha.clone() / denom.clone()));
        }
        out.push((Seat::NewAtGap(l), state.theta.clone() / denom));
    } else {
        out.push((Seat::New, (S::from_usize(l) * state.alpha.clone() + state.theta.clone()) / denom));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Q;

    fn q(a: i64, b: i64) -> Q {
        Q::ratio(a, b)
    }

    #[test]
    fn dirmult_examples() {
        let w = UrnWeights::new(vec![q(1, 1), q(1, 1)]).unwrap();
        assert_eq!(dirmult_pmf(1, &w, &[1, 0]).unwrap(), q(1, 2));
        let w = UrnWeights::new(vec![q(1, 2), q(1, 1)]).unwrap();
        // 1/2 · 3/2 / (3/2 · 5/2)
        assert_eq!(dirmult_pmf(2, &w, &[2, 0]).unwrap(), q(1, 5));
        assert!(dirmult_pmf(2, &w, &[1, 0]).is_err());
        assert!(dirmult_pmf(2, &w, &[1, 0, 1]).is_err());
        assert!(UrnWeights::new(vec![q(0, 1)]).is_err());
    }

    #[test]
    fn ocrp_examples() {
        assert_eq!(ocrp_permutation_pmf(&[1], &q(1, 3), &q(1, 5)).unwrap(), q(1, 1));
        let a = q(1, 2);
        assert_eq!(ocrp_permutation_pmf(&[1, 2], &a, &a).unwrap(), q(1, 2));
        assert_eq!(ocrp_permutation_pmf(&[2, 1], &a, &a).unwrap(), q(1, 2));
        assert_eq!(ocrp_permutation_pmf(&[2, 1], &q(1, 1), &q(2, 1)).unwrap(), q(1, 3));
        assert_eq!(ocrp_permutation_pmf(&[1, 2], &q(1, 1), &q(2, 1)).unwrap(), q(2, 3));
        assert!(ocrp_permutation_pmf(&[1], &q(0, 1), &q(1, 1)).is_err());
        // θ = 0: only the order without later records survives
        assert_eq!(ocrp_permutation_pmf(&[2, 1], &a, &q(0, 1)).unwrap(), q(1, 1));
    }

    #[test]
    fn decrement_examples() {
        let h = q(1, 2);
        assert_eq!(decrement_pmf(1, 1, &h, &h).unwrap(), q(1, 1));
        assert_eq!(decrement_pmf(2, 1, &h, &h).unwrap(), q(2, 3));
        assert_eq!(decrement_pmf(2, 2, &h, &h).unwrap(), q(1, 3));
        assert!(decrement_pmf(2, 3, &h, &h).is_err());
        assert!(decrement_pmf(2, 0, &h, &h).is_err());
    }

    #[test]
    fn restaurant_examples() {
        let h = q(1, 2);
        let empty = SeatingState::empty(false, h.clone(), h.clone()).unwrap();
        assert_eq!(empty.next_distribution(false).unwrap(), vec![(Seat::New, q(1, 1))]);
        let s = SeatingState::new(vec![2, 1], None, h.clone(), h.clone()).unwrap();
        let d = s.next_distribution(false).unwrap();
        assert_eq!(d, vec![(Seat::Existing(0), q(3, 7)), (Seat::Existing(1), q(1, 7)), (Seat::New, q(3, 7))]);
        let (a, t) = (q(1, 3), q(1, 4));
        let s = SeatingState::new(vec![1, 1], Some(vec![2, 1]), a.clone(), t.clone()).unwrap();
        let d = s.next_distribution(true).unwrap();
        let gap_mass = d[2..].iter().fold(q(0, 1), |acc, (_, p)| acc + p);
        assert_eq!(gap_mass, (q(2, 1) * a.clone() + t.clone()) / (q(2, 1) + t.clone()));
        let split: Vec<Q> = d[2..].iter().map(|(_, p)| p.clone() / gap_mass.clone()).collect();
        let den = q(2, 1) * a.clone() + t.clone();
        assert_eq!(split, vec![a.clone() / den.clone(), a / den.clone(), t / den]);
        assert!(SeatingState::new(vec![0], None, h.clone(), h.clone()).is_err());
        assert!(SeatingState::new(vec![1], None, h.clone(), q(-1, 1)).is_err());
    }

    #[test]
    fn records_and_permutations() {
        assert_eq!(record_count(&[1, 2]), 2);
        assert_eq!(record_count(&[2, 1]), 1);
        assert_eq!(record_count(&[2, 3, 1]), 2);
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(compositions(3, 2).len(), 4);
        assert_eq!(compositions(0, 0), vec![Vec::<usize>::new()]);
    }
}
