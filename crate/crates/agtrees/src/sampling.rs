//! Randomness plumbing: one sampling interface with two implementations.
//!
//! Every stochastic procedure in the crate (growth steps, chain steps,
//! resampling, lifting) is written once, against the [`Chooser`] trait. A
//! [`RngChooser`] turns each choice into an inverse-CDF draw from a seeded
//! stream — the Monte Carlo path. [`enumerate`] instead replays the procedure
//! along every possible sequence of choices and returns each outcome with its
//! exact probability — the path used by the verifier to build exact laws and
//! transition kernels. Because both paths execute the same code, an exact
//! kernel is the exact law of the simulated step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numeric::Scalar;
use crate::urn::{compositions, dirmult_pmf_unchecked};

/// Source of categorical choices.
pub trait Chooser<S: Scalar> {
    /// Returns index `i` with probability `weights[i] / Σ weights`.
    ///
    /// Weights are nonnegative with a positive total; zero-weight indices are
    /// never returned.
    fn choose(&mut self, weights: &[S]) -> usize;

    /// Draws occupancy counts of a Pólya urn with initial `weights` after `n`
    /// draws, i.e. a Dirichlet-multinomial vector.
    ///
    /// The default runs the urn sequentially; the exact enumerator overrides
    /// it with a single choice over all occupancy vectors.
    fn dirmult(&mut self, n: usize, weights: &[S]) -> Vec<usize> {
        let mut counts = vec![0usize; weights.len()];
        let mut w: Vec<S> = weights.to_vec();
        for _ in 0..n {
            let j = self.choose(&w);
            counts[j] += 1;
            w[j] = w[j].clone() + S::one();
        }
        counts
    }
}

/// The shared inverse-CDF draw: smallest `i` with `u·Σw < w_0 + … + w_i`.
///
/// `u` must lie in `[0, 1)`. Zero-weight indices are never selected.
pub fn sample_index(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if target < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Monte Carlo chooser backed by a caller-owned random stream.
#[derive(Debug)]
pub struct RngChooser<'a, R: Rng> {
    rng: &'a mut R,
}

impl<'a, R: Rng> RngChooser<'a, R> {
    /// Wraps a random stream.
    pub fn new(rng: &'a mut R) -> Self {
        RngChooser { rng }
    }
}

impl<R: Rng> Chooser<f64> for RngChooser<'_, R> {
    fn choose(&mut self, weights: &[f64]) -> usize {
        let u: f64 = self.rng.random();
        sample_index(weights, u)
    }
}

/// Random stream of replica `replica` under master seed `seed`.
///
/// Counter-splitting scheme: every replica uses the ChaCha8 generator keyed
/// by `seed` and selects the 64-bit stream number `replica`. Streams are
/// independent and a replica's output never depends on how many other
/// replicas run, or on which thread runs it.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Chooser that follows a scripted prefix of choices and records the rest.
#[derive(Debug)]
pub struct ScriptChooser<S> {
    prefix: Vec<usize>,
    pos: usize,
    path: Vec<usize>,
    alternatives: Vec<Vec<usize>>,
    prob: S,
}

impl<S: Scalar> Chooser<S> for ScriptChooser<S> {
    fn choose(&mut self, weights: &[S]) -> usize {
        let total = weights.iter().cloned().fold(S::zero(), |a, b| a + b);
        assert!(total > S::zero(), "choice with zero total weight");
        let idx = if self.pos < self.prefix.len() {
            self.alternatives.push(Vec::new());
            self.prefix[self.pos]
        } else {
            let first = weights
                .iter()
                .position(|w| *w > S::zero())
                .expect("positive total implies a positive weight");
            let alts = (first + 1..weights.len())
                .filter(|&j| weights[j] > S::zero())
                .collect();
            self.alternatives.push(alts);
            first
        };
        self.pos += 1;
        self.path.push(idx);
        self.prob = self.prob.clone() * weights[idx].clone() / total;
        idx
    }

    fn dirmult(&mut self, n: usize, weights: &[S]) -> Vec<usize> {
        let support: Vec<Vec<usize>> = compositions(n, weights.len())
            .into_iter()
            .filter(|c| c.iter().zip(weights).all(|(&k, w)| k == 0 || *w > S::zero()))
            .collect();
        let probs: Vec<S> = support
            .iter()
            .map(|c| dirmult_pmf_unchecked(n, weights, c))
            .collect();
        let j = self.choose(&probs);
        support[j].clone()
    }
}

/// Exhausts the randomness of `f`, returning every outcome with its exact
/// probability (one entry per choice path; equal outcomes are not merged).
///
/// `f` must be deterministic given its choices.
pub fn enumerate<S: Scalar, T>(mut f: impl FnMut(&mut ScriptChooser<S>) -> T) -> Vec<(S, T)> {
    let mut out = Vec::new();
    let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
    while let Some(prefix) = stack.pop() {
        let mut ch = ScriptChooser {
            prefix,
            pos: 0,
            path: Vec::new(),
            alternatives: Vec::new(),
            prob: S::one(),
        };
        let value = f(&mut ch);
        for j in (ch.prefix.len()..ch.path.len()).rev() {
            for &alt in ch.alternatives[j].iter().rev() {
                let mut p = ch.path[..j].to_vec();
                p.push(alt);
                stack.push(p);
            }
        }
        if ch.prob > S::zero() {
            out.push((ch.prob, value));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Q;

    #[test]
    fn inverse_cdf_boundaries() {
        let w = [0.0, 1.0, 0.0, 3.0];
        assert_eq!(sample_index(&w, 0.0), 1);
        assert_eq!(sample_index(&w, 0.2499), 1);
        assert_eq!(sample_index(&w, 0.25), 3);
        assert_eq!(sample_index(&w, 0.999_999), 3);
    }

    #[test]
    fn enumeration_of_two_dice_sums_to_one() {
        let out = enumerate::<Q, usize>(|ch| {
            let a = ch.choose(&[Q::ratio(1, 1), Q::ratio(2, 1)]);
            let b = if a == 0 { ch.choose(&[Q::ratio(1, 1), Q::ratio(1, 1), Q::ratio(0, 1)]) } else { 5 };
            a * 10 + b
        });
        assert_eq!(out.len(), 3);
        let total = out.iter().fold(Q::ratio(0, 1), |a, (p, _)| a + p);
        assert_eq!(total, Q::ratio(1, 1));
        let p15 = out.iter().find(|(_, v)| *v == 15).unwrap().0.clone();
        assert_eq!(p15, Q::ratio(2, 3));
    }

    #[test]
    fn replica_streams_are_reproducible_and_distinct() {
        let a: u64 = replica_rng(7, 0).random();
        let b: u64 = replica_rng(7, 0).random();
        let c: u64 = replica_rng(7, 1).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
