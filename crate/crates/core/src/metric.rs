//! The recursive ANLS* score.
//!
//! Comparing two trees yields a pair `(s, l)`: `s` is the accumulated
//! similarity and `l` the number of leaves the comparison is normalized by.
//! Every leaf weighs the same no matter how deep it sits. Missing and
//! hallucinated subtrees add their leaf count to `l` but nothing to `s`, and
//! a type mismatch costs `max(l_t(g), l_t(p))` leaves. The final score is
//! `s / l`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::ops::Add;

use thiserror::Error;

use crate::matching::{maximize_lexicographic, MatchAssignment, ScoreMatrix};
use crate::scalar::Scalar;
use crate::similarity::{nls, SimilarityConfig};
use crate::tree::ValueTree;

pub const DEFAULT_MAX_DEPTH: usize = 128;

/// Breakdown key used when the root is not a pair of dictionaries.
pub const ROOT_KEY: &str = "$";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("tree nesting exceeds the depth limit of {limit}")]
    DepthExceeded { limit: usize },
}

/// Accumulated score `s` and leaf count `l` of a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorePair<T> {
    pub s: T,
    pub l: usize,
}

impl<T: Scalar> ScorePair<T> {
    pub fn new(s: T, l: usize) -> Self {
        Self { s, l }
    }

    /// Nothing earned, `l` leaves owed.
    pub fn penalty(l: usize) -> Self {
        Self { s: T::zero(), l }
    }

    /// `s / l`, or one when there was nothing to compare.
    pub fn ratio(&self) -> T {
        if self.l == 0 {
            T::one()
        } else {
            self.s.clone() / T::from_count(self.l)
        }
    }
}

impl<T: Scalar> Add for ScorePair<T> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            s: self.s + rhs.s,
            l: self.l + rhs.l,
        }
    }
}

/// Final score plus each top-level key's share of `(s, l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreBreakdown<T> {
    pub total: T,
    pub root: ScorePair<T>,
    pub per_key: BTreeMap<String, ScorePair<T>>,
}

/// Leaf count of a tree: tuples count their largest alternative and `None`
/// dictionary entries do not count.
pub fn tree_length(tree: &ValueTree) -> usize {
    match tree {
        ValueTree::None | ValueTree::String(_) => 1,
        ValueTree::Tuple(alts) => alts.iter().map(tree_length).max().unwrap_or(0),
        ValueTree::List(items) => items.iter().map(tree_length).sum(),
        ValueTree::Dict(map) => map.values().filter(|v| !v.is_none()).map(tree_length).sum(),
    }
}

/// ANLS* with the default depth limit.
pub fn anls_star<T: Scalar>(
    ground_truth: &ValueTree,
    prediction: &ValueTree,
    config: &SimilarityConfig<T>,
) -> Result<T, MetricError> {
    Metric::new(config.clone()).anls_star(ground_truth, prediction)
}

/// `(s, l)` with the default depth limit.
pub fn score<T: Scalar>(
    ground_truth: &ValueTree,
    prediction: &ValueTree,
    config: &SimilarityConfig<T>,
) -> Result<ScorePair<T>, MetricError> {
    Metric::new(config.clone()).score(ground_truth, prediction)
}

pub fn score_with_breakdown<T: Scalar>(
    ground_truth: &ValueTree,
    prediction: &ValueTree,
    config: &SimilarityConfig<T>,
) -> Result<ScoreBreakdown<T>, MetricError> {
    Metric::new(config.clone()).breakdown(ground_truth, prediction)
}

/// A configured scorer.
#[derive(Debug, Clone)]
pub struct Metric<T> {
    config: SimilarityConfig<T>,
    max_depth: usize,
}

impl<T: Scalar> Default for Metric<T> {
    fn default() -> Self {
        Self::new(SimilarityConfig::default())
    }
}

impl<T: Scalar> Metric<T> {
    pub fn new(config: SimilarityConfig<T>) -> Self {
        Self {
            config,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }

    pub fn with_max_depth(mut self, max_depth: usize) -> Self {
        self.max_depth = max_depth;
        self
    }

    pub fn config(&self) -> &SimilarityConfig<T> {
        &self.config
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn check_depth(&self, tree: &ValueTree) -> Result<(), MetricError> {
        if tree.depth_bounded(self.max_depth) > self.max_depth {
            Err(MetricError::DepthExceeded { limit: self.max_depth })
        } else {
            Ok(())
        }
    }

    pub fn score(&self, ground_truth: &ValueTree, prediction: &ValueTree) -> Result<ScorePair<T>, MetricError> {
        self.check_depth(ground_truth)?;
        self.check_depth(prediction)?;
        Ok(self.pair(ground_truth, prediction))
    }

    pub fn anls_star(&self, ground_truth: &ValueTree, prediction: &ValueTree) -> Result<T, MetricError> {
        self.score(ground_truth, prediction).map(|pair| pair.ratio())
    }

    pub fn breakdown(
        &self,
        ground_truth: &ValueTree,
        prediction: &ValueTree,
    ) -> Result<ScoreBreakdown<T>, MetricError> {
        self.check_depth(ground_truth)?;
        self.check_depth(prediction)?;
        let per_key = match (ground_truth, prediction) {
            (ValueTree::Dict(g), ValueTree::Dict(p)) => self.dict_entries(g, p).collect(),
            _ => BTreeMap::from([(ROOT_KEY.to_owned(), self.pair(ground_truth, prediction))]),
        };
        let root = per_key
            .values()
            .cloned()
            .fold(ScorePair::penalty(0), |acc, pair| acc + pair);
        Ok(ScoreBreakdown {
            total: root.ratio(),
            root,
            per_key,
        })
    }

    fn pair(&self, g: &ValueTree, p: &ValueTree) -> ScorePair<T> {
        match (g, p) {
            (ValueTree::None, ValueTree::None) => ScorePair::new(T::one(), 1),
            (ValueTree::String(g), ValueTree::String(p)) => ScorePair::new(nls(g, p, &self.config), 1),
            (ValueTree::Tuple(alts), _) => self.best_alternative(alts.as_slice(), p),
            (ValueTree::List(g), ValueTree::List(p)) => self.list_pair(g, p),
            (ValueTree::Dict(g), ValueTree::Dict(p)) => self
                .dict_entries(g, p)
                .fold(ScorePair::penalty(0), |acc, (_, pair)| acc + pair),
            // Plain answer lists of classic QA datasets are read as "one of".
            (ValueTree::List(g), ValueTree::String(_)) if !g.is_empty() => self.best_alternative(g, p),
            _ => ScorePair::penalty(tree_length(g).max(tree_length(p))),
        }
    }

    /// The alternative with the highest ratio; the first one on ties.
    fn best_alternative(&self, alternatives: &[ValueTree], p: &ValueTree) -> ScorePair<T> {
        let mut best: Option<(T, ScorePair<T>)> = None;
        for alternative in alternatives {
            let pair = self.pair(alternative, p);
            let ratio = pair.ratio();
            if best.as_ref().is_none_or(|(r, _)| ratio > *r) {
                best = Some((ratio, pair));
            }
        }
        best.map(|(_, pair)| pair).expect("alternatives are non-empty")
    }

    fn list_pair(&self, g: &[ValueTree], p: &[ValueTree]) -> ScorePair<T> {
        let g_len: Vec<usize> = g.iter().map(tree_length).collect();
        let p_len: Vec<usize> = p.iter().map(tree_length).collect();
        let pairs = ScoreMatrix::from_fn(g.len(), p.len(), |i, j| self.pair(&g[i], &p[j]));
        let assignment = self.assign(&pairs, &g_len, &p_len);

        let matched = assignment
            .pairs
            .iter()
            .fold(ScorePair::penalty(0), |acc, &(i, j)| acc + pairs.get(i, j).clone());
        let missing: usize = assignment.unmatched_gt.iter().map(|&i| g_len[i]).sum();
        let hallucinated: usize = assignment.unmatched_pred.iter().map(|&j| p_len[j]).sum();
        matched + ScorePair::penalty(missing + hallucinated)
    }

    /// Maximizes the summed pairwise ANLS*. Among equally good assignments it
    /// prefers a larger total `s`, then a smaller total `l`, so the resulting
    /// pair does not depend on the order of either list.
    fn assign(&self, pairs: &ScoreMatrix<ScorePair<T>>, g_len: &[usize], p_len: &[usize]) -> MatchAssignment {
        let (rows, cols) = (pairs.rows(), pairs.cols());
        let ratio = ScoreMatrix::from_fn(rows, cols, |i, j| pairs.get(i, j).ratio());
        let s = ScoreMatrix::from_fn(rows, cols, |i, j| pairs.get(i, j).s.clone());
        // Matching i with j instead of leaving both unmatched changes l by
        // l(i, j) - l_t(g_i) - l_t(p_j); maximize the saving.
        let saving = ScoreMatrix::from_fn(rows, cols, |i, j| {
            T::from_count(g_len[i] + p_len[j]) - T::from_count(pairs.get(i, j).l)
        });
        maximize_lexicographic(&[ratio, s, saving])
    }

    /// Per-key contributions over the union of non-`None` keys, in key order.
    fn dict_entries<'a>(
        &'a self,
        g: &'a BTreeMap<String, ValueTree>,
        p: &'a BTreeMap<String, ValueTree>,
    ) -> impl Iterator<Item = (String, ScorePair<T>)> + 'a {
        let mut g_iter = g.iter().filter(|(_, v)| !v.is_none()).peekable();
        let mut p_iter = p.iter().filter(|(_, v)| !v.is_none()).peekable();
        std::iter::from_fn(move || {
            let order = match (g_iter.peek(), p_iter.peek()) {
                (None, None) => return None,
                (Some(_), None) => Ordering::Less,
                (None, Some(_)) => Ordering::Greater,
                (Some((gk, _)), Some((pk, _))) => gk.cmp(pk),
            };
            Some(match order {
                Ordering::Less => {
                    let (k, v) = g_iter.next()?;
                    (k.clone(), ScorePair::penalty(tree_length(v)))
                }
                Ordering::Greater => {
                    let (k, v) = p_iter.next()?;
                    (k.clone(), ScorePair::penalty(tree_length(v)))
                }
                Ordering::Equal => {
                    let (k, gv) = g_iter.next()?;
                    let (_, pv) = p_iter.next()?;
                    (k.clone(), self.pair(gv, pv))
                }
            })
        })
    }
}
