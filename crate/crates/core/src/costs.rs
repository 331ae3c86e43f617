//! Costs between a reference tree and a candidate tree.
//!
//! Both costs are first-order: they are sums of per-modifier terms, so they
//! can be folded into arc scores for cost-augmented decoding via
//! [`per_arc_cost`]. Labels are ignored.

use std::fmt;
use std::str::FromStr;

use crate::decoders::ArcScoreMatrix;
use crate::ensemble::VoteTable;
use crate::error::{Error, Result};
use crate::treebank::ParseTree;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CostKind {
    Hamming,
    Distillation,
}

impl FromStr for CostKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hamming" => Ok(CostKind::Hamming),
            "distill" | "distillation" => Ok(CostKind::Distillation),
            other => Err(Error::usage(format!("unknown cost '{other}'"))),
        }
    }
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostKind::Hamming => f.write_str("hamming"),
            CostKind::Distillation => f.write_str("distill"),
        }
    }
}

/// A cost function, with the vote table the distillation cost needs.
#[derive(Clone, Copy, Debug)]
pub enum CostSpec<'a> {
    Hamming,
    Distillation(&'a VoteTable),
}

impl<'a> CostSpec<'a> {
    /// Build a spec from a kind and optional votes.
    pub fn new(kind: CostKind, votes: Option<&'a VoteTable>) -> Result<Self> {
        match (kind, votes) {
            (CostKind::Hamming, _) => Ok(CostSpec::Hamming),
            (CostKind::Distillation, Some(v)) => Ok(CostSpec::Distillation(v)),
            (CostKind::Distillation, None) => {
                Err(Error::usage("distillation cost requires a vote table"))
            }
        }
    }

    pub fn kind(&self) -> CostKind {
        match self {
            CostSpec::Hamming => CostKind::Hamming,
            CostSpec::Distillation(_) => CostKind::Distillation,
        }
    }

    /// Cost of `pred` against `gold`.
    pub fn cost(&self, gold: &ParseTree, pred: &ParseTree) -> Result<f64> {
        match self {
            CostSpec::Hamming => hamming_cost(gold, pred),
            CostSpec::Distillation(votes) => distillation_cost(gold, pred, votes),
        }
    }
}

fn check_lengths(gold: &ParseTree, pred: &ParseTree) -> Result<()> {
    if gold.len() != pred.len() {
        return Err(Error::usage(format!(
            "cost between trees of {} and {} words",
            gold.len(),
            pred.len()
        )));
    }
    Ok(())
}

fn check_votes(gold: &ParseTree, votes: &VoteTable) -> Result<()> {
    if votes.len() != gold.len() {
        return Err(Error::usage(format!(
            "vote table for {} words used with a tree of {}",
            votes.len(),
            gold.len()
        )));
    }
    Ok(())
}

/// Number of words whose heads differ.
pub fn hamming_cost(gold: &ParseTree, pred: &ParseTree) -> Result<f64> {
    check_lengths(gold, pred)?;
    let wrong = gold
        .heads()
        .iter()
        .zip(pred.heads())
        .filter(|(g, p)| g != p)
        .count();
    Ok(wrong as f64)
}

/// Contribution of attaching `m` to `head` when the reference head is
/// `gold_head`: `max(0, p̂(gold_head, m) - p̂(head, m))`.
#[inline]
pub fn distillation_term(votes: &VoteTable, gold_head: usize, head: usize, m: usize) -> f64 {
    (votes.posterior(gold_head, m) - votes.posterior(head, m)).max(0.0)
}

/// Distillation cost: the Hamming cost discounted by how strongly the
/// ensemble prefers the reference head over the candidate head.
pub fn distillation_cost(gold: &ParseTree, pred: &ParseTree, votes: &VoteTable) -> Result<f64> {
    check_lengths(gold, pred)?;
    check_votes(gold, votes)?;
    Ok((1..=gold.len())
        .map(|m| distillation_term(votes, gold.head(m), pred.head(m), m))
        .sum())
}

/// Per-arc decomposition `A(h, m)` of a cost, such that for every tree `y'`
/// `Σ_m A(head_{y'}(m), m)` equals the cost of `y'` against `gold`.
pub fn per_arc_cost(gold: &ParseTree, spec: &CostSpec<'_>) -> Result<ArcScoreMatrix> {
    let n = gold.len();
    match spec {
        CostSpec::Hamming => Ok(ArcScoreMatrix::from_fn(n, |h, m| {
            if h == gold.head(m) {
                0.0
            } else {
                1.0
            }
        })),
        CostSpec::Distillation(votes) => {
            check_votes(gold, votes)?;
            Ok(ArcScoreMatrix::from_fn(n, |h, m| {
                distillation_term(votes, gold.head(m), h, m)
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoders::{enumerate_trees, tree_score};
    use crate::ensemble::tally_votes;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tree(heads: &[usize]) -> ParseTree {
        ParseTree::unlabeled(heads.to_vec()).unwrap()
    }

    #[test]
    fn hamming_examples() {
        let gold = tree(&[2, 0, 2]);
        assert_eq!(hamming_cost(&gold, &gold).unwrap(), 0.0);
        assert_eq!(hamming_cost(&gold, &tree(&[2, 0, 1])).unwrap(), 1.0);
        assert!(hamming_cost(&gold, &tree(&[0])).is_err());
    }

    #[test]
    fn hamming_per_arc_matrix() {
        let gold = tree(&[2, 0]);
        let a = per_arc_cost(&gold, &CostSpec::Hamming).unwrap();
        assert_eq!(a.get(2, 1), 0.0);
        assert_eq!(a.get(0, 1), 1.0);
        assert_eq!(a.get(0, 2), 0.0);
        assert_eq!(a.get(1, 2), 1.0);
    }

    #[test]
    fn distillation_requires_votes() {
        assert!(CostSpec::new(CostKind::Distillation, None).is_err());
        assert!(matches!(
            CostSpec::new(CostKind::Hamming, None).unwrap(),
            CostSpec::Hamming
        ));
    }

    #[test]
    fn ensemble_preferring_prediction_costs_nothing() {
        // word 2 gets 1 vote for gold head 0 and 2 votes for head 1
        let parses = [tree(&[0, 1]), tree(&[0, 1]), tree(&[0, 0])];
        let votes = tally_votes(&parses, 2).unwrap();
        let gold = tree(&[0, 0]);
        let pred = tree(&[0, 1]);
        assert_eq!(distillation_cost(&gold, &pred, &votes).unwrap(), 0.0);
        assert_eq!(distillation_cost(&gold, &gold, &votes).unwrap(), 0.0);
    }

    #[test]
    fn decomposition_on_random_trees() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let all = enumerate_trees(5, false).unwrap();
        let parses: Vec<ParseTree> = (0..7).map(|_| all.choose(&mut rng).unwrap().clone()).collect();
        let votes = tally_votes(&parses, 5).unwrap();
        let gold = all.choose(&mut rng).unwrap().clone();
        for spec in [CostSpec::Hamming, CostSpec::Distillation(&votes)] {
            let a = per_arc_cost(&gold, &spec).unwrap();
            for _ in 0..50 {
                let y = all.choose(&mut rng).unwrap();
                assert_eq!(tree_score(&a, y).unwrap(), spec.cost(&gold, y).unwrap());
            }
        }
    }
}
