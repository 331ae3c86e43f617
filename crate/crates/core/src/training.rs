//! Structured hinge training with cost-augmented decoding.

use std::sync::Arc;

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::costs::{per_arc_cost, CostKind, CostSpec};
use crate::decoders::{tree_score, ArcScoreMatrix, Decoder};
use crate::ensemble::VoteFile;
use crate::error::{Error, Result};
use crate::scorers::{adam_step, AdamConfig, DecaySchedule, OptimizerState, ScorerConfig, ScorerModel};
use crate::treebank::{EmbeddingTable, ParseTree, Sentence};

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub cost: CostKind,
    pub decoder: Decoder,
    pub epochs: usize,
    /// Seeds parameter initialization and the per-epoch shuffle.
    pub seed: u64,
    pub shuffle: bool,
    pub learning_rate: f64,
    pub decay: f64,
    pub schedule: DecaySchedule,
    pub scorer: ScorerConfig,
    /// Train the arc labeler jointly (cross-entropy on gold arcs).
    pub train_labeler: bool,
    /// Fixed pretrained vectors for the bilstm scorer.
    pub embeddings: Option<Arc<EmbeddingTable>>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::linear()
    }
}

impl TrainConfig {
    /// Linear scorer; Adam with a large base rate suits sparse indicator weights.
    pub fn linear() -> Self {
        TrainConfig {
            cost: CostKind::Hamming,
            decoder: Decoder::default(),
            epochs: 10,
            seed: 1,
            shuffle: true,
            learning_rate: 0.1,
            decay: 0.05,
            schedule: DecaySchedule::Inverse,
            scorer: ScorerConfig::linear(),
            train_labeler: true,
            embeddings: None,
        }
    }

    pub fn bilstm() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            scorer: ScorerConfig::bilstm(),
            ..TrainConfig::linear()
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            decay: self.decay,
            schedule: self.schedule,
            ..AdamConfig::default()
        }
    }
}

/// Metrics of one epoch, in the order of the training log line.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub train_uas: f64,
    pub dev_uas: Option<f64>,
    pub lr: f64,
}

impl EpochRecord {
    /// `epoch, mean_loss, train_UAS, dev_UAS, lr` (dev is `-` without a dev set).
    pub fn log_line(&self) -> String {
        let dev = self.dev_uas.map_or_else(|| "-".to_string(), |d| format!("{d:.2}"));
        format!(
            "{}, {:.6}, {:.2}, {}, {:.6e}",
            self.epoch, self.mean_loss, self.train_uas, dev, self.lr
        )
    }
}

pub struct TrainOutcome {
    /// Parameters after the last epoch.
    pub model: ScorerModel,
    /// Snapshot with the best dev UAS (earliest epoch on ties).
    pub best: Option<(usize, ScorerModel)>,
    pub log: Vec<EpochRecord>,
    /// Sentences left out because the decoder cannot produce their gold tree.
    pub excluded: usize,
}

/// Decode over `s(h, m) + A(h, m)`, the scores plus the per-arc cost.
pub fn cost_augmented_decode(
    scores: &ArcScoreMatrix,
    gold: &ParseTree,
    spec: &CostSpec<'_>,
    decoder: Decoder,
) -> Result<ParseTree> {
    let augmented = scores.plus(&per_arc_cost(gold, spec)?)?;
    Ok(decoder.decode(&augmented))
}

/// `max_y' [S(y') + C(y', gold)] - S(gold)` and the maximizing tree.
///
/// When gold itself attains the maximum the witness is gold and the loss is 0.
pub fn hinge_loss(
    scores: &ArcScoreMatrix,
    gold: &ParseTree,
    spec: &CostSpec<'_>,
    decoder: Decoder,
) -> Result<(f64, ParseTree)> {
    let witness = cost_augmented_decode(scores, gold, spec, decoder)?;
    let gold_heads = ParseTree::unlabeled(gold.heads().to_vec())?;
    if witness.heads() == gold.heads() {
        return Ok((0.0, gold_heads));
    }
    let loss = tree_score(scores, &witness)? + spec.cost(gold, &witness)? - tree_score(scores, gold)?;
    if loss.is_nan() {
        return Ok((loss, witness));
    }
    if loss <= 0.0 {
        return Ok((0.0, gold_heads));
    }
    Ok((loss, witness))
}

/// Subgradient of the hinge loss with respect to the arc scores.
pub fn hinge_subgradient(gold: &ParseTree, witness: &ParseTree) -> ArcScoreMatrix {
    let mut g = ArcScoreMatrix::zeros(gold.len());
    for m in 1..=gold.len() {
        if gold.head(m) != witness.head(m) {
            g.add(witness.head(m), m, 1.0);
            g.add(gold.head(m), m, -1.0);
        }
    }
    g
}

/// Unlabeled attachment percentage of `model` on gold-annotated sentences.
pub fn attachment_score(model: &ScorerModel, sentences: &[Sentence], decoder: Decoder) -> f64 {
    let mut correct = 0usize;
    let mut total = 0usize;
    for s in sentences {
        let Some(gold) = &s.gold else { continue };
        let pred = decoder.decode(&model.score_arcs(s));
        correct += pred.heads().iter().zip(gold.heads()).filter(|(p, g)| p == g).count();
        total += s.len();
    }
    if total == 0 {
        100.0
    } else {
        100.0 * correct as f64 / total as f64
    }
}

/// Train a scorer on `sentences`.
///
/// Distillation training needs `votes` covering every sentence, from a
/// source that passes [`VoteFile::leakage_audit`].
pub fn train(
    sentences: &[Sentence],
    votes: Option<&VoteFile>,
    config: &TrainConfig,
    dev: Option<&[Sentence]>,
) -> Result<TrainOutcome> {
    if sentences.is_empty() {
        return Err(Error::usage("empty training treebank"));
    }
    if let Some(s) = sentences.iter().find(|s| s.gold.is_none()) {
        return Err(Error::usage(format!("training sentence {} has no gold tree", s.id)));
    }
    if config.cost == CostKind::Distillation {
        let votes = votes.ok_or_else(|| Error::usage("distillation training requires --votes"))?;
        votes.leakage_audit()?;
        for s in sentences {
            let table = votes
                .get(&s.id)
                .ok_or_else(|| Error::usage(format!("votes file has no entry for sentence {}", s.id)))?;
            if table.len() != s.len() {
                return Err(Error::usage(format!(
                    "votes for sentence {} cover {} words, sentence has {}",
                    s.id,
                    table.len(),
                    s.len()
                )));
            }
        }
    }

    let data: Vec<&Sentence> = sentences
        .iter()
        .filter(|s| config.decoder.admits(s.gold.as_ref().expect("checked above")))
        .collect();
    let excluded = sentences.len() - data.len();
    if excluded > 0 {
        warn!("excluded {excluded} sentences whose gold tree the {} decoder cannot produce", config.decoder);
    }
    if data.is_empty() {
        return Err(Error::usage("no training sentence is decodable with the chosen decoder"));
    }

    let scorer_config = ScorerConfig {
        init_seed: config.seed,
        ..config.scorer.clone()
    };
    let mut model = ScorerModel::new(scorer_config, sentences, config.embeddings.as_deref())?;
    let mut state = OptimizerState::new(config.adam(), model.params().len());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grad = vec![0.0; model.params().len()];
    let labeler = config.train_labeler && !model.labels().is_empty();

    let mut log = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, f64, ScorerModel)> = None;
    for epoch in 0..config.epochs {
        state.epoch = epoch;
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut total_loss = 0.0;
        for &i in &order {
            let sentence = data[i];
            let gold = sentence.gold.as_ref().expect("checked above");
            let spec = CostSpec::new(config.cost, votes.and_then(|v| v.get(&sentence.id)))?;
            let forward = model.forward(sentence);
            let (loss, witness) = hinge_loss(forward.scores(), gold, &spec, config.decoder)?;
            if !loss.is_finite() {
                return Err(Error::Training(format!(
                    "non-finite loss {loss} on sentence {} in epoch {epoch}",
                    sentence.id
                )));
            }
            total_loss += loss;
            let update_arcs = witness.heads() != gold.heads();
            if !update_arcs && !labeler {
                continue;
            }
            grad.iter_mut().for_each(|g| *g = 0.0);
            let upstream = update_arcs.then(|| hinge_subgradient(gold, &witness));
            model.accumulate_gradient(&forward, upstream.as_ref(), labeler.then_some(gold), &mut grad)?;
            adam_step(&mut state, model.params_mut(), &grad)
                .map_err(|e| Error::Training(format!("sentence {}: {e}", sentence.id)))?;
        }

        let train_uas = attachment_score(&model, sentences, config.decoder);
        let dev_uas = dev.map(|d| attachment_score(&model, d, config.decoder));
        let record = EpochRecord {
            epoch,
            mean_loss: total_loss / data.len() as f64,
            train_uas,
            dev_uas,
            lr: state.rate(),
        };
        info!("{}", record.log_line());
        if let Some(d) = dev_uas {
            if best.as_ref().is_none_or(|(_, b, _)| d > *b) {
                best = Some((epoch, d, model.clone()));
            }
        }
        log.push(record);
    }
    Ok(TrainOutcome {
        model,
        best: best.map(|(e, _, m)| (e, m)),
        log,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costs::hamming_cost;
    use crate::decoders::enumerate_trees;
    use crate::ensemble::{tally_votes, VoteTable};

    fn matrix(n: usize, entries: &[(usize, usize, f64)]) -> ArcScoreMatrix {
        let mut s = ArcScoreMatrix::zeros(n);
        for &(h, m, v) in entries {
            s.set(h, m, v);
        }
        s
    }

    #[test]
    fn zero_scores_maximize_hamming_distance() {
        let gold = ParseTree::unlabeled(vec![2, 0, 2]).unwrap();
        let scores = ArcScoreMatrix::zeros(3);
        for decoder in [Decoder::Eisner, Decoder::default()] {
            let w = cost_augmented_decode(&scores, &gold, &CostSpec::Hamming, decoder).unwrap();
            let best = enumerate_trees(3, decoder == Decoder::Eisner)
                .unwrap()
                .into_iter()
                .filter(|t| decoder.admits(t))
                .map(|t| hamming_cost(&gold, &t).unwrap())
                .fold(0.0, f64::max);
            assert_eq!(hamming_cost(&gold, &w).unwrap(), best);
        }
    }

    #[test]
    fn separated_gold_has_zero_loss() {
        let gold = ParseTree::unlabeled(vec![2, 0, 2]).unwrap();
        let scores = matrix(3, &[(2, 1, 10.0), (0, 2, 10.0), (2, 3, 10.0)]);
        let (loss, witness) = hinge_loss(&scores, &gold, &CostSpec::Hamming, Decoder::Eisner).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(witness.heads(), gold.heads());
        assert!(hinge_subgradient(&gold, &witness).arcs().all(|(_, _, x)| x == 0.0));
    }

    #[test]
    fn two_word_loss_matches_enumeration() {
        let gold = ParseTree::unlabeled(vec![0, 1]).unwrap();
        let scores = matrix(2, &[(0, 1, 1.0), (1, 2, 0.5), (0, 2, 0.8), (2, 1, 0.9)]);
        let sg = tree_score(&scores, &gold).unwrap();
        let brute = enumerate_trees(2, false)
            .unwrap()
            .into_iter()
            .map(|t| tree_score(&scores, &t).unwrap() + hamming_cost(&gold, &t).unwrap() - sg)
            .fold(f64::NEG_INFINITY, f64::max);
        let multi = Decoder::Cle { single_root: false };
        let (loss, _) = hinge_loss(&scores, &gold, &CostSpec::Hamming, multi).unwrap();
        assert!((loss - brute).abs() < 1e-12, "{loss} vs {brute}");
    }

    #[test]
    fn ensemble_preferred_error_still_costs_margin() {
        // gold attaches word 2 to word 1, the ensemble prefers the root
        let gold = ParseTree::unlabeled(vec![0, 1]).unwrap();
        let votes: VoteTable = tally_votes(
            &[
                ParseTree::unlabeled(vec![0, 0]).unwrap(),
                ParseTree::unlabeled(vec![0, 0]).unwrap(),
                ParseTree::unlabeled(vec![0, 1]).unwrap(),
            ],
            2,
        )
        .unwrap();
        let scores = matrix(2, &[(0, 1, 1.0), (1, 2, 0.2), (0, 2, 0.7)]);
        let spec = CostSpec::Distillation(&votes);
        let multi = Decoder::Cle { single_root: false };
        let (loss, witness) = hinge_loss(&scores, &gold, &spec, multi).unwrap();
        assert_eq!(witness.heads(), &[0, 0]);
        assert!((loss - 0.5).abs() < 1e-12);
    }
}
