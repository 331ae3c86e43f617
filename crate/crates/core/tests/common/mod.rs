#![allow(dead_code)]

use distill_parse::decoders::for_each_tree;
use distill_parse::ensemble::VoteTable;
use distill_parse::{tally_votes, ArcScoreMatrix, EmbeddingTable, ParseTree, ScorerConfig, ScorerModel, Sentence, Token};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> ArcScoreMatrix {
    ArcScoreMatrix::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

/// A random dependency tree: nodes are visited in a random order and each
/// attaches to the root or to a node visited earlier.
pub fn random_heads(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    let mut heads = vec![0; n];
    for (i, &m) in order.iter().enumerate() {
        let pick = rng.gen_range(0..=i);
        heads[m - 1] = if pick == 0 { 0 } else { order[pick - 1] };
    }
    heads
}

pub fn random_tree(n: usize, rng: &mut ChaCha8Rng) -> ParseTree {
    ParseTree::unlabeled(random_heads(n, rng)).unwrap()
}

pub fn random_votes(gold: &ParseTree, voters: usize, rng: &mut ChaCha8Rng) -> VoteTable {
    let parses: Vec<ParseTree> = (0..voters)
        .map(|_| if rng.gen_bool(0.4) { gold.clone() } else { random_tree(gold.len(), rng) })
        .collect();
    tally_votes(&parses, gold.len()).unwrap()
}

/// Best value of `value(heads)` over every tree accepted by `keep`.
pub fn brute_max(n: usize, keep: impl Fn(&ParseTree) -> bool, mut value: impl FnMut(&ParseTree) -> f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for_each_tree(n, |heads| {
        let tree = ParseTree::unlabeled(heads.to_vec()).unwrap();
        if keep(&tree) {
            best = best.max(value(&tree));
        }
    })
    .unwrap();
    best
}

const FORMS: &[&str] = &["the", "dog", "saw", "a", "cat", "with", "telescope", "quietly"];
const TAGS: &[&str] = &["DT", "NN", "VBD", "IN", "RB"];
const LABELS: &[&str] = &["det", "nsubj", "obj", "prep", "root"];

pub fn random_sentence(id: &str, n: usize, rng: &mut ChaCha8Rng) -> Sentence {
    let tokens = (0..n)
        .map(|_| Token::new(*FORMS.choose(rng).unwrap(), *TAGS.choose(rng).unwrap()))
        .collect();
    let labels = (0..n).map(|_| LABELS.choose(rng).unwrap().to_string()).collect();
    let gold = ParseTree::new(random_heads(n, rng), labels).unwrap();
    Sentence::new(id, tokens, Some(gold)).unwrap()
}

pub fn random_embeddings(dim: usize, rng: &mut ChaCha8Rng) -> EmbeddingTable {
    EmbeddingTable::from_entries(
        FORMS[..5]
            .iter()
            .map(|f| (f.to_string(), (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()))
            .collect(),
    )
    .unwrap()
}

fn objective(model: &ScorerModel, sentence: &Sentence, upstream: &ArcScoreMatrix) -> f64 {
    let scores = model.score_arcs(sentence);
    let arc: f64 = scores.arcs().map(|(h, m, s)| upstream.get(h, m) * s).sum();
    arc + model.label_loss(sentence, sentence.gold.as_ref().unwrap())
}

pub struct GradientCheck {
    pub relative_error: f64,
    pub parameters: usize,
    pub pretrained_gradient: f64,
}

/// Compare the analytic gradient of `Σ upstream·s + label loss` with
/// central differences of step `step`. The relative error is
/// `‖g − ĝ‖ / max(‖g‖, ‖ĝ‖)`.
pub fn gradient_check(model: &mut ScorerModel, sentence: &Sentence, upstream: &ArcScoreMatrix, step: f64) -> GradientCheck {
    let forward = model.forward(sentence);
    let mut analytic = vec![0.0; model.params().len()];
    model
        .accumulate_gradient(&forward, Some(upstream), sentence.gold.as_ref(), &mut analytic)
        .unwrap();
    let frozen = model.segment("pretrained").unwrap_or(0..0);
    let mut numeric = vec![0.0; analytic.len()];
    for i in 0..analytic.len() {
        if frozen.contains(&i) {
            continue;
        }
        let original = model.params()[i];
        model.params_mut()[i] = original + step;
        let up = objective(model, sentence, upstream);
        model.params_mut()[i] = original - step;
        let down = objective(model, sentence, upstream);
        model.params_mut()[i] = original;
        numeric[i] = (up - down) / (2.0 * step);
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
    let scale = norm(&analytic).max(norm(&numeric)).max(1e-12);
    GradientCheck {
        relative_error: norm(&diff) / scale,
        parameters: analytic.len(),
        pretrained_gradient: analytic[frozen].iter().fold(0.0, |m: f64, g| m.max(g.abs())),
    }
}

/// Small BiLSTM shapes for checks, varied by `k`.
pub fn small_bilstm(k: u64) -> ScorerConfig {
    ScorerConfig {
        lstm_dim: 3 + (k % 3) as usize,
        lstm_layers: 1 + (k % 2) as usize,
        pos_dim: 2 + (k % 2) as usize,
        word_dim: 3,
        compose_dim: 4 + (k % 2) as usize,
        hidden_dim: 5,
        labeler_hidden: 4,
        init_seed: 1000 + k,
        ..ScorerConfig::bilstm()
    }
}
