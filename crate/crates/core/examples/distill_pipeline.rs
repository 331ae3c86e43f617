//! Jackknifed votes on the training set, then a model distilled from them.
//!
//! `cargo run --release --example distill_pipeline`

use distill_parse::ensemble::build_training_votes;
use distill_parse::eval::ENGLISH_PUNCT_TAGS;
use distill_parse::synth::{generate, SynthConfig};
use distill_parse::{evaluate, jackknife_split, train, CostKind, Decoder, ParseTree, Punctuation, TrainConfig};

fn main() {
    let train_set = generate(&SynthConfig { sentences: 400, seed: 5, ..SynthConfig::default() });
    let dev = generate(&SynthConfig { sentences: 200, seed: 6, ..SynthConfig::default() });
    let base = TrainConfig { epochs: 5, ..TrainConfig::linear() };

    // Each fold model votes only on sentences it never saw.
    let plan = jackknife_split(&train_set, 3, 7).unwrap();
    let votes = build_training_votes(&train_set, &plan, &base, 6, 0).unwrap();
    votes.leakage_audit().unwrap();
    println!("{} sentences with votes from {} voters each", votes.len(), votes.sentences()[0].table.ensemble_size());

    let uas = |config: &TrainConfig, votes| {
        let model = train(&train_set, votes, config, None).unwrap().model;
        let pred: Vec<ParseTree> = dev.iter().map(|s| model.parse(s, Decoder::Eisner)).collect();
        evaluate(&dev, &pred, Punctuation::Exclude, ENGLISH_PUNCT_TAGS).unwrap().uas
    };
    println!("hamming      dev UAS {:.2}", uas(&base, None));
    let distilled = TrainConfig { cost: CostKind::Distillation, ..base.clone() };
    println!("distillation dev UAS {:.2}", uas(&distilled, Some(&votes)));
}
