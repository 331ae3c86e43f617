//! Train the sparse linear scorer on a synthetic treebank.
//!
//! `cargo run --release --example train_linear`

use distill_parse::eval::ENGLISH_PUNCT_TAGS;
use distill_parse::synth::{generate, SynthConfig};
use distill_parse::{evaluate, train, Decoder, ParseTree, Punctuation, TrainConfig};

fn main() {
    let train_set = generate(&SynthConfig { sentences: 300, seed: 1, ..SynthConfig::default() });
    let dev = generate(&SynthConfig { sentences: 100, seed: 2, ..SynthConfig::default() });

    let config = TrainConfig { epochs: 8, ..TrainConfig::linear() };
    let outcome = train(&train_set, None, &config, Some(&dev)).unwrap();
    println!("epoch, mean_loss, train_UAS, dev_UAS, lr");
    for record in &outcome.log {
        println!("{}", record.log_line());
    }

    let (epoch, model) = outcome.best.unwrap();
    let pred: Vec<ParseTree> = dev.iter().map(|s| model.parse(s, Decoder::Eisner)).collect();
    let report = evaluate(&dev, &pred, Punctuation::Exclude, ENGLISH_PUNCT_TAGS).unwrap();
    println!("best epoch {epoch}\n{report}");
}
