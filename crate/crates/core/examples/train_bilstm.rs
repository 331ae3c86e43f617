//! Train a small BiLSTM scorer with its labeler, then save and reload it.
//!
//! `cargo run --release --example train_bilstm`

use distill_parse::eval::ENGLISH_PUNCT_TAGS;
use distill_parse::synth::{generate, SynthConfig};
use distill_parse::{evaluate, train, Decoder, ParseTree, Punctuation, ScorerConfig, ScorerModel, TrainConfig};

fn main() {
    let train_set = generate(&SynthConfig { sentences: 150, seed: 3, ..SynthConfig::default() });
    let dev = generate(&SynthConfig { sentences: 100, seed: 4, ..SynthConfig::default() });

    let config = TrainConfig {
        epochs: 6,
        learning_rate: 0.005,
        scorer: ScorerConfig {
            lstm_dim: 16,
            compose_dim: 16,
            hidden_dim: 16,
            word_dim: 16,
            pos_dim: 8,
            labeler_hidden: 16,
            ..ScorerConfig::bilstm()
        },
        ..TrainConfig::bilstm()
    };
    let outcome = train(&train_set, None, &config, None).unwrap();
    for record in &outcome.log {
        println!("{}", record.log_line());
    }

    let path = std::env::temp_dir().join("distill-parse-example.model");
    outcome.model.save(&path).unwrap();
    let model = ScorerModel::load(&path).unwrap();
    println!("{} parameters, reloaded from {}", model.params().len(), path.display());

    let pred: Vec<ParseTree> = dev.iter().map(|s| model.parse(s, Decoder::Eisner)).collect();
    print!("{}", evaluate(&dev, &pred, Punctuation::Exclude, ENGLISH_PUNCT_TAGS).unwrap());
}
