//! Attachment scores with and without punctuation.
//!
//! `cargo run --example evaluate`

use distill_parse::eval::ENGLISH_PUNCT_TAGS;
use distill_parse::{evaluate, ParseTree, Punctuation, Sentence, Token};

fn main() {
    let words = [("dogs", "NNS"), ("bark", "VBP"), ("loudly", "RB"), (".", ".")];
    let tokens = words.iter().map(|(f, p)| Token::new(*f, *p)).collect();
    let labels = ["nsubj", "root", "advmod", "punct"].map(String::from).to_vec();
    let gold = ParseTree::new(vec![2, 0, 2, 2], labels).unwrap();
    let sentence = Sentence::new("s1", tokens, Some(gold)).unwrap();

    // Wrong label on "loudly", wrong head on the full stop.
    let pred = ParseTree::new(vec![2, 0, 2, 3], ["nsubj", "root", "obj", "punct"].map(String::from).to_vec()).unwrap();

    for mode in [Punctuation::Include, Punctuation::Exclude] {
        let report = evaluate(std::slice::from_ref(&sentence), std::slice::from_ref(&pred), mode, ENGLISH_PUNCT_TAGS).unwrap();
        println!("punctuation {mode}\n{report}");
    }
}
