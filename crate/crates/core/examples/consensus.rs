//! Minimum Bayes risk consensus over a handful of parses.
//!
//! `cargo run --example consensus`

use distill_parse::{mbr_parse, tally_votes, Decoder, ParseTree};

fn tree(heads: &[usize], labels: &[&str]) -> ParseTree {
    ParseTree::new(heads.to_vec(), labels.iter().map(|l| l.to_string()).collect()).unwrap()
}

fn main() {
    // "she saw the man with binoculars", five disagreeing parsers.
    let labels = ["nsubj", "root", "det", "obj", "prep", "pobj"];
    let parses = vec![
        tree(&[2, 0, 4, 2, 2, 5], &labels),
        tree(&[2, 0, 4, 2, 4, 5], &labels),
        tree(&[2, 0, 4, 2, 2, 5], &labels),
        tree(&[2, 0, 2, 2, 4, 5], &["nsubj", "root", "dep", "obj", "prep", "pobj"]),
        tree(&[4, 0, 4, 2, 2, 5], &["det", "root", "det", "obj", "prep", "pobj"]),
    ];
    let votes = tally_votes(&parses, 6).unwrap();

    for m in 1..=votes.len() {
        let arcs: Vec<String> = (0..=votes.len())
            .filter(|&h| h != m && votes.votes(h, m) > 0)
            .map(|h| format!("{h}:{:.1}", votes.posterior(h, m)))
            .collect();
        println!("word {m}  heads {}", arcs.join(" "));
    }

    let consensus = mbr_parse(&votes, Decoder::Eisner);
    println!("consensus heads  {:?}", consensus.heads());
    println!("consensus labels {:?}", consensus.labels());
    println!("expected Hamming x N = {}", votes.expected_hamming_times_n(&consensus));
}
