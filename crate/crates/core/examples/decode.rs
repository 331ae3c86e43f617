//! Projective and non-projective decoding of one score matrix.
//!
//! `cargo run --example decode`

use distill_parse::{cle_decode, eisner_decode, tree_score, ArcScoreMatrix};

fn main() {
    // Word 1 strongly prefers word 3 and word 2 prefers word 4; the
    // crossing arcs can only both be kept by the non-projective decoder.
    let mut scores = ArcScoreMatrix::from_fn(4, |_, _| 0.0);
    for (h, m, s) in [(0, 3, 5.0), (3, 1, 4.0), (4, 2, 4.0), (3, 4, 3.0), (1, 2, 1.0), (0, 1, 1.0)] {
        scores.set(h, m, s);
    }

    let projective = eisner_decode(&scores);
    let spanning = cle_decode(&scores);
    for (name, tree) in [("eisner", &projective), ("cle", &spanning)] {
        println!(
            "{name:<7} heads {:?}  score {:.1}  projective {}",
            tree.heads(),
            tree_score(&scores, tree).unwrap(),
            tree.is_projective()
        );
    }
}
