//! Hamming versus ensemble-aware cost of the same mistakes.
//!
//! `cargo run --example distillation_cost`

use distill_parse::{distillation_cost, hamming_cost, per_arc_cost, tally_votes, CostKind, CostSpec, ParseTree};

fn main() {
    let gold = ParseTree::unlabeled(vec![2, 0, 4, 2, 2]).unwrap();
    // Four voters: three agree with gold, one attaches word 5 to word 4.
    let members: Vec<ParseTree> = [[2, 0, 4, 2, 2], [2, 0, 4, 2, 2], [2, 0, 4, 2, 4], [2, 0, 4, 2, 2]]
        .iter()
        .map(|h| ParseTree::unlabeled(h.to_vec()).unwrap())
        .collect();
    let votes = tally_votes(&members, 5).unwrap();

    for (what, heads) in [("plausible error", [2, 0, 4, 2, 4]), ("implausible error", [2, 0, 4, 2, 1])] {
        let pred = ParseTree::unlabeled(heads.to_vec()).unwrap();
        println!(
            "{what:<18} hamming {:.3}  distillation {:.3}",
            hamming_cost(&gold, &pred).unwrap(),
            distillation_cost(&gold, &pred, &votes).unwrap()
        );
    }

    let spec = CostSpec::new(CostKind::Distillation, Some(&votes)).unwrap();
    let costs = per_arc_cost(&gold, &spec).unwrap();
    println!("per-arc cost of attaching word 5:");
    for h in 0..=5 {
        if h != 5 {
            println!("  head {h}: {:.3}", costs.get(h, 5));
        }
    }
}
