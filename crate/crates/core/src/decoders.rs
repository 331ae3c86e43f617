//! Exact first-order decoders.
//!
//! All decoders maximize `Σ_m score(head(m), m)` over trees rooted at the
//! artificial node 0. [`eisner_decode`] searches projective trees only,
//! [`cle_decode`] searches all spanning arborescences.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::treebank::{check_tree, ParseTree};

/// Largest sentence length accepted by [`enumerate_trees`].
pub const MAX_ENUMERATION_LENGTH: usize = 8;

/// Dense arc scores `s(h, m)` for heads `0..=n` and modifiers `1..=n`.
#[derive(Clone, Debug, PartialEq)]
pub struct ArcScoreMatrix {
    n: usize,
    data: Vec<f64>,
}

impl ArcScoreMatrix {
    /// All-zero scores for a sentence of `n` words.
    pub fn zeros(n: usize) -> Self {
        ArcScoreMatrix {
            n,
            data: vec![0.0; (n + 1) * (n + 1)],
        }
    }

    /// Build from a function of `(head, modifier)`, called for every `h != m`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut matrix = ArcScoreMatrix::zeros(n);
        for m in 1..=n {
            for h in 0..=n {
                if h != m {
                    matrix.set(h, m, f(h, m));
                }
            }
        }
        matrix
    }

    /// Sentence length.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, head: usize, modifier: usize) -> f64 {
        debug_assert!(head != modifier && modifier >= 1 && modifier <= self.n);
        self.data[head * (self.n + 1) + modifier]
    }

    #[inline]
    pub fn set(&mut self, head: usize, modifier: usize, value: f64) {
        debug_assert!(head != modifier && modifier >= 1 && modifier <= self.n);
        self.data[head * (self.n + 1) + modifier] = value;
    }

    #[inline]
    pub fn add(&mut self, head: usize, modifier: usize, value: f64) {
        self.data[head * (self.n + 1) + modifier] += value;
    }

    /// Iterate over all candidate arcs `(h, m, score)`.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (1..=self.n).flat_map(move |m| {
            (0..=self.n)
                .filter(move |&h| h != m)
                .map(move |h| (h, m, self.get(h, m)))
        })
    }

    /// Elementwise sum with another matrix of the same length.
    pub fn plus(&self, other: &ArcScoreMatrix) -> Result<ArcScoreMatrix> {
        if other.n != self.n {
            return Err(Error::usage(format!(
                "score matrices of lengths {} and {}",
                self.n, other.n
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(ArcScoreMatrix { n: self.n, data })
    }

    /// Multiply every score by `factor`.
    pub fn scaled(&self, factor: f64) -> ArcScoreMatrix {
        ArcScoreMatrix {
            n: self.n,
            data: self.data.iter().map(|x| x * factor).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.arcs().all(|(_, _, s)| s.is_finite())
    }
}

/// Which exact decoder to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decoder {
    /// Projective decoding with Eisner's algorithm.
    Eisner,
    /// Maximum spanning arborescence; `single_root` allows one root child only.
    Cle { single_root: bool },
}

impl Decoder {
    pub fn decode(&self, scores: &ArcScoreMatrix) -> ParseTree {
        match *self {
            Decoder::Eisner => eisner_decode(scores),
            Decoder::Cle { single_root } => cle_decode_with(scores, single_root),
        }
    }

    /// Whether `tree` lies in this decoder's search space.
    pub fn admits(&self, tree: &ParseTree) -> bool {
        match *self {
            Decoder::Eisner => tree.is_projective(),
            Decoder::Cle { single_root: true } => tree.root_children() == 1,
            Decoder::Cle { single_root: false } => true,
        }
    }
}

impl Default for Decoder {
    fn default() -> Self {
        Decoder::Cle { single_root: true }
    }
}

impl FromStr for Decoder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "eisner" => Ok(Decoder::Eisner),
            "cle" | "mst" => Ok(Decoder::Cle { single_root: true }),
            "cle-multiroot" | "mst-multiroot" => Ok(Decoder::Cle { single_root: false }),
            other => Err(Error::usage(format!("unknown decoder '{other}'"))),
        }
    }
}

impl fmt::Display for Decoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decoder::Eisner => f.write_str("eisner"),
            Decoder::Cle { single_root: true } => f.write_str("cle"),
            Decoder::Cle { single_root: false } => f.write_str("cle-multiroot"),
        }
    }
}

/// Score of a tree: the sum of its arc scores in modifier order.
pub fn tree_score(scores: &ArcScoreMatrix, tree: &ParseTree) -> Result<f64> {
    if tree.len() != scores.len() {
        return Err(Error::usage(format!(
            "tree of {} words scored against a matrix for {}",
            tree.len(),
            scores.len()
        )));
    }
    Ok(tree.arcs().map(|(h, m)| scores.get(h, m)).sum())
}

/// Best projective tree (Eisner's algorithm, O(n³) time, O(n²) space).
///
/// The root may take several children. Ties between split points resolve
/// toward the later split, so uniform scores attach every word to the root.
pub fn eisner_decode(scores: &ArcScoreMatrix) -> ParseTree {
    let n = scores.len();
    assert!(n >= 1, "cannot decode an empty sentence");
    let size = n + 1;
    let idx = |s: usize, t: usize| s * size + t;
    let neg = f64::NEG_INFINITY;

    // Complete/incomplete spans, headed left (right-facing) or right (left-facing).
    let mut complete_r = vec![neg; size * size];
    let mut complete_l = vec![neg; size * size];
    let mut incomplete_r = vec![neg; size * size];
    let mut incomplete_l = vec![neg; size * size];
    let mut bp_complete_r = vec![0usize; size * size];
    let mut bp_complete_l = vec![0usize; size * size];
    let mut bp_incomplete_r = vec![0usize; size * size];
    let mut bp_incomplete_l = vec![0usize; size * size];

    for s in 0..size {
        complete_r[idx(s, s)] = 0.0;
        complete_l[idx(s, s)] = 0.0;
    }

    for width in 1..size {
        for s in 0..size - width {
            let t = s + width;

            // Incomplete items: an arc between s and t over two facing complete spans.
            let mut best = neg;
            let mut arg = s;
            for r in s..t {
                let v = complete_r[idx(s, r)] + complete_l[idx(r + 1, t)];
                if v >= best {
                    best = v;
                    arg = r;
                }
            }
            incomplete_r[idx(s, t)] = best + scores.get(s, t);
            bp_incomplete_r[idx(s, t)] = arg;
            if s > 0 {
                incomplete_l[idx(s, t)] = best + scores.get(t, s);
                bp_incomplete_l[idx(s, t)] = arg;
            }

            // Complete items headed at t: the root can never be a dependent.
            if s > 0 {
                let mut best = neg;
                let mut arg = s;
                for r in s..t {
                    let v = complete_l[idx(s, r)] + incomplete_l[idx(r, t)];
                    if v >= best {
                        best = v;
                        arg = r;
                    }
                }
                complete_l[idx(s, t)] = best;
                bp_complete_l[idx(s, t)] = arg;
            }

            // Complete items headed at s.
            let mut best = neg;
            let mut arg = s + 1;
            for r in s + 1..=t {
                let v = incomplete_r[idx(s, r)] + complete_r[idx(r, t)];
                if v >= best {
                    best = v;
                    arg = r;
                }
            }
            complete_r[idx(s, t)] = best;
            bp_complete_r[idx(s, t)] = arg;
        }
    }

    #[derive(Clone, Copy)]
    enum Item {
        CompleteR,
        CompleteL,
        IncompleteR,
        IncompleteL,
    }

    let mut heads = vec![0usize; n];
    let mut stack = vec![(Item::CompleteR, 0usize, n)];
    while let Some((item, s, t)) = stack.pop() {
        if s == t {
            continue;
        }
        match item {
            Item::CompleteR => {
                let r = bp_complete_r[idx(s, t)];
                stack.push((Item::IncompleteR, s, r));
                stack.push((Item::CompleteR, r, t));
            }
            Item::CompleteL => {
                let r = bp_complete_l[idx(s, t)];
                stack.push((Item::CompleteL, s, r));
                stack.push((Item::IncompleteL, r, t));
            }
            Item::IncompleteR => {
                heads[t - 1] = s;
                let r = bp_incomplete_r[idx(s, t)];
                stack.push((Item::CompleteR, s, r));
                stack.push((Item::CompleteL, r + 1, t));
            }
            Item::IncompleteL => {
                heads[s - 1] = t;
                let r = bp_incomplete_l[idx(s, t)];
                stack.push((Item::CompleteR, s, r));
                stack.push((Item::CompleteL, r + 1, t));
            }
        }
    }
    ParseTree::from_decoder(heads)
}

/// Best spanning arborescence with exactly one child of the root.
pub fn cle_decode(scores: &ArcScoreMatrix) -> ParseTree {
    cle_decode_with(scores, true)
}

/// Chu-Liu-Edmonds decoding. With `single_root`, the root takes exactly one
/// child; the unconstrained optimum is returned directly when it already has
/// one, otherwise every root child is tried and the best (lowest index on
/// ties) is kept.
pub fn cle_decode_with(scores: &ArcScoreMatrix, single_root: bool) -> ParseTree {
    let n = scores.len();
    assert!(n >= 1, "cannot decode an empty sentence");
    let size = n + 1;
    let mut weights = vec![vec![f64::NEG_INFINITY; size]; size];
    for (h, m, s) in scores.arcs() {
        weights[h][m] = s;
    }
    let heads = max_arborescence(&weights);
    let tree = ParseTree::from_decoder(heads[1..].to_vec());
    if !single_root || tree.root_children() == 1 {
        return tree;
    }

    let mut best: Option<(f64, ParseTree)> = None;
    for child in 1..=n {
        let mut restricted = weights.clone();
        for (m, w) in restricted[0].iter_mut().enumerate() {
            if m != child {
                *w = f64::NEG_INFINITY;
            }
        }
        let heads = max_arborescence(&restricted);
        let candidate = ParseTree::from_decoder(heads[1..].to_vec());
        let score = tree_score(scores, &candidate).expect("lengths agree");
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, candidate));
        }
    }
    best.expect("n >= 1").1
}

/// Maximum spanning arborescence rooted at node 0 over a dense weight
/// matrix `w[head][dep]`, `NEG_INFINITY` marking absent arcs. Returns the
/// parent of every node (`parent[0]` is unused).
fn max_arborescence(w: &[Vec<f64>]) -> Vec<usize> {
    let size = w.len();
    let mut parent = vec![0usize; size];
    for v in 1..size {
        let mut best = f64::NEG_INFINITY;
        let mut arg = usize::MAX;
        for u in 0..size {
            if u != v && w[u][v] > best {
                best = w[u][v];
                arg = u;
            }
        }
        assert!(arg != usize::MAX, "node {v} has no admissible head");
        parent[v] = arg;
    }

    let Some(cycle) = find_cycle(&parent) else {
        return parent;
    };

    let mut in_cycle = vec![false; size];
    for &v in &cycle {
        in_cycle[v] = true;
    }
    // Contracted graph: the cycle becomes node `c`, the last index.
    let outside: Vec<usize> = (0..size).filter(|&v| !in_cycle[v]).collect();
    let mut new_index = vec![usize::MAX; size];
    for (i, &v) in outside.iter().enumerate() {
        new_index[v] = i;
    }
    let c = outside.len();
    let new_size = c + 1;
    let mut cw = vec![vec![f64::NEG_INFINITY; new_size]; new_size];
    // For arcs entering the cycle: which cycle node they enter.
    let mut enter = vec![usize::MAX; new_size];
    // For arcs leaving the cycle: which cycle node they leave from.
    let mut leave = vec![usize::MAX; new_size];

    for (i, &u) in outside.iter().enumerate() {
        for (j, &v) in outside.iter().enumerate() {
            if u != v {
                cw[i][j] = w[u][v];
            }
        }
        let mut best = f64::NEG_INFINITY;
        let mut arg = usize::MAX;
        for &v in &cycle {
            let gain = w[u][v] - w[parent[v]][v];
            if w[u][v] > f64::NEG_INFINITY && gain > best {
                best = gain;
                arg = v;
            }
        }
        cw[i][c] = best;
        enter[i] = arg;
    }
    for (j, &v) in outside.iter().enumerate() {
        if v == 0 {
            continue;
        }
        let mut best = f64::NEG_INFINITY;
        let mut arg = usize::MAX;
        for &u in &cycle {
            if w[u][v] > best {
                best = w[u][v];
                arg = u;
            }
        }
        cw[c][j] = best;
        leave[j] = arg;
    }

    let contracted = max_arborescence(&cw);

    let mut result = parent.clone();
    for (j, &v) in outside.iter().enumerate() {
        if v == 0 {
            continue;
        }
        let p = contracted[j];
        result[v] = if p == c { leave[j] } else { outside[p] };
    }
    let from = contracted[c];
    let entry = enter[from];
    result[entry] = outside[from];
    result
}

fn find_cycle(parent: &[usize]) -> Option<Vec<usize>> {
    let size = parent.len();
    let mut color = vec![0u8; size];
    color[0] = 2;
    for start in 1..size {
        let mut path = Vec::new();
        let mut v = start;
        while color[v] == 0 {
            color[v] = 1;
            path.push(v);
            v = parent[v];
        }
        if color[v] == 1 {
            let pos = path.iter().position(|&x| x == v).expect("on path");
            return Some(path[pos..].to_vec());
        }
        for p in path {
            color[p] = 2;
        }
    }
    None
}

/// Every tree over `n` words, optionally restricted to projective trees.
/// Trees are produced in lexicographic order of their head sequences.
pub fn enumerate_trees(n: usize, projective_only: bool) -> Result<Vec<ParseTree>> {
    let mut trees = Vec::new();
    for_each_tree(n, |heads| {
        let tree = ParseTree::from_decoder(heads.to_vec());
        if !projective_only || tree.is_projective() {
            trees.push(tree);
        }
    })?;
    Ok(trees)
}

/// Call `f` with the head sequence of every tree over `n` words, in
/// lexicographic order.
pub fn for_each_tree(n: usize, mut f: impl FnMut(&[usize])) -> Result<()> {
    if n == 0 || n > MAX_ENUMERATION_LENGTH {
        return Err(Error::usage(format!(
            "tree enumeration supports 1..={MAX_ENUMERATION_LENGTH} words, got {n}"
        )));
    }
    let mut heads = vec![0usize; n];
    loop {
        if check_tree(&heads).is_ok() {
            f(&heads);
        }
        // Odometer increment from the last position.
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(());
            }
            pos -= 1;
            heads[pos] += 1;
            if heads[pos] == pos + 1 {
                heads[pos] += 1;
            }
            if heads[pos] <= n {
                break;
            }
            heads[pos] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> ArcScoreMatrix {
        ArcScoreMatrix::from_fn(n, |_, _| rng.gen_range(-5.0..5.0))
    }

    fn brute_max(scores: &ArcScoreMatrix, keep: impl Fn(&ParseTree) -> bool) -> f64 {
        enumerate_trees(scores.len(), false)
            .unwrap()
            .iter()
            .filter(|t| keep(t))
            .map(|t| tree_score(scores, t).unwrap())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn tree_counts() {
        assert_eq!(enumerate_trees(1, false).unwrap().len(), 1);
        let two = enumerate_trees(2, false).unwrap();
        let heads: Vec<&[usize]> = two.iter().map(|t| t.heads()).collect();
        assert_eq!(heads, vec![&[0, 0][..], &[0, 1], &[2, 0]]);
        for n in 1..=5 {
            let expected: usize = (n + 1usize).pow(n as u32 - 1);
            assert_eq!(enumerate_trees(n, false).unwrap().len(), expected, "n={n}");
        }
        assert!(enumerate_trees(9, false).is_err());
        assert!(enumerate_trees(0, false).is_err());
    }

    #[test]
    fn projective_counts_match_known_sequence() {
        // Projective dependency trees with a multi-child root: 1, 3, 12, 55, 273.
        let counts: Vec<usize> = (1..=5)
            .map(|n| enumerate_trees(n, true).unwrap().len())
            .collect();
        assert_eq!(counts, vec![1, 3, 12, 55, 273]);
    }

    #[test]
    fn single_word() {
        let mut s = ArcScoreMatrix::zeros(1);
        s.set(0, 1, -3.0);
        assert_eq!(eisner_decode(&s).heads(), &[0]);
        assert_eq!(cle_decode(&s).heads(), &[0]);
        assert_eq!(cle_decode_with(&s, false).heads(), &[0]);
    }

    #[test]
    fn tree_score_examples() {
        let mut s = ArcScoreMatrix::zeros(2);
        s.set(0, 1, 2.0);
        s.set(1, 2, 3.0);
        let t = ParseTree::unlabeled(vec![0, 1]).unwrap();
        assert_eq!(tree_score(&s, &t).unwrap(), 5.0);

        let mut one = ArcScoreMatrix::zeros(1);
        one.set(0, 1, 7.0);
        assert_eq!(tree_score(&one, &ParseTree::unlabeled(vec![0]).unwrap()).unwrap(), 7.0);

        let zeros = ArcScoreMatrix::zeros(4);
        for t in enumerate_trees(4, false).unwrap() {
            assert_eq!(tree_score(&zeros, &t).unwrap(), 0.0);
        }
        assert!(tree_score(&zeros, &t).is_err());
    }

    #[test]
    fn eisner_three_words_matches_projective_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_matrix(3, &mut rng);
        let best = brute_max(&s, ParseTree::is_projective);
        let decoded = eisner_decode(&s);
        assert!(decoded.is_projective());
        assert_eq!(tree_score(&s, &decoded).unwrap(), best);
    }

    #[test]
    fn uniform_scores_give_canonical_trees() {
        for n in 1..=6 {
            let s = ArcScoreMatrix::from_fn(n, |_, _| 1.0);
            // every tree scores n, so only the tie-break decides
            assert_eq!(brute_max(&s, |_| true), n as f64);
            assert_eq!(eisner_decode(&s).heads(), vec![0; n].as_slice());
            assert_eq!(cle_decode_with(&s, false).heads(), vec![0; n].as_slice());
            let mut single = vec![1; n];
            single[0] = 0;
            assert_eq!(cle_decode(&s).heads(), single.as_slice());
        }
    }

    #[test]
    fn cle_two_word_tie_prefers_lower_heads() {
        let mut s = ArcScoreMatrix::zeros(2);
        s.set(0, 1, 1.0);
        s.set(0, 2, 1.0);
        s.set(1, 2, 5.0);
        s.set(2, 1, 5.0);
        // [0,0] = 2, [0,1] = 6, [2,0] = 6
        assert_eq!(brute_max(&s, |_| true), 6.0);
        assert_eq!(cle_decode_with(&s, false).heads(), &[0, 1]);
        assert_eq!(cle_decode(&s).heads(), &[0, 1]);
    }

    #[test]
    fn cle_contracts_two_cycle() {
        // Greedy heads: 1 <- 2, 2 <- 1 (a cycle); 3 <- 2.
        let mut s = ArcScoreMatrix::from_fn(3, |_, _| 0.0);
        s.set(2, 1, 10.0);
        s.set(1, 2, 10.0);
        s.set(0, 1, 1.0);
        s.set(0, 2, 3.0);
        s.set(2, 3, 4.0);
        s.set(1, 3, 2.0);
        let decoded = cle_decode_with(&s, false);
        assert_eq!(tree_score(&s, &decoded).unwrap(), brute_max(&s, |_| true));
        assert_eq!(decoded.heads(), &[2, 0, 2]);
    }

    #[test]
    fn decoders_agree_with_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=5 {
            for _ in 0..40 {
                let s = random_matrix(n, &mut rng);
                let e = eisner_decode(&s);
                assert!(e.is_projective());
                assert_eq!(tree_score(&s, &e).unwrap(), brute_max(&s, ParseTree::is_projective));
                let c = cle_decode_with(&s, false);
                assert_eq!(tree_score(&s, &c).unwrap(), brute_max(&s, |_| true));
                let c1 = cle_decode(&s);
                assert_eq!(c1.root_children(), 1);
                assert_eq!(
                    tree_score(&s, &c1).unwrap(),
                    brute_max(&s, |t| t.root_children() == 1)
                );
            }
        }
    }

    #[test]
    fn decoder_parsing() {
        assert_eq!("eisner".parse::<Decoder>().unwrap(), Decoder::Eisner);
        assert_eq!("MST".parse::<Decoder>().unwrap(), Decoder::Cle { single_root: true });
        assert!("viterbi".parse::<Decoder>().is_err());
        for d in [Decoder::Eisner, Decoder::Cle { single_root: true }, Decoder::Cle { single_root: false }] {
            assert_eq!(d.to_string().parse::<Decoder>().unwrap(), d);
        }
    }
}
