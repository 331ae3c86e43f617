//! Seeded synthetic treebank.
//!
//! Sentences follow a small head-rule grammar:
//!
//! ```text
//! S  -> NP? V NP? PP* ADV? "."        (V heads the sentence)
//! NP -> DT? JJ* NN                    (NN heads the phrase)
//! PP -> IN NP                         (IN heads the phrase)
//! ```
//!
//! Each prepositional phrase attaches either to the verb or to the nearest
//! preceding noun, which keeps every tree projective. The choice follows an
//! additive lexical preference of the verb, preposition and noun, flipped
//! with probability `attachment_noise`. Without noise every attachment is a
//! linear function of the words, so the treebank is separable for an
//! arc-factored linear model.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::treebank::{ParseTree, Sentence, Token};

const DETERMINERS: &[&str] = &["the", "a", "this", "every"];
const ADJECTIVES: &[&str] = &[
    "old", "red", "small", "quiet", "heavy", "bright", "local", "new", "strange", "cold",
];
const NOUNS: &[&str] = &[
    "dog", "man", "woman", "telescope", "park", "city", "engineer", "report", "river", "train",
    "window", "station", "bridge", "garden", "letter", "company", "pump", "car", "system", "market",
    "teacher", "student", "road", "house", "boat", "music", "cook", "table", "knife", "storm",
];
const VERBS: &[&str] = &[
    "saw", "built", "painted", "found", "moved", "watched", "repaired", "sold", "visited", "heard",
    "opened", "carried", "read", "wrote", "followed",
];
const PREPOSITIONS: &[&str] = &["with", "in", "near", "from", "on", "for", "under"];
const ADVERBS: &[&str] = &["quickly", "today", "again", "carefully", "there"];

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub sentences: usize,
    pub seed: u64,
    /// Probability of overriding the lexical attachment preference of a PP.
    pub attachment_noise: f64,
    /// Upper bound on prepositional phrases per sentence.
    pub max_pps: usize,
    /// Distinct nouns, verbs and prepositions; beyond the built-in word
    /// lists, forms get a numeric suffix.
    pub nouns: usize,
    pub verbs: usize,
    pub prepositions: usize,
    /// Skew of noun, verb and preposition choice: word `k` of `size` is drawn as
    /// `floor(size * u^skew)` for uniform `u`, so 1 is uniform and larger
    /// values give a long tail of rare words.
    pub skew: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            sentences: 200,
            seed: 1,
            attachment_noise: 0.15,
            max_pps: 2,
            nouns: NOUNS.len(),
            verbs: VERBS.len(),
            prepositions: PREPOSITIONS.len(),
            skew: 1.0,
        }
    }
}

fn form(list: &[&str], k: usize) -> String {
    match k / list.len() {
        0 => list[k].to_string(),
        round => format!("{}{round}", list[k % list.len()]),
    }
}

fn pick(rng: &mut ChaCha8Rng, size: usize, skew: f64) -> usize {
    let u: f64 = rng.gen();
    ((size as f64 * u.powf(skew)) as usize).min(size - 1)
}

struct Builder<'a> {
    config: &'a SynthConfig,
    tokens: Vec<Token>,
    heads: Vec<usize>,
    labels: Vec<String>,
}

impl Builder<'_> {
    fn push(&mut self, form: &str, pos: &str) -> usize {
        self.tokens.push(Token::new(form, pos));
        self.heads.push(0);
        self.labels.push(String::new());
        self.tokens.len()
    }

    fn attach(&mut self, m: usize, h: usize, label: &str) {
        self.heads[m - 1] = h;
        self.labels[m - 1] = label.to_string();
    }

    /// DT? JJ* NN; returns the noun's position and word index.
    fn noun_phrase(&mut self, rng: &mut ChaCha8Rng) -> (usize, usize) {
        let mut dependents = Vec::new();
        if rng.gen_bool(0.7) {
            dependents.push((self.push(DETERMINERS.choose(rng).unwrap(), "DT"), "det"));
        }
        for _ in 0..rng.gen_range(0..=2) {
            if rng.gen_bool(0.5) {
                dependents.push((self.push(ADJECTIVES.choose(rng).unwrap(), "JJ"), "amod"));
            }
        }
        let word = pick(rng, self.config.nouns, self.config.skew);
        let noun = self.push(&form(NOUNS, word), "NN");
        for (d, label) in dependents {
            self.attach(d, noun, label);
        }
        (noun, word)
    }
}

/// Preference for verb attachment: a sum of per-word terms.
fn verb_preference(verb: usize, prep: usize, noun: usize) -> f64 {
    let prep_bias = 0.2 + 0.1 * ((prep * 5 + 6) % 7) as f64;
    let verb_bias = ((verb * 7 + 3) % 5) as f64 / 10.0 - 0.2;
    let noun_bias = ((noun * 11 + 5) % 7) as f64 / 20.0 - 0.15;
    prep_bias + verb_bias + noun_bias
}

/// Generate `config.sentences` projective, labeled sentences with ids
/// `synth-0`, `synth-1`, ...
pub fn generate(config: &SynthConfig) -> Vec<Sentence> {
    assert!(config.nouns > 0 && config.verbs > 0, "empty lexicon");
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    (0..config.sentences)
        .map(|i| {
            let mut b = Builder {
                config,
                tokens: Vec::new(),
                heads: Vec::new(),
                labels: Vec::new(),
            };
            let subject = rng.gen_bool(0.85).then(|| b.noun_phrase(&mut rng).0);
            let verb_word = pick(&mut rng, config.verbs, config.skew);
            let verb = b.push(&form(VERBS, verb_word), "VBD");
            b.attach(verb, 0, "root");
            if let Some(s) = subject {
                b.attach(s, verb, "nsubj");
            }
            let mut last_noun = None;
            if rng.gen_bool(0.8) {
                let (obj, word) = b.noun_phrase(&mut rng);
                b.attach(obj, verb, "obj");
                last_noun = Some((obj, word));
            }
            for _ in 0..rng.gen_range(0..=config.max_pps) {
                let prep_word = pick(&mut rng, config.prepositions, config.skew);
                let prep = b.push(&form(PREPOSITIONS, prep_word), "IN");
                let (pobj, pobj_word) = b.noun_phrase(&mut rng);
                b.attach(pobj, prep, "pobj");
                let head = match last_noun {
                    Some((noun, noun_word)) => {
                        let mut to_verb = verb_preference(verb_word, prep_word, noun_word) > 0.5;
                        if rng.gen_bool(config.attachment_noise) {
                            to_verb = !to_verb;
                        }
                        if to_verb {
                            verb
                        } else {
                            noun
                        }
                    }
                    None => verb,
                };
                b.attach(prep, head, "prep");
                last_noun = Some((pobj, pobj_word));
            }
            if rng.gen_bool(0.3) {
                let adv = b.push(ADVERBS.choose(&mut rng).unwrap(), "RB");
                b.attach(adv, verb, "advmod");
            }
            let stop = b.push(".", ".");
            b.attach(stop, verb, "punct");
            let tree = ParseTree::new(b.heads, b.labels).expect("grammar yields trees");
            Sentence::new(format!("synth-{i}"), b.tokens, Some(tree)).expect("aligned")
        })
        .collect()
}
