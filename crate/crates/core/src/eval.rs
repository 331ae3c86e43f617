//! Attachment scores.
//!
//! UAS and LAS skip punctuation tokens in [`Punctuation::Exclude`] mode,
//! where a token is punctuation when its gold POS tag is in the supplied tag
//! set. UEM always looks at every token of a sentence.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::treebank::{ParseTree, Sentence};

/// Punctuation tags of the English Penn Treebank.
pub const ENGLISH_PUNCT_TAGS: &[&str] = &["``", "''", ":", ",", "."];
/// Punctuation tag of the Chinese Treebank.
pub const CHINESE_PUNCT_TAGS: &[&str] = &["PU"];
/// Punctuation tags of the German STTS tag set.
pub const GERMAN_PUNCT_TAGS: &[&str] = &["$.", "$,", "$("];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Punctuation {
    Include,
    Exclude,
}

impl FromStr for Punctuation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "include" => Ok(Punctuation::Include),
            "exclude" => Ok(Punctuation::Exclude),
            other => Err(Error::usage(format!("unknown punctuation mode '{other}'"))),
        }
    }
}

impl fmt::Display for Punctuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Punctuation::Include => "include",
            Punctuation::Exclude => "exclude",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub uas: f64,
    pub las: f64,
    pub uem: f64,
    pub counted_tokens: usize,
    pub excluded_tokens: usize,
    pub sentences: usize,
}

impl EvalReport {
    /// Machine-readable `key=value` lines.
    pub fn key_values(&self) -> String {
        format!(
            "uas={:.4}\nlas={:.4}\nuem={:.4}\ncounted_tokens={}\nexcluded_tokens={}\nsentences={}\n",
            self.uas, self.las, self.uem, self.counted_tokens, self.excluded_tokens, self.sentences
        )
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "UAS              {:>8.2}", self.uas)?;
        writeln!(f, "LAS              {:>8.2}", self.las)?;
        writeln!(f, "UEM              {:>8.2}", self.uem)?;
        writeln!(f, "counted tokens   {:>8}", self.counted_tokens)?;
        writeln!(f, "excluded tokens  {:>8}", self.excluded_tokens)?;
        writeln!(f, "sentences        {:>8}", self.sentences)
    }
}

fn percent(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        100.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

/// Score `pred` against the gold trees of `gold`.
pub fn evaluate<S: AsRef<str>>(
    gold: &[Sentence],
    pred: &[ParseTree],
    punctuation: Punctuation,
    punct_tags: &[S],
) -> Result<EvalReport> {
    if gold.len() != pred.len() {
        return Err(Error::usage(format!(
            "{} gold sentences but {} predicted trees",
            gold.len(),
            pred.len()
        )));
    }
    let is_punct = |tag: &str| punct_tags.iter().any(|t| t.as_ref() == tag);
    let (mut counted, mut excluded, mut uas, mut las, mut exact) = (0, 0, 0, 0, 0);
    for (sentence, p) in gold.iter().zip(pred) {
        let g = sentence.gold_tree()?;
        if p.len() != g.len() {
            return Err(Error::usage(format!(
                "sentence {}: predicted tree has {} words, gold has {}",
                sentence.id,
                p.len(),
                g.len()
            )));
        }
        if p.heads() == g.heads() {
            exact += 1;
        }
        for m in 1..=g.len() {
            if punctuation == Punctuation::Exclude && is_punct(&sentence.token(m).pos) {
                excluded += 1;
                continue;
            }
            counted += 1;
            if p.head(m) == g.head(m) {
                uas += 1;
                if p.label(m) == g.label(m) {
                    las += 1;
                }
            }
        }
    }
    Ok(EvalReport {
        uas: percent(uas, counted),
        las: percent(las, counted),
        uem: percent(exact, gold.len()),
        counted_tokens: counted,
        excluded_tokens: excluded,
        sentences: gold.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::Token;

    fn sentence(id: &str, tags: &[&str], heads: &[usize]) -> Sentence {
        let tokens = tags.iter().map(|t| Token::new("w", *t)).collect();
        let labels = heads.iter().map(|_| "dep".to_string()).collect();
        Sentence::new(id, tokens, Some(ParseTree::new(heads.to_vec(), labels).unwrap())).unwrap()
    }

    fn fixture(last_tag: &str) -> (Vec<Sentence>, Vec<ParseTree>) {
        let gold = vec![
            sentence("a", &["D", "N", "V", last_tag], &[2, 3, 0, 3]),
            sentence("b", &["D", "N", "V", "N"], &[2, 3, 0, 3]),
        ];
        let mut pred: Vec<ParseTree> = gold.iter().map(|s| s.gold.clone().unwrap()).collect();
        pred[0] = ParseTree::new(vec![2, 3, 0, 2], vec!["dep".into(); 4]).unwrap();
        (gold, pred)
    }

    #[test]
    fn one_head_error() {
        let (gold, pred) = fixture("N");
        let r = evaluate(&gold, &pred, Punctuation::Exclude, ENGLISH_PUNCT_TAGS).unwrap();
        assert_eq!((r.uas, r.las, r.uem), (87.5, 87.5, 50.0));
        assert_eq!((r.counted_tokens, r.excluded_tokens), (8, 0));
    }

    #[test]
    fn punctuation_error_is_excluded_but_breaks_exact_match() {
        let (gold, pred) = fixture(".");
        let r = evaluate(&gold, &pred, Punctuation::Exclude, ENGLISH_PUNCT_TAGS).unwrap();
        assert_eq!((r.uas, r.uem), (100.0, 50.0));
        assert_eq!((r.counted_tokens, r.excluded_tokens), (7, 1));
        let r = evaluate(&gold, &pred, Punctuation::Include, ENGLISH_PUNCT_TAGS).unwrap();
        assert_eq!((r.uas, r.uem), (87.5, 50.0));
    }

    #[test]
    fn label_error_only_hits_las() {
        let (gold, _) = fixture("N");
        let mut pred: Vec<ParseTree> = gold.iter().map(|s| s.gold.clone().unwrap()).collect();
        pred[1] = pred[1].clone().with_labels(vec!["dep".into(), "x".into(), "dep".into(), "dep".into()]).unwrap();
        let r = evaluate(&gold, &pred, Punctuation::Include, ENGLISH_PUNCT_TAGS).unwrap();
        assert_eq!((r.uas, r.las, r.uem), (100.0, 87.5, 100.0));
    }

    #[test]
    fn misaligned_input() {
        let (gold, pred) = fixture("N");
        assert!(evaluate(&gold, &pred[..1], Punctuation::Include, ENGLISH_PUNCT_TAGS).is_err());
    }
}
