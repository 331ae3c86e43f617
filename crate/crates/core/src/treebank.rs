//! Sentence and tree data model, CoNLL-X/CoNLL-U reading and writing, and
//! pretrained embedding ingestion.
//!
//! Word positions are 1-based; position 0 is the artificial root. A
//! [`ParseTree`] stores one head per word, so `tree.head(m)` is the parent
//! of word `m` and a head of 0 attaches the word to the root.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Label used when a tree carries no dependency relations.
pub const EMPTY_LABEL: &str = "";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub form: String,
    pub pos: String,
}

impl Token {
    pub fn new(form: impl Into<String>, pos: impl Into<String>) -> Self {
        Token {
            form: form.into(),
            pos: pos.into(),
        }
    }
}

/// A dependency tree over words `1..=n`, rooted at the artificial node 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ParseTree {
    heads: Vec<usize>,
    labels: Vec<String>,
}

impl ParseTree {
    /// Build a labeled tree, checking that the heads form a tree rooted at 0.
    pub fn new(heads: Vec<usize>, labels: Vec<String>) -> Result<Self> {
        if heads.len() != labels.len() {
            return Err(Error::usage(format!(
                "{} heads but {} labels",
                heads.len(),
                labels.len()
            )));
        }
        check_tree(&heads)?;
        Ok(ParseTree { heads, labels })
    }

    /// Build an unlabeled tree (every label empty).
    pub fn unlabeled(heads: Vec<usize>) -> Result<Self> {
        let labels = vec![EMPTY_LABEL.to_string(); heads.len()];
        ParseTree::new(heads, labels)
    }

    /// Build a tree from heads produced by a decoder. The caller guarantees
    /// tree validity; it is re-checked in debug builds.
    pub(crate) fn from_decoder(heads: Vec<usize>) -> Self {
        debug_assert!(check_tree(&heads).is_ok(), "decoder produced non-tree {heads:?}");
        let labels = vec![EMPTY_LABEL.to_string(); heads.len()];
        ParseTree { heads, labels }
    }

    /// Number of words.
    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    /// Head of word `m` (1-based).
    pub fn head(&self, m: usize) -> usize {
        self.heads[m - 1]
    }

    /// Label of the arc entering word `m` (1-based).
    pub fn label(&self, m: usize) -> &str {
        &self.labels[m - 1]
    }

    /// Heads in word order: `heads()[m - 1]` is the head of word `m`.
    pub fn heads(&self) -> &[usize] {
        &self.heads
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Iterate over `(head, modifier)` arcs in modifier order.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.heads.iter().enumerate().map(|(i, &h)| (h, i + 1))
    }

    /// Replace the labels, keeping the heads.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.heads.len() {
            return Err(Error::usage(format!(
                "{} labels for a tree of {} words",
                labels.len(),
                self.heads.len()
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    /// Number of words attached directly to the artificial root.
    pub fn root_children(&self) -> usize {
        self.heads.iter().filter(|&&h| h == 0).count()
    }

    /// True when every word between a head and its modifier is dominated by
    /// the head (position 0 is the leftmost node).
    pub fn is_projective(&self) -> bool {
        let n = self.heads.len();
        for m in 1..=n {
            let h = self.head(m);
            let (lo, hi) = if h < m { (h, m) } else { (m, h) };
            for k in lo + 1..hi {
                if !self.dominates(h, k) {
                    return false;
                }
            }
        }
        true
    }

    /// Whether `ancestor` lies on the path from `node` to the root.
    pub fn dominates(&self, ancestor: usize, mut node: usize) -> bool {
        if ancestor == 0 {
            return true;
        }
        while node != 0 {
            if node == ancestor {
                return true;
            }
            node = self.heads[node - 1];
        }
        false
    }
}

/// Check that `heads` (heads[m-1] = head of m) is a tree rooted at 0.
pub fn check_tree(heads: &[usize]) -> Result<()> {
    let n = heads.len();
    if n == 0 {
        return Err(Error::InvalidTree("tree has no words".into()));
    }
    for (i, &h) in heads.iter().enumerate() {
        let m = i + 1;
        if h > n {
            return Err(Error::InvalidTree(format!(
                "head {h} of word {m} out of range 0..={n}"
            )));
        }
        if h == m {
            return Err(Error::InvalidTree(format!("word {m} is its own head")));
        }
    }
    // 0 = unvisited, 1 = on current path, 2 = known to reach the root.
    let mut state = vec![0u8; n + 1];
    state[0] = 2;
    for start in 1..=n {
        let mut path = Vec::new();
        let mut node = start;
        while state[node] == 0 {
            state[node] = 1;
            path.push(node);
            node = heads[node - 1];
        }
        if state[node] == 1 {
            return Err(Error::InvalidTree(format!("cycle through word {node}")));
        }
        for p in path {
            state[p] = 2;
        }
    }
    Ok(())
}

impl fmt::Display for ParseTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.heads)
    }
}

/// A tokenized sentence with an optional gold tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    pub id: String,
    pub tokens: Vec<Token>,
    pub gold: Option<ParseTree>,
}

impl Sentence {
    pub fn new(id: impl Into<String>, tokens: Vec<Token>, gold: Option<ParseTree>) -> Result<Self> {
        let id = id.into();
        if tokens.is_empty() {
            return Err(Error::usage(format!("sentence {id} has no tokens")));
        }
        if let Some(g) = &gold {
            if g.len() != tokens.len() {
                return Err(Error::usage(format!(
                    "sentence {id}: gold tree has {} heads for {} tokens",
                    g.len(),
                    tokens.len()
                )));
            }
        }
        Ok(Sentence { id, tokens, gold })
    }

    /// Number of words (excluding the root).
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token at 1-based position `m`.
    pub fn token(&self, m: usize) -> &Token {
        &self.tokens[m - 1]
    }

    /// The gold tree, or a usage error naming the sentence.
    pub fn gold_tree(&self) -> Result<&ParseTree> {
        self.gold
            .as_ref()
            .ok_or_else(|| Error::usage(format!("sentence {} has no gold tree", self.id)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConllFormat {
    ConllX,
    ConllU,
}

impl FromStr for ConllFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "conllx" | "conll-x" => Ok(ConllFormat::ConllX),
            "conllu" | "conll-u" => Ok(ConllFormat::ConllU),
            other => Err(Error::usage(format!("unknown CoNLL format '{other}'"))),
        }
    }
}

impl fmt::Display for ConllFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConllFormat::ConllX => f.write_str("conllx"),
            ConllFormat::ConllU => f.write_str("conllu"),
        }
    }
}

struct PendingRow {
    line: usize,
    form: String,
    pos: String,
    head: Option<usize>,
    label: String,
}

/// Read sentences from a CoNLL-X or CoNLL-U stream.
///
/// The POS tag is taken from the fine-grained column (POSTAG/XPOS) and falls
/// back to the coarse column when that is `_`. A sentence whose head column
/// is `_` throughout has no gold tree. Gold trees that are not trees are
/// rejected.
pub fn read_conll<R: BufRead>(source: R, format: ConllFormat) -> Result<Vec<Sentence>> {
    let mut sentences = Vec::new();
    let mut rows: Vec<PendingRow> = Vec::new();
    let mut sent_id: Option<String> = None;
    let mut block_start = 1;

    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() {
            if !rows.is_empty() {
                let id = sent_id.take().unwrap_or_else(|| format!("s{}", sentences.len() + 1));
                sentences.push(finish_block(id, std::mem::take(&mut rows), block_start)?);
            }
            sent_id = None;
            block_start = line_no + 1;
            continue;
        }
        if trimmed.starts_with('#') && rows.is_empty() {
            if format == ConllFormat::ConllU {
                if let Some(rest) = trimmed.strip_prefix("# sent_id") {
                    let rest = rest.trim_start().trim_start_matches('=').trim();
                    if !rest.is_empty() {
                        sent_id = Some(rest.to_string());
                    }
                }
                continue;
            }
            return Err(Error::Parse {
                line: line_no,
                message: "comment lines are not allowed in CoNLL-X".into(),
            });
        }
        let cols: Vec<&str> = trimmed.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }
        let id_field = cols[0];
        if id_field.contains('-') || id_field.contains('.') {
            if format == ConllFormat::ConllU {
                // multiword token range or empty node
                continue;
            }
            return Err(Error::Parse {
                line: line_no,
                message: format!("token id '{id_field}' is not an integer"),
            });
        }
        let id: usize = id_field.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("token id '{id_field}' is not an integer"),
        })?;
        if id != rows.len() + 1 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("token id {id} out of sequence (expected {})", rows.len() + 1),
            });
        }
        let head = match cols[6] {
            "_" => None,
            h => Some(h.parse::<usize>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("head field '{h}' is not an integer"),
            })?),
        };
        let pos = if cols[4] != "_" { cols[4] } else { cols[3] };
        let label = if cols[7] == "_" { EMPTY_LABEL } else { cols[7] };
        rows.push(PendingRow {
            line: line_no,
            form: cols[1].to_string(),
            pos: pos.to_string(),
            head,
            label: label.to_string(),
        });
    }
    if !rows.is_empty() {
        let id = sent_id.take().unwrap_or_else(|| format!("s{}", sentences.len() + 1));
        sentences.push(finish_block(id, rows, block_start)?);
    }
    Ok(sentences)
}

fn finish_block(id: String, rows: Vec<PendingRow>, block_start: usize) -> Result<Sentence> {
    let n = rows.len();
    let with_heads = rows.iter().filter(|r| r.head.is_some()).count();
    let gold = if with_heads == 0 {
        None
    } else {
        if with_heads != n {
            let line = rows.iter().find(|r| r.head.is_none()).map_or(block_start, |r| r.line);
            return Err(Error::Parse {
                line,
                message: format!("sentence {id}: head missing for some tokens"),
            });
        }
        let heads: Vec<usize> = rows.iter().map(|r| r.head.unwrap_or(0)).collect();
        if let Some(bad) = rows.iter().find(|r| r.head.is_some_and(|h| h > n)) {
            return Err(Error::InvalidTree(format!(
                "sentence {id} (line {}): head {} out of range 0..={n}",
                bad.line,
                bad.head.unwrap_or(0)
            )));
        }
        let labels = rows.iter().map(|r| r.label.clone()).collect();
        Some(ParseTree::new(heads, labels).map_err(|e| match e {
            Error::InvalidTree(msg) => {
                Error::InvalidTree(format!("sentence {id} (line {block_start}): {msg}"))
            }
            other => other,
        })?)
    };
    let tokens = rows
        .into_iter()
        .map(|r| Token {
            form: r.form,
            pos: r.pos,
        })
        .collect();
    Sentence::new(id, tokens, gold)
}

/// Write sentences with the given trees. Forms and tags come from the
/// sentences, heads and labels from the trees.
pub fn write_conll<W: Write>(
    mut out: W,
    sentences: &[Sentence],
    trees: &[ParseTree],
    format: ConllFormat,
) -> Result<()> {
    if sentences.len() != trees.len() {
        return Err(Error::usage(format!(
            "{} sentences but {} trees",
            sentences.len(),
            trees.len()
        )));
    }
    for (i, (sentence, tree)) in sentences.iter().zip(trees).enumerate() {
        if sentence.len() != tree.len() {
            return Err(Error::usage(format!(
                "sentence {} has {} tokens but its tree has {}",
                sentence.id,
                sentence.len(),
                tree.len()
            )));
        }
        if i > 0 {
            writeln!(out)?;
        }
        if format == ConllFormat::ConllU {
            writeln!(out, "# sent_id = {}", sentence.id)?;
        }
        for (idx, token) in sentence.tokens.iter().enumerate() {
            let m = idx + 1;
            let label = match tree.label(m) {
                EMPTY_LABEL => "_",
                l => l,
            };
            writeln!(
                out,
                "{m}\t{}\t_\t{}\t{}\t_\t{}\t{}\t_\t_",
                token.form,
                token.pos,
                token.pos,
                tree.head(m),
                label
            )?;
        }
    }
    if !sentences.is_empty() {
        writeln!(out)?;
    }
    Ok(())
}

/// Write sentences with their gold trees; fails on a sentence without one.
pub fn write_gold<W: Write>(out: W, sentences: &[Sentence], format: ConllFormat) -> Result<()> {
    let trees = sentences
        .iter()
        .map(|s| s.gold_tree().cloned())
        .collect::<Result<Vec<_>>>()?;
    write_conll(out, sentences, &trees, format)
}

/// Pretrained word vectors keyed by surface form.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    entries: HashMap<String, Vec<f64>>,
    forms: Vec<String>,
    unk: Vec<f64>,
}

impl EmbeddingTable {
    /// Build a table from `(form, vector)` pairs; the UNK vector is the mean.
    pub fn from_entries(entries: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let dimension = entries.first().map(|(_, v)| v.len()).unwrap_or(0);
        if dimension == 0 {
            return Err(Error::Format {
                line: 0,
                message: "embedding table is empty".into(),
            });
        }
        let mut unk = vec![0.0; dimension];
        let mut map = HashMap::with_capacity(entries.len());
        let mut forms = Vec::with_capacity(entries.len());
        let rows = entries.len();
        for (i, (form, vec)) in entries.into_iter().enumerate() {
            if vec.len() != dimension {
                return Err(Error::Format {
                    line: i + 1,
                    message: format!("expected {dimension} values, found {}", vec.len()),
                });
            }
            for (u, x) in unk.iter_mut().zip(&vec) {
                *u += x;
            }
            if map.insert(form.clone(), vec).is_none() {
                forms.push(form);
            }
        }
        // Duplicate forms keep the last vector, but every row enters the mean.
        let count = rows as f64;
        for u in &mut unk {
            *u /= count;
        }
        Ok(EmbeddingTable {
            dimension,
            entries: map,
            forms,
            unk,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Forms in file order.
    pub fn forms(&self) -> &[String] {
        &self.forms
    }

    pub fn contains(&self, form: &str) -> bool {
        self.entries.contains_key(form)
    }

    /// Vector for `form`, or the UNK vector for unknown forms.
    pub fn lookup(&self, form: &str) -> &[f64] {
        self.entries.get(form).map_or(&self.unk, Vec::as_slice)
    }

    pub fn unk(&self) -> &[f64] {
        &self.unk
    }
}

/// Read whitespace-separated `form v1 ... vd` lines. A leading `count dim`
/// header line is skipped.
pub fn read_embeddings<R: BufRead>(source: R) -> Result<EmbeddingTable> {
    let mut entries = Vec::new();
    let mut dimension: Option<usize> = None;
    let mut header_dim: Option<usize> = None;
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if entries.is_empty()
            && header_dim.is_none()
            && fields.len() == 2
            && fields.iter().all(|f| f.parse::<usize>().is_ok())
        {
            header_dim = fields[1].parse().ok();
            continue;
        }
        let values = fields[1..]
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| Error::Format {
                    line: line_no,
                    message: format!("'{f}' is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let expected = *dimension.get_or_insert(header_dim.unwrap_or(values.len()));
        if values.len() != expected || expected == 0 {
            return Err(Error::Format {
                line: line_no,
                message: format!("expected {expected} values, found {}", values.len()),
            });
        }
        entries.push((fields[0].to_string(), values));
    }
    if entries.is_empty() {
        return Err(Error::Format {
            line: 0,
            message: "no embedding entries".into(),
        });
    }
    EmbeddingTable::from_entries(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    const JOHN_SAW: &str = "1\tJohn\t_\tNNP\tNNP\t_\t2\tnsubj\t_\t_\n\
                            2\tsaw\t_\tVBD\tVBD\t_\t0\troot\t_\t_\n";

    #[test]
    fn reads_two_word_block() {
        let s = read_conll(JOHN_SAW.as_bytes(), ConllFormat::ConllX).unwrap();
        assert_eq!(s.len(), 1);
        let gold = s[0].gold.as_ref().unwrap();
        assert_eq!(gold.heads(), &[2, 0]);
        assert_eq!(gold.labels(), &["nsubj".to_string(), "root".to_string()]);
        assert_eq!(s[0].token(1).form, "John");
        assert_eq!(s[0].token(2).pos, "VBD");
    }

    #[test]
    fn empty_input_gives_no_sentences() {
        assert!(read_conll("".as_bytes(), ConllFormat::ConllU).unwrap().is_empty());
        assert!(read_conll("\n\n".as_bytes(), ConllFormat::ConllX).unwrap().is_empty());
    }

    #[test]
    fn non_integer_head_names_line() {
        let text = "1\tJohn\t_\tNNP\tNNP\t_\t2\tnsubj\t_\t_\n2\tsaw\t_\tVBD\tVBD\t_\tx\troot\t_\t_\n";
        match read_conll(text.as_bytes(), ConllFormat::ConllX) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn out_of_range_head_is_validation_error() {
        let text = "1\tJohn\t_\tNNP\tNNP\t_\t7\tnsubj\t_\t_\n2\tsaw\t_\tVBD\tVBD\t_\t0\troot\t_\t_\n";
        assert!(matches!(
            read_conll(text.as_bytes(), ConllFormat::ConllX),
            Err(Error::InvalidTree(_))
        ));
    }

    #[test]
    fn cyclic_gold_is_rejected() {
        let text = "1\ta\t_\tX\tX\t_\t2\tdep\t_\t_\n2\tb\t_\tX\tX\t_\t1\tdep\t_\t_\n";
        assert!(matches!(
            read_conll(text.as_bytes(), ConllFormat::ConllX),
            Err(Error::InvalidTree(_))
        ));
    }

    #[test]
    fn conllu_skips_ranges_and_empty_nodes() {
        let text = "# sent_id = d1\n# text = vom Haus\n1-2\tvom\t_\t_\t_\t_\t_\t_\t_\t_\n\
                    1\tvon\t_\tADP\tAPPR\t_\t3\tcase\t_\t_\n2\tdem\t_\tDET\tART\t_\t3\tdet\t_\t_\n\
                    2.1\tx\t_\t_\t_\t_\t_\t_\t_\t_\n3\tHaus\t_\tNOUN\tNN\t_\t0\troot\t_\t_\n";
        let s = read_conll(text.as_bytes(), ConllFormat::ConllU).unwrap();
        assert_eq!(s[0].id, "d1");
        assert_eq!(s[0].len(), 3);
        assert_eq!(s[0].gold.as_ref().unwrap().heads(), &[3, 3, 0]);
        assert_eq!(s[0].token(1).pos, "APPR");
    }

    #[test]
    fn non_projective_gold_is_accepted() {
        // 1 <- 3, 2 <- 0, 3 <- 2, 4 <- 1: arc (1,4) crosses (2,3)? 1..4 contains 2,3
        // which are not dominated by 1.
        let tree = ParseTree::unlabeled(vec![3, 0, 2, 1]).unwrap();
        assert!(!tree.is_projective());
        let sent = Sentence::new(
            "np",
            (0..4).map(|i| Token::new(format!("w{i}"), "X")).collect(),
            Some(tree.clone()),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_conll(&mut buf, &[sent], &[tree], ConllFormat::ConllX).unwrap();
        assert!(read_conll(buf.as_slice(), ConllFormat::ConllX).is_ok());
    }

    #[test]
    fn write_then_read_reproduces_tree() {
        let s = read_conll(JOHN_SAW.as_bytes(), ConllFormat::ConllX).unwrap();
        let trees: Vec<ParseTree> = s.iter().map(|s| s.gold.clone().unwrap()).collect();
        let mut buf = Vec::new();
        write_conll(&mut buf, &s, &trees, ConllFormat::ConllU).unwrap();
        let back = read_conll(buf.as_slice(), ConllFormat::ConllU).unwrap();
        assert_eq!(back[0].tokens, s[0].tokens);
        assert_eq!(back[0].gold, s[0].gold);
    }

    #[test]
    fn writing_nothing_writes_nothing() {
        let mut buf = Vec::new();
        write_conll(&mut buf, &[], &[], ConllFormat::ConllX).unwrap();
        assert!(buf.is_empty());
    }

    #[test]
    fn write_rejects_count_mismatch() {
        let s = read_conll(JOHN_SAW.as_bytes(), ConllFormat::ConllX).unwrap();
        let mut buf = Vec::new();
        assert!(matches!(
            write_conll(&mut buf, &s, &[], ConllFormat::ConllX),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn tree_validation() {
        assert!(ParseTree::unlabeled(vec![0]).is_ok());
        assert!(ParseTree::unlabeled(vec![1]).is_err());
        assert!(ParseTree::unlabeled(vec![2, 1]).is_err());
        assert!(ParseTree::unlabeled(vec![0, 3]).is_err());
        assert!(ParseTree::unlabeled(vec![]).is_err());
    }

    #[test]
    fn embeddings_plain_and_with_header() {
        let plain = "a 1 2 3\nb 4 5 6\n";
        let t = read_embeddings(plain.as_bytes()).unwrap();
        assert_eq!(t.dimension(), 3);
        assert_eq!(t.len(), 2);
        assert_eq!(t.lookup("b"), &[4.0, 5.0, 6.0]);
        assert_eq!(t.lookup("zzz"), &[2.5, 3.5, 4.5]);

        let with_header = "2 3\na 1 2 3\nb 4 5 6\n";
        assert_eq!(read_embeddings(with_header.as_bytes()).unwrap(), t);
    }

    #[test]
    fn embeddings_inconsistent_dimension() {
        let bad = "a 1 2 3\nb 4 5 6 7\n";
        match read_embeddings(bad.as_bytes()) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected format error, got {other:?}"),
        }
    }
}
