//! Ensemble votes, consensus (minimum Bayes risk) parsing and jackknifed
//! vote production.
//!
//! A [`VoteTable`] counts, for one sentence, how many of `N` base parses
//! attach each modifier to each head. The counts divided by `N` are used as
//! attachment posteriors. Decoding with those posteriors as arc scores gives
//! the tree with minimum expected Hamming cost under the ensemble.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::decoders::{ArcScoreMatrix, Decoder};
use crate::error::{Error, Result};
use crate::training::{self, TrainConfig};
use crate::costs::CostKind;
use crate::treebank::{read_conll, ConllFormat, ParseTree, Sentence, EMPTY_LABEL};

/// Head and label votes of `N` parses of one sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VoteTable {
    n: usize,
    voters: usize,
    head_votes: Vec<u32>,
    label_votes: BTreeMap<(usize, usize), BTreeMap<String, u32>>,
}

impl VoteTable {
    /// Build from explicit `(head, modifier, count)` triples. Every modifier's
    /// counts must sum to `voters`.
    pub fn from_head_counts(n: usize, voters: usize, counts: &[(usize, usize, u32)]) -> Result<Self> {
        let mut table = VoteTable::empty(n, voters)?;
        for &(h, m, c) in counts {
            table.check_arc(h, m)?;
            table.head_votes[h * (n + 1) + m] += c;
        }
        table.validate()?;
        Ok(table)
    }

    fn empty(n: usize, voters: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::usage("vote table for an empty sentence"));
        }
        if voters == 0 {
            return Err(Error::usage("vote table needs at least one voter"));
        }
        Ok(VoteTable {
            n,
            voters,
            head_votes: vec![0; (n + 1) * (n + 1)],
            label_votes: BTreeMap::new(),
        })
    }

    fn check_arc(&self, h: usize, m: usize) -> Result<()> {
        if m == 0 || m > self.n || h > self.n || h == m {
            return Err(Error::usage(format!(
                "arc ({h}, {m}) invalid for a sentence of {} words",
                self.n
            )));
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        for m in 1..=self.n {
            let total: u32 = (0..=self.n).map(|h| self.votes(h, m)).sum();
            if total as usize != self.voters {
                return Err(Error::usage(format!(
                    "word {m} has {total} head votes, expected {}",
                    self.voters
                )));
            }
        }
        for (&(h, m), labels) in &self.label_votes {
            let total: u32 = labels.values().sum();
            if total > self.votes(h, m) {
                return Err(Error::usage(format!(
                    "arc ({h}, {m}) has {total} label votes but {} head votes",
                    self.votes(h, m)
                )));
            }
        }
        Ok(())
    }

    /// Sentence length.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Ensemble size `N`.
    pub fn ensemble_size(&self) -> usize {
        self.voters
    }

    /// Number of parses attaching `m` to `h` (0 for arcs nobody proposed).
    #[inline]
    pub fn votes(&self, h: usize, m: usize) -> u32 {
        if h == m || h > self.n || m == 0 || m > self.n {
            return 0;
        }
        self.head_votes[h * (self.n + 1) + m]
    }

    /// `p̂(h, m) = votes(h, m) / N`.
    #[inline]
    pub fn posterior(&self, h: usize, m: usize) -> f64 {
        f64::from(self.votes(h, m)) / self.voters as f64
    }

    /// `π(h, m) = 1 - p̂(h, m)`.
    pub fn disagreement(&self, h: usize, m: usize) -> f64 {
        f64::from(self.voters as u32 - self.votes(h, m)) / self.voters as f64
    }

    /// Label tallies for arc `(h, m)`, sorted by label.
    pub fn label_votes(&self, h: usize, m: usize) -> impl Iterator<Item = (&str, u32)> {
        self.label_votes
            .get(&(h, m))
            .into_iter()
            .flat_map(|l| l.iter().map(|(k, &v)| (k.as_str(), v)))
    }

    /// Most frequent label among parses containing `(h, m)`; ties go to the
    /// lexicographically smallest label.
    pub fn plurality_label(&self, h: usize, m: usize) -> Option<&str> {
        plurality(self.label_votes(h, m))
    }

    /// Most frequent label for `m` over all heads.
    pub fn plurality_label_any_head(&self, m: usize) -> Option<&str> {
        let mut merged: BTreeMap<&str, u32> = BTreeMap::new();
        for h in 0..=self.n {
            for (l, c) in self.label_votes(h, m) {
                *merged.entry(l).or_default() += c;
            }
        }
        plurality(merged.into_iter())
    }

    /// Raw counts as arc scores.
    pub fn count_matrix(&self) -> ArcScoreMatrix {
        ArcScoreMatrix::from_fn(self.n, |h, m| f64::from(self.votes(h, m)))
    }

    /// Posteriors as arc scores.
    pub fn posterior_matrix(&self) -> ArcScoreMatrix {
        ArcScoreMatrix::from_fn(self.n, |h, m| self.posterior(h, m))
    }

    /// Expected Hamming cost of `tree` under the ensemble, scaled by `N`:
    /// `Σ_m (N - votes(head(m), m))`. Exact in integers.
    pub fn expected_hamming_times_n(&self, tree: &ParseTree) -> u64 {
        tree.arcs()
            .map(|(h, m)| (self.voters as u32 - self.votes(h, m)) as u64)
            .sum()
    }

    /// Non-zero arcs `(h, m, count)` ordered by modifier, then head.
    pub fn nonzero_arcs(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        (1..=self.n).flat_map(move |m| {
            (0..=self.n)
                .map(move |h| (h, m, self.votes(h, m)))
                .filter(|&(_, _, c)| c > 0)
        })
    }
}

fn plurality<'a>(tallies: impl Iterator<Item = (&'a str, u32)>) -> Option<&'a str> {
    let mut best: Option<(&str, u32)> = None;
    for (label, count) in tallies {
        // BTreeMap order is ascending, so strict > keeps the smallest label on ties.
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((label, count));
        }
    }
    best.map(|(l, _)| l)
}

/// Count head and label votes of `parses`, all of length `n`.
pub fn tally_votes(parses: &[ParseTree], n: usize) -> Result<VoteTable> {
    let mut table = VoteTable::empty(n, parses.len())?;
    for (i, parse) in parses.iter().enumerate() {
        if parse.len() != n {
            return Err(Error::usage(format!(
                "parse {i} has {} words, expected {n}",
                parse.len()
            )));
        }
        for (h, m) in parse.arcs() {
            table.head_votes[h * (n + 1) + m] += 1;
            let label = parse.label(m);
            if label != EMPTY_LABEL {
                *table
                    .label_votes
                    .entry((h, m))
                    .or_default()
                    .entry(label.to_string())
                    .or_default() += 1;
            }
        }
    }
    Ok(table)
}

/// Consensus tree: decode with vote counts as arc scores (the posteriors up
/// to the constant factor `N`), then label each arc by plurality among the
/// parses containing it. Arcs no parse proposed get the plurality label of
/// their modifier over all heads.
pub fn mbr_parse(votes: &VoteTable, decoder: Decoder) -> ParseTree {
    let tree = decoder.decode(&votes.count_matrix());
    let labels = tree
        .arcs()
        .map(|(h, m)| {
            votes
                .plurality_label(h, m)
                .or_else(|| votes.plurality_label_any_head(m))
                .unwrap_or(EMPTY_LABEL)
                .to_string()
        })
        .collect();
    tree.with_labels(labels).expect("one label per word")
}

/// Read `N` sentence-aligned CoNLL files of base parses. Returns the
/// sentences of the first file (without gold trees) and, per sentence, the
/// `N` parses in file order.
pub fn load_parse_files(
    paths: &[impl AsRef<Path>],
    format: ConllFormat,
) -> Result<(Vec<Sentence>, Vec<Vec<ParseTree>>)> {
    if paths.is_empty() {
        return Err(Error::usage("no base parse files given"));
    }
    let mut files = Vec::with_capacity(paths.len());
    for path in paths {
        let path = path.as_ref();
        let reader = std::io::BufReader::new(std::fs::File::open(path).map_err(|e| {
            Error::usage(format!("cannot open {}: {e}", path.display()))
        })?);
        let sentences = read_conll(reader, format)
            .map_err(|e| Error::usage(format!("{}: {e}", path.display())))?;
        files.push((path.to_path_buf(), sentences));
    }
    let (first_path, first) = &files[0];
    let mut parses: Vec<Vec<ParseTree>> = vec![Vec::with_capacity(files.len()); first.len()];
    for (path, sentences) in &files {
        if sentences.len() != first.len() {
            return Err(Error::usage(format!(
                "{} has {} sentences but {} has {}",
                path.display(),
                sentences.len(),
                first_path.display(),
                first.len()
            )));
        }
        for (i, (s, reference)) in sentences.iter().zip(first).enumerate() {
            if s.tokens != reference.tokens {
                return Err(Error::usage(format!(
                    "{}: sentence {} is not aligned with {}",
                    path.display(),
                    i + 1,
                    first_path.display()
                )));
            }
            let tree = s.gold.clone().ok_or_else(|| {
                Error::usage(format!("{}: sentence {} has no heads", path.display(), i + 1))
            })?;
            parses[i].push(tree);
        }
    }
    let sentences = first
        .iter()
        .map(|s| Sentence {
            gold: None,
            ..s.clone()
        })
        .collect();
    Ok((sentences, parses))
}

/// Assignment of training sentences to jackknife folds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JackknifePlan {
    folds: usize,
    seed: u64,
    fold_of_sentence: BTreeMap<String, usize>,
}

/// One fold model of a jackknifed ensemble.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldModel {
    pub id: usize,
    pub heldout_fold: usize,
    pub trained_on: Vec<usize>,
    pub seed: u64,
}

impl JackknifePlan {
    pub fn folds(&self) -> usize {
        self.folds
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn fold_of(&self, sentence_id: &str) -> Option<usize> {
        self.fold_of_sentence.get(sentence_id).copied()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.folds];
        for &f in self.fold_of_sentence.values() {
            sizes[f] += 1;
        }
        sizes
    }

    pub fn len(&self) -> usize {
        self.fold_of_sentence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fold_of_sentence.is_empty()
    }

    /// Distribute `total` models round-robin over held-out folds. Model `j`
    /// holds out fold `j mod k` and uses seed `base_seed + j`.
    pub fn assign_models(&self, total: usize, base_seed: u64) -> Result<Vec<FoldModel>> {
        if total < self.folds {
            return Err(Error::usage(format!(
                "{total} models cannot cover {} folds",
                self.folds
            )));
        }
        Ok((0..total)
            .map(|id| {
                let heldout_fold = id % self.folds;
                FoldModel {
                    id,
                    heldout_fold,
                    trained_on: (0..self.folds).filter(|&f| f != heldout_fold).collect(),
                    seed: base_seed.wrapping_add(id as u64),
                }
            })
            .collect())
    }
}

/// Shuffle sentences with `seed` and deal them into `k` folds whose sizes
/// differ by at most one.
pub fn jackknife_split(sentences: &[Sentence], k: usize, seed: u64) -> Result<JackknifePlan> {
    if k < 2 {
        return Err(Error::usage(format!("jackknifing needs at least 2 folds, got {k}")));
    }
    if sentences.len() < k {
        return Err(Error::usage(format!(
            "{} sentences cannot fill {k} folds",
            sentences.len()
        )));
    }
    let mut seen = HashSet::new();
    for s in sentences {
        if !seen.insert(s.id.as_str()) {
            return Err(Error::usage(format!("duplicate sentence id '{}'", s.id)));
        }
    }
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let fold_of_sentence = order
        .iter()
        .enumerate()
        .map(|(pos, &i)| (sentences[i].id.clone(), pos % k))
        .collect();
    Ok(JackknifePlan {
        folds: k,
        seed,
        fold_of_sentence,
    })
}

/// Where a vote file's parses came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VoteSource {
    /// Held-out parses of jackknifed fold models.
    Jackknife,
    /// Parses from external files; provenance unknown.
    External,
    /// Parses from models trained on the very sentences they voted on.
    Full,
    /// Synthetic votes derived from gold trees.
    Oracle,
}

impl FromStr for VoteSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jackknife" => Ok(VoteSource::Jackknife),
            "external" => Ok(VoteSource::External),
            "full" => Ok(VoteSource::Full),
            "oracle" => Ok(VoteSource::Oracle),
            other => Err(Error::usage(format!("unknown vote source '{other}'"))),
        }
    }
}

impl fmt::Display for VoteSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VoteSource::Jackknife => "jackknife",
            VoteSource::External => "external",
            VoteSource::Full => "full",
            VoteSource::Oracle => "oracle",
        })
    }
}

/// Votes of one sentence plus their provenance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SentenceVotes {
    pub id: String,
    pub fold: Option<usize>,
    pub voters: Vec<usize>,
    pub table: VoteTable,
}

/// A collection of vote tables with provenance metadata.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VoteFile {
    pub source: VoteSource,
    pub plan: Option<(usize, u64)>,
    pub models: Vec<FoldModel>,
    sentences: Vec<SentenceVotes>,
    index: HashMap<String, usize>,
}

const VOTES_MAGIC: &str = "#distill-parse-votes v1";

impl VoteFile {
    pub fn new(source: VoteSource) -> Self {
        VoteFile {
            source,
            plan: None,
            models: Vec::new(),
            sentences: Vec::new(),
            index: HashMap::new(),
        }
    }

    /// Add a sentence; replaces an earlier entry with the same id.
    pub fn push(&mut self, votes: SentenceVotes) {
        match self.index.get(&votes.id) {
            Some(&i) => self.sentences[i] = votes,
            None => {
                self.index.insert(votes.id.clone(), self.sentences.len());
                self.sentences.push(votes);
            }
        }
    }

    pub fn get(&self, sentence_id: &str) -> Option<&VoteTable> {
        self.index.get(sentence_id).map(|&i| &self.sentences[i].table)
    }

    pub fn sentences(&self) -> &[SentenceVotes] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Unanimous votes for each sentence's gold tree, `voters` strong.
    pub fn from_gold(sentences: &[Sentence], voters: usize) -> Result<Self> {
        let mut file = VoteFile::new(VoteSource::Oracle);
        for s in sentences {
            let gold = s.gold_tree()?;
            let parses = vec![gold.clone(); voters];
            file.push(SentenceVotes {
                id: s.id.clone(),
                fold: None,
                voters: Vec::new(),
                table: tally_votes(&parses, s.len())?,
            });
        }
        Ok(file)
    }

    /// Check that no sentence received a vote from a model trained on it.
    pub fn leakage_audit(&self) -> Result<()> {
        match self.source {
            VoteSource::Full => {
                return Err(Error::usage(
                    "votes come from models trained on the same sentences (source=full)",
                ))
            }
            VoteSource::External | VoteSource::Oracle => return Ok(()),
            VoteSource::Jackknife => {}
        }
        let models: HashMap<usize, &FoldModel> = self.models.iter().map(|m| (m.id, m)).collect();
        for s in &self.sentences {
            let fold = s.fold.ok_or_else(|| {
                Error::usage(format!("jackknifed sentence {} has no fold", s.id))
            })?;
            if s.voters.len() != s.table.ensemble_size() {
                return Err(Error::usage(format!(
                    "sentence {} lists {} voters for {} votes",
                    s.id,
                    s.voters.len(),
                    s.table.ensemble_size()
                )));
            }
            for v in &s.voters {
                let model = models.get(v).ok_or_else(|| {
                    Error::usage(format!("sentence {} voted on by unknown model {v}", s.id))
                })?;
                if model.trained_on.contains(&fold) {
                    return Err(Error::usage(format!(
                        "leakage: model {v} was trained on fold {fold}, which contains sentence {}",
                        s.id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Write the versioned line format: metadata lines starting with `#`,
    /// then one `sentence_id m h count [label:count ...]` line per voted arc.
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{VOTES_MAGIC}")?;
        writeln!(out, "#source {}", self.source)?;
        if let Some((k, seed)) = self.plan {
            writeln!(out, "#plan folds={k} seed={seed}")?;
        }
        for m in &self.models {
            writeln!(
                out,
                "#model {} heldout={} trained_on={} seed={}",
                m.id,
                m.heldout_fold,
                join(&m.trained_on),
                m.seed
            )?;
        }
        for s in &self.sentences {
            write!(
                out,
                "#sentence {} n={} N={}",
                s.id,
                s.table.len(),
                s.table.ensemble_size()
            )?;
            if let Some(f) = s.fold {
                write!(out, " fold={f}")?;
            }
            if !s.voters.is_empty() {
                write!(out, " voters={}", join(&s.voters))?;
            }
            writeln!(out)?;
            for (h, m, count) in s.table.nonzero_arcs() {
                write!(out, "{} {m} {h} {count}", s.id)?;
                for (label, c) in s.table.label_votes(h, m) {
                    write!(out, " {label}:{c}")?;
                }
                writeln!(out)?;
            }
        }
        Ok(())
    }

    pub fn read<R: BufRead>(source: R) -> Result<Self> {
        let mut file = VoteFile::new(VoteSource::External);
        let mut pending: Option<PendingSentence> = None;
        let mut saw_magic = false;

        for (idx, line) in source.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Format {
                line: line_no,
                message,
            };
            if let Some(meta) = line.strip_prefix('#') {
                let mut fields = meta.split_whitespace();
                let key = fields.next().unwrap_or("");
                let kv = parse_kv(fields.clone());
                match key {
                    "distill-parse-votes" => {
                        if fields.next() != Some("v1") {
                            return Err(err("unsupported vote file version".into()));
                        }
                        saw_magic = true;
                    }
                    "source" => {
                        let value = fields.next().ok_or_else(|| err("missing source".into()))?;
                        file.source = value.parse().map_err(|e: Error| err(e.to_string()))?;
                    }
                    "plan" => {
                        let k = kv_num(&kv, "folds").map_err(err)?;
                        let seed = kv_num(&kv, "seed").map_err(err)?;
                        file.plan = Some((k as usize, seed));
                    }
                    "model" => {
                        let id = fields
                            .next()
                            .and_then(|f| f.parse().ok())
                            .ok_or_else(|| err("model id missing".into()))?;
                        let kv = parse_kv(meta.split_whitespace().skip(2));
                        file.models.push(FoldModel {
                            id,
                            heldout_fold: kv_num(&kv, "heldout").map_err(err)? as usize,
                            trained_on: parse_list(kv.get("trained_on").copied().unwrap_or(""))
                                .map_err(err)?,
                            seed: kv_num(&kv, "seed").unwrap_or(0),
                        });
                    }
                    "sentence" => {
                        if let Some(p) = pending.take() {
                            file.push(p.finish()?);
                        }
                        let id = fields
                            .next()
                            .ok_or_else(|| err("sentence id missing".into()))?
                            .to_string();
                        let kv = parse_kv(meta.split_whitespace().skip(2));
                        let n = kv_num(&kv, "n").map_err(err)? as usize;
                        let voters = kv_num(&kv, "N").map_err(err)? as usize;
                        let fold = match kv.get("fold") {
                            Some(f) => Some(f.parse().map_err(|_| err(format!("bad fold '{f}'")))?),
                            None => None,
                        };
                        let voter_ids = parse_list(kv.get("voters").copied().unwrap_or(""))
                            .map_err(err)?;
                        let table = VoteTable::empty(n, voters).map_err(|e| err(e.to_string()))?;
                        pending = Some(PendingSentence {
                            line: line_no,
                            votes: SentenceVotes {
                                id,
                                fold,
                                voters: voter_ids,
                                table,
                            },
                        });
                    }
                    _ => {}
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() < 4 {
                return Err(err("expected 'sentence_id m h count [label:count ...]'".into()));
            }
            let p = pending
                .as_mut()
                .filter(|p| p.votes.id == fields[0])
                .ok_or_else(|| err(format!("votes for '{}' before its #sentence line", fields[0])))?;
            let num = |s: &str| s.parse::<usize>().map_err(|_| err(format!("'{s}' is not a count")));
            let m = num(fields[1])?;
            let h = num(fields[2])?;
            let count = num(fields[3])? as u32;
            let table = &mut p.votes.table;
            table.check_arc(h, m).map_err(|e| err(e.to_string()))?;
            let n = table.n;
            table.head_votes[h * (n + 1) + m] += count;
            for lc in &fields[4..] {
                let (label, c) = lc
                    .rsplit_once(':')
                    .ok_or_else(|| err(format!("bad label tally '{lc}'")))?;
                *table
                    .label_votes
                    .entry((h, m))
                    .or_default()
                    .entry(label.to_string())
                    .or_default() += num(c)? as u32;
            }
        }
        if let Some(p) = pending.take() {
            file.push(p.finish()?);
        }
        if !saw_magic {
            return Err(Error::Format {
                line: 1,
                message: format!("missing '{VOTES_MAGIC}' header"),
            });
        }
        Ok(file)
    }
}

struct PendingSentence {
    line: usize,
    votes: SentenceVotes,
}

impl PendingSentence {
    fn finish(self) -> Result<SentenceVotes> {
        self.votes.table.validate().map_err(|e| Error::Format {
            line: self.line,
            message: format!("sentence {}: {e}", self.votes.id),
        })?;
        Ok(self.votes)
    }
}

fn join(values: &[usize]) -> String {
    values.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn parse_kv<'a>(fields: impl Iterator<Item = &'a str>) -> HashMap<&'a str, &'a str> {
    fields.filter_map(|f| f.split_once('=')).collect()
}

fn kv_num(kv: &HashMap<&str, &str>, key: &str) -> std::result::Result<u64, String> {
    kv.get(key)
        .ok_or_else(|| format!("missing '{key}='"))?
        .parse()
        .map_err(|_| format!("'{key}' is not a number"))
}

fn parse_list(s: &str) -> std::result::Result<Vec<usize>, String> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|x| x.parse().map_err(|_| format!("bad list entry '{x}'")))
        .collect()
}

/// Train the fold models of `plan` and let each parse its held-out fold.
///
/// Model `j` holds out fold `j mod k`, trains on all other folds with
/// `config` (seed offset by `j`), and votes only on its held-out sentences.
/// Up to `jobs` models train concurrently.
pub fn build_training_votes(
    treebank: &[Sentence],
    plan: &JackknifePlan,
    config: &TrainConfig,
    total_models: usize,
    jobs: usize,
) -> Result<VoteFile> {
    if config.cost != CostKind::Hamming {
        return Err(Error::usage("fold models are trained with the Hamming cost"));
    }
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); plan.folds()];
    for (i, s) in treebank.iter().enumerate() {
        let f = plan
            .fold_of(&s.id)
            .ok_or_else(|| Error::usage(format!("sentence {} is not in the jackknife plan", s.id)))?;
        folds[f].push(i);
    }
    let models = plan.assign_models(total_models, config.seed)?;

    let run = |model: &FoldModel| -> Result<Vec<(usize, ParseTree)>> {
        let train_set: Vec<Sentence> = model
            .trained_on
            .iter()
            .flat_map(|&f| folds[f].iter().map(|&i| treebank[i].clone()))
            .collect();
        let fold_config = TrainConfig {
            seed: model.seed,
            ..config.clone()
        };
        let outcome = training::train(&train_set, None, &fold_config, None).map_err(|e| {
            Error::Training(format!(
                "fold model {} (held-out fold {}): {e}",
                model.id, model.heldout_fold
            ))
        })?;
        let decoder = config.decoder;
        Ok(folds[model.heldout_fold]
            .iter()
            .map(|&i| (i, outcome.model.parse(&treebank[i], decoder)))
            .collect())
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Training(format!("thread pool: {e}")))?;
    let results: Vec<Result<Vec<(usize, ParseTree)>>> =
        pool.install(|| models.par_iter().map(run).collect());

    let mut parses: Vec<Vec<(usize, ParseTree)>> = vec![Vec::new(); treebank.len()];
    for (model, result) in models.iter().zip(results) {
        for (i, tree) in result? {
            parses[i].push((model.id, tree));
        }
    }

    let mut file = VoteFile::new(VoteSource::Jackknife);
    file.plan = Some((plan.folds(), plan.seed()));
    file.models = models;
    for (i, s) in treebank.iter().enumerate() {
        let voters: Vec<usize> = parses[i].iter().map(|(id, _)| *id).collect();
        let trees: Vec<ParseTree> = parses[i].iter().map(|(_, t)| t.clone()).collect();
        file.push(SentenceVotes {
            id: s.id.clone(),
            fold: plan.fold_of(&s.id),
            voters,
            table: tally_votes(&trees, s.len())?,
        });
    }
    Ok(file)
}
