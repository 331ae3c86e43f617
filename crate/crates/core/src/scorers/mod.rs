//! Arc scorers and labelers.
//!
//! A [`ScorerModel`] maps a sentence to an [`ArcScoreMatrix`] and labels the
//! arcs of a tree. Two variants share one flat parameter vector with a named
//! layout:
//!
//! * `linear`: sparse indicator features over forms, tags, direction and
//!   distance, with a log-linear labeler.
//! * `bilstm`: word vectors (frozen pretrained + learned word + learned tag)
//!   composed through a rectifier, a stacked bidirectional LSTM, and
//!   `s(h, m) = v · tanh(W_h x̄_h + W_m x̄_m + b)`, with a one-hidden-layer
//!   labeler over the same contextual vectors.

mod adam;
mod bilstm;
mod io;
mod linear;
mod vocab;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use adam::{adam_step, AdamConfig, DecaySchedule, OptimizerState};
pub use vocab::{FeatureIndex, FeatureKey, Interner};

use crate::decoders::{ArcScoreMatrix, Decoder};
use crate::error::{Error, Result};
use crate::treebank::{EmbeddingTable, ParseTree, Sentence, EMPTY_LABEL};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScorerVariant {
    Linear,
    Bilstm,
}

impl FromStr for ScorerVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(ScorerVariant::Linear),
            "bilstm" => Ok(ScorerVariant::Bilstm),
            other => Err(Error::usage(format!("unknown scorer '{other}'"))),
        }
    }
}

impl fmt::Display for ScorerVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScorerVariant::Linear => "linear",
            ScorerVariant::Bilstm => "bilstm",
        })
    }
}

/// Model shape and initialization. Defaults follow the reference
/// hyperparameters of the neural scorer.
#[derive(Clone, Debug, PartialEq)]
pub struct ScorerConfig {
    pub variant: ScorerVariant,
    /// Hidden size of each LSTM direction.
    pub lstm_dim: usize,
    pub lstm_layers: usize,
    pub pos_dim: usize,
    pub word_dim: usize,
    /// Output size of the rectified word composition layer.
    pub compose_dim: usize,
    /// Hidden units of the arc scoring layer.
    pub hidden_dim: usize,
    /// Hidden units of the labeler.
    pub labeler_hidden: usize,
    pub init_seed: u64,
    /// Half-width of the uniform initialization of linear weights (0 = zeros).
    pub linear_init: f64,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig {
            variant: ScorerVariant::Bilstm,
            lstm_dim: 100,
            lstm_layers: 2,
            pos_dim: 12,
            word_dim: 32,
            compose_dim: 100,
            hidden_dim: 100,
            labeler_hidden: 100,
            init_seed: 1,
            linear_init: 0.0,
        }
    }
}

impl ScorerConfig {
    pub fn linear() -> Self {
        ScorerConfig {
            variant: ScorerVariant::Linear,
            ..ScorerConfig::default()
        }
    }

    pub fn bilstm() -> Self {
        ScorerConfig::default()
    }
}

/// A named block of the flat parameter vector, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub name: String,
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.len()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Layout {
    segments: Vec<Segment>,
}

impl Layout {
    fn push(&mut self, name: &str, rows: usize, cols: usize) {
        let offset = self.total();
        self.segments.push(Segment {
            name: name.to_string(),
            offset,
            rows,
            cols,
        });
    }

    pub fn total(&self) -> usize {
        self.segments.last().map_or(0, |s| s.offset + s.len())
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn get(&self, name: &str) -> &Segment {
        self.segments
            .iter()
            .find(|s| s.name == name)
            .unwrap_or_else(|| panic!("no parameter segment '{name}'"))
    }

    pub fn find(&self, name: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.name == name)
    }
}

/// Frozen vocabularies of a model.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabularies {
    pub forms: Interner,
    pub pos: Interner,
    pub labels: Interner,
    /// Arc features (linear variant).
    pub arc_features: FeatureIndex,
    /// Labeler features (linear variant).
    pub label_features: FeatureIndex,
    /// Forms with a pretrained vector (bilstm variant); row 0 is UNK.
    pub pretrained: Interner,
}

/// Cached forward computation for one sentence.
pub struct Forward {
    scores: ArcScoreMatrix,
    inner: ForwardInner,
}

enum ForwardInner {
    Linear(linear::LinearForward),
    Bilstm(Box<bilstm::BilstmForward>),
}

impl Forward {
    pub fn scores(&self) -> &ArcScoreMatrix {
        &self.scores
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScorerModel {
    config: ScorerConfig,
    vocab: Vocabularies,
    layout: Layout,
    params: Vec<f64>,
    pretrained_dim: usize,
}

impl ScorerModel {
    /// Build vocabularies from `train` and initialize parameters from
    /// `config.init_seed`. Pretrained vectors are only used by the bilstm
    /// variant and are never updated.
    pub fn new(
        config: ScorerConfig,
        train: &[Sentence],
        embeddings: Option<&EmbeddingTable>,
    ) -> Result<Self> {
        if config.variant == ScorerVariant::Bilstm {
            let dims = [
                config.lstm_dim,
                config.lstm_layers,
                config.compose_dim,
                config.hidden_dim,
                config.labeler_hidden,
            ];
            if dims.contains(&0) {
                return Err(Error::usage(
                    "bilstm sizes (lstm dim, layers, compose, hidden, labeler) must be positive",
                ));
            }
        }
        let mut vocab = Vocabularies::default();
        for special in [vocab::UNK, vocab::ROOT, vocab::BOS, vocab::EOS] {
            vocab.forms.intern(special);
            vocab.pos.intern(special);
        }
        for s in train {
            for t in &s.tokens {
                vocab.forms.intern(&t.form);
                vocab.pos.intern(&t.pos);
            }
            if let Some(g) = &s.gold {
                for l in g.labels() {
                    if l != EMPTY_LABEL {
                        vocab.labels.intern(l);
                    }
                }
            }
        }
        let mut pretrained_dim = 0;
        match config.variant {
            ScorerVariant::Linear => linear::build_features(&mut vocab, train),
            ScorerVariant::Bilstm => {
                vocab.pretrained.intern(vocab::UNK);
                if let Some(table) = embeddings {
                    pretrained_dim = table.dimension();
                    for f in table.forms() {
                        vocab.pretrained.intern(f);
                    }
                }
            }
        }
        vocab.freeze();
        let layout = build_layout(&config, &vocab, pretrained_dim);
        let mut model = ScorerModel {
            params: vec![0.0; layout.total()],
            config,
            vocab,
            layout,
            pretrained_dim,
        };
        model.initialize(embeddings);
        Ok(model)
    }

    fn initialize(&mut self, embeddings: Option<&EmbeddingTable>) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.init_seed);
        match self.config.variant {
            ScorerVariant::Linear => {
                let r = self.config.linear_init;
                if r > 0.0 {
                    for p in &mut self.params {
                        *p = rng.gen_range(-r..r);
                    }
                }
            }
            ScorerVariant::Bilstm => {
                let segments = self.layout.segments.clone();
                for seg in &segments {
                    let block = &mut self.params[seg.range()];
                    if seg.name == "pretrained" {
                        if let Some(table) = embeddings {
                            for (row, form) in self.vocab.pretrained.items().iter().enumerate() {
                                let v = if row == 0 { table.unk() } else { table.lookup(form) };
                                block[row * seg.cols..(row + 1) * seg.cols].copy_from_slice(v);
                            }
                        }
                    } else if seg.name.ends_with("_b") {
                        if seg.name.starts_with("lstm") {
                            // forget-gate bias starts at 1
                            let hidden = seg.len() / 4;
                            block[hidden..2 * hidden].fill(1.0);
                        }
                    } else {
                        let r = if seg.name == "word" || seg.name == "pos" || seg.name == "root" {
                            (3.0 / seg.cols as f64).sqrt()
                        } else {
                            (6.0 / (seg.rows + seg.cols) as f64).sqrt()
                        };
                        for p in block.iter_mut() {
                            *p = rng.gen_range(-r..r);
                        }
                    }
                }
            }
        }
    }

    pub fn config(&self) -> &ScorerConfig {
        &self.config
    }

    pub fn variant(&self) -> ScorerVariant {
        self.config.variant
    }

    pub fn vocab(&self) -> &Vocabularies {
        &self.vocab
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn pretrained_dim(&self) -> usize {
        self.pretrained_dim
    }

    /// Parameter range of a named segment, if present.
    pub fn segment(&self, name: &str) -> Option<Range<usize>> {
        self.layout.find(name).map(Segment::range)
    }

    /// Labels known to the labeler, in id order.
    pub fn labels(&self) -> &[String] {
        self.vocab.labels.items()
    }

    pub fn forward(&self, sentence: &Sentence) -> Forward {
        match self.config.variant {
            ScorerVariant::Linear => {
                let (scores, f) = linear::forward(self, sentence);
                Forward {
                    scores,
                    inner: ForwardInner::Linear(f),
                }
            }
            ScorerVariant::Bilstm => {
                let (scores, f) = bilstm::forward(self, sentence);
                Forward {
                    scores,
                    inner: ForwardInner::Bilstm(Box::new(f)),
                }
            }
        }
    }

    /// Arc scores for every candidate `(h, m)`.
    pub fn score_arcs(&self, sentence: &Sentence) -> ArcScoreMatrix {
        self.forward(sentence).scores
    }

    /// Accumulate into `grad` the gradient of `Σ upstream(h,m) · s(h,m)`
    /// (when `upstream` is given) plus the labeler cross-entropy on the arcs
    /// of `gold` (when given). Returns the labeler loss.
    pub fn accumulate_gradient(
        &self,
        forward: &Forward,
        upstream: Option<&ArcScoreMatrix>,
        gold: Option<&ParseTree>,
        grad: &mut [f64],
    ) -> Result<f64> {
        let n = forward.scores.len();
        if grad.len() != self.params.len() {
            return Err(Error::usage(format!(
                "gradient buffer of {} for {} parameters",
                grad.len(),
                self.params.len()
            )));
        }
        if let Some(u) = upstream {
            if u.len() != n {
                return Err(Error::usage(format!(
                    "upstream gradient for {} words, sentence has {n}",
                    u.len()
                )));
            }
        }
        if let Some(g) = gold {
            if g.len() != n {
                return Err(Error::usage(format!("gold tree for {} words, sentence has {n}", g.len())));
            }
        }
        Ok(match &forward.inner {
            ForwardInner::Linear(f) => linear::backward(self, f, upstream, gold, grad),
            ForwardInner::Bilstm(f) => bilstm::backward(self, f, upstream, gold, grad),
        })
    }

    /// Gradient of `Σ upstream(h,m) · s(h,m)` with respect to every parameter.
    pub fn backward(&self, sentence: &Sentence, upstream: &ArcScoreMatrix) -> Result<Vec<f64>> {
        if upstream.len() != sentence.len() {
            return Err(Error::usage(format!(
                "upstream gradient for {} words, sentence has {}",
                upstream.len(),
                sentence.len()
            )));
        }
        let forward = self.forward(sentence);
        let mut grad = vec![0.0; self.params.len()];
        self.accumulate_gradient(&forward, Some(upstream), None, &mut grad)?;
        Ok(grad)
    }

    /// Labeler cross-entropy summed over the arcs of `gold`, and its gradient.
    pub fn label_loss_gradient(&self, sentence: &Sentence, gold: &ParseTree) -> Result<(f64, Vec<f64>)> {
        let forward = self.forward(sentence);
        let mut grad = vec![0.0; self.params.len()];
        let loss = self.accumulate_gradient(&forward, None, Some(gold), &mut grad)?;
        Ok((loss, grad))
    }

    /// Labeler cross-entropy summed over the arcs of `gold`.
    pub fn label_loss(&self, sentence: &Sentence, gold: &ParseTree) -> f64 {
        let forward = self.forward(sentence);
        match &forward.inner {
            ForwardInner::Linear(f) => linear::label_loss(self, f, gold),
            ForwardInner::Bilstm(f) => bilstm::label_loss(self, f, gold),
        }
    }

    /// Best label for every arc of `tree` (lowest label id on ties). Returns
    /// empty labels when the model knows no labels.
    pub fn score_labels(&self, sentence: &Sentence, tree: &ParseTree) -> Vec<String> {
        let forward = self.forward(sentence);
        self.labels_from(&forward, tree)
    }

    fn labels_from(&self, forward: &Forward, tree: &ParseTree) -> Vec<String> {
        if self.vocab.labels.is_empty() {
            return vec![EMPTY_LABEL.to_string(); tree.len()];
        }
        tree.arcs()
            .map(|(h, m)| {
                let scores = match &forward.inner {
                    ForwardInner::Linear(f) => linear::label_scores(self, f, h, m),
                    ForwardInner::Bilstm(f) => bilstm::label_scores(self, f, h, m),
                };
                let mut best = 0;
                for (i, &s) in scores.iter().enumerate() {
                    if s > scores[best] {
                        best = i;
                    }
                }
                self.vocab.labels.items()[best].clone()
            })
            .collect()
    }

    /// Decode and label a sentence.
    pub fn parse(&self, sentence: &Sentence, decoder: Decoder) -> ParseTree {
        let forward = self.forward(sentence);
        let tree = decoder.decode(&forward.scores);
        let labels = self.labels_from(&forward, &tree);
        tree.with_labels(labels).expect("one label per word")
    }
}

fn build_layout(config: &ScorerConfig, vocab: &Vocabularies, pretrained_dim: usize) -> Layout {
    let mut layout = Layout::default();
    let labels = vocab.labels.len();
    match config.variant {
        ScorerVariant::Linear => {
            layout.push("arc", vocab.arc_features.len(), 1);
            layout.push("label", vocab.label_features.len(), labels);
        }
        ScorerVariant::Bilstm => {
            let h = config.lstm_dim;
            layout.push("pretrained", vocab.pretrained.len(), pretrained_dim);
            layout.push("word", vocab.forms.len(), config.word_dim);
            layout.push("pos", vocab.pos.len(), config.pos_dim);
            layout.push(
                "compose_w",
                config.compose_dim,
                pretrained_dim + config.word_dim + config.pos_dim,
            );
            layout.push("compose_b", 1, config.compose_dim);
            for l in 0..config.lstm_layers {
                let input = if l == 0 { config.compose_dim } else { 2 * h };
                for dir in ["f", "b"] {
                    layout.push(&format!("lstm{l}{dir}_w"), 4 * h, input + h);
                    layout.push(&format!("lstm{l}{dir}_b"), 1, 4 * h);
                }
            }
            layout.push("root", 1, 2 * h);
            layout.push("arc_wh", config.hidden_dim, 2 * h);
            layout.push("arc_wm", config.hidden_dim, 2 * h);
            layout.push("arc_b", 1, config.hidden_dim);
            layout.push("arc_v", 1, config.hidden_dim);
            layout.push("lab_wh", config.labeler_hidden, 2 * h);
            layout.push("lab_wm", config.labeler_hidden, 2 * h);
            layout.push("lab_b", 1, config.labeler_hidden);
            layout.push("lab_out", labels, config.labeler_hidden);
            layout.push("lab_out_b", 1, labels);
        }
    }
    layout
}
