//! Sparse linear arc scorer and log-linear labeler.

use super::vocab::{FeatureKey, BOS, EOS, ROOT};
use super::{ScorerModel, Vocabularies};
use crate::decoders::ArcScoreMatrix;
use crate::treebank::{ParseTree, Sentence};

// Arc feature templates.
const T_BIAS: u32 = 0;
const T_POS_DIST: u32 = 1;
const T_POS_DIR: u32 = 2;
const T_HFORM_MPOS: u32 = 3;
const T_HPOS_MFORM: u32 = 4;
const T_FORMS: u32 = 5;
const T_HEAD: u32 = 6;
const T_MOD: u32 = 7;
const T_BETWEEN: u32 = 8;
const T_CONTEXT_IN: u32 = 9;
const T_CONTEXT_OUT: u32 = 10;
/// Head tag and modifier tag, no direction.
pub(crate) const T_HPOS_MPOS: u32 = 11;

/// Vocabulary ids of one sentence, with the root at 0 and one pad on each side.
pub(crate) struct SentenceIds {
    n: usize,
    // index i + 1 holds position i; index 0 is BOS, index n + 2 is EOS
    forms: Vec<u32>,
    pos: Vec<u32>,
}

impl SentenceIds {
    pub(crate) fn new(vocab: &Vocabularies, sentence: &Sentence) -> Self {
        let n = sentence.len();
        let mut forms = Vec::with_capacity(n + 3);
        let mut pos = Vec::with_capacity(n + 3);
        forms.push(vocab.forms.get_or_unk(BOS) as u32);
        pos.push(vocab.pos.get_or_unk(BOS) as u32);
        forms.push(vocab.forms.get_or_unk(ROOT) as u32);
        pos.push(vocab.pos.get_or_unk(ROOT) as u32);
        for t in &sentence.tokens {
            forms.push(vocab.forms.get_or_unk(&t.form) as u32);
            pos.push(vocab.pos.get_or_unk(&t.pos) as u32);
        }
        forms.push(vocab.forms.get_or_unk(EOS) as u32);
        pos.push(vocab.pos.get_or_unk(EOS) as u32);
        SentenceIds { n, forms, pos }
    }

    fn form(&self, i: usize) -> u32 {
        self.forms[i + 1]
    }

    fn pos(&self, i: usize) -> u32 {
        self.pos[i + 1]
    }

    /// Tag at `i + offset`, padded outside `0..=n`.
    fn pos_at(&self, i: usize, offset: isize) -> u32 {
        let j = (i as isize + offset + 1).clamp(0, (self.n + 2) as isize) as usize;
        self.pos[j]
    }
}

fn distance_bucket(h: usize, m: usize) -> u32 {
    match h.abs_diff(m) {
        d @ 1..=5 => d as u32,
        6..=10 => 6,
        _ => 7,
    }
}

/// Features of arc `(h, m)` with their values.
pub(crate) fn arc_feature_keys(ids: &SentenceIds, h: usize, m: usize, out: &mut Vec<(FeatureKey, f64)>) {
    out.clear();
    let dir = u32::from(h < m);
    let dist = distance_bucket(h, m);
    let (hf, hp, mf, mp) = (ids.form(h), ids.pos(h), ids.form(m), ids.pos(m));
    out.push(([T_BIAS, dir, dist, 0, 0, 0], 1.0));
    out.push(([T_POS_DIST, hp, mp, dir, dist, 0], 1.0));
    out.push(([T_POS_DIR, hp, mp, dir, 0, 0], 1.0));
    out.push(([T_HFORM_MPOS, hf, mp, dir, 0, 0], 1.0));
    out.push(([T_HPOS_MFORM, hp, mf, dir, 0, 0], 1.0));
    out.push(([T_FORMS, hf, mf, dir, 0, 0], 1.0));
    out.push(([T_HEAD, hf, hp, dir, 0, 0], 1.0));
    out.push(([T_MOD, mf, mp, dir, 0, 0], 1.0));
    out.push(([T_HPOS_MPOS, hp, mp, 0, 0, 0], 1.0));
    let (hpl, hpr) = (ids.pos_at(h, -1), ids.pos_at(h, 1));
    let (mpl, mpr) = (ids.pos_at(m, -1), ids.pos_at(m, 1));
    out.push(([T_CONTEXT_IN, hp, hpr, mpl, mp, dir], 1.0));
    out.push(([T_CONTEXT_OUT, hpl, hp, mp, mpr, dir], 1.0));
    let (lo, hi) = (h.min(m), h.max(m));
    if hi - lo > 1 {
        let start = out.len();
        for k in lo + 1..hi {
            let key = [T_BETWEEN, hp, ids.pos(k), mp, dir, 0];
            match out[start..].iter_mut().find(|(existing, _)| *existing == key) {
                Some((_, count)) => *count += 1.0,
                None => out.push((key, 1.0)),
            }
        }
    }
}

/// Labeler features of arc `(h, m)`; every one has value 1.
pub(crate) fn label_feature_keys(ids: &SentenceIds, h: usize, m: usize, out: &mut Vec<FeatureKey>) {
    out.clear();
    let dir = u32::from(h < m);
    let dist = distance_bucket(h, m);
    let (hf, hp, mf, mp) = (ids.form(h), ids.pos(h), ids.form(m), ids.pos(m));
    out.push([0, hp, mp, dir, 0, 0]);
    out.push([1, mf, 0, 0, 0, 0]);
    out.push([2, mp, dir, dist, 0, 0]);
    out.push([3, hf, mp, 0, 0, 0]);
    out.push([4, hp, mf, 0, 0, 0]);
    out.push([5, hp, 0, 0, 0, 0]);
    out.push([6, mp, 0, 0, 0, 0]);
    out.push([7, mp, ids.pos_at(m, 1), 0, 0, 0]);
    out.push([8, ids.pos_at(m, -1), mp, 0, 0, 0]);
    out.push([9, hf, mf, dir, 0, 0]);
}

/// Collect arc features over every candidate arc and labeler features over
/// gold arcs of the training data.
pub(crate) fn build_features(vocab: &mut Vocabularies, train: &[Sentence]) {
    let mut arc_buf = Vec::new();
    let mut label_buf = Vec::new();
    for s in train {
        let ids = SentenceIds::new(vocab, s);
        let n = s.len();
        for m in 1..=n {
            for h in (0..=n).filter(|&h| h != m) {
                arc_feature_keys(&ids, h, m, &mut arc_buf);
                for (key, _) in &arc_buf {
                    vocab.arc_features.intern(*key);
                }
            }
        }
        if let Some(gold) = &s.gold {
            for (h, m) in gold.arcs() {
                label_feature_keys(&ids, h, m, &mut label_buf);
                for key in &label_buf {
                    vocab.label_features.intern(*key);
                }
            }
        }
    }
}

pub(crate) struct LinearForward {
    ids: SentenceIds,
    /// Known features of every arc, indexed `h * (n + 1) + m`.
    arcs: Vec<Vec<(u32, f64)>>,
}

pub(crate) fn forward(model: &ScorerModel, sentence: &Sentence) -> (ArcScoreMatrix, LinearForward) {
    let ids = SentenceIds::new(&model.vocab, sentence);
    let n = sentence.len();
    let weights = &model.params[model.layout.get("arc").range()];
    let mut arcs = vec![Vec::new(); (n + 1) * (n + 1)];
    let mut scores = ArcScoreMatrix::zeros(n);
    let mut buf = Vec::new();
    for m in 1..=n {
        for h in (0..=n).filter(|&h| h != m) {
            arc_feature_keys(&ids, h, m, &mut buf);
            let known: Vec<(u32, f64)> = buf
                .iter()
                .filter_map(|(key, value)| model.vocab.arc_features.get(key).map(|id| (id, *value)))
                .collect();
            let s = known.iter().map(|&(id, v)| weights[id as usize] * v).sum();
            scores.set(h, m, s);
            arcs[h * (n + 1) + m] = known;
        }
    }
    (scores, LinearForward { ids, arcs })
}

fn known_label_features(model: &ScorerModel, f: &LinearForward, h: usize, m: usize) -> Vec<usize> {
    let mut buf = Vec::new();
    label_feature_keys(&f.ids, h, m, &mut buf);
    buf.iter()
        .filter_map(|k| model.vocab.label_features.get(k).map(|id| id as usize))
        .collect()
}

pub(crate) fn label_scores(model: &ScorerModel, f: &LinearForward, h: usize, m: usize) -> Vec<f64> {
    let labels = model.vocab.labels.len();
    let weights = &model.params[model.layout.get("label").range()];
    let mut scores = vec![0.0; labels];
    for id in known_label_features(model, f, h, m) {
        for (l, s) in scores.iter_mut().enumerate() {
            *s += weights[id * labels + l];
        }
    }
    scores
}

pub(crate) fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / z).collect()
}

pub(crate) fn label_loss(model: &ScorerModel, f: &LinearForward, gold: &ParseTree) -> f64 {
    let mut loss = 0.0;
    for (h, m) in gold.arcs() {
        if let Some(l) = model.vocab.labels.get(gold.label(m)) {
            let p = softmax(&label_scores(model, f, h, m));
            loss -= p[l as usize].ln();
        }
    }
    loss
}

pub(crate) fn backward(
    model: &ScorerModel,
    f: &LinearForward,
    upstream: Option<&ArcScoreMatrix>,
    gold: Option<&ParseTree>,
    grad: &mut [f64],
) -> f64 {
    let n = f.ids.n;
    if let Some(up) = upstream {
        let offset = model.layout.get("arc").offset;
        for (h, m, g) in up.arcs() {
            if g == 0.0 {
                continue;
            }
            for &(id, value) in &f.arcs[h * (n + 1) + m] {
                grad[offset + id as usize] += g * value;
            }
        }
    }
    let mut loss = 0.0;
    if let Some(gold) = gold {
        let labels = model.vocab.labels.len();
        let offset = model.layout.get("label").offset;
        for (h, m) in gold.arcs() {
            let Some(target) = model.vocab.labels.get(gold.label(m)) else {
                continue;
            };
            let p = softmax(&label_scores(model, f, h, m));
            loss -= p[target as usize].ln();
            for id in known_label_features(model, f, h, m) {
                for (l, pl) in p.iter().enumerate() {
                    let indicator = if l == target as usize { 1.0 } else { 0.0 };
                    grad[offset + id * labels + l] += pl - indicator;
                }
            }
        }
    }
    loss
}
