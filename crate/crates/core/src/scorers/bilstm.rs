//! BiLSTM arc scorer and MLP labeler with hand-written backpropagation.
//!
//! Word `i` is represented by `relu(C [pre_i; word_i; pos_i] + c)`; a stack
//! of bidirectional LSTM layers turns these into contextual vectors `x̄_i`
//! (forward and backward states concatenated). The root uses a learned
//! vector `x̄_0`. Gates are ordered input, forget, candidate, output.

use super::{ScorerModel, Segment};
use crate::decoders::ArcScoreMatrix;
use crate::treebank::{ParseTree, Sentence};

use super::linear::softmax;

/// `out = W x` for a row-major `rows x cols` matrix.
fn matvec(w: &[f64], cols: usize, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(x.len(), cols);
    for (row, o) in w.chunks_exact(cols).zip(out.iter_mut()) {
        *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
    }
}

/// `out += Wᵀ y`.
fn mat_t_vec_acc(w: &[f64], cols: usize, y: &[f64], out: &mut [f64]) {
    for (row, &yi) in w.chunks_exact(cols).zip(y) {
        if yi == 0.0 {
            continue;
        }
        for (o, a) in out.iter_mut().zip(row) {
            *o += a * yi;
        }
    }
}

/// `G += y xᵀ`.
fn outer_acc(g: &mut [f64], cols: usize, y: &[f64], x: &[f64]) {
    for (row, &yi) in g.chunks_exact_mut(cols).zip(y) {
        if yi == 0.0 {
            continue;
        }
        for (gij, xj) in row.iter_mut().zip(x) {
            *gij += yi * xj;
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn axpy(out: &mut [f64], a: &[f64]) {
    for (o, x) in out.iter_mut().zip(a) {
        *o += x;
    }
}

struct Params<'a> {
    model: &'a ScorerModel,
}

impl<'a> Params<'a> {
    fn seg(&self, name: &str) -> (&'a Segment, &'a [f64]) {
        let seg = self.model.layout.get(name);
        (seg, &self.model.params[seg.range()])
    }
}

pub(crate) struct StepCache {
    /// `[x_t; h_{t-1}]`
    input: Vec<f64>,
    c_prev: Vec<f64>,
    /// Activated gates `[i; f; g; o]`.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
}

struct LayerCache {
    forward: Vec<StepCache>,
    /// Step `t` of the backward pass reads position `n - 1 - t`.
    backward: Vec<StepCache>,
}

pub(crate) struct BilstmForward {
    n: usize,
    word_ids: Vec<usize>,
    pos_ids: Vec<usize>,
    raw: Vec<Vec<f64>>,
    compose_pre: Vec<Vec<f64>>,
    layers: Vec<LayerCache>,
    /// Contextual vectors, index 0 is the root.
    xbar: Vec<Vec<f64>>,
    /// tanh activations of the arc layer, `(h * (n + 1) + m) * hidden`.
    act: Vec<f64>,
}

fn run_direction(
    w: &[f64],
    b: &[f64],
    hidden: usize,
    inputs: impl Iterator<Item = Vec<f64>>,
) -> Vec<StepCache> {
    let mut h_prev = vec![0.0; hidden];
    let mut c_prev = vec![0.0; hidden];
    let mut steps = Vec::new();
    for x in inputs {
        let mut input = x;
        input.extend_from_slice(&h_prev);
        let mut gates = vec![0.0; 4 * hidden];
        matvec(w, input.len(), &input, &mut gates);
        axpy(&mut gates, b);
        for (k, v) in gates.iter_mut().enumerate() {
            *v = if (2 * hidden..3 * hidden).contains(&k) {
                v.tanh()
            } else {
                sigmoid(*v)
            };
        }
        let mut c = vec![0.0; hidden];
        let mut tanh_c = vec![0.0; hidden];
        let mut h = vec![0.0; hidden];
        for j in 0..hidden {
            let (i, f, g, o) = (
                gates[j],
                gates[hidden + j],
                gates[2 * hidden + j],
                gates[3 * hidden + j],
            );
            c[j] = f * c_prev[j] + i * g;
            tanh_c[j] = c[j].tanh();
            h[j] = o * tanh_c[j];
        }
        steps.push(StepCache {
            input,
            c_prev: std::mem::replace(&mut c_prev, c),
            gates,
            tanh_c,
            h: h.clone(),
        });
        h_prev = h;
    }
    steps
}

pub(crate) fn forward(model: &ScorerModel, sentence: &Sentence) -> (ArcScoreMatrix, BilstmForward) {
    let p = Params { model };
    let config = &model.config;
    let n = sentence.len();
    let vocab = &model.vocab;
    let hidden = config.lstm_dim;

    let (_, pre) = p.seg("pretrained");
    let (_, word) = p.seg("word");
    let (_, pos) = p.seg("pos");
    let (cw_seg, cw) = p.seg("compose_w");
    let (_, cb) = p.seg("compose_b");
    let pdim = model.pretrained_dim;

    let word_ids: Vec<usize> = sentence.tokens.iter().map(|t| vocab.forms.get_or_unk(&t.form)).collect();
    let pos_ids: Vec<usize> = sentence.tokens.iter().map(|t| vocab.pos.get_or_unk(&t.pos)).collect();
    let mut raw = Vec::with_capacity(n);
    let mut compose_pre = Vec::with_capacity(n);
    let mut composed = Vec::with_capacity(n);
    for (i, t) in sentence.tokens.iter().enumerate() {
        let pre_id = vocab.pretrained.get_or_unk(&t.form);
        let mut r = Vec::with_capacity(cw_seg.cols);
        r.extend_from_slice(&pre[pre_id * pdim..(pre_id + 1) * pdim]);
        r.extend_from_slice(&word[word_ids[i] * config.word_dim..(word_ids[i] + 1) * config.word_dim]);
        r.extend_from_slice(&pos[pos_ids[i] * config.pos_dim..(pos_ids[i] + 1) * config.pos_dim]);
        let mut z = vec![0.0; config.compose_dim];
        matvec(cw, cw_seg.cols, &r, &mut z);
        axpy(&mut z, cb);
        composed.push(z.iter().map(|v| v.max(0.0)).collect::<Vec<f64>>());
        compose_pre.push(z);
        raw.push(r);
    }

    let mut layers = Vec::with_capacity(config.lstm_layers);
    let mut current = composed;
    for l in 0..config.lstm_layers {
        let (_, fw) = p.seg(&format!("lstm{l}f_w"));
        let (_, fb) = p.seg(&format!("lstm{l}f_b"));
        let (_, bw) = p.seg(&format!("lstm{l}b_w"));
        let (_, bb) = p.seg(&format!("lstm{l}b_b"));
        let fwd = run_direction(fw, fb, hidden, current.iter().cloned());
        let bwd = run_direction(bw, bb, hidden, current.iter().rev().cloned());
        current = (0..n)
            .map(|i| {
                let mut v = fwd[i].h.clone();
                v.extend_from_slice(&bwd[n - 1 - i].h);
                v
            })
            .collect();
        layers.push(LayerCache {
            forward: fwd,
            backward: bwd,
        });
    }

    let (_, root) = p.seg("root");
    let mut xbar = Vec::with_capacity(n + 1);
    xbar.push(root.to_vec());
    xbar.extend(current);

    let (wh_seg, wh) = p.seg("arc_wh");
    let (_, wm) = p.seg("arc_wm");
    let (_, ab) = p.seg("arc_b");
    let (_, av) = p.seg("arc_v");
    let a = config.hidden_dim;
    let mut arc_h = vec![vec![0.0; a]; n + 1];
    let mut arc_m = vec![vec![0.0; a]; n + 1];
    for i in 0..=n {
        matvec(wh, wh_seg.cols, &xbar[i], &mut arc_h[i]);
        if i > 0 {
            matvec(wm, wh_seg.cols, &xbar[i], &mut arc_m[i]);
        }
    }
    let mut act = vec![0.0; (n + 1) * (n + 1) * a];
    let mut scores = ArcScoreMatrix::zeros(n);
    for m in 1..=n {
        for h in (0..=n).filter(|&h| h != m) {
            let base = (h * (n + 1) + m) * a;
            let mut s = 0.0;
            for k in 0..a {
                let t = (arc_h[h][k] + arc_m[m][k] + ab[k]).tanh();
                act[base + k] = t;
                s += av[k] * t;
            }
            scores.set(h, m, s);
        }
    }

    (
        scores,
        BilstmForward {
            n,
            word_ids,
            pos_ids,
            raw,
            compose_pre,
            layers,
            xbar,
            act,
        },
    )
}

/// Hidden activations and label logits of the labeler for arc `(h, m)`.
fn labeler(model: &ScorerModel, f: &BilstmForward, h: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
    let p = Params { model };
    let (lh_seg, lh) = p.seg("lab_wh");
    let (_, lm) = p.seg("lab_wm");
    let (_, lb) = p.seg("lab_b");
    let (lo_seg, lo) = p.seg("lab_out");
    let (_, lob) = p.seg("lab_out_b");
    let b = lh_seg.rows;
    let mut u = vec![0.0; b];
    let mut tmp = vec![0.0; b];
    matvec(lh, lh_seg.cols, &f.xbar[h], &mut u);
    matvec(lm, lh_seg.cols, &f.xbar[m], &mut tmp);
    for k in 0..b {
        u[k] = (u[k] + tmp[k] + lb[k]).tanh();
    }
    let mut logits = vec![0.0; lo_seg.rows];
    if lo_seg.rows > 0 {
        matvec(lo, lo_seg.cols, &u, &mut logits);
        axpy(&mut logits, lob);
    }
    (u, logits)
}

pub(crate) fn label_scores(model: &ScorerModel, f: &BilstmForward, h: usize, m: usize) -> Vec<f64> {
    labeler(model, f, h, m).1
}

pub(crate) fn label_loss(model: &ScorerModel, f: &BilstmForward, gold: &ParseTree) -> f64 {
    let mut loss = 0.0;
    for (h, m) in gold.arcs() {
        if let Some(l) = model.vocab.labels.get(gold.label(m)) {
            let p = softmax(&labeler(model, f, h, m).1);
            loss -= p[l as usize].ln();
        }
    }
    loss
}

/// Backpropagate one direction of one layer. `d_out(pos)` is the gradient
/// reaching that direction's hidden state at sentence position `pos`;
/// input gradients are accumulated into `d_in`.
#[allow(clippy::too_many_arguments)]
fn backprop_direction(
    steps: &[StepCache],
    positions: &[usize],
    d_out: &[Vec<f64>],
    w: &[f64],
    hidden: usize,
    input_dim: usize,
    gw: &mut [f64],
    gb: &mut [f64],
    d_in: &mut [Vec<f64>],
) {
    let mut dh_next = vec![0.0; hidden];
    let mut dc_next = vec![0.0; hidden];
    let cols = input_dim + hidden;
    let mut dpre = vec![0.0; 4 * hidden];
    let mut d_input = vec![0.0; cols];
    for (t, step) in steps.iter().enumerate().rev() {
        let pos = positions[t];
        let gates = &step.gates;
        for j in 0..hidden {
            let dh = d_out[pos][j] + dh_next[j];
            let (i, f, g, o) = (
                gates[j],
                gates[hidden + j],
                gates[2 * hidden + j],
                gates[3 * hidden + j],
            );
            let tc = step.tanh_c[j];
            let d_o = dh * tc;
            let dc = dc_next[j] + dh * o * (1.0 - tc * tc);
            let d_i = dc * g;
            let d_f = dc * step.c_prev[j];
            let d_g = dc * i;
            dc_next[j] = dc * f;
            dpre[j] = d_i * i * (1.0 - i);
            dpre[hidden + j] = d_f * f * (1.0 - f);
            dpre[2 * hidden + j] = d_g * (1.0 - g * g);
            dpre[3 * hidden + j] = d_o * o * (1.0 - o);
        }
        outer_acc(gw, cols, &dpre, &step.input);
        axpy(gb, &dpre);
        d_input.iter_mut().for_each(|x| *x = 0.0);
        mat_t_vec_acc(w, cols, &dpre, &mut d_input);
        axpy(&mut d_in[pos], &d_input[..input_dim]);
        dh_next.copy_from_slice(&d_input[input_dim..]);
    }
}

pub(crate) fn backward(
    model: &ScorerModel,
    f: &BilstmForward,
    upstream: Option<&ArcScoreMatrix>,
    gold: Option<&ParseTree>,
    grad: &mut [f64],
) -> f64 {
    let config = &model.config;
    let layout = &model.layout;
    let n = f.n;
    let hidden = config.lstm_dim;
    let xdim = 2 * hidden;
    let p = Params { model };
    let mut d_xbar = vec![vec![0.0; xdim]; n + 1];

    if let Some(up) = upstream {
        let a = config.hidden_dim;
        let (_, av) = p.seg("arc_v");
        let (wh_seg, wh) = p.seg("arc_wh");
        let (_, wm) = p.seg("arc_wm");
        let mut d_arc_h = vec![vec![0.0; a]; n + 1];
        let mut d_arc_m = vec![vec![0.0; a]; n + 1];
        let mut dv = vec![0.0; a];
        let mut db = vec![0.0; a];
        for (h, m, g) in up.arcs() {
            if g == 0.0 {
                continue;
            }
            let base = (h * (n + 1) + m) * a;
            for k in 0..a {
                let t = f.act[base + k];
                dv[k] += g * t;
                let dz = g * av[k] * (1.0 - t * t);
                db[k] += dz;
                d_arc_h[h][k] += dz;
                d_arc_m[m][k] += dz;
            }
        }
        axpy(&mut grad[layout.get("arc_v").range()], &dv);
        axpy(&mut grad[layout.get("arc_b").range()], &db);
        let wh_range = layout.get("arc_wh").range();
        let wm_range = layout.get("arc_wm").range();
        for i in 0..=n {
            outer_acc(&mut grad[wh_range.clone()], wh_seg.cols, &d_arc_h[i], &f.xbar[i]);
            mat_t_vec_acc(wh, wh_seg.cols, &d_arc_h[i], &mut d_xbar[i]);
            if i > 0 {
                outer_acc(&mut grad[wm_range.clone()], wh_seg.cols, &d_arc_m[i], &f.xbar[i]);
                mat_t_vec_acc(wm, wh_seg.cols, &d_arc_m[i], &mut d_xbar[i]);
            }
        }
    }

    let mut loss = 0.0;
    if let Some(gold) = gold {
        let (lh_seg, lh) = p.seg("lab_wh");
        let (_, lm) = p.seg("lab_wm");
        let (lo_seg, lo) = p.seg("lab_out");
        let b = lh_seg.rows;
        for (h, m) in gold.arcs() {
            let Some(target) = model.vocab.labels.get(gold.label(m)) else {
                continue;
            };
            let (u, logits) = labeler(model, f, h, m);
            let mut dlogits = softmax(&logits);
            loss -= dlogits[target as usize].ln();
            dlogits[target as usize] -= 1.0;
            outer_acc(&mut grad[layout.get("lab_out").range()], lo_seg.cols, &dlogits, &u);
            axpy(&mut grad[layout.get("lab_out_b").range()], &dlogits);
            let mut du = vec![0.0; b];
            mat_t_vec_acc(lo, lo_seg.cols, &dlogits, &mut du);
            let dz: Vec<f64> = du.iter().zip(&u).map(|(d, t)| d * (1.0 - t * t)).collect();
            axpy(&mut grad[layout.get("lab_b").range()], &dz);
            outer_acc(&mut grad[layout.get("lab_wh").range()], lh_seg.cols, &dz, &f.xbar[h]);
            outer_acc(&mut grad[layout.get("lab_wm").range()], lh_seg.cols, &dz, &f.xbar[m]);
            mat_t_vec_acc(lh, lh_seg.cols, &dz, &mut d_xbar[h]);
            mat_t_vec_acc(lm, lh_seg.cols, &dz, &mut d_xbar[m]);
        }
    }

    axpy(&mut grad[layout.get("root").range()], &d_xbar[0]);

    // Down through the recurrent layers.
    let mut d_current: Vec<Vec<f64>> = d_xbar.split_off(1);
    for l in (0..config.lstm_layers).rev() {
        let cache = &f.layers[l];
        let input_dim = if l == 0 { config.compose_dim } else { 2 * hidden };
        let mut d_in = vec![vec![0.0; input_dim]; n];
        let d_fwd: Vec<Vec<f64>> = d_current.iter().map(|d| d[..hidden].to_vec()).collect();
        let d_bwd: Vec<Vec<f64>> = d_current.iter().map(|d| d[hidden..].to_vec()).collect();
        let forward_positions: Vec<usize> = (0..n).collect();
        let backward_positions: Vec<usize> = (0..n).rev().collect();
        for (dir, steps, positions, d_out) in [
            ("f", &cache.forward, &forward_positions, &d_fwd),
            ("b", &cache.backward, &backward_positions, &d_bwd),
        ] {
            let w_seg = layout.get(&format!("lstm{l}{dir}_w"));
            let b_seg = layout.get(&format!("lstm{l}{dir}_b"));
            let w = &model.params[w_seg.range()];
            let mut gw = vec![0.0; w_seg.len()];
            let mut gb = vec![0.0; b_seg.len()];
            backprop_direction(steps, positions, d_out, w, hidden, input_dim, &mut gw, &mut gb, &mut d_in);
            axpy(&mut grad[w_seg.range()], &gw);
            axpy(&mut grad[b_seg.range()], &gb);
        }
        d_current = d_in;
    }

    // Composition layer and embeddings; the pretrained block stays frozen.
    let (cw_seg, cw) = p.seg("compose_w");
    let cw_range = cw_seg.range();
    let cb_range = layout.get("compose_b").range();
    let word_offset = layout.get("word").offset;
    let pos_offset = layout.get("pos").offset;
    let pdim = model.pretrained_dim;
    for i in 0..n {
        let dz: Vec<f64> = d_current[i]
            .iter()
            .zip(&f.compose_pre[i])
            .map(|(d, z)| if *z > 0.0 { *d } else { 0.0 })
            .collect();
        outer_acc(&mut grad[cw_range.clone()], cw_seg.cols, &dz, &f.raw[i]);
        axpy(&mut grad[cb_range.clone()], &dz);
        let mut d_raw = vec![0.0; cw_seg.cols];
        mat_t_vec_acc(cw, cw_seg.cols, &dz, &mut d_raw);
        let wd = config.word_dim;
        let w0 = word_offset + f.word_ids[i] * wd;
        axpy(&mut grad[w0..w0 + wd], &d_raw[pdim..pdim + wd]);
        let pd = config.pos_dim;
        let p0 = pos_offset + f.pos_ids[i] * pd;
        axpy(&mut grad[p0..p0 + pd], &d_raw[pdim + wd..pdim + wd + pd]);
    }
    loss
}
