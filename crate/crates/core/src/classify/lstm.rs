//! Single-layer LSTM binary classifier with hand-written backpropagation.
//!
//! All parameters live in one flat `f64` buffer laid out as
//! `E (V×d) | W_i W_f W_o W_g (d×h each) | U_i U_f U_o U_g (h×h each) |
//! b_i b_f b_o b_g (h each) | w_out (h) | b_out`, matrices row-major.
//! Index 0 is padding (no embedding, no state update), index 1 is unknown.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{split_train_val_test, Dataset};
use crate::error::{Error, Result};
use crate::labeling::TweetClass;

pub const PAD: usize = 0;
pub const UNK: usize = 1;
const CHECKPOINT_MAGIC: &[u8; 8] = b"ESLSTM01";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Output = 2,
    Cell = 3,
}

impl Gate {
    pub const ALL: [Gate; 4] = [Gate::Input, Gate::Forget, Gate::Output, Gate::Cell];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layout {
    v: usize,
    d: usize,
    h: usize,
}

impl Layout {
    fn dense_start(&self) -> usize {
        self.v * self.d
    }
    fn w(&self, g: usize) -> usize {
        self.dense_start() + g * self.d * self.h
    }
    fn u(&self, g: usize) -> usize {
        self.w(4) + g * self.h * self.h
    }
    fn b(&self, g: usize) -> usize {
        self.u(4) + g * self.h
    }
    fn w_out(&self) -> usize {
        self.b(4)
    }
    fn b_out(&self) -> usize {
        self.w_out() + self.h
    }
    fn len(&self) -> usize {
        self.b_out() + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParameters {
    layout: Layout,
    pub data: Vec<f64>,
}

impl LstmParameters {
    pub fn zeros(vocab_size: usize, embed_dim: usize, hidden: usize) -> Self {
        let layout = Layout {
            v: vocab_size,
            d: embed_dim,
            h: hidden,
        };
        Self {
            data: vec![0.0; layout.len()],
            layout,
        }
    }

    /// Every parameter uniform in `(-scale, scale)`, padding row zero.
    pub fn random<R: Rng>(vocab_size: usize, embed_dim: usize, hidden: usize, scale: f64, rng: &mut R) -> Self {
        let mut p = Self::zeros(vocab_size, embed_dim, hidden);
        for x in p.data.iter_mut() {
            *x = rng.random_range(-scale..scale);
        }
        p.embedding_mut(PAD).iter_mut().for_each(|x| *x = 0.0);
        p
    }

    pub fn vocab_size(&self) -> usize {
        self.layout.v
    }
    pub fn embed_dim(&self) -> usize {
        self.layout.d
    }
    pub fn hidden(&self) -> usize {
        self.layout.h
    }
    pub fn len(&self) -> usize {
        self.data.len()
    }
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn embedding(&self, idx: usize) -> &[f64] {
        let d = self.layout.d;
        &self.data[idx * d..(idx + 1) * d]
    }
    pub fn embedding_mut(&mut self, idx: usize) -> &mut [f64] {
        let d = self.layout.d;
        &mut self.data[idx * d..(idx + 1) * d]
    }
    /// Input weights `d×h`, row-major.
    pub fn w(&self, g: Gate) -> &[f64] {
        let o = self.layout.w(g as usize);
        &self.data[o..o + self.layout.d * self.layout.h]
    }
    /// Recurrent weights `h×h`, row-major.
    pub fn u(&self, g: Gate) -> &[f64] {
        let o = self.layout.u(g as usize);
        &self.data[o..o + self.layout.h * self.layout.h]
    }
    pub fn b(&self, g: Gate) -> &[f64] {
        let o = self.layout.b(g as usize);
        &self.data[o..o + self.layout.h]
    }
    pub fn b_mut(&mut self, g: Gate) -> &mut [f64] {
        let o = self.layout.b(g as usize);
        let h = self.layout.h;
        &mut self.data[o..o + h]
    }
    pub fn w_out(&self) -> &[f64] {
        let o = self.layout.w_out();
        &self.data[o..o + self.layout.h]
    }
    pub fn b_out(&self) -> f64 {
        self.data[self.layout.b_out()]
    }
    pub fn set_b_out(&mut self, v: f64) {
        let o = self.layout.b_out();
        self.data[o] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Magic, then `vocab_size, embed_dim, hidden` as u64 LE, then all values as f64 LE.
    pub fn write_checkpoint<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(CHECKPOINT_MAGIC)?;
        for dim in [self.layout.v, self.layout.d, self.layout.h] {
            out.write_all(&(dim as u64).to_le_bytes())?;
        }
        for x in &self.data {
            out.write_all(&x.to_le_bytes())?;
        }
        out.flush()
    }

    pub fn read_checkpoint<R: Read>(mut input: R, context: &str) -> Result<Self> {
        let bad = |msg: &str| Error::parse(context, msg.to_string());
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(bad("not an LSTM checkpoint"));
        }
        let mut dims = [0usize; 3];
        for d in dims.iter_mut() {
            let mut buf = [0u8; 8];
            input.read_exact(&mut buf).map_err(|_| bad("truncated header"))?;
            *d = usize::try_from(u64::from_le_bytes(buf)).map_err(|_| bad("dimension overflow"))?;
        }
        let mut p = Self::zeros(dims[0], dims[1], dims[2]);
        let mut buf = [0u8; 8];
        for x in p.data.iter_mut() {
            input.read_exact(&mut buf).map_err(|_| bad("truncated parameters"))?;
            *x = f64::from_le_bytes(buf);
        }
        if input.read(&mut buf).map_err(|e| Error::io(context, e))? != 0 {
            return Err(bad("trailing bytes after parameters"));
        }
        Ok(p)
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

struct Step {
    idx: usize,
    gates: [Vec<f64>; 4],
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
}

fn run(p: &LstmParameters, seq: &[usize]) -> Result<Vec<Step>> {
    let Layout { v, d, h } = p.layout;
    let mut steps: Vec<Step> = Vec::new();
    let mut h_prev = vec![0.0; h];
    let mut c_prev = vec![0.0; h];
    for (t, &idx) in seq.iter().enumerate() {
        if idx == PAD {
            continue;
        }
        if idx >= v {
            return Err(Error::InvalidArgument(format!("token index {idx} outside vocabulary of {v}")));
        }
        let x = p.embedding(idx);
        let gates: [Vec<f64>; 4] = std::array::from_fn(|g| {
            let mut a = p.data[p.layout.b(g)..p.layout.b(g) + h].to_vec();
            let w = &p.data[p.layout.w(g)..];
            for (k, &xk) in x.iter().enumerate().take(d) {
                for (j, aj) in a.iter_mut().enumerate() {
                    *aj += xk * w[k * h + j];
                }
            }
            let u = &p.data[p.layout.u(g)..];
            for (k, &hk) in h_prev.iter().enumerate() {
                for (j, aj) in a.iter_mut().enumerate() {
                    *aj += hk * u[k * h + j];
                }
            }
            let f: fn(f64) -> f64 = if g == Gate::Cell as usize { f64::tanh } else { sigmoid };
            a.iter_mut().for_each(|z| *z = f(*z));
            a
        });
        let c: Vec<f64> = (0..h)
            .map(|j| gates[1][j] * c_prev[j] + gates[0][j] * gates[3][j])
            .collect();
        let tanh_c: Vec<f64> = c.iter().map(|x| x.tanh()).collect();
        let h_new: Vec<f64> = (0..h).map(|j| gates[2][j] * tanh_c[j]).collect();
        if c.iter().chain(&h_new).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("LSTM state at step {t}")));
        }
        steps.push(Step {
            idx,
            gates,
            h_prev: std::mem::replace(&mut h_prev, h_new.clone()),
            c_prev: std::mem::replace(&mut c_prev, c),
            tanh_c,
            h: h_new,
        });
    }
    Ok(steps)
}

fn final_hidden(p: &LstmParameters, steps: &[Step]) -> Vec<f64> {
    steps.last().map(|s| s.h.clone()).unwrap_or_else(|| vec![0.0; p.layout.h])
}

fn logit(p: &LstmParameters, h_last: &[f64], mask: Option<&[f64]>) -> f64 {
    let w = p.w_out();
    let dotp: f64 = match mask {
        Some(m) => h_last.iter().zip(m).zip(w).map(|((x, m), w)| x * m * w).sum(),
        None => h_last.iter().zip(w).map(|(x, w)| x * w).sum(),
    };
    dotp + p.b_out()
}

/// Positive-class probability for an index sequence (evaluation mode).
pub fn lstm_forward(params: &LstmParameters, seq: &[usize]) -> Result<f64> {
    let steps = run(params, seq)?;
    let z = logit(params, &final_hidden(params, &steps), None);
    let prob = sigmoid(z);
    if !prob.is_finite() {
        return Err(Error::NonFinite("LSTM output".into()));
    }
    Ok(prob)
}

fn bce(z: f64, y: bool) -> f64 {
    if y {
        softplus(-z)
    } else {
        softplus(z)
    }
}

/// Gradient with sparse embedding rows and a dense tail for everything else.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub rows: BTreeMap<usize, Vec<f64>>,
    pub dense: Vec<f64>,
}

impl Gradient {
    fn zeros(l: Layout) -> Self {
        Self {
            rows: BTreeMap::new(),
            dense: vec![0.0; l.len() - l.dense_start()],
        }
    }

    fn add(&mut self, other: &Gradient) {
        for (r, g) in &other.rows {
            let row = self.rows.entry(*r).or_insert_with(|| vec![0.0; g.len()]);
            row.iter_mut().zip(g).for_each(|(a, b)| *a += b);
        }
        self.dense.iter_mut().zip(&other.dense).for_each(|(a, b)| *a += b);
    }

    fn scale(&mut self, s: f64) {
        self.rows.values_mut().flatten().for_each(|x| *x *= s);
        self.dense.iter_mut().for_each(|x| *x *= s);
    }

    pub fn to_flat(&self, params: &LstmParameters) -> Vec<f64> {
        let l = params.layout;
        let mut flat = vec![0.0; l.len()];
        for (r, g) in &self.rows {
            flat[r * l.d..(r + 1) * l.d].copy_from_slice(g);
        }
        flat[l.dense_start()..].copy_from_slice(&self.dense);
        flat
    }
}

/// Deliberate backward-pass corruptions used as negative controls.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum BackwardFault {
    #[default]
    None,
    /// Drop the cell-state gradient carried to the previous step.
    DropCellCarry,
    /// Flip the sign of the forget-gate pre-activation gradient.
    FlipForgetGate,
}

fn backward(p: &LstmParameters, steps: &[Step], mask: Option<&[f64]>, dz: f64, fault: BackwardFault) -> Gradient {
    let l = p.layout;
    let (d, h) = (l.d, l.h);
    let ds = l.dense_start();
    let mut grad = Gradient::zeros(l);
    let h_last = final_hidden(p, steps);
    let w_out = p.w_out();

    let mut dh = vec![0.0; h];
    for j in 0..h {
        let m = mask.map_or(1.0, |m| m[j]);
        grad.dense[l.w_out() - ds + j] += dz * h_last[j] * m;
        dh[j] = dz * w_out[j] * m;
    }
    grad.dense[l.b_out() - ds] += dz;

    let mut dc = vec![0.0; h];
    for s in steps.iter().rev() {
        let [gi, gf, go, gg] = &s.gates;
        let mut da = [vec![0.0; h], vec![0.0; h], vec![0.0; h], vec![0.0; h]];
        let mut dc_prev = vec![0.0; h];
        for j in 0..h {
            let d_o = dh[j] * s.tanh_c[j];
            dc[j] += dh[j] * go[j] * (1.0 - s.tanh_c[j] * s.tanh_c[j]);
            da[0][j] = dc[j] * gg[j] * gi[j] * (1.0 - gi[j]);
            da[1][j] = dc[j] * s.c_prev[j] * gf[j] * (1.0 - gf[j]);
            da[2][j] = d_o * go[j] * (1.0 - go[j]);
            da[3][j] = dc[j] * gi[j] * (1.0 - gg[j] * gg[j]);
            dc_prev[j] = dc[j] * gf[j];
        }
        if fault == BackwardFault::FlipForgetGate {
            da[1].iter_mut().for_each(|x| *x = -*x);
        }

        let x = p.embedding(s.idx);
        let mut dx = vec![0.0; d];
        let mut dh_prev = vec![0.0; h];
        for (g, dag) in da.iter().enumerate() {
            let w = l.w(g);
            for k in 0..d {
                let row = w + k * h;
                let mut acc = 0.0;
                for j in 0..h {
                    grad.dense[row - ds + j] += x[k] * dag[j];
                    acc += p.data[row + j] * dag[j];
                }
                dx[k] += acc;
            }
            let u = l.u(g);
            for k in 0..h {
                let row = u + k * h;
                let mut acc = 0.0;
                for j in 0..h {
                    grad.dense[row - ds + j] += s.h_prev[k] * dag[j];
                    acc += p.data[row + j] * dag[j];
                }
                dh_prev[k] += acc;
            }
            let b = l.b(g) - ds;
            for j in 0..h {
                grad.dense[b + j] += dag[j];
            }
        }
        let row = grad.rows.entry(s.idx).or_insert_with(|| vec![0.0; d]);
        row.iter_mut().zip(&dx).for_each(|(a, b)| *a += b);

        dh = dh_prev;
        dc = if fault == BackwardFault::DropCellCarry {
            vec![0.0; h]
        } else {
            dc_prev
        };
    }
    grad
}

/// Binary cross-entropy loss and its gradient for one example.
/// `mask` scales `h_T` elementwise (dropout); `None` is evaluation mode.
fn example_grad(
    p: &LstmParameters,
    seq: &[usize],
    y: bool,
    mask: Option<&[f64]>,
    fault: BackwardFault,
) -> Result<(f64, Gradient)> {
    let steps = run(p, seq)?;
    let z = logit(p, &final_hidden(p, &steps), mask);
    let dz = sigmoid(z) - if y { 1.0 } else { 0.0 };
    Ok((bce(z, y), backward(p, &steps, mask, dz, fault)))
}

/// Loss and flat gradient in evaluation mode (no dropout).
pub fn loss_and_gradient(params: &LstmParameters, seq: &[usize], y: bool) -> Result<(f64, Vec<f64>)> {
    let (loss, g) = example_grad(params, seq, y, None, BackwardFault::None)?;
    Ok((loss, g.to_flat(params)))
}

pub fn example_loss(params: &LstmParameters, seq: &[usize], y: bool) -> Result<f64> {
    Ok(bce(example_logit(params, seq)?, y))
}

fn example_logit(params: &LstmParameters, seq: &[usize]) -> Result<f64> {
    let steps = run(params, seq)?;
    Ok(logit(params, &final_hidden(params, &steps), None))
}

/// `bce(z_a, y) - bce(z_b, y)` without subtracting two rounded losses.
///
/// softplus(a) - softplus(b) = ln(1 + sigmoid(b) * (e^(a-b) - 1)).
fn bce_difference(z_a: f64, z_b: f64, y: bool) -> f64 {
    let (a, b) = if y { (-z_a, -z_b) } else { (z_a, z_b) };
    (sigmoid(b) * (a - b).exp_m1()).ln_1p()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck {
    pub max_rel_error: f64,
    pub rel_errors: Vec<f64>,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
}

/// Max relative error between backprop and central differences over all parameters.
pub fn gradient_check(params: &LstmParameters, example: (&[usize], bool), epsilon: f64) -> f64 {
    gradient_check_detailed(params, example, epsilon, BackwardFault::None).max_rel_error
}

#[doc(hidden)]
pub fn gradient_check_detailed(
    params: &LstmParameters,
    (seq, y): (&[usize], bool),
    epsilon: f64,
    fault: BackwardFault,
) -> GradientCheck {
    let analytic = match example_grad(params, seq, y, None, fault) {
        Ok((_, g)) => g.to_flat(params),
        Err(_) => {
            return GradientCheck {
                max_rel_error: f64::INFINITY,
                rel_errors: Vec::new(),
                analytic: Vec::new(),
                numeric: Vec::new(),
            }
        }
    };
    let mut work = params.clone();
    let mut numeric = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let orig = work.data[i];
        work.data[i] = orig + epsilon;
        let plus = example_logit(&work, seq).unwrap_or(f64::NAN);
        work.data[i] = orig - epsilon;
        let minus = example_logit(&work, seq).unwrap_or(f64::NAN);
        work.data[i] = orig;
        numeric.push(bce_difference(plus, minus, y) / (2.0 * epsilon));
    }
    let rel_errors: Vec<f64> = analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| {
            let r = (a - n).abs() / (a.abs() + n.abs()).max(1e-8);
            if r.is_nan() {
                f64::INFINITY
            } else {
                r
            }
        })
        .collect();
    GradientCheck {
        max_rel_error: rel_errors.iter().copied().fold(0.0, f64::max),
        rel_errors,
        analytic,
        numeric,
    }
}

/// Token → index map; 0 is padding and 1 is unknown.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Tokens seen at least `min_count` times, by frequency descending then token.
    pub fn build<S: AsRef<[String]>>(docs: &[S], min_count: usize) -> Self {
        let mut freq: HashMap<&str, usize> = HashMap::new();
        for doc in docs {
            for t in doc.as_ref() {
                *freq.entry(t.as_str()).or_default() += 1;
            }
        }
        let mut items: Vec<(&str, usize)> = freq.into_iter().filter(|&(_, n)| n >= min_count).collect();
        items.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        Self::from_tokens(items.into_iter().map(|(t, _)| t.to_string()))
    }

    /// Vocabulary whose indices 2.. are `tokens` in order.
    pub fn from_tokens(tokens: impl IntoIterator<Item = String>) -> Self {
        let mut v = Self {
            tokens: vec!["<pad>".into(), "<unk>".into()],
            index: HashMap::new(),
        };
        for t in tokens {
            if !v.index.contains_key(&t) {
                v.index.insert(t.clone(), v.tokens.len());
                v.tokens.push(t);
            }
        }
        v
    }

    pub fn get(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, idx: usize) -> Option<&str> {
        self.tokens.get(idx).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// One token per line for indices 2.. .
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for t in &self.tokens[2..] {
            writeln!(out, "{t}")?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Self {
        Self::from_tokens(text.lines().map(str::to_string))
    }
}

/// Left-pad with 0 / right-truncate to `length`, mapping tokens through `vocab`.
pub fn pad_sequence(tokens: &[String], length: usize, vocab: &Vocab) -> Vec<usize> {
    let kept = &tokens[..tokens.len().min(length)];
    let mut out = vec![PAD; length - kept.len()];
    out.extend(kept.iter().map(|t| vocab.get(t)));
    out
}

/// Pretrained word vectors in the whitespace-separated text format.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Embeddings {
    pub dim: usize,
    pub vectors: HashMap<String, Vec<f64>>,
}

impl Embeddings {
    /// A leading `count dim` header line is skipped. If `keep` is given, other
    /// tokens are not stored.
    pub fn from_reader<R: BufRead>(reader: R, keep: Option<&HashSet<String>>, context: &str) -> Result<Self> {
        let mut out = Embeddings::default();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(context, e))?;
            let mut parts = line.split_whitespace();
            let Some(token) = parts.next() else { continue };
            let rest: Vec<&str> = parts.collect();
            if n == 0 && rest.len() == 1 && token.parse::<usize>().is_ok() && rest[0].parse::<usize>().is_ok() {
                continue;
            }
            if out.dim == 0 {
                out.dim = rest.len();
            }
            if rest.len() != out.dim || out.dim == 0 {
                return Err(Error::parse(
                    context,
                    format!("line {}: expected {} values, found {}", n + 1, out.dim, rest.len()),
                ));
            }
            if keep.is_some_and(|k| !k.contains(token)) {
                continue;
            }
            let vec = rest
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::parse(context, format!("line {}: {e}", n + 1)))?;
            out.vectors.insert(token.to_string(), vec);
        }
        if out.dim == 0 {
            return Err(Error::EmptyInput(format!("embedding file {context}")));
        }
        Ok(out)
    }

    pub fn load(path: impl AsRef<Path>, keep: Option<&HashSet<String>>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(std::io::BufReader::new(file), keep, &path.display().to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LstmConfig {
    pub hidden: usize,
    pub embed_dim: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub dropout: f64,
    pub pad_length: usize,
    pub optimizer: Optimizer,
    pub min_count: usize,
}

impl Default for LstmConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            embed_dim: 50,
            batch_size: 25,
            learning_rate: 0.001,
            epochs: 20,
            dropout: 0.5,
            pad_length: 100,
            optimizer: Optimizer::Sgd,
            min_count: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    pub params: LstmParameters,
    pub vocab: Vocab,
    pub pad_length: usize,
}

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl LstmModel {
    /// Fresh model. Embedding rows come from `embeddings` when available,
    /// otherwise uniform(-0.05, 0.05); weights uniform(±1/sqrt(h)); forget bias 1.
    pub fn init(vocab: Vocab, embeddings: Option<&Embeddings>, cfg: &LstmConfig, rng: &mut ChaCha8Rng) -> Self {
        let d = embeddings.map_or(cfg.embed_dim, |e| e.dim);
        let h = cfg.hidden;
        let scale = 1.0 / (h as f64).sqrt();
        let mut params = LstmParameters::random(vocab.len(), d, h, scale, rng);
        for idx in 1..vocab.len() {
            let pre = vocab.token(idx).and_then(|t| embeddings.and_then(|e| e.vectors.get(t)));
            let row = params.embedding_mut(idx);
            match pre {
                Some(v) => row.copy_from_slice(v),
                None => row.iter_mut().for_each(|x| *x = rng.random_range(-0.05..0.05)),
            }
        }
        for g in Gate::ALL {
            let fill = if g == Gate::Forget { 1.0 } else { 0.0 };
            params.b_mut(g).iter_mut().for_each(|x| *x = fill);
        }
        params.set_b_out(0.0);
        Self {
            params,
            vocab,
            pad_length: cfg.pad_length,
        }
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        pad_sequence(tokens, self.pad_length, &self.vocab)
    }

    pub fn predict_proba(&self, tokens: &[String]) -> Result<f64> {
        lstm_forward(&self.params, &self.encode(tokens))
    }

    /// Fraction of `seqs` whose thresholded prediction matches `ys`.
    pub fn accuracy(&self, seqs: &[Vec<usize>], ys: &[bool]) -> Result<f64> {
        if seqs.is_empty() {
            return Ok(0.0);
        }
        let preds = seqs
            .par_iter()
            .map(|s| lstm_forward(&self.params, s).map(|p| p >= 0.5))
            .collect::<Result<Vec<bool>>>()?;
        let hits = preds.iter().zip(ys).filter(|(p, y)| p == y).count();
        Ok(hits as f64 / seqs.len() as f64)
    }

    /// Minibatch training; returns the mean training loss per epoch.
    pub fn fit(&mut self, seqs: &[Vec<usize>], ys: &[bool], cfg: &LstmConfig, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        if seqs.is_empty() {
            return Err(Error::EmptyInput("no training sequences".into()));
        }
        let h = self.params.hidden();
        let keep = 1.0 - cfg.dropout;
        let mut order: Vec<usize> = (0..seqs.len()).collect();
        let mut adam = (cfg.optimizer == Optimizer::Adam).then(|| AdamState {
            m: vec![0.0; self.params.len()],
            v: vec![0.0; self.params.len()],
            t: 0,
        });
        let mut curve = Vec::with_capacity(cfg.epochs);
        for epoch in 0..cfg.epochs {
            order.shuffle(rng);
            let mut epoch_loss = 0.0;
            for (b, batch) in order.chunks(cfg.batch_size.max(1)).enumerate() {
                // Masks are drawn serially so results do not depend on thread count.
                let masks: Vec<Vec<f64>> = batch
                    .iter()
                    .map(|_| {
                        (0..h)
                            .map(|_| {
                                if cfg.dropout <= 0.0 {
                                    1.0
                                } else if rng.random::<f64>() < keep {
                                    1.0 / keep
                                } else {
                                    0.0
                                }
                            })
                            .collect()
                    })
                    .collect();
                let params = &self.params;
                let results = batch
                    .par_iter()
                    .zip(&masks)
                    .map(|(&i, m)| example_grad(params, &seqs[i], ys[i], Some(m), BackwardFault::None))
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| match e {
                        Error::NonFinite(_) => Error::Divergence {
                            epoch,
                            batch: b,
                            loss: f64::NAN,
                        },
                        e => e,
                    })?;
                let mut grad = Gradient::zeros(self.params.layout);
                let mut loss = 0.0;
                for (l, g) in &results {
                    loss += l;
                    grad.add(g);
                }
                let n = batch.len() as f64;
                loss /= n;
                if !loss.is_finite() {
                    return Err(Error::Divergence { epoch, batch: b, loss });
                }
                grad.scale(1.0 / n);
                self.apply(&grad, cfg.learning_rate, adam.as_mut());
                if !self.params.is_finite() {
                    return Err(Error::Divergence { epoch, batch: b, loss: f64::NAN });
                }
                epoch_loss += loss * n;
            }
            curve.push(epoch_loss / seqs.len() as f64);
        }
        Ok(curve)
    }

    fn apply(&mut self, grad: &Gradient, lr: f64, adam: Option<&mut AdamState>) {
        let l = self.params.layout;
        let ds = l.dense_start();
        let p = &mut self.params.data;
        match adam {
            None => {
                for (r, g) in &grad.rows {
                    if *r == PAD {
                        continue;
                    }
                    for (k, gk) in g.iter().enumerate() {
                        p[r * l.d + k] -= lr * gk;
                    }
                }
                for (i, gi) in grad.dense.iter().enumerate() {
                    p[ds + i] -= lr * gi;
                }
            }
            Some(st) => {
                // Moments of embedding rows only move when the row is used.
                const B1: f64 = 0.9;
                const B2: f64 = 0.999;
                st.t += 1;
                let c1 = 1.0 - B1.powi(st.t);
                let c2 = 1.0 - B2.powi(st.t);
                let mut upd = |i: usize, g: f64| {
                    st.m[i] = B1 * st.m[i] + (1.0 - B1) * g;
                    st.v[i] = B2 * st.v[i] + (1.0 - B2) * g * g;
                    p[i] -= lr * (st.m[i] / c1) / ((st.v[i] / c2).sqrt() + 1e-8);
                };
                for (r, g) in &grad.rows {
                    if *r == PAD {
                        continue;
                    }
                    for (k, gk) in g.iter().enumerate() {
                        upd(r * l.d + k, *gk);
                    }
                }
                for (i, gi) in grad.dense.iter().enumerate() {
                    upd(ds + i, *gi);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmReport {
    pub protocol: String,
    pub with_emoji: bool,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub vocab_size: usize,
    pub pretrained_hits: usize,
    pub epoch_losses: Vec<f64>,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    pub test_accuracy: f64,
    pub config: LstmConfig,
}

/// Train on a seeded 80/10/10 split and report accuracy on each part.
/// `with_emoji = false` drops emoji tokens before padding.
pub fn train_lstm(
    data: &Dataset,
    embeddings: Option<&Embeddings>,
    cfg: &LstmConfig,
    with_emoji: bool,
    seed: u64,
) -> Result<(LstmModel, LstmReport)> {
    let data = if with_emoji { data.clone() } else { data.without_emoji() };
    let (train_idx, val_idx, test_idx) = split_train_val_test(data.len(), seed);
    if train_idx.is_empty() {
        return Err(Error::EmptyInput("no LSTM training examples".into()));
    }
    let train = data.subset(&train_idx);
    let vocab = Vocab::build(&train.docs, cfg.min_count.max(1));
    let pretrained_hits = embeddings.map_or(0, |e| {
        (2..vocab.len())
            .filter(|&i| vocab.token(i).is_some_and(|t| e.vectors.contains_key(t)))
            .count()
    });
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = LstmModel::init(vocab, embeddings, cfg, &mut rng);

    let encode = |d: &Dataset| -> (Vec<Vec<usize>>, Vec<bool>) {
        (
            d.docs.iter().map(|t| model.encode(t)).collect(),
            d.labels.iter().map(|&c| c == TweetClass::Solidarity).collect(),
        )
    };
    let (xs, ys) = encode(&train);
    let (xv, yv) = encode(&data.subset(&val_idx));
    let (xt, yt) = encode(&data.subset(&test_idx));

    let epoch_losses = model.fit(&xs, &ys, cfg, &mut rng)?;
    let report = LstmReport {
        protocol: "holdout_80_10_10".into(),
        with_emoji,
        n_train: xs.len(),
        n_val: xv.len(),
        n_test: xt.len(),
        vocab_size: model.vocab.len(),
        pretrained_hits,
        epoch_losses,
        train_accuracy: model.accuracy(&xs, &ys)?,
        val_accuracy: model.accuracy(&xv, &yv)?,
        test_accuracy: model.accuracy(&xt, &yt)?,
        config: cfg.clone(),
    };
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(seed: u64, v: usize, d: usize, h: usize) -> LstmParameters {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        LstmParameters::random(v, d, h, 0.5, &mut rng)
    }

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn padding_and_truncation() {
        let vocab = Vocab::from_tokens(toks(&["a", "b", "c"]));
        let p = pad_sequence(&toks(&["a", "b", "zzz"]), 100, &vocab);
        assert_eq!(p.len(), 100);
        assert!(p[..97].iter().all(|&i| i == PAD));
        assert_eq!(&p[97..], &[2, 3, UNK]);
        let long: Vec<String> = (0..150).map(|i| if i < 100 { "a".into() } else { "b".into() }).collect();
        let p = pad_sequence(&long, 100, &vocab);
        assert!(p.iter().all(|&i| i == 2));
    }

    #[test]
    fn all_padding_gives_sigmoid_of_bias() {
        let mut p = tiny(1, 6, 4, 3);
        p.set_b_out(0.3);
        assert_eq!(lstm_forward(&p, &[PAD; 10]).unwrap(), sigmoid(0.3));
    }

    #[test]
    fn zero_net_is_half() {
        let p = LstmParameters::zeros(5, 4, 3);
        assert_eq!(lstm_forward(&p, &[2, 3, 4]).unwrap(), 0.5);
    }

    #[test]
    fn leading_padding_is_invisible() {
        let p = tiny(2, 6, 4, 3);
        let a = lstm_forward(&p, &[2, 3, 4]).unwrap();
        let b = lstm_forward(&p, &[0, 0, 0, 2, 3, 4]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn out_of_range_index_is_an_error() {
        let p = tiny(2, 6, 4, 3);
        assert!(lstm_forward(&p, &[9]).is_err());
    }

    #[test]
    fn non_finite_state_is_fatal() {
        let mut p = tiny(3, 6, 4, 3);
        p.embedding_mut(2)[0] = f64::NAN;
        assert!(matches!(lstm_forward(&p, &[2]), Err(Error::NonFinite(_))));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = tiny(4, 7, 5, 4);
        let err = gradient_check(&p, (&[0, 2, 3, 1, 6, 2], true), 1e-5);
        assert!(err < 1e-4, "relative error {err}");
    }

    #[test]
    fn zero_gradients_agree_exactly() {
        let p = LstmParameters::zeros(5, 3, 3);
        let check = gradient_check_detailed(&p, (&[2, 3], false), 1e-5, BackwardFault::None);
        for (a, e) in check.analytic.iter().zip(&check.rel_errors) {
            if *a == 0.0 {
                assert_eq!(*e, 0.0);
            }
        }
        assert!(check.max_rel_error < 1e-6);
    }

    #[test]
    fn corrupted_backward_is_caught() {
        let p = tiny(5, 7, 5, 4);
        for fault in [BackwardFault::DropCellCarry, BackwardFault::FlipForgetGate] {
            let c = gradient_check_detailed(&p, (&[2, 3, 4, 5, 6], true), 1e-5, fault);
            assert!(c.max_rel_error > 1e-2, "{fault:?} gave {}", c.max_rel_error);
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let p = tiny(6, 5, 3, 2);
        let mut buf = Vec::new();
        p.write_checkpoint(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 24 + 8 * p.len());
        let back = LstmParameters::read_checkpoint(buf.as_slice(), "t").unwrap();
        assert_eq!(back, p);
        assert!(LstmParameters::read_checkpoint(&buf[..buf.len() - 1], "t").is_err());
        assert!(LstmParameters::read_checkpoint(&b"NOTMAGIC"[..], "t").is_err());
    }

    #[test]
    fn embeddings_text_format() {
        let text = "3 2\nparis 0.1 0.2\nirma -1 1e-3\npray 0 0\n";
        let e = Embeddings::from_reader(text.as_bytes(), None, "t").unwrap();
        assert_eq!(e.dim, 2);
        assert_eq!(e.vectors["irma"], vec![-1.0, 1e-3]);
        let keep: HashSet<String> = ["paris".to_string()].into();
        assert_eq!(Embeddings::from_reader(text.as_bytes(), Some(&keep), "t").unwrap().vectors.len(), 1);
        assert!(Embeddings::from_reader("a 1 2\nb 3\n".as_bytes(), None, "t").is_err());
    }

    #[test]
    fn pretrained_rows_are_copied() {
        let vocab = Vocab::from_tokens(toks(&["paris", "other"]));
        let e = Embeddings::from_reader("paris 0.25 0.5\n".as_bytes(), None, "t").unwrap();
        let cfg = LstmConfig { hidden: 3, ..LstmConfig::default() };
        let m = LstmModel::init(vocab, Some(&e), &cfg, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(m.params.embed_dim(), 2);
        assert_eq!(m.params.embedding(2), &[0.25, 0.5]);
        assert!(m.params.embedding(3).iter().all(|x| x.abs() < 0.05));
        assert!(m.params.embedding(PAD).iter().all(|&x| x == 0.0));
    }

    fn toy_set() -> (Vec<Vec<usize>>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        (0..20)
            .map(|i| {
                let y = i % 2 == 0;
                let marker = if y { 2 } else { 3 };
                let mut s: Vec<usize> = (0..6).map(|_| rng.random_range(4..8)).collect();
                s[rng.random_range(0..6)] = marker;
                (s, y)
            })
            .unzip()
    }

    #[test]
    fn seeded_training_is_bitwise_reproducible() {
        let (xs, ys) = toy_set();
        let cfg = LstmConfig { hidden: 4, embed_dim: 3, epochs: 3, batch_size: 5, ..LstmConfig::default() };
        let run_once = || {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let vocab = Vocab::from_tokens((2..8).map(|i| i.to_string()));
            let mut m = LstmModel::init(vocab, None, &cfg, &mut rng);
            m.fit(&xs, &ys, &cfg, &mut rng).unwrap()
        };
        let a = run_once();
        let b = run_once();
        assert_eq!(a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn loss_difference_matches_direct_subtraction() {
        for (a, b) in [(0.3, 0.1), (-2.0, -2.5), (8.0, 7.0), (0.0, 1e-3)] {
            for y in [true, false] {
                let direct = bce(a, y) - bce(b, y);
                assert!((bce_difference(a, b, y) - direct).abs() < 1e-14, "{a} {b} {y}");
            }
        }
        assert_eq!(bce_difference(0.5, 0.5, true), 0.0);
    }

    #[test]
    fn evaluation_is_repeatable() {
        let (xs, ys) = toy_set();
        let cfg = LstmConfig { hidden: 4, embed_dim: 3, epochs: 2, ..LstmConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let vocab = Vocab::from_tokens((2..8).map(|i| i.to_string()));
        let mut m = LstmModel::init(vocab, None, &cfg, &mut rng);
        m.fit(&xs, &ys, &cfg, &mut rng).unwrap();
        assert_eq!(m.accuracy(&xs, &ys).unwrap(), m.accuracy(&xs, &ys).unwrap());
    }

    #[test]
    fn divergence_is_reported() {
        let (xs, ys) = toy_set();
        let cfg = LstmConfig { hidden: 4, embed_dim: 3, epochs: 2, learning_rate: 1e300, ..LstmConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let vocab = Vocab::from_tokens((2..8).map(|i| i.to_string()));
        let mut m = LstmModel::init(vocab, None, &cfg, &mut rng);
        assert!(matches!(m.fit(&xs, &ys, &cfg, &mut rng), Err(Error::Divergence { .. })));
    }

    #[test]
    fn vocab_order_and_io() {
        let v = Vocab::build(&[toks(&["b", "a", "b"]), toks(&["c", "a", "b"])], 1);
        assert_eq!(v.get("b"), 2);
        assert_eq!(v.get("a"), 3);
        assert_eq!(v.get("zzz"), UNK);
        let mut buf = Vec::new();
        v.write(&mut buf).unwrap();
        assert_eq!(Vocab::parse(std::str::from_utf8(&buf).unwrap()), v);
    }
}
