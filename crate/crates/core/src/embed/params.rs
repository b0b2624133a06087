//! Parameter matrices and the per-position objective kernels shared by
//! training, inference, loss evaluation and gradient checking.

use std::sync::atomic::{AtomicU32, Ordering};

use num_traits::Float;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::Mode;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Copy> Matrix<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Matrix { rows, cols, data }
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Matrix::from_vec(rows, cols, vec![value; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Matrix<U> {
        Matrix::from_vec(self.rows, self.cols, self.data.iter().map(|&x| f(x)).collect())
    }
}

/// The three parameter blocks of a paragraph-vector model.
#[derive(Debug, Clone, PartialEq)]
pub struct Params<T> {
    /// Input vectors, one per vocabulary word.
    pub word_vectors: Matrix<T>,
    /// Output layer; row `i` yields logit `y_i = output_weights[i] . h`.
    pub output_weights: Matrix<T>,
    /// One vector per training document.
    pub doc_vectors: Matrix<T>,
}

impl<T: Float> Params<T> {
    pub fn dim(&self) -> usize {
        self.word_vectors.cols()
    }

    pub fn vocab_len(&self) -> usize {
        self.output_weights.rows()
    }

    pub fn all_finite(&self) -> bool {
        [&self.word_vectors, &self.output_weights, &self.doc_vectors]
            .iter()
            .all(|m| m.as_slice().iter().all(|x| x.is_finite()))
    }

    /// Softmax over the vocabulary for `target`-free prediction from the
    /// given context words and document. DBOW ignores `context`.
    pub fn predict(&self, mode: Mode, context: &[u32], doc: usize) -> Vec<T> {
        predict_from(self, mode, context, doc)
    }
}

pub(crate) fn predict_from<T: Float, P: ParamRead<T>>(
    p: &P,
    mode: Mode,
    context: &[u32],
    doc: usize,
) -> Vec<T> {
    let mut h = vec![T::zero(); p.dim()];
    hidden(p, mode, context, doc, &mut h);
    let mut row = vec![T::zero(); p.dim()];
    let mut logits: Vec<T> = (0..p.vocab_len())
        .map(|i| with_row(p, Block::Output, i, &mut row, |r| dot(r, &h)))
        .collect();
    softmax_in_place(&mut logits);
    logits
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Block {
    Word,
    Output,
    Doc,
}

pub(crate) trait ParamRead<T> {
    fn dim(&self) -> usize;
    fn vocab_len(&self) -> usize;
    fn read_row(&self, block: Block, row: usize, out: &mut [T]);
    /// Borrowed row, when the storage allows it without copying.
    fn row_slice(&self, _block: Block, _row: usize) -> Option<&[T]> {
        None
    }
}

/// Runs `f` on a row, borrowing it when possible and copying into `buf`
/// otherwise.
#[inline]
fn with_row<T: Float, P: ParamRead<T>, R>(
    p: &P,
    block: Block,
    row: usize,
    buf: &mut [T],
    f: impl FnOnce(&[T]) -> R,
) -> R {
    match p.row_slice(block, row) {
        Some(r) => f(r),
        None => {
            p.read_row(block, row, buf);
            f(buf)
        }
    }
}

pub(crate) trait ParamWrite<T>: ParamRead<T> {
    /// `row += alpha * x`
    fn add_to_row(&mut self, block: Block, row: usize, alpha: T, x: &[T]);
}

impl<T: Float> Params<T> {
    fn block(&self, b: Block) -> &Matrix<T> {
        match b {
            Block::Word => &self.word_vectors,
            Block::Output => &self.output_weights,
            Block::Doc => &self.doc_vectors,
        }
    }

    fn block_mut(&mut self, b: Block) -> &mut Matrix<T> {
        match b {
            Block::Word => &mut self.word_vectors,
            Block::Output => &mut self.output_weights,
            Block::Doc => &mut self.doc_vectors,
        }
    }
}

impl<T: Float> ParamRead<T> for Params<T> {
    fn dim(&self) -> usize {
        Params::dim(self)
    }

    fn vocab_len(&self) -> usize {
        Params::vocab_len(self)
    }

    fn read_row(&self, block: Block, row: usize, out: &mut [T]) {
        out.copy_from_slice(self.block(block).row(row));
    }

    fn row_slice(&self, block: Block, row: usize) -> Option<&[T]> {
        Some(self.block(block).row(row))
    }
}

impl<T: Float> ParamWrite<T> for Params<T> {
    fn add_to_row(&mut self, block: Block, row: usize, alpha: T, x: &[T]) {
        for (r, &v) in self.block_mut(block).row_mut(row).iter_mut().zip(x) {
            *r = *r + alpha * v;
        }
    }
}

/// Read-only f64 view over f32 parameters.
pub(crate) struct Widened<'a>(pub &'a Params<f32>);

impl ParamRead<f64> for Widened<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn vocab_len(&self) -> usize {
        self.0.vocab_len()
    }

    fn read_row(&self, block: Block, row: usize, out: &mut [f64]) {
        for (o, &v) in out.iter_mut().zip(self.0.block(block).row(row)) {
            *o = f64::from(v);
        }
    }
}

/// Shared f32 parameters updated without locks by several threads. Each
/// element is read and written atomically, but concurrent read-modify-write
/// sequences on the same element may lose updates.
#[derive(Clone, Copy)]
pub(crate) struct RacyParams<'a> {
    word: &'a [AtomicU32],
    output: &'a [AtomicU32],
    doc: &'a [AtomicU32],
    dim: usize,
    vocab: usize,
}

fn as_atomic(slice: &mut [f32]) -> &[AtomicU32] {
    // SAFETY: f32 and AtomicU32 have the same size and alignment, and the
    // exclusive borrow guarantees no non-atomic access for the lifetime of
    // the returned slice.
    unsafe { &*(slice as *mut [f32] as *const [AtomicU32]) }
}

impl<'a> RacyParams<'a> {
    pub(crate) fn new(p: &'a mut Params<f32>) -> Self {
        let dim = p.dim();
        let vocab = p.vocab_len();
        RacyParams {
            word: as_atomic(p.word_vectors.as_mut_slice()),
            output: as_atomic(p.output_weights.as_mut_slice()),
            doc: as_atomic(p.doc_vectors.as_mut_slice()),
            dim,
            vocab,
        }
    }

    fn block(&self, b: Block) -> &'a [AtomicU32] {
        match b {
            Block::Word => self.word,
            Block::Output => self.output,
            Block::Doc => self.doc,
        }
    }
}

impl ParamRead<f32> for RacyParams<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn vocab_len(&self) -> usize {
        self.vocab
    }

    fn read_row(&self, block: Block, row: usize, out: &mut [f32]) {
        let cells = &self.block(block)[row * self.dim..(row + 1) * self.dim];
        for (o, c) in out.iter_mut().zip(cells) {
            *o = f32::from_bits(c.load(Ordering::Relaxed));
        }
    }
}

impl ParamWrite<f32> for RacyParams<'_> {
    fn add_to_row(&mut self, block: Block, row: usize, alpha: f32, x: &[f32]) {
        let cells = &self.block(block)[row * self.dim..(row + 1) * self.dim];
        for (c, &v) in cells.iter().zip(x) {
            let cur = f32::from_bits(c.load(Ordering::Relaxed));
            c.store((cur + alpha * v).to_bits(), Ordering::Relaxed);
        }
    }
}

/// Parameters with a single replacement document vector, used when
/// inferring a vector for unseen text. Only the document row is writable.
pub(crate) struct InferParams<'a> {
    pub base: &'a Params<f32>,
    pub doc: Vec<f32>,
}

impl ParamRead<f32> for InferParams<'_> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn vocab_len(&self) -> usize {
        self.base.vocab_len()
    }

    fn read_row(&self, block: Block, row: usize, out: &mut [f32]) {
        match block {
            Block::Doc => out.copy_from_slice(&self.doc),
            b => out.copy_from_slice(self.base.block(b).row(row)),
        }
    }

    fn row_slice(&self, block: Block, row: usize) -> Option<&[f32]> {
        match block {
            Block::Doc => Some(&self.doc),
            b => Some(self.base.block(b).row(row)),
        }
    }
}

impl ParamWrite<f32> for InferParams<'_> {
    fn add_to_row(&mut self, block: Block, _row: usize, alpha: f32, x: &[f32]) {
        if block == Block::Doc {
            for (r, &v) in self.doc.iter_mut().zip(x) {
                *r += alpha * v;
            }
        }
    }
}

pub(crate) fn dot<T: Float>(a: &[T], b: &[T]) -> T {
    // Eight independent partial sums let the compiler vectorize.
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [T::zero(); 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] = acc[k] + x[k] * y[k];
        }
    }
    let mut tail = T::zero();
    for (&x, &y) in ra.iter().zip(rb) {
        tail = tail + x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

pub(crate) fn softmax_in_place<T: Float>(v: &mut [T]) {
    let max = v.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum = sum + *x;
    }
    for x in v.iter_mut() {
        *x = *x / sum;
    }
}

fn sigmoid<T: Float>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// `-ln(sigmoid(x))`, stable for large |x|.
fn neg_log_sigmoid<T: Float>(x: T) -> T {
    if x > T::zero() {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// Weight of each input vector in the hidden layer.
pub(crate) fn input_scale<T: Float>(mode: Mode, n_context: usize) -> T {
    match mode {
        Mode::Dm => T::one() / T::from(1 + n_context).unwrap(),
        Mode::Dbow => T::one(),
    }
}

/// Hidden layer: DM averages the document vector with the context word
/// vectors, DBOW uses the document vector alone.
pub(crate) fn hidden<T: Float, P: ParamRead<T>>(
    p: &P,
    mode: Mode,
    context: &[u32],
    doc: usize,
    h: &mut [T],
) {
    p.read_row(Block::Doc, doc, h);
    if mode == Mode::Dm && !context.is_empty() {
        let mut row = vec![T::zero(); h.len()];
        for &w in context {
            p.read_row(Block::Word, w as usize, &mut row);
            for (a, &b) in h.iter_mut().zip(&row) {
                *a = *a + b;
            }
        }
        let s = input_scale::<T>(mode, context.len());
        for a in h.iter_mut() {
            *a = *a * s;
        }
    }
}

/// One training position: predict `target` from `context` and `doc`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Example<'a> {
    pub doc: usize,
    pub target: u32,
    pub context: &'a [u32],
}

/// Gradient of one position's loss in factored form. The output-layer
/// gradient for row `out_rows[j]` is `out_coef[j] * hidden`; every input
/// vector feeding the hidden layer receives `input_scale * d_hidden`.
#[derive(Debug, Clone)]
pub(crate) struct SparseGrad<T> {
    pub loss: T,
    pub hidden: Vec<T>,
    pub d_hidden: Vec<T>,
    pub out_rows: Vec<u32>,
    pub out_coef: Vec<T>,
}

/// Loss `-ln p(target | context, doc)` under the full softmax, with its
/// gradient.
pub(crate) fn exact_softmax_grad<T: Float, P: ParamRead<T>>(
    p: &P,
    mode: Mode,
    ex: &Example<'_>,
) -> SparseGrad<T> {
    let dim = p.dim();
    let v = p.vocab_len();
    let mut h = vec![T::zero(); dim];
    hidden(p, mode, ex.context, ex.doc, &mut h);

    let mut row = vec![T::zero(); dim];
    let mut probs: Vec<T> = (0..v)
        .map(|i| with_row(p, Block::Output, i, &mut row, |r| dot(r, &h)))
        .collect();
    softmax_in_place(&mut probs);
    let target = ex.target as usize;
    let loss = -probs[target].ln();

    let mut coef = probs;
    coef[target] = coef[target] - T::one();
    let mut dh = vec![T::zero(); dim];
    for (i, &c) in coef.iter().enumerate() {
        with_row(p, Block::Output, i, &mut row, |r| {
            for (d, &u) in dh.iter_mut().zip(r) {
                *d = *d + c * u;
            }
        });
    }
    SparseGrad {
        loss,
        hidden: h,
        d_hidden: dh,
        out_rows: (0..v as u32).collect(),
        out_coef: coef,
    }
}

/// Negative-sampling loss `-ln s(u_t.h) - sum ln s(-u_n.h)` with its
/// gradient. Negatives equal to the target are dropped.
pub(crate) fn negative_sampling_grad<T: Float, P: ParamRead<T>, R: Rng>(
    p: &P,
    mode: Mode,
    ex: &Example<'_>,
    negatives: usize,
    noise: &WeightedIndex<f64>,
    rng: &mut R,
) -> SparseGrad<T> {
    let dim = p.dim();
    let mut h = vec![T::zero(); dim];
    hidden(p, mode, ex.context, ex.doc, &mut h);

    let mut rows = Vec::with_capacity(negatives + 1);
    rows.push((ex.target, T::one()));
    for _ in 0..negatives {
        let n = noise.sample(rng) as u32;
        if n != ex.target {
            rows.push((n, T::zero()));
        }
    }

    let mut row = vec![T::zero(); dim];
    let mut dh = vec![T::zero(); dim];
    let mut loss = T::zero();
    let mut out_rows = Vec::with_capacity(rows.len());
    let mut out_coef = Vec::with_capacity(rows.len());
    for (w, label) in rows {
        p.read_row(Block::Output, w as usize, &mut row);
        let f = dot(&row, &h);
        loss = loss + if label > T::zero() { neg_log_sigmoid(f) } else { neg_log_sigmoid(-f) };
        let g = sigmoid(f) - label;
        for (d, &u) in dh.iter_mut().zip(&row) {
            *d = *d + g * u;
        }
        out_rows.push(w);
        out_coef.push(g);
    }
    SparseGrad {
        loss,
        hidden: h,
        d_hidden: dh,
        out_rows,
        out_coef,
    }
}

/// Which blocks an update may touch.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Trainable {
    pub words: bool,
    pub output: bool,
}

/// Gradient-descent step with learning rate `lr`.
pub(crate) fn apply_grad<T: Float, P: ParamWrite<T>>(
    p: &mut P,
    mode: Mode,
    ex: &Example<'_>,
    g: &SparseGrad<T>,
    lr: T,
    trainable: Trainable,
) {
    if trainable.output {
        for (&w, &c) in g.out_rows.iter().zip(&g.out_coef) {
            p.add_to_row(Block::Output, w as usize, -lr * c, &g.hidden);
        }
    }
    let step = -lr * input_scale::<T>(mode, ex.context.len());
    p.add_to_row(Block::Doc, ex.doc, step, &g.d_hidden);
    if mode == Mode::Dm && trainable.words {
        for &w in ex.context {
            p.add_to_row(Block::Word, w as usize, step, &g.d_hidden);
        }
    }
}

/// Dense gradient of one position's exact-softmax loss.
pub fn dense_exact_gradient<T: Float>(
    p: &Params<T>,
    mode: Mode,
    doc: usize,
    target: u32,
    context: &[u32],
) -> (T, Params<T>) {
    let ex = Example { doc, target, context };
    let g = exact_softmax_grad(p, mode, &ex);
    let mut grad = Params {
        word_vectors: p.word_vectors.map(|_| T::zero()),
        output_weights: p.output_weights.map(|_| T::zero()),
        doc_vectors: p.doc_vectors.map(|_| T::zero()),
    };
    // apply_grad with lr = -1 accumulates +gradient into a zero model.
    apply_grad(
        &mut grad,
        mode,
        &ex,
        &g,
        -T::one(),
        Trainable {
            words: true,
            output: true,
        },
    );
    (g.loss, grad)
}

/// Eligible `(position, context)` pairs of an encoded document. DM needs a
/// full window of `k` words on each side; DBOW uses every position with an
/// empty context.
pub(crate) fn positions(mode: Mode, len: usize, k: usize) -> std::ops::Range<usize> {
    match mode {
        Mode::Dbow => 0..len,
        Mode::Dm if len > 2 * k => k..len - k,
        Mode::Dm => 0..0,
    }
}

pub(crate) fn fill_context(tokens: &[u32], t: usize, k: usize, out: &mut Vec<u32>) {
    out.clear();
    out.extend_from_slice(&tokens[t - k..t]);
    out.extend_from_slice(&tokens[t + 1..=t + k]);
}
