use std::sync::atomic::{AtomicU64, Ordering};

use num_traits::Float;
use rand::distr::weighted::WeightedIndex;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::params::{
    apply_grad, exact_softmax_grad, fill_context, negative_sampling_grad, positions, predict_from,
    Example, InferParams, Matrix, ParamRead, ParamWrite, Params, RacyParams, SparseGrad,
    Trainable, Widened,
};
use super::{build_vocab, EmbeddingModel, Mode, Objective, TrainConfig, TrainingDoc, Vocabulary};
use crate::error::{Error, Result};

const INFER_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Progress report emitted after each epoch. `loss` is the mean objective
/// over the epoch's steps as seen before each update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub learning_rate: f32,
}

fn uniform_matrix<R: Rng>(rng: &mut R, rows: usize, dim: usize) -> Matrix<f32> {
    let half = 0.5 / dim as f32;
    let data = (0..rows * dim).map(|_| rng.random_range(-half..half)).collect();
    Matrix::from_vec(rows, dim, data)
}

/// Initial parameters for `vocab_len` words and `n_docs` documents. Input
/// vectors are uniform in `[-0.5/dim, 0.5/dim)`; output weights start at zero.
pub(crate) fn initial_params(vocab_len: usize, n_docs: usize, cfg: &TrainConfig) -> Params<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let word_vectors = uniform_matrix(&mut rng, vocab_len, cfg.dim);
    let doc_vectors = uniform_matrix(&mut rng, n_docs, cfg.dim);
    Params {
        word_vectors,
        output_weights: Matrix::filled(vocab_len, cfg.dim, 0.0),
        doc_vectors,
    }
}

fn noise_distribution(vocab: &Vocabulary) -> WeightedIndex<f64> {
    WeightedIndex::new(vocab.iter().map(|(_, c)| (c as f64).powf(0.75)))
        .expect("vocabulary counts are positive")
}

/// Learning rate after `step` of `total` steps.
fn decayed_rate(cfg: &TrainConfig, step: u64, total: u64) -> f32 {
    let progress = if total == 0 { 0.0 } else { step as f64 / total as f64 };
    let lr = f64::from(cfg.learning_rate)
        - (f64::from(cfg.learning_rate) - f64::from(cfg.min_learning_rate)) * progress;
    lr.max(f64::from(cfg.min_learning_rate)) as f32
}

/// State shared by the training and inference loops.
struct StepContext<'a> {
    mode: Mode,
    window: usize,
    objective: Objective,
    noise: Option<&'a WeightedIndex<f64>>,
    trainable: Trainable,
}

impl StepContext<'_> {
    /// Runs one pass over `doc`'s positions, returning (loss sum, steps).
    fn pass<P: ParamWrite<f32>, R: Rng>(
        &self,
        store: &mut P,
        doc: usize,
        tokens: &[u32],
        rng: &mut R,
        mut rate: impl FnMut() -> f32,
    ) -> (f64, u64) {
        let mut ctx = Vec::with_capacity(2 * self.window);
        let mut loss = 0.0;
        let mut steps = 0;
        for t in positions(self.mode, tokens.len(), self.window) {
            if self.mode == Mode::Dm {
                fill_context(tokens, t, self.window, &mut ctx);
            }
            let ex = Example {
                doc,
                target: tokens[t],
                context: &ctx,
            };
            let g: SparseGrad<f32> = match self.objective {
                Objective::NegativeSampling { negatives } => negative_sampling_grad(
                    store,
                    self.mode,
                    &ex,
                    negatives as usize,
                    self.noise.expect("noise distribution"),
                    rng,
                ),
                _ => exact_softmax_grad(store, self.mode, &ex),
            };
            apply_grad(store, self.mode, &ex, &g, rate(), self.trainable);
            loss += f64::from(g.loss);
            steps += 1;
        }
        (loss, steps)
    }
}

pub fn train(docs: &[TrainingDoc<'_>], cfg: &TrainConfig) -> Result<EmbeddingModel> {
    train_with_progress(docs, cfg, |_| {})
}

/// Trains a model with one document vector per entry of `docs`, calling
/// `progress` after every epoch.
pub fn train_with_progress(
    docs: &[TrainingDoc<'_>],
    cfg: &TrainConfig,
    mut progress: impl FnMut(&EpochStats),
) -> Result<EmbeddingModel> {
    cfg.validate()?;
    let texts: Vec<&str> = docs.iter().map(|d| d.text).collect();
    let vocab = build_vocab(&texts, cfg.min_count)?;
    let encoded: Vec<Vec<u32>> = texts.iter().map(|t| vocab.encode(t)).collect();
    for (d, tokens) in docs.iter().zip(&encoded) {
        if positions(cfg.mode, tokens.len(), cfg.window).is_empty() {
            log::warn!(
                "document {}#{} has no trainable positions ({} tokens, window {})",
                d.tag.label,
                d.tag.index,
                tokens.len(),
                cfg.window
            );
        }
    }

    let mut params = initial_params(vocab.len(), docs.len(), cfg);
    let objective = cfg.objective.resolve(vocab.len());
    let noise = matches!(objective, Objective::NegativeSampling { .. }).then(|| noise_distribution(&vocab));
    let step_ctx = StepContext {
        mode: cfg.mode,
        window: cfg.window,
        objective,
        noise: noise.as_ref(),
        trainable: Trainable {
            words: true,
            output: true,
        },
    };

    let per_epoch: u64 = encoded
        .iter()
        .map(|t| positions(cfg.mode, t.len(), cfg.window).len() as u64)
        .sum();
    let total = per_epoch * cfg.epochs as u64;
    // Separate stream from initialization so epochs=0 leaves the seeded init.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..docs.len()).collect();
    let mut step = 0u64;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (loss_sum, n) = if cfg.threads <= 1 {
            let mut loss = 0.0;
            let mut n = 0;
            for &d in &order {
                let (l, s) = step_ctx.pass(&mut params, d, &encoded[d], &mut rng, || {
                    let lr = decayed_rate(cfg, step, total);
                    step += 1;
                    lr
                });
                loss += l;
                n += s;
            }
            (loss, n)
        } else {
            let counter = AtomicU64::new(step);
            let seeds: Vec<u64> = (0..cfg.threads).map(|_| rng.random()).collect();
            let chunk = order.len().div_ceil(cfg.threads).max(1);
            let racy = RacyParams::new(&mut params);
            let results: Vec<(f64, u64)> = std::thread::scope(|scope| {
                let handles: Vec<_> = order
                    .chunks(chunk)
                    .zip(&seeds)
                    .map(|(part, &seed)| {
                        let mut store = racy;
                        let (step_ctx, encoded, counter) = (&step_ctx, &encoded, &counter);
                        scope.spawn(move || {
                            let mut rng = ChaCha8Rng::seed_from_u64(seed);
                            let mut acc = (0.0, 0);
                            for &d in part {
                                let (l, s) = step_ctx.pass(&mut store, d, &encoded[d], &mut rng, || {
                                    decayed_rate(cfg, counter.fetch_add(1, Ordering::Relaxed), total)
                                });
                                acc.0 += l;
                                acc.1 += s;
                            }
                            acc
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("training thread panicked"))
                    .collect()
            });
            step = counter.load(Ordering::Relaxed);
            results
                .into_iter()
                .fold((0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
        };

        if !params.all_finite() {
            return Err(Error::NonFinite { epoch });
        }
        progress(&EpochStats {
            epoch,
            loss: if n == 0 { 0.0 } else { loss_sum / n as f64 },
            learning_rate: decayed_rate(cfg, step, total),
        });
    }

    Ok(EmbeddingModel {
        vocab,
        params,
        doc_tags: docs.iter().map(|d| d.tag.clone()).collect(),
        config: cfg.clone(),
    })
}

/// Mean negative log-likelihood over the eligible positions of the encoded
/// documents, where document `i` uses document vector `i`. Always uses the
/// exact softmax. Returns 0 when no position is eligible.
pub fn loss_on<T: Float>(params: &Params<T>, mode: Mode, window: usize, docs: &[Vec<u32>]) -> T {
    loss_from(params, mode, window, docs)
}

fn loss_from<T: Float, P: ParamRead<T>>(p: &P, mode: Mode, window: usize, docs: &[Vec<u32>]) -> T {
    let mut sum = T::zero();
    let mut count = 0usize;
    let mut ctx = Vec::new();
    for (d, tokens) in docs.iter().enumerate() {
        for t in positions(mode, tokens.len(), window) {
            if mode == Mode::Dm {
                fill_context(tokens, t, window, &mut ctx);
            }
            let probs = predict_from(p, mode, &ctx, d);
            sum = sum - probs[tokens[t] as usize].ln();
            count += 1;
        }
    }
    if count == 0 {
        T::zero()
    } else {
        sum / T::from(count).unwrap()
    }
}

/// Exact-softmax loss of `model` on `texts`, computed in f64. Text `i` is
/// scored with document vector `i`.
pub fn loss<S: AsRef<str>>(model: &EmbeddingModel, texts: &[S]) -> Result<f64> {
    if texts.len() > model.n_docs() {
        return Err(Error::Index {
            index: texts.len() - 1,
            len: model.n_docs(),
        });
    }
    let encoded: Vec<Vec<u32>> = texts.iter().map(|t| model.vocab.encode(t.as_ref())).collect();
    Ok(loss_from(
        &Widened(&model.params),
        model.config.mode,
        model.config.window,
        &encoded,
    ))
}

/// Fits a fresh document vector for `text` with word vectors and output
/// weights frozen. `epochs` defaults to the model's training epochs.
pub fn infer_vector(model: &EmbeddingModel, text: &str, epochs: Option<usize>) -> Result<Vec<f32>> {
    let cfg = &model.config;
    let tokens = model.vocab.encode(text);
    if tokens.is_empty() {
        return Err(Error::NoKnownTokens);
    }
    let epochs = epochs.unwrap_or(cfg.epochs);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ INFER_SEED_SALT);
    let init = uniform_matrix(&mut rng, 1, cfg.dim);
    let mut store = InferParams {
        base: &model.params,
        doc: init.row(0).to_vec(),
    };

    let objective = cfg.objective.resolve(model.vocab.len());
    let noise = matches!(objective, Objective::NegativeSampling { .. })
        .then(|| noise_distribution(&model.vocab));
    let step_ctx = StepContext {
        mode: cfg.mode,
        window: cfg.window,
        objective,
        noise: noise.as_ref(),
        trainable: Trainable {
            words: false,
            output: false,
        },
    };
    let per_epoch = positions(cfg.mode, tokens.len(), cfg.window).len() as u64;
    if per_epoch == 0 {
        log::warn!("inference text has no trainable positions; returning the initial vector");
    }
    let total = per_epoch * epochs as u64;
    let mut step = 0u64;
    for _ in 0..epochs {
        step_ctx.pass(&mut store, 0, &tokens, &mut rng, || {
            let lr = decayed_rate(cfg, step, total);
            step += 1;
            lr
        });
    }
    if store.doc.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { epoch: epochs });
    }
    Ok(store.doc)
}
