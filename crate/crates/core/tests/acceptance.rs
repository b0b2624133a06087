//! Acceptance suite. Each test prints one `PASS`/`FAIL criterion N` line;
//! run with `--nocapture` to see them.

mod common;

use std::path::Path;
use std::process::Command;
use std::sync::{Mutex, MutexGuard};
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use acrodis::corpus::{load_records, save_records, DatasetOptions};
use acrodis::embed::{
    dense_exact_gradient, loss, pca_project, train, DocTag, EmbeddingModel, Matrix, Mode, Objective, Params, Pca,
    TrainConfig, TrainingDoc, Vocabulary,
};
use acrodis::eval::{evaluate, grid_sweep, sweep_table, table1_grid, EvalConfig, SweepCorpus};
use acrodis::matcher::{find_expansions, matches_expansion, MatchRuleConfig};
use acrodis::model_io::{load_model, save_model};
use acrodis::seqmatch::sequence_ratio;
use acrodis::synth::{generate, identical_contexts, SynthConfig};
use acrodis::{AcronymRecord, ContextWindow, Document, ExpansionEntry, StopwordList};

/// Criteria run one at a time so the timed ones are not slowed by the rest.
static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(n: u32, ok: bool, detail: &str) {
    println!("{} criterion {n}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n}: {detail}");
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn uniform(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

fn random_params(rng: &mut ChaCha8Rng, v: usize, dim: usize, docs: usize) -> Params<f64> {
    Params {
        word_vectors: Matrix::from_vec(v, dim, uniform(rng, v * dim, 1.0)),
        output_weights: Matrix::from_vec(v, dim, uniform(rng, v * dim, 1.0)),
        doc_vectors: Matrix::from_vec(docs, dim, uniform(rng, docs * dim, 1.0)),
    }
}

#[test]
fn criterion_01_matcher_matches_brute_force() {
    let _serial = serial();
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let sw = StopwordList::default();
    let stop = ["of", "the", "and", "a", "for", "in"];
    let seps = [" ", " ", " ", " ", "_", "-", ". ", ", ", " - ", "; "];
    let (mut agree, mut total_occ) = (0, 0);
    let mut first_diff = String::new();
    for corpus_i in 0..200 {
        let len = rng.random_range(2..=5);
        let acronym: String = (0..len)
            .map(|_| b"ABCDEF"[rng.random_range(0..6)] as char)
            .collect();
        let n_docs = rng.random_range(1..=10);
        let corpus: Vec<Document> = (0..n_docs)
            .map(|d| {
                let n_words = rng.random_range(1..=200);
                let mut body = String::new();
                for w in 0..n_words {
                    if w > 0 {
                        body.push_str(seps[rng.random_range(0..seps.len())]);
                    }
                    let word = match rng.random_range(0..10) {
                        0..=1 => stop[rng.random_range(0..stop.len())].to_string(),
                        2 => acronym.clone(),
                        _ => {
                            let first = b"abcdefgh"[rng.random_range(0..8)] as char;
                            let rest: String = (0..rng.random_range(0..5))
                                .map(|_| (b'a' + rng.random_range(0..26)) as char)
                                .collect();
                            let first = if rng.random_bool(0.5) { first.to_ascii_uppercase() } else { first };
                            format!("{first}{rest}")
                        }
                    };
                    body.push_str(&word);
                }
                Document {
                    doc_id: format!("doc{d:02}"),
                    title: String::new(),
                    body,
                }
            })
            .collect();
        let cfg = MatchRuleConfig::for_acronym(&acronym);
        let got = find_expansions(&acronym, &corpus, &sw, &cfg);
        let want = common::brute_force_expansions(&acronym, &corpus, &sw, &cfg);
        total_occ += want.len();
        if got == want {
            agree += 1;
        } else if first_diff.is_empty() {
            first_diff = format!("corpus {corpus_i} ({acronym}): got {} want {}", got.len(), want.len());
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    report(
        1,
        agree == 200 && total_occ > 0 && secs < 30.0,
        &format!("{agree}/200 corpora agree, {total_occ} occurrences, {secs:.2}s {first_diff}"),
    );
}

#[test]
fn criterion_02_matcher_examples() {
    let _serial = serial();
    let sw = StopwordList::default();
    let m = |a: &str, p: &str| matches_expansion(a, p, &sw, &MatchRuleConfig::for_acronym(a));
    let cases = [
        ("CSS", "Cascading Style Sheets", true),
        ("USA", "United States of America", true),
        ("CSS", "Cascading_Style-Sheets", true),
        ("CSS", "Cascading-Style-Sheets", true),
        ("CSS", "Cascading_Style_Sheets", true),
        ("CNN", "Cable Network", false),
        ("ETC", "European Travel Commission", true),
        ("CSS", "Cascading The Style Sheets", true),
        ("CSS", "Cascading Blue Style Sheets", false),
        ("WHO", "World Health Organization", true),
        ("CNN", "Cable News Network", true),
        ("CNN", "Convolutional Neural Network", true),
    ];
    let failed: Vec<_> = cases.iter().filter(|(a, p, want)| m(a, p) != *want).collect();

    let corpus = [Document {
        doc_id: "d".into(),
        title: String::new(),
        body: "Reports say the World Health Organization announced new guidance.".into(),
    }];
    let occ = find_expansions("WHO", &corpus, &sw, &MatchRuleConfig::for_acronym("WHO"));
    let who_ok = occ.len() == 1 && occ[0].expansion == "World Health Organization";
    let none_ok = find_expansions("XYZ", &corpus, &sw, &MatchRuleConfig::for_acronym("XYZ")).is_empty();
    report(
        2,
        failed.is_empty() && who_ok && none_ok,
        &format!(
            "{}/{} phrase cases, WHO scan {who_ok}, XYZ empty {none_ok}",
            cases.len() - failed.len(),
            cases.len()
        ),
    );
}

fn cell(p: &mut Params<f64>, block: usize, i: usize) -> &mut f64 {
    match block {
        0 => &mut p.word_vectors.as_mut_slice()[i],
        1 => &mut p.output_weights.as_mut_slice()[i],
        _ => &mut p.doc_vectors.as_mut_slice()[i],
    }
}

#[test]
fn criterion_03_gradients_match_finite_differences() {
    let _serial = serial();
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut passed = 0;
    for trial in 0..50 {
        let mode = if trial % 2 == 0 { Mode::Dm } else { Mode::Dbow };
        let v = rng.random_range(2..=8);
        let dim = rng.random_range(1..=6);
        let n_docs = rng.random_range(1..=3);
        let k = rng.random_range(1..=2);
        let mut p = random_params(&mut rng, v, dim, n_docs);
        let doc = rng.random_range(0..n_docs);
        let target = rng.random_range(0..v as u32);
        let context: Vec<u32> = match mode {
            Mode::Dm => (0..2 * k).map(|_| rng.random_range(0..v as u32)).collect(),
            Mode::Dbow => vec![],
        };
        let (l, grad) = dense_exact_gradient(&p, mode, doc, target, &context);
        let oracle_l = common::position_loss(&p, mode, doc, target, &context);
        let mut ok = (l - oracle_l).abs() <= 1e-12 * oracle_l.abs().max(1.0);

        let analytic = [
            grad.word_vectors.as_slice().to_vec(),
            grad.output_weights.as_slice().to_vec(),
            grad.doc_vectors.as_slice().to_vec(),
        ];
        for (b, an) in analytic.iter().enumerate() {
            let mut fd = vec![0.0; an.len()];
            for (i, slot) in fd.iter_mut().enumerate() {
                let orig = *cell(&mut p, b, i);
                *cell(&mut p, b, i) = orig + h;
                let lp = common::position_loss(&p, mode, doc, target, &context);
                *cell(&mut p, b, i) = orig - h;
                let lm = common::position_loss(&p, mode, doc, target, &context);
                *cell(&mut p, b, i) = orig;
                *slot = (lp - lm) / (2.0 * h);
            }
            let diff: f64 = an.iter().zip(&fd).map(|(a, f)| (a - f).powi(2)).sum::<f64>().sqrt();
            let scale = an.iter().map(|a| a * a).sum::<f64>().sqrt().max(fd.iter().map(|f| f * f).sum::<f64>().sqrt());
            let rel = if scale < 1e-10 { diff } else { diff / scale };
            worst = worst.max(rel);
            ok &= rel <= 1e-4;
        }
        passed += ok as usize;
    }
    let secs = t0.elapsed().as_secs_f64();
    report(
        3,
        passed == 50 && secs < 60.0,
        &format!("{passed}/50 models, worst relative error {worst:.2e}, {secs:.2}s"),
    );
}

fn toy_model(rng: &mut ChaCha8Rng, trial: usize) -> (EmbeddingModel, Vec<String>) {
    let n_vocab = rng.random_range(4..=12);
    let words: Vec<String> = (0..n_vocab).map(|i| format!("w{i}")).collect();
    let n_docs = rng.random_range(1..=4);
    let texts: Vec<String> = (0..n_docs)
        .map(|_| {
            (0..rng.random_range(3..=15))
                .map(|_| words[rng.random_range(0..n_vocab)].as_str())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    let tags: Vec<DocTag> = (0..n_docs).map(|i| DocTag::new("t", i as u32)).collect();
    let docs: Vec<TrainingDoc<'_>> = tags
        .iter()
        .zip(&texts)
        .map(|(tag, text)| TrainingDoc { tag, text })
        .collect();
    let cfg = TrainConfig {
        mode: if trial.is_multiple_of(2) { Mode::Dm } else { Mode::Dbow },
        dim: rng.random_range(2..=8),
        window: rng.random_range(1..=2),
        epochs: 3,
        seed: trial as u64,
        ..TrainConfig::dm()
    };
    let mut model = train(&docs, &cfg).unwrap();
    // move well away from the near-zero trained state
    for m in [
        &mut model.params.word_vectors,
        &mut model.params.output_weights,
        &mut model.params.doc_vectors,
    ] {
        for x in m.as_mut_slice() {
            *x = rng.random_range(-2.0f32..2.0);
        }
    }
    (model, texts)
}

#[test]
fn criterion_04_loss_matches_straight_line_objective() {
    let _serial = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst = 0.0f64;
    let mut nonzero = 0;
    for trial in 0..20 {
        let (model, texts) = toy_model(&mut rng, trial);
        let ids: Vec<Vec<u32>> = texts
            .iter()
            .map(|t| t.split_whitespace().map(|w| model.vocab.id(w).unwrap()).collect())
            .collect();
        let p64 = Params {
            word_vectors: model.params.word_vectors.map(f64::from),
            output_weights: model.params.output_weights.map(f64::from),
            doc_vectors: model.params.doc_vectors.map(f64::from),
        };
        let want = common::corpus_loss(&p64, model.config.mode, model.config.window, &ids);
        let got = loss(&model, &texts).unwrap();
        nonzero += (want > 0.0) as usize;
        worst = worst.max((got - want).abs());
    }
    report(
        4,
        worst <= 1e-10 && nonzero >= 15,
        &format!("20 corpora, max |loss - oracle| = {worst:.2e}, {nonzero} with eligible positions"),
    );
}

#[test]
fn criterion_05_softmax_contract() {
    let _serial = serial();
    let two = Params {
        word_vectors: Matrix::filled(2, 1, 0.0f64),
        output_weights: Matrix::filled(2, 1, 0.0f64),
        doc_vectors: Matrix::filled(1, 1, 1.0f64),
    };
    let half = two.predict(Mode::Dbow, &[], 0);
    let half_ok = half.iter().all(|p| (p - 0.5).abs() <= 1e-12);

    let three = Params {
        word_vectors: Matrix::filled(3, 1, 0.0f64),
        output_weights: Matrix::from_vec(3, 1, vec![0.0, 2f64.ln(), 4f64.ln()]),
        doc_vectors: Matrix::filled(1, 1, 1.0f64),
    };
    let sevenths = three.predict(Mode::Dbow, &[], 0);
    let sevenths_ok = sevenths
        .iter()
        .zip([1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0])
        .all(|(p, q)| (p - q).abs() <= 1e-12);

    // untrained f32 model: zero output weights give a uniform prediction
    let tags = [DocTag::new("a", 0)];
    let docs = [TrainingDoc { tag: &tags[0], text: "red blue" }];
    let zero = train(&docs, &TrainConfig { dim: 4, epochs: 0, window: 1, ..TrainConfig::dbow() }).unwrap();
    let zero_ok = zero.softmax_predict(&[], 0).unwrap().iter().all(|p| (p - 0.5).abs() <= 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst = 0.0f64;
    for trial in 0..50 {
        let (v, dim) = (rng.random_range(2..=50), rng.random_range(1..=8));
        let mut p = random_params(&mut rng, v, dim, 2);
        if trial % 5 == 0 {
            // large logits exercise overflow handling
            p.output_weights = p.output_weights.map(|x| x * 300.0);
        }
        let mode = if trial % 2 == 0 { Mode::Dm } else { Mode::Dbow };
        let v = p.output_weights.rows() as u32;
        let s: f64 = p.predict(mode, &[0, v - 1], 1).iter().sum();
        worst = worst.max((s - 1.0).abs());
    }
    for trial in 0..10 {
        let (model, _) = toy_model(&mut rng, trial);
        let v = model.vocab.len() as u32;
        let ctx: Vec<u32> = (0..2 * model.config.window).map(|i| i as u32 % v).collect();
        let s: f64 = model.softmax_predict(&ctx, 0).unwrap().iter().sum();
        worst = worst.max((s - 1.0).abs());
    }
    report(
        5,
        half_ok && sevenths_ok && zero_ok && worst <= 1e-6,
        &format!(
            "(0,0)->{half:?}, (0,ln2,ln4)->{sevenths:?}, untrained uniform {zero_ok}, max |sum-1| = {worst:.1e}"
        ),
    );
}

#[test]
fn criterion_06_synthetic_benchmark_accuracy() {
    let _serial = serial();
    let t0 = Instant::now();
    let mut accs = Vec::new();
    for seed in 0..5u64 {
        let bench = generate(&SynthConfig { seed, ..SynthConfig::default() }).unwrap();
        let cfg = EvalConfig {
            train_cfg: TrainConfig {
                dim: 50,
                epochs: 12,
                learning_rate: 0.025,
                seed,
                ..TrainConfig::dm()
            },
            workers: workers(),
            ..EvalConfig::default()
        };
        let rep = evaluate(&bench.records, &cfg).unwrap();
        println!("  seed {seed}: accuracy {:.4} over {} queries", rep.overall_accuracy, rep.n_queries());
        accs.push(rep.overall_accuracy);
    }
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    let secs = t0.elapsed().as_secs_f64();
    report(
        6,
        mean >= 0.95 && secs < 300.0,
        &format!("mean accuracy {mean:.4} over 5 seeds, {secs:.1}s"),
    );
}

#[test]
fn criterion_07_identical_contexts_at_chance() {
    let _serial = serial();
    let k = 2;
    let (mut q, mut c) = (0usize, 0usize);
    for seed in 0..20u64 {
        let recs = identical_contexts(4, k, 5, seed).unwrap();
        let cfg = EvalConfig {
            train_cfg: TrainConfig { dim: 50, seed, ..TrainConfig::dm() },
            workers: workers(),
            ..EvalConfig::default()
        };
        let rep = evaluate(&recs, &cfg).unwrap();
        q += rep.n_queries();
        c += rep.n_correct();
    }
    let acc = c as f64 / q as f64;
    let chance = 1.0 / k as f64;
    report(
        7,
        (acc - chance).abs() <= 0.15,
        &format!("accuracy {acc:.4} over {q} queries, chance {chance:.2}"),
    );
}

fn run_cli(dir: &Path, args: &[&str]) -> bool {
    let out = Command::new(env!("CARGO_BIN_EXE_acrodis"))
        .current_dir(dir)
        .args(["--seed", "11", "--threads", "1", "--log-level", "warn"])
        .args(args)
        .output()
        .unwrap();
    if !out.status.success() {
        eprintln!("{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    out.status.success()
}

fn cli_workflow(dir: &Path) -> bool {
    let train = ["--dim", "16", "--epochs", "3", "--window", "2"];
    let grid = serde_json::to_string(
        &table1_grid(11)
            .into_iter()
            .take(2)
            .map(|mut p| {
                p.train.dim = 8;
                p.train.epochs = 2;
                p
            })
            .collect::<Vec<_>>(),
    )
    .unwrap();
    std::fs::write(dir.join("grid.json"), grid).unwrap();
    let ok = run_cli(
        dir,
        &[
            "synth", "--out-corpus", "corpus.jsonl", "--out-dataset", "data.jsonl", "--acronyms", "3",
            "--contexts", "3", "--words-per-side", "20",
        ],
    );
    if !ok {
        return false;
    }
    let acronym = load_records(dir.join("data.jsonl")).unwrap()[0].acronym.clone();
    let steps: Vec<Vec<&str>> = vec![
        vec!["harvest", "--acronym", &acronym, "--corpus", "corpus.jsonl", "--out", "harvest.jsonl"],
        [&["train", "--dataset", "harvest.jsonl", "--model", "model.bin"][..], &train].concat(),
        [
            &["evaluate", "--dataset", "data.jsonl", "--report", "report.jsonl", "--max-queries", "2"][..],
            &train,
        ]
        .concat(),
        vec![
            "sweep", "--dataset", "data.jsonl", "--corpus", "corpus.jsonl", "--grid", "grid.json", "--out",
            "sweep.csv", "--max-queries", "1",
        ],
        vec!["plot", "--model", "model.bin", "--out", "plot.csv"],
    ];
    steps.iter().all(|s| run_cli(dir, s))
}

#[test]
fn criterion_08_cli_workflow_is_deterministic() {
    let _serial = serial();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ran = cli_workflow(a.path()) && cli_workflow(b.path());
    let files = [
        "corpus.jsonl", "data.jsonl", "harvest.jsonl", "model.bin", "report.jsonl", "sweep.csv", "plot.csv",
    ];
    let differing: Vec<&str> = files
        .iter()
        .copied()
        .filter(|f| std::fs::read(a.path().join(f)).ok() != std::fs::read(b.path().join(f)).ok())
        .collect();
    let all_present = files.iter().all(|f| a.path().join(f).is_file());
    report(
        8,
        ran && all_present && differing.is_empty(),
        &format!("workflow ran {ran}, {} files compared, differing {differing:?}", files.len()),
    );
}

#[test]
fn criterion_09_sequence_ratio_matches_oracle() {
    let _serial = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut agree = 0;
    for i in 0..500 {
        let alphabet: &[u8] = if i % 2 == 0 { b"ab" } else { b"abcdefg" };
        let mut s = || -> String {
            (0..rng.random_range(0..=40))
                .map(|_| alphabet[rng.random_range(0..alphabet.len())] as char)
                .collect()
        };
        let (a, b) = (s(), s());
        agree += (sequence_ratio(&a, &b) == common::ratcliff_ratio(&a, &b)) as usize;
    }
    let example = sequence_ratio("abcd", "bcde");
    report(
        9,
        agree == 500 && example == 0.75,
        &format!("{agree}/500 pairs exact, (abcd, bcde) = {example}"),
    );
}

#[test]
fn criterion_10_pca_matches_dense_eigendecomposition() {
    let _serial = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut worst = 0.0f64;
    let mut tested = 0;
    while tested < 50 {
        let n = rng.random_range(3..=20);
        let dim = rng.random_range(2..=10);
        let out_dim = rng.random_range(1..=dim.min(n - 1));
        let x: Vec<Vec<f64>> = (0..n).map(|_| uniform(&mut rng, dim, 1.0)).collect();

        let mean: Vec<f64> = (0..dim).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
        let xc = nalgebra::DMatrix::from_fn(n, dim, |i, j| x[i][j] - mean[j]);
        let cov = xc.transpose() * &xc / (n - 1) as f64;
        let eig = nalgebra::SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        // components are only defined up to rotation when eigenvalues tie
        let separated = (0..out_dim).all(|c| {
            let next = vals.get(c + 1).copied().unwrap_or(f64::NEG_INFINITY);
            vals[c] - next > 1e-3 * vals[0]
        });
        if !separated {
            continue;
        }
        tested += 1;

        let got = pca_project(&x, out_dim).unwrap();
        for (c, &idx) in order.iter().take(out_dim).enumerate() {
            let v = eig.eigenvectors.column(idx);
            let want: Vec<f64> = (0..n).map(|i| xc.row(i).dot(&v.transpose())).collect();
            let dot: f64 = want.iter().zip(&got).map(|(w, g)| w * g[c]).sum();
            let sign = if dot < 0.0 { -1.0 } else { 1.0 };
            for (w, g) in want.iter().zip(&got) {
                worst = worst.max((sign * w - g[c]).abs());
            }
        }
    }

    // points on a 2-D plane inside 5-D space are rebuilt exactly
    let origin = uniform(&mut rng, 5, 3.0);
    let (u, w) = (uniform(&mut rng, 5, 1.0), uniform(&mut rng, 5, 1.0));
    let pts: Vec<Vec<f64>> = (0..30)
        .map(|_| {
            let (s, t) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            (0..5).map(|j| origin[j] + s * u[j] + t * w[j]).collect()
        })
        .collect();
    let pca = Pca::fit(&pts, 2).unwrap();
    let recon = pts
        .iter()
        .zip(&pca.scores)
        .flat_map(|(p, s)| {
            let r = pca.reconstruct(s);
            p.iter().zip(r).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>()
        })
        .fold(0.0f64, f64::max);
    report(
        10,
        worst <= 1e-6 && recon <= 1e-8,
        &format!("50 matrices, max score deviation {worst:.2e}, plane reconstruction error {recon:.2e}"),
    );
}

fn record_strategy() -> impl Strategy<Value = AcronymRecord> {
    "[A-H]{1,4}".prop_flat_map(|acronym| {
        let letters: Vec<char> = acronym.to_lowercase().chars().collect();
        let n = letters.len();
        let entry = (
            prop::collection::vec("[a-z]{0,6}", n),
            prop::bool::ANY,
            prop::collection::vec(("\\PC{1,60}", 0usize..100_000, "[a-z0-9-]{1,10}"), 0..4),
        );
        prop::collection::vec(entry, 1..4).prop_map(move |entries| {
            let mut seen = std::collections::HashSet::new();
            let entries = entries
                .into_iter()
                .map(|(suffixes, of, ctxs)| {
                    let mut words: Vec<String> = letters
                        .iter()
                        .zip(&suffixes)
                        .map(|(l, s)| format!("{}{s}", l.to_ascii_uppercase()))
                        .collect();
                    if of && n > 1 {
                        words.insert(1, "of".into());
                    }
                    ExpansionEntry {
                        expansion: words.join(" "),
                        contexts: ctxs
                            .into_iter()
                            .map(|(text, start, doc)| ContextWindow {
                                char_end: start + text.chars().count(),
                                text,
                                source_doc_id: doc,
                                char_start: start,
                            })
                            .collect(),
                    }
                })
                .filter(|e| {
                    let single_self = e.expansion.to_uppercase() == acronym;
                    !single_self && seen.insert(e.expansion.to_lowercase())
                })
                .collect();
            AcronymRecord {
                acronym: acronym.clone(),
                entries,
            }
        })
    })
}

fn finite_f32() -> impl Strategy<Value = f32> {
    prop::num::f32::NORMAL | prop::num::f32::SUBNORMAL | prop::num::f32::ZERO
}

fn model_strategy() -> impl Strategy<Value = EmbeddingModel> {
    (
        prop::collection::btree_map("[a-z]{1,8}", any::<u64>(), 1..12),
        prop::collection::vec(("\\PC{0,12}", any::<u32>()), 1..5),
        1usize..6,
        (prop::bool::ANY, 1usize..10, 0usize..30, any::<u64>(), 0u32..3),
    )
        .prop_flat_map(|(vocab, tags, dim, cfg)| {
            let v = vocab.len();
            let cells = (2 * v + tags.len()) * dim;
            (
                Just((vocab, tags, dim, cfg)),
                prop::collection::vec(finite_f32(), cells),
                (finite_f32(), finite_f32()),
            )
        })
        .prop_map(|((vocab, tags, dim, (dm, window, epochs, seed, obj)), cells, (lr, min_lr))| {
            let v = vocab.len();
            let n_docs = tags.len();
            let (words, rest) = cells.split_at(v * dim);
            let (out, docs) = rest.split_at(v * dim);
            EmbeddingModel {
                vocab: Vocabulary::from_counts(vocab.into_iter().collect()).unwrap(),
                params: Params {
                    word_vectors: Matrix::from_vec(v, dim, words.to_vec()),
                    output_weights: Matrix::from_vec(v, dim, out.to_vec()),
                    doc_vectors: Matrix::from_vec(n_docs, dim, docs.to_vec()),
                },
                doc_tags: tags.into_iter().map(|(l, i)| DocTag::new(l, i)).collect(),
                config: TrainConfig {
                    mode: if dm { Mode::Dm } else { Mode::Dbow },
                    dim,
                    window,
                    epochs,
                    learning_rate: lr,
                    min_learning_rate: min_lr,
                    objective: match obj {
                        0 => Objective::Auto,
                        1 => Objective::ExactSoftmax,
                        _ => Objective::NegativeSampling {
                            negatives: (seed % 20) as u32 + 1,
                        },
                    },
                    seed,
                    ..TrainConfig::dm()
                },
            }
        })
}

fn bits(m: &EmbeddingModel) -> Vec<u32> {
    let p = &m.params;
    [&p.word_vectors, &p.output_weights, &p.doc_vectors]
        .iter()
        .flat_map(|x| x.as_slice().iter().map(|f| f.to_bits()))
        .collect()
}

#[test]
fn criterion_11_persistence_round_trips() {
    let _serial = serial();
    let dir = tempfile::tempdir().unwrap();
    let config = PropConfig {
        cases: 100,
        failure_persistence: None,
        ..PropConfig::default()
    };
    let rng = || TestRng::deterministic_rng(RngAlgorithm::ChaCha);

    let path = dir.path().join("records.jsonl");
    let records = TestRunner::new_with_rng(config.clone(), rng()).run(&record_strategy(), |rec| {
        rec.validate(&DatasetOptions::default()).unwrap();
        save_records(std::slice::from_ref(&rec), &path).unwrap();
        let first = std::fs::read(&path).unwrap();
        let back = load_records(&path).unwrap();
        prop_assert_eq!(&back, &vec![rec]);
        save_records(&back, &path).unwrap();
        prop_assert_eq!(first, std::fs::read(&path).unwrap());
        Ok(())
    });

    let mpath = dir.path().join("model.bin");
    let models = TestRunner::new_with_rng(config, rng()).run(&model_strategy(), |model| {
        save_model(&model, &mpath).unwrap();
        let first = std::fs::read(&mpath).unwrap();
        let back = load_model(&mpath).unwrap();
        prop_assert_eq!(bits(&back), bits(&model));
        prop_assert_eq!(&back.vocab, &model.vocab);
        prop_assert_eq!(&back.doc_tags, &model.doc_tags);
        prop_assert_eq!(back.config.seed, model.config.seed);
        prop_assert_eq!(back.config.learning_rate.to_bits(), model.config.learning_rate.to_bits());
        prop_assert_eq!(back.config.min_learning_rate.to_bits(), model.config.min_learning_rate.to_bits());
        prop_assert_eq!(
            (back.config.mode, back.config.dim, back.config.window, back.config.epochs, back.config.objective),
            (model.config.mode, model.config.dim, model.config.window, model.config.epochs, model.config.objective)
        );
        save_model(&back, &mpath).unwrap();
        prop_assert_eq!(first, std::fs::read(&mpath).unwrap());
        Ok(())
    });
    report(
        11,
        records.is_ok() && models.is_ok(),
        &format!("100 records: {:?}; 100 models: {:?}", records, models),
    );
}

#[test]
fn criterion_12_table1_sweep_runs() {
    let _serial = serial();
    let t0 = Instant::now();
    let bench = generate(&SynthConfig {
        n_acronyms: 4,
        seed: 12,
        ..SynthConfig::default()
    })
    .unwrap();
    let sw = StopwordList::default();
    let cfg = EvalConfig {
        max_queries_per_acronym: Some(1),
        workers: workers(),
        grid: table1_grid(12),
        ..EvalConfig::default()
    };
    let corpus = SweepCorpus {
        documents: &bench.corpus,
        stopwords: &sw,
    };
    let rows = grid_sweep(&bench.records, &cfg, Some(&corpus)).unwrap();
    let table = sweep_table(&rows);
    print!("{table}");
    let lines = table.lines().count();
    let evaluated = rows.iter().all(|(_, r)| r.n_queries() > 0);
    report(
        12,
        rows.len() == 9 && lines == 10 && evaluated,
        &format!("{} rows, every row evaluated {evaluated}, {:.1}s", rows.len(), t0.elapsed().as_secs_f64()),
    );
}
