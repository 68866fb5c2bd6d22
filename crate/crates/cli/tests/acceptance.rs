//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.
//!
//! Run with `cargo test -p mlbalance-cli --test acceptance -- --nocapture`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use mlbalance::dataset::{
    parse_dataset, split_dataset, write_dataset, write_vocabulary, DatasetShape, Fingerprint,
    Instance, LabelId, LabelVocabulary, MolecularGraph, MultiLabelDataset,
};
use mlbalance::eval::EvalReport;
use mlbalance::metrics::{
    cardinality, imbalance_report, irlbl, label_counts, mean_ir, scumble_instances,
};
use mlbalance::net::{
    backward, evaluate, forward, loss, train_validated, Activation, GraphInput, InputMode,
    ModelParameters, NetConfig, ReadoutMode, SampleInput, Task, TrainConfig,
};
use mlbalance::resample::{mlsmote, oversample_proposed, ResampleConfig};
use mlbalance::synth::{generate, SynthConfig};
use ndarray::Array1;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestError, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn runner(cases: u32, seed: u8) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        max_global_rejects: 100_000,
        ..Config::default()
    };
    TestRunner::new_with_rng(
        config,
        TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]),
    )
}

fn report<V: std::fmt::Debug>(r: Result<(), TestError<V>>, ok: String) -> Outcome {
    match r {
        Ok(()) => Ok(ok),
        Err(TestError::Fail(why, v)) => Err(format!("{why}; minimal case {v:?}")),
        Err(TestError::Abort(why)) => Err(format!("aborted: {why}")),
    }
}

// ---------- random datasets ----------

#[derive(Clone, Copy)]
struct Limits {
    max_instances: usize,
    max_labels: usize,
    graphs: bool,
    regression: bool,
}

const SMALL: Limits = Limits {
    max_instances: 50,
    max_labels: 20,
    graphs: false,
    regression: false,
};

fn label_set(n_labels: usize) -> impl Strategy<Value = Vec<LabelId>> {
    // min of two draws skews towards low labels
    proptest::collection::vec((0..n_labels as u32, 0..n_labels as u32), 0..=4).prop_map(|pairs| {
        let mut ls: Vec<LabelId> = pairs.into_iter().map(|(a, b)| a.min(b)).collect();
        ls.sort_unstable();
        ls.dedup();
        ls
    })
}

fn graph_strategy(d: usize) -> impl Strategy<Value = MolecularGraph> {
    (1usize..=6).prop_flat_map(move |n| {
        let feats = proptest::collection::vec(proptest::collection::vec(-1e6f64..1e6, d), n);
        let edges = proptest::collection::vec((0..n, 0..n), 0..=2 * n);
        (feats, edges).prop_map(|(node_features, raw)| {
            let mut edges: Vec<(usize, usize)> = raw.into_iter().filter(|(u, v)| u != v).collect();
            edges.sort_unstable();
            edges.dedup();
            MolecularGraph {
                node_features,
                edges,
            }
        })
    })
}

fn dataset(limits: Limits) -> impl Strategy<Value = MultiLabelDataset> {
    (
        1..=limits.max_instances,
        1..=limits.max_labels,
        1usize..=70,
        1usize..=3,
        1usize..=3,
    )
        .prop_flat_map(move |(n, n_labels, width, d, reg)| {
            let row = (
                proptest::collection::vec(any::<bool>(), width),
                label_set(n_labels),
                if limits.graphs {
                    proptest::option::weighted(0.8, graph_strategy(d)).boxed()
                } else {
                    Just(None).boxed()
                },
                proptest::collection::vec(
                    any::<f64>().prop_filter("finite", |v| v.is_finite()),
                    reg,
                ),
                proptest::option::weighted(0.2, 0usize..1000),
            );
            proptest::collection::vec(row, n).prop_map(move |rows| {
                let instances = rows
                    .into_iter()
                    .enumerate()
                    .map(|(i, (bits, labels, g, r, origin))| {
                        let mut inst =
                            Instance::new(format!("m{i}"), Fingerprint::from_bits(&bits), labels);
                        inst.graph = g;
                        inst.origin = origin.map(|o| format!("src{o}"));
                        if limits.regression {
                            inst.regression_targets = Some(r);
                        }
                        inst
                    })
                    .collect();
                MultiLabelDataset::new(
                    LabelVocabulary::numbered("effect", n_labels),
                    DatasetShape {
                        fingerprint_width: width,
                        node_feature_dim: d,
                        regression_width: limits.regression.then_some(reg),
                    },
                    instances,
                )
                .unwrap()
            })
        })
}

// ---------- 1: replication oracle ----------

/// Minority labels in exact rationals: IRLbl(l) > MeanIR  <=>  L' / c_l > sum_j 1 / c_j.
fn oracle_minority(ds: &MultiLabelDataset) -> Vec<bool> {
    let mut counts = vec![0i128; ds.label_count()];
    for inst in ds.instances() {
        for &l in &inst.labels {
            counts[l as usize] += 1;
        }
    }
    let present: Vec<i128> = counts.iter().copied().filter(|&c| c > 0).collect();
    if present.is_empty() {
        return vec![false; counts.len()];
    }
    let gcd = |mut a: i128, mut b: i128| {
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a
    };
    let lcm = present.iter().fold(1i128, |acc, &c| acc / gcd(acc, c) * c);
    let sum: i128 = present.iter().map(|&c| lcm / c).sum();
    let n = present.len() as i128;
    counts
        .iter()
        .map(|&c| c > 0 && n * (lcm / c) > sum)
        .collect()
}

type Row = (String, Vec<LabelId>, Option<String>, Fingerprint);

/// Brute force: score by cross-multiplied fractions, stable insertion sort,
/// unlabelled rows last, take floor(num/den * n / r), append r copies each.
fn oracle_proposed(ds: &MultiLabelDataset, num: usize, den: usize, r: usize) -> Vec<Row> {
    let minority = oracle_minority(ds);
    let mut ranked: Vec<(usize, usize, usize)> = Vec::new();
    let mut tail = Vec::new();
    for (i, inst) in ds.instances().iter().enumerate() {
        if inst.labels.is_empty() {
            tail.push(i);
        } else {
            let m = inst
                .labels
                .iter()
                .filter(|&&l| minority[l as usize])
                .count();
            ranked.push((i, m, inst.labels.len()));
        }
    }
    for a in 1..ranked.len() {
        let mut j = a;
        while j > 0 && ranked[j].1 * ranked[j - 1].2 > ranked[j - 1].1 * ranked[j].2 {
            ranked.swap(j, j - 1);
            j -= 1;
        }
    }
    let order: Vec<usize> = ranked.iter().map(|t| t.0).chain(tail).collect();
    let s = (num * ds.len()) / (den * r);
    let mut out: Vec<Row> = ds
        .instances()
        .iter()
        .map(|i| {
            (
                i.id.clone(),
                i.labels.clone(),
                i.origin.clone(),
                i.fingerprint.clone(),
            )
        })
        .collect();
    for &i in order.iter().take(s) {
        let src = &ds.instances()[i];
        for _ in 0..r {
            out.push((
                String::new(),
                src.labels.clone(),
                Some(src.id.clone()),
                src.fingerprint.clone(),
            ));
        }
    }
    out
}

fn rows(ds: &MultiLabelDataset, n_original: usize) -> Vec<Row> {
    ds.instances()
        .iter()
        .enumerate()
        .map(|(k, i)| {
            // generated copies get fresh ids; compare only what the oracle fixes
            let id = if k < n_original {
                i.id.clone()
            } else {
                String::new()
            };
            (
                id,
                i.labels.clone(),
                i.origin.clone(),
                i.fingerprint.clone(),
            )
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let strategy = (dataset(SMALL), 0usize..=100, 1usize..=4);
    let r = runner(200, 1).run(&strategy, |(ds, num, r)| {
        let out =
            oversample_proposed(&ds, &ResampleConfig::proposed(num as f64 / 100.0, r)).unwrap();
        prop_assert_eq!(
            rows(&out.dataset, ds.len()),
            oracle_proposed(&ds, num, 100, r)
        );
        Ok(())
    });
    let elapsed = start.elapsed();
    report(r, String::new())?;
    if elapsed >= Duration::from_secs(10) {
        return Err(format!("took {:.2}s", elapsed.as_secs_f64()));
    }
    Ok(format!(
        "200 datasets, 0 mismatches, {:.2}s",
        elapsed.as_secs_f64()
    ))
}

// ---------- 2: metric invariants ----------

fn doubled(ds: &MultiLabelDataset) -> MultiLabelDataset {
    let mut rows: Vec<Instance> = ds.instances().to_vec();
    rows.extend(ds.instances().iter().map(|i| Instance {
        id: format!("{}-dup", i.id),
        ..i.clone()
    }));
    ds.with_instances(rows).unwrap()
}

fn criterion_2() -> Outcome {
    let r = runner(500, 2).run(&dataset(SMALL), |ds| {
        let counts = label_counts(&ds);
        prop_assume!(counts.iter().any(|&c| c > 0));
        let irl = irlbl(&counts).unwrap();
        let max = *counts.iter().max().unwrap();
        for (c, v) in counts.iter().zip(&irl) {
            match v {
                Some(v) => {
                    prop_assert!(*v >= 1.0);
                    prop_assert_eq!(*v == 1.0, *c == max);
                }
                None => prop_assert_eq!(*c, 0),
            }
        }
        prop_assert!(mean_ir(&irl).unwrap() >= 1.0);
        let card = cardinality(&ds).unwrap();
        let pairs: usize = ds.instances().iter().map(|i| i.labels.len()).sum();
        prop_assert!((card * ds.len() as f64 - pairs as f64).abs() < 1e-9);
        prop_assert_eq!((card * ds.len() as f64).round() as usize, pairs);
        for (inst, s) in ds
            .instances()
            .iter()
            .zip(scumble_instances(&ds, &irl).unwrap())
        {
            prop_assert!((0.0..1.0).contains(&s));
            let vals: Vec<f64> = inst
                .labels
                .iter()
                .map(|&l| irl[l as usize].unwrap())
                .collect();
            if vals.len() <= 1 || vals.iter().all(|&v| v == vals[0]) {
                prop_assert_eq!(s, 0.0);
            }
        }
        let a = imbalance_report(&ds).unwrap();
        let b = imbalance_report(&doubled(&ds)).unwrap();
        prop_assert_eq!(&a.irlbl, &b.irlbl);
        prop_assert_eq!(a.mean_ir, b.mean_ir);
        prop_assert_eq!(a.card, b.card);
        for (x, y) in a.scumble_per_label.iter().zip(&b.scumble_per_label) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert!((a.scumble_mean - b.scumble_mean).abs() < 1e-12);
        Ok(())
    });
    report(r, "500 datasets, 0 violations".into())
}

// ---------- 3: size and card bookkeeping ----------

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn criterion_3() -> Outcome {
    let strategy = (dataset(SMALL), 0usize..=100, 1usize..=5);
    let r = runner(300, 3).run(&strategy, |(ds, num, r)| {
        let out =
            oversample_proposed(&ds, &ResampleConfig::proposed(num as f64 / 100.0, r)).unwrap();
        let s = (num * ds.len()) / (100 * r);
        prop_assert_eq!(out.dataset.len(), ds.len() + s * r);
        let added: usize = out.dataset.instances()[ds.len()..]
            .iter()
            .map(|i| i.labels.len())
            .sum();
        let expected = (ds.positive_pairs() + added) as f64 / (ds.len() + s * r) as f64;
        prop_assert!((cardinality(&out.dataset).unwrap() - expected).abs() <= 1e-12);
        Ok(())
    });
    report(r, String::new())?;
    let eight = mlbalance::dataset::read_dataset(&fixture("eight.jsonl"), None)
        .map_err(|e| e.to_string())?;
    let n = oversample_proposed(&eight, &ResampleConfig::proposed(0.25, 2))
        .map_err(|e| e.to_string())?
        .dataset
        .len();
    if eight.len() != 8 || n != 10 {
        return Err(format!(
            "spot check |D| = {} gave {n}, expected 8 -> 10",
            eight.len()
        ));
    }
    Ok("300 (p, r) cases within 1e-12; 8 -> 10 at p = 0.25, r = 2".into())
}

// ---------- 4: directional metric changes ----------

fn criterion_4() -> Outcome {
    let cfg = SynthConfig {
        n_instances: 10_000,
        n_labels: 2000,
        zipf_exponent: 1.1,
        target_card: 4.0,
        fingerprint_width: 2048,
        signal_bits_per_label: 1,
        noise_flip_prob: 0.02,
        graph_nodes_range: None,
        cooccurrence_boost: 0.3,
        seed: 4,
        ..SynthConfig::default()
    };
    let ds = generate(&cfg).map_err(|e| e.to_string())?;
    let before = imbalance_report(&ds).map_err(|e| e.to_string())?;
    let prop =
        oversample_proposed(&ds, &ResampleConfig::proposed(0.25, 1)).map_err(|e| e.to_string())?;
    let smote = mlsmote(&ds, &ResampleConfig::mlsmote(0.25, 5, 4)).map_err(|e| e.to_string())?;
    let after_p = imbalance_report(&prop.dataset).map_err(|e| e.to_string())?;
    let after_m = imbalance_report(&smote.dataset).map_err(|e| e.to_string())?;
    let msg = format!(
        "MeanIR {:.3} -> {:.3} (proposed); Card {:.4} -> {:.4} (MLSMOTE), {:.4} (proposed)",
        before.mean_ir, after_p.mean_ir, before.card, after_m.card, after_p.card
    );
    if after_p.mean_ir >= before.mean_ir {
        return Err(format!("proposed did not lower MeanIR: {msg}"));
    }
    if after_m.card >= before.card {
        return Err(format!("MLSMOTE did not lower Card: {msg}"));
    }
    if prop.dataset.instances()[..ds.len()] != *ds.instances() {
        return Err("proposed changed an original instance".into());
    }
    Ok(msg)
}

// ---------- 5: scaling ----------

fn median_time(
    ds: &MultiLabelDataset,
    cfg: &ResampleConfig,
    f: fn(
        &MultiLabelDataset,
        &ResampleConfig,
    ) -> mlbalance::Result<mlbalance::resample::ResampleOutcome>,
) -> f64 {
    // one untimed call first so allocator warm-up is not charged to run 1
    drop(f(ds, cfg).unwrap());
    let mut times: Vec<f64> = (0..3)
        .map(|_| {
            let t = Instant::now();
            let out = f(ds, cfg).unwrap();
            let e = t.elapsed().as_secs_f64();
            drop(out);
            e
        })
        .collect();
    times.sort_by(f64::total_cmp);
    times[1]
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    // few labels, so minority bags grow in proportion to n
    let make = |n| {
        generate(&SynthConfig {
            n_instances: n,
            n_labels: 20,
            zipf_exponent: 1.1,
            target_card: 1.5,
            fingerprint_width: 256,
            signal_bits_per_label: 4,
            graph_nodes_range: None,
            seed: 5,
            ..SynthConfig::default()
        })
        .unwrap()
    };
    let (small, large) = (make(10_000), make(40_000));
    let pc = ResampleConfig::proposed(0.25, 1);
    let mc = ResampleConfig::mlsmote(0.25, 5, 5);
    let p_ratio = median_time(&large, &pc, oversample_proposed)
        / median_time(&small, &pc, oversample_proposed);
    let m_ratio = median_time(&large, &mc, mlsmote) / median_time(&small, &mc, mlsmote);
    let elapsed = start.elapsed();
    let msg = format!(
        "10k -> 40k: proposed x{p_ratio:.2}, MLSMOTE x{m_ratio:.2} ({:.1}s)",
        elapsed.as_secs_f64()
    );
    if p_ratio <= 5.0 && m_ratio >= 8.0 && elapsed < Duration::from_secs(300) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

// ---------- 6: gradient check ----------

fn six_node_graph(rng: &mut ChaCha8Rng, d: usize) -> MolecularGraph {
    let node_features = (0..6)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mut edges = vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)];
    for _ in 0..3 {
        let (u, v) = (rng.random_range(0..6), rng.random_range(0..6));
        if u != v && !edges.contains(&(u.min(v), u.max(v))) {
            edges.push((u.min(v), u.max(v)));
        }
    }
    MolecularGraph {
        node_features,
        edges,
    }
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let d = 3;
    let h = 1e-5;
    let mut components = 0usize;
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for task in [Task::Multilabel, Task::Multiregression] {
        for readout in [
            ReadoutMode::MaxPlusMean,
            ReadoutMode::MaxPlusMin,
            ReadoutMode::ConcatMeanMax,
        ] {
            let mut cfg = NetConfig::new(task, InputMode::Hybrid, d, 16, 4);
            cfg.hidden_dims = vec![5, 4];
            cfg.fusion_dim = 6;
            cfg.activation = Activation::Tanh;
            cfg.readout = readout;
            let mut model = ModelParameters::init(cfg.clone(), 60).unwrap();
            for t in model.params.tensors_mut() {
                for v in t.iter_mut() {
                    *v += rng.random_range(-0.1..0.1);
                }
            }
            let graph = six_node_graph(&mut rng, d);
            let g = GraphInput::new(&graph, d, cfg.adjacency).unwrap();
            let ones: Vec<usize> = (0..16).filter(|_| rng.random_bool(0.4)).collect();
            let input = SampleInput {
                graph: Some(&g),
                fingerprint: &ones,
            };
            let target: Array1<f64> = match task {
                Task::Multilabel => {
                    Array1::from_iter((0..4).map(|_| rng.random_bool(0.5) as u8 as f64))
                }
                Task::Multiregression => {
                    Array1::from_iter((0..4).map(|_| rng.random_range(-2.0..2.0)))
                }
            };
            let kind = task.loss_kind();
            let trace = forward(&model, &input).unwrap();
            let grad = backward(&model, &input, &trace, &target).unwrap();
            let analytic: Vec<f64> = grad
                .named_tensors()
                .iter()
                .flat_map(|(_, _, v)| v.to_vec())
                .collect();
            let mut idx = 0;
            for ti in 0..model.params.tensors_mut().len() {
                for j in 0..model.params.tensors_mut()[ti].len() {
                    let orig = model.params.tensors_mut()[ti][j];
                    model.params.tensors_mut()[ti][j] = orig + h;
                    let up =
                        loss(&forward(&model, &input).unwrap().prediction, &target, kind).unwrap();
                    model.params.tensors_mut()[ti][j] = orig - h;
                    let down =
                        loss(&forward(&model, &input).unwrap().prediction, &target, kind).unwrap();
                    model.params.tensors_mut()[ti][j] = orig;
                    let numeric = (up - down) / (2.0 * h);
                    let a = analytic[idx];
                    let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
                    worst = worst.max(rel);
                    if rel >= 1e-4 {
                        failures.push(format!(
                            "{task}/{readout} tensor {ti}[{j}]: {a} vs {numeric}"
                        ));
                    }
                    idx += 1;
                    components += 1;
                }
            }
        }
    }
    if failures.is_empty() {
        Ok(format!(
            "{components} components, worst relative error {worst:.2e}"
        ))
    } else {
        Err(format!(
            "{} of {components} components failed, first: {}",
            failures.len(),
            failures[0]
        ))
    }
}

// ---------- 7: permutation invariance ----------

fn criterion_7() -> Outcome {
    let strategy = (2usize..=12).prop_flat_map(|n| {
        (
            proptest::collection::vec(proptest::collection::vec(-3.0f64..3.0, 4), n),
            proptest::collection::vec((0..n, 0..n), 1..=2 * n),
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            0u64..1000,
            0usize..3,
        )
    });
    let worst = std::cell::Cell::new(0.0f64);
    let r = runner(100, 7).run(&strategy, |(node_features, raw, perm, seed, mode)| {
        let edges: Vec<(usize, usize)> = raw.into_iter().filter(|(u, v)| u != v).collect();
        let g = MolecularGraph {
            node_features,
            edges,
        };
        let mut cfg = NetConfig::new(Task::Multilabel, InputMode::Hybrid, 4, 16, 5);
        cfg.hidden_dims = vec![8, 8];
        cfg.readout = [
            ReadoutMode::MaxPlusMean,
            ReadoutMode::MaxPlusMin,
            ReadoutMode::ConcatMeanMax,
        ][mode];
        let model = ModelParameters::init(cfg.clone(), seed).unwrap();
        let ones = [1usize, 5, 9, 14];
        let a = GraphInput::new(&g, 4, cfg.adjacency).unwrap();
        let b = GraphInput::new(&g.permuted(&perm), 4, cfg.adjacency).unwrap();
        let ya = forward(
            &model,
            &SampleInput {
                graph: Some(&a),
                fingerprint: &ones,
            },
        )
        .unwrap()
        .prediction;
        let yb = forward(
            &model,
            &SampleInput {
                graph: Some(&b),
                fingerprint: &ones,
            },
        )
        .unwrap()
        .prediction;
        for (x, y) in ya.iter().zip(&yb) {
            worst.set(worst.get().max((x - y).abs()));
            prop_assert!((x - y).abs() <= 1e-10);
        }
        Ok(())
    });
    report(r, String::new())?;
    Ok(format!("100 graphs, max deviation {:.1e}", worst.get()))
}

// ---------- 8: directional model comparisons ----------

fn samples_f1(r: &EvalReport) -> f64 {
    r.classification
        .as_ref()
        .map(|c| c.samples.f1)
        .unwrap_or(f64::NAN)
}

/// Loss after epoch 10 never rises more than 5% above the best value so far.
fn settles(curve: &[f64]) -> Result<(), String> {
    let mut best = f64::INFINITY;
    for (e, &l) in curve.iter().enumerate() {
        if e >= 10 && l > 1.05 * best {
            return Err(format!(
                "epoch {} loss {l:.5} exceeds best {best:.5} by > 5%",
                e + 1
            ));
        }
        best = best.min(l);
    }
    Ok(())
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let synth = SynthConfig {
        n_instances: 2000,
        n_labels: 100,
        zipf_exponent: 1.1,
        target_card: 2.0,
        fingerprint_width: 512,
        signal_bits_per_label: 4,
        noise_flip_prob: 0.1,
        graph_nodes_range: Some((6, 16)),
        node_feature_dim: 9,
        graph_signal: 0.5,
        cooccurrence_boost: 0.3,
        seed: 7,
        ..SynthConfig::default()
    };
    let ds = generate(&synth).map_err(|e| e.to_string())?;
    let (train_part, test) = split_dataset(&ds, 0.2, 1).map_err(|e| e.to_string())?;
    let (fit, validation) = split_dataset(&train_part, 0.2, 2).map_err(|e| e.to_string())?;
    let tc = TrainConfig {
        epochs: 400,
        momentum: 0.9,
        batch_size: Some(64),
        seed: 3,
        ..TrainConfig::default()
    };
    let net = |inputs| {
        let mut n = NetConfig::new(Task::Multilabel, inputs, 9, synth.fingerprint_width, 100);
        n.hidden_dims = vec![32, 32];
        n.fusion_dim = 32;
        n
    };
    let run = |data: &MultiLabelDataset, inputs| -> Result<(f64, Vec<f64>), String> {
        let out = train_validated(data, &validation, net(inputs), &tc, Some(30))
            .map_err(|e| e.to_string())?;
        let r = evaluate(&out.model, &test, 0.5).map_err(|e| e.to_string())?;
        Ok((samples_f1(&r), out.loss_curve))
    };

    let (hybrid, curve) = run(&fit, InputMode::Hybrid)?;
    let (graph, _) = run(&fit, InputMode::Graph)?;
    let (fingerprint, _) = run(&fit, InputMode::Fingerprint)?;
    // MLSMOTE rows carry no graph, so the resampling comparison uses the
    // fingerprint-only model throughout
    let proposed_set =
        oversample_proposed(&fit, &ResampleConfig::proposed(0.25, 1)).map_err(|e| e.to_string())?;
    let smote_set =
        mlsmote(&fit, &ResampleConfig::mlsmote(0.25, 5, 11)).map_err(|e| e.to_string())?;
    let none = fingerprint;
    let (proposed, _) = run(&proposed_set.dataset, InputMode::Fingerprint)?;
    let (smote, _) = run(&smote_set.dataset, InputMode::Fingerprint)?;
    let elapsed = start.elapsed();

    let msg = format!(
        "samples-F1 hybrid {hybrid:.4}, graph {graph:.4}, fingerprint {fingerprint:.4}; \
         none {none:.4}, proposed {proposed:.4}, MLSMOTE {smote:.4} ({:.0}s)",
        elapsed.as_secs_f64()
    );
    let mut problems = Vec::new();
    if !(hybrid >= graph && hybrid >= fingerprint) {
        problems.push("(a) hybrid below a single-input model".to_string());
    }
    if !(proposed > none && proposed > smote) {
        problems.push("(b) proposed oversampling not ahead".to_string());
    }
    if let Err(e) = settles(&curve) {
        problems.push(format!("loss curve: {e}"));
    }
    if elapsed >= Duration::from_secs(600) {
        problems.push("over 10 minutes".to_string());
    }
    if problems.is_empty() {
        Ok(msg)
    } else {
        Err(format!("{}: {msg}", problems.join("; ")))
    }
}

// ---------- 9: CLI determinism ----------

fn cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_mlbalance"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr).trim()
        ))
    }
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if !path.to_string_lossy().ends_with("manifest.json") {
                files.insert(
                    path.strip_prefix(dir).unwrap().to_path_buf(),
                    fs::read(&path).unwrap(),
                );
            }
        }
    }
    files
}

fn pipeline(root: &Path) -> Result<(), String> {
    let s = |p: &str| root.join(p).to_string_lossy().into_owned();
    cli(&[
        "synth",
        "--n-instances",
        "300",
        "--n-labels",
        "20",
        "--fingerprint-width",
        "128",
        "--graph-nodes",
        "4-8",
        "--regression-width",
        "2",
        "--cooccurrence-boost",
        "0.3",
        "--seed",
        "9",
        "--out",
        &s("synth/data.jsonl"),
    ])?;
    let data = s("synth/data.jsonl");
    cli(&["metrics", "--data", &data, "--out", &s("metrics")])?;
    cli(&[
        "oversample",
        "--data",
        &data,
        "--method",
        "proposed",
        "--p",
        "0.3",
        "--r",
        "2",
        "--out",
        &s("proposed"),
    ])?;
    cli(&[
        "oversample",
        "--data",
        &data,
        "--method",
        "mlsmote",
        "--p",
        "0.3",
        "--k",
        "4",
        "--seed",
        "2",
        "--out",
        &s("mlsmote"),
    ])?;
    cli(&[
        "cooccur",
        "--data",
        &format!("original={data}"),
        &format!("proposed={}", s("proposed/dataset.jsonl")),
        &format!("mlsmote={}", s("mlsmote/dataset.jsonl")),
        "--random-labels",
        "6",
        "--seed",
        "3",
        "--out",
        &s("cooccur"),
    ])?;
    cli(&[
        "split",
        "--data",
        &data,
        "--test-fraction",
        "0.25",
        "--seed",
        "4",
        "--out",
        &s("split"),
    ])?;
    let train = s("split/train.jsonl");
    let test = s("split/test.jsonl");
    cli(&[
        "--threads",
        "2",
        "train",
        "--data",
        &train,
        "--epochs",
        "5",
        "--hidden",
        "8,8",
        "--fusion-dim",
        "8",
        "--batch-size",
        "32",
        "--momentum",
        "0.5",
        "--seed",
        "5",
        "--model-out",
        &s("models/ml.json"),
    ])?;
    cli(&[
        "train",
        "--data",
        &train,
        "--task",
        "multiregression",
        "--epochs",
        "5",
        "--hidden",
        "8",
        "--fusion-dim",
        "8",
        "--seed",
        "6",
        "--model-out",
        &s("models/reg.json"),
    ])?;
    cli(&[
        "eval",
        "--data",
        &test,
        "--model",
        &s("models/ml.json"),
        "--report",
        &s("eval/ml.json"),
    ])?;
    cli(&[
        "eval",
        "--data",
        &test,
        "--model",
        &s("models/reg.json"),
        "--report",
        &s("eval/reg.json"),
        "--scatter",
        &s("eval/reg.scatter.csv"),
    ])?;
    Ok(())
}

fn criterion_9() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    pipeline(&a)?;
    pipeline(&b)?;
    let (fa, fb) = (snapshot(&a), snapshot(&b));
    if fa.keys().ne(fb.keys()) {
        return Err("reruns produced different file sets".into());
    }
    let differ: Vec<_> = fa
        .iter()
        .filter(|(k, v)| fb[*k] != **v)
        .map(|(k, _)| k.display().to_string())
        .collect();
    if differ.is_empty() {
        Ok(format!(
            "7 subcommands, {} output files byte-identical",
            fa.len()
        ))
    } else {
        Err(format!("differing outputs: {differ:?}"))
    }
}

// ---------- 10: round trip ----------

fn criterion_10() -> Outcome {
    let limits = Limits {
        max_instances: 40,
        max_labels: 20,
        graphs: true,
        regression: true,
    };
    let strategy = (dataset(limits), any::<bool>()).prop_map(|(ds, meta)| {
        if meta {
            ds.with_metadata(serde_json::json!({"source": "random", "n": 3}))
        } else {
            ds
        }
    });
    let r = runner(100, 10).run(&strategy, |ds| {
        let mut records = Vec::new();
        write_dataset(&ds, &mut records).unwrap();
        let mut vocab = Vec::new();
        write_vocabulary(ds.vocabulary(), &mut vocab).unwrap();
        let parsed = parse_dataset(&records[..], &vocab[..]).unwrap();
        prop_assert_eq!(&parsed, &ds);
        let mut again = Vec::new();
        write_dataset(&parsed, &mut again).unwrap();
        prop_assert_eq!(again, records);
        Ok(())
    });
    report(r, "100 datasets, 0 diffs".into())
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        ("1 replication matches brute-force oracle", criterion_1),
        ("2 metric invariants", criterion_2),
        ("3 size and cardinality bookkeeping", criterion_3),
        (
            "4 MeanIR and Card directions on skewed synthetic data",
            criterion_4,
        ),
        ("5 oversampling time scaling", criterion_5),
        ("6 analytic gradients match finite differences", criterion_6),
        ("7 node permutation invariance", criterion_7),
        ("8 hybrid and oversampling comparisons", criterion_8),
        ("9 CLI reruns are byte-identical", criterion_9),
        ("10 dataset parse/write identity", criterion_10),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                println!("FAIL {name}: {detail}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
