use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use mlbalance::cooccur::{
    chord_document, compare_snapshots, cooccurrence, random_label_subset, write_comparison_csv,
};
use mlbalance::dataset::{
    read_dataset, split_dataset, write_dataset_files, LabelId, MultiLabelDataset,
};
use mlbalance::eval::write_scatter_csv;
use mlbalance::metrics::{imbalance_report, write_profile_csv};
use mlbalance::net::{
    evaluate, load_checkpoint, predict, save_checkpoint, target_matrix, train as fit,
    train_validated, write_loss_csv, NetConfig, Task, TrainConfig,
};
use mlbalance::resample::{resample, ResampleConfig};
use mlbalance::synth::{generate, SynthConfig};
use mlbalance::{Error, Result};
use serde::Serialize;

use crate::args::{
    CooccurArgs, DataArgs, EvalArgs, MetricsArgs, OversampleArgs, SplitArgs, SynthArgs, TrainArgs,
};
use crate::manifest::{beside, Run};

fn load(input: &DataArgs, run: &mut Run) -> Result<MultiLabelDataset> {
    run.input(&input.data);
    if let Some(v) = &input.vocab {
        run.input(v);
    }
    read_dataset(&input.data, input.vocab.as_deref())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => ensure_dir(p),
        _ => Ok(()),
    }
}

pub fn metrics(args: &MetricsArgs) -> Result<()> {
    let mut run = Run::start("metrics", None);
    let ds = load(&args.input, &mut run)?;
    ensure_dir(&args.out)?;
    let report = imbalance_report(&ds)?;
    write_json(&run.output(&args.out.join("report.json")), &report)?;
    let mut w = create(&run.output(&args.out.join("profile.csv")))?;
    write_profile_csv(&report, &mut w)?;
    w.flush()?;
    run.finish(args, &args.out.join("manifest.json"))
}

pub fn oversample(args: &OversampleArgs) -> Result<()> {
    let mut run = Run::start("oversample", Some(args.seed));
    let ds = load(&args.input, &mut run)?;
    let config = ResampleConfig {
        method: args.method,
        p: args.p,
        r: args.r,
        k: args.k,
        seed: args.seed,
    };
    let out = resample(&ds, &config)?;
    ensure_dir(&args.out)?;
    let data = run.output(&args.out.join("dataset.jsonl"));
    write_dataset_files(&out.dataset, &data)?;
    run.output(&args.out.join("dataset.vocab.tsv"));
    write_json(
        &run.output(&args.out.join("diagnostics.json")),
        &out.diagnostics,
    )?;
    for w in &out.diagnostics.warnings {
        eprintln!("warning: {w}");
    }
    run.finish(args, &args.out.join("manifest.json"))
}

fn snapshot_spec(spec: &str) -> (String, PathBuf) {
    match spec.split_once('=') {
        Some((name, path)) if !name.is_empty() => (name.to_string(), PathBuf::from(path)),
        _ => {
            let path = PathBuf::from(spec);
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| spec.to_string());
            (name, path)
        }
    }
}

pub fn cooccur(args: &CooccurArgs) -> Result<()> {
    let mut run = Run::start("cooccur", args.random_labels.map(|_| args.seed));
    let mut snapshots: Vec<(String, MultiLabelDataset)> = Vec::new();
    let mut names = HashSet::new();
    for spec in &args.data {
        let (name, path) = snapshot_spec(spec);
        if !names.insert(name.clone()) {
            return Err(Error::InvalidArgument(format!(
                "snapshot name {name:?} used twice"
            )));
        }
        if name.contains(['/', '\\']) {
            return Err(Error::InvalidArgument(format!(
                "snapshot name {name:?} contains a path separator"
            )));
        }
        run.input(&path);
        snapshots.push((name, read_dataset(&path, None)?));
    }
    let reference = &snapshots[0].1;
    let labels: Vec<LabelId> = match (&args.labels, args.random_labels) {
        (Some(list), _) => list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|name| {
                reference
                    .vocabulary()
                    .index_of(name)
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown label {name:?}")))
            })
            .collect::<Result<_>>()?,
        (None, Some(n)) => random_label_subset(reference.label_count(), n, args.seed)?,
        (None, None) => {
            return Err(Error::InvalidArgument(
                "pass --labels or --random-labels".into(),
            ))
        }
    };
    ensure_dir(&args.out)?;
    for (name, ds) in &snapshots {
        let summary = cooccurrence(ds, name, &labels)?;
        write_json(
            &run.output(&args.out.join(format!("chord_{name}.json"))),
            &chord_document(&summary, ds),
        )?;
    }
    let variants: Vec<(&str, &MultiLabelDataset)> = snapshots[1..]
        .iter()
        .map(|(n, d)| (n.as_str(), d))
        .collect();
    let table = compare_snapshots((&snapshots[0].0, reference), &variants, &labels)?;
    write_json(&run.output(&args.out.join("comparison.json")), &table)?;
    let mut w = create(&run.output(&args.out.join("comparison.csv")))?;
    write_comparison_csv(&table, &mut w)?;
    w.flush()?;
    run.finish(args, &args.out.join("manifest.json"))
}

fn parse_widths(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::InvalidArgument(format!("bad layer width {t:?}")))
        })
        .collect()
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let mut run = Run::start("train", Some(args.seed));
    let ds = load(&args.input, &mut run)?;
    let output_dim = match args.task {
        Task::Multilabel => ds.label_count(),
        Task::Multiregression => ds.regression_width().ok_or_else(|| {
            Error::InvalidArgument("multiregression needs a dataset with regression targets".into())
        })?,
    };
    let mut net = NetConfig::new(
        args.task,
        args.inputs,
        ds.node_feature_dim(),
        ds.fingerprint_width(),
        output_dim,
    );
    net.hidden_dims = parse_widths(&args.hidden)?;
    net.fusion_dim = args.fusion_dim;
    net.activation = args.activation;
    net.readout = args.readout;
    net.head = args.head.unwrap_or(args.task.default_head());
    net.adjacency = args.adjacency;
    let tc = TrainConfig {
        epochs: args.epochs,
        learning_rate: args.lr,
        momentum: args.momentum,
        batch_size: args.batch_size,
        seed: args.seed,
    };
    let outcome = match &args.validation {
        Some(path) => {
            run.input(path);
            let held_out = read_dataset(path, None)?;
            train_validated(&ds, &held_out, net, &tc, args.patience)?
        }
        None => fit(&ds, net, &tc)?,
    };
    ensure_parent(&args.model_out)?;
    let mut w = create(&run.output(&args.model_out))?;
    save_checkpoint(&outcome.model, &mut w)?;
    w.flush()?;
    let mut w = create(&run.output(&beside(&args.model_out, "loss.csv")))?;
    write_loss_csv(&outcome.loss_curve, &outcome.validation_curve, &mut w)?;
    w.flush()?;
    run.finish(args, &beside(&args.model_out, "manifest.json"))
}

pub fn eval(args: &EvalArgs) -> Result<()> {
    let mut run = Run::start("eval", None);
    let ds = load(&args.input, &mut run)?;
    run.input(&args.model);
    let model = load_checkpoint(std::io::BufReader::new(File::open(&args.model)?))?;
    let report = evaluate(&model, &ds, args.threshold)?;
    ensure_parent(&args.report)?;
    write_json(&run.output(&args.report), &report)?;
    if let Some(path) = &args.scatter {
        if model.config.task != Task::Multiregression {
            return Err(Error::InvalidArgument(
                "--scatter applies to multiregression models only".into(),
            ));
        }
        let predictions = predict(&model, &ds)?;
        let targets = target_matrix(&ds, model.config.task)?;
        ensure_parent(path)?;
        let mut w = create(&run.output(path))?;
        write_scatter_csv(&predictions, &targets, &mut w)?;
        w.flush()?;
    }
    run.finish(args, &beside(&args.report, "manifest.json"))
}

fn parse_range(s: &str) -> Result<Option<(usize, usize)>> {
    if s.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    let bad =
        || Error::InvalidArgument(format!("graph node range {s:?} is not `min-max` or `none`"));
    let (lo, hi) = s.split_once('-').ok_or_else(bad)?;
    Ok(Some((
        lo.trim().parse().map_err(|_| bad())?,
        hi.trim().parse().map_err(|_| bad())?,
    )))
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let mut run = Run::start("synth", Some(args.seed));
    let config = SynthConfig {
        n_instances: args.n_instances,
        n_labels: args.n_labels,
        zipf_exponent: args.zipf_exponent,
        target_card: args.target_card,
        fingerprint_width: args.fingerprint_width,
        signal_bits_per_label: args.signal_bits_per_label,
        noise_flip_prob: args.noise_flip_prob,
        graph_nodes_range: parse_range(&args.graph_nodes)?,
        node_feature_dim: args.node_feature_dim,
        graph_signal: args.graph_signal,
        regression_width: args.regression_width,
        cooccurrence_boost: args.cooccurrence_boost,
        seed: args.seed,
    };
    let ds = generate(&config)?;
    ensure_parent(&args.out)?;
    write_dataset_files(&ds, &run.output(&args.out))?;
    run.output(&beside(&args.out, "vocab.tsv"));
    run.finish(args, &beside(&args.out, "manifest.json"))
}

pub fn split(args: &SplitArgs) -> Result<()> {
    let mut run = Run::start("split", Some(args.seed));
    let ds = load(&args.input, &mut run)?;
    let (train, test) = split_dataset(&ds, args.test_fraction, args.seed)?;
    ensure_dir(&args.out)?;
    for (name, part) in [("train", &train), ("test", &test)] {
        write_dataset_files(part, &run.output(&args.out.join(format!("{name}.jsonl"))))?;
        run.output(&args.out.join(format!("{name}.vocab.tsv")));
    }
    run.finish(args, &args.out.join("manifest.json"))
}
