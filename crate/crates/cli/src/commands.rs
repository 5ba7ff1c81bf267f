use std::path::{Path, PathBuf};

use hfpc_core::consistency::assess_consistency;
use hfpc_core::dataset::{
    balance_manifest, kmeans, load_manifest_file, load_pairs, record_features, save_manifest_file, split_manifest,
    BalanceTarget, DatasetError, EmbeddingCache, KMeansOptions, ManifestRecord,
};
use hfpc_core::metrics::{emit_report, read_json, to_json_bytes, write_json, Evaluation, Report, ReportFormat};
use hfpc_core::reward::{evaluate_pairs, load_bundle, save_bundle, score_pair, train, EmbeddingSequence};
use hfpc_core::tensor_io::{load_image, load_mask, load_tensor};
use hfpc_core::{MaskSet, RewardHeadConfig};
use serde_json::json;

use crate::args::{ClusterBalanceArgs, Command, ConsistencyArgs, ReportArgs, ScoreArgs, SplitArgs, TrainArgs};
use crate::{evaluate, Cli, CliError, Result};

pub(crate) fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Score(a) => cmd_score(a),
        Command::Consistency(a) => cmd_consistency(a),
        Command::Evaluate(a) => evaluate::run(a),
        Command::ClusterBalance(a) => cmd_cluster_balance(a),
        Command::Split(a) => cmd_split(a),
        Command::Report(a) => cmd_report(a),
    }
}

/// Directory that relative manifest paths resolve against.
pub(crate) fn base_dir(manifest: &Path) -> PathBuf {
    match manifest.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

pub(crate) fn read_manifest(path: &Path) -> Result<Vec<ManifestRecord>> {
    load_manifest_file(path).map_err(|e| match e {
        DatasetError::Io { .. } => CliError::Data(e.to_string()),
        e => CliError::at(path, e),
    })
}

/// Makes relative paths absolute when a manifest is written to a different
/// directory than the one it was read from, so the copy stays loadable.
fn rebase(records: Vec<ManifestRecord>, from: &Path, to: &Path) -> Result<Vec<ManifestRecord>> {
    std::fs::create_dir_all(to).map_err(|e| CliError::at(to, e))?;
    let from = from.canonicalize().map_err(|e| CliError::at(from, e))?;
    let to = to.canonicalize().map_err(|e| CliError::at(to, e))?;
    if from == to {
        return Ok(records);
    }
    let fix = |p: &mut String| {
        if Path::new(p.as_str()).is_relative() {
            *p = from.join(p.as_str()).to_string_lossy().into_owned();
        }
    };
    Ok(records
        .into_iter()
        .map(|mut r| {
            fix(&mut r.original_embedding);
            fix(&mut r.original_image);
            r.original_masks.iter_mut().for_each(fix);
            for g in &mut r.generated {
                fix(&mut g.embedding);
                fix(&mut g.image);
                g.masks.iter_mut().for_each(fix);
            }
            r
        })
        .collect())
}

fn write_manifest(path: &Path, records: &[ManifestRecord]) -> Result<()> {
    save_manifest_file(path, records).map_err(|e| CliError::at(path, e))
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let records = read_manifest(&a.manifest)?;
    let (pairs, plan) = load_pairs(&records, &base_dir(&a.manifest)).map_err(|e| CliError::at(&a.manifest, e))?;
    if pairs.is_empty() {
        return Err(CliError::at(&a.manifest, "no record has both a passing and a failing generation"));
    }
    let val_pairs = match &a.val_manifest {
        Some(path) => {
            let val = read_manifest(path)?;
            load_pairs(&val, &base_dir(path)).map_err(|e| CliError::at(path, e))?.0
        }
        None => Vec::new(),
    };
    let defaults = RewardHeadConfig::new(pairs[0].width());
    let config = RewardHeadConfig {
        fusion: a.fusion.into(),
        loss: a.loss.into(),
        learning_rate: a.lr.unwrap_or(defaults.learning_rate),
        epochs: a.epochs.unwrap_or(defaults.epochs),
        hidden: a.hidden.unwrap_or(defaults.hidden),
        batch_size: a.batch_size.unwrap_or(defaults.batch_size),
        pass_threshold: a.theta_bg.unwrap_or(defaults.pass_threshold),
        seed: a.seed.seed,
        ..defaults
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(bad) = val_pairs.iter().find(|p| p.width() != config.d) {
        return Err(CliError::Data(format!(
            "validation embeddings have width {}, training embeddings {}",
            bad.width(),
            config.d
        )));
    }
    let outcome = train(&pairs, &val_pairs, &config).map_err(|e| CliError::at(&a.manifest, e))?;
    save_bundle(&a.out, &outcome.params, &config).map_err(|e| CliError::Data(e.to_string()))?;

    let train_metrics =
        evaluate_pairs(&outcome.params, &pairs, config.fusion).map_err(|e| CliError::Data(e.to_string()))?;
    let val_metrics = if val_pairs.is_empty() {
        None
    } else {
        Some(evaluate_pairs(&outcome.params, &val_pairs, config.fusion).map_err(|e| CliError::Data(e.to_string()))?)
    };
    let skipped: Vec<_> =
        plan.skipped.iter().map(|s| json!({ "id": s.id, "passes": s.passes, "fails": s.fails })).collect();
    let summary = json!({
        "seed": config.seed,
        "pairs": pairs.len(),
        "val_pairs": val_pairs.len(),
        "skipped_records": skipped,
        "train_metrics": train_metrics,
        "val_metrics": val_metrics,
        "history": outcome.history,
    });
    let path = a.out.join("training.json");
    write_json(&path, &summary).map_err(|e| CliError::at(&path, e))?;
    let last = outcome.history.last().expect("epochs > 0");
    println!(
        "trained {} pairs ({} records skipped) for {} epochs: final loss {:.6}, ranking accuracy {:.4}",
        pairs.len(),
        plan.skipped.len(),
        config.epochs,
        last.train_loss,
        train_metrics.ranking_accuracy
    );
    Ok(())
}

fn load_sequence(path: &Path) -> Result<EmbeddingSequence> {
    let t = load_tensor(path).map_err(|e| CliError::at(path, e))?;
    EmbeddingSequence::from_tensor(&t).map_err(|e| CliError::at(path, e))
}

fn cmd_score(a: ScoreArgs) -> Result<()> {
    let (params, config) = load_bundle(&a.params).map_err(|e| CliError::Data(e.to_string()))?;
    let theta = a.theta_bg.unwrap_or(config.pass_threshold);
    hfpc_core::reward::check_threshold(theta).map_err(|e| CliError::Usage(e.to_string()))?;
    let ori = load_sequence(&a.original)?;
    let gen = load_sequence(&a.generated)?;
    let score = score_pair(&params, &ori, &gen, config.fusion).map_err(|e| CliError::at(&a.generated, e))?;
    let out = json!({ "score": score, "theta_bg": theta, "pass": score >= theta });
    print!("{}", String::from_utf8(to_json_bytes(&out).map_err(|e| CliError::Data(e.to_string()))?).expect("utf-8"));
    Ok(())
}

fn load_masks(paths: &[PathBuf]) -> Result<MaskSet> {
    let masks = paths.iter().map(|p| load_mask(p).map_err(|e| CliError::at(p, e))).collect::<Result<Vec<_>>>()?;
    MaskSet::new(masks).map_err(|e| CliError::Data(format!("{}: {e}", join_paths(paths))))
}

fn join_paths(paths: &[PathBuf]) -> String {
    paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(",")
}

fn cmd_consistency(a: ConsistencyArgs) -> Result<()> {
    let cfg = a.flags.config();
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let ori_img = load_image(&a.original_image).map_err(|e| CliError::at(&a.original_image, e))?;
    let gen_img = load_image(&a.generated_image).map_err(|e| CliError::at(&a.generated_image, e))?;
    let ori = load_masks(&a.original_masks)?;
    let gen = load_masks(&a.generated_masks)?;
    let result = assess_consistency(&ori_img, &gen_img, &ori, &gen, &cfg).map_err(|e| {
        CliError::Data(format!("{} vs {}: {e}", a.original_image.display(), a.generated_image.display()))
    })?;
    match &a.out {
        Some(path) => write_json(path, &result).map_err(|e| CliError::at(path, e))?,
        None => print!(
            "{}",
            String::from_utf8(to_json_bytes(&result).map_err(|e| CliError::Data(e.to_string()))?).expect("utf-8")
        ),
    }
    Ok(())
}

fn cmd_cluster_balance(a: ClusterBalanceArgs) -> Result<()> {
    let records = read_manifest(&a.manifest)?;
    let base = base_dir(&a.manifest);
    let mut cache = EmbeddingCache::new(&base);
    let features = record_features(&records, &mut cache).map_err(|e| CliError::at(&a.manifest, e))?;
    let model =
        kmeans(&features, a.k, a.seed.seed, KMeansOptions::default()).map_err(|e| CliError::at(&a.manifest, e))?;
    let target = a.target.map_or(BalanceTarget::Max, BalanceTarget::Count);
    let balanced = balance_manifest(&records, &model.assignments, model.k, a.seed.seed, target, a.cap)
        .map_err(|e| CliError::at(&a.manifest, e))?;
    let balanced = rebase(balanced, &base, &base_dir(&a.out))?;
    write_manifest(&a.out, &balanced)?;
    println!(
        "{} records in {} clusters (inertia {:.6}, {} iterations) -> {} records",
        records.len(),
        model.k,
        model.inertia,
        model.iterations,
        balanced.len()
    );
    Ok(())
}

fn cmd_split(a: SplitArgs) -> Result<()> {
    let records = read_manifest(&a.manifest)?;
    let parts = split_manifest(&records, a.train_fraction, a.val_fraction, a.seed.seed)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let base = base_dir(&a.manifest);
    for (name, part) in ["train.jsonl", "val.jsonl", "test.jsonl"].iter().zip(parts) {
        let part = rebase(part, &base, &a.out)?;
        write_manifest(&a.out.join(name), &part)?;
        println!("{name}: {} records", part.len());
    }
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let eval: Evaluation = read_json(&a.results).map_err(|e| CliError::at(&a.results, e))?;
    let report = Report::build(&eval).map_err(|e| CliError::at(&a.results, e))?;
    let formats: Vec<ReportFormat> = a.format.iter().map(|&f| f.into()).collect();
    let written = emit_report(&report, &a.out, &formats).map_err(|e| CliError::Data(e.to_string()))?;
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}
