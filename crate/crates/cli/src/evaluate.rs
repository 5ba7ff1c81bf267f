//! The batch gate. Both modules run on every generated image and the
//! verdict is their conjunction; neither result is skipped when the other
//! already fails, so the output always carries both diagnoses.

use std::path::Path;
use std::time::{Duration, Instant};

use hfpc_core::consistency::assess_consistency;
use hfpc_core::dataset::ManifestRecord;
use hfpc_core::metrics::{write_json, Evaluation, GateConfig, ImageVerdict, EVALUATION_FILE};
use hfpc_core::reward::{check_threshold, load_bundle, score_pair, EmbeddingSequence};
use hfpc_core::tensor_io::{load_image, load_mask, load_tensor};
use hfpc_core::{ConsistencyConfig, Fusion, MaskSet, RewardHeadParams};
use rayon::prelude::*;

use crate::args::EvaluateArgs;
use crate::commands::{base_dir, read_manifest};
use crate::{CliError, Result};

#[derive(Default)]
struct Timing {
    background: Duration,
    consistency: Duration,
}

struct Gate<'a> {
    params: &'a RewardHeadParams,
    fusion: Fusion,
    theta: f64,
    consistency: ConsistencyConfig,
    base: &'a Path,
}

impl Gate<'_> {
    fn err(&self, record: &ManifestRecord, file: &str, e: impl std::fmt::Display) -> CliError {
        CliError::Data(format!("record {}: {}: {e}", record.id, self.base.join(file).display()))
    }

    fn embedding(&self, r: &ManifestRecord, file: &str) -> Result<EmbeddingSequence> {
        let t = load_tensor(&self.base.join(file)).map_err(|e| self.err(r, file, e))?;
        EmbeddingSequence::from_tensor(&t).map_err(|e| self.err(r, file, e))
    }

    fn masks(&self, r: &ManifestRecord, files: &[String]) -> Result<MaskSet> {
        let masks = files
            .iter()
            .map(|f| load_mask(&self.base.join(f)).map_err(|e| self.err(r, f, e)))
            .collect::<Result<Vec<_>>>()?;
        MaskSet::new(masks).map_err(|e| CliError::Data(format!("record {}: masks {}: {e}", r.id, files.join(","))))
    }

    fn record(&self, r: &ManifestRecord) -> Result<(Vec<ImageVerdict>, Timing)> {
        let ori_emb = self.embedding(r, &r.original_embedding)?;
        let ori_img = load_image(&self.base.join(&r.original_image)).map_err(|e| self.err(r, &r.original_image, e))?;
        let ori_masks = self.masks(r, &r.original_masks)?;
        let mut timing = Timing::default();
        let mut out = Vec::with_capacity(r.generated.len());
        for (index, g) in r.generated.iter().enumerate() {
            let gen_emb = self.embedding(r, &g.embedding)?;
            let gen_img = load_image(&self.base.join(&g.image)).map_err(|e| self.err(r, &g.image, e))?;
            let gen_masks = self.masks(r, &g.masks)?;

            let start = Instant::now();
            let score =
                score_pair(self.params, &ori_emb, &gen_emb, self.fusion).map_err(|e| self.err(r, &g.embedding, e))?;
            timing.background += start.elapsed();

            let start = Instant::now();
            let check = assess_consistency(&ori_img, &gen_img, &ori_masks, &gen_masks, &self.consistency)
                .map_err(|e| self.err(r, &g.image, e))?;
            timing.consistency += start.elapsed();

            let background_pass = score >= self.theta;
            out.push(ImageVerdict {
                record: r.id.clone(),
                generated_index: index,
                label: g.label,
                background_score: score,
                background_pass,
                consistent: check.consistent,
                max_pixel_diff: check.max_pixel_diff,
                diagnostics: check.diagnostics,
                pass: background_pass && check.consistent,
            });
        }
        Ok((out, timing))
    }
}

pub(crate) fn run(a: EvaluateArgs) -> Result<()> {
    let records = read_manifest(&a.manifest)?;
    let (params, config) = load_bundle(&a.params).map_err(|e| CliError::Data(e.to_string()))?;
    let theta = a.theta_bg.unwrap_or(config.pass_threshold);
    check_threshold(theta).map_err(|e| CliError::Usage(e.to_string()))?;
    let consistency = a.flags.config();
    consistency.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let base = base_dir(&a.manifest);
    let gate = Gate { params: &params, fusion: config.fusion, theta, consistency, base: &base };

    let results: Vec<Result<(Vec<ImageVerdict>, Timing)>> = records.par_iter().map(|r| gate.record(r)).collect();
    let mut images = Vec::new();
    let mut timing = Timing::default();
    for res in results {
        let (verdicts, t) = res?;
        images.extend(verdicts);
        timing.background += t.background;
        timing.consistency += t.consistency;
    }

    let eval = Evaluation {
        seed: a.seed.seed,
        config: GateConfig { theta_bg: theta, fusion: config.fusion, consistency },
        images,
    };
    std::fs::create_dir_all(&a.out).map_err(|e| CliError::at(&a.out, e))?;
    let path = a.out.join(EVALUATION_FILE);
    write_json(&path, &eval).map_err(|e| CliError::at(&path, e))?;

    let passed = eval.images.iter().filter(|v| v.pass).count();
    println!("{}: {passed} of {} generated images pass", path.display(), eval.images.len());
    let n = eval.images.len().max(1) as f64;
    eprintln!(
        "timing per image: background {:.3} ms, consistency {:.3} ms",
        timing.background.as_secs_f64() * 1e3 / n,
        timing.consistency.as_secs_f64() * 1e3 / n
    );
    Ok(())
}
