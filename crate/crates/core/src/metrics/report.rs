//! Evaluation results in, `report.json` plus optional curve files out.
//! Output bytes depend only on the input values: fixed field order,
//! shortest round-trip float formatting, no timestamps.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    filter_counts, pb_rb_rg, plcc, pr_curve, roc_curve, srcc, CurvePoint, FilterCounts, FilterRates, LabeledScores,
    MetricsError, Quality, Result, RocCurve,
};
use crate::consistency::{ConsistencyConfig, Diagnostic};
use crate::reward::Fusion;

pub const REPORT_FILE: &str = "report.json";
pub const EVALUATION_FILE: &str = "evaluation.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Svg,
}

/// Gate settings echoed into every output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateConfig {
    pub theta_bg: f64,
    pub fusion: Fusion,
    pub consistency: ConsistencyConfig,
}

/// Verdict for one generated image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageVerdict {
    pub record: String,
    pub generated_index: usize,
    /// Human label, 1 = pass.
    pub label: u8,
    pub background_score: f64,
    pub background_pass: bool,
    pub consistent: bool,
    pub max_pixel_diff: Option<f64>,
    pub diagnostics: Vec<Diagnostic>,
    /// `background_pass && consistent`.
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub seed: u64,
    pub config: GateConfig,
    pub images: Vec<ImageVerdict>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateMetrics {
    pub counts: FilterCounts,
    pub rates: FilterRates,
}

impl GateMetrics {
    fn from_counts(counts: FilterCounts) -> Self {
        Self { counts, rates: pb_rb_rg(&counts) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetrics {
    pub n_images: usize,
    /// Background score against the 0/1 label; `None` when either side is
    /// constant or fewer than two images exist.
    pub plcc: Option<f64>,
    pub srcc: Option<f64>,
    pub background: GateMetrics,
    pub consistency: GateMetrics,
    pub combined: GateMetrics,
}

/// Background-score curves; a curve is `None` when only one label class
/// is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSet {
    pub roc_low: Option<RocCurve>,
    pub pr_low: Option<Vec<CurvePoint>>,
    pub roc_high: Option<RocCurve>,
    pub pr_high: Option<Vec<CurvePoint>>,
}

impl CurveSet {
    /// (file stem, axis labels, points) for every present curve.
    pub fn named(&self) -> Vec<(&'static str, [&'static str; 2], &[CurvePoint])> {
        let mut out = Vec::new();
        let roc = ["false positive rate", "true positive rate"];
        let pr = ["recall", "precision"];
        if let Some(c) = &self.roc_low {
            out.push(("roc_low", roc, c.points.as_slice()));
        }
        if let Some(c) = &self.pr_low {
            out.push(("pr_low", pr, c.as_slice()));
        }
        if let Some(c) = &self.roc_high {
            out.push(("roc_high", roc, c.points.as_slice()));
        }
        if let Some(c) = &self.pr_high {
            out.push(("pr_high", pr, c.as_slice()));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub config: GateConfig,
    pub metrics: ReportMetrics,
    pub curves: CurveSet,
    pub images: Vec<ImageVerdict>,
}

/// The full evaluation report: metrics, curves and per-image verdicts.
pub type EvaluationReport = Report;

impl Report {
    pub fn build(eval: &Evaluation) -> Result<Self> {
        let scores = LabeledScores::new(
            eval.images.iter().map(|v| v.background_score).collect(),
            eval.images.iter().map(|v| v.label == 1).collect(),
        )?;
        let labels: Vec<f64> = eval.images.iter().map(|v| v.label as f64).collect();
        let decisions = |kept: fn(&ImageVerdict) -> bool| {
            GateMetrics::from_counts(FilterCounts::from_decisions(eval.images.iter().map(|v| (kept(v), v.label == 1))))
        };
        let metrics = ReportMetrics {
            n_images: eval.images.len(),
            plcc: plcc(scores.scores(), &labels).ok(),
            srcc: srcc(scores.scores(), &labels).ok(),
            background: GateMetrics::from_counts(filter_counts(&scores, eval.config.theta_bg)),
            consistency: decisions(|v| v.consistent),
            combined: decisions(|v| v.pass),
        };
        let curves = CurveSet {
            roc_low: roc_curve(&scores, Quality::Low).ok(),
            pr_low: pr_curve(&scores, Quality::Low).ok(),
            roc_high: roc_curve(&scores, Quality::High).ok(),
            pr_high: pr_curve(&scores, Quality::High).ok(),
        };
        Ok(Self {
            format: "hfpc-report".into(),
            version: 1,
            seed: eval.seed,
            config: eval.config,
            metrics,
            curves,
            images: eval.images.clone(),
        })
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> MetricsError + '_ {
    move |source| MetricsError::Io { path: path.to_path_buf(), source }
}

/// Pretty JSON with a trailing newline.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json_bytes(value)?).map_err(io_err(path))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    Ok(serde_json::from_slice(&bytes)?)
}

/// Header `x,y`, then one row per point.
pub fn write_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("x,y\n");
    for p in points {
        let _ = writeln!(out, "{},{}", p.x, p.y);
    }
    out
}

/// A static line plot of a unit-square curve.
pub fn render_svg(title: &str, axes: [&str; 2], points: &[CurvePoint]) -> String {
    const SIZE: f64 = 320.0;
    const PAD: f64 = 48.0;
    let span = SIZE - 2.0 * PAD;
    let coords: Vec<String> = points
        .iter()
        .map(|p| format!("{:.2},{:.2}", PAD + p.x.clamp(0.0, 1.0) * span, SIZE - PAD - p.y.clamp(0.0, 1.0) * span))
        .collect();
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(s, r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#);
    let _ = writeln!(s, r#"<rect x="{PAD}" y="{PAD}" width="{span}" height="{span}" fill="none" stroke="black"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="28" text-anchor="middle" font-family="sans-serif" font-size="14">{title}</text>"#,
        SIZE / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        SIZE / 2.0,
        SIZE - 14.0,
        axes[0]
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{0}" transform="rotate(-90 14 {0})" text-anchor="middle" font-family="sans-serif" font-size="12">{1}</text>"#,
        SIZE / 2.0,
        axes[1]
    );
    let _ = writeln!(s, r##"<polyline fill="none" stroke="#1f5fa8" stroke-width="2" points="{}"/>"##, coords.join(" "));
    s.push_str("</svg>\n");
    s
}

/// Writes `report.json` and, per requested format, one CSV and/or SVG per
/// curve. Returns the written paths in write order. JSON is always
/// written.
pub fn emit_report(report: &Report, dir: &Path, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let json_path = dir.join(REPORT_FILE);
    write_json(&json_path, report)?;
    let mut written = vec![json_path];
    for (stem, axes, points) in report.curves.named() {
        if formats.contains(&ReportFormat::Csv) {
            let path = dir.join(format!("{stem}.csv"));
            std::fs::write(&path, write_csv(points)).map_err(io_err(&path))?;
            written.push(path);
        }
        if formats.contains(&ReportFormat::Svg) {
            let path = dir.join(format!("{stem}.svg"));
            std::fs::write(&path, render_svg(stem, axes, points)).map_err(io_err(&path))?;
            written.push(path);
        }
    }
    Ok(written)
}

pub fn load_report(path: &Path) -> Result<Report> {
    read_json(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn evaluation() -> Evaluation {
        let entries = [(0.2, 0, true), (0.4, 1, true), (0.6, 0, false), (0.9, 1, true), (0.1 + 0.2, 0, true)];
        let images = entries
            .iter()
            .enumerate()
            .map(|(i, &(score, label, consistent))| ImageVerdict {
                record: format!("r{}", i / 2),
                generated_index: i % 2,
                label,
                background_score: score,
                background_pass: score >= 0.5,
                consistent,
                max_pixel_diff: consistent.then_some(0.01),
                diagnostics: vec![],
                pass: score >= 0.5 && consistent,
            })
            .collect();
        Evaluation {
            seed: 7,
            config: GateConfig { theta_bg: 0.5, fusion: Fusion::Attention, consistency: ConsistencyConfig::default() },
            images,
        }
    }

    #[test]
    fn metrics_are_tallied_per_gate() {
        let r = Report::build(&evaluation()).unwrap();
        assert_eq!(r.metrics.background.counts.n_filtered, 3);
        assert_eq!(r.metrics.consistency.counts.n_filtered, 1);
        assert_eq!(r.metrics.combined.counts.n_filtered, 4);
        assert_eq!(r.metrics.combined.counts.n_kept_high, 1);
        assert!(r.metrics.plcc.is_some() && r.curves.roc_low.is_some());
    }

    #[test]
    fn single_class_curves_and_constant_scores_are_absent() {
        let mut e = evaluation();
        e.images.iter_mut().for_each(|v| v.label = 1);
        let r = Report::build(&e).unwrap();
        assert_eq!((r.metrics.plcc, r.metrics.srcc), (None, None));
        assert!(r.curves.named().is_empty());
        assert_eq!(r.metrics.background.rates.rb.value(), None);
    }

    #[test]
    fn emit_is_deterministic_and_roundtrips() {
        let r = Report::build(&evaluation()).unwrap();
        let all = [ReportFormat::Json, ReportFormat::Csv, ReportFormat::Svg];
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let fa = emit_report(&r, a.path(), &all).unwrap();
        let fb = emit_report(&r, b.path(), &all).unwrap();
        assert_eq!(fa.len(), 1 + 4 * 2);
        for (x, y) in fa.iter().zip(&fb) {
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), "{x:?}");
        }
        assert_eq!(load_report(&fa[0]).unwrap(), r);
    }

    #[test]
    fn csv_rows_match_points() {
        let r = Report::build(&evaluation()).unwrap();
        let roc = r.curves.roc_low.as_ref().unwrap();
        let csv = write_csv(&roc.points);
        assert_eq!(csv.lines().count(), roc.points.len() + 1);
        assert_eq!(csv.lines().next(), Some("x,y"));
        assert!(render_svg("t", ["a", "b"], &roc.points).starts_with("<svg"));
    }

    #[test]
    fn json_only_writes_one_file() {
        let r = Report::build(&evaluation()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(emit_report(&r, dir.path(), &[ReportFormat::Json]).unwrap(), vec![dir.path().join(REPORT_FILE)]);
    }
}
