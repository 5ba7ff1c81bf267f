//! Synthetic data with known ground truth, for tests, demos and the bundled
//! fixture.

use std::path::Path;

use rand::RngExt;

use crate::dataset::{save_manifest, GeneratedImage, ManifestRecord};
use crate::linalg::Matrix;
use crate::reward::{EmbeddingSequence, TrainingPair};
use crate::rng::{pcg32, Pcg32};
use crate::tensor_io::{save_image, save_mask, save_ppm, save_tensor, BinaryMask, FormatError, RgbImage};

/// Standard normal draw (Box-Muller, one value per call).
pub fn normal(rng: &mut Pcg32) -> f64 {
    // (0, 1] keeps the log finite
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Parameters of the synthetic preference task: passing generations are
/// noisy copies of the original tokens, failing ones come from a shifted
/// distribution.
#[derive(Debug, Clone)]
pub struct RewardPairOptions {
    pub count: usize,
    pub tokens: usize,
    pub d: usize,
    /// Std-dev of the perturbation applied to copies of the original.
    pub noise: f64,
    /// Mean offset of the failing distribution.
    pub shift: f64,
}

impl Default for RewardPairOptions {
    fn default() -> Self {
        Self { count: 100, tokens: 3, d: 8, noise: 0.1, shift: 1.0 }
    }
}

pub fn random_tokens(rng: &mut Pcg32, t: usize, d: usize, mean: f64, std: f64) -> Matrix {
    Matrix::from_fn(t, d, |_, _| mean + std * normal(rng))
}

pub fn perturbed(rng: &mut Pcg32, base: &Matrix, std: f64) -> Matrix {
    Matrix::from_fn(base.rows(), base.cols(), |i, j| base.get(i, j) + std * normal(rng))
}

pub fn reward_pairs(opts: &RewardPairOptions, seed: u64) -> Vec<TrainingPair> {
    let mut rng = pcg32(seed);
    (0..opts.count)
        .map(|_| {
            let original = random_tokens(&mut rng, opts.tokens, opts.d, 0.0, 1.0);
            let good = perturbed(&mut rng, &original, opts.noise);
            let bad = random_tokens(&mut rng, opts.tokens, opts.d, opts.shift, 1.0);
            TrainingPair::new(
                EmbeddingSequence::new(original).expect("non-empty"),
                EmbeddingSequence::new(good).expect("non-empty"),
                EmbeddingSequence::new(bad).expect("non-empty"),
            )
            .expect("shared width")
        })
        .collect()
}

/// What the failing generation of a fixture record gets wrong.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureDefect {
    /// Products intact; only the background embedding is off.
    Background,
    /// The first product is painted over with background.
    ProductErased,
    /// The first product changes colour.
    ProductRecolored,
}

/// Known ground truth for one generated fixture image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureTruth {
    pub record: String,
    pub generated_index: usize,
    pub label: u8,
    /// Whether the products survive unchanged.
    pub consistent: bool,
    pub defect: Option<FixtureDefect>,
}

pub const FIXTURE_SIZE: usize = 24;
pub const FIXTURE_TOKENS: usize = 3;
pub const FIXTURE_D: usize = 8;

fn random_color(rng: &mut Pcg32) -> [u8; 3] {
    [rng.random_range(0..=255u8), rng.random_range(0..=255u8), rng.random_range(0..=255u8)]
}

/// Product rectangles for record `index`: one or two, never overlapping.
fn product_boxes(rng: &mut Pcg32, index: usize) -> Vec<[usize; 4]> {
    let n = 1 + index % 2;
    (0..n)
        .map(|k| {
            let x0 = 2 + k * 12 + rng.random_range(0..3usize);
            let y0 = 3 + rng.random_range(0..6usize);
            [x0, y0, x0 + 6 + rng.random_range(0..3usize), y0 + 8 + rng.random_range(0..5usize)]
        })
        .collect()
}

fn box_mask(b: [usize; 4]) -> BinaryMask {
    BinaryMask::from_fn(FIXTURE_SIZE, FIXTURE_SIZE, |x, y| x >= b[0] && x < b[2] && y >= b[1] && y < b[3])
        .expect("fixture dims")
}

fn paint(background: [u8; 3], products: &[([usize; 4], [u8; 3])]) -> RgbImage {
    let mut img = RgbImage::filled(FIXTURE_SIZE, FIXTURE_SIZE, background).expect("fixture dims");
    for &(b, color) in products {
        for y in b[1]..b[3] {
            for x in b[0]..b[2] {
                img.set_pixel(x, y, color);
            }
        }
    }
    img
}

/// Far from any colour in `c`, so a recolour clears any sane diff threshold.
fn complement(c: [u8; 3]) -> [u8; 3] {
    c.map(|v| if v < 128 { v + 127 } else { v - 127 })
}

/// Writes the 12-record evaluation fixture into `dir` and returns its
/// manifest records and per-image ground truth. Each record has two
/// passing generations (new background, products untouched, embedding a
/// small perturbation of the original) and one failing generation whose
/// defect cycles through [`FixtureDefect`]. The last record stores its
/// generated images as PNG. Output is a pure function of `seed`.
pub fn write_fixture(dir: &Path, seed: u64) -> std::io::Result<(Vec<ManifestRecord>, Vec<FixtureTruth>)> {
    let io = |e: FormatError| std::io::Error::other(e.to_string());
    let mut rng = pcg32(seed);
    let mut records = Vec::new();
    let mut truth = Vec::new();
    for index in 0..12 {
        let id = format!("rec{index:02}");
        let background = random_color(&mut rng);
        let products: Vec<([usize; 4], [u8; 3])> =
            product_boxes(&mut rng, index).into_iter().map(|b| (b, random_color(&mut rng))).collect();
        let original = random_tokens(&mut rng, FIXTURE_TOKENS, FIXTURE_D, 0.0, 1.0);

        let file = |name: String| (dir.join(&name), name);
        let (path, original_embedding) = file(format!("{id}.hft"));
        save_tensor(&path, &EmbeddingSequence::new(original.clone()).expect("non-empty").to_tensor()).map_err(io)?;
        let (path, original_image) = file(format!("{id}.ppm"));
        save_ppm(&path, &paint(background, &products)).map_err(io)?;
        let mut original_masks = Vec::new();
        for (k, (b, _)) in products.iter().enumerate() {
            let (path, name) = file(format!("{id}.mask{k}.pgm"));
            save_mask(&path, &box_mask(*b)).map_err(io)?;
            original_masks.push(name);
        }

        let defect =
            [FixtureDefect::Background, FixtureDefect::ProductErased, FixtureDefect::ProductRecolored][index % 3];
        let ext = if index == 11 { "png" } else { "ppm" };
        let mut generated = Vec::new();
        for g in 0..3 {
            let pass = g < 2;
            let new_background = random_color(&mut rng);
            let tokens = if pass {
                perturbed(&mut rng, &original, 0.1)
            } else {
                random_tokens(&mut rng, FIXTURE_TOKENS, FIXTURE_D, 1.0, 1.0)
            };
            let mut shown = products.clone();
            let mut kept: Vec<[usize; 4]> = products.iter().map(|p| p.0).collect();
            let applied = (!pass).then_some(defect);
            match applied {
                Some(FixtureDefect::ProductErased) => {
                    shown.remove(0);
                    kept.remove(0);
                }
                Some(FixtureDefect::ProductRecolored) => shown[0].1 = complement(shown[0].1),
                _ => {}
            }
            let stem = format!("{id}_g{g}");
            let (path, embedding) = file(format!("{stem}.hft"));
            save_tensor(&path, &EmbeddingSequence::new(tokens).expect("non-empty").to_tensor()).map_err(io)?;
            let (path, image) = file(format!("{stem}.{ext}"));
            save_image(&path, &paint(new_background, &shown)).map_err(io)?;
            let mut masks = Vec::new();
            for (k, b) in kept.iter().enumerate() {
                let (path, name) = file(format!("{stem}.mask{k}.pgm"));
                save_mask(&path, &box_mask(*b)).map_err(io)?;
                masks.push(name);
            }
            generated.push(GeneratedImage { embedding, image, masks, label: pass as u8 });
            truth.push(FixtureTruth {
                record: id.clone(),
                generated_index: g,
                label: pass as u8,
                consistent: !matches!(applied, Some(FixtureDefect::ProductErased | FixtureDefect::ProductRecolored)),
                defect: applied,
            });
        }
        records.push(ManifestRecord {
            id,
            original_embedding,
            original_image,
            original_masks,
            generated,
            cluster_id: None,
            augmented: false,
        });
    }
    let mut manifest = Vec::new();
    save_manifest(&records, &mut manifest)?;
    std::fs::write(dir.join(FIXTURE_MANIFEST), manifest)?;
    Ok((records, truth))
}

pub const FIXTURE_MANIFEST: &str = "manifest.jsonl";
/// Seed of the bundled fixture.
pub const FIXTURE_SEED: u64 = 12;
