//! Per-view distractor and static scores.
//!
//! Every scorer produces similarities in [-1, 1], takes the maximum over a
//! prompt (or template) set and maps it to [0, 1] with `(s + 1) / 2`, so a
//! score above 0.5 reads as "more distractor-like than neutral".

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

/// Scores at or below this carry no distractor evidence.
pub const NEUTRAL_SCORE: f64 = 0.5;

pub const EMBEDDING_DIM: usize = 512;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptSet {
    distractor_prompts: Vec<String>,
    static_prompts: Vec<String>,
}

impl PromptSet {
    pub fn new(distractor_prompts: Vec<String>, static_prompts: Vec<String>) -> Result<Self> {
        for (name, list) in [("distractor", &distractor_prompts), ("static", &static_prompts)] {
            if list.is_empty() {
                return Err(Error::InvalidArgument(format!("{name} prompt list is empty")));
            }
            let mut seen = HashSet::new();
            if let Some(dup) = list.iter().find(|p| !seen.insert(p.as_str())) {
                return Err(Error::InvalidArgument(format!("duplicate {name} prompt `{dup}`")));
            }
        }
        Ok(Self {
            distractor_prompts,
            static_prompts,
        })
    }

    /// Prompts for people-and-props distractors against built structure.
    pub fn default_robust() -> Self {
        let d = [
            "a photo of a person",
            "a photo of people",
            "a photo of pedestrians",
            "a photo of hands",
            "a photo of a balloon",
        ];
        let s = ["a photo of a building", "a photo of a wall", "a photo of furniture"];
        Self::new(
            d.iter().map(|p| p.to_string()).collect(),
            s.iter().map(|p| p.to_string()).collect(),
        )
        .expect("built-in prompts are valid")
    }

    pub fn distractor_prompts(&self) -> &[String] {
        &self.distractor_prompts
    }

    pub fn static_prompts(&self) -> &[String] {
        &self.static_prompts
    }
}

/// A unit-norm feature vector.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    /// L2-normalizes `values`. Zero or non-finite input is rejected.
    pub fn normalized(values: Vec<f64>) -> Result<Self> {
        let norm = l2(&values)?;
        Ok(Self(values.into_iter().map(|v| v / norm).collect()))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

fn l2(v: &[f64]) -> Result<f64> {
    if !v.iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidArgument("embedding has non-finite entries".into()));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::InvalidArgument("zero-norm embedding".into()));
    }
    Ok(norm)
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            what: "embedding",
            got: b.len(),
            expected: a.len(),
        });
    }
    let (na, nb) = (l2(a)?, l2(b)?);
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Maps a similarity in [-1, 1] onto [0, 1].
pub fn normalize_similarity(s: f64) -> f64 {
    ((s + 1.0) / 2.0).clamp(0.0, 1.0)
}

/// Max over similarities, normalized. Shared by every scorer.
pub fn score_from_similarities(similarities: &[f64]) -> Result<f64> {
    let max = similarities
        .iter()
        .copied()
        .reduce(f64::max)
        .ok_or_else(|| Error::InvalidArgument("empty prompt list".into()))?;
    Ok(normalize_similarity(max))
}

pub fn distractor_score(image_embedding: &EmbeddingVector, prompt_embeddings: &[EmbeddingVector]) -> Result<f64> {
    let sims = prompt_embeddings
        .iter()
        .map(|p| cosine_similarity(image_embedding.values(), p.values()))
        .collect::<Result<Vec<_>>>()?;
    score_from_similarities(&sims)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewScore {
    pub distractor: f64,
    pub static_score: f64,
}

impl ViewScore {
    pub fn new(distractor: f64, static_score: f64) -> Result<Self> {
        for v in [distractor, static_score] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("score {v} outside [0,1]")));
            }
        }
        Ok(Self {
            distractor,
            static_score,
        })
    }
}

/// Source of per-view scores for the trainer.
pub trait ViewScorer: Send + Sync {
    /// Scores the current render of view `view_id`.
    fn score(&self, view_id: &str, rendered: &Image) -> Result<ViewScore>;

    /// Fails early when a view cannot be scored (file-backed scorers).
    fn check_view(&self, _view_id: &str) -> Result<()> {
        Ok(())
    }
}

/// A hue band standing in for one prompt.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColorSignature {
    pub name: String,
    /// Degrees in [0, 360).
    pub hue: f64,
    pub half_width: f64,
}

impl ColorSignature {
    pub fn new(name: &str, hue: f64, half_width: f64) -> Self {
        Self {
            name: name.to_string(),
            hue,
            half_width,
        }
    }

    fn contains(&self, hue: f64) -> bool {
        let d = (hue - self.hue).rem_euclid(360.0);
        d.min(360.0 - d) <= self.half_width
    }
}

/// Deterministic, inspectable stand-in for a vision-language scorer.
///
/// The image is summarized as a chroma-weighted hue histogram. For each
/// template the matched fraction `m = mass_in_band / (total_mass + prior)`
/// is turned into an affinity `r = m / (m + half_saturation)`, so `r = 0.5`
/// exactly when `m` equals the half-saturation fraction, and into a
/// similarity `2r - 1`. Images without chromatic mass get
/// `NEUTRAL_SCORE - empty_margin` for both classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleScorer {
    pub distractor_templates: Vec<ColorSignature>,
    pub static_templates: Vec<ColorSignature>,
    pub hue_bins: usize,
    /// Pixels with chroma below this are treated as achromatic.
    pub chroma_floor: f64,
    /// Pseudo-mass, in chroma-weighted pixels, added to the denominator.
    pub mass_prior: f64,
    pub half_saturation: f64,
    pub empty_margin: f64,
}

impl Default for OracleScorer {
    fn default() -> Self {
        Self {
            distractor_templates: vec![ColorSignature::new("magenta", 300.0, 28.0)],
            static_templates: vec![
                ColorSignature::new("orange", 30.0, 25.0),
                ColorSignature::new("green", 115.0, 30.0),
                ColorSignature::new("cyan", 180.0, 20.0),
                ColorSignature::new("blue", 220.0, 25.0),
            ],
            hue_bins: 72,
            chroma_floor: 0.04,
            mass_prior: 8.0,
            half_saturation: 0.04,
            empty_margin: 0.01,
        }
    }
}

/// Chroma-weighted hue histogram.
#[derive(Clone, Debug, PartialEq)]
pub struct HueHistogram {
    pub bins: Vec<f64>,
    pub mass: f64,
}

/// Hue in degrees and chroma (max - min) of an RGB triple.
pub fn hue_chroma(rgb: [f64; 3]) -> (f64, f64) {
    let [r, g, b] = rgb;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let chroma = max - min;
    if chroma <= 0.0 {
        return (0.0, 0.0);
    }
    let h = if max == r {
        ((g - b) / chroma).rem_euclid(6.0)
    } else if max == g {
        (b - r) / chroma + 2.0
    } else {
        (r - g) / chroma + 4.0
    };
    (60.0 * h, chroma)
}

impl OracleScorer {
    pub fn histogram(&self, image: &Image) -> HueHistogram {
        let mut bins = vec![0.0; self.hue_bins];
        let mut mass = 0.0;
        for px in image.data.chunks_exact(3) {
            let (hue, chroma) = hue_chroma([px[0], px[1], px[2]]);
            if chroma < self.chroma_floor {
                continue;
            }
            let b = ((hue / 360.0 * self.hue_bins as f64) as usize).min(self.hue_bins - 1);
            bins[b] += chroma;
            mass += chroma;
        }
        HueHistogram { bins, mass }
    }

    fn bin_center(&self, b: usize) -> f64 {
        (b as f64 + 0.5) * 360.0 / self.hue_bins as f64
    }

    /// Similarity in [-1, 1] between a histogram and one template.
    pub fn similarity(&self, hist: &HueHistogram, template: &ColorSignature) -> f64 {
        let in_band: f64 = hist
            .bins
            .iter()
            .enumerate()
            .filter(|(b, _)| template.contains(self.bin_center(*b)))
            .map(|(_, m)| m)
            .sum();
        let m = in_band / (hist.mass + self.mass_prior);
        let r = m / (m + self.half_saturation);
        2.0 * r - 1.0
    }

    pub fn score_image(&self, image: &Image) -> ViewScore {
        let hist = self.histogram(image);
        if hist.mass <= 0.0 {
            let floor = NEUTRAL_SCORE - self.empty_margin;
            return ViewScore {
                distractor: floor,
                static_score: floor,
            };
        }
        let class = |templates: &[ColorSignature]| {
            let sims: Vec<f64> = templates.iter().map(|t| self.similarity(&hist, t)).collect();
            score_from_similarities(&sims).unwrap_or(NEUTRAL_SCORE - self.empty_margin)
        };
        ViewScore {
            distractor: class(&self.distractor_templates),
            static_score: class(&self.static_templates),
        }
    }
}

impl ViewScorer for OracleScorer {
    fn score(&self, _view_id: &str, rendered: &Image) -> Result<ViewScore> {
        Ok(self.score_image(rendered))
    }
}

/// Precomputed scores keyed by view id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScoreFile {
    scores: HashMap<String, ViewScore>,
    order: Vec<String>,
}

impl ScoreFile {
    pub fn from_records(records: impl IntoIterator<Item = (String, ViewScore)>) -> Result<Self> {
        let mut file = Self::default();
        for (id, score) in records {
            file.insert(id, score)?;
        }
        Ok(file)
    }

    fn insert(&mut self, id: String, score: ViewScore) -> Result<()> {
        if self.scores.contains_key(&id) {
            return Err(Error::InvalidArgument(format!("duplicate view id `{id}`")));
        }
        self.order.push(id.clone());
        self.scores.insert(id, score);
        Ok(())
    }

    /// One record per line: view id, distractor score, static score,
    /// whitespace separated. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut file = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lineno = lineno + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [id, d, s] = fields[..] else {
                return Err(Error::parse(path, lineno, format!("expected 3 fields, got {}", fields.len())));
            };
            let parse = |v: &str| -> Result<f64> {
                let x: f64 = v
                    .parse()
                    .map_err(|_| Error::parse(path, lineno, format!("`{v}` is not a number")))?;
                if !(0.0..=1.0).contains(&x) {
                    return Err(Error::parse(path, lineno, format!("view `{id}`: score {x} outside [0,1]")));
                }
                Ok(x)
            };
            let score = ViewScore {
                distractor: parse(d)?,
                static_score: parse(s)?,
            };
            file.insert(id.to_string(), score)
                .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn get(&self, view_id: &str) -> Result<ViewScore> {
        self.scores
            .get(view_id)
            .copied()
            .ok_or_else(|| Error::UnknownView(view_id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn view_ids(&self) -> &[String] {
        &self.order
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for id in &self.order {
            let s = self.scores[id];
            writeln!(out, "{id}\t{:.6}\t{:.6}", s.distractor, s.static_score).unwrap();
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

impl ViewScorer for ScoreFile {
    fn score(&self, view_id: &str, _rendered: &Image) -> Result<ViewScore> {
        self.get(view_id)
    }

    fn check_view(&self, view_id: &str) -> Result<()> {
        self.get(view_id).map(|_| ())
    }
}

/// `oracle` selects the live synthetic scorer; anything else is read as
/// the path of a score file.
pub fn resolve(name: &str) -> Result<Box<dyn ViewScorer>> {
    if name == "oracle" {
        return Ok(Box::new(OracleScorer::default()));
    }
    Ok(Box::new(ScoreFile::load(Path::new(name))?))
}
