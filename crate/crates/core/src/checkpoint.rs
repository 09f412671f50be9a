//! Versioned text checkpoints of a scene, its statistics and the archive
//! of pruned primitives.
//!
//! ```text
//! semsplat-checkpoint 1
//! generation <u64>
//! gaussians <n>
//! px py lsx lsy rot r g b opacity_logit depth accum_score view_count
//! ...
//! pruned <m>
//! iteration px py lsx lsy rot r g b opacity_logit depth accum_score view_count
//! ...
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so save/load is exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scene::{GaussianPrimitive, SceneModel, SemanticStats};

const MAGIC: &str = "semsplat-checkpoint";
const VERSION: u32 = 1;

/// A primitive removed by a prune event, as it was at removal time.
#[derive(Clone, Debug, PartialEq)]
pub struct PrunedRecord {
    pub iteration: usize,
    pub gaussian: GaussianPrimitive,
    pub stats: SemanticStats,
}

#[derive(Clone, Debug, Default)]
pub struct Checkpoint {
    pub scene: SceneModel,
    pub pruned: Vec<PrunedRecord>,
}

fn write_row(out: &mut String, g: &GaussianPrimitive, s: &SemanticStats) {
    let fields = [
        g.position[0],
        g.position[1],
        g.log_scale[0],
        g.log_scale[1],
        g.rotation,
        g.color[0],
        g.color[1],
        g.color[2],
        g.opacity_logit,
        g.depth,
        s.accum_score,
    ];
    for (i, v) in fields.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "{v:?}").unwrap();
    }
    writeln!(out, " {}", s.view_count).unwrap();
}

fn parse_row(fields: &[&str], path: &Path, line: usize) -> Result<(GaussianPrimitive, SemanticStats)> {
    if fields.len() != 12 {
        return Err(Error::parse(path, line, format!("expected 12 fields, got {}", fields.len())));
    }
    let mut v = [0.0f64; 11];
    for (slot, f) in v.iter_mut().zip(fields) {
        *slot = f
            .parse()
            .map_err(|_| Error::parse(path, line, format!("`{f}` is not a number")))?;
    }
    let view_count = fields[11]
        .parse()
        .map_err(|_| Error::parse(path, line, format!("`{}` is not a count", fields[11])))?;
    let g = GaussianPrimitive {
        position: [v[0], v[1]],
        log_scale: [v[2], v[3]],
        rotation: v[4],
        color: [v[5], v[6], v[7]],
        opacity_logit: v[8],
        depth: v[9],
    };
    g.validate().map_err(|r| Error::parse(path, line, r))?;
    if !(v[10] >= 0.0 && v[10].is_finite()) {
        return Err(Error::parse(path, line, "accumulated score must be finite and non-negative"));
    }
    Ok((
        g,
        SemanticStats {
            accum_score: v[10],
            view_count,
        },
    ))
}

impl Checkpoint {
    pub fn new(scene: SceneModel) -> Self {
        Self { scene, pruned: Vec::new() }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{MAGIC} {VERSION}").unwrap();
        writeln!(out, "generation {}", self.scene.generation()).unwrap();
        writeln!(out, "gaussians {}", self.scene.len()).unwrap();
        for (g, s) in self.scene.gaussians().iter().zip(self.scene.stats()) {
            write_row(&mut out, g, s);
        }
        writeln!(out, "pruned {}", self.pruned.len()).unwrap();
        for r in &self.pruned {
            write!(out, "{} ", r.iteration).unwrap();
            write_row(&mut out, &r.gaussian, &r.stats);
        }
        out
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::parse(path, 0, format!("unexpected end of file, expected {what}")))
        };
        let (ln, header) = next("header")?;
        match header.split_whitespace().collect::<Vec<_>>()[..] {
            [MAGIC, v] if v == VERSION.to_string() => {}
            _ => return Err(Error::parse(path, ln, format!("not a version {VERSION} checkpoint"))),
        }
        let keyed = |line: (usize, &str), key: &str| -> Result<u64> {
            let (ln, l) = line;
            match l.split_whitespace().collect::<Vec<_>>()[..] {
                [k, v] if k == key => v.parse().map_err(|_| Error::parse(path, ln, format!("bad {key} value"))),
                _ => Err(Error::parse(path, ln, format!("expected `{key} <n>`"))),
            }
        };
        let generation = keyed(next("generation")?, "generation")?;
        let n = keyed(next("gaussians")?, "gaussians")? as usize;
        let mut gaussians = Vec::with_capacity(n);
        let mut stats = Vec::with_capacity(n);
        for _ in 0..n {
            let (ln, l) = next("primitive row")?;
            let fields: Vec<&str> = l.split_whitespace().collect();
            let (g, s) = parse_row(&fields, path, ln)?;
            gaussians.push(g);
            stats.push(s);
        }
        let m = keyed(next("pruned")?, "pruned")? as usize;
        let mut pruned = Vec::with_capacity(m);
        for _ in 0..m {
            let (ln, l) = next("pruned row")?;
            let fields: Vec<&str> = l.split_whitespace().collect();
            let Some((it, rest)) = fields.split_first() else {
                return Err(Error::parse(path, ln, "empty pruned row"));
            };
            let iteration = it
                .parse()
                .map_err(|_| Error::parse(path, ln, format!("`{it}` is not an iteration")))?;
            let (gaussian, stats) = parse_row(rest, path, ln)?;
            pruned.push(PrunedRecord {
                iteration,
                gaussian,
                stats,
            });
        }
        let scene = SceneModel::from_parts(gaussians, stats, generation)?;
        Ok(Self { scene, pruned })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }
}
