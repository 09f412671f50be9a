//! Synthetic multi-view benchmarks with controllable transient
//! contamination, and the manifest format that describes them.
//!
//! A generated dataset directory holds:
//!
//! * `manifest.jsonl`: one `world` record followed by one `view` record per view
//! * `images/<view>.ppm`, `masks/<view>.pgm` for contaminated train views
//! * `points.txt`: sparse static points used to initialize training
//! * `scene_gt.ckpt`: the static scene the clean images were rendered from

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::camera::CameraPose;
use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::image::{Image, Mask};
use crate::metrics::MaskedView;
use crate::raster::{render_gaussians, RenderSettings};
use crate::scene::{GaussianPrimitive, SceneModel};
use crate::scorer::hue_chroma;

pub const MANIFEST_FILE: &str = "manifest.jsonl";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorParams {
    pub width: usize,
    pub height: usize,
    pub train_views: usize,
    pub test_views: usize,
    /// Fraction of train views that receive a distractor sprite.
    pub contamination: f64,
    pub sprites_per_view: usize,
    /// Sprite ellipse radii range in pixels.
    pub sprite_radius: [f64; 2],
    /// The world is the square `[-e, e]^2`.
    pub world_half_extent: f64,
    /// Pixels per world unit.
    pub zoom: [f64; 2],
    pub max_camera_rotation: f64,
    /// Standard deviation of camera centers around the world origin, in
    /// world units; captures orbit the central objects.
    pub camera_spread: f64,
    /// Sprite placement counts other views whose frame, grown by this many
    /// pixels, contains the sprite center.
    pub covisibility_margin: f64,
    pub objects: usize,
    /// Object centers lie within this fraction of the world half extent.
    pub object_region: f64,
    pub gaussians_per_object: [usize; 2],
    pub object_spread: f64,
    pub gaussian_scale: [f64; 2],
    pub init_points_per_gaussian: usize,
    /// Uniform background seed points, kept where at least
    /// `seed_min_views` train views observe them.
    pub background_points: usize,
    pub seed_min_views: usize,
    /// Give the static palette a hue next to the distractor's.
    pub hard_mode: bool,
    pub background: [f64; 3],
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            train_views: 40,
            test_views: 8,
            contamination: 0.25,
            sprites_per_view: 1,
            sprite_radius: [5.0, 8.0],
            world_half_extent: 4.0,
            zoom: [28.0, 34.0],
            max_camera_rotation: 0.3,
            camera_spread: 1.2,
            covisibility_margin: 10.0,
            objects: 9,
            object_region: 0.35,
            gaussians_per_object: [3, 6],
            object_spread: 0.25,
            gaussian_scale: [0.07, 0.2],
            init_points_per_gaussian: 2,
            background_points: 400,
            seed_min_views: 1,
            hard_mode: false,
            background: [0.0; 3],
        }
    }
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(0.0..=1.0).contains(&self.contamination) {
            return bad("contamination must lie in [0, 1]");
        }
        if self.train_views == 0 {
            return bad("at least one train view is required");
        }
        if self.width == 0 || self.height == 0 {
            return bad("image size must be at least 1x1");
        }
        if self.sprite_radius[0] <= 0.0 || self.sprite_radius[1] < self.sprite_radius[0] {
            return bad("sprite radius range must be positive and ordered");
        }
        if self.zoom[0] <= 0.0 || self.zoom[1] < self.zoom[0] {
            return bad("zoom range must be positive and ordered");
        }
        if !(self.object_region > 0.0 && self.object_region <= 1.0) {
            return bad("object region must lie in (0, 1]");
        }
        if self.gaussians_per_object[0] == 0 || self.gaussians_per_object[1] < self.gaussians_per_object[0] {
            return bad("gaussians per object range must be positive and ordered");
        }
        Ok(())
    }

    pub fn contaminated_count(&self) -> usize {
        ((self.contamination * self.train_views as f64) - 1e-9).ceil().max(0.0) as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldInfo {
    pub half_extent: f64,
    pub background: [f64; 3],
    pub seed: u64,
    pub generator: GeneratorParams,
    pub init_points: Option<String>,
    pub ground_truth: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewRecord {
    pub view_id: String,
    pub camera: CameraPose,
    pub image: String,
    pub has_transient: bool,
    pub transient_mask: Option<String>,
    pub split: Split,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum Record {
    World(WorldInfo),
    View(ViewRecord),
}

/// A sparse static point with color, the initialization seed for training.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitPoint {
    pub position: [f64; 2],
    pub color: [f64; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub world: WorldInfo,
    pub views: Vec<ViewRecord>,
}

impl DatasetManifest {
    pub fn train_views(&self) -> impl Iterator<Item = &ViewRecord> {
        self.views.iter().filter(|v| v.split == Split::Train)
    }

    pub fn test_views(&self) -> impl Iterator<Item = &ViewRecord> {
        self.views.iter().filter(|v| v.split == Split::Test)
    }

    pub fn view(&self, id: &str) -> Option<&ViewRecord> {
        self.views.iter().find(|v| v.view_id == id)
    }

    pub fn path_of(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn load_image(&self, view: &ViewRecord) -> Result<Image> {
        Image::read_ppm(&self.path_of(&view.image))
    }

    pub fn load_mask(&self, view: &ViewRecord) -> Result<Option<Mask>> {
        view.transient_mask
            .as_ref()
            .map(|m| Mask::read_pgm(&self.path_of(m)))
            .transpose()
    }

    /// Cameras and masks of every contaminated train view.
    pub fn masked_views(&self) -> Result<Vec<MaskedView>> {
        let mut out = Vec::new();
        for v in self.train_views().filter(|v| v.has_transient) {
            let mask = self
                .load_mask(v)?
                .ok_or_else(|| Error::Dataset(format!("view `{}` is contaminated but has no mask", v.view_id)))?;
            out.push(MaskedView { camera: v.camera, mask });
        }
        Ok(out)
    }

    pub fn load_init_points(&self) -> Result<Vec<InitPoint>> {
        let rel = self
            .world
            .init_points
            .as_ref()
            .ok_or_else(|| Error::Dataset("manifest names no init point file".into()))?;
        read_points(&self.path_of(rel))
    }

    pub fn load_ground_truth(&self) -> Result<Option<SceneModel>> {
        self.world
            .ground_truth
            .as_ref()
            .map(|rel| Checkpoint::load(&self.path_of(rel)).map(|c| c.scene))
            .transpose()
    }

    pub fn to_text(&self) -> String {
        let mut out = serde_json::to_string(&Record::World(self.world.clone())).unwrap();
        out.push('\n');
        for v in &self.views {
            out.push_str(&serde_json::to_string(&Record::View(v.clone())).unwrap());
            out.push('\n');
        }
        out
    }

    pub fn save(&self) -> Result<()> {
        let path = self.root.join(MANIFEST_FILE);
        fs::write(&path, self.to_text()).map_err(|e| Error::io(&path, e))
    }
}

/// Loads and validates a dataset directory (or a manifest path inside it).
pub fn load_dataset(path: &Path) -> Result<DatasetManifest> {
    let (root, file) = if path.is_dir() {
        (path.to_path_buf(), path.join(MANIFEST_FILE))
    } else {
        (path.parent().unwrap_or(Path::new(".")).to_path_buf(), path.to_path_buf())
    };
    let text = fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
    let mut world = None;
    let mut views = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: Record =
            serde_json::from_str(line).map_err(|e| Error::parse(&file, i + 1, e.to_string()))?;
        match record {
            Record::World(w) if world.is_none() => world = Some(w),
            Record::World(_) => return Err(Error::parse(&file, i + 1, "second world record")),
            Record::View(v) => views.push(v),
        }
    }
    let world = world.ok_or_else(|| Error::parse(&file, 1, "missing world record"))?;
    let manifest = DatasetManifest { root, world, views };
    validate(&manifest)?;
    Ok(manifest)
}

fn validate(m: &DatasetManifest) -> Result<()> {
    if m.views.is_empty() {
        return Err(Error::Dataset("manifest lists no views".into()));
    }
    let mut ids = HashSet::new();
    for v in &m.views {
        let fail = |why: String| Err(Error::Dataset(format!("view `{}`: {why}", v.view_id)));
        if !ids.insert(v.view_id.as_str()) {
            return fail("duplicate view id".into());
        }
        if v.split == Split::Test && v.has_transient {
            return fail("test views must be transient-free".into());
        }
        v.camera.validate()?;
        if !m.path_of(&v.image).is_file() {
            return fail(format!("image `{}` does not exist", v.image));
        }
        match (&v.transient_mask, v.has_transient) {
            (Some(mask), _) if !m.path_of(mask).is_file() => return fail(format!("mask `{mask}` does not exist")),
            (None, true) => return fail("contaminated view without a mask".into()),
            _ => {}
        }
    }
    for rel in m.world.init_points.iter().chain(&m.world.ground_truth) {
        if !m.path_of(rel).is_file() {
            return Err(Error::Dataset(format!("world file `{rel}` does not exist")));
        }
    }
    Ok(())
}

pub fn read_points(path: &Path) -> Result<Vec<InitPoint>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: Vec<f64> = line
            .split_whitespace()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(path, i + 1, "malformed number"))?;
        let [x, y, r, g, b] = v[..] else {
            return Err(Error::parse(path, i + 1, "expected `x y r g b`"));
        };
        out.push(InitPoint {
            position: [x, y],
            color: [r, g, b],
        });
    }
    Ok(out)
}

fn write_points(path: &Path, points: &[InitPoint]) -> Result<()> {
    let mut out = String::from("# x y r g b\n");
    for p in points {
        out.push_str(&format!(
            "{:?} {:?} {:?} {:?} {:?}\n",
            p.position[0], p.position[1], p.color[0], p.color[1], p.color[2]
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// HSV to RGB, hue in degrees.
pub fn hsv(h: f64, s: f64, v: f64) -> [f64; 3] {
    let c = v * s;
    let hp = h.rem_euclid(360.0) / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r + m, g + m, b + m]
}

pub const DISTRACTOR_HUE: f64 = 300.0;

fn static_palette(hard_mode: bool) -> Vec<f64> {
    let mut hues = vec![30.0, 115.0, 180.0, 220.0];
    if hard_mode {
        hues.push(322.0);
    }
    hues
}

fn ground_truth_scene(p: &GeneratorParams, rng: &mut ChaCha8Rng) -> Vec<GaussianPrimitive> {
    let palette = static_palette(p.hard_mode);
    let e = p.world_half_extent;
    let mut out = Vec::new();
    for _ in 0..p.objects {
        let r = p.object_region * e;
        let center = [rng.gen_range(-r..=r), rng.gen_range(-r..=r)];
        let hue = palette[rng.gen_range(0..palette.len())] + rng.gen_range(-6.0..6.0);
        let (sat, val) = (rng.gen_range(0.6..0.9), rng.gen_range(0.55..0.95));
        let count = rng.gen_range(p.gaussians_per_object[0]..=p.gaussians_per_object[1]);
        for _ in 0..count {
            let offset = [
                rng.gen_range(-p.object_spread..p.object_spread),
                rng.gen_range(-p.object_spread..p.object_spread),
            ];
            let scale = [
                rng.gen_range(p.gaussian_scale[0]..p.gaussian_scale[1]),
                rng.gen_range(p.gaussian_scale[0]..p.gaussian_scale[1]),
            ];
            let color = hsv(hue + rng.gen_range(-4.0..4.0), sat, val * rng.gen_range(0.9..1.0));
            let g = GaussianPrimitive::new(
                [center[0] + offset[0], center[1] + offset[1]],
                scale,
                rng.gen_range(0.0..PI),
                color,
                rng.gen_range(0.85..0.97),
            )
            .with_depth(rng.gen::<f64>());
            out.push(g);
        }
    }
    out
}

fn sample_camera(p: &GeneratorParams, rng: &mut ChaCha8Rng) -> CameraPose {
    let zoom = rng.gen_range(p.zoom[0]..=p.zoom[1]);
    let half_window = 0.5 * p.width.min(p.height) as f64 / zoom;
    // frames reach the world boundary, so the border is seen by few views
    let reach = (p.world_half_extent - half_window).max(0.0);
    CameraPose {
        translation: [
            (rng.sample::<f64, _>(StandardNormal) * p.camera_spread).clamp(-reach, reach),
            (rng.sample::<f64, _>(StandardNormal) * p.camera_spread).clamp(-reach, reach),
        ],
        rotation: rng.gen_range(-p.max_camera_rotation..=p.max_camera_rotation),
        zoom,
        width: p.width,
        height: p.height,
    }
}

fn in_frame(camera: &CameraPose, world: [f64; 2], margin: f64) -> bool {
    let [x, y] = camera.world_to_pixel(world);
    x >= -margin && y >= -margin && x < camera.width as f64 + margin && y < camera.height as f64 + margin
}

fn init_points(gt: &[GaussianPrimitive], per: usize, rng: &mut ChaCha8Rng) -> Vec<InitPoint> {
    let mut out = Vec::new();
    for g in gt {
        let s = g.scale();
        let (sin, cos) = g.rotation.sin_cos();
        for _ in 0..per {
            let u = rng.gen_range(-1.0..1.0) * s[0];
            let v = rng.gen_range(-1.0..1.0) * s[1];
            let color = g.color.map(|c| (c + rng.gen_range(-0.05..0.05)).clamp(0.0, 1.0));
            out.push(InitPoint {
                position: [g.position[0] + cos * u - sin * v, g.position[1] + sin * u + cos * v],
                color,
            });
        }
    }
    out
}

/// Uniform dark seeds where enough train views could have triangulated
/// them, colored from the clean render of the first such view.
fn background_seeds(
    p: &GeneratorParams,
    gt: &[GaussianPrimitive],
    cameras: &[CameraPose],
    settings: &RenderSettings,
    rng: &mut ChaCha8Rng,
) -> Vec<InitPoint> {
    let e = p.world_half_extent;
    let mut out = Vec::new();
    for _ in 0..p.background_points {
        let q = [rng.gen_range(-e..=e), rng.gen_range(-e..=e)];
        let seen: Vec<&CameraPose> = cameras.iter().filter(|c| in_frame(c, q, 0.0)).collect();
        if seen.len() < p.seed_min_views.max(1) {
            continue;
        }
        let cam = seen[0];
        let one = CameraPose { width: 1, height: 1, translation: q, ..*cam };
        let (px, _) = render_gaussians(gt, &one, settings);
        out.push(InitPoint {
            position: q,
            color: px.pixel(0, 0),
        });
    }
    out
}

/// Pixels not visibly covered by static content.
fn is_background(px: [f64; 3], bg: [f64; 3]) -> bool {
    px.iter().zip(bg).all(|(p, b)| (p - b).abs() < 0.06)
}

struct Sprite {
    center: [f64; 2],
    radii: [f64; 2],
    angle: f64,
    color: [f64; 3],
}

impl Sprite {
    fn covers(&self, x: usize, y: usize) -> bool {
        let dx = x as f64 + 0.5 - self.center[0];
        let dy = y as f64 + 0.5 - self.center[1];
        let (s, c) = self.angle.sin_cos();
        let u = (c * dx + s * dy) / self.radii[0];
        let v = (-s * dx + c * dy) / self.radii[1];
        u * u + v * v <= 1.0
    }
}

/// Places a sprite over background pixels, preferring spots that the
/// fewest other train views observe; falls back to the least static overlap.
fn place_sprite(
    p: &GeneratorParams,
    clean: &Image,
    taken: &Mask,
    camera: &CameraPose,
    others: &[CameraPose],
    rng: &mut ChaCha8Rng,
) -> ((usize, usize), Sprite) {
    let mut best: Option<((usize, usize), Sprite)> = None;
    let hue = DISTRACTOR_HUE + rng.gen_range(-8.0..8.0);
    let color = hsv(hue, rng.gen_range(0.8..0.92), rng.gen_range(0.85..1.0));
    let radii = [
        rng.gen_range(p.sprite_radius[0]..=p.sprite_radius[1]),
        rng.gen_range(p.sprite_radius[0]..=p.sprite_radius[1]),
    ];
    let angle = rng.gen_range(0.0..PI);
    let r = radii[0].max(radii[1]);
    for _ in 0..400 {
        let cx = rng.gen_range(r..=(p.width as f64 - r).max(r));
        let cy = rng.gen_range(r..=(p.height as f64 - r).max(r));
        let sprite = Sprite {
            center: [cx, cy],
            radii,
            angle,
            color,
        };
        let mut overlap = 0;
        for y in 0..p.height {
            for x in 0..p.width {
                if sprite.covers(x, y) && (!is_background(clean.pixel(x, y), p.background) || taken.get(x, y)) {
                    overlap += 1;
                }
            }
        }
        let world = camera.pixel_to_world(sprite.center);
        let covisible = others.iter().filter(|c| in_frame(c, world, p.covisibility_margin)).count();
        let key = (overlap, covisible);
        if best.as_ref().is_none_or(|(k, _)| key < *k) {
            best = Some((key, sprite));
            if key == (0, 0) {
                break;
            }
        }
    }
    best.unwrap()
}

/// Sprites for one view and the summed placement key (overlap, covisibility).
fn sprites_for_view(
    p: &GeneratorParams,
    clean: &Image,
    camera: &CameraPose,
    others: &[CameraPose],
    rng: &mut ChaCha8Rng,
) -> ((usize, usize), Vec<Sprite>, Mask) {
    let mut mask = Mask::new(p.width, p.height);
    let mut total = (0, 0);
    let mut sprites = Vec::new();
    for _ in 0..p.sprites_per_view {
        let (key, sprite) = place_sprite(p, clean, &mask, camera, others, rng);
        total = (total.0 + key.0, total.1 + key.1);
        for y in 0..p.height {
            for x in 0..p.width {
                if sprite.covers(x, y) {
                    mask.set(x, y, true);
                }
            }
        }
        sprites.push(sprite);
    }
    (total, sprites, mask)
}

/// Writes a complete synthetic benchmark to `out` and returns its manifest.
pub fn generate_synthetic(params: &GeneratorParams, seed: u64, out: &Path) -> Result<DatasetManifest> {
    params.validate()?;
    for dir in [out.to_path_buf(), out.join("images"), out.join("masks")] {
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    // independent streams so that changing one knob leaves the others intact
    let mut scene_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cam_rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9));
    let mut sprite_rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x7f4a_7c15));

    let gt = ground_truth_scene(params, &mut scene_rng);
    let settings = RenderSettings {
        background: params.background,
        ..RenderSettings::default()
    };
    let train_cams: Vec<CameraPose> = (0..params.train_views).map(|_| sample_camera(params, &mut cam_rng)).collect();
    let test_cams: Vec<CameraPose> = (0..params.test_views).map(|_| sample_camera(params, &mut cam_rng)).collect();
    let mut points = init_points(&gt, params.init_points_per_gaussian, &mut scene_rng);
    points.extend(background_seeds(params, &gt, &train_cams, &settings, &mut scene_rng));

    // Transients land in the views that can hide them best: a spot over
    // background that few other cameras observe.
    let mut order: Vec<usize> = (0..params.train_views).collect();
    order.shuffle(&mut sprite_rng);
    let mut candidates = Vec::new();
    for (rank, &i) in order.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(sprite_rng.gen::<u64>());
        let (clean, _) = render_gaussians(&gt, &train_cams[i], &settings);
        let others: Vec<CameraPose> = (0..params.train_views).filter(|&j| j != i).map(|j| train_cams[j]).collect();
        let ((overlap, covisible), sprites, mask) = sprites_for_view(params, &clean, &train_cams[i], &others, &mut rng);
        candidates.push(((covisible, overlap, rank), i, sprites, mask));
    }
    candidates.sort_by_key(|c| c.0);
    candidates.truncate(params.contaminated_count());
    let contaminated: HashMap<usize, (Vec<Sprite>, Mask)> =
        candidates.into_iter().map(|(_, i, sprites, mask)| (i, (sprites, mask))).collect();

    let mut views = Vec::new();
    let splits = (0..params.train_views)
        .map(|i| (Split::Train, i, train_cams[i]))
        .chain((0..params.test_views).map(|i| (Split::Test, i, test_cams[i])));
    for (split, i, camera) in splits {
        let view_id = match split {
            Split::Train => format!("train_{i:03}"),
            Split::Test => format!("test_{i:03}"),
        };
        let (clean, _) = render_gaussians(&gt, &camera, &settings);
        let mut image = clean.quantized();
        let mut mask_path = None;
        let transient = if split == Split::Train { contaminated.get(&i) } else { None };
        let has_transient = transient.is_some();
        if let Some((sprites, mask)) = transient {
            for sprite in sprites {
                for y in 0..params.height {
                    for x in 0..params.width {
                        if sprite.covers(x, y) {
                            image.set_pixel(x, y, sprite.color);
                        }
                    }
                }
            }
            image = image.quantized();
            let rel = format!("masks/{view_id}.pgm");
            mask.write_pgm(&out.join(&rel))?;
            mask_path = Some(rel);
        }
        let rel = format!("images/{view_id}.ppm");
        image.write_ppm(&out.join(&rel))?;
        views.push(ViewRecord {
            view_id,
            camera,
            image: rel,
            has_transient,
            transient_mask: mask_path,
            split,
        });
    }

    write_points(&out.join("points.txt"), &points)?;
    let gt_scene = SceneModel::from_gaussians(gt)?;
    Checkpoint::new(gt_scene).save(&out.join("scene_gt.ckpt"))?;

    let manifest = DatasetManifest {
        root: out.to_path_buf(),
        world: WorldInfo {
            half_extent: params.world_half_extent,
            background: params.background,
            seed,
            generator: params.clone(),
            init_points: Some("points.txt".into()),
            ground_truth: Some("scene_gt.ckpt".into()),
        },
        views,
    };
    manifest.save()?;
    Ok(manifest)
}

/// True when a pixel carries the distractor signature, used by tests.
pub fn is_distractor_colored(px: [f64; 3]) -> bool {
    let (h, c) = hue_chroma(px);
    let d = (h - DISTRACTOR_HUE).rem_euclid(360.0);
    c > 0.3 && d.min(360.0 - d) < 20.0
}
