//! Random street-like scenes and on-disk retrieval corpora.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    perturb_scene, render_scene, PerturbationSpec, SceneSpec, Shape, ShapeSpec, SynthError,
};
use crate::labelmap::io::write_label_map;
use crate::labelmap::ClassId;
use crate::retrieval::csv_io::write_poses;
use crate::retrieval::Pose;

pub const SKY: ClassId = 0;
pub const BUILDING: ClassId = 1;
pub const ROAD: ClassId = 2;
pub const VEGETATION: ClassId = 3;
pub const SIDEWALK: ClassId = 4;
pub const SIGN: ClassId = 5;

/// A random scene of sky, a building skyline, a road, trees and signs,
/// fully determined by `seed` and the frame size.
pub fn generate_scene(seed: u64, width: usize, height: usize) -> SceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (width as f64, height as f64);
    let s = w.min(h);
    let mut shapes = Vec::new();

    // Buildings: flat or gabled roofs over random-width lots.
    let lots = rng.random_range(3..=6);
    let mut cuts: Vec<f64> = (0..lots - 1)
        .map(|_| rng.random_range(0.1..0.9) * w)
        .collect();
    cuts.sort_by(f64::total_cmp);
    let mut xs = vec![0.0];
    for c in cuts {
        let last: f64 = *xs.last().unwrap();
        xs.push(
            c.max(last + w / 10.0)
                .min(w - w / 10.0 * (lots - xs.len()) as f64),
        );
    }
    xs.push(w);
    let mut points = Vec::new();
    for lot in xs.windows(2) {
        let (x0, x1) = (lot[0], lot[1]);
        let roof = rng.random_range(0.15..0.5) * h;
        points.push([x0, roof]);
        if rng.random_bool(0.3) {
            let peak = (roof - rng.random_range(0.04..0.12) * h).max(0.0);
            points.push([(x0 + x1) / 2.0, peak]);
        }
        points.push([x1 - 1.0, roof]);
    }
    points.last_mut().unwrap()[0] = w;
    shapes.push(ShapeSpec {
        class_id: BUILDING,
        shape: Shape::Skyline { points },
    });

    // Road vanishing towards a random horizon point.
    let horizon = rng.random_range(0.6..0.72) * h;
    let mid = rng.random_range(0.3..0.7) * w;
    let half = rng.random_range(0.05..0.15) * w;
    let road = vec![
        [0.0, h],
        [0.0, rng.random_range(0.78..0.95) * h],
        [mid - half, horizon],
        [mid + half, horizon],
        [w, rng.random_range(0.78..0.95) * h],
        [w, h],
    ];
    shapes.push(ShapeSpec {
        class_id: ROAD,
        shape: Shape::Polygon { vertices: road },
    });

    // Sidewalk wedge on one side.
    let left = rng.random_bool(0.5);
    let top = rng.random_range(0.55..0.65) * h;
    let reach = rng.random_range(0.25..0.45) * w;
    let wedge = [
        [0.0, top],
        [reach, top + 0.02 * h],
        [0.0, rng.random_range(0.8..0.9) * h],
    ];
    shapes.push(ShapeSpec {
        class_id: SIDEWALK,
        shape: Shape::Polygon {
            vertices: wedge
                .iter()
                .map(|&[x, y]| if left { [x, y] } else { [w - x, y] })
                .collect(),
        },
    });

    for _ in 0..rng.random_range(1..=3) {
        let radii = [
            rng.random_range(0.07..0.14) * s,
            rng.random_range(0.09..0.18) * s,
        ];
        let angle = rng.random_range(-0.4..0.4);
        let r = radii[0].max(radii[1]);
        let cx = rng.random_range(r..w - r);
        let cy = rng.random_range((0.3 * h).max(r)..(0.65 * h).min(h - r));
        shapes.push(ShapeSpec {
            class_id: VEGETATION,
            shape: Shape::Ellipse {
                center: [cx, cy],
                radii,
                angle,
            },
        });
    }

    if rng.random_bool(0.6) {
        let sw = rng.random_range(0.06..0.12) * w;
        let sh = rng.random_range(0.1..0.2) * h;
        let x = rng.random_range(0.0..w - sw);
        let y = rng.random_range(0.2 * h..0.6 * h);
        let tilt = rng.random_range(-0.03..0.03) * sh;
        shapes.push(ShapeSpec {
            class_id: SIGN,
            shape: Shape::Polygon {
                vertices: vec![
                    [x, y + tilt],
                    [x + sw, y - tilt],
                    [x + sw, y + sh - tilt],
                    [x, y + sh + tilt],
                ],
            },
        });
    }

    SceneSpec {
        seed,
        width,
        height,
        background_class: SKY,
        shapes,
    }
}

/// Randomly generated part of a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateSpec {
    pub seed: u64,
    pub count: usize,
    pub width: usize,
    pub height: usize,
}

/// How query images are derived from database scenes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub seed: u64,
    /// Upper bound on the length of each query's random shift, in pixels.
    pub max_translation: f64,
    #[serde(default)]
    pub jitter_sigma: f64,
    #[serde(default)]
    pub dropout_prob: f64,
}

/// A database of scenes placed along a line, plus optional perturbed
/// queries. Scene `i` is written as `scene_{i:04}` with pose
/// `(i * pose_spacing, 0, 0)`; query `i` is a perturbed view of scene `i`
/// with the same pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    #[serde(default = "default_spacing")]
    pub pose_spacing: f64,
    /// File extension of the written label maps (`png`, `pgm` or `txt`).
    #[serde(default = "default_format")]
    pub format: String,
    pub generate: Option<GenerateSpec>,
    pub queries: Option<QuerySpec>,
    /// Hand-written scenes, numbered after the generated ones.
    #[serde(default)]
    pub scenes: Vec<SceneSpec>,
}

fn default_spacing() -> f64 {
    10.0
}

fn default_format() -> String {
    "png".into()
}

impl CorpusSpec {
    pub fn from_toml(text: &str) -> Result<Self, SynthError> {
        let spec: Self =
            toml::from_str(text).map_err(|e| SynthError::InvalidScene(e.to_string()))?;
        if !(spec.pose_spacing.is_finite() && spec.pose_spacing > 0.0) {
            return Err(SynthError::InvalidScene(
                "pose_spacing must be positive".into(),
            ));
        }
        if !matches!(spec.format.as_str(), "png" | "pgm" | "txt") {
            return Err(SynthError::InvalidScene(format!(
                "unknown map format `{}`",
                spec.format
            )));
        }
        if let Some(q) = &spec.queries {
            if !(q.max_translation.is_finite() && q.max_translation >= 0.0) {
                return Err(SynthError::InvalidScene(
                    "max_translation must be non-negative".into(),
                ));
            }
        }
        Ok(spec)
    }

    /// Every database scene, generated ones first.
    pub fn scenes(&self) -> Vec<SceneSpec> {
        let mut out = Vec::new();
        if let Some(g) = &self.generate {
            out.extend((0..g.count).map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
                rng.set_stream(i as u64);
                generate_scene(rng.next_u64(), g.width, g.height)
            }));
        }
        out.extend(self.scenes.iter().cloned());
        out
    }
}

/// Perturbation of query `index`: a shift of uniformly random direction and
/// length at most `max_translation`, plus the configured jitter and dropout.
pub fn query_perturbation(q: &QuerySpec, index: usize) -> PerturbationSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(q.seed);
    rng.set_stream(index as u64);
    // sqrt makes the shift uniform over the disk
    let r = q.max_translation * rng.random::<f64>().sqrt();
    let theta = std::f64::consts::TAU * rng.random::<f64>();
    PerturbationSpec {
        translation: [r * theta.cos(), r * theta.sin()],
        boundary_jitter_sigma: q.jitter_sigma,
        class_dropout_prob: q.dropout_prob,
        seed: rng.next_u64(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSummary {
    pub database: Vec<PathBuf>,
    pub queries: Vec<PathBuf>,
}

/// Writes `db/`, `queries/` (when configured), `db_poses.csv` and
/// `query_poses.csv` under `out`.
pub fn write_corpus(spec: &CorpusSpec, out: &Path) -> Result<CorpusSummary, SynthError> {
    let scenes = spec.scenes();
    for s in &scenes {
        s.validate()?;
    }
    let pose = |i: usize| Pose::new(i as f64 * spec.pose_spacing, 0.0, 0.0);

    let db_dir = out.join("db");
    fs::create_dir_all(&db_dir)?;
    let database = scenes
        .par_iter()
        .enumerate()
        .map(|(i, scene)| {
            let path = db_dir.join(format!("scene_{i:04}.{}", spec.format));
            write_label_map(&render_scene(scene)?, &path)?;
            Ok(path)
        })
        .collect::<Result<Vec<_>, SynthError>>()?;
    let db_poses: BTreeMap<String, Pose> = (0..scenes.len())
        .map(|i| (format!("scene_{i:04}"), pose(i)))
        .collect();
    write_poses(fs::File::create(out.join("db_poses.csv"))?, &db_poses)?;

    let mut queries = Vec::new();
    if let Some(q) = &spec.queries {
        let q_dir = out.join("queries");
        fs::create_dir_all(&q_dir)?;
        queries = scenes
            .par_iter()
            .enumerate()
            .map(|(i, scene)| {
                let path = q_dir.join(format!("query_{i:04}.{}", spec.format));
                write_label_map(&perturb_scene(scene, &query_perturbation(q, i))?, &path)?;
                Ok(path)
            })
            .collect::<Result<Vec<_>, SynthError>>()?;
        let q_poses: BTreeMap<String, Pose> = (0..scenes.len())
            .map(|i| (format!("query_{i:04}"), pose(i)))
            .collect();
        write_poses(fs::File::create(out.join("query_poses.csv"))?, &q_poses)?;
    }
    Ok(CorpusSummary { database, queries })
}
