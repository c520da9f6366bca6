//! Synthetic label maps built from parametric shapes.
//!
//! Coordinates are continuous with `x` along columns and `y` along rows; the
//! pixel at `(row, col)` covers `[col, col + 1) x [row, row + 1)` and is
//! painted when its center lies inside a shape.

mod corpus;
mod raster;

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labelmap::{ClassId, LabelMap};

pub use corpus::{
    generate_scene, query_perturbation, write_corpus, CorpusSpec, CorpusSummary, GenerateSpec,
    QuerySpec,
};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("shape {index} does not fit in the {width}x{height} frame")]
    ShapeOutOfBounds {
        index: usize,
        width: usize,
        height: usize,
    },
    #[error("shape {index}: {message}")]
    InvalidShape { index: usize, message: String },
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("invalid perturbation: {0}")]
    InvalidPerturbation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    LabelMap(#[from] crate::labelmap::io::LabelMapIoError),
    #[error(transparent)]
    Retrieval(#[from] crate::retrieval::RetrievalError),
}

/// A filled parametric region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    /// Simple or self-intersecting polygon, filled with the even-odd rule.
    Polygon { vertices: Vec<[f64; 2]> },
    /// `angle` rotates the `x` radius towards `+y`, in radians.
    Ellipse {
        center: [f64; 2],
        radii: [f64; 2],
        #[serde(default)]
        angle: f64,
    },
    /// Everything below a piecewise-linear curve, between the first and the
    /// last control point. Control points must have increasing `x`.
    Skyline { points: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    pub class_id: ClassId,
    #[serde(flatten)]
    pub shape: Shape,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    /// Identifies the scene; [`generate_scene`] derives the shapes from it.
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub background_class: ClassId,
    #[serde(default)]
    pub shapes: Vec<ShapeSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerturbationSpec {
    /// Shift applied to every shape, `(dx, dy)` in pixels.
    #[serde(default)]
    pub translation: [f64; 2],
    /// Standard deviation of the Gaussian noise added to each vertex
    /// coordinate. Ellipses are turned into polygons when this is positive.
    #[serde(default)]
    pub boundary_jitter_sigma: f64,
    /// Probability of dropping each shape.
    #[serde(default)]
    pub class_dropout_prob: f64,
    #[serde(default)]
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidPerturbation(m.into()));
        if !self.translation.iter().all(|t| t.is_finite()) {
            return bad("translation must be finite");
        }
        if !(self.boundary_jitter_sigma.is_finite() && self.boundary_jitter_sigma >= 0.0) {
            return bad("jitter sigma must be finite and non-negative");
        }
        if !(0.0..=1.0).contains(&self.class_dropout_prob) {
            return bad("dropout probability must be in [0, 1]");
        }
        Ok(())
    }
}

fn finite(p: &[f64; 2]) -> bool {
    p[0].is_finite() && p[1].is_finite()
}

impl Shape {
    fn check(&self, index: usize) -> Result<(), SynthError> {
        let invalid = |m: &str| {
            Err(SynthError::InvalidShape {
                index,
                message: m.into(),
            })
        };
        match self {
            Shape::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return invalid("polygon needs at least 3 vertices");
                }
                if !vertices.iter().all(finite) {
                    return invalid("non-finite vertex");
                }
            }
            Shape::Ellipse {
                center,
                radii,
                angle,
            } => {
                if !(finite(center) && finite(radii) && angle.is_finite()) {
                    return invalid("non-finite ellipse parameter");
                }
                if radii[0] <= 0.0 || radii[1] <= 0.0 {
                    return invalid("ellipse radii must be positive");
                }
            }
            Shape::Skyline { points } => {
                if points.len() < 2 {
                    return invalid("skyline needs at least 2 points");
                }
                if !points.iter().all(finite) {
                    return invalid("non-finite skyline point");
                }
                if points.windows(2).any(|w| w[0][0] >= w[1][0]) {
                    return invalid("skyline x coordinates must increase");
                }
            }
        }
        Ok(())
    }

    /// Axis-aligned bounding box `(min_x, min_y, max_x, max_y)`.
    fn bounds(&self) -> (f64, f64, f64, f64) {
        let fold = |pts: &[[f64; 2]]| {
            pts.iter().fold(
                (
                    f64::INFINITY,
                    f64::INFINITY,
                    f64::NEG_INFINITY,
                    f64::NEG_INFINITY,
                ),
                |(a, b, c, d), p| (a.min(p[0]), b.min(p[1]), c.max(p[0]), d.max(p[1])),
            )
        };
        match self {
            Shape::Polygon { vertices } => fold(vertices),
            Shape::Skyline { points } => fold(points),
            Shape::Ellipse {
                center,
                radii,
                angle,
            } => {
                let (s, c) = angle.sin_cos();
                let hx = ((radii[0] * c).powi(2) + (radii[1] * s).powi(2)).sqrt();
                let hy = ((radii[0] * s).powi(2) + (radii[1] * c).powi(2)).sqrt();
                (
                    center[0] - hx,
                    center[1] - hy,
                    center[0] + hx,
                    center[1] + hy,
                )
            }
        }
    }
}

/// Polygon approximating an ellipse, with vertices about 4 px apart.
fn ellipse_polygon(center: [f64; 2], radii: [f64; 2], angle: f64) -> Vec<[f64; 2]> {
    let perimeter = TAU * ((radii[0] * radii[0] + radii[1] * radii[1]) / 2.0).sqrt();
    let n = ((perimeter / 4.0).ceil() as usize).clamp(16, 256);
    let (s, c) = angle.sin_cos();
    (0..n)
        .map(|i| {
            let t = TAU * i as f64 / n as f64;
            let (u, v) = (radii[0] * t.cos(), radii[1] * t.sin());
            [center[0] + u * c - v * s, center[1] + u * s + v * c]
        })
        .collect()
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.width == 0 || self.height == 0 {
            return Err(SynthError::InvalidScene(format!(
                "dimensions must be positive, got {}x{}",
                self.width, self.height
            )));
        }
        let (w, h) = (self.width as f64, self.height as f64);
        for (index, s) in self.shapes.iter().enumerate() {
            if s.class_id == self.background_class {
                return Err(SynthError::InvalidShape {
                    index,
                    message: format!("class {} is the background class", s.class_id),
                });
            }
            s.shape.check(index)?;
            let (x0, y0, x1, y1) = s.shape.bounds();
            if x0 < 0.0 || y0 < 0.0 || x1 > w || y1 > h {
                return Err(SynthError::ShapeOutOfBounds {
                    index,
                    width: self.width,
                    height: self.height,
                });
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, SynthError> {
        toml::from_str(text).map_err(|e| SynthError::InvalidScene(e.to_string()))
    }
}

/// Rasterizes the scene; later shapes paint over earlier ones.
pub fn render_scene(spec: &SceneSpec) -> Result<LabelMap, SynthError> {
    spec.validate()?;
    Ok(raster::render(
        spec.width,
        spec.height,
        spec.background_class,
        &spec.shapes,
    ))
}

/// Renders a perturbed copy of the scene. Shapes pushed partly outside the
/// frame are clipped.
///
/// A vertex lying on the frame border stands for a shape that continues
/// beyond the image, so it only moves along that border: `x` stays fixed on
/// the left and right borders and `y` on the top and bottom ones.
///
/// Random draws come from a ChaCha8 stream seeded with `p.seed`, consumed
/// shape by shape in order: one uniform draw decides dropout, then, when
/// jitter is enabled, one normal draw per vertex coordinate (x before y).
pub fn perturb_scene(spec: &SceneSpec, p: &PerturbationSpec) -> Result<LabelMap, SynthError> {
    spec.validate()?;
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let noise = Normal::new(0.0, p.boundary_jitter_sigma).expect("sigma validated");
    let jitter = p.boundary_jitter_sigma > 0.0;
    let [dx, dy] = p.translation;
    let (w, h) = (spec.width as f64, spec.height as f64);
    let mut shapes = Vec::with_capacity(spec.shapes.len());
    for s in &spec.shapes {
        let keep = rng.random::<f64>() >= p.class_dropout_prob;
        let mut shape = s.shape.clone();
        if let Shape::Ellipse {
            center,
            radii,
            angle,
        } = shape
        {
            if jitter {
                shape = Shape::Polygon {
                    vertices: ellipse_polygon(center, radii, angle),
                };
            }
        }
        let pts = match &mut shape {
            Shape::Polygon { vertices } => vertices,
            Shape::Skyline { points } => points,
            Shape::Ellipse { center, .. } => std::slice::from_mut(center),
        };
        for pt in pts.iter_mut() {
            let (nx, ny) = if jitter {
                (noise.sample(&mut rng), noise.sample(&mut rng))
            } else {
                (0.0, 0.0)
            };
            if pt[0] > 0.0 && pt[0] < w {
                pt[0] += dx + nx;
            }
            if pt[1] > 0.0 && pt[1] < h {
                pt[1] += dy + ny;
            }
        }
        if let Shape::Skyline { points } = &mut shape {
            // jitter can reorder neighbouring x values
            points.sort_by(|a, b| a[0].total_cmp(&b[0]));
        }
        if keep {
            shapes.push(ShapeSpec {
                class_id: s.class_id,
                shape,
            });
        }
    }
    Ok(raster::render(
        spec.width,
        spec.height,
        spec.background_class,
        &shapes,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edges::{detect_boundaries, trace_edges, SemanticEdge};
    use std::collections::BTreeSet;

    fn rect(class_id: ClassId, x0: f64, y0: f64, x1: f64, y1: f64) -> ShapeSpec {
        ShapeSpec {
            class_id,
            shape: Shape::Polygon {
                vertices: vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]],
            },
        }
    }

    fn scene(shapes: Vec<ShapeSpec>) -> SceneSpec {
        SceneSpec {
            seed: 3,
            width: 64,
            height: 48,
            background_class: 0,
            shapes,
        }
    }

    #[test]
    fn empty_scene_is_background() {
        let map = render_scene(&SceneSpec {
            background_class: 4,
            ..scene(vec![])
        })
        .unwrap();
        assert_eq!(map.count(4), 64 * 48);
    }

    #[test]
    fn rectangle_area_is_exact() {
        let map = render_scene(&scene(vec![rect(1, 22.0, 14.0, 42.0, 34.0)])).unwrap();
        assert_eq!(map.count(1), 400);
        assert_eq!(map.get(14, 22), 1);
        assert_eq!(map.get(33, 41), 1);
        assert_eq!(map.get(13, 22), 0);
        assert_eq!(map.get(14, 42), 0);
    }

    #[test]
    fn later_shapes_occlude() {
        let map = render_scene(&scene(vec![
            rect(1, 0.0, 0.0, 20.0, 20.0),
            rect(2, 10.0, 10.0, 30.0, 30.0),
        ]))
        .unwrap();
        assert_eq!(map.count(2), 400);
        assert_eq!(map.count(1), 300);
    }

    #[test]
    fn ellipse_matches_implicit_test() {
        let spec = scene(vec![ShapeSpec {
            class_id: 3,
            shape: Shape::Ellipse {
                center: [31.3, 22.7],
                radii: [14.0, 8.5],
                angle: 0.4,
            },
        }]);
        let map = render_scene(&spec).unwrap();
        let (s, c) = 0.4f64.sin_cos();
        for r in 0..48 {
            for col in 0..64 {
                let (x, y) = (col as f64 + 0.5 - 31.3, r as f64 + 0.5 - 22.7);
                let (u, v) = (x * c + y * s, -x * s + y * c);
                let inside = (u / 14.0).powi(2) + (v / 8.5).powi(2) <= 1.0;
                assert_eq!(map.get(r, col) == 3, inside, "({r}, {col})");
            }
        }
    }

    #[test]
    fn skyline_fills_below_curve() {
        let spec = scene(vec![ShapeSpec {
            class_id: 2,
            shape: Shape::Skyline {
                points: vec![[0.0, 20.0], [32.0, 20.0], [64.0, 36.0]],
            },
        }]);
        let map = render_scene(&spec).unwrap();
        // flat part: rows 20.. are filled
        assert_eq!(map.get(19, 10), 0);
        assert_eq!(map.get(20, 10), 2);
        // sloped part at x = 48.5: curve y = 20 + 16 * 16.5 / 32 = 28.25
        assert_eq!(map.get(27, 48), 0);
        assert_eq!(map.get(28, 48), 2);
        assert_eq!(map.get(47, 63), 2);
    }

    #[test]
    fn validation_errors() {
        let out = scene(vec![rect(1, 50.0, 10.0, 70.0, 20.0)]);
        assert!(matches!(
            render_scene(&out),
            Err(SynthError::ShapeOutOfBounds { index: 0, .. })
        ));
        let bg = scene(vec![rect(0, 1.0, 1.0, 5.0, 5.0)]);
        assert!(matches!(
            render_scene(&bg),
            Err(SynthError::InvalidShape { .. })
        ));
        let tilted = scene(vec![ShapeSpec {
            class_id: 1,
            shape: Shape::Ellipse {
                center: [10.0, 24.0],
                radii: [9.5, 2.0],
                angle: 0.0,
            },
        }]);
        assert!(render_scene(&tilted).is_ok());
        let mut rotated = tilted.clone();
        if let Shape::Ellipse { angle, .. } = &mut rotated.shapes[0].shape {
            *angle = std::f64::consts::FRAC_PI_2;
        }
        // rotated by 90 degrees the 9.5 radius is vertical: still inside
        assert!(render_scene(&rotated).is_ok());
        let bad_skyline = scene(vec![ShapeSpec {
            class_id: 1,
            shape: Shape::Skyline {
                points: vec![[10.0, 5.0], [10.0, 6.0]],
            },
        }]);
        assert!(matches!(
            render_scene(&bad_skyline),
            Err(SynthError::InvalidShape { .. })
        ));
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
            seed = 9
            width = 64
            height = 48
            background_class = 0

            [[shapes]]
            class_id = 1
            kind = "polygon"
            vertices = [[2.0, 2.0], [20.0, 2.0], [11.0, 18.0]]

            [[shapes]]
            class_id = 2
            kind = "ellipse"
            center = [40.0, 24.0]
            radii = [10.0, 6.0]

            [[shapes]]
            class_id = 3
            kind = "skyline"
            points = [[0.0, 40.0], [64.0, 30.0]]
        "#;
        let spec = SceneSpec::from_toml(text).unwrap();
        assert_eq!(spec.shapes.len(), 3);
        assert!(matches!(spec.shapes[1].shape, Shape::Ellipse { angle, .. } if angle == 0.0));
        let again = SceneSpec::from_toml(&toml::to_string(&spec).unwrap()).unwrap();
        assert_eq!(again, spec);
        render_scene(&spec).unwrap();
    }

    fn busy_scene() -> SceneSpec {
        generate_scene(77, 96, 80)
    }

    #[test]
    fn identity_perturbation() {
        let spec = busy_scene();
        let p = PerturbationSpec {
            seed: 1234,
            ..Default::default()
        };
        assert_eq!(
            perturb_scene(&spec, &p).unwrap(),
            render_scene(&spec).unwrap()
        );
    }

    #[test]
    fn full_dropout_leaves_background() {
        let spec = busy_scene();
        let p = PerturbationSpec {
            class_dropout_prob: 1.0,
            boundary_jitter_sigma: 2.0,
            ..Default::default()
        };
        let map = perturb_scene(&spec, &p).unwrap();
        assert_eq!(map.classes(), BTreeSet::from([spec.background_class]));
    }

    #[test]
    fn perturbation_is_deterministic() {
        let spec = busy_scene();
        let p = PerturbationSpec {
            translation: [2.5, -1.0],
            boundary_jitter_sigma: 1.0,
            class_dropout_prob: 0.3,
            seed: 5,
        };
        let a = perturb_scene(&spec, &p).unwrap();
        assert_eq!(a, perturb_scene(&spec, &p).unwrap());
        let other = perturb_scene(&spec, &PerturbationSpec { seed: 6, ..p }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn invalid_perturbations() {
        let spec = busy_scene();
        for p in [
            PerturbationSpec {
                class_dropout_prob: 1.5,
                ..Default::default()
            },
            PerturbationSpec {
                boundary_jitter_sigma: -1.0,
                ..Default::default()
            },
            PerturbationSpec {
                translation: [f64::NAN, 0.0],
                ..Default::default()
            },
        ] {
            assert!(matches!(
                perturb_scene(&spec, &p),
                Err(SynthError::InvalidPerturbation(_))
            ));
        }
    }

    fn point_set(
        edges: &[SemanticEdge],
        dx: isize,
        clip: impl Fn(usize) -> bool,
    ) -> BTreeSet<(u16, usize, usize)> {
        edges
            .iter()
            .flat_map(|e| e.points.iter().map(move |&(r, c)| (e.class_id, r, c)))
            .filter(|&(_, _, c)| clip(c))
            .map(|(k, r, c)| (k, r, c.wrapping_add_signed(dx)))
            .collect()
    }

    #[test]
    fn translation_moves_traced_edges() {
        // Shapes away from the right border so a 5 px shift clips nothing
        // except the full-width skyline, whose left end leaves a gap.
        let spec = SceneSpec {
            seed: 0,
            width: 80,
            height: 60,
            background_class: 0,
            shapes: vec![
                ShapeSpec {
                    class_id: 1,
                    shape: Shape::Skyline {
                        points: vec![
                            [0.0, 30.0],
                            [25.0, 30.0],
                            [26.0, 22.0],
                            [60.0, 22.0],
                            [61.0, 35.0],
                            [80.0, 35.0],
                        ],
                    },
                },
                rect(2, 8.0, 40.0, 30.0, 55.0),
                ShapeSpec {
                    class_id: 3,
                    shape: Shape::Ellipse {
                        center: [45.0, 12.0],
                        radii: [10.0, 7.0],
                        angle: 0.3,
                    },
                },
            ],
        };
        let original = render_scene(&spec).unwrap();
        let shifted = perturb_scene(
            &spec,
            &PerturbationSpec {
                translation: [5.0, 0.0],
                ..Default::default()
            },
        )
        .unwrap();
        let trace = |m: &LabelMap| trace_edges(detect_boundaries(m).values());
        // Points near either vertical border or the skyline's clipped ends
        // are affected by clipping; compare the interior columns.
        let interior = |c: usize| (2..72).contains(&c);
        let moved = point_set(&trace(&original), 5, interior);
        let observed = point_set(&trace(&shifted), 0, |c| (7..77).contains(&c));
        assert_eq!(moved, observed);
    }
}
