//! Wavelet edge descriptors.
//!
//! An edge is resampled to `N` points at uniform arc length; the column and
//! row sequences are each decomposed with a Haar transform and the two
//! coefficient vectors are concatenated and L2-normalized, giving a `2N`
//! dimensional unit vector.

use std::f64::consts::FRAC_1_SQRT_2;

use thiserror::Error;

use crate::edges::SemanticEdge;
use crate::labelmap::ClassId;

pub const DEFAULT_RESAMPLE_COUNT: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveletError {
    #[error("edge has zero length")]
    DegenerateEdge,
    #[error("edge needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("sample count {count} must be a positive multiple of 2^{levels}")]
    BadSampleCount { count: usize, levels: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveletConfig {
    pub resample_count: usize,
    /// Haar decomposition depth. Level 1 is a single split into
    /// approximation and detail bands.
    pub levels: u32,
    /// Divide x by the image width and y by the image height before the
    /// transform.
    pub normalize_coordinates: bool,
}

impl Default for WaveletConfig {
    fn default() -> Self {
        Self {
            resample_count: DEFAULT_RESAMPLE_COUNT,
            levels: 1,
            normalize_coordinates: false,
        }
    }
}

impl WaveletConfig {
    pub fn validate(&self) -> Result<(), WaveletError> {
        let block = 1usize.checked_shl(self.levels).unwrap_or(0);
        if self.levels == 0
            || block == 0
            || self.resample_count < 2
            || !self.resample_count.is_multiple_of(block)
        {
            return Err(WaveletError::BadSampleCount {
                count: self.resample_count,
                levels: self.levels,
            });
        }
        Ok(())
    }

    pub fn descriptor_len(&self) -> usize {
        2 * self.resample_count
    }
}

/// `N` points at uniform arc-length spacing; `xs` are columns, `ys` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ResampledEdge {
    pub class_id: ClassId,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl ResampledEdge {
    /// Scales coordinates into `[0, 1]` by the image dimensions.
    pub fn normalized(mut self, width: usize, height: usize) -> Self {
        let (sx, sy) = (1.0 / width as f64, 1.0 / height as f64);
        self.xs.iter_mut().for_each(|x| *x *= sx);
        self.ys.iter_mut().for_each(|y| *y *= sy);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeDescriptor {
    pub class_id: ClassId,
    pub coeffs: Vec<f64>,
}

impl EdgeDescriptor {
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &EdgeDescriptor) -> f64 {
        euclidean(&self.coeffs, &other.coeffs)
    }

    /// Rounds every coefficient to the nearest `f32`, the precision used in
    /// database files.
    pub fn to_storage_precision(&self) -> Self {
        Self {
            class_id: self.class_id,
            coeffs: self.coeffs.iter().map(|&c| c as f32 as f64).collect(),
        }
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Samples `count` points along the edge polyline at equal arc-length steps.
///
/// Open edges are sampled from the first to the last point inclusive.
/// Closed edges are sampled around the full loop starting at the first point,
/// without repeating it at the end.
pub fn resample_edge(edge: &SemanticEdge, count: usize) -> Result<ResampledEdge, WaveletError> {
    if edge.points.len() < 2 {
        return Err(WaveletError::TooFewPoints(edge.points.len()));
    }
    if count < 2 {
        return Err(WaveletError::BadSampleCount { count, levels: 0 });
    }
    let mut vertices: Vec<(f64, f64)> = edge
        .points
        .iter()
        .map(|&(r, c)| (c as f64, r as f64))
        .collect();
    if edge.closed {
        vertices.push(vertices[0]);
    }
    let mut cumulative = Vec::with_capacity(vertices.len());
    let mut total = 0.0;
    cumulative.push(0.0);
    for pair in vertices.windows(2) {
        total += (pair[1].0 - pair[0].0).hypot(pair[1].1 - pair[0].1);
        cumulative.push(total);
    }
    if total <= 0.0 {
        return Err(WaveletError::DegenerateEdge);
    }

    let step = if edge.closed {
        total / count as f64
    } else {
        total / (count - 1) as f64
    };
    let mut xs = Vec::with_capacity(count);
    let mut ys = Vec::with_capacity(count);
    let mut seg = 0;
    for k in 0..count {
        if !edge.closed && k == count - 1 {
            let last = vertices[vertices.len() - 1];
            xs.push(last.0);
            ys.push(last.1);
            break;
        }
        let s = step * k as f64;
        while seg + 2 < cumulative.len() && cumulative[seg + 1] <= s {
            seg += 1;
        }
        let (a, b) = (vertices[seg], vertices[seg + 1]);
        let len = cumulative[seg + 1] - cumulative[seg];
        let t = if len > 0.0 {
            ((s - cumulative[seg]) / len).clamp(0.0, 1.0)
        } else {
            0.0
        };
        xs.push(a.0 + t * (b.0 - a.0));
        ys.push(a.1 + t * (b.1 - a.1));
    }
    Ok(ResampledEdge {
        class_id: edge.class_id,
        xs,
        ys,
    })
}

/// Single-level undecimated Haar transform with circular extension:
/// `approx[i] = (s[i] + s[i+1]) / sqrt 2`, `detail[i] = (s[i] - s[i+1]) / sqrt 2`,
/// indices taken modulo `N`.
pub fn haar_undecimated(signal: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = signal.len();
    (0..n)
        .map(|i| {
            let (a, b) = (signal[i], signal[(i + 1) % n]);
            ((a + b) * FRAC_1_SQRT_2, (a - b) * FRAC_1_SQRT_2)
        })
        .unzip()
}

/// Even-indexed entries of each undecimated band, ordered `[approx; detail]`.
/// This is the classical decimated single-level Haar transform.
///
/// Panics if the signal length is odd.
pub fn haar_even_coeffs(signal: &[f64]) -> Vec<f64> {
    assert!(
        signal.len().is_multiple_of(2),
        "Haar transform needs an even-length signal"
    );
    let half = signal.len() / 2;
    let mut out = vec![0.0; signal.len()];
    for i in 0..half {
        let (a, b) = (signal[2 * i], signal[2 * i + 1]);
        out[i] = (a + b) * FRAC_1_SQRT_2;
        out[half + i] = (a - b) * FRAC_1_SQRT_2;
    }
    out
}

/// Multi-level decimated Haar decomposition: the approximation band is split
/// again `levels - 1` times. Layout is `[a_L, d_L, d_{L-1}, ..., d_1]`.
pub fn haar_decompose(signal: &[f64], levels: u32) -> Vec<f64> {
    let mut out = signal.to_vec();
    let mut len = out.len();
    for _ in 0..levels {
        let split = haar_even_coeffs(&out[..len]);
        out[..len].copy_from_slice(&split);
        len /= 2;
    }
    out
}

pub fn describe_edge(
    edge: &ResampledEdge,
    cfg: &WaveletConfig,
) -> Result<EdgeDescriptor, WaveletError> {
    cfg.validate()?;
    if edge.xs.len() != cfg.resample_count || edge.ys.len() != cfg.resample_count {
        return Err(WaveletError::BadSampleCount {
            count: edge.xs.len(),
            levels: cfg.levels,
        });
    }
    let mut coeffs = haar_decompose(&edge.xs, cfg.levels);
    coeffs.extend(haar_decompose(&edge.ys, cfg.levels));
    let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(WaveletError::DegenerateEdge);
    }
    coeffs.iter_mut().for_each(|c| *c /= norm);
    Ok(EdgeDescriptor {
        class_id: edge.class_id,
        coeffs,
    })
}

/// Resample and describe in one step. `frame` is the image size, used only
/// when coordinate normalization is enabled.
pub fn describe_semantic_edge(
    edge: &SemanticEdge,
    frame: (usize, usize),
    cfg: &WaveletConfig,
) -> Result<EdgeDescriptor, WaveletError> {
    cfg.validate()?;
    let mut resampled = resample_edge(edge, cfg.resample_count)?;
    if cfg.normalize_coordinates {
        resampled = resampled.normalized(frame.0, frame.1);
    }
    describe_edge(&resampled, cfg)
}
