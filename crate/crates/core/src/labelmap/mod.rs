//! Dense semantic label maps and the denoising passes applied before edge
//! extraction: dynamic-class infill and small-blob merging.

mod blobs;
mod infill;
pub mod io;

use std::collections::BTreeSet;

use thiserror::Error;

pub use blobs::merge_small_blobs;
pub use infill::remove_dynamic_classes;

/// Semantic class identifier.
pub type ClassId = u16;

/// Default minimum component size, in pixels.
pub const DEFAULT_MIN_BLOB_SIZE: usize = 50;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LabelMapError {
    #[error("label map dimensions must be positive, got {width}x{height}")]
    EmptyDimensions { width: usize, height: usize },
    #[error("expected {expected} labels for a {width}x{height} map, got {actual}")]
    LengthMismatch {
        width: usize,
        height: usize,
        expected: usize,
        actual: usize,
    },
    #[error("label {label} at ({row}, {col}) is not below the class count {class_count}")]
    LabelOutOfRange {
        row: usize,
        col: usize,
        label: ClassId,
        class_count: usize,
    },
    #[error("every pixel belongs to a dynamic class")]
    AllDynamic,
}

/// Row-major grid of class identifiers.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<ClassId>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, labels: Vec<ClassId>) -> Result<Self, LabelMapError> {
        if width == 0 || height == 0 {
            return Err(LabelMapError::EmptyDimensions { width, height });
        }
        let expected = width * height;
        if labels.len() != expected {
            return Err(LabelMapError::LengthMismatch {
                width,
                height,
                expected,
                actual: labels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    /// A map where every pixel carries `class`.
    pub fn filled(width: usize, height: usize, class: ClassId) -> Result<Self, LabelMapError> {
        Self::new(width, height, vec![class; width * height])
    }

    /// Builds a map from a closure evaluated at every `(row, col)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> ClassId,
    ) -> Result<Self, LabelMapError> {
        let mut labels = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                labels.push(f(row, col));
            }
        }
        Self::new(width, height, labels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[ClassId] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<ClassId> {
        self.labels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> ClassId {
        self.labels[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, class: ClassId) {
        self.labels[row * self.width + col] = class;
    }

    /// Checks that every label is below `class_count`.
    pub fn validate(&self, class_count: usize) -> Result<(), LabelMapError> {
        match self.labels.iter().position(|&l| l as usize >= class_count) {
            Some(idx) => Err(LabelMapError::LabelOutOfRange {
                row: idx / self.width,
                col: idx % self.width,
                label: self.labels[idx],
                class_count,
            }),
            None => Ok(()),
        }
    }

    /// Distinct classes present, ascending.
    pub fn classes(&self) -> BTreeSet<ClassId> {
        self.labels.iter().copied().collect()
    }

    pub fn count(&self, class: ClassId) -> usize {
        self.labels.iter().filter(|&&l| l == class).count()
    }
}

/// Pixel adjacency used for connected components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    #[default]
    Four,
    Eight,
}

impl Connectivity {
    pub(crate) fn offsets(self) -> &'static [(isize, isize)] {
        const FOUR: [(isize, isize); 4] = [(-1, 0), (0, -1), (0, 1), (1, 0)];
        const EIGHT: [(isize, isize); 8] = [
            (-1, -1),
            (-1, 0),
            (-1, 1),
            (0, -1),
            (0, 1),
            (1, -1),
            (1, 0),
            (1, 1),
        ];
        match self {
            Connectivity::Four => &FOUR,
            Connectivity::Eight => &EIGHT,
        }
    }

    /// Offsets that point "forward" in row-major order; visiting only these
    /// counts every unordered neighbor pair once.
    pub(crate) fn forward_offsets(self) -> &'static [(isize, isize)] {
        const FOUR: [(isize, isize); 2] = [(0, 1), (1, 0)];
        const EIGHT: [(isize, isize); 4] = [(0, 1), (1, -1), (1, 0), (1, 1)];
        match self {
            Connectivity::Four => &FOUR,
            Connectivity::Eight => &EIGHT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleanupConfig {
    pub min_blob_size: usize,
    pub dynamic_classes: BTreeSet<ClassId>,
    pub connectivity: Connectivity,
}

impl Default for CleanupConfig {
    fn default() -> Self {
        Self {
            min_blob_size: DEFAULT_MIN_BLOB_SIZE,
            dynamic_classes: BTreeSet::new(),
            connectivity: Connectivity::Four,
        }
    }
}

/// Full cleanup: dynamic-class infill first, then small-blob merging, so
/// that fragments created by the infill are also size-filtered.
pub fn clean(map: &LabelMap, cfg: &CleanupConfig) -> Result<LabelMap, LabelMapError> {
    let filled = remove_dynamic_classes(map, cfg)?;
    Ok(merge_small_blobs(&filled, cfg))
}
