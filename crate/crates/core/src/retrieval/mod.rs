//! Descriptor database, ranked queries and place-recognition metrics.

pub mod csv_io;
mod metrics;
mod storage;

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use thiserror::Error;

use crate::matching::{image_distance, ImageDescriptor, ImageDistance, MatchConfig};

pub use metrics::{mean_average_precision, recall_at_n, EvalConfig, QueryRanking};
pub use storage::{FORMAT_VERSION, MAGIC};

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("database needs at least one image")]
    EmptyDatabase,
    #[error("duplicate image id `{0}`")]
    DuplicateId(String),
    #[error("no pose for image `{0}`")]
    MissingPose(String),
    #[error("no query has a database entry within the distance threshold")]
    NoRelevantAnywhere,
    #[error("no queries to evaluate")]
    NoQueries,
    #[error("invalid evaluation config: {0}")]
    InvalidConfig(String),
    #[error("not a descriptor database (bad magic)")]
    BadMagic,
    #[error("unsupported database format version {0}")]
    UnsupportedVersion(u32),
    #[error("database file is truncated")]
    Truncated,
    #[error("trailing bytes after the last database entry")]
    TrailingData,
    #[error("image id is not valid UTF-8")]
    InvalidId,
    #[error("{what} does not fit in the database format")]
    Overflow { what: &'static str },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Format(String),
}

/// Camera center, in meters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Pose) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatabaseEntry {
    pub descriptor: ImageDescriptor,
    pub pose: Option<Pose>,
}

/// Immutable set of image descriptors, sorted by image id.
///
/// Coefficients are held at storage (`f32`) precision so that a database
/// read back from disk is identical to the one that was written.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalDatabase {
    entries: Vec<DatabaseEntry>,
}

/// One ranked database hit.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedMatch {
    pub image_id: String,
    pub distance: ImageDistance,
}

impl RetrievalDatabase {
    /// Builds a database. When `poses` is given it must cover every image.
    pub fn build(
        images: Vec<ImageDescriptor>,
        poses: Option<&BTreeMap<String, Pose>>,
    ) -> Result<Self, RetrievalError> {
        if images.is_empty() {
            return Err(RetrievalError::EmptyDatabase);
        }
        let mut seen = HashSet::new();
        let mut entries = Vec::with_capacity(images.len());
        for img in images {
            if !seen.insert(img.image_id.clone()) {
                return Err(RetrievalError::DuplicateId(img.image_id));
            }
            let pose = match poses {
                Some(p) => Some(
                    *p.get(&img.image_id)
                        .ok_or_else(|| RetrievalError::MissingPose(img.image_id.clone()))?,
                ),
                None => None,
            };
            entries.push(DatabaseEntry {
                descriptor: img.to_storage_precision(),
                pose,
            });
        }
        Ok(Self::from_sorted(entries))
    }

    fn from_sorted(mut entries: Vec<DatabaseEntry>) -> Self {
        entries.sort_by(|a, b| a.descriptor.image_id.cmp(&b.descriptor.image_id));
        Self { entries }
    }

    pub fn entries(&self) -> &[DatabaseEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, image_id: &str) -> Option<&DatabaseEntry> {
        self.entries
            .binary_search_by(|e| e.descriptor.image_id.as_str().cmp(image_id))
            .ok()
            .map(|i| &self.entries[i])
    }

    /// Poses of every entry that has one.
    pub fn poses(&self) -> BTreeMap<String, Pose> {
        self.entries
            .iter()
            .filter_map(|e| e.pose.map(|p| (e.descriptor.image_id.clone(), p)))
            .collect()
    }

    /// The `k` nearest entries, by distance then image id; incomparable
    /// entries come last. The query is compared at storage precision.
    pub fn query(&self, query: &ImageDescriptor, k: usize, cfg: &MatchConfig) -> Vec<RankedMatch> {
        let query = query.to_storage_precision();
        let mut ranked: Vec<RankedMatch> = self
            .entries
            .par_iter()
            .map(|e| RankedMatch {
                image_id: e.descriptor.image_id.clone(),
                distance: image_distance(&query, &e.descriptor, cfg),
            })
            .collect();
        ranked.sort_by(|a, b| {
            a.distance
                .rank_cmp(&b.distance)
                .then_with(|| a.image_id.cmp(&b.image_id))
        });
        ranked.truncate(k);
        ranked
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, RetrievalError> {
        storage::encode(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, RetrievalError> {
        storage::decode(bytes)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), RetrievalError> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, RetrievalError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
