//! Global image descriptors and the assignment-based image distance.

mod assignment;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

pub use assignment::{solve_assignment, CostMatrix};

use crate::labelmap::ClassId;
use crate::wavelet::EdgeDescriptor;

/// All edge descriptors of one image, grouped by class.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageDescriptor {
    pub image_id: String,
    edges_by_class: BTreeMap<ClassId, Vec<EdgeDescriptor>>,
}

impl ImageDescriptor {
    /// Groups descriptors by their class, keeping input order within a class.
    pub fn new(
        image_id: impl Into<String>,
        edges: impl IntoIterator<Item = EdgeDescriptor>,
    ) -> Self {
        let mut edges_by_class: BTreeMap<ClassId, Vec<EdgeDescriptor>> = BTreeMap::new();
        for e in edges {
            edges_by_class.entry(e.class_id).or_default().push(e);
        }
        Self {
            image_id: image_id.into(),
            edges_by_class,
        }
    }

    pub fn edges_by_class(&self) -> &BTreeMap<ClassId, Vec<EdgeDescriptor>> {
        &self.edges_by_class
    }

    pub fn class(&self, class: ClassId) -> &[EdgeDescriptor] {
        self.edges_by_class.get(&class).map_or(&[], Vec::as_slice)
    }

    /// Every descriptor in class order.
    pub fn edges(&self) -> impl Iterator<Item = &EdgeDescriptor> {
        self.edges_by_class.values().flatten()
    }

    pub fn edge_count(&self) -> usize {
        self.edges_by_class.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.edge_count() == 0
    }

    pub fn to_storage_precision(&self) -> Self {
        Self {
            image_id: self.image_id.clone(),
            edges_by_class: self
                .edges_by_class
                .iter()
                .map(|(&c, v)| {
                    (
                        c,
                        v.iter().map(EdgeDescriptor::to_storage_precision).collect(),
                    )
                })
                .collect(),
        }
    }
}

/// Mean matched-descriptor distance, or incomparable when the two images
/// share no class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageDistance {
    pub value: Option<f64>,
    pub matched_pairs: usize,
}

impl ImageDistance {
    pub const INCOMPARABLE: ImageDistance = ImageDistance {
        value: None,
        matched_pairs: 0,
    };

    pub fn is_comparable(&self) -> bool {
        self.value.is_some()
    }

    /// Finite values ascending, incomparable last.
    pub fn rank_cmp(&self, other: &Self) -> Ordering {
        match (self.value, other.value) {
            (Some(a), Some(b)) => a.total_cmp(&b),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        }
    }
}

impl fmt::Display for ImageDistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value {
            Some(v) => write!(f, "{v}"),
            None => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MatchConfig {
    /// Added to the distance sum for every edge left unmatched, in either
    /// image, before dividing by the number of matched pairs. Zero ignores
    /// unmatched edges entirely.
    pub unmatched_penalty: f64,
}

/// Distance matrix between two descriptor sets of the same class.
pub fn descriptor_costs(a: &[EdgeDescriptor], b: &[EdgeDescriptor]) -> CostMatrix {
    CostMatrix::from_fn(a.len(), b.len(), |i, j| a[i].distance(&b[j]))
}

/// For every class present in both images, edges are paired by solving a
/// linear assignment on Euclidean descriptor distances. The distance is the
/// mean over all matched pairs of all shared classes.
pub fn image_distance(
    a: &ImageDescriptor,
    b: &ImageDescriptor,
    cfg: &MatchConfig,
) -> ImageDistance {
    let mut matched = Vec::new();
    let mut unmatched = 0usize;
    for (class, ea) in &a.edges_by_class {
        let eb = b.class(*class);
        if ea.is_empty() || eb.is_empty() {
            unmatched += ea.len();
            continue;
        }
        let costs = descriptor_costs(ea, eb);
        let pairs = solve_assignment(&costs);
        unmatched += ea.len() + eb.len() - 2 * pairs.len();
        matched.extend(pairs.into_iter().map(|(i, j)| costs.get(i, j)));
    }
    unmatched += b
        .edges_by_class
        .iter()
        .filter(|(c, _)| a.class(**c).is_empty())
        .map(|(_, v)| v.len())
        .sum::<usize>();

    if matched.is_empty() {
        return ImageDistance::INCOMPARABLE;
    }
    // Summing in sorted order makes d(a, b) and d(b, a) bit-identical
    // whenever both sides pick the same pairs.
    matched.sort_by(f64::total_cmp);
    let sum: f64 = matched.iter().sum::<f64>() + cfg.unmatched_penalty * unmatched as f64;
    ImageDistance {
        value: Some(sum / matched.len() as f64),
        matched_pairs: matched.len(),
    }
}
