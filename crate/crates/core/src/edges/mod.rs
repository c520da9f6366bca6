//! Semantic edges: per-class boundary detection, tracing into ordered
//! pixel chains, short-edge filtering and endpoint reconnection.

mod reconnect;
mod trace;

use std::collections::BTreeMap;
use std::io::{self, Write};

use crate::labelmap::{ClassId, LabelMap};

pub use reconnect::reconnect_edges;
pub use trace::trace_edges;

/// `(row, col)` pixel coordinate. Ordering is lexicographic.
pub type Pixel = (usize, usize);

pub const DEFAULT_MIN_EDGE_SIZE: usize = 50;
pub const DEFAULT_MIN_NEIGHBOUR_GAP: f64 = 5.0;

/// Ordered chain of boundary pixels of one class.
///
/// Traced edges have 8-adjacent consecutive points. Edges produced by
/// [`reconnect_edges`] may contain jumps of at most the configured gap where
/// two fragments were joined.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SemanticEdge {
    pub class_id: ClassId,
    pub points: Vec<Pixel>,
    pub closed: bool,
}

impl SemanticEdge {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn min_point(&self) -> Pixel {
        *self.points.iter().min().expect("edges are never empty")
    }

    /// Puts the edge in canonical orientation: open edges start at their
    /// lexicographically smaller endpoint; closed edges run clockwise (in
    /// image coordinates, row axis pointing down) from their smallest point.
    pub fn canonicalize(&mut self) {
        if self.points.len() < 2 {
            return;
        }
        if !self.closed {
            if self.points.last() < self.points.first() {
                self.points.reverse();
            }
            return;
        }
        let n = self.points.len();
        let start = (0..n).min_by_key(|&i| self.points[i]).unwrap();
        let area = twice_signed_area(&self.points);
        let reverse = match area.cmp(&0) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => {
                self.points[(start + n - 1) % n] < self.points[(start + 1) % n]
            }
        };
        self.points.rotate_left(start);
        if reverse {
            self.points[1..].reverse();
        }
    }

    fn sort_key(&self) -> (ClassId, Pixel) {
        (self.class_id, self.min_point())
    }
}

/// Shoelace sum with x = column and y = row. Positive for loops that are
/// clockwise on screen.
fn twice_signed_area(points: &[Pixel]) -> i64 {
    let n = points.len();
    (0..n)
        .map(|i| {
            let (y0, x0) = points[i];
            let (y1, x1) = points[(i + 1) % n];
            x0 as i64 * y1 as i64 - x1 as i64 * y0 as i64
        })
        .sum()
}

/// Sorts edges by class, then smallest point, then full point sequence.
pub fn sort_edges(edges: &mut [SemanticEdge]) {
    edges.sort_by(|a, b| {
        a.sort_key()
            .cmp(&b.sort_key())
            .then_with(|| a.points.cmp(&b.points))
            .then_with(|| a.closed.cmp(&b.closed))
    });
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeExtractionConfig {
    /// Minimum number of points an edge must have to be kept (inclusive).
    pub min_edge_size: usize,
    /// Maximum endpoint distance, in pixels, for joining two edges.
    pub min_neighbour_gap: f64,
}

impl Default for EdgeExtractionConfig {
    fn default() -> Self {
        Self {
            min_edge_size: DEFAULT_MIN_EDGE_SIZE,
            min_neighbour_gap: DEFAULT_MIN_NEIGHBOUR_GAP,
        }
    }
}

/// Binary mask of the boundary pixels of one class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryMask {
    pub class_id: ClassId,
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BoundaryMask {
    pub fn new(class_id: ClassId, width: usize, height: usize) -> Self {
        Self {
            class_id,
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    /// Out-of-range coordinates read as unset.
    #[inline]
    pub(crate) fn get_signed(&self, row: isize, col: isize) -> bool {
        row >= 0
            && col >= 0
            && (row as usize) < self.height
            && (col as usize) < self.width
            && self.bits[row as usize * self.width + col as usize]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn pixels(&self) -> impl Iterator<Item = Pixel> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| (i / self.width, i % self.width))
    }
}

/// For every class present in `map`, marks the pixels of that class that
/// have at least one 4-neighbor of a different class inside the map.
pub fn detect_boundaries(map: &LabelMap) -> BTreeMap<ClassId, BoundaryMask> {
    let (w, h) = (map.width(), map.height());
    let mut masks: BTreeMap<ClassId, BoundaryMask> = map
        .classes()
        .into_iter()
        .map(|c| (c, BoundaryMask::new(c, w, h)))
        .collect();
    for r in 0..h {
        for c in 0..w {
            let here = map.get(r, c);
            let differs = (r > 0 && map.get(r - 1, c) != here)
                || (r + 1 < h && map.get(r + 1, c) != here)
                || (c > 0 && map.get(r, c - 1) != here)
                || (c + 1 < w && map.get(r, c + 1) != here);
            if differs {
                masks.get_mut(&here).expect("class present").set(r, c, true);
            }
        }
    }
    masks
}

/// Keeps edges with at least `cfg.min_edge_size` points, preserving order.
pub fn filter_short_edges(
    edges: Vec<SemanticEdge>,
    cfg: &EdgeExtractionConfig,
) -> Vec<SemanticEdge> {
    edges
        .into_iter()
        .filter(|e| e.len() >= cfg.min_edge_size)
        .collect()
}

/// Boundary detection, tracing, filtering, reconnection and a final
/// filtering pass so that joined fragments can survive the size threshold.
pub fn extract_edges(map: &LabelMap, cfg: &EdgeExtractionConfig) -> Vec<SemanticEdge> {
    let masks = detect_boundaries(map);
    let traced = trace_edges(masks.values());
    let kept = filter_short_edges(traced, cfg);
    let joined = reconnect_edges(kept, cfg);
    filter_short_edges(joined, cfg)
}

/// Debug dump: one edge per line, `class_id closed n r1 c1 r2 c2 ...`.
pub fn write_edges(edges: &[SemanticEdge], out: &mut impl Write) -> io::Result<()> {
    for e in edges {
        write!(
            out,
            "{} {} {}",
            e.class_id,
            u8::from(e.closed),
            e.points.len()
        )?;
        for (r, c) in &e.points {
            write!(out, " {r} {c}")?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask_pixels(mask: &BoundaryMask) -> Vec<Pixel> {
        mask.pixels().collect()
    }

    #[test]
    fn uniform_map_has_no_boundaries() {
        let map = LabelMap::filled(6, 4, 3).unwrap();
        let masks = detect_boundaries(&map);
        assert_eq!(masks.len(), 1);
        assert_eq!(masks[&3].count(), 0);
    }

    #[test]
    fn vertical_split_marks_adjacent_columns() {
        let map = LabelMap::from_fn(4, 4, |_, c| if c < 2 { 1 } else { 2 }).unwrap();
        let masks = detect_boundaries(&map);
        assert_eq!(
            mask_pixels(&masks[&1]),
            (0..4).map(|r| (r, 1)).collect::<Vec<_>>()
        );
        assert_eq!(
            mask_pixels(&masks[&2]),
            (0..4).map(|r| (r, 2)).collect::<Vec<_>>()
        );
    }

    #[test]
    fn isolated_pixel_and_its_cross() {
        let mut map = LabelMap::filled(5, 5, 1).unwrap();
        map.set(2, 2, 2);
        let masks = detect_boundaries(&map);
        assert_eq!(mask_pixels(&masks[&2]), vec![(2, 2)]);

        // Hand enumeration: a class-1 pixel is on the boundary iff one of
        // its 4-neighbors is (2,2).
        let expected: Vec<Pixel> = (0..5)
            .flat_map(|r| (0..5).map(move |c| (r, c)))
            .filter(|&(r, c)| map.get(r, c) == 1 && r.abs_diff(2) + c.abs_diff(2) == 1)
            .collect();
        assert_eq!(expected, vec![(1, 2), (2, 1), (2, 3), (3, 2)]);
        assert_eq!(mask_pixels(&masks[&1]), expected);
    }

    #[test]
    fn filter_is_inclusive_and_order_preserving() {
        let edge = |n: usize| SemanticEdge {
            class_id: 0,
            points: (0..n).map(|c| (0, c)).collect(),
            closed: false,
        };
        let cfg = EdgeExtractionConfig {
            min_edge_size: 50,
            ..Default::default()
        };
        let out = filter_short_edges(vec![edge(10), edge(50), edge(120)], &cfg);
        assert_eq!(
            out.iter().map(SemanticEdge::len).collect::<Vec<_>>(),
            [50, 120]
        );
        assert!(filter_short_edges(vec![], &cfg).is_empty());
        assert!(filter_short_edges(vec![edge(3), edge(49)], &cfg).is_empty());
    }

    #[test]
    fn canonical_orientation() {
        let mut open = SemanticEdge {
            class_id: 0,
            points: vec![(3, 3), (2, 2), (1, 1)],
            closed: false,
        };
        open.canonicalize();
        assert_eq!(open.points, vec![(1, 1), (2, 2), (3, 3)]);

        // Counter-clockwise square starting mid-way.
        let mut ring = SemanticEdge {
            class_id: 0,
            points: vec![(1, 1), (0, 1), (0, 0), (1, 0)],
            closed: true,
        };
        ring.canonicalize();
        assert_eq!(ring.points, vec![(0, 0), (0, 1), (1, 1), (1, 0)]);
    }

    #[test]
    fn dump_format() {
        let edges = vec![
            SemanticEdge {
                class_id: 4,
                points: vec![(0, 1), (1, 2)],
                closed: false,
            },
            SemanticEdge {
                class_id: 7,
                points: vec![(0, 0), (0, 1), (1, 1), (1, 0)],
                closed: true,
            },
        ];
        let mut buf = Vec::new();
        write_edges(&edges, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "4 0 2 0 1 1 2\n7 1 4 0 0 0 1 1 1 1 0\n"
        );
    }
}
