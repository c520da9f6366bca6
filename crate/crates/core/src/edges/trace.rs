//! Boundary tracing.
//!
//! Mask pixels are linked with m-adjacency (mixed 4/8 adjacency): 4-neighbors
//! are always linked, diagonal neighbors only when no shared 4-neighbor is
//! set. This removes the redundant diagonal shortcuts around staircase
//! corners, so a pixel with more than two links is a genuine junction.
//! Chains are then walked between junctions/endpoints; components without
//! any such node are simple loops.

use std::collections::HashSet;

use super::{sort_edges, BoundaryMask, Pixel, SemanticEdge};

/// Moore neighborhood, clockwise from north.
const MOORE: [(isize, isize); 8] = [
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
];

fn m_neighbors(mask: &BoundaryMask, (r, c): Pixel) -> impl Iterator<Item = Pixel> + '_ {
    let (r, c) = (r as isize, c as isize);
    MOORE.iter().filter_map(move |&(dr, dc)| {
        let (nr, nc) = (r + dr, c + dc);
        if !mask.get_signed(nr, nc) {
            return None;
        }
        let diagonal = dr != 0 && dc != 0;
        if diagonal && (mask.get_signed(r + dr, c) || mask.get_signed(r, c + dc)) {
            return None;
        }
        Some((nr as usize, nc as usize))
    })
}

fn link(a: Pixel, b: Pixel) -> (Pixel, Pixel) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn trace_mask(mask: &BoundaryMask, out: &mut Vec<SemanticEdge>) {
    let w = mask.width();
    let neighbors: Vec<Vec<Pixel>> = {
        let mut v = vec![Vec::new(); w * mask.height()];
        for p in mask.pixels() {
            v[p.0 * w + p.1] = m_neighbors(mask, p).collect();
        }
        v
    };
    let degree = |p: Pixel| neighbors[p.0 * w + p.1].len();
    let mut used: HashSet<(Pixel, Pixel)> = HashSet::new();
    let mut on_chain = vec![false; neighbors.len()];

    let mut emit = |mut points: Vec<Pixel>, closed: bool| {
        if points.len() >= 2 {
            let mut edge = SemanticEdge {
                class_id: mask.class_id,
                points: std::mem::take(&mut points),
                closed,
            };
            edge.canonicalize();
            out.push(edge);
        }
    };

    // Open arcs (and loops through a junction) start and end at nodes.
    let nodes: Vec<Pixel> = mask.pixels().filter(|&p| degree(p) != 2).collect();
    for &node in &nodes {
        on_chain[node.0 * w + node.1] = true;
        for &first in &neighbors[node.0 * w + node.1] {
            if !used.insert(link(node, first)) {
                continue;
            }
            let mut points = vec![node, first];
            let (mut prev, mut cur) = (node, first);
            while degree(cur) == 2 {
                on_chain[cur.0 * w + cur.1] = true;
                let next = *neighbors[cur.0 * w + cur.1]
                    .iter()
                    .find(|&&n| n != prev)
                    .expect("degree-2 pixel has two distinct neighbors");
                used.insert(link(cur, next));
                points.push(next);
                prev = cur;
                cur = next;
            }
            if cur == node {
                points.pop();
                emit(points, true);
            } else {
                emit(points, false);
            }
        }
    }

    // What is left are components where every pixel has degree 2.
    for start in mask.pixels() {
        if on_chain[start.0 * w + start.1] {
            continue;
        }
        let mut points = vec![start];
        on_chain[start.0 * w + start.1] = true;
        let (mut prev, mut cur) = (start, neighbors[start.0 * w + start.1][0]);
        while cur != start {
            on_chain[cur.0 * w + cur.1] = true;
            points.push(cur);
            let next = *neighbors[cur.0 * w + cur.1]
                .iter()
                .find(|&&n| n != prev)
                .expect("degree-2 pixel has two distinct neighbors");
            prev = cur;
            cur = next;
        }
        emit(points, true);
    }
}

/// Traces every boundary mask into ordered edges.
///
/// Each maximal chain of degree-2 pixels, together with the junction or
/// endpoint pixels at its ends, becomes one edge; junction pixels are shared
/// by all arcs meeting there. Loops with no junction become closed edges.
/// Single isolated pixels yield nothing. The result is canonically oriented
/// and sorted by class, then by smallest point.
pub fn trace_edges<'a>(masks: impl IntoIterator<Item = &'a BoundaryMask>) -> Vec<SemanticEdge> {
    let mut edges = Vec::new();
    for mask in masks {
        trace_mask(mask, &mut edges);
    }
    sort_edges(&mut edges);
    edges
}
