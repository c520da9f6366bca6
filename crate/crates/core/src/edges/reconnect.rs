use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashSet};

use super::{sort_edges, EdgeExtractionConfig, Pixel, SemanticEdge};
use crate::labelmap::ClassId;

fn dist2(a: Pixel, b: Pixel) -> usize {
    let dr = a.0.abs_diff(b.0);
    let dc = a.1.abs_diff(b.1);
    dr * dr + dc * dc
}

fn endpoints(e: &SemanticEdge) -> [Pixel; 2] {
    [e.points[0], *e.points.last().unwrap()]
}

/// Joins `a` and `b` at endpoints `at_a` / `at_b`, or returns `None` when the
/// result would visit a pixel twice.
fn join(a: &SemanticEdge, at_a: Pixel, b: &SemanticEdge, at_b: Pixel) -> Option<SemanticEdge> {
    let mut head = a.points.clone();
    if head[0] == at_a {
        head.reverse();
    }
    let mut tail = b.points.clone();
    if tail[0] != at_b {
        tail.reverse();
    }
    if head.last() == tail.first() {
        tail.remove(0);
    }
    let seen: HashSet<Pixel> = head.iter().copied().collect();
    let mut closed = false;
    for (i, p) in tail.iter().enumerate() {
        if seen.contains(p) {
            if i + 1 == tail.len() && *p == head[0] {
                closed = true;
            } else {
                return None;
            }
        }
    }
    head.extend(tail);
    if closed {
        head.pop();
    }
    let mut edge = SemanticEdge {
        class_id: a.class_id,
        points: head,
        closed,
    };
    edge.canonicalize();
    Some(edge)
}

/// Candidate join, ordered by squared distance and then by edge ids and
/// endpoints so the heap order is total.
type Candidate = Reverse<(usize, usize, Pixel, usize, Pixel)>;

fn reconnect_class(edges: Vec<SemanticEdge>, max_d2: usize) -> Vec<SemanticEdge> {
    let mut slots: Vec<Option<SemanticEdge>> = edges.into_iter().map(Some).collect();
    let mut heap: BinaryHeap<Candidate> = BinaryHeap::new();

    let push_pairs =
        |heap: &mut BinaryHeap<Candidate>, slots: &[Option<SemanticEdge>], id: usize| {
            let Some(e) = &slots[id] else { return };
            if e.closed {
                return;
            }
            for (other, o) in slots.iter().enumerate() {
                let Some(o) = o else { continue };
                if other == id || o.closed {
                    continue;
                }
                for pa in endpoints(e) {
                    for pb in endpoints(o) {
                        let d2 = dist2(pa, pb);
                        if d2 <= max_d2 {
                            let cand = if id < other {
                                (d2, id, pa, other, pb)
                            } else {
                                (d2, other, pb, id, pa)
                            };
                            heap.push(Reverse(cand));
                        }
                    }
                }
            }
        };

    for id in 0..slots.len() {
        let Some(e) = &slots[id] else { continue };
        if e.closed {
            continue;
        }
        // each unordered pair once
        for (other, o) in slots.iter().enumerate().skip(id + 1) {
            let o = o.as_ref().unwrap();
            if o.closed {
                continue;
            }
            for pa in endpoints(e) {
                for pb in endpoints(o) {
                    let d2 = dist2(pa, pb);
                    if d2 <= max_d2 {
                        heap.push(Reverse((d2, id, pa, other, pb)));
                    }
                }
            }
        }
    }

    while let Some(Reverse((_, ia, pa, ib, pb))) = heap.pop() {
        let (Some(a), Some(b)) = (&slots[ia], &slots[ib]) else {
            continue;
        };
        let Some(joined) = join(a, pa, b, pb) else {
            continue;
        };
        slots[ia] = None;
        slots[ib] = None;
        slots.push(Some(joined));
        let id = slots.len() - 1;
        push_pairs(&mut heap, &slots, id);
    }
    slots.into_iter().flatten().collect()
}

/// Greedily joins open edges of the same class whose endpoints lie within
/// `cfg.min_neighbour_gap` of each other, closest pair first, until no pair
/// qualifies. A join that would visit a pixel twice is skipped; a join that
/// brings an edge's two ends together closes it. Closed edges never take
/// part. Output is canonically oriented and sorted.
pub fn reconnect_edges(edges: Vec<SemanticEdge>, cfg: &EdgeExtractionConfig) -> Vec<SemanticEdge> {
    let gap = cfg.min_neighbour_gap.max(0.0);
    // largest integer squared distance not exceeding gap^2
    let max_d2 = (gap * gap + 1e-9).floor() as usize;

    let mut by_class: BTreeMap<ClassId, Vec<SemanticEdge>> = BTreeMap::new();
    for e in edges {
        by_class.entry(e.class_id).or_default().push(e);
    }
    let mut out: Vec<SemanticEdge> = by_class
        .into_values()
        .flat_map(|mut class_edges| {
            sort_edges(&mut class_edges);
            reconnect_class(class_edges, max_d2)
        })
        .collect();
    sort_edges(&mut out);
    out
}
