use std::collections::{BTreeMap, BTreeSet};

use super::{ClassId, CleanupConfig, Connectivity, LabelMap};

struct Component {
    label: ClassId,
    size: usize,
    /// Neighbor component -> number of adjacent pixel pairs shared with it.
    adjacent: BTreeMap<usize, usize>,
}

/// Connected components in row-major seed order. Component ids therefore
/// increase with the row-major index of each component's first pixel.
fn label_components(map: &LabelMap, connectivity: Connectivity) -> (Vec<usize>, Vec<Component>) {
    let (w, h) = (map.width(), map.height());
    let labels = map.labels();
    let mut comp_of = vec![usize::MAX; w * h];
    let mut comps = Vec::new();
    let mut stack = Vec::new();
    for seed in 0..w * h {
        if comp_of[seed] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let label = labels[seed];
        let mut size = 0;
        comp_of[seed] = id;
        stack.push(seed);
        while let Some(p) = stack.pop() {
            size += 1;
            let (r, c) = ((p / w) as isize, (p % w) as isize);
            for &(dr, dc) in connectivity.offsets() {
                let (nr, nc) = (r + dr, c + dc);
                if nr < 0 || nc < 0 || nr >= h as isize || nc >= w as isize {
                    continue;
                }
                let q = nr as usize * w + nc as usize;
                if comp_of[q] == usize::MAX && labels[q] == label {
                    comp_of[q] = id;
                    stack.push(q);
                }
            }
        }
        comps.push(Component {
            label,
            size,
            adjacent: BTreeMap::new(),
        });
    }

    for p in 0..w * h {
        let (r, c) = ((p / w) as isize, (p % w) as isize);
        for &(dr, dc) in connectivity.forward_offsets() {
            let (nr, nc) = (r + dr, c + dc);
            if nr < 0 || nc < 0 || nr >= h as isize || nc >= w as isize {
                continue;
            }
            let q = nr as usize * w + nc as usize;
            let (a, b) = (comp_of[p], comp_of[q]);
            if a != b {
                *comps[a].adjacent.entry(b).or_default() += 1;
                *comps[b].adjacent.entry(a).or_default() += 1;
            }
        }
    }
    (comp_of, comps)
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Reassigns every connected component smaller than `cfg.min_blob_size` to
/// the adjacent label it shares the longest boundary with.
///
/// Components are processed smallest first (ties by row-major position of
/// their first pixel), and a merged component immediately absorbs every
/// adjacent component of the target label, so sizes and adjacency stay
/// current after each merge. Ties between candidate labels go to the
/// smaller class id. A map that is a single component is returned as is.
pub fn merge_small_blobs(map: &LabelMap, cfg: &CleanupConfig) -> LabelMap {
    let min_size = cfg.min_blob_size;
    if min_size <= 1 {
        return map.clone();
    }
    let (comp_of, mut comps) = label_components(map, cfg.connectivity);
    let mut parent: Vec<usize> = (0..comps.len()).collect();
    let mut alive = comps.len();
    let mut queue: BTreeSet<(usize, usize)> = comps
        .iter()
        .enumerate()
        .filter(|(_, c)| c.size < min_size)
        .map(|(id, c)| (c.size, id))
        .collect();

    while let Some((_, id)) = queue.pop_first() {
        if alive == 1 {
            break;
        }
        let Some(target) = longest_boundary_label(&comps, id) else {
            continue;
        };
        let mut group: Vec<usize> = comps[id]
            .adjacent
            .keys()
            .copied()
            .filter(|&n| comps[n].label == target)
            .collect();
        group.push(id);
        group.sort_unstable();
        let rep = group[0];

        let mut size = 0;
        let mut adjacent: BTreeMap<usize, usize> = BTreeMap::new();
        for &m in &group {
            let comp = &mut comps[m];
            if comp.size < min_size {
                queue.remove(&(comp.size, m));
            }
            size += comp.size;
            for (n, count) in std::mem::take(&mut comp.adjacent) {
                *adjacent.entry(n).or_default() += count;
            }
        }
        for m in &group {
            adjacent.remove(m);
        }
        for (&n, &count) in &adjacent {
            let neighbor = &mut comps[n].adjacent;
            for m in &group {
                neighbor.remove(m);
            }
            neighbor.insert(rep, count);
        }
        for &m in &group[1..] {
            parent[m] = rep;
        }
        alive -= group.len() - 1;

        let merged = &mut comps[rep];
        merged.label = target;
        merged.size = size;
        merged.adjacent = adjacent;
        if size < min_size {
            queue.insert((size, rep));
        }
    }

    let labels = comp_of
        .iter()
        .map(|&c| comps[find(&mut parent, c)].label)
        .collect();
    LabelMap::new(map.width(), map.height(), labels).expect("dimensions unchanged")
}

fn longest_boundary_label(comps: &[Component], id: usize) -> Option<ClassId> {
    let mut by_label: BTreeMap<ClassId, usize> = BTreeMap::new();
    for (&n, &count) in &comps[id].adjacent {
        *by_label.entry(comps[n].label).or_default() += count;
    }
    // max_by_key keeps the last maximum; iterate descending so ties resolve
    // to the smallest class id.
    by_label
        .into_iter()
        .rev()
        .max_by_key(|&(_, count)| count)
        .map(|(label, _)| label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(min_blob_size: usize, connectivity: Connectivity) -> CleanupConfig {
        CleanupConfig {
            min_blob_size,
            connectivity,
            ..CleanupConfig::default()
        }
    }

    fn component_sizes(map: &LabelMap, connectivity: Connectivity) -> Vec<usize> {
        label_components(map, connectivity)
            .1
            .iter()
            .map(|c| c.size)
            .collect()
    }

    #[test]
    fn uniform_map_is_unchanged() {
        let map = LabelMap::filled(10, 10, 2).unwrap();
        assert_eq!(merge_small_blobs(&map, &cfg(50, Connectivity::Four)), map);
    }

    #[test]
    fn single_pixel_is_absorbed() {
        let mut map = LabelMap::filled(10, 10, 0).unwrap();
        map.set(4, 6, 1);
        let out = merge_small_blobs(&map, &cfg(50, Connectivity::Four));
        assert_eq!(out, LabelMap::filled(10, 10, 0).unwrap());
    }

    #[test]
    fn large_halves_are_unchanged() {
        let map = LabelMap::from_fn(20, 20, |_, c| if c < 10 { 3 } else { 4 }).unwrap();
        assert_eq!(merge_small_blobs(&map, &cfg(50, Connectivity::Four)), map);
    }

    #[test]
    fn small_single_component_map_is_unchanged() {
        let map = LabelMap::filled(3, 3, 1).unwrap();
        assert_eq!(merge_small_blobs(&map, &cfg(50, Connectivity::Four)), map);
    }

    #[test]
    fn merges_into_longest_shared_boundary() {
        let rows = [[1, 1, 1, 1, 1, 1], [1, 9, 9, 9, 2, 2], [2, 2, 2, 2, 2, 2]];
        let map = LabelMap::from_fn(6, 3, |r, c| rows[r][c]).unwrap();
        let out = merge_small_blobs(&map, &cfg(4, Connectivity::Four));
        // 9 touches class 1 on 3 (top) + 1 (left) = 4 edges and class 2 on
        // 3 (bottom) + 1 (right) = 4 edges: a tie, resolved to class 1.
        assert_eq!(out.get(1, 1), 1);
        assert_eq!(out.count(9), 0);
    }

    #[test]
    fn merged_component_is_requeued() {
        // Class 5 (1 px) sits inside a ring of class 6 (8 px) inside class 0.
        // 5 merges into 6 first; the 9-pixel result is still undersized and
        // then merges into 0.
        let mut map = LabelMap::filled(7, 7, 0).unwrap();
        for r in 2..5 {
            for c in 2..5 {
                map.set(r, c, 6);
            }
        }
        map.set(3, 3, 5);
        let out = merge_small_blobs(&map, &cfg(10, Connectivity::Four));
        assert_eq!(out, LabelMap::filled(7, 7, 0).unwrap());
        let out = merge_small_blobs(&map, &cfg(9, Connectivity::Four));
        assert_eq!(out.count(6), 9);
    }

    #[test]
    fn eight_connectivity_joins_diagonals() {
        let mut map = LabelMap::filled(8, 8, 0).unwrap();
        for i in 0..8 {
            map.set(i, i, 1);
        }
        let four = merge_small_blobs(&map, &cfg(5, Connectivity::Four));
        assert_eq!(four.count(1), 0);
        // Under 8-connectivity the diagonal is one 8-pixel component, and the
        // two class-0 triangles touch diagonally into one 56-pixel component.
        let eight = merge_small_blobs(&map, &cfg(5, Connectivity::Eight));
        assert_eq!(eight, map);
    }

    fn arb_map() -> impl Strategy<Value = LabelMap> {
        (2usize..14, 2usize..14).prop_flat_map(|(w, h)| {
            proptest::collection::vec(0u16..4, w * h)
                .prop_map(move |labels| LabelMap::new(w, h, labels).unwrap())
        })
    }

    proptest! {
        #[test]
        fn output_components_meet_threshold(map in arb_map(), min in 1usize..12, eight in any::<bool>()) {
            let conn = if eight { Connectivity::Eight } else { Connectivity::Four };
            let out = merge_small_blobs(&map, &cfg(min, conn));
            let sizes = component_sizes(&out, conn);
            prop_assert!(sizes.len() == 1 || sizes.iter().all(|&s| s >= min));
            prop_assert_eq!(out.width(), map.width());
            prop_assert_eq!(out.height(), map.height());
            prop_assert!(out.classes().is_subset(&map.classes()));
        }

        #[test]
        fn merging_is_idempotent(map in arb_map(), min in 1usize..12, eight in any::<bool>()) {
            let conn = if eight { Connectivity::Eight } else { Connectivity::Four };
            let once = merge_small_blobs(&map, &cfg(min, conn));
            let twice = merge_small_blobs(&once, &cfg(min, conn));
            prop_assert_eq!(once, twice);
        }
    }
}
