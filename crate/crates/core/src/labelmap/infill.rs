use super::{CleanupConfig, LabelMap, LabelMapError};

const NONE: usize = usize::MAX;

/// Replaces every dynamic-class pixel by the label of the nearest
/// non-dynamic pixel (Euclidean distance between pixel centers). Equidistant
/// sources are resolved in favor of the one that comes first in row-major
/// order.
///
/// Exact separable transform: a vertical pass finds, per column, the closest
/// source row for every pixel; a horizontal pass then scans columns outward
/// from each dynamic pixel until no column can beat the best distance.
pub fn remove_dynamic_classes(
    map: &LabelMap,
    cfg: &CleanupConfig,
) -> Result<LabelMap, LabelMapError> {
    let (w, h) = (map.width(), map.height());
    let labels = map.labels();
    let is_dynamic: Vec<bool> = labels
        .iter()
        .map(|l| cfg.dynamic_classes.contains(l))
        .collect();
    if !is_dynamic.iter().any(|&d| d) {
        return Ok(map.clone());
    }
    if is_dynamic.iter().all(|&d| d) {
        return Err(LabelMapError::AllDynamic);
    }

    // nearest[r * w + c] = row of the closest source in column c, preferring
    // the upper one on ties (it has the smaller row-major index).
    let mut nearest = vec![NONE; w * h];
    for c in 0..w {
        let mut above = NONE;
        for r in 0..h {
            if !is_dynamic[r * w + c] {
                above = r;
            }
            nearest[r * w + c] = above;
        }
        let mut below = NONE;
        for r in (0..h).rev() {
            if !is_dynamic[r * w + c] {
                below = r;
            }
            let idx = r * w + c;
            let up = nearest[idx];
            if below != NONE && (up == NONE || below - r < r - up) {
                nearest[idx] = below;
            }
        }
    }

    let mut out = labels.to_vec();
    for r in 0..h {
        for c in 0..w {
            if !is_dynamic[r * w + c] {
                continue;
            }
            let mut best: Option<(usize, usize)> = None;
            let consider = |j: usize, best: &mut Option<(usize, usize)>| {
                let src_row = nearest[r * w + j];
                if src_row == NONE {
                    return;
                }
                let key = (sq(r, src_row) + sq(c, j), src_row * w + j);
                if best.is_none_or(|b| key < b) {
                    *best = Some(key);
                }
            };
            for offset in 0..w {
                if best.is_some_and(|(d, _)| offset * offset > d) {
                    break;
                }
                if offset <= c {
                    consider(c - offset, &mut best);
                }
                if offset > 0 && c + offset < w {
                    consider(c + offset, &mut best);
                }
            }
            let (_, src) = best.expect("at least one non-dynamic pixel exists");
            out[r * w + c] = labels[src];
        }
    }
    Ok(LabelMap::new(w, h, out).expect("dimensions unchanged"))
}

#[inline]
fn sq(a: usize, b: usize) -> usize {
    let d = a.abs_diff(b);
    d * d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labelmap::ClassId;
    use proptest::prelude::*;

    fn cfg(dynamic: &[ClassId]) -> CleanupConfig {
        CleanupConfig {
            dynamic_classes: dynamic.iter().copied().collect(),
            ..CleanupConfig::default()
        }
    }

    /// Exhaustive nearest-source search over every non-dynamic pixel.
    fn brute_force(map: &LabelMap, cfg: &CleanupConfig) -> LabelMap {
        let (w, h) = (map.width(), map.height());
        let sources: Vec<usize> = (0..w * h)
            .filter(|&i| !cfg.dynamic_classes.contains(&map.labels()[i]))
            .collect();
        LabelMap::from_fn(w, h, |r, c| {
            let here = map.get(r, c);
            if !cfg.dynamic_classes.contains(&here) {
                return here;
            }
            let src = sources
                .iter()
                .copied()
                .min_by_key(|&i| (sq(r, i / w) + sq(c, i % w), i))
                .unwrap();
            map.labels()[src]
        })
        .unwrap()
    }

    #[test]
    fn no_dynamic_pixels_is_identity() {
        let map = LabelMap::from_fn(4, 3, |r, c| (r * 4 + c) as ClassId % 3).unwrap();
        assert_eq!(remove_dynamic_classes(&map, &cfg(&[7])).unwrap(), map);
    }

    #[test]
    fn single_fill_source() {
        let map = LabelMap::from_fn(5, 5, |_, c| if c == 0 { 3 } else { 7 }).unwrap();
        let out = remove_dynamic_classes(&map, &cfg(&[7])).unwrap();
        assert_eq!(out, LabelMap::filled(5, 5, 3).unwrap());
    }

    #[test]
    fn equidistant_tie_takes_row_major_first() {
        let map = LabelMap::new(3, 1, vec![1, 7, 2]).unwrap();
        let out = remove_dynamic_classes(&map, &cfg(&[7])).unwrap();
        assert_eq!(out, brute_force(&map, &cfg(&[7])));
        assert_eq!(out.labels(), &[1, 1, 2]);
    }

    #[test]
    fn vertical_tie_takes_upper_source() {
        let map = LabelMap::new(1, 3, vec![4, 7, 5]).unwrap();
        let out = remove_dynamic_classes(&map, &cfg(&[7])).unwrap();
        assert_eq!(out.labels(), &[4, 4, 5]);
    }

    #[test]
    fn diagonal_tie_prefers_earlier_row() {
        // Dynamic pixel at (1,1); sources at (0,2) and (2,0) both at sqrt(2).
        let map = LabelMap::new(3, 3, vec![7, 7, 1, 7, 7, 7, 2, 7, 7]).unwrap();
        let out = remove_dynamic_classes(&map, &cfg(&[7])).unwrap();
        assert_eq!(out.get(1, 1), 1);
        assert_eq!(out, brute_force(&map, &cfg(&[7])));
    }

    #[test]
    fn all_dynamic_is_an_error() {
        let map = LabelMap::filled(4, 4, 7).unwrap();
        assert_eq!(
            remove_dynamic_classes(&map, &cfg(&[7, 8])),
            Err(LabelMapError::AllDynamic)
        );
    }

    fn arb_map() -> impl Strategy<Value = LabelMap> {
        (1usize..16, 1usize..16).prop_flat_map(|(w, h)| {
            proptest::collection::vec(0u16..5, w * h)
                .prop_map(move |labels| LabelMap::new(w, h, labels).unwrap())
        })
    }

    proptest! {
        #[test]
        fn matches_exhaustive_search(map in arb_map()) {
            let cfg = cfg(&[3, 4]);
            match remove_dynamic_classes(&map, &cfg) {
                Ok(out) => {
                    prop_assert!(out.labels().iter().all(|l| !cfg.dynamic_classes.contains(l)));
                    prop_assert_eq!(out, brute_force(&map, &cfg));
                }
                Err(e) => {
                    prop_assert_eq!(e, LabelMapError::AllDynamic);
                    prop_assert!(map.labels().iter().all(|l| cfg.dynamic_classes.contains(l)));
                }
            }
        }
    }
}
