//! Creation-order MMR position algebra.
//!
//! Persistent nodes are numbered in the order they are created: each leaf
//! append pushes the leaf itself, then any internal nodes produced by
//! carry-merging equal-height mountains. Generated (peak-folding) nodes are
//! never numbered. For an 11-leaf MMR the layout is:
//!
//! ```text
//! height 3:                       14
//! height 2:           6                       13
//! height 1:     2           5           9            12         17
//! height 0:  0     1     3     4     7     8     10     11   15    16   18
//! leaf #      0     1     2     3     4     5      6      7    8     9   10
//! ```
//!
//! Peaks for 11 = 0b1011 leaves: {14, 17, 18}.

/// Position of leaf `i` (0-based): `2*i - popcount(i)`.
pub fn leaf_pos(leaf_index: u64) -> u64 {
    2 * leaf_index - u64::from(leaf_index.count_ones())
}

/// Total persistent node count for `leaf_count` leaves:
/// `2*n - popcount(n)`.
pub fn node_count(leaf_count: u64) -> u64 {
    if leaf_count == 0 {
        0
    } else {
        2 * leaf_count - u64::from(leaf_count.count_ones())
    }
}

/// Height of the node at creation-order position `pos` (leaves are height 0).
///
/// Standard algorithm: convert to 1-indexed, then repeatedly strip the most
/// significant bit until the value is all ones; the final popcount minus one
/// is the height.
pub fn pos_height(pos: u64) -> u32 {
    let mut v = pos + 1;
    while !is_all_ones(v) {
        let msb = 1u64 << (63 - v.leading_zeros());
        v = v - msb + 1;
    }
    v.count_ones() - 1
}

fn is_all_ones(v: u64) -> bool {
    v != 0 && v & (v + 1) == 0
}

/// Position of the root of the perfect subtree of `height` whose first leaf
/// is `first_leaf`. The root is created `height` merges after its last leaf.
pub fn subtree_root_pos(first_leaf: u64, height: u32) -> u64 {
    let last_leaf = first_leaf + (1u64 << height) - 1;
    leaf_pos(last_leaf) + u64::from(height)
}

/// Leaf interval `(first_leaf, height)` covered by the node at `pos`.
pub fn interval_for_pos(pos: u64) -> (u64, u32) {
    let height = pos_height(pos);
    let last_leaf_pos = pos - u64::from(height);
    // leaf_pos is strictly increasing; invert it by binary search.
    let (mut lo, mut hi) = (0u64, last_leaf_pos);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if leaf_pos(mid) < last_leaf_pos {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    debug_assert_eq!(leaf_pos(lo), last_leaf_pos);
    let first_leaf = lo + 1 - (1u64 << height);
    (first_leaf, height)
}

/// Mountain decomposition of an MMR with `leaf_count` leaves, left to right:
/// `(root position, first leaf, height)` per mountain.
pub fn peaks(leaf_count: u64) -> Vec<(u64, u64, u32)> {
    let mut out = Vec::new();
    let mut first_leaf = 0u64;
    for height in (0..64).rev() {
        if leaf_count & (1u64 << height) != 0 {
            out.push((subtree_root_pos(first_leaf, height), first_leaf, height));
            first_leaf += 1u64 << height;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leaf_positions_first_eleven() {
        let expect = [0u64, 1, 3, 4, 7, 8, 10, 11, 15, 16, 18];
        for (i, &p) in expect.iter().enumerate() {
            assert_eq!(leaf_pos(i as u64), p);
        }
    }

    #[test]
    fn heights_eleven_leaf_layout() {
        let by_height: [(u64, u32); 19] = [
            (0, 0),
            (1, 0),
            (2, 1),
            (3, 0),
            (4, 0),
            (5, 1),
            (6, 2),
            (7, 0),
            (8, 0),
            (9, 1),
            (10, 0),
            (11, 0),
            (12, 1),
            (13, 2),
            (14, 3),
            (15, 0),
            (16, 0),
            (17, 1),
            (18, 0),
        ];
        for (pos, h) in by_height {
            assert_eq!(pos_height(pos), h, "pos {pos}");
        }
    }

    #[test]
    fn peaks_eleven_leaves() {
        let p: Vec<u64> = peaks(11).iter().map(|x| x.0).collect();
        assert_eq!(p, vec![14, 17, 18]);
    }

    #[test]
    fn peak_count_is_popcount() {
        for n in 1..600u64 {
            assert_eq!(peaks(n).len() as u32, n.count_ones());
        }
    }

    #[test]
    fn interval_inversion() {
        for n in [11u64, 64, 127, 200] {
            for pos in 0..node_count(n) {
                let (first, h) = interval_for_pos(pos);
                assert_eq!(subtree_root_pos(first, h), pos);
            }
        }
    }

    #[test]
    fn node_count_matches_append_model() {
        // Appending leaf i creates 1 + trailing_ones(i) nodes.
        let mut total = 0u64;
        for i in 0..1000u64 {
            total += 1 + u64::from(i.trailing_ones());
            assert_eq!(node_count(i + 1), total);
        }
    }
}
