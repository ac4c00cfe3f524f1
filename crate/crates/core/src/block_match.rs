//! Hamming-distance block matching between the two past slices.
//!
//! The reference block is read from slice `t-d` at the event location. For
//! each of the nine motion directions the candidate is the block in slice
//! `t-2d` that the reference would have come from: for motion offset
//! `(ox, oy)` the candidate is centred at `(x - ox, y - oy)`. Distances and
//! the winner are therefore indexed by motion direction.

use crate::error::{Error, Result};
use crate::event_model::{BorderPolicy, Direction, FlowConfig};
use crate::slice_store::{row_mask, BlockBits, SliceTriple, MAX_BLOCK_ROWS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchResult {
    pub distances: [u32; 9],
    pub winner: Direction,
    pub tie: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoMatch {
    /// A block crossed the sensor edge under [`BorderPolicy::SkipEvent`].
    Border,
    /// The reference block had fewer set pixels than `min_active_pixels`.
    Sparse,
}

/// Number of differing pixels, i.e. the SAD of two binary blocks.
pub fn hamming_distance(a: &BlockBits, b: &BlockBits) -> Result<u32> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    Ok(xor_popcount(a.rows(), b.rows()))
}

#[inline]
fn xor_popcount(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(x, y)| (x ^ y).count_ones()).sum()
}

/// Index of the minimum distance, ties going to the lowest index.
///
/// Mirrors the parallel comparator network: every entry counts how many
/// others beat it, where an equal entry at a lower index also counts as
/// beating it. Exactly one entry ends with a zero count.
pub fn select_minimum(distances: &[u32; 9]) -> (usize, bool) {
    let mut winner = None;
    for (i, &di) in distances.iter().enumerate() {
        let beaten_by = distances
            .iter()
            .enumerate()
            .filter(|&(j, &dj)| j != i && (di > dj || (di == dj && j < i)))
            .count();
        if beaten_by == 0 {
            winner = Some(i);
        }
    }
    let winner = winner.expect("a finite set always has a first minimum");
    let min = distances[winner];
    let tie = distances.iter().filter(|&&d| d == min).count() > 1;
    (winner, tie)
}

/// Matches the block around `(x, y)` against its nine candidates.
pub fn match_event(triple: &SliceTriple, x: u16, y: u16, config: &FlowConfig) -> Result<MatchResult, NoMatch> {
    let r = config.block_radius as i32;
    let dim = config.block_dimension();
    let (cx, cy) = (x as i32, y as i32);

    // The union of all nine candidate blocks is the (dim+2) square around
    // the centre; the reference is its interior.
    if config.border_policy == BorderPolicy::SkipEvent && !triple.past2().block_inside(cx, cy, r + 1) {
        return Err(NoMatch::Border);
    }

    let mut reference = [0u64; MAX_BLOCK_ROWS];
    let mut active = 0;
    for (j, row) in reference[..dim as usize].iter_mut().enumerate() {
        *row = triple.past1().row_window(cy - r + j as i32, cx - r, dim);
        active += row.count_ones();
    }
    if active < config.min_active_pixels {
        return Err(NoMatch::Sparse);
    }

    let region_dim = dim + 2;
    let mut region = [0u64; MAX_BLOCK_ROWS];
    for (j, row) in region[..region_dim as usize].iter_mut().enumerate() {
        *row = triple.past2().row_window(cy - r - 1 + j as i32, cx - r - 1, region_dim);
    }

    let mask = row_mask(dim);
    let mut distances = [0u32; 9];
    for direction in Direction::ALL {
        let (ox, oy) = direction.offset();
        // Candidate row j, column k is region row j + 1 - oy, column k + 1 - ox.
        let shift = (1 - ox as i32) as u32;
        let first = (1 - oy as i32) as usize;
        distances[direction.index()] = reference[..dim as usize]
            .iter()
            .zip(&region[first..first + dim as usize])
            .map(|(&a, &b)| (a ^ ((b >> shift) & mask)).count_ones())
            .sum();
    }

    let (winner, tie) = select_minimum(&distances);
    Ok(MatchResult { distances, winner: Direction::ALL[winner], tie })
}

/// Candidate block for `direction`, read the slow way.
pub fn candidate_block(triple: &SliceTriple, x: u16, y: u16, direction: Direction, radius: u32) -> BlockBits {
    let (ox, oy) = direction.offset();
    let r = radius as i32;
    let dim = 2 * radius + 1;
    let (cx, cy) = (x as i32 - ox as i32, y as i32 - oy as i32);
    let mut block = BlockBits::zeros(dim);
    for j in 0..dim as usize {
        for k in 0..dim as usize {
            let (px, py) = (cx - r + k as i32, cy - r + j as i32);
            if triple.geometry().contains(px as i64, py as i64) && triple.past2().get(px as u16, py as u16) {
                block.set(j, k);
            }
        }
    }
    block
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_model::SensorGeometry;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive_sad(a: &[u8], b: &[u8]) -> u32 {
        a.iter().zip(b).map(|(&p, &q)| (p as i32 - q as i32).unsigned_abs()).sum()
    }

    fn to_pixels(block: &BlockBits) -> Vec<u8> {
        let n = (block.dim() * block.dim()) as usize;
        (0..n).map(|i| block.bit(i) as u8).collect()
    }

    fn random_block(rng: &mut ChaCha8Rng, dim: u32) -> BlockBits {
        let bits: Vec<bool> = (0..dim * dim).map(|_| rng.random_bool(0.5)).collect();
        BlockBits::from_bits(dim, &bits)
    }

    fn first_min(d: &[u32; 9]) -> usize {
        let mut best = 0;
        for i in 1..9 {
            if d[i] < d[best] {
                best = i;
            }
        }
        best
    }

    #[test]
    fn identical_and_complement() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_block(&mut rng, 9);
        assert_eq!(hamming_distance(&a, &a).unwrap(), 0);
        assert_eq!(hamming_distance(&a, &a.complement()).unwrap(), 81);
    }

    #[test]
    fn matches_naive_sad() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let dim = 2 * rng.random_range(1..=7) + 1;
            let a = random_block(&mut rng, dim);
            let b = random_block(&mut rng, dim);
            assert_eq!(hamming_distance(&a, &b).unwrap(), naive_sad(&to_pixels(&a), &to_pixels(&b)));
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = BlockBits::zeros(3);
        let b = BlockBits::zeros(5);
        assert_eq!(hamming_distance(&a, &b), Err(Error::DimensionMismatch { left: 3, right: 5 }));
    }

    #[test]
    fn select_minimum_examples() {
        assert_eq!(select_minimum(&[3, 0, 5, 2, 7, 1, 9, 4, 6]), (1, false));
        assert_eq!(select_minimum(&[4; 9]), (0, true));
        assert_eq!(select_minimum(&[2, 2, 5, 2, 7, 3, 9, 4, 6]), (0, true));
        assert_eq!(select_minimum(&[9, 9, 5, 2, 7, 2, 9, 4, 6]), (3, true));
    }

    #[test]
    fn select_minimum_exhaustive_small_values() {
        for code in 0..3u32.pow(9) {
            let mut d = [0u32; 9];
            let mut c = code;
            for v in d.iter_mut() {
                *v = c % 3;
                c /= 3;
            }
            let (winner, tie) = select_minimum(&d);
            assert_eq!(winner, first_min(&d), "{d:?}");
            assert_eq!(tie, d.iter().filter(|&&v| v == d[winner]).count() > 1);
        }
    }

    fn triple() -> SliceTriple {
        SliceTriple::new(SensorGeometry::default(), 10_000)
    }

    #[test]
    fn empty_slices_give_centre_tie() {
        let t = triple();
        let m = match_event(&t, 100, 100, &FlowConfig::default()).unwrap();
        assert_eq!(m.distances, [0; 9]);
        assert_eq!(m.winner, Direction::CENTER);
        assert!(m.tie);
    }

    #[test]
    fn line_moving_east() {
        // Line at column c in t-d, at c-1 in t-2d: it moved one pixel east.
        let mut t = triple();
        let c = 120u16;
        let (_, past1, past2) = t.slices_mut();
        for y in 80..100 {
            past1.set(c, y);
            past2.set(c - 1, y);
        }
        let config = FlowConfig::default();
        let m = match_event(&t, c, 90, &config).unwrap();
        // Brute-force SAD over the nine candidates.
        let reference = t.past1().read_block(c, 90, 4, BorderPolicy::ZeroPad).unwrap();
        for d in Direction::ALL {
            let cand = candidate_block(&t, c, 90, d, 4);
            assert_eq!(m.distances[d.index()], naive_sad(&to_pixels(&reference), &to_pixels(&cand)));
        }
        assert_eq!(m.winner, Direction::EAST);
        // A long vertical line is ambiguous along its length (NE and SE fit too).
        assert!(m.tie);
        assert_eq!(m.distances[Direction::NORTH_EAST.index()], 0);
        // Near the end of the line the ambiguity disappears.
        let end = match_event(&t, c, 80, &config).unwrap();
        assert_eq!(end.winner, Direction::EAST);
        assert!(!end.tie);
    }

    #[test]
    fn sparse_reference_is_filtered() {
        let t = triple();
        let config = FlowConfig { min_active_pixels: 1, ..FlowConfig::default() };
        assert_eq!(match_event(&t, 50, 50, &config), Err(NoMatch::Sparse));
    }

    #[test]
    fn skip_policy_rejects_border_events() {
        let t = triple();
        let config = FlowConfig { border_policy: BorderPolicy::SkipEvent, ..FlowConfig::default() };
        assert_eq!(match_event(&t, 4, 50, &config), Err(NoMatch::Border));
        assert!(match_event(&t, 5, 5, &config).is_ok());
        assert_eq!(match_event(&t, 234, 50, &config), Ok(match_event(&t, 5, 5, &config).unwrap()));
        assert_eq!(match_event(&t, 235, 50, &config), Err(NoMatch::Border));
    }

    fn small_geometry() -> SensorGeometry {
        SensorGeometry::new(72, 40).unwrap()
    }

    fn fill(triple: &mut SliceTriple, p1: &[(u16, u16)], p2: &[(u16, u16)], shift: (i32, i32)) {
        let g = triple.geometry();
        let (_, past1, past2) = triple.slices_mut();
        for (slice, pixels) in [(past1, p1), (past2, p2)] {
            for &(x, y) in pixels {
                let (sx, sy) = (x as i32 + shift.0, y as i32 + shift.1);
                if g.contains(sx as i64, sy as i64) {
                    slice.set(sx as u16, sy as u16);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn metric_properties(seed in any::<u64>(), radius in 1u32..=7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dim = 2 * radius + 1;
            let (a, b, c) = (random_block(&mut rng, dim), random_block(&mut rng, dim), random_block(&mut rng, dim));
            let ab = hamming_distance(&a, &b).unwrap();
            prop_assert_eq!(ab, hamming_distance(&b, &a).unwrap());
            prop_assert_eq!(ab == 0, a == b);
            prop_assert!(hamming_distance(&a, &c).unwrap() <= ab + hamming_distance(&b, &c).unwrap());
            prop_assert!(ab <= dim * dim);
        }

        #[test]
        fn select_minimum_random(d in proptest::array::uniform9(0u32..1000)) {
            prop_assert_eq!(select_minimum(&d).0, first_min(&d));
        }

        #[test]
        fn match_agrees_with_slow_candidates(
            p1 in proptest::collection::vec((0u16..72, 0u16..40), 0..400),
            p2 in proptest::collection::vec((0u16..72, 0u16..40), 0..400),
            x in 0u16..72, y in 0u16..40, radius in 1u32..=6,
        ) {
            let mut t = SliceTriple::new(small_geometry(), 100);
            fill(&mut t, &p1, &p2, (0, 0));
            let config = FlowConfig::default().with_radius(radius);
            let m = match_event(&t, x, y, &config).unwrap();
            let reference = t.past1().read_block(x, y, radius, BorderPolicy::ZeroPad).unwrap();
            for d in Direction::ALL {
                let cand = candidate_block(&t, x, y, d, radius);
                prop_assert_eq!(m.distances[d.index()], hamming_distance(&reference, &cand).unwrap());
                prop_assert!(m.distances[d.index()] <= (2 * radius + 1).pow(2));
            }
            prop_assert!(m.distances.iter().all(|&d| d >= m.distances[m.winner.index()]));
        }

        #[test]
        fn interior_translation_equivariance(
            p1 in proptest::collection::vec((20u16..52, 12u16..28), 0..200),
            p2 in proptest::collection::vec((20u16..52, 12u16..28), 0..200),
            x in 28u16..44, y in 18u16..22, sx in -8i32..=8, sy in -5i32..=5,
        ) {
            let config = FlowConfig::default().with_radius(3);
            let mut a = SliceTriple::new(small_geometry(), 100);
            fill(&mut a, &p1, &p2, (0, 0));
            let mut b = SliceTriple::new(small_geometry(), 100);
            fill(&mut b, &p1, &p2, (sx, sy));
            let ma = match_event(&a, x, y, &config).unwrap();
            let mb = match_event(&b, (x as i32 + sx) as u16, (y as i32 + sy) as u16, &config).unwrap();
            prop_assert_eq!(ma, mb);
        }
    }
}
