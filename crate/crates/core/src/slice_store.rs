//! Binary time slices and the three-slice rotation.
//!
//! Slices are bit-packed row-major, one `u64` word run per sensor row, so
//! a block row is a single shifted word fetch.

use crate::error::Result;
use crate::event_model::{BorderPolicy, DvsEvent, SensorGeometry, Timestamp, MAX_BLOCK_RADIUS};

/// Rows a [`BlockBits`] can hold. Also bounds the candidate search region.
pub const MAX_BLOCK_ROWS: usize = 64;

#[derive(Clone, PartialEq, Eq)]
pub struct BitSlice {
    geometry: SensorGeometry,
    words_per_row: usize,
    words: Vec<u64>,
}

impl std::fmt::Debug for BitSlice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BitSlice")
            .field("geometry", &self.geometry)
            .field("set_bits", &self.count_ones())
            .finish()
    }
}

impl BitSlice {
    pub fn new(geometry: SensorGeometry) -> Self {
        let words_per_row = (geometry.width as usize).div_ceil(64);
        Self {
            geometry,
            words_per_row,
            words: vec![0; words_per_row * geometry.height as usize],
        }
    }

    pub fn geometry(&self) -> SensorGeometry {
        self.geometry
    }

    /// Panics if `(x, y)` is outside the sensor.
    pub fn set(&mut self, x: u16, y: u16) {
        assert!(x < self.geometry.width && y < self.geometry.height);
        let word = y as usize * self.words_per_row + x as usize / 64;
        self.words[word] |= 1u64 << (x % 64);
    }

    pub fn get(&self, x: u16, y: u16) -> bool {
        if x >= self.geometry.width || y >= self.geometry.height {
            return false;
        }
        let word = y as usize * self.words_per_row + x as usize / 64;
        self.words[word] >> (x % 64) & 1 == 1
    }

    pub fn clear(&mut self) {
        self.words.fill(0);
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// `len` consecutive pixels of row `y` starting at column `x_start`,
    /// bit `k` holding column `x_start + k`. Pixels off the sensor read 0.
    pub fn row_window(&self, y: i32, x_start: i32, len: u32) -> u64 {
        debug_assert!((1..=64).contains(&len));
        if y < 0 || y >= self.geometry.height as i32 || len == 0 {
            return 0;
        }
        let width = self.geometry.width as i32;
        let end = x_start + len as i32; // exclusive
        if end <= 0 || x_start >= width {
            return 0;
        }
        let row = &self.words[y as usize * self.words_per_row..][..self.words_per_row];
        let lead = (-x_start).max(0) as u32;
        let first = x_start.max(0) as usize;
        let word = first / 64;
        let shift = (first % 64) as u32;
        let mut bits = row[word] >> shift;
        if shift > 0 && word + 1 < row.len() {
            bits |= row[word + 1] << (64 - shift);
        }
        // Bits past the sensor edge are never set, so only `len` needs masking.
        let take = len - lead;
        let bits = if take >= 64 { bits } else { bits & ((1u64 << take) - 1) };
        if lead >= 64 {
            0
        } else {
            bits << lead
        }
    }

    /// Reads the `(2r+1)`-square block centred on `(cx, cy)`.
    ///
    /// Under [`BorderPolicy::SkipEvent`] a block that leaves the sensor
    /// yields `None`; under [`BorderPolicy::ZeroPad`] the missing pixels
    /// read as zero.
    pub fn read_block(&self, cx: u16, cy: u16, radius: u32, policy: BorderPolicy) -> Option<BlockBits> {
        assert!((1..=MAX_BLOCK_RADIUS).contains(&radius), "block radius {radius} unsupported");
        let r = radius as i32;
        let (cx, cy) = (cx as i32, cy as i32);
        if policy == BorderPolicy::SkipEvent && !self.block_inside(cx, cy, r) {
            return None;
        }
        let dim = 2 * radius + 1;
        let mut block = BlockBits::zeros(dim);
        for (j, row) in block.rows_mut().iter_mut().enumerate() {
            *row = self.row_window(cy - r + j as i32, cx - r, dim);
        }
        Some(block)
    }

    pub(crate) fn block_inside(&self, cx: i32, cy: i32, r: i32) -> bool {
        self.geometry.contains((cx - r) as i64, (cy - r) as i64)
            && self.geometry.contains((cx + r) as i64, (cy + r) as i64)
    }
}

/// A square binary block, one word per row, bit `k` of row `j` being the
/// pixel at column `k` of the block. Row-major bit index is `j * dim + k`.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct BlockBits {
    dim: u32,
    rows: [u64; MAX_BLOCK_ROWS],
}

impl std::fmt::Debug for BlockBits {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BlockBits({}x{})", self.dim, self.dim)?;
        for row in self.rows() {
            let line: String = (0..self.dim).map(|k| if row >> k & 1 == 1 { '#' } else { '.' }).collect();
            writeln!(f, "  {line}")?;
        }
        Ok(())
    }
}

impl BlockBits {
    pub fn zeros(dim: u32) -> Self {
        assert!(dim >= 1 && dim as usize <= MAX_BLOCK_ROWS, "block dimension {dim} unsupported");
        Self { dim, rows: [0; MAX_BLOCK_ROWS] }
    }

    /// Builds a block from row-major bits; `bits.len()` must be a square.
    pub fn from_bits(dim: u32, bits: &[bool]) -> Self {
        assert_eq!(bits.len(), (dim * dim) as usize);
        let mut block = Self::zeros(dim);
        for (i, &b) in bits.iter().enumerate() {
            if b {
                block.set(i / dim as usize, i % dim as usize);
            }
        }
        block
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn rows(&self) -> &[u64] {
        &self.rows[..self.dim as usize]
    }

    pub(crate) fn rows_mut(&mut self) -> &mut [u64] {
        &mut self.rows[..self.dim as usize]
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        row < self.dim as usize && col < self.dim as usize && self.rows[row] >> col & 1 == 1
    }

    pub fn set(&mut self, row: usize, col: usize) {
        assert!(row < self.dim as usize && col < self.dim as usize);
        self.rows[row] |= 1 << col;
    }

    pub fn bit(&self, index: usize) -> bool {
        let dim = self.dim as usize;
        self.get(index / dim, index % dim)
    }

    pub fn count_ones(&self) -> u32 {
        self.rows().iter().map(|r| r.count_ones()).sum()
    }

    /// Row-major indices of the set bits.
    pub fn set_indices(&self) -> Vec<usize> {
        let dim = self.dim as usize;
        (0..dim * dim).filter(|&i| self.bit(i)).collect()
    }

    pub fn complement(&self) -> Self {
        let mask = row_mask(self.dim);
        let mut out = *self;
        for row in out.rows_mut() {
            *row = !*row & mask;
        }
        out
    }
}

#[inline]
pub(crate) fn row_mask(len: u32) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

/// The accumulating slice `t` and the two past slices `t-d` and `t-2d`.
#[derive(Debug, Clone)]
pub struct SliceTriple {
    current: BitSlice,
    past1: BitSlice,
    past2: BitSlice,
    epoch_start: Timestamp,
    slice_duration_us: u64,
    rotations: u64,
}

impl SliceTriple {
    pub fn new(geometry: SensorGeometry, slice_duration_us: u64) -> Self {
        Self::starting_at(geometry, slice_duration_us, 0)
    }

    pub fn starting_at(geometry: SensorGeometry, slice_duration_us: u64, epoch_start: Timestamp) -> Self {
        assert!(slice_duration_us > 0, "slice duration must be positive");
        Self {
            current: BitSlice::new(geometry),
            past1: BitSlice::new(geometry),
            past2: BitSlice::new(geometry),
            epoch_start,
            slice_duration_us,
            rotations: 0,
        }
    }

    pub fn geometry(&self) -> SensorGeometry {
        self.current.geometry()
    }

    pub fn current(&self) -> &BitSlice {
        &self.current
    }

    /// Slice `t-d`, the reference for matching.
    pub fn past1(&self) -> &BitSlice {
        &self.past1
    }

    /// Slice `t-2d`, searched for candidates.
    pub fn past2(&self) -> &BitSlice {
        &self.past2
    }

    pub fn epoch_start(&self) -> Timestamp {
        self.epoch_start
    }

    pub fn slice_duration_us(&self) -> u64 {
        self.slice_duration_us
    }

    pub fn rotations(&self) -> u64 {
        self.rotations
    }

    /// Mutable access for building fixtures. Matching only ever reads.
    pub fn slices_mut(&mut self) -> (&mut BitSlice, &mut BitSlice, &mut BitSlice) {
        (&mut self.current, &mut self.past1, &mut self.past2)
    }

    /// Marks the event's pixel in the current slice. Polarity is ignored.
    pub fn accumulate(&mut self, event: &DvsEvent) -> Result<()> {
        self.geometry().check(event.x as u32, event.y as u32)?;
        self.current.set(event.x, event.y);
        Ok(())
    }

    /// Single rotation: `current -> past1 -> past2`, fresh empty current.
    pub fn rotate(&mut self) {
        std::mem::swap(&mut self.past2, &mut self.past1);
        std::mem::swap(&mut self.past1, &mut self.current);
        self.current.clear();
        self.rotations += 1;
        self.epoch_start += self.slice_duration_us;
    }

    /// Rotates once per whole slice interval elapsed by `timestamp` and
    /// returns the number of rotations performed.
    pub fn maybe_rotate(&mut self, timestamp: Timestamp) -> u64 {
        if timestamp < self.epoch_start {
            return 0;
        }
        let elapsed = (timestamp - self.epoch_start) / self.slice_duration_us;
        if elapsed >= 3 {
            // Every slice is replaced by an empty one.
            self.current.clear();
            self.past1.clear();
            self.past2.clear();
            self.rotations += elapsed;
            self.epoch_start += elapsed * self.slice_duration_us;
        } else {
            for _ in 0..elapsed {
                self.rotate();
            }
        }
        elapsed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_model::Polarity;
    use proptest::prelude::*;

    fn geometry() -> SensorGeometry {
        SensorGeometry::default()
    }

    fn ev(t: u64, x: u16, y: u16, p: Polarity) -> DvsEvent {
        DvsEvent::new(t, x, y, p)
    }

    #[test]
    fn accumulate_is_idempotent() {
        let mut triple = SliceTriple::new(geometry(), 40_000);
        triple.accumulate(&ev(0, 10, 10, Polarity::On)).unwrap();
        let once = triple.current().clone();
        triple.accumulate(&ev(1, 10, 10, Polarity::On)).unwrap();
        assert_eq!(triple.current(), &once);
        assert_eq!(triple.current().count_ones(), 1);
        assert!(triple.current().get(10, 10));
    }

    #[test]
    fn accumulate_ignores_polarity() {
        let mut a = SliceTriple::new(geometry(), 40_000);
        let mut b = SliceTriple::new(geometry(), 40_000);
        a.accumulate(&ev(0, 3, 7, Polarity::On)).unwrap();
        b.accumulate(&ev(0, 3, 7, Polarity::Off)).unwrap();
        assert_eq!(a.current(), b.current());
    }

    #[test]
    fn first_event_touches_only_current() {
        let mut triple = SliceTriple::new(geometry(), 40_000);
        triple.accumulate(&ev(0, 0, 0, Polarity::On)).unwrap();
        assert_eq!(triple.current().count_ones(), 1);
        assert!(triple.past1().is_empty());
        assert!(triple.past2().is_empty());
    }

    #[test]
    fn accumulate_rejects_out_of_geometry() {
        let mut triple = SliceTriple::new(geometry(), 40_000);
        assert!(triple.accumulate(&ev(0, 240, 0, Polarity::On)).is_err());
        assert!(triple.accumulate(&ev(0, 0, 180, Polarity::On)).is_err());
    }

    #[test]
    fn rotation_boundaries() {
        let mut triple = SliceTriple::new(geometry(), 40_000);
        assert_eq!(triple.maybe_rotate(39_999), 0);
        assert_eq!(triple.epoch_start(), 0);
        assert_eq!(triple.maybe_rotate(40_000), 1);
        assert_eq!(triple.epoch_start(), 40_000);
    }

    #[test]
    fn missed_intervals_rotate_repeatedly() {
        // Oracle: whole intervals elapsed = (t - start) / d.
        for (t, d) in [(35_000u64, 10_000u64), (20_000, 10_000), (29_999, 10_000), (1_000_000, 7)] {
            let mut triple = SliceTriple::new(geometry(), d);
            let expected = t / d;
            assert_eq!(triple.maybe_rotate(t), expected);
            assert_eq!(triple.epoch_start(), expected * d);
            assert_eq!(triple.rotations(), expected);
        }
    }

    #[test]
    fn rotation_moves_slices_down() {
        let mut triple = SliceTriple::new(geometry(), 10);
        triple.accumulate(&ev(0, 1, 1, Polarity::On)).unwrap();
        triple.maybe_rotate(10);
        triple.accumulate(&ev(10, 2, 2, Polarity::On)).unwrap();
        triple.maybe_rotate(20);
        assert!(triple.current().is_empty());
        assert!(triple.past1().get(2, 2) && triple.past1().count_ones() == 1);
        assert!(triple.past2().get(1, 1) && triple.past2().count_ones() == 1);
        // Two more empty intervals flush both.
        triple.maybe_rotate(40);
        assert!(triple.past1().is_empty() && triple.past2().is_empty());
    }

    #[test]
    fn skipping_three_or_more_intervals_clears_everything() {
        let mut triple = SliceTriple::new(geometry(), 10);
        triple.accumulate(&ev(0, 5, 5, Polarity::On)).unwrap();
        triple.maybe_rotate(10);
        triple.accumulate(&ev(10, 6, 6, Polarity::On)).unwrap();
        assert_eq!(triple.maybe_rotate(45), 3);
        assert!(triple.current().is_empty() && triple.past1().is_empty() && triple.past2().is_empty());
        assert_eq!(triple.rotations(), 4);
        assert_eq!(triple.epoch_start(), 40);
    }

    #[test]
    fn empty_slice_reads_zero_block() {
        let slice = BitSlice::new(geometry());
        for (x, y) in [(0, 0), (120, 90), (239, 179)] {
            let block = slice.read_block(x, y, 4, BorderPolicy::ZeroPad).unwrap();
            assert_eq!(block.count_ones(), 0);
        }
    }

    #[test]
    fn centre_bit_is_index_40() {
        let mut slice = BitSlice::new(geometry());
        slice.set(100, 50);
        let block = slice.read_block(100, 50, 4, BorderPolicy::ZeroPad).unwrap();
        assert_eq!(block.set_indices(), vec![40]);
    }

    fn all_ones(geometry: SensorGeometry) -> BitSlice {
        let mut slice = BitSlice::new(geometry);
        for y in 0..geometry.height {
            for x in 0..geometry.width {
                slice.set(x, y);
            }
        }
        slice
    }

    #[test]
    fn corner_block_on_full_slice() {
        let slice = all_ones(geometry());
        // Brute-force count of in-bounds positions around (0, 0).
        let in_bounds = (-4i64..=4)
            .flat_map(|dy| (-4i64..=4).map(move |dx| (dx, dy)))
            .filter(|&(dx, dy)| geometry().contains(dx, dy))
            .count();
        assert_eq!(in_bounds, 25);
        let block = slice.read_block(0, 0, 4, BorderPolicy::ZeroPad).unwrap();
        assert_eq!(block.count_ones() as usize, in_bounds);
        assert!(slice.read_block(0, 0, 4, BorderPolicy::SkipEvent).is_none());
        assert!(slice.read_block(4, 4, 4, BorderPolicy::SkipEvent).is_some());
        assert!(slice.read_block(235, 175, 4, BorderPolicy::SkipEvent).is_some());
        assert!(slice.read_block(236, 175, 4, BorderPolicy::SkipEvent).is_none());
    }

    #[test]
    fn row_window_across_word_boundary() {
        let g = SensorGeometry::new(200, 3).unwrap();
        let mut slice = BitSlice::new(g);
        for x in [60u16, 63, 64, 70, 127, 128, 199] {
            slice.set(x, 1);
        }
        for start in [-70i32, -5, 0, 55, 60, 63, 64, 120, 150, 190, 199, 200] {
            for len in [1u32, 9, 33, 63, 64] {
                let got = slice.row_window(1, start, len);
                for k in 0..len {
                    let x = start + k as i32;
                    let expect = (0..200).contains(&x) && slice.get(x as u16, 1);
                    assert_eq!(got >> k & 1 == 1, expect, "start {start} len {len} k {k}");
                }
            }
        }
    }

    fn small_geometry() -> SensorGeometry {
        SensorGeometry::new(70, 23).unwrap()
    }

    proptest! {
        #[test]
        fn zero_pad_block_matches_pixel_lookup(
            pixels in proptest::collection::vec((0u16..70, 0u16..23), 0..300),
            cx in 0u16..70, cy in 0u16..23, radius in 1u32..=7,
        ) {
            let mut slice = BitSlice::new(small_geometry());
            for &(x, y) in &pixels {
                slice.set(x, y);
            }
            let block = slice.read_block(cx, cy, radius, BorderPolicy::ZeroPad).unwrap();
            let r = radius as i64;
            for j in 0..(2 * r + 1) {
                for k in 0..(2 * r + 1) {
                    let (x, y) = (cx as i64 - r + k, cy as i64 - r + j);
                    let expect = small_geometry().contains(x, y) && slice.get(x as u16, y as u16);
                    prop_assert_eq!(block.get(j as usize, k as usize), expect);
                }
            }
        }

        #[test]
        fn current_grows_between_rotations(
            pixels in proptest::collection::vec((0u16..70, 0u16..23), 1..100),
        ) {
            let mut triple = SliceTriple::new(small_geometry(), 1_000);
            let mut last = 0;
            for (i, &(x, y)) in pixels.iter().enumerate() {
                triple.accumulate(&DvsEvent::new(i as u64, x, y, Polarity::On)).unwrap();
                let now = triple.current().count_ones();
                prop_assert!(now >= last);
                last = now;
            }
        }
    }
}
