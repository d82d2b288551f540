//! Corner candidate gate: newest-arc search on two concentric rings.
//!
//! A ring admits a valid arc when some contiguous (wrap-around) run of ring
//! pixels is strictly newer than every pixel outside it and the run length lies
//! in `[lo, hi]` or in the complementary band `[n - hi, n - lo]`. The second
//! band covers the case where the *oldest* run is the short one.

use crate::event::Timestamp;
use crate::sae::LocalPatch;

/// Radius-3 ring, 16 pixels, one traversal direction.
pub const INNER_OFFSETS: [(i8, i8); 16] = [
    (0, 3), (1, 3), (2, 2), (3, 1),
    (3, 0), (3, -1), (2, -2), (1, -3),
    (0, -3), (-1, -3), (-2, -2), (-3, -1),
    (-3, 0), (-3, 1), (-2, 2), (-1, 3),
];

/// Radius-4 ring, 20 pixels, same direction as the inner ring.
pub const OUTER_OFFSETS: [(i8, i8); 20] = [
    (0, 4), (1, 4), (2, 3), (3, 2), (4, 1),
    (4, 0), (4, -1), (3, -2), (2, -3), (1, -4),
    (0, -4), (-1, -4), (-2, -3), (-3, -2), (-4, -1),
    (-4, 0), (-4, 1), (-3, 2), (-2, 3), (-1, 4),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ring<const N: usize> {
    pub offsets: [(i8, i8); N],
    pub min_arc: usize,
    pub max_arc: usize,
}

impl<const N: usize> Ring<N> {
    pub const fn len(&self) -> usize {
        N
    }

    pub const fn is_empty(&self) -> bool {
        N == 0
    }

    /// Whether an arc of `len` pixels has an accepted length, directly or as
    /// the complement of an accepted oldest run.
    #[inline]
    pub fn accepts_length(&self, len: usize) -> bool {
        (self.min_arc <= len && len <= self.max_arc)
            || (N - self.max_arc <= len && len <= N - self.min_arc)
    }

    #[inline]
    pub fn sample(&self, patch: &LocalPatch) -> [Timestamp; N] {
        let mut out = [0; N];
        for (v, &(dx, dy)) in out.iter_mut().zip(self.offsets.iter()) {
            *v = patch.at(dx, dy);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CircleMask {
    pub inner: Ring<16>,
    pub outer: Ring<20>,
}

impl Default for CircleMask {
    fn default() -> Self {
        CircleMask {
            inner: Ring { offsets: INNER_OFFSETS, min_arc: 3, max_arc: 6 },
            outer: Ring { offsets: OUTER_OFFSETS, min_arc: 4, max_arc: 8 },
        }
    }
}

/// Greedy search: grow from the newest pixel, always absorbing the newer of
/// the two boundary neighbours, and test validity at every length.
///
/// Ties pick the lowest ring index, both for the start and for expansion.
#[inline]
pub fn ring_has_valid_arc<const N: usize>(ring: &Ring<N>, values: &[Timestamp; N]) -> bool {
    let mut start = 0;
    let mut newest = values[0];
    for (i, &v) in values.iter().enumerate().skip(1) {
        start = if v > newest { i } else { start };
        newest = newest.max(v);
    }
    let longest = ring.max_arc.max(N - ring.min_arc).min(N - 1);

    let mut cw = start;
    let mut ccw = start;
    let mut oldest = newest;
    let mut len = 1;
    loop {
        // valid iff exactly `len` ring values are >= the oldest in the arc
        let newer: usize = values.iter().map(|&v| (v >= oldest) as usize).sum();
        if newer == len && ring.accepts_length(len) {
            return true;
        }
        if newer > longest || len >= longest {
            return false;
        }
        // `oldest` only decreases, so `newer` never shrinks: no arc shorter
        // than it can be valid and the count can wait until `len` catches up.
        let target = newer.max(len + 1);
        while len < target {
            let next_cw = if cw + 1 == N { 0 } else { cw + 1 };
            let next_ccw = if ccw == 0 { N - 1 } else { ccw - 1 };
            let (a, b) = (values[next_cw], values[next_ccw]);
            let take_cw = (a > b) | ((a == b) & (next_cw < next_ccw));
            cw = if take_cw { next_cw } else { cw };
            ccw = if take_cw { ccw } else { next_ccw };
            oldest = oldest.min(if take_cw { a } else { b });
            len += 1;
        }
    }
}

pub fn select_candidate(patch: &LocalPatch, mask: &CircleMask) -> bool {
    ring_has_valid_arc(&mask.inner, &mask.inner.sample(patch))
        && ring_has_valid_arc(&mask.outer, &mask.outer.sample(patch))
}

/// All arc lengths `L` in `1..n` for which some contiguous arc of length `L`
/// is strictly newer than its complement. Exhaustive over `(start, length)`.
pub fn valid_arc_lengths_bruteforce(values: &[Timestamp]) -> Vec<usize> {
    let n = values.len();
    let mut lengths = Vec::new();
    for len in 1..n {
        let found = (0..n).any(|start| {
            let in_arc = |i: usize| (i + n - start) % n < len;
            let min_in = (0..n).filter(|&i| in_arc(i)).map(|i| values[i]).min();
            let max_out = (0..n).filter(|&i| !in_arc(i)).map(|i| values[i]).max();
            matches!((min_in, max_out), (Some(lo), Some(hi)) if lo > hi)
        });
        if found {
            lengths.push(len);
        }
    }
    lengths
}

pub fn ring_has_valid_arc_bruteforce<const N: usize>(
    ring: &Ring<N>,
    values: &[Timestamp; N],
) -> bool {
    valid_arc_lengths_bruteforce(values)
        .into_iter()
        .any(|len| ring.accepts_length(len))
}

/// Reference decision enumerating every arc on both rings.
pub fn select_candidate_bruteforce(patch: &LocalPatch, mask: &CircleMask) -> bool {
    ring_has_valid_arc_bruteforce(&mask.inner, &mask.inner.sample(patch))
        && ring_has_valid_arc_bruteforce(&mask.outer, &mask.outer.sample(patch))
}
