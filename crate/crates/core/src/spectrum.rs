//! Per-link slice occupancy.
//!
//! Each link holds a bitmap of `S` slices packed into `u64` words, bit set
//! meaning busy. Scans work a word at a time where a word is uniformly free
//! or busy and fall back to single bits otherwise.

use std::fmt::Write as _;

use thiserror::Error;

use crate::topology::{LinkId, Route, Topology};

const WORD: usize = 64;

/// A run of contiguous slices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SliceRange {
    pub start: usize,
    pub width: usize,
}

impl SliceRange {
    pub fn new(start: usize, width: usize) -> Self {
        assert!(width > 0, "slice range width must be positive");
        SliceRange { start, width }
    }

    pub fn end(&self) -> usize {
        self.start + self.width
    }
}

/// Longest free run and free count on one link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LinkStats {
    pub max_contiguous: usize,
    pub free: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpectrumState {
    slice_count: usize,
    words_per_link: usize,
    bits: Vec<u64>,
    free: Vec<usize>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DumpError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("dump has {found} links, topology has {expected}")]
    LinkCount { found: usize, expected: usize },
    #[error("link {link}: dump has {found} slices, topology has {expected}")]
    SliceCount { link: usize, found: usize, expected: usize },
}

impl SpectrumState {
    pub fn new(link_count: usize, slice_count: usize) -> Self {
        assert!(slice_count > 0);
        let words_per_link = slice_count.div_ceil(WORD);
        SpectrumState {
            slice_count,
            words_per_link,
            bits: vec![0; link_count * words_per_link],
            free: vec![slice_count; link_count],
        }
    }

    pub fn for_topology(topology: &Topology) -> Self {
        Self::new(topology.link_count(), topology.slice_count())
    }

    pub fn link_count(&self) -> usize {
        self.free.len()
    }

    pub fn slice_count(&self) -> usize {
        self.slice_count
    }

    fn words(&self, link: LinkId) -> &[u64] {
        let base = link.index() * self.words_per_link;
        &self.bits[base..base + self.words_per_link]
    }

    pub fn is_free(&self, link: LinkId, slice: usize) -> bool {
        debug_assert!(slice < self.slice_count);
        self.words(link)[slice / WORD] >> (slice % WORD) & 1 == 0
    }

    pub fn free_count(&self, link: LinkId) -> usize {
        self.free[link.index()]
    }

    pub fn max_contiguous_free(&self, link: LinkId) -> usize {
        self.link_stats(link).max_contiguous
    }

    pub fn link_stats(&self, link: LinkId) -> LinkStats {
        LinkStats {
            max_contiguous: longest_zero_run(self.words(link), self.slice_count),
            free: self.free[link.index()],
        }
    }

    pub fn total_free(&self) -> usize {
        self.free.iter().sum()
    }

    /// Occupied fraction of all slices in the network.
    pub fn utilization(&self) -> f64 {
        let total = self.slice_count * self.link_count();
        if total == 0 {
            return 0.0;
        }
        (total - self.total_free()) as f64 / total as f64
    }

    /// Lowest start index at which `width` slices are free on every link of
    /// the route.
    pub fn find_first_fit(&self, route: &Route, width: usize) -> Option<SliceRange> {
        assert!(width > 0, "width must be positive");
        if width > self.slice_count || route.is_empty() {
            return None;
        }
        let mut merged = vec![0u64; self.words_per_link];
        for &link in route.links() {
            for (m, w) in merged.iter_mut().zip(self.words(link)) {
                *m |= w;
            }
        }
        first_zero_run(&merged, self.slice_count, width).map(|start| SliceRange { start, width })
    }

    /// Marks `range` busy on every link of `route`.
    ///
    /// Panics if any slice is already busy: admission always checks first,
    /// so a collision means the engine's bookkeeping is corrupt.
    pub fn allocate(&mut self, route: &Route, range: SliceRange) {
        assert!(range.end() <= self.slice_count, "range {range:?} exceeds grid");
        for &link in route.links() {
            for slice in range.start..range.end() {
                assert!(self.is_free(link, slice), "slice {slice} on link {link} already occupied");
            }
        }
        for &link in route.links() {
            self.flip(link, range);
            self.free[link.index()] -= range.width;
            self.debug_check(link);
        }
    }

    /// Frees `range` on every link of `route`. Panics on freeing a free slice.
    pub fn release(&mut self, route: &Route, range: SliceRange) {
        assert!(range.end() <= self.slice_count, "range {range:?} exceeds grid");
        for &link in route.links() {
            for slice in range.start..range.end() {
                assert!(!self.is_free(link, slice), "slice {slice} on link {link} already free");
            }
        }
        for &link in route.links() {
            self.flip(link, range);
            self.free[link.index()] += range.width;
            self.debug_check(link);
        }
    }

    fn flip(&mut self, link: LinkId, range: SliceRange) {
        let base = link.index() * self.words_per_link;
        let mut slice = range.start;
        while slice < range.end() {
            let word = slice / WORD;
            let offset = slice % WORD;
            let take = (WORD - offset).min(range.end() - slice);
            let mask = if take == WORD { !0 } else { ((1u64 << take) - 1) << offset };
            self.bits[base + word] ^= mask;
            slice += take;
        }
    }

    fn debug_check(&self, link: LinkId) {
        debug_assert_eq!(
            self.free[link.index()],
            self.slice_count - self.words(link).iter().map(|w| w.count_ones() as usize).sum::<usize>(),
            "free counter out of sync on link {link}"
        );
    }

    /// Sets one slice directly, bypassing route bookkeeping. Used to build
    /// fixtures and to load dumps.
    pub fn set_slice(&mut self, link: LinkId, slice: usize, busy: bool) {
        assert!(slice < self.slice_count);
        if self.is_free(link, slice) == busy {
            self.flip(link, SliceRange { start: slice, width: 1 });
            if busy {
                self.free[link.index()] -= 1;
            } else {
                self.free[link.index()] += 1;
            }
        }
    }

    /// One line per link: `linkid: 0101...`, `0` free and `1` busy, slice 0
    /// first.
    pub fn dump(&self) -> String {
        let mut out = String::with_capacity(self.link_count() * (self.slice_count + 8));
        for link in 0..self.link_count() {
            let _ = write!(out, "{link}: ");
            for slice in 0..self.slice_count {
                out.push(if self.is_free(LinkId(link), slice) { '0' } else { '1' });
            }
            out.push('\n');
        }
        out
    }

    /// Parses [`dump`](Self::dump) output against expected dimensions.
    /// Blank lines and `#` comments are ignored; link ids must be listed in
    /// order.
    pub fn parse_dump(text: &str, link_count: usize, slice_count: usize) -> Result<Self, DumpError> {
        let mut state = SpectrumState::new(link_count, slice_count);
        let mut seen = 0;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let malformed = |reason: &str| DumpError::Malformed { line: n + 1, reason: reason.to_string() };
            let (id, bits) = line.split_once(':').ok_or_else(|| malformed("expected `linkid: bits`"))?;
            let id: usize = id.trim().parse().map_err(|_| malformed("link id is not an integer"))?;
            if id != seen {
                return Err(malformed(&format!("expected link {seen}, found {id}")));
            }
            if id >= link_count {
                return Err(DumpError::LinkCount { found: id + 1, expected: link_count });
            }
            let bits = bits.trim();
            if bits.len() != slice_count {
                return Err(DumpError::SliceCount { link: id, found: bits.len(), expected: slice_count });
            }
            for (slice, c) in bits.chars().enumerate() {
                match c {
                    '0' => {}
                    '1' => state.set_slice(LinkId(id), slice, true),
                    _ => return Err(malformed("bits must be 0 or 1")),
                }
            }
            seen += 1;
        }
        if seen != link_count {
            return Err(DumpError::LinkCount { found: seen, expected: link_count });
        }
        Ok(state)
    }
}

/// Mask of the valid bits in word `w` for a grid of `len` slices.
#[inline]
fn valid_mask(w: usize, len: usize) -> u64 {
    let remaining = len - w * WORD;
    if remaining >= WORD {
        !0
    } else {
        (1u64 << remaining) - 1
    }
}

/// Longest run of zero bits among the first `len` bits.
pub(crate) fn longest_zero_run(words: &[u64], len: usize) -> usize {
    let mut best = 0;
    let mut run = 0;
    for (w, &word) in words.iter().enumerate() {
        let mask = valid_mask(w, len);
        let bits = word & mask;
        let width = mask.count_ones() as usize;
        if bits == 0 {
            run += width;
            continue;
        }
        if bits == mask {
            best = best.max(run);
            run = 0;
            continue;
        }
        for i in 0..width {
            if bits >> i & 1 == 0 {
                run += 1;
            } else {
                best = best.max(run);
                run = 0;
            }
        }
    }
    best.max(run)
}

/// Start of the first run of `width` zero bits among the first `len` bits.
fn first_zero_run(words: &[u64], len: usize, width: usize) -> Option<usize> {
    let mut run = 0;
    for (w, &word) in words.iter().enumerate() {
        let mask = valid_mask(w, len);
        let bits = word & mask;
        let span = mask.count_ones() as usize;
        if bits == 0 && run + span < width {
            run += span;
            continue;
        }
        if bits == mask {
            run = 0;
            continue;
        }
        for i in 0..span {
            if bits >> i & 1 == 0 {
                run += 1;
                if run == width {
                    return Some(w * WORD + i + 1 - width);
                }
            } else {
                run = 0;
            }
        }
    }
    None
}
