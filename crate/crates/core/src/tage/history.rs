//! Global history register and folded (compressed) histories.

/// Direction history, most recent outcome at age 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalHistory {
    bits: Vec<bool>,
    head: usize,
    mask: usize,
}

impl GlobalHistory {
    /// Keeps at least `depth` outcomes.
    pub fn new(depth: usize) -> Self {
        let cap = (depth + 1).next_power_of_two().max(64);
        GlobalHistory { bits: vec![false; cap], head: 0, mask: cap - 1 }
    }

    pub fn push(&mut self, taken: bool) {
        self.head = (self.head + self.mask) & self.mask;
        self.bits[self.head] = taken;
    }

    /// Outcome `age` branches ago (0 = most recent). Ages beyond the
    /// capacity wrap and must not be requested.
    #[inline]
    pub fn at(&self, age: usize) -> bool {
        debug_assert!(age <= self.mask);
        self.bits[(self.head + age) & self.mask]
    }

    /// The `len` most recent outcomes, most recent first.
    pub fn recent(&self, len: usize) -> Vec<bool> {
        (0..len).map(|i| self.at(i)).collect()
    }

    /// Low 64 ages packed, age 0 in bit 0.
    pub fn low_word(&self) -> u64 {
        (0..64).fold(0u64, |acc, i| acc | (self.at(i) as u64) << i)
    }

    pub fn capacity(&self) -> usize {
        self.mask + 1
    }
}

/// Incrementally maintained fold of the `orig_len` most recent history
/// bits into `comp_len` bits: bit of age `i` lands at position
/// `i % comp_len`, collisions XOR.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FoldedHistory {
    pub comp: u64,
    orig_len: usize,
    comp_len: usize,
    outpoint: usize,
}

impl FoldedHistory {
    pub fn new(orig_len: usize, comp_len: usize) -> Self {
        assert!((1..64).contains(&comp_len));
        FoldedHistory { comp: 0, orig_len, comp_len, outpoint: orig_len % comp_len }
    }

    /// Call after `hist` has received the newest outcome.
    #[inline]
    pub fn update(&mut self, hist: &GlobalHistory) {
        self.comp = (self.comp << 1) ^ hist.at(0) as u64;
        self.comp ^= (hist.at(self.orig_len) as u64) << self.outpoint;
        self.comp ^= self.comp >> self.comp_len;
        self.comp &= (1u64 << self.comp_len) - 1;
    }
}

/// Direct fold of an explicit history, most recent first.
pub fn fold_bits(bits: &[bool], len: usize, width: usize) -> u64 {
    bits.iter()
        .take(len)
        .enumerate()
        .filter(|(_, &b)| b)
        .fold(0u64, |acc, (i, _)| acc ^ (1u64 << (i % width)))
}

/// Packed history, most recent outcome at bit 0 of the first word.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PackedHistory {
    words: Vec<u64>,
    len: usize,
}

impl PackedHistory {
    pub fn from_bools(bits: &[bool]) -> Self {
        let mut words = vec![0u64; bits.len().div_ceil(64)];
        for (i, _) in bits.iter().enumerate().filter(|(_, &b)| b) {
            words[i / 64] |= 1 << (i % 64);
        }
        PackedHistory { words, len: bits.len() }
    }

    /// The `len` most recent outcomes of `hist`.
    pub fn from_global(hist: &GlobalHistory, len: usize) -> Self {
        let mut words = vec![0u64; len.div_ceil(64)];
        for i in (0..len).filter(|&i| hist.at(i)) {
            words[i / 64] |= 1 << (i % 64);
        }
        PackedHistory { words, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        i < self.len && (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    /// `width` (< 64) bits starting at bit `start`, zero beyond the end.
    #[inline]
    fn chunk(&self, start: usize, width: usize) -> u64 {
        let (w, off) = (start / 64, start % 64);
        let mut v = self.words.get(w).copied().unwrap_or(0) >> off;
        if off + width > 64 {
            v |= self.words.get(w + 1).copied().unwrap_or(0) << (64 - off);
        }
        v & ((1u64 << width) - 1)
    }

    /// Same as [`fold_bits`] on the unpacked history.
    pub fn fold(&self, len: usize, width: usize) -> u64 {
        let len = len.min(self.len);
        let mut acc = 0;
        let mut start = 0;
        while start + width <= len {
            acc ^= self.chunk(start, width);
            start += width;
        }
        if start < len {
            acc ^= self.chunk(start, len - start);
        }
        acc
    }

    /// `prefix` (most recent first) followed by `self`.
    pub fn prepend(&self, prefix: &[bool]) -> Self {
        let k = prefix.len();
        let len = self.len + k;
        let mut words = vec![0u64; len.div_ceil(64)];
        let (ws, bs) = (k / 64, k % 64);
        for (i, &w) in self.words.iter().enumerate() {
            words[i + ws] |= w << bs;
            if bs > 0 && i + ws + 1 < words.len() {
                words[i + ws + 1] |= w >> (64 - bs);
            }
        }
        for (i, _) in prefix.iter().enumerate().filter(|(_, &b)| b) {
            words[i / 64] |= 1 << (i % 64);
        }
        PackedHistory { words, len }
    }

    /// XORs `prefix` onto the most recent positions, growing if needed.
    pub fn xor_prefix(&self, prefix: &[bool]) -> Self {
        let mut out = self.clone();
        if out.len < prefix.len() {
            out.len = prefix.len();
            out.words.resize(out.len.div_ceil(64), 0);
        }
        for (i, _) in prefix.iter().enumerate().filter(|(_, &b)| b) {
            out.words[i / 64] ^= 1 << (i % 64);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn push_order() {
        let mut h = GlobalHistory::new(8);
        for t in [true, false, true] {
            h.push(t);
        }
        assert_eq!(h.recent(4), vec![true, false, true, false]);
        h.push(true);
        assert_eq!(h.recent(4), vec![true, true, false, true]);
    }

    #[test]
    fn not_taken_clears_low_bits() {
        let mut h = GlobalHistory::new(128);
        for _ in 0..100 {
            h.push(true);
        }
        for _ in 0..64 {
            h.push(false);
        }
        assert_eq!(h.low_word(), 0);
        assert!(h.at(64));
    }

    #[test]
    fn incremental_fold_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut h = GlobalHistory::new(700);
        let shapes = [(4, 10), (25, 10), (640, 14), (101, 11), (13, 13), (3, 12)];
        let mut folds: Vec<_> = shapes.iter().map(|&(l, w)| FoldedHistory::new(l, w)).collect();
        for step in 0..3000 {
            h.push(rng.gen());
            for f in &mut folds {
                f.update(&h);
            }
            if step % 97 == 0 {
                let bits = h.recent(700);
                for (f, &(l, w)) in folds.iter().zip(&shapes) {
                    assert_eq!(f.comp, fold_bits(&bits, l, w), "len {l} width {w}");
                }
            }
        }
    }

    #[test]
    fn packed_fold_and_prepend_match_bools() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(0..700);
            let bits: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
            let packed = PackedHistory::from_bools(&bits);
            assert_eq!(packed.to_bools(), bits);
            for (l, w) in [(4, 10), (640, 14), (101, 11), (64, 13), (700, 12), (7, 7)] {
                assert_eq!(packed.fold(l, w), fold_bits(&bits, l, w));
            }
            let k = rng.gen_range(0..140);
            let prefix: Vec<bool> = (0..k).map(|_| rng.gen()).collect();
            let mut joined = prefix.clone();
            joined.extend_from_slice(&bits);
            assert_eq!(packed.prepend(&prefix).to_bools(), joined);
            let mut xored = bits.clone();
            xored.resize(n.max(k), false);
            for (x, p) in xored.iter_mut().zip(&prefix) {
                *x ^= p;
            }
            assert_eq!(packed.xor_prefix(&prefix).to_bools(), xored);
        }
    }
}
