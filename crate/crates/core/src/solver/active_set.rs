use std::cmp::Ordering;
use std::fmt;

/// Bitmask over constraint indices `0..p̃`; bit `k` set iff constraint `k` is active.
///
/// Ordering is by cardinality first, then by numeric value of the bitmask.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ActiveSet {
    words: Vec<u64>,
    len: usize,
    card: usize,
}

impl ActiveSet {
    pub fn empty(p_tilde: usize) -> Self {
        Self {
            words: vec![0; p_tilde.div_ceil(64)],
            len: p_tilde,
            card: 0,
        }
    }

    /// Panics if an index is out of range.
    pub fn from_indices(p_tilde: usize, idx: &[usize]) -> Self {
        let mut s = Self::empty(p_tilde);
        for &k in idx {
            s.insert(k);
        }
        s
    }

    /// Parses a hex bitmask such as `0x1a`; bits beyond `p_tilde` are rejected.
    pub fn from_hex(p_tilde: usize, text: &str) -> Option<Self> {
        let digits = text.trim().trim_start_matches("0x").trim_start_matches("0X");
        let mut s = Self::empty(p_tilde);
        for (pos, ch) in digits.chars().rev().enumerate() {
            let nib = ch.to_digit(16)? as u64;
            for b in 0..4 {
                if nib >> b & 1 == 1 {
                    let k = pos * 4 + b;
                    if k >= p_tilde {
                        return None;
                    }
                    s.insert(k);
                }
            }
        }
        Some(s)
    }

    pub fn p_tilde(&self) -> usize {
        self.len
    }

    pub fn cardinality(&self) -> usize {
        self.card
    }

    pub fn is_empty(&self) -> bool {
        self.card == 0
    }

    pub fn contains(&self, k: usize) -> bool {
        k < self.len && self.words[k / 64] >> (k % 64) & 1 == 1
    }

    pub fn insert(&mut self, k: usize) {
        assert!(k < self.len, "constraint index {k} out of range {}", self.len);
        if !self.contains(k) {
            self.words[k / 64] |= 1 << (k % 64);
            self.card += 1;
        }
    }

    pub fn remove(&mut self, k: usize) {
        if self.contains(k) {
            self.words[k / 64] &= !(1 << (k % 64));
            self.card -= 1;
        }
    }

    pub fn with(&self, k: usize) -> Self {
        let mut s = self.clone();
        s.insert(k);
        s
    }

    pub fn without(&self, k: usize) -> Self {
        let mut s = self.clone();
        s.remove(k);
        s
    }

    /// Active indices, ascending.
    pub fn indices(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.card);
        for (w, &word) in self.words.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let t = bits.trailing_zeros() as usize;
                out.push(w * 64 + t);
                bits &= bits - 1;
            }
        }
        out
    }

    pub fn is_subset_of(&self, other: &ActiveSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn to_hex(&self) -> String {
        let mut s = String::new();
        for &w in self.words.iter().rev() {
            if s.is_empty() {
                if w != 0 {
                    s = format!("{w:x}");
                }
            } else {
                s.push_str(&format!("{w:016x}"));
            }
        }
        if s.is_empty() {
            s.push('0');
        }
        format!("0x{s}")
    }
}

impl Ord for ActiveSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.card
            .cmp(&other.card)
            .then_with(|| self.words.iter().rev().cmp(other.words.iter().rev()))
    }
}

impl PartialOrd for ActiveSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for ActiveSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", self.to_hex(), self.indices())
    }
}

impl fmt::Display for ActiveSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Walks all subsets of `0..p` with cardinality `<= max_card` in
/// (cardinality, bitmask) order.
#[derive(Clone, Debug)]
pub struct SubsetCursor {
    p: usize,
    max_card: usize,
    idx: Vec<usize>,
    done: bool,
}

impl SubsetCursor {
    pub fn new(p: usize, max_card: usize) -> Self {
        Self {
            p,
            max_card: max_card.min(p),
            idx: Vec::new(),
            done: false,
        }
    }

    /// Back to the empty set.
    pub fn restart(&mut self) {
        self.idx.clear();
        self.done = false;
    }

    fn advance(&mut self) {
        let c = self.idx.len();
        // colex successor: bump the lowest index that has room, reset the ones below it
        for i in 0..c {
            let limit = if i + 1 < c { self.idx[i + 1] } else { self.p };
            if self.idx[i] + 1 < limit {
                self.idx[i] += 1;
                for (j, v) in self.idx.iter_mut().enumerate().take(i) {
                    *v = j;
                }
                return;
            }
        }
        if c < self.max_card {
            self.idx = (0..=c).collect();
        } else {
            self.done = true;
        }
    }
}

impl Iterator for SubsetCursor {
    type Item = ActiveSet;

    fn next(&mut self) -> Option<ActiveSet> {
        if self.done {
            return None;
        }
        let out = ActiveSet::from_indices(self.p, &self.idx);
        self.advance();
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_remove_card() {
        let mut s = ActiveSet::empty(130);
        s.insert(3);
        s.insert(129);
        s.insert(3);
        assert_eq!(s.cardinality(), 2);
        assert_eq!(s.indices(), vec![3, 129]);
        s.remove(3);
        assert_eq!(s.indices(), vec![129]);
        assert_eq!(s.cardinality(), 1);
    }

    #[test]
    fn hex_round_trip() {
        let s = ActiveSet::from_indices(70, &[0, 4, 65]);
        assert_eq!(s.to_hex(), "0x20000000000000011");
        assert_eq!(ActiveSet::from_hex(70, &s.to_hex()).unwrap(), s);
        assert_eq!(ActiveSet::empty(5).to_hex(), "0x0");
        assert_eq!(ActiveSet::from_indices(1, &[0]).to_hex(), "0x1");
        assert!(ActiveSet::from_hex(3, "0x8").is_none());
    }

    #[test]
    fn subset_test() {
        let a = ActiveSet::from_indices(10, &[1, 2]);
        let b = ActiveSet::from_indices(10, &[1, 2, 7]);
        assert!(a.is_subset_of(&b));
        assert!(!b.is_subset_of(&a));
        assert!(ActiveSet::empty(10).is_subset_of(&a));
    }

    #[test]
    fn cursor_order_matches_sort() {
        let all: Vec<ActiveSet> = SubsetCursor::new(5, 3).collect();
        let expected_len = 1 + 5 + 10 + 10;
        assert_eq!(all.len(), expected_len);
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(all, sorted);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn cursor_full_power_set() {
        assert_eq!(SubsetCursor::new(4, 10).count(), 16);
        assert_eq!(SubsetCursor::new(0, 3).count(), 1);
    }
}
