//! Packing of string pairs into base-`k` integers and canonical forms under
//! joint alphabet permutations.
//!
//! A pair `(u, v)` of length-`h` strings is stored as the `2h`-digit base-`k`
//! number `uv`, most significant digit first. Two pairs that differ only by a
//! renaming of letters have the same expectations, so every pair is replaced
//! by the lexicographically smallest image under all `k!` renamings. That
//! minimum is obtained by relabeling letters `0, 1, 2, ...` in order of first
//! occurrence in `uv`, which turns canonical pairs into restricted growth
//! strings. Restricted growth strings have a closed-form rank, so the ordinal
//! of a canonical pair is computed arithmetically and no lookup table over
//! the `k^(2h)` code space is ever built.

use crate::{Error, Letter, MemoryBudget, Result};

/// Alphabet size `k` and window length `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Alphabet {
    k: u32,
    h: u32,
    code_space: u64,
}

impl Alphabet {
    pub fn new(k: u32, h: u32) -> Result<Alphabet> {
        if k < 2 {
            return Err(Error::InvalidConfig(format!(
                "alphabet size must be at least 2, got {k}"
            )));
        }
        if h < 1 {
            return Err(Error::InvalidConfig("window length must be at least 1".into()));
        }
        let code_space = (k as u64)
            .checked_pow(2 * h)
            .ok_or_else(|| Error::InvalidConfig(format!("k^(2h) = {k}^{} does not fit in 64 bits", 2 * h)))?;
        Ok(Alphabet { k, h, code_space })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn h(&self) -> u32 {
        self.h
    }

    /// Number of letters in a packed pair, `2h`.
    pub fn pair_len(&self) -> usize {
        2 * self.h as usize
    }

    /// `k^(2h)`, the size of the raw code space.
    pub fn code_space(&self) -> u64 {
        self.code_space
    }

    /// Parses a word written with letters `a, b, c, ...` (letter `a` is 0).
    pub fn parse_word(&self, word: &str) -> Result<Vec<Letter>> {
        parse_word(word, self.k)
    }

    pub fn format_word(&self, word: &[Letter]) -> String {
        format_word(word)
    }
}

/// Parses `a, b, c, ...` into letters `0, 1, 2, ...`, rejecting letters `>= k`.
pub fn parse_word(word: &str, k: u32) -> Result<Vec<Letter>> {
    word.chars()
        .map(|ch| {
            let letter = if ch.is_ascii_lowercase() {
                ch as u32 - 'a' as u32
            } else {
                return Err(Error::InvalidInput(format!("letter `{ch}` is not in a..z")));
            };
            if letter >= k {
                Err(Error::InvalidInput(format!(
                    "letter `{ch}` is outside an alphabet of size {k}"
                )))
            } else {
                Ok(letter)
            }
        })
        .collect()
}

/// Inverse of [`parse_word`]. Letters past `z` are written as `<n>`.
pub fn format_word(word: &[Letter]) -> String {
    word.iter()
        .map(|&l| {
            if l < 26 {
                char::from(b'a' + l as u8).to_string()
            } else {
                format!("<{l}>")
            }
        })
        .collect()
}

/// A pair of length-`h` words packed as a base-`k` integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairCode(pub u64);

/// Packs `(u, v)` as the base-`k` number `uv`.
pub fn encode_pair(u: &[Letter], v: &[Letter], alphabet: &Alphabet) -> Result<PairCode> {
    let h = alphabet.h as usize;
    if u.len() != h || v.len() != h {
        return Err(Error::InvalidInput(format!(
            "both words must have length {h}, got {} and {}",
            u.len(),
            v.len()
        )));
    }
    if let Some(&bad) = u.iter().chain(v).find(|&&l| l >= alphabet.k) {
        return Err(Error::InvalidInput(format!(
            "letter {bad} is outside an alphabet of size {}",
            alphabet.k
        )));
    }
    Ok(PairCode(pack_digits(u.iter().chain(v), alphabet.k)))
}

/// Splits a code back into `(u, v)`.
pub fn decode_pair(code: PairCode, alphabet: &Alphabet) -> Result<(Vec<Letter>, Vec<Letter>)> {
    let mut digits = pair_digits(code, alphabet)?;
    let v = digits.split_off(alphabet.h as usize);
    Ok((digits, v))
}

/// All `2h` digits of a code, most significant first.
pub fn pair_digits(code: PairCode, alphabet: &Alphabet) -> Result<Vec<Letter>> {
    check_range(code, alphabet)?;
    let mut digits = vec![0; alphabet.pair_len()];
    unpack_digits(code.0, alphabet.k, &mut digits);
    Ok(digits)
}

pub(crate) fn pack_digits<'a>(digits: impl IntoIterator<Item = &'a Letter>, k: u32) -> u64 {
    digits.into_iter().fold(0u64, |acc, &d| acc * k as u64 + d as u64)
}

pub(crate) fn unpack_digits(mut code: u64, k: u32, out: &mut [Letter]) {
    for slot in out.iter_mut().rev() {
        *slot = (code % k as u64) as Letter;
        code /= k as u64;
    }
}

fn check_range(code: PairCode, alphabet: &Alphabet) -> Result<()> {
    if code.0 >= alphabet.code_space {
        Err(Error::InvalidInput(format!(
            "code {} is outside [0, {})",
            code.0, alphabet.code_space
        )))
    } else {
        Ok(())
    }
}

/// A bijection on `0..k`; `image[l]` is where letter `l` goes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    image: Vec<Letter>,
}

impl Permutation {
    pub fn identity(k: u32) -> Permutation {
        Permutation {
            image: (0..k).collect(),
        }
    }

    /// Builds a permutation from an image table, checking it is a bijection.
    pub fn from_images(image: Vec<Letter>) -> Result<Permutation> {
        let mut seen = vec![false; image.len()];
        for &l in &image {
            let slot = seen
                .get_mut(l as usize)
                .ok_or_else(|| Error::InvalidInput(format!("image {l} is outside 0..{}", image.len())))?;
            if std::mem::replace(slot, true) {
                return Err(Error::InvalidInput(format!("image {l} appears twice")));
            }
        }
        Ok(Permutation { image })
    }

    pub fn apply(&self, letter: Letter) -> Letter {
        self.image[letter as usize]
    }

    pub fn apply_word(&self, word: &[Letter]) -> Vec<Letter> {
        word.iter().map(|&l| self.apply(l)).collect()
    }

    pub fn images(&self) -> &[Letter] {
        &self.image
    }
}

/// Relabels `word` by order of first occurrence into `out` and returns the
/// number of distinct letters. `word` and `out` may not alias; both have the
/// same length, at most 64.
#[inline]
pub(crate) fn relabel_first_occurrence(word: &[Letter], out: &mut [Letter]) -> u32 {
    debug_assert!(word.len() <= 64 && word.len() == out.len());
    let mut from = [0 as Letter; 64];
    let mut used = 0usize;
    for (slot, &l) in out.iter_mut().zip(word) {
        *slot = match from[..used].iter().position(|&f| f == l) {
            Some(i) => i as Letter,
            None => {
                from[used] = l;
                used += 1;
                (used - 1) as Letter
            }
        };
    }
    used as u32
}

/// Lexicographically minimal image of `uv` under all letter permutations,
/// together with a permutation achieving it.
///
/// Letters occurring in `uv` are renamed `0, 1, ...` in order of first
/// occurrence; the letters that do not occur receive the remaining values
/// in ascending order.
pub fn canonicalize(code: PairCode, alphabet: &Alphabet) -> Result<(PairCode, Permutation)> {
    let digits = pair_digits(code, alphabet)?;
    let k = alphabet.k as usize;
    let mut image = vec![Letter::MAX; k];
    let mut next = 0;
    for &d in &digits {
        if image[d as usize] == Letter::MAX {
            image[d as usize] = next;
            next += 1;
        }
    }
    for slot in image.iter_mut().filter(|s| **s == Letter::MAX) {
        *slot = next;
        next += 1;
    }
    let perm = Permutation { image };
    let rep = pack_digits(perm.apply_word(&digits).iter(), alphabet.k);
    Ok((PairCode(rep), perm))
}

/// Binary specialization: the canonical form is the smaller of the code and
/// its bitwise complement over `2h` bits.
pub fn canonicalize_binary(code: PairCode, h: u32) -> PairCode {
    let mask = if 2 * h >= 64 { u64::MAX } else { (1u64 << (2 * h)) - 1 };
    PairCode(code.0.min(!code.0 & mask))
}

/// Closed-form ranking of restricted growth strings of a fixed length over
/// at most `k` letters, in lexicographic order.
///
/// A restricted growth string starts with 0 and every later digit is at most
/// one more than the largest digit before it. Canonical pairs are exactly
/// these strings, and lexicographic order on them equals numeric order on
/// their codes.
#[derive(Debug, Clone)]
pub struct ClassRanker {
    len: usize,
    k: u32,
    width: usize,
    // completions[rem * width + j]: ways to fill `rem` more digits after a
    // prefix that uses `j` distinct letters.
    completions: Vec<u64>,
}

impl ClassRanker {
    pub fn new(len: usize, k: u32) -> ClassRanker {
        let width = (k as usize).min(len) + 2;
        let mut completions = vec![0u64; (len + 1) * width];
        completions[..width].fill(1);
        for rem in 1..=len {
            for j in 0..width {
                let stay = (j as u64).saturating_mul(completions[(rem - 1) * width + j]);
                let grow = if (j as u32) < k && j + 1 < width {
                    completions[(rem - 1) * width + j + 1]
                } else {
                    0
                };
                completions[rem * width + j] = stay.saturating_add(grow);
            }
        }
        ClassRanker {
            len,
            k,
            width,
            completions,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    #[inline]
    fn completions(&self, rem: usize, used: usize) -> u64 {
        self.completions[rem * self.width + used]
    }

    /// Number of restricted growth strings of this length.
    pub fn count(&self) -> u64 {
        if self.len == 0 {
            1
        } else {
            self.completions(self.len - 1, 1)
        }
    }

    /// Rank of a restricted growth string. The input must already be in
    /// canonical form.
    #[inline]
    pub fn rank(&self, digits: &[Letter]) -> u64 {
        debug_assert_eq!(digits.len(), self.len);
        let mut rank = 0u64;
        let mut used = 1usize;
        for (i, &d) in digits.iter().enumerate().skip(1) {
            let rem = self.len - 1 - i;
            rank += d as u64 * self.completions(rem, used);
            if d as usize == used {
                used += 1;
            }
        }
        rank
    }

    /// Restricted growth string with the given rank.
    pub fn unrank(&self, mut ordinal: u64, out: &mut [Letter]) {
        debug_assert_eq!(out.len(), self.len);
        debug_assert!(ordinal < self.count());
        if self.len == 0 {
            return;
        }
        out[0] = 0;
        let mut used = 1usize;
        for (i, slot) in out.iter_mut().enumerate().skip(1) {
            let rem = self.len - 1 - i;
            let block = self.completions(rem, used);
            let q = ordinal / block;
            if q < used as u64 {
                *slot = q as Letter;
                ordinal -= q * block;
            } else {
                *slot = used as Letter;
                ordinal -= used as u64 * block;
                used += 1;
            }
        }
    }

    /// Canonicalizes an arbitrary word and ranks it. `scratch` must have the
    /// ranker's length.
    #[inline]
    pub fn rank_word(&self, word: &[Letter], scratch: &mut [Letter]) -> u64 {
        relabel_first_occurrence(word, scratch);
        self.rank(scratch)
    }

    /// Iterates the restricted growth strings in ascending order, starting
    /// at `first`.
    pub fn iter_from(&self, first: u64) -> RgsIter {
        let mut digits = vec![0; self.len];
        let remaining = self.count().saturating_sub(first);
        if remaining > 0 {
            self.unrank(first, &mut digits);
        }
        RgsIter::new(digits, self.k, remaining)
    }
}

/// Lexicographic successor enumeration of restricted growth strings.
#[derive(Debug, Clone)]
pub struct RgsIter {
    digits: Vec<Letter>,
    // prefix_used[i]: distinct letters among digits[..i]
    prefix_used: Vec<u32>,
    k: u32,
    remaining: u64,
    started: bool,
}

impl RgsIter {
    fn new(digits: Vec<Letter>, k: u32, remaining: u64) -> RgsIter {
        let mut prefix_used = vec![0u32; digits.len() + 1];
        for i in 0..digits.len() {
            prefix_used[i + 1] = prefix_used[i].max(digits[i] + 1);
        }
        RgsIter {
            digits,
            prefix_used,
            k,
            remaining,
            started: false,
        }
    }

    /// Advances and returns the current string, or `None` when exhausted.
    pub fn next_digits(&mut self) -> Option<&[Letter]> {
        if self.remaining == 0 {
            return None;
        }
        if self.started {
            self.advance();
        }
        self.started = true;
        self.remaining -= 1;
        Some(&self.digits)
    }

    fn advance(&mut self) {
        let len = self.digits.len();
        let mut i = len;
        while i > 1 {
            i -= 1;
            let limit = self.prefix_used[i].min(self.k - 1);
            if self.digits[i] < limit {
                self.digits[i] += 1;
                self.prefix_used[i + 1] = self.prefix_used[i].max(self.digits[i] + 1);
                for j in i + 1..len {
                    self.digits[j] = 0;
                    self.prefix_used[j + 1] = self.prefix_used[j];
                }
                return;
            }
        }
        unreachable!("advanced past the last restricted growth string");
    }
}

/// Position of a canonical pair in the vector index space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CanonicalIndex {
    pub ordinal: u64,
    pub class_rep: PairCode,
}

/// The set of canonical pairs for an alphabet, in ascending code order.
#[derive(Debug, Clone)]
pub struct CanonicalSpace {
    alphabet: Alphabet,
    ranker: ClassRanker,
}

impl CanonicalSpace {
    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn ranker(&self) -> &ClassRanker {
        &self.ranker
    }

    /// Number of canonical classes.
    pub fn len(&self) -> u64 {
        self.ranker.count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Ordinal of the class containing `code`.
    pub fn ordinal_of(&self, code: PairCode) -> Result<u64> {
        let digits = pair_digits(code, &self.alphabet)?;
        let mut scratch = vec![0; digits.len()];
        Ok(self.ranker.rank_word(&digits, &mut scratch))
    }

    /// Representative code of the class with the given ordinal.
    pub fn representative(&self, ordinal: u64) -> Result<PairCode> {
        if ordinal >= self.len() {
            return Err(Error::InvalidInput(format!(
                "ordinal {ordinal} is outside [0, {})",
                self.len()
            )));
        }
        let mut digits = vec![0; self.alphabet.pair_len()];
        self.ranker.unrank(ordinal, &mut digits);
        Ok(PairCode(pack_digits(digits.iter(), self.alphabet.k)))
    }

    pub fn iter(&self) -> impl Iterator<Item = CanonicalIndex> + '_ {
        let mut rgs = self.ranker.iter_from(0);
        let k = self.alphabet.k;
        (0u64..).map_while(move |ordinal| {
            rgs.next_digits().map(|d| CanonicalIndex {
                ordinal,
                class_rep: PairCode(pack_digits(d.iter(), k)),
            })
        })
    }
}

/// Bytes taken by one fixed-point vector over the canonical classes.
pub fn vector_bytes(classes: u64) -> u64 {
    classes.saturating_mul(std::mem::size_of::<i64>() as u64)
}

/// Builds the canonical index space, refusing configurations whose three
/// live iteration vectors would not fit in `budget`.
pub fn enumerate_canonical(alphabet: &Alphabet, budget: MemoryBudget) -> Result<CanonicalSpace> {
    let ranker = ClassRanker::new(alphabet.pair_len(), alphabet.k);
    budget.check(
        "three iteration vectors",
        vector_bytes(ranker.count()).saturating_mul(3),
    )?;
    Ok(CanonicalSpace {
        alphabet: *alphabet,
        ranker,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn word(s: &str) -> Vec<Letter> {
        parse_word(s, 26).unwrap()
    }

    #[test]
    fn encode_examples() {
        let a2 = Alphabet::new(2, 2).unwrap();
        assert_eq!(encode_pair(&word("ab"), &word("ba"), &a2).unwrap(), PairCode(6));
        for k in 2..6 {
            let a = Alphabet::new(k, 2).unwrap();
            assert_eq!(encode_pair(&word("aa"), &word("aa"), &a).unwrap(), PairCode(0));
        }
        let a3 = Alphabet::new(3, 2).unwrap();
        assert_eq!(encode_pair(&word("cb"), &word("ac"), &a3).unwrap(), PairCode(65));
    }

    #[test]
    fn encode_rejects_bad_input() {
        let a = Alphabet::new(2, 2).unwrap();
        assert!(matches!(
            encode_pair(&word("a"), &word("ab"), &a),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            encode_pair(&word("ac"), &word("ab"), &a),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn decode_examples() {
        let a2 = Alphabet::new(2, 2).unwrap();
        let a3 = Alphabet::new(3, 2).unwrap();
        assert_eq!(decode_pair(PairCode(6), &a2).unwrap(), (word("ab"), word("ba")));
        assert_eq!(decode_pair(PairCode(0), &a3).unwrap(), (word("aa"), word("aa")));
        assert_eq!(decode_pair(PairCode(65), &a3).unwrap(), (word("cb"), word("ac")));
        assert!(decode_pair(PairCode(81), &a3).is_err());
    }

    #[test]
    fn alphabet_rejects_oversized_code_space() {
        assert!(Alphabet::new(2, 31).is_ok());
        assert!(Alphabet::new(2, 32).is_err());
        assert!(Alphabet::new(40, 6).is_ok());
        assert!(Alphabet::new(41, 6).is_err());
        assert!(Alphabet::new(1000, 6).is_err());
        assert!(Alphabet::new(1, 3).is_err());
        assert!(Alphabet::new(3, 0).is_err());
    }

    #[test]
    fn canonicalize_examples() {
        let a = Alphabet::new(2, 2).unwrap();
        let bb_ba = encode_pair(&word("bb"), &word("ba"), &a).unwrap();
        let aa_ab = encode_pair(&word("aa"), &word("ab"), &a).unwrap();
        let (rep, perm) = canonicalize(bb_ba, &a).unwrap();
        assert_eq!(rep, aa_ab);
        assert_eq!(perm.images(), &[1, 0]);
        let (rep, perm) = canonicalize(aa_ab, &a).unwrap();
        assert_eq!(rep, aa_ab);
        assert_eq!(perm, Permutation::identity(2));
    }

    #[test]
    fn unused_letters_fill_in_ascending_order() {
        let a = Alphabet::new(5, 1).unwrap();
        let code = encode_pair(&[3], &[1], &a).unwrap();
        let (rep, perm) = canonicalize(code, &a).unwrap();
        assert_eq!(decode_pair(rep, &a).unwrap(), (vec![0], vec![1]));
        assert_eq!(perm.images(), &[2, 1, 3, 0, 4]);
    }

    #[test]
    fn binary_path_matches_generic() {
        for h in 1..=5 {
            let a = Alphabet::new(2, h).unwrap();
            for code in 0..a.code_space() {
                let generic = canonicalize(PairCode(code), &a).unwrap().0;
                assert_eq!(canonicalize_binary(PairCode(code), h), generic);
            }
        }
    }

    #[test]
    fn class_counts() {
        let count = |k, h| {
            enumerate_canonical(&Alphabet::new(k, h).unwrap(), MemoryBudget::unlimited())
                .unwrap()
                .len()
        };
        assert_eq!(count(2, 1), 2);
        assert_eq!(count(2, 2), 8);
        assert_eq!(count(3, 1), 2);
        // Bell(12) minus the partitions with more than 10 blocks.
        assert_eq!(count(10, 6), 4_213_597 - 66 - 1);
        assert_eq!(count(25, 6), 4_213_597);
    }

    #[test]
    fn enumerate_small_spaces() {
        let a = Alphabet::new(2, 1).unwrap();
        let space = enumerate_canonical(&a, MemoryBudget::unlimited()).unwrap();
        let reps: Vec<_> = space.iter().map(|c| decode_pair(c.class_rep, &a).unwrap()).collect();
        assert_eq!(reps, vec![(word("a"), word("a")), (word("a"), word("b"))]);

        let a = Alphabet::new(3, 1).unwrap();
        let space = enumerate_canonical(&a, MemoryBudget::unlimited()).unwrap();
        let reps: Vec<_> = space.iter().map(|c| decode_pair(c.class_rep, &a).unwrap()).collect();
        assert_eq!(reps, vec![(word("a"), word("a")), (word("a"), word("b"))]);
    }

    #[test]
    fn enumerate_respects_budget() {
        let a = Alphabet::new(2, 14).unwrap();
        match enumerate_canonical(&a, MemoryBudget::from_bytes(1 << 20)) {
            Err(Error::Capacity { required, .. }) => assert_eq!(required, 3 * 8 * (1 << 27)),
            other => panic!("expected a capacity error, got {other:?}"),
        }
    }

    #[test]
    fn rank_unrank_and_iteration_agree() {
        for (len, k) in [(1, 2), (4, 2), (6, 3), (7, 4), (8, 10), (5, 5)] {
            let ranker = ClassRanker::new(len, k);
            let mut it = ranker.iter_from(0);
            let mut out = vec![0; len];
            let mut n = 0u64;
            while let Some(d) = it.next_digits() {
                assert_eq!(ranker.rank(d), n);
                ranker.unrank(n, &mut out);
                assert_eq!(out, d);
                n += 1;
            }
            assert_eq!(n, ranker.count());
            // resuming mid-way matches
            let mid = ranker.count() / 2;
            let mut it = ranker.iter_from(mid);
            ranker.unrank(mid, &mut out);
            assert_eq!(it.next_digits().unwrap(), &out[..]);
        }
    }

    #[test]
    fn space_lookup_round_trips() {
        let a = Alphabet::new(3, 2).unwrap();
        let space = enumerate_canonical(&a, MemoryBudget::unlimited()).unwrap();
        for idx in space.iter() {
            assert_eq!(space.ordinal_of(idx.class_rep).unwrap(), idx.ordinal);
            assert_eq!(space.representative(idx.ordinal).unwrap(), idx.class_rep);
        }
        assert!(space.representative(space.len()).is_err());
    }
}
