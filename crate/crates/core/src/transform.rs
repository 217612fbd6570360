//! The window transformation `T` mapping `(w_{n-1}, w_{n-2})` to `w_n`.
//!
//! For a canonical pair `(a·s, b·t)` of length-`h` windows:
//!
//! * same first letter (`a = b`): the average of `w_{n-2}(s·c, t·c')` over
//!   all `k²` letter pairs, plus one grid unit for LCS;
//! * different first letters: for edit distance, one grid unit plus the
//!   minimum of the average of `w_{n-1}(s·c, b·t)`, the average of
//!   `w_{n-1}(a·s, t·c)` and the `k²` average above; for LCS, the maximum of
//!   the two `k`-averages.
//!
//! Averages are rounded up for edit distance and down for LCS.
//!
//! Three layouts produce bit-identical results:
//!
//! * [`Backend::Binary`] derives successors from bit operations on the fly
//!   (`k = 2` only; the canonical code of a binary pair is the one whose
//!   first letter is `a`, so ordinal and code coincide).
//! * [`Backend::Dense`] stores all `k² + 2k` successor ordinals per class.
//! * [`Backend::Sparse`] groups appended letters that do not occur in the
//!   window (they are interchangeable) into one entry with a multiplicity,
//!   and factors the `k²` sum through the intermediate sums
//!   `Σ_c w(s'·c, x)` and `Σ_c w(y, t'·c)` over windows of total length
//!   `2h - 1`. Each class then costs at most `max(k, 2h)` reads.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::codec::{relabel_first_occurrence, Alphabet, ClassRanker};
use crate::fixedpoint::{div_ceil, div_floor, FxVector};
use crate::{Error, Letter, MemoryBudget, Problem, Result};

const CHUNK: usize = 1 << 14;

/// Storage layout of a [`TransformPlan`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    Binary,
    Dense,
    Sparse,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Binary => "binary",
            Backend::Dense => "dense",
            Backend::Sparse => "sparse",
        }
    }

    /// Binary for `k = 2`, dense when the dense plan and three vectors fit
    /// the budget, sparse otherwise.
    pub fn auto(alphabet: &Alphabet, budget: MemoryBudget) -> Backend {
        if alphabet.k() == 2 {
            return Backend::Binary;
        }
        let dense = estimate_plan_bytes(alphabet, Backend::Dense)
            .saturating_add(estimate_vector_bytes(alphabet).saturating_mul(3));
        if dense <= budget.bytes() {
            Backend::Dense
        } else {
            Backend::Sparse
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(Backend::Binary),
            "dense" => Ok(Backend::Dense),
            "sparse" => Ok(Backend::Sparse),
            other => Err(Error::InvalidInput(format!("unknown backend `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    SameLetter,
    DiffLetter,
}

/// Successor ordinals of one canonical pair `(a·s, b·t)`, indexed by the
/// appended letters.
///
/// `succ_both[c * k + c']` is the class of `(s·c, t·c')`; `succ_left[c]` the
/// class of `(s·c, b·t)`; `succ_right[c]` the class of `(a·s, t·c)`. The
/// latter two are empty for same-letter pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairRule {
    pub kind: RuleKind,
    pub succ_both: Vec<u64>,
    pub succ_left: Vec<u64>,
    pub succ_right: Vec<u64>,
}

/// Successor multisets of one canonical pair, keyed by class ordinal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleMultiset {
    pub kind: RuleKind,
    pub both: BTreeMap<u64, u64>,
    pub left: BTreeMap<u64, u64>,
    pub right: BTreeMap<u64, u64>,
}

fn count_into(map: &mut BTreeMap<u64, u64>, key: u64, mult: u64) {
    *map.entry(key).or_default() += mult;
}

impl PairRule {
    pub fn to_multiset(&self) -> RuleMultiset {
        let collect = |list: &[u64]| {
            let mut map = BTreeMap::new();
            for &o in list {
                count_into(&mut map, o, 1);
            }
            map
        };
        RuleMultiset {
            kind: self.kind,
            both: collect(&self.succ_both),
            left: collect(&self.succ_left),
            right: collect(&self.succ_right),
        }
    }
}

/// Compressed sparse rows of `(ordinal, multiplicity)` pairs, each row sorted
/// by ordinal.
#[derive(Debug, Clone, Default)]
struct Csr {
    offsets: Vec<u64>,
    entries: Vec<(u32, u32)>,
}

impl Csr {
    #[inline]
    fn row(&self, i: usize) -> &[(u32, u32)] {
        &self.entries[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    #[inline]
    fn weighted_sum(&self, i: usize, values: &[i64]) -> i64 {
        self.row(i).iter().map(|&(o, m)| m as i64 * values[o as usize]).sum()
    }

    fn bytes(&self) -> u64 {
        (self.offsets.len() * 8 + self.entries.len() * 8) as u64
    }
}

#[derive(Debug, Clone)]
struct DenseTable {
    same: Vec<bool>,
    stride: usize,
    // per class: k² both, then k left, then k right
    succ: Vec<u32>,
}

#[derive(Debug, Clone)]
struct SparseTable {
    // windows (s', x) with |s'| = h - 1, |x| = h: Σ_c w(s'·c, x)
    left_inter: Csr,
    // windows (y, t') with |y| = h, |t'| = h - 1: Σ_c w(y, t'·c)
    right_inter: Csr,
    same: Vec<bool>,
    left: Vec<u32>,
    right: Vec<u32>,
    // Σ_{c'} over left-intermediate windows (s, t·c')
    both: Csr,
}

#[derive(Debug, Clone)]
enum Layout {
    Binary,
    Dense(DenseTable),
    Sparse(SparseTable),
}

/// The transformation for one alphabet, problem and layout. Immutable once
/// built.
#[derive(Debug, Clone)]
pub struct TransformPlan {
    alphabet: Alphabet,
    problem: Problem,
    backend: Backend,
    classes: u64,
    layout: Layout,
}

/// Bytes of one iteration vector.
pub fn estimate_vector_bytes(alphabet: &Alphabet) -> u64 {
    crate::codec::vector_bytes(ClassRanker::new(alphabet.pair_len(), alphabet.k()).count())
}

/// Upper estimate of the bytes a plan occupies.
pub fn estimate_plan_bytes(alphabet: &Alphabet, backend: Backend) -> u64 {
    let k = alphabet.k() as u64;
    let len = alphabet.pair_len();
    let classes = ClassRanker::new(len, alphabet.k()).count();
    match backend {
        Backend::Binary => 0,
        Backend::Dense => classes.saturating_mul((k * k + 2 * k) * 4 + 1),
        Backend::Sparse => {
            let inter = ClassRanker::new(len - 1, alphabet.k()).count();
            let fan = k.min(len as u64) + 1;
            let rows = classes.saturating_mul(8 + 4 + 4 + 1 + fan * 8);
            rows.saturating_add(inter.saturating_mul(2 * (8 + fan * 8)))
        }
    }
}

struct Window<'a> {
    a: Letter,
    s: &'a [Letter],
    b: Letter,
    t: &'a [Letter],
}

fn split_window(digits: &[Letter]) -> Window<'_> {
    let h = digits.len() / 2;
    Window {
        a: digits[0],
        s: &digits[1..h],
        b: digits[h],
        t: &digits[h + 1..],
    }
}

/// Letter-indexed successors of a pair given by its `2h` digits.
fn explicit_rule(k: u32, digits: &[Letter], ranker: &ClassRanker) -> PairRule {
    let w = split_window(digits);
    let len = digits.len();
    let mut word = Vec::with_capacity(len);
    let mut scratch = vec![0; len];
    let mut rank = |word: &[Letter]| ranker.rank_word(word, &mut scratch);

    let mut succ_both = Vec::with_capacity((k * k) as usize);
    for c in 0..k {
        for c2 in 0..k {
            word.clear();
            word.extend_from_slice(w.s);
            word.push(c);
            word.extend_from_slice(w.t);
            word.push(c2);
            succ_both.push(rank(&word));
        }
    }
    let kind = if w.a == w.b {
        RuleKind::SameLetter
    } else {
        RuleKind::DiffLetter
    };
    let (mut succ_left, mut succ_right) = (Vec::new(), Vec::new());
    if kind == RuleKind::DiffLetter {
        for c in 0..k {
            word.clear();
            word.extend_from_slice(w.s);
            word.push(c);
            word.push(w.b);
            word.extend_from_slice(w.t);
            succ_left.push(rank(&word));

            word.clear();
            word.push(w.a);
            word.extend_from_slice(w.s);
            word.extend_from_slice(w.t);
            word.push(c);
            succ_right.push(rank(&word));
        }
    }
    PairRule {
        kind,
        succ_both,
        succ_left,
        succ_right,
    }
}

/// Successors `(s'·c, x)` of a left-intermediate window `e = s'x`, grouped:
/// each letter occurring in `e` once, every other letter as one entry.
fn left_inter_row(k: u32, h: usize, e: &[Letter], pair_ranker: &ClassRanker, out: &mut Vec<(u32, u32)>) {
    let used = distinct_in_rgs(e);
    let mut word = Vec::with_capacity(2 * h);
    let mut scratch = vec![0; 2 * h];
    out.clear();
    for c in 0..=used.min(k - 1) {
        let mult = if c < used { 1 } else { k - used };
        word.clear();
        word.extend_from_slice(&e[..h - 1]);
        word.push(c);
        word.extend_from_slice(&e[h - 1..]);
        out.push((pair_ranker.rank_word(&word, &mut scratch) as u32, mult));
    }
    sort_merge(out);
}

/// Successors `(y, t'·c)` of a right-intermediate window `e = yt'`.
fn right_inter_row(k: u32, e: &[Letter], pair_ranker: &ClassRanker, out: &mut Vec<(u32, u32)>) {
    let used = distinct_in_rgs(e);
    let mut word = Vec::with_capacity(e.len() + 1);
    out.clear();
    for c in 0..=used.min(k - 1) {
        let mult = if c < used { 1 } else { k - used };
        word.clear();
        word.extend_from_slice(e);
        word.push(c);
        // appending to a restricted growth string keeps it canonical
        out.push((pair_ranker.rank(&word) as u32, mult));
    }
    sort_merge(out);
}

struct Links {
    same: bool,
    left: u32,
    right: u32,
}

/// Links of a class into the intermediate spaces, and its `k²` row as a
/// multiset over left-intermediate windows `(s, t·c')`.
fn sparse_links(
    k: u32,
    digits: &[Letter],
    inter_ranker: &ClassRanker,
    need_both: bool,
    both: &mut Vec<(u32, u32)>,
) -> Links {
    let w = split_window(digits);
    let len = digits.len();
    let mut word = Vec::with_capacity(len);
    let mut scratch = vec![0; len - 1];

    word.extend_from_slice(w.s);
    word.push(w.b);
    word.extend_from_slice(w.t);
    let left = inter_ranker.rank_word(&word, &mut scratch) as u32;

    word.clear();
    word.push(w.a);
    word.extend_from_slice(w.s);
    word.extend_from_slice(w.t);
    let right = inter_ranker.rank_word(&word, &mut scratch) as u32;

    let same = w.a == w.b;
    both.clear();
    if same || need_both {
        word.clear();
        word.extend_from_slice(w.s);
        word.extend_from_slice(w.t);
        let mut st = vec![0; word.len()];
        let used = relabel_first_occurrence(&word, &mut st);
        st.push(0);
        let last = st.len() - 1;
        for c in 0..=used.min(k - 1) {
            let mult = if c < used { 1 } else { k - used };
            st[last] = c;
            both.push((inter_ranker.rank(&st) as u32, mult));
        }
        sort_merge(both);
    }
    Links { same, left, right }
}

fn distinct_in_rgs(e: &[Letter]) -> u32 {
    e.iter().copied().max().map_or(0, |m| m + 1)
}

fn sort_merge(row: &mut Vec<(u32, u32)>) {
    row.sort_unstable_by_key(|&(o, _)| o);
    row.dedup_by(|next, kept| {
        if next.0 == kept.0 {
            kept.1 += next.1;
            true
        } else {
            false
        }
    });
}

/// Row lengths and flattened entries for one chunk of ordinals.
type CsrChunk = (Vec<u32>, Vec<(u32, u32)>);

/// Builds a CSR over every restricted growth string of `ranker`, in parallel
/// over ordinal chunks.
fn build_csr<F>(ranker: &ClassRanker, row: F) -> Csr
where
    F: Fn(&[Letter], &mut Vec<(u32, u32)>) + Sync,
{
    let count = ranker.count();
    let chunks = count.div_ceil(CHUNK as u64);
    let parts: Vec<CsrChunk> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let start = ci * CHUNK as u64;
            let n = (count - start).min(CHUNK as u64) as usize;
            let mut it = ranker.iter_from(start);
            let mut lens = Vec::with_capacity(n);
            let mut entries = Vec::new();
            let mut buf = Vec::new();
            for _ in 0..n {
                let d = it.next_digits().expect("chunk within range");
                row(d, &mut buf);
                lens.push(buf.len() as u32);
                entries.extend_from_slice(&buf);
            }
            (lens, entries)
        })
        .collect();
    let total: usize = parts.iter().map(|(_, e)| e.len()).sum();
    let mut csr = Csr {
        offsets: Vec::with_capacity(count as usize + 1),
        entries: Vec::with_capacity(total),
    };
    csr.offsets.push(0);
    for (lens, entries) in parts {
        for len in lens {
            let last = *csr.offsets.last().unwrap();
            csr.offsets.push(last + len as u64);
        }
        csr.entries.extend_from_slice(&entries);
    }
    csr
}

/// Successor multisets of one class, computed through the sparse grouping
/// and intermediate factorization without building a plan. Works for any
/// `k` and `h` whose class counts fit in 32 bits, including alphabets too
/// large to pack pairs into 64-bit codes. `digits` must be a canonical pair
/// (a restricted growth string of length `2h`).
pub fn sparse_rule(k: u32, h: u32, digits: &[Letter]) -> Result<RuleMultiset> {
    let len = 2 * h as usize;
    if k < 2 || h < 1 || digits.len() != len {
        return Err(Error::InvalidInput(format!("need k >= 2, h >= 1 and {len} digits")));
    }
    let mut check = vec![0; len];
    relabel_first_occurrence(digits, &mut check);
    if check != digits || distinct_in_rgs(digits) > k {
        return Err(Error::InvalidInput("digits are not a canonical pair".into()));
    }
    let pair_ranker = ClassRanker::new(len, k);
    let inter_ranker = ClassRanker::new(len - 1, k);
    if pair_ranker.count() > u32::MAX as u64 {
        return Err(Error::InvalidConfig("more than 2^32 classes".into()));
    }
    let mut both = Vec::new();
    let links = sparse_links(k, digits, &inter_ranker, true, &mut both);
    let mut e = vec![0; len - 1];
    let mut row = Vec::new();
    let mut expand = |ordinal: u32, mult: u64, left: bool, into: &mut BTreeMap<u64, u64>| {
        inter_ranker.unrank(ordinal as u64, &mut e);
        if left {
            left_inter_row(k, h as usize, &e, &pair_ranker, &mut row);
        } else {
            right_inter_row(k, &e, &pair_ranker, &mut row);
        }
        for &(o, m) in &row {
            count_into(into, o as u64, m as u64 * mult);
        }
    };
    let kind = if links.same {
        RuleKind::SameLetter
    } else {
        RuleKind::DiffLetter
    };
    let mut out = RuleMultiset {
        kind,
        both: BTreeMap::new(),
        left: BTreeMap::new(),
        right: BTreeMap::new(),
    };
    for &(i, m) in &both {
        expand(i, m as u64, true, &mut out.both);
    }
    if !links.same {
        expand(links.left, 1, true, &mut out.left);
        expand(links.right, 1, false, &mut out.right);
    }
    Ok(out)
}

#[inline]
fn binary_canon(code: u64, top: u64, full: u64) -> u64 {
    if code & top != 0 {
        code ^ full
    } else {
        code
    }
}

/// Bit layout constants for the binary backend.
#[derive(Clone, Copy)]
struct BinaryGeometry {
    h: u32,
    half_mask: u64,
    tail_mask: u64,
    top: u64,
    full: u64,
}

impl BinaryGeometry {
    fn new(h: u32) -> BinaryGeometry {
        BinaryGeometry {
            h,
            half_mask: (1u64 << h) - 1,
            tail_mask: (1u64 << (h - 1)) - 1,
            top: 1u64 << (2 * h - 1),
            full: (1u64 << (2 * h)) - 1,
        }
    }

    /// (same, both[4], left[2], right[2]) for the class whose code is `o`.
    #[inline]
    fn successors(&self, o: u64) -> (bool, [u64; 4], [u64; 2], [u64; 2]) {
        let h = self.h;
        let u = o >> h;
        let v = o & self.half_mask;
        let same = (v >> (h - 1)) == 0;
        let s1 = (u & self.tail_mask) << 1;
        let t1 = (v & self.tail_mask) << 1;
        let canon = |x| binary_canon(x, self.top, self.full);
        let both = [
            canon((s1 << h) | t1),
            canon((s1 << h) | t1 | 1),
            canon(((s1 | 1) << h) | t1),
            canon(((s1 | 1) << h) | t1 | 1),
        ];
        let left = [canon((s1 << h) | v), canon(((s1 | 1) << h) | v)];
        let right = [(u << h) | t1, (u << h) | t1 | 1];
        (same, both, left, right)
    }
}

impl TransformPlan {
    /// Builds the plan for every canonical class.
    pub fn build(
        alphabet: &Alphabet,
        problem: Problem,
        backend: Backend,
        budget: MemoryBudget,
    ) -> Result<TransformPlan> {
        let k = alphabet.k();
        let len = alphabet.pair_len();
        let ranker = ClassRanker::new(len, k);
        let classes = ranker.count();
        budget.check(&format!("{backend} plan"), estimate_plan_bytes(alphabet, backend))?;
        let layout = match backend {
            Backend::Binary => {
                if k != 2 {
                    return Err(Error::InvalidConfig(format!(
                        "the binary backend needs k = 2, got k = {k}"
                    )));
                }
                if classes > usize::MAX as u64 {
                    return Err(Error::InvalidConfig("class count exceeds usize".into()));
                }
                Layout::Binary
            }
            Backend::Dense => {
                check_u32(classes)?;
                Layout::Dense(build_dense(k, &ranker))
            }
            Backend::Sparse => {
                check_u32(classes)?;
                Layout::Sparse(build_sparse(k, alphabet.h(), problem, &ranker))
            }
        };
        Ok(TransformPlan {
            alphabet: *alphabet,
            problem,
            backend,
            classes,
            layout,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn problem(&self) -> Problem {
        self.problem
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    /// Number of canonical classes, the length of every vector.
    pub fn classes(&self) -> u64 {
        self.classes
    }

    /// Bytes held by the plan's tables.
    pub fn bytes(&self) -> u64 {
        match &self.layout {
            Layout::Binary => 0,
            Layout::Dense(d) => (d.succ.len() * 4 + d.same.len()) as u64,
            Layout::Sparse(s) => {
                s.left_inter.bytes() + s.right_inter.bytes() + s.both.bytes() + (s.same.len() + 8 * s.left.len()) as u64
            }
        }
    }

    /// Letter-indexed successors of a class.
    pub fn rule(&self, ordinal: u64) -> Result<PairRule> {
        self.check_ordinal(ordinal)?;
        let k = self.alphabet.k() as usize;
        match &self.layout {
            Layout::Dense(d) => {
                let row = &d.succ[ordinal as usize * d.stride..(ordinal as usize + 1) * d.stride];
                let widen = |r: &[u32]| r.iter().map(|&o| o as u64).collect::<Vec<_>>();
                let same = d.same[ordinal as usize];
                Ok(PairRule {
                    kind: if same {
                        RuleKind::SameLetter
                    } else {
                        RuleKind::DiffLetter
                    },
                    succ_both: widen(&row[..k * k]),
                    succ_left: if same { vec![] } else { widen(&row[k * k..k * k + k]) },
                    succ_right: if same { vec![] } else { widen(&row[k * k + k..]) },
                })
            }
            Layout::Binary => {
                let (same, both, left, right) = BinaryGeometry::new(self.alphabet.h()).successors(ordinal);
                Ok(PairRule {
                    kind: if same {
                        RuleKind::SameLetter
                    } else {
                        RuleKind::DiffLetter
                    },
                    succ_both: both.to_vec(),
                    succ_left: if same { vec![] } else { left.to_vec() },
                    succ_right: if same { vec![] } else { right.to_vec() },
                })
            }
            Layout::Sparse(_) => {
                let ranker = ClassRanker::new(self.alphabet.pair_len(), self.alphabet.k());
                let mut digits = vec![0; self.alphabet.pair_len()];
                ranker.unrank(ordinal, &mut digits);
                Ok(explicit_rule(self.alphabet.k(), &digits, &ranker))
            }
        }
    }

    /// Successor multisets of a class as stored by this plan. For the sparse
    /// layout the intermediate rows are expanded.
    pub fn rule_multiset(&self, ordinal: u64) -> Result<RuleMultiset> {
        match &self.layout {
            Layout::Sparse(sp) => {
                self.check_ordinal(ordinal)?;
                let o = ordinal as usize;
                let same = sp.same[o];
                let mut out = RuleMultiset {
                    kind: if same {
                        RuleKind::SameLetter
                    } else {
                        RuleKind::DiffLetter
                    },
                    both: BTreeMap::new(),
                    left: BTreeMap::new(),
                    right: BTreeMap::new(),
                };
                for &(i, m) in sp.both.row(o) {
                    for &(p, m2) in sp.left_inter.row(i as usize) {
                        count_into(&mut out.both, p as u64, m as u64 * m2 as u64);
                    }
                }
                if !same {
                    for &(p, m) in sp.left_inter.row(sp.left[o] as usize) {
                        count_into(&mut out.left, p as u64, m as u64);
                    }
                    for &(p, m) in sp.right_inter.row(sp.right[o] as usize) {
                        count_into(&mut out.right, p as u64, m as u64);
                    }
                }
                Ok(out)
            }
            _ => Ok(self.rule(ordinal)?.to_multiset()),
        }
    }

    fn check_ordinal(&self, ordinal: u64) -> Result<()> {
        if ordinal >= self.classes {
            Err(Error::InvalidInput(format!(
                "ordinal {ordinal} is outside [0, {})",
                self.classes
            )))
        } else {
            Ok(())
        }
    }

    fn check_inputs(&self, prev: &FxVector, prev2: &FxVector) -> Result<()> {
        if prev.len() as u64 != self.classes || prev2.len() as u64 != self.classes {
            return Err(Error::InvalidInput(format!(
                "vectors must have {} entries, got {} and {}",
                self.classes,
                prev.len(),
                prev2.len()
            )));
        }
        if prev.scale() != prev2.scale() {
            return Err(Error::InvalidInput("vectors use different scales".into()));
        }
        // every aggregate is at most k² * max|w| + p in magnitude
        let k2 = (self.alphabet.k() as u64).pow(2);
        let bound = prev
            .max_abs()
            .max(prev2.max_abs())
            .checked_mul(k2)
            .and_then(|x| x.checked_add(prev.scale().p() as u64))
            .filter(|&x| x <= i64::MAX as u64);
        if bound.is_none() {
            return Err(Error::Overflow(
                "vector magnitudes too large for 64-bit aggregates".into(),
            ));
        }
        Ok(())
    }

    /// Applies the transformation: returns `T(prev, prev2)` where `prev` is
    /// the vector at index `n - 1` and `prev2` at `n - 2`.
    pub fn apply(&self, prev: &FxVector, prev2: &FxVector) -> Result<FxVector> {
        let mut out = FxVector::zeros(prev.scale(), self.classes as usize);
        self.apply_into(prev, prev2, &mut out)?;
        Ok(out)
    }

    /// As [`TransformPlan::apply`], writing into an existing vector.
    pub fn apply_into(&self, prev: &FxVector, prev2: &FxVector, out: &mut FxVector) -> Result<()> {
        self.check_inputs(prev, prev2)?;
        if out.len() as u64 != self.classes {
            return Err(Error::InvalidInput("output vector has the wrong length".into()));
        }
        let rule = Combine {
            problem: self.problem,
            p: prev.scale().p(),
            k: self.alphabet.k() as i64,
            k2: (self.alphabet.k() as i64).pow(2),
        };
        out.set_scale(prev.scale());
        let (wp, wp2) = (prev.values(), prev2.values());
        let dst = out.values_mut();
        match &self.layout {
            Layout::Binary => apply_binary(&rule, self.alphabet.h(), wp, wp2, dst),
            Layout::Dense(d) => apply_dense(&rule, d, wp, wp2, dst),
            Layout::Sparse(s) => apply_sparse(&rule, s, wp, wp2, dst),
        }
        Ok(())
    }
}

fn check_u32(classes: u64) -> Result<()> {
    if classes > u32::MAX as u64 {
        Err(Error::InvalidConfig(format!(
            "{classes} classes do not fit 32-bit ordinals"
        )))
    } else {
        Ok(())
    }
}

fn build_dense(k: u32, ranker: &ClassRanker) -> DenseTable {
    let classes = ranker.count() as usize;
    let ku = k as usize;
    let stride = ku * ku + 2 * ku;
    let mut succ = vec![0u32; classes * stride];
    let mut same = vec![false; classes];
    succ.par_chunks_mut(CHUNK * stride)
        .zip(same.par_chunks_mut(CHUNK))
        .enumerate()
        .for_each(|(ci, (rows, flags))| {
            let mut it = ranker.iter_from((ci * CHUNK) as u64);
            for (row, flag) in rows.chunks_mut(stride).zip(flags.iter_mut()) {
                let d = it.next_digits().expect("chunk within range");
                let rule = explicit_rule(k, d, ranker);
                *flag = rule.kind == RuleKind::SameLetter;
                for (slot, &o) in row.iter_mut().zip(&rule.succ_both) {
                    *slot = o as u32;
                }
                if !*flag {
                    for (slot, &o) in row[ku * ku..].iter_mut().zip(&rule.succ_left) {
                        *slot = o as u32;
                    }
                    for (slot, &o) in row[ku * ku + ku..].iter_mut().zip(&rule.succ_right) {
                        *slot = o as u32;
                    }
                }
            }
        });
    DenseTable { same, stride, succ }
}

fn build_sparse(k: u32, h: u32, problem: Problem, ranker: &ClassRanker) -> SparseTable {
    let len = 2 * h as usize;
    let inter_ranker = ClassRanker::new(len - 1, k);
    let left_inter = build_csr(&inter_ranker, |e, out| left_inter_row(k, h as usize, e, ranker, out));
    let right_inter = build_csr(&inter_ranker, |e, out| right_inter_row(k, e, ranker, out));

    let classes = ranker.count() as usize;
    let mut same = vec![false; classes];
    let mut left = vec![0u32; classes];
    let mut right = vec![0u32; classes];
    let need_both = problem == Problem::Edit;
    same.par_chunks_mut(CHUNK)
        .zip(left.par_chunks_mut(CHUNK))
        .zip(right.par_chunks_mut(CHUNK))
        .enumerate()
        .for_each(|(ci, ((sm, lf), rt))| {
            let mut it = ranker.iter_from((ci * CHUNK) as u64);
            let mut scratch = Vec::new();
            for i in 0..sm.len() {
                let d = it.next_digits().expect("chunk within range");
                let links = sparse_links(k, d, &inter_ranker, false, &mut scratch);
                sm[i] = links.same;
                lf[i] = links.left;
                rt[i] = links.right;
            }
        });
    let both = build_csr(ranker, |d, out| {
        sparse_links(k, d, &inter_ranker, need_both, out);
    });
    SparseTable {
        left_inter,
        right_inter,
        same,
        left,
        right,
        both,
    }
}

/// Combines the three successor sums of one class.
struct Combine {
    problem: Problem,
    p: i64,
    k: i64,
    k2: i64,
}

impl Combine {
    #[inline(always)]
    fn eval(
        &self,
        same: bool,
        both: impl FnOnce() -> i64,
        left: impl FnOnce() -> i64,
        right: impl FnOnce() -> i64,
    ) -> i64 {
        match (self.problem, same) {
            (Problem::Edit, true) => div_ceil(both(), self.k2),
            (Problem::Edit, false) => {
                let l = div_ceil(left(), self.k);
                let r = div_ceil(right(), self.k);
                let b = div_ceil(both(), self.k2);
                self.p + l.min(r).min(b)
            }
            (Problem::Lcs, true) => self.p + div_floor(both(), self.k2),
            (Problem::Lcs, false) => div_floor(left(), self.k).max(div_floor(right(), self.k)),
        }
    }
}

/// Adds row `r` of the full code space (first half `r`) to `dst`, reading the
/// complemented canonical row in reverse when `r` starts with `b`.
fn add_binary_row(dst: &mut [i64], values: &[i64], r: usize) {
    let width = dst.len();
    if r < width / 2 {
        let row = &values[r * width..(r + 1) * width];
        dst.iter_mut().zip(row).for_each(|(d, x)| *d += x);
    } else {
        let c = r ^ (width - 1);
        let row = &values[c * width..(c + 1) * width];
        dst.iter_mut().zip(row.iter().rev()).for_each(|(d, x)| *d += x);
    }
}

fn apply_binary(rule: &Combine, h: u32, prev: &[i64], prev2: &[i64], out: &mut [i64]) {
    let width = 1usize << h;
    let half = width / 2;
    // k = 2: averages over 2 and 4 entries are arithmetic shifts
    let up = |x: i64, sh: u32| -((-x) >> sh);
    let down = |x: i64, sh: u32| x >> sh;
    let (p, problem) = (rule.p, rule.problem);
    // Canonical codes start with `a`, so row `u` of `out` holds the pairs
    // (a·s, v) with s = u. Their successors live in rows 2u and 2u + 1
    // (first half s·c) and in row u itself (second half t·c).
    out.par_chunks_mut(width)
        .with_min_len((CHUNK / width).max(1))
        .enumerate()
        .for_each_init(
            || (vec![0i64; width], vec![0i64; width], vec![0i64; width]),
            |(both_row, left_row, pair), (u, dst)| {
                both_row.fill(0);
                left_row.fill(0);
                for r in [2 * u, 2 * u + 1] {
                    add_binary_row(both_row, prev2, r);
                    add_binary_row(left_row, prev, r);
                }
                // pair[t] = prev2 both-sum, pair[half + t] = prev right-sum
                let right_row = &prev[u * width..(u + 1) * width];
                for t in 0..half {
                    pair[t] = both_row[2 * t] + both_row[2 * t + 1];
                    pair[half + t] = right_row[2 * t] + right_row[2 * t + 1];
                }
                for (v, slot) in dst.iter_mut().enumerate() {
                    let t = v % half;
                    let (both, left, right) = (pair[t], left_row[v], pair[half + t]);
                    *slot = match (problem, v < half) {
                        (Problem::Edit, true) => up(both, 2),
                        (Problem::Edit, false) => p + up(left, 1).min(up(right, 1)).min(up(both, 2)),
                        (Problem::Lcs, true) => p + down(both, 2),
                        (Problem::Lcs, false) => down(left, 1).max(down(right, 1)),
                    };
                }
            },
        );
}

fn apply_dense(rule: &Combine, table: &DenseTable, prev: &[i64], prev2: &[i64], out: &mut [i64]) {
    let k = rule.k as usize;
    let stride = table.stride;
    let gather = |ords: &[u32], values: &[i64]| -> i64 { ords.iter().map(|&o| values[o as usize]).sum() };
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(ci, chunk)| {
        let base = ci * CHUNK;
        for (i, slot) in chunk.iter_mut().enumerate() {
            let o = base + i;
            let row = &table.succ[o * stride..(o + 1) * stride];
            *slot = rule.eval(
                table.same[o],
                || gather(&row[..k * k], prev2),
                || gather(&row[k * k..k * k + k], prev),
                || gather(&row[k * k + k..], prev),
            );
        }
    });
}

fn inter_sums(csr: &Csr, values: &[i64]) -> Vec<i64> {
    let mut sums = vec![0i64; csr.offsets.len() - 1];
    sums.par_chunks_mut(CHUNK).enumerate().for_each(|(ci, chunk)| {
        let base = ci * CHUNK;
        for (i, slot) in chunk.iter_mut().enumerate() {
            *slot = csr.weighted_sum(base + i, values);
        }
    });
    sums
}

fn apply_sparse(rule: &Combine, table: &SparseTable, prev: &[i64], prev2: &[i64], out: &mut [i64]) {
    let left_prev = inter_sums(&table.left_inter, prev);
    let right_prev = inter_sums(&table.right_inter, prev);
    let left_prev2 = inter_sums(&table.left_inter, prev2);
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(ci, chunk)| {
        let base = ci * CHUNK;
        for (i, slot) in chunk.iter_mut().enumerate() {
            let o = base + i;
            *slot = rule.eval(
                table.same[o],
                || table.both.weighted_sum(o, &left_prev2),
                || left_prev[table.left[o] as usize],
                || right_prev[table.right[o] as usize],
            );
        }
    });
}

/// `T(v_prev, v_prev2)` for an edit-distance plan.
pub fn apply_edit(plan: &TransformPlan, v_prev: &FxVector, v_prev2: &FxVector) -> Result<FxVector> {
    if plan.problem != Problem::Edit {
        return Err(Error::InvalidConfig("plan was built for LCS".into()));
    }
    plan.apply(v_prev, v_prev2)
}

/// `T(w_prev, w_prev2)` for an LCS plan.
pub fn apply_lcs(plan: &TransformPlan, w_prev: &FxVector, w_prev2: &FxVector) -> Result<FxVector> {
    if plan.problem != Problem::Lcs {
        return Err(Error::InvalidConfig("plan was built for edit distance".into()));
    }
    plan.apply(w_prev, w_prev2)
}
