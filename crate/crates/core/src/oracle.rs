//! Ground truth for small instances: the textbook dynamic programs, exact
//! expectations by exhaustive enumeration, and seeded Monte-Carlo estimates.
//!
//! Nothing here feeds the certified path. It exists so the window
//! inequalities and the subadditivity facts the method relies on can be
//! checked against exact values.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rand_pcg::Pcg64;
use rayon::prelude::*;

use crate::{Error, Letter, Problem, Result};

/// Largest `k^(2n)` the exhaustive enumeration accepts.
pub const ENUMERATION_LIMIT: u64 = 100_000_000;

/// Levenshtein distance with unit-cost substitutions, insertions and
/// deletions.
pub fn edit_distance(u: &[Letter], v: &[Letter]) -> usize {
    let mut row: Vec<usize> = (0..=v.len()).collect();
    for (i, &a) in u.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, &b) in v.iter().enumerate() {
            let next = (diag + usize::from(a != b)).min(row[j] + 1).min(row[j + 1] + 1);
            diag = row[j + 1];
            row[j + 1] = next;
        }
    }
    row[v.len()]
}

/// Length of a longest common subsequence.
pub fn lcs(u: &[Letter], v: &[Letter]) -> usize {
    let mut row = vec![0usize; v.len() + 1];
    for &a in u {
        let mut diag = 0;
        for (j, &b) in v.iter().enumerate() {
            let next = if a == b { diag + 1 } else { row[j].max(row[j + 1]) };
            diag = row[j + 1];
            row[j + 1] = next;
        }
    }
    row[v.len()]
}

fn score(problem: Problem, u: &[Letter], v: &[Letter]) -> usize {
    match problem {
        Problem::Edit => edit_distance(u, v),
        Problem::Lcs => lcs(u, v),
    }
}

/// An exact non-negative rational, kept unreduced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactExpectation {
    pub numerator: BigUint,
    pub denominator: BigUint,
}

impl ExactExpectation {
    pub fn new(numerator: BigUint, denominator: BigUint) -> Self {
        assert!(!denominator.is_zero(), "zero denominator");
        ExactExpectation { numerator, denominator }
    }

    pub fn from_integer(value: u64) -> Self {
        Self::new(BigUint::from(value), BigUint::one())
    }

    pub fn to_f64(&self) -> f64 {
        let n = self.numerator.to_f64().unwrap_or(f64::INFINITY);
        let d = self.denominator.to_f64().unwrap_or(f64::INFINITY);
        n / d
    }

    /// `self + other`, over the product of the denominators.
    pub fn add(&self, other: &Self) -> Self {
        Self::new(
            &self.numerator * &other.denominator + &other.numerator * &self.denominator,
            &self.denominator * &other.denominator,
        )
    }

    /// `self + 1`.
    pub fn add_one(&self) -> Self {
        Self::new(&self.numerator + &self.denominator, self.denominator.clone())
    }

    /// Arithmetic mean of values that share a denominator.
    pub fn mean(items: &[Self]) -> Self {
        assert!(!items.is_empty(), "mean of nothing");
        let den = &items[0].denominator;
        assert!(items.iter().all(|x| &x.denominator == den), "denominators differ");
        let sum: BigUint = items.iter().map(|x| &x.numerator).sum();
        Self::new(sum, den * BigUint::from(items.len()))
    }

    pub fn exact_cmp(&self, other: &Self) -> Ordering {
        (&self.numerator * &other.denominator).cmp(&(&other.numerator * &self.denominator))
    }

    pub fn min(self, other: Self) -> Self {
        if other.exact_cmp(&self) == Ordering::Less {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other.exact_cmp(&self) == Ordering::Greater {
            other
        } else {
            self
        }
    }
}

impl fmt::Display for ExactExpectation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{} = {}", self.numerator, self.denominator, self.to_f64())
    }
}

fn enumeration_size(k: u32, n: u32) -> Result<u64> {
    (k as u64)
        .checked_pow(2 * n)
        .filter(|&c| c <= ENUMERATION_LIMIT)
        .ok_or_else(|| Error::Capacity {
            what: format!("exhaustive enumeration of {k}^(2*{n}) string pairs"),
            required: (k as u64).saturating_pow(2 * n),
            budget: ENUMERATION_LIMIT,
        })
}

/// Writes the base-`k` digits of `index` into `out`, most significant first.
fn odometer(mut index: u64, k: u32, out: &mut [Letter]) {
    for slot in out.iter_mut().rev() {
        *slot = (index % k as u64) as Letter;
        index /= k as u64;
    }
}

/// Best score over the splits `i + j = n` of `s·x[..i]` against `t·y[..j]`,
/// read off one full DP table.
fn best_split(problem: Problem, s: &[Letter], t: &[Letter], x: &[Letter], y: &[Letter]) -> usize {
    let u: Vec<Letter> = s.iter().chain(x).copied().collect();
    let v: Vec<Letter> = t.iter().chain(y).copied().collect();
    let n = x.len();
    let width = v.len() + 1;
    let mut table = vec![0usize; (u.len() + 1) * width];
    for i in 0..=u.len() {
        for j in 0..=v.len() {
            table[i * width + j] = match (problem, i, j) {
                (Problem::Edit, 0, _) => j,
                (Problem::Edit, _, 0) => i,
                (Problem::Lcs, 0, _) | (Problem::Lcs, _, 0) => 0,
                (Problem::Edit, _, _) => {
                    let sub = table[(i - 1) * width + j - 1] + usize::from(u[i - 1] != v[j - 1]);
                    sub.min(table[(i - 1) * width + j] + 1)
                        .min(table[i * width + j - 1] + 1)
                }
                (Problem::Lcs, _, _) => {
                    if u[i - 1] == v[j - 1] {
                        table[(i - 1) * width + j - 1] + 1
                    } else {
                        table[(i - 1) * width + j].max(table[i * width + j - 1])
                    }
                }
            };
        }
    }
    let cells = (0..=n).map(|i| table[(s.len() + i) * width + t.len() + n - i]);
    match problem {
        Problem::Edit => cells.min().expect("at least one split"),
        Problem::Lcs => cells.max().expect("at least one split"),
    }
}

/// Exact expectation over all `(x, y)` in `A^n × A^n` of the best split score:
/// the minimum edit distance or the maximum LCS of `s·x[..i]` and `t·y[..j]`
/// with `i + j = n`. The denominator is `k^(2n)`.
pub fn exact_expected_min(problem: Problem, s: &[Letter], t: &[Letter], n: u32, k: u32) -> Result<ExactExpectation> {
    if k < 1 {
        return Err(Error::InvalidInput("alphabet must be non-empty".into()));
    }
    if let Some(&c) = s.iter().chain(t).find(|&&c| c >= k) {
        return Err(Error::InvalidInput(format!("letter {c} outside a {k}-letter alphabet")));
    }
    let total = enumeration_size(k, n)?;
    let half = (k as u64).pow(n);
    let n = n as usize;
    let sum: u64 = (0..half)
        .into_par_iter()
        .map_init(
            || (vec![0; n], vec![0; n]),
            |(x, y), xi| {
                odometer(xi, k, x);
                (0..half)
                    .map(|yi| {
                        odometer(yi, k, y);
                        best_split(problem, s, t, x, y) as u64
                    })
                    .sum::<u64>()
            },
        )
        .sum();
    Ok(ExactExpectation::new(BigUint::from(sum), BigUint::from(total)))
}

/// Which window inequality a [`FactViolation`] refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactKind {
    EditSameLetter,
    EditDiffLetter,
    LcsSameLetter,
    LcsDiffLetter,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactViolation {
    pub kind: FactKind,
    pub n: u32,
    pub first: Vec<Letter>,
    pub second: Vec<Letter>,
}

#[derive(Debug, Clone, Default)]
pub struct FactReport {
    pub checked: u64,
    pub violations: Vec<FactViolation>,
}

impl FactReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the four window inequalities against exact expectations for every
/// pair of length-`h` windows over `k` letters and every `2 <= n <= max_n`.
/// For edit distance (`V`):
///
/// ```text
/// V_n(as, at) <= avg_{c,c'} V_{n-2}(sc, tc')
/// V_n(as, bt) <= 1 + min(avg_c V_{n-1}(sc, bt), avg_c V_{n-1}(as, tc), avg_{c,c'} V_{n-2}(sc, tc'))
/// ```
///
/// and for LCS (`W`) the same shapes with `>=`, `1 + avg W_{n-2}` for equal
/// first letters and the larger one-sided average otherwise.
pub fn check_window_facts(k: u32, h: u32, max_n: u32) -> Result<FactReport> {
    if h == 0 {
        return Err(Error::InvalidInput("window length must be positive".into()));
    }
    let h = h as usize;
    let windows = (k as u64).pow(h as u32) as usize;
    let word = |i: usize| {
        let mut w = vec![0; h];
        odometer(i as u64, k, &mut w);
        w
    };
    let index = |w: &[Letter]| w.iter().fold(0usize, |acc, &c| acc * k as usize + c as usize);
    let mut report = FactReport::default();
    for problem in [Problem::Edit, Problem::Lcs] {
        // exact[m][i * windows + j] = expectation at budget m for windows (i, j)
        let mut exact: Vec<Vec<ExactExpectation>> = Vec::new();
        for m in 0..=max_n {
            let row = (0..windows * windows)
                .map(|ij| exact_expected_min(problem, &word(ij / windows), &word(ij % windows), m, k))
                .collect::<Result<Vec<_>>>()?;
            exact.push(row);
        }
        let at = |m: u32, s: &[Letter], t: &[Letter]| &exact[m as usize][index(s) * windows + index(t)];
        for n in 2..=max_n {
            for ij in 0..windows * windows {
                let (first, second) = (word(ij / windows), word(ij % windows));
                let (a, s) = (first[0], &first[1..]);
                let (b, t) = (second[0], &second[1..]);
                let ext = |base: &[Letter], c: Letter| -> Vec<Letter> { base.iter().copied().chain([c]).collect() };
                let both = ExactExpectation::mean(
                    &(0..k)
                        .flat_map(|c| (0..k).map(move |c2| (c, c2)))
                        .map(|(c, c2)| at(n - 2, &ext(s, c), &ext(t, c2)).clone())
                        .collect::<Vec<_>>(),
                );
                let left = || {
                    let mut shifted = ext(s, 0);
                    ExactExpectation::mean(
                        &(0..k)
                            .map(|c| {
                                *shifted.last_mut().unwrap() = c;
                                at(n - 1, &shifted, &second).clone()
                            })
                            .collect::<Vec<_>>(),
                    )
                };
                let right = || {
                    ExactExpectation::mean(
                        &(0..k)
                            .map(|c| at(n - 1, &first, &ext(t, c)).clone())
                            .collect::<Vec<_>>(),
                    )
                };
                let actual = at(n, &first, &second);
                let (kind, holds) = match (problem, a == b) {
                    (Problem::Edit, true) => (FactKind::EditSameLetter, actual.exact_cmp(&both).is_le()),
                    (Problem::Edit, false) => {
                        let bound = left().min(right()).min(both).add_one();
                        (FactKind::EditDiffLetter, actual.exact_cmp(&bound).is_le())
                    }
                    (Problem::Lcs, true) => (FactKind::LcsSameLetter, actual.exact_cmp(&both.add_one()).is_ge()),
                    (Problem::Lcs, false) => {
                        let bound = left().max(right());
                        (FactKind::LcsDiffLetter, actual.exact_cmp(&bound).is_ge())
                    }
                };
                report.checked += 1;
                if !holds {
                    report.violations.push(FactViolation { kind, n, first, second });
                }
            }
        }
    }
    Ok(report)
}

/// A counterexample to `d(uv, u'v') <= d(u, u') + d(v, v')` or
/// `LCS(uv, u'v') >= LCS(u, u') + LCS(v, v')`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecompositionViolation {
    pub problem: Problem,
    pub parts: [Vec<Letter>; 4],
}

#[derive(Debug, Clone, Default)]
pub struct DecompositionReport {
    pub cases: u64,
    pub violations: Vec<DecompositionViolation>,
}

impl DecompositionReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn merge(mut self, other: Self) -> Self {
        self.cases += other.cases;
        self.violations.extend(other.violations);
        self
    }
}

fn check_split(parts: [&[Letter]; 4]) -> DecompositionReport {
    let [u, v, u2, v2] = parts;
    let joined = |a: &[Letter], b: &[Letter]| -> Vec<Letter> { a.iter().chain(b).copied().collect() };
    let (uv, uv2) = (joined(u, v), joined(u2, v2));
    let mut report = DecompositionReport {
        cases: 2,
        violations: Vec::new(),
    };
    let owned = || [u.to_vec(), v.to_vec(), u2.to_vec(), v2.to_vec()];
    if edit_distance(&uv, &uv2) > edit_distance(u, u2) + edit_distance(v, v2) {
        report.violations.push(DecompositionViolation {
            problem: Problem::Edit,
            parts: owned(),
        });
    }
    if lcs(&uv, &uv2) < lcs(u, u2) + lcs(v, v2) {
        report.violations.push(DecompositionViolation {
            problem: Problem::Lcs,
            parts: owned(),
        });
    }
    report
}

/// Random instances of both decomposition inequalities; each of the four
/// pieces has a uniform length in `0..=max_len`.
pub fn decomposition_checks(samples: u64, max_len: usize, k: u32, seed: u64) -> DecompositionReport {
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let mut piece = || -> Vec<Letter> {
                let len = rng.gen_range(0..=max_len);
                (0..len).map(|_| rng.gen_range(0..k)).collect()
            };
            let parts = [piece(), piece(), piece(), piece()];
            check_split([&parts[0], &parts[1], &parts[2], &parts[3]])
        })
        .reduce(DecompositionReport::default, DecompositionReport::merge)
}

/// Every choice of four pieces of length `0..=max_len` over `k` letters.
pub fn decomposition_exhaustive(k: u32, max_len: usize) -> DecompositionReport {
    let words: Vec<Vec<Letter>> = (0..=max_len)
        .flat_map(|len| {
            (0..(k as u64).pow(len as u32)).map(move |i| {
                let mut w = vec![0; len];
                odometer(i, k, &mut w);
                w
            })
        })
        .collect();
    let m = words.len();
    (0..m * m)
        .into_par_iter()
        .map(|uv| {
            let (u, v) = (&words[uv / m], &words[uv % m]);
            words
                .iter()
                .flat_map(|u2| words.iter().map(move |v2| (u2, v2)))
                .map(|(u2, v2)| check_split([u, v, u2, v2]))
                .fold(DecompositionReport::default(), DecompositionReport::merge)
        })
        .reduce(DecompositionReport::default, DecompositionReport::merge)
}

/// Sample `i` of a run uses its own PCG stream, so results do not depend on
/// how samples are spread over threads.
fn sample_rng(seed: u64, i: u64) -> Pcg64 {
    Pcg64::new(seed as u128, i as u128)
}

/// Mean of `d_e(X, Y) / n` or `LCS(X, Y) / n` over random length-`n` strings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
    /// True when all `k^(2n)` pairs were enumerated instead of sampled.
    pub exact: bool,
}

/// Seeded Monte-Carlo estimate. Falls back to exact enumeration when there
/// are no more than `samples` string pairs.
pub fn mc_estimate(problem: Problem, k: u32, n: usize, samples: u64, seed: u64) -> Result<McEstimate> {
    if k < 1 || n == 0 || samples == 0 {
        return Err(Error::InvalidInput(
            "need k >= 1, n >= 1 and at least one sample".into(),
        ));
    }
    let space = (k as u64).checked_pow(2 * n as u32);
    if let Some(total) = space.filter(|&t| t <= samples) {
        let half = (k as u64).pow(n as u32);
        let sum: u64 = (0..total)
            .into_par_iter()
            .map_init(
                || (vec![0; n], vec![0; n]),
                |(x, y), i| {
                    odometer(i / half, k, x);
                    odometer(i % half, k, y);
                    score(problem, x, y) as u64
                },
            )
            .sum();
        return Ok(McEstimate {
            mean: sum as f64 / (total as f64 * n as f64),
            std_error: 0.0,
            samples: total,
            exact: true,
        });
    }
    let (sum, sum_sq) = (0..samples)
        .into_par_iter()
        .map_init(
            || (vec![0; n], vec![0; n]),
            |(x, y), i| {
                let mut rng = sample_rng(seed, i);
                x.iter_mut().chain(y.iter_mut()).for_each(|c| *c = rng.gen_range(0..k));
                let r = score(problem, x, y) as f64 / n as f64;
                (r, r * r)
            },
        )
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let count = samples as f64;
    let mean = sum / count;
    let variance = if samples > 1 {
        ((sum_sq - count * mean * mean) / (count - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        std_error: (variance / count).sqrt(),
        samples,
        exact: false,
    })
}
