//! Certificates and their independent verification.
//!
//! A certificate `(v, r)` is accepted when `T(v, v - r) <= v + r` holds for
//! every canonical class (edit distance) or `T(v, v - r) >= v + r` (LCS).
//! The verifier does not use [`crate::transform`]: it decodes every class
//! representative, rebuilds the successor windows letter by letter and sums
//! in 128-bit integers, rounding averages toward the certified side.
//!
//! Two file formats are supported. JSON keeps numerators as decimal strings.
//! The binary format is little-endian:
//!
//! ```text
//! "LKCB" | version u32 | problem u8 | k u32 | h u32 | p u64 | r_num i64 | count u64 | count × i64
//! ```

use std::cell::RefCell;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{Alphabet, ClassRanker};
use crate::{Error, Letter, Problem, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const MAGIC: &[u8; 4] = b"LKCB";
const HEADER_LEN: usize = 4 + 4 + 1 + 4 + 4 + 8 + 8 + 8;
const VERIFY_CHUNK: usize = 1 << 13;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub format_version: u32,
    pub problem: Problem,
    pub k: u32,
    pub h: u32,
    pub p: i64,
    pub r_num: i64,
    /// One numerator per canonical class, ascending representative order.
    pub values: Vec<i64>,
}

impl Certificate {
    pub fn new(problem: Problem, alphabet: &Alphabet, p: i64, r_num: i64, values: Vec<i64>) -> Self {
        Certificate {
            format_version: FORMAT_VERSION,
            problem,
            k: alphabet.k(),
            h: alphabet.h(),
            p,
            r_num,
            values,
        }
    }

    /// The bound `2r` this certificate proves.
    pub fn bound(&self) -> Bound {
        Bound {
            problem: self.problem,
            numer: 2 * self.r_num as i128,
            denom: self.p as i128,
        }
    }

    /// Checks everything except the inequality itself and returns the
    /// alphabet.
    pub fn check_structure(&self) -> Result<Alphabet> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Structural(format!(
                "unsupported format version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        if self.p < 1 {
            return Err(Error::Structural(format!("scale must be positive, got {}", self.p)));
        }
        let alphabet = Alphabet::new(self.k, self.h).map_err(|e| Error::Structural(format!("bad alphabet: {e}")))?;
        let classes = ClassRanker::new(alphabet.pair_len(), self.k).count();
        if self.values.len() as u64 != classes {
            return Err(Error::Structural(format!(
                "k = {}, h = {} has {classes} classes but the certificate holds {} values",
                self.k,
                self.h,
                self.values.len()
            )));
        }
        Ok(alphabet)
    }
}

/// Outcome of [`verify`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    /// The smallest ordinal whose inequality fails.
    Invalid {
        witness: u64,
    },
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }
}

/// Checks the certificate inequality at every class.
pub fn verify(cert: &Certificate) -> Result<Verdict> {
    let alphabet = cert.check_structure()?;
    let checker = Checker::new(cert, &alphabet);
    let classes = cert.values.len();
    let witness = (0..classes.div_ceil(VERIFY_CHUNK))
        .into_par_iter()
        .filter_map(|ci| checker.first_violation(ci * VERIFY_CHUNK, ((ci + 1) * VERIFY_CHUNK).min(classes)))
        .min();
    Ok(match witness {
        Some(w) => Verdict::Invalid { witness: w as u64 },
        None => Verdict::Valid,
    })
}

struct Checker<'a> {
    problem: Problem,
    k: i128,
    h: usize,
    p: i128,
    r: i128,
    values: &'a [i64],
    ranker: ClassRanker,
}

impl<'a> Checker<'a> {
    fn new(cert: &'a Certificate, alphabet: &Alphabet) -> Self {
        Checker {
            problem: cert.problem,
            k: cert.k as i128,
            h: cert.h as usize,
            p: cert.p as i128,
            r: cert.r_num as i128,
            values: &cert.values,
            ranker: ClassRanker::new(alphabet.pair_len(), alphabet.k()),
        }
    }

    fn first_violation(&self, start: usize, end: usize) -> Option<usize> {
        if self.k == 2 {
            return (start..end).find(|&o| !self.holds_binary(o as u64));
        }
        let mut it = self.ranker.iter_from(start as u64);
        let mut scratch = Scratch::new(2 * self.h);
        (start..end).find(|&o| {
            let digits = it.next_digits().expect("ordinal in range");
            !self.holds(o, digits, &mut scratch)
        })
    }

    /// Compares the transformed value at ordinal `o` with `v[o] + r`.
    fn accept(
        &self,
        o: usize,
        same: bool,
        both: impl Fn() -> i128,
        left: impl Fn() -> i128,
        right: impl Fn() -> i128,
    ) -> bool {
        let k2 = self.k * self.k;
        let rhs = self.values[o] as i128 + self.r;
        // the k² average is taken over v - r
        let shifted_both = || both() - k2 * self.r;
        match (self.problem, same) {
            (Problem::Edit, true) => ceil_div(shifted_both(), k2) <= rhs,
            (Problem::Edit, false) => {
                let best = ceil_div(left(), self.k)
                    .min(ceil_div(right(), self.k))
                    .min(ceil_div(shifted_both(), k2));
                self.p + best <= rhs
            }
            (Problem::Lcs, true) => self.p + floor_div(shifted_both(), k2) >= rhs,
            (Problem::Lcs, false) => floor_div(left(), self.k).max(floor_div(right(), self.k)) >= rhs,
        }
    }

    fn holds(&self, o: usize, digits: &[Letter], scratch: &mut Scratch) -> bool {
        let (u, v) = digits.split_at(self.h);
        let (a, s) = (u[0], &u[1..]);
        let (b, t) = (v[0], &v[1..]);
        let scratch = RefCell::new(scratch);
        // value of the class of the concatenated pieces
        let value_of = |parts: &[&[Letter]]| -> i128 {
            let mut sc = scratch.borrow_mut();
            let Scratch { word, canon } = &mut **sc;
            word.clear();
            for part in parts {
                word.extend_from_slice(part);
            }
            self.values[self.ranker.rank_word(word, canon) as usize] as i128
        };
        let distinct = |parts: &[&[Letter]]| -> Vec<Letter> {
            let mut used: Vec<Letter> = parts.iter().flat_map(|p| p.iter().copied()).collect();
            used.sort_unstable();
            used.dedup();
            used
        };
        let left = || {
            let used = distinct(&[s, &[b], t]);
            self.letter_sum(&used, |c| value_of(&[s, &[c, b], t]))
        };
        let right = || {
            let used = distinct(&[u, t]);
            self.letter_sum(&used, |c| value_of(&[u, t, &[c]]))
        };
        let both = || {
            let used = distinct(&[s, t]);
            self.letter_sum(&used, |c| {
                let mut with_c = used.clone();
                if let Err(pos) = with_c.binary_search(&c) {
                    with_c.insert(pos, c);
                }
                self.letter_sum(&with_c, |c2| value_of(&[s, &[c], t, &[c2]]))
            })
        };
        self.accept(o, a == b, both, left, right)
    }

    /// `Σ_{c in alphabet} f(c)`, evaluating `f` once per letter in `used`
    /// (sorted) and once for a single letter outside it, weighted by the
    /// number of such letters.
    fn letter_sum(&self, used: &[Letter], mut f: impl FnMut(Letter) -> i128) -> i128 {
        let mut total: i128 = used.iter().map(|&c| f(c)).sum();
        let outside = self.k - used.len() as i128;
        if outside > 0 {
            let fresh = (0..).find(|c| used.binary_search(c).is_err()).expect("a free letter");
            total += outside * f(fresh);
        }
        total
    }

    /// Binary alphabet: the class of a word is its bit string with the first
    /// letter forced to `a` by complementing.
    fn holds_binary(&self, o: u64) -> bool {
        let h = self.h as u32;
        let len = 2 * h;
        let ord = |u: u64, v: u64| -> u64 {
            let code = (u << h) | v;
            if code >> (len - 1) == 1 {
                !code & ((1u64 << len) - 1)
            } else {
                code
            }
        };
        let val = |x: u64| self.values[x as usize] as i128;
        let half = 1u64 << h;
        let u = o / half;
        let v = o % half;
        let tail = 1u64 << (h - 1);
        let (s, t) = (u % tail, v % tail);
        let same = v / tail == 0;
        let both = || {
            let mut sum = 0;
            for c in 0..2 {
                for c2 in 0..2 {
                    sum += val(ord(2 * s + c, 2 * t + c2));
                }
            }
            sum
        };
        let left = || val(ord(2 * s, v)) + val(ord(2 * s + 1, v));
        let right = || val(ord(u, 2 * t)) + val(ord(u, 2 * t + 1));
        self.accept(o as usize, same, both, left, right)
    }
}

struct Scratch {
    word: Vec<Letter>,
    canon: Vec<Letter>,
}

impl Scratch {
    fn new(len: usize) -> Self {
        Scratch {
            word: Vec::with_capacity(len),
            canon: vec![0; len],
        }
    }
}

fn floor_div(n: i128, d: i128) -> i128 {
    n.div_euclid(d)
}

fn ceil_div(n: i128, d: i128) -> i128 {
    -(-n).div_euclid(d)
}

/// Certificate file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertFormat {
    Json,
    Binary,
}

impl FromStr for CertFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(CertFormat::Json),
            "binary" => Ok(CertFormat::Binary),
            other => Err(Error::InvalidInput(format!("unknown certificate format `{other}`"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonCertificate {
    format_version: u32,
    problem: String,
    k: u32,
    h: u32,
    p: u64,
    r_num: String,
    values: Vec<String>,
}

impl Certificate {
    pub fn to_json(&self) -> String {
        let doc = JsonCertificate {
            format_version: self.format_version,
            problem: self.problem.name().to_string(),
            k: self.k,
            h: self.h,
            p: self.p as u64,
            r_num: self.r_num.to_string(),
            values: self.values.iter().map(i64::to_string).collect(),
        };
        serde_json::to_string_pretty(&doc).expect("certificate serializes")
    }

    pub fn from_json(text: &[u8]) -> Result<Certificate> {
        let doc: JsonCertificate =
            serde_json::from_slice(text).map_err(|e| Error::Structural(format!("invalid JSON certificate: {e}")))?;
        let problem = doc
            .problem
            .parse::<Problem>()
            .map_err(|_| Error::Structural(format!("unknown problem tag `{}`", doc.problem)))?;
        let parse = |s: &str| {
            s.parse::<i64>()
                .map_err(|_| Error::Structural(format!("`{s}` is not a 64-bit integer")))
        };
        let cert = Certificate {
            format_version: doc.format_version,
            problem,
            k: doc.k,
            h: doc.h,
            p: i64::try_from(doc.p).map_err(|_| Error::Structural("scale too large".into()))?,
            r_num: parse(&doc.r_num)?,
            values: doc.values.iter().map(|s| parse(s)).collect::<Result<_>>()?,
        };
        cert.check_structure()?;
        Ok(cert)
    }

    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&self.format_version.to_le_bytes())?;
        out.write_all(&[self.problem.tag()])?;
        out.write_all(&self.k.to_le_bytes())?;
        out.write_all(&self.h.to_le_bytes())?;
        out.write_all(&(self.p as u64).to_le_bytes())?;
        out.write_all(&self.r_num.to_le_bytes())?;
        out.write_all(&(self.values.len() as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(8 * 4096);
        for chunk in self.values.chunks(4096) {
            buf.clear();
            for v in chunk {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            out.write_all(&buf)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Certificate> {
        let mut header = [0u8; HEADER_LEN];
        read_exact_or_truncated(&mut input, &mut header)?;
        if &header[..4] != MAGIC {
            return Err(Error::Structural("missing LKCB magic".into()));
        }
        let u32_at = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
        let u64_at = |i: usize| u64::from_le_bytes(header[i..i + 8].try_into().unwrap());
        let format_version = u32_at(4);
        if format_version != FORMAT_VERSION {
            return Err(Error::Structural(format!(
                "unsupported format version {format_version} (expected {FORMAT_VERSION})"
            )));
        }
        let problem = Problem::from_tag(header[8])
            .ok_or_else(|| Error::Structural(format!("unknown problem tag {}", header[8])))?;
        let k = u32_at(9);
        let h = u32_at(13);
        let p = i64::try_from(u64_at(17)).map_err(|_| Error::Structural("scale too large".into()))?;
        let r_num = u64_at(25) as i64;
        let count = u64_at(33);
        let alphabet = Alphabet::new(k, h).map_err(|e| Error::Structural(format!("bad alphabet: {e}")))?;
        let classes = ClassRanker::new(alphabet.pair_len(), k).count();
        if count != classes {
            return Err(Error::Structural(format!(
                "k = {k}, h = {h} has {classes} classes but the header declares {count}"
            )));
        }
        let mut values = Vec::with_capacity(count as usize);
        let mut buf = vec![0u8; 8 * 4096];
        let mut remaining = count as usize;
        while remaining > 0 {
            let n = remaining.min(4096);
            read_exact_or_truncated(&mut input, &mut buf[..8 * n])?;
            values.extend(
                buf[..8 * n]
                    .chunks_exact(8)
                    .map(|b| i64::from_le_bytes(b.try_into().unwrap())),
            );
            remaining -= n;
        }
        let mut extra = [0u8; 1];
        if input.read(&mut extra)? != 0 {
            return Err(Error::Structural("trailing bytes after the values".into()));
        }
        let cert = Certificate {
            format_version,
            problem,
            k,
            h,
            p,
            r_num,
            values,
        };
        cert.check_structure()?;
        Ok(cert)
    }
}

fn read_exact_or_truncated<R: Read>(input: &mut R, buf: &mut [u8]) -> Result<()> {
    input.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Structural("certificate file is truncated".into())
        } else {
            Error::Io(e)
        }
    })
}

pub fn write_certificate(cert: &Certificate, path: &Path, format: CertFormat) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    match format {
        CertFormat::Binary => cert.write_binary(file),
        CertFormat::Json => {
            let mut file = file;
            file.write_all(cert.to_json().as_bytes())?;
            file.flush()?;
            Ok(())
        }
    }
}

/// Reads either format, telling them apart by the binary magic.
pub fn read_certificate(path: &Path) -> Result<Certificate> {
    let mut file = BufReader::new(File::open(path)?);
    let mut head = Vec::with_capacity(4);
    (&mut file).take(4).read_to_end(&mut head)?;
    if head == MAGIC {
        Certificate::read_binary(head.as_slice().chain(file))
    } else {
        let mut text = head;
        file.read_to_end(&mut text)?;
        Certificate::from_json(&text)
    }
}

/// The certified constant `2r = numer / denom`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bound {
    pub problem: Problem,
    pub numer: i128,
    pub denom: i128,
}

impl Bound {
    /// `<=` for edit distance, `>=` for LCS.
    pub fn relation(&self) -> &'static str {
        match self.problem {
            Problem::Edit => "<=",
            Problem::Lcs => ">=",
        }
    }

    pub fn constant_name(&self) -> &'static str {
        match self.problem {
            Problem::Edit => "alpha_k",
            Problem::Lcs => "gamma_k",
        }
    }

    /// Exact decimal when the denominator divides a power of ten; otherwise
    /// twelve digits rounded toward the weaker side of the bound.
    pub fn decimal(&self) -> String {
        format_ratio(self.numer, self.denom, self.problem)
    }

    pub fn to_f64(&self) -> f64 {
        self.numer as f64 / self.denom as f64
    }

    /// Whether this bound is at least as strong as `target` loosened by
    /// `slack` (`<= target + slack` for edit, `>= target - slack` for LCS).
    /// Both are decimal strings and the comparison is exact.
    pub fn within(&self, target: &str, slack: &str) -> Result<bool> {
        let (tn, td) = parse_decimal(target)?;
        let (sn, sd) = parse_decimal(slack)?;
        let (limit_n, limit_d) = match self.problem {
            Problem::Edit => (tn * sd + sn * td, td * sd),
            Problem::Lcs => (tn * sd - sn * td, td * sd),
        };
        let lhs = self.numer * limit_d;
        let rhs = limit_n * self.denom;
        Ok(match self.problem {
            Problem::Edit => lhs <= rhs,
            Problem::Lcs => lhs >= rhs,
        })
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.decimal())
    }
}

/// Parses a plain decimal such as `0.63792` or `-1.5` into `(numer, denom)`.
pub fn parse_decimal(text: &str) -> Result<(i128, i128)> {
    let bad = || Error::InvalidInput(format!("`{text}` is not a decimal number"));
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() || frac.len() > 30 {
        return Err(bad());
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let numer: i128 = if digits.is_empty() {
        0
    } else {
        digits.parse().map_err(|_| bad())?
    };
    let denom = 10i128.pow(frac.len() as u32);
    Ok((if neg { -numer } else { numer }, denom))
}

fn format_ratio(numer: i128, denom: i128, problem: Problem) -> String {
    let mut d = denom;
    let (mut twos, mut fives) = (0u32, 0u32);
    while d % 2 == 0 {
        d /= 2;
        twos += 1;
    }
    while d % 5 == 0 {
        d /= 5;
        fives += 1;
    }
    let (digits, scaled) = if d == 1 && twos.max(fives) <= 30 {
        let digits = twos.max(fives);
        (digits, numer * 10i128.pow(digits) / denom)
    } else {
        let scaled = numer * 10i128.pow(12);
        let q = match problem {
            Problem::Edit => -(-scaled).div_euclid(denom),
            Problem::Lcs => scaled.div_euclid(denom),
        };
        (12, q)
    };
    let sign = if scaled < 0 { "-" } else { "" };
    let mag = scaled.unsigned_abs();
    let pow = 10u128.pow(digits);
    let int = mag / pow;
    let frac = format!("{:0width$}", mag % pow, width = digits as usize);
    let frac = frac.trim_end_matches('0');
    if frac.is_empty() {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}
