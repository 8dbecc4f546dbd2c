//! ICC-(N_B, s) constant-weight codes.
//!
//! Words are weight-`w` subsets of `{0..N_B}` with `w = (N_B + s) / 2`, in
//! lexicographic order of their sorted index lists, so `1110 < 1101 < 1011 < 0111`.

use std::fmt;
use std::io::Write;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Largest length whose codebook is held as an explicit word list.
pub const MATERIALIZE_MAX_N_B: usize = 28;
/// Memory cap on explicit word lists; larger books fall back to rank/unrank.
pub const MATERIALIZE_MAX_WORDS: u64 = 1 << 20;
/// Random pairs drawn when verifying a codebook that is not materialized.
pub const IMPLICIT_VERIFY_PAIRS: usize = 10_000;
/// Refuse to write more lines than this to a codebook text file.
pub const EXPORT_MAX_WORDS: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Codeword {
    bits: Vec<bool>,
}

impl Codeword {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn zeros(len: usize) -> Self {
        Self { bits: vec![false; len] }
    }

    pub fn from_indices(len: usize, ones: &[usize]) -> Self {
        let mut bits = vec![false; len];
        for &i in ones {
            bits[i] = true;
        }
        Self { bits }
    }

    /// Parses a string of '0'/'1' characters.
    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidParameter(format!("invalid codeword character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn ones(&self) -> Vec<usize> {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
    }

    /// Number of positions where both words are 1.
    pub fn overlap(&self, other: &Codeword) -> usize {
        self.bits.iter().zip(&other.bits).filter(|(&a, &b)| a && b).count()
    }
}

impl fmt::Display for Codeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Digit-by-digit Boolean sum.
pub fn superpose(x: &Codeword, y: &Codeword) -> Result<Codeword> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!("codeword lengths {} and {} differ", x.len(), y.len())));
    }
    Ok(Codeword::new(x.bits.iter().zip(&y.bits).map(|(&a, &b)| a || b).collect()))
}

pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * i)
}

/// `log₂` of a big integer without overflowing `f64`.
pub fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).log2();
    }
    let shift = bits - 64;
    (x >> shift).to_f64().unwrap_or(f64::INFINITY).log2() + shift as f64
}

fn big_ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    (log2_big(num) - log2_big(den)).exp2()
}

/// Weight `(N_B + s) / 2`, checking range and parity.
pub fn code_weight(n_b: usize, order: usize) -> Result<usize> {
    if order == 0 || n_b < order {
        return Err(Error::InvalidParameter(format!(
            "need N_B >= s >= 1, got N_B = {n_b}, s = {order}"
        )));
    }
    if (n_b + order) % 2 != 0 {
        return Err(Error::Parity { n_b, order });
    }
    Ok((n_b + order) / 2)
}

#[derive(Debug, Clone)]
pub struct Codebook {
    length: usize,
    order: usize,
    weight: usize,
    count: BigUint,
    words: Option<Vec<Codeword>>,
}

pub fn generate_codebook(n_b: usize, order: usize) -> Result<Codebook> {
    let weight = code_weight(n_b, order)?;
    let count = binomial(n_b, weight);
    let small = n_b <= MATERIALIZE_MAX_N_B && count <= BigUint::from(MATERIALIZE_MAX_WORDS);
    let words = small.then(|| enumerate_words(n_b, weight));
    Ok(Codebook { length: n_b, order, weight, count, words })
}

/// All weight-`w` words of length `n` in lexicographic order.
fn enumerate_words(n: usize, w: usize) -> Vec<Codeword> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..w).collect();
    loop {
        out.push(Codeword::from_indices(n, &idx));
        // Advance to the next sorted index list.
        let mut i = w;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < n - w + i {
                idx[i] += 1;
                for j in i + 1..w {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

impl Codebook {
    /// Explicit codebook from a word list; no structure is assumed.
    pub fn from_words(length: usize, order: usize, words: Vec<Codeword>) -> Result<Self> {
        if words.iter().any(|w| w.len() != length) {
            return Err(Error::Dimension("codeword length differs from codebook length".into()));
        }
        let weight = (length + order) / 2;
        let count = BigUint::from(words.len());
        Ok(Self { length, order, weight, count, words: Some(words) })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn weight(&self) -> usize {
        self.weight
    }

    pub fn count(&self) -> &BigUint {
        &self.count
    }

    pub fn is_materialized(&self) -> bool {
        self.words.is_some()
    }

    pub fn words(&self) -> Option<&[Codeword]> {
        self.words.as_deref()
    }

    /// Word at lexicographic rank `rank`.
    pub fn word(&self, rank: &BigUint) -> Option<Codeword> {
        if rank >= &self.count {
            return None;
        }
        match &self.words {
            Some(words) => words.get(rank.to_usize()?).cloned(),
            None => Some(unrank(self.length, self.weight, rank)),
        }
    }

    pub fn word_at(&self, rank: usize) -> Option<Codeword> {
        self.word(&BigUint::from(rank))
    }

    /// Lexicographic rank of `word`, or `None` when it is not in the book.
    pub fn rank_of(&self, word: &Codeword) -> Option<BigUint> {
        if word.len() != self.length {
            return None;
        }
        match &self.words {
            Some(words) => {
                if word.weight() == self.weight {
                    let r = rank(word);
                    if r.to_usize().and_then(|i| words.get(i)) == Some(word) {
                        return Some(r);
                    }
                }
                words.iter().position(|w| w == word).map(BigUint::from)
            }
            None => (word.weight() == self.weight).then(|| rank(word)),
        }
    }

    pub fn contains(&self, word: &Codeword) -> bool {
        self.rank_of(word).is_some()
    }

    /// Text form: header `icc <N_B> <s>`, then one word per line.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        if self.count > BigUint::from(EXPORT_MAX_WORDS) {
            return Err(Error::InvalidParameter(format!(
                "codebook has {} words, export limit is {EXPORT_MAX_WORDS}",
                self.count
            )));
        }
        writeln!(out, "icc {} {}", self.length, self.order)?;
        let n = self.count.to_u64().unwrap_or(0);
        for r in 0..n {
            let w = self.word(&BigUint::from(r)).expect("rank below count");
            writeln!(out, "{w}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_text(&mut buf)?;
        Ok(String::from_utf8(buf).expect("ascii output"))
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::InvalidParameter("empty codebook text".into()))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let bad_header = || Error::InvalidParameter(format!("bad codebook header {header:?}"));
        if parts.len() != 3 || parts[0] != "icc" {
            return Err(bad_header());
        }
        let length: usize = parts[1].parse().map_err(|_| bad_header())?;
        let order: usize = parts[2].parse().map_err(|_| bad_header())?;
        let words = lines
            .filter(|l| !l.is_empty())
            .map(Codeword::parse)
            .collect::<Result<Vec<_>>>()?;
        Self::from_words(length, order, words)
    }
}

fn unrank(n: usize, w: usize, rank: &BigUint) -> Codeword {
    let mut r = rank.clone();
    let mut bits = vec![false; n];
    let mut left = w;
    for (i, bit) in bits.iter_mut().enumerate() {
        if left == 0 {
            break;
        }
        // Words that put a one at position i come first.
        let with_one = binomial(n - i - 1, left - 1);
        if r < with_one {
            *bit = true;
            left -= 1;
        } else {
            r -= with_one;
        }
    }
    Codeword::new(bits)
}

fn rank(word: &Codeword) -> BigUint {
    let n = word.len();
    let mut left = word.weight();
    let mut r = BigUint::zero();
    for (i, &b) in word.bits().iter().enumerate() {
        if left == 0 {
            break;
        }
        if b {
            left -= 1;
        } else {
            r += binomial(n - i - 1, left - 1);
        }
    }
    r
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IccCheck {
    pub ok: bool,
    pub min_overlap: usize,
    /// A pair of words realizing a violation, if any.
    pub witness: Option<(Codeword, Codeword)>,
}

/// Checks the constant-weight and pairwise-overlap properties.
pub fn verify_icc(book: &Codebook) -> IccCheck {
    match book.words() {
        Some(words) => verify_explicit(book, words),
        None => verify_implicit(book),
    }
}

fn verify_explicit(book: &Codebook, words: &[Codeword]) -> IccCheck {
    let s = book.order();
    let mut min_overlap = usize::MAX;
    let mut min_pair = None;
    let mut duplicate = None;
    for (i, a) in words.iter().enumerate() {
        for (j, b) in words.iter().enumerate().skip(i + 1) {
            let o = a.overlap(b);
            if o < min_overlap {
                min_overlap = o;
                min_pair = Some((i, j));
            }
            if duplicate.is_none() && a == b {
                duplicate = Some((i, j));
            }
        }
    }
    if words.len() < 2 {
        min_overlap = words.first().map_or(0, Codeword::weight);
    }
    let bad_weight = words.iter().position(|w| w.weight() != book.weight());
    let pair = |(i, j): (usize, usize)| (words[i].clone(), words[j].clone());
    let witness = if min_overlap < s {
        min_pair.map(pair)
    } else if let Some(d) = duplicate {
        Some(pair(d))
    } else {
        bad_weight.map(|i| pair((i, i)))
    };
    IccCheck { ok: witness.is_none(), min_overlap, witness }
}

fn verify_implicit(book: &Codebook) -> IccCheck {
    let (n, w, s) = (book.length(), book.weight(), book.order());
    // Two weight-w subsets of an n-set share at least 2w - n ones.
    let bound = 2 * w - n;
    let mut rng = ChaCha8Rng::seed_from_u64(0x1cc0_5eed);
    let mut min_overlap = usize::MAX;
    let mut witness = None;
    for _ in 0..IMPLICIT_VERIFY_PAIRS {
        let a = random_word(n, w, &mut rng);
        let b = random_word(n, w, &mut rng);
        let o = a.overlap(&b);
        if o < min_overlap {
            min_overlap = o;
        }
        if o < s && witness.is_none() {
            witness = Some((a, b));
        }
    }
    let min_overlap = min_overlap.min(bound);
    IccCheck { ok: bound >= s && witness.is_none(), min_overlap, witness }
}

/// Uniform weight-`w` word of length `n`.
pub fn random_word<R: Rng + ?Sized>(n: usize, w: usize, rng: &mut R) -> Codeword {
    let picks = rand::seq::index::sample(rng, n, w);
    Codeword::from_indices(n, &picks.into_vec())
}

pub fn code_rate(n_b: usize, order: usize) -> Result<f64> {
    let w = code_weight(n_b, order)?;
    Ok(log2_big(&binomial(n_b, w)) / n_b as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IepReport {
    pub n_b: usize,
    pub l: usize,
    /// Interval length of the mean-AoA distribution (1 when not adjusted).
    pub k: usize,
    /// Exact value as `numerator / denominator`.
    pub numerator: BigUint,
    pub denominator: BigUint,
    pub p_i: f64,
    pub p_i_dpd: f64,
    /// Continuous AoA distribution: the error event has probability zero.
    pub cpd: bool,
}

/// Identification error probability `(C − 1) / 2^{N_B+1}` with `C = binom(N_B, (N_B+L)/2)`.
pub fn theoretical_iep(n_b: usize, l: usize) -> Result<IepReport> {
    let w = code_weight(n_b, l)?;
    let numerator = binomial(n_b, w) - BigUint::one();
    let denominator = BigUint::one() << (n_b + 1);
    debug_assert!({
        let (fnum, fden) = iep_factorial_form(n_b, l)?;
        &fnum * &denominator == &numerator * &fden
    });
    let p_i = big_ratio_to_f64(&numerator, &denominator);
    Ok(IepReport { n_b, l, k: 1, numerator, denominator, p_i, p_i_dpd: p_i, cpd: false })
}

/// `(N_B! − a!·b!) / (2^{N_B+1}·a!·b!)` with `a = (N_B+L)/2`, `b = (N_B−L)/2`, unreduced.
pub fn iep_factorial_form(n_b: usize, l: usize) -> Result<(BigUint, BigUint)> {
    let a = code_weight(n_b, l)?;
    let b = n_b - a;
    let ab = factorial(a) * factorial(b);
    let num = factorial(n_b) - &ab;
    let den = (BigUint::one() << (n_b + 1)) * ab;
    Ok((num, den))
}

/// Discrete AoA distribution over `k` points: divides by `k`.
pub fn dpd_adjust(report: &IepReport, k: usize) -> Result<IepReport> {
    if k == 0 {
        return Err(Error::InvalidParameter("interval length K must be >= 1".into()));
    }
    let mut r = report.clone();
    r.k = report.k * k;
    r.denominator = &report.denominator * k;
    r.p_i_dpd = report.p_i_dpd / k as f64;
    Ok(r)
}

/// Continuous AoA distribution: the error probability collapses to zero.
pub fn cpd_adjust(report: &IepReport) -> IepReport {
    let mut r = report.clone();
    r.cpd = true;
    r.p_i_dpd = 0.0;
    r.numerator = BigUint::zero();
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Codeword {
        Codeword::parse(s).unwrap()
    }

    #[test]
    fn book_4_2() {
        let book = generate_codebook(4, 2).unwrap();
        assert_eq!(book.weight(), 3);
        let words: Vec<String> = book.words().unwrap().iter().map(|c| c.to_string()).collect();
        assert_eq!(words, ["1110", "1101", "1011", "0111"]);
        let check = verify_icc(&book);
        assert!(check.ok);
        assert_eq!(check.min_overlap, 2);
    }

    #[test]
    fn book_square() {
        let book = generate_codebook(5, 5).unwrap();
        assert_eq!(book.count(), &BigUint::one());
        assert_eq!(book.word_at(0).unwrap().to_string(), "11111");
    }

    #[test]
    fn book_8_2_count() {
        let book = generate_codebook(8, 2).unwrap();
        assert_eq!(book.weight(), 5);
        assert_eq!(book.count(), &BigUint::from(56u32));
    }

    #[test]
    fn parity_and_range_errors() {
        assert!(matches!(generate_codebook(5, 2), Err(Error::Parity { .. })));
        assert!(generate_codebook(3, 5).is_err());
        assert!(generate_codebook(4, 0).is_err());
    }

    #[test]
    fn injected_light_word_fails() {
        let mut words = generate_codebook(4, 2).unwrap().words().unwrap().to_vec();
        words.push(w("1100"));
        let book = Codebook::from_words(4, 2, words).unwrap();
        let check = verify_icc(&book);
        assert!(!check.ok);
        let (a, b) = check.witness.unwrap();
        assert!(a.overlap(&b) < 2);
    }

    #[test]
    fn superpose_examples() {
        assert_eq!(superpose(&w("101"), &w("001")).unwrap(), w("101"));
        assert_eq!(superpose(&w("0110"), &w("0110")).unwrap(), w("0110"));
        assert_eq!(superpose(&w("0110"), &Codeword::zeros(4)).unwrap(), w("0110"));
        assert!(superpose(&w("01"), &w("011")).is_err());
    }

    #[test]
    fn rate_examples() {
        assert!((code_rate(4, 2).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(code_rate(6, 6).unwrap(), 0.0);
    }

    #[test]
    fn iep_examples() {
        let r = theoretical_iep(4, 2).unwrap();
        assert_eq!(r.p_i, 0.09375);
        assert_eq!(theoretical_iep(7, 7).unwrap().p_i, 0.0);
        let d = dpd_adjust(&r, 4).unwrap();
        assert_eq!(d.p_i_dpd, r.p_i / 4.0);
        assert_eq!(cpd_adjust(&r).p_i_dpd, 0.0);
    }

    #[test]
    fn unrank_matches_enumeration() {
        let book = generate_codebook(10, 4).unwrap();
        for (i, word) in book.words().unwrap().iter().enumerate() {
            assert_eq!(&unrank(10, 7, &BigUint::from(i)), word);
            assert_eq!(rank(word), BigUint::from(i));
        }
    }

    #[test]
    fn text_round_trip() {
        let book = generate_codebook(6, 2).unwrap();
        let text = book.to_text().unwrap();
        assert!(text.starts_with("icc 6 2\n111100\n"));
        let back = Codebook::parse_text(&text).unwrap();
        assert_eq!(back.words(), book.words());
    }

    #[test]
    fn large_book_is_implicit() {
        let book = generate_codebook(256, 6).unwrap();
        assert!(!book.is_materialized());
        let last = book.count() - BigUint::one();
        let word = book.word(&last).unwrap();
        assert_eq!(word.weight(), 131);
        assert_eq!(book.rank_of(&word), Some(last));
        assert!(verify_icc(&book).ok);
    }
}
