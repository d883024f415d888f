//! Letters and words over the alphabet `{a_1, A_1, ..., a_k, A_k}` of `k`
//! generators and their inverses.
//!
//! Two text encodings are supported:
//!
//! * compact: lowercase `a..z` are generators `1..26`, uppercase `A..Z` their
//!   inverses (`"abAB"`);
//! * signed integers: `g` is generator `g`, `-g` its inverse (`"1 2 -1 -2"`).
//!
//! Whitespace and commas are separators in both. A text containing a digit
//! or a minus sign is read as signed integers, anything else as compact.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// A generator or the inverse of a generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    generator: u32,
    inverted: bool,
}

impl Letter {
    /// `generator` is 1-based.
    pub fn new(generator: u32, inverted: bool) -> Self {
        assert!(generator >= 1, "generators are numbered from 1");
        Letter { generator, inverted }
    }

    pub fn generator(self) -> u32 {
        self.generator
    }

    pub fn is_inverted(self) -> bool {
        self.inverted
    }

    pub fn inverse(self) -> Self {
        Letter { generator: self.generator, inverted: !self.inverted }
    }

    /// Dense index in `0..2k`: generator `g` maps to `2(g-1)`, its inverse to `2(g-1)+1`.
    pub fn code(self) -> usize {
        2 * (self.generator as usize - 1) + self.inverted as usize
    }

    pub fn from_code(code: usize) -> Self {
        Letter { generator: (code / 2) as u32 + 1, inverted: code % 2 == 1 }
    }

    pub fn to_signed(self) -> i64 {
        if self.inverted {
            -(self.generator as i64)
        } else {
            self.generator as i64
        }
    }

    fn to_compact(self) -> Option<char> {
        if self.generator > 26 {
            return None;
        }
        let base = if self.inverted { b'A' } else { b'a' };
        Some((base + (self.generator - 1) as u8) as char)
    }
}

/// A finite word over the alphabet with `k` generators.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    k: u32,
    letters: Vec<Letter>,
}

impl Word {
    pub fn empty(k: u32) -> Self {
        Word { k, letters: Vec::new() }
    }

    pub fn new(k: u32, letters: Vec<Letter>) -> Result<Self> {
        check_alphabet(k)?;
        if let Some(bad) = letters.iter().find(|l| l.generator > k) {
            return Err(Error::GeneratorOutOfRange { generator: bad.generator, k });
        }
        Ok(Word { k, letters })
    }

    /// Builds a word from signed generator indices (`-g` is the inverse of `g`).
    pub fn from_signed(k: u32, values: &[i64]) -> Result<Self> {
        check_alphabet(k)?;
        let letters = values
            .iter()
            .enumerate()
            .map(|(position, &v)| signed_letter(v, k, position, &v.to_string()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Word { k, letters })
    }

    pub(crate) fn from_codes(k: u32, codes: impl IntoIterator<Item = usize>) -> Self {
        Word { k, letters: codes.into_iter().map(Letter::from_code).collect() }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn codes(&self) -> impl Iterator<Item = usize> + '_ {
        self.letters.iter().map(|l| l.code())
    }

    pub fn to_signed(&self) -> Vec<i64> {
        self.letters.iter().map(|l| l.to_signed()).collect()
    }

    /// Formal inverse: reversed, each letter inverted.
    pub fn inverse(&self) -> Word {
        Word { k: self.k, letters: self.letters.iter().rev().map(|l| l.inverse()).collect() }
    }

    pub fn concat(&self, other: &Word) -> Result<Word> {
        if self.k != other.k {
            return Err(Error::AlphabetMismatch(self.k, other.k));
        }
        let mut letters = Vec::with_capacity(self.len() + other.len());
        letters.extend_from_slice(&self.letters);
        letters.extend_from_slice(&other.letters);
        Ok(Word { k: self.k, letters })
    }

    pub fn push(&mut self, letter: Letter) {
        debug_assert!(letter.generator <= self.k);
        self.letters.push(letter);
    }

    /// Compact letter encoding; fails when a generator exceeds 26.
    pub fn format_compact(&self) -> Result<String> {
        self.letters.iter().map(|l| l.to_compact().ok_or(Error::CompactAlphabetTooLarge(l.generator))).collect()
    }

    /// Space separated signed integers.
    pub fn format_signed(&self) -> String {
        let parts: Vec<String> = self.letters.iter().map(|l| l.to_signed().to_string()).collect();
        parts.join(" ")
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.format_compact() {
            Ok(s) => f.write_str(&s),
            Err(_) => f.write_str(&self.format_signed()),
        }
    }
}

/// Words appear in JSON as arrays of signed integers.
impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.letters.iter().map(|l| l.to_signed()))
    }
}

fn check_alphabet(k: u32) -> Result<()> {
    if k < 1 {
        return Err(Error::AlphabetTooSmall { k, min: 1 });
    }
    Ok(())
}

fn signed_letter(v: i64, k: u32, position: usize, token: &str) -> Result<Letter> {
    if v == 0 {
        return Err(Error::MalformedToken { token: token.to_string(), position });
    }
    let generator = v.unsigned_abs();
    if generator > k as u64 {
        return Err(Error::GeneratorOutOfRange { generator: generator.min(u32::MAX as u64) as u32, k });
    }
    Ok(Letter::new(generator as u32, v < 0))
}

fn is_separator(c: char) -> bool {
    c.is_whitespace() || c == ','
}

/// Parses either text encoding (see the module docs).
pub fn parse_word(text: &str, k: u32) -> Result<Word> {
    check_alphabet(k)?;
    let signed = text.chars().any(|c| c.is_ascii_digit() || c == '-' || c == '+');
    let letters = if signed {
        text.split(is_separator)
            .filter(|t| !t.is_empty())
            .enumerate()
            .map(|(position, token)| {
                let v: i64 = token.parse().map_err(|_| Error::MalformedToken { token: token.to_string(), position })?;
                signed_letter(v, k, position, token)
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        text.chars()
            .filter(|&c| !is_separator(c))
            .enumerate()
            .map(|(position, c)| {
                let (generator, inverted) = match c {
                    'a'..='z' => (c as u32 - 'a' as u32 + 1, false),
                    'A'..='Z' => (c as u32 - 'A' as u32 + 1, true),
                    _ => return Err(Error::MalformedToken { token: c.to_string(), position }),
                };
                if generator > k {
                    return Err(Error::GeneratorOutOfRange { generator, k });
                }
                Ok(Letter::new(generator, inverted))
            })
            .collect::<Result<Vec<_>>>()?
    };
    Ok(Word { k, letters })
}

/// Cancels adjacent `x x^-1` pairs with a single stack pass.
pub fn free_reduce(w: &Word) -> Word {
    let mut stack: Vec<Letter> = Vec::with_capacity(w.len());
    for &x in &w.letters {
        if stack.last() == Some(&x.inverse()) {
            stack.pop();
        } else {
            stack.push(x);
        }
    }
    Word { k: w.k, letters: stack }
}

/// Free reduction followed by stripping matching inverse letters from both
/// ends. The result is a shortest representative of the conjugacy class.
pub fn cyclic_reduce(w: &Word) -> Word {
    let reduced = free_reduce(w);
    let letters = &reduced.letters;
    let (mut lo, mut hi) = (0, letters.len());
    while hi - lo >= 2 && letters[lo] == letters[hi - 1].inverse() {
        lo += 1;
        hi -= 1;
    }
    Word { k: w.k, letters: letters[lo..hi].to_vec() }
}

/// `h · w · h^-1`.
pub fn conjugate(w: &Word, h: &Word) -> Result<Word> {
    h.concat(w)?.concat(&h.inverse())
}

/// Every word of length `n` over `2k` letters, in lexicographic code order.
pub fn all_words(n: usize, k: u32) -> impl Iterator<Item = Word> {
    let base = 2 * k as usize;
    let total = (base as u128).pow(n as u32);
    (0..total).map(move |index| word_from_index(index, n, k))
}

/// The `index`-th word of length `n` in base-`2k` digit order (first letter most significant).
pub fn word_from_index(mut index: u128, n: usize, k: u32) -> Word {
    let base = 2 * k as u128;
    let mut codes = vec![0usize; n];
    for slot in codes.iter_mut().rev() {
        *slot = (index % base) as usize;
        index /= base;
    }
    Word::from_codes(k, codes)
}
