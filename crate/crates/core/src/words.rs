//! Words in the free monoid on two letters `α` and `β`.
//!
//! A word types a tensor power: `α` legs carry the Hilbert space `H`, `β`
//! legs its conjugate `H̄`. The involution [`Word::hat`] reverses a word and
//! swaps the two letters. Interval words `[i, j]` are the alternating words
//! read off positions `i..j` of the infinite word `αβαβ…`.
//!
//! Text encoding uses `a` for `α`, `b` for `β` and the empty string for the
//! unit word.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    Alpha,
    Beta,
}

impl Letter {
    pub fn hat(self) -> Letter {
        match self {
            Letter::Alpha => Letter::Beta,
            Letter::Beta => Letter::Alpha,
        }
    }

    /// Letter sitting at global leg position `pos` (even positions are `α`).
    pub fn at_position(pos: usize) -> Letter {
        if pos % 2 == 0 {
            Letter::Alpha
        } else {
            Letter::Beta
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::Alpha => 'a',
            Letter::Beta => 'b',
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn empty() -> Word {
        Word(Vec::new())
    }

    pub fn new(letters: Vec<Letter>) -> Word {
        Word(letters)
    }

    pub fn letter(l: Letter) -> Word {
        Word(vec![l])
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Reverses the word and swaps `α ↔ β`.
    pub fn hat(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.hat()).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// True when the word has no `αα` and no `ββ` factor.
    pub fn is_alternating(&self) -> bool {
        self.0.windows(2).all(|p| p[0] != p[1])
    }

    pub fn subword(&self, start: usize, end: usize) -> Word {
        Word(self.0[start..end].to_vec())
    }

    /// Removes the two letters at `pos` and `pos + 1`.
    pub fn remove_pair(&self, pos: usize) -> Word {
        let mut v = self.0.clone();
        v.drain(pos..pos + 2);
        Word(v)
    }

    /// Inserts `other` before position `pos`.
    pub fn insert(&self, pos: usize, other: &Word) -> Word {
        let mut v = self.0[..pos].to_vec();
        v.extend_from_slice(&other.0);
        v.extend_from_slice(&self.0[pos..]);
        Word(v)
    }

    /// Maximal alternating runs as half-open `(start, end)` ranges.
    pub fn alternating_runs(&self) -> Vec<(usize, usize)> {
        let mut runs = Vec::new();
        if self.0.is_empty() {
            return runs;
        }
        let mut start = 0;
        for k in 1..self.0.len() {
            if self.0[k] == self.0[k - 1] {
                runs.push((start, k));
                start = k;
            }
        }
        runs.push((start, self.0.len()));
        runs
    }

    /// Net number of `α` letters minus `β` letters.
    pub fn balance(&self) -> i64 {
        self.0
            .iter()
            .map(|l| match l {
                Letter::Alpha => 1,
                Letter::Beta => -1,
            })
            .sum()
    }

    pub fn repeat(&self, times: usize) -> Word {
        Word(self.0.repeat(times))
    }

    /// All words of exactly `len` letters in lexicographic order (`a < b`).
    pub fn all_of_len(len: usize) -> Vec<Word> {
        (0..1usize << len)
            .map(|bits| {
                Word(
                    (0..len)
                        .map(|k| {
                            if bits >> (len - 1 - k) & 1 == 0 {
                                Letter::Alpha
                            } else {
                                Letter::Beta
                            }
                        })
                        .collect(),
                )
            })
            .collect()
    }

    /// All words with at most `max_len` letters, shortest first.
    pub fn all_up_to(max_len: usize) -> Vec<Word> {
        (0..=max_len).flat_map(Word::all_of_len).collect()
    }
}

/// The interval word `[i, j]`: letters at positions `i..j` of `αβαβ…`.
pub fn interval(i: usize, j: usize) -> Result<Word> {
    if i > j {
        return Err(Error::Domain(format!("interval [{i},{j}] has i > j")));
    }
    Ok(Word((i..j).map(Letter::at_position).collect()))
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortlex order: shorter words first, then lexicographic.
impl Ord for Word {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Word> {
        s.chars()
            .map(|c| match c {
                'a' | 'α' => Ok(Letter::Alpha),
                'b' | 'β' => Ok(Letter::Beta),
                other => Err(Error::Invalid(format!("unknown letter '{other}' in word '{s}'"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Word, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
