//! Domain types for the probabilistic alignment model: alphabet, letter
//! distribution, symmetric score matrix, gap penalties and candidate
//! alignments.
//!
//! Every type is validated on construction and immutable afterwards, so a
//! model can be shared freely between worker threads.

mod gap;

pub use gap::{eval_gap, gamma_tail_sum, AsymptoticClass, GapFamily, GapPenalty, TailSum};

use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance on the total mass of a letter distribution.
pub const DIST_SUM_TOL: f64 = 1e-9;

/// Largest supported alphabet.
pub const MAX_ALPHABET: usize = 64;

/// Ordered list of distinct symbols. Letters are referred to by their index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Alphabet {
    symbols: Vec<String>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(symbols: impl IntoIterator<Item = S>) -> Result<Self> {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.len() < 2 || symbols.len() > MAX_ALPHABET {
            return Err(Error::InvalidAlphabet(format!(
                "size must be in 2..={MAX_ALPHABET}, got {}",
                symbols.len()
            )));
        }
        for (i, s) in symbols.iter().enumerate() {
            if s.is_empty() || s.chars().any(char::is_whitespace) {
                return Err(Error::InvalidAlphabet(format!("symbol {s:?} is not a single token")));
            }
            if symbols[..i].contains(s) {
                return Err(Error::InvalidAlphabet(format!("duplicate symbol {s:?}")));
            }
        }
        Ok(Self { symbols })
    }

    /// Alphabet whose symbols are the characters of `chars`.
    pub fn from_chars(chars: &str) -> Result<Self> {
        Self::new(chars.chars().map(String::from))
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn index_of(&self, symbol: &str) -> Option<u8> {
        self.symbols.iter().position(|s| s == symbol).map(|i| i as u8)
    }

    fn single_char(&self) -> bool {
        self.symbols.iter().all(|s| s.chars().count() == 1)
    }

    /// Encodes text into letter indices. Single-character alphabets read the
    /// text character by character (whitespace skipped); otherwise tokens are
    /// whitespace separated.
    pub fn encode(&self, text: &str) -> Result<Vec<u8>> {
        let lookup = |tok: &str| {
            self.index_of(tok)
                .ok_or_else(|| Error::parse("sequence", format!("symbol {tok:?} not in alphabet")))
        };
        if self.single_char() {
            let mut buf = [0u8; 4];
            text.chars()
                .filter(|c| !c.is_whitespace())
                .map(|c| lookup(c.encode_utf8(&mut buf)))
                .collect()
        } else {
            text.split_whitespace().map(lookup).collect()
        }
    }

    pub fn decode(&self, seq: &[u8]) -> String {
        let sep = if self.single_char() { "" } else { " " };
        seq.iter()
            .map(|&l| self.symbols[l as usize].as_str())
            .collect::<Vec<_>>()
            .join(sep)
    }
}

/// Letter distribution mu; strictly positive and normalized.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LetterDist {
    probs: Vec<f64>,
}

impl LetterDist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidDistribution("need at least two letters".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p > 0.0 && **p <= 1.0)) {
            return Err(Error::InvalidDistribution(format!("probability {p} not in (0, 1]")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > DIST_SUM_TOL {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        Ok(Self { probs })
    }

    pub fn uniform(size: usize) -> Result<Self> {
        Self::new(vec![1.0 / size as f64; size])
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, letter: u8) -> f64 {
        self.probs[letter as usize]
    }

    /// Probability of an i.i.d. word.
    pub fn word_prob(&self, word: &[u8]) -> f64 {
        word.iter().map(|&l| self.probs[l as usize]).product()
    }
}

/// Symmetric real score matrix K(a, b).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreMatrix {
    size: usize,
    entries: Vec<f64>,
    k_max: f64,
    k_min: f64,
}

impl ScoreMatrix {
    /// Builds from row-major entries. Symmetry must hold exactly; the matrix
    /// is never repaired.
    pub fn new(size: usize, entries: Vec<f64>) -> Result<Self> {
        if size < 2 || entries.len() != size * size {
            return Err(Error::InvalidScores(format!(
                "expected {size}x{size} entries, got {}",
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidScores("entries must be finite".into()));
        }
        for a in 0..size {
            for b in 0..a {
                if entries[a * size + b] != entries[b * size + a] {
                    return Err(Error::InvalidScores(format!("K({a},{b}) != K({b},{a})")));
                }
            }
        }
        let k_max = entries.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let k_min = entries.iter().copied().fold(f64::INFINITY, f64::min);
        if k_max <= 0.0 {
            return Err(Error::InvalidScores(format!("K_max = {k_max} must be positive")));
        }
        Ok(Self { size, entries, k_max, k_min })
    }

    pub fn match_mismatch(size: usize, match_score: f64, mismatch: f64) -> Result<Self> {
        let entries = (0..size * size)
            .map(|ix| if ix / size == ix % size { match_score } else { mismatch })
            .collect();
        Self::new(size, entries)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, a: u8, b: u8) -> f64 {
        self.entries[a as usize * self.size + b as usize]
    }

    #[inline]
    pub fn row(&self, a: u8) -> &[f64] {
        let start = a as usize * self.size;
        &self.entries[start..start + self.size]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn k_max(&self) -> f64 {
        self.k_max
    }

    pub fn k_min(&self) -> f64 {
        self.k_min
    }

    /// K + lambda, entrywise.
    pub fn shifted(&self, lambda: f64) -> Result<Self> {
        Self::new(self.size, self.entries.iter().map(|v| v + lambda).collect())
    }
}

/// Alphabet, letter law and score matrix satisfying E[K(x1, y1)] < 0 and
/// K_max > 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoringModel {
    alphabet: Alphabet,
    dist: LetterDist,
    scores: ScoreMatrix,
}

impl ScoringModel {
    pub fn new(alphabet: Alphabet, dist: LetterDist, scores: ScoreMatrix) -> Result<Self> {
        if dist.len() != alphabet.len() || scores.size() != alphabet.len() {
            return Err(Error::InvalidModel(format!(
                "alphabet has {} symbols, distribution {}, matrix {}",
                alphabet.len(),
                dist.len(),
                scores.size()
            )));
        }
        let model = Self { alphabet, dist, scores };
        let mean = model.expected_score();
        if mean >= 0.0 {
            return Err(Error::InvalidModel(format!("E[K] = {mean} must be negative")));
        }
        Ok(model)
    }

    /// Uniform letters over the characters of `symbols`, with a constant
    /// match and mismatch score.
    pub fn uniform_match_mismatch(symbols: &str, match_score: f64, mismatch: f64) -> Result<Self> {
        let alphabet = Alphabet::from_chars(symbols)?;
        let size = alphabet.len();
        Self::new(
            alphabet,
            LetterDist::uniform(size)?,
            ScoreMatrix::match_mismatch(size, match_score, mismatch)?,
        )
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn dist(&self) -> &LetterDist {
        &self.dist
    }

    pub fn scores(&self) -> &ScoreMatrix {
        &self.scores
    }

    pub fn size(&self) -> usize {
        self.alphabet.len()
    }

    pub fn k_max(&self) -> f64 {
        self.scores.k_max()
    }

    pub fn k_min(&self) -> f64 {
        self.scores.k_min()
    }

    pub fn expected_score(&self) -> f64 {
        let p = self.dist.probs();
        let mut total = 0.0;
        for a in 0..p.len() {
            for b in 0..p.len() {
                total += p[a] * p[b] * self.scores.get(a as u8, b as u8);
            }
        }
        total
    }

    /// The same model scored with K + lambda.
    pub fn shifted(&self, lambda: f64) -> Result<Self> {
        Self::new(self.alphabet.clone(), self.dist.clone(), self.scores.shifted(lambda)?)
    }
}

/// E exp(theta K(x1, y1)) under mu x mu.
pub fn letter_pair_mgf(model: &ScoringModel, theta: f64) -> f64 {
    let p = model.dist().probs();
    let k = model.scores();
    let mut total = 0.0;
    for a in 0..p.len() {
        for b in 0..p.len() {
            total += p[a] * p[b] * (theta * k.get(a as u8, b as u8)).exp();
        }
    }
    total
}

/// d/dtheta of [`letter_pair_mgf`].
pub fn letter_pair_mgf_derivative(model: &ScoringModel, theta: f64) -> f64 {
    let p = model.dist().probs();
    let k = model.scores();
    let mut total = 0.0;
    for a in 0..p.len() {
        for b in 0..p.len() {
            let s = k.get(a as u8, b as u8);
            total += p[a] * p[b] * s * (theta * s).exp();
        }
    }
    total
}

/// A nonempty candidate alignment: pairs (i, j), 1-based, strictly
/// increasing in both coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Alignment {
    pairs: Vec<(usize, usize)>,
}

impl Alignment {
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidAlignment("alignment must contain at least one pair".into()));
        }
        if pairs.iter().any(|&(i, j)| i == 0 || j == 0) {
            return Err(Error::InvalidAlignment("positions are 1-based".into()));
        }
        if pairs.windows(2).any(|w| w[1].0 <= w[0].0 || w[1].1 <= w[0].1) {
            return Err(Error::InvalidAlignment("pairs must increase strictly".into()));
        }
        Ok(Self { pairs })
    }

    pub(crate) fn from_valid(pairs: Vec<(usize, usize)>) -> Self {
        debug_assert!(Self::new(pairs.clone()).is_ok());
        Self { pairs }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first(&self) -> (usize, usize) {
        self.pairs[0]
    }

    pub fn last(&self) -> (usize, usize) {
        self.pairs[self.pairs.len() - 1]
    }
}
