//! Words, cylinders, block codes and shift-window checks over small finite
//! alphabets.
//!
//! Every certificate produced elsewhere in the crate is ultimately a list of
//! window comparisons performed by the functions in this module.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// A symbol of a finite alphabet `{0, 1, ..., k-1}`.
pub type Symbol = u8;

/// Largest alphabet that still has a one-character rendering (`0-9a-z`).
pub const MAX_ALPHABET: u8 = 36;

/// Separator used when concatenating words for prefix-function matching.
const SEPARATOR: Symbol = u8::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymbolicError {
    #[error("window start {0} is negative on a one-sided point")]
    NegativeStart(i64),
    #[error("window length must be at least 1")]
    EmptyWindow,
    #[error("offset {n} out of range 1..={max}")]
    OffsetOutOfRange { n: usize, max: usize },
    #[error("invalid symbol character {0:?}")]
    InvalidSymbol(char),
    #[error("symbol {symbol} outside alphabet of size {size}")]
    OutsideAlphabet { symbol: Symbol, size: u8 },
    #[error("words must have a common length (found {0} and {1})")]
    UnequalLengths(usize, usize),
    #[error("empty word")]
    EmptyWord,
    #[error("block code images must differ")]
    IdenticalImages,
    #[error("block {index} ({block}) is not an image of the code")]
    CodeError { index: usize, block: Word },
    #[error("ambient word length {len} is not a multiple of block length {block_len}")]
    RaggedInput { len: usize, block_len: usize },
    #[error("block stream needs at least one block")]
    NoBlocks,
    #[error("block stream choice {choice} has no block")]
    MissingBlock { choice: Symbol },
    #[error("two-sided and one-sided points cannot be mixed")]
    SidednessMismatch,
}

/// A finite word over a small alphabet.
///
/// Renders as a plain symbol string (`"0110"`); symbols above 9 use `a-z`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(Vec<Symbol>);

impl Word {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Word(symbols)
    }

    pub fn constant(symbol: Symbol, len: usize) -> Self {
        Word(vec![symbol; len])
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn into_symbols(self) -> Vec<Symbol> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut out = Vec::with_capacity(self.len() + other.len());
        out.extend_from_slice(&self.0);
        out.extend_from_slice(&other.0);
        Word(out)
    }

    pub fn push(&mut self, symbol: Symbol) {
        self.0.push(symbol);
    }

    /// True when every symbol equals the first one (the empty word is not constant).
    pub fn is_constant(&self) -> bool {
        match self.0.first() {
            Some(&first) => self.0.iter().all(|&s| s == first),
            None => false,
        }
    }

    /// Swaps the symbols 0 and 1. Only meaningful for binary words.
    pub fn flip_binary(&self) -> Word {
        Word(self.0.iter().map(|&s| 1 - s.min(1)).collect())
    }

    pub fn check_alphabet(&self, size: u8) -> Result<(), SymbolicError> {
        match self.0.iter().find(|&&s| s >= size) {
            Some(&symbol) => Err(SymbolicError::OutsideAlphabet { symbol, size }),
            None => Ok(()),
        }
    }
}

impl From<&[Symbol]> for Word {
    fn from(symbols: &[Symbol]) -> Self {
        Word(symbols.to_vec())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            let c = char::from_digit(u32::from(s), u32::from(MAX_ALPHABET)).unwrap_or('?');
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl FromStr for Word {
    type Err = SymbolicError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| {
                c.to_digit(u32::from(MAX_ALPHABET))
                    .map(|d| d as Symbol)
                    .ok_or(SymbolicError::InvalidSymbol(c))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Word)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    #[default]
    OneSided,
    /// Doubly-infinite sequences with an anchored origin at coordinate 0.
    TwoSided,
}

/// A pure index-to-symbol rule with a human-readable description.
#[derive(Clone)]
pub struct SymbolRule {
    description: String,
    rule: Arc<dyn Fn(i64) -> Symbol + Send + Sync>,
}

impl SymbolRule {
    pub fn new(description: impl Into<String>, rule: impl Fn(i64) -> Symbol + Send + Sync + 'static) -> Self {
        SymbolRule { description: description.into(), rule: Arc::new(rule) }
    }

    pub fn description(&self) -> &str {
        &self.description
    }
}

impl fmt::Debug for SymbolRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymbolRule").field("description", &self.description).finish()
    }
}

#[derive(Debug, Clone)]
pub enum PointKind {
    /// `preamble` followed by `period` repeated forever. On two-sided points
    /// negative coordinates continue the period to the left:
    /// `x_n = period[n mod |period|]` for `n < 0`.
    EventuallyPeriodic { preamble: Word, period: Word },
    /// Concatenation of equal-length `blocks`, block `k` chosen by symbol `k`
    /// of `choices`.
    BlockStream { choices: Box<PointSpec>, blocks: Vec<Word> },
    Rule(SymbolRule),
    /// `x_n = inner_{n + by}`.
    Shifted { inner: Box<PointSpec>, by: i64 },
}

/// A finitely described infinite symbol sequence.
#[derive(Debug, Clone)]
pub struct PointSpec {
    kind: PointKind,
    sidedness: Sidedness,
}

impl PointSpec {
    pub fn eventually_periodic(preamble: Word, period: Word, sidedness: Sidedness) -> Result<Self, SymbolicError> {
        if period.is_empty() {
            return Err(SymbolicError::EmptyWord);
        }
        Ok(PointSpec { kind: PointKind::EventuallyPeriodic { preamble, period }, sidedness })
    }

    pub fn periodic(period: Word) -> Result<Self, SymbolicError> {
        Self::eventually_periodic(Word::default(), period, Sidedness::OneSided)
    }

    pub fn block_stream(choices: PointSpec, blocks: Vec<Word>) -> Result<Self, SymbolicError> {
        let first = blocks.first().ok_or(SymbolicError::NoBlocks)?;
        if first.is_empty() {
            return Err(SymbolicError::EmptyWord);
        }
        if let Some(bad) = blocks.iter().find(|b| b.len() != first.len()) {
            return Err(SymbolicError::UnequalLengths(first.len(), bad.len()));
        }
        let sidedness = choices.sidedness;
        Ok(PointSpec { kind: PointKind::BlockStream { choices: Box::new(choices), blocks }, sidedness })
    }

    pub fn rule(rule: SymbolRule, sidedness: Sidedness) -> Self {
        PointSpec { kind: PointKind::Rule(rule), sidedness }
    }

    /// The point `σ^by(self)`. One-sided points only admit `by >= 0`.
    pub fn shifted(self, by: i64) -> Result<Self, SymbolicError> {
        if self.sidedness == Sidedness::OneSided && by < 0 {
            return Err(SymbolicError::NegativeStart(by));
        }
        let sidedness = self.sidedness;
        Ok(PointSpec { kind: PointKind::Shifted { inner: Box::new(self), by }, sidedness })
    }

    pub fn kind(&self) -> &PointKind {
        &self.kind
    }

    pub fn sidedness(&self) -> Sidedness {
        self.sidedness
    }

    pub fn symbol_at(&self, n: i64) -> Result<Symbol, SymbolicError> {
        if n < 0 && self.sidedness == Sidedness::OneSided {
            return Err(SymbolicError::NegativeStart(n));
        }
        match &self.kind {
            PointKind::EventuallyPeriodic { preamble, period } => {
                let pre = preamble.len() as i64;
                let p = period.len() as i64;
                let s = if n < 0 {
                    period.symbols()[n.rem_euclid(p) as usize]
                } else if n < pre {
                    preamble.symbols()[n as usize]
                } else {
                    period.symbols()[((n - pre) % p) as usize]
                };
                Ok(s)
            }
            PointKind::BlockStream { choices, blocks } => {
                let len = blocks[0].len() as i64;
                let choice = choices.symbol_at(n.div_euclid(len))?;
                let block = blocks.get(choice as usize).ok_or(SymbolicError::MissingBlock { choice })?;
                Ok(block.symbols()[n.rem_euclid(len) as usize])
            }
            PointKind::Rule(rule) => Ok((rule.rule)(n)),
            PointKind::Shifted { inner, by } => inner.symbol_at(n + by),
        }
    }
}

/// `(x_start, ..., x_{start+len-1})`.
pub fn window(point: &PointSpec, start: i64, len: usize) -> Result<Word, SymbolicError> {
    if len == 0 {
        return Err(SymbolicError::EmptyWindow);
    }
    if start < 0 && point.sidedness() == Sidedness::OneSided {
        return Err(SymbolicError::NegativeStart(start));
    }
    (0..len as i64).map(|i| point.symbol_at(start + i)).collect::<Result<Vec<_>, _>>().map(Word)
}

fn check_offset(n: usize, len: usize) -> Result<(), SymbolicError> {
    if n == 0 || n >= len {
        return Err(SymbolicError::OffsetOutOfRange { n, max: len.saturating_sub(1) });
    }
    Ok(())
}

/// True iff `u` does not overlap itself at shift `n`, i.e. `[u] ∩ σ^n([u]) = ∅`
/// in the one-sided full shift.
pub fn self_overlap_free(u: &Word, n: usize) -> Result<bool, SymbolicError> {
    check_offset(n, u.len())?;
    let s = u.symbols();
    Ok(s[n..] != s[..s.len() - n])
}

/// Common length of a generator set.
pub fn common_length(generators: &[Word]) -> Result<usize, SymbolicError> {
    let first = generators.first().ok_or(SymbolicError::NoBlocks)?;
    if first.is_empty() {
        return Err(SymbolicError::EmptyWord);
    }
    for g in generators {
        if g.len() != first.len() {
            return Err(SymbolicError::UnequalLengths(first.len(), g.len()));
        }
    }
    Ok(first.len())
}

/// True iff, for every ordered pair `(a, b)` of generators, the length-τ
/// window of `ab` starting at `j` is not a generator. This implies
/// `K ∩ σ^j(K) = ∅` for `K = generators^∞`.
pub fn pair_window_disjointness(generators: &[Word], j: usize) -> Result<bool, SymbolicError> {
    let tau = common_length(generators)?;
    check_offset(j, tau)?;
    for a in generators {
        for b in generators {
            let (head, tail) = (&a.symbols()[j..], &b.symbols()[..j]);
            if generators.iter().any(|g| &g.symbols()[..tau - j] == head && &g.symbols()[tau - j..] == tail) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Two-sided variant: every window at offsets `j` and `τ + j` of every
/// three-generator concatenation differs from all generators.
pub fn triple_window_disjointness(generators: &[Word], j: usize) -> Result<bool, SymbolicError> {
    let tau = common_length(generators)?;
    check_offset(j, tau)?;
    let mut text = Vec::with_capacity(3 * tau);
    for a in generators {
        for b in generators {
            for c in generators {
                text.clear();
                text.extend_from_slice(a.symbols());
                text.extend_from_slice(b.symbols());
                text.extend_from_slice(c.symbols());
                for start in [j, tau + j] {
                    let w = &text[start..start + tau];
                    if generators.iter().any(|g| g.symbols() == w) {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

/// True iff the generators have pairwise distinct suffixes from position `n`.
pub fn suffix_injectivity(generators: &[Word], n: usize) -> Result<bool, SymbolicError> {
    let tau = common_length(generators)?;
    check_offset(n, tau)?;
    for (i, a) in generators.iter().enumerate() {
        for b in &generators[i + 1..] {
            if a.symbols()[n..] == b.symbols()[n..] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Z-array: `z[i]` is the length of the longest common prefix of `s` and `s[i..]`.
pub(crate) fn z_array(s: &[Symbol]) -> Vec<usize> {
    let n = s.len();
    let mut z = vec![0; n];
    if n == 0 {
        return z;
    }
    z[0] = n;
    let (mut l, mut r) = (0, 0);
    for i in 1..n {
        if i < r {
            z[i] = (r - i).min(z[i - l]);
        }
        while i + z[i] < n && s[z[i]] == s[i + z[i]] {
            z[i] += 1;
        }
        if i + z[i] > r {
            l = i;
            r = i + z[i];
        }
    }
    z
}

/// Longest common prefix of `pattern` with `text[i..]`, for every `i`.
pub(crate) fn prefix_matches(pattern: &[Symbol], text: &[Symbol]) -> Vec<usize> {
    let mut s = Vec::with_capacity(pattern.len() + 1 + text.len());
    s.extend_from_slice(pattern);
    s.push(SEPARATOR);
    s.extend_from_slice(text);
    let z = z_array(&s);
    z[pattern.len() + 1..].to_vec()
}

/// Pair-window disjointness for every offset at once, in `O(|G|³ τ)` time.
/// Entry `j` is meaningful for `1 <= j < τ`; entry 0 is always `false`.
pub fn pair_window_disjoint_offsets(generators: &[Word]) -> Result<Vec<bool>, SymbolicError> {
    let tau = common_length(generators)?;
    let mut disjoint = vec![true; tau];
    disjoint[0] = false;
    let mut text = Vec::with_capacity(2 * tau);
    for a in generators {
        for b in generators {
            text.clear();
            text.extend_from_slice(a.symbols());
            text.extend_from_slice(b.symbols());
            for g in generators {
                let lcp = prefix_matches(g.symbols(), &text);
                for (j, flag) in disjoint.iter_mut().enumerate().skip(1) {
                    if lcp[j] >= tau {
                        *flag = false;
                    }
                }
            }
        }
    }
    Ok(disjoint)
}

/// A two-symbol block code `0 ↦ φ(0)`, `1 ↦ φ(1)` with equal-length images.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockCode {
    phi0: Word,
    phi1: Word,
}

impl BlockCode {
    pub fn new(phi0: Word, phi1: Word) -> Result<Self, SymbolicError> {
        if phi0.is_empty() {
            return Err(SymbolicError::EmptyWord);
        }
        if phi0.len() != phi1.len() {
            return Err(SymbolicError::UnequalLengths(phi0.len(), phi1.len()));
        }
        if phi0 == phi1 {
            return Err(SymbolicError::IdenticalImages);
        }
        Ok(BlockCode { phi0, phi1 })
    }

    pub fn block_len(&self) -> usize {
        self.phi0.len()
    }

    pub fn image(&self, symbol: Symbol) -> Option<&Word> {
        match symbol {
            0 => Some(&self.phi0),
            1 => Some(&self.phi1),
            _ => None,
        }
    }

    pub fn images(&self) -> [&Word; 2] {
        [&self.phi0, &self.phi1]
    }

    pub fn encode(&self, w: &Word) -> Result<Word, SymbolicError> {
        w.check_alphabet(2)?;
        let mut out = Vec::with_capacity(w.len() * self.block_len());
        for &s in w.symbols() {
            out.extend_from_slice(if s == 0 { self.phi0.symbols() } else { self.phi1.symbols() });
        }
        Ok(Word(out))
    }

    pub fn decode(&self, ambient: &Word) -> Result<Word, SymbolicError> {
        let len = self.block_len();
        if !ambient.len().is_multiple_of(len) {
            return Err(SymbolicError::RaggedInput { len: ambient.len(), block_len: len });
        }
        ambient
            .symbols()
            .chunks(len)
            .enumerate()
            .map(|(index, block)| {
                if block == self.phi0.symbols() {
                    Ok(0)
                } else if block == self.phi1.symbols() {
                    Ok(1)
                } else {
                    Err(SymbolicError::CodeError { index, block: Word::from(block) })
                }
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Word)
    }
}
