//! Repetitions with exact rational exponents, `(β+, n)`-freeness and
//! enumeration of power-free words.

use std::collections::HashMap;
use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::words::render_digits;

/// Exact rational number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(Ratio<i64>);

impl Rational {
    pub fn new(numer: i64, denom: i64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::InvalidArgument("zero denominator".into()));
        }
        Ok(Rational(Ratio::new(numer, denom)))
    }

    pub fn integer(n: i64) -> Self {
        Rational(Ratio::from_integer(n))
    }

    pub fn numer(&self) -> i64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i64 {
        *self.0.denom()
    }

    pub fn ceil(&self) -> i64 {
        self.0.ceil().to_integer()
    }

    pub fn floor(&self) -> i64 {
        self.0.floor().to_integer()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }
}

macro_rules! forward_op {
    ($trait:ident, $method:ident) => {
        impl std::ops::$trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(std::ops::$trait::$method(self.0, rhs.0))
            }
        }
    };
}

forward_op!(Add, add);
forward_op!(Sub, sub);
forward_op!(Mul, mul);
forward_op!(Div, div);

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("invalid rational {s:?}"));
        let s = s.trim();
        match s.split_once('/') {
            Some((n, d)) => Rational::new(
                n.trim().parse().map_err(|_| bad())?,
                d.trim().parse().map_err(|_| bad())?,
            ),
            None => Ok(Rational::integer(s.parse().map_err(|_| bad())?)),
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

/// Which repetitions are forbidden: exponent `> threshold` (strict, written
/// `β+`) or `>= threshold`, counting only periods of at least `min_period`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FreenessSpec {
    threshold: Rational,
    strict: bool,
    min_period: usize,
}

impl FreenessSpec {
    pub fn new(threshold: Rational, strict: bool, min_period: usize) -> Result<Self> {
        if min_period == 0 {
            return Err(Error::InvalidSpec("minimum period must be at least 1".into()));
        }
        let one = Rational::integer(1);
        if threshold < one || (!strict && threshold == one) {
            return Err(Error::InvalidSpec(format!("threshold {threshold} forbids every word")));
        }
        Ok(FreenessSpec {
            threshold,
            strict,
            min_period,
        })
    }

    /// `β+`-free: no exponent strictly above `threshold`.
    pub fn above(threshold: Rational) -> Result<Self> {
        FreenessSpec::new(threshold, true, 1)
    }

    pub fn square_free() -> Self {
        FreenessSpec::new(Rational::integer(2), false, 1).expect("valid spec")
    }

    pub fn threshold(&self) -> Rational {
        self.threshold
    }

    pub fn strict(&self) -> bool {
        self.strict
    }

    pub fn min_period(&self) -> usize {
        self.min_period
    }

    /// Whether a repetition of this length and period is forbidden.
    #[inline]
    pub fn forbids(&self, length: usize, period: usize) -> bool {
        if period < self.min_period {
            return false;
        }
        let lhs = length as i128 * self.threshold.denom() as i128;
        let rhs = period as i128 * self.threshold.numer() as i128;
        if self.strict {
            lhs > rhs
        } else {
            lhs >= rhs
        }
    }
}

impl fmt::Display for FreenessSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.threshold)?;
        if self.strict {
            f.write_str("+")?;
        }
        if self.min_period > 1 {
            write!(f, ",{}", self.min_period)?;
        }
        Ok(())
    }
}

impl FromStr for FreenessSpec {
    type Err = Error;

    /// `97/75+,61`, `5/4+` or `2` (non-strict square-freeness).
    fn from_str(s: &str) -> Result<Self> {
        let (head, period) = match s.trim().split_once(',') {
            Some((h, p)) => (
                h.trim(),
                p.trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("invalid minimum period in {s:?}")))?,
            ),
            None => (s.trim(), 1),
        };
        let (threshold, strict) = match head.strip_suffix('+') {
            Some(t) => (t, true),
            None => (head, false),
        };
        FreenessSpec::new(threshold.parse()?, strict, period)
    }
}

impl Serialize for FreenessSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

/// A factor `w[start..start+length]` having period `period`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Repetition {
    pub start: usize,
    pub period: usize,
    pub length: usize,
    pub exponent: Rational,
}

impl Repetition {
    fn new(start: usize, period: usize, length: usize) -> Self {
        Repetition {
            start,
            period,
            length,
            exponent: Rational::new(length as i64, period as i64).expect("period is positive"),
        }
    }

    /// Whether the claimed factor of `w` really has the claimed period.
    pub fn holds_in(&self, w: &[u8]) -> bool {
        self.period >= 1
            && self.start + self.length <= w.len()
            && (self.start..self.start + self.length - self.period.min(self.length)).all(|i| w[i] == w[i + self.period])
    }

    pub fn factor<'a>(&self, w: &'a [u8]) -> &'a [u8] {
        &w[self.start..self.start + self.length]
    }

    fn beats(&self, other: &Repetition) -> bool {
        let lhs = self.length * other.period;
        let rhs = other.length * self.period;
        lhs > rhs || (lhs == rhs && self.period < other.period)
    }
}

fn keep_best(best: &mut Option<Repetition>, cand: Repetition) {
    if best.as_ref().is_none_or(|b| cand.beats(b)) {
        *best = Some(cand);
    }
}

/// A forbidden repetition at the leftmost position where one starts, with
/// the largest exponent among those starting there.
pub fn find_forbidden_repetition(w: &[u8], spec: &FreenessSpec) -> Option<Repetition> {
    let n = w.len();
    for start in 0..n {
        let mut best = None;
        for period in spec.min_period..n - start {
            let run = (start..n - period).take_while(|&i| w[i] == w[i + period]).count();
            if spec.forbids(period + run, period) {
                keep_best(&mut best, Repetition::new(start, period, period + run));
            }
        }
        if best.is_some() {
            return best;
        }
    }
    None
}

/// A forbidden repetition ending at the last letter of `w`, if any.
pub fn last_position_check(w: &[u8], spec: &FreenessSpec) -> Option<Repetition> {
    let n = w.len();
    let mut best = None;
    for period in spec.min_period..n {
        let run = (period..n).rev().take_while(|&i| w[i] == w[i - period]).count();
        let length = period + run;
        if spec.forbids(length, period) {
            keep_best(&mut best, Repetition::new(n - length, period, length));
        }
    }
    best
}

/// Least `s` such that a repetition of period `period` and length
/// `period + s` is forbidden.
fn min_tail(spec: &FreenessSpec, period: usize) -> usize {
    let (num, den) = (spec.threshold.numer() as i128, spec.threshold.denom() as i128);
    let mut s = ((num - den) * period as i128 / den).max(0) as usize;
    while !spec.forbids(period + s, period) {
        s += 1;
    }
    s
}

/// Incremental detection of forbidden repetitions ending at the last letter
/// of a growing word.
///
/// A forbidden repetition with period `p` at least the minimum period `n`
/// repeats its last `min_tail(n)` letters `p` positions earlier. Windows of
/// that length are kept in an exact index, so only the periods it proposes
/// are examined. Short windows fall back to scanning every period.
#[derive(Clone, Debug)]
pub struct RepetitionTracker {
    spec: FreenessSpec,
    word: Vec<u8>,
    window: usize,
    bits: u32,
    ends: HashMap<u64, Vec<u32>>,
}

impl RepetitionTracker {
    pub fn new(spec: FreenessSpec, alphabet_size: usize) -> Self {
        let bits = usize::BITS - (alphabet_size.max(2) - 1).leading_zeros();
        let tail = min_tail(&spec, spec.min_period);
        let window = if tail >= 4 && tail * bits as usize <= 64 {
            tail
        } else {
            0
        };
        RepetitionTracker {
            spec,
            word: Vec::new(),
            window,
            bits,
            ends: HashMap::new(),
        }
    }

    pub fn word(&self) -> &[u8] {
        &self.word
    }

    fn key(&self) -> u64 {
        let n = self.word.len();
        self.word[n - self.window..]
            .iter()
            .fold(0u64, |acc, &x| (acc << self.bits) | x as u64)
    }

    /// Appends a letter and reports the forbidden repetition ending there
    /// that [`last_position_check`] would report.
    pub fn push(&mut self, letter: u8) -> Option<Repetition> {
        debug_assert!((letter as u64) < 1 << self.bits);
        self.word.push(letter);
        if self.window == 0 {
            return last_position_check(&self.word, &self.spec);
        }
        let n = self.word.len();
        if n < self.window {
            return None;
        }
        let key = self.key();
        let w = &self.word;
        let mut best = None;
        if let Some(ends) = self.ends.get(&key) {
            for &earlier in ends {
                let period = n - 1 - earlier as usize;
                if period < self.spec.min_period {
                    continue;
                }
                let run = (period..n).rev().take_while(|&i| w[i] == w[i - period]).count();
                let length = period + run;
                if self.spec.forbids(length, period) {
                    keep_best(&mut best, Repetition::new(n - length, period, length));
                }
            }
        }
        self.ends.entry(key).or_default().push((n - 1) as u32);
        best
    }

    pub fn pop(&mut self) -> Option<u8> {
        if self.window > 0 && self.word.len() >= self.window {
            let key = self.key();
            if let Some(ends) = self.ends.get_mut(&key) {
                ends.pop();
                if ends.is_empty() {
                    self.ends.remove(&key);
                }
            }
        }
        self.word.pop()
    }
}

/// Whether `w` contains no forbidden repetition.
pub fn is_free(w: &[u8], spec: &FreenessSpec) -> bool {
    (1..=w.len()).all(|end| last_position_check(&w[..end], spec).is_none())
}

/// Options for the depth-first enumeration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EnumerationOptions {
    /// Fix the first letter to 0 and multiply counts back by the alphabet size.
    pub symmetry: bool,
    pub node_cap: Option<u64>,
}

/// Why an enumeration ended early.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Interruption {
    Visitor,
    NodeCap,
}

/// Counts per length (index 0 is the empty word) and effort.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraversalReport {
    pub counts: Vec<u64>,
    pub nodes: u64,
    pub interrupted: Option<Interruption>,
}

impl TraversalReport {
    pub fn is_complete(&self) -> bool {
        self.interrupted.is_none()
    }
}

struct Enumerator<'a, V> {
    alphabet: u8,
    spec: &'a FreenessSpec,
    max_len: usize,
    symmetry: bool,
    node_cap: Option<u64>,
    visitor: V,
    word: Vec<u8>,
    counts: Vec<u64>,
    nodes: u64,
}

impl<V: FnMut(&[u8]) -> ControlFlow<()>> Enumerator<'_, V> {
    fn descend(&mut self) -> std::result::Result<(), Interruption> {
        if self.word.len() == self.max_len {
            return Ok(());
        }
        let first = self.word.is_empty();
        for letter in 0..self.alphabet {
            self.word.push(letter);
            if last_position_check(&self.word, self.spec).is_none() {
                self.nodes += 1;
                if self.node_cap.is_some_and(|cap| self.nodes > cap) {
                    self.word.pop();
                    return Err(Interruption::NodeCap);
                }
                self.counts[self.word.len()] += 1;
                if (self.visitor)(&self.word).is_break() {
                    self.word.pop();
                    return Err(Interruption::Visitor);
                }
                self.descend()?;
            }
            self.word.pop();
            if first && self.symmetry {
                break;
            }
        }
        Ok(())
    }
}

/// Visits every spec-free word over `{0..alphabet}` of length `1..=max_len`
/// in lexicographic depth-first order.
pub fn enumerate_free_words<V>(
    alphabet: usize,
    spec: &FreenessSpec,
    max_len: usize,
    options: EnumerationOptions,
    visitor: V,
) -> Result<TraversalReport>
where
    V: FnMut(&[u8]) -> ControlFlow<()>,
{
    if alphabet == 0 || alphabet > u8::MAX as usize {
        return Err(Error::InvalidArgument(format!("unsupported alphabet size {alphabet}")));
    }
    let mut counts = vec![0; max_len + 1];
    counts[0] = 1;
    let mut e = Enumerator {
        alphabet: alphabet as u8,
        spec,
        max_len,
        symmetry: options.symmetry,
        node_cap: options.node_cap,
        visitor,
        word: Vec::with_capacity(max_len),
        counts,
        nodes: 0,
    };
    let interrupted = e.descend().err();
    let mut counts = e.counts;
    if options.symmetry {
        for c in &mut counts[1..] {
            *c *= alphabet as u64;
        }
    }
    Ok(TraversalReport {
        counts,
        nodes: e.nodes,
        interrupted,
    })
}

/// Number of spec-free words of exactly `len` letters.
pub fn count_free_words(alphabet: usize, spec: &FreenessSpec, len: usize) -> Result<u64> {
    let options = EnumerationOptions {
        symmetry: true,
        node_cap: None,
    };
    let report = enumerate_free_words(alphabet, spec, len, options, |_| ControlFlow::Continue(()))?;
    Ok(report.counts[len])
}

/// Least `B` such that it suffices to check source-free words shorter than
/// `B`: the ceiling of `2β'/(β' - β)`.
pub fn lemma_length_bound(target: &FreenessSpec, source_threshold: Rational) -> Result<usize> {
    let target = target.threshold();
    if target <= source_threshold {
        return Err(Error::InvalidSpec(format!(
            "target threshold {target} must exceed source threshold {source_threshold}"
        )));
    }
    let bound = Rational::integer(2) * target / (target - source_threshold);
    Ok(bound.ceil() as usize)
}

/// The second length term for `width`-uniform synchronizing morphisms:
/// the ceiling of `2(q-1)(2β'-1) / (q(β'-1))`.
pub fn uniform_length_term(target: &FreenessSpec, width: usize) -> Result<usize> {
    let beta = target.threshold();
    let one = Rational::integer(1);
    if beta <= one {
        return Err(Error::InvalidSpec(format!("target threshold {beta} must exceed 1")));
    }
    let q = Rational::integer(width as i64);
    let term = Rational::integer(2) * (q - one) * (Rational::integer(2) * beta - one) / (q * (beta - one));
    Ok(term.ceil().max(0) as usize)
}

/// Digit rendering of a repetition's factor, for reports.
pub fn render_repetition(w: &[u8], r: &Repetition) -> String {
    render_digits(r.factor(w))
}
