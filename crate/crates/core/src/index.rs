//! Exact factor lookup over a collection of carrier words.
//!
//! A factor family is represented by concrete carrier words: a word belongs
//! to the family iff it is a factor of some carrier. The occurrence search
//! walks carriers directly, so it needs positions, carrier boundaries and a
//! set of anchor positions from which every window of interest starts.

use std::borrow::Cow;
use std::collections::HashSet;

use suffix_array::SuffixArray;

use crate::error::{Error, Result};
use crate::words::FactorSet;

const SEPARATOR: u8 = u8::MAX;

/// Text-level access used by the occurrence search.
pub trait FactorText {
    /// Carrier letters; carriers are separated by a byte that is never a letter.
    fn text(&self) -> &[u8];
    /// `(start, end)` of the carrier owning `pos`, where `start <= pos <= end`.
    fn carrier_bounds(&self, pos: usize) -> (usize, usize);
    /// Some position where `factor` occurs.
    fn locate(&self, factor: &[u8]) -> Option<usize>;
    /// Every position where `factor` occurs, in a fixed order.
    fn occurrences(&self, factor: &[u8]) -> Cow<'_, [u32]>;
    /// Positions at which every needed window starts.
    fn anchors(&self) -> Cow<'_, [u32]>;
    /// `Some(w)` when the family is only known to be complete for factors of
    /// length at most `w`; `None` when every factor of the source is present.
    fn complete_up_to(&self) -> Option<usize>;
    fn longest_carrier(&self) -> usize;
}

/// Suffix-array index over carrier words.
#[derive(Clone, Debug)]
pub struct FactorIndex {
    text: Vec<u8>,
    sa: Vec<u32>,
    carrier_of: Vec<u32>,
    carriers: Vec<(u32, u32)>,
    anchors: Vec<u32>,
    complete_up_to: Option<usize>,
    longest: usize,
}

impl FactorIndex {
    /// Index over one finite word; every factor is present.
    pub fn from_word(letters: &[u8]) -> Self {
        Self::build(vec![letters.to_vec()], None, None)
    }

    /// Index whose factors are exactly the factors of the given words.
    pub fn from_words<I: IntoIterator<Item = Vec<u8>>>(words: I) -> Self {
        Self::build(words.into_iter().collect(), None, None)
    }

    /// Index over a complete factor set; complete for lengths up to its length.
    pub fn from_factor_set(fs: &FactorSet) -> Result<Self> {
        if !fs.is_complete() {
            return Err(Error::IncompleteFactorSet(fs.length()));
        }
        let members = fs.sorted().into_iter().map(<[u8]>::to_vec).collect();
        Ok(Self::build(members, None, Some(fs.length())))
    }

    /// Index over carriers where only the first `anchor_span` positions of
    /// each carrier start a window. The caller guarantees that every factor
    /// of length at most `window` starts at one of those positions.
    pub fn from_carriers(carriers: Vec<Vec<u8>>, anchor_span: usize, window: usize) -> Self {
        Self::build(carriers, Some(anchor_span), Some(window))
    }

    fn build(carriers: Vec<Vec<u8>>, anchor_span: Option<usize>, window: Option<usize>) -> Self {
        let total: usize = carriers.iter().map(|c| c.len() + 1).sum();
        let mut text = Vec::with_capacity(total);
        let mut carrier_of = Vec::with_capacity(total);
        let mut bounds = Vec::with_capacity(carriers.len());
        let mut anchors = Vec::new();
        let mut longest = 0;
        for (id, carrier) in carriers.iter().enumerate() {
            let start = text.len();
            text.extend_from_slice(carrier);
            text.push(SEPARATOR);
            carrier_of.resize(text.len(), id as u32);
            bounds.push((start as u32, (start + carrier.len()) as u32));
            longest = longest.max(carrier.len());
            let span = anchor_span.unwrap_or(carrier.len()).min(carrier.len());
            anchors.extend((start..start + span).map(|p| p as u32));
        }
        if let Some(window) = window {
            // Identical windows need to be searched only once.
            let mut seen = HashSet::new();
            anchors.retain(|&p| {
                let p = p as usize;
                let end = bounds[carrier_of[p] as usize].1 as usize;
                seen.insert(&text[p..end.min(p + window)])
            });
        }
        let (_, sa) = SuffixArray::new(&text).into_parts();
        FactorIndex {
            text,
            sa,
            carrier_of,
            carriers: bounds,
            anchors,
            complete_up_to: window,
            longest,
        }
    }

    fn range(&self, factor: &[u8]) -> std::ops::Range<usize> {
        let text = &self.text;
        let lo = self.sa.partition_point(|&i| &text[i as usize..] < factor);
        let hi = lo + self.sa[lo..].partition_point(|&i| text[i as usize..].starts_with(factor));
        lo..hi
    }

    pub fn contains(&self, factor: &[u8]) -> bool {
        !self.range(factor).is_empty()
    }

    pub fn carrier_count(&self) -> usize {
        self.carriers.len()
    }

    /// Total number of letters over all carriers.
    pub fn letter_count(&self) -> usize {
        self.text.len() - self.carriers.len()
    }

    pub fn anchor_count(&self) -> usize {
        self.anchors.len()
    }

    /// `(carrier, offset)` for a text position.
    pub fn position(&self, pos: usize) -> (usize, usize) {
        let carrier = self.carrier_of[pos] as usize;
        (carrier, pos - self.carriers[carrier].0 as usize)
    }
}

impl FactorText for FactorIndex {
    fn text(&self) -> &[u8] {
        &self.text
    }

    fn carrier_bounds(&self, pos: usize) -> (usize, usize) {
        let (s, e) = self.carriers[self.carrier_of[pos] as usize];
        (s as usize, e as usize)
    }

    fn locate(&self, factor: &[u8]) -> Option<usize> {
        let r = self.range(factor);
        (!r.is_empty()).then(|| self.sa[r.start] as usize)
    }

    fn occurrences(&self, factor: &[u8]) -> Cow<'_, [u32]> {
        Cow::Borrowed(&self.sa[self.range(factor)])
    }

    fn anchors(&self) -> Cow<'_, [u32]> {
        Cow::Borrowed(&self.anchors)
    }

    fn complete_up_to(&self) -> Option<usize> {
        self.complete_up_to
    }

    fn longest_carrier(&self) -> usize {
        self.longest
    }
}

/// A single short word searched naively; cheap to build in inner loops.
#[derive(Clone, Copy, Debug)]
pub struct PlainWord<'a>(pub &'a [u8]);

impl FactorText for PlainWord<'_> {
    fn text(&self) -> &[u8] {
        self.0
    }

    fn carrier_bounds(&self, _pos: usize) -> (usize, usize) {
        (0, self.0.len())
    }

    fn locate(&self, factor: &[u8]) -> Option<usize> {
        if factor.len() > self.0.len() {
            return None;
        }
        self.0.windows(factor.len()).position(|w| w == factor)
    }

    fn occurrences(&self, factor: &[u8]) -> Cow<'_, [u32]> {
        if factor.len() > self.0.len() {
            return Cow::Owned(Vec::new());
        }
        Cow::Owned(
            self.0
                .windows(factor.len())
                .enumerate()
                .filter(|(_, w)| *w == factor)
                .map(|(i, _)| i as u32)
                .collect(),
        )
    }

    fn anchors(&self) -> Cow<'_, [u32]> {
        Cow::Owned((0..self.0.len() as u32).collect())
    }

    fn complete_up_to(&self) -> Option<usize> {
        None
    }

    fn longest_carrier(&self) -> usize {
        self.0.len()
    }
}
