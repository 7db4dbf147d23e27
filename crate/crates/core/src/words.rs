//! Finite words, morphisms, morphic fixed points and factor sets.
//!
//! Letters are small integers `0..k` and are rendered as single digits.
//! Factor sets are exact hash sets; a set also carries the evidence for its
//! completeness, which the verification harness reports verbatim.

use std::collections::HashSet;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// A finite word over `{0, .., alphabet_size - 1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    letters: Vec<u8>,
    alphabet_size: usize,
}

impl Word {
    pub fn new(letters: Vec<u8>, alphabet_size: usize) -> Result<Self> {
        if let Some(&letter) = letters.iter().find(|&&l| l as usize >= alphabet_size) {
            return Err(Error::LetterOutOfRange {
                letter,
                size: alphabet_size,
            });
        }
        Ok(Word { letters, alphabet_size })
    }

    /// Parses a digit string, taking the alphabet to be `0..=max digit`.
    pub fn parse(text: &str) -> Result<Self> {
        let letters = parse_digits(text)?;
        let alphabet_size = letters.iter().map(|&l| l as usize + 1).max().unwrap_or(1);
        Word::new(letters, alphabet_size)
    }

    /// Parses a digit string over an explicit alphabet.
    pub fn parse_over(text: &str, alphabet_size: usize) -> Result<Self> {
        Word::new(parse_digits(text)?, alphabet_size)
    }

    pub fn letters(&self) -> &[u8] {
        &self.letters
    }

    pub fn into_letters(self) -> Vec<u8> {
        self.letters
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Word {
            letters,
            alphabet_size: self.alphabet_size.max(other.alphabet_size),
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_digits(&self.letters))
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

/// Renders letters as base-36 digits (plain decimal for the alphabets used here).
pub fn render_digits(letters: &[u8]) -> String {
    letters
        .iter()
        .map(|&l| char::from_digit(l as u32, 36).unwrap_or('?'))
        .collect()
}

pub fn parse_digits(text: &str) -> Result<Vec<u8>> {
    text.trim()
        .chars()
        .map(|c| {
            c.to_digit(10)
                .map(|d| d as u8)
                .ok_or_else(|| Error::Parse(format!("invalid letter {c:?} in word {text:?}")))
        })
        .collect()
}

/// A non-erasing morphism from `{0, .., k-1}` to words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Morphism {
    images: Vec<Vec<u8>>,
    target_size: usize,
    uniform_width: Option<usize>,
}

impl Morphism {
    /// Builds a morphism from its images, indexed by source letter.
    pub fn new(images: Vec<Vec<u8>>) -> Result<Self> {
        if images.is_empty() {
            return Err(Error::InvalidMorphism("no images".into()));
        }
        if let Some(letter) = images.iter().position(|im| im.is_empty()) {
            return Err(Error::InvalidMorphism(format!(
                "image of {letter} is empty (morphisms must be non-erasing)"
            )));
        }
        let target_size = images.iter().flatten().map(|&l| l as usize + 1).max().unwrap_or(1);
        let width = images[0].len();
        let uniform_width = images.iter().all(|im| im.len() == width).then_some(width);
        Ok(Morphism {
            images,
            target_size,
            uniform_width,
        })
    }

    pub fn from_digit_images(images: &[&str]) -> Result<Self> {
        let images = images.iter().map(|s| parse_digits(s)).collect::<Result<Vec<_>>>()?;
        Morphism::new(images)
    }

    pub fn identity(alphabet_size: usize) -> Self {
        Morphism::new((0..alphabet_size as u8).map(|l| vec![l]).collect()).expect("identity images are non-empty")
    }

    /// Parses `letter -> image` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(u8, Vec<u8>)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (lhs, rhs) = line
                .split_once("->")
                .ok_or_else(|| Error::Parse(format!("line {}: expected `letter -> image`", lineno + 1)))?;
            let lhs = parse_digits(lhs)?;
            if lhs.len() != 1 {
                return Err(Error::Parse(format!(
                    "line {}: left-hand side must be a single letter",
                    lineno + 1
                )));
            }
            entries.push((lhs[0], parse_digits(rhs)?));
        }
        entries.sort_by_key(|(letter, _)| *letter);
        for (expected, (letter, _)) in entries.iter().enumerate() {
            if *letter as usize != expected {
                return Err(Error::InvalidMorphism(format!(
                    "source letters must be 0..{} each defined once",
                    entries.len()
                )));
            }
        }
        Morphism::new(entries.into_iter().map(|(_, im)| im).collect())
    }

    pub fn source_size(&self) -> usize {
        self.images.len()
    }

    pub fn target_size(&self) -> usize {
        self.target_size
    }

    pub fn uniform_width(&self) -> Option<usize> {
        self.uniform_width
    }

    pub fn image(&self, letter: u8) -> &[u8] {
        &self.images[letter as usize]
    }

    pub fn images(&self) -> &[Vec<u8>] {
        &self.images
    }

    /// Applies the morphism to a raw letter slice, appending to `out`.
    pub fn apply_into(&self, letters: &[u8], out: &mut Vec<u8>) -> Result<()> {
        for &l in letters {
            let image = self.images.get(l as usize).ok_or(Error::LetterOutOfRange {
                letter: l,
                size: self.images.len(),
            })?;
            out.extend_from_slice(image);
        }
        Ok(())
    }

    pub fn apply_slice(&self, letters: &[u8]) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(letters.len() * self.uniform_width.unwrap_or(2));
        self.apply_into(letters, &mut out)?;
        Ok(out)
    }

    pub fn apply(&self, word: &Word) -> Result<Word> {
        Word::new(self.apply_slice(word.letters())?, self.target_size)
    }
}

impl fmt::Display for Morphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (letter, image) in self.images.iter().enumerate() {
            writeln!(f, "{letter} -> {}", render_digits(image))?;
        }
        Ok(())
    }
}

/// Applies `m` to `w`.
pub fn apply_morphism(m: &Morphism, w: &Word) -> Result<Word> {
    m.apply(w)
}

/// Checks that `m` maps `seed` to a longer word starting with `seed`.
pub fn check_prolongable(m: &Morphism, seed: u8) -> Result<()> {
    if seed as usize >= m.source_size() {
        return Err(Error::LetterOutOfRange {
            letter: seed,
            size: m.source_size(),
        });
    }
    let image = m.image(seed);
    if image.len() < 2 || image[0] != seed {
        return Err(Error::NotProlongable(seed));
    }
    Ok(())
}

/// Returns the first iterate `m^i(seed)` of length at least `min_len`.
///
/// Every iterate is a prefix of the next one, so the result is a prefix of
/// the fixed point of `m` starting with `seed`.
pub fn fixed_point_prefix(m: &Morphism, seed: u8, min_len: usize) -> Result<Word> {
    check_prolongable(m, seed)?;
    let mut prefix = vec![seed];
    while prefix.len() < min_len {
        prefix = m.apply_slice(&prefix)?;
    }
    Word::new(prefix, m.target_size().max(m.source_size()))
}

/// How a factor set was shown to be complete (or why it is not).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    /// Scanned directly from a finite word.
    FiniteWord { word_len: usize },
    /// Identical factor sets on two consecutive iterates of a morphism.
    Stabilized { iterations: usize, prefix_len: usize },
    /// Windows of images of a complete source factor set.
    Image { source_len: usize, source: Box<Evidence> },
    /// Exhaustive enumeration of a factor-closed family of words.
    Enumerated { words: u64 },
    /// Supplied by the caller.
    Declared { complete: bool },
    /// The iteration cap was hit before stabilization.
    Partial { iterations: usize, prefix_len: usize },
}

impl Evidence {
    pub fn is_complete(&self) -> bool {
        match self {
            Evidence::FiniteWord { .. } | Evidence::Stabilized { .. } | Evidence::Enumerated { .. } => true,
            Evidence::Image { source, .. } => source.is_complete(),
            Evidence::Declared { complete } => *complete,
            Evidence::Partial { .. } => false,
        }
    }
}

/// The set of all factors of one length of some (finite or infinite) word.
#[derive(Clone, Debug)]
pub struct FactorSet {
    length: usize,
    members: HashSet<Vec<u8>>,
    evidence: Evidence,
}

impl FactorSet {
    /// Builds a factor set from explicit members.
    pub fn from_members<I>(length: usize, members: I, complete: bool) -> Result<Self>
    where
        I: IntoIterator<Item = Vec<u8>>,
    {
        let members: HashSet<Vec<u8>> = members.into_iter().collect();
        if let Some(bad) = members.iter().find(|m| m.len() != length) {
            return Err(Error::InvalidArgument(format!(
                "factor {} does not have length {length}",
                render_digits(bad)
            )));
        }
        Ok(FactorSet {
            length,
            members,
            evidence: Evidence::Declared { complete },
        })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, factor: &[u8]) -> bool {
        self.members.contains(factor)
    }

    pub fn is_complete(&self) -> bool {
        self.evidence.is_complete()
    }

    pub fn evidence(&self) -> &Evidence {
        &self.evidence
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u8]> {
        self.members.iter().map(Vec::as_slice)
    }

    /// Members in lexicographic order.
    pub fn sorted(&self) -> Vec<&[u8]> {
        let mut out: Vec<&[u8]> = self.iter().collect();
        out.sort_unstable();
        out
    }
}

impl PartialEq for FactorSet {
    fn eq(&self, other: &Self) -> bool {
        self.length == other.length && self.members == other.members
    }
}

fn distinct_factors(letters: &[u8], length: usize) -> HashSet<Vec<u8>> {
    if length == 0 || length > letters.len() {
        return HashSet::new();
    }
    letters.windows(length).map(<[u8]>::to_vec).collect()
}

/// All distinct length-`length` factors of a finite word.
pub fn factor_set(w: &Word, length: usize) -> Result<FactorSet> {
    if length == 0 {
        return Err(Error::InvalidArgument("factor length must be at least 1".into()));
    }
    Ok(FactorSet {
        length,
        members: distinct_factors(w.letters(), length),
        evidence: Evidence::FiniteWord { word_len: w.len() },
    })
}

/// Caps on the iterate-until-stable factor computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StabilizationLimits {
    pub max_iterations: usize,
    pub max_prefix_len: usize,
}

impl Default for StabilizationLimits {
    fn default() -> Self {
        StabilizationLimits {
            max_iterations: 64,
            max_prefix_len: 1 << 24,
        }
    }
}

/// Length-`length` factors of the fixed point of `m` starting with `seed`.
///
/// Iterates `m` from `seed` until the factor set of two consecutive iterates
/// (both at least `length` long) coincide.
pub fn morphic_factor_set(m: &Morphism, seed: u8, length: usize, limits: StabilizationLimits) -> Result<FactorSet> {
    if length == 0 {
        return Err(Error::InvalidArgument("factor length must be at least 1".into()));
    }
    check_prolongable(m, seed)?;
    let mut prefix = vec![seed];
    let mut previous: Option<HashSet<Vec<u8>>> = None;
    let mut iterations = 0;
    while iterations < limits.max_iterations && prefix.len() <= limits.max_prefix_len {
        prefix = m.apply_slice(&prefix)?;
        iterations += 1;
        if prefix.len() < length {
            continue;
        }
        let current = distinct_factors(&prefix, length);
        if previous.as_ref() == Some(&current) {
            return Ok(FactorSet {
                length,
                members: current,
                evidence: Evidence::Stabilized {
                    iterations,
                    prefix_len: prefix.len(),
                },
            });
        }
        previous = Some(current);
    }
    Err(Error::NotStabilized {
        length,
        iterations,
        partial: Box::new(FactorSet {
            length,
            members: previous.unwrap_or_default(),
            evidence: Evidence::Partial {
                iterations,
                prefix_len: prefix.len(),
            },
        }),
    })
}

/// A source of factor sets of an infinite word, one length at a time.
pub trait FactorSource {
    fn factor_set(&self, length: usize) -> Result<FactorSet>;
}

/// The fixed point of a prolongable morphism.
#[derive(Clone, Debug)]
pub struct FixedPoint {
    pub morphism: Morphism,
    pub seed: u8,
    pub limits: StabilizationLimits,
}

impl FixedPoint {
    pub fn new(morphism: Morphism, seed: u8) -> Result<Self> {
        check_prolongable(&morphism, seed)?;
        Ok(FixedPoint {
            morphism,
            seed,
            limits: StabilizationLimits::default(),
        })
    }

    pub fn with_limits(mut self, limits: StabilizationLimits) -> Self {
        self.limits = limits;
        self
    }
}

impl FactorSource for FixedPoint {
    fn factor_set(&self, length: usize) -> Result<FactorSet> {
        morphic_factor_set(&self.morphism, self.seed, length, self.limits)
    }
}

/// The image of an infinite word under a uniform morphism.
#[derive(Clone, Debug)]
pub struct MorphicImage<S> {
    pub morphism: Morphism,
    pub source: S,
}

impl<S: FactorSource> FactorSource for MorphicImage<S> {
    fn factor_set(&self, length: usize) -> Result<FactorSet> {
        image_factor_set(&self.morphism, &self.source, length)
    }
}

/// Length of the source factors whose images cover every length-`length`
/// factor of the image under a `width`-uniform morphism.
pub fn covering_source_length(length: usize, width: usize) -> usize {
    length.div_ceil(width) + 1
}

/// Length-`length` factors of `g(x)`, where `x` is the word behind `source`.
pub fn image_factor_set<S: FactorSource + ?Sized>(g: &Morphism, source: &S, length: usize) -> Result<FactorSet> {
    if length == 0 {
        return Err(Error::InvalidArgument("factor length must be at least 1".into()));
    }
    let width = g.uniform_width().ok_or(Error::NotUniform)?;
    let source_len = covering_source_length(length, width);
    let source_set = source.factor_set(source_len)?;
    if !source_set.is_complete() {
        return Err(Error::IncompleteFactorSet(source_len));
    }
    let mut members = HashSet::new();
    let mut buf = Vec::with_capacity(source_len * width);
    for u in source_set.iter() {
        buf.clear();
        g.apply_into(u, &mut buf)?;
        members.extend(buf.windows(length).map(<[u8]>::to_vec));
    }
    Ok(FactorSet {
        length,
        members,
        evidence: Evidence::Image {
            source_len,
            source: Box::new(source_set.evidence.clone()),
        },
    })
}

/// A conjugacy class, identified by its lexicographically least member.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ConjugacyClass {
    representative: Word,
    size: usize,
}

impl ConjugacyClass {
    pub fn representative(&self) -> &Word {
        &self.representative
    }

    /// Number of distinct conjugates.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Common length of the conjugates.
    pub fn word_len(&self) -> usize {
        self.representative.len()
    }

    /// The distinct conjugates, in lexicographic order.
    pub fn members(&self) -> Vec<Word> {
        let letters = self.representative.letters();
        let mut out: Vec<Word> = (0..self.size)
            .map(|shift| Word {
                letters: rotate(letters, shift),
                alphabet_size: self.representative.alphabet_size,
            })
            .collect();
        out.sort();
        out
    }
}

impl fmt::Display for ConjugacyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.representative)
    }
}

pub(crate) fn rotate(letters: &[u8], shift: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(letters.len());
    out.extend_from_slice(&letters[shift..]);
    out.extend_from_slice(&letters[..shift]);
    out
}

/// Length of the primitive root: the number of distinct rotations.
pub(crate) fn rotation_count(letters: &[u8]) -> usize {
    let n = letters.len();
    (1..=n)
        .find(|&d| n.is_multiple_of(d) && (d..n).all(|i| letters[i] == letters[i - d]))
        .unwrap_or(n)
}

pub(crate) fn least_rotation(letters: &[u8]) -> Vec<u8> {
    let n = letters.len();
    let best = (1..n).fold(0, |best, shift| {
        let cand = letters[shift..].iter().chain(&letters[..shift]);
        let cur = letters[best..].iter().chain(&letters[..best]);
        if cand.lt(cur) {
            shift
        } else {
            best
        }
    });
    rotate(letters, best)
}

/// The conjugacy class of a non-empty word.
pub fn conjugates(u: &Word) -> Result<ConjugacyClass> {
    if u.is_empty() {
        return Err(Error::EmptyWord);
    }
    Ok(ConjugacyClass {
        representative: Word {
            letters: least_rotation(u.letters()),
            alphabet_size: u.alphabet_size,
        },
        size: rotation_count(u.letters()),
    })
}

/// Every conjugacy class all of whose members belong to `fs`.
///
/// An empty answer proves that the source avoids every conjugacy class of
/// length `fs.length()`, so the factor set must be complete.
pub fn contained_conjugacy_classes(fs: &FactorSet) -> Result<Vec<ConjugacyClass>> {
    if !fs.is_complete() {
        return Err(Error::IncompleteFactorSet(fs.length));
    }
    let alphabet_size = fs.iter().flatten().map(|&l| l as usize + 1).max().unwrap_or(1);
    let mut found = Vec::new();
    for u in fs.sorted() {
        if least_rotation(u) != u {
            continue;
        }
        let size = rotation_count(u);
        if (1..size).all(|shift| fs.contains(&rotate(u, shift))) {
            found.push(ConjugacyClass {
                representative: Word {
                    letters: u.to_vec(),
                    alphabet_size,
                },
                size,
            });
        }
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    fn b4() -> Morphism {
        Morphism::from_digit_images(&["01", "21", "03", "23"]).unwrap()
    }

    fn set_of(fs: &FactorSet) -> Vec<String> {
        fs.sorted().into_iter().map(render_digits).collect()
    }

    #[test]
    fn word_rejects_letters_outside_alphabet() {
        assert!(matches!(
            Word::parse_over("013", 3),
            Err(Error::LetterOutOfRange { letter: 3, size: 3 })
        ));
        assert!(Word::parse("01a").is_err());
    }

    #[test]
    fn apply_examples() {
        let g3 = Morphism::from_digit_images(&["0010", "1122", "0200", "1212"]).unwrap();
        assert_eq!(g3.apply(&w("01")).unwrap().to_string(), "00101122");
        assert_eq!(Morphism::identity(2).apply(&w("0110")).unwrap().to_string(), "0110");
        assert_eq!(b4().apply(&w("0")).unwrap().to_string(), "01");
    }

    #[test]
    fn apply_rejects_foreign_letter() {
        assert!(matches!(
            Morphism::identity(2).apply(&w("012")),
            Err(Error::LetterOutOfRange { letter: 2, .. })
        ));
    }

    #[test]
    fn morphism_validation() {
        assert!(Morphism::new(vec![vec![0], vec![]]).is_err());
        assert_eq!(b4().uniform_width(), Some(2));
        let m = Morphism::from_digit_images(&["01", "1"]).unwrap();
        assert_eq!(m.uniform_width(), None);
    }

    #[test]
    fn morphism_file_format() {
        let text = "# b4\n0 -> 01\n1->21 # trailing\n\n3 -> 23\n2 -> 03\n";
        assert_eq!(Morphism::parse(text).unwrap(), b4());
        assert_eq!(Morphism::parse(&b4().to_string()).unwrap(), b4());
        assert!(Morphism::parse("0 -> 01\n2 -> 1\n").is_err());
        assert!(Morphism::parse("0 = 01\n").is_err());
    }

    #[test]
    fn fixed_point_examples() {
        let p = fixed_point_prefix(&b4(), 0, 16).unwrap();
        assert_eq!(p.to_string(), "0121032101230321");
        let m = Morphism::from_digit_images(&["01", "1"]).unwrap();
        assert_eq!(fixed_point_prefix(&m, 0, 4).unwrap().to_string(), "0111");
        let bad = Morphism::from_digit_images(&["10", "1"]).unwrap();
        assert!(matches!(fixed_point_prefix(&bad, 0, 4), Err(Error::NotProlongable(0))));
    }

    #[test]
    fn factor_set_examples() {
        assert_eq!(set_of(&factor_set(&w("0101"), 2).unwrap()), ["01", "10"]);
        assert!(factor_set(&w("0101"), 5).unwrap().is_empty());
        let p = fixed_point_prefix(&b4(), 0, 16).unwrap();
        assert_eq!(set_of(&factor_set(&p, 1).unwrap()), ["0", "1", "2", "3"]);
        assert!(factor_set(&w("01"), 0).is_err());
    }

    #[test]
    fn morphic_factor_set_examples() {
        let fs = morphic_factor_set(&b4(), 0, 1, StabilizationLimits::default()).unwrap();
        assert_eq!(set_of(&fs), ["0", "1", "2", "3"]);
        assert!(fs.is_complete());
        let m = Morphism::from_digit_images(&["01", "1"]).unwrap();
        let fs = morphic_factor_set(&m, 0, 2, StabilizationLimits::default()).unwrap();
        assert_eq!(set_of(&fs), ["01", "11"]);
    }

    #[test]
    fn morphic_factor_set_reports_partial_on_cap() {
        let limits = StabilizationLimits {
            max_iterations: 3,
            max_prefix_len: 1 << 20,
        };
        match morphic_factor_set(&b4(), 0, 6, limits) {
            Err(Error::NotStabilized { partial, .. }) => {
                assert!(!partial.is_complete());
                assert_eq!(partial.length(), 6);
            }
            other => panic!("expected NotStabilized, got {other:?}"),
        }
    }

    #[test]
    fn image_factor_set_small_lengths() {
        let g3 = Morphism::from_digit_images(&["0010", "1122", "0200", "1212"]).unwrap();
        let src = FixedPoint::new(b4(), 0).unwrap();
        let fs = image_factor_set(&g3, &src, 4).unwrap();
        assert!(fs.contains(&[0, 0, 1, 0]));
        assert!(fs.contains(&[1, 1, 2, 2]));
        assert_eq!(set_of(&image_factor_set(&g3, &src, 1).unwrap()), ["0", "1", "2"]);
        let nonuniform = Morphism::from_digit_images(&["01", "1", "2", "3"]).unwrap();
        assert!(matches!(image_factor_set(&nonuniform, &src, 3), Err(Error::NotUniform)));
    }

    #[test]
    fn image_factor_set_requires_complete_source() {
        struct Unproven;
        impl FactorSource for Unproven {
            fn factor_set(&self, length: usize) -> Result<FactorSet> {
                FactorSet::from_members(length, vec![vec![0; length]], false)
            }
        }
        assert!(matches!(
            image_factor_set(&Morphism::identity(1), &Unproven, 2),
            Err(Error::IncompleteFactorSet(3))
        ));
    }

    #[test]
    fn conjugates_examples() {
        let c = conjugates(&w("011")).unwrap();
        assert_eq!(c.size(), 3);
        let members: Vec<String> = c.members().iter().map(Word::to_string).collect();
        assert_eq!(members, ["011", "101", "110"]);
        let c = conjugates(&w("0101")).unwrap();
        assert_eq!(c.size(), 2);
        assert_eq!(c.representative().to_string(), "0101");
        assert_eq!(conjugates(&w("0")).unwrap().size(), 1);
        assert!(matches!(conjugates(&w("")), Err(Error::EmptyWord)));
    }

    #[test]
    fn contained_classes_examples() {
        let fs = FactorSet::from_members(2, vec![vec![0, 1], vec![1, 1], vec![1, 0]], true).unwrap();
        let classes = contained_conjugacy_classes(&fs).unwrap();
        let reps: Vec<String> = classes.iter().map(|c| c.representative().to_string()).collect();
        // "11" is a one-element class and is contained as well.
        assert_eq!(reps, ["01", "11"]);

        let fs = factor_set(&w("00"), 2).unwrap();
        let classes = contained_conjugacy_classes(&fs).unwrap();
        assert_eq!(classes.len(), 1);
        assert_eq!(classes[0].representative().to_string(), "00");

        let partial = FactorSet::from_members(2, vec![vec![0, 0]], false).unwrap();
        assert!(contained_conjugacy_classes(&partial).is_err());
    }
}
