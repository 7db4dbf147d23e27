//! Exhaustive checks behind the avoidance results, with machine-readable
//! reports.
//!
//! Every check returns a [`CheckReport`]. A failing report always carries a
//! concrete witness that can be re-checked with the lower-level operations.
//! Reports contain no timings, so identical parameters give identical bytes.

use std::collections::HashSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::builtin;
use crate::error::{Error, Result};
use crate::formulas::{
    circular_formula, find_occurrence, find_occurrence_at_end, render_variables, Assignment, Formula, VarBounds,
    Variable,
};
use crate::freeness::{
    is_free, last_position_check, lemma_length_bound, uniform_length_term, FreenessSpec, Rational, Repetition,
    RepetitionTracker,
};
use crate::index::FactorIndex;
use crate::words::{
    contained_conjugacy_classes, fixed_point_prefix, image_factor_set, render_digits, FactorSet, FactorSource,
    FixedPoint, Morphism, StabilizationLimits,
};

/// Default cap on depth-first search nodes per check.
pub const DEFAULT_NODE_CAP: u64 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Inconclusive,
    Fail,
}

impl Verdict {
    /// Fail if anything failed, else inconclusive if anything was, else pass.
    pub fn combine<I: IntoIterator<Item = Verdict>>(verdicts: I) -> Verdict {
        verdicts.into_iter().max().unwrap_or(Verdict::Pass)
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Inconclusive => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }
}

fn to_value<T: Serialize + ?Sized>(value: &T) -> Value {
    serde_json::to_value(value).expect("report values serialize")
}

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub claim: String,
    pub params: Map<String, Value>,
    pub verdict: Verdict,
    pub witnesses: Vec<Value>,
    pub stats: Map<String, Value>,
    pub evidence: Map<String, Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub assumptions: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<CheckReport>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, claim: impl Into<String>) -> Self {
        CheckReport {
            name: name.into(),
            claim: claim.into(),
            params: Map::new(),
            verdict: Verdict::Pass,
            witnesses: Vec::new(),
            stats: Map::new(),
            evidence: Map::new(),
            assumptions: Vec::new(),
            components: Vec::new(),
        }
    }

    pub fn param<T: Serialize + ?Sized>(mut self, key: &str, value: &T) -> Self {
        self.params.insert(key.into(), to_value(value));
        self
    }

    pub fn set_stat<T: Serialize + ?Sized>(&mut self, key: &str, value: &T) {
        self.stats.insert(key.into(), to_value(value));
    }

    pub fn set_evidence<T: Serialize + ?Sized>(&mut self, key: &str, value: &T) {
        self.evidence.insert(key.into(), to_value(value));
    }

    /// Records a counterexample and marks the report failed.
    pub fn fail_with(&mut self, witness: Value) {
        self.witnesses.push(witness);
        self.verdict = Verdict::Fail;
    }

    pub fn mark_inconclusive(&mut self, reason: impl Into<String>) {
        self.verdict = self.verdict.max(Verdict::Inconclusive);
        self.evidence
            .insert("inconclusive_reason".into(), Value::String(reason.into()));
    }

    /// Adds a sub-check whose verdict feeds into this one.
    pub fn push_component(&mut self, component: CheckReport) {
        self.verdict = self.verdict.max(component.verdict);
        self.components.push(component);
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out, 0);
        out
    }

    fn render_into(&self, out: &mut String, depth: usize) {
        let pad = "  ".repeat(depth);
        let _ = writeln!(out, "{pad}{:<12} {}", self.verdict.label(), self.name);
        let _ = writeln!(out, "{pad}  claim: {}", self.claim);
        for (label, map) in [
            ("params", &self.params),
            ("stats", &self.stats),
            ("evidence", &self.evidence),
        ] {
            if !map.is_empty() {
                let _ = writeln!(out, "{pad}  {label}: {}", Value::Object(map.clone()));
            }
        }
        for a in &self.assumptions {
            let _ = writeln!(out, "{pad}  assumes: {a}");
        }
        for w in &self.witnesses {
            let _ = writeln!(out, "{pad}  witness: {w}");
        }
        for c in &self.components {
            c.render_into(out, depth + 1);
        }
    }
}

/// A list of checks with an aggregate verdict.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub verdict: Verdict,
    pub checks: Vec<CheckReport>,
}

impl Report {
    pub fn new(checks: Vec<CheckReport>) -> Self {
        Report {
            verdict: Verdict::combine(checks.iter().map(|c| c.verdict)),
            checks,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&c.render_text());
        }
        let _ = writeln!(out, "{:<12} overall", self.verdict.label());
        out
    }

    pub fn find(&self, name: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// A morphism together with the name it is reported under.
#[derive(Clone, Copy, Debug)]
pub struct Named<'a> {
    pub name: &'a str,
    pub morphism: &'a Morphism,
}

impl<'a> Named<'a> {
    pub fn new(name: &'a str, morphism: &'a Morphism) -> Self {
        Named { name, morphism }
    }
}

fn width_of(m: &Morphism) -> Result<usize> {
    m.uniform_width().ok_or(Error::NotUniform)
}

fn images_value(m: &Morphism) -> Value {
    Value::Array(m.images().iter().map(|im| Value::String(render_digits(im))).collect())
}

// ---------------------------------------------------------------------------
// Synchronization

/// Least `l` such that the length-`l` prefixes (or suffixes) of all images
/// are pairwise distinct.
fn distinguishing_length(m: &Morphism, suffix: bool) -> Option<usize> {
    let q = m.uniform_width()?;
    (1..=q).find(|&l| {
        let mut seen = HashSet::new();
        m.images().iter().all(|im| {
            let part = if suffix { &im[q - l..] } else { &im[..l] };
            seen.insert(part)
        })
    })
}

/// Checks that no image `g(α)` occurs strictly inside `g(βγ)` and that the
/// images are told apart by short prefixes and suffixes.
///
/// `pairs` restricts `βγ` to the given two-letter words, typically the
/// length-2 factors of the word the morphism is applied to; `None` means all.
pub fn check_synchronization(g: Named<'_>, pairs: Option<&FactorSet>) -> Result<CheckReport> {
    let m = g.morphism;
    let q = width_of(m)?;
    let k = m.source_size() as u8;
    let pair_list: Vec<[u8; 2]> = match pairs {
        Some(fs) => {
            if fs.length() != 2 {
                return Err(Error::InvalidArgument("pair domain must have length 2".into()));
            }
            fs.sorted().into_iter().map(|p| [p[0], p[1]]).collect()
        }
        None => (0..k).flat_map(|b| (0..k).map(move |c| [b, c])).collect(),
    };
    let mut report = CheckReport::new(
        format!("synchronization/{}", g.name),
        format!(
            "{} is synchronizing: an image occurs in the image of a two-letter word only as prefix or suffix",
            g.name
        ),
    )
    .param("morphism", g.name)
    .param("images", &images_value(m))
    .param(
        "pairs",
        if pairs.is_some() {
            "two-letter factors of the source"
        } else {
            "all"
        },
    );
    let mut triples = 0u64;
    let mut buf = Vec::with_capacity(2 * q);
    for pair in &pair_list {
        buf.clear();
        m.apply_into(pair, &mut buf)?;
        for alpha in 0..k {
            let target = m.image(alpha);
            triples += 1;
            for offset in 1..q {
                if &buf[offset..offset + q] == target {
                    report.fail_with(json!({
                        "alpha": alpha,
                        "pair": render_digits(pair),
                        "offset": offset,
                    }));
                }
            }
        }
    }
    let prefix = distinguishing_length(m, false);
    let suffix = distinguishing_length(m, true);
    if prefix.is_none() || suffix.is_none() {
        report.fail_with(json!({ "identical_images": true }));
    }
    report.set_stat("triples_checked", &triples);
    report.set_stat("pairs_checked", &pair_list.len());
    report.set_evidence("width", &q);
    report.set_evidence("prefix_len", &prefix);
    report.set_evidence("suffix_len", &suffix);
    if let (Some(p), Some(s)) = (prefix, suffix) {
        report.set_evidence("prefix_and_suffix_fit", &(p + s <= q));
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Conjugacy classes in morphic images

/// Upper end `3q - 2` of the directly checked class lengths.
pub fn direct_class_range_end(width: usize) -> usize {
    3 * width - 2
}

/// Checks that `g(x)` contains no full conjugacy class of length at least
/// `min_len`, where `x` is the fixed point of `source` starting with 0.
///
/// Lengths up to `3q - 2` are checked directly; longer classes are covered
/// by synchronization of `g`, which is checked here, plus a cited argument.
pub fn verify_conjugacy_avoidance(
    g: Named<'_>,
    source: Named<'_>,
    min_len: usize,
    limits: StabilizationLimits,
) -> Result<CheckReport> {
    let q = width_of(g.morphism)?;
    if min_len == 0 {
        return Err(Error::InvalidArgument("minimum class length must be at least 1".into()));
    }
    let fixed = FixedPoint::new(source.morphism.clone(), 0)?.with_limits(limits);
    let end = direct_class_range_end(q);
    let mut report = CheckReport::new(
        format!("conjugacy-classes/{}", g.name),
        format!(
            "{}({}) contains no conjugacy class of length at least {min_len}",
            g.name, source.name
        ),
    )
    .param("morphism", g.name)
    .param("source", source.name)
    .param("min_len", &min_len)
    .param("direct_range", &[min_len, end]);
    report.assumptions.push(format!(
        "classes of length at least {} would yield, by synchronization, a circular-formula occurrence \
         in the fixed point of {}, which avoids every circular formula (cited, not machine-checked)",
        end + 1,
        source.name
    ));
    let mut factors = 0u64;
    let mut checked = 0u64;
    for len in min_len..=end {
        let fs = match image_factor_set(g.morphism, &fixed, len) {
            Ok(fs) => fs,
            Err(e @ (Error::NotStabilized { .. } | Error::IncompleteFactorSet(_))) => {
                report.mark_inconclusive(format!("length {len}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        };
        factors += fs.len() as u64;
        checked += 1;
        for class in contained_conjugacy_classes(&fs)? {
            report.fail_with(json!({
                "length": len,
                "class": class.representative().to_string(),
                "size": class.size(),
            }));
        }
    }
    report.set_stat("lengths_checked", &checked);
    report.set_stat("factors_examined", &factors);
    let pairs = fixed.factor_set(2)?;
    report.push_component(check_synchronization(g, Some(&pairs))?);
    Ok(report)
}

// ---------------------------------------------------------------------------
// Depth-first enumeration of power-free words, split across threads

/// Per-branch state of an enumeration of spec-free words.
trait Walker: Clone + Send + Sync {
    type Hit: Send;
    type Output: Send;

    /// Called once `word` (non-empty) is known to be free; `Err` stops.
    fn enter(&mut self, word: &[u8]) -> std::result::Result<(), Self::Hit>;
    fn leave(&mut self, word: &[u8]);
    /// Called on words that are not extended: maximal length or no free extension.
    fn leaf(&mut self, _word: &[u8]) {}
    fn finish(self) -> Self::Output;
}

struct Walked<H, O> {
    nodes: u64,
    /// First hit in lexicographic order, with the node count when it was found.
    hit: Option<H>,
    capped: bool,
    outputs: Vec<O>,
}

struct Branch<W: Walker> {
    walker: W,
    nodes: u64,
    cap: Option<u64>,
    hit_at: Option<(u64, W::Hit)>,
    capped: bool,
}

fn free_children(word: &mut Vec<u8>, alphabet: u8, spec: &FreenessSpec) -> Vec<u8> {
    (0..alphabet)
        .filter(|&x| {
            word.push(x);
            let ok = last_position_check(word, spec).is_none();
            word.pop();
            ok
        })
        .collect()
}

impl<W: Walker> Branch<W> {
    fn dfs(&mut self, word: &mut Vec<u8>, alphabet: u8, spec: &FreenessSpec, max_len: usize) -> bool {
        let children = if word.len() < max_len {
            free_children(word, alphabet, spec)
        } else {
            Vec::new()
        };
        if children.is_empty() {
            self.walker.leaf(word);
            return true;
        }
        for x in children {
            self.nodes += 1;
            if self.cap.is_some_and(|c| self.nodes > c) {
                self.capped = true;
                return false;
            }
            word.push(x);
            if let Err(hit) = self.walker.enter(word) {
                self.hit_at = Some((self.nodes, hit));
                word.pop();
                return false;
            }
            let go_on = self.dfs(word, alphabet, spec, max_len);
            self.walker.leave(word);
            word.pop();
            if !go_on {
                return false;
            }
        }
        true
    }
}

const SPLIT_DEPTH: usize = 3;

/// Enumerates spec-free words of length `1..=max_len` in parallel.
///
/// Work is split on prefixes of length three; each branch counts its own
/// nodes, and the branches are then replayed in lexicographic order, so the
/// result equals that of a sequential search with the same node cap.
fn walk_free_words<W: Walker>(
    alphabet: usize,
    spec: &FreenessSpec,
    max_len: usize,
    node_cap: Option<u64>,
    walker: W,
) -> Walked<W::Hit, W::Output> {
    let k = alphabet as u8;
    let depth = SPLIT_DEPTH.min(max_len);
    // Prefixes of length `depth`, plus shorter words with no free extension.
    let mut branches: Vec<Vec<u8>> = Vec::new();
    let mut prefix_nodes = 0u64;
    let mut stack: Vec<Vec<u8>> = vec![Vec::new()];
    while let Some(mut w) = stack.pop() {
        if w.len() == depth {
            branches.push(w);
            continue;
        }
        let children = free_children(&mut w, k, spec);
        if children.is_empty() && !w.is_empty() {
            branches.push(w);
            continue;
        }
        for &x in children.iter().rev() {
            let mut c = w.clone();
            c.push(x);
            prefix_nodes += 1;
            stack.push(c);
        }
    }
    branches.sort();
    if node_cap.is_some_and(|c| prefix_nodes > c) {
        return Walked {
            nodes: node_cap.unwrap() + 1,
            hit: None,
            capped: true,
            outputs: Vec::new(),
        };
    }
    let sub_cap = node_cap.map(|c| c - prefix_nodes);
    let results: Vec<Branch<W>> = branches
        .par_iter()
        .map(|prefix| {
            let mut b = Branch {
                walker: walker.clone(),
                nodes: 0,
                cap: sub_cap,
                hit_at: None,
                capped: false,
            };
            let mut word = Vec::with_capacity(max_len);
            for &x in prefix {
                word.push(x);
                if let Err(hit) = b.walker.enter(&word) {
                    b.hit_at = Some((0, hit));
                    return b;
                }
            }
            b.dfs(&mut word, k, spec, max_len);
            b
        })
        .collect();
    let mut total = prefix_nodes;
    let mut outputs = Vec::with_capacity(results.len());
    for b in results {
        if let Some((at, hit)) = b.hit_at {
            if node_cap.is_none_or(|c| total + at <= c) {
                return Walked {
                    nodes: total + at,
                    hit: Some(hit),
                    capped: false,
                    outputs,
                };
            }
        }
        total += b.nodes;
        if b.capped || node_cap.is_some_and(|c| total > c) {
            return Walked {
                nodes: node_cap.unwrap() + 1,
                hit: None,
                capped: true,
                outputs,
            };
        }
        outputs.push(b.walker.finish());
    }
    Walked {
        nodes: total,
        hit: None,
        capped: false,
        outputs,
    }
}

fn free_pairs(alphabet: usize, spec: &FreenessSpec) -> Result<FactorSet> {
    let mut pairs = Vec::new();
    for x in 0..alphabet as u8 {
        for y in 0..alphabet as u8 {
            if is_free(&[x, y], spec) {
                pairs.push(vec![x, y]);
            }
        }
    }
    FactorSet::from_members(2, pairs, true)
}

// ---------------------------------------------------------------------------
// Power-freeness of morphic images

#[derive(Clone)]
struct ImageWalker<'a> {
    morphism: &'a Morphism,
    target: &'a FreenessSpec,
    image: RepetitionTracker,
}

struct ImageHit {
    source: Vec<u8>,
    image: Vec<u8>,
    repetition: Repetition,
}

impl Walker for ImageWalker<'_> {
    type Hit = ImageHit;
    type Output = ();

    fn enter(&mut self, word: &[u8]) -> std::result::Result<(), ImageHit> {
        let last = *word.last().expect("entered words are non-empty");
        for &y in self.morphism.image(last) {
            if self.image.push(y).is_some() {
                let image = self.morphism.apply_slice(word).expect("letters are in range");
                let repetition = crate::freeness::find_forbidden_repetition(&image, self.target)
                    .expect("a forbidden repetition was just seen");
                return Err(ImageHit {
                    source: word.to_vec(),
                    image,
                    repetition,
                });
            }
        }
        Ok(())
    }

    fn leave(&mut self, word: &[u8]) {
        let last = *word.last().expect("entered words are non-empty");
        for _ in self.morphism.image(last) {
            self.image.pop();
        }
    }

    fn finish(self) {}
}

/// Checks that `m(w)` is `target`-free for every `source`-free word `w` over
/// `alphabet` letters shorter than the length bound.
///
/// The bound is the larger of the two length terms for synchronizing uniform
/// morphisms. `max_source_len` replaces it, for instance when the target
/// threshold does not exceed the source threshold.
pub fn verify_image_freeness(
    m: Named<'_>,
    alphabet: usize,
    source: &FreenessSpec,
    target: &FreenessSpec,
    max_source_len: Option<usize>,
    node_cap: Option<u64>,
) -> Result<CheckReport> {
    let q = width_of(m.morphism)?;
    if m.morphism.source_size() != alphabet {
        return Err(Error::InvalidArgument(format!(
            "morphism is defined on {} letters, not {alphabet}",
            m.morphism.source_size()
        )));
    }
    let (max_len, lemma_bound, uniform_term) = match max_source_len {
        Some(n) => (n, None, None),
        None => {
            let lemma = lemma_length_bound(target, source.threshold())?;
            let term = uniform_length_term(target, q)?;
            (lemma.max(term) - 1, Some(lemma), Some(term))
        }
    };
    let mut report = CheckReport::new(
        format!("image-freeness/{}", m.name),
        format!(
            "the {}-image of every {source}-free word over {alphabet} letters is {target}-free",
            m.name
        ),
    )
    .param("morphism", m.name)
    .param("alphabet", &alphabet)
    .param("source_spec", source)
    .param("target_spec", target)
    .param("max_source_len", &max_len)
    .param("node_cap", &node_cap);
    report.set_evidence("lemma_bound", &lemma_bound);
    report.set_evidence("uniform_term", &uniform_term);
    let walker = ImageWalker {
        morphism: m.morphism,
        target,
        image: RepetitionTracker::new(*target, m.morphism.target_size()),
    };
    let walked = walk_free_words(alphabet, source, max_len, node_cap, walker);
    report.set_stat("words_enumerated", &walked.nodes);
    if let Some(hit) = walked.hit {
        let r = &hit.repetition;
        report.fail_with(json!({
            "source_word": render_digits(&hit.source),
            "image": render_digits(&hit.image),
            "repetition": {
                "start": r.start,
                "period": r.period,
                "length": r.length,
                "exponent": r.exponent,
                "factor": render_digits(r.factor(&hit.image)),
            },
        }));
    } else if walked.capped {
        report.mark_inconclusive("node cap exceeded");
    }
    let pairs = free_pairs(alphabet, source)?;
    let sync = check_synchronization(m, Some(&pairs))?;
    if sync.verdict != Verdict::Pass && report.verdict == Verdict::Pass && max_source_len.is_none() {
        report.mark_inconclusive("the length bound needs a synchronizing morphism");
    }
    report.set_evidence("synchronizing", &(sync.verdict == Verdict::Pass));
    report.components.push(sync);
    Ok(report)
}

// ---------------------------------------------------------------------------
// Formula exclusion in factor families of morphic images

/// The words a morphism is applied to.
#[derive(Clone, Debug)]
pub enum SourceFamily {
    /// All spec-free words over `alphabet` letters.
    FreeWords { alphabet: usize, spec: FreenessSpec },
    /// Factors of the fixed point of a morphism starting with 0.
    FixedPoint { name: String, word: FixedPoint },
}

impl SourceFamily {
    fn describe(&self) -> String {
        match self {
            SourceFamily::FreeWords { alphabet, spec } => {
                format!("{spec}-free words over {alphabet} letters")
            }
            SourceFamily::FixedPoint { name, .. } => format!("fixed point of {name}"),
        }
    }
}

#[derive(Clone)]
struct LeafCollector {
    source_len: usize,
    leaves: Vec<Vec<u8>>,
}

impl Walker for LeafCollector {
    type Hit = ();
    type Output = Vec<Vec<u8>>;

    fn enter(&mut self, _word: &[u8]) -> std::result::Result<(), ()> {
        Ok(())
    }

    fn leave(&mut self, _word: &[u8]) {}

    fn leaf(&mut self, word: &[u8]) {
        debug_assert!(word.len() <= self.source_len);
        self.leaves.push(word.to_vec());
    }

    fn finish(self) -> Vec<Vec<u8>> {
        self.leaves
    }
}

/// Source words whose images cover every image factor of length `window`,
/// or `None` when the node cap was hit.
fn covering_source_words(
    source: &SourceFamily,
    source_len: usize,
    node_cap: Option<u64>,
) -> Result<Option<(Vec<Vec<u8>>, u64)>> {
    match source {
        SourceFamily::FreeWords { alphabet, spec } => {
            let collector = LeafCollector {
                source_len,
                leaves: Vec::new(),
            };
            let walked = walk_free_words(*alphabet, spec, source_len, node_cap, collector);
            if walked.capped {
                return Ok(None);
            }
            Ok(Some((walked.outputs.into_iter().flatten().collect(), walked.nodes)))
        }
        SourceFamily::FixedPoint { word, .. } => {
            let fs = word.factor_set(source_len)?;
            if !fs.is_complete() {
                return Err(Error::IncompleteFactorSet(source_len));
            }
            let words: Vec<Vec<u8>> = fs.sorted().into_iter().map(<[u8]>::to_vec).collect();
            let n = words.len() as u64;
            Ok(Some((words, n)))
        }
    }
}

fn occurrence_witness(f: &Formula, a: &Assignment, index: &FactorIndex, sources: &[Vec<u8>]) -> Value {
    let fragments: Vec<Value> = a
        .locations()
        .iter()
        .map(|loc| {
            let (carrier, offset) = index.position(loc.position);
            let frag = &f.fragments()[loc.fragment];
            json!({
                "fragment": render_variables(frag),
                "image": render_digits(&a.apply(frag)),
                "source_word": render_digits(&sources[carrier]),
                "offset": offset,
            })
        })
        .collect();
    json!({
        "formula": f.to_string(),
        "assignment": a.render_digits(),
        "fragments": fragments,
    })
}

/// Extra letters appended to a start word by the single-word search.
const SINGLE_WORD_EXTRA: usize = 24;
const SINGLE_WORD_NODE_CAP: u64 = 2_000_000;

struct SingleWordSearch<'a> {
    morphism: &'a Morphism,
    alphabet: u8,
    spec: &'a FreenessSpec,
    targets: &'a [Vec<u8>],
    max_len: usize,
    nodes: u64,
}

impl SingleWordSearch<'_> {
    fn newly_found(&self, image: &[u8], from: usize, found: &mut [bool]) {
        for (t, hit) in self.targets.iter().zip(found.iter_mut()) {
            if !*hit {
                let lo = from.saturating_sub(t.len() - 1);
                *hit = image[lo..].windows(t.len()).any(|w| w == t.as_slice());
            }
        }
    }

    fn dfs(&mut self, word: &mut Vec<u8>, image: &mut Vec<u8>, found: &[bool]) -> bool {
        if found.iter().all(|&f| f) {
            return true;
        }
        if word.len() >= self.max_len || self.nodes >= SINGLE_WORD_NODE_CAP {
            return false;
        }
        for x in 0..self.alphabet {
            word.push(x);
            if last_position_check(word, self.spec).is_none() {
                self.nodes += 1;
                let from = image.len();
                image.extend_from_slice(self.morphism.image(x));
                let mut next = found.to_vec();
                self.newly_found(image, from, &mut next);
                if self.dfs(word, image, &next) {
                    return true;
                }
                image.truncate(from);
            }
            word.pop();
        }
        false
    }
}

/// Looks for one `spec`-free word whose image contains every target, by
/// extending each start word to the right.
fn single_source_word(
    morphism: &Morphism,
    alphabet: usize,
    spec: &FreenessSpec,
    targets: &[Vec<u8>],
    starts: &[Vec<u8>],
) -> (Option<Vec<u8>>, u64) {
    let mut search = SingleWordSearch {
        morphism,
        alphabet: alphabet as u8,
        spec,
        targets,
        max_len: 0,
        nodes: 0,
    };
    for start in starts {
        if !is_free(start, spec) {
            continue;
        }
        search.max_len = start.len() + SINGLE_WORD_EXTRA;
        let mut word = start.clone();
        let mut image = morphism.apply_slice(start).expect("start letters are in range");
        let mut found = vec![false; targets.len()];
        search.newly_found(&image, 0, &mut found);
        if search.dfs(&mut word, &mut image, &found) {
            return (Some(word), search.nodes);
        }
    }
    (None, search.nodes)
}

/// Checks that no formula in `formulas` has an occurrence, with image
/// lengths within `bounds`, in the factors of `m`-images of `source` words.
///
/// Fragment images are searched independently across the whole family, so a
/// reported occurrence may combine factors of different words. For a family
/// of free words the witness is then refined: a bounded search looks for one
/// free source word whose image holds every fragment image, and records it
/// as `single_source_word` when found.
pub fn verify_formula_exclusion(
    m: Named<'_>,
    formulas: &[Formula],
    bounds: &VarBounds,
    source: &SourceFamily,
    node_cap: Option<u64>,
) -> Result<CheckReport> {
    let q = width_of(m.morphism)?;
    let mut window = 0;
    for f in formulas {
        let w = bounds
            .window(f)
            .ok_or_else(|| Error::Unbounded(format!("bounds {bounds} leave a variable of {f} unbounded")))?;
        window = window.max(w);
    }
    let source_len = window.div_ceil(q) + 1;
    let names: Vec<String> = formulas.iter().map(Formula::to_string).collect();
    let mut report = CheckReport::new(
        format!("formula-exclusion/{}/{}", m.name, names.join("+")),
        format!(
            "{}-images of {} contain no occurrence of {} with {bounds}",
            m.name,
            source.describe(),
            names.join(" nor ")
        ),
    )
    .param("morphism", m.name)
    .param("formulas", &names)
    .param("bounds", bounds)
    .param("source", &source.describe())
    .param("node_cap", &node_cap);
    report.set_evidence("window", &window);
    report.set_evidence("source_len", &source_len);
    let Some((sources, nodes)) = covering_source_words(source, source_len, node_cap)? else {
        report.set_stat("source_nodes", &node_cap.map(|c| c + 1));
        report.mark_inconclusive("node cap exceeded");
        return Ok(report);
    };
    let carriers: Vec<Vec<u8>> = sources
        .iter()
        .map(|u| m.morphism.apply_slice(u))
        .collect::<Result<_>>()?;
    let index = FactorIndex::from_carriers(carriers, q, window);
    report.set_stat("source_nodes", &nodes);
    report.set_stat("source_words", &sources.len());
    report.set_stat("anchors", &index.anchor_count());
    report.set_stat("letters_indexed", &index.letter_count());
    for f in formulas {
        let Some(a) = find_occurrence(f, &index, bounds)? else {
            continue;
        };
        debug_assert!(a.is_occurrence_in(f, &index));
        let mut witness = occurrence_witness(f, &a, &index, &sources);
        if let SourceFamily::FreeWords { alphabet, spec } = source {
            // Fragment images may come from different source words; try to
            // fit them all into the image of a single one.
            let targets: Vec<Vec<u8>> = f.fragments().iter().map(|frag| a.apply(frag)).collect();
            let starts: Vec<Vec<u8>> = a
                .locations()
                .iter()
                .map(|loc| {
                    let (carrier, offset) = index.position(loc.position);
                    let len = targets[loc.fragment].len();
                    sources[carrier][offset / q..=(offset + len - 1) / q].to_vec()
                })
                .collect();
            let (single, nodes) = single_source_word(m.morphism, *alphabet, spec, &targets, &starts);
            witness["single_source_word"] = json!(single.as_deref().map(render_digits));
            witness["single_word_search_nodes"] = json!(nodes);
        }
        report.fail_with(witness);
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Length bounds from repetition exponents

/// `lhs · x <= rhs · x` for a vector `x` of positive variables `a, b, c, ...`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearInequality {
    pub lhs: Vec<i64>,
    pub rhs: Vec<i64>,
}

fn pad(v: &[i64], n: usize) -> Vec<i64> {
    let mut v = v.to_vec();
    v.resize(n, 0);
    v
}

fn render_linear(coeffs: &[i64]) -> String {
    let terms: Vec<String> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0)
        .map(|(i, &c)| {
            let var = (b'a' + i as u8) as char;
            match c {
                1 => var.to_string(),
                -1 => format!("-{var}"),
                _ => format!("{c}{var}"),
            }
        })
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join("+").replace("+-", "-")
    }
}

struct LinearParser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl LinearParser<'_> {
    fn err(&self) -> Error {
        Error::Parse(format!(
            "bad linear expression {:?} at {}",
            String::from_utf8_lossy(self.s),
            self.pos
        ))
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn number(&mut self) -> Option<i64> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos]).ok()?.parse().ok()
    }

    fn expr(&mut self) -> Result<Vec<i64>> {
        let mut total = Vec::new();
        loop {
            let coeff = self.number().unwrap_or(1);
            let term = match self.peek() {
                Some(b'(') => {
                    self.pos += 1;
                    let inner = self.expr()?;
                    if self.peek() != Some(b')') {
                        return Err(self.err());
                    }
                    self.pos += 1;
                    inner
                }
                Some(c @ b'a'..=b'z') => {
                    self.pos += 1;
                    let mut v = vec![0; (c - b'a') as usize + 1];
                    v[(c - b'a') as usize] = 1;
                    v
                }
                _ => return Err(self.err()),
            };
            let n = total.len().max(term.len());
            total = pad(&total, n);
            for (t, x) in total.iter_mut().zip(pad(&term, n)) {
                *t += coeff * x;
            }
            if self.peek() == Some(b'+') {
                self.pos += 1;
            } else {
                return Ok(total);
            }
        }
    }
}

fn parse_linear(text: &str) -> Result<Vec<i64>> {
    let compact: Vec<u8> = text.bytes().filter(|c| !c.is_ascii_whitespace()).collect();
    let mut p = LinearParser { s: &compact, pos: 0 };
    let v = p.expr()?;
    if p.pos != compact.len() {
        return Err(p.err());
    }
    Ok(v)
}

impl LinearInequality {
    /// Parses `53a <= 22(2b+c)` style inequalities.
    pub fn parse(text: &str) -> Result<Self> {
        let (l, r) = text
            .split_once("<=")
            .ok_or_else(|| Error::Parse(format!("expected `<=` in {text:?}")))?;
        let (lhs, rhs) = (parse_linear(l)?, parse_linear(r)?);
        let n = lhs.len().max(rhs.len());
        Ok(LinearInequality {
            lhs: pad(&lhs, n),
            rhs: pad(&rhs, n),
        })
    }

    fn arity(&self) -> usize {
        self.lhs.len().max(self.rhs.len())
    }

    /// `lhs - rhs`; the inequality says this is non-positive at `x`.
    pub fn difference(&self, n: usize) -> Vec<i64> {
        pad(&self.lhs, n)
            .iter()
            .zip(pad(&self.rhs, n))
            .map(|(l, r)| l - r)
            .collect()
    }

    /// True when no positive `x` satisfies the inequality: every coefficient
    /// of `lhs - rhs` is non-negative and one is positive.
    pub fn unsatisfiable_for_positive(&self) -> bool {
        let d = self.difference(self.arity());
        d.iter().all(|&c| c >= 0) && d.iter().any(|&c| c > 0)
    }
}

impl std::fmt::Display for LinearInequality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} <= {}", render_linear(&self.lhs), render_linear(&self.rhs))
    }
}

impl Serialize for LinearInequality {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// `den·|XYX| - num·|XY|` as a linear form: the exponent bound `|XYX|/|XY| <= β`
/// for a factor `XYX` of a formula fragment with border `X` of `border` variables.
pub fn exponent_form(factor: &[u8], border: usize, threshold: Rational) -> (Vec<i64>, Vec<i64>) {
    let n = factor.iter().map(|&v| v as usize + 1).max().unwrap_or(0);
    let mut length = vec![0i64; n];
    let mut period = vec![0i64; n];
    for (i, &v) in factor.iter().enumerate() {
        length[v as usize] += 1;
        if i < factor.len() - border {
            period[v as usize] += 1;
        }
    }
    let form = length
        .iter()
        .zip(&period)
        .map(|(l, p)| threshold.denom() * l - threshold.numer() * p)
        .collect();
    (form, period)
}

fn proportional(a: &[i64], b: &[i64]) -> bool {
    // a = t·b for some t > 0.
    let n = a.len().max(b.len());
    let (a, b) = (pad(a, n), pad(b, n));
    let Some(i) = (0..n).find(|&i| b[i] != 0) else {
        return false;
    };
    (a[i] as i128 * b[i] as i128) > 0 && (0..n).all(|j| a[j] as i128 * b[i] as i128 == b[j] as i128 * a[i] as i128)
}

/// Non-negative integer multipliers `y` with `Σ y_i d_i >= 0` coordinatewise
/// and not zero. Such `y` shows the system `d_i · x <= 0` has no positive
/// solution. The search tries all-ones first, then small multipliers.
pub fn infeasibility_certificate(diffs: &[Vec<i64>]) -> Option<Vec<i64>> {
    let n = diffs.iter().map(Vec::len).max().unwrap_or(0);
    let diffs: Vec<Vec<i64>> = diffs.iter().map(|d| pad(d, n)).collect();
    let works = |y: &[i64]| {
        let combo: Vec<i64> = (0..n)
            .map(|j| diffs.iter().zip(y).map(|(d, &c)| d[j] * c).sum())
            .collect();
        combo.iter().all(|&c| c >= 0) && combo.iter().any(|&c| c > 0)
    };
    let ones = vec![1; diffs.len()];
    if works(&ones) {
        return Some(ones);
    }
    let m = diffs.len() as u32;
    if m == 0 {
        return None;
    }
    let limit = ((4_000_000f64).powf(1.0 / m as f64) as i64).clamp(1, 1000);
    let mut y = vec![0i64; diffs.len()];
    loop {
        let mut i = 0;
        while i < y.len() {
            y[i] += 1;
            if y[i] <= limit {
                break;
            }
            y[i] = 0;
            i += 1;
        }
        if i == y.len() {
            return None;
        }
        if works(&y) {
            return Some(y);
        }
    }
}

/// One stated exponent inequality: the factor `XYX` (as variable letters)
/// with border length `|X|`, and the inequality it is claimed to give.
#[derive(Clone, Debug)]
pub struct DerivationStep {
    pub factor: String,
    pub border: usize,
    pub stated: LinearInequality,
}

impl DerivationStep {
    pub fn new(factor: &str, border: usize, stated: &str) -> Result<Self> {
        Ok(DerivationStep {
            factor: factor.into(),
            border,
            stated: LinearInequality::parse(stated)?,
        })
    }
}

/// A cap on one variable deduced from a stated step and a proved sum cap,
/// as in "`x >= cap+1` forces `k·x <= m·(sum)` and `sum <= S`, so `x <= m·S/k`".
#[derive(Clone, Debug)]
pub struct CapStep {
    pub var: Variable,
    pub cap: usize,
    pub step: usize,
    pub sum: Vec<Variable>,
    pub sum_cap: usize,
}

/// A hand derivation of variable caps for a formula occurrence in a
/// `(β+, n)`-free word: assuming `premise · x >= n`, each step's repetition
/// has period at least `n`, so its exponent is at most `β`; the stated
/// steps sum to a contradiction, giving `premise · x <= n - 1`.
#[derive(Clone, Debug)]
pub struct BoundDerivation {
    /// The formula as written; step factors use its variable names.
    pub formula: String,
    pub target: FreenessSpec,
    pub premise: Vec<Variable>,
    pub steps: Vec<DerivationStep>,
    pub stated_sum: LinearInequality,
    /// A variable permutation mapping the formula to itself, used to carry
    /// the conclusion over to the permuted premise.
    pub symmetry: Option<Vec<Variable>>,
    pub caps: Vec<CapStep>,
}

fn parse_vars(s: &str) -> Result<Vec<u8>> {
    s.chars()
        .map(|c| {
            Variable::from_char(c)
                .map(|v| v.0)
                .ok_or_else(|| Error::FormulaSyntax(format!("bad variable {c:?}")))
        })
        .collect()
}

/// Checks a bound derivation in exact arithmetic.
pub fn verify_bound_derivation(d: &BoundDerivation) -> Result<CheckReport> {
    let beta = d.target.threshold();
    let n_min = d.target.min_period();
    let premise_text = d
        .premise
        .iter()
        .map(|v| v.name().to_ascii_lowercase().to_string())
        .collect::<Vec<_>>()
        .join("+");
    let mut report = CheckReport::new(
        format!("bound-derivation/{}", d.formula),
        format!(
            "an occurrence of {} in a {}-free word has {premise_text} <= {}",
            d.formula,
            d.target,
            n_min - 1
        ),
    )
    .param("formula", &d.formula)
    .param("target_spec", &d.target)
    .param("premise", &format!("{premise_text} >= {n_min}"));
    let fragments = d.formula.split('.').map(parse_vars).collect::<Result<Vec<_>>>()?;
    let mut covered_diffs = Vec::new();
    let mut uncovered = Vec::new();
    let mut steps = Vec::new();
    for step in &d.steps {
        let factor = parse_vars(&step.factor)?;
        let in_formula = fragments
            .iter()
            .any(|frag| frag.windows(factor.len()).any(|w| w == factor.as_slice()));
        let (form, period) = exponent_form(&factor, step.border, beta);
        let n = form.len().max(step.stated.arity());
        let matches = proportional(&step.stated.difference(n), &form);
        let covered = d
            .premise
            .iter()
            .all(|v| period.get(v.0 as usize).copied().unwrap_or(0) >= 1);
        if !in_formula || !matches {
            report.fail_with(json!({
                "step": step.factor,
                "stated": step.stated,
                "derived": format!("{} <= 0", render_linear(&form)),
                "factor_in_formula": in_formula,
            }));
        }
        if covered {
            covered_diffs.push(step.stated.difference(n));
        } else {
            uncovered.push(step.factor.clone());
        }
        steps.push(json!({
            "factor": step.factor,
            "stated": step.stated,
            "matches_exponent_bound": matches,
            "period_covered_by_premise": covered,
        }));
    }
    report.set_evidence("steps", &steps);
    // The stated sum must be the literal sum of the stated steps.
    let n = d
        .steps
        .iter()
        .map(|s| s.stated.arity())
        .chain([d.stated_sum.arity()])
        .max()
        .unwrap_or(0);
    let sum_of = |side: fn(&LinearInequality) -> &Vec<i64>| -> Vec<i64> {
        (0..n)
            .map(|j| d.steps.iter().map(|s| pad(side(&s.stated), n)[j]).sum())
            .collect()
    };
    let sum_matches =
        sum_of(|s| &s.lhs) == pad(&d.stated_sum.lhs, n) && sum_of(|s| &s.rhs) == pad(&d.stated_sum.rhs, n);
    let contradiction = d.stated_sum.unsatisfiable_for_positive();
    report.set_evidence("stated_sum", &d.stated_sum);
    report.set_evidence("stated_sum_is_sum_of_steps", &sum_matches);
    report.set_evidence("stated_sum_unsatisfiable", &contradiction);
    if !sum_matches || !contradiction {
        report.fail_with(json!({ "stated_sum": d.stated_sum, "is_sum": sum_matches, "unsatisfiable": contradiction }));
    }
    // Only steps whose period the premise bounds below may be used.
    let certificate = infeasibility_certificate(&covered_diffs);
    report.set_evidence("steps_not_covered_by_premise", &uncovered);
    report.set_evidence("covered_steps_certificate", &certificate);
    if certificate.is_none() {
        report.fail_with(json!({ "covered_steps_infeasible": false, "uncovered": uncovered }));
    }
    if let Some(perm) = &d.symmetry {
        let images: Vec<Vec<u8>> = perm.iter().map(|v| vec![v.0]).collect();
        let a = Assignment::new(images)?;
        let mut mapped: Vec<Vec<u8>> = fragments.iter().map(|f| a.apply(f)).collect();
        let mut original = fragments.clone();
        mapped.sort();
        original.sort();
        let invariant = mapped == original;
        let mapped_premise: Vec<String> = d
            .premise
            .iter()
            .map(|v| perm[v.0 as usize].name().to_ascii_lowercase().to_string())
            .collect();
        report.set_evidence(
            "symmetric_conclusion",
            &format!("{} <= {}", mapped_premise.join("+"), n_min - 1),
        );
        report.set_evidence("formula_invariant_under_symmetry", &invariant);
        if !invariant {
            report.fail_with(json!({ "symmetry": perm.iter().map(|v| v.to_string()).collect::<Vec<_>>() }));
        }
    }
    let mut caps = Vec::new();
    for c in &d.caps {
        caps.push(verify_cap_step(d, c, &mut report)?);
    }
    if !caps.is_empty() {
        report.set_evidence("caps", &caps);
    }
    Ok(report)
}

fn verify_cap_step(d: &BoundDerivation, c: &CapStep, report: &mut CheckReport) -> Result<Value> {
    let step = d
        .steps
        .get(c.step)
        .ok_or_else(|| Error::InvalidArgument(format!("no derivation step {}", c.step)))?;
    let factor = parse_vars(&step.factor)?;
    let (_, period) = exponent_form(&factor, step.border, d.target.threshold());
    // With x >= cap+1 and every other variable >= 1, the period reaches n.
    let min_period: i64 = period
        .iter()
        .enumerate()
        .map(|(v, &p)| p * if v == c.var.0 as usize { c.cap as i64 + 1 } else { 1 })
        .sum();
    let premise_ok = min_period >= d.target.min_period() as i64;
    let v = c.var.0 as usize;
    let n = step.stated.arity().max(v + 1);
    let lhs = pad(&step.stated.lhs, n);
    let rhs = pad(&step.stated.rhs, n);
    let sum_vars: Vec<usize> = c.sum.iter().map(|s| s.0 as usize).collect();
    let shape_ok = lhs.iter().enumerate().all(|(j, &x)| (j == v) == (x != 0))
        && lhs[v] > 0
        && rhs.iter().enumerate().all(|(j, &x)| x == 0 || sum_vars.contains(&j))
        && sum_vars
            .iter()
            .all(|&j| rhs.get(j).copied().unwrap_or(0) == rhs[sum_vars[0]]);
    let bound = Rational::new(rhs.get(sum_vars[0]).copied().unwrap_or(0) * c.sum_cap as i64, lhs[v])?;
    let holds = premise_ok && shape_ok && bound < Rational::integer(c.cap as i64 + 1);
    let name = c.var.name().to_ascii_lowercase();
    if !holds {
        report.fail_with(json!({ "cap": format!("{name} <= {}", c.cap), "bound": bound }));
    }
    Ok(json!({
        "cap": format!("{name} <= {}", c.cap),
        "via": step.factor,
        "bound": bound,
        "period_at_least": min_period,
        "holds": holds,
    }))
}

// ---------------------------------------------------------------------------
// Backtracking

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BacktrackOutcome {
    /// Every avoiding word was visited; none reaches the length cap.
    Exhausted,
    /// An avoiding word of the capped length exists.
    ReachedCap,
    NodeCapExceeded,
}

/// Result of a depth-first search for long words with a forbidden structure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BacktrackReport {
    pub subject: String,
    pub alphabet: usize,
    pub cap: usize,
    pub outcome: BacktrackOutcome,
    pub max_length: usize,
    pub longest: String,
    pub nodes: u64,
    pub first_letter_fixed: bool,
}

impl BacktrackReport {
    /// As a lower-bound check: exhaustion shows the alphabet is too small.
    pub fn into_lower_bound_check(self) -> CheckReport {
        let mut report = CheckReport::new(
            format!("backtrack/{}/{}", self.subject, self.alphabet),
            format!(
                "every word over {} letters avoiding {} is finite",
                self.alphabet, self.subject
            ),
        )
        .param("subject", &self.subject)
        .param("alphabet", &self.alphabet)
        .param("cap", &self.cap);
        report.set_stat("nodes", &self.nodes);
        report.set_evidence("outcome", &self.outcome);
        report.set_evidence("max_length", &self.max_length);
        report.set_evidence("longest", &self.longest);
        match self.outcome {
            BacktrackOutcome::Exhausted => {}
            BacktrackOutcome::ReachedCap => report.mark_inconclusive("length cap reached"),
            BacktrackOutcome::NodeCapExceeded => report.mark_inconclusive("node cap exceeded"),
        }
        report
    }
}

struct Backtracker<'a, F> {
    alphabet: u8,
    cap: usize,
    node_cap: Option<u64>,
    accept: F,
    word: Vec<u8>,
    longest: Vec<u8>,
    nodes: u64,
    _marker: std::marker::PhantomData<&'a ()>,
}

impl<F: FnMut(&[u8]) -> bool> Backtracker<'_, F> {
    fn run(&mut self) -> BacktrackOutcome {
        let letters = if self.word.is_empty() { 1 } else { self.alphabet };
        for x in 0..letters {
            self.word.push(x);
            if (self.accept)(&self.word) {
                self.nodes += 1;
                if self.node_cap.is_some_and(|c| self.nodes > c) {
                    self.word.pop();
                    return BacktrackOutcome::NodeCapExceeded;
                }
                if self.word.len() > self.longest.len() {
                    self.longest.clone_from(&self.word);
                }
                if self.word.len() == self.cap {
                    return BacktrackOutcome::ReachedCap;
                }
                let outcome = self.run();
                if outcome != BacktrackOutcome::Exhausted {
                    return outcome;
                }
            } else {
                // Rejected extensions are dropped by `accept` and undone here.
            }
            self.word.pop();
        }
        BacktrackOutcome::Exhausted
    }
}

fn backtrack<F: FnMut(&[u8]) -> bool>(
    subject: String,
    alphabet: usize,
    cap: usize,
    node_cap: Option<u64>,
    accept: F,
) -> Result<BacktrackReport> {
    if alphabet == 0 || alphabet > u8::MAX as usize || cap == 0 {
        return Err(Error::InvalidArgument("alphabet and cap must be positive".into()));
    }
    let mut b = Backtracker {
        alphabet: alphabet as u8,
        cap,
        node_cap,
        accept,
        word: Vec::with_capacity(cap),
        longest: Vec::new(),
        nodes: 0,
        _marker: std::marker::PhantomData,
    };
    let outcome = b.run();
    Ok(BacktrackReport {
        subject,
        alphabet,
        cap,
        outcome,
        max_length: b.longest.len(),
        longest: render_digits(&b.longest),
        nodes: b.nodes,
        first_letter_fixed: true,
    })
}

/// Depth-first search for long words over `alphabet` letters avoiding `f`.
/// The first letter is fixed to 0, which loses nothing since avoidance is
/// invariant under renaming letters.
pub fn backtrack_avoidance(f: &Formula, alphabet: usize, cap: usize, node_cap: Option<u64>) -> Result<BacktrackReport> {
    let unbounded = VarBounds::unbounded();
    backtrack(f.to_string(), alphabet, cap, node_cap, |w| {
        find_occurrence_at_end(f, w, &unbounded).is_none()
    })
}

/// Factors of a growing word, with an undo log.
struct GrowingFactors {
    set: HashSet<Vec<u8>>,
    added: Vec<Vec<Vec<u8>>>,
}

impl GrowingFactors {
    /// Adds the suffixes of `w` that are new factors.
    fn push(&mut self, w: &[u8]) {
        let mut fresh = Vec::new();
        for start in (0..w.len()).rev() {
            let s = &w[start..];
            if !self.set.contains(s) {
                self.set.insert(s.to_vec());
                fresh.push(s.to_vec());
            }
        }
        self.added.push(fresh);
    }

    fn pop(&mut self) {
        for s in self.added.pop().unwrap_or_default() {
            self.set.remove(&s);
        }
    }
}

/// Depth-first search for long words containing no full conjugacy class of
/// length at least `min_class_len`.
///
/// A class can only become complete when one of its members becomes a
/// factor, that is, when a new suffix appears; only those are checked.
pub fn explore_conjecture(
    alphabet: usize,
    min_class_len: usize,
    cap: usize,
    node_cap: Option<u64>,
) -> Result<BacktrackReport> {
    if alphabet < 2 || min_class_len == 0 {
        return Err(Error::InvalidArgument(
            "need at least two letters and a positive class length".into(),
        ));
    }
    let mut factors = GrowingFactors {
        set: HashSet::new(),
        added: Vec::new(),
    };
    let mut depth = 0usize;
    let subject = format!("conjugacy classes of length >= {min_class_len}");
    backtrack(subject, alphabet, cap, node_cap, |w| {
        // The search pops a letter exactly when it shortens the word.
        while depth >= w.len() {
            factors.pop();
            depth -= 1;
        }
        factors.push(w);
        let (set, fresh) = (&factors.set, factors.added.last().unwrap());
        let bad = fresh.iter().filter(|u| u.len() >= min_class_len).any(|u| {
            (1..u.len()).all(|r| {
                let mut rot = u[r..].to_vec();
                rot.extend_from_slice(&u[..r]);
                set.contains(&rot)
            })
        });
        depth += 1;
        if bad {
            factors.pop();
            depth -= 1;
        }
        !bad
    })
}

// ---------------------------------------------------------------------------
// Finite probe of circular-formula avoidance

/// Checks that the fixed point prefix of `source` of length at least
/// `prefix_len` has no occurrence of `C_1 .. C_max_t` with images of length
/// at most `image_cap`.
pub fn probe_circular_avoidance(
    source: Named<'_>,
    prefix_len: usize,
    max_t: usize,
    image_cap: usize,
) -> Result<CheckReport> {
    let prefix = fixed_point_prefix(source.morphism, 0, prefix_len)?;
    let index = FactorIndex::from_word(prefix.letters());
    let bounds = VarBounds::uniform(image_cap);
    let mut report = CheckReport::new(
        format!("circular-probe/{}", source.name),
        format!(
            "a prefix of the fixed point of {} has no occurrence of C1..C{max_t} with images of length <= {image_cap}",
            source.name
        ),
    )
    .param("source", source.name)
    .param("min_prefix_len", &prefix_len)
    .param("max_t", &max_t)
    .param("image_cap", &image_cap);
    report.set_evidence("prefix_len", &prefix.len());
    for t in 1..=max_t {
        let f = circular_formula(t)?;
        if let Some(a) = find_occurrence(&f, &index, &bounds)? {
            report.fail_with(json!({ "formula": f.to_string(), "assignment": a.render_digits() }));
        }
    }
    report.assumptions.push(format!(
        "the fixed point of {} avoids every circular formula; only a finite prefix is probed here",
        source.name
    ));
    Ok(report)
}

// ---------------------------------------------------------------------------
// The whole run

/// Morphisms and caps for [`verify_paper`].
#[derive(Clone, Debug)]
pub struct PaperConfig {
    pub b4: Morphism,
    pub g2: Morphism,
    pub g3: Morphism,
    pub g6: Morphism,
    pub m15: Morphism,
    pub m6: Morphism,
    pub node_cap: Option<u64>,
    pub backtrack_cap: usize,
    pub limits: StabilizationLimits,
}

impl Default for PaperConfig {
    fn default() -> Self {
        let get = |name| builtin::morphism(name).expect("built-in morphisms are valid");
        PaperConfig {
            b4: get("b4"),
            g2: get("g2"),
            g3: get("g3"),
            g6: get("g6"),
            m15: get("m15"),
            m6: get("m6"),
            node_cap: Some(DEFAULT_NODE_CAP),
            backtrack_cap: 1000,
            limits: StabilizationLimits::default(),
        }
    }
}

impl PaperConfig {
    pub fn morphism_mut(&mut self, name: &str) -> Option<&mut Morphism> {
        Some(match name {
            "b4" => &mut self.b4,
            "g2" => &mut self.g2,
            "g3" => &mut self.g3,
            "g6" => &mut self.g6,
            "m15" => &mut self.m15,
            "m6" => &mut self.m6,
            _ => return None,
        })
    }
}

fn var(c: char) -> Variable {
    Variable::from_char(c).expect("valid variable")
}

fn vars(s: &str) -> Vec<Variable> {
    s.chars().map(var).collect()
}

/// The derivation of `a+b <= 60` for `ABCBA.CBABC` in `(97/75+, 61)`-free words.
pub fn m15_derivation() -> Result<BoundDerivation> {
    Ok(BoundDerivation {
        formula: "ABCBA.CBABC".into(),
        target: "97/75+,61".parse()?,
        premise: vars("AB"),
        steps: vec![
            DerivationStep::new("BAB", 1, "53b <= 22a")?,
            DerivationStep::new("BCB", 1, "53b <= 22c")?,
            DerivationStep::new("ABCBA", 1, "53a <= 22(2b+c)")?,
            DerivationStep::new("CBABC", 1, "53c <= 22(a+2b)")?,
        ],
        stated_sum: LinearInequality::parse("53a+106b+53c <= 44a+88b+44c")?,
        symmetry: Some(vars("CBA")),
        caps: Vec::new(),
    })
}

/// The derivations of `b+c <= 24` and `a <= 22` for the two `m6` formulas
/// in `(13/10+, 25)`-free words.
pub fn m6_derivations() -> Result<[BoundDerivation; 2]> {
    let target: FreenessSpec = "13/10+,25".parse()?;
    let a_cap = CapStep {
        var: var('A'),
        cap: 22,
        step: 0,
        sum: vars("BC"),
        sum_cap: 24,
    };
    Ok([
        BoundDerivation {
            formula: "ABCA.CABC.BCB".into(),
            target,
            premise: vars("BC"),
            steps: vec![
                DerivationStep::new("ABCA", 1, "7a <= 3(b+c)")?,
                DerivationStep::new("CABC", 1, "7c <= 3(a+b)")?,
                DerivationStep::new("BCB", 1, "7b <= 3c")?,
            ],
            stated_sum: LinearInequality::parse("7a+7b+7c <= 3a+6b+6c")?,
            symmetry: None,
            caps: vec![a_cap.clone()],
        },
        BoundDerivation {
            formula: "ABCA.BCAB.CBC".into(),
            target,
            premise: vars("BC"),
            steps: vec![
                DerivationStep::new("ABCA", 1, "7a <= 3(b+c)")?,
                DerivationStep::new("BCAB", 1, "7b <= 3(a+c)")?,
                DerivationStep::new("CBC", 1, "7c <= 3b")?,
            ],
            stated_sum: LinearInequality::parse("7a+7b+7c <= 3a+6b+6c")?,
            symmetry: None,
            caps: vec![a_cap],
        },
    ])
}

/// Runs every check, in a fixed order, and aggregates the verdicts.
pub fn verify_paper(config: &PaperConfig) -> Result<Report> {
    let b4 = Named::new("b4", &config.b4);
    let g2 = Named::new("g2", &config.g2);
    let g3 = Named::new("g3", &config.g3);
    let g6 = Named::new("g6", &config.g6);
    let m15 = Named::new("m15", &config.m15);
    let m6 = Named::new("m6", &config.m6);
    let fixed = FixedPoint::new(config.b4.clone(), 0)?.with_limits(config.limits);
    let b4_pairs = fixed.factor_set(2)?;
    let cap = config.node_cap;
    let mut checks = Vec::new();

    for g in [g2, g3, g6] {
        checks.push(check_synchronization(g, Some(&b4_pairs))?);
    }
    for (g, min_len) in [(g2, 5), (g3, 3), (g6, 2)] {
        checks.push(verify_conjugacy_avoidance(g, b4, min_len, config.limits)?);
    }
    let b4_family = SourceFamily::FixedPoint {
        name: "b4".into(),
        word: fixed.clone(),
    };
    checks.push(verify_formula_exclusion(
        g2,
        &[circular_formula(4)?],
        &VarBounds::uniform(1),
        &b4_family,
        cap,
    )?);

    let dejean5 = SourceFamily::FreeWords {
        alphabet: 5,
        spec: "5/4+".parse()?,
    };
    let SourceFamily::FreeWords { spec: source_spec, .. } = &dejean5 else {
        unreachable!()
    };

    checks.push(verify_image_freeness(
        m15,
        5,
        source_spec,
        &"97/75+,61".parse()?,
        None,
        cap,
    )?);
    let mut m15_exclusion = verify_formula_exclusion(
        m15,
        &[Formula::parse("ABCBA.CBABC")?],
        &VarBounds::parse("a+b<=60, b+c<=60")?,
        &dejean5,
        cap,
    )?;
    m15_exclusion.push_component(verify_bound_derivation(&m15_derivation()?)?);
    checks.push(m15_exclusion);

    checks.push(verify_image_freeness(
        m6,
        5,
        source_spec,
        &"13/10+,25".parse()?,
        None,
        cap,
    )?);
    let mut m6_exclusion = verify_formula_exclusion(
        m6,
        &[Formula::parse("ABCA.CABC.BCB")?, Formula::parse("ABCA.BCAB.CBC")?],
        &VarBounds::parse("b+c<=24, a<=22")?,
        &dejean5,
        cap,
    )?;
    for d in m6_derivations()? {
        m6_exclusion.push_component(verify_bound_derivation(&d)?);
    }
    checks.push(m6_exclusion);

    for (f, k) in [("AA", 2), ("ABA.BAB", 2), ("C3", 2), ("ABCA.CABC.BCB", 2)] {
        let formula = match f {
            "C3" => circular_formula(3)?,
            _ => Formula::parse(f)?,
        };
        let mut report = backtrack_avoidance(&formula, k, config.backtrack_cap, cap)?;
        // Report under the name used in the literature, not the canonical one.
        report.subject = f.to_string();
        checks.push(report.into_lower_bound_check());
    }
    checks.push(probe_circular_avoidance(b4, 300, 5, 4)?);
    Ok(Report::new(checks))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn named(name: &'static str) -> Morphism {
        builtin::morphism(name).unwrap()
    }

    #[test]
    fn verdicts_combine() {
        use Verdict::*;
        assert_eq!(Verdict::combine([Pass, Pass]), Pass);
        assert_eq!(Verdict::combine([Pass, Inconclusive]), Inconclusive);
        assert_eq!(Verdict::combine([Inconclusive, Fail, Pass]), Fail);
        assert_eq!(Verdict::combine([]), Pass);
        assert_eq!(
            (Pass.exit_code(), Fail.exit_code(), Inconclusive.exit_code()),
            (0, 1, 2)
        );
    }

    #[test]
    fn synchronization_of_g2() {
        let g2 = named("g2");
        let r = check_synchronization(Named::new("g2", &g2), None).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.evidence["prefix_len"].as_u64().unwrap() <= 6);
        assert!(r.evidence["suffix_len"].as_u64().unwrap() <= 12);
    }

    #[test]
    fn identical_images_are_not_synchronizing() {
        let m = Morphism::from_digit_images(&["01", "01"]).unwrap();
        let r = check_synchronization(Named::new("twin", &m), None).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        let r = check_synchronization(Named::new("b4", &named("b4")), None).unwrap();
        assert_eq!(r.evidence["prefix_len"], json!(2));
    }

    #[test]
    fn non_uniform_morphisms_are_rejected() {
        let m = Morphism::from_digit_images(&["0", "01"]).unwrap();
        assert!(matches!(
            check_synchronization(Named::new("x", &m), None),
            Err(Error::NotUniform)
        ));
    }

    #[test]
    fn class_range_end() {
        assert_eq!(direct_class_range_end(19), 55);
        assert_eq!(direct_class_range_end(4), 10);
        assert_eq!(direct_class_range_end(5), 13);
    }

    #[test]
    fn g3_avoids_long_classes() {
        let (g3, b4) = (named("g3"), named("b4"));
        let r =
            verify_conjugacy_avoidance(Named::new("g3", &g3), Named::new("b4", &b4), 3, Default::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{}", r.render_text());
        assert_eq!(r.params["direct_range"], json!([3, 10]));
        // Squares of letters give classes of length 2.
        let r =
            verify_conjugacy_avoidance(Named::new("g3", &g3), Named::new("b4", &b4), 2, Default::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn identity_image_negative_control() {
        let id = Morphism::identity(2);
        let r = verify_image_freeness(
            Named::new("id", &id),
            2,
            &FreenessSpec::square_free(),
            &"1+".parse().unwrap(),
            Some(3),
            None,
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.witnesses[0]["source_word"], json!("010"));
        assert_eq!(r.witnesses[0]["repetition"]["exponent"], json!("3/2"));
    }

    #[test]
    fn node_caps_make_checks_inconclusive() {
        let m6 = named("m6");
        let r = verify_image_freeness(
            Named::new("m6", &m6),
            5,
            &"5/4+".parse().unwrap(),
            &"13/10+,25".parse().unwrap(),
            None,
            Some(10),
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert_eq!(r.stats["words_enumerated"], json!(11));
    }

    #[test]
    fn parallel_walk_matches_sequential_enumeration() {
        let spec: FreenessSpec = "5/4+".parse().unwrap();
        let walked = walk_free_words(
            5,
            &spec,
            9,
            None,
            LeafCollector {
                source_len: 9,
                leaves: Vec::new(),
            },
        );
        let leaves: Vec<Vec<u8>> = walked.outputs.into_iter().flatten().collect();
        let mut expected = Vec::new();
        let report = crate::freeness::enumerate_free_words(5, &spec, 9, Default::default(), |w| {
            if w.len() == 9 {
                expected.push(w.to_vec());
            }
            std::ops::ControlFlow::Continue(())
        })
        .unwrap();
        assert_eq!(leaves, expected);
        assert_eq!(walked.nodes, report.nodes);
    }

    #[test]
    fn g2_has_no_unit_c4() {
        let (g2, b4) = (named("g2"), named("b4"));
        let family = SourceFamily::FixedPoint {
            name: "b4".into(),
            word: FixedPoint::new(b4, 0).unwrap(),
        };
        let r = verify_formula_exclusion(
            Named::new("g2", &g2),
            &[circular_formula(4).unwrap()],
            &VarBounds::uniform(1),
            &family,
            None,
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.evidence["window"], json!(5));
        // C1 = AA.AA collapses to the square AA, which binary words contain.
        let r = verify_formula_exclusion(
            Named::new("g2", &g2),
            &[circular_formula(1).unwrap()],
            &VarBounds::uniform(1),
            &family,
            None,
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn exclusion_needs_bounds() {
        let g2 = named("g2");
        let family = SourceFamily::FreeWords {
            alphabet: 4,
            spec: FreenessSpec::square_free(),
        };
        let r = verify_formula_exclusion(
            Named::new("g2", &g2),
            &[Formula::parse("ABA.BAB").unwrap()],
            &VarBounds::unbounded(),
            &family,
            None,
        );
        assert!(matches!(r, Err(Error::Unbounded(_))));
    }

    #[test]
    fn linear_inequalities() {
        let i = LinearInequality::parse("53a <= 22(2b+c)").unwrap();
        assert_eq!(i.lhs, [53, 0, 0]);
        assert_eq!(i.rhs, [0, 44, 22]);
        assert_eq!(i.to_string(), "53a <= 44b+22c");
        assert!(LinearInequality::parse("53a+106b+53c <= 44a+88b+44c")
            .unwrap()
            .unsatisfiable_for_positive());
        assert!(LinearInequality::parse("7a+7b+7c <= 3a+6b+6c")
            .unwrap()
            .unsatisfiable_for_positive());
        assert!(!LinearInequality::parse("7b <= 3c")
            .unwrap()
            .unsatisfiable_for_positive());
        assert!(LinearInequality::parse("7b <= ").is_err());
        assert!(LinearInequality::parse("7b < 3c").is_err());
    }

    #[test]
    fn exponent_forms() {
        let beta = Rational::new(97, 75).unwrap();
        // BAB with B = 1, A = 0: 75(a+2b) - 97(a+b) = -22a + 53b.
        assert_eq!(exponent_form(&[1, 0, 1], 1, beta).0, [-22, 53]);
        assert!(proportional(&[53, -22], &[106, -44]));
        assert!(!proportional(&[53, -22], &[-53, 22]));
    }

    #[test]
    fn certificates() {
        assert_eq!(infeasibility_certificate(&[vec![1, -1], vec![-1, 1]]), None);
        // 53b <= 22a, 53a <= 22(2b+c), 53c <= 22(a+2b) without BCB.
        let y = infeasibility_certificate(&[vec![-22, 53, 0], vec![53, -44, -22], vec![-22, -44, 53]]).unwrap();
        assert!(y.iter().all(|&c| c >= 0));
    }

    #[test]
    fn stated_derivations_check_out() {
        let r = verify_bound_derivation(&m15_derivation().unwrap()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{}", r.render_text());
        assert_eq!(r.evidence["steps_not_covered_by_premise"], json!(["BCB"]));
        for d in m6_derivations().unwrap() {
            let r = verify_bound_derivation(&d).unwrap();
            assert_eq!(r.verdict, Verdict::Pass, "{}", r.render_text());
        }
    }

    #[test]
    fn wrong_stated_step_fails() {
        let mut d = m15_derivation().unwrap();
        d.steps[0] = DerivationStep::new("BAB", 1, "53b <= 21a").unwrap();
        let r = verify_bound_derivation(&d).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn backtracking_small_cases() {
        let aa = Formula::parse("AA").unwrap();
        let r = backtrack_avoidance(&aa, 2, 100, None).unwrap();
        assert_eq!(
            (r.outcome, r.max_length, r.longest.as_str()),
            (BacktrackOutcome::Exhausted, 3, "010")
        );
        let r = backtrack_avoidance(&aa, 3, 100, None).unwrap();
        assert_eq!(r.outcome, BacktrackOutcome::ReachedCap);
        assert_eq!(r.max_length, 100);
        let r = backtrack_avoidance(&aa, 3, 100, Some(5)).unwrap();
        assert_eq!(r.outcome, BacktrackOutcome::NodeCapExceeded);
    }

    #[test]
    fn conjecture_explorer_small_cases() {
        let r = explore_conjecture(2, 2, 50, None).unwrap();
        assert_eq!(r.outcome, BacktrackOutcome::Exhausted);
        let r = explore_conjecture(6, 2, 60, None).unwrap();
        assert_eq!(r.outcome, BacktrackOutcome::ReachedCap);
    }

    #[test]
    fn circular_probe_on_b4() {
        let b4 = named("b4");
        let r = probe_circular_avoidance(Named::new("b4", &b4), 300, 5, 4).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{}", r.render_text());
        assert_eq!(r.evidence["prefix_len"], json!(512));
    }
}
