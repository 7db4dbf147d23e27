//! Formulas over variables `A..Z`: parsing, canonical form, circular
//! formulas, reversal, occurrence search and divisibility.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::index::{FactorIndex, FactorText, PlainWord};
use crate::words::{render_digits, Word};

pub const MAX_VARIABLES: usize = 26;

/// A formula variable; code 0 is `A`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable(pub u8);

impl Variable {
    pub fn from_char(c: char) -> Option<Variable> {
        let c = c.to_ascii_uppercase();
        c.is_ascii_uppercase().then(|| Variable(c as u8 - b'A'))
    }

    pub fn name(self) -> char {
        (b'A' + self.0) as char
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// A set of fragments in canonical form.
///
/// Canonical means: no fragment is a factor of another, fragments are
/// ordered longest first and then lexicographically, and among all
/// renamings of the variables the one with the least such list is used.
/// Variables are then named in order of first occurrence along the list,
/// and two formulas are equal exactly when one is a renaming of the other.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Formula {
    fragments: Vec<Vec<u8>>,
    variable_count: usize,
}

impl Formula {
    /// Parses `ABA.BAB`-style text. Input without dots is a pattern: its
    /// isolated variables become dots first.
    pub fn parse(text: &str) -> Result<Formula> {
        let text = text.trim();
        if text.is_empty() {
            return Err(Error::FormulaSyntax("formula has no fragments".into()));
        }
        let mut fragments = Vec::new();
        for part in text.split('.') {
            if part.is_empty() {
                return Err(Error::FormulaSyntax(format!("empty fragment in {text:?}")));
            }
            let frag = part
                .chars()
                .map(|c| match c {
                    'A'..='Z' => Ok(c as u8 - b'A'),
                    _ => Err(Error::FormulaSyntax(format!("invalid character {c:?}"))),
                })
                .collect::<Result<Vec<u8>>>()?;
            fragments.push(frag);
        }
        if fragments.len() == 1 {
            fragments = split_isolated(&fragments[0]);
        }
        Formula::from_fragments(fragments)
    }

    /// Canonicalizes raw fragments given as variable codes.
    pub fn from_fragments(fragments: Vec<Vec<u8>>) -> Result<Formula> {
        if fragments.is_empty() || fragments.iter().any(Vec::is_empty) {
            return Err(Error::FormulaSyntax("formula has no fragments".into()));
        }
        if fragments.iter().flatten().any(|&v| v as usize >= MAX_VARIABLES) {
            return Err(Error::FormulaSyntax(format!(
                "at most {MAX_VARIABLES} variables are supported"
            )));
        }
        let kept = drop_covered_fragments(fragments);
        let fragments = canonical_labelling(&kept);
        let variable_count = fragments.iter().flatten().map(|&v| v as usize + 1).max().unwrap_or(0);
        Ok(Formula {
            fragments,
            variable_count,
        })
    }

    pub fn fragments(&self) -> &[Vec<u8>] {
        &self.fragments
    }

    pub fn variable_count(&self) -> usize {
        self.variable_count
    }

    pub fn max_fragment_len(&self) -> usize {
        self.fragments.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Reverses every fragment and canonicalizes the result.
    pub fn reverse(&self) -> Formula {
        let reversed = self
            .fragments
            .iter()
            .map(|frag| frag.iter().rev().copied().collect())
            .collect();
        Formula::from_fragments(reversed).expect("reversal preserves validity")
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, frag) in self.fragments.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            f.write_str(&render_variables(frag))?;
        }
        Ok(())
    }
}

impl FromStr for Formula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Formula::parse(s)
    }
}

impl Serialize for Formula {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

pub fn render_variables(codes: &[u8]) -> String {
    codes.iter().map(|&v| Variable(v).name()).collect()
}

pub fn parse_formula(text: &str) -> Result<Formula> {
    Formula::parse(text)
}

pub fn reverse_formula(f: &Formula) -> Formula {
    f.reverse()
}

/// The circular formula on `t` variables: fragments `A_i .. A_{i+t}`,
/// indices modulo `t`.
pub fn circular_formula(t: usize) -> Result<Formula> {
    if t == 0 || t > MAX_VARIABLES {
        return Err(Error::InvalidArgument(format!(
            "circular formulas need 1..={MAX_VARIABLES} variables, got {t}"
        )));
    }
    let fragments = (0..t).map(|i| (i..=i + t).map(|j| (j % t) as u8).collect()).collect();
    Formula::from_fragments(fragments)
}

fn split_isolated(pattern: &[u8]) -> Vec<Vec<u8>> {
    let mut counts = [0usize; 256];
    for &v in pattern {
        counts[v as usize] += 1;
    }
    pattern
        .split(|&v| counts[v as usize] == 1)
        .filter(|frag| !frag.is_empty())
        .map(<[u8]>::to_vec)
        .collect()
}

fn is_factor(needle: &[u8], hay: &[u8]) -> bool {
    needle.len() <= hay.len() && hay.windows(needle.len()).any(|w| w == needle)
}

fn drop_covered_fragments(mut fragments: Vec<Vec<u8>>) -> Vec<Vec<u8>> {
    fragments.sort();
    fragments.dedup();
    let all = fragments.clone();
    fragments.retain(|frag| !all.iter().any(|other| other != frag && is_factor(frag, other)));
    fragments
}

fn fragment_order(a: &[u8], b: &[u8]) -> Ordering {
    b.len().cmp(&a.len()).then_with(|| a.cmp(b))
}

fn sequence_order(a: &[Vec<u8>], b: &[Vec<u8>]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match fragment_order(x, y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

/// The least renaming of `fragments`, listed longest first and then
/// lexicographically, compared fragment by fragment.
fn canonical_labelling(fragments: &[Vec<u8>]) -> Vec<Vec<u8>> {
    let mut labelling = Labelling {
        fragments,
        used: vec![false; fragments.len()],
        mapping: [None; MAX_VARIABLES],
        next: 0,
        out: Vec::with_capacity(fragments.len()),
        best: None,
    };
    labelling.extend();
    labelling.best.expect("at least one fragment")
}

/// Search for the least rendering over all variable renamings. Fragments
/// are placed longest first; among equally long ones only those rendering
/// least under the names given so far can come next, so the search only
/// branches on ties.
struct Labelling<'a> {
    fragments: &'a [Vec<u8>],
    used: Vec<bool>,
    mapping: [Option<u8>; MAX_VARIABLES],
    next: u8,
    out: Vec<Vec<u8>>,
    best: Option<Vec<Vec<u8>>>,
}

impl Labelling<'_> {
    /// `frag` under the current names, naming new variables in order.
    fn render(&self, frag: &[u8]) -> Vec<u8> {
        let mut fresh: Vec<u8> = Vec::new();
        frag.iter()
            .map(|&v| {
                self.mapping[v as usize].unwrap_or_else(|| {
                    let i = fresh.iter().position(|&u| u == v).unwrap_or_else(|| {
                        fresh.push(v);
                        fresh.len() - 1
                    });
                    self.next + i as u8
                })
            })
            .collect()
    }

    fn extend(&mut self) {
        if let Some(best) = &self.best {
            let k = self.out.len();
            if sequence_order(&self.out, &best[..k]) == Ordering::Greater {
                return;
            }
        }
        let Some(longest) = (0..self.fragments.len())
            .filter(|&i| !self.used[i])
            .map(|i| self.fragments[i].len())
            .max()
        else {
            if self
                .best
                .as_ref()
                .is_none_or(|b| sequence_order(&self.out, b) == Ordering::Less)
            {
                self.best = Some(self.out.clone());
            }
            return;
        };
        let candidates: Vec<(usize, Vec<u8>)> = (0..self.fragments.len())
            .filter(|&i| !self.used[i] && self.fragments[i].len() == longest)
            .map(|i| (i, self.render(&self.fragments[i])))
            .collect();
        let least = candidates
            .iter()
            .map(|(_, r)| r)
            .min()
            .expect("a fragment remains")
            .clone();
        for (i, rendered) in candidates {
            if rendered != least {
                continue;
            }
            let (saved, saved_next) = (self.mapping, self.next);
            for (&v, &name) in self.fragments[i].iter().zip(&rendered) {
                if self.mapping[v as usize].is_none() {
                    self.mapping[v as usize] = Some(name);
                    self.next += 1;
                }
            }
            self.used[i] = true;
            self.out.push(rendered);
            self.extend();
            self.out.pop();
            self.used[i] = false;
            self.mapping = saved;
            self.next = saved_next;
        }
    }
}

/// A cap on a sum of variable image lengths.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SumCap {
    pub vars: Vec<u8>,
    pub cap: usize,
}

/// Caps on the image lengths an occurrence may use.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VarBounds {
    all: Option<usize>,
    caps: BTreeMap<u8, usize>,
    sums: Vec<SumCap>,
}

impl VarBounds {
    pub fn unbounded() -> Self {
        VarBounds::default()
    }

    /// The same cap on every variable.
    pub fn uniform(cap: usize) -> Self {
        VarBounds {
            all: Some(cap.max(1)),
            ..VarBounds::default()
        }
    }

    pub fn with_cap(mut self, var: Variable, cap: usize) -> Self {
        self.caps.insert(var.0, cap.max(1));
        self
    }

    pub fn with_sum_cap(mut self, vars: &[Variable], cap: usize) -> Self {
        self.sums.push(SumCap {
            vars: vars.iter().map(|v| v.0).collect(),
            cap: cap.max(1),
        });
        self
    }

    /// Parses comma-separated constraints such as `a+b<=60, b+c<=60`,
    /// `a<=22` or `all<=1`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut bounds = VarBounds::default();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (lhs, rhs) = item
                .split_once("<=")
                .ok_or_else(|| Error::Parse(format!("expected `vars<=cap` in {item:?}")))?;
            let cap: usize = rhs
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("invalid cap in {item:?}")))?;
            if cap == 0 {
                return Err(Error::Parse(format!("caps must be at least 1 in {item:?}")));
            }
            let lhs = lhs.trim();
            if lhs.eq_ignore_ascii_case("all") {
                bounds.all = Some(cap);
                continue;
            }
            let vars = lhs
                .split('+')
                .map(|v| {
                    let mut chars = v.trim().chars();
                    match (chars.next().and_then(Variable::from_char), chars.next()) {
                        (Some(var), None) => Ok(var),
                        _ => Err(Error::Parse(format!("invalid variable {v:?}"))),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            bounds = match vars.as_slice() {
                [var] => bounds.with_cap(*var, cap),
                _ => bounds.with_sum_cap(&vars, cap),
            };
        }
        Ok(bounds)
    }

    /// Largest length `var` can take, accounting for sums (others take >= 1).
    pub fn effective_cap(&self, var: u8) -> Option<usize> {
        let from_sums = self
            .sums
            .iter()
            .filter(|s| s.vars.contains(&var))
            .map(|s| s.cap.saturating_sub(s.vars.len() - 1).max(1));
        self.all
            .into_iter()
            .chain(self.caps.get(&var).copied())
            .chain(from_sums)
            .min()
    }

    /// Whether partial lengths (unbound counted as 1) satisfy every sum cap.
    fn admits(&self, lengths: &[usize]) -> bool {
        self.sums.iter().all(|s| {
            let total: usize = s
                .vars
                .iter()
                .map(|&v| lengths.get(v as usize).copied().unwrap_or(1).max(1))
                .sum();
            total <= s.cap
        })
    }

    /// Largest image length of `fragment` under these bounds, or `None`
    /// when some variable of the fragment is uncapped.
    pub fn max_image_len(&self, fragment: &[u8]) -> Option<usize> {
        let mut mult: BTreeMap<u8, usize> = BTreeMap::new();
        for &v in fragment {
            *mult.entry(v).or_default() += 1;
        }
        let vars: Vec<(u8, usize, usize)> = mult
            .into_iter()
            .map(|(v, m)| self.effective_cap(v).map(|cap| (v, m, cap)))
            .collect::<Option<_>>()?;
        let width = vars.iter().map(|&(v, _, _)| v as usize + 1).max().unwrap_or(0);
        let width = width.max(
            self.sums
                .iter()
                .flat_map(|s| &s.vars)
                .map(|&v| v as usize + 1)
                .max()
                .unwrap_or(0),
        );
        let mut lengths = vec![0usize; width];
        let mut best = 0;
        self.maximize(&vars, 0, &mut lengths, 0, &mut best);
        Some(best)
    }

    fn maximize(&self, vars: &[(u8, usize, usize)], i: usize, lengths: &mut [usize], value: usize, best: &mut usize) {
        if i == vars.len() {
            *best = (*best).max(value);
            return;
        }
        let optimistic: usize = value + vars[i..].iter().map(|&(_, m, cap)| m * cap).sum::<usize>();
        if optimistic <= *best {
            return;
        }
        let (v, m, cap) = vars[i];
        for len in (1..=cap).rev() {
            lengths[v as usize] = len;
            if self.admits(lengths) {
                self.maximize(vars, i + 1, lengths, value + m * len, best);
            }
        }
        lengths[v as usize] = 0;
    }

    /// Longest fragment image of `f` under these bounds.
    pub fn window(&self, f: &Formula) -> Option<usize> {
        f.fragments()
            .iter()
            .map(|frag| self.max_image_len(frag))
            .try_fold(0, |acc, m| m.map(|m| acc.max(m)))
    }
}

impl fmt::Display for VarBounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some(all) = self.all {
            parts.push(format!("all<={all}"));
        }
        for s in &self.sums {
            let names: Vec<String> = s
                .vars
                .iter()
                .map(|&v| Variable(v).name().to_ascii_lowercase().to_string())
                .collect();
            parts.push(format!("{}<={}", names.join("+"), s.cap));
        }
        for (&v, cap) in &self.caps {
            parts.push(format!("{}<={cap}", Variable(v).name().to_ascii_lowercase()));
        }
        if parts.is_empty() {
            f.write_str("unbounded")
        } else {
            f.write_str(&parts.join(","))
        }
    }
}

impl Serialize for VarBounds {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

/// Where one fragment image was found.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FragmentLocation {
    pub fragment: usize,
    pub position: usize,
}

/// A non-erasing assignment of words to variables, with the position at
/// which each fragment image was found in the searched text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    images: Vec<Vec<u8>>,
    locations: Vec<FragmentLocation>,
}

impl Assignment {
    pub fn new(images: Vec<Vec<u8>>) -> Result<Self> {
        if images.iter().any(Vec::is_empty) {
            return Err(Error::InvalidArgument("assignments are non-erasing".into()));
        }
        Ok(Assignment {
            images,
            locations: Vec::new(),
        })
    }

    pub fn images(&self) -> &[Vec<u8>] {
        &self.images
    }

    pub fn image(&self, var: Variable) -> &[u8] {
        &self.images[var.0 as usize]
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.images.iter().map(Vec::len).collect()
    }

    pub fn locations(&self) -> &[FragmentLocation] {
        &self.locations
    }

    /// Image of a word over variables.
    pub fn apply(&self, vars: &[u8]) -> Vec<u8> {
        vars.iter()
            .flat_map(|&v| self.images[v as usize].iter().copied())
            .collect()
    }

    /// Checks independently that every fragment image is a factor of `text`.
    pub fn is_occurrence_in<T: FactorText + ?Sized>(&self, f: &Formula, text: &T) -> bool {
        self.images.len() >= f.variable_count()
            && self.images.iter().all(|im| !im.is_empty())
            && f.fragments()
                .iter()
                .all(|frag| text.locate(&self.apply(frag)).is_some())
    }

    /// Renders images as digit words: `A=01, B=1`.
    pub fn render_digits(&self) -> String {
        self.render_with(render_digits)
    }

    /// Renders images as variable words: `A=AB, B=C`.
    pub fn render_variables(&self) -> String {
        self.render_with(render_variables)
    }

    fn render_with(&self, render: fn(&[u8]) -> String) -> String {
        self.images
            .iter()
            .enumerate()
            .map(|(v, im)| format!("{}={}", Variable(v as u8), render(im)))
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// Composition `outer ∘ self`: substitute `outer` into every image.
    pub fn then(&self, outer: &Assignment) -> Assignment {
        Assignment {
            images: self.images.iter().map(|im| outer.apply(im)).collect(),
            locations: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Dir {
    Forward,
    Backward,
}

struct Search<'a, T: ?Sized> {
    formula: &'a Formula,
    text: &'a T,
    bounds: &'a VarBounds,
    order: Vec<usize>,
    caps: Vec<usize>,
    lengths: Vec<usize>,
    binding: Vec<Option<usize>>,
    locations: Vec<FragmentLocation>,
    suffix_end: Option<usize>,
    /// Partial bindings already shown to admit no completion, keyed by depth.
    dead: HashSet<(usize, Vec<u8>)>,
}

impl<'a, T: FactorText + ?Sized> Search<'a, T> {
    fn new(formula: &'a Formula, text: &'a T, bounds: &'a VarBounds, order: Vec<usize>) -> Self {
        let n = formula.variable_count();
        let longest = text.longest_carrier();
        let caps = (0..n as u8)
            .map(|v| bounds.effective_cap(v).map_or(longest, |c| c.min(longest)))
            .collect();
        Search {
            formula,
            text,
            bounds,
            order,
            caps,
            lengths: vec![0; n],
            binding: vec![None; n],
            locations: Vec::new(),
            suffix_end: None,
            dead: HashSet::new(),
        }
    }

    fn image(&self, var: u8) -> &'a [u8] {
        let start = self.binding[var as usize].expect("bound variable");
        &self.text.text()[start..start + self.lengths[var as usize]]
    }

    fn assignment(&self) -> Assignment {
        let images = (0..self.formula.variable_count() as u8)
            .map(|v| self.image(v).to_vec())
            .collect();
        let mut locations = self.locations.clone();
        locations.sort_by_key(|l| l.fragment);
        Assignment { images, locations }
    }

    fn solve(&mut self, k: usize) -> Option<Assignment> {
        if k == self.order.len() {
            return Some(self.assignment());
        }
        if k == 0 {
            return self.place(k);
        }
        // Completion depends only on the images bound so far.
        let mut key = Vec::new();
        for v in 0..self.formula.variable_count() as u8 {
            if self.binding[v as usize].is_some() {
                key.push(v);
                key.extend_from_slice(&(self.lengths[v as usize] as u32).to_le_bytes());
                key.extend_from_slice(self.image(v));
            }
        }
        let key = (k, key);
        if self.dead.contains(&key) {
            return None;
        }
        let found = self.place(k);
        if found.is_none() {
            self.dead.insert(key);
        }
        found
    }

    fn place(&mut self, k: usize) -> Option<Assignment> {
        let fi = self.order[k];
        let frag: &'a [u8] = &self.formula.fragments[fi];
        if k == 0 {
            if let Some(end) = self.suffix_end {
                let steps: Vec<(u8, Dir)> = frag.iter().rev().map(|&v| (v, Dir::Backward)).collect();
                return self.step(k, fi, &steps, 0, end, end);
            }
        }
        let bound: Vec<bool> = frag.iter().map(|&v| self.binding[v as usize].is_some()).collect();
        if bound.iter().all(|&b| b) {
            let image: Vec<u8> = frag.iter().flat_map(|&v| self.image(v).iter().copied()).collect();
            let position = self.text.locate(&image)?;
            self.locations.push(FragmentLocation { fragment: fi, position });
            let found = self.solve(k + 1);
            self.locations.pop();
            return found;
        }
        if bound.iter().any(|&b| b) {
            // Anchor on the longest run of already bound variables.
            let (mut best, mut i) = ((0, 0), 0);
            while i < frag.len() {
                if !bound[i] {
                    i += 1;
                    continue;
                }
                let start = i;
                while i < frag.len() && bound[i] {
                    i += 1;
                }
                let len: usize = frag[start..i].iter().map(|&v| self.lengths[v as usize]).sum();
                let best_len: usize = frag[best.0..best.1].iter().map(|&v| self.lengths[v as usize]).sum();
                if len > best_len {
                    best = (start, i);
                }
            }
            let (lo, hi) = best;
            let run: Vec<u8> = frag[lo..hi]
                .iter()
                .flat_map(|&v| self.image(v).iter().copied())
                .collect();
            let steps: Vec<(u8, Dir)> = frag[hi..]
                .iter()
                .map(|&v| (v, Dir::Forward))
                .chain(frag[..lo].iter().rev().map(|&v| (v, Dir::Backward)))
                .collect();
            let occurrences = self.text.occurrences(&run);
            for &pos in occurrences.iter() {
                let pos = pos as usize;
                if let Some(found) = self.step(k, fi, &steps, 0, pos + run.len(), pos) {
                    return Some(found);
                }
            }
            return None;
        }
        let steps: Vec<(u8, Dir)> = frag.iter().map(|&v| (v, Dir::Forward)).collect();
        let anchors = self.text.anchors();
        for &pos in anchors.iter() {
            let pos = pos as usize;
            if let Some(found) = self.step(k, fi, &steps, 0, pos, pos) {
                return Some(found);
            }
        }
        None
    }

    /// Letters still needed by steps after `idx` in direction `dir`.
    fn reserved(&self, steps: &[(u8, Dir)], idx: usize, dir: Dir) -> usize {
        steps[idx + 1..]
            .iter()
            .filter(|(_, d)| *d == dir)
            .map(|&(v, _)| self.lengths[v as usize].max(1))
            .sum()
    }

    fn step(
        &mut self,
        k: usize,
        fi: usize,
        steps: &[(u8, Dir)],
        idx: usize,
        fwd: usize,
        bwd: usize,
    ) -> Option<Assignment> {
        if idx == steps.len() {
            self.locations.push(FragmentLocation {
                fragment: fi,
                position: bwd,
            });
            let found = self.solve(k + 1);
            self.locations.pop();
            return found;
        }
        let (var, dir) = steps[idx];
        let v = var as usize;
        let (start, end) = self.text.carrier_bounds(bwd);
        let text = self.text.text();
        if let Some(src) = self.binding[v] {
            let len = self.lengths[v];
            return match dir {
                Dir::Forward if fwd + len <= end && text[fwd..fwd + len] == text[src..src + len] => {
                    self.step(k, fi, steps, idx + 1, fwd + len, bwd)
                }
                Dir::Backward if bwd >= start + len && text[bwd - len..bwd] == text[src..src + len] => {
                    self.step(k, fi, steps, idx + 1, fwd, bwd - len)
                }
                _ => None,
            };
        }
        let room = match dir {
            Dir::Forward => end - fwd,
            Dir::Backward => bwd - start,
        };
        let max_len = room.saturating_sub(self.reserved(steps, idx, dir)).min(self.caps[v]);
        for len in 1..=max_len {
            self.lengths[v] = len;
            if !self.bounds.admits(&self.lengths) {
                break;
            }
            let found = match dir {
                Dir::Forward => {
                    self.binding[v] = Some(fwd);
                    self.step(k, fi, steps, idx + 1, fwd + len, bwd)
                }
                Dir::Backward => {
                    self.binding[v] = Some(bwd - len);
                    self.step(k, fi, steps, idx + 1, fwd, bwd - len)
                }
            };
            if found.is_some() {
                return found;
            }
        }
        self.binding[v] = None;
        self.lengths[v] = 0;
        None
    }
}

fn fragment_search_order(f: &Formula) -> Vec<usize> {
    let mut order: Vec<usize> = (0..f.fragments().len()).collect();
    order.sort_by_key(|&i| f.fragments()[i].len());
    order
}

fn check_searchable<T: FactorText + ?Sized>(f: &Formula, text: &T, bounds: &VarBounds) -> Result<()> {
    if let Some(window) = text.complete_up_to() {
        let needed = bounds.window(f).ok_or_else(|| {
            Error::Unbounded(format!(
                "{f} needs a cap on every variable to be searched in a factor family"
            ))
        })?;
        if needed > window {
            return Err(Error::IncompleteFactorSet(needed));
        }
    }
    Ok(())
}

/// Searches for an occurrence of `f` whose fragment images are factors of
/// the carriers behind `text`, with image lengths within `bounds`.
///
/// Fragments are matched shortest first. Each fragment image only has to be
/// a factor somewhere in the family; fragments need not co-occur.
pub fn find_occurrence<T: FactorText + ?Sized>(
    f: &Formula,
    text: &T,
    bounds: &VarBounds,
) -> Result<Option<Assignment>> {
    check_searchable(f, text, bounds)?;
    Ok(Search::new(f, text, bounds, fragment_search_order(f)).solve(0))
}

/// Occurrence search in a finite word.
pub fn find_occurrence_in_word(f: &Formula, w: &Word, bounds: &VarBounds) -> Result<Option<Assignment>> {
    find_occurrence(f, &FactorIndex::from_word(w.letters()), bounds)
}

/// Searches for an occurrence in which some fragment image is a suffix of
/// `word`. Extending an avoiding word by one letter creates an occurrence
/// exactly when this finds one.
pub fn find_occurrence_at_end(f: &Formula, word: &[u8], bounds: &VarBounds) -> Option<Assignment> {
    let text = PlainWord(word);
    let base = fragment_search_order(f);
    base.iter().find_map(|&first| {
        let order: Vec<usize> = std::iter::once(first)
            .chain(base.iter().copied().filter(|&i| i != first))
            .collect();
        let mut search = Search::new(f, &text, bounds, order);
        search.suffix_end = Some(word.len());
        search.solve(0)
    })
}

/// Whether `small` divides `big`: some non-erasing substitution maps every
/// fragment of `small` to a factor of a fragment of `big`.
///
/// The witness maps variables of `small` to words over variables of `big`.
pub fn divides(small: &Formula, big: &Formula) -> Option<Assignment> {
    let index = FactorIndex::from_words(big.fragments().to_vec());
    let bounds = VarBounds::uniform(big.max_fragment_len());
    find_occurrence(small, &index, &bounds).expect("finite carriers are always searchable")
}

/// Variable-to-image map keyed by name, for reports.
pub fn named_images(a: &Assignment, render: fn(&[u8]) -> String) -> BTreeMap<String, String> {
    a.images()
        .iter()
        .enumerate()
        .map(|(v, im)| (Variable(v as u8).to_string(), render(im)))
        .collect()
}

/// Occurrence counts of each variable across a formula's fragments.
pub fn variable_multiplicities(f: &Formula) -> HashMap<u8, usize> {
    let mut counts = HashMap::new();
    for &v in f.fragments().iter().flatten() {
        *counts.entry(v).or_default() += 1;
    }
    counts
}
