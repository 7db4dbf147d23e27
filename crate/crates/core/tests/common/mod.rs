//! Independent brute-force oracles shared by the integration tests.
//!
//! Nothing here calls into the search code under test: occurrences are found
//! by enumerating images, repetitions by scanning every factor and period.

#![allow(dead_code)]

use std::collections::HashSet;

use avoidance::{Formula, FreenessSpec};

/// Every word of length `len` over `{0..alphabet}`, in lexicographic order.
pub fn all_words(alphabet: u8, len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                (0..alphabet).map(move |a| {
                    let mut v = w.clone();
                    v.push(a);
                    v
                })
            })
            .collect();
    }
    out
}

fn has_period(f: &[u8], p: usize) -> bool {
    (p..f.len()).all(|i| f[i] == f[i - p])
}

/// Whether some factor of `w` is a repetition forbidden by `spec`, found by
/// trying every factor against every period.
pub fn naive_has_forbidden(w: &[u8], spec: &FreenessSpec) -> bool {
    let (num, den) = (spec.threshold().numer() as usize, spec.threshold().denom() as usize);
    for i in 0..w.len() {
        for j in i + 1..=w.len() {
            let len = j - i;
            for p in spec.min_period().max(1)..=len {
                let too_long = if spec.strict() {
                    len * den > num * p
                } else {
                    len * den >= num * p
                };
                if too_long && has_period(&w[i..j], p) {
                    return true;
                }
            }
        }
    }
    false
}

fn factors(carriers: &[&[u8]]) -> Vec<HashSet<Vec<u8>>> {
    let longest = carriers.iter().map(|w| w.len()).max().unwrap_or(0);
    let mut by_len = vec![HashSet::new(); longest + 1];
    for w in carriers {
        for i in 0..w.len() {
            for j in i + 1..=w.len() {
                by_len[j - i].insert(w[i..j].to_vec());
            }
        }
    }
    by_len
}

fn is_factor(carriers: &[&[u8]], u: &[u8]) -> bool {
    carriers
        .iter()
        .any(|w| u.len() <= w.len() && w.windows(u.len()).any(|x| x == u))
}

/// Whether `f` occurs in `w`: every assignment of factors of `w` to the
/// variables is tried, pruned only by total length.
pub fn naive_occurs(f: &Formula, w: &[u8]) -> bool {
    naive_occurs_in_union(f, &[w])
}

/// Whether every fragment image is a factor of at least one carrier.
pub fn naive_occurs_in_union(f: &Formula, carriers: &[&[u8]]) -> bool {
    let by_len = factors(carriers);
    let mut images: Vec<Vec<u8>> = vec![Vec::new(); f.variable_count()];
    assign(f, carriers, &by_len, &mut images, 0)
}

fn assign(f: &Formula, carriers: &[&[u8]], by_len: &[HashSet<Vec<u8>>], images: &mut Vec<Vec<u8>>, v: usize) -> bool {
    if v == images.len() {
        return f.fragments().iter().all(|frag| {
            let image: Vec<u8> = frag.iter().flat_map(|&x| images[x as usize].iter().copied()).collect();
            is_factor(carriers, &image)
        });
    }
    let longest = by_len.len() - 1;
    for len in 1..=longest {
        let fits = f.fragments().iter().all(|frag| {
            frag.iter()
                .map(|&x| match (x as usize).cmp(&v) {
                    std::cmp::Ordering::Less => images[x as usize].len(),
                    std::cmp::Ordering::Equal => len,
                    std::cmp::Ordering::Greater => 1,
                })
                .sum::<usize>()
                <= longest
        });
        if !fits {
            break;
        }
        let mut candidates: Vec<&Vec<u8>> = by_len[len].iter().collect();
        candidates.sort();
        for u in candidates {
            images[v] = u.clone();
            if assign(f, carriers, by_len, images, v + 1) {
                return true;
            }
        }
    }
    images[v].clear();
    false
}

/// Length of the longest word over `{0..alphabet}` avoiding `f`, level by
/// level; `None` if some word of length `limit` avoids it.
pub fn longest_avoiding(f: &Formula, alphabet: u8, limit: usize) -> Option<usize> {
    let mut level = vec![Vec::new()];
    for len in 1..=limit {
        let next: Vec<Vec<u8>> = level
            .iter()
            .flat_map(|w: &Vec<u8>| {
                (0..alphabet).map(move |a| {
                    let mut v = w.clone();
                    v.push(a);
                    v
                })
            })
            .filter(|w| !naive_occurs(f, w))
            .collect();
        if next.is_empty() {
            return Some(len - 1);
        }
        level = next;
    }
    None
}
