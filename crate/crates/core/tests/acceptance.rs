//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILING` are claims the implementation refutes
//! with re-validated witnesses. They print FAIL and do not fail the target;
//! if one of them starts passing, or any other criterion fails, the target
//! exits non-zero.

mod common;

use std::ops::ControlFlow;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use avoidance::builtin;
use avoidance::freeness::EnumerationOptions;
use avoidance::verify::{
    backtrack_avoidance, check_synchronization, probe_circular_avoidance, verify_conjugacy_avoidance,
    verify_formula_exclusion, verify_image_freeness, verify_paper, BacktrackOutcome, CheckReport, LinearInequality,
    Named, PaperConfig, SourceFamily, Verdict,
};
use avoidance::words::StabilizationLimits;
use avoidance::{
    circular_formula, enumerate_free_words, find_forbidden_repetition, find_occurrence, parse_formula, FactorIndex,
    FactorSource, FixedPoint, Formula, FreenessSpec, Morphism, VarBounds,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

/// Wall-clock limits, in seconds.
const CLASSES_G2_LIMIT: u64 = 5 * 60;
const CLASSES_SMALL_LIMIT: u64 = 60;
const FREENESS_M15_LIMIT: u64 = 10 * 60;
const AGGREGATE_LIMIT: u64 = 30 * 60;

/// Synchronization goldens: (morphism, prefix length, suffix length).
const SYNC_GOLDENS: [(&str, usize, usize); 5] =
    [("g2", 6, 12), ("g3", 2, 2), ("g6", 3, 2), ("m15", 6, 8), ("m6", 4, 2)];

/// Longest binary words avoiding each formula, found by exhaustion.
const BINARY_MAXIMA: [(&str, usize); 4] = [("AA", 3), ("ABA.BAB", 8), ("C3", 44), ("ABCA.CABC.BCB", 16)];

const RANDOM_WORDS: usize = 10_000;
const RANDOM_SEED: u64 = 11;

/// Criteria refuted by witnesses; see the decisions ledger and README.
const KNOWN_FAILING: [u32; 3] = [4, 6, 11];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn m(name: &str) -> Morphism {
    builtin::morphism(name).expect("built-in morphism")
}

fn spec(s: &str) -> FreenessSpec {
    s.parse().expect("valid spec")
}

fn formula(s: &str) -> Formula {
    match s {
        "C3" => circular_formula(3).expect("t >= 1"),
        _ => parse_formula(s).expect("valid formula"),
    }
}

fn within(start: Instant, limit: u64) -> bool {
    start.elapsed() < Duration::from_secs(limit)
}

fn repetition_witness(r: &CheckReport) -> String {
    r.witnesses
        .first()
        .map(|w| {
            let rep = &w["repetition"];
            format!(
                "; source {} gives exponent {} at period {}",
                w["source_word"], rep["exponent"], rep["period"]
            )
        })
        .unwrap_or_default()
}

fn classes(name: &str, min_len: usize, range_end: usize, limit: u64) -> Outcome {
    let (g, b4) = (m(name), m("b4"));
    let start = Instant::now();
    let r = verify_conjugacy_avoidance(
        Named::new(name, &g),
        Named::new("b4", &b4),
        min_len,
        StabilizationLimits::default(),
    )
    .expect("class check runs");
    let secs = start.elapsed().as_secs_f64();
    let range_ok = r.params["direct_range"] == json!([min_len, range_end]);
    outcome(
        r.verdict == Verdict::Pass && range_ok && within(start, limit),
        format!(
            "{name}: {} over {min_len}..{range_end} in {secs:.1}s",
            r.verdict.label()
        ),
    )
}

fn criterion_1() -> Outcome {
    classes("g2", 5, 55, CLASSES_G2_LIMIT)
}

fn criterion_2() -> Outcome {
    let a = classes("g3", 3, 10, CLASSES_SMALL_LIMIT);
    let b = classes("g6", 2, 13, CLASSES_SMALL_LIMIT);
    outcome(a.pass && b.pass, format!("{}; {}", a.detail, b.detail))
}

fn criterion_3() -> Outcome {
    let source = FixedPoint::new(m("b4"), 0).expect("b4 is prolongable");
    let pairs = source.factor_set(2).expect("b4 pairs");
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, prefix, suffix) in SYNC_GOLDENS {
        let g = m(name);
        let domain = name.starts_with('g').then_some(&pairs);
        let r = check_synchronization(Named::new(name, &g), domain).expect("sync check runs");
        let got = (r.evidence["prefix_len"].clone(), r.evidence["suffix_len"].clone());
        let ok = r.verdict == Verdict::Pass && got == (json!(prefix), json!(suffix));
        pass &= ok;
        parts.push(format!("{name} {}/{}", got.0, got.1));
    }
    outcome(pass, parts.join(", "))
}

fn freeness(name: &str, target: &str, bound: u64) -> (Outcome, CheckReport) {
    let g = m(name);
    let start = Instant::now();
    let r = verify_image_freeness(Named::new(name, &g), 5, &spec("5/4+"), &spec(target), None, None)
        .expect("freeness check runs");
    let secs = start.elapsed().as_secs_f64();
    let bound_ok = r.evidence["lemma_bound"] == json!(bound);
    let detail = format!(
        "{name} into {target}: {} after {} words, bound {} in {secs:.1}s{}",
        r.verdict.label(),
        r.stats["words_enumerated"],
        r.evidence["lemma_bound"],
        repetition_witness(&r)
    );
    (outcome(r.verdict == Verdict::Pass && bound_ok, detail), r)
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let (o, _) = freeness("m15", "97/75+,61", 60);
    outcome(o.pass && within(start, FREENESS_M15_LIMIT), o.detail)
}

fn criterion_5() -> Outcome {
    freeness("m6", "13/10+,25", 52).0
}

fn criterion_6() -> Outcome {
    let dejean5 = SourceFamily::FreeWords {
        alphabet: 5,
        spec: spec("5/4+"),
    };
    let b4 = FixedPoint::new(m("b4"), 0).expect("b4 is prolongable");
    let b4_family = SourceFamily::FixedPoint {
        name: "b4".into(),
        word: b4,
    };
    let cases: [(&str, Vec<&str>, &str, &SourceFamily); 3] = [
        ("m15", vec!["ABCBA.CBABC"], "a+b<=60, b+c<=60", &dejean5),
        ("m6", vec!["ABCA.CABC.BCB", "ABCA.BCAB.CBC"], "b+c<=24, a<=22", &dejean5),
        ("g2", vec!["C4"], "all<=1", &b4_family),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, formulas, bounds, family) in cases {
        let g = m(name);
        let fs: Vec<Formula> = formulas
            .iter()
            .map(|f| match *f {
                "C4" => circular_formula(4).expect("t >= 1"),
                _ => formula(f),
            })
            .collect();
        let bounds = VarBounds::parse(bounds).expect("valid bounds");
        let r = verify_formula_exclusion(Named::new(name, &g), &fs, &bounds, family, None).expect("exclusion runs");
        pass &= r.verdict == Verdict::Pass;
        let single = r
            .witnesses
            .first()
            .and_then(|w| w["single_source_word"].as_str())
            .map(|s| format!(" in the image of {s}"))
            .unwrap_or_default();
        let assignment = r
            .witnesses
            .first()
            .map(|w| format!(" {} with {}", w["formula"], w["assignment"]))
            .unwrap_or_default();
        parts.push(format!("{name}: {}{assignment}{single}", r.verdict.label()));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_7() -> Outcome {
    let sums = ["53a+106b+53c <= 44a+88b+44c", "7a+7b+7c <= 3a+6b+6c"];
    let results: Vec<bool> = sums
        .iter()
        .map(|s| {
            LinearInequality::parse(s)
                .expect("valid inequality")
                .unsatisfiable_for_positive()
        })
        .collect();
    outcome(
        results.iter().all(|&b| b),
        format!("unsatisfiable for positive a, b, c: {results:?}"),
    )
}

fn criterion_8() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, expected) in BINARY_MAXIMA {
        let r = backtrack_avoidance(&formula(name), 2, 1000, None).expect("backtracking runs");
        pass &= r.outcome == BacktrackOutcome::Exhausted && r.max_length == expected;
        parts.push(format!("{name}/2 longest {}", r.max_length));
    }
    let r = backtrack_avoidance(&formula("AA"), 3, 100, None).expect("backtracking runs");
    pass &= r.outcome == BacktrackOutcome::ReachedCap;
    parts.push(format!("AA/3 reached {}", r.max_length));
    outcome(pass, parts.join(", "))
}

fn criterion_9() -> Outcome {
    let specs: Vec<FreenessSpec> = ["2", "2+", "3/2+", "7/4", "7/3+", "5/4+,2"]
        .iter()
        .map(|s| spec(s))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(RANDOM_SEED);
    let mut freeness_disagreements = 0;
    for trial in 0..RANDOM_WORDS {
        let alphabet = if trial % 2 == 0 { 2 } else { 3 };
        let len = rng.gen_range(0..=30);
        let w: Vec<u8> = (0..len).map(|_| rng.gen_range(0..alphabet)).collect();
        let s = &specs[trial % specs.len()];
        if find_forbidden_repetition(&w, s).is_some() != common::naive_has_forbidden(&w, s) {
            freeness_disagreements += 1;
        }
    }
    let unbounded = VarBounds::unbounded();
    let mut occurrence_disagreements = 0;
    for name in ["AA", "ABA.BAB", "C3"] {
        let f = formula(name);
        for len in 1..=12 {
            for w in common::all_words(2, len) {
                let found = find_occurrence(&f, &FactorIndex::from_word(&w), &unbounded).expect("finite word");
                if found.is_some() != common::naive_occurs(&f, &w) {
                    occurrence_disagreements += 1;
                }
            }
        }
    }
    // Enumeration is exercised against the same scan.
    let mut enumeration_disagreements = 0;
    let s = spec("7/4+");
    let report = enumerate_free_words(3, &s, 8, EnumerationOptions::default(), |w| {
        if common::naive_has_forbidden(w, &s) {
            enumeration_disagreements += 1;
        }
        ControlFlow::Continue(())
    })
    .expect("enumeration runs");
    let brute = common::all_words(3, 8)
        .iter()
        .filter(|w| !common::naive_has_forbidden(w, &s))
        .count() as u64;
    if report.counts[8] != brute {
        enumeration_disagreements += 1;
    }
    outcome(
        freeness_disagreements + occurrence_disagreements + enumeration_disagreements == 0,
        format!(
            "{RANDOM_WORDS} random words: {freeness_disagreements} freeness disagreements; \
             all binary words up to 12: {occurrence_disagreements} occurrence disagreements; \
             {enumeration_disagreements} enumeration disagreements"
        ),
    )
}

fn criterion_10() -> Outcome {
    let b4 = m("b4");
    let r = probe_circular_avoidance(Named::new("b4", &b4), 300, 5, 4).expect("probe runs");
    let prefix = r.evidence["prefix_len"].as_u64().unwrap_or(0);
    outcome(
        r.verdict == Verdict::Pass && prefix >= 300,
        format!(
            "prefix of length {prefix}, C1..C5, images up to 4: {}",
            r.verdict.label()
        ),
    )
}

fn criterion_11() -> Outcome {
    let start = Instant::now();
    let first = verify_paper(&PaperConfig::default()).expect("aggregate runs");
    let second = verify_paper(&PaperConfig::default()).expect("aggregate runs");
    let secs = start.elapsed().as_secs_f64() / 2.0;
    let stable = first.to_json() == second.to_json();
    let golden = concat!(env!("CARGO_MANIFEST_DIR"), "/../cli/tests/golden/verify_paper.json");
    let matches_golden = std::fs::read_to_string(golden).is_ok_and(|g| g == first.to_json());
    let failing: Vec<&str> = first
        .checks
        .iter()
        .filter(|c| c.verdict != Verdict::Pass)
        .map(|c| c.name.as_str())
        .collect();
    outcome(
        first.verdict == Verdict::Pass && stable && matches_golden && within(start, 2 * AGGREGATE_LIMIT),
        format!(
            "{} in {secs:.1}s per run; byte-stable {stable}; matches golden {matches_golden}; not passing {failing:?}",
            first.verdict.label()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, fn() -> Outcome); 11] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
        (11, criterion_11),
    ];
    let mut unexpected = Vec::new();
    for (n, run) in criteria {
        let o = run();
        let known = KNOWN_FAILING.contains(&n);
        let note = match (o.pass, known) {
            (false, true) => " [known failure]",
            (true, true) => " [expected to fail: update KNOWN_FAILING]",
            _ => "",
        };
        println!(
            "criterion {n:>2}: {}{note}  {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if o.pass == known {
            unexpected.push(n);
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: results as recorded");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected results for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
