//! Algebraic invariants over generated inputs.

mod common;

use avoidance::freeness::is_free;
use avoidance::{
    conjugates, divides, find_forbidden_repetition, find_occurrence, last_position_check, reverse_formula, FactorIndex,
    Formula, FreenessSpec, Morphism, VarBounds, Word,
};
use proptest::prelude::*;

fn word(max_len: usize, alphabet: u8) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0..alphabet, 0..=max_len)
}

fn nonempty_word(max_len: usize, alphabet: u8) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0..alphabet, 1..=max_len)
}

/// Formulas over at most three variables with up to three short fragments.
fn formula() -> impl Strategy<Value = Formula> {
    prop::collection::vec(prop::collection::vec(0u8..3, 1..=4), 1..=3)
        .prop_filter_map("variables in use", |frags| Formula::from_fragments(frags).ok())
}

fn spec() -> impl Strategy<Value = FreenessSpec> {
    (2i64..=7, 1i64..=4, any::<bool>(), 1usize..=3).prop_filter_map("threshold above 1", |(n, d, strict, p)| {
        let text = format!("{}/{}{},{}", n + d, d, if strict { "+" } else { "" }, p);
        text.parse().ok()
    })
}

fn rev(w: &[u8]) -> Vec<u8> {
    w.iter().rev().copied().collect()
}

proptest! {
    #[test]
    fn class_members_share_the_class(letters in nonempty_word(12, 3)) {
        let w = Word::new(letters.clone(), 3).unwrap();
        let class = conjugates(&w).unwrap();
        prop_assert_eq!(letters.len() % class.size(), 0);
        let members = class.members();
        prop_assert!(members.iter().any(|m| m.letters() == letters.as_slice()));
        for m in &members {
            prop_assert_eq!(&conjugates(m).unwrap(), &class);
            prop_assert!(class.representative().letters() <= m.letters());
        }
    }

    #[test]
    fn morphisms_are_homomorphisms(
        images in prop::collection::vec(nonempty_word(5, 4), 4),
        u in word(10, 4),
        v in word(10, 4),
    ) {
        let m = Morphism::new(images).unwrap();
        let mut uv = u.clone();
        uv.extend_from_slice(&v);
        let mut expected = m.apply_slice(&u).unwrap();
        expected.extend(m.apply_slice(&v).unwrap());
        prop_assert_eq!(m.apply_slice(&uv).unwrap(), expected);
    }

    #[test]
    fn canonical_form_is_a_fixed_point(f in formula()) {
        // Dotless text is read as a pattern, so a lone fragment round-trips
        // only when none of its variables is isolated.
        let lone = f.fragments().len() == 1;
        prop_assume!(!lone || (0..f.variable_count() as u8).all(|v| f.fragments()[0].iter().filter(|&&x| x == v).count() >= 2));
        let again = Formula::parse(&f.to_string()).unwrap();
        prop_assert_eq!(&again, &f);
        prop_assert_eq!(again.to_string(), f.to_string());
    }

    #[test]
    fn renaming_variables_gives_the_same_formula(f in formula(), perm in Just(vec![0u8, 1, 2]).prop_shuffle()) {
        let renamed: Vec<Vec<u8>> = f
            .fragments()
            .iter()
            .map(|frag| frag.iter().map(|&v| perm[v as usize]).collect())
            .collect();
        prop_assert_eq!(Formula::from_fragments(renamed).unwrap(), f);
    }

    #[test]
    fn reversal_is_an_involution(f in formula()) {
        prop_assert_eq!(reverse_formula(&reverse_formula(&f)), f);
    }

    #[test]
    fn every_formula_divides_itself(f in formula()) {
        prop_assert!(divides(&f, &f).is_some());
    }

    #[test]
    fn occurrences_mirror_under_reversal(f in formula(), w in word(10, 2)) {
        let bounds = VarBounds::unbounded();
        let forward = find_occurrence(&f, &FactorIndex::from_word(&w), &bounds).unwrap();
        let mirrored = find_occurrence(&reverse_formula(&f), &FactorIndex::from_word(&rev(&w)), &bounds).unwrap();
        prop_assert_eq!(forward.is_some(), mirrored.is_some());
        prop_assert_eq!(forward.is_some(), common::naive_occurs(&f, &w));
    }

    #[test]
    fn freeness_is_factor_closed_and_mirror_symmetric(w in word(24, 3), s in spec()) {
        let free = is_free(&w, &s);
        prop_assert_eq!(free, is_free(&rev(&w), &s));
        prop_assert_eq!(free, !common::naive_has_forbidden(&w, &s));
        if free {
            for i in 0..w.len() {
                prop_assert!(is_free(&w[i..], &s));
                prop_assert!(is_free(&w[..i], &s));
            }
        } else {
            let r = find_forbidden_repetition(&w, &s).unwrap();
            prop_assert!(r.holds_in(&w));
            prop_assert!(s.forbids(r.length, r.period));
        }
    }

    #[test]
    fn last_position_check_sees_new_repetitions(w in nonempty_word(24, 3), s in spec()) {
        let prefix_free = is_free(&w[..w.len() - 1], &s);
        if prefix_free {
            let r = last_position_check(&w, &s);
            prop_assert_eq!(r.is_some(), !is_free(&w, &s));
            if let Some(r) = r {
                prop_assert_eq!(r.start + r.length, w.len());
            }
        }
    }
}
