use fracdelta::analysis::{classify, OrbitClassification};
use fracdelta::map::{branch_of, delta, MapParams, NumericMode};
use fracdelta::prover::next_bound;
use fracdelta::{affine_from_word, BranchWord, Rational};
use proptest::prelude::*;

fn seed() -> impl Strategy<Value = Rational> {
    (1i64..20_000, 1i64..400).prop_map(|(p, q)| Rational::frac_of(p, q))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// A verdict reached within some budget never changes with more budget.
    #[test]
    fn verdicts_are_budget_stable(x in seed()) {
        let small = classify(&x, 2_000, NumericMode::Exact);
        prop_assume!(!matches!(small, OrbitClassification::Undetermined { .. }));
        prop_assert_eq!(classify(&x, 20_000, NumericMode::Exact), small);
    }

    /// Iterating along an orbit's own word agrees with the composed affine map.
    #[test]
    fn orbit_word_composes(x in seed(), n in 1usize..60) {
        let params = MapParams::delta();
        let mut y = x.clone();
        let mut word = BranchWord::new();
        for _ in 0..n {
            word.push(branch_of(&y, &params));
            y = delta(&y, &params);
        }
        prop_assert_eq!(affine_from_word(&word).apply(&x), y);
    }

    /// Each extension strictly grows the certified bound.
    #[test]
    fn extension_grows(num in 31i64..41, den in 20i64..27) {
        let a = Rational::frac_of(3, 2);
        let b = Rational::frac_of(num, den).max(Rational::frac_of(41, 27));
        let step = next_bound(&a, &b, &MapParams::delta(), 1_000_000).unwrap();
        prop_assert!(step.bound > b);
        prop_assert!(!step.word.is_empty());
    }
}
