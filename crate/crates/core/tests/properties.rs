use nilwalk::analysis::{
    bin_statistics, count_type_i_configurations, full_step_status, is_abelian, supercommutes,
    FullStep, GroupSample,
};
use nilwalk::brackets::{bracket, BracketOperand};
use nilwalk::dist::{dp_distribution, LazyWalkParams};
use nilwalk::{Letter, Sign, Word};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use proptest::prelude::*;

fn word(n: usize, max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec((1..n, any::<bool>()), 0..=max_len).prop_map(move |ls| {
        let letters = ls
            .into_iter()
            .map(|(i, p)| Letter::new(i, if p { Sign::Plus } else { Sign::Minus }))
            .collect();
        Word::new(n, letters).unwrap()
    })
}

fn pair(max_n: usize, max_len: usize) -> impl Strategy<Value = (Word, Word)> {
    (2..=max_n).prop_flat_map(move |n| (word(n, max_len), word(n, max_len)))
}

proptest! {
    #[test]
    fn superdiagonal_is_additive((v, w) in pair(12, 20)) {
        let product = v.evaluate().multiply(&w.evaluate()).unwrap();
        prop_assert_eq!(product.superdiagonal(), &v.superdiagonal() + &w.superdiagonal());
    }

    #[test]
    fn inverse_word_inverts((v, _w) in pair(10, 15)) {
        let m = v.evaluate();
        prop_assert!(m.multiply(&v.inverse().evaluate()).unwrap().is_identity());
        prop_assert_eq!(m.inverse(), v.inverse().evaluate());
    }

    #[test]
    fn letter_statistics_invariants((v, w) in pair(14, 25)) {
        let s = bin_statistics(&v, &w);
        prop_assert_eq!(s.d + s.b, 2 * v.len() as u64);
        let g = GroupSample::new(v.clone(), w.clone()).unwrap();
        let abelian = is_abelian(&g);
        if supercommutes(&v, &w) {
            prop_assert!(abelian);
        }
        if count_type_i_configurations(&v, &w) > 0 {
            prop_assert!(!abelian);
        }
        if g.dimension() <= 7 && full_step_status(&g, 7) == FullStep::Yes {
            prop_assert_eq!(s.empty_bins, 0);
        }
    }

    #[test]
    fn bracket_is_bilinear_and_alternating(
        a in prop::collection::vec(-20i64..20, 2..8),
        b in prop::collection::vec(-20i64..20, 2..8),
        k in -5i64..5,
    ) {
        let m = a.len().min(b.len());
        let (a, b) = (&a[..m], &b[..m]);
        let op = BracketOperand::from_i64s;
        let ab = bracket(&op(a), &op(b)).unwrap();
        let ba = bracket(&op(b), &op(a)).unwrap();
        let neg: Vec<BigInt> = ba.values().iter().map(|x| -x).collect();
        prop_assert_eq!(ab.values(), neg.as_slice());
        let scaled: Vec<i64> = a.iter().map(|x| x * k).collect();
        let kab = bracket(&op(&scaled), &op(b)).unwrap();
        let expect: Vec<BigInt> = ab.values().iter().map(|x| x * k).collect();
        prop_assert_eq!(kab.values(), expect.as_slice());
    }

    #[test]
    fn dp_is_a_symmetric_probability(steps in 0u64..60, den in 2i64..30) {
        let p = BigRational::new(BigInt::one(), BigInt::from(2 * den));
        let d = dp_distribution(&LazyWalkParams::symmetric(steps, p).unwrap());
        prop_assert!(d.exact_total().unwrap().is_one());
        for k in 0..=steps as i64 {
            prop_assert_eq!(d.exact_mass(k), d.exact_mass(-k));
        }
    }

    #[test]
    fn layouts_agree((v, w) in pair(9, 12)) {
        use nilwalk::Layout;
        let a = v.evaluate_in(Layout::Dense).multiply(&w.evaluate_in(Layout::Dense)).unwrap();
        let b = v.evaluate_in(Layout::Sparse).multiply(&w.evaluate_in(Layout::Sparse)).unwrap();
        prop_assert_eq!(a.nonzero_entries(), b.nonzero_entries());
    }
}
