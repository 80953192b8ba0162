use kgmap_core::confidence::{aggregate, Confidence, EmptyInput};
use proptest::prelude::*;

use Confidence::{High as H, Low as L, Medium as M};

/// Mean score with LOW=0, MEDIUM=1, HIGH=2 in floating point, bucketed at
/// 1.5 and 0.5. Scores are small integers so the mean is exact enough.
fn by_mean(items: &[Confidence]) -> Confidence {
    let mean = items.iter().map(|c| c.score() as f64).sum::<f64>() / items.len() as f64;
    if mean >= 1.5 {
        H
    } else if mean >= 0.5 {
        M
    } else {
        L
    }
}

#[test]
fn worked_examples() {
    assert_eq!(aggregate(&[H, H, H]), Ok(H));
    assert_eq!(aggregate(&[H, L]), Ok(M));
    assert_eq!(aggregate(&[M, L, L]), Ok(L));
    assert_eq!(aggregate(&[]), Err(EmptyInput));
}

#[test]
fn bucket_edges() {
    assert_eq!(aggregate(&[H, M]), Ok(H)); // 1.5
    assert_eq!(aggregate(&[M, L]), Ok(M)); // 0.5
    assert_eq!(aggregate(&[H, M, M, M]), Ok(M)); // 1.25
    assert_eq!(aggregate(&[M, L, L, L]), Ok(L)); // 0.25
}

fn items() -> impl Strategy<Value = Vec<Confidence>> {
    prop::collection::vec(prop::sample::select(Confidence::ALL.to_vec()), 1..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn matches_mean_oracle(xs in items()) {
        prop_assert_eq!(aggregate(&xs).unwrap(), by_mean(&xs));
    }

    #[test]
    fn permutation_invariant(xs in items(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut ys = xs.clone();
        ys.shuffle(&mut rand::rngs::StdRng::seed_from_u64(seed));
        prop_assert_eq!(aggregate(&xs), aggregate(&ys));
    }

    #[test]
    fn unanimous_lists_keep_their_level(c in prop::sample::select(Confidence::ALL.to_vec()), n in 1usize..50) {
        prop_assert_eq!(aggregate(&vec![c; n]), Ok(c));
    }

    #[test]
    fn raising_one_item_never_lowers_the_result(xs in items(), i in any::<prop::sample::Index>()) {
        let i = i.index(xs.len());
        let mut ys = xs.clone();
        ys[i] = H;
        prop_assert!(aggregate(&ys).unwrap() >= aggregate(&xs).unwrap());
    }
}
