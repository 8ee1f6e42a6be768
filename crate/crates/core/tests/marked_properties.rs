use lambda_forest::groups::{Alphabet, HnnPreset, Word, WordOracle};
use lambda_forest::markedgroups::{relations_up_to, same_ball, MarkedGroup};
use proptest::prelude::*;

fn oracle(kind: usize) -> WordOracle {
    match kind {
        0 => WordOracle::free(2),
        1 => WordOracle::free_abelian(2),
        2 => WordOracle::DirectSumCyclic(Alphabet::standard(2)),
        _ => WordOracle::Hnn(HnnPreset::nonorientable_genus_three()),
    }
}

fn word(rank: usize, gens: &[(usize, bool)]) -> Word {
    Word(gens.iter().map(|&(g, inv)| lambda_forest::groups::Letter::new(g % rank, inv)).collect()).reduce()
}

fn marked(kind: usize, marking: &[Vec<(usize, bool)>]) -> MarkedGroup {
    let o = oracle(kind);
    let rank = o.rank();
    MarkedGroup::new(o, marking.iter().map(|m| word(rank, m)).collect()).unwrap()
}

fn marking_strategy() -> impl Strategy<Value = Vec<Vec<(usize, bool)>>> {
    proptest::collection::vec(proptest::collection::vec((0usize..3, any::<bool>()), 1..4), 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn agreement_is_monotone(k1 in 0usize..4, k2 in 0usize..4, m1 in marking_strategy(), m2 in marking_strategy()) {
        let (a, b) = (marked(k1, &m1), marked(k2, &m2));
        let same: Vec<bool> = (0..=4).map(|r| same_ball(&a, &b, r).unwrap().same).collect();
        for r in 1..same.len() {
            if same[r] {
                prop_assert!(same[r - 1]);
            }
        }
    }

    #[test]
    fn balls_are_closed_under_inversion(k in 0usize..4, m in marking_strategy()) {
        let ball = relations_up_to(&marked(k, &m), 5).unwrap();
        for w in &ball.words {
            prop_assert!(ball.contains(&w.inverse().reduce()));
            prop_assert!(w.is_reduced());
        }
        prop_assert!(ball.words.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn equal_markings_have_equal_balls(k in 0usize..4, m in marking_strategy()) {
        let a = marked(k, &m);
        let b = marked(k, &m);
        for r in 0..=4 {
            prop_assert_eq!(relations_up_to(&a, r).unwrap(), relations_up_to(&b, r).unwrap());
        }
    }
}

#[test]
fn free_bases_agree_through_radius_five() {
    let f = WordOracle::free(2);
    let a = MarkedGroup::standard(f.clone());
    let b = MarkedGroup::new(f, vec![Word::gen(0), Alphabet::standard(2).parse("aba'").unwrap()]).unwrap();
    for r in 0..=5 {
        assert!(relations_up_to(&a, r).unwrap().words.is_empty());
        assert!(relations_up_to(&b, r).unwrap().words.is_empty());
        assert!(same_ball(&a, &b, r).unwrap().same);
    }
}
