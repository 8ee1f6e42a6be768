//! Relation balls of marked groups and the convergence of (a, a^n) in ℤ to ℤ².
use lambda_forest::groups::{Alphabet, WordOracle};
use lambda_forest::markedgroups::{convergence_profile, relations_up_to, same_ball, MarkedGroup};

fn main() {
    let z2 = MarkedGroup::standard(WordOracle::free_abelian(2));
    println!("radius-4 relations of Z²: {:?}", relations_up_to(&z2, 4).unwrap().format());

    let z5 = MarkedGroup::z_pair(5);
    let ab = Alphabet::standard(2);
    for r in [3, 4, 5] {
        let cmp = same_ball(&z5, &z2, r).unwrap();
        println!("(a, a^5) vs Z² at radius {r}: same {}, witness {:?}", cmp.same, cmp.witness.map(|(w, s)| (ab.format(&w), s)));
    }

    let rows = convergence_profile(&|n| MarkedGroup::z_pair(n as i64), 12, &z2, 5).unwrap();
    for row in rows {
        println!("radius {}: first index {:?}", row.radius, row.index);
    }
}
