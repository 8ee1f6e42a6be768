//! Lexicographic arithmetic in ℚ³ and the rank-1 quotient of a tree.
use lambda_forest::lambdatree::{kill_infinitesimals, MetricTree};
use lambda_forest::ordgroup::{lex_compare, magnitude, parse_rat, LexValue};

fn main() {
    let a = LexValue::new(vec![parse_rat("0").unwrap(), parse_rat("1/2").unwrap(), parse_rat("-7").unwrap()]).unwrap();
    let b = LexValue::ints(&[0, 0, 100]);
    println!("{a} vs {b}: {:?}", lex_compare(&a, &b).unwrap());
    println!("magnitudes {} and {}", magnitude(&a), magnitude(&b));
    println!("a + b = {}", a.checked_add(&b).unwrap());

    // infinitesimal edges collapse, the others keep their top coordinate
    let t = MetricTree::new(
        3,
        &["r", "s", "u"],
        &[("r", "s", LexValue::ints(&[1, 5, 0])), ("s", "u", LexValue::ints(&[0, 0, 9]))],
    )
    .unwrap();
    let (q, map) = kill_infinitesimals(&t).unwrap();
    println!("quotient has {} vertices, rank {}", q.vertex_count(), q.rank());
    for v in t.vertices() {
        println!("  {} -> {}", t.name(v), q.name(map[v.0]));
    }
}
