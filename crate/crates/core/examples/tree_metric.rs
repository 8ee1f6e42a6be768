//! Distances, medians and projections in a rank-2 tripod, then the four-point test.
use lambda_forest::lambdatree::{median, validate_tree_metric, FiniteLambdaMetric, MetricTree, SubtreeSpec};
use lambda_forest::ordgroup::LexValue;

fn main() {
    let t = MetricTree::new(
        2,
        &["o", "x", "y", "z"],
        &[
            ("o", "x", LexValue::ints(&[1, 0])),
            ("o", "y", LexValue::ints(&[0, 1])),
            ("o", "z", LexValue::ints(&[1, 1])),
        ],
    )
    .unwrap();
    let p = |s: &str| t.parse_point(s).unwrap();
    println!("d(x, z) = {}", t.dist(&p("x"), &p("z")));
    println!("median(x, y, z) = {}", t.point_name(&median(&t, &p("x"), &p("y"), &p("z"))));
    let mid = t.midpoint(&p("x"), &p("z"));
    println!("midpoint of [x, z] = {}", t.point_name(&mid));
    let seg = SubtreeSpec::segment(p("y"), p("z"));
    println!("projection of x onto [y, z] = {}", t.point_name(&seg.project(&t, &p("x"))));

    let table = t.distance_table();
    println!("tripod metric: {:?}", validate_tree_metric(&table).unwrap());

    let one = LexValue::ints(&[1]);
    let two = LexValue::ints(&[2]);
    let zero = LexValue::zero(1);
    let square = FiniteLambdaMetric::new(
        1,
        vec!["a".into(), "b".into(), "c".into(), "d".into()],
        vec![
            vec![zero.clone(), one.clone(), two.clone(), one.clone()],
            vec![one.clone(), zero.clone(), one.clone(), two.clone()],
            vec![two.clone(), one.clone(), zero.clone(), one.clone()],
            vec![one.clone(), two.clone(), one.clone(), zero],
        ],
    )
    .unwrap();
    println!("4-cycle metric: {:?}", validate_tree_metric(&square).unwrap());
}
