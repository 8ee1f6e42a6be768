//! Classifying words acting on a finite window and certifying freeness on a ball.
use lambda_forest::groups::WordOracle;
use lambda_forest::isometry::{certify_free_on_ball, comb_window, line_translation_window, WindowLengths};
use lambda_forest::lambdatree::TreePoint;
use lambda_forest::ordgroup::LexValue;

fn main() {
    let w = line_translation_window(2, 12, &LexValue::ints(&[2, -1]));
    let x = TreePoint::Vertex(w.tree.vertex("0,0").unwrap());
    for word in ["a", "aa", "a'"] {
        let c = w.classify(&w.parse(word).unwrap(), &x).unwrap();
        println!("{word}: {:?}", w.describe(&c));
    }
    let lengths = WindowLengths { window: &w, basepoint: x };
    let cert = certify_free_on_ball(&lengths, &WordOracle::free(1), &w.alphabet, 4);
    println!("line window: {:?} after {} words", cert.status, cert.words_checked);

    let comb = comb_window(&LexValue::ints(&[1, 0]), &LexValue::ints(&[0, 1]), 6);
    let s3 = TreePoint::Vertex(comb.tree.vertex("s3").unwrap());
    let h3 = TreePoint::Vertex(comb.tree.vertex("h3").unwrap());
    let a = comb.parse("a").unwrap();
    for (name, p) in [("s3", &s3), ("h3", &h3)] {
        let (lhs, rhs) = comb.displacement(&a, p, 2).unwrap();
        println!("comb {name}: d(x, a²x) = {lhs}, 2 d(x, axis) + 2 l(a) = {rhs}");
    }
}
