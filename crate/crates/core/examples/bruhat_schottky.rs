//! Translation lengths on the Bruhat-Tits tree and freeness certificates for matrix presets.
use lambda_forest::bruhat::{bt_translation_length, certify_free_bt, diagonal_length_law, matrix_preset, valuation, Field, Frac};

fn main() {
    println!("v_3(18/5) = {}", valuation(Field::qp(3).unwrap(), &Frac::rational(lambda_forest::ordgroup::rat(18, 5))));
    for name in ["schottky-qt", "z2-diagonal", "unipotent-fail"] {
        let g = matrix_preset(name).unwrap();
        let cert = certify_free_bt(&g, 4);
        println!(
            "{name} over {}: {:?}, {} words, value group rank {}",
            g.field(),
            cert.certificate.status,
            cert.certificate.words_checked,
            cert.value_group_rank
        );
        if let Some(w) = &cert.certificate.counterexample {
            println!("  counterexample {w}");
        }
    }

    let g = matrix_preset("z2-diagonal").unwrap();
    let word = g.alphabet().parse("aab").unwrap();
    println!("l(aab) = {} (law gives {})", g.length(&word), diagonal_length_law(2, 1));
    println!("l(a) from the matrix = {}", bt_translation_length(&g.generators()[0]));
}
