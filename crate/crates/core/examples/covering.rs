//! Transverse coverings of a rank-1 tree and their bipartite skeleton.
use lambda_forest::gluing::{skeleton, transverse_check, CoveringDoc};

fn main() {
    let good: CoveringDoc = serde_json::from_value(serde_json::json!({
        "tree": {"rank": 1, "vertices": ["o", "x", "y", "z", "w"], "edges": [
            {"u": "o", "v": "x", "len": ["1"]}, {"u": "o", "v": "y", "len": ["1"]},
            {"u": "o", "v": "z", "len": ["2"]}, {"u": "z", "v": "w", "len": ["1"]}]},
        "members": {"A": ["x", "y"], "B": ["o", "z"], "C": ["z", "w"]}
    }))
    .unwrap();
    let c = good.build().unwrap();
    println!("violations: {:?}", transverse_check(&c));
    let s = skeleton(&c);
    println!("points {:?}, subtrees {:?}, edges {:?}", s.points, s.subtrees, s.edges);
    println!("connected {}, acyclic {}", s.connected, s.acyclic);

    let mut bad = good.clone();
    bad.members.remove("C");
    bad.members.insert("D".into(), serde_json::from_value(serde_json::json!(["x", "z"])).unwrap());
    for v in transverse_check(&bad.build().unwrap()) {
        println!("  {v:?}");
    }
}
