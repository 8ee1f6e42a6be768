//! Gluing two vertex trees along a segment and reading off the dual tree.
use lambda_forest::gluing::{dual_distance, dual_tree, glue_equiv_class, DualPoint, GraphOfActionsDoc};

const DOC: &str = r#"{
  "skeleton": {"vertices": [{"label": "u", "orbit": "1"}, {"label": "v", "orbit": "2"}]},
  "vertex_trees": {
    "1": {"rank": 1, "vertices": ["a", "b", "e"], "edges": [{"u": "a", "v": "b", "len": ["2"]}, {"u": "b", "v": "e", "len": ["1"]}]},
    "2": {"rank": 1, "vertices": ["c", "d"], "edges": [{"u": "c", "v": "d", "len": ["3"]}]}
  },
  "edges": [{
    "from": "u", "to": "v",
    "lambda_from": ["a", "b"],
    "lambda_to": ["c", {"from": "c", "to": "d", "offset": ["2"]}],
    "phi": [["a", "c"], ["b", {"from": "c", "to": "d", "offset": ["2"]}]]
  }]
}"#;

fn main() {
    let doc: GraphOfActionsDoc = serde_json::from_str(DOC).unwrap();
    let g = doc.build().unwrap();
    let dual = dual_tree(&g).unwrap();
    println!("dual tree: {} vertices, {} edges", dual.tree.vertex_count(), dual.tree.edges().len());

    let e = DualPoint::new(0, g.tree(0).parse_point("e").unwrap());
    let d = DualPoint::new(1, g.tree(1).parse_point("d").unwrap());
    println!("d(u:e, v:d) = {}", dual_distance(&g, &e, &d).unwrap());

    let a = DualPoint::new(0, g.tree(0).parse_point("a").unwrap());
    let class = glue_equiv_class(&g, &a).unwrap();
    println!("class of u:a has {} members, acyclic {}", class.members.len(), class.acyclic);
}
