mod common;

use lambda_forest::gluing::{dual_distance, dual_tree, glue_equiv_class, glue_subtree, DualPoint};
use lambda_forest::lambdatree::{validate_tree_metric, SubtreeSpec, TreePoint};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn glued_segments_form_a_tree(seed in any::<u64>(), rank in 1usize..=3) {
        let mut r = common::rng(seed);
        let y1 = common::random_tree(&mut r, 6, rank);
        let y2 = common::random_tree(&mut r, 6, rank);
        let phi = common::random_segment_gluing(&mut r, &y1, &y2);
        let g = glue_subtree(&y1, &y2, &phi).unwrap();
        prop_assert!(validate_tree_metric(&g.tree.distance_table()).unwrap().is_ok());
        for v in y1.vertices() {
            for w in y1.vertices() {
                let (a, b) = (TreePoint::Vertex(v), TreePoint::Vertex(w));
                let d = g.tree.dist(&g.map(&DualPoint::new(0, a.clone())), &g.map(&DualPoint::new(0, b.clone())));
                prop_assert_eq!(d, y1.dist(&a, &b));
            }
        }
    }

    #[test]
    fn closed_subtrees_stay_closed(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let rank = r.gen_range(1..=2);
        let y1 = common::random_tree(&mut r, 6, rank);
        let y2 = common::random_tree(&mut r, 6, rank);
        let phi = common::random_segment_gluing(&mut r, &y1, &y2);
        let g = glue_subtree(&y1, &y2, &phi).unwrap();
        let gens: Vec<TreePoint> = (0..r.gen_range(1..=3)).map(|_| common::random_point(&mut r, &y1)).collect();
        let k = SubtreeSpec::hull(gens.clone()).unwrap();
        let k_glued = SubtreeSpec::hull(gens.iter().map(|p| g.map(&DualPoint::new(0, p.clone()))).collect()).unwrap();
        let back = phi.inverse();
        for y in y2.vertices().map(TreePoint::Vertex) {
            let on_lambda = phi.image().project(&y2, &y);
            let pulled = back.apply(&y2, &y1, &on_lambda).unwrap();
            let expect = g.map(&DualPoint::new(0, k.project(&y1, &pulled)));
            let got = k_glued.project(&g.tree, &g.map(&DualPoint::new(1, y)));
            prop_assert_eq!(got, expect);
        }
    }

    #[test]
    fn distance_is_independent_of_folding_order(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let g = common::random_graph(&mut r);
        let a = common::random_dual_point(&mut r, &g);
        let b = common::random_dual_point(&mut r, &g);
        let forward = dual_distance(&g, &a, &b).unwrap();
        prop_assert_eq!(&forward, &dual_distance(&g, &b, &a).unwrap());
        let dual = dual_tree(&g).unwrap();
        prop_assert_eq!(&forward, &dual.tree.dist(&dual.map(&a), &dual.map(&b)));
    }

    #[test]
    fn projection_folding_attains_the_minimum(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let g = common::random_graph(&mut r);
        let a = common::random_dual_point(&mut r, &g);
        let b = common::random_dual_point(&mut r, &g);
        prop_assert_eq!(dual_distance(&g, &a, &b).unwrap(), common::brute_force_distance(&g, &a, &b));
    }

    #[test]
    fn equivalence_classes_are_trees(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let g = common::random_graph(&mut r);
        let p = common::random_dual_point(&mut r, &g);
        let c = glue_equiv_class(&g, &p).unwrap();
        prop_assert!(c.acyclic);
        let mut seen = vec![false; c.members.len()];
        seen[0] = true;
        let mut grew = true;
        while grew {
            grew = false;
            for &(i, j, e) in &c.links {
                let image = g.cross(e, c.members[i].vertex, &c.members[i].point);
                prop_assert_eq!(image.as_ref(), Some(&c.members[j].point));
                if seen[i] != seen[j] {
                    seen[i] = true;
                    seen[j] = true;
                    grew = true;
                }
            }
        }
        prop_assert!(seen.iter().all(|&s| s));
        prop_assert_eq!(c.links.len() + 1, c.members.len());
    }
}
