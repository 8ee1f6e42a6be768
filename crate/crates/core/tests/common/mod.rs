#![allow(dead_code)]

use std::collections::BTreeMap;

use lambda_forest::gluing::{DualPoint, GlueEdge, GraphOfActions, SkeletonVertex};
use lambda_forest::isometry::PartialIsometry;
use lambda_forest::lambdatree::{EdgeId, MetricTree, TreePoint, VertexId};
use lambda_forest::ordgroup::{rat, scale, LexValue};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Positive integral length with a random leading coordinate.
pub fn random_length(rng: &mut ChaCha8Rng, rank: usize) -> LexValue {
    let lead = rng.gen_range(0..rank);
    let c: Vec<i64> = (0..rank)
        .map(|i| match i.cmp(&lead) {
            std::cmp::Ordering::Less => 0,
            std::cmp::Ordering::Equal => rng.gen_range(1..=4),
            std::cmp::Ordering::Greater => rng.gen_range(-3..=3),
        })
        .collect();
    LexValue::ints(&c)
}

pub fn random_tree(rng: &mut ChaCha8Rng, max_vertices: usize, rank: usize) -> MetricTree {
    let n = rng.gen_range(1..=max_vertices);
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let edges = (1..n).map(|i| (VertexId(rng.gen_range(0..i)), VertexId(i), random_length(rng, rank))).collect();
    MetricTree::from_parts(rank, names, edges).unwrap()
}

pub fn random_point(rng: &mut ChaCha8Rng, t: &MetricTree) -> TreePoint {
    if t.edges().is_empty() || rng.gen_bool(0.5) {
        return TreePoint::Vertex(VertexId(rng.gen_range(0..t.vertex_count())));
    }
    let e = EdgeId(rng.gen_range(0..t.edges().len()));
    let offset = scale(&t.edge(e).len, &rat(rng.gen_range(1..4), 4));
    TreePoint::Interior { edge: e, offset }
}

fn random_vertex(rng: &mut ChaCha8Rng, t: &MetricTree) -> TreePoint {
    TreePoint::Vertex(VertexId(rng.gen_range(0..t.vertex_count())))
}

/// Isometry between random segments of equal length, cut down from vertex geodesics.
pub fn random_segment_gluing(rng: &mut ChaCha8Rng, src: &MetricTree, dst: &MetricTree) -> PartialIsometry {
    let (p1, q1) = (random_vertex(rng, src), random_vertex(rng, src));
    let (p2, q2) = (random_vertex(rng, dst), random_vertex(rng, dst));
    let l = src.dist(&p1, &q1).min(dst.dist(&p2, &q2));
    let mut anchors = vec![(p1.clone(), p2.clone())];
    if !l.is_zero() {
        anchors.push((src.point_at(&p1, &q1, &l).unwrap(), dst.point_at(&p2, &q2, &l).unwrap()));
    }
    PartialIsometry::new(src, dst, anchors).unwrap()
}

/// Two or three vertex trees glued along segments; each vertex is its own orbit.
pub fn random_graph(rng: &mut ChaCha8Rng) -> GraphOfActions {
    let n = rng.gen_range(2..=3);
    let rank = rng.gen_range(1..=2);
    let vertices: Vec<SkeletonVertex> =
        (0..n).map(|i| SkeletonVertex { label: format!("v{i}"), orbit: i.to_string() }).collect();
    let trees: BTreeMap<String, MetricTree> = (0..n).map(|i| (i.to_string(), random_tree(rng, 5, rank))).collect();
    let mut edges = Vec::new();
    for j in 1..n {
        let i = rng.gen_range(0..j);
        let (from, to) = if rng.gen_bool(0.5) { (i, j) } else { (j, i) };
        let phi = random_segment_gluing(rng, &trees[&from.to_string()], &trees[&to.to_string()]);
        edges.push(GlueEdge { from, to, phi });
    }
    GraphOfActions::new(vertices, trees, edges).unwrap()
}

pub fn random_dual_point(rng: &mut ChaCha8Rng, g: &GraphOfActions) -> DualPoint {
    let v = rng.gen_range(0..g.vertices().len());
    DualPoint::new(v, random_point(rng, g.tree(v)))
}

/// Minimum over chains `x = x₀, x₁, …, y` of summed vertex-tree distances, each `xᵢ` drawn
/// from a finite candidate set of the `i`-th gluing subtree: its vertices and generators,
/// forward images of earlier candidates and preimages of the vertices on the far side.
pub fn brute_force_distance(g: &GraphOfActions, a: &DualPoint, b: &DualPoint) -> LexValue {
    let mut current: Vec<(TreePoint, LexValue)> = vec![(a.point.clone(), LexValue::zero(g.rank()))];
    let mut at = a.vertex;
    for (e, left) in g.skeleton_path(a.vertex, b.vertex).unwrap() {
        assert_eq!(left, at);
        let edge = &g.edges()[e];
        let other = if edge.from == at { edge.to } else { edge.from };
        let (t, far) = (g.tree(at), g.tree(other));
        let lam = g.lambda(e, at);
        let lam_far = g.lambda(e, other);
        let mut cands: Vec<TreePoint> = t.vertices().map(TreePoint::Vertex).filter(|p| lam.contains(t, p)).collect();
        cands.extend(lam.generators().iter().cloned());
        cands.extend(current.iter().map(|(p, _)| p.clone()).filter(|p| lam.contains(t, p)));
        for y in far.vertices().map(TreePoint::Vertex).filter(|p| lam_far.contains(far, p)) {
            cands.push(g.cross(e, other, &y).unwrap());
        }
        let mut next: Vec<(TreePoint, LexValue)> = Vec::new();
        for c in cands {
            let cost = current.iter().map(|(x, k)| k + &t.dist(x, &c)).min().unwrap();
            let img = g.cross(e, at, &c).unwrap();
            match next.iter_mut().find(|(p, _)| *p == img) {
                Some(entry) => entry.1 = entry.1.clone().min(cost),
                None => next.push((img, cost)),
            }
        }
        current = next;
        at = other;
    }
    let t = g.tree(at);
    current.iter().map(|(x, k)| k + &t.dist(x, &b.point)).min().unwrap()
}
