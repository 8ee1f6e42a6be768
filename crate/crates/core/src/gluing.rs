//! Graphs of actions: gluing Λ-trees along points and closed subtrees.
//!
//! A [`GraphOfActions`] is a finite window of the skeleton: a simplicial tree
//! whose vertices carry vertex trees (shared per orbit label) and whose edges
//! carry gluing isometries between closed subtrees. Distances in the dual tree
//! are computed by folding nearest-point projections along skeleton paths.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::groups::{Alphabet, GroupError, Word};
use crate::isometry::{
    certify_free_on_ball, CertStatus, Certificate, IsometryError, LengthOracle, PartialIsometry, TrivialityOracle,
};
use crate::lambdatree::{
    subdivide_all, transfer_point, validate_tree_metric, FiniteLambdaMetric, MetricTree, PointDoc, SubtreeSpec,
    TreeDoc, TreeError, TreeMetricVerdict, TreePoint, VertexId,
};
use crate::ordgroup::LexValue;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GluingError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Isometry(#[from] IsometryError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("skeleton is not a tree: {0}")]
    Skeleton(String),
    #[error("unknown skeleton vertex {0}")]
    UnknownVertex(String),
    #[error("no vertex tree for orbit {0}")]
    UnknownOrbit(String),
    #[error("edge {edge}: {reason}")]
    BadEdge { edge: usize, reason: String },
    #[error("{0} leaves the window")]
    OutOfWindow(String),
    #[error("generator {gen}: {reason}")]
    BadGenerator { gen: String, reason: String },
}

/// Vertex of the skeleton window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkeletonVertex {
    pub label: String,
    pub orbit: String,
}

/// Skeleton edge `from -> to` with `φ: λ_from -> λ_to`; the reverse edge uses `φ⁻¹`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlueEdge {
    pub from: usize,
    pub to: usize,
    pub phi: PartialIsometry,
}

#[derive(Debug, Clone)]
pub struct GraphOfActions {
    rank: usize,
    vertices: Vec<SkeletonVertex>,
    trees: BTreeMap<String, MetricTree>,
    edges: Vec<GlueEdge>,
    boundary: BTreeSet<usize>,
    adj: Vec<Vec<(usize, usize)>>,
}

/// A point of one vertex tree; equal in the dual tree iff related by gluings.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DualPoint {
    pub vertex: usize,
    pub point: TreePoint,
}

impl DualPoint {
    pub fn new(vertex: usize, point: TreePoint) -> Self {
        DualPoint { vertex, point }
    }
}

impl GraphOfActions {
    /// Validates the skeleton (a finite tree) and every gluing map.
    pub fn new(
        vertices: Vec<SkeletonVertex>,
        trees: BTreeMap<String, MetricTree>,
        edges: Vec<GlueEdge>,
    ) -> Result<Self, GluingError> {
        if vertices.is_empty() {
            return Err(GluingError::Skeleton("no vertices".into()));
        }
        let mut labels = HashSet::new();
        for v in &vertices {
            if !labels.insert(&v.label) {
                return Err(GluingError::Skeleton(format!("duplicate vertex {}", v.label)));
            }
            if !trees.contains_key(&v.orbit) {
                return Err(GluingError::UnknownOrbit(v.orbit.clone()));
            }
        }
        let rank = trees[&vertices[0].orbit].rank();
        if let Some(t) = trees.values().find(|t| t.rank() != rank) {
            return Err(TreeError::RankMismatch { got: t.rank(), len: LexValue::zero(t.rank()), rank }.into());
        }
        let n = vertices.len();
        if edges.len() + 1 != n {
            return Err(GluingError::Skeleton(format!("{} vertices but {} edges", n, edges.len())));
        }
        let mut adj = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            if e.from >= n || e.to >= n {
                return Err(GluingError::BadEdge { edge: i, reason: "endpoint out of range".into() });
            }
            if e.from == e.to {
                return Err(GluingError::Skeleton(format!("loop at {}", vertices[e.from].label)));
            }
            adj[e.from].push((e.to, i));
            adj[e.to].push((e.from, i));
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(x) = queue.pop_front() {
            for &(y, _) in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(GluingError::Skeleton(format!("{} is not connected to {}", vertices[i].label, vertices[0].label)));
        }
        let g = GraphOfActions { rank, vertices, trees, edges, boundary: BTreeSet::new(), adj };
        for (i, e) in g.edges.iter().enumerate() {
            let (src, dst) = (g.tree(e.from), g.tree(e.to));
            PartialIsometry::new(src, dst, e.phi.anchors().to_vec())?;
            let back = e.phi.inverse();
            let dom = e.phi.domain();
            let mut samples: Vec<TreePoint> = dom.vertices(src).into_iter().map(TreePoint::Vertex).collect();
            samples.extend(dom.generators().iter().cloned());
            for x in &samples {
                let y = e.phi.apply(src, dst, x).ok_or_else(|| GluingError::BadEdge { edge: i, reason: "map undefined on its domain".into() })?;
                if back.apply(dst, src, &y).as_ref() != Some(x) {
                    return Err(GluingError::BadEdge { edge: i, reason: format!("inverse does not return {}", src.point_name(x)) });
                }
            }
        }
        Ok(g)
    }

    /// Marks skeleton vertices where the window is truncated.
    pub fn with_boundary(mut self, boundary: BTreeSet<usize>) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn vertices(&self) -> &[SkeletonVertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[GlueEdge] {
        &self.edges
    }

    pub fn boundary(&self) -> &BTreeSet<usize> {
        &self.boundary
    }

    pub fn trees(&self) -> &BTreeMap<String, MetricTree> {
        &self.trees
    }

    pub fn tree(&self, v: usize) -> &MetricTree {
        &self.trees[&self.vertices[v].orbit]
    }

    pub fn vertex(&self, label: &str) -> Result<usize, GluingError> {
        self.vertices.iter().position(|v| v.label == label).ok_or_else(|| GluingError::UnknownVertex(label.into()))
    }

    /// Edge subtree at `v` of edge `e`.
    pub fn lambda(&self, e: usize, at: usize) -> SubtreeSpec {
        let edge = &self.edges[e];
        if at == edge.from {
            edge.phi.domain()
        } else {
            edge.phi.image()
        }
    }

    /// Carries `x ∈ Y_from_side` across edge `e`, leaving vertex `at`.
    pub fn cross(&self, e: usize, at: usize, x: &TreePoint) -> Option<TreePoint> {
        let edge = &self.edges[e];
        if at == edge.from {
            edge.phi.apply(self.tree(edge.from), self.tree(edge.to), x)
        } else {
            edge.phi.inverse().apply(self.tree(edge.to), self.tree(edge.from), x)
        }
    }

    /// Edges of the skeleton path from `u` to `v`, as `(edge, vertex left)`.
    pub fn skeleton_path(&self, u: usize, v: usize) -> Result<Vec<(usize, usize)>, GluingError> {
        let n = self.vertices.len();
        if u >= n || v >= n {
            return Err(GluingError::OutOfWindow(format!("skeleton vertex #{}", u.max(v))));
        }
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[u] = true;
        let mut queue = VecDeque::from([u]);
        while let Some(x) = queue.pop_front() {
            for &(y, e) in &self.adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    prev[y] = Some((e, x));
                    queue.push_back(y);
                }
            }
        }
        let mut path = Vec::new();
        let mut cur = v;
        while cur != u {
            let (e, x) = prev[cur].expect("skeleton is connected");
            path.push((e, x));
            cur = x;
        }
        path.reverse();
        Ok(path)
    }

    fn check(&self, p: &DualPoint) -> Result<(), GluingError> {
        if p.vertex >= self.vertices.len() {
            return Err(GluingError::OutOfWindow(format!("skeleton vertex #{}", p.vertex)));
        }
        Ok(self.tree(p.vertex).check_point(&p.point)?)
    }

    pub fn point_name(&self, p: &DualPoint) -> String {
        format!("{}:{}", self.vertices[p.vertex].label, self.tree(p.vertex).point_name(&p.point))
    }

    pub fn to_doc(&self) -> GraphOfActionsDoc {
        GraphOfActionsDoc {
            schema: Some(crate::cli::SCHEMA.to_string()),
            skeleton: SkeletonDoc {
                vertices: self.vertices.clone(),
                boundary: self.boundary.iter().map(|&b| self.vertices[b].label.clone()).collect(),
            },
            vertex_trees: self.trees.iter().map(|(k, t)| (k.clone(), TreeDoc::from(t))).collect(),
            edges: self
                .edges
                .iter()
                .map(|e| {
                    let (src, dst) = (self.tree(e.from), self.tree(e.to));
                    let dom = e.phi.domain();
                    let img = e.phi.image();
                    GlueEdgeDoc {
                        from: self.vertices[e.from].label.clone(),
                        to: self.vertices[e.to].label.clone(),
                        lambda_from: dom.generators().iter().map(|p| PointDoc::from_point(src, p)).collect(),
                        lambda_to: img.generators().iter().map(|p| PointDoc::from_point(dst, p)).collect(),
                        phi: e
                            .phi
                            .anchors()
                            .iter()
                            .map(|(a, b)| (PointDoc::from_point(src, a), PointDoc::from_point(dst, b)))
                            .collect(),
                    }
                })
                .collect(),
        }
    }
}

/// Distance in the dual tree by folding projections along the skeleton path.
///
/// At each edge the running point is replaced by the image of its projection
/// onto the edge subtree; the projection distances accumulate.
pub fn dual_distance(g: &GraphOfActions, a: &DualPoint, b: &DualPoint) -> Result<LexValue, GluingError> {
    g.check(a)?;
    g.check(b)?;
    let mut acc = LexValue::zero(g.rank);
    let mut x = a.point.clone();
    for (e, at) in g.skeleton_path(a.vertex, b.vertex)? {
        let y = g.tree(at);
        let p = g.lambda(e, at).project(y, &x);
        acc = &acc + &y.dist(&x, &p);
        x = g.cross(e, at, &p).expect("projection lies in the edge subtree");
    }
    Ok(&acc + &g.tree(b.vertex).dist(&x, &b.point))
}

/// Embedding of one vertex tree into a glued tree.
#[derive(Debug, Clone)]
pub struct Embedding {
    original: MetricTree,
    subdivided: MetricTree,
    vmap: Vec<VertexId>,
}

impl Embedding {
    pub fn source(&self) -> &MetricTree {
        &self.original
    }

    pub fn map(&self, out: &MetricTree, p: &TreePoint) -> TreePoint {
        match transfer_point(&self.original, &self.subdivided, p) {
            TreePoint::Vertex(v) => TreePoint::Vertex(self.vmap[v.0]),
            TreePoint::Interior { edge, offset } => {
                let e = self.subdivided.edge(edge);
                out.point_on_edge(self.vmap[e.u.0], self.vmap[e.v.0], offset).expect("glued edges are kept")
            }
        }
    }
}

/// Dual tree of a graph of actions, with one embedding per skeleton vertex.
#[derive(Debug, Clone)]
pub struct Gluing {
    pub tree: MetricTree,
    pub pieces: Vec<Embedding>,
}

impl Gluing {
    pub fn map(&self, p: &DualPoint) -> TreePoint {
        self.pieces[p.vertex].map(&self.tree, &p.point)
    }
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut c = x;
    while parent[c] != r {
        let n = parent[c];
        parent[c] = r;
        c = n;
    }
    r
}

/// Builds the dual tree `X/∼` as a single finite Λ-tree.
///
/// Every point that some gluing identifies with a vertex becomes a vertex first,
/// then identified vertices are merged. Vertex names are `label:name`, or just
/// `name` for vertices with an empty label.
pub fn dual_tree(g: &GraphOfActions) -> Result<Gluing, GluingError> {
    let n = g.vertices.len();
    let mut pts: Vec<Vec<TreePoint>> = Vec::with_capacity(n);
    let mut known: Vec<HashSet<TreePoint>> = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    for v in 0..n {
        let t = g.tree(v);
        let mut list: Vec<TreePoint> = t.vertices().map(TreePoint::Vertex).collect();
        for &(_, e) in &g.adj[v] {
            list.extend(g.lambda(e, v).generators().iter().cloned());
        }
        let mut set = HashSet::new();
        let mut uniq = Vec::new();
        for p in list {
            if set.insert(p.clone()) {
                queue.push_back((v, p.clone()));
                uniq.push(p);
            }
        }
        pts.push(uniq);
        known.push(set);
    }
    while let Some((v, p)) = queue.pop_front() {
        for &(w, e) in &g.adj[v] {
            if !g.lambda(e, v).contains(g.tree(v), &p) {
                continue;
            }
            let q = g.cross(e, v, &p).ok_or_else(|| GluingError::BadEdge { edge: e, reason: "map undefined on its domain".into() })?;
            if known[w].insert(q.clone()) {
                pts[w].push(q.clone());
                queue.push_back((w, q));
            }
        }
    }
    let mut subs = Vec::with_capacity(n);
    let mut offsets = Vec::with_capacity(n);
    let mut total = 0;
    for v in 0..n {
        let (sub, ids) = subdivide_all(g.tree(v), &pts[v])?;
        let lookup: HashMap<TreePoint, VertexId> = pts[v].iter().cloned().zip(ids).collect();
        offsets.push(total);
        total += sub.vertex_count();
        subs.push((sub, lookup));
    }
    let mut parent: Vec<usize> = (0..total).collect();
    for (e, edge) in g.edges.iter().enumerate() {
        let (v, w) = (edge.from, edge.to);
        for p in &pts[v] {
            if !g.lambda(e, v).contains(g.tree(v), p) {
                continue;
            }
            let q = g.cross(e, v, p).expect("checked above");
            let a = offsets[v] + subs[v].1[p].0;
            let b = offsets[w] + subs[w].1[&q].0;
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut class_id: HashMap<usize, VertexId> = HashMap::new();
    let mut names = Vec::new();
    let mut taken = HashSet::new();
    let mut vmaps = vec![Vec::new(); n];
    for v in 0..n {
        for i in 0..subs[v].0.vertex_count() {
            let r = find(&mut parent, offsets[v] + i);
            let id = *class_id.entry(r).or_insert_with(|| {
                let label = &g.vertices[v].label;
                let base = subs[v].0.name(VertexId(i));
                let mut name = if label.is_empty() { base.to_string() } else { format!("{label}:{base}") };
                let mut k = 1;
                while taken.contains(&name) {
                    name = format!("{}#{k}", if label.is_empty() { base.to_string() } else { format!("{label}:{base}") });
                    k += 1;
                }
                taken.insert(name.clone());
                names.push(name);
                VertexId(names.len() - 1)
            });
            vmaps[v].push(id);
        }
    }
    let mut seen_edges = HashSet::new();
    let mut edges = Vec::new();
    for v in 0..n {
        for e in subs[v].0.edges() {
            let (a, b) = (vmaps[v][e.u.0], vmaps[v][e.v.0]);
            if a == b {
                return Err(GluingError::BadEdge { edge: 0, reason: "gluing collapses an edge".into() });
            }
            if seen_edges.insert((a.min(b), a.max(b))) {
                edges.push((a, b, e.len.clone()));
            }
        }
    }
    let tree = MetricTree::from_parts(g.rank, names, edges)?;
    let pieces = subs
        .into_iter()
        .zip(vmaps)
        .enumerate()
        .map(|(v, ((sub, _), vmap))| Embedding { original: g.tree(v).clone(), subdivided: sub, vmap })
        .collect();
    Ok(Gluing { tree, pieces })
}

/// Glues each `Y_i` to `Y` by identifying `y_i ∈ Y_i` with `x_i ∈ Y`.
///
/// Vertices of `Y` keep their names; vertices of the `i`-th attachment (from 1)
/// are named `i:name`.
pub fn glue_point(y: &MetricTree, attachments: &[(MetricTree, TreePoint, TreePoint)]) -> Result<Gluing, GluingError> {
    let mut vertices = vec![SkeletonVertex { label: String::new(), orbit: "0".into() }];
    let mut trees = BTreeMap::from([("0".to_string(), y.clone())]);
    let mut edges = Vec::new();
    for (i, (yi, xi, pi)) in attachments.iter().enumerate() {
        let k = i + 1;
        vertices.push(SkeletonVertex { label: k.to_string(), orbit: k.to_string() });
        trees.insert(k.to_string(), yi.clone());
        let phi = PartialIsometry::new(y, yi, vec![(xi.clone(), pi.clone())])?;
        edges.push(GlueEdge { from: 0, to: k, phi });
    }
    dual_tree(&GraphOfActions::new(vertices, trees, edges)?)
}

/// Glues `Y₂` to `Y₁` along `φ: λ₁ -> λ₂`; vertices of `Y₂` are named `2:name`.
pub fn glue_subtree(y1: &MetricTree, y2: &MetricTree, phi: &PartialIsometry) -> Result<Gluing, GluingError> {
    let vertices = vec![
        SkeletonVertex { label: String::new(), orbit: "1".into() },
        SkeletonVertex { label: "2".into(), orbit: "2".into() },
    ];
    let trees = BTreeMap::from([("1".to_string(), y1.clone()), ("2".to_string(), y2.clone())]);
    dual_tree(&GraphOfActions::new(vertices, trees, vec![GlueEdge { from: 0, to: 1, phi: phi.clone() }])?)
}

/// Distance between `x ∈ Y₁` and `y ∈ Y₂` after gluing along `φ`, through the projection of `x`.
pub fn glued_distance(y1: &MetricTree, y2: &MetricTree, phi: &PartialIsometry, x: &TreePoint, y: &TreePoint) -> LexValue {
    let p = phi.domain().project(y1, x);
    let q = phi.apply(y1, y2, &p).expect("projection lies in the domain");
    &y1.dist(x, &p) + &y2.dist(&q, y)
}

/// Equivalence class of a point under the gluing relation, as a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivClass {
    pub members: Vec<DualPoint>,
    /// `(i, j, edge)`: member `j` is the image of member `i` across `edge`.
    pub links: Vec<(usize, usize, usize)>,
    /// Graph diameter in links.
    pub diameter: usize,
    pub acyclic: bool,
    pub meets_boundary: bool,
}

pub fn glue_equiv_class(g: &GraphOfActions, p: &DualPoint) -> Result<EquivClass, GluingError> {
    g.check(p)?;
    let mut members = vec![p.clone()];
    let mut index: HashMap<DualPoint, usize> = HashMap::from([(p.clone(), 0)]);
    let mut links = Vec::new();
    let mut link_set = HashSet::new();
    let mut queue = VecDeque::from([0]);
    while let Some(i) = queue.pop_front() {
        let cur = members[i].clone();
        for &(w, e) in &g.adj[cur.vertex] {
            if !g.lambda(e, cur.vertex).contains(g.tree(cur.vertex), &cur.point) {
                continue;
            }
            let q = DualPoint::new(w, g.cross(e, cur.vertex, &cur.point).expect("point in the edge subtree"));
            let j = match index.get(&q) {
                Some(&j) => j,
                None => {
                    members.push(q.clone());
                    index.insert(q, members.len() - 1);
                    queue.push_back(members.len() - 1);
                    members.len() - 1
                }
            };
            if link_set.insert((i.min(j), i.max(j), e)) {
                links.push((i.min(j), i.max(j), e));
            }
        }
    }
    let m = members.len();
    let mut adj = vec![Vec::new(); m];
    for &(i, j, _) in &links {
        adj[i].push(j);
        adj[j].push(i);
    }
    let bfs = |s: usize| {
        let mut d = vec![usize::MAX; m];
        d[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(x) = q.pop_front() {
            for &y in &adj[x] {
                if d[y] == usize::MAX {
                    d[y] = d[x] + 1;
                    q.push_back(y);
                }
            }
        }
        d
    };
    let d0 = bfs(0);
    let far = (0..m).max_by_key(|&i| d0[i]).unwrap();
    let diameter = *bfs(far).iter().max().unwrap();
    let meets_boundary = members.iter().any(|x| g.boundary.contains(&x.vertex));
    Ok(EquivClass { acyclic: links.len() + 1 == m, members, links, diameter, meets_boundary })
}

/// Evidence that the action on one vertex-tree orbit is free.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Attestation {
    Certificate { status: CertStatus, #[serde(rename = "N")] n: usize },
    Declared { reason: String },
}

impl Attestation {
    pub fn from_certificate(c: &Certificate) -> Self {
        Attestation::Certificate { status: c.status, n: c.n }
    }

    pub fn attests_freeness(&self) -> bool {
        match self {
            Attestation::Certificate { status, .. } => *status == CertStatus::FreeOnBall,
            Attestation::Declared { .. } => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Composite of gluing maps between two vertices of one orbit that translates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TranslationWitness {
    pub from: String,
    pub to: String,
    pub point: String,
    pub image: String,
    pub shift: LexValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SampledClass {
    pub point: String,
    pub size: usize,
    pub diameter: usize,
    pub meets_boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FreeCriterionReport {
    pub status: Verdict,
    pub attestations: BTreeMap<String, Attestation>,
    pub missing_attestations: Vec<String>,
    pub classes: Vec<SampledClass>,
    pub witness: Option<TranslationWitness>,
    pub notes: Vec<String>,
}

fn carry(g: &GraphOfActions, path: &[(usize, usize)], x: &TreePoint) -> Option<TreePoint> {
    let mut cur = x.clone();
    for &(e, at) in path {
        if !g.lambda(e, at).contains(g.tree(at), &cur) {
            return None;
        }
        cur = g.cross(e, at, &cur)?;
    }
    Some(cur)
}

/// Finite check of the free-gluing criterion.
///
/// Sampled classes must be finite inside the window and every orbit needs a
/// freeness attestation. A composite of gluings between two skeleton vertices
/// of the same orbit that moves a point `x` with `d(x, ψ²x) = 2 d(x, ψx) > 0`
/// is a translation, whose classes have unbounded diameter in the full skeleton.
pub fn check_free_criterion(
    g: &GraphOfActions,
    attestations: &BTreeMap<String, Attestation>,
    samples: &[DualPoint],
) -> Result<FreeCriterionReport, GluingError> {
    let orbits: BTreeSet<&String> = g.vertices.iter().map(|v| &v.orbit).collect();
    let missing: Vec<String> = orbits
        .iter()
        .filter(|o| !attestations.get(**o).is_some_and(Attestation::attests_freeness))
        .map(|o| o.to_string())
        .collect();
    let mut classes = Vec::new();
    for p in samples {
        let c = glue_equiv_class(g, p)?;
        classes.push(SampledClass {
            point: g.point_name(p),
            size: c.members.len(),
            diameter: c.diameter,
            meets_boundary: c.meets_boundary,
        });
    }
    let mut notes = Vec::new();
    let mut witness = None;
    'search: for u in 0..g.vertices.len() {
        for w in 0..g.vertices.len() {
            if u == w || g.vertices[u].orbit != g.vertices[w].orbit {
                continue;
            }
            let path = g.skeleton_path(u, w)?;
            let y = g.tree(u);
            let first = g.lambda(path[0].0, u);
            let mut cands: Vec<TreePoint> = first.vertices(y).into_iter().map(TreePoint::Vertex).collect();
            cands.extend(first.generators().iter().cloned());
            let gens = first.generators();
            for i in 0..gens.len() {
                for j in 0..i {
                    cands.push(y.midpoint(&gens[i], &gens[j]));
                }
            }
            let mut moved = false;
            for x in &cands {
                let Some(x1) = carry(g, &path, x) else { continue };
                let d1 = y.dist(x, &x1);
                if d1.is_zero() {
                    continue;
                }
                moved = true;
                let Some(x2) = carry(g, &path, &x1) else { continue };
                if y.dist(x, &x2) == &d1 + &d1 {
                    witness = Some(TranslationWitness {
                        from: g.vertices[u].label.clone(),
                        to: g.vertices[w].label.clone(),
                        point: y.point_name(x),
                        image: y.point_name(&x1),
                        shift: d1,
                    });
                    break 'search;
                }
            }
            if moved {
                notes.push(format!(
                    "composite {} -> {} moves points but no doubling is witnessed inside the window",
                    g.vertices[u].label, g.vertices[w].label
                ));
            }
        }
    }
    let status = if witness.is_some() {
        Verdict::Fail
    } else if !missing.is_empty() || !notes.is_empty() || classes.iter().any(|c| c.meets_boundary) {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    Ok(FreeCriterionReport { status, attestations: attestations.clone(), missing_attestations: missing, classes, witness, notes })
}

/// Family of closed subtrees of a rank-1 tree.
#[derive(Debug, Clone)]
pub struct TransverseCovering {
    pub tree: MetricTree,
    pub names: Vec<String>,
    pub members: Vec<SubtreeSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CoveringViolation {
    RankNotOne { rank: usize },
    Degenerate { member: String },
    Overlap { a: String, b: String, edge: (String, String) },
    Uncovered { edge: (String, String), from: LexValue, to: LexValue },
}

impl TransverseCovering {
    pub fn new(tree: MetricTree, names: Vec<String>, members: Vec<SubtreeSpec>) -> Result<Self, GluingError> {
        if names.len() != members.len() {
            return Err(GluingError::Skeleton("one name per covering member".into()));
        }
        for m in &members {
            m.check(&tree)?;
        }
        Ok(TransverseCovering { tree, names, members })
    }

    fn same(&self, i: usize, j: usize) -> bool {
        let (a, b) = (&self.members[i], &self.members[j]);
        a.generators().iter().all(|p| b.contains(&self.tree, p)) && b.generators().iter().all(|p| a.contains(&self.tree, p))
    }

    fn edge_names(&self, e: usize) -> (String, String) {
        let edge = &self.tree.edges()[e];
        (self.tree.name(edge.u).to_string(), self.tree.name(edge.v).to_string())
    }
}

/// Transverse intersection and full coverage, pairwise checks in parallel.
pub fn transverse_check(c: &TransverseCovering) -> Vec<CoveringViolation> {
    let t = &c.tree;
    if t.rank() != 1 {
        return vec![CoveringViolation::RankNotOne { rank: t.rank() }];
    }
    let mut out: Vec<CoveringViolation> = c
        .members
        .iter()
        .zip(&c.names)
        .filter(|(m, _)| m.is_degenerate(t))
        .map(|(_, n)| CoveringViolation::Degenerate { member: n.clone() })
        .collect();
    let clips: Vec<_> = c.members.iter().map(|m| m.clips(t)).collect();
    let pairs: Vec<(usize, usize)> = (0..c.members.len()).flat_map(|i| (0..i).map(move |j| (j, i))).collect();
    let overlaps: Vec<Option<CoveringViolation>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            for a in &clips[i] {
                for b in clips[j].iter().filter(|b| b.edge == a.edge) {
                    let lo = a.lo.clone().max(b.lo.clone());
                    let hi = a.hi.clone().min(b.hi.clone());
                    if lo < hi && !c.same(i, j) {
                        return Some(CoveringViolation::Overlap {
                            a: c.names[i].clone(),
                            b: c.names[j].clone(),
                            edge: c.edge_names(a.edge.0),
                        });
                    }
                }
            }
            None
        })
        .collect();
    out.extend(overlaps.into_iter().flatten());
    for (e, edge) in t.edges().iter().enumerate() {
        let mut spans: Vec<(LexValue, LexValue)> =
            clips.iter().flatten().filter(|k| k.edge.0 == e).map(|k| (k.lo.clone(), k.hi.clone())).collect();
        spans.sort();
        let mut reach = LexValue::zero(1);
        for (lo, hi) in spans {
            if lo > reach {
                break;
            }
            reach = reach.max(hi);
        }
        if reach < edge.len {
            let next = clips
                .iter()
                .flatten()
                .filter(|k| k.edge.0 == e && k.lo > reach)
                .map(|k| k.lo.clone())
                .min()
                .unwrap_or_else(|| edge.len.clone());
            out.push(CoveringViolation::Uncovered { edge: c.edge_names(e), from: reach, to: next });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Point,
    Subtree,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Terminal {
    pub side: Side,
    pub name: String,
}

/// Bipartite skeleton: points in two or more members, and the members.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Skeleton {
    pub points: Vec<String>,
    pub subtrees: Vec<String>,
    /// `(point index, subtree index)` for every membership.
    pub edges: Vec<(usize, usize)>,
    pub connected: bool,
    pub acyclic: bool,
    pub terminal: Vec<Terminal>,
}

/// Intersection point of two subtrees meeting in at most one point.
fn meeting_point(t: &MetricTree, a: &SubtreeSpec, b: &SubtreeSpec) -> Option<TreePoint> {
    let p = b.project(t, &a.generators()[0]);
    a.contains(t, &p).then_some(p)
}

pub fn skeleton(c: &TransverseCovering) -> Skeleton {
    let t = &c.tree;
    let mut reps: Vec<usize> = Vec::new();
    for i in 0..c.members.len() {
        if !reps.iter().any(|&j| c.same(i, j)) {
            reps.push(i);
        }
    }
    let mut points: Vec<TreePoint> = Vec::new();
    for (k, &i) in reps.iter().enumerate() {
        for &j in &reps[..k] {
            if let Some(p) = meeting_point(t, &c.members[i], &c.members[j]) {
                if !points.contains(&p) {
                    points.push(p);
                }
            }
        }
    }
    let mut edges = Vec::new();
    for (pi, p) in points.iter().enumerate() {
        for (si, &i) in reps.iter().enumerate() {
            if c.members[i].contains(t, p) {
                edges.push((pi, si));
            }
        }
    }
    let (np, ns) = (points.len(), reps.len());
    let total = np + ns;
    let mut adj = vec![Vec::new(); total];
    for &(p, s) in &edges {
        adj[p].push(np + s);
        adj[np + s].push(p);
    }
    let mut seen = vec![false; total];
    let mut queue = VecDeque::new();
    if total > 0 {
        seen[0] = true;
        queue.push_back(0);
    }
    while let Some(x) = queue.pop_front() {
        for &y in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                queue.push_back(y);
            }
        }
    }
    let connected = seen.iter().all(|&s| s);
    let terminal = (0..total)
        .filter(|&x| adj[x].len() <= 1 && total > 1)
        .map(|x| {
            if x < np {
                Terminal { side: Side::Point, name: t.point_name(&points[x]) }
            } else {
                Terminal { side: Side::Subtree, name: c.names[reps[x - np]].clone() }
            }
        })
        .collect();
    Skeleton {
        points: points.iter().map(|p| t.point_name(p)).collect(),
        subtrees: reps.iter().map(|&i| c.names[i].clone()).collect(),
        acyclic: connected && edges.len() + 1 == total,
        connected,
        edges,
        terminal,
    }
}

/// Generator given as a partial map on the labels of a finite metric.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub name: String,
    pub image: Vec<Option<usize>>,
}

impl LabelMap {
    pub fn inverse(&self) -> Vec<Option<usize>> {
        let mut inv = vec![None; self.image.len()];
        for (i, j) in self.image.iter().enumerate() {
            if let Some(j) = j {
                inv[*j] = Some(i);
            }
        }
        inv
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GeneratorCheck {
    pub generator: String,
    pub isometric: bool,
    /// Labels whose distance is not preserved, or that collide.
    pub witness: Option<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CandidateReport {
    pub status: Verdict,
    pub metric: TreeMetricVerdict,
    pub generators: Vec<GeneratorCheck>,
    pub certificate: Option<Certificate>,
}

/// Translation lengths `max(0, d(x, w²x) - d(x, wx))` on a labelled point set.
struct LabelLengths<'a> {
    metric: &'a FiniteLambdaMetric,
    maps: Vec<Vec<Option<usize>>>,
    invs: Vec<Vec<Option<usize>>>,
}

impl LabelLengths<'_> {
    fn apply(&self, w: &Word, x: usize) -> Option<usize> {
        w.letters().iter().try_fold(x, |y, l| if l.inv { self.invs[l.gen][y] } else { self.maps[l.gen][y] })
    }
}

impl LengthOracle for LabelLengths<'_> {
    fn rank(&self) -> usize {
        self.metric.rank
    }

    fn length(&self, w: &Word) -> Result<LexValue, String> {
        for x in 0..self.metric.len() {
            let Some(y) = self.apply(w, x) else { continue };
            let Some(z) = self.apply(w, y) else { continue };
            let l = self.metric.d(x, z) - self.metric.d(x, y);
            return Ok(l.max(LexValue::zero(self.metric.rank)));
        }
        Err("w² leaves the labelled points from every start".into())
    }
}

/// Tree-metric check, isometry of each generator, and ball certification.
pub fn validate_candidate_action(
    metric: &FiniteLambdaMetric,
    gens: &[LabelMap],
    triviality: &dyn TrivialityOracle,
    n: usize,
) -> Result<CandidateReport, GluingError> {
    let verdict = validate_tree_metric(metric)?;
    let m = metric.len();
    let mut checks = Vec::new();
    for g in gens {
        if g.image.len() != m || g.image.iter().flatten().any(|&j| j >= m) {
            return Err(GluingError::BadGenerator { gen: g.name.clone(), reason: "image table does not match the labels".into() });
        }
        let mut witness = None;
        let mut used: HashMap<usize, usize> = HashMap::new();
        'pairs: for i in 0..m {
            let Some(gi) = g.image[i] else { continue };
            if let Some(&k) = used.get(&gi) {
                witness = Some((metric.labels[k].clone(), metric.labels[i].clone()));
                break;
            }
            used.insert(gi, i);
            for j in 0..i {
                let Some(gj) = g.image[j] else { continue };
                if metric.d(i, j) != metric.d(gi, gj) {
                    witness = Some((metric.labels[j].clone(), metric.labels[i].clone()));
                    break 'pairs;
                }
            }
        }
        checks.push(GeneratorCheck { generator: g.name.clone(), isometric: witness.is_none(), witness });
    }
    let certificate = if verdict.is_ok() && checks.iter().all(|c| c.isometric) {
        let alphabet = Alphabet::from_strs(&gens.iter().map(|g| g.name.as_str()).collect::<Vec<_>>())?;
        let lengths = LabelLengths {
            metric,
            maps: gens.iter().map(|g| g.image.clone()).collect(),
            invs: gens.iter().map(LabelMap::inverse).collect(),
        };
        Some(certify_free_on_ball(&lengths, triviality, &alphabet, n))
    } else {
        None
    };
    let status = match &certificate {
        None => Verdict::Fail,
        Some(c) => match c.status {
            CertStatus::FreeOnBall => Verdict::Pass,
            CertStatus::Counterexample => Verdict::Fail,
            CertStatus::Inconclusive => Verdict::Inconclusive,
        },
    };
    Ok(CandidateReport { status, metric: verdict, generators: checks, certificate })
}

/// Graph-of-actions document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphOfActionsDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub skeleton: SkeletonDoc,
    pub vertex_trees: BTreeMap<String, TreeDoc>,
    pub edges: Vec<GlueEdgeDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkeletonDoc {
    pub vertices: Vec<SkeletonVertex>,
    #[serde(default)]
    pub boundary: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlueEdgeDoc {
    pub from: String,
    pub to: String,
    pub lambda_from: Vec<PointDoc>,
    pub lambda_to: Vec<PointDoc>,
    /// Anchor pairs `[source point, image point]`; the map is their affine extension.
    pub phi: Vec<(PointDoc, PointDoc)>,
}

impl GraphOfActionsDoc {
    pub fn build(&self) -> Result<GraphOfActions, GluingError> {
        let mut trees = BTreeMap::new();
        for (k, d) in &self.vertex_trees {
            trees.insert(k.clone(), d.build()?);
        }
        let vs = &self.skeleton.vertices;
        let find = |l: &str| vs.iter().position(|v| v.label == l).ok_or_else(|| GluingError::UnknownVertex(l.into()));
        let tree_of = |i: usize| trees.get(&vs[i].orbit).ok_or_else(|| GluingError::UnknownOrbit(vs[i].orbit.clone()));
        let mut edges = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            let (from, to) = (find(&e.from)?, find(&e.to)?);
            let (src, dst) = (tree_of(from)?, tree_of(to)?);
            let anchors = e
                .phi
                .iter()
                .map(|(a, b)| Ok((a.resolve(src)?, b.resolve(dst)?)))
                .collect::<Result<Vec<_>, TreeError>>()?;
            let phi = PartialIsometry::new(src, dst, anchors)?;
            let lam_from = SubtreeSpec::hull(e.lambda_from.iter().map(|p| p.resolve(src)).collect::<Result<_, _>>()?)?;
            let lam_to = SubtreeSpec::hull(e.lambda_to.iter().map(|p| p.resolve(dst)).collect::<Result<_, _>>()?)?;
            if !same_subtree(src, &lam_from, &phi.domain()) || !same_subtree(dst, &lam_to, &phi.image()) {
                return Err(GluingError::BadEdge { edge: i, reason: "edge subtrees differ from the domain and image of phi".into() });
            }
            edges.push(GlueEdge { from, to, phi });
        }
        let boundary = self.skeleton.boundary.iter().map(|b| find(b)).collect::<Result<_, _>>()?;
        Ok(GraphOfActions::new(vs.clone(), trees, edges)?.with_boundary(boundary))
    }
}

fn same_subtree(t: &MetricTree, a: &SubtreeSpec, b: &SubtreeSpec) -> bool {
    a.generators().iter().all(|p| b.contains(t, p)) && b.generators().iter().all(|p| a.contains(t, p))
}

/// Transverse-covering document: a rank-1 tree and named members as point hulls.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoveringDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub tree: TreeDoc,
    pub members: BTreeMap<String, Vec<PointDoc>>,
}

impl CoveringDoc {
    pub fn build(&self) -> Result<TransverseCovering, GluingError> {
        let tree = self.tree.build()?;
        let mut names = Vec::new();
        let mut members = Vec::new();
        for (k, pts) in &self.members {
            names.push(k.clone());
            members.push(SubtreeSpec::hull(pts.iter().map(|p| p.resolve(&tree)).collect::<Result<_, _>>()?)?);
        }
        TransverseCovering::new(tree, names, members)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::WordOracle;
    use crate::ordgroup::LexValue;

    fn lv(c: &[i64]) -> LexValue {
        LexValue::ints(c)
    }

    fn seg(names: [&str; 2], len: &[i64]) -> MetricTree {
        MetricTree::new(len.len(), &names, &[(names[0], names[1], lv(len))]).unwrap()
    }

    fn v(t: &MetricTree, n: &str) -> TreePoint {
        TreePoint::Vertex(t.vertex(n).unwrap())
    }

    #[test]
    fn end_to_end_segments() {
        let y1 = seg(["a", "b"], &[1, 0]);
        let y2 = seg(["c", "d"], &[2, 0]);
        let g = glue_point(&y1, &[(y2.clone(), v(&y1, "b"), v(&y2, "c"))]).unwrap();
        assert_eq!(g.tree.vertex_count(), 3);
        let a = g.pieces[0].map(&g.tree, &v(&y1, "a"));
        let d = g.pieces[1].map(&g.tree, &v(&y2, "d"));
        assert_eq!(g.tree.dist(&a, &d), lv(&[3, 0]));
    }

    #[test]
    fn three_arms_make_a_tripod() {
        let base = MetricTree::point(1, "o");
        let arms: Vec<_> = (1..=3).map(|k| (seg(["r", "x"], &[k]), TreePoint::Vertex(VertexId(0)), TreePoint::Vertex(VertexId(0)))).collect();
        let g = glue_point(&base, &arms).unwrap();
        assert_eq!(g.tree.vertex_count(), 4);
        assert_eq!(g.tree.degree(g.tree.vertex("o").unwrap()), 3);
        assert_eq!(g.tree.vertex_distance(g.tree.vertex("1:x").unwrap(), g.tree.vertex("3:x").unwrap()), lv(&[4]));
    }

    #[test]
    fn arms_in_different_trees_sum_through_the_base() {
        let y = MetricTree::new(1, &["p", "q"], &[("p", "q", lv(&[5]))]).unwrap();
        let y1 = seg(["s", "x"], &[2]);
        let y2 = seg(["s", "y"], &[3]);
        let at = y.point_on_edge(y.vertex("p").unwrap(), y.vertex("q").unwrap(), lv(&[1])).unwrap();
        let g = glue_point(&y, &[(y1.clone(), at.clone(), v(&y1, "s")), (y2.clone(), v(&y, "q"), v(&y2, "s"))]).unwrap();
        let x = g.pieces[1].map(&g.tree, &v(&y1, "x"));
        let z = g.pieces[2].map(&g.tree, &v(&y2, "y"));
        let expect = &(&lv(&[2]) + &y.dist(&at, &v(&y, "q"))) + &lv(&[3]);
        assert_eq!(g.tree.dist(&x, &z), expect);
        assert_eq!(expect, lv(&[9]));
    }

    #[test]
    fn overlapping_subsegments() {
        let y1 = seg(["a", "b"], &[2, 0]);
        let y2 = seg(["c", "d"], &[2, 0]);
        let mid1 = y1.point_on_edge(y1.vertex("a").unwrap(), y1.vertex("b").unwrap(), lv(&[1, 0])).unwrap();
        let mid2 = y2.point_on_edge(y2.vertex("c").unwrap(), y2.vertex("d").unwrap(), lv(&[1, 0])).unwrap();
        let phi = PartialIsometry::new(&y1, &y2, vec![(mid1, v(&y2, "c")), (v(&y1, "b"), mid2)]).unwrap();
        let g = glue_subtree(&y1, &y2, &phi).unwrap();
        let a = g.pieces[0].map(&g.tree, &v(&y1, "a"));
        let d = g.pieces[1].map(&g.tree, &v(&y2, "d"));
        assert_eq!(g.tree.dist(&a, &d), lv(&[3, 0]));
        assert_eq!(glued_distance(&y1, &y2, &phi, &v(&y1, "a"), &v(&y2, "d")), lv(&[3, 0]));
        assert!(validate_tree_metric(&g.tree.distance_table()).unwrap().is_ok());
        let x = v(&y1, "b");
        assert_eq!(glued_distance(&y1, &y2, &phi, &x, &v(&y2, "d")), y2.dist(&phi.apply(&y1, &y2, &x).unwrap(), &v(&y2, "d")));
    }

    #[test]
    fn point_subtree_reduces_to_point_gluing() {
        let y1 = seg(["a", "b"], &[1]);
        let y2 = seg(["c", "d"], &[4]);
        let phi = PartialIsometry::new(&y1, &y2, vec![(v(&y1, "b"), v(&y2, "c"))]).unwrap();
        let s = glue_subtree(&y1, &y2, &phi).unwrap();
        let p = glue_point(&y1, &[(y2.clone(), v(&y1, "b"), v(&y2, "c"))]).unwrap();
        assert_eq!(s.tree.vertex_count(), p.tree.vertex_count());
        assert_eq!(s.tree.distance_table().dist, p.tree.distance_table().dist);
    }

    fn chain(rank: usize) -> GraphOfActions {
        // Y_u = [0,4], Y_v = [0,4], Y_w = [0,4]; u->v glues [2,4] to [0,2], v->w glues [1,3] to [1,3] reversed
        let first = |k: i64| {
            let mut c = vec![0; rank];
            c[0] = k;
            LexValue::ints(&c)
        };
        let t = MetricTree::new(rank, &["0", "4"], &[("0", "4", first(4))]).unwrap();
        let p = |k: i64| t.point_on_edge(VertexId(0), VertexId(1), first(k)).unwrap();
        let e1 = GlueEdge { from: 0, to: 1, phi: PartialIsometry::new(&t, &t, vec![(p(2), p(0)), (p(4), p(2))]).unwrap() };
        let e2 = GlueEdge { from: 1, to: 2, phi: PartialIsometry::new(&t, &t, vec![(p(1), p(3)), (p(3), p(1))]).unwrap() };
        let vs = ["u", "v", "w"].iter().map(|l| SkeletonVertex { label: l.to_string(), orbit: "Y".into() }).collect();
        GraphOfActions::new(vs, BTreeMap::from([("Y".into(), t)]), vec![e1, e2]).unwrap()
    }

    #[test]
    fn dual_distance_matches_the_dual_tree() {
        let g = chain(1);
        let d = dual_tree(&g).unwrap();
        assert!(validate_tree_metric(&d.tree.distance_table()).unwrap().is_ok());
        let t = g.tree(0);
        for a in 0..3 {
            for b in 0..3 {
                for x in t.vertices() {
                    for y in t.vertices() {
                        let (p, q) = (DualPoint::new(a, TreePoint::Vertex(x)), DualPoint::new(b, TreePoint::Vertex(y)));
                        let dd = dual_distance(&g, &p, &q).unwrap();
                        assert_eq!(dd, d.tree.dist(&d.map(&p), &d.map(&q)));
                        assert_eq!(dd, dual_distance(&g, &q, &p).unwrap());
                    }
                }
            }
        }
        // u:0 to w:0: 2 to reach [2,4], lands on v:0, then 1 to reach [1,3], lands at w:3, then 3
        let far = dual_distance(&g, &DualPoint::new(0, TreePoint::Vertex(VertexId(0))), &DualPoint::new(2, TreePoint::Vertex(VertexId(0)))).unwrap();
        assert_eq!(far, lv(&[6]));
    }

    #[test]
    fn equivalence_classes() {
        let g = chain(1);
        let t = g.tree(0);
        let p = |k: i64| t.point_on_edge(VertexId(0), VertexId(1), lv(&[k])).unwrap();
        let lone = glue_equiv_class(&g, &DualPoint::new(0, p(1))).unwrap();
        assert_eq!((lone.members.len(), lone.diameter), (1, 0));
        let two = glue_equiv_class(&g, &DualPoint::new(1, p(0))).unwrap();
        assert_eq!((two.members.len(), two.links.len(), two.diameter), (2, 1, 1));
        let across = glue_equiv_class(&g, &DualPoint::new(1, p(1))).unwrap();
        assert_eq!((across.members.len(), across.diameter), (3, 2));
        assert!(across.acyclic);
    }

    fn star(k: usize) -> GraphOfActions {
        let c = MetricTree::new(1, &["o", "x"], &[("o", "x", lv(&[1]))]).unwrap();
        let mut vs = vec![SkeletonVertex { label: "c".into(), orbit: "C".into() }];
        let mut edges = Vec::new();
        for i in 0..k {
            vs.push(SkeletonVertex { label: format!("l{i}"), orbit: "C".into() });
            edges.push(GlueEdge {
                from: 0,
                to: i + 1,
                phi: PartialIsometry::new(&c, &c, vec![(TreePoint::Vertex(VertexId(0)), TreePoint::Vertex(VertexId(0)))]).unwrap(),
            });
        }
        GraphOfActions::new(vs, BTreeMap::from([("C".into(), c)]), edges).unwrap()
    }

    #[test]
    fn star_class_has_diameter_two() {
        let g = star(4);
        let c = glue_equiv_class(&g, &DualPoint::new(0, TreePoint::Vertex(VertexId(0)))).unwrap();
        assert_eq!((c.members.len(), c.diameter), (5, 2));
        let leaf = glue_equiv_class(&g, &DualPoint::new(1, TreePoint::Vertex(VertexId(0)))).unwrap();
        assert_eq!(leaf.diameter, 2);
    }

    #[test]
    fn free_criterion_on_point_gluings() {
        let g = star(3);
        let att = BTreeMap::from([("C".to_string(), Attestation::Declared { reason: "trivial stabilizers".into() })]);
        let samples = [DualPoint::new(0, TreePoint::Vertex(VertexId(0))), DualPoint::new(2, TreePoint::Vertex(VertexId(1)))];
        // leaves share the orbit of the centre, but every composite fixes the glue point
        let r = check_free_criterion(&g, &att, &samples).unwrap();
        assert_eq!(r.status, Verdict::Pass, "{r:?}");
        assert!(r.classes.iter().all(|c| c.diameter <= 2));
        let missing = check_free_criterion(&g, &BTreeMap::new(), &samples).unwrap();
        assert_eq!(missing.status, Verdict::Inconclusive);
        assert_eq!(missing.missing_attestations, vec!["C".to_string()]);
    }

    #[test]
    fn translating_composite_fails() {
        // u -> v -> w, u and w in one orbit; the composite shifts [0,6] by 1
        let t = MetricTree::new(1, &["0", "10"], &[("0", "10", lv(&[10]))]).unwrap();
        let p = |k: i64| t.point_on_edge(VertexId(0), VertexId(1), lv(&[k])).unwrap();
        let e1 = GlueEdge { from: 0, to: 1, phi: PartialIsometry::new(&t, &t, vec![(p(0), p(2)), (p(8), p(10))]).unwrap() };
        let e2 = GlueEdge { from: 1, to: 2, phi: PartialIsometry::new(&t, &t, vec![(p(2), p(1)), (p(10), p(9))]).unwrap() };
        let vs = vec![
            SkeletonVertex { label: "u".into(), orbit: "A".into() },
            SkeletonVertex { label: "v".into(), orbit: "B".into() },
            SkeletonVertex { label: "w".into(), orbit: "A".into() },
        ];
        let g = GraphOfActions::new(vs, BTreeMap::from([("A".into(), t.clone()), ("B".into(), t)]), vec![e1, e2]).unwrap();
        let att = BTreeMap::from([
            ("A".to_string(), Attestation::Declared { reason: "free".into() }),
            ("B".to_string(), Attestation::Declared { reason: "free".into() }),
        ]);
        let r = check_free_criterion(&g, &att, &[]).unwrap();
        assert_eq!(r.status, Verdict::Fail);
        assert_eq!(r.witness.unwrap().shift, lv(&[1]));
    }

    fn tripod() -> MetricTree {
        MetricTree::new(1, &["o", "a", "b", "c"], &[("o", "a", lv(&[1])), ("o", "b", lv(&[2])), ("o", "c", lv(&[3]))]).unwrap()
    }

    fn arm(t: &MetricTree, x: &str) -> SubtreeSpec {
        SubtreeSpec::segment(v(t, "o"), v(t, x))
    }

    #[test]
    fn tripod_covering() {
        let t = tripod();
        let c = TransverseCovering::new(t.clone(), vec!["A".into(), "B".into(), "C".into()], vec![arm(&t, "a"), arm(&t, "b"), arm(&t, "c")]).unwrap();
        assert!(transverse_check(&c).is_empty());
        let s = skeleton(&c);
        assert_eq!(s.points, vec!["o".to_string()]);
        assert_eq!(s.subtrees.len(), 3);
        assert!(s.connected && s.acyclic);
        assert_eq!(s.terminal.iter().filter(|x| x.side == Side::Subtree).count(), 3);
    }

    #[test]
    fn covering_violations() {
        let t = tripod();
        let ab = SubtreeSpec::segment(v(&t, "a"), v(&t, "b"));
        let bc = SubtreeSpec::segment(v(&t, "b"), v(&t, "c"));
        let c = TransverseCovering::new(t.clone(), vec!["AB".into(), "BC".into()], vec![ab, bc]).unwrap();
        let out = transverse_check(&c);
        assert!(out.iter().any(|x| matches!(x, CoveringViolation::Overlap { .. })));
        let partial = TransverseCovering::new(t.clone(), vec!["A".into(), "B".into()], vec![arm(&t, "a"), arm(&t, "b")]).unwrap();
        let out = transverse_check(&partial);
        assert_eq!(out, vec![CoveringViolation::Uncovered { edge: ("o".into(), "c".into()), from: lv(&[0]), to: lv(&[3]) }]);
    }

    #[test]
    fn single_member_and_path_skeletons() {
        let t = tripod();
        let all = SubtreeSpec::hull(vec![v(&t, "a"), v(&t, "b"), v(&t, "c")]).unwrap();
        let one = skeleton(&TransverseCovering::new(t, vec!["T".into()], vec![all]).unwrap());
        assert_eq!((one.points.len(), one.subtrees.len(), one.edges.len()), (0, 1, 0));
        let p = MetricTree::new(1, &["x", "y", "z"], &[("x", "y", lv(&[1])), ("y", "z", lv(&[1]))]).unwrap();
        let c = TransverseCovering::new(
            p.clone(),
            vec!["L".into(), "R".into()],
            vec![SubtreeSpec::segment(v(&p, "x"), v(&p, "y")), SubtreeSpec::segment(v(&p, "y"), v(&p, "z"))],
        )
        .unwrap();
        assert!(transverse_check(&c).is_empty());
        let s = skeleton(&c);
        assert_eq!((s.points.len(), s.subtrees.len(), s.edges.len()), (1, 2, 2));
        assert!(s.acyclic);
    }

    fn line_metric(n: usize) -> FiniteLambdaMetric {
        let labels = (0..n).map(|i| i.to_string()).collect();
        let dist = (0..n).map(|i| (0..n).map(|j| lv(&[(i as i64 - j as i64).abs()])).collect()).collect();
        FiniteLambdaMetric::new(1, labels, dist).unwrap()
    }

    #[test]
    fn candidate_line_translation_passes() {
        let m = line_metric(11);
        let shift = LabelMap { name: "a".into(), image: (0..11).map(|i| (i < 10).then_some(i + 1)).collect() };
        let r = validate_candidate_action(&m, &[shift], &WordOracle::free(1), 3).unwrap();
        assert_eq!(r.status, Verdict::Pass, "{r:?}");
        assert_eq!(r.certificate.unwrap().min_positive_length, Some(lv(&[1])));
    }

    #[test]
    fn candidate_perturbed_generator() {
        let m = line_metric(5);
        let bad = LabelMap { name: "a".into(), image: vec![Some(1), Some(2), Some(4), None, None] };
        let r = validate_candidate_action(&m, &[bad], &WordOracle::free(1), 2).unwrap();
        assert_eq!(r.status, Verdict::Fail);
        assert_eq!(r.generators[0].witness, Some(("0".into(), "2".into())));
    }

    #[test]
    fn candidate_four_cycle() {
        let d = |i: usize, j: usize| {
            let k = (i as i64 - j as i64).rem_euclid(4);
            lv(&[k.min(4 - k)])
        };
        let m = FiniteLambdaMetric::new(1, (0..4).map(|i| format!("p{i}")).collect(), (0..4).map(|i| (0..4).map(|j| d(i, j)).collect()).collect()).unwrap();
        let rot = LabelMap { name: "a".into(), image: vec![Some(1), Some(2), Some(3), Some(0)] };
        let r = validate_candidate_action(&m, &[rot], &WordOracle::free(1), 2).unwrap();
        assert_eq!(r.status, Verdict::Fail);
        assert!(matches!(r.metric, TreeMetricVerdict::Violation { .. }));
        assert!(r.certificate.is_none());
    }

    #[test]
    fn document_round_trip() {
        let g = chain(2);
        let doc = g.to_doc();
        let json = serde_json::to_string(&doc).unwrap();
        let back: GraphOfActionsDoc = serde_json::from_str(&json).unwrap();
        let h = back.build().unwrap();
        assert_eq!(h.to_doc(), doc);
    }
}
