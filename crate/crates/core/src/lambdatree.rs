//! Finite Λ-trees with exact lexicographic edge lengths.
//!
//! A [`MetricTree`] is a finite combinatorial tree whose edges carry positive
//! [`LexValue`] lengths. Points are vertices or points in the interior of an
//! edge, measured from the endpoint with the smaller vertex id. Everything
//! else (medians, projections, subtrees) is computed from the path metric.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ordgroup::{half, is_infinitesimal, project_top, LexValue, OrdError};

/// Largest point set accepted by [`validate_tree_metric`].
pub const MAX_METRIC_POINTS: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("tree must have at least one vertex")]
    Empty,
    #[error("duplicate vertex {0:?}")]
    DuplicateVertex(String),
    #[error("unknown vertex {0:?}")]
    UnknownVertex(String),
    #[error("edge {0}--{1} is a loop or duplicate")]
    BadEdge(String, String),
    #[error("edge {u}--{v} has non-positive length {len}")]
    NonPositiveLength { u: String, v: String, len: LexValue },
    #[error("length {len} has rank {got}, context rank is {rank}")]
    RankMismatch { len: LexValue, got: usize, rank: usize },
    #[error("graph is not a tree: {0}")]
    NotATree(String),
    #[error("point is not in this tree: {0}")]
    PointNotInTree(String),
    #[error("offset {offset} outside (0, {len})")]
    OffsetOutOfRange { offset: LexValue, len: LexValue },
    #[error("no edge between {0} and {1}")]
    NoSuchEdge(String, String),
    #[error("subtree has no points")]
    EmptySubtree,
    #[error("{got} points exceed the validator cap of {cap}")]
    TooManyPoints { got: usize, cap: usize },
    #[error("metric axiom violated ({kind}) at {witness:?}")]
    MetricAxiom { kind: MetricAxiom, witness: Vec<String> },
    #[error("length {0} is not integral")]
    NotIntegral(LexValue),
    #[error("operation needs rank >= {need}, tree has rank {rank}")]
    RankTooSmall { need: usize, rank: usize },
    #[error("malformed metric table: {0}")]
    BadTable(String),
    #[error("cannot parse point {0:?}")]
    BadPoint(String),
    #[error(transparent)]
    Ord(#[from] OrdError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricAxiom {
    ZeroDiagonal,
    Symmetry,
    Separation,
    Triangle,
}

impl fmt::Display for MetricAxiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MetricAxiom::ZeroDiagonal => "zero diagonal",
            MetricAxiom::Symmetry => "symmetry",
            MetricAxiom::Separation => "separation",
            MetricAxiom::Triangle => "triangle inequality",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub usize);

/// Edge with `u < v`; interior offsets are measured from `u`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub len: LexValue,
}

impl Edge {
    pub fn other(&self, x: VertexId) -> VertexId {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// A point of the geometric realization.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TreePoint {
    Vertex(VertexId),
    /// `0 < offset < len`, measured from the anchor `edge.u`.
    Interior { edge: EdgeId, offset: LexValue },
}

#[derive(Debug, Clone)]
pub struct MetricTree {
    rank: usize,
    names: Vec<String>,
    index: HashMap<String, VertexId>,
    edges: Vec<Edge>,
    adj: Vec<Vec<(VertexId, EdgeId)>>,
    parent: Vec<Option<VertexId>>,
    level: Vec<usize>,
    root_dist: Vec<LexValue>,
}

impl MetricTree {
    /// Builds and validates a tree from named vertices and edges.
    pub fn new<S: AsRef<str>>(
        rank: usize,
        vertices: &[S],
        edges: &[(S, S, LexValue)],
    ) -> Result<Self, TreeError> {
        let names: Vec<String> = vertices.iter().map(|s| s.as_ref().to_string()).collect();
        let mut index = HashMap::new();
        for (i, n) in names.iter().enumerate() {
            if index.insert(n.clone(), VertexId(i)).is_some() {
                return Err(TreeError::DuplicateVertex(n.clone()));
            }
        }
        let lookup = |s: &str| index.get(s).copied().ok_or_else(|| TreeError::UnknownVertex(s.to_string()));
        let mut indexed = Vec::with_capacity(edges.len());
        for (u, v, len) in edges {
            indexed.push((lookup(u.as_ref())?, lookup(v.as_ref())?, len.clone()));
        }
        Self::from_parts(rank, names, indexed)
    }

    /// Builds from vertex names and index-based edges.
    pub fn from_parts(
        rank: usize,
        names: Vec<String>,
        edges: Vec<(VertexId, VertexId, LexValue)>,
    ) -> Result<Self, TreeError> {
        if rank == 0 {
            return Err(OrdError::ZeroRank.into());
        }
        if names.is_empty() {
            return Err(TreeError::Empty);
        }
        let n = names.len();
        let mut index = HashMap::new();
        for (i, name) in names.iter().enumerate() {
            if index.insert(name.clone(), VertexId(i)).is_some() {
                return Err(TreeError::DuplicateVertex(name.clone()));
            }
        }
        if edges.len() + 1 != n {
            return Err(TreeError::NotATree(format!("{} vertices but {} edges", n, edges.len())));
        }
        let mut adj = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        let mut canon = Vec::with_capacity(edges.len());
        for (i, (a, b, len)) in edges.into_iter().enumerate() {
            if a.0 >= n || b.0 >= n {
                return Err(TreeError::UnknownVertex(format!("#{}", a.0.max(b.0))));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if u == v || !seen.insert((u, v)) {
                return Err(TreeError::BadEdge(names[a.0].clone(), names[b.0].clone()));
            }
            if len.rank() != rank {
                return Err(TreeError::RankMismatch { got: len.rank(), len, rank });
            }
            if !len.is_positive() {
                return Err(TreeError::NonPositiveLength {
                    u: names[u.0].clone(),
                    v: names[v.0].clone(),
                    len,
                });
            }
            adj[u.0].push((v, EdgeId(i)));
            adj[v.0].push((u, EdgeId(i)));
            canon.push(Edge { u, v, len });
        }
        let mut parent = vec![None; n];
        let mut level = vec![usize::MAX; n];
        let mut root_dist = vec![LexValue::zero(rank); n];
        level[0] = 0;
        let mut queue = VecDeque::from([VertexId(0)]);
        while let Some(x) = queue.pop_front() {
            for &(y, e) in &adj[x.0] {
                if level[y.0] == usize::MAX {
                    level[y.0] = level[x.0] + 1;
                    parent[y.0] = Some(x);
                    root_dist[y.0] = &root_dist[x.0] + &canon[e.0].len;
                    queue.push_back(y);
                }
            }
        }
        if level.contains(&usize::MAX) {
            return Err(TreeError::NotATree("graph is disconnected".into()));
        }
        Ok(MetricTree { rank, names, index, edges: canon, adj, parent, level, root_dist })
    }

    /// A single vertex.
    pub fn point(rank: usize, name: &str) -> Self {
        Self::from_parts(rank, vec![name.to_string()], vec![]).expect("single vertex tree")
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.names.len()).map(VertexId)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.0]
    }

    pub fn name(&self, v: VertexId) -> &str {
        &self.names[v.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn vertex(&self, name: &str) -> Result<VertexId, TreeError> {
        self.index.get(name).copied().ok_or_else(|| TreeError::UnknownVertex(name.to_string()))
    }

    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, EdgeId)] {
        &self.adj[v.0]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj[v.0].len()
    }

    pub fn edge_between(&self, a: VertexId, b: VertexId) -> Option<EdgeId> {
        self.adj.get(a.0)?.iter().find(|(y, _)| *y == b).map(|&(_, e)| e)
    }

    /// Point at `offset` from `from` along the edge `from--to`.
    pub fn point_on_edge(&self, from: VertexId, to: VertexId, offset: LexValue) -> Result<TreePoint, TreeError> {
        let e = self
            .edge_between(from, to)
            .ok_or_else(|| TreeError::NoSuchEdge(self.name(from).into(), self.name(to).into()))?;
        let edge = &self.edges[e.0];
        if offset.rank() != self.rank {
            return Err(TreeError::RankMismatch { got: offset.rank(), len: offset, rank: self.rank });
        }
        if offset.is_negative() || offset > edge.len {
            return Err(TreeError::OffsetOutOfRange { offset, len: edge.len.clone() });
        }
        let pos = if from == edge.u { offset } else { &edge.len - &offset };
        Ok(self.make_point(e, pos))
    }

    /// Canonical point at position `pos` (from `edge.u`) on `e`; assumes `0 <= pos <= len`.
    pub(crate) fn make_point(&self, e: EdgeId, pos: LexValue) -> TreePoint {
        let edge = &self.edges[e.0];
        if pos.is_zero() {
            TreePoint::Vertex(edge.u)
        } else if pos == edge.len {
            TreePoint::Vertex(edge.v)
        } else {
            TreePoint::Interior { edge: e, offset: pos }
        }
    }

    pub fn check_point(&self, p: &TreePoint) -> Result<(), TreeError> {
        match p {
            TreePoint::Vertex(v) if v.0 < self.names.len() => Ok(()),
            TreePoint::Vertex(v) => Err(TreeError::PointNotInTree(format!("vertex #{}", v.0))),
            TreePoint::Interior { edge, offset } => {
                let e = self
                    .edges
                    .get(edge.0)
                    .ok_or_else(|| TreeError::PointNotInTree(format!("edge #{}", edge.0)))?;
                if offset.rank() != self.rank {
                    return Err(TreeError::RankMismatch { got: offset.rank(), len: offset.clone(), rank: self.rank });
                }
                if !offset.is_positive() || offset >= &e.len {
                    return Err(TreeError::OffsetOutOfRange { offset: offset.clone(), len: e.len.clone() });
                }
                Ok(())
            }
        }
    }

    fn lca(&self, mut a: VertexId, mut b: VertexId) -> VertexId {
        while self.level[a.0] > self.level[b.0] {
            a = self.parent[a.0].unwrap();
        }
        while self.level[b.0] > self.level[a.0] {
            b = self.parent[b.0].unwrap();
        }
        while a != b {
            a = self.parent[a.0].unwrap();
            b = self.parent[b.0].unwrap();
        }
        a
    }

    pub fn vertex_distance(&self, a: VertexId, b: VertexId) -> LexValue {
        let c = self.lca(a, b);
        let two_c = &self.root_dist[c.0] + &self.root_dist[c.0];
        &(&self.root_dist[a.0] + &self.root_dist[b.0]) - &two_c
    }

    /// Vertices on the path from `a` to `b`, both included.
    pub fn vertex_path(&self, a: VertexId, b: VertexId) -> Vec<VertexId> {
        let c = self.lca(a, b);
        let mut left = vec![a];
        let mut x = a;
        while x != c {
            x = self.parent[x.0].unwrap();
            left.push(x);
        }
        let mut right = Vec::new();
        let mut y = b;
        while y != c {
            right.push(y);
            y = self.parent[y.0].unwrap();
        }
        left.extend(right.into_iter().rev());
        left
    }

    /// Nearby vertices of a point with the distance to each.
    fn stations(&self, p: &TreePoint) -> Vec<(VertexId, LexValue)> {
        match p {
            TreePoint::Vertex(v) => vec![(*v, LexValue::zero(self.rank))],
            TreePoint::Interior { edge, offset } => {
                let e = &self.edges[edge.0];
                vec![(e.u, offset.clone()), (e.v, &e.len - offset)]
            }
        }
    }

    /// Position of `p` along `e` measured from `e.u`, if `p` lies on the closed edge.
    pub fn position_on(&self, p: &TreePoint, e: EdgeId) -> Option<LexValue> {
        let edge = &self.edges[e.0];
        match p {
            TreePoint::Vertex(v) if *v == edge.u => Some(LexValue::zero(self.rank)),
            TreePoint::Vertex(v) if *v == edge.v => Some(edge.len.clone()),
            TreePoint::Interior { edge: f, offset } if *f == e => Some(offset.clone()),
            _ => None,
        }
    }

    /// Path metric. Points are trusted; see [`MetricTree::distance`] for the checked form.
    pub fn dist(&self, x: &TreePoint, y: &TreePoint) -> LexValue {
        if let (TreePoint::Interior { edge: e1, offset: o1 }, TreePoint::Interior { edge: e2, offset: o2 }) = (x, y) {
            if e1 == e2 {
                return (o1 - o2).abs();
            }
        }
        self.best_stations(x, y).2
    }

    fn best_stations(&self, x: &TreePoint, y: &TreePoint) -> (VertexId, VertexId, LexValue) {
        let mut best: Option<(VertexId, VertexId, LexValue)> = None;
        for (a, da) in self.stations(x) {
            for (b, db) in self.stations(y) {
                let d = &(&da + &self.vertex_distance(a, b)) + &db;
                if best.as_ref().is_none_or(|(_, _, bd)| d < *bd) {
                    best = Some((a, b, d));
                }
            }
        }
        best.expect("points have stations")
    }

    pub fn distance(&self, x: &TreePoint, y: &TreePoint) -> Result<LexValue, TreeError> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.dist(x, y))
    }

    /// The geodesic `[x, y]` as a list of break points: `x`, the vertices crossed, `y`.
    pub fn geodesic(&self, x: &TreePoint, y: &TreePoint) -> Vec<TreePoint> {
        if x == y {
            return vec![x.clone()];
        }
        if let (TreePoint::Interior { edge: e1, .. }, TreePoint::Interior { edge: e2, .. }) = (x, y) {
            if e1 == e2 {
                return vec![x.clone(), y.clone()];
            }
        }
        let (a, b, _) = self.best_stations(x, y);
        let mut out = vec![x.clone()];
        for v in self.vertex_path(a, b) {
            let p = TreePoint::Vertex(v);
            if out.last() != Some(&p) {
                out.push(p);
            }
        }
        if out.last() != Some(y) {
            out.push(y.clone());
        }
        out
    }

    fn common_edge(&self, s: &TreePoint, t: &TreePoint) -> EdgeId {
        match (s, t) {
            (TreePoint::Interior { edge, .. }, _) | (_, TreePoint::Interior { edge, .. }) => *edge,
            (TreePoint::Vertex(a), TreePoint::Vertex(b)) => {
                self.edge_between(*a, *b).expect("consecutive geodesic vertices are adjacent")
            }
        }
    }

    /// The point of `[x, y]` at distance `t` from `x`; `None` when `t` is outside `[0, d(x, y)]`.
    pub fn point_at(&self, x: &TreePoint, y: &TreePoint, t: &LexValue) -> Option<TreePoint> {
        if t.is_negative() {
            return None;
        }
        let stops = self.geodesic(x, y);
        let mut acc = LexValue::zero(self.rank);
        if t.is_zero() {
            return Some(x.clone());
        }
        for w in stops.windows(2) {
            let step = self.dist(&w[0], &w[1]);
            let next = &acc + &step;
            if *t == next {
                return Some(w[1].clone());
            }
            if *t < next {
                let e = self.common_edge(&w[0], &w[1]);
                let p0 = self.position_on(&w[0], e).unwrap();
                let p1 = self.position_on(&w[1], e).unwrap();
                let along = t - &acc;
                let pos = if p1 > p0 { &p0 + &along } else { &p0 - &along };
                return Some(self.make_point(e, pos));
            }
            acc = next;
        }
        None
    }

    pub fn midpoint(&self, x: &TreePoint, y: &TreePoint) -> TreePoint {
        self.point_at(x, y, &half(&self.dist(x, y))).expect("midpoint lies on the geodesic")
    }

    /// True when `m` lies on `[x, y]`.
    pub fn on_geodesic(&self, x: &TreePoint, m: &TreePoint, y: &TreePoint) -> bool {
        &self.dist(x, m) + &self.dist(m, y) == self.dist(x, y)
    }

    pub fn point_name(&self, p: &TreePoint) -> String {
        match p {
            TreePoint::Vertex(v) => self.names[v.0].clone(),
            TreePoint::Interior { edge, offset } => {
                let e = &self.edges[edge.0];
                let coords: Vec<String> = offset.coords().iter().map(crate::ordgroup::format_rat).collect();
                format!("{}..{}@{}", self.names[e.u.0], self.names[e.v.0], coords.join(","))
            }
        }
    }

    /// Parses `A` (a vertex) or `A..B@c1,c2,...` (offset from `A` toward `B`).
    pub fn parse_point(&self, s: &str) -> Result<TreePoint, TreeError> {
        let s = s.trim();
        match s.split_once("..") {
            None => Ok(TreePoint::Vertex(self.vertex(s)?)),
            Some((a, rest)) => {
                let (b, coords) = rest.split_once('@').ok_or_else(|| TreeError::BadPoint(s.to_string()))?;
                let coords = coords
                    .split(',')
                    .map(crate::ordgroup::parse_rat)
                    .collect::<Result<Vec<_>, _>>()?;
                let offset = LexValue::new(coords)?;
                self.point_on_edge(self.vertex(a)?, self.vertex(b)?, offset)
            }
        }
    }

    /// All pairwise vertex distances, labelled by vertex name.
    pub fn distance_table(&self) -> FiniteLambdaMetric {
        let pts: Vec<TreePoint> = self.vertices().map(TreePoint::Vertex).collect();
        self.metric_on(&pts)
    }

    /// Restriction of the metric to the given points.
    pub fn metric_on(&self, pts: &[TreePoint]) -> FiniteLambdaMetric {
        let labels = pts.iter().map(|p| self.point_name(p)).collect();
        let dist = pts.iter().map(|p| pts.iter().map(|q| self.dist(p, q)).collect()).collect();
        FiniteLambdaMetric { rank: self.rank, labels, dist }
    }
}

/// Median of three points: the unique point on all three geodesics.
pub fn median(t: &MetricTree, x: &TreePoint, y: &TreePoint, z: &TreePoint) -> TreePoint {
    let dxy = t.dist(x, y);
    let dxz = t.dist(x, z);
    let dyz = t.dist(y, z);
    let gromov = half(&(&(&dxy + &dxz) - &dyz));
    t.point_at(x, y, &gromov).expect("Gromov product lies in [0, d(x,y)]")
}

/// Closed subtree given as the convex hull of finitely many points.
///
/// Clipped intervals always include their endpoints, so every value of this type
/// is a closed subtree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubtreeSpec {
    generators: Vec<TreePoint>,
}

/// Portion of an edge covered by a subtree, as positions from `edge.u`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clip {
    pub edge: EdgeId,
    pub lo: LexValue,
    pub hi: LexValue,
}

impl SubtreeSpec {
    pub fn hull(generators: Vec<TreePoint>) -> Result<Self, TreeError> {
        if generators.is_empty() {
            return Err(TreeError::EmptySubtree);
        }
        let mut gens = Vec::new();
        for g in generators {
            if !gens.contains(&g) {
                gens.push(g);
            }
        }
        Ok(SubtreeSpec { generators: gens })
    }

    pub fn point(p: TreePoint) -> Self {
        SubtreeSpec { generators: vec![p] }
    }

    pub fn segment(a: TreePoint, b: TreePoint) -> Self {
        Self::hull(vec![a, b]).expect("two points")
    }

    pub fn generators(&self) -> &[TreePoint] {
        &self.generators
    }

    pub fn check(&self, t: &MetricTree) -> Result<(), TreeError> {
        self.generators.iter().try_for_each(|g| t.check_point(g))
    }

    pub fn contains(&self, t: &MetricTree, x: &TreePoint) -> bool {
        let p0 = &self.generators[0];
        self.generators.iter().any(|pi| t.on_geodesic(p0, x, pi))
    }

    pub fn is_degenerate(&self, t: &MetricTree) -> bool {
        let p0 = &self.generators[0];
        self.generators.iter().all(|g| t.dist(p0, g).is_zero())
    }

    /// Vertices of the tree lying in the subtree.
    pub fn vertices(&self, t: &MetricTree) -> BTreeSet<VertexId> {
        t.vertices().filter(|v| self.contains(t, &TreePoint::Vertex(*v))).collect()
    }

    /// Covered part of every edge the subtree meets in more than one point.
    pub fn clips(&self, t: &MetricTree) -> Vec<Clip> {
        let mut out = Vec::new();
        for (i, e) in t.edges().iter().enumerate() {
            let id = EdgeId(i);
            let mut pos: Vec<LexValue> = Vec::new();
            if self.contains(t, &TreePoint::Vertex(e.u)) {
                pos.push(LexValue::zero(t.rank()));
            }
            if self.contains(t, &TreePoint::Vertex(e.v)) {
                pos.push(e.len.clone());
            }
            for g in &self.generators {
                if let TreePoint::Interior { edge, offset } = g {
                    if *edge == id {
                        pos.push(offset.clone());
                    }
                }
            }
            if let (Some(lo), Some(hi)) = (pos.iter().min().cloned(), pos.iter().max().cloned()) {
                if lo < hi {
                    out.push(Clip { edge: id, lo, hi });
                }
            }
        }
        out
    }

    /// Nearest point projection (the foot of the bridge from `x`).
    pub fn project(&self, t: &MetricTree, x: &TreePoint) -> TreePoint {
        let p0 = &self.generators[0];
        let mut best = p0.clone();
        let mut best_d = LexValue::zero(t.rank());
        for pi in &self.generators[1..] {
            let m = median(t, p0, pi, x);
            let d = t.dist(p0, &m);
            if d > best_d {
                best_d = d;
                best = m;
            }
        }
        best
    }
}

pub fn project_to_closed_subtree(
    t: &MetricTree,
    y: &SubtreeSpec,
    x: &TreePoint,
) -> Result<TreePoint, TreeError> {
    y.check(t)?;
    t.check_point(x)?;
    Ok(y.project(t, x))
}

/// Intersection of two segments, or `None` when disjoint.
pub fn segment_intersection(
    t: &MetricTree,
    (a, b): (&TreePoint, &TreePoint),
    (c, d): (&TreePoint, &TreePoint),
) -> Option<(TreePoint, TreePoint)> {
    let s = SubtreeSpec::segment(a.clone(), b.clone());
    let p = s.project(t, c);
    let q = s.project(t, d);
    if p != q {
        return Some((p, q));
    }
    if t.on_geodesic(c, &p, d) {
        Some((p.clone(), p))
    } else {
        None
    }
}

/// Symmetric table of Λ-distances between labelled points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteLambdaMetric {
    pub rank: usize,
    pub labels: Vec<String>,
    pub dist: Vec<Vec<LexValue>>,
}

impl FiniteLambdaMetric {
    pub fn new(rank: usize, labels: Vec<String>, dist: Vec<Vec<LexValue>>) -> Result<Self, TreeError> {
        let m = FiniteLambdaMetric { rank, labels, dist };
        m.check_shape()?;
        Ok(m)
    }

    pub fn check_shape(&self) -> Result<(), TreeError> {
        let n = self.labels.len();
        if self.dist.len() != n || self.dist.iter().any(|r| r.len() != n) {
            return Err(TreeError::BadTable(format!("expected a {n}x{n} table")));
        }
        for v in self.dist.iter().flatten() {
            if v.rank() != self.rank {
                return Err(TreeError::RankMismatch { got: v.rank(), len: v.clone(), rank: self.rank });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn d(&self, i: usize, j: usize) -> &LexValue {
        &self.dist[i][j]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum TreeMetricVerdict {
    /// Every quadruple satisfies the four-point condition. Over `Q^n` the
    /// divisibility condition `d(x,y) + d(y,z) - d(x,z) in 2Λ` always holds.
    Ok { points: usize, quadruples_checked: u64, divisibility: &'static str },
    /// `d(x,y) + d(u,v) > max(d(x,u) + d(y,v), d(x,v) + d(y,u))` for `witness = [x, y, u, v]`.
    Violation { witness: [String; 4], lhs: LexValue, rhs: LexValue },
}

impl TreeMetricVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, TreeMetricVerdict::Ok { .. })
    }
}

/// Checks the metric axioms, then the four-point condition on every quadruple.
pub fn validate_tree_metric(m: &FiniteLambdaMetric) -> Result<TreeMetricVerdict, TreeError> {
    m.check_shape()?;
    let n = m.len();
    if n > MAX_METRIC_POINTS {
        return Err(TreeError::TooManyPoints { got: n, cap: MAX_METRIC_POINTS });
    }
    let lab = |ix: &[usize]| ix.iter().map(|&i| m.labels[i].clone()).collect::<Vec<_>>();
    let axiom = |kind, ix: &[usize]| Err(TreeError::MetricAxiom { kind, witness: lab(ix) });
    for i in 0..n {
        if !m.d(i, i).is_zero() {
            return axiom(MetricAxiom::ZeroDiagonal, &[i]);
        }
        for j in 0..n {
            if m.d(i, j) != m.d(j, i) {
                return axiom(MetricAxiom::Symmetry, &[i, j]);
            }
            if i != j && !m.d(i, j).is_positive() {
                return axiom(MetricAxiom::Separation, &[i, j]);
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if m.d(i, k) > &(m.d(i, j) + m.d(j, k)) {
                    return axiom(MetricAxiom::Triangle, &[i, j, k]);
                }
            }
        }
    }
    let mut checked = 0u64;
    for x in 0..n {
        for y in x + 1..n {
            for u in y + 1..n {
                for v in u + 1..n {
                    checked += 1;
                    // the three pairings of {x, y, u, v}
                    let pairings = [
                        ([x, y, u, v], m.d(x, y) + m.d(u, v)),
                        ([x, u, y, v], m.d(x, u) + m.d(y, v)),
                        ([x, v, y, u], m.d(x, v) + m.d(y, u)),
                    ];
                    for (i, (w, s)) in pairings.iter().enumerate() {
                        let others = pairings
                            .iter()
                            .enumerate()
                            .filter(|(j, _)| *j != i)
                            .map(|(_, (_, t))| t.clone())
                            .max()
                            .unwrap();
                        if *s > others {
                            let w = lab(w);
                            return Ok(TreeMetricVerdict::Violation {
                                witness: [w[0].clone(), w[1].clone(), w[2].clone(), w[3].clone()],
                                lhs: s.clone(),
                                rhs: others,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(TreeMetricVerdict::Ok { points: n, quadruples_checked: checked, divisibility: "vacuous over Q^n" })
}

fn fresh_name(t: &MetricTree, base: &str) -> String {
    if t.vertex(base).is_err() {
        return base.to_string();
    }
    (1..).map(|i| format!("{base}#{i}")).find(|n| t.vertex(n).is_err()).unwrap()
}

/// Makes `x` a vertex. Existing vertex ids are preserved and the new vertex is appended.
pub fn subdivide(t: &MetricTree, x: &TreePoint) -> Result<(MetricTree, VertexId), TreeError> {
    let (tree, ids) = subdivide_all(t, std::slice::from_ref(x))?;
    Ok((tree, ids[0]))
}

/// Subdivides at every listed point; returns the vertex id of each point in the new tree.
pub fn subdivide_all(t: &MetricTree, pts: &[TreePoint]) -> Result<(MetricTree, Vec<VertexId>), TreeError> {
    for p in pts {
        t.check_point(p)?;
    }
    let mut cuts: BTreeMap<EdgeId, BTreeSet<LexValue>> = BTreeMap::new();
    for p in pts {
        if let TreePoint::Interior { edge, offset } = p {
            cuts.entry(*edge).or_default().insert(offset.clone());
        }
    }
    if cuts.is_empty() {
        let ids = pts.iter().map(|p| match p {
            TreePoint::Vertex(v) => *v,
            TreePoint::Interior { .. } => unreachable!(),
        });
        return Ok((t.clone(), ids.collect()));
    }
    let mut names = t.names.clone();
    let mut edges = Vec::new();
    let mut new_ids: HashMap<(EdgeId, LexValue), VertexId> = HashMap::new();
    let mut scratch = t.clone();
    for (i, e) in t.edges.iter().enumerate() {
        let id = EdgeId(i);
        match cuts.get(&id) {
            None => edges.push((e.u, e.v, e.len.clone())),
            Some(offsets) => {
                let mut prev = e.u;
                let mut prev_pos = LexValue::zero(t.rank);
                for off in offsets {
                    let name = fresh_name(&scratch, &t.point_name(&TreePoint::Interior { edge: id, offset: off.clone() }));
                    let v = VertexId(names.len());
                    names.push(name.clone());
                    scratch.index.insert(name, v);
                    edges.push((prev, v, off - &prev_pos));
                    new_ids.insert((id, off.clone()), v);
                    prev = v;
                    prev_pos = off.clone();
                }
                edges.push((prev, e.v, &e.len - &prev_pos));
            }
        }
    }
    let tree = MetricTree::from_parts(t.rank, names, edges)?;
    let ids = pts
        .iter()
        .map(|p| match p {
            TreePoint::Vertex(v) => *v,
            TreePoint::Interior { edge, offset } => new_ids[&(*edge, offset.clone())],
        })
        .collect();
    Ok((tree, ids))
}

/// Re-expresses a point of `old` in a subdivision `new` of it (same vertex ids, edges split).
pub fn transfer_point(old: &MetricTree, new: &MetricTree, p: &TreePoint) -> TreePoint {
    match p {
        TreePoint::Vertex(v) => TreePoint::Vertex(*v),
        TreePoint::Interior { edge, offset } => {
            let e = old.edge(*edge);
            let start = TreePoint::Vertex(e.u);
            let end = TreePoint::Vertex(e.v);
            new.point_at(&start, &end, offset).expect("offset inside the subdivided edge")
        }
    }
}

/// Contracts infinitesimal edges and keeps the leading coordinate of the rest.
///
/// Returns the rank-1 quotient tree and the class of every original vertex.
pub fn kill_infinitesimals(t: &MetricTree) -> Result<(MetricTree, Vec<VertexId>), TreeError> {
    if t.rank < 2 {
        return Err(TreeError::RankTooSmall { need: 2, rank: t.rank });
    }
    let n = t.vertex_count();
    let mut root: Vec<usize> = (0..n).collect();
    fn find(root: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while root[r] != r {
            r = root[r];
        }
        let mut y = x;
        while root[y] != r {
            let next = root[y];
            root[y] = r;
            y = next;
        }
        r
    }
    for e in &t.edges {
        if is_infinitesimal(&e.len) {
            let a = find(&mut root, e.u.0);
            let b = find(&mut root, e.v.0);
            // keep the smaller id as representative
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            root[hi] = lo;
        }
    }
    let mut class_of_rep: BTreeMap<usize, VertexId> = BTreeMap::new();
    let mut names = Vec::new();
    let mut map = Vec::with_capacity(n);
    for v in 0..n {
        let r = find(&mut root, v);
        let id = *class_of_rep.entry(r).or_insert_with(|| {
            names.push(t.names[r].clone());
            VertexId(names.len() - 1)
        });
        map.push(id);
    }
    let edges = t
        .edges
        .iter()
        .filter(|e| !is_infinitesimal(&e.len))
        .map(|e| Ok((map[e.u.0], map[e.v.0], project_top(&e.len, 1)?)))
        .collect::<Result<Vec<_>, TreeError>>()?;
    Ok((MetricTree::from_parts(1, names, edges)?, map))
}

/// Base change from integral lengths into the divisible group `Q^n`.
///
/// The data is unchanged; the returned tree admits midpoints of every segment.
pub fn embed_scalars(t: &MetricTree) -> Result<MetricTree, TreeError> {
    if let Some(e) = t.edges.iter().find(|e| !e.len.is_integral()) {
        return Err(TreeError::NotIntegral(e.len.clone()));
    }
    Ok(t.clone())
}

/// Tree document: `{"rank": n, "vertices": [...], "edges": [{"u", "v", "len"}]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct TreeDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub rank: usize,
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct EdgeDoc {
    pub u: String,
    pub v: String,
    pub len: LexValue,
}

impl TreeDoc {
    pub fn build(&self) -> Result<MetricTree, TreeError> {
        let edges: Vec<(String, String, LexValue)> =
            self.edges.iter().map(|e| (e.u.clone(), e.v.clone(), e.len.clone())).collect();
        MetricTree::new(self.rank, &self.vertices, &edges)
    }
}

impl From<&MetricTree> for TreeDoc {
    fn from(t: &MetricTree) -> Self {
        TreeDoc {
            schema: None,
            rank: t.rank,
            vertices: t.names.clone(),
            edges: t
                .edges
                .iter()
                .map(|e| EdgeDoc { u: t.names[e.u.0].clone(), v: t.names[e.v.0].clone(), len: e.len.clone() })
                .collect(),
        }
    }
}

/// A point inside a document: a vertex name or an offset along an edge.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(untagged)]
pub enum PointDoc {
    Vertex(String),
    OnEdge { from: String, to: String, offset: LexValue },
}

impl PointDoc {
    pub fn resolve(&self, t: &MetricTree) -> Result<TreePoint, TreeError> {
        match self {
            PointDoc::Vertex(v) => Ok(TreePoint::Vertex(t.vertex(v)?)),
            PointDoc::OnEdge { from, to, offset } => t.point_on_edge(t.vertex(from)?, t.vertex(to)?, offset.clone()),
        }
    }

    pub fn from_point(t: &MetricTree, p: &TreePoint) -> Self {
        match p {
            TreePoint::Vertex(v) => PointDoc::Vertex(t.name(*v).to_string()),
            TreePoint::Interior { edge, offset } => {
                let e = t.edge(*edge);
                PointDoc::OnEdge { from: t.name(e.u).into(), to: t.name(e.v).into(), offset: offset.clone() }
            }
        }
    }
}
