//! Partial isometries of finite tree windows, classification by the midpoint
//! method, axes, and free-action certification on word balls.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::groups::{reduced_words, Alphabet, Word, WordOracle};
use crate::lambdatree::{segment_intersection, MetricTree, SubtreeSpec, TreeError, TreePoint};
use crate::ordgroup::{LexValue, Rat};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IsometryError {
    #[error("map is not distance preserving: d({0}, {1}) changes")]
    NotIsometric(String, String),
    #[error("partial isometry needs at least one anchor")]
    NoAnchors,
    #[error("unknown generator label {0:?}")]
    UnknownLabel(char),
    #[error("a generator is missing for label {0:?}")]
    MissingGenerator(char),
    #[error("{0} leaves the window after the prefix {1:?}")]
    OutOfWindow(String, String),
    #[error("axis sample is not linear at j = {0}")]
    NotLinear(i64),
    #[error("word {0} is not hyperbolic here")]
    NotHyperbolic(String),
    #[error("classification is inconclusive: {0}")]
    Inconclusive(String),
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// An isometry between the hull of finitely many source points and the hull of
/// their images. Source and target trees are supplied on use, so the same map
/// can act within one tree or between two.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialIsometry {
    anchors: Vec<(TreePoint, TreePoint)>,
}

impl PartialIsometry {
    pub fn new(src: &MetricTree, dst: &MetricTree, anchors: Vec<(TreePoint, TreePoint)>) -> Result<Self, IsometryError> {
        if anchors.is_empty() {
            return Err(IsometryError::NoAnchors);
        }
        for (a, b) in &anchors {
            src.check_point(a)?;
            dst.check_point(b)?;
        }
        for (i, (a, ga)) in anchors.iter().enumerate() {
            for (b, gb) in &anchors[..i] {
                if src.dist(a, b) != dst.dist(ga, gb) {
                    return Err(IsometryError::NotIsometric(src.point_name(a), src.point_name(b)));
                }
            }
        }
        let map = PartialIsometry { anchors };
        let dom = map.domain();
        let verts: Vec<TreePoint> = dom.vertices(src).into_iter().map(TreePoint::Vertex).collect();
        let imgs: Vec<TreePoint> = verts.iter().map(|v| map.apply(src, dst, v).unwrap()).collect();
        for i in 0..verts.len() {
            for j in 0..i {
                if src.dist(&verts[i], &verts[j]) != dst.dist(&imgs[i], &imgs[j]) {
                    return Err(IsometryError::NotIsometric(src.point_name(&verts[i]), src.point_name(&verts[j])));
                }
            }
        }
        Ok(map)
    }

    pub fn identity_on(points: Vec<TreePoint>) -> Self {
        PartialIsometry { anchors: points.into_iter().map(|p| (p.clone(), p)).collect() }
    }

    /// Translation by `shift` along `[a, b]`, toward `b`.
    pub fn translation(t: &MetricTree, a: &TreePoint, b: &TreePoint, shift: &LexValue) -> Result<Self, IsometryError> {
        let d = t.dist(a, b);
        let start = t.point_at(a, b, shift).ok_or_else(|| IsometryError::OutOfWindow("translation".into(), String::new()))?;
        let end = t.point_at(a, b, &(&d - shift)).unwrap();
        Self::new(t, t, vec![(a.clone(), start), (end, b.clone())])
    }

    pub fn anchors(&self) -> &[(TreePoint, TreePoint)] {
        &self.anchors
    }

    pub fn domain(&self) -> SubtreeSpec {
        SubtreeSpec::hull(self.anchors.iter().map(|a| a.0.clone()).collect()).unwrap()
    }

    pub fn image(&self) -> SubtreeSpec {
        SubtreeSpec::hull(self.anchors.iter().map(|a| a.1.clone()).collect()).unwrap()
    }

    pub fn inverse(&self) -> Self {
        PartialIsometry { anchors: self.anchors.iter().map(|(a, b)| (b.clone(), a.clone())).collect() }
    }

    /// Image of `x`, or `None` outside the domain.
    pub fn apply(&self, src: &MetricTree, dst: &MetricTree, x: &TreePoint) -> Option<TreePoint> {
        let (s0, g0) = &self.anchors[0];
        if x == s0 {
            return Some(g0.clone());
        }
        for (si, gi) in &self.anchors[1..] {
            if src.on_geodesic(s0, x, si) {
                return dst.point_at(g0, gi, &src.dist(s0, x));
            }
        }
        None
    }
}

/// Generators acting by partial isometries on one window.
#[derive(Debug, Clone)]
pub struct ActionWindow {
    pub tree: MetricTree,
    pub alphabet: Alphabet,
    gens: Vec<PartialIsometry>,
    invs: Vec<PartialIsometry>,
    pub oracle: Option<WordOracle>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum IsomClass {
    Elliptic { fixed: String },
    Hyperbolic { length: LexValue, axis: [String; 2] },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Classification {
    Elliptic(TreePoint),
    Hyperbolic { length: LexValue, from: TreePoint, to: TreePoint },
    Inconclusive(String),
}

impl Classification {
    pub fn length(&self, rank: usize) -> Option<LexValue> {
        match self {
            Classification::Elliptic(_) => Some(LexValue::zero(rank)),
            Classification::Hyperbolic { length, .. } => Some(length.clone()),
            Classification::Inconclusive(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AxisRelation {
    SameOnOverlap,
    DifferentAxes,
    Inconclusive(String),
}

impl ActionWindow {
    pub fn new(tree: MetricTree, alphabet: Alphabet, gens: Vec<PartialIsometry>) -> Result<Self, IsometryError> {
        if gens.len() != alphabet.len() {
            let missing = alphabet.labels().get(gens.len()).copied().unwrap_or('?');
            return Err(IsometryError::MissingGenerator(missing));
        }
        let invs = gens.iter().map(PartialIsometry::inverse).collect();
        Ok(ActionWindow { tree, alphabet, gens, invs, oracle: None })
    }

    pub fn with_oracle(mut self, oracle: WordOracle) -> Self {
        self.oracle = Some(oracle);
        self
    }

    pub fn generators(&self) -> &[PartialIsometry] {
        &self.gens
    }

    pub fn rank(&self) -> usize {
        self.tree.rank()
    }

    pub fn parse(&self, w: &str) -> Result<Word, IsometryError> {
        self.alphabet.parse(w).map_err(|e| match e {
            crate::groups::GroupError::UnknownLetter(c) => IsometryError::UnknownLabel(c),
            other => IsometryError::Inconclusive(other.to_string()),
        })
    }

    /// Applies the letters of `w` in reading order.
    pub fn apply_word(&self, w: &Word, x: &TreePoint) -> Result<TreePoint, IsometryError> {
        self.tree.check_point(x)?;
        let mut p = x.clone();
        for (i, l) in w.letters().iter().enumerate() {
            if l.gen >= self.gens.len() {
                return Err(IsometryError::UnknownLabel('?'));
            }
            let g = if l.inv { &self.invs[l.gen] } else { &self.gens[l.gen] };
            p = g.apply(&self.tree, &self.tree, &p).ok_or_else(|| {
                IsometryError::OutOfWindow(self.tree.point_name(x), self.alphabet.format(&Word(w.letters()[..=i].to_vec())))
            })?;
        }
        Ok(p)
    }

    fn power(&self, w: &Word, j: i64, x: &TreePoint) -> Result<TreePoint, IsometryError> {
        self.apply_word(&w.pow(j), x)
    }

    pub fn classify(&self, w: &Word, x: &TreePoint) -> Result<Classification, IsometryError> {
        let wx = self.apply_word(w, x)?;
        let m = self.tree.midpoint(x, &wx);
        let wm = match self.apply_word(w, &m) {
            Ok(p) => p,
            Err(IsometryError::OutOfWindow(..)) => {
                return Ok(Classification::Inconclusive(format!(
                    "{} maps the midpoint {} out of the window",
                    self.alphabet.format(w),
                    self.tree.point_name(&m)
                )))
            }
            Err(e) => return Err(e),
        };
        let l = self.tree.dist(&m, &wm);
        Ok(if l.is_zero() {
            Classification::Elliptic(m)
        } else {
            Classification::Hyperbolic { length: l, from: m, to: wm }
        })
    }

    pub fn describe(&self, c: &Classification) -> Option<IsomClass> {
        match c {
            Classification::Elliptic(p) => Some(IsomClass::Elliptic { fixed: self.tree.point_name(p) }),
            Classification::Hyperbolic { length, from, to } => Some(IsomClass::Hyperbolic {
                length: length.clone(),
                axis: [self.tree.point_name(from), self.tree.point_name(to)],
            }),
            Classification::Inconclusive(_) => None,
        }
    }

    /// `[w⁻ᵏ m, wᵏ m]` for the midpoint `m` of `[x, w x]`, checked to be linear.
    pub fn axis_sample(&self, w: &Word, x: &TreePoint, k: i64) -> Result<(TreePoint, TreePoint), IsometryError> {
        let m = match self.classify(w, x)? {
            Classification::Hyperbolic { from, .. } => from,
            Classification::Inconclusive(r) => return Err(IsometryError::Inconclusive(r)),
            Classification::Elliptic(_) => return Err(IsometryError::NotHyperbolic(self.alphabet.format(w))),
        };
        let k = k.abs();
        let pts = (-k..=k).map(|j| self.power(w, j, &m)).collect::<Result<Vec<_>, _>>()?;
        for (j, tri) in pts.windows(3).enumerate() {
            if !self.tree.on_geodesic(&tri[0], &tri[1], &tri[2]) {
                return Err(IsometryError::NotLinear(j as i64 - k + 1));
            }
        }
        if k > 0 && !self.tree.on_geodesic(&pts[0], &pts[1], &pts[pts.len() - 1]) {
            return Err(IsometryError::NotLinear(-k));
        }
        Ok((pts[0].clone(), pts[pts.len() - 1].clone()))
    }

    /// Whether the axis samples of `w1` and `w2` lie on one line.
    pub fn same_axis_test(&self, w1: &Word, w2: &Word, x: &TreePoint) -> AxisRelation {
        let samples = [w1, w2].map(|w| self.axis_sample(w, x, 1));
        let (s1, s2) = match samples {
            [Ok(a), Ok(b)] => (a, b),
            [Err(e), _] | [_, Err(e)] => return AxisRelation::Inconclusive(e.to_string()),
        };
        let hull = SubtreeSpec::hull(vec![s1.0.clone(), s1.1.clone(), s2.0.clone(), s2.1.clone()]).unwrap();
        let ends = [&s1.0, &s1.1, &s2.0, &s2.1];
        let (mut a, mut b) = (ends[0], ends[1]);
        for p in ends {
            for q in ends {
                if self.tree.dist(p, q) > self.tree.dist(a, b) {
                    a = p;
                    b = q;
                }
            }
        }
        let linear = ends.iter().all(|p| self.tree.on_geodesic(a, p, b));
        debug_assert!(hull.contains(&self.tree, a));
        match (linear, segment_intersection(&self.tree, (&s1.0, &s1.1), (&s2.0, &s2.1))) {
            (true, Some(_)) => AxisRelation::SameOnOverlap,
            _ => AxisRelation::DifferentAxes,
        }
    }

    /// `(d(x, wᵏx), 2 d(x, p) + |k| l(w))` with `p` the projection of `x` to the axis sample.
    pub fn displacement(&self, w: &Word, x: &TreePoint, k: i64) -> Result<(LexValue, LexValue), IsometryError> {
        let (length, sample) = match self.classify(w, x)? {
            Classification::Hyperbolic { length, .. } => (length, self.axis_sample(w, x, 1)?),
            Classification::Elliptic(m) => (LexValue::zero(self.rank()), (m.clone(), m)),
            Classification::Inconclusive(r) => return Err(IsometryError::Inconclusive(r)),
        };
        let lhs = self.tree.dist(x, &self.power(w, k, x)?);
        let p = SubtreeSpec::segment(sample.0, sample.1).project(&self.tree, x);
        let dxp = self.tree.dist(x, &p);
        let rhs = &(&dxp + &dxp) + &crate::ordgroup::scale(&length, &Rat::from_integer(k.abs().into()));
        Ok((lhs, rhs))
    }
}

/// Computes translation lengths of words; `Err` marks an inconclusive word.
pub trait LengthOracle: Sync {
    fn rank(&self) -> usize;
    fn length(&self, w: &Word) -> Result<LexValue, String>;
}

pub trait TrivialityOracle: Sync {
    fn is_trivial(&self, w: &Word) -> bool;
}

impl TrivialityOracle for WordOracle {
    fn is_trivial(&self, w: &Word) -> bool {
        WordOracle::is_trivial(self, w)
    }
}

/// Lengths measured in a window from a fixed basepoint.
pub struct WindowLengths<'a> {
    pub window: &'a ActionWindow,
    pub basepoint: TreePoint,
}

impl LengthOracle for WindowLengths<'_> {
    fn rank(&self) -> usize {
        self.window.rank()
    }

    fn length(&self, w: &Word) -> Result<LexValue, String> {
        match self.window.classify(w, &self.basepoint) {
            Ok(c) => c.length(self.window.rank()).ok_or_else(|| match c {
                Classification::Inconclusive(r) => r,
                _ => unreachable!(),
            }),
            Err(e) => Err(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertStatus {
    FreeOnBall,
    Counterexample,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Certificate {
    #[serde(rename = "N")]
    pub n: usize,
    pub words_checked: usize,
    pub relations: Vec<String>,
    pub min_positive_length: Option<LexValue>,
    pub status: CertStatus,
    pub counterexample: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inconclusive: Option<InconclusiveWord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InconclusiveWord {
    pub word: String,
    pub reason: String,
}

enum Outcome {
    Relation,
    Length(LexValue),
    Unknown(String),
}

/// Checks every nonempty freely reduced word of length `<= n`.
///
/// Only the length-lexicographically smaller of `w`, `w⁻¹` is evaluated.
/// Events are merged in length-lexicographic order, so the report does not
/// depend on scheduling: the first inconclusive word aborts, the first
/// nontrivial word of length 0 is the counterexample.
pub fn certify_free_on_ball(
    lengths: &dyn LengthOracle,
    triviality: &dyn TrivialityOracle,
    alphabet: &Alphabet,
    n: usize,
) -> Certificate {
    let words: Vec<Word> = reduced_words(alphabet.len(), n)
        .into_iter()
        .skip(1)
        .filter(|w| *w <= w.inverse())
        .collect();
    let outcomes: Vec<Outcome> = words
        .par_iter()
        .map(|w| {
            if triviality.is_trivial(w) {
                return Outcome::Relation;
            }
            match lengths.length(w) {
                Ok(l) => Outcome::Length(l),
                Err(r) => Outcome::Unknown(r),
            }
        })
        .collect();
    let mut cert = Certificate {
        n,
        words_checked: 0,
        relations: Vec::new(),
        min_positive_length: None,
        status: CertStatus::FreeOnBall,
        counterexample: None,
        inconclusive: None,
    };
    let mut relations = Vec::new();
    for (w, o) in words.iter().zip(outcomes) {
        let pair = if *w == w.inverse() { 1 } else { 2 };
        match o {
            Outcome::Relation => {
                relations.push(w.clone());
                if pair == 2 {
                    relations.push(w.inverse());
                }
            }
            Outcome::Length(l) if l.is_positive() => {
                if cert.min_positive_length.as_ref().is_none_or(|m| l < *m) {
                    cert.min_positive_length = Some(l);
                }
            }
            Outcome::Length(_) => {
                cert.words_checked += pair;
                cert.status = CertStatus::Counterexample;
                cert.counterexample = Some(alphabet.format(w));
                break;
            }
            Outcome::Unknown(reason) => {
                cert.status = CertStatus::Inconclusive;
                cert.inconclusive = Some(InconclusiveWord { word: alphabet.format(w), reason });
                break;
            }
        }
        cert.words_checked += pair;
    }
    relations.sort();
    cert.relations = relations.iter().map(|w| alphabet.format(w)).collect();
    cert
}

/// Path through the given positions, vertex `i` at `positions[i]`, named by position.
pub fn line_tree(positions: &[LexValue]) -> Result<MetricTree, TreeError> {
    let rank = positions.first().map(LexValue::rank).unwrap_or(1);
    let names: Vec<String> = positions.iter().map(position_name).collect();
    let edges: Vec<(String, String, LexValue)> =
        (1..positions.len()).map(|i| (names[i - 1].clone(), names[i].clone(), &positions[i] - &positions[i - 1])).collect();
    MetricTree::new(rank, &names, &edges)
}

fn position_name(p: &LexValue) -> String {
    let c: Vec<String> = p.coords().iter().map(crate::ordgroup::format_rat).collect();
    c.join(",")
}

/// Point at coordinate `x` of a [`line_tree`] built from `positions`.
pub fn line_point(t: &MetricTree, positions: &[LexValue], x: &LexValue) -> Option<TreePoint> {
    let start = TreePoint::Vertex(crate::lambdatree::VertexId(0));
    let end = TreePoint::Vertex(crate::lambdatree::VertexId(positions.len() - 1));
    t.point_at(&start, &end, &(x - &positions[0]))
}

/// A line window `[-half, half]` with integer vertices and one generator translating by `shift`.
pub fn line_translation_window(rank: usize, half: i64, shift: &LexValue) -> ActionWindow {
    let positions: Vec<LexValue> = (-half..=half)
        .map(|i| {
            let mut c = vec![0; rank];
            c[0] = i;
            LexValue::ints(&c)
        })
        .collect();
    let t = line_tree(&positions).unwrap();
    let a = TreePoint::Vertex(crate::lambdatree::VertexId(0));
    let b = TreePoint::Vertex(crate::lambdatree::VertexId(positions.len() - 1));
    let g = PartialIsometry::translation(&t, &a, &b, shift).unwrap();
    ActionWindow::new(t, Alphabet::standard(1), vec![g]).unwrap().with_oracle(WordOracle::free(1))
}

/// A comb: a spine of `teeth * step` with a hair of length `hair` at every multiple of `step`.
/// The single generator shifts the spine by `step` and carries each hair to the next one.
pub fn comb_window(step: &LexValue, hair: &LexValue, teeth: usize) -> ActionWindow {
    let rank = step.rank();
    let mut names = Vec::new();
    let mut edges = Vec::new();
    for j in 0..=teeth {
        names.push(format!("s{j}"));
        names.push(format!("h{j}"));
    }
    for j in 0..=teeth {
        if j > 0 {
            edges.push((format!("s{}", j - 1), format!("s{j}"), step.clone()));
        }
        edges.push((format!("s{j}"), format!("h{j}"), hair.clone()));
    }
    let t = MetricTree::new(rank, &names, &edges).unwrap();
    let v = |n: &str| TreePoint::Vertex(t.vertex(n).unwrap());
    let mut anchors = vec![(v("s0"), v("s1")), (v(&format!("s{}", teeth - 1)), v(&format!("s{teeth}")))];
    for j in 0..teeth {
        anchors.push((v(&format!("h{j}")), v(&format!("h{}", j + 1))));
    }
    let g = PartialIsometry::new(&t, &t, anchors).unwrap();
    ActionWindow::new(t, Alphabet::standard(1), vec![g]).unwrap().with_oracle(WordOracle::free(1))
}
