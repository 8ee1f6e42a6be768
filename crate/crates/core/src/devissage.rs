//! Checks for dévissage decompositions given as finite graphs of groups.
//!
//! Vertex groups are described by small descriptors whose words live in a
//! local alphabet. The checks are the structural clauses of the detailed
//! dévissage statement, bounded acylindricity of the Bass–Serre tree, the
//! Betti-number inequalities, and the principal-splitting case analysis.

use std::collections::BTreeMap;

use num_integer::Integer;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bruhat::{certify_free_bt, matrix_preset};
use crate::gluing::{Attestation, Verdict};
use crate::groups::{
    betti1, conjugate_in_free, primitive_root, reduced_words, Alphabet, FinitePresentation, GroupError, PresentationDoc,
    Word,
};
use crate::isometry::CertStatus;

pub const DEFAULT_RADIUS: usize = 5;
pub const DEFAULT_WINDOW: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DevissageError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("duplicate vertex {0}")]
    DuplicateVertex(String),
    #[error("unknown matrix preset {0}")]
    UnknownPreset(String),
    #[error("vertex {vertex}: {reason}")]
    BadDescriptor { vertex: String, reason: String },
    #[error("declared maximal abelian subgroup at {vertex} has rank {rank}; ranks must be at least 2")]
    CyclicDeclaration { vertex: String, rank: usize },
    #[error("structure check failed; refusing case analysis")]
    StructureNotVerified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexType {
    Abelian,
    Surface,
    Infinitesimal,
}

fn default_ball() -> usize {
    crate::bruhat::SCHOTTKY_RADIUS
}

/// Vertex group. Letters are single characters naming the local generators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VertexGroup {
    FreeGroup { letters: String },
    FreeAbelian { letters: String },
    /// `⟨n⟩ ⊕ ℤᵏ`, the letters `free` spanning `ℤᵏ`.
    CyclicBySum { n: char, free: String },
    /// Free group with designated boundary words; a relator closes the surface.
    SurfaceWithBoundary {
        letters: String,
        #[serde(default)]
        boundary: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        relator: Option<String>,
    },
    /// Matrix-group preset, certified on a ball of the given radius.
    Preset {
        preset: String,
        #[serde(default = "default_ball")]
        ball: usize,
    },
}

impl VertexGroup {
    pub fn alphabet(&self) -> Result<Alphabet, DevissageError> {
        let chars = |s: &str| Alphabet::new(s.chars().collect());
        Ok(match self {
            VertexGroup::FreeGroup { letters }
            | VertexGroup::FreeAbelian { letters }
            | VertexGroup::SurfaceWithBoundary { letters, .. } => chars(letters)?,
            VertexGroup::CyclicBySum { n, free } => Alphabet::new(std::iter::once(*n).chain(free.chars()).collect())?,
            VertexGroup::Preset { preset, .. } => {
                matrix_preset(preset).ok_or_else(|| DevissageError::UnknownPreset(preset.clone()))?.alphabet().clone()
            }
        })
    }

    fn algebra(&self) -> Algebra {
        match self {
            VertexGroup::FreeGroup { .. } => Algebra::Free,
            VertexGroup::SurfaceWithBoundary { relator: None, .. } => Algebra::Free,
            VertexGroup::FreeAbelian { .. } | VertexGroup::CyclicBySum { .. } => Algebra::Abelian,
            _ => Algebra::Opaque,
        }
    }

    /// First Betti number, when the descriptor determines it.
    pub fn betti1(&self) -> Option<usize> {
        match self {
            VertexGroup::FreeGroup { letters } | VertexGroup::FreeAbelian { letters } => Some(letters.chars().count()),
            VertexGroup::CyclicBySum { free, .. } => Some(1 + free.chars().count()),
            VertexGroup::SurfaceWithBoundary { letters, relator: None, .. } => Some(letters.chars().count()),
            VertexGroup::SurfaceWithBoundary { letters, relator: Some(r), .. } => {
                let a = Alphabet::new(letters.chars().collect()).ok()?;
                Some(betti1(&FinitePresentation::new(a.clone(), vec![a.parse(r).ok()?])))
            }
            VertexGroup::Preset { .. } => None,
        }
    }

    fn is_trivial(&self, a: &Alphabet, w: &Word) -> Option<bool> {
        match self.algebra() {
            Algebra::Free => Some(w.reduce().is_empty()),
            Algebra::Abelian => Some(w.exponent_sums(a.len()).iter().all(|&e| e == 0)),
            Algebra::Opaque => match self {
                VertexGroup::Preset { preset, .. } => matrix_preset(preset).map(|g| g.is_trivial(w)),
                _ => None,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GogVertex {
    pub id: String,
    #[serde(rename = "type")]
    pub kind: VertexType,
    pub group: VertexGroup,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attestation: Option<Attestation>,
}

/// Cyclic edge group, given by the images of its generator at both ends.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GogEdge {
    pub u: String,
    pub v: String,
    pub image_u: String,
    pub image_v: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxAbelian {
    pub vertex: String,
    pub rank: usize,
}

/// Graph-of-groups document, with the ambient presentation and declarations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphOfGroups {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub vertices: Vec<GogVertex>,
    #[serde(default)]
    pub edges: Vec<GogEdge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambient: Option<PresentationDoc>,
    #[serde(default)]
    pub max_abelian: Vec<MaxAbelian>,
    /// Whether the fundamental group is declared non-cyclic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub non_cyclic: Option<bool>,
}

/// Parsed edge: endpoint indices and image words in the local alphabets.
#[derive(Debug, Clone)]
struct Edge {
    u: usize,
    v: usize,
    image_u: Word,
    image_v: Word,
}

#[derive(Debug, Clone)]
struct Parsed {
    alphabets: Vec<Alphabet>,
    edges: Vec<Edge>,
}

impl GraphOfGroups {
    pub fn index(&self, id: &str) -> Result<usize, DevissageError> {
        self.vertices.iter().position(|v| v.id == id).ok_or_else(|| DevissageError::UnknownVertex(id.into()))
    }

    fn parse(&self) -> Result<Parsed, DevissageError> {
        for (i, v) in self.vertices.iter().enumerate() {
            if self.vertices[..i].iter().any(|w| w.id == v.id) {
                return Err(DevissageError::DuplicateVertex(v.id.clone()));
            }
        }
        let alphabets = self.vertices.iter().map(|v| v.group.alphabet()).collect::<Result<Vec<_>, _>>()?;
        let mut edges = Vec::new();
        for e in &self.edges {
            let (u, v) = (self.index(&e.u)?, self.index(&e.v)?);
            edges.push(Edge {
                u,
                v,
                image_u: alphabets[u].parse(&e.image_u)?.reduce(),
                image_v: alphabets[v].parse(&e.image_v)?.reduce(),
            });
        }
        Ok(Parsed { alphabets, edges })
    }

    pub fn ambient(&self) -> Result<Option<FinitePresentation>, DevissageError> {
        Ok(self.ambient.as_ref().map(|p| p.build()).transpose()?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClauseVerdict {
    Pass,
    Fail,
    Unchecked,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Clause {
    pub clause: &'static str,
    pub subject: String,
    pub verdict: ClauseVerdict,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructureReport {
    pub status: Verdict,
    pub clauses: Vec<Clause>,
    pub remarks: Vec<String>,
}

impl StructureReport {
    pub fn failures(&self) -> impl Iterator<Item = &Clause> {
        self.clauses.iter().filter(|c| c.verdict == ClauseVerdict::Fail)
    }
}

fn overall(verdicts: impl Iterator<Item = ClauseVerdict>) -> Verdict {
    let mut status = Verdict::Pass;
    for v in verdicts {
        match v {
            ClauseVerdict::Fail => return Verdict::Fail,
            ClauseVerdict::Unchecked => status = Verdict::Inconclusive,
            ClauseVerdict::Pass => {}
        }
    }
    status
}

/// Incident edge ends at `v`: `(edge, image at v, image at the other end, other vertex)`.
fn ends(p: &Parsed, v: usize) -> Vec<(usize, &Word, &Word, usize)> {
    let mut out = Vec::new();
    for (i, e) in p.edges.iter().enumerate() {
        if e.u == v {
            out.push((i, &e.image_u, &e.image_v, e.v));
        }
        if e.v == v {
            out.push((i, &e.image_v, &e.image_u, e.u));
        }
    }
    out
}

/// Exponent `k` with `w = x^k` for the letter `x`, if `w` is a power of it.
fn letter_power(w: &Word, x: usize) -> Option<i64> {
    w.letters().iter().all(|l| l.gen == x).then(|| w.letters().iter().map(|l| l.exponent()).sum())
}

/// Verifies the clauses of the detailed dévissage statement.
pub fn check_structure(g: &GraphOfGroups) -> Result<StructureReport, DevissageError> {
    let p = g.parse()?;
    let mut clauses = Vec::new();
    let mut remarks = Vec::new();
    let mut push = |clause, subject: String, ok: Option<bool>, detail: String| {
        let verdict = match ok {
            Some(true) => ClauseVerdict::Pass,
            Some(false) => ClauseVerdict::Fail,
            None => ClauseVerdict::Unchecked,
        };
        clauses.push(Clause { clause, subject, verdict, detail });
    };
    let n = g.vertices.len();
    let name = |i: usize| g.vertices[i].id.clone();
    let edge_name = |i: usize| format!("{}-{}", g.edges[i].u, g.edges[i].v);

    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], x: usize) -> usize {
        if p[x] == x {
            x
        } else {
            let r = root(p, p[x]);
            p[x] = r;
            r
        }
    }
    for e in &p.edges {
        let (a, b) = (root(&mut parent, e.u), root(&mut parent, e.v));
        parent[a] = b;
    }
    let comps = (0..n).filter(|&i| root(&mut parent, i) == i).count();
    push("connected", "graph".into(), Some(comps == 1), format!("{comps} component(s)"));

    for (i, e) in p.edges.iter().enumerate() {
        let inf = [e.u, e.v].iter().filter(|&&x| g.vertices[x].kind == VertexType::Infinitesimal).count();
        let ok = e.u != e.v && inf == 1;
        let detail = if e.u == e.v {
            "loop".to_string()
        } else {
            format!("{inf} infinitesimal endpoint(s)")
        };
        push("incidence", edge_name(i), Some(ok), detail);
        for (x, w) in [(e.u, &e.image_u), (e.v, &e.image_v)] {
            if let Some(t) = g.vertices[x].group.is_trivial(&p.alphabets[x], w) {
                push("edge-image", format!("{} at {}", edge_name(i), name(x)), Some(!t), if t { "trivial image".into() } else { String::new() });
            }
        }
    }

    let mut abelian_hubs: Vec<(usize, usize, Word)> = Vec::new();
    for v in 0..n {
        let vert = &g.vertices[v];
        let alpha = &p.alphabets[v];
        match vert.kind {
            VertexType::Abelian => {
                let VertexGroup::CyclicBySum { .. } = vert.group else {
                    push("abelian", name(v), Some(false), "descriptor is not cyclic-by-sum".into());
                    continue;
                };
                for (e, here, there, other) in ends(&p, v) {
                    match letter_power(here, 0) {
                        Some(1 | -1) => push("abelian", format!("{} at {}", edge_name(e), name(v)), Some(true), "image is N".into()),
                        Some(k) => push("abelian", format!("{} at {}", edge_name(e), name(v)), Some(false), format!("exponent {}", k.abs())),
                        None => push("abelian", format!("{} at {}", edge_name(e), name(v)), Some(false), format!("image {} is not a power of N", alpha.format(here))),
                    }
                    if g.vertices[other].group.algebra() == Algebra::Free && !there.is_empty() {
                        let (_, k) = primitive_root(there)?;
                        push(
                            "maximal-cyclic",
                            format!("{} at {}", edge_name(e), name(other)),
                            Some(k == 1),
                            if k == 1 { String::new() } else { format!("exponent {k}") },
                        );
                        if g.vertices[other].kind == VertexType::Infinitesimal {
                            abelian_hubs.push((v, other, there.clone()));
                        }
                    }
                }
            }
            VertexType::Surface => {
                let VertexGroup::SurfaceWithBoundary { boundary, relator, .. } = &vert.group else {
                    push("surface", name(v), Some(false), "descriptor is not surface-with-boundary".into());
                    continue;
                };
                let bws = boundary.iter().map(|b| alpha.parse(b)).collect::<Result<Vec<_>, _>>()?;
                for (b, w) in boundary.iter().zip(&bws) {
                    if *w != w.cyclic_reduce() || w.is_empty() {
                        push("surface", format!("{} boundary {b}", name(v)), Some(false), "boundary word is not cyclically reduced".into());
                    }
                }
                let inc = ends(&p, v);
                if inc.is_empty() && bws.is_empty() {
                    push("surface", name(v), Some(true), "no edges".into());
                    if relator.is_some() {
                        remarks.push(format!("{}: the graph of groups has no edge and the group is a surface group", name(v)));
                    }
                    continue;
                }
                let images: Vec<&Word> = inc.iter().map(|x| x.1).collect();
                let matching = match_boundary(&images, &bws);
                for (k, (e, here, _, _)) in inc.iter().enumerate() {
                    let subject = format!("{} at {}", edge_name(*e), name(v));
                    match matching[k] {
                        Some(b) => push("surface", subject, Some(true), format!("conjugate to boundary {}", boundary[b])),
                        None => push("surface", subject, Some(false), format!("image {} matches no free boundary word", alpha.format(here))),
                    }
                }
                for (b, word) in boundary.iter().enumerate() {
                    if !matching.contains(&Some(b)) {
                        push("surface", format!("{} boundary {word}", name(v)), Some(false), "unmatched boundary component (free splitting)".into());
                    }
                }
            }
            VertexType::Infinitesimal => {
                let (ok, detail) = match (&vert.attestation, &vert.group) {
                    (Some(a), _) => (Some(a.attests_freeness()), format!("{a:?}")),
                    (None, VertexGroup::Preset { preset, ball }) => {
                        let m = matrix_preset(preset).ok_or_else(|| DevissageError::UnknownPreset(preset.clone()))?;
                        let c = certify_free_bt(&m, *ball).certificate;
                        let ok = match c.status {
                            CertStatus::FreeOnBall => Some(true),
                            CertStatus::Counterexample => Some(false),
                            CertStatus::Inconclusive => None,
                        };
                        (ok, format!("certificate: {:?} at N = {}", c.status, c.n))
                    }
                    (None, VertexGroup::SurfaceWithBoundary { relator: Some(_), .. }) => (None, "no attestation".into()),
                    (None, grp) => (Some(true), format!("{} acts freely on its standard tree", kind_name(grp))),
                };
                push("infinitesimal", name(v), ok, detail);
            }
        }
    }

    for (i, (a, hub, wa)) in abelian_hubs.iter().enumerate() {
        for (b, hub2, wb) in &abelian_hubs[..i] {
            if a == b {
                continue;
            }
            let subject = format!("{} vs {}", name(*b), name(*a));
            if hub == hub2 {
                let (ra, _) = primitive_root(wa)?;
                let (rb, _) = primitive_root(wb)?;
                let clash = conjugate_in_free(&ra, &rb) || conjugate_in_free(&ra, &rb.inverse());
                push("abelian-commutation", subject, Some(!clash), if clash { "N-generators have conjugate roots".into() } else { String::new() });
            }
        }
    }
    let abelians: Vec<usize> = (0..n).filter(|&v| g.vertices[v].kind == VertexType::Abelian).collect();
    for (i, &a) in abelians.iter().enumerate() {
        for &b in &abelians[..i] {
            let shared = abelian_hubs.iter().any(|x| x.0 == a && abelian_hubs.iter().any(|y| y.0 == b && y.1 == x.1));
            if !shared {
                push("abelian-commutation", format!("{} vs {}", name(b), name(a)), None, "no common free neighbour".into());
            }
        }
    }
    let status = overall(clauses.iter().map(|c| c.verdict));
    Ok(StructureReport { status, clauses, remarks })
}

fn kind_name(g: &VertexGroup) -> &'static str {
    match g {
        VertexGroup::FreeGroup { .. } => "free group",
        VertexGroup::FreeAbelian { .. } => "free abelian group",
        VertexGroup::CyclicBySum { .. } => "free abelian group",
        VertexGroup::SurfaceWithBoundary { .. } => "free group",
        VertexGroup::Preset { .. } => "preset",
    }
}

/// Maximum matching of edge images to boundary words by conjugacy up to inverse.
fn match_boundary(images: &[&Word], boundary: &[Word]) -> Vec<Option<usize>> {
    let ok = |i: usize, b: usize| conjugate_in_free(images[i], &boundary[b]) || conjugate_in_free(&images[i].inverse(), &boundary[b]);
    let mut owner: Vec<Option<usize>> = vec![None; boundary.len()];
    fn augment(i: usize, ok: &dyn Fn(usize, usize) -> bool, owner: &mut [Option<usize>], seen: &mut [bool]) -> bool {
        for b in 0..owner.len() {
            if !seen[b] && ok(i, b) {
                seen[b] = true;
                if owner[b].is_none_or(|j| augment(j, ok, owner, seen)) {
                    owner[b] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    for i in 0..images.len() {
        let mut seen = vec![false; boundary.len()];
        augment(i, &ok, &mut owner, &mut seen);
    }
    let mut out = vec![None; images.len()];
    for (b, o) in owner.iter().enumerate() {
        if let Some(i) = o {
            out[*i] = Some(b);
        }
    }
    out
}

/// How cyclic subgroups of a vertex group are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Algebra {
    Free,
    Abelian,
    Opaque,
}

impl Algebra {
    fn conj(self, g: &Word, a: &Word) -> Word {
        match self {
            Algebra::Free => g.concat(a).concat(&g.inverse()).reduce(),
            _ => a.clone(),
        }
    }

    /// `m` with `⟨s⟩ ∩ ⟨t⟩ = ⟨tᵐ⟩`, or `None` when the intersection is trivial.
    fn intersect(self, rank: usize, s: &Word, t: &Word) -> Option<i64> {
        match self {
            Algebra::Free => {
                let (rs, p) = primitive_root(s).ok()?;
                let (rt, q) = primitive_root(t).ok()?;
                let sign = if rt == rs {
                    1
                } else if rt == rs.inverse() {
                    -1
                } else {
                    return None;
                };
                Some(sign * (p as i64).lcm(&(q as i64)) / q as i64)
            }
            Algebra::Abelian => {
                let (rs, p) = primitive_vector(&s.exponent_sums(rank))?;
                let (rt, q) = primitive_vector(&t.exponent_sums(rank))?;
                let neg: Vec<i64> = rs.iter().map(|x| -x).collect();
                let sign = if rt == rs {
                    1
                } else if rt == neg {
                    -1
                } else {
                    return None;
                };
                Some(sign * p.lcm(&q) / q)
            }
            Algebra::Opaque => None,
        }
    }

    fn member(self, rank: usize, g: &Word, a: &Word) -> bool {
        match self {
            Algebra::Free => {
                let g = g.reduce();
                if g.is_empty() {
                    return true;
                }
                let (Ok((rg, pg)), Ok((ra, pa))) = (primitive_root(&g), primitive_root(a)) else { return false };
                (rg == ra || rg == ra.inverse()) && pg % pa == 0
            }
            Algebra::Abelian => {
                let ev = g.exponent_sums(rank);
                if ev.iter().all(|&x| x == 0) {
                    return true;
                }
                let (Some((rg, pg)), Some((ra, pa))) = (primitive_vector(&ev), primitive_vector(&a.exponent_sums(rank))) else {
                    return false;
                };
                let neg: Vec<i64> = ra.iter().map(|x| -x).collect();
                (rg == ra || rg == neg) && pg % pa == 0
            }
            Algebra::Opaque => false,
        }
    }
}

/// `v = k · r` with `r` primitive, `k > 0`.
fn primitive_vector(v: &[i64]) -> Option<(Vec<i64>, i64)> {
    let k = v.iter().fold(0i64, |g, &x| g.gcd(&x));
    (k != 0).then(|| (v.iter().map(|x| x / k).collect(), k))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathStep {
    pub vertex: String,
    /// Coset representative applied at this vertex before leaving.
    pub coset: String,
    pub edge: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FixedPath {
    pub steps: Vec<PathStep>,
    pub end: String,
    /// Generator of the pointwise stabilizer, as a word at the end vertex.
    pub element: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AcylindricityReport {
    pub status: Verdict,
    pub radius: usize,
    pub window: usize,
    pub paths_explored: usize,
    pub witness: Option<FixedPath>,
    /// Vertices where a nontrivial stabilizer met a group without an intersection oracle.
    pub unchecked_at: Vec<String>,
}

struct Walker<'a> {
    g: &'a GraphOfGroups,
    p: &'a Parsed,
    algebras: Vec<Algebra>,
    reps: Vec<Vec<Word>>,
    radius: usize,
}

#[derive(Default)]
struct Walk {
    explored: usize,
    witness: Option<FixedPath>,
    unchecked: Vec<String>,
}

impl Walker<'_> {
    /// Oriented edges leaving `v`: `(edge, forward, image at v, image at the far end, far end)`.
    fn out(&self, v: usize) -> Vec<(usize, bool, &Word, &Word, usize)> {
        let mut out = Vec::new();
        for (i, e) in self.p.edges.iter().enumerate() {
            if e.u == v {
                out.push((i, true, &e.image_u, &e.image_v, e.v));
            }
            if e.v == v {
                out.push((i, false, &e.image_v, &e.image_u, e.u));
            }
        }
        out
    }

    fn edge_name(&self, e: usize, forward: bool) -> String {
        let d = &self.g.edges[e];
        if forward {
            format!("{}->{}", d.u, d.v)
        } else {
            format!("{}->{}", d.v, d.u)
        }
    }

    fn walk(&self, v: usize, stab: &Word, incoming: (usize, bool), steps: &mut Vec<PathStep>, acc: &mut Walk) {
        if acc.witness.is_some() {
            return;
        }
        acc.explored += 1;
        if steps.len() == self.radius {
            acc.witness = Some(FixedPath {
                steps: steps.clone(),
                end: self.g.vertices[v].id.clone(),
                element: self.p.alphabets[v].format(stab),
            });
            return;
        }
        let alg = self.algebras[v];
        if alg == Algebra::Opaque {
            let id = self.g.vertices[v].id.clone();
            if !acc.unchecked.contains(&id) {
                acc.unchecked.push(id);
            }
            return;
        }
        let rank = self.p.alphabets[v].len();
        for (e, fwd, alpha, omega, next) in self.out(v) {
            for gr in &self.reps[v] {
                if (e, fwd) == (incoming.0, !incoming.1) && alg.member(rank, gr, alpha) {
                    continue;
                }
                let t = alg.conj(gr, alpha);
                let Some(m) = alg.intersect(rank, stab, &t) else { continue };
                steps.push(PathStep {
                    vertex: self.g.vertices[v].id.clone(),
                    coset: self.p.alphabets[v].format(gr),
                    edge: self.edge_name(e, fwd),
                });
                self.walk(next, &omega.pow(m).reduce(), (e, fwd), steps, acc);
                steps.pop();
                if acc.witness.is_some() {
                    return;
                }
            }
        }
    }
}

/// Coset representatives: reduced words of length `<= window`, deduplicated in abelian groups.
fn coset_reps(alg: Algebra, alpha: &Alphabet, window: usize) -> Vec<Word> {
    let words = reduced_words(alpha.len(), window);
    match alg {
        Algebra::Abelian => {
            let mut seen = std::collections::BTreeSet::new();
            words.into_iter().filter(|w| seen.insert(w.exponent_sums(alpha.len()))).collect()
        }
        _ => words,
    }
}

/// Searches reduced Bass–Serre paths of length `radius` with a nontrivial pointwise stabilizer.
///
/// Paths start with an untranslated edge; later edges are translated by coset
/// representatives of word length at most `window`. Each pointwise stabilizer is
/// a cyclic group, intersected step by step with the next conjugated edge group.
pub fn check_acylindricity(g: &GraphOfGroups, radius: usize, window: usize) -> Result<AcylindricityReport, DevissageError> {
    let p = g.parse()?;
    let algebras: Vec<Algebra> = g.vertices.iter().map(|v| v.group.algebra()).collect();
    let reps = algebras.iter().zip(&p.alphabets).map(|(&a, al)| coset_reps(a, al, window)).collect();
    let walker = Walker { g, p: &p, algebras, reps, radius };
    let starts: Vec<(usize, bool)> = (0..p.edges.len()).flat_map(|e| [(e, true), (e, false)]).collect();
    let walks: Vec<Walk> = starts
        .par_iter()
        .map(|&(e, fwd)| {
            let edge = &p.edges[e];
            let (from, to, omega) = if fwd { (edge.u, edge.v, &edge.image_v) } else { (edge.v, edge.u, &edge.image_u) };
            let mut acc = Walk::default();
            if radius == 0 {
                return acc;
            }
            let mut steps = vec![PathStep { vertex: g.vertices[from].id.clone(), coset: "1".into(), edge: walker.edge_name(e, fwd) }];
            walker.walk(to, omega, (e, fwd), &mut steps, &mut acc);
            acc
        })
        .collect();
    let mut report = AcylindricityReport { status: Verdict::Pass, radius, window, paths_explored: 0, witness: None, unchecked_at: Vec::new() };
    for w in walks {
        report.paths_explored += w.explored;
        for u in w.unchecked {
            if !report.unchecked_at.contains(&u) {
                report.unchecked_at.push(u);
            }
        }
        if report.witness.is_none() {
            report.witness = w.witness;
        }
    }
    report.status = if report.witness.is_some() {
        Verdict::Fail
    } else if !report.unchecked_at.is_empty() {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BettiReport {
    pub status: Verdict,
    pub b1: usize,
    pub vertex_b1: BTreeMap<String, Option<usize>>,
    pub graph_b1: i64,
    pub edges: usize,
    /// `∑ b₁(Γ_v) + b₁(𝒢) - #E`, when every vertex term is known.
    pub lower_bound: Option<i64>,
    /// `b₁(Γ) - lower_bound`.
    pub slack: Option<i64>,
    /// `∑ (Rk A - 1)` over the declarations.
    pub abelian_sum: i64,
    /// `b₁(Γ) - 1 - abelian_sum`.
    pub abelian_slack: i64,
    /// `b₁(Γ) >= 2`, checked when the group is declared non-cyclic.
    pub non_cyclic_b1_at_least_2: Option<bool>,
}

/// Betti-number inequalities for a decomposition of the ambient group.
pub fn check_betti_bounds(
    g: &GraphOfGroups,
    ambient: &FinitePresentation,
    decl: &[MaxAbelian],
) -> Result<BettiReport, DevissageError> {
    g.parse()?;
    for d in decl {
        g.index(&d.vertex)?;
        if d.rank < 2 {
            return Err(DevissageError::CyclicDeclaration { vertex: d.vertex.clone(), rank: d.rank });
        }
    }
    let b1 = betti1(ambient);
    let vertex_b1: BTreeMap<String, Option<usize>> = g.vertices.iter().map(|v| (v.id.clone(), v.group.betti1())).collect();
    let edges = g.edges.len();
    let graph_b1 = edges as i64 - g.vertices.len() as i64 + 1;
    let lower_bound = vertex_b1
        .values()
        .try_fold(0i64, |acc, b| b.map(|b| acc + b as i64))
        .map(|s| s + graph_b1 - edges as i64);
    let slack = lower_bound.map(|l| b1 as i64 - l);
    let abelian_sum: i64 = decl.iter().map(|d| d.rank as i64 - 1).sum();
    let abelian_slack = b1 as i64 - 1 - abelian_sum;
    let non_cyclic_b1_at_least_2 = g.non_cyclic.filter(|&c| c).map(|_| b1 >= 2);
    let status = if slack.is_some_and(|s| s < 0) || abelian_slack < 0 || non_cyclic_b1_at_least_2 == Some(false) {
        Verdict::Fail
    } else if slack.is_none() {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    Ok(BettiReport { status, b1, vertex_b1, graph_b1, edges, lower_bound, slack, abelian_sum, abelian_slack, non_cyclic_b1_at_least_2 })
}

/// Principal splitting read off a verified decomposition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "case", rename_all = "kebab-case")]
pub enum PrincipalCase {
    /// Cut the surface along an essential curve; the edge group is maximal abelian and cyclic.
    EssentialCurve { vertex: String },
    /// Any edge at an abelian vertex with `Γ̄_v` trivial splits over `C = Γ_v`, maximal abelian.
    MaximalAbelianEdge { vertex: String, edge: String },
    /// `A *_C (C ⊕ ℤᵏ)` with `C = N_v`.
    AbelianAmalgam { vertex: String, k: usize },
    /// A single infinitesimal vertex: the group acts freely on a tree of lower rank.
    Recurse,
}

pub fn principal_splitting_case(g: &GraphOfGroups) -> Result<PrincipalCase, DevissageError> {
    if check_structure(g)?.status == Verdict::Fail {
        return Err(DevissageError::StructureNotVerified);
    }
    if let Some(v) = g.vertices.iter().find(|v| v.kind == VertexType::Surface) {
        return Ok(PrincipalCase::EssentialCurve { vertex: v.id.clone() });
    }
    for v in g.vertices.iter().filter(|v| v.kind == VertexType::Abelian) {
        let VertexGroup::CyclicBySum { free, .. } = &v.group else { continue };
        let k = free.chars().count();
        if k > 0 {
            return Ok(PrincipalCase::AbelianAmalgam { vertex: v.id.clone(), k });
        }
        if let Some(e) = g.edges.iter().find(|e| e.u == v.id || e.v == v.id) {
            return Ok(PrincipalCase::MaximalAbelianEdge { vertex: v.id.clone(), edge: format!("{}-{}", e.u, e.v) });
        }
    }
    Ok(PrincipalCase::Recurse)
}

/// `⟨x, y, z | [w, z]⟩` with `w = [x, y]`, split as `F(x, y) *_⟨w⟩ (⟨w⟩ ⊕ ⟨z⟩)`.
pub fn centralizer_extension() -> GraphOfGroups {
    GraphOfGroups {
        schema: Some(crate::cli::SCHEMA.into()),
        vertices: vec![
            GogVertex { id: "F".into(), kind: VertexType::Infinitesimal, group: VertexGroup::FreeGroup { letters: "xy".into() }, attestation: None },
            GogVertex { id: "A".into(), kind: VertexType::Abelian, group: VertexGroup::CyclicBySum { n: 'n', free: "z".into() }, attestation: None },
        ],
        edges: vec![GogEdge { u: "F".into(), v: "A".into(), image_u: "xyx'y'".into(), image_v: "n".into() }],
        ambient: Some(PresentationDoc { generators: vec!["x".into(), "y".into(), "z".into()], relators: vec!["xyx'y'zyxy'x'z'".into()] }),
        max_abelian: vec![MaxAbelian { vertex: "A".into(), rank: 2 }],
        non_cyclic: Some(true),
    }
}

/// `⟨a, b, c | a²b²c²⟩` as a single closed surface vertex.
pub fn n3_surface() -> GraphOfGroups {
    GraphOfGroups {
        schema: Some(crate::cli::SCHEMA.into()),
        vertices: vec![GogVertex {
            id: "S".into(),
            kind: VertexType::Surface,
            group: VertexGroup::SurfaceWithBoundary { letters: "abc".into(), boundary: vec![], relator: Some("aabbcc".into()) },
            attestation: None,
        }],
        edges: vec![],
        ambient: Some(PresentationDoc { generators: vec!["a".into(), "b".into(), "c".into()], relators: vec!["aabbcc".into()] }),
        max_abelian: vec![],
        non_cyclic: Some(true),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fails(r: &StructureReport, clause: &str) -> bool {
        r.failures().any(|c| c.clause == clause)
    }

    #[test]
    fn centralizer_extension_passes() {
        let g = centralizer_extension();
        let r = check_structure(&g).unwrap();
        assert_eq!(r.status, Verdict::Pass, "{:#?}", r.clauses);
        let a = check_acylindricity(&g, DEFAULT_RADIUS, DEFAULT_WINDOW).unwrap();
        assert_eq!(a.status, Verdict::Pass);
        let b = check_betti_bounds(&g, &g.ambient().unwrap().unwrap(), &g.max_abelian).unwrap();
        assert_eq!((b.b1, b.slack, b.abelian_sum, b.abelian_slack), (3, Some(0), 1, 1));
        assert_eq!(principal_splitting_case(&g).unwrap(), PrincipalCase::AbelianAmalgam { vertex: "A".into(), k: 1 });
    }

    #[test]
    fn proper_power_image_fails() {
        let mut g = centralizer_extension();
        g.edges[0].image_v = "n^2".into();
        let r = check_structure(&g).unwrap();
        let c = r.failures().find(|c| c.clause == "abelian").unwrap();
        assert_eq!(c.detail, "exponent 2");
        let mut h = centralizer_extension();
        h.edges[0].image_u = "(xyx'y')^2".into();
        assert!(fails(&check_structure(&h).unwrap(), "maximal-cyclic"));
    }

    #[test]
    fn closed_surface_has_no_edges() {
        let g = n3_surface();
        let r = check_structure(&g).unwrap();
        assert_eq!(r.status, Verdict::Pass);
        assert_eq!(r.remarks.len(), 1);
        let b = check_betti_bounds(&g, &g.ambient().unwrap().unwrap(), &[]).unwrap();
        assert_eq!((b.b1, b.slack, b.non_cyclic_b1_at_least_2), (2, Some(0), Some(true)));
        assert_eq!(principal_splitting_case(&g).unwrap(), PrincipalCase::EssentialCurve { vertex: "S".into() });
    }

    #[test]
    fn free_group_vertex_alone() {
        let g = GraphOfGroups {
            schema: None,
            vertices: vec![GogVertex { id: "F".into(), kind: VertexType::Infinitesimal, group: VertexGroup::FreeGroup { letters: "ab".into() }, attestation: None }],
            edges: vec![],
            ambient: None,
            max_abelian: vec![],
            non_cyclic: None,
        };
        assert_eq!(check_structure(&g).unwrap().status, Verdict::Pass);
        let b = check_betti_bounds(&g, &FinitePresentation::free(2), &[]).unwrap();
        assert_eq!((b.b1, b.lower_bound, b.abelian_slack), (2, Some(2), 1));
        assert_eq!(check_acylindricity(&g, 5, 4).unwrap().status, Verdict::Pass);
        assert_eq!(principal_splitting_case(&g).unwrap(), PrincipalCase::Recurse);
    }

    #[test]
    fn loop_at_abelian_vertex_is_not_acylindrical() {
        let g = GraphOfGroups {
            schema: None,
            vertices: vec![GogVertex { id: "A".into(), kind: VertexType::Abelian, group: VertexGroup::CyclicBySum { n: 'n', free: "z".into() }, attestation: None }],
            edges: vec![GogEdge { u: "A".into(), v: "A".into(), image_u: "n".into(), image_v: "n".into() }],
            ambient: None,
            max_abelian: vec![],
            non_cyclic: None,
        };
        assert!(fails(&check_structure(&g).unwrap(), "incidence"));
        let a = check_acylindricity(&g, 5, 1).unwrap();
        assert_eq!(a.status, Verdict::Fail);
        let w = a.witness.unwrap();
        assert_eq!(w.steps.len(), 5);
        assert_eq!(w.element, "n");
    }

    #[test]
    fn surface_boundary_matching() {
        let g = GraphOfGroups {
            schema: None,
            vertices: vec![
                GogVertex {
                    id: "S".into(),
                    kind: VertexType::Surface,
                    group: VertexGroup::SurfaceWithBoundary { letters: "ab".into(), boundary: vec!["ab".into(), "ab'".into()], relator: None },
                    attestation: None,
                },
                GogVertex { id: "F".into(), kind: VertexType::Infinitesimal, group: VertexGroup::FreeGroup { letters: "xy".into() }, attestation: None },
            ],
            edges: vec![
                GogEdge { u: "S".into(), v: "F".into(), image_u: "ba".into(), image_v: "x".into() },
                GogEdge { u: "S".into(), v: "F".into(), image_u: "ba'".into(), image_v: "y".into() },
            ],
            ambient: None,
            max_abelian: vec![],
            non_cyclic: None,
        };
        assert_eq!(check_structure(&g).unwrap().status, Verdict::Pass);
        let mut h = g.clone();
        h.edges.pop();
        let r = check_structure(&h).unwrap();
        assert!(r.failures().any(|c| c.detail.contains("unmatched boundary")));
    }

    #[test]
    fn mutations_flip_a_clause() {
        let mut retyped = centralizer_extension();
        retyped.vertices[1].kind = VertexType::Infinitesimal;
        assert!(fails(&check_structure(&retyped).unwrap(), "incidence"));
        let mut dropped = centralizer_extension();
        dropped.edges.clear();
        assert!(fails(&check_structure(&dropped).unwrap(), "connected"));
    }

    #[test]
    fn cyclic_declaration_refused() {
        let g = centralizer_extension();
        let e = check_betti_bounds(&g, &g.ambient().unwrap().unwrap(), &[MaxAbelian { vertex: "A".into(), rank: 1 }]);
        assert!(matches!(e, Err(DevissageError::CyclicDeclaration { .. })));
    }

    #[test]
    fn document_round_trip() {
        let g = centralizer_extension();
        let s = serde_json::to_string(&g).unwrap();
        assert!(s.contains("\"type\":\"infinitesimal\""));
        assert!(s.contains("\"kind\":\"cyclic-by-sum\""));
        assert_eq!(serde_json::from_str::<GraphOfGroups>(&s).unwrap(), g);
    }
}
