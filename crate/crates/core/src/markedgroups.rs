//! Marked groups and their relation balls.
//!
//! A marked group is a group with a word problem together with an ordered
//! tuple of elements. Its relations of length at most `R` are the reduced words
//! in the marking letters that evaluate to the identity.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bruhat::matrix_preset;
use crate::groups::{reduced_word_count, reduced_words, Alphabet, GroupError, HnnPreset, Letter, Word, WordOracle};

/// Largest radius enumerated for markings of size at most 3.
pub const MAX_RADIUS_SMALL: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MarkedError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("ball of radius {radius} over {n} letters has {words} words; the budget is {budget}")]
    Budget { n: usize, radius: usize, words: u128, budget: u128 },
    #[error("markings have different sizes ({0} and {1})")]
    SizeMismatch(usize, usize),
    #[error("unknown matrix preset {0}")]
    UnknownPreset(String),
    #[error("empty marking")]
    EmptyMarking,
}

#[derive(Debug, Clone)]
pub struct MarkedGroup {
    pub oracle: WordOracle,
    pub marking: Vec<Word>,
}

impl MarkedGroup {
    pub fn new(oracle: WordOracle, marking: Vec<Word>) -> Result<Self, MarkedError> {
        if marking.is_empty() {
            return Err(MarkedError::EmptyMarking);
        }
        let rank = oracle.rank();
        if let Some(w) = marking.iter().find(|w| w.max_gen().is_some_and(|g| g >= rank)) {
            return Err(GroupError::Invalid(format!("marking word {w:?} leaves the oracle alphabet")).into());
        }
        Ok(MarkedGroup { oracle, marking })
    }

    /// The standard basis of the oracle's generators.
    pub fn standard(oracle: WordOracle) -> Self {
        let marking = (0..oracle.rank()).map(Word::gen).collect();
        MarkedGroup { oracle, marking }
    }

    /// `(ℤ, (1, n))`, written in the single letter `a`.
    pub fn z_pair(n: i64) -> Self {
        MarkedGroup { oracle: WordOracle::free_abelian(1), marking: vec![Word::gen(0), Word::gen(0).pow(n)] }
    }

    pub fn size(&self) -> usize {
        self.marking.len()
    }

    /// Whether a word in the marking letters is a relation.
    pub fn is_relation(&self, w: &Word) -> bool {
        self.oracle.is_trivial(&w.substitute(&self.marking))
    }
}

/// Relations of length at most `radius`, sorted length-lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationBall {
    pub radius: usize,
    pub n: usize,
    pub words: Vec<Word>,
}

impl RelationBall {
    pub fn contains(&self, w: &Word) -> bool {
        self.words.binary_search(w).is_ok()
    }

    pub fn format(&self) -> Vec<String> {
        let a = Alphabet::standard(self.n);
        self.words.iter().map(|w| a.format(w)).collect()
    }
}

pub fn ball_budget() -> u128 {
    ball_size(3, MAX_RADIUS_SMALL)
}

fn ball_size(n: usize, radius: usize) -> u128 {
    (0..=radius).map(|k| reduced_word_count(n, k)).sum()
}

fn check_budget(n: usize, radius: usize) -> Result<(), MarkedError> {
    let words = ball_size(n, radius);
    let budget = ball_budget();
    if words > budget || (n <= 3 && radius > MAX_RADIUS_SMALL) {
        return Err(MarkedError::Budget { n, radius, words, budget });
    }
    Ok(())
}

/// Reduced words of length `<= radius` over `n` letters whose first letter is `first`.
fn words_from(n: usize, radius: usize, first: Letter) -> Vec<Word> {
    if radius == 0 {
        return vec![];
    }
    reduced_words(n, radius - 1)
        .into_iter()
        .filter(|w| w.letters().first() != Some(&first.inverse()))
        .map(|w| {
            let mut v = vec![first];
            v.extend_from_slice(w.letters());
            Word(v)
        })
        .collect()
}

pub fn relations_up_to(m: &MarkedGroup, radius: usize) -> Result<RelationBall, MarkedError> {
    let n = m.size();
    check_budget(n, radius)?;
    let firsts: Vec<Letter> = (0..n).flat_map(|g| [Letter::new(g, false), Letter::new(g, true)]).collect();
    let mut words: Vec<Word> = firsts
        .par_iter()
        .flat_map_iter(|&f| words_from(n, radius, f).into_iter().filter(|w| m.is_relation(w)))
        .collect();
    words.sort();
    Ok(RelationBall { radius, n, words })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BallComparison {
    pub same: bool,
    /// First word in the symmetric difference, and which side holds it.
    pub witness: Option<(Word, Side)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    First,
    Second,
}

pub fn same_ball(a: &MarkedGroup, b: &MarkedGroup, radius: usize) -> Result<BallComparison, MarkedError> {
    if a.size() != b.size() {
        return Err(MarkedError::SizeMismatch(a.size(), b.size()));
    }
    let ba: BTreeSet<Word> = relations_up_to(a, radius)?.words.into_iter().collect();
    let bb: BTreeSet<Word> = relations_up_to(b, radius)?.words.into_iter().collect();
    let first_a = ba.difference(&bb).next().cloned();
    let first_b = bb.difference(&ba).next().cloned();
    let witness = match (first_a, first_b) {
        (Some(x), Some(y)) if y < x => Some((y, Side::Second)),
        (Some(x), _) => Some((x, Side::First)),
        (None, Some(y)) => Some((y, Side::Second)),
        (None, None) => None,
    };
    Ok(BallComparison { same: witness.is_none(), witness })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProfileRow {
    pub radius: usize,
    /// Least index from 1 agreeing with the target; `None` when the budget runs out.
    pub index: Option<usize>,
}

/// For each radius up to `r_max`, the least sequence index whose ball matches the target's.
pub fn convergence_profile(
    family: &(dyn Fn(usize) -> MarkedGroup + Sync),
    max_index: usize,
    target: &MarkedGroup,
    r_max: usize,
) -> Result<Vec<ProfileRow>, MarkedError> {
    let mut rows = Vec::new();
    for radius in 0..=r_max {
        let goal = relations_up_to(target, radius)?;
        let mut index = None;
        for i in 1..=max_index {
            let m = family(i);
            if m.size() != target.size() {
                return Err(MarkedError::SizeMismatch(m.size(), target.size()));
            }
            if relations_up_to(&m, radius)? == goal {
                index = Some(i);
                break;
            }
        }
        rows.push(ProfileRow { radius, index });
    }
    Ok(rows)
}

/// Word problem of a marked-group document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OracleDoc {
    Free { generators: String },
    FreeAbelian { generators: String },
    /// `⟨N⟩ ⊕ ℤᵏ`, the first generator spanning `N`.
    DirectSumCyclic { generators: String },
    /// `⟨p, q, t | t q t⁻¹ = q⁻¹p²⟩`.
    HnnN3,
    Matrix { preset: String },
}

impl OracleDoc {
    pub fn build(&self) -> Result<WordOracle, MarkedError> {
        let alpha = |s: &str| Alphabet::new(s.chars().collect());
        Ok(match self {
            OracleDoc::Free { generators } => WordOracle::Free(alpha(generators)?),
            OracleDoc::FreeAbelian { generators } => WordOracle::FreeAbelian(alpha(generators)?),
            OracleDoc::DirectSumCyclic { generators } => WordOracle::DirectSumCyclic(alpha(generators)?),
            OracleDoc::HnnN3 => WordOracle::Hnn(HnnPreset::nonorientable_genus_three()),
            OracleDoc::Matrix { preset } => {
                WordOracle::Matrix(matrix_preset(preset).ok_or_else(|| MarkedError::UnknownPreset(preset.clone()))?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkedGroupDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub oracle: OracleDoc,
    /// Words in the oracle's generators.
    pub marking: Vec<String>,
}

impl MarkedGroupDoc {
    pub fn build(&self) -> Result<MarkedGroup, MarkedError> {
        let oracle = self.oracle.build()?;
        let marking = self.marking.iter().map(|w| oracle.alphabet().parse(w)).collect::<Result<Vec<_>, _>>()?;
        MarkedGroup::new(oracle, marking)
    }

    pub fn z_pair(n: i64) -> Self {
        MarkedGroupDoc {
            schema: Some(crate::cli::SCHEMA.into()),
            oracle: OracleDoc::FreeAbelian { generators: "a".into() },
            marking: vec!["a".into(), format!("a^{n}")],
        }
    }

    pub fn z2() -> Self {
        MarkedGroupDoc {
            schema: Some(crate::cli::SCHEMA.into()),
            oracle: OracleDoc::FreeAbelian { generators: "ab".into() },
            marking: vec!["a".into(), "b".into()],
        }
    }
}

/// Parameterized sequence of marked groups, indexed from 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum FamilyDoc {
    /// `(ℤ, (1, i))`.
    ZPair,
    Constant { group: MarkedGroupDoc },
    Explicit { members: Vec<MarkedGroupDoc> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub sequence: FamilyDoc,
    pub target: MarkedGroupDoc,
    pub r_max: usize,
    pub max_index: usize,
}

impl SequenceDoc {
    pub fn z_to_z2() -> Self {
        SequenceDoc {
            schema: Some(crate::cli::SCHEMA.into()),
            sequence: FamilyDoc::ZPair,
            target: MarkedGroupDoc::z2(),
            r_max: 5,
            max_index: 12,
        }
    }

    pub fn profile(&self) -> Result<Vec<ProfileRow>, MarkedError> {
        let target = self.target.build()?;
        let members: Vec<MarkedGroup> = match &self.sequence {
            FamilyDoc::ZPair => (1..=self.max_index).map(|i| MarkedGroup::z_pair(i as i64)).collect(),
            FamilyDoc::Constant { group } => vec![group.build()?; self.max_index],
            FamilyDoc::Explicit { members } => members.iter().take(self.max_index).map(|m| m.build()).collect::<Result<_, _>>()?,
        };
        let count = members.len();
        convergence_profile(&|i| members[i - 1].clone(), count, &target, self.r_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z2() -> MarkedGroup {
        MarkedGroup::standard(WordOracle::free_abelian(2))
    }

    fn w(s: &str) -> Word {
        Alphabet::standard(2).parse(s).unwrap()
    }

    #[test]
    fn free_group_has_no_relations() {
        let f = MarkedGroup::standard(WordOracle::free(2));
        for r in 0..=5 {
            assert!(relations_up_to(&f, r).unwrap().words.is_empty());
        }
    }

    #[test]
    fn abelian_kernel_at_radius_four() {
        let ball = relations_up_to(&z2(), 4).unwrap();
        assert!(ball.contains(&w("aba'b'")));
        let oracle: Vec<Word> = reduced_words(2, 4)
            .into_iter()
            .filter(|x| !x.is_empty() && x.exponent_sums(2) == vec![0, 0])
            .collect();
        assert_eq!(ball.words, oracle);
    }

    #[test]
    fn equal_generators() {
        let m = MarkedGroup::z_pair(1);
        assert!(relations_up_to(&m, 2).unwrap().contains(&w("ab'")));
        let c = same_ball(&m, &z2(), 2).unwrap();
        assert!(!c.same);
        assert_eq!(c.witness, Some((w("ab'"), Side::First)));
    }

    #[test]
    fn bases_of_free_group_agree() {
        let f = WordOracle::free(2);
        let a = MarkedGroup::standard(f.clone());
        let b = MarkedGroup::new(f, vec![w("a"), w("aba'")]).unwrap();
        for r in 0..=5 {
            assert!(same_ball(&a, &b, r).unwrap().same);
        }
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(relations_up_to(&z2(), 9), Err(MarkedError::Budget { .. })));
        assert!(relations_up_to(&MarkedGroup::z_pair(3), 8).is_ok());
    }

    #[test]
    fn constant_sequence_profile() {
        let rows = convergence_profile(&|_| z2(), 3, &z2(), 4).unwrap();
        assert!(rows.iter().all(|r| r.index == Some(1)));
        let none = convergence_profile(&|_| MarkedGroup::z_pair(1), 2, &z2(), 3).unwrap();
        assert_eq!(none[3].index, None);
    }

    #[test]
    fn hnn_oracle_sees_its_relation() {
        let m = MarkedGroupDoc { schema: None, oracle: OracleDoc::HnnN3, marking: vec!["p".into(), "q".into(), "t".into()] }
            .build()
            .unwrap();
        let rel = Alphabet::standard(3).parse("cbc'aab").unwrap();
        assert!(!m.is_relation(&rel));
        let rel = Alphabet::standard(3).parse("cbc'a'a'b").unwrap();
        assert!(m.is_relation(&rel));
    }

    #[test]
    fn document_round_trip() {
        let d = SequenceDoc::z_to_z2();
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(serde_json::from_str::<SequenceDoc>(&s).unwrap(), d);
        assert_eq!(MarkedGroupDoc::z_pair(7).build().unwrap().marking[1].len(), 7);
    }
}
