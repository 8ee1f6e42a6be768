//! Words, word-problem oracles, Britton reduction, and abelianization.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bruhat::MatrixGroup;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("unknown letter {0:?}")]
    UnknownLetter(char),
    #[error("cannot parse word {word:?} at byte {pos}: {reason}")]
    BadWord { word: String, pos: usize, reason: String },
    #[error("duplicate or invalid generator label {0:?}")]
    BadLabel(String),
    #[error("the trivial word has no primitive root")]
    TrivialWord,
    #[error("{which} = {word} must be a nontrivial non-power, but it is a {exp}-th power")]
    ProperPower { which: &'static str, word: String, exp: usize },
    #[error("{0}")]
    Invalid(String),
}

/// A generator or its inverse. Orders as `a < a' < b < b' < ...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub gen: usize,
    pub inv: bool,
}

impl Letter {
    pub fn new(gen: usize, inv: bool) -> Self {
        Letter { gen, inv }
    }

    pub fn inverse(self) -> Self {
        Letter { gen: self.gen, inv: !self.inv }
    }

    pub fn exponent(self) -> i64 {
        if self.inv {
            -1
        } else {
            1
        }
    }
}

/// Words compare length-lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(pub Vec<Letter>);

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn gen(g: usize) -> Self {
        Word(vec![Letter::new(g, false)])
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// Free reduction.
    pub fn reduce(&self) -> Word {
        let mut out: Vec<Letter> = Vec::with_capacity(self.0.len());
        for &l in &self.0 {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    /// Reduced product.
    pub fn mul(&self, other: &Word) -> Word {
        self.concat(other).reduce()
    }

    pub fn pow(&self, k: i64) -> Word {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut v = Vec::with_capacity(base.len() * k.unsigned_abs() as usize);
        for _ in 0..k.unsigned_abs() {
            v.extend_from_slice(&base.0);
        }
        Word(v).reduce()
    }

    pub fn is_reduced(&self) -> bool {
        self.0.windows(2).all(|w| w[0] != w[1].inverse())
    }

    /// Splits a reduced word as `c · core · c⁻¹` with `core` cyclically reduced.
    pub fn cyclic_split(&self) -> (Word, Word) {
        let w = self.reduce().0;
        let mut i = 0;
        while i < w.len() / 2 && w[i] == w[w.len() - 1 - i].inverse() {
            i += 1;
        }
        (Word(w[..i].to_vec()), Word(w[i..w.len() - i].to_vec()))
    }

    pub fn cyclic_reduce(&self) -> Word {
        self.cyclic_split().1
    }

    /// Exponent-sum vector over `rank` generators.
    pub fn exponent_sums(&self, rank: usize) -> Vec<i64> {
        let mut v = vec![0; rank];
        for l in &self.0 {
            v[l.gen] += l.exponent();
        }
        v
    }

    /// Replaces generator `i` by `images[i]`.
    pub fn substitute(&self, images: &[Word]) -> Word {
        let mut v = Vec::new();
        for l in &self.0 {
            let img = &images[l.gen];
            if l.inv {
                v.extend(img.inverse().0);
            } else {
                v.extend_from_slice(&img.0);
            }
        }
        Word(v).reduce()
    }

    pub fn max_gen(&self) -> Option<usize> {
        self.0.iter().map(|l| l.gen).max()
    }
}

/// Single-character generator labels. Words are written with `'` for inverses,
/// and accept `x^k`, `x^-k` and `(...)^k` shorthand.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet(Vec<char>);

impl Alphabet {
    pub fn new(labels: Vec<char>) -> Result<Self, GroupError> {
        for (i, c) in labels.iter().enumerate() {
            if labels[..i].contains(c) || !c.is_alphabetic() {
                return Err(GroupError::BadLabel(c.to_string()));
            }
        }
        Ok(Alphabet(labels))
    }

    /// `a, b, c, ...`
    pub fn standard(n: usize) -> Self {
        assert!(n <= 26, "standard alphabets have at most 26 letters");
        Alphabet((0..n).map(|i| (b'a' + i as u8) as char).collect())
    }

    pub fn from_strs<S: AsRef<str>>(labels: &[S]) -> Result<Self, GroupError> {
        let mut out = Vec::new();
        for l in labels {
            let mut cs = l.as_ref().chars();
            match (cs.next(), cs.next()) {
                (Some(c), None) => out.push(c),
                _ => return Err(GroupError::BadLabel(l.as_ref().to_string())),
            }
        }
        Self::new(out)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> &[char] {
        &self.0
    }

    pub fn label(&self, g: usize) -> char {
        self.0[g]
    }

    pub fn index(&self, c: char) -> Option<usize> {
        self.0.iter().position(|&x| x == c)
    }

    pub fn parse(&self, s: &str) -> Result<Word, GroupError> {
        let chars: Vec<(usize, char)> = s.char_indices().filter(|(_, c)| !c.is_whitespace()).collect();
        let mut p = WordParser { alpha: self, src: s, chars: &chars, i: 0 };
        let w = p.sequence()?;
        if p.i < chars.len() {
            return Err(p.err("unexpected character"));
        }
        Ok(w)
    }

    pub fn format(&self, w: &Word) -> String {
        if w.is_empty() {
            return "1".into();
        }
        let mut s = String::new();
        for l in &w.0 {
            s.push(self.0[l.gen]);
            if l.inv {
                s.push('\'');
            }
        }
        s
    }
}

struct WordParser<'a> {
    alpha: &'a Alphabet,
    src: &'a str,
    chars: &'a [(usize, char)],
    i: usize,
}

impl WordParser<'_> {
    fn err(&self, reason: &str) -> GroupError {
        let pos = self.chars.get(self.i).map(|c| c.0).unwrap_or(self.src.len());
        GroupError::BadWord { word: self.src.to_string(), pos, reason: reason.to_string() }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).map(|c| c.1)
    }

    fn sequence(&mut self) -> Result<Word, GroupError> {
        let mut out = Vec::new();
        while let Some(c) = self.peek() {
            if c == ')' {
                break;
            }
            let atom = self.atom()?;
            out.extend(atom.0);
        }
        Ok(Word(out))
    }

    fn atom(&mut self) -> Result<Word, GroupError> {
        let c = self.peek().unwrap();
        self.i += 1;
        let mut w = match c {
            '(' => {
                let inner = self.sequence()?;
                if self.peek() != Some(')') {
                    return Err(self.err("missing ')'"));
                }
                self.i += 1;
                inner
            }
            '1' => Word::empty(),
            _ => {
                let g = self.alpha.index(c).ok_or(GroupError::UnknownLetter(c))?;
                Word::gen(g)
            }
        };
        while self.peek() == Some('\'') {
            self.i += 1;
            w = w.inverse();
        }
        if self.peek() == Some('^') {
            self.i += 1;
            let start = self.i;
            if self.peek() == Some('-') {
                self.i += 1;
            }
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.i += 1;
            }
            let digits: String = self.chars[start..self.i].iter().map(|c| c.1).collect();
            let k: i64 = digits.parse().map_err(|_| self.err("bad exponent"))?;
            let base = if k < 0 { w.inverse() } else { w };
            let mut v = Vec::new();
            for _ in 0..k.unsigned_abs() {
                v.extend_from_slice(&base.0);
            }
            w = Word(v);
        }
        Ok(w)
    }
}

/// `w = root^exponent`, exponent maximal.
pub fn primitive_root(w: &Word) -> Result<(Word, usize), GroupError> {
    let (c, core) = w.reduce().cyclic_split();
    if core.is_empty() {
        return Err(GroupError::TrivialWord);
    }
    let n = core.len();
    let period = (1..=n)
        .find(|&p| n % p == 0 && (p..n).all(|i| core.0[i] == core.0[i - p]))
        .unwrap();
    let root = c.concat(&Word(core.0[..period].to_vec())).concat(&c.inverse());
    Ok((root, n / period))
}

/// Whether `u` and `w` are conjugate in the free group on their letters.
pub fn conjugate_in_free(u: &Word, w: &Word) -> bool {
    let a = u.cyclic_reduce();
    let b = w.cyclic_reduce();
    if a.len() != b.len() {
        return false;
    }
    if a.is_empty() {
        return true;
    }
    let n = a.len();
    (0..n).any(|r| (0..n).all(|i| a.0[(i + r) % n] == b.0[i]))
}

/// An element `g` with `g u g⁻¹ = w` in the free group, if one exists.
pub fn conjugator_in_free(u: &Word, w: &Word) -> Option<Word> {
    let (cu, a) = u.reduce().cyclic_split();
    let (cw, b) = w.reduce().cyclic_split();
    if a.len() != b.len() {
        return None;
    }
    if a.is_empty() {
        return Some(Word::empty());
    }
    let n = a.len();
    let r = (0..n).find(|&r| (0..n).all(|i| a.0[(i + r) % n] == b.0[i]))?;
    // b = x⁻¹ a x with x = a[..r]
    let x = Word(a.0[..r].to_vec());
    // w = cw b cw⁻¹ = cw x⁻¹ cu⁻¹ u cu x cw⁻¹
    Some(cw.concat(&x.inverse()).concat(&cu.inverse()).reduce())
}

/// HNN extension `⟨F_r, t | t u t⁻¹ = v⟩` of a free group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HnnPreset {
    base_rank: usize,
    alphabet: Alphabet,
    u: Word,
    v: Word,
}

/// Which pinch Britton reduction removes first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PinchOrder {
    Leftmost,
    Rightmost,
}

impl HnnPreset {
    /// `alphabet` lists the base generators followed by the stable letter.
    pub fn new(alphabet: Alphabet, u: Word, v: Word) -> Result<Self, GroupError> {
        if alphabet.len() < 2 {
            return Err(GroupError::Invalid("need base generators and a stable letter".into()));
        }
        let base_rank = alphabet.len() - 1;
        for (which, w) in [("u", &u), ("v", &v)] {
            if w.max_gen().is_some_and(|g| g >= base_rank) {
                return Err(GroupError::Invalid(format!("{which} uses the stable letter")));
            }
            let (_, exp) = primitive_root(w)?;
            if exp != 1 {
                return Err(GroupError::ProperPower { which, word: alphabet.format(w), exp });
            }
        }
        Ok(HnnPreset { base_rank, alphabet, u: u.reduce(), v: v.reduce() })
    }

    /// `⟨p, q, t | t q t⁻¹ = q⁻¹p²⟩`, isomorphic to `⟨a, b, c | a²b²c²⟩`.
    pub fn nonorientable_genus_three() -> Self {
        let alpha = Alphabet::new(vec!['p', 'q', 't']).unwrap();
        let u = alpha.parse("q").unwrap();
        let v = alpha.parse("q'p^2").unwrap();
        Self::new(alpha, u, v).unwrap()
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn stable(&self) -> usize {
        self.base_rank
    }

    pub fn u(&self) -> &Word {
        &self.u
    }

    pub fn v(&self) -> &Word {
        &self.v
    }

    /// `Some(k)` when `w = gen^k`, with `gen` not a proper power.
    fn power_of(w: &Word, gen: &Word) -> Option<i64> {
        if w.is_empty() {
            return Some(0);
        }
        let (root, exp) = primitive_root(w).ok()?;
        if root == *gen {
            Some(exp as i64)
        } else if root == gen.inverse() {
            Some(-(exp as i64))
        } else {
            None
        }
    }

    fn find_pinch(&self, w: &[Letter], order: PinchOrder) -> Option<(usize, usize, Word)> {
        let t = self.stable();
        let stables: Vec<usize> = (0..w.len()).filter(|&i| w[i].gen == t).collect();
        let mut candidates: Vec<(usize, usize)> = stables.windows(2).map(|p| (p[0], p[1])).collect();
        if order == PinchOrder::Rightmost {
            candidates.reverse();
        }
        for (i, j) in candidates {
            if w[i].inv == w[j].inv {
                continue;
            }
            let mid = Word(w[i + 1..j].to_vec());
            let rep = if !w[i].inv {
                Self::power_of(&mid, &self.u).map(|k| self.v.pow(k))
            } else {
                Self::power_of(&mid, &self.v).map(|k| self.u.pow(k))
            };
            if let Some(r) = rep {
                return Some((i, j, r));
            }
        }
        None
    }

    pub fn britton_reduce_with(&self, w: &Word, order: PinchOrder) -> Word {
        let mut cur = w.reduce();
        while let Some((i, j, rep)) = self.find_pinch(&cur.0, order) {
            let mut next = cur.0[..i].to_vec();
            next.extend(rep.0);
            next.extend_from_slice(&cur.0[j + 1..]);
            cur = Word(next).reduce();
        }
        cur
    }

    pub fn britton_reduce(&self, w: &Word) -> Word {
        self.britton_reduce_with(w, PinchOrder::Leftmost)
    }
}

/// Decides whether words represent the identity.
#[derive(Debug, Clone)]
pub enum WordOracle {
    Free(Alphabet),
    FreeAbelian(Alphabet),
    Hnn(HnnPreset),
    Matrix(MatrixGroup),
    /// `⟨N⟩ ⊕ ℤᵏ`, the first letter generating `N`.
    DirectSumCyclic(Alphabet),
}

impl WordOracle {
    pub fn free(rank: usize) -> Self {
        WordOracle::Free(Alphabet::standard(rank))
    }

    pub fn free_abelian(rank: usize) -> Self {
        WordOracle::FreeAbelian(Alphabet::standard(rank))
    }

    pub fn alphabet(&self) -> &Alphabet {
        match self {
            WordOracle::Free(a) | WordOracle::FreeAbelian(a) | WordOracle::DirectSumCyclic(a) => a,
            WordOracle::Hnn(h) => h.alphabet(),
            WordOracle::Matrix(m) => m.alphabet(),
        }
    }

    pub fn rank(&self) -> usize {
        self.alphabet().len()
    }

    pub fn is_trivial(&self, w: &Word) -> bool {
        match self {
            WordOracle::Free(_) => w.reduce().is_empty(),
            WordOracle::FreeAbelian(a) | WordOracle::DirectSumCyclic(a) => {
                w.exponent_sums(a.len()).iter().all(|&e| e == 0)
            }
            WordOracle::Hnn(h) => h.britton_reduce(w).is_empty(),
            WordOracle::Matrix(m) => m.is_trivial(w),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            WordOracle::Free(_) => "free",
            WordOracle::FreeAbelian(_) => "free-abelian",
            WordOracle::Hnn(_) => "hnn",
            WordOracle::Matrix(_) => "matrix",
            WordOracle::DirectSumCyclic(_) => "direct-sum-cyclic",
        }
    }
}

pub fn is_trivial(o: &WordOracle, w: &Word) -> bool {
    o.is_trivial(w)
}

/// All freely reduced words of length `<= n` over `rank` generators, length-lexicographic.
pub fn reduced_words(rank: usize, n: usize) -> Vec<Word> {
    let mut out = vec![Word::empty()];
    let mut level = vec![Word::empty()];
    let letters: Vec<Letter> = (0..rank).flat_map(|g| [Letter::new(g, false), Letter::new(g, true)]).collect();
    for _ in 0..n {
        let mut next = Vec::new();
        for w in &level {
            for &l in &letters {
                if w.0.last() != Some(&l.inverse()) {
                    let mut v = w.0.clone();
                    v.push(l);
                    next.push(Word(v));
                }
            }
        }
        out.extend(next.iter().cloned());
        level = next;
    }
    out
}

/// Number of reduced words of length exactly `n`: `2r (2r-1)^(n-1)`.
pub fn reduced_word_count(rank: usize, n: usize) -> u128 {
    if n == 0 {
        1
    } else {
        2 * rank as u128 * (2 * rank as u128 - 1).pow(n as u32 - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinitePresentation {
    pub alphabet: Alphabet,
    pub relators: Vec<Word>,
}

impl FinitePresentation {
    pub fn new(alphabet: Alphabet, relators: Vec<Word>) -> Self {
        FinitePresentation { alphabet, relators: relators.into_iter().map(|r| r.reduce()).collect() }
    }

    pub fn parse(generators: &[&str], relators: &[&str]) -> Result<Self, GroupError> {
        let alphabet = Alphabet::from_strs(generators)?;
        let rels = relators.iter().map(|r| alphabet.parse(r)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(alphabet, rels))
    }

    pub fn free(rank: usize) -> Self {
        Self::new(Alphabet::standard(rank), vec![])
    }

    pub fn relation_matrix(&self) -> Vec<Vec<BigInt>> {
        self.relators
            .iter()
            .map(|r| r.exponent_sums(self.alphabet.len()).into_iter().map(BigInt::from).collect())
            .collect()
    }

    pub fn to_doc(&self) -> PresentationDoc {
        PresentationDoc {
            generators: self.alphabet.labels().iter().map(|c| c.to_string()).collect(),
            relators: self.relators.iter().map(|r| self.alphabet.format(r)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresentationDoc {
    pub generators: Vec<String>,
    #[serde(default)]
    pub relators: Vec<String>,
}

impl PresentationDoc {
    pub fn build(&self) -> Result<FinitePresentation, GroupError> {
        let gens: Vec<&str> = self.generators.iter().map(String::as_str).collect();
        let rels: Vec<&str> = self.relators.iter().map(String::as_str).collect();
        FinitePresentation::parse(&gens, &rels)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmithForm {
    pub matrix: Vec<Vec<BigInt>>,
    /// Nonzero invariant factors `d1 | d2 | ...`, all positive.
    pub invariants: Vec<BigInt>,
    pub columns: usize,
}

impl SmithForm {
    pub fn rank(&self) -> usize {
        self.invariants.len()
    }

    /// Free rank of `ℤ^columns / rowspace`.
    pub fn free_rank(&self) -> usize {
        self.columns - self.rank()
    }

    pub fn torsion(&self) -> Vec<BigInt> {
        self.invariants.iter().filter(|d| !d.is_one()).cloned().collect()
    }
}

/// Smith normal form over the integers.
pub fn smith_form(matrix: &[Vec<BigInt>], columns: usize) -> SmithForm {
    let mut a: Vec<Vec<BigInt>> = matrix.to_vec();
    let rows = a.len();
    let mut t = 0;
    while t < rows.min(columns) {
        // smallest nonzero entry of the remaining block
        let pivot = (t..rows)
            .flat_map(|i| (t..columns).map(move |j| (i, j)))
            .filter(|&(i, j)| !a[i][j].is_zero())
            .min_by(|&(i, j), &(k, l)| a[i][j].abs().cmp(&a[k][l].abs()));
        let Some((pi, pj)) = pivot else { break };
        a.swap(t, pi);
        for row in a.iter_mut() {
            row.swap(t, pj);
        }
        loop {
            let mut clean = true;
            for i in t + 1..rows {
                if !a[i][t].is_zero() {
                    let q = a[i][t].div_floor(&a[t][t]);
                    for j in t..columns {
                        let sub = &q * &a[t][j];
                        a[i][j] -= sub;
                    }
                    if !a[i][t].is_zero() {
                        clean = false;
                    }
                }
            }
            for j in t + 1..columns {
                if !a[t][j].is_zero() {
                    let q = a[t][j].div_floor(&a[t][t]);
                    for row in a.iter_mut().skip(t) {
                        let sub = &q * &row[t];
                        row[j] -= sub;
                    }
                    if !a[t][j].is_zero() {
                        clean = false;
                    }
                }
            }
            if clean {
                let bad = (t + 1..rows)
                    .flat_map(|i| (t + 1..columns).map(move |j| (i, j)))
                    .find(|&(i, j)| !(&a[i][j] % &a[t][t]).is_zero());
                match bad {
                    None => break,
                    Some((i, _)) => {
                        for j in t..columns {
                            let add = a[i][j].clone();
                            a[t][j] += add;
                        }
                        continue;
                    }
                }
            }
            // move the smallest nonzero entry of row t / column t to the pivot
            let mut best = (t, t);
            for i in t..rows {
                if !a[i][t].is_zero() && (a[best.0][best.1].is_zero() || a[i][t].abs() < a[best.0][best.1].abs()) {
                    best = (i, t);
                }
            }
            for j in t..columns {
                if !a[t][j].is_zero() && (a[best.0][best.1].is_zero() || a[t][j].abs() < a[best.0][best.1].abs()) {
                    best = (t, j);
                }
            }
            a.swap(t, best.0);
            for row in a.iter_mut() {
                row.swap(t, best.1);
            }
        }
        if a[t][t].is_negative() {
            for j in t..columns {
                a[t][j] = -a[t][j].clone();
            }
        }
        t += 1;
    }
    let invariants = (0..rows.min(columns)).map(|i| a[i][i].clone()).filter(|d| !d.is_zero()).collect();
    SmithForm { matrix: a, invariants, columns }
}

/// Free rank of the abelianization.
pub fn betti1(p: &FinitePresentation) -> usize {
    smith_form(&p.relation_matrix(), p.alphabet.len()).free_rank()
}

impl fmt::Display for FinitePresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let gens: Vec<String> = self.alphabet.labels().iter().map(|c| c.to_string()).collect();
        let rels: Vec<String> = self.relators.iter().map(|r| self.alphabet.format(r)).collect();
        write!(f, "<{} | {}>", gens.join(","), rels.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn w(a: &Alphabet, s: &str) -> Word {
        a.parse(s).unwrap()
    }

    #[test]
    fn parsing_and_formatting() {
        let a = Alphabet::standard(3);
        assert_eq!(a.format(&w(&a, "ab'a")), "ab'a");
        assert_eq!(a.format(&w(&a, "a^3")), "aaa");
        assert_eq!(a.format(&w(&a, "(ab)^2c^-1")), "ababc'");
        assert_eq!(a.format(&w(&a, "(ab)'")), "b'a'");
        assert_eq!(w(&a, ""), Word::empty());
        assert_eq!(w(&a, "1"), Word::empty());
        assert!(matches!(a.parse("ad"), Err(GroupError::UnknownLetter('d'))));
        assert!(a.parse("(ab").is_err());
    }

    #[test]
    fn oracle_examples() {
        let a = Alphabet::standard(2);
        assert!(WordOracle::free(2).is_trivial(&w(&a, "abb'a'")));
        assert!(!WordOracle::free(2).is_trivial(&w(&a, "aba'b'")));
        assert!(WordOracle::free_abelian(2).is_trivial(&w(&a, "aba'b'")));
        let h = HnnPreset::nonorientable_genus_three();
        let o = WordOracle::Hnn(h.clone());
        assert!(o.is_trivial(&w(h.alphabet(), "tqt'p^-2q")));
        assert!(!o.is_trivial(&w(h.alphabet(), "tpt'")));
    }

    #[test]
    fn britton_examples() {
        let h = HnnPreset::nonorientable_genus_three();
        let al = h.alphabet().clone();
        assert_eq!(h.britton_reduce(&w(&al, "pqq'p")), w(&al, "pp"));
        assert_eq!(h.britton_reduce(&w(&al, "tqt'")), w(&al, "q'pp"));
        assert_eq!(h.britton_reduce(&w(&al, "tpt'")), w(&al, "tpt'"));
        assert_eq!(h.britton_reduce(&w(&al, "t'q'ppt")), w(&al, "q"));
        assert_eq!(h.britton_reduce(&w(&al, "tq^3t'")), w(&al, "(q'pp)^3"));
    }

    #[test]
    fn hnn_rejects_powers() {
        let al = Alphabet::new(vec!['p', 'q', 't']).unwrap();
        assert!(matches!(
            HnnPreset::new(al.clone(), w(&al, "qq"), w(&al, "p")),
            Err(GroupError::ProperPower { exp: 2, .. })
        ));
        assert!(HnnPreset::new(al.clone(), w(&al, ""), w(&al, "p")).is_err());
    }

    /// Mutually inverse maps between the HNN preset and `⟨a,b,c | a²b²c²⟩`.
    #[test]
    fn hnn_preset_is_the_genus_three_surface_group() {
        let h = HnnPreset::nonorientable_genus_three();
        let hal = h.alphabet().clone();
        let sal = Alphabet::standard(3);
        let surface_rel = w(&sal, "a^2b^2c^2");
        // phi: p -> a', q -> bc, t -> c'
        let phi = [w(&sal, "a'"), w(&sal, "bc"), w(&sal, "c'")];
        // psi: a -> p', b -> qt, c -> t'
        let psi = [w(&hal, "p'"), w(&hal, "qt"), w(&hal, "t'")];
        assert!(h.britton_reduce(&surface_rel.substitute(&psi)).is_empty());
        let hnn_rel = w(&hal, "t").concat(h.u()).concat(&w(&hal, "t'")).concat(&h.v().inverse());
        assert!(h.britton_reduce(&hnn_rel).is_empty());
        let image = hnn_rel.substitute(&phi);
        assert_eq!(sal.format(&image), "c'bccaabc");
        assert!(conjugate_in_free(&image, &surface_rel));
        for g in 0..3 {
            assert_eq!(Word::gen(g).substitute(&phi).substitute(&psi), Word::gen(g));
            assert_eq!(Word::gen(g).substitute(&psi).substitute(&phi), Word::gen(g));
        }
        let surface = FinitePresentation::new(sal, vec![surface_rel]);
        let hnn = FinitePresentation::new(hal, vec![hnn_rel]);
        assert_eq!(betti1(&surface), 2);
        assert_eq!(betti1(&hnn), 2);
        let torsion = |p: &FinitePresentation| smith_form(&p.relation_matrix(), 3).torsion();
        assert_eq!(torsion(&surface), vec![BigInt::from(2)]);
        assert_eq!(torsion(&hnn), vec![BigInt::from(2)]);
    }

    #[test]
    fn primitive_root_examples() {
        let a = Alphabet::standard(2);
        assert_eq!(primitive_root(&w(&a, "abab")).unwrap(), (w(&a, "ab"), 2));
        assert_eq!(primitive_root(&w(&a, "a")).unwrap(), (w(&a, "a"), 1));
        let (r, k) = primitive_root(&w(&a, "ba^2b'ba^2b'")).unwrap();
        assert_eq!((a.format(&r), k), ("bab'".to_string(), 4));
        assert_eq!(primitive_root(&w(&a, "aa'")), Err(GroupError::TrivialWord));
    }

    #[test]
    fn conjugacy_examples() {
        let a = Alphabet::standard(2);
        assert!(conjugate_in_free(&w(&a, "ab"), &w(&a, "ba")));
        assert!(!conjugate_in_free(&w(&a, "a"), &w(&a, "b")));
        assert!(conjugate_in_free(&w(&a, "aba'"), &w(&a, "b")));
        let u = w(&a, "aab");
        let target = w(&a, "b'abab");
        let g = conjugator_in_free(&u, &target).unwrap();
        assert_eq!(g.concat(&u).concat(&g.inverse()).reduce(), target.reduce());
    }

    #[test]
    fn betti_examples() {
        let p = FinitePresentation::parse(&["a", "b", "c"], &["a^2b^2c^2"]).unwrap();
        assert_eq!(betti1(&p), 2);
        assert_eq!(betti1(&FinitePresentation::free(2)), 2);
        let p = FinitePresentation::parse(&["x", "y", "z"], &["(xyx'y')z(xyx'y')'z'"]).unwrap();
        assert_eq!(betti1(&p), 3);
    }

    #[test]
    fn smith_invariants_divide() {
        let m: Vec<Vec<BigInt>> = [[2, 4, 4], [-6, 6, 12], [10, -4, -16]]
            .iter()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        let s = smith_form(&m, 3);
        assert_eq!(s.invariants, [2, 6, 12].map(BigInt::from).to_vec());
    }

    #[test]
    fn ball_sizes() {
        for n in 0..5 {
            let ws = reduced_words(2, n);
            let expect: u128 = (0..=n).map(|k| reduced_word_count(2, k)).sum();
            assert_eq!(ws.len() as u128, expect);
            assert!(ws.windows(2).all(|p| p[0] < p[1]));
            assert!(ws.iter().all(Word::is_reduced));
        }
    }

    /// Rank over Q by Gaussian elimination.
    fn rational_rank(m: &[Vec<BigInt>], cols: usize) -> usize {
        let mut a: Vec<Vec<BigRational>> =
            m.iter().map(|r| r.iter().map(|x| BigRational::from_integer(x.clone())).collect()).collect();
        let mut rank = 0;
        for c in 0..cols {
            let Some(p) = (rank..a.len()).find(|&i| !a[i][c].is_zero()) else { continue };
            a.swap(rank, p);
            for i in 0..a.len() {
                if i != rank && !a[i][c].is_zero() {
                    let f = &a[i][c] / &a[rank][c];
                    for j in 0..cols {
                        let sub = &f * &a[rank][j];
                        a[i][j] -= sub;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn word_strategy(rank: usize, max: usize) -> impl Strategy<Value = Word> {
            prop::collection::vec((0..rank, any::<bool>()), 0..=max)
                .prop_map(|v| Word(v.into_iter().map(|(g, i)| Letter::new(g, i)).collect()))
        }

        proptest! {
            #[test]
            fn britton_order_independent(w in word_strategy(3, 10)) {
                let h = HnnPreset::nonorientable_genus_three();
                let l = h.britton_reduce_with(&w, PinchOrder::Leftmost);
                let r = h.britton_reduce_with(&w, PinchOrder::Rightmost);
                prop_assert_eq!(l.is_empty(), r.is_empty());
            }

            #[test]
            fn britton_detects_conjugated_relators(g in word_strategy(3, 4), k in -2i64..=2) {
                let h = HnnPreset::nonorientable_genus_three();
                let al = h.alphabet();
                let rel = al.parse("tqt'p^-2q").unwrap().pow(k);
                let w = g.concat(&rel).concat(&g.inverse());
                prop_assert!(h.britton_reduce(&w).is_empty());
            }

            #[test]
            fn primitive_root_reconstructs(w in word_strategy(2, 8), k in 1i64..4) {
                let w = w.pow(k);
                prop_assume!(!w.is_empty());
                let (r, e) = primitive_root(&w).unwrap();
                prop_assert_eq!(r.pow(e as i64), w.clone());
                prop_assert_eq!(primitive_root(&r).unwrap().1, 1);
                prop_assert_eq!(e as i64 % k, 0);
            }

            #[test]
            fn conjugates_are_detected(u in word_strategy(2, 6), g in word_strategy(2, 4)) {
                let w = g.concat(&u).concat(&g.inverse());
                prop_assert!(conjugate_in_free(&u, &w));
                let c = conjugator_in_free(&u, &w).unwrap();
                prop_assert_eq!(c.concat(&u).concat(&c.inverse()).reduce(), w.reduce());
            }

            #[test]
            fn betti_matches_rational_rank(
                rels in prop::collection::vec(word_strategy(3, 8), 0..4)
            ) {
                let p = FinitePresentation::new(Alphabet::standard(3), rels);
                let oracle = 3 - rational_rank(&p.relation_matrix(), 3);
                prop_assert_eq!(betti1(&p), oracle);
                let s = smith_form(&p.relation_matrix(), 3);
                prop_assert!(s.invariants.windows(2).all(|d| (&d[1] % &d[0]).is_zero()));
            }
        }
    }
}
