//! Lexicographically ordered groups `Q^n`.
//!
//! A [`LexValue`] is a vector of exact rationals compared with the leftmost
//! coordinate dominant. The rank of a value is fixed by the context that
//! produced it; mixing ranks is an error for the fallible entry points and a
//! panic for the operator impls.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Exact rational scalar in canonical form.
pub type Rat = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrdError {
    #[error("rank mismatch: {left} vs {right}")]
    RankMismatch { left: usize, right: usize },
    #[error("projection rank {k} out of range 1..={rank}")]
    ProjectionOutOfRange { k: usize, rank: usize },
    #[error("rank must be positive")]
    ZeroRank,
    #[error("cannot parse rational {0:?}")]
    BadRational(String),
}

/// Parses `"3"`, `"-4/3"` into a canonical rational.
pub fn parse_rat(s: &str) -> Result<Rat, OrdError> {
    let s = s.trim();
    let bad = || OrdError::BadRational(s.to_string());
    match s.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Rat::new(n, d))
        }
        None => Ok(Rat::from_integer(BigInt::from_str(s).map_err(|_| bad())?)),
    }
}

pub fn format_rat(q: &Rat) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Element of `Q^n` with the lexicographic order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LexValue {
    coords: Vec<Rat>,
}

impl LexValue {
    pub fn new(coords: Vec<Rat>) -> Result<Self, OrdError> {
        if coords.is_empty() {
            return Err(OrdError::ZeroRank);
        }
        Ok(LexValue { coords })
    }

    pub fn zero(rank: usize) -> Self {
        assert!(rank > 0, "rank must be positive");
        LexValue { coords: vec![Rat::zero(); rank] }
    }

    /// Builds a value from integer coordinates.
    pub fn ints(coords: &[i64]) -> Self {
        assert!(!coords.is_empty(), "rank must be positive");
        LexValue { coords: coords.iter().map(|&c| int(c)).collect() }
    }

    /// Unit vector `e_i` (0-based, leftmost dominant).
    pub fn unit(rank: usize, i: usize) -> Self {
        let mut v = Self::zero(rank);
        v.coords[i] = Rat::one();
        v
    }

    pub fn rank(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Rat] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }

    pub fn is_positive(&self) -> bool {
        self.sign() == Ordering::Greater
    }

    pub fn is_negative(&self) -> bool {
        self.sign() == Ordering::Less
    }

    /// Sign of the leading nonzero coordinate.
    pub fn sign(&self) -> Ordering {
        for c in &self.coords {
            if c.is_positive() {
                return Ordering::Greater;
            }
            if c.is_negative() {
                return Ordering::Less;
            }
        }
        Ordering::Equal
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, OrdError> {
        same_rank(self, other)?;
        Ok(LexValue {
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, OrdError> {
        self.checked_add(&-other)
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }

    /// True when every coordinate is an integer.
    pub fn is_integral(&self) -> bool {
        self.coords.iter().all(|c| c.is_integer())
    }
}

fn same_rank(a: &LexValue, b: &LexValue) -> Result<(), OrdError> {
    if a.rank() != b.rank() {
        Err(OrdError::RankMismatch { left: a.rank(), right: b.rank() })
    } else {
        Ok(())
    }
}

/// Lexicographic comparison, leftmost coordinate dominant.
pub fn lex_compare(a: &LexValue, b: &LexValue) -> Result<Ordering, OrdError> {
    same_rank(a, b)?;
    for (x, y) in a.coords.iter().zip(&b.coords) {
        match x.cmp(y) {
            Ordering::Equal => continue,
            o => return Ok(o),
        }
    }
    Ok(Ordering::Equal)
}

/// Smallest `p` such that `a` lies in the convex subgroup `Q^p`; zero only for `a = 0`.
pub fn magnitude(a: &LexValue) -> usize {
    let leading_zeros = a.coords.iter().take_while(|c| c.is_zero()).count();
    a.rank() - leading_zeros
}

/// Lies in the maximal proper convex subgroup.
pub fn is_infinitesimal(a: &LexValue) -> bool {
    magnitude(a) < a.rank()
}

pub fn scale(a: &LexValue, q: &Rat) -> LexValue {
    LexValue { coords: a.coords.iter().map(|c| c * q).collect() }
}

pub fn half(a: &LexValue) -> LexValue {
    scale(a, &rat(1, 2))
}

/// Image in `Q^n / Q^(n-k)`: the leading `k` coordinates.
pub fn project_top(a: &LexValue, k: usize) -> Result<LexValue, OrdError> {
    if k == 0 || k > a.rank() {
        return Err(OrdError::ProjectionOutOfRange { k, rank: a.rank() });
    }
    Ok(LexValue { coords: a.coords[..k].to_vec() })
}

impl PartialOrd for LexValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// # Panics
///
/// Panics when the ranks differ. Use [`lex_compare`] for untrusted input.
impl Ord for LexValue {
    fn cmp(&self, other: &Self) -> Ordering {
        lex_compare(self, other).expect("LexValue rank mismatch")
    }
}

impl Add for &LexValue {
    type Output = LexValue;
    fn add(self, rhs: &LexValue) -> LexValue {
        self.checked_add(rhs).expect("LexValue rank mismatch")
    }
}

impl Add for LexValue {
    type Output = LexValue;
    fn add(self, rhs: LexValue) -> LexValue {
        &self + &rhs
    }
}

impl AddAssign<&LexValue> for LexValue {
    fn add_assign(&mut self, rhs: &LexValue) {
        same_rank(self, rhs).expect("LexValue rank mismatch");
        for (a, b) in self.coords.iter_mut().zip(&rhs.coords) {
            *a += b;
        }
    }
}

impl Sub for &LexValue {
    type Output = LexValue;
    fn sub(self, rhs: &LexValue) -> LexValue {
        self.checked_sub(rhs).expect("LexValue rank mismatch")
    }
}

impl Sub for LexValue {
    type Output = LexValue;
    fn sub(self, rhs: LexValue) -> LexValue {
        &self - &rhs
    }
}

impl Neg for &LexValue {
    type Output = LexValue;
    fn neg(self) -> LexValue {
        LexValue { coords: self.coords.iter().map(|c| -c).collect() }
    }
}

impl Neg for LexValue {
    type Output = LexValue;
    fn neg(self) -> LexValue {
        -&self
    }
}

impl fmt::Display for LexValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", format_rat(c))?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for LexValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for LexValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let strings: Vec<String> = self.coords.iter().map(format_rat).collect();
        strings.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LexValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let strings = Vec::<String>::deserialize(d)?;
        let coords = strings
            .iter()
            .map(|s| parse_rat(s))
            .collect::<Result<Vec<_>, _>>()
            .map_err(serde::de::Error::custom)?;
        LexValue::new(coords).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lv(c: &[i64]) -> LexValue {
        LexValue::ints(c)
    }

    #[test]
    fn compare_examples() {
        assert_eq!(lex_compare(&lv(&[0, 5]), &lv(&[1, 0])).unwrap(), Ordering::Less);
        assert_eq!(lex_compare(&lv(&[3, -7]), &lv(&[3, -7])).unwrap(), Ordering::Equal);
        assert_eq!(lex_compare(&lv(&[-1, 100]), &lv(&[0, 0])).unwrap(), Ordering::Less);
        assert_eq!(
            lex_compare(&lv(&[1]), &lv(&[1, 0])),
            Err(OrdError::RankMismatch { left: 1, right: 2 })
        );
    }

    #[test]
    fn magnitude_and_infinitesimals() {
        assert_eq!(magnitude(&lv(&[0, 0])), 0);
        assert_eq!(magnitude(&lv(&[0, 3])), 1);
        assert_eq!(magnitude(&lv(&[2, 3])), 2);
        assert!(is_infinitesimal(&lv(&[0, 7])));
        assert!(!is_infinitesimal(&lv(&[1, 0])));
        assert!(is_infinitesimal(&lv(&[0])));
    }

    #[test]
    fn scale_and_project() {
        assert_eq!(scale(&lv(&[2, -4]), &rat(1, 2)), lv(&[1, -2]));
        assert_eq!(scale(&lv(&[5, 6]), &int(1)), lv(&[5, 6]));
        assert_eq!(scale(&lv(&[0, 3]), &int(-1)), lv(&[0, -3]));
        assert_eq!(project_top(&lv(&[2, 5]), 1).unwrap(), lv(&[2]));
        assert_eq!(project_top(&lv(&[0, 5]), 1).unwrap(), lv(&[0]));
        assert_eq!(project_top(&lv(&[0, 5]), 2).unwrap(), lv(&[0, 5]));
        assert!(project_top(&lv(&[0, 5]), 3).is_err());
        assert!(project_top(&lv(&[0, 5]), 0).is_err());
    }

    #[test]
    fn serde_format() {
        let v = LexValue::new(vec![int(2), rat(-4, 3)]).unwrap();
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"["2","-4/3"]"#);
        let back: LexValue = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        assert!(serde_json::from_str::<LexValue>(r#"["1/0"]"#).is_err());
        assert!(serde_json::from_str::<LexValue>(r#"[]"#).is_err());
        // canonical form on parse
        let w: LexValue = serde_json::from_str(r#"["6/4"]"#).unwrap();
        assert_eq!(w, LexValue::new(vec![rat(3, 2)]).unwrap());
    }

    fn arb_val(rank: usize) -> impl Strategy<Value = LexValue> {
        proptest::collection::vec((-6i64..6, 1i64..4), rank)
            .prop_map(|cs| LexValue::new(cs.into_iter().map(|(n, d)| rat(n, d)).collect()).unwrap())
    }

    proptest! {
        #[test]
        fn total_and_transitive((a, b, c) in (arb_val(3), arb_val(3), arb_val(3))) {
            let ab = lex_compare(&a, &b).unwrap();
            prop_assert_eq!(ab.reverse(), lex_compare(&b, &a).unwrap());
            if a <= b && b <= c {
                prop_assert!(a <= c);
            }
        }

        #[test]
        fn translation_invariant((a, b, c) in (arb_val(2), arb_val(2), arb_val(2))) {
            prop_assert_eq!(lex_compare(&a, &b).unwrap(), lex_compare(&(&a + &c), &(&b + &c)).unwrap());
        }

        #[test]
        fn convexity((x, y) in (arb_val(3), arb_val(3))) {
            let zero = LexValue::zero(3);
            if zero <= x && x <= y && is_infinitesimal(&y) {
                prop_assert!(is_infinitesimal(&x));
            }
        }

        #[test]
        fn project_top_monotone((a, b) in (arb_val(3), arb_val(3)), k in 1usize..=3) {
            if a <= b {
                prop_assert!(project_top(&a, k).unwrap() <= project_top(&b, k).unwrap());
            }
        }

        #[test]
        fn halves_sum_exactly(a in arb_val(3)) {
            prop_assert_eq!(&half(&a) + &half(&a), a);
        }
    }
}
